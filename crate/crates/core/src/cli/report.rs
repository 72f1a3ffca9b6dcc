//! Merging result directories and overlaying the bound curves.
//!
//! Every probability point `(ε, θ, log p̂)` is placed against
//!
//! * `θ < 1`: `log lower = −c4·log²((1−θ)/3)·log²ε`, `log upper = −θ²·r(ε)/c3`,
//! * `θ = 1`: `log lower = −c4·log⁴ε`, `log upper = log c1 − r(ε)/c2`,
//!
//! with `r(ε) = log²ε / log²|log ε|` and `c1 = 1`. Each constant is a
//! one-parameter least-squares fit in the log domain, clamped so that the
//! lower curve stays below every point and the upper curve above every
//! unbiased estimate. Importance-sampling points are lower bounds and only
//! constrain `c4`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::output::*;
use crate::analytic::bound_terms::{lower_measure_rate, lower_rate, upper_rate};
use crate::error::{Error, Result};

pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_LONG_CSV: &str = "report_long.csv";
pub const REPORT_JSON: &str = "report.json";

/// One merged point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub source: String,
    pub kind: String,
    pub point: ReportPoint,
    pub log_lower: Option<f64>,
    pub log_upper: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantFit {
    /// `None` when underdetermined or inadmissible.
    pub value: Option<f64>,
    /// Value used for the curves (`1` when the fit was skipped).
    pub used: f64,
    pub least_squares: Option<f64>,
    /// The curve constraint moved the fit away from the least-squares value.
    pub constraint_active: bool,
    pub n_points: usize,
    pub distinct_epsilon: usize,
    pub underdetermined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub manifests: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub c1: f64,
    pub c2: ConstantFit,
    pub c3: ConstantFit,
    pub c4: ConstantFit,
    pub warnings: Vec<String>,
}

fn find_manifests(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    if dir.join(MANIFEST).is_file() {
        out.push(dir.to_path_buf());
    }
    for p in entries {
        if p.is_dir() {
            find_manifests(&p, out)?;
        }
    }
    Ok(())
}

/// A fit of `log p ≈ −k·rate` for one constant.
struct Fitter {
    /// (rate, log p, ε)
    pts: Vec<(f64, f64, f64)>,
}

impl Fitter {
    fn new() -> Self {
        Fitter { pts: Vec::new() }
    }

    fn distinct_eps(&self) -> usize {
        let mut e: Vec<u64> = self.pts.iter().map(|p| p.2.to_bits()).collect();
        e.sort_unstable();
        e.dedup();
        e.len()
    }

    /// Least-squares `k` through the origin, then clamped by `bound` (the
    /// per-point value at which the curve passes through the point) using
    /// `pick` (max for a floor, min for a ceiling).
    fn fit(&self, pick: fn(f64, f64) -> f64) -> (Option<f64>, Option<f64>, bool) {
        let sxx: f64 = self.pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = self.pts.iter().map(|p| p.0 * p.1).sum();
        if self.pts.is_empty() || sxx == 0.0 {
            return (None, None, false);
        }
        let ls = -sxy / sxx;
        let k = self.pts.iter().map(|p| -p.1 / p.0).fold(ls, pick);
        (Some(k), Some(ls), k != ls)
    }
}

fn constant(f: &Fitter, floor: bool, invert: bool) -> ConstantFit {
    let distinct = f.distinct_eps();
    let underdetermined = distinct < 2;
    let (k, ls, active) = if underdetermined {
        (None, None, false)
    } else {
        f.fit(if floor { f64::max } else { f64::min })
    };
    let conv = |k: Option<f64>| k.filter(|&k| k > 0.0 && k.is_finite()).map(|k| if invert { 1.0 / k } else { k });
    let value = conv(k);
    ConstantFit {
        value,
        used: value.unwrap_or(1.0),
        least_squares: conv(ls),
        constraint_active: active,
        n_points: f.pts.len(),
        distinct_epsilon: distinct,
        underdetermined,
    }
}

fn in_bound_domain(p: &ReportPoint) -> bool {
    p.epsilon > 0.0 && p.epsilon < (-1.0f64).exp() && (0.0..=1.0).contains(&p.theta)
}

fn log_curves(p: &ReportPoint, c1: f64, c2: f64, c3: f64, c4: f64) -> (Option<f64>, Option<f64>) {
    if !in_bound_domain(p) {
        return (None, None);
    }
    let (e, t) = (p.epsilon, p.theta);
    if t == 1.0 {
        (Some(-c4 * lower_rate(e)), Some(c1.ln() - upper_rate(e) / c2))
    } else {
        (Some(-c4 * lower_measure_rate(e, t)), Some(-upper_rate(e) * t * t / c3))
    }
}

/// Merges every manifest under `dir` into `report.csv`, `report_long.csv`
/// and `report.json` in `dir`.
pub fn report(dir: &Path) -> Result<ReportSummary> {
    if !dir.is_dir() {
        return Err(Error::config("results_dir", format!("{} is not a directory", dir.display())));
    }
    let mut dirs = Vec::new();
    find_manifests(dir, &mut dirs)?;
    let mut warnings = Vec::new();
    if dirs.is_empty() {
        warnings.push(format!("no manifests found under {}", dir.display()));
    }

    let mut conflicts = Vec::new();
    let mut version: Option<(String, String)> = None;
    let mut seen: BTreeMap<(String, String, String, u64, u64), (String, String)> = BTreeMap::new();
    let mut rows = Vec::new();
    let mut names = Vec::new();
    for d in &dirs {
        let source = d.strip_prefix(dir).unwrap_or(d).display().to_string();
        let source = if source.is_empty() { ".".to_string() } else { source };
        let m = ResultManifest::read(d)?;
        m.verify(d)?;
        match &version {
            None => version = Some((m.version.clone(), source.clone())),
            Some((v, s)) if *v != m.version => {
                conflicts.push(format!("version {v} ({s}) vs {} ({source})", m.version));
            }
            _ => {}
        }
        let path = d.join(SUMMARY_JSON);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let summary: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))?;
        let points: Vec<ReportPoint> = serde_json::from_value(summary["points"].clone())
            .map_err(|e| Error::Serde(format!("{}: {e}", path.display())))?;
        for p in points {
            let key = (m.kind.clone(), p.role.clone(), p.tag.clone(), p.epsilon.to_bits(), p.theta.to_bits());
            match seen.get(&key) {
                Some((h, s)) if *h != m.config_hash => conflicts.push(format!(
                    "{} {} epsilon={} theta={} {}: config {} ({s}) vs {} ({source})",
                    m.kind, p.role, p.epsilon, p.theta, p.tag, &h[..12], &m.config_hash[..12]
                )),
                Some(_) => {}
                None => {
                    seen.insert(key, (m.config_hash.clone(), source.clone()));
                    rows.push(ReportRow {
                        source: source.clone(),
                        kind: m.kind.clone(),
                        point: p,
                        log_lower: None,
                        log_upper: None,
                    });
                }
            }
        }
        names.push(source);
    }
    if !conflicts.is_empty() {
        return Err(Error::config(
            "manifests",
            format!("refusing to merge inconsistent results:\n  {}", conflicts.join("\n  ")),
        ));
    }
    rows.sort_by(|a, b| {
        (a.point.epsilon.total_cmp(&b.point.epsilon).reverse())
            .then(a.point.theta.total_cmp(&b.point.theta))
            .then_with(|| a.kind.cmp(&b.kind))
            .then_with(|| a.point.tag.cmp(&b.point.tag))
            .then_with(|| a.source.cmp(&b.source))
    });

    let (mut f2, mut f3, mut f4) = (Fitter::new(), Fitter::new(), Fitter::new());
    let c1: f64 = 1.0;
    let mut outside = 0;
    for r in &rows {
        let p = &r.point;
        let Some(lp) = p.log_p else { continue };
        if !in_bound_domain(p) {
            outside += 1;
            continue;
        }
        let unbiased = p.role == "estimate";
        if p.theta == 1.0 {
            f4.pts.push((lower_rate(p.epsilon), lp, p.epsilon));
            if unbiased {
                f2.pts.push((upper_rate(p.epsilon), lp - c1.ln(), p.epsilon));
            }
        } else {
            f4.pts.push((lower_measure_rate(p.epsilon, p.theta), lp, p.epsilon));
            if unbiased && p.theta > 0.0 {
                f3.pts.push((upper_rate(p.epsilon) * p.theta * p.theta, lp, p.epsilon));
            }
        }
    }
    if outside > 0 {
        warnings.push(format!("{outside} point(s) outside 0 < epsilon < 1/e excluded from the fits"));
    }
    let c2 = constant(&f2, false, true);
    let c3 = constant(&f3, false, true);
    let c4 = constant(&f4, true, false);
    for (name, c) in [("c2", &c2), ("c3", &c3), ("c4", &c4)] {
        if c.n_points > 0 && c.underdetermined {
            warnings.push(format!("{name} fit skipped: underdetermined ({} distinct epsilon)", c.distinct_epsilon));
        } else if c.n_points > 0 && c.value.is_none() {
            warnings.push(format!("{name} fit inadmissible: no positive constant fits the data"));
        }
    }
    for r in &mut rows {
        (r.log_lower, r.log_upper) = log_curves(&r.point, c1, c2.used, c3.used, c4.used);
    }

    let mut wide = CsvTable::new(&[
        "epsilon",
        "theta",
        "log_p",
        "log_stderr",
        "log_lower_curve",
        "log_upper_curve",
        "kind",
        "role",
        "tag",
        "source",
    ]);
    let mut long = CsvTable::new(&["epsilon", "theta", "series", "log_value", "log_stderr", "source"]);
    for r in &rows {
        let p = &r.point;
        wide.push(vec![
            p.epsilon.into(),
            p.theta.into(),
            p.log_p.into(),
            p.log_stderr.into(),
            r.log_lower.into(),
            r.log_upper.into(),
            r.kind.as_str().into(),
            p.role.as_str().into(),
            p.tag.as_str().into(),
            r.source.as_str().into(),
        ]);
        let series = format!("{}:{}", r.kind, p.role);
        for (s, v, se) in [
            (series.as_str(), p.log_p, p.log_stderr),
            ("lower_curve", r.log_lower, None),
            ("upper_curve", r.log_upper, None),
        ] {
            long.push(vec![
                p.epsilon.into(),
                p.theta.into(),
                s.into(),
                v.into(),
                se.into(),
                r.source.as_str().into(),
            ]);
        }
    }
    let summary = ReportSummary {
        manifests: names,
        rows,
        c1,
        c2,
        c3,
        c4,
        warnings,
    };
    atomic_write(dir, REPORT_CSV, wide.render().as_bytes())?;
    atomic_write(dir, REPORT_LONG_CSV, long.render().as_bytes())?;
    let v = json!({
        "version": VERSION,
        "manifests": summary.manifests,
        "c1": c1,
        "c2": summary.c2,
        "c3": summary.c3,
        "c4": summary.c4,
        "warnings": summary.warnings,
        "rows": summary.rows.len(),
    });
    atomic_write(dir, REPORT_JSON, &to_json_bytes(&v)?)?;
    Ok(summary)
}
