//! Experiment configuration files.
//!
//! A configuration is a TOML document with four top-level keys and a
//! `[params]` table whose schema depends on `kind`:
//!
//! ```toml
//! kind = "naive"
//! seed = 7
//! workers = 4            # optional; SAUSAGE_WORKERS overrides
//! output_dir = "out/naive"
//!
//! [params]
//! epsilon = [0.1, 0.05]
//! theta = [0.5]
//! n = 10000
//! ```
//!
//! Unknown keys anywhere are rejected with the offending field named.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::MartingaleConfig;

fn default_one() -> f64 {
    1.0
}
fn default_k_tune() -> Vec<f64> {
    vec![1.0]
}
fn default_x_cutoff() -> f64 {
    12.0
}
fn default_wos_xs() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 1.0, 2.0]
}
fn default_wos_ys() -> Vec<f64> {
    vec![0.1, 0.25, 0.5, 0.75, 0.9]
}
fn default_alpha_spacing() -> f64 {
    0.05
}
fn default_alpha_max() -> f64 {
    6.0
}
fn default_q1() -> [f64; 2] {
    [-0.5, 0.0]
}
fn default_q2() -> [f64; 2] {
    [0.5, 0.0]
}
fn default_q3() -> [f64; 2] {
    [0.0, 0.5]
}
fn default_dt_coarse() -> f64 {
    1.0 / 1024.0
}
fn default_checkpoints() -> usize {
    50
}
fn default_mart_walks() -> u64 {
    1000
}
fn default_calibration_walks() -> u64 {
    20_000
}
fn is_zero(x: &f64) -> bool {
    *x == 0.0
}
fn is_false(x: &bool) -> bool {
    !*x
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NaiveParams {
    pub epsilon: Vec<f64>,
    pub theta: Vec<f64>,
    pub n: u64,
    /// Defaults to `(ε/4)²` per radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub refine_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorridorParams {
    pub epsilon: Vec<f64>,
    pub theta: Vec<f64>,
    pub n: u64,
    /// Defaults to `|log((1−θ)/3)|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default = "default_k_tune")]
    pub k_tune: Vec<f64>,
    /// Defaults to `(ε/4)²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_fine: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WosCheckParams {
    pub epsilon: f64,
    pub n_walks: u64,
    /// Grid spacing of the oracle; defaults to ε/8.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default = "default_x_cutoff")]
    pub x_cutoff: f64,
    #[serde(default = "default_wos_xs")]
    pub xs: Vec<f64>,
    #[serde(default = "default_wos_ys")]
    pub ys: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Eq9Params {
    pub epsilon: f64,
    pub y: Vec<f64>,
    pub dy: f64,
    pub n_walks: u64,
    #[serde(default = "default_alpha_spacing")]
    pub alpha_spacing: f64,
    #[serde(default = "default_alpha_max")]
    pub alpha_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma4Params {
    pub epsilon: Vec<f64>,
    pub n_walks: u64,
    /// Also fit `c7` from `g(0)` and `g(1/2)`.
    #[serde(default, skip_serializing_if = "is_false")]
    pub c7: bool,
    #[serde(default = "default_alpha_spacing")]
    pub alpha_spacing: f64,
    #[serde(default = "default_alpha_max")]
    pub alpha_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalTimeParams {
    pub n_paths: u64,
    pub dt: f64,
    pub bin_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeParams {
    pub delta: Vec<f64>,
    pub n: u64,
    #[serde(default = "default_q1")]
    pub q1: [f64; 2],
    #[serde(default = "default_q2")]
    pub q2: [f64; 2],
    #[serde(default = "default_q3")]
    pub q3: [f64; 2],
    #[serde(default = "default_dt_coarse")]
    pub dt_coarse: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripParams {
    pub epsilon: f64,
    pub theta: Vec<f64>,
    pub n: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartingaleParams {
    pub epsilon: f64,
    pub n_paths: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_checkpoints")]
    pub n_checkpoints: usize,
    /// Defaults to ε.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_spacing: Option<f64>,
    #[serde(default = "default_mart_walks")]
    pub n_walks: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default = "default_calibration_walks")]
    pub calibration_walks: u64,
}

impl MartingaleParams {
    pub fn to_config(&self) -> MartingaleConfig {
        let mut c = MartingaleConfig::new(self.epsilon, self.n_paths);
        if let Some(dt) = self.dt {
            c.dt = dt;
        }
        c.n_checkpoints = self.n_checkpoints;
        c.alpha_spacing = self.alpha_spacing.unwrap_or(self.epsilon);
        c.n_walks = self.n_walks;
        c.c0 = self.c0;
        c.calibration_walks = self.calibration_walks;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrwParams {
    pub n_sites: Vec<u32>,
    pub n_walks: u64,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsReportParams {
    pub epsilon: Vec<f64>,
    pub theta: Vec<f64>,
    #[serde(default = "default_one")]
    pub c1: f64,
    #[serde(default = "default_one")]
    pub c2: f64,
    #[serde(default = "default_one")]
    pub c3: f64,
    #[serde(default = "default_one")]
    pub c4: f64,
}

/// The experiment and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Naive(NaiveParams),
    Corridor(CorridorParams),
    WosCheck(WosCheckParams),
    Eq9(Eq9Params),
    Lemma4(Lemma4Params),
    LocalTime(LocalTimeParams),
    Bridge(BridgeParams),
    StripCond(StripParams),
    Martingale(MartingaleParams),
    Srw(SrwParams),
    BoundsReport(BoundsReportParams),
}

pub const KINDS: [&str; 11] = [
    "naive",
    "corridor",
    "wos-check",
    "eq9",
    "lemma4",
    "local-time",
    "bridge",
    "strip-cond",
    "martingale",
    "srw",
    "bounds-report",
];

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Naive(_) => "naive",
            Experiment::Corridor(_) => "corridor",
            Experiment::WosCheck(_) => "wos-check",
            Experiment::Eq9(_) => "eq9",
            Experiment::Lemma4(_) => "lemma4",
            Experiment::LocalTime(_) => "local-time",
            Experiment::Bridge(_) => "bridge",
            Experiment::StripCond(_) => "strip-cond",
            Experiment::Martingale(_) => "martingale",
            Experiment::Srw(_) => "srw",
            Experiment::BoundsReport(_) => "bounds-report",
        }
    }

    fn params_value(&self) -> std::result::Result<toml::Table, toml::ser::Error> {
        fn table<T: Serialize>(p: &T) -> std::result::Result<toml::Table, toml::ser::Error> {
            toml::Table::try_from(p)
        }
        match self {
            Experiment::Naive(p) => table(p),
            Experiment::Corridor(p) => table(p),
            Experiment::WosCheck(p) => table(p),
            Experiment::Eq9(p) => table(p),
            Experiment::Lemma4(p) => table(p),
            Experiment::LocalTime(p) => table(p),
            Experiment::Bridge(p) => table(p),
            Experiment::StripCond(p) => table(p),
            Experiment::Martingale(p) => table(p),
            Experiment::Srw(p) => table(p),
            Experiment::BoundsReport(p) => table(p),
        }
    }

    fn from_table(kind: &str, params: toml::Table) -> Result<Self> {
        fn parse<T: serde::de::DeserializeOwned>(t: toml::Table) -> Result<T> {
            t.try_into().map_err(|e: toml::de::Error| {
                let msg = e.message().to_string();
                let field = backticked(&msg).map_or_else(|| "params".to_string(), |f| format!("params.{f}"));
                Error::config(field, msg)
            })
        }
        Ok(match kind {
            "naive" => Experiment::Naive(parse(params)?),
            "corridor" => Experiment::Corridor(parse(params)?),
            "wos-check" => Experiment::WosCheck(parse(params)?),
            "eq9" => Experiment::Eq9(parse(params)?),
            "lemma4" => Experiment::Lemma4(parse(params)?),
            "local-time" => Experiment::LocalTime(parse(params)?),
            "bridge" => Experiment::Bridge(parse(params)?),
            "strip-cond" => Experiment::StripCond(parse(params)?),
            "martingale" => Experiment::Martingale(parse(params)?),
            "srw" => Experiment::Srw(parse(params)?),
            "bounds-report" => Experiment::BoundsReport(parse(params)?),
            other => {
                return Err(Error::config(
                    "kind",
                    format!("unknown experiment kind `{other}`; expected one of {}", KINDS.join(", ")),
                ))
            }
        })
    }
}

fn backticked(msg: &str) -> Option<&str> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(&msg[start..start + len])
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: String,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    workers: Option<usize>,
    output_dir: PathBuf,
    #[serde(default)]
    params: toml::Table,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub workers: Option<usize>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            Error::config(backticked(&msg).unwrap_or("config").to_string(), msg)
        })?;
        let experiment = Experiment::from_table(&raw.kind, raw.params)?;
        let cfg = ExperimentConfig {
            experiment,
            seed: raw.seed,
            workers: raw.workers,
            output_dir: raw.output_dir,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let raw = RawConfig {
            kind: self.experiment.kind().to_string(),
            seed: self.seed,
            workers: self.workers,
            output_dir: self.output_dir.clone(),
            params: self.experiment.params_value().expect("params serialize to TOML"),
        };
        toml::to_string(&raw).expect("config serializes to TOML")
    }

    /// The parts that determine results: kind, seed and parameters.
    /// Workers and output location are excluded.
    pub fn canonical_toml(&self) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            kind: &'a str,
            seed: u64,
            params: toml::Table,
        }
        toml::to_string(&Canonical {
            kind: self.experiment.kind(),
            seed: self.seed,
            params: self.experiment.params_value().expect("params serialize to TOML"),
        })
        .expect("config serializes to TOML")
    }

    /// JSON echo of [`canonical_toml`](Self::canonical_toml).
    pub fn echo(&self) -> serde_json::Value {
        let params = self.experiment.params_value().expect("params serialize to TOML");
        serde_json::json!({
            "kind": self.experiment.kind(),
            "seed": self.seed,
            "params": serde_json::to_value(params).expect("TOML values are JSON values"),
        })
    }

    /// Content hash in the style of a git blob, over the canonical TOML, using SHA-256.
    pub fn content_hash(&self) -> String {
        super::output::blob_hash(self.canonical_toml().as_bytes())
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        validate_experiment(&self.experiment)
    }
}

fn check(ok: bool, field: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(format!("params.{field}"), reason))
    }
}

fn all(xs: &[f64], field: &str, reason: &str, pred: impl Fn(f64) -> bool) -> Result<()> {
    check(!xs.is_empty(), field, "must not be empty")?;
    check(xs.iter().all(|&x| x.is_finite() && pred(x)), field, reason)
}

fn check_dt(dt: Option<f64>, field: &str) -> Result<()> {
    if let Some(dt) = dt {
        check(dt.is_finite() && dt > 0.0 && dt <= 1.0, field, "must lie in (0, 1]")?;
    }
    Ok(())
}

/// Checks every parameter against the preconditions of the operation it feeds.
pub fn validate_experiment(e: &Experiment) -> Result<()> {
    match e {
        Experiment::Naive(p) => {
            all(&p.epsilon, "epsilon", "must be positive", |x| x > 0.0)?;
            all(&p.theta, "theta", "must lie in [0, 1]", |x| (0.0..=1.0).contains(&x))?;
            check(p.n >= 1, "n", "must be at least 1")?;
            check_dt(p.dt, "dt")?;
            check(p.refine_margin.is_finite() && p.refine_margin >= 0.0, "refine_margin", "must be nonnegative")
        }
        Experiment::Corridor(p) => {
            all(&p.epsilon, "epsilon", "must lie in (0, 1/2)", |x| x > 0.0 && x < 0.5)?;
            let theta_ok = |x: f64| if p.gamma.is_some() { (0.0..=1.0).contains(&x) } else { (0.0..1.0).contains(&x) };
            all(&p.theta, "theta", "must lie in [0, 1) (or [0, 1] with explicit gamma)", theta_ok)?;
            check(p.n >= 1, "n", "must be at least 1")?;
            if let Some(g) = p.gamma {
                check(g.is_finite() && g > 0.0, "gamma", "must be positive")?;
            }
            all(&p.k_tune, "k_tune", "must be positive", |x| x > 0.0)?;
            check_dt(p.dt_fine, "dt_fine")
        }
        Experiment::WosCheck(p) => {
            check(p.epsilon > 0.0 && p.epsilon < 0.25, "epsilon", "must lie in (0, 1/4)")?;
            check(p.n_walks >= 1, "n_walks", "must be at least 1")?;
            if let Some(h) = p.h {
                check(h > 0.0 && h <= p.epsilon / 4.0, "h", "must lie in (0, epsilon/4]")?;
            }
            check(p.x_cutoff >= 5.0 && p.x_cutoff.is_finite(), "x_cutoff", "must be at least 5")?;
            all(&p.xs, "xs", "must lie inside the cutoff", |x| x.abs() < p.x_cutoff)?;
            all(&p.ys, "ys", "must satisfy |y| <= 1", |y| y.abs() <= 1.0)
        }
        Experiment::Eq9(p) => {
            check(p.epsilon > 0.0 && p.epsilon < 0.25, "epsilon", "must lie in (0, 1/4)")?;
            all(&p.y, "y", "must satisfy 0 < |y| < 1", |y| y != 0.0 && y.abs() < 1.0)?;
            check(
                p.dy > 0.0 && p.y.iter().all(|y| p.dy < (1.0 - y.abs()) / 4.0),
                "dy",
                "must satisfy 0 < dy < (1 - |y|)/4 for every y",
            )?;
            check(p.n_walks >= 1, "n_walks", "must be at least 1")?;
            check(p.alpha_spacing > 0.0, "alpha_spacing", "must be positive")?;
            check(
                p.alpha_max >= p.alpha_spacing && p.alpha_max <= default_x_cutoff(),
                "alpha_max",
                "must lie in [alpha_spacing, 12]",
            )
        }
        Experiment::Lemma4(p) => {
            all(&p.epsilon, "epsilon", "must lie in (0, 1/4)", |x| x > 0.0 && x < 0.25)?;
            check(p.n_walks >= 1, "n_walks", "must be at least 1")?;
            check(p.alpha_spacing > 0.0, "alpha_spacing", "must be positive")?;
            check(
                p.alpha_max >= p.alpha_spacing && p.alpha_max <= default_x_cutoff(),
                "alpha_max",
                "must lie in [alpha_spacing, 12]",
            )
        }
        Experiment::LocalTime(p) => {
            check(p.n_paths >= 1, "n_paths", "must be at least 1")?;
            check_dt(Some(p.dt), "dt")?;
            check(p.bin_width >= p.dt.sqrt(), "bin_width", "must be at least sqrt(dt)")
        }
        Experiment::Bridge(p) => {
            all(&p.delta, "delta", "must lie in (0, 1/2)", |d| d > 0.0 && d < 0.5)?;
            check(p.n >= 1, "n", "must be at least 1")?;
            check_dt(Some(p.dt_coarse), "dt_coarse")?;
            let pts = [p.q1, p.q2, p.q3];
            check(pts.iter().flatten().all(|v| v.is_finite()), "q1", "coordinates must be finite")?;
            let d = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
            check(
                d(p.q1, p.q2) <= 3.0 && d(p.q1, p.q3) <= 3.0 && d(p.q2, p.q3) <= 3.0,
                "q3",
                "points must be pairwise within distance 3",
            )?;
            if let Some(h) = p.dt_min {
                check(h > 0.0, "dt_min", "must be positive")?;
                check(
                    p.delta.iter().all(|&d| d >= 4.0 * h.sqrt()),
                    "delta",
                    "every delta must be at least 4 sqrt(dt_min)",
                )?;
            }
            Ok(())
        }
        Experiment::StripCond(p) => {
            check(p.epsilon > 0.0 && p.epsilon.is_finite(), "epsilon", "must be positive")?;
            all(&p.theta, "theta", "must lie in [0, 1]", |x| (0.0..=1.0).contains(&x))?;
            check(p.n >= 1, "n", "must be at least 1")?;
            check_dt(p.dt, "dt")
        }
        Experiment::Martingale(p) => {
            check_dt(p.dt, "dt")?;
            p.to_config().validate().map_err(|e| match e {
                Error::InvalidInput { field, reason } => Error::config(format!("params.{field}"), reason),
                other => other,
            })
        }
        Experiment::Srw(p) => {
            check(!p.n_sites.is_empty() && p.n_sites.iter().all(|&n| n >= 2), "n_sites", "each must be at least 2")?;
            check(p.n_walks >= 1, "n_walks", "must be at least 1")?;
            all(&p.theta, "theta", "must lie in [0, 1]", |x| (0.0..=1.0).contains(&x))
        }
        Experiment::BoundsReport(p) => {
            all(&p.epsilon, "epsilon", "must lie in (0, 1/e)", |x| x > 0.0 && x < (-1.0f64).exp())?;
            all(&p.theta, "theta", "must lie in (0, 1]", |x| x > 0.0 && x <= 1.0)?;
            for (name, c) in [("c1", p.c1), ("c2", p.c2), ("c3", p.c3), ("c4", p.c4)] {
                check(c.is_finite() && c > 0.0, name, "must be positive")?;
            }
            Ok(())
        }
    }
}
