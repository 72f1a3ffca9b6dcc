//! Experiment execution and result persistence.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::*;
use super::output::*;
use crate::analytic::{annulus_hit_prob, theorem1_bounds, BoundParams};
use crate::error::{Error, Result};
use crate::estimators::{
    bridge_hit_experiment, default_gamma, is_lower_bound, local_time_tail, martingale_experiment, naive_mc_sweep,
    srw_cover, strip_conditioning_check, BridgeConfig, BridgeGeometry, Estimate,
};
use crate::geom::Point;
use crate::rng::{domain, StreamId};
use crate::sausage::SausageParams;
use crate::wos::{eq9_identity_check, fd_oracle, lemma4_shape_checks, wos_estimate, AlphaGrid, C7Request, WosConfig};

/// Environment variable overriding the configured worker count.
pub const WORKERS_ENV: &str = "SAUSAGE_WORKERS";

/// Everything an experiment produces before it touches the filesystem.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub table: CsvTable,
    /// Additional named tables written next to `results.csv`.
    pub extra_tables: Vec<(String, CsvTable)>,
    pub results: Value,
    pub points: Vec<ReportPoint>,
    pub failures: Vec<TaskFailure>,
    /// Number of pass/fail checks whose outcome was decided.
    pub decided_checks: usize,
    pub inconclusive_checks: usize,
}

impl ExperimentOutput {
    fn new(table: CsvTable) -> Self {
        ExperimentOutput {
            table,
            extra_tables: Vec::new(),
            results: Value::Null,
            points: Vec::new(),
            failures: Vec::new(),
            decided_checks: 0,
            inconclusive_checks: 0,
        }
    }

    /// True when checks were attempted and none could be decided.
    pub fn inconclusive_only(&self) -> bool {
        self.inconclusive_checks > 0 && self.decided_checks == 0
    }

    fn tally(&mut self, inconclusive: bool) {
        if inconclusive {
            self.inconclusive_checks += 1;
        } else {
            self.decided_checks += 1;
        }
    }

    /// Keeps the value, or records the failure of `task`.
    fn attempt<T>(&mut self, task: impl Into<String>, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.failures.push(TaskFailure {
                    task: task.into(),
                    numerical: matches!(e, Error::Numerical { .. }),
                    error: e.to_string(),
                });
                None
            }
        }
    }
}

fn est_json(e: &Estimate) -> Value {
    json!({ "mean": e.mean, "stderr": e.stderr, "n": e.n })
}

fn log_point(quantity: &str, role: &str, eps: f64, theta: f64, e: &Estimate, tag: String) -> ReportPoint {
    let (log_p, log_stderr) = if e.log_domain {
        (Some(e.mean), Some(e.stderr))
    } else if e.mean > 0.0 {
        (Some(e.mean.ln()), Some(e.stderr / e.mean))
    } else {
        (None, None)
    };
    ReportPoint {
        quantity: quantity.into(),
        role: role.into(),
        epsilon: eps,
        theta,
        log_p,
        log_stderr,
        tag,
    }
}

fn default_dt(eps: f64) -> f64 {
    (eps / 4.0).powi(2).min(1e-2)
}

/// Runs the experiment on the current rayon pool. Deterministic in `(experiment, seed)`.
pub fn execute(experiment: &Experiment, seed: u64) -> Result<ExperimentOutput> {
    validate_experiment(experiment)?;
    Ok(match experiment {
        Experiment::Naive(p) => run_naive(p, seed),
        Experiment::Corridor(p) => run_corridor(p, seed),
        Experiment::WosCheck(p) => run_wos_check(p, seed),
        Experiment::Eq9(p) => run_eq9(p, seed),
        Experiment::Lemma4(p) => run_lemma4(p, seed),
        Experiment::LocalTime(p) => run_local_time(p, seed),
        Experiment::Bridge(p) => run_bridge(p, seed),
        Experiment::StripCond(p) => run_strip(p, seed),
        Experiment::Martingale(p) => run_martingale(p, seed),
        Experiment::Srw(p) => run_srw(p, seed),
        Experiment::BoundsReport(p) => run_bounds(p),
    })
}

fn run_naive(p: &NaiveParams, seed: u64) -> ExperimentOutput {
    let mut out = ExperimentOutput::new(CsvTable::new(&[
        "epsilon",
        "theta",
        "n",
        "dt",
        "p_theta",
        "p_theta_stderr",
        "p_cover",
        "p_cover_stderr",
        "xi_mean",
        "xi_sd",
        "budget_limited",
    ]));
    let mut results = Vec::new();
    for &eps in &p.epsilon {
        let dt = p.dt.unwrap_or_else(|| default_dt(eps));
        let r = naive_mc_sweep(eps, &p.theta, p.refine_margin, p.n, dt, seed);
        let Some(s) = out.attempt(format!("epsilon={eps}"), r) else { continue };
        for (k, &theta) in s.thetas.iter().enumerate() {
            let e = s.p_theta[k];
            out.table.push(vec![
                eps.into(),
                theta.into(),
                p.n.into(),
                s.dt.into(),
                e.mean.into(),
                e.stderr.into(),
                s.p_cover.mean.into(),
                s.p_cover.stderr.into(),
                s.xi.mean.into(),
                s.xi.sd.into(),
                s.budget_limited.into(),
            ]);
            out.points.push(log_point("p_theta", "estimate", eps, theta, &e, String::new()));
        }
        results.push(serde_json::to_value(&s).expect("sweep serializes"));
    }
    out.results = Value::Array(results);
    out
}

fn run_corridor(p: &CorridorParams, seed: u64) -> ExperimentOutput {
    let mut out = ExperimentOutput::new(CsvTable::new(&[
        "epsilon",
        "theta",
        "gamma",
        "k_tune",
        "n_side",
        "n",
        "log_p_theta",
        "log_p_theta_stderr",
        "log_p_theta_upper",
        "successes_theta",
        "log_p_cover",
        "log_p_cover_stderr",
        "log_p_discrete",
        "log_p_discrete_stderr",
        "log_p_corridor",
        "conditional_theta_fraction",
        "conditional_cover_fraction",
        "mean_log_weight",
        "mean_xi",
    ]));
    let mut results = Vec::new();
    for &eps in &p.epsilon {
        for &theta in &p.theta {
            for &k in &p.k_tune {
                let task = format!("epsilon={eps},theta={theta},k_tune={k}");
                let r = (|| {
                    let gamma = match p.gamma {
                        Some(g) => g,
                        None => default_gamma(theta)?,
                    };
                    let params = SausageParams::new(eps, theta, 0.0)?;
                    is_lower_bound(&params, gamma, k, p.n, p.dt_fine.unwrap_or_else(|| default_dt(eps)), seed)
                })();
                let Some(c) = out.attempt(task, r) else { continue };
                let m = |l: &crate::estimators::corridor::LogEstimate| Cell::from(l.estimate.map(|e| e.mean));
                let s = |l: &crate::estimators::corridor::LogEstimate| Cell::from(l.estimate.map(|e| e.stderr));
                out.table.push(vec![
                    eps.into(),
                    theta.into(),
                    c.gamma.into(),
                    k.into(),
                    c.n_side.into(),
                    p.n.into(),
                    m(&c.p_theta),
                    s(&c.p_theta),
                    c.p_theta.upper_bound.into(),
                    c.p_theta.successes.into(),
                    m(&c.p_cover),
                    s(&c.p_cover),
                    m(&c.p_discrete),
                    s(&c.p_discrete),
                    m(&c.p_corridor),
                    c.conditional_theta_fraction.into(),
                    c.conditional_cover_fraction.into(),
                    c.mean_log_weight.into(),
                    c.mean_xi.into(),
                ]);
                let tag = format!("k_tune={k}");
                if let Some(e) = c.p_theta.estimate {
                    out.points.push(log_point("p_theta", "lower_bound", eps, theta, &e, tag.clone()));
                }
                results.push(serde_json::to_value(&c).expect("estimate serializes"));
            }
        }
    }
    out.results = Value::Array(results);
    out
}

fn run_wos_check(p: &WosCheckParams, seed: u64) -> ExperimentOutput {
    let mut out = ExperimentOutput::new(CsvTable::new(&[
        "x",
        "y",
        "wos",
        "wos_stderr",
        "fd",
        "z",
        "annulus_lower",
        "annulus_upper",
        "within_4_sigma",
        "within_sandwich",
    ]));
    let eps = p.epsilon;
    let h = p.h.unwrap_or(eps / 8.0);
    let Some(fd) = out.attempt("fd_oracle", fd_oracle(eps, h, p.x_cutoff)) else {
        return out;
    };
    let mut cfg = WosConfig::new(eps, p.n_walks);
    cfg.x_cutoff = p.x_cutoff;
    let starts: Vec<Point> = p.ys.iter().flat_map(|&y| p.xs.iter().map(move |&x| Point::new(x, y))).collect();
    let walks: Vec<Result<_>> = starts
        .par_iter()
        .enumerate()
        .map(|(k, &s)| wos_estimate(s, 0.0, &cfg, &mut StreamId::new(seed, domain::WOS, k as u64).stream()))
        .collect();
    let r_out = fd.x_cutoff.hypot(1.0);
    let mut rows = Vec::new();
    for (s, w) in starts.iter().zip(walks) {
        let Some(w) = out.attempt(format!("x={},y={}", s.x, s.y), w) else { continue };
        let v = fd.value_at(*s);
        let r = s.norm();
        let lo = if r <= eps {
            1.0
        } else if r <= 1.0 {
            annulus_hit_prob(r, eps, 1.0).unwrap_or(0.0)
        } else {
            0.0
        };
        let hi = if r <= eps { 1.0 } else { annulus_hit_prob(r.min(r_out), eps, r_out).unwrap_or(1.0) };
        let diff = (w.estimate.mean - v).abs();
        let z = if w.estimate.stderr > 0.0 { diff / w.estimate.stderr } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
        let sandwich = |x: f64| x >= lo - 1e-12 && x <= hi + 1e-12;
        let ok_sigma = z <= 4.0;
        let ok_sandwich = sandwich(w.estimate.mean) && sandwich(v);
        out.decided_checks += 1;
        out.table.push(vec![
            s.x.into(),
            s.y.into(),
            w.estimate.mean.into(),
            w.estimate.stderr.into(),
            v.into(),
            z.into(),
            lo.into(),
            hi.into(),
            ok_sigma.into(),
            ok_sandwich.into(),
        ]);
        rows.push(json!({"x": s.x, "y": s.y, "wos": est_json(&w.estimate), "fd": v, "z": z,
            "truncated": w.truncated, "passed": ok_sigma && ok_sandwich}));
    }
    out.results = json!({
        "fd": {"h": fd.h, "x_cutoff": fd.x_cutoff, "residual": fd.residual, "sweeps": fd.sweeps},
        "points": rows,
    });
    out
}

fn run_eq9(p: &Eq9Params, seed: u64) -> ExperimentOutput {
    let mut out = ExperimentOutput::new(CsvTable::new(&[
        "y",
        "dy",
        "epsilon",
        "lhs",
        "lhs_stderr",
        "rhs",
        "rhs_stderr",
        "ratio",
        "ratio_stderr",
        "inconclusive",
        "passed",
    ]));
    let cfg = WosConfig::new(p.epsilon, p.n_walks);
    let grid = AlphaGrid {
        spacing: p.alpha_spacing,
        alpha_max: p.alpha_max,
    };
    let mut results = Vec::new();
    for (k, &y) in p.y.iter().enumerate() {
        let base = StreamId::new(seed, domain::EQ9, k as u64);
        let r = eq9_identity_check(y, p.epsilon, p.dy, &cfg, &grid, base);
        let Some(r) = out.attempt(format!("y={y}"), r) else { continue };
        out.tally(r.inconclusive);
        out.table.push(vec![
            y.into(),
            p.dy.into(),
            p.epsilon.into(),
            r.lhs.mean.into(),
            r.lhs.stderr.into(),
            r.rhs.mean.into(),
            r.rhs.stderr.into(),
            r.ratio.into(),
            r.ratio_stderr.into(),
            r.inconclusive.into(),
            r.passed.into(),
        ]);
        results.push(serde_json::to_value(&r).expect("report serializes"));
    }
    out.results = Value::Array(results);
    out
}

fn run_lemma4(p: &Lemma4Params, seed: u64) -> ExperimentOutput {
    let mut out = ExperimentOutput::new(CsvTable::new(&[
        "epsilon",
        "scan",
        "coord",
        "estimate",
        "stderr",
        "scaled",
        "inconclusive",
    ]));
    let cfg = WosConfig::new(p.epsilon[0], p.n_walks);
    let req = C7Request {
        grid: AlphaGrid {
            spacing: p.alpha_spacing,
            alpha_max: p.alpha_max,
        },
        heights: vec![0.0, 0.5],
    };
    let base = StreamId::new(seed, domain::LEMMA4, 0);
    let r = lemma4_shape_checks(&p.epsilon, &cfg, p.c7.then_some(&req), base);
    let Some(r) = out.attempt("lemma4", r) else { return out };
    for s in &r.per_epsilon {
        for (scan, pts) in [("y", &s.y_scan), ("alpha", &s.alpha_scan)] {
            for pt in pts {
                out.tally(pt.inconclusive);
                out.table.push(vec![
                    s.epsilon.into(),
                    scan.into(),
                    pt.coord.into(),
                    pt.estimate.mean.into(),
                    pt.estimate.stderr.into(),
                    pt.scaled.into(),
                    pt.inconclusive.into(),
                ]);
            }
        }
    }
    let mut summary = CsvTable::new(&["epsilon", "c5", "c6", "c7", "monotone_y", "monotone_alpha"]);
    for s in &r.per_epsilon {
        summary.push(vec![
            s.epsilon.into(),
            s.c5.into(),
            s.c6.into(),
            s.c7.into(),
            s.monotone_y.into(),
            s.monotone_alpha.into(),
        ]);
    }
    out.extra_tables.push(("constants.csv".into(), summary));
    out.results = serde_json::to_value(&r).expect("report serializes");
    out
}

fn run_local_time(p: &LocalTimeParams, seed: u64) -> ExperimentOutput {
    let mut out = ExperimentOutput::new(CsvTable::new(&["u", "log_tail", "u_squared"]));
    let r = local_time_tail(p.n_paths, p.dt, p.bin_width, seed);
    let Some(r) = out.attempt("local_time_tail", r) else { return out };
    out.tally(r.inconclusive);
    for &(u, lt) in &r.tail_points {
        out.table.push(vec![u.into(), lt.into(), (u * u).into()]);
    }
    out.results = serde_json::to_value(&r).expect("report serializes");
    out
}

fn run_bridge(p: &BridgeParams, seed: u64) -> ExperimentOutput {
    let mut out = ExperimentOutput::new(CsvTable::new(&[
        "delta",
        "p_hat",
        "stderr",
        "scaled",
        "scaled_stderr",
        "n",
    ]));
    let pt = |q: [f64; 2]| Point::new(q[0], q[1]);
    let geometry = BridgeGeometry {
        q1: pt(p.q1),
        q2: pt(p.q2),
        q3: pt(p.q3),
    };
    let cfg = BridgeConfig {
        dt_coarse: p.dt_coarse,
        dt_min: p.dt_min,
    };
    let r = bridge_hit_experiment(&p.delta, p.n, &geometry, &cfg, seed);
    let Some(r) = out.attempt("bridge", r) else { return out };
    for row in &r.rows {
        out.table.push(vec![
            row.delta.into(),
            row.estimate.mean.into(),
            row.estimate.stderr.into(),
            row.scaled.into(),
            row.scaled_stderr.into(),
            p.n.into(),
        ]);
    }
    out.decided_checks += 1;
    out.results = serde_json::to_value(&r).expect("report serializes");
    out
}

fn run_strip(p: &StripParams, seed: u64) -> ExperimentOutput {
    let mut out = ExperimentOutput::new(CsvTable::new(&[
        "epsilon",
        "theta",
        "p_g2",
        "p_g2_stderr",
        "p_g2_given_g1",
        "p_g2_given_g1_stderr",
        "p_g1",
        "n_g1",
        "difference",
        "difference_stderr",
        "inconclusive",
        "passed",
    ]));
    let dt = p.dt.unwrap_or_else(|| default_dt(p.epsilon));
    let mut results = Vec::new();
    for &theta in &p.theta {
        let r = SausageParams::new(p.epsilon, theta, 0.0).and_then(|sp| strip_conditioning_check(&sp, p.n, dt, seed));
        let Some(r) = out.attempt(format!("theta={theta}"), r) else { continue };
        out.tally(r.inconclusive);
        out.table.push(vec![
            p.epsilon.into(),
            theta.into(),
            r.p_g2.mean.into(),
            r.p_g2.stderr.into(),
            r.p_g2_given_g1.mean.into(),
            r.p_g2_given_g1.stderr.into(),
            r.p_g1.mean.into(),
            r.n_g1.into(),
            r.difference.into(),
            r.difference_stderr.into(),
            r.inconclusive.into(),
            r.passed.into(),
        ]);
        results.push(serde_json::to_value(&r).expect("report serializes"));
    }
    out.results = Value::Array(results);
    out
}

fn run_martingale(p: &MartingaleParams, seed: u64) -> ExperimentOutput {
    let mut out = ExperimentOutput::new(CsvTable::new(&[
        "path", "t0", "t1", "dm", "stderr", "ceiling", "frozen", "skipped",
    ]));
    let r = martingale_experiment(&p.to_config(), seed);
    let Some(mut r) = out.attempt("martingale", r) else { return out };
    let mut checkpoints = CsvTable::new(&["path", "t", "index", "m_hat", "stderr", "covered", "y", "frozen", "skipped"]);
    for (i, tr) in r.tracks.iter().enumerate() {
        for inc in &tr.increments {
            out.table.push(vec![
                i.into(),
                inc.t0.into(),
                inc.t1.into(),
                inc.dm.into(),
                inc.stderr.into(),
                inc.ceiling.into(),
                inc.frozen.into(),
                inc.skipped.into(),
            ]);
        }
        for c in &tr.checkpoints {
            checkpoints.push(vec![
                i.into(),
                c.t.into(),
                c.index.into(),
                c.m_hat.into(),
                c.stderr.into(),
                c.covered.into(),
                c.y.into(),
                c.frozen.into(),
                c.skipped.into(),
            ]);
        }
    }
    out.extra_tables.push(("checkpoints.csv".into(), checkpoints));
    out.decided_checks += 1;
    let taus: Vec<Option<f64>> = r.tracks.iter().map(|t| t.tau).collect();
    r.tracks.clear();
    let mut v = serde_json::to_value(&r).expect("report serializes");
    v["taus"] = json!(taus);
    out.results = v;
    out
}

fn run_srw(p: &SrwParams, seed: u64) -> ExperimentOutput {
    let mut out = ExperimentOutput::new(CsvTable::new(&[
        "n_sites",
        "theta",
        "required",
        "n_walks",
        "p_all",
        "p_all_stderr",
        "p_theta",
        "p_theta_stderr",
    ]));
    let mut results = Vec::new();
    for &n in &p.n_sites {
        for &theta in &p.theta {
            let r = srw_cover(n, p.n_walks, theta, seed);
            let Some(r) = out.attempt(format!("n_sites={n},theta={theta}"), r) else { continue };
            out.table.push(vec![
                n.into(),
                theta.into(),
                r.required.into(),
                p.n_walks.into(),
                r.p_all.mean.into(),
                r.p_all.stderr.into(),
                r.p_theta.mean.into(),
                r.p_theta.stderr.into(),
            ]);
            results.push(serde_json::to_value(&r).expect("report serializes"));
        }
    }
    out.results = Value::Array(results);
    out
}

pub const BOUNDS_COLUMNS: [&str; 4] = ["upper", "lower", "upper_measure", "lower_measure"];

fn run_bounds(p: &BoundsReportParams) -> ExperimentOutput {
    let mut out = ExperimentOutput::new(CsvTable::new(&[
        "epsilon",
        "theta",
        "upper",
        "lower",
        "upper_measure",
        "lower_measure",
        "ordered",
    ]));
    let params = BoundParams {
        c1: p.c1,
        c2: p.c2,
        c3: p.c3,
        c4: p.c4,
    };
    let mut unordered = Vec::new();
    for &eps in &p.epsilon {
        for &theta in &p.theta {
            let r = theorem1_bounds(eps, theta, &params);
            let Some(b) = out.attempt(format!("epsilon={eps},theta={theta}"), r) else { continue };
            if !b.is_ordered() {
                unordered.push(json!({"epsilon": eps, "theta": theta}));
            }
            out.table.push(vec![
                eps.into(),
                theta.into(),
                b.upper.into(),
                b.lower.into(),
                b.upper_measure.into(),
                b.lower_measure.into(),
                b.is_ordered().into(),
            ]);
        }
    }
    out.results = json!({ "params": params, "unordered": unordered });
    out
}

/// Worker count: the environment override, then the config, then rayon's default.
pub fn resolve_workers(configured: Option<usize>) -> Result<usize> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::config(WORKERS_ENV, format!("must be a positive integer, got `{v}`"))),
        };
    }
    Ok(configured.unwrap_or_else(rayon::current_num_threads))
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: ResultManifest,
    pub output: ExperimentOutput,
}

impl RunOutcome {
    /// 0 success, 3 numerical failure, 4 inconclusive-only.
    pub fn exit_code(&self) -> i32 {
        if !self.manifest.failures.is_empty() {
            3
        } else if self.output.inconclusive_only() {
            4
        } else {
            0
        }
    }
}

/// Runs `cfg` and writes its outputs to `cfg.output_dir`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    run_to(cfg, &cfg.output_dir)
}

/// Runs `cfg` and writes its outputs to `dir`.
pub fn run_to(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let workers = resolve_workers(cfg.workers)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    // A stale manifest must not outlive the files it describes.
    let stale = dir.join(MANIFEST);
    if stale.exists() {
        std::fs::remove_file(&stale).map_err(|e| Error::io(&stale, e))?;
    }
    let started = unix_now();
    let output = with_workers(workers, || execute(&cfg.experiment, cfg.seed))??;
    let inconclusive = output.inconclusive_only();
    let mut files = vec![atomic_write(dir, RESULTS_CSV, output.table.render().as_bytes())?];
    for (name, t) in &output.extra_tables {
        files.push(atomic_write(dir, name, t.render().as_bytes())?);
    }
    let summary = json!({
        "kind": cfg.experiment.kind(),
        "seed": cfg.seed,
        "version": VERSION,
        "config_hash": cfg.content_hash(),
        "config": cfg.echo(),
        "results": output.results,
        "points": output.points,
        "failures": output.failures,
        "inconclusive": inconclusive,
    });
    files.push(atomic_write(dir, SUMMARY_JSON, &to_json_bytes(&summary)?)?);
    let manifest = ResultManifest {
        version: VERSION.to_string(),
        kind: cfg.experiment.kind().to_string(),
        seed: cfg.seed,
        config_hash: cfg.content_hash(),
        config_toml: cfg.canonical_toml(),
        config: cfg.echo(),
        workers,
        started_unix: started,
        finished_unix: unix_now(),
        files,
        failures: output.failures.clone(),
        inconclusive,
    };
    atomic_write(dir, MANIFEST, &to_json_bytes(&manifest)?)?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        manifest,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(text).unwrap()
    }

    #[test]
    fn bounds_report_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("kind = \"bounds-report\"\nseed = 0\noutput_dir = \"x\"\n[params]\nepsilon = [0.1, 0.05]\ntheta = [0.5]\n");
        let r = run_to(&c, dir.path()).unwrap();
        assert_eq!(r.exit_code(), 0);
        assert_eq!(r.output.table.rows.len(), 2);
        let m = ResultManifest::read(dir.path()).unwrap();
        m.verify(dir.path()).unwrap();
        assert_eq!(m.files.len(), 2);
        assert_eq!(m.config_hash, c.content_hash());
    }

    #[test]
    fn naive_is_worker_invariant() {
        let c = cfg("kind = \"naive\"\nseed = 3\noutput_dir = \"x\"\n[params]\nepsilon = [0.2]\ntheta = [0.3, 0.6]\nn = 300\ndt = 1e-3\n");
        let a = with_workers(1, || execute(&c.experiment, c.seed)).unwrap().unwrap();
        let b = with_workers(3, || execute(&c.experiment, c.seed)).unwrap().unwrap();
        assert_eq!(a.table.render(), b.table.render());
        assert_eq!(a.points.len(), 2);
    }

    #[test]
    fn failures_are_recorded_per_task() {
        let c = cfg("kind = \"wos-check\"\nseed = 3\noutput_dir = \"x\"\n[params]\nepsilon = 0.2\nn_walks = 10\nh = 0.05\nx_cutoff = 5.0\nxs = [0.0]\nys = [0.5]\n");
        let out = execute(&c.experiment, c.seed).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.table.rows.len(), 1);
        let mut o = ExperimentOutput::new(CsvTable::new(&["a"]));
        assert!(o.attempt("t", Err::<(), _>(Error::numerical("x", "y"))).is_none());
        assert!(o.failures[0].numerical);
    }
}
