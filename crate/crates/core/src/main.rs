use std::path::Path;
use std::process::ExitCode;

use sausage_core::cli::{self, ExperimentConfig};
use sausage_core::Error;

const USAGE: &str = "usage: sausage <run|validate> <config.toml>\n       sausage report <results-dir>";

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(match e {
        Error::Config { .. } | Error::InvalidInput { .. } => 2,
        Error::Numerical { .. } => 3,
        Error::Io { .. } | Error::Serde(_) => 1,
    })
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (verb, target) = match args.as_slice() {
        [v, t] => (v.as_str(), Path::new(t)),
        [v] if v == "-h" || v == "--help" => {
            println!("{USAGE}");
            return ExitCode::SUCCESS;
        }
        _ => {
            eprintln!("{USAGE}");
            return ExitCode::from(2);
        }
    };
    match verb {
        "validate" => match ExperimentConfig::from_path(target) {
            Ok(cfg) => {
                println!("ok: {} (config {})", cfg.experiment.kind(), cfg.content_hash());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        "run" => {
            let cfg = match ExperimentConfig::from_path(target) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            match cli::run(&cfg) {
                Ok(out) => {
                    for f in &out.manifest.failures {
                        eprintln!("task failed: {}: {}", f.task, f.error);
                    }
                    if out.output.inconclusive_only() {
                        eprintln!("all checks inconclusive");
                    }
                    println!("wrote {}", out.dir.display());
                    ExitCode::from(out.exit_code() as u8)
                }
                Err(e) => fail(&e),
            }
        }
        "report" => match cli::report(target) {
            Ok(r) => {
                for w in &r.warnings {
                    eprintln!("warning: {w}");
                }
                println!("{} rows from {} manifest(s)", r.rows.len(), r.manifests.len());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        _ => {
            eprintln!("{USAGE}");
            ExitCode::from(2)
        }
    }
}
