use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use relucert::certify::{certify_point, lift_certificate, CertifyConfig};
use relucert::harness::{
    collect_records, emit_cdf, load_candidate, load_certificate, run_experiment, save_candidate, save_certificate,
    summarize, write_cdf, write_records, write_table, ExperimentSpec, RecordRow,
};
use relucert::search::{gd_run, Classification, GdConfig, GLOBAL_THRESHOLD};
use relucert::TargetBasis;

#[derive(Parser)]
#[command(name = "relucert", version, about = "Search for and certify spurious local minima of two-layer ReLU networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[arg(long = "grad-tol", default_value_t = 1e-9)]
    grad_tol: f64,
    #[arg(long = "max-iters", default_value_t = 1_000_000)]
    max_iters: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Working precision in bits (overridden by RELU_CERT_PRECISION).
    #[arg(long, env = "RELU_CERT_PRECISION", default_value_t = 256)]
    precision: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Run gradient descent and write candidate files.
    Search {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Certify candidate files; certificates go to OUT.
    Certify {
        files: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "certificates")]
        out: PathBuf,
        /// Exit with status 2 if any candidate is refused.
        #[arg(long)]
        strict: bool,
    },
    /// Certify the zero-padded points of certificate files.
    Lift { files: Vec<PathBuf> },
    /// Full pipeline: search, deduplicate, certify, and write all tables.
    Experiment {
        /// Comma-separated k values.
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        /// Comma-separated n values, paired with --k; default n = k.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Summary table from the records under DIR.
    Table {
        #[arg(default_value = "out")]
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Objective CDF from the records under DIR.
    Cdf {
        #[arg(default_value = "out")]
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            ExitCode::FAILURE
        }
    }
}

fn stdout_or(path: Option<PathBuf>) -> PathBuf {
    path.unwrap_or_else(|| PathBuf::from("/dev/stdout"))
}

fn run(cli: Cli) -> relucert::Result<ExitCode> {
    match cli.command {
        Command::Search { k, n, runs, common, out } => {
            let v = TargetBasis::standard(k);
            let dir = out.join(format!("k{k}_n{n}"));
            let mut rows = Vec::new();
            for run in 0..runs {
                let cfg = GdConfig {
                    step_size: common.step,
                    grad_tol: common.grad_tol,
                    max_iters: common.max_iters,
                    stop_below: Some(GLOBAL_THRESHOLD),
                    ..GdConfig::new(k, n, common.seed ^ run as u64)
                };
                let rec = gd_run(&cfg, &v)?;
                if rec.classification == Classification::Candidate {
                    save_candidate(&dir.join(format!("candidates/run{run:04}.json")), &rec)?;
                }
                rows.push(RecordRow {
                    k,
                    n,
                    run,
                    seed: cfg.seed,
                    iterations: rec.iterations,
                    objective: rec.objective,
                    grad_norm: rec.grad_norm,
                    converged: rec.converged,
                    classification: rec.classification.as_str().into(),
                    class: None,
                    certified: false,
                    lambda_min: None,
                    certified_objective: None,
                });
            }
            std::fs::create_dir_all(&dir)?;
            write_records(&dir.join("records.csv"), &rows)?;
            let s = summarize(k, n, &rows);
            info!(
                "{} runs: {} global, {} candidates, {} anomalies, {} unconverged",
                s.runs, s.global_like, s.candidates, s.anomalies, s.unconverged
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Certify { files, common, out, strict } => {
            let cfg = CertifyConfig {
                precision: common.precision,
                ..CertifyConfig::default()
            };
            let mut refused = 0;
            for f in &files {
                let (cand, _) = load_candidate(f)?;
                let v = TargetBasis::standard(cand.point.k());
                match certify_point(&cand.point, &v, &cfg) {
                    Ok(mut cert) => {
                        cert.point_ref = f.display().to_string();
                        let name = f.file_stem().map(Path::new).unwrap_or(Path::new("certificate"));
                        let path = out.join(name).with_extension("json");
                        save_certificate(&path, &cert)?;
                        println!(
                            "{}: lambda_min {:e} r {:e} margin {:e} complete {}",
                            f.display(),
                            cert.lambda_min,
                            cert.r,
                            cert.margin,
                            cert.is_complete()
                        );
                        if !cert.is_complete() {
                            refused += 1;
                        }
                    }
                    Err(e) => {
                        println!("{}: refused: {e}", f.display());
                        refused += 1;
                    }
                }
            }
            Ok(if strict && refused > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
        }
        Command::Lift { files } => {
            for f in &files {
                let (cert, _) = load_certificate(f)?;
                let rep = lift_certificate(&cert, &TargetBasis::standard(cert.k()))?;
                let spectrum: Vec<String> = rep.spectrum_m.iter().map(|x| format!("{x:e}")).collect();
                println!(
                    "{}: lift_certified {} padded lambda_min {:e} spectrum(M) [{}]; {}",
                    f.display(),
                    rep.lift_certified,
                    rep.lambda_min_padded,
                    spectrum.join(", "),
                    rep.m_note
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment { k, n, runs, common, out } => {
            let configs: Vec<(usize, usize)> = if n.is_empty() {
                ExperimentSpec::square(k)
            } else if n.len() == k.len() {
                k.into_iter().zip(n).collect()
            } else {
                return Err(relucert::Error::InvalidConfig("--k and --n need the same length".into()));
            };
            let spec = ExperimentSpec {
                precision_bits: common.precision,
                step_size: common.step,
                grad_tol: common.grad_tol,
                max_iters: common.max_iters,
                ..ExperimentSpec::new(configs, runs, common.seed, out)
            };
            for s in run_experiment(&spec)? {
                info!("k={} n={}: {}% certified, {}% unverified", s.k, s.n, s.pct_certified, s.pct_unverified);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Table { dir, out } => {
            let rows: Vec<_> = collect_records(&dir)?
                .iter()
                .map(|(&(k, n), rows)| summarize(k, n, rows))
                .collect();
            write_table(&stdout_or(out), &rows)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Cdf { dir, out } => {
            let groups = collect_records(&dir)?
                .into_iter()
                .map(|(key, rows)| (key, rows.iter().map(|r| r.objective).collect()))
                .collect();
            write_cdf(&stdout_or(out), &emit_cdf(&groups))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
