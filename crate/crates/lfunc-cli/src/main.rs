//! Batch front door: family scans, verdict runs, statistics reports and
//! simulations, persisted through the content-addressed scan store.
//!
//! Exit codes: 0 ok, 1 validation error, 2 computation failure.

use anyhow::Context;
use clap::{Parser, Subcommand};
use lfunc::config::Config;
use lfunc::randmodel::MeasureFamily;
use lfunc::scan::{self, ScanRequest, Store};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lfunc", version, about = "L-function family scans, sign-change verdicts and statistics")]
struct Cli {
    /// Plain-text key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Output directory for report artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Scan store root.
    #[arg(long, global = true, default_value = "scans")]
    store: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate a family window and persist it (idempotent).
    Scan {
        /// dirichlet | dihedral | elliptic | elliptic-1param | modular-ingest | sym
        family: String,
        #[arg(long)]
        x: Option<u64>,
        /// Newform CSV (modular-ingest, sym).
        #[arg(long)]
        file: Option<PathBuf>,
        /// Symmetric power (sym).
        #[arg(long)]
        r: Option<u32>,
        /// Integer polynomial coefficients, ascending (elliptic-1param).
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
    },
    /// Run the sign-change verdict engine over a persisted scan.
    Verdicts {
        /// Scan directory (as printed by `scan`).
        scan: PathBuf,
    },
    /// Statistics reports from a persisted scan.
    Report {
        scan: PathBuf,
        /// moments | independence | correlation | ks | densities
        #[arg(long)]
        kind: String,
    },
    /// Monte-Carlo simulations (clt | lemma5 | xsum).
    Simulate {
        model: String,
        #[arg(long)]
        r: Option<u32>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        /// Comma-separated s grid for xsum.
        #[arg(long)]
        s: Option<String>,
    },
    /// Validate and persist a newform coefficient file.
    Ingest { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    lfunc::exec::set_workers(cli.workers);
    let cfg = match &cli.config {
        Some(path) => match Config::from_file(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("config error: {e}");
                return ExitCode::from(1);
            }
        },
        None => Config::default(),
    };
    match run(&cli, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if is_validation(&e) { 1 } else { 2 };
            ExitCode::from(code)
        }
    }
}

fn is_validation(e: &anyhow::Error) -> bool {
    if let Some(se) = e.downcast_ref::<scan::ScanError>() {
        return matches!(
            se,
            scan::ScanError::UnknownScan(_)
                | scan::ScanError::Unsupported(_)
                | scan::ScanError::Modular(_)
                | scan::ScanError::Io(_)
        );
    }
    e.downcast_ref::<ValidationError>().is_some()
}

#[derive(Debug)]
struct ValidationError(String);

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationError(msg.into()).into()
}

fn run(cli: &Cli, cfg: &Config) -> anyhow::Result<()> {
    let store = Store::new(&cli.store);
    match &cli.cmd {
        Cmd::Scan { family, x, file, r, a, b } => {
            let req = build_request(family, *x, file, *r, a, b)?;
            let handle = store.scan(&req, cfg, cli.seed)?;
            println!(
                "scan {} -> {} ({})",
                family,
                handle.dir.display(),
                if handle.cached { "cached" } else { "computed" }
            );
            for (k, v) in &handle.manifest.counts {
                println!("  {k}: {v}");
            }
            Ok(())
        }
        Cmd::Verdicts { scan: dir } => {
            store.load_verified(dir).context("loading scan")?;
            let report = scan::run_verdicts(&store, dir, cfg)?;
            println!("verdicts written to {}/verdicts", dir.display());
            for f in &report.fractions {
                println!(
                    "  decade {:>12}: {}/{} not positive-definite",
                    f.decade_start, f.not_positive_definite, f.members
                );
            }
            for (parity, agree, total) in &report.bridge {
                println!("  bridge parity {parity}: {agree}/{total} agree");
            }
            if !report.bridge_mismatches.is_empty() {
                println!("  BRIDGE MISMATCHES: {:?}", report.bridge_mismatches);
            }
            Ok(())
        }
        Cmd::Report { scan: dir, kind } => {
            store.load_verified(dir).context("loading scan")?;
            let agg = store.aggregates(dir)?;
            let csv = match kind.as_str() {
                "moments" => scan::report_elliptic_moments(&agg)?,
                "independence" => scan::report_elliptic_independence(&agg)?,
                "correlation" => scan::report_elliptic_correlation(&agg)?,
                "ks" => scan::report_dihedral_ks(&agg)?,
                "densities" => scan::report_dihedral_densities(&agg)?,
                other => return Err(invalid(format!("unknown report kind '{other}'"))),
            };
            let mut w = scan::ReportWriter::new(&cli.out)?;
            let name = format!("report-{kind}.csv");
            w.write(&name, &csv)?;
            let dir = w.finish()?;
            println!("wrote {}/{name}", dir.display());
            Ok(())
        }
        Cmd::Simulate { model, r, trials, delta, s } => {
            let trials = trials.unwrap_or(cfg.random_trials);
            let mut w = scan::ReportWriter::new(&cli.out)?;
            let name = match model.as_str() {
                "clt" => {
                    let csv = scan::simulate_clt(r.unwrap_or(30), trials, cli.seed)?;
                    w.write("simulate-clt.csv", &csv)?;
                    "simulate-clt.csv"
                }
                "lemma5" => {
                    let csv = scan::simulate_lemma5(
                        delta.unwrap_or(0.5),
                        &[10, 20, 30, 50],
                        trials,
                        cli.seed,
                    );
                    w.write("simulate-lemma5.csv", &csv)?;
                    "simulate-lemma5.csv"
                }
                "xsum" => {
                    let grid: Vec<f64> = s
                        .as_deref()
                        .unwrap_or("0.6,0.7,0.8")
                        .split(',')
                        .map(|t| t.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| invalid(format!("bad s grid: {e}")))?;
                    let csv = scan::simulate_xsum(
                        MeasureFamily::Dihedral,
                        &grid,
                        trials,
                        cli.seed,
                        cfg.random_v_cap,
                    )?;
                    w.write("simulate-xsum.csv", &csv)?;
                    "simulate-xsum.csv"
                }
                other => return Err(invalid(format!("unknown model '{other}'"))),
            };
            let dir = w.finish()?;
            println!("wrote {}/{name}", dir.display());
            Ok(())
        }
        Cmd::Ingest { file } => {
            let req = ScanRequest::ModularIngest { csv: file.clone() };
            let handle = store.scan(&req, cfg, cli.seed)?;
            println!(
                "ingested {} -> {} ({})",
                file.display(),
                handle.dir.display(),
                if handle.cached { "cached" } else { "validated" }
            );
            Ok(())
        }
    }
}

fn build_request(
    family: &str,
    x: Option<u64>,
    file: &Option<PathBuf>,
    r: Option<u32>,
    a: &Option<String>,
    b: &Option<String>,
) -> anyhow::Result<ScanRequest> {
    let need_x = || x.ok_or_else(|| invalid(format!("family '{family}' needs --x")));
    match family {
        "dirichlet" => {
            let x = need_x()?;
            if x < 3 {
                return Err(invalid("dirichlet window needs --x >= 3"));
            }
            Ok(ScanRequest::Dirichlet { x })
        }
        "dihedral" => Ok(ScanRequest::Dihedral { x: need_x()? }),
        "elliptic" => {
            let x = need_x()?;
            if x <= 27 {
                return Err(invalid("empty elliptic window: the smallest height is 27"));
            }
            Ok(ScanRequest::Elliptic { x })
        }
        "elliptic-1param" => {
            let parse_poly = |s: &Option<String>, what: &str| -> anyhow::Result<Vec<i64>> {
                s.as_deref()
                    .ok_or_else(|| invalid(format!("elliptic-1param needs --{what}")))?
                    .split(',')
                    .map(|t| t.trim().parse::<i64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| invalid(format!("bad --{what}: {e}")))
            };
            Ok(ScanRequest::Elliptic1Param {
                a: parse_poly(a, "a")?,
                b: parse_poly(b, "b")?,
                x: need_x()?,
            })
        }
        "modular-ingest" => Ok(ScanRequest::ModularIngest {
            csv: file.clone().ok_or_else(|| invalid("modular-ingest needs --file"))?,
        }),
        "sym" => Ok(ScanRequest::Sym {
            csv: file.clone().ok_or_else(|| invalid("sym needs --file"))?,
            r: r.unwrap_or(2),
        }),
        other => Err(invalid(format!("unknown family '{other}'"))),
    }
}
