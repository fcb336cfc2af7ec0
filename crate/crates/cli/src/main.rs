use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tbri_cli::config::{ExperimentConfig, Format, Overrides};
use tbri_cli::figure::{figure1, Figure1Params};
use tbri_cli::output::{verify, FileStatus};
use tbri_cli::{experiment, sweep, CliError, Result};

/// Survival probability of excited states in the two-body random
/// interaction model: exact ensembles, decay-law fits and plot data.
///
/// Every flag can also be set through a TBRI_* environment variable
/// (TBRI_CONFIG, TBRI_SEED, TBRI_OUT, TBRI_REALIZATIONS, TBRI_THREADS,
/// TBRI_FORMAT). Exit codes: 2 config, 3 numerical, 4 i/o, 5 verification.
#[derive(Parser)]
#[command(name = "tbri", version)]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "TBRI_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one ensemble experiment.
    Run(RunArgs),
    /// Repeat an experiment over several interaction strengths.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Interaction strengths, comma separated.
        #[arg(long = "v0", value_delimiter = ',', required = true, num_args = 1..)]
        v0: Vec<f64>,
    },
    /// Plot data for the schematic decay curves.
    Figure1 {
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 1.2)]
        delta_e: f64,
        #[arg(long, default_value_t = 1.5)]
        t_max: f64,
        #[arg(long, default_value_t = 301)]
        points: usize,
        #[arg(long, env = "TBRI_OUT", default_value = "figure1")]
        out: PathBuf,
    },
    /// Re-hash every file recorded in DIR/manifest.json.
    Verify { dir: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, env = "TBRI_CONFIG")]
    config: PathBuf,
    #[arg(long, env = "TBRI_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "TBRI_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "TBRI_REALIZATIONS")]
    realizations: Option<u64>,
    #[arg(long, env = "TBRI_FORMAT")]
    format: Option<Format>,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::load(&self.config)?;
        config.apply(&Overrides {
            seed: self.seed,
            realizations: self.realizations,
            out: self.out.clone(),
            format: self.format,
        })?;
        Ok(config)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |x| format!("{x:.4}"))
}

fn run(config: &ExperimentConfig) -> Result<()> {
    let dir = config.out_dir();
    let summary = experiment::run(config)?;
    let e = &summary.ensemble;
    println!(
        "run: {} states, regime {}, Gamma0/Delta_E = {}",
        e.states,
        e.regime.label(),
        opt(e.gamma0_over_delta_e)
    );
    println!(
        "  Delta_E^2: theory {:.4}, mean {:.4}; W_inf*N_pc/3 = {}",
        e.delta_e_sq_theory,
        e.delta_e_sq_mean,
        opt(e.saturation_ratio_mean)
    );
    if let Some(d) = &e.decay {
        println!(
            "  Gaussian-window Delta_E^2 fit {:.4}; tail: {}",
            d.delta_sq_fit, d.tail_status
        );
    }
    println!(
        "  wrote {} ({} data files)",
        dir.display(),
        summary.files.len()
    );
    Ok(())
}

fn run_sweep(config: &ExperimentConfig, v0: &[f64]) -> Result<()> {
    let dir = config.out_dir();
    let report = sweep::sweep(config, v0, &dir)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for p in &report.points {
        println!(
            "v0 = {}: {} (Gamma0/Delta_E = {})",
            p.v0,
            p.regime.map_or(p.status.as_str(), |r| r.label()),
            opt(p.gamma0_over_delta_e)
        );
    }
    println!("wrote {}", dir.display());
    match report.failures() {
        0 => Ok(()),
        n => Err(CliError::Numeric(format!(
            "{n} sweep point(s) failed; see sweep.csv"
        ))),
    }
}

fn run_verify(dir: &Path) -> Result<()> {
    let report = verify(dir)?;
    let mut bad = 0;
    for (path, status) in &report {
        match status {
            FileStatus::Ok => println!("ok       {}", path.display()),
            FileStatus::Missing => {
                bad += 1;
                println!("missing  {}", path.display());
            }
            FileStatus::Changed { .. } => {
                bad += 1;
                println!("changed  {}", path.display());
            }
        }
    }
    if bad > 0 {
        return Err(CliError::Verify(format!(
            "{bad} of {} files do not match",
            report.len()
        )));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Run(args) => run(&args.load()?),
        Command::Sweep { run, v0 } => run_sweep(&run.load()?, &v0),
        Command::Figure1 {
            gamma,
            delta_e,
            t_max,
            points,
            out,
        } => {
            let s = figure1(
                Figure1Params {
                    gamma,
                    delta_e,
                    t_max,
                    points,
                },
                &out,
            )?;
            println!("t_c = {:.4}, t_c_half = {:.4}", s.t_c, s.t_c_half);
            println!("note: {}", s.note);
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Verify { dir } => run_verify(&dir),
    })
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tbri: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
