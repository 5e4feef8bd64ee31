//! `resonorm`: Diophantine tables, periodic approximations, normal forms,
//! stability runs, splitting computations and the acceptance suite.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use resonorm::ErrorKind;

#[derive(Parser)]
#[command(name = "resonorm", version, about = "Resonant normal forms and their numerical experiments")]
struct Cli {
    /// Worker threads (default: all cores; 1 for serial runs).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Offset for the seeds of randomized corpora.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Psi staircase of a frequency as CSV (q, psi, witness).
    Psi {
        #[arg(long)]
        omega: String,
        #[arg(long)]
        qmax: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Periodic approximations at a given Q as JSON.
    Approx {
        #[arg(long)]
        omega: String,
        #[arg(long = "Q")]
        q: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normal form of l_omega + f, with f read from a polynomial file.
    Nf {
        #[arg(long)]
        omega: String,
        /// Perturbation f in the polynomial text format.
        #[arg(long)]
        ham: PathBuf,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        kappa: u32,
        /// Fixed Q; the default is Q = Delta*(1 / |f|_{C^k}).
        #[arg(long = "Q")]
        q: Option<f64>,
        /// Record threshold violations instead of stopping.
        #[arg(long)]
        record: bool,
        /// TOML file with a [normal_form] section.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exit times of the projected action drift over a list of eps.
    Stab {
        #[arg(long)]
        config: PathBuf,
    },
    /// Stable and unstable manifolds and their splitting matrix.
    Split {
        #[arg(long)]
        config: PathBuf,
    },
    /// Runs the acceptance criteria (all of them unless some are named).
    Check {
        #[arg(long = "criterion")]
        criteria: Vec<u32>,
        /// Also write the outcomes as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<resonorm::Error>() {
        return match e.kind() {
            ErrorKind::Input => 2,
            ErrorKind::Threshold => 3,
            ErrorKind::Numerical => 4,
        };
    }
    if err.downcast_ref::<config::ConfigError>().is_some() {
        return 2;
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Psi { omega, qmax, out } => commands::psi(omega, *qmax, out.as_deref()),
        Command::Approx { omega, q, out } => commands::approx(omega, *q, out.as_deref()),
        Command::Nf {
            omega,
            ham,
            k,
            kappa,
            q,
            record,
            config,
            out,
        } => commands::nf(&commands::NfArgs {
            omega,
            ham,
            k: *k,
            kappa: *kappa,
            q: *q,
            record: *record,
            config: config.as_deref(),
            out,
        }),
        Command::Stab { config } => commands::stab(config),
        Command::Split { config } => commands::split(config),
        Command::Check { criteria, json } => commands::check(criteria, cli.seed, json.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
