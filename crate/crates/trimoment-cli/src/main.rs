//! Command-line front end for the trimoment library.
//!
//! Grammar: `trimoment <module> <verb> [--flags]`, plus the cross-cutting
//! `trimoment verify`.  Runs are deterministic: stochastic subcommands seed
//! an explicit counter-based generator (`--seed`, default 42), and the only
//! parallel region is the simulation replicate loop, whose width is capped
//! by the `TRIMOMENT_THREADS` environment variable without affecting the
//! numbers produced.
//!
//! Exit codes: 0 on success, 2 on validation errors (bad flags, malformed
//! files, exceeded compute budgets), 1 on numerical failures and on failed
//! verification criteria.

mod commands;
mod config;
mod emit;

use clap::{Parser, Subcommand};

use commands::*;

#[derive(Debug, Parser)]
#[command(
    name = "trimoment",
    version,
    about = "Limiting moments, deviations, and fluctuations of tridiagonal and band random matrices",
    propagate_version = true
)]
struct Cli {
    /// Read missing flags from FILE (flat key=value lines, '#' comments);
    /// explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<std::path::PathBuf>,

    /// Print the effective configuration as key=value lines and exit.
    #[arg(long, global = true)]
    dump_config: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Enumerate the lattice-path families behind the moment formulas.
    Paths {
        #[command(subcommand)]
        verb: PathsVerb,
    },
    /// Limiting moments, their inversion, deviations, and mixed moments.
    Moments {
        #[command(subcommand)]
        verb: MomentsVerb,
    },
    /// Trace-fluctuation covariances and linear-statistic variances.
    Fluct {
        #[command(subcommand)]
        verb: FluctVerb,
    },
    /// Limiting spectral densities: evaluation and sampling.
    Density {
        #[command(subcommand)]
        verb: DensityVerb,
    },
    /// Seeded Monte Carlo simulation of the matrix ensembles.
    Sim {
        #[command(subcommand)]
        verb: SimVerb,
    },
    /// Run the predicted-vs-empirical regression suite.
    Verify(VerifyArgs),
}

impl Cli {
    fn doc(&self) -> Vec<(String, String)> {
        match &self.cmd {
            Cmd::Paths {
                verb: PathsVerb::Enumerate(a),
            } => a.doc(),
            Cmd::Moments { verb } => match verb {
                MomentsVerb::Limit(a) => a.doc(),
                MomentsVerb::Invert(a) => a.doc(),
                MomentsVerb::Deviation(a) => a.doc(),
                MomentsVerb::Mixed(a) => a.doc(),
            },
            Cmd::Fluct { verb } => match verb {
                FluctVerb::D(a) => a.doc(),
                FluctVerb::Sigma(a) => a.doc(),
            },
            Cmd::Density { verb } => match verb {
                DensityVerb::Eval(a) => a.doc(),
                DensityVerb::Sample(a) => a.doc(),
            },
            Cmd::Sim { verb } => match verb {
                SimVerb::Moments(a) => a.doc(),
                SimVerb::Fluct(a) => a.doc(),
                SimVerb::Band(a) => a.doc(),
                SimVerb::Sample(a) => a.doc(),
            },
            Cmd::Verify(a) => a.doc(),
        }
    }

    fn run(&self) -> trimoment::Result<i32> {
        match &self.cmd {
            Cmd::Paths {
                verb: PathsVerb::Enumerate(a),
            } => run_paths_enumerate(a),
            Cmd::Moments { verb } => match verb {
                MomentsVerb::Limit(a) => run_moments_limit(a),
                MomentsVerb::Invert(a) => run_moments_invert(a),
                MomentsVerb::Deviation(a) => run_moments_deviation(a),
                MomentsVerb::Mixed(a) => run_moments_mixed(a),
            },
            Cmd::Fluct { verb } => match verb {
                FluctVerb::D(a) => run_fluct_d(a),
                FluctVerb::Sigma(a) => run_fluct_sigma(a),
            },
            Cmd::Density { verb } => match verb {
                DensityVerb::Eval(a) => run_density_eval(a),
                DensityVerb::Sample(a) => run_density_sample(a),
            },
            Cmd::Sim { verb } => match verb {
                SimVerb::Moments(a) => run_sim_moments(a),
                SimVerb::Fluct(a) => run_sim_fluct(a),
                SimVerb::Band(a) => run_sim_band(a),
                SimVerb::Sample(a) => run_sim_sample(a),
            },
            Cmd::Verify(a) => run_verify(a),
        }
    }
}

fn main() {
    std::process::exit(cli_main());
}

fn cli_main() -> i32 {
    // Cap the replicate pool before any parallel work can run.
    if let Ok(raw) = std::env::var("TRIMOMENT_THREADS") {
        match raw.trim().parse::<usize>() {
            Ok(threads) if threads >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
            _ => {
                eprintln!("error: TRIMOMENT_THREADS must be a positive integer, got '{raw}'");
                return 2;
            }
        }
    }
    let argv = match config::expand(std::env::args().collect()) {
        Ok(argv) => argv,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        // clap exits 2 on usage errors and 0 for --help/--version.
        Err(e) => e.exit(),
    };
    if cli.dump_config {
        print!("{}", config::render(&cli.doc()));
        return 0;
    }
    match cli.run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                trimoment::Error::Numerical(_) => 1,
                _ => 2,
            }
        }
    }
}
