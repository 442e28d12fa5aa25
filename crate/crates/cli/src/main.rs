//! Batch front-end: compile netlists, simulate models and their stochastic
//! dilations, and emit verification artifacts (JSON reports, CSV tables).
//!
//! Exit codes: 0 all requested checks pass, 1 a check failed its tolerance,
//! 2 input parse error, 3 I/O error.

mod run;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "mrcircuit",
    about = "Stochastic models of resistive and memristive circuits",
    after_help = "Values from --config override command-line flags. The default \
                  output directory is $MRCIRCUIT_OUT, falling back to ./out."
)]
pub struct Cli {
    /// JSON config file whose entries override flags of the same name.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads (default: available parallelism). Results do not
    /// depend on the thread count.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    EulerMaruyama,
    Heun,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DilationKind {
    /// Deterministic circuit flow (no noise).
    Circuit,
    Wiener,
    Symplectic,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a netlist and emit the phase-space model as JSON.
    Compile { input: PathBuf },

    /// Integrate trajectories and write them as CSV.
    Simulate {
        /// Netlist (.net) or model JSON.
        input: PathBuf,
        #[arg(long, alias = "dilation", value_enum, default_value = "circuit")]
        kind: DilationKind,
        #[arg(long, value_enum, default_value = "heun")]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, alias = "T", default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, alias = "n-paths", default_value_t = 1)]
        paths: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        save_stride: usize,
        #[arg(long, default_value_t = 1.0)]
        q0: f64,
        #[arg(long, default_value_t = 1.0)]
        p0: f64,
        /// Dilation constants (wiener: c, ell; symplectic: gamma-noise).
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma_noise: f64,
    },

    /// Build a canonical dilation; write its JSON form and a residual report.
    Dilate {
        input: PathBuf,
        #[arg(long, alias = "dilation", value_enum, default_value = "wiener")]
        kind: DilationKind,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma_noise: f64,
    },

    /// Bracket, drift and covariation certificates for a dilation.
    Verify {
        input: PathBuf,
        #[arg(long, alias = "dilation", value_enum, default_value = "wiener")]
        kind: DilationKind,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        #[arg(long, alias = "T", default_value_t = 1.0)]
        t_end: f64,
        /// Paths for the bracket checks.
        #[arg(long, alias = "n-paths", default_value_t = 100)]
        paths: u64,
        /// Paths for the binned drift/covariation estimates.
        #[arg(long, default_value_t = 20_000)]
        estimator_paths: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        q0: f64,
        #[arg(long, default_value_t = 1.0)]
        p0: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma_noise: f64,
    },

    /// Quantum drift-identity report and a master-equation expectation run.
    Quantum {
        input: PathBuf,
        #[arg(long, alias = "N", default_value_t = 40)]
        fock_dim: usize,
        /// Interior margin; defaults to fock_dim / 4.
        #[arg(long, alias = "m")]
        margin: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
        #[arg(long, alias = "T", default_value_t = 5.0)]
        t_end: f64,
        #[arg(long, default_value_t = 5e-3)]
        dt: f64,
        /// Coherent-state amplitude of the initial state.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },

    /// Hamiltonian approximation studies.
    #[command(subcommand)]
    Approx(ApproxCommand),
}

#[derive(Subcommand, Debug)]
pub enum ApproxCommand {
    /// Smooth-noise (piecewise-linear) approximation error table.
    Wz {
        input: PathBuf,
        /// Comma-separated refinement levels.
        #[arg(long, default_value = "8,16,32,64,128", value_delimiter = ',')]
        levels: Vec<usize>,
        #[arg(long, default_value_t = 8192)]
        base_steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Independent base paths per run; each error doubling must decay on
        /// at least 90% of them.
        #[arg(long, default_value_t = 50)]
        seed_count: u64,
        #[arg(long, default_value_t = 1.0)]
        q0: f64,
        #[arg(long, default_value_t = 0.5)]
        p0: f64,
    },
    /// Central-limit statistics of the thermal oscillator assembly.
    Clt {
        /// Oscillators per unit time.
        #[arg(long, default_value_t = 16)]
        rate: u32,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        #[arg(long, default_value = "gaussian")]
        marginal: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::run(cli) {
        Ok(all_pass) => {
            if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
