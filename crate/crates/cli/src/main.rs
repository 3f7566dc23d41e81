use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qpeh_cli::config::{self, Command, Format, PartialConfig, Protocol, Sampling, TimeRatio};
use qpeh_cli::run::run;

/// Entanglement Hamiltonians after a free-fermion quench: exact extraction
/// and the quasiparticle prediction.
///
/// Exit codes: 0 success, 1 invalid input or failure, 2 a check exceeded its threshold.
#[derive(Parser)]
#[command(name = "qpeh", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Coupling profiles h[j][j+z] versus prediction at several times, plus the stationary state.
    Figure1(RunArgs),
    /// Odd-distance profiles at one time, plus stationary couplings against distance.
    Figure2(RunArgs),
    /// Exact and quasiparticle Rényi entropies over a time grid.
    Entropy(RunArgs),
    /// Stationary couplings against the central row of the stationary-state Hamiltonian.
    Gge(RunArgs),
    /// Factorization of the kernels for a linear band (exit 2 on breach).
    CftCheck(RunArgs),
    /// Closed-form dimer correlations against brute-force ring evolution (exit 2 on breach).
    OracleCheck(RunArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// TOML file with any of the settings below; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    protocol: Option<Protocol>,
    /// Subsystem length.
    #[arg(long, allow_negative_numbers = true)]
    ell: Option<i64>,
    /// Times as t/ℓ, comma separated; `inf` selects the stationary state.
    #[arg(long = "time-ratio", value_delimiter = ',', allow_negative_numbers = true)]
    time_ratio: Option<Vec<TimeRatio>>,
    /// Distances z, comma separated.
    #[arg(long, value_delimiter = ',')]
    z: Option<Vec<usize>>,
    /// Spectral cutoff on correlation eigenvalues.
    #[arg(long)]
    cutoff: Option<f64>,
    /// Fraction of the interval excluded at each end when comparing.
    #[arg(long)]
    exclusion: Option<f64>,
    /// Absolute quadrature tolerance.
    #[arg(long = "quad-tol")]
    quad_tol: Option<f64>,
    /// Rényi indices, comma separated.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Inverse temperatures for cft-check, comma separated.
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    /// Mode speed for cft-check.
    #[arg(long)]
    velocity: Option<f64>,
    /// Ring size for oracle-check.
    #[arg(long)]
    ring: Option<usize>,
    /// Kernel position used for the pair (j, j+z).
    #[arg(long, value_enum)]
    sampling: Option<Sampling>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (0: automatic). Outputs are identical for any value.
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn flags(&self) -> PartialConfig {
        PartialConfig {
            protocol: self.protocol,
            ell: self.ell,
            time_ratios: self.time_ratio.clone(),
            z_list: self.z.clone(),
            cutoff: self.cutoff,
            exclusion: self.exclusion,
            quad_tol: self.quad_tol,
            alpha_list: self.alpha.clone(),
            beta_list: self.beta.clone(),
            velocity: self.velocity,
            ring: self.ring,
            sampling: self.sampling,
            output_dir: self.out.clone(),
            format: self.format,
            threads: self.threads,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (command, args) = match &cli.command {
        Sub::Figure1(a) => (Command::Figure1, a),
        Sub::Figure2(a) => (Command::Figure2, a),
        Sub::Entropy(a) => (Command::Entropy, a),
        Sub::Gge(a) => (Command::Gge, a),
        Sub::CftCheck(a) => (Command::CftCheck, a),
        Sub::OracleCheck(a) => (Command::OracleCheck, a),
    };
    let resolved = args
        .config
        .as_deref()
        .map(PartialConfig::from_file)
        .transpose()
        .and_then(|file| config::resolve(command, file, args.flags()));
    let cfg = match resolved {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(command, &cfg) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.breach {
                eprintln!("{}: threshold exceeded", command.name());
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
