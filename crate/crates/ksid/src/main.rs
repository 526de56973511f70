//! `ksid`: sampling-period analysis and Koopman-based identification of
//! continuous-time dynamical systems.

mod commands;
mod config;
mod out;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use koopman_sid::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::UnknownSystem(_)
            | CoreError::BadParams { .. }
            | CoreError::MissingStateObservable(_)
            | CoreError::DuplicateBasis(_)
            | CoreError::ShapeMismatch(_) => CliError::Config(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "ksid",
    version,
    about = "Identify continuous-time systems from sampled data and analyze the critical sampling period"
)]
struct Cli {
    /// Override the RNG seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV and summary outputs.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for sweeps and sampling (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report the critical sampling period of a system or spectrum.
    CriticalPeriod {
        /// Builtin system name (rod, linear-spiral, fixed-point-cubic,
        /// limit-cycle, real-eig-triangular, nonpoly-rational or sys1..sys5).
        #[arg(long)]
        system: Option<String>,
        /// System parameter, e.g. --param a=0.1 (repeatable).
        #[arg(long = "param", value_parser = config::parse_param)]
        params: Vec<(String, f64)>,
        /// TOML system definition file instead of a builtin name.
        #[arg(long)]
        system_file: Option<PathBuf>,
        /// File with one `re,im` eigenvalue per line instead of a system.
        #[arg(long)]
        spectrum_file: Option<PathBuf>,
        /// Build the generator on a monomial dictionary of this degree when
        /// the system has no recorded principal eigenvalues.
        #[arg(long)]
        degree: Option<u32>,
        /// Also check whether this sampling period avoids aliasing.
        #[arg(long)]
        t_s: Option<f64>,
    },
    /// Sampling-period sweep: sample, lift, identify, and score per cell.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rotating-rod aliasing demonstration.
    AliasDemo {
        /// Radial growth rate of the rod.
        #[arg(long, default_value_t = 0.1)]
        a: f64,
        /// Angular velocity in rad/s.
        #[arg(long, default_value_t = 3.0)]
        omega: f64,
        /// Photo interval in seconds.
        #[arg(long)]
        t_s: f64,
        #[arg(long, default_value_t = 10)]
        n_photos: usize,
        /// Dense output rate in Hz.
        #[arg(long, default_value_t = 100.0)]
        fs: f64,
        /// Initial state, e.g. `1,0`.
        #[arg(long, value_parser = config::parse_state)]
        x0: Option<Vec<f64>>,
    },
    /// Dense true-vs-identified trajectories at selected periods.
    Predict {
        #[arg(long)]
        config: PathBuf,
        /// Sampling period (repeatable); defaults to the config grid.
        #[arg(long = "t-s")]
        t_s: Vec<f64>,
        #[arg(long, value_parser = config::parse_state)]
        x0: Option<Vec<f64>>,
        /// Prediction horizon in seconds.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// DFT spectral error of reconstructed states over the grid.
    Spectral {
        #[arg(long)]
        config: PathBuf,
    },
    /// Integrate a system and export the trajectory.
    Simulate {
        #[arg(long)]
        system: Option<String>,
        #[arg(long = "param", value_parser = config::parse_param)]
        params: Vec<(String, f64)>,
        #[arg(long)]
        system_file: Option<PathBuf>,
        #[arg(long, value_parser = config::parse_state)]
        x0: Vec<f64>,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 100.0)]
        fs: f64,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();

    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("ksid: cannot configure {jobs} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));

    let result = match cli.command {
        Command::CriticalPeriod {
            system,
            params,
            system_file,
            spectrum_file,
            degree,
            t_s,
        } => commands::critical_period::run(
            &out_dir,
            system,
            params,
            system_file,
            spectrum_file,
            degree,
            t_s,
        ),
        Command::Sweep { config } => commands::sweep::run(&out_dir, &config, cli.seed),
        Command::AliasDemo {
            a,
            omega,
            t_s,
            n_photos,
            fs,
            x0,
        } => commands::alias_demo::run(&out_dir, a, omega, t_s, n_photos, fs, x0),
        Command::Predict {
            config,
            t_s,
            x0,
            horizon,
        } => commands::predict::run(&out_dir, &config, cli.seed, t_s, x0, horizon),
        Command::Spectral { config } => commands::spectral::run(&out_dir, &config, cli.seed),
        Command::Simulate {
            system,
            params,
            system_file,
            x0,
            t_end,
            fs,
        } => commands::simulate::run(&out_dir, system, params, system_file, x0, t_end, fs),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, msg) = match &e {
                CliError::Config(m) => ("config error", m),
                CliError::Numeric(m) => ("numeric failure", m),
                CliError::Io(m) => ("io error", m),
            };
            eprintln!("ksid: {kind}: {msg}");
            ExitCode::from(e.exit_code())
        }
    }
}
