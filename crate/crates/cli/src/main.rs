//! Deterministic experiment runner: every subcommand writes machine-readable
//! outputs plus a manifest with the resolved configuration and its hash.
//!
//! Exit codes: 0 success, 2 validation error, 3 violated numerical invariant,
//! 64 unknown subcommand.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use config::ExperimentConfig;
use output::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "schwinger", version, about = "Z_n lattice Schwinger model pipeline")]
struct Cli {
    /// TOML experiment configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides config and SCHWINGER_OUT_DIR).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Cap the worker thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Dense evolution, no Trotterization, no noise.
    Exact,
    /// Noiseless compiled circuits.
    Trotter,
    /// Circuits under the configured noise model.
    Noisy,
    /// Noisy circuits corrected by twirled readout extinction.
    Trex,
    /// Noisy circuits corrected by zero-noise extrapolation.
    Zne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SearchMode {
    Brute,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhiConvention {
    /// Ancilla phase gate diag(1, e^{i phi}); phi = pi/2 reads the real part
    /// of the correlator.
    Standard,
    /// Compile diag(1, e^{-i phi}) instead; the assembly compensates, so
    /// results must agree with the standard convention.
    Conjugate,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enumerate the gauge-invariant basis as CSV.
    Basis {
        #[arg(long)]
        num_sites: Option<usize>,
        #[arg(long)]
        group_order: Option<usize>,
        #[arg(long)]
        filling: Option<usize>,
    },
    /// Dump symmetry-sector dimensions and matrices as JSON.
    Sectors {
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Pauli coefficient tables of the embedded Hamiltonian and density.
    Decompose {
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        /// paper | identity | brute | greedy | comma-separated 1-indexed list
        #[arg(long)]
        permutation: Option<String>,
    },
    /// Search for an embedding minimizing full-weight Pauli terms.
    Optimize {
        #[arg(long, value_enum, default_value = "brute")]
        mode: SearchMode,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        num_sites: Option<usize>,
        #[arg(long)]
        group_order: Option<usize>,
    },
    /// Dump the compiled Trotter circuits as text.
    Trotter {
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, default_value = "1")]
        steps: usize,
    },
    /// Particle-density time series.
    DensityEvolve {
        #[arg(long, value_enum, default_value = "exact")]
        method: Method,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// 0 selects expectation-value mode.
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated p1,p2,p3,readout_flip.
        #[arg(long)]
        noise: Option<String>,
    },
    /// Lesser Green function over the time grid.
    Green {
        /// Earlier time(s); defaults to the configured s values.
        #[arg(long, value_delimiter = ',')]
        s: Option<Vec<f64>>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, value_enum, default_value = "trotter")]
        method: Method,
        #[arg(long, value_enum, default_value = "standard")]
        phi_convention: PhiConvention,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        noise: Option<String>,
    },
    /// Compare exact, noisy, T-REx and ZNE density evolution.
    MitigateDemo {
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        noise: Option<String>,
    },
    /// Regenerate the coefficient tables, search curve, density and
    /// correlator data sets.
    ReproducePaper {
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_noise_override(config: &mut ExperimentConfig, noise: &Option<String>) -> anyhow::Result<()> {
    if let Some(spec) = noise {
        let parts: Vec<&str> = spec.split(',').collect();
        if parts.len() != 4 {
            anyhow::bail!("--noise expects p1,p2,p3,readout_flip");
        }
        let values: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| anyhow::anyhow!("--noise: {e}"))?;
        config.noise.p1 = values[0];
        config.noise.p2 = values[1];
        config.noise.p3 = values[2];
        config.noise.readout_flip = values[3];
    }
    Ok(())
}

fn parse_permutation_override(
    config: &mut ExperimentConfig,
    permutation: &Option<String>,
) -> anyhow::Result<()> {
    if let Some(text) = permutation {
        match text.as_str() {
            "paper" | "identity" | "brute" | "greedy" => config.embedding.mode = text.clone(),
            list => {
                let values: Vec<usize> = list
                    .split(',')
                    .map(|p| p.trim().parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| anyhow::anyhow!("--permutation: {e}"))?;
                config.embedding.mode = "fixed".into();
                config.embedding.fixed_permutation = Some(values);
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global().ok();
    }
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };

    // Apply per-command overrides onto the resolved config.
    let command_name;
    match &cli.command {
        Command::Basis { num_sites, group_order, filling } => {
            command_name = "basis";
            if let Some(n) = num_sites {
                config.lattice.num_sites = *n;
            }
            if let Some(n) = group_order {
                config.lattice.group_order = *n;
            }
            if filling.is_some() {
                config.lattice.filling = *filling;
            }
        }
        Command::Sectors { xi, mu } => {
            command_name = "sectors";
            if let Some(v) = xi {
                config.couplings.xi = *v;
            }
            if let Some(v) = mu {
                config.couplings.mu = *v;
            }
        }
        Command::Decompose { xi, mu, permutation } => {
            command_name = "decompose";
            if let Some(v) = xi {
                config.couplings.xi = *v;
            }
            if let Some(v) = mu {
                config.couplings.mu = *v;
            }
            parse_permutation_override(&mut config, permutation)?;
        }
        Command::Optimize { restarts, seed, num_sites, group_order, .. } => {
            command_name = "optimize";
            if let Some(v) = restarts {
                config.embedding.restarts = *v;
            }
            if let Some(v) = seed {
                config.embedding.seed = *v;
            }
            if let Some(n) = num_sites {
                config.lattice.num_sites = *n;
            }
            if let Some(n) = group_order {
                config.lattice.group_order = *n;
            }
        }
        Command::Trotter { dt, xi, mu, .. } => {
            command_name = "trotter";
            if let Some(v) = dt {
                config.trotter.dt = *v;
            }
            if let Some(v) = xi {
                config.couplings.xi = *v;
            }
            if let Some(v) = mu {
                config.couplings.mu = *v;
            }
        }
        Command::DensityEvolve { t_max, dt, shots, seed, noise, .. } => {
            command_name = "density-evolve";
            if let Some(v) = t_max {
                config.run.t_max = *v;
            }
            if let Some(v) = dt {
                config.trotter.dt = *v;
            }
            if let Some(v) = shots {
                config.run.shots = *v;
            }
            if let Some(v) = seed {
                config.run.seed = *v;
            }
            parse_noise_override(&mut config, noise)?;
        }
        Command::Green { t_max, shots, seed, dt, noise, .. } => {
            command_name = "green";
            if let Some(v) = t_max {
                config.run.t_max = *v;
            }
            if let Some(v) = shots {
                config.run.shots = *v;
            }
            if let Some(v) = seed {
                config.run.seed = *v;
            }
            if let Some(v) = dt {
                config.trotter.dt = *v;
            }
            parse_noise_override(&mut config, noise)?;
        }
        Command::MitigateDemo { t_max, shots, seed, noise } => {
            command_name = "mitigate-demo";
            if let Some(v) = t_max {
                config.run.t_max = *v;
            }
            if let Some(v) = shots {
                config.run.shots = *v;
            }
            if let Some(v) = seed {
                config.run.seed = *v;
            }
            parse_noise_override(&mut config, noise)?;
        }
        Command::ReproducePaper { shots, seed } => {
            command_name = "reproduce-paper";
            if let Some(v) = shots {
                config.run.shots = *v;
            }
            if let Some(v) = seed {
                config.run.seed = *v;
            }
        }
    }
    config.validate()?;

    // Precedence for the output directory: flag, then environment, then config.
    let out_root = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os("SCHWINGER_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&config.output.dir));
    let mut out = OutputDir::create(&out_root)?;

    match &cli.command {
        Command::Basis { .. } => commands::cmd_basis(&config, &mut out),
        Command::Sectors { .. } => commands::cmd_sectors(&config, &mut out),
        Command::Decompose { .. } => commands::cmd_decompose(&config, &mut out),
        Command::Optimize { mode, .. } => commands::cmd_optimize(&config, *mode, &mut out),
        Command::Trotter { steps, .. } => commands::cmd_trotter(&config, *steps, &mut out),
        Command::DensityEvolve { method, .. } => {
            commands::cmd_density_evolve(&config, *method, &mut out)
        }
        Command::Green { method, s, phi_convention, .. } => {
            let s_values = s.clone().unwrap_or_else(|| config.run.s_values.clone());
            commands::cmd_green(&config, *method, &s_values, *phi_convention, &mut out)
        }
        Command::MitigateDemo { .. } => commands::cmd_mitigate_demo(&config, &mut out),
        Command::ReproducePaper { .. } => commands::cmd_reproduce_paper(&config, &mut out),
    }
    .map(|_| {
        let _ = command_name;
    })
}

fn exit_code_for(error: &anyhow::Error) -> u8 {
    if let Some(core_error) = error.downcast_ref::<schwinger_core::Error>() {
        if core_error.is_validation() {
            2
        } else {
            3
        }
    } else if error.downcast_ref::<std::io::Error>().is_some() {
        1
    } else {
        // Configuration and flag parsing problems.
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(error) => {
            let code = match error.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand | ErrorKind::UnknownArgument
                    if matches!(error.kind(), ErrorKind::InvalidSubcommand) =>
                {
                    64
                }
                _ => 2,
            };
            let _ = error.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(exit_code_for(&error))
        }
    }
}
