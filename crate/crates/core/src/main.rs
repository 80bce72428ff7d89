use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mhcdma::experiment::{emit, load_rows, run_experiment, scenario_for, summarize, ExperimentSpec, Format, Mode};
use mhcdma::network::{GainModel, NetworkConfig};
use mhcdma::receivers::ReceiverKind;
use mhcdma::validate::run_checks;

#[derive(Parser)]
#[command(name = "mhcdma", version, about = "Energy-efficient power control experiments for multi-hop DS-CDMA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write result files.
    Run {
        /// JSON experiment spec; unspecified fields take the defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
        #[arg(long, default_value = "csv")]
        format: Format,
        /// Comma-separated receivers: mf,de,mmse.
        #[arg(long, value_delimiter = ',')]
        receivers: Option<Vec<ReceiverKind>>,
        /// Comma-separated modes: nc,so.
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<Mode>>,
        /// Comma-separated processing gains.
        #[arg(long, value_delimiter = ',')]
        gains: Option<Vec<usize>>,
        #[arg(long)]
        repetitions: Option<usize>,
        /// Treat the Rayleigh law as describing power gains instead of amplitudes.
        #[arg(long)]
        power_gains: bool,
    },
    /// Print the utility and SINR tables for a result file (CSV or JSON).
    Summarize {
        input: PathBuf,
        /// Also write gnuplot data to this path.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Run the built-in oracle checks on small random scenarios.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write one generated scenario as JSON.
    Scenario {
        #[arg(long, default_value_t = 100)]
        nodes: usize,
        #[arg(long, default_value_t = 100)]
        gain: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> mhcdma::Result<bool> {
    match cli.command {
        Command::Run {
            spec,
            seed,
            out_dir,
            format,
            receivers,
            modes,
            gains,
            repetitions,
            power_gains,
        } => {
            let mut spec = match spec {
                Some(path) => ExperimentSpec::load(&path)?,
                None => ExperimentSpec::default(),
            };
            if let Some(s) = seed {
                spec.master_seed = s;
            }
            if let Some(r) = receivers {
                spec.receivers = r;
            }
            if let Some(m) = modes {
                spec.modes = m;
            }
            if let Some(g) = gains {
                spec.processing_gains = g;
            }
            if let Some(r) = repetitions {
                spec.repetitions = r;
            }
            if power_gains {
                spec.network.gain_model = GainModel::PowerRayleigh;
            }
            let out_dir = spec.out_dir.clone().unwrap_or(out_dir);
            let rows = run_experiment(&spec)?;
            for path in emit(&rows, &spec, format, &out_dir)? {
                println!("wrote {}", path.display());
            }
            print!("{}", summarize(&rows)?.render());
            Ok(true)
        }
        Command::Summarize { input, plot } => {
            let rows = load_rows(&input)?;
            let summary = summarize(&rows)?;
            print!("{}", summary.render());
            if let Some(path) = plot {
                std::fs::write(&path, summary.plot_data()).map_err(|e| mhcdma::Error::Io { path, source: e })?;
            }
            Ok(true)
        }
        Command::Validate { seed } => {
            let checks = run_checks(seed)?;
            let mut ok = true;
            for c in &checks {
                println!("{} {:<40} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            Ok(ok)
        }
        Command::Scenario { nodes, gain, seed, out } => {
            let cfg = NetworkConfig {
                node_count: nodes,
                seed,
                ..Default::default()
            };
            let sc = scenario_for(&cfg, seed, gain)?;
            match out {
                Some(path) => sc.save(&path)?,
                None => println!("{}", sc.to_json()?),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
