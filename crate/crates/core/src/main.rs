use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use ris_multicast::config::{presets, Scenario, SINGLE_RIS_POSITION};
use ris_multicast::harness::{run_scenario_with_threads, OutputFormat};

#[derive(Parser)]
#[command(
    name = "ris-sim",
    version,
    about = "Multi-group multicast with distributed RISs: Monte Carlo sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its results.
    Run {
        scenario: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the scenario's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads; defaults to all cores.
        #[arg(long, env = "RIS_SIM_THREADS")]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Parse and check a scenario without running it.
    Validate { scenario: PathBuf },
    /// List the shipped geometry presets.
    Presets,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> ris_multicast::Result<()> {
    match cli.command {
        Command::Presets => {
            for p in presets() {
                println!(
                    "{}\t{} groups\t{}",
                    p.name,
                    p.geometry.group_centers.len(),
                    p.description
                );
            }
            let [x, y, z] = SINGLE_RIS_POSITION;
            println!("(single-RIS reference position: [{x}, {y}, {z}] m)");
            Ok(())
        }
        Command::Validate { scenario } => {
            let s = Scenario::load(&scenario)?;
            println!(
                "{}: ok ({} groups, N = {}, {} sweep values x {} trials, {} schemes)",
                scenario.display(),
                s.base.num_groups(),
                s.base.n_antennas(),
                s.sweep.values.len(),
                s.trials,
                s.schemes.len()
            );
            Ok(())
        }
        Command::Run {
            scenario,
            out,
            seed,
            trials,
            threads,
            format,
        } => {
            let mut file = ris_multicast::config::ScenarioFile::load(&scenario)?;
            if let Some(seed) = seed {
                file.seed = seed;
            }
            if let Some(trials) = trials {
                file.trials = trials;
            }
            let s = file.resolve()?;
            let threads = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let start = Instant::now();
            let result = run_scenario_with_threads(&s, threads)?;
            std::fs::create_dir_all(&out).map_err(|e| ris_multicast::Error::io(&out, e))?;
            let format = OutputFormat::from(format);
            let stem = if s.name.is_empty() {
                scenario
                    .file_stem()
                    .map_or("results".into(), |x| x.to_string_lossy().into_owned())
            } else {
                s.name.clone()
            };
            let path = out.join(format!("{stem}.{}", format.extension()));
            result.emit(format, &path)?;
            let skipped = result.records.iter().filter(|r| r.skipped.is_some()).count();
            eprintln!(
                "wrote {} records ({skipped} skipped) to {} in {:.1} s on {threads} threads",
                result.records.len(),
                path.display(),
                start.elapsed().as_secs_f64()
            );
            for p in &result.summary {
                if let Some(m) = p.mean_sum_rate {
                    eprintln!(
                        "  {:<12} {:>8} mean sum-rate {:.4} +/- {:.4}",
                        p.scheme.name(),
                        p.sweep_value,
                        m,
                        p.std_error_sum_rate.unwrap_or(0.0)
                    );
                }
            }
            Ok(())
        }
    }
}
