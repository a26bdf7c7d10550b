//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 on parse/validation failure, 2 on runtime
//! divergence, 3 on I/O failure. Every failure prints one machine-parseable
//! line to stderr of the form `error(<category>): <message>`.

use super::config::{parse_config, InitialPositions, ScenarioConfig};
use super::log::TrajectoryLog;
use super::plot::{emit_plots, PlotFlags};
use super::sim::{run_scenario, LawRegistry, RunOptions, ScenarioError};
use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_DIVERGED: u8 = 2;
pub const EXIT_IO: u8 = 3;

/// Environment variable consulted for the output directory when `--out-dir`
/// is not given.
pub const OUT_DIR_ENV: &str = "QUADSWARM_OUT_DIR";

#[derive(Parser)]
#[command(name = "quadswarm", version, about = "Multi-agent quadcopter simulation testbed")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario: simulate, then write the CSV log and any enabled plots.
    Run {
        /// Scenario config file.
        config: PathBuf,
        /// Override the config's random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for output files (default: $QUADSWARM_OUT_DIR or '.').
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Override the simulated duration in seconds.
        #[arg(long, allow_negative_numbers = true)]
        duration: Option<f64>,
        /// Worker threads for per-agent stepping; results are identical for
        /// any value.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Parse and validate a config without running or writing anything.
    Validate {
        /// Scenario config file.
        config: PathBuf,
    },
    /// Re-render plots from a previously saved CSV log.
    Plot {
        /// CSV log produced by `run`.
        csv: PathBuf,
        /// Directory for output files (default: $QUADSWARM_OUT_DIR or '.').
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn fail(category: &str, message: impl std::fmt::Display) -> String {
    format!("error({category}): {message}")
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "run".to_string())
}

fn read_file(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path)
        .map_err(|e| fail("io", format!("{}: {e}", path.display())))
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are successful terminations.
            let benign = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if benign { EXIT_OK } else { EXIT_INVALID };
        }
    };
    match cli.command {
        Command::Run { config, seed, out_dir: dir, duration, threads } => {
            cmd_run(&config, seed, dir, duration, threads)
        }
        Command::Validate { config } => cmd_validate(&config),
        Command::Plot { csv, out_dir: dir } => cmd_plot(&csv, dir),
    }
}

fn load_config(path: &Path) -> Result<ScenarioConfig, (u8, String)> {
    let text = read_file(path).map_err(|m| (EXIT_IO, m))?;
    parse_config(&text).map_err(|e| {
        let category = match e {
            super::config::ConfigError::Parse { .. } => "parse",
            super::config::ConfigError::Validation { .. } => "validation",
        };
        (EXIT_INVALID, fail(category, format!("{}: {e}", path.display())))
    })
}

fn cmd_validate(path: &Path) -> u8 {
    match load_config(path) {
        Ok(_) => {
            println!("ok: {} is a valid scenario", path.display());
            EXIT_OK
        }
        Err((code, message)) => {
            eprintln!("{message}");
            code
        }
    }
}

fn cmd_run(
    path: &Path,
    seed: Option<u64>,
    dir: Option<PathBuf>,
    duration: Option<f64>,
    threads: usize,
) -> u8 {
    let mut cfg = match load_config(path) {
        Ok(cfg) => cfg,
        Err((code, message)) => {
            eprintln!("{message}");
            return code;
        }
    };
    if let Some(seed) = seed {
        if let InitialPositions::Random { seed: s, .. } = &mut cfg.robot.initial {
            *s = seed;
        }
    }
    if let Some(d) = duration {
        cfg.timing.duration = d;
        if let Err(e) = super::config::validate_timing(&cfg.timing) {
            eprintln!("{}", fail("validation", e));
            return EXIT_INVALID;
        }
    }

    let dir = out_dir(dir);
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("{}", fail("io", format!("{}: {e}", dir.display())));
        return EXIT_IO;
    }
    let stem = file_stem(path);

    let registry = LawRegistry::new();
    let opts = RunOptions { threads: threads.max(1) };
    match run_scenario(&cfg, &registry, &opts) {
        Ok(log) => match write_outputs(&cfg, &log, &dir, &stem) {
            Ok(()) => EXIT_OK,
            Err(message) => {
                eprintln!("{message}");
                EXIT_IO
            }
        },
        Err(ScenarioError::Divergence { agent, tick, time, source, partial }) => {
            // Flush whatever was logged before the failure, then report.
            if cfg.output.save_data {
                let _ = partial.write_csv(&dir.join(format!("{stem}.csv")));
            }
            eprintln!(
                "{}",
                fail(
                    "divergence",
                    format!("agent {agent} at tick {tick} (t = {time:.3} s): {source}")
                )
            );
            EXIT_DIVERGED
        }
        Err(other) => {
            eprintln!("{}", fail("validation", other));
            EXIT_INVALID
        }
    }
}

fn write_outputs(
    cfg: &ScenarioConfig,
    log: &TrajectoryLog,
    dir: &Path,
    stem: &str,
) -> Result<(), String> {
    if cfg.output.save_data {
        let path = dir.join(format!("{stem}.csv"));
        log.write_csv(&path)
            .map_err(|e| fail("io", format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    // Show-plot has no window in a headless build; both flags emit files.
    if cfg.output.save_plot || cfg.output.show_plot {
        let flags = PlotFlags {
            position: cfg.output.position_plot,
            velocity: cfg.output.velocity_plot,
        };
        if flags.position || flags.velocity {
            let files = emit_plots(log, dir, stem, flags)
                .map_err(|e| fail("io", e))?;
            for f in files {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn cmd_plot(csv: &Path, dir: Option<PathBuf>) -> u8 {
    let text = match read_file(csv) {
        Ok(t) => t,
        Err(message) => {
            eprintln!("{message}");
            return EXIT_IO;
        }
    };
    let log = match TrajectoryLog::from_csv(&text) {
        Ok(log) => log,
        Err(e) => {
            eprintln!("{}", fail("parse", format!("{}: {e}", csv.display())));
            return EXIT_INVALID;
        }
    };
    let dir = out_dir(dir);
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("{}", fail("io", format!("{}: {e}", dir.display())));
        return EXIT_IO;
    }
    let stem = file_stem(csv);
    match emit_plots(&log, &dir, &stem, PlotFlags { position: true, velocity: true }) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(super::plot::PlotError::EmptyLog) => {
            eprintln!("{}", fail("parse", "the csv log holds no samples"));
            EXIT_INVALID
        }
        Err(e) => {
            eprintln!("{}", fail("io", e));
            EXIT_IO
        }
    }
}
