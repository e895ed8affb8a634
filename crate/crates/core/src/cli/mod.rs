//! Command-line front end: `run`, `compare` and `check`.

pub mod commands;
pub mod config;
pub mod output;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};

pub use commands::{
    check_command, check_report, compare_command, run_command, CliError, Outcome, EXIT_CONFIG,
    EXIT_IO, EXIT_REPORT_FAILED, EXIT_RUNTIME,
};
pub use config::{ConfigError, RunConfig};
pub use report::{Report, ReportEntry, Status};

#[derive(Debug, Parser)]
#[command(
    name = "servo-smc",
    version,
    about = "Electro-hydraulic servo sliding-mode control experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Number of configs simulated concurrently by `run`.
    #[arg(long, global = true, default_value_t = 1, value_name = "N")]
    pub jobs: usize,
    /// Only print errors.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate each config and write its episode artifacts and report.
    Run {
        #[arg(required = true, value_name = "CONFIG")]
        configs: Vec<PathBuf>,
    },
    /// Paired runs with and without compensation, side by side.
    Compare {
        #[arg(value_name = "CONFIG")]
        config: PathBuf,
    },
    /// Closed-loop acceptance checks for one config.
    Check {
        #[arg(value_name = "CONFIG")]
        config: PathBuf,
    },
}

/// Output directory for config `index` of `total`. Several configs get one
/// subdirectory each, named after the file stem.
fn output_dir(
    base: Option<&Path>,
    cfg: &RunConfig,
    path: &Path,
    index: usize,
    total: usize,
) -> PathBuf {
    let base = base.map_or_else(|| cfg.out_dir.clone(), Path::to_path_buf);
    if total == 1 {
        return base;
    }
    let stem = path.file_stem().map_or_else(
        || format!("config{index}"),
        |s| s.to_string_lossy().into_owned(),
    );
    base.join(format!("{index:02}-{stem}"))
}

struct Printer {
    quiet: bool,
    lock: Mutex<()>,
}

impl Printer {
    fn outcome(&self, label: &Path, outcome: &Outcome) {
        if self.quiet {
            return;
        }
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        println!("== {}", label.display());
        print!("{}{}", outcome.summary, outcome.report.to_text());
        for f in &outcome.files {
            println!("wrote {}", f.display());
        }
    }

    fn error(&self, label: &Path, err: &CliError) {
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        eprintln!("error: {}: {err}", label.display());
    }
}

fn execute_one(
    printer: &Printer,
    path: &Path,
    out: Option<&Path>,
    index: usize,
    total: usize,
    command: fn(&RunConfig, &Path) -> Result<Outcome, CliError>,
) -> i32 {
    let result = RunConfig::load(path)
        .map_err(CliError::from)
        .and_then(|cfg| command(&cfg, &output_dir(out, &cfg, path, index, total)));
    match result {
        Ok(outcome) => {
            printer.outcome(path, &outcome);
            outcome.exit_code()
        }
        Err(err) => {
            printer.error(path, &err);
            err.exit_code()
        }
    }
}

/// Executes a parsed command line and returns the process exit status: 0
/// when every report passed, otherwise the largest failure code seen.
pub fn execute(cli: &Cli) -> i32 {
    let printer = Printer {
        quiet: cli.quiet,
        lock: Mutex::new(()),
    };
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Run { configs } => {
            let total = configs.len();
            let next = AtomicUsize::new(0);
            let worst = AtomicUsize::new(0);
            let workers = cli.jobs.clamp(1, total);
            std::thread::scope(|scope| {
                for _ in 0..workers {
                    scope.spawn(|| loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(path) = configs.get(i) else { break };
                        let code = execute_one(&printer, path, out, i, total, run_command);
                        worst.fetch_max(code as usize, Ordering::Relaxed);
                    });
                }
            });
            worst.into_inner() as i32
        }
        Command::Compare { config } => execute_one(&printer, config, out, 0, 1, compare_command),
        Command::Check { config } => execute_one(&printer, config, out, 0, 1, check_command),
    }
}

/// Parses `args` (program name first) and executes. Usage errors and
/// `--help` are handled by the argument parser.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let _ = e.print();
            e.exit_code()
        }
    }
}
