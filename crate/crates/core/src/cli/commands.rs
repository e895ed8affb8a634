use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

use crate::cli::config::{ConfigError, RunConfig};
use crate::cli::output::{self, WriteError};
use crate::cli::report::Report;
use crate::controller::SwitchingLaw;
use crate::error::SimError;
use crate::sim::metrics::{self, BoundCheck};
use crate::sim::{run_episode, Episode, SimConfig};

pub const EXIT_REPORT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("cannot write artifact {0}")]
    Io(#[from] WriteError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Sim(SimError::Params(_)) => EXIT_CONFIG,
            Self::Sim(_) => EXIT_RUNTIME,
            Self::Io(_) => EXIT_IO,
        }
    }
}

/// What a command produced: the report that decides the exit status and the
/// files it wrote.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub files: Vec<PathBuf>,
    /// Extra human-readable lines, e.g. the compare ratio.
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed() {
            0
        } else {
            EXIT_REPORT_FAILED
        }
    }
}

fn simulate(cfg: &RunConfig, sim: &SimConfig) -> Result<Episode, SimError> {
    run_episode(sim, &cfg.plant, &cfg.controller, &cfg.network())
}

fn settle_time(cfg: &RunConfig) -> f64 {
    5.0 / cfg.controller.lambda
}

fn simulate_all(cfg: &RunConfig, sims: &[SimConfig]) -> Result<Vec<Episode>, SimError> {
    sims.iter().map(|sim| simulate(cfg, sim)).collect()
}

fn improvement(cfg: &RunConfig, with: &Episode, without: &Episode) -> Result<BoundCheck, SimError> {
    metrics::check_improvement(
        &with.log,
        &without.log,
        cfg.improvement_window,
        cfg.improvement_ratio,
    )
}

fn metric_windows(cfg: &RunConfig) -> Vec<(f64, f64)> {
    let sim = &cfg.sim;
    let mut windows = vec![(0.0, sim.t_end)];
    if sim.t_train > 0.0 {
        windows.push((0.0, sim.t_train));
    }
    if sim.t_train < sim.t_end {
        windows.push((sim.t_train, sim.t_end));
    }
    windows.push(cfg.improvement_window);
    windows
}

/// Single episode with the configured settings. With compensation enabled the
/// uncompensated twin is also simulated for the improvement check.
pub fn run_command(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let sims = if cfg.sim.compensation {
        vec![cfg.sim.clone(), cfg.without_compensation()]
    } else {
        vec![cfg.sim.clone()]
    };
    let episodes = simulate_all(cfg, &sims)?;
    let ep = &episodes[0];
    let log = &ep.log;

    let mut report = Report::default();
    report.push("reach_time", metrics::check_reaching(log));
    report.push("layer_invariance", metrics::check_layer_invariance(log));
    report.push("error_box", metrics::check_error_box(log, settle_time(cfg)));
    report.push("chattering", metrics::check_chattering(log));
    match episodes.get(1) {
        Some(base) => report.push("compensation_improvement", improvement(cfg, ep, base)?),
        None => report.skip(
            "compensation_improvement",
            cfg.improvement_ratio,
            "compensation disabled",
        ),
    }

    let table = metrics::metrics_summary(log, &metric_windows(cfg))?;
    let summary = json!({
        "reach_time": table.reach_time,
        "windows": table.windows,
        "trainings": log.trainings,
        "report": report,
        "passed": report.passed(),
    });

    let mut files = vec![
        ("episode.csv".to_string(), output::episode_csv(log)),
        ("network.txt".to_string(), ep.network.to_text()),
        ("metrics.json".to_string(), pretty(&summary)),
        ("report.txt".to_string(), report.to_text()),
    ];
    files.extend(output::plot_files(log));
    let files = output::write_artifacts(out, &files)?;
    Ok(Outcome {
        report,
        files,
        summary: String::new(),
    })
}

fn pretty(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    text
}

/// Paired episodes with and without compensation from the same initial state.
pub fn compare_command(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let with_sim = SimConfig {
        compensation: true,
        ..cfg.sim.clone()
    };
    let episodes = simulate_all(cfg, &[with_sim, cfg.without_compensation()])?;
    let (with, without) = (&episodes[0], &episodes[1]);
    let check = improvement(cfg, with, without)?;
    let ratio = check.measured;

    let mut report = Report::default();
    report.push("compensation_improvement", check);
    let (a, b) = cfg.improvement_window;
    let summary = format!("RMS(s) ratio with/without compensation on [{a}, {b}] s: {ratio:.6e}\n");

    let files = vec![
        (
            "compare.csv".to_string(),
            output::compare_csv(&without.log, &with.log),
        ),
        (
            "compare.txt".to_string(),
            format!("{summary}{}", report.to_text()),
        ),
    ];
    let files = output::write_artifacts(out, &files)?;
    Ok(Outcome {
        report,
        files,
        summary,
    })
}

/// Closed-loop acceptance checks for one configuration: reaching from an
/// offset start, layer invariance and error box on both runs, compensation
/// improvement, smoothness, and the relay-law contrast.
pub fn check_report(cfg: &RunConfig) -> Result<Report, SimError> {
    let relay = SimConfig {
        law: SwitchingLaw::Sign,
        ..cfg.without_compensation()
    };
    let mut sims = vec![cfg.offset_start(), cfg.without_compensation(), relay];
    if cfg.sim.compensation {
        sims.push(cfg.sim.clone());
    }
    let episodes = simulate_all(cfg, &sims)?;
    let (offset, without, relay) = (&episodes[0], &episodes[1], &episodes[2]);
    let with = episodes.get(3);
    let settle = settle_time(cfg);
    let skip_note = "compensation disabled";

    let mut report = Report::default();
    report.push("reach_time", metrics::check_reaching(&offset.log));
    report.push(
        "layer_invariance_without",
        metrics::check_layer_invariance(&without.log),
    );
    match with {
        Some(w) => report.push(
            "layer_invariance_with",
            metrics::check_layer_invariance(&w.log),
        ),
        None => report.skip("layer_invariance_with", cfg.controller.phi, skip_note),
    }
    report.push(
        "error_box_without",
        metrics::check_error_box(&without.log, settle),
    );
    match with {
        Some(w) => report.push("error_box_with", metrics::check_error_box(&w.log, settle)),
        None => report.skip("error_box_with", 1.0, skip_note),
    }
    match with {
        Some(w) => report.push("compensation_improvement", improvement(cfg, w, without)?),
        None => report.skip("compensation_improvement", cfg.improvement_ratio, skip_note),
    }
    report.push(
        "chattering_without",
        metrics::check_chattering(&without.log),
    );
    match with {
        Some(w) => report.push("chattering_with", metrics::check_chattering(&w.log)),
        None => report.skip("chattering_with", 0.2, skip_note),
    }
    report.push("chattering_relay_contrast", relay_contrast(&relay.log));
    Ok(report)
}

/// Passes when the relay law breaks the smoothness bound.
pub fn relay_contrast(log: &crate::sim::EpisodeLog) -> BoundCheck {
    let c = metrics::check_chattering(log);
    BoundCheck {
        name: "chattering_relay_contrast".into(),
        bound: c.bound,
        measured: c.measured,
        passed: !c.passed,
        note: format!("relay law must violate the bound; {}", c.note),
    }
}

pub fn check_command(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let report = check_report(cfg)?;
    let files = vec![
        ("check.txt".to_string(), report.to_text()),
        (
            "check.json".to_string(),
            pretty(&json!({ "report": report, "passed": report.passed() })),
        ),
    ];
    let files = output::write_artifacts(out, &files)?;
    Ok(Outcome {
        report,
        files,
        summary: String::new(),
    })
}
