//! Artifact rendering and all-or-nothing writes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::sim::{EpisodeLog, StepRecord};

pub const CSV_HEADER: &str = "t,x,v,acc,xd,e,s,s_phi,u,d_hat,d_true,flags";

/// One row per control step.
pub fn episode_csv(log: &EpisodeLog) -> String {
    let mut out = String::with_capacity(log.records.len() * 180);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &log.records {
        let cols = [
            r.t,
            r.state.x,
            r.state.v,
            r.state.acc,
            r.reference.xd,
            r.err.e,
            r.s,
            r.s_phi,
            r.u,
            r.d_hat,
            r.d_true,
        ];
        for c in cols {
            let _ = write!(out, "{c:.12e},");
        }
        let _ = writeln!(out, "{}", r.flags);
    }
    out
}

/// Whitespace-separated columns with a single header line.
pub fn plot_columns(
    log: &EpisodeLog,
    names: &[&str],
    pick: impl Fn(&StepRecord) -> Vec<f64>,
) -> String {
    let mut out = names.join(" ");
    out.push('\n');
    for r in &log.records {
        let row: Vec<String> = pick(r).iter().map(|v| format!("{v:.12e}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// The three plot files: tracking `(t, x, xd)`, control `(t, u)`, sliding
/// variable `(t, s)`.
pub fn plot_files(log: &EpisodeLog) -> Vec<(String, String)> {
    vec![
        (
            "tracking.dat".into(),
            plot_columns(log, &["t", "x", "xd"], |r| {
                vec![r.t, r.state.x, r.reference.xd]
            }),
        ),
        (
            "control.dat".into(),
            plot_columns(log, &["t", "u"], |r| vec![r.t, r.u]),
        ),
        (
            "sliding.dat".into(),
            plot_columns(log, &["t", "s"], |r| vec![r.t, r.s]),
        ),
    ]
}

pub const COMPARE_HEADER: &str =
    "t,xd,x_without,x_with,e_without,e_with,s_without,s_with,u_without,u_with,d_hat,d_true";

/// Paired runs on a shared time grid.
pub fn compare_csv(without: &EpisodeLog, with: &EpisodeLog) -> String {
    let mut out = String::new();
    out.push_str(COMPARE_HEADER);
    out.push('\n');
    for (a, b) in without.records.iter().zip(&with.records) {
        let cols = [
            a.t,
            a.reference.xd,
            a.state.x,
            b.state.x,
            a.err.e,
            b.err.e,
            a.s,
            b.s,
            a.u,
            b.u,
            b.d_hat,
            b.d_true,
        ];
        let row: Vec<String> = cols.iter().map(|c| format!("{c:.12e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, thiserror::Error)]
#[error("{}: {source}", path.display())]
pub struct WriteError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

/// Writes every file to a temporary name first and renames them into place
/// only once all of them were written.
pub fn write_artifacts(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>, WriteError> {
    let wrap = |path: &Path| {
        let path = path.to_path_buf();
        move |source| WriteError { path, source }
    };
    std::fs::create_dir_all(dir).map_err(wrap(dir))?;
    let mut staged = Vec::with_capacity(files.len());
    let result = (|| {
        for (name, body) in files {
            let tmp = dir.join(format!(".{name}.partial"));
            staged.push(tmp.clone());
            std::fs::write(&tmp, body).map_err(wrap(&tmp))?;
        }
        let mut written = Vec::with_capacity(files.len());
        for ((name, _), tmp) in files.iter().zip(&staged) {
            let dest = dir.join(name);
            std::fs::rename(tmp, &dest).map_err(wrap(&dest))?;
            written.push(dest);
        }
        Ok(written)
    })();
    if result.is_err() {
        for tmp in &staged {
            let _ = std::fs::remove_file(tmp);
        }
    }
    result
}
