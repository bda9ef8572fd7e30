//! JSONL traces (one snapshot per line) and CSV sweep summaries.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use mallows_dpm::dpm::{Snapshot, SweepSummary};

use crate::error::CliError;

pub fn write_trace(path: &Path, snapshots: &[Snapshot]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in snapshots {
        serde_json::to_writer(&mut w, s).expect("snapshot serializes");
        w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a trace, checking that every snapshot agrees on the item count and
/// θ length and is internally consistent.
pub fn read_trace(path: &Path) -> Result<Vec<Snapshot>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut snaps: Vec<Snapshot> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| CliError::malformed(path, i + 1, msg);
        let s: Snapshot = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if s.clusters.is_empty() {
            return Err(bad("snapshot has no clusters".into()));
        }
        let (n, t) = (s.clusters[0].sigma.len(), s.clusters[0].theta.len());
        if let Some(first) = snaps.first() {
            let (n0, t0) = shape(first);
            if (n, t) != (n0, t0) {
                return Err(bad(format!(
                    "shape n={n}, t={t} differs from n={n0}, t={t0} on earlier lines"
                )));
            }
        }
        for c in &s.clusters {
            if c.sigma.len() != n || c.theta.len() != t {
                return Err(bad("clusters disagree on n or t".into()));
            }
            let mut seen = vec![false; n];
            if c.sigma
                .iter()
                .any(|&i| i >= n || std::mem::replace(&mut seen[i], true))
            {
                return Err(bad("cluster center is not a permutation".into()));
            }
            if c.theta.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(bad("θ entries must be finite and non-negative".into()));
            }
        }
        if s.assignments.iter().any(|&a| a >= s.clusters.len()) {
            return Err(bad("assignment refers to a missing cluster".into()));
        }
        snaps.push(s);
    }
    if snaps.is_empty() {
        return Err(CliError::Data(format!(
            "{}: trace is empty",
            path.display()
        )));
    }
    Ok(snaps)
}

/// `(n, t)` of a snapshot.
pub fn shape(s: &Snapshot) -> (usize, usize) {
    (s.clusters[0].sigma.len(), s.clusters[0].theta.len())
}

pub fn write_summary(path: &Path, summaries: &[SweepSummary]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for s in summaries {
        w.serialize(s).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Data(format!("{}: {other:?}", path.display())),
    }
}
