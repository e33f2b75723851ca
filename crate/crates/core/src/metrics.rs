//! Acceptance-ratio metrics per training phase and the robustness
//! statistics around a load rupture.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("rupture phase {phase} out of range (need 1..{len})")]
    RuptureOutOfRange { phase: usize, len: usize },
}

/// Accepted share per phase of `phase_size` episodes. A trailing partial
/// phase is dropped (with a warning on stderr) so every entry covers the
/// same number of arrivals.
pub fn tar_series(accepted: &[bool], phase_size: usize) -> Vec<f64> {
    assert!(phase_size > 0, "phase size must be positive");
    let dropped = accepted.len() % phase_size;
    if dropped != 0 {
        eprintln!("warning: dropping trailing partial phase of {dropped} episodes");
    }
    accepted
        .chunks_exact(phase_size)
        .map(|chunk| chunk.iter().filter(|&&a| a).count() as f64 / phase_size as f64)
        .collect()
}

/// Robustness summary around the rupture phase: the TAR in the rupture
/// phase, the phase before it, and mean/population-deviation over the
/// `window` phases preceding the rupture (clipped to the available history).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuptureReport {
    pub rupture_tar: f64,
    pub last_tar: f64,
    pub avg_tar: f64,
    pub std_tar: f64,
    /// `rupture_tar - avg_tar`
    pub gap_avg: f64,
    /// `rupture_tar - last_tar`
    pub gap_last: f64,
}

pub fn rupture_report(
    tars: &[f64],
    rupture_phase: usize,
    window: usize,
) -> Result<RuptureReport, MetricsError> {
    if rupture_phase == 0 || rupture_phase >= tars.len() {
        return Err(MetricsError::RuptureOutOfRange {
            phase: rupture_phase,
            len: tars.len(),
        });
    }
    let w = window.min(rupture_phase).max(1);
    let pre = &tars[rupture_phase - w..rupture_phase];
    let avg = pre.iter().sum::<f64>() / w as f64;
    let var = pre.iter().map(|t| (t - avg) * (t - avg)).sum::<f64>() / w as f64;
    let rupture_tar = tars[rupture_phase];
    let last_tar = tars[rupture_phase - 1];
    Ok(RuptureReport {
        rupture_tar,
        last_tar,
        avg_tar: avg,
        std_tar: var.sqrt(),
        gap_avg: rupture_tar - avg,
        gap_last: rupture_tar - last_tar,
    })
}

/// One row of a per-run phase CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub run_id: u64,
    pub agent: String,
    pub beta: Option<f64>,
    pub seed: u64,
    pub phase: u64,
    pub accepted: u32,
    pub tar: f64,
    pub load_target: f64,
}

pub fn write_phase_csv(path: &std::path::Path, rows: &[PhaseRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_phase_csv(path: &std::path::Path) -> Result<Vec<PhaseRow>, csv::Error> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().collect()
}

/// Report row in the layout of the result tables: gaps and deviation as
/// percentages.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub agent: String,
    pub beta: Option<f64>,
    pub run_id: Option<u64>,
    pub seed: Option<u64>,
    pub rupture_tar_pct: f64,
    pub last_tar_pct: f64,
    pub avg_tar_pct: f64,
    #[serde(rename = "rupture_minus_avg_pct")]
    pub gap_avg_pct: f64,
    #[serde(rename = "rupture_minus_last_pct")]
    pub gap_last_pct: f64,
    pub tar_std_pct: f64,
}

impl ReportRow {
    pub fn from_report(
        agent: &str,
        beta: Option<f64>,
        run_id: Option<u64>,
        seed: Option<u64>,
        r: &RuptureReport,
    ) -> Self {
        ReportRow {
            agent: agent.to_string(),
            beta,
            run_id,
            seed,
            rupture_tar_pct: 100.0 * r.rupture_tar,
            last_tar_pct: 100.0 * r.last_tar,
            avg_tar_pct: 100.0 * r.avg_tar,
            gap_avg_pct: 100.0 * r.gap_avg,
            gap_last_pct: 100.0 * r.gap_last,
            tar_std_pct: 100.0 * r.std_tar,
        }
    }
}
