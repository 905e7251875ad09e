//! CSV and text artifacts of a run.

use std::fs;
use std::path::Path;

use otfs_isac::channel::PathSet;
use otfs_isac::sensing::MfMap;

use crate::config::ScenarioConfig;
use crate::error::{SimError, SimResult};
use crate::sweep::{AllocationRecord, TrialResult};
use crate::tracking::TrackingRun;

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

fn output_error(path: &Path, e: impl std::fmt::Display) -> SimError {
    SimError::Output { path: path.display().to_string(), message: e.to_string() }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> SimResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    w.write_record(header).map_err(|e| output_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| output_error(path, e))?;
    }
    w.flush().map_err(|e| output_error(path, e))
}

pub const RESULTS_HEADER: [&str; 19] = [
    "snr_db",
    "e",
    "speed_kmh",
    "variant",
    "objective",
    "bound",
    "trial",
    "r_u1",
    "r_u2",
    "sum_rate",
    "w_u1",
    "w_u2",
    "feasible",
    "tracking_error_pct",
    "tau_hat_u1_s",
    "tau_hat_u2_s",
    "nu_hat_u1_hz",
    "nu_hat_u2_hz",
    "e_hat",
];

pub fn write_results_csv(results: &[TrialResult], path: &Path) -> SimResult<()> {
    if results.is_empty() {
        return Err(SimError::NoResults);
    }
    let rows = results.iter().map(|r| {
        vec![
            num(r.point.snr_db),
            num(r.point.e),
            num(r.point.speed_kmh),
            r.variant.name().to_string(),
            r.objective.name().to_string(),
            r.bound.name().to_string(),
            r.trial.to_string(),
            num(r.rates[0]),
            num(r.rates[1]),
            num(r.sum_rate()),
            num(r.allocation[0]),
            num(r.allocation[1]),
            r.feasible.to_string(),
            opt(r.tracking_error_pct),
            opt(r.tau_hat.map(|t| t[0])),
            opt(r.tau_hat.map(|t| t[1])),
            opt(r.nu_hat.map(|t| t[0])),
            opt(r.nu_hat.map(|t| t[1])),
            opt(r.e_hat),
        ]
    });
    write_rows(path, &RESULTS_HEADER, rows)
}

pub fn write_allocations_csv(records: &[AllocationRecord], path: &Path) -> SimResult<()> {
    let header = [
        "snr_db", "e_true", "speed_kmh", "trial", "h1_sq", "h2_sq", "e", "n0", "pt", "objective", "bound", "w1", "w2",
        "r1", "r2", "feasible",
    ];
    let rows = records.iter().map(|a| {
        vec![
            num(a.point.snr_db),
            num(a.point.e),
            num(a.point.speed_kmh),
            a.trial.to_string(),
            num(a.h1_sq),
            num(a.h2_sq),
            num(a.e),
            num(a.n0),
            num(a.pt),
            a.objective.name().to_string(),
            a.bound.name().to_string(),
            num(a.w1),
            num(a.w2),
            num(a.r1),
            num(a.r2),
            a.feasible.to_string(),
        ]
    });
    write_rows(path, &header, rows)
}

pub fn write_mf_csv(map: &MfMap, path: &Path) -> SimResult<()> {
    let rows = map.cells().map(|(d, k, mag)| vec![d.to_string(), k.to_string(), num(mag)]);
    write_rows(path, &["delay_bin", "doppler_bin", "magnitude"], rows)
}

pub fn write_track_csv(run: &TrackingRun, path: &Path) -> SimResult<()> {
    let header = ["t", "true_x", "true_y", "true_z", "est_x", "est_y", "est_z", "range_error_pct"];
    let rows = run.samples.iter().map(|s| {
        let mut row = vec![num(s.time)];
        row.extend(s.truth.iter().map(|&x| num(x)));
        row.extend(s.estimate.iter().map(|&x| num(x)));
        row.push(num(s.range_error_pct));
        row
    });
    write_rows(path, &header, rows)
}

pub fn write_paths(paths: &PathSet, path: &Path) -> SimResult<()> {
    fs::write(path, paths.to_text()).map_err(|e| output_error(path, e))
}

pub fn write_manifest(cfg: &ScenarioConfig, seed: u64, extra: &[(&str, String)], path: &Path) -> SimResult<()> {
    let mut text = format!("version = {VERSION}\nseed = {seed}\n");
    for (k, v) in extra {
        text.push_str(&format!("{k} = {v}\n"));
    }
    text.push_str("\n# configuration\n");
    text.push_str(&cfg.to_toml());
    fs::write(path, text).map_err(|e| output_error(path, e))
}
