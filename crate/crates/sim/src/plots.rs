//! SVG figures: tracking overlay and mean-rate curves.

use std::collections::BTreeMap;
use std::path::Path;

use otfs_isac::noma::{Bound, Objective};
use plotters::prelude::*;

use crate::config::ScenarioConfig;
use crate::error::{SimError, SimResult};
use crate::sweep::{TrialResult, Variant};
use crate::tracking::TrackingRun;

pub const FIGURES: [u8; 6] = [4, 5, 6, 7, 8, 9];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw markers on top of the line.
    pub markers: bool,
}

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(127, 127, 127),
];

fn plot_error(path: &Path, e: impl std::fmt::Display) -> SimError {
    SimError::Output { path: path.display().to_string(), message: e.to_string() }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    let span = (hi - lo).abs().max(1e-9);
    (lo - 0.05 * span, hi + 0.05 * span)
}

pub fn line_chart(path: &Path, title: &str, x_label: &str, y_label: &str, series: &[Series]) -> SimResult<()> {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (x0, x1) = padded(x0, x1);
    let (y0, y1) = padded(y0, y1);

    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_error(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| plot_error(path, e))?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc(y_label)
        .draw()
        .map_err(|e| plot_error(path, e))?;
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))
            .map_err(|e| plot_error(path, e))?
            .label(s.label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        if s.markers {
            chart
                .draw_series(s.points.iter().map(|&p| Circle::new(p, 4, color.filled())))
                .map_err(|e| plot_error(path, e))?;
        }
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_error(path, e))?;
    root.present().map_err(|e| plot_error(path, e))
}

/// Mean of `value` over the rows passing `keep`, grouped by `x`.
pub fn mean_curve(
    results: &[TrialResult],
    keep: impl Fn(&TrialResult) -> bool,
    x: impl Fn(&TrialResult) -> f64,
    value: impl Fn(&TrialResult) -> f64,
) -> Vec<(f64, f64)> {
    let mut groups: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
    for r in results.iter().filter(|r| keep(r)) {
        let xv = x(r);
        // Order-preserving key for non-negative and negative floats alike.
        let bits = xv.to_bits();
        let key = if xv.is_sign_negative() { !bits } else { bits | (1 << 63) };
        let g = groups.entry(key).or_insert((xv, 0.0, 0));
        g.1 += value(r);
        g.2 += 1;
    }
    groups.into_values().map(|(xv, sum, n)| (xv, sum / n as f64)).collect()
}

#[derive(Debug, Clone, Copy)]
enum Leg {
    Snr,
    E,
    Speed,
}

fn on_leg(cfg: &ScenarioConfig, leg: Leg, r: &TrialResult) -> bool {
    let s = &cfg.sweep;
    let p = &r.point;
    match leg {
        Leg::Snr => p.e == s.e_ref && p.speed_kmh == s.speed_ref,
        Leg::E => p.snr_db == s.snr_ref && p.speed_kmh == s.speed_ref,
        Leg::Speed => p.snr_db == s.snr_ref && p.e == s.e_ref,
    }
}

fn leg_x(leg: Leg, r: &TrialResult) -> f64 {
    match leg {
        Leg::Snr => r.point.snr_db,
        Leg::E => r.point.e,
        Leg::Speed => r.point.speed_kmh,
    }
}

fn variant_curves(
    cfg: &ScenarioConfig,
    results: &[TrialResult],
    leg: Leg,
    objectives: &[Objective],
    bound: Bound,
) -> Vec<Series> {
    let mut out = Vec::new();
    for &objective in objectives {
        for v in Variant::ALL {
            let points = mean_curve(
                results,
                |r| r.variant == v && r.objective == objective && r.bound == bound && on_leg(cfg, leg, r),
                |r| leg_x(leg, r),
                TrialResult::sum_rate,
            );
            if !points.is_empty() {
                let label = if objectives.len() > 1 { format!("{v} {}", objective.name()) } else { v.to_string() };
                out.push(Series { label, points, markers: false });
            }
        }
    }
    out
}

fn rate_vs_snr(cfg: &ScenarioConfig, results: &[TrialResult], objective: Objective) -> Vec<Series> {
    let mut series = variant_curves(cfg, results, Leg::Snr, &[objective], Bound::Perfect);
    for (u, label) in [(0usize, "noma_isac user 1"), (1, "noma_isac user 2")] {
        let points = mean_curve(
            results,
            |r| r.variant == Variant::NomaIsac && r.objective == objective && r.bound == Bound::Perfect && on_leg(cfg, Leg::Snr, r),
            |r| r.point.snr_db,
            |r| r.rates[u],
        );
        if !points.is_empty() {
            series.push(Series { label: label.into(), points, markers: true });
        }
    }
    series
}

fn bounds_vs_e(cfg: &ScenarioConfig, results: &[TrialResult]) -> Vec<Series> {
    let mut out = Vec::new();
    for objective in [Objective::MaxMin, Objective::SumRate] {
        for bound in [Bound::Lower, Bound::Upper] {
            let points = mean_curve(
                results,
                |r| r.variant == Variant::NomaIsac && r.objective == objective && r.bound == bound && on_leg(cfg, Leg::E, r),
                |r| r.point.e,
                TrialResult::sum_rate,
            );
            if !points.is_empty() {
                out.push(Series { label: format!("{} {}", objective.name(), bound.name()), points, markers: true });
            }
        }
    }
    out
}

pub fn track_overlay(run: &TrackingRun, path: &Path) -> SimResult<()> {
    let truth = run.samples.iter().map(|s| (s.truth[0], s.truth[1])).collect();
    let estimate = run.samples.iter().map(|s| (s.estimate[0], s.estimate[1])).collect();
    line_chart(
        path,
        &format!("Tracking overlay (mean range error {:.2}%)", run.mean_error_pct()),
        "x (m)",
        "y (m)",
        &[
            Series { label: "true".into(), points: truth, markers: false },
            Series { label: "estimated".into(), points: estimate, markers: true },
        ],
    )
}

/// Writes `fig<k>.svg` into `dir`. The tracking figure needs `run`.
pub fn emit_figure(
    figure: u8,
    cfg: &ScenarioConfig,
    results: &[TrialResult],
    run: Option<&TrackingRun>,
    dir: &Path,
) -> SimResult<()> {
    let path = dir.join(format!("fig{figure}.svg"));
    let rate = "mean sum rate (bits/s/Hz)";
    match figure {
        4 => match run {
            Some(run) => track_overlay(run, &path),
            None => Err(SimError::NoResults),
        },
        5 => line_chart(&path, "Max-min fairness vs SNR", "SNR (dB)", rate, &rate_vs_snr(cfg, results, Objective::MaxMin)),
        6 => line_chart(&path, "Sum rate vs SNR", "SNR (dB)", rate, &rate_vs_snr(cfg, results, Objective::SumRate)),
        7 => line_chart(&path, "Lower and upper bounds vs NLOS strength", "e", rate, &bounds_vs_e(cfg, results)),
        8 => line_chart(
            &path,
            "Systems vs NLOS strength (lower bound)",
            "e",
            rate,
            &variant_curves(cfg, results, Leg::E, &[Objective::MaxMin, Objective::SumRate], Bound::Lower),
        ),
        9 => line_chart(
            &path,
            "Rate vs user speed (lower bound)",
            "speed (km/h)",
            rate,
            &variant_curves(cfg, results, Leg::Speed, &[Objective::MaxMin, Objective::SumRate], Bound::Lower),
        ),
        other => Err(SimError::Output { path: path.display().to_string(), message: format!("no figure {other}") }),
    }
}
