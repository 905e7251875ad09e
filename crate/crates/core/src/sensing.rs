//! Radar parameter extraction from the echo: delay-Doppler matched filtering,
//! peak picking, the NLOS-to-LOS power ratio and MUSIC angle estimation.

use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{steering, wrap_angle, Direction, UpaConfig};
use crate::dd_signal::{forward_plan, Frame, TimeSeries};
use crate::error::{Error, Result};

/// Correlation of the echo against delayed, Doppler-shifted copies of the
/// transmit waveform. Doppler bins are signed, `-N/2..N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MfMap {
    values: Vec<Complex64>,
    delays: Range<usize>,
    doppler_bins: usize,
    delay_step: f64,
    doppler_step: f64,
}

impl MfMap {
    pub fn delay_bins(&self) -> Range<usize> {
        self.delays.clone()
    }

    pub fn doppler_bin_count(&self) -> usize {
        self.doppler_bins
    }

    /// Seconds per delay bin.
    pub fn delay_step(&self) -> f64 {
        self.delay_step
    }

    /// Hz per Doppler bin.
    pub fn doppler_step(&self) -> f64 {
        self.doppler_step
    }

    pub fn doppler_range(&self) -> Range<i64> {
        let half = (self.doppler_bins / 2) as i64;
        -half..self.doppler_bins as i64 - half
    }

    fn index(&self, delay_bin: usize, doppler_bin: i64) -> Option<usize> {
        if !self.delays.contains(&delay_bin) || !self.doppler_range().contains(&doppler_bin) {
            return None;
        }
        let col = (doppler_bin - self.doppler_range().start) as usize;
        Some((delay_bin - self.delays.start) * self.doppler_bins + col)
    }

    pub fn value(&self, delay_bin: usize, doppler_bin: i64) -> Option<Complex64> {
        self.index(delay_bin, doppler_bin).map(|i| self.values[i])
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(delay bin, signed Doppler bin, magnitude)` for every cell, delay-major.
    pub fn cells(&self) -> impl Iterator<Item = (usize, i64, f64)> + '_ {
        let start = self.doppler_range().start;
        self.values.iter().enumerate().map(move |(i, v)| {
            (
                self.delays.start + i / self.doppler_bins,
                start + (i % self.doppler_bins) as i64,
                v.norm(),
            )
        })
    }

    /// Cell with the largest magnitude.
    pub fn argmax(&self) -> Option<(usize, i64)> {
        self.cells()
            .fold(None, |best: Option<(usize, i64, f64)>, c| match best {
                Some(b) if b.2 >= c.2 => Some(b),
                _ => Some(c),
            })
            .map(|(d, k, _)| (d, k))
    }
}

/// Matched filter over every delay bin of the frame.
pub fn matched_filter_map(rx: &TimeSeries, tx: &TimeSeries) -> Result<MfMap> {
    matched_filter_window(rx, tx, 0..tx.frame().len())
}

/// Matched filter restricted to a range of delay bins. Each delay stripe is
/// one FFT of the lag product over the full frame.
pub fn matched_filter_window(rx: &TimeSeries, tx: &TimeSeries, delays: Range<usize>) -> Result<MfMap> {
    if rx.len() != tx.len() {
        return Err(Error::LengthMismatch { left: rx.len(), right: tx.len() });
    }
    let frame: Frame = *tx.frame();
    let len = frame.len();
    if delays.end > len || delays.is_empty() {
        return Err(Error::EmptyMap);
    }
    let n = frame.n();
    let half = n / 2;
    let fft = forward_plan(len);
    let mut lag = vec![Complex64::new(0.0, 0.0); len];
    let mut values = Vec::with_capacity(delays.len() * n);
    let (r, t) = (rx.samples(), tx.samples());
    for d in delays.clone() {
        for (i, slot) in lag.iter_mut().enumerate() {
            *slot = r[i] * t[(i + len - d) % len].conj();
        }
        fft.process(&mut lag);
        for j in 0..n {
            let bin = j as i64 - half as i64;
            values.push(lag[bin.rem_euclid(len as i64) as usize]);
        }
    }
    Ok(MfMap {
        values,
        delays,
        doppler_bins: n,
        delay_step: frame.delay_bin(),
        doppler_step: frame.doppler_bin(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub delay_bin: usize,
    pub doppler_bin: i64,
    /// Seconds.
    pub delay: f64,
    /// Hz.
    pub doppler: f64,
    pub value: Complex64,
    pub magnitude: f64,
    pub is_los: bool,
}

/// Greedy extraction of local maxima above `threshold_rel` times the global
/// maximum, keeping a one-bin guard around each accepted peak. Detections are
/// returned in order of delay; the earliest one is flagged line-of-sight.
pub fn detect_peaks(map: &MfMap, threshold_rel: f64) -> Result<Vec<Detection>> {
    if map.is_empty() {
        return Err(Error::EmptyMap);
    }
    if !(threshold_rel > 0.0 && threshold_rel < 1.0) {
        return Err(Error::InvalidParameter { name: "relative threshold", value: threshold_rel });
    }
    let peak = map.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak <= 0.0 {
        return Ok(Vec::new());
    }
    let floor = threshold_rel * peak;
    let dopplers = map.doppler_range();
    let wrap = |k: i64| (k - dopplers.start).rem_euclid(map.doppler_bins as i64) + dopplers.start;
    let neighbours = |d: usize, k: i64| {
        let lo = d.saturating_sub(1).max(map.delays.start);
        let hi = (d + 1).min(map.delays.end - 1);
        (lo..=hi).flat_map(move |dd| (-1..=1).map(move |dk| (dd, wrap(k + dk))))
    };

    let mut candidates: Vec<(usize, i64, f64)> = map
        .cells()
        .filter(|&(d, k, mag)| {
            mag >= floor && neighbours(d, k).all(|(dd, kk)| map.value(dd, kk).map_or(true, |v| v.norm() <= mag))
        })
        .collect();
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut accepted: Vec<(usize, i64, f64)> = Vec::new();
    for c in candidates {
        let guarded = accepted.iter().any(|a| {
            let dk = (wrap(c.1 - a.1)).abs();
            a.0.abs_diff(c.0) <= 1 && dk <= 1
        });
        if !guarded {
            accepted.push(c);
        }
    }
    accepted.sort_by(|a, b| a.0.cmp(&b.0).then(b.2.total_cmp(&a.2)).then(a.1.cmp(&b.1)));
    Ok(accepted
        .iter()
        .enumerate()
        .map(|(i, &(d, k, mag))| Detection {
            delay_bin: d,
            doppler_bin: k,
            delay: d as f64 * map.delay_step,
            doppler: k as f64 * map.doppler_step,
            value: map.value(d, k).expect("cell inside the map"),
            magnitude: mag,
            is_los: i == 0,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlosStrengthEstimate {
    pub e_hat: f64,
}

/// Ratio of summed squared NLOS peak magnitudes to the squared LOS peak.
pub fn estimate_nlos_strength(detections: &[Detection]) -> Result<NlosStrengthEstimate> {
    let los = detections.iter().find(|d| d.is_los).ok_or(Error::NoLosDetection)?;
    let los_power = los.magnitude * los.magnitude;
    if los_power <= 0.0 {
        return Err(Error::NoLosDetection);
    }
    let nlos: f64 = detections.iter().filter(|d| !d.is_los).map(|d| d.magnitude * d.magnitude).sum();
    Ok(NlosStrengthEstimate { e_hat: nlos / los_power })
}

/// Scan grid for MUSIC. Grid points are whole multiples of `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    step: f64,
    azimuths: Vec<f64>,
    elevations: Vec<f64>,
    elevation_wraps: bool,
}

fn multiples(lo: f64, hi: f64, step: f64, include_hi: bool) -> Vec<f64> {
    let first = (lo / step - 1e-9).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last)
        .map(|i| i as f64 * step)
        .filter(|&x| include_hi || x < hi - 1e-12)
        .collect()
}

impl AngleGrid {
    /// Lower hemisphere: azimuth in `[0, pi/2]`, elevation in `[-pi, pi)`.
    pub fn hemisphere(step: f64) -> Result<Self> {
        Self::check_step(step)?;
        use std::f64::consts::{FRAC_PI_2, PI};
        Ok(Self {
            step,
            azimuths: multiples(0.0, FRAC_PI_2, step, true),
            elevations: multiples(-PI, PI, step, false),
            elevation_wraps: true,
        })
    }

    /// Square window of half-width `half_width` around a prior direction.
    pub fn around(center: &Direction, half_width: f64, step: f64) -> Result<Self> {
        Self::check_step(step)?;
        use std::f64::consts::FRAC_PI_2;
        let lo = (center.azimuth() - half_width).max(-FRAC_PI_2);
        let hi = (center.azimuth() + half_width).min(FRAC_PI_2);
        let c = center.elevation();
        Ok(Self {
            step,
            azimuths: multiples(lo, hi, step, true),
            elevations: multiples(c - half_width, c + half_width, step, true)
                .into_iter()
                .map(wrap_angle)
                .collect(),
            elevation_wraps: false,
        })
    }

    fn check_step(step: f64) -> Result<()> {
        if !(step > 0.0 && step < 1.0) {
            return Err(Error::InvalidParameter { name: "grid step", value: step });
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.azimuths.len() * self.elevations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// MUSIC pseudo-spectrum over `grid`, row-major by azimuth.
pub fn music_spectrum(
    cfg: &UpaConfig,
    snapshots: &DMatrix<Complex64>,
    source_count: usize,
    grid: &AngleGrid,
) -> Result<Vec<f64>> {
    let elements = cfg.elements();
    if snapshots.nrows() != elements {
        return Err(Error::LengthMismatch { left: snapshots.nrows(), right: elements });
    }
    if source_count == 0 || source_count >= elements || snapshots.ncols() < source_count {
        return Err(Error::RankDeficient { snapshots: snapshots.ncols(), sources: source_count });
    }
    let k = snapshots.ncols() as f64;
    let cov = (snapshots * snapshots.adjoint()).map(|z| z / k);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..elements).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    // Signal subspace, conjugated and laid out per source.
    let signal: Vec<Vec<Complex64>> = order[..source_count]
        .iter()
        .map(|&c| eig.eigenvectors.column(c).iter().map(|z| z.conj()).collect())
        .collect();

    let (nx, ny) = (cfg.nx(), cfg.ny());
    let scale = 1.0 / (elements as f64).sqrt();
    let mut out = Vec::with_capacity(grid.len());
    let mut pow_y = vec![Complex64::new(0.0, 0.0); ny];
    let mut pow_x = vec![Complex64::new(0.0, 0.0); nx];
    for &theta in &grid.azimuths {
        let st = theta.sin();
        for &phi in &grid.elevations {
            let (sp, cp) = phi.sin_cos();
            fill_powers(&mut pow_x, Complex64::from_polar(1.0, std::f64::consts::PI * st * sp));
            fill_powers(&mut pow_y, Complex64::from_polar(1.0, std::f64::consts::PI * st * cp));
            let mut captured = 0.0;
            for e in &signal {
                let mut acc = Complex64::new(0.0, 0.0);
                for (ix, px) in pow_x.iter().enumerate() {
                    let row = &e[ix * ny..(ix + 1) * ny];
                    let inner: Complex64 = row.iter().zip(&pow_y).map(|(a, b)| a * b).sum();
                    acc += px * inner;
                }
                captured += (acc * scale).norm_sqr();
            }
            out.push(1.0 / (1.0 - captured).max(1e-15));
        }
    }
    Ok(out)
}

// Powers z^1..=z^len, matching 1-based element indices.
fn fill_powers(buf: &mut [Complex64], z: Complex64) {
    let mut p = z;
    for slot in buf {
        *slot = p;
        p *= z;
    }
}

/// MUSIC: the `source_count` strongest local maxima of the pseudo-spectrum.
/// Snapshots are laid out one column per time instant.
pub fn estimate_angles(
    cfg: &UpaConfig,
    snapshots: &DMatrix<Complex64>,
    source_count: usize,
    grid: &AngleGrid,
) -> Result<Vec<Direction>> {
    let spec = music_spectrum(cfg, snapshots, source_count, grid)?;
    let (na, ne) = (grid.azimuths.len(), grid.elevations.len());
    if na == 0 || ne == 0 {
        return Err(Error::EmptyMap);
    }
    let at = |a: usize, e: usize| spec[a * ne + e];
    let mut peaks = Vec::new();
    for a in 0..na {
        for e in 0..ne {
            let v = at(a, e);
            let mut is_peak = true;
            'scan: for da in -1i64..=1 {
                for de in -1i64..=1 {
                    if da == 0 && de == 0 {
                        continue;
                    }
                    let aa = a as i64 + da;
                    if aa < 0 || aa >= na as i64 {
                        continue;
                    }
                    let mut ee = e as i64 + de;
                    if grid.elevation_wraps {
                        ee = ee.rem_euclid(ne as i64);
                    } else if ee < 0 || ee >= ne as i64 {
                        continue;
                    }
                    if at(aa as usize, ee as usize) > v {
                        is_peak = false;
                        break 'scan;
                    }
                }
            }
            if is_peak {
                peaks.push((v, a, e));
            }
        }
    }
    peaks.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    Ok(peaks
        .into_iter()
        .take(source_count)
        .map(|(_, a, e)| Direction::new(grid.azimuths[a], grid.elevations[e]))
        .collect())
}

/// Array snapshots of unit-power random sources plus white noise.
pub fn synthetic_snapshots<R: Rng + ?Sized>(
    cfg: &UpaConfig,
    sources: &[Direction],
    count: usize,
    noise_power: f64,
    rng: &mut R,
) -> DMatrix<Complex64> {
    let elements = cfg.elements();
    let vectors: Vec<_> = sources.iter().map(|d| steering(cfg, d)).collect();
    let root_n = (elements as f64).sqrt();
    let mut gauss = |var: f64| {
        let s = (var / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * s, im * s)
    };
    let mut m = DMatrix::from_element(elements, count, Complex64::new(0.0, 0.0));
    for t in 0..count {
        for v in &vectors {
            let sym = gauss(1.0);
            for i in 0..elements {
                // Undo the unit-norm scaling so each element sees unit power.
                m[(i, t)] += v.entries()[i] * root_n * sym;
            }
        }
        for i in 0..elements {
            m[(i, t)] += gauss(noise_power);
        }
    }
    m
}

/// Stacks the per-element streams at the given sample instants.
pub fn snapshots_from_channels(channels: &[TimeSeries], instants: &[usize]) -> Result<DMatrix<Complex64>> {
    let len = channels.first().map_or(0, |c| c.len());
    if channels.iter().any(|c| c.len() != len) {
        return Err(Error::LengthMismatch { left: len, right: 0 });
    }
    if let Some(&bad) = instants.iter().find(|&&i| i >= len) {
        return Err(Error::LengthMismatch { left: bad, right: len });
    }
    Ok(DMatrix::from_fn(channels.len(), instants.len(), |r, c| channels[r].samples()[instants[c]]))
}
