//! Parametric delay-Doppler multipath channel.
//!
//! Delays are applied cyclically over the frame, which models a cyclic prefix
//! spanning the whole frame. Doppler shifts are applied exactly as a phase ramp
//! over absolute sample time.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{beam_gain, steering, Direction, UpaConfig};
use crate::dd_signal::{Frame, TimeSeries};
use crate::error::{Error, Result};
use crate::motion::MotionState;
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub g_tx: f64,
    pub g_rx: f64,
    pub carrier: f64,
    pub n0: f64,
    /// Radar cross-section scaling the echo power.
    pub rcs: f64,
}

impl LinkBudget {
    pub fn new(g_tx: f64, g_rx: f64, carrier: f64, n0: f64) -> Result<Self> {
        for (name, value) in [("transmit gain", g_tx), ("receive gain", g_rx), ("carrier", carrier), ("noise power", n0)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        Ok(Self { g_tx, g_rx, carrier, n0, rcs: 1.0 })
    }

    pub fn with_rcs(mut self, rcs: f64) -> Result<Self> {
        if !(rcs > 0.0 && rcs.is_finite()) {
            return Err(Error::InvalidParameter { name: "radar cross-section", value: rcs });
        }
        self.rcs = rcs;
        Ok(self)
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier
    }
}

/// Free-space large-scale gain `G_T G_R lambda^2 / ((4 pi)^2 d^2)`. Rate
/// formulas use its square as the channel power.
pub fn path_loss(budget: &LinkBudget, d: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidParameter { name: "distance", value: d });
    }
    let lambda = budget.wavelength();
    let four_pi = 4.0 * std::f64::consts::PI;
    Ok(budget.g_tx * budget.g_rx * lambda * lambda / (four_pi * four_pi * d * d))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: Complex64,
    /// Seconds.
    pub delay: f64,
    /// Hz.
    pub doppler: f64,
    pub direction: Direction,
    pub is_los: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    paths: Vec<Path>,
}

impl PathSet {
    /// The line-of-sight path must come first, be the only one flagged, and
    /// arrive no later than any other path.
    pub fn new(paths: Vec<Path>) -> Result<Self> {
        let Some(first) = paths.first() else {
            return Err(Error::InvalidPathSet);
        };
        let los_count = paths.iter().filter(|p| p.is_los).count();
        if !first.is_los || los_count != 1 {
            return Err(Error::InvalidPathSet);
        }
        for p in &paths {
            if !(p.delay >= 0.0) || p.delay < first.delay || !p.doppler.is_finite() {
                return Err(Error::InvalidPathSet);
            }
        }
        Ok(Self { paths })
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn los(&self) -> &Path {
        &self.paths[0]
    }

    pub fn nlos(&self) -> &[Path] {
        &self.paths[1..]
    }

    /// Ratio of total non-line-of-sight power to line-of-sight power.
    pub fn nlos_strength(&self) -> f64 {
        let los = self.los().gain.norm_sqr();
        self.nlos().iter().map(|p| p.gain.norm_sqr()).sum::<f64>() / los
    }

    /// One path per line: gain re, gain im, delay s, doppler Hz, azimuth rad,
    /// elevation rad, los flag (0/1).
    pub fn to_text(&self) -> String {
        let mut out = String::from("# gain_re gain_im delay_s doppler_hz azimuth_rad elevation_rad los\n");
        for p in &self.paths {
            let _ = writeln!(
                out,
                "{:e} {:e} {:e} {:e} {:e} {:e} {}",
                p.gain.re,
                p.gain.im,
                p.delay,
                p.doppler,
                p.direction.azimuth(),
                p.direction.elevation(),
                u8::from(p.is_los)
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut paths = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: idx + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 7 {
                return Err(parse_err(format!("expected 7 fields, found {}", fields.len())));
            }
            let mut nums = [0.0; 6];
            for (slot, f) in nums.iter_mut().zip(&fields) {
                *slot = f.parse().map_err(|e| parse_err(format!("{f:?}: {e}")))?;
            }
            let is_los = match fields[6] {
                "1" => true,
                "0" => false,
                other => return Err(parse_err(format!("los flag must be 0 or 1, found {other:?}"))),
            };
            paths.push(Path {
                gain: Complex64::new(nums[0], nums[1]),
                delay: nums[2],
                doppler: nums[3],
                direction: Direction::new(nums[4], nums[5]),
                is_los,
            });
        }
        Self::new(paths)
    }
}

/// Line-of-sight path of a moving user. The echo of a round trip carries
/// twice the delay and Doppler of the one-way link and power `h^2 * rcs`.
pub fn los_path_from_kinematics(state: &MotionState, budget: &LinkBudget, round_trip: bool) -> Result<Path> {
    let d = state.range();
    let h = path_loss(budget, d)?;
    let one_way_doppler = -state.range_rate() * budget.carrier / SPEED_OF_LIGHT;
    let (trips, amplitude) = if round_trip { (2.0, h * budget.rcs.sqrt()) } else { (1.0, h) };
    Ok(Path {
        gain: Complex64::new(amplitude, 0.0),
        delay: trips * d / SPEED_OF_LIGHT,
        doppler: trips * one_way_doppler,
        direction: state.direction(),
        is_los: true,
    })
}

/// Where extra paths may land relative to the line-of-sight path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlosWindow {
    /// Inclusive range of excess delay, in samples.
    pub min_excess_samples: usize,
    pub max_excess_samples: usize,
    /// Fraction of the largest unambiguous Doppler.
    pub doppler_fraction: f64,
}

impl Default for NlosWindow {
    fn default() -> Self {
        Self {
            min_excess_samples: 1,
            max_excess_samples: 16,
            doppler_fraction: 0.25,
        }
    }
}

/// Scattered paths with independent circular Gaussian gains whose total
/// variance is `e * |h_los|^2`. Delays sit a whole number of samples behind the
/// line-of-sight path and Dopplers on whole grid bins inside the window. The
/// scatterers are local to the user, so they share its direction.
pub fn draw_nlos_paths<R: Rng + ?Sized>(
    e: f64,
    los: &Path,
    count: usize,
    window: &NlosWindow,
    frame: &Frame,
    rng: &mut R,
) -> Result<Vec<Path>> {
    if !(e >= 0.0) || !e.is_finite() {
        return Err(Error::InvalidParameter { name: "NLOS strength", value: e });
    }
    if count == 0 {
        return Err(Error::InvalidParameter { name: "NLOS path count", value: 0.0 });
    }
    if window.min_excess_samples == 0 || window.max_excess_samples < window.min_excess_samples {
        return Err(Error::InvalidParameter {
            name: "excess delay window",
            value: window.max_excess_samples as f64,
        });
    }
    let sigma = (e * los.gain.norm_sqr() / count as f64 / 2.0).sqrt();
    let max_bin = (window.doppler_fraction * frame.n() as f64 / 2.0).floor() as i64;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        let excess = rng.random_range(window.min_excess_samples..=window.max_excess_samples);
        let bin = rng.random_range(-max_bin..=max_bin);
        out.push(Path {
            gain: Complex64::new(re * sigma, im * sigma),
            delay: los.delay + excess as f64 * frame.sample_interval(),
            doppler: bin as f64 * frame.doppler_bin(),
            direction: los.direction,
            is_los: false,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkMode {
    /// Monostatic echo, one output stream per receive element.
    Radar,
    /// Single-antenna user.
    Comm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayPolicy {
    /// Reject delays that are not whole samples.
    OnGrid,
    /// Round delays to the nearest sample.
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSetup {
    pub mode: LinkMode,
    pub array: UpaConfig,
    /// Transmit beam direction.
    pub beam: Direction,
    /// Per-sample noise power added at the receiver.
    pub noise_power: f64,
    pub delay_policy: DelayPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Received {
    Radar(Vec<TimeSeries>),
    Comm(TimeSeries),
}

fn delay_samples(delay: f64, frame: &Frame, policy: DelayPolicy) -> Result<usize> {
    let exact = delay / frame.sample_interval();
    let rounded = exact.round();
    if policy == DelayPolicy::OnGrid && (exact - rounded).abs() > 1e-6 {
        return Err(Error::OffGridDelay { delay_s: delay });
    }
    if rounded < 0.0 || rounded >= frame.len() as f64 {
        return Err(Error::DelayOutOfRange {
            delay_samples: exact,
            frame_len: frame.len(),
        });
    }
    Ok(rounded as usize)
}

// Delayed, Doppler-shifted copy of the transmit samples, scaled by `scale`.
fn path_component(tx: &TimeSeries, shift: usize, doppler: f64, scale: Complex64, out: &mut [Complex64]) {
    let len = tx.len();
    let step = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * doppler * tx.sample_interval());
    let samples = tx.samples();
    // Re-anchor the phase periodically so long frames do not drift.
    let mut rot = scale;
    for (i, slot) in out.iter_mut().enumerate() {
        if i % 1024 == 0 {
            rot = scale * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * doppler * i as f64 * tx.sample_interval());
        }
        *slot += samples[(i + len - shift) % len] * rot;
        rot *= step;
    }
}

fn add_noise<R: Rng + ?Sized>(out: &mut [Complex64], noise_power: f64, rng: &mut R) {
    if noise_power <= 0.0 {
        return;
    }
    let sigma = (noise_power / 2.0).sqrt();
    for z in out.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *z += Complex64::new(re * sigma, im * sigma);
    }
}

/// Passes `tx` through every path and adds receiver noise.
pub fn apply_channel<R: Rng + ?Sized>(
    tx: &TimeSeries,
    paths: &[Path],
    setup: &ChannelSetup,
    rng: &mut R,
) -> Result<Received> {
    if !(setup.noise_power >= 0.0) {
        return Err(Error::InvalidParameter { name: "noise power", value: setup.noise_power });
    }
    let frame = *tx.frame();
    let tx_beam = steering(&setup.array, &setup.beam);
    let shifts = paths
        .iter()
        .map(|p| delay_samples(p.delay, &frame, setup.delay_policy))
        .collect::<Result<Vec<_>>>()?;
    match setup.mode {
        LinkMode::Comm => {
            let mut out = vec![Complex64::new(0.0, 0.0); frame.len()];
            for (p, &shift) in paths.iter().zip(&shifts) {
                let b = steering(&setup.array, &p.direction);
                let scale = p.gain * beam_gain(&tx_beam, &b)?;
                path_component(tx, shift, p.doppler, scale, &mut out);
            }
            add_noise(&mut out, setup.noise_power, rng);
            Ok(Received::Comm(TimeSeries::from_vec(frame, out)?))
        }
        LinkMode::Radar => {
            let elements = setup.array.elements();
            // Each element sees the same waveform per path up to its steering
            // weight, so build the path waveforms once.
            let mut waveforms = Vec::with_capacity(paths.len());
            for (p, &shift) in paths.iter().zip(&shifts) {
                let b = steering(&setup.array, &p.direction);
                let scale = p.gain * beam_gain(&tx_beam, &b)?;
                let mut w = vec![Complex64::new(0.0, 0.0); frame.len()];
                path_component(tx, shift, p.doppler, scale, &mut w);
                waveforms.push((b, w));
            }
            let mut outputs = Vec::with_capacity(elements);
            for e in 0..elements {
                let mut out = vec![Complex64::new(0.0, 0.0); frame.len()];
                for (b, w) in &waveforms {
                    let weight = b.entries()[e];
                    for (o, s) in out.iter_mut().zip(w) {
                        *o += weight * s;
                    }
                }
                add_noise(&mut out, setup.noise_power, rng);
                outputs.push(TimeSeries::from_vec(frame, out)?);
            }
            Ok(Received::Radar(outputs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn budget() -> LinkBudget {
        LinkBudget::new(1.0, 1.0, 5e9, 1e-12).unwrap()
    }

    fn series(frame: Frame) -> TimeSeries {
        let data = (0..frame.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        TimeSeries::from_vec(frame, data).unwrap()
    }

    fn path(gain: f64, delay: f64, doppler: f64, dir: Direction, is_los: bool) -> Path {
        Path { gain: Complex64::new(gain, 0.0), delay, doppler, direction: dir, is_los }
    }

    #[test]
    fn path_loss_examples() {
        let b = budget();
        let lambda: f64 = SPEED_OF_LIGHT / 5e9;
        let want = lambda * lambda / ((4.0 * std::f64::consts::PI).powi(2) * 49.0);
        let h7 = path_loss(&b, 7.0).unwrap();
        assert!((h7 - want).abs() < 1e-20);
        assert!((h7 - 4.646e-7).abs() < 1e-9);
        assert!((h7 / path_loss(&b, 14.0).unwrap() - 4.0).abs() < 1e-12);
        assert!((h7 / path_loss(&b, 15.0).unwrap() - (15.0f64 / 7.0).powi(2)).abs() < 1e-12);
        assert!(path_loss(&b, 0.0).is_err());
    }

    #[test]
    fn kinematic_los_path() {
        let b = budget();
        let still = MotionState::new([0.0, 0.0, -7.0], 0.0, 0.0).unwrap();
        let echo = los_path_from_kinematics(&still, &b, true).unwrap();
        assert_eq!(echo.doppler, 0.0);
        assert!((echo.delay - 4.670e-8).abs() < 1e-11);
        let h = path_loss(&b, 7.0).unwrap();
        assert!((echo.gain.norm_sqr() - h * h).abs() < 1e-25);

        // Heading straight at the UAV's nadir line in its own plane.
        let closing = MotionState::new([20.0, 0.0, 0.0], 10.0, std::f64::consts::PI).unwrap();
        let one_way = los_path_from_kinematics(&closing, &b, false).unwrap();
        assert!((one_way.doppler - 166.8).abs() < 0.1);
        let two_way = los_path_from_kinematics(&closing, &b, true).unwrap();
        assert!((two_way.doppler - 2.0 * one_way.doppler).abs() < 1e-9);
        assert!((two_way.delay - 2.0 * one_way.delay).abs() < 1e-20);
    }

    #[test]
    fn nlos_gains_vanish_without_scattering() {
        let f = Frame::square(16).unwrap();
        let los = path(1.0, 0.0, 0.0, Direction::new(0.2, 0.3), true);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let paths = draw_nlos_paths(0.0, &los, 3, &NlosWindow::default(), &f, &mut rng).unwrap();
        assert!(paths.iter().all(|p| p.gain.norm() == 0.0 && p.delay > los.delay && !p.is_los));
        assert!(draw_nlos_paths(-0.1, &los, 3, &NlosWindow::default(), &f, &mut rng).is_err());
    }

    #[test]
    fn nlos_power_matches_the_requested_strength() {
        let f = Frame::square(16).unwrap();
        let los = path(0.3, 0.0, 0.0, Direction::new(0.2, 0.3), true);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 100_000;
        let mut total = 0.0;
        for _ in 0..draws {
            let paths = draw_nlos_paths(0.04, &los, 4, &NlosWindow::default(), &f, &mut rng).unwrap();
            total += paths.iter().map(|p| p.gain.norm_sqr()).sum::<f64>() / los.gain.norm_sqr();
        }
        let mean = total / draws as f64;
        assert!((mean - 0.04).abs() < 0.02 * 0.04, "mean {mean}");
    }

    #[test]
    fn seeded_draws_repeat() {
        let f = Frame::square(16).unwrap();
        let los = path(1.0, 0.0, 0.0, Direction::new(0.2, 0.3), true);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut all = vec![los];
            all.extend(draw_nlos_paths(0.05, &los, 4, &NlosWindow::default(), &f, &mut rng).unwrap());
            PathSet::new(all).unwrap().to_text()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn path_set_text_round_trip() {
        let set = PathSet::new(vec![
            path(0.5, 1e-8, 12.5, Direction::new(0.1, -0.4), true),
            Path { gain: Complex64::new(-0.01, 0.02), ..path(0.0, 3e-8, -40.0, Direction::new(0.3, 2.0), false) },
        ])
        .unwrap();
        let back = PathSet::from_text(&set.to_text()).unwrap();
        assert_eq!(back, set);
        assert!(matches!(PathSet::from_text("1 2 3\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn path_set_invariants() {
        let d = Direction::new(0.0, 0.0);
        assert!(PathSet::new(vec![]).is_err());
        assert!(PathSet::new(vec![path(1.0, 0.0, 0.0, d, false)]).is_err());
        assert!(PathSet::new(vec![path(1.0, 2e-9, 0.0, d, true), path(0.1, 1e-9, 0.0, d, false)]).is_err());
        assert!(PathSet::new(vec![path(1.0, 0.0, 0.0, d, true), path(0.1, 1e-9, 0.0, d, true)]).is_err());
    }

    fn comm_setup(array: UpaConfig, beam: Direction, noise: f64) -> ChannelSetup {
        ChannelSetup { mode: LinkMode::Comm, array, beam, noise_power: noise, delay_policy: DelayPolicy::OnGrid }
    }

    fn comm(rx: Received) -> TimeSeries {
        match rx {
            Received::Comm(ts) => ts,
            Received::Radar(_) => panic!("expected a single stream"),
        }
    }

    #[test]
    fn identity_and_pure_delay() {
        let f = Frame::square(8).unwrap();
        let tx = series(f);
        let dir = Direction::new(0.3, 0.8);
        let array = UpaConfig::new(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let setup = comm_setup(array, dir, 0.0);
        let rx = comm(apply_channel(&tx, &[path(1.0, 0.0, 0.0, dir, true)], &setup, &mut rng).unwrap());
        for (a, b) in rx.samples().iter().zip(tx.samples()) {
            assert!((a - b).norm() < 1e-12);
        }
        let delay = 3.0 * f.sample_interval();
        let rx = comm(apply_channel(&tx, &[path(0.5, delay, 0.0, dir, true)], &setup, &mut rng).unwrap());
        for i in 3..f.len() {
            assert!((rx.samples()[i] - 0.5 * tx.samples()[i - 3]).norm() < 1e-12);
        }
        assert!((rx.energy() - 0.25 * tx.energy()).abs() < 1e-10 * tx.energy());
    }

    #[test]
    fn delay_errors() {
        let f = Frame::square(8).unwrap();
        let tx = series(f);
        let dir = Direction::new(0.0, 0.0);
        let array = UpaConfig::new(1, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut setup = comm_setup(array, dir, 0.0);
        let off = path(1.0, 2.4 * f.sample_interval(), 0.0, dir, true);
        assert!(matches!(apply_channel(&tx, &[off], &setup, &mut rng), Err(Error::OffGridDelay { .. })));
        let late = path(1.0, 64.0 * f.sample_interval(), 0.0, dir, true);
        assert!(matches!(apply_channel(&tx, &[late], &setup, &mut rng), Err(Error::DelayOutOfRange { .. })));
        setup.delay_policy = DelayPolicy::Nearest;
        let rounded = comm(apply_channel(&tx, &[off], &setup, &mut rng).unwrap());
        assert!((rounded.samples()[5] - tx.samples()[3]).norm() < 1e-12);
    }

    #[test]
    fn radar_two_path_energy_ratio() {
        let f = Frame::square(16).unwrap();
        let tx = series(f);
        let dir = Direction::new(0.25, -0.6);
        let array = UpaConfig::new(3, 3).unwrap();
        let setup = ChannelSetup { mode: LinkMode::Radar, array, beam: dir, noise_power: 0.0, delay_policy: DelayPolicy::OnGrid };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let energy = |p: Path, rng: &mut ChaCha8Rng| -> f64 {
            match apply_channel(&tx, &[p], &setup, rng).unwrap() {
                Received::Radar(chs) => chs.iter().map(|c| c.energy()).sum(),
                Received::Comm(_) => unreachable!(),
            }
        };
        let los = path(1.0, 2.0 * f.sample_interval(), 0.0, dir, true);
        let nlos = path(0.2, 7.0 * f.sample_interval(), 3.0 * f.doppler_bin(), dir, false);
        let ratio = energy(nlos, &mut rng) / energy(los, &mut rng);
        assert!((ratio - 0.04).abs() < 1e-10);
        // Matched beam, unit gain: energy is preserved across the elements.
        assert!((energy(path(1.0, 0.0, 0.0, dir, true), &mut rng) - tx.energy()).abs() < 1e-10 * tx.energy());
    }

    #[test]
    fn superposition_over_paths() {
        let f = Frame::square(8).unwrap();
        let tx = series(f);
        let dir = Direction::new(0.1, 0.2);
        let array = UpaConfig::new(2, 2).unwrap();
        let setup = comm_setup(array, dir, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p1 = path(0.7, f.sample_interval(), 2.0 * f.doppler_bin(), dir, true);
        let p2 = path(0.3, 4.0 * f.sample_interval(), -1.0 * f.doppler_bin(), Direction::new(0.4, 1.0), false);
        let both = comm(apply_channel(&tx, &[p1, p2], &setup, &mut rng).unwrap());
        let a = comm(apply_channel(&tx, &[p1], &setup, &mut rng).unwrap());
        let b = comm(apply_channel(&tx, &[p2], &setup, &mut rng).unwrap());
        for i in 0..f.len() {
            assert!((both.samples()[i] - a.samples()[i] - b.samples()[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn noise_is_calibrated() {
        let f = Frame::square(1000).unwrap();
        let tx = TimeSeries::zeros(f);
        let array = UpaConfig::new(1, 1).unwrap();
        let setup = comm_setup(array, Direction::new(0.0, 0.0), 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rx = comm(apply_channel(&tx, &[], &setup, &mut rng).unwrap());
        let var = rx.energy() / rx.len() as f64;
        assert!((var - 0.3).abs() < 0.01 * 0.3, "{var}");
    }
}
