//! Physical setup shared by every trial of a run, and the radar sensing
//! chain run by the ISAC variant for one user in one slot.

use std::f64::consts::PI;

use otfs_isac::Complex64;
use otfs_isac::array::{steering, Direction, UpaConfig};
use otfs_isac::channel::{
    apply_channel, draw_nlos_paths, los_path_from_kinematics, path_loss, ChannelSetup, DelayPolicy, LinkBudget,
    LinkMode, NlosWindow, PathSet, Received,
};
use otfs_isac::dd_signal::{modulate, DdGrid, Frame, TimeSeries};
use otfs_isac::motion::{MotionState, RadarFix};
use otfs_isac::sensing::{
    detect_peaks, estimate_angles, estimate_nlos_strength, matched_filter_window, snapshots_from_channels, AngleGrid,
    Detection, MfMap,
};
use otfs_isac::SPEED_OF_LIGHT;
use rand::Rng;

use crate::config::ScenarioConfig;

/// Peaks below this fraction of the strongest cell are ignored.
pub const DETECTION_THRESHOLD: f64 = 0.1;
/// Half-width of the MUSIC search window around the prior direction.
pub const ANGLE_WINDOW: f64 = 0.25;
pub const ANGLE_STEP: f64 = 0.01;
/// Delay bins searched before the prior line-of-sight bin.
const DELAY_MARGIN: usize = 8;
const MUSIC_SNAPSHOTS: usize = 64;

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub frame: Frame,
    pub array: UpaConfig,
    pub nlos_window: NlosWindow,
    pub nlos_paths: usize,
    pub pt: f64,
    g_tx: f64,
    g_rx: f64,
    carrier: f64,
    rcs: f64,
    /// Distance of the far user, where the SNR is referenced.
    snr_distance: f64,
}

impl Scene {
    pub fn new(cfg: &ScenarioConfig) -> otfs_isac::Result<Self> {
        Ok(Self {
            frame: Frame::new(cfg.frame.m, cfg.frame.n, cfg.frame.frame_duration_ms * 1e-3)?,
            array: UpaConfig::new(cfg.arrays.nx, cfg.arrays.ny)?,
            nlos_window: NlosWindow {
                min_excess_samples: 1,
                max_excess_samples: cfg.nlos.max_excess_samples,
                doppler_fraction: cfg.nlos.doppler_fraction,
            },
            nlos_paths: cfg.nlos.paths,
            pt: cfg.link.pt,
            g_tx: db_to_linear(cfg.link.g_tx_db),
            g_rx: db_to_linear(cfg.link.g_rx_db),
            carrier: cfg.frame.carrier_ghz * 1e9,
            rcs: cfg.link.rcs,
            snr_distance: cfg.users.distances[0].max(cfg.users.distances[1]),
        })
    }

    pub fn carrier(&self) -> f64 {
        self.carrier
    }

    /// Link budget with the noise power matching `snr_db`, where the SNR is
    /// `pt * h^2 / n0` at the far user's configured distance.
    pub fn budget(&self, snr_db: f64) -> otfs_isac::Result<LinkBudget> {
        let probe = LinkBudget::new(self.g_tx, self.g_rx, self.carrier, 1.0)?;
        let h = path_loss(&probe, self.snr_distance)?;
        let n0 = self.pt * h * h / db_to_linear(snr_db);
        LinkBudget::new(self.g_tx, self.g_rx, self.carrier, n0)?.with_rcs(self.rcs)
    }

    /// Channel power `h^2` at distance `d`.
    pub fn channel_power(&self, budget: &LinkBudget, d: f64) -> otfs_isac::Result<f64> {
        let h = path_loss(budget, d)?;
        Ok(h * h)
    }

    /// Random QPSK data frame carrying `pt` per sample.
    pub fn data_frame<R: Rng + ?Sized>(&self, rng: &mut R) -> TimeSeries {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let data = (0..self.frame.len())
            .map(|_| Complex64::new(if rng.random::<bool>() { s } else { -s }, if rng.random::<bool>() { s } else { -s }))
            .collect();
        let mut ts = modulate(&DdGrid::from_vec(self.frame, data).expect("frame-sized grid"));
        ts.scale(Complex64::new(self.pt.sqrt(), 0.0));
        ts
    }

    fn delay_bin_of_range(&self, range: f64) -> usize {
        (2.0 * range / SPEED_OF_LIGHT / self.frame.sample_interval()).round().max(0.0) as usize
    }
}

/// What the radar knows before looking: where it points its beam and where
/// it searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior {
    pub range: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone)]
pub struct SensingOutcome {
    pub fix: RadarFix,
    /// Round-trip delay of the line-of-sight peak, seconds.
    pub tau_hat: f64,
    /// Round-trip Doppler of the line-of-sight peak, Hz.
    pub nu_hat: f64,
    pub e_hat: f64,
    pub detections: Vec<Detection>,
    pub map: MfMap,
    pub paths: PathSet,
}

/// One radar slot: echo synthesis, receive beamforming, matched filter, peak
/// picking and MUSIC. The strongest peak is taken as line of sight because
/// scattered paths carry a small share of the power.
#[allow(clippy::too_many_arguments)]
pub fn sense_user<R: Rng + ?Sized>(
    scene: &Scene,
    budget: &LinkBudget,
    truth: &MotionState,
    time: f64,
    prior: &Prior,
    e: f64,
    tx: &TimeSeries,
    rng: &mut R,
) -> otfs_isac::Result<SensingOutcome> {
    let los = los_path_from_kinematics(truth, budget, true)?;
    let mut paths = vec![los];
    if e > 0.0 {
        paths.extend(draw_nlos_paths(e, &los, scene.nlos_paths, &scene.nlos_window, &scene.frame, rng)?);
    }
    let paths = PathSet::new(paths)?;
    let setup = ChannelSetup {
        mode: LinkMode::Radar,
        array: scene.array,
        beam: prior.direction,
        noise_power: budget.n0,
        delay_policy: DelayPolicy::Nearest,
    };
    let Received::Radar(streams) = apply_channel(tx, paths.paths(), &setup, rng)? else {
        unreachable!("radar mode returns element streams");
    };

    let weights = steering(&scene.array, &prior.direction);
    let len = scene.frame.len();
    let mut combined = vec![Complex64::new(0.0, 0.0); len];
    for (w, s) in weights.entries().iter().zip(&streams) {
        let w = w.conj();
        for (c, x) in combined.iter_mut().zip(s.samples()) {
            *c += w * x;
        }
    }
    let combined = TimeSeries::from_vec(scene.frame, combined)?;
    let centre = scene.delay_bin_of_range(prior.range);
    let lo = centre.saturating_sub(DELAY_MARGIN).min(len - 1);
    let hi = (centre + scene.nlos_window.max_excess_samples + DELAY_MARGIN + 1).min(len).max(lo + 1);
    let map = matched_filter_window(&combined, tx, lo..hi)?;

    let mut detections = detect_peaks(&map, DETECTION_THRESHOLD)?;
    let strongest = detections
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.magnitude.total_cmp(&b.1.magnitude))
        .map(|(i, _)| i)
        .ok_or(otfs_isac::Error::NoLosDetection)?;
    for (i, d) in detections.iter_mut().enumerate() {
        d.is_los = i == strongest;
    }
    let los_peak = detections[strongest];
    let e_hat = estimate_nlos_strength(&detections)?.e_hat;

    let instants: Vec<usize> = (0..MUSIC_SNAPSHOTS).map(|i| i * len / MUSIC_SNAPSHOTS).collect();
    let snapshots = snapshots_from_channels(&streams, &instants)?;
    let grid = AngleGrid::around(&prior.direction, ANGLE_WINDOW, ANGLE_STEP)?;
    let direction = estimate_angles(&scene.array, &snapshots, 1, &grid)?
        .into_iter()
        .next()
        .ok_or(otfs_isac::Error::EmptyMap)?;

    Ok(SensingOutcome {
        fix: RadarFix {
            time,
            range: SPEED_OF_LIGHT * los_peak.delay / 2.0,
            doppler: los_peak.doppler / 2.0,
            direction,
        },
        tau_hat: los_peak.delay,
        nu_hat: los_peak.doppler,
        e_hat,
        detections,
        map,
        paths,
    })
}

/// Straight-line ground motion starting at `start`.
pub fn advance(start: &MotionState, dt: f64) -> MotionState {
    otfs_isac::motion::predict_state_kinematic(start, dt)
}

/// User on the ground at distance `d` from a UAV at height `height`.
pub fn ground_user(d: f64, height: f64, azimuth: f64, speed: f64, heading: f64) -> otfs_isac::Result<MotionState> {
    let rho = (d * d - height * height).max(0.0).sqrt();
    MotionState::new([rho * azimuth.cos(), rho * azimuth.sin(), -height], speed, heading)
}

pub fn random_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-PI..PI)
}
