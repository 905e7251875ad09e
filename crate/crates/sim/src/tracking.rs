//! Closed-loop tracking of one user along a curved ground path, the run
//! behind the tracking overlay figure.

use otfs_isac::motion::{predict_state_kinematic, smooth_track, MotionState, SpeedSource, Track, TrackPoint, Tracker};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ScenarioConfig;
use crate::scene::{sense_user, Prior, Scene, SensingOutcome};
use crate::sweep::derive_seed;

/// Ground path with a slowly varying speed and a constant turn rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvedPath {
    pub start: [f64; 3],
    pub heading: f64,
    /// Speed oscillates as `mean + swing * sin(2 pi t / period)`.
    pub mean_speed: f64,
    pub speed_swing: f64,
    pub speed_period: f64,
    /// rad/s.
    pub turn_rate: f64,
}

impl Default for CurvedPath {
    fn default() -> Self {
        Self {
            start: [10.0, -4.0, -5.0],
            heading: 1.2,
            mean_speed: 11.0,
            speed_swing: 2.0,
            speed_period: 0.8,
            turn_rate: 1.0,
        }
    }
}

impl CurvedPath {
    pub fn speed(&self, t: f64) -> f64 {
        self.mean_speed + self.speed_swing * (2.0 * std::f64::consts::PI * t / self.speed_period).sin()
    }

    pub fn heading_at(&self, t: f64) -> f64 {
        self.heading + self.turn_rate * t
    }

    /// State at time `t`, integrated with small midpoint steps.
    pub fn state(&self, t: f64) -> otfs_isac::Result<MotionState> {
        let steps = ((t / 1e-4).ceil() as usize).max(1);
        let dt = t / steps as f64;
        let mut p = self.start;
        for i in 0..steps {
            let tm = (i as f64 + 0.5) * dt;
            let (s, c) = self.heading_at(tm).sin_cos();
            let v = self.speed(tm);
            p[0] += v * c * dt;
            p[1] += v * s * dt;
        }
        MotionState::new(p, self.speed(t), self.heading_at(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSample {
    pub time: f64,
    pub truth: [f64; 3],
    pub estimate: [f64; 3],
    pub range_error_pct: f64,
}

#[derive(Debug, Clone)]
pub struct TrackingRun {
    pub samples: Vec<TrackSample>,
    /// First sensing slot, kept for the map and path dumps.
    pub first_look: SensingOutcome,
}

impl TrackingRun {
    pub fn mean_error_pct(&self) -> f64 {
        self.samples.iter().map(|s| s.range_error_pct).sum::<f64>() / self.samples.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingSetup {
    pub path: CurvedPath,
    pub slots: usize,
    pub slot_s: f64,
    pub window: usize,
    pub snr_db: f64,
    pub e: f64,
}

impl TrackingSetup {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            path: CurvedPath::default(),
            slots: 60,
            slot_s: 0.02,
            window: 5,
            snr_db: cfg.sweep.snr_ref,
            e: cfg.sweep.e_ref,
        }
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Senses every slot, predicts the next one, and smooths the predicted track
/// with a centered window. Errors compare predicted and true range.
pub fn run_tracking(cfg: &ScenarioConfig, setup: &TrackingSetup, seed: u64) -> otfs_isac::Result<TrackingRun> {
    let scene = Scene::new(cfg)?;
    let budget = scene.budget(setup.snr_db)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 3]));
    let velocity_resolution = scene.frame.doppler_bin() * otfs_isac::SPEED_OF_LIGHT / scene.carrier() / 2.0;
    let source = if velocity_resolution <= 1.0 { SpeedSource::Doppler } else { SpeedSource::Displacement };

    let start = setup.path.state(0.0)?;
    let mut tracker = Tracker::new(scene.carrier(), source, start.heading(), start.speed());
    let mut prior = Prior { range: start.range(), direction: start.direction() };
    let mut predicted = Vec::with_capacity(setup.slots);
    let mut first_look = None;
    for j in 0..setup.slots {
        let t = j as f64 * setup.slot_s;
        let truth = setup.path.state(t)?;
        let tx = scene.data_frame(&mut rng);
        let seen = sense_user(&scene, &budget, &truth, t, &prior, setup.e, &tx, &mut rng)?;
        let state = tracker.update(&seen.fix)?;
        first_look.get_or_insert(seen);
        let next = predict_state_kinematic(&state, setup.slot_s);
        prior = Prior { range: next.range(), direction: next.direction() };
        predicted.push(TrackPoint { time: t + setup.slot_s, state: next });
    }
    let smoothed = smooth_track(&Track::new(predicted)?, setup.window)?;
    let mut samples = Vec::with_capacity(smoothed.len());
    for p in smoothed.points() {
        let truth = setup.path.state(p.time)?.position();
        let estimate = p.state.position();
        let d = norm(truth);
        samples.push(TrackSample {
            time: p.time,
            truth,
            estimate,
            range_error_pct: 100.0 * (norm(estimate) - d).abs() / d,
        });
    }
    Ok(TrackingRun { samples, first_look: first_look.expect("at least one slot") })
}
