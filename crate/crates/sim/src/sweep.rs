//! Monte Carlo sweep over SNR, NLOS strength and user speed for the three
//! transmission variants.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use otfs_isac::motion::{predict_state_kinematic, MotionState, SpeedSource, Tracker};
use otfs_isac::noma::{
    mmf_imperfect, rates_bound, sr_imperfect, Bound, ChannelGains, Objective, PowerAllocation, QosSpec, Rates,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::error::{SimError, SimResult};
use crate::scene::{advance, ground_user, random_angle, sense_user, Prior, Scene};

const KMH: f64 = 1.0 / 3.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    NomaIsac,
    NomaNoSensing,
    OmaNoSensing,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::NomaIsac, Variant::NomaNoSensing, Variant::OmaNoSensing];

    pub fn name(&self) -> &'static str {
        match self {
            Self::NomaIsac => "noma_isac",
            Self::NomaNoSensing => "noma_no_sensing",
            Self::OmaNoSensing => "oma_no_sensing",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant {s:?}"))
    }
}

pub const OBJECTIVES: [Objective; 2] = [Objective::MaxMin, Objective::SumRate];
pub const BOUNDS: [Bound; 3] = [Bound::Perfect, Bound::Lower, Bound::Upper];

fn objective_rank(o: Objective) -> u8 {
    match o {
        Objective::MaxMin => 0,
        Objective::SumRate => 1,
    }
}

fn bound_rank(b: Bound) -> u8 {
    match b {
        Bound::Perfect => 0,
        Bound::Lower => 1,
        Bound::Upper => 2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub e: f64,
    pub speed_kmh: f64,
}

impl SweepPoint {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.snr_db
            .total_cmp(&other.snr_db)
            .then(self.e.total_cmp(&other.e))
            .then(self.speed_kmh.total_cmp(&other.speed_kmh))
    }
}

/// Which one-dimensional legs of the sweep to run. Each leg varies one axis
/// with the others held at their reference values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Legs {
    pub snr: bool,
    pub e: bool,
    pub speed: bool,
}

impl Legs {
    pub const ALL: Legs = Legs { snr: true, e: true, speed: true };
}

pub fn sweep_points(cfg: &ScenarioConfig, legs: Legs) -> SimResult<Vec<SweepPoint>> {
    let axes = cfg.axes()?;
    let s = &cfg.sweep;
    let mut points = Vec::new();
    if legs.snr {
        points.extend(axes.snr.iter().map(|&snr_db| SweepPoint { snr_db, e: s.e_ref, speed_kmh: s.speed_ref }));
    }
    if legs.e {
        points.extend(axes.e.iter().map(|&e| SweepPoint { snr_db: s.snr_ref, e, speed_kmh: s.speed_ref }));
    }
    if legs.speed {
        points.extend(axes.speed.iter().map(|&speed_kmh| SweepPoint { snr_db: s.snr_ref, e: s.e_ref, speed_kmh }));
    }
    points.sort_by(|a, b| a.cmp_key(b));
    points.dedup_by(|a, b| a.cmp_key(b) == Ordering::Equal);
    Ok(points)
}

/// One row of `results.csv`. Per-user quantities are indexed by user as
/// configured: index 0 is the user at `users.distances[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub point: SweepPoint,
    pub variant: Variant,
    pub objective: Objective,
    pub bound: Bound,
    pub trial: usize,
    /// Delivered rates, bits/s/Hz.
    pub rates: [f64; 2],
    /// Transmit power per user, watts.
    pub allocation: [f64; 2],
    pub feasible: bool,
    /// Mean over users of the next-slot range error, percent.
    pub tracking_error_pct: Option<f64>,
    pub tau_hat: Option<[f64; 2]>,
    pub nu_hat: Option<[f64; 2]>,
    pub e_hat: Option<f64>,
}

impl TrialResult {
    pub fn sum_rate(&self) -> f64 {
        self.rates[0] + self.rates[1]
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        self.point
            .cmp_key(&other.point)
            .then(self.variant.cmp(&other.variant))
            .then(objective_rank(self.objective).cmp(&objective_rank(other.objective)))
            .then(bound_rank(self.bound).cmp(&bound_rank(other.bound)))
            .then(self.trial.cmp(&other.trial))
    }
}

/// Allocation decided by the ISAC variant from its estimates, in the
/// allocator's ordering (user 1 has the weaker channel).
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationRecord {
    pub point: SweepPoint,
    pub trial: usize,
    pub h1_sq: f64,
    pub h2_sq: f64,
    pub e: f64,
    pub n0: f64,
    pub pt: f64,
    pub objective: Objective,
    pub bound: Bound,
    pub w1: f64,
    pub w2: f64,
    pub r1: f64,
    pub r2: f64,
    pub feasible: bool,
}

impl AllocationRecord {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.point
            .cmp_key(&other.point)
            .then(self.trial.cmp(&other.trial))
            .then(objective_rank(self.objective).cmp(&objective_rank(other.objective)))
            .then(bound_rank(self.bound).cmp(&bound_rank(other.bound)))
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutput {
    pub results: Vec<TrialResult>,
    pub allocations: Vec<AllocationRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    pub variants: Vec<Variant>,
    pub legs: Legs,
}

impl RunOptions {
    pub fn new(seed: u64) -> Self {
        Self { seed, variants: Variant::ALL.to_vec(), legs: Legs::ALL }
    }
}

// SplitMix64 finalizer, used to derive independent per-unit seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5eed_u64, |acc, &p| mix(acc ^ mix(p)))
}

fn unit_seeds(master: u64, point: &SweepPoint, trial: usize) -> (u64, u64) {
    // Geometry and data depend on the trial only, so every sweep point sees
    // the same users; noise and scattering depend on the point as well.
    let geometry = derive_seed(&[master, 1, trial as u64]);
    let channel = derive_seed(&[
        master,
        2,
        point.snr_db.to_bits(),
        point.e.to_bits(),
        point.speed_kmh.to_bits(),
        trial as u64,
    ]);
    (geometry, channel)
}

/// Channel knowledge one variant acts on, per configured user.
#[derive(Debug, Clone, Copy)]
struct Csi {
    h_sq: [f64; 2],
    e: f64,
}

fn oma_rate(h_sq: f64, e: f64, n0: f64, pt: f64, bound: Bound) -> f64 {
    let sinr = match bound {
        Bound::Perfect => pt * h_sq / n0,
        Bound::Lower => pt * h_sq / (pt * e * h_sq + n0),
        Bound::Upper => pt * (1.0 + e) * h_sq / n0,
    };
    0.5 * sinr.ln_1p() / std::f64::consts::LN_2
}

// Allocator-ordered pair to per-user order.
fn to_users(pair: [f64; 2], swapped: bool) -> [f64; 2] {
    if swapped {
        [pair[1], pair[0]]
    } else {
        pair
    }
}

fn allocate(g: &ChannelGains, objective: Objective, bound: Bound, q: &QosSpec) -> otfs_isac::Result<(Option<PowerAllocation>, Rates)> {
    let report = match objective {
        Objective::MaxMin => mmf_imperfect(g, bound)?,
        Objective::SumRate => sr_imperfect(g, q, bound)?,
    };
    Ok(match report.effective_allocation() {
        Some(a) => (Some(a), report.effective_rates()),
        None => (None, Rates::default()),
    })
}

struct RateOutcome {
    rates: [f64; 2],
    allocation: [f64; 2],
    feasible: bool,
    record: Option<(ChannelGains, PowerAllocation, Rates)>,
}

/// Schedules on `csi`, then delivers the smaller of the scheduled rate and
/// what the true channel supports, scaled by the usable-grid fraction.
#[allow(clippy::too_many_arguments)]
fn deliver(
    variant: Variant,
    objective: Objective,
    bound: Bound,
    csi: &Csi,
    truth: &Csi,
    n0: f64,
    pt: f64,
    q: &QosSpec,
    overhead: f64,
) -> otfs_isac::Result<RateOutcome> {
    if variant == Variant::OmaNoSensing {
        let mut rates = [0.0; 2];
        for u in 0..2 {
            let sched = oma_rate(csi.h_sq[u], csi.e, n0, pt, bound);
            let real = oma_rate(truth.h_sq[u], truth.e, n0, pt, bound);
            rates[u] = overhead * sched.min(real);
        }
        return Ok(RateOutcome { rates, allocation: [pt, pt], feasible: true, record: None });
    }
    let g_est = ChannelGains::new(csi.h_sq[0], csi.h_sq[1], csi.e, n0, pt)?;
    let (alloc, sched) = allocate(&g_est, objective, bound, q)?;
    let Some(alloc) = alloc else {
        return Ok(RateOutcome {
            rates: [0.0; 2],
            allocation: [0.0; 2],
            feasible: false,
            record: Some((g_est, PowerAllocation { w1: 0.0, w2: 0.0 }, sched)),
        });
    };
    let power = to_users([alloc.w1, alloc.w2], g_est.swapped());
    let sched_users = to_users([sched.r1, sched.r2], g_est.swapped());
    // Decoding order follows the true channels.
    let g_true = ChannelGains::new(truth.h_sq[0], truth.h_sq[1], truth.e, n0, pt)?;
    let true_pair = to_users(power, g_true.swapped());
    let real = rates_bound(&g_true, &PowerAllocation { w1: true_pair[0], w2: true_pair[1] }, bound);
    let real_users = to_users([real.r1, real.r2], g_true.swapped());
    let rates = [0, 1].map(|u| overhead * sched_users[u].min(real_users[u]));
    Ok(RateOutcome { rates, allocation: power, feasible: true, record: Some((g_est, alloc, sched)) })
}

/// Everything one trial produces.
#[derive(Debug, Clone, Default)]
pub struct TrialOutput {
    pub results: Vec<TrialResult>,
    pub allocations: Vec<AllocationRecord>,
}

struct IsacEstimate {
    ranges: [f64; 2],
    tracking_error_pct: f64,
    tau_hat: [f64; 2],
    nu_hat: [f64; 2],
    e_hat: f64,
}

pub fn run_trial(
    cfg: &ScenarioConfig,
    scene: &Scene,
    point: &SweepPoint,
    trial: usize,
    opts: &RunOptions,
) -> otfs_isac::Result<TrialOutput> {
    let (geometry_seed, channel_seed) = unit_seeds(opts.seed, point, trial);
    let mut geo = ChaCha8Rng::seed_from_u64(geometry_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(channel_seed);
    let budget = scene.budget(point.snr_db)?;
    let slot = cfg.frame.slot_s;
    let slots = cfg.sweep.sensing_slots;
    let speed = point.speed_kmh * KMH;

    let mut starts = Vec::with_capacity(2);
    for &d in &cfg.users.distances {
        let azimuth = random_angle(&mut geo);
        let heading = random_angle(&mut geo);
        starts.push(ground_user(d, cfg.users.height_m, azimuth, speed, heading)?);
    }
    let tx_frames: Vec<_> = (0..slots).map(|_| scene.data_frame(&mut geo)).collect();
    let comm_time = slots as f64 * slot;
    let truth_at = |u: usize, t: f64| advance(&starts[u], t);

    let true_ranges = [0, 1].map(|u| truth_at(u, comm_time).range());
    let stale_ranges = [0, 1].map(|u| truth_at(u, comm_time - slot).range());
    let power_at = |d: f64| scene.channel_power(&budget, d);
    let truth = Csi { h_sq: [power_at(true_ranges[0])?, power_at(true_ranges[1])?], e: point.e };

    let isac = if cfg.link.perfect_csi {
        None
    } else {
        Some(track_users(scene, &budget, &starts, &tx_frames, slot, point.e, &mut rng, &true_ranges)?)
    };
    let isac_csi = match &isac {
        Some(est) => Csi { h_sq: [power_at(est.ranges[0])?, power_at(est.ranges[1])?], e: est.e_hat },
        None => truth,
    };
    let stale_csi = if cfg.link.perfect_csi {
        truth
    } else {
        Csi { h_sq: [power_at(stale_ranges[0])?, power_at(stale_ranges[1])?], e: point.e }
    };

    let q = QosSpec::new(cfg.qos.r1_min, cfg.qos.r2_min)?;
    let pilot_overhead = cfg.pilot_overhead();
    let mut out = TrialOutput::default();
    for &variant in &opts.variants {
        let (csi, overhead) = match variant {
            Variant::NomaIsac => (isac_csi, 1.0),
            _ => (stale_csi, pilot_overhead),
        };
        for objective in OBJECTIVES {
            for bound in BOUNDS {
                let r = deliver(variant, objective, bound, &csi, &truth, budget.n0, scene.pt, &q, overhead)?;
                if variant == Variant::NomaIsac {
                    if let Some((g, a, rates)) = r.record {
                        out.allocations.push(AllocationRecord {
                            point: *point,
                            trial,
                            h1_sq: g.h1_sq(),
                            h2_sq: g.h2_sq(),
                            e: g.e(),
                            n0: g.n0(),
                            pt: g.pt(),
                            objective,
                            bound,
                            w1: a.w1,
                            w2: a.w2,
                            r1: rates.r1,
                            r2: rates.r2,
                            feasible: r.feasible,
                        });
                    }
                }
                let sensing = (variant == Variant::NomaIsac).then_some(isac.as_ref()).flatten();
                out.results.push(TrialResult {
                    point: *point,
                    variant,
                    objective,
                    bound,
                    trial,
                    rates: r.rates,
                    allocation: r.allocation,
                    feasible: r.feasible,
                    tracking_error_pct: sensing.map(|s| s.tracking_error_pct),
                    tau_hat: sensing.map(|s| s.tau_hat),
                    nu_hat: sensing.map(|s| s.nu_hat),
                    e_hat: sensing.map(|s| s.e_hat),
                });
            }
        }
    }
    Ok(out)
}

/// Radar-tracks both users over the sensing slots and predicts their range
/// at the communication slot. Speed comes from the Doppler shift only when the
/// frame resolves velocity to 1 m/s; short desk frames fall back to fitting
/// successive fixes.
#[allow(clippy::too_many_arguments)]
fn track_users(
    scene: &Scene,
    budget: &otfs_isac::channel::LinkBudget,
    starts: &[MotionState],
    tx_frames: &[otfs_isac::dd_signal::TimeSeries],
    slot: f64,
    e: f64,
    rng: &mut ChaCha8Rng,
    true_ranges: &[f64; 2],
) -> otfs_isac::Result<IsacEstimate> {
    let velocity_resolution = scene.frame.doppler_bin() * otfs_isac::SPEED_OF_LIGHT / scene.carrier() / 2.0;
    let source = if velocity_resolution <= 1.0 { SpeedSource::Doppler } else { SpeedSource::Displacement };
    let mut ranges = [0.0; 2];
    let mut tau_hat = [0.0; 2];
    let mut nu_hat = [0.0; 2];
    let mut e_sum = 0.0;
    let mut e_count = 0usize;
    let mut error_sum = 0.0;
    for (u, start) in starts.iter().enumerate() {
        let mut tracker = Tracker::new(scene.carrier(), source, start.heading(), start.speed());
        let mut prior = Prior { range: start.range(), direction: start.direction() };
        let mut state = *start;
        for (j, tx) in tx_frames.iter().enumerate() {
            let t = j as f64 * slot;
            let truth = advance(start, t);
            let seen = sense_user(scene, budget, &truth, t, &prior, e, tx, rng)?;
            tau_hat[u] = seen.tau_hat;
            nu_hat[u] = seen.nu_hat;
            e_sum += seen.e_hat;
            e_count += 1;
            state = tracker.update(&seen.fix)?;
            let next = predict_state_kinematic(&state, slot);
            prior = Prior { range: next.range(), direction: next.direction() };
        }
        ranges[u] = predict_state_kinematic(&state, slot).range();
        error_sum += 100.0 * (ranges[u] - true_ranges[u]).abs() / true_ranges[u];
    }
    Ok(IsacEstimate {
        ranges,
        tracking_error_pct: error_sum / starts.len() as f64,
        tau_hat,
        nu_hat,
        e_hat: e_sum / e_count as f64,
    })
}

/// Runs every sweep point and trial on the worker pool. Output order is
/// canonical and independent of scheduling.
pub fn run_sweep(cfg: &ScenarioConfig, opts: &RunOptions) -> SimResult<SweepOutput> {
    cfg.validate()?;
    let scene = Scene::new(cfg)?;
    let points = sweep_points(cfg, opts.legs)?;
    let units: Vec<(SweepPoint, usize)> =
        points.iter().flat_map(|p| (0..cfg.sweep.trials).map(move |t| (*p, t))).collect();
    let outputs = units
        .par_iter()
        .map(|(p, t)| {
            run_trial(cfg, &scene, p, *t, opts).map_err(|source| SimError::Trial {
                snr: p.snr_db,
                e: p.e,
                speed: p.speed_kmh,
                trial: *t,
                source,
            })
        })
        .collect::<SimResult<Vec<_>>>()?;
    let mut out = SweepOutput::default();
    for o in outputs {
        out.results.extend(o.results);
        out.allocations.extend(o.allocations);
    }
    out.results.sort_by(|a, b| a.cmp_key(b));
    out.allocations.sort_by(|a, b| a.cmp_key(b));
    Ok(out)
}
