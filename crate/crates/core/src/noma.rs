//! Two-user power-domain NOMA: achievable rates under perfect channel
//! knowledge and under NLOS-induced uncertainty, closed-form power splits for
//! max-min fairness and sum rate, and a brute-force grid oracle.
//!
//! User 1 is the weak user and decodes its signal treating user 2's as noise;
//! user 2 cancels user 1's signal first.

use crate::error::{Error, Result};

/// Slack when testing rate requirements and the power budget.
pub const QOS_TOLERANCE: f64 = 1e-9;

/// Grid resolution used when a report is cross-checked against the oracle.
pub const CHECK_STEPS: usize = 20_000;

/// Objective gap (bits/s/Hz) above which a closed form counts as diverging
/// from the oracle.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelGains {
    h1_sq: f64,
    h2_sq: f64,
    e: f64,
    n0: f64,
    pt: f64,
    swapped: bool,
}

impl ChannelGains {
    /// Orders the users so that user 1 has the weaker channel; `swapped()`
    /// records whether the inputs had to be exchanged.
    pub fn new(h1_sq: f64, h2_sq: f64, e: f64, n0: f64, pt: f64) -> Result<Self> {
        for (name, value) in [("h1^2", h1_sq), ("h2^2", h2_sq)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        for (name, value) in [("NLOS strength", e), ("noise power", n0)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        if !(pt > 0.0 && pt.is_finite()) {
            return Err(Error::InvalidParameter { name: "power budget", value: pt });
        }
        let swapped = h1_sq > h2_sq;
        let (h1_sq, h2_sq) = if swapped { (h2_sq, h1_sq) } else { (h1_sq, h2_sq) };
        Ok(Self { h1_sq, h2_sq, e, n0, pt, swapped })
    }

    pub fn h1_sq(&self) -> f64 {
        self.h1_sq
    }

    pub fn h2_sq(&self) -> f64 {
        self.h2_sq
    }

    pub fn e(&self) -> f64 {
        self.e
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn pt(&self) -> f64 {
        self.pt
    }

    pub fn swapped(&self) -> bool {
        self.swapped
    }

    pub fn with_e(&self, e: f64) -> Result<Self> {
        Self::new(self.h1_sq, self.h2_sq, e, self.n0, self.pt).map(|g| Self { swapped: self.swapped, ..g })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerAllocation {
    pub w1: f64,
    pub w2: f64,
}

impl PowerAllocation {
    pub fn new(w1: f64, w2: f64, pt: f64) -> Result<Self> {
        if !(w1 >= 0.0) || !(w2 >= 0.0) {
            return Err(Error::InvalidParameter { name: "power share", value: w1.min(w2) });
        }
        if w1 + w2 > pt + 1e-12 {
            return Err(Error::InvalidParameter { name: "total power", value: w1 + w2 });
        }
        Ok(Self { w1, w2 })
    }

    /// Full budget with `w2` clamped into `[0, pt]`.
    pub fn from_w2(pt: f64, w2: f64) -> Self {
        let w2 = w2.clamp(0.0, pt);
        Self { w1: pt - w2, w2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosSpec {
    pub r1_min: f64,
    pub r2_min: f64,
}

impl QosSpec {
    pub const NONE: QosSpec = QosSpec { r1_min: 0.0, r2_min: 0.0 };

    pub fn new(r1_min: f64, r2_min: f64) -> Result<Self> {
        for (name, value) in [("r1_min", r1_min), ("r2_min", r2_min)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        Ok(Self { r1_min, r2_min })
    }

    pub fn satisfied_by(&self, r: &Rates) -> bool {
        r.r1 >= self.r1_min - QOS_TOLERANCE && r.r2 >= self.r2_min - QOS_TOLERANCE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bound {
    Perfect,
    /// NLOS treated as interference.
    Lower,
    /// NLOS energy combined with the LOS path.
    Upper,
}

impl Bound {
    pub fn name(&self) -> &'static str {
        match self {
            Bound::Perfect => "perfect",
            Bound::Lower => "lower",
            Bound::Upper => "upper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Objective {
    MaxMin,
    SumRate,
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::MaxMin => "mmf",
            Objective::SumRate => "sr",
        }
    }

    pub fn value(&self, r: &Rates) -> f64 {
        match self {
            Objective::MaxMin => r.r1.min(r.r2),
            Objective::SumRate => r.r1 + r.r2,
        }
    }
}

/// Per-user rates in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rates {
    pub r1: f64,
    pub r2: f64,
}

impl Rates {
    pub fn sum(&self) -> f64 {
        self.r1 + self.r2
    }

    pub fn min(&self) -> f64 {
        self.r1.min(self.r2)
    }
}

fn log_rate(signal: f64, interference: f64) -> f64 {
    if signal <= 0.0 {
        return 0.0;
    }
    (signal / interference).ln_1p() / std::f64::consts::LN_2
}

pub fn rates_perfect(g: &ChannelGains, a: &PowerAllocation) -> Rates {
    let (h1, h2, n0) = (g.h1_sq, g.h2_sq, g.n0);
    Rates {
        r1: log_rate(a.w1 * h1, a.w2 * h1 + n0),
        r2: log_rate(a.w2 * h2, n0),
    }
}

pub fn rates_bound(g: &ChannelGains, a: &PowerAllocation, bound: Bound) -> Rates {
    rates_bound_split(g, a, bound, g.e, g.e)
}

/// Bound rates with a separate NLOS strength per user.
pub fn rates_bound_split(g: &ChannelGains, a: &PowerAllocation, bound: Bound, e1: f64, e2: f64) -> Rates {
    let (h1, h2, n0) = (g.h1_sq, g.h2_sq, g.n0);
    let (w1, w2) = (a.w1, a.w2);
    match bound {
        Bound::Perfect => rates_perfect(g, a),
        Bound::Lower => Rates {
            r1: log_rate(w1 * h1, w2 * (1.0 + e1) * h1 + w1 * e1 * h1 + n0),
            r2: log_rate(w2 * h2, (w1 + w2) * e2 * h2 + n0),
        },
        Bound::Upper => Rates {
            r1: log_rate(w1 * (1.0 + e1) * h1, w2 * (1.0 + e1) * h1 + n0),
            r2: log_rate(w2 * (1.0 + e2) * h2, w1 * e2 * h2 + n0),
        },
    }
}

/// Oracle cross-check attached to a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCheck {
    pub allocation: PowerAllocation,
    pub rates: Rates,
    /// Oracle objective minus closed-form objective.
    pub gap: f64,
    /// The oracle allocation replaces the closed form.
    pub used: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub objective: Objective,
    pub bound: Bound,
    pub feasible: bool,
    /// Closed-form allocation, absent when the problem is infeasible.
    pub allocation: Option<PowerAllocation>,
    /// Rates of the closed-form allocation under the report's bound.
    pub rates: Rates,
    pub oracle: Option<OracleCheck>,
}

impl RateReport {
    fn closed(objective: Objective, bound: Bound, g: &ChannelGains, alloc: PowerAllocation) -> Self {
        Self {
            objective,
            bound,
            feasible: true,
            allocation: Some(alloc),
            rates: rates_bound(g, &alloc, bound),
            oracle: None,
        }
    }

    fn infeasible(objective: Objective, bound: Bound) -> Self {
        Self { objective, bound, feasible: false, allocation: None, rates: Rates::default(), oracle: None }
    }

    /// Allocation to act on: the oracle's when it replaced the closed form.
    pub fn effective_allocation(&self) -> Option<PowerAllocation> {
        match self.oracle {
            Some(o) if o.used => Some(o.allocation),
            _ => self.allocation,
        }
    }

    pub fn effective_rates(&self) -> Rates {
        match self.oracle {
            Some(o) if o.used => o.rates,
            _ => self.rates,
        }
    }

    pub fn diverged(&self) -> bool {
        self.oracle.is_some_and(|o| o.gap > DIVERGENCE_TOLERANCE)
    }

    pub fn objective_value(&self) -> f64 {
        self.objective.value(&self.rates)
    }
}

// Smaller root-free form of the positive root of x^2 + b x - c = 0.
fn positive_root(b: f64, c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    2.0 * c / (b + (b * b + 4.0 * c).sqrt())
}

/// Max-min fairness with perfect channel knowledge; both users end up with
/// the same rate.
pub fn mmf_perfect(g: &ChannelGains) -> RateReport {
    let (a, b, n0, pt) = (g.h1_sq, g.h2_sq, g.n0, g.pt);
    // Positive root of a b w^2 + (a + b) n0 w - pt a n0 = 0.
    let w2 = positive_root((a + b) * n0 / (a * b), pt * n0 / b);
    RateReport::closed(Objective::MaxMin, Bound::Perfect, g, PowerAllocation::from_w2(pt, w2))
}

/// Sum rate subject to per-user minimum rates. The sum grows with the strong
/// user's share, so user 1's requirement is met with equality.
pub fn sr_perfect(g: &ChannelGains, q: &QosSpec) -> RateReport {
    let (a, b, n0, pt) = (g.h1_sq, g.h2_sq, g.n0, g.pt);
    let scale = q.r1_min.exp2();
    let w2 = (pt * a - (scale - 1.0) * n0) / (scale * a);
    let w2_floor = (q.r2_min.exp2() - 1.0) * n0 / b;
    if !(w2 >= 0.0) || w2 < w2_floor - QOS_TOLERANCE * pt || w2 > pt {
        return RateReport::infeasible(Objective::SumRate, Bound::Perfect);
    }
    RateReport::closed(Objective::SumRate, Bound::Perfect, g, PowerAllocation::from_w2(pt, w2))
}

/// Literal lower-bound max-min split, exact only when noise is negligible.
pub fn mmf_lower_noiseless_w2(pt: f64, e: f64) -> f64 {
    (pt * pt * e * e + pt * pt * e).sqrt() - pt * e
}

/// Literal upper-bound max-min split. It carries no power scaling and does not
/// equalize the two upper-bound rates in general.
pub fn mmf_upper_literal_w2(e: f64) -> f64 {
    (1.0 + e).sqrt() - 1.0
}

/// Equal-rate split under the lower bound, including noise.
pub fn mmf_lower_equal_rate_w2(g: &ChannelGains) -> f64 {
    let (pt, e) = (g.pt, g.e);
    let n1 = g.n0 / g.h1_sq;
    let n2 = g.n0 / g.h2_sq;
    positive_root(2.0 * pt * e + n1 + n2, pt * (pt * e + n2))
}

/// Equal-rate split under the upper bound, including noise.
pub fn mmf_upper_equal_rate_w2(g: &ChannelGains) -> f64 {
    let (pt, e, n0, b) = (g.pt, g.e, g.n0, g.h2_sq);
    let big_a = (1.0 + e) * g.h1_sq;
    let big_b = (1.0 + e) * b;
    let lead = big_a * b;
    let lin = (2.0 * big_a * e * b * pt + (big_a + big_b) * n0) / lead;
    let constant = (big_a * e * b * pt * pt + big_a * n0 * pt) / lead;
    positive_root(lin, constant)
}

/// Literal stationary point of the upper-bound sum rate.
pub fn sr_upper_stationary_w2(pt: f64, e: f64) -> f64 {
    pt * ((e * e + 1.0).sqrt() - e)
}

fn attach_oracle(
    mut report: RateReport,
    g: &ChannelGains,
    q: &QosSpec,
    force: bool,
) -> Result<RateReport> {
    let alloc = grid_oracle(g, report.objective, q, report.bound, CHECK_STEPS)?;
    let rates = rates_bound(g, &alloc, report.bound);
    let closed = if report.feasible { report.objective_value() } else { f64::NEG_INFINITY };
    let gap = report.objective.value(&rates) - closed;
    report.oracle = Some(OracleCheck { allocation: alloc, rates, gap, used: force || gap > DIVERGENCE_TOLERANCE });
    Ok(report)
}

/// Max-min fairness under an imperfect-channel bound. The lower bound uses
/// the exact equal-rate split; the upper bound ships the literal formula and
/// is always cross-checked against the oracle, which takes over when the two
/// diverge or the formula leaves `[0, pt]`.
pub fn mmf_imperfect(g: &ChannelGains, bound: Bound) -> Result<RateReport> {
    match bound {
        Bound::Perfect => Ok(mmf_perfect(g)),
        Bound::Lower => {
            let w2 = mmf_lower_equal_rate_w2(g);
            Ok(RateReport::closed(Objective::MaxMin, Bound::Lower, g, PowerAllocation::from_w2(g.pt, w2)))
        }
        Bound::Upper => {
            let w2 = mmf_upper_literal_w2(g.e);
            let in_range = (0.0..=g.pt).contains(&w2);
            let report = if in_range {
                RateReport::closed(Objective::MaxMin, Bound::Upper, g, PowerAllocation::from_w2(g.pt, w2))
            } else {
                RateReport::infeasible(Objective::MaxMin, Bound::Upper)
            };
            attach_oracle(report, g, &QosSpec::NONE, !in_range)
        }
    }
}

/// Sum rate under an imperfect-channel bound. The lower bound keeps user 1's
/// requirement active; the upper bound uses the literal stationary point and
/// falls back to the oracle when that point violates the requirements.
pub fn sr_imperfect(g: &ChannelGains, q: &QosSpec, bound: Bound) -> Result<RateReport> {
    let pt = g.pt;
    match bound {
        Bound::Perfect => Ok(sr_perfect(g, q)),
        Bound::Lower => {
            let n1 = g.n0 / g.h1_sq;
            let w2 = (pt * (1.0 + g.e) + n1) / q.r1_min.exp2() - pt * g.e - n1;
            if !(w2 >= 0.0) || w2 > pt * (1.0 + 1e-12) {
                return Ok(RateReport::infeasible(Objective::SumRate, Bound::Lower));
            }
            let report = RateReport::closed(Objective::SumRate, Bound::Lower, g, PowerAllocation::from_w2(pt, w2));
            if !q.satisfied_by(&report.rates) {
                return Ok(RateReport::infeasible(Objective::SumRate, Bound::Lower));
            }
            Ok(report)
        }
        Bound::Upper => {
            let w2 = sr_upper_stationary_w2(pt, g.e);
            let alloc = PowerAllocation::from_w2(pt, w2);
            let report = RateReport::closed(Objective::SumRate, Bound::Upper, g, alloc);
            let usable = (0.0..=pt).contains(&w2) && q.satisfied_by(&report.rates);
            let report = if usable { report } else { RateReport { feasible: false, ..report } };
            match attach_oracle(report, g, q, !usable) {
                Ok(r) => Ok(r),
                Err(Error::Infeasible) => Ok(RateReport::infeasible(Objective::SumRate, Bound::Upper)),
                Err(e) => Err(e),
            }
        }
    }
}

/// Exhaustive search over `w2 in {0, pt/steps, ..., pt}` on the exact rate
/// expressions, followed by a golden-section polish inside the best cell so
/// the answer is not limited by the grid spacing. Grid points violating the
/// sum-rate requirements are skipped.
pub fn grid_oracle(
    g: &ChannelGains,
    objective: Objective,
    q: &QosSpec,
    bound: Bound,
    steps: usize,
) -> Result<PowerAllocation> {
    if steps < 1_000 {
        return Err(Error::InvalidParameter { name: "oracle steps", value: steps as f64 });
    }
    let pt = g.pt;
    let score = |w2: f64| -> f64 {
        let r = rates_bound(g, &PowerAllocation::from_w2(pt, w2), bound);
        if objective == Objective::SumRate && !q.satisfied_by(&r) {
            return f64::NEG_INFINITY;
        }
        objective.value(&r)
    };
    let mut best = (f64::NEG_INFINITY, 0usize);
    for i in 0..=steps {
        let v = score(pt * i as f64 / steps as f64);
        if v > best.0 {
            best = (v, i);
        }
    }
    if best.0 == f64::NEG_INFINITY {
        return Err(Error::Infeasible);
    }
    let at = |i: usize| pt * i as f64 / steps as f64;
    let (mut lo, mut hi) = (at(best.1.saturating_sub(1)), at((best.1 + 1).min(steps)));
    let mut best_w2 = at(best.1);
    let mut best_v = best.0;
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (score(x1), score(x2));
    for _ in 0..80 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = score(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = score(x2);
        }
        if hi - lo < 1e-15 * pt {
            break;
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > best_v {
            best_v = v;
            best_w2 = x;
        }
    }
    Ok(PowerAllocation::from_w2(pt, best_w2))
}

/// Objective value of the oracle optimum.
pub fn oracle_value(g: &ChannelGains, objective: Objective, q: &QosSpec, bound: Bound, steps: usize) -> Result<f64> {
    let a = grid_oracle(g, objective, q, bound, steps)?;
    Ok(objective.value(&rates_bound(g, &a, bound)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gains(h1: f64, h2: f64, e: f64, n0: f64, pt: f64) -> ChannelGains {
        ChannelGains::new(h1, h2, e, n0, pt).unwrap()
    }

    #[test]
    fn construction_orders_users() {
        let g = gains(4.0, 1.0, 0.0, 1.0, 1.0);
        assert!(g.swapped());
        assert_eq!((g.h1_sq(), g.h2_sq()), (1.0, 4.0));
        assert!(ChannelGains::new(1.0, 1.0, -0.1, 1.0, 1.0).is_err());
        assert!(ChannelGains::new(1.0, 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(PowerAllocation::new(0.6, 0.5, 1.0).is_err());
        assert!(QosSpec::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn perfect_rate_examples() {
        let g = gains(1.0, 1.0, 0.0, 1.0, 2.0);
        let r = rates_perfect(&g, &PowerAllocation { w1: 1.0, w2: 1.0 });
        assert!((r.r1 - 1.5f64.log2()).abs() < 1e-15);
        assert!((r.r2 - 1.0).abs() < 1e-15);

        let g = gains(0.3, 0.9, 0.0, 0.01, 1.0);
        let r = rates_perfect(&g, &PowerAllocation { w1: 1.0, w2: 0.0 });
        assert_eq!(r.r2, 0.0);
        assert!((r.r1 - (1.0 + 0.3 / 0.01f64).log2()).abs() < 1e-12);
    }

    #[test]
    fn bound_rates_match_hand_evaluation() {
        let g = gains(1.0, 1.0, 0.05, 0.01, 1.0);
        let a = PowerAllocation { w1: 0.7, w2: 0.3 };
        let lo = rates_bound(&g, &a, Bound::Lower);
        let up = rates_bound(&g, &a, Bound::Upper);
        assert!((lo.r1 - (1.0f64 + 0.7 / (0.3 * 1.05 + 0.7 * 0.05 + 0.01)).log2()).abs() < 1e-12);
        assert!((lo.r2 - (1.0f64 + 0.3 / (1.0 * 0.05 + 0.01)).log2()).abs() < 1e-12);
        assert!((up.r1 - (1.0f64 + 0.7 * 1.05 / (0.3 * 1.05 + 0.01)).log2()).abs() < 1e-12);
        assert!((up.r2 - (1.0f64 + 0.3 * 1.05 / (0.7 * 0.05 + 0.01)).log2()).abs() < 1e-12);
    }

    #[test]
    fn mmf_perfect_symmetric_example() {
        let g = gains(1.0, 1.0, 0.0, 1.0, 1.0);
        let rep = mmf_perfect(&g);
        let w2 = rep.allocation.unwrap().w2;
        assert!((w2 - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!((rep.rates.r1 - rep.rates.r2).abs() < 1e-9);
        let oracle = grid_oracle(&g, Objective::MaxMin, &QosSpec::NONE, Bound::Perfect, 100_000).unwrap();
        assert!((oracle.w2 - w2).abs() <= 1e-5);
        let tiny = gains(1.0, 2.0, 0.0, 1e-14, 1.0);
        assert!(mmf_perfect(&tiny).allocation.unwrap().w2 < 1e-6);
    }

    #[test]
    fn sr_perfect_examples() {
        let g = gains(0.5, 2.0, 0.0, 0.01, 1.0);
        let rep = sr_perfect(&g, &QosSpec::NONE);
        assert_eq!(rep.allocation.unwrap().w2, 1.0);
        let q = QosSpec::new(0.5, 0.0).unwrap();
        let rep = sr_perfect(&g, &q);
        assert!((rep.rates.r1 - 0.5).abs() < 1e-9);
        let infeasible = sr_perfect(&gains(0.001, 0.002, 0.0, 1.0, 1.0), &QosSpec::new(3.0, 0.0).unwrap());
        assert!(!infeasible.feasible && infeasible.allocation.is_none());
    }

    #[test]
    fn mmf_lower_examples() {
        let g = gains(1.0, 1.0, 0.0, 0.1, 1.0);
        assert_eq!(mmf_lower_noiseless_w2(1.0, 0.0), 0.0);
        let near_noiseless = gains(1.0, 3.0, 0.05, 1e-12, 1.0);
        let w2 = mmf_imperfect(&near_noiseless, Bound::Lower).unwrap().allocation.unwrap().w2;
        assert!((w2 - 0.17913).abs() < 1e-5, "{w2}");
        assert!((mmf_lower_noiseless_w2(1.0, 0.05) - 0.17913).abs() < 1e-5);
        // With no scattering the lower bound is the perfect-channel problem.
        let lo = mmf_imperfect(&g, Bound::Lower).unwrap().allocation.unwrap().w2;
        assert!((lo - mmf_perfect(&g).allocation.unwrap().w2).abs() < 1e-12);
    }

    #[test]
    fn mmf_upper_literal_is_reported_against_the_oracle() {
        let g = gains(1.0, 1.0, 0.05, 1e-4, 1.0);
        let rep = mmf_imperfect(&g, Bound::Upper).unwrap();
        assert!((rep.allocation.unwrap().w2 - 0.02470).abs() < 1e-5);
        let check = rep.oracle.unwrap();
        assert!(check.gap >= -1e-9);
        // The equal-rate root is the true optimum of the upper bound.
        let exact = mmf_upper_equal_rate_w2(&g);
        let r = rates_bound(&g, &PowerAllocation::from_w2(1.0, exact), Bound::Upper);
        assert!((r.r1 - r.r2).abs() < 1e-9);
        assert!((r.min() - check.rates.min()).abs() < 1e-6);
    }

    #[test]
    fn sr_imperfect_examples() {
        let q = QosSpec::new(0.5, 0.0).unwrap();
        let g0 = gains(0.4, 1.0, 0.0, 0.01, 1.0);
        let lo = sr_imperfect(&g0, &q, Bound::Lower).unwrap().allocation.unwrap().w2;
        assert!((lo - sr_perfect(&g0, &q).allocation.unwrap().w2).abs() < 1e-12);
        assert_eq!(sr_upper_stationary_w2(1.0, 0.0), 1.0);
        assert!((sr_upper_stationary_w2(1.0, 0.05) - 0.95125).abs() < 1e-5);

        let g = gains(0.4, 1.0, 0.05, 0.01, 1.0);
        let rep = sr_imperfect(&g, &q, Bound::Lower).unwrap();
        assert!((rep.rates.r1 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn oracle_boundary_cases() {
        let g = gains(0.5, 2.0, 0.0, 0.01, 1.0);
        let a = grid_oracle(&g, Objective::SumRate, &QosSpec::NONE, Bound::Perfect, 1_000).unwrap();
        assert_eq!(a.w2, 1.0);
        // Monotone lower-bound sum rate: the optimum sits on the requirement.
        let g = gains(0.5, 2.0, 0.05, 0.01, 1.0);
        let q = QosSpec::new(0.5, 0.0).unwrap();
        let a = grid_oracle(&g, Objective::SumRate, &q, Bound::Lower, 10_000).unwrap();
        let r = rates_bound(&g, &a, Bound::Lower);
        assert!((r.r1 - 0.5).abs() < 1e-6);
        assert!(grid_oracle(&g, Objective::SumRate, &q, Bound::Lower, 10).is_err());
        let impossible = QosSpec::new(10.0, 10.0).unwrap();
        assert_eq!(grid_oracle(&g, Objective::SumRate, &impossible, Bound::Lower, 1_000).unwrap_err(), Error::Infeasible);
    }
}
