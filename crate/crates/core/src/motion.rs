//! User motion relative to the UAV: range and speed from radar observables,
//! next-slot prediction and track smoothing.
//!
//! The UAV sits at the origin with `z` pointing up; users move on a ground
//! plane below it. Two angle conventions coexist: [`Direction`] follows the
//! array steering parametrization, while [`GroundBearing`] holds the ground
//! azimuth (from the `x` axis) and the depression angle used by the triangle
//! relations of the motion topology. Both come from the same Cartesian point.

use std::f64::consts::PI;

use crate::array::Direction;
use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

const ACOS_SLACK: f64 = 1e-9;

fn clamped_acos(x: f64, what: &'static str) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + ACOS_SLACK {
        return Err(Error::DegenerateGeometry(what));
    }
    Ok(x.clamp(-1.0, 1.0).acos())
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Ground azimuth and depression angle of a user seen from the UAV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundBearing {
    pub azimuth: f64,
    pub elevation: f64,
}

/// Position relative to the UAV, ground speed and heading (radians from the
/// `x` axis in the ground plane).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionState {
    position: [f64; 3],
    speed: f64,
    heading: f64,
}

impl MotionState {
    pub fn new(position: [f64; 3], speed: f64, heading: f64) -> Result<Self> {
        let d = norm3(position);
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidParameter { name: "range", value: d });
        }
        if !(speed >= 0.0 && speed.is_finite()) {
            return Err(Error::InvalidParameter { name: "speed", value: speed });
        }
        if !heading.is_finite() {
            return Err(Error::InvalidParameter { name: "heading", value: heading });
        }
        Ok(Self { position, speed, heading })
    }

    pub fn position(&self) -> [f64; 3] {
        self.position
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn range(&self) -> f64 {
        norm3(self.position)
    }

    pub fn velocity(&self) -> [f64; 3] {
        let (s, c) = self.heading.sin_cos();
        [self.speed * c, self.speed * s, 0.0]
    }

    /// Rate of change of range; negative while closing in on the UAV.
    pub fn range_rate(&self) -> f64 {
        let v = self.velocity();
        let p = self.position;
        (v[0] * p[0] + v[1] * p[1] + v[2] * p[2]) / self.range()
    }

    /// Direction in the steering-vector convention.
    pub fn direction(&self) -> Direction {
        Direction::from_vector(self.position).expect("range is positive")
    }

    pub fn bearing(&self) -> GroundBearing {
        let [x, y, z] = self.position;
        GroundBearing {
            azimuth: y.atan2(x),
            elevation: (-z).atan2(x.hypot(y)),
        }
    }

    pub fn with_position(&self, position: [f64; 3]) -> Result<Self> {
        Self::new(position, self.speed, self.heading)
    }
}

/// Range from a round-trip delay.
pub fn range_from_delay(tau: f64) -> Result<f64> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter { name: "delay", value: tau });
    }
    Ok(SPEED_OF_LIGHT * tau / 2.0)
}

// Ground-plane triangle between the user, the point where its heading line
// crosses the x axis, and that point lifted to the UAV. Returns the signed
// user-to-crossing length and the UAV-to-crossing length.
fn heading_triangle(d: f64, bearing: &GroundBearing, heading: f64) -> Result<(f64, f64)> {
    let sv = heading.sin();
    if sv.abs() < 1e-12 {
        return Err(Error::DegenerateGeometry("heading parallel to the reference axis"));
    }
    let ground = d * bearing.elevation.cos();
    let height = d * bearing.elevation.sin();
    let to_crossing = ground * bearing.azimuth.sin() / sv;
    let crossing_offset = ground * (heading - bearing.azimuth).sin() / sv;
    let uav_to_crossing = height.hypot(crossing_offset);
    Ok((to_crossing, uav_to_crossing))
}

/// Angle between the user's velocity and the line from the user to the UAV.
pub fn velocity_angle(d: f64, bearing: &GroundBearing, heading: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidParameter { name: "range", value: d });
    }
    let (d0, d1) = heading_triangle(d, bearing, heading)?;
    if d0.abs() < 1e-12 * d {
        return Err(Error::DegenerateGeometry("user sits on the reference axis"));
    }
    let cos_arg = (d * d + d0 * d0 - d1 * d1) / (2.0 * d * d0);
    Ok(PI - clamped_acos(cos_arg, "velocity triangle does not close")?)
}

/// Ground speed from the one-way Doppler shift.
pub fn speed_from_doppler(nu: f64, phi_v: f64, carrier: f64) -> Result<f64> {
    let c = phi_v.cos();
    if c.abs() < 1e-6 {
        return Err(Error::DegenerateGeometry("motion is orthogonal to the line of sight"));
    }
    if !(carrier > 0.0) {
        return Err(Error::InvalidParameter { name: "carrier", value: carrier });
    }
    Ok(SPEED_OF_LIGHT * nu / (c * carrier))
}

/// Next-slot range from the current range, the distance travelled and the
/// triangle angle at the heading crossing.
pub fn range_after_step(d: f64, step: f64, sin_angle: f64) -> f64 {
    let lateral = d * sin_angle;
    ((d + step - lateral).powi(2) + lateral * lateral).sqrt()
}

/// Literal triangle-based range predictor. It assumes the heading crosses
/// the reference axis ahead of the user and does not reduce to `d` for a
/// static user; [`predict_state_kinematic`] is the predictor used in loops.
pub fn predict_range_literal(state: &MotionState, t_otfs: f64) -> Result<f64> {
    let d = state.range();
    let (d0, d1) = heading_triangle(d, &state.bearing(), state.heading())?;
    if d0.abs() < 1e-12 * d || d1 < 1e-12 * d {
        return Err(Error::DegenerateGeometry("heading crosses the axis at the user"));
    }
    let angle = clamped_acos((d0 * d0 + d1 * d1 - d * d) / (2.0 * d0 * d1), "range triangle does not close")?;
    Ok(range_after_step(d, state.speed() * t_otfs, angle.sin()))
}

/// Constant-velocity advance along the heading.
pub fn predict_state_kinematic(state: &MotionState, dt: f64) -> MotionState {
    let v = state.velocity();
    let p = state.position;
    MotionState {
        position: [p[0] + v[0] * dt, p[1] + v[1] * dt, p[2] + v[2] * dt],
        ..*state
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub time: f64,
    pub state: MotionState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    points: Vec<TrackPoint>,
}

impl Track {
    pub fn new(points: Vec<TrackPoint>) -> Result<Self> {
        if points.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(Error::NonMonotonicTrack);
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[TrackPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Centered moving average of positions; the window shrinks symmetrically at
/// the ends so every output stays centered on its own sample.
pub fn smooth_track(track: &Track, window: usize) -> Result<Track> {
    let len = track.len();
    if window == 0 || window % 2 == 0 || window > len {
        return Err(Error::InvalidWindow { window, len });
    }
    let half = window / 2;
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        let h = half.min(i).min(len - 1 - i);
        let span = &track.points[i - h..=i + h];
        let mut acc = [0.0; 3];
        for p in span {
            for (a, x) in acc.iter_mut().zip(p.state.position) {
                *a += x;
            }
        }
        let n = span.len() as f64;
        let pos = acc.map(|a| a / n);
        out.push(TrackPoint {
            time: track.points[i].time,
            state: track.points[i].state.with_position(pos)?,
        });
    }
    Ok(Track { points: out })
}

/// One radar observation of a user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarFix {
    pub time: f64,
    pub range: f64,
    /// One-way Doppler shift, Hz.
    pub doppler: f64,
    pub direction: Direction,
}

impl RadarFix {
    pub fn position(&self) -> [f64; 3] {
        self.direction.unit_vector().map(|u| u * self.range)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedSource {
    /// Invert the Doppler shift through the velocity angle.
    Doppler,
    /// Fit successive position fixes.
    Displacement,
}

/// Turns radar fixes into motion states. The heading starts from a seed and is
/// then fitted to the recent fixes by least squares.
#[derive(Debug, Clone)]
pub struct Tracker {
    carrier: f64,
    speed_source: SpeedSource,
    history: usize,
    heading: f64,
    speed: f64,
    fixes: Vec<(f64, [f64; 3])>,
}

impl Tracker {
    pub fn new(carrier: f64, speed_source: SpeedSource, seed_heading: f64, seed_speed: f64) -> Self {
        Self {
            carrier,
            speed_source,
            history: 4,
            heading: seed_heading,
            speed: seed_speed.max(0.0),
            fixes: Vec::new(),
        }
    }

    /// Number of recent fixes used for the heading fit (at least 2).
    pub fn with_history(mut self, history: usize) -> Self {
        self.history = history.max(2);
        self
    }

    pub fn update(&mut self, fix: &RadarFix) -> Result<MotionState> {
        let pos = fix.position();
        self.fixes.push((fix.time, pos));
        if self.fixes.len() > self.history {
            self.fixes.remove(0);
        }
        let fitted = self.fit_ground_velocity();
        if let Some((vx, vy)) = fitted {
            if vx.hypot(vy) > 0.0 {
                self.heading = vy.atan2(vx);
            }
        }
        let state = MotionState::new(pos, self.speed, self.heading)?;
        match self.speed_source {
            SpeedSource::Doppler => {
                let from_doppler = velocity_angle(fix.range, &state.bearing(), self.heading)
                    .and_then(|phi_v| speed_from_doppler(fix.doppler, phi_v, self.carrier));
                if let Ok(s) = from_doppler {
                    if s.is_finite() && s >= 0.0 {
                        self.speed = s;
                    }
                }
            }
            SpeedSource::Displacement => {
                if let Some((vx, vy)) = fitted {
                    self.speed = vx.hypot(vy);
                }
            }
        }
        MotionState::new(pos, self.speed, self.heading)
    }

    fn fit_ground_velocity(&self) -> Option<(f64, f64)> {
        let n = self.fixes.len();
        if n < 2 {
            return None;
        }
        let t_mean = self.fixes.iter().map(|f| f.0).sum::<f64>() / n as f64;
        let x_mean = self.fixes.iter().map(|f| f.1[0]).sum::<f64>() / n as f64;
        let y_mean = self.fixes.iter().map(|f| f.1[1]).sum::<f64>() / n as f64;
        let mut stt = 0.0;
        let (mut stx, mut sty) = (0.0, 0.0);
        for (t, p) in &self.fixes {
            let dt = t - t_mean;
            stt += dt * dt;
            stx += dt * (p[0] - x_mean);
            sty += dt * (p[1] - y_mean);
        }
        if stt <= 0.0 {
            return None;
        }
        Some((stx / stt, sty / stt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Cartesian oracle: angle between velocity and the user-to-UAV line.
    fn true_velocity_angle(s: &MotionState) -> f64 {
        let v = s.velocity();
        let p = s.position();
        let dot = -(v[0] * p[0] + v[1] * p[1] + v[2] * p[2]);
        (dot / (norm3(v) * norm3(p))).clamp(-1.0, 1.0).acos()
    }

    #[test]
    fn range_from_delay_examples() {
        assert_eq!(range_from_delay(0.0).unwrap(), 0.0);
        assert!((range_from_delay(4.670e-8).unwrap() - 7.0).abs() < 0.01);
        assert!((range_from_delay(1.0007e-7).unwrap() - 15.0).abs() < 0.01);
        assert!(range_from_delay(-1e-9).is_err());
    }

    #[test]
    fn radial_motion_on_the_plane_of_the_uav() {
        let s = MotionState::new([6.0, 8.0, 0.0], 5.0, 8f64.atan2(6.0)).unwrap();
        let phi_v = velocity_angle(s.range(), &s.bearing(), s.heading()).unwrap();
        assert!((phi_v - PI).abs() < 1e-6);
        let inbound = MotionState::new([6.0, 8.0, 0.0], 5.0, 8f64.atan2(6.0) + PI).unwrap();
        let phi_in = velocity_angle(inbound.range(), &inbound.bearing(), inbound.heading()).unwrap();
        assert!(phi_in.abs() < 1e-6);
    }

    #[test]
    fn perpendicular_motion() {
        // Heading along +y from a point on the ground straight below +x.
        let s = MotionState::new([10.0, 1e-3, -5.0], 3.0, PI / 2.0).unwrap();
        let expected = true_velocity_angle(&s);
        let phi_v = velocity_angle(s.range(), &s.bearing(), s.heading()).unwrap();
        assert!((phi_v - expected).abs() < 1e-6);
        assert!((phi_v - PI / 2.0).abs() < 1e-3);
    }

    #[test]
    fn boundary_argument_gives_pi() {
        // Moving straight away in the UAV plane makes the cosine exactly 1.
        let s = MotionState::new([3.0, 4.0, 0.0], 1.0, 4f64.atan2(3.0)).unwrap();
        let phi_v = velocity_angle(5.0, &s.bearing(), s.heading()).unwrap();
        assert!((phi_v - PI).abs() < 1e-7);
    }

    #[test]
    fn degenerate_heading_is_rejected() {
        let s = MotionState::new([3.0, 4.0, -2.0], 1.0, 0.0).unwrap();
        assert!(velocity_angle(s.range(), &s.bearing(), 0.0).is_err());
        assert!(predict_range_literal(&s, 0.1).is_err());
    }

    #[test]
    fn speed_from_doppler_examples() {
        assert_eq!(speed_from_doppler(0.0, 0.0, 5e9).unwrap(), 0.0);
        let nu = 10.0 * 5e9 / SPEED_OF_LIGHT;
        assert!((speed_from_doppler(nu, 0.0, 5e9).unwrap() - 10.0).abs() < 1e-9);
        assert!((speed_from_doppler(166.8, 0.0, 5e9).unwrap() - 10.0).abs() < 0.01);
        assert!((speed_from_doppler(83.4, PI / 3.0, 5e9).unwrap() - 10.0).abs() < 0.01);
        assert!(speed_from_doppler(1.0, PI / 2.0, 5e9).is_err());
    }

    #[test]
    fn kinematic_prediction_examples() {
        let s = MotionState::new([10.0, 0.0, -20.0], 10.0, PI / 2.0).unwrap();
        let next = predict_state_kinematic(&s, 1.0);
        let p = next.position();
        assert!((p[0] - 10.0).abs() < 1e-12 && (p[1] - 10.0).abs() < 1e-12 && p[2] == -20.0);
        assert!((next.range() - 600f64.sqrt()).abs() < 1e-12);

        let still = MotionState::new([1.0, 2.0, -3.0], 0.0, 0.4).unwrap();
        assert_eq!(predict_state_kinematic(&still, 5.0), still);

        let half = predict_state_kinematic(&predict_state_kinematic(&s, 0.35), 0.35);
        let full = predict_state_kinematic(&s, 0.7);
        for i in 0..3 {
            assert!((half.position()[i] - full.position()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_limit_of_the_range_formula() {
        assert!((range_after_step(12.0, 1.5, 0.0) - 13.5).abs() < 1e-12);
    }

    #[test]
    fn literal_range_agrees_on_crossing_scenes() {
        // Heading +y while close to the x axis: the triangle at the crossing is
        // right-angled, matching the geometry the formula was written for.
        for (x, y, z, speed, dt) in [
            (10.0, 0.4, -5.0, 11.0, 0.05),
            (14.0, -0.3, -5.0, 9.0, 0.1),
            (6.0, 0.2, -5.0, 13.0, 0.02),
        ] {
            let s = MotionState::new([x, y, z], speed, PI / 2.0).unwrap();
            let literal = predict_range_literal(&s, dt).unwrap();
            let oracle = predict_state_kinematic(&s, dt).range();
            assert!((literal - oracle).abs() / oracle < 0.02, "{literal} vs {oracle}");
            assert!((literal - s.range()).abs() <= speed * dt + 1e-9);
        }
    }

    fn line_track(jitter: f64) -> Track {
        let points = (0..40)
            .map(|i| {
                let t = i as f64 * 0.1;
                let wobble = if i % 2 == 0 { jitter } else { -jitter };
                let s = MotionState::new([5.0 + t, 2.0 + 0.5 * t + wobble, -5.0], 1.0, 0.0).unwrap();
                TrackPoint { time: t, state: s }
            })
            .collect();
        Track::new(points).unwrap()
    }

    #[test]
    fn smoothing_examples() {
        let clean = line_track(0.0);
        assert_eq!(smooth_track(&clean, 1).unwrap(), clean);
        let flat: Vec<_> = (0..6)
            .map(|i| TrackPoint {
                time: i as f64,
                state: MotionState::new([1.0, 2.0, -3.0], 0.0, 0.0).unwrap(),
            })
            .collect();
        let flat = Track::new(flat).unwrap();
        let sm = smooth_track(&flat, 5).unwrap();
        for (a, b) in sm.points().iter().zip(flat.points()) {
            for i in 0..3 {
                assert!((a.state.position()[i] - b.state.position()[i]).abs() < 1e-12);
            }
        }
        assert!(smooth_track(&flat, 4).is_err());
        assert!(smooth_track(&flat, 7).is_err());
    }

    #[test]
    fn smoothing_reduces_quantization_jitter() {
        let noisy = line_track(0.3);
        let clean = line_track(0.0);
        let rms = |t: &Track| -> f64 {
            let s: f64 = t
                .points()
                .iter()
                .zip(clean.points())
                .map(|(a, b)| {
                    let pa = a.state.position();
                    let pb = b.state.position();
                    (0..3).map(|i| (pa[i] - pb[i]).powi(2)).sum::<f64>()
                })
                .sum();
            (s / t.len() as f64).sqrt()
        };
        let smoothed = smooth_track(&noisy, 5).unwrap();
        assert!(rms(&smoothed) * 2.0 <= rms(&noisy));
    }

    #[test]
    fn track_requires_increasing_time() {
        let s = MotionState::new([1.0, 0.0, -1.0], 0.0, 0.0).unwrap();
        let pts = vec![TrackPoint { time: 1.0, state: s }, TrackPoint { time: 1.0, state: s }];
        assert_eq!(Track::new(pts).unwrap_err(), Error::NonMonotonicTrack);
    }

    #[test]
    fn tracker_recovers_speed_from_exact_fixes() {
        let carrier = 5e9;
        let truth = MotionState::new([8.0, -3.0, -5.0], 12.0, 0.7).unwrap();
        for source in [SpeedSource::Doppler, SpeedSource::Displacement] {
            let mut tracker = Tracker::new(carrier, source, truth.heading(), 0.0);
            let mut state = truth;
            let mut est = None;
            for i in 0..5 {
                let fix = RadarFix {
                    time: i as f64 * 0.05,
                    range: state.range(),
                    doppler: -state.range_rate() * carrier / SPEED_OF_LIGHT,
                    direction: state.direction(),
                };
                est = Some(tracker.update(&fix).unwrap());
                state = predict_state_kinematic(&state, 0.05);
            }
            let est = est.unwrap();
            assert!((est.speed() - 12.0).abs() < 1e-6, "{source:?}: {}", est.speed());
            assert!((est.heading() - 0.7).abs() < 1e-9);
        }
    }
}
