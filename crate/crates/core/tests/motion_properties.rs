use std::f64::consts::PI;

use otfs_isac::channel::{los_path_from_kinematics, LinkBudget};
use otfs_isac::motion::{
    predict_range_literal, predict_state_kinematic, smooth_track, speed_from_doppler, velocity_angle, MotionState, Track,
    TrackPoint,
};
use proptest::prelude::*;

fn true_velocity_angle(s: &MotionState) -> f64 {
    let v = s.velocity();
    let p = s.position();
    let dot = -(v[0] * p[0] + v[1] * p[1] + v[2] * p[2]);
    let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
    (dot / (nv * s.range())).clamp(-1.0, 1.0).acos()
}

// Users on the ground 5 m below the UAV, away from the degenerate headings.
fn scene() -> impl Strategy<Value = MotionState> {
    (2.0..30.0f64, -PI..PI, 0.5..20.0f64, -PI..PI).prop_filter_map("degenerate triangle", |(rho, az, speed, heading)| {
        if heading.sin().abs() < 0.1 || az.sin().abs() < 0.1 {
            return None;
        }
        MotionState::new([rho * az.cos(), rho * az.sin(), -5.0], speed, heading).ok()
    })
}

proptest! {
    #[test]
    fn velocity_angle_matches_cartesian_geometry(s in scene()) {
        let phi_v = velocity_angle(s.range(), &s.bearing(), s.heading()).unwrap();
        prop_assert!((phi_v - true_velocity_angle(&s)).abs() < 1e-6, "{} vs {}", phi_v, true_velocity_angle(&s));
    }

    #[test]
    fn doppler_inverts_to_speed(s in scene()) {
        let budget = LinkBudget::new(1.0, 1.0, 5e9, 1e-12).unwrap();
        let phi_v = velocity_angle(s.range(), &s.bearing(), s.heading()).unwrap();
        prop_assume!(phi_v.cos().abs() > 0.05);
        let one_way = los_path_from_kinematics(&s, &budget, false).unwrap();
        let echo = los_path_from_kinematics(&s, &budget, true).unwrap();
        let from_one_way = speed_from_doppler(one_way.doppler, phi_v, 5e9).unwrap();
        let from_echo = speed_from_doppler(echo.doppler / 2.0, phi_v, 5e9).unwrap();
        prop_assert!((from_one_way - s.speed()).abs() <= 1e-6 * s.speed());
        prop_assert!((from_echo - s.speed()).abs() <= 1e-6 * s.speed());
    }

    #[test]
    fn kinematic_flow(s in scene(), t1 in 0.0..2.0f64, t2 in 0.0..2.0f64) {
        let two = predict_state_kinematic(&predict_state_kinematic(&s, t1), t2);
        let one = predict_state_kinematic(&s, t1 + t2);
        for i in 0..3 {
            prop_assert!((two.position()[i] - one.position()[i]).abs() < 1e-12 * (1.0 + s.range()));
        }
    }

    #[test]
    fn literal_range_step_is_bounded(s in scene(), dt in 0.001..0.05f64) {
        // sqrt((d + s - l)^2 + l^2) with 0 <= l <= d lies in [(d + s)/sqrt(2), d + s].
        if let Ok(next) = predict_range_literal(&s, dt) {
            let far = s.range() + s.speed() * dt;
            prop_assert!(next <= far * (1.0 + 1e-12));
            prop_assert!(next >= far / 2f64.sqrt() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn smoothing_is_linear(
        xs in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 5..30),
        ys in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 30),
        a in -2.0..2.0f64,
        b in -2.0..2.0f64,
        half in 0usize..3,
    ) {
        let window = 2 * half + 1;
        prop_assume!(window <= xs.len());
        let make = |pts: Vec<[f64; 3]>| -> Track {
            Track::new(pts.into_iter().enumerate().map(|(i, p)| TrackPoint {
                time: i as f64 * 0.1,
                state: MotionState::new(p, 1.0, 0.0).unwrap(),
            }).collect()).unwrap()
        };
        let px: Vec<[f64; 3]> = xs.iter().map(|&(x, y)| [x, y, -5.0]).collect();
        let py: Vec<[f64; 3]> = ys.iter().take(xs.len()).map(|&(x, y)| [x, y, -7.0]).collect();
        let mixed: Vec<[f64; 3]> = px.iter().zip(&py).map(|(p, q)| [a * p[0] + b * q[0], a * p[1] + b * q[1], a * p[2] + b * q[2]]).collect();
        prop_assume!(mixed.iter().all(|p| p.iter().map(|v| v * v).sum::<f64>() > 1e-6));
        let sx = smooth_track(&make(px), window).unwrap();
        let sy = smooth_track(&make(py), window).unwrap();
        let sm = smooth_track(&make(mixed), window).unwrap();
        for ((p, q), r) in sx.points().iter().zip(sy.points()).zip(sm.points()) {
            for i in 0..3 {
                let want = a * p.state.position()[i] + b * q.state.position()[i];
                prop_assert!((r.state.position()[i] - want).abs() < 1e-9);
            }
        }
        let twice = smooth_track(&sx, 1).unwrap();
        prop_assert_eq!(twice, sx);
    }
}
