//! Uniform planar array steering with half-wavelength spacing.
//!
//! Element `(ix, iy)`, counted from 1, carries the phase
//! `pi * sin(theta) * (ix * sin(phi) + iy * cos(phi))`. The array faces down
//! from the UAV, so a direction maps to the unit vector
//! `(sin(theta) sin(phi), sin(theta) cos(phi), -cos(theta))`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpaConfig {
    nx: usize,
    ny: usize,
}

impl UpaConfig {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidParameter {
                name: "array size",
                value: nx.min(ny) as f64,
            });
        }
        Ok(Self { nx, ny })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn elements(&self) -> usize {
        self.nx * self.ny
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..PI).contains(&a) {
        return a;
    }
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Azimuth `theta` in `[-pi/2, pi/2]` and elevation `phi` in `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    azimuth: f64,
    elevation: f64,
}

impl Direction {
    /// Folds `theta` into `[-pi/2, pi/2]` keeping `sin(theta)`, so the
    /// steering vector is unchanged by normalization.
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        let mut theta = wrap_angle(azimuth);
        if theta > PI / 2.0 {
            theta = PI - theta;
        } else if theta < -PI / 2.0 {
            theta = -PI - theta;
        }
        Self {
            azimuth: theta,
            elevation: wrap_angle(elevation),
        }
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }

    /// Unit vector in the UAV frame (z up, array facing down).
    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.azimuth.sin_cos();
        let (sp, cp) = self.elevation.sin_cos();
        [st * sp, st * cp, -ct.abs()]
    }

    /// Direction of a point seen from the array. Points above the array alias
    /// onto their mirror image below it.
    pub fn from_vector(v: [f64; 3]) -> Result<Self> {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::DegenerateGeometry("zero-length direction vector"));
        }
        let theta = (-v[2] / r).clamp(-1.0, 1.0).acos();
        let phi = v[0].atan2(v[1]);
        Ok(Self::new(theta, phi))
    }
}

/// Unit-norm array response, element `(ix, iy)` stored at `ix * ny + iy`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(Vec<Complex64>);

impl SteeringVector {
    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Same response for transmit and receive roles.
pub fn steering(cfg: &UpaConfig, dir: &Direction) -> SteeringVector {
    let st = dir.azimuth.sin();
    let (sp, cp) = dir.elevation.sin_cos();
    let scale = 1.0 / (cfg.elements() as f64).sqrt();
    let step_x = Complex64::from_polar(1.0, PI * st * sp);
    let step_y = Complex64::from_polar(1.0, PI * st * cp);
    let mut out = Vec::with_capacity(cfg.elements());
    let mut px = step_x;
    for _ in 0..cfg.nx {
        let mut p = px * step_y;
        for _ in 0..cfg.ny {
            out.push(p * scale);
            p *= step_y;
        }
        px *= step_x;
    }
    SteeringVector(out)
}

/// Conjugate inner product `b^H a`.
pub fn beam_gain(a: &SteeringVector, b: &SteeringVector) -> Result<Complex64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| y.conj() * x).sum())
}
