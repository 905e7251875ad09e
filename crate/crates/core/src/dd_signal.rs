//! Discrete OTFS chain between the delay-Doppler grid, the time-frequency grid
//! and the sampled waveform.
//!
//! Sampling is critical for a rectangular pulse: `M` samples per OTFS symbol of
//! duration `T`, so the sample interval is `T/M`. Every transform is unitary.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn forward_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

pub(crate) fn inverse_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// OTFS frame geometry: `m` subcarriers (delay bins), `n` symbols (Doppler
/// bins) and the duration of the whole frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    m: usize,
    n: usize,
    frame_duration: f64,
}

impl Frame {
    pub fn new(m: usize, n: usize, frame_duration: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidDimension { name: "M", value: m });
        }
        if n < 2 {
            return Err(Error::InvalidDimension { name: "N", value: n });
        }
        if !(frame_duration.is_finite() && frame_duration > 0.0) {
            return Err(Error::InvalidParameter {
                name: "frame duration",
                value: frame_duration,
            });
        }
        Ok(Self { m, n, frame_duration })
    }

    /// Frame with unit duration, handy when only index arithmetic matters.
    pub fn square(size: usize) -> Result<Self> {
        Self::new(size, size, 1.0)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.m * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn frame_duration(&self) -> f64 {
        self.frame_duration
    }

    /// OTFS symbol duration `T`.
    pub fn symbol_duration(&self) -> f64 {
        self.frame_duration / self.n as f64
    }

    /// Subcarrier spacing, `1/T`.
    pub fn subcarrier_spacing(&self) -> f64 {
        1.0 / self.symbol_duration()
    }

    pub fn sample_interval(&self) -> f64 {
        self.symbol_duration() / self.m as f64
    }

    /// Delay resolution of the grid (one sample).
    pub fn delay_bin(&self) -> f64 {
        self.sample_interval()
    }

    /// Doppler resolution of the grid, `1/(N T)`.
    pub fn doppler_bin(&self) -> f64 {
        1.0 / self.frame_duration
    }

    /// Largest Doppler magnitude the grid represents without wrapping.
    pub fn max_doppler(&self) -> f64 {
        0.5 * self.subcarrier_spacing()
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{} over {:e} s", self.m, self.n, self.frame_duration)
    }
}

fn check_len(frame: &Frame, len: usize) -> Result<()> {
    if len != frame.len() {
        return Err(Error::ShapeMismatch {
            expected: frame.len(),
            found: len,
        });
    }
    Ok(())
}

fn check_frames(a: &Frame, b: &Frame) -> Result<()> {
    if a != b {
        return Err(Error::FrameMismatch {
            left: a.to_string(),
            right: b.to_string(),
        });
    }
    Ok(())
}

macro_rules! grid_common {
    ($ty:ident) => {
        impl $ty {
            pub fn zeros(frame: Frame) -> Self {
                Self {
                    frame,
                    data: vec![Complex64::new(0.0, 0.0); frame.len()],
                }
            }

            pub fn frame(&self) -> &Frame {
                &self.frame
            }

            pub fn data(&self) -> &[Complex64] {
                &self.data
            }

            pub fn data_mut(&mut self) -> &mut [Complex64] {
                &mut self.data
            }

            pub fn into_data(self) -> Vec<Complex64> {
                self.data
            }

            pub fn energy(&self) -> f64 {
                self.data.iter().map(|z| z.norm_sqr()).sum()
            }
        }
    };
}

/// Delay-Doppler symbol grid, row-major with Doppler index `k` selecting the
/// row and delay index `l` the column.
#[derive(Debug, Clone, PartialEq)]
pub struct DdGrid {
    frame: Frame,
    data: Vec<Complex64>,
}

grid_common!(DdGrid);

impl DdGrid {
    pub fn from_vec(frame: Frame, data: Vec<Complex64>) -> Result<Self> {
        check_len(&frame, data.len())?;
        Ok(Self { frame, data })
    }

    /// Single unit symbol at Doppler index `k`, delay index `l`.
    pub fn impulse(frame: Frame, k: usize, l: usize) -> Self {
        let mut g = Self::zeros(frame);
        g.data[(k % frame.n) * frame.m + l % frame.m] = Complex64::new(1.0, 0.0);
        g
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.data[k * self.frame.m + l]
    }

    pub fn set(&mut self, k: usize, l: usize, value: Complex64) {
        self.data[k * self.frame.m + l] = value;
    }
}

/// Time-frequency grid, row-major with symbol index `n` selecting the row and
/// subcarrier index `m` the column.
#[derive(Debug, Clone, PartialEq)]
pub struct TfGrid {
    frame: Frame,
    data: Vec<Complex64>,
}

grid_common!(TfGrid);

impl TfGrid {
    pub fn from_vec(frame: Frame, data: Vec<Complex64>) -> Result<Self> {
        check_len(&frame, data.len())?;
        Ok(Self { frame, data })
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.data[n * self.frame.m + m]
    }

    pub fn set(&mut self, n: usize, m: usize, value: Complex64) {
        self.data[n * self.frame.m + m] = value;
    }
}

/// Sampled baseband waveform of one frame, `M` samples per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    frame: Frame,
    data: Vec<Complex64>,
}

grid_common!(TimeSeries);

impl TimeSeries {
    pub fn from_vec(frame: Frame, samples: Vec<Complex64>) -> Result<Self> {
        check_len(&frame, samples.len())?;
        Ok(Self {
            frame,
            data: samples,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn sample_interval(&self) -> f64 {
        self.frame.sample_interval()
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.data.iter_mut().for_each(|z| *z *= factor);
    }
}

fn transform_rows(data: &mut [Complex64], row_len: usize, fft: &dyn Fft<f64>) {
    fft.process(data);
    debug_assert_eq!(data.len() % row_len, 0);
}

fn transform_columns(data: &mut [Complex64], rows: usize, cols: usize, fft: &dyn Fft<f64>) {
    let mut column = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = data[r * cols + c];
        }
        fft.process(&mut column);
        for r in 0..rows {
            data[r * cols + c] = column[r];
        }
    }
}

fn scale_all(data: &mut [Complex64], factor: f64) {
    data.iter_mut().for_each(|z| *z *= factor);
}

/// Inverse symplectic finite Fourier transform,
/// `X[n,m] = 1/sqrt(NM) sum_k sum_l x[k,l] exp(j2pi(nk/N - ml/M))`.
pub fn isfft(dd: &DdGrid) -> TfGrid {
    let frame = dd.frame;
    let mut data = dd.data.clone();
    transform_rows(&mut data, frame.m, forward_plan(frame.m).as_ref());
    transform_columns(&mut data, frame.n, frame.m, inverse_plan(frame.n).as_ref());
    scale_all(&mut data, 1.0 / (frame.len() as f64).sqrt());
    TfGrid { frame, data }
}

/// Symplectic finite Fourier transform, the exact inverse of [`isfft`].
pub fn sfft(tf: &TfGrid) -> DdGrid {
    let frame = tf.frame;
    let mut data = tf.data.clone();
    transform_rows(&mut data, frame.m, inverse_plan(frame.m).as_ref());
    transform_columns(&mut data, frame.n, frame.m, forward_plan(frame.n).as_ref());
    scale_all(&mut data, 1.0 / (frame.len() as f64).sqrt());
    DdGrid { frame, data }
}

/// Heisenberg transform with a rectangular pulse: each symbol row becomes `M`
/// samples through a unitary inverse DFT, serialized symbol by symbol.
pub fn heisenberg(tf: &TfGrid) -> TimeSeries {
    let frame = tf.frame;
    let mut data = tf.data.clone();
    transform_rows(&mut data, frame.m, inverse_plan(frame.m).as_ref());
    scale_all(&mut data, 1.0 / (frame.m as f64).sqrt());
    TimeSeries { frame, data }
}

/// Wigner transform with a rectangular receive pulse, inverse of [`heisenberg`].
pub fn wigner(ts: &TimeSeries) -> TfGrid {
    let frame = ts.frame;
    let mut data = ts.data.clone();
    transform_rows(&mut data, frame.m, forward_plan(frame.m).as_ref());
    scale_all(&mut data, 1.0 / (frame.m as f64).sqrt());
    TfGrid { frame, data }
}

pub fn modulate(dd: &DdGrid) -> TimeSeries {
    heisenberg(&isfft(dd))
}

pub fn demodulate(ts: &TimeSeries) -> DdGrid {
    sfft(&wigner(ts))
}

/// Element-wise `a*x + b*y` over two series on the same frame.
pub fn combine(
    a: Complex64,
    x: &TimeSeries,
    b: Complex64,
    y: &TimeSeries,
) -> Result<TimeSeries> {
    check_frames(&x.frame, &y.frame)?;
    let data = x
        .data
        .iter()
        .zip(&y.data)
        .map(|(p, q)| a * p + b * q)
        .collect();
    Ok(TimeSeries {
        frame: x.frame,
        data,
    })
}
