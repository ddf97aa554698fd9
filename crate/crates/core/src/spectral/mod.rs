//! Periodic grid, continuum-normalized Fourier transforms and the linear
//! operators of the free Schrödinger flow.
//!
//! The box `[-L/2, L/2)` stands in for the real line. Transforms use the
//! symmetric convention
//!
//! ```text
//! û(ξ) = (2π)^{-1/2} ∫ e^{-ixξ} u(x) dx,    u(x) = (2π)^{-1/2} ∫ e^{ixξ} û(ξ) dξ
//! ```
//!
//! discretized as Riemann sums over the nodes `x_j = -L/2 + j·dx` and the
//! dual frequencies `ξ_k = 2πk/L`. Spectral samples are stored in FFT order
//! (non-negative wavenumbers first).

mod operators;

pub use operators::*;

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(n)
        } else {
            p.plan_fft_inverse(n)
        }
    })
}

/// Uniform periodic grid on `[-L/2, L/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    num_points: usize,
    domain_length: f64,
}

impl GridSpec {
    pub fn new(num_points: usize, domain_length: f64) -> Result<Self> {
        if num_points < 2 || num_points % 2 != 0 {
            return Err(NlsError::InvalidGrid(format!(
                "num_points must be a positive even integer, got {num_points}"
            )));
        }
        if !(domain_length.is_finite() && domain_length > 0.0) {
            return Err(NlsError::InvalidGrid(format!(
                "domain_length must be positive, got {domain_length}"
            )));
        }
        Ok(Self {
            num_points,
            domain_length,
        })
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn dx(&self) -> f64 {
        self.domain_length / self.num_points as f64
    }

    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.domain_length
    }

    /// Largest resolved frequency magnitude (the Nyquist frequency).
    pub fn xi_max(&self) -> f64 {
        PI / self.dx()
    }

    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.domain_length + j as f64 * self.dx()
    }

    /// Signed wavenumber index stored at FFT position `k`.
    pub fn wavenumber(&self, k: usize) -> i64 {
        let n = self.num_points as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Frequency stored at FFT position `k`.
    pub fn xi(&self, k: usize) -> f64 {
        self.wavenumber(k) as f64 * self.dxi()
    }

    /// FFT position holding the signed wavenumber `m`.
    pub fn index_of_wavenumber(&self, m: i64) -> Option<usize> {
        let n = self.num_points as i64;
        if m < -n / 2 || m >= n / 2 {
            None
        } else {
            Some(m.rem_euclid(n) as usize)
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.num_points).map(|j| self.x(j)).collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.num_points).map(|k| self.xi(k)).collect()
    }
}

/// Which representation a [`ComplexField`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Physical,
    Spectral,
}

impl Side {
    fn name(self) -> &'static str {
        match self {
            Side::Physical => "physical",
            Side::Spectral => "spectral",
        }
    }
}

/// Complex samples on a grid, tagged with the side they live on.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    side: Side,
    samples: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: GridSpec, side: Side, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.num_points() {
            return Err(NlsError::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.num_points(),
                samples.len()
            )));
        }
        if samples
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(NlsError::NonFinite);
        }
        Ok(Self {
            grid,
            side,
            samples,
        })
    }

    pub(crate) fn new_unchecked(grid: GridSpec, side: Side, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), grid.num_points());
        Self {
            grid,
            side,
            samples,
        }
    }

    pub fn zeros(grid: GridSpec, side: Side) -> Self {
        Self::new_unchecked(
            grid,
            side,
            vec![Complex64::new(0.0, 0.0); grid.num_points()],
        )
    }

    /// Samples `f(x_j)` at every node.
    pub fn from_fn_physical(grid: GridSpec, mut f: impl FnMut(f64) -> Complex64) -> Self {
        let samples = (0..grid.num_points()).map(|j| f(grid.x(j))).collect();
        Self::new_unchecked(grid, Side::Physical, samples)
    }

    /// Samples `g(ξ_k)` at every dual frequency.
    pub fn from_fn_spectral(grid: GridSpec, mut g: impl FnMut(f64) -> Complex64) -> Self {
        let samples = (0..grid.num_points()).map(|k| g(grid.xi(k))).collect();
        Self::new_unchecked(grid, Side::Spectral, samples)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub(crate) fn expect_side(&self, side: Side) -> Result<()> {
        if self.side == side {
            Ok(())
        } else {
            Err(NlsError::WrongSide {
                expected: side.name(),
                found: self.side.name(),
            })
        }
    }

    pub(crate) fn expect_same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(NlsError::GridMismatch)
        }
    }

    /// Spacing of the measure the samples are integrated against.
    pub fn measure(&self) -> f64 {
        match self.side {
            Side::Physical => self.grid.dx(),
            Side::Spectral => self.grid.dxi(),
        }
    }

    /// Coordinate of sample `i` (a node or a frequency depending on the side).
    pub fn coordinate(&self, i: usize) -> f64 {
        match self.side {
            Side::Physical => self.grid.x(i),
            Side::Spectral => self.grid.xi(i),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        (self.measure() * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn l1_norm(&self) -> f64 {
        self.measure() * self.samples.iter().map(|z| z.norm()).sum::<f64>()
    }

    /// Pointwise map keeping grid and side.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::new_unchecked(
            self.grid,
            self.side,
            self.samples.iter().map(|&z| f(z)).collect(),
        )
    }

    /// Pointwise map with the sample coordinate.
    pub fn map_with_coordinate(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, &z)| f(self.coordinate(i), z))
            .collect();
        Self::new_unchecked(self.grid, self.side, samples)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|z| c * z)
    }

    pub fn add(&self, other: &ComplexField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(
        &self,
        other: &ComplexField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        self.expect_same_grid(other)?;
        if self.side != other.side {
            return Err(NlsError::WrongSide {
                expected: self.side.name(),
                found: other.side.name(),
            });
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::new_unchecked(self.grid, self.side, samples))
    }

    /// Relative L² distance `‖self - other‖ / ‖other‖` (absolute when `other` vanishes).
    pub fn relative_distance(&self, other: &ComplexField) -> Result<f64> {
        let diff = self.sub(other)?.l2_norm();
        let scale = other.l2_norm();
        Ok(if scale > 0.0 { diff / scale } else { diff })
    }

    /// Fraction of `∫|u|²` carried by the outer 10% of the box (physical side).
    pub fn tail_mass_fraction(&self) -> f64 {
        let total: f64 = self.samples.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let edge = 0.4 * self.grid.domain_length();
        let tail: f64 = self
            .samples
            .iter()
            .enumerate()
            .filter(|(i, _)| self.coordinate(*i).abs() > edge)
            .map(|(_, z)| z.norm_sqr())
            .sum();
        tail / total
    }
}

/// Default ceiling for [`ComplexField::tail_mass_fraction`].
pub const DEFAULT_TAIL_CEILING: f64 = 1e-8;

pub fn check_tail(field: &ComplexField, threshold: f64) -> Result<()> {
    let fraction = field.tail_mass_fraction();
    if fraction > threshold {
        Err(NlsError::DomainEscape {
            fraction,
            threshold,
        })
    } else {
        Ok(())
    }
}

pub(crate) fn parity(grid: &GridSpec, k: usize) -> f64 {
    if grid.wavenumber(k).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `û(ξ_k) = (2π)^{-1/2} dx Σ_j e^{-i x_j ξ_k} u(x_j)`.
pub fn forward_transform(field: &ComplexField) -> Result<ComplexField> {
    field.expect_side(Side::Physical)?;
    if !field.is_finite() {
        return Err(NlsError::NonFinite);
    }
    Ok(forward_unchecked(field))
}

/// `u(x_j) = (2π)^{-1/2} dξ Σ_k e^{i x_j ξ_k} û(ξ_k)`.
pub fn inverse_transform(field: &ComplexField) -> Result<ComplexField> {
    field.expect_side(Side::Spectral)?;
    if !field.is_finite() {
        return Err(NlsError::NonFinite);
    }
    Ok(inverse_unchecked(field))
}

pub(crate) fn forward_unchecked(field: &ComplexField) -> ComplexField {
    let grid = *field.grid();
    let mut buf = field.samples().to_vec();
    plan(grid.num_points(), true).process(&mut buf);
    // e^{-i x_0 ξ_k} = e^{iπk} = (-1)^k since x_0 = -L/2.
    let c = grid.dx() / (2.0 * PI).sqrt();
    for (k, z) in buf.iter_mut().enumerate() {
        *z *= c * parity(&grid, k);
    }
    ComplexField::new_unchecked(grid, Side::Spectral, buf)
}

pub(crate) fn inverse_unchecked(field: &ComplexField) -> ComplexField {
    let grid = *field.grid();
    let c = grid.dxi() / (2.0 * PI).sqrt();
    let mut buf: Vec<Complex64> = field
        .samples()
        .iter()
        .enumerate()
        .map(|(k, &z)| z * (c * parity(&grid, k)))
        .collect();
    plan(grid.num_points(), false).process(&mut buf);
    ComplexField::new_unchecked(grid, Side::Physical, buf)
}

/// Solution snapshot: time, physical samples and the cached spectra.
///
/// The profile uses absolute time: `f̂(t, ξ) = e^{itξ²/2} û(t, ξ)`, so a state
/// created at `t = 1` from data `u₁` has profile `e^{-i∂ₓₓ/2} u₁`, not `u₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    t: f64,
    u: ComplexField,
    spectrum: ComplexField,
    profile_spectrum: ComplexField,
}

impl WaveState {
    pub fn from_physical(t: f64, u: ComplexField) -> Result<Self> {
        check_time(t)?;
        let spectrum = forward_transform(&u)?;
        let profile_spectrum = free_phase(&spectrum, t);
        Ok(Self {
            t,
            u,
            spectrum,
            profile_spectrum,
        })
    }

    pub fn from_profile_spectrum(t: f64, profile_spectrum: ComplexField) -> Result<Self> {
        check_time(t)?;
        profile_spectrum.expect_side(Side::Spectral)?;
        if !profile_spectrum.is_finite() {
            return Err(NlsError::NonFinite);
        }
        let spectrum = free_phase(&profile_spectrum, -t);
        let u = inverse_unchecked(&spectrum);
        Ok(Self {
            t,
            u,
            spectrum,
            profile_spectrum,
        })
    }

    pub(crate) fn from_parts_unchecked(
        t: f64,
        u: ComplexField,
        spectrum: ComplexField,
        profile_spectrum: ComplexField,
    ) -> Self {
        Self {
            t,
            u,
            spectrum,
            profile_spectrum,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn grid(&self) -> &GridSpec {
        self.u.grid()
    }

    pub fn u(&self) -> &ComplexField {
        &self.u
    }

    pub fn spectrum(&self) -> &ComplexField {
        &self.spectrum
    }

    pub fn profile_spectrum(&self) -> &ComplexField {
        &self.profile_spectrum
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 1.0 {
        Ok(())
    } else {
        Err(NlsError::InvalidInput(format!(
            "time must be >= 1, got {t}"
        )))
    }
}

/// Multiplies a spectral field by `e^{iτξ²/2}`.
pub(crate) fn free_phase(spectrum: &ComplexField, tau: f64) -> ComplexField {
    spectrum.map_with_coordinate(|xi, z| z * Complex64::from_polar(1.0, 0.5 * tau * xi * xi))
}
