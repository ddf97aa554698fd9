//! Trilinear operators
//!
//! ```text
//! F(T_m[a,b,c])(ξ) = ∬ m(ξ-η, η-σ, σ) â(ξ-η) b̂(η-σ) ĉ(σ) dσ dη
//! ```
//!
//! discretized as a linear (non-wrapping) double sum over the grid's
//! frequencies with weight `dξ²`; triples whose output or any input falls
//! outside the resolved band are dropped.

use std::sync::Arc;

use num_complex::Complex64;

use super::FrequencyTriple;
use crate::error::{NlsError, Result};
use crate::spectral::{forward_unchecked, inverse_unchecked, plan, ComplexField, GridSpec, Side};

/// Largest grid accepted by the direct `O(N³)` evaluators.
pub const BRUTE_FORCE_MAX_POINTS: usize = 128;

pub type SymbolFn = Arc<dyn Fn(FrequencyTriple) -> f64 + Send + Sync>;
pub type FactorFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A trilinear multiplier `m(ξ₁, ξ₂, ξ₃)`.
#[derive(Clone)]
pub enum Symbol {
    /// `m₁(ξ₁)m₂(ξ₂)m₃(ξ₃)`.
    Separable([FactorFn; 3]),
    General(SymbolFn),
}

impl std::fmt::Debug for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Symbol::Separable(_) => f.write_str("Symbol::Separable(..)"),
            Symbol::General(_) => f.write_str("Symbol::General(..)"),
        }
    }
}

impl Symbol {
    pub fn one() -> Self {
        let one: FactorFn = Arc::new(|_| 1.0);
        Symbol::Separable([one.clone(), one.clone(), one])
    }

    pub fn zero() -> Self {
        Symbol::General(Arc::new(|_| 0.0))
    }

    pub fn separable(
        m1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        m2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        m3: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Symbol::Separable([Arc::new(m1), Arc::new(m2), Arc::new(m3)])
    }

    pub fn general(m: impl Fn(FrequencyTriple) -> f64 + Send + Sync + 'static) -> Self {
        Symbol::General(Arc::new(m))
    }

    pub fn eval(&self, t: &FrequencyTriple) -> f64 {
        match self {
            Symbol::Separable([m1, m2, m3]) => m1(t.xi1) * m2(t.xi2) * m3(t.xi3),
            Symbol::General(m) => m(*t),
        }
    }

    /// The symbol as a plain function of the triple.
    pub fn as_fn(&self) -> SymbolFn {
        match self {
            Symbol::General(m) => m.clone(),
            sep => {
                let sep = sep.clone();
                Arc::new(move |t| sep.eval(&t))
            }
        }
    }
}

fn to_spectral(field: &ComplexField) -> ComplexField {
    match field.side() {
        Side::Spectral => field.clone(),
        Side::Physical => forward_unchecked(field),
    }
}

fn check_inputs(a: &ComplexField, b: &ComplexField, c: &ComplexField) -> Result<GridSpec> {
    a.expect_same_grid(b)?;
    a.expect_same_grid(c)?;
    for f in [a, b, c] {
        if !f.is_finite() {
            return Err(NlsError::NonFinite);
        }
    }
    Ok(*a.grid())
}

/// Spectral samples reordered by wavenumber, `-N/2 ..= N/2 - 1`.
fn centered(grid: &GridSpec, spec: &ComplexField) -> Vec<Complex64> {
    let n = grid.num_points();
    let h = n / 2;
    (0..n).map(|c| spec.samples()[(c + h) % n]).collect()
}

fn uncentered(grid: &GridSpec, centered: Vec<Complex64>) -> ComplexField {
    let n = grid.num_points();
    let h = n / 2;
    let samples = (0..n).map(|k| centered[(k + h) % n]).collect();
    ComplexField::new_unchecked(*grid, Side::Spectral, samples)
}

/// Triple sum over centered spectra with a symbol lookup `m(c1, c2, c3)`.
fn triple_sum(
    grid: &GridSpec,
    a: &[Complex64],
    b: &[Complex64],
    c: &[Complex64],
    mut m: impl FnMut(usize, usize, usize) -> f64,
) -> ComplexField {
    let n = grid.num_points();
    let w = grid.dxi() * grid.dxi();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    // Centered indices satisfy c1 = k - c2 - c3 + N for wavenumber sums.
    for (k, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c3, &cz) in c.iter().enumerate() {
            if cz == Complex64::new(0.0, 0.0) {
                continue;
            }
            let shift = k + n - c3;
            let lo = shift.saturating_sub(n - 1);
            let hi = shift.min(n - 1);
            for c2 in lo..=hi {
                let c1 = shift - c2;
                let bz = b[c2];
                let m = m(c1, c2, c3);
                if m != 0.0 {
                    acc += m * a[c1] * bz * cz;
                }
            }
        }
        *slot = acc * w;
    }
    uncentered(grid, out)
}

fn centered_xi(grid: &GridSpec, c: usize) -> f64 {
    (c as f64 - (grid.num_points() / 2) as f64) * grid.dxi()
}

/// `F(T_m[a,b,c])` by direct summation.
pub fn trilinear_spectrum_bruteforce(
    m: &Symbol,
    a: &ComplexField,
    b: &ComplexField,
    c: &ComplexField,
) -> Result<ComplexField> {
    let grid = check_inputs(a, b, c)?;
    if grid.num_points() > BRUTE_FORCE_MAX_POINTS {
        return Err(NlsError::GridTooLarge(grid.num_points()));
    }
    let (ac, bc, cc) = (
        centered(&grid, &to_spectral(a)),
        centered(&grid, &to_spectral(b)),
        centered(&grid, &to_spectral(c)),
    );
    let xi = |i| centered_xi(&grid, i);
    Ok(triple_sum(&grid, &ac, &bc, &cc, |i, j, k| {
        m.eval(&FrequencyTriple::new(xi(i), xi(j), xi(k)))
    }))
}

/// `T_m[a,b,c]` on the physical side, by direct summation.
pub fn trilinear_apply_bruteforce(
    m: &Symbol,
    a: &ComplexField,
    b: &ComplexField,
    c: &ComplexField,
) -> Result<ComplexField> {
    Ok(inverse_unchecked(&trilinear_spectrum_bruteforce(
        m, a, b, c,
    )?))
}

/// `T_m[a,b,c]` for separable `m` via zero-padded FFT convolution.
///
/// Each factor multiplies its input spectrum; the three weighted spectra are
/// embedded in a buffer of length `4N` so the circular convolution of the
/// FFT equals the linear triple convolution on every output wavenumber.
pub fn trilinear_apply_fast(
    m: &Symbol,
    a: &ComplexField,
    b: &ComplexField,
    c: &ComplexField,
) -> Result<ComplexField> {
    let Symbol::Separable(factors) = m else {
        return Err(NlsError::NotSeparable);
    };
    let grid = check_inputs(a, b, c)?;
    let n = grid.num_points();
    let len = 4 * n;
    let fwd = plan(len, true);
    let mut product = vec![Complex64::new(1.0, 0.0); len];
    for (field, factor) in [a, b, c].into_iter().zip(factors) {
        let spec = centered(&grid, &to_spectral(field));
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for (i, z) in spec.into_iter().enumerate() {
            buf[i] = z * factor(centered_xi(&grid, i));
        }
        fwd.process(&mut buf);
        for (p, z) in product.iter_mut().zip(buf) {
            *p *= z;
        }
    }
    plan(len, false).process(&mut product);
    // Each input is offset by N/2, so output centered index c lands at c + N.
    let w = grid.dxi() * grid.dxi() / len as f64;
    let out = (0..n).map(|c| product[c + n] * w).collect();
    Ok(inverse_unchecked(&uncentered(&grid, out)))
}

/// A symbol tabulated on all in-band wavenumber triples of one grid.
///
/// Useful when the same symbol is applied to many inputs.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    grid: GridSpec,
    values: Vec<f64>,
}

impl SymbolTable {
    pub fn new(m: &Symbol, grid: GridSpec) -> Result<Self> {
        let n = grid.num_points();
        if n > BRUTE_FORCE_MAX_POINTS {
            return Err(NlsError::GridTooLarge(n));
        }
        let mut values = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let t = FrequencyTriple::new(
                        centered_xi(&grid, i),
                        centered_xi(&grid, j),
                        centered_xi(&grid, k),
                    );
                    let v = m.eval(&t);
                    if !v.is_finite() {
                        return Err(NlsError::NonFinite);
                    }
                    values[(i * n + j) * n + k] = v;
                }
            }
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `F(T_m[a,b,c])` using the stored values.
    pub fn spectrum(
        &self,
        a: &ComplexField,
        b: &ComplexField,
        c: &ComplexField,
    ) -> Result<ComplexField> {
        let grid = check_inputs(a, b, c)?;
        if grid != self.grid {
            return Err(NlsError::GridMismatch);
        }
        let n = grid.num_points();
        let (ac, bc, cc) = (
            centered(&grid, &to_spectral(a)),
            centered(&grid, &to_spectral(b)),
            centered(&grid, &to_spectral(c)),
        );
        Ok(triple_sum(&grid, &ac, &bc, &cc, |i, j, k| {
            self.values[(i * n + j) * n + k]
        }))
    }
}
