//! Frequency-space machinery for the cubic interactions.
//!
//! A cubic term couples three input frequencies `ξ⃗ = (ξ₁, ξ₂, ξ₃)` into the
//! output `ξ = ξ₁ + ξ₂ + ξ₃`. Integrals are written in the chart
//! `ξ₁ = ξ - η`, `ξ₂ = η - σ`, `ξ₃ = σ`, so at fixed `ξ` the integration
//! variables are `(η, σ)`. Every symbol here is stored as a function of
//! `(ξ₁, ξ₂, ξ₃)`.

mod cm;
mod cutoffs;
mod estimates;
mod trilinear;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};

pub use cm::{
    cm_local_map, cm_refinement_study, cm_seminorm_estimate, cm_seminorm_with, CmEstimate,
    CmOptions, CmRefinement, SymbolGrid, CM_REFINEMENT_TOLERANCE, DEFAULT_REL_STEP,
};
pub use cutoffs::{
    build_cutoffs, Cutoff, CutoffFamily, SupportPredicate, B_INNER, B_OUTER, SUPPORT_THRESHOLD,
};
pub use estimates::{
    estimate_sweep, random_packet_field, tri_estimate_check, Estimate, EstimateConfig,
    EstimateResult, EstimateSweep, ESTIMATE_BANDS, ESTIMATE_STABILITY,
};
pub use trilinear::{
    trilinear_apply_bruteforce, trilinear_apply_fast, trilinear_spectrum_bruteforce, Symbol,
    SymbolFn, SymbolTable, BRUTE_FORCE_MAX_POINTS,
};

/// A point `(ξ₁, ξ₂, ξ₃)` of interaction frequency space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTriple {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
}

impl FrequencyTriple {
    pub fn new(xi1: f64, xi2: f64, xi3: f64) -> Self {
        Self { xi1, xi2, xi3 }
    }

    /// Builds the triple from chart coordinates.
    pub fn from_chart(xi: f64, eta: f64, sigma: f64) -> Self {
        Self::new(xi - eta, eta - sigma, sigma)
    }

    /// Output frequency `ξ₁ + ξ₂ + ξ₃`.
    pub fn xi(&self) -> f64 {
        self.xi1 + self.xi2 + self.xi3
    }

    pub fn eta(&self) -> f64 {
        self.xi2 + self.xi3
    }

    pub fn sigma(&self) -> f64 {
        self.xi3
    }

    /// Euclidean length `|ξ⃗|`.
    pub fn norm(&self) -> f64 {
        (self.xi1 * self.xi1 + self.xi2 * self.xi2 + self.xi3 * self.xi3).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.xi1.abs().max(self.xi2.abs()).max(self.xi3.abs())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.xi1, self.xi2, self.xi3]
    }
}

/// The three interaction phases.
///
/// `Φ = ½(ξ² + ξ₁² + ξ₂² + ξ₃²)` belongs to `ū³`, `Ψ = ξ₁ξ₂ + ξ₂ξ₃ + ξ₃ξ₁`
/// to `u³` and `Ω = ξ₁² + ξ₂² + ξ₁ξ₂ + ξ₂ξ₃ + ξ₁ξ₃` to `|u|²ū`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseKind {
    Phi,
    Psi,
    Omega,
}

impl PhaseKind {
    pub const ALL: [PhaseKind; 3] = [PhaseKind::Phi, PhaseKind::Psi, PhaseKind::Omega];

    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseKind::Phi => "phi",
            PhaseKind::Psi => "psi",
            PhaseKind::Omega => "omega",
        }
    }
}

impl fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PhaseKind {
    type Err = NlsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phi" => Ok(PhaseKind::Phi),
            "psi" => Ok(PhaseKind::Psi),
            "omega" => Ok(PhaseKind::Omega),
            other => Err(NlsError::InvalidInput(format!(
                "unknown phase '{other}' (expected phi, psi or omega)"
            ))),
        }
    }
}

/// Partial derivatives of a phase in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGradient {
    pub d_eta: f64,
    pub d_sigma: f64,
    pub d_xi: f64,
}

pub fn phase_eval(kind: PhaseKind, t: &FrequencyTriple) -> f64 {
    let FrequencyTriple { xi1, xi2, xi3 } = *t;
    match kind {
        PhaseKind::Phi => {
            let xi = t.xi();
            0.5 * (xi * xi + xi1 * xi1 + xi2 * xi2 + xi3 * xi3)
        }
        PhaseKind::Psi => xi1 * xi2 + xi2 * xi3 + xi3 * xi1,
        PhaseKind::Omega => xi1 * xi1 + xi2 * xi2 + xi1 * xi2 + xi2 * xi3 + xi1 * xi3,
    }
}

/// Closed-form `(∂_η, ∂_σ, ∂_ξ)` of a phase.
pub fn phase_gradients(kind: PhaseKind, t: &FrequencyTriple) -> PhaseGradient {
    let FrequencyTriple { xi1, xi2, xi3 } = *t;
    let xi = t.xi();
    match kind {
        PhaseKind::Phi => PhaseGradient {
            d_eta: xi2 - xi1,
            d_sigma: xi3 - xi2,
            d_xi: xi + xi1,
        },
        PhaseKind::Psi => PhaseGradient {
            d_eta: xi1 - xi2,
            d_sigma: xi2 - xi3,
            d_xi: xi2 + xi3,
        },
        PhaseKind::Omega => PhaseGradient {
            d_eta: xi2 - xi1,
            d_sigma: -xi2 - xi3,
            d_xi: xi + xi1,
        },
    }
}

/// Cubic lattice `{-E + i·2E/(n-1)}³`, symmetric about the origin.
///
/// The origin is a lattice point exactly when `n` is odd.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleLattice {
    extent: f64,
    points_per_axis: usize,
}

impl TripleLattice {
    pub fn new(extent: f64, points_per_axis: usize) -> Result<Self> {
        if !(extent.is_finite() && extent > 0.0) {
            return Err(NlsError::InvalidInput(format!(
                "lattice extent must be positive, got {extent}"
            )));
        }
        if points_per_axis < 2 {
            return Err(NlsError::InvalidInput(format!(
                "lattice needs at least 2 points per axis, got {points_per_axis}"
            )));
        }
        Ok(Self {
            extent,
            points_per_axis,
        })
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / (self.points_per_axis - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains_origin(&self) -> bool {
        self.points_per_axis % 2 == 1
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        // Mirror the upper half so the lattice is symmetric to the last bit.
        let n = self.points_per_axis;
        if 2 * i + 1 > n {
            -self.coordinate(n - 1 - i)
        } else {
            -self.extent + i as f64 * self.spacing()
        }
    }

    /// Point at flat index `(i·n + j)·n + k`.
    pub fn point(&self, index: usize) -> FrequencyTriple {
        let n = self.points_per_axis;
        let (i, j, k) = (index / (n * n), (index / n) % n, index % n);
        FrequencyTriple::new(self.coordinate(i), self.coordinate(j), self.coordinate(k))
    }

    pub fn iter(&self) -> impl Iterator<Item = FrequencyTriple> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Same extent, spacing roughly halved (`n ↦ 2n - 1`, parity of `n` kept).
    pub fn refined(&self) -> Self {
        let n = self.points_per_axis;
        let m = if n % 2 == 1 { 2 * n - 1 } else { 2 * n };
        Self {
            extent: self.extent,
            points_per_axis: m,
        }
    }
}

/// Lattice points where a phase and both chart gradients are small.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonantSet {
    pub kind: PhaseKind,
    pub tol_phase: f64,
    pub tol_grad: f64,
    /// Each point with its phase value.
    pub points: Vec<(FrequencyTriple, f64)>,
}

impl ResonantSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest `|ξ⃗|` in the set, 0 when empty.
    pub fn max_radius(&self) -> f64 {
        self.points
            .iter()
            .map(|(p, _)| p.norm())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_triple_csv(out, self.points.iter().copied())
    }
}

/// All lattice points with `|phase| < tol_phase`, `|∂_η| < tol_grad` and `|∂_σ| < tol_grad`.
pub fn resonant_set_scan(
    kind: PhaseKind,
    lattice: &TripleLattice,
    tol_phase: f64,
    tol_grad: f64,
) -> Result<ResonantSet> {
    for (name, v) in [("tol_phase", tol_phase), ("tol_grad", tol_grad)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(NlsError::InvalidInput(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    let points = lattice
        .iter()
        .filter_map(|p| {
            let value = phase_eval(kind, &p);
            let g = phase_gradients(kind, &p);
            (value.abs() < tol_phase && g.d_eta.abs() < tol_grad && g.d_sigma.abs() < tol_grad)
                .then_some((p, value))
        })
        .collect();
    Ok(ResonantSet {
        kind,
        tol_phase,
        tol_grad,
        points,
    })
}

/// One row of a tolerance sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanLevel {
    pub tol_phase: f64,
    pub tol_grad: f64,
    pub count: usize,
    pub max_radius: f64,
}

/// Scans the same lattice at a sequence of `(tol_phase, tol_grad)` levels.
pub fn shrinkage_study(
    kind: PhaseKind,
    lattice: &TripleLattice,
    levels: &[(f64, f64)],
) -> Result<Vec<ScanLevel>> {
    levels
        .iter()
        .map(|&(tp, tg)| {
            let set = resonant_set_scan(kind, lattice, tp, tg)?;
            Ok(ScanLevel {
                tol_phase: tp,
                tol_grad: tg,
                count: set.len(),
                max_radius: set.max_radius(),
            })
        })
        .collect()
}

/// Writes `xi1,xi2,xi3,value` rows.
pub fn write_triple_csv<W: Write>(
    mut out: W,
    rows: impl IntoIterator<Item = (FrequencyTriple, f64)>,
) -> std::io::Result<()> {
    writeln!(out, "xi1,xi2,xi3,value")?;
    for (p, v) in rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            p.xi1, p.xi2, p.xi3, v
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_round_trip() {
        let t = FrequencyTriple::from_chart(0.7, -1.3, 2.1);
        assert!((t.xi() - 0.7).abs() < 1e-15);
        assert!((t.eta() + 1.3).abs() < 1e-15);
        assert_eq!(t.sigma(), 2.1);
    }

    #[test]
    fn lattice_symmetry() {
        for n in [4, 5, 10, 11] {
            let l = TripleLattice::new(3.0, n).unwrap();
            for i in 0..n {
                assert_eq!(l.coordinate(i), -l.coordinate(n - 1 - i));
            }
            assert_eq!(l.contains_origin(), l.iter().any(|p| p.norm() == 0.0));
        }
    }

    #[test]
    fn refinement_halves_spacing() {
        let l = TripleLattice::new(1.0, 11).unwrap();
        assert!((l.refined().spacing() - 0.5 * l.spacing()).abs() < 1e-15);
    }

    #[test]
    fn phase_names_parse() {
        for k in PhaseKind::ALL {
            assert_eq!(k.as_str().parse::<PhaseKind>().unwrap(), k);
        }
        assert!("theta".parse::<PhaseKind>().is_err());
    }
}
