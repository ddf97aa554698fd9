//! Finite-difference proxy for the Coifman–Meyer condition
//! `sup |ξ⃗|^{|α|} |∂^α m(ξ⃗)| < ∞`.
//!
//! Multi-indices are limited to `|α| ≤ 3`; higher-order differences are
//! dominated by roundoff. Stencils are centered on lattice points with a
//! step proportional to `|ξ⃗|`, so a symbol that is homogeneous of degree 0
//! is differentiated with the same relative accuracy at every radius and
//! the lattice only controls where the supremum is sampled.

use serde::{Deserialize, Serialize};

use super::{write_triple_csv, FrequencyTriple, SymbolFn, TripleLattice};
use crate::error::{NlsError, Result};

/// Default stencil step as a fraction of `|ξ⃗|`.
pub const DEFAULT_REL_STEP: f64 = 5e-4;
/// Relative change under refinement above which a lattice counts as too coarse.
pub const CM_REFINEMENT_TOLERANCE: f64 = 0.2;

/// A symbol together with its samples on a [`TripleLattice`].
#[derive(Clone)]
pub struct SymbolGrid {
    lattice: TripleLattice,
    symbol: SymbolFn,
    values: Vec<f64>,
}

impl std::fmt::Debug for SymbolGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymbolGrid")
            .field("lattice", &self.lattice)
            .finish_non_exhaustive()
    }
}

impl SymbolGrid {
    /// Samples `symbol` on every lattice point; non-finite samples are rejected.
    pub fn sample(lattice: TripleLattice, symbol: SymbolFn) -> Result<Self> {
        let values: Vec<f64> = lattice.iter().map(|p| symbol(p)).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(NlsError::NonFinite);
        }
        Ok(Self {
            lattice,
            symbol,
            values,
        })
    }

    pub fn lattice(&self) -> &TripleLattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn symbol(&self) -> &SymbolFn {
        &self.symbol
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        write_triple_csv(out, self.lattice.iter().zip(self.values.iter().copied()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmOptions {
    /// Largest total derivative order, at most 3.
    pub alpha_max: usize,
    /// Lattice points with `|ξ⃗| < r_min` are skipped.
    pub r_min: f64,
    pub rel_step: f64,
}

impl Default for CmOptions {
    fn default() -> Self {
        Self {
            alpha_max: 3,
            r_min: 0.0,
            rel_step: DEFAULT_REL_STEP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmEstimate {
    /// Maximum over points and multi-indices.
    pub value: f64,
    /// `by_order[k]`: the maximum restricted to `|α| = k`.
    pub by_order: Vec<f64>,
    pub argmax: FrequencyTriple,
    pub points_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmRefinement {
    pub coarse: CmEstimate,
    pub fine: CmEstimate,
    pub relative_change: f64,
    /// Set when `relative_change` exceeds [`CM_REFINEMENT_TOLERANCE`].
    pub too_coarse: bool,
}

/// 1D central-difference weights on offsets `-2..=2`.
const WEIGHTS: [[f64; 5]; 4] = [
    [0.0, 0.0, 1.0, 0.0, 0.0],
    [0.0, -0.5, 0.0, 0.5, 0.0],
    [0.0, 1.0, -2.0, 1.0, 0.0],
    [-0.5, 1.0, 0.0, -1.0, 0.5],
];

fn multi_indices(alpha_max: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for i in 0..=alpha_max {
        for j in 0..=alpha_max - i {
            for k in 0..=alpha_max - i - j {
                out.push([i, j, k]);
            }
        }
    }
    out
}

/// Stencil evaluator with a lazily filled `5×5×5` cache.
struct Stencil<'a> {
    symbol: &'a SymbolFn,
    center: FrequencyTriple,
    h: f64,
    cache: [Option<f64>; 125],
}

impl Stencil<'_> {
    fn at(&mut self, i: usize, j: usize, k: usize) -> f64 {
        let slot = (i * 5 + j) * 5 + k;
        if let Some(v) = self.cache[slot] {
            return v;
        }
        let off = |n: usize| (n as f64 - 2.0) * self.h;
        let p = FrequencyTriple::new(
            self.center.xi1 + off(i),
            self.center.xi2 + off(j),
            self.center.xi3 + off(k),
        );
        let v = (self.symbol)(p);
        self.cache[slot] = Some(v);
        v
    }

    fn derivative(&mut self, alpha: [usize; 3]) -> f64 {
        let [wa, wb, wc] = alpha.map(|a| WEIGHTS[a]);
        let mut acc = 0.0;
        for i in 0..5 {
            if wa[i] == 0.0 {
                continue;
            }
            for j in 0..5 {
                if wb[j] == 0.0 {
                    continue;
                }
                for k in 0..5 {
                    if wc[k] != 0.0 {
                        acc += wa[i] * wb[j] * wc[k] * self.at(i, j, k);
                    }
                }
            }
        }
        acc / self.h.powi((alpha[0] + alpha[1] + alpha[2]) as i32)
    }
}

fn validate(opts: &CmOptions) -> Result<()> {
    if opts.alpha_max > 3 {
        return Err(NlsError::InvalidInput(format!(
            "alpha_max must be at most 3, got {}",
            opts.alpha_max
        )));
    }
    if !(opts.r_min >= 0.0 && opts.r_min.is_finite()) {
        return Err(NlsError::InvalidInput(format!(
            "r_min must be nonnegative, got {}",
            opts.r_min
        )));
    }
    if !(opts.rel_step > 0.0 && opts.rel_step < 0.1) {
        return Err(NlsError::InvalidInput(format!(
            "rel_step must lie in (0, 0.1), got {}",
            opts.rel_step
        )));
    }
    Ok(())
}

/// Per-point value `max_α |ξ⃗|^{|α|}|∂^α m|`, or `None` for skipped points.
fn local_values<'a>(
    lattice: &'a TripleLattice,
    symbol: &'a SymbolFn,
    opts: &CmOptions,
) -> impl Iterator<Item = (FrequencyTriple, Option<Vec<f64>>)> + 'a {
    let indices = multi_indices(opts.alpha_max);
    let opts = *opts;
    lattice.iter().map(move |p| {
        let r = p.norm();
        if r < opts.r_min {
            return (p, None);
        }
        let mut by_order = vec![0.0; opts.alpha_max + 1];
        if r == 0.0 {
            by_order[0] = symbol(p).abs();
            return (p, Some(by_order));
        }
        let mut st = Stencil {
            symbol,
            center: p,
            h: opts.rel_step * r,
            cache: [None; 125],
        };
        for alpha in &indices {
            let order = alpha.iter().sum::<usize>();
            let v = r.powi(order as i32) * st.derivative(*alpha).abs();
            by_order[order] = by_order[order].max(v);
        }
        (p, Some(by_order))
    })
}

/// Seminorm proxy with default options and the given `alpha_max`.
pub fn cm_seminorm_estimate(grid: &SymbolGrid, alpha_max: usize) -> Result<CmEstimate> {
    cm_seminorm_with(
        grid,
        &CmOptions {
            alpha_max,
            ..CmOptions::default()
        },
    )
}

pub fn cm_seminorm_with(grid: &SymbolGrid, opts: &CmOptions) -> Result<CmEstimate> {
    validate(opts)?;
    let mut est = CmEstimate {
        value: 0.0,
        by_order: vec![0.0; opts.alpha_max + 1],
        argmax: FrequencyTriple::new(0.0, 0.0, 0.0),
        points_used: 0,
    };
    for (p, local) in local_values(&grid.lattice, &grid.symbol, opts) {
        let Some(local) = local else { continue };
        est.points_used += 1;
        for (k, v) in local.into_iter().enumerate() {
            if !v.is_finite() {
                return Err(NlsError::NonFinite);
            }
            est.by_order[k] = est.by_order[k].max(v);
            if v > est.value {
                est.value = v;
                est.argmax = p;
            }
        }
    }
    if est.points_used == 0 {
        return Err(NlsError::InsufficientData(
            "no lattice point satisfies |ξ| >= r_min".into(),
        ));
    }
    Ok(est)
}

/// Per-point seminorm values, for export.
pub fn cm_local_map(grid: &SymbolGrid, opts: &CmOptions) -> Result<Vec<(FrequencyTriple, f64)>> {
    validate(opts)?;
    Ok(local_values(&grid.lattice, &grid.symbol, opts)
        .filter_map(|(p, local)| local.map(|l| (p, l.into_iter().fold(0.0, f64::max))))
        .collect())
}

/// Runs the proxy on `lattice` and on [`TripleLattice::refined`].
pub fn cm_refinement_study(
    symbol: SymbolFn,
    lattice: TripleLattice,
    opts: &CmOptions,
) -> Result<CmRefinement> {
    let coarse = cm_seminorm_with(&SymbolGrid::sample(lattice, symbol.clone())?, opts)?;
    let fine = cm_seminorm_with(&SymbolGrid::sample(lattice.refined(), symbol)?, opts)?;
    let relative_change =
        (fine.value - coarse.value).abs() / coarse.value.abs().max(f64::MIN_POSITIVE);
    Ok(CmRefinement {
        coarse,
        fine,
        relative_change,
        too_coarse: relative_change > CM_REFINEMENT_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn multi_index_count() {
        assert_eq!(multi_indices(0).len(), 1);
        assert_eq!(multi_indices(3).len(), 20);
    }

    #[test]
    fn monomial_derivatives() {
        // m = ξ₁²ξ₂ on a stencil: ∂₁²∂₂ m = 2 exactly.
        let sym: SymbolFn = Arc::new(|p: FrequencyTriple| p.xi1 * p.xi1 * p.xi2);
        let mut st = Stencil {
            symbol: &sym,
            center: FrequencyTriple::new(0.3, -0.2, 0.1),
            h: 1e-2,
            cache: [None; 125],
        };
        assert!((st.derivative([2, 1, 0]) - 2.0).abs() < 1e-6);
        assert!((st.derivative([1, 0, 0]) - 2.0 * 0.3 * -0.2).abs() < 1e-6);
        assert!(st.derivative([0, 0, 3]).abs() < 1e-6);
    }
}
