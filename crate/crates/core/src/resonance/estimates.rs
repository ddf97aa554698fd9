//! Empirical constants for the trilinear and frequency-localized estimates.
//!
//! Each check draws random fields, evaluates `LHS/RHS` of one inequality for
//! a frequency band `N` and reports the largest ratio. All bands share one
//! seed and the random fields are drawn at a scale proportional to `N`, so
//! in the continuum limit the ratios are identical across bands; a constant
//! that drifts with `N` signals a wrong power of `N`.
//!
//! | estimate    | LHS                                              | RHS                                                   |
//! |-------------|--------------------------------------------------|-------------------------------------------------------|
//! | `TriEst1`   | `‖F T_m[a,b,c_{>N}]‖_{L∞ξ}`, `m = χ₃/ξ₃²`          | `N⁻¹‖â‖∞ min(‖b‖∞‖ĉ‖∞, ‖b̂‖∞‖c‖∞)`                      |
//! | `TriEst2`   | `‖F T_m[a,b,c_{>N}]‖_{L∞ξ}`, `m = χ₃/|ξ₃|`         | `N^{-1/2}‖a‖∞ min(‖b‖₂‖ĉ‖∞, ‖b̂‖∞‖c‖₂)`                 |
//! | `TriEst3`   | `‖T_m[a,b,c_{>N}]‖₂`, `m = χ₃/|ξ₃|`                | `N^{-1/2}‖a‖∞ min(‖b‖∞‖ĉ‖∞, ‖b̂‖∞‖c‖∞)`                 |
//! | `Est0`      | `N^{1/2}‖u_{>N}‖_{Ḣ⁻¹} + N^{3/2}‖u_{>N}‖_{Ḣ⁻²} + N^{-1/2}‖u_{≤N}‖₂` | `‖û‖∞`                    |
//! | `Bernstein` | `‖f_{>N}‖∞`                                       | `N^{-1/2}‖∂ₓf_{>N}‖₂`                                   |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{build_cutoffs, FrequencyTriple, Symbol, SymbolTable};
use crate::error::{NlsError, Result};
use crate::spectral::{inverse_unchecked, lp_project, ComplexField, GridSpec, LpBand, Side};

/// Bands used for the stability sweep.
pub const ESTIMATE_BANDS: [f64; 3] = [4.0, 8.0, 16.0];
/// Allowed relative deviation of each band's constant from the median constant.
pub const ESTIMATE_STABILITY: f64 = 0.5;
const MIN_TRIALS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimate {
    TriEst1,
    TriEst2,
    TriEst3,
    Est0,
    Bernstein,
}

impl Estimate {
    pub const ALL: [Estimate; 5] = [
        Estimate::TriEst1,
        Estimate::TriEst2,
        Estimate::TriEst3,
        Estimate::Est0,
        Estimate::Bernstein,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Estimate::TriEst1 => "triest1",
            Estimate::TriEst2 => "triest2",
            Estimate::TriEst3 => "triest3",
            Estimate::Est0 => "est0",
            Estimate::Bernstein => "bernstein",
        }
    }

    /// The multiplier used by the trilinear estimates.
    pub fn symbol(&self, delta: f64) -> Result<Option<Symbol>> {
        let family = build_cutoffs(delta)?;
        Ok(match self {
            Estimate::TriEst1 => Some(Symbol::general(move |t: FrequencyTriple| {
                if t.xi3 == 0.0 {
                    0.0
                } else {
                    family.chi3(&t) / (t.xi3 * t.xi3)
                }
            })),
            Estimate::TriEst2 | Estimate::TriEst3 => {
                Some(Symbol::general(move |t: FrequencyTriple| {
                    if t.xi3 == 0.0 {
                        0.0
                    } else {
                        family.chi3(&t) / t.xi3.abs()
                    }
                }))
            }
            Estimate::Est0 | Estimate::Bernstein => None,
        })
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Estimate {
    type Err = NlsError;

    fn from_str(s: &str) -> Result<Self> {
        Estimate::ALL
            .into_iter()
            .find(|e| e.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| NlsError::InvalidInput(format!("unknown estimate '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub num_points: usize,
    pub domain_length: f64,
    pub trials: usize,
    pub seed: u64,
    /// Transition width of the cutoff inside the trilinear symbols.
    pub delta: f64,
}

impl Default for EstimateConfig {
    /// 128 points on a box of length `2π`, so `dξ = 1` and `|ξ| ≤ 64`.
    fn default() -> Self {
        Self {
            num_points: 128,
            domain_length: 2.0 * PI,
            trials: 50,
            seed: 0x5eed,
            delta: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub which: Estimate,
    pub band: f64,
    /// Largest `LHS/RHS` over the trials.
    pub constant: f64,
    pub median_ratio: f64,
    pub trials_used: usize,
    /// Trials dropped because the right-hand side vanished.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSweep {
    pub which: Estimate,
    pub results: Vec<EstimateResult>,
    pub median_constant: f64,
    /// Largest `|constant/median - 1|` over the bands.
    pub max_deviation: f64,
    pub stable: bool,
}

/// A sum of three Gaussian wave packets in frequency, drawn at scale `scale`.
///
/// Centers lie in `scale·[-1.5, 1.5]`, widths in `scale·[0.15, 0.5]`; each
/// packet is translated in `x` by up to `1/scale`. Returned on the spectral side.
pub fn random_packet_field(grid: GridSpec, scale: f64, rng: &mut impl Rng) -> ComplexField {
    let packets: Vec<(f64, f64, f64, Complex64)> = (0..3)
        .map(|_| {
            let center = scale * rng.gen_range(-1.5..1.5);
            let width = scale * rng.gen_range(0.15..0.5);
            let shift = rng.gen_range(-1.0..1.0) / scale;
            let amp = Complex64::from_polar(rng.gen_range(0.5..1.0), rng.gen_range(0.0..2.0 * PI));
            (center, width, shift, amp)
        })
        .collect();
    ComplexField::from_fn_spectral(grid, |xi| {
        packets
            .iter()
            .map(|&(c, w, s, amp)| {
                let z = (xi - c) / w;
                amp * (-0.5 * z * z).exp() * Complex64::from_polar(1.0, -s * xi)
            })
            .sum()
    })
}

struct Checker {
    which: Estimate,
    grid: GridSpec,
    table: Option<SymbolTable>,
    cfg: EstimateConfig,
}

impl Checker {
    fn new(which: Estimate, cfg: &EstimateConfig) -> Result<Self> {
        if cfg.trials < MIN_TRIALS {
            return Err(NlsError::InvalidInput(format!(
                "at least {MIN_TRIALS} trials are required, got {}",
                cfg.trials
            )));
        }
        let grid = GridSpec::new(cfg.num_points, cfg.domain_length)?;
        let table = which
            .symbol(cfg.delta)?
            .map(|m| SymbolTable::new(&m, grid))
            .transpose()?;
        Ok(Self {
            which,
            grid,
            table,
            cfg: *cfg,
        })
    }

    fn run(&self, band: f64) -> Result<EstimateResult> {
        if !(band.is_finite() && band > 0.0) {
            return Err(NlsError::InvalidInput(format!(
                "band must be positive, got {band}"
            )));
        }
        if band * 10.0 / 9.0 >= self.grid.xi_max() {
            return Err(NlsError::InvalidInput(format!(
                "band {band} leaves no resolved frequencies above it (|ξ| <= {})",
                self.grid.xi_max()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let mut ratios = Vec::with_capacity(self.cfg.trials);
        let mut skipped = 0;
        for _ in 0..self.cfg.trials {
            let (lhs, rhs) = self.trial(band, &mut rng)?;
            if rhs > 0.0 && rhs.is_finite() && lhs.is_finite() {
                ratios.push(lhs / rhs);
            } else {
                skipped += 1;
            }
        }
        if ratios.is_empty() {
            return Err(NlsError::InsufficientData(
                "every trial had a vanishing right-hand side".into(),
            ));
        }
        ratios.sort_by(f64::total_cmp);
        Ok(EstimateResult {
            which: self.which,
            band,
            constant: *ratios.last().unwrap(),
            median_ratio: ratios[ratios.len() / 2],
            trials_used: ratios.len(),
            skipped,
        })
    }

    fn trial(&self, n: f64, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
        let draw = |rng: &mut ChaCha8Rng| {
            let spec = random_packet_field(self.grid, n, rng);
            let phys = inverse_unchecked(&spec);
            (spec, phys)
        };
        match self.which {
            Estimate::TriEst1 | Estimate::TriEst2 | Estimate::TriEst3 => {
                let (a_hat, a) = draw(rng);
                let (b_hat, b) = draw(rng);
                let (c_hat, c) = draw(rng);
                let c_hi = lp_project(&c_hat, LpBand::Above(n))?;
                let table = self
                    .table
                    .as_ref()
                    .expect("trilinear estimates carry a symbol table");
                let out = table.spectrum(&a_hat, &b_hat, &c_hi)?;
                Ok(match self.which {
                    Estimate::TriEst1 => (
                        out.sup_norm(),
                        a_hat.sup_norm() / n
                            * (b.sup_norm() * c_hat.sup_norm())
                                .min(b_hat.sup_norm() * c.sup_norm()),
                    ),
                    Estimate::TriEst2 => (
                        out.sup_norm(),
                        a.sup_norm() / n.sqrt()
                            * (b.l2_norm() * c_hat.sup_norm()).min(b_hat.sup_norm() * c.l2_norm()),
                    ),
                    _ => (
                        out.l2_norm(),
                        a.sup_norm() / n.sqrt()
                            * (b.sup_norm() * c_hat.sup_norm())
                                .min(b_hat.sup_norm() * c.sup_norm()),
                    ),
                })
            }
            Estimate::Est0 => {
                let (u_hat, _) = draw(rng);
                Ok((est0_lhs(&u_hat, n)?, u_hat.sup_norm()))
            }
            Estimate::Bernstein => {
                let (f_hat, _) = draw(rng);
                let hi = lp_project(&f_hat, LpBand::Above(n))?;
                let lhs = inverse_unchecked(&hi).sup_norm();
                let grad = weighted_l2(&hi, |xi| xi.abs());
                Ok((lhs, grad / n.sqrt()))
            }
        }
    }
}

/// `(∫ |w(ξ) ĝ(ξ)|² dξ)^{1/2}` over the grid.
fn weighted_l2(spec: &ComplexField, w: impl Fn(f64) -> f64) -> f64 {
    debug_assert_eq!(spec.side(), Side::Spectral);
    let grid = spec.grid();
    let sum: f64 = spec
        .samples()
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let v = w(grid.xi(k));
            v * v * z.norm_sqr()
        })
        .sum();
    (sum * grid.dxi()).sqrt()
}

/// Left-hand side of the low/high frequency estimate for a spectral field.
pub(crate) fn est0_lhs(u_hat: &ComplexField, n: f64) -> Result<f64> {
    let hi = lp_project(u_hat, LpBand::Above(n))?;
    let lo = lp_project(u_hat, LpBand::AtMost(n))?;
    let inv = |p: i32| move |xi: f64| if xi == 0.0 { 0.0 } else { xi.abs().powi(-p) };
    Ok(n.sqrt() * weighted_l2(&hi, inv(1))
        + n.powf(1.5) * weighted_l2(&hi, inv(2))
        + lo.l2_norm() / n.sqrt())
}

/// Empirical constant for one estimate and one band.
pub fn tri_estimate_check(
    which: Estimate,
    band: f64,
    cfg: &EstimateConfig,
) -> Result<EstimateResult> {
    Checker::new(which, cfg)?.run(band)
}

/// Runs one estimate over several bands and judges stability.
pub fn estimate_sweep(
    which: Estimate,
    bands: &[f64],
    cfg: &EstimateConfig,
) -> Result<EstimateSweep> {
    if bands.is_empty() {
        return Err(NlsError::InvalidInput("no bands given".into()));
    }
    let checker = Checker::new(which, cfg)?;
    let results = bands
        .iter()
        .map(|&b| checker.run(b))
        .collect::<Result<Vec<_>>>()?;
    let mut constants: Vec<f64> = results.iter().map(|r| r.constant).collect();
    constants.sort_by(f64::total_cmp);
    let median_constant = constants[constants.len() / 2];
    let max_deviation = results
        .iter()
        .map(|r| (r.constant / median_constant - 1.0).abs())
        .fold(0.0, f64::max);
    let stable = median_constant.is_finite()
        && median_constant > 0.0
        && results.iter().all(|r| r.constant.is_finite())
        && max_deviation <= ESTIMATE_STABILITY;
    Ok(EstimateSweep {
        which,
        results,
        median_constant,
        max_deviation,
        stable,
    })
}
