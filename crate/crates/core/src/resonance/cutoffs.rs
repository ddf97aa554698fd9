//! Cutoff partitions of interaction frequency space.
//!
//! `χ₁ + χ₂ + χ₃ = 1` splits by which input frequency dominates.
//! `χ_η + χ_σ + χ_s = 1` splits by whether `ξ₁` and `ξ₃` are close to `ξ₂`:
//! with `p = (ξ₂ - ξ₁)/ξ₂` and `q = (ξ₂ - ξ₃)/ξ₂`,
//!
//! ```text
//! χ_η = 1 - b(p),   χ_σ = b(p)(1 - b(q)),   χ_s = b(p)b(q).
//! ```
//!
//! The `Ω`-adapted variant replaces `q` by `(ξ₂ + ξ₃)/ξ₂`, which is where
//! `∂_σΩ = -(ξ₂ + ξ₃)` vanishes.

use serde::{Deserialize, Serialize};

use super::{phase_eval, phase_gradients, FrequencyTriple, PhaseKind};
use crate::bump::{plateau, smooth_step};
use crate::error::{NlsError, Result};

/// `b ≡ 1` on `|x| ≤ B_INNER`.
pub const B_INNER: f64 = 1.0 / 100.0;
/// `b ≡ 0` on `|x| ≥ B_OUTER`.
pub const B_OUTER: f64 = 1.0 / 50.0;
/// Values above this count as "in the support".
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cutoff {
    Chi1,
    Chi2,
    Chi3,
    ChiEta,
    ChiSigma,
    ChiS,
}

impl Cutoff {
    pub const ALL: [Cutoff; 6] = [
        Cutoff::Chi1,
        Cutoff::Chi2,
        Cutoff::Chi3,
        Cutoff::ChiEta,
        Cutoff::ChiSigma,
        Cutoff::ChiS,
    ];
}

/// The six cutoffs for one transition width `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffFamily {
    delta: f64,
}

/// Builds the family; `δ` must lie in `(0, 0.1]`.
pub fn build_cutoffs(delta: f64) -> Result<CutoffFamily> {
    if !(delta > 0.0 && delta <= 0.1) {
        return Err(NlsError::InvalidInput(format!(
            "delta must lie in (0, 0.1], got {delta}"
        )));
    }
    Ok(CutoffFamily { delta })
}

impl Default for CutoffFamily {
    fn default() -> Self {
        Self { delta: 0.1 }
    }
}

impl CutoffFamily {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `a(x) = 1` for `|x| ≤ 1`, `0` for `|x| ≥ 1 + δ`.
    pub fn a(&self, x: f64) -> f64 {
        smooth_step((x.abs() - 1.0) / self.delta)
    }

    pub fn a_c(&self, x: f64) -> f64 {
        1.0 - self.a(x)
    }

    /// `b(x) = 1` for `|x| ≤ 1/100`, `0` for `|x| ≥ 1/50`.
    pub fn b(x: f64) -> f64 {
        plateau(x, B_INNER, B_OUTER)
    }

    /// `a(num/den)` with the limits `a(x/0) = 0` for `x ≠ 0` and `a(0/0) = 1`.
    fn a_of(&self, num: f64, den: f64) -> f64 {
        if den != 0.0 {
            self.a(num / den)
        } else if num != 0.0 {
            0.0
        } else {
            1.0
        }
    }

    fn b_of(num: f64, den: f64) -> f64 {
        if den != 0.0 {
            Self::b(num / den)
        } else if num != 0.0 {
            0.0
        } else {
            1.0
        }
    }

    pub fn chi1(&self, t: &FrequencyTriple) -> f64 {
        (1.0 - self.a_of(t.xi1, t.xi2)) * (1.0 - self.a_of(t.xi1, t.xi3))
    }

    pub fn chi2(&self, t: &FrequencyTriple) -> f64 {
        self.a_of(t.xi1, t.xi2) * (1.0 - self.a_of(t.xi2, t.xi3))
    }

    pub fn chi3(&self, t: &FrequencyTriple) -> f64 {
        let a12 = self.a_of(t.xi1, t.xi2);
        (1.0 - a12) * self.a_of(t.xi1, t.xi3) + a12 * self.a_of(t.xi2, t.xi3)
    }

    /// `[χ_η, χ_σ, χ_s]` for the `Ψ` splitting.
    pub fn eta_sigma_s(&self, t: &FrequencyTriple) -> [f64; 3] {
        Self::split(t.xi2 - t.xi1, t.xi2 - t.xi3, t.xi2)
    }

    /// `[χ_η, χ_σ, χ_s]` for the `Ω` splitting.
    pub fn omega_split(&self, t: &FrequencyTriple) -> [f64; 3] {
        Self::split(t.xi2 - t.xi1, t.xi2 + t.xi3, t.xi2)
    }

    fn split(p_num: f64, q_num: f64, den: f64) -> [f64; 3] {
        let bp = Self::b_of(p_num, den);
        let bq = Self::b_of(q_num, den);
        [1.0 - bp, bp * (1.0 - bq), bp * bq]
    }

    pub fn chi_eta(&self, t: &FrequencyTriple) -> f64 {
        self.eta_sigma_s(t)[0]
    }

    pub fn chi_sigma(&self, t: &FrequencyTriple) -> f64 {
        self.eta_sigma_s(t)[1]
    }

    pub fn chi_s(&self, t: &FrequencyTriple) -> f64 {
        self.eta_sigma_s(t)[2]
    }

    pub fn eval(&self, which: Cutoff, t: &FrequencyTriple) -> f64 {
        match which {
            Cutoff::Chi1 => self.chi1(t),
            Cutoff::Chi2 => self.chi2(t),
            Cutoff::Chi3 => self.chi3(t),
            Cutoff::ChiEta => self.chi_eta(t),
            Cutoff::ChiSigma => self.chi_sigma(t),
            Cutoff::ChiS => self.chi_s(t),
        }
    }
}

/// Region inequalities the cutoffs are designed to guarantee.
///
/// Each predicate is an implication "cutoff value above
/// [`SUPPORT_THRESHOLD`] ⇒ inequality"; [`SupportPredicate::holds`] is
/// vacuously true off the support. Lower bounds carry a slack of `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SupportPredicate {
    /// On `supp χⱼ`: `|ξⱼ| ≥ (9/10)(1 - δ)·max_{k≠j}|ξₖ|`.
    MaxSpecified(u8),
    /// On `supp χ_η`: `|ξ₁ - ξ₂| ≥ |ξ₂|/100`.
    EtaGap,
    /// On `supp χ_σ`: `|ξ₃ - ξ₂| ≥ |ξ₂|/100`.
    SigmaGap,
    /// On `supp χ_s`: `|ξ₁ - ξ₂| ≤ |ξ₂|/50` and `|ξ₃ - ξ₂| ≤ |ξ₂|/50`.
    Stationary,
    /// On `supp χ₂χ_η`: `|∂_ηΨ| ≥ (1/100 - δ/100)|ξ₂|`.
    PsiEtaGradient,
    /// On `supp χ₂χ_s`: `|Ψ| ≥ (1 - 3/50 - δ)|ξ₂|²`.
    PsiLower,
    /// On `supp χ_σ` (Ω splitting): `|∂_σΩ| ≥ |ξ₂|/100`.
    OmegaSigmaGradient,
    /// On `supp χ_s` (Ω splitting): `|ξ₁ - ξ₂| ≤ |ξ₂|/50` and `|ξ₂ + ξ₃| ≤ |ξ₂|/50`.
    OmegaStationary,
    /// On `supp χ₂χ_s` (Ω splitting): `|Ω| ≥ (1 - 3/50 - δ)|ξ₂|²`.
    OmegaLower,
}

impl SupportPredicate {
    pub const ALL: [SupportPredicate; 11] = [
        SupportPredicate::MaxSpecified(1),
        SupportPredicate::MaxSpecified(2),
        SupportPredicate::MaxSpecified(3),
        SupportPredicate::EtaGap,
        SupportPredicate::SigmaGap,
        SupportPredicate::Stationary,
        SupportPredicate::PsiEtaGradient,
        SupportPredicate::PsiLower,
        SupportPredicate::OmegaSigmaGradient,
        SupportPredicate::OmegaStationary,
        SupportPredicate::OmegaLower,
    ];

    pub fn name(&self) -> String {
        match self {
            SupportPredicate::MaxSpecified(j) => format!("max-specified-{j}"),
            SupportPredicate::EtaGap => "eta-gap".into(),
            SupportPredicate::SigmaGap => "sigma-gap".into(),
            SupportPredicate::Stationary => "stationary".into(),
            SupportPredicate::PsiEtaGradient => "psi-eta-gradient".into(),
            SupportPredicate::PsiLower => "psi-lower".into(),
            SupportPredicate::OmegaSigmaGradient => "omega-sigma-gradient".into(),
            SupportPredicate::OmegaStationary => "omega-stationary".into(),
            SupportPredicate::OmegaLower => "omega-lower".into(),
        }
    }

    /// Value of the cutoff whose support the predicate is about.
    pub fn weight(&self, family: &CutoffFamily, t: &FrequencyTriple) -> f64 {
        match self {
            SupportPredicate::MaxSpecified(1) => family.chi1(t),
            SupportPredicate::MaxSpecified(2) => family.chi2(t),
            SupportPredicate::MaxSpecified(_) => family.chi3(t),
            SupportPredicate::EtaGap => family.chi_eta(t),
            SupportPredicate::SigmaGap => family.chi_sigma(t),
            SupportPredicate::Stationary => family.chi_s(t),
            SupportPredicate::PsiEtaGradient => family.chi2(t) * family.chi_eta(t),
            SupportPredicate::PsiLower => family.chi2(t) * family.chi_s(t),
            SupportPredicate::OmegaSigmaGradient => family.omega_split(t)[1],
            SupportPredicate::OmegaStationary => family.omega_split(t)[2],
            SupportPredicate::OmegaLower => family.chi2(t) * family.omega_split(t)[2],
        }
    }

    /// The inequality itself, ignoring the support.
    pub fn inequality(&self, family: &CutoffFamily, t: &FrequencyTriple) -> bool {
        let d = family.delta();
        let x2 = t.xi2.abs();
        match *self {
            SupportPredicate::MaxSpecified(j) => {
                let v = t.as_array().map(f64::abs);
                let j = (j as usize).clamp(1, 3) - 1;
                let others = (0..3).filter(|&k| k != j).map(|k| v[k]).fold(0.0, f64::max);
                v[j] >= 0.9 * (1.0 - d) * others
            }
            SupportPredicate::EtaGap => (t.xi1 - t.xi2).abs() >= B_INNER * x2,
            SupportPredicate::SigmaGap => (t.xi3 - t.xi2).abs() >= B_INNER * x2,
            SupportPredicate::Stationary => {
                (t.xi1 - t.xi2).abs() <= B_OUTER * x2 && (t.xi3 - t.xi2).abs() <= B_OUTER * x2
            }
            SupportPredicate::PsiEtaGradient => {
                phase_gradients(PhaseKind::Psi, t).d_eta.abs() >= (1.0 - d) * B_INNER * x2
            }
            SupportPredicate::PsiLower => {
                phase_eval(PhaseKind::Psi, t).abs() >= (1.0 - 3.0 / 50.0 - d) * x2 * x2
            }
            SupportPredicate::OmegaSigmaGradient => {
                phase_gradients(PhaseKind::Omega, t).d_sigma.abs() >= B_INNER * x2
            }
            SupportPredicate::OmegaStationary => {
                (t.xi1 - t.xi2).abs() <= B_OUTER * x2 && (t.xi2 + t.xi3).abs() <= B_OUTER * x2
            }
            SupportPredicate::OmegaLower => {
                phase_eval(PhaseKind::Omega, t).abs() >= (1.0 - 3.0 / 50.0 - d) * x2 * x2
            }
        }
    }

    pub fn holds(&self, family: &CutoffFamily, t: &FrequencyTriple) -> bool {
        self.weight(family, t) <= SUPPORT_THRESHOLD || self.inequality(family, t)
    }
}
