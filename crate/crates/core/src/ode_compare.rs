//! Comparison of the amplitude `A(t, ξ₀) = 2|f̂(t, ξ₀)|²` with the closed-form
//! solution of `∂ₜB = t^{-1}B²`, `B(T_s) = A₀`:
//!
//! ```text
//! B(t) = A₀ / (1 - A₀ log(t/T_s)),   horizon T_s·e^{1/A₀}.
//! ```

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{amplitude_a, remainder_r};
use crate::error::{NlsError, Result};
use crate::solver::{NlsParams, Termination, Trajectory};
use crate::spectral::WaveState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeParams {
    /// `A(T_s, ξ₀)`
    pub a0: f64,
    /// Reference time `T_s`.
    pub t_start: f64,
    /// Threshold constant.
    pub k: f64,
}

impl OdeParams {
    pub fn new(a0: f64, t_start: f64, k: f64) -> Result<Self> {
        if !(a0 > 0.0 && a0.is_finite()) {
            return Err(NlsError::InvalidInput(format!(
                "A0 must be positive, got {a0}"
            )));
        }
        if !(t_start >= 1.0 && t_start.is_finite()) {
            return Err(NlsError::InvalidInput(format!(
                "T_start must be >= 1, got {t_start}"
            )));
        }
        if !(k > a0 / 4.0 && k.is_finite()) {
            return Err(NlsError::Hypothesis(format!(
                "K = {k} must exceed A0/4 = {}",
                a0 / 4.0
            )));
        }
        Ok(Self { a0, t_start, k })
    }

    /// Default threshold `K = 4·A₀`.
    pub fn with_default_k(a0: f64, t_start: f64) -> Result<Self> {
        Self::new(a0, t_start, 4.0 * a0)
    }
}

/// `B(t) = A₀ / (1 - A₀ log(t/T_s))` for `T_s ≤ t` below the horizon.
pub fn b_eval(t: f64, p: &OdeParams) -> Result<f64> {
    if !(t >= p.t_start) {
        return Err(NlsError::InvalidInput(format!(
            "t = {t} precedes T_start = {}",
            p.t_start
        )));
    }
    let denom = 1.0 - p.a0 * (t / p.t_start).ln();
    if !(denom > 0.0) {
        return Err(NlsError::BeyondBlowup {
            t,
            horizon: blowup_horizon(p),
        });
    }
    Ok(p.a0 / denom)
}

/// `T_s·e^{1/A₀}`.
pub fn blowup_horizon(p: &OdeParams) -> f64 {
    p.t_start * (1.0 / p.a0).exp()
}

/// `T_K = T_s·exp(1/A₀ - 1/(4K))`, the time at which `B = 4K`.
pub fn threshold_time(p: &OdeParams) -> Result<f64> {
    if !(p.k > p.a0 / 4.0) {
        return Err(NlsError::Hypothesis(format!(
            "K = {} must exceed A0/4",
            p.k
        )));
    }
    Ok(p.t_start * (1.0 / p.a0 - 1.0 / (4.0 * p.k)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Xi0Selection {
    pub xi0: f64,
    pub index: usize,
    pub a0: f64,
    /// `A₀ ≥ ε²/5`.
    pub lower_bound_ok: bool,
    /// `‖û‖_∞ / ε`; the growth theorem assumes at least 1/2.
    pub fhat_ratio: f64,
}

/// Maximizer of `A(t, ·)`. Ties (relative `1e-12`) go to the smallest `|ξ|`,
/// then to the negative frequency.
pub fn select_xi0(state: &WaveState, epsilon: f64) -> Result<Xi0Selection> {
    if !(epsilon > 0.0) {
        return Err(NlsError::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let a = amplitude_a(state);
    let grid = *state.grid();
    let peak = a.iter().cloned().fold(0.0f64, f64::max);
    let mut best: Option<usize> = None;
    for (k, &v) in a.iter().enumerate() {
        if v < peak * (1.0 - 1e-12) {
            continue;
        }
        best = Some(match best {
            None => k,
            Some(b) => {
                let (xb, xk) = (grid.xi(b), grid.xi(k));
                if xk.abs() < xb.abs() || (xk.abs() == xb.abs() && xk < xb) {
                    k
                } else {
                    b
                }
            }
        });
    }
    let index = best.unwrap_or(0);
    let a0 = a[index];
    Ok(Xi0Selection {
        xi0: grid.xi(index),
        index,
        a0,
        lower_bound_ok: a0 >= epsilon * epsilon / 5.0,
        fhat_ratio: state.spectrum().sup_norm() / epsilon,
    })
}

/// `A`, `B`, `D = A - B` and `‖R‖_∞` along a trajectory from the reference time on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub xi0: f64,
    pub xi0_index: usize,
    pub ode: OdeParams,
    /// True when the run used the model `λ = (0, 0, 0, i)` the comparison is derived for.
    pub model: bool,
    pub times: Vec<f64>,
    pub a_series: Vec<f64>,
    /// `None` past the horizon.
    pub b_series: Vec<Option<f64>>,
    pub d_series: Vec<Option<f64>>,
    /// `None` where `R` cannot be evaluated (profile outside the box).
    pub r_series: Vec<Option<f64>>,
    pub fhat_sup_series: Vec<f64>,
    /// First time with `‖f̂‖²_∞ ≥ K`, log-interpolated between checkpoints.
    pub crossing_time: Option<f64>,
    pub termination: Termination,
}

impl GrowthReport {
    /// CSV with columns `t,A,B,D,R_Linf,fhat_Linf`; missing values are empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,A,B,D,R_Linf,fhat_Linf\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        for i in 0..self.times.len() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{},{},{},{:.16e}",
                self.times[i],
                self.a_series[i],
                opt(self.b_series[i]),
                opt(self.d_series[i]),
                opt(self.r_series[i]),
                self.fhat_sup_series[i]
            );
        }
        out
    }

    /// Ratio `A/B` at every sample where `B` exists.
    pub fn ratios(&self) -> Vec<(f64, f64)> {
        self.times
            .iter()
            .zip(&self.a_series)
            .zip(&self.b_series)
            .filter_map(|((&t, &a), b)| b.map(|b| (t, a / b)))
            .collect()
    }
}

fn retained_states(trajectory: &Trajectory) -> Result<Vec<&WaveState>> {
    trajectory
        .checkpoints
        .iter()
        .map(|c| c.state.as_ref())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| NlsError::InsufficientData("trajectory has no retained states".into()))
}

/// Builds the growth report. `t_ref` is the reference time (first checkpoint
/// at or after it is used); `k = None` selects `K = 4·A₀`.
pub fn track_growth(
    trajectory: &Trajectory,
    params: &NlsParams,
    t_ref: f64,
    epsilon: f64,
    k: Option<f64>,
) -> Result<GrowthReport> {
    let states = retained_states(trajectory)?;
    let start = states
        .iter()
        .position(|s| s.t() >= t_ref * (1.0 - 1e-12))
        .ok_or_else(|| NlsError::InsufficientData(format!("no checkpoint after t = {t_ref}")))?;
    let states = &states[start..];
    let sel = select_xi0(states[0], epsilon)?;
    let t_start = states[0].t();
    let ode = match k {
        Some(k) => OdeParams::new(sel.a0, t_start, k)?,
        None => OdeParams::with_default_k(sel.a0, t_start)?,
    };
    let model = *params == NlsParams::gauge(Complex64::new(0.0, 1.0));
    let mut report = GrowthReport {
        xi0: sel.xi0,
        xi0_index: sel.index,
        ode,
        model,
        times: Vec::with_capacity(states.len()),
        a_series: Vec::with_capacity(states.len()),
        b_series: Vec::with_capacity(states.len()),
        d_series: Vec::with_capacity(states.len()),
        r_series: Vec::with_capacity(states.len()),
        fhat_sup_series: Vec::with_capacity(states.len()),
        crossing_time: None,
        termination: trajectory.termination,
    };
    for s in states {
        let t = s.t();
        let a = 2.0 * s.profile_spectrum().samples()[sel.index].norm_sqr();
        let b = b_eval(t, &ode).ok();
        let r = match remainder_r(s) {
            Ok(r) => Some(r.iter().fold(0.0f64, |m, v| m.max(v.abs()))),
            Err(NlsError::DomainEscape { .. }) => None,
            Err(e) => return Err(e),
        };
        report.times.push(t);
        report.a_series.push(a);
        report.b_series.push(b);
        report.d_series.push(b.map(|b| a - b));
        report.r_series.push(r);
        report.fhat_sup_series.push(s.profile_spectrum().sup_norm());
    }
    report.crossing_time = crossing(&report.times, &report.fhat_sup_series, ode.k);
    Ok(report)
}

/// First time `sup² ≥ k`, interpolating `log sup²` linearly in `log t`.
fn crossing(times: &[f64], sups: &[f64], k: f64) -> Option<f64> {
    let i = sups.iter().position(|s| s * s >= k)?;
    if i == 0 {
        return Some(times[0]);
    }
    let (y0, y1) = ((sups[i - 1] * sups[i - 1]).ln(), (sups[i] * sups[i]).ln());
    let (x0, x1) = (times[i - 1].ln(), times[i].ln());
    let s = (k.ln() - y0) / (y1 - y0);
    Some((x0 + s * (x1 - x0)).exp())
}

/// Residual of `∂ₜA = t^{-1}(A² + R)` at interior checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeResidual {
    pub times: Vec<f64>,
    /// `|FD(∂ₜA) - t^{-1}(A² + R)| / (t^{-1}A² + ε_mach)` at `ξ₀`.
    pub at_xi0: Vec<f64>,
    /// Maximum over the window of the unnormalized residual divided by
    /// `t^{-1}·max_window A² + ε_mach`.
    pub window_max: Vec<f64>,
}

impl OdeResidual {
    /// Median of `at_xi0` over samples with `t` in `[lo, hi]`.
    pub fn median_at_xi0(&self, lo: f64, hi: f64) -> Option<f64> {
        let mut v: Vec<f64> = self
            .times
            .iter()
            .zip(&self.at_xi0)
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .map(|(_, r)| *r)
            .collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(|a, b| a.total_cmp(b));
        let m = v.len() / 2;
        Some(if v.len() % 2 == 1 {
            v[m]
        } else {
            0.5 * (v[m - 1] + v[m])
        })
    }
}

/// Largest admissible checkpoint spacing in `log t`.
pub const MAX_LOG_SPACING: f64 = 0.05;

/// Centered (three-point, in `log t`) differences of `A` against the
/// functional right-hand side. `xi_window` selects frequencies `|ξ| ≤ value`.
pub fn ode_residual(
    trajectory: &Trajectory,
    xi0_index: usize,
    xi_window: f64,
) -> Result<OdeResidual> {
    let states = retained_states(trajectory)?;
    if states.len() < 3 {
        return Err(NlsError::InsufficientData(
            "need at least three checkpoints".into(),
        ));
    }
    let taus: Vec<f64> = states.iter().map(|s| s.t().ln()).collect();
    if let Some(w) = taus
        .windows(2)
        .find(|w| w[1] - w[0] > MAX_LOG_SPACING * (1.0 + 1e-9))
    {
        return Err(NlsError::InsufficientData(format!(
            "checkpoint spacing {} in log t exceeds {MAX_LOG_SPACING}",
            w[1] - w[0]
        )));
    }
    let grid = *states[0].grid();
    if xi0_index >= grid.num_points() {
        return Err(NlsError::InvalidInput(format!(
            "xi0 index {xi0_index} out of range"
        )));
    }
    let window: Vec<usize> = (0..grid.num_points())
        .filter(|&k| grid.xi(k).abs() <= xi_window)
        .collect();
    let amps: Vec<Vec<f64>> = states.iter().map(|s| amplitude_a(s)).collect();
    let mut out = OdeResidual {
        times: Vec::new(),
        at_xi0: Vec::new(),
        window_max: Vec::new(),
    };
    for i in 1..states.len() - 1 {
        let t = states[i].t();
        let (h0, h1) = (taus[i] - taus[i - 1], taus[i + 1] - taus[i]);
        // derivative in τ = log t of the quadratic through three points
        let (c0, c1, c2) = (
            -h1 / (h0 * (h0 + h1)),
            (h1 - h0) / (h0 * h1),
            h0 / (h1 * (h0 + h1)),
        );
        let r = remainder_r(states[i])?;
        let resid = |k: usize| {
            let da_dtau = c0 * amps[i - 1][k] + c1 * amps[i][k] + c2 * amps[i + 1][k];
            let a = amps[i][k];
            ((da_dtau - (a * a + r[k])) / t).abs()
        };
        let a0 = amps[i][xi0_index];
        out.times.push(t);
        out.at_xi0
            .push(resid(xi0_index) / (a0 * a0 / t + f64::EPSILON));
        let amax = window.iter().map(|&k| amps[i][k]).fold(0.0f64, f64::max);
        let worst = window.iter().map(|&k| resid(k)).fold(0.0f64, f64::max);
        out.window_max
            .push(worst / (amax * amax / t + f64::EPSILON));
    }
    Ok(out)
}

/// `|D(T)|` against `(1/A₀)(T/T_s)^{2μ²} μ⁴ T_s^{-1/10} B(T)` along a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceBound {
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    /// The bound without its constant.
    pub rhs: Vec<f64>,
    /// `lhs / rhs` per time.
    pub ratio: Vec<f64>,
    /// `max ratio`, the empirical constant.
    pub c_fit: f64,
}

/// Evaluates the bound for every report time up to `t_max` (all times where
/// `B` exists when `None`). Requires `μ ≥ sup ‖f̂‖_∞` on that window.
pub fn difference_bound_check(
    report: &GrowthReport,
    mu: f64,
    t_max: Option<f64>,
) -> Result<DifferenceBound> {
    let ode = report.ode;
    let limit = t_max.unwrap_or(f64::INFINITY);
    let mut out = DifferenceBound {
        times: vec![],
        lhs: vec![],
        rhs: vec![],
        ratio: vec![],
        c_fit: 0.0,
    };
    for i in 0..report.times.len() {
        let t = report.times[i];
        if t > limit {
            break;
        }
        let (Some(b), Some(d)) = (report.b_series[i], report.d_series[i]) else {
            break;
        };
        if report.fhat_sup_series[i] > mu {
            return Err(NlsError::Hypothesis(format!(
                "mu = {mu} is below sup|f̂| = {} at t = {t}",
                report.fhat_sup_series[i]
            )));
        }
        let rhs = (1.0 / ode.a0)
            * (t / ode.t_start).powf(2.0 * mu * mu)
            * mu.powi(4)
            * ode.t_start.powf(-0.1)
            * b;
        let lhs = d.abs();
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        out.times.push(t);
        out.lhs.push(lhs);
        out.rhs.push(rhs);
        out.ratio.push(ratio);
        out.c_fit = out.c_fit.max(ratio);
    }
    if out.times.is_empty() {
        return Err(NlsError::InsufficientData(
            "no samples in the bound window".into(),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let p = OdeParams::new(1.0, 1.0, 1.0).unwrap();
        assert!((blowup_horizon(&p) - std::f64::consts::E).abs() < 1e-15);
        let p = OdeParams::new(0.05, 1.0, 0.2).unwrap();
        assert!((threshold_time(&p).unwrap().ln() - 18.75).abs() < 1e-12);
        assert!((b_eval(threshold_time(&p).unwrap(), &p).unwrap() - 0.8).abs() < 1e-12);
        assert!(matches!(
            b_eval(blowup_horizon(&p) * 1.01, &p),
            Err(NlsError::BeyondBlowup { .. })
        ));
    }

    #[test]
    fn crossing_interpolates() {
        let times = [1.0, 2.0, 4.0];
        let sups = [1.0, 2.0, 4.0];
        // sup² = t² here, so sup² = 9 at t = 3
        assert!((crossing(&times, &sups, 9.0).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(crossing(&times, &sups, 100.0), None);
    }
}
