//! Norms, decay functionals and fits sampled along trajectories.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};
use crate::solver::{Control, Observer};
use crate::spectral::{
    apply_j, check_tail, derivative, forward_transform, inverse_transform, modulation_m,
    modulation_m_conj, profile_of, ComplexField, Side, WaveState, DEFAULT_TAIL_CEILING,
};

/// Names accepted by [`NormSeries`], in canonical column order.
pub const NORM_REGISTRY: [&str; 11] = [
    "sigma",
    "X",
    "L2",
    "Linf",
    "fhat_Linf",
    "Ju_L2",
    "xf_L2",
    "dxi_fhat_L2",
    "t_half_Linf",
    "A_at_xi0",
    "R_Linf",
];

/// `‖u‖₂ + ‖∂ₓu‖₂ + ‖xu‖₂` of a physical-side field.
pub fn sigma_norm(field: &ComplexField) -> Result<f64> {
    field.expect_side(Side::Physical)?;
    check_tail(field, DEFAULT_TAIL_CEILING)?;
    let du = derivative(field).l2_norm();
    let xu = field.map_with_coordinate(|x, z| x * z).l2_norm();
    Ok(field.l2_norm() + du + xu)
}

/// `X(t) = ½[‖f̂(t)‖_∞ + t^{-1/4}‖J(t)u(t)‖₂]`.
pub fn x_norm(state: &WaveState) -> Result<f64> {
    let ju = apply_j(state)?.l2_norm();
    Ok(0.5 * (state.profile_spectrum().sup_norm() + state.t().powf(-0.25) * ju))
}

/// The five decay functionals of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayQuantities {
    pub fhat_sup: f64,
    /// `t^{1/2}‖u‖_∞`
    pub t_half_sup: f64,
    /// `t^{-1/4}‖Ju‖₂`
    pub t_quarter_ju: f64,
    /// `t^{-1/10}‖Ju‖₂`
    pub t_tenth_ju: f64,
    /// `t^{-1/10}‖u‖₂`
    pub t_tenth_l2: f64,
}

pub fn decay_quantities(state: &WaveState) -> Result<DecayQuantities> {
    let t = state.t();
    let ju = apply_j(state)?.l2_norm();
    Ok(DecayQuantities {
        fhat_sup: state.profile_spectrum().sup_norm(),
        t_half_sup: t.sqrt() * state.u().sup_norm(),
        t_quarter_ju: t.powf(-0.25) * ju,
        t_tenth_ju: t.powf(-0.1) * ju,
        t_tenth_l2: t.powf(-0.1) * state.u().l2_norm(),
    })
}

/// `A(t, ξ) = 2|f̂(t, ξ)|²` on the frequency grid (FFT order).
pub fn amplitude_a(state: &WaveState) -> Vec<f64> {
    state
        .profile_spectrum()
        .samples()
        .iter()
        .map(|z| 2.0 * z.norm_sqr())
        .collect()
}

/// The remainder `R` in `∂ₜA = t^{-1}(A² + R)` for the model `λ₄ = i`:
///
/// `R = 4 Re{ conj(f̂)·[F M̄ F^{-1}(|FMf|²FMf) - |f̂|²f̂] }`,
///
/// evaluated on the frequency grid without any dilation.
pub fn remainder_r(state: &WaveState) -> Result<Vec<f64>> {
    let t = state.t();
    let f = profile_of(state);
    check_tail(&f, DEFAULT_TAIL_CEILING)?;
    let g = forward_transform(&modulation_m(t, &f)?)?;
    let cubic = g.map(|z| z.norm_sqr() * z);
    let back = inverse_transform(&cubic)?;
    let projected = forward_transform(&modulation_m_conj(t, &back)?)?;
    let fhat = state.profile_spectrum().samples();
    Ok(fhat
        .iter()
        .zip(projected.samples())
        .map(|(&fh, &p)| 4.0 * (fh.conj() * (p - fh.norm_sqr() * fh)).re)
        .collect())
}

/// Time series of named norms, one row per sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSeries {
    names: Vec<String>,
    times: Vec<f64>,
    columns: Vec<Vec<f64>>,
}

impl NormSeries {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut owned = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            if !NORM_REGISTRY.contains(&n) {
                return Err(NlsError::InvalidInput(format!("unknown norm name {n:?}")));
            }
            if owned.iter().any(|o: &String| o == n) {
                return Err(NlsError::InvalidInput(format!("duplicate norm name {n:?}")));
            }
            owned.push(n.to_string());
        }
        let columns = vec![Vec::new(); owned.len()];
        Ok(Self {
            names: owned,
            times: Vec::new(),
            columns,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    /// Appends a row; `values` follows the column order of [`names`](Self::names).
    pub fn push(&mut self, t: f64, values: &[f64]) -> Result<()> {
        if values.len() != self.names.len() {
            return Err(NlsError::InvalidInput(format!(
                "expected {} values, got {}",
                self.names.len(),
                values.len()
            )));
        }
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(NlsError::InvalidInput(format!(
                    "time {t} does not exceed {last}"
                )));
            }
        }
        if !t.is_finite() || values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(NlsError::InvalidInput(format!(
                "non-finite or negative value at t = {t}"
            )));
        }
        self.times.push(t);
        for (c, &v) in self.columns.iter_mut().zip(values) {
            c.push(v);
        }
        Ok(())
    }

    /// Header `t,<names...>` then one row per time, 17 significant digits, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t:.16e}");
            for c in &self.columns {
                let _ = write!(out, ",{:.16e}", c[i]);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| NlsError::InvalidInput("empty CSV".into()))?;
        let mut cols = header.split(',');
        if cols.next() != Some("t") {
            return Err(NlsError::InvalidInput("first column must be t".into()));
        }
        let names: Vec<&str> = cols.collect();
        let mut series = Self::new(&names)?;
        for (row, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                line.split(',').map(str::parse::<f64>).collect();
            let parsed =
                parsed.map_err(|e| NlsError::InvalidInput(format!("row {}: {e}", row + 2)))?;
            if parsed.len() != names.len() + 1 {
                return Err(NlsError::InvalidInput(format!(
                    "row {} has wrong width",
                    row + 2
                )));
            }
            series.push(parsed[0], &parsed[1..])?;
        }
        Ok(series)
    }

    /// Power-law fit of one column over `window`.
    pub fn fit(&self, name: &str, window: (f64, f64)) -> Result<DecayFit> {
        let values = self
            .get(name)
            .ok_or_else(|| NlsError::InvalidInput(format!("no column {name:?}")))?;
        fit_power_law(&self.times, values, window)
    }
}

/// Computes registered norms at each observed state.
pub struct NormObserver {
    series: NormSeries,
    xi0_index: Option<usize>,
}

impl NormObserver {
    /// `A_at_xi0` uses the frequency maximizing `A` at the first observation.
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        Ok(Self {
            series: NormSeries::new(names)?,
            xi0_index: None,
        })
    }

    pub fn with_xi0_index(mut self, index: usize) -> Self {
        self.xi0_index = Some(index);
        self
    }

    pub fn series(&self) -> &NormSeries {
        &self.series
    }

    pub fn into_series(self) -> NormSeries {
        self.series
    }

    fn evaluate(&mut self, state: &WaveState) -> Result<Vec<f64>> {
        let t = state.t();
        let mut ju = None;
        let mut ju_norm = |state: &WaveState| -> Result<f64> {
            if ju.is_none() {
                ju = Some(apply_j(state)?.l2_norm());
            }
            Ok(ju.unwrap())
        };
        let mut out = Vec::with_capacity(self.series.names.len());
        for name in self.series.names.clone() {
            let v = match name.as_str() {
                "sigma" => sigma_norm(state.u())?,
                "X" => {
                    0.5 * (state.profile_spectrum().sup_norm() + t.powf(-0.25) * ju_norm(state)?)
                }
                "L2" => state.u().l2_norm(),
                "Linf" => state.u().sup_norm(),
                "fhat_Linf" => state.profile_spectrum().sup_norm(),
                "Ju_L2" => ju_norm(state)?,
                "xf_L2" => profile_of(state)
                    .map_with_coordinate(|x, z| x * z)
                    .l2_norm(),
                "dxi_fhat_L2" => {
                    crate::spectral::xi_derivative(state.profile_spectrum())?.l2_norm()
                }
                "t_half_Linf" => t.sqrt() * state.u().sup_norm(),
                "A_at_xi0" => {
                    let a = amplitude_a(state);
                    let idx = *self.xi0_index.get_or_insert_with(|| argmax(&a));
                    a[idx]
                }
                "R_Linf" => remainder_r(state)?
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs())),
                _ => unreachable!("names are validated"),
            };
            out.push(v);
        }
        Ok(out)
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl Observer for NormObserver {
    fn observe(&mut self, state: &WaveState) -> Result<Control> {
        let row = self.evaluate(state)?;
        self.series.push(state.t(), &row)?;
        Ok(Control::Continue)
    }
}

/// Least-squares line through `(log t, log value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Minimum number of samples inside a fit window.
pub const MIN_FIT_SAMPLES: usize = 10;

pub fn fit_power_law(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(NlsError::InvalidInput(
            "times and values differ in length".into(),
        ));
    }
    if !(window.0 > 0.0 && window.0 < window.1) {
        return Err(NlsError::InvalidInput(format!("bad window {window:?}")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t >= window.0 && t <= window.1 {
            if !(v > 0.0 && v.is_finite()) {
                return Err(NlsError::InvalidInput(format!(
                    "non-positive value {v} at t = {t}"
                )));
            }
            xs.push(t.ln());
            ys.push(v.ln());
        }
    }
    if xs.len() < MIN_FIT_SAMPLES {
        return Err(NlsError::InsufficientData(format!(
            "{} samples in window, need {MIN_FIT_SAMPLES}",
            xs.len()
        )));
    }
    let line = least_squares(&xs, &ys)?;
    Ok(DecayFit {
        slope: line.slope,
        intercept: line.intercept,
        residual_rms: line.residual_rms,
        window,
        samples: xs.len(),
    })
}

struct Line {
    slope: f64,
    intercept: f64,
    residual_rms: f64,
    r2: f64,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> Result<Line> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 1e-12 * n * (1.0 + mx * mx)) {
        return Err(NlsError::DegenerateFit("abscissae have no spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(Line {
        slope,
        intercept,
        residual_rms: (ss_res / n).sqrt(),
        r2,
    })
}

/// Fit of `log T = (1/c)·ε^{-2} + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifespanFit {
    /// `1/c`
    pub slope: f64,
    pub intercept: f64,
    pub c_fit: f64,
    pub r2: f64,
}

pub fn fit_lifespan(pairs: &[(f64, f64)]) -> Result<LifespanFit> {
    if pairs.len() < 4 {
        return Err(NlsError::InsufficientData(format!(
            "{} pairs, need 4",
            pairs.len()
        )));
    }
    let mut xs = Vec::with_capacity(pairs.len());
    let mut ys = Vec::with_capacity(pairs.len());
    for &(eps, t) in pairs {
        if !(eps > 0.0 && t > 1.0 && t.is_finite()) {
            return Err(NlsError::InvalidInput(format!("invalid pair ({eps}, {t})")));
        }
        xs.push(eps.powi(-2));
        ys.push(t.ln());
    }
    let line = least_squares(&xs, &ys)?;
    Ok(LifespanFit {
        slope: line.slope,
        intercept: line.intercept,
        c_fit: 1.0 / line.slope,
        r2: line.r2,
    })
}
