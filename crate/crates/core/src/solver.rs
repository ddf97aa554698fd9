//! Time integration of the cubic equation on the profile spectrum.
//!
//! The unknown is `f̂(t) = e^{itξ²/2} û(t)`, which obeys
//! `∂ₜf̂ = -i e^{itξ²/2} F[N(u)]` with `N` the cubic combination of
//! [`nonlinearity_eval`]. Removing the free flow exactly leaves a non-stiff
//! ODE integrated by classical RK4 (an integrating-factor scheme), with
//! step-doubling error control.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::Fft;
use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};
use crate::spectral::{
    parity, plan, ComplexField, GridSpec, Side, WaveState, DEFAULT_TAIL_CEILING,
};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Coefficients of `λ₁ū³ + λ₂u³ + λ₃|u|²ū + λ₄|u|²u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlsParams {
    pub lambda: [Complex64; 4],
}

impl NlsParams {
    pub fn new(lambda: [Complex64; 4]) -> Result<Self> {
        if lambda.iter().any(|l| !l.is_finite()) {
            return Err(NlsError::InvalidInput("coefficients must be finite".into()));
        }
        Ok(Self { lambda })
    }

    /// The free equation.
    pub fn zero() -> Self {
        Self { lambda: [ZERO; 4] }
    }

    /// Only the gauge-invariant term `λ₄|u|²u`.
    pub fn gauge(lambda4: Complex64) -> Self {
        Self {
            lambda: [ZERO, ZERO, ZERO, lambda4],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.lambda.iter().all(|l| *l == ZERO)
    }

    /// True when `λ₁ = λ₂ = λ₃ = 0`.
    pub fn is_gauge_invariant(&self) -> bool {
        self.lambda[..3].iter().all(|l| *l == ZERO)
    }

    #[inline]
    fn apply(&self, z: Complex64) -> Complex64 {
        let [l1, l2, l3, l4] = self.lambda;
        let zb = z.conj();
        let r = z.norm_sqr();
        let mut out = ZERO;
        if l1 != ZERO {
            out += l1 * zb * zb * zb;
        }
        if l2 != ZERO {
            out += l2 * z * z * z;
        }
        if l3 != ZERO {
            out += l3 * r * zb;
        }
        if l4 != ZERO {
            out += l4 * r * z;
        }
        out
    }
}

/// Pointwise `N(u) = λ₁ū³ + λ₂u³ + λ₃|u|²ū + λ₄|u|²u`.
pub fn nonlinearity_eval(u: &ComplexField, params: &NlsParams) -> Result<ComplexField> {
    u.expect_side(Side::Physical)?;
    Ok(u.map(|z| params.apply(z)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Adaptive (or fixed-step) RK4 on the profile spectrum.
    Ifrk4,
    /// Fixed-step Strang splitting; only valid for `λ₁ = λ₂ = λ₃ = 0`.
    Strang,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub dt_initial: f64,
    pub dt_min: f64,
    /// Upper bound on a single step, if any.
    pub dt_max: Option<f64>,
    /// Target relative local error per step.
    pub tolerance: f64,
    /// When false every step has length `dt_initial` (clamped onto checkpoints).
    pub adaptive: bool,
    pub blowup_ceiling: f64,
    pub tail_ceiling: f64,
    /// Checkpoints per unit of `log t`; zero keeps only the endpoints.
    pub checkpoints_per_log_unit: f64,
    /// Observers see every `observer_stride`-th checkpoint (and the last one).
    pub observer_stride: usize,
    /// Keep full states at checkpoints; otherwise only the snapshots.
    pub retain_states: bool,
    pub integrator: Integrator,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            t_start: 1.0,
            t_end: 10.0,
            dt_initial: 1e-2,
            dt_min: 1e-14,
            dt_max: None,
            tolerance: 1e-9,
            adaptive: true,
            blowup_ceiling: 1e6,
            tail_ceiling: DEFAULT_TAIL_CEILING,
            checkpoints_per_log_unit: 32.0,
            observer_stride: 1,
            retain_states: true,
            integrator: Integrator::Ifrk4,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(NlsError::InvalidInput(m.to_string()));
        if !(self.t_start >= 1.0 && self.t_end > self.t_start && self.t_end.is_finite()) {
            return bad("need 1 <= t_start < t_end < inf");
        }
        if !(self.dt_min > 0.0 && self.dt_initial >= self.dt_min && self.dt_initial.is_finite()) {
            return bad("need 0 < dt_min <= dt_initial");
        }
        if let Some(m) = self.dt_max {
            if !(m >= self.dt_min) {
                return bad("dt_max must be at least dt_min");
            }
        }
        if !(self.tolerance > 0.0 && self.blowup_ceiling > 0.0 && self.tail_ceiling > 0.0) {
            return bad("tolerance and ceilings must be positive");
        }
        if !(self.checkpoints_per_log_unit >= 0.0 && self.checkpoints_per_log_unit.is_finite()) {
            return bad("checkpoint density must be finite and non-negative");
        }
        if self.observer_stride == 0 {
            return bad("observer stride must be at least 1");
        }
        Ok(())
    }

    /// Checkpoint times, log-uniform from `t_start` and always ending at `t_end`.
    pub fn checkpoint_times(&self) -> Vec<f64> {
        let mut times = vec![self.t_start];
        if self.checkpoints_per_log_unit > 0.0 {
            let h = 1.0 / self.checkpoints_per_log_unit;
            let span = (self.t_end / self.t_start).ln();
            let count = (span / h * (1.0 - 1e-12)).floor() as usize;
            for k in 1..=count {
                let t = self.t_start * (k as f64 * h).exp();
                if t < self.t_end * (1.0 - 1e-12) {
                    times.push(t);
                }
            }
        }
        times.push(self.t_end);
        times
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    BlowUp {
        t: f64,
    },
    DomainEscape {
        t: f64,
        fraction: f64,
    },
    StepUnderflow {
        t: f64,
        dt: f64,
    },
    /// An observer asked to stop.
    Stopped {
        t: f64,
    },
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::BlowUp { .. } => "blow-up",
            Termination::DomainEscape { .. } => "domain-escape",
            Termination::StepUnderflow { .. } => "step-underflow",
            Termination::Stopped { .. } => "stopped",
        }
    }
}

/// Cheap per-checkpoint diagnostics recorded for every run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub l2: f64,
    pub u_sup: f64,
    pub fhat_sup: f64,
    pub tail_fraction: f64,
}

impl Snapshot {
    pub fn of(state: &WaveState) -> Self {
        Self {
            t: state.t(),
            l2: state.u().l2_norm(),
            u_sup: state.u().sup_norm(),
            fhat_sup: state.profile_spectrum().sup_norm(),
            tail_fraction: state.u().tail_mass_fraction(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub snapshot: Snapshot,
    pub state: Option<WaveState>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub smallest_dt: f64,
    pub largest_dt: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub checkpoints: Vec<Checkpoint>,
    pub final_state: WaveState,
    pub termination: Termination,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.checkpoints.iter().map(|c| c.snapshot.t).collect()
    }

    /// Retained states in time order.
    pub fn states(&self) -> impl Iterator<Item = &WaveState> {
        self.checkpoints.iter().filter_map(|c| c.state.as_ref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Callback invoked on checkpoints during [`solve`].
pub trait Observer {
    fn observe(&mut self, state: &WaveState) -> Result<Control>;
}

impl<F: FnMut(&WaveState) -> Result<Control>> Observer for F {
    fn observe(&mut self, state: &WaveState) -> Result<Control> {
        self(state)
    }
}

/// Precomputed tables and FFT plans for repeated right-hand-side evaluations.
struct Kernel {
    grid: GridSpec,
    params: NlsParams,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    half_xi_sq: Vec<f64>,
    fwd_scale: Vec<f64>,
    inv_scale: Vec<f64>,
    buf: Vec<Complex64>,
    phase: Vec<Complex64>,
    phase_time: f64,
}

impl Kernel {
    fn new(grid: GridSpec, params: NlsParams) -> Self {
        let n = grid.num_points();
        let fwd = plan(n, true);
        let inv = plan(n, false);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        let cf = grid.dx() / (2.0 * PI).sqrt();
        let ci = grid.dxi() / (2.0 * PI).sqrt();
        Self {
            grid,
            params,
            fwd,
            inv,
            scratch: vec![ZERO; scratch_len],
            half_xi_sq: (0..n).map(|k| 0.5 * grid.xi(k).powi(2)).collect(),
            fwd_scale: (0..n).map(|k| cf * parity(&grid, k)).collect(),
            inv_scale: (0..n).map(|k| ci * parity(&grid, k)).collect(),
            buf: vec![ZERO; n],
            phase: vec![ZERO; n],
            phase_time: f64::NAN,
        }
    }

    /// Fills `phase` with `e^{-isξ²/2}`.
    fn set_phase(&mut self, s: f64) {
        if self.phase_time == s {
            return;
        }
        for (p, &w) in self.phase.iter_mut().zip(&self.half_xi_sq) {
            let (sin, cos) = (-s * w).sin_cos();
            *p = Complex64::new(cos, sin);
        }
        self.phase_time = s;
    }

    /// `u(s)` from `f̂(s)`, left in `buf`.
    fn physical(&mut self, s: f64, fhat: &[Complex64]) {
        self.set_phase(s);
        for k in 0..fhat.len() {
            self.buf[k] = fhat[k] * self.phase[k] * self.inv_scale[k];
        }
        self.inv
            .process_with_scratch(&mut self.buf, &mut self.scratch);
    }

    /// `out = -i e^{isξ²/2} F[N(u(s))]`.
    fn rhs(&mut self, s: f64, fhat: &[Complex64], out: &mut [Complex64]) {
        self.physical(s, fhat);
        let params = self.params;
        for z in self.buf.iter_mut() {
            *z = params.apply(*z);
        }
        self.fwd
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        for k in 0..out.len() {
            out[k] = -I * self.phase[k].conj() * self.buf[k] * self.fwd_scale[k];
        }
    }

    fn rk4(&mut self, t: f64, y: &[Complex64], h: f64, k1: Option<&[Complex64]>) -> Vec<Complex64> {
        let n = y.len();
        let mut k1v = vec![ZERO; n];
        match k1 {
            Some(k) => k1v.copy_from_slice(k),
            None => self.rhs(t, y, &mut k1v),
        }
        let mut tmp: Vec<Complex64> = (0..n).map(|i| y[i] + 0.5 * h * k1v[i]).collect();
        let mut k2 = vec![ZERO; n];
        self.rhs(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        let mut k3 = vec![ZERO; n];
        self.rhs(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        let mut k4 = vec![ZERO; n];
        self.rhs(t + h, &tmp, &mut k4);
        (0..n)
            .map(|i| y[i] + h / 6.0 * (k1v[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect()
    }

    fn state(&mut self, t: f64, fhat: Vec<Complex64>) -> WaveState {
        self.set_phase(t);
        let spectrum: Vec<Complex64> = fhat.iter().zip(&self.phase).map(|(f, p)| f * p).collect();
        self.physical(t, &fhat);
        let grid = self.grid;
        WaveState::from_parts_unchecked(
            t,
            ComplexField::new_unchecked(grid, Side::Physical, self.buf.clone()),
            ComplexField::new_unchecked(grid, Side::Spectral, spectrum),
            ComplexField::new_unchecked(grid, Side::Spectral, fhat),
        )
    }

    /// One Strang step `N(h/2) L(h) N(h/2)` acting on `u`.
    fn strang(&mut self, u: &[Complex64], h: f64) -> Option<Vec<Complex64>> {
        let lambda = self.params.lambda[3];
        let mut v = u.to_vec();
        if !exact_gauge_flow(&mut v, lambda, 0.5 * h) {
            return None;
        }
        self.fwd.process_with_scratch(&mut v, &mut self.scratch);
        for k in 0..v.len() {
            let (sin, cos) = (-h * self.half_xi_sq[k]).sin_cos();
            v[k] *= Complex64::new(cos, sin) * (self.fwd_scale[k] * self.inv_scale[k]);
        }
        self.inv.process_with_scratch(&mut v, &mut self.scratch);
        if !exact_gauge_flow(&mut v, lambda, 0.5 * h) {
            return None;
        }
        Some(v)
    }
}

/// Exact flow of `i∂ₜu = λ|u|²u` for time `h`, pointwise. Returns false when
/// the flow blows up within the step.
fn exact_gauge_flow(u: &mut [Complex64], lambda: Complex64, h: f64) -> bool {
    let (a, b) = (lambda.re, lambda.im);
    for z in u.iter_mut() {
        let r0 = z.norm_sqr();
        if b == 0.0 {
            *z *= Complex64::from_polar(1.0, -a * r0 * h);
            continue;
        }
        let q = 1.0 - 2.0 * b * r0 * h;
        if q <= 0.0 {
            return false;
        }
        let phase = a / (2.0 * b) * q.ln();
        *z *= Complex64::from_polar(q.powf(-0.5), phase);
    }
    true
}

/// One classical RK4 step of length `dt` (either sign) on the profile.
pub fn step(state: &WaveState, dt: f64, params: &NlsParams) -> Result<WaveState> {
    let t_new = state.t() + dt;
    if !(dt.is_finite() && dt != 0.0 && t_new >= 1.0) {
        return Err(NlsError::InvalidInput(format!(
            "invalid step {dt} from t = {}",
            state.t()
        )));
    }
    let mut kernel = Kernel::new(*state.grid(), *params);
    let y = kernel.rk4(state.t(), state.profile_spectrum().samples(), dt, None);
    if y.iter().any(|z| !z.is_finite()) {
        return Err(NlsError::BlowUp { t: t_new });
    }
    Ok(kernel.state(t_new, y))
}

fn relative_difference(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Integrates from `u1 = u(t_start)` to `t_end` or an earlier termination.
///
/// Configuration problems are returned as errors; physical terminations
/// (blow-up, domain escape, step underflow) end the run normally and are
/// recorded in [`Trajectory::termination`].
pub fn solve(
    u1: &ComplexField,
    params: &NlsParams,
    config: &SolveConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    config.validate()?;
    u1.expect_side(Side::Physical)?;
    if !u1.is_finite() {
        return Err(NlsError::NonFinite);
    }
    if config.integrator == Integrator::Strang && !params.is_gauge_invariant() {
        return Err(NlsError::InvalidInput(
            "Strang splitting needs lambda1 = lambda2 = lambda3 = 0".into(),
        ));
    }
    let initial = WaveState::from_physical(config.t_start, u1.clone())?;
    let tail = initial.u().tail_mass_fraction();
    if tail > config.tail_ceiling {
        return Err(NlsError::DomainEscape {
            fraction: tail,
            threshold: config.tail_ceiling,
        });
    }

    let grid = *u1.grid();
    let mut kernel = Kernel::new(grid, *params);
    let targets = config.checkpoint_times();
    let mut run = Run {
        config,
        observers,
        checkpoints: Vec::with_capacity(targets.len()),
        seen: 0,
        stopped: false,
    };
    run.record(&initial, false)?;

    let mut stats = StepStats {
        smallest_dt: f64::INFINITY,
        ..Default::default()
    };
    let mut state = initial;
    let mut dt = config.dt_initial;
    let mut err_prev = config.tolerance;
    let mut next = 1;
    let order = match config.integrator {
        Integrator::Ifrk4 => 4.0,
        Integrator::Strang => 2.0,
    };

    let termination = loop {
        if run.stopped {
            break Termination::Stopped { t: state.t() };
        }
        if next >= targets.len() {
            break Termination::Completed;
        }
        let t = state.t();
        let target = targets[next];
        if let Some(m) = config.dt_max {
            dt = dt.min(m);
        }
        let remaining = target - t;
        let lands = dt >= remaining * (1.0 - 1e-10);
        let h = if lands { remaining } else { dt };
        if !lands && h < config.dt_min {
            break Termination::StepUnderflow { t, dt: h };
        }

        let (candidate, accepted, err) = match (config.integrator, config.adaptive) {
            (Integrator::Ifrk4, true) => {
                let y = state.profile_spectrum().samples();
                let mut k1 = vec![ZERO; y.len()];
                kernel.rhs(t, y, &mut k1);
                let full = kernel.rk4(t, y, h, Some(&k1));
                let mid = kernel.rk4(t, y, 0.5 * h, Some(&k1));
                let fine = kernel.rk4(t + 0.5 * h, &mid, 0.5 * h, None);
                let err = relative_difference(&fine, &full) / 15.0;
                (Some(fine), err <= config.tolerance, err)
            }
            (Integrator::Ifrk4, false) => {
                let y = kernel.rk4(t, state.profile_spectrum().samples(), h, None);
                (Some(y), true, 0.0)
            }
            (Integrator::Strang, _) => match kernel.strang(state.u().samples(), h) {
                Some(u) => {
                    let f = WaveState::from_physical(
                        t + h,
                        ComplexField::new_unchecked(grid, Side::Physical, u),
                    );
                    match f {
                        Ok(s) => (Some(s.profile_spectrum().samples().to_vec()), true, 0.0),
                        Err(_) => (None, true, 0.0),
                    }
                }
                None => (None, true, 0.0),
            },
        };

        let Some(y) = candidate else {
            break Termination::BlowUp { t: t + h };
        };
        if y.iter().any(|z| !z.is_finite()) || !err.is_finite() {
            break Termination::BlowUp { t: t + h };
        }
        if !accepted {
            stats.rejected += 1;
            let factor = (0.9 * (config.tolerance / err).powf(1.0 / (order + 1.0))).max(0.2);
            dt = h * factor;
            if dt < config.dt_min {
                break Termination::StepUnderflow { t, dt };
            }
            continue;
        }

        let t_new = if lands { target } else { t + h };
        state = kernel.state(t_new, y);
        stats.accepted += 1;
        stats.smallest_dt = stats.smallest_dt.min(h);
        stats.largest_dt = stats.largest_dt.max(h);

        if config.adaptive && config.integrator == Integrator::Ifrk4 {
            let e = err.max(1e-6 * config.tolerance);
            let factor = 0.9
                * (config.tolerance / e).powf(0.7 / (order + 1.0))
                * (err_prev / config.tolerance).powf(0.4 / (order + 1.0));
            let proposal = h * factor.clamp(0.2, 5.0);
            dt = if lands { dt.max(proposal) } else { proposal };
            err_prev = e;
        }

        let sup = state.u().sup_norm();
        if !(sup <= config.blowup_ceiling) {
            break Termination::BlowUp { t: t_new };
        }
        let tail = state.u().tail_mass_fraction();
        if tail > config.tail_ceiling {
            break Termination::DomainEscape {
                t: t_new,
                fraction: tail,
            };
        }
        if lands {
            next += 1;
            run.record(&state, next == targets.len())?;
        }
    };

    if stats.accepted == 0 {
        stats.smallest_dt = 0.0;
    }
    Ok(Trajectory {
        checkpoints: run.checkpoints,
        final_state: state,
        termination,
        stats,
    })
}

struct Run<'a, 'b> {
    config: &'a SolveConfig,
    observers: &'a mut [&'b mut dyn Observer],
    checkpoints: Vec<Checkpoint>,
    seen: usize,
    stopped: bool,
}

impl Run<'_, '_> {
    fn record(&mut self, state: &WaveState, last: bool) -> Result<()> {
        self.checkpoints.push(Checkpoint {
            snapshot: Snapshot::of(state),
            state: self.config.retain_states.then(|| state.clone()),
        });
        if self.seen % self.config.observer_stride == 0 || last {
            for obs in self.observers.iter_mut() {
                if obs.observe(state)? == Control::Stop {
                    self.stopped = true;
                }
            }
        }
        self.seen += 1;
        Ok(())
    }
}

/// Minimum checkpoint density (per unit `log t`) for [`duhamel_residual`].
pub const MIN_QUADRATURE_DENSITY: f64 = 32.0;

/// Distance between the stored solution and the Duhamel formula
/// `f̂(t) = f̂(t₀) - i∫_{t₀}^t e^{isξ²/2} F[N(u(s))] ds`, one value per sample time.
///
/// The integral is a composite Simpson rule in `τ = log s` over every
/// `stride`-th checkpoint (Simpson 3/8 closes an odd interval count). The
/// returned values are `L²` norms, equal to `‖u(t) - Duhamel(t)‖₂` by Plancherel.
pub fn duhamel_residual(
    trajectory: &Trajectory,
    params: &NlsParams,
    sample_times: &[f64],
    stride: usize,
) -> Result<Vec<f64>> {
    if stride == 0 {
        return Err(NlsError::InvalidInput("stride must be at least 1".into()));
    }
    let states: Vec<&WaveState> = trajectory
        .checkpoints
        .iter()
        .map(|c| c.state.as_ref())
        .collect::<Option<_>>()
        .ok_or_else(|| {
            NlsError::InsufficientData("trajectory was solved without retained states".into())
        })?;
    let first = states[0];
    let grid = *first.grid();
    let mut kernel = Kernel::new(grid, *params);
    let n = grid.num_points();
    let mut integrand: Vec<Option<Vec<Complex64>>> = vec![None; states.len()];

    let mut out = Vec::with_capacity(sample_times.len());
    for &ts in sample_times {
        let m = states
            .iter()
            .position(|s| (s.t() - ts).abs() <= 1e-12 * ts)
            .ok_or_else(|| NlsError::InvalidInput(format!("t = {ts} is not a checkpoint")))?;
        if m % stride != 0 {
            return Err(NlsError::InvalidInput(format!(
                "checkpoint {m} is not on the stride-{stride} subgrid"
            )));
        }
        let intervals = m / stride;
        if intervals < 2 {
            return Err(NlsError::InsufficientData(format!(
                "need at least two quadrature intervals before t = {ts}"
            )));
        }
        let taus: Vec<f64> = (0..=intervals)
            .map(|i| states[i * stride].t().ln())
            .collect();
        let h = (taus[intervals] - taus[0]) / intervals as f64;
        if taus
            .windows(2)
            .any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1e-300))
        {
            return Err(NlsError::InsufficientData(
                "quadrature nodes are not log-uniform".into(),
            ));
        }
        if 1.0 / h < MIN_QUADRATURE_DENSITY * (1.0 - 1e-9) {
            return Err(NlsError::InsufficientData(format!(
                "{:.2} nodes per unit log t, need {MIN_QUADRATURE_DENSITY}",
                1.0 / h
            )));
        }
        let weights = composite_weights(intervals, h);
        let mut integral = vec![ZERO; n];
        for (i, w) in weights.iter().enumerate() {
            let idx = i * stride;
            if integrand[idx].is_none() {
                let s = states[idx];
                let mut g = vec![ZERO; n];
                kernel.rhs(s.t(), s.profile_spectrum().samples(), &mut g);
                for z in g.iter_mut() {
                    *z *= s.t();
                }
                integrand[idx] = Some(g);
            }
            let g = integrand[idx].as_ref().unwrap();
            for (acc, z) in integral.iter_mut().zip(g) {
                *acc += *w * z;
            }
        }
        let f0 = first.profile_spectrum().samples();
        let fm = states[m].profile_spectrum().samples();
        let sq: f64 = (0..n)
            .map(|k| (fm[k] - f0[k] - integral[k]).norm_sqr())
            .sum();
        out.push((sq * grid.dxi()).sqrt());
    }
    Ok(out)
}

/// Composite Simpson weights on `intervals + 1` equispaced nodes, closing with
/// the 3/8 rule when the interval count is odd.
fn composite_weights(intervals: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; intervals + 1];
    let simpson_end = if intervals % 2 == 0 {
        intervals
    } else {
        intervals - 3
    };
    let mut i = 0;
    while i < simpson_end {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
        i += 2;
    }
    if simpson_end < intervals {
        let c = 3.0 * h / 8.0;
        w[simpson_end] += c;
        w[simpson_end + 1] += 3.0 * c;
        w[simpson_end + 2] += 3.0 * c;
        w[simpson_end + 3] += c;
    }
    w
}
