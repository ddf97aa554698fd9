//! Lifespan sweeps over the data scale `ε`.

use std::sync::Mutex;
use std::thread;

use nlslab::diagnostics::{fit_lifespan, LifespanFit};
use nlslab::ode_compare::{select_xi0, track_growth};
use nlslab::solver::{solve, Control, Observer};
use nlslab::spectral::WaveState;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

/// How the crossing threshold `K` is chosen for each run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingRule {
    /// `K = m·A₀(ε)`.
    RelativeToA0(f64),
    /// The same `K` for every `ε`.
    Fixed(f64),
}

impl Default for CrossingRule {
    fn default() -> Self {
        CrossingRule::RelativeToA0(4.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub crossing_time: Option<f64>,
    /// Set when the run for this `ε` failed; other points are unaffected.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rule: CrossingRule,
    /// Sorted by `ε`.
    pub points: Vec<SweepPoint>,
    pub fit: Option<LifespanFit>,
    pub fit_error: Option<String>,
    /// Crossing times strictly decrease in `ε` over the points that crossed.
    pub strictly_decreasing: bool,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,crossing_time,error\n");
        for p in &self.points {
            let t = p
                .crossing_time
                .map(|t| format!("{t:.16e}"))
                .unwrap_or_default();
            let err = p.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            out.push_str(&format!("{:.16e},{t},{err}\n", p.epsilon));
        }
        out
    }

    /// `(ε, T)` pairs of the points that crossed.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.crossing_time.map(|t| (p.epsilon, t)))
            .collect()
    }
}

/// Integrates `cfg` until `‖f̂‖²_∞` reaches the threshold and returns the
/// log-interpolated crossing time, or `None` if the run ends first.
pub fn crossing_time(cfg: &ExperimentConfig, rule: CrossingRule) -> Result<Option<f64>> {
    cfg.validate()?;
    let u1 = cfg.data.sample(cfg.grid)?;
    let initial = WaveState::from_physical(cfg.solve.t_start, u1.clone())?;
    let k = match rule {
        CrossingRule::RelativeToA0(m) => m * select_xi0(&initial, cfg.epsilon())?.a0,
        CrossingRule::Fixed(k) => k,
    };
    let mut solve_cfg = cfg.solve.clone();
    solve_cfg.retain_states = true;
    let mut stop = |s: &WaveState| -> nlslab::Result<Control> {
        let sup = s.profile_spectrum().sup_norm();
        Ok(if sup * sup >= k {
            Control::Stop
        } else {
            Control::Continue
        })
    };
    let traj = solve(
        &u1,
        &cfg.params,
        &solve_cfg,
        &mut [&mut stop as &mut dyn Observer],
    )?;
    let report = track_growth(
        &traj,
        &cfg.params,
        cfg.solve.t_start,
        cfg.epsilon(),
        Some(k),
    )?;
    Ok(report.crossing_time)
}

/// Runs `runner` once per `ε` on up to `available_parallelism` threads.
pub fn sweep_with<F>(
    base: &ExperimentConfig,
    eps: &[f64],
    rule: CrossingRule,
    runner: F,
) -> Result<SweepReport>
where
    F: Fn(&ExperimentConfig, CrossingRule) -> Result<Option<f64>> + Sync,
{
    if eps.is_empty() {
        return Err(HarnessError::Config("empty epsilon list".into()));
    }
    if let Some(bad) = eps.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(HarnessError::Config(format!(
            "epsilon must be positive, got {bad}"
        )));
    }
    let configs: Vec<ExperimentConfig> = eps.iter().map(|&e| base.with_epsilon(e)).collect();
    for c in &configs {
        c.validate()?;
    }
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(configs.len());
    let next = Mutex::new(0usize);
    let results: Mutex<Vec<SweepPoint>> = Mutex::new(Vec::with_capacity(configs.len()));
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = {
                    let mut n = next.lock().unwrap();
                    let i = *n;
                    *n += 1;
                    i
                };
                let Some(cfg) = configs.get(i) else { break };
                let point = match runner(cfg, rule) {
                    Ok(t) => SweepPoint {
                        epsilon: cfg.epsilon(),
                        crossing_time: t,
                        error: None,
                    },
                    Err(e) => SweepPoint {
                        epsilon: cfg.epsilon(),
                        crossing_time: None,
                        error: Some(e.to_string()),
                    },
                };
                results.lock().unwrap().push(point);
            });
        }
    });
    let mut points = results.into_inner().unwrap();
    points.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));

    let crossed: Vec<f64> = points.iter().filter_map(|p| p.crossing_time).collect();
    let strictly_decreasing = crossed.windows(2).all(|w| w[1] < w[0]);
    let mut report = SweepReport {
        rule,
        points,
        fit: None,
        fit_error: None,
        strictly_decreasing,
    };
    match fit_lifespan(&report.pairs()) {
        Ok(fit) => report.fit = Some(fit),
        Err(e) => report.fit_error = Some(e.to_string()),
    }
    Ok(report)
}

/// [`sweep_with`] using [`crossing_time`].
pub fn sweep_epsilon(
    base: &ExperimentConfig,
    eps: &[f64],
    rule: CrossingRule,
) -> Result<SweepReport> {
    sweep_with(base, eps, rule, crossing_time)
}
