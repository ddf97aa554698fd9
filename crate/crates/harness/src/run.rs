//! Single runs: integrate, diagnose, write a run directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::Utc;
use nlslab::diagnostics::{DecayFit, NormObserver, NormSeries};
use nlslab::ode_compare::{select_xi0, track_growth, GrowthReport, Xi0Selection};
use nlslab::solver::{solve, NlsParams, Observer, StepStats, Termination, Trajectory};
use nlslab::spectral::{ComplexField, GridSpec, Side, WaveState};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{CheckpointPolicy, ExperimentConfig};
use crate::error::{HarnessError, Result};

pub const MANIFEST_VERSION: u32 = 1;
pub const CHECKPOINT_FORMAT: &str = "nlslab-checkpoint";

/// Growth-theorem hypotheses evaluated on the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub epsilon: f64,
    /// `‖û₁‖_∞ / ε`
    pub fhat_ratio: f64,
    /// `‖û₁‖_∞ ≥ ε/2`
    pub asmp_u1_ok: bool,
    pub xi0: f64,
    pub a0: f64,
    /// `A₀ ≥ ε²/5`
    pub pw_lb_ok: bool,
}

impl Hypotheses {
    pub fn evaluate(initial: &WaveState, epsilon: f64) -> Result<Self> {
        let sel: Xi0Selection = select_xi0(initial, epsilon)?;
        Ok(Self {
            epsilon,
            fhat_ratio: sel.fhat_ratio,
            asmp_u1_ok: sel.fhat_ratio >= 0.5,
            xi0: sel.xi0,
            a0: sel.a0,
            pw_lb_ok: sel.lower_bound_ok,
        })
    }
}

/// A state as stored under `checkpoints/`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub format: String,
    pub version: u32,
    pub t: f64,
    pub grid: GridSpec,
    pub params: NlsParams,
    pub side: Side,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl CheckpointFile {
    /// Stores the physical-side field of `state`.
    pub fn of(state: &WaveState, params: &NlsParams) -> Self {
        let u = state.u();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: MANIFEST_VERSION,
            t: state.t(),
            grid: *state.grid(),
            params: *params,
            side: Side::Physical,
            re: u.samples().iter().map(|z| z.re).collect(),
            im: u.samples().iter().map(|z| z.im).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let file: Self = serde_json::from_str(&text).map_err(|e| {
            HarnessError::Config(format!("{}: not a checkpoint: {e}", path.display()))
        })?;
        if file.format != CHECKPOINT_FORMAT {
            return Err(HarnessError::Config(format!(
                "{}: unexpected format {:?}",
                path.display(),
                file.format
            )));
        }
        Ok(file)
    }

    pub fn to_state(&self) -> Result<WaveState> {
        if self.re.len() != self.im.len() {
            return Err(HarnessError::Config(
                "checkpoint re/im lengths differ".into(),
            ));
        }
        let grid = GridSpec::new(self.grid.num_points(), self.grid.domain_length())?;
        let samples = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect();
        let field = ComplexField::new(grid, self.side, samples)?;
        Ok(match self.side {
            Side::Physical => WaveState::from_physical(self.t, field)?,
            Side::Spectral => {
                WaveState::from_physical(self.t, nlslab::spectral::inverse_transform(&field)?)?
            }
        })
    }
}

/// Everything a run produces, before anything is written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub norms: NormSeries,
    pub growth: Option<GrowthReport>,
    pub hypotheses: Hypotheses,
    pub initial: WaveState,
    pub wall_seconds: f64,
}

/// Integrates `cfg` in memory.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let u1 = cfg.data.sample(cfg.grid)?;
    let initial = WaveState::from_physical(cfg.solve.t_start, u1.clone())?;
    let hypotheses = Hypotheses::evaluate(&initial, cfg.epsilon())?;
    let mut solve_cfg = cfg.solve.clone();
    solve_cfg.retain_states |=
        cfg.scenario.tracks_growth() || cfg.diagnostics.checkpoints == CheckpointPolicy::All;

    let xi0_index = select_xi0(&initial, cfg.epsilon())?.index;
    let mut observer = NormObserver::new(&cfg.diagnostics.norms)?.with_xi0_index(xi0_index);
    let clock = Instant::now();
    let trajectory = solve(
        &u1,
        &cfg.params,
        &solve_cfg,
        &mut [&mut observer as &mut dyn Observer],
    )?;
    let wall_seconds = clock.elapsed().as_secs_f64();

    let growth = if cfg.scenario.tracks_growth() {
        Some(track_growth(
            &trajectory,
            &cfg.params,
            cfg.diagnostics.reference_time,
            cfg.epsilon(),
            cfg.diagnostics.k,
        )?)
    } else {
        None
    };
    Ok(RunOutcome {
        trajectory,
        norms: observer.into_series(),
        growth,
        hypotheses,
        initial,
        wall_seconds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingInfo {
    pub wall_seconds: f64,
    pub steps: StepStats,
    pub checkpoints: usize,
    pub final_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSummary {
    pub xi0: f64,
    pub a0: f64,
    pub k: f64,
    pub crossing_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub version: u32,
    pub created: String,
    /// The configuration, as a file that reproduces the run.
    pub config: String,
    pub grid: GridSpec,
    pub params: NlsParams,
    pub data: String,
    pub timing: TimingInfo,
    pub termination: Termination,
    pub hypotheses: Hypotheses,
    /// Power law fitted to `Linf` over the configured window.
    pub decay_fit: Option<DecayFit>,
    pub decay_fit_error: Option<String>,
    pub growth: Option<GrowthSummary>,
    /// Files in the run directory, relative to it.
    pub files: Vec<String>,
}

/// A written run directory.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub outcome: RunOutcome,
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| HarnessError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("plain data serializes");
    out.push(b'\n');
    out
}

/// Creates `<root>/<stamp>`, appending `-1`, `-2`, ... if the name is taken.
fn fresh_dir(root: &Path, stamp: &str) -> Result<PathBuf> {
    fs::create_dir_all(root).map_err(|e| HarnessError::io(root, e))?;
    for attempt in 0.. {
        let name = if attempt == 0 {
            stamp.to_string()
        } else {
            format!("{stamp}-{attempt}")
        };
        let dir = root.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(HarnessError::io(&dir, e)),
        }
    }
    unreachable!()
}

/// Runs `cfg` and writes `<output_dir>/<scenario>/<timestamp>/`.
///
/// Early terminations still produce a complete directory; the manifest
/// records the reason.
pub fn run_single(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let outcome = execute(cfg)?;
    let now = Utc::now();
    let dir = fresh_dir(
        &cfg.output_dir.join(cfg.scenario.name()),
        &now.format("%Y%m%dT%H%M%S%.3fZ").to_string(),
    )?;
    let mut files = Vec::new();
    let mut put = |rel: &str, bytes: &[u8]| -> Result<()> {
        write_atomic(&dir.join(rel), bytes)?;
        files.push(rel.to_string());
        Ok(())
    };

    put("norms.csv", outcome.norms.to_csv().as_bytes())?;
    if let Some(report) = &outcome.growth {
        put("growth.csv", report.to_csv().as_bytes())?;
        put("growth.json", &to_json(report))?;
    }
    let states: Vec<(String, &WaveState)> = match cfg.diagnostics.checkpoints {
        CheckpointPolicy::None => vec![],
        CheckpointPolicy::Ends => vec![
            ("initial".into(), &outcome.initial),
            ("final".into(), &outcome.trajectory.final_state),
        ],
        CheckpointPolicy::All => outcome
            .trajectory
            .states()
            .enumerate()
            .map(|(i, s)| (format!("{i:05}"), s))
            .collect(),
    };
    if !states.is_empty() {
        let sub = dir.join("checkpoints");
        fs::create_dir(&sub).map_err(|e| HarnessError::io(&sub, e))?;
        for (name, state) in states {
            put(
                &format!("checkpoints/{name}.json"),
                &to_json(&CheckpointFile::of(state, &cfg.params)),
            )?;
        }
    }

    let (decay_fit, decay_fit_error) = match outcome.norms.fit("Linf", cfg.diagnostics.fit_window) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let growth = outcome.growth.as_ref().map(|r| GrowthSummary {
        xi0: r.xi0,
        a0: r.ode.a0,
        k: r.ode.k,
        crossing_time: r.crossing_time,
    });
    files.push("manifest.json".into());
    let traj = &outcome.trajectory;
    let manifest = Manifest {
        scenario: cfg.scenario.name().into(),
        version: MANIFEST_VERSION,
        created: now.to_rfc3339(),
        config: cfg.to_ini(),
        grid: cfg.grid,
        params: cfg.params,
        data: cfg.data.to_string(),
        timing: TimingInfo {
            wall_seconds: outcome.wall_seconds,
            steps: traj.stats,
            checkpoints: traj.checkpoints.len(),
            final_time: traj.final_state.t(),
        },
        termination: traj.termination,
        hypotheses: outcome.hypotheses,
        decay_fit,
        decay_fit_error,
        growth,
        files,
    };
    write_atomic(&dir.join("manifest.json"), &to_json(&manifest))?;
    Ok(RunRecord {
        dir,
        manifest,
        outcome,
    })
}

/// Reads a run directory's manifest.
pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}
