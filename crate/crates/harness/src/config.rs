//! Scenario presets and run configuration.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nlslab::data::DataFamily;
use nlslab::diagnostics::NormSeries;
use nlslab::solver::{Integrator, NlsParams, SolveConfig};
use nlslab::spectral::GridSpec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::ini::{Entry, Ini};

/// Named coefficient vectors `(λ₁, λ₂, λ₃, λ₄)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// `(0, 0, 0, 0)`
    Free,
    /// `(0, 0, 0, 1)`: defocusing gauge-invariant cubic NLS.
    Decay,
    /// `(0, 0, 0, i)`: the norm-growth model `i|u|²u`.
    Growth,
    /// `(0, 0, 0, -i)`: damped counterpart of the growth model.
    Dissipative,
    /// `(1, 0, 0, 0)`
    NongaugeUbar3,
    /// `(0, 1, 0, 0)`
    NongaugeU3,
    /// `(1, 1, 1, 1)`
    NongaugeMixed,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Free,
        Scenario::Decay,
        Scenario::Growth,
        Scenario::Dissipative,
        Scenario::NongaugeUbar3,
        Scenario::NongaugeU3,
        Scenario::NongaugeMixed,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Free => "free",
            Scenario::Decay => "decay",
            Scenario::Growth => "growth",
            Scenario::Dissipative => "dissipative",
            Scenario::NongaugeUbar3 => "nongauge-ubar3",
            Scenario::NongaugeU3 => "nongauge-u3",
            Scenario::NongaugeMixed => "nongauge-mixed",
        }
    }

    pub fn lambda(&self) -> [Complex64; 4] {
        let (o, z, i) = (
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 1.0),
        );
        match self {
            Scenario::Free => [z, z, z, z],
            Scenario::Decay => [z, z, z, o],
            Scenario::Growth => [z, z, z, i],
            Scenario::Dissipative => [z, z, z, -i],
            Scenario::NongaugeUbar3 => [o, z, z, z],
            Scenario::NongaugeU3 => [z, o, z, z],
            Scenario::NongaugeMixed => [o, o, o, o],
        }
    }

    pub fn params(&self) -> NlsParams {
        NlsParams {
            lambda: self.lambda(),
        }
    }

    /// Scenarios whose runs also produce a growth report.
    pub fn tracks_growth(&self) -> bool {
        matches!(self, Scenario::Growth | Scenario::Dissipative)
    }

    /// Desk-scale defaults. Growth runs blow up near the ODE horizon and fit
    /// in a small box; the damped run stops at `t = 10²`; everything else runs
    /// to `t = 10³` in a box wide enough for the dispersed solution.
    pub fn default_config(&self) -> ExperimentConfig {
        let (n, l, eps, t_end) = match self {
            Scenario::Growth => (2048, 200.0, 0.5, 10.0),
            Scenario::Dissipative => (8192, 2048.0, 0.5, 100.0),
            Scenario::Free => (32768, 12288.0, 1.0, 1000.0),
            _ => (32768, 12288.0, 0.1, 1000.0),
        };
        ExperimentConfig {
            scenario: *self,
            grid: GridSpec::new(n, l).expect("preset grids are valid"),
            params: self.params(),
            solve: SolveConfig {
                t_end,
                ..SolveConfig::default()
            },
            data: DataFamily::Gaussian {
                amplitude: eps,
                width: 1.0,
            },
            diagnostics: Diagnostics::default(),
            output_dir: PathBuf::from("runs"),
            seed: 0,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown scenario {s:?}")))
    }
}

/// The preset registry in canonical order.
pub fn scenario_presets() -> Vec<(Scenario, NlsParams)> {
    Scenario::ALL.iter().map(|s| (*s, s.params())).collect()
}

/// Which solver states are written under `checkpoints/`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckpointPolicy {
    None,
    /// Initial and final state.
    Ends,
    /// Every retained checkpoint.
    All,
}

impl CheckpointPolicy {
    fn name(&self) -> &'static str {
        match self {
            CheckpointPolicy::None => "none",
            CheckpointPolicy::Ends => "ends",
            CheckpointPolicy::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Columns of `norms.csv`.
    pub norms: Vec<String>,
    /// Window of the power-law fit of `Linf` reported in the manifest.
    pub fit_window: (f64, f64),
    /// Reference time `T_s` of the growth comparison.
    pub reference_time: f64,
    /// Threshold `K`; `None` selects `4·A₀`.
    pub k: Option<f64>,
    pub checkpoints: CheckpointPolicy,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            norms: ["L2", "Linf", "fhat_Linf", "t_half_Linf", "Ju_L2", "X"]
                .map(String::from)
                .to_vec(),
            fit_window: (10.0, 1000.0),
            reference_time: 1.0,
            k: None,
            checkpoints: CheckpointPolicy::Ends,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub grid: GridSpec,
    pub params: NlsParams,
    pub solve: SolveConfig,
    pub data: DataFamily,
    pub diagnostics: Diagnostics,
    pub output_dir: PathBuf,
    /// Seed for randomized checks launched from this configuration.
    pub seed: u64,
}

const KEYS: &[(&str, &[&str])] = &[
    ("run", &["scenario", "output_dir", "seed"]),
    ("grid", &["num_points", "domain_length"]),
    ("equation", &["lambda1", "lambda2", "lambda3", "lambda4"]),
    ("data", &["family", "amplitude", "height", "width"]),
    (
        "solver",
        &[
            "t_start",
            "t_end",
            "dt_initial",
            "dt_min",
            "dt_max",
            "tolerance",
            "adaptive",
            "blowup_ceiling",
            "tail_ceiling",
            "integrator",
            "checkpoints_per_log_unit",
            "observer_stride",
        ],
    ),
    (
        "diagnostics",
        &["norms", "fit_window", "reference_time", "k", "checkpoints"],
    ),
];

struct Reader<'a> {
    ini: &'a Ini,
}

impl Reader<'_> {
    fn err(&self, e: &Entry, message: String) -> HarnessError {
        HarnessError::Parse {
            path: self.ini.source().to_string(),
            line: e.line,
            message,
        }
    }

    fn parse<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.ini.get(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|err| self.err(e, format!("{section}.{key}: {err}"))),
        }
    }

    fn list(&self, section: &str, key: &str) -> Option<(Vec<String>, &Entry)> {
        self.ini.get(section, key).map(|e| {
            let items = e
                .value
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            (items, e)
        })
    }

    fn floats(&self, section: &str, key: &str) -> Result<Option<(Vec<f64>, &Entry)>> {
        let Some((items, e)) = self.list(section, key) else {
            return Ok(None);
        };
        let parsed: std::result::Result<Vec<f64>, _> =
            items.iter().map(|s| s.parse::<f64>()).collect();
        parsed
            .map(|v| Some((v, e)))
            .map_err(|err| self.err(e, format!("{section}.{key}: {err}")))
    }
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got {s:?}")),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_ini_str(&text, &path.display().to_string())
    }

    /// Parses a configuration. `[run] scenario` selects the preset whose
    /// defaults every other key overrides.
    pub fn from_ini_str(text: &str, source: &str) -> Result<Self> {
        let ini = Ini::parse(text, source)?;
        for section in ini.sections() {
            let Some((_, allowed)) = KEYS.iter().find(|(s, _)| *s == section) else {
                return Err(HarnessError::Parse {
                    path: source.to_string(),
                    line: ini.section_line(section).unwrap_or(0),
                    message: format!("unknown section [{section}]"),
                });
            };
            for (key, e) in ini.keys(section) {
                if !allowed.contains(&key) {
                    return Err(HarnessError::Parse {
                        path: source.to_string(),
                        line: e.line,
                        message: format!("unknown key {key:?} in [{section}]"),
                    });
                }
            }
        }
        let r = Reader { ini: &ini };
        let scenario: Scenario = match ini.get("run", "scenario") {
            Some(e) => e
                .value
                .parse()
                .map_err(|err: HarnessError| r.err(e, err.to_string()))?,
            None => {
                return Err(HarnessError::Config(format!(
                    "{source}: [run] scenario is required"
                )))
            }
        };
        let mut cfg = scenario.default_config();
        if let Some(dir) = r.parse::<String>("run", "output_dir")? {
            cfg.output_dir = PathBuf::from(dir);
        }
        if let Some(seed) = r.parse("run", "seed")? {
            cfg.seed = seed;
        }

        let n = r
            .parse("grid", "num_points")?
            .unwrap_or(cfg.grid.num_points());
        let l = r
            .parse("grid", "domain_length")?
            .unwrap_or(cfg.grid.domain_length());
        cfg.grid = GridSpec::new(n, l)?;

        for (i, key) in ["lambda1", "lambda2", "lambda3", "lambda4"]
            .iter()
            .enumerate()
        {
            if let Some((v, e)) = r.floats("equation", key)? {
                cfg.params.lambda[i] = match v.as_slice() {
                    [re] => Complex64::new(*re, 0.0),
                    [re, im] => Complex64::new(*re, *im),
                    _ => return Err(r.err(e, format!("equation.{key}: expected `re` or `re, im`"))),
                };
            }
        }
        cfg.params = NlsParams::new(cfg.params.lambda)?;

        if ini.has_section("data") {
            let family = r
                .parse::<String>("data", "family")?
                .unwrap_or_else(|| "gaussian".into());
            let width = r.parse("data", "width")?.unwrap_or(1.0);
            let scale_key = |k: &str| r.parse::<f64>("data", k);
            cfg.data = match family.as_str() {
                "gaussian" => DataFamily::Gaussian {
                    amplitude: scale_key("amplitude")?.unwrap_or(cfg.data.epsilon()),
                    width,
                },
                "fourier-plateau" => DataFamily::FourierPlateau {
                    height: scale_key("height")?.unwrap_or(cfg.data.epsilon()),
                    width,
                },
                other => {
                    return Err(HarnessError::Config(format!(
                        "unknown data family {other:?}"
                    )))
                }
            };
            let stray = if family == "gaussian" {
                "height"
            } else {
                "amplitude"
            };
            if let Some(e) = ini.get("data", stray) {
                return Err(r.err(e, format!("data.{stray} does not apply to family {family}")));
            }
        }

        let s = &mut cfg.solve;
        macro_rules! set {
            ($key:literal, $field:expr) => {
                if let Some(v) = r.parse("solver", $key)? {
                    $field = v;
                }
            };
        }
        set!("t_start", s.t_start);
        set!("t_end", s.t_end);
        set!("dt_initial", s.dt_initial);
        set!("dt_min", s.dt_min);
        set!("tolerance", s.tolerance);
        set!("blowup_ceiling", s.blowup_ceiling);
        set!("tail_ceiling", s.tail_ceiling);
        set!("checkpoints_per_log_unit", s.checkpoints_per_log_unit);
        set!("observer_stride", s.observer_stride);
        if let Some(e) = ini.get("solver", "dt_max") {
            s.dt_max = match e.value.as_str() {
                "none" | "" => None,
                v => Some(
                    v.parse()
                        .map_err(|err| r.err(e, format!("solver.dt_max: {err}")))?,
                ),
            };
        }
        if let Some(e) = ini.get("solver", "adaptive") {
            s.adaptive =
                parse_bool(&e.value).map_err(|m| r.err(e, format!("solver.adaptive: {m}")))?;
        }
        if let Some(e) = ini.get("solver", "integrator") {
            s.integrator = match e.value.as_str() {
                "ifrk4" => Integrator::Ifrk4,
                "strang" => Integrator::Strang,
                v => return Err(r.err(e, format!("unknown integrator {v:?}"))),
            };
        }

        let d = &mut cfg.diagnostics;
        if let Some((names, _)) = r.list("diagnostics", "norms") {
            d.norms = names;
        }
        if let Some((v, e)) = r.floats("diagnostics", "fit_window")? {
            let [lo, hi] = v[..] else {
                return Err(r.err(e, "diagnostics.fit_window: expected `lo, hi`".into()));
            };
            d.fit_window = (lo, hi);
        }
        if let Some(t) = r.parse("diagnostics", "reference_time")? {
            d.reference_time = t;
        }
        if let Some(e) = ini.get("diagnostics", "k") {
            d.k = match e.value.as_str() {
                "auto" | "" => None,
                v => Some(
                    v.parse()
                        .map_err(|err| r.err(e, format!("diagnostics.k: {err}")))?,
                ),
            };
        }
        if let Some(e) = ini.get("diagnostics", "checkpoints") {
            d.checkpoints = match e.value.as_str() {
                "none" => CheckpointPolicy::None,
                "ends" => CheckpointPolicy::Ends,
                "all" => CheckpointPolicy::All,
                v => return Err(r.err(e, format!("unknown checkpoint policy {v:?}"))),
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that can be checked before touching the file system.
    pub fn validate(&self) -> Result<()> {
        self.solve.validate()?;
        self.data.validate()?;
        self.data.sample(self.grid)?;
        NormSeries::new(&self.diagnostics.norms)?;
        let (lo, hi) = self.diagnostics.fit_window;
        if !(lo > 0.0 && lo < hi) {
            return Err(HarnessError::Config(format!(
                "fit window ({lo}, {hi}) is not an interval in t > 0"
            )));
        }
        if !(self.diagnostics.reference_time >= self.solve.t_start
            && self.diagnostics.reference_time < self.solve.t_end)
        {
            return Err(HarnessError::Config(format!(
                "reference time {} must lie in [t_start, t_end)",
                self.diagnostics.reference_time
            )));
        }
        if let Some(k) = self.diagnostics.k {
            if !(k > 0.0 && k.is_finite()) {
                return Err(HarnessError::Config(format!(
                    "threshold k must be positive, got {k}"
                )));
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(HarnessError::Config("output_dir is empty".into()));
        }
        Ok(())
    }

    /// Data scale `ε`.
    pub fn epsilon(&self) -> f64 {
        self.data.epsilon()
    }

    pub fn with_epsilon(&self, eps: f64) -> Self {
        let mut c = self.clone();
        c.data = self.data.with_epsilon(eps);
        c
    }

    /// A complete configuration file that parses back to `self`.
    pub fn to_ini(&self) -> String {
        let mut o = String::new();
        let s = &self.solve;
        let d = &self.diagnostics;
        let _ = writeln!(
            o,
            "[run]\nscenario = {}\noutput_dir = {}\nseed = {}",
            self.scenario,
            self.output_dir.display(),
            self.seed
        );
        let _ = writeln!(
            o,
            "\n[grid]\nnum_points = {}\ndomain_length = {:?}",
            self.grid.num_points(),
            self.grid.domain_length()
        );
        let _ = writeln!(o, "\n[equation]");
        for (i, l) in self.params.lambda.iter().enumerate() {
            let _ = writeln!(o, "lambda{} = {:?}, {:?}", i + 1, l.re, l.im);
        }
        let _ = match self.data {
            DataFamily::Gaussian { amplitude, width } => {
                writeln!(
                    o,
                    "\n[data]\nfamily = gaussian\namplitude = {amplitude:?}\nwidth = {width:?}"
                )
            }
            DataFamily::FourierPlateau { height, width } => {
                writeln!(
                    o,
                    "\n[data]\nfamily = fourier-plateau\nheight = {height:?}\nwidth = {width:?}"
                )
            }
        };
        let _ = writeln!(
            o,
            "\n[solver]\nt_start = {:?}\nt_end = {:?}\ndt_initial = {:?}\ndt_min = {:?}\ndt_max = {}\ntolerance = {:?}\nadaptive = {}\nblowup_ceiling = {:?}\ntail_ceiling = {:?}\nintegrator = {}\ncheckpoints_per_log_unit = {:?}\nobserver_stride = {}",
            s.t_start,
            s.t_end,
            s.dt_initial,
            s.dt_min,
            s.dt_max.map_or("none".to_string(), |v| format!("{v:?}")),
            s.tolerance,
            s.adaptive,
            s.blowup_ceiling,
            s.tail_ceiling,
            match s.integrator {
                Integrator::Ifrk4 => "ifrk4",
                Integrator::Strang => "strang",
            },
            s.checkpoints_per_log_unit,
            s.observer_stride,
        );
        let _ = writeln!(
            o,
            "\n[diagnostics]\nnorms = {}\nfit_window = {:?}, {:?}\nreference_time = {:?}\nk = {}\ncheckpoints = {}",
            d.norms.join(", "),
            d.fit_window.0,
            d.fit_window.1,
            d.reference_time,
            d.k.map_or("auto".to_string(), |v| format!("{v:?}")),
            d.checkpoints.name(),
        );
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_cover_the_registry() {
        let presets = scenario_presets();
        assert_eq!(presets.len(), 7);
        for (s, p) in presets {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
            assert_eq!(p.lambda, s.lambda());
            s.default_config().validate().unwrap();
        }
        assert!("growthh".parse::<Scenario>().is_err());
    }
}
