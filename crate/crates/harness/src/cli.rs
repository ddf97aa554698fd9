//! The `nlslab` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use nlslab::diagnostics::NormSeries;
use nlslab::ode_compare::{b_eval, difference_bound_check, GrowthReport};
use nlslab::resonance::{
    estimate_sweep, resonant_set_scan, shrinkage_study, trilinear_apply_bruteforce,
    trilinear_apply_fast, Estimate, EstimateConfig, PhaseKind, Symbol, TripleLattice,
    ESTIMATE_BANDS,
};
use nlslab::solver::Termination;
use nlslab::spectral::{ComplexField, GridSpec};
use num_complex::Complex64;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::run::{run_single, write_atomic};
use crate::sweep::{sweep_epsilon, CrossingRule};

#[derive(Debug, Parser)]
#[command(
    name = "nlslab",
    version,
    about = "Pseudospectral lab for cubic NLS with non-gauge-invariant terms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one configuration and write a run directory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `[run] output_dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Crossing times over a list of data scales.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated values of ε.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        /// Fixed threshold K; default is K = 4·A₀ per run.
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Near-resonant set scan of a phase; prints the shrinkage table.
    Resonance {
        #[arg(long)]
        phase: String,
        #[arg(long, default_value_t = 4.0)]
        extent: f64,
        /// Lattice points per axis.
        #[arg(long, default_value_t = 41)]
        n: usize,
        /// Tolerances used for both the phase and its gradient.
        #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25,0.125")]
        levels: Vec<f64>,
        /// Writes the points of the tightest level here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Numerical checks of the trilinear machinery.
    Trilinear {
        /// `fast` (separable path against brute force) or an estimate name.
        #[arg(long)]
        check: String,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
    /// Summarizes the growth comparison of a run directory.
    OdeCompare {
        #[arg(long)]
        run: PathBuf,
    },
    /// Power-law fits of every column of a run's `norms.csv`.
    Norms {
        #[arg(long)]
        run: PathBuf,
        /// `lo,hi`; defaults to the whole series.
        #[arg(long, value_delimiter = ',')]
        window: Option<Vec<f64>>,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| HarnessError::io("<stdout>", e))
}

fn load_config(path: &Path, output_dir: Option<PathBuf>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    Ok(cfg)
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Simulate { config, output_dir } => {
            let cfg = load_config(&config, output_dir)?;
            let record = run_single(&cfg)?;
            emit(out, &format!("{}\n", record.dir.display()))?;
            let term = record.manifest.termination;
            if term != Termination::Completed {
                let e = HarnessError::Terminated(format!(
                    "{term:?}; outputs in {}",
                    record.dir.display()
                ));
                emit(out, &format!("{e}\n"))?;
                return Ok(e.exit_code());
            }
            Ok(0)
        }
        Command::Sweep {
            config,
            eps,
            k,
            output_dir,
        } => {
            let cfg = load_config(&config, output_dir)?;
            let rule = k.map_or(CrossingRule::default(), CrossingRule::Fixed);
            let report = sweep_epsilon(&cfg, &eps, rule)?;
            let root = cfg.output_dir.join(format!("sweep-{}", cfg.scenario));
            fs::create_dir_all(&root).map_err(|e| HarnessError::io(&root, e))?;
            let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
            let csv = report.to_csv();
            write_atomic(&root.join(format!("{stamp}.csv")), csv.as_bytes())?;
            let json = serde_json::to_string_pretty(&report).expect("plain data serializes");
            write_atomic(&root.join(format!("{stamp}.json")), json.as_bytes())?;
            emit(out, &csv)?;
            match &report.fit {
                Some(fit) => emit(
                    out,
                    &format!("# c_fit = {:.6}, r2 = {:.6}\n", fit.c_fit, fit.r2),
                )?,
                None => emit(
                    out,
                    &format!("# no fit: {}\n", report.fit_error.as_deref().unwrap_or("")),
                )?,
            }
            Ok(0)
        }
        Command::Resonance {
            phase,
            extent,
            n,
            levels,
            out: path,
        } => {
            let kind: PhaseKind = phase.parse()?;
            let lattice = TripleLattice::new(extent, n)?;
            let pairs: Vec<(f64, f64)> = levels.iter().map(|&l| (l, l)).collect();
            let study = shrinkage_study(kind, &lattice, &pairs)?;
            let mut text = String::from("tol_phase,tol_grad,count,max_radius\n");
            for row in &study {
                text.push_str(&format!(
                    "{},{},{},{:.6e}\n",
                    row.tol_phase, row.tol_grad, row.count, row.max_radius
                ));
            }
            emit(out, &text)?;
            if let Some(path) = path {
                let tightest = levels.iter().cloned().fold(f64::INFINITY, f64::min);
                let set = resonant_set_scan(kind, &lattice, tightest, tightest)?;
                let mut buf = Vec::new();
                set.write_csv(&mut buf)
                    .map_err(|e| HarnessError::io(&path, e))?;
                write_atomic(&path, &buf)?;
            }
            Ok(0)
        }
        Command::Trilinear {
            check,
            trials,
            seed,
        } => {
            if check == "fast" {
                let worst = fast_path_check(trials, seed)?;
                emit(
                    out,
                    &format!("fast-vs-brute max relative difference {worst:.3e}\n"),
                )?;
                return Ok(if worst <= 1e-10 { 0 } else { 2 });
            }
            let which: Estimate = check.parse()?;
            let cfg = EstimateConfig {
                trials,
                seed,
                ..EstimateConfig::default()
            };
            let sweep = estimate_sweep(which, &ESTIMATE_BANDS, &cfg)?;
            let mut text = String::from("band,constant,median_ratio,trials_used,skipped\n");
            for r in &sweep.results {
                text.push_str(&format!(
                    "{},{:.6e},{:.6e},{},{}\n",
                    r.band, r.constant, r.median_ratio, r.trials_used, r.skipped
                ));
            }
            text.push_str(&format!(
                "# {which}: max deviation {:.3}, stable = {}\n",
                sweep.max_deviation, sweep.stable
            ));
            emit(out, &text)?;
            Ok(0)
        }
        Command::OdeCompare { run } => {
            let path = run.join("growth.json");
            let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
            let report: GrowthReport = serde_json::from_str(&text)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
            emit(out, &ode_summary(&report)?)?;
            Ok(0)
        }
        Command::Norms { run, window } => {
            let path = run.join("norms.csv");
            let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
            let series = NormSeries::from_csv(&text)?;
            let window = match window.as_deref() {
                Some([lo, hi]) => (*lo, *hi),
                Some(_) => return Err(HarnessError::Config("--window expects lo,hi".into())),
                None => {
                    let t = series.times();
                    (
                        t.first().copied().unwrap_or(1.0),
                        t.last().copied().unwrap_or(1.0),
                    )
                }
            };
            let mut text = String::from("name,slope,intercept,residual_rms,samples\n");
            for name in series.names() {
                match series.fit(name, window) {
                    Ok(f) => text.push_str(&format!(
                        "{name},{:.6},{:.6},{:.3e},{}\n",
                        f.slope, f.intercept, f.residual_rms, f.samples
                    )),
                    Err(e) => text.push_str(&format!("{name},,,,0 # {e}\n")),
                }
            }
            emit(out, &text)?;
            Ok(0)
        }
    }
}

fn ode_summary(report: &GrowthReport) -> Result<String> {
    let a0 = report.ode.a0;
    let mut s = format!(
        "xi0 = {}\nA0 = {:.6e}\nK = {:.6e}\ncrossing_time = {}\ntermination = {}\n",
        report.xi0,
        a0,
        report.ode.k,
        report
            .crossing_time
            .map_or("none".into(), |t| format!("{t:.6}")),
        report.termination.as_str(),
    );
    let mut worst: f64 = 0.0;
    let mut last_t = report.ode.t_start;
    for (t, ratio) in report.ratios() {
        if b_eval(t, &report.ode)? > 2.0 * a0 {
            break;
        }
        worst = worst.max((ratio - 1.0).abs());
        last_t = t;
    }
    s.push_str(&format!(
        "max |A/B - 1| until B = 2A0 (t <= {last_t:.4}) = {worst:.3e}\n"
    ));
    let mu = report.fhat_sup_series.iter().cloned().fold(0.0, f64::max);
    match difference_bound_check(report, mu, None) {
        Ok(b) => s.push_str(&format!(
            "difference bound: mu = {mu:.6}, c_fit = {:.6e}\n",
            b.c_fit
        )),
        Err(e) => s.push_str(&format!("difference bound: {e}\n")),
    }
    Ok(s)
}

/// Largest relative sup difference between the fast and brute-force trilinear
/// paths over random separable symbols and Gaussian packets on a 64-point grid.
pub fn fast_path_check(trials: usize, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let grid = GridSpec::new(64, 16.0)?;
    let mut worst: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let mut packet = || {
            let (c, w, k) = (
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(-2.0..2.0),
            );
            ComplexField::from_fn_physical(grid, move |x: f64| {
                Complex64::from_polar((-(x - c) * (x - c) / (2.0 * w * w)).exp(), k * x)
            })
        };
        let (a, b, c) = (packet(), packet(), packet());
        let (p1, p2, p3): (f64, f64, f64) = (
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..2.0),
        );
        let m = Symbol::separable(
            move |x: f64| (1.0 + x * x).powf(-0.5 * p1),
            move |x: f64| (1.0 + x * x).powf(-0.5 * p2),
            move |x: f64| (-p3 * x * x / 50.0).exp(),
        );
        let brute = trilinear_apply_bruteforce(&m, &a, &b, &c)?;
        let fast = trilinear_apply_fast(&m, &a, &b, &c)?;
        let diff = fast.sub(&brute)?.sup_norm() / brute.sup_norm().max(f64::MIN_POSITIVE);
        worst = worst.max(diff);
    }
    Ok(worst)
}
