use std::f64::consts::E;

use nlslab::data::DataFamily;
use nlslab::diagnostics::sigma_norm;
use nlslab::ode_compare::*;
use nlslab::solver::{solve, NlsParams, SolveConfig, Termination, Trajectory};
use nlslab::spectral::{ComplexField, GridSpec, WaveState};
use nlslab::NlsError;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> GridSpec {
    GridSpec::new(512, 100.0).unwrap()
}

fn gaussian(amp: f64) -> ComplexField {
    DataFamily::Gaussian {
        amplitude: amp,
        width: 1.0,
    }
    .sample(grid())
    .unwrap()
}

fn run(params: NlsParams, eps: f64, t_end: f64, per_unit: f64) -> Trajectory {
    run_on(grid(), params, eps, t_end, per_unit)
}

fn run_on(g: GridSpec, params: NlsParams, eps: f64, t_end: f64, per_unit: f64) -> Trajectory {
    let cfg = SolveConfig {
        t_end,
        checkpoints_per_log_unit: per_unit,
        tolerance: 1e-10,
        ..SolveConfig::default()
    };
    let u1 = DataFamily::Gaussian {
        amplitude: eps,
        width: 1.0,
    }
    .sample(g)
    .unwrap();
    solve(&u1, &params, &cfg, &mut []).unwrap()
}

fn model() -> NlsParams {
    NlsParams::gauge(Complex64::new(0.0, 1.0))
}

#[test]
fn b_closed_form_identities() {
    let p = OdeParams::new(0.3, 2.0, 1.0).unwrap();
    assert_eq!(b_eval(2.0, &p).unwrap(), 0.3);
    let tk = threshold_time(&p).unwrap();
    assert!((b_eval(tk, &p).unwrap() - 4.0).abs() < 1e-12);
    let horizon = blowup_horizon(&p);
    for i in 1..100 {
        let t = 2.0 + (horizon - 2.0) * i as f64 / 100.0;
        let b = b_eval(t, &p).unwrap();
        let inv = 1.0 / 0.3 - (t / 2.0).ln();
        assert!((1.0 / b - inv).abs() <= 1e-13 * inv);
    }
    assert!(matches!(
        b_eval(horizon, &p),
        Err(NlsError::BeyondBlowup { .. })
    ));
    assert!(b_eval(1.5, &p).is_err());
}

#[test]
fn b_solves_its_ode() {
    let p = OdeParams::new(0.5, 1.0, 2.0).unwrap();
    let horizon = blowup_horizon(&p);
    for frac in [0.25, 0.5, 0.75] {
        let t = 1.0 + frac * (horizon - 1.0);
        let h = 1e-5 * t;
        let db = (b_eval(t + h, &p).unwrap() - b_eval(t - h, &p).unwrap()) / (2.0 * h);
        let b = b_eval(t, &p).unwrap();
        assert!((db / (b * b / t) - 1.0).abs() <= 1e-8, "t={t}");
    }
}

#[test]
fn horizon_and_threshold_values() {
    let p = OdeParams::new(1.0, 1.0, 1.0).unwrap();
    assert!((blowup_horizon(&p) - E).abs() < 1e-15);
    let p = OdeParams::new(0.05, 1.0, 0.2).unwrap();
    assert!((threshold_time(&p).unwrap() / 18.75f64.exp() - 1.0).abs() < 1e-12);
    assert!(matches!(
        OdeParams::new(1.0, 1.0, 0.25),
        Err(NlsError::Hypothesis(_))
    ));
    assert!(OdeParams::new(0.0, 1.0, 1.0).is_err());
    assert!(OdeParams::new(1.0, 0.5, 1.0).is_err());
}

#[test]
fn threshold_precedes_horizon() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let a0 = rng.gen_range(0.05..3.0);
        let ts = rng.gen_range(1.0..100.0);
        let k = a0 / 4.0 * rng.gen_range(1.01..50.0);
        let p = OdeParams::new(a0, ts, k).unwrap();
        let tk = threshold_time(&p).unwrap();
        assert!(ts < tk && tk < blowup_horizon(&p), "{p:?}");
    }
}

#[test]
fn gaussian_selects_zero_frequency() {
    let eps = 0.5;
    let s = WaveState::from_physical(1.0, gaussian(eps)).unwrap();
    let sel = select_xi0(&s, eps).unwrap();
    assert_eq!(sel.xi0, 0.0);
    assert!((sel.a0 / (eps * eps) - 2.0).abs() < 1e-12);
    assert!(sel.lower_bound_ok);
    assert!((sel.fhat_ratio - 1.0).abs() < 1e-12);
}

#[test]
fn sigma_normalized_gaussian_misses_the_lower_bound() {
    // With ε = ‖u₁‖_Σ instead of the amplitude, ‖û₁‖_∞/ε = 1/(π^{1/4}(1+√2)).
    let u = gaussian(1.0);
    let eps = sigma_norm(&u).unwrap();
    let s = WaveState::from_physical(1.0, u).unwrap();
    let sel = select_xi0(&s, eps).unwrap();
    assert!((sel.fhat_ratio - 0.3111).abs() < 1e-3);
    assert!((sel.a0 / (eps * eps) - 2.0 * sel.fhat_ratio.powi(2)).abs() < 1e-12);
    assert!(!sel.lower_bound_ok);
}

#[test]
fn ties_prefer_negative_frequency() {
    let g = grid();
    let xi_star = g.xi(20);
    // Two equal spectral peaks at ±ξ*.
    let u = ComplexField::from_fn_physical(g, |x| {
        Complex64::new(2.0 * (xi_star * x).cos() * (-x * x / 8.0).exp(), 0.0)
    });
    let s = WaveState::from_physical(1.0, u).unwrap();
    let a = select_xi0(&s, 1.0).unwrap();
    assert_eq!(a.xi0, -xi_star);
    assert_eq!(select_xi0(&s, 1.0).unwrap(), a);
    assert!(select_xi0(&s, 0.0).is_err());
}

#[test]
fn free_flow_lags_the_ode() {
    let traj = run(NlsParams::zero(), 0.5, 3.0, 20.0);
    let report = track_growth(&traj, &NlsParams::zero(), 1.0, 0.5, None).unwrap();
    assert!(!report.model);
    assert_eq!(report.d_series[0], Some(0.0));
    for (i, d) in report.d_series.iter().enumerate().skip(1) {
        if let Some(d) = d {
            assert!(*d < 0.0, "t={}", report.times[i]);
        }
    }
    assert_eq!(report.crossing_time, None);
    let bound = difference_bound_check(&report, 0.6, Some(1.0)).unwrap();
    assert_eq!(bound.lhs, vec![0.0]);
}

#[test]
fn model_amplitude_tracks_b_until_it_doubles() {
    let eps = 0.5;
    let traj = run(model(), eps, 3.0, 20.0);
    let report = track_growth(&traj, &model(), 1.0, eps, None).unwrap();
    assert!(report.model);
    let a0 = report.ode.a0;
    let mut checked = 0;
    for (t, ratio) in report.ratios() {
        if b_eval(t, &report.ode).unwrap() > 2.0 * a0 {
            break;
        }
        assert!((0.8..=1.25).contains(&ratio), "t={t} ratio={ratio}");
        checked += 1;
    }
    assert!(checked > 10);
    for w in report.a_series.windows(2) {
        assert!(w[1] >= 0.99 * w[0]);
    }
}

#[test]
fn defocusing_dissipation_never_crosses() {
    let params = NlsParams::gauge(Complex64::new(0.0, -1.0));
    let traj = run_on(GridSpec::new(2048, 400.0).unwrap(), params, 0.5, 20.0, 10.0);
    assert_eq!(traj.termination, Termination::Completed);
    let report = track_growth(&traj, &params, 1.0, 0.5, None).unwrap();
    for w in report.a_series.windows(2) {
        assert!(w[1] <= 1.01 * w[0]);
    }
    assert_eq!(report.crossing_time, None);
}

#[test]
fn residual_of_the_model_is_small() {
    let eps = 0.5;
    let traj = run(model(), eps, 2.2, 40.0);
    let report = track_growth(&traj, &model(), 1.0, eps, None).unwrap();
    let res = ode_residual(&traj, report.xi0_index, 2.0).unwrap();
    assert_eq!(res.times.len(), traj.checkpoints.len() - 2);
    assert!(res.median_at_xi0(1.0, 2.0).unwrap() <= 0.1);
    assert!(res.window_max.iter().all(|v| v.is_finite()));
}

#[test]
fn residual_converges_at_second_order() {
    let eps = 0.5;
    let median = |per_unit: f64| {
        let traj = run(model(), eps, 2.0, per_unit);
        let report = track_growth(&traj, &model(), 1.0, eps, None).unwrap();
        ode_residual(&traj, report.xi0_index, 1.0)
            .unwrap()
            .median_at_xi0(1.0, 2.0)
            .unwrap()
    };
    let ratio = median(20.0) / median(40.0);
    assert!((3.0..=5.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn residual_rejects_coarse_checkpoints() {
    let traj = run(model(), 0.5, 2.0, 10.0);
    assert!(matches!(
        ode_residual(&traj, 0, 1.0),
        Err(NlsError::InsufficientData(_))
    ));
    let traj = run(model(), 0.5, 1.2, 40.0);
    assert!(ode_residual(&traj, 100_000, 1.0).is_err());
}

#[test]
fn difference_bound_on_model_and_synthetic_reports() {
    let eps = 0.5;
    let traj = run(model(), eps, 3.0, 20.0);
    let report = track_growth(&traj, &model(), 1.0, eps, None).unwrap();
    let mu = report.fhat_sup_series.iter().cloned().fold(0.0, f64::max);
    let bound = difference_bound_check(&report, mu, None).unwrap();
    assert_eq!(bound.lhs[0], 0.0);
    assert!(bound.c_fit.is_finite() && bound.c_fit > 0.0);
    assert!(matches!(
        difference_bound_check(&report, 0.5 * mu, None),
        Err(NlsError::Hypothesis(_))
    ));

    let mut synthetic = report.clone();
    for d in synthetic.d_series.iter_mut() {
        *d = d.map(|_| 0.0);
    }
    let zero = difference_bound_check(&synthetic, mu, None).unwrap();
    assert_eq!(zero.c_fit, 0.0);
    assert!(zero.ratio.iter().all(|&r| r == 0.0));
}

#[test]
fn growth_report_exports() {
    let traj = run(model(), 0.5, 1.5, 20.0);
    let report = track_growth(&traj, &model(), 1.0, 0.5, Some(1.0)).unwrap();
    let csv = report.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,A,B,D,R_Linf,fhat_Linf"));
    assert_eq!(lines.count(), report.times.len());
    let json = serde_json::to_string(&report).unwrap();
    let back: GrowthReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
    assert!(track_growth(&traj, &model(), 10.0, 0.5, None).is_err());
}
