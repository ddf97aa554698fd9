use std::f64::consts::PI;
use std::sync::Arc;

use nlslab::bump::phi;
use nlslab::resonance::*;
use nlslab::spectral::{inverse_transform, lp_project, ComplexField, GridSpec, LpBand, Side};
use nlslab::NlsError;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_triple(rng: &mut impl Rng) -> FrequencyTriple {
    // Mix generic points with near-diagonal, near-antidiagonal and axis points
    // so the transition regions of every cutoff are visited.
    let s: f64 = rng.gen_range(-5.0..5.0);
    let j: [f64; 3] = [0; 3].map(|_| s * rng.gen_range(-0.05..0.05));
    match rng.gen_range(0..5) {
        0 => FrequencyTriple::new(s + j[0], s + j[1], s + j[2]),
        1 => FrequencyTriple::new(s + j[0], s + j[1], -s + j[2]),
        2 => FrequencyTriple::new(s * 1.05 + j[0], s, s * 0.97 + j[2]),
        3 => FrequencyTriple::new(0.0, s, 0.0),
        _ => FrequencyTriple::new(
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
        ),
    }
}

#[test]
fn phases_at_origin_and_unit_triple() {
    let origin = FrequencyTriple::new(0.0, 0.0, 0.0);
    let one = FrequencyTriple::new(1.0, 1.0, 1.0);
    for kind in PhaseKind::ALL {
        assert_eq!(phase_eval(kind, &origin), 0.0);
        let g = phase_gradients(kind, &origin);
        assert_eq!([g.d_eta, g.d_sigma, g.d_xi], [0.0; 3]);
    }
    assert_eq!(phase_eval(PhaseKind::Phi, &one), 6.0);
    assert_eq!(phase_eval(PhaseKind::Psi, &one), 3.0);
    assert_eq!(phase_eval(PhaseKind::Omega, &one), 5.0);
}

#[test]
fn gradients_match_chart_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (xi, eta, sigma) = (
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
        );
        for kind in PhaseKind::ALL {
            let f =
                |a: f64, b: f64, c: f64| phase_eval(kind, &FrequencyTriple::from_chart(a, b, c));
            let g = phase_gradients(kind, &FrequencyTriple::from_chart(xi, eta, sigma));
            let d_eta = (f(xi, eta + h, sigma) - f(xi, eta - h, sigma)) / (2.0 * h);
            let d_sigma = (f(xi, eta, sigma + h) - f(xi, eta, sigma - h)) / (2.0 * h);
            let d_xi = (f(xi + h, eta, sigma) - f(xi - h, eta, sigma)) / (2.0 * h);
            worst = worst
                .max((d_eta - g.d_eta).abs())
                .max((d_sigma - g.d_sigma).abs())
                .max((d_xi - g.d_xi).abs());
        }
    }
    assert!(worst <= 1e-8, "worst gradient mismatch {worst:e}");
}

#[test]
fn phi_dominates_sixth_of_squared_radius() {
    let lattice = TripleLattice::new(4.0, 41).unwrap();
    for p in lattice.iter() {
        assert!(
            phase_eval(PhaseKind::Phi, &p) >= p.norm().powi(2) / 6.0,
            "{p:?}"
        );
    }
}

#[test]
fn resonant_sets_shrink_to_origin() {
    let lattice = TripleLattice::new(2.0, 41).unwrap();
    let levels: Vec<(f64, f64)> = [1.0f64, 0.3, 0.1, 0.03, 1e-3, 1e-6]
        .iter()
        .map(|&t| (t, t.sqrt()))
        .collect();
    for kind in PhaseKind::ALL {
        let study = shrinkage_study(kind, &lattice, &levels).unwrap();
        for pair in study.windows(2) {
            assert!(
                pair[1].max_radius <= pair[0].max_radius,
                "{kind}: {study:?}"
            );
            assert!(pair[1].count <= pair[0].count);
        }
        let last = study.last().unwrap();
        assert_eq!(last.count, 1, "{kind}: only the origin should survive");
        assert!(last.max_radius <= lattice.spacing());
        assert!(
            study[0].max_radius > lattice.spacing(),
            "{kind}: loose tolerance should see a neighborhood"
        );
    }
}

#[test]
fn psi_gradient_conditions_force_the_diagonal() {
    let lattice = TripleLattice::new(2.0, 21).unwrap();
    let set = resonant_set_scan(PhaseKind::Psi, &lattice, 10.0, 1e-9).unwrap();
    for (p, v) in &set.points {
        assert!((p.xi1 - p.xi2).abs() < 1e-12 && (p.xi2 - p.xi3).abs() < 1e-12);
        assert!((v - 3.0 * p.xi2 * p.xi2).abs() < 1e-12);
    }
}

#[test]
fn scan_rejects_bad_tolerances_and_exports_csv() {
    let lattice = TripleLattice::new(1.0, 5).unwrap();
    assert!(resonant_set_scan(PhaseKind::Phi, &lattice, 0.0, 1.0).is_err());
    assert!(resonant_set_scan(PhaseKind::Phi, &lattice, 1.0, -1.0).is_err());
    let set = resonant_set_scan(PhaseKind::Omega, &lattice, 0.5, 0.5).unwrap();
    let mut buf = Vec::new();
    set.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("xi1,xi2,xi3,value\n"));
    assert_eq!(text.lines().count(), set.len() + 1);
}

#[test]
fn cutoff_partitions_at_random_triples() {
    let fam = build_cutoffs(0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let t = random_triple(&mut rng);
        let s1 = fam.chi1(&t) + fam.chi2(&t) + fam.chi3(&t);
        let s2 = fam.chi_eta(&t) + fam.chi_sigma(&t) + fam.chi_s(&t);
        let s3: f64 = fam.omega_split(&t).iter().sum();
        assert!(
            (s1 - 1.0).abs() <= 1e-12 && (s2 - 1.0).abs() <= 1e-12 && (s3 - 1.0).abs() <= 1e-12,
            "{t:?}"
        );
        for c in Cutoff::ALL {
            let v = fam.eval(c, &t);
            assert!((0.0..=1.0).contains(&v), "{c:?} = {v} at {t:?}");
        }
    }
}

#[test]
fn support_predicates_hold_on_lattice_and_random_triples() {
    for delta in [0.1, 0.05, 0.01] {
        let fam = build_cutoffs(delta).unwrap();
        let lattice = TripleLattice::new(3.0, 31).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let points: Vec<FrequencyTriple> = lattice
            .iter()
            .chain((0..10_000).map(|_| random_triple(&mut rng)))
            .collect();
        for pred in SupportPredicate::ALL {
            let mut on_support = 0;
            for p in &points {
                assert!(
                    pred.holds(&fam, p),
                    "{} fails at {p:?} (delta {delta})",
                    pred.name()
                );
                on_support += (pred.weight(&fam, p) > SUPPORT_THRESHOLD) as usize;
            }
            assert!(on_support > 0, "{} never sampled its support", pred.name());
        }
    }
}

#[test]
fn chi3_support_bound_is_the_slackened_one() {
    // The bound |ξ₃| ≥ max/(1+δ)² is attained, so the 9/10 factor needs the δ slack.
    let fam = build_cutoffs(0.1).unwrap();
    let t = FrequencyTriple::new(1.16, 1.08, 1.0);
    assert!(fam.chi3(&t) > 1e-12);
    assert!(t.xi3 < 0.9 * t.xi1);
    assert!(SupportPredicate::MaxSpecified(3).holds(&fam, &t));
}

#[test]
fn cm_constant_symbol() {
    let grid = SymbolGrid::sample(TripleLattice::new(1.0, 9).unwrap(), Arc::new(|_| 1.0)).unwrap();
    let est = cm_seminorm_estimate(&grid, 3).unwrap();
    assert_eq!(est.value, 1.0);
    assert_eq!(est.by_order[0], 1.0);
    assert!(est.by_order[1..].iter().all(|&v| v == 0.0));
}

#[test]
fn cm_chi2_is_finite_and_refinement_stable() {
    let fam = build_cutoffs(0.1).unwrap();
    let study = cm_refinement_study(
        Arc::new(move |t| fam.chi2(&t)),
        TripleLattice::new(1.0, 32).unwrap(),
        &CmOptions::default(),
    )
    .unwrap();
    assert!(study.fine.value.is_finite() && study.fine.value > 1.0);
    assert!(
        !study.too_coarse,
        "relative change {}",
        study.relative_change
    );
}

#[test]
fn cm_flags_coarse_lattice() {
    // Sixteen points per axis never land in a transition layer of χ₂.
    let fam = build_cutoffs(0.1).unwrap();
    let study = cm_refinement_study(
        Arc::new(move |t| fam.chi2(&t)),
        TripleLattice::new(1.0, 16).unwrap(),
        &CmOptions::default(),
    )
    .unwrap();
    assert!(study.too_coarse);
}

#[test]
fn cm_inverse_radius_diverges() {
    let inv: SymbolFn = Arc::new(|t: FrequencyTriple| 1.0 / t.norm());
    let mut values = Vec::new();
    let mut lattice = TripleLattice::new(1.0, 8).unwrap();
    for _ in 0..3 {
        let study = cm_refinement_study(inv.clone(), lattice, &CmOptions::default()).unwrap();
        values.push(study.coarse.value);
        assert!(study.too_coarse);
        lattice = lattice.refined();
    }
    assert!(values[2] > 3.5 * values[0], "{values:?}");
}

#[test]
fn cm_rejects_bad_options() {
    let grid = SymbolGrid::sample(TripleLattice::new(1.0, 4).unwrap(), Arc::new(|_| 1.0)).unwrap();
    assert!(cm_seminorm_estimate(&grid, 4).is_err());
    let far = CmOptions {
        r_min: 10.0,
        ..CmOptions::default()
    };
    assert!(matches!(
        cm_seminorm_with(&grid, &far),
        Err(NlsError::InsufficientData(_))
    ));
    let inv = SymbolGrid::sample(
        TripleLattice::new(1.0, 5).unwrap(),
        Arc::new(|t: FrequencyTriple| 1.0 / t.norm()),
    );
    assert!(matches!(inv, Err(NlsError::NonFinite)));
}

fn gaussian(grid: GridSpec, center: f64, k: f64) -> ComplexField {
    ComplexField::from_fn_physical(grid, |x| {
        Complex64::from_polar((-0.5 * (x - center).powi(2)).exp(), k * x)
    })
}

fn rel_sup(a: &ComplexField, b: &ComplexField) -> f64 {
    a.sub(b).unwrap().sup_norm() / b.sup_norm()
}

fn product(a: &ComplexField, b: &ComplexField, c: &ComplexField, s: f64) -> ComplexField {
    a.zip_with(b, |x, y| x * y)
        .unwrap()
        .zip_with(c, |x, y| s * x * y)
        .unwrap()
}

#[test]
fn unit_symbol_is_pointwise_product() {
    let grid = GridSpec::new(64, 16.0).unwrap();
    let (a, b, c) = (
        gaussian(grid, 0.0, 0.0),
        gaussian(grid, 0.5, 1.0),
        gaussian(grid, -0.3, -0.5),
    );
    let expected = product(&a, &b, &c, 2.0 * PI);
    let brute = trilinear_apply_bruteforce(&Symbol::one(), &a, &b, &c).unwrap();
    assert_eq!(brute.side(), Side::Physical);
    assert!(
        rel_sup(&brute, &expected) <= 1e-10,
        "{:e}",
        rel_sup(&brute, &expected)
    );
    let fast = trilinear_apply_fast(&Symbol::one(), &a, &b, &c).unwrap();
    assert!(rel_sup(&fast, &brute) <= 1e-12);
}

#[test]
fn zero_symbol_gives_zero() {
    let grid = GridSpec::new(32, 16.0).unwrap();
    let a = gaussian(grid, 0.0, 0.0);
    let out = trilinear_apply_bruteforce(&Symbol::zero(), &a, &a, &a).unwrap();
    assert_eq!(out.sup_norm(), 0.0);
}

#[test]
fn bump_in_third_slot_projects_c() {
    let grid = GridSpec::new(64, 16.0).unwrap();
    let (a, b, c) = (
        gaussian(grid, 0.2, 0.0),
        gaussian(grid, -0.4, 0.5),
        gaussian(grid, 0.0, 0.8),
    );
    let m = Symbol::separable(|_| 1.0, |_| 1.0, phi);
    let c_lo = inverse_transform(
        &lp_project(
            &nlslab::spectral::forward_transform(&c).unwrap(),
            LpBand::AtMost(1.0),
        )
        .unwrap(),
    )
    .unwrap();
    let expected = product(&a, &b, &c_lo, 2.0 * PI);
    let brute = trilinear_apply_bruteforce(&m, &a, &b, &c).unwrap();
    assert!(rel_sup(&brute, &expected) <= 1e-8);
}

#[test]
fn fast_matches_bruteforce_on_separable_symbols() {
    let grid = GridSpec::new(64, 16.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let fields: Vec<ComplexField> = (0..3)
        .map(|_| random_packet_field(grid, 3.0, &mut rng))
        .collect();
    let (a, b, c) = (&fields[0], &fields[1], &fields[2]);
    let hi = 2.0;
    let inverse_hi = Symbol::separable(
        |_| 1.0,
        |_| 1.0,
        move |x: f64| {
            if x == 0.0 {
                0.0
            } else {
                (1.0 - phi(x / hi)) / x.abs()
            }
        },
    );
    let coeffs: Vec<[f64; 3]> = (0..3).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
    let factor = |c: [f64; 3]| move |x: f64| c[0] + c[1] * (c[2] * x).sin() + (-0.1 * x * x).exp();
    let smooth = Symbol::separable(factor(coeffs[0]), factor(coeffs[1]), factor(coeffs[2]));
    for m in [inverse_hi, smooth] {
        let brute = trilinear_apply_bruteforce(&m, a, b, c).unwrap();
        let fast = trilinear_apply_fast(&m, a, b, c).unwrap();
        assert!(
            rel_sup(&fast, &brute) <= 1e-10,
            "{:e}",
            rel_sup(&fast, &brute)
        );
    }
}

#[test]
fn trilinear_errors() {
    let grid = GridSpec::new(256, 16.0).unwrap();
    let a = gaussian(grid, 0.0, 0.0);
    assert!(matches!(
        trilinear_apply_bruteforce(&Symbol::one(), &a, &a, &a),
        Err(NlsError::GridTooLarge(256))
    ));
    let small = gaussian(GridSpec::new(32, 16.0).unwrap(), 0.0, 0.0);
    assert!(matches!(
        trilinear_apply_fast(&Symbol::general(|_| 1.0), &small, &small, &small),
        Err(NlsError::NotSeparable)
    ));
    assert!(matches!(
        trilinear_apply_fast(&Symbol::one(), &small, &a, &small),
        Err(NlsError::GridMismatch)
    ));
}

#[test]
fn symbol_table_agrees_with_direct_sum() {
    let grid = GridSpec::new(32, 2.0 * PI).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let fields: Vec<ComplexField> = (0..3)
        .map(|_| random_packet_field(grid, 2.0, &mut rng))
        .collect();
    let m = Estimate::TriEst2.symbol(0.1).unwrap().unwrap();
    let table = SymbolTable::new(&m, grid).unwrap();
    let direct = trilinear_spectrum_bruteforce(&m, &fields[0], &fields[1], &fields[2]).unwrap();
    let tabulated = table.spectrum(&fields[0], &fields[1], &fields[2]).unwrap();
    assert!(rel_sup(&tabulated, &direct) <= 1e-14);
}

#[test]
fn triest1_vanishes_for_low_band_c() {
    let cfg = EstimateConfig::default();
    let grid = GridSpec::new(cfg.num_points, cfg.domain_length).unwrap();
    let n = 8.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_packet_field(grid, n, &mut rng);
    let c = lp_project(
        &random_packet_field(grid, n, &mut rng),
        LpBand::AtMost(n / 2.0),
    )
    .unwrap();
    let c_hi = lp_project(&c, LpBand::Above(n)).unwrap();
    let table = SymbolTable::new(&Estimate::TriEst1.symbol(0.1).unwrap().unwrap(), grid).unwrap();
    assert_eq!(table.spectrum(&a, &a, &c_hi).unwrap().sup_norm(), 0.0);
}

#[test]
fn estimate_constants_are_band_stable() {
    let cfg = EstimateConfig::default();
    for which in Estimate::ALL {
        let sweep = estimate_sweep(which, &ESTIMATE_BANDS, &cfg).unwrap();
        assert!(sweep.stable, "{which}: {sweep:?}");
        for r in &sweep.results {
            assert_eq!(r.trials_used + r.skipped, cfg.trials);
        }
    }
}

#[test]
fn estimate_rejects_unresolved_band() {
    let cfg = EstimateConfig::default();
    assert!(tri_estimate_check(Estimate::Bernstein, 60.0, &cfg).is_err());
    assert!(tri_estimate_check(Estimate::Bernstein, -1.0, &cfg).is_err());
    assert_eq!("TriEst3".parse::<Estimate>().unwrap(), Estimate::TriEst3);
}

proptest! {
    #[test]
    fn partitions_hold_everywhere(x1 in -1e3f64..1e3, x2 in -1e3f64..1e3, x3 in -1e3f64..1e3, delta in 1e-3f64..0.1) {
        let fam = build_cutoffs(delta).unwrap();
        let t = FrequencyTriple::new(x1, x2, x3);
        prop_assert!((fam.chi1(&t) + fam.chi2(&t) + fam.chi3(&t) - 1.0).abs() <= 1e-12);
        prop_assert!((fam.chi_eta(&t) + fam.chi_sigma(&t) + fam.chi_s(&t) - 1.0).abs() <= 1e-12);
        for pred in SupportPredicate::ALL {
            prop_assert!(pred.holds(&fam, &t));
        }
    }

    #[test]
    fn cutoffs_are_scale_invariant(x1 in -10f64..10.0, x2 in -10f64..10.0, x3 in -10f64..10.0, s in 0.01f64..100.0) {
        let fam = CutoffFamily::default();
        let t = FrequencyTriple::new(x1, x2, x3);
        let u = FrequencyTriple::new(s * x1, s * x2, s * x3);
        for c in Cutoff::ALL {
            prop_assert!((fam.eval(c, &t) - fam.eval(c, &u)).abs() <= 1e-9);
        }
    }
}
