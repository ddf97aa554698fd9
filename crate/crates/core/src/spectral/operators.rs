use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use super::{
    check_tail, forward_unchecked, free_phase, inverse_unchecked, ComplexField, GridSpec, Side,
    WaveState, DEFAULT_TAIL_CEILING,
};
use crate::bump::{phi, phi_derivative, BUMP_OUTER};
use crate::error::{NlsError, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Applies the Fourier multiplier `symbol(ξ)`; the result stays on the input's side.
pub fn apply_multiplier(field: &ComplexField, symbol: impl Fn(f64) -> Complex64) -> ComplexField {
    match field.side() {
        Side::Spectral => field.map_with_coordinate(|xi, z| symbol(xi) * z),
        Side::Physical => {
            let spec = forward_unchecked(field).map_with_coordinate(|xi, z| symbol(xi) * z);
            inverse_unchecked(&spec)
        }
    }
}

fn real_multiplier(field: &ComplexField, symbol: impl Fn(f64) -> f64) -> ComplexField {
    apply_multiplier(field, |xi| Complex64::new(symbol(xi), 0.0))
}

/// Free Schrödinger flow `e^{i·dt·∂ₓₓ/2}`: multiplies `û` by `e^{-i·dt·ξ²/2}`.
pub fn free_propagate(state: &WaveState, dt: f64) -> Result<WaveState> {
    if !dt.is_finite() {
        return Err(NlsError::InvalidInput(format!(
            "dt must be finite, got {dt}"
        )));
    }
    let t = state.t() + dt;
    if t < 1.0 {
        return Err(NlsError::InvalidInput(format!(
            "propagation would end at t = {t} < 1"
        )));
    }
    let spectrum = free_phase(state.spectrum(), -dt);
    let u = inverse_unchecked(&spectrum);
    Ok(WaveState::from_parts_unchecked(
        t,
        u,
        spectrum,
        state.profile_spectrum().clone(),
    ))
}

/// Free flow `e^{iτ∂ₓₓ/2}` applied to a bare field (either side; result on the same side).
pub fn free_flow(field: &ComplexField, tau: f64) -> ComplexField {
    apply_multiplier(field, |xi| Complex64::from_polar(1.0, -0.5 * tau * xi * xi))
}

/// `[M(t)f](x) = e^{ix²/2t} f(x)`.
pub fn modulation_m(t: f64, field: &ComplexField) -> Result<ComplexField> {
    field.expect_side(Side::Physical)?;
    check_positive_time(t)?;
    Ok(field.map_with_coordinate(|x, z| z * Complex64::from_polar(1.0, 0.5 * x * x / t)))
}

/// `[M̄(t)f](x) = e^{-ix²/2t} f(x)`.
pub fn modulation_m_conj(t: f64, field: &ComplexField) -> Result<ComplexField> {
    field.expect_side(Side::Physical)?;
    check_positive_time(t)?;
    Ok(field.map_with_coordinate(|x, z| z * Complex64::from_polar(1.0, -0.5 * x * x / t)))
}

fn check_positive_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(NlsError::InvalidInput(format!(
            "time must be positive, got {t}"
        )))
    }
}

/// `[D(t)g](x) = (it)^{-1/2} g(x/t)`, returned on the physical side.
///
/// `g` is evaluated off-grid through its exact band-limited representation:
/// a physical-side field is read as its trigonometric interpolant, a
/// spectral-side field as the continuous-frequency Riemann sum of its inverse
/// transform. With the second reading `dilation_d(t, F g)` realizes the
/// composition `D(t)F` of the factorization `e^{it∂ₓₓ/2} = M(t)D(t)F M(t)`.
/// Frequencies outside the resolved band `|ξ| < ξ_max` evaluate to zero.
///
/// Cost is O(N²).
pub fn dilation_d(t: f64, field: &ComplexField) -> Result<ComplexField> {
    check_positive_time(t)?;
    let grid = *field.grid();
    let n = grid.num_points();
    let prefactor = Complex64::from_polar(t.powf(-0.5), -0.25 * PI);
    let out: Vec<Complex64> = match field.side() {
        Side::Physical => {
            let spec = forward_unchecked(field);
            let c = grid.dxi() / (2.0 * PI).sqrt();
            (0..n)
                .map(|j| {
                    let y = grid.x(j) / t;
                    prefactor * c * trig_sum(&grid, spec.samples(), y)
                })
                .collect()
        }
        Side::Spectral => {
            let phys = inverse_unchecked(field);
            let c = grid.dx() / (2.0 * PI).sqrt();
            let xi_max = grid.xi_max();
            (0..n)
                .map(|j| {
                    let xi = grid.x(j) / t;
                    // the sum is periodic in ξ; only the resolved band is meaningful
                    if xi.abs() >= xi_max {
                        Complex64::new(0.0, 0.0)
                    } else {
                        prefactor * c * node_sum(&grid, phys.samples(), xi)
                    }
                })
                .collect()
        }
    };
    let result = ComplexField::new_unchecked(grid, Side::Physical, out);
    check_tail(&result, DEFAULT_TAIL_CEILING)?;
    Ok(result)
}

/// `Σ_k ĉ_k e^{iyξ_k}` with the Nyquist term split symmetrically.
fn trig_sum(grid: &GridSpec, coeffs: &[Complex64], y: f64) -> Complex64 {
    let n = grid.num_points() as i64;
    let half = n / 2;
    let dxi = grid.dxi();
    let step = Complex64::from_polar(1.0, y * dxi);
    let mut w = Complex64::from_polar(1.0, y * dxi * (-(half - 1)) as f64);
    let mut acc = Complex64::new(0.0, 0.0);
    for m in -(half - 1)..half {
        let idx = m.rem_euclid(n) as usize;
        acc += coeffs[idx] * w;
        w *= step;
    }
    let nyq = grid.index_of_wavenumber(-half).unwrap();
    acc + coeffs[nyq] * (y * dxi * half as f64).cos()
}

/// `Σ_j g_j e^{-i x_j ξ}` with the boundary node `x_0 = -L/2` split symmetrically.
fn node_sum(grid: &GridSpec, samples: &[Complex64], xi: f64) -> Complex64 {
    let n = grid.num_points();
    let step = Complex64::from_polar(1.0, -xi * grid.dx());
    let mut w = Complex64::from_polar(1.0, -xi * grid.x(1));
    let mut acc = Complex64::new(0.0, 0.0);
    for &g in &samples[1..n] {
        acc += g * w;
        w *= step;
    }
    acc + samples[0] * (xi * 0.5 * grid.domain_length()).cos()
}

/// Littlewood–Paley band selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpBand {
    /// `P_{≤N}`: symbol `φ(ξ/N)`.
    AtMost(f64),
    /// `P_{>N}`: symbol `1 - φ(ξ/N)`.
    Above(f64),
    /// `P_N`: symbol `φ(ξ/N) - φ(2ξ/N)`.
    Dyadic(f64),
}

impl LpBand {
    pub fn symbol(&self, xi: f64) -> f64 {
        match *self {
            LpBand::AtMost(n) => phi(xi / n),
            LpBand::Above(n) => 1.0 - phi(xi / n),
            LpBand::Dyadic(n) => phi(xi / n) - phi(2.0 * xi / n),
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            LpBand::AtMost(n) | LpBand::Above(n) | LpBand::Dyadic(n) => n,
        }
    }
}

/// Littlewood–Paley projection; the result stays on the input's side.
pub fn lp_project(field: &ComplexField, band: LpBand) -> Result<ComplexField> {
    let n = band.scale();
    if !(n.is_finite() && n > 0.0) {
        return Err(NlsError::InvalidInput(format!(
            "band scale must be positive, got {n}"
        )));
    }
    Ok(real_multiplier(field, |xi| band.symbol(xi)))
}

/// Time-dependent frequency split at `|ξ| ~ s^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeBand {
    Lo,
    Hi,
    Med,
}

/// Rescaling that centers the med band on `|s^{1/2}ξ| = 1`.
const MED_SCALE: f64 = 1.054_092_553_389_459_7; // sqrt(10/9)

fn med_peak() -> f64 {
    static PEAK: OnceLock<f64> = OnceLock::new();
    *PEAK.get_or_init(|| {
        let raw = |z: f64| z.abs() * phi_derivative(z).abs();
        let (mut best_z, mut best) = (1.0, 0.0);
        let samples = 20_000;
        for i in 0..=samples {
            let z = 1.0 + (BUMP_OUTER - 1.0) * i as f64 / samples as f64;
            let v = raw(z);
            if v > best {
                best = v;
                best_z = z;
            }
        }
        // golden-section polish around the sampled maximum
        let h = (BUMP_OUTER - 1.0) / samples as f64;
        let (mut a, mut b) = (best_z - h, best_z + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if raw(c) > raw(d) {
                b = d;
            } else {
                a = c;
            }
        }
        raw(0.5 * (a + b)).max(best)
    })
}

/// Symbol of the med band as a function of `y = s^{1/2}ξ`: a normalized
/// `|z|·|φ'(z)|` profile with `z = (10/9)^{1/2} y`, peak value 1, supported in
/// `0.9487 < |y| < 1.0541`.
pub fn med_symbol(y: f64) -> f64 {
    let z = MED_SCALE * y;
    z.abs() * phi_derivative(z).abs() / med_peak()
}

/// Symbol of the time-dependent cutoff at time `s` evaluated at `ξ`.
pub fn time_cutoff_symbol(s: f64, which: TimeBand, xi: f64) -> f64 {
    let y = s.sqrt() * xi;
    match which {
        TimeBand::Lo => phi(y),
        TimeBand::Hi => 1.0 - phi(y),
        TimeBand::Med => med_symbol(y),
    }
}

/// Applies `φ_lo(ξ) = φ(s^{1/2}ξ)`, `φ_hi = 1 - φ_lo`, or the med band.
pub fn time_cutoff_project(field: &ComplexField, s: f64, which: TimeBand) -> Result<ComplexField> {
    if !(s.is_finite() && s >= 1.0) {
        return Err(NlsError::InvalidInput(format!(
            "cutoff time must be >= 1, got {s}"
        )));
    }
    Ok(real_multiplier(field, |xi| {
        time_cutoff_symbol(s, which, xi)
    }))
}

/// `|∂ₓ|^s` as the multiplier `|ξ|^s`, zero mode sent to 0 for `s ≠ 0`.
///
/// Negative orders require the zero mode to be negligible (below `1e-10`
/// relative to the largest spectral sample).
pub fn fractional_derivative(field: &ComplexField, s: f64) -> Result<ComplexField> {
    if !s.is_finite() {
        return Err(NlsError::InvalidInput(format!(
            "order must be finite, got {s}"
        )));
    }
    if s == 0.0 {
        return Ok(field.clone());
    }
    let spec = match field.side() {
        Side::Spectral => field.clone(),
        Side::Physical => forward_unchecked(field),
    };
    if s < 0.0 {
        let zero = spec.samples()[0].norm();
        let scale = spec.sup_norm().max(f64::MIN_POSITIVE);
        if zero > 1e-10 * scale {
            return Err(NlsError::NonZeroMean { magnitude: zero });
        }
    }
    let out = spec.map_with_coordinate(|xi, z| {
        if xi == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            z * xi.abs().powf(s)
        }
    });
    Ok(match field.side() {
        Side::Spectral => out,
        Side::Physical => inverse_unchecked(&out),
    })
}

/// Spectral `∂ₓ` (Nyquist mode zeroed). Result on the input's side.
pub fn derivative(field: &ComplexField) -> ComplexField {
    let grid = *field.grid();
    let nyq = -(grid.num_points() as f64) / 2.0 * grid.dxi();
    apply_multiplier(field, |xi| {
        if xi == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            I * xi
        }
    })
}

/// `∂_ξ` of a spectral-side field by spectral differentiation of its ξ-samples.
///
/// The ξ-samples are transformed as a sequence, multiplied by the conjugate
/// variable and transformed back, i.e. `∂_ξ ĝ = F(-ix g)` evaluated through the
/// sequence transform rather than through `g`. The boundary node is zeroed.
pub fn xi_derivative(spectral: &ComplexField) -> Result<ComplexField> {
    spectral.expect_side(Side::Spectral)?;
    let grid = *spectral.grid();
    let n = grid.num_points();
    let mut buf = spectral.samples().to_vec();
    super::plan(n, false).process(&mut buf);
    // buf[j] = Σ_k ĝ_k e^{2πijk/N}; the sequence index j ↔ conjugate variable
    // y_j with spacing 2π/(N dξ) = dx and signed index.
    for (j, z) in buf.iter_mut().enumerate() {
        let m = grid.wavenumber(j);
        if m == -(n as i64) / 2 {
            *z = Complex64::new(0.0, 0.0);
        } else {
            *z *= I * (m as f64) * grid.dx();
        }
    }
    super::plan(n, true).process(&mut buf);
    let inv_n = 1.0 / n as f64;
    for z in buf.iter_mut() {
        *z *= inv_n;
    }
    Ok(ComplexField::new_unchecked(grid, Side::Spectral, buf))
}

/// The three algebraically equivalent evaluations of `J(t)u = (x + it∂ₓ)u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JRoute {
    /// `x·u + it∂ₓu`.
    Direct,
    /// `e^{it∂ₓₓ/2} x e^{-it∂ₓₓ/2} u`, i.e. the free flow of `x·f`.
    Conjugation,
    /// `M(t)·it∂ₓ·M̄(t)u`.
    Modulated,
}

/// `J(t)u` by the direct route.
pub fn apply_j(state: &WaveState) -> Result<ComplexField> {
    apply_j_via(state, JRoute::Direct)
}

/// `J(t)u` by the chosen route, after the tail-mass check.
pub fn apply_j_via(state: &WaveState, route: JRoute) -> Result<ComplexField> {
    check_tail(state.u(), DEFAULT_TAIL_CEILING)?;
    let t = state.t();
    let u = state.u();
    Ok(match route {
        JRoute::Direct => {
            let du = derivative(u);
            let mut out = u.map_with_coordinate(|x, z| x * z);
            for (o, d) in out.samples_mut().iter_mut().zip(du.samples()) {
                *o += I * t * d;
            }
            out
        }
        JRoute::Conjugation => {
            let xf = profile_of(state).map_with_coordinate(|x, z| x * z);
            free_flow(&xf, t)
        }
        JRoute::Modulated => {
            let inner = derivative(&modulation_m_conj(t, u)?).scale(I * t);
            modulation_m(t, &inner)?
        }
    })
}

/// Physical-side profile `f(t) = e^{-it∂ₓₓ/2} u(t)`.
pub fn profile_of(state: &WaveState) -> ComplexField {
    inverse_unchecked(state.profile_spectrum())
}

#[cfg(test)]
mod tests {
    use super::super::{forward_transform, inverse_transform};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(grid: GridSpec, amp: f64) -> ComplexField {
        ComplexField::from_fn_physical(grid, |x| Complex64::new(amp * (-0.5 * x * x).exp(), 0.0))
    }

    /// Closed-form free evolution of e^{-x²/2} after time τ.
    fn free_gaussian(x: f64, tau: f64) -> Complex64 {
        let w = Complex64::new(1.0, tau);
        w.powf(-0.5) * (-(x * x) / (2.0 * w)).exp()
    }

    fn random_schwartz(grid: GridSpec, seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<(f64, f64, f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.gen_range(0.2..1.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(0.6..1.5),
                    rng.gen_range(-1.5..1.5),
                    rng.gen_range(0.0..6.28),
                )
            })
            .collect();
        ComplexField::from_fn_physical(grid, |x| {
            terms
                .iter()
                .map(|&(a, c, w, k, p)| {
                    Complex64::from_polar(a * (-(x - c).powi(2) / (2.0 * w * w)).exp(), k * x + p)
                })
                .sum()
        })
    }

    #[test]
    fn propagation_matches_closed_form() {
        let g = GridSpec::new(4096, 200.0).unwrap();
        let s = WaveState::from_physical(1.0, gaussian(g, 1.0)).unwrap();
        assert!(
            free_propagate(&s, 0.0)
                .unwrap()
                .u()
                .relative_distance(s.u())
                .unwrap()
                < 1e-15
        );
        for tau in [0.5, 3.0, 10.0] {
            let p = free_propagate(&s, tau).unwrap();
            let err = p
                .u()
                .samples()
                .iter()
                .enumerate()
                .map(|(j, z)| (z - free_gaussian(g.x(j), tau)).norm())
                .fold(0.0, f64::max);
            assert!(err <= 1e-8, "tau={tau} err={err}");
            assert!((p.u().l2_norm() / s.u().l2_norm() - 1.0).abs() < 1e-13);
            assert!(
                p.profile_spectrum()
                    .relative_distance(s.profile_spectrum())
                    .unwrap()
                    < 1e-12
            );
        }
    }

    #[test]
    fn modulation_is_unimodular_and_pw_bound() {
        let g = GridSpec::new(512, 60.0).unwrap();
        let u = random_schwartz(g, 4);
        let mu = modulation_m(3.0, &u).unwrap();
        for (a, b) in mu.samples().iter().zip(u.samples()) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        for t in [1.0, 2.0, 10.0, 1e3] {
            for j in 0..g.num_points() {
                let x = g.x(j);
                let lhs = (Complex64::from_polar(1.0, x * x / (2.0 * t)) - 1.0).norm();
                assert!(lhs <= (x * x / t).min(2.0) + 1e-15);
            }
        }
    }

    #[test]
    fn factorization_matches_free_flow() {
        let g = GridSpec::new(4096, 400.0).unwrap();
        let u = random_schwartz(g, 5);
        for t in [1.0, 2.5, 10.0] {
            let lhs = free_flow(&u, t);
            let fm = forward_transform(&modulation_m(t, &u).unwrap()).unwrap();
            let rhs = modulation_m(t, &dilation_d(t, &fm).unwrap()).unwrap();
            let rel = rhs.relative_distance(&lhs).unwrap();
            assert!(rel < 1e-6, "t={t} rel={rel}");
        }
    }

    #[test]
    fn dilation_is_unitary() {
        let g = GridSpec::new(1024, 100.0).unwrap();
        let u = gaussian(g, 1.0);
        for t in [1.0, 2.0, 5.0] {
            let d = dilation_d(t, &u).unwrap();
            assert!((d.l2_norm() / u.l2_norm() - 1.0).abs() < 1e-8);
        }
        // Spreading the Gaussian past the box edge is reported.
        let wide =
            ComplexField::from_fn_physical(g, |x| Complex64::new((-x * x / 200.0).exp(), 0.0));
        assert!(matches!(
            dilation_d(3.0, &wide),
            Err(NlsError::DomainEscape { .. })
        ));
    }

    #[test]
    fn lp_projection_support_and_partition() {
        let g = GridSpec::new(256, 2.0 * PI * 8.0).unwrap();
        let mode =
            |k: f64| ComplexField::from_fn_physical(g, move |x| Complex64::from_polar(1.0, k * x));
        let n = 4.0;
        let inside = mode(4.0);
        let kept = lp_project(&inside, LpBand::AtMost(n)).unwrap();
        assert!(kept.relative_distance(&inside).unwrap() < 1e-13);
        let outside = mode(4.5);
        assert!(lp_project(&outside, LpBand::AtMost(n)).unwrap().sup_norm() < 1e-12);
        let u = random_schwartz(g, 6);
        let lo = lp_project(&u, LpBand::AtMost(n)).unwrap();
        let hi = lp_project(&u, LpBand::Above(n)).unwrap();
        assert!(lo.add(&hi).unwrap().relative_distance(&u).unwrap() < 1e-14);
        assert!(lp_project(&u, LpBand::Dyadic(0.0)).is_err());
    }

    #[test]
    fn time_cutoffs() {
        let g = GridSpec::new(512, 400.0).unwrap();
        let u = random_schwartz(g, 7);
        let s = 16.0;
        let lo = time_cutoff_project(&u, s, TimeBand::Lo).unwrap();
        let hi = time_cutoff_project(&u, s, TimeBand::Hi).unwrap();
        assert!(lo.add(&hi).unwrap().sub(&u).unwrap().sup_norm() <= 1e-14 * u.sup_norm().max(1.0));
        let at_one = time_cutoff_project(&u, 1.0, TimeBand::Lo).unwrap();
        let p1 = lp_project(&u, LpBand::AtMost(1.0)).unwrap();
        assert!(at_one.relative_distance(&p1).unwrap() < 1e-15);
        assert!(med_symbol(1.0) > 0.1);
        assert_eq!(med_symbol(10.0), 0.0);
        assert_eq!(med_symbol(0.9), 0.0);
        assert_eq!(med_symbol(10.0 / 9.0), 0.0);
        let peak = (0..10_000)
            .map(|i| med_symbol(0.9 + 0.25 * i as f64 / 10_000.0))
            .fold(0.0, f64::max);
        assert!((peak - 1.0).abs() < 1e-6);
        assert!(time_cutoff_project(&u, 0.5, TimeBand::Hi).is_err());
    }

    #[test]
    fn fractional_derivatives() {
        let g = GridSpec::new(128, 2.0 * PI).unwrap();
        let u = ComplexField::from_fn_physical(g, |x| Complex64::from_polar(1.0, 3.0 * x));
        let d2 = fractional_derivative(&u, 2.0).unwrap();
        assert!(
            d2.relative_distance(&u.scale(Complex64::new(9.0, 0.0)))
                .unwrap()
                < 1e-12
        );
        // mean-zero random field: |∂|^{-1} then |∂|^{1} is the identity
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut spec = ComplexField::from_fn_spectral(g, |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        spec.samples_mut()[0] = Complex64::new(0.0, 0.0);
        let v = inverse_transform(&spec).unwrap();
        let back = fractional_derivative(&fractional_derivative(&v, -1.0).unwrap(), 1.0).unwrap();
        assert!(back.relative_distance(&v).unwrap() < 1e-10);
        let with_mean = v.map(|z| z + 1.0);
        assert!(matches!(
            fractional_derivative(&with_mean, -1.0),
            Err(NlsError::NonZeroMean { .. })
        ));
        assert_eq!(fractional_derivative(&with_mean, 0.0).unwrap(), with_mean);
    }

    #[test]
    fn j_at_t_one_on_gaussian() {
        let g = GridSpec::new(2048, 80.0).unwrap();
        let s = WaveState::from_physical(1.0, gaussian(g, 1.0)).unwrap();
        let ju = apply_j(&s).unwrap();
        let expect = ComplexField::from_fn_physical(g, |x| {
            Complex64::new(1.0, -1.0) * x * (-0.5 * x * x).exp()
        });
        assert!(ju.relative_distance(&expect).unwrap() < 1e-12);
    }

    #[test]
    fn j_routes_and_forms_agree() {
        let g = GridSpec::new(8192, 1600.0).unwrap();
        let u1 = random_schwartz(g, 11);
        for t in [1.0, 7.0, 100.0] {
            let s = WaveState::from_physical(1.0, u1.clone()).unwrap();
            let s = free_propagate(&s, t - 1.0).unwrap();
            let a = apply_j_via(&s, JRoute::Direct).unwrap();
            let b = apply_j_via(&s, JRoute::Conjugation).unwrap();
            let c = apply_j_via(&s, JRoute::Modulated).unwrap();
            assert!(b.relative_distance(&a).unwrap() < 1e-6, "t={t}");
            assert!(c.relative_distance(&a).unwrap() < 1e-6, "t={t}");
            let xf = profile_of(&s).map_with_coordinate(|x, z| x * z).l2_norm();
            let dxi = xi_derivative(s.profile_spectrum()).unwrap().l2_norm();
            let ju = a.l2_norm();
            assert!((xf / ju - 1.0).abs() < 1e-6);
            assert!((dxi / ju - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn profile_is_fixed_by_free_flow_and_shares_sup_norm() {
        let g = GridSpec::new(1024, 200.0).unwrap();
        let s1 = WaveState::from_physical(1.0, random_schwartz(g, 12)).unwrap();
        let expect = free_flow(s1.u(), -1.0);
        assert!(profile_of(&s1).relative_distance(&expect).unwrap() < 1e-12);
        for t in [5.0, 10.0] {
            let st = free_propagate(&s1, t - 1.0).unwrap();
            let rel = st
                .profile_spectrum()
                .relative_distance(s1.profile_spectrum())
                .unwrap();
            assert!(rel < 1e-12);
            let (m, mf) = (st.spectrum().sup_norm(), st.profile_spectrum().sup_norm());
            assert!((m - mf).abs() <= 1e-14 * m);
        }
    }
}
