//! Smooth compactly supported transition profiles.
//!
//! Every cutoff in the crate (Littlewood–Paley bump, resonance-region
//! multipliers) is built from one smooth step `S`: `S(y) = 1` for `y <= 0`,
//! `S(y) = 0` for `y >= 1`, and `S(y) = 1 / (1 + exp(1/(1-y) - 1/y))` in
//! between. `S` is `C^∞` and its derivatives of every order vanish at both
//! ends of the transition.

/// The smooth step described in the module docs.
pub fn smooth_step(y: f64) -> f64 {
    if y <= 0.0 {
        1.0
    } else if y >= 1.0 {
        0.0
    } else {
        let e = 1.0 / (1.0 - y) - 1.0 / y;
        if e > 700.0 {
            0.0
        } else if e < -700.0 {
            1.0
        } else {
            1.0 / (1.0 + e.exp())
        }
    }
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_derivative(y: f64) -> f64 {
    if y <= 0.0 || y >= 1.0 {
        return 0.0;
    }
    let e = 1.0 / y - 1.0 / (1.0 - y);
    if e.abs() > 700.0 {
        return 0.0;
    }
    let r = e.exp();
    let w = 1.0 / ((1.0 - y) * (1.0 - y)) + 1.0 / (y * y);
    -w / (r + 2.0 + 1.0 / r)
}

/// Outer edge of the Littlewood–Paley bump.
pub const BUMP_OUTER: f64 = 10.0 / 9.0;

/// The Littlewood–Paley bump `φ`: even, `≡ 1` on `[-1, 1]`, zero outside
/// `[-10/9, 10/9]`.
pub fn phi(xi: f64) -> f64 {
    smooth_step((xi.abs() - 1.0) / (BUMP_OUTER - 1.0))
}

/// `φ'(ξ)`.
pub fn phi_derivative(xi: f64) -> f64 {
    let slope = 1.0 / (BUMP_OUTER - 1.0);
    xi.signum() * slope * smooth_step_derivative((xi.abs() - 1.0) * slope)
}

/// Even plateau profile: `1` for `|x| <= inner`, `0` for `|x| >= outer`.
pub fn plateau(x: f64, inner: f64, outer: f64) -> f64 {
    smooth_step((x.abs() - inner) / (outer - inner))
}
