//! Initial-data families and the standard test ensemble.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bump::phi;
use crate::error::{NlsError, Result};
use crate::spectral::{inverse_transform, ComplexField, GridSpec};

/// Parametrized initial data `u₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DataFamily {
    /// `amplitude · exp(-x²/(2·width²))`.
    Gaussian { amplitude: f64, width: f64 },
    /// Spectrum `height · φ(ξ/width)`: flat on `|ξ| ≤ width`, zero beyond `10/9·width`.
    FourierPlateau { height: f64, width: f64 },
}

impl DataFamily {
    pub fn validate(&self) -> Result<()> {
        let (a, w) = match *self {
            DataFamily::Gaussian { amplitude, width } => (amplitude, width),
            DataFamily::FourierPlateau { height, width } => (height, width),
        };
        if !a.is_finite() {
            return Err(NlsError::InvalidInput(format!(
                "data amplitude must be finite, got {a}"
            )));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(NlsError::InvalidInput(format!(
                "data width must be positive, got {w}"
            )));
        }
        Ok(())
    }

    /// The scale parameter `ε` of the family (amplitude or height).
    pub fn epsilon(&self) -> f64 {
        match *self {
            DataFamily::Gaussian { amplitude, .. } => amplitude,
            DataFamily::FourierPlateau { height, .. } => height,
        }
    }

    /// Copy with the scale parameter replaced.
    pub fn with_epsilon(&self, eps: f64) -> Self {
        match *self {
            DataFamily::Gaussian { width, .. } => DataFamily::Gaussian {
                amplitude: eps,
                width,
            },
            DataFamily::FourierPlateau { width, .. } => {
                DataFamily::FourierPlateau { height: eps, width }
            }
        }
    }

    /// Physical-side samples on `grid`.
    pub fn sample(&self, grid: GridSpec) -> Result<ComplexField> {
        self.validate()?;
        match *self {
            DataFamily::Gaussian { amplitude, width } => {
                Ok(ComplexField::from_fn_physical(grid, |x| {
                    let y = x / width;
                    Complex64::new(amplitude * (-0.5 * y * y).exp(), 0.0)
                }))
            }
            DataFamily::FourierPlateau { height, width } => {
                if width * crate::bump::BUMP_OUTER >= grid.xi_max() {
                    return Err(NlsError::InvalidInput(format!(
                        "plateau width {width} is not resolved (xi_max = {})",
                        grid.xi_max()
                    )));
                }
                let spec = ComplexField::from_fn_spectral(grid, |xi| {
                    Complex64::new(height * phi(xi / width), 0.0)
                });
                inverse_transform(&spec)
            }
        }
    }
}

impl fmt::Display for DataFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataFamily::Gaussian { amplitude, width } => {
                write!(f, "gaussian(amplitude={amplitude}, width={width})")
            }
            DataFamily::FourierPlateau { height, width } => {
                write!(f, "fourier-plateau(height={height}, width={width})")
            }
        }
    }
}

/// A random Schwartz-class field: a sum of three chirped, modulated Gaussians
/// with widths in `[0.7, 2]`, centers in `[-3, 3]` and frequencies in `[-2, 2]`.
pub fn random_schwartz_field(grid: GridSpec, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<[f64; 6]> = (0..3)
        .map(|_| {
            [
                rng.gen_range(0.2..1.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(0.7..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-0.3..0.3),
            ]
        })
        .collect();
    ComplexField::from_fn_physical(grid, |x| {
        bumps
            .iter()
            .map(|&[amp, phase, c, w, k, chirp]| {
                let y = (x - c) / w;
                Complex64::from_polar(
                    amp * (-0.5 * y * y).exp(),
                    phase + k * x + chirp * (x - c).powi(2),
                )
            })
            .sum()
    })
}

/// Named fields used wherever a check runs "across the standard ensemble":
/// Gaussians of several widths, a shifted modulated Gaussian and four random
/// Schwartz fields.
///
/// Fourier plateaus are left out: their compactly supported spectrum makes
/// the physical tails too heavy for the tail-mass monitor on moderate boxes.
pub fn standard_ensemble(grid: GridSpec) -> Result<Vec<(String, ComplexField)>> {
    let mut out = Vec::new();
    for width in [0.8, 1.0, 2.0] {
        let f = DataFamily::Gaussian {
            amplitude: 1.0,
            width,
        };
        out.push((f.to_string(), f.sample(grid)?));
    }
    out.push((
        "shifted-modulated-gaussian".to_string(),
        ComplexField::from_fn_physical(grid, |x| {
            Complex64::from_polar((-0.5 * (x - 2.0).powi(2)).exp(), 1.5 * x)
        }),
    ));
    for seed in 0..4 {
        out.push((
            format!("random-schwartz-{seed}"),
            random_schwartz_field(grid, seed),
        ));
    }
    Ok(out)
}
