//! Dressed complex eigenfrequencies of the coupled atom-cavity pair.
//!
//! The roots of `(λ - ω̃₁)(λ - ω̃₂) - g² = 0` are computed directly from the
//! quadratic; that path is authoritative. Closed forms of the `±a/2 - i b±/2`
//! decomposition and the strong-coupling mixing-angle approximations are
//! kept for cross-checking.
//!
//! Two closed-form variants exist. `Literal` evaluates the widely quoted
//! expressions as printed:
//!
//! ```text
//! a² = 2g² + δ²/2 - ½((κ-γ)/2)² + √[(2g² - ½((κ-γ)/2)²)² + δ²(2g² - ½((κ-γ)/2)²) + (δ²/2)²]
//! b± = (κ+δ)/2 ± (δ/2a)(κ-γ)
//! ```
//!
//! `Corrected` uses `b± = (κ+γ)/2 ± (δ/2a)(κ-γ)` and flips the sign of the
//! `½((κ-γ)/2)²` term inside the middle radicand term, i.e.
//! `δ²(2g² + ½((κ-γ)/2)²)`. With both fixes the closed form reproduces the
//! quadratic roots to rounding for every `δ`; with the printed radicand the
//! splitting `a` is off by `O(δ²(κ-γ)²/a³)` whenever `δ ≠ 0` and `κ ≠ γ`.
//!
//! On resonance both variants use `λ± = -i(κ+γ)/4 ± √(g² - ((κ-γ)/4)²)`; the
//! decay term carries a minus sign so that `exp(-iλt)` decays.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::model::{complex_frequencies, ComplexFrequencyPair, Role, SystemParams};

/// Real parts closer than this (relative to the root scale) count as equal
/// when labeling the roots.
pub const LABEL_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    DirectQuadratic,
    ClosedFormCorrected,
    ClosedFormLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormVariant {
    Literal,
    Corrected,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error(
        "overdamped: closed form inapplicable (a² = {a_squared} ≤ 0); use the direct quadratic"
    )]
    Overdamped { a_squared: f64 },
}

/// `λ₊` has the larger real part; on a tie it is the slower-decaying root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenResult {
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub method: EigenMethod,
    /// Splitting `Re(λ₊ - λ₋)`, present only when it is strictly positive.
    pub a: Option<f64>,
    pub b_plus: Option<f64>,
    pub b_minus: Option<f64>,
    pub theta: Option<f64>,
}

impl EigenResult {
    pub fn roots(&self) -> [Complex64; 2] {
        [self.lambda_plus, self.lambda_minus]
    }
}

fn label(r1: Complex64, r2: Complex64) -> (Complex64, Complex64) {
    let scale = r1.norm().max(r2.norm()).max(1.0);
    let dre = r1.re - r2.re;
    let first_is_plus = if dre.abs() <= LABEL_TIE_TOL * scale {
        r1.im >= r2.im
    } else {
        dre > 0.0
    };
    if first_is_plus {
        (r1, r2)
    } else {
        (r2, r1)
    }
}

/// Mixing angle with `tan 2θ = 2g/δ`, `θ ∈ [0, π/2]`, `π/4` at `δ = g = 0`.
pub fn mixing_angle(delta: f64, g: f64) -> f64 {
    if delta == 0.0 && g == 0.0 {
        FRAC_PI_4
    } else {
        0.5 * (2.0 * g).atan2(delta)
    }
}

/// Roots of `(λ - ω̃₁)(λ - ω̃₂) - g²` from the quadratic formula.
pub fn eigenfrequencies_direct(freqs: &ComplexFrequencyPair, g: f64) -> EigenResult {
    let mean = 0.5 * (freqs.first + freqs.second);
    let half_diff = 0.5 * (freqs.first - freqs.second);
    let s = (half_diff * half_diff + g * g).sqrt();
    let (plus, minus) = label(mean + s, mean - s);
    let split = plus.re - minus.re;
    let delta = (freqs.first.re - freqs.second.re).abs();
    EigenResult {
        lambda_plus: plus,
        lambda_minus: minus,
        method: EigenMethod::DirectQuadratic,
        a: (split > 0.0).then_some(split),
        b_plus: Some(-2.0 * plus.im),
        b_minus: Some(-2.0 * minus.im),
        theta: Some(mixing_angle(delta, g)),
    }
}

/// Direct roots for a parameter set; identical for both roles.
pub fn eigenfrequencies(p: &SystemParams) -> EigenResult {
    eigenfrequencies_direct(&complex_frequencies(p, Role::AtomicType), p.g())
}

pub fn eigenfrequencies_closed_form(
    p: &SystemParams,
    variant: ClosedFormVariant,
) -> Result<EigenResult, EigenError> {
    let (gamma, kappa, g, delta) = (p.gamma(), p.kappa(), p.g(), p.delta());
    let method = match variant {
        ClosedFormVariant::Literal => EigenMethod::ClosedFormLiteral,
        ClosedFormVariant::Corrected => EigenMethod::ClosedFormCorrected,
    };
    let quarter = (kappa - gamma) / 4.0;

    if delta == 0.0 {
        let radicand = g * g - quarter * quarter;
        if radicand <= 0.0 {
            return Err(EigenError::Overdamped {
                a_squared: 4.0 * radicand,
            });
        }
        let half_a = radicand.sqrt();
        let decay = -(kappa + gamma) / 4.0;
        let b = (kappa + gamma) / 2.0;
        return Ok(EigenResult {
            lambda_plus: Complex64::new(half_a, decay),
            lambda_minus: Complex64::new(-half_a, decay),
            method,
            a: Some(2.0 * half_a),
            b_plus: Some(b),
            b_minus: Some(b),
            theta: Some(FRAC_PI_4),
        });
    }

    let half_sq = 0.5 * ((kappa - gamma) / 2.0).powi(2);
    let base = 2.0 * g * g - half_sq;
    let middle = match variant {
        ClosedFormVariant::Literal => base,
        ClosedFormVariant::Corrected => 2.0 * g * g + half_sq,
    };
    let radicand = base * base + delta * delta * middle + (0.5 * delta * delta).powi(2);
    let a_squared = 2.0 * g * g + 0.5 * delta * delta - half_sq + radicand.max(0.0).sqrt();
    if a_squared <= 0.0 {
        return Err(EigenError::Overdamped { a_squared });
    }
    let a = a_squared.sqrt();
    let width_sum = match variant {
        ClosedFormVariant::Literal => kappa + delta,
        ClosedFormVariant::Corrected => kappa + gamma,
    };
    let skew = delta / (2.0 * a) * (kappa - gamma);
    let b_plus = 0.5 * width_sum + skew;
    let b_minus = 0.5 * width_sum - skew;
    Ok(EigenResult {
        lambda_plus: Complex64::new(0.5 * a, -0.5 * b_plus),
        lambda_minus: Complex64::new(-0.5 * a, -0.5 * b_minus),
        method,
        a: Some(a),
        b_plus: Some(b_plus),
        b_minus: Some(b_minus),
        theta: Some(mixing_angle(delta, g)),
    })
}

/// Strong-coupling approximations built from the mixing angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingLimits {
    pub theta: f64,
    pub a: f64,
    pub b_plus: f64,
    pub b_minus: f64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
}

pub fn mixing_angle_limits(p: &SystemParams) -> MixingLimits {
    let (gamma, kappa, g, delta) = (p.gamma(), p.kappa(), p.g(), p.delta());
    let theta = mixing_angle(delta, g);
    let (sin, cos) = theta.sin_cos();
    let (sin2, cos2) = (sin * sin, cos * cos);
    let b_plus = kappa * cos2 + gamma * sin2;
    let b_minus = kappa * sin2 + gamma * cos2;
    let a_squared =
        delta * delta + 4.0 * g * g - ((kappa - gamma) / 2.0).powi(2) * (2.0 * theta).sin().powi(2);
    let a = a_squared.max(0.0).sqrt();
    MixingLimits {
        theta,
        a,
        b_plus,
        b_minus,
        lambda_plus: Complex64::new(0.5 * a, -0.5 * b_plus),
        lambda_minus: Complex64::new(-0.5 * a, -0.5 * b_minus),
    }
}

/// Largest absolute component difference between two root pairs.
pub fn max_component_deviation(a: &EigenResult, b: &EigenResult) -> f64 {
    a.roots()
        .iter()
        .zip(b.roots().iter())
        .map(|(x, y)| (x.re - y.re).abs().max((x.im - y.im).abs()))
        .fold(0.0, f64::max)
}
