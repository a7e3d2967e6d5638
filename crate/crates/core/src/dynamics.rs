//! Time-domain evolution after a single excitation is placed in one
//! oscillator: closed-form amplitudes, the mean-value population equations,
//! the photon-detection density and the escape probabilities.
//!
//! With the atom initially excited, the atomic amplitude `α = ⟨σ₋⟩` and the
//! cavity amplitude `β = ⟨a⟩` obey
//!
//! ```text
//! α' = -iω̃₁α - gβ,    β' = -iω̃₂β + gα,    α(0) = 1, β(0) = 0,
//! ```
//!
//! and the coherence is `⟨σ₊a⟩ = α*β`. With the cavity initially excited the
//! same equations hold with the roles of the two oscillators exchanged.
//!
//! Note: `p(t)` uses the atomic population `⟨σ₊σ₋⟩` in the normalization of
//! the atomic spectrum; an occasionally quoted `⟨S₊σ₋⟩` is the same quantity.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::eigen::{eigenfrequencies_direct, EigenResult};
use crate::model::{complex_frequencies, ComplexFrequencyPair, Role, SystemParams};
use crate::ode::{OdeError, Rk4Doubling};
use crate::quad::{self, QuadOptions};

/// Output points of a trace when the caller does not choose a grid.
pub const DEFAULT_TRACE_POINTS: usize = 4096;
/// Horizon in units of the slowest amplitude-squared decay time.
pub const HORIZON_DECAY_TIMES: f64 = 40.0;
/// Roots closer than this (relative) are treated as coincident.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("the initially excited mode is lossless and uncoupled; the excitation never escapes")]
    TrappedExcitation,
    #[error(transparent)]
    Integration(#[from] OdeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSource {
    ClosedForm,
    Ode,
    Lindblad,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeTrace {
    pub t: Vec<f64>,
    /// `⟨σ₊σ₋⟩(t)`
    pub pop_atom: Vec<f64>,
    /// `⟨a†a⟩(t)`
    pub pop_cav: Vec<f64>,
    /// `⟨σ₊a⟩(t)`
    pub coherence: Vec<Complex64>,
    /// `γ⟨σ₊σ₋⟩ + κ⟨a†a⟩`
    pub p_detect: Vec<f64>,
    pub source: TraceSource,
}

impl TimeTrace {
    pub(crate) fn assemble(
        p: &SystemParams,
        t: Vec<f64>,
        pop_atom: Vec<f64>,
        pop_cav: Vec<f64>,
        coherence: Vec<Complex64>,
        source: TraceSource,
    ) -> Self {
        let p_detect = pop_atom
            .iter()
            .zip(&pop_cav)
            .map(|(a, c)| p.gamma() * a + p.kappa() * c)
            .collect();
        Self {
            t,
            pop_atom,
            pop_cav,
            coherence,
            p_detect,
            source,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Evaluates `α(t)`, `β(t)` for one coupled pair.
///
/// Far from degeneracy the two-exponential form is used. For `|Δt| < ½`,
/// with `Δ = (λ₊-λ₋)/2`, the equivalent form
/// `α = e^{-iλ̄t}[cos Δt - i(λ̄-ω̃₂) sin(Δt)/Δ]`, `β = g e^{-iλ̄t} sin(Δt)/Δ`
/// avoids cancellation; at exact degeneracy it reduces to the confluent
/// limit `α = e^{-iλt}(1 - i(λ-ω̃₂)t)`, `β = g t e^{-iλt}`.
#[derive(Debug, Clone, Copy)]
pub struct ClosedFormAmplitudes {
    freqs: ComplexFrequencyPair,
    g: f64,
    eig: EigenResult,
    mean: Complex64,
    half_split: Complex64,
    degenerate: bool,
}

impl ClosedFormAmplitudes {
    pub fn new(freqs: &ComplexFrequencyPair, g: f64) -> Self {
        let eig = eigenfrequencies_direct(freqs, g);
        let mean = 0.5 * (eig.lambda_plus + eig.lambda_minus);
        let half_split = 0.5 * (eig.lambda_plus - eig.lambda_minus);
        let scale = mean.norm().max(g).max(f64::MIN_POSITIVE);
        let degenerate = 2.0 * half_split.norm() < DEGENERACY_TOL * scale;
        Self {
            freqs: *freqs,
            g,
            eig,
            mean,
            half_split: if degenerate {
                Complex64::new(0.0, 0.0)
            } else {
                half_split
            },
            degenerate,
        }
    }

    pub fn eigen(&self) -> &EigenResult {
        &self.eig
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// `(α(t), β(t))`
    pub fn at(&self, t: f64) -> (Complex64, Complex64) {
        let i = Complex64::i();
        let w2 = self.freqs.second;
        let z = self.half_split * t;
        if self.degenerate || z.norm() < 0.5 {
            let carrier = (-i * self.mean * t).exp();
            let sinc_t = if self.degenerate {
                Complex64::new(t, 0.0)
            } else if z.norm() < 1e-4 {
                t * (1.0 - z * z / 6.0 + z * z * z * z / 120.0)
            } else {
                z.sin() / self.half_split
            };
            let cos = if self.degenerate {
                Complex64::new(1.0, 0.0)
            } else {
                z.cos()
            };
            let alpha = carrier * (cos - i * (self.mean - w2) * sinc_t);
            let beta = carrier * sinc_t * self.g;
            return (alpha, beta);
        }
        let (lp, lm) = (self.eig.lambda_plus, self.eig.lambda_minus);
        let ep = (-i * lp * t).exp();
        let em = (-i * lm * t).exp();
        let split = lp - lm;
        let alpha = ((lp - w2) * ep - (lm - w2) * em) / split;
        let beta = i * self.g * (ep - em) / split;
        (alpha, beta)
    }

    /// Bounds `|α(t)| ≤ (1 + c_α t)e^{-rt/2}` and `|β(t)| ≤ g t e^{-rt/2}`,
    /// returned as `(c_α, r)` with `r` the slowest intensity decay rate.
    fn envelope(&self) -> (f64, f64) {
        let r = 2.0 * (-self.eig.lambda_plus.im).min(-self.eig.lambda_minus.im);
        ((self.mean - self.freqs.second).norm(), r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Amplitudes {
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
}

/// Amplitudes of the initially fed oscillator (`alpha`) and of its partner
/// (`beta`) on a time grid.
pub fn amplitudes_closed_form(freqs: &ComplexFrequencyPair, g: f64, t: &[f64]) -> Amplitudes {
    let amp = ClosedFormAmplitudes::new(freqs, g);
    let (alpha, beta) = t.iter().map(|&t| amp.at(t)).unzip();
    Amplitudes { alpha, beta }
}

fn ensure_escape(p: &SystemParams, role: Role) -> Result<(), DynamicsError> {
    if p.g() == 0.0 && p.excited_rate(role) == 0.0 {
        Err(DynamicsError::TrappedExcitation)
    } else {
        Ok(())
    }
}

/// Slowest population decay rate that carries weight, `min 2|Im λ±|`
/// (only the excited mode's own rate when `g = 0`).
pub fn slowest_decay_rate(p: &SystemParams, role: Role) -> Result<f64, DynamicsError> {
    ensure_escape(p, role)?;
    if p.g() == 0.0 {
        return Ok(p.excited_rate(role));
    }
    let amp = ClosedFormAmplitudes::new(&complex_frequencies(p, role), p.g());
    Ok(amp.envelope().1)
}

/// `40 / r_min`.
pub fn default_horizon(p: &SystemParams, role: Role) -> Result<f64, DynamicsError> {
    Ok(HORIZON_DECAY_TIMES / slowest_decay_rate(p, role)?)
}

pub fn uniform_grid(t_end: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect()
}

pub fn default_time_grid(p: &SystemParams, role: Role) -> Result<Vec<f64>, DynamicsError> {
    Ok(uniform_grid(
        default_horizon(p, role)?,
        DEFAULT_TRACE_POINTS,
    ))
}

/// Populations from the closed-form amplitudes; the excited mode is chosen by `role`.
pub fn trace_closed_form(p: &SystemParams, role: Role, t: &[f64]) -> TimeTrace {
    let Amplitudes { alpha, beta } =
        amplitudes_closed_form(&complex_frequencies(p, role), p.g(), t);
    // With the cavity fed, the generic pair obeys x₂' = -iω̃_at x₂ + g x₁,
    // while the atom amplitude obeys α' = -iω̃_at α - g β; so α = -x₂.
    let (atom, cav) = match role {
        Role::AtomicType => (alpha, beta),
        Role::CavityType => (beta.iter().map(|b| -b).collect(), alpha),
    };
    TimeTrace::assemble(
        p,
        t.to_vec(),
        atom.iter().map(|a| a.norm_sqr()).collect(),
        cav.iter().map(|c| c.norm_sqr()).collect(),
        atom.iter().zip(&cav).map(|(a, c)| a.conj() * c).collect(),
        TraceSource::ClosedForm,
    )
}

/// Integrates the closed equations for `⟨a†a⟩`, `⟨σ₊σ₋⟩` and `⟨σ₊a⟩`
/// (with `⟨a†σ_z a⟩ = -⟨a†a⟩`, exact in the one-excitation subspace).
pub fn populations_ode(
    p: &SystemParams,
    role: Role,
    t: &[f64],
) -> Result<TimeTrace, DynamicsError> {
    let (gamma, kappa, g, delta) = (p.gamma(), p.kappa(), p.g(), p.delta());
    let half_sum = 0.5 * (gamma + kappa);
    // State: [⟨a†a⟩, ⟨σ₊σ₋⟩, Re⟨σ₊a⟩, Im⟨σ₊a⟩]
    let rhs = move |_t: f64, y: &[f64; 4]| {
        let [cav, atom, re, im] = *y;
        [
            -kappa * cav + 2.0 * g * re,
            -gamma * atom - 2.0 * g * re,
            -half_sum * re + delta * im + g * (atom - cav),
            -half_sum * im - delta * re,
        ]
    };
    let y0 = match role {
        Role::AtomicType => [0.0, 1.0, 0.0, 0.0],
        Role::CavityType => [1.0, 0.0, 0.0, 0.0],
    };
    let scale = gamma
        .max(kappa)
        .max(g)
        .max(delta.abs())
        .max(f64::MIN_POSITIVE);
    let states =
        Rk4Doubling::default().integrate_to_grid(rhs, y0, t, 0.05 / scale, |_, _| Ok(()))?;
    Ok(TimeTrace::assemble(
        p,
        t.to_vec(),
        states.iter().map(|s| s[1]).collect(),
        states.iter().map(|s| s[0]).collect(),
        states.iter().map(|s| Complex64::new(s[2], s[3])).collect(),
        TraceSource::Ode,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EscapeProbabilities {
    pub p_at: f64,
    pub p_cav: f64,
    pub quadrature_error: f64,
}

/// Escape probabilities after exciting the atom.
pub fn escape_probabilities(p: &SystemParams) -> Result<EscapeProbabilities, DynamicsError> {
    escape_probabilities_for(p, Role::AtomicType)
}

/// `P_at = γ∫⟨σ₊σ₋⟩dt`, `P_cav = κ∫⟨a†a⟩dt` by adaptive quadrature of the
/// closed-form populations up to the default horizon, plus an analytic
/// bound on the neglected tail folded into `quadrature_error`.
pub fn escape_probabilities_for(
    p: &SystemParams,
    role: Role,
) -> Result<EscapeProbabilities, DynamicsError> {
    ensure_escape(p, role)?;
    let (own_rate, partner_rate) = match role {
        Role::AtomicType => (p.gamma(), p.kappa()),
        Role::CavityType => (p.kappa(), p.gamma()),
    };
    let (own, partner, err) = if p.g() == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        let amp = ClosedFormAmplitudes::new(&complex_frequencies(p, role), p.g());
        let (c_alpha, r) = amp.envelope();
        let horizon = HORIZON_DECAY_TIMES / r;
        let oscillation =
            (amp.eigen().lambda_plus - amp.eigen().lambda_minus).norm() + p.gamma() + p.kappa();
        let opts = QuadOptions {
            initial_panels: ((horizon * oscillation / std::f64::consts::PI).ceil() as usize)
                .clamp(4, 200_000),
            ..QuadOptions::default()
        };
        let a = quad::integrate(|t| amp.at(t).0.norm_sqr(), 0.0, horizon, opts);
        let b = quad::integrate(|t| amp.at(t).1.norm_sqr(), 0.0, horizon, opts);

        let decay = (-r * horizon).exp();
        let t = horizon;
        let tail_a = decay
            * ((1.0 + c_alpha * t).powi(2) / r
                + 2.0 * c_alpha * (1.0 + c_alpha * t) / (r * r)
                + 2.0 * c_alpha * c_alpha / r.powi(3));
        let g2 = p.g() * p.g();
        let tail_b = g2 * decay * (t * t / r + 2.0 * t / (r * r) + 2.0 / r.powi(3));
        (
            own_rate * a.value,
            partner_rate * b.value,
            own_rate * (a.error + tail_a) + partner_rate * (b.error + tail_b),
        )
    };
    let (p_at, p_cav) = match role {
        Role::AtomicType => (own, partner),
        Role::CavityType => (partner, own),
    };
    Ok(EscapeProbabilities {
        p_at,
        p_cav,
        quadrature_error: err,
    })
}
