//! Normalized emission spectra, driven steady-state response and the
//! atom/cavity role exchange.
//!
//! The closed forms, with `D(ω) = 16|ω-λ₊|²|ω-λ₋|²`, are
//!
//! ```text
//! S_at(ω)  = 2N (κ² + (δ-2ω)²) / [π (4g²(κ+γ) + κ((κ+γ)² + 4δ²)) D(ω)]
//! S_cav(ω) = 2N / [π (κ+γ) D(ω)]
//! N = (κ+γ)²(4g²+κγ) + 4κγδ²
//! ```
//!
//! for atomic-type spectroscopy (atom excited or driven). Cavity-type
//! spectra are the atomic-type spectra of the exchanged parameters with the
//! two channels swapped.
//!
//! The relaxation spectra of two coupled classical oscillators are an
//! independent second route to the same curves; they only share the roots
//! `λ±` with the closed forms.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{
    escape_probabilities_for, DynamicsError, EscapeProbabilities, DEGENERACY_TOL,
};
use crate::eigen::{eigenfrequencies, eigenfrequencies_direct, EigenResult};
use crate::model::{classify_regime, ComplexFrequencyPair, Quality, Role, SystemParams};
use crate::quad::{self, QuadOptions};

/// Points on the default frequency grid.
pub const DEFAULT_SPECTRUM_POINTS: usize = 8192;
/// Norms further than this from 1 set [`Spectrum::window_warning`].
pub const NORM_WARNING_THRESHOLD: f64 = 1e-3;
/// Driven response is flagged when an oscillator's population exceeds this.
pub const LOW_EXCITATION_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error("the initially excited mode is lossless and uncoupled; its spectrum is a delta peak")]
    TrappedExcitation,
    #[error("frequency grid must be strictly increasing with at least two points")]
    BadGrid,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// `16|ω-λ₊|²|ω-λ₋|²`
pub fn d_of_omega(omega: f64, eig: &EigenResult) -> f64 {
    16.0 * (omega - eig.lambda_plus).norm_sqr() * (omega - eig.lambda_minus).norm_sqr()
}

fn check_trapped(p: &SystemParams, role: Role) -> Result<(), SpectrumError> {
    let rate = match role {
        Role::AtomicType => p.gamma(),
        Role::CavityType => p.kappa(),
    };
    if p.g() == 0.0 && rate == 0.0 {
        Err(SpectrumError::TrappedExcitation)
    } else {
        Ok(())
    }
}

/// Atomic-type closed forms with the parameter-only prefactors cached.
#[derive(Debug, Clone, Copy)]
pub struct ClosedFormSpectra {
    params: SystemParams,
    eig: EigenResult,
    at_prefactor: f64,
    cav_prefactor: f64,
    /// `κ = g = 0`: the atomic spectrum is the bare Lorentzian.
    bare_atom: bool,
}

impl ClosedFormSpectra {
    pub fn new(p: &SystemParams) -> Result<Self, SpectrumError> {
        check_trapped(p, Role::AtomicType)?;
        let (gamma, kappa, g, delta) = (p.gamma(), p.kappa(), p.g(), p.delta());
        let sum = kappa + gamma;
        let n = sum * sum * (4.0 * g * g + kappa * gamma) + 4.0 * kappa * gamma * delta * delta;
        let den_at = 4.0 * g * g * sum + kappa * (sum * sum + 4.0 * delta * delta);
        Ok(Self {
            params: *p,
            eig: eigenfrequencies(p),
            at_prefactor: if den_at > 0.0 {
                2.0 * n / (PI * den_at)
            } else {
                0.0
            },
            cav_prefactor: 2.0 * n / (PI * sum),
            bare_atom: den_at == 0.0,
        })
    }

    /// Same prefactors, but `D(ω)` built from the supplied roots.
    pub fn with_roots(p: &SystemParams, eig: EigenResult) -> Result<Self, SpectrumError> {
        Ok(Self {
            eig,
            ..Self::new(p)?
        })
    }

    pub fn eigen(&self) -> &EigenResult {
        &self.eig
    }

    pub fn s_at(&self, omega: f64) -> f64 {
        let p = &self.params;
        if self.bare_atom {
            let half = 0.5 * p.gamma();
            let x = omega + 0.5 * p.delta();
            return half / PI / (x * x + half * half);
        }
        let lorentz = p.kappa().powi(2) + (p.delta() - 2.0 * omega).powi(2);
        if self.at_prefactor == 0.0 || lorentz == 0.0 {
            return 0.0;
        }
        self.at_prefactor * lorentz / d_of_omega(omega, &self.eig)
    }

    pub fn s_cav(&self, omega: f64) -> f64 {
        if self.cav_prefactor == 0.0 {
            return 0.0;
        }
        self.cav_prefactor / d_of_omega(omega, &self.eig)
    }
}

pub fn s_at(omega: f64, p: &SystemParams) -> Result<f64, SpectrumError> {
    Ok(ClosedFormSpectra::new(p)?.s_at(omega))
}

pub fn s_cav(omega: f64, p: &SystemParams) -> Result<f64, SpectrumError> {
    Ok(ClosedFormSpectra::new(p)?.s_cav(omega))
}

/// Spectra seen in the atomic and cavity channels for either role.
#[derive(Debug, Clone, Copy)]
pub struct ChannelSpectra {
    inner: ClosedFormSpectra,
    role: Role,
}

impl ChannelSpectra {
    pub fn new(p: &SystemParams, role: Role) -> Result<Self, SpectrumError> {
        check_trapped(p, role)?;
        let inner = match role {
            Role::AtomicType => ClosedFormSpectra::new(p)?,
            Role::CavityType => ClosedFormSpectra::new(&p.exchanged())?,
        };
        Ok(Self { inner, role })
    }

    pub fn atom(&self, omega: f64) -> f64 {
        match self.role {
            Role::AtomicType => self.inner.s_at(omega),
            Role::CavityType => self.inner.s_cav(omega),
        }
    }

    pub fn cavity(&self, omega: f64) -> f64 {
        match self.role {
            Role::AtomicType => self.inner.s_cav(omega),
            Role::CavityType => self.inner.s_at(omega),
        }
    }
}

/// Half-width `W = |δ|/2 + 2g + 5·max(γ, κ, (γ+κ)/2)` of the default window.
pub fn default_half_window(p: &SystemParams) -> f64 {
    let broad = p.gamma().max(p.kappa()).max(0.5 * (p.gamma() + p.kappa()));
    0.5 * p.delta().abs() + 2.0 * p.g() + 5.0 * broad
}

/// `n` uniform points on `[-half_width, half_width]`.
pub fn symmetric_grid(half_width: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|k| -half_width + 2.0 * half_width * k as f64 / (n - 1) as f64)
        .collect()
}

pub fn default_frequency_grid(p: &SystemParams) -> Vec<f64> {
    symmetric_grid(default_half_window(p), DEFAULT_SPECTRUM_POINTS)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub density_at: Vec<f64>,
    pub density_cav: Vec<f64>,
    /// `P_at·S_at + P_cav·S_cav`
    pub p_omega: Vec<f64>,
    /// Trapezoid integral over the grid plus the mass beyond its ends.
    pub norm_at: f64,
    pub norm_cav: f64,
    /// Part of `norm_at`/`norm_cav` that lies outside the grid.
    pub tail_at: f64,
    pub tail_cav: f64,
    pub channel_probs: EscapeProbabilities,
    pub role: Role,
    /// Set when either norm is off by more than [`NORM_WARNING_THRESHOLD`].
    pub window_warning: bool,
}

fn tail_mass<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, scale: f64) -> f64 {
    let opts = QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-12,
        ..QuadOptions::default()
    };
    let right = quad::integrate_to_infinity(&f, hi, scale, opts).value;
    let left = quad::integrate_to_infinity(|x| f(-x), -lo, scale, opts).value;
    right + left
}

/// Mass of a density outside `[lo, hi]`, with `scale` setting the tail map.
pub fn outside_mass<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, scale: f64) -> f64 {
    tail_mass(f, lo, hi, scale)
}

/// Evaluates both channel spectra on `grid` (default window if `None`).
pub fn spectrum_grid(
    p: &SystemParams,
    role: Role,
    grid: Option<&[f64]>,
) -> Result<Spectrum, SpectrumError> {
    let spectra = ChannelSpectra::new(p, role)?;
    let omega = match grid {
        Some(g) => g.to_vec(),
        None => default_frequency_grid(p),
    };
    if omega.len() < 2 || omega.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpectrumError::BadGrid);
    }
    let probs = escape_probabilities_for(p, role)?;
    let density_at: Vec<f64> = omega.iter().map(|&w| spectra.atom(w)).collect();
    let density_cav: Vec<f64> = omega.iter().map(|&w| spectra.cavity(w)).collect();
    let p_omega = density_at
        .iter()
        .zip(&density_cav)
        .map(|(a, c)| probs.p_at * a + probs.p_cav * c)
        .collect();

    let (lo, hi) = (omega[0], omega[omega.len() - 1]);
    let scale = (0.5 * (hi - lo)).max(p.gamma() + p.kappa());
    let tail_at = tail_mass(|w| spectra.atom(w), lo, hi, scale);
    let tail_cav = tail_mass(|w| spectra.cavity(w), lo, hi, scale);
    let norm_at = quad::trapezoid(&omega, &density_at) + tail_at;
    let norm_cav = quad::trapezoid(&omega, &density_cav) + tail_cav;
    let window_warning = (norm_at - 1.0).abs() > NORM_WARNING_THRESHOLD
        || ((norm_cav - 1.0).abs() > NORM_WARNING_THRESHOLD
            && density_cav.iter().any(|&d| d > 0.0));

    Ok(Spectrum {
        omega,
        density_at,
        density_cav,
        p_omega,
        norm_at,
        norm_cav,
        tail_at,
        tail_cav,
        channel_probs: probs,
        role,
        window_warning,
    })
}

/// `∫ S dω` over `[-W, W]` by adaptive quadrature plus both tails.
pub fn integrated_norms(
    p: &SystemParams,
    role: Role,
    half_width: f64,
) -> Result<(f64, f64), SpectrumError> {
    let spectra = ChannelSpectra::new(p, role)?;
    let e = eigenfrequencies(p);
    let narrowest = (-e.lambda_plus.im).min(-e.lambda_minus.im).max(1e-300);
    let panels = ((2.0 * half_width / narrowest).ceil() as usize).clamp(8, 100_000);
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        initial_panels: panels,
        ..QuadOptions::default()
    };
    let scale = half_width.max(p.gamma() + p.kappa());
    let norm = |f: &dyn Fn(f64) -> f64| {
        quad::integrate(f, -half_width, half_width, opts).value
            + tail_mass(f, -half_width, half_width, scale)
    };
    Ok((norm(&|w| spectra.atom(w)), norm(&|w| spectra.cavity(w))))
}

/// Classical relaxation spectra of two coupled oscillators, the first one
/// initially fed:
///
/// ```text
/// S₁ ∝ |(λ₊-ω̃₂)/(λ₊-ω) - (λ₋-ω̃₂)/(λ₋-ω)|² / |λ₊-λ₋|²
/// S₂ ∝ |1/(λ₊-ω) - 1/(λ₋-ω)|² / |λ₊-λ₋|²
/// ```
///
/// Normalization constants come from residues: for poles in the lower half
/// plane `∫ dω / ((ω-z₁)(ω-z̄₂)) = 2πi / (z̄₂ - z₁)`.
#[derive(Debug, Clone, Copy)]
pub struct RelaxationSpectra {
    freqs: ComplexFrequencyPair,
    eig: EigenResult,
    degenerate: bool,
    norm1: f64,
    norm2: f64,
}

fn pair_integral(c: [Complex64; 2], poles: [Complex64; 2]) -> f64 {
    let i = Complex64::i();
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..2 {
        for k in 0..2 {
            total += c[j] * c[k].conj() * 2.0 * PI * i / (poles[k].conj() - poles[j]);
        }
    }
    total.re
}

impl RelaxationSpectra {
    pub fn new(freqs: &ComplexFrequencyPair, g: f64) -> Self {
        let eig = eigenfrequencies_direct(freqs, g);
        let (lp, lm) = (eig.lambda_plus, eig.lambda_minus);
        let split = lp - lm;
        let scale = (lp + lm).norm().max(g).max(f64::MIN_POSITIVE);
        let degenerate = split.norm() < DEGENERACY_TOL * scale;
        let (norm1, norm2) = if degenerate {
            // λ₊ = λ₋ = λ, y = -Im λ:
            // ∫|ω-a|²/|ω-λ|⁴ = π/y + (2y·Im(λ-a) + |λ-a|²)π/(2y³), ∫1/|ω-λ|⁴ = π/(2y³).
            let y = -lp.im;
            let d = lp - freqs.second;
            let quartic = PI / (2.0 * y.powi(3));
            (PI / y + (2.0 * y * d.im + d.norm_sqr()) * quartic, quartic)
        } else {
            let poles = [lp, lm];
            let c1 = [-(lp - freqs.second) / split, (lm - freqs.second) / split];
            let c2 = [-1.0 / split, 1.0 / split];
            (pair_integral(c1, poles), pair_integral(c2, poles))
        };
        Self {
            freqs: *freqs,
            eig,
            degenerate,
            norm1,
            norm2: if g == 0.0 { 0.0 } else { norm2 },
        }
    }

    pub fn s1_raw(&self, omega: f64) -> f64 {
        let (lp, lm) = (self.eig.lambda_plus, self.eig.lambda_minus);
        if self.degenerate {
            return (self.freqs.second - omega).norm_sqr() / (lp - omega).norm_sqr().powi(2);
        }
        let w2 = self.freqs.second;
        ((lp - w2) / (lp - omega) - (lm - w2) / (lm - omega)).norm_sqr() / (lp - lm).norm_sqr()
    }

    /// Zero when `g = 0`: the second oscillator is never fed.
    pub fn s2_raw(&self, omega: f64) -> f64 {
        if self.norm2 == 0.0 {
            return 0.0;
        }
        let (lp, lm) = (self.eig.lambda_plus, self.eig.lambda_minus);
        if self.degenerate {
            return 1.0 / (lp - omega).norm_sqr().powi(2);
        }
        (1.0 / (lp - omega) - 1.0 / (lm - omega)).norm_sqr() / (lp - lm).norm_sqr()
    }

    pub fn s1(&self, omega: f64) -> f64 {
        self.s1_raw(omega) / self.norm1
    }

    /// `None` when the second oscillator is never populated.
    pub fn s2(&self, omega: f64) -> Option<f64> {
        (self.norm2 > 0.0).then(|| self.s2_raw(omega) / self.norm2)
    }

    pub fn second_populated(&self) -> bool {
        self.norm2 > 0.0
    }
}

pub fn relaxation_spectra_classical(freqs: &ComplexFrequencyPair, g: f64) -> RelaxationSpectra {
    RelaxationSpectra::new(freqs, g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrivenResponse {
    pub omega_drive: f64,
    pub f: f64,
    pub role: Role,
    /// Amplitude of the driven oscillator.
    pub alpha_w: Complex64,
    /// Amplitude of the partner oscillator.
    pub beta_w: Complex64,
    /// `γ|σ_ω|²`
    pub power_at: f64,
    /// `κ|a_ω|²`
    pub power_cav: f64,
    /// `f(x_ω + x_ω*)` for the driven amplitude `x_ω`.
    pub power_absorbed: f64,
    pub residual: f64,
    /// Population above [`LOW_EXCITATION_LIMIT`]; the linear response is then unreliable.
    pub saturation_warning: bool,
}

/// Steady state under a weak drive `f e^{-iωt}` on the oscillator selected by `role`:
/// `α_ω = i(ω-ω̃₂)f / ((ω-λ₊)(ω-λ₋))`, `β_ω = -gf / ((ω-λ₊)(ω-λ₋))`.
pub fn driven_response(p: &SystemParams, role: Role, omega_drive: f64, f: f64) -> DrivenResponse {
    let freqs = crate::model::complex_frequencies(p, role);
    let eig = eigenfrequencies_direct(&freqs, p.g());
    driven_with(p, role, &freqs, &eig, omega_drive, f)
}

/// Sweep of [`driven_response`] sharing one root computation.
pub fn driven_sweep(p: &SystemParams, role: Role, omegas: &[f64], f: f64) -> Vec<DrivenResponse> {
    let freqs = crate::model::complex_frequencies(p, role);
    let eig = eigenfrequencies_direct(&freqs, p.g());
    omegas
        .iter()
        .map(|&w| driven_with(p, role, &freqs, &eig, w, f))
        .collect()
}

fn driven_with(
    p: &SystemParams,
    role: Role,
    freqs: &ComplexFrequencyPair,
    eig: &EigenResult,
    omega: f64,
    f: f64,
) -> DrivenResponse {
    let poles = (omega - eig.lambda_plus) * (omega - eig.lambda_minus);
    let alpha_w = Complex64::i() * (omega - freqs.second) * f / poles;
    let beta_w = -p.g() * f / poles;
    let (sigma, cavity) = match role {
        Role::AtomicType => (alpha_w, beta_w),
        Role::CavityType => (beta_w, alpha_w),
    };
    let power_at = p.gamma() * sigma.norm_sqr();
    let power_cav = p.kappa() * cavity.norm_sqr();
    let power_absorbed = 2.0 * f * alpha_w.re;
    DrivenResponse {
        omega_drive: omega,
        f,
        role,
        alpha_w,
        beta_w,
        power_at,
        power_cav,
        power_absorbed,
        residual: power_at + power_cav - power_absorbed,
        saturation_warning: alpha_w.norm_sqr().max(beta_w.norm_sqr()) > LOW_EXCITATION_LIMIT,
    }
}

/// Quadrants of the good-emitter/good-cavity × atomic/cavity-type table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quadrant {
    A,
    B,
    C,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scenario {
    pub params: SystemParams,
    pub role: Role,
}

impl Scenario {
    pub fn new(params: SystemParams, role: Role) -> Self {
        Self { params, role }
    }

    /// `None` when `γ = κ`.
    pub fn quadrant(&self) -> Option<Quadrant> {
        match (classify_regime(&self.params).quality, self.role) {
            (Quality::GoodEmitter, Role::AtomicType) => Some(Quadrant::A),
            (Quality::GoodEmitter, Role::CavityType) => Some(Quadrant::B),
            (Quality::GoodCavity, Role::AtomicType) => Some(Quadrant::C),
            (Quality::GoodCavity, Role::CavityType) => Some(Quadrant::D),
            (Quality::Balanced, _) => None,
        }
    }
}

/// Swaps `γ ↔ κ`, negates `δ` and swaps the excited role; the spectra of
/// the result equal those of the input with the atom and cavity channels
/// interchanged. A ↔ D and B ↔ C.
pub fn role_exchange(s: &Scenario) -> Scenario {
    Scenario {
        params: s.params.exchanged(),
        role: s.role.swapped(),
    }
}

/// Position of the largest sample.
pub fn argmax(x: &[f64], y: &[f64]) -> f64 {
    let k = y
        .iter()
        .enumerate()
        .fold(0, |best, (k, v)| if *v > y[best] { k } else { best });
    x[k]
}

/// Full width at half maximum of the peak of `f` at `peak`, located by
/// outward doubling and bisection. `None` if no half-maximum crossing lies
/// within `max_extent` on either side.
pub fn full_width_half_max<F: Fn(f64) -> f64>(f: F, peak: f64, max_extent: f64) -> Option<f64> {
    let half = 0.5 * f(peak);
    let crossing = |dir: f64| -> Option<f64> {
        let mut inner = 0.0;
        let mut outer = max_extent * 1e-9;
        while f(peak + dir * outer) > half {
            inner = outer;
            outer *= 2.0;
            if outer > max_extent {
                return None;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (inner + outer);
            if f(peak + dir * mid) > half {
                inner = mid;
            } else {
                outer = mid;
            }
        }
        Some(0.5 * (inner + outer))
    };
    Some(crossing(1.0)? + crossing(-1.0)?)
}

/// Local maximum of `f` near `start` by golden-section search on `[start-h, start+h]`.
pub fn refine_peak<F: Fn(f64) -> f64>(f: F, start: f64, h: f64) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (start - h, start + h);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    for _ in 0..200 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{complex_frequencies, validate_params};

    fn params(gamma: f64, kappa: f64, g: f64, delta: f64) -> SystemParams {
        validate_params(gamma, kappa, g, delta).unwrap()
    }

    #[test]
    fn d_examples() {
        let e = eigenfrequencies(&params(0.2, 0.2, 1.0, 0.0));
        let d = d_of_omega(e.lambda_plus.re, &e);
        assert!((d - 0.6416).abs() < 1e-12);

        let (gamma, kappa) = (0.7, 1.3);
        let e = eigenfrequencies(&params(gamma, kappa, 0.0, 0.0));
        assert!((d_of_omega(0.0, &e) - gamma * gamma * kappa * kappa).abs() < 1e-14);
    }

    #[test]
    fn uncoupled_atom_is_lorentzian() {
        for (gamma, kappa, delta) in [(0.5, 2.0, 3.0), (1.0, 0.0, -2.0)] {
            let p = params(gamma, kappa, 0.0, delta);
            let s = ClosedFormSpectra::new(&p).unwrap();
            for k in 0..50 {
                let w = -5.0 + 0.2 * k as f64;
                let lorentz =
                    (gamma / (2.0 * PI)) / ((w + delta / 2.0).powi(2) + gamma * gamma / 4.0);
                assert!((s.s_at(w) - lorentz).abs() < 1e-12 * lorentz.max(1.0));
            }
            assert!((s.s_at(-delta / 2.0) - 2.0 / (PI * gamma)).abs() < 1e-12);
        }
    }

    #[test]
    fn trapped_excitation_rejected() {
        let p = params(0.0, 1.0, 0.0, 0.0);
        assert_eq!(s_at(0.0, &p).unwrap_err(), SpectrumError::TrappedExcitation);
        assert!(spectrum_grid(&p, Role::CavityType, None).is_ok());
    }

    #[test]
    fn cit_dip_in_atomic_spectrum() {
        let s = ClosedFormSpectra::new(&params(5.0, 0.05, 1.0, 0.0)).unwrap();
        let h = 1e-3;
        assert!(s.s_at(0.0) < s.s_at(h) && s.s_at(0.0) < s.s_at(-h));
    }

    #[test]
    fn vacuum_rabi_doublet() {
        // Roots ±A - iB; 1/(|ω-λ₊|²|ω-λ₋|²) peaks at ω = ±√(A² - B²), which
        // sits slightly inside ±g.
        let p = params(0.05, 0.25, 1.0, 0.0);
        let sp = spectrum_grid(&p, Role::AtomicType, None).unwrap();
        let step = sp.omega[1] - sp.omega[0];
        let mid = sp.omega.len() / 2;
        let left = argmax(&sp.omega[..mid], &sp.density_cav[..mid]);
        let right = argmax(&sp.omega[mid..], &sp.density_cav[mid..]);
        let e = eigenfrequencies(&p);
        let peak = (e.lambda_plus.re.powi(2) - e.lambda_plus.im.powi(2)).sqrt();
        assert!(
            (right - peak).abs() <= step && (left + peak).abs() <= step,
            "{left} {right} {peak}"
        );
        assert!(((right - left) - 2.0).abs() < 0.01 * 2.0);
        assert!((argmax(&sp.omega[mid..], &sp.density_at[mid..]) - 1.0).abs() < 0.05);
    }

    #[test]
    fn detuned_cavity_and_atom_peaks() {
        let good_cavity = ClosedFormSpectra::new(&params(5.0, 0.05, 1.0, 10.0)).unwrap();
        let grid = symmetric_grid(32.0, 8192);
        let vals: Vec<f64> = grid.iter().map(|&w| good_cavity.s_cav(w)).collect();
        assert!((argmax(&grid, &vals) - 5.0).abs() < 0.2);

        let good_emitter = ClosedFormSpectra::new(&params(0.05, 5.0, 1.0, 10.0)).unwrap();
        let vals: Vec<f64> = grid.iter().map(|&w| good_emitter.s_cav(w)).collect();
        assert!((argmax(&grid, &vals) + 5.0).abs() < 0.2);
    }

    #[test]
    fn cavity_spectrum_even_for_equal_widths() {
        let s = ClosedFormSpectra::new(&params(0.4, 0.4, 1.3, 0.0)).unwrap();
        for k in 0..40 {
            let w = 0.1 * k as f64;
            assert!((s.s_cav(w) - s.s_cav(-w)).abs() <= 1e-14 * s.s_cav(w));
        }
    }

    #[test]
    fn figure_three_norms_on_default_grid() {
        for (kappa, delta) in [(5.0, 0.0), (0.25, 0.0), (5.0, 10.0), (0.25, 10.0)] {
            let sp =
                spectrum_grid(&params(0.05, kappa, 1.0, delta), Role::AtomicType, None).unwrap();
            assert!(
                (sp.norm_at - 1.0).abs() <= 1e-6,
                "kappa {kappa} delta {delta}: {}",
                sp.norm_at
            );
            assert!(
                (sp.norm_cav - 1.0).abs() <= 1e-6,
                "kappa {kappa} delta {delta}: {}",
                sp.norm_cav
            );
            assert!(!sp.window_warning);
            let total = sp.channel_probs.p_at * sp.norm_at + sp.channel_probs.p_cav * sp.norm_cav;
            assert!((total - 1.0).abs() < 2e-6);
        }
    }

    #[test]
    fn narrow_grid_warns() {
        let p = params(1.0, 1.0, 1.0, 0.0);
        let grid = symmetric_grid(0.5, 101);
        let sp = spectrum_grid(&p, Role::AtomicType, Some(&grid)).unwrap();
        // Tails are added back, so the flag only trips on poor resolution.
        assert!((sp.norm_at - 1.0).abs() < 1e-3);
        let coarse = symmetric_grid(50.0, 5);
        assert!(
            spectrum_grid(&p, Role::AtomicType, Some(&coarse))
                .unwrap()
                .window_warning
        );
        assert_eq!(
            spectrum_grid(&p, Role::AtomicType, Some(&[1.0, 0.0])),
            Err(SpectrumError::BadGrid)
        );
    }

    #[test]
    fn relaxation_spectra_match_closed_forms() {
        for (gamma, kappa, g, delta) in [
            (5.0, 0.05, 1.0, 0.0),
            (0.25, 0.05, 1.0, 10.0),
            (0.05, 5.0, 1.0, 0.0),
            (0.2, 1.0, 0.2, 0.0),
        ] {
            let p = params(gamma, kappa, g, delta);
            let rel = relaxation_spectra_classical(&complex_frequencies(&p, Role::AtomicType), g);
            let cf = ClosedFormSpectra::new(&p).unwrap();
            for k in 0..2001 {
                let w = -15.0 + 0.015 * k as f64;
                let (a, b) = (rel.s1(w), cf.s_at(w));
                assert!(
                    (a - b).abs() <= 1e-10 * b.max(1e-3),
                    "{p} ω={w}: {a} vs {b}"
                );
                let (a, b) = (rel.s2(w).unwrap(), cf.s_cav(w));
                assert!(
                    (a - b).abs() <= 1e-10 * b.max(1e-3),
                    "{p} ω={w}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn cavity_type_relaxation_has_reflection_dip() {
        // Broad cavity driven, narrow atom attached.
        let p = params(0.05, 5.0, 1.0, 0.0);
        let rel = relaxation_spectra_classical(&complex_frequencies(&p, Role::CavityType), 1.0);
        let h = 1e-3;
        assert!(rel.s1(0.0) < rel.s1(h) && rel.s1(0.0) < rel.s1(-h));
    }

    #[test]
    fn uncoupled_second_oscillator_flagged() {
        let p = params(1.0, 1.0, 0.0, 0.0);
        let rel = relaxation_spectra_classical(&complex_frequencies(&p, Role::AtomicType), 0.0);
        assert!(!rel.second_populated());
        assert_eq!(rel.s2_raw(0.3), 0.0);
        assert_eq!(rel.s2(0.3), None);
    }

    #[test]
    fn driven_examples() {
        let p = params(5.0, 0.05, 1.0, 0.0);
        let r = driven_response(&p, Role::AtomicType, 0.3, 0.0);
        assert_eq!(
            (r.power_at, r.power_cav, r.power_absorbed, r.residual),
            (0.0, 0.0, 0.0, 0.0)
        );

        let (gamma, delta, f) = (0.8, 2.0, 0.01);
        let p = params(gamma, 0.3, 0.0, delta);
        let r = driven_response(&p, Role::AtomicType, -delta / 2.0, f);
        assert!((r.alpha_w.norm_sqr() - 4.0 * f * f / (gamma * gamma)).abs() < 1e-18);
        assert!((r.power_absorbed - gamma * r.alpha_w.norm_sqr()).abs() < 1e-18);
        assert!(!r.saturation_warning);
        assert!(driven_response(&p, Role::AtomicType, -delta / 2.0, 1.0).saturation_warning);
    }

    #[test]
    fn driven_power_matches_weighted_spectra() {
        let p = params(5.0, 0.05, 1.0, 0.0);
        let probs = escape_probabilities_for(&p, Role::AtomicType).unwrap();
        let cf = ClosedFormSpectra::new(&p).unwrap();
        let f = 0.01;
        // Spectral densities are per unit angular frequency, hence the 2π.
        for k in 0..400 {
            let w = -10.0 + 0.05 * k as f64;
            let r = driven_response(&p, Role::AtomicType, w, f);
            let cav = 2.0 * PI * f * f * probs.p_cav * cf.s_cav(w);
            let at = 2.0 * PI * f * f * probs.p_at * cf.s_at(w);
            assert!(
                (r.power_cav - cav).abs() <= 1e-10 * cav,
                "ω={w} {} {}",
                r.power_cav,
                cav
            );
            assert!((r.power_at - at).abs() <= 1e-10 * at, "ω={w}");
        }
    }

    #[test]
    fn quadrants_and_involution() {
        let a = Scenario::new(params(0.05, 5.0, 1.0, 0.0), Role::AtomicType);
        assert_eq!(a.quadrant(), Some(Quadrant::A));
        let d = role_exchange(&a);
        assert_eq!(d.quadrant(), Some(Quadrant::D));
        assert_eq!(role_exchange(&d), a);
        let b = Scenario::new(params(0.05, 5.0, 1.0, 2.0), Role::CavityType);
        assert_eq!(role_exchange(&b).quadrant(), Some(Quadrant::C));
        assert_eq!(
            Scenario::new(params(1.0, 1.0, 1.0, 0.0), Role::AtomicType).quadrant(),
            None
        );
    }

    #[test]
    fn exchanged_scenario_swaps_channels() {
        let s = Scenario::new(params(0.05, 5.0, 1.0, 10.0), Role::AtomicType);
        let x = role_exchange(&s);
        let a = ChannelSpectra::new(&s.params, s.role).unwrap();
        let b = ChannelSpectra::new(&x.params, x.role).unwrap();
        for k in 0..500 {
            let w = -20.0 + 0.08 * k as f64;
            assert!((a.atom(w) - b.cavity(w)).abs() <= 1e-12 * a.atom(w));
            assert!((a.cavity(w) - b.atom(w)).abs() <= 1e-12 * a.cavity(w));
        }
    }

    #[test]
    fn fwhm_of_lorentzian() {
        let w = 0.3;
        let width = full_width_half_max(|x| 1.0 / (x * x + w * w), 0.0, 100.0).unwrap();
        assert!((width - 2.0 * w).abs() < 1e-12);
        assert!((refine_peak(|x| -(x - 0.123).powi(2), 0.0, 1.0) - 0.123).abs() < 1e-8);
    }
}
