//! Brute-force checks that share nothing with the closed forms beyond the
//! raw parameters: a Lindblad integrator on the three states
//! `|e,0⟩, |g,1⟩, |g,0⟩`, discretized Fourier integrals of sampled
//! amplitudes, and two-time correlations from the quantum regression rule.
//!
//! Hamiltonian in the mean-frequency frame, basis order `(|e,0⟩, |g,1⟩, |g,0⟩)`:
//!
//! ```text
//! H = -δ/2 σ₊σ₋ + δ/2 a†a + i g (a†σ₋ - σ₊a)
//! ```
//!
//! The phase of the coupling is chosen so that `⟨σ₋⟩` and `⟨a⟩` follow the
//! Heisenberg equations `σ₋' = (iδ/2 - γ/2)σ₋ + gσ_z a`, `a' = (-iδ/2 - κ/2)a + gσ₋`.
//! With it, the element `ρ[g,1][e,0]` equals `⟨σ₊a⟩ = α*β`. The more common
//! `g(σ₊a + a†σ₋)` differs by the unitary `a → ia`, which leaves every
//! population and spectrum unchanged and multiplies `⟨σ₊a⟩` by `i`.
//! Collapse operators are `√γ σ₋` and `√κ a`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{ClosedFormAmplitudes, TimeTrace, TraceSource};
use crate::eigen::eigenfrequencies;
use crate::model::{complex_frequencies, Role, SystemParams};
use crate::ode::{OdeError, Rk4Doubling};
use crate::quad;

/// Amplitude-squared level the Fourier horizon has to reach.
pub const HORIZON_RESIDUAL: f64 = 1e-14;
/// Sampling step bound `dt ≤ 0.01 / max(|Re λ| + |Im λ|)`.
pub const SAMPLING_FACTOR: f64 = 0.01;
pub const LINDBLAD_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(
        "horizon {given} too short: |α(T)|² + |β(T)|² = {residual:e}; need about T = {required}"
    )]
    InsufficientHorizon {
        given: f64,
        required: f64,
        residual: f64,
    },
    #[error("density matrix invariant violated: {0}")]
    InvalidState(String),
    #[error("spectra have disjoint frequency grids")]
    DisjointGrids,
    #[error("frequency grid must be strictly increasing with at least two points")]
    BadGrid,
    #[error("the initially excited mode is lossless and uncoupled")]
    TrappedExcitation,
    #[error(transparent)]
    Integration(#[from] OdeError),
}

type C = Complex64;
type Mat = [[C; 3]; 3];

const ZERO: C = C::new(0.0, 0.0);
const E0: usize = 0;
const G1: usize = 1;
const G0: usize = 2;

fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let mut out = [[ZERO; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn adjoint(a: &Mat) -> Mat {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i].conj()))
}

fn flatten(a: &Mat) -> [C; 9] {
    std::array::from_fn(|k| a[k / 3][k % 3])
}

fn unflatten(v: &[C; 9]) -> Mat {
    std::array::from_fn(|i| std::array::from_fn(|j| v[3 * i + j]))
}

/// Eigenvalues of a Hermitian 3×3 matrix from its real characteristic cubic.
fn hermitian_eigenvalues(m: &Mat) -> [f64; 3] {
    let (a, b, c) = (m[0][0].re, m[1][1].re, m[2][2].re);
    let (d, e, f) = (m[0][1], m[1][2], m[0][2]);
    let trace = a + b + c;
    let minors = a * b + b * c + a * c - d.norm_sqr() - e.norm_sqr() - f.norm_sqr();
    let det = a * b * c + 2.0 * (d * e * f.conj()).re
        - a * e.norm_sqr()
        - b * f.norm_sqr()
        - c * d.norm_sqr();
    // λ = t/3 + 2√(p/3) cos(·) with the depressed cubic x³ - p x - q = 0.
    let shift = trace / 3.0;
    let p = shift * shift * 3.0 - minors;
    let q = det - minors * shift + 2.0 * shift.powi(3);
    if p <= 1e-300 {
        return [shift; 3];
    }
    let r = (p / 3.0).sqrt();
    let arg = (q / (2.0 * r * r * r)).clamp(-1.0, 1.0);
    let phi = arg.acos() / 3.0;
    std::array::from_fn(|k| shift + 2.0 * r * (phi - 2.0 * PI * k as f64 / 3.0).cos())
}

fn shifted_cholesky_succeeds(m: &Mat, shift: f64) -> bool {
    let mut l = [[ZERO; 3]; 3];
    for j in 0..3 {
        let d = m[j][j].re + shift - (0..j).map(|k| l[j][k].norm_sqr()).sum::<f64>();
        if d <= 0.0 || !d.is_finite() {
            return false;
        }
        l[j][j] = C::new(d.sqrt(), 0.0);
        for i in j + 1..3 {
            let s: C = (0..j).map(|k| l[i][k] * l[j][k].conj()).sum();
            l[i][j] = (m[i][j] - s) / l[j][j].re;
        }
    }
    true
}

/// Density matrix over `(|e,0⟩, |g,1⟩, |g,0⟩)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityMatrix3 {
    pub m: [[Complex64; 3]; 3],
}

impl DensityMatrix3 {
    pub fn new(m: [[Complex64; 3]; 3]) -> Result<Self, OracleError> {
        let rho = Self { m };
        rho.check()?;
        Ok(rho)
    }

    fn basis(k: usize) -> Self {
        let mut m = [[ZERO; 3]; 3];
        m[k][k] = C::new(1.0, 0.0);
        Self { m }
    }

    /// `|e,0⟩⟨e,0|`
    pub fn excited_atom() -> Self {
        Self::basis(E0)
    }

    /// `|g,1⟩⟨g,1|`
    pub fn one_photon() -> Self {
        Self::basis(G1)
    }

    pub fn ground() -> Self {
        Self::basis(G0)
    }

    pub fn for_role(role: Role) -> Self {
        match role {
            Role::AtomicType => Self::excited_atom(),
            Role::CavityType => Self::one_photon(),
        }
    }

    /// `⟨σ₊σ₋⟩`, the `|e,0⟩` population.
    pub fn pop_atom(&self) -> f64 {
        self.m[E0][E0].re
    }

    /// `⟨a†a⟩`, the `|g,1⟩` population.
    pub fn pop_cav(&self) -> f64 {
        self.m[G1][G1].re
    }

    /// `⟨σ₊a⟩ = Tr(ρ |e,0⟩⟨g,1|) = ρ[g,1][e,0]`.
    pub fn coherence(&self) -> Complex64 {
        self.m[G1][E0]
    }

    pub fn trace(&self) -> f64 {
        (0..3).map(|k| self.m[k][k].re).sum()
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        hermitian_eigenvalues(&self.m)
    }

    fn check(&self) -> Result<(), OracleError> {
        let herm = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| (self.m[i][j] - self.m[j][i].conj()).norm())
            .fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(OracleError::InvalidState(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(OracleError::InvalidState(format!("trace {tr}")));
        }
        // The trigonometric eigenvalues lose about half the digits near a
        // repeated root (pure states), so positivity is decided by a
        // Cholesky factorization of ρ + tol·I.
        if !shifted_cholesky_succeeds(&self.m, POSITIVITY_TOL) {
            let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
            return Err(OracleError::InvalidState(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }
}

/// Lindblad generator for fixed parameters, acting on any 3×3 operator.
#[derive(Debug, Clone, Copy)]
struct Lindbladian {
    h: Mat,
    jumps: [(f64, Mat); 2],
}

impl Lindbladian {
    fn new(p: &SystemParams) -> Self {
        let mut h = [[ZERO; 3]; 3];
        h[E0][E0] = C::new(-0.5 * p.delta(), 0.0);
        h[G1][G1] = C::new(0.5 * p.delta(), 0.0);
        // i g (a†σ₋ - σ₊a): a†σ₋ = |g,1⟩⟨e,0|, σ₊a = |e,0⟩⟨g,1|
        h[G1][E0] = C::new(0.0, p.g());
        h[E0][G1] = C::new(0.0, -p.g());
        let mut sigma = [[ZERO; 3]; 3];
        sigma[G0][E0] = C::new(1.0, 0.0);
        let mut a = [[ZERO; 3]; 3];
        a[G0][G1] = C::new(1.0, 0.0);
        Self {
            h,
            jumps: [(p.gamma(), sigma), (p.kappa(), a)],
        }
    }

    fn apply(&self, rho: &Mat) -> Mat {
        let hr = mat_mul(&self.h, rho);
        let rh = mat_mul(rho, &self.h);
        let mut out: Mat = std::array::from_fn(|i| {
            std::array::from_fn(|j| C::new(0.0, -1.0) * (hr[i][j] - rh[i][j]))
        });
        for (rate, l) in &self.jumps {
            if *rate == 0.0 {
                continue;
            }
            let ld = adjoint(l);
            let ldl = mat_mul(&ld, l);
            let sandwich = mat_mul(&mat_mul(l, rho), &ld);
            let left = mat_mul(&ldl, rho);
            let right = mat_mul(rho, &ldl);
            for i in 0..3 {
                for j in 0..3 {
                    out[i][j] += *rate * (sandwich[i][j] - 0.5 * (left[i][j] + right[i][j]));
                }
            }
        }
        out
    }

    fn rate_scale(p: &SystemParams) -> f64 {
        p.gamma()
            .max(p.kappa())
            .max(p.g())
            .max(p.delta().abs())
            .max(f64::MIN_POSITIVE)
    }
}

fn evolve_operator(
    p: &SystemParams,
    start: &Mat,
    t_grid: &[f64],
    density: bool,
) -> Result<Vec<Mat>, OracleError> {
    let l = Lindbladian::new(p);
    let rhs = |_t: f64, y: &[C; 9]| flatten(&l.apply(&unflatten(y)));
    let spacing = t_grid
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let first = (0.05 / Lindbladian::rate_scale(p)).min(if spacing > 0.0 {
        spacing
    } else {
        f64::INFINITY
    });
    let mut violation = None;
    let states = Rk4Doubling {
        tol: LINDBLAD_TOL,
        ..Rk4Doubling::default()
    }
    .integrate_to_grid(rhs, flatten(start), t_grid, first, |t, y| {
        if !density {
            return Ok(());
        }
        let m = unflatten(y);
        let herm: Mat =
            std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (m[i][j] + m[j][i].conj())));
        *y = flatten(&herm);
        if let Err(e) = (DensityMatrix3 { m: herm }).check() {
            violation = Some(e.to_string());
            return Err(OdeError::Invariant {
                t,
                reason: e.to_string(),
            });
        }
        Ok(())
    });
    match (states, violation) {
        (_, Some(reason)) => Err(OracleError::InvalidState(reason)),
        (Ok(s), None) => Ok(s.iter().map(unflatten).collect()),
        (Err(e), None) => Err(e.into()),
    }
}

/// Integrates the master equation from `rho0` and records `ρ(t)` on `t_grid`.
/// Each accepted step is re-Hermitized and checked against the
/// [`DensityMatrix3`] invariants.
pub fn lindblad_evolve(
    p: &SystemParams,
    rho0: &DensityMatrix3,
    t_grid: &[f64],
) -> Result<Vec<DensityMatrix3>, OracleError> {
    rho0.check()?;
    Ok(evolve_operator(p, &rho0.m, t_grid, true)?
        .into_iter()
        .map(|m| DensityMatrix3 { m })
        .collect())
}

/// Populations and coherence of a Lindblad run as a [`TimeTrace`].
pub fn lindblad_trace(
    p: &SystemParams,
    role: Role,
    t_grid: &[f64],
) -> Result<TimeTrace, OracleError> {
    let states = lindblad_evolve(p, &DensityMatrix3::for_role(role), t_grid)?;
    Ok(TimeTrace::assemble(
        p,
        t_grid.to_vec(),
        states.iter().map(DensityMatrix3::pop_atom).collect(),
        states.iter().map(DensityMatrix3::pop_cav).collect(),
        states.iter().map(DensityMatrix3::coherence).collect(),
        TraceSource::Lindblad,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericSpectrum {
    pub omega: Vec<f64>,
    pub density: Vec<f64>,
    pub horizon: f64,
    pub dt: f64,
    /// Trapezoid integral of `density` over the grid.
    pub window_mass: f64,
    /// `false` when the channel never carries any amplitude (`g = 0`).
    pub normalizable: bool,
}

/// Time sampling for a discretized Fourier integral.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FourierWindow {
    /// Overrides the automatic horizon; rejected if too short.
    pub horizon: Option<f64>,
    /// Overrides the automatic step (capped at the sampling bound).
    pub dt: Option<f64>,
}

fn ensure_escape(p: &SystemParams, role: Role) -> Result<(), OracleError> {
    let rate = match role {
        Role::AtomicType => p.gamma(),
        Role::CavityType => p.kappa(),
    };
    if p.g() == 0.0 && rate == 0.0 {
        Err(OracleError::TrappedExcitation)
    } else {
        Ok(())
    }
}

/// Sampling step and horizon for the amplitudes of `(p, role)`.
pub fn fourier_sampling(
    p: &SystemParams,
    role: Role,
    window: FourierWindow,
) -> Result<(f64, f64), OracleError> {
    ensure_escape(p, role)?;
    let amp = ClosedFormAmplitudes::new(&complex_frequencies(p, role), p.g());
    let e = eigenfrequencies(p);
    let fastest = e
        .roots()
        .iter()
        .map(|l| l.re.abs() + l.im.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let dt_max = SAMPLING_FACTOR / fastest;
    let dt = window.dt.map_or(dt_max, |d| d.min(dt_max));
    let residual = |t: f64| {
        let (a, b) = amp.at(t);
        a.norm_sqr() + b.norm_sqr()
    };
    // Weights of zero-amplitude roots (g = 0) must not set the horizon.
    let rate = if p.g() == 0.0 {
        match role {
            Role::AtomicType => p.gamma(),
            Role::CavityType => p.kappa(),
        }
    } else {
        2.0 * e
            .roots()
            .iter()
            .map(|l| -l.im)
            .fold(f64::INFINITY, f64::min)
    };
    let mut required = -HORIZON_RESIDUAL.ln() / rate;
    while residual(required) >= HORIZON_RESIDUAL {
        required *= 1.25;
    }
    let horizon = match window.horizon {
        Some(t) => {
            let r = residual(t);
            if r >= HORIZON_RESIDUAL {
                return Err(OracleError::InsufficientHorizon {
                    given: t,
                    required,
                    residual: r,
                });
            }
            t
        }
        None => required,
    };
    Ok((dt, horizon))
}

const LANES: usize = 16;

/// Work (samples × frequencies) above which a uniform frequency grid is
/// evaluated by the chirp-z transform instead of direct summation.
const CHIRP_Z_THRESHOLD: usize = 1 << 22;

/// `Σ_k w_k x_k e^{±iω t_k}` at every `ω`, for uniformly spaced samples
/// with trapezoid weights.
fn fourier_sums(samples: &[C], dt: f64, omegas: &[f64], sign: f64) -> Vec<C> {
    match uniform_step(omegas) {
        Some(step) if samples.len() * omegas.len() > CHIRP_Z_THRESHOLD => {
            fourier_sums_chirp_z(samples, dt, omegas[0], step, omegas.len(), sign)
        }
        _ => fourier_sums_direct(samples, dt, omegas, sign),
    }
}

fn uniform_step(omegas: &[f64]) -> Option<f64> {
    let m = omegas.len();
    if m < 2 {
        return None;
    }
    let step = (omegas[m - 1] - omegas[0]) / (m - 1) as f64;
    let scale = omegas[0].abs().max(omegas[m - 1].abs());
    let uniform = omegas
        .iter()
        .enumerate()
        .all(|(j, w)| (w - (omegas[0] + j as f64 * step)).abs() <= 1e-12 * scale);
    uniform.then_some(step)
}

/// Horner's rule in `e^{±iω dt}`; several frequencies share each pass
/// over the samples.
fn fourier_sums_direct(samples: &[C], dt: f64, omegas: &[f64], sign: f64) -> Vec<C> {
    let n = samples.len();
    if n == 0 {
        return vec![ZERO; omegas.len()];
    }
    let weight = |k: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
    let xr: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(k, x)| x.re * weight(k))
        .collect();
    let xi: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(k, x)| x.im * weight(k))
        .collect();
    let mut out = Vec::with_capacity(omegas.len());
    for block in omegas.chunks(LANES) {
        let mut zr = [0.0; LANES];
        let mut zi = [0.0; LANES];
        for (l, &w) in block.iter().enumerate() {
            (zi[l], zr[l]) = (sign * w * dt).sin_cos();
        }
        let mut ar = [0.0; LANES];
        let mut ai = [0.0; LANES];
        for k in (0..n).rev() {
            let (r, i) = (xr[k], xi[k]);
            for l in 0..LANES {
                let re = ar[l] * zr[l] - ai[l] * zi[l] + r;
                let im = ar[l] * zi[l] + ai[l] * zr[l] + i;
                ar[l] = re;
                ai[l] = im;
            }
        }
        out.extend((0..block.len()).map(|l| C::new(ar[l], ai[l]) * dt));
    }
    out
}

/// The same sums on the grid `ω_j = ω₀ + jΔω` by Bluestein's identity
/// `jk = (j² + k² - (j-k)²)/2`, which turns them into one convolution.
fn fourier_sums_chirp_z(
    samples: &[C],
    dt: f64,
    omega0: f64,
    step: f64,
    m: usize,
    sign: f64,
) -> Vec<C> {
    let n = samples.len();
    if n == 0 {
        return vec![ZERO; m];
    }
    let theta = sign * step * dt;
    // W^{q²/2} with W = e^{iθ}; q² is exact in f64 for any realistic length.
    let chirp = |q: usize| C::from_polar(1.0, 0.5 * theta * (q as f64) * (q as f64));
    let len = (n + m - 1).next_power_of_two();
    let mut planner = rustfft::FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);

    let mut a = vec![ZERO; len];
    for (k, x) in samples.iter().enumerate() {
        let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        let shift = C::from_polar(1.0, sign * omega0 * k as f64 * dt);
        a[k] = x * w * shift * chirp(k);
    }
    // b[d] = W^{-d²/2} for d = j - k in (-(n-1), m-1), stored circularly.
    let mut b = vec![ZERO; len];
    for (d, cell) in b.iter_mut().enumerate().take(m) {
        *cell = chirp(d).conj();
    }
    for d in 1..n {
        b[len - d] = chirp(d).conj();
    }
    forward.process(&mut a);
    forward.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inverse.process(&mut a);
    let norm = dt / len as f64;
    (0..m).map(|j| a[j] * chirp(j) * norm).collect()
}

fn check_grid(omega: &[f64]) -> Result<(), OracleError> {
    if omega.len() < 2 || omega.windows(2).any(|w| w[1] <= w[0]) {
        Err(OracleError::BadGrid)
    } else {
        Ok(())
    }
}

fn spectrum_from_samples(samples: &[C], dt: f64, horizon: f64, omega: &[f64]) -> NumericSpectrum {
    let energy: f64 = {
        let n = samples.len();
        samples
            .iter()
            .enumerate()
            .map(|(k, x)| if k == 0 || k == n - 1 { 0.5 } else { 1.0 } * x.norm_sqr())
            .sum::<f64>()
            * dt
    };
    let normalizable = energy > 0.0;
    // |x̃(ω)|² / ∫|x̃|²dω with x̃ = (1/2π)∫x e^{iωt}dt and ∫|x̃|²dω = ∫|x|²dt / 2π.
    let density: Vec<f64> = if normalizable {
        fourier_sums(samples, dt, omega, 1.0)
            .iter()
            .map(|f| (f / (2.0 * PI)).norm_sqr() * 2.0 * PI / energy)
            .collect()
    } else {
        vec![0.0; omega.len()]
    };
    NumericSpectrum {
        window_mass: quad::trapezoid(omega, &density),
        omega: omega.to_vec(),
        density,
        horizon,
        dt,
        normalizable,
    }
}

/// Wiener–Khinchine spectra `(atom channel, cavity channel)` from a
/// discretized Fourier integral of the closed-form amplitudes, normalized by
/// Parseval with the time-domain energy so that the density is normalized
/// over the whole real line.
pub fn numeric_relaxation_spectrum(
    p: &SystemParams,
    role: Role,
    omega: &[f64],
    window: FourierWindow,
) -> Result<(NumericSpectrum, NumericSpectrum), OracleError> {
    check_grid(omega)?;
    let (dt, horizon) = fourier_sampling(p, role, window)?;
    let amp = ClosedFormAmplitudes::new(&complex_frequencies(p, role), p.g());
    let n = (horizon / dt).ceil() as usize;
    let dt = horizon / n as f64;
    let (fed, partner): (Vec<C>, Vec<C>) = (0..=n).map(|k| amp.at(k as f64 * dt)).unzip();
    let fed = spectrum_from_samples(&fed, dt, horizon, omega);
    let partner = spectrum_from_samples(&partner, dt, horizon, omega);
    Ok(match role {
        Role::AtomicType => (fed, partner),
        Role::CavityType => (partner, fed),
    })
}

/// Emission spectra from two-time correlations of the Lindblad evolution:
/// `∫dt ⟨σ₊(t+τ)σ₋(t)⟩ = Tr[σ₊ e^{𝓛τ}(σ₋ R)]` with `R = ∫ρ(t)dt`, and
/// likewise for `a`. `S(ω) = 2Re ∫₀^∞ G(τ)e^{-iωτ}dτ / (2π G(0))`.
pub fn regression_spectrum(
    p: &SystemParams,
    role: Role,
    omega: &[f64],
    window: FourierWindow,
) -> Result<(NumericSpectrum, NumericSpectrum), OracleError> {
    check_grid(omega)?;
    let (dt, horizon) = fourier_sampling(p, role, window)?;
    let n = (horizon / dt).ceil() as usize;
    let dt = horizon / n as f64;
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();

    let states = lindblad_evolve(p, &DensityMatrix3::for_role(role), &grid)?;
    let mut integrated = [[ZERO; 3]; 3];
    for (k, rho) in states.iter().enumerate() {
        let w = if k == 0 || k == n { 0.5 * dt } else { dt };
        for (row, src) in integrated.iter_mut().zip(&rho.m) {
            for (cell, x) in row.iter_mut().zip(src) {
                *cell += x * w;
            }
        }
    }

    let channel = |lowering: (usize, usize)| -> Result<NumericSpectrum, OracleError> {
        // L R, where L = |g,0⟩⟨src| moves row `src` of R into row |g,0⟩.
        let (dst, src) = lowering;
        let mut start = [[ZERO; 3]; 3];
        start[dst] = integrated[src];
        let evolved = evolve_operator(p, &start, &grid, false)?;
        // Tr[L† B] = B[dst][src]
        let corr: Vec<C> = evolved.iter().map(|b| b[dst][src]).collect();
        let g0 = corr[0].re;
        let normalizable = g0 > 0.0;
        let density: Vec<f64> = if normalizable {
            fourier_sums(&corr, dt, omega, -1.0)
                .iter()
                .map(|f| 2.0 * f.re / (2.0 * PI * g0))
                .collect()
        } else {
            vec![0.0; omega.len()]
        };
        Ok(NumericSpectrum {
            window_mass: quad::trapezoid(omega, &density),
            omega: omega.to_vec(),
            density,
            horizon,
            dt,
            normalizable,
        })
    };
    Ok((channel((G0, E0))?, channel((G0, G1))?))
}

/// A sampled density on a frequency grid.
#[derive(Debug, Clone, Copy)]
pub struct Curve<'a> {
    pub omega: &'a [f64],
    pub density: &'a [f64],
}

impl<'a> Curve<'a> {
    pub fn new(omega: &'a [f64], density: &'a [f64]) -> Self {
        Self { omega, density }
    }

    fn interpolate(&self, w: f64) -> f64 {
        let x = self.omega;
        let k = x.partition_point(|&v| v <= w);
        if k == 0 {
            return self.density[0];
        }
        if k == x.len() {
            return self.density[x.len() - 1];
        }
        let (x0, x1) = (x[k - 1], x[k]);
        let s = (w - x0) / (x1 - x0);
        self.density[k - 1] * (1.0 - s) + self.density[k] * s
    }
}

impl<'a> From<&'a NumericSpectrum> for Curve<'a> {
    fn from(s: &'a NumericSpectrum) -> Self {
        Curve::new(&s.omega, &s.density)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// `∫|a - b| dω` over the common range.
    pub l1: f64,
    pub linf: f64,
    /// `argmax a - argmax b`.
    pub peak_shift: f64,
    /// Pairwise shifts of local maxima above 1% of the global maximum, when
    /// both curves have the same number of them.
    pub local_peak_shifts: Vec<f64>,
    pub points: usize,
}

fn local_peaks(omega: &[f64], y: &[f64]) -> Vec<f64> {
    let top = y.iter().copied().fold(0.0, f64::max);
    (1..y.len().saturating_sub(1))
        .filter(|&k| y[k] > y[k - 1] && y[k] >= y[k + 1] && y[k] > 0.01 * top)
        .map(|k| omega[k])
        .collect()
}

/// Compares two sampled densities on `a`'s grid restricted to the overlap,
/// resampling `b` linearly when the grids differ.
pub fn compare_spectra(a: Curve<'_>, b: Curve<'_>) -> Result<ComparisonReport, OracleError> {
    check_grid(a.omega)?;
    check_grid(b.omega)?;
    let same = a.omega == b.omega;
    let (lo, hi) = (
        a.omega[0].max(b.omega[0]),
        a.omega[a.omega.len() - 1].min(b.omega[b.omega.len() - 1]),
    );
    if lo >= hi {
        return Err(OracleError::DisjointGrids);
    }
    let idx: Vec<usize> = (0..a.omega.len())
        .filter(|&k| a.omega[k] >= lo && a.omega[k] <= hi)
        .collect();
    let omega: Vec<f64> = idx.iter().map(|&k| a.omega[k]).collect();
    let ya: Vec<f64> = idx.iter().map(|&k| a.density[k]).collect();
    let yb: Vec<f64> = idx
        .iter()
        .map(|&k| {
            if same {
                b.density[k]
            } else {
                b.interpolate(a.omega[k])
            }
        })
        .collect();
    let diff: Vec<f64> = ya.iter().zip(&yb).map(|(x, y)| (x - y).abs()).collect();
    let pa = local_peaks(&omega, &ya);
    let pb = local_peaks(&omega, &yb);
    Ok(ComparisonReport {
        l1: quad::trapezoid(&omega, &diff),
        linf: diff.iter().copied().fold(0.0, f64::max),
        peak_shift: crate::spectra::argmax(&omega, &ya) - crate::spectra::argmax(&omega, &yb),
        local_peak_shifts: if pa.len() == pb.len() {
            pa.iter().zip(&pb).map(|(x, y)| x - y).collect()
        } else {
            Vec::new()
        },
        points: omega.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{trace_closed_form, uniform_grid};
    use crate::model::validate_params;
    use crate::spectra::{symmetric_grid, ClosedFormSpectra};

    fn params(gamma: f64, kappa: f64, g: f64, delta: f64) -> SystemParams {
        validate_params(gamma, kappa, g, delta).unwrap()
    }

    #[test]
    fn eigenvalues_of_known_matrix() {
        let mut m = [[ZERO; 3]; 3];
        m[0][0] = C::new(0.6, 0.0);
        m[1][1] = C::new(0.3, 0.0);
        m[2][2] = C::new(0.1, 0.0);
        m[0][1] = C::new(0.1, 0.2);
        m[1][0] = m[0][1].conj();
        let ev = hermitian_eigenvalues(&m);
        // The 2×2 block has eigenvalues 0.45 ± √(0.0225 + 0.05).
        let r = (0.0225f64 + 0.05).sqrt();
        let mut sorted = ev;
        sorted.sort_by(f64::total_cmp);
        assert!((sorted[0] - 0.1).abs() < 1e-12 || (sorted[0] - (0.45 - r)).abs() < 1e-12);
        assert!((sorted[2] - (0.45 + r)).abs() < 1e-12);
        assert!((ev.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_density_matrix() {
        let mut m = DensityMatrix3::excited_atom().m;
        m[0][0] = C::new(1.5, 0.0);
        assert!(DensityMatrix3::new(m).is_err());
        let mut m = DensityMatrix3::excited_atom().m;
        m[0][0] = C::new(1.2, 0.0);
        m[1][1] = C::new(-0.2, 0.0);
        assert!(matches!(
            DensityMatrix3::new(m),
            Err(OracleError::InvalidState(_))
        ));
    }

    #[test]
    fn free_decay() {
        let p = params(1.0, 0.5, 0.0, 0.3);
        let t = uniform_grid(8.0, 81);
        let states = lindblad_evolve(&p, &DensityMatrix3::excited_atom(), &t).unwrap();
        for (rho, &tk) in states.iter().zip(&t) {
            assert!((rho.pop_atom() - (-tk).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn weakly_damped_vacuum_rabi() {
        let kappa = 0.02;
        let p = params(0.0, kappa, 1.0, 0.0);
        let t = uniform_grid(6.0, 61);
        let states = lindblad_evolve(&p, &DensityMatrix3::excited_atom(), &t).unwrap();
        let cf = trace_closed_form(&p, Role::AtomicType, &t);
        for (k, rho) in states.iter().enumerate() {
            assert!((rho.pop_atom() - cf.pop_atom[k]).abs() < 1e-9);
            // cos²(t) to first order in κ
            assert!((rho.pop_atom() - t[k].cos().powi(2)).abs() <= kappa * t[k] + 1e-9);
        }
    }

    #[test]
    fn good_cavity_populations_match_closed_form() {
        let p = params(5.0, 0.05, 1.0, 0.0);
        let t = uniform_grid(40.0, 401);
        let lind = lindblad_trace(&p, Role::AtomicType, &t).unwrap();
        let cf = trace_closed_form(&p, Role::AtomicType, &t);
        for k in 0..t.len() {
            assert!((lind.pop_atom[k] - cf.pop_atom[k]).abs() < 1e-6);
            assert!((lind.pop_cav[k] - cf.pop_cav[k]).abs() < 1e-6);
            assert!((lind.coherence[k] - cf.coherence[k]).norm() < 1e-6);
        }
    }

    #[test]
    fn one_excitation_loss_by_finite_differences() {
        let p = params(0.7, 1.9, 1.2, 0.8);
        let t = uniform_grid(5.0, 5001);
        let s = lindblad_evolve(&p, &DensityMatrix3::excited_atom(), &t).unwrap();
        let h = t[1] - t[0];
        for k in 1..t.len() - 1 {
            let excited = |r: &DensityMatrix3| r.pop_atom() + r.pop_cav();
            let derivative = (excited(&s[k + 1]) - excited(&s[k - 1])) / (2.0 * h);
            let loss = -p.gamma() * s[k].pop_atom() - p.kappa() * s[k].pop_cav();
            assert!((derivative - loss).abs() < 1e-5, "t = {}", t[k]);
            assert!(derivative <= 1e-12);
        }
    }

    #[test]
    fn numeric_uncoupled_atom_is_lorentzian() {
        let (gamma, delta) = (1.0, 2.0);
        let p = params(gamma, 0.5, 0.0, delta);
        let grid = symmetric_grid(8.0, 801);
        let (atom, cav) =
            numeric_relaxation_spectrum(&p, Role::AtomicType, &grid, FourierWindow::default())
                .unwrap();
        assert!(!cav.normalizable);
        let lorentz: Vec<f64> = grid
            .iter()
            .map(|w| (gamma / (2.0 * PI)) / ((w + delta / 2.0).powi(2) + gamma * gamma / 4.0))
            .collect();
        let report = compare_spectra((&atom).into(), Curve::new(&grid, &lorentz)).unwrap();
        assert!(report.l1 < 1e-3, "{report:?}");
    }

    #[test]
    fn numeric_symmetric_doublet() {
        let p = params(0.2, 0.2, 1.0, 0.0);
        let grid = symmetric_grid(2.0, 4001);
        let (atom, _) =
            numeric_relaxation_spectrum(&p, Role::AtomicType, &grid, FourierWindow::default())
                .unwrap();
        let mid = grid.len() / 2;
        let left = crate::spectra::argmax(&grid[..mid], &atom.density[..mid]);
        let right = crate::spectra::argmax(&grid[mid..], &atom.density[mid..]);
        assert!((left + 1.0).abs() < 0.01 && (right - 1.0).abs() < 0.01);
        let peak = |w: f64| atom.density[grid.iter().position(|&x| x == w).unwrap()];
        assert!((peak(left) - peak(right)).abs() / peak(right) < 1e-3);
    }

    #[test]
    fn short_horizon_is_rejected() {
        let p = params(1.0, 1.0, 1.0, 0.0);
        let grid = symmetric_grid(3.0, 11);
        let err = numeric_relaxation_spectrum(
            &p,
            Role::AtomicType,
            &grid,
            FourierWindow {
                horizon: Some(3.0),
                dt: None,
            },
        )
        .unwrap_err();
        let OracleError::InsufficientHorizon { required, .. } = err else {
            panic!("{err:?}")
        };
        assert!(required > 3.0);
    }

    #[test]
    fn chirp_z_matches_direct_sum() {
        let n = 20_000;
        let dt = 0.003;
        let samples: Vec<C> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                C::from_polar((-0.2 * t).exp(), 1.3 * t) + C::new(0.0, 0.5) * (-0.05 * t).exp()
            })
            .collect();
        let grid = symmetric_grid(12.0, 1537);
        for sign in [1.0, -1.0] {
            let direct = fourier_sums_direct(&samples, dt, &grid, sign);
            let fast =
                fourier_sums_chirp_z(&samples, dt, grid[0], grid[1] - grid[0], grid.len(), sign);
            let top = direct.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let worst = direct
                .iter()
                .zip(&fast)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(worst < 1e-11 * top, "{worst:e} vs {top:e}");
        }
        assert!(uniform_step(&grid).is_some());
        assert!(uniform_step(&[0.0, 1.0, 3.0]).is_none());
    }

    #[test]
    fn comparison_reports() {
        let grid = symmetric_grid(1.0, 11);
        let y: Vec<f64> = grid.iter().map(|w| 1.0 - w * w).collect();
        let r = compare_spectra(Curve::new(&grid, &y), Curve::new(&grid, &y)).unwrap();
        assert_eq!((r.l1, r.linf, r.peak_shift), (0.0, 0.0, 0.0));

        let far = [5.0, 6.0];
        assert_eq!(
            compare_spectra(Curve::new(&grid, &y), Curve::new(&far, &[1.0, 1.0])).unwrap_err(),
            OracleError::DisjointGrids
        );

        let fine = symmetric_grid(1.0, 21);
        let yf: Vec<f64> = fine.iter().map(|w| 1.0 - w * w).collect();
        let r = compare_spectra(Curve::new(&grid, &y), Curve::new(&fine, &yf)).unwrap();
        assert!(r.linf < 1e-15);
    }

    #[test]
    fn regression_spectrum_matches_amplitude_spectrum() {
        let p = params(1.0, 0.6, 1.0, 1.5);
        let grid = symmetric_grid(5.0, 201);
        let (a1, c1) =
            numeric_relaxation_spectrum(&p, Role::AtomicType, &grid, FourierWindow::default())
                .unwrap();
        let (a2, c2) =
            regression_spectrum(&p, Role::AtomicType, &grid, FourierWindow::default()).unwrap();
        assert!(compare_spectra((&a1).into(), (&a2).into()).unwrap().l1 < 1e-4);
        assert!(compare_spectra((&c1).into(), (&c2).into()).unwrap().l1 < 1e-4);
        let cf = ClosedFormSpectra::new(&p).unwrap();
        let exact: Vec<f64> = grid.iter().map(|&w| cf.s_at(w)).collect();
        assert!(
            compare_spectra((&a2).into(), Curve::new(&grid, &exact))
                .unwrap()
                .l1
                < 1e-4
        );
    }
}
