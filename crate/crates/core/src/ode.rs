//! Classical fourth-order Runge–Kutta with step-doubling error control.
//!
//! Each step is taken once with `h` and twice with `h/2`; the difference
//! estimates the local error and the accepted value is the Richardson
//! extrapolation `y_half + (y_half - y_full)/15`.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("integration failed at t = {t}: step {step:e} fell below {min_step:e}")]
    StepUnderflow { t: f64, step: f64, min_step: f64 },
    #[error("integration failed at t = {t}: {reason}")]
    Invariant { t: f64, reason: String },
    #[error("time grid must be non-decreasing and start at or after t = 0")]
    BadGrid,
}

/// Linear-space operations the integrator needs.
pub trait OdeState: Clone {
    /// `self + k·other`
    fn add_scaled(&self, k: f64, other: &Self) -> Self;
    /// Largest componentwise absolute difference.
    fn max_abs_diff(&self, other: &Self) -> f64;
}

impl<const N: usize> OdeState for [f64; N] {
    fn add_scaled(&self, k: f64, other: &Self) -> Self {
        std::array::from_fn(|i| self[i] + k * other[i])
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl<const N: usize> OdeState for [Complex64; N] {
    fn add_scaled(&self, k: f64, other: &Self) -> Self {
        std::array::from_fn(|i| self[i] + other[i] * k)
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other)
            .map(|(a, b)| (a.re - b.re).abs().max((a.im - b.im).abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Rk4Doubling {
    /// Absolute local error tolerance per step.
    pub tol: f64,
    /// Steps shorter than `min_step_fraction · horizon` abort the run.
    pub min_step_fraction: f64,
    /// Upper bound on any single step.
    pub max_step: f64,
}

impl Default for Rk4Doubling {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            min_step_fraction: 1e-12,
            max_step: f64::INFINITY,
        }
    }
}

fn rk4<S: OdeState, F: Fn(f64, &S) -> S>(f: &F, t: f64, y: &S, h: f64) -> S {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &y.add_scaled(0.5 * h, &k1));
    let k3 = f(t + 0.5 * h, &y.add_scaled(0.5 * h, &k2));
    let k4 = f(t + h, &y.add_scaled(h, &k3));
    y.add_scaled(h / 6.0, &k1)
        .add_scaled(h / 3.0, &k2)
        .add_scaled(h / 3.0, &k3)
        .add_scaled(h / 6.0, &k4)
}

impl Rk4Doubling {
    /// Integrates from `t = 0` and records the state at every grid time.
    ///
    /// `post_step` runs after each accepted step (projection, invariant
    /// checks); returning an error aborts the integration.
    pub fn integrate_to_grid<S, F, P>(
        &self,
        rhs: F,
        y0: S,
        grid: &[f64],
        initial_step: f64,
        mut post_step: P,
    ) -> Result<Vec<S>, OdeError>
    where
        S: OdeState,
        F: Fn(f64, &S) -> S,
        P: FnMut(f64, &mut S) -> Result<(), OdeError>,
    {
        if grid.first().is_some_and(|&t| t < 0.0) || grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(OdeError::BadGrid);
        }
        let horizon = grid.last().copied().unwrap_or(0.0);
        let min_step = self.min_step_fraction * horizon.max(f64::MIN_POSITIVE);
        let mut out = Vec::with_capacity(grid.len());
        let mut t = 0.0;
        let mut y = y0;
        let mut h = initial_step.min(self.max_step).max(min_step);

        for &target in grid {
            while t < target {
                let remaining = target - t;
                let last = h >= remaining;
                let step = if last { remaining } else { h };
                let full = rk4(&rhs, t, &y, step);
                let half = rk4(&rhs, t, &y, 0.5 * step);
                let twice = rk4(&rhs, t + 0.5 * step, &half, 0.5 * step);
                let err = twice.max_abs_diff(&full) / 15.0;
                if err <= self.tol {
                    let diff = twice.add_scaled(-1.0, &full);
                    y = twice.add_scaled(1.0 / 15.0, &diff);
                    t = if last { target } else { t + step };
                    post_step(t, &mut y)?;
                    let grow = if err == 0.0 {
                        2.0
                    } else {
                        (0.9 * (self.tol / err).powf(0.2)).clamp(0.2, 2.0)
                    };
                    if !last || grow < 1.0 {
                        h = (step * grow).min(self.max_step);
                    }
                } else {
                    let shrink = if err.is_finite() {
                        (0.9 * (self.tol / err).powf(0.2)).clamp(0.1, 0.9)
                    } else {
                        0.1
                    };
                    h = step * shrink;
                    if h < min_step {
                        return Err(OdeError::StepUnderflow {
                            t,
                            step: h,
                            min_step,
                        });
                    }
                }
            }
            out.push(y.clone());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 * 0.2).collect();
        let ys = Rk4Doubling::default()
            .integrate_to_grid(|_, y: &[f64; 1]| [-y[0]], [1.0], &grid, 0.1, |_, _| Ok(()))
            .unwrap();
        for (t, y) in grid.iter().zip(&ys) {
            assert!((y[0] - (-t).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn harmonic_oscillator_complex() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.3).collect();
        let i = Complex64::i();
        let ys = Rk4Doubling::default()
            .integrate_to_grid(
                |_, y: &[Complex64; 1]| [-i * 2.0 * y[0]],
                [Complex64::new(1.0, 0.0)],
                &grid,
                0.01,
                |_, _| Ok(()),
            )
            .unwrap();
        for (t, y) in grid.iter().zip(&ys) {
            let err = (y[0] - (-i * 2.0 * *t).exp()).norm();
            assert!(err < 1e-8, "t={t} err={err:e}");
        }
    }

    #[test]
    fn rejects_decreasing_grid() {
        let r = Rk4Doubling::default().integrate_to_grid(
            |_, y: &[f64; 1]| *y,
            [1.0],
            &[1.0, 0.5],
            0.1,
            |_, _| Ok(()),
        );
        assert_eq!(r.unwrap_err(), OdeError::BadGrid);
    }

    #[test]
    fn reports_step_underflow() {
        // Finite-time blow-up forces the step towards zero.
        let grid = [2.0];
        let r = Rk4Doubling::default().integrate_to_grid(
            |_, y: &[f64; 1]| [y[0] * y[0]],
            [1.0],
            &grid,
            0.1,
            |_, _| Ok(()),
        );
        assert!(matches!(
            r,
            Err(OdeError::StepUnderflow { .. }) | Err(OdeError::Invariant { .. })
        ));
    }
}
