//! Registered analytic solutions of `u_t + u_x - u_xx = 0`.

use std::f64::consts::PI;
use std::fmt::Debug;

use num_complex::Complex64;

use crate::error::{LdgError, Result};

/// An analytic solution with mixed derivatives `d_x^a d_t^b u`.
pub trait ExactSolution: Send + Sync + Debug {
    fn name(&self) -> &str;

    /// `d_x^a d_t^b u(x, t)` for `a <= 2`, `b <= max_t_order()`.
    fn eval(&self, x_order: usize, t_order: usize, x: f64, t: f64) -> f64;

    fn max_t_order(&self) -> usize;

    /// Whether the solution is `L`-periodic in `x` on the case domain.
    fn is_periodic(&self) -> bool;

    fn domain_length(&self) -> f64 {
        2.0 * PI
    }

    fn u(&self, x: f64, t: f64) -> f64 {
        self.eval(0, 0, x, t)
    }

    fn q(&self, x: f64, t: f64) -> f64 {
        self.eval(1, 0, x, t)
    }
}

/// `d_x^a d_t^b Im(e^{i x} e^{-(1+i) t})`, i.e. of `e^{-t} sin(x - t)`.
fn damped_wave(a: usize, b: usize, x: f64, t: f64) -> f64 {
    let ix = Complex64::new(0.0, 1.0).powu(a as u32);
    let rate = Complex64::new(-1.0, -1.0).powu(b as u32);
    let phase = Complex64::new(-t, x - t).exp();
    (ix * rate * phase).im
}

/// `u = e^{-t} sin(x - t)`, periodic on `[0, 2 pi]`.
#[derive(Debug, Clone, Default)]
pub struct PeriodicWave;

impl ExactSolution for PeriodicWave {
    fn name(&self) -> &str {
        "periodic-ex1"
    }

    fn eval(&self, a: usize, b: usize, x: f64, t: f64) -> f64 {
        damped_wave(a, b, x, t)
    }

    fn max_t_order(&self) -> usize {
        usize::MAX
    }

    fn is_periodic(&self) -> bool {
        true
    }
}

/// `u = e^{-t} sin(x - t) + x - t`, used with mixed and Dirichlet data.
#[derive(Debug, Clone, Default)]
pub struct DriftingWave;

impl ExactSolution for DriftingWave {
    fn name(&self) -> &str {
        "ex2"
    }

    fn eval(&self, a: usize, b: usize, x: f64, t: f64) -> f64 {
        let linear = match (a, b) {
            (0, 0) => x - t,
            (1, 0) => 1.0,
            (0, 1) => -1.0,
            _ => 0.0,
        };
        damped_wave(a, b, x, t) + linear
    }

    fn max_t_order(&self) -> usize {
        usize::MAX
    }

    fn is_periodic(&self) -> bool {
        false
    }
}

/// Checks time derivatives against centered differences and the PDE residual
/// at a few sample points.
pub fn audit(sol: &dyn ExactSolution, up_to: usize) -> Result<()> {
    let l = sol.domain_length();
    let dt = 1e-5;
    let samples = [(0.1 * l, 0.0), (0.37 * l, 0.4), (0.81 * l, 1.0), (l, 0.7)];
    for &(x, t) in &samples {
        let pde = sol.eval(0, 1, x, t) + sol.eval(1, 0, x, t) - sol.eval(2, 0, x, t);
        if pde.abs() > 1e-10 {
            return Err(LdgError::InconsistentSolution(format!(
                "{}: PDE residual {pde:e} at ({x}, {t})",
                sol.name()
            )));
        }
        for b in 0..up_to.min(sol.max_t_order()) {
            let fd = (sol.eval(0, b, x, t + dt) - sol.eval(0, b, x, t - dt)) / (2.0 * dt);
            let exact = sol.eval(0, b + 1, x, t);
            if (fd - exact).abs() > 1e-6 * exact.abs().max(1.0) {
                return Err(LdgError::InconsistentSolution(format!(
                    "{}: d_t^{} mismatch {fd} vs {exact}",
                    sol.name(),
                    b + 1
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let s = PeriodicWave;
        let (x, t) = (0.7, 0.3);
        let e = (-t as f64).exp();
        assert!((s.u(x, t) - e * (x - t).sin()).abs() < 1e-15);
        assert!((s.q(x, t) - e * (x - t).cos()).abs() < 1e-15);
        let ut = -e * (x - t).sin() - e * (x - t).cos();
        assert!((s.eval(0, 1, x, t) - ut).abs() < 1e-15);
        assert!((s.eval(2, 0, x, t) + e * (x - t).sin()).abs() < 1e-15);

        let d = DriftingWave;
        assert!((d.u(x, t) - (e * (x - t).sin() + x - t)).abs() < 1e-15);
        assert!((d.q(2.0 * PI, t) - (e * t.cos() + 1.0)).abs() < 1e-14);
        assert!((d.u(0.0, t) - (-e * t.sin() - t)).abs() < 1e-15);
    }

    #[test]
    fn audits_pass() {
        audit(&PeriodicWave, 6).unwrap();
        audit(&DriftingWave, 6).unwrap();
    }

    #[derive(Debug)]
    struct Broken;
    impl ExactSolution for Broken {
        fn name(&self) -> &str {
            "broken"
        }
        fn eval(&self, a: usize, b: usize, x: f64, t: f64) -> f64 {
            // claims u_t = 0 for u = x t
            match (a, b) {
                (0, 0) => x * t,
                (1, 0) => t,
                _ => 0.0,
            }
        }
        fn max_t_order(&self) -> usize {
            3
        }
        fn is_periodic(&self) -> bool {
            false
        }
    }

    #[test]
    fn audit_catches_inconsistency() {
        assert!(matches!(
            audit(&Broken, 2),
            Err(LdgError::InconsistentSolution(_))
        ));
    }
}
