//! Generalized Gauss-Radau projections.
//!
//! Every projection here keeps the `k` lowest Legendre moments of its target
//! on each cell and fixes the top mode from a weighted trace condition. The
//! families differ only in how the trace conditions couple neighbouring cells:
//!
//! * [`project_gauss_radau`]: weighted condition at every interface, periodic
//!   wrap, so the top modes solve a [`CirculantSystem`].
//! * [`project_modified`]: same coupling, target shifted by a jump of the
//!   `u` projection error (used when the convection weight differs).
//! * [`project_one_sided`] / [`project_dirichlet_endpoint`]: interior
//!   conditions plus a one-sided pin at one domain end, solved by a sweep.
//! * [`project_local`]: the condition only involves the two ends of one cell.

mod circulant;

use std::sync::Arc;

pub use circulant::{circulant_solve, CirculantSystem};

use crate::basis::{left_value, right_value};
use crate::error::{LdgError, Result};
use crate::field::Field;
use crate::mesh::Mesh;

/// Tolerance for the a-posteriori check of moment and trace conditions.
pub const VERIFY_TOL: f64 = 1e-11;

/// Which end of the domain a one-sided projection is pinned at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Pinned at `x_{N+1/2}` through `P^-`; swept backward from the last cell.
    Right,
    /// Pinned at `x_{1/2}` through `P^+`; swept forward from the first cell.
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    Periodic,
    /// Interior weighted conditions, `f^-_{N+1/2} = targets[N]`.
    RightPinned,
    /// Interior weighted conditions, `f^+_{1/2} = targets[0]`.
    LeftPinned,
}

/// Weighted trace conditions `w f^- + (1 - w) f^+ = targets[i]` at interfaces
/// `i = 0..=N` (interface `i` is the right end of cell `i - 1`).
///
/// For `Periodic`, interfaces `1..=N` are used and `N` wraps to the first cell.
/// For the pinned closures, the interior interfaces `1..N` are weighted and the
/// pinned end reads its one-sided value from `targets`.
#[derive(Debug, Clone)]
pub struct TraceSystem {
    pub weight: f64,
    pub targets: Vec<f64>,
    pub closure: Closure,
}

impl TraceSystem {
    /// Overwrites the top mode (index `k`) of every cell so the conditions hold,
    /// keeping modes `0..k` as they are.
    pub fn solve_top_mode(&self, field: &mut Field, k: usize) -> Result<()> {
        let n = field.n_cells();
        assert_eq!(self.targets.len(), n + 1);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let w = self.weight;
        let lower_right: Vec<f64> = (0..n).map(|j| right_value(&field.cell(j)[..k])).collect();
        let lower_left: Vec<f64> = (0..n).map(|j| left_value(&field.cell(j)[..k])).collect();
        match self.closure {
            Closure::Periodic => {
                let rhs = (0..n)
                    .map(|j| {
                        self.targets[j + 1] - w * lower_right[j] - (1.0 - w) * lower_left[(j + 1) % n]
                    })
                    .collect();
                let top = circulant_solve(&CirculantSystem::new(w, k, rhs))?;
                for (j, c) in top.into_iter().enumerate() {
                    field.cell_mut(j)[k] = c;
                }
            }
            Closure::RightPinned => {
                if w.abs() < 1e-12 {
                    return Err(LdgError::DegenerateCell(w));
                }
                field.cell_mut(n - 1)[k] = self.targets[n] - lower_right[n - 1];
                for j in (0..n - 1).rev() {
                    let plus = field.left_end(j + 1);
                    field.cell_mut(j)[k] =
                        (self.targets[j + 1] - (1.0 - w) * plus) / w - lower_right[j];
                }
            }
            Closure::LeftPinned => {
                if (1.0 - w).abs() < 1e-12 {
                    return Err(LdgError::DegenerateCell(1.0 - w));
                }
                field.cell_mut(0)[k] = sign * (self.targets[0] - lower_left[0]);
                for j in 0..n - 1 {
                    let minus = field.right_end(j);
                    field.cell_mut(j + 1)[k] =
                        sign * ((self.targets[j + 1] - w * minus) / (1.0 - w) - lower_left[j + 1]);
                }
            }
        }
        Ok(())
    }

    /// Largest violation of the conditions by `field`.
    pub fn residual(&self, field: &Field) -> f64 {
        let n = field.n_cells();
        let w = self.weight;
        let weighted = |i: usize| {
            let minus = field.right_end(if i == 0 { n - 1 } else { i - 1 });
            let plus = field.left_end(if i == n { 0 } else { i });
            w * minus + (1.0 - w) * plus
        };
        let mut worst: f64 = 0.0;
        match self.closure {
            Closure::Periodic => {
                for i in 1..=n {
                    worst = worst.max((weighted(i) - self.targets[i]).abs());
                }
            }
            Closure::RightPinned | Closure::LeftPinned => {
                for i in 1..n {
                    worst = worst.max((weighted(i) - self.targets[i]).abs());
                }
                if self.closure == Closure::RightPinned {
                    worst = worst.max((field.right_end(n - 1) - self.targets[n]).abs());
                } else {
                    worst = worst.max((field.left_end(0) - self.targets[0]).abs());
                }
            }
        }
        worst
    }

    pub fn scale(&self) -> f64 {
        self.targets.iter().fold(0.0_f64, |a, t| a.max(t.abs()))
    }
}

/// `z^{(w)}` at every interface `0..=N` from point values of a smooth function,
/// with the periodic wrap `z^- = z(L)`, `z^+ = z(0)` at both domain ends.
pub fn weighted_point_targets(z: &dyn Fn(f64) -> f64, mesh: &Mesh, weight: f64) -> Vec<f64> {
    let n = mesh.n_cells();
    (0..=n)
        .map(|i| {
            let minus = if i == 0 { z(mesh.length()) } else { z(mesh.boundaries()[i]) };
            let plus = if i == n { z(0.0) } else { z(mesh.boundaries()[i]) };
            weight * minus + (1.0 - weight) * plus
        })
        .collect()
}

/// Moments `0..k` from the local L2 expansion of `z`; top mode left at zero.
fn lower_moments(z: &dyn Fn(f64) -> f64, mesh: &Arc<Mesh>, k: usize) -> Field {
    let mut f = Field::project_l2_local(z, mesh.clone(), k);
    for j in 0..f.n_cells() {
        f.cell_mut(j)[k] = 0.0;
    }
    f
}

fn check_theta(theta: f64) -> Result<()> {
    if theta == 0.5 {
        return Err(LdgError::NearSingular { theta, gap: 0.0 });
    }
    if !theta.is_finite() {
        return Err(LdgError::InvalidConfig(format!("weight {theta} is not finite")));
    }
    Ok(())
}

/// Largest relative violation of `(P - z, v)_j = 0` for `v` in `P^{k-1}`,
/// checked against an independent, finer quadrature.
pub fn moment_residual(field: &Field, z: &dyn Fn(f64) -> f64, k: usize) -> f64 {
    let reference = Field::project_l2_with(
        z,
        field.mesh().clone(),
        k,
        &crate::basis::gauss_rule(2 * k + 9),
    );
    let scale = reference
        .coeffs()
        .iter()
        .chain(field.coeffs())
        .fold(0.0_f64, |a, c| a.max(c.abs()))
        .max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for j in 0..field.n_cells() {
        for m in 0..k {
            worst = worst.max((field.coeff(j, m) - reference.coeff(j, m)).abs());
        }
    }
    worst / scale
}

fn verify(
    field: &Field,
    z: &dyn Fn(f64) -> f64,
    k: usize,
    system: &TraceSystem,
    what: &str,
) -> Result<()> {
    let moments = moment_residual(field, z, k);
    let scale = system
        .scale()
        .max(field.coeffs().iter().fold(0.0_f64, |a, c| a.max(c.abs())))
        .max(f64::MIN_POSITIVE);
    let traces = system.residual(field) / scale;
    if moments > VERIFY_TOL || traces > VERIFY_TOL {
        return Err(LdgError::VerificationFailed(format!(
            "{what}: moment residual {moments:e}, trace residual {traces:e}"
        )));
    }
    Ok(())
}

fn project_with_system(
    z: &dyn Fn(f64) -> f64,
    mesh: &Arc<Mesh>,
    k: usize,
    system: &TraceSystem,
    what: &str,
) -> Result<Field> {
    let mut p = lower_moments(z, mesh, k);
    system.solve_top_mode(&mut p, k)?;
    verify(&p, z, k, system, what)?;
    Ok(p)
}

/// Globally coupled projection `P_theta z` on a periodic mesh.
pub fn project_gauss_radau(
    z: impl Fn(f64) -> f64,
    mesh: Arc<Mesh>,
    k: usize,
    theta: f64,
) -> Result<Field> {
    check_theta(theta)?;
    let system = TraceSystem {
        weight: theta,
        targets: weighted_point_targets(&z, &mesh, theta),
        closure: Closure::Periodic,
    };
    project_with_system(&z, &mesh, k, &system, "P_theta")
}

/// `P*` for `q`: moments of `q`, and at every interface
/// `(P* q)^{(1-theta)} = q^{(1-theta)} + (lambda - theta) [u - P_theta u]`.
pub fn project_modified(
    q: impl Fn(f64) -> f64,
    u: impl Fn(f64) -> f64,
    mesh: Arc<Mesh>,
    k: usize,
    theta: f64,
    lambda: f64,
) -> Result<Field> {
    let pu = project_gauss_radau(&u, mesh.clone(), k, theta)?;
    project_modified_with(q, u, &pu, theta, lambda)
}

/// [`project_modified`] with a precomputed `P_theta u`.
pub fn project_modified_with(
    q: impl Fn(f64) -> f64,
    u: impl Fn(f64) -> f64,
    pu: &Field,
    theta: f64,
    lambda: f64,
) -> Result<Field> {
    check_theta(theta)?;
    let mesh = pu.mesh().clone();
    let k = pu.degree();
    let n = mesh.n_cells();
    let mut targets = weighted_point_targets(&q, &mesh, 1.0 - theta);
    if lambda != theta {
        for (i, t) in targets.iter_mut().enumerate().skip(1) {
            // [u - P u] = (u - Pu)^+ - (u - Pu)^-; u is continuous
            let x = mesh.boundaries()[i];
            let minus = u(x) - pu.right_end(i - 1);
            let plus = u(if i == n { 0.0 } else { x }) - pu.left_end(i % n);
            *t += (lambda - theta) * (plus - minus);
        }
        targets[0] = targets[n];
    }
    let system = TraceSystem {
        weight: 1.0 - theta,
        targets,
        closure: Closure::Periodic,
    };
    project_with_system(&q, &mesh, k, &system, "P*")
}

/// Piecewise-global projection pinned at one domain end.
///
/// `Side::Right` gives `P~_theta` (pinned `P^-_{N+1/2} = z(L)`); `Side::Left`
/// gives the companion with weight `theta` pinned by `P^+_{1/2} = z(0)`.
/// Pass the weight that should appear in the interior conditions.
pub fn project_one_sided(
    z: impl Fn(f64) -> f64,
    mesh: Arc<Mesh>,
    k: usize,
    theta: f64,
    side: Side,
) -> Result<Field> {
    check_theta(theta)?;
    let n = mesh.n_cells();
    let mut targets = weighted_point_targets(&z, &mesh, theta);
    let closure = match side {
        Side::Right => {
            targets[n] = z(mesh.length());
            Closure::RightPinned
        }
        Side::Left => {
            targets[0] = z(0.0);
            Closure::LeftPinned
        }
    };
    let system = TraceSystem {
        weight: theta,
        targets,
        closure,
    };
    project_with_system(&z, &mesh, k, &system, "one-sided P~")
}

/// Right-pinned projection whose endpoint datum is shifted by the error of a
/// left-pinned `q` projection: `P^-_{N+1/2} = u(L) + (P~q - q)^-_{N+1/2}`.
pub fn project_dirichlet_endpoint(
    u: impl Fn(f64) -> f64,
    q: impl Fn(f64) -> f64,
    pq: &Field,
    theta: f64,
) -> Result<Field> {
    check_theta(theta)?;
    let mesh = pq.mesh().clone();
    let k = pq.degree();
    let n = mesh.n_cells();
    let mut targets = weighted_point_targets(&u, &mesh, theta);
    let l = mesh.length();
    targets[n] = u(l) + pq.right_end(n - 1) - q(l);
    let system = TraceSystem {
        weight: theta,
        targets,
        closure: Closure::RightPinned,
    };
    project_with_system(&u, &mesh, k, &system, "Dirichlet P~")
}

/// Cell-local projection: `k` moments plus
/// `theta P(x^-_{j+1/2}) + (1 - theta) P(x^+_{j-1/2})` matching the same
/// combination of `z`.
pub fn project_local(
    z: impl Fn(f64) -> f64,
    mesh: Arc<Mesh>,
    k: usize,
    theta: f64,
) -> Result<Field> {
    check_theta(theta)?;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let multiplier = theta + (1.0 - theta) * sign;
    if multiplier.abs() < 1e-10 {
        return Err(LdgError::DegenerateCell(multiplier));
    }
    let mut p = lower_moments(&z, &mesh, k);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = f64::MIN_POSITIVE;
    for j in 0..mesh.n_cells() {
        let target = theta * z(mesh.right(j)) + (1.0 - theta) * z(mesh.left(j));
        let lower = &p.cell(j)[..k];
        let known = theta * right_value(lower) + (1.0 - theta) * left_value(lower);
        p.cell_mut(j)[k] = (target - known) / multiplier;
        let got = theta * p.right_end(j) + (1.0 - theta) * p.left_end(j);
        worst = worst.max((got - target).abs());
        scale = scale.max(target.abs());
    }
    let moments = moment_residual(&p, &z, k);
    scale = scale.max(p.coeffs().iter().fold(0.0_f64, |a, c| a.max(c.abs())));
    if moments > VERIFY_TOL || worst / scale > VERIFY_TOL {
        return Err(LdgError::VerificationFailed(format!(
            "P_h: moment residual {moments:e}, trace residual {:e}",
            worst / scale
        )));
    }
    Ok(p)
}
