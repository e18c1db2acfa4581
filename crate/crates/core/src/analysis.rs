//! Error functionals and observed convergence orders.

use crate::basis::{gauss_rule, RadauSpec};
use crate::corrections::BcKind;
use crate::error::{LdgError, Result};
use crate::field::Field;

/// Errors below `FLOOR_RATIO * scale` are treated as round-off.
pub const FLOOR_RATIO: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    U,
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    /// `|v - v_h|` at roots of `R*_{k+1}`.
    Value,
    /// `|(v - v_h)_x|` at roots of its derivative.
    Derivative,
}

/// Numerical trace `v_hat` at interface `i`, or `None` where the flux is
/// boundary data rather than an unknown.
///
/// Interior interfaces use `w v^- + (1 - w) v^+`. At the domain ends the
/// one-sided values follow the boundary fluxes: mixed uses `u^-` at the right
/// end and `q^+` at the left; Dirichlet uses `q^+` and `q^-`.
pub fn numerical_trace(field: &Field, i: usize, weight: f64, bc: BcKind, var: Variable) -> Option<f64> {
    let n = field.n_cells();
    if bc == BcKind::Periodic || (i > 0 && i < n) {
        return field.weighted_trace(i, weight, true).ok();
    }
    let left_end = i == 0;
    match (bc, var, left_end) {
        (BcKind::Mixed, Variable::U, false) => Some(field.right_end(n - 1)),
        (BcKind::Mixed, Variable::Q, true) => Some(field.left_end(0)),
        (BcKind::Dirichlet, Variable::Q, true) => Some(field.left_end(0)),
        (BcKind::Dirichlet, Variable::Q, false) => Some(field.right_end(n - 1)),
        _ => None,
    }
}

/// `sqrt((1/N) sum_i |v(x_i) - v_hat_i|^2)` over interfaces carrying an unknown.
pub fn trace_error(
    field: &Field,
    exact: &dyn Fn(f64) -> f64,
    weight: f64,
    bc: BcKind,
    var: Variable,
) -> f64 {
    let mesh = field.mesh();
    let n = field.n_cells();
    let first = if bc == BcKind::Periodic { 1 } else { 0 };
    let sum: f64 = (first..=n)
        .filter_map(|i| {
            numerical_trace(field, i, weight, bc, var)
                .map(|hat| (exact(mesh.boundaries()[i]) - hat).powi(2))
        })
        .sum();
    (sum / n as f64).sqrt()
}

/// `sqrt((1/N) sum_j (mean_j (v - v_h))^2)`.
pub fn cell_average_error(field: &Field, exact: &dyn Fn(f64) -> f64) -> f64 {
    let mesh = field.mesh();
    let rule = gauss_rule(2 * field.degree() + 6);
    let n = field.n_cells();
    let sum: f64 = (0..n)
        .map(|j| {
            let mean = 0.5 * rule.integrate(|xi| exact(mesh.to_physical(j, xi)));
            (mean - field.coeff(j, 0)).powi(2)
        })
        .sum();
    (sum / n as f64).sqrt()
}

/// `||v - v_h||_{L2}` by Gauss quadrature.
pub fn l2_error(field: &Field, exact: &dyn Fn(f64) -> f64) -> f64 {
    let mesh = field.mesh();
    let rule = gauss_rule(2 * field.degree() + 6);
    (0..field.n_cells())
        .map(|j| {
            0.5 * mesh.width(j)
                * rule.integrate(|xi| (exact(mesh.to_physical(j, xi)) - field.eval(j, xi)).powi(2))
        })
        .sum::<f64>()
        .sqrt()
}

/// Max error over every cell's mapped Radau points. `exact` must be `v` for
/// [`PointKind::Value`] and `v_x` for [`PointKind::Derivative`].
pub fn radau_point_errors(
    field: &Field,
    exact: &dyn Fn(f64) -> f64,
    spec: &RadauSpec,
    kind: PointKind,
) -> Result<f64> {
    let roots = match kind {
        PointKind::Value => &spec.function_roots,
        PointKind::Derivative => &spec.derivative_roots,
    };
    if roots.is_empty() {
        return Err(LdgError::NoRootsInCell {
            k: spec.k,
            theta: spec.theta,
        });
    }
    let mesh = field.mesh();
    let mut worst: f64 = 0.0;
    for j in 0..field.n_cells() {
        for &xi in roots {
            let x = mesh.to_physical(j, xi);
            let approx = match kind {
                PointKind::Value => field.eval(j, xi),
                PointKind::Derivative => field.eval_deriv(j, xi),
            };
            worst = worst.max((exact(x) - approx).abs());
        }
    }
    Ok(worst)
}

/// `||u_I - u_h||_{L2}`.
pub fn supercloseness(u_h: &Field, interpolant: &Field) -> Result<f64> {
    Ok(interpolant.sub(u_h)?.l2_norm())
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OrderEntry {
    /// `None` for the coarsest mesh.
    pub order: Option<f64>,
    /// The error sits at the round-off floor.
    pub floor: bool,
}

/// `log(e_{i-1}/e_i) / log(N_i/N_{i-1})`, flagging errors below `FLOOR_RATIO * scale`.
pub fn convergence_orders(errors: &[(usize, f64)], scale: f64) -> Result<Vec<OrderEntry>> {
    for (i, &(n, e)) in errors.iter().enumerate() {
        if !(e > 0.0) {
            return Err(LdgError::NonPositiveError(n));
        }
        if i > 0 && n <= errors[i - 1].0 {
            return Err(LdgError::InvalidConfig(
                "refinement levels must be strictly increasing".into(),
            ));
        }
    }
    Ok(errors
        .iter()
        .enumerate()
        .map(|(i, &(n, e))| OrderEntry {
            order: (i > 0).then(|| {
                let (n0, e0) = errors[i - 1];
                (e0 / e).ln() / (n as f64 / n0 as f64).ln()
            }),
            floor: e < FLOOR_RATIO * scale,
        })
        .collect())
}

/// Every error functional at one refinement level.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ErrorReport {
    pub n: usize,
    pub t: f64,
    pub e_un: f64,
    pub e_qn: f64,
    pub e_uc: f64,
    pub e_qc: f64,
    pub e_ur: f64,
    pub e_urx: f64,
    pub e_ql: f64,
    pub e_qlx: f64,
    pub e_u_l2: f64,
    pub e_q_l2: f64,
    pub superclose: f64,
    pub discarded_roots: usize,
    /// `sqrt(int_0^T ||q - q_h||^2)`, when accumulated.
    pub int_e_q_l2: Option<f64>,
    pub int_e_qn: Option<f64>,
    pub int_e_qc: Option<f64>,
}

impl ErrorReport {
    /// Column names and values of the always-present functionals.
    pub fn columns(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("e_un", self.e_un),
            ("e_qn", self.e_qn),
            ("e_uc", self.e_uc),
            ("e_qc", self.e_qc),
            ("e_ur", self.e_ur),
            ("e_urx", self.e_urx),
            ("e_ql", self.e_ql),
            ("e_qlx", self.e_qlx),
            ("e_u_l2", self.e_u_l2),
            ("e_q_l2", self.e_q_l2),
            ("superclose", self.superclose),
        ]
    }

    pub fn optional_columns(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("int_e_q_l2", self.int_e_q_l2),
            ("int_e_qn", self.int_e_qn),
            ("int_e_qc", self.int_e_qc),
        ]
    }
}

/// Inputs shared by every functional of one run.
pub struct ReportInputs<'a> {
    pub u_h: &'a Field,
    pub q_h: &'a Field,
    pub interpolant: &'a Field,
    pub u: &'a dyn Fn(f64) -> f64,
    pub q: &'a dyn Fn(f64) -> f64,
    pub q_x: &'a dyn Fn(f64) -> f64,
    pub theta: f64,
    pub bc: BcKind,
    pub t: f64,
    pub u_points: &'a RadauSpec,
    pub q_points: &'a RadauSpec,
}

pub fn error_report(inp: &ReportInputs<'_>) -> Result<ErrorReport> {
    let theta_tilde = 1.0 - inp.theta;
    let report = ErrorReport {
        n: inp.u_h.n_cells(),
        t: inp.t,
        e_un: trace_error(inp.u_h, inp.u, inp.theta, inp.bc, Variable::U),
        e_qn: trace_error(inp.q_h, inp.q, theta_tilde, inp.bc, Variable::Q),
        e_uc: cell_average_error(inp.u_h, inp.u),
        e_qc: cell_average_error(inp.q_h, inp.q),
        e_ur: radau_point_errors(inp.u_h, inp.u, inp.u_points, PointKind::Value)?,
        e_urx: radau_point_errors(inp.u_h, inp.q, inp.u_points, PointKind::Derivative)?,
        e_ql: radau_point_errors(inp.q_h, inp.q, inp.q_points, PointKind::Value)?,
        e_qlx: radau_point_errors(inp.q_h, inp.q_x, inp.q_points, PointKind::Derivative)?,
        e_u_l2: l2_error(inp.u_h, inp.u),
        e_q_l2: l2_error(inp.q_h, inp.q),
        superclose: supercloseness(inp.u_h, inp.interpolant)?,
        discarded_roots: inp.u_points.discarded() + inp.q_points.discarded(),
        int_e_q_l2: None,
        int_e_qn: None,
        int_e_qc: None,
    };
    let values = report.columns();
    if let Some((name, v)) = values.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
        return Err(LdgError::VerificationFailed(format!("{name} = {v}")));
    }
    Ok(report)
}
