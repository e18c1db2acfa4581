//! Semidiscrete LDG operator for `u_t + u_x - u_xx = 0` with generalized
//! alternating fluxes, and TVD/SSP Runge-Kutta time stepping.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use crate::analysis;
use crate::corrections::{initial_data, BcKind, FluxWeights};
use crate::error::{LdgError, Result};
use crate::exact::ExactSolution;
use crate::field::Field;
use crate::mesh::Mesh;

pub type BoundaryData = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum BoundaryCondition {
    Periodic,
    /// `u(0, t) = left`, `u_x(L, t) = right`.
    Mixed { left: BoundaryData, right: BoundaryData },
    /// `u(0, t) = left`, `u(L, t) = right`.
    Dirichlet { left: BoundaryData, right: BoundaryData },
}

impl BoundaryCondition {
    pub fn kind(&self) -> BcKind {
        match self {
            BoundaryCondition::Periodic => BcKind::Periodic,
            BoundaryCondition::Mixed { .. } => BcKind::Mixed,
            BoundaryCondition::Dirichlet { .. } => BcKind::Dirichlet,
        }
    }

    /// Boundary data read off an exact solution.
    pub fn from_exact(kind: BcKind, sol: Arc<dyn ExactSolution>) -> Self {
        let l = sol.domain_length();
        match kind {
            BcKind::Periodic => BoundaryCondition::Periodic,
            BcKind::Mixed => {
                let (a, b) = (sol.clone(), sol);
                BoundaryCondition::Mixed {
                    left: Arc::new(move |t| a.u(0.0, t)),
                    right: Arc::new(move |t| b.q(l, t)),
                }
            }
            BcKind::Dirichlet => {
                let (a, b) = (sol.clone(), sol);
                BoundaryCondition::Dirichlet {
                    left: Arc::new(move |t| a.u(0.0, t)),
                    right: Arc::new(move |t| b.u(l, t)),
                }
            }
        }
    }
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind())
    }
}

#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub k: usize,
    pub weights: FluxWeights,
    pub bc: BoundaryCondition,
    pub cfl: f64,
    pub final_time: f64,
    /// Correction depth of the initial data.
    pub depth: usize,
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        let FluxWeights { lambda, theta } = self.weights;
        if theta == 0.5 {
            return Err(LdgError::InvalidConfig(
                "theta = 1/2 is not supported".into(),
            ));
        }
        if !lambda.is_finite() || !theta.is_finite() {
            return Err(LdgError::InvalidConfig("non-finite flux weight".into()));
        }
        if lambda < 0.5 {
            log::warn!("lambda = {lambda} < 1/2: the scheme may be unstable");
        }
        if !(self.cfl > 0.0) {
            return Err(LdgError::InvalidConfig(format!("CFL must be positive, got {}", self.cfl)));
        }
        if !(self.final_time >= 0.0) || !self.final_time.is_finite() {
            return Err(LdgError::InvalidConfig(format!(
                "final time must be finite and nonnegative, got {}",
                self.final_time
            )));
        }
        if self.depth > self.k {
            return Err(LdgError::DepthExceeded {
                depth: self.depth,
                k: self.k,
            });
        }
        Ok(())
    }

    pub fn time_step(&self, mesh: &Mesh) -> f64 {
        self.cfl * mesh.h() * mesh.h()
    }
}

/// `S[m][n] = int L_m L_n' dxi` on `[-1, 1]`: 2 when `m < n` and `m + n` is odd.
fn stiffness(p: usize) -> Vec<f64> {
    let mut s = vec![0.0; p * p];
    for m in 0..p {
        for n in (m + 1)..p {
            if (m + n) % 2 == 1 {
                s[m * p + n] = 2.0;
            }
        }
    }
    s
}

fn sign(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// The spatial operator `u_h -> d u_h / dt`.
#[derive(Debug, Clone)]
pub struct LdgOperator {
    mesh: Arc<Mesh>,
    k: usize,
    weights: FluxWeights,
    bc: BoundaryCondition,
    stiffness: Vec<f64>,
}

struct Traces {
    right: Vec<f64>,
    left: Vec<f64>,
}

fn cell_traces(coeffs: &[f64], n: usize, p: usize) -> Traces {
    let mut right = vec![0.0; n];
    let mut left = vec![0.0; n];
    for j in 0..n {
        let c = &coeffs[j * p..(j + 1) * p];
        right[j] = c.iter().sum();
        left[j] = c.iter().enumerate().map(|(m, v)| sign(m) * v).sum();
    }
    Traces { right, left }
}

impl LdgOperator {
    pub fn new(mesh: Arc<Mesh>, config: &SchemeConfig) -> Result<Self> {
        config.validate()?;
        Ok(LdgOperator {
            mesh,
            k: config.k,
            weights: config.weights,
            bc: config.bc.clone(),
            stiffness: stiffness(config.k + 1),
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    /// `u_hat` at interfaces `0..=N`.
    fn u_hat(&self, tr: &Traces, t: f64) -> Vec<f64> {
        let n = tr.right.len();
        let theta = self.weights.theta;
        let mut hat = vec![0.0; n + 1];
        for i in 1..n {
            hat[i] = theta * tr.right[i - 1] + (1.0 - theta) * tr.left[i];
        }
        match &self.bc {
            BoundaryCondition::Periodic => {
                let wrap = theta * tr.right[n - 1] + (1.0 - theta) * tr.left[0];
                hat[0] = wrap;
                hat[n] = wrap;
            }
            BoundaryCondition::Mixed { left, .. } => {
                hat[0] = left(t);
                hat[n] = tr.right[n - 1];
            }
            BoundaryCondition::Dirichlet { left, right } => {
                hat[0] = left(t);
                hat[n] = right(t);
            }
        }
        hat
    }

    fn auxiliary_into(&self, u: &[f64], tr: &Traces, t: f64, q: &mut [f64]) {
        let n = self.mesh.n_cells();
        let p = self.k + 1;
        let hat = self.u_hat(tr, t);
        for j in 0..n {
            let scale = 1.0 / self.mesh.width(j);
            let c = &u[j * p..(j + 1) * p];
            for nn in 0..p {
                let mut s = hat[j + 1] - sign(nn) * hat[j];
                for m in 0..nn {
                    s -= self.stiffness[m * p + nn] * c[m];
                }
                q[j * p + nn] = (2 * nn + 1) as f64 * scale * s;
            }
        }
    }

    /// `q_h` from the auxiliary equation, cell by cell.
    pub fn auxiliary_solve(&self, u: &Field, t: f64) -> Field {
        let n = self.mesh.n_cells();
        let p = self.k + 1;
        let tr = cell_traces(u.coeffs(), n, p);
        let mut q = Field::zeros(self.mesh.clone(), self.k);
        self.auxiliary_into(u.coeffs(), &tr, t, q.coeffs_mut());
        q
    }

    /// `d u_h / dt` written into `out`, with `q` as scratch holding `q_h` on return.
    pub fn residual_into(&self, u: &[f64], t: f64, q: &mut [f64], out: &mut [f64]) {
        let n = self.mesh.n_cells();
        let p = self.k + 1;
        let tr = cell_traces(u, n, p);
        self.auxiliary_into(u, &tr, t, q);
        let qt = cell_traces(q, n, p);
        let (lambda, theta) = (self.weights.lambda, self.weights.theta);
        let flux = |um: f64, up: f64, qm: f64, qp: f64| {
            lambda * um + (1.0 - lambda) * up - ((1.0 - theta) * qm + theta * qp)
        };
        let mut f = vec![0.0; n + 1];
        for i in 1..n {
            f[i] = flux(tr.right[i - 1], tr.left[i], qt.right[i - 1], qt.left[i]);
        }
        match &self.bc {
            BoundaryCondition::Periodic => {
                let wrap = flux(tr.right[n - 1], tr.left[0], qt.right[n - 1], qt.left[0]);
                f[0] = wrap;
                f[n] = wrap;
            }
            BoundaryCondition::Mixed { left, right } => {
                f[0] = left(t) - qt.left[0];
                f[n] = tr.right[n - 1] - right(t);
            }
            BoundaryCondition::Dirichlet { left, .. } => {
                f[0] = left(t) - qt.left[0];
                f[n] = tr.right[n - 1] - qt.right[n - 1];
            }
        }
        for j in 0..n {
            let scale = 1.0 / self.mesh.width(j);
            for nn in 0..p {
                let mut s = -f[j + 1] + sign(nn) * f[j];
                for m in 0..nn {
                    s += self.stiffness[m * p + nn] * (u[j * p + m] - q[j * p + m]);
                }
                out[j * p + nn] = (2 * nn + 1) as f64 * scale * s;
            }
        }
    }

    pub fn residual(&self, u: &Field, t: f64) -> Field {
        let mut q = vec![0.0; u.coeffs().len()];
        let mut out = Field::zeros(self.mesh.clone(), self.k);
        self.residual_into(u.coeffs(), t, &mut q, out.coeffs_mut());
        out
    }
}

/// One SSP-RK3 step of `y' = rhs(y, t)` in place; `rhs(y, t, out)`.
///
/// Stages at `t`, `t + dt`, `t + dt/2`. The convex-combination form is
/// evaluated as the equivalent increment `dt (k1 + k2 + 4 k3) / 6`.
pub fn step_tvdrk3(y: &mut [f64], t: f64, dt: f64, rhs: impl FnMut(&[f64], f64, &mut [f64])) {
    let delta = tvdrk3_increment(y, t, dt, rhs);
    for (a, d) in y.iter_mut().zip(&delta) {
        *a += d;
    }
}

/// [`step_tvdrk3`] with Kahan-compensated accumulation of the increment;
/// `carry` holds the low-order bits lost by previous updates.
pub fn step_tvdrk3_compensated(
    y: &mut [f64],
    carry: &mut [f64],
    t: f64,
    dt: f64,
    rhs: impl FnMut(&[f64], f64, &mut [f64]),
) {
    let delta = tvdrk3_increment(y, t, dt, rhs);
    for i in 0..y.len() {
        let d = delta[i] - carry[i];
        let sum = y[i] + d;
        carry[i] = (sum - y[i]) - d;
        y[i] = sum;
    }
}

fn tvdrk3_increment(
    y: &[f64],
    t: f64,
    dt: f64,
    mut rhs: impl FnMut(&[f64], f64, &mut [f64]),
) -> Vec<f64> {
    let len = y.len();
    let mut k1 = vec![0.0; len];
    let mut k = vec![0.0; len];
    let mut stage = vec![0.0; len];
    rhs(y, t, &mut k1);
    for i in 0..len {
        stage[i] = y[i] + dt * k1[i];
    }
    rhs(&stage, t + dt, &mut k);
    // u2 = 3/4 u + 1/4 (u1 + dt k2) = u + dt (k1 + k2) / 4
    for i in 0..len {
        k1[i] += k[i];
        stage[i] = y[i] + 0.25 * dt * k1[i];
    }
    rhs(&stage, t + 0.5 * dt, &mut k);
    // u+ = 1/3 u + 2/3 (u2 + dt k3)
    (0..len)
        .map(|i| dt * (k1[i] + 4.0 * k[i]) / 6.0)
        .collect()
}

/// Trapezoid-in-time integrals of squared `q` error functionals.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimeIntegrals {
    /// `int_0^T ||q - q_h||^2 dt`.
    pub q_l2_sq: f64,
    /// `int_0^T ||e_{q,n}||^2 dt`.
    pub q_trace_sq: f64,
    /// `int_0^T ||e_q||_c^2 dt`.
    pub q_cell_sq: f64,
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub u: Field,
    pub t: f64,
    pub steps: usize,
    pub dt: f64,
    pub time_integrals: Option<TimeIntegrals>,
}

#[derive(Debug, Clone, Default)]
pub struct IntegrateOptions {
    /// Accumulate [`TimeIntegrals`] (costs a `q_h` evaluation per step).
    pub time_integrals: bool,
    /// Per-step CSV of `t, ||u_h||, energy`.
    pub trace_log: Option<PathBuf>,
}

/// Step counts and sizes that land exactly on `final_time`.
pub fn step_schedule(final_time: f64, dt: f64) -> (usize, f64) {
    if final_time <= 0.0 {
        return (0, 0.0);
    }
    let steps = ((final_time / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (steps, final_time - (steps - 1) as f64 * dt)
}

/// Advances `u0` from `t = 0` to `config.final_time`. `observer` sees every
/// accepted state, including the initial one.
pub fn integrate_from(
    config: &SchemeConfig,
    op: &LdgOperator,
    u0: Field,
    mut observer: impl FnMut(usize, f64, &Field) -> Result<()>,
) -> Result<SolverState> {
    let dt = config.time_step(op.mesh());
    let (steps, last) = step_schedule(config.final_time, dt);
    let mut u = u0;
    let mut q = vec![0.0; u.coeffs().len()];
    let mut carry = vec![0.0; u.coeffs().len()];
    observer(0, 0.0, &u)?;
    for s in 0..steps {
        let t = s as f64 * dt;
        let h = if s + 1 == steps { last } else { dt };
        step_tvdrk3_compensated(u.coeffs_mut(), &mut carry, t, h, |y, tt, out| {
            op.residual_into(y, tt, &mut q, out)
        });
        let t_new = if s + 1 == steps { config.final_time } else { t + h };
        if !u.is_finite() {
            return Err(LdgError::NonFiniteState {
                step: s + 1,
                t: t_new,
            });
        }
        observer(s + 1, t_new, &u)?;
    }
    Ok(SolverState {
        u,
        t: config.final_time,
        steps,
        dt,
        time_integrals: None,
    })
}

/// Runs the scheme from the corrected initial data of `sol`.
pub fn integrate(
    config: &SchemeConfig,
    mesh: Arc<Mesh>,
    sol: &dyn ExactSolution,
    options: &IntegrateOptions,
) -> Result<SolverState> {
    let op = LdgOperator::new(mesh.clone(), config)?;
    let u0 = initial_data(
        sol,
        mesh.clone(),
        config.k,
        config.depth,
        config.weights,
        config.bc.kind(),
    )?;
    let mut log = match &options.trace_log {
        Some(path) => {
            let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
            writeln!(w, "step,t,l2_norm,energy")?;
            Some(w)
        }
        None => None,
    };
    let theta_tilde = config.weights.theta_tilde();
    let bc = config.bc.kind();
    let mut integrals = TimeIntegrals::default();
    let mut previous: Option<(f64, [f64; 3])> = None;
    let mut state = integrate_from(config, &op, u0, |step, t, u| {
        if let Some(w) = log.as_mut() {
            let norm = u.l2_norm();
            writeln!(w, "{step},{t:.16e},{norm:.16e},{:.16e}", 0.5 * norm * norm)?;
        }
        if options.time_integrals {
            let q = op.auxiliary_solve(u, t);
            let exact_q = |x: f64| sol.q(x, t);
            let sample = [
                analysis::l2_error(&q, &exact_q).powi(2),
                analysis::trace_error(&q, &exact_q, theta_tilde, bc, analysis::Variable::Q).powi(2),
                analysis::cell_average_error(&q, &exact_q).powi(2),
            ];
            if let Some((t0, prev)) = previous {
                let half = 0.5 * (t - t0);
                integrals.q_l2_sq += half * (prev[0] + sample[0]);
                integrals.q_trace_sq += half * (prev[1] + sample[1]);
                integrals.q_cell_sq += half * (prev[2] + sample[2]);
            }
            previous = Some((t, sample));
        }
        Ok(())
    })?;
    if let Some(mut w) = log {
        w.flush()?;
    }
    if options.time_integrals {
        state.time_integrals = Some(integrals);
    }
    Ok(state)
}
