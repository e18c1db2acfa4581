//! Correction functions `w_{u,i}`, `w_{q,i}` and the interpolants
//! `u_I = P u - W_u`, `q_I = P q - W_q` built from them.
//!
//! Level 0 holds the projection errors `u - P u` and `q - P q` (stored as
//! over-resolved modal expansions). Level `i` takes its `k` lowest modes from
//! the cell antiderivative of level `i - 1` and its top mode from trace
//! conditions that mirror the numerical fluxes:
//!
//! ```text
//! moments of w_{u,i}  = moments of  hbar_j D^{-1} w_{q,i-1}
//! moments of w_{q,i}  = moments of  w_{u,i} + hbar_j D^{-1} d_t w_{u,i-1}
//! ```
//!
//! Time derivatives come from running the same recursion on `d_t^b` of the
//! exact data: level `i` at order `b` reads level `i - 1` at orders `b` and `b + 1`.

use std::sync::Arc;

use crate::basis::antiderivative_modal;
use crate::error::{LdgError, Result};
use crate::exact::ExactSolution;
use crate::field::Field;
use crate::mesh::Mesh;
use crate::projections::{
    project_dirichlet_endpoint, project_gauss_radau, project_modified_with, project_one_sided,
    Closure, Side, TraceSystem, VERIFY_TOL,
};

/// Extra modes kept for the non-polynomial level-0 residuals.
pub const LEVEL_ZERO_MARGIN: usize = 4;

/// Weights of the generalized alternating fluxes: `u^{(lambda)} - q^{(1-theta)}`
/// for the convection/diffusion flux and `u^{(theta)}` for the auxiliary one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxWeights {
    pub lambda: f64,
    pub theta: f64,
}

impl FluxWeights {
    pub fn new(lambda: f64, theta: f64) -> Self {
        FluxWeights { lambda, theta }
    }

    pub fn equal(theta: f64) -> Self {
        FluxWeights {
            lambda: theta,
            theta,
        }
    }

    pub fn theta_tilde(&self) -> f64 {
        1.0 - self.theta
    }

    pub fn is_split(&self) -> bool {
        self.lambda != self.theta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Periodic,
    Mixed,
    Dirichlet,
}

impl std::str::FromStr for BcKind {
    type Err = LdgError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" => Ok(BcKind::Periodic),
            "mixed" => Ok(BcKind::Mixed),
            "dirichlet" => Ok(BcKind::Dirichlet),
            other => Err(LdgError::InvalidConfig(format!(
                "unknown boundary condition `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for BcKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BcKind::Periodic => "periodic",
            BcKind::Mixed => "mixed",
            BcKind::Dirichlet => "dirichlet",
        })
    }
}

#[derive(Debug, Clone)]
pub struct CorrectionStack {
    pub k: usize,
    pub depth: usize,
    pub weights: FluxWeights,
    pub bc: BcKind,
    pub t: f64,
    /// `proj_u[b]` is the `u` projection of `d_t^b u`.
    pub proj_u: Vec<Field>,
    pub proj_q: Vec<Field>,
    /// `w_u[i][b] = d_t^b w_{u,i}`.
    pub w_u: Vec<Vec<Field>>,
    pub w_q: Vec<Vec<Field>>,
}

impl CorrectionStack {
    pub fn mesh(&self) -> &Arc<Mesh> {
        self.proj_u[0].mesh()
    }

    /// `W_u = sum_{i=1..depth} w_{u,i}`.
    pub fn aggregate_u(&self) -> Field {
        self.aggregate(&self.w_u, 0)
    }

    pub fn aggregate_q(&self) -> Field {
        self.aggregate(&self.w_q, 0)
    }

    /// `d_t^b W`.
    fn aggregate(&self, levels: &[Vec<Field>], b: usize) -> Field {
        let mut total = Field::zeros(self.mesh().clone(), self.k);
        for level in levels.iter().skip(1) {
            for (t, c) in total.coeffs_mut().iter_mut().zip(level[b].coeffs()) {
                *t += c;
            }
        }
        total
    }

    pub fn aggregate_u_dt(&self) -> Field {
        self.aggregate(&self.w_u, 1)
    }

    /// `(u_I, q_I) = (P u - W_u, P q - W_q)`.
    pub fn interpolant(&self) -> (Field, Field) {
        let u = self.proj_u[0].sub(&self.aggregate_u()).expect("same mesh");
        let q = self.proj_q[0].sub(&self.aggregate_q()).expect("same mesh");
        (u, q)
    }
}

fn check_depth(k: usize, depth: usize) -> Result<()> {
    if depth > k {
        return Err(LdgError::DepthExceeded { depth, k });
    }
    Ok(())
}

/// Projections of `d_t^b u` and `d_t^b q` for `b <= b_max` and the level-0
/// residuals `w_{u,0} = u - P u`, `w_{q,0} = q - P q`.
pub fn build_level_zero(
    sol: &dyn ExactSolution,
    t: f64,
    mesh: Arc<Mesh>,
    k: usize,
    weights: FluxWeights,
    bc: BcKind,
    b_max: usize,
) -> Result<CorrectionStack> {
    if b_max > sol.max_t_order() {
        return Err(LdgError::InvalidConfig(format!(
            "{} provides t-derivatives up to {}, {} needed",
            sol.name(),
            sol.max_t_order(),
            b_max
        )));
    }
    let theta = weights.theta;
    let mut proj_u = Vec::with_capacity(b_max + 1);
    let mut proj_q = Vec::with_capacity(b_max + 1);
    let mut w_u0 = Vec::with_capacity(b_max + 1);
    let mut w_q0 = Vec::with_capacity(b_max + 1);
    for b in 0..=b_max {
        let zu = |x: f64| sol.eval(0, b, x, t);
        let zq = |x: f64| sol.eval(1, b, x, t);
        let (pu, pq) = match bc {
            BcKind::Periodic => {
                let pu = project_gauss_radau(zu, mesh.clone(), k, theta)?;
                let pq = project_modified_with(zq, zu, &pu, theta, weights.lambda)?;
                (pu, pq)
            }
            BcKind::Mixed => (
                project_one_sided(zu, mesh.clone(), k, theta, Side::Right)?,
                project_one_sided(zq, mesh.clone(), k, 1.0 - theta, Side::Left)?,
            ),
            BcKind::Dirichlet => {
                let pq = project_one_sided(zq, mesh.clone(), k, 1.0 - theta, Side::Left)?;
                let pu = project_dirichlet_endpoint(zu, zq, &pq, theta)?;
                (pu, pq)
            }
        };
        w_u0.push(level_zero_residual(zu, &pu)?);
        w_q0.push(level_zero_residual(zq, &pq)?);
        proj_u.push(pu);
        proj_q.push(pq);
    }
    Ok(CorrectionStack {
        k,
        depth: 0,
        weights,
        bc,
        t,
        proj_u,
        proj_q,
        w_u: vec![w_u0],
        w_q: vec![w_q0],
    })
}

/// `z - P z` over-resolved; modes below `k` vanish by construction and are set
/// to zero rather than carrying quadrature round-off into the next level.
fn level_zero_residual(z: impl Fn(f64) -> f64, p: &Field) -> Result<Field> {
    let k = p.degree();
    let mut w = Field::project_l2_local(z, p.mesh().clone(), k + LEVEL_ZERO_MARGIN).sub(p)?;
    for j in 0..w.n_cells() {
        w.cell_mut(j)[..k].fill(0.0);
    }
    Ok(w)
}

/// Full stack to depth `depth`, with every level carrying one more time
/// derivative than the interpolant needs (so `d_t w_{u,depth}` is available).
pub fn build_stack(
    sol: &dyn ExactSolution,
    t: f64,
    mesh: Arc<Mesh>,
    k: usize,
    depth: usize,
    weights: FluxWeights,
    bc: BcKind,
) -> Result<CorrectionStack> {
    check_depth(k, depth)?;
    let mut stack = build_level_zero(sol, t, mesh, k, weights, bc, depth + 1)?;
    for level in 1..=depth {
        let orders = depth + 2 - level;
        let mut us = Vec::with_capacity(orders);
        let mut qs = Vec::with_capacity(orders);
        for b in 0..orders {
            let (wu, wq) = next_level(
                &stack.w_q[level - 1][b],
                &stack.w_u[level - 1][b + 1],
                k,
                level,
                weights,
                bc,
            )?;
            us.push(wu);
            qs.push(wq);
        }
        stack.w_u.push(us);
        stack.w_q.push(qs);
        stack.depth = level;
    }
    Ok(stack)
}

/// `k` lowest modes of `hbar_j D^{-1} f` on every cell.
fn scaled_antiderivative_moments(f: &Field, k: usize) -> Vec<Vec<f64>> {
    let mesh = f.mesh();
    (0..f.n_cells())
        .map(|j| {
            let hbar = 0.5 * mesh.width(j);
            let anti = antiderivative_modal(f.cell(j));
            anti[..k].iter().map(|c| hbar * c).collect()
        })
        .collect()
}

fn next_level(
    prev_q: &Field,
    prev_u_dt: &Field,
    k: usize,
    level: usize,
    weights: FluxWeights,
    bc: BcKind,
) -> Result<(Field, Field)> {
    let mesh = prev_q.mesh().clone();
    let n = mesh.n_cells();
    let mut wu = Field::zeros(mesh.clone(), k);
    let mut wq = Field::zeros(mesh.clone(), k);
    let from_q = scaled_antiderivative_moments(prev_q, k);
    let from_u = scaled_antiderivative_moments(prev_u_dt, k);
    for j in 0..n {
        for m in 0..k {
            wu.cell_mut(j)[m] = from_q[j][m];
            wq.cell_mut(j)[m] = from_q[j][m] + from_u[j][m];
        }
    }
    let (theta, theta_tilde) = (weights.theta, weights.theta_tilde());
    let zeros = vec![0.0; n + 1];
    let (u_sys, q_sys) = match bc {
        BcKind::Periodic => {
            let u_sys = TraceSystem {
                weight: theta,
                targets: zeros.clone(),
                closure: Closure::Periodic,
            };
            u_sys.solve_top_mode(&mut wu, k)?;
            let targets = if weights.is_split() {
                // (w_q)^{(1-theta)} = (w_u)^{(lambda)}
                let mut t: Vec<f64> = (0..=n)
                    .map(|i| wu.weighted_trace(i, weights.lambda, true).unwrap())
                    .collect();
                t[0] = t[n];
                t
            } else {
                zeros
            };
            let q_sys = TraceSystem {
                weight: theta_tilde,
                targets,
                closure: Closure::Periodic,
            };
            q_sys.solve_top_mode(&mut wq, k)?;
            (u_sys, q_sys)
        }
        BcKind::Mixed => {
            let u_sys = TraceSystem {
                weight: theta,
                targets: zeros.clone(),
                closure: Closure::RightPinned,
            };
            u_sys.solve_top_mode(&mut wu, k)?;
            let q_sys = TraceSystem {
                weight: theta_tilde,
                targets: zeros,
                closure: Closure::LeftPinned,
            };
            q_sys.solve_top_mode(&mut wq, k)?;
            (u_sys, q_sys)
        }
        BcKind::Dirichlet => {
            let q_sys = TraceSystem {
                weight: theta_tilde,
                targets: zeros.clone(),
                closure: Closure::LeftPinned,
            };
            q_sys.solve_top_mode(&mut wq, k)?;
            let mut targets = zeros;
            targets[n] = wq.right_end(n - 1);
            let u_sys = TraceSystem {
                weight: theta,
                targets,
                closure: Closure::RightPinned,
            };
            u_sys.solve_top_mode(&mut wu, k)?;
            (u_sys, q_sys)
        }
    };
    verify_level(&wu, &u_sys, k, level, "w_u")?;
    verify_level(&wq, &q_sys, k, level, "w_q")?;
    Ok((wu, wq))
}

/// Trace conditions, plus vanishing of the modes below `k - level`.
fn verify_level(f: &Field, sys: &TraceSystem, k: usize, level: usize, what: &str) -> Result<()> {
    let scale = f
        .coeffs()
        .iter()
        .fold(sys.scale(), |a, c| a.max(c.abs()))
        .max(f64::MIN_POSITIVE);
    let trace = sys.residual(f) / scale;
    let below = k.saturating_sub(level);
    let mut ortho: f64 = 0.0;
    for j in 0..f.n_cells() {
        for m in 0..below {
            ortho = ortho.max(f.coeff(j, m).abs());
        }
    }
    ortho /= scale;
    if trace > VERIFY_TOL || ortho > 1e-12 {
        return Err(LdgError::VerificationFailed(format!(
            "{what} level {level}: trace residual {trace:e}, low-mode residual {ortho:e}"
        )));
    }
    Ok(())
}

/// `u_I(., 0)` with `depth` correction levels: the initial datum that makes the
/// numerical solution start exactly on the interpolant.
pub fn initial_data(
    sol: &dyn ExactSolution,
    mesh: Arc<Mesh>,
    k: usize,
    depth: usize,
    weights: FluxWeights,
    bc: BcKind,
) -> Result<Field> {
    let stack = build_stack(sol, 0.0, mesh, k, depth, weights, bc)?;
    Ok(stack.interpolant().0)
}
