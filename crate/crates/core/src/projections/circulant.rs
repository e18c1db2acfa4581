use crate::error::{LdgError, Result};

/// The two-band periodic system `w x_j + s (1 - w) x_{j+1} = b_j` (indices mod N),
/// i.e. `circ(w, s(1 - w), 0, ..., 0)` with `s = (-1)^k`.
#[derive(Debug, Clone)]
pub struct CirculantSystem {
    pub theta: f64,
    /// `(-1)^k`.
    pub sign: f64,
    pub rhs: Vec<f64>,
}

impl CirculantSystem {
    pub fn new(theta: f64, k: usize, rhs: Vec<f64>) -> Self {
        CirculantSystem {
            theta,
            sign: if k % 2 == 0 { 1.0 } else { -1.0 },
            rhs,
        }
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn diagonal(&self) -> f64 {
        self.theta
    }

    pub fn off_diagonal(&self) -> f64 {
        self.sign * (1.0 - self.theta)
    }

    /// `p = (-1)^k (theta - 1) / theta`.
    pub fn ratio(&self) -> f64 {
        self.sign * (self.theta - 1.0) / self.theta
    }

    /// `theta^N (1 - p^N)`.
    pub fn determinant(&self) -> f64 {
        let n = self.dim() as i32;
        self.theta.powi(n) * (1.0 - self.ratio().powi(n))
    }

    /// `|1 - r^N|` for the sweep ratio actually used; `r = p` when `|p| <= 1`,
    /// otherwise `1/p`.
    pub fn singularity_gap(&self) -> f64 {
        let (w, a) = (self.diagonal(), self.off_diagonal());
        let n = self.dim() as i32;
        if w.abs() >= a.abs() {
            (1.0 - (-a / w).powi(n)).abs()
        } else {
            (1.0 - (-w / a).powi(n)).abs()
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let (w, a) = (self.diagonal(), self.off_diagonal());
        (0..n).map(|j| w * x[j] + a * x[(j + 1) % n]).collect()
    }
}

/// O(N) solve: a bidiagonal sweep carrying the wrap-around unknown as a
/// rank-one term, closed by the last (cyclic) equation.
pub fn circulant_solve(sys: &CirculantSystem) -> Result<Vec<f64>> {
    let n = sys.dim();
    let (w, a) = (sys.diagonal(), sys.off_diagonal());
    let gap = sys.singularity_gap();
    if sys.theta == 0.5 || !(gap >= 1e-10) {
        return Err(LdgError::NearSingular {
            theta: sys.theta,
            gap,
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let b = &sys.rhs;
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    if w.abs() >= a.abs() {
        // backward: x_j = (b_j - a x_{j+1}) / w, x_{N} wraps to x_1 = t
        alpha[n - 1] = b[n - 1] / w;
        beta[n - 1] = -a / w;
        for j in (0..n - 1).rev() {
            alpha[j] = (b[j] - a * alpha[j + 1]) / w;
            beta[j] = -a * beta[j + 1] / w;
        }
        let t = alpha[0] / (1.0 - beta[0]);
        let mut x: Vec<f64> = (0..n).map(|j| alpha[j] + beta[j] * t).collect();
        x[0] = t;
        Ok(x)
    } else {
        // forward: x_{j+1} = (b_j - w x_j) / a with x_1 = t
        alpha[0] = 0.0;
        beta[0] = 1.0;
        for j in 0..n - 1 {
            alpha[j + 1] = (b[j] - w * alpha[j]) / a;
            beta[j + 1] = -w * beta[j] / a;
        }
        let t = (b[n - 1] - w * alpha[n - 1]) / (w * beta[n - 1] + a);
        Ok((0..n).map(|j| alpha[j] + beta[j] * t).collect())
    }
}
