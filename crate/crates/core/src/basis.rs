//! Reference-cell polynomial machinery on `[-1, 1]`.
//!
//! Everything here is mesh-free: Legendre values and derivatives, Gauss-Legendre
//! rules, the generalized Radau polynomials and their roots, and the modal
//! antiderivative that vanishes at the left end of the reference cell.

use nalgebra::DMatrix;

use crate::error::{LdgError, Result};

/// `L_m(xi)` by the three-term recurrence.
pub fn legendre(m: usize, xi: f64) -> f64 {
    match m {
        0 => 1.0,
        1 => xi,
        _ => {
            let (mut p0, mut p1) = (1.0, xi);
            for n in 1..m {
                let nf = n as f64;
                let p2 = ((2.0 * nf + 1.0) * xi * p1 - nf * p0) / (nf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// `L_m'(xi)`, using `L'_{n+1} = L'_{n-1} + (2n+1) L_n` so the endpoints are exact.
pub fn legendre_deriv(m: usize, xi: f64) -> f64 {
    let mut vals = vec![0.0; m + 1];
    let mut ders = vec![0.0; m + 1];
    legendre_table(m, xi, &mut vals, &mut ders);
    ders[m]
}

/// Fills `vals[n] = L_n(xi)` and `ders[n] = L_n'(xi)` for `n <= max_degree`.
pub fn legendre_table(max_degree: usize, xi: f64, vals: &mut [f64], ders: &mut [f64]) {
    vals[0] = 1.0;
    ders[0] = 0.0;
    if max_degree == 0 {
        return;
    }
    vals[1] = xi;
    ders[1] = 1.0;
    for n in 1..max_degree {
        let nf = n as f64;
        vals[n + 1] = ((2.0 * nf + 1.0) * xi * vals[n] - nf * vals[n - 1]) / (nf + 1.0);
        ders[n + 1] = ders[n - 1] + (2.0 * nf + 1.0) * vals[n];
    }
}

/// Value of `sum_m coeffs[m] L_m(xi)`.
pub fn eval_modal(coeffs: &[f64], xi: f64) -> f64 {
    let mut acc = 0.0;
    let (mut p0, mut p1) = (1.0, xi);
    for (m, c) in coeffs.iter().enumerate() {
        let p = match m {
            0 => 1.0,
            1 => xi,
            _ => {
                let nf = (m - 1) as f64;
                let p2 = ((2.0 * nf + 1.0) * xi * p1 - nf * p0) / (nf + 1.0);
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        acc += c * p;
    }
    acc
}

/// Reference-coordinate derivative of `sum_m coeffs[m] L_m(xi)`.
pub fn eval_modal_deriv(coeffs: &[f64], xi: f64) -> f64 {
    if coeffs.is_empty() {
        return 0.0;
    }
    let n = coeffs.len() - 1;
    let mut vals = vec![0.0; n + 1];
    let mut ders = vec![0.0; n + 1];
    legendre_table(n, xi, &mut vals, &mut ders);
    coeffs.iter().zip(&ders).map(|(c, d)| c * d).sum()
}

/// `sum_m coeffs[m]`, the value at `xi = 1`.
pub fn right_value(coeffs: &[f64]) -> f64 {
    coeffs.iter().sum()
}

/// `sum_m (-1)^m coeffs[m]`, the value at `xi = -1`.
pub fn left_value(coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| if m % 2 == 0 { *c } else { -*c })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral over `[-1, 1]` of `f`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_rule(n: usize) -> GaussRule {
    assert!(n >= 1, "gauss_rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Chebyshev-like initial guess for the i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let p = legendre(n, x);
            let d = legendre_deriv(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let d = legendre_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

/// Tabulated reference-cell data for a fixed polynomial degree.
#[derive(Debug, Clone)]
pub struct Basis {
    pub degree: usize,
    pub quad: GaussRule,
    /// Rule for integrals against non-polynomial data (`2k + 6` nodes).
    pub error_quad: GaussRule,
    /// `values[q][m] = L_m(quad.nodes[q])` for `m <= degree + 2`.
    pub values: Vec<Vec<f64>>,
    pub derivs: Vec<Vec<f64>>,
}

impl Basis {
    pub fn new(degree: usize) -> Self {
        Self::with_quad_order(degree, degree + 3)
    }

    pub fn with_quad_order(degree: usize, quad_order: usize) -> Self {
        let quad = gauss_rule(quad_order);
        let top = degree + 2;
        let mut values = Vec::with_capacity(quad.len());
        let mut derivs = Vec::with_capacity(quad.len());
        for &x in &quad.nodes {
            let mut v = vec![0.0; top + 1];
            let mut d = vec![0.0; top + 1];
            legendre_table(top, x, &mut v, &mut d);
            values.push(v);
            derivs.push(d);
        }
        Basis {
            degree,
            quad,
            error_quad: gauss_rule(2 * degree + 6),
            values,
            derivs,
        }
    }

    pub fn quad_order(&self) -> usize {
        self.quad.len()
    }
}

/// Legendre coefficients (length `k + 2`) of the generalized Radau polynomial
/// `R*_{k+1}` for weight `theta`.
pub fn radau_polynomial(k: usize, theta: f64) -> Vec<f64> {
    let mut c = vec![0.0; k + 2];
    let bias = 2.0 * theta - 1.0;
    if k % 2 == 0 {
        c[k + 1] = 1.0;
        c[k] = -bias;
    } else {
        c[k + 1] = bias;
        c[k] = -1.0;
    }
    c
}

/// Roots of a generalized Radau polynomial and of its derivative inside `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct RadauSpec {
    pub k: usize,
    pub theta: f64,
    pub even: bool,
    /// Legendre coefficients of `R*_{k+1}`.
    pub coeffs: Vec<f64>,
    pub function_roots: Vec<f64>,
    pub derivative_roots: Vec<f64>,
    /// Real or complex roots that fell outside the reference cell.
    pub discarded_function_roots: usize,
    pub discarded_derivative_roots: usize,
}

impl RadauSpec {
    pub fn discarded(&self) -> usize {
        self.discarded_function_roots + self.discarded_derivative_roots
    }
}

pub fn radau_roots(k: usize, theta: f64) -> Result<RadauSpec> {
    if k == 0 {
        return Err(LdgError::InvalidConfig("Radau roots need k >= 1".into()));
    }
    let coeffs = radau_polynomial(k, theta);
    let dcoeffs = derivative_modal(&coeffs);
    let function_roots = cell_roots(&coeffs);
    let derivative_roots = cell_roots(&dcoeffs[..k + 1]);
    if function_roots.is_empty() || derivative_roots.is_empty() {
        return Err(LdgError::NoRootsInCell { k, theta });
    }
    Ok(RadauSpec {
        k,
        theta,
        even: k % 2 == 0,
        discarded_function_roots: (k + 1) - function_roots.len(),
        discarded_derivative_roots: k - derivative_roots.len(),
        coeffs,
        function_roots,
        derivative_roots,
    })
}

/// Monomial coefficients (ascending powers) of a Legendre expansion.
pub fn legendre_to_monomial(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    let mut out = vec![0.0; n.max(1)];
    let mut prev = vec![0.0; n + 1];
    let mut cur = vec![0.0; n + 1];
    prev[0] = 1.0;
    if n > 1 {
        cur[1] = 1.0;
    }
    for (m, c) in coeffs.iter().enumerate() {
        let p = match m {
            0 => prev.clone(),
            1 => cur.clone(),
            _ => {
                let nf = (m - 1) as f64;
                let mut next = vec![0.0; n + 1];
                for i in 0..n {
                    next[i + 1] += (2.0 * nf + 1.0) * cur[i] / (nf + 1.0);
                    next[i] -= nf * prev[i] / (nf + 1.0);
                }
                prev = std::mem::replace(&mut cur, next);
                cur.clone()
            }
        };
        for i in 0..n {
            out[i] += c * p[i];
        }
    }
    out
}

/// Real roots of a Legendre series inside `[-1, 1]`, ascending and distinct.
fn cell_roots(coeffs: &[f64]) -> Vec<f64> {
    let mut mono = legendre_to_monomial(coeffs);
    while mono.len() > 1 && mono.last().is_some_and(|c| c.abs() < 1e-300) {
        mono.pop();
    }
    let deg = mono.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let scale = coeffs.iter().fold(0.0_f64, |a, c| a.max(c.abs())).max(1e-300);
    let lead = mono[deg];
    let mut companion = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -mono[i] / lead;
    }
    let eig = companion.complex_eigenvalues();

    let mut roots = Vec::new();
    let mut ok = true;
    for z in eig.iter() {
        if z.im.abs() > 1e-10 {
            continue;
        }
        if z.re < -1.0 - 1e-8 || z.re > 1.0 + 1e-8 {
            continue;
        }
        let r = newton_polish(coeffs, z.re.clamp(-1.0, 1.0));
        if (-1.0 - 1e-12..=1.0 + 1e-12).contains(&r) {
            if eval_modal(coeffs, r).abs() > 1e-10 * scale {
                ok = false;
            }
            roots.push(r.clamp(-1.0, 1.0));
        }
    }
    if !ok {
        roots = bisection_roots(coeffs);
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    roots
}

fn newton_polish(coeffs: &[f64], mut x: f64) -> f64 {
    for _ in 0..50 {
        let f = eval_modal(coeffs, x);
        let d = eval_modal_deriv(coeffs, x);
        if d == 0.0 {
            break;
        }
        let step = f / d;
        x -= step;
        if step.abs() < 1e-16 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// Sign-change bracketing on a fine grid followed by bisection.
fn bisection_roots(coeffs: &[f64]) -> Vec<f64> {
    let samples = 2000;
    let mut roots = Vec::new();
    let xs: Vec<f64> = (0..=samples)
        .map(|i| -1.0 + 2.0 * i as f64 / samples as f64)
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| eval_modal(coeffs, x)).collect();
    for i in 0..samples {
        if fs[i] == 0.0 {
            roots.push(xs[i]);
            continue;
        }
        if fs[i] * fs[i + 1] < 0.0 {
            let (mut a, mut b, mut fa) = (xs[i], xs[i + 1], fs[i]);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = eval_modal(coeffs, m);
                if fm == 0.0 || (b - a) < 1e-16 {
                    a = m;
                    b = m;
                    break;
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    if fs[samples] == 0.0 {
        roots.push(1.0);
    }
    roots
}

/// Modal coefficients of `int_{-1}^{xi} p`, one degree higher than the input.
pub fn antiderivative_modal(coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; coeffs.len() + 1];
    for (m, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        if m == 0 {
            out[0] += c;
            out[1] += c;
        } else {
            let s = c / (2 * m + 1) as f64;
            out[m + 1] += s;
            out[m - 1] -= s;
        }
    }
    out
}

/// Modal coefficients of `d/dxi` of a Legendre series (same length, top entry zero).
pub fn derivative_modal(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    let mut out = vec![0.0; n];
    // d_m = (2m+1) * sum_{j > m, j - m odd} c_j, accumulated from the top
    let mut odd_tail = 0.0;
    let mut even_tail = 0.0;
    for m in (0..n).rev() {
        // tails hold sums over j > m with parity of j
        let tail = if m % 2 == 0 { odd_tail } else { even_tail };
        out[m] = (2 * m + 1) as f64 * tail;
        if m % 2 == 0 {
            even_tail += coeffs[m];
        } else {
            odd_tail += coeffs[m];
        }
    }
    out
}
