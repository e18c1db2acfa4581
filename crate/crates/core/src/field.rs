//! Piecewise polynomials stored as modal Legendre coefficients, one row per cell.

use std::io::Write;
use std::sync::Arc;

use crate::basis::{self, gauss_rule, GaussRule};
use crate::error::{LdgError, Result};
use crate::mesh::Mesh;

#[derive(Debug, Clone)]
pub struct Field {
    mesh: Arc<Mesh>,
    degree: usize,
    coeffs: Vec<f64>,
}

impl Field {
    pub fn zeros(mesh: Arc<Mesh>, degree: usize) -> Self {
        let len = mesh.n_cells() * (degree + 1);
        Field {
            mesh,
            degree,
            coeffs: vec![0.0; len],
        }
    }

    pub fn from_coeffs(mesh: Arc<Mesh>, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != mesh.n_cells() * (degree + 1) {
            return Err(LdgError::MeshMismatch);
        }
        Ok(Field {
            mesh,
            degree,
            coeffs,
        })
    }

    /// Field equal to `value` everywhere.
    pub fn constant(mesh: Arc<Mesh>, degree: usize, value: f64) -> Self {
        let mut f = Self::zeros(mesh, degree);
        for j in 0..f.n_cells() {
            f.cell_mut(j)[0] = value;
        }
        f
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_cells(&self) -> usize {
        self.mesh.n_cells()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn cell(&self, j: usize) -> &[f64] {
        let w = self.degree + 1;
        &self.coeffs[j * w..(j + 1) * w]
    }

    pub fn cell_mut(&mut self, j: usize) -> &mut [f64] {
        let w = self.degree + 1;
        &mut self.coeffs[j * w..(j + 1) * w]
    }

    pub fn coeff(&self, j: usize, m: usize) -> f64 {
        if m > self.degree {
            0.0
        } else {
            self.coeffs[j * (self.degree + 1) + m]
        }
    }

    pub fn same_space(&self, other: &Field) -> bool {
        self.degree == other.degree
            && (Arc::ptr_eq(&self.mesh, &other.mesh) || self.mesh == other.mesh)
    }

    fn check_mesh(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh {
            Ok(())
        } else {
            Err(LdgError::MeshMismatch)
        }
    }

    pub fn eval(&self, j: usize, xi: f64) -> f64 {
        basis::eval_modal(self.cell(j), xi)
    }

    /// Physical derivative `d/dx` at reference coordinate `xi` of cell `j`.
    pub fn eval_deriv(&self, j: usize, xi: f64) -> f64 {
        2.0 / self.mesh.width(j) * basis::eval_modal_deriv(self.cell(j), xi)
    }

    /// Trace from inside cell `j` at its right end: `f^-_{j+1/2}`.
    pub fn right_end(&self, j: usize) -> f64 {
        basis::right_value(self.cell(j))
    }

    /// Trace from inside cell `j` at its left end: `f^+_{j-1/2}`.
    pub fn left_end(&self, j: usize) -> f64 {
        basis::left_value(self.cell(j))
    }

    /// `(f^-, f^+)` at interface `i` (0..=N, `i` is the right end of cell `i - 1`).
    ///
    /// With `periodic`, interfaces `0` and `N` coincide. Without it, only
    /// interior interfaces are accepted.
    pub fn traces(&self, interface: usize, periodic: bool) -> Result<(f64, f64)> {
        let n = self.n_cells();
        if interface > n {
            return Err(LdgError::BoundaryInterface(interface));
        }
        if !periodic && (interface == 0 || interface == n) {
            return Err(LdgError::BoundaryInterface(interface));
        }
        let left_cell = if interface == 0 { n - 1 } else { interface - 1 };
        let right_cell = if interface == n { 0 } else { interface };
        Ok((self.right_end(left_cell), self.left_end(right_cell)))
    }

    /// `w f^- + (1 - w) f^+` at an interface.
    pub fn weighted_trace(&self, interface: usize, weight: f64, periodic: bool) -> Result<f64> {
        let (minus, plus) = self.traces(interface, periodic)?;
        Ok(weight * minus + (1.0 - weight) * plus)
    }

    /// `[f] = f^+ - f^-`.
    pub fn jump(&self, interface: usize, periodic: bool) -> Result<f64> {
        let (minus, plus) = self.traces(interface, periodic)?;
        Ok(plus - minus)
    }

    pub fn mean_trace(&self, interface: usize, periodic: bool) -> Result<f64> {
        self.weighted_trace(interface, 0.5, periodic)
    }

    /// One-sided trace at a domain end: `f^+_{1/2}` for `interface == 0`,
    /// `f^-_{N+1/2}` for `interface == N`.
    pub fn one_sided_trace(&self, interface: usize) -> Result<f64> {
        let n = self.n_cells();
        match interface {
            0 => Ok(self.left_end(0)),
            i if i == n => Ok(self.right_end(n - 1)),
            i => Err(LdgError::InvalidConfig(format!(
                "interface {i} is not a domain end"
            ))),
        }
    }

    /// Local L2 projection onto degree `degree` using `2 * degree + 6` Gauss nodes.
    pub fn project_l2_local(g: impl Fn(f64) -> f64, mesh: Arc<Mesh>, degree: usize) -> Self {
        let rule = gauss_rule(2 * degree + 6);
        Self::project_l2_with(g, mesh, degree, &rule)
    }

    pub fn project_l2_with(
        g: impl Fn(f64) -> f64,
        mesh: Arc<Mesh>,
        degree: usize,
        rule: &GaussRule,
    ) -> Self {
        let table = legendre_at(rule, degree);
        let mut f = Self::zeros(mesh.clone(), degree);
        for j in 0..mesh.n_cells() {
            let samples: Vec<f64> = rule
                .nodes
                .iter()
                .map(|&xi| g(mesh.to_physical(j, xi)))
                .collect();
            let row = f.cell_mut(j);
            for (m, c) in row.iter_mut().enumerate() {
                let s: f64 = (0..rule.len())
                    .map(|q| rule.weights[q] * samples[q] * table[q][m])
                    .sum();
                // (2m+1)/h_j * (g, L_m)_j with dx = h_j/2 dxi
                *c = 0.5 * (2 * m + 1) as f64 * s;
            }
        }
        f
    }

    /// Same field with coefficients padded with zeros (or truncated) to `degree`.
    pub fn with_degree(&self, degree: usize) -> Field {
        let mut out = Field::zeros(self.mesh.clone(), degree);
        for j in 0..self.n_cells() {
            let src = self.cell(j);
            let dst = out.cell_mut(j);
            let n = src.len().min(dst.len());
            dst[..n].copy_from_slice(&src[..n]);
        }
        out
    }

    /// L2 norm by modal Parseval: `sum_j sum_m h_j / (2m + 1) c_{j,m}^2`.
    pub fn l2_norm(&self) -> f64 {
        self.inner_product_unchecked(self).sqrt()
    }

    /// Max of |f| over `4(k+1)` uniformly spaced points per cell plus the endpoints.
    pub fn linf_norm(&self) -> f64 {
        let samples = 4 * (self.degree + 1);
        let mut best: f64 = 0.0;
        for j in 0..self.n_cells() {
            for s in 0..=samples {
                let xi = -1.0 + 2.0 * s as f64 / samples as f64;
                best = best.max(self.eval(j, xi).abs());
            }
        }
        best
    }

    pub fn inner_product(&self, other: &Field) -> Result<f64> {
        self.check_mesh(other)?;
        Ok(self.inner_product_unchecked(other))
    }

    fn inner_product_unchecked(&self, other: &Field) -> f64 {
        let top = self.degree.min(other.degree);
        let mut acc = 0.0;
        for j in 0..self.n_cells() {
            let h = self.mesh.width(j);
            let (a, b) = (self.cell(j), other.cell(j));
            for m in 0..=top {
                acc += h / (2 * m + 1) as f64 * a[m] * b[m];
            }
        }
        acc
    }

    /// `self - other`, on the larger of the two degrees.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_mesh(other)?;
        let degree = self.degree.max(other.degree);
        let mut out = self.with_degree(degree);
        for j in 0..self.n_cells() {
            let src = other.cell(j);
            for (d, s) in out.cell_mut(j).iter_mut().zip(src) {
                *d -= s;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.check_mesh(other)?;
        let degree = self.degree.max(other.degree);
        let mut out = self.with_degree(degree);
        for j in 0..self.n_cells() {
            let src = other.cell(j);
            for (d, s) in out.cell_mut(j).iter_mut().zip(src) {
                *d += s;
            }
        }
        Ok(out)
    }

    pub fn scale(&mut self, s: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Writes `j,m,coeff` rows.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "j,m,coeff")?;
        for j in 0..self.n_cells() {
            for (m, c) in self.cell(j).iter().enumerate() {
                writeln!(out, "{j},{m},{c:.17e}")?;
            }
        }
        Ok(())
    }
}

/// `table[q][m] = L_m(rule.nodes[q])`, `m <= degree`.
pub(crate) fn legendre_at(rule: &GaussRule, degree: usize) -> Vec<Vec<f64>> {
    rule.nodes
        .iter()
        .map(|&x| {
            let mut v = vec![0.0; degree + 2];
            let mut d = vec![0.0; degree + 2];
            basis::legendre_table(degree + 1, x, &mut v, &mut d);
            v.truncate(degree + 1);
            v
        })
        .collect()
}
