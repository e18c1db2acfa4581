use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LdgError, Result};

/// Partition `0 = x_{1/2} < ... < x_{N+1/2} = L` of `[0, L]`.
///
/// Cells are 0-based here: cell `j` spans `boundaries[j]..boundaries[j + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    length: f64,
    boundaries: Vec<f64>,
    widths: Vec<f64>,
    centers: Vec<f64>,
    h: f64,
    quasi_uniform_ratio: f64,
}

impl Mesh {
    pub fn uniform(n: usize, length: f64) -> Result<Self> {
        check_sizes(n, length)?;
        let boundaries = (0..=n)
            .map(|i| {
                if i == n {
                    length
                } else {
                    length * i as f64 / n as f64
                }
            })
            .collect();
        let mut mesh = Self::from_boundaries_unchecked(boundaries);
        let dx = length / n as f64;
        mesh.widths.iter_mut().for_each(|w| *w = dx);
        mesh.h = dx;
        mesh.quasi_uniform_ratio = 1.0;
        Ok(mesh)
    }

    /// Interior boundaries shifted by uniform offsets of at most `amplitude * L / N`.
    pub fn perturbed(n: usize, length: f64, amplitude: f64, seed: u64) -> Result<Self> {
        check_sizes(n, length)?;
        if !(0.0..0.4).contains(&amplitude) {
            return Err(LdgError::InvalidAmplitude(amplitude));
        }
        if amplitude == 0.0 {
            return Self::uniform(n, length);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dx = length / n as f64;
        let boundaries = (0..=n)
            .map(|i| match i {
                0 => 0.0,
                i if i == n => length,
                i => i as f64 * dx + amplitude * dx * rng.gen_range(-1.0..=1.0),
            })
            .collect();
        Ok(Self::from_boundaries_unchecked(boundaries))
    }

    pub fn from_boundaries(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 3 {
            return Err(LdgError::InvalidN(boundaries.len().saturating_sub(1)));
        }
        if boundaries[0] != 0.0 {
            return Err(LdgError::InvalidConfig("mesh must start at x = 0".into()));
        }
        if boundaries.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LdgError::InvalidConfig(
                "mesh boundaries must be strictly increasing".into(),
            ));
        }
        Ok(Self::from_boundaries_unchecked(boundaries))
    }

    fn from_boundaries_unchecked(boundaries: Vec<f64>) -> Self {
        let widths: Vec<f64> = boundaries.windows(2).map(|w| w[1] - w[0]).collect();
        let centers = boundaries.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let h = widths.iter().cloned().fold(0.0, f64::max);
        let hmin = widths.iter().cloned().fold(f64::INFINITY, f64::min);
        Mesh {
            length: *boundaries.last().unwrap(),
            boundaries,
            widths,
            centers,
            h,
            quasi_uniform_ratio: hmin / h,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.widths.len()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn width(&self, j: usize) -> f64 {
        self.widths[j]
    }

    pub fn center(&self, j: usize) -> f64 {
        self.centers[j]
    }

    /// Left end `x_{j-1/2}` of cell `j`.
    pub fn left(&self, j: usize) -> f64 {
        self.boundaries[j]
    }

    /// Right end `x_{j+1/2}` of cell `j`.
    pub fn right(&self, j: usize) -> f64 {
        self.boundaries[j + 1]
    }

    /// Maximum cell width.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn quasi_uniform_ratio(&self) -> f64 {
        self.quasi_uniform_ratio
    }

    pub fn to_reference(&self, j: usize, x: f64) -> Result<f64> {
        let tol = 1e-12 * self.length.max(1.0);
        if x < self.left(j) - tol || x > self.right(j) + tol {
            return Err(LdgError::OutOfCell { cell: j, x });
        }
        Ok(2.0 * (x - self.centers[j]) / self.widths[j])
    }

    pub fn to_physical(&self, j: usize, xi: f64) -> f64 {
        self.centers[j] + 0.5 * self.widths[j] * xi
    }
}

fn check_sizes(n: usize, length: f64) -> Result<()> {
    if n < 2 {
        return Err(LdgError::InvalidN(n));
    }
    if length.is_nan() || length <= 0.0 {
        return Err(LdgError::InvalidLength(length));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn uniform_boundaries() {
        let m = Mesh::uniform(4, 2.0 * PI).unwrap();
        let expect = [0.0, PI / 2.0, PI, 1.5 * PI, 2.0 * PI];
        for (a, b) in m.boundaries().iter().zip(expect) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        let m = Mesh::uniform(20, 2.0 * PI).unwrap();
        assert_relative_eq!(m.h(), 0.3141592653589793, epsilon = 1e-15);
        assert_eq!(m.quasi_uniform_ratio(), 1.0);
        assert!(m.widths().iter().all(|w| *w == 2.0 * PI / 20.0));
        let total: f64 = m.widths().iter().sum();
        assert!((total - 2.0 * PI).abs() < 1e-13 * 2.0 * PI);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(Mesh::uniform(1, 1.0), Err(LdgError::InvalidN(1))));
        assert!(matches!(
            Mesh::perturbed(10, 1.0, 0.4, 1),
            Err(LdgError::InvalidAmplitude(_))
        ));
    }

    #[test]
    fn perturbed_mesh_contract() {
        let u = Mesh::uniform(16, 3.0).unwrap();
        assert_eq!(Mesh::perturbed(16, 3.0, 0.0, 9).unwrap(), u);
        let a = Mesh::perturbed(16, 3.0, 0.3, 42).unwrap();
        let b = Mesh::perturbed(16, 3.0, 0.3, 42).unwrap();
        assert_eq!(a, b);
        let dx = 3.0 / 16.0;
        for &w in a.widths() {
            assert!(w >= 0.4 * dx - 1e-14);
        }
        assert_eq!(a.boundaries()[0], 0.0);
        assert_eq!(*a.boundaries().last().unwrap(), 3.0);
        assert!(a.quasi_uniform_ratio() > 0.0);
    }

    #[test]
    fn reference_map() {
        let m = Mesh::perturbed(12, 2.0 * PI, 0.25, 3).unwrap();
        for j in 0..m.n_cells() {
            assert_eq!(m.to_reference(j, m.center(j)).unwrap(), 0.0);
            assert_relative_eq!(m.to_reference(j, m.right(j)).unwrap(), 1.0, epsilon = 1e-14);
            assert_relative_eq!(m.to_reference(j, m.left(j)).unwrap(), -1.0, epsilon = 1e-14);
        }
        assert!(matches!(
            m.to_reference(0, m.right(1)),
            Err(LdgError::OutOfCell { .. })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let j = rng.gen_range(0..m.n_cells());
            let x = rng.gen_range(m.left(j)..=m.right(j));
            let back = m.to_physical(j, m.to_reference(j, x).unwrap());
            assert!((back - x).abs() <= 1e-14 * m.length());
        }
    }
}
