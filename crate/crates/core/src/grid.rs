//! Half-step offset sampling grids.
//!
//! Axis points are `lo + (m + 1/2) h` with `h = (hi - lo) / M`, so the
//! breakpoints of indicator spectra on dyadic multiples of `pi` are never
//! sampled on the base cell.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    dim: usize,
    per_axis: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    #[serde(skip)]
    points: Vec<Vec<f64>>,
}

impl Grid {
    /// Tensor grid on the box `[lo, hi)` with `per_axis` points per axis.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, per_axis: usize) -> Result<Self> {
        let dim = lo.len();
        if dim == 0 || hi.len() != dim || per_axis == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid needs matching nonempty bounds and points > 0 (dim {dim}, points {per_axis})"
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidParameter("grid bounds must satisfy lo < hi".into()));
        }
        let total = per_axis
            .checked_pow(dim as u32)
            .filter(|&t| t <= 1 << 24)
            .ok_or_else(|| Error::InvalidParameter("grid too large".into()))?;
        let axes: Vec<Vec<f64>> = (0..dim)
            .map(|d| {
                let h = (hi[d] - lo[d]) / per_axis as f64;
                (0..per_axis)
                    .map(|m| lo[d] + (m as f64 + 0.5) * h)
                    .collect()
            })
            .collect();
        let mut points = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            points.push((0..dim).map(|d| axes[d][idx[d]]).collect());
            for d in (0..dim).rev() {
                idx[d] += 1;
                if idx[d] < per_axis {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(Self {
            dim,
            per_axis,
            lo,
            hi,
            points,
        })
    }

    /// The base cell `[-pi, pi)^n`.
    pub fn base(dim: usize, per_axis: usize) -> Result<Self> {
        Self::new(vec![-PI; dim], vec![PI; dim], per_axis)
    }

    /// The cube `[lo, hi)^n`.
    pub fn cube(dim: usize, lo: f64, hi: f64, per_axis: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], per_axis)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Volume of one grid cell, the quadrature weight of every point.
    pub fn cell_volume(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) / self.per_axis as f64)
            .product()
    }
}

/// Representative of `xi` in `[-pi, pi)^n` and the lattice shift `k` with
/// `xi = base + 2 pi k`.
pub fn recenter(xi: &[f64]) -> (Vec<f64>, Vec<i64>) {
    let two_pi = 2.0 * PI;
    let mut base = Vec::with_capacity(xi.len());
    let mut shift = Vec::with_capacity(xi.len());
    for &x in xi {
        let k = ((x + PI) / two_pi).floor();
        let mut b = x - two_pi * k;
        let mut k = k as i64;
        // guard the rounding edge at +pi
        if b >= PI {
            b -= two_pi;
            k += 1;
        } else if b < -PI {
            b += two_pi;
            k -= 1;
        }
        base.push(b);
        shift.push(k);
    }
    (base, shift)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offset_points() {
        let g = Grid::base(1, 4).unwrap();
        let h = 2.0 * PI / 4.0;
        let xs: Vec<f64> = g.points().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-PI + 0.5 * h, -PI + 1.5 * h, -PI + 2.5 * h, -PI + 3.5 * h]);
        assert!((g.cell_volume() - h).abs() < 1e-15);
    }

    #[test]
    fn two_dimensional_order() {
        let g = Grid::base(2, 3).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.points()[1][0], g.points()[0][0]);
        assert!(g.points()[1][1] > g.points()[0][1]);
    }

    #[test]
    fn recentering() {
        let (b, k) = recenter(&[0.3 + 4.0 * PI, -0.3 - 2.0 * PI]);
        assert!((b[0] - 0.3).abs() < 1e-12);
        assert_eq!(k, vec![2, -1]);
        assert!((b[1] + 0.3).abs() < 1e-12);
        let (b, k) = recenter(&[PI]);
        assert_eq!(k, vec![1]);
        assert!((b[0] + PI).abs() < 1e-15);
    }

    #[test]
    fn bad_grids() {
        assert!(Grid::base(1, 0).is_err());
        assert!(Grid::new(vec![1.0], vec![0.0], 4).is_err());
    }
}
