//! Small dense Hermitian helpers over `nalgebra`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::lattice::IndexWindow;
use crate::spectra::{fiber, GeneratorSystem};

pub type CMatrix = DMatrix<C64>;

/// Window-by-generator matrix whose columns are the windowed fibers, and the
/// summed tail bound of all generators.
pub fn fiber_matrix(sys: &GeneratorSystem, xi: &[f64], w: &IndexWindow) -> Result<(CMatrix, f64)> {
    let mut m = CMatrix::zeros(w.len(), sys.len());
    let mut tail = 0.0;
    for (c, g) in sys.generators().iter().enumerate() {
        let f = fiber(g, xi, w)?;
        for (r, v) in f.values.iter().enumerate() {
            m[(r, c)] = *v;
        }
        tail += f.tail_bound;
    }
    Ok((m, tail))
}

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn hermitian_eigen(m: &CMatrix) -> Eigen {
    let n = m.nrows();
    if n == 0 {
        return Eigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        };
    }
    // symmetrize so round-off cannot leak into the solver
    let h = (m + m.adjoint()).scale(0.5);
    let se = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Eigen { values, vectors }
}

/// `max |m - m^H|` relative to `max |m|` (zero for the zero matrix).
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let d = (m - m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    d / scale
}

/// `<T v, v>` for Hermitian `T`, real part.
pub fn quad(t: &CMatrix, v: &[C64]) -> f64 {
    let n = v.len();
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..n {
        if v[r] == C64::new(0.0, 0.0) {
            continue;
        }
        let mut row = C64::new(0.0, 0.0);
        for c in 0..n {
            row += t[(r, c)] * v[c];
        }
        acc += v[r].conj() * row;
    }
    acc.re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(2.0, 0.0)],
        );
        let e = hermitian_eigen(&m);
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            2,
            e.values.iter().map(|&v| C64::new(v, 0.0)),
        ));
        let back = &e.vectors * d * e.vectors.adjoint();
        assert!((back - &m).norm() < 1e-13);
        assert_eq!(hermitian_defect(&m), 0.0);
        let v = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        assert!((quad(&m, &v) - 2.0).abs() < 1e-15);
    }
}
