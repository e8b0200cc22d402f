//! Fiber Gramians, dual Gramians, range projections, frame bounds and
//! normalized tight frame certification.
//!
//! With `F` the window-by-generator matrix of fibers at `xi`, the Gramian is
//! `F^H F` and the dual Gramian is `F F^H`. Both share their nonzero
//! spectrum, so every spectral question is answered from the small Gramian.

use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{Certificate, Witness};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::lattice::IndexWindow;
use crate::linalg::{fiber_matrix, hermitian_eigen, CMatrix};
use crate::spectra::GeneratorSystem;
use crate::C64;

/// Default relative cut below which an eigenvalue counts as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct FiberGramian {
    pub xi: Vec<f64>,
    pub matrix: CMatrix,
    pub tail_bound: f64,
}

#[derive(Debug, Clone)]
pub struct FiberDualGramian {
    pub xi: Vec<f64>,
    pub matrix: CMatrix,
    pub tail_bound: f64,
}

pub fn gramian(sys: &GeneratorSystem, xi: &[f64], w: &IndexWindow) -> Result<FiberGramian> {
    let (f, tail) = fiber_matrix(sys, xi, w)?;
    Ok(FiberGramian {
        xi: xi.to_vec(),
        matrix: f.adjoint() * &f,
        tail_bound: tail,
    })
}

pub fn dual_gramian(sys: &GeneratorSystem, xi: &[f64], w: &IndexWindow) -> Result<FiberDualGramian> {
    let (f, tail) = fiber_matrix(sys, xi, w)?;
    Ok(FiberDualGramian {
        xi: xi.to_vec(),
        matrix: &f * f.adjoint(),
        tail_bound: tail,
    })
}

/// Orthogonal projection onto the span of the windowed fibers.
#[derive(Debug, Clone)]
pub struct RangeProjection {
    pub xi: Vec<f64>,
    pub matrix: CMatrix,
    pub rank: usize,
    /// Orthonormal basis of the range, one column per retained eigenvalue.
    pub basis: CMatrix,
    /// Some eigenvalue fell in `[tol, sqrt(tol)]` (relative), so the rank is
    /// not well separated.
    pub ambiguous: bool,
    /// Frobenius distance between the dual Gramian and the projection; zero
    /// exactly when the fibers form a normalized tight frame for their span.
    pub dual_gramian_distance: f64,
    pub tail_bound: f64,
}

struct Spectral {
    fibers: CMatrix,
    values: Vec<f64>,
    vectors: CMatrix,
    tail: f64,
}

fn spectral(sys: &GeneratorSystem, xi: &[f64], w: &IndexWindow) -> Result<Spectral> {
    let (f, tail) = fiber_matrix(sys, xi, w)?;
    let g = f.adjoint() * &f;
    let e = hermitian_eigen(&g);
    Ok(Spectral {
        fibers: f,
        values: e.values,
        vectors: e.vectors,
        tail,
    })
}

impl Spectral {
    /// Orthonormal range basis `F v / sqrt(lambda)` for `lambda > cut`.
    fn range_basis(&self, cut: f64) -> CMatrix {
        let keep: Vec<usize> = (0..self.values.len()).filter(|&i| self.values[i] > cut).collect();
        let mut u = CMatrix::zeros(self.fibers.nrows(), keep.len());
        for (c, &i) in keep.iter().enumerate() {
            let col = &self.fibers * self.vectors.column(i) * C64::new(self.values[i].sqrt().recip(), 0.0);
            u.set_column(c, &col);
        }
        u
    }
}

fn relative_cut(values: &[f64], tol: f64) -> f64 {
    let top = values.iter().copied().fold(0.0, f64::max);
    tol * top
}

pub fn range_projection(sys: &GeneratorSystem, xi: &[f64], w: &IndexWindow, tol: f64) -> Result<RangeProjection> {
    let sp = spectral(sys, xi, w)?;
    let cut = relative_cut(&sp.values, tol);
    let top = sp.values.iter().copied().fold(0.0, f64::max);
    let ambiguous = top > 0.0
        && sp
            .values
            .iter()
            .any(|&v| v >= tol * top && v <= tol.sqrt() * top);
    let basis = sp.range_basis(cut);
    let distance = sp
        .values
        .iter()
        .map(|&v| if v > cut { (v - 1.0).powi(2) } else { v * v })
        .sum::<f64>()
        .sqrt();
    Ok(RangeProjection {
        xi: xi.to_vec(),
        matrix: &basis * basis.adjoint(),
        rank: basis.ncols(),
        basis,
        ambiguous,
        dual_gramian_distance: distance,
        tail_bound: sp.tail,
    })
}

/// Extremes of the Gramian spectrum at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FramePoint {
    pub xi: Vec<f64>,
    /// Smallest eigenvalue above the rank cut; `None` when the fiber space is
    /// zero at this point.
    pub min_nonzero_eig: Option<f64>,
    pub max_eig: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub rank_cut: f64,
    #[serde(skip)]
    pub points: Vec<FramePoint>,
}

/// Frame bound estimates over a grid. The rank cut is `rank_tol` times the
/// largest eigenvalue seen anywhere on the grid.
pub fn frame_bounds(sys: &GeneratorSystem, grid: &Grid, w: &IndexWindow, rank_tol: f64) -> Result<FrameBounds> {
    let spectra: Vec<Vec<f64>> = grid
        .points()
        .par_iter()
        .map(|xi| {
            let (f, _) = fiber_matrix(sys, xi, w)?;
            Ok(hermitian_eigen(&(f.adjoint() * &f)).values)
        })
        .collect::<Result<_>>()?;
    let top = spectra
        .iter()
        .flat_map(|v| v.iter().copied())
        .fold(0.0, f64::max);
    if top <= 0.0 {
        return Err(Error::Degenerate("all fibers vanish; no frame bounds".into()));
    }
    let cut = rank_tol * top;
    let points: Vec<FramePoint> = grid
        .points()
        .iter()
        .zip(&spectra)
        .map(|(xi, v)| FramePoint {
            xi: xi.clone(),
            min_nonzero_eig: v.iter().copied().find(|&x| x > cut),
            max_eig: v.iter().copied().fold(0.0, f64::max),
        })
        .collect();
    let lower = points
        .iter()
        .filter_map(|p| p.min_nonzero_eig)
        .fold(f64::INFINITY, f64::min);
    Ok(FrameBounds {
        lower,
        upper: top,
        rank_cut: cut,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertifyMode {
    Projection,
    Delta,
    GramianMatch,
}

impl CertifyMode {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "projection" => Ok(Self::Projection),
            "delta" => Ok(Self::Delta),
            "gramian-match" => Ok(Self::GramianMatch),
            other => Err(Error::config("mode", format!("unknown certification mode `{other}`"))),
        }
    }
}

/// Dual Gramian minus range projection, the defect measured by the
/// two-point probes `delta_r + alpha delta_s`.
fn delta_residual(sp: &Spectral, cut: f64) -> (f64, String) {
    let u = sp.range_basis(cut);
    let d = &sp.fibers * sp.fibers.adjoint() - &u * u.adjoint();
    let n = d.nrows();
    let mut worst = (0.0, String::new());
    for r in 0..n {
        let drr = d[(r, r)].re;
        if drr.abs() > worst.0 {
            worst = (drr.abs(), format!("r={r},alpha=0"));
        }
        for s in r + 1..n {
            let dss = d[(s, s)].re;
            let drs = d[(r, s)];
            let one = (drr + dss + 2.0 * drs.re).abs();
            let imag = (drr + dss - 2.0 * drs.im).abs();
            if one > worst.0 {
                worst = (one, format!("r={r},s={s},alpha=1"));
            }
            if imag > worst.0 {
                worst = (imag, format!("r={r},s={s},alpha=i"));
            }
        }
    }
    worst
}

/// Rank cut for certification. The target spectrum is `{0, 1}`, so the cut
/// never drops below the absolute default.
fn certify_cut(values: &[f64]) -> f64 {
    let top = values.iter().copied().fold(0.0, f64::max);
    DEFAULT_RANK_TOL * top.max(1.0)
}

fn projection_point(sp: &Spectral, xi: &[f64]) -> Witness {
    let mut residual: f64 = 0.0;
    let mut value = None;
    let cut = certify_cut(&sp.values);
    for &v in &sp.values {
        // retained eigenvalues must equal 1, discarded ones 0
        let d = if v > cut { (v - 1.0).abs() } else { v.abs() };
        if value.is_none() || d > residual {
            residual = d;
            value = Some(v);
        }
    }
    let idem = sp
        .values
        .iter()
        .map(|&v| (v * v - v).powi(2))
        .sum::<f64>()
        .sqrt();
    Witness {
        xi: xi.to_vec(),
        entry: "eigenvalue".into(),
        residual: residual.max(idem),
        tail_bound: sp.tail,
        value,
    }
}

/// Certify that the system is a normalized tight frame generator for the
/// space it generates (projection, delta), or for the space generated by
/// `reference` (gramian-match).
pub fn certify_ntf(
    sys: &GeneratorSystem,
    grid: &Grid,
    w: &IndexWindow,
    tol: f64,
    mode: CertifyMode,
    reference: Option<&GeneratorSystem>,
) -> Result<Certificate> {
    if mode == CertifyMode::GramianMatch && reference.is_none() {
        return Err(Error::config("reference", "gramian-match needs a reference system"));
    }
    let name = format!("ntf-{}", serde_json::to_value(mode)?.as_str().unwrap_or_default());
    let results: Vec<Witness> = grid
        .points()
        .par_iter()
        .map(|xi| -> Result<Witness> {
            match mode {
                CertifyMode::Projection => Ok(projection_point(&spectral(sys, xi, w)?, xi)),
                CertifyMode::Delta => {
                    let sp = spectral(sys, xi, w)?;
                    let cut = certify_cut(&sp.values);
                    let (residual, entry) = delta_residual(&sp, cut);
                    Ok(Witness {
                        xi: xi.clone(),
                        entry,
                        residual,
                        tail_bound: 4.0 * sp.tail,
                        value: None,
                    })
                }
                CertifyMode::GramianMatch => {
                    let reference = reference.expect("checked above");
                    let a = dual_gramian(sys, xi, w)?.matrix;
                    let b = dual_gramian(reference, xi, w)?.matrix;
                    let (residual, entry) = max_entry(&(a - b));
                    Ok(Witness {
                        xi: xi.clone(),
                        entry,
                        residual,
                        tail_bound: 0.0,
                        value: None,
                    })
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(Certificate::assemble(name, tol, results))
}

fn max_entry(m: &CMatrix) -> (f64, String) {
    let mut worst = (0.0, String::from("none"));
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let v = m[(r, c)].norm();
            if v > worst.0 {
                worst = (v, format!("({r},{c})"));
            }
        }
    }
    worst
}

/// The system generates all of `L^2(R^n)` as a normalized tight frame
/// generator: `sum |g(xi)|^2 = 1` and `sum g(xi) conj g(xi + 2 pi l) = 0` for
/// every nonzero `l` of the window.
pub fn full_space_check(sys: &GeneratorSystem, grid: &Grid, w: &IndexWindow, tol: f64) -> Result<Certificate> {
    let origin = w.origin();
    let results: Vec<Witness> = grid
        .points()
        .par_iter()
        .map(|xi| -> Result<Witness> {
            let (f, _) = fiber_matrix(sys, xi, w)?;
            let mut worst = (-1.0, String::new());
            for l in 0..w.len() {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..f.ncols() {
                    acc += f[(origin, c)] * f[(l, c)].conj();
                }
                let target = if l == origin { 1.0 } else { 0.0 };
                let r = (acc - target).norm();
                if r > worst.0 {
                    worst = (r, format!("l={:?}", w.index(l)));
                }
            }
            Ok(Witness {
                xi: xi.clone(),
                entry: worst.1,
                residual: worst.0.max(0.0),
                tail_bound: 0.0,
                value: None,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Certificate::assemble("full-space", tol, results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::Verdict;
    use crate::linalg::hermitian_defect;
    use crate::spectra::{parse_selector, quasi_orthogonalize};
    use std::f64::consts::PI;

    fn w1(k: usize) -> IndexWindow {
        IndexWindow::new(1, k).unwrap()
    }

    fn sel(s: &str) -> GeneratorSystem {
        parse_selector(s).unwrap()
    }

    #[test]
    fn shannon_gramians() {
        let g = gramian(&sel("shannon-scaling"), &[0.3], &w1(4)).unwrap();
        assert_eq!(g.matrix.shape(), (1, 1));
        assert_eq!(g.matrix[(0, 0)], C64::new(1.0, 0.0));
        let g = gramian(&sel("shannon-scaling+shannon-wavelet"), &[0.3], &w1(4)).unwrap();
        assert_eq!(g.matrix, CMatrix::identity(2, 2));
        let z = gramian(&sel("zero"), &[0.3], &w1(4)).unwrap();
        assert_eq!(z.matrix, CMatrix::zeros(1, 1));

        let d = dual_gramian(&sel("shannon-scaling+shannon-wavelet"), &[0.3], &w1(4)).unwrap();
        assert_eq!(&d.matrix * &d.matrix, d.matrix);
        let nonzero: Vec<usize> = (0..9).filter(|&i| d.matrix[(i, i)].norm() > 0.0).collect();
        assert_eq!(nonzero, vec![3, 4]);
    }

    #[test]
    fn traces_and_hermitian_structure() {
        let w = w1(16);
        for s in ["bspline:2", "haar-wavelet+bspline:3", "meyer-scaling+meyer-wavelet"] {
            for xi in [-2.9, 0.1, 1.3] {
                let g = gramian(&sel(s), &[xi], &w).unwrap();
                let d = dual_gramian(&sel(s), &[xi], &w).unwrap();
                assert!((g.matrix.trace() - d.matrix.trace()).norm() < 1e-13);
                assert!(hermitian_defect(&d.matrix) < 1e-13);
                let e = hermitian_eigen(&g.matrix);
                assert!(e.values[0] >= -1e-10 * e.values.last().unwrap());
            }
        }
    }

    #[test]
    fn projections() {
        let p = range_projection(&sel("shannon-scaling"), &[0.3], &w1(3), 1e-8).unwrap();
        assert_eq!(p.rank, 1);
        assert!((p.matrix[(3, 3)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        let p = range_projection(&sel("bspline:2"), &[PI], &w1(64), 1e-8).unwrap();
        assert_eq!(p.rank, 1);
        assert!((&p.matrix * &p.matrix - &p.matrix).norm() < 1e-9);
        assert!((p.dual_gramian_distance - 2.0 / 3.0).abs() < 1e-6);
        let p = range_projection(&sel("zero"), &[0.3], &w1(3), 1e-8).unwrap();
        assert_eq!(p.rank, 0);
        assert_eq!(p.matrix, CMatrix::zeros(7, 7));
    }

    #[test]
    fn frame_bounds_of_splines() {
        let grid = Grid::base(1, 256).unwrap();
        let fb = frame_bounds(&sel("bspline:1"), &grid, &w1(2048), 1e-8).unwrap();
        assert!(fb.upper <= 1.0 + 1e-12 && fb.lower > 1.0 - 1e-3);
        let fb = frame_bounds(&sel("bspline:2"), &grid, &w1(128), 1e-8).unwrap();
        assert!((fb.lower - 1.0 / 3.0).abs() < 1e-3);
        assert!((fb.upper - 1.0).abs() < 1e-3);
        let fb = frame_bounds(&sel("shannon-scaling"), &grid, &w1(4), 1e-8).unwrap();
        assert_eq!((fb.lower, fb.upper), (1.0, 1.0));
        assert!(frame_bounds(&sel("zero"), &grid, &w1(4), 1e-8).is_err());
    }

    #[test]
    fn certification_modes() {
        let grid = Grid::base(1, 128).unwrap();
        let w = w1(32);
        let sh = sel("shannon-scaling");
        let c = certify_ntf(&sh, &grid, &w, 1e-8, CertifyMode::Projection, None).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
        assert_eq!(c.max_residual, 0.0);

        let hat = sel("bspline:2");
        let c = certify_ntf(&hat, &grid, &w, 1e-8, CertifyMode::Projection, None).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        let value = c.witness.unwrap().value.unwrap();
        assert!((value - 1.0 / 3.0).abs() < 1e-3);
        let c = certify_ntf(&hat, &grid, &w, 1e-8, CertifyMode::Delta, None).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);

        let q = GeneratorSystem::single(quasi_orthogonalize(&hat.generators()[0], &w, 1e-8));
        let c = certify_ntf(&q, &grid, &w, 1e-8, CertifyMode::Projection, None).unwrap();
        assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
        let c = certify_ntf(&q, &grid, &w, 1e-8, CertifyMode::Delta, None).unwrap();
        assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
        let c = certify_ntf(&q, &grid, &w, 1e-8, CertifyMode::GramianMatch, Some(&hat)).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
    }

    #[test]
    fn full_space_negative_controls() {
        let grid = Grid::cube(1, -4.0 * PI, 4.0 * PI, 64).unwrap();
        let c = full_space_check(&sel("shannon-scaling"), &grid, &w1(4), 1e-9).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        let empty = GeneratorSystem::empty(1);
        let c = full_space_check(&empty, &grid, &w1(4), 1e-9).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        assert_eq!(c.max_residual, 1.0);
    }
}
