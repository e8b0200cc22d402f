//! Finite models of the integer lattice: box windows, truncated shift and
//! coset-embedding operators, and exact sublattice arithmetic for integer
//! dilation matrices.
//!
//! Everything here is exact integer arithmetic. Truncated operators are
//! stored as partial maps on window positions and record how many
//! coordinates fell outside the window.

use serde::Serialize;

use crate::error::{Error, Result};

/// A symmetric max-norm box `{k in Z^n : |k|_inf <= K}` in lexicographic
/// order (first coordinate most significant).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexWindow {
    dim: usize,
    radius: usize,
    indices: Vec<Vec<i64>>,
}

impl IndexWindow {
    pub fn new(dim: usize, radius: usize) -> Result<Self> {
        if dim == 0 || radius == 0 {
            return Err(Error::DegenerateWindow { dim, radius });
        }
        let side = 2 * radius + 1;
        let len = side
            .checked_pow(dim as u32)
            .filter(|&l| l <= 50_000_000)
            .ok_or(Error::Overflow)?;
        let r = radius as i64;
        let mut indices = Vec::with_capacity(len);
        let mut cur = vec![-r; dim];
        for _ in 0..len {
            indices.push(cur.clone());
            for c in (0..dim).rev() {
                if cur[c] < r {
                    cur[c] += 1;
                    break;
                }
                cur[c] = -r;
            }
        }
        Ok(Self {
            dim,
            radius,
            indices,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<i64>] {
        &self.indices
    }

    pub fn index(&self, pos: usize) -> &[i64] {
        &self.indices[pos]
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        k.len() == self.dim && k.iter().all(|&c| c.unsigned_abs() as usize <= self.radius)
    }

    /// Position of `k` in the lexicographic order, if it lies in the window.
    pub fn position(&self, k: &[i64]) -> Option<usize> {
        if !self.contains(k) {
            return None;
        }
        let side = 2 * self.radius + 1;
        let r = self.radius as i64;
        Some(
            k.iter()
                .fold(0usize, |acc, &c| acc * side + (c + r) as usize),
        )
    }

    pub fn origin(&self) -> usize {
        self.position(&vec![0; self.dim]).expect("origin is in every window")
    }
}

/// Convenience constructor matching the window operation.
pub fn window(dim: usize, radius: usize) -> Result<IndexWindow> {
    IndexWindow::new(dim, radius)
}

/// A truncated 0/1 operator on window coordinates. Column `c` is either
/// mapped to a single row or dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialMap {
    size: usize,
    targets: Vec<Option<usize>>,
    dropped: usize,
}

impl PartialMap {
    fn from_targets(targets: Vec<Option<usize>>) -> Self {
        let dropped = targets.iter().filter(|t| t.is_none()).count();
        Self {
            size: targets.len(),
            targets,
            dropped,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of columns whose image left the window.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Row hit by column `col`, if any.
    pub fn target(&self, col: usize) -> Option<usize> {
        self.targets[col]
    }

    pub fn entry(&self, row: usize, col: usize) -> u8 {
        u8::from(self.targets[col] == Some(row))
    }

    /// `M v`, for any additive coordinate type.
    pub fn apply<T: Copy + Default>(&self, v: &[T]) -> Vec<T>
    where
        T: std::ops::Add<Output = T>,
    {
        let mut out = vec![T::default(); self.size];
        for (col, t) in self.targets.iter().enumerate() {
            if let Some(row) = t {
                out[*row] = out[*row] + v[col];
            }
        }
        out
    }

    /// `M^T v` (the adjoint, since entries are real 0/1).
    pub fn apply_adjoint<T: Copy + Default>(&self, v: &[T]) -> Vec<T> {
        self.targets
            .iter()
            .map(|t| t.map_or_else(T::default, |row| v[row]))
            .collect()
    }

    /// `self * other` as a partial map.
    pub fn compose(&self, other: &PartialMap) -> PartialMap {
        let targets = other
            .targets
            .iter()
            .map(|t| t.and_then(|mid| self.targets[mid]))
            .collect();
        PartialMap::from_targets(targets)
    }

    /// Dense 0/1 matrix, row-major.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.size]; self.size];
        for (col, t) in self.targets.iter().enumerate() {
            if let Some(row) = t {
                m[*row][col] = 1;
            }
        }
        m
    }
}

/// Truncation of `lambda(k)`, `(lambda(k) a)(l) = a(l - k)`: column `c` goes
/// to row `c + k`.
pub fn shift_operator(k: &[i64], w: &IndexWindow) -> Result<PartialMap> {
    check_dim(w.dim(), k.len())?;
    let targets = w
        .indices()
        .iter()
        .map(|c| {
            let image: Vec<i64> = c.iter().zip(k).map(|(a, b)| a + b).collect();
            w.position(&image)
        })
        .collect();
    Ok(PartialMap::from_targets(targets))
}

/// Truncation of `D_d`, `(D_d a)(d + A^T l) = a(l)`: column `l` goes to row
/// `d + A^T l`.
pub fn embed_operator(d: &[i64], a: &DilationMatrix, w: &IndexWindow) -> Result<PartialMap> {
    check_dim(a.dim(), d.len())?;
    check_dim(w.dim(), d.len())?;
    let at = a.transpose();
    let mut targets = Vec::with_capacity(w.len());
    for l in w.indices() {
        let image = at.apply(l)?;
        let image = add_checked(&image, d)?;
        targets.push(w.position(&image));
    }
    Ok(PartialMap::from_targets(targets))
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

fn add_checked(a: &[i64], b: &[i64]) -> Result<Vec<i64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.checked_add(*y).ok_or(Error::Overflow))
        .collect()
}

/// An integer matrix with nonzero determinant, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DilationMatrix {
    dim: usize,
    entries: Vec<i64>,
    determinant: i64,
    expansive: bool,
}

impl DilationMatrix {
    pub fn new(dim: usize, entries: Vec<i64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DegenerateWindow { dim, radius: 0 });
        }
        check_dim(dim * dim, entries.len())?;
        let determinant = det_exact(dim, &entries)?;
        if determinant == 0 {
            return Err(Error::SingularMatrix);
        }
        let expansive = min_eigen_modulus(dim, &entries) > 1.0 + 1e-12;
        Ok(Self {
            dim,
            entries,
            determinant,
            expansive,
        })
    }

    /// Parse a row-major comma list; the dimension is the square root of the
    /// number of entries.
    pub fn parse(text: &str) -> Result<Self> {
        let entries: Vec<i64> = text
            .split(',')
            .map(|t| t.trim().parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidParameter(format!("dilation `{text}`: {e}")))?;
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim * dim != entries.len() || dim == 0 {
            return Err(Error::InvalidParameter(format!(
                "dilation `{text}` is not a square matrix"
            )));
        }
        Self::new(dim, entries)
    }

    pub fn scalar(dim: usize, factor: i64) -> Result<Self> {
        let mut e = vec![0; dim * dim];
        for i in 0..dim {
            e[i * dim + i] = factor;
        }
        Self::new(dim, e)
    }

    /// `[[1, 1], [1, -1]]`.
    pub fn quincunx() -> Self {
        Self::new(2, vec![1, 1, 1, -1]).expect("quincunx is nonsingular")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.dim + j]
    }

    pub fn determinant(&self) -> i64 {
        self.determinant
    }

    pub fn index(&self) -> usize {
        self.determinant.unsigned_abs() as usize
    }

    pub fn is_expansive(&self) -> bool {
        self.expansive
    }

    pub fn require_expansive(&self) -> Result<()> {
        if self.expansive {
            Ok(())
        } else {
            Err(Error::NotExpansive(min_eigen_modulus(
                self.dim,
                &self.entries,
            )))
        }
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut e = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                e[j * n + i] = self.entries[i * n + j];
            }
        }
        Self {
            dim: n,
            entries: e,
            determinant: self.determinant,
            expansive: self.expansive,
        }
    }

    pub fn apply(&self, v: &[i64]) -> Result<Vec<i64>> {
        check_dim(self.dim, v.len())?;
        (0..self.dim)
            .map(|i| {
                (0..self.dim).try_fold(0i64, |acc, j| {
                    self.entries[i * self.dim + j]
                        .checked_mul(v[j])
                        .and_then(|p| acc.checked_add(p))
                        .ok_or(Error::Overflow)
                })
            })
            .collect()
    }

    /// Adjugate, so that `adj(A) A = det(A) I`.
    pub fn adjugate(&self) -> Result<Vec<i64>> {
        let n = self.dim;
        if n == 1 {
            return Ok(vec![1]);
        }
        let mut adj = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut minor = Vec::with_capacity((n - 1) * (n - 1));
                for r in (0..n).filter(|&r| r != i) {
                    for c in (0..n).filter(|&c| c != j) {
                        minor.push(self.entries[r * n + c]);
                    }
                }
                let cof = det_exact(n - 1, &minor)?;
                let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                // adj(A)[j][i] = cofactor(i, j)
                adj[j * n + i] = sign * cof;
            }
        }
        Ok(adj)
    }

    /// Entries as `f64` rows (for the spectral side).
    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|&e| e as f64).collect()
    }
}

/// Fraction-free Gaussian elimination in `i128` with overflow checks.
fn det_exact(n: usize, entries: &[i64]) -> Result<i64> {
    let mut m: Vec<i128> = entries.iter().map(|&e| e as i128).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k * n + k] == 0 {
            let Some(p) = (k + 1..n).find(|&r| m[r * n + k] != 0) else {
                return Ok(0);
            };
            for c in 0..n {
                m.swap(k * n + c, p * n + c);
            }
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let a = m[i * n + j]
                    .checked_mul(m[k * n + k])
                    .ok_or(Error::Overflow)?;
                let b = m[i * n + k]
                    .checked_mul(m[k * n + j])
                    .ok_or(Error::Overflow)?;
                m[i * n + j] = a.checked_sub(b).ok_or(Error::Overflow)? / prev;
            }
        }
        prev = m[k * n + k];
    }
    let det = sign * m[n * n - 1];
    i64::try_from(det).map_err(|_| Error::Overflow)
}

fn min_eigen_modulus(n: usize, entries: &[i64]) -> f64 {
    let m = nalgebra::DMatrix::from_row_slice(
        n,
        n,
        &entries.iter().map(|&e| e as f64).collect::<Vec<_>>(),
    );
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(f64::INFINITY, f64::min)
}

/// Whether `k` lies in `A^T Z^n`: `adj(A^T) k = 0 (mod det A)` componentwise.
pub fn in_sublattice(k: &[i64], a: &DilationMatrix) -> Result<bool> {
    Ok(sublattice_coordinates(k, a)?.is_some())
}

/// The integer `x` with `A^T x = k`, if there is one.
pub fn sublattice_coordinates(k: &[i64], a: &DilationMatrix) -> Result<Option<Vec<i64>>> {
    check_dim(a.dim(), k.len())?;
    let adj = a.transpose().adjugate()?;
    let det = a.determinant() as i128;
    let n = a.dim();
    let mut x = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = 0i128;
        for j in 0..n {
            acc += adj[i * n + j] as i128 * k[j] as i128;
        }
        if acc % det != 0 {
            return Ok(None);
        }
        x.push(i64::try_from(acc / det).map_err(|_| Error::Overflow)?);
    }
    Ok(Some(x))
}

/// A complete set of representatives of `Z^n / A^T Z^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetSet {
    pub matrix: DilationMatrix,
    pub representatives: Vec<Vec<i64>>,
}

/// Scans `[0, |det A|)^n` with the first coordinate varying fastest and keeps
/// the first member of each class.
pub fn coset_representatives(a: &DilationMatrix) -> Result<CosetSet> {
    let n = a.dim();
    let count = a.index();
    let bound = count as i64;
    let mut reps: Vec<Vec<i64>> = Vec::with_capacity(count);
    let mut cur = vec![0i64; n];
    'scan: loop {
        let mut fresh = true;
        for r in &reps {
            let diff: Vec<i64> = cur.iter().zip(r).map(|(x, y)| x - y).collect();
            if in_sublattice(&diff, a)? {
                fresh = false;
                break;
            }
        }
        if fresh {
            reps.push(cur.clone());
            if reps.len() == count {
                break;
            }
        }
        for c in 0..n {
            if cur[c] + 1 < bound {
                cur[c] += 1;
                continue 'scan;
            }
            cur[c] = 0;
        }
        break;
    }
    if reps.len() != count {
        return Err(Error::CosetScan {
            found: reps.len(),
            expected: count,
        });
    }
    Ok(CosetSet {
        matrix: a.clone(),
        representatives: reps,
    })
}
