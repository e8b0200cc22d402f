//! Local trace functions of shift-invariant spaces and the identities they
//! satisfy.
//!
//! For a normalized tight frame generator the local trace of a positive
//! operator `T` at `xi` is the fiber sum `sum_phi <T fib_phi(xi), fib_phi(xi)>`.
//! Operators live on window coordinates, so restricted traces of window
//! vectors are exact. Only the identity stands for an operator on the whole
//! lattice, and only its traces carry a truncation error bar.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{Certificate, Verdict, Witness};
use crate::error::{Error, Result};
use crate::gramian::{certify_ntf, range_projection, CertifyMode, DEFAULT_RANK_TOL};
use crate::grid::{recenter, Grid};
use crate::lattice::{
    coset_representatives, embed_operator, in_sublattice, shift_operator, sublattice_coordinates, DilationMatrix,
    IndexWindow,
};
use crate::linalg::{fiber_matrix, hermitian_defect, hermitian_eigen, quad, CMatrix};
use crate::spectra::{dual_power, modulate_system, GeneratorSystem};
use crate::C64;

const TWO_PI: f64 = 2.0 * PI;

/// Default seed of the probe basket.
pub const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Identity,
    /// `P_f v = <v, f> f`.
    RankOne(Vec<C64>),
    General,
}

/// A positive semidefinite operator on window coordinates.
#[derive(Debug, Clone)]
pub struct PositiveOperator {
    window: IndexWindow,
    kind: OperatorKind,
    matrix: CMatrix,
    /// Diagonal weight lost when a conjugation pushed coordinates out of the
    /// window.
    dropped_mass: f64,
}

fn outer(f: &[C64]) -> CMatrix {
    let n = f.len();
    CMatrix::from_fn(n, n, |r, c| f[r] * f[c].conj())
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

impl PositiveOperator {
    pub fn identity(w: &IndexWindow) -> Self {
        Self {
            window: w.clone(),
            kind: OperatorKind::Identity,
            matrix: CMatrix::identity(w.len(), w.len()),
            dropped_mass: 0.0,
        }
    }

    pub fn rank_one(w: &IndexWindow, f: Vec<C64>) -> Result<Self> {
        if f.len() != w.len() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                got: f.len(),
            });
        }
        Ok(Self {
            window: w.clone(),
            matrix: outer(&f),
            kind: OperatorKind::RankOne(f),
            dropped_mass: 0.0,
        })
    }

    /// `P_{delta_k}`.
    pub fn delta(w: &IndexWindow, k: &[i64]) -> Result<Self> {
        Self::rank_one(w, delta_vector(w, k)?)
    }

    /// Validated dense operator.
    pub fn dense(w: &IndexWindow, matrix: CMatrix) -> Result<Self> {
        if matrix.shape() != (w.len(), w.len()) {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                got: matrix.nrows(),
            });
        }
        let defect = hermitian_defect(&matrix);
        if defect > 1e-13 {
            return Err(Error::NotPositive(format!("Hermitian defect {defect:e}")));
        }
        let e = hermitian_eigen(&matrix);
        let top = e.values.last().copied().unwrap_or(0.0).abs();
        if let Some(&low) = e.values.first() {
            if low < -1e-10 * top {
                return Err(Error::NotPositive(format!("eigenvalue {low:e}")));
            }
        }
        Ok(Self {
            window: w.clone(),
            kind: OperatorKind::General,
            matrix,
            dropped_mass: 0.0,
        })
    }

    /// `B B^H` with `B` a window-by-`rank` matrix of uniform entries.
    pub fn random_psd<R: Rng>(w: &IndexWindow, rank: usize, rng: &mut R) -> Self {
        let b = CMatrix::from_fn(w.len(), rank, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let m = &b * b.adjoint();
        let m = (&m + m.adjoint()).scale(0.5);
        Self {
            window: w.clone(),
            kind: OperatorKind::General,
            matrix: m,
            dropped_mass: 0.0,
        }
    }

    /// [`PositiveOperator::random_psd`] supported on the coordinates with
    /// `|k|_inf <= radius`.
    pub fn random_psd_within<R: Rng>(w: &IndexWindow, radius: usize, rank: usize, rng: &mut R) -> Self {
        let r = radius as i64;
        let b = CMatrix::from_fn(w.len(), rank, |row, _| {
            let v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if w.index(row).iter().all(|x| x.abs() <= r) {
                v
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let m = &b * b.adjoint();
        Self::general(w, (&m + m.adjoint()).scale(0.5), 0.0)
    }

    fn general(w: &IndexWindow, matrix: CMatrix, dropped_mass: f64) -> Self {
        Self {
            window: w.clone(),
            kind: OperatorKind::General,
            matrix,
            dropped_mass,
        }
    }

    pub fn window(&self) -> &IndexWindow {
        &self.window
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dropped_mass(&self) -> f64 {
        self.dropped_mass
    }

    pub fn is_identity(&self) -> bool {
        self.kind == OperatorKind::Identity
    }

    /// `<T v, v>`.
    pub fn quad(&self, v: &[C64]) -> f64 {
        match &self.kind {
            OperatorKind::Identity => norm_sqr(v),
            OperatorKind::RankOne(f) => inner(v, f).norm_sqr(),
            OperatorKind::General => quad(&self.matrix, v),
        }
    }

    pub fn op_norm(&self) -> f64 {
        match &self.kind {
            OperatorKind::Identity => 1.0,
            OperatorKind::RankOne(f) => norm_sqr(f),
            OperatorKind::General => hermitian_eigen(&self.matrix).values.last().copied().unwrap_or(0.0),
        }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn add(&self, other: &PositiveOperator) -> Result<Self> {
        self.same_window(other.window())?;
        Ok(Self::general(
            &self.window,
            &self.matrix + &other.matrix,
            self.dropped_mass + other.dropped_mass,
        ))
    }

    /// `c T` for `c >= 0`.
    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0) {
            return Err(Error::NotPositive(format!("scale factor {c}")));
        }
        Ok(Self::general(
            &self.window,
            self.matrix.scale(c),
            self.dropped_mass * c,
        ))
    }

    fn same_window(&self, w: &IndexWindow) -> Result<()> {
        if &self.window == w {
            Ok(())
        } else {
            Err(Error::WindowMismatch {
                operator: self.window.radius(),
                fibers: w.radius(),
            })
        }
    }

    /// `lambda(k) T lambda(k)^*`, exact for the identity.
    pub fn conjugate_shift(&self, k: &[i64]) -> Result<Self> {
        let map = shift_operator(k, &self.window)?;
        let lost: f64 = (0..map.size())
            .filter(|&c| map.target(c).is_none())
            .map(|c| self.matrix[(c, c)].re)
            .sum();
        Ok(match &self.kind {
            OperatorKind::Identity => self.clone(),
            OperatorKind::RankOne(f) => {
                let mut op = Self::rank_one(&self.window, map.apply(f))?;
                op.dropped_mass = self.dropped_mass + lost;
                op
            }
            OperatorKind::General => {
                let n = map.size();
                let mut m = CMatrix::zeros(n, n);
                for c in 0..n {
                    let Some(r) = map.target(c) else { continue };
                    for c2 in 0..n {
                        if let Some(r2) = map.target(c2) {
                            m[(r, r2)] = self.matrix[(c, c2)];
                        }
                    }
                }
                Self::general(&self.window, m, self.dropped_mass + lost)
            }
        })
    }

    /// `D_d^* T D_d` with `(D_d a)(d + A^T l) = a(l)`.
    pub fn conjugate_embed(&self, d: &[i64], a: &DilationMatrix) -> Result<Self> {
        let map = embed_operator(d, a, &self.window)?;
        let n = map.size();
        let mut hit = vec![false; n];
        for c in 0..n {
            if let Some(r) = map.target(c) {
                hit[r] = true;
            }
        }
        // window coordinates of the coset that no window column reaches
        let mut lost = 0.0;
        for (r, k) in self.window.indices().iter().enumerate() {
            if hit[r] {
                continue;
            }
            let diff: Vec<i64> = k.iter().zip(d).map(|(x, y)| x - y).collect();
            if in_sublattice(&diff, a)? {
                lost += self.matrix[(r, r)].re;
            }
        }
        Ok(match &self.kind {
            OperatorKind::RankOne(f) => {
                let mut op = Self::rank_one(&self.window, map.apply_adjoint(f))?;
                op.dropped_mass = self.dropped_mass + lost;
                op
            }
            _ => {
                let mut m = CMatrix::zeros(n, n);
                for c in 0..n {
                    let Some(r) = map.target(c) else { continue };
                    for c2 in 0..n {
                        if let Some(r2) = map.target(c2) {
                            m[(c, c2)] = self.matrix[(r, r2)];
                        }
                    }
                }
                Self::general(&self.window, m, self.dropped_mass + lost)
            }
        })
    }
}

/// The standard basis vector `delta_k` of the window.
pub fn delta_vector(w: &IndexWindow, k: &[i64]) -> Result<Vec<C64>> {
    let pos = w
        .position(k)
        .ok_or_else(|| Error::InvalidParameter(format!("{k:?} lies outside the window")))?;
    let mut f = vec![C64::new(0.0, 0.0); w.len()];
    f[pos] = C64::new(1.0, 0.0);
    Ok(f)
}

/// A system together with its certificate.
#[derive(Debug, Clone)]
pub struct CertifiedSystem {
    system: GeneratorSystem,
    window: IndexWindow,
    certificate: Option<Certificate>,
}

impl CertifiedSystem {
    /// Certify in projection mode. Verdicts limited by truncation are
    /// accepted; a failure is refused.
    pub fn certify(system: GeneratorSystem, grid: &Grid, w: &IndexWindow, tol: f64) -> Result<Self> {
        let cert = certify_ntf(&system, grid, w, tol, CertifyMode::Projection, None)?;
        if cert.verdict == Verdict::Fail {
            let at = cert
                .witness
                .as_ref()
                .map(|w| format!("residual {:e} at xi = {:?}", w.residual, w.xi))
                .unwrap_or_default();
            return Err(Error::NotCertified(format!("{}: {at}", system.name())));
        }
        Ok(Self {
            system,
            window: w.clone(),
            certificate: Some(cert),
        })
    }

    /// Attach an existing certificate, refusing a failed one.
    pub fn from_certificate(system: GeneratorSystem, w: &IndexWindow, cert: Certificate) -> Result<Self> {
        if cert.verdict == Verdict::Fail {
            return Err(Error::NotCertified(format!("{}: certificate failed", system.name())));
        }
        Ok(Self {
            system,
            window: w.clone(),
            certificate: Some(cert),
        })
    }

    /// Skip certification.
    pub fn unchecked(system: GeneratorSystem, w: &IndexWindow) -> Self {
        Self {
            system,
            window: w.clone(),
            certificate: None,
        }
    }

    pub fn system(&self) -> &GeneratorSystem {
        &self.system
    }

    pub fn window(&self) -> &IndexWindow {
        &self.window
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        self.certificate.as_ref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceValue {
    pub value: f64,
    pub error_bar: f64,
}

fn check_operator(cs: &CertifiedSystem, t: &PositiveOperator) -> Result<()> {
    t.same_window(&cs.window)
}

/// `sum_phi <T fib_phi(xi), fib_phi(xi)>`.
pub fn local_trace(cs: &CertifiedSystem, t: &PositiveOperator, xi: &[f64]) -> Result<TraceValue> {
    check_operator(cs, t)?;
    let (f, tail) = fiber_matrix(&cs.system, xi, &cs.window)?;
    let mut value = 0.0;
    for c in 0..f.ncols() {
        let col: Vec<C64> = f.column(c).iter().copied().collect();
        value += t.quad(&col);
    }
    let truncation = if t.is_identity() { tail } else { 0.0 };
    Ok(TraceValue {
        value,
        error_bar: truncation + t.dropped_mass,
    })
}

/// `Trace(T P)` with `P` the range projection, from an orthonormal basis.
pub fn trace_by_projection(cs: &CertifiedSystem, t: &PositiveOperator, xi: &[f64]) -> Result<f64> {
    check_operator(cs, t)?;
    let p = range_projection(&cs.system, xi, &cs.window, DEFAULT_RANK_TOL)?;
    let mut acc = 0.0;
    for c in 0..p.basis.ncols() {
        let col: Vec<C64> = p.basis.column(c).iter().copied().collect();
        acc += t.quad(&col);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestrictedTrace {
    pub value: f64,
    /// `||P f||^2` from the range projection.
    pub projection_value: f64,
}

/// `sum_phi |<f, fib_phi(xi)>|^2`, cross-checked against `||P f||^2`.
pub fn restricted_trace(cs: &CertifiedSystem, f: &[C64], xi: &[f64]) -> Result<RestrictedTrace> {
    if f.len() != cs.window.len() {
        return Err(Error::DimensionMismatch {
            expected: cs.window.len(),
            got: f.len(),
        });
    }
    let (m, _) = fiber_matrix(&cs.system, xi, &cs.window)?;
    let value = fiber_inner_sum(&m, f);
    let p = range_projection(&cs.system, xi, &cs.window, DEFAULT_RANK_TOL)?;
    let projection_value = fiber_inner_sum(&p.basis, f);
    Ok(RestrictedTrace {
        value,
        projection_value,
    })
}

/// `sum_c |<f, m_c>|^2` over the columns of `m`.
fn fiber_inner_sum(m: &CMatrix, f: &[C64]) -> f64 {
    (0..m.ncols())
        .map(|c| {
            let mut acc = C64::new(0.0, 0.0);
            for (r, v) in f.iter().enumerate() {
                acc += v * m[(r, c)].conj();
            }
            acc.norm_sqr()
        })
        .sum()
}

/// Values of a scalar function of `xi` over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceProfile {
    pub provenance: String,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    /// Points whose value is farther than `1e-6` plus the error bar from an
    /// integer (meaningful for dimension functions).
    pub non_integer_points: usize,
}

impl TraceProfile {
    pub fn new(provenance: impl Into<String>, points: Vec<Vec<f64>>, vals: Vec<TraceValue>) -> Self {
        let non_integer_points = vals
            .iter()
            .filter(|v| (v.value - v.value.round()).abs() > 1e-6 + v.error_bar)
            .count();
        Self {
            provenance: provenance.into(),
            points,
            values: vals.iter().map(|v| v.value).collect(),
            errors: vals.iter().map(|v| v.error_bar).collect(),
            non_integer_points,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV with columns `xi_1..xi_n,value,error_bar`, LF line endings.
    pub fn to_csv(&self) -> String {
        let n = self.points.first().map_or(1, Vec::len);
        let mut out = String::new();
        for d in 1..=n {
            out.push_str(&format!("xi_{d},"));
        }
        out.push_str("value,error_bar\n");
        for ((p, v), e) in self.points.iter().zip(&self.values).zip(&self.errors) {
            for x in p {
                out.push_str(&format!("{x:?},"));
            }
            out.push_str(&format!("{v:?},{e:?}\n"));
        }
        out
    }
}

/// The dimension function `tau_{V,I}` on a grid.
pub fn dimension_function(cs: &CertifiedSystem, grid: &Grid) -> Result<TraceProfile> {
    let id = PositiveOperator::identity(&cs.window);
    let vals = grid
        .points()
        .par_iter()
        .map(|xi| local_trace(cs, &id, xi))
        .collect::<Result<Vec<_>>>()?;
    Ok(TraceProfile::new("fiber-sum:identity", grid.points().to_vec(), vals))
}

/// The spectral function `sigma_V(xi) = tau_{V,delta_k}(xi - 2 pi k)` with
/// `xi - 2 pi k` in the base cell.
pub fn spectral_function(cs: &CertifiedSystem, grid: &Grid) -> Result<TraceProfile> {
    let vals = grid
        .points()
        .par_iter()
        .map(|xi| spectral_value(cs, xi))
        .collect::<Result<Vec<_>>>()?;
    Ok(TraceProfile::new("fiber-sum:delta", grid.points().to_vec(), vals))
}

fn spectral_value(cs: &CertifiedSystem, xi: &[f64]) -> Result<TraceValue> {
    let (base, k) = recenter(xi);
    let pos = cs.window.position(&k).ok_or_else(|| {
        Error::InvalidParameter(format!("xi = {xi:?} needs shift {k:?} outside the window"))
    })?;
    let (m, _) = fiber_matrix(&cs.system, &base, &cs.window)?;
    let value = (0..m.ncols()).map(|c| m[(pos, c)].norm_sqr()).sum();
    Ok(TraceValue { value, error_bar: 0.0 })
}

/// Restricted trace profile `tau_{V,f}` evaluated with fibers at each grid
/// point itself.
pub fn restricted_profile(cs: &CertifiedSystem, f: &[C64], grid: &Grid) -> Result<TraceProfile> {
    let vals = grid
        .points()
        .par_iter()
        .map(|xi| {
            let (m, _) = fiber_matrix(&cs.system, xi, &cs.window)?;
            Ok(TraceValue {
                value: fiber_inner_sum(&m, f),
                error_bar: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TraceProfile::new("fiber-sum:vector", grid.points().to_vec(), vals))
}

fn single_point(check: &str, tol: f64, xi: &[f64], entry: String, residual: f64, tail: f64, value: f64) -> Certificate {
    Certificate::assemble(
        check,
        tol,
        vec![Witness {
            xi: xi.to_vec(),
            entry,
            residual,
            tail_bound: tail,
            value: Some(value),
        }],
    )
}

/// Operator weight pushed out of the window makes a truncated identity
/// untestable.
fn untestable(check: &str, tol: f64, xi: &[f64], mass: f64) -> Certificate {
    let mut c = single_point(check, tol, xi, format!("untestable: boundary weight {mass:e}"), mass, f64::INFINITY, mass);
    c.verdict = Verdict::Inconclusive;
    c
}

/// `tau(xi + 2 pi k; T)` against `tau(xi; lambda(k) T lambda(k)^*)`.
pub fn check_periodicity(cs: &CertifiedSystem, t: &PositiveOperator, xi: &[f64], k: &[i64], tol: f64) -> Result<Certificate> {
    let conj = t.conjugate_shift(k)?;
    if conj.dropped_mass() > tol {
        return Ok(untestable("periodicity", tol, xi, conj.dropped_mass()));
    }
    let shifted: Vec<f64> = xi.iter().zip(k).map(|(x, s)| x + TWO_PI * *s as f64).collect();
    let lhs = local_trace(cs, t, &shifted)?;
    let rhs = local_trace(cs, &conj, xi)?;
    Ok(single_point(
        "periodicity",
        tol,
        xi,
        format!("k={k:?}"),
        (lhs.value - rhs.value).abs(),
        lhs.error_bar + rhs.error_bar,
        lhs.value,
    ))
}

/// `tau_{sum V_i, T} = sum tau_{V_i, T}` for fiberwise orthogonal parts.
pub fn check_additivity(parts: &[CertifiedSystem], t: &PositiveOperator, xi: &[f64], tol: f64) -> Result<Certificate> {
    let Some(first) = parts.first() else {
        return Err(Error::InvalidParameter("additivity needs at least one part".into()));
    };
    let w = first.window.clone();
    let mats = parts
        .iter()
        .map(|p| {
            p.window.eq(&w).then_some(()).ok_or(Error::WindowMismatch {
                operator: w.radius(),
                fibers: p.window.radius(),
            })?;
            fiber_matrix(&p.system, xi, &w).map(|m| m.0)
        })
        .collect::<Result<Vec<_>>>()?;
    for i in 0..mats.len() {
        for j in i + 1..mats.len() {
            let cross = mats[i].adjoint() * &mats[j];
            let worst = cross.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if worst > tol {
                return Err(Error::NotOrthogonal(worst));
            }
        }
    }
    let mut union = GeneratorSystem::empty(first.system.dim());
    let mut sum = 0.0;
    let mut err = 0.0;
    for p in parts {
        union = union.union(&p.system)?;
        let v = local_trace(p, t, xi)?;
        sum += v.value;
        err += v.error_bar;
    }
    let whole = local_trace(&CertifiedSystem::unchecked(union, &w), t, xi)?;
    Ok(single_point(
        "additivity",
        tol,
        xi,
        format!("parts={}", parts.len()),
        (whole.value - sum).abs(),
        whole.error_bar + err,
        whole.value,
    ))
}

/// `tau_{aS + bT} = a tau_S + b tau_T` at every grid point.
pub fn check_linearity(
    cs: &CertifiedSystem,
    s: &PositiveOperator,
    t: &PositiveOperator,
    a: f64,
    b: f64,
    grid: &Grid,
    tol: f64,
) -> Result<Certificate> {
    let combo = s.scale(a)?.add(&t.scale(b)?)?;
    let results = grid
        .points()
        .par_iter()
        .map(|xi| -> Result<Witness> {
            let lhs = local_trace(cs, &combo, xi)?;
            let ls = local_trace(cs, s, xi)?;
            let lt = local_trace(cs, t, xi)?;
            Ok(Witness {
                xi: xi.clone(),
                entry: format!("a={a:?},b={b:?}"),
                residual: (lhs.value - a * ls.value - b * lt.value).abs(),
                tail_bound: lhs.error_bar + a * ls.error_bar + b * lt.error_bar,
                value: Some(lhs.value),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Certificate::assemble("linearity", tol, results))
}

/// Deterministic probe vectors: every window delta plus seeded random unit
/// vectors.
#[derive(Debug, Clone)]
pub struct ProbeBasket {
    pub seed: u64,
    pub probes: Vec<(String, Vec<C64>)>,
}

impl ProbeBasket {
    pub fn new(w: &IndexWindow, seed: u64, random: usize) -> Self {
        let mut probes = Vec::with_capacity(w.len() + random);
        for k in w.indices() {
            probes.push((format!("delta{k:?}"), delta_vector(w, k).expect("index of the window")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..random {
            let v: Vec<C64> = (0..w.len())
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let n = norm_sqr(&v).sqrt();
            probes.push((format!("random#{i}"), v.into_iter().map(|x| x / n).collect()));
        }
        Self { seed, probes }
    }
}

/// `tau_{small,P_f} <= tau_{big,P_f}` for every probe at every grid point.
pub fn check_monotony(
    small: &CertifiedSystem,
    big: &CertifiedSystem,
    grid: &Grid,
    basket: &ProbeBasket,
    tol: f64,
) -> Result<Certificate> {
    if small.window != big.window {
        return Err(Error::WindowMismatch {
            operator: small.window.radius(),
            fibers: big.window.radius(),
        });
    }
    let results = grid
        .points()
        .par_iter()
        .map(|xi| -> Result<Witness> {
            let (ms, _) = fiber_matrix(&small.system, xi, &small.window)?;
            let (mb, _) = fiber_matrix(&big.system, xi, &big.window)?;
            let mut worst = (-1.0, String::new(), 0.0);
            for (label, f) in &basket.probes {
                let s = fiber_inner_sum(&ms, f);
                let b = fiber_inner_sum(&mb, f);
                let excess = (s - b).max(0.0);
                if excess > worst.0 {
                    worst = (excess, label.clone(), s);
                }
            }
            Ok(Witness {
                xi: xi.clone(),
                entry: worst.1,
                residual: worst.0.max(0.0),
                tail_bound: 0.0,
                value: Some(worst.2),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Certificate::assemble("monotony", tol, results))
}

/// `tau_{M_a V, T}(xi) = tau_{V, T}(xi - a)` on every grid point, with the
/// modulated system recertified first.
pub fn check_modulation(
    cs: &CertifiedSystem,
    a: &[f64],
    t: &PositiveOperator,
    grid: &Grid,
    tol: f64,
) -> Result<Certificate> {
    let modulated = modulate_system(&cs.system, a)?;
    let base = Grid::base(cs.system.dim(), grid.per_axis())?;
    let mc = match &cs.certificate {
        Some(c) => CertifiedSystem::certify(modulated, &base, &cs.window, c.tol)?,
        None => CertifiedSystem::unchecked(modulated, &cs.window),
    };
    let results = grid
        .points()
        .par_iter()
        .map(|xi| -> Result<Witness> {
            let back: Vec<f64> = xi.iter().zip(a).map(|(x, s)| x - s).collect();
            let lhs = local_trace(&mc, t, xi)?;
            let rhs = local_trace(cs, t, &back)?;
            Ok(Witness {
                xi: xi.clone(),
                entry: format!("a={a:?}"),
                residual: (lhs.value - rhs.value).abs(),
                tail_bound: lhs.error_bar + rhs.error_bar,
                value: Some(lhs.value),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Certificate::assemble("modulation", tol, results))
}

/// Both sides of the dilation formula
/// `tau_{D_A V, T}(xi) = sum_d tau_{V, D_d^* T D_d}((A^T)^{-1}(xi + 2 pi d))`.
///
/// The left side uses the generators `D_A T_l phi` of `D_A V`. Lattice
/// points of both sides are written as `eta_d + 2 pi m` with
/// `k = d + A^T m`, so both sides evaluate the spectra at identical
/// arguments.
pub fn check_dilation(
    cs: &CertifiedSystem,
    a: &DilationMatrix,
    t: &PositiveOperator,
    xi: &[f64],
    tol: f64,
) -> Result<Certificate> {
    check_operator(cs, t)?;
    let w = &cs.window;
    let n = w.dim();
    if a.dim() != n || xi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.dim(),
        });
    }
    let cosets = coset_representatives(a)?.representatives;
    let inv = dual_power(a, -1)?;
    let etas: Vec<Vec<f64>> = cosets
        .iter()
        .map(|d| {
            let p: Vec<f64> = xi.iter().zip(d).map(|(x, dd)| x + TWO_PI * *dd as f64).collect();
            (0..n).map(|i| (0..n).map(|j| inv[i * n + j] * p[j]).sum()).collect()
        })
        .collect();

    for g in cs.system.generators() {
        for eta in &etas {
            let per: f64 = g.form().fiber_values(eta, w).iter().map(|v| v.norm_sqr()).sum();
            let slack = tol.max(1e-9) + g.form().tail(eta, w.radius());
            if per.min((per - 1.0).abs()) > slack {
                return Err(Error::NotQuasiOrthogonal { xi: eta.clone(), per });
            }
        }
    }

    // k = d + A^T m for every window index
    let mut points = Vec::with_capacity(w.len());
    let mut lost = 0.0;
    for (pos, k) in w.indices().iter().enumerate() {
        let mut found = None;
        for (di, d) in cosets.iter().enumerate() {
            let diff: Vec<i64> = k.iter().zip(d).map(|(x, y)| x - y).collect();
            if let Some(m) = sublattice_coordinates(&diff, a)? {
                found = Some((di, m));
                break;
            }
        }
        let (di, m) = found.ok_or(Error::CosetScan {
            found: cosets.len(),
            expected: a.index(),
        })?;
        if !w.contains(&m) {
            lost += t.matrix()[(pos, pos)].re;
        }
        let y: Vec<f64> = etas[di].iter().zip(&m).map(|(e, mm)| e + TWO_PI * *mm as f64).collect();
        points.push(y);
    }

    let phases = coset_representatives(&a.transpose())?.representatives;
    let s = (a.index() as f64).sqrt().recip();
    let mut lhs = 0.0;
    for g in cs.system.generators() {
        let vals: Vec<C64> = points.iter().map(|y| g.eval(y)).collect();
        for l in &phases {
            let v: Vec<C64> = vals
                .iter()
                .zip(&points)
                .map(|(val, y)| {
                    let t: f64 = y.iter().zip(l).map(|(a, b)| a * *b as f64).sum();
                    val * s * C64::from_polar(1.0, -t)
                })
                .collect();
            lhs += t.quad(&v);
        }
    }

    let mut rhs = 0.0;
    for (d, eta) in cosets.iter().zip(&etas) {
        let conj = t.conjugate_embed(d, a)?;
        lost += conj.dropped_mass() - t.dropped_mass();
        for g in cs.system.generators() {
            rhs += conj.quad(&g.form().fiber_values(eta, w));
        }
    }
    if lost > tol {
        return Ok(untestable("dilation", tol, xi, lost));
    }
    Ok(single_point(
        "dilation",
        tol,
        xi,
        format!("A={:?}", a.entries()),
        (lhs - rhs).abs(),
        0.0,
        lhs,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub verdict: Verdict,
    /// First `(j, xi)` with `tau_{j+1}(xi) < tau_j(xi) - tol`.
    pub first_violation: Option<(usize, Vec<f64>)>,
    /// Grid quadrature of `|tau_j - limit|`.
    pub gaps: Vec<f64>,
}

impl ConvergenceReport {
    /// `gaps[j+1] / gaps[j]`; NaN where `gaps[j]` is zero.
    pub fn ratios(&self) -> Vec<f64> {
        self.gaps
            .windows(2)
            .map(|p| if p[0] == 0.0 { f64::NAN } else { p[1] / p[0] })
            .collect()
    }
}

/// Monotone convergence of `tau_{V_j, f}` along a nested chain: pointwise
/// nondecrease in `j` and nonincreasing L1 distance to `limit`.
pub fn check_monotone_convergence(
    chain: &[CertifiedSystem],
    f: &[C64],
    grid: &Grid,
    limit: impl Fn(&[f64]) -> f64,
    tol: f64,
) -> Result<ConvergenceReport> {
    let profiles = chain
        .iter()
        .map(|cs| restricted_profile(cs, f, grid))
        .collect::<Result<Vec<_>>>()?;
    let mut first_violation = None;
    'scan: for j in 0..profiles.len().saturating_sub(1) {
        for (i, xi) in grid.points().iter().enumerate() {
            if profiles[j + 1].values[i] < profiles[j].values[i] - tol {
                first_violation = Some((j, xi.clone()));
                break 'scan;
            }
        }
    }
    let vol = grid.cell_volume();
    let gaps: Vec<f64> = profiles
        .iter()
        .map(|p| {
            grid.points()
                .iter()
                .zip(&p.values)
                .map(|(xi, v)| (v - limit(xi)).abs())
                .sum::<f64>()
                * vol
        })
        .collect();
    let gaps_ok = gaps.windows(2).all(|g| g[1] <= g[0] + tol);
    let verdict = if first_violation.is_none() && gaps_ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(ConvergenceReport {
        verdict,
        first_violation,
        gaps,
    })
}

/// `sum_i <T e_i, e_i>` over a family of window vectors.
pub fn operator_trace(t: &PositiveOperator, family: &[Vec<C64>]) -> f64 {
    family.iter().map(|e| t.quad(e)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{dilate_system, parse_selector, quasi_orthogonalize};

    fn w1(k: usize) -> IndexWindow {
        IndexWindow::new(1, k).unwrap()
    }

    fn unchecked(s: &str, w: &IndexWindow) -> CertifiedSystem {
        CertifiedSystem::unchecked(parse_selector(s).unwrap(), w)
    }

    #[test]
    fn shannon_traces() {
        let w = w1(4);
        let cs = unchecked("shannon-scaling", &w);
        let id = PositiveOperator::identity(&w);
        assert_eq!(local_trace(&cs, &id, &[0.3]).unwrap().value, 1.0);
        let d0 = PositiveOperator::delta(&w, &[0]).unwrap();
        let d1 = PositiveOperator::delta(&w, &[1]).unwrap();
        assert_eq!(local_trace(&cs, &d0, &[0.3]).unwrap().value, 1.0);
        assert_eq!(local_trace(&cs, &d1, &[0.3]).unwrap().value, 0.0);
        let r = restricted_trace(&cs, &delta_vector(&w, &[0]).unwrap(), &[0.3]).unwrap();
        assert_eq!((r.value, r.projection_value), (1.0, 1.0));
        let r = restricted_trace(&cs, &delta_vector(&w, &[2]).unwrap(), &[0.3]).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn certification_is_enforced() {
        let w = w1(16);
        let grid = Grid::base(1, 64).unwrap();
        let hat = parse_selector("bspline:2").unwrap();
        assert!(matches!(
            CertifiedSystem::certify(hat.clone(), &grid, &w, 1e-8),
            Err(Error::NotCertified(_))
        ));
        let q = GeneratorSystem::single(quasi_orthogonalize(&hat.generators()[0], &w, 1e-8));
        let cs = CertifiedSystem::certify(q, &grid, &w, 1e-8).unwrap();
        let dim = dimension_function(&cs, &grid).unwrap();
        for v in &dim.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert_eq!(dim.non_integer_points, 0);
        let other = PositiveOperator::identity(&w1(3));
        assert!(matches!(
            local_trace(&cs, &other, &[0.1]),
            Err(Error::WindowMismatch { .. })
        ));
    }

    #[test]
    fn restricted_trace_is_bounded() {
        let w = w1(8);
        let grid = Grid::base(1, 16).unwrap();
        let hat = parse_selector("bspline:3").unwrap();
        let q = GeneratorSystem::single(quasi_orthogonalize(&hat.generators()[0], &w, 1e-8));
        let cs = CertifiedSystem::certify(q, &grid, &w, 1e-8).unwrap();
        let basket = ProbeBasket::new(&w, DEFAULT_SEED, 8);
        for xi in grid.points() {
            for (_, f) in &basket.probes {
                let r = restricted_trace(&cs, f, xi).unwrap();
                assert!(r.value <= 1.0 + 1e-12);
                assert!((r.value - r.projection_value).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn spectral_function_of_paley_wiener() {
        let w = w1(4);
        let cs = unchecked("shannon-scaling", &w);
        let grid = Grid::cube(1, -2.0 * PI, 2.0 * PI, 64).unwrap();
        let s = spectral_function(&cs, &grid).unwrap();
        for (p, v) in s.points.iter().zip(&s.values) {
            let expect = if p[0].abs() < PI { 1.0 } else { 0.0 };
            assert_eq!(*v, expect, "{p:?}");
        }
        let csv = s.to_csv();
        assert!(csv.starts_with("xi_1,value,error_bar\n"));
        assert_eq!(csv.lines().count(), 65);
    }

    #[test]
    fn periodicity_examples() {
        let w = w1(6);
        let cs = unchecked("shannon-scaling", &w);
        let d0 = PositiveOperator::delta(&w, &[0]).unwrap();
        let c = check_periodicity(&cs, &d0, &[0.3], &[1], 1e-10).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
        let id = PositiveOperator::identity(&w);
        let c = check_periodicity(&cs, &id, &[0.3], &[2], 1e-10).unwrap();
        assert_eq!(c.max_residual, 0.0);
        let edge = PositiveOperator::delta(&w, &[6]).unwrap();
        let c = check_periodicity(&cs, &edge, &[0.3], &[1], 1e-10).unwrap();
        assert_eq!(c.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn additivity_and_orthogonality() {
        let w = w1(4);
        let a = unchecked("shannon-scaling", &w);
        let b = unchecked("shannon-wavelet", &w);
        let id = PositiveOperator::identity(&w);
        let c = check_additivity(&[a.clone(), b.clone()], &id, &[0.3], 1e-10).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
        assert_eq!(c.witness.unwrap().value, Some(2.0));
        let hat = unchecked("bspline:2", &w);
        assert!(matches!(
            check_additivity(&[a, hat], &id, &[0.3], 1e-10),
            Err(Error::NotOrthogonal(_))
        ));
    }

    #[test]
    fn monotony_examples() {
        let w = w1(4);
        let grid = Grid::base(1, 64).unwrap();
        let basket = ProbeBasket::new(&w, DEFAULT_SEED, 32);
        let v0 = parse_selector("shannon-scaling").unwrap();
        let v1 = dilate_system(&v0, &DilationMatrix::scalar(1, 2).unwrap()).unwrap();
        let c0 = CertifiedSystem::unchecked(v0, &w);
        let c1 = CertifiedSystem::unchecked(v1, &w);
        assert_eq!(check_monotony(&c0, &c1, &grid, &basket, 1e-10).unwrap().verdict, Verdict::Pass);
        assert_eq!(check_monotony(&c0, &c0, &grid, &basket, 1e-10).unwrap().max_residual, 0.0);
        let w0 = unchecked("shannon-wavelet", &w);
        let c = check_monotony(&w0, &c0, &grid, &basket, 1e-10).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        assert!(c.witness.unwrap().entry.starts_with("delta"));
    }

    #[test]
    fn dilation_examples() {
        let w = w1(16);
        let cs = unchecked("shannon-scaling", &w);
        let id = PositiveOperator::identity(&w);
        let one = DilationMatrix::new(1, vec![1]).unwrap();
        let c = check_dilation(&cs, &one, &id, &[0.3], 1e-9).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
        assert_eq!(c.witness.unwrap().value, Some(1.0));
        let two = DilationMatrix::scalar(1, 2).unwrap();
        let c = check_dilation(&cs, &two, &id, &[0.3], 1e-9).unwrap();
        assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
        let hat = unchecked("bspline:2", &w);
        assert!(matches!(
            check_dilation(&hat, &two, &id, &[0.3], 1e-9),
            Err(Error::NotQuasiOrthogonal { .. })
        ));
    }

    #[test]
    fn operator_trace_of_frames() {
        let w = w1(2);
        let basis: Vec<Vec<C64>> = w.indices().iter().map(|k| delta_vector(&w, k).unwrap()).collect();
        assert_eq!(operator_trace(&PositiveOperator::identity(&w), &basis), 5.0);
        let f: Vec<C64> = (0..5).map(|i| C64::new(i as f64, 1.0)).collect();
        let pf = PositiveOperator::rank_one(&w, f.clone()).unwrap();
        assert!((operator_trace(&pf, &basis) - norm_sqr(&f)).abs() < 1e-12);
        // replace delta_0 by two copies of delta_0 / sqrt 2
        let mut redundant: Vec<Vec<C64>> = basis.iter().filter(|e| e[2].re == 0.0).cloned().collect();
        let half: Vec<C64> = basis[2].iter().map(|x| x / 2f64.sqrt()).collect();
        redundant.push(half.clone());
        redundant.push(half);
        let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
        let t = PositiveOperator::random_psd(&w, 3, &mut rng);
        assert!((operator_trace(&t, &redundant) - operator_trace(&t, &basis)).abs() < 1e-12);
        assert!((operator_trace(&t, &basis) - t.trace()).abs() < 1e-12);
    }
}
