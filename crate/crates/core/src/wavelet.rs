//! Wavelet characterization equations, quasi-affine fibers and the wavelet
//! dimension function.
//!
//! Scale sums run over `j` with `|j| <= J`. Truncated remainders are
//! bounded from the decay envelopes: an explicit run of further terms and a
//! geometric extrapolation from the last two.

use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{Certificate, Witness};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::lattice::{in_sublattice, DilationMatrix, IndexWindow};
use crate::linalg::fiber_matrix;
use crate::spectra::forms::power_lattice_sum;
use crate::spectra::{dilate, Decay, dilate_system, dual_power, GeneratorSpectrum, GeneratorSystem, Role};
use crate::trace::{local_trace, CertifiedSystem, PositiveOperator, TraceProfile, TraceValue};
use crate::C64;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub const DEFAULT_DEPTH: usize = 30;

/// Terms summed explicitly past the truncation before extrapolating.
const TAIL_TERMS: i32 = 64;
/// Safety factor of the empirical remainder monitor.
const MONITOR_FACTOR: f64 = 10.0;

/// A finite wavelet set `Psi` with its dilation and scale depth.
#[derive(Debug, Clone)]
pub struct WaveletSystem {
    psis: GeneratorSystem,
    dilation: DilationMatrix,
    scale_depth: usize,
    claimed_semiorthogonal: bool,
}

impl WaveletSystem {
    pub fn new(
        psis: GeneratorSystem,
        dilation: DilationMatrix,
        scale_depth: usize,
        claimed_semiorthogonal: bool,
    ) -> Result<Self> {
        dilation.require_expansive()?;
        if scale_depth == 0 {
            return Err(Error::InvalidParameter("scale depth must be at least 1".into()));
        }
        if psis.dim() != dilation.dim() {
            return Err(Error::DimensionMismatch {
                expected: dilation.dim(),
                got: psis.dim(),
            });
        }
        Ok(Self {
            psis,
            dilation,
            scale_depth,
            claimed_semiorthogonal,
        })
    }

    pub fn psis(&self) -> &GeneratorSystem {
        &self.psis
    }

    pub fn dilation(&self) -> &DilationMatrix {
        &self.dilation
    }

    pub fn scale_depth(&self) -> usize {
        self.scale_depth
    }

    pub fn claimed_semiorthogonal(&self) -> bool {
        self.claimed_semiorthogonal
    }

    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        Self::new(self.psis.clone(), self.dilation.clone(), depth, self.claimed_semiorthogonal)
    }

    pub fn dim(&self) -> usize {
        self.psis.dim()
    }

    fn require_semiorthogonal(&self) -> Result<()> {
        if self.claimed_semiorthogonal {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "wavelet system is not claimed semiorthogonal".into(),
            ))
        }
    }
}

/// Cached real powers `(A^T)^j` for `j` in `lo..=hi`.
struct Powers {
    lo: i32,
    mats: Vec<Vec<f64>>,
}

impl Powers {
    fn new(a: &DilationMatrix, lo: i32, hi: i32) -> Result<Self> {
        let mats = (lo..=hi).map(|j| dual_power(a, j)).collect::<Result<Vec<_>>>()?;
        Ok(Self { lo, mats })
    }

    fn apply(&self, j: i32, x: &[f64]) -> Vec<f64> {
        apply(&self.mats[(j - self.lo) as usize], x)
    }
}

fn apply(m: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|i| (0..n).map(|c| m[i * n + c] * x[c]).sum()).collect()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Remainder of a nonnegative series from explicit terms, extended
/// geometrically from the ratio of the last two.
fn series_remainder(terms: &[f64], factor: f64) -> f64 {
    let total: f64 = terms.iter().sum();
    if !total.is_finite() {
        return f64::INFINITY;
    }
    let [.., prev, last] = terms else {
        return total;
    };
    if *last == 0.0 {
        return total;
    }
    let r = last / prev;
    if !(r < 1.0) {
        return f64::INFINITY;
    }
    total + factor * last * r / (1.0 - r)
}

/// Bound for `sum_{j > J} |g((A^T)^j x)|^2`.
fn upper_tail(g: &GeneratorSpectrum, p: &Powers, depth: i32, x: &[f64]) -> f64 {
    let decay = g.decay();
    let terms: Vec<f64> = (depth + 1..=depth + TAIL_TERMS)
        .map(|j| decay.bound(&p.apply(j, x)).powi(2))
        .collect();
    series_remainder(&terms, 1.0)
}

/// Bound for `sum_{j > J} |g((A^T)^{-j} x)|^2`, from the vanishing order at
/// the origin when known and from the computed terms otherwise.
fn lower_tail(g: &GeneratorSpectrum, p: &Powers, depth: i32, x: &[f64]) -> f64 {
    let range = (depth + 1..=depth + TAIL_TERMS).map(|j| -j);
    match g.form().small_frequency() {
        Some((c0, q)) => {
            let terms: Vec<f64> = range.map(|j| (c0 * norm(&p.apply(j, x)).powf(q)).powi(2)).collect();
            series_remainder(&terms, 1.0)
        }
        None => {
            let terms: Vec<f64> = range.map(|j| g.eval(&p.apply(j, x)).norm_sqr()).collect();
            series_remainder(&terms, MONITOR_FACTOR)
        }
    }
}

fn powers_for(ws: &WaveletSystem) -> Result<Powers> {
    let d = ws.scale_depth as i32 + TAIL_TERMS;
    Powers::new(&ws.dilation, -d, d)
}

/// `sum_psi sum_{|j| <= J} |psi((A^T)^j xi)|^2`, which equals 1 almost
/// everywhere for a tight frame wavelet.
pub fn calibration_sum(ws: &WaveletSystem, xi: &[f64]) -> Result<TraceValue> {
    let p = powers_for(ws)?;
    Ok(calibration_with(ws, &p, xi))
}

fn calibration_with(ws: &WaveletSystem, p: &Powers, xi: &[f64]) -> TraceValue {
    let j = ws.scale_depth as i32;
    let mut value = 0.0;
    let mut tail = 0.0;
    for g in ws.psis.generators() {
        for s in -j..=j {
            value += g.eval(&p.apply(s, xi)).norm_sqr();
        }
        tail += upper_tail(g, p, j, xi) + lower_tail(g, p, j, xi);
    }
    TraceValue { value, error_bar: tail }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexEstimate {
    pub re: f64,
    pub im: f64,
    pub error_bar: f64,
}

impl ComplexEstimate {
    pub fn value(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

fn check_offset(s: &[i64], ws: &WaveletSystem) -> Result<()> {
    if s.len() != ws.dim() {
        return Err(Error::DimensionMismatch {
            expected: ws.dim(),
            got: s.len(),
        });
    }
    if in_sublattice(s, &ws.dilation)? {
        return Err(Error::InSublattice(s.to_vec()));
    }
    Ok(())
}

fn offset(xi: &[f64], s: &[i64]) -> Vec<f64> {
    xi.iter().zip(s).map(|(x, k)| x + TWO_PI * *k as f64).collect()
}

/// `t_s(xi) = sum_psi sum_{j >= 0} psi((A^T)^j xi) conj psi((A^T)^j (xi + 2 pi s))`
/// for `s` outside `A^T Z^n`.
pub fn t_s(ws: &WaveletSystem, s: &[i64], xi: &[f64]) -> Result<ComplexEstimate> {
    check_offset(s, ws)?;
    let p = powers_for(ws)?;
    Ok(cross_scale_sum(ws, &p, 0, xi, s))
}

/// `sum_psi sum_{j = first}^{J} psi((A^T)^j xi) conj psi((A^T)^j (xi + 2 pi s))`
/// with a Cauchy-Schwarz bound on the remainder.
fn cross_scale_sum(ws: &WaveletSystem, p: &Powers, first: i32, xi: &[f64], s: &[i64]) -> ComplexEstimate {
    let depth = ws.scale_depth as i32;
    let shifted = offset(xi, s);
    let mut acc = C64::new(0.0, 0.0);
    let mut ta = 0.0;
    let mut tb = 0.0;
    for g in ws.psis.generators() {
        for j in first..=depth {
            acc += g.eval(&p.apply(j, xi)) * g.eval(&p.apply(j, &shifted)).conj();
        }
        ta += upper_tail(g, p, depth, xi);
        tb += upper_tail(g, p, depth, &shifted);
    }
    ComplexEstimate {
        re: acc.re,
        im: acc.im,
        error_bar: (ta * tb).sqrt(),
    }
}

/// All `s` with `|s|_inf <= range`, in colex order.
fn offsets(dim: usize, range: usize) -> Vec<Vec<i64>> {
    let r = range as i64;
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = (-r..=r)
            .flat_map(|v| {
                out.iter().map(move |p| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    for v in &mut out {
        v.reverse();
    }
    out.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
    out
}

fn outside_offsets(ws: &WaveletSystem, range: usize) -> Result<Vec<Vec<i64>>> {
    let mut out = Vec::new();
    for s in offsets(ws.dim(), range) {
        if !in_sublattice(&s, &ws.dilation)? {
            out.push(s);
        }
    }
    Ok(out)
}

/// One residual of an equation at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRow {
    pub xi: Vec<f64>,
    pub eq_id: String,
    pub residual: f64,
    pub tail_bound: f64,
}

/// A certificate with its per-equation residuals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquationReport {
    pub certificate: Certificate,
    #[serde(skip)]
    pub rows: Vec<ResidualRow>,
}

impl EquationReport {
    fn from_rows(check: &str, tol: f64, rows: Vec<ResidualRow>) -> Self {
        let witnesses = rows
            .iter()
            .map(|r| Witness {
                xi: r.xi.clone(),
                entry: r.eq_id.clone(),
                residual: r.residual,
                tail_bound: r.tail_bound,
                value: None,
            })
            .collect();
        Self {
            certificate: Certificate::assemble(check, tol, witnesses),
            rows,
        }
    }

    /// CSV with columns `xi,eq_id,residual,tail_bound` (`xi_1..xi_n` above
    /// one dimension).
    pub fn to_csv(&self) -> String {
        let n = self.rows.first().map_or(1, |r| r.xi.len());
        let mut out = if n == 1 {
            "xi,".to_string()
        } else {
            (1..=n).map(|d| format!("xi_{d},")).collect()
        };
        out.push_str("eq_id,residual,tail_bound\n");
        for r in &self.rows {
            for x in &r.xi {
                out.push_str(&format!("{x:?},"));
            }
            out.push_str(&format!("{},{:?},{:?}\n", r.eq_id, r.residual, r.tail_bound));
        }
        out
    }

    pub fn max_residual(&self, prefix: &str) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.eq_id.starts_with(prefix))
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    }
}

fn s_label(s: &[i64]) -> String {
    let parts: Vec<String> = s.iter().map(i64::to_string).collect();
    parts.join(";")
}

/// Tight frame characterization of the affine system: the calibration sum
/// equals 1 and `t_s` vanishes for every `s` outside `A^T Z^n` with
/// `|s|_inf <= s_range`, at every grid point.
pub fn characterize_ntf_wavelet(ws: &WaveletSystem, grid: &Grid, s_range: usize, tol: f64) -> Result<EquationReport> {
    let p = powers_for(ws)?;
    let ss = outside_offsets(ws, s_range)?;
    let rows: Vec<Vec<ResidualRow>> = grid
        .points()
        .par_iter()
        .map(|xi| {
            let cal = calibration_with(ws, &p, xi);
            // the terms are nonnegative, so an excess over 1 survives any remainder
            let tail = if cal.value > 1.0 { 0.0 } else { cal.error_bar };
            let mut rows = vec![ResidualRow {
                xi: xi.clone(),
                eq_id: "5.2.1".into(),
                residual: (cal.value - 1.0).abs(),
                tail_bound: tail,
            }];
            for s in &ss {
                let t = cross_scale_sum(ws, &p, 0, xi, s);
                rows.push(ResidualRow {
                    xi: xi.clone(),
                    eq_id: format!("5.2.2:s={}", s_label(s)),
                    residual: t.value().norm(),
                    tail_bound: t.error_bar,
                });
            }
            rows
        })
        .collect();
    Ok(EquationReport::from_rows("wavelet", tol, rows.into_iter().flatten().collect()))
}

/// Fiber `k -> psi((A^T)^j (xi + 2 pi k))` of one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiAffineFiber {
    pub xi: Vec<f64>,
    pub j: usize,
    pub psi: usize,
    pub values: Vec<C64>,
    pub tail_bound: f64,
}

/// Generators `xi -> psi((A^T)^j xi)` for `j = 1..=depth`, ordered by scale
/// and then by wavelet.
pub fn scale_generators(ws: &WaveletSystem, depth: usize) -> Result<GeneratorSystem> {
    let mut gens = Vec::with_capacity(depth * ws.psis.len());
    for j in 1..=depth {
        let m = dual_power(&ws.dilation, j as i32)?;
        for g in ws.psis.generators() {
            gens.push(dilate(g, m.clone(), 1.0, None, format!("{}@{j}", g.name()))?);
        }
    }
    GeneratorSystem::new(ws.dim(), gens, Role::Unverified)
}

/// The fibers `f_psi^j(xi)` for `j = 1..=J` over all wavelets.
pub fn quasi_affine_fibers(ws: &WaveletSystem, xi: &[f64], w: &IndexWindow) -> Result<Vec<QuasiAffineFiber>> {
    ws.require_semiorthogonal()?;
    let sys = scale_generators(ws, ws.scale_depth)?;
    let l = ws.psis.len();
    sys.generators()
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let f = crate::spectra::fiber(g, xi, w)?;
            Ok(QuasiAffineFiber {
                xi: xi.to_vec(),
                j: i / l + 1,
                psi: i % l,
                values: f.values,
                tail_bound: f.tail_bound,
            })
        })
        .collect()
}

/// Bound for `sum_{j > J} sum_psi sum_k |psi((A^T)^j (xi + 2 pi k))|^2`.
fn depth_tail(ws: &WaveletSystem, xi: &[f64], w: &IndexWindow) -> Result<f64> {
    const TERMS: usize = 12;
    let depth = ws.scale_depth;
    let mut terms = Vec::with_capacity(TERMS);
    for j in depth + 1..=depth + TERMS {
        let m = dual_power(&ws.dilation, j as i32)?;
        let mut t = 0.0;
        for g in ws.psis.generators() {
            let decay = g.decay();
            let inside: f64 = w
                .indices()
                .iter()
                .map(|k| decay.bound(&apply(&m, &offset(xi, k))).powi(2))
                .sum();
            // off the window |y| >= pi > 1, so 1 + s|y| >= s (1 + |y|) / 2
            let outside = match decay {
                Decay::Power { center, c, p } if xi.len() == 1 && center == 0.0 && p > 0.5 && m[0].abs() >= 1.0 => {
                    c * c * (2.0 / m[0].abs()).powf(2.0 * p) * power_lattice_sum(xi[0], TWO_PI, w.radius(), 2.0 * p)
                }
                _ => dilate(g, m.clone(), 1.0, None, "")?.form().tail(xi, w.radius()),
            };
            t += inside + outside;
        }
        terms.push(t);
    }
    Ok(series_remainder(&terms, 1.0))
}

fn v0_value(ws: &WaveletSystem, t: &PositiveOperator, xi: &[f64], w: &IndexWindow) -> Result<TraceValue> {
    let sys = scale_generators(ws, ws.scale_depth)?;
    let cs = CertifiedSystem::unchecked(sys, w);
    let inner = local_trace(&cs, t, xi)?;
    let deep = depth_tail(ws, xi, w)?;
    Ok(TraceValue {
        value: inner.value,
        error_bar: inner.error_bar + t.op_norm() * deep,
    })
}

/// `tau_{V_0,T}(xi) = sum_psi sum_{j >= 1} <T f_psi^j(xi), f_psi^j(xi)>`,
/// truncated at the scale depth. A depth of zero is the empty sum.
pub fn v0_trace(ws: &WaveletSystem, t: &PositiveOperator, xi: &[f64], w: &IndexWindow) -> Result<TraceValue> {
    ws.require_semiorthogonal()?;
    if t.window() != w {
        return Err(Error::WindowMismatch {
            operator: t.window().radius(),
            fibers: w.radius(),
        });
    }
    v0_value(ws, t, xi, w)
}

/// Truncation of [`v0_trace`] at an explicit depth, including zero.
pub fn v0_trace_at_depth(
    ws: &WaveletSystem,
    t: &PositiveOperator,
    xi: &[f64],
    w: &IndexWindow,
    depth: usize,
) -> Result<TraceValue> {
    if depth == 0 {
        ws.require_semiorthogonal()?;
        return Ok(TraceValue {
            value: 0.0,
            error_bar: 0.0,
        });
    }
    v0_trace(&ws.with_depth(depth)?, t, xi, w)
}

/// `D_Psi(xi) = sum_k sum_psi sum_{j >= 1} |psi((A^T)^j (xi + 2 pi k))|^2`.
pub fn wavelet_dimension_function(ws: &WaveletSystem, grid: &Grid, w: &IndexWindow) -> Result<TraceProfile> {
    let id = PositiveOperator::identity(w);
    let vals = grid
        .points()
        .par_iter()
        .map(|xi| v0_value(ws, &id, xi, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(TraceProfile::new("scale-sum:identity", grid.points().to_vec(), vals))
}

fn dual_gramian_entry(sys: &GeneratorSystem, xi: &[f64], s: &[i64]) -> C64 {
    let shifted = offset(xi, s);
    sys.generators()
        .iter()
        .map(|g| g.eval(xi) * g.eval(&shifted).conj())
        .sum()
}

/// `sum_psi sum_{j >= 1} psi((A^T)^j xi) conj psi((A^T)^j (xi + 2 pi s))`
/// against `sum_phi phi(xi) conj phi(xi + 2 pi s)` for every `|s|_inf <= s_range`.
pub fn scaling_wavelet_match(
    ws: &WaveletSystem,
    phi: &GeneratorSystem,
    grid: &Grid,
    s_range: usize,
    tol: f64,
) -> Result<EquationReport> {
    ws.require_semiorthogonal()?;
    if phi.dim() != ws.dim() {
        return Err(Error::DimensionMismatch {
            expected: ws.dim(),
            got: phi.dim(),
        });
    }
    let p = powers_for(ws)?;
    let ss = offsets(ws.dim(), s_range);
    let rows: Vec<Vec<ResidualRow>> = grid
        .points()
        .par_iter()
        .map(|xi| {
            ss.iter()
                .map(|s| {
                    let lhs = cross_scale_sum(ws, &p, 1, xi, s);
                    let rhs = dual_gramian_entry(phi, xi, s);
                    ResidualRow {
                        xi: xi.clone(),
                        eq_id: format!("5.4.2:s={}", s_label(s)),
                        residual: (lhs.value() - rhs).norm(),
                        tail_bound: lhs.error_bar,
                    }
                })
                .collect()
        })
        .collect();
    Ok(EquationReport::from_rows(
        "scaling-match",
        tol,
        rows.into_iter().flatten().collect(),
    ))
}

/// Two-scale relations of a scaling system and its wavelets:
/// `sum |psi|^2(xi) = sum |phi|^2((A^T)^{-1} xi) - sum |phi|^2(xi)` and,
/// for `s` outside `A^T Z^n`, `sum psi(xi) conj psi(xi + 2 pi s) =
/// -sum phi(xi) conj phi(xi + 2 pi s)`. `negate` flips the sign of the
/// second right-hand side.
pub fn mra_consistency(
    ws: &WaveletSystem,
    phi: &GeneratorSystem,
    grid: &Grid,
    s_range: usize,
    tol: f64,
    negate: bool,
) -> Result<EquationReport> {
    if phi.dim() != ws.dim() {
        return Err(Error::DimensionMismatch {
            expected: ws.dim(),
            got: phi.dim(),
        });
    }
    let inv = Powers::new(&ws.dilation, -1, -1)?;
    let ss = outside_offsets(ws, s_range)?;
    let sign = if negate { 1.0 } else { -1.0 };
    let rows: Vec<Vec<ResidualRow>> = grid
        .points()
        .par_iter()
        .map(|xi| {
            let coarse = inv.apply(-1, xi);
            let energy = |sys: &GeneratorSystem, x: &[f64]| -> f64 {
                sys.generators().iter().map(|g| g.eval(x).norm_sqr()).sum()
            };
            let lhs = energy(&ws.psis, xi);
            let rhs = energy(phi, &coarse) - energy(phi, xi);
            let mut rows = vec![ResidualRow {
                xi: xi.clone(),
                eq_id: "5.5.1".into(),
                residual: (lhs - rhs).abs(),
                tail_bound: 0.0,
            }];
            for s in &ss {
                let l = dual_gramian_entry(&ws.psis, xi, s);
                let r = dual_gramian_entry(phi, xi, s) * sign;
                rows.push(ResidualRow {
                    xi: xi.clone(),
                    eq_id: format!("5.5.2:s={}", s_label(s)),
                    residual: (l - r).norm(),
                    tail_bound: 0.0,
                });
            }
            rows
        })
        .collect();
    Ok(EquationReport::from_rows("mra", tol, rows.into_iter().flatten().collect()))
}

/// Cross Gramian of `{psi}` against `{|det A|^{1/2} psi(A^T .)}` at each grid
/// point. Both spaces lie in orthogonal scale levels when the wavelet is
/// semiorthogonal, so every entry should vanish.
pub fn semiorthogonality_spot_check(ws: &WaveletSystem, grid: &Grid, w: &IndexWindow, tol: f64) -> Result<Certificate> {
    let m = dual_power(&ws.dilation, 1)?;
    let s = (ws.dilation.index() as f64).sqrt();
    let coarser = ws.psis.map(|g| {
        dilate(g, m.clone(), s, None, format!("{}@-1", g.name())).expect("dimensions agree")
    });
    let witnesses = grid
        .points()
        .par_iter()
        .map(|xi| -> Result<Witness> {
            let (a, ta) = fiber_matrix(&ws.psis, xi, w)?;
            let (b, tb) = fiber_matrix(&coarser, xi, w)?;
            let cross = a.adjoint() * &b;
            let (mut worst, mut at) = (0.0, (0, 0));
            for r in 0..cross.nrows() {
                for c in 0..cross.ncols() {
                    if cross[(r, c)].norm() > worst {
                        worst = cross[(r, c)].norm();
                        at = (r, c);
                    }
                }
            }
            let na = a.column(at.0).norm_squared();
            let nb = b.column(at.1).norm_squared();
            Ok(Witness {
                xi: xi.clone(),
                entry: format!("({},{})", at.0, at.1),
                residual: worst,
                tail_bound: (ta * (nb + tb)).sqrt() + (na * tb).sqrt(),
                value: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Certificate::assemble("semiorthogonality", tol, witnesses))
}

/// Integer power `A^j`.
pub fn matrix_power(a: &DilationMatrix, j: u32) -> Result<DilationMatrix> {
    let n = a.dim();
    let mut acc: Vec<i64> = (0..n * n).map(|i| i64::from(i % (n + 1) == 0)).collect();
    for _ in 0..j {
        let mut next = vec![0i64; n * n];
        for r in 0..n {
            for c in 0..n {
                let mut v = 0i64;
                for k in 0..n {
                    let t = acc[r * n + k].checked_mul(a.entry(k, c)).ok_or(Error::Overflow)?;
                    v = v.checked_add(t).ok_or(Error::Overflow)?;
                }
                next[r * n + c] = v;
            }
        }
        acc = next;
    }
    DilationMatrix::new(n, acc)
}

/// Quasi-affine system truncated to the scales `-coarse..=fine`: the scale
/// generators of `V_0` followed by `D_{A^j} Psi` for `j = 0..=fine`.
pub fn quasi_affine_system(ws: &WaveletSystem, fine: usize) -> Result<GeneratorSystem> {
    let mut sys = scale_generators(ws, ws.scale_depth)?;
    for j in 0..=fine {
        let level = if j == 0 {
            ws.psis.clone()
        } else {
            dilate_system(&ws.psis, &matrix_power(&ws.dilation, j as u32)?)?
        };
        sys = sys.union(&level)?;
    }
    Ok(sys)
}
