//! Closed-form Fourier-side spectra and their truncation tails.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::lattice::IndexWindow;

const TWO_PI: f64 = 2.0 * PI;

/// What is known about the size of a spectrum away from the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum Decay {
    /// Support inside the axis box `[lo, hi]`, with `|g| <= sup`.
    Compact { lo: Vec<f64>, hi: Vec<f64>, sup: f64 },
    /// One-dimensional power decay `|g(x)| <= c (1 + |x - center|)^(-p)`.
    Power { center: f64, c: f64, p: f64 },
    Unknown,
}

impl Decay {
    /// Upper bound for `|g(xi)|` implied by the envelope.
    pub fn bound(&self, xi: &[f64]) -> f64 {
        match self {
            Decay::Compact { lo, hi, sup } => {
                let inside = xi
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(x, (a, b))| *x >= *a && *x <= *b);
                if inside {
                    *sup
                } else {
                    0.0
                }
            }
            Decay::Power { center, c, p } => c * (1.0 + (xi[0] - center).abs()).powf(-p),
            Decay::Unknown => f64::INFINITY,
        }
    }

    fn shifted(&self, a: &[f64]) -> Decay {
        match self {
            Decay::Compact { lo, hi, sup } => Decay::Compact {
                lo: lo.iter().zip(a).map(|(x, s)| x + s).collect(),
                hi: hi.iter().zip(a).map(|(x, s)| x + s).collect(),
                sup: *sup,
            },
            Decay::Power { center, c, p } => Decay::Power {
                center: center + a[0],
                c: *c,
                p: *p,
            },
            Decay::Unknown => Decay::Unknown,
        }
    }

    fn scaled(&self, factor: f64) -> Decay {
        match self {
            Decay::Compact { lo, hi, sup } => Decay::Compact {
                lo: lo.clone(),
                hi: hi.clone(),
                sup: sup * factor,
            },
            Decay::Power { center, c, p } => Decay::Power {
                center: *center,
                c: c * factor,
                p: *p,
            },
            Decay::Unknown => Decay::Unknown,
        }
    }
}

/// A spectrum `xi -> g^(xi)` given in closed form.
pub trait SpectralForm: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn eval(&self, xi: &[f64]) -> C64;

    fn decay(&self) -> Decay;

    /// `(c0, q)` with `|g(xi)| <= c0 |xi|^q`, when the spectrum vanishes at
    /// the origin to a known order.
    fn small_frequency(&self) -> Option<(f64, f64)> {
        None
    }

    /// Upper bound for `sum_{k outside W} |g(xi + 2 pi k)|^2`.
    fn tail(&self, xi: &[f64], radius: usize) -> f64 {
        decay_tail(self, &self.decay(), xi, radius)
    }

    /// `g(xi + 2 pi k)` for every `k` of the window.
    fn fiber_values(&self, xi: &[f64], w: &IndexWindow) -> Vec<C64> {
        let mut pt = vec![0.0; xi.len()];
        w.indices()
            .iter()
            .map(|k| {
                for (d, p) in pt.iter_mut().enumerate() {
                    *p = xi[d] + TWO_PI * k[d] as f64;
                }
                self.eval(&pt)
            })
            .collect()
    }

    fn note(&self) -> String;
}

/// `sin(x) / x` with the removable singularity filled.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `sum_{|k| > K} (1 + |x0 + step k|)^(-q)` bounded by explicit terms plus
/// an integral comparison. Requires `q > 1`.
pub fn power_lattice_sum(x0: f64, step: f64, radius: usize, q: f64) -> f64 {
    let start = step * (radius as f64 + 1.0);
    side_sum(x0 + start, step, q) + side_sum(-x0 + start, step, q)
}

fn side_sum(mut a: f64, step: f64, q: f64) -> f64 {
    let f = |t: f64| (1.0 + t.abs()).powf(-q);
    let mut acc = 0.0;
    // points still left of the origin: add them explicitly
    while a < 0.0 {
        acc += f(a);
        a += step;
    }
    acc + f(a) + (1.0 + a).powf(1.0 - q) / ((q - 1.0) * step)
}

/// Tail bound from a decay description. Compact supports are enumerated
/// exactly; power envelopes use the lattice sum.
pub fn decay_tail<F: SpectralForm + ?Sized>(form: &F, decay: &Decay, xi: &[f64], radius: usize) -> f64 {
    match decay {
        Decay::Compact { lo, hi, .. } => {
            let n = xi.len();
            let mut ranges = Vec::with_capacity(n);
            for d in 0..n {
                let kmin = ((lo[d] - xi[d]) / TWO_PI).floor() as i64;
                let kmax = ((hi[d] - xi[d]) / TWO_PI).ceil() as i64;
                ranges.push((kmin, kmax));
            }
            let r = radius as i64;
            if ranges.iter().all(|&(a, b)| a >= -r && b <= r) {
                return 0.0;
            }
            let count: i64 = ranges.iter().map(|(a, b)| b - a + 1).product();
            if count > 4_000_000 {
                return f64::INFINITY;
            }
            let mut acc = 0.0;
            let mut k: Vec<i64> = ranges.iter().map(|r| r.0).collect();
            let mut pt = vec![0.0; n];
            'outer: loop {
                if k.iter().any(|c| c.abs() > r) {
                    for d in 0..n {
                        pt[d] = xi[d] + TWO_PI * k[d] as f64;
                    }
                    acc += form.eval(&pt).norm_sqr();
                }
                for d in (0..n).rev() {
                    if k[d] < ranges[d].1 {
                        k[d] += 1;
                        continue 'outer;
                    }
                    k[d] = ranges[d].0;
                }
                break;
            }
            acc
        }
        Decay::Power { center, c, p } if xi.len() == 1 && *p > 0.5 => {
            c * c * power_lattice_sum(xi[0] - center, TWO_PI, radius, 2.0 * p)
        }
        _ => f64::INFINITY,
    }
}

/// Union of half-open intervals `[lo, hi)` with value 1.
#[derive(Debug, Clone)]
pub struct Indicator {
    pub intervals: Vec<(f64, f64)>,
}

impl SpectralForm for Indicator {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, xi: &[f64]) -> C64 {
        let x = xi[0];
        if self.intervals.iter().any(|&(a, b)| x >= a && x < b) {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }

    fn decay(&self) -> Decay {
        let lo = self.intervals.iter().map(|i| i.0).fold(f64::INFINITY, f64::min);
        let hi = self.intervals.iter().map(|i| i.1).fold(f64::NEG_INFINITY, f64::max);
        Decay::Compact {
            lo: vec![lo],
            hi: vec![hi],
            sup: 1.0,
        }
    }

    fn small_frequency(&self) -> Option<(f64, f64)> {
        // distance from the origin to the support
        let gap = self
            .intervals
            .iter()
            .map(|&(a, b)| {
                if a <= 0.0 && 0.0 <= b {
                    0.0
                } else {
                    a.abs().min(b.abs())
                }
            })
            .fold(f64::INFINITY, f64::min);
        (gap > 0.0).then(|| (gap.powi(-8), 8.0))
    }

    fn note(&self) -> String {
        format!("indicator of {:?}", self.intervals)
    }
}

/// Cardinal B-spline of order `m` supported on `[0, m]`:
/// `((1 - e^{-i xi}) / (i xi))^m = e^{-i m xi / 2} sinc(xi / 2)^m`.
#[derive(Debug, Clone)]
pub struct BSpline {
    pub order: u32,
}

impl SpectralForm for BSpline {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, xi: &[f64]) -> C64 {
        let x = xi[0];
        let m = self.order as f64;
        C64::from_polar(sinc(x / 2.0).powi(self.order as i32), -m * x / 2.0)
    }

    fn decay(&self) -> Decay {
        // |sinc(x/2)| <= min(1, 2/|x|) <= 3 / (1 + |x|)
        Decay::Power {
            center: 0.0,
            c: 3f64.powi(self.order as i32),
            p: self.order as f64,
        }
    }

    fn note(&self) -> String {
        format!("B-spline of order {}, C^{} in time", self.order, self.order.saturating_sub(2))
    }
}

/// Haar wavelet `chi[0,1/2) - chi[1/2,1)`:
/// `(1 - e^{-i xi/2})^2 / (i xi) = i e^{-i xi/2} sin(xi/4) sinc(xi/4)`.
#[derive(Debug, Clone)]
pub struct HaarWavelet;

impl SpectralForm for HaarWavelet {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, xi: &[f64]) -> C64 {
        let x = xi[0];
        let r = (x / 4.0).sin() * sinc(x / 4.0);
        C64::from_polar(r, -x / 2.0) * C64::i()
    }

    fn decay(&self) -> Decay {
        Decay::Power {
            center: 0.0,
            c: 5.0,
            p: 1.0,
        }
    }

    fn small_frequency(&self) -> Option<(f64, f64)> {
        Some((0.25, 1.0))
    }

    fn note(&self) -> String {
        "Haar wavelet, one vanishing moment".into()
    }
}

/// The C^3 ramp `x^4 (35 - 84x + 70x^2 - 20x^3)` on `[0, 1]`.
pub fn meyer_ramp(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x.powi(4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x)
}

#[derive(Debug, Clone)]
pub struct MeyerScaling;

impl SpectralForm for MeyerScaling {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, xi: &[f64]) -> C64 {
        let a = xi[0].abs();
        let v = if a <= TWO_PI / 3.0 {
            1.0
        } else if a <= 2.0 * TWO_PI / 3.0 {
            (PI / 2.0 * meyer_ramp(3.0 * a / TWO_PI - 1.0)).cos()
        } else {
            0.0
        };
        C64::new(v, 0.0)
    }

    fn decay(&self) -> Decay {
        let r = 4.0 * PI / 3.0;
        Decay::Compact {
            lo: vec![-r],
            hi: vec![r],
            sup: 1.0,
        }
    }

    fn note(&self) -> String {
        "Meyer scaling function, C^3 ramp".into()
    }
}

#[derive(Debug, Clone)]
pub struct MeyerWavelet;

impl SpectralForm for MeyerWavelet {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, xi: &[f64]) -> C64 {
        let x = xi[0];
        let a = x.abs();
        let m = if !(TWO_PI / 3.0..=4.0 * TWO_PI / 3.0).contains(&a) {
            0.0
        } else if a <= 2.0 * TWO_PI / 3.0 {
            (PI / 2.0 * meyer_ramp(3.0 * a / TWO_PI - 1.0)).sin()
        } else {
            (PI / 2.0 * meyer_ramp(3.0 * a / (2.0 * TWO_PI) - 1.0)).cos()
        };
        C64::from_polar(m, -x / 2.0)
    }

    fn decay(&self) -> Decay {
        let r = 8.0 * PI / 3.0;
        Decay::Compact {
            lo: vec![-r],
            hi: vec![r],
            sup: 1.0,
        }
    }

    fn small_frequency(&self) -> Option<(f64, f64)> {
        Some(((TWO_PI / 3.0).powi(-8), 8.0))
    }

    fn note(&self) -> String {
        "Meyer wavelet, C^3 ramp".into()
    }
}

#[derive(Debug, Clone)]
pub struct Zero {
    pub dim: usize,
}

impl SpectralForm for Zero {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _xi: &[f64]) -> C64 {
        C64::new(0.0, 0.0)
    }

    fn decay(&self) -> Decay {
        Decay::Compact {
            lo: vec![0.0; self.dim],
            hi: vec![0.0; self.dim],
            sup: 0.0,
        }
    }

    fn small_frequency(&self) -> Option<(f64, f64)> {
        Some((0.0, 8.0))
    }

    fn tail(&self, _xi: &[f64], _radius: usize) -> f64 {
        0.0
    }

    fn note(&self) -> String {
        "zero".into()
    }
}

/// Separable product of one-dimensional spectra.
#[derive(Debug, Clone)]
pub struct Tensor {
    pub factors: Vec<Arc<dyn SpectralForm>>,
}

impl SpectralForm for Tensor {
    fn dim(&self) -> usize {
        self.factors.len()
    }

    fn eval(&self, xi: &[f64]) -> C64 {
        self.factors
            .iter()
            .zip(xi)
            .map(|(f, x)| f.eval(std::slice::from_ref(x)))
            .product()
    }

    fn decay(&self) -> Decay {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let mut sup = 1.0;
        for f in &self.factors {
            match f.decay() {
                Decay::Compact { lo: a, hi: b, sup: s } => {
                    lo.extend(a);
                    hi.extend(b);
                    sup *= s;
                }
                _ => return Decay::Unknown,
            }
        }
        Decay::Compact { lo, hi, sup }
    }

    fn small_frequency(&self) -> Option<(f64, f64)> {
        // |prod g_i| <= c0_i |xi_i|^q_i <= c0_i |xi|^q_i for any vanishing factor
        self.factors
            .iter()
            .enumerate()
            .find_map(|(i, f)| {
                f.small_frequency().map(|(c0, q)| {
                    let rest: f64 = self
                        .factors
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, g)| g.decay().bound(&[g_peak(g.as_ref())]))
                        .product();
                    (c0 * rest, q)
                })
            })
    }

    fn tail(&self, xi: &[f64], radius: usize) -> f64 {
        // prod (windowed + tail) - prod windowed
        let w = IndexWindow::new(1, radius).expect("radius >= 1");
        let mut full = 1.0;
        let mut inside = 1.0;
        for (f, x) in self.factors.iter().zip(xi) {
            let wsum: f64 = f
                .fiber_values(std::slice::from_ref(x), &w)
                .iter()
                .map(|v| v.norm_sqr())
                .sum();
            let t = f.tail(std::slice::from_ref(x), radius);
            full *= wsum + t;
            inside *= wsum;
        }
        (full - inside).max(0.0)
    }

    fn note(&self) -> String {
        let parts: Vec<String> = self.factors.iter().map(|f| f.note()).collect();
        format!("tensor product [{}]", parts.join(" x "))
    }
}

fn g_peak(f: &dyn SpectralForm) -> f64 {
    match f.decay() {
        Decay::Power { center, .. } => center,
        Decay::Compact { lo, hi, .. } => 0.5 * (lo[0] + hi[0]),
        Decay::Unknown => 0.0,
    }
}

/// `g(xi - a)`: the spectrum of the modulated function `e^{i<a,x>} f(x)`.
#[derive(Debug, Clone)]
pub struct Modulated {
    pub inner: Arc<dyn SpectralForm>,
    pub shift: Vec<f64>,
}

impl Modulated {
    fn arg(&self, xi: &[f64]) -> Vec<f64> {
        xi.iter().zip(&self.shift).map(|(x, a)| x - a).collect()
    }
}

impl SpectralForm for Modulated {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, xi: &[f64]) -> C64 {
        self.inner.eval(&self.arg(xi))
    }

    fn decay(&self) -> Decay {
        self.inner.decay().shifted(&self.shift)
    }

    fn tail(&self, xi: &[f64], radius: usize) -> f64 {
        self.inner.tail(&self.arg(xi), radius)
    }

    fn fiber_values(&self, xi: &[f64], w: &IndexWindow) -> Vec<C64> {
        self.inner.fiber_values(&self.arg(xi), w)
    }

    fn note(&self) -> String {
        format!("{} modulated by {:?}", self.inner.note(), self.shift)
    }
}

/// `u * g(xi)` for a complex constant `u`.
#[derive(Debug, Clone)]
pub struct Scaled {
    pub inner: Arc<dyn SpectralForm>,
    pub factor: C64,
}

impl SpectralForm for Scaled {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, xi: &[f64]) -> C64 {
        self.factor * self.inner.eval(xi)
    }

    fn decay(&self) -> Decay {
        self.inner.decay().scaled(self.factor.norm())
    }

    fn small_frequency(&self) -> Option<(f64, f64)> {
        self.inner
            .small_frequency()
            .map(|(c, q)| (c * self.factor.norm(), q))
    }

    fn tail(&self, xi: &[f64], radius: usize) -> f64 {
        self.factor.norm_sqr() * self.inner.tail(xi, radius)
    }

    fn note(&self) -> String {
        format!("{} scaled by {}", self.inner.note(), self.factor)
    }
}

/// `g(xi) (1 + eps sin(sqrt(2) xi_1 + 1/2))`, a smooth deterministic
/// distortion used as a harness sensitivity probe.
#[derive(Debug, Clone)]
pub struct Perturbed {
    pub inner: Arc<dyn SpectralForm>,
    pub eps: f64,
}

impl SpectralForm for Perturbed {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, xi: &[f64]) -> C64 {
        let w = 1.0 + self.eps * (std::f64::consts::SQRT_2 * xi[0] + 0.5).sin();
        self.inner.eval(xi) * w
    }

    fn decay(&self) -> Decay {
        self.inner.decay().scaled(1.0 + self.eps.abs())
    }

    fn tail(&self, xi: &[f64], radius: usize) -> f64 {
        (1.0 + self.eps.abs()).powi(2) * self.inner.tail(xi, radius)
    }

    fn note(&self) -> String {
        format!("{} perturbed by {:e}", self.inner.note(), self.eps)
    }
}

/// `scale * g(M xi) * e^{-i <M xi, phase>}`.
///
/// Covers the dilated generators `|det A|^{-1/2} g((A^T)^{-1} xi) e^{-i<.,l>}`
/// and the scale fibers `g((A^T)^j xi)`.
#[derive(Debug, Clone)]
pub struct Dilated {
    pub inner: Arc<dyn SpectralForm>,
    /// Row-major `n x n`.
    pub matrix: Vec<f64>,
    pub scale: f64,
    pub phase: Option<Vec<f64>>,
}

impl Dilated {
    pub fn map(&self, xi: &[f64]) -> Vec<f64> {
        let n = xi.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[i * n + j] * xi[j]).sum())
            .collect()
    }

    /// Evaluate at an already mapped point `y = M xi`.
    pub fn eval_mapped(&self, y: &[f64]) -> C64 {
        let v = self.inner.eval(y) * self.scale;
        match &self.phase {
            Some(l) => {
                let t: f64 = y.iter().zip(l).map(|(a, b)| a * b).sum();
                v * C64::from_polar(1.0, -t)
            }
            None => v,
        }
    }

    fn inverse(&self) -> Option<Vec<f64>> {
        let n = self.inner.dim();
        let m = nalgebra::DMatrix::from_row_slice(n, n, &self.matrix);
        m.try_inverse().map(|inv| {
            let mut out = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = inv[(i, j)];
                }
            }
            out
        })
    }
}

impl SpectralForm for Dilated {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, xi: &[f64]) -> C64 {
        self.eval_mapped(&self.map(xi))
    }

    fn decay(&self) -> Decay {
        let n = self.inner.dim();
        match self.inner.decay() {
            Decay::Compact { lo, hi, sup } => {
                let Some(inv) = self.inverse() else {
                    return Decay::Unknown;
                };
                let mut plo = vec![0.0; n];
                let mut phi = vec![0.0; n];
                for i in 0..n {
                    for j in 0..n {
                        let a = inv[i * n + j] * lo[j];
                        let b = inv[i * n + j] * hi[j];
                        plo[i] += a.min(b);
                        phi[i] += a.max(b);
                    }
                }
                Decay::Compact {
                    lo: plo,
                    hi: phi,
                    sup: sup * self.scale,
                }
            }
            Decay::Power { center, c, p } if n == 1 && self.matrix[0] != 0.0 => {
                let m = self.matrix[0];
                Decay::Power {
                    center: center / m,
                    c: self.scale * c * m.abs().min(1.0).powf(-p),
                    p,
                }
            }
            _ => Decay::Unknown,
        }
    }

    fn small_frequency(&self) -> Option<(f64, f64)> {
        let n = self.inner.dim();
        let m = nalgebra::DMatrix::from_row_slice(n, n, &self.matrix);
        let norm = m.norm(); // Frobenius bounds the spectral norm
        self.inner
            .small_frequency()
            .map(|(c0, q)| (self.scale * c0 * norm.powf(q), q))
    }

    fn tail(&self, xi: &[f64], radius: usize) -> f64 {
        match self.inner.decay() {
            Decay::Power { center, c, p } if xi.len() == 1 && p > 0.5 => {
                let m = self.matrix[0];
                let x0 = (m * xi[0] - center) * m.signum();
                let s = self.scale * c;
                s * s * power_lattice_sum(x0, TWO_PI * m.abs(), radius, 2.0 * p)
            }
            _ => decay_tail(self, &self.decay(), xi, radius),
        }
    }

    fn note(&self) -> String {
        format!("{} under xi -> {:?} xi", self.inner.note(), self.matrix)
    }
}

/// `g(xi) / sqrt(Per_W |g|^2 (xi))`, zero where the windowed periodization is
/// at most `tol`. The periodization is taken at the base point of `xi`.
#[derive(Debug, Clone)]
pub struct QuasiOrthogonal {
    pub inner: Arc<dyn SpectralForm>,
    pub window: IndexWindow,
    pub tol: f64,
}

impl QuasiOrthogonal {
    /// Windowed periodization of the input at the base point of `xi`.
    pub fn periodization_at(&self, xi: &[f64]) -> f64 {
        let (base, _) = crate::grid::recenter(xi);
        self.inner
            .fiber_values(&base, &self.window)
            .iter()
            .map(|v| v.norm_sqr())
            .sum()
    }

    fn factor(&self, per: f64) -> f64 {
        if per > self.tol {
            per.sqrt().recip()
        } else {
            0.0
        }
    }
}

impl SpectralForm for QuasiOrthogonal {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, xi: &[f64]) -> C64 {
        self.inner.eval(xi) * self.factor(self.periodization_at(xi))
    }

    fn decay(&self) -> Decay {
        Decay::Unknown
    }

    fn tail(&self, xi: &[f64], radius: usize) -> f64 {
        let f = self.factor(self.periodization_at(xi));
        f * f * self.inner.tail(xi, radius)
    }

    fn fiber_values(&self, xi: &[f64], w: &IndexWindow) -> Vec<C64> {
        let f = self.factor(self.periodization_at(xi));
        self.inner
            .fiber_values(xi, w)
            .into_iter()
            .map(|v| v * f)
            .collect()
    }

    fn note(&self) -> String {
        format!("quasi-orthogonalized {}", self.inner.note())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_haar_wavelet(xi: f64, n: usize) -> C64 {
        // composite Simpson on [0, 1/2) and [1/2, 1) of e^{-i x xi}
        let simpson = |a: f64, b: f64| {
            let h = (b - a) / n as f64;
            let f = |x: f64| C64::from_polar(1.0, -x * xi);
            let mut s = f(a) + f(b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += f(a + i as f64 * h) * w;
            }
            s * (h / 3.0)
        };
        simpson(0.0, 0.5) - simpson(0.5, 1.0)
    }

    #[test]
    fn haar_wavelet_matches_quadrature() {
        for xi in [2.0 * PI, 0.3, -5.0, 17.0, 1e-6] {
            let q = quad_haar_wavelet(xi, 2000);
            let v = HaarWavelet.eval(&[xi]);
            assert!((q - v).norm() < 1e-10, "xi {xi}: {q} vs {v}");
        }
        let at = HaarWavelet.eval(&[2.0 * PI]).norm_sqr();
        let expected = 16.0 * (PI / 2.0).sin().powi(4) / (4.0 * PI * PI);
        assert!((at - expected).abs() < 1e-14);
    }

    #[test]
    fn haar_scaling_limit_at_zero() {
        let v = BSpline { order: 1 }.eval(&[0.0]);
        assert_eq!(v, C64::new(1.0, 0.0));
        let v = BSpline { order: 1 }.eval(&[1e-7]);
        let direct = (C64::new(1.0, 0.0) - C64::from_polar(1.0, -1e-7)) / C64::new(0.0, 1e-7);
        assert!((v - direct).norm() < 1e-8);
    }

    #[test]
    fn power_sum_dominates_brute_force() {
        for &(x0, radius, q) in &[(0.3, 4usize, 2.0), (-2.0, 1, 4.0), (40.0, 3, 2.0), (-40.0, 2, 2.0)] {
            let brute: f64 = (-200_000i64..=200_000)
                .filter(|k| k.unsigned_abs() as usize > radius)
                .map(|k| (1.0 + (x0 + TWO_PI * k as f64).abs()).powf(-q))
                .sum();
            let bound = power_lattice_sum(x0, TWO_PI, radius, q);
            assert!(bound >= brute, "{x0} {radius}: {bound} < {brute}");
            assert!(bound < 3.0 * brute + 1e-6, "{bound} vs {brute}");
        }
    }

    #[test]
    fn meyer_pair_satisfies_two_scale_energy() {
        for i in 0..400 {
            let x = -9.0 + 0.0451 * i as f64;
            let psi = MeyerWavelet.eval(&[x]).norm_sqr();
            let lhs = MeyerScaling.eval(&[x / 2.0]).norm_sqr() - MeyerScaling.eval(&[x]).norm_sqr();
            assert!((psi - lhs).abs() < 1e-12, "x {x}");
        }
        assert!((meyer_ramp(0.3) + meyer_ramp(0.7) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn envelopes_hold_on_sample() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5EED);
        let forms: Vec<Arc<dyn SpectralForm>> = vec![
            Arc::new(BSpline { order: 1 }),
            Arc::new(BSpline { order: 2 }),
            Arc::new(BSpline { order: 3 }),
            Arc::new(HaarWavelet),
            Arc::new(MeyerScaling),
            Arc::new(MeyerWavelet),
            Arc::new(Indicator {
                intervals: vec![(-PI, PI)],
            }),
        ];
        for f in &forms {
            let d = f.decay();
            for _ in 0..1000 {
                let x: f64 = rng.gen_range(-200.0..200.0);
                assert!(f.eval(&[x]).norm() <= 1.01 * d.bound(&[x]), "{f:?} at {x}");
                if let Some((c0, q)) = f.small_frequency() {
                    assert!(f.eval(&[x]).norm() <= 1.01 * c0 * x.abs().powf(q) + 1e-300);
                }
            }
        }
    }
}
