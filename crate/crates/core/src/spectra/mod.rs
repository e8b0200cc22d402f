//! Generator systems given by Fourier-side closed forms, their fibers and
//! periodizations, and the operations that build new systems from old ones.
//!
//! Convention: `f^(xi) = int f(x) e^{-i <x, xi>} dx`.

mod catalog;
pub mod forms;
pub mod piecewise;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::lattice::{DilationMatrix, IndexWindow};

pub use catalog::{catalog_get, catalog_names, parse_selector, parse_selector_with};
pub use forms::{sinc, Decay, SpectralForm};

/// A named spectrum.
#[derive(Clone)]
pub struct GeneratorSpectrum {
    name: String,
    form: Arc<dyn SpectralForm>,
}

impl fmt::Debug for GeneratorSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratorSpectrum")
            .field("name", &self.name)
            .field("note", &self.form.note())
            .finish()
    }
}

impl GeneratorSpectrum {
    pub fn new(name: impl Into<String>, form: Arc<dyn SpectralForm>) -> Self {
        Self {
            name: name.into(),
            form,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn form(&self) -> &Arc<dyn SpectralForm> {
        &self.form
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    pub fn eval(&self, xi: &[f64]) -> C64 {
        self.form.eval(xi)
    }

    pub fn decay(&self) -> Decay {
        self.form.decay()
    }

    pub fn note(&self) -> String {
        self.form.note()
    }

    /// Same spectrum under a different name.
    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            form: self.form.clone(),
        }
    }
}

/// What a system is claimed to be. Metadata only; nothing trusts it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    NtfGenerator,
    Bessel,
    Frame,
    Unverified,
}

#[derive(Debug, Clone)]
pub struct GeneratorSystem {
    generators: Vec<GeneratorSpectrum>,
    dim: usize,
    role: Role,
}

impl GeneratorSystem {
    pub fn new(dim: usize, generators: Vec<GeneratorSpectrum>, role: Role) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("system dimension must be positive".into()));
        }
        if let Some(g) = generators.iter().find(|g| g.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: g.dim(),
            });
        }
        Ok(Self {
            generators,
            dim,
            role,
        })
    }

    pub fn single(g: GeneratorSpectrum) -> Self {
        let dim = g.dim();
        Self {
            generators: vec![g],
            dim,
            role: Role::Unverified,
        }
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            generators: Vec::new(),
            dim,
            role: Role::Unverified,
        }
    }

    pub fn generators(&self) -> &[GeneratorSpectrum] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Generator names joined with `+`.
    pub fn name(&self) -> String {
        if self.generators.is_empty() {
            return "empty".into();
        }
        let names: Vec<&str> = self.generators.iter().map(|g| g.name()).collect();
        names.join("+")
    }

    /// The system whose generators are those of both.
    pub fn union(&self, other: &GeneratorSystem) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut generators = self.generators.clone();
        generators.extend(other.generators.iter().cloned());
        Ok(Self {
            generators,
            dim: self.dim,
            role: Role::Unverified,
        })
    }

    pub fn map(&self, f: impl Fn(&GeneratorSpectrum) -> GeneratorSpectrum) -> Self {
        Self {
            generators: self.generators.iter().map(f).collect(),
            dim: self.dim,
            role: Role::Unverified,
        }
    }
}

/// Windowed fiber `(g^(xi + 2 pi k))_{k in W}` with a bound on the mass
/// outside the window.
#[derive(Debug, Clone)]
pub struct FiberVector {
    pub window: IndexWindow,
    pub values: Vec<C64>,
    pub tail_bound: f64,
}

impl FiberVector {
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub fn fiber(g: &GeneratorSpectrum, xi: &[f64], w: &IndexWindow) -> Result<FiberVector> {
    check_dim(g.dim(), xi.len())?;
    check_dim(g.dim(), w.dim())?;
    Ok(FiberVector {
        window: w.clone(),
        values: g.form.fiber_values(xi, w),
        tail_bound: g.form.tail(xi, w.radius()),
    })
}

/// A nonnegative estimate with its error bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error_bar: f64,
}

/// `sum_k |g^(xi + 2 pi k)|^2` over the window; the tail is the error bar.
pub fn periodization(g: &GeneratorSpectrum, xi: &[f64], w: &IndexWindow) -> Result<Estimate> {
    let f = fiber(g, xi, w)?;
    Ok(Estimate {
        value: f.norm_sqr(),
        error_bar: f.tail_bound,
    })
}

/// `g / sqrt(Per |g|^2)` where the windowed periodization exceeds `tol`,
/// zero elsewhere.
pub fn quasi_orthogonalize(g: &GeneratorSpectrum, w: &IndexWindow, tol: f64) -> GeneratorSpectrum {
    let form = forms::QuasiOrthogonal {
        inner: g.form.clone(),
        window: w.clone(),
        tol,
    };
    GeneratorSpectrum::new(format!("qo({})", g.name), Arc::new(form))
}

/// Grid points whose periodization lies in `[tol, 10 tol]`, where the
/// zero/nonzero split of [`quasi_orthogonalize`] is numerically ambiguous.
pub fn ambiguous_points(g: &GeneratorSpectrum, grid: &Grid, w: &IndexWindow, tol: f64) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for xi in grid.points() {
        let p = periodization(g, xi, w)?.value;
        if (tol..=10.0 * tol).contains(&p) {
            out.push(xi.clone());
        }
    }
    Ok(out)
}

/// Spectrum of `e^{i <a, x>} f(x)`, i.e. `xi -> g^(xi - a)`.
pub fn modulate(g: &GeneratorSpectrum, a: &[f64]) -> Result<GeneratorSpectrum> {
    check_dim(g.dim(), a.len())?;
    let form = forms::Modulated {
        inner: g.form.clone(),
        shift: a.to_vec(),
    };
    Ok(GeneratorSpectrum::new(
        format!("mod({},{:?})", g.name, a),
        Arc::new(form),
    ))
}

pub fn modulate_system(sys: &GeneratorSystem, a: &[f64]) -> Result<GeneratorSystem> {
    let gens = sys
        .generators
        .iter()
        .map(|g| modulate(g, a))
        .collect::<Result<Vec<_>>>()?;
    GeneratorSystem::new(sys.dim, gens, Role::Unverified)
}

/// `u g` for a complex constant.
pub fn scale(g: &GeneratorSpectrum, u: C64) -> GeneratorSpectrum {
    let form = forms::Scaled {
        inner: g.form.clone(),
        factor: u,
    };
    GeneratorSpectrum::new(format!("{}*{}", g.name, u), Arc::new(form))
}

/// `g (1 + eps sin(sqrt 2 xi_1 + 1/2))`.
pub fn perturb(g: &GeneratorSpectrum, eps: f64) -> GeneratorSpectrum {
    let form = forms::Perturbed {
        inner: g.form.clone(),
        eps,
    };
    GeneratorSpectrum::new(format!("perturbed({})", g.name), Arc::new(form))
}

/// `scale * g(M xi) e^{-i <M xi, phase>}` with `M` row-major.
pub fn dilate(
    g: &GeneratorSpectrum,
    matrix: Vec<f64>,
    scale: f64,
    phase: Option<Vec<f64>>,
    name: impl Into<String>,
) -> Result<GeneratorSpectrum> {
    check_dim(g.dim() * g.dim(), matrix.len())?;
    let form = forms::Dilated {
        inner: g.form.clone(),
        matrix,
        scale,
        phase,
    };
    Ok(GeneratorSpectrum::new(name, Arc::new(form)))
}

/// Real matrix `((A^T)^{-1})^j` for integer `j` (negative powers invert).
pub fn dual_power(a: &DilationMatrix, j: i32) -> Result<Vec<f64>> {
    let n = a.dim();
    let at = nalgebra::DMatrix::from_row_slice(n, n, &a.transpose().to_f64());
    let inv = at.clone().try_inverse().ok_or(Error::SingularMatrix)?;
    let base = if j >= 0 { at } else { inv };
    let mut m = nalgebra::DMatrix::<f64>::identity(n, n);
    for _ in 0..j.unsigned_abs() {
        m = &m * &base;
    }
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            out[r * n + c] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Generators of `D_A V`: for `l` in representatives of `Z^n / A Z^n`,
/// `xi -> |det A|^{-1/2} g((A^T)^{-1} xi) e^{-i <(A^T)^{-1} xi, l>}`.
pub fn dilate_system(sys: &GeneratorSystem, a: &DilationMatrix) -> Result<GeneratorSystem> {
    check_dim(sys.dim, a.dim())?;
    let inv = dual_power(a, -1)?;
    // representatives of Z^n / A Z^n are cosets of the transpose's dual lattice
    let reps = crate::lattice::coset_representatives(&a.transpose())?.representatives;
    let s = (a.index() as f64).sqrt().recip();
    let mut gens = Vec::new();
    for g in &sys.generators {
        for l in &reps {
            let phase: Vec<f64> = l.iter().map(|&v| v as f64).collect();
            gens.push(dilate(
                g,
                inv.clone(),
                s,
                Some(phase),
                format!("dil({},{:?})", g.name, l),
            )?);
        }
    }
    GeneratorSystem::new(sys.dim, gens, Role::Unverified)
}

/// `(2 pi)^{-n} int_{[-pi,pi]^n} Per |g|^2` by midpoint quadrature.
pub fn plancherel_mass(g: &GeneratorSpectrum, grid: &Grid, w: &IndexWindow) -> Result<f64> {
    let mut acc = 0.0;
    for xi in grid.points() {
        acc += periodization(g, xi, w)?.value;
    }
    Ok(acc * grid.cell_volume() / (2.0 * PI).powi(grid.dim() as i32))
}
