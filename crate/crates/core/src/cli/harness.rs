//! The identity harness run by `sitrace properties`.
//!
//! Every check is evaluated at every point of a base grid and reported as a
//! certificate. Errors inside a check are reported as a failed certificate
//! carrying the message, so one broken check never hides the others.
//! Checks named `control:` are negative controls: they pass when the
//! underlying test correctly fails.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::RunConfig;
use crate::certificate::{Certificate, Verdict, Witness};
use crate::error::{Error, Result};
use crate::gramian::{certify_ntf, CertifyMode};
use crate::grid::Grid;
use crate::lattice::{DilationMatrix, IndexWindow};
use crate::spectra::forms::Indicator;
use crate::spectra::{
    dilate_system, parse_selector, perturb, quasi_orthogonalize, scale, GeneratorSpectrum, GeneratorSystem, Role,
};
use crate::trace::{
    check_additivity, check_dilation, check_linearity, check_modulation, check_monotone_convergence, check_monotony,
    check_periodicity, delta_vector, dimension_function, local_trace, restricted_profile, trace_by_projection,
    CertifiedSystem, ConvergenceReport, PositiveOperator, ProbeBasket,
};
use crate::wavelet::{
    characterize_ntf_wavelet, mra_consistency, scale_generators, scaling_wavelet_match, wavelet_dimension_function,
    WaveletSystem,
};
use crate::C64;

/// Window radius of the one-dimensional identity sweeps.
pub const WINDOW_1D: usize = 16;
/// Window radius of the two-dimensional identity sweeps.
pub const WINDOW_2D: usize = 4;
/// Random probes added to the window deltas.
pub const RANDOM_PROBES: usize = 32;
/// Levels of the nested chains.
pub const CHAIN_LEVELS: usize = 7;

const PERTURBED: &str = "shannon-scaling";

/// Shared state of one harness run.
pub struct Harness {
    tol: f64,
    seed: u64,
    perturb: f64,
    grid1: Grid,
    grid2: Grid,
    w1: IndexWindow,
    w2: IndexWindow,
    wide: IndexWindow,
    depth: usize,
    s_range: usize,
    pub checks: Vec<Certificate>,
    pub notes: Vec<String>,
}

fn failed(name: &str, tol: f64, e: &Error) -> Certificate {
    Certificate {
        check: name.to_string(),
        verdict: Verdict::Fail,
        tol,
        max_residual: f64::INFINITY,
        max_tail_bound: 0.0,
        points: 0,
        witness: Some(Witness {
            xi: Vec::new(),
            entry: format!("error: {e}"),
            residual: f64::INFINITY,
            tail_bound: 0.0,
            value: None,
        }),
    }
}

/// Per-point certificates merged in grid order.
fn pointwise(name: &str, grid: &Grid, f: impl Fn(&[f64]) -> Result<Certificate> + Sync) -> Result<Certificate> {
    let parts = grid.points().par_iter().map(|xi| f(xi)).collect::<Result<Vec<_>>>()?;
    Ok(Certificate::merge(name, &parts))
}

/// A pass/fail outcome as a one-point certificate.
fn outcome(name: &str, tol: f64, ok: bool, entry: String, residual: f64) -> Certificate {
    let mut c = Certificate::assemble(
        name,
        tol,
        vec![Witness {
            xi: Vec::new(),
            entry,
            residual,
            tail_bound: 0.0,
            value: None,
        }],
    );
    c.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    c
}

fn convergence_certificate(name: &str, tol: f64, r: &ConvergenceReport) -> Certificate {
    let entry = match &r.first_violation {
        Some((j, xi)) => format!("decrease after level {j} at {xi:?}"),
        None => format!("gaps {:?}", r.gaps),
    };
    let rise = r.gaps.windows(2).map(|g| (g[1] - g[0]).max(0.0)).fold(0.0, f64::max);
    outcome(name, tol, r.verdict == Verdict::Pass, entry, rise)
}

impl Harness {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let side = ((cfg.grid as f64).sqrt().round() as usize).max(1);
        Ok(Self {
            tol: cfg.tol,
            seed: cfg.seed,
            perturb: cfg.perturb,
            grid1: Grid::base(1, cfg.grid)?,
            grid2: Grid::base(2, side)?,
            w1: IndexWindow::new(1, cfg.window.min(WINDOW_1D))?,
            w2: IndexWindow::new(2, cfg.window.min(WINDOW_2D))?,
            wide: IndexWindow::new(1, cfg.window)?,
            depth: cfg.depth,
            s_range: cfg.s_range,
            checks: Vec::new(),
            notes: Vec::new(),
        })
    }

    /// Catalog selector with the optional perturbation applied to every
    /// generator named `shannon-scaling`.
    pub fn system(&self, selector: &str) -> Result<GeneratorSystem> {
        let sys = parse_selector(selector)?;
        Ok(self.perturbed(sys))
    }

    fn perturbed(&self, sys: GeneratorSystem) -> GeneratorSystem {
        if self.perturb == 0.0 {
            return sys;
        }
        sys.map(|g| {
            if g.name() == PERTURBED {
                perturb(g, self.perturb).renamed(PERTURBED)
            } else {
                g.clone()
            }
        })
    }

    fn qo_hat(&self, w: &IndexWindow) -> Result<GeneratorSystem> {
        let hat = parse_selector("bspline:2")?;
        Ok(GeneratorSystem::single(quasi_orthogonalize(&hat.generators()[0], w, 1e-8)))
    }

    fn guard(&mut self, name: &str, f: impl FnOnce(&Self) -> Result<Certificate>) {
        let mut c = match f(self) {
            Ok(c) => c,
            Err(e) => failed(name, self.tol, &e),
        };
        c.check = name.to_string();
        self.checks.push(c);
    }

    /// Certify in projection mode and record the certificate.
    fn certified(&mut self, label: &str, sys: GeneratorSystem, grid: &Grid, w: &IndexWindow) -> CertifiedSystem {
        let name = format!("ntf:{label}");
        match certify_ntf(&sys, grid, w, self.tol, CertifyMode::Projection, None) {
            Ok(mut cert) => {
                cert.check = name;
                self.checks.push(cert.clone());
                CertifiedSystem::from_certificate(sys.clone(), w, cert).unwrap_or_else(|_| {
                    self.notes.push(format!("{label}: identities evaluated without a certificate"));
                    CertifiedSystem::unchecked(sys, w)
                })
            }
            Err(e) => {
                self.checks.push(failed(&name, self.tol, &e));
                CertifiedSystem::unchecked(sys, w)
            }
        }
    }

    /// Operators of a sweep: the identity where the spectra have compact
    /// support inside the window, `P_{delta_0}`, `P_{delta_1}` and a seeded
    /// random operator supported away from the window edge.
    fn operators(&self, w: &IndexWindow, identity: bool, salt: u64) -> Result<Vec<(String, PositiveOperator)>> {
        let mut ops = Vec::new();
        if identity {
            ops.push(("identity".to_string(), PositiveOperator::identity(w)));
        }
        let zero = vec![0; w.dim()];
        let mut one = zero.clone();
        one[0] = 1;
        ops.push(("delta0".into(), PositiveOperator::delta(w, &zero)?));
        ops.push(("delta1".into(), PositiveOperator::delta(w, &one)?));
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ salt);
        let inner = w.radius() / 2;
        ops.push(("random".into(), PositiveOperator::random_psd_within(w, inner, 3, &mut rng)));
        Ok(ops)
    }

    pub fn run(mut self) -> Self {
        let tol = self.tol;
        let (g1, g2) = (self.grid1.clone(), self.grid2.clone());
        let (w1, w2) = (self.w1.clone(), self.w2.clone());

        // (label, system, grid, window, compact spectra)
        let mut sweep: Vec<(String, CertifiedSystem, Grid, IndexWindow, bool)> = Vec::new();
        let one_d = ["shannon-scaling", "meyer-scaling", "shannon-scaling+shannon-wavelet"];
        for name in one_d {
            match self.system(name) {
                Ok(sys) => {
                    let cs = self.certified(name, sys, &g1, &w1);
                    sweep.push((name.to_string(), cs, g1.clone(), w1.clone(), true));
                }
                Err(e) => self.checks.push(failed(&format!("ntf:{name}"), tol, &e)),
            }
        }
        match self.qo_hat(&w1) {
            Ok(sys) => {
                let cs = self.certified("qo(bspline:2)", sys, &g1, &w1);
                sweep.push(("qo(bspline:2)".into(), cs, g1.clone(), w1.clone(), false));
            }
            Err(e) => self.checks.push(failed("ntf:qo(bspline:2)", tol, &e)),
        }
        for name in ["tensor(shannon-scaling,shannon-scaling)", "tensor(meyer-scaling,shannon-scaling)"] {
            match self.system(name) {
                Ok(sys) => {
                    let cs = self.certified(name, sys, &g2, &w2);
                    sweep.push((name.to_string(), cs, g2.clone(), w2.clone(), true));
                }
                Err(e) => self.checks.push(failed(&format!("ntf:{name}"), tol, &e)),
            }
        }

        for (i, (label, cs, grid, w, compact)) in sweep.iter().enumerate() {
            let salt = i as u64;
            self.guard(&format!("periodicity:{label}"), |h| {
                let ops = h.operators(w, *compact, salt)?;
                let shifts: Vec<Vec<i64>> = if w.dim() == 1 {
                    vec![vec![1], vec![-2]]
                } else {
                    vec![vec![1, 0], vec![-1, 2]]
                };
                let mut parts = Vec::new();
                for (_, t) in &ops {
                    for k in &shifts {
                        parts.push(pointwise("periodicity", grid, |xi| check_periodicity(cs, t, xi, k, tol))?);
                    }
                }
                Ok(Certificate::merge("periodicity", &parts))
            });
            self.guard(&format!("linearity:{label}"), |h| {
                let ops = h.operators(w, *compact, salt)?;
                let (s, t) = (&ops[ops.len() - 1].1, &ops[0].1);
                check_linearity(cs, s, t, 0.75, 2.5, grid, tol)
            });
            self.guard(&format!("ntf-trace:{label}"), |h| {
                let ops = h.operators(w, *compact, salt)?;
                let mut parts = Vec::new();
                for (name, t) in &ops {
                    parts.push(pointwise("ntf-trace", grid, |xi| {
                        let a = local_trace(cs, t, xi)?;
                        let b = trace_by_projection(cs, t, xi)?;
                        Ok(Certificate::assemble(
                            "ntf-trace",
                            tol,
                            vec![Witness {
                                xi: xi.to_vec(),
                                entry: name.clone(),
                                residual: (a.value - b).abs(),
                                tail_bound: a.error_bar,
                                value: Some(a.value),
                            }],
                        ))
                    })?);
                }
                Ok(Certificate::merge("ntf-trace", &parts))
            });
            self.guard(&format!("modulation:{label}"), |h| {
                let ops = h.operators(w, *compact, salt)?;
                let a: Vec<f64> = if w.dim() == 1 { vec![0.7] } else { vec![0.7, -0.4] };
                let parts = ops
                    .iter()
                    .map(|(_, t)| check_modulation(cs, &a, t, grid, tol))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Certificate::merge("modulation", &parts))
            });
        }

        // dilation formula
        let dilations: Vec<(&str, DilationMatrix)> = vec![
            ("[1]", DilationMatrix::new(1, vec![1]).expect("identity")),
            ("[2]", DilationMatrix::scalar(1, 2).expect("scalar")),
            ("2I", DilationMatrix::scalar(2, 2).expect("scalar")),
            ("quincunx", DilationMatrix::quincunx()),
        ];
        for (i, (label, cs, grid, w, compact)) in sweep.iter().enumerate() {
            if label.contains('+') {
                continue;
            }
            for (mname, a) in dilations.iter().filter(|(_, a)| a.dim() == w.dim()) {
                self.guard(&format!("dilation:{label}:{mname}"), |h| {
                    let ops = h.operators(w, *compact || w.dim() == 1, i as u64)?;
                    let mut parts = Vec::new();
                    for (_, t) in &ops {
                        parts.push(pointwise("dilation", grid, |xi| check_dilation(cs, a, t, xi, tol))?);
                    }
                    Ok(Certificate::merge("dilation", &parts))
                });
            }
        }

        self.additivity(&g1, &w1);
        self.monotony(&g1, &w1, &g2, &w2);
        self.invariance(&g1, &w1);
        self.wavelets();
        self.convergence(&w1);
        self.controls(&g1, &w1);
        self
    }

    fn additivity(&mut self, grid: &Grid, w: &IndexWindow) {
        let tol = self.tol;
        for (a, b) in [("shannon-scaling", "shannon-wavelet"), ("meyer-scaling", "meyer-wavelet")] {
            self.guard(&format!("additivity:{a}+{b}"), |h| {
                let parts = [
                    CertifiedSystem::unchecked(h.system(a)?, w),
                    CertifiedSystem::unchecked(h.system(b)?, w),
                ];
                let ops = h.operators(w, true, 7)?;
                let mut certs = Vec::new();
                for (_, t) in &ops {
                    certs.push(pointwise("additivity", grid, |xi| check_additivity(&parts, t, xi, tol))?);
                }
                Ok(Certificate::merge("additivity", &certs))
            });
        }
    }

    fn monotony(&mut self, g1: &Grid, w1: &IndexWindow, g2: &Grid, w2: &IndexWindow) {
        let tol = self.tol;
        let two = DilationMatrix::scalar(1, 2).expect("scalar");
        let two2 = DilationMatrix::scalar(2, 2).expect("scalar");
        let cases: Vec<(String, &str, Option<&DilationMatrix>, &str, &Grid, &IndexWindow)> = vec![
            ("shannon-scaling<dil".into(), "shannon-scaling", Some(&two), "", g1, w1),
            ("meyer-scaling<dil".into(), "meyer-scaling", Some(&two), "", g1, w1),
            (
                "shannon-scaling<shannon-scaling+shannon-wavelet".into(),
                "shannon-scaling",
                None,
                "shannon-scaling+shannon-wavelet",
                g1,
                w1,
            ),
            (
                "tensor(shannon-scaling,shannon-scaling)<dil".into(),
                "tensor(shannon-scaling,shannon-scaling)",
                Some(&two2),
                "",
                g2,
                w2,
            ),
        ];
        for (label, small, dil, big, grid, w) in cases {
            self.guard(&format!("monotony:{label}"), |h| {
                let s = h.system(small)?;
                let b = match dil {
                    Some(a) => dilate_system(&s, a)?,
                    None => h.system(big)?,
                };
                let basket = ProbeBasket::new(w, h.seed, RANDOM_PROBES);
                check_monotony(
                    &CertifiedSystem::unchecked(s, w),
                    &CertifiedSystem::unchecked(b, w),
                    grid,
                    &basket,
                    tol,
                )
            });
        }
    }

    /// The trace does not depend on which tight frame generator spans the
    /// space: four generator sets of the Paley-Wiener space.
    fn invariance(&mut self, grid: &Grid, w: &IndexWindow) {
        let tol = self.tol;
        self.guard("ntf-invariance:paley-wiener", |h| {
            let base = h.system("shannon-scaling")?;
            let g = base.generators()[0].clone();
            let half = |lo: f64, hi: f64, name: &str| {
                GeneratorSpectrum::new(name, Arc::new(Indicator { intervals: vec![(lo, hi)] }))
            };
            let r = 0.5f64.sqrt();
            let sets = vec![
                GeneratorSystem::new(1, vec![scale(&g, C64::from_polar(1.0, 0.3))], Role::NtfGenerator)?,
                GeneratorSystem::new(1, vec![half(-PI, 0.0, "lower-half"), half(0.0, PI, "upper-half")], Role::NtfGenerator)?,
                GeneratorSystem::new(1, vec![scale(&g, C64::new(r, 0.0)), scale(&g, C64::new(0.0, r))], Role::NtfGenerator)?,
            ];
            let reference = CertifiedSystem::unchecked(base, w);
            let others: Vec<CertifiedSystem> = sets.into_iter().map(|s| CertifiedSystem::unchecked(s, w)).collect();
            let ops = h.operators(w, true, 11)?;
            let mut parts = Vec::new();
            for (name, t) in &ops {
                parts.push(pointwise("ntf-invariance", grid, |xi| {
                    let a = local_trace(&reference, t, xi)?;
                    let mut ws = Vec::new();
                    for o in &others {
                        let b = local_trace(o, t, xi)?;
                        ws.push(Witness {
                            xi: xi.to_vec(),
                            entry: format!("{name}:{}", o.system().name()),
                            residual: (a.value - b.value).abs(),
                            tail_bound: a.error_bar + b.error_bar,
                            value: Some(b.value),
                        });
                    }
                    Ok(Certificate::assemble("ntf-invariance", tol, ws))
                })?);
            }
            Ok(Certificate::merge("ntf-invariance", &parts))
        });
    }

    fn wavelet_system(&self, psi: &str) -> Result<WaveletSystem> {
        WaveletSystem::new(self.system(psi)?, DilationMatrix::scalar(1, 2)?, self.depth, true)
    }

    fn wavelets(&mut self) {
        let grid = self.grid1.clone();
        let wide = self.wide.clone();
        for (psi, phi, dim_tol) in [("shannon-wavelet", "shannon-scaling", 1e-6), ("haar-wavelet", "haar-scaling", 1e-3)] {
            self.guard(&format!("wavelet:{psi}"), |h| {
                Ok(characterize_ntf_wavelet(&h.wavelet_system(psi)?, &grid, h.s_range, 1e-7)?.certificate)
            });
            self.guard(&format!("scaling-match:{psi}"), |h| {
                Ok(scaling_wavelet_match(&h.wavelet_system(psi)?, &h.system(phi)?, &grid, h.s_range, 1e-7)?.certificate)
            });
            self.guard(&format!("mra:{psi}"), |h| {
                Ok(mra_consistency(&h.wavelet_system(psi)?, &h.system(phi)?, &grid, h.s_range, 1e-8, false)?.certificate)
            });
            self.guard(&format!("wavelet-dimension:{psi}"), |h| {
                let d = wavelet_dimension_function(&h.wavelet_system(psi)?, &grid, &wide)?;
                let t = dimension_function(&CertifiedSystem::unchecked(h.system(phi)?, &wide), &grid)?;
                let ws = (0..grid.len())
                    .map(|i| Witness {
                        xi: grid.points()[i].clone(),
                        entry: "dimension".into(),
                        residual: (d.values[i] - t.values[i]).abs(),
                        tail_bound: 0.0,
                        value: Some(d.values[i]),
                    })
                    .collect();
                let mut c = Certificate::assemble("wavelet-dimension", dim_tol, ws);
                // the gap must also sit under the stated error bars
                let covered = (0..grid.len())
                    .all(|i| (d.values[i] - t.values[i]).abs() <= d.errors[i] + t.errors[i] + 1e-12);
                if !covered {
                    c.verdict = Verdict::Fail;
                }
                c.max_tail_bound = (0..grid.len()).map(|i| d.errors[i] + t.errors[i]).fold(0.0, f64::max);
                Ok(c)
            });
        }
    }

    /// Nested chains: `D_{2^j}` of the Paley-Wiener space and the partial
    /// sums of the Shannon wavelet scale spaces below level 0.
    fn convergence(&mut self, w: &IndexWindow) {
        let tol = self.tol;
        let wide = Grid::cube(1, -2.0 * PI, 2.0 * PI, self.grid1.per_axis()).expect("grid");
        let base = self.grid1.clone();
        self.guard("convergence:shannon-mra", |h| {
            let v0 = h.system("shannon-scaling")?;
            let chain = shannon_chain(&v0, w, CHAIN_LEVELS)?;
            let f = delta_vector(w, &[0])?;
            let r = check_monotone_convergence(&chain, &f, &wide, |_| 1.0, tol)?;
            Ok(convergence_certificate("convergence", tol, &r))
        });
        self.guard("convergence:shannon-scale-sums", |h| {
            let ws = h.wavelet_system("shannon-wavelet")?;
            let chain = scale_sum_chain(&ws, w, CHAIN_LEVELS)?;
            let f = delta_vector(w, &[0])?;
            let r = check_monotone_convergence(&chain, &f, &base, |xi| if xi[0].abs() < PI { 1.0 } else { 0.0 }, tol)?;
            Ok(convergence_certificate("convergence", tol, &r))
        });
    }

    fn controls(&mut self, grid: &Grid, w: &IndexWindow) {
        let tol = self.tol;
        self.guard("control:hat-certification", |_| {
            let hat = parse_selector("bspline:2")?;
            let c = certify_ntf(&hat, grid, w, tol, CertifyMode::Projection, None)?;
            let value = c.witness.as_ref().and_then(|w| w.value).unwrap_or(f64::NAN);
            let gap = (value - 1.0 / 3.0).abs();
            Ok(outcome(
                "control",
                1e-3,
                c.verdict == Verdict::Fail && gap <= 1e-3,
                format!("verdict {} witness {value:?}", c.verdict.as_str()),
                gap,
            ))
        });
        self.guard("control:scaling-as-wavelet", |h| {
            let ws = h.wavelet_system("shannon-scaling")?;
            let r = characterize_ntf_wavelet(&ws, grid, h.s_range, 1e-7)?;
            let entry = r.certificate.witness.as_ref().map(|w| w.entry.clone()).unwrap_or_default();
            Ok(outcome(
                "control",
                tol,
                r.certificate.verdict == Verdict::Fail && entry == "5.2.1",
                format!("verdict {} at {entry}", r.certificate.verdict.as_str()),
                0.0,
            ))
        });
        self.guard("control:mra-sign-flip", |h| {
            let ws = h.wavelet_system("haar-wavelet")?;
            let r = mra_consistency(&ws, &h.system("haar-scaling")?, grid, h.s_range, 1e-8, true)?;
            Ok(outcome(
                "control",
                tol,
                r.certificate.verdict == Verdict::Fail,
                format!("verdict {}", r.certificate.verdict.as_str()),
                0.0,
            ))
        });
        self.guard("control:injectivity", |h| {
            let f = delta_vector(w, &[0])?;
            let a = restricted_profile(&CertifiedSystem::unchecked(h.system("shannon-scaling")?, w), &f, grid)?;
            let b = restricted_profile(&CertifiedSystem::unchecked(h.system("shannon-wavelet")?, w), &f, grid)?;
            let gap = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            Ok(outcome("control", tol, gap > tol, format!("max trace gap {gap:?}"), gap))
        });
    }
}

/// `V_j = D_{2^j} V_0` for `j = 0..levels`.
pub fn shannon_chain(v0: &GeneratorSystem, w: &IndexWindow, levels: usize) -> Result<Vec<CertifiedSystem>> {
    (0..levels)
        .map(|j| {
            let sys = if j == 0 {
                v0.clone()
            } else {
                dilate_system(v0, &DilationMatrix::scalar(1, 1 << j)?)?
            };
            Ok(CertifiedSystem::unchecked(sys, w))
        })
        .collect()
}

/// Sums of the scale spaces `W_{-1} + ... + W_{-j}` for `j = 1..=levels`.
pub fn scale_sum_chain(ws: &WaveletSystem, w: &IndexWindow, levels: usize) -> Result<Vec<CertifiedSystem>> {
    (1..=levels)
        .map(|j| Ok(CertifiedSystem::unchecked(scale_generators(ws, j)?, w)))
        .collect()
}

/// Run every check of the harness.
pub fn run_properties(cfg: &RunConfig) -> Result<(Vec<Certificate>, Vec<String>)> {
    let h = Harness::new(cfg)?.run();
    Ok((h.checks, h.notes))
}
