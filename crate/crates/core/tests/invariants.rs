use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sitrace::gramian::{dual_gramian, gramian, range_projection};
use sitrace::lattice::{in_sublattice, DilationMatrix, IndexWindow};
use sitrace::spectra::{fiber, modulate, parse_selector, periodization, quasi_orthogonalize};
use sitrace::trace::{local_trace, restricted_trace, CertifiedSystem, PositiveOperator};
use sitrace::wavelet::{calibration_sum, WaveletSystem};
use sitrace::C64;

const ONE_D: &[&str] = &[
    "shannon-scaling",
    "shannon-wavelet",
    "haar-scaling",
    "haar-wavelet",
    "bspline:2",
    "bspline:3",
    "meyer-scaling",
    "meyer-wavelet",
];

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(48)
}

fn unit_vector(len: usize, seed: u64) -> Vec<C64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<C64> = (0..len)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn fibers_shift_with_the_base_point(name in prop::sample::select(ONE_D), xi in -3.1f64..3.1, s in -2i64..=2) {
        let sys = parse_selector(name).unwrap();
        let g = &sys.generators()[0];
        let w = IndexWindow::new(1, 8).unwrap();
        let a = fiber(g, &[xi + 2.0 * PI * s as f64], &w).unwrap();
        let b = fiber(g, &[xi], &w).unwrap();
        for (pos, k) in w.indices().iter().enumerate() {
            if let Some(q) = w.position(&[k[0] + s]) {
                let d = (a.values[pos] - b.values[q]).norm();
                prop_assert!(d <= 1e-12, "k = {k:?}: {d:e}");
            }
        }
    }

    #[test]
    fn modulation_moves_the_argument(name in prop::sample::select(ONE_D), xi in -3.1f64..3.1, a in -5.0f64..5.0) {
        let sys = parse_selector(name).unwrap();
        let g = &sys.generators()[0];
        let w = IndexWindow::new(1, 6).unwrap();
        let m = fiber(&modulate(g, &[a]).unwrap(), &[xi], &w).unwrap();
        for (pos, k) in w.indices().iter().enumerate() {
            let direct = g.eval(&[xi + 2.0 * PI * k[0] as f64 - a]);
            prop_assert!((m.values[pos] - direct).norm() <= 1e-12);
        }
    }

    #[test]
    fn gramian_and_dual_gramian_share_the_trace(
        sel in prop::sample::select(&[
            "bspline:2+haar-wavelet",
            "meyer-scaling+meyer-wavelet",
            "shannon-scaling+bspline:3",
            "tensor(bspline:2,meyer-scaling)",
            "tensor(shannon-scaling,haar-wavelet)",
        ][..]),
        x in -PI..PI,
        y in -PI..PI,
    ) {
        let sys = parse_selector(sel).unwrap();
        let xi: Vec<f64> = [x, y][..sys.dim()].to_vec();
        let w = IndexWindow::new(sys.dim(), if sys.dim() == 1 { 16 } else { 4 }).unwrap();
        let g = gramian(&sys, &xi, &w).unwrap();
        let d = dual_gramian(&sys, &xi, &w).unwrap();
        let gap = (g.matrix.trace() - d.matrix.trace()).norm();
        prop_assert!(gap <= 1e-12 * g.matrix.trace().norm().max(1.0) + g.tail_bound + d.tail_bound);
    }

    #[test]
    fn projection_never_increases_energy(
        sel in prop::sample::select(&["bspline:2", "meyer-scaling+haar-wavelet", "shannon-wavelet"][..]),
        xi in -PI..PI,
        seed in any::<u64>(),
    ) {
        let sys = parse_selector(sel).unwrap();
        let w = IndexWindow::new(1, 8).unwrap();
        let p = range_projection(&sys, &[xi], &w, 1e-8).unwrap();
        let f = unit_vector(w.len(), seed);
        let pf: Vec<C64> = (0..w.len()).map(|r| (0..w.len()).map(|c| p.matrix[(r, c)] * f[c]).sum()).collect();
        let quad: f64 = pf.iter().zip(&f).map(|(a, b)| (a * b.conj()).re).sum();
        let defect: f64 = pf.iter().zip(&f).map(|(a, b)| (a - b).norm_sqr()).sum();
        prop_assert!(quad <= 1.0 + 1e-12);
        // Pythagoras: ||f||^2 - <P f, f> = ||P f - f||^2
        prop_assert!((1.0 - quad - defect).abs() <= 1e-10);
    }

    #[test]
    fn local_trace_is_linear_and_bounded(xi in -PI..PI, seed in any::<u64>(), k in -3i64..=3) {
        let w = IndexWindow::new(1, 10).unwrap();
        let cs = CertifiedSystem::unchecked(parse_selector("meyer-scaling+meyer-wavelet").unwrap(), &w);
        let t = PositiveOperator::random_psd(&w, 3, &mut ChaCha8Rng::seed_from_u64(seed));
        let s = PositiveOperator::delta(&w, &[k]).unwrap();
        let tau = |op: &PositiveOperator| local_trace(&cs, op, &[xi]).unwrap().value;
        let (a, b) = (tau(&t), tau(&s));
        prop_assert!((tau(&t.add(&s).unwrap()) - a - b).abs() <= 1e-10 * (1.0 + a + b));
        for l in [0.0, 0.5, 2.0] {
            prop_assert!((tau(&t.scale(l).unwrap()) - l * a).abs() <= 1e-10 * (1.0 + a));
        }

        let f = unit_vector(w.len(), seed ^ 1);
        let r = restricted_trace(&cs, &f, &[xi]).unwrap();
        let i = C64::new(0.0, 1.0);
        let rotated: Vec<C64> = f.iter().map(|v| v * i).collect();
        let ri = restricted_trace(&cs, &rotated, &[xi]).unwrap();
        prop_assert!((ri.value - r.value).abs() <= 1e-12);
        prop_assert!(r.value >= 0.0 && r.value <= 1.0 + 1e-12);
    }

    #[test]
    fn quasi_orthogonal_periodization_is_binary(order in 1usize..=4, xi in -PI..PI) {
        let sys = parse_selector(&format!("bspline:{order}")).unwrap();
        let g = &sys.generators()[0];
        let w = IndexWindow::new(1, 32).unwrap();
        let tol = 1e-12;
        let before = periodization(g, &[xi], &w).unwrap().value;
        let after = periodization(&quasi_orthogonalize(g, &w, tol), &[xi], &w).unwrap().value;
        if before > 10.0 * tol {
            prop_assert!((after - 1.0).abs() <= 1e-9, "{after}");
        }
    }

    #[test]
    fn calibration_telescopes_under_dilation(
        name in prop::sample::select(&["haar-wavelet", "meyer-wavelet", "shannon-wavelet"][..]),
        xi in 0.01f64..PI,
        depth in 4usize..30,
    ) {
        let g = parse_selector(name).unwrap();
        let psi = g.generators()[0].clone();
        let ws = WaveletSystem::new(g, DilationMatrix::scalar(1, 2).unwrap(), depth, true).unwrap();
        let a = calibration_sum(&ws, &[xi]).unwrap();
        let b = calibration_sum(&ws, &[2.0 * xi]).unwrap();
        let j = depth as i32;
        let boundary = psi.eval(&[2f64.powi(j + 1) * xi]).norm_sqr() - psi.eval(&[2f64.powi(-j) * xi]).norm_sqr();
        prop_assert!((b.value - a.value - boundary).abs() <= 1e-12);
        prop_assert!((b.value - a.value).abs() <= a.error_bar + b.error_bar + 1e-12);
    }

    #[test]
    fn sublattice_membership_matches_search(
        m in prop::array::uniform4(-3i64..=3),
        k in prop::array::uniform2(-4i64..=4),
    ) {
        let det = m[0] * m[3] - m[1] * m[2];
        prop_assume!(det != 0);
        let a = match DilationMatrix::new(2, m.to_vec()) {
            Ok(a) => a,
            Err(_) => return Ok(()),
        };
        // solutions of A^T x = k satisfy |x|_inf <= |adj| |k| / |det| <= 24
        let mut found = false;
        for x0 in -24i64..=24 {
            for x1 in -24i64..=24 {
                if m[0] * x0 + m[2] * x1 == k[0] && m[1] * x0 + m[3] * x1 == k[1] {
                    found = true;
                }
            }
        }
        prop_assert_eq!(in_sublattice(&k, &a).unwrap(), found);
    }
}
