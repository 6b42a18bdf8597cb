use proptest::prelude::*;

use pspec_core::gallery::{davies_ho, hager_model, jordan_block};
use pspec_core::lab::{draw_rng, gaussian_matrix_from, sample_gaussian_matrix};
use pspec_core::linalg::{smallest_singular_value, ResolventEvaluator};
use pspec_core::pseudospectrum::{contours, region, scan, scan_matrix, Fingerprint};
use pspec_core::quasimode::jordan_quasimode;
use pspec_core::symbol::{iterated_bracket, sublevel_box, volume_v_z, Part};
use pspec_core::{Complex64, ComplexGrid, ComplexMatrix, PhaseSpacePoint, SchurForm, SigmaMinField, SymbolModel};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| c(a, b))
}

fn fp() -> Fingerprint {
    Fingerprint { model: "test".into(), h: 1.0, n: 1 }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn sigma_min_is_unitarily_invariant(seed in 0u64..1000, z in complex()) {
        let a = sample_gaussian_matrix(20, seed).unwrap();
        let u = SchurForm::new(&sample_gaussian_matrix(20, seed + 7919).unwrap()).unwrap().unitary().clone();
        let b = &(&u * &a) * &u.adjoint();
        let (s1, s2) = (smallest_singular_value(&a.shifted(z)).unwrap(), smallest_singular_value(&b.shifted(z)).unwrap());
        prop_assert!((s1 - s2).abs() <= 1e-10 * (1.0 + s1), "{s1} vs {s2}");
    }

    #[test]
    fn schur_path_matches_direct_svd(seed in 0u64..1000, z in complex()) {
        let a = sample_gaussian_matrix(50, seed).unwrap();
        let eval = ResolventEvaluator::new(&a).unwrap();
        let fast = eval.sigma_min(z).unwrap();
        let direct = smallest_singular_value(&a.shifted(z)).unwrap();
        prop_assert!((fast - direct).abs() <= 1e-8 * direct.max(1e-300) + 1e-14, "{fast} vs {direct}");
    }

    #[test]
    fn banded_path_matches_direct_svd(h in 0.05..0.5f64, z in (0.0..3.0f64, -0.5..3.0f64)) {
        let op = davies_ho(h, 60).unwrap();
        let z = c(z.0, z.1);
        let fast = op.evaluator().unwrap().sigma_min(z).unwrap();
        let direct = smallest_singular_value(&op.matrix.shifted(z)).unwrap();
        prop_assert!((fast - direct).abs() <= 1e-8 * direct + 1e-14, "{fast} vs {direct}");
    }

    #[test]
    fn brackets_are_antisymmetric(x in -2.0..2.0f64, xi in -2.0..2.0f64) {
        let rho = PhaseSpacePoint::new(x, xi);
        for model in [SymbolModel::Harmonic, SymbolModel::Davies, SymbolModel::Hager] {
            let ab = iterated_bracket(model, &[Part::Re, Part::Im], rho).unwrap();
            let ba = iterated_bracket(model, &[Part::Im, Part::Re], rho).unwrap();
            prop_assert!((ab + ba).abs() < 1e-12);
            prop_assert_eq!(iterated_bracket(model, &[Part::Re, Part::Re], rho).unwrap(), 0.0);
        }
    }

    #[test]
    fn regions_are_nested(seed in 0u64..1000, e1 in -6.0..0.0f64, gap in 0.0..3.0f64) {
        let a = sample_gaussian_matrix(8, seed).unwrap();
        let grid = ComplexGrid::new(-3.0, 3.0, -3.0, 3.0, 9, 9).unwrap();
        let field = scan_matrix(&a, fp(), &grid, 1).unwrap();
        let (small, large) = (region(&field, 10f64.powf(e1)), region(&field, 10f64.powf(e1 + gap)));
        prop_assert!(small.iter().zip(&large).all(|(s, l)| !*s || *l));
    }

    #[test]
    fn affine_fields_contour_exactly(a in -2.0..2.0f64, b in -2.0..2.0f64, level in 0.5..4.5f64) {
        prop_assume!(a.abs() + b.abs() > 0.1);
        let grid = ComplexGrid::new(-1.0, 1.0, -1.0, 1.0, 13, 11).unwrap();
        let f = |z: Complex64| a * z.re + b * z.im + 5.0;
        let mut values = vec![0.0; grid.len()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values[grid.index(i, j)] = f(grid.node(i, j));
            }
        }
        let field = SigmaMinField::from_values(grid, values, fp()).unwrap();
        let set = contours(&field, &[level]).unwrap();
        for line in &set.levels[0].polylines {
            prop_assert!(!line.closed);
            for p in &line.points {
                prop_assert!((f(*p) - level).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sublevel_volumes_grow_with_t(re in 0.2..2.0f64, im in 0.2..2.0f64, t in 0.01..0.5f64) {
        let z = c(re, im);
        let bx = sublevel_box(SymbolModel::Davies, z, 2.0 * t);
        let v1 = volume_v_z(SymbolModel::Davies, z, t, &bx, 201).unwrap();
        let v2 = volume_v_z(SymbolModel::Davies, z, 2.0 * t, &bx, 201).unwrap();
        prop_assert!(v1 <= v2);
    }

    #[test]
    fn jordan_residual_is_a_power(n in 2usize..40, r in 0.0..0.95f64, th in 0.0..6.28f64) {
        let z = Complex64::from_polar(r, th);
        let q = jordan_quasimode(n, z).unwrap();
        let exact = r.powi(n as i32);
        prop_assert!((q.residual - exact).abs() <= 1e-12 * (exact + f64::MIN_POSITIVE) + 1e-300);
    }

    #[test]
    fn draws_are_reproducible(seed in any::<u64>(), draw in 0u64..1000) {
        let a = gaussian_matrix_from(4, &mut draw_rng(seed, draw));
        let b = gaussian_matrix_from(4, &mut draw_rng(seed, draw));
        prop_assert_eq!(a, b);
    }
}

#[test]
fn scans_do_not_depend_on_worker_count() {
    let grid = ComplexGrid::new(-1.5, 1.5, -1.5, 1.5, 17, 17).unwrap();
    for op in [jordan_block(15).unwrap(), hager_model(4.0 / 31.0, 31).unwrap(), davies_ho(0.2, 40).unwrap()] {
        let a = scan(&op, &grid, 1).unwrap();
        let b = scan(&op, &grid, 3).unwrap();
        let bits = |f: &SigmaMinField| f.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
}

#[test]
fn normal_matrices_give_distance_to_spectrum() {
    let diag: Vec<Complex64> = (0..10).map(|k| Complex64::from_polar(1.0 + 0.1 * k as f64, 0.7 * k as f64)).collect();
    let d = ComplexMatrix::from_diagonal(&diag);
    let u = SchurForm::new(&sample_gaussian_matrix(10, 3).unwrap()).unwrap().unitary().clone();
    let p = &(&u * &d) * &u.adjoint();
    let eval = ResolventEvaluator::new(&p).unwrap();
    for z in [c(0.0, 0.0), c(1.0, 1.0), c(-2.0, 0.3)] {
        let dist = diag.iter().map(|l| (l - z).norm()).fold(f64::INFINITY, f64::min);
        assert!((eval.sigma_min(z).unwrap() - dist).abs() < 1e-10);
    }
}
