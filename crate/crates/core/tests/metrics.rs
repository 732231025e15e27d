mod common;

use common::*;
use disco_core::domains::{bounding_box, make_row_domain, sample, BoundingBox, DomainSpec};
use disco_core::metrics::*;
use disco_core::models::{build_variant, roundtrip, NetDims, VariantKind};
use disco_core::numgrad::mse_distance;
use disco_core::{Matrix, Rng};

fn one_hot_rows(rows: usize, cols: usize, target: impl Fn(usize) -> usize) -> AssignmentMatrix {
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        m[(i, target(i))] = 1.0;
    }
    AssignmentMatrix::new(m, 1000).unwrap()
}

#[test]
fn exact_placement_gives_identity_pattern() {
    let a = make_row_domain(5, [1.0, 0.5], [1.0, 0.0], 1e-12).unwrap();
    let b = make_row_domain(5, [1.0, 2.5], [1.0, 0.0], 0.1).unwrap();
    let shift = affine_generator([[1.0, 0.0], [0.0, 1.0]], [0.0, 2.0]);
    let am = assignment_matrix(&shift, &a, &b, 50, &mut Rng::new(1)).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            assert_eq!(am.get(i, j), if i == j { 1.0 } else { 0.0 });
        }
    }
    let cov = coverage(&am, 0.05).unwrap();
    assert_eq!((cov.covered_modes, cov.collapse_count), (5, 0));
}

#[test]
fn constant_generator_collapses_onto_one_mode() {
    let a = DomainSpec::default_a().build().unwrap();
    let b = DomainSpec::default_b().build().unwrap();
    let g = constant_generator(b.modes()[3].mean);
    let am = assignment_matrix(&g, &a, &b, 100, &mut Rng::new(2)).unwrap();
    for i in 0..5 {
        for j in 0..10 {
            assert_eq!(am.get(i, j), if j == 3 { 1.0 } else { 0.0 });
        }
    }
    assert_eq!(am.samples_per_mode(), 100);
}

#[test]
fn coverage_fixtures() {
    let diag = one_hot_rows(5, 10, |i| i);
    let c = coverage(&diag, 0.05).unwrap();
    assert_eq!(c.covered_modes, 5);
    assert_eq!(c.coverage_fraction, 0.5);
    assert_eq!(c.collapse_count, 0);

    let collapsed = one_hot_rows(5, 10, |_| 3);
    let c = coverage(&collapsed, 0.05).unwrap();
    assert_eq!(c.covered_modes, 1);
    assert_eq!(c.coverage_fraction, 0.1);
    assert_eq!(c.collapse_count, 4);

    let uniform = AssignmentMatrix::new(Matrix::filled(5, 10, 0.1), 1000).unwrap();
    let c = coverage(&uniform, 0.05).unwrap();
    assert_eq!(c.covered_modes, 10);
    assert_eq!(c.collapse_count, 4);
    assert_eq!(uniform.row_argmax(), vec![0; 5]);
    assert_eq!(c.tau, 0.05);
    assert_eq!(c.samples_per_mode, 1000);
}

#[test]
fn coverage_rejects_bad_tau_and_matrices() {
    let diag = one_hot_rows(2, 2, |i| i);
    assert!(coverage(&diag, 0.0).is_err());
    assert!(coverage(&diag, 1.0).is_err());
    assert!(AssignmentMatrix::new(Matrix::filled(2, 2, 0.4), 10).is_err());
    assert!(AssignmentMatrix::new(Matrix::from_rows(&[[1.5, -0.5]]).unwrap(), 10).is_err());
}

#[test]
fn rows_sum_to_one_for_trained_like_generators() {
    let a = DomainSpec::default_a().build().unwrap();
    let b = DomainSpec::default_b().build().unwrap();
    for seed in 0..3 {
        let set = build_variant(
            VariantKind::DiscoGan,
            &NetDims::default(),
            &mut Rng::new(seed),
        )
        .unwrap();
        let am = assignment_matrix(&set.g_ab, &a, &b, 200, &mut Rng::new(seed)).unwrap();
        for i in 0..am.source_modes() {
            let s: f64 = am.entries().row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn roundtrip_rmse_conventions() {
    let a = DomainSpec::default_a().build().unwrap();
    let id = identity_generator();
    assert_eq!(
        roundtrip_rmse(&id, &id, &a, 500, &mut Rng::new(3)).unwrap(),
        0.0
    );

    let g = affine_generator([[1.0, 0.2], [0.0, 0.9]], [0.3, 0.1]);
    let h = affine_generator([[0.8, 0.0], [0.1, 1.1]], [0.0, -0.2]);
    let rmse = roundtrip_rmse(&g, &h, &a, 400, &mut Rng::new(4)).unwrap();
    // Same draws, entry-mean convention.
    let x = sample(&a, 400, &mut Rng::new(4)).points;
    let (_, rec) = roundtrip(&g, &h, &x).unwrap();
    let via_mse = (2.0 * mse_distance(&x, &rec).unwrap()).sqrt();
    assert!((rmse - via_mse).abs() < 1e-12);
    assert!(rmse > 0.0);
}

#[test]
fn landscape_fixtures() {
    let bbox = BoundingBox {
        min: [-1.0, 2.0],
        max: [3.0, 5.0],
    };
    let flat = landscape(&half_discriminator(), bbox, 7, 4).unwrap();
    assert!(flat.values.iter().all(|&v| v == 0.5));
    assert_eq!(flat.values.len(), 28);

    let d = linear_discriminator([0.7, -0.3], 0.2);
    let g = landscape(&d, bbox, 2, 2).unwrap();
    let corners = [[-1.0, 2.0], [3.0, 2.0], [-1.0, 5.0], [3.0, 5.0]];
    for (k, c) in corners.iter().enumerate() {
        let (i, j) = (k % 2, k / 2);
        assert_eq!(g.point(i, j), *c);
        let direct = 1.0 / (1.0 + (-(0.7 * c[0] - 0.3 * c[1] + 0.2f64)).exp());
        assert!((g.value(i, j) - direct).abs() < 1e-15);
    }
    let fine = landscape(&d, bbox, 9, 5).unwrap();
    assert_eq!(fine.point(8, 4), [3.0, 5.0]);
    assert!((fine.value(8, 4) - g.value(1, 1)).abs() < 1e-15);
    assert!(landscape(&d, bbox, 1, 5).is_err());
}

#[test]
fn evaluation_bundle_follows_variant_structure() {
    let a = DomainSpec::default_a().build().unwrap();
    let b = DomainSpec::default_b().build().unwrap();
    let eval = EvalConfig {
        samples_per_mode: 50,
        rmse_samples: 50,
        landscape_nx: 5,
        landscape_ny: 4,
        ..EvalConfig::default()
    };
    let dims = NetDims::default();

    let std_set = build_variant(VariantKind::StandardGan, &dims, &mut Rng::new(5)).unwrap();
    let m = evaluate_run(&std_set, &a, &b, &eval).unwrap();
    assert!(m.b_to_a.is_none() && m.coverage_b_to_a.is_none());
    assert!(m.rmse_aba.is_none() && m.rmse_bab.is_none() && m.landscape_a.is_none());

    let disco = build_variant(VariantKind::DiscoGan, &dims, &mut Rng::new(5)).unwrap();
    let m = evaluate_run(&disco, &a, &b, &eval).unwrap();
    assert_eq!(m.b_to_a.as_ref().unwrap().source_modes(), 10);
    assert!(m.rmse_aba.is_some() && m.rmse_bab.is_some());
    assert!(m.landscape_a.is_some());
    assert_eq!(m.landscape_b.bbox, bounding_box(&b, 5.0));
    assert!(m.landscape_b.values.iter().all(|&v| v > 0.0 && v < 1.0));
    assert_eq!(m, evaluate_run(&disco, &a, &b, &eval).unwrap());
}
