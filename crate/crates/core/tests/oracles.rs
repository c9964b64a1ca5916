mod common;

use common::*;
use rand::Rng;

use sclom::classifier::{train_final_projected, FinalConfig};
use sclom::corpus::BowVector;
use sclom::scl::{assemble_predictor_matrix, truncated_svd, PivotPredictor, PredictorConfig, PredictorData, Projection};

fn predictor_matrix(a: &Mat) -> sclom::scl::PredictorMatrix {
    let predictors: Vec<PivotPredictor> = (0..a[0].len())
        .map(|j| PivotPredictor {
            index: j,
            weights: a.iter().map(|row| row[j]).collect(),
            intercepts: [0.0; 2],
        })
        .collect();
    assemble_predictor_matrix(&predictors).unwrap()
}

#[test]
fn jacobi_oracle_is_a_valid_factorization() {
    let mut r = rng(1);
    let a = gaussian(&mut r, 30, 12);
    let (u, s, v) = jacobi_svd(&a);
    let us: Mat = u.iter().map(|row| row.iter().zip(&s).map(|(x, si)| x * si).collect()).collect();
    assert!(frobenius(&sub(&a, &matmul(&us, &transpose(&v)))) / frobenius(&a) < 1e-13);
    assert!(orthonormality_error(&u) < 1e-13);
    assert!(orthonormality_error(&v) < 1e-13);
    assert!(s.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn full_rank_svd_reconstructs() {
    let mut r = rng(2);
    let a = gaussian(&mut r, 50, 20);
    let columns: Vec<Vec<(usize, f64)>> = (0..20).map(|j| (0..50).map(|i| (i, a[i][j])).collect()).collect();
    let csc = sclom::linalg::CscMatrix::from_columns(50, &columns).unwrap();
    let svd = sclom::linalg::randomized_svd(&csc, 20, &Default::default(), 5).unwrap();
    let rec: Mat = (0..50)
        .map(|i| (0..20).map(|j| (0..20).map(|c| svd.u[(i, c)] * svd.sigma[c] * svd.v[(j, c)]).sum()).collect())
        .collect();
    assert!(frobenius(&sub(&a, &rec)) / frobenius(&a) <= 1e-10);
    let (_, s, _) = jacobi_svd(&a);
    for (x, y) in svd.sigma.iter().zip(&s) {
        assert!((x - y).abs() <= 1e-10 * s[0]);
    }
}

#[test]
fn truncated_projection_spans_the_top_singular_subspace() {
    let mut r = rng(3);
    let mut checked = 0;
    for case in 0..6 {
        let a = gaussian(&mut r, 50, 20);
        let (u, s, _) = jacobi_svd(&a);
        let theta = truncated_svd(&predictor_matrix(&a), 5, case).unwrap();
        let basis = transpose(&(0..5).map(|i| theta.row(i)).collect());
        assert!(orthonormality_error(&basis) <= 1e-8);
        for (x, y) in theta.singular_values().iter().zip(&s) {
            assert!((x - y).abs() <= 1e-9 * s[0]);
        }
        if s[4] / s[5] >= 1.1 {
            checked += 1;
            let top: Mat = u.iter().map(|row| row[..5].to_vec()).collect();
            assert!(max_principal_angle(&basis, &top) <= 1e-6);
        }
    }
    assert!(checked > 0);
}

#[test]
fn projection_matches_dense_multiply() {
    let mut r = rng(4);
    let rows = gaussian(&mut r, 4, 30);
    let theta = Projection::from_rows(&rows, vec![4.0, 3.0, 2.0, 1.0]).unwrap();
    for _ in 0..20 {
        let mut x = BowVector::zero(30);
        for j in 0..30 {
            if r.random_bool(0.3) {
                x.indices.push(j);
                x.values.push(r.random_range(-1.0..1.0));
            }
        }
        let dense = x.to_dense();
        let got = theta.project(&x).unwrap();
        for (g, row) in got.iter().zip(&rows) {
            assert!((g - dot(row, &dense)).abs() <= 1e-12);
        }
    }
}

#[test]
fn predictor_reaches_the_full_batch_optimum() {
    let reg = 1e-3;
    let inst = predictor_instance(7, 30, 10);
    assert_eq!(inst.dim, 20);
    let cfg = PredictorConfig {
        epochs: 1000,
        lr: 0.5,
        reg,
        subsample_negatives: false,
        ..Default::default()
    };
    let p = PredictorData::new(&inst.docs, &inst.vocab).train(0, &inst.own, &cfg).unwrap();
    for &i in &inst.own {
        assert_eq!(p.weights[i], 0.0);
    }
    let mut w = p.weights.clone();
    w.extend(p.intercepts);
    let (_, history) = huber_oracle(&inst.examples, inst.dim + 2, reg, 300_000);
    assert!(history.windows(2).all(|h| h[1] <= h[0] + 1e-15), "oracle objective increased");
    let opt = *history.last().unwrap();
    let f = huber_objective(&inst.examples, &w, reg);
    assert!(f >= opt - 1e-9, "SGD objective {f} below oracle optimum {opt}");
    assert!((f - opt) / opt <= 0.02, "objective {f} vs oracle {opt}");
}

#[test]
fn final_classifier_reaches_the_dual_optimum() {
    let (z, labels) = final_instance(8, 40, 5, 0.1);
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let cfg = FinalConfig {
        epochs: 1000,
        lr: 0.05,
        ..Default::default()
    };
    let model = train_final_projected(&z, &labels, "t", &cfg).unwrap();
    let (_, opt) = hinge_oracle(&z, &y, cfg.lambda, 1e-10);
    let f = hinge_objective(&z, &y, &model.v, cfg.lambda);
    assert!(f >= opt * (1.0 - 1e-9));
    assert!((f - opt) / opt <= 0.01, "objective {f} vs oracle {opt}");
    assert!((sclom::classifier::final_objective(&z, &labels, &model.v, cfg.lambda) - f).abs() <= 1e-9 * f);
}

#[test]
fn dual_oracle_solves_a_hand_checked_problem() {
    // Two symmetric points: the optimum is v = (1, 0) for small lambda.
    let z = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
    let y = vec![1.0, -1.0];
    let (v, obj) = hinge_oracle(&z, &y, 0.01, 1e-12);
    assert!((v[0] - 1.0).abs() < 1e-9 && v[1].abs() < 1e-12);
    assert!((obj - 0.005).abs() < 1e-9);
}
