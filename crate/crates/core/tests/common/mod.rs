//! Reference implementations used as oracles by the integration tests.
//! Plain `Vec` arithmetic only; nothing here calls into the library's
//! numerics.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Mat = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    (0..rows).map(|_| (0..cols).map(|_| rng.sample(StandardNormal)).collect()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn transpose(a: &Mat) -> Mat {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let bt = transpose(b);
    a.iter().map(|r| bt.iter().map(|c| dot(r, c)).collect()).collect()
}

pub fn frobenius(a: &Mat) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn sub(a: &Mat, b: &Mat) -> Mat {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect()).collect()
}

/// Thin SVD by one-sided Jacobi rotations. Returns `(U, σ, V)` with `U` as
/// rows × r and `V` as cols × r, singular values descending.
pub fn jacobi_svd(a: &Mat) -> (Mat, Vec<f64>, Mat) {
    let (m, n) = (a.len(), a[0].len());
    if m < n {
        let (u, s, v) = jacobi_svd(&transpose(a));
        return (v, s, u);
    }
    // Columns of `w` converge to U Σ; `v` accumulates the rotations.
    let mut w = transpose(a);
    let mut v: Mat = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (w[p][i], w[q][i]);
                    w[p][i] = c * x - s * y;
                    w[q][i] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[p][i], v[q][i]);
                    v[p][i] = c * x - s * y;
                    v[q][i] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let sig: Vec<f64> = w.iter().map(|c| norm(c)).collect();
    order.sort_by(|&i, &j| sig[j].total_cmp(&sig[i]));
    let sigma: Vec<f64> = order.iter().map(|&i| sig[i]).collect();
    let u_cols: Mat = order
        .iter()
        .map(|&i| w[i].iter().map(|x| if sig[i] > 0.0 { x / sig[i] } else { 0.0 }).collect())
        .collect();
    let v_cols: Mat = order.iter().map(|&i| v[i].clone()).collect();
    (transpose(&u_cols), sigma, transpose(&v_cols))
}

/// Largest principal angle between the column spaces of two matrices with
/// orthonormal columns (rows × k each).
pub fn max_principal_angle(a: &Mat, b: &Mat) -> f64 {
    // Residual of A after projecting onto span(B); its largest singular
    // value is the sine of the largest angle.
    let bt_a = matmul(&transpose(b), a);
    let proj = matmul(b, &bt_a);
    let resid = sub(a, &proj);
    let (_, s, _) = jacobi_svd(&resid);
    s[0].min(1.0).asin()
}

/// `max |QᵀQ − I|` for the columns of `q` (rows × k).
pub fn orthonormality_error(q: &Mat) -> f64 {
    let g = matmul(&transpose(q), q);
    let mut worst = 0.0f64;
    for (i, row) in g.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((x - target).abs());
        }
    }
    worst
}

/// One labeled sparse example for the convex oracles.
#[derive(Debug, Clone)]
pub struct Example {
    pub x: Vec<(usize, f64)>,
    pub y: f64,
}

fn sparse_dot(x: &[(usize, f64)], w: &[f64]) -> f64 {
    x.iter().map(|&(i, v)| w[i] * v).sum()
}

pub fn modified_huber(z: f64) -> f64 {
    if z >= 1.0 {
        0.0
    } else if z >= -1.0 {
        (1.0 - z) * (1.0 - z)
    } else {
        -4.0 * z
    }
}

/// `(1/n) Σ L(y w·x) + (reg/2)‖w‖²` with the modified Huber loss.
pub fn huber_objective(data: &[Example], w: &[f64], reg: f64) -> f64 {
    let n = data.len() as f64;
    let loss: f64 = data.iter().map(|e| modified_huber(e.y * sparse_dot(&e.x, w))).sum();
    loss / n + 0.5 * reg * dot(w, w)
}

/// Minimizes [`huber_objective`] by full-batch gradient descent with a
/// fixed step below the inverse smoothness constant. Returns the
/// minimizer and the recorded objective values.
pub fn huber_oracle(data: &[Example], dim: usize, reg: f64, iters: usize) -> (Vec<f64>, Vec<f64>) {
    let n = data.len() as f64;
    let max_sq = data.iter().map(|e| e.x.iter().map(|(_, v)| v * v).sum::<f64>()).fold(0.0, f64::max);
    let step = 1.0 / (2.0 * max_sq + reg);
    let mut w = vec![0.0; dim];
    let mut history = vec![huber_objective(data, &w, reg)];
    for _ in 0..iters {
        let mut g: Vec<f64> = w.iter().map(|x| reg * x).collect();
        for e in data {
            let z = e.y * sparse_dot(&e.x, &w);
            let d = if z >= 1.0 {
                0.0
            } else if z >= -1.0 {
                -2.0 * (1.0 - z)
            } else {
                -4.0
            };
            for &(i, v) in &e.x {
                g[i] += d * e.y * v / n;
            }
        }
        let gnorm = norm(&g);
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= step * gi;
        }
        history.push(huber_objective(data, &w, reg));
        if gnorm < 1e-12 {
            break;
        }
    }
    (w, history)
}

/// `Σ max(0, 1 − y v·z) + (λ/2)‖v‖²`.
pub fn hinge_objective(z: &[Vec<f64>], y: &[f64], v: &[f64], lambda: f64) -> f64 {
    let loss: f64 = z.iter().zip(y).map(|(zi, yi)| (1.0 - yi * dot(zi, v)).max(0.0)).sum();
    loss + 0.5 * lambda * dot(v, v)
}

/// Exact minimizer of [`hinge_objective`] by dual coordinate descent,
/// stopped when the duality gap falls below `tol` relative to the primal.
/// Returns the primal solution and its objective.
pub fn hinge_oracle(z: &[Vec<f64>], y: &[f64], lambda: f64, tol: f64) -> (Vec<f64>, f64) {
    // Scaled problem: ½‖v‖² + C Σ hinge with C = 1/λ; its dual is
    // max Σα − ½‖Σ α y z‖² over 0 ≤ α ≤ C.
    let c = 1.0 / lambda;
    let k = z[0].len();
    let mut alpha = vec![0.0; z.len()];
    let mut v = vec![0.0; k];
    let q: Vec<f64> = z.iter().map(|zi| dot(zi, zi)).collect();
    for _ in 0..1_000_000 {
        for i in 0..z.len() {
            if q[i] == 0.0 {
                continue;
            }
            let g = y[i] * dot(&z[i], &v) - 1.0;
            let a = (alpha[i] - g / q[i]).clamp(0.0, c);
            let d = a - alpha[i];
            if d != 0.0 {
                for (vj, zj) in v.iter_mut().zip(&z[i]) {
                    *vj += d * y[i] * zj;
                }
                alpha[i] = a;
            }
        }
        let primal = 0.5 * dot(&v, &v) + c * z.iter().zip(y).map(|(zi, yi)| (1.0 - yi * dot(zi, &v)).max(0.0)).sum::<f64>();
        let dual = alpha.iter().sum::<f64>() - 0.5 * dot(&v, &v);
        if primal - dual <= tol * primal.abs().max(1e-300) {
            break;
        }
    }
    let obj = hinge_objective(z, y, &v, lambda);
    (v, obj)
}

use std::collections::BTreeMap;

use sclom::corpus::{build_vocabulary, Document, Label, Lang, Vocabulary};
use sclom::pivots::PivotPair;

fn lang_slot(lang: Lang) -> usize {
    match lang {
        Lang::Source => 0,
        Lang::Target => 1,
    }
}

/// A small bilingual unlabeled corpus in which the pivot `e0`/`c0` tends to
/// co-occur with `e1`, `e2` (and `c1`, `c2`), plus the oracle's view of
/// the predictor's training set.
pub struct PredictorInstance {
    pub docs: Vec<Document>,
    pub vocab: Vocabulary,
    pub pivot: PivotPair,
    pub own: Vec<usize>,
    pub examples: Vec<Example>,
    pub dim: usize,
}

pub fn predictor_instance(seed: u64, n_docs: usize, words_per_lang: usize) -> PredictorInstance {
    let mut r = rng(seed);
    let mut docs = Vec::new();
    for d in 0..n_docs {
        let (lang, prefix) = if d % 2 == 0 { (Lang::Source, "e") } else { (Lang::Target, "c") };
        let has_pivot = r.random_bool(0.4);
        let len = r.random_range(5..10);
        let mut tokens: Vec<String> = (0..len)
            .map(|_| {
                let w = if has_pivot && r.random_bool(0.3) {
                    r.random_range(1..3)
                } else {
                    r.random_range(1..words_per_lang)
                };
                format!("{prefix}{w}")
            })
            .collect();
        if has_pivot {
            tokens.push(format!("{prefix}0"));
        }
        docs.push(Document {
            id: format!("d{d}"),
            lang,
            tokens,
            label: None,
        });
    }
    let vocab = build_vocabulary(&docs, 0).unwrap();
    let pivot = PivotPair {
        index: 0,
        source: "e0".into(),
        targets: vec!["c0".into()],
    };
    let mut own = vec![
        vocab.index_of(Lang::Source, "e0").unwrap(),
        vocab.index_of(Lang::Target, "c0").unwrap(),
    ];
    own.sort_unstable();
    let dim = vocab.len();
    let examples = docs
        .iter()
        .map(|d| {
            let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
            for t in &d.tokens {
                *counts.entry(vocab.index_of(d.lang, t).unwrap()).or_default() += 1.0;
            }
            let total = counts.values().map(|c| c * c).sum::<f64>().sqrt();
            let y = if counts.keys().any(|i| own.contains(i)) { 1.0 } else { -1.0 };
            let mut x: Vec<(usize, f64)> =
                counts.into_iter().filter(|(i, _)| !own.contains(i)).map(|(i, c)| (i, c / total)).collect();
            x.push((dim + lang_slot(d.lang), 1.0));
            Example { x, y }
        })
        .collect();
    PredictorInstance {
        docs,
        vocab,
        pivot,
        own,
        examples,
        dim,
    }
}

/// Projected documents `z` (n × k) with labels from a noisy linear rule.
pub fn final_instance(seed: u64, n: usize, k: usize, flip: f64) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut r = rng(seed);
    let truth: Vec<f64> = (0..k).map(|_| r.sample(StandardNormal)).collect();
    let z: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| r.sample::<f64, _>(StandardNormal) * 0.5).collect()).collect();
    let labels = z
        .iter()
        .map(|zi| {
            let clean = Label::from_sign(dot(zi, &truth));
            if r.random_bool(flip) {
                clean.flip()
            } else {
                clean
            }
        })
        .collect();
    (z, labels)
}
