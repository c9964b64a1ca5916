//! Compressed sparse column storage and randomized truncated SVD
//! (range finder with subspace iteration).

use log::debug;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Builds from per-column `(row, value)` lists; rows must be strictly
    /// increasing within a column. Explicit zeros are dropped.
    pub fn from_columns(nrows: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for col in columns {
            let mut last = None;
            for &(r, v) in col {
                if r >= nrows || last.is_some_and(|l| r <= l) {
                    return Err(Error::InvalidArgument(format!("row {r} out of order or range")));
                }
                last = Some(r);
                if v != 0.0 {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(CscMatrix {
            nrows,
            ncols: columns.len(),
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let columns: Vec<Vec<(usize, f64)>> = (0..m.ncols())
            .map(|j| (0..m.nrows()).map(|i| (i, m[(i, j)])).collect())
            .collect();
        Self::from_columns(m.nrows(), &columns).expect("dense columns are ordered")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    pub fn column_dense(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        let (rows, vals) = self.column(j);
        for (&r, &v) in rows.iter().zip(vals) {
            out[r] = v;
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (rows, vals) = self.column(j);
        rows.binary_search(&i).map_or(0.0, |p| vals[p])
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for j in 0..self.ncols {
            let (rows, vals) = self.column(j);
            for (&r, &v) in rows.iter().zip(vals) {
                m[(r, j)] = v;
            }
        }
        m
    }

    /// `A · B` for dense `B` (ncols × l).
    pub fn mul_dense(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(b.nrows(), self.ncols);
        let mut out = DMatrix::zeros(self.nrows, b.ncols());
        for j in 0..self.ncols {
            let (rows, vals) = self.column(j);
            for c in 0..b.ncols() {
                let bjc = b[(j, c)];
                if bjc == 0.0 {
                    continue;
                }
                let mut col = out.column_mut(c);
                for (&r, &v) in rows.iter().zip(vals) {
                    col[r] += v * bjc;
                }
            }
        }
        out
    }

    /// `Aᵀ · B` for dense `B` (nrows × l).
    pub fn tr_mul_dense(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(b.nrows(), self.nrows);
        let mut out = DMatrix::zeros(self.ncols, b.ncols());
        for j in 0..self.ncols {
            let (rows, vals) = self.column(j);
            for c in 0..b.ncols() {
                let bc = b.column(c);
                out[(j, c)] = rows.iter().zip(vals).map(|(&r, &v)| v * bc[r]).sum();
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdOptions {
    /// Extra random directions beyond the target rank.
    pub oversample: usize,
    pub min_power_iters: usize,
    pub max_power_iters: usize,
    /// Stop once every kept triplet satisfies `‖A v − σ u‖ ≤ tol · σ_1`.
    pub tol: f64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            oversample: 10,
            min_power_iters: 4,
            max_power_iters: 200,
            tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// nrows × k, orthonormal columns.
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    /// ncols × k, orthonormal columns.
    pub v: DMatrix<f64>,
    pub power_iters: usize,
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Top-`k` singular triplets of `a`, sorted by decreasing singular value,
/// with each left vector's largest-magnitude entry made non-negative.
pub fn randomized_svd(a: &CscMatrix, k: usize, opts: &SvdOptions, seed: u64) -> Result<TruncatedSvd> {
    let full = a.nrows.min(a.ncols);
    if k == 0 || k > full {
        return Err(Error::InvalidArgument(format!("rank {k} out of range 1..={full}")));
    }
    if opts.oversample < 8 || opts.min_power_iters < 4 {
        return Err(Error::InvalidArgument(
            "randomized SVD needs oversampling >= 8 and >= 4 power iterations".into(),
        ));
    }
    let width = (k + opts.oversample).min(full);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(a.ncols, width, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormalize(a.mul_dense(&omega));

    let mut iters = 0;
    loop {
        // B = Qᵀ A, kept as its transpose Aᵀ Q (ncols × width).
        let bt = a.tr_mul_dense(&q);
        if iters >= opts.min_power_iters || iters >= opts.max_power_iters {
            let (u, sigma, v) = small_svd(&q, &bt, k);
            let av = a.mul_dense(&v);
            let mut worst = 0.0f64;
            for i in 0..k {
                let r = (av.column(i) - u.column(i) * sigma[i]).norm();
                worst = worst.max(r);
            }
            let scale = sigma[0].max(f64::MIN_POSITIVE);
            if worst <= opts.tol * scale || iters >= opts.max_power_iters {
                debug!("randomized SVD: {iters} power iterations, residual {:.3e}", worst / scale);
                let (u, v) = canonicalize_signs(u, v);
                return Ok(TruncatedSvd {
                    u,
                    sigma,
                    v,
                    power_iters: iters,
                });
            }
        }
        let z = orthonormalize(bt);
        q = orthonormalize(a.mul_dense(&z));
        iters += 1;
    }
}

/// SVD of `B = Qᵀ A` given `Aᵀ Q`, lifted back to `A`'s row space.
fn small_svd(q: &DMatrix<f64>, bt: &DMatrix<f64>, k: usize) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    // Bᵀ = Ṽ Σ Ũᵀ, so B's left vectors are Bᵀ's right vectors.
    let svd = bt.clone().svd(true, true);
    let left = svd.u.expect("requested");
    let right_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let order = &order[..k];
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_small = DMatrix::from_fn(right_t.ncols(), k, |r, c| right_t[(order[c], r)]);
    let v = DMatrix::from_fn(left.nrows(), k, |r, c| left[(r, order[c])]);
    (q * u_small, sigma, v)
}

fn canonicalize_signs(mut u: DMatrix<f64>, mut v: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    for c in 0..u.ncols() {
        let col = u.column(c);
        let mut best = 0;
        for r in 1..col.len() {
            if col[r].abs() > col[best].abs() {
                best = r;
            }
        }
        if col[best] < 0.0 {
            u.column_mut(c).neg_mut();
            v.column_mut(c).neg_mut();
        }
    }
    (u, v)
}
