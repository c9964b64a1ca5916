//! Structural correspondence learning: one linear predictor per pivot,
//! trained on unlabeled documents of both languages, and the projection
//! spanned by the top left singular vectors of the stacked predictor weights.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::artifact::{self, Lines};
use crate::corpus::{vectorize, BowVector, Document, Label, Lang, Vocabulary};
use crate::error::{Error, Result};
use crate::linalg::{randomized_svd, CscMatrix, SvdOptions};
use crate::pivots::PivotPair;
use crate::sgd::{self, ModifiedHuber, Sample, SgdConfig};

/// Whether an unlabeled document "contains the pivot": the source word for
/// source documents, any of the target words for target documents.
pub fn pivot_label(doc: &Document, pivot: &PivotPair) -> Label {
    let hit = match doc.lang {
        Lang::Source => doc.contains(&pivot.source),
        Lang::Target => pivot.targets.iter().any(|t| doc.contains(t)),
    };
    if hit {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Feature indices of the pivot's own words.
pub fn pivot_features(pivot: &PivotPair, vocab: &Vocabulary) -> Vec<usize> {
    let mut idx: Vec<usize> = std::iter::once(vocab.index_of(Lang::Source, &pivot.source))
        .chain(pivot.targets.iter().map(|t| vocab.index_of(Lang::Target, t)))
        .flatten()
        .collect();
    idx.sort_unstable();
    idx.dedup();
    idx
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorConfig {
    pub epochs: usize,
    pub lr: f64,
    pub reg: f64,
    /// Pivot `l` trains with seed `seed + l`.
    pub seed: u64,
    /// Cap negatives at `max_negative_ratio` × positives.
    pub subsample_negatives: bool,
    pub max_negative_ratio: usize,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            epochs: 20,
            lr: 1e-3,
            reg: 1e-5,
            seed: 7,
            subsample_negatives: true,
            max_negative_ratio: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PivotPredictor {
    pub index: usize,
    pub weights: Vec<f64>,
    /// Separate intercepts for source and target documents.
    pub intercepts: [f64; 2],
}

/// Vectorized unlabeled documents, shared by all pivot trainings. Each
/// vector carries one extra unit entry past the vocabulary marking its
/// language, which acts as a per-language intercept.
pub struct PredictorData {
    vectors: Vec<BowVector>,
    dim: usize,
}

fn lang_slot(lang: Lang) -> usize {
    match lang {
        Lang::Source => 0,
        Lang::Target => 1,
    }
}

impl PredictorData {
    /// Documents with no in-vocabulary token are skipped.
    pub fn new(unlabeled: &[Document], vocab: &Vocabulary) -> Self {
        let dim = vocab.len();
        let vectors = unlabeled
            .iter()
            .filter_map(|d| {
                let mut v = vectorize(d, vocab).ok()?;
                v.indices.push(dim + lang_slot(d.lang));
                v.values.push(1.0);
                v.dim = dim + 2;
                Some(v)
            })
            .collect();
        PredictorData { vectors, dim }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Trains the predictor for one pivot whose own feature indices are
    /// `own` (sorted). The loss is modified Huber; inputs and weights at
    /// `own` are zero.
    pub fn train(&self, index: usize, own: &[usize], cfg: &PredictorConfig) -> Result<PivotPredictor> {
        let mut positives: Vec<BowVector> = Vec::new();
        let mut negatives: Vec<&BowVector> = Vec::new();
        for v in &self.vectors {
            if own.iter().any(|&i| v.contains(i)) {
                positives.push(mask(v, own));
            } else {
                negatives.push(v);
            }
        }
        if positives.is_empty() || negatives.is_empty() {
            return Err(Error::DegeneratePivot {
                pivot: index,
                all_positive: negatives.is_empty(),
            });
        }
        let seed = cfg.seed.wrapping_add(index as u64);
        let cap = positives.len().saturating_mul(cfg.max_negative_ratio);
        if cfg.subsample_negatives && negatives.len() > cap {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut keep = rand::seq::index::sample(&mut rng, negatives.len(), cap).into_vec();
            keep.sort_unstable();
            negatives = keep.into_iter().map(|i| negatives[i]).collect();
        }
        let samples: Vec<Sample> = positives
            .iter()
            .map(|v| sample(v, 1.0))
            .chain(negatives.iter().map(|v| sample(v, -1.0)))
            .collect();
        let sgd_cfg = SgdConfig {
            epochs: cfg.epochs,
            lr: cfg.lr,
            reg: cfg.reg,
            seed: seed ^ 0x5851_f42d_4c95_7f2d,
            fit_bias: false,
            average_from: 0.5,
        };
        let mut model = sgd::train(&samples, self.dim + 2, &ModifiedHuber, &sgd_cfg);
        let intercepts = [model.weights[self.dim], model.weights[self.dim + 1]];
        model.weights.truncate(self.dim);
        for &i in own {
            model.weights[i] = 0.0;
        }
        Ok(PivotPredictor {
            index,
            weights: model.weights,
            intercepts,
        })
    }
}

fn mask(v: &BowVector, own: &[usize]) -> BowVector {
    let (indices, values) = v
        .indices
        .iter()
        .zip(&v.values)
        .filter(|(i, _)| own.binary_search(i).is_err())
        .map(|(&i, &x)| (i, x))
        .unzip();
    BowVector {
        indices,
        values,
        dim: v.dim,
    }
}

fn sample(v: &BowVector, label: f64) -> Sample<'_> {
    Sample {
        indices: &v.indices,
        values: &v.values,
        label,
    }
}

pub fn train_pivot_predictor(
    unlabeled: &[Document],
    pivot: &PivotPair,
    vocab: &Vocabulary,
    cfg: &PredictorConfig,
) -> Result<PivotPredictor> {
    PredictorData::new(unlabeled, vocab).train(pivot.index, &pivot_features(pivot, vocab), cfg)
}

/// Trains every pivot predictor in parallel; results do not depend on
/// scheduling because each pivot has its own seed.
pub fn train_all_predictors(
    data: &PredictorData,
    pivots: &[PivotPair],
    vocab: &Vocabulary,
    cfg: &PredictorConfig,
) -> Result<Vec<PivotPredictor>> {
    pivots
        .par_iter()
        .map(|p| data.train(p.index, &pivot_features(p, vocab), cfg))
        .collect()
}

/// `|V| × m` matrix whose column `l` is pivot `l`'s weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorMatrix {
    matrix: CscMatrix,
}

impl PredictorMatrix {
    pub fn n_features(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_pivots(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn column(&self, l: usize) -> Vec<f64> {
        self.matrix.column_dense(l)
    }

    pub fn get(&self, feature: usize, pivot: usize) -> f64 {
        self.matrix.get(feature, pivot)
    }

    pub fn sparse(&self) -> &CscMatrix {
        &self.matrix
    }

    /// Keeps only the first `m` columns.
    pub fn truncated(&self, m: usize) -> Result<PredictorMatrix> {
        if m == 0 || m > self.n_pivots() {
            return Err(Error::InvalidArgument(format!("cannot keep {m} of {} pivots", self.n_pivots())));
        }
        let columns: Vec<Vec<(usize, f64)>> = (0..m)
            .map(|l| {
                let (r, v) = self.matrix.column(l);
                r.iter().copied().zip(v.iter().copied()).collect()
            })
            .collect();
        Ok(PredictorMatrix {
            matrix: CscMatrix::from_columns(self.n_features(), &columns)?,
        })
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{}", artifact::header_line("predictors", &[]))?;
        writeln!(w, "{} {}", self.n_features(), self.n_pivots())?;
        for l in 0..self.n_pivots() {
            let (rows, vals) = self.matrix.column(l);
            write!(w, "{l} {}", rows.len())?;
            for (r, v) in rows.iter().zip(vals) {
                write!(w, " {r}:{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R, name: &str) -> Result<Self> {
        let mut lines = Lines::new(reader, name);
        lines.expect_header("predictors")?;
        let header = lines.expect_line()?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| lines.error("bad `|V| m` header")))
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(lines.error("bad `|V| m` header"));
        }
        let mut columns = Vec::with_capacity(dims[1]);
        for l in 0..dims[1] {
            let line = lines.expect_line()?;
            let mut fields = line.split_whitespace();
            let idx: usize = fields.next().and_then(|s| s.parse().ok()).ok_or_else(|| lines.error("bad column index"))?;
            let nnz: usize = fields.next().and_then(|s| s.parse().ok()).ok_or_else(|| lines.error("bad count"))?;
            if idx != l {
                return Err(lines.error("column out of sequence"));
            }
            let mut col = Vec::with_capacity(nnz);
            for f in fields {
                let (r, v) = f.split_once(':').ok_or_else(|| lines.error("expected row:value"))?;
                let r: usize = r.parse().map_err(|_| lines.error("bad row"))?;
                let v = artifact::parse_floats(&lines, &[v])?[0];
                col.push((r, v));
            }
            if col.len() != nnz {
                return Err(lines.error("entry count mismatch"));
            }
            columns.push(col);
        }
        Ok(PredictorMatrix {
            matrix: CscMatrix::from_columns(dims[0], &columns)?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = artifact::create(path)?;
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(artifact::open(path)?, &path.display().to_string())
    }
}

pub fn assemble_predictor_matrix(predictors: &[PivotPredictor]) -> Result<PredictorMatrix> {
    if predictors.is_empty() {
        return Err(Error::InvalidArgument("no predictors to assemble".into()));
    }
    let dim = predictors[0].weights.len();
    let mut columns = Vec::with_capacity(predictors.len());
    for (position, p) in predictors.iter().enumerate() {
        if p.index != position {
            return Err(Error::PredictorOrder {
                position,
                found: p.index,
            });
        }
        if p.weights.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.weights.len(),
            });
        }
        if p.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument(format!("predictor {position} has non-finite weights")));
        }
        columns.push(p.weights.iter().copied().enumerate().filter(|(_, w)| *w != 0.0).collect::<Vec<_>>());
    }
    Ok(PredictorMatrix {
        matrix: CscMatrix::from_columns(dim, &columns)?,
    })
}

/// `θ`: `k × |V|` with orthonormal rows, stored feature-major so a sparse
/// document projects with contiguous reads.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    k: usize,
    dim: usize,
    by_feature: Vec<f64>,
    singular_values: Vec<f64>,
}

impl Projection {
    /// Builds from `k` rows of length `|V|`.
    pub fn from_rows(rows: &[Vec<f64>], singular_values: Vec<f64>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidArgument("projection needs at least one row".into()));
        }
        let dim = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        if singular_values.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: singular_values.len(),
            });
        }
        let by_feature = (0..dim).flat_map(|j| rows.iter().map(move |r| r[j])).collect();
        Ok(Projection {
            k,
            dim,
            by_feature,
            singular_values,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.dim).map(|j| self.by_feature[j * self.k + i]).collect()
    }

    /// The `k` coefficients of feature `j`.
    pub fn feature(&self, j: usize) -> &[f64] {
        &self.by_feature[j * self.k..(j + 1) * self.k]
    }

    /// Stable identifier of the matrix contents.
    pub fn id(&self) -> String {
        artifact::fingerprint(&self.by_feature)
    }

    /// `θ x`.
    pub fn project(&self, x: &BowVector) -> Result<Vec<f64>> {
        if x.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim,
            });
        }
        let mut out = vec![0.0; self.k];
        for (&j, &v) in x.indices.iter().zip(&x.values) {
            for (o, t) in out.iter_mut().zip(self.feature(j)) {
                *o += t * v;
            }
        }
        Ok(out)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{}", artifact::header_line("projection", &[]))?;
        writeln!(w, "{} {}", self.k, self.dim)?;
        for i in 0..self.k {
            artifact::write_floats(w, &self.row(i))?;
        }
        artifact::write_floats(w, &self.singular_values)?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R, name: &str) -> Result<Self> {
        let mut lines = Lines::new(reader, name);
        lines.expect_header("projection")?;
        let header = lines.expect_line()?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| lines.error("bad `k |V|` header")))
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(lines.error("bad `k |V|` header"));
        }
        let (k, dim) = (dims[0], dims[1]);
        let mut read_row = |len: usize| -> Result<Vec<f64>> {
            let line = lines.expect_line()?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != len {
                return Err(lines.error(format!("expected {len} values")));
            }
            artifact::parse_floats(&lines, &fields)
        };
        let rows = (0..k).map(|_| read_row(dim)).collect::<Result<Vec<_>>>()?;
        let sv = read_row(k)?;
        Projection::from_rows(&rows, sv)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = artifact::create(path)?;
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(artifact::open(path)?, &path.display().to_string())
    }
}

pub fn project_doc(theta: &Projection, x: &BowVector) -> Result<Vec<f64>> {
    theta.project(x)
}

/// Rank-`k` projection from the top left singular vectors of `W`.
pub fn truncated_svd(w: &PredictorMatrix, k: usize, seed: u64) -> Result<Projection> {
    truncated_svd_with(w, k, seed, &SvdOptions::default())
}

pub fn truncated_svd_with(w: &PredictorMatrix, k: usize, seed: u64, opts: &SvdOptions) -> Result<Projection> {
    let limit = w.n_features().min(w.n_pivots());
    if k == 0 || k > limit {
        return Err(Error::InvalidArgument(format!("k = {k} out of range 1..={limit}")));
    }
    let svd = randomized_svd(&w.matrix, k, opts, seed)?;
    let dim = w.n_features();
    let by_feature = (0..dim).flat_map(|j| (0..k).map(move |i| (j, i))).map(|(j, i)| svd.u[(j, i)]).collect();
    Ok(Projection {
        k,
        dim,
        by_feature,
        singular_values: svd.sigma,
    })
}
