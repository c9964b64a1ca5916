//! Linear translation between embedding spaces and the thresholded
//! one-to-many rule that turns a source word into one to three target words.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::artifact::{self, Lines};
use crate::embeddings::{top_neighbors, EmbeddingTable};
use crate::error::{Error, Result};

/// Number of neighbors the gap rule inspects.
pub const CANDIDATES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BilingualLexicon {
    pub pairs: Vec<(String, String)>,
}

impl BilingualLexicon {
    pub fn new(pairs: Vec<(String, String)>) -> Self {
        BilingualLexicon { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Parses `source<TAB>target` lines. Blank lines and `#` comments are skipped.
    pub fn read_from<R: BufRead>(reader: R, name: &str) -> Result<Self> {
        let mut lines = Lines::new(reader, name);
        let mut pairs = Vec::new();
        while let Some(line) = lines.next_line()? {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (s, t) = line
                .split_once('\t')
                .ok_or_else(|| lines.error("expected `source<TAB>target`"))?;
            let (s, t) = (s.trim().to_lowercase(), t.trim().to_lowercase());
            if s.is_empty() || t.is_empty() {
                return Err(lines.error("empty lexicon entry"));
            }
            pairs.push((s, t));
        }
        Ok(BilingualLexicon { pairs })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(artifact::open(path)?, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = artifact::create(path)?;
        for (s, t) in &self.pairs {
            writeln!(w, "{s}\t{t}")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Keeps the pairs whose words both have vectors; returns the number dropped.
    pub fn restrict_to(&self, src: &EmbeddingTable, tgt: &EmbeddingTable) -> Result<(BilingualLexicon, usize)> {
        let pairs: Vec<_> = self
            .pairs
            .iter()
            .filter(|(s, t)| src.index_of(s).is_some() && tgt.index_of(t).is_some())
            .cloned()
            .collect();
        let dropped = self.pairs.len() - pairs.len();
        if pairs.is_empty() {
            return Err(Error::EmptyLexicon { dropped });
        }
        Ok((BilingualLexicon { pairs }, dropped))
    }
}

/// Row-major `d_T × d_S` map from source to target embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationMatrix {
    d_t: usize,
    d_s: usize,
    data: Vec<f64>,
}

impl TranslationMatrix {
    pub fn new(d_t: usize, d_s: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != d_t * d_s {
            return Err(Error::DimensionMismatch {
                expected: d_t * d_s,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("translation matrix has non-finite entries".into()));
        }
        Ok(TranslationMatrix { d_t, d_s, data })
    }

    pub fn identity(d: usize) -> Self {
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            data[i * d + i] = 1.0;
        }
        TranslationMatrix { d_t: d, d_s: d, data }
    }

    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn d_t(&self) -> usize {
        self.d_t
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.d_s + col]
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{}", artifact::header_line("translation", &[]))?;
        writeln!(w, "{} {}", self.d_t, self.d_s)?;
        for row in self.data.chunks(self.d_s) {
            artifact::write_floats(w, row)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R, name: &str) -> Result<Self> {
        let mut lines = Lines::new(reader, name);
        lines.expect_header("translation")?;
        let header = lines.expect_line()?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| lines.error("bad `d_T d_S` header")))
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(lines.error("bad `d_T d_S` header"));
        }
        let (d_t, d_s) = (dims[0], dims[1]);
        let mut data = Vec::with_capacity(d_t * d_s);
        for _ in 0..d_t {
            let line = lines.expect_line()?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != d_s {
                return Err(lines.error(format!("expected {d_s} values")));
            }
            data.extend(artifact::parse_floats(&lines, &fields)?);
        }
        TranslationMatrix::new(d_t, d_s, data)
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

/// Least-squares fit of `W` with `W x_i ≈ z_i` over the lexicon pairs, plus
/// `ridge · ‖W‖²_F`, solved through the normal equations
/// `W (XᵀX + ridge·I) = ZᵀX`.
pub fn fit_translation(
    lex: &BilingualLexicon,
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
    ridge: f64,
) -> Result<TranslationMatrix> {
    if !(ridge >= 0.0) {
        return Err(Error::InvalidArgument("ridge must be non-negative".into()));
    }
    let (lex, _) = lex.restrict_to(src, tgt)?;
    let (d_s, d_t) = (src.dim(), tgt.dim());
    let n = lex.len();
    let x = DMatrix::from_fn(n, d_s, |i, j| src.vector(&lex.pairs[i].0).expect("restricted")[j]);
    let z = DMatrix::from_fn(n, d_t, |i, j| tgt.vector(&lex.pairs[i].1).expect("restricted")[j]);
    fit_least_squares(&x, &z, ridge)
}

/// Normal-equation solve for row-stacked inputs `x` (n × d_S) and targets
/// `z` (n × d_T).
pub fn fit_least_squares(x: &DMatrix<f64>, z: &DMatrix<f64>, ridge: f64) -> Result<TranslationMatrix> {
    let (d_s, d_t) = (x.ncols(), z.ncols());
    let mut gram = x.transpose() * x;
    for i in 0..d_s {
        gram[(i, i)] += ridge;
    }
    if ridge == 0.0 {
        let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
        let max = eig.iter().cloned().fold(0.0f64, f64::max);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let ratio = if max > 0.0 { min / max } else { 0.0 };
        if ratio <= 1e-12 {
            return Err(Error::IllConditioned { ratio });
        }
    }
    let rhs = x.transpose() * z; // d_S × d_T, equals (Wᵀ) after solving
    let chol = gram.cholesky().ok_or(Error::IllConditioned { ratio: 0.0 })?;
    let wt = chol.solve(&rhs);
    let data = (0..d_t).flat_map(|r| (0..d_s).map(move |c| (r, c))).map(|(r, c)| wt[(c, r)]).collect();
    TranslationMatrix::new(d_t, d_s, data)
}

/// `b = W x`.
pub fn project(w: &TranslationMatrix, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != w.d_s {
        return Err(Error::DimensionMismatch {
            expected: w.d_s,
            found: x.len(),
        });
    }
    Ok(w.data.chunks(w.d_s).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect())
}

/// How many of the three ranked candidates to keep: all three when both
/// consecutive similarity gaps are below `phi`, two when only the first is,
/// otherwise one.
pub fn gap_rule(scores: [f64; 3], phi: f64) -> usize {
    let first_gap = scores[0] - scores[1];
    let second_gap = scores[1] - scores[2];
    if first_gap < phi && second_gap < phi {
        3
    } else if first_gap < phi {
        2
    } else {
        1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationSet {
    pub source: String,
    /// Ranked `(target word, cosine similarity)` pairs.
    pub candidates: Vec<(String, f64)>,
    chosen: usize,
}

impl TranslationSet {
    /// Applies the gap rule to three ranked candidates.
    pub fn from_scores(source: String, candidates: Vec<(String, f64)>, phi: f64) -> TranslationSet {
        assert_eq!(candidates.len(), CANDIDATES);
        let chosen = gap_rule([candidates[0].1, candidates[1].1, candidates[2].1], phi);
        TranslationSet {
            source,
            candidates,
            chosen,
        }
    }

    pub fn chosen(&self) -> &[(String, f64)] {
        &self.candidates[..self.chosen]
    }

    pub fn chosen_words(&self) -> Vec<String> {
        self.chosen().iter().map(|(w, _)| w.clone()).collect()
    }

    pub fn top(&self) -> &str {
        &self.candidates[0].0
    }
}

pub fn translate_one_to_many(
    word: &str,
    w: &TranslationMatrix,
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
    p_n: usize,
    phi: f64,
) -> Result<TranslationSet> {
    if p_n != CANDIDATES {
        return Err(Error::InvalidArgument(format!(
            "p_n must be {CANDIDATES}; the gap rule is defined for three candidates"
        )));
    }
    if !(phi > 0.0) {
        return Err(Error::InvalidArgument("phi must be positive".into()));
    }
    if tgt.len() < CANDIDATES {
        return Err(Error::TargetVocabularyTooSmall {
            found: tgt.len(),
            needed: CANDIDATES,
        });
    }
    let x = src.vector(word).ok_or_else(|| Error::UnknownWord(word.to_string()))?;
    let b = project(w, x)?;
    let candidates = top_neighbors(tgt, &b, CANDIDATES)?;
    Ok(TranslationSet::from_scores(word.to_string(), candidates, phi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingMode {
    /// Thresholded gap rule over the three nearest target words.
    OneToMany,
    /// Only the nearest target word.
    OneToOne,
}

/// Everything needed to translate source pivot candidates.
pub struct Translator<'a> {
    pub matrix: &'a TranslationMatrix,
    pub src: &'a EmbeddingTable,
    pub tgt: &'a EmbeddingTable,
    pub p_n: usize,
    pub phi: f64,
    pub mode: MappingMode,
}

impl Translator<'_> {
    /// `None` when the word has no source vector.
    pub fn translate(&self, word: &str) -> Result<Option<TranslationSet>> {
        if self.src.index_of(word).is_none() {
            return Ok(None);
        }
        let mut set = translate_one_to_many(word, self.matrix, self.src, self.tgt, self.p_n, self.phi)?;
        if self.mode == MappingMode::OneToOne {
            set.chosen = 1;
        }
        Ok(Some(set))
    }
}

pub fn write_translation_sets<W: Write>(w: &mut W, sets: &[TranslationSet]) -> Result<()> {
    writeln!(w, "{}", artifact::header_line("translations", &[]))?;
    for set in sets {
        let cands: Vec<String> = set.candidates.iter().map(|(t, s)| format!("{t}:{s}")).collect();
        writeln!(w, "{}\t{}\t{}", set.source, set.chosen, cands.join(","))?;
    }
    Ok(())
}
