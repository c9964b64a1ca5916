//! Monolingual word vectors: storage, the word2vec text format, cosine
//! similarity and nearest-neighbor queries.

mod cbow;

pub use cbow::{train_cbow, CbowConfig};

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::artifact::{self, Lines};
use crate::corpus::Lang;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    lang: Lang,
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    matrix: Vec<f64>,
    norms: Vec<f64>,
}

impl EmbeddingTable {
    /// Builds a table from words and a row-major `words.len() × dim` matrix.
    pub fn new(lang: Lang, dim: usize, words: Vec<String>, matrix: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        if matrix.len() != words.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: words.len() * dim,
                found: matrix.len(),
            });
        }
        if let Some(v) = matrix.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite embedding value {v}")));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::DuplicateWord(w.clone()));
            }
        }
        let norms = matrix.chunks(dim).map(norm).collect();
        Ok(EmbeddingTable {
            lang,
            dim,
            words,
            index,
            matrix,
            norms,
        })
    }

    pub fn lang(&self) -> Lang {
        self.lang
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.row(i))
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{}", artifact::header_line("embeddings", &[("lang", self.lang.as_str())]))?;
        writeln!(w, "{} {}", self.words.len(), self.dim)?;
        for (i, word) in self.words.iter().enumerate() {
            write!(w, "{word} ")?;
            artifact::write_floats(w, self.row(i))?;
        }
        Ok(())
    }

    /// Reads the word2vec text format. A leading version tag is optional so
    /// that vectors produced by external tools load unchanged.
    pub fn read_from<R: BufRead>(reader: R, name: &str, lang: Lang) -> Result<Self> {
        let mut lines = Lines::new(reader, name);
        let mut first = lines.expect_line()?;
        if artifact::is_header(&first) {
            artifact::check_header(&first, "embeddings")?;
            first = lines.expect_line()?;
        }
        let header: Vec<&str> = first.split_whitespace().collect();
        if header.len() != 2 {
            return Err(lines.error("expected `<word_count> <dim>` header"));
        }
        let count: usize = header[0].parse().map_err(|_| lines.error("bad word count"))?;
        let dim: usize = header[1].parse().map_err(|_| lines.error("bad dimension"))?;
        let mut words = Vec::with_capacity(count);
        let mut matrix = Vec::with_capacity(count * dim);
        let mut seen = HashMap::with_capacity(count);
        while let Some(line) = lines.next_line()? {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-empty line").to_string();
            let values: Vec<&str> = fields.collect();
            if values.len() != dim {
                return Err(lines.error(format!("`{word}` has {} values, header says {dim}", values.len())));
            }
            if seen.insert(word.clone(), ()).is_some() {
                return Err(Error::DuplicateWord(word));
            }
            matrix.extend(artifact::parse_floats(&lines, &values)?);
            words.push(word);
        }
        if words.len() != count {
            return Err(Error::parse(
                name,
                lines.line_no,
                format!("header announces {count} words, file has {}", words.len()),
            ));
        }
        EmbeddingTable::new(lang, dim, words, matrix)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = artifact::create(path)?;
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

pub fn load_embeddings(path: &Path, lang: Lang) -> Result<EmbeddingTable> {
    EmbeddingTable::read_from(artifact::open(path)?, &path.display().to_string(), lang)
}

pub fn save_embeddings(table: &EmbeddingTable, path: &Path) -> Result<()> {
    table.save(path)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// The `n` rows most cosine-similar to `query`, by descending similarity
/// and ascending token on ties. Zero rows score 0.
pub fn top_neighbors(table: &EmbeddingTable, query: &[f64], n: usize) -> Result<Vec<(String, f64)>> {
    if n == 0 {
        return Err(Error::InvalidArgument("neighbor count must be at least 1".into()));
    }
    if query.len() != table.dim {
        return Err(Error::DimensionMismatch {
            expected: table.dim,
            found: query.len(),
        });
    }
    let qn = norm(query);
    if qn == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut scored: Vec<(usize, f64)> = (0..table.len())
        .map(|i| {
            let rn = table.norms[i];
            let sim = if rn == 0.0 {
                0.0
            } else {
                (dot(table.row(i), query) / (rn * qn)).clamp(-1.0, 1.0)
            };
            (i, sim)
        })
        .collect();
    let order = |a: &(usize, f64), b: &(usize, f64)| {
        b.1.total_cmp(&a.1).then_with(|| table.words[a.0].cmp(&table.words[b.0]))
    };
    let n = n.min(scored.len());
    if n < scored.len() {
        scored.select_nth_unstable_by(n - 1, order);
        scored.truncate(n);
    }
    scored.sort_unstable_by(order);
    Ok(scored.into_iter().map(|(i, s)| (table.words[i].clone(), s)).collect())
}
