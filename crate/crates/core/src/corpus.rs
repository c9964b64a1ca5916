//! Document ingestion, tokenization, vocabulary construction and sparse
//! bag-of-words vectors over the joint source/target feature space.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact::{self, Lines};
use crate::error::{Error, Result};

/// Longest run of characters accepted as one word in pre-segmented text
/// that contains no whitespace at all.
pub const MAX_SINGLE_TOKEN_CHARS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lang {
    #[serde(rename = "src")]
    Source,
    #[serde(rename = "tgt")]
    Target,
}

impl Lang {
    pub fn as_str(self) -> &'static str {
        match self {
            Lang::Source => "src",
            Lang::Target => "tgt",
        }
    }

    pub fn parse(s: &str) -> Option<Lang> {
        match s {
            "src" => Some(Lang::Source),
            "tgt" => Some(Lang::Target),
            _ => None,
        }
    }

    /// The source side is whitespace/punctuation delimited; the target side
    /// must arrive pre-segmented.
    pub fn segmentation(self) -> Segmentation {
        match self {
            Lang::Source => Segmentation::Delimited,
            Lang::Target => Segmentation::PreSegmented,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segmentation {
    Delimited,
    PreSegmented,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn from_sign(value: f64) -> Label {
        if value >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }
}

impl TryFrom<i64> for Label {
    type Error = String;

    fn try_from(v: i64) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(format!("label must be +1 or -1, got {other}")),
        }
    }
}

impl From<Label> for i64 {
    fn from(l: Label) -> i64 {
        match l {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub lang: Lang,
    pub tokens: Vec<String>,
    pub label: Option<Label>,
}

impl Document {
    pub fn contains(&self, token: &str) -> bool {
        self.tokens.iter().any(|t| t == token)
    }
}

/// Joins a review's summary and body into one text.
pub fn combine_fields(summary: &str, body: &str) -> Result<String> {
    let summary = summary.trim();
    let body = body.trim();
    match (summary.is_empty(), body.is_empty()) {
        (true, true) => Err(Error::EmptyDocument),
        (true, false) => Ok(body.to_string()),
        (false, true) => Ok(summary.to_string()),
        (false, false) => Ok(format!("{summary} {body}")),
    }
}

pub fn tokenize(text: &str, lang: Lang) -> Result<Vec<String>> {
    let lower = text.to_lowercase();
    let tokens: Vec<String> = match lang.segmentation() {
        Segmentation::Delimited => lower
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect(),
        Segmentation::PreSegmented => {
            let trimmed = lower.trim();
            let chars = trimmed.chars().count();
            if !trimmed.contains(char::is_whitespace) && chars > MAX_SINGLE_TOKEN_CHARS {
                return Err(Error::SegmentationRequired { chars });
            }
            trimmed
                .split_whitespace()
                .filter(|t| t.chars().any(char::is_alphanumeric))
                .map(str::to_string)
                .collect()
        }
    };
    Ok(tokens)
}

/// One line of the JSON-lines document format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: String,
    pub lang: Lang,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

impl DocumentRecord {
    pub fn into_document(self) -> Result<Document> {
        let text = combine_fields(self.summary.as_deref().unwrap_or(""), &self.text)?;
        let tokens = tokenize(&text, self.lang)?;
        if tokens.is_empty() {
            return Err(Error::EmptyDocument);
        }
        Ok(Document {
            id: self.id,
            lang: self.lang,
            tokens,
            label: self.label,
        })
    }

    pub fn from_document(doc: &Document) -> Self {
        DocumentRecord {
            id: doc.id.clone(),
            lang: doc.lang,
            summary: None,
            text: doc.tokens.join(" "),
            label: doc.label,
        }
    }
}

pub fn read_documents_from<R: BufRead>(reader: R, name: &str) -> Result<Vec<Document>> {
    let mut lines = Lines::new(reader, name);
    let mut docs = Vec::new();
    while let Some(line) = lines.next_line()? {
        if line.trim().is_empty() {
            continue;
        }
        let record: DocumentRecord =
            serde_json::from_str(&line).map_err(|e| lines.error(e.to_string()))?;
        let id = record.id.clone();
        let doc = record
            .into_document()
            .map_err(|e| lines.error(format!("document `{id}`: {e}")))?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn read_documents(path: &Path) -> Result<Vec<Document>> {
    let reader = artifact::open(path)?;
    read_documents_from(reader, &path.display().to_string())
}

pub fn write_documents(path: &Path, docs: &[Document]) -> Result<()> {
    let mut w = artifact::create(path)?;
    for doc in docs {
        serde_json::to_writer(&mut w, &DocumentRecord::from_document(doc))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VocabEntry {
    pub index: usize,
    pub total_freq: u64,
    pub doc_freq: u64,
    pub lang: Lang,
}

/// Joint vocabulary `V = V_S ∪ V_T`. Tokens are keyed by `(lang, string)`,
/// so the same string in both languages yields two distinct features.
/// Source tokens occupy `0..n_source`, target tokens the rest; within a
/// language, indices follow descending frequency with ties by token.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    entries: HashMap<(Lang, String), VocabEntry>,
    tokens: Vec<(Lang, String)>,
    n_source: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, lang: Lang, token: &str) -> Option<&VocabEntry> {
        self.entries.get(&(lang, token.to_string()))
    }

    pub fn index_of(&self, lang: Lang, token: &str) -> Option<usize> {
        self.get(lang, token).map(|e| e.index)
    }

    pub fn token(&self, index: usize) -> Option<(Lang, &str)> {
        self.tokens.get(index).map(|(l, t)| (*l, t.as_str()))
    }

    pub fn entry_at(&self, index: usize) -> Option<&VocabEntry> {
        self.tokens.get(index).and_then(|k| self.entries.get(k))
    }

    pub fn source_range(&self) -> std::ops::Range<usize> {
        0..self.n_source
    }

    pub fn target_range(&self) -> std::ops::Range<usize> {
        self.n_source..self.tokens.len()
    }

    /// Tokens of one language in index order.
    pub fn tokens_of(&self, lang: Lang) -> impl Iterator<Item = &str> {
        let range = match lang {
            Lang::Source => self.source_range(),
            Lang::Target => self.target_range(),
        };
        self.tokens[range].iter().map(|(_, t)| t.as_str())
    }

    fn from_entries(mut rows: Vec<(Lang, String, u64, u64)>) -> Self {
        rows.sort_by(|a, b| a.0.cmp(&b.0).then(b.2.cmp(&a.2)).then_with(|| a.1.cmp(&b.1)));
        let mut entries = HashMap::with_capacity(rows.len());
        let mut tokens = Vec::with_capacity(rows.len());
        let mut n_source = 0;
        for (index, (lang, token, total_freq, doc_freq)) in rows.into_iter().enumerate() {
            if lang == Lang::Source {
                n_source += 1;
            }
            entries.insert(
                (lang, token.clone()),
                VocabEntry {
                    index,
                    total_freq,
                    doc_freq,
                    lang,
                },
            );
            tokens.push((lang, token));
        }
        Vocabulary {
            entries,
            tokens,
            n_source,
        }
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{}", artifact::header_line("vocab", &[]))?;
        for (lang, token) in &self.tokens {
            let e = &self.entries[&(*lang, token.clone())];
            writeln!(w, "{token}\t{}\t{}\t{}\t{}", lang.as_str(), e.index, e.total_freq, e.doc_freq)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R, name: &str) -> Result<Self> {
        let mut lines = Lines::new(reader, name);
        lines.expect_header("vocab")?;
        let mut rows: Vec<(usize, Lang, String, u64, u64)> = Vec::new();
        while let Some(line) = lines.next_line()? {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(lines.error("expected 5 tab-separated fields"));
            }
            let lang = Lang::parse(fields[1]).ok_or_else(|| lines.error("bad language tag"))?;
            let num = |s: &str| -> Result<u64> { s.parse().map_err(|_| lines.error(format!("bad integer `{s}`"))) };
            let index = num(fields[2])? as usize;
            rows.push((index, lang, fields[0].to_string(), num(fields[3])?, num(fields[4])?));
        }
        rows.sort_by_key(|r| r.0);
        for (pos, row) in rows.iter().enumerate() {
            if row.0 != pos {
                return Err(Error::parse(name, 0, format!("index {} out of sequence", row.0)));
            }
        }
        let vocab = Vocabulary::from_entries(rows.iter().map(|r| (r.1, r.2.clone(), r.3, r.4)).collect());
        // Rebuilding must reproduce the stored assignment exactly.
        for (index, lang, token, _, _) in &rows {
            if vocab.index_of(*lang, token) != Some(*index) {
                return Err(Error::parse(name, 0, format!("index of `{token}` is not canonical")));
            }
        }
        Ok(vocab)
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

/// Counts tokens over `docs` and keeps, per language, those whose total
/// frequency is strictly greater than `min_token_freq`.
pub fn build_vocabulary<'a, I>(docs: I, min_token_freq: u64) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a Document>,
{
    let mut counts: HashMap<(Lang, &str), (u64, u64)> = HashMap::new();
    let mut n_docs = 0usize;
    let mut seen: Vec<&str> = Vec::new();
    for doc in docs {
        n_docs += 1;
        seen.clear();
        for tok in &doc.tokens {
            counts.entry((doc.lang, tok.as_str())).or_default().0 += 1;
            seen.push(tok.as_str());
        }
        seen.sort_unstable();
        seen.dedup();
        for tok in &seen {
            counts.get_mut(&(doc.lang, *tok)).expect("counted above").1 += 1;
        }
    }
    if n_docs == 0 {
        return Err(Error::EmptyCorpus);
    }
    let rows: Vec<_> = counts
        .into_iter()
        .filter(|(_, (tf, _))| *tf > min_token_freq)
        .map(|((lang, tok), (tf, df))| (lang, tok.to_string(), tf, df))
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyVocabulary { min_token_freq });
    }
    Ok(Vocabulary::from_entries(rows))
}

/// Sparse L2-normalized term-count vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BowVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub dim: usize,
}

impl BowVector {
    pub fn zero(dim: usize) -> Self {
        BowVector {
            indices: Vec::new(),
            values: Vec::new(),
            dim,
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> BowVector {
        BowVector {
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            dim: self.dim,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }
}

/// Raw term counts over in-vocabulary tokens, L2-normalized. Fails when
/// every token is out of vocabulary.
pub fn vectorize(doc: &Document, vocab: &Vocabulary) -> Result<BowVector> {
    let mut ids: Vec<usize> = doc
        .tokens
        .iter()
        .filter_map(|t| vocab.index_of(doc.lang, t))
        .collect();
    if ids.is_empty() {
        return Err(Error::ZeroVector);
    }
    ids.sort_unstable();
    let mut indices = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for id in ids {
        if indices.last() == Some(&id) {
            *values.last_mut().expect("parallel to indices") += 1.0;
        } else {
            indices.push(id);
            values.push(1.0);
        }
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut values {
        *v /= norm;
    }
    Ok(BowVector {
        indices,
        values,
        dim: vocab.len(),
    })
}

/// Like [`vectorize`] but maps an all-out-of-vocabulary document to the
/// zero vector.
pub fn vectorize_or_zero(doc: &Document, vocab: &Vocabulary) -> BowVector {
    vectorize(doc, vocab).unwrap_or_else(|_| BowVector::zero(vocab.len()))
}
