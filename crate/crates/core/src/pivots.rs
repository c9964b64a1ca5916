//! Pivot selection: rank source words by mutual information with the class
//! label, translate them one-to-many, and keep pairs frequent on both sides.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use log::warn;
use rayon::prelude::*;

use crate::artifact::{self, Lines};
use crate::corpus::{Document, Label, Lang, Vocabulary};
use crate::error::{Error, Result};
use crate::translation::{TranslationSet, Translator};

/// Maximum number of target words per pivot.
pub const MAX_TARGETS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct PivotCandidate {
    pub word: String,
    /// Mutual information in nats.
    pub mi: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PivotPair {
    pub index: usize,
    pub source: String,
    pub targets: Vec<String>,
}

/// Presence/label contingency counts for one word.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Contingency {
    pub present_pos: u64,
    pub present_neg: u64,
    pub total_pos: u64,
    pub total_neg: u64,
}

impl Contingency {
    /// Mutual information between presence and label with add-one smoothing
    /// of the four cells.
    pub fn mutual_information(&self) -> f64 {
        let cells = [
            [self.present_pos, self.present_neg],
            [self.total_pos - self.present_pos, self.total_neg - self.present_neg],
        ];
        let n = (self.total_pos + self.total_neg) as f64 + 4.0;
        let p = |b: usize, y: usize| (cells[b][y] as f64 + 1.0) / n;
        let pb = |b: usize| p(b, 0) + p(b, 1);
        let py = |y: usize| p(0, y) + p(1, y);
        let mut mi = 0.0;
        for b in 0..2 {
            for y in 0..2 {
                let joint = p(b, y);
                mi += joint * (joint / (pb(b) * py(y))).ln();
            }
        }
        mi.max(0.0)
    }
}

fn class_totals(labeled: &[Document]) -> Result<(u64, u64)> {
    if labeled.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut totals = (0u64, 0u64);
    for d in labeled {
        match d.label {
            Some(Label::Positive) => totals.0 += 1,
            Some(Label::Negative) => totals.1 += 1,
            None => return Err(Error::InvalidArgument(format!("document `{}` has no label", d.id))),
        }
    }
    Ok(totals)
}

pub fn mutual_information(word: &str, labeled: &[Document]) -> Result<f64> {
    let (total_pos, total_neg) = class_totals(labeled)?;
    let mut table = Contingency {
        total_pos,
        total_neg,
        ..Contingency::default()
    };
    for d in labeled.iter().filter(|d| d.contains(word)) {
        match d.label {
            Some(Label::Positive) => table.present_pos += 1,
            _ => table.present_neg += 1,
        }
    }
    Ok(table.mutual_information())
}

/// Scores every source-vocabulary word and sorts by descending MI, ties by
/// ascending token.
pub fn rank_by_mutual_information(labeled: &[Document], vocab: &Vocabulary) -> Result<Vec<PivotCandidate>> {
    let (total_pos, total_neg) = class_totals(labeled)?;
    let mut present: HashMap<&str, (u64, u64)> = HashMap::new();
    let mut seen: Vec<&str> = Vec::new();
    for d in labeled.iter().filter(|d| d.lang == Lang::Source) {
        seen.clear();
        seen.extend(d.tokens.iter().map(String::as_str));
        seen.sort_unstable();
        seen.dedup();
        for tok in &seen {
            let e = present.entry(tok).or_default();
            if d.label == Some(Label::Positive) {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
    }
    let words: Vec<&str> = vocab.tokens_of(Lang::Source).collect();
    let mut ranked: Vec<PivotCandidate> = words
        .par_iter()
        .map(|w| {
            let (present_pos, present_neg) = present.get(w).copied().unwrap_or_default();
            let table = Contingency {
                present_pos,
                present_neg,
                total_pos,
                total_neg,
            };
            PivotCandidate {
                word: w.to_string(),
                mi: table.mutual_information(),
            }
        })
        .collect();
    ranked.sort_by(|a, b| b.mi.total_cmp(&a.mi).then_with(|| a.word.cmp(&b.word)));
    Ok(ranked)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotParams {
    pub m: usize,
    /// Minimum document frequency on each side.
    pub delta: u64,
    /// Take the top-m words by MI first and filter afterwards, instead of
    /// walking down the ranking until m pivots survive.
    pub strict_topm: bool,
}

#[derive(Debug, Clone)]
pub struct PivotSelection {
    pub pivots: Vec<PivotPair>,
    pub translations: Vec<TranslationSet>,
    pub examined: usize,
    /// Set when fewer than `m` pivots survived.
    pub shortfall: bool,
}

/// Document frequencies over a document set, with target posting lists for
/// union counts.
struct DocIndex<'a> {
    postings: HashMap<&'a str, Vec<u32>>,
}

impl<'a> DocIndex<'a> {
    fn new(docs: impl Iterator<Item = &'a Document>) -> Self {
        let mut postings: HashMap<&str, Vec<u32>> = HashMap::new();
        for (i, d) in docs.enumerate() {
            for t in &d.tokens {
                let list = postings.entry(t.as_str()).or_default();
                if list.last() != Some(&(i as u32)) {
                    list.push(i as u32);
                }
            }
        }
        DocIndex { postings }
    }

    fn doc_freq(&self, word: &str) -> u64 {
        self.postings.get(word).map_or(0, |p| p.len() as u64)
    }

    /// Number of documents containing any of `words`.
    fn union_doc_freq(&self, words: &[String]) -> u64 {
        let mut all: Vec<u32> = words
            .iter()
            .filter_map(|w| self.postings.get(w.as_str()))
            .flatten()
            .copied()
            .collect();
        all.sort_unstable();
        all.dedup();
        all.len() as u64
    }
}

pub fn select_pivots(
    labeled: &[Document],
    unlabeled_src: &[Document],
    unlabeled_tgt: &[Document],
    vocab: &Vocabulary,
    params: &PivotParams,
    translator: &Translator<'_>,
) -> Result<PivotSelection> {
    if params.m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let ranking = rank_by_mutual_information(labeled, vocab)?;
    let src_index = DocIndex::new(labeled.iter().chain(unlabeled_src));
    let tgt_index = DocIndex::new(unlabeled_tgt.iter());

    let walk_len = if params.strict_topm {
        params.m.min(ranking.len())
    } else {
        ranking.len()
    };
    let mut pivots = Vec::new();
    let mut translations = Vec::new();
    let mut examined = 0;
    for cand in &ranking[..walk_len] {
        if pivots.len() == params.m {
            break;
        }
        examined += 1;
        if src_index.doc_freq(&cand.word) < params.delta {
            continue;
        }
        let Some(set) = translator.translate(&cand.word)? else {
            continue;
        };
        let targets: Vec<String> = set
            .chosen_words()
            .into_iter()
            .filter(|t| vocab.get(Lang::Target, t).is_some())
            .collect();
        if targets.is_empty() || tgt_index.union_doc_freq(&targets) < params.delta {
            continue;
        }
        pivots.push(PivotPair {
            index: pivots.len(),
            source: cand.word.clone(),
            targets,
        });
        translations.push(set);
    }
    let shortfall = pivots.len() < params.m;
    if shortfall {
        warn!("only {} of {} requested pivots survived the frequency filter", pivots.len(), params.m);
    }
    Ok(PivotSelection {
        pivots,
        translations,
        examined,
        shortfall,
    })
}

pub fn write_pivots<W: Write>(w: &mut W, pivots: &[PivotPair]) -> Result<()> {
    writeln!(w, "{}", artifact::header_line("pivots", &[]))?;
    for p in pivots {
        writeln!(w, "{}\t{}\t{}", p.index, p.source, p.targets.join(","))?;
    }
    Ok(())
}

pub fn read_pivots<R: BufRead>(reader: R, name: &str) -> Result<Vec<PivotPair>> {
    let mut lines = Lines::new(reader, name);
    lines.expect_header("pivots")?;
    let mut pivots = Vec::new();
    while let Some(line) = lines.next_line()? {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(lines.error("expected `l<TAB>w_S<TAB>w_T,...`"));
        }
        let index: usize = fields[0].parse().map_err(|_| lines.error("bad pivot index"))?;
        if index != pivots.len() {
            return Err(lines.error(format!("pivot index {index} out of sequence")));
        }
        let targets: Vec<String> = fields[2].split(',').filter(|s| !s.is_empty()).map(str::to_string).collect();
        if targets.is_empty() || targets.len() > MAX_TARGETS {
            return Err(lines.error("pivot needs one to three target words"));
        }
        pivots.push(PivotPair {
            index,
            source: fields[1].to_string(),
            targets,
        });
    }
    Ok(pivots)
}

pub fn save_pivots(path: &Path, pivots: &[PivotPair]) -> Result<()> {
    let mut w = artifact::create(path)?;
    write_pivots(&mut w, pivots)?;
    w.flush()?;
    Ok(())
}

pub fn load_pivots(path: &Path) -> Result<Vec<PivotPair>> {
    read_pivots(artifact::open(path)?, &path.display().to_string())
}
