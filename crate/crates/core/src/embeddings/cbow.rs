//! Continuous bag-of-words with negative sampling.

use std::cell::Cell;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EmbeddingTable;
use crate::corpus::Document;
use crate::error::{Error, Result};

const UNIGRAM_TABLE_SIZE: usize = 1_000_000;
const NOISE_POWER: f64 = 0.75;

#[derive(Debug, Clone, PartialEq)]
pub struct CbowConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Starting learning rate, decayed linearly to zero over training.
    pub lr: f64,
    pub seed: u64,
    /// Words must occur strictly more often than this to get a vector.
    pub min_count: u64,
    /// 1 runs the deterministic single-threaded trainer; more threads share
    /// the parameters without locking and are not reproducible.
    pub threads: usize,
}

impl Default for CbowConfig {
    fn default() -> Self {
        CbowConfig {
            dim: 200,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
            seed: 1,
            min_count: 5,
            threads: 1,
        }
    }
}

/// Parameter storage the update kernel writes through.
trait Store {
    fn get(&self, i: usize) -> f64;
    fn set(&self, i: usize, v: f64);
}

impl Store for [Cell<f64>] {
    #[inline]
    fn get(&self, i: usize) -> f64 {
        self[i].get()
    }
    #[inline]
    fn set(&self, i: usize, v: f64) {
        self[i].set(v)
    }
}

// Racy read-modify-write: concurrent updates to the same weight may be lost.
impl Store for [AtomicU64] {
    #[inline]
    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self[i].load(Ordering::Relaxed))
    }
    #[inline]
    fn set(&self, i: usize, v: f64) {
        self[i].store(v.to_bits(), Ordering::Relaxed)
    }
}

struct Kernel<'a> {
    dim: usize,
    window: usize,
    negatives: usize,
    noise_table: &'a [u32],
}

impl Kernel<'_> {
    fn sentence<S: Store + ?Sized, R: Rng>(
        &self,
        input: &S,
        output: &S,
        sentence: &[u32],
        lr: f64,
        rng: &mut R,
        hidden: &mut [f64],
        grad: &mut [f64],
    ) {
        let dim = self.dim;
        for pos in 0..sentence.len() {
            let word = sentence[pos] as usize;
            let reach = self.window - rng.random_range(0..self.window);
            let lo = pos.saturating_sub(reach);
            let hi = (pos + reach).min(sentence.len() - 1);

            hidden.fill(0.0);
            let mut n_context = 0usize;
            for c in (lo..=hi).filter(|&c| c != pos) {
                let base = sentence[c] as usize * dim;
                for (j, h) in hidden.iter_mut().enumerate() {
                    *h += input.get(base + j);
                }
                n_context += 1;
            }
            if n_context == 0 {
                continue;
            }
            let inv = 1.0 / n_context as f64;
            hidden.iter_mut().for_each(|h| *h *= inv);

            grad.fill(0.0);
            for d in 0..=self.negatives {
                let (target, label) = if d == 0 {
                    (word, 1.0)
                } else {
                    let t = self.noise_table[rng.random_range(0..self.noise_table.len())] as usize;
                    if t == word {
                        continue;
                    }
                    (t, 0.0)
                };
                let base = target * dim;
                let mut f = 0.0;
                for (j, h) in hidden.iter().enumerate() {
                    f += h * output.get(base + j);
                }
                let g = (label - sigmoid(f)) * lr;
                for j in 0..dim {
                    let o = output.get(base + j);
                    grad[j] += g * o;
                    output.set(base + j, o + g * hidden[j]);
                }
            }
            for c in (lo..=hi).filter(|&c| c != pos) {
                let base = sentence[c] as usize * dim;
                for (j, g) in grad.iter().enumerate() {
                    input.set(base + j, input.get(base + j) + g);
                }
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn noise_table(counts: &[u64]) -> Vec<u32> {
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(NOISE_POWER)).collect();
    let total: f64 = weights.iter().sum();
    let mut table = Vec::with_capacity(UNIGRAM_TABLE_SIZE);
    let mut word = 0usize;
    let mut cumulative = weights[0] / total;
    for slot in 0..UNIGRAM_TABLE_SIZE {
        table.push(word as u32);
        if (slot + 1) as f64 / UNIGRAM_TABLE_SIZE as f64 > cumulative && word + 1 < weights.len() {
            word += 1;
            cumulative += weights[word] / total;
        }
    }
    table
}

fn learning_rate(lr0: f64, done: usize, total: usize) -> f64 {
    lr0 * (1.0 - done as f64 / (total as f64 + 1.0)).max(1e-4)
}

/// Trains CBOW vectors on a single-language corpus.
pub fn train_cbow(docs: &[Document], cfg: &CbowConfig) -> Result<EmbeddingTable> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let lang = docs[0].lang;
    if docs.iter().any(|d| d.lang != lang) {
        return Err(Error::InvalidArgument("CBOW corpus mixes languages".into()));
    }
    if cfg.dim < 2 {
        return Err(Error::InvalidArgument(format!("embedding dimension {} < 2", cfg.dim)));
    }
    if cfg.window == 0 || cfg.negatives == 0 || cfg.threads == 0 {
        return Err(Error::InvalidArgument("window, negatives and threads must be at least 1".into()));
    }
    if !(cfg.lr > 0.0) {
        return Err(Error::InvalidArgument("learning rate must be positive".into()));
    }

    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in docs {
        for t in &doc.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut vocab: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c > cfg.min_count).collect();
    if vocab.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let ids: HashMap<&str, u32> = vocab.iter().enumerate().map(|(i, (w, _))| (*w, i as u32)).collect();
    let sentences: Vec<Vec<u32>> = docs
        .iter()
        .map(|d| d.tokens.iter().filter_map(|t| ids.get(t.as_str()).copied()).collect::<Vec<u32>>())
        .filter(|s| !s.is_empty())
        .collect();
    let n_tokens: usize = sentences.iter().map(Vec::len).sum();

    let dim = cfg.dim;
    let n_words = vocab.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound = 0.5 / dim as f64;
    let mut input: Vec<f64> = (0..n_words * dim).map(|_| rng.random_range(-bound..bound)).collect();
    let mut output = vec![0.0f64; n_words * dim];

    let table = noise_table(&vocab.iter().map(|(_, c)| *c).collect::<Vec<_>>());
    let kernel = Kernel {
        dim,
        window: cfg.window,
        negatives: cfg.negatives,
        noise_table: &table,
    };

    if cfg.epochs > 0 {
        if cfg.threads == 1 {
            let input_cells = Cell::from_mut(input.as_mut_slice()).as_slice_of_cells();
            let output_cells = Cell::from_mut(output.as_mut_slice()).as_slice_of_cells();
            let total = cfg.epochs * n_tokens;
            let mut done = 0usize;
            let (mut hidden, mut grad) = (vec![0.0; dim], vec![0.0; dim]);
            for _ in 0..cfg.epochs {
                for s in &sentences {
                    let lr = learning_rate(cfg.lr, done, total);
                    kernel.sentence(input_cells, output_cells, s, lr, &mut rng, &mut hidden, &mut grad);
                    done += s.len();
                }
            }
        } else {
            let to_atomic = |v: &[f64]| -> Vec<AtomicU64> { v.iter().map(|x| AtomicU64::new(x.to_bits())).collect() };
            let shared_in = to_atomic(&input);
            let shared_out = to_atomic(&output);
            let chunk = sentences.len().div_ceil(cfg.threads);
            std::thread::scope(|scope| {
                for (t, part) in sentences.chunks(chunk.max(1)).enumerate() {
                    let (kernel, shared_in, shared_out) = (&kernel, &shared_in, &shared_out);
                    let seed = cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(t as u64 + 1));
                    scope.spawn(move || {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let total = cfg.epochs * part.iter().map(Vec::len).sum::<usize>();
                        let mut done = 0usize;
                        let (mut hidden, mut grad) = (vec![0.0; dim], vec![0.0; dim]);
                        for _ in 0..cfg.epochs {
                            for s in part {
                                let lr = learning_rate(cfg.lr, done, total);
                                kernel.sentence(
                                    shared_in.as_slice(),
                                    shared_out.as_slice(),
                                    s,
                                    lr,
                                    &mut rng,
                                    &mut hidden,
                                    &mut grad,
                                );
                                done += s.len();
                            }
                        }
                    });
                }
            });
            input = shared_in.iter().map(|a| f64::from_bits(a.load(Ordering::Relaxed))).collect();
        }
    }

    let words = vocab.iter().map(|(w, _)| w.to_string()).collect();
    EmbeddingTable::new(lang, dim, words, input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Lang;
    use crate::embeddings::cosine;

    fn doc(tokens: Vec<String>) -> Document {
        Document {
            id: String::new(),
            lang: Lang::Source,
            tokens,
            label: None,
        }
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let sentence: Vec<String> = "the cat sat on the mat".split(' ').map(str::to_string).collect();
        let docs: Vec<Document> = (0..10).map(|_| doc(sentence.clone())).collect();
        let cfg = CbowConfig {
            dim: 16,
            epochs: 0,
            min_count: 0,
            ..CbowConfig::default()
        };
        let table = train_cbow(&docs, &cfg).unwrap();
        assert_eq!(table.len(), 5);
        let bound = 0.5 / 16.0;
        assert!(table.matrix().iter().all(|v| v.is_finite() && v.abs() <= bound));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(train_cbow(&[], &CbowConfig::default()), Err(Error::EmptyCorpus)));
        let docs = vec![doc(vec!["a".into(); 10])];
        let cfg = CbowConfig {
            dim: 0,
            min_count: 0,
            ..CbowConfig::default()
        };
        assert!(matches!(train_cbow(&docs, &cfg), Err(Error::InvalidArgument(_))));
        let mut mixed = docs.clone();
        mixed.push(Document {
            lang: Lang::Target,
            ..docs[0].clone()
        });
        assert!(matches!(
            train_cbow(&mixed, &CbowConfig { min_count: 0, ..CbowConfig::default() }),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn vocabulary_uses_strict_min_count() {
        let mut tokens = vec!["a".to_string(); 6];
        tokens.extend(vec!["b".to_string(); 5]);
        let table = train_cbow(&[doc(tokens)], &CbowConfig { dim: 4, epochs: 1, ..CbowConfig::default() }).unwrap();
        assert_eq!(table.words(), &["a".to_string()]);
    }

    #[test]
    fn parallel_mode_produces_finite_vectors() {
        let docs: Vec<Document> = (0..200)
            .map(|i| doc((0..20).map(|j| format!("w{}", (i * 7 + j * 3) % 40)).collect()))
            .collect();
        let cfg = CbowConfig {
            dim: 10,
            threads: 4,
            min_count: 0,
            ..CbowConfig::default()
        };
        let table = train_cbow(&docs, &cfg).unwrap();
        assert_eq!(table.len(), 40);
        assert!(table.matrix().iter().all(|v| v.is_finite()));
        let a = table.vector("w1").unwrap();
        assert!(cosine(a, a).is_ok());
    }
}
