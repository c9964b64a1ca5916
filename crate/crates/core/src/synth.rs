//! Synthetic bilingual review corpora with a planted word mapping and
//! sentiment lexicon, plus the evaluation metrics used on them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{predict, FinalModel};
use crate::corpus::{build_vocabulary, vectorize_or_zero, Document, Label, Lang, Vocabulary};
use crate::error::{Error, Result};
use crate::pipeline::{self, Corpora, PipelineConfig};
use crate::pivots::PivotPair;
use crate::scl::Projection;
use crate::sgd::{self, Hinge, Sample, SgdConfig};
use crate::translation::{BilingualLexicon, MappingMode, TranslationSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Latent concepts, one source token each; includes the sentiment words.
    pub concepts: usize,
    pub two_synonym_fraction: f64,
    pub three_synonym_fraction: f64,
    pub sentiment_per_polarity: usize,
    pub doc_len_min: usize,
    pub doc_len_max: usize,
    pub labeled_src: usize,
    pub unlabeled_src: usize,
    pub unlabeled_tgt: usize,
    pub test_tgt: usize,
    pub positive_fraction: f64,
    /// Probability that a sentiment word has the opposite polarity.
    pub noise: f64,
    /// Probability that a position holds a sentiment word.
    pub sentiment_rate: f64,
    /// Probability that a general word is one of the previous word's successors.
    pub follow_rate: f64,
    pub successors: usize,
    pub zipf_exponent: f64,
    pub sentiment_zipf_exponent: f64,
    pub seed_lexicon_size: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            concepts: 2000,
            two_synonym_fraction: 0.3,
            three_synonym_fraction: 0.1,
            sentiment_per_polarity: 40,
            doc_len_min: 20,
            doc_len_max: 60,
            labeled_src: 2000,
            unlabeled_src: 5000,
            unlabeled_tgt: 5000,
            test_tgt: 1000,
            positive_fraction: 0.5,
            noise: 0.05,
            sentiment_rate: 0.15,
            follow_rate: 0.9,
            successors: 3,
            zipf_exponent: 1.0,
            sentiment_zipf_exponent: 0.8,
            seed_lexicon_size: 500,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleConfig(m));
        if self.concepts == 0 || self.sentiment_per_polarity == 0 {
            return bad("concept and lexicon sizes must be positive".into());
        }
        if 2 * self.sentiment_per_polarity >= self.concepts {
            return bad(format!(
                "sentiment lexicon of {} words does not fit in {} concepts",
                2 * self.sentiment_per_polarity,
                self.concepts
            ));
        }
        if self.doc_len_min == 0 || self.doc_len_min > self.doc_len_max {
            return bad("document length range must satisfy 1 <= min <= max".into());
        }
        if [self.labeled_src, self.unlabeled_src, self.unlabeled_tgt, self.test_tgt].contains(&0) {
            return bad("corpus sizes must be positive".into());
        }
        if !(0.0..0.5).contains(&self.noise) {
            return bad(format!("noise {} outside [0, 0.5)", self.noise));
        }
        let fractions = [self.two_synonym_fraction, self.three_synonym_fraction];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || fractions.iter().sum::<f64>() > 1.0 {
            return bad("synonym fractions must be in [0, 1] and sum to at most 1".into());
        }
        for (name, p) in [
            ("positive_fraction", self.positive_fraction),
            ("sentiment_rate", self.sentiment_rate),
            ("follow_rate", self.follow_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if self.successors == 0 {
            return bad("successors must be positive".into());
        }
        if self.seed_lexicon_size == 0 || self.seed_lexicon_size > self.concepts {
            return bad(format!("seed lexicon size must be in 1..={}", self.concepts));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Source token to its target synonyms.
    pub mapping: BTreeMap<String, Vec<String>>,
    /// Sentiment token (both languages) to polarity.
    pub lexicon: BTreeMap<String, Label>,
}

impl GroundTruth {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = crate::artifact::create(path)?;
        serde_json::to_writer_pretty(&mut w, self)?;
        std::io::Write::flush(&mut w)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(crate::artifact::open(path)?)?)
    }

    /// Same targets assigned to a random permutation of the sources.
    pub fn shuffled(&self, seed: u64) -> GroundTruth {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut targets: Vec<Vec<String>> = self.mapping.values().cloned().collect();
        targets.shuffle(&mut rng);
        GroundTruth {
            mapping: self.mapping.keys().cloned().zip(targets).collect(),
            lexicon: self.lexicon.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthBundle {
    pub labeled_src: Vec<Document>,
    pub unlabeled_src: Vec<Document>,
    pub unlabeled_tgt: Vec<Document>,
    pub test_tgt: Vec<Document>,
    pub lexicon: BilingualLexicon,
}

pub fn source_token(concept: usize) -> String {
    format!("en{concept:04}")
}

pub fn target_token(concept: usize, synonym: usize) -> String {
    format!("zh{concept:04}{}", (b'a' + synonym as u8) as char)
}

fn zipf_weights(n: usize, exponent: f64) -> Vec<f64> {
    (1..=n).map(|r| (r as f64).powf(-exponent)).collect()
}

/// The latent generative model shared by both languages.
pub struct World {
    cfg: SynthConfig,
    /// Synonym count per concept.
    synonyms: Vec<usize>,
    /// Concepts `0..s` are positive, `s..2s` negative, the rest general.
    /// Every concept has a few general successors.
    general: WeightedIndex<f64>,
    sentiment: WeightedIndex<f64>,
    successor: Vec<Vec<usize>>,
}

impl World {
    pub fn new(cfg: &SynthConfig) -> Result<World> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let n = cfg.concepts;
        let n_two = (cfg.two_synonym_fraction * n as f64).round() as usize;
        let n_three = (cfg.three_synonym_fraction * n as f64).round() as usize;
        let mut synonyms: Vec<usize> = std::iter::repeat_n(3, n_three)
            .chain(std::iter::repeat_n(2, n_two))
            .chain(std::iter::repeat(1))
            .take(n)
            .collect();
        use rand::seq::SliceRandom;
        synonyms.shuffle(&mut rng);

        let s = cfg.sentiment_per_polarity;
        let general_weights = zipf_weights(n - 2 * s, cfg.zipf_exponent);
        let general = WeightedIndex::new(&general_weights).expect("positive weights");
        let sentiment = WeightedIndex::new(zipf_weights(s, cfg.sentiment_zipf_exponent)).expect("positive weights");
        let successor = (0..n)
            .map(|_| (0..cfg.successors).map(|_| 2 * s + general.sample(&mut rng)).collect())
            .collect();
        Ok(World {
            cfg: cfg.clone(),
            synonyms,
            general,
            sentiment,
            successor,
        })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.cfg
    }

    fn n_sentiment(&self) -> usize {
        2 * self.cfg.sentiment_per_polarity
    }

    /// Concept id of the `rank`-th sentiment word of a polarity.
    pub fn sentiment_concept(&self, polarity: Label, rank: usize) -> usize {
        match polarity {
            Label::Positive => rank,
            Label::Negative => self.cfg.sentiment_per_polarity + rank,
        }
    }

    /// Probability that a given position of a document labeled `label`
    /// holds sentiment concept `c`.
    pub fn sentiment_probability(&self, c: usize, label: Label) -> f64 {
        let s = self.cfg.sentiment_per_polarity;
        if c >= 2 * s {
            return 0.0;
        }
        let polarity = if c < s { Label::Positive } else { Label::Negative };
        let w = zipf_weights(s, self.cfg.sentiment_zipf_exponent);
        let within = w[c % s] / w.iter().sum::<f64>();
        let agree = if polarity == label { 1.0 - self.cfg.noise } else { self.cfg.noise };
        self.cfg.sentiment_rate * agree * within
    }

    pub fn synonym_count(&self, c: usize) -> usize {
        self.synonyms[c]
    }

    fn concept_sequence(&self, rng: &mut ChaCha8Rng, label: Label) -> Vec<usize> {
        let len = rng.random_range(self.cfg.doc_len_min..=self.cfg.doc_len_max);
        let offset = self.n_sentiment();
        let mut prev: Option<usize> = None;
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let c = if rng.random_bool(self.cfg.sentiment_rate) {
                let polarity = if rng.random_bool(self.cfg.noise) { label.flip() } else { label };
                let rank = self.sentiment.sample(rng);
                self.sentiment_concept(polarity, rank)
            } else {
                match prev {
                    Some(p) if rng.random_bool(self.cfg.follow_rate) => {
                        self.successor[p][rng.random_range(0..self.cfg.successors)]
                    }
                    _ => offset + self.general.sample(rng),
                }
            };
            prev = Some(c);
            out.push(c);
        }
        out
    }

    fn document(&self, rng: &mut ChaCha8Rng, lang: Lang, id: String, keep_label: bool) -> Document {
        let label = if rng.random_bool(self.cfg.positive_fraction) {
            Label::Positive
        } else {
            Label::Negative
        };
        let tokens = self
            .concept_sequence(rng, label)
            .into_iter()
            .map(|c| match lang {
                Lang::Source => source_token(c),
                Lang::Target => target_token(c, rng.random_range(0..self.synonyms[c])),
            })
            .collect();
        Document {
            id,
            lang,
            tokens,
            label: keep_label.then_some(label),
        }
    }

    fn corpus(&self, stream: u64, lang: Lang, prefix: &str, n: usize, keep_label: bool) -> Vec<Document> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(stream);
        (0..n)
            .map(|i| self.document(&mut rng, lang, format!("{prefix}-{i}"), keep_label))
            .collect()
    }

    pub fn truth(&self) -> GroundTruth {
        let mapping = (0..self.cfg.concepts)
            .map(|c| (source_token(c), (0..self.synonyms[c]).map(|k| target_token(c, k)).collect()))
            .collect();
        let mut lexicon = BTreeMap::new();
        for polarity in [Label::Positive, Label::Negative] {
            for rank in 0..self.cfg.sentiment_per_polarity {
                let c = self.sentiment_concept(polarity, rank);
                lexicon.insert(source_token(c), polarity);
                for k in 0..self.synonyms[c] {
                    lexicon.insert(target_token(c, k), polarity);
                }
            }
        }
        GroundTruth { mapping, lexicon }
    }
}

/// Generates all corpora and the seed lexicon: the most frequent source
/// words of the source corpora, each paired with its most frequent target
/// synonym in the unlabeled target corpus.
pub fn generate(cfg: &SynthConfig) -> Result<(SynthBundle, GroundTruth)> {
    let world = World::new(cfg)?;
    let labeled_src = world.corpus(1, Lang::Source, "src-l", cfg.labeled_src, true);
    let unlabeled_src = world.corpus(2, Lang::Source, "src-u", cfg.unlabeled_src, false);
    let unlabeled_tgt = world.corpus(3, Lang::Target, "tgt-u", cfg.unlabeled_tgt, false);
    let test_tgt = world.corpus(4, Lang::Target, "tgt-t", cfg.test_tgt, true);
    let truth = world.truth();

    let mut src_counts: HashMap<&str, u64> = HashMap::new();
    for t in labeled_src.iter().chain(&unlabeled_src).flat_map(|d| &d.tokens) {
        *src_counts.entry(t).or_default() += 1;
    }
    let mut tgt_counts: HashMap<&str, u64> = HashMap::new();
    for t in unlabeled_tgt.iter().flat_map(|d| &d.tokens) {
        *tgt_counts.entry(t).or_default() += 1;
    }
    let mut ranked: Vec<(&str, u64)> = src_counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let pairs = ranked
        .iter()
        .take(cfg.seed_lexicon_size)
        .filter_map(|(s, _)| {
            let best = truth.mapping[*s]
                .iter()
                .max_by(|a, b| {
                    let (ca, cb) = (tgt_counts.get(a.as_str()), tgt_counts.get(b.as_str()));
                    ca.cmp(&cb).then(b.cmp(a))
                })?
                .clone();
            Some((s.to_string(), best))
        })
        .collect();
    Ok((
        SynthBundle {
            labeled_src,
            unlabeled_src,
            unlabeled_tgt,
            test_tgt,
            lexicon: BilingualLexicon::new(pairs),
        },
        truth,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_pos: u64,
    pub false_neg: u64,
    pub false_pos: u64,
    pub true_neg: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub positive_accuracy: f64,
    pub negative_accuracy: f64,
    pub total: u64,
    pub confusion: Confusion,
}

/// Scores predictions against gold labels.
pub fn score_predictions(gold: &[Label], predicted: &[Label]) -> Result<EvalReport> {
    if gold.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    if gold.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            found: predicted.len(),
        });
    }
    let mut c = Confusion {
        true_pos: 0,
        false_neg: 0,
        false_pos: 0,
        true_neg: 0,
    };
    for (g, p) in gold.iter().zip(predicted) {
        match (g, p) {
            (Label::Positive, Label::Positive) => c.true_pos += 1,
            (Label::Positive, Label::Negative) => c.false_neg += 1,
            (Label::Negative, Label::Positive) => c.false_pos += 1,
            (Label::Negative, Label::Negative) => c.true_neg += 1,
        }
    }
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let total = gold.len() as u64;
    Ok(EvalReport {
        accuracy: ratio(c.true_pos + c.true_neg, total),
        positive_accuracy: ratio(c.true_pos, c.true_pos + c.false_neg),
        negative_accuracy: ratio(c.true_neg, c.true_neg + c.false_pos),
        total,
        confusion: c,
    })
}

fn gold_labels(test: &[Document]) -> Result<Vec<Label>> {
    test.iter()
        .map(|d| {
            d.label
                .ok_or_else(|| Error::InvalidArgument(format!("test document {} has no label", d.id)))
        })
        .collect()
}

pub fn evaluate_accuracy(
    model: &FinalModel,
    theta: &Projection,
    vocab: &Vocabulary,
    test: &[Document],
) -> Result<EvalReport> {
    let gold = gold_labels(test)?;
    if gold.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let predicted = test
        .par_iter()
        .map(|d| predict(model, theta, &vectorize_or_zero(d, vocab)))
        .collect::<Result<Vec<_>>>()?;
    score_predictions(&gold, &predicted)
}

/// Fraction of translation sets whose top candidate is a true synonym.
pub fn mapping_precision_at_1(translations: &[TranslationSet], truth: &GroundTruth) -> f64 {
    if translations.is_empty() {
        return 0.0;
    }
    let hits = translations
        .iter()
        .filter(|t| truth.mapping.get(&t.source).is_some_and(|set| set.iter().any(|w| w == t.top())))
        .count();
    hits as f64 / translations.len() as f64
}

/// Set of target tokens in the chosen translations that are true synonyms.
pub fn correct_targets(set: &TranslationSet, truth: &GroundTruth) -> BTreeSet<String> {
    let Some(truth_set) = truth.mapping.get(&set.source) else {
        return BTreeSet::new();
    };
    set.chosen_words().into_iter().filter(|w| truth_set.contains(w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            concepts: 300,
            sentiment_per_polarity: 10,
            labeled_src: 200,
            unlabeled_src: 200,
            unlabeled_tgt: 200,
            test_tgt: 100,
            seed_lexicon_size: 50,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn same_seed_same_corpora() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate(&SynthConfig { seed: 2, ..small() }).unwrap();
        assert_ne!(a.0.labeled_src, c.0.labeled_src);
    }

    #[test]
    fn singleton_noiseless_world_is_a_relabeling() {
        let cfg = SynthConfig {
            two_synonym_fraction: 0.0,
            three_synonym_fraction: 0.0,
            noise: 0.0,
            ..small()
        };
        let (bundle, truth) = generate(&cfg).unwrap();
        assert!(truth.mapping.values().all(|t| t.len() == 1));
        let inverse: HashMap<&str, &str> = truth.mapping.iter().map(|(s, t)| (t[0].as_str(), s.as_str())).collect();
        assert_eq!(inverse.len(), truth.mapping.len());
        for d in &bundle.test_tgt {
            assert!(d.tokens.iter().all(|t| inverse.contains_key(t.as_str())));
        }
        // With no noise, every sentiment word agrees with the document label.
        for d in &bundle.labeled_src {
            for t in &d.tokens {
                if let Some(p) = truth.lexicon.get(t) {
                    assert_eq!(Some(*p), d.label);
                }
            }
        }
        for (s, t) in &bundle.lexicon.pairs {
            assert_eq!(&truth.mapping[s][0], t);
        }
    }

    #[test]
    fn planted_frequencies_match_configuration() {
        // Forty tokens are checked at 3σ each, so a correct generator still
        // trips the check for about one seed in ten.
        let cfg = SynthConfig {
            labeled_src: 3000,
            seed: 2,
            ..small()
        };
        let (bundle, _) = generate(&cfg).unwrap();
        let world = World::new(&cfg).unwrap();
        for label in [Label::Positive, Label::Negative] {
            let docs: Vec<&Document> = bundle.labeled_src.iter().filter(|d| d.label == Some(label)).collect();
            let n: u64 = docs.iter().map(|d| d.tokens.len() as u64).sum();
            for c in 0..2 * cfg.sentiment_per_polarity {
                let tok = source_token(c);
                let count = docs.iter().flat_map(|d| &d.tokens).filter(|t| **t == tok).count() as f64;
                let p = world.sentiment_probability(c, label);
                let mean = n as f64 * p;
                let sd = (n as f64 * p * (1.0 - p)).sqrt();
                assert!((count - mean).abs() <= 3.0 * sd, "{tok} {label:?}: {count} vs {mean} ± {sd}");
            }
        }
    }

    #[test]
    fn infeasible_configs_are_rejected() {
        let too_big = SynthConfig {
            sentiment_per_polarity: 200,
            ..small()
        };
        assert!(matches!(generate(&too_big), Err(Error::InfeasibleConfig(_))));
        let noisy = SynthConfig { noise: 0.5, ..small() };
        assert!(generate(&noisy).is_err());
        let fractions = SynthConfig {
            two_synonym_fraction: 0.7,
            three_synonym_fraction: 0.4,
            ..small()
        };
        assert!(generate(&fractions).is_err());
    }

    #[test]
    fn scoring_counts() {
        let gold = vec![Label::Positive, Label::Negative, Label::Positive, Label::Negative];
        assert_eq!(score_predictions(&gold, &gold).unwrap().accuracy, 1.0);
        let flipped: Vec<Label> = gold.iter().map(|l| l.flip()).collect();
        assert_eq!(score_predictions(&gold, &flipped).unwrap().accuracy, 0.0);
        assert!(matches!(score_predictions(&[], &[]), Err(Error::EmptyTestSet)));

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let gold: Vec<Label> = (0..500).map(|i| if i % 2 == 0 { Label::Positive } else { Label::Negative }).collect();
        let pred: Vec<Label> = (0..500).map(|_| if rng.random_bool(0.5) { Label::Positive } else { Label::Negative }).collect();
        let r = score_predictions(&gold, &pred).unwrap();
        let correct = gold.iter().zip(&pred).filter(|(a, b)| a == b).count();
        assert_eq!(r.accuracy, correct as f64 / 500.0);
        let tp = gold.iter().zip(&pred).filter(|(a, b)| **a == Label::Positive && **b == Label::Positive).count() as u64;
        assert_eq!(r.confusion.true_pos, tp);
        assert_eq!(r.confusion.true_pos + r.confusion.false_neg, 250);
        assert_eq!(r.positive_accuracy, tp as f64 / 250.0);
    }

    fn set(source: &str, top: &str) -> TranslationSet {
        TranslationSet::from_scores(
            source.into(),
            vec![(top.into(), 0.9), ("zz1".into(), 0.1), ("zz2".into(), 0.05)],
            0.05,
        )
    }

    #[test]
    fn precision_at_one() {
        let truth = World::new(&small()).unwrap().truth();
        let right = set("en0001", &truth.mapping["en0001"][0]);
        let wrong = set("en0002", "zh0003a");
        assert_eq!(mapping_precision_at_1(&[right.clone(), right.clone()], &truth), 1.0);
        assert_eq!(mapping_precision_at_1(&[wrong.clone()], &truth), 0.0);
        let mixed = [right.clone(), wrong.clone(), wrong, right];
        assert_eq!(mapping_precision_at_1(&mixed, &truth), 0.5);
    }

    #[test]
    fn truth_round_trips_as_json() {
        let truth = World::new(&small()).unwrap().truth();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("truth.json");
        truth.save(&p).unwrap();
        assert_eq!(GroundTruth::load(&p).unwrap(), truth);
        let shuffled = truth.shuffled(3);
        assert_eq!(shuffled.mapping.len(), truth.mapping.len());
        assert_ne!(shuffled.mapping, truth.mapping);
    }
}

impl SynthBundle {
    pub fn corpora(&self) -> Corpora {
        Corpora {
            labeled_src: self.labeled_src.clone(),
            unlabeled_src: self.unlabeled_src.clone(),
            unlabeled_tgt: self.unlabeled_tgt.clone(),
            test_tgt: self.test_tgt.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineReport {
    pub scl_om: f64,
    pub one_to_one: f64,
    pub no_transfer: f64,
    pub scl_om_pivots: Vec<PivotPair>,
    pub one_to_one_pivots: Vec<PivotPair>,
}

/// SCL-OM against the one-to-one pivot baseline (sharing embeddings and
/// translation matrix) and the no-transfer baseline.
pub fn run_baselines(bundle: &SynthBundle, truth: &GroundTruth, cfg: &PipelineConfig) -> Result<BaselineReport> {
    cfg.validate()?;
    let corpora = bundle.corpora();
    let shared = pipeline::run_shared(cfg, &corpora, &bundle.lexicon)?;
    let om_cfg = PipelineConfig {
        mapping: MappingMode::OneToMany,
        ..cfg.clone()
    };
    let oo_cfg = PipelineConfig {
        mapping: MappingMode::OneToOne,
        ..cfg.clone()
    };
    let om = pipeline::run_from(&om_cfg, &corpora, shared.clone())?;
    let oo = pipeline::run_from(&oo_cfg, &corpora, shared)?;
    Ok(BaselineReport {
        scl_om: om.report.accuracy,
        one_to_one: oo.report.accuracy,
        no_transfer: no_transfer_accuracy(bundle, truth, cfg)?,
        scl_om_pivots: om.selection.pivots,
        one_to_one_pivots: oo.selection.pivots,
    })
}

/// A bag-of-words hinge classifier trained on labeled source documents and
/// tested on target documents rewritten word by word through `truth`.
pub fn no_transfer_accuracy(bundle: &SynthBundle, truth: &GroundTruth, cfg: &PipelineConfig) -> Result<f64> {
    let vocab = build_vocabulary(bundle.labeled_src.iter().chain(&bundle.unlabeled_src), cfg.min_token_freq)?;
    let vectors: Vec<_> = bundle.labeled_src.iter().map(|d| vectorize_or_zero(d, &vocab)).collect();
    let labels = gold_labels(&bundle.labeled_src)?;
    let samples: Vec<Sample> = vectors
        .iter()
        .zip(&labels)
        .map(|(v, y)| Sample {
            indices: &v.indices,
            values: &v.values,
            label: y.sign(),
        })
        .collect();
    let reg = cfg.lambda / samples.len() as f64;
    let sgd_cfg = SgdConfig {
        epochs: cfg.final_epochs,
        lr: cfg.final_lr.min(0.5 / reg),
        reg,
        seed: cfg.final_seed,
        fit_bias: cfg.bias,
        average_from: 0.5,
    };
    let model = sgd::train(&samples, vocab.len(), &Hinge, &sgd_cfg);

    let inverse: HashMap<&str, &str> = truth
        .mapping
        .iter()
        .flat_map(|(s, ts)| ts.iter().map(move |t| (t.as_str(), s.as_str())))
        .collect();
    let gold = gold_labels(&bundle.test_tgt)?;
    let predicted: Vec<Label> = bundle
        .test_tgt
        .iter()
        .map(|d| {
            let rewritten = Document {
                id: d.id.clone(),
                lang: Lang::Source,
                tokens: d.tokens.iter().filter_map(|t| inverse.get(t.as_str()).map(|s| s.to_string())).collect(),
                label: d.label,
            };
            let v = vectorize_or_zero(&rewritten, &vocab);
            let s = Sample {
                indices: &v.indices,
                values: &v.values,
                label: 1.0,
            };
            Label::from_sign(model.score(&s))
        })
        .collect();
    Ok(score_predictions(&gold, &predicted)?.accuracy)
}
