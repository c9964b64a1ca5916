//! End-to-end orchestration: configuration, the individual stages, a full
//! in-memory run and the sensitivity sweeps over m and k.

use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::classifier::{train_final, FinalConfig, FinalModel};
use crate::corpus::{build_vocabulary, read_documents, Document, Vocabulary};
use crate::embeddings::{train_cbow, CbowConfig, EmbeddingTable};
use crate::error::{Error, Result};
use crate::linalg::SvdOptions;
use crate::pivots::{select_pivots, PivotPair, PivotParams, PivotSelection};
use crate::scl::{self, PredictorConfig, PredictorData, PredictorMatrix, Projection};
use crate::synth::{evaluate_accuracy, EvalReport};
use crate::translation::{fit_translation, BilingualLexicon, MappingMode, TranslationMatrix, Translator, CANDIDATES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub labeled_src: PathBuf,
    pub unlabeled_src: PathBuf,
    pub unlabeled_tgt: PathBuf,
    pub test_tgt: PathBuf,
    pub lexicon: PathBuf,
    pub output_dir: PathBuf,

    pub m: usize,
    pub k: usize,
    pub delta: u64,
    pub phi: f64,
    pub p_n: usize,
    pub min_token_freq: u64,
    pub mapping: MappingMode,
    pub strict_topm: bool,

    pub dim_src: usize,
    pub dim_tgt: usize,
    pub window: usize,
    pub negatives: usize,
    pub embed_epochs: usize,
    pub embed_lr: f64,
    pub embed_threads: usize,
    pub ridge: f64,

    pub predictor_epochs: usize,
    pub predictor_lr: f64,
    pub predictor_reg: f64,
    pub subsample_negatives: bool,
    pub max_negative_ratio: usize,

    pub lambda: f64,
    pub final_epochs: usize,
    pub final_lr: f64,
    pub bias: bool,

    pub embed_seed: u64,
    pub predictor_seed: u64,
    pub svd_seed: u64,
    pub final_seed: u64,

    pub sweep_m: Vec<usize>,
    pub sweep_k: Vec<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            labeled_src: "labeled_src.jsonl".into(),
            unlabeled_src: "unlabeled_src.jsonl".into(),
            unlabeled_tgt: "unlabeled_tgt.jsonl".into(),
            test_tgt: "test_tgt.jsonl".into(),
            lexicon: "lexicon.tsv".into(),
            output_dir: "out".into(),
            m: 300,
            k: 120,
            delta: 30,
            phi: 0.1,
            p_n: CANDIDATES,
            min_token_freq: 5,
            mapping: MappingMode::OneToMany,
            strict_topm: false,
            dim_src: 200,
            dim_tgt: 50,
            window: 5,
            negatives: 5,
            embed_epochs: 5,
            embed_lr: 0.025,
            embed_threads: 1,
            ridge: 1e-6,
            predictor_epochs: 20,
            predictor_lr: 1e-3,
            predictor_reg: 1e-5,
            subsample_negatives: true,
            max_negative_ratio: 10,
            lambda: 1e-3,
            final_epochs: 30,
            final_lr: 0.1,
            bias: false,
            embed_seed: 1,
            predictor_seed: 2,
            svd_seed: 3,
            final_seed: 4,
            sweep_m: vec![50, 100, 150, 200, 250, 300],
            sweep_k: vec![50, 100, 150, 200, 250, 300],
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingArtifact(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.labeled_src,
            &mut self.unlabeled_src,
            &mut self.unlabeled_tgt,
            &mut self.test_tgt,
            &mut self.lexicon,
            &mut self.output_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.m == 0 {
            return fail("m must be at least 1".into());
        }
        if self.k == 0 || self.k > self.m {
            return fail(format!("k = {} must be in 1..=m ({})", self.k, self.m));
        }
        if !(self.phi > 0.0) {
            return fail(format!("phi = {} must be positive", self.phi));
        }
        if self.p_n != CANDIDATES {
            return fail(format!("p_n must be {CANDIDATES}"));
        }
        if self.dim_src < 2 || self.dim_tgt < 2 {
            return fail("embedding dimensions must be at least 2".into());
        }
        if self.window == 0 || self.negatives == 0 || self.embed_threads == 0 {
            return fail("window, negatives and embed_threads must be positive".into());
        }
        if !(self.embed_lr > 0.0) || !(self.predictor_lr > 0.0) || !(self.final_lr > 0.0) {
            return fail("learning rates must be positive".into());
        }
        if !(self.ridge >= 0.0) || !(self.predictor_reg >= 0.0) {
            return fail("ridge and predictor_reg must be non-negative".into());
        }
        if self.predictor_lr * self.predictor_reg >= 1.0 {
            return fail("predictor_lr * predictor_reg must be below 1".into());
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return fail(format!("lambda = {} must be positive", self.lambda));
        }
        if self.max_negative_ratio == 0 {
            return fail("max_negative_ratio must be positive".into());
        }
        if self.sweep_m.contains(&0) || self.sweep_k.contains(&0) {
            return fail("sweep grids must hold positive values".into());
        }
        Ok(())
    }

    pub fn cbow(&self, dim: usize) -> CbowConfig {
        CbowConfig {
            dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.embed_epochs,
            lr: self.embed_lr,
            seed: self.embed_seed,
            min_count: self.min_token_freq,
            threads: self.embed_threads,
        }
    }

    pub fn pivot_params(&self) -> PivotParams {
        PivotParams {
            m: self.m,
            delta: self.delta,
            strict_topm: self.strict_topm,
        }
    }

    pub fn predictor(&self) -> PredictorConfig {
        PredictorConfig {
            epochs: self.predictor_epochs,
            lr: self.predictor_lr,
            reg: self.predictor_reg,
            seed: self.predictor_seed,
            subsample_negatives: self.subsample_negatives,
            max_negative_ratio: self.max_negative_ratio,
        }
    }

    pub fn final_config(&self) -> FinalConfig {
        FinalConfig {
            lambda: self.lambda,
            epochs: self.final_epochs,
            lr: self.final_lr,
            seed: self.final_seed,
            bias: self.bias,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpora {
    pub labeled_src: Vec<Document>,
    pub unlabeled_src: Vec<Document>,
    pub unlabeled_tgt: Vec<Document>,
    pub test_tgt: Vec<Document>,
}

impl Corpora {
    pub fn load(cfg: &PipelineConfig) -> Result<Corpora> {
        Ok(Corpora {
            labeled_src: read_documents(&cfg.labeled_src)?,
            unlabeled_src: read_documents(&cfg.unlabeled_src)?,
            unlabeled_tgt: read_documents(&cfg.unlabeled_tgt)?,
            test_tgt: read_documents(&cfg.test_tgt)?,
        })
    }

    /// Source documents used for embeddings and document frequencies.
    pub fn all_source(&self) -> Vec<Document> {
        self.labeled_src.iter().chain(&self.unlabeled_src).cloned().collect()
    }

    /// D_U: the unlabeled documents of both languages.
    pub fn unlabeled(&self) -> Vec<Document> {
        self.unlabeled_src.iter().chain(&self.unlabeled_tgt).cloned().collect()
    }
}

/// The vocabulary covers every training corpus; test documents are unseen.
pub fn prepare(cfg: &PipelineConfig, corpora: &Corpora) -> Result<Vocabulary> {
    let docs = corpora
        .labeled_src
        .iter()
        .chain(&corpora.unlabeled_src)
        .chain(&corpora.unlabeled_tgt);
    build_vocabulary(docs, cfg.min_token_freq)
}

pub fn embed(cfg: &PipelineConfig, corpora: &Corpora) -> Result<(EmbeddingTable, EmbeddingTable)> {
    let src = train_cbow(&corpora.all_source(), &cfg.cbow(cfg.dim_src))?;
    let tgt = train_cbow(&corpora.unlabeled_tgt, &cfg.cbow(cfg.dim_tgt))?;
    info!("embeddings: {} source and {} target words", src.len(), tgt.len());
    Ok((src, tgt))
}

pub fn translate(
    cfg: &PipelineConfig,
    lexicon: &BilingualLexicon,
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
) -> Result<TranslationMatrix> {
    fit_translation(lexicon, src, tgt, cfg.ridge)
}

pub fn pivots(
    cfg: &PipelineConfig,
    corpora: &Corpora,
    vocab: &Vocabulary,
    matrix: &TranslationMatrix,
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
) -> Result<PivotSelection> {
    let translator = Translator {
        matrix,
        src,
        tgt,
        p_n: cfg.p_n,
        phi: cfg.phi,
        mode: cfg.mapping,
    };
    let sel = select_pivots(
        &corpora.labeled_src,
        &corpora.unlabeled_src,
        &corpora.unlabeled_tgt,
        vocab,
        &cfg.pivot_params(),
        &translator,
    )?;
    info!("pivots: {} selected after examining {} candidates", sel.pivots.len(), sel.examined);
    Ok(sel)
}

pub fn predictors(cfg: &PipelineConfig, corpora: &Corpora, vocab: &Vocabulary, pivots: &[PivotPair]) -> Result<PredictorMatrix> {
    if pivots.is_empty() {
        return Err(Error::InfeasibleConfig("no pivots survived selection".into()));
    }
    let data = PredictorData::new(&corpora.unlabeled(), vocab);
    let trained = scl::train_all_predictors(&data, pivots, vocab, &cfg.predictor())?;
    scl::assemble_predictor_matrix(&trained)
}

/// The projection for rank `k`, clamped to the available pivots.
pub fn induce(cfg: &PipelineConfig, w: &PredictorMatrix, k: usize) -> Result<Projection> {
    let k_eff = k.min(w.n_pivots()).min(w.n_features());
    if k_eff < k {
        log::warn!("k = {k} exceeds the {} available pivots; using {k_eff}", w.n_pivots());
    }
    scl::truncated_svd_with(w, k_eff, cfg.svd_seed, &SvdOptions::default())
}

pub fn train(cfg: &PipelineConfig, corpora: &Corpora, vocab: &Vocabulary, theta: &Projection) -> Result<FinalModel> {
    train_final(&corpora.labeled_src, vocab, theta, &cfg.final_config())
}

/// Every artifact of a full run.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub vocab: Vocabulary,
    pub src_embeddings: EmbeddingTable,
    pub tgt_embeddings: EmbeddingTable,
    pub lexicon: BilingualLexicon,
    pub matrix: TranslationMatrix,
    pub selection: PivotSelection,
    pub predictors: PredictorMatrix,
    pub theta: Projection,
    pub model: FinalModel,
    pub report: EvalReport,
}

/// Artifacts up to and including the translation matrix.
#[derive(Debug, Clone)]
pub struct Shared {
    pub vocab: Vocabulary,
    pub src_embeddings: EmbeddingTable,
    pub tgt_embeddings: EmbeddingTable,
    pub lexicon: BilingualLexicon,
    pub matrix: TranslationMatrix,
}

pub fn run_shared(cfg: &PipelineConfig, corpora: &Corpora, lexicon: &BilingualLexicon) -> Result<Shared> {
    let vocab = prepare(cfg, corpora)?;
    let (src, tgt) = embed(cfg, corpora)?;
    let (kept, dropped) = lexicon.restrict_to(&src, &tgt)?;
    if dropped > 0 {
        info!("lexicon: dropped {dropped} pairs without vectors");
    }
    let matrix = translate(cfg, &kept, &src, &tgt)?;
    Ok(Shared {
        vocab,
        src_embeddings: src,
        tgt_embeddings: tgt,
        lexicon: kept,
        matrix,
    })
}

pub fn run_from(cfg: &PipelineConfig, corpora: &Corpora, shared: Shared) -> Result<PipelineRun> {
    let selection = pivots(
        cfg,
        corpora,
        &shared.vocab,
        &shared.matrix,
        &shared.src_embeddings,
        &shared.tgt_embeddings,
    )?;
    let w = predictors(cfg, corpora, &shared.vocab, &selection.pivots)?;
    let theta = induce(cfg, &w, cfg.k)?;
    let model = train(cfg, corpora, &shared.vocab, &theta)?;
    let report = evaluate_accuracy(&model, &theta, &shared.vocab, &corpora.test_tgt)?;
    info!("accuracy on target test set: {:.4}", report.accuracy);
    Ok(PipelineRun {
        vocab: shared.vocab,
        src_embeddings: shared.src_embeddings,
        tgt_embeddings: shared.tgt_embeddings,
        lexicon: shared.lexicon,
        matrix: shared.matrix,
        selection,
        predictors: w,
        theta,
        model,
        report,
    })
}

pub fn run(cfg: &PipelineConfig, corpora: &Corpora, lexicon: &BilingualLexicon) -> Result<PipelineRun> {
    cfg.validate()?;
    let shared = run_shared(cfg, corpora, lexicon)?;
    run_from(cfg, corpora, shared)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    M,
    K,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::M => "m",
            SweepParam::K => "k",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub param: SweepParam,
    pub value: usize,
    pub accuracy: f64,
}

/// Re-evaluates the target accuracy over a grid, reusing the trained pivot
/// predictors. Sweeping m keeps the first m pivots (k clamped to m);
/// sweeping k keeps all pivots.
pub fn sweep(
    cfg: &PipelineConfig,
    corpora: &Corpora,
    vocab: &Vocabulary,
    predictors: &PredictorMatrix,
    param: SweepParam,
    grid: &[usize],
) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::with_capacity(grid.len());
    for &value in grid {
        let (w, k) = match param {
            SweepParam::M => {
                let m = value.min(predictors.n_pivots());
                (predictors.truncated(m)?, cfg.k.min(m))
            }
            SweepParam::K => (predictors.clone(), value),
        };
        let theta = induce(cfg, &w, k)?;
        let model = train(cfg, corpora, vocab, &theta)?;
        let report = evaluate_accuracy(&model, &theta, vocab, &corpora.test_tgt)?;
        info!("sweep {}={value}: accuracy {:.4}", param.name(), report.accuracy);
        out.push(SweepPoint {
            param,
            value,
            accuracy: report.accuracy,
        });
    }
    Ok(out)
}

pub fn write_sweep_csv<W: std::io::Write>(w: &mut W, points: &[SweepPoint]) -> Result<()> {
    writeln!(w, "param,value,accuracy")?;
    for p in points {
        writeln!(w, "{},{},{}", p.param.name(), p.value, p.accuracy)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_reference_settings() {
        let cfg = PipelineConfig::default();
        assert_eq!((cfg.m, cfg.k, cfg.delta, cfg.phi), (300, 120, 30, 0.1));
        assert_eq!((cfg.dim_src, cfg.dim_tgt, cfg.window, cfg.p_n), (200, 50, 5, 3));
        cfg.validate().unwrap();
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
        let partial = PipelineConfig::from_toml_str("m = 100\nk = 50\nmapping = \"one_to_one\"\n").unwrap();
        assert_eq!((partial.m, partial.k, partial.mapping), (100, 50, MappingMode::OneToOne));
        assert_eq!(partial.delta, 30);
    }

    #[test]
    fn invalid_configs_are_config_errors() {
        for text in ["k = 400", "m = 0", "phi = 0.0", "p_n = 4", "lambda = -1.0", "no_such_key = 1", "m = \"x\""] {
            let err = PipelineConfig::from_toml_str(text).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{text}: {err}");
            assert_eq!(err.exit_code(), 2);
        }
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "lexicon = \"dict/seed.tsv\"\noutput_dir = \"/abs/out\"\n").unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.lexicon, dir.path().join("dict/seed.tsv"));
        assert_eq!(cfg.output_dir, PathBuf::from("/abs/out"));
        assert!(matches!(
            PipelineConfig::load(&dir.path().join("missing.toml")),
            Err(Error::MissingArtifact(_))
        ));
    }

    #[test]
    fn sweep_csv_format() {
        let mut buf = Vec::new();
        let pts = [SweepPoint {
            param: SweepParam::K,
            value: 50,
            accuracy: 0.75,
        }];
        write_sweep_csv(&mut buf, &pts).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "param,value,accuracy\nk,50,0.75\n");
    }
}
