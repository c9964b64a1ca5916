use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use sclom::artifact;
use sclom::classifier::{decision_value, FinalModel};
use sclom::corpus::{read_documents, vectorize_or_zero, write_documents, Label, Lang, Vocabulary};
use sclom::embeddings::{load_embeddings, save_embeddings, EmbeddingTable};
use sclom::pipeline::{self, Corpora, PipelineConfig, SweepParam};
use sclom::pivots::{load_pivots, save_pivots};
use sclom::scl::{PredictorMatrix, Projection};
use sclom::synth::{self, SynthConfig};
use sclom::translation::{write_translation_sets, BilingualLexicon, TranslationMatrix};
use sclom::{Error, Result};

const CONFIG_FILE: &str = "sclom.toml";

#[derive(Parser)]
#[command(name = "sclom", version, about = "Cross-lingual sentiment transfer with one-to-many pivot translations")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(short, long, global = true, default_value = CONFIG_FILE)]
    config: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic bilingual world with a seed lexicon and a config.
    Synth {
        /// Directory for the corpora, lexicon, ground truth and config.
        #[arg(long)]
        out: PathBuf,
        /// Generator settings (JSON); defaults are used for missing keys.
        #[arg(long)]
        synth_config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build the bilingual vocabulary.
    Prepare,
    /// Train source and target word embeddings.
    Embed,
    /// Fit the translation matrix from the seed lexicon.
    Translate,
    /// Select pivots and their target translations.
    Pivots,
    /// Train the pivot predictors and compute the projection.
    Induce,
    /// Train the final classifier on projected source documents.
    Train,
    /// Label documents with the trained model.
    Predict {
        /// Documents to label; defaults to the target test set.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score the model on the target test set.
    Eval,
    /// Accuracy over the configured grid of m or k.
    Sweep {
        #[arg(long, value_enum, default_value = "k")]
        param: Param,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// All stages from prepare to eval.
    Run,
}

#[derive(Clone, Copy, ValueEnum)]
enum Param {
    M,
    K,
}

struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn vocab(&self) -> PathBuf {
        self.path("vocab.tsv")
    }
    fn emb_src(&self) -> PathBuf {
        self.path("emb_src.vec")
    }
    fn emb_tgt(&self) -> PathBuf {
        self.path("emb_tgt.vec")
    }
    fn translation(&self) -> PathBuf {
        self.path("translation.txt")
    }
    fn translations(&self) -> PathBuf {
        self.path("translations.tsv")
    }
    fn pivots(&self) -> PathBuf {
        self.path("pivots.tsv")
    }
    fn predictors(&self) -> PathBuf {
        self.path("predictors.txt")
    }
    fn projection(&self) -> PathBuf {
        self.path("projection.txt")
    }
    fn model(&self) -> PathBuf {
        self.path("model.txt")
    }
    fn predictions(&self) -> PathBuf {
        self.path("predictions.tsv")
    }
    fn eval(&self) -> PathBuf {
        self.path("eval.json")
    }
    fn sweep(&self, param: SweepParam) -> PathBuf {
        self.path(&format!("sweep_{}.csv", param.name()))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Command::Synth { out, synth_config, seed } = &cli.command {
        return cmd_synth(out, synth_config.as_deref(), *seed);
    }
    let cfg = PipelineConfig::load(&cli.config)?;
    cfg.validate()?;
    let out = Outputs {
        dir: cfg.output_dir.clone(),
    };
    fs::create_dir_all(&out.dir)?;
    match &cli.command {
        Command::Synth { .. } => unreachable!(),
        Command::Prepare => cmd_prepare(&cfg, &out),
        Command::Embed => cmd_embed(&cfg, &out),
        Command::Translate => cmd_translate(&cfg, &out),
        Command::Pivots => cmd_pivots(&cfg, &out),
        Command::Induce => cmd_induce(&cfg, &out),
        Command::Train => cmd_train(&cfg, &out),
        Command::Predict { input, output } => cmd_predict(&cfg, &out, input.as_deref(), output.as_deref()),
        Command::Eval => cmd_eval(&cfg, &out),
        Command::Sweep { param, output } => {
            let param = match param {
                Param::M => SweepParam::M,
                Param::K => SweepParam::K,
            };
            cmd_sweep(&cfg, &out, param, output.as_deref())
        }
        Command::Run => {
            cmd_prepare(&cfg, &out)?;
            cmd_embed(&cfg, &out)?;
            cmd_translate(&cfg, &out)?;
            cmd_pivots(&cfg, &out)?;
            cmd_induce(&cfg, &out)?;
            cmd_train(&cfg, &out)?;
            cmd_eval(&cfg, &out)
        }
    }
}

fn cmd_synth(out: &Path, synth_config: Option<&Path>, seed: Option<u64>) -> Result<()> {
    let mut cfg: SynthConfig = match synth_config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::MissingArtifact(path.to_path_buf()),
                _ => Error::Io(e),
            })?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => SynthConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let (bundle, truth) = synth::generate(&cfg)?;
    fs::create_dir_all(out)?;
    let pipe = PipelineConfig::default();
    write_documents(&out.join(&pipe.labeled_src), &bundle.labeled_src)?;
    write_documents(&out.join(&pipe.unlabeled_src), &bundle.unlabeled_src)?;
    write_documents(&out.join(&pipe.unlabeled_tgt), &bundle.unlabeled_tgt)?;
    write_documents(&out.join(&pipe.test_tgt), &bundle.test_tgt)?;
    bundle.lexicon.save(&out.join(&pipe.lexicon))?;
    truth.save(&out.join("truth.json"))?;
    fs::write(out.join(CONFIG_FILE), pipe.to_toml_string())?;
    info!(
        "synthetic world written to {} ({} lexicon pairs)",
        out.display(),
        bundle.lexicon.len()
    );
    Ok(())
}

fn cmd_prepare(cfg: &PipelineConfig, out: &Outputs) -> Result<()> {
    let corpora = Corpora::load(cfg)?;
    let vocab = pipeline::prepare(cfg, &corpora)?;
    info!("vocabulary: {} entries", vocab.len());
    vocab.save(&out.vocab())
}

fn cmd_embed(cfg: &PipelineConfig, out: &Outputs) -> Result<()> {
    let corpora = Corpora::load(cfg)?;
    let (src, tgt) = pipeline::embed(cfg, &corpora)?;
    save_embeddings(&src, &out.emb_src())?;
    save_embeddings(&tgt, &out.emb_tgt())
}

fn load_tables(out: &Outputs) -> Result<(EmbeddingTable, EmbeddingTable)> {
    Ok((
        load_embeddings(&out.emb_src(), Lang::Source)?,
        load_embeddings(&out.emb_tgt(), Lang::Target)?,
    ))
}

fn cmd_translate(cfg: &PipelineConfig, out: &Outputs) -> Result<()> {
    let (src, tgt) = load_tables(out)?;
    let lexicon = BilingualLexicon::load(&cfg.lexicon)?;
    let (kept, dropped) = lexicon.restrict_to(&src, &tgt)?;
    if dropped > 0 {
        info!("lexicon: dropped {dropped} pairs without vectors");
    }
    let matrix = pipeline::translate(cfg, &kept, &src, &tgt)?;
    matrix.save(&out.translation())
}

fn cmd_pivots(cfg: &PipelineConfig, out: &Outputs) -> Result<()> {
    let vocab = Vocabulary::load(&out.vocab())?;
    let (src, tgt) = load_tables(out)?;
    let matrix = TranslationMatrix::load(&out.translation())?;
    let corpora = Corpora::load(cfg)?;
    let sel = pipeline::pivots(cfg, &corpora, &vocab, &matrix, &src, &tgt)?;
    save_pivots(&out.pivots(), &sel.pivots)?;
    let mut w = artifact::create(&out.translations())?;
    write_translation_sets(&mut w, &sel.translations)?;
    w.flush()?;
    Ok(())
}

fn cmd_induce(cfg: &PipelineConfig, out: &Outputs) -> Result<()> {
    let vocab = Vocabulary::load(&out.vocab())?;
    let pivots = load_pivots(&out.pivots())?;
    let corpora = Corpora::load(cfg)?;
    let w = pipeline::predictors(cfg, &corpora, &vocab, &pivots)?;
    w.save(&out.predictors())?;
    let theta = pipeline::induce(cfg, &w, cfg.k)?;
    theta.save(&out.projection())
}

fn cmd_train(cfg: &PipelineConfig, out: &Outputs) -> Result<()> {
    let vocab = Vocabulary::load(&out.vocab())?;
    let theta = Projection::load(&out.projection())?;
    let corpora = Corpora::load(cfg)?;
    let model = pipeline::train(cfg, &corpora, &vocab, &theta)?;
    model.save(&out.model())
}

fn load_model(out: &Outputs) -> Result<(Vocabulary, Projection, FinalModel)> {
    let vocab = Vocabulary::load(&out.vocab())?;
    let theta = Projection::load(&out.projection())?;
    let model = FinalModel::load(&out.model())?;
    if model.theta_id != theta.id() {
        return Err(Error::InvalidArgument(format!(
            "{} was trained on a different projection than {}",
            out.model().display(),
            out.projection().display()
        )));
    }
    Ok((vocab, theta, model))
}

fn cmd_predict(cfg: &PipelineConfig, out: &Outputs, input: Option<&Path>, output: Option<&Path>) -> Result<()> {
    let (vocab, theta, model) = load_model(out)?;
    let docs = read_documents(input.unwrap_or(&cfg.test_tgt))?;
    let output = output.map_or_else(|| out.predictions(), Path::to_path_buf);
    let mut w = artifact::create(&output)?;
    writeln!(w, "{}", artifact::header_line("predictions", &[]))?;
    for d in &docs {
        let score = decision_value(&model, &theta, &vectorize_or_zero(d, &vocab))?;
        writeln!(w, "{}\t{}\t{}", d.id, i64::from(Label::from_sign(score)), score)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_eval(cfg: &PipelineConfig, out: &Outputs) -> Result<()> {
    let (vocab, theta, model) = load_model(out)?;
    let test = read_documents(&cfg.test_tgt)?;
    let report = synth::evaluate_accuracy(&model, &theta, &vocab, &test)?;
    info!("accuracy {:.4} on {} documents", report.accuracy, report.total);
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(out.eval(), text)?;
    Ok(())
}

fn cmd_sweep(cfg: &PipelineConfig, out: &Outputs, param: SweepParam, output: Option<&Path>) -> Result<()> {
    let vocab = Vocabulary::load(&out.vocab())?;
    let w = PredictorMatrix::load(&out.predictors())?;
    let corpora = Corpora::load(cfg)?;
    let grid = match param {
        SweepParam::M => &cfg.sweep_m,
        SweepParam::K => &cfg.sweep_k,
    };
    let points = pipeline::sweep(cfg, &corpora, &vocab, &w, param, grid)?;
    let output = output.map_or_else(|| out.sweep(param), Path::to_path_buf);
    let mut f = artifact::create(&output)?;
    pipeline::write_sweep_csv(&mut f, &points)?;
    f.flush()?;
    Ok(())
}
