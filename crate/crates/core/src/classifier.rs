//! The final linear classifier trained on projected source documents and
//! applied to target documents.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::artifact::{self, Lines};
use crate::corpus::{vectorize_or_zero, BowVector, Document, Label, Vocabulary};
use crate::error::{Error, Result};
use crate::scl::Projection;
use crate::sgd::{self, Hinge, Sample, SgdConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct FinalConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    /// Appends a constant feature to every projected input.
    pub bias: bool,
}

impl Default for FinalConfig {
    fn default() -> Self {
        FinalConfig {
            lambda: 1e-3,
            epochs: 30,
            lr: 0.1,
            seed: 11,
            bias: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalModel {
    /// `k` weights, plus one for the constant feature when `bias` is set.
    pub v: Vec<f64>,
    pub lambda: f64,
    pub bias: bool,
    pub theta_id: String,
}

impl FinalModel {
    pub fn k(&self) -> usize {
        self.v.len() - usize::from(self.bias)
    }

    /// `vᵀ z` for an already projected input.
    pub fn score_projected(&self, z: &[f64]) -> f64 {
        let s: f64 = self.v.iter().zip(z).map(|(a, b)| a * b).sum();
        if self.bias {
            s + self.v[self.k()]
        } else {
            s
        }
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let bias = if self.bias { "1" } else { "0" };
        writeln!(
            w,
            "{}",
            artifact::header_line("model", &[("theta", self.theta_id.as_str()), ("bias", bias)])
        )?;
        writeln!(w, "{} {}", self.k(), self.lambda)?;
        artifact::write_floats(w, &self.v)?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R, name: &str) -> Result<Self> {
        let mut lines = Lines::new(reader, name);
        let fields = lines.expect_header("model")?;
        let field = |key: &str| fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
        let theta_id = field("theta").ok_or_else(|| lines.error("header lacks theta id"))?;
        let bias = match field("bias").as_deref() {
            Some("1") => true,
            Some("0") | None => false,
            Some(_) => return Err(lines.error("bias must be 0 or 1")),
        };
        let header = lines.expect_line()?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(lines.error("expected `k lambda`"));
        }
        let k: usize = parts[0].parse().map_err(|_| lines.error("bad k"))?;
        let lambda = artifact::parse_floats(&lines, &parts[1..])?[0];
        let line = lines.expect_line()?;
        let values: Vec<&str> = line.split_whitespace().collect();
        let want = k + usize::from(bias);
        if values.len() != want {
            return Err(lines.error(format!("expected {want} weights, found {}", values.len())));
        }
        let v = artifact::parse_floats(&lines, &values)?;
        Ok(FinalModel {
            v,
            lambda,
            bias,
            theta_id,
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

/// `Σ hinge(y vᵀz) + (λ/2)‖v‖²` over projected inputs.
pub fn final_objective(z: &[Vec<f64>], labels: &[Label], v: &[f64], lambda: f64) -> f64 {
    let data: f64 = z
        .iter()
        .zip(labels)
        .map(|(x, y)| {
            let s: f64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
            (1.0 - y.sign() * s).max(0.0)
        })
        .sum();
    data + 0.5 * lambda * v.iter().map(|a| a * a).sum::<f64>()
}

/// Trains on already projected inputs. With `bias` the constant feature is
/// appended here.
pub fn train_final_projected(z: &[Vec<f64>], labels: &[Label], theta_id: &str, cfg: &FinalConfig) -> Result<FinalModel> {
    if z.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if z.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            found: labels.len(),
        });
    }
    if !(cfg.lambda > 0.0) || !cfg.lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {}", cfg.lambda)));
    }
    if !labels.contains(&Label::Positive) || !labels.contains(&Label::Negative) {
        return Err(Error::SingleClass);
    }
    let k = z[0].len();
    if let Some(bad) = z.iter().find(|r| r.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: bad.len(),
        });
    }
    let width = k + usize::from(cfg.bias);
    let rows: Vec<Vec<f64>> = if cfg.bias {
        z.iter().map(|r| r.iter().copied().chain([1.0]).collect()).collect()
    } else {
        z.to_vec()
    };
    let indices: Vec<usize> = (0..width).collect();
    let samples: Vec<Sample> = rows
        .iter()
        .zip(labels)
        .map(|(r, y)| Sample {
            indices: &indices,
            values: r,
            label: y.sign(),
        })
        .collect();
    let n = samples.len() as f64;
    let reg = cfg.lambda / n;
    let lr = cfg.lr.min(0.5 / reg);
    let sgd_cfg = SgdConfig {
        epochs: cfg.epochs,
        lr,
        reg,
        seed: cfg.seed,
        fit_bias: false,
        average_from: 0.5,
    };
    let model = sgd::train(&samples, width, &Hinge, &sgd_cfg);
    if model.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidArgument("training diverged".into()));
    }
    Ok(FinalModel {
        v: model.weights,
        lambda: cfg.lambda,
        bias: cfg.bias,
        theta_id: theta_id.to_string(),
    })
}

/// Projects each labeled document and trains the final model.
pub fn train_final(labeled: &[Document], vocab: &Vocabulary, theta: &Projection, cfg: &FinalConfig) -> Result<FinalModel> {
    if labeled.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut z = Vec::with_capacity(labeled.len());
    let mut labels = Vec::with_capacity(labeled.len());
    for d in labeled {
        let y = d
            .label
            .ok_or_else(|| Error::InvalidArgument(format!("document {} has no label", d.id)))?;
        z.push(theta.project(&vectorize_or_zero(d, vocab))?);
        labels.push(y);
    }
    train_final_projected(&z, &labels, &theta.id(), cfg)
}

fn check_theta(model: &FinalModel, theta: &Projection) -> Result<()> {
    if model.k() != theta.k() {
        return Err(Error::DimensionMismatch {
            expected: theta.k(),
            found: model.k(),
        });
    }
    Ok(())
}

/// `vᵀ θ x`.
pub fn decision_value(model: &FinalModel, theta: &Projection, x: &BowVector) -> Result<f64> {
    check_theta(model, theta)?;
    Ok(model.score_projected(&theta.project(x)?))
}

/// Sign of the decision value; zero counts as positive.
pub fn predict(model: &FinalModel, theta: &Projection, x: &BowVector) -> Result<Label> {
    Ok(Label::from_sign(decision_value(model, theta, x)?))
}

pub fn predict_documents(model: &FinalModel, theta: &Projection, vocab: &Vocabulary, docs: &[Document]) -> Result<Vec<Label>> {
    use rayon::prelude::*;
    docs.par_iter()
        .map(|d| predict(model, theta, &vectorize_or_zero(d, vocab)))
        .collect()
}
