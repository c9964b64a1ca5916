//! Averaged stochastic gradient descent for L2-regularized linear models on
//! sparse inputs.
//!
//! The objective is `(1/n) Σ L(y_i (w·x_i + b)) + (reg/2) ‖w‖²`. Weight decay
//! and iterate averaging are applied lazily through scalar divisors, so a
//! step costs O(nnz(x)) regardless of the dimension.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Margin-based loss `L(z)` with `z = y · score`.
pub trait Loss: Sync {
    fn loss(&self, z: f64) -> f64;
    /// `-dL/dz`, non-negative for the losses here.
    fn dloss(&self, z: f64) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Hinge;

impl Loss for Hinge {
    fn loss(&self, z: f64) -> f64 {
        (1.0 - z).max(0.0)
    }
    fn dloss(&self, z: f64) -> f64 {
        if z < 1.0 {
            1.0
        } else {
            0.0
        }
    }
}

/// Quadratically smoothed hinge with smoothing width `gamma`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothHinge {
    pub gamma: f64,
}

impl Loss for SmoothHinge {
    fn loss(&self, z: f64) -> f64 {
        if z >= 1.0 {
            0.0
        } else if z <= 1.0 - self.gamma {
            1.0 - z - self.gamma / 2.0
        } else {
            (1.0 - z).powi(2) / (2.0 * self.gamma)
        }
    }
    fn dloss(&self, z: f64) -> f64 {
        if z >= 1.0 {
            0.0
        } else if z <= 1.0 - self.gamma {
            1.0
        } else {
            (1.0 - z) / self.gamma
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ModifiedHuber;

impl Loss for ModifiedHuber {
    fn loss(&self, z: f64) -> f64 {
        if z >= 1.0 {
            0.0
        } else if z >= -1.0 {
            (1.0 - z).powi(2)
        } else {
            -4.0 * z
        }
    }
    fn dloss(&self, z: f64) -> f64 {
        if z >= 1.0 {
            0.0
        } else if z >= -1.0 {
            2.0 * (1.0 - z)
        } else {
            4.0
        }
    }
}

/// A training example borrowed from sparse storage.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
    /// +1 or -1.
    pub label: f64,
}

impl Sample<'_> {
    fn dot(&self, w: &[f64]) -> f64 {
        self.indices.iter().zip(self.values).map(|(&i, &v)| w[i] * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdConfig {
    pub epochs: usize,
    /// Initial step size; decays as `lr / (1 + lr·reg·t)`.
    pub lr: f64,
    pub reg: f64,
    pub seed: u64,
    pub fit_bias: bool,
    /// Fraction of the total steps after which iterate averaging starts.
    pub average_from: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn score(&self, sample: &Sample<'_>) -> f64 {
        sample.dot(&self.weights) + self.bias
    }
}

pub fn objective<L: Loss>(samples: &[Sample<'_>], model: &LinearModel, reg: f64, loss: &L) -> f64 {
    let data: f64 = samples.iter().map(|s| loss.loss(s.label * model.score(s))).sum();
    let norm2: f64 = model.weights.iter().map(|w| w * w).sum();
    data / samples.len() as f64 + 0.5 * reg * norm2
}

/// Gradient of [`objective`] with respect to `(weights, bias)`.
pub fn gradient<L: Loss>(samples: &[Sample<'_>], model: &LinearModel, reg: f64, loss: &L) -> (Vec<f64>, f64) {
    let n = samples.len() as f64;
    let mut grad: Vec<f64> = model.weights.iter().map(|w| reg * w).collect();
    let mut gb = 0.0;
    for s in samples {
        let g = -loss.dloss(s.label * model.score(s)) * s.label / n;
        for (&i, &v) in s.indices.iter().zip(s.values) {
            grad[i] += g * v;
        }
        gb += g;
    }
    (grad, gb)
}

/// Sparse weights with lazy scaling: `w = raw / w_div` and the running
/// average `a = (avg_raw + w_frac · raw) / a_div`.
struct AveragedWeights {
    raw: Vec<f64>,
    w_div: f64,
    avg_raw: Vec<f64>,
    a_div: f64,
    w_frac: f64,
    bias: f64,
    avg_bias: f64,
}

impl AveragedWeights {
    fn new(dim: usize) -> Self {
        AveragedWeights {
            raw: vec![0.0; dim],
            w_div: 1.0,
            avg_raw: vec![0.0; dim],
            a_div: 1.0,
            w_frac: 0.0,
            bias: 0.0,
            avg_bias: 0.0,
        }
    }

    fn renormalize(&mut self) {
        if self.w_div == 1.0 && self.a_div == 1.0 && self.w_frac == 0.0 {
            return;
        }
        for (a, w) in self.avg_raw.iter_mut().zip(&self.raw) {
            *a = (*a + self.w_frac * w) / self.a_div;
        }
        for w in &mut self.raw {
            *w /= self.w_div;
        }
        self.w_div = 1.0;
        self.a_div = 1.0;
        self.w_frac = 0.0;
    }

    /// Averaging step with rate `mu` in (0, 1).
    fn step<L: Loss>(&mut self, s: &Sample<'_>, loss: &L, eta: f64, reg: f64, mu: f64, fit_bias: bool) {
        if self.w_div > 1e5 || self.a_div > 1e5 {
            self.renormalize();
        }
        let score = s.dot(&self.raw) / self.w_div + self.bias;
        self.w_div /= 1.0 - eta * reg;
        let d = loss.dloss(s.label * score);
        if d != 0.0 {
            let etd = eta * d * s.label * self.w_div;
            for (&i, &v) in s.indices.iter().zip(s.values) {
                self.raw[i] += etd * v;
            }
            let shift = -self.w_frac * etd;
            for (&i, &v) in s.indices.iter().zip(s.values) {
                self.avg_raw[i] += shift * v;
            }
            if fit_bias {
                self.bias += eta * d * s.label;
            }
        }
        self.a_div /= 1.0 - mu;
        self.w_frac += mu * self.a_div / self.w_div;
        self.avg_bias += mu * (self.bias - self.avg_bias);
    }

    fn averaged(mut self) -> LinearModel {
        self.renormalize();
        LinearModel {
            weights: self.avg_raw,
            bias: self.avg_bias,
        }
    }
}

/// Trains a linear model with averaged SGD over shuffled epochs.
///
/// Panics unless `lr · reg < 1`, which keeps every decay factor positive.
pub fn train<L: Loss>(samples: &[Sample<'_>], dim: usize, loss: &L, cfg: &SgdConfig) -> LinearModel {
    assert!(cfg.lr * cfg.reg < 1.0, "lr * reg must be below 1");
    let mut state = AveragedWeights::new(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let total = cfg.epochs * samples.len();
    let start = ((cfg.average_from.clamp(0.0, 1.0) * total as f64) as usize).min(total.saturating_sub(1));
    let mut t = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = cfg.lr / (1.0 + cfg.lr * cfg.reg * t as f64);
            if t <= start {
                // The average restarts at the iterate when averaging begins.
                state.step_pre_average(&samples[i], loss, eta, cfg.reg, cfg.fit_bias);
            } else {
                let mu = 1.0 / (t - start + 1) as f64;
                state.step(&samples[i], loss, eta, cfg.reg, mu, cfg.fit_bias);
            }
            t += 1;
        }
    }
    state.averaged()
}

impl AveragedWeights {
    /// Plain SGD step used before averaging starts; the average is
    /// materialized lazily as `a = w` when the averaging phase begins.
    fn step_pre_average<L: Loss>(&mut self, s: &Sample<'_>, loss: &L, eta: f64, reg: f64, fit_bias: bool) {
        if self.w_div > 1e5 {
            for w in &mut self.raw {
                *w /= self.w_div;
            }
            self.w_div = 1.0;
        }
        let score = s.dot(&self.raw) / self.w_div + self.bias;
        self.w_div /= 1.0 - eta * reg;
        let d = loss.dloss(s.label * score);
        if d != 0.0 {
            let etd = eta * d * s.label * self.w_div;
            for (&i, &v) in s.indices.iter().zip(s.values) {
                self.raw[i] += etd * v;
            }
            if fit_bias {
                self.bias += eta * d * s.label;
            }
        }
        // a = w in the divisor representation, with avg_raw = 0.
        self.a_div = self.w_div;
        self.w_frac = 1.0;
        self.avg_bias = self.bias;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn dense_samples(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> (Vec<usize>, Vec<Vec<f64>>, Vec<f64>) {
        let idx: Vec<usize> = (0..dim).collect();
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| if x[0] + 0.3 * x[1] > 0.0 { 1.0 } else { -1.0 }).collect();
        (idx, xs, ys)
    }

    #[test]
    fn losses_are_consistent_with_derivatives() {
        let losses: Vec<Box<dyn Fn(f64) -> (f64, f64)>> = vec![
            Box::new(|z| (ModifiedHuber.loss(z), ModifiedHuber.dloss(z))),
            Box::new(|z| (SmoothHinge { gamma: 0.5 }.loss(z), SmoothHinge { gamma: 0.5 }.dloss(z))),
        ];
        for f in &losses {
            for k in -40..40 {
                let z = k as f64 * 0.073 + 0.01;
                let h = 1e-6;
                let fd = (f(z + h).0 - f(z - h).0) / (2.0 * h);
                assert!((-fd - f(z).1).abs() < 1e-6, "z={z}");
            }
        }
        assert_eq!(Hinge.loss(2.0), 0.0);
        assert_eq!(Hinge.loss(-1.0), 2.0);
    }

    #[test]
    fn lazy_averaging_matches_dense_reference() {
        // Reference: explicit dense ASGD with identical schedule.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (idx, xs, ys) = dense_samples(&mut rng, 25, 6);
        let samples: Vec<Sample> = xs
            .iter()
            .zip(&ys)
            .map(|(x, &y)| Sample { indices: &idx, values: x, label: y })
            .collect();
        let cfg = SgdConfig { epochs: 7, lr: 0.3, reg: 0.05, seed: 3, fit_bias: true, average_from: 0.4 };
        let got = train(&samples, 6, &ModifiedHuber, &cfg);

        let mut w = vec![0.0; 6];
        let mut b = 0.0;
        let mut a = vec![0.0; 6];
        let mut ab = 0.0;
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let total = cfg.epochs * samples.len();
        let start = (cfg.average_from * total as f64) as usize;
        let mut t = 0;
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let eta = cfg.lr / (1.0 + cfg.lr * cfg.reg * t as f64);
                let s = &samples[i];
                let score: f64 = s.values.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() + b;
                let d = ModifiedHuber.dloss(s.label * score);
                for j in 0..6 {
                    w[j] = (1.0 - eta * cfg.reg) * w[j] + eta * d * s.label * s.values[j];
                }
                b += eta * d * s.label;
                let mu = if t < start { 1.0 } else { 1.0 / (t - start + 1) as f64 };
                for j in 0..6 {
                    a[j] += mu * (w[j] - a[j]);
                }
                ab += mu * (b - ab);
                t += 1;
            }
        }
        for j in 0..6 {
            assert!((got.weights[j] - a[j]).abs() < 1e-12, "{j}: {} vs {}", got.weights[j], a[j]);
        }
        assert!((got.bias - ab).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (idx, xs, ys) = dense_samples(&mut rng, 15, 4);
        let samples: Vec<Sample> = xs
            .iter()
            .zip(&ys)
            .map(|(x, &y)| Sample { indices: &idx, values: x, label: y })
            .collect();
        let model = LinearModel { weights: vec![0.3, -0.2, 0.5, 0.1], bias: 0.05 };
        let (g, gb) = gradient(&samples, &model, 0.1, &ModifiedHuber);
        let h = 1e-6;
        for j in 0..4 {
            let mut p = model.clone();
            p.weights[j] += h;
            let mut m = model.clone();
            m.weights[j] -= h;
            let fd = (objective(&samples, &p, 0.1, &ModifiedHuber) - objective(&samples, &m, 0.1, &ModifiedHuber)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-6);
        }
        let mut p = model.clone();
        p.bias += h;
        let mut m = model.clone();
        m.bias -= h;
        let fd = (objective(&samples, &p, 0.1, &ModifiedHuber) - objective(&samples, &m, 0.1, &ModifiedHuber)) / (2.0 * h);
        assert!((fd - gb).abs() < 1e-6);
    }

    #[test]
    fn zero_epochs_gives_zero_model() {
        let m = train(&[], 3, &Hinge, &SgdConfig { epochs: 0, lr: 0.1, reg: 0.1, seed: 0, fit_bias: false, average_from: 0.5 });
        assert_eq!(m.weights, vec![0.0; 3]);
    }
}
