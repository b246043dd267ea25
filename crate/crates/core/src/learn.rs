//! Dataset, loss, gradients, Adam and the three training variants.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{sample_scrambler, DlsMode, Model, ModelError, ScramblerSample};
use crate::qsim::StateVector;
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("noise sigma must be finite and non-negative, got {0}")]
    BadNoise(f64),
    #[error("feature {0} has a degenerate range (max = min)")]
    DegenerateFeature(usize),
    #[error("empty dataset")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("steps must be at least 1")]
    NoSteps,
    #[error("unknown variant {0:?} (expected standard, qdp or dyloc)")]
    UnknownVariant(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Labelled two-dimensional point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }
}

/// Two interleaving half circles. The first `⌈n/2⌉` points are labelled +1.
pub fn make_moons(n_samples: usize, noise_sigma: f64, seed: u64) -> Result<Dataset, LearnError> {
    if n_samples < 2 {
        return Err(LearnError::TooFewSamples(n_samples));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(LearnError::BadNoise(noise_sigma));
    }
    let n1 = n_samples.div_ceil(2);
    let n2 = n_samples / 2;
    let t = |i: usize, m: usize| {
        if m > 1 {
            PI * i as f64 / (m - 1) as f64
        } else {
            0.0
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma).map_err(|_| LearnError::BadNoise(noise_sigma))?;
    let mut features = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for i in 0..n1 {
        let s = t(i, n1);
        features.push(vec![s.cos(), s.sin()]);
        labels.push(1.0);
    }
    for i in 0..n2 {
        let s = t(i, n2);
        features.push(vec![1.0 - s.cos(), 0.5 - s.sin()]);
        labels.push(-1.0);
    }
    for p in &mut features {
        for v in p.iter_mut() {
            *v += noise.sample(&mut rng);
        }
    }
    Ok(Dataset {
        features,
        labels,
        noise_sigma,
        seed,
    })
}

/// Per-feature affine map of the dataset range onto `[0, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit(data: &Dataset) -> Result<Self, LearnError> {
        let d = data.feature_dim();
        if data.is_empty() || d == 0 {
            return Err(LearnError::Empty);
        }
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for p in &data.features {
            for (j, &v) in p.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        if let Some(j) = (0..d).find(|&j| max[j] <= min[j]) {
            return Err(LearnError::DegenerateFeature(j));
        }
        Ok(Self { min, max })
    }

    pub fn scale(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, &v)| PI * (v - self.min[j]) / (self.max[j] - self.min[j]))
            .collect()
    }

    pub fn unscale(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(j, &v)| self.min[j] + v / PI * (self.max[j] - self.min[j]))
            .collect()
    }
}

/// `(1/N) Σ (y_i − label_i)²`.
pub fn mse_loss(predictions: &[f64], labels: &[f64]) -> Result<f64, LearnError> {
    if predictions.len() != labels.len() {
        return Err(LearnError::LengthMismatch(predictions.len(), labels.len()));
    }
    if labels.is_empty() {
        return Err(LearnError::Empty);
    }
    let s: f64 = predictions
        .iter()
        .zip(labels)
        .map(|(y, l)| (y - l) * (y - l))
        .sum();
    Ok(s / labels.len() as f64)
}

/// Full-batch quadratic loss of a model over pre-encoded inputs.
#[derive(Debug, Clone)]
pub struct Objective<'m> {
    model: &'m Model,
    states: Vec<StateVector<f64>>,
    labels: Vec<f64>,
}

impl<'m> Objective<'m> {
    /// `inputs` are scaled features in `[0, π]^d`.
    pub fn new(model: &'m Model, inputs: &[Vec<f64>], labels: &[f64]) -> Result<Self, LearnError> {
        if inputs.len() != labels.len() {
            return Err(LearnError::LengthMismatch(inputs.len(), labels.len()));
        }
        if inputs.is_empty() {
            return Err(LearnError::Empty);
        }
        let states = inputs
            .par_iter()
            .map(|u| model.encoded_state(u))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            model,
            states,
            labels: labels.to_vec(),
        })
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn predictions(
        &self,
        theta: &[f64],
        w: Option<&ScramblerSample>,
    ) -> Result<Vec<f64>, LearnError> {
        Ok(self
            .states
            .par_iter()
            .map(|s| self.model.output_from_state(s, theta, w))
            .collect::<Result<Vec<_>, _>>()?)
    }

    pub fn loss(&self, theta: &[f64], w: Option<&ScramblerSample>) -> Result<f64, LearnError> {
        mse_loss(&self.predictions(theta, w)?, &self.labels)
    }

    /// Loss and its exact gradient: per-sample parameter-shift derivatives
    /// weighted by `2(y_i − label_i)/N`.
    pub fn loss_and_grad(
        &self,
        theta: &[f64],
        w: Option<&ScramblerSample>,
    ) -> Result<(f64, Vec<f64>), LearnError> {
        let per_sample = self
            .states
            .par_iter()
            .map(|s| self.model.output_and_grad_from_state(s, theta, w))
            .collect::<Result<Vec<_>, _>>()?;
        let n = self.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; theta.len()];
        for ((y, g), l) in per_sample.iter().zip(&self.labels) {
            let r = y - l;
            loss += r * r;
            for (acc, gk) in grad.iter_mut().zip(g) {
                *acc += 2.0 * r * gk / n;
            }
        }
        Ok((loss / n, grad))
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T: Real> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    m: Vec<T>,
    v: Vec<T>,
    t: u32,
}

impl<T: Real> Adam<T> {
    pub fn new(dim: usize, lr: T) -> Self {
        Self {
            lr,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            m: vec![T::zero(); dim],
            v: vec![T::zero(); dim],
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> u32 {
        self.t
    }

    pub fn moments(&self) -> (&[T], &[T]) {
        (&self.m, &self.v)
    }

    /// Updates `theta` in place.
    pub fn step(&mut self, theta: &mut [T], grad: &[T]) {
        assert_eq!(theta.len(), self.m.len(), "parameter dimension");
        assert_eq!(grad.len(), self.m.len(), "gradient dimension");
        self.t += 1;
        let one = T::one();
        let c1 = one - self.beta1.powi(self.t as i32);
        let c2 = one - self.beta2.powi(self.t as i32);
        for (k, &g) in grad.iter().enumerate() {
            self.m[k] = self.beta1 * self.m[k] + (one - self.beta1) * g;
            self.v[k] = self.beta2 * self.v[k] + (one - self.beta2) * g * g;
            let mh = self.m[k] / c1;
            let vh = self.v[k] / c2;
            theta[k] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// One draw from Laplace(0, λ) by inverting the CDF.
pub fn sample_laplace<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    -lambda * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// `grad + Laplace(0, λ)` per component.
pub fn qdp_perturb<R: Rng + ?Sized>(grad: &[f64], lambda: f64, rng: &mut R) -> Vec<f64> {
    if lambda == 0.0 {
        return grad.to_vec();
    }
    grad.iter()
        .map(|g| g + sample_laplace(lambda, rng))
        .collect()
}

/// `(1/D)‖g_real − g_static‖²`.
pub fn weak_mse(grad_real: &[f64], grad_static: &[f64]) -> Result<f64, LearnError> {
    if grad_real.len() != grad_static.len() {
        return Err(LearnError::LengthMismatch(
            grad_real.len(),
            grad_static.len(),
        ));
    }
    if grad_real.is_empty() {
        return Ok(0.0);
    }
    let s: f64 = grad_real
        .iter()
        .zip(grad_static)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(s / grad_real.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Standard,
    Qdp,
    Dyloc,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Standard, Variant::Qdp, Variant::Dyloc];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Qdp => "qdp",
            Variant::Dyloc => "dyloc",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = LearnError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(Variant::Standard),
            "qdp" => Ok(Variant::Qdp),
            "dyloc" => Ok(Variant::Dyloc),
            _ => Err(LearnError::UnknownVariant(s.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub steps: usize,
    pub lr: f64,
    /// Initial parameters are drawn from `U[−init_scale, init_scale]`.
    pub init_scale: f64,
    pub qdp_lambda: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            steps: 100,
            lr: 0.05,
            init_scale: 0.1,
            qdp_lambda: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainSeeds {
    pub init: u64,
    pub scrambler: u64,
    pub noise: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub step: usize,
    /// Loss the trainer observes at `theta` (with `W_t` applied for DyLoC).
    pub loss: f64,
    /// Loss of the unscrambled model at `theta`.
    pub static_loss: f64,
    /// Parameters at which the step's gradients were taken.
    pub theta: Vec<f64>,
    /// Gradient released by the trainer (scrambled or noised per variant).
    pub grad_real: Vec<f64>,
    /// Gradient of the unscrambled, noise-free model at `theta`.
    pub grad_static: Vec<f64>,
    pub scrambler: Option<ScramblerSample>,
    pub mse_weak: f64,
}

/// Runs `settings.steps` full-batch Adam steps.
///
/// Standard releases the static gradient, QDP adds Laplace noise to it, and
/// DyLoC draws a fresh scrambler each step and trains on the scrambled
/// gradient. The DyLoC scrambler follows the model's `dls_mode`.
pub fn train(
    objective: &Objective<'_>,
    variant: Variant,
    settings: &TrainSettings,
    seeds: &TrainSeeds,
) -> Result<Vec<TrainRecord>, LearnError> {
    if settings.steps == 0 {
        return Err(LearnError::NoSteps);
    }
    let model = objective.model();
    let d = model.num_params();
    let mut init_rng = ChaCha8Rng::seed_from_u64(seeds.init);
    let mut theta: Vec<f64> = (0..d)
        .map(|_| {
            if settings.init_scale > 0.0 {
                init_rng.random_range(-settings.init_scale..=settings.init_scale)
            } else {
                0.0
            }
        })
        .collect();
    let mut scr_rng = ChaCha8Rng::seed_from_u64(seeds.scrambler);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seeds.noise);
    let mut adam = Adam::new(d, settings.lr);
    let mut records = Vec::with_capacity(settings.steps);
    for step in 0..settings.steps {
        let (static_loss, grad_static) = objective.loss_and_grad(&theta, None)?;
        let (loss, grad_real, scrambler) = match variant {
            Variant::Standard => (static_loss, grad_static.clone(), None),
            Variant::Qdp => (
                static_loss,
                qdp_perturb(&grad_static, settings.qdp_lambda, &mut noise_rng),
                None,
            ),
            Variant::Dyloc => {
                let w = match model.config().dls_mode {
                    DlsMode::Off => ScramblerSample::identity(model.n_qubits(), step),
                    mode => sample_scrambler(mode, model.n_qubits(), step, &mut scr_rng)?,
                };
                let (l, g) = objective.loss_and_grad(&theta, Some(&w))?;
                (l, g, Some(w))
            }
        };
        let mse_weak = weak_mse(&grad_real, &grad_static)?;
        records.push(TrainRecord {
            step,
            loss,
            static_loss,
            theta: theta.clone(),
            grad_real: grad_real.clone(),
            grad_static,
            scrambler,
            mse_weak,
        });
        adam.step(&mut theta, &grad_real);
    }
    Ok(records)
}
