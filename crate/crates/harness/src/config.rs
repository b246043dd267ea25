//! Experiment configuration, the `paper-repro` preset and seed splitting.

use std::fs;
use std::path::{Path, PathBuf};

use dyloc_core::attacks::InversionSettings;
use dyloc_core::learn::{TrainSeeds, TrainSettings, Variant};
use dyloc_core::models::{DlsMode, ModelConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const PRESET_PAPER_REPRO: &str = "paper-repro";

/// Master seed of the `paper-repro` preset.
pub const PAPER_REPRO_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Train,
    AttackWeak,
    AttackStrong,
    Landscape,
    DlaInfo,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Train => "train",
            Experiment::AttackWeak => "attack-weak",
            Experiment::AttackStrong => "attack-strong",
            Experiment::Landscape => "landscape",
            Experiment::DlaInfo => "dla-info",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataSettings {
    pub samples: usize,
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSettings {
    /// Training steps accumulated before the first recovery attempt.
    pub probes: usize,
    pub inversion: InversionSettings,
    /// Window for the strong-attack initial guess, in mse_strong units.
    pub init_mse_min: f64,
    pub init_mse_max: f64,
    pub grid: usize,
    /// Dataset index of the attacked sample; drawn from the attack seed if absent.
    #[serde(default)]
    pub target: Option<usize>,
}

/// The five purpose seeds. Any seed left out is derived from `master`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SeedSpec {
    #[serde(default)]
    pub master: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scrambler: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub data: u64,
    pub init: u64,
    pub scrambler: u64,
    pub noise: u64,
    pub attack: u64,
}

impl SeedSpec {
    pub fn from_master(master: u64) -> Self {
        Self {
            master,
            ..Self::default()
        }
    }

    /// Draws five words from a ChaCha8 stream keyed by the master seed, in
    /// the fixed order data, init, scrambler, noise, attack; explicit seeds
    /// override their slot without shifting the others.
    pub fn resolve(&self) -> Seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        let derived: [u64; 5] = std::array::from_fn(|_| rng.random());
        Seeds {
            data: self.data.unwrap_or(derived[0]),
            init: self.init.unwrap_or(derived[1]),
            scrambler: self.scrambler.unwrap_or(derived[2]),
            noise: self.noise.unwrap_or(derived[3]),
            attack: self.attack.unwrap_or(derived[4]),
        }
    }
}

impl Seeds {
    pub fn train(&self) -> TrainSeeds {
        TrainSeeds {
            init: self.init,
            scrambler: self.scrambler,
            noise: self.noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Model used by the Standard and QDP variants.
    pub baseline_model: ModelConfig,
    /// Model used by the DyLoC variant.
    pub dyloc_model: ModelConfig,
    pub variants: Vec<Variant>,
    pub data: DataSettings,
    pub train: TrainSettings,
    pub attack: AttackSettings,
    pub seeds: SeedSpec,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// n = 3, K = 2, L = 2, δ = 0.3, λ = 0.15, 150 samples at σ = 0.05,
    /// 100 training steps, 300 inversion iterations, a 41×41 grid.
    pub fn paper_repro(experiment: Experiment) -> Self {
        let (n, d, layers) = (3, 2, 2);
        Self {
            experiment,
            baseline_model: ModelConfig::baseline(n, d, layers),
            dyloc_model: ModelConfig::dyloc(n, d, layers, 2, DlsMode::Perturbative { delta: 0.3 }),
            variants: Variant::ALL.to_vec(),
            data: DataSettings {
                samples: 150,
                noise_sigma: 0.05,
            },
            train: TrainSettings {
                steps: 100,
                lr: 0.05,
                init_scale: 0.1,
                qdp_lambda: 0.15,
            },
            attack: AttackSettings {
                probes: 4,
                inversion: InversionSettings {
                    iters: 300,
                    lr: 0.1,
                    h: 1e-4,
                },
                init_mse_min: 2.0,
                init_mse_max: 3.0,
                grid: 41,
                target: None,
            },
            seeds: SeedSpec::from_master(PAPER_REPRO_SEED),
            out_dir: PathBuf::from("out"),
        }
    }

    pub fn preset(name: &str, experiment: Experiment) -> Result<Self, HarnessError> {
        match name {
            PRESET_PAPER_REPRO => Ok(Self::paper_repro(experiment)),
            other => Err(HarnessError::UnknownPreset(other.into())),
        }
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serialises");
        s.push('\n');
        s
    }

    pub fn model_for(&self, variant: Variant) -> &ModelConfig {
        match variant {
            Variant::Standard | Variant::Qdp => &self.baseline_model,
            Variant::Dyloc => &self.dyloc_model,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        for m in [&self.baseline_model, &self.dyloc_model] {
            m.validate()?;
        }
        let (b, d) = (&self.baseline_model, &self.dyloc_model);
        if (b.n_qubits, b.feature_dim, b.ansatz_layers)
            != (d.n_qubits, d.feature_dim, d.ansatz_layers)
            || b.observable != d.observable
        {
            return bad(
                "baseline and dyloc models must share n_qubits, feature_dim, layers and observable"
                    .into(),
            );
        }
        if b.feature_dim != 2 {
            return bad(format!(
                "the two-moons data has 2 features, model expects {}",
                b.feature_dim
            ));
        }
        if self.variants.is_empty() {
            return bad("at least one variant is required".into());
        }
        if self.data.samples < 2 {
            return bad("at least two samples are required".into());
        }
        if let Some(t) = self.attack.target {
            if t >= self.data.samples {
                return bad(format!(
                    "target {t} outside a dataset of {}",
                    self.data.samples
                ));
            }
        }
        if self.attack.probes == 0 || self.attack.probes > self.train.steps {
            return bad(format!(
                "probes = {} must lie in 1..={}",
                self.attack.probes, self.train.steps
            ));
        }
        if self.attack.init_mse_min > self.attack.init_mse_max {
            return bad("init_mse_min exceeds init_mse_max".into());
        }
        Ok(())
    }
}
