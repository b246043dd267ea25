//! Baseline and DyLoC model builders.
//!
//! Inputs reach the circuits as scaled features `u ∈ [0, π]^d` (see
//! [`crate::learn::FeatureScaler`]); every encoder and attack works in that
//! domain.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dla::conjugate::conjugate_local;
use crate::dla::{
    evolve_backward, lie_closure, observable_module, DlaBasis, DlaError, DEFAULT_DIM_CAP,
};
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::qsim::{Circuit, CircuitOp, GateOp, Mat2, QsimError, StateVector};

/// Bound of the interval TCGE maps features into before `arccos`.
pub const TCGE_RANGE: f64 = 0.95;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("expected {expected} features, got {got}")]
    FeatureDim { expected: usize, got: usize },
    #[error("expected {expected} encoding angles, got {got}")]
    AngleCount { expected: usize, got: usize },
    #[error("scrambler sample covers {got} qubits, model has {expected}")]
    ScramblerSize { expected: usize, got: usize },
    #[error("scrambling is switched off")]
    ScramblingOff,
    #[error("TCGE needs at least two qubits")]
    TcgeTooSmall,
    #[error("fixed gates of the ansatz are not Clifford: {0} does not map to a single word")]
    NonCliffordFixedGate(String),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    Dla(#[from] DlaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    ProductRx,
    Tcge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum DlsMode {
    Off,
    Perturbative { delta: f64 },
    Haar,
}

/// Which feature drives which qubit when `d < n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureTiling {
    /// Qubit `j` reads feature `j mod d`.
    #[default]
    Modulo,
    /// Qubit `j` reads feature `⌊j·d/n⌋`, so each feature drives a contiguous block.
    Block,
}

impl FeatureTiling {
    pub fn feature_for(self, qubit: usize, n_qubits: usize, d: usize) -> usize {
        match self {
            FeatureTiling::Modulo => qubit % d,
            FeatureTiling::Block => qubit * d / n_qubits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_qubits: usize,
    pub encoder: EncoderKind,
    pub tower_orders: Vec<u32>,
    pub max_order: u32,
    pub ansatz_layers: usize,
    pub dls_mode: DlsMode,
    pub observable: PauliString,
    pub feature_dim: usize,
    #[serde(default)]
    pub tiling: FeatureTiling,
    pub rng_seed: u64,
}

/// Truncated tower `k_j = min(j + 1, K)`.
pub fn default_tower_orders(n_qubits: usize, max_order: u32) -> Vec<u32> {
    (0..n_qubits)
        .map(|j| (j as u32 + 1).min(max_order.max(1)))
        .collect()
}

/// Cyclic tower `k_j = (j mod K) + 1`.
pub fn cyclic_tower_orders(n_qubits: usize, max_order: u32) -> Vec<u32> {
    (0..n_qubits)
        .map(|j| (j as u32 % max_order.max(1)) + 1)
        .collect()
}

impl ModelConfig {
    /// Restricted-HEA baseline: product RX encoding, no scrambling, `O = Z…Z`.
    pub fn baseline(n_qubits: usize, feature_dim: usize, ansatz_layers: usize) -> Self {
        Self {
            n_qubits,
            encoder: EncoderKind::ProductRx,
            tower_orders: default_tower_orders(n_qubits, 2),
            max_order: 2,
            ansatz_layers,
            dls_mode: DlsMode::Off,
            observable: PauliString::all_z(n_qubits),
            feature_dim,
            tiling: FeatureTiling::Modulo,
            rng_seed: 0,
        }
    }

    /// TCGE encoding with Chebyshev orders up to `max_order` plus scrambling.
    pub fn dyloc(
        n_qubits: usize,
        feature_dim: usize,
        ansatz_layers: usize,
        max_order: u32,
        dls_mode: DlsMode,
    ) -> Self {
        Self {
            encoder: EncoderKind::Tcge,
            tower_orders: default_tower_orders(n_qubits, max_order),
            max_order,
            dls_mode,
            ..Self::baseline(n_qubits, feature_dim, ansatz_layers)
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        if self.n_qubits == 0 || self.n_qubits > crate::qsim::MAX_QUBITS {
            return bad(format!(
                "n_qubits = {} outside 1..={}",
                self.n_qubits,
                crate::qsim::MAX_QUBITS
            ));
        }
        if self.feature_dim == 0 {
            return bad("feature_dim must be positive".into());
        }
        if self.ansatz_layers == 0 {
            return bad("ansatz_layers must be at least 1".into());
        }
        if self.tower_orders.len() != self.n_qubits {
            return bad(format!(
                "{} tower orders for {} qubits",
                self.tower_orders.len(),
                self.n_qubits
            ));
        }
        if let Some(k) = self
            .tower_orders
            .iter()
            .find(|&&k| k == 0 || k > self.max_order)
        {
            return bad(format!("tower order {k} outside 1..={}", self.max_order));
        }
        if let DlsMode::Perturbative { delta } = self.dls_mode {
            if delta.is_nan() || delta < 0.0 {
                return bad(format!("delta = {delta} must be non-negative"));
            }
        }
        if self.observable.n_qubits() != self.n_qubits {
            return bad(format!(
                "observable acts on {} qubits",
                self.observable.n_qubits()
            ));
        }
        if self.observable.coeff().im != 0 {
            return bad("observable must be Hermitian".into());
        }
        if self.encoder == EncoderKind::Tcge && self.n_qubits < 2 {
            return Err(ModelError::TcgeTooSmall);
        }
        Ok(())
    }
}

/// `φ = 2k·arccos(x)` for `x ∈ [−1, 1]`.
pub fn tcge_angle(x_mapped: f64, order: u32) -> f64 {
    2.0 * order as f64 * x_mapped.clamp(-1.0, 1.0).acos()
}

/// Affine map `[0, π] → [−0.95, 0.95]`.
pub fn tcge_map(u: f64) -> f64 {
    -TCGE_RANGE + 2.0 * TCGE_RANGE * u / PI
}

/// Per-qubit encoding angles for scaled features `u`.
pub fn map_features(config: &ModelConfig, u: &[f64]) -> Result<Vec<f64>, ModelError> {
    if u.len() != config.feature_dim {
        return Err(ModelError::FeatureDim {
            expected: config.feature_dim,
            got: u.len(),
        });
    }
    Ok((0..config.n_qubits)
        .map(|j| {
            let f = u[config
                .tiling
                .feature_for(j, config.n_qubits, config.feature_dim)];
            match config.encoder {
                EncoderKind::ProductRx => f,
                EncoderKind::Tcge => tcge_angle(tcge_map(f), config.tower_orders[j]),
            }
        })
        .collect())
}

fn cz_ladder(c: &mut Circuit<f64>, reversed: bool) -> Result<(), QsimError> {
    let n = c.n_qubits();
    let pairs: Vec<usize> = if reversed {
        (0..n - 1).rev().collect()
    } else {
        (0..n - 1).collect()
    };
    for j in pairs {
        c.push(GateOp::Cz(j, j + 1))?;
    }
    Ok(())
}

/// Encoder circuit for precomputed per-qubit angles.
///
/// TCGE is `H^{⊗n}`, CZ ladder, `RY(φ_j)` per qubit, then the ladder reversed.
pub fn build_encoder(config: &ModelConfig, angles: &[f64]) -> Result<Circuit<f64>, ModelError> {
    if angles.len() != config.n_qubits {
        return Err(ModelError::AngleCount {
            expected: config.n_qubits,
            got: angles.len(),
        });
    }
    let n = config.n_qubits;
    let mut c = Circuit::new(n)?;
    match config.encoder {
        EncoderKind::ProductRx => {
            for (q, &a) in angles.iter().enumerate() {
                c.push(GateOp::Rx(q, a))?;
            }
        }
        EncoderKind::Tcge => {
            if n < 2 {
                return Err(ModelError::TcgeTooSmall);
            }
            for q in 0..n {
                c.push(GateOp::H(q))?;
            }
            cz_ladder(&mut c, false)?;
            for (q, &a) in angles.iter().enumerate() {
                c.push(GateOp::Ry(q, a))?;
            }
            cz_ladder(&mut c, true)?;
        }
    }
    Ok(c)
}

/// `L × [RY(θ) on every qubit, CZ chain]`.
pub fn build_ansatz(config: &ModelConfig) -> Result<Circuit<f64>, ModelError> {
    let mut c = Circuit::new(config.n_qubits)?;
    for _ in 0..config.ansatz_layers {
        for q in 0..config.n_qubits {
            c.push_param_rotation(Pauli::Y, q)?;
        }
        cz_ladder(&mut c, false)?;
    }
    Ok(c)
}

/// One draw of the local scrambling layer `W_t = ⊗_q RZ(a)·RY(b)·RZ(c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScramblerSample {
    pub step: usize,
    /// `(a, b, c)` per qubit.
    pub euler: Vec<[f64; 3]>,
}

impl ScramblerSample {
    pub fn identity(n_qubits: usize, step: usize) -> Self {
        Self {
            step,
            euler: vec![[0.0; 3]; n_qubits],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.euler.len()
    }

    /// The 2×2 block acting on `qubit`.
    pub fn unitary(&self, qubit: usize) -> Mat2<f64> {
        let [a, b, c] = self.euler[qubit];
        let rz = |t: f64| GateOp::Rz(0, t).matrix1().expect("single-qubit");
        let ry = GateOp::Ry(0, b).matrix1().expect("single-qubit");
        mat2_mul3(&rz(a), &ry, &rz(c))
    }

    /// Gates realising `W` on a register, in application order.
    pub fn gates(&self) -> Vec<GateOp<f64>> {
        self.euler
            .iter()
            .enumerate()
            .flat_map(|(q, &[a, b, c])| [GateOp::Rz(q, c), GateOp::Ry(q, b), GateOp::Rz(q, a)])
            .collect()
    }

    pub fn apply_to(&self, state: &mut StateVector<f64>) -> Result<(), QsimError> {
        for g in self.gates() {
            state.apply(&g)?;
        }
        Ok(())
    }
}

fn mat2_mul3(a: &Mat2<f64>, b: &Mat2<f64>, c: &Mat2<f64>) -> Mat2<f64> {
    crate::qsim::mat2_mul(&crate::qsim::mat2_mul(a, b), c)
}

/// Fresh scrambler for training step `step`.
pub fn sample_scrambler<R: Rng + ?Sized>(
    mode: DlsMode,
    n_qubits: usize,
    step: usize,
    rng: &mut R,
) -> Result<ScramblerSample, ModelError> {
    let euler = match mode {
        DlsMode::Off => return Err(ModelError::ScramblingOff),
        DlsMode::Perturbative { delta } => (0..n_qubits)
            .map(|_| {
                let mut draw = || {
                    if delta == 0.0 {
                        0.0
                    } else {
                        rng.random_range(-delta..=delta)
                    }
                };
                [draw(), draw(), draw()]
            })
            .collect(),
        DlsMode::Haar => (0..n_qubits)
            .map(|_| {
                let a = rng.random_range(0.0..2.0 * PI);
                let b = (1.0 - 2.0 * rng.random::<f64>()).acos();
                let c = rng.random_range(0.0..2.0 * PI);
                [a, b, c]
            })
            .collect(),
    };
    Ok(ScramblerSample { step, euler })
}

/// `W† O W` expanded in Pauli words.
pub fn effective_observable(
    observable: &PauliSum<f64>,
    w: &ScramblerSample,
) -> Result<PauliSum<f64>, ModelError> {
    if w.n_qubits() != observable.n_qubits() {
        return Err(ModelError::ScramblerSize {
            expected: observable.n_qubits(),
            got: w.n_qubits(),
        });
    }
    Ok((0..w.n_qubits()).fold(observable.clone(), |acc, q| {
        conjugate_local(&acc, q, &crate::qsim::mat2_dagger(&w.unitary(q)))
    }))
}

/// A configured model: encoder recipe, ansatz and observable.
#[derive(Debug, Clone)]
pub struct Model {
    config: ModelConfig,
    ansatz: Circuit<f64>,
    observable: PauliSum<f64>,
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let ansatz = build_ansatz(&config)?;
        let observable = PauliSum::from_pauli(&config.observable);
        Ok(Self {
            config,
            ansatz,
            observable,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn ansatz(&self) -> &Circuit<f64> {
        &self.ansatz
    }

    pub fn observable(&self) -> &PauliSum<f64> {
        &self.observable
    }

    pub fn num_params(&self) -> usize {
        self.ansatz.num_params()
    }

    pub fn n_qubits(&self) -> usize {
        self.config.n_qubits
    }

    pub fn encoder(&self, u: &[f64]) -> Result<Circuit<f64>, ModelError> {
        build_encoder(&self.config, &map_features(&self.config, u)?)
    }

    /// `|ψ(x)⟩ = V(x)|0…0⟩`.
    pub fn encoded_state(&self, u: &[f64]) -> Result<StateVector<f64>, ModelError> {
        Ok(self.encoder(u)?.run(&[])?)
    }

    /// Output for an already-encoded state.
    pub fn output_from_state(
        &self,
        encoded: &StateVector<f64>,
        theta: &[f64],
        w: Option<&ScramblerSample>,
    ) -> Result<f64, ModelError> {
        let mut s = encoded.clone();
        self.ansatz.apply_to(&mut s, theta)?;
        if let Some(w) = w {
            if w.n_qubits() != self.n_qubits() {
                return Err(ModelError::ScramblerSize {
                    expected: self.n_qubits(),
                    got: w.n_qubits(),
                });
            }
            w.apply_to(&mut s)?;
        }
        Ok(s.pauli_expectation(&self.config.observable)?)
    }

    /// `y_θ(x) = Tr(O_eff U ρ(x) U†)`.
    pub fn output(
        &self,
        u: &[f64],
        theta: &[f64],
        w: Option<&ScramblerSample>,
    ) -> Result<f64, ModelError> {
        self.output_from_state(&self.encoded_state(u)?, theta, w)
    }

    /// Output and its parameter-shift gradient.
    pub fn output_and_grad_from_state(
        &self,
        encoded: &StateVector<f64>,
        theta: &[f64],
        w: Option<&ScramblerSample>,
    ) -> Result<(f64, Vec<f64>), ModelError> {
        let y = self.output_from_state(encoded, theta, w)?;
        let mut shifted = theta.to_vec();
        let mut grad = Vec::with_capacity(theta.len());
        for k in 0..theta.len() {
            shifted[k] = theta[k] + PI / 2.0;
            let plus = self.output_from_state(encoded, &shifted, w)?;
            shifted[k] = theta[k] - PI / 2.0;
            let minus = self.output_from_state(encoded, &shifted, w)?;
            shifted[k] = theta[k];
            grad.push((plus - minus) / 2.0);
        }
        Ok((y, grad))
    }

    pub fn output_grad(
        &self,
        u: &[f64],
        theta: &[f64],
        w: Option<&ScramblerSample>,
    ) -> Result<Vec<f64>, ModelError> {
        Ok(self
            .output_and_grad_from_state(&self.encoded_state(u)?, theta, w)?
            .1)
    }

    /// Generators, Lie algebra and snapshot basis of the ansatz.
    pub fn algebra(&self) -> Result<ModelAlgebra, ModelError> {
        ModelAlgebra::of(self)
    }
}

/// Algebraic data of a model's ansatz.
#[derive(Debug, Clone)]
pub struct ModelAlgebra {
    /// Each trainable generator moved through the fixed gates that precede it,
    /// so the ansatz equals `F · Π_k exp(−iθ_k/2 · G_k)` with `F` the product
    /// of all fixed gates.
    pub generators: Vec<PauliString>,
    /// Product of the fixed gates, as a parameter-free circuit.
    pub residual: Circuit<f64>,
    /// Lie closure of `generators`.
    pub dla: DlaBasis<f64>,
    /// Smallest span of Pauli words containing `O` that is invariant under
    /// the conjugated generators and the residual; the snapshot basis used by
    /// the attacks. The ansatz maps it into itself for every `θ`.
    pub snapshot_basis: DlaBasis<f64>,
}

impl ModelAlgebra {
    pub fn of(model: &Model) -> Result<Self, ModelError> {
        let n = model.n_qubits();
        let mut prefix = Circuit::new(n)?;
        let mut generators = Vec::new();
        for op in model.ansatz.ops() {
            match op {
                CircuitOp::Fixed(g) => {
                    prefix.push(g.clone())?;
                }
                CircuitOp::Param { generator, .. } => {
                    let img = evolve_backward(&PauliSum::from_pauli(generator), &prefix, &[])?;
                    let mut terms = img.terms();
                    match (terms.next(), terms.next()) {
                        (Some((p, k)), None) if (k.abs() - 1.0).abs() < 1e-12 => {
                            generators
                                .push(p.scaled(num_complex::Complex::new(k.signum() as i64, 0)));
                        }
                        _ => return Err(ModelError::NonCliffordFixedGate(generator.label())),
                    }
                }
            }
        }
        let words: Vec<PauliString> = generators.iter().map(PauliString::word).collect();
        let dla =
            lie_closure::<f64>(&words, DEFAULT_DIM_CAP)?.with_observable(&model.observable)?;
        let snapshot_basis =
            observable_module(&words, Some(&prefix), &model.observable, DEFAULT_DIM_CAP)?;
        Ok(Self {
            generators,
            residual: prefix,
            dla,
            snapshot_basis,
        })
    }
}
