//! Snapshot recovery from gradients, snapshot inversion, and the landscape scan.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dla::{
    evolve_backward, snapshot, DlaBasis, DlaError, SnapshotVector, CLOSURE_TOLERANCE,
};
use crate::learn::{Adam, LearnError};
use crate::linalg::RealMatrix;
use crate::models::{effective_observable, Model, ModelError, ScramblerSample};

/// Relative singular-value cutoff of the least-squares solver.
pub const SINGULAR_CUTOFF: f64 = 1e-10;

/// Residual norm above which a recovery system counts as inconsistent.
pub const INCONSISTENCY_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("recovery system has no rows")]
    EmptySystem,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("landscape scans need a 2-feature model, this one has {0}")]
    NotTwoDimensional(usize),
    #[error("grid size {0} is below the minimum of 8")]
    GridTooSmall(usize),
    #[error("no initial guess with mse in [{lo}, {hi}] after {attempts} draws")]
    InitNotFound { lo: f64, hi: f64, attempts: usize },
    #[error(
        "basis is not closed under the ansatz: {word} leaves the span (residual {residual:.3e})"
    )]
    NotClosed { word: String, residual: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dla(#[from] DlaError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

/// `Ω_{jα} = ∂_{θ_j} Tr(O_a U(θ) B_α U(θ)†)/2^n` for the adversary's assumed
/// observable `O_a` (the model observable, or `W†OW` for a known scrambler).
#[derive(Debug, Clone)]
pub struct OmegaBlock {
    pub omega: RealMatrix<f64>,
    /// Largest out-of-span norm of `U†O_aU` seen while differentiating.
    pub outside_residual: f64,
}

pub fn build_omega(
    model: &Model,
    theta: &[f64],
    basis: &DlaBasis<f64>,
    assumed_w: Option<&ScramblerSample>,
) -> Result<OmegaBlock, AttackError> {
    let obs = match assumed_w {
        Some(w) => effective_observable(model.observable(), w)?,
        None => model.observable().clone(),
    };
    let d = model.num_params();
    if theta.len() != d {
        return Err(AttackError::Dimension {
            expected: d,
            got: theta.len(),
        });
    }
    let mut omega = RealMatrix::zeros(d, basis.dim());
    let mut outside_residual: f64 = 0.0;
    let mut shifted = theta.to_vec();
    for j in 0..d {
        let mut coeffs = [Vec::new(), Vec::new()];
        for (slot, sign) in [1.0, -1.0].into_iter().enumerate() {
            shifted[j] = theta[j] + sign * PI / 2.0;
            let heis = evolve_backward(&obs, model.ansatz(), &shifted).map_err(DlaError::from)?;
            let (c, res) = basis.project(&heis)?;
            outside_residual = outside_residual.max(res);
            coeffs[slot] = c;
        }
        shifted[j] = theta[j];
        for a in 0..basis.dim() {
            omega[(j, a)] = (coeffs[0][a] - coeffs[1][a]) / 2.0;
        }
    }
    Ok(OmegaBlock {
        omega,
        outside_residual,
    })
}

/// Stacked gradient observations `C = Ω e`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoverySystem {
    dim: usize,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    thetas: Vec<Vec<f64>>,
}

impl RecoverySystem {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
            rhs: Vec::new(),
            thetas: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn thetas(&self) -> &[Vec<f64>] {
        &self.thetas
    }

    pub fn omega(&self) -> RealMatrix<f64> {
        RealMatrix::from_rows(&self.rows)
    }

    /// Appends one probe: the Ω block at `theta` and the gradient seen there.
    pub fn push_block(
        &mut self,
        omega: &RealMatrix<f64>,
        gradient: &[f64],
        theta: &[f64],
    ) -> Result<(), AttackError> {
        if omega.cols() != self.dim {
            return Err(AttackError::Dimension {
                expected: self.dim,
                got: omega.cols(),
            });
        }
        if gradient.len() != omega.rows() {
            return Err(AttackError::Dimension {
                expected: omega.rows(),
                got: gradient.len(),
            });
        }
        for i in 0..omega.rows() {
            self.rows.push(omega.row(i).to_vec());
        }
        self.rhs.extend_from_slice(gradient);
        self.thetas.push(theta.to_vec());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub snapshot: SnapshotVector<f64>,
    /// `‖Ω ê − C‖`.
    pub residual_norm: f64,
    pub rank: usize,
    pub rank_deficient: bool,
    /// Residual above [`INCONSISTENCY_THRESHOLD`]: no snapshot explains the gradients.
    pub inconsistent: bool,
}

/// Minimum-norm least squares through the SVD with a relative cutoff.
pub fn snapshot_recovery(system: &RecoverySystem) -> Result<Recovery, AttackError> {
    let m = system.n_rows();
    if m == 0 {
        return Err(AttackError::EmptySystem);
    }
    let n = system.dim;
    let a = DMatrix::from_fn(m, n, |i, j| system.rows[i][j]);
    let b = DVector::from_column_slice(&system.rhs);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = SINGULAR_CUTOFF * smax;
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut x = DVector::zeros(n);
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            let coef = u.column(k).dot(&b) / s;
            x += vt.row(k).transpose() * coef;
        }
    }
    let residual_norm = (&a * &x - &b).norm();
    Ok(Recovery {
        snapshot: SnapshotVector(x.iter().copied().collect()),
        residual_norm,
        rank,
        rank_deficient: rank < n,
        inconsistent: residual_norm > INCONSISTENCY_THRESHOLD,
    })
}

/// `(1/D)‖g_real − g_static‖²`.
pub fn weak_privacy_mse(grad_real: &[f64], grad_static: &[f64]) -> Result<f64, AttackError> {
    Ok(crate::learn::weak_mse(grad_real, grad_static)?)
}

/// One gradient the adversary intercepts: parameters and the scrambler that
/// was in effect (unknown to the adversary).
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub theta: Vec<f64>,
    pub scrambler: Option<ScramblerSample>,
    /// Additive gradient noise (empty for none).
    pub noise: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakAttackOutcome {
    pub recovery: Recovery,
    pub true_snapshot: SnapshotVector<f64>,
    /// Mean squared error of the recovered snapshot.
    pub snapshot_mse: f64,
    pub outside_residual: f64,
}

/// Recovers the snapshot of input `u` from its output gradients at the
/// probes, assuming the static observable.
pub fn weak_attack(
    model: &Model,
    basis: &DlaBasis<f64>,
    u: &[f64],
    probes: &[Probe],
) -> Result<WeakAttackOutcome, AttackError> {
    let encoded = model.encoded_state(u)?;
    let truth = snapshot(&encoded, basis)?;
    let mut system = RecoverySystem::new(basis.dim());
    let mut outside: f64 = 0.0;
    for p in probes {
        let block = build_omega(model, &p.theta, basis, None)?;
        outside = outside.max(block.outside_residual);
        let (_, mut grad) =
            model.output_and_grad_from_state(&encoded, &p.theta, p.scrambler.as_ref())?;
        for (g, n) in grad.iter_mut().zip(&p.noise) {
            *g += n;
        }
        system.push_block(&block.omega, &grad, &p.theta)?;
    }
    let recovery = snapshot_recovery(&system)?;
    let snapshot_mse = recovery.snapshot.distance_sqr(&truth) / basis.dim().max(1) as f64;
    Ok(WeakAttackOutcome {
        recovery,
        true_snapshot: truth,
        snapshot_mse,
        outside_residual: outside,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub iteration: usize,
    pub x_guess: Vec<f64>,
    pub inversion_loss: f64,
    pub mse_strong: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionSettings {
    pub iters: usize,
    pub lr: f64,
    /// Central-difference step.
    pub h: f64,
}

impl Default for InversionSettings {
    fn default() -> Self {
        Self {
            iters: 300,
            lr: 0.1,
            h: 1e-4,
        }
    }
}

/// `‖e(x) − e_leak‖²` where `e(x)` is the snapshot of the encoded input.
pub fn inversion_loss(
    model: &Model,
    basis: &DlaBasis<f64>,
    e_leak: &SnapshotVector<f64>,
    u: &[f64],
) -> Result<f64, AttackError> {
    Ok(snapshot(&model.encoded_state(u)?, basis)?.distance_sqr(e_leak))
}

/// `(1/d)‖x_true − x‖²`.
pub fn strong_privacy_mse(x_true: &[f64], x: &[f64]) -> f64 {
    x_true
        .iter()
        .zip(x)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / x_true.len().max(1) as f64
}

/// Adam descent on the inversion loss inside the `[0, π]^d` box.
///
/// Returns `iters + 1` records: the guess before every update and the final one.
pub fn snapshot_inversion(
    model: &Model,
    basis: &DlaBasis<f64>,
    e_leak: &SnapshotVector<f64>,
    x_true: &[f64],
    x_init: &[f64],
    settings: &InversionSettings,
) -> Result<Vec<AttackRecord>, AttackError> {
    if e_leak.len() != basis.dim() {
        return Err(AttackError::Dimension {
            expected: basis.dim(),
            got: e_leak.len(),
        });
    }
    let d = model.config().feature_dim;
    for v in [x_true, x_init] {
        if v.len() != d {
            return Err(AttackError::Dimension {
                expected: d,
                got: v.len(),
            });
        }
    }
    let loss = |x: &[f64]| inversion_loss(model, basis, e_leak, x);
    let mut x = x_init.to_vec();
    let mut adam = Adam::new(d, settings.lr);
    let mut records = Vec::with_capacity(settings.iters + 1);
    for iteration in 0..=settings.iters {
        let l = loss(&x)?;
        records.push(AttackRecord {
            iteration,
            x_guess: x.clone(),
            inversion_loss: l,
            mse_strong: strong_privacy_mse(x_true, &x),
        });
        if iteration == settings.iters {
            break;
        }
        let mut grad = vec![0.0; d];
        if l > 0.0 {
            let mut probe = x.clone();
            for k in 0..d {
                probe[k] = x[k] + settings.h;
                let up = loss(&probe)?;
                probe[k] = x[k] - settings.h;
                let down = loss(&probe)?;
                probe[k] = x[k];
                grad[k] = (up - down) / (2.0 * settings.h);
            }
        }
        adam.step(&mut x, &grad);
        for v in &mut x {
            *v = v.clamp(0.0, PI);
        }
    }
    Ok(records)
}

/// Uniform draw in `[0, π]^d` whose strong mse to `x_true` lies in `[lo, hi]`.
pub fn far_initial_guess<R: Rng + ?Sized>(
    x_true: &[f64],
    lo: f64,
    hi: f64,
    max_attempts: usize,
    rng: &mut R,
) -> Result<Vec<f64>, AttackError> {
    for _ in 0..max_attempts {
        let x: Vec<f64> = x_true.iter().map(|_| rng.random_range(0.0..=PI)).collect();
        let m = strong_privacy_mse(x_true, &x);
        if (lo..=hi).contains(&m) {
            return Ok(x);
        }
    }
    Err(AttackError::InitNotFound {
        lo,
        hi,
        attempts: max_attempts,
    })
}

/// `g × g` grid of a scalar field over `[0, π]²`; row `i` has `x0 = axis[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
    pub minima: usize,
}

impl Landscape {
    pub fn size(&self) -> usize {
        self.axis.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.axis.len() + j]
    }
}

/// `g` evenly spaced points covering `[0, π]`.
pub fn grid_axis(g: usize) -> Vec<f64> {
    (0..g)
        .map(|i| PI * i as f64 / (g - 1).max(1) as f64)
        .collect()
}

/// Evaluates `f` on the grid (in parallel, order-stable).
pub fn scan_grid<F>(g: usize, f: F) -> Result<Landscape, AttackError>
where
    F: Fn(&[f64]) -> Result<f64, AttackError> + Sync,
{
    if g < 8 {
        return Err(AttackError::GridTooSmall(g));
    }
    let axis = grid_axis(g);
    let values = (0..g * g)
        .into_par_iter()
        .map(|c| f(&[axis[c / g], axis[c % g]]))
        .collect::<Result<Vec<_>, _>>()?;
    let minima = count_strict_minima(&values, g);
    Ok(Landscape {
        axis,
        values,
        minima,
    })
}

/// Interior cells strictly below all eight neighbours.
pub fn count_strict_minima(values: &[f64], g: usize) -> usize {
    let at = |i: usize, j: usize| values[i * g + j];
    let mut count = 0;
    for i in 1..g.saturating_sub(1) {
        for j in 1..g - 1 {
            let v = at(i, j);
            let lower = (-1i32..=1).all(|di| {
                (-1i32..=1).all(|dj| {
                    (di == 0 && dj == 0)
                        || v < at((i as i32 + di) as usize, (j as i32 + dj) as usize)
                })
            });
            if lower {
                count += 1;
            }
        }
    }
    count
}

/// Inversion loss over the 2-feature input domain.
pub fn landscape_scan(
    model: &Model,
    basis: &DlaBasis<f64>,
    e_leak: &SnapshotVector<f64>,
    g: usize,
) -> Result<Landscape, AttackError> {
    let d = model.config().feature_dim;
    if d != 2 {
        return Err(AttackError::NotTwoDimensional(d));
    }
    scan_grid(g, |x| inversion_loss(model, basis, e_leak, x))
}

/// Checks that every basis word stays in the span under the ansatz at `theta`.
pub fn check_basis_closed(
    model: &Model,
    basis: &DlaBasis<f64>,
    theta: &[f64],
) -> Result<(), AttackError> {
    match crate::dla::adjoint_rep(model.ansatz(), theta, basis) {
        Ok(_) => Ok(()),
        Err(DlaError::NotClosed { word, residual }) if residual > CLOSURE_TOLERANCE => {
            Err(AttackError::NotClosed { word, residual })
        }
        Err(e) => Err(e.into()),
    }
}
