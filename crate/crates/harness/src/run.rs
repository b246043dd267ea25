//! Experiment drivers. Each driver is a pure function of the config; the
//! file-writing wrapper is [`run_experiment`].

use std::collections::BTreeMap;
use std::time::Instant;

use dyloc_core::attacks::{
    build_omega, far_initial_guess, landscape_scan, snapshot_inversion, snapshot_recovery,
    AttackRecord, Landscape, RecoverySystem,
};
use dyloc_core::dla::{generalized_purity, snapshot};
use dyloc_core::learn::{
    make_moons, sample_laplace, train, FeatureScaler, Objective, TrainRecord, Variant,
};
use dyloc_core::models::{Model, ModelAlgebra};
use dyloc_core::{DlaBasis, SnapshotVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{Experiment, ExperimentConfig, Seeds};
use crate::output::{fmt_f64, CsvTable, OutputSet, RunManifest};
use crate::HarnessError;

/// Rejection-sampling budget for the far initial guess.
const INIT_ATTEMPTS: usize = 1_000_000;

/// Dataset inputs at which the DLA report evaluates generalized purity.
const PURITY_PROBES: usize = 20;

/// Steps averaged for the plateau-noise statistic.
const TAIL_WINDOW: usize = 30;

/// Dataset, scaling and attack target shared by every experiment of a run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub seeds: Seeds,
    /// Features scaled to `[0, π]`.
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub scaler: FeatureScaler,
    pub target: usize,
    /// Strong-attack starting point, inside the configured mse window.
    pub x_init: Vec<f64>,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let seeds = config.seeds.resolve();
        let data = make_moons(config.data.samples, config.data.noise_sigma, seeds.data)?;
        let scaler = FeatureScaler::fit(&data)?;
        let inputs: Vec<Vec<f64>> = data.features.iter().map(|x| scaler.scale(x)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seeds.attack);
        let target = match config.attack.target {
            Some(t) => t,
            None => rng.random_range(0..inputs.len()),
        };
        let x_init = far_initial_guess(
            &inputs[target],
            config.attack.init_mse_min,
            config.attack.init_mse_max,
            INIT_ATTEMPTS,
            &mut rng,
        )?;
        Ok(Self {
            config: config.clone(),
            seeds,
            inputs,
            labels: data.labels,
            scaler,
            target,
            x_init,
        })
    }

    pub fn x_true(&self) -> &[f64] {
        &self.inputs[self.target]
    }

    pub fn model(&self, variant: Variant) -> Result<Model, HarnessError> {
        Ok(Model::new(self.config.model_for(variant).clone())?)
    }
}

/// Snapshot basis of a model (the ansatz's observable module).
pub fn attack_basis(model: &Model) -> Result<DlaBasis, HarnessError> {
    Ok(model.algebra()?.snapshot_basis)
}

pub fn train_variant(prep: &Prepared, variant: Variant) -> Result<Vec<TrainRecord>, HarnessError> {
    let model = prep.model(variant)?;
    let objective = Objective::new(&model, &prep.inputs, &prep.labels)?;
    Ok(train(
        &objective,
        variant,
        &prep.config.train,
        &prep.seeds.train(),
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainSummary {
    pub final_loss: f64,
    pub final_static_loss: f64,
    /// Population standard deviation of the last 30 recorded losses.
    pub tail_loss_std: f64,
    pub mean_mse_weak: f64,
    pub max_mse_weak: f64,
}

pub fn summarize_training(records: &[TrainRecord]) -> TrainSummary {
    let last = records.last().expect("at least one step");
    let tail: Vec<f64> = records
        .iter()
        .rev()
        .take(TAIL_WINDOW)
        .map(|r| r.loss)
        .collect();
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let var = tail.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / tail.len() as f64;
    TrainSummary {
        final_loss: last.loss,
        final_static_loss: last.static_loss,
        tail_loss_std: var.sqrt(),
        mean_mse_weak: records.iter().map(|r| r.mse_weak).sum::<f64>() / records.len() as f64,
        max_mse_weak: records.iter().map(|r| r.mse_weak).fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakRow {
    pub step: usize,
    pub mse_weak: f64,
    pub recovery_residual: f64,
    pub recovered_snapshot_mse: f64,
    pub max_entry_error: f64,
    pub inconsistent: bool,
    pub rank_deficient: bool,
}

/// Per-sample Laplace noise the QDP channel adds at every step, from its own
/// stream of the noise seed so it never disturbs the training noise.
fn qdp_probe_noise(prep: &Prepared, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(prep.seeds.noise);
    rng.set_stream(1);
    let lambda = prep.config.train.qdp_lambda;
    (0..prep.config.train.steps)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    if lambda > 0.0 {
                        sample_laplace(lambda, &mut rng)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Snapshot recovery on the attacked sample from every gradient released so
/// far: the system at step `t` stacks the Ω blocks and gradients of steps
/// `0..=t`. Rows start once `probes` steps have accumulated.
pub fn weak_rows(
    prep: &Prepared,
    variant: Variant,
    records: &[TrainRecord],
) -> Result<Vec<WeakRow>, HarnessError> {
    let model = prep.model(variant)?;
    let basis = attack_basis(&model)?;
    let dim = model.num_params();
    let noise = match variant {
        Variant::Qdp => qdp_probe_noise(prep, dim),
        _ => vec![vec![0.0; dim]; records.len()],
    };
    let encoded = model.encoded_state(prep.x_true())?;
    let truth = snapshot(&encoded, &basis)?;
    let blocks = records
        .par_iter()
        .zip(&noise)
        .map(|(r, n)| {
            let omega = build_omega(&model, &r.theta, &basis, None)?.omega;
            let (_, mut grad) =
                model.output_and_grad_from_state(&encoded, &r.theta, r.scrambler.as_ref())?;
            for (g, e) in grad.iter_mut().zip(n) {
                *g += e;
            }
            Ok((omega, grad))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let mut system = RecoverySystem::new(basis.dim());
    let mut rows = Vec::new();
    for (t, ((omega, grad), r)) in blocks.iter().zip(records).enumerate() {
        system.push_block(omega, grad, &r.theta)?;
        if t + 1 < prep.config.attack.probes {
            continue;
        }
        let rec = snapshot_recovery(&system)?;
        let errors = rec
            .snapshot
            .values()
            .iter()
            .zip(truth.values())
            .map(|(a, b)| (a - b).abs());
        rows.push(WeakRow {
            step: t,
            mse_weak: r.mse_weak,
            recovery_residual: rec.residual_norm,
            recovered_snapshot_mse: rec.snapshot.distance_sqr(&truth) / basis.dim() as f64,
            max_entry_error: errors.fold(0.0, f64::max),
            inconsistent: rec.inconsistent,
            rank_deficient: rec.rank_deficient,
        });
    }
    Ok(rows)
}

/// The snapshot handed to the strong adversary: the exact snapshot of the
/// target under the variant's encoder, i.e. an adversary who has already
/// won the weak game.
pub fn leaked_snapshot(
    prep: &Prepared,
    variant: Variant,
) -> Result<(Model, DlaBasis, SnapshotVector), HarnessError> {
    let model = prep.model(variant)?;
    let basis = attack_basis(&model)?;
    let e = snapshot(&model.encoded_state(prep.x_true())?, &basis)?;
    Ok((model, basis, e))
}

pub fn strong_records(
    prep: &Prepared,
    variant: Variant,
) -> Result<Vec<AttackRecord>, HarnessError> {
    let (model, basis, e) = leaked_snapshot(prep, variant)?;
    Ok(snapshot_inversion(
        &model,
        &basis,
        &e,
        prep.x_true(),
        &prep.x_init,
        &prep.config.attack.inversion,
    )?)
}

pub fn landscape(prep: &Prepared, variant: Variant) -> Result<Landscape, HarnessError> {
    let (model, basis, e) = leaked_snapshot(prep, variant)?;
    Ok(landscape_scan(&model, &basis, &e, prep.config.attack.grid)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub encoder: String,
    pub observable: String,
    pub generators: Vec<String>,
    pub dla_dim: usize,
    pub dla_words: Vec<String>,
    /// Whether the observable lies in the span of the DLA.
    pub observable_in_dla: bool,
    pub snapshot_basis_dim: usize,
    pub snapshot_basis_words: Vec<String>,
    /// Nonzero coefficients of the observable on the snapshot basis.
    pub mu: BTreeMap<String, f64>,
    pub purity_inputs: Vec<usize>,
    /// Generalized purity against the snapshot basis.
    pub purity_snapshot_basis: Vec<f64>,
    /// Generalized purity against the DLA words.
    pub purity_dla: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DlaReport {
    pub baseline: ModelReport,
    pub dyloc: ModelReport,
}

fn model_report(prep: &Prepared, variant: Variant) -> Result<ModelReport, HarnessError> {
    let model = prep.model(variant)?;
    let ModelAlgebra {
        generators,
        dla,
        snapshot_basis,
        ..
    } = model.algebra()?;
    let mu = snapshot_basis
        .words()
        .iter()
        .zip(snapshot_basis.mu())
        .filter(|(_, &m)| m != 0.0)
        .map(|(w, &m)| (w.label(), m))
        .collect();
    let stride = (prep.inputs.len() / PURITY_PROBES).max(1);
    let purity_inputs: Vec<usize> = (0..prep.inputs.len())
        .step_by(stride)
        .take(PURITY_PROBES)
        .collect();
    let mut purity_snapshot_basis = Vec::new();
    let mut purity_dla = Vec::new();
    for &i in &purity_inputs {
        let state = model.encoded_state(&prep.inputs[i])?;
        purity_snapshot_basis.push(generalized_purity(&state, &snapshot_basis)?);
        purity_dla.push(generalized_purity(&state, &dla)?);
    }
    Ok(ModelReport {
        encoder: format!("{:?}", model.config().encoder),
        observable: model.config().observable.label(),
        generators: generators.iter().map(|g| g.to_string()).collect(),
        dla_dim: dla.dim(),
        dla_words: dla.labels(),
        observable_in_dla: dla.contains_observable(),
        snapshot_basis_dim: snapshot_basis.dim(),
        snapshot_basis_words: snapshot_basis.labels(),
        mu,
        purity_inputs,
        purity_snapshot_basis,
        purity_dla,
    })
}

pub fn dla_report(prep: &Prepared) -> Result<DlaReport, HarnessError> {
    Ok(DlaReport {
        baseline: model_report(prep, Variant::Standard)?,
        dyloc: model_report(prep, Variant::Dyloc)?,
    })
}

pub fn render_dla_report(r: &DlaReport) -> String {
    let mut s = String::new();
    for (name, m) in [("baseline", &r.baseline), ("dyloc", &r.dyloc)] {
        let min_purity = m
            .purity_snapshot_basis
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        s += &format!(
            "[{name}] encoder {}\n  observable O = {}\n  generators: {}\n  dim(g) = {} (O in span: {})\n  \
             g: {}\n  snapshot basis dim = {}: {}\n  mu: {}\n  min generalized purity over {} inputs = {}\n",
            m.encoder,
            m.observable,
            m.generators.join(" "),
            m.dla_dim,
            m.observable_in_dla,
            m.dla_words.join(" "),
            m.snapshot_basis_dim,
            m.snapshot_basis_words.join(" "),
            m.mu.iter().map(|(w, v)| format!("{w}:{v}")).collect::<Vec<_>>().join(" "),
            m.purity_inputs.len(),
            min_purity,
        );
    }
    s
}

pub fn loss_table(runs: &[(Variant, Vec<TrainRecord>)]) -> CsvTable {
    let mut t = CsvTable::new(&["step", "variant", "loss", "mse_weak"]);
    for (v, recs) in runs {
        for r in recs {
            t.row(&[
                r.step.to_string(),
                v.to_string(),
                fmt_f64(r.loss),
                fmt_f64(r.mse_weak),
            ]);
        }
    }
    t
}

pub fn weak_table(runs: &[(Variant, Vec<WeakRow>)]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "step",
        "variant",
        "mse_weak",
        "recovery_residual",
        "recovered_snapshot_mse",
    ]);
    for (v, rows) in runs {
        for r in rows {
            t.row(&[
                r.step.to_string(),
                v.to_string(),
                fmt_f64(r.mse_weak),
                fmt_f64(r.recovery_residual),
                fmt_f64(r.recovered_snapshot_mse),
            ]);
        }
    }
    t
}

pub fn strong_table(runs: &[(Variant, Vec<AttackRecord>)]) -> CsvTable {
    let mut t = CsvTable::new(&["iter", "variant", "inversion_loss", "mse_strong"]);
    for (v, recs) in runs {
        for r in recs {
            t.row(&[
                r.iteration.to_string(),
                v.to_string(),
                fmt_f64(r.inversion_loss),
                fmt_f64(r.mse_strong),
            ]);
        }
    }
    t
}

pub fn landscape_table(l: &Landscape) -> CsvTable {
    let mut t = CsvTable::new(&["x0", "x1", "loss"]);
    let g = l.size();
    for i in 0..g {
        for j in 0..g {
            t.row(&[fmt_f64(l.axis[i]), fmt_f64(l.axis[j]), fmt_f64(l.at(i, j))]);
        }
    }
    t
}

/// Best mse_strong over the first `iters` updates (records `0..=iters`).
pub fn best_mse_within(records: &[AttackRecord], iters: usize) -> f64 {
    records
        .iter()
        .take(iters + 1)
        .map(|r| r.mse_strong)
        .fold(f64::INFINITY, f64::min)
}

/// Result of one [`run_experiment`] call.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub manifest_path: std::path::PathBuf,
    /// Human-readable report (dla-info only).
    pub report: Option<String>,
}

fn info_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("summary serialises")
}

/// Runs the configured experiment, writes its files into `out_dir`, and
/// writes `manifest.json` last. On error every file written so far is removed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome, HarnessError> {
    let started = Instant::now();
    let prep = Prepared::new(config)?;
    let mut out = OutputSet::create(&config.out_dir)?;
    let mut minima = BTreeMap::new();
    let mut info = BTreeMap::new();
    let mut report = None;
    let variants = &config.variants;
    match config.experiment {
        Experiment::Train => {
            let runs = variants
                .iter()
                .map(|&v| Ok((v, train_variant(&prep, v)?)))
                .collect::<Result<Vec<_>, HarnessError>>()?;
            out.write("loss.csv", loss_table(&runs).as_str())?;
            for (v, recs) in &runs {
                info.insert(format!("train_{v}"), info_json(&summarize_training(recs)));
            }
        }
        Experiment::AttackWeak => {
            let mut runs = Vec::new();
            for &v in variants {
                let recs = train_variant(&prep, v)?;
                let rows = weak_rows(&prep, v, &recs)?;
                let inconsistent = rows.iter().filter(|r| r.inconsistent).count();
                info.insert(
                    format!("weak_{v}"),
                    json!({
                        "mean_mse_weak": summarize_training(&recs).mean_mse_weak,
                        "max_mse_weak": summarize_training(&recs).max_mse_weak,
                        "max_entry_error": rows.iter().map(|r| r.max_entry_error).fold(0.0, f64::max),
                        "min_recovery_residual": rows.iter().map(|r| r.recovery_residual).fold(f64::INFINITY, f64::min),
                        "inconsistent_windows": inconsistent,
                        "windows": rows.len(),
                        "rank_deficient_windows": rows.iter().filter(|r| r.rank_deficient).count(),
                    }),
                );
                runs.push((v, rows));
            }
            info.insert("target".into(), json!(prep.target));
            out.write("weak.csv", weak_table(&runs).as_str())?;
        }
        Experiment::AttackStrong => {
            let runs = variants
                .iter()
                .map(|&v| Ok((v, strong_records(&prep, v)?)))
                .collect::<Result<Vec<_>, HarnessError>>()?;
            out.write("strong.csv", strong_table(&runs).as_str())?;
            info.insert("target".into(), json!(prep.target));
            info.insert("x_true".into(), json!(prep.x_true()));
            info.insert("x_init".into(), json!(prep.x_init));
            for (v, recs) in &runs {
                let last = recs.last().expect("iters + 1 records");
                info.insert(
                    format!("strong_{v}"),
                    json!({
                        "initial_mse_strong": recs[0].mse_strong,
                        "best_mse_strong_within_50": best_mse_within(recs, 50),
                        "final_mse_strong": last.mse_strong,
                        "final_inversion_loss": last.inversion_loss,
                        "final_mse_above_2": last.mse_strong > 2.0,
                    }),
                );
            }
        }
        Experiment::Landscape => {
            for &v in variants {
                let l = landscape(&prep, v)?;
                out.write(&format!("landscape_{v}.csv"), landscape_table(&l).as_str())?;
                minima.insert(v.to_string(), l.minima);
            }
            info.insert("target".into(), json!(prep.target));
            info.insert("x_true".into(), json!(prep.x_true()));
        }
        Experiment::DlaInfo => {
            let r = dla_report(&prep)?;
            let mut json = serde_json::to_string_pretty(&r)?;
            json.push('\n');
            out.write("dla_info.json", &json)?;
            let text = render_dla_report(&r);
            out.write("dla_info.txt", &text)?;
            info.insert("dla_dim".into(), json!(r.dyloc.dla_dim));
            info.insert(
                "snapshot_basis_dim".into(),
                json!(r.dyloc.snapshot_basis_dim),
            );
            report = Some(text);
        }
    }
    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: config.experiment.name().to_string(),
        config: config.clone(),
        seeds: prep.seeds,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        files: BTreeMap::new(),
        minima,
        info,
    };
    let (manifest_path, manifest) = out.commit(manifest)?;
    Ok(RunOutcome {
        manifest,
        manifest_path,
        report,
    })
}
