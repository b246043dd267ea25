mod common;

use std::collections::HashMap;

use common::*;
use dyloc_core::dla::{adjoint_rep, generalized_purity, lie_closure, snapshot, DEFAULT_DIM_CAP};
use dyloc_core::learn::{make_moons, FeatureScaler};
use dyloc_core::models::{DlsMode, Model, ModelConfig};
use dyloc_core::pauli::Coeff;
use dyloc_core::qsim::Circuit;
use dyloc_core::PauliString;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(s: &str) -> PauliString {
    s.parse().unwrap()
}

fn dense_of(s: &PauliString) -> M {
    let k = s.coeff();
    pauli(&s.word().label()) * c(k.re as f64, k.im as f64)
}

fn baseline() -> Model {
    Model::new(ModelConfig::baseline(3, 2, 2)).unwrap()
}

fn dyloc() -> Model {
    Model::new(ModelConfig::dyloc(
        3,
        2,
        2,
        2,
        DlsMode::Perturbative { delta: 0.3 },
    ))
    .unwrap()
}

/// Dense `L × [RY on every qubit, CZ(0,1) CZ(1,2)]`; slots run qubit-major within a layer.
fn dense_ansatz(n: usize, theta: &[f64]) -> M {
    let layers = theta.len() / n;
    let mut u = M::identity(1 << n, 1 << n);
    for l in 0..layers {
        for q in 0..n {
            u = embed1(n, q, &ry(theta[l * n + q])) * u;
        }
        for q in 0..n - 1 {
            u = cz(n, q, q + 1) * u;
        }
    }
    u
}

/// Generators `F_k† Y_q F_k` where `F_k` is the product of the CZ layers before slot `k`.
fn dense_conjugated_generators(n: usize, layers: usize) -> Vec<M> {
    let chain = (0..n - 1).fold(M::identity(1 << n, 1 << n), |acc, q| cz(n, q, q + 1) * acc);
    let mut f = M::identity(1 << n, 1 << n);
    let mut out = Vec::new();
    for _ in 0..layers {
        for q in 0..n {
            out.push(f.adjoint() * embed1(n, q, &letter('Y')) * &f);
        }
        f = &chain * f;
    }
    out
}

fn random_theta(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect()
}

#[test]
fn symbolic_commutators_match_dense() {
    for n in [1usize, 2, 3] {
        let labels = all_labels(n);
        for a in &labels {
            for b in &labels {
                let want = commutator(&pauli(a), &pauli(b));
                let got = match p(a).commutator(&p(b)).unwrap() {
                    Some(s) => dense_of(&s),
                    None => M::zeros(1 << n, 1 << n),
                };
                assert!(max_abs(&(got - want)) < 1e-12, "[{a}, {b}]");
            }
        }
    }
}

#[test]
fn symbolic_products_match_dense() {
    let labels = all_labels(2);
    for a in &labels {
        for b in &labels {
            let got = dense_of(&p(a).mul(&p(b)).unwrap());
            assert!(max_abs(&(got - pauli(a) * pauli(b))) < 1e-12, "{a}·{b}");
        }
    }
}

fn accumulate(acc: &mut HashMap<(u64, u64), Coeff>, s: Option<PauliString>) {
    if let Some(s) = s {
        *acc.entry(s.key()).or_default() += s.coeff();
    }
}

fn nested(a: &PauliString, b: &PauliString, cc: &PauliString) -> Option<PauliString> {
    b.commutator(cc)
        .unwrap()
        .and_then(|inner| a.commutator(&inner).unwrap())
}

proptest! {
    #[test]
    fn jacobi_identity(ia in 0usize..64, ib in 0usize..64, ic in 0usize..64) {
        let labels = all_labels(3);
        let (a, b, cc) = (p(&labels[ia]), p(&labels[ib]), p(&labels[ic]));
        let mut acc = HashMap::new();
        accumulate(&mut acc, nested(&a, &b, &cc));
        accumulate(&mut acc, nested(&b, &cc, &a));
        accumulate(&mut acc, nested(&cc, &a, &b));
        prop_assert!(acc.values().all(|k| *k == Coeff::new(0, 0)));
    }

    #[test]
    fn closure_matches_dense_oracle(words in proptest::collection::vec(0usize..16, 1..4)) {
        let labels = all_labels(2);
        let gens: Vec<PauliString> = words.iter().filter(|&&i| i != 0).map(|&i| p(&labels[i])).collect();
        prop_assume!(!gens.is_empty());
        let basis = lie_closure::<f64>(&gens, DEFAULT_DIM_CAP).unwrap();
        let dense: Vec<M> = gens.iter().map(|g| pauli(&g.label())).collect();
        prop_assert_eq!(basis.dim(), dense_closure_dim(&dense));
        prop_assert!(basis.is_closed());
        let again = lie_closure::<f64>(basis.words(), DEFAULT_DIM_CAP).unwrap();
        prop_assert_eq!(again.dim(), basis.dim());
    }
}

#[test]
fn su2_from_x_and_z() {
    assert_eq!(
        lie_closure::<f64>(&[p("X"), p("Z")], DEFAULT_DIM_CAP)
            .unwrap()
            .dim(),
        3
    );
    assert_eq!(dense_closure_dim(&[letter('X'), letter('Z')]), 3);
}

#[test]
fn ansatz_generators_agree_with_dense_conjugation() {
    let alg = baseline().algebra().unwrap();
    let dense = dense_conjugated_generators(3, 2);
    assert_eq!(alg.generators.len(), dense.len());
    for (g, want) in alg.generators.iter().zip(&dense) {
        assert!(max_abs(&(dense_of(g) - want)) < 1e-12, "{g}");
    }
}

#[test]
fn ansatz_dla_dimension_matches_dense_closure() {
    let oracle = dense_closure_dim(&dense_conjugated_generators(3, 2));
    assert_eq!(oracle, 12);
    let alg = baseline().algebra().unwrap();
    assert_eq!(alg.dla.dim(), oracle);
    assert!(alg.dla.dim() < 63);
    assert!(alg.dla.is_closed());
    assert!(!alg.dla.contains_observable());
}

#[test]
fn snapshot_basis_is_invariant_and_contains_observable() {
    let m = baseline();
    let alg = m.algebra().unwrap();
    let basis = &alg.snapshot_basis;
    assert_eq!(basis.dim(), 18);
    assert!(basis.contains_observable());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let theta = random_theta(&mut rng, m.num_params());
        let u = dense_ansatz(3, &theta);
        for w in basis.words() {
            // U† B U must lie in the span: its dense residual after projection vanishes.
            let img = u.adjoint() * pauli(&w.label()) * &u;
            let mut rest = img.clone();
            for b in basis.words() {
                let bm = pauli(&b.label());
                let k = (bm.adjoint() * &img).trace() / c(8.0, 0.0);
                rest -= bm * k;
            }
            assert!(max_abs(&rest) < 1e-10, "{w} leaves the span");
        }
    }
}

#[test]
fn adjoint_representation_is_orthogonal_and_composes() {
    let m = baseline();
    let basis = m.algebra().unwrap().snapshot_basis;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (t1, t2) = (random_theta(&mut rng, 6), random_theta(&mut rng, 6));
    let a1 = adjoint_rep(m.ansatz(), &t1, &basis).unwrap();
    let a2 = adjoint_rep(m.ansatz(), &t2, &basis).unwrap();
    let d = basis.dim();
    let eye = dyloc_core::RealMatrix::identity(d);
    assert!(a1.transpose().matmul(&a1).max_abs_diff(&eye) < 1e-12);

    let mut both = Circuit::new(3).unwrap();
    both.extend(m.ansatz()).unwrap();
    both.extend(m.ansatz()).unwrap();
    let joint: Vec<f64> = t1.iter().chain(&t2).copied().collect();
    let a12 = adjoint_rep(&both, &joint, &basis).unwrap();
    assert!(a12.max_abs_diff(&a2.matmul(&a1)) < 1e-12);
}

#[test]
fn output_is_linear_contraction_of_snapshot() {
    // y = μᵀ · Ad · e(x) at ten random θ, for both the baseline and TCGE inputs.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for m in [baseline(), dyloc()] {
        let basis = m.algebra().unwrap().snapshot_basis;
        for _ in 0..10 {
            let theta = random_theta(&mut rng, m.num_params());
            let u: Vec<f64> = (0..2)
                .map(|_| rng.random_range(0.0..std::f64::consts::PI))
                .collect();
            let state = m.encoded_state(&u).unwrap();
            let e = snapshot(&state, &basis).unwrap();
            let ad = adjoint_rep(m.ansatz(), &theta, &basis).unwrap();
            let linear: f64 = ad
                .vecmat(basis.mu())
                .iter()
                .zip(e.values())
                .map(|(a, b)| a * b)
                .sum();
            let y = m.output(&u, &theta, None).unwrap();
            assert!((linear - y).abs() < 1e-8, "{linear} vs {y}");

            let psi = V::from_iterator(8, state.amplitudes().iter().copied());
            let dense_y = expval(&(dense_ansatz(3, &theta) * psi), &pauli("ZZZ"));
            assert!((dense_y - y).abs() < 1e-10);
        }
    }
}

#[test]
fn snapshot_entries_match_dense_traces() {
    let m = dyloc();
    let basis = m.algebra().unwrap().snapshot_basis;
    let state = m.encoded_state(&[0.4, 2.2]).unwrap();
    let psi = V::from_iterator(8, state.amplitudes().iter().copied());
    let e = snapshot(&state, &basis).unwrap();
    for (w, v) in basis.words().iter().zip(e.values()) {
        assert!((expval(&psi, &pauli(&w.label())) - v).abs() < 1e-12, "{w}");
    }
}

#[test]
fn tcge_purity_is_order_one_on_dataset_inputs() {
    let m = dyloc();
    let basis = m.algebra().unwrap().snapshot_basis;
    let data = make_moons(150, 0.05, 1).unwrap();
    let scaler = FeatureScaler::fit(&data).unwrap();
    for x in data.features.iter().step_by(7).take(20) {
        let state = m.encoded_state(&scaler.scale(x)).unwrap();
        let got = generalized_purity(&state, &basis).unwrap();
        let psi = V::from_iterator(8, state.amplitudes().iter().copied());
        let dense: f64 = basis
            .words()
            .iter()
            .map(|w| expval(&psi, &pauli(&w.label())).powi(2))
            .sum();
        assert!((got - dense).abs() < 1e-12);
        assert!((got - 3.0).abs() < 1e-10, "purity {got}");
    }
}
