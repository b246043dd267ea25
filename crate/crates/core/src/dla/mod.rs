//! Dynamical Lie algebras of Pauli-rotation circuits.
//!
//! Every algebra here is spanned by Pauli words, so "orthonormal basis"
//! means a list of distinct words under `⟨P, Q⟩ = Tr(P†Q)/2^n`. The
//! identity word is central and is never included in a basis.

pub mod conjugate;

use std::collections::HashMap;
use std::ops::Index;

use thiserror::Error;

use crate::linalg::RealMatrix;
use crate::pauli::{PauliError, PauliString, PauliSum};
use crate::qsim::{Circuit, QsimError, StateVector};
use crate::scalar::Real;

pub use conjugate::{conjugate_gate, evolve_backward, evolve_forward, Conjugation};

/// Default ceiling on the closure dimension.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Out-of-span weight above which a conjugated basis element counts as escaping.
pub const CLOSURE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DlaError {
    #[error("generator list is empty")]
    NoGenerators,
    #[error("closure dimension exceeded the cap of {cap}")]
    DimCapExceeded { cap: usize },
    #[error(
        "basis is not closed under the circuit: {word} leaves the span (residual {residual:.3e})"
    )]
    NotClosed { word: String, residual: f64 },
    #[error("qubit count mismatch: basis has {expected}, got {got}")]
    QubitMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

/// Ordered Pauli-word basis of a Lie algebra (or of an invariant subspace),
/// together with the coefficients `mu` of a designated observable.
#[derive(Debug, Clone)]
pub struct DlaBasis<T: Real> {
    n_qubits: usize,
    words: Vec<PauliString>,
    index: HashMap<(u64, u64), usize>,
    mu: Vec<T>,
    observable_residual: T,
}

impl<T: Real> DlaBasis<T> {
    /// Basis from distinct non-identity words; duplicates and identity are dropped.
    pub fn from_words(n_qubits: usize, words: &[PauliString]) -> Result<Self, DlaError> {
        let mut b = Self {
            n_qubits,
            words: Vec::new(),
            index: HashMap::new(),
            mu: Vec::new(),
            observable_residual: T::zero(),
        };
        for w in words {
            if w.n_qubits() != n_qubits {
                return Err(DlaError::QubitMismatch {
                    expected: n_qubits,
                    got: w.n_qubits(),
                });
            }
            b.insert(w);
        }
        b.mu = vec![T::zero(); b.words.len()];
        Ok(b)
    }

    fn insert(&mut self, w: &PauliString) -> bool {
        if w.is_identity_word() || self.index.contains_key(&w.key()) {
            return false;
        }
        self.index.insert(w.key(), self.words.len());
        self.words.push(w.word());
        true
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[PauliString] {
        &self.words
    }

    pub fn labels(&self) -> Vec<String> {
        self.words.iter().map(PauliString::label).collect()
    }

    pub fn index_of(&self, p: &PauliString) -> Option<usize> {
        self.index.get(&p.key()).copied()
    }

    pub fn contains(&self, p: &PauliString) -> bool {
        p.is_identity_word() || self.index.contains_key(&p.key())
    }

    /// Coefficients of the attached observable in this basis.
    pub fn mu(&self) -> &[T] {
        &self.mu
    }

    /// Norm of the attached observable's component outside the span.
    pub fn observable_residual(&self) -> T {
        self.observable_residual
    }

    /// Whether the attached observable lies in the span (`iO ∈ 𝔤`).
    pub fn contains_observable(&self) -> bool {
        self.observable_residual <= T::lit(CLOSURE_TOLERANCE)
    }

    /// Coefficients in the basis plus the norm of what is left outside.
    pub fn project(&self, op: &PauliSum<T>) -> Result<(Vec<T>, T), DlaError> {
        self.check_qubits(op.n_qubits())?;
        let mut coeffs = vec![T::zero(); self.dim()];
        let mut outside = T::zero();
        for (p, k) in op.terms() {
            match self.index_of(&p) {
                Some(i) => coeffs[i] += k,
                None if p.is_identity_word() => {}
                None => outside += k * k,
            }
        }
        Ok((coeffs, outside.sqrt()))
    }

    /// Attaches `observable`, recording `mu` and the out-of-span residual.
    pub fn with_observable(mut self, observable: &PauliSum<T>) -> Result<Self, DlaError> {
        let (mu, residual) = self.project(observable)?;
        self.mu = mu;
        self.observable_residual = residual;
        Ok(self)
    }

    fn check_qubits(&self, n: usize) -> Result<(), DlaError> {
        if n != self.n_qubits {
            Err(DlaError::QubitMismatch {
                expected: self.n_qubits,
                got: n,
            })
        } else {
            Ok(())
        }
    }

    /// Symbolic closure check: every pairwise commutator stays in the span.
    pub fn is_closed(&self) -> bool {
        self.words.iter().enumerate().all(|(i, a)| {
            self.words[..i]
                .iter()
                .all(|b| match a.commutator(b).expect("same register") {
                    None => true,
                    Some(c) => self.contains(&c),
                })
        })
    }
}

/// Smallest real Lie algebra containing `i·g` for every generator word.
///
/// Commutators are taken pairwise until no new word appears; words keep
/// insertion order, generators first.
pub fn lie_closure<T: Real>(
    generators: &[PauliString],
    dim_cap: usize,
) -> Result<DlaBasis<T>, DlaError> {
    let first = generators.first().ok_or(DlaError::NoGenerators)?;
    let mut basis = DlaBasis::from_words(first.n_qubits(), &[])?;
    for g in generators {
        basis.check_qubits(g.n_qubits())?;
        basis.insert(g);
        if basis.dim() > dim_cap {
            return Err(DlaError::DimCapExceeded { cap: dim_cap });
        }
    }
    let mut i = 0;
    while i < basis.words.len() {
        let a = basis.words[i];
        for j in 0..i {
            let b = basis.words[j];
            if let Some(c) = a.commutator(&b)? {
                if basis.insert(&c) && basis.dim() > dim_cap {
                    return Err(DlaError::DimCapExceeded { cap: dim_cap });
                }
            }
        }
        i += 1;
    }
    basis.mu = vec![T::zero(); basis.dim()];
    Ok(basis)
}

/// Smallest span of Pauli words that contains every term of `observable`
/// and is invariant under commutation with the generators (hence under
/// conjugation by every circuit they generate) and under conjugation by the
/// parameter-free `fixed` circuit in both directions. The observable is
/// attached.
///
/// When the observable lies in the generators' Lie algebra this is a
/// sub-span of that algebra; otherwise it is the module of the algebra
/// that the observable's Heisenberg evolution explores.
pub fn observable_module<T: Real>(
    generators: &[PauliString],
    fixed: Option<&Circuit<T>>,
    observable: &PauliSum<T>,
    dim_cap: usize,
) -> Result<DlaBasis<T>, DlaError> {
    let n = observable.n_qubits();
    let mut basis = DlaBasis::from_words(n, &[])?;
    for (p, _) in observable.terms() {
        basis.insert(&p);
    }
    for g in generators {
        basis.check_qubits(g.n_qubits())?;
    }
    if let Some(f) = fixed {
        basis.check_qubits(f.n_qubits())?;
    }
    let mut i = 0;
    while i < basis.words.len() {
        let w = basis.words[i];
        let mut found = Vec::new();
        for g in generators {
            if let Some(c) = g.commutator(&w)? {
                found.push(c);
            }
        }
        if let Some(f) = fixed {
            let single = PauliSum::from_pauli(&w);
            for img in [
                evolve_forward(&single, f, &[])?,
                evolve_backward(&single, f, &[])?,
            ] {
                found.extend(img.pruned(T::lit(1e-14)).terms().map(|(p, _)| p));
            }
        }
        for c in found {
            if basis.insert(&c) && basis.dim() > dim_cap {
                return Err(DlaError::DimCapExceeded { cap: dim_cap });
            }
        }
        i += 1;
    }
    basis.mu = vec![T::zero(); basis.dim()];
    basis.with_observable(observable)
}

/// Projections `Tr(B_α ρ)` of a pure state onto the basis words.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotVector<T: Real>(pub Vec<T>);

impl<T: Real> SnapshotVector<T> {
    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> T {
        self.0.iter().map(|&v| v * v).sum()
    }

    /// `‖self − other‖²`.
    pub fn distance_sqr(&self, other: &Self) -> T {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum()
    }
}

impl<T: Real> Index<usize> for SnapshotVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

pub fn snapshot<T: Real>(
    state: &StateVector<T>,
    basis: &DlaBasis<T>,
) -> Result<SnapshotVector<T>, DlaError> {
    basis.check_qubits(state.n_qubits())?;
    Ok(SnapshotVector(
        basis
            .words
            .iter()
            .map(|w| state.pauli_expectation(w))
            .collect::<Result<_, _>>()?,
    ))
}

/// `Σ_α Tr(ρ B_α)²`.
pub fn generalized_purity<T: Real>(
    state: &StateVector<T>,
    basis: &DlaBasis<T>,
) -> Result<T, DlaError> {
    Ok(snapshot(state, basis)?.norm_sqr())
}

/// Adjoint action of the circuit on the basis:
/// `M[α][β] = Tr(B_α U B_β U†)/2^n`.
pub fn adjoint_rep<T: Real>(
    circuit: &Circuit<T>,
    theta: &[T],
    basis: &DlaBasis<T>,
) -> Result<RealMatrix<T>, DlaError> {
    basis.check_qubits(circuit.n_qubits())?;
    let d = basis.dim();
    let mut m = RealMatrix::zeros(d, d);
    for (beta, w) in basis.words.iter().enumerate() {
        let img = evolve_forward(&PauliSum::from_pauli(w), circuit, theta)?;
        let (col, residual) = basis.project(&img)?;
        if residual > T::lit(CLOSURE_TOLERANCE) {
            return Err(DlaError::NotClosed {
                word: w.label(),
                residual: residual.to_f64_lossy(),
            });
        }
        for (alpha, v) in col.into_iter().enumerate() {
            m[(alpha, beta)] = v;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::GateOp;
    use std::f64::consts::PI;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn abelian_closure() {
        let b = lie_closure::<f64>(&[p("X")], DEFAULT_DIM_CAP).unwrap();
        assert_eq!(b.labels(), vec!["X"]);
    }

    #[test]
    fn su2_closure_order() {
        let b = lie_closure::<f64>(&[p("X"), p("Z")], DEFAULT_DIM_CAP).unwrap();
        assert_eq!(b.labels(), vec!["X", "Z", "Y"]);
        assert!(b.is_closed());
    }

    #[test]
    fn closure_cap_and_empty() {
        assert!(matches!(
            lie_closure::<f64>(&[], 10),
            Err(DlaError::NoGenerators)
        ));
        let gens = [p("XI"), p("ZI"), p("IX"), p("IZ"), p("XX")];
        assert!(matches!(
            lie_closure::<f64>(&gens, 5),
            Err(DlaError::DimCapExceeded { cap: 5 })
        ));
        // full su(4)
        assert_eq!(
            lie_closure::<f64>(&gens, DEFAULT_DIM_CAP).unwrap().dim(),
            15
        );
    }

    #[test]
    fn identity_generator_is_dropped() {
        let b = lie_closure::<f64>(&[p("II"), p("XI")], DEFAULT_DIM_CAP).unwrap();
        assert_eq!(b.labels(), vec!["XI"]);
    }

    #[test]
    fn observable_coefficients() {
        let b = lie_closure::<f64>(&[p("X"), p("Z")], DEFAULT_DIM_CAP).unwrap();
        let mut obs = PauliSum::from_pauli(&p("Z"));
        obs.add_term(p("X").key(), 0.5);
        let b = b.with_observable(&obs).unwrap();
        assert_eq!(b.mu(), &[0.5, 1.0, 0.0]);
        assert!(b.contains_observable());
        let abelian = lie_closure::<f64>(&[p("X")], 8)
            .unwrap()
            .with_observable(&obs)
            .unwrap();
        assert!(!abelian.contains_observable());
        assert!((abelian.observable_residual() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn module_of_observable_is_invariant() {
        let gens = [p("YI"), p("IY")];
        let obs = PauliSum::<f64>::from_pauli(&p("ZZ"));
        let m = observable_module(&gens, None, &obs, DEFAULT_DIM_CAP).unwrap();
        // products of {X, Z} letters on both qubits
        assert_eq!(m.dim(), 4);
        assert_eq!(m.mu()[0], 1.0);
        for w in m.words() {
            for g in &gens {
                if let Some(c) = g.commutator(w).unwrap() {
                    assert!(m.contains(&c));
                }
            }
        }
    }

    #[test]
    fn snapshot_and_purity_examples() {
        let basis = DlaBasis::<f64>::from_words(3, &[p("ZII"), p("IZI"), p("IIZ")]).unwrap();
        let zero = StateVector::zero_state(3).unwrap();
        assert_eq!(snapshot(&zero, &basis).unwrap().values(), &[1.0, 1.0, 1.0]);
        assert_eq!(generalized_purity(&zero, &basis).unwrap(), 3.0);
        let mut plus = zero.clone();
        for q in 0..3 {
            plus.apply(&GateOp::H(q)).unwrap();
        }
        assert!(generalized_purity(&plus, &basis).unwrap().abs() < 1e-15);
        assert!(snapshot(&StateVector::zero_state(2).unwrap(), &basis).is_err());
    }

    #[test]
    fn adjoint_of_rx_pi() {
        let basis = lie_closure::<f64>(&[p("X"), p("Y")], DEFAULT_DIM_CAP).unwrap();
        assert_eq!(basis.labels(), vec!["X", "Y", "Z"]);
        let mut c = Circuit::new(1).unwrap();
        c.push(GateOp::Rx(0, PI)).unwrap();
        let m = adjoint_rep(&c, &[], &basis).unwrap();
        let want = RealMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, -1.0],
        ]);
        assert!(m.max_abs_diff(&want) < 1e-12);
        let id = adjoint_rep(&Circuit::new(1).unwrap(), &[], &basis).unwrap();
        assert_eq!(id, RealMatrix::identity(3));
    }

    #[test]
    fn adjoint_detects_escape() {
        let basis = DlaBasis::<f64>::from_words(1, &[p("Z")]).unwrap();
        let mut c = Circuit::new(1).unwrap();
        c.push(GateOp::H(0)).unwrap();
        assert!(matches!(
            adjoint_rep(&c, &[], &basis),
            Err(DlaError::NotClosed { .. })
        ));
    }
}
