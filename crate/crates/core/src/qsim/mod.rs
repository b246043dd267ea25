//! Dense statevector simulation for small registers.
//!
//! Qubit 0 is the most significant bit of the amplitude index, so the
//! amplitude of `|q0 q1 … q_{n-1}⟩` sits at index `q0·2^{n-1} + … + q_{n-1}`.

mod circuit;
mod gate;

use thiserror::Error;

pub use circuit::{Circuit, CircuitOp, ParamSlot};
pub(crate) use gate::{mat2_dagger, mat2_mul};
pub use gate::{unitarity_defect, GateKind, GateOp, Mat2};

use crate::pauli::{PauliError, PauliString, PauliSum};
use crate::scalar::{c, mul_i_pow, Cplx, Real};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("target qubit {target} out of range for {n_qubits} qubits")]
    TargetOutOfRange { target: usize, n_qubits: usize },
    #[error("gate targets qubit {0} twice")]
    DuplicateTargets(usize),
    #[error("state is not normalised (Σ|a|² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("expected {expected} parameters, got {got}")]
    ParamCountMismatch { expected: usize, got: usize },
    #[error("qubit count mismatch: expected {expected}, got {got}")]
    QubitCountMismatch { expected: usize, got: usize },
    #[error("{0} qubits requested; the simulator supports 1..={MAX_QUBITS}")]
    UnsupportedQubitCount(usize),
    #[error("amplitude array of length {0} is not 2^n")]
    BadAmplitudeLength(usize),
    #[error("rotation generator {0} is not a unit Hermitian Pauli word")]
    NonHermitianGenerator(String),
    #[error("circuit is not parameter-free")]
    HasParameters,
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// Allowed deviation of `Σ|a|²` from one.
pub fn norm_tolerance<T: Real>() -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(1e3))
}

/// Normalised pure state of `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    n_qubits: usize,
    amps: Vec<Cplx<T>>,
}

impl<T: Real> StateVector<T> {
    /// `|0…0⟩`.
    pub fn zero_state(n_qubits: usize) -> Result<Self, QsimError> {
        Self::basis_state(n_qubits, 0)
    }

    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self, QsimError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(QsimError::UnsupportedQubitCount(n_qubits));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(QsimError::TargetOutOfRange {
                target: index,
                n_qubits,
            });
        }
        let mut amps = vec![c(T::zero(), T::zero()); dim];
        amps[index] = c(T::one(), T::zero());
        Ok(Self { n_qubits, amps })
    }

    /// Wraps explicit amplitudes; the array must be normalised.
    pub fn from_amplitudes(amps: Vec<Cplx<T>>) -> Result<Self, QsimError> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QsimError::BadAmplitudeLength(len));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(QsimError::UnsupportedQubitCount(n_qubits));
        }
        let s = Self { n_qubits, amps };
        s.check_normalized()?;
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Cplx<T>] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn check_normalized(&self) -> Result<(), QsimError> {
        let ns = self.norm_sqr();
        if (ns - T::one()).abs() > norm_tolerance::<T>() || !ns.is_finite() {
            return Err(QsimError::NotNormalized {
                norm_sqr: ns.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Cplx<T>, QsimError> {
        self.check_qubits(other.n_qubits)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn check_qubits(&self, n: usize) -> Result<(), QsimError> {
        if n != self.n_qubits {
            Err(QsimError::QubitCountMismatch {
                expected: self.n_qubits,
                got: n,
            })
        } else {
            Ok(())
        }
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &GateOp<T>) -> Result<(), QsimError> {
        gate.validate(self.n_qubits)?;
        match gate {
            GateOp::Cz(a, b) => {
                let ma = 1usize << (self.n_qubits - 1 - a);
                let mb = 1usize << (self.n_qubits - 1 - b);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    if i & ma != 0 && i & mb != 0 {
                        *amp = -*amp;
                    }
                }
            }
            GateOp::PauliRotation { generator, angle } => {
                self.apply_pauli_rotation(generator, *angle);
            }
            _ => {
                let q = gate.targets()[0];
                let m = gate.matrix1().expect("single-qubit gate");
                self.apply_mat2(q, &m);
            }
        }
        Ok(())
    }

    pub(crate) fn apply_mat2(&mut self, qubit: usize, m: &Mat2<T>) {
        let stride = 1usize << (self.n_qubits - 1 - qubit);
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for i0 in base..base + stride {
                let i1 = i0 + stride;
                let (a0, a1) = (self.amps[i0], self.amps[i1]);
                self.amps[i0] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i1] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += 2 * stride;
        }
    }

    /// `P|ψ⟩` for a Pauli word with its (exact) coefficient.
    pub fn pauli_image(&self, p: &PauliString) -> Vec<Cplx<T>> {
        let (xm, zm) = p.index_masks();
        let y = p.y_count() as u8;
        let cf = c(T::lit(p.coeff().re as f64), T::lit(p.coeff().im as f64));
        let mut out = vec![c(T::zero(), T::zero()); self.amps.len()];
        for (b, &a) in self.amps.iter().enumerate() {
            let mut v = mul_i_pow(a * cf, y);
            if (zm & b).count_ones() & 1 == 1 {
                v = -v;
            }
            out[b ^ xm] = v;
        }
        out
    }

    fn apply_pauli_rotation(&mut self, p: &PauliString, angle: T) {
        let (s, co) = (angle * T::lit(0.5)).sin_cos();
        let img = self.pauli_image(p);
        for (a, pa) in self.amps.iter_mut().zip(img) {
            // cos(θ/2)ψ − i sin(θ/2) Pψ
            *a = *a * co + mul_i_pow(pa, 3) * s;
        }
    }

    /// `⟨ψ|P|ψ⟩` (real part; exact for Hermitian words).
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<T, QsimError> {
        self.check_qubits(p.n_qubits())?;
        let (xm, zm) = p.index_masks();
        let y = p.y_count() as u8;
        let mut acc = c(T::zero(), T::zero());
        for (b, &a) in self.amps.iter().enumerate() {
            let mut v = self.amps[b ^ xm].conj() * a;
            if (zm & b).count_ones() & 1 == 1 {
                v = -v;
            }
            acc += v;
        }
        let cf = c(T::lit(p.coeff().re as f64), T::lit(p.coeff().im as f64));
        Ok((mul_i_pow(acc, y) * cf).re)
    }
}

/// Returns the image of `state` under `gate`.
pub fn apply_gate<T: Real>(
    mut state: StateVector<T>,
    gate: &GateOp<T>,
) -> Result<StateVector<T>, QsimError> {
    state.check_normalized()?;
    state.apply(gate)?;
    Ok(state)
}

/// Runs `circuit` with parameters `theta` on `|0…0⟩`.
pub fn run_circuit<T: Real>(
    circuit: &Circuit<T>,
    theta: &[T],
) -> Result<StateVector<T>, QsimError> {
    circuit.run(theta)
}

/// Anything with a real expectation value on a pure state.
pub trait Observable<T: Real> {
    fn n_qubits(&self) -> usize;
    fn expectation_unchecked(&self, state: &StateVector<T>) -> T;
}

impl<T: Real> Observable<T> for PauliString {
    fn n_qubits(&self) -> usize {
        PauliString::n_qubits(self)
    }

    fn expectation_unchecked(&self, state: &StateVector<T>) -> T {
        state.pauli_expectation(self).expect("qubit count checked")
    }
}

impl<T: Real> Observable<T> for PauliSum<T> {
    fn n_qubits(&self) -> usize {
        PauliSum::n_qubits(self)
    }

    fn expectation_unchecked(&self, state: &StateVector<T>) -> T {
        self.terms()
            .map(|(p, k)| k * state.pauli_expectation(&p).expect("qubit count checked"))
            .sum()
    }
}

/// `⟨ψ|O|ψ⟩`.
pub fn expectation<T: Real, O: Observable<T> + ?Sized>(
    state: &StateVector<T>,
    observable: &O,
) -> Result<T, QsimError> {
    if observable.n_qubits() != state.n_qubits() {
        return Err(QsimError::QubitCountMismatch {
            expected: state.n_qubits(),
            got: observable.n_qubits(),
        });
    }
    Ok(observable.expectation_unchecked(state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn hadamard_on_zero() {
        let s = apply_gate(StateVector::<f64>::zero_state(1).unwrap(), &GateOp::H(0)).unwrap();
        for a in s.amplitudes() {
            assert_abs_diff_eq!(a.re, FRAC_1_SQRT_2, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, 0.0);
        }
    }

    #[test]
    fn cz_on_11_flips_sign() {
        let s = StateVector::<f64>::basis_state(2, 0b11).unwrap();
        let s = apply_gate(s, &GateOp::Cz(0, 1)).unwrap();
        assert_eq!(s.amplitudes()[3], c(-1.0, 0.0));
    }

    #[test]
    fn ry_injects_cosine_sine() {
        let s = StateVector::<f64>::zero_state(1).unwrap();
        let s = apply_gate(s, &GateOp::Ry(0, 2.0 * 0.6f64.acos())).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(s.amplitudes()[1].re, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn qubit_zero_is_msb() {
        let mut s = StateVector::<f64>::zero_state(3).unwrap();
        s.apply(&GateOp::Rx(0, PI)).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0b100].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pauli_rotation_matches_native_rotation() {
        let mut a = StateVector::<f64>::zero_state(2).unwrap();
        let mut b = a.clone();
        a.apply(&GateOp::H(0)).unwrap();
        b.apply(&GateOp::H(0)).unwrap();
        a.apply(&GateOp::Ry(1, 0.77)).unwrap();
        b.apply(&GateOp::PauliRotation {
            generator: p("IY"),
            angle: 0.77,
        })
        .unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn simple_expectations() {
        let zero = StateVector::<f64>::zero_state(1).unwrap();
        assert_eq!(expectation(&zero, &p("Z")).unwrap(), 1.0);
        let plus = apply_gate(zero, &GateOp::H(0)).unwrap();
        assert_abs_diff_eq!(expectation(&plus, &p("Z")).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(expectation(&plus, &p("X")).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(expectation(&plus, &p("-X")).unwrap(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn y_expectation_sign() {
        // RX(−π/2)|0⟩ = (|0⟩ + i|1⟩)/√2, the +1 eigenstate of Y
        let s = apply_gate(
            StateVector::<f64>::zero_state(1).unwrap(),
            &GateOp::Rx(0, -PI / 2.0),
        )
        .unwrap();
        assert_abs_diff_eq!(expectation(&s, &p("Y")).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn errors() {
        let s = StateVector::<f64>::zero_state(2).unwrap();
        assert!(matches!(
            apply_gate(s.clone(), &GateOp::H(2)),
            Err(QsimError::TargetOutOfRange { .. })
        ));
        assert!(matches!(
            expectation(&s, &p("Z")),
            Err(QsimError::QubitCountMismatch { .. })
        ));
        assert!(matches!(
            StateVector::from_amplitudes(vec![c(1.0, 0.0), c(1.0, 0.0)]),
            Err(QsimError::NotNormalized { .. })
        ));
        assert!(StateVector::<f64>::zero_state(13).is_err());
        assert!(StateVector::from_amplitudes(vec![c(1.0f64, 0.0); 3]).is_err());
    }

    #[test]
    fn single_precision_instantiation() {
        let mut s = StateVector::<f32>::zero_state(3).unwrap();
        for q in 0..3 {
            s.apply(&GateOp::H(q)).unwrap();
            s.apply(&GateOp::Ry(q, 0.3 * q as f32)).unwrap();
        }
        s.apply(&GateOp::Cz(0, 2)).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-5);
    }
}
