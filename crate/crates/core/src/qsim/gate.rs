use crate::pauli::PauliString;
use crate::scalar::{c, Cplx, Real};

use super::QsimError;

/// 2×2 complex matrix, row-major.
pub type Mat2<T> = [[Cplx<T>; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    Rx,
    Ry,
    Rz,
    Cz,
    U3,
    PauliRotation,
}

/// A concrete gate. Rotations follow `R_P(θ) = exp(−i θ/2 · P)`.
#[derive(Debug, Clone, PartialEq)]
pub enum GateOp<T: Real> {
    H(usize),
    Rx(usize, T),
    Ry(usize, T),
    Rz(usize, T),
    Cz(usize, usize),
    /// `U3(θ, φ, λ) = [[cos θ/2, −e^{iλ} sin θ/2], [e^{iφ} sin θ/2, e^{i(φ+λ)} cos θ/2]]`.
    U3 {
        qubit: usize,
        theta: T,
        phi: T,
        lambda: T,
    },
    /// `exp(−i θ/2 · P)` for a Hermitian unit-norm Pauli word `P`.
    PauliRotation {
        generator: PauliString,
        angle: T,
    },
}

impl<T: Real> GateOp<T> {
    pub fn kind(&self) -> GateKind {
        match self {
            GateOp::H(_) => GateKind::H,
            GateOp::Rx(..) => GateKind::Rx,
            GateOp::Ry(..) => GateKind::Ry,
            GateOp::Rz(..) => GateKind::Rz,
            GateOp::Cz(..) => GateKind::Cz,
            GateOp::U3 { .. } => GateKind::U3,
            GateOp::PauliRotation { .. } => GateKind::PauliRotation,
        }
    }

    pub fn targets(&self) -> Vec<usize> {
        match self {
            GateOp::H(q) | GateOp::Rx(q, _) | GateOp::Ry(q, _) | GateOp::Rz(q, _) => vec![*q],
            GateOp::U3 { qubit, .. } => vec![*qubit],
            GateOp::Cz(a, b) => vec![*a, *b],
            GateOp::PauliRotation { generator, .. } => {
                let m = generator.x_mask() | generator.z_mask();
                (0..generator.n_qubits())
                    .filter(|q| m >> q & 1 == 1)
                    .collect()
            }
        }
    }

    /// Checks targets against a register of `n_qubits`.
    pub fn validate(&self, n_qubits: usize) -> Result<(), QsimError> {
        match self {
            GateOp::Cz(a, b) if a == b => return Err(QsimError::DuplicateTargets(*a)),
            GateOp::PauliRotation { generator, .. } => {
                if generator.n_qubits() != n_qubits {
                    return Err(QsimError::QubitCountMismatch {
                        expected: n_qubits,
                        got: generator.n_qubits(),
                    });
                }
                let cf = generator.coeff();
                if cf.im != 0 || cf.re.abs() != 1 {
                    return Err(QsimError::NonHermitianGenerator(generator.to_string()));
                }
            }
            _ => {}
        }
        for t in self.targets() {
            if t >= n_qubits {
                return Err(QsimError::TargetOutOfRange {
                    target: t,
                    n_qubits,
                });
            }
        }
        Ok(())
    }

    /// Matrix of a single-qubit gate, `None` for multi-qubit gates.
    pub fn matrix1(&self) -> Option<Mat2<T>> {
        let half = T::lit(0.5);
        let z = T::zero();
        Some(match *self {
            GateOp::H(_) => {
                let s = T::FRAC_1_SQRT_2();
                [[c(s, z), c(s, z)], [c(s, z), c(-s, z)]]
            }
            GateOp::Rx(_, t) => {
                let (s, co) = (t * half).sin_cos();
                [[c(co, z), c(z, -s)], [c(z, -s), c(co, z)]]
            }
            GateOp::Ry(_, t) => {
                let (s, co) = (t * half).sin_cos();
                [[c(co, z), c(-s, z)], [c(s, z), c(co, z)]]
            }
            GateOp::Rz(_, t) => {
                let (s, co) = (t * half).sin_cos();
                [[c(co, -s), c(z, z)], [c(z, z), c(co, s)]]
            }
            GateOp::U3 {
                theta, phi, lambda, ..
            } => {
                let (s, co) = (theta * half).sin_cos();
                let e = |a: T| c(a.cos(), a.sin());
                [
                    [c(co, z), -e(lambda) * s],
                    [e(phi) * s, e(phi + lambda) * co],
                ]
            }
            GateOp::Cz(..) | GateOp::PauliRotation { .. } => return None,
        })
    }

    pub fn inverse(&self) -> Self {
        match self.clone() {
            GateOp::H(q) => GateOp::H(q),
            GateOp::Rx(q, t) => GateOp::Rx(q, -t),
            GateOp::Ry(q, t) => GateOp::Ry(q, -t),
            GateOp::Rz(q, t) => GateOp::Rz(q, -t),
            GateOp::Cz(a, b) => GateOp::Cz(a, b),
            GateOp::U3 {
                qubit,
                theta,
                phi,
                lambda,
            } => GateOp::U3 {
                qubit,
                theta: -theta,
                phi: -lambda,
                lambda: -phi,
            },
            GateOp::PauliRotation { generator, angle } => GateOp::PauliRotation {
                generator,
                angle: -angle,
            },
        }
    }
}

pub(crate) fn mat2_mul<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    let mut out = [[c(T::zero(), T::zero()); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub(crate) fn mat2_dagger<T: Real>(a: &Mat2<T>) -> Mat2<T> {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// Largest entry-wise deviation of `U†U` from the identity.
pub fn unitarity_defect<T: Real>(u: &Mat2<T>) -> T {
    let p = mat2_mul(&mat2_dagger(u), u);
    let mut worst = T::zero();
    for (i, row) in p.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((v - c(target, T::zero())).norm());
        }
    }
    worst
}
