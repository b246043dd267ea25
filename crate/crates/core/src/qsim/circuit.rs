use crate::pauli::{Pauli, PauliString};
use crate::scalar::Real;

use super::{GateKind, GateOp, QsimError, StateVector, MAX_QUBITS};

/// One step of a [`Circuit`]: either a fixed gate or a trainable Pauli
/// rotation `exp(−i θ_k/2 · P)` bound to parameter slot `k`.
#[derive(Debug, Clone, PartialEq)]
pub enum CircuitOp<T: Real> {
    Fixed(GateOp<T>),
    Param {
        slot: usize,
        kind: GateKind,
        generator: PauliString,
    },
}

/// Where a trainable parameter lives and which Pauli word generates it.
///
/// The rotation is `exp(−i θ/2 · P)`, i.e. the generator is `P/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSlot {
    pub op_index: usize,
    pub kind: GateKind,
    pub generator: PauliString,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit<T: Real> {
    n_qubits: usize,
    ops: Vec<CircuitOp<T>>,
    slots: Vec<ParamSlot>,
}

impl<T: Real> Circuit<T> {
    pub fn new(n_qubits: usize) -> Result<Self, QsimError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(QsimError::UnsupportedQubitCount(n_qubits));
        }
        Ok(Self {
            n_qubits,
            ops: Vec::new(),
            slots: Vec::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Number of trainable parameters `D`.
    pub fn num_params(&self) -> usize {
        self.slots.len()
    }

    pub fn ops(&self) -> &[CircuitOp<T>] {
        &self.ops
    }

    pub fn param_slots(&self) -> &[ParamSlot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn gate_kinds(&self) -> Vec<GateKind> {
        self.ops
            .iter()
            .map(|op| match op {
                CircuitOp::Fixed(g) => g.kind(),
                CircuitOp::Param { kind, .. } => *kind,
            })
            .collect()
    }

    pub fn push(&mut self, gate: GateOp<T>) -> Result<&mut Self, QsimError> {
        gate.validate(self.n_qubits)?;
        self.ops.push(CircuitOp::Fixed(gate));
        Ok(self)
    }

    /// Trainable single-qubit rotation about `axis` on `qubit`; returns the slot index.
    pub fn push_param_rotation(&mut self, axis: Pauli, qubit: usize) -> Result<usize, QsimError> {
        let kind = match axis {
            Pauli::X => GateKind::Rx,
            Pauli::Y => GateKind::Ry,
            Pauli::Z => GateKind::Rz,
            Pauli::I => {
                return Err(QsimError::NonHermitianGenerator("identity axis".into()));
            }
        };
        let generator = PauliString::single(self.n_qubits, qubit, axis).map_err(|_| {
            QsimError::TargetOutOfRange {
                target: qubit,
                n_qubits: self.n_qubits,
            }
        })?;
        self.push_param_with(kind, generator)
    }

    /// Trainable rotation generated by an arbitrary Hermitian Pauli word.
    pub fn push_param_pauli(&mut self, generator: PauliString) -> Result<usize, QsimError> {
        self.push_param_with(GateKind::PauliRotation, generator)
    }

    fn push_param_with(
        &mut self,
        kind: GateKind,
        generator: PauliString,
    ) -> Result<usize, QsimError> {
        GateOp::PauliRotation {
            generator,
            angle: T::zero(),
        }
        .validate(self.n_qubits)?;
        let slot = self.slots.len();
        self.slots.push(ParamSlot {
            op_index: self.ops.len(),
            kind,
            generator,
        });
        self.ops.push(CircuitOp::Param {
            slot,
            kind,
            generator,
        });
        Ok(slot)
    }

    /// Appends `other`; its parameter slots are renumbered after ours.
    pub fn extend(&mut self, other: &Circuit<T>) -> Result<(), QsimError> {
        if other.n_qubits != self.n_qubits {
            return Err(QsimError::QubitCountMismatch {
                expected: self.n_qubits,
                got: other.n_qubits,
            });
        }
        let offset = self.slots.len();
        let op_offset = self.ops.len();
        for op in &other.ops {
            self.ops.push(match op {
                CircuitOp::Fixed(g) => CircuitOp::Fixed(g.clone()),
                CircuitOp::Param {
                    slot,
                    kind,
                    generator,
                } => CircuitOp::Param {
                    slot: slot + offset,
                    kind: *kind,
                    generator: *generator,
                },
            });
        }
        for s in &other.slots {
            self.slots.push(ParamSlot {
                op_index: s.op_index + op_offset,
                ..s.clone()
            });
        }
        Ok(())
    }

    fn check_theta(&self, theta: &[T]) -> Result<(), QsimError> {
        if theta.len() != self.slots.len() {
            return Err(QsimError::ParamCountMismatch {
                expected: self.slots.len(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// Concrete gate list for parameters `theta`.
    pub fn bind(&self, theta: &[T]) -> Result<Vec<GateOp<T>>, QsimError> {
        self.check_theta(theta)?;
        Ok(self
            .ops
            .iter()
            .map(|op| match op {
                CircuitOp::Fixed(g) => g.clone(),
                CircuitOp::Param {
                    slot,
                    kind,
                    generator,
                } => {
                    let angle = theta[*slot];
                    let q = (generator.x_mask() | generator.z_mask()).trailing_zeros() as usize;
                    match kind {
                        GateKind::Rx => GateOp::Rx(q, angle),
                        GateKind::Ry => GateOp::Ry(q, angle),
                        GateKind::Rz => GateOp::Rz(q, angle),
                        _ => GateOp::PauliRotation {
                            generator: *generator,
                            angle,
                        },
                    }
                }
            })
            .collect())
    }

    /// Applies the circuit to `state` in place.
    pub fn apply_to(&self, state: &mut StateVector<T>, theta: &[T]) -> Result<(), QsimError> {
        if state.n_qubits() != self.n_qubits {
            return Err(QsimError::QubitCountMismatch {
                expected: self.n_qubits,
                got: state.n_qubits(),
            });
        }
        for g in self.bind(theta)? {
            state.apply(&g)?;
        }
        Ok(())
    }

    /// State after applying the circuit to `|0…0⟩`.
    pub fn run(&self, theta: &[T]) -> Result<StateVector<T>, QsimError> {
        let mut s = StateVector::zero_state(self.n_qubits)?;
        self.apply_to(&mut s, theta)?;
        Ok(s)
    }

    /// Inverse of a parameter-free circuit.
    pub fn inverse(&self) -> Result<Circuit<T>, QsimError> {
        if !self.slots.is_empty() {
            return Err(QsimError::HasParameters);
        }
        let mut out = Circuit::new(self.n_qubits)?;
        for op in self.ops.iter().rev() {
            if let CircuitOp::Fixed(g) = op {
                out.push(g.inverse())?;
            }
        }
        Ok(out)
    }
}
