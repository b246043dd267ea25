//! DyLoC benchmark core: a small statevector simulator, Pauli-word Lie
//! algebra tooling, the baseline and DyLoC models, training, and the
//! gradient-snapshot privacy attacks.
//!
//! The numeric kernels (`qsim`, `pauli`, `dla`, `linalg`, [`learn::Adam`])
//! are generic over [`scalar::Real`]; the aliases below fix them at `f64`,
//! which is what the models, training loop and attacks use.

pub mod attacks;
pub mod dla;
pub mod learn;
pub mod linalg;
pub mod models;
pub mod pauli;
pub mod qsim;
pub mod scalar;

pub use pauli::{Pauli, PauliString};

pub type StateVector = qsim::StateVector<f64>;
pub type GateOp = qsim::GateOp<f64>;
pub type Circuit = qsim::Circuit<f64>;
pub type PauliSum = pauli::PauliSum<f64>;
pub type DlaBasis = dla::DlaBasis<f64>;
pub type SnapshotVector = dla::SnapshotVector<f64>;
pub type RealMatrix = linalg::RealMatrix<f64>;
pub type Adam = learn::Adam<f64>;
