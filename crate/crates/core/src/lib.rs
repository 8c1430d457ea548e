//! Photon-exchange entanglement of two three-level quantum dots coupled
//! to a single whispering-gallery cavity mode.
//!
//! The crate is organized bottom-up:
//!
//! * [`tensor`]: dense complex algebra on tensor-product spaces,
//! * [`model`]: Hamiltonian, jump operators and diagnostics operators,
//! * [`protocol`]: the entangling schedule and reference states,
//! * [`dynamics`]: exact unitary and RK4 master-equation evolution,
//! * [`entanglement`]: two-qubit reduction, concurrence and EoF,
//! * [`experiment`]: configuration, run records, truth table and sweeps.

pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod experiment;
pub mod model;
pub mod protocol;
pub mod tensor;

pub use error::{Error, Result};
