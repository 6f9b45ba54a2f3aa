//! Simulation and optimization of continuously driven ("dressed") qubits.
//!
//! Frequencies are angular (rad/s) throughout and times are in seconds; any
//! consistent unit system works since nothing is hard-coded to SI scales.

// `!(x > 0.0)` is the NaN-rejecting form used by every parameter check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod linalg;
pub mod su2;
pub mod propagation;
pub mod optimize;
pub mod quadrature;
pub mod floquet;
pub mod ensemble;
pub mod gates;
pub mod sensing;
pub mod export;

pub use control::{ControlScheme, NoiseModel, NoiseRealization, SchemeVariant, TimeDependentHamiltonian};
pub use ensemble::{CoherenceCurve, CoherenceOptions, SobolConfig, T2Estimate};
pub use error::{Error, Result};
pub use floquet::{FloquetConfig, GapStatistics, GlobalOptimum};
pub use gates::{GateResult, IonGateConfig};
pub use linalg::{CompositeSpace, Operator, PauliAxis, State, C64};
pub use propagation::Propagator;
pub use sensing::{ClockConstraint, SensitivityParams};
pub use su2::Su2;
