//! Pulse-level simulation of superconducting qubits with zero-noise
//! extrapolation.
//!
//! Noise is amplified by stretching pulses in time at fixed rotation
//! angle; expectation values measured at several stretch factors are
//! combined by Richardson extrapolation to estimate the noiseless value.

pub mod cli;
pub mod clifford;
pub mod config;
pub mod cr;
pub mod density;
pub mod error;
pub mod experiments;
pub mod gates;
pub(crate) mod lindblad;
pub mod measure;
pub mod noise;
pub mod pauli;
pub mod protocols;
pub mod pulse;
pub mod spsa;
pub mod vqe;
pub mod zne;

pub use density::DensityMatrix;
pub use error::{Error, Result};
pub use noise::{ConfusionMatrix, Dissipator, DriftProfile, NoiseModel, QubitNoise};
pub use pauli::{expectation, Pauli, PauliString, PauliSum, PauliTerm};
pub use pulse::{run_circuit, Circuit, Envelope, Instruction, PulseGate, Simulator, StretchedCircuit};
pub use zne::{extrapolate, Measurement, MitigatedEstimate, StretchSet};
