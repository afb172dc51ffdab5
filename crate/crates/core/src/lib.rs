//! Certification of pure quantum states from single-qubit measurements.
//!
//! The crate simulates a lab state, answers product-projector queries on a
//! target state (dense or MPS), runs the adaptive certification test, and
//! computes its outcome distribution exactly. It also builds the
//! codeword-superposition instances that defeat non-adaptive product
//! measurements.

pub mod analyzer;
pub mod certify;
pub mod dtbasis;
pub mod error;
pub mod lowerbound;
pub mod mps;
pub mod oracle;
pub mod qmath;
pub mod rng;
pub mod states;

pub use num_complex::Complex64 as C64;

pub use analyzer::{ExactDistribution, OutcomeRow, SubtestDecomposition, SubtestProbabilities};
pub use certify::{
    certify_amplified, certify_once, AmplifiedOutcome, CertifyTranscript, LabState, Verdict,
    WrapperConfig,
};
pub use dtbasis::{equiprobable_basis, lazy_phase_path, DtPath, OutcomeSource, PhaseTree};
pub use error::{Error, Result};
pub use lowerbound::{AdaptiveProductBasis, CodeEnsemble, Mixture};
pub use mps::{MpsState, MpsTensor};
pub use oracle::{DenseOracle, Factor, MpsOracle, ProductQuery, TargetOracle};
pub use qmath::{BlochVector, Density1Q, Ket1, SingleQubitBasis, StateVector, SubVector};
