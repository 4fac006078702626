//! Lindblad model of a singlet double quantum dot read out by a quantum
//! point contact, with phonon relaxation, and the counting statistics of the
//! detector current.
//!
//! Numerics are generic over [`Real`] (`f32`, `f64`); the `*F64` aliases
//! below are the intended entry points.

// `!(x > 0)` is used on purpose so that NaN fails validation; quadrature and
// Padé coefficients are kept at their published precision.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod engine;
mod error;
pub mod linalg;
pub mod model;
pub mod noise;
pub mod params;
pub mod quadrature;
mod scalar;
pub mod sweep;
pub mod trajectories;
pub mod units;
pub mod validate;

pub use engine::{
    build_generator, evolve, evolve_with, generator_for, spectral_gap, steady_state_analytic, steady_state_numeric, DensityMatrix,
    EvolveMethod, Generator, Superoperator,
};
pub use error::{Error, Result};
pub use model::{
    bose_occupation, build_phonon_operators, build_qpc_operators, delta_from_splitting, eigenstructure, phonon_rates, qpc_amplitudes,
    splitting_from_delta, EigenStructure, Operator, OperatorSet, PhononRates, QpcAmplitudes,
};
pub use noise::{
    correlation_regular, fano_nophonon, fano_quadrature, fano_resolvent, jump_map, mean_current, triplet_current_and_fano, JumpMap,
    NoiseMethod, NoiseResult,
};
pub use params::{apply_config, default_params, effective_couplings, parse_config, GapConvention, ModelParams};
pub use scalar::{Real, C};
pub use sweep::{run_sweep, SweepMethod, SweepRecord, SweepRow, SweepSpec, SweepVariable};
pub use trajectories::{ensemble_average_state, run_trajectories, CountRecord, EnsembleState, TrajectoryConfig};
pub use validate::{run_validation, ValidateOptions, ValidationReport};

pub type ModelParamsF64 = ModelParams<f64>;
pub type ModelParamsF32 = ModelParams<f32>;
pub type OperatorF64 = Operator<f64>;
pub type DensityMatrixF64 = DensityMatrix<f64>;
pub type GeneratorF64 = Generator<f64>;
pub type NoiseResultF64 = NoiseResult<f64>;
