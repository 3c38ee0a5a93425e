// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod evans;
pub mod indices;
pub mod nonlinearity;
mod ode;
pub mod spectrum;
pub mod wave_family;

pub use asymptotics::{PFSolution, PowerLaw, ScalingConvention, SolitaryVerdict};
pub use error::{Result, WaveError};
pub use evans::{EvansCoefficients, MonodromyMatrix, OriginDerivatives, SignAtInfinity};
pub use indices::{Modulational, NullspaceResiduals, StabilityReport};
pub use nonlinearity::{Nonlinearity, PowerConvention};
pub use num_complex::Complex64;
pub use spectrum::{
    ModulationalAgreement, ProjectiveCubic, ProjectiveRoots, ScanRegion, SpectrumBranch, SpectrumPoint,
};
pub use wave_family::{ConservedSet, Functional, GradientTable, Param, PeriodicWave, TurningPoints, WaveParams};
