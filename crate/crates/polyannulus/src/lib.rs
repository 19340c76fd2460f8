//! A computer-algebra kernel for truncated p-adic Laurent series over
//! polyannuli: certified coefficient windows, decay witnesses, twisted
//! difference/differential modules, rank-one regularization, and iterative
//! unit-root slope splitting.

pub mod error;
pub mod gen;
pub mod io;
pub mod matrix;
pub mod newton;
pub mod pipeline;
pub mod regularize;
pub mod scalar;
pub mod series;
pub mod sigma_nabla;
pub mod split;
pub mod witness;

pub use error::{KernelError, Result};
pub use matrix::SeriesMatrix;
pub use newton::{NewtonPolygon, PointSpec, ScanOutcome};
pub use regularize::{
    ExtensionResult, OverconvergenceReport, RankOneConnection, RegularizationResult,
};
pub use scalar::{GlobalParams, PadicScalar};
pub use series::{Exponent, Series, VarSpec, Window, WIN_INF};
pub use sigma_nabla::{DefectReport, SigmaNablaModule};
pub use split::{SplitInput, SplitResult, UnitRootExtraction};
pub use witness::{DecayKind, DecayWitness, Rat};
