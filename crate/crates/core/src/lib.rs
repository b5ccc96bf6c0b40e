//! Simulation and analysis engine for a coherently driven two-level atom
//! coupled to a single cavity mode.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blockade;
pub mod correlations;
pub mod error;
pub mod fitting;
pub mod hilbert;
pub mod jcmodel;
pub mod lindblad;
pub mod semiclassical;
pub mod sparse;
pub mod spectral;
pub mod units;

/// Engine version recorded in output provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use blockade::BlockadeReport;
pub use correlations::{CorrelationSeries, PhotonDistribution, SteadyStateModel};
pub use error::{Error, Result};
pub use fitting::{FitResult, LongTimeFit};
pub use hilbert::{AtomState, OperatorMatrix, SpaceDims};
pub use jcmodel::{Drive, DriveKind, SystemParams};
pub use lindblad::{DensityMatrix, Superoperator};
pub use semiclassical::{SpectrumModel, SpectrumSeries};
