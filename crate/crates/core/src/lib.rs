//! Upper and lower bounds on the energy-constrained quantum capacity of
//! single-mode bosonic attenuators and amplifiers whose environment may be
//! any state (thermal, squeezed thermal, Fock, or known only through its
//! energy and entropy), checked against two coherent-information oracles:
//! an exact covariance-matrix computation for Gaussian environments and a
//! truncated Fock-space simulation for everything representable.
//!
//! Entropies are computed in nats; [`Units`] converts for presentation.

pub mod bounds;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod model;
pub mod sweep;

pub use bounds::{bounds_report, Bounds, BoundsReport, Flag, OracleSet};
pub use error::{Error, Result};
pub use fock::{coherent_information_fock, FockConfig, OracleResult};
pub use gaussian::{g_inv, g_nats, CovarianceMatrix, SymplecticMatrix};
pub use model::{ChannelSpec, EnvSummary, EnvironmentModel, Units};
pub use sweep::{
    consistency_report, run_preset, run_sweep, ConsistencyReport, FigurePreset, GridSpec, NGrid,
    OracleChoice, SweepConfig,
};
