//! Quantum state transfer on spin chains, restricted to the one-excitation
//! subspace.
//!
//! The crate builds the N×N one-excitation Hamiltonian of two chain models
//! (nearest-neighbour Heisenberg and long-range anisotropic dipolar), evolves
//! excitations exactly through the spectral decomposition, computes transfer
//! and localization diagnostics, and searches for coupling distributions that
//! maximize the transferred population at a chosen arrival time with a
//! population-based pivot optimizer.

pub mod analysis;
pub mod chain;
pub mod dynamics;
pub mod pivot;

pub use analysis::{
    gap_ladder, localization_profile, localization_profile_at, order_report, GapLadder,
    LocalizationProfile, OrderReport,
};
pub use chain::{
    build_hamiltonian, build_long_range, build_short_range, homogeneous_baseline, ChainSpec,
    Model, OneExcitationHamiltonian, MIN_GAP,
};
pub use dynamics::{
    averaged_fidelity, decompose, ipr, pretty_good_time, sample_series, state_fidelity,
    EvolvedState, Observable, SpectralDecomposition, TimeSeries,
};
pub use pivot::{
    cost, pivot_step, run_pivot, run_pivot_seeded, run_schedule, suboptimal_snapshots,
    HypercubeSchedule, OptCount, OptimizerRun, Parameterization, PivotConfig, ScheduleConfig,
    ScheduleRecord, Snapshot, Termination, TracePoint,
};

use thiserror::Error;

/// Errors shared by every module of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A chain specification or operation input violates a documented invariant.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// A numerical routine failed (eigensolver non-convergence, capacity limits).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
