//! Simulation and analysis of single-photon entanglement between two
//! orthogonally polarized modes of a microwave cavity, prepared and probed
//! by circular Rydberg atoms.
//!
//! The crate is organized bottom-up:
//!
//! * [`hilbert`]: truncated Fock-space states of atom ⊗ M_a ⊗ M_b.
//! * [`dynamics`]: the rotating-frame Jaynes-Cummings Hamiltonian, unitary
//!   and Lindblad propagation, and closed-form Rabi amplitudes.
//! * [`schedule`]: Stark-detuning calibration and compilation of the source,
//!   probe and phase-gate pulse plans.
//! * [`experiment`]: full sequences in the ideal, master-equation and Monte
//!   Carlo regimes, plus the calibration routines.
//! * [`analysis`]: binomial errors, the shared-phase multi-window sine fit and
//!   contrast-decay extraction.
//!
//! Units are SI throughout: seconds, rad/s, metres.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
mod error;
pub mod experiment;
pub mod hilbert;
pub mod schedule;

pub use error::{Error, Result};

pub use analysis::{binomial_stderr, contrast_decay, fit_beat, FitReport, WindowFit};
pub use dynamics::{
    CouplingProfile, Dissipation, Drive, Method, PhysicalParams, ProfileKind, PropagatorConfig,
};
pub use experiment::{
    DataPoint, DetectorModel, RunDataset, SampleModel, ScanPoint, Setup,
};
pub use hilbert::{Atom, DensityOp, Layout, Mode, ModeDims, PureState, Subsystem, C64};
pub use schedule::{PlanConfig, PulsePlan, Segment, SegmentKind, StarkCalib};
