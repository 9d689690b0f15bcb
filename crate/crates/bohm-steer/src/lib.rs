//! Desk-scale numerical model of nonlocal trajectory steering for an
//! entangled photon pair in a two-slit geometry.
//!
//! One photon propagates through a birefringent displacer that splits it into
//! two transversely separated Gaussian packets tagged by polarization; its
//! partner is measured in a rotated linear basis, which remotely selects a
//! coherent or incoherent packet combination. The crate computes the guiding
//! velocity field of the resulting (possibly mixed) state, integrates
//! trajectories across a stack of imaging planes, and emulates the
//! weak-measurement detection chain (polarization phase coupling, circular
//! port splitting, Poisson counting, Gaussian-center windowing, arcsin
//! extraction, kernel interpolation) well enough that the reconstruction
//! round-trips against the analytic fields.
//!
//! Modules:
//! - [`packet`]: paraxial Gaussian wavepackets and analytic overlaps
//! - [`state`]: branch superpositions, projections, velocity fields
//! - [`trajectory`]: Euler plane-stepping, steering, velocity-change maps
//! - [`weakmeas`]: detector emulation, calibration, momentum extraction
//! - [`config`], [`io`], [`svg`], [`cli`]: run configuration and artifacts

pub mod cli;
pub mod config;
pub mod io;
pub mod packet;
pub mod state;
pub mod svg;
pub mod trajectory;
pub mod weakmeas;

pub(crate) fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}
