//! Physical-layer secrecy metrics for an uplink satellite link observed by
//! eavesdropping satellites scattered over spherical shells.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: incomplete gamma family, exponential integral, Pochhammer
//!   symbols and the truncation control shared by every infinite series.
//! - [`quadrature`]: adaptive Gauss–Kronrod integration used by the secrecy
//!   integrals and by the test oracles.
//! - [`geometry`]: Earth/shell geometry, beam cones and cap areas.
//! - [`pointprocess`]: binomial point process counts and distance laws.
//! - [`channel`]: shadowed-Rician fading, antenna pattern and link budget.
//! - [`snrdist`]: closed-form SNR distributions for the serving link and the
//!   strongest eavesdropper.
//! - [`secrecy`]: exact ergodic capacity, outage probability and outage
//!   capacity.
//! - [`approx`]: Poisson-limit approximations, asymptotic regimes and
//!   multi-shell constellations.
//! - [`montecarlo`]: independent seeded simulator used to validate all of
//!   the above.

pub mod approx;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod pointprocess;
pub mod quadrature;
pub mod secrecy;
pub mod snrdist;
pub mod specfun;

pub use error::{Error, Result};
