//! Bohmian trajectories of large-angular-momentum Rydberg coherent states.
//!
//! Module map:
//! - [`kinematics`]: classical Coulomb radial quantities `p0, S0, phi0, t0, f0`
//! - [`wavepacket`]: the WKB coherent state, its phase and quantum potential
//! - [`dynamics`]: guidance velocity field and trajectory integration
//! - [`classical`]: Kepler reference orbits
//! - [`analysis`]: conic fits, correction scaling, Hamilton-Jacobi residuals
//! - [`config`], [`output`], [`drivers`]: the batch CLI plumbing

pub mod analysis;
pub mod classical;
pub mod config;
pub mod drivers;
pub mod dynamics;
pub mod error;
pub mod interp;
pub mod kinematics;
pub mod ode;
pub mod output;
pub mod quadrature;
pub mod wavepacket;

pub use error::{Error, Result};
pub use kinematics::{energy, radial_momentum, turning_points, OrbitParams, RadialProfile};
