//! Numerical kernels for the relativistic Boltzmann collision operator and the
//! relativistic Vlasov-Maxwell field apparatus.
//!
//! The crate is organised bottom-up:
//!
//! * [`kinematics`]: energies, invariants and the post-collision map.
//! * [`quadrature`]: Gauss rules on intervals and on the sphere.
//! * [`distribution`]: analytic test densities with exact gradients.
//! * [`collision`]: gain, loss and full collision operator, conservation
//!   moments, chain-rule residuals and the Carleman radial integral.
//! * [`fields`]: Kirchhoff propagator, Glassey-Strauss representation and
//!   null decomposition.
//! * [`vectorfields`]: commuting vector fields, their lifts and commutator
//!   checks on forward-mode jets.
//! * [`analysis`]: weights and the sampled inequality catalog.
//! * [`simulator`]: particle ensembles, pushers, Monte Carlo collisions and
//!   decay fits.
//! * [`report`]: CSV rows shared by every check.

pub mod analysis;
pub mod collision;
pub mod distribution;
pub mod error;
pub mod fields;
pub mod jet;
pub mod kinematics;
pub mod quadrature;
pub mod report;
pub mod simulator;
pub mod vectorfields;

pub use error::{Error, Result};

/// Three-vectors used throughout the crate.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Japanese bracket `(1 + |x|^2)^(1/2)`.
#[inline]
pub fn bracket(x: &Vec3) -> f64 {
    (1.0 + x.norm_squared()).sqrt()
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/kinematics.md")]
    mod kinematics {}
    #[doc = include_str!("../../../book/src/collision.md")]
    mod collision {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/vectorfields.md")]
    mod vectorfields {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
}
