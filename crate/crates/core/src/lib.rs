//! Binary rate codes on the circle and the time it takes an ideal observer
//! to tell two stimuli apart.
//!
//! A population of `n` neurons encodes a stimulus `s` on the unit circle.
//! Each neuron fires as a homogeneous Poisson process at rate `mu` when `s`
//! falls in its receptive field and at rate `1` otherwise. Discrimination
//! between two stimuli is governed by the combinatorial statistic
//! [`codes::DeltaReport::delta`], and the worst case over all pairs at a given
//! distance by [`analysis::t_of_rho_exact`].
//!
//! Modules:
//!
//! * [`geometry`]: points, distances and half-open arcs on circles of any radius.
//! * [`codes`]: place, grid, dyadic and random code constructors, active sets.
//! * [`analysis`]: KL divergence, error bounds, Poisson tails, exact `T(f, rho)`.
//! * [`theory`]: closed-form bounds for the code families.
//! * [`montecarlo`]: spike-count simulation and the likelihood-ratio count test.
//! * [`experiments`]: presets, configuration, figure data and bound verification.

pub mod analysis;
pub mod codes;
mod error;
pub mod experiments;
pub mod geometry;
pub mod montecarlo;
pub mod theory;

pub use error::{Error, Result};

/// Absolute tolerance used by every geometric comparison.
pub const EPS: f64 = 1e-12;
