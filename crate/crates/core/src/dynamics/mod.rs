//! Lagrangian densities, field-equation residuals, stress tensors and the
//! charged test-particle integrator.

pub mod density;
pub mod field_eqs;
pub mod matter;
pub mod particle;

pub use density::{electrograv_density, yang_mills_density};
pub use field_eqs::{
    el_residual_lorentz, el_residual_lorentz_with, el_residual_u1, generalized_einstein_residual, stress_tensors,
    u1_divergence, vacuum_connection, Eq1Form, L0Form, ResidualScan, StressTensors,
};
pub use matter::{covariant_derivative, MatterLagrangian, MatterSpec};
pub use particle::{integrate_particle, GravPotential, ParticleFields, ParticleState, Trajectory};
