//! Semiclassical Gaussian-packet solution of the 1D Gross-Pitaevskii
//! equation in a time-dependent harmonic trap, the propagator built from
//! it by quadrature over initial velocities, Madelung-hydrodynamics
//! diagnostics, and a split-step Fourier reference integrator.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod io;
pub mod madelung;
pub mod ode;
pub mod packet;
pub mod params;
pub mod propagator;
pub mod quadrature;
pub mod split_step;
pub mod trap;

pub use error::{Error, Result};
pub use grid::{field_norm_sq, ComplexField, Grid};
pub use madelung::{
    continuity_residual, decompose, euler_residual, hamilton_jacobi_residual, phase_rate, MadelungFields, Residual,
    DEFAULT_RHO_FLOOR,
};
pub use packet::{
    eval_psi, eval_rho_printed, evolve_packet, packet_rhs, psi_at, psi_from_state, stationary_sigma, InitialConditions,
    PacketRates, PacketState, PacketTrajectory,
};
pub use params::PhysParams;
pub use propagator::{
    build_kernel, completeness_check, kernel_eval, propagate, FamilyShape, KernelForm, KernelMatrix, KernelOptions,
    PacketFamily,
};
pub use quadrature::{QuadratureRule, QuadratureSpec};
pub use split_step::{split_step_evolve, split_step_free_snapshots, split_step_snapshots, SplitStepConfig};
pub use trap::{omega_eval, TrapProfile};
