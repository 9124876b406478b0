//! Bistable solitons of the cubic-quintic nonlinear Schrödinger equation and
//! quantum squeezing of their linearized fluctuations, computed by
//! back-propagating homodyne projection functions through the adjoint flow.

pub mod config;
pub mod error;
pub mod fluctuation;
pub mod grid;
pub mod propagator;
pub mod pulse;
mod roots;
pub mod runner;
pub mod squeezing;
pub mod validation;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use fluctuation::{
    adjoint_backstep, back_propagate, forward_propagate_perturbation, linearized_step, LinearizationOptions,
};
pub use grid::{from_spectrum, inner_product_real, l2_norm_sq, to_spectrum, ComplexField, TimeGrid};
pub use propagator::{hamiltonian, photon_number, propagate, propagate_backward, step, Splitting, StepConfig, Trajectory};
pub use pulse::{
    beta_from_amplitude, family_curve, fwhm_from_profile, gaussian_pulse, min_width, soliton_period, soliton_profile,
    solve_bistable_amplitudes, width_amplitude_residual, CqParams, GaussianSpec, SolitonSpec,
};
pub use squeezing::{
    coherent_variance, local_oscillator, optimal_squeezing, squeezing_curve, theta_scan, QuadratureForm, SqueezingCurve,
    ThetaScan,
};
