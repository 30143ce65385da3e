//! Normal-position validation and the explicit bifurcation criteria.

mod base;
mod lyapunov;
mod perturbation;
mod system;

pub use base::{
    divergence_sum, evaluate_base_criteria, laplacian_sum, omega_exact, simple_case_closed_forms, simple_case_mu1_exact, BaseCriteria,
    BaseError, SimpleCaseClosedForms,
};
pub use lyapunov::{l1_corrected_groups, l1_printed_groups};
pub use perturbation::*;
pub use system::{validate_hopf_zero, HopfZeroSystem, PerturbationFamily, SystemError, COMPONENTS};
