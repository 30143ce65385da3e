//! Torus bifurcation analysis for perturbed Hopf-Zero polynomial vector fields.

pub mod expr;
pub mod scalar;
pub mod criteria;
pub mod flow;
pub mod averaging;
pub mod torus;
pub mod lift;
