//! Numerical flows, Poincaré returns and return-map jets.

mod bijet;
mod field;
mod poincare;
mod rk;

pub use bijet::{bijet_slot, BiJet, BIJET_EXP, BIJET_LEN};
pub use field::{rescaled_nonlinear, PolyField};
pub use poincare::*;
pub use rk::{integrate, integrate_with, Control, DenseSegment, FlowError, IntegratorConfig, Trajectory};
