//! Degree lift: a separating plane for a seed field, the degree-`m+1` family
//! built on it, and tuning of its parameters into a Hopf-Zero point.

mod family;
mod plane;
mod tune;

pub use family::*;
pub use plane::*;
pub use tune::*;

use num_rational::BigRational;
use thiserror::Error;

use crate::criteria::{BaseError, SystemError};
use crate::expr::{Monomial, Poly, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiftError {
    #[error("seed field is invalid: {0}")]
    InvalidSeed(String),
    #[error("no admissible seed perturbation after {attempts} attempts")]
    PerturbationBudgetExceeded { attempts: usize },
    #[error("no x = 2^k * radius (k = 1..40) gives a plane avoiding the ball")]
    NoSeparatingXFound,
    #[error("{which}(p) = 0; rerun the plane search with another seed")]
    ZeroComponentAtP { which: &'static str },
    #[error("Omega(L, delta) <= 0 on the whole parameter range")]
    NoPositiveOmegaFound,
    #[error("l1 does not depend on R^(0,0,3) because Omega Sigma = 0")]
    L1NotTunable,
    #[error("lifted system: {0}")]
    System(#[from] SystemError),
    #[error("lifted system: {0}")]
    Base(#[from] BaseError),
}

/// `p(s_0 + a_0, s_1 + a_1, s_2 + a_2)` for polynomial `a_i`.
pub fn substitute(p: &Poly, sub: &[Poly; 3]) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in p.terms() {
        let mut t = Poly::constant(c.clone());
        for (i, s) in sub.iter().enumerate() {
            if m[i] > 0 {
                t = t.mul(&s.pow(m[i]));
            }
        }
        let rest: Monomial = [0, 0, 0, m[3], m[4]];
        if rest != [0; 5] {
            t = t.mul(&Poly::monomial(rest, BigRational::from_integer(1.into())));
        }
        out = out.add(&t);
    }
    out
}

/// `p(x + v0, y + v1, z + v2)`.
pub fn translate(p: &Poly, v: &[BigRational; 3]) -> Poly {
    let shift = |var: Var, c: &BigRational| Poly::var(var).add(&Poly::constant(c.clone()));
    substitute(p, &[shift(Var::X, &v[0]), shift(Var::Y, &v[1]), shift(Var::Z, &v[2])])
}

pub fn eval_at(p: &Poly, v: &[BigRational; 3]) -> BigRational {
    let z = BigRational::from_integer(0.into());
    p.eval_exact(&[v[0].clone(), v[1].clone(), v[2].clone(), z.clone(), z])
}

pub(crate) fn origin() -> [BigRational; 3] {
    let z = BigRational::from_integer(0.into());
    [z.clone(), z.clone(), z]
}
