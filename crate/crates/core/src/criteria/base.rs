use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use super::lyapunov::{l1_corrected_groups, l1_printed_groups};
use super::system::HopfZeroSystem;
use crate::expr::rat_to_f64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BaseError {
    #[error("R^(2,0,0) + R^(0,2,0) = 0, so beta is undefined")]
    DegenerateSum,
}

/// Quantities depending only on `(P, Q, R)`.
#[derive(Debug, Clone, Serialize)]
pub struct BaseCriteria {
    #[serde(serialize_with = "ser_rat")]
    pub omega_exact: BigRational,
    pub omega: f64,
    pub beta: i8,
    /// `sqrt(|R^(0,2,0) + R^(2,0,0)|)`.
    pub gamma_scale: f64,
    #[serde(serialize_with = "ser_rat")]
    pub l1_exact: BigRational,
    pub l1: f64,
    /// The three outer groups of the coefficient as printed, evaluated verbatim.
    #[serde(serialize_with = "ser_rat3")]
    pub l1_printed_groups: [BigRational; 3],
    pub l1_printed: f64,
    /// Same grouping after the sign and term corrections.
    #[serde(serialize_with = "ser_rat3")]
    pub l1_groups: [BigRational; 3],
    pub nondegenerate: bool,
}

fn ser_rat<S: serde::Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn ser_rat3<S: serde::Serializer>(v: &[BigRational; 3], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(3))?;
    for x in v {
        seq.serialize_element(&x.to_string())?;
    }
    seq.end()
}

/// `D = P^(1,0,1) + Q^(0,1,1)`.
pub fn divergence_sum(sys: &HopfZeroSystem) -> BigRational {
    sys.p(1, 0, 1) + sys.q(0, 1, 1)
}

/// `Sigma = R^(2,0,0) + R^(0,2,0)`.
pub fn laplacian_sum(sys: &HopfZeroSystem) -> BigRational {
    sys.r(2, 0, 0) + sys.r(0, 2, 0)
}

pub fn omega_exact(sys: &HopfZeroSystem) -> BigRational {
    -(divergence_sum(sys) * laplacian_sum(sys))
}

pub fn evaluate_base_criteria(sys: &HopfZeroSystem) -> Result<BaseCriteria, BaseError> {
    let sigma = laplacian_sum(sys);
    if sigma.is_zero() {
        return Err(BaseError::DegenerateSum);
    }
    let beta: i8 = if sigma.is_positive() { -1 } else { 1 };
    let omega = omega_exact(sys);
    let printed = l1_printed_groups(sys);
    let corrected = l1_corrected_groups(sys);
    let sum = |g: &[BigRational; 3]| g.iter().fold(BigRational::zero(), |a, b| a + b);
    let l1_exact = sum(&corrected);
    Ok(BaseCriteria {
        omega: rat_to_f64(&omega),
        nondegenerate: omega.is_positive(),
        omega_exact: omega,
        beta,
        gamma_scale: rat_to_f64(&sigma.abs()).sqrt(),
        l1: rat_to_f64(&l1_exact),
        l1_exact,
        l1_printed: rat_to_f64(&sum(&printed)),
        l1_printed_groups: printed,
        l1_groups: corrected,
    })
}

/// Closed forms printed for the family `(0, 0, mu*z + beta*eps)`; the
/// numeric branch continuation is the reference these are compared to.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SimpleCaseClosedForms {
    pub xi1: f64,
    pub xi2: f64,
    pub mu1: f64,
    pub m21: f64,
    pub m22: f64,
    pub det_m0: f64,
}

pub fn simple_case_closed_forms(sys: &HopfZeroSystem, base: &BaseCriteria, mu: f64) -> SimpleCaseClosedForms {
    let f = |v: &BigRational| rat_to_f64(v);
    let p = |j, k, l| f(sys.p(j, k, l));
    let q = |j, k, l| f(sys.q(j, k, l));
    let r = |j, k, l| f(sys.r(j, k, l));
    let b = base.beta as f64;
    let g = base.gamma_scale;
    let om = base.omega;

    // shared bracket of the printed xi and mu1 expressions
    let core = p(0, 2, 0) * (p(1, 1, 0) + q(0, 2, 0)) - q(2, 0, 0) * (p(2, 0, 0) + q(1, 1, 0))
        - 2.0 * p(1, 0, 1) * r(1, 1, 0)
        + p(1, 2, 0)
        + p(1, 1, 0) * p(2, 0, 0)
        + p(3, 0, 0)
        + q(0, 3, 0)
        - q(0, 2, 0) * q(1, 1, 0)
        + q(2, 1, 0);
    let pq = p(0, 1, 1) + q(1, 0, 1);

    let xi1 = (3.0 * b * b * g.powi(4) * mu * pq
        - 2.0 * b * g
            * (4.0 * om * (2.0 * (p(1, 1, 0) + q(0, 2, 0)) + q(2, 0, 0))
                + 3.0 * g * mu * (-r(0, 2, 0) * pq + core))
        - 6.0 * om * mu * r(1, 1, 0))
        / (12.0 * b * g.powi(3) * om);

    let xi2 = (g * g * b * (pq * (2.0 * r(0, 2, 0) + b * g * g) - 2.0 * core) - 6.0 * om * r(1, 1, 0))
        / (4.0 * g * g * om);

    let mu1 = -(b.powi(3) * g.powi(6) * r(0, 0, 2) * pq
        + b * b * g.powi(4) * (om * pq - 2.0 * r(0, 0, 2) * (-r(0, 2, 0) * pq + core))
        + 2.0 * b * g * g
            * om
            * (r(0, 2, 0) * pq - q(2, 0, 0) * (p(2, 0, 0) + q(1, 1, 0) + 2.0 * r(1, 0, 1))
                + p(0, 2, 0) * (p(1, 1, 0) + q(0, 2, 0))
                - r(1, 1, 0) * (r(0, 0, 2) - 2.0 * p(1, 0, 1))
                + 2.0 * (p(0, 2, 0) + p(2, 0, 0)) * r(0, 1, 1)
                + p(1, 2, 0)
                + p(1, 1, 0) * p(2, 0, 0)
                + p(3, 0, 0)
                - q(0, 2, 0) * (q(1, 1, 0) + 2.0 * r(1, 0, 1))
                + q(0, 3, 0)
                + q(2, 1, 0)
                + 2.0 * r(0, 2, 1)
                + 2.0 * r(2, 0, 1))
        - 2.0 * om * om * r(1, 1, 0))
        / (4.0 * b * g.powi(4) * om);

    let bg2 = b * g * g;
    let m21 = -(b * b * g.powi(4) * p(0, 1, 1)
        + 2.0 * bg2 * p(0, 2, 0) * p(1, 1, 0)
        + 2.0 * bg2 * p(1, 2, 0)
        + 2.0 * bg2 * p(1, 1, 0) * p(2, 0, 0)
        + 2.0 * bg2 * p(3, 0, 0)
        + 2.0 * bg2 * p(0, 2, 0) * q(0, 2, 0)
        - 2.0 * bg2 * p(2, 0, 0) * q(2, 0, 0)
        - 2.0 * bg2 * p(0, 1, 1) * r(0, 2, 0)
        - 4.0 * bg2 * p(1, 0, 1) * r(1, 1, 0)
        + b * b * g.powi(4) * q(1, 0, 1)
        + 2.0 * bg2 * q(0, 3, 0)
        - 2.0 * bg2 * q(0, 2, 0) * q(1, 1, 0)
        - 2.0 * bg2 * q(1, 1, 0) * q(2, 0, 0)
        + 2.0 * bg2 * q(2, 1, 0)
        - 2.0 * bg2 * q(1, 0, 1) * r(0, 2, 0)
        + 6.0 * om * r(1, 1, 0))
        / (4.0 * g * om);

    let m22 = 2.0 * b * g / (3.0 * om.sqrt())
        * (-2.0 * p(1, 1, 0) - 2.0 * q(0, 2, 0) - q(2, 0, 0) + 3.0 * r(0, 1, 1));

    SimpleCaseClosedForms {
        xi1,
        xi2,
        mu1,
        m21,
        m22,
        det_m0: -b * g * g / om.sqrt(),
    }
}

/// The printed `mu1` closed form in exact arithmetic; it involves `gamma`
/// only through `gamma^2 = |Sigma|`.
pub fn simple_case_mu1_exact(sys: &HopfZeroSystem, base: &BaseCriteria) -> BigRational {
    let p = |j, k, l| sys.p(j, k, l).clone();
    let q = |j, k, l| sys.q(j, k, l).clone();
    let r = |j, k, l| sys.r(j, k, l).clone();
    let b = big(base.beta as i64);
    let g2 = laplacian_sum(sys).abs();
    let om = base.omega_exact.clone();
    let pq = p(0, 1, 1) + q(1, 0, 1);
    let core = p(0, 2, 0) * (p(1, 1, 0) + q(0, 2, 0)) - q(2, 0, 0) * (p(2, 0, 0) + q(1, 1, 0))
        - big(2) * p(1, 0, 1) * r(1, 1, 0)
        + p(1, 2, 0)
        + p(1, 1, 0) * p(2, 0, 0)
        + p(3, 0, 0)
        + q(0, 3, 0)
        - q(0, 2, 0) * q(1, 1, 0)
        + q(2, 1, 0);
    let bracket = r(0, 2, 0) * &pq - q(2, 0, 0) * (p(2, 0, 0) + q(1, 1, 0) + big(2) * r(1, 0, 1))
        + p(0, 2, 0) * (p(1, 1, 0) + q(0, 2, 0))
        - r(1, 1, 0) * (r(0, 0, 2) - big(2) * p(1, 0, 1))
        + big(2) * (p(0, 2, 0) + p(2, 0, 0)) * r(0, 1, 1)
        + p(1, 2, 0)
        + p(1, 1, 0) * p(2, 0, 0)
        + p(3, 0, 0)
        - q(0, 2, 0) * (q(1, 1, 0) + big(2) * r(1, 0, 1))
        + q(0, 3, 0)
        + q(2, 1, 0)
        + big(2) * r(0, 2, 1)
        + big(2) * r(2, 0, 1);
    let num = &b * &b * &b * &g2 * &g2 * &g2 * r(0, 0, 2) * &pq
        + &b * &b * &g2 * &g2 * (&om * &pq - big(2) * r(0, 0, 2) * (-r(0, 2, 0) * &pq + &core))
        + big(2) * &b * &g2 * &om * bracket
        - big(2) * &om * &om * r(1, 1, 0);
    -num / (big(4) * b * &g2 * &g2 * om)
}

pub fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> HopfZeroSystem {
        HopfZeroSystem::parse("0", "y*z", "-x^2 + x*y + z^2").unwrap()
    }

    #[test]
    fn exact_mu1_matches_float_form() {
        let s = example();
        let b = evaluate_base_criteria(&s).unwrap();
        assert_eq!(simple_case_mu1_exact(&s, &b), BigRational::new(3.into(), 4.into()));
        let s = HopfZeroSystem::parse("x*z + y^2", "y*z - x*y + x^3", "x^2 + 2*y^2 - z^2 + x*y*z").unwrap();
        let b = evaluate_base_criteria(&s).unwrap();
        let f = simple_case_closed_forms(&s, &b, 0.0).mu1;
        assert!((rat_to_f64(&simple_case_mu1_exact(&s, &b)) - f).abs() <= 1e-12 * f.abs().max(1.0));
    }

    #[test]
    fn example_constants() {
        let b = evaluate_base_criteria(&example()).unwrap();
        assert_eq!(b.omega_exact, big(2));
        assert_eq!(b.beta, 1);
        assert!((b.gamma_scale - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(b.l1_exact, big(-48));
    }

    #[test]
    fn divergence_only_system_has_zero_l1() {
        let s = HopfZeroSystem::parse("x*z", "0", "-x^2 - y^2").unwrap();
        let b = evaluate_base_criteria(&s).unwrap();
        assert!(b.l1_exact.is_zero());
        assert!(b.l1_printed_groups.iter().all(|g| g.is_zero()));
    }

    #[test]
    fn negative_omega_reported() {
        let s = HopfZeroSystem::parse("x*z", "y*z", "x^2 + y^2").unwrap();
        let b = evaluate_base_criteria(&s).unwrap();
        assert_eq!(b.omega_exact, big(-8));
        assert_eq!(b.beta, -1);
        assert!(!b.nondegenerate);
    }

    #[test]
    fn degenerate_sum() {
        let s = HopfZeroSystem::parse("x*z", "0", "x^2 - y^2").unwrap();
        assert_eq!(evaluate_base_criteria(&s).unwrap_err(), BaseError::DegenerateSum);
    }

    #[test]
    fn example_closed_forms() {
        let s = example();
        let b = evaluate_base_criteria(&s).unwrap();
        let c = simple_case_closed_forms(&s, &b, 0.4);
        assert!((c.mu1 - 0.75).abs() < 1e-14);
        assert!((c.xi1 + 2f64.sqrt() * 0.4 / 8.0).abs() < 1e-14);
        assert!((c.xi2 + 0.75).abs() < 1e-14);
        assert!((c.det_m0 + 2f64.sqrt()).abs() < 1e-14);
    }
}
