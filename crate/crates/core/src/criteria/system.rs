use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::expr::{jet, param_jet, parse_field, FieldExpr, Jet3, ParamJet3, ParseError, Poly, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("component {component}: {source}")]
    Parse {
        component: &'static str,
        #[source]
        source: ParseError,
    },
    #[error("component {component} has constant term {coefficient}")]
    ConstantTermPresent {
        component: &'static str,
        coefficient: String,
    },
    #[error("component {component} has linear term {coefficient}*{variable}")]
    LinearTermPresent {
        component: &'static str,
        variable: &'static str,
        coefficient: String,
    },
    #[error("component {component} of the unperturbed field depends on {parameter}")]
    ParameterInUnperturbed {
        component: &'static str,
        parameter: &'static str,
    },
    #[error("perturbation slice {slice} does not vanish at the origin")]
    SliceNonzeroAtOrigin { slice: &'static str },
}

/// Unperturbed field `(-y + P, x + Q, R)` with `P, Q, R` free of constant and linear terms.
#[derive(Debug, Clone)]
pub struct HopfZeroSystem {
    pub exprs: [FieldExpr; 3],
    pub polys: [Poly; 3],
    pub jets: [Jet3<BigRational>; 3],
}

pub const COMPONENTS: [&str; 3] = ["P", "Q", "R"];

impl HopfZeroSystem {
    pub fn parse(p: &str, q: &str, r: &str) -> Result<Self, SystemError> {
        let parse = |i: usize, s: &str| {
            parse_field(s).map_err(|source| SystemError::Parse {
                component: COMPONENTS[i],
                source,
            })
        };
        validate_hopf_zero(parse(0, p)?, parse(1, q)?, parse(2, r)?)
    }

    pub fn p(&self, j: u32, k: u32, l: u32) -> &BigRational {
        self.jets[0].get(j, k, l)
    }

    pub fn q(&self, j: u32, k: u32, l: u32) -> &BigRational {
        self.jets[1].get(j, k, l)
    }

    pub fn r(&self, j: u32, k: u32, l: u32) -> &BigRational {
        self.jets[2].get(j, k, l)
    }

    /// Full vector field polynomials including the linear part.
    pub fn field(&self) -> [Poly; 3] {
        [
            self.polys[0].sub(&Poly::var(Var::Y)),
            self.polys[1].add(&Poly::var(Var::X)),
            self.polys[2].clone(),
        ]
    }
}

pub fn validate_hopf_zero(p: FieldExpr, q: FieldExpr, r: FieldExpr) -> Result<HopfZeroSystem, SystemError> {
    let exprs = [p, q, r];
    let polys = [
        Poly::from_expr(&exprs[0]),
        Poly::from_expr(&exprs[1]),
        Poly::from_expr(&exprs[2]),
    ];
    for (i, poly) in polys.iter().enumerate() {
        for v in [Var::Mu, Var::Eps] {
            if poly.uses(v) {
                return Err(SystemError::ParameterInUnperturbed {
                    component: COMPONENTS[i],
                    parameter: v.name(),
                });
            }
        }
        let c = poly.coeff(&[0; 5]);
        if !c.is_zero() {
            return Err(SystemError::ConstantTermPresent {
                component: COMPONENTS[i],
                coefficient: c.to_string(),
            });
        }
        for v in [Var::X, Var::Y, Var::Z] {
            let mut m = [0; 5];
            m[v.index()] = 1;
            let c = poly.coeff(&m);
            if !c.is_zero() {
                return Err(SystemError::LinearTermPresent {
                    component: COMPONENTS[i],
                    variable: v.name(),
                    coefficient: c.to_string(),
                });
            }
        }
    }
    let jets = [jet(&polys[0]), jet(&polys[1]), jet(&polys[2])];
    Ok(HopfZeroSystem { exprs, polys, jets })
}

/// Perturbation `(U, V, W)` entering as `eps*(U, V, W)`.
///
/// Slice `i` is the coefficient of `eps^i` in `eps*U`, i.e. of `eps^(i-1)` in `U`.
#[derive(Debug, Clone)]
pub struct PerturbationFamily {
    pub exprs: [FieldExpr; 3],
    pub polys: [Poly; 3],
    /// `slices[c][i-1]` is the jet of slice `i` of component `c`, as a polynomial in `mu`.
    pub slices: [[ParamJet3; 2]; 3],
    pub simple_case: bool,
}

impl PerturbationFamily {
    pub fn parse(u: &str, v: &str, w: &str) -> Result<Self, SystemError> {
        let names = ["U", "V", "W"];
        let parse = |i: usize, s: &str| {
            parse_field(s).map_err(|source| SystemError::Parse {
                component: names[i],
                source,
            })
        };
        Ok(PerturbationFamily::new([parse(0, u)?, parse(1, v)?, parse(2, w)?]))
    }

    pub fn new(exprs: [FieldExpr; 3]) -> Self {
        let polys = [
            Poly::from_expr(&exprs[0]),
            Poly::from_expr(&exprs[1]),
            Poly::from_expr(&exprs[2]),
        ];
        let slices = [0, 1, 2].map(|c| [param_jet(&polys[c].eps_slice(0)), param_jet(&polys[c].eps_slice(1))]);
        let simple = {
            let expect_w = |beta: i64| Poly::from_expr(&parse_field(&format!("mu*z + {beta}*eps")).unwrap());
            polys[0].is_zero() && polys[1].is_zero() && (polys[2] == expect_w(1) || polys[2] == expect_w(-1))
        };
        PerturbationFamily {
            exprs,
            polys,
            slices,
            simple_case: simple,
        }
    }

    /// The family `(0, 0, mu*z + beta*eps)`.
    pub fn simple(beta: i8) -> Self {
        let w = if beta >= 0 { "mu*z + eps" } else { "mu*z - eps" };
        PerturbationFamily::parse("0", "0", w).expect("literal family parses")
    }

    pub fn u1(&self, j: u32, k: u32, l: u32, mu: f64) -> f64 {
        self.slice(0, 1, (j, k, l), mu)
    }

    pub fn slice(&self, component: usize, order: usize, idx: (u32, u32, u32), mu: f64) -> f64 {
        self.slices[component][order - 1]
            .get(idx.0, idx.1, idx.2)
            .eval_f64([0.0, 0.0, 0.0, mu, 0.0])
    }

    /// `U_1(0;mu) = V_1(0;mu) = W_1(0;mu) = 0` identically in `mu`.
    pub fn check_origin_slices(&self) -> Result<(), SystemError> {
        for (c, name) in ["U_1", "V_1", "W_1"].into_iter().enumerate() {
            if !self.slices[c][0].get(0, 0, 0).is_zero() {
                return Err(SystemError::SliceNonzeroAtOrigin { slice: name });
            }
        }
        Ok(())
    }

    /// `S(mu) = U_1^(1,0,0) + V_1^(0,1,0)`.
    pub fn s(&self, mu: f64) -> f64 {
        self.slice(0, 1, (1, 0, 0), mu) + self.slice(1, 1, (0, 1, 0), mu)
    }

    pub fn w1z(&self, mu: f64) -> f64 {
        self.slice(2, 1, (0, 0, 1), mu)
    }

    pub fn w2_origin(&self, mu: f64) -> f64 {
        self.slice(2, 2, (0, 0, 0), mu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_is_valid() {
        let s = HopfZeroSystem::parse("0", "y*z", "-x^2 + x*y + z^2").unwrap();
        assert_eq!(s.q(0, 1, 1).to_string(), "1");
        assert_eq!(s.r(2, 0, 0).to_string(), "-2");
    }

    #[test]
    fn rejects_linear_and_constant_terms() {
        assert!(matches!(
            HopfZeroSystem::parse("x", "0", "0"),
            Err(SystemError::LinearTermPresent { component: "P", variable: "x", .. })
        ));
        assert!(matches!(
            HopfZeroSystem::parse("0", "0", "1 + z^2"),
            Err(SystemError::ConstantTermPresent { component: "R", .. })
        ));
        assert!(matches!(
            HopfZeroSystem::parse("mu*x^2", "0", "0"),
            Err(SystemError::ParameterInUnperturbed { .. })
        ));
    }

    #[test]
    fn simple_family_slices() {
        let f = PerturbationFamily::simple(1);
        assert!(f.simple_case);
        assert_eq!(f.w1z(0.3), 0.3);
        assert_eq!(f.w2_origin(0.3), 1.0);
        assert_eq!(f.s(0.3), 0.0);
        f.check_origin_slices().unwrap();
    }

    #[test]
    fn nonzero_origin_slice_detected() {
        let f = PerturbationFamily::parse("mu", "0", "0").unwrap();
        assert!(f.check_origin_slices().is_err());
        let g = PerturbationFamily::parse("eps*mu", "0", "0").unwrap();
        assert!(g.check_origin_slices().is_ok());
    }
}
