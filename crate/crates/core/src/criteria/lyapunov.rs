//! The closed-form Lyapunov density `l1` of the Hopf-Zero torus bifurcation.

use num_rational::BigRational;

use super::base::{big, divergence_sum, laplacian_sum};
use super::system::HopfZeroSystem;

struct J<'a>(&'a HopfZeroSystem);

impl J<'_> {
    fn p(&self, j: u32, k: u32, l: u32) -> BigRational {
        self.0.p(j, k, l).clone()
    }
    fn q(&self, j: u32, k: u32, l: u32) -> BigRational {
        self.0.q(j, k, l).clone()
    }
    fn r(&self, j: u32, k: u32, l: u32) -> BigRational {
        self.0.r(j, k, l).clone()
    }
}

/// The three outer groups exactly as published.
pub fn l1_printed_groups(sys: &HopfZeroSystem) -> [BigRational; 3] {
    let s = J(sys);
    let (p, q, r) = (|a, b, c| s.p(a, b, c), |a, b, c| s.q(a, b, c), |a, b, c| s.r(a, b, c));
    let sigma = laplacian_sum(sys);
    let omega = -(divergence_sum(sys) * &sigma);

    let g1 = -omega.clone()
        * &sigma
        * (r(0, 0, 2)
            * ((r(0, 2, 0) - r(2, 0, 0)) * (p(0, 1, 1) + q(1, 0, 1))
                + big(2)
                    * (-q(2, 0, 0) * (p(2, 0, 0) + q(1, 1, 0) + big(2) * r(1, 0, 1))
                        + big(2) * p(1, 0, 1) * r(1, 1, 0)
                        + p(1, 2, 0)
                        + p(1, 1, 0) * p(2, 0, 0)
                        + p(3, 0, 0)
                        - q(0, 2, 0) * (q(1, 1, 0) + big(2) * r(1, 0, 1))
                        + q(0, 3, 0)
                        + q(2, 1, 0)
                        + big(2) * r(0, 2, 1)
                        + big(2) * r(2, 0, 1))
                + big(2) * p(0, 2, 0) * (p(1, 1, 0) + q(0, 2, 0))
                + big(4) * (p(0, 2, 0) + p(2, 0, 0)) * r(0, 1, 1))
            - big(4) * sigma.clone() * (big(3) * p(0, 0, 2) * r(0, 1, 1) - big(3) * q(0, 0, 2) * r(1, 0, 1) + r(0, 0, 3))
            - big(2) * r(1, 1, 0) * r(0, 0, 2) * r(0, 0, 2));

    let g2 = r(0, 0, 2)
        * sigma.clone()
        * sigma.clone()
        * (big(4)
            * sigma.clone()
            * (p(0, 0, 2) * (big(2) * r(0, 1, 1) - p(1, 1, 0) - q(0, 2, 0))
                + q(0, 0, 2) * (p(2, 0, 0) + q(1, 1, 0) - big(2) * r(1, 0, 1))
                - p(1, 0, 2)
                - q(0, 1, 2))
            + r(0, 0, 2)
                * ((r(2, 0, 0) - r(0, 2, 0)) * (p(0, 1, 1) + q(1, 0, 1))
                    + big(2)
                        * (-q(2, 0, 0) * (p(2, 0, 0) + q(1, 1, 0)) - big(2) * p(1, 0, 1) * r(1, 1, 0)
                            + p(1, 2, 0)
                            + p(1, 1, 0) * p(2, 0, 0)
                            + p(3, 0, 0)
                            + q(0, 3, 0)
                            - q(0, 2, 0) * q(1, 1, 0)
                            + q(2, 1, 0))
                    + big(2) * p(0, 2, 0) * (p(1, 1, 0) + q(0, 2, 0))));

    let g3 = big(2) * omega.clone() * omega * r(0, 0, 2) * r(1, 1, 0);
    [g1, g2, g3]
}

/// Same three groups after rederiving the coefficient from the
/// second-order averaged map: the second and third groups change sign.
pub fn l1_corrected_groups(sys: &HopfZeroSystem) -> [BigRational; 3] {
    let [g1, g2, g3] = l1_printed_groups(sys);
    [g1, -g2, -g3]
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn total(g: &[BigRational; 3]) -> BigRational {
        g.iter().fold(BigRational::zero(), |a, b| a + b)
    }

    // reference values from an independent symbolic reduction of the averaged map
    #[test]
    fn matches_reference_values() {
        let cases = [
            ("0", "y*z", "-x^2 + x*y + z^2", -48, -16),
            ("-x*z - 2*y^2", "x*y + z^2 + y^2*z", "x^2 + y^2 + x*y + 2*z^2 + y*z - z^3", -2944, 3456),
            ("x*y + x*z^2 - x*z", "-y*z + x*z", "x^2 + y^2 - x*y + z^2 - y*z + x*y*z", 1024, -2048),
        ];
        for (p, q, r, want, printed) in cases {
            let sys = HopfZeroSystem::parse(p, q, r).unwrap();
            assert_eq!(total(&l1_corrected_groups(&sys)), big(want), "{p}; {q}; {r}");
            assert_eq!(total(&l1_printed_groups(&sys)), big(printed));
        }
    }
}
