use crate::criteria::{HopfZeroSystem, PerturbationFamily};
use crate::expr::CompiledPoly;
use crate::flow::{rescaled_nonlinear, BiJet};
use crate::scalar::Scalar;

use super::AveragingError;

/// `(r, w)' = eps F1(theta, r, w) + eps^2 F2(theta, r, w) + O(eps^3)`, period `2 pi`.
#[derive(Debug, Clone)]
pub struct StandardFormSystem {
    pub mu: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Cartesian `eps^1` and `eps^2` slices of the rescaled nonlinearity.
    g1: [CompiledPoly; 3],
    g2: [CompiledPoly; 3],
    /// Set when the rescaled field has terms beyond `eps^2`.
    pub has_remainder: bool,
}

pub fn to_standard_form(
    sys: &HopfZeroSystem,
    fam: &PerturbationFamily,
    mu: f64,
    r_min: f64,
    r_max: f64,
) -> Result<StandardFormSystem, AveragingError> {
    if !(r_min > 0.0) || !(r_max > r_min) {
        return Err(AveragingError::Domain { r_min, r_max });
    }
    let polys = rescaled_nonlinear(sys, fam);
    let slice = |k: u32| [0, 1, 2].map(|c| polys[c].eps_slice(k).compile(mu, 1.0));
    let top = polys.iter().map(|p| p.degree_of(crate::expr::Var::Eps)).max().unwrap_or(0);
    Ok(StandardFormSystem {
        mu,
        r_min,
        r_max,
        g1: slice(1),
        g2: slice(2),
        has_remainder: top > 2,
    })
}

impl StandardFormSystem {
    fn eval3<T: Scalar>(g: &[CompiledPoly; 3], th: f64, r: &T, w: &T) -> [T; 3] {
        let (s, c) = th.sin_cos();
        let x = r.clone().scale(c);
        let y = r.clone().scale(s);
        [0, 1, 2].map(|i| g[i].eval(&x, &y, w))
    }

    pub fn f1<T: Scalar>(&self, th: f64, r: &T, w: &T) -> [T; 2] {
        let (s, c) = th.sin_cos();
        let g = Self::eval3(&self.g1, th, r, w);
        [g[0].clone().scale(c) + g[1].clone().scale(s), g[2].clone()]
    }

    pub fn f2(&self, th: f64, r: f64, w: f64) -> [f64; 2] {
        let (s, c) = th.sin_cos();
        let g1 = Self::eval3(&self.g1, th, &r, &w);
        let g2 = Self::eval3(&self.g2, th, &r, &w);
        let a1r = c * g1[0] + s * g1[1];
        let b1 = (c * g1[1] - s * g1[0]) / r;
        [c * g2[0] + s * g2[1] - a1r * b1, g2[2] - g1[2] * b1]
    }

    /// `d F1 / d(r, w)`.
    pub fn f1_jacobian(&self, th: f64, r: f64, w: f64) -> [[f64; 2]; 2] {
        let v = self.f1(th, &BiJet::affine(r, 1.0, 0.0), &BiJet::affine(w, 0.0, 1.0));
        [[v[0].coeff(1, 0), v[0].coeff(0, 1)], [v[1].coeff(1, 0), v[1].coeff(0, 1)]]
    }

    /// Largest `|F_i(0, .) - F_i(2 pi, .)|` over the given points.
    pub fn periodicity_residual(&self, pts: &[[f64; 2]]) -> f64 {
        let tp = 2.0 * std::f64::consts::PI;
        pts.iter()
            .flat_map(|&[r, w]| {
                let a = self.f1(0.0, &r, &w);
                let b = self.f1(tp, &r, &w);
                let c = self.f2(0.0, r, w);
                let d = self.f2(tp, r, w);
                [(a[0] - b[0]).abs(), (a[1] - b[1]).abs(), (c[0] - d[0]).abs(), (c[1] - d[1]).abs()]
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_checked() {
        let s = HopfZeroSystem::parse("0", "y*z", "-x^2 + x*y + z^2").unwrap();
        let f = PerturbationFamily::simple(1);
        assert!(matches!(to_standard_form(&s, &f, 0.0, 0.0, 3.0), Err(AveragingError::Domain { .. })));
        let std = to_standard_form(&s, &f, 0.3, 0.1, 3.0).unwrap();
        assert!(!std.has_remainder);
        assert!(std.periodicity_residual(&[[1.0, 0.2], [2.5, -1.0], [0.3, 0.7]]) <= 1e-12);
    }

    #[test]
    fn example_integrand() {
        let s = HopfZeroSystem::parse("0", "y*z", "-x^2 + x*y + z^2").unwrap();
        let std = to_standard_form(&s, &PerturbationFamily::simple(1), 0.2, 0.1, 3.0).unwrap();
        let (th, r, w) = (0.4f64, 1.2, 0.3);
        let (sn, c) = th.sin_cos();
        let f1 = std.f1(th, &r, &w);
        assert!((f1[0] - r * sn * sn * w).abs() < 1e-15);
        let fw = -r * r * c * c + r * r * c * sn + w * w + 0.2 * w + 1.0;
        assert!((f1[1] - fw).abs() < 1e-14);
        // theta' = 1 + eps sin cos w, so F2 = -F1 * sin cos w
        let f2 = std.f2(th, r, w);
        assert!((f2[0] + f1[0] * sn * c * w).abs() < 1e-14);
        assert!((f2[1] + f1[1] * sn * c * w).abs() < 1e-14);
    }
}
