use crate::criteria::{HopfZeroSystem, PerturbationFamily};
use crate::expr::{CompiledPoly, Poly, Var};
use crate::scalar::Scalar;

/// Polynomial vector field `rot + g` on R^3 with `(mu, eps)` already bound;
/// `rot` is the rotation `(-y, x, 0)` when enabled.
#[derive(Debug, Clone)]
pub struct PolyField {
    pub rotation: bool,
    pub g: [CompiledPoly; 3],
}

/// Nonlinear and perturbation part of the rescaled field
/// `(1/eps) [N(eps x) + eps U(eps x; mu, eps)]`, as polynomials in `(x, y, z, mu, eps)`.
pub fn rescaled_nonlinear(sys: &HopfZeroSystem, fam: &PerturbationFamily) -> [Poly; 3] {
    [0, 1, 2].map(|c| {
        let total = sys.polys[c].add(&fam.polys[c].mul(&Poly::var(Var::Eps)));
        let mut out = Poly::zero();
        for (m, coef) in total.terms() {
            let d = m[0] + m[1] + m[2];
            let mut m2 = *m;
            // every term carries eps or has space degree >= 2, so the exponent stays >= 0
            m2[4] = m2[4] + d - 1;
            out.add_term(m2, coef.clone());
        }
        out
    })
}

impl PolyField {
    pub fn new(polys: &[Poly; 3], mu: f64, eps: f64, rotation: bool) -> Self {
        PolyField {
            rotation,
            g: [0, 1, 2].map(|c| polys[c].compile(mu, eps)),
        }
    }

    /// `(-y + P + eps U, x + Q + eps V, R + eps W)` in the original coordinates.
    pub fn original(sys: &HopfZeroSystem, fam: &PerturbationFamily, mu: f64, eps: f64) -> Self {
        let polys = [0, 1, 2].map(|c| sys.polys[c].add(&fam.polys[c].mul(&Poly::var(Var::Eps))));
        PolyField::new(&polys, mu, eps, true)
    }

    /// The field after `(x, y, z) -> eps (x, y, z)`.
    pub fn rescaled(sys: &HopfZeroSystem, fam: &PerturbationFamily, mu: f64, eps: f64) -> Self {
        PolyField::new(&rescaled_nonlinear(sys, fam), mu, eps, true)
    }

    pub fn cartesian<T: Scalar>(&self, x: &T, y: &T, z: &T) -> [T; 3] {
        let mut out = [0, 1, 2].map(|c| self.g[c].eval(x, y, z));
        if self.rotation {
            out[0] = out[0].clone() - y.clone();
            out[1] = out[1].clone() + x.clone();
        }
        out
    }

    pub fn rhs(&self, s: &[f64], d: &mut [f64]) {
        let v = self.cartesian(&s[0], &s[1], &s[2]);
        d[..3].copy_from_slice(&v);
    }

    /// Angular speed and radial/axial velocities at angle `th`.
    fn theta_parts<T: Scalar>(&self, th: f64, r: &T, w: &T) -> (T, T, T) {
        let (s, c) = th.sin_cos();
        let x = r.clone().scale(c);
        let y = r.clone().scale(s);
        let g = [0, 1, 2].map(|i| self.g[i].eval(&x, &y, w));
        let radial = g[0].clone().scale(c) + g[1].clone().scale(s);
        let turn = (g[1].clone().scale(c) - g[0].clone().scale(s)) * r.recip();
        let speed = if self.rotation { T::one() + turn } else { turn };
        (speed, radial, g[2].clone())
    }

    pub fn theta_speed(&self, th: f64, r: f64, w: f64) -> f64 {
        self.theta_parts(th, &r, &w).0
    }

    /// `d(r, w)/d theta` in cylindrical coordinates.
    pub fn theta_rhs<T: Scalar>(&self, th: f64, r: &T, w: &T) -> [T; 2] {
        let (speed, radial, axial) = self.theta_parts(th, r, w);
        let inv = speed.recip();
        [radial * inv.clone(), axial * inv]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> (HopfZeroSystem, PerturbationFamily) {
        (
            HopfZeroSystem::parse("0", "y*z", "-x^2 + x*y + z^2").unwrap(),
            PerturbationFamily::simple(1),
        )
    }

    #[test]
    fn rescaling_moves_everything_to_positive_eps_order() {
        let (s, f) = example();
        let g = rescaled_nonlinear(&s, &f);
        for p in &g {
            assert!(p.eps_slice(0).is_zero());
        }
        // W slice: eps*mu*z + eps*beta
        let want = Poly::from_expr(&crate::expr::parse_field("-x^2 + x*y + z^2 + mu*z + 1").unwrap());
        assert_eq!(g[2].eps_slice(1), want);
    }

    #[test]
    fn rescaled_matches_direct_scaling() {
        let (s, f) = example();
        let (mu, eps) = (0.3, 0.07);
        let orig = PolyField::original(&s, &f, mu, eps);
        let resc = PolyField::rescaled(&s, &f, mu, eps);
        let p = [0.4, -1.1, 0.6];
        let a = resc.cartesian(&p[0], &p[1], &p[2]);
        let b = orig.cartesian(&(eps * p[0]), &(eps * p[1]), &(eps * p[2]));
        for i in 0..3 {
            assert!((a[i] - b[i] / eps).abs() < 1e-13);
        }
    }

    #[test]
    fn theta_form_matches_cartesian() {
        let (s, f) = example();
        let fl = PolyField::rescaled(&s, &f, 0.1, 0.2);
        let (th, r, w) = (0.7f64, 1.3, -0.4);
        let v = fl.cartesian(&(r * th.cos()), &(r * th.sin()), &w);
        let thdot = (th.cos() * v[1] - th.sin() * v[0]) / r;
        let rdot = th.cos() * v[0] + th.sin() * v[1];
        let d = fl.theta_rhs(th, &r, &w);
        assert!((d[0] - rdot / thdot).abs() < 1e-14);
        assert!((d[1] - v[2] / thdot).abs() < 1e-14);
    }
}
