use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, Zero};

use super::{eval_at, origin, substitute, LiftError};
use crate::criteria::{omega_exact, validate_hopf_zero, HopfZeroSystem};
use crate::expr::{pow_rat, rat_to_f64, Monomial, Poly, Var};

/// `X_{L,delta}` built on a seed translated so that the regular point is the origin,
/// together with the conjugated Hopf-Zero system `Y_{L,delta}`.
#[derive(Debug, Clone)]
pub struct LiftFamily {
    pub seed: [Poly; 3],
    pub l: BigRational,
    pub delta: BigRational,
    pub p0: BigRational,
    pub q0: BigRational,
    pub r0: BigRational,
    pub a0: BigRational,
    pub b0: BigRational,
    pub a1: BigRational,
    pub b2: BigRational,
    pub a2: BigRational,
    pub field: [Poly; 3],
    pub degree: u32,
    /// `sqrt(delta)` as used in the conjugation; exact when `delta` is a rational square.
    pub sqrt_delta: BigRational,
    pub sqrt_exact: bool,
    pub m: [[BigRational; 3]; 3],
    /// Largest deviation of the conjugated linear part from `(-y, x, 0)`.
    pub linear_residual: f64,
    pub system: HopfZeroSystem,
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Exact square root of a nonnegative rational, if it has one.
pub fn rational_sqrt(v: &BigRational) -> Option<BigRational> {
    if v.is_negative() {
        return None;
    }
    let n = v.numer().sqrt();
    let d = v.denom().sqrt();
    (&n * &n == *v.numer() && &d * &d == *v.denom()).then(|| BigRational::new(n, d))
}

fn lin(coeffs: [&BigRational; 3]) -> Poly {
    let mut p = Poly::zero();
    for (c, v) in coeffs.into_iter().zip([Var::X, Var::Y, Var::Z]) {
        p = p.add(&Poly::var(v).scale(c));
    }
    p
}

fn mono(i: u32, j: u32, k: u32) -> Monomial {
    [i, j, k, 0, 0]
}

/// Inverse of a lower-triangular 3x3 matrix with unit corner entries `m00 = m22 = 1`.
fn lower_inverse(m: &[[BigRational; 3]; 3]) -> [[BigRational; 3]; 3] {
    let z = BigRational::zero();
    let i11 = BigRational::one() / &m[1][1];
    let i10 = -(&m[1][0] * &i11);
    let i21 = -(&m[2][1] * &i11);
    let i20 = -&m[2][0] - &m[2][1] * &i10;
    [[BigRational::one(), z.clone(), z.clone()], [i10, i11, z], [i20, i21, BigRational::one()]]
}

/// `[a0, b0, a1, b2, a2]` for `P(0) = p0`, `Q(0) = q0`.
pub fn lift_coefficients(p0: &BigRational, q0: &BigRational, l: &BigRational, delta: &BigRational) -> [BigRational; 5] {
    let a2 = (BigRational::one() + q(2) * p0 * q0 * l + l * l * delta) / (p0 * p0 * q0);
    [q0.clone(), -p0.clone(), l / p0, -(l / q0), a2]
}

fn assemble(seed: &[Poly; 3], c: [&BigRational; 5], delta: &BigRational) -> [Poly; 3] {
    let [a0, b0, a1, b2, a2] = c;
    let zero = BigRational::zero();
    [
        lin([&(a0 + delta * a1), b0, &zero]).mul(&seed[0]),
        lin([&(a0 + delta * a2), &(b0 + delta * b2), &zero]).mul(&seed[1]),
        lin([a0, b0, &zero]).mul(&seed[2]),
    ]
}

/// `X_{L,delta}` for any `delta`, including the degenerate member `delta = 0`.
pub fn lift_field(seed: &[Poly; 3], l: &BigRational, delta: &BigRational) -> Result<[Poly; 3], LiftError> {
    let o = origin();
    let [p0, q0] = [0, 1].map(|i| eval_at(&seed[i], &o));
    if p0.is_zero() {
        return Err(LiftError::ZeroComponentAtP { which: "P" });
    }
    if q0.is_zero() {
        return Err(LiftError::ZeroComponentAtP { which: "Q" });
    }
    let c = lift_coefficients(&p0, &q0, l, delta);
    Ok(assemble(seed, [&c[0], &c[1], &c[2], &c[3], &c[4]], delta))
}

pub fn build_lift_family(seed: &[Poly; 3], l: &BigRational, delta: &BigRational) -> Result<LiftFamily, LiftError> {
    let o = origin();
    let [p0, q0, r0] = [0, 1, 2].map(|i| eval_at(&seed[i], &o));
    if p0.is_zero() {
        return Err(LiftError::ZeroComponentAtP { which: "P" });
    }
    if q0.is_zero() {
        return Err(LiftError::ZeroComponentAtP { which: "Q" });
    }
    if !delta.is_positive() {
        return Err(LiftError::InvalidSeed("delta must be positive".into()));
    }
    let [a0, b0, a1, b2, a2] = lift_coefficients(&p0, &q0, l, delta);
    let zero = BigRational::zero();
    let field = assemble(seed, [&a0, &b0, &a1, &b2, &a2], delta);
    let degree = field.iter().map(|p| p.space_degree()).max().unwrap_or(0);

    let (s, exact) = match rational_sqrt(delta) {
        Some(s) => (s, true),
        None => (
            BigRational::from_f64(rat_to_f64(delta).sqrt()).ok_or_else(|| LiftError::InvalidSeed("delta not finite".into()))?,
            false,
        ),
    };
    let pp = &p0 * &p0;
    let m = [
        [BigRational::one(), zero.clone(), zero.clone()],
        [(l * delta + &p0 * &q0) / &pp, &s / &pp, zero.clone()],
        [&r0 / &p0, -(l * &s * &r0 / &p0), BigRational::one()],
    ];
    let mi = lower_inverse(&m);
    let sub = [lin([&m[0][0], &m[0][1], &m[0][2]]), lin([&m[1][0], &m[1][1], &m[1][2]]), lin([&m[2][0], &m[2][1], &m[2][2]])];
    let xm = [0, 1, 2].map(|i| substitute(&field[i], &sub));
    let inv_s = BigRational::one() / &s;
    let y: [Poly; 3] = [0, 1, 2].map(|i| {
        let mut acc = Poly::zero();
        for (j, c) in xm.iter().enumerate() {
            acc = acc.add(&c.scale(&mi[i][j]));
        }
        acc.scale(&inv_s)
    });
    let target = [[0i64, -1, 0], [1, 0, 0], [0, 0, 0]];
    let mut linear_residual = 0.0f64;
    let mut residue = y.clone();
    for i in 0..3 {
        for (j, t) in target[i].iter().enumerate() {
            let mut e = mono(0, 0, 0);
            e[j] = 1;
            let c = y[i].coeff(&e);
            linear_residual = linear_residual.max((rat_to_f64(&c) - *t as f64).abs());
            residue[i].add_term(e, -c);
        }
        let c0 = y[i].coeff(&mono(0, 0, 0));
        linear_residual = linear_residual.max(rat_to_f64(&c0).abs());
        residue[i].add_term(mono(0, 0, 0), -c0);
    }
    let system = validate_hopf_zero(residue[0].to_expr(), residue[1].to_expr(), residue[2].to_expr())?;
    Ok(LiftFamily {
        seed: seed.clone(),
        l: l.clone(),
        delta: delta.clone(),
        p0,
        q0,
        r0,
        a0,
        b0,
        a1,
        b2,
        a2,
        field,
        degree,
        sqrt_delta: s,
        sqrt_exact: exact,
        m,
        linear_residual,
        system,
    })
}

impl LiftFamily {
    /// Exact Jacobian of `X_{L,delta}` at the origin.
    pub fn jacobian(&self) -> [[BigRational; 3]; 3] {
        [0, 1, 2].map(|i| [0, 1, 2].map(|j| {
            let mut e = mono(0, 0, 0);
            e[j] = 1;
            self.field[i].coeff(&e)
        }))
    }

    /// Coefficients `[c0, c1, c2, c3]` of `det(J - lambda I) = sum c_k lambda^k`.
    pub fn characteristic_polynomial(&self) -> [BigRational; 4] {
        let j = self.jacobian();
        let tr = &j[0][0] + &j[1][1] + &j[2][2];
        let minor = |a: usize, b: usize| &j[a][a] * &j[b][b] - &j[a][b] * &j[b][a];
        let m2 = minor(0, 1) + minor(0, 2) + minor(1, 2);
        let det = &j[0][0] * (&j[1][1] * &j[2][2] - &j[1][2] * &j[2][1]) - &j[0][1] * (&j[1][0] * &j[2][2] - &j[1][2] * &j[2][0])
            + &j[0][2] * (&j[1][0] * &j[2][1] - &j[1][1] * &j[2][0]);
        [det, -m2, tr, -BigRational::one()]
    }

    /// `(a0 x + b0 y) * seed`, which `X_{L,0}` must equal.
    pub fn degenerate_field(&self) -> [Poly; 3] {
        let zero = BigRational::zero();
        let f = lin([&self.a0, &self.b0, &zero]);
        [0, 1, 2].map(|i| f.mul(&self.seed[i]))
    }

    /// Lifted system `(P, Q, R)` in the expression grammar.
    pub fn export(&self) -> [String; 3] {
        [0, 1, 2].map(|i| self.system.polys[i].to_expr().to_string())
    }

    /// The degree-`m+1` field itself in the expression grammar.
    pub fn export_field(&self) -> [String; 3] {
        [0, 1, 2].map(|i| self.field[i].to_expr().to_string())
    }
}

/// `Y(s x) / s`, the same flow in coordinates scaled by `1/s`. The linear part
/// is unchanged and `Omega` picks up a factor `s^2`.
pub fn dilate(polys: &[Poly; 3], s: &BigRational) -> [Poly; 3] {
    [0, 1, 2].map(|i| {
        let mut out = Poly::zero();
        for (m, c) in polys[i].terms() {
            out.add_term(*m, c * pow_rat(s, m[0] + m[1] + m[2]) / s);
        }
        out
    })
}

/// Dilation by a power of two bringing a positive `Omega` into `[1, 4)`.
pub fn normalize_scale(sys: &HopfZeroSystem) -> Result<(HopfZeroSystem, BigRational), LiftError> {
    let omega = omega_exact(sys);
    let mut s = BigRational::one();
    if !omega.is_positive() {
        return Ok((sys.clone(), s));
    }
    let two = q(2);
    let four = q(4);
    let mut scaled = omega;
    while scaled >= four {
        scaled /= &four;
        s /= &two;
    }
    while scaled < BigRational::one() {
        scaled *= &four;
        s *= &two;
    }
    let p = dilate(&sys.polys, &s);
    let out = validate_hopf_zero(p[0].to_expr(), p[1].to_expr(), p[2].to_expr())?;
    Ok((out, s))
}

/// `BigRational` from a decimal or fraction string, e.g. `"3/7"`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        return (!d.is_zero()).then(|| BigRational::new(n, d));
    }
    let v: f64 = s.trim().parse().ok()?;
    BigRational::from_f64(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::omega_exact;
    use crate::expr::{parse_field, rat};

    fn seed() -> [Poly; 3] {
        ["2 + x*z - y^2 + 3*z", "-1 + x*y + 2*z + z^2", "3 + x^2 - y*z"].map(|s| Poly::from_expr(&parse_field(s).unwrap()))
    }

    #[test]
    fn dilation_scales_omega_only() {
        let f = build_lift_family(&seed(), &rat(3, 1), &rat(1, 4)).unwrap();
        let (n, s) = normalize_scale(&f.system).unwrap();
        let om = omega_exact(&n);
        assert!(om >= rat(1, 1) && om < rat(4, 1));
        assert_eq!(om, omega_exact(&f.system) * &s * &s);
        assert_eq!(dilate(&n.polys, &(rat(1, 1) / &s)), f.system.polys);
    }

    #[test]
    fn characteristic_polynomial_is_exact() {
        for (l, d) in [(rat(3, 1), rat(1, 4)), (rat(-5, 7), rat(2, 3)), (rat(11, 2), rat(1, 1000))] {
            let f = build_lift_family(&seed(), &l, &d).unwrap();
            let cp = f.characteristic_polynomial();
            assert_eq!(cp, [rat(0, 1), -d.clone(), rat(0, 1), rat(-1, 1)]);
        }
    }

    #[test]
    fn degenerate_member_factorises() {
        let f = build_lift_family(&seed(), &rat(3, 1), &rat(1, 9)).unwrap();
        assert_eq!(lift_field(&seed(), &rat(3, 1), &rat(0, 1)).unwrap(), f.degenerate_field());
        assert_eq!(f.degree, 3);
    }

    #[test]
    fn conjugated_linear_part() {
        let exact = build_lift_family(&seed(), &rat(2, 1), &rat(4, 25)).unwrap();
        assert!(exact.sqrt_exact && exact.linear_residual == 0.0);
        let approx = build_lift_family(&seed(), &rat(2, 1), &rat(1, 7)).unwrap();
        assert!(!approx.sqrt_exact && approx.linear_residual <= 1e-12, "{}", approx.linear_residual);
        assert!(omega_exact(&exact.system) != BigRational::zero());
    }

    #[test]
    fn zero_component_rejected() {
        let s = ["x", "1 + y", "z"].map(|s| Poly::from_expr(&parse_field(s).unwrap()));
        assert_eq!(build_lift_family(&s, &rat(1, 1), &rat(1, 4)).unwrap_err(), LiftError::ZeroComponentAtP { which: "P" });
    }

    #[test]
    fn export_round_trips() {
        let f = build_lift_family(&seed(), &rat(2, 1), &rat(1, 4)).unwrap();
        let e = f.export();
        let back = HopfZeroSystem::parse(&e[0], &e[1], &e[2]).unwrap();
        assert_eq!(back.polys, f.system.polys);
    }

    #[test]
    fn square_roots() {
        assert_eq!(rational_sqrt(&rat(9, 49)), Some(rat(3, 7)));
        assert_eq!(rational_sqrt(&rat(2, 1)), None);
        assert_eq!(parse_rational("3/7"), Some(rat(3, 7)));
        assert_eq!(parse_rational("0.5"), Some(rat(1, 2)));
    }
}
