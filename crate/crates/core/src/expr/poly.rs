use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::ast::{ExprKind, FieldExpr, Var};
use crate::scalar::Scalar;

/// Exponents of `(x, y, z, mu, eps)`.
pub type Monomial = [u32; 5];

/// Expanded polynomial with exact rational coefficients; zero terms are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_to_f64(q: &BigRational) -> f64 {
    // to_f64 on a ratio of huge integers can overflow to inf/nan; go through
    // scaled integer division in that case
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let shift = q.denom().bits().saturating_sub(60) as i64;
            let n = (q.numer() >> shift as usize).to_f64().unwrap_or(f64::NAN);
            let d = (q.denom() >> shift as usize).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Poly::zero();
        p.add_term([0; 5], c);
        p
    }

    pub fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub fn var(v: Var) -> Self {
        let mut m = [0; 5];
        m[v.index()] = 1;
        let mut p = Poly::zero();
        p.add_term(m, BigRational::one());
        p
    }

    pub fn monomial(m: Monomial, c: BigRational) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn from_expr(e: &FieldExpr) -> Poly {
        match &e.kind {
            ExprKind::Num(v) => Poly::constant(v.clone()),
            ExprKind::Var(v) => Poly::var(*v),
            ExprKind::Neg(a) => Poly::from_expr(a).neg(),
            ExprKind::Add(a, b) => Poly::from_expr(a).add(&Poly::from_expr(b)),
            ExprKind::Sub(a, b) => Poly::from_expr(a).sub(&Poly::from_expr(b)),
            ExprKind::Mul(a, b) => Poly::from_expr(a).mul(&Poly::from_expr(b)),
            ExprKind::Pow(a, n) => Poly::from_expr(a).pow(*n),
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(*m, -c.clone());
        }
        out
    }

    pub fn scale(&self, s: &BigRational) -> Poly {
        if s.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (*m, c * s)).collect(),
        }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let mut m = *m1;
                for i in 0..5 {
                    m[i] += m2[i];
                }
                out.add_term(m, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn degree_of(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m[v.index()]).max().unwrap_or(0)
    }

    /// Total degree in `(x, y, z)`.
    pub fn space_degree(&self) -> u32 {
        self.terms.keys().map(|m| m[0] + m[1] + m[2]).max().unwrap_or(0)
    }

    pub fn uses(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m[v.index()] > 0)
    }

    /// Terms of total space degree exactly `d`.
    pub fn space_homogeneous(&self, d: u32) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m[0] + m[1] + m[2] == d)
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    /// Coefficient of `eps^k`, with `eps` removed.
    pub fn eps_slice(&self, k: u32) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m[4] == k)
                .map(|(m, c)| {
                    let mut m = *m;
                    m[4] = 0;
                    (m, c.clone())
                })
                .collect(),
        }
    }

    /// `(1/eps) * f(eps x, eps y, eps z)`: each term gains `eps^(space degree - 1)`.
    /// Terms of space degree 0 would need `1/eps`; they are returned separately.
    pub fn rescale_space(&self) -> (Poly, Poly) {
        let mut scaled = Poly::zero();
        let mut singular = Poly::zero();
        for (m, c) in &self.terms {
            let d = m[0] + m[1] + m[2];
            if d == 0 {
                singular.add_term(*m, c.clone());
            } else {
                let mut m2 = *m;
                m2[4] += d - 1;
                scaled.add_term(m2, c.clone());
            }
        }
        (scaled, singular)
    }

    pub fn derivative(&self, v: Var) -> Poly {
        let i = v.index();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if m[i] > 0 {
                let mut m2 = *m;
                m2[i] -= 1;
                out.add_term(m2, c * BigRational::from_integer(BigInt::from(m[i])));
            }
        }
        out
    }

    /// Substitutes rational values for `mu` and `eps`.
    pub fn bind_params(&self, mu: Option<&BigRational>, eps: Option<&BigRational>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut c = c.clone();
            let mut m2 = *m;
            if let Some(v) = mu {
                c *= pow_rat(v, m[3]);
                m2[3] = 0;
            }
            if let Some(v) = eps {
                c *= pow_rat(v, m[4]);
                m2[4] = 0;
            }
            out.add_term(m2, c);
        }
        out
    }

    /// Numeric evaluation at `[x, y, z, mu, eps]`.
    pub fn eval<T: Scalar>(&self, point: &[T; 5]) -> T {
        let mut acc = T::zero();
        for (m, c) in &self.terms {
            let mut t = T::from_f64(rat_to_f64(c));
            for i in 0..5 {
                for _ in 0..m[i] {
                    t = t * point[i].clone();
                }
            }
            acc = acc + t;
        }
        acc
    }

    pub fn eval_f64(&self, point: [f64; 5]) -> f64 {
        self.eval(&point)
    }

    pub fn eval_exact(&self, point: &[BigRational; 5]) -> BigRational {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for i in 0..5 {
                t *= pow_rat(&point[i], m[i]);
            }
            acc += t;
        }
        acc
    }

    /// Converts to an expression that re-parses to an equal polynomial.
    pub fn to_expr(&self) -> FieldExpr {
        let mut acc: Option<FieldExpr> = None;
        for (m, c) in &self.terms {
            let mut factors: Vec<FieldExpr> = Vec::new();
            let mag = c.abs();
            let has_vars = m.iter().any(|&e| e > 0);
            if !mag.is_one() || !has_vars {
                factors.push(FieldExpr::num(mag));
            }
            for v in Var::ALL {
                match m[v.index()] {
                    0 => {}
                    1 => factors.push(FieldExpr::var(v)),
                    e => factors.push(FieldExpr::pow(FieldExpr::var(v), e)),
                }
            }
            let mut term = factors.remove(0);
            for f in factors {
                term = FieldExpr::mul(term, f);
            }
            acc = Some(match (acc, c.is_negative()) {
                (None, false) => term,
                (None, true) => FieldExpr::neg(term),
                (Some(a), false) => FieldExpr::add(a, term),
                (Some(a), true) => FieldExpr::sub(a, term),
            });
        }
        acc.unwrap_or_else(|| FieldExpr::num(BigRational::zero()))
    }

    /// Float coefficients of the `(x, y, z)` polynomial obtained by binding `mu`, `eps`.
    pub fn compile(&self, mu: f64, eps: f64) -> CompiledPoly {
        let mut map: BTreeMap<[u8; 3], f64> = BTreeMap::new();
        for (m, c) in &self.terms {
            let v = rat_to_f64(c) * mu.powi(m[3] as i32) * eps.powi(m[4] as i32);
            *map.entry([m[0] as u8, m[1] as u8, m[2] as u8]).or_insert(0.0) += v;
        }
        CompiledPoly {
            terms: map.into_iter().filter(|(_, c)| *c != 0.0).map(|(m, c)| (c, m)).collect(),
        }
    }
}

pub fn pow_rat(v: &BigRational, n: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..n {
        acc *= v;
    }
    acc
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

/// Space polynomial with float coefficients, for hot evaluation loops.
#[derive(Debug, Clone, Default)]
pub struct CompiledPoly {
    pub terms: Vec<(f64, [u8; 3])>,
}

impl CompiledPoly {
    pub fn max_degree(&self) -> usize {
        self.terms
            .iter()
            .map(|(_, m)| (m[0] + m[1] + m[2]) as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn eval<T: Scalar>(&self, x: &T, y: &T, z: &T) -> T {
        let d = self.max_degree();
        let powers = |b: &T| {
            let mut v = Vec::with_capacity(d + 1);
            v.push(T::one());
            for i in 1..=d {
                let next = v[i - 1].clone() * b.clone();
                v.push(next);
            }
            v
        };
        let (px, py, pz) = (powers(x), powers(y), powers(z));
        let mut acc = T::zero();
        for (c, m) in &self.terms {
            let t = px[m[0] as usize].clone() * py[m[1] as usize].clone() * pz[m[2] as usize].clone();
            acc = acc + t.scale(*c);
        }
        acc
    }

    pub fn eval_f64(&self, x: f64, y: f64, z: f64) -> f64 {
        let mut acc = 0.0;
        for (c, m) in &self.terms {
            acc += c * x.powi(m[0] as i32) * y.powi(m[1] as i32) * z.powi(m[2] as i32);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_field;

    fn p(s: &str) -> Poly {
        Poly::from_expr(&parse_field(s).unwrap())
    }

    #[test]
    fn expansion_cancels() {
        assert!(p("(x+y)^2 - x^2 - 2*x*y - y^2").is_zero());
    }

    #[test]
    fn eps_slices_of_example() {
        let w = p("-x^2 + x*y + z^2 + eps*mu*z + eps^2");
        assert_eq!(w.eps_slice(1), p("mu*z"));
        assert_eq!(w.eps_slice(2), p("1"));
        assert_eq!(w.eps_slice(0), p("-x^2 + x*y + z^2"));
    }

    #[test]
    fn rescale_shifts_degrees() {
        let (s, sing) = p("x^2 + mu*z + 3").rescale_space();
        assert_eq!(s, p("eps*x^2 + mu*z"));
        assert_eq!(sing, p("3"));
    }

    #[test]
    fn to_expr_round_trip() {
        let q = p("-3/2*x^2*y + eps*mu - 7 + z^3");
        assert_eq!(Poly::from_expr(&q.to_expr()), q);
        assert_eq!(Poly::from_expr(&parse_field(&q.to_string()).unwrap()), q);
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(p("x*y").eval_f64([2.0, 3.0, 0.0, 0.0, 0.0]), 6.0);
        assert_eq!(p("-x^2 + x*y + z^2").eval_f64([1.0, 1.0, 1.0, 0.0, 0.0]), 1.0);
        assert!((p("eps^2").eval_f64([0.0, 0.0, 0.0, 0.0, 0.05]) - 0.0025).abs() < 1e-16);
    }

    #[test]
    fn compiled_matches_exact() {
        let q = p("x^2*z - 3*mu*y + eps*x*y*z + 1/3");
        let c = q.compile(0.25, 0.5);
        let v = c.eval_f64(0.3, -1.2, 2.0);
        let e = q.eval_f64([0.3, -1.2, 2.0, 0.25, 0.5]);
        assert!((v - e).abs() < 1e-14);
    }
}
