use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::poly::{rat_to_f64, Poly};

pub const JET_ORDER: u32 = 3;

/// Multi-indices `(j, k, l)` with `j + k + l <= 3`, ordered by total degree then lexicographically descending.
pub const JET_INDICES: [(u32, u32, u32); 20] = [
    (0, 0, 0),
    (1, 0, 0),
    (0, 1, 0),
    (0, 0, 1),
    (2, 0, 0),
    (1, 1, 0),
    (1, 0, 1),
    (0, 2, 0),
    (0, 1, 1),
    (0, 0, 2),
    (3, 0, 0),
    (2, 1, 0),
    (2, 0, 1),
    (1, 2, 0),
    (1, 1, 1),
    (1, 0, 2),
    (0, 3, 0),
    (0, 2, 1),
    (0, 1, 2),
    (0, 0, 3),
];

pub fn jet_slot(j: u32, k: u32, l: u32) -> Option<usize> {
    JET_INDICES.iter().position(|&t| t == (j, k, l))
}

fn factorial(n: u32) -> u64 {
    (1..=n as u64).product()
}

fn binomial(n: u32, k: u32) -> u64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Raw partial derivatives `F^(j,k,l)` at the origin, `j + k + l <= 3`.
///
/// `T` is `BigRational` for exact jets, `Poly` (in `mu`, `eps`) for
/// parameter-dependent jets, or `f64` after evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet3<T> {
    entries: Vec<T>,
}

pub type ParamJet3 = Jet3<Poly>;

impl<T: Clone> Jet3<T> {
    pub fn from_fn(mut f: impl FnMut(u32, u32, u32) -> T) -> Self {
        Jet3 {
            entries: JET_INDICES.iter().map(|&(j, k, l)| f(j, k, l)).collect(),
        }
    }

    /// Entry `F^(j,k,l)`; panics when `j + k + l > 3`.
    pub fn get(&self, j: u32, k: u32, l: u32) -> &T {
        let slot = jet_slot(j, k, l).unwrap_or_else(|| panic!("jet index ({j},{k},{l}) exceeds order 3"));
        &self.entries[slot]
    }

    pub fn entries(&self) -> impl Iterator<Item = ((u32, u32, u32), &T)> {
        JET_INDICES.iter().copied().zip(self.entries.iter())
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Jet3<U> {
        Jet3 {
            entries: self.entries.iter().map(f).collect(),
        }
    }
}

/// Coefficient ring for jet products.
pub trait JetCoeff: Clone {
    fn zero() -> Self;
    fn from_int(n: u64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
}

impl JetCoeff for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_int(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
}

impl JetCoeff for Poly {
    fn zero() -> Self {
        Poly::zero()
    }
    fn from_int(n: u64) -> Self {
        Poly::constant(BigRational::from_integer(BigInt::from(n)))
    }
    fn add(&self, o: &Self) -> Self {
        Poly::add(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Poly::mul(self, o)
    }
}

impl<T: JetCoeff> Jet3<T> {
    /// Truncated Leibniz product: `(fg)^(a) = sum_{b <= a} C(a,b) f^(b) g^(a-b)`.
    pub fn product(&self, other: &Jet3<T>) -> Jet3<T> {
        Jet3::from_fn(|j, k, l| {
            let mut acc = T::zero();
            for j1 in 0..=j {
                for k1 in 0..=k {
                    for l1 in 0..=l {
                        let c = binomial(j, j1) * binomial(k, k1) * binomial(l, l1);
                        let term = T::from_int(c).mul(self.get(j1, k1, l1)).mul(other.get(j - j1, k - k1, l - l1));
                        acc = acc.add(&term);
                    }
                }
            }
            acc
        })
    }
}

impl Jet3<BigRational> {
    pub fn zero() -> Self {
        Jet3::from_fn(|_, _, _| <BigRational as Zero>::zero())
    }

    pub fn to_f64(&self) -> Jet3<f64> {
        self.map(rat_to_f64)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|v| v.is_zero())
    }
}

impl Jet3<Poly> {
    /// Entries evaluated at numeric `(mu, eps)`.
    pub fn eval(&self, mu: f64, eps: f64) -> Jet3<f64> {
        self.map(|p| p.eval_f64([0.0, 0.0, 0.0, mu, eps]))
    }

    pub fn eval_exact(&self, mu: &BigRational, eps: &BigRational) -> Jet3<BigRational> {
        self.map(|p| p.bind_params(Some(mu), Some(eps)).coeff(&[0; 5]))
    }
}

/// Jet of a polynomial at the origin of `(x, y, z)`; parameters stay symbolic
/// and space-degree terms above 3 are discarded.
pub fn param_jet(f: &Poly) -> ParamJet3 {
    Jet3::from_fn(|j, k, l| {
        let mut out = Poly::zero();
        let scale = BigRational::from_integer(BigInt::from(factorial(j) * factorial(k) * factorial(l)));
        for (m, c) in f.terms() {
            if m[0] == j && m[1] == k && m[2] == l {
                out.add_term([0, 0, 0, m[3], m[4]], c * &scale);
            }
        }
        out
    })
}

/// Exact jet of a polynomial free of `mu` and `eps` (parameters are set to zero otherwise).
pub fn jet(f: &Poly) -> Jet3<BigRational> {
    let z = <BigRational as Zero>::zero();
    param_jet(f).eval_exact(&z, &z)
}

/// Jet with `mu` bound to a rational value and `eps` to zero.
pub fn jet_at(f: &Poly, mu: &BigRational) -> Jet3<BigRational> {
    param_jet(f).eval_exact(mu, &<BigRational as Zero>::zero())
}

/// Jet back to its degree-3 Taylor polynomial in `(x, y, z)`.
pub fn jet_to_poly(j: &Jet3<BigRational>) -> Poly {
    let mut p = Poly::zero();
    for ((a, b, c), v) in j.entries() {
        let f = BigRational::from_integer(BigInt::from(factorial(a) * factorial(b) * factorial(c)));
        p.add_term([a, b, c, 0, 0], v / f);
    }
    p
}

/// Degree-3 truncation of a polynomial in `(x, y, z)`.
pub fn truncate3(f: &Poly) -> Poly {
    let mut p = Poly::zero();
    for (m, c) in f.terms() {
        if m[0] + m[1] + m[2] <= JET_ORDER {
            p.add_term(*m, c.clone());
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_field, poly::rat};

    fn p(s: &str) -> Poly {
        Poly::from_expr(&parse_field(s).unwrap())
    }

    #[test]
    fn single_monomial() {
        let j = jet(&p("y*z"));
        for ((a, b, c), v) in j.entries() {
            let expect = if (a, b, c) == (0, 1, 1) { rat(1, 1) } else { rat(0, 1) };
            assert_eq!(*v, expect);
        }
    }

    #[test]
    fn quadratic_partials() {
        let j = jet(&p("-x^2 + x*y + z^2"));
        assert_eq!(*j.get(2, 0, 0), rat(-2, 1));
        assert_eq!(*j.get(1, 1, 0), rat(1, 1));
        assert_eq!(*j.get(0, 0, 2), rat(2, 1));
    }

    #[test]
    fn truncation_drops_high_degree() {
        let j = jet(&p("x^5 + x*z"));
        assert_eq!(*j.get(1, 0, 1), rat(1, 1));
        assert_eq!(j.entries().filter(|(_, v)| !v.is_zero()).count(), 1);
    }

    #[test]
    fn cubic_partial_carries_factorials() {
        let j = jet(&p("x^2*y + z^3"));
        assert_eq!(*j.get(2, 1, 0), rat(2, 1));
        assert_eq!(*j.get(0, 0, 3), rat(6, 1));
    }

    #[test]
    fn param_jet_evaluation_commutes() {
        let f = p("mu*x + eps*mu^2*y*z + 3*mu*z^2");
        let pj = param_jet(&f);
        let at = pj.eval(0.5, 0.25);
        assert_eq!(*at.get(1, 0, 0), 0.5);
        assert_eq!(*at.get(0, 1, 1), 0.25 * 0.25);
        assert_eq!(*at.get(0, 0, 2), 3.0);
    }

    #[test]
    fn product_matches_polynomial_product() {
        let f = p("1 + x - 2*y*z + x^2");
        let g = p("3 - z + x*y + y^3");
        let lhs = jet(&truncate3(&f.mul(&g)));
        let rhs = jet(&f).product(&jet(&g));
        assert_eq!(lhs, rhs);
        assert_eq!(jet_to_poly(&lhs), truncate3(&f.mul(&g)));
    }
}
