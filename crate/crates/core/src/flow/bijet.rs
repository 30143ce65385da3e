//! Taylor polynomials in two variables truncated at total degree 3.

use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Scalar;

pub const BIJET_LEN: usize = 10;

/// Exponents `(i, j)` of each coefficient slot, graded by total degree.
pub const BIJET_EXP: [(usize, usize); BIJET_LEN] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
];

pub const fn bijet_slot(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

const N_PAIRS: usize = {
    let mut n = 0;
    let mut a = 0;
    while a < BIJET_LEN {
        let mut b = 0;
        while b < BIJET_LEN {
            if BIJET_EXP[a].0 + BIJET_EXP[a].1 + BIJET_EXP[b].0 + BIJET_EXP[b].1 <= 3 {
                n += 1;
            }
            b += 1;
        }
        a += 1;
    }
    n
};

const PAIRS: [(u8, u8, u8); N_PAIRS] = {
    let mut out = [(0u8, 0u8, 0u8); N_PAIRS];
    let mut n = 0;
    let mut a = 0;
    while a < BIJET_LEN {
        let mut b = 0;
        while b < BIJET_LEN {
            let (i1, j1) = BIJET_EXP[a];
            let (i2, j2) = BIJET_EXP[b];
            if i1 + j1 + i2 + j2 <= 3 {
                out[n] = (a as u8, b as u8, bijet_slot(i1 + i2, j1 + j2) as u8);
                n += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiJet {
    pub c: [f64; BIJET_LEN],
}

impl BiJet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; BIJET_LEN];
        c[0] = v;
        BiJet { c }
    }

    /// `v + a*u1 + b*u2`.
    pub fn affine(v: f64, a: f64, b: f64) -> Self {
        let mut c = [0.0; BIJET_LEN];
        c[0] = v;
        c[1] = a;
        c[2] = b;
        BiJet { c }
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.c[bijet_slot(i, j)]
    }

    /// Partial derivative `d^(i+j) / du1^i du2^j` at the base point.
    pub fn partial(&self, i: usize, j: usize) -> f64 {
        self.coeff(i, j) * fact(i) * fact(j)
    }

    /// Evaluates the truncated polynomial at a displacement.
    pub fn eval(&self, u1: f64, u2: f64) -> f64 {
        BIJET_EXP
            .iter()
            .zip(&self.c)
            .map(|(&(i, j), c)| c * u1.powi(i as i32) * u2.powi(j as i32))
            .sum()
    }
}

fn fact(n: usize) -> f64 {
    (1..=n).product::<usize>() as f64
}

impl Add for BiJet {
    type Output = BiJet;
    fn add(mut self, o: BiJet) -> BiJet {
        for i in 0..BIJET_LEN {
            self.c[i] += o.c[i];
        }
        self
    }
}

impl Sub for BiJet {
    type Output = BiJet;
    fn sub(mut self, o: BiJet) -> BiJet {
        for i in 0..BIJET_LEN {
            self.c[i] -= o.c[i];
        }
        self
    }
}

impl Neg for BiJet {
    type Output = BiJet;
    fn neg(mut self) -> BiJet {
        for v in &mut self.c {
            *v = -*v;
        }
        self
    }
}

impl Mul for BiJet {
    type Output = BiJet;
    fn mul(self, o: BiJet) -> BiJet {
        let mut c = [0.0; BIJET_LEN];
        for &(a, b, k) in PAIRS.iter() {
            c[k as usize] += self.c[a as usize] * o.c[b as usize];
        }
        BiJet { c }
    }
}

impl Scalar for BiJet {
    fn zero() -> Self {
        BiJet::constant(0.0)
    }
    fn one() -> Self {
        BiJet::constant(1.0)
    }
    fn from_f64(v: f64) -> Self {
        BiJet::constant(v)
    }
    fn scale(mut self, k: f64) -> Self {
        for v in &mut self.c {
            *v *= k;
        }
        self
    }
    fn value(&self) -> f64 {
        self.c[0]
    }
    fn recip(&self) -> Self {
        let a0 = self.c[0];
        let mut t = self.scale(1.0 / a0);
        t.c[0] = 0.0;
        let t2 = t * t;
        let t3 = t2 * t;
        (BiJet::one() - t + t2 - t3).scale(1.0 / a0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_truncates() {
        let u = BiJet::affine(0.0, 1.0, 0.0);
        let v = BiJet::affine(0.0, 0.0, 1.0);
        let p = u * u * v;
        assert_eq!(p.coeff(2, 1), 1.0);
        assert_eq!((p * u).c, [0.0; BIJET_LEN]);
    }

    #[test]
    fn reciprocal_series() {
        // 1/(2 + u1) = 1/2 - u1/4 + u1^2/8 - u1^3/16
        let r = BiJet::affine(2.0, 1.0, 0.0).recip();
        assert_eq!(r.coeff(0, 0), 0.5);
        assert_eq!(r.coeff(1, 0), -0.25);
        assert_eq!(r.coeff(2, 0), 0.125);
        assert_eq!(r.coeff(3, 0), -0.0625);
        let one = r * BiJet::affine(2.0, 1.0, 0.0);
        assert!((one - BiJet::one()).c.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn partials_of_polynomial() {
        let u = BiJet::affine(1.0, 1.0, 0.0);
        let v = BiJet::affine(2.0, 0.0, 1.0);
        // f = x^2 y at (1, 2)
        let f = u * u * v;
        assert_eq!(f.partial(0, 0), 2.0);
        assert_eq!(f.partial(1, 0), 4.0);
        assert_eq!(f.partial(0, 1), 1.0);
        assert_eq!(f.partial(2, 0), 4.0);
        assert_eq!(f.partial(1, 1), 2.0);
        assert_eq!(f.partial(2, 1), 2.0);
        assert_eq!(f.partial(3, 0), 0.0);
    }
}
