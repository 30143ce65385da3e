use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::criteria::AveragedCoefficients;

use super::standard::StandardFormSystem;
use super::AveragingError;

pub const QUAD_TOL: f64 = 1e-11;
const GL_NODES: usize = 16;
const MAX_PANELS: usize = 1024;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (z * p - p0) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(GL_NODES))
}

/// Composite Gauss–Legendre of a vector integrand on [a, b].
fn panels_integral<const N: usize>(f: &impl Fn(f64) -> [f64; N], a: f64, b: f64, panels: usize) -> [f64; N] {
    let (x, w) = gl16();
    let h = (b - a) / panels as f64;
    let mut acc = [0.0; N];
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(w) {
            let v = f(lo + 0.5 * h * (xi + 1.0));
            for k in 0..N {
                acc[k] += 0.5 * h * wi * v[k];
            }
        }
    }
    acc
}

/// Doubles the panel count until two successive estimates agree to `tol`.
pub fn adaptive_integral<const N: usize>(f: impl Fn(f64) -> [f64; N], a: f64, b: f64, tol: f64) -> Result<[f64; N], AveragingError> {
    let mut panels = 2;
    let mut prev = panels_integral(&f, a, b, panels);
    while panels < MAX_PANELS {
        panels *= 2;
        let cur = panels_integral(&f, a, b, panels);
        let diff = (0..N).map(|k| (cur[k] - prev[k]).abs()).fold(0.0, f64::max);
        if diff <= tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(AveragingError::QuadratureNotConverged { panels })
}

/// `f2 = int_0^T (F2 + DF1 * int_0^t F1) dt` on a fixed panel count.
fn f2_panels(std: &StandardFormSystem, r: f64, w: f64, panels: usize) -> [f64; 2] {
    let (x, wt) = gl16();
    let tp = 2.0 * PI;
    let h = tp / panels as f64;
    let mut acc = [0.0; 2];
    let mut cum = [0.0; 2];
    for p in 0..panels {
        let lo = p as f64 * h;
        for (xi, wi) in x.iter().zip(wt) {
            let t = lo + 0.5 * h * (xi + 1.0);
            // inner antiderivative: completed panels plus a partial panel [lo, t]
            let part = panels_integral(&|s| std.f1(s, &r, &w), lo, t, 1);
            let y1 = [cum[0] + part[0], cum[1] + part[1]];
            let f2 = std.f2(t, r, w);
            let d = std.f1_jacobian(t, r, w);
            for k in 0..2 {
                acc[k] += 0.5 * h * wi * (f2[k] + d[k][0] * y1[0] + d[k][1] * y1[1]);
            }
        }
        let full = panels_integral(&|s| std.f1(s, &r, &w), lo, lo + h, 1);
        cum[0] += full[0];
        cum[1] += full[1];
    }
    acc
}

/// Closed-form `f1` coefficients of the averaged system at fixed `mu`.
#[derive(Debug, Clone, Copy)]
pub struct F1Closed {
    pub d: f64,
    pub s: f64,
    pub sigma: f64,
    pub r002: f64,
    pub w1z: f64,
    pub w2: f64,
}

impl F1Closed {
    pub fn new(co: &AveragedCoefficients, mu: f64) -> Self {
        F1Closed {
            d: co.d,
            s: co.fam.s(mu),
            sigma: co.sigma,
            r002: co.r002,
            w1z: co.fam.w1z(mu),
            w2: co.fam.w2_origin(mu),
        }
    }

    pub fn eval(&self, r: f64, w: f64) -> [f64; 2] {
        [
            PI * r * (self.d * w + self.s),
            PI * (0.5 * self.sigma * r * r + self.r002 * w * w + 2.0 * self.w1z * w + 2.0 * self.w2),
        ]
    }

    pub fn jacobian(&self, r: f64, w: f64) -> [[f64; 2]; 2] {
        [
            [PI * (self.d * w + self.s), PI * self.d * r],
            [PI * self.sigma * r, PI * (2.0 * self.r002 * w + 2.0 * self.w1z)],
        ]
    }
}

#[derive(Debug, Clone)]
pub struct MelnikovPair {
    pub std: StandardFormSystem,
    pub closed: F1Closed,
}

pub fn melnikov_pair(std: StandardFormSystem, co: &AveragedCoefficients) -> MelnikovPair {
    let closed = F1Closed::new(co, std.mu);
    MelnikovPair { std, closed }
}

impl MelnikovPair {
    pub fn f1(&self, r: f64, w: f64) -> [f64; 2] {
        self.closed.eval(r, w)
    }

    pub fn f1_jacobian(&self, r: f64, w: f64) -> [[f64; 2]; 2] {
        self.closed.jacobian(r, w)
    }

    pub fn f1_quadrature(&self, r: f64, w: f64) -> Result<[f64; 2], AveragingError> {
        adaptive_integral(|t| self.std.f1(t, &r, &w), 0.0, 2.0 * PI, QUAD_TOL)
    }

    pub fn f2(&self, r: f64, w: f64) -> Result<[f64; 2], AveragingError> {
        let mut panels = 2;
        let mut prev = f2_panels(&self.std, r, w, panels);
        while panels < MAX_PANELS {
            panels *= 2;
            let cur = f2_panels(&self.std, r, w, panels);
            if (cur[0] - prev[0]).abs().max((cur[1] - prev[1]).abs()) <= QUAD_TOL {
                return Ok(cur);
            }
            prev = cur;
        }
        Err(AveragingError::QuadratureNotConverged { panels })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::to_standard_form;
    use crate::criteria::{HopfZeroSystem, PerturbationFamily};

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_mean_integrand() {
        let v = adaptive_integral(|t| [t.cos(), t.sin()], 0.0, 2.0 * PI, QUAD_TOL).unwrap();
        assert!(v[0].abs() < 1e-13 && v[1].abs() < 1e-13);
    }

    #[test]
    fn example_f1_closed_and_quadrature() {
        let s = HopfZeroSystem::parse("0", "y*z", "-x^2 + x*y + z^2").unwrap();
        let fam = PerturbationFamily::simple(1);
        let co = AveragedCoefficients::new(&s, &fam).unwrap();
        let mu = 0.3;
        let m = melnikov_pair(to_standard_form(&s, &fam, mu, 0.05, 4.0).unwrap(), &co);
        for (r, w) in [(0.5, -0.4), (1.4, 0.0), (2.2, 0.9)] {
            let c = m.f1(r, w);
            assert!((c[0] - PI * r * w).abs() < 1e-14);
            assert!((c[1] - 0.5 * PI * (4.0 + 4.0 * mu * w - 2.0 * r * r + 4.0 * w * w)).abs() < 1e-13);
            let q = m.f1_quadrature(r, w).unwrap();
            assert!((q[0] - c[0]).abs() < 1e-10 && (q[1] - c[1]).abs() < 1e-10);
        }
    }
}
