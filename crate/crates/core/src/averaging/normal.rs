use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::{AveragedCoefficients, HopfZeroSystem, PerturbationFamily};
use crate::flow::{theta_return_jet, BiJet, IntegratorConfig, MapJet, PolyField, TimeDirection};

use super::branch::{solve_unit_circle, CurvePoint};
use super::{interpolating_poly, AveragingError};

pub const RESONANCE_TOL: f64 = 1e-8;

/// The return map at a point of the Neimark–Sacker curve, in coordinates
/// `x = xi + M u` where its linear part is a planar rotation.
#[derive(Debug, Clone, Serialize)]
pub struct NormalizedMap {
    pub eps: f64,
    pub mu: f64,
    pub xi: [f64; 2],
    pub m: [[f64; 2]; 2],
    pub det_m: f64,
    pub jacobian: [[f64; 2]; 2],
    /// `M^{-1} J M`.
    pub normalized: [[f64; 2]; 2],
    /// `|N00 - N11| + |N01 + N10|`.
    pub jordan_residual: f64,
    pub theta: f64,
    /// Jet of `H(u) = M^{-1}(Pi(xi + M u) - xi)`.
    pub jet: MapJet,
}

fn inv2(m: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let d = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

fn mul2(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// `M = [[1, 0], [Re q2, Im q2]]` from the eigenvector `q = (1, q2)` of the
/// eigenvalue with negative imaginary part.
pub fn jordanizing_matrix(j: &[[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let ev = super::equilibrium::eig2(j);
    let lam = if ev[0].im < 0.0 { ev[0] } else { ev[1] };
    if lam.im == 0.0 {
        return None;
    }
    let q2 = if j[0][1] != 0.0 {
        -(Complex64::new(j[0][0], 0.0) - lam) / j[0][1]
    } else {
        -Complex64::new(j[1][0], 0.0) / (Complex64::new(j[1][1], 0.0) - lam)
    };
    Some([[1.0, 0.0], [q2.re, q2.im]])
}

pub fn normalize(sys: &HopfZeroSystem, fam: &PerturbationFamily, point: &CurvePoint, cfg: &IntegratorConfig) -> Result<NormalizedMap, AveragingError> {
    let j = point.fixed.jacobian;
    let m = jordanizing_matrix(&j).ok_or(AveragingError::UnitCircleCrossingNotFound { eps: point.eps })?;
    let mi = inv2(&m);
    let n = mul2(&mi, &mul2(&j, &m));
    let field = PolyField::rescaled(sys, fam, point.mu, point.eps);
    let xi = point.fixed.xi;
    let h = theta_return_jet(&field, xi, m, TimeDirection::Forward, cfg)?;
    let mut d = h;
    d[0].c[0] -= xi[0];
    d[1].c[0] -= xi[1];
    let mut out = [BiJet::constant(0.0), BiJet::constant(0.0)];
    for k in 0..out[0].c.len() {
        out[0].c[k] = mi[0][0] * d[0].c[k] + mi[0][1] * d[1].c[k];
        out[1].c[k] = mi[1][0] * d[0].c[k] + mi[1][1] * d[1].c[k];
    }
    Ok(NormalizedMap {
        eps: point.eps,
        mu: point.mu,
        xi,
        m,
        det_m: m[1][1],
        jacobian: j,
        normalized: n,
        jordan_residual: (n[0][0] - n[1][1]).abs() + (n[0][1] + n[1][0]).abs(),
        theta: n[1][0].atan2(n[0][0]),
        jet: MapJet::from_bijets(&out),
    })
}

fn apply_b(jet: &MapJet, u: [Complex64; 2], v: [Complex64; 2]) -> [Complex64; 2] {
    let mut o = [Complex64::new(0.0, 0.0); 2];
    for (i, oi) in o.iter_mut().enumerate() {
        for j in 0..2 {
            for k in 0..2 {
                *oi += jet.b[i][j][k] * u[j] * v[k];
            }
        }
    }
    o
}

fn apply_c(jet: &MapJet, u: [Complex64; 2], v: [Complex64; 2], w: [Complex64; 2]) -> [Complex64; 2] {
    let mut o = [Complex64::new(0.0, 0.0); 2];
    for (i, oi) in o.iter_mut().enumerate() {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    *oi += jet.c[i][j][k][l] * u[j] * v[k] * w[l];
                }
            }
        }
    }
    o
}

/// First Lyapunov coefficient of a planar map whose linear part is the
/// rotation by `theta`, with `p = (1, -i)/sqrt 2` and `<u, v> = conj(u)^T v`.
pub fn lyapunov_coefficient(jet: &MapJet, theta: f64) -> Result<f64, AveragingError> {
    for k in 1..=4u32 {
        if (Complex64::from_polar(1.0, k as f64 * theta) - 1.0).norm() < RESONANCE_TOL {
            return Err(AveragingError::StrongResonance { k });
        }
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let p = [Complex64::new(s, 0.0), Complex64::new(0.0, -s)];
    let pb = [p[0].conj(), p[1].conj()];
    let ip = |u: [Complex64; 2], v: [Complex64; 2]| u[0].conj() * v[0] + u[1].conj() * v[1];
    let e = Complex64::from_polar(1.0, theta);
    let g20 = ip(p, apply_b(jet, p, p));
    let g11 = ip(p, apply_b(jet, p, pb));
    let g02 = ip(p, apply_b(jet, pb, pb));
    let g21 = ip(p, apply_c(jet, p, p, pb));
    let one = Complex64::new(1.0, 0.0);
    let t1 = (e.conj() * g21).re / 2.0;
    let t2 = ((one - 2.0 * e) * e.conj() * e.conj() / (2.0 * (one - e)) * g20 * g11).re;
    Ok(t1 - t2 - g11.norm_sqr() / 2.0 - g02.norm_sqr() / 4.0)
}

pub fn lyapunov_coefficient_map(nm: &NormalizedMap) -> Result<f64, AveragingError> {
    lyapunov_coefficient(&nm.jet, nm.theta)
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovExpansion {
    pub eps: Vec<f64>,
    pub mu: Vec<f64>,
    pub l1_eps: Vec<f64>,
    /// `l1^eps / eps^2` on the ladder.
    pub scaled: Vec<f64>,
    pub l11: f64,
    pub l12: f64,
}

/// `l1^eps` on the ladder `{eps, eps/2, eps/4}`; `l1^eps/eps = l11 + eps l12 + O(eps^2)`.
pub fn lyapunov_expansion(
    sys: &HopfZeroSystem,
    fam: &PerturbationFamily,
    mu0: f64,
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<LyapunovExpansion, AveragingError> {
    let ladder = vec![eps, eps / 2.0, eps / 4.0];
    lyapunov_on(sys, fam, mu0, ladder, cfg)
}

pub fn lyapunov_on(
    sys: &HopfZeroSystem,
    fam: &PerturbationFamily,
    mu0: f64,
    ladder: Vec<f64>,
    cfg: &IntegratorConfig,
) -> Result<LyapunovExpansion, AveragingError> {
    let co = AveragedCoefficients::new(sys, fam)?;
    let res: Vec<(f64, f64)> = ladder
        .par_iter()
        .map(|&e| {
            let pt = solve_unit_circle(sys, fam, &co, mu0, e, cfg)?;
            let nm = normalize(sys, fam, &pt, cfg)?;
            Ok((pt.mu, lyapunov_coefficient_map(&nm)?))
        })
        .collect::<Result<_, AveragingError>>()?;
    let l1_eps: Vec<f64> = res.iter().map(|r| r.1).collect();
    let per_eps: Vec<f64> = l1_eps.iter().zip(&ladder).map(|(l, e)| l / e).collect();
    let c = interpolating_poly(&ladder, &per_eps);
    Ok(LyapunovExpansion {
        scaled: l1_eps.iter().zip(&ladder).map(|(l, e)| l / (e * e)).collect(),
        mu: res.iter().map(|r| r.0).collect(),
        eps: ladder,
        l1_eps,
        l11: c[0],
        l12: c.get(1).copied().unwrap_or(f64::NAN),
    })
}

/// Expansion `M^{-1} J M = Id + eps A1 + eps^2 A2 + O(eps^3)` and `M = M0 + eps M1`.
#[derive(Debug, Clone, Serialize)]
pub struct NormalizationExpansion {
    pub eps: Vec<f64>,
    pub a1: [[f64; 2]; 2],
    pub a2: [[f64; 2]; 2],
    pub theta1: f64,
    pub theta2: f64,
    pub m0: [[f64; 2]; 2],
    pub m1: [[f64; 2]; 2],
    pub det_m0: f64,
    pub max_jordan_residual: f64,
}

/// On the curve the normalized linearization is the rotation by `theta_eps`;
/// with `theta_eps = eps theta1 + eps^2 theta2 + ...` this gives
/// `A1 = theta1 [[0, -1], [1, 0]]` and `A2 = [[-theta1^2/2, -theta2], [theta2, -theta1^2/2]]`.
pub fn normalization_expansion(
    sys: &HopfZeroSystem,
    fam: &PerturbationFamily,
    mu0: f64,
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<NormalizationExpansion, AveragingError> {
    let co = AveragedCoefficients::new(sys, fam)?;
    let ladder = vec![eps, eps / 2.0, eps / 4.0];
    let maps: Vec<NormalizedMap> = ladder
        .par_iter()
        .map(|&e| {
            let pt = solve_unit_circle(sys, fam, &co, mu0, e, cfg)?;
            normalize(sys, fam, &pt, cfg)
        })
        .collect::<Result<_, _>>()?;
    let th: Vec<f64> = maps.iter().zip(&ladder).map(|(m, e)| m.theta / e).collect();
    let c = interpolating_poly(&ladder, &th);
    let (t1, t2) = (c[0], c[1]);
    let fit = |i: usize, j: usize| interpolating_poly(&ladder, &maps.iter().map(|m| m.m[i][j]).collect::<Vec<_>>());
    let mut m0 = [[0.0; 2]; 2];
    let mut m1 = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let f = fit(i, j);
            m0[i][j] = f[0];
            m1[i][j] = f[1];
        }
    }
    Ok(NormalizationExpansion {
        eps: ladder,
        a1: [[0.0, -t1], [t1, 0.0]],
        a2: [[-t1 * t1 / 2.0, -t2], [t2, -t1 * t1 / 2.0]],
        theta1: t1,
        theta2: t2,
        det_m0: m0[0][0] * m0[1][1] - m0[0][1] * m0[1][0],
        m0,
        m1,
        max_jordan_residual: maps.iter().map(|m| m.jordan_residual).fold(0.0, f64::max),
    })
}
