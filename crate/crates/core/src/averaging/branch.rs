use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::{
    simple_case_closed_forms, AveragedCoefficients, BaseCriteria, HopfZeroSystem, PerturbationFamily, SimpleCaseClosedForms,
};
use crate::flow::{theta_return, theta_return_jet, IntegratorConfig, PolyField, TimeDirection};

use super::equilibrium::eig2;
use super::melnikov::{melnikov_pair, MelnikovPair};
use super::standard::to_standard_form;
use super::{interpolating_poly, AveragingError};

pub const DEFAULT_EPS_LADDER: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

#[derive(Debug, Clone, Serialize)]
pub struct MapFixedPoint {
    pub mu: f64,
    pub eps: f64,
    pub xi: [f64; 2],
    pub jacobian: [[f64; 2]; 2],
    /// `|Pi(xi) - xi|`.
    pub residual: f64,
    pub newton_steps: usize,
}

impl MapFixedPoint {
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        eig2(&self.jacobian)
    }

    /// `|lambda|^2 - 1` for a complex pair, i.e. `det J - 1`.
    pub fn modulus_gap(&self) -> f64 {
        let j = &self.jacobian;
        j[0][0] * j[1][1] - j[0][1] * j[1][0] - 1.0
    }
}

/// Seed for the return-map fixed point: the averaged equilibrium `(r_mu, w_mu)`.
pub fn averaged_seed(co: &AveragedCoefficients, mu: f64) -> Result<[f64; 2], AveragingError> {
    let r2 = co.r_mu_squared(mu);
    if !(r2 > 0.0) {
        return Err(AveragingError::GammaNonNegative { mu });
    }
    Ok([r2.sqrt(), co.w_mu(mu)])
}

/// Newton on `Pi(x) - x` for the angular return map of the rescaled field.
pub fn map_fixed_point(
    sys: &HopfZeroSystem,
    fam: &PerturbationFamily,
    mu: f64,
    eps: f64,
    seed: [f64; 2],
    cfg: &IntegratorConfig,
) -> Result<MapFixedPoint, AveragingError> {
    let field = PolyField::rescaled(sys, fam, mu, eps);
    let id = [[1.0, 0.0], [0.0, 1.0]];
    if eps == 0.0 {
        return Ok(MapFixedPoint {
            mu,
            eps,
            xi: seed,
            jacobian: id,
            residual: 0.0,
            newton_steps: 0,
        });
    }
    let mut x = seed;
    for step in 0..40 {
        let h = theta_return_jet(&field, x, id, TimeDirection::Forward, cfg)?;
        let f = [h[0].coeff(0, 0) - x[0], h[1].coeff(0, 0) - x[1]];
        let j = [[h[0].coeff(1, 0), h[0].coeff(0, 1)], [h[1].coeff(1, 0), h[1].coeff(0, 1)]];
        let a = [[j[0][0] - 1.0, j[0][1]], [j[1][0], j[1][1] - 1.0]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(AveragingError::NewtonDiverged { what: "return-map fixed point" });
        }
        let dx = [
            -(a[1][1] * f[0] - a[0][1] * f[1]) / det,
            -(-a[1][0] * f[0] + a[0][0] * f[1]) / det,
        ];
        let res = f[0].hypot(f[1]);
        let small = dx[0].hypot(dx[1]) <= 1e-14 * (1.0 + x[0].hypot(x[1]));
        if res <= 1e-13 || small {
            return Ok(MapFixedPoint {
                mu,
                eps,
                xi: x,
                jacobian: j,
                residual: res,
                newton_steps: step,
            });
        }
        x = [x[0] + dx[0], x[1] + dx[1]];
        if !(x[0] > 0.0) || !x[1].is_finite() {
            return Err(AveragingError::NewtonDiverged { what: "return-map fixed point" });
        }
    }
    Err(AveragingError::NewtonDiverged { what: "return-map fixed point" })
}

/// A point of the Neimark–Sacker curve `mu(eps)`.
#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub eps: f64,
    pub mu: f64,
    pub fixed: MapFixedPoint,
    /// `||lambda| - 1|` at the solution.
    pub modulus_residual: f64,
    /// Rotation angle of the normalized linearization, in `(0, pi)`.
    pub theta: f64,
}

/// Solves `|lambda(mu, eps)| = 1` near `mu0` by the secant method.
pub fn solve_unit_circle(
    sys: &HopfZeroSystem,
    fam: &PerturbationFamily,
    co: &AveragedCoefficients,
    mu0: f64,
    eps: f64,
    cfg: &IntegratorConfig,
) -> Result<CurvePoint, AveragingError> {
    if eps == 0.0 {
        return Err(AveragingError::ZeroEps);
    }
    let eval = |mu: f64| -> Result<MapFixedPoint, AveragingError> {
        let seed = averaged_seed(co, mu)?;
        map_fixed_point(sys, fam, mu, eps, seed, cfg)
    };
    let not_found = AveragingError::UnitCircleCrossingNotFound { eps };
    let (mut a, mut b) = (mu0, mu0 + eps);
    let mut fa = eval(a)?;
    let mut fb = eval(b)?;
    let mut found = None;
    for _ in 0..60 {
        let (ga, gb) = (fa.modulus_gap(), fb.modulus_gap());
        if gb.abs() <= 1e-14 || (b - a).abs() <= 1e-16 * (1.0 + b.abs()) {
            found = Some(fb);
            break;
        }
        if gb == ga {
            break;
        }
        let c = b - gb * (b - a) / (gb - ga);
        if !c.is_finite() || (c - mu0).abs() > 100.0 * eps.abs().max(1e-3) {
            break;
        }
        a = b;
        fa = fb;
        b = c;
        fb = eval(b)?;
    }
    let fp = found.ok_or(not_found.clone())?;
    let ev = fp.eigenvalues();
    if ev[0].im == 0.0 {
        return Err(not_found);
    }
    let modulus = ev[0].norm();
    Ok(CurvePoint {
        eps,
        mu: fp.mu,
        theta: ev[0].im.abs().atan2(ev[0].re),
        modulus_residual: (modulus - 1.0).abs(),
        fixed: fp,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NsBranch {
    pub mu0: f64,
    pub curve: Vec<CurvePoint>,
    /// `(mu(eps) - mu0)/eps` on the ladder.
    pub slopes: Vec<f64>,
    pub mu1: f64,
    /// Fixed-point slices `(xi1, xi2)` at `mu0`, extrapolated from the ladder.
    pub xi_slices: [f64; 2],
    /// Same slices predicted from `f1 + eps f2 = 0`.
    pub xi_slices_from_f2: Option<[f64; 2]>,
    pub closed_forms: Option<SimpleCaseClosedForms>,
}

pub struct BranchConfig {
    pub eps_ladder: Vec<f64>,
    pub integrator: IntegratorConfig,
}

impl Default for BranchConfig {
    fn default() -> Self {
        BranchConfig {
            eps_ladder: DEFAULT_EPS_LADDER.to_vec(),
            integrator: IntegratorConfig::tight(),
        }
    }
}

/// `(xi(mu, eps) - x_mu)/eps` extrapolated to `eps = 0` along a ladder.
pub fn xi_slices(
    sys: &HopfZeroSystem,
    fam: &PerturbationFamily,
    co: &AveragedCoefficients,
    mu: f64,
    ladder: &[f64],
    cfg: &IntegratorConfig,
) -> Result<[f64; 2], AveragingError> {
    let seed = averaged_seed(co, mu)?;
    let pts: Vec<MapFixedPoint> = ladder
        .par_iter()
        .map(|&e| map_fixed_point(sys, fam, mu, e, seed, cfg))
        .collect::<Result<_, _>>()?;
    let comp = |k: usize| {
        let v: Vec<f64> = pts.iter().map(|p| (p.xi[k] - seed[k]) / p.eps).collect();
        interpolating_poly(ladder, &v)[0]
    };
    Ok([comp(0), comp(1)])
}

/// First-order fixed-point shift `-Df1^{-1} f2` at the averaged equilibrium.
pub fn xi_slices_from_melnikov(mel: &MelnikovPair, x: [f64; 2]) -> Result<[f64; 2], AveragingError> {
    let f2 = mel.f2(x[0], x[1])?;
    let j = mel.f1_jacobian(x[0], x[1]);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    Ok([-(j[1][1] * f2[0] - j[0][1] * f2[1]) / det, -(-j[1][0] * f2[0] + j[0][0] * f2[1]) / det])
}

pub fn branch_continuation(
    sys: &HopfZeroSystem,
    fam: &PerturbationFamily,
    base: &BaseCriteria,
    mu0: f64,
    bc: &BranchConfig,
) -> Result<NsBranch, AveragingError> {
    let co = AveragedCoefficients::new(sys, fam)?;
    let curve: Vec<CurvePoint> = bc
        .eps_ladder
        .par_iter()
        .map(|&e| solve_unit_circle(sys, fam, &co, mu0, e, &bc.integrator))
        .collect::<Result<_, _>>()?;
    let slopes: Vec<f64> = curve.iter().map(|c| (c.mu - mu0) / c.eps).collect();
    let mu1 = interpolating_poly(&bc.eps_ladder, &slopes)[0];
    let xi = xi_slices(sys, fam, &co, mu0, &bc.eps_ladder, &bc.integrator)?;
    let seed = averaged_seed(&co, mu0)?;
    let from_f2 = to_standard_form(sys, fam, mu0, 0.5 * seed[0], 2.0 * seed[0] + 1.0)
        .ok()
        .map(|s| melnikov_pair(s, &co))
        .and_then(|m| xi_slices_from_melnikov(&m, seed).ok());
    let closed = fam.simple_case.then(|| simple_case_closed_forms(sys, base, mu0));
    Ok(NsBranch {
        mu0,
        curve,
        slopes,
        mu1,
        xi_slices: xi,
        xi_slices_from_f2: from_f2,
        closed_forms: closed,
    })
}

/// Plain angular return map of the rescaled field.
pub fn return_map(field: &PolyField, x: [f64; 2], cfg: &IntegratorConfig) -> Result<[f64; 2], AveragingError> {
    Ok(theta_return(field, x, TimeDirection::Forward, cfg)?.0)
}
