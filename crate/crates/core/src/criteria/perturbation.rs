use serde::Serialize;
use thiserror::Error;

use super::base::{divergence_sum, laplacian_sum};
use super::system::{HopfZeroSystem, PerturbationFamily, SystemError};
use crate::expr::rat_to_f64;

pub const SCAN_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerturbationError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("P^(1,0,1) + Q^(0,1,1) = 0")]
    ZeroDivergence,
    #[error("R^(2,0,0) + R^(0,2,0) = 0")]
    ZeroLaplacian,
    #[error("invalid interval [{lo}, {hi}]")]
    BadInterval { lo: f64, hi: f64 },
    #[error("eta has no sign change on [{lo}, {hi}]")]
    NoRootInInterval { lo: f64, hi: f64 },
    #[error("Gamma_criterion >= 0 on the whole scan of [{lo}, {hi}]")]
    GammaNonNegative { lo: f64, hi: f64 },
    #[error("transversality fails: |eta'(mu0)| = {alpha} < 1e-10")]
    DegenerateTransversality { alpha: f64 },
}

/// Coefficient functions of the averaged first-order system in `mu`.
#[derive(Debug, Clone)]
pub struct AveragedCoefficients<'a> {
    pub fam: &'a PerturbationFamily,
    pub d: f64,
    pub sigma: f64,
    pub r002: f64,
}

impl<'a> AveragedCoefficients<'a> {
    pub fn new(sys: &HopfZeroSystem, fam: &'a PerturbationFamily) -> Result<Self, PerturbationError> {
        let d = rat_to_f64(&divergence_sum(sys));
        let sigma = rat_to_f64(&laplacian_sum(sys));
        if d == 0.0 {
            return Err(PerturbationError::ZeroDivergence);
        }
        if sigma == 0.0 {
            return Err(PerturbationError::ZeroLaplacian);
        }
        Ok(AveragedCoefficients {
            fam,
            d,
            sigma,
            r002: rat_to_f64(sys.r(0, 0, 2)),
        })
    }

    pub fn w_mu(&self, mu: f64) -> f64 {
        -self.fam.s(mu) / self.d
    }

    /// `r_mu^2` from `f1^2(r, w_mu) = 0`.
    pub fn r_mu_squared(&self, mu: f64) -> f64 {
        let w = self.w_mu(mu);
        -(2.0 * self.r002 * w * w + 4.0 * self.fam.w1z(mu) * w + 4.0 * self.fam.w2_origin(mu)) / self.sigma
    }

    /// `-r_mu^2`, the value the criterion must keep negative.
    pub fn gamma_criterion(&self, mu: f64) -> f64 {
        -self.r_mu_squared(mu)
    }

    /// The published expression for the same quantity.
    pub fn gamma_printed(&self, mu: f64) -> f64 {
        let s = self.fam.s(mu);
        let w1 = self.fam.w1z(mu);
        (2.0 * self.r002 * s * s - w1 * s) / (self.sigma * self.d * self.d) + 4.0 * self.fam.w2_origin(mu) / self.sigma
    }

    pub fn eta(&self, mu: f64) -> f64 {
        std::f64::consts::PI * (self.d * self.fam.w1z(mu) - self.r002 * self.fam.s(mu)) / self.d
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaRoot {
    pub mu0: f64,
    pub alpha_d: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationCriteria {
    pub interval: [f64; 2],
    pub roots: Vec<EtaRoot>,
    /// Index into `roots` of the root with largest `|alpha_d|`.
    pub default_root: usize,
    pub mu0: f64,
    pub alpha_d: f64,
    pub gamma_criterion_at_mu0: f64,
    pub gamma_printed_at_mu0: f64,
    pub gamma_discrepancy_at_mu0: f64,
    pub r_mu0: f64,
    pub w_mu0: f64,
    /// Scan points where `gamma_criterion >= 0`.
    pub gamma_nonnegative_at: Vec<f64>,
}

impl PerturbationCriteria {
    pub fn gamma_negative_on_interval(&self) -> bool {
        self.gamma_nonnegative_at.is_empty()
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm.abs() <= 1e-12 || (b - a).abs() < 1e-15 * (1.0 + m.abs()) {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

pub fn evaluate_perturbation_criteria(
    sys: &HopfZeroSystem,
    fam: &PerturbationFamily,
    interval: [f64; 2],
) -> Result<PerturbationCriteria, PerturbationError> {
    let [lo, hi] = interval;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(PerturbationError::BadInterval { lo, hi });
    }
    fam.check_origin_slices()?;
    let co = AveragedCoefficients::new(sys, fam)?;
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let etas: Vec<f64> = grid.iter().map(|&m| co.eta(m)).collect();
    let gamma_nonnegative_at: Vec<f64> = grid.iter().copied().filter(|&m| co.gamma_criterion(m) >= 0.0).collect();
    if gamma_nonnegative_at.len() == SCAN_POINTS {
        return Err(PerturbationError::GammaNonNegative { lo, hi });
    }
    if etas.iter().all(|&e| e == 0.0) {
        return Err(PerturbationError::DegenerateTransversality { alpha: 0.0 });
    }

    let mut roots = Vec::new();
    for i in 0..SCAN_POINTS {
        let root = if etas[i] == 0.0 {
            Some(grid[i])
        } else if i + 1 < SCAN_POINTS && etas[i + 1] != 0.0 && (etas[i] < 0.0) != (etas[i + 1] < 0.0) {
            Some(bisect(|m| co.eta(m), grid[i], grid[i + 1]))
        } else {
            None
        };
        if let Some(mu0) = root {
            let h = 1e-6 * mu0.abs().max(1.0);
            let alpha_d = (co.eta(mu0 + h) - co.eta(mu0 - h)) / (2.0 * h);
            roots.push(EtaRoot { mu0, alpha_d });
        }
    }
    if roots.is_empty() {
        return Err(PerturbationError::NoRootInInterval { lo, hi });
    }
    let default_root = (0..roots.len())
        .max_by(|&a, &b| roots[a].alpha_d.abs().total_cmp(&roots[b].alpha_d.abs()))
        .unwrap_or(0);
    let EtaRoot { mu0, alpha_d } = roots[default_root].clone();
    if alpha_d.abs() < 1e-10 {
        return Err(PerturbationError::DegenerateTransversality { alpha: alpha_d.abs() });
    }
    let gc = co.gamma_criterion(mu0);
    let gp = co.gamma_printed(mu0);
    Ok(PerturbationCriteria {
        interval,
        roots,
        default_root,
        mu0,
        alpha_d,
        gamma_criterion_at_mu0: gc,
        gamma_printed_at_mu0: gp,
        gamma_discrepancy_at_mu0: gp - gc,
        r_mu0: if gc < 0.0 { (-gc).sqrt() } else { f64::NAN },
        w_mu0: co.w_mu(mu0),
        gamma_nonnegative_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn example() -> HopfZeroSystem {
        HopfZeroSystem::parse("0", "y*z", "-x^2 + x*y + z^2").unwrap()
    }

    #[test]
    fn simple_case_closed_form() {
        let sys = example();
        let fam = PerturbationFamily::simple(1);
        let c = evaluate_perturbation_criteria(&sys, &fam, [-0.5, 0.7]).unwrap();
        assert!(c.mu0.abs() <= 1e-10);
        assert!((c.alpha_d - PI).abs() <= 1e-8);
        assert_eq!(c.gamma_criterion_at_mu0, -2.0);
        assert_eq!(c.gamma_printed_at_mu0, -2.0);
        assert!((c.r_mu0 - 2f64.sqrt()).abs() < 1e-15);
        assert!(c.gamma_negative_on_interval());
    }

    #[test]
    fn vanishing_numerator_gives_nonnegative_gamma() {
        let sys = example();
        let fam = PerturbationFamily::parse("0", "0", "mu*x*z").unwrap();
        let co = AveragedCoefficients::new(&sys, &fam).unwrap();
        assert_eq!(co.gamma_criterion(0.3), 0.0);
        assert!(matches!(
            evaluate_perturbation_criteria(&sys, &fam, [-1.0, 1.0]),
            Err(PerturbationError::GammaNonNegative { .. })
        ));
    }

    #[test]
    fn printed_gamma_disagrees_when_cross_term_present() {
        let sys = example();
        let fam = PerturbationFamily::parse("x", "0", "z*(mu + 1) + eps").unwrap();
        let co = AveragedCoefficients::new(&sys, &fam).unwrap();
        let (d, s, w1, sigma) = (1.0, 1.0, 1.3, -2.0);
        let expect = w1 * s * (4.0 * d - 1.0) / (sigma * d * d);
        assert!((co.gamma_printed(0.3) - co.gamma_criterion(0.3) - expect).abs() < 1e-14);
    }
}
