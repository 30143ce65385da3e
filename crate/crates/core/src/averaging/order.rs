use rayon::prelude::*;
use serde::Serialize;

use crate::flow::{theta_return, IntegratorConfig, PolyField, TimeDirection};
use crate::criteria::{HopfZeroSystem, PerturbationFamily};

use super::melnikov::MelnikovPair;
use super::AveragingError;

/// Sup-grid deviations of the numeric return map from its averaged expansion.
#[derive(Debug, Clone, Serialize)]
pub struct OrderCheck {
    pub eps: Vec<f64>,
    /// `sup |(Pi - x)/eps - f1|`.
    pub first: Vec<f64>,
    /// `sup |(Pi - x - eps f1)/eps^2 - f2|`.
    pub second: Vec<f64>,
    pub slope_first: f64,
    pub slope_second: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn order_check(
    sys: &HopfZeroSystem,
    fam: &PerturbationFamily,
    mel: &MelnikovPair,
    grid: &[[f64; 2]],
    eps: &[f64],
    cfg: &IntegratorConfig,
) -> Result<OrderCheck, AveragingError> {
    let mu = mel.std.mu;
    let f: Vec<([f64; 2], [f64; 2])> = grid
        .par_iter()
        .map(|&[r, w]| Ok((mel.f1(r, w), mel.f2(r, w)?)))
        .collect::<Result<_, AveragingError>>()?;
    let mut first = Vec::new();
    let mut second = Vec::new();
    for &e in eps {
        let field = PolyField::rescaled(sys, fam, mu, e);
        let devs: Vec<(f64, f64)> = grid
            .par_iter()
            .zip(&f)
            .map(|(&x, (f1, f2))| {
                let (p, _) = theta_return(&field, x, TimeDirection::Forward, cfg)?;
                let mut d1 = 0.0f64;
                let mut d2 = 0.0f64;
                for k in 0..2 {
                    let disp = p[k] - x[k];
                    d1 = d1.max((disp / e - f1[k]).abs());
                    d2 = d2.max(((disp - e * f1[k]) / (e * e) - f2[k]).abs());
                }
                Ok((d1, d2))
            })
            .collect::<Result<_, AveragingError>>()?;
        first.push(devs.iter().map(|d| d.0).fold(0.0, f64::max));
        second.push(devs.iter().map(|d| d.1).fold(0.0, f64::max));
    }
    Ok(OrderCheck {
        slope_first: loglog_slope(eps, &first),
        slope_second: loglog_slope(eps, &second),
        eps: eps.to_vec(),
        first,
        second,
    })
}

/// `n x n` grid on `[r0, r1] x [w0, w1]`.
pub fn rect_grid(r: [f64; 2], w: [f64; 2], n: usize) -> Vec<[f64; 2]> {
    let at = |a: [f64; 2], i: usize| a[0] + (a[1] - a[0]) * i as f64 / (n - 1).max(1) as f64;
    (0..n).flat_map(|i| (0..n).map(move |j| [at(r, i), at(w, j)])).collect()
}
