//! Averaging to second order: standard form, Melnikov functions, averaged
//! equilibria, the Neimark–Sacker branch of the return map and its normal form.

mod branch;
mod equilibrium;
mod melnikov;
mod normal;
mod order;
mod standard;

pub use branch::*;
pub use equilibrium::*;
pub use melnikov::*;
pub use normal::*;
pub use order::*;
pub use standard::*;

use thiserror::Error;

use crate::criteria::PerturbationError;
use crate::flow::FlowError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AveragingError {
    #[error("invalid radial domain [{r_min}, {r_max}]")]
    Domain { r_min: f64, r_max: f64 },
    #[error("quadrature not converged with {panels} panels")]
    QuadratureNotConverged { panels: usize },
    #[error("Newton iteration diverged ({what})")]
    NewtonDiverged { what: &'static str },
    #[error("Gamma_criterion >= 0 at mu = {mu}: no averaged equilibrium")]
    GammaNonNegative { mu: f64 },
    #[error("eigenvalues of Df1 are real at mu = {mu} (hypothesis H fails)")]
    ComplexPairLost { mu: f64 },
    #[error("|lambda(mu, eps)| = 1 has no solution near mu0 for eps = {eps}")]
    UnitCircleCrossingNotFound { eps: f64 },
    #[error("strong resonance: |exp(i k theta) - 1| < 1e-8 for k = {k}")]
    StrongResonance { k: u32 },
    #[error("eps = 0 makes the bifurcation parameter degenerate")]
    ZeroEps,
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Perturbation(#[from] PerturbationError),
}

/// Coefficients of the polynomial through `(h_k, v_k)`, lowest degree first.
/// With factor-2 ladders this is Richardson extrapolation to `h = 0`.
pub fn interpolating_poly(hs: &[f64], vals: &[f64]) -> Vec<f64> {
    let n = hs.len();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| hs[i].powi(j as i32)).collect();
            row.push(vals[i]);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap_or(col);
        a.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_recovers_quadratic() {
        let c = interpolating_poly(&[0.01, 0.005, 0.0025], &[1.0 + 0.02 - 0.0003, 1.0 + 0.01 - 0.000075, 1.0 + 0.005 - 0.00001875]);
        assert!((c[0] - 1.0).abs() < 1e-12);
        assert!((c[1] - 2.0).abs() < 1e-9);
        assert!((c[2] + 3.0).abs() < 1e-6);
    }
}
