use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::criteria::AveragedCoefficients;

use super::melnikov::F1Closed;
use super::AveragingError;

#[derive(Debug, Clone, Serialize)]
pub struct AveragedEquilibrium {
    pub mu: f64,
    pub r: f64,
    pub w: f64,
    pub jacobian: [[f64; 2]; 2],
    /// `eta +- i zeta` from the closed form.
    pub eigenvalues: [[f64; 2]; 2],
    pub eta: f64,
    pub zeta: f64,
    /// Distance between the closed-form pair and a direct 2x2 eigensolve.
    pub eigensolve_discrepancy: f64,
    pub residual: f64,
}

impl AveragedEquilibrium {
    pub fn lambda_plus(&self) -> Complex64 {
        Complex64::new(self.eigenvalues[0][0], self.eigenvalues[0][1])
    }
}

pub fn eig2(j: &[[f64; 2]; 2]) -> [Complex64; 2] {
    let half = 0.5 * (j[0][0] + j[1][1]);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = Complex64::new(half * half - det, 0.0).sqrt();
    [half + disc, half - disc]
}

pub fn averaged_equilibrium(co: &AveragedCoefficients, omega: f64, mu: f64) -> Result<AveragedEquilibrium, AveragingError> {
    let f = F1Closed::new(co, mu);
    let w = co.w_mu(mu);
    let r2 = co.r_mu_squared(mu);
    if !(r2 > 0.0) {
        return Err(AveragingError::GammaNonNegative { mu });
    }
    let mut r = r2.sqrt();
    for _ in 0..50 {
        let g = f.eval(r, w)[1];
        if g.abs() <= 1e-12 {
            break;
        }
        let dg = PI * f.sigma * r;
        r -= g / dg;
        if !r.is_finite() || r <= 0.0 {
            return Err(AveragingError::NewtonDiverged { what: "averaged equilibrium" });
        }
    }
    let v = f.eval(r, w);
    let residual = v[0].abs().max(v[1].abs());
    if residual > 1e-10 {
        return Err(AveragingError::NewtonDiverged { what: "averaged equilibrium" });
    }
    let jac = f.jacobian(r, w);
    let eta = co.eta(mu);
    let disc = eta * eta - PI * PI * omega * r * r;
    if disc >= 0.0 {
        return Err(AveragingError::ComplexPairLost { mu });
    }
    let zeta = (-disc).sqrt();
    let direct = eig2(&jac);
    let (hi, lo) = if direct[0].im >= direct[1].im { (direct[0], direct[1]) } else { (direct[1], direct[0]) };
    let d = (hi - Complex64::new(eta, zeta)).norm().max((lo - Complex64::new(eta, -zeta)).norm());
    Ok(AveragedEquilibrium {
        mu,
        r,
        w,
        jacobian: jac,
        eigenvalues: [[eta, zeta], [eta, -zeta]],
        eta,
        zeta,
        eigensolve_discrepancy: d,
        residual,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisOutcome {
    pub holds: bool,
    pub detail: String,
}

impl HypothesisOutcome {
    fn ok(detail: String) -> Self {
        HypothesisOutcome { holds: true, detail }
    }
    fn fail(detail: String) -> Self {
        HypothesisOutcome { holds: false, detail }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HtndReport {
    pub hopf: HypothesisOutcome,
    pub transversality: HypothesisOutcome,
    pub nondegeneracy: HypothesisOutcome,
    pub omega0: Option<f64>,
    pub alpha_d: f64,
    /// First index `j` with `l_{1,j}` nonzero.
    pub j_star: Option<u8>,
}

impl HtndReport {
    pub fn all_hold(&self) -> bool {
        self.hopf.holds && self.transversality.holds && self.nondegeneracy.holds
    }
}

/// Relative size below which a numerically estimated `l_{1,j}` counts as zero.
pub const ND_ZERO_TOL: f64 = 1e-4;

/// Checks the Hopf, transversality and non-degeneracy hypotheses along `J`.
pub fn hypothesis_check(
    co: &AveragedCoefficients,
    omega: f64,
    interval: [f64; 2],
    mu0: f64,
    alpha_d: f64,
    l1j: Option<[f64; 2]>,
) -> HtndReport {
    let samples = 33;
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..samples {
        let mu = interval[0] + (interval[1] - interval[0]) * i as f64 / (samples - 1) as f64;
        match averaged_equilibrium(co, omega, mu) {
            Ok(eq) => worst = worst.max(eq.residual),
            Err(e) => failures.push(format!("mu = {mu}: {e}")),
        }
    }
    let at0 = averaged_equilibrium(co, omega, mu0);
    let hopf = match (&at0, failures.is_empty()) {
        (Ok(eq), true) if eq.eta.abs() <= 1e-9 && eq.zeta > 0.0 => HypothesisOutcome::ok(format!(
            "f1 residual <= {worst:e} along J; eta(mu0) = {:e}; zeta(mu0) = omega0 = {}",
            eq.eta, eq.zeta
        )),
        (Ok(eq), true) => HypothesisOutcome::fail(format!("eta(mu0) = {}, zeta(mu0) = {}", eq.eta, eq.zeta)),
        (Err(e), _) => HypothesisOutcome::fail(format!("at mu0 = {mu0}: {e}")),
        (Ok(_), false) => HypothesisOutcome::fail(failures.join("; ")),
    };
    let transversality = if alpha_d.abs() > 1e-10 {
        HypothesisOutcome::ok(format!("alpha_d = {alpha_d}"))
    } else {
        HypothesisOutcome::fail(format!("alpha_d = {alpha_d}"))
    };
    let (nondegeneracy, j_star) = match l1j {
        None => (HypothesisOutcome::fail("Lyapunov coefficients not available".into()), None),
        Some([a, b]) => {
            let scale = a.abs().max(b.abs());
            if scale == 0.0 || !scale.is_finite() {
                (HypothesisOutcome::fail(format!("l11 = {a}, l12 = {b}")), None)
            } else if a.abs() > ND_ZERO_TOL * scale.max(1.0) {
                (HypothesisOutcome::ok(format!("l11 = {a}")), Some(1))
            } else {
                (HypothesisOutcome::ok(format!("l11 = {a} (treated as 0), l12 = {b}")), Some(2))
            }
        }
    };
    HtndReport {
        hopf,
        transversality,
        nondegeneracy,
        omega0: at0.ok().map(|e| e.zeta),
        alpha_d,
        j_star,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{HopfZeroSystem, PerturbationFamily};

    #[test]
    fn example_equilibria() {
        let s = HopfZeroSystem::parse("0", "y*z", "-x^2 + x*y + z^2").unwrap();
        let fam = PerturbationFamily::simple(1);
        let co = AveragedCoefficients::new(&s, &fam).unwrap();
        let e0 = averaged_equilibrium(&co, 2.0, 0.0).unwrap();
        assert!((e0.r - 2f64.sqrt()).abs() < 1e-15 && e0.w == 0.0);
        assert!(e0.eta.abs() < 1e-15 && (e0.zeta - 2.0 * PI).abs() < 1e-12);
        let e1 = averaged_equilibrium(&co, 2.0, 0.1).unwrap();
        let want = PI * (8.0f64 - 0.02).sqrt() / 2f64.sqrt();
        assert!((e1.eta - 0.1 * PI).abs() < 1e-14);
        assert!((e1.zeta - want).abs() < 1e-12);
        assert!(e1.eigensolve_discrepancy < 1e-12);
    }

    #[test]
    fn negative_omega_fails_hopf() {
        let s = HopfZeroSystem::parse("x*z", "y*z", "x^2 + y^2 - z^2").unwrap();
        let fam = PerturbationFamily::simple(-1);
        let co = AveragedCoefficients::new(&s, &fam).unwrap();
        let rep = hypothesis_check(&co, -8.0, [-0.1, 0.1], 0.0, 1.0, Some([0.0, 1.0]));
        assert!(!rep.hopf.holds);
    }
}
