//! Invariant-circle certification for the return map of the rescaled field.

mod fit;
mod rotation;

pub use fit::*;
pub use rotation::*;

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::averaging::{averaged_seed, lyapunov_coefficient_map, map_fixed_point, normalize, CurvePoint, MapFixedPoint};
use crate::criteria::{AveragedCoefficients, HopfZeroSystem, PerturbationFamily};
use crate::flow::{fmt17, theta_return, theta_return_jet, IntegratorConfig, PolyField, TimeDirection};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TorusError {
    #[error("eps = 0 makes the bifurcation parameter degenerate")]
    ZeroEps,
    #[error("return-map fixed point not found: {0}")]
    FixedPointNotFound(String),
    #[error("every seed left the domain in both time directions")]
    IterationEscaped,
    #[error("orbit is not a graph over the angle: {reason}")]
    NonMonotoneLift { reason: String },
    #[error("rotation number needs {need} iterates, got {got}")]
    TooFewIterates { got: usize, need: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    TorusFound,
    NoTorus,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Attracting,
    Repelling,
}

#[derive(Debug, Clone)]
pub struct TorusConfig {
    pub seeds: usize,
    /// Iterates always discarded before a seed may count as settled.
    pub transient: usize,
    /// Hard cap on discarded iterates per seed.
    pub max_transient: usize,
    pub window: usize,
    /// Length of the blocks used for the settling test.
    pub block: usize,
    /// Relative RMS scatter of a block below which a seed has settled.
    pub settle_tol: f64,
    pub max_harmonics: usize,
    /// Consecutive orbit points used for the contraction estimate.
    pub kappa_samples: usize,
    pub integrator: IntegratorConfig,
}

impl Default for TorusConfig {
    fn default() -> Self {
        TorusConfig {
            seeds: 32,
            transient: 500,
            max_transient: 20_000,
            window: 2048,
            block: 256,
            settle_tol: 1e-5,
            max_harmonics: 32,
            kappa_samples: 512,
            integrator: IntegratorConfig::default(),
        }
    }
}

impl TorusConfig {
    pub fn doubled(&self) -> Self {
        TorusConfig {
            transient: 2 * self.transient,
            max_transient: 2 * self.max_transient,
            window: 2 * self.window,
            ..self.clone()
        }
    }
}

/// Residual bound for a `torus_found` verdict, relative to the mean radius.
pub const RESIDUAL_BOUND: f64 = 1e-3;
/// Minimal `|kappa - 1|` for a normal-hyperbolicity claim.
pub const KAPPA_GAP: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct DirectionAttempt {
    pub direction: TimeDirection,
    pub settled: usize,
    pub collapsed: usize,
    pub escaped: usize,
    pub unsettled: usize,
    /// Largest number of iterates any seed needed.
    pub iterates: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TorusCertificate {
    pub mu: f64,
    pub eps: f64,
    pub verdict: Verdict,
    pub fixed_point: [f64; 2],
    pub fixed_point_eigenvalues: [[f64; 2]; 2],
    /// Direction the stability statement asks for (`Reversed` when `l_{1,j*} < 0`).
    pub literal_direction: TimeDirection,
    /// Direction in which the curve was actually obtained.
    pub direction: Option<TimeDirection>,
    pub attempts: Vec<DirectionAttempt>,
    /// `(mu - mu(eps)) l_{1,j*} < 0`, when the branch value was supplied.
    pub regime_predicts_torus: Option<bool>,
    pub seed_radius: f64,
    pub curve: Vec<[f64; 2]>,
    pub fit: Option<FourierFit>,
    pub mean_radius: Option<f64>,
    pub relative_residual: Option<f64>,
    pub winding_number: Option<i64>,
    pub encloses_fixed_point: Option<bool>,
    pub rotation: Option<RotationEstimate>,
    /// `sign(J10) arg(lambda) / 2 pi` from the linearization at the fixed point.
    pub rotation_linear: f64,
    /// Weighted geometric mean of `det DPi` along the curve orbit, forward time.
    pub kappa_forward: Option<f64>,
    pub kappa_reversed: Option<f64>,
    pub normally_hyperbolic: Option<bool>,
    pub observed_stability: Option<Stability>,
    pub stated_stability: Stability,
    pub notes: Vec<String>,
}

enum SeedRun {
    Settled { block: Vec<[f64; 2]>, last: [f64; 2], iterates: usize },
    Collapsed(usize),
    Escaped(usize),
    Unsettled(usize),
}

struct Ring {
    xi: [f64; 2],
    inner: f64,
    outer: f64,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn run_seed(field: &PolyField, dir: TimeDirection, x0: [f64; 2], ring: &Ring, cfg: &TorusConfig) -> SeedRun {
    let mut x = x0;
    let mut buf = Vec::with_capacity(cfg.block);
    let mut prev: Option<FourierFit> = None;
    for n in 1..=cfg.max_transient {
        x = match theta_return(field, x, dir, &cfg.integrator) {
            Ok((p, _)) => p,
            Err(_) => return SeedRun::Escaped(n),
        };
        let d = dist(x, ring.xi);
        if !(x[0] > 0.0) || !(d < ring.outer) {
            return SeedRun::Escaped(n);
        }
        if d < ring.inner {
            return SeedRun::Collapsed(n);
        }
        if n > cfg.transient {
            buf.push(x);
            if buf.len() == cfg.block {
                // a slowly contracting spiral fits one block well, so also
                // require the block to lie on the previous block's curve
                let f = fit_fixed(&buf, ring.xi, cfg.max_harmonics);
                let tol = |f: &FourierFit| cfg.settle_tol * f.a0;
                let smooth = f.as_ref().is_some_and(|f| f.rms_residual <= tol(f));
                let steady = prev.as_ref().is_some_and(|p| p.rms_distance(&buf) <= tol(p));
                if smooth && steady {
                    return SeedRun::Settled { block: buf, last: x, iterates: n };
                }
                prev = f;
                buf.clear();
            }
        }
    }
    SeedRun::Unsettled(cfg.max_transient)
}

fn orbit(field: &PolyField, dir: TimeDirection, x0: [f64; 2], n: usize, cfg: &IntegratorConfig) -> Option<Vec<[f64; 2]>> {
    let mut out = Vec::with_capacity(n);
    let mut x = x0;
    for _ in 0..n {
        x = theta_return(field, x, dir, cfg).ok()?.0;
        out.push(x);
    }
    Some(out)
}

/// `exp` of the Birkhoff-weighted mean of `log |det DPi|` over consecutive orbit points.
fn contraction(field: &PolyField, pts: &[[f64; 2]], dir: TimeDirection, cfg: &IntegratorConfig) -> Option<f64> {
    let id = [[1.0, 0.0], [0.0, 1.0]];
    let logs: Vec<f64> = pts
        .par_iter()
        .map(|&p| {
            let h = theta_return_jet(field, p, id, dir, cfg).ok()?;
            let det = h[0].coeff(1, 0) * h[1].coeff(0, 1) - h[0].coeff(0, 1) * h[1].coeff(1, 0);
            Some(det.abs().ln())
        })
        .collect::<Option<_>>()?;
    Some(rotation::weighted_mean(&logs).exp())
}

/// Ring of seeds around the fixed point, shaped by the normalizing matrix and
/// placed at half the normal-form circle radius `sqrt(2 ||lambda| - 1| / |l1|)`
/// so that every seed starts inside the predicted curve.
fn seed_ring(
    sys: &HopfZeroSystem,
    fam: &PerturbationFamily,
    fp: &MapFixedPoint,
    cfg: &TorusConfig,
) -> (Vec<[f64; 2]>, f64) {
    let ev = fp.eigenvalues();
    let scale = fp.xi[0].hypot(fp.xi[1]).max(1e-3);
    let point = CurvePoint {
        eps: fp.eps,
        mu: fp.mu,
        fixed: fp.clone(),
        modulus_residual: (ev[0].norm() - 1.0).abs(),
        theta: ev[0].im.abs().atan2(ev[0].re),
    };
    let shaped = normalize(sys, fam, &point, &cfg.integrator).ok().and_then(|nm| {
        let l1 = lyapunov_coefficient_map(&nm).ok()?;
        let rho = std::f64::consts::SQRT_2 * ((ev[0].norm() - 1.0).abs() / l1.abs()).sqrt();
        rho.is_finite().then_some((nm.m, (0.5 * rho).clamp(1e-4 * scale, 0.25 * scale)))
    });
    let (m, rho) = shaped.unwrap_or(([[1.0, 0.0], [0.0, 1.0]], 0.05 * scale));
    let pts = (0..cfg.seeds)
        .map(|k| {
            let (s, c) = (2.0 * std::f64::consts::PI * k as f64 / cfg.seeds as f64).sin_cos();
            let u = [rho * c, rho * s];
            [fp.xi[0] + m[0][0] * u[0] + m[0][1] * u[1], fp.xi[1] + m[1][0] * u[0] + m[1][1] * u[1]]
        })
        .collect();
    (pts, rho)
}

/// Iterates the return map from a ring of seeds, trying the literal stability
/// direction first, and certifies the invariant circle the seeds settle on.
pub fn certify_torus(
    sys: &HopfZeroSystem,
    fam: &PerturbationFamily,
    mu: f64,
    eps: f64,
    l1_jstar: f64,
    mu_curve: Option<f64>,
    cfg: &TorusConfig,
) -> Result<TorusCertificate, TorusError> {
    if eps == 0.0 {
        return Err(TorusError::ZeroEps);
    }
    let co = AveragedCoefficients::new(sys, fam).map_err(|e| TorusError::FixedPointNotFound(e.to_string()))?;
    let seed = averaged_seed(&co, mu).map_err(|e| TorusError::FixedPointNotFound(e.to_string()))?;
    let fp = map_fixed_point(sys, fam, mu, eps, seed, &cfg.integrator).map_err(|e| TorusError::FixedPointNotFound(e.to_string()))?;
    let xi = fp.xi;
    let ev = fp.eigenvalues();
    let j = fp.jacobian;
    let lam = if ev[0].im >= 0.0 { ev[0] } else { ev[1] };
    let rotation_linear = j[1][0].signum() * lam.arg() / (2.0 * std::f64::consts::PI);
    let field = PolyField::rescaled(sys, fam, mu, eps);

    let stated_stability = if l1_jstar > 0.0 { Stability::Attracting } else { Stability::Repelling };
    let literal = if l1_jstar < 0.0 { TimeDirection::Reversed } else { TimeDirection::Forward };
    let (seeds, seed_radius) = seed_ring(sys, fam, &fp, cfg);
    let ds: Vec<f64> = seeds.iter().map(|s| dist(*s, xi)).collect();
    let ring = Ring {
        xi,
        inner: 0.02 * ds.iter().cloned().fold(f64::INFINITY, f64::min),
        outer: 10.0 * ds.iter().cloned().fold(0.0, f64::max),
    };

    let mut notes = Vec::new();
    let mut attempts = Vec::new();
    let mut found = None;
    for dir in [literal, literal.flip()] {
        let runs: Vec<SeedRun> = seeds.par_iter().map(|&s| run_seed(&field, dir, s, &ring, cfg)).collect();
        let mut att = DirectionAttempt { direction: dir, settled: 0, collapsed: 0, escaped: 0, unsettled: 0, iterates: 0 };
        let mut blocks = Vec::new();
        let mut primary = None;
        for r in runs {
            match r {
                SeedRun::Settled { block, last, iterates } => {
                    att.settled += 1;
                    att.iterates = att.iterates.max(iterates);
                    primary.get_or_insert(last);
                    blocks.extend(block);
                }
                SeedRun::Collapsed(n) => {
                    att.collapsed += 1;
                    att.iterates = att.iterates.max(n);
                }
                SeedRun::Escaped(n) => {
                    att.escaped += 1;
                    att.iterates = att.iterates.max(n);
                }
                SeedRun::Unsettled(n) => {
                    att.unsettled += 1;
                    att.iterates = att.iterates.max(n);
                }
            }
        }
        let usable = 2 * att.settled >= cfg.seeds;
        attempts.push(att);
        if usable {
            found = Some((dir, primary.unwrap_or(xi), blocks));
            break;
        }
    }

    let stated = match literal {
        TimeDirection::Reversed => "reversed",
        TimeDirection::Forward => "forward",
    };
    let mut cert = TorusCertificate {
        mu,
        eps,
        verdict: Verdict::Inconclusive,
        fixed_point: xi,
        fixed_point_eigenvalues: [[ev[0].re, ev[0].im], [ev[1].re, ev[1].im]],
        literal_direction: literal,
        direction: None,
        attempts,
        regime_predicts_torus: mu_curve.map(|mc| (mu - mc) * l1_jstar < 0.0),
        seed_radius,
        curve: Vec::new(),
        fit: None,
        mean_radius: None,
        relative_residual: None,
        winding_number: None,
        encloses_fixed_point: None,
        rotation: None,
        rotation_linear,
        kappa_forward: None,
        kappa_reversed: None,
        normally_hyperbolic: None,
        observed_stability: None,
        stated_stability,
        notes: Vec::new(),
    };

    let Some((dir, start, mut pts)) = found else {
        let any_collapse = cert.attempts.iter().any(|a| a.collapsed > 0 && a.settled == 0 && a.unsettled == 0);
        let all_escape = cert.attempts.iter().all(|a| a.escaped == cfg.seeds);
        if all_escape {
            return Err(TorusError::IterationEscaped);
        }
        if any_collapse {
            cert.verdict = Verdict::NoTorus;
            let att = cert.attempts.iter().find(|a| a.collapsed > 0).map(|a| a.direction);
            notes.push(format!("seeds spiral into the fixed point in {} time; no invariant circle", dir_name(att)));
        } else {
            notes.push("seeds neither settled on a curve nor converged to the fixed point".into());
        }
        cert.notes = notes;
        return Ok(cert);
    };
    if dir != literal {
        notes.push(format!(
            "{stated}-time iteration did not settle on a curve; circle obtained in {} time",
            dir_name(Some(dir))
        ));
    }
    cert.direction = Some(dir);

    let Some(window) = orbit(&field, dir, start, cfg.window, &cfg.integrator) else {
        notes.push("certification window left the domain".into());
        cert.notes = notes;
        return Ok(cert);
    };
    pts.extend_from_slice(&window);
    let n = pts.len() as f64;
    let centroid = [pts.iter().map(|p| p[0]).sum::<f64>() / n, pts.iter().map(|p| p[1]).sum::<f64>() / n];
    // polar graph about the fixed point or the centroid, whichever the orbit
    // is monotone around and fits better
    let candidates: Vec<(FourierFit, Result<RotationEstimate, TorusError>)> = [xi, centroid]
        .into_iter()
        .filter_map(|c| Some((fit_adaptive(&pts, c, cfg.max_harmonics)?, rotation_number(&window, c))))
        .collect();
    let best = (0..candidates.len()).min_by(|&a, &b| {
        let key = |i: usize| (candidates[i].1.is_err(), candidates[i].0.rms_residual / candidates[i].0.a0);
        key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
    });
    let (fit, rot) = match best {
        Some(i) => {
            let (f, r) = candidates.into_iter().nth(i).expect("index from the same list");
            (Some(f), r)
        }
        None => (None, rotation_number(&window, xi)),
    };
    if let Some(f) = &fit {
        let poly = f.sample(1024);
        cert.mean_radius = Some(f.mean_radius());
        cert.relative_residual = Some(f.rms_residual / f.mean_radius());
        cert.winding_number = Some(winding_number(&poly, xi));
        cert.encloses_fixed_point = Some(point_in_polygon(&poly, xi));
    }
    match rot {
        Ok(r) => cert.rotation = Some(r),
        Err(e) => notes.push(format!("rotation number: {e}")),
    }
    let sample = &window[..cfg.kappa_samples.clamp(1, window.len())];
    cert.kappa_forward = contraction(&field, sample, TimeDirection::Forward, &cfg.integrator);
    cert.kappa_reversed = contraction(&field, sample, TimeDirection::Reversed, &cfg.integrator);
    if let Some(kf) = cert.kappa_forward {
        let k = if dir == TimeDirection::Forward { Some(kf) } else { cert.kappa_reversed };
        cert.normally_hyperbolic = k.map(|k| (k - 1.0).abs() >= KAPPA_GAP);
        cert.observed_stability = Some(if kf < 1.0 { Stability::Attracting } else { Stability::Repelling });
        if cert.observed_stability != Some(stated_stability) {
            notes.push(format!("observed forward-time stability differs from the stated one (kappa_forward = {kf})"));
        }
        if cert.normally_hyperbolic == Some(false) {
            notes.push(format!("|kappa - 1| < {KAPPA_GAP}: no normal-hyperbolicity claim at this eps"));
        }
    }
    let ok = cert.relative_residual.is_some_and(|r| r <= RESIDUAL_BOUND)
        && cert.winding_number.is_some_and(|w| w.abs() == 1)
        && cert.encloses_fixed_point == Some(true)
        && cert.rotation.is_some();
    cert.verdict = if ok { Verdict::TorusFound } else { Verdict::Inconclusive };
    cert.curve = window;
    cert.fit = fit;
    cert.notes = notes;
    Ok(cert)
}

fn dir_name(d: Option<TimeDirection>) -> &'static str {
    match d {
        Some(TimeDirection::Reversed) => "reversed",
        _ => "forward",
    }
}

/// Curve samples as `n,r,w`.
pub fn write_curve_csv<W: Write>(out: W, cert: &TorusCertificate) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "r", "w"])?;
    for (i, p) in cert.curve.iter().enumerate() {
        w.write_record([i.to_string(), fmt17(p[0]), fmt17(p[1])])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_eps_is_rejected() {
        let s = HopfZeroSystem::parse("0", "y*z", "-x^2 + x*y + z^2").unwrap();
        let f = PerturbationFamily::simple(1);
        let e = certify_torus(&s, &f, 0.05, 0.0, -1.0, None, &TorusConfig::default()).unwrap_err();
        assert_eq!(e, TorusError::ZeroEps);
    }
}
