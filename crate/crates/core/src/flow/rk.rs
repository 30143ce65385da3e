//! Dormand–Prince 5(4) with Hairer's fourth-order continuous extension.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub atol: f64,
    pub rtol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    pub dense: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            atol: 1e-12,
            rtol: 1e-10,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
            dense: false,
        }
    }
}

impl IntegratorConfig {
    pub fn tight() -> Self {
        IntegratorConfig {
            atol: 1e-14,
            rtol: 1e-13,
            ..Default::default()
        }
    }

    pub fn with_tolerances(atol: f64, rtol: f64) -> Self {
        IntegratorConfig {
            atol,
            rtol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.atol > 0.0 && self.rtol > 0.0 && self.max_step > 0.0) {
            return Err(FlowError::InvalidConfig);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("tolerances and max step must be positive")]
    InvalidConfig,
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },
    #[error("no section crossing within horizon {horizon}")]
    NoReturnWithinHorizon { horizon: f64 },
    #[error("flow tangent to the section (transversal speed {speed:e})")]
    TangencyDetected { speed: f64 },
    #[error("jet transport became unstable at t = {t}")]
    JetTransportUnstable { t: f64 },
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step with its interpolant.
#[derive(Debug, Clone)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    rcont: [Vec<f64>; 5],
}

impl DenseSegment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        (0..r1.len())
            .map(|i| r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i]))))
            .collect()
    }

    /// Time derivative of the interpolant.
    pub fn eval_derivative(&self, t: f64) -> Vec<f64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [_, r2, r3, r4, r5] = &self.rcont;
        (0..r2.len())
            .map(|i| {
                // d/dth of th*(r2 + th1*(r3 + th*(r4 + th1*r5)))
                let inner = r4[i] + th1 * r5[i];
                let mid = r3[i] + th * inner;
                let d_inner = -r5[i];
                let d_mid = inner + th * d_inner;
                let outer = r2[i] + th1 * mid;
                let d_outer = -mid + th1 * d_mid;
                (outer + th * d_outer) / self.h
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub segments: Vec<DenseSegment>,
    pub rejected: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial time")
    }

    /// Dense evaluation; requires the run to have kept segments.
    pub fn at(&self, t: f64) -> Option<Vec<f64>> {
        let seg = self.segments.iter().find(|s| {
            let (a, b) = if s.h > 0.0 { (s.t0, s.t1()) } else { (s.t1(), s.t0) };
            t >= a && t <= b
        })?;
        Some(seg.eval(t))
    }
}

/// Outcome of a step callback: keep going or stop after this step.
pub enum Control {
    Continue,
    Stop,
}

fn error_norm(y0: &[f64], y1: &[f64], err: &[f64], cfg: &IntegratorConfig) -> f64 {
    let n = y0.len() as f64;
    let s: f64 = (0..y0.len())
        .map(|i| {
            let sc = cfg.atol + cfg.rtol * y0[i].abs().max(y1[i].abs());
            (err[i] / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn initial_step<F: FnMut(f64, &[f64], &mut [f64])>(f: &mut F, t0: f64, y0: &[f64], f0: &[f64], dir: f64, cfg: &IntegratorConfig) -> f64 {
    let n = y0.len();
    let sc: Vec<f64> = y0.iter().map(|y| cfg.atol + cfg.rtol * y.abs()).collect();
    let d0 = (y0.iter().zip(&sc).map(|(y, s)| (y / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d1 = (f0.iter().zip(&sc).map(|(y, s)| (y / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(cfg.max_step);
    let y1: Vec<f64> = (0..n).map(|i| y0[i] + dir * h0 * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    f(t0 + dir * h0, &y1, &mut f1);
    let d2 = ((0..n).map(|i| ((f1[i] - f0[i]) / sc[i]).powi(2)).sum::<f64>() / n as f64).sqrt() / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    (100.0 * h0).min(h1).min(cfg.max_step)
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
///
/// `on_step` sees each accepted segment and may stop the run early.
pub fn integrate_with<F, S>(mut f: F, t0: f64, y0: &[f64], t1: f64, cfg: &IntegratorConfig, mut on_step: S) -> Result<Trajectory, FlowError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(&DenseSegment) -> Control,
{
    cfg.validate()?;
    let n = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![y0.to_vec()],
        segments: Vec::new(),
        rejected: 0,
    };
    if span == 0.0 {
        return Ok(traj);
    }
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    f(t, &y, &mut k[0]);
    let mut h = initial_step(&mut f, t0, &y, &k[0].clone(), dir, cfg).min(span);
    let mut ytmp = vec![0.0; n];
    let mut steps = 0usize;
    let mut last_rejected = false;
    loop {
        if steps >= cfg.max_steps {
            return Err(FlowError::TooManySteps { t });
        }
        steps += 1;
        let remaining = (t1 - t).abs();
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(FlowError::StepSizeUnderflow { t });
        }
        let hs = dir * h;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for j in 0..s {
                    acc += hs * A[s][j] * k[j][i];
                }
                ytmp[i] = acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            f(t + C[s] * hs, &ytmp, &mut tail[0]);
        }
        // stage 7 evaluated at y_new (FSAL)
        let ynew = ytmp.clone();
        let errv: Vec<f64> = (0..n).map(|i| hs * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>()).collect();
        let err = error_norm(&y, &ynew, &errv, cfg);
        if !err.is_finite() || ynew.iter().any(|v| !v.is_finite()) {
            if h < 1e-12 {
                return Err(FlowError::NonFiniteState { t });
            }
            h *= 0.1;
            traj.rejected += 1;
            last_rejected = true;
            continue;
        }
        if err <= 1.0 {
            let tnew = if last { t1 } else { t + hs };
            let ydiff: Vec<f64> = (0..n).map(|i| ynew[i] - y[i]).collect();
            let bspl: Vec<f64> = (0..n).map(|i| hs * k[0][i] - ydiff[i]).collect();
            let seg = DenseSegment {
                t0: t,
                h: tnew - t,
                rcont: [
                    y.clone(),
                    ydiff.clone(),
                    bspl.clone(),
                    (0..n).map(|i| ydiff[i] - hs * k[6][i] - bspl[i]).collect(),
                    (0..n).map(|i| hs * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>()).collect(),
                ],
            };
            let ctl = on_step(&seg);
            if cfg.dense {
                traj.segments.push(seg);
            }
            t = tnew;
            y = ynew;
            traj.times.push(t);
            traj.states.push(y.clone());
            let k7 = k[6].clone();
            k[0] = k7;
            let mut fac = if err == 0.0 { 10.0 } else { 0.9 * err.powf(-0.2) };
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            h = (h * fac).min(cfg.max_step);
            if last || matches!(ctl, Control::Stop) {
                return Ok(traj);
            }
        } else {
            let fac = (0.9 * err.powf(-0.2)).max(0.2);
            h *= fac;
            traj.rejected += 1;
            last_rejected = true;
        }
    }
}

pub fn integrate<F>(f: F, t0: f64, y0: &[f64], t1: f64, cfg: &IntegratorConfig) -> Result<Trajectory, FlowError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    integrate_with(f, t0, y0, t1, cfg, |_| Control::Continue)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rotation(_t: f64, y: &[f64], d: &mut [f64]) {
        d[0] = -y[1];
        d[1] = y[0];
        d[2] = 0.0;
    }

    #[test]
    fn harmonic_rotation_returns() {
        let tr = integrate(rotation, 0.0, &[1.0, 0.0, 0.5], 2.0 * PI, &IntegratorConfig::default()).unwrap();
        let y = tr.final_state();
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10);
        assert!((y[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn backward_integration() {
        let cfg = IntegratorConfig::default();
        let fwd = integrate(rotation, 0.0, &[1.0, 0.0, 0.0], 1.0, &cfg).unwrap();
        let back = integrate(rotation, 1.0, fwd.final_state(), 0.0, &cfg).unwrap();
        assert!((back.final_state()[0] - 1.0).abs() < 1e-10);
        assert!(back.final_state()[1].abs() < 1e-10);
    }

    #[test]
    fn dense_output_matches_solution() {
        let cfg = IntegratorConfig {
            dense: true,
            ..IntegratorConfig::default()
        };
        let tr = integrate(rotation, 0.0, &[1.0, 0.0, 0.0], 5.0, &cfg).unwrap();
        for t in [0.3, 1.7, 2.2, 4.9] {
            let y = tr.at(t).unwrap();
            assert!((y[0] - t.cos()).abs() < 1e-8, "{t}");
            assert!((y[1] - t.sin()).abs() < 1e-8);
            let d = tr.segments.iter().find(|s| t >= s.t0 && t <= s.t1()).unwrap().eval_derivative(t);
            assert!((d[0] + t.sin()).abs() < 1e-6);
        }
    }

    #[test]
    fn deterministic() {
        let f = |t: f64, y: &[f64], d: &mut [f64]| d[0] = -y[0] * t.sin() + y[0] * y[0] * 0.1;
        let a = integrate(f, 0.0, &[1.0], 3.0, &IntegratorConfig::default()).unwrap();
        let b = integrate(f, 0.0, &[1.0], 3.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(a.final_state()[0].to_bits(), b.final_state()[0].to_bits());
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = IntegratorConfig {
            atol: 0.0,
            ..IntegratorConfig::default()
        };
        assert_eq!(integrate(rotation, 0.0, &[1.0, 0.0, 0.0], 1.0, &cfg).unwrap_err(), FlowError::InvalidConfig);
    }
}
