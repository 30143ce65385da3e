use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::bijet::BiJet;
use super::field::PolyField;
use super::rk::{integrate_with, Control, FlowError, IntegratorConfig, Trajectory};

pub const TWO_PI: f64 = 2.0 * PI;
pub const TANGENCY_SPEED: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    /// `y = 0` crossed with `y' > 0`, found by event detection on the 3D flow.
    PlaneY,
    /// Angle `theta: 0 -> 2 pi`, integrating with `theta` as the independent variable.
    ThetaReturn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeDirection {
    Forward,
    Reversed,
}

impl TimeDirection {
    pub fn sign(self) -> f64 {
        match self {
            TimeDirection::Forward => 1.0,
            TimeDirection::Reversed => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            TimeDirection::Forward => TimeDirection::Reversed,
            TimeDirection::Reversed => TimeDirection::Forward,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SectionEvent {
    pub section: Section,
    pub time: f64,
    pub state: [f64; 3],
    /// `|y|` or `|theta - 2 pi|` at the refined crossing.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReturnResult {
    pub point: [f64; 3],
    pub return_time: f64,
    pub event: SectionEvent,
}

fn check_theta_state(field: &PolyField, th: f64, y: &[f64]) -> Result<(), FlowError> {
    if !y.iter().all(|v| v.is_finite()) {
        return Err(FlowError::NonFiniteState { t: th });
    }
    let speed = if y[0] > 0.0 { field.theta_speed(th, y[0], y[1]) } else { 0.0 };
    if speed < TANGENCY_SPEED {
        return Err(FlowError::TangencyDetected { speed });
    }
    Ok(())
}

/// One turn of the angular return map on `(r, w)`, plus the elapsed time.
pub fn theta_return(field: &PolyField, rw: [f64; 2], dir: TimeDirection, cfg: &IntegratorConfig) -> Result<([f64; 2], f64), FlowError> {
    check_theta_state(field, 0.0, &rw)?;
    let mut bad = None;
    let tr = integrate_with(
        |th, y, d| {
            let v = field.theta_rhs(th, &y[0], &y[1]);
            d[0] = v[0];
            d[1] = v[1];
            d[2] = 1.0 / field.theta_speed(th, y[0], y[1]);
        },
        0.0,
        &[rw[0], rw[1], 0.0],
        dir.sign() * TWO_PI,
        cfg,
        |seg| {
            let th = seg.t1();
            match check_theta_state(field, th, &seg.eval(th)) {
                Ok(()) => Control::Continue,
                Err(e) => {
                    bad = Some(e);
                    Control::Stop
                }
            }
        },
    )?;
    if let Some(e) = bad {
        return Err(e);
    }
    let y = tr.final_state();
    Ok(([y[0], y[1]], y[2]))
}

/// Degree-3 jet of the angular return map at `base`, seeded along the
/// columns of `lin`: the jet variables `u` enter as `base + lin u`.
pub fn theta_return_jet(
    field: &PolyField,
    base: [f64; 2],
    lin: [[f64; 2]; 2],
    dir: TimeDirection,
    cfg: &IntegratorConfig,
) -> Result<[BiJet; 2], FlowError> {
    check_theta_state(field, 0.0, &base)?;
    let mut y0 = vec![0.0; 20];
    let seed = [
        BiJet::affine(base[0], lin[0][0], lin[0][1]),
        BiJet::affine(base[1], lin[1][0], lin[1][1]),
    ];
    y0[..10].copy_from_slice(&seed[0].c);
    y0[10..].copy_from_slice(&seed[1].c);
    let unpack = |y: &[f64]| {
        let mut a = BiJet::constant(0.0);
        let mut b = BiJet::constant(0.0);
        a.c.copy_from_slice(&y[..10]);
        b.c.copy_from_slice(&y[10..20]);
        (a, b)
    };
    let mut bad = None;
    let tr = integrate_with(
        |th, y, d| {
            let (r, w) = unpack(y);
            let v = field.theta_rhs(th, &r, &w);
            d[..10].copy_from_slice(&v[0].c);
            d[10..].copy_from_slice(&v[1].c);
        },
        0.0,
        &y0,
        dir.sign() * TWO_PI,
        cfg,
        |seg| {
            let th = seg.t1();
            let y = seg.eval(th);
            if let Err(e) = check_theta_state(field, th, &[y[0], y[10]]) {
                bad = Some(e);
                return Control::Stop;
            }
            if y.iter().any(|v| !v.is_finite()) {
                bad = Some(FlowError::JetTransportUnstable { t: th });
                return Control::Stop;
            }
            Control::Continue
        },
    )?;
    if let Some(e) = bad {
        return Err(e);
    }
    let (a, b) = unpack(tr.final_state());
    if a.c.iter().chain(&b.c).any(|v| !v.is_finite()) {
        return Err(FlowError::JetTransportUnstable { t: dir.sign() * TWO_PI });
    }
    Ok([a, b])
}

/// Next crossing of the section in the prescribed direction.
pub fn poincare_return(field: &PolyField, section: Section, x0: [f64; 3], cfg: &IntegratorConfig) -> Result<ReturnResult, FlowError> {
    poincare_return_within(field, section, x0, cfg, 10.0 * TWO_PI)
}

pub fn poincare_return_within(
    field: &PolyField,
    section: Section,
    x0: [f64; 3],
    cfg: &IntegratorConfig,
    horizon: f64,
) -> Result<ReturnResult, FlowError> {
    match section {
        Section::ThetaReturn => {
            let r = x0[0].hypot(x0[1]);
            let ([r1, w1], t) = theta_return(field, [r, x0[2]], TimeDirection::Forward, cfg)?;
            let point = [r1, 0.0, w1];
            Ok(ReturnResult {
                point,
                return_time: t,
                event: SectionEvent {
                    section,
                    time: t,
                    state: point,
                    residual: 0.0,
                },
            })
        }
        Section::PlaneY => plane_return(field, x0, cfg, horizon),
    }
}

fn plane_return(field: &PolyField, x0: [f64; 3], cfg: &IntegratorConfig, horizon: f64) -> Result<ReturnResult, FlowError> {
    let mut hit: Option<(f64, [f64; 3])> = None;
    let mut first = true;
    integrate_with(
        |_, y, d| field.rhs(y, d),
        0.0,
        &x0,
        horizon,
        cfg,
        |seg| {
            let ya = seg.eval(seg.t0)[1];
            let yb = seg.eval(seg.t1())[1];
            let starts_on_section = first && ya.abs() <= 1e-12;
            first = false;
            if !starts_on_section && ya < 0.0 && yb >= 0.0 {
                let t = refine_crossing(|t| seg.eval(t)[1], |t| seg.eval_derivative(t)[1], seg.t0, seg.t1());
                let s = seg.eval(t);
                hit = Some((t, [s[0], s[1], s[2]]));
                return Control::Stop;
            }
            Control::Continue
        },
    )?;
    let (t, state) = hit.ok_or(FlowError::NoReturnWithinHorizon { horizon })?;
    let v = field.cartesian(&state[0], &state[1], &state[2]);
    if v[1].abs() < TANGENCY_SPEED {
        return Err(FlowError::TangencyDetected { speed: v[1].abs() });
    }
    Ok(ReturnResult {
        point: state,
        return_time: t,
        event: SectionEvent {
            section: Section::PlaneY,
            time: t,
            state,
            residual: state[1].abs(),
        },
    })
}

/// Newton on the dense interpolant, falling back to bisection.
fn refine_crossing(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (a, b);
    let mut t = b - g(b) / dg(b);
    if !(t > lo.min(hi) && t < lo.max(hi)) {
        t = 0.5 * (lo + hi);
    }
    for _ in 0..60 {
        let v = g(t);
        if v.abs() <= 1e-13 {
            return t;
        }
        if v < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let d = dg(t);
        let nt = t - v / d;
        t = if d != 0.0 && nt > lo.min(hi) && nt < lo.max(hi) { nt } else { 0.5 * (lo + hi) };
    }
    t
}

/// Value and symmetric derivative arrays of a planar map at a base point.
#[derive(Debug, Clone, Serialize)]
pub struct MapJet {
    pub value: [f64; 2],
    pub jac: [[f64; 2]; 2],
    /// `b[i][j][k] = d^2 H_i / dx_j dx_k`.
    pub b: [[[f64; 2]; 2]; 2],
    /// `c[i][j][k][l] = d^3 H_i / dx_j dx_k dx_l`.
    pub c: [[[[f64; 2]; 2]; 2]; 2],
}

impl MapJet {
    pub fn from_bijets(h: &[BiJet; 2]) -> Self {
        let d = |i: usize, idx: &[usize]| {
            let a = idx.iter().filter(|&&k| k == 0).count();
            h[i].partial(a, idx.len() - a)
        };
        let mut m = MapJet {
            value: [h[0].coeff(0, 0), h[1].coeff(0, 0)],
            jac: [[0.0; 2]; 2],
            b: [[[0.0; 2]; 2]; 2],
            c: [[[[0.0; 2]; 2]; 2]; 2],
        };
        for i in 0..2 {
            for j in 0..2 {
                m.jac[i][j] = d(i, &[j]);
                for k in 0..2 {
                    m.b[i][j][k] = d(i, &[j, k]);
                    for l in 0..2 {
                        m.c[i][j][k][l] = d(i, &[j, k, l]);
                    }
                }
            }
        }
        m
    }

    /// Largest absolute difference per order: value, Jacobian, B, C.
    pub fn discrepancy(&self, o: &MapJet) -> [f64; 4] {
        let mut out = [0.0f64; 4];
        for i in 0..2 {
            out[0] = out[0].max((self.value[i] - o.value[i]).abs());
            for j in 0..2 {
                out[1] = out[1].max((self.jac[i][j] - o.jac[i][j]).abs());
                for k in 0..2 {
                    out[2] = out[2].max((self.b[i][j][k] - o.b[i][j][k]).abs());
                    for l in 0..2 {
                        out[3] = out[3].max((self.c[i][j][k][l] - o.c[i][j][k][l]).abs());
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JetMethod {
    JetTransport,
    FiniteDifference,
}

#[derive(Debug, Clone, Serialize)]
pub struct MapJetReport {
    pub jet: MapJet,
    pub method: JetMethod,
}

/// Degree-3 jet of the angular return map at `base`, by jet transport with
/// a finite-difference fallback.
pub fn poincare_jet3(field: &PolyField, base: [f64; 2], cfg: &IntegratorConfig) -> Result<MapJetReport, FlowError> {
    let id = [[1.0, 0.0], [0.0, 1.0]];
    match theta_return_jet(field, base, id, TimeDirection::Forward, cfg) {
        Ok(h) => Ok(MapJetReport {
            jet: MapJet::from_bijets(&h),
            method: JetMethod::JetTransport,
        }),
        Err(FlowError::JetTransportUnstable { .. }) => Ok(MapJetReport {
            jet: fd_jet3(field, base, cfg, f64::EPSILON.powf(0.25) * base[0].abs().max(1.0))?,
            method: JetMethod::FiniteDifference,
        }),
        Err(e) => Err(e),
    }
}

/// Central finite differences of the angular return map with step `h`.
pub fn fd_jet3(field: &PolyField, base: [f64; 2], cfg: &IntegratorConfig, h: f64) -> Result<MapJet, FlowError> {
    let f = |a: f64, b: f64| -> Result<[f64; 2], FlowError> {
        theta_return(field, [base[0] + a * h, base[1] + b * h], TimeDirection::Forward, cfg).map(|r| r.0)
    };
    let mut cache = std::collections::BTreeMap::new();
    for a in -2i32..=2 {
        for b in -2i32..=2 {
            if a.abs() + b.abs() <= 3 {
                cache.insert((a, b), f(a as f64, b as f64)?);
            }
        }
    }
    let v = |a: i32, b: i32, i: usize| cache[&(a, b)][i];
    let e = |j: usize| if j == 0 { (1, 0) } else { (0, 1) };
    let mut m = MapJet {
        value: [v(0, 0, 0), v(0, 0, 1)],
        jac: [[0.0; 2]; 2],
        b: [[[0.0; 2]; 2]; 2],
        c: [[[[0.0; 2]; 2]; 2]; 2],
    };
    let h2 = h * h;
    let h3 = h2 * h;
    for i in 0..2 {
        for j in 0..2 {
            let (a, b) = e(j);
            m.jac[i][j] = (v(a, b, i) - v(-a, -b, i)) / (2.0 * h);
        }
        let bxx = (v(1, 0, i) - 2.0 * v(0, 0, i) + v(-1, 0, i)) / h2;
        let byy = (v(0, 1, i) - 2.0 * v(0, 0, i) + v(0, -1, i)) / h2;
        let bxy = (v(1, 1, i) - v(1, -1, i) - v(-1, 1, i) + v(-1, -1, i)) / (4.0 * h2);
        m.b[i] = [[bxx, bxy], [bxy, byy]];
        let cxxx = (v(2, 0, i) - 2.0 * v(1, 0, i) + 2.0 * v(-1, 0, i) - v(-2, 0, i)) / (2.0 * h3);
        let cyyy = (v(0, 2, i) - 2.0 * v(0, 1, i) + 2.0 * v(0, -1, i) - v(0, -2, i)) / (2.0 * h3);
        // d/dy of the xx second difference, and d/dx of the yy one
        let cxxy = ((v(1, 1, i) - 2.0 * v(0, 1, i) + v(-1, 1, i)) - (v(1, -1, i) - 2.0 * v(0, -1, i) + v(-1, -1, i))) / (2.0 * h3);
        let cxyy = ((v(1, 1, i) - 2.0 * v(1, 0, i) + v(1, -1, i)) - (v(-1, 1, i) - 2.0 * v(-1, 0, i) + v(-1, -1, i))) / (2.0 * h3);
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m.c[i][j][k][l] = match j + k + l {
                        0 => cxxx,
                        1 => cxxy,
                        2 => cxyy,
                        _ => cyyy,
                    };
                }
            }
        }
    }
    Ok(m)
}

/// Dense 3D trajectory sampled at the accepted steps.
pub fn simulate(field: &PolyField, x0: [f64; 3], t_end: f64, cfg: &IntegratorConfig) -> Result<Trajectory, FlowError> {
    integrate_with(|_, y, d| field.rhs(y, d), 0.0, &x0, t_end, cfg, |_| Control::Continue)
}

pub fn write_trajectory_csv<W: Write>(out: W, tr: &Trajectory) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "y", "z"])?;
    for (t, s) in tr.times.iter().zip(&tr.states) {
        w.write_record([fmt17(*t), fmt17(s[0]), fmt17(s[1]), fmt17(s[2])])?;
    }
    w.flush()?;
    Ok(())
}

/// Section samples with header `n,<a>,<b>`, e.g. `n,r,w` or `n,x,z`.
pub fn write_section_csv<W: Write>(out: W, labels: [&str; 2], pts: &[[f64; 2]]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", labels[0], labels[1]])?;
    for (n, p) in pts.iter().enumerate() {
        w.write_record([n.to_string(), fmt17(p[0]), fmt17(p[1])])?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest representation that still carries 17 significant digits.
pub fn fmt17(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{HopfZeroSystem, PerturbationFamily};

    fn example_field(mu: f64, eps: f64) -> PolyField {
        let s = HopfZeroSystem::parse("0", "y*z", "-x^2 + x*y + z^2").unwrap();
        PolyField::rescaled(&s, &PerturbationFamily::simple(1), mu, eps)
    }

    fn linear() -> PolyField {
        let s = HopfZeroSystem::parse("0", "0", "0").unwrap();
        PolyField::original(&s, &PerturbationFamily::parse("0", "0", "0").unwrap(), 0.0, 0.0)
    }

    #[test]
    fn circular_orbit_plane_return() {
        let r = poincare_return(&linear(), Section::PlaneY, [1.0, 0.0, 0.0], &IntegratorConfig::default()).unwrap();
        assert!((r.return_time - TWO_PI).abs() < 1e-10, "{}", r.return_time);
        assert!((r.point[0] - 1.0).abs() < 1e-10);
        assert!(r.event.residual <= 1e-12);
    }

    #[test]
    fn no_return_without_rotation() {
        let s = HopfZeroSystem::parse("0", "0", "0").unwrap();
        let f = PolyField::new(&s.polys, 0.0, 0.0, false);
        let e = poincare_return(&f, Section::PlaneY, [1.0, 0.0, 0.0], &IntegratorConfig::default()).unwrap_err();
        assert!(matches!(e, FlowError::NoReturnWithinHorizon { .. }));
    }

    #[test]
    fn identity_at_zero_eps() {
        let f = example_field(0.2, 0.0);
        let (x, t) = theta_return(&f, [1.3, 0.2], TimeDirection::Forward, &IntegratorConfig::default()).unwrap();
        assert!((x[0] - 1.3).abs() < 1e-14 && (x[1] - 0.2).abs() < 1e-14);
        assert!((t - TWO_PI).abs() < 1e-12);
        let j = poincare_jet3(&f, [1.3, 0.2], &IntegratorConfig::default()).unwrap().jet;
        assert_eq!(j.jac, [[1.0, 0.0], [0.0, 1.0]]);
        assert!(j.b.iter().flatten().flatten().all(|v| *v == 0.0));
        assert!(j.c.iter().flatten().flatten().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn plane_and_theta_sections_agree() {
        let s = HopfZeroSystem::parse("0", "y*z", "-x^2 + x*y + z^2").unwrap();
        let f = PolyField::original(&s, &PerturbationFamily::simple(1), 0.05, 0.05);
        let cfg = IntegratorConfig::tight();
        let a = poincare_return(&f, Section::PlaneY, [0.07, 0.0, 0.0], &cfg).unwrap();
        let b = poincare_return(&f, Section::ThetaReturn, [0.07, 0.0, 0.0], &cfg).unwrap();
        assert!((a.point[0] - b.point[0]).abs() < 1e-10);
        assert!((a.point[2] - b.point[2]).abs() < 1e-10);
        assert!((a.return_time - b.return_time).abs() < 1e-9);
    }

    #[test]
    fn jet_matches_finite_differences() {
        let f = example_field(0.05, 0.05);
        let cfg = IntegratorConfig::tight();
        let j = poincare_jet3(&f, [1.4, -0.03], &cfg).unwrap().jet;
        let fd = fd_jet3(&f, [1.4, -0.03], &cfg, 1e-3).unwrap();
        let d = j.discrepancy(&fd);
        assert!(d[0] < 1e-12 && d[1] < 1e-6 && d[2] < 1e-4 && d[3] < 1e-2, "{d:?}");
    }

    #[test]
    fn reversibility() {
        let f = example_field(0.05, 0.05);
        let cfg = IntegratorConfig::default();
        let (x1, _) = theta_return(&f, [1.2, 0.1], TimeDirection::Forward, &cfg).unwrap();
        let (x0, _) = theta_return(&f, x1, TimeDirection::Reversed, &cfg).unwrap();
        assert!((x0[0] - 1.2).abs() < 1e-8 && (x0[1] - 0.1).abs() < 1e-8);
    }

    #[test]
    fn csv_header_and_rows() {
        let mut buf = Vec::new();
        write_section_csv(&mut buf, ["r", "w"], &[[1.0, 0.5]]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next(), Some("n,r,w"));
        assert_eq!(s.lines().nth(1), Some("0,1.0000000000000000e0,5.0000000000000000e-1"));
    }
}
