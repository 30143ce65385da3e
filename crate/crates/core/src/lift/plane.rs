use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{eval_at, substitute, LiftError};
use crate::expr::{rat_to_f64, Monomial, Poly, Var};

pub const JITTER_LADDER: [f64; 3] = [1e-6, 1e-5, 1e-4];
pub const MAX_JITTER_ATTEMPTS: usize = 100;
pub const MAX_SCAN_EXPONENT: i32 = 40;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Ball {
    pub center: [f64; 3],
    pub radius: f64,
}

/// Vertical plane `a0 (x - x*) + b0 y = 0` through the regular point `p = (x*, 0, 0)`.
#[derive(Debug, Clone, Serialize)]
pub struct SeparatingPlane {
    /// Seed after any jitter, in the original coordinates.
    #[serde(skip)]
    pub field: [Poly; 3],
    pub jitter_attempts: usize,
    pub jitter_magnitude: f64,
    pub degree: u32,
    #[serde(serialize_with = "ser_rat3")]
    pub p: [BigRational; 3],
    pub k: i32,
    #[serde(serialize_with = "ser_rat")]
    pub a0: BigRational,
    #[serde(serialize_with = "ser_rat")]
    pub b0: BigRational,
    pub c0: f64,
    pub ball: Ball,
    pub direction: [f64; 3],
    pub phi: f64,
    pub theta: [f64; 2],
    /// Distance from the ball centre to the plane.
    pub plane_distance: f64,
    /// Distance from the ball centre to `p`.
    pub point_distance: f64,
    /// `|a0 P(p) + b0 Q(p)|`, zero by construction.
    pub containment_residual: f64,
}

fn ser_rat<S: serde::Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn ser_rat3<S: serde::Serializer>(v: &[BigRational; 3], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(3))?;
    for x in v {
        seq.serialize_element(&x.to_string())?;
    }
    seq.end()
}

impl SeparatingPlane {
    /// The seed translated so that `p` is the origin.
    pub fn translated_seed(&self) -> [Poly; 3] {
        let v = [self.p[0].clone(), self.p[1].clone(), self.p[2].clone()];
        [0, 1, 2].map(|i| super::translate(&self.field[i], &v))
    }
}

type Uni = Vec<BigRational>;

fn trim(mut a: Uni) -> Uni {
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    a
}

fn rem(a: &Uni, b: &Uni) -> Uni {
    let mut r = a.clone();
    let lb = b.last().expect("nonzero divisor").clone();
    while r.len() >= b.len() {
        let f = r.last().unwrap().clone() / &lb;
        let off = r.len() - b.len();
        for (i, c) in b.iter().enumerate() {
            r[off + i] -= &f * c;
        }
        r = trim(r);
        if r.is_empty() {
            break;
        }
    }
    r
}

fn gcd_degree(a: Uni, b: Uni) -> usize {
    let (mut a, mut b) = (trim(a), trim(b));
    while !b.is_empty() {
        let r = rem(&a, &b);
        a = b;
        b = r;
    }
    a.len().saturating_sub(1)
}

/// Coefficients in `t` of `f(a + t u, b + t v)`.
fn restrict(f: &Poly, line: [i64; 4]) -> Uni {
    let c = |n: i64| Poly::constant(BigRational::from_integer(n.into()));
    let t = Poly::var(Var::X);
    let sub = [c(line[0]).add(&t.scale(&BigRational::from_integer(line[2].into()))), c(line[1]).add(&t.scale(&BigRational::from_integer(line[3].into()))), Poly::zero()];
    let g = substitute(f, &sub);
    let deg = g.degree_of(Var::X) as usize;
    (0..=deg).map(|d| g.coeff(&[d as u32, 0, 0, 0, 0])).collect()
}

/// Coprimality of `f, g` in `Q[x, y]`, tested through restrictions to fixed
/// generic lines: a common factor survives on every line it is not constant on.
pub fn coprime_on_plane(f: &Poly, g: &Poly) -> bool {
    const LINES: [[i64; 4]; 3] = [[3, -7, 5, 11], [-13, 2, 17, -3], [19, 23, -29, 31]];
    LINES.iter().any(|&l| gcd_degree(restrict(f, l), restrict(g, l)) == 0)
}

fn on_plane(p: &Poly) -> Poly {
    let x = Poly::var(Var::X);
    let y = Poly::var(Var::Y);
    substitute(p, &[x, y, Poly::zero()])
}

fn admissible(field: &[Poly; 3], m: u32) -> bool {
    let f = on_plane(&field[0]);
    let g = on_plane(&field[1]);
    let top: Monomial = [m, 0, 0, 0, 0];
    !f.coeff(&top).is_zero() && !g.coeff(&top).is_zero() && coprime_on_plane(&f, &g)
}

/// Adds `magnitude * U(-1, 1)` (rounded to a multiple of `1e-12`) to every
/// monomial `x^i y^j`, `i + j <= m`, of the first two components.
fn jitter(field: &[Poly; 3], m: u32, magnitude: f64, rng: &mut ChaCha8Rng) -> [Poly; 3] {
    let scale = BigInt::from(1_000_000_000_000i64);
    let mut out = field.clone();
    for comp in out.iter_mut().take(2) {
        for i in 0..=m {
            for j in 0..=(m - i) {
                let v = (rng.gen_range(-1.0..1.0) * magnitude * 1e12).round() as i64;
                comp.add_term([i, j, 0, 0, 0], BigRational::new(BigInt::from(v), scale.clone()));
            }
        }
    }
    out
}

pub fn field_degree(field: &[Poly; 3]) -> u32 {
    field.iter().map(|p| p.space_degree()).max().unwrap_or(0)
}

pub fn find_separating_plane(field: &[Poly; 3], ball: Ball, seed: u64) -> Result<SeparatingPlane, LiftError> {
    if field.iter().any(|p| p.uses(Var::Mu) || p.uses(Var::Eps)) {
        return Err(LiftError::InvalidSeed("seed depends on mu or eps".into()));
    }
    let m = field_degree(field);
    if m < 1 {
        return Err(LiftError::InvalidSeed("seed degree must be at least 1".into()));
    }
    if !(ball.radius > 0.0) {
        return Err(LiftError::InvalidSeed("ball radius must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = field.clone();
    let mut attempts = 0;
    let mut magnitude = 0.0;
    while !admissible(&chosen, m) {
        if attempts == MAX_JITTER_ATTEMPTS {
            return Err(LiftError::PerturbationBudgetExceeded { attempts });
        }
        magnitude = JITTER_LADDER[(attempts * JITTER_LADDER.len() / MAX_JITTER_ATTEMPTS).min(JITTER_LADDER.len() - 1)];
        chosen = jitter(field, m, magnitude, &mut rng);
        attempts += 1;
    }
    let [cx, cy, cz] = ball.center;
    for k in 1..=MAX_SCAN_EXPONENT {
        let xs = 2f64.powi(k) * ball.radius;
        let Some(xr) = BigRational::from_f64(xs) else { continue };
        let p = [xr, BigRational::zero(), BigRational::zero()];
        let v = [0, 1, 2].map(|i| eval_at(&chosen[i], &p));
        if v.iter().all(|c| c.is_zero()) {
            continue;
        }
        let (f, g) = (rat_to_f64(&v[0]), rat_to_f64(&v[1]));
        let point_distance = ((xs - cx).powi(2) + cy * cy + cz * cz).sqrt();
        let planar = (xs - cx).hypot(cy);
        if point_distance <= ball.radius || planar <= ball.radius || (f == 0.0 && g == 0.0) {
            continue;
        }
        let phi = if f == 0.0 { std::f64::consts::FRAC_PI_2 } else { (g / f).atan() };
        let alpha = cy.atan2(cx - xs);
        let beta = (ball.radius / planar).asin();
        let line_angle = |a: f64| {
            let mut a = a % std::f64::consts::PI;
            if a > std::f64::consts::FRAC_PI_2 {
                a -= std::f64::consts::PI;
            } else if a <= -std::f64::consts::FRAC_PI_2 {
                a += std::f64::consts::PI;
            }
            a
        };
        let theta = [line_angle(alpha + beta), line_angle(alpha - beta)];
        let a0 = v[1].clone();
        let b0 = -v[0].clone();
        let (a0f, b0f) = (rat_to_f64(&a0), rat_to_f64(&b0));
        let plane_distance = (a0f * (cx - xs) + b0f * cy).abs() / a0f.hypot(b0f);
        if plane_distance <= ball.radius {
            continue;
        }
        let containment = &a0 * &v[0] + &b0 * &v[1];
        return Ok(SeparatingPlane {
            field: chosen,
            jitter_attempts: attempts,
            jitter_magnitude: magnitude,
            degree: m,
            p,
            k,
            a0,
            b0,
            c0: 0.0,
            ball,
            direction: [f, g, rat_to_f64(&v[2])],
            phi,
            theta,
            plane_distance,
            point_distance,
            containment_residual: rat_to_f64(&containment).abs(),
        });
    }
    Err(LiftError::NoSeparatingXFound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_field, rat};

    fn field(src: [&str; 3]) -> [Poly; 3] {
        src.map(|s| Poly::from_expr(&parse_field(s).unwrap()))
    }

    #[test]
    fn linear_seed_accepts_x16() {
        let f = field(["1 + x", "0.1*x + y", "0"]);
        let ball = Ball { center: [0.0; 3], radius: 1.0 };
        let sp = find_separating_plane(&f, ball, 1).unwrap();
        assert_eq!(sp.jitter_attempts, 0);
        assert_eq!(sp.k, 4);
        assert_eq!(sp.p[0], rat(16, 1));
        assert!(sp.plane_distance > 1.0);
        assert!(sp.phi.abs() > sp.theta[0].abs().max(sp.theta[1].abs()));
        assert_eq!(sp.containment_residual, 0.0);
        // k = 3 (x = 8) still meets the unit disk
        assert!((0.8f64 / 9.0).atan() < (1.0f64 / 8.0).asin());
    }

    #[test]
    fn common_factor_triggers_jitter() {
        let f = field(["x*(x + y) + z", "(x + y)*(y + 2*x)", "1"]);
        let fp = on_plane(&f[0]);
        let gp = on_plane(&f[1]);
        assert!(!coprime_on_plane(&fp, &gp));
        let sp = find_separating_plane(&f, Ball { center: [0.0; 3], radius: 2.0 }, 9).unwrap();
        assert!(sp.jitter_attempts >= 1 && sp.jitter_magnitude == 1e-6);
        assert!(sp.plane_distance > 2.0);
    }

    #[test]
    fn vanishing_top_coefficient_triggers_jitter() {
        let f = field(["y^2 + 1", "x^2 + 2", "z"]);
        let sp = find_separating_plane(&f, Ball { center: [0.0; 3], radius: 1.0 }, 4).unwrap();
        assert!(sp.jitter_attempts >= 1);
    }

    #[test]
    fn seed_is_reproducible() {
        let f = field(["y^2 + 1", "x^2 + 2", "z"]);
        let b = Ball { center: [0.5, -0.25, 1.0], radius: 1.0 };
        let a = find_separating_plane(&f, b, 4).unwrap();
        let c = find_separating_plane(&f, b, 4).unwrap();
        assert_eq!(a.field, c.field);
        assert_eq!(a.p, c.p);
    }

    #[test]
    fn gcd_of_univariates() {
        // (t - 1)(t + 2) and (t - 1)(t - 3)
        let a = vec![rat(-2, 1), rat(1, 1), rat(1, 1)];
        let b = vec![rat(3, 1), rat(-4, 1), rat(1, 1)];
        assert_eq!(gcd_degree(a, b), 1);
        assert_eq!(gcd_degree(vec![rat(1, 1), rat(1, 1)], vec![rat(-1, 1), rat(1, 1)]), 0);
    }
}
