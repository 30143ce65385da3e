use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::family::{build_lift_family, rational_sqrt, LiftFamily};
use super::{eval_at, origin, LiftError};
use crate::criteria::{evaluate_base_criteria, omega_exact, validate_hopf_zero, BaseCriteria, HopfZeroSystem};
use crate::expr::{rat_to_f64, Poly, Var};

/// Exact `Omega(L, delta) = A(L) + delta B0(L) + delta^2 B1(L)` at one `L`.
#[derive(Debug, Clone)]
pub struct OmegaDecomposition {
    pub l: BigRational,
    pub a: BigRational,
    pub b0: BigRational,
    pub b1: BigRational,
    /// Cubic coefficient of the interpolant through four samples; zero when
    /// `B` is linear in `delta`.
    pub cubic: BigRational,
}

impl OmegaDecomposition {
    pub fn omega(&self, delta: &BigRational) -> BigRational {
        &self.a + delta * (&self.b0 + delta * &self.b1)
    }
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Newton divided differences through `(x_i, y_i)`, returned in monomial form.
fn interpolate(xs: &[BigRational], ys: &[BigRational]) -> Vec<BigRational> {
    let n = xs.len();
    let mut dd = ys.to_vec();
    for k in 1..n {
        for i in (k..n).rev() {
            dd[i] = (&dd[i] - &dd[i - 1]) / (&xs[i] - &xs[i - k]);
        }
    }
    let mut c = vec![BigRational::zero(); n];
    for k in (0..n).rev() {
        // c <- c * (x - x_k) + dd[k]
        let mut next = vec![BigRational::zero(); n];
        for i in 0..n {
            if i + 1 < n {
                next[i + 1] += &c[i];
            }
            next[i] -= &c[i] * &xs[k];
        }
        next[0] += &dd[k];
        c = next;
    }
    c
}

/// Samples of `delta` used for the exact decomposition; all rational squares.
pub fn decomposition_deltas() -> [BigRational; 4] {
    [q(1, 4), q(1, 16), q(1, 64), q(1, 256)]
}

pub fn omega_decomposition(seed: &[Poly; 3], l: &BigRational) -> Result<OmegaDecomposition, LiftError> {
    let ds = decomposition_deltas();
    let vals = ds
        .iter()
        .map(|d| Ok(omega_exact(&build_lift_family(seed, l, d)?.system)))
        .collect::<Result<Vec<_>, LiftError>>()?;
    let c = interpolate(&ds, &vals);
    Ok(OmegaDecomposition {
        l: l.clone(),
        a: c[0].clone(),
        b0: c[1].clone(),
        b1: c[2].clone(),
        cubic: c[3].clone(),
    })
}

/// `2 R(0)^2 (Q(0) P_z(0) - P(0) Q_z(0))^2 / P(0)^2`.
pub fn a_limit_printed(seed: &[Poly; 3]) -> BigRational {
    let o = origin();
    let [p0, q0, r0] = [0, 1, 2].map(|i| eval_at(&seed[i], &o));
    let [pz, qz] = [0, 1].map(|i| eval_at(&seed[i].derivative(Var::Z), &o));
    let k = &q0 * &pz - &p0 * &qz;
    BigRational::from_integer(2.into()) * &r0 * &r0 * &k * &k / (&p0 * &p0)
}

#[derive(Debug, Clone)]
pub struct TuneConfig {
    /// Increasing, positive `L` values.
    pub l_grid: Vec<BigRational>,
    /// Candidate `delta` values are `delta_max / 4^k`, `k = 0..delta_steps`.
    pub delta_max: BigRational,
    pub delta_steps: usize,
    pub seed: u64,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            l_grid: (-2..=12).map(|k| if k < 0 { q(1, 1 << -k) } else { q(1 << k, 1) }).collect(),
            delta_max: BigRational::one(),
            delta_steps: 24,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaSample {
    pub l: f64,
    pub a: f64,
    pub b0: f64,
    pub b1: f64,
}

#[derive(Debug, Clone)]
pub struct TunedLift {
    pub l_star: BigRational,
    pub delta_star: BigRational,
    pub family: LiftFamily,
    pub criteria: BaseCriteria,
    pub samples: Vec<OmegaSample>,
    /// Least-squares `A(L) ~ c0 + c1 L + c2 L^2` over the grid.
    pub a_fit: [f64; 3],
    pub a_limit_printed: f64,
    /// Largest `|cubic| / max(|A|, |B0|, |B1|)` over the grid.
    pub b_linear_residual: f64,
    /// Cubic monomial added to `Y` when `l1` vanished exactly. `R^(0,0,3)`
    /// enters `l1` with the factor `Omega Sigma^2`, so it always moves it.
    pub l1_jitter: Option<String>,
}

fn quadratic_fit(ls: &[f64], a: &[f64]) -> [f64; 3] {
    // scale L to keep the normal matrix well conditioned
    let s = ls.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let m = DMatrix::from_fn(ls.len(), 3, |i, j| (ls[i] / s).powi(j as i32));
    let b = DVector::from_column_slice(a);
    let c = m.svd(true, true).solve(&b, 1e-15).expect("svd with both factors");
    [c[0], c[1] / s, c[2] / (s * s)]
}

pub fn tune_lift_parameters(seed: &[Poly; 3], cfg: &TuneConfig) -> Result<TunedLift, LiftError> {
    let decs: Vec<OmegaDecomposition> = cfg
        .l_grid
        .par_iter()
        .map(|l| omega_decomposition(seed, l))
        .collect::<Result<_, _>>()?;
    let samples: Vec<OmegaSample> = decs
        .iter()
        .map(|d| OmegaSample { l: rat_to_f64(&d.l), a: rat_to_f64(&d.a), b0: rat_to_f64(&d.b0), b1: rat_to_f64(&d.b1) })
        .collect();
    let b_linear_residual = decs
        .iter()
        .map(|d| {
            let scale = [&d.a, &d.b0, &d.b1].iter().map(|v| rat_to_f64(v).abs()).fold(0.0, f64::max);
            if scale == 0.0 { 0.0 } else { rat_to_f64(&d.cubic).abs() / scale }
        })
        .fold(0.0, f64::max);
    let ls: Vec<f64> = samples.iter().map(|s| s.l).collect();
    let av: Vec<f64> = samples.iter().map(|s| s.a).collect();
    let a_fit = quadratic_fit(&ls, &av);

    let dec = decs.iter().find(|d| d.l.is_positive() && d.a.is_positive()).ok_or(LiftError::NoPositiveOmegaFound)?;
    let s_max = rational_sqrt(&cfg.delta_max);
    let candidates = (0..cfg.delta_steps).map(|k| {
        let div = BigRational::from_integer(BigInt::from(4).pow(k as u32));
        match &s_max {
            // keep delta a rational square so the conjugation stays exact
            Some(s) => {
                let sk = s / BigRational::from_integer(BigInt::from(2).pow(k as u32));
                &sk * &sk
            }
            None => &cfg.delta_max / div,
        }
    });
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for delta in candidates {
        if !dec.omega(&delta).is_positive() {
            continue;
        }
        let mut family = build_lift_family(seed, &dec.l, &delta)?;
        let Ok(mut criteria) = evaluate_base_criteria(&family.system) else { continue };
        if !criteria.nondegenerate {
            continue;
        }
        let mut l1_jitter = None;
        let mut tries = 0;
        while criteria.l1_exact.is_zero() && tries < 100 {
            let v = (rng.gen_range(-1.0f64..1.0) * 1e12).round() as i64;
            let c = BigRational::new(BigInt::from(v), BigInt::from(1_000_000_000_000_000_000i64));
            let mut polys = family.system.polys.clone();
            polys[2].add_term([0, 0, 3, 0, 0], c.clone());
            let sys = validate_hopf_zero(polys[0].to_expr(), polys[1].to_expr(), polys[2].to_expr())?;
            criteria = evaluate_base_criteria(&sys)?;
            l1_jitter = Some(format!("R += ({c})*z^3"));
            family.system = sys;
            tries += 1;
        }
        if criteria.l1_exact.is_zero() {
            continue;
        }
        return Ok(TunedLift {
            l_star: dec.l.clone(),
            delta_star: delta,
            family,
            criteria,
            samples,
            a_fit,
            a_limit_printed: rat_to_f64(&a_limit_printed(seed)),
            b_linear_residual,
            l1_jitter,
        });
    }
    Err(LiftError::NoPositiveOmegaFound)
}

fn with_r003(sys: &HopfZeroSystem, c: &BigRational) -> Result<HopfZeroSystem, LiftError> {
    let mut polys = sys.polys.clone();
    polys[2].add_term([0, 0, 3, 0, 0], c.clone());
    Ok(validate_hopf_zero(polys[0].to_expr(), polys[1].to_expr(), polys[2].to_expr())?)
}

/// Adds `c z^3` to `R` with `c` solved exactly so that `l1` equals `target`.
/// `l1` is affine in `R^(0,0,3)` with slope proportional to `Omega Sigma^2`.
pub fn retune_l1(sys: &HopfZeroSystem, target: &BigRational) -> Result<(HopfZeroSystem, BigRational), LiftError> {
    let l0 = evaluate_base_criteria(sys)?.l1_exact;
    let slope = evaluate_base_criteria(&with_r003(sys, &BigRational::one())?)?.l1_exact - &l0;
    if slope.is_zero() {
        return Err(LiftError::L1NotTunable);
    }
    let c = (target - l0) / slope;
    Ok((with_r003(sys, &c)?, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_field;

    fn seed(src: [&str; 3]) -> [Poly; 3] {
        src.map(|s| Poly::from_expr(&parse_field(s).unwrap()))
    }

    #[test]
    fn interpolation_is_exact() {
        let xs = [q(1, 2), q(1, 3), q(2, 1), q(-1, 5)];
        let f = |x: &BigRational| q(3, 1) - x * q(2, 7) + x * x * q(5, 1);
        let ys: Vec<BigRational> = xs.iter().map(f).collect();
        let c = interpolate(&xs, &ys);
        assert_eq!(c, vec![q(3, 1), q(-2, 7), q(5, 1), q(0, 1)]);
    }

    #[test]
    fn decomposition_has_no_cubic_term() {
        let s = seed(["2 + x*z - y^2 + 3*z", "-1 + x*y + 2*z + z^2", "3 + x^2 - y*z"]);
        let d = omega_decomposition(&s, &q(5, 2)).unwrap();
        assert!(d.cubic.is_zero());
        let f = build_lift_family(&s, &q(5, 2), &q(1, 9)).unwrap();
        assert_eq!(d.omega(&q(1, 9)), omega_exact(&f.system));
    }

    #[test]
    fn l1_retuning_is_exact() {
        let s = seed(["2 + x*z - y^2 + 3*z", "-1 + x*y + 2*z + z^2", "3 + x^2 - y*z"]);
        let t = tune_lift_parameters(&s, &TuneConfig::default()).unwrap();
        for target in [q(-48, 1), q(7, 3)] {
            let (sys, _) = retune_l1(&t.family.system, &target).unwrap();
            let c = evaluate_base_criteria(&sys).unwrap();
            assert_eq!(c.l1_exact, target);
            assert_eq!(c.omega_exact, t.criteria.omega_exact);
        }
    }

    #[test]
    fn tuning_reaches_positive_omega() {
        let s = seed(["2 + x*z - y^2 + 3*z", "-1 + x*y + 2*z + z^2", "3 + x^2 - y*z"]);
        let t = tune_lift_parameters(&s, &TuneConfig::default()).unwrap();
        assert!(t.criteria.nondegenerate && t.criteria.l1 != 0.0);
        assert!(((t.a_fit[2] - t.a_limit_printed) / t.a_limit_printed).abs() < 1e-6);
        assert_eq!(t.family.characteristic_polynomial()[1], -t.delta_star.clone());
    }

    #[test]
    fn degenerate_limit_fails() {
        // Q(0) P_z - P(0) Q_z = 0 and R(0) = 0
        let s = seed(["1 + x^2", "1 + y^2", "x*y"]);
        assert_eq!(a_limit_printed(&s), q(0, 1));
        let r = tune_lift_parameters(&s, &TuneConfig::default());
        assert!(matches!(r, Err(LiftError::NoPositiveOmegaFound)), "{r:?}");
    }
}
