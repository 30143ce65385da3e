use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// `radius(phi) = a0 + sum_k (a_k cos k phi + b_k sin k phi)` about `center`.
#[derive(Debug, Clone, Serialize)]
pub struct FourierFit {
    pub center: [f64; 2],
    pub a0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    /// RMS radial deviation of the fitted samples.
    pub rms_residual: f64,
    pub max_residual: f64,
}

impl FourierFit {
    pub fn harmonics(&self) -> usize {
        self.cos.len()
    }

    pub fn radius(&self, phi: f64) -> f64 {
        let mut r = self.a0;
        for k in 0..self.cos.len() {
            let (s, c) = ((k + 1) as f64 * phi).sin_cos();
            r += self.cos[k] * c + self.sin[k] * s;
        }
        r
    }

    pub fn point(&self, phi: f64) -> [f64; 2] {
        let r = self.radius(phi);
        [self.center[0] + r * phi.cos(), self.center[1] + r * phi.sin()]
    }

    /// `n` points at equally spaced angles.
    pub fn sample(&self, n: usize) -> Vec<[f64; 2]> {
        (0..n).map(|i| self.point(2.0 * PI * i as f64 / n as f64)).collect()
    }

    /// RMS radial distance of `pts` from this curve.
    pub fn rms_distance(&self, pts: &[[f64; 2]]) -> f64 {
        let (phi, r) = polar(pts, self.center);
        let ss: f64 = phi.iter().zip(&r).map(|(&p, &r)| (r - self.radius(p)).powi(2)).sum();
        (ss / pts.len().max(1) as f64).sqrt()
    }

    /// Mean radius over the angle, i.e. `a0`.
    pub fn mean_radius(&self) -> f64 {
        self.a0
    }
}

fn polar(pts: &[[f64; 2]], c: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
    pts.iter().map(|p| ((p[1] - c[1]).atan2(p[0] - c[0]), (p[0] - c[0]).hypot(p[1] - c[1]))).unzip()
}

/// Least-squares fit with exactly `k` harmonics.
pub fn fit_fixed(pts: &[[f64; 2]], center: [f64; 2], k: usize) -> Option<FourierFit> {
    let (ang, rad) = polar(pts, center);
    let cols = 2 * k + 1;
    if pts.len() < cols {
        return None;
    }
    let a = DMatrix::from_fn(pts.len(), cols, |i, j| {
        if j == 0 {
            1.0
        } else {
            let h = ((j + 1) / 2) as f64 * ang[i];
            if j % 2 == 1 { h.cos() } else { h.sin() }
        }
    });
    let b = DVector::from_column_slice(&rad);
    let coef = a.clone().svd(true, true).solve(&b, 1e-14).ok()?;
    let res = &a * &coef - &b;
    let rms = (res.norm_squared() / pts.len() as f64).sqrt();
    let max = res.amax();
    Some(FourierFit {
        center,
        a0: coef[0],
        cos: (0..k).map(|i| coef[2 * i + 1]).collect(),
        sin: (0..k).map(|i| coef[2 * i + 2]).collect(),
        rms_residual: rms,
        max_residual: max,
    })
}

/// Smallest `K <= k_max` after which two more harmonics improve the RMS
/// residual by less than 10%.
pub fn fit_adaptive(pts: &[[f64; 2]], center: [f64; 2], k_max: usize) -> Option<FourierFit> {
    let fits: Vec<FourierFit> = (0..=k_max).map_while(|k| fit_fixed(pts, center, k)).collect();
    let floor = 1e-15 * fits.first()?.a0.abs();
    for k in 0..fits.len() {
        let cur = fits[k].rms_residual;
        let next = fits[(k + 2).min(fits.len() - 1)].rms_residual;
        if cur <= floor || k + 2 >= fits.len() || cur - next < 0.1 * cur {
            return Some(fits[k].clone());
        }
    }
    fits.last().cloned()
}

/// Winding number of the closed polygon `poly` about `p`.
pub fn winding_number(poly: &[[f64; 2]], p: [f64; 2]) -> i64 {
    let mut total = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let t0 = (a[1] - p[1]).atan2(a[0] - p[0]);
        let t1 = (b[1] - p[1]).atan2(b[0] - p[0]);
        total += wrap(t1 - t0);
    }
    (total / (2.0 * PI)).round() as i64
}

/// Even-odd ray casting.
pub fn point_in_polygon(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut inside = false;
    let mut j = poly.len().wrapping_sub(1);
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0] {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Angle difference reduced to `(-pi, pi]`.
pub fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ellipse(n: usize, c: [f64; 2]) -> Vec<[f64; 2]> {
        (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64 + 0.3;
                [c[0] + 0.2 * t.cos(), c[1] + 0.3 * t.sin()]
            })
            .collect()
    }

    #[test]
    fn circle_is_exact_with_zero_harmonics() {
        let pts: Vec<[f64; 2]> = (0..64).map(|i| { let t = i as f64 * 0.37; [1.0 + 0.5 * t.cos(), -2.0 + 0.5 * t.sin()] }).collect();
        let f = fit_adaptive(&pts, [1.0, -2.0], 16).unwrap();
        assert_eq!(f.harmonics(), 0);
        assert!((f.a0 - 0.5).abs() < 1e-14 && f.rms_residual < 1e-14);
    }

    #[test]
    fn off_center_ellipse_converges() {
        let pts = ellipse(400, [0.05, -0.02]);
        let f = fit_adaptive(&pts, [0.0, 0.0], 32).unwrap();
        assert!(f.rms_residual < 1e-8 * f.a0, "{}", f.rms_residual);
        assert_eq!(winding_number(&f.sample(256), [0.0, 0.0]), 1);
        assert!(point_in_polygon(&f.sample(256), [0.0, 0.0]));
        assert!(!point_in_polygon(&f.sample(256), [1.0, 0.0]));
        assert_eq!(winding_number(&f.sample(256), [1.0, 0.0]), 0);
    }

    #[test]
    fn reversed_polygon_winds_negatively() {
        let mut pts = ellipse(100, [0.0, 0.0]);
        pts.reverse();
        assert_eq!(winding_number(&pts, [0.01, 0.0]), -1);
    }
}
