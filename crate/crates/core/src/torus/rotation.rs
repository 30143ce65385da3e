use std::f64::consts::PI;

use serde::Serialize;

use super::fit::wrap;
use super::TorusError;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RotationEstimate {
    /// Revolutions per iterate; positive for counterclockwise motion in the section plane.
    pub rho: f64,
    /// Difference between the weighted estimates on the two halves of the orbit.
    pub uncertainty: f64,
    pub iterates: usize,
}

pub const MIN_ROTATION_ITERATES: usize = 256;

fn bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 { 0.0 } else { (-1.0 / (t * (1.0 - t))).exp() }
}

/// Birkhoff average of the increments with the smooth bump weight.
pub(crate) fn weighted_mean(d: &[f64]) -> f64 {
    let n = d.len();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in d.iter().enumerate() {
        let w = bump((i as f64 + 0.5) / n as f64);
        num += w * v;
        den += w;
    }
    num / den
}

/// Rotation number of a consecutive orbit about `center`.
///
/// The orbit must move monotonically in angle and preserve the cyclic order
/// of its points, otherwise it is not an orbit of a circle map.
pub fn rotation_number(orbit: &[[f64; 2]], center: [f64; 2]) -> Result<RotationEstimate, TorusError> {
    let n = orbit.len();
    if n < MIN_ROTATION_ITERATES {
        return Err(TorusError::TooFewIterates { got: n, need: MIN_ROTATION_ITERATES });
    }
    let ang: Vec<f64> = orbit.iter().map(|p| (p[1] - center[1]).atan2(p[0] - center[0])).collect();
    let inc: Vec<f64> = ang.windows(2).map(|w| wrap(w[1] - w[0])).collect();
    let pos = inc.iter().filter(|d| **d > 0.0).count();
    if pos != 0 && pos != inc.len() {
        return Err(TorusError::NonMonotoneLift { reason: format!("{pos} of {} angular increments positive", inc.len()) });
    }
    // successors of angle-sorted points must stay in cyclic order
    let mut idx: Vec<usize> = (0..n - 1).collect();
    idx.sort_by(|&a, &b| ang[a].total_cmp(&ang[b]));
    let img: Vec<f64> = idx.iter().map(|&i| ang[i + 1]).collect();
    let descents = (0..img.len()).filter(|&k| img[(k + 1) % img.len()] < img[k]).count();
    if descents > 1 {
        return Err(TorusError::NonMonotoneLift { reason: format!("cyclic order broken at {descents} places") });
    }
    let h = inc.len() / 2;
    let rho = weighted_mean(&inc) / (2.0 * PI);
    let a = weighted_mean(&inc[..h]) / (2.0 * PI);
    let b = weighted_mean(&inc[h..]) / (2.0 * PI);
    Ok(RotationEstimate { rho, uncertainty: (a - b).abs(), iterates: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rigid_rotation() {
        let a = 0.7345;
        let orbit: Vec<[f64; 2]> = (0..512).map(|n| { let t = n as f64 * a; [3.0 + t.cos(), 1.0 + t.sin()] }).collect();
        let r = rotation_number(&orbit, [3.0, 1.0]).unwrap();
        assert!((r.rho - a / (2.0 * PI)).abs() < 1e-12, "{}", r.rho);
        let back: Vec<[f64; 2]> = orbit.iter().rev().copied().collect();
        assert!((rotation_number(&back, [3.0, 1.0]).unwrap().rho + a / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn random_cloud_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cloud: Vec<[f64; 2]> = (0..400).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        assert!(matches!(rotation_number(&cloud, [0.0, 0.0]), Err(TorusError::NonMonotoneLift { .. })));
    }

    #[test]
    fn short_orbit_rejected() {
        let o = vec![[1.0, 0.0]; 10];
        assert!(matches!(rotation_number(&o, [0.0, 0.0]), Err(TorusError::TooFewIterates { .. })));
    }
}
