//! Value-only (bandit) feedback machinery: deterministic unit perturbations,
//! the one-point gradient estimator, and a Monte-Carlo oracle for the
//! ball-smoothed function that tests compare against.
//!
//! All randomness is counter-keyed, so the perturbation a node sees at a
//! given round is a pure function of (seed, node, round) and never depends on
//! evaluation order.

use crate::rng;
use crate::vecops::norm;
use rand::Rng;
use rand_distr::StandardNormal;

/// Uniform point on the unit sphere S^{dim-1}: normalized Gaussian draw.
pub fn sphere_point(dim: usize, seed: u64, node: u64, index: u64) -> Vec<f64> {
    let mut r = rng::keyed(rng::tag::SPHERE, seed, node, index);
    loop {
        let u: Vec<f64> = (0..dim).map(|_| r.sample(StandardNormal)).collect();
        let n = norm(&u);
        // A zero draw has probability 0 but would poison the normalization.
        if n > 1e-300 {
            return u.iter().map(|v| v / n).collect();
        }
    }
}

/// Uniform point in the closed unit ball: sphere direction scaled by U^(1/dim).
pub fn ball_point(dim: usize, seed: u64, node: u64, index: u64) -> Vec<f64> {
    let mut r = rng::keyed(rng::tag::SMOOTHING, seed, node, index);
    let (dir, radius) = loop {
        let u: Vec<f64> = (0..dim).map(|_| r.sample(StandardNormal)).collect();
        let n = norm(&u);
        if n > 1e-300 {
            break (u, n);
        }
    };
    let scale = r.random::<f64>().powf(1.0 / dim as f64) / radius;
    dir.iter().map(|v| scale * v).collect()
}

/// One-point gradient estimate (dim / delta) * value * u from a single
/// function evaluation at the perturbed play; `u` must be a unit vector.
pub fn one_point_estimate(value: f64, delta: f64, u: &[f64]) -> Vec<f64> {
    let scale = u.len() as f64 / delta * value;
    u.iter().map(|v| scale * v).collect()
}

/// Accumulating form used when a learner sums a block's estimates in place.
pub fn add_one_point_estimate(value: f64, delta: f64, u: &[f64], out: &mut [f64]) {
    debug_assert_eq!(u.len(), out.len());
    let scale = u.len() as f64 / delta * value;
    for (o, v) in out.iter_mut().zip(u) {
        *o += scale * v;
    }
}

/// Monte-Carlo estimate of the ball-smoothed value E_{v ~ B^dim}[f(x + delta v)]
/// with its standard error. Test oracle only; never used by learners.
pub fn smoothed_value_mc<F: Fn(&[f64]) -> f64>(
    f: F,
    x: &[f64],
    delta: f64,
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    assert!(samples >= 2);
    let dim = x.len();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut point = vec![0.0; dim];
    for i in 0..samples {
        let v = ball_point(dim, seed, 0, i as u64);
        for k in 0..dim {
            point[k] = x[k] + delta * v[k];
        }
        let val = f(&point);
        sum += val;
        sum_sq += val * val;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecops::norm_sq;

    #[test]
    fn sphere_points_are_unit_and_deterministic() {
        for dim in [1usize, 2, 17] {
            let u = sphere_point(dim, 42, 3, 9);
            assert!((norm(&u) - 1.0).abs() < 1e-12);
            assert_eq!(u, sphere_point(dim, 42, 3, 9));
        }
        assert_ne!(sphere_point(4, 42, 3, 9), sphere_point(4, 42, 3, 10));
        assert_ne!(sphere_point(4, 42, 3, 9), sphere_point(4, 42, 4, 9));
    }

    #[test]
    fn ball_points_are_interior_and_deterministic() {
        let mut max_r = 0.0f64;
        for i in 0..200 {
            let v = ball_point(3, 7, 0, i);
            let r = norm(&v);
            assert!(r <= 1.0 + 1e-12);
            max_r = max_r.max(r);
        }
        assert!(max_r > 0.8, "radii should fill the ball, saw max {max_r}");
        assert_eq!(ball_point(3, 7, 0, 5), ball_point(3, 7, 0, 5));
    }

    #[test]
    fn estimator_scale_matches_definition() {
        let u = [0.6, 0.8];
        let g = one_point_estimate(3.0, 0.5, &u);
        // (2 / 0.5) * 3 = 12 times u.
        assert!((g[0] - 7.2).abs() < 1e-12 && (g[1] - 9.6).abs() < 1e-12);
        let mut acc = vec![1.0, 1.0];
        add_one_point_estimate(3.0, 0.5, &u, &mut acc);
        assert!((acc[0] - 8.2).abs() < 1e-12 && (acc[1] - 10.6).abs() < 1e-12);
    }

    #[test]
    fn smoothed_square_norm_at_origin() {
        // E||v||^2 over the unit ball in R^2 is 1/2.
        let (mean, se) = smoothed_value_mc(norm_sq, &[0.0, 0.0], 1.0, 20_000, 11);
        assert!((mean - 0.5).abs() < 3.0 * se + 1e-3, "mean {mean}, se {se}");
    }
}
