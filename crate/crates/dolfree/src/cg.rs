//! Conditional-gradient (Frank-Wolfe) minimization of the quadratic
//! surrogates used by the block learners.
//!
//! The surrogate is F(x) = <z, x> + (quad/2)||x||^2 + h||x - anchor||^2.
//! Its gradient is z + quad*x + 2h(x - anchor) and its curvature constant is
//! quad + 2h, which makes the exact line search along a segment closed-form.

use crate::geometry::{DecisionSet, GeometryError};
use crate::vecops::{dot, norm_sq};

/// Borrows its vectors so per-block construction costs nothing even at
/// matrix-variable dimensions.
#[derive(Clone, Copy, Debug)]
pub struct Surrogate<'a> {
    pub z: &'a [f64],
    /// Coefficient of (1/2)||x||^2.
    pub quad_coeff: f64,
    /// Coefficient of ||x - anchor||^2.
    pub h: f64,
    pub anchor: &'a [f64],
}

impl<'a> Surrogate<'a> {
    pub fn new(z: &'a [f64], quad_coeff: f64, h: f64, anchor: &'a [f64]) -> Self {
        debug_assert_eq!(z.len(), anchor.len());
        debug_assert!(quad_coeff >= 0.0 && h >= 0.0);
        Self { z, quad_coeff, h, anchor }
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        let mut shift_sq = 0.0;
        for (xi, ai) in x.iter().zip(self.anchor) {
            let d = xi - ai;
            shift_sq += d * d;
        }
        dot(self.z, x) + 0.5 * self.quad_coeff * norm_sq(x) + self.h * shift_sq
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        let two_h = 2.0 * self.h;
        for i in 0..x.len() {
            out[i] = self.z[i] + self.quad_coeff * x[i] + two_h * (x[i] - self.anchor[i]);
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_into(x, &mut out);
        out
    }

    /// Smoothness constant of the surrogate (largest Hessian eigenvalue).
    pub fn curvature(&self) -> f64 {
        self.quad_coeff + 2.0 * self.h
    }

    /// argmin over s in [0, 1] of F(c + s(v - c)), exact because F is quadratic
    /// along the segment. Returns 0 when v == c.
    pub fn line_search(&self, c: &[f64], v: &[f64]) -> f64 {
        let mut dir_sq = 0.0;
        let mut grad_dir = 0.0;
        let two_h = 2.0 * self.h;
        for i in 0..c.len() {
            let d = v[i] - c[i];
            dir_sq += d * d;
            let g = self.z[i] + self.quad_coeff * c[i] + two_h * (c[i] - self.anchor[i]);
            grad_dir += g * d;
        }
        if dir_sq == 0.0 {
            return 0.0;
        }
        (-grad_dir / (self.curvature() * dir_sq)).clamp(0.0, 1.0)
    }
}

/// Runs exactly `iters` conditional-gradient steps from `start`, each one an
/// LMO call at the current gradient followed by an exact line search. No
/// early-termination rule: callers budget LMO calls, not accuracy, so each
/// invocation costs precisely `iters` oracle calls.
pub fn cg_minimize(
    set: &DecisionSet,
    surrogate: &Surrogate<'_>,
    start: &[f64],
    iters: usize,
) -> Result<Vec<f64>, GeometryError> {
    debug_assert_eq!(start.len(), surrogate.dim());
    let mut c = start.to_vec();
    let mut grad = vec![0.0; c.len()];
    for _ in 0..iters {
        surrogate.gradient_into(&c, &mut grad);
        let v = set.lmo(&grad)?;
        let s = surrogate.line_search(&c, &v);
        for i in 0..c.len() {
            c[i] += s * (v[i] - c[i]);
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DecisionSet;

    fn hand_surrogate() -> Surrogate<'static> {
        Surrogate::new(&[2.0, -2.0], 4.0, 0.5, &[1.0, 1.0])
    }

    #[test]
    fn value_matches_hand_computation() {
        // <z,x> = -2; (q/2)||x||^2 = 2; h||x-a||^2 = 0.5 * 1 = 0.5.
        let f = hand_surrogate();
        assert!((f.value(&[0.0, 1.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = hand_surrogate();
        let x = [0.3, -0.7];
        let g = f.gradient(&x);
        let eps = 1e-6;
        for i in 0..2 {
            let mut hi = x;
            let mut lo = x;
            hi[i] += eps;
            lo[i] -= eps;
            let fd = (f.value(&hi) - f.value(&lo)) / (2.0 * eps);
            assert!((g[i] - fd).abs() < 1e-6, "coord {i}: {} vs {}", g[i], fd);
        }
    }

    #[test]
    fn line_search_hits_interior_optimum() {
        // F(x) = ||x||^2 (z = 0, quad = 2, h = 0), c = (1, 0), v = (-1, 0):
        // minimum along the segment sits at the midpoint s = 0.5.
        let f = Surrogate::new(&[0.0, 0.0], 2.0, 0.0, &[0.0, 0.0]);
        let s = f.line_search(&[1.0, 0.0], &[-1.0, 0.0]);
        assert!((s - 0.5).abs() < 1e-15);
    }

    #[test]
    fn line_search_clamps_and_handles_zero_segment() {
        let f = hand_surrogate();
        assert_eq!(f.line_search(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        // Moving away from the minimizer must be rejected outright.
        let g = Surrogate::new(&[0.0, 0.0], 2.0, 0.0, &[0.0, 0.0]);
        assert_eq!(g.line_search(&[0.1, 0.0], &[1.0, 0.0]), 0.0);
    }

    #[test]
    fn cg_approaches_vertex_optimum() {
        // Over the l1 ball of radius 1 with the linear term pulling along
        // +e0, the minimizer is the vertex (1, 0).
        let set = DecisionSet::l1_ball(1.0, 2).unwrap();
        let f = Surrogate::new(&[-10.0, 0.0], 0.0, 1.0, &[0.0, 0.0]);
        let out = cg_minimize(&set, &f, &[0.0, 0.0], 200).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-2, "{out:?}");
        assert!(out[1].abs() < 1e-2);
    }

    #[test]
    fn iterates_stay_feasible_and_value_never_increases() {
        let set = DecisionSet::hypercube(1.0, 3).unwrap();
        let f = Surrogate::new(&[1.0, -2.0, 0.5], 3.0, 0.25, &[0.2, -0.1, 0.0]);
        let mut c = set.origin();
        let mut prev = f.value(&c);
        for _ in 0..40 {
            c = cg_minimize(&set, &f, &c, 1).unwrap();
            let cur = f.value(&c);
            assert!(set.contains(&c, 1e-12));
            assert!(cur <= prev + 1e-12, "value increased: {prev} -> {cur}");
            prev = cur;
        }
    }
}
