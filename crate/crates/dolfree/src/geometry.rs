//! Feasible decision sets and their linear minimization oracles.
//!
//! Every set exposes `lmo(direction) = argmin <direction, x>` over the set,
//! the primitive that replaces projection throughout this crate, plus a
//! membership test, inradius/circumradius, and multiplicative shrinking for
//! bandit runs (a point of the shrunk set stays feasible after any
//! perturbation of norm up to the shrink amount).

use crate::rng;
use crate::vecops::{dot, norm};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug, PartialEq)]
pub enum SetKind {
    /// `[-a, a]^d`; inradius a, circumradius a*sqrt(d).
    Hypercube { halfwidth: f64 },
    /// `{ x : sum|x_i| <= tau }`; inradius tau/sqrt(d), circumradius tau.
    L1Ball { tau: f64 },
    /// `{ x : ||x||_2 <= radius }`.
    EuclideanBall { radius: f64 },
    /// `{ X in R^{rows x cols} : sum of singular values <= tau }`, stored
    /// row-major; inradius tau/sqrt(min(rows, cols)), circumradius tau.
    TraceNormBall { tau: f64, rows: usize, cols: usize },
}

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("input has {got} entries, set expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("direction contains a non-finite entry")]
    NonFinite,
    #[error("invalid set parameter: {0}")]
    BadParameter(String),
    #[error("power iteration stalled after {iters} iterations (last Rayleigh change {residual:.3e})")]
    PowerIterationStalled { iters: usize, residual: f64 },
    #[error("shrink amount {delta} must lie in (0, {inradius}) for this set")]
    ShrinkOutOfRange { delta: f64, inradius: f64 },
}

#[derive(Clone, Debug)]
pub struct DecisionSet {
    kind: SetKind,
    dim: usize,
}

impl DecisionSet {
    pub fn hypercube(halfwidth: f64, dim: usize) -> Result<Self, GeometryError> {
        require_positive(halfwidth, "halfwidth")?;
        require_dim(dim)?;
        Ok(Self { kind: SetKind::Hypercube { halfwidth }, dim })
    }

    pub fn l1_ball(tau: f64, dim: usize) -> Result<Self, GeometryError> {
        require_positive(tau, "tau")?;
        require_dim(dim)?;
        Ok(Self { kind: SetKind::L1Ball { tau }, dim })
    }

    pub fn euclidean_ball(radius: f64, dim: usize) -> Result<Self, GeometryError> {
        require_positive(radius, "radius")?;
        require_dim(dim)?;
        Ok(Self { kind: SetKind::EuclideanBall { radius }, dim })
    }

    pub fn trace_norm_ball(tau: f64, rows: usize, cols: usize) -> Result<Self, GeometryError> {
        require_positive(tau, "tau")?;
        if rows == 0 || cols == 0 {
            return Err(GeometryError::BadParameter("matrix sides must be positive".into()));
        }
        Ok(Self { kind: SetKind::TraceNormBall { tau, rows, cols }, dim: rows * cols })
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    /// Flattened ambient dimension (rows * cols for matrix sets).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest r such that the Euclidean ball of radius r fits inside the set.
    pub fn inradius(&self) -> f64 {
        match self.kind {
            SetKind::Hypercube { halfwidth } => halfwidth,
            SetKind::L1Ball { tau } => tau / (self.dim as f64).sqrt(),
            SetKind::EuclideanBall { radius } => radius,
            SetKind::TraceNormBall { tau, rows, cols } => tau / (rows.min(cols) as f64).sqrt(),
        }
    }

    /// Smallest R such that every member has Euclidean (Frobenius) norm <= R.
    pub fn circumradius(&self) -> f64 {
        match self.kind {
            SetKind::Hypercube { halfwidth } => halfwidth * (self.dim as f64).sqrt(),
            SetKind::L1Ball { tau } => tau,
            SetKind::EuclideanBall { radius } => radius,
            SetKind::TraceNormBall { tau, .. } => tau,
        }
    }

    pub fn origin(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    /// Extreme point minimizing `<direction, x>` over the set.
    ///
    /// An all-zero direction is replaced by the first canonical basis vector
    /// so the result stays deterministic when a surrogate gradient vanishes.
    pub fn lmo(&self, direction: &[f64]) -> Result<Vec<f64>, GeometryError> {
        self.check_shape(direction)?;
        if direction.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if direction.iter().all(|&v| v == 0.0) {
            let mut canonical = vec![0.0; self.dim];
            canonical[0] = 1.0;
            return self.lmo_nonzero(&canonical);
        }
        self.lmo_nonzero(direction)
    }

    fn lmo_nonzero(&self, direction: &[f64]) -> Result<Vec<f64>, GeometryError> {
        match self.kind {
            SetKind::Hypercube { halfwidth } => {
                // Coordinate-wise sign rule; zero coordinates count as positive.
                Ok(direction.iter().map(|&v| if v >= 0.0 { -halfwidth } else { halfwidth }).collect())
            }
            SetKind::L1Ball { tau } => {
                let mut best = 0usize;
                let mut best_abs = direction[0].abs();
                for (j, &v) in direction.iter().enumerate().skip(1) {
                    if v.abs() > best_abs {
                        best = j;
                        best_abs = v.abs();
                    }
                }
                let mut out = vec![0.0; self.dim];
                out[best] = if direction[best] >= 0.0 { -tau } else { tau };
                Ok(out)
            }
            SetKind::EuclideanBall { radius } => {
                let scale = -radius / norm(direction);
                Ok(direction.iter().map(|&v| scale * v).collect())
            }
            SetKind::TraceNormBall { tau, rows, cols } => {
                let (u, v) = top_singular_pair(direction, rows, cols)?;
                let mut out = vec![0.0; self.dim];
                for i in 0..rows {
                    for j in 0..cols {
                        out[i * cols + j] = -tau * u[i] * v[j];
                    }
                }
                Ok(out)
            }
        }
    }

    /// Membership up to a relative tolerance on the set's defining norm.
    /// A shape mismatch is never a member.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim {
            return false;
        }
        match self.kind {
            SetKind::Hypercube { halfwidth } => {
                x.iter().all(|v| v.abs() <= halfwidth * (1.0 + tol))
            }
            SetKind::L1Ball { tau } => x.iter().map(|v| v.abs()).sum::<f64>() <= tau * (1.0 + tol),
            SetKind::EuclideanBall { radius } => norm(x) <= radius * (1.0 + tol),
            SetKind::TraceNormBall { tau, rows, cols } => {
                nuclear_norm(x, rows, cols) <= tau * (1.0 + tol)
            }
        }
    }

    /// Set scaled by `(1 - delta / inradius)`. Any member of the result plus
    /// any perturbation of Euclidean norm `delta` stays inside the original.
    pub fn shrink(&self, delta: f64) -> Result<Self, GeometryError> {
        let r = self.inradius();
        if !(delta > 0.0 && delta < r) {
            return Err(GeometryError::ShrinkOutOfRange { delta, inradius: r });
        }
        let f = 1.0 - delta / r;
        let kind = match self.kind {
            SetKind::Hypercube { halfwidth } => SetKind::Hypercube { halfwidth: f * halfwidth },
            SetKind::L1Ball { tau } => SetKind::L1Ball { tau: f * tau },
            SetKind::EuclideanBall { radius } => SetKind::EuclideanBall { radius: f * radius },
            SetKind::TraceNormBall { tau, rows, cols } => {
                SetKind::TraceNormBall { tau: f * tau, rows, cols }
            }
        };
        Ok(Self { kind, dim: self.dim })
    }

    /// Random member used by constant estimation and property tests. Uniform
    /// for the vector sets; for the trace-norm ball, a Gaussian matrix with a
    /// uniformly rescaled nuclear norm (spread over the set, not uniform).
    pub fn random_member<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match self.kind {
            SetKind::Hypercube { halfwidth } => {
                (0..self.dim).map(|_| rng.random_range(-halfwidth..=halfwidth)).collect()
            }
            SetKind::L1Ball { tau } => {
                // Signed Dirichlet directions scaled by U^{1/d} are uniform in the ball.
                let mut out: Vec<f64> = (0..self.dim)
                    .map(|_| {
                        let e: f64 = -rng.random::<f64>().max(f64::MIN_POSITIVE).ln();
                        if rng.random::<bool>() { e } else { -e }
                    })
                    .collect();
                let total: f64 = out.iter().map(|v| v.abs()).sum();
                let scale = tau * rng.random::<f64>().powf(1.0 / self.dim as f64) / total;
                for v in &mut out {
                    *v *= scale;
                }
                out
            }
            SetKind::EuclideanBall { radius } => {
                let mut out: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
                let n = norm(&out).max(f64::MIN_POSITIVE);
                let scale = radius * rng.random::<f64>().powf(1.0 / self.dim as f64) / n;
                for v in &mut out {
                    *v *= scale;
                }
                out
            }
            SetKind::TraceNormBall { tau, rows, cols } => {
                let mut out: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
                let nn = nuclear_norm(&out, rows, cols).max(f64::MIN_POSITIVE);
                let scale = tau * rng.random::<f64>() / nn;
                for v in &mut out {
                    *v *= scale;
                }
                out
            }
        }
    }

    fn check_shape(&self, x: &[f64]) -> Result<(), GeometryError> {
        if x.len() != self.dim {
            return Err(GeometryError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }
}

fn require_positive(v: f64, name: &str) -> Result<(), GeometryError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(GeometryError::BadParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn require_dim(dim: usize) -> Result<(), GeometryError> {
    if dim == 0 {
        Err(GeometryError::BadParameter("dimension must be positive".into()))
    } else {
        Ok(())
    }
}

/// Sum of singular values via a full SVD; used only for membership tests.
pub fn nuclear_norm(x: &[f64], rows: usize, cols: usize) -> f64 {
    let m = nalgebra::DMatrix::from_row_slice(rows, cols, x);
    m.singular_values().iter().sum()
}

/// Top singular pair (u, v) of a row-major `rows x cols` matrix by power
/// iteration on the smaller Gram side, from a deterministic seeded start.
///
/// Each round runs up to `10 * max(rows, cols)` iterations, stopping early
/// once the relative Rayleigh-quotient change drops below 1e-10, and then
/// applies a Rayleigh-Ritz step on span{b, G b}. Plain power iteration slows
/// to a crawl when the top two eigenvalues nearly tie, but in exactly that
/// regime the iterate already lives in their joint plane, so the 2x2 Ritz
/// problem rotates it onto the top eigenvector almost exactly. Acceptance is
/// gated on the relative eigen-residual ||G b - r b|| / r <= 1e-9, which
/// pins the rank-1 objective to ~1e-9 relative accuracy independent of the
/// spectral gap. Three or more eigenvalues tying (a nearly isotropic matrix,
/// typical for a gradient vanishing near an interior optimum) defeats the
/// 2x2 Ritz step too, so after three plateaued rounds the matrix goes to an
/// exact SVD instead; a stall is reported only if that also fails.
fn top_singular_pair(a: &[f64], rows: usize, cols: usize) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    let iterate_left = rows <= cols; // iterate on A A^T (rows x rows) when it is smaller
    let side = if iterate_left { rows } else { cols };
    let cap = 10 * rows.max(cols);
    const ROUNDS: usize = 3;
    const RESIDUAL_ACCEPT: f64 = 1e-9;

    // Gram matrix of the smaller side.
    let mut gram = vec![0.0; side * side];
    for i in 0..side {
        for j in 0..=i {
            let mut s = 0.0;
            if iterate_left {
                for k in 0..cols {
                    s += a[i * cols + k] * a[j * cols + k];
                }
            } else {
                for k in 0..rows {
                    s += a[k * cols + i] * a[k * cols + j];
                }
            }
            gram[i * side + j] = s;
            gram[j * side + i] = s;
        }
    }
    let matvec = |b: &[f64], out: &mut [f64]| {
        for i in 0..side {
            out[i] = dot(&gram[i * side..(i + 1) * side], b);
        }
    };

    let mut rng = rng::keyed(rng::tag::POWER_ITER, 0, rows as u64, cols as u64);
    let mut b: Vec<f64> = (0..side).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let bn = norm(&b);
    for v in &mut b {
        *v /= bn;
    }

    let mut next = vec![0.0; side];
    let mut last_residual = f64::INFINITY;
    for round in 0..ROUNDS {
        let mut rayleigh_prev = f64::INFINITY;
        for _ in 0..cap {
            matvec(&b, &mut next);
            let rayleigh = dot(&b, &next); // b is unit, so this is the quotient
            let nn = norm(&next);
            if nn == 0.0 {
                // b landed exactly in the null space; restart from a fresh vector.
                b = (0..side).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let bn = norm(&b);
                for v in &mut b {
                    *v /= bn;
                }
                rayleigh_prev = f64::INFINITY;
                continue;
            }
            for i in 0..side {
                b[i] = next[i] / nn;
            }
            if (rayleigh - rayleigh_prev).abs() <= 1e-10 * rayleigh.max(f64::MIN_POSITIVE) {
                break;
            }
            rayleigh_prev = rayleigh;
        }

        // Ritz step on span{b, G b}: exact when everything outside the top
        // two eigendirections has already decayed.
        matvec(&b, &mut next);
        let r = dot(&b, &next);
        let mut q: Vec<f64> = next.iter().zip(&b).map(|(g, bi)| g - r * bi).collect();
        let qn = norm(&q);
        if qn > 1e-14 * norm(&next).max(f64::MIN_POSITIVE) {
            for x in &mut q {
                *x /= qn;
            }
            let mut gq = vec![0.0; side];
            matvec(&q, &mut gq);
            // Projected 2x2 matrix [[r, s], [s, t]]; G b = r b + qn q exactly.
            let s = qn;
            let t = dot(&q, &gq);
            let half = (r - t) / 2.0;
            let top = (r + t) / 2.0 + (half * half + s * s).sqrt();
            // Top eigenvector of the 2x2 block, larger formula for stability.
            let (c, d) = if (top - r).abs() >= (top - t).abs() {
                (s, top - r)
            } else {
                (top - t, s)
            };
            let cd = (c * c + d * d).sqrt();
            if cd > 0.0 {
                for i in 0..side {
                    b[i] = (c * b[i] + d * q[i]) / cd;
                }
                let bn = norm(&b);
                for x in &mut b {
                    *x /= bn;
                }
            }
        }

        matvec(&b, &mut next);
        let r = dot(&b, &next);
        let mut residual_sq = 0.0;
        for i in 0..side {
            let e = next[i] - r * b[i];
            residual_sq += e * e;
        }
        last_residual = residual_sq.sqrt() / r.max(f64::MIN_POSITIVE);
        if last_residual <= RESIDUAL_ACCEPT {
            break;
        }
        if round + 1 == ROUNDS {
            return svd_top_pair(a, rows, cols).ok_or(GeometryError::PowerIterationStalled {
                iters: ROUNDS * cap,
                residual: last_residual,
            });
        }
    }
    debug_assert!(last_residual <= RESIDUAL_ACCEPT);

    // Recover the other side's vector through A.
    if iterate_left {
        let u = b;
        let mut v = vec![0.0; cols];
        for k in 0..cols {
            let mut s = 0.0;
            for i in 0..rows {
                s += a[i * cols + k] * u[i];
            }
            v[k] = s;
        }
        let sigma = norm(&v);
        if sigma == 0.0 {
            return Err(GeometryError::PowerIterationStalled { iters: cap, residual: 0.0 });
        }
        for x in &mut v {
            *x /= sigma;
        }
        Ok((u, v))
    } else {
        let v = b;
        let mut u = vec![0.0; rows];
        for (i, out) in u.iter_mut().enumerate() {
            *out = dot(&a[i * cols..(i + 1) * cols], &v);
        }
        let sigma = norm(&u);
        if sigma == 0.0 {
            return Err(GeometryError::PowerIterationStalled { iters: cap, residual: 0.0 });
        }
        for x in &mut u {
            *x /= sigma;
        }
        Ok((u, v))
    }
}

/// Exact top singular pair through a full SVD: the slow path taken when the
/// spectrum is too tied for power iteration to separate. Deterministic, and
/// cheap at the matrix shapes this crate works with.
fn svd_top_pair(a: &[f64], rows: usize, cols: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = nalgebra::DMatrix::from_row_slice(rows, cols, a);
    let svd = m.try_svd(true, true, f64::EPSILON, 0)?;
    let (u, vt) = (svd.u.as_ref()?, svd.v_t.as_ref()?);
    let mut best = 0;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > svd.singular_values[best] {
            best = i;
        }
    }
    if svd.singular_values[best] == 0.0 {
        return None;
    }
    let uvec: Vec<f64> = (0..rows).map(|i| u[(i, best)]).collect();
    let vvec: Vec<f64> = (0..cols).map(|j| vt[(best, j)]).collect();
    Some((uvec, vvec))
}

/// Euclidean projection is deliberately absent: every algorithm in this crate
/// touches the feasible set through `lmo` and `contains` only.
#[allow(dead_code)]
fn _no_projection() {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypercube_lmo_follows_sign_rule() {
        let set = DecisionSet::hypercube(1.0, 2).unwrap();
        assert_eq!(set.lmo(&[1.0, -2.0]).unwrap(), vec![-1.0, 1.0]);
    }

    #[test]
    fn l1_lmo_picks_largest_coordinate() {
        let set = DecisionSet::l1_ball(10.0, 3).unwrap();
        assert_eq!(set.lmo(&[0.5, -3.0, 1.0]).unwrap(), vec![0.0, 10.0, 0.0]);
    }

    #[test]
    fn l1_lmo_breaks_ties_on_first_index() {
        let set = DecisionSet::l1_ball(2.0, 3).unwrap();
        assert_eq!(set.lmo(&[1.0, -1.0, 1.0]).unwrap(), vec![-2.0, 0.0, 0.0]);
    }

    #[test]
    fn euclidean_lmo_is_negated_unit_direction() {
        let set = DecisionSet::euclidean_ball(2.0, 2).unwrap();
        let out = set.lmo(&[3.0, 4.0]).unwrap();
        assert!((out[0] + 1.2).abs() < 1e-12 && (out[1] + 1.6).abs() < 1e-12);
    }

    #[test]
    fn trace_lmo_on_diagonal_direction() {
        // Top singular pair of diag(3, -1) is (e0, e0) with value 3, so the
        // minimizer is -50 at entry (0, 0). The power iteration stops on
        // Rayleigh-quotient stability, which leaves ~1e-5 in the vector
        // entries; the objective value is far more accurate than that.
        let set = DecisionSet::trace_norm_ball(50.0, 2, 2).unwrap();
        let direction = [3.0, 0.0, 0.0, -1.0];
        let out = set.lmo(&direction).unwrap();
        assert!((out[0] + 50.0).abs() < 1e-4, "{out:?}");
        assert!(out[1].abs() < 1e-4 && out[2].abs() < 1e-4 && out[3].abs() < 1e-4, "{out:?}");
        let objective: f64 = direction.iter().zip(&out).map(|(d, o)| d * o).sum();
        assert!((objective + 150.0).abs() < 1e-6, "{objective}");
    }

    #[test]
    fn zero_direction_falls_back_to_first_basis_vector() {
        let cube = DecisionSet::hypercube(1.0, 2).unwrap();
        assert_eq!(cube.lmo(&[0.0, 0.0]).unwrap(), cube.lmo(&[1.0, 0.0]).unwrap());
        let ball = DecisionSet::euclidean_ball(3.0, 3).unwrap();
        assert_eq!(ball.lmo(&[0.0; 3]).unwrap(), vec![-3.0, 0.0, 0.0]);
        let trace = DecisionSet::trace_norm_ball(5.0, 2, 3).unwrap();
        let out = trace.lmo(&[0.0; 6]).unwrap();
        assert!((out[0] + 5.0).abs() < 1e-9);
        assert!(out[1..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn svd_fallback_handles_tied_spectra() {
        // Five exactly equal singular values: no gap for power iteration to
        // exploit, so the fallback must still return a unit pair hitting the
        // top value.
        let mut a = vec![0.0; 35];
        for i in 0..5 {
            a[i * 7 + i] = 2.0;
        }
        let (u, v) = svd_top_pair(&a, 5, 7).unwrap();
        let mut obj = 0.0;
        for i in 0..5 {
            for j in 0..7 {
                obj += a[i * 7 + j] * u[i] * v[j];
            }
        }
        assert!((obj - 2.0).abs() < 1e-9, "{obj}");
        assert!((norm(&u) - 1.0).abs() < 1e-12 && (norm(&v) - 1.0).abs() < 1e-12);
        assert!(svd_top_pair(&[0.0; 35], 5, 7).is_none());
    }

    #[test]
    fn non_finite_direction_is_rejected() {
        let set = DecisionSet::hypercube(1.0, 2).unwrap();
        assert!(matches!(set.lmo(&[f64::NAN, 0.0]), Err(GeometryError::NonFinite)));
    }

    #[test]
    fn l1_membership_boundary() {
        let set = DecisionSet::l1_ball(10.0, 2).unwrap();
        assert!(set.contains(&[5.0, 5.0], 0.0));
        assert!(!set.contains(&[5.0, 5.1], 0.0));
    }

    #[test]
    fn trace_membership_counts_all_singular_values() {
        let set = DecisionSet::trace_norm_ball(50.0, 2, 2).unwrap();
        // 50 * identity has nuclear norm 100.
        assert!(!set.contains(&[50.0, 0.0, 0.0, 50.0], 0.0));
        assert!(set.contains(&[25.0, 0.0, 0.0, 25.0], 1e-12));
    }

    #[test]
    fn shrink_rescales_parameters() {
        let cube = DecisionSet::hypercube(1.0, 4).unwrap();
        let shrunk = cube.shrink(0.5).unwrap();
        assert_eq!(*shrunk.kind(), SetKind::Hypercube { halfwidth: 0.5 });

        let l1 = DecisionSet::l1_ball(10.0, 4).unwrap(); // inradius 5
        let shrunk = l1.shrink(1.0).unwrap();
        assert_eq!(*shrunk.kind(), SetKind::L1Ball { tau: 8.0 });
    }

    #[test]
    fn shrink_rejects_degenerate_amounts() {
        let cube = DecisionSet::hypercube(1.0, 4).unwrap();
        assert!(matches!(cube.shrink(1.0), Err(GeometryError::ShrinkOutOfRange { .. })));
        assert!(matches!(cube.shrink(1.5), Err(GeometryError::ShrinkOutOfRange { .. })));
        assert!(matches!(cube.shrink(0.0), Err(GeometryError::ShrinkOutOfRange { .. })));
    }

    #[test]
    fn radii_match_definitions() {
        let cube = DecisionSet::hypercube(2.0, 9).unwrap();
        assert!((cube.inradius() - 2.0).abs() < 1e-15);
        assert!((cube.circumradius() - 6.0).abs() < 1e-15);

        let l1 = DecisionSet::l1_ball(10.0, 4).unwrap();
        assert!((l1.inradius() - 5.0).abs() < 1e-15);
        assert!((l1.circumradius() - 10.0).abs() < 1e-15);

        let tr = DecisionSet::trace_norm_ball(50.0, 5, 7).unwrap();
        assert!((tr.inradius() - 50.0 / 5f64.sqrt()).abs() < 1e-12);
        assert!((tr.circumradius() - 50.0).abs() < 1e-15);
    }
}
