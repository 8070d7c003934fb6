//! ADMM solver for the fused joint graphical lasso.
//!
//! For `K` groups with covariance matrices `S_k` and likelihood weights
//! `n_k`, the solver minimizes
//!
//! ```text
//!   sum_k n_k [ tr(S_k T_k) - logdet T_k ]
//!     + lambda1 * sum_k sum_{i != j} |T_k[i, j]|
//!     + lambda2 * sum_{k < k'} ||T_k - T_k'||_1
//! ```
//!
//! over symmetric positive definite `T_1..T_K`. ADMM alternates an
//! eigendecomposition-based likelihood step (`theta_update`), an exact
//! proximal step for the two penalties (`z_update`, built on `fused_prox`
//! and `soft_threshold`), and a scaled dual update. The consensus iterate
//! `z` carries exact zeros and exact across-group fusion, so graph structure
//! is always read from it.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{CovarianceSet, PenaltyPair, PrecisionSet};

/// Largest supported group count.
///
/// The fused proximal operator enumerates the `2^(K-1)` ordered partitions
/// of the sorted inputs, which is exact but exponential; ten groups (512
/// partitions per matrix entry) is a comfortable ceiling well above typical
/// two-to-five-group studies.
pub const MAX_GROUPS: usize = 10;

/// Default magnitude at or below which a consensus entry counts as zero.
pub const DEFAULT_ZERO_EPS: f64 = 1e-10;

/// ADMM iteration controls.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SolverOptions {
    /// ADMM penalty parameter `rho` (> 0).
    pub admm_rho: f64,
    /// Iteration cap; hitting it reports `converged = false` but still
    /// returns the final iterate.
    pub max_iter: usize,
    /// Relative primal feasibility tolerance.
    pub primal_tol: f64,
    /// Relative dual feasibility tolerance.
    pub dual_tol: f64,
    /// Magnitudes of `z` at or below this count as zero when reading edges.
    pub zero_eps: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            admm_rho: 1.0,
            max_iter: 500,
            primal_tol: 1e-5,
            dual_tol: 1e-5,
            zero_eps: DEFAULT_ZERO_EPS,
        }
    }
}

impl SolverOptions {
    /// Check every field is in range.
    pub fn validate(&self) -> Result<()> {
        if !self.admm_rho.is_finite() || self.admm_rho <= 0.0 {
            return Err(Error::InvalidParameter {
                what: "admm_rho",
                why: format!("must be finite and > 0, got {}", self.admm_rho),
            });
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter {
                what: "max_iter",
                why: "must be at least 1".into(),
            });
        }
        for (name, v) in [("primal_tol", self.primal_tol), ("dual_tol", self.dual_tol)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter {
                    what: name,
                    why: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        if !self.zero_eps.is_finite() || self.zero_eps < 0.0 {
            return Err(Error::InvalidParameter {
                what: "zero_eps",
                why: format!("must be finite and >= 0, got {}", self.zero_eps),
            });
        }
        Ok(())
    }
}

/// What happened during one ADMM solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveReport {
    /// Iterations actually run.
    pub iterations: usize,
    /// Whether both residuals met their tolerances before the cap.
    pub converged: bool,
    /// Final primal residual `||theta - z||_F` (stacked over groups).
    pub primal_residual: f64,
    /// Final dual residual `rho * ||z - z_prev||_F` (stacked over groups).
    pub dual_residual: f64,
    /// Objective value at the returned `theta`.
    pub objective: f64,
}

/// Soft-thresholding: `sign(x) * max(|x| - t, 0)` for `t >= 0`.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Exact proximal operator of the all-pairs fused penalty:
/// minimizes `1/2 ||y - a||^2 + w * sum_{k < k'} |y_k - y_k'|`.
///
/// The operator preserves the input ordering and the input sum; values pull
/// toward each other by up to `w` per more-extreme neighbor and merge
/// exactly once close enough. Exact for `a.len() <= MAX_GROUPS`.
pub fn fused_prox(a: &[f64], w: f64) -> Vec<f64> {
    assert!(
        !a.is_empty() && a.len() <= MAX_GROUPS,
        "fused_prox supports 1..={MAX_GROUPS} groups"
    );
    assert!(w >= 0.0 && w.is_finite(), "fusion weight must be >= 0");
    let mut out = vec![0.0; a.len()];
    fused_prox_assign(a, w, &mut out);
    out
}

/// In-place kernel behind [`fused_prox`]; `a.len() == out.len() <= MAX_GROUPS`.
fn fused_prox_assign(a: &[f64], w: f64, out: &mut [f64]) {
    let k = a.len();
    debug_assert!(k >= 1 && k <= MAX_GROUPS && out.len() == k);
    if k == 1 || w == 0.0 {
        out.copy_from_slice(a);
        return;
    }
    if k == 2 {
        // Closed form: merge to the mean iff |a0 - a1| <= 2w, otherwise
        // move both toward each other by w.
        let d = a[0] - a[1];
        if d.abs() <= 2.0 * w {
            let m = 0.5 * (a[0] + a[1]);
            out[0] = m;
            out[1] = m;
        } else {
            let shift = w * d.signum();
            out[0] = a[0] - shift;
            out[1] = a[1] + shift;
        }
        return;
    }
    fused_prox_enumerate(a, w, out);
}

/// General-`K` exact solution by enumerating contiguous ordered partitions.
///
/// The minimizer preserves the sorted order of `a`, so it is constant on
/// contiguous blocks of the sorted input. A block `B` with `L` elements
/// below it and `U` above it takes the value `mean(a[B]) + w * (U - L)`.
/// Every one of the `2^(k-1)` partitions is scored against the true
/// objective and the best candidate wins, so mis-ordered candidates are
/// never selected.
fn fused_prox_enumerate(a: &[f64], w: f64, out: &mut [f64]) {
    let k = a.len();
    let mut idx = [0usize; MAX_GROUPS];
    for (t, slot) in idx[..k].iter_mut().enumerate() {
        *slot = t;
    }
    idx[..k].sort_by(|&x, &y| {
        a[x].partial_cmp(&a[y])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.cmp(&y))
    });
    let mut sa = [0.0; MAX_GROUPS];
    for t in 0..k {
        sa[t] = a[idx[t]];
    }
    let mut prefix = [0.0; MAX_GROUPS + 1];
    for t in 0..k {
        prefix[t + 1] = prefix[t] + sa[t];
    }

    let mut best = f64::INFINITY;
    let mut best_y = [0.0; MAX_GROUPS];
    let mut y = [0.0; MAX_GROUPS];
    for mask in 0u32..(1u32 << (k - 1)) {
        // Bit t of the mask cuts between sorted positions t and t + 1.
        let mut start = 0usize;
        for t in 0..k {
            let cut_here = t + 1 == k || (mask >> t) & 1 == 1;
            if cut_here {
                let m = (t + 1 - start) as f64;
                let below = start as f64;
                let above = (k - t - 1) as f64;
                let v = (prefix[t + 1] - prefix[start]) / m + w * (above - below);
                for slot in y.iter_mut().take(t + 1).skip(start) {
                    *slot = v;
                }
                start = t + 1;
            }
        }
        let mut obj = 0.0;
        for t in 0..k {
            let d = y[t] - sa[t];
            obj += 0.5 * d * d;
        }
        for t in 0..k {
            for t2 in (t + 1)..k {
                obj += w * (y[t2] - y[t]).abs();
            }
        }
        if obj < best {
            best = obj;
            best_y[..k].copy_from_slice(&y[..k]);
        }
    }
    for t in 0..k {
        out[idx[t]] = best_y[t];
    }
}

/// Likelihood step of ADMM: minimize
/// `n [tr(s T) - logdet T] + rho/2 ||T - a||_F^2` over positive definite `T`.
///
/// With the eigendecomposition `s - (rho/n) a = V diag(d) V^T`, the solution
/// is `V diag(g(d)) V^T` where `g(d) = n/(2 rho) * (-d + sqrt(d^2 + 4 rho/n))`,
/// which is strictly positive, so the step always returns a positive definite
/// matrix. `s` and `a` must be symmetric with matching dimensions.
pub fn theta_update(s: &Array2<f64>, a: &Array2<f64>, n: usize, rho: f64) -> Result<Array2<f64>> {
    if s.dim() != a.dim() {
        return Err(Error::NodeCountMismatch(s.nrows(), a.nrows()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter {
            what: "likelihood weight",
            why: "must be at least 1".into(),
        });
    }
    if !rho.is_finite() || rho <= 0.0 {
        return Err(Error::InvalidParameter {
            what: "admm_rho",
            why: format!("must be finite and > 0, got {rho}"),
        });
    }
    let nf = n as f64;
    let scale = rho / nf;
    let m = s - &a.mapv(|v| v * scale);
    let c = 4.0 * scale;
    linalg::eigen_map_reconstruct(&m, |d| {
        // Equivalent forms of n/(2 rho) (-d + sqrt(d^2 + c)); the second
        // avoids cancellation for large positive d.
        if d <= 0.0 {
            (-d + (d * d + c).sqrt()) / (2.0 * scale)
        } else {
            2.0 / (d + (d * d + c).sqrt())
        }
    })
}

/// Penalty step of ADMM: entrywise over the stacked matrices, apply the
/// fused proximal operator with weight `lambda2 / rho` across groups, then
/// soft-threshold off-diagonal entries by `lambda1 / rho`.
///
/// Inputs are the per-group `theta + u` matrices; outputs are symmetric,
/// carry exact zeros, and fuse across-group values exactly.
pub fn z_update(
    theta_plus_u: &[Array2<f64>],
    lambda1: f64,
    lambda2: f64,
    rho: f64,
) -> Result<Vec<Array2<f64>>> {
    if theta_plus_u.is_empty() || theta_plus_u.len() > MAX_GROUPS {
        return Err(Error::InvalidParameter {
            what: "group count",
            why: format!("need 1..={MAX_GROUPS} groups, got {}", theta_plus_u.len()),
        });
    }
    if !rho.is_finite() || rho <= 0.0 {
        return Err(Error::InvalidParameter {
            what: "admm_rho",
            why: format!("must be finite and > 0, got {rho}"),
        });
    }
    PenaltyPair::new(lambda1, lambda2)?;
    let p = theta_plus_u[0].nrows();
    for m in theta_plus_u {
        if m.nrows() != p || m.ncols() != p {
            return Err(Error::NodeCountMismatch(m.nrows(), p));
        }
    }
    let mut out: Vec<Array2<f64>> = theta_plus_u.iter().map(|m| Array2::zeros(m.dim())).collect();
    z_update_assign(theta_plus_u, lambda1, lambda2, rho, &mut out);
    Ok(out)
}

/// In-place kernel behind [`z_update`]; shapes already validated.
fn z_update_assign(
    theta_plus_u: &[Array2<f64>],
    lambda1: f64,
    lambda2: f64,
    rho: f64,
    out: &mut [Array2<f64>],
) {
    let k = theta_plus_u.len();
    let p = theta_plus_u[0].nrows();
    let w1 = lambda1 / rho;
    let w2 = lambda2 / rho;
    let mut a = [0.0; MAX_GROUPS];
    let mut y = [0.0; MAX_GROUPS];
    for i in 0..p {
        for j in i..p {
            for (g, m) in theta_plus_u.iter().enumerate() {
                // Average the two triangles so tiny asymmetries in the
                // iterates cannot leak into the consensus step.
                a[g] = 0.5 * (m[[i, j]] + m[[j, i]]);
            }
            fused_prox_assign(&a[..k], w2, &mut y[..k]);
            if i != j {
                for val in y[..k].iter_mut() {
                    *val = soft_threshold(*val, w1);
                }
            }
            for (g, m) in out.iter_mut().enumerate() {
                m[[i, j]] = y[g];
                m[[j, i]] = y[g];
            }
        }
    }
}

/// Objective value of the fused joint graphical lasso at the given
/// positive definite matrices.
pub fn fgl_objective(
    cov: &CovarianceSet,
    thetas: &[Array2<f64>],
    penalties: PenaltyPair,
) -> Result<f64> {
    if thetas.len() != cov.n_groups() {
        return Err(Error::GroupCountMismatch(thetas.len(), cov.n_groups()));
    }
    let p = cov.p();
    let mut obj = 0.0;
    for (k, t) in thetas.iter().enumerate() {
        if t.nrows() != p || t.ncols() != p {
            return Err(Error::NodeCountMismatch(t.nrows(), p));
        }
        let s = cov.matrix(k);
        let trace: f64 = s.iter().zip(t.iter()).map(|(a, b)| a * b).sum();
        let logdet = linalg::logdet_pd(t, "precision matrix")?;
        obj += cov.n()[k] as f64 * (trace - logdet);
        let mut l1 = 0.0;
        for i in 0..p {
            for j in (i + 1)..p {
                l1 += t[[i, j]].abs() + t[[j, i]].abs();
            }
        }
        obj += penalties.lambda1() * l1;
    }
    for k in 0..thetas.len() {
        for k2 in (k + 1)..thetas.len() {
            let diff: f64 = thetas[k]
                .iter()
                .zip(thetas[k2].iter())
                .map(|(a, b)| (a - b).abs())
                .sum();
            obj += penalties.lambda2() * diff;
        }
    }
    Ok(obj)
}

/// ADMM iterates carried between solves for warm starting.
#[derive(Debug, Clone)]
pub(crate) struct AdmmState {
    pub(crate) theta: Vec<Array2<f64>>,
    pub(crate) z: Vec<Array2<f64>>,
    pub(crate) u: Vec<Array2<f64>>,
}

impl AdmmState {
    /// Diagonal initialization: `theta = z = diag(1 / s_ii)`, `u = 0`.
    pub(crate) fn cold(cov: &CovarianceSet) -> Self {
        let p = cov.p();
        let theta: Vec<Array2<f64>> = cov
            .matrices()
            .iter()
            .map(|s| {
                Array2::from_diag(&s.diag().mapv(|v| if v > 0.0 { 1.0 / v } else { 1.0 }))
            })
            .collect();
        Self {
            z: theta.clone(),
            u: vec![Array2::zeros((p, p)); cov.n_groups()],
            theta,
        }
    }
}

/// Solve the fused joint graphical lasso from a cold start.
///
/// Returns the fitted precision matrices and a run report. Hitting the
/// iteration cap is not an error: the report says `converged = false` and a
/// warning is logged, but the iterate is still returned.
pub fn solve_fgl(
    cov: &CovarianceSet,
    penalties: PenaltyPair,
    opts: &SolverOptions,
) -> Result<(PrecisionSet, SolveReport)> {
    let mut state = AdmmState::cold(cov);
    let report = solve_fgl_warm(cov, penalties, opts, &mut state)?;
    let fit = PrecisionSet::new(state.theta, state.z)?;
    Ok((fit, report))
}

/// Run ADMM from (and back into) an existing state, enabling warm starts
/// across a penalty grid.
pub(crate) fn solve_fgl_warm(
    cov: &CovarianceSet,
    penalties: PenaltyPair,
    opts: &SolverOptions,
    state: &mut AdmmState,
) -> Result<SolveReport> {
    opts.validate()?;
    let k_count = cov.n_groups();
    if k_count > MAX_GROUPS {
        return Err(Error::InvalidParameter {
            what: "group count",
            why: format!("solver supports at most {MAX_GROUPS} groups, got {k_count}"),
        });
    }
    debug_assert!(state.theta.len() == k_count && state.z.len() == k_count);
    let rho = opts.admm_rho;

    let mut z_old = state.z.clone();
    let mut theta_plus_u = state.z.clone();
    let mut iterations = 0;
    let mut converged = false;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;

    while iterations < opts.max_iter {
        iterations += 1;
        for k in 0..k_count {
            let a = &state.z[k] - &state.u[k];
            state.theta[k] = theta_update(cov.matrix(k), &a, cov.n()[k], rho)?;
        }
        for k in 0..k_count {
            z_old[k].assign(&state.z[k]);
            theta_plus_u[k].assign(&state.theta[k]);
            theta_plus_u[k] += &state.u[k];
        }
        z_update_assign(
            &theta_plus_u,
            penalties.lambda1(),
            penalties.lambda2(),
            rho,
            &mut state.z,
        );
        for k in 0..k_count {
            state.u[k] += &state.theta[k];
            state.u[k] -= &state.z[k];
        }

        let mut r2 = 0.0;
        let mut s2 = 0.0;
        let mut theta_norm2 = 0.0;
        let mut z_norm2 = 0.0;
        let mut u_norm2 = 0.0;
        for k in 0..k_count {
            for ((t, z), (zo, u)) in state.theta[k]
                .iter()
                .zip(state.z[k].iter())
                .zip(z_old[k].iter().zip(state.u[k].iter()))
            {
                r2 += (t - z) * (t - z);
                s2 += (z - zo) * (z - zo);
                theta_norm2 += t * t;
                z_norm2 += z * z;
                u_norm2 += u * u;
            }
        }
        primal = r2.sqrt();
        dual = rho * s2.sqrt();
        let eps_pri = opts.primal_tol * theta_norm2.max(z_norm2).sqrt().max(1.0);
        let eps_dual = opts.dual_tol * (rho * u_norm2.sqrt()).max(1.0);
        if primal <= eps_pri && dual <= eps_dual {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "ADMM stopped at the {}-iteration cap (primal residual {:.3e}, dual {:.3e})",
            opts.max_iter,
            primal,
            dual
        );
    }
    let objective = fgl_objective(cov, &state.theta, penalties)?;
    Ok(SolveReport {
        iterations,
        converged,
        primal_residual: primal,
        dual_residual: dual,
        objective,
    })
}

/// Worst-case stationarity violation of a fitted solution, in max-norm.
///
/// For each group the gradient of the likelihood part is
/// `n_k (S_k - inv(theta_k))`; stationarity requires a penalty subgradient
/// canceling it. Sign patterns are read from the sparse `z` matrices
/// (zero entries and fused pairs leave their subgradient free in `[-1, 1]`);
/// the free coordinates are then chosen to minimize the squared residual by
/// cyclic coordinate descent, which is exact for this box-constrained
/// least-squares problem. A well-converged solve yields values near zero.
pub fn kkt_residual(
    cov: &CovarianceSet,
    penalties: PenaltyPair,
    fit: &PrecisionSet,
    zero_eps: f64,
) -> Result<f64> {
    if fit.n_groups() != cov.n_groups() {
        return Err(Error::GroupCountMismatch(fit.n_groups(), cov.n_groups()));
    }
    if fit.p() != cov.p() {
        return Err(Error::NodeCountMismatch(fit.p(), cov.p()));
    }
    let k_count = cov.n_groups();
    let p = cov.p();
    let l1 = penalties.lambda1();
    let l2 = penalties.lambda2();

    // Likelihood gradients at theta.
    let mut grads = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let inv = linalg::inv_pd(fit.theta(k), "precision matrix")?;
        let nk = cov.n()[k] as f64;
        grads.push((cov.matrix(k) - &inv).mapv(|v| v * nk));
    }

    let mut worst = 0.0f64;
    for i in 0..p {
        for j in i..p {
            // Fixed part of the subgradient equation per group, plus the
            // free box-constrained variables (lasso signs at zeros, fusion
            // signs at ties).
            let mut c = [0.0f64; MAX_GROUPS];
            // Each free variable: (bound scale, per-group coefficient rows).
            let mut free: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
            for k in 0..k_count {
                c[k] = grads[k][[i, j]];
                let v = fit.z(k)[[i, j]];
                if i != j {
                    if v.abs() > zero_eps {
                        c[k] += l1 * v.signum();
                    } else if l1 > 0.0 {
                        free.push((l1, vec![(k, 1.0)]));
                    }
                }
            }
            if l2 > 0.0 {
                for k in 0..k_count {
                    for k2 in (k + 1)..k_count {
                        let d = fit.z(k)[[i, j]] - fit.z(k2)[[i, j]];
                        if d.abs() > zero_eps {
                            c[k] += l2 * d.signum();
                            c[k2] -= l2 * d.signum();
                        } else {
                            free.push((l2, vec![(k, 1.0), (k2, -1.0)]));
                        }
                    }
                }
            }
            let resid = min_max_residual(&c[..k_count], &free);
            worst = worst.max(resid);
        }
    }
    Ok(worst)
}

/// Minimize `max_k |c_k + sum_v a_{k,v} g_v|` over `g_v` in
/// `[-bound_v, bound_v]` and return the attained value.
///
/// Runs cyclic coordinate descent on `sum_k (c_k + ...)^2`; each coordinate
/// step is a closed-form clamp, and for a convex quadratic with separable
/// box constraints this converges to the global minimum, where the residual
/// is zero exactly when a canceling subgradient exists.
fn min_max_residual(c: &[f64], free: &[(f64, Vec<(usize, f64)>)]) -> f64 {
    let mut r: Vec<f64> = c.to_vec();
    if !free.is_empty() {
        let mut g = vec![0.0f64; free.len()];
        for _ in 0..200 {
            let mut max_step = 0.0f64;
            for (v, (bound, rows)) in free.iter().enumerate() {
                let mut num = 0.0;
                let mut den = 0.0;
                for &(k, a) in rows {
                    num += a * r[k];
                    den += a * a;
                }
                if den == 0.0 {
                    continue;
                }
                let updated = (g[v] - num / den).clamp(-*bound, *bound);
                let delta = updated - g[v];
                if delta != 0.0 {
                    for &(k, a) in rows {
                        r[k] += a * delta;
                    }
                    g[v] = updated;
                    max_step = max_step.max(delta.abs());
                }
            }
            if max_step < 1e-14 {
                break;
            }
        }
    }
    r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
