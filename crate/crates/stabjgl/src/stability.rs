//! Stability-based selection of the sparsity penalty `lambda1`.
//!
//! For each candidate `lambda1`, the joint model is refit on many
//! subsamples of each group (with the similarity penalty held at a small
//! initial value). Edge selection frequencies `psi` across subsamples give
//! per-edge instabilities `xi = 2 psi (1 - psi)`; averaging over edges and
//! groups gives a graph variability `D(lambda1)`. After enforcing
//! monotonicity from dense to sparse, the smallest `lambda1` whose
//! variability stays below the tolerance `beta1` wins: the sparsest model
//! whose edge set is still reproducible under resampling.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    linear_grid, sample_covariance, CovarianceSet, EdgeSet, GroupedDataset, PenaltyPair,
};
use crate::seed::derive_seed;
use crate::solver::{solve_fgl_warm, AdmmState, SolverOptions, MAX_GROUPS};

/// Seed-stream tag for subsample index draws.
const TAG_SUBSAMPLE: u64 = 0x5u64;

/// Controls for the `lambda1` selection stage.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StabilityConfig {
    /// Candidate `lambda1` values, strictly ascending, all positive.
    pub lambda1_grid: Vec<f64>,
    /// Similarity penalty held fixed during subsample sweeps.
    pub lambda2_init: f64,
    /// Variability tolerance: inclusive upper bound on the monotonized
    /// variability of an admissible `lambda1`.
    pub beta1: f64,
    /// Number of subsamples per group.
    pub n_sample: usize,
    /// Subsample-size cap as a fraction of `n_k`, applied only when the
    /// `floor(10 sqrt(n_k))` rule would not leave a proper subset.
    pub subsample_cap_ratio: f64,
    /// Seed for the subsample index draws.
    pub seed: u64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            lambda1_grid: linear_grid(0.01, 1.0, 20).expect("static grid"),
            lambda2_init: 0.01,
            beta1: 0.1,
            n_sample: 20,
            subsample_cap_ratio: 0.8,
            seed: 0,
        }
    }
}

impl StabilityConfig {
    /// Check every field is in range.
    pub fn validate(&self) -> Result<()> {
        if self.lambda1_grid.is_empty() {
            return Err(Error::InvalidParameter {
                what: "lambda1_grid",
                why: "must not be empty".into(),
            });
        }
        for w in self.lambda1_grid.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidParameter {
                    what: "lambda1_grid",
                    why: format!("must be strictly ascending, got {} then {}", w[0], w[1]),
                });
            }
        }
        for &v in &self.lambda1_grid {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter {
                    what: "lambda1_grid",
                    why: format!("values must be finite and > 0, got {v}"),
                });
            }
        }
        if !self.lambda2_init.is_finite() || self.lambda2_init < 0.0 {
            return Err(Error::InvalidParameter {
                what: "lambda2_init",
                why: format!("must be finite and >= 0, got {}", self.lambda2_init),
            });
        }
        if !self.beta1.is_finite() || self.beta1 <= 0.0 || self.beta1 >= 1.0 {
            return Err(Error::InvalidParameter {
                what: "beta1",
                why: format!("must lie strictly between 0 and 1, got {}", self.beta1),
            });
        }
        if self.n_sample == 0 {
            return Err(Error::InvalidParameter {
                what: "n_sample",
                why: "must be at least 1".into(),
            });
        }
        if !self.subsample_cap_ratio.is_finite()
            || self.subsample_cap_ratio <= 0.0
            || self.subsample_cap_ratio >= 1.0
        {
            return Err(Error::InvalidParameter {
                what: "subsample_cap_ratio",
                why: format!(
                    "must lie strictly between 0 and 1, got {}",
                    self.subsample_cap_ratio
                ),
            });
        }
        Ok(())
    }
}

/// Everything observed while selecting `lambda1`, for reporting and audit.
#[derive(Debug, Clone, PartialEq)]
pub struct VariabilityTrace {
    /// The grid that was swept.
    pub lambda1_grid: Vec<f64>,
    /// Per grid point, per group: mean edge instability `D_k`.
    pub per_group: Vec<Vec<f64>>,
    /// Per grid point: `D`, the mean of `per_group` over groups.
    pub d_hat: Vec<f64>,
    /// `d_hat` monotonized to be nonincreasing in `lambda1`.
    pub d_bar: Vec<f64>,
    /// Per grid point: subsample fits that failed (excluded from
    /// frequencies).
    pub failed_fits: Vec<usize>,
    /// Range (min, max) of every edge-selection frequency seen.
    pub psi_range: (f64, f64),
    /// Range (min, max) of every edge instability seen.
    pub xi_range: (f64, f64),
    /// The winning `lambda1`.
    pub selected_lambda1: f64,
    /// False when no grid value met `beta1` and the largest was used as a
    /// fallback.
    pub threshold_met: bool,
}

/// Subsample sizes: `b_k = floor(10 sqrt(n_k))`, capped at
/// `floor(cap_ratio * n_k)` whenever the rule would not leave a proper
/// subset. Requires `2 <= b_k < n_k` to be satisfiable.
pub fn subsample_sizes(n: &[usize], cap_ratio: f64) -> Result<Vec<usize>> {
    if !cap_ratio.is_finite() || cap_ratio <= 0.0 || cap_ratio >= 1.0 {
        return Err(Error::InvalidParameter {
            what: "subsample_cap_ratio",
            why: format!("must lie strictly between 0 and 1, got {cap_ratio}"),
        });
    }
    n.iter()
        .enumerate()
        .map(|(k, &nk)| {
            let mut b = (10.0 * (nk as f64).sqrt()).floor() as usize;
            if b >= nk {
                b = (cap_ratio * nk as f64).floor() as usize;
            }
            if b < 2 || b >= nk {
                return Err(Error::InvalidParameter {
                    what: "sample size",
                    why: format!("group {k} has n = {nk}, too small to subsample"),
                });
            }
            Ok(b)
        })
        .collect()
}

/// Draw the subsample row indices for every subsample and group: without
/// replacement, sorted ascending, seeded from `cfg.seed`. The returned
/// shape is `[n_sample][group][row]`.
pub fn draw_subsamples(data: &GroupedDataset, cfg: &StabilityConfig) -> Result<Vec<Vec<Vec<usize>>>> {
    cfg.validate()?;
    let n = data.sample_sizes();
    let b = subsample_sizes(&n, cfg.subsample_cap_ratio)?;
    let mut draws = Vec::with_capacity(cfg.n_sample);
    for eta in 0..cfg.n_sample {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, TAG_SUBSAMPLE, eta as u64));
        let mut per_group = Vec::with_capacity(n.len());
        for k in 0..n.len() {
            let mut idx = rand::seq::index::sample(&mut rng, n[k], b[k]).into_vec();
            idx.sort_unstable();
            per_group.push(idx);
        }
        draws.push(per_group);
    }
    Ok(draws)
}

/// Edge-selection frequencies across a set of same-size graphs: entry
/// `(i, j)` is the fraction of graphs containing that edge. Symmetric,
/// entries in `[0, 1]`, zero diagonal.
#[derive(Debug, Clone)]
pub struct EdgeFrequencyMatrix {
    freq: Array2<f64>,
}

impl EdgeFrequencyMatrix {
    /// Count edge memberships over `graphs` (all on `p` nodes).
    pub fn from_graphs(p: usize, graphs: &[&EdgeSet]) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::InvalidParameter {
                what: "graph list",
                why: "need at least one graph to compute frequencies".into(),
            });
        }
        let mut freq = Array2::zeros((p, p));
        for g in graphs {
            if g.p() != p {
                return Err(Error::NodeCountMismatch(g.p(), p));
            }
            for (i, j) in g.iter() {
                freq[[i, j]] += 1.0;
                freq[[j, i]] += 1.0;
            }
        }
        let denom = graphs.len() as f64;
        freq.mapv_inplace(|c| c / denom);
        Ok(Self { freq })
    }

    /// Node count `p`.
    pub fn p(&self) -> usize {
        self.freq.nrows()
    }

    /// The frequency matrix.
    pub fn as_array(&self) -> &Array2<f64> {
        &self.freq
    }
}

/// Per-edge instability `xi = 2 psi (1 - psi)`: 0 for edges always present
/// or always absent, maximal (0.5) at `psi = 0.5`.
pub fn edge_instability(psi: &EdgeFrequencyMatrix) -> Array2<f64> {
    psi.as_array().mapv(|v| 2.0 * v * (1.0 - v))
}

/// Mean of the strict upper triangle of a per-edge instability matrix.
pub fn graph_variability(xi: &Array2<f64>) -> Result<f64> {
    let p = xi.nrows();
    if xi.ncols() != p {
        return Err(Error::NotSquare {
            what: "instability matrix",
            rows: p,
            cols: xi.ncols(),
        });
    }
    if p < 2 {
        return Err(Error::TooFewNodes(p));
    }
    let mut acc = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            acc += xi[[i, j]];
        }
    }
    Ok(acc / (p * (p - 1) / 2) as f64)
}

/// Turn the raw variability curve into a nonincreasing one by taking the
/// running maximum from the sparse (large `lambda1`) end:
/// `d_bar[g] = max(d_hat[g..])`.
pub fn monotonize_variability(d_hat: &[f64]) -> Vec<f64> {
    let mut out = d_hat.to_vec();
    for g in (0..out.len().saturating_sub(1)).rev() {
        out[g] = out[g].max(out[g + 1]);
    }
    out
}

/// Smallest grid value whose monotonized variability is at most `beta1`;
/// falls back to the largest grid value (returning `false`) when none
/// qualifies. `grid` and `d_bar` must be aligned and nonempty.
pub fn pick_lambda1(grid: &[f64], d_bar: &[f64], beta1: f64) -> (f64, bool) {
    assert_eq!(grid.len(), d_bar.len());
    assert!(!grid.is_empty());
    for (g, &d) in d_bar.iter().enumerate() {
        if d <= beta1 {
            return (grid[g], true);
        }
    }
    (*grid.last().expect("nonempty grid"), false)
}

/// Warm-started sweep over the ascending `lambda1` grid at a fixed
/// `lambda2`; per grid point, the per-group edge sets, or `None` if that
/// fit failed (a failure resets the warm start).
fn sweep_lambda1(
    cov: &CovarianceSet,
    grid: &[f64],
    lambda2: f64,
    solver: &SolverOptions,
) -> Vec<Option<Vec<EdgeSet>>> {
    let mut state = AdmmState::cold(cov);
    let mut out = Vec::with_capacity(grid.len());
    for &lambda1 in grid {
        let pen = match PenaltyPair::new(lambda1, lambda2) {
            Ok(p) => p,
            Err(_) => {
                out.push(None);
                continue;
            }
        };
        match solve_fgl_warm(cov, pen, solver, &mut state) {
            Ok(_report) => {
                let edges: Result<Vec<EdgeSet>> = state
                    .z
                    .iter()
                    .map(|z| crate::model::edge_set_from_precision(&z.view(), solver.zero_eps))
                    .collect();
                match edges {
                    Ok(e) => out.push(Some(e)),
                    Err(_) => {
                        out.push(None);
                        state = AdmmState::cold(cov);
                    }
                }
            }
            Err(e) => {
                log::warn!("subsample fit failed at lambda1 = {lambda1}: {e}");
                out.push(None);
                state = AdmmState::cold(cov);
            }
        }
    }
    out
}

/// Select `lambda1` by subsample stability.
///
/// Runs `cfg.n_sample` subsample sweeps (in parallel; results are merged in
/// subsample order, so the outcome does not depend on thread count),
/// aggregates edge frequencies at each grid point over the sweeps that
/// succeeded, and picks the smallest `lambda1` with monotonized variability
/// at most `cfg.beta1`. Fits use an unweighted likelihood, as in the
/// reference joint graphical lasso. Errors if more than half the subsample
/// fits fail at any grid point.
pub fn select_lambda1(
    data: &GroupedDataset,
    cfg: &StabilityConfig,
    solver: &SolverOptions,
    standardize: bool,
) -> Result<(f64, VariabilityTrace)> {
    cfg.validate()?;
    solver.validate()?;
    let k_count = data.n_groups();
    if k_count > MAX_GROUPS {
        return Err(Error::InvalidParameter {
            what: "group count",
            why: format!("solver supports at most {MAX_GROUPS} groups, got {k_count}"),
        });
    }
    let p = data.p();
    let grid = &cfg.lambda1_grid;
    let draws = draw_subsamples(data, cfg)?;

    let per_eta: Vec<Vec<Option<Vec<EdgeSet>>>> = (0..cfg.n_sample)
        .into_par_iter()
        .map(|eta| {
            let sub = match data.select_rows(&draws[eta]) {
                Ok(s) => s,
                Err(e) => {
                    log::warn!("subsample {eta} could not be assembled: {e}");
                    return vec![None; grid.len()];
                }
            };
            let cov = match sample_covariance(&sub, standardize) {
                Ok(c) => c.with_unit_weights(),
                Err(e) => {
                    log::warn!("subsample {eta} covariance failed: {e}");
                    return vec![None; grid.len()];
                }
            };
            sweep_lambda1(&cov, grid, cfg.lambda2_init, solver)
        })
        .collect();

    let mut per_group = vec![vec![0.0f64; k_count]; grid.len()];
    let mut d_hat = vec![0.0f64; grid.len()];
    let mut failed_fits = vec![0usize; grid.len()];
    let mut psi_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut xi_range = (f64::INFINITY, f64::NEG_INFINITY);
    for g in 0..grid.len() {
        let successes: Vec<&Vec<EdgeSet>> = per_eta
            .iter()
            .filter_map(|sweeps| sweeps[g].as_ref())
            .collect();
        let failed = cfg.n_sample - successes.len();
        failed_fits[g] = failed;
        if failed * 2 > cfg.n_sample {
            return Err(Error::TooManySubsampleFailures {
                lambda1: grid[g],
                failed,
                total: cfg.n_sample,
            });
        }
        for k in 0..k_count {
            let graphs: Vec<&EdgeSet> = successes.iter().map(|s| &s[k]).collect();
            let psi = EdgeFrequencyMatrix::from_graphs(p, &graphs)?;
            let xi = edge_instability(&psi);
            for i in 0..p {
                for j in (i + 1)..p {
                    let pv = psi.as_array()[[i, j]];
                    let xv = xi[[i, j]];
                    psi_range = (psi_range.0.min(pv), psi_range.1.max(pv));
                    xi_range = (xi_range.0.min(xv), xi_range.1.max(xv));
                }
            }
            per_group[g][k] = graph_variability(&xi)?;
        }
        d_hat[g] = per_group[g].iter().sum::<f64>() / k_count as f64;
    }

    let d_bar = monotonize_variability(&d_hat);
    let (selected_lambda1, threshold_met) = pick_lambda1(grid, &d_bar, cfg.beta1);
    if !threshold_met {
        log::warn!(
            "no lambda1 on the grid met the variability tolerance {}; \
             falling back to the largest grid value {selected_lambda1}",
            cfg.beta1
        );
    }
    let trace = VariabilityTrace {
        lambda1_grid: grid.clone(),
        per_group,
        d_hat,
        d_bar,
        failed_fits,
        psi_range,
        xi_range,
        selected_lambda1,
        threshold_met,
    };
    Ok((selected_lambda1, trace))
}
