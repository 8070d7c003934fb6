//! Core data types: grouped observations, covariance sets, fitted precision
//! matrices, edge sets, and penalty pairs.
//!
//! Construction validates shapes and basic invariants once, so downstream
//! numerical code can assume well-formed inputs.

use std::collections::BTreeSet;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Absolute symmetry slack, scaled by the largest magnitude in the matrix.
const SYMMETRY_TOL: f64 = 1e-9;

fn check_square(m: &ArrayView2<f64>, what: &'static str) -> Result<usize> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::NotSquare { what, rows, cols });
    }
    Ok(rows)
}

fn check_symmetric(m: &ArrayView2<f64>, what: &'static str) -> Result<()> {
    let p = check_square(m, what)?;
    let mut max_abs: f64 = 1.0;
    for v in m.iter() {
        if !v.is_finite() {
            return Err(Error::InvalidParameter {
                what,
                why: "contains a non-finite value".into(),
            });
        }
        max_abs = max_abs.max(v.abs());
    }
    let mut max_asym = 0.0f64;
    for i in 0..p {
        for j in (i + 1)..p {
            max_asym = max_asym.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    if max_asym > SYMMETRY_TOL * max_abs {
        return Err(Error::NotSymmetric { what, max_asym });
    }
    Ok(())
}

/// Replace `m` with `(m + m^T) / 2`, removing round-off asymmetry.
pub(crate) fn symmetrize(m: &mut Array2<f64>) {
    let p = m.nrows();
    for i in 0..p {
        for j in (i + 1)..p {
            let avg = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = avg;
            m[[j, i]] = avg;
        }
    }
}

/// Observations for one or more sample groups measured on shared variables.
///
/// Each group is an `n_k x p` matrix: rows are samples, columns are the `p`
/// variables common to every group. Sample sizes may differ across groups.
#[derive(Debug, Clone)]
pub struct GroupedDataset {
    groups: Vec<Array2<f64>>,
    variable_names: Option<Vec<String>>,
}

impl GroupedDataset {
    /// Validate and wrap per-group observation matrices.
    ///
    /// Requires at least one group, a shared column count `p >= 2`, at least
    /// two rows per group, and finite entries throughout.
    pub fn new(groups: Vec<Array2<f64>>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let p = groups[0].ncols();
        if p < 2 {
            return Err(Error::TooFewVariables { got: p, min: 2 });
        }
        for (k, x) in groups.iter().enumerate() {
            if x.ncols() != p {
                return Err(Error::ColumnCountMismatch {
                    group: k,
                    cols: x.ncols(),
                    expected: p,
                });
            }
            if x.nrows() < 2 {
                return Err(Error::TooFewSamples {
                    group: k,
                    rows: x.nrows(),
                });
            }
            for ((row, col), v) in x.indexed_iter() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue {
                        group: k,
                        row,
                        col,
                    });
                }
            }
        }
        Ok(Self {
            groups,
            variable_names: None,
        })
    }

    /// Attach variable names; the list length must equal `p`.
    pub fn with_variable_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::InvalidParameter {
                what: "variable names",
                why: format!("{} names for {} variables", names.len(), self.p()),
            });
        }
        self.variable_names = Some(names);
        Ok(self)
    }

    /// Number of groups `K`.
    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// Number of shared variables `p`.
    pub fn p(&self) -> usize {
        self.groups[0].ncols()
    }

    /// Per-group sample sizes `n_k`.
    pub fn sample_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|x| x.nrows()).collect()
    }

    /// Observation matrix of group `k`.
    pub fn group(&self, k: usize) -> &Array2<f64> {
        &self.groups[k]
    }

    /// All observation matrices, in group order.
    pub fn groups(&self) -> &[Array2<f64>] {
        &self.groups
    }

    /// Variable names, if any were attached.
    pub fn variable_names(&self) -> Option<&[String]> {
        self.variable_names.as_deref()
    }

    /// New dataset containing the given rows (by index, may repeat) of each
    /// group. Used for subsampling; names carry over.
    pub fn select_rows(&self, rows_per_group: &[Vec<usize>]) -> Result<Self> {
        if rows_per_group.len() != self.n_groups() {
            return Err(Error::GroupCountMismatch(
                rows_per_group.len(),
                self.n_groups(),
            ));
        }
        let mut groups = Vec::with_capacity(self.n_groups());
        for (k, rows) in rows_per_group.iter().enumerate() {
            let x = &self.groups[k];
            let mut sub = Array2::zeros((rows.len(), self.p()));
            for (r, &src) in rows.iter().enumerate() {
                if src >= x.nrows() {
                    return Err(Error::InvalidParameter {
                        what: "row index",
                        why: format!("row {src} out of range for group {k}"),
                    });
                }
                sub.row_mut(r).assign(&x.row(src));
            }
            groups.push(sub);
        }
        let mut out = Self::new(groups)?;
        out.variable_names = self.variable_names.clone();
        Ok(out)
    }
}

/// Per-group sample covariance (or correlation) matrices plus the sample
/// sizes they were computed from.
///
/// The sample sizes act as likelihood weights in [`crate::solver::solve_fgl`]
/// and as the `n_k` of the information criterion in [`crate::ebic`].
#[derive(Debug, Clone)]
pub struct CovarianceSet {
    matrices: Vec<Array2<f64>>,
    n: Vec<usize>,
}

impl CovarianceSet {
    /// Validate and wrap covariance matrices with their sample sizes.
    ///
    /// Each matrix must be square with the shared dimension `p`, symmetric,
    /// finite, and have nonnegative diagonals; `n` must hold one positive
    /// count per group.
    pub fn new(matrices: Vec<Array2<f64>>, n: Vec<usize>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if n.len() != matrices.len() {
            return Err(Error::GroupCountMismatch(n.len(), matrices.len()));
        }
        let p = matrices[0].nrows();
        for (k, s) in matrices.iter().enumerate() {
            check_symmetric(&s.view(), "covariance matrix")?;
            if s.nrows() != p {
                return Err(Error::NodeCountMismatch(s.nrows(), p));
            }
            for i in 0..p {
                if s[[i, i]] < 0.0 {
                    return Err(Error::InvalidParameter {
                        what: "covariance matrix",
                        why: format!("negative diagonal at ({i}, {i}) in group {k}"),
                    });
                }
            }
        }
        if let Some(k) = n.iter().position(|&nk| nk == 0) {
            return Err(Error::InvalidParameter {
                what: "sample size",
                why: format!("group {k} has n = 0"),
            });
        }
        Ok(Self { matrices, n })
    }

    /// Number of groups `K`.
    pub fn n_groups(&self) -> usize {
        self.matrices.len()
    }

    /// Matrix dimension `p`.
    pub fn p(&self) -> usize {
        self.matrices[0].nrows()
    }

    /// Covariance matrix of group `k`.
    pub fn matrix(&self, k: usize) -> &Array2<f64> {
        &self.matrices[k]
    }

    /// All covariance matrices, in group order.
    pub fn matrices(&self) -> &[Array2<f64>] {
        &self.matrices
    }

    /// Per-group sample sizes.
    pub fn n(&self) -> &[usize] {
        &self.n
    }

    /// Same matrices with every weight set to 1.
    ///
    /// Penalty selection and the final fit follow the reference joint
    /// graphical lasso convention of an unweighted likelihood term; sample
    /// sizes still enter the information criterion separately.
    pub(crate) fn with_unit_weights(&self) -> Self {
        Self {
            matrices: self.matrices.clone(),
            n: vec![1; self.matrices.len()],
        }
    }
}

/// Compute per-group sample covariance matrices.
///
/// Columns are mean-centered per group; with `standardize` they are also
/// scaled to unit sample variance, making the result a correlation matrix.
/// The divisor is `n_k - 1`. A zero-variance column only errors when
/// `standardize` is set.
pub fn sample_covariance(data: &GroupedDataset, standardize: bool) -> Result<CovarianceSet> {
    let p = data.p();
    let mut matrices = Vec::with_capacity(data.n_groups());
    for (k, x) in data.groups().iter().enumerate() {
        let n = x.nrows();
        let mut centered = x.clone();
        for mut col in centered.columns_mut() {
            let mean = col.sum() / n as f64;
            col.mapv_inplace(|v| v - mean);
        }
        if standardize {
            for (c, mut col) in centered.columns_mut().into_iter().enumerate() {
                let var = col.iter().map(|v| v * v).sum::<f64>() / (n - 1) as f64;
                if var <= 0.0 {
                    return Err(Error::ZeroVariance { group: k, col: c });
                }
                let sd = var.sqrt();
                col.mapv_inplace(|v| v / sd);
            }
        }
        let mut s = centered.t().dot(&centered);
        s.mapv_inplace(|v| v / (n - 1) as f64);
        symmetrize(&mut s);
        debug_assert_eq!(s.nrows(), p);
        matrices.push(s);
    }
    CovarianceSet::new(matrices, data.sample_sizes())
}

/// A fitted set of precision matrices.
///
/// `theta` holds the positive-definite likelihood iterates; `z` holds the
/// penalized consensus copies carrying exact zeros and exact across-group
/// fusion. Graph structure should always be read from `z`.
#[derive(Debug, Clone)]
pub struct PrecisionSet {
    theta: Vec<Array2<f64>>,
    z: Vec<Array2<f64>>,
}

impl PrecisionSet {
    /// Validate and wrap matched `theta`/`z` lists.
    ///
    /// Checks shapes, symmetry, and positive diagonals on `theta` (a cheap
    /// necessary condition for positive definiteness; factorizations
    /// downstream enforce the rest).
    pub fn new(theta: Vec<Array2<f64>>, z: Vec<Array2<f64>>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if theta.len() != z.len() {
            return Err(Error::GroupCountMismatch(theta.len(), z.len()));
        }
        let p = theta[0].nrows();
        for (t, zk) in theta.iter().zip(&z) {
            check_symmetric(&t.view(), "precision matrix")?;
            check_symmetric(&zk.view(), "sparse precision matrix")?;
            if t.nrows() != p || zk.nrows() != p {
                return Err(Error::NodeCountMismatch(t.nrows().max(zk.nrows()), p));
            }
            for i in 0..p {
                if t[[i, i]] <= 0.0 {
                    return Err(Error::NotPositiveDefinite {
                        what: "precision matrix",
                    });
                }
            }
        }
        Ok(Self { theta, z })
    }

    /// Number of groups `K`.
    pub fn n_groups(&self) -> usize {
        self.theta.len()
    }

    /// Matrix dimension `p`.
    pub fn p(&self) -> usize {
        self.theta[0].nrows()
    }

    /// Positive-definite precision estimate of group `k`.
    pub fn theta(&self, k: usize) -> &Array2<f64> {
        &self.theta[k]
    }

    /// All positive-definite precision estimates.
    pub fn thetas(&self) -> &[Array2<f64>] {
        &self.theta
    }

    /// Sparse consensus estimate of group `k` (exact zeros).
    pub fn z(&self, k: usize) -> &Array2<f64> {
        &self.z[k]
    }

    /// All sparse consensus estimates.
    pub fn zs(&self) -> &[Array2<f64>] {
        &self.z
    }

    /// Edge sets of every group, read from `z` with the given zero threshold.
    pub fn edge_sets(&self, zero_eps: f64) -> Result<Vec<EdgeSet>> {
        self.z
            .iter()
            .map(|zk| edge_set_from_precision(&zk.view(), zero_eps))
            .collect()
    }
}

/// An undirected graph on `p` nodes stored as a sorted set of `(i, j)` pairs
/// with `i < j`, zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    p: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl EdgeSet {
    /// Empty graph on `p` nodes.
    pub fn new(p: usize) -> Self {
        Self {
            p,
            edges: BTreeSet::new(),
        }
    }

    /// Build from node pairs; either endpoint order is accepted, self-loops
    /// and out-of-range nodes are rejected, duplicates collapse.
    pub fn from_edges<I>(p: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = Self::new(p);
        for (i, j) in pairs {
            set.insert(i, j)?;
        }
        Ok(set)
    }

    /// Insert one edge; returns whether it was new.
    pub fn insert(&mut self, i: usize, j: usize) -> Result<bool> {
        if i == j {
            return Err(Error::SelfLoop { i });
        }
        if i >= self.p || j >= self.p {
            return Err(Error::EdgeOutOfRange { i, j, p: self.p });
        }
        Ok(self.edges.insert((i.min(j), i.max(j))))
    }

    /// Remove one edge; returns whether it was present.
    pub fn remove(&mut self, i: usize, j: usize) -> bool {
        self.edges.remove(&(i.min(j), i.max(j)))
    }

    /// Node count `p`.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Edge count.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    /// True if the graph has no edges.
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Edge membership test (either endpoint order).
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    /// Iterate edges in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Fraction of the `p(p-1)/2` possible edges that are present.
    pub fn sparsity(&self) -> Result<f64> {
        if self.p < 2 {
            return Err(Error::TooFewNodes(self.p));
        }
        let possible = (self.p * (self.p - 1) / 2) as f64;
        Ok(self.len() as f64 / possible)
    }

    /// Number of edges present in both graphs (node counts must match).
    pub fn shared_edge_count(&self, other: &EdgeSet) -> Result<usize> {
        if self.p != other.p {
            return Err(Error::NodeCountMismatch(self.p, other.p));
        }
        Ok(self.edges.intersection(&other.edges).count())
    }

    /// Node degrees.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.p];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }
}

/// The two penalty levels of the fused joint graphical lasso: `lambda1 > 0`
/// controls within-group sparsity, `lambda2 >= 0` penalizes across-group
/// differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyPair {
    lambda1: f64,
    lambda2: f64,
}

impl PenaltyPair {
    /// Validate a penalty pair: `lambda1` finite and strictly positive,
    /// `lambda2` finite and nonnegative.
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !lambda1.is_finite() || lambda1 <= 0.0 {
            return Err(Error::InvalidParameter {
                what: "lambda1",
                why: format!("must be finite and > 0, got {lambda1}"),
            });
        }
        if !lambda2.is_finite() || lambda2 < 0.0 {
            return Err(Error::InvalidParameter {
                what: "lambda2",
                why: format!("must be finite and >= 0, got {lambda2}"),
            });
        }
        Ok(Self { lambda1, lambda2 })
    }

    /// Sparsity penalty level.
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// Similarity penalty level.
    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }
}

/// Evenly spaced grid of `count` values from `lo` to `hi` inclusive.
///
/// `count == 1` is allowed only when `lo == hi`. Endpoints are hit exactly.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::InvalidParameter {
            what: "grid bounds",
            why: format!("need finite lo <= hi, got {lo}..{hi}"),
        });
    }
    if count == 0 {
        return Err(Error::InvalidParameter {
            what: "grid size",
            why: "must be at least 1".into(),
        });
    }
    if count == 1 {
        if lo != hi {
            return Err(Error::InvalidParameter {
                what: "grid size",
                why: format!("a single-point grid needs lo == hi, got {lo}..{hi}"),
            });
        }
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if i + 1 == count { hi } else { lo + step * i as f64 })
        .collect())
}

/// Edges of a sparse precision matrix: `(i, j)` with `i < j` and
/// `|z[i, j]| > zero_eps`. The input must be symmetric.
pub fn edge_set_from_precision(z: &ArrayView2<f64>, zero_eps: f64) -> Result<EdgeSet> {
    if !zero_eps.is_finite() || zero_eps < 0.0 {
        return Err(Error::InvalidParameter {
            what: "zero_eps",
            why: format!("must be finite and >= 0, got {zero_eps}"),
        });
    }
    check_symmetric(z, "sparse precision matrix")?;
    let p = z.nrows();
    let mut set = EdgeSet::new(p);
    for i in 0..p {
        for j in (i + 1)..p {
            if z[[i, j]].abs() > zero_eps {
                set.edges.insert((i, j));
            }
        }
    }
    Ok(set)
}

/// Partial correlations implied by a precision matrix:
/// `rho[i, j] = -theta[i, j] / sqrt(theta[i, i] * theta[j, j])`, unit
/// diagonal. Requires a symmetric input with strictly positive diagonals.
pub fn partial_correlations(theta: &ArrayView2<f64>) -> Result<Array2<f64>> {
    check_symmetric(theta, "precision matrix")?;
    let p = theta.nrows();
    for i in 0..p {
        if theta[[i, i]] <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                what: "precision matrix",
            });
        }
    }
    let mut rho = Array2::zeros((p, p));
    for i in 0..p {
        rho[[i, i]] = 1.0;
        for j in (i + 1)..p {
            let v = -theta[[i, j]] / (theta[[i, i]] * theta[[j, j]]).sqrt();
            let v = v.clamp(-1.0, 1.0);
            rho[[i, j]] = v;
            rho[[j, i]] = v;
        }
    }
    Ok(rho)
}
