//! Ground-truth generators for benchmarking joint network estimation.
//!
//! An instance is built in four seeded, deterministic steps:
//!
//! 1. a base scale-free graph from preferential attachment, adjusted to an
//!    exact edge count;
//! 2. one graph per group, sharing a controlled fraction of the base edges
//!    and rewiring the rest (edge counts preserved);
//! 3. a positive definite precision matrix per graph with unit diagonal and
//!    partial correlations of prescribed magnitude;
//! 4. Gaussian samples with covariance equal to each precision's inverse.
//!
//! Everything is a pure function of the seed, so an instance can always be
//! regenerated exactly from its manifest.

use ndarray::{Array2, ArrayView1};
use rand::SeedableRng;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{EdgeSet, GroupedDataset};
use crate::seed::derive_seed;

const TAG_GRAPH: u64 = 0x21;
const TAG_PERTURB: u64 = 0x22;
const TAG_PRECISION: u64 = 0x23;
const TAG_SAMPLE: u64 = 0x24;
const TAG_PRECISION_ATTEMPT: u64 = 0x25;
const TAG_GROUP_SAMPLE: u64 = 0x26;

/// How many fresh draws to try when a precision matrix cannot be repaired
/// to positive definiteness.
const MAX_PRECISION_ATTEMPTS: u64 = 20;

/// Complete description of a synthetic multi-group instance.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SimulationSpec {
    /// Number of variables (network nodes).
    pub p: usize,
    /// Per-group sample sizes; the length sets the number of groups.
    pub n: Vec<usize>,
    /// Fraction of the `p(p-1)/2` node pairs that are edges, in (0, 1].
    pub target_sparsity: f64,
    /// Fraction of base edges every group keeps, in [0, 1].
    pub similarity: f64,
    /// Magnitude range `(lo, hi)` for true partial correlations.
    pub partial_corr_range: (f64, f64),
    /// Master seed; the whole instance is a pure function of this spec.
    pub seed: u64,
}

impl SimulationSpec {
    /// Number of groups.
    pub fn n_groups(&self) -> usize {
        self.n.len()
    }

    /// Check every field is in range.
    pub fn validate(&self) -> Result<()> {
        if self.p < 3 {
            return Err(Error::TooFewNodes(self.p));
        }
        if self.n.is_empty() {
            return Err(Error::InvalidParameter {
                what: "sample sizes",
                why: "need at least one group".into(),
            });
        }
        for (k, &nk) in self.n.iter().enumerate() {
            if nk < 2 {
                return Err(Error::TooFewSamples { group: k, rows: nk });
            }
        }
        if !self.target_sparsity.is_finite()
            || self.target_sparsity <= 0.0
            || self.target_sparsity > 1.0
        {
            return Err(Error::InvalidParameter {
                what: "target_sparsity",
                why: format!("must lie in (0, 1], got {}", self.target_sparsity),
            });
        }
        if !self.similarity.is_finite() || !(0.0..=1.0).contains(&self.similarity) {
            return Err(Error::InvalidParameter {
                what: "similarity",
                why: format!("must lie in [0, 1], got {}", self.similarity),
            });
        }
        let (lo, hi) = self.partial_corr_range;
        if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || lo >= hi {
            return Err(Error::InvalidParameter {
                what: "partial_corr_range",
                why: format!("need 0 < lo < hi, got ({lo}, {hi})"),
            });
        }
        Ok(())
    }
}

/// A generated instance: the truth and the data drawn from it.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    /// True edge set per group.
    pub edge_sets: Vec<EdgeSet>,
    /// True precision matrix per group (unit diagonal, positive definite).
    pub precisions: Vec<Array2<f64>>,
    /// True covariance matrix per group (inverse of the precision).
    pub covariances: Vec<Array2<f64>>,
    /// Samples drawn from each group's Gaussian.
    pub data: GroupedDataset,
}

/// Generate a scale-free graph with exactly `round(target_sparsity *
/// p(p-1)/2)` edges.
///
/// A preferential-attachment tree is grown first (each new node attaches to
/// an endpoint drawn from the degree-weighted pool), then extra edges are
/// added with preferential endpoints until the count is met. A target below
/// the tree size is honored by removing uniformly chosen leaf edges, which
/// may disconnect the graph; this is logged.
pub fn generate_scale_free_graph(p: usize, target_sparsity: f64, seed: u64) -> Result<EdgeSet> {
    if p < 3 {
        return Err(Error::TooFewNodes(p));
    }
    if !target_sparsity.is_finite() || target_sparsity <= 0.0 || target_sparsity > 1.0 {
        return Err(Error::InvalidParameter {
            what: "target_sparsity",
            why: format!("must lie in (0, 1], got {target_sparsity}"),
        });
    }
    let max_pairs = p * (p - 1) / 2;
    let target = (target_sparsity * max_pairs as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, TAG_GRAPH, 0));

    // Attachment tree: the endpoint pool holds each node once per incident
    // edge, so a uniform draw is degree-proportional.
    let mut edges = EdgeSet::new(p);
    let mut endpoints: Vec<usize> = vec![0, 1];
    edges.insert(0, 1)?;
    for node in 2..p {
        let attach = endpoints[rng.random_range(0..endpoints.len())];
        edges.insert(node, attach)?;
        endpoints.push(node);
        endpoints.push(attach);
    }

    if target < p - 1 {
        log::warn!(
            "target of {target} edges is below the {} edges of a spanning tree; \
             removing leaf edges (the graph may be disconnected)",
            p - 1
        );
        while edges.len() > target {
            let degrees = edges.degrees();
            let leaves: Vec<(usize, usize)> = edges
                .iter()
                .filter(|&(i, j)| degrees[i] == 1 || degrees[j] == 1)
                .collect();
            // A cycle-free graph with at least one edge always has a leaf.
            let (i, j) = leaves[rng.random_range(0..leaves.len())];
            edges.remove(i, j);
        }
        return Ok(edges);
    }

    while edges.len() < target {
        let mut added = false;
        for _ in 0..1000 {
            let a = endpoints[rng.random_range(0..endpoints.len())];
            let b = endpoints[rng.random_range(0..endpoints.len())];
            if a != b && !edges.contains(a, b) {
                edges.insert(a, b)?;
                endpoints.push(a);
                endpoints.push(b);
                added = true;
                break;
            }
        }
        if !added {
            // Dense regime: preferential draws keep colliding, so fall back
            // to a uniform draw over the remaining non-edges.
            let open: Vec<(usize, usize)> = (0..p)
                .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
                .filter(|&(i, j)| !edges.contains(i, j))
                .collect();
            let (a, b) = open[rng.random_range(0..open.len())];
            edges.insert(a, b)?;
            endpoints.push(a);
            endpoints.push(b);
        }
    }
    Ok(edges)
}

/// Derive `k` group graphs from a base graph at a given similarity.
///
/// Group 0 is the base itself. A single kept subset of `round(similarity *
/// |E|)` base edges is drawn once and shared by all other groups, so kept
/// edges are common to every group; each group then rewires the remaining
/// edges to distinct uniformly drawn new pairs, preserving the edge count.
pub fn perturb_for_similarity(
    base: &EdgeSet,
    k: usize,
    similarity: f64,
    seed: u64,
) -> Result<Vec<EdgeSet>> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            what: "group count",
            why: "need at least one group".into(),
        });
    }
    if !similarity.is_finite() || !(0.0..=1.0).contains(&similarity) {
        return Err(Error::InvalidParameter {
            what: "similarity",
            why: format!("must lie in [0, 1], got {similarity}"),
        });
    }
    let p = base.p();
    let m = base.len();
    let keep = (similarity * m as f64).round() as usize;
    let rewire = m - keep;

    let all_edges: Vec<(usize, usize)> = base.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, TAG_PERTURB, 0));
    let kept_idx = rand::seq::index::sample(&mut rng, m, keep);
    let kept = EdgeSet::from_edges(p, kept_idx.iter().map(|i| all_edges[i]))?;

    let mut groups = Vec::with_capacity(k);
    groups.push(base.clone());
    for g in 1..k {
        let mut pool: Vec<(usize, usize)> = (0..p)
            .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
            .filter(|&(i, j)| !kept.contains(i, j))
            .collect();
        if pool.len() < rewire {
            return Err(Error::NotEnoughNonEdges);
        }
        let mut rng_g = ChaCha8Rng::seed_from_u64(derive_seed(seed, TAG_PERTURB, g as u64));
        let mut graph = kept.clone();
        for _ in 0..rewire {
            let (i, j) = pool.swap_remove(rng_g.random_range(0..pool.len()));
            graph.insert(i, j)?;
        }
        groups.push(graph);
    }
    Ok(groups)
}

/// Build a unit-diagonal positive definite precision matrix supported on a
/// graph, with partial correlations of prescribed magnitude.
///
/// Each edge gets a magnitude drawn uniformly from `[lo, hi)` with a random
/// sign, keyed by the edge itself: the value at `(i, j)` is a pure function
/// of `(seed, i, j)`, so two graphs that share an edge and a seed get the
/// same value there. Joint estimation across groups leans on exactly this
/// consistency — averaging over groups must reinforce shared edges, not
/// cancel them. If the result is not comfortably positive definite, the
/// diagonal is inflated and the matrix rescaled to restore the unit
/// diagonal — in one step, `theta <- (theta + tau I) / (1 + tau)` with
/// `tau` chosen in closed form so the smallest eigenvalue lands at 0.01.
/// The rescaling shrinks partial correlations below the requested range;
/// callers retry with a fresh seed when that matters.
pub fn precision_from_graph(g: &EdgeSet, range: (f64, f64), seed: u64) -> Result<Array2<f64>> {
    let (lo, hi) = range;
    if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || lo >= hi {
        return Err(Error::InvalidParameter {
            what: "partial_corr_range",
            why: format!("need 0 < lo < hi, got ({lo}, {hi})"),
        });
    }
    let p = g.p();
    let mut theta = Array2::eye(p);
    for (i, j) in g.iter() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            seed,
            TAG_PRECISION,
            (i * p + j) as u64,
        ));
        let magnitude = rng.random_range(lo..hi);
        let value = if rng.random::<bool>() { magnitude } else { -magnitude };
        theta[[i, j]] = value;
        theta[[j, i]] = value;
    }
    const TARGET: f64 = 0.01;
    for step in 0..50 {
        let min_eig = linalg::smallest_eigenvalue(&theta)?;
        if min_eig >= TARGET {
            return Ok(theta);
        }
        let tau = (TARGET - min_eig) / (1.0 - TARGET) + 1e-9;
        let scale = 1.0 / (1.0 + tau);
        theta.mapv_inplace(|v| v * scale);
        // (1 + tau) / (1 + tau) is exactly 1; write it directly rather than
        // accumulate rounding on the diagonal.
        for d in 0..p {
            theta[[d, d]] = 1.0;
        }
        if step == 49 {
            return Err(Error::DiagonalInflationFailed(50));
        }
    }
    unreachable!("loop either returns or errors on its last step")
}

/// Draw `n` independent rows from `N(0, theta^{-1})`.
///
/// Uses the Cholesky factor `theta = L L^T`: solving `L^T y = z` for
/// standard normal `z` gives `y` with covariance `theta^{-1}`.
pub fn sample_gaussian(theta: &Array2<f64>, n: usize, seed: u64) -> Result<Array2<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            what: "sample size",
            why: "must be at least 1".into(),
        });
    }
    let l = linalg::cholesky_lower(theta, "precision matrix")?;
    let p = theta.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, TAG_SAMPLE, 0));
    let mut x = Array2::zeros((n, p));
    let mut row = vec![0.0; p];
    for r in 0..n {
        for v in row.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        // Back-substitute L^T y = z in place; row i of L^T is L[j, i] for
        // j >= i, so later entries are already solved.
        for i in (0..p).rev() {
            let mut acc = row[i];
            for j in i + 1..p {
                acc -= l[[j, i]] * row[j];
            }
            row[i] = acc / l[[i, i]];
        }
        x.row_mut(r).assign(&ArrayView1::from(&row[..]));
    }
    Ok(x)
}

/// Generate a complete instance from a spec: graphs, precisions,
/// covariances, and data, all deterministic in the seed.
pub fn generate_instance(spec: &SimulationSpec) -> Result<SyntheticInstance> {
    spec.validate()?;
    let base = generate_scale_free_graph(spec.p, spec.target_sparsity, spec.seed)?;
    let edge_sets = perturb_for_similarity(&base, spec.n_groups(), spec.similarity, spec.seed)?;

    // One value seed per attempt, shared by every group: graphs that share
    // an edge then share its precision value exactly, which is what lets
    // joint estimation pool shared structure across groups. A failed repair
    // in any group redraws all of them so the sharing never breaks.
    let mut precisions = None;
    for attempt in 0..MAX_PRECISION_ATTEMPTS {
        let attempt_seed = derive_seed(spec.seed, TAG_PRECISION_ATTEMPT, attempt);
        let mut drawn = Vec::with_capacity(edge_sets.len());
        for (g, graph) in edge_sets.iter().enumerate() {
            match precision_from_graph(graph, spec.partial_corr_range, attempt_seed) {
                Ok(theta) => drawn.push(theta),
                Err(e) => {
                    log::warn!(
                        "group {g}: precision draw {attempt} not repairable ({e}); \
                         redrawing all groups"
                    );
                    break;
                }
            }
        }
        if drawn.len() == edge_sets.len() {
            precisions = Some(drawn);
            break;
        }
    }
    let precisions = precisions.ok_or(Error::DiagonalInflationFailed(50))?;

    let mut covariances = Vec::with_capacity(precisions.len());
    for theta in &precisions {
        covariances.push(linalg::inv_pd(theta, "precision matrix")?);
    }

    let mut groups = Vec::with_capacity(spec.n_groups());
    for (g, (&nk, theta)) in spec.n.iter().zip(&precisions).enumerate() {
        let sample_seed = derive_seed(spec.seed, TAG_GROUP_SAMPLE, g as u64);
        groups.push(sample_gaussian(theta, nk, sample_seed)?);
    }
    let data = GroupedDataset::new(groups)?;

    Ok(SyntheticInstance {
        edge_sets,
        precisions,
        covariances,
        data,
    })
}

/// Mean pairwise edge-sharing fraction over all group pairs: shared edges
/// divided by the larger of the two edge counts (1 if both are empty).
pub fn measured_similarity(edge_sets: &[EdgeSet]) -> Result<f64> {
    if edge_sets.len() < 2 {
        return Err(Error::InvalidParameter {
            what: "edge_sets",
            why: "need at least two groups to compare".into(),
        });
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for a in 0..edge_sets.len() {
        for b in a + 1..edge_sets.len() {
            let shared = edge_sets[a].shared_edge_count(&edge_sets[b])?;
            let denom = edge_sets[a].len().max(edge_sets[b].len());
            total += if denom == 0 {
                1.0
            } else {
                shared as f64 / denom as f64
            };
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}
