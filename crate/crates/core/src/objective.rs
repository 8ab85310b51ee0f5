//! Clustering quality objectives.
//!
//! Three cut-style objectives over a clustering of the experimental units:
//!
//! * [`objective_h`] — cross-cluster mass of the folded graph. Under full
//!   normalization, minimizing it minimizes the worst-case
//!   difference-in-means bias over bounded linear interference.
//! * [`objective_trvar`] — the cross-cluster mass whose minimization
//!   maximizes the trace of the dose covariance (both weight factors
//!   normalized by the dose totals).
//! * [`direct_cut_cost`] — the plain bipartite edge cut under a joint
//!   labeling of both sides.
//!
//! [`cov_trace`] evaluates the assignment/exposure covariance of a balanced
//! cluster design, either by closed form or by Monte Carlo.
//!
//! All functions are pure; candidate clusterings can be scored in parallel.

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, FoldedGraph};
use crate::rng::{stream, stream_rng};

/// A partition of the experimental units into `k` nonempty clusters.
///
/// `tolerance` is the allowed imbalance: largest/smallest cluster size may
/// not exceed `1 + tolerance`. Sizes differing by at most one are always
/// accepted (that is the best achievable split, and what tolerance 0
/// means).
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    labels: Vec<u32>,
    k: usize,
    tolerance: f64,
}

impl Clustering {
    pub fn new(labels: Vec<u32>, k: usize, tolerance: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::argument("cluster count must be positive"));
        }
        if tolerance < 0.0 || tolerance.is_nan() {
            return Err(Error::argument(format!(
                "tolerance must be >= 0, got {tolerance}"
            )));
        }
        let mut sizes = vec![0usize; k];
        for &label in &labels {
            let c = label as usize;
            if c >= k {
                return Err(Error::argument(format!(
                    "label {label} out of range (k = {k})"
                )));
            }
            sizes[c] += 1;
        }
        let min = sizes.iter().copied().min().unwrap_or(0);
        let max = sizes.iter().copied().max().unwrap_or(0);
        if min == 0 {
            return Err(Error::argument("every cluster must be nonempty"));
        }
        if max - min > 1 && (max as f64) / (min as f64) > 1.0 + tolerance + 1e-12 {
            return Err(Error::argument(format!(
                "cluster sizes {min}..{max} violate imbalance tolerance {tolerance}"
            )));
        }
        Ok(Clustering {
            labels,
            k,
            tolerance,
        })
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &label in &self.labels {
            sizes[label as usize] += 1;
        }
        sizes
    }

    /// Member lists per cluster, each sorted ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &label) in self.labels.iter().enumerate() {
            out[label as usize].push(i);
        }
        out
    }

    /// True when all clusters have exactly the same size.
    pub fn is_equal_sized(&self) -> bool {
        let sizes = self.sizes();
        sizes.iter().all(|&s| s == sizes[0])
    }
}

/// Cross-cluster mass of the folded graph:
/// `sum_i sum_{j not in C(i), j != i} c_ij`.
///
/// Under full normalization this is the bias-minimax objective exactly;
/// under other folding modes it is the generalized objective with the
/// interference coefficient dropped (a constant multiplier in the minimax).
pub fn objective_h(folded: &FoldedGraph, c: &Clustering) -> Result<f64> {
    if folded.n() != c.len() {
        return Err(Error::argument(format!(
            "folded graph has {} units but clustering labels {}",
            folded.n(),
            c.len()
        )));
    }
    let labels = c.labels();
    let mut total = 0.0;
    for (i, j, value) in folded.entries() {
        if i != j && labels[i] != labels[j] {
            total += value;
        }
    }
    Ok(total)
}

/// Cross-cluster mass with both weight factors normalized by the dose
/// totals: `sum_i sum_{j not in C(i)} sum_s (w_is / T_s)(w_js / T_s)`.
/// Minimizing it maximizes the trace of the dose covariance.
pub fn objective_trvar(g: &BipartiteGraph, c: &Clustering) -> Result<f64> {
    if g.n_experimental() != c.len() {
        return Err(Error::argument(format!(
            "graph has {} experimental units but clustering labels {}",
            g.n_experimental(),
            c.len()
        )));
    }
    let labels = c.labels();
    let mut total = 0.0;
    for s in 0..g.n_interference() {
        let t = g.dose_weight(s);
        if t == 0.0 {
            continue;
        }
        let nbrs = g.int_neighbors(s);
        for &(i, wi) in nbrs {
            for &(j, wj) in nbrs {
                if i != j && labels[i] != labels[j] {
                    total += (wi / t) * (wj / t);
                }
            }
        }
    }
    Ok(total)
}

/// Joint cluster labels over both sides of a bipartite graph, for the
/// direct partitioning baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLabels {
    pub experimental: Vec<u32>,
    pub interference: Vec<u32>,
}

/// Total weight of bipartite edges whose endpoints carry different labels.
pub fn direct_cut_cost(g: &BipartiteGraph, joint: &JointLabels) -> Result<f64> {
    if joint.experimental.len() != g.n_experimental()
        || joint.interference.len() != g.n_interference()
    {
        return Err(Error::argument(format!(
            "joint labels must cover all {} + {} units, got {} + {}",
            g.n_experimental(),
            g.n_interference(),
            joint.experimental.len(),
            joint.interference.len()
        )));
    }
    Ok(g.edges()
        .iter()
        .filter(|&&(i, s, _)| joint.experimental[i] != joint.interference[s])
        .map(|&(_, _, w)| w)
        .sum())
}

/// How to evaluate [`cov_trace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovMethod {
    /// Closed form over folded entries and the pair covariances of the
    /// balanced design.
    Exact,
    /// Average of `sum_i (z_i - E z_i)(e_i - E e_i)` over sampled designs.
    MonteCarlo { draws: usize, seed: u64 },
}

/// Trace of the covariance between assignments and exposures under a
/// balanced `k`-cluster design with `k_t` treated clusters.
///
/// The closed form weighs each folded entry by the pair covariance of the
/// design: `1 - mu^2` within a cluster (diagonal included) and
/// `((K_T - K_C)^2 - K) / (K (K-1)) - mu^2` across clusters, where
/// `mu = (K_T - K_C) / K`. The cross-cluster second moment is fixed by
/// enumerating treated subsets (at K = 2, K_T = 1 opposite clusters always
/// carry opposite signs, so it must equal -1); the sanity check
/// `cov_trace` = 0 for a shared pair split under K = 2 falls out of it.
pub fn cov_trace(
    folded: &FoldedGraph,
    c: &Clustering,
    k_t: usize,
    method: CovMethod,
) -> Result<f64> {
    if folded.n() != c.len() {
        return Err(Error::argument(format!(
            "folded graph has {} units but clustering labels {}",
            folded.n(),
            c.len()
        )));
    }
    let k = c.k();
    if k_t == 0 || k_t >= k {
        return Err(Error::argument(format!(
            "treated cluster count must satisfy 0 < k_t < k, got k_t = {k_t}, k = {k}"
        )));
    }
    let k_c = k - k_t;
    let mu = (k_t as f64 - k_c as f64) / k as f64;
    match method {
        CovMethod::Exact => {
            let same = 1.0 - mu * mu;
            let gap = k_t as f64 - k_c as f64;
            let cross = (gap * gap - k as f64) / (k as f64 * (k as f64 - 1.0)) - mu * mu;
            let labels = c.labels();
            let mut total = 0.0;
            for (i, j, value) in folded.entries() {
                total += value * if labels[i] == labels[j] { same } else { cross };
            }
            Ok(total)
        }
        CovMethod::MonteCarlo { draws, seed } => {
            if draws == 0 {
                return Err(Error::argument("Monte Carlo covariance needs draws >= 1"));
            }
            let labels = c.labels();
            let n = c.len();
            let e_mean: Vec<f64> = (0..n).map(|i| mu * folded.row_sum(i)).collect();
            let mut acc = 0.0;
            for draw in 0..draws {
                let mut rng = stream_rng(seed, stream::COV_MONTE_CARLO, draw as u64);
                let chosen = rand::seq::index::sample(&mut rng, k, k_t);
                let mut treated = vec![false; k];
                for c_id in chosen {
                    treated[c_id] = true;
                }
                let z: Vec<f64> = labels
                    .iter()
                    .map(|&l| if treated[l as usize] { 1.0 } else { -1.0 })
                    .collect();
                let e = folded.apply(&z);
                acc += (0..n)
                    .map(|i| (z[i] - mu) * (e[i] - e_mean[i]))
                    .sum::<f64>();
            }
            Ok(acc / draws as f64)
        }
    }
}
