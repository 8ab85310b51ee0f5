//! Synthetic bipartite graph generators.
//!
//! Two families: a bipartite stochastic block model with planted groups on
//! both sides, and a preferential-attachment model with Zipf-distributed
//! experimental degrees and latent-class affinity. Both return the ground
//! truth labels so the "true clustering" baseline can be constructed
//! without re-deriving the groups.
//!
//! Generators are sequential per graph (preferential attachment is
//! order-dependent); independent graphs may be generated in parallel with
//! independent seeds. Same seed, same graph, bit for bit.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Zipf};

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::rng::{stream, stream_rng};

/// Zipf support is truncated here so the normalizer is computable; at
/// exponent 3 the truncated tail mass is far below sampling resolution.
pub const ZIPF_SUPPORT_MAX: u64 = 1_000_000;

/// Bipartite stochastic block model with equally sized groups on both
/// sides. Same-group pairs get an independent weight-1 edge with
/// probability `p_in`, cross-group pairs with `p_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmSpec {
    pub n_experimental: usize,
    pub n_interference: usize,
    pub n_groups: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
}

impl SbmSpec {
    fn validate(&self) -> Result<()> {
        if self.n_groups == 0 {
            return Err(Error::argument("n_groups must be positive"));
        }
        if !self.n_experimental.is_multiple_of(self.n_groups)
            || !self.n_interference.is_multiple_of(self.n_groups)
        {
            return Err(Error::argument(format!(
                "both sides must be divisible by n_groups: {} x {} units, {} groups",
                self.n_experimental, self.n_interference, self.n_groups
            )));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::argument(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        Ok(())
    }
}

/// Ground-truth labels for both sides of a generated graph.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueLabels {
    pub experimental: Vec<u32>,
    pub interference: Vec<u32>,
}

/// Draws a bipartite SBM graph. Group labels are contiguous blocks:
/// unit `i` belongs to group `i / (n / n_groups)` on its side.
pub fn generate_sbm(spec: &SbmSpec) -> Result<(BipartiteGraph, TrueLabels)> {
    spec.validate()?;
    let exp_per = spec.n_experimental / spec.n_groups;
    let int_per = spec.n_interference / spec.n_groups;
    let exp_labels: Vec<u32> = (0..spec.n_experimental)
        .map(|i| (i / exp_per) as u32)
        .collect();
    let int_labels: Vec<u32> = (0..spec.n_interference)
        .map(|s| (s / int_per) as u32)
        .collect();

    let mut rng = stream_rng(spec.seed, stream::GEN_SBM, 0);
    let mut edges = Vec::new();
    for (i, &exp_label) in exp_labels.iter().enumerate() {
        for (s, &int_label) in int_labels.iter().enumerate() {
            let p = if exp_label == int_label {
                spec.p_in
            } else {
                spec.p_out
            };
            if p > 0.0 && rng.random_bool(p) {
                edges.push((i, s, 1.0));
            }
        }
    }
    let g = BipartiteGraph::new(spec.n_experimental, spec.n_interference, edges)?;
    Ok((
        g,
        TrueLabels {
            experimental: exp_labels,
            interference: int_labels,
        },
    ))
}

/// Preferential-attachment model with latent classes. Each experimental
/// unit draws a degree `2 X`, `X ~ Zipf(zipf_exponent)`; each edge stub
/// attaches to a fresh interference unit with probability `lambda`
/// (class drawn with affinity `p` same / `q` cross), otherwise to an
/// existing unit with probability proportional to its current weighted
/// degree plus `p` (same class) or `q` (different class).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawSpec {
    pub n_experimental: usize,
    pub n_classes: usize,
    pub lambda: f64,
    pub p: f64,
    pub q: f64,
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl PowerLawSpec {
    pub fn new(
        n_experimental: usize,
        n_classes: usize,
        lambda: f64,
        p: f64,
        q: f64,
        seed: u64,
    ) -> Self {
        PowerLawSpec {
            n_experimental,
            n_classes,
            lambda,
            p,
            q,
            zipf_exponent: 3.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_classes == 0 {
            return Err(Error::argument("n_classes must be positive"));
        }
        if !(0.0..=1.0).contains(&self.lambda) || !self.lambda.is_finite() {
            return Err(Error::argument(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if self.p <= 0.0 || self.q <= 0.0 || self.p.is_nan() || self.q.is_nan() {
            return Err(Error::argument("affinities p and q must be positive"));
        }
        if self.zipf_exponent <= 1.0 {
            return Err(Error::argument(format!(
                "zipf exponent must exceed 1, got {}",
                self.zipf_exponent
            )));
        }
        Ok(())
    }
}

/// Samples a Zipf-distributed positive integer, `P(X = k)` proportional to
/// `k^-exponent` with support truncated at [`ZIPF_SUPPORT_MAX`].
pub fn zipf_sample(exponent: f64, rng: &mut ChaCha12Rng) -> Result<u64> {
    if exponent <= 1.0 || exponent.is_nan() {
        return Err(Error::argument(format!(
            "zipf exponent must exceed 1, got {exponent}"
        )));
    }
    let dist = Zipf::new(ZIPF_SUPPORT_MAX as f64, exponent)
        .map_err(|e| Error::argument(format!("zipf parameters rejected: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Draws a power-law affinity graph. Parallel stubs to the same
/// interference unit merge by summing weight.
pub fn generate_powerlaw(spec: &PowerLawSpec) -> Result<(BipartiteGraph, TrueLabels)> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, stream::GEN_POWERLAW, 0);
    let k = spec.n_classes;

    let exp_labels: Vec<u32> = (0..spec.n_experimental)
        .map(|_| rng.random_range(0..k) as u32)
        .collect();

    // interference units: class label and current weighted degree
    let mut int_labels: Vec<u32> = Vec::new();
    let mut int_degree: Vec<f64> = Vec::new();
    let mut weights: std::collections::BTreeMap<(usize, usize), f64> =
        std::collections::BTreeMap::new();

    // class probability for a fresh unit: p/(p + (K-1)q) same, q/(...) each other
    let fresh_norm = spec.p + (k as f64 - 1.0) * spec.q;

    for (i, &my_class) in exp_labels.iter().enumerate() {
        let degree = 2 * zipf_sample(spec.zipf_exponent, &mut rng)?;
        for _ in 0..degree {
            let fresh = int_labels.is_empty() || rng.random_bool(spec.lambda);
            let target = if fresh {
                let u: f64 = rng.random_range(0.0..fresh_norm);
                let class = if u < spec.p {
                    my_class
                } else {
                    // walk the K-1 other classes in ascending order
                    let slot = ((u - spec.p) / spec.q) as usize;
                    let mut others = (0..k as u32).filter(|c| *c != my_class);
                    others.nth(slot.min(k - 2)).unwrap()
                };
                int_labels.push(class);
                int_degree.push(0.0);
                int_labels.len() - 1
            } else {
                let total: f64 = int_degree
                    .iter()
                    .zip(&int_labels)
                    .map(|(d, c)| d + if *c == my_class { spec.p } else { spec.q })
                    .sum();
                let mut u: f64 = rng.random_range(0.0..total);
                let mut pick = int_labels.len() - 1;
                for (s, (d, c)) in int_degree.iter().zip(&int_labels).enumerate() {
                    let mass = d + if *c == my_class { spec.p } else { spec.q };
                    if u < mass {
                        pick = s;
                        break;
                    }
                    u -= mass;
                }
                pick
            };
            *weights.entry((i, target)).or_insert(0.0) += 1.0;
            int_degree[target] += 1.0;
        }
    }

    let edges: Vec<(usize, usize, f64)> =
        weights.into_iter().map(|((i, s), w)| (i, s, w)).collect();
    let g = BipartiteGraph::new(spec.n_experimental, int_labels.len(), edges)?;
    Ok((
        g,
        TrueLabels {
            experimental: exp_labels,
            interference: int_labels,
        },
    ))
}
