//! Randomized treatment-assignment samplers.
//!
//! Each draw is a pure function of `(master seed, draw index)`, so
//! replicates are order-independent and embarrassingly parallel.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Assignment, Provenance};
use crate::objective::Clustering;
use crate::rng::{stream, stream_rng};

/// The randomization scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignKind {
    /// A uniformly random `k_t`-subset of clusters is treated; every member
    /// inherits its cluster's value.
    BalancedCluster { clustering: Clustering, k_t: usize },
    /// Independent per-unit coin flips with `P(+1) = p`. The closed
    /// endpoints are allowed so degenerate all-treated/all-control
    /// assignments can be constructed for testing.
    UnitBernoulli { n: usize, p: f64 },
    /// Independent per-cluster coin flips with `P(+1) = p`.
    ClusterBernoulli { clustering: Clustering, p: f64 },
}

/// A design plus the master seed for its draw stream.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    kind: DesignKind,
    master_seed: u64,
}

impl DesignSpec {
    pub fn balanced_cluster(clustering: Clustering, k_t: usize, master_seed: u64) -> Result<Self> {
        if k_t == 0 || k_t >= clustering.k() {
            return Err(Error::argument(format!(
                "treated cluster count must satisfy 0 < k_t < k, got k_t = {k_t}, k = {}",
                clustering.k()
            )));
        }
        Ok(DesignSpec {
            kind: DesignKind::BalancedCluster { clustering, k_t },
            master_seed,
        })
    }

    pub fn unit_bernoulli(n: usize, p: f64, master_seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(Error::argument(format!(
                "probability must lie in [0, 1], got {p}"
            )));
        }
        Ok(DesignSpec {
            kind: DesignKind::UnitBernoulli { n, p },
            master_seed,
        })
    }

    pub fn cluster_bernoulli(clustering: Clustering, p: f64, master_seed: u64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::argument(format!(
                "probability must lie in (0, 1), got {p}"
            )));
        }
        Ok(DesignSpec {
            kind: DesignKind::ClusterBernoulli { clustering, p },
            master_seed,
        })
    }

    pub fn kind(&self) -> &DesignKind {
        &self.kind
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// The same design with a different draw stream, e.g. for propensity
    /// estimation draws that must stay independent of evaluation draws.
    pub fn with_master_seed(&self, master_seed: u64) -> Self {
        DesignSpec {
            kind: self.kind.clone(),
            master_seed,
        }
    }

    pub fn n_units(&self) -> usize {
        match &self.kind {
            DesignKind::BalancedCluster { clustering, .. } => clustering.len(),
            DesignKind::UnitBernoulli { n, .. } => *n,
            DesignKind::ClusterBernoulli { clustering, .. } => clustering.len(),
        }
    }

    /// Short identifier recorded as assignment provenance; comma-free so it
    /// can sit in a CSV column.
    pub fn id(&self) -> String {
        match &self.kind {
            DesignKind::BalancedCluster { clustering, k_t } => {
                format!("balanced_cluster_k{}_kt{k_t}", clustering.k())
            }
            DesignKind::UnitBernoulli { p, .. } => format!("unit_bernoulli_p{p}"),
            DesignKind::ClusterBernoulli { clustering, p } => {
                format!("cluster_bernoulli_k{}_p{p}", clustering.k())
            }
        }
    }
}

/// Draws the assignment with index `draw_index` from the design's stream.
pub fn sample_assignment(spec: &DesignSpec, draw_index: u64) -> Assignment {
    let mut rng = stream_rng(spec.master_seed, stream::DESIGN, draw_index);
    let provenance = Provenance {
        design: spec.id(),
        seed: spec.master_seed,
        draw: draw_index,
    };
    match &spec.kind {
        DesignKind::BalancedCluster { clustering, k_t } => {
            let k = clustering.k();
            let chosen = rand::seq::index::sample(&mut rng, k, *k_t);
            let mut treated = vec![false; k];
            for c in chosen {
                treated[c] = true;
            }
            let z: Vec<i8> = clustering
                .labels()
                .iter()
                .map(|&l| if treated[l as usize] { 1 } else { -1 })
                .collect();
            Assignment::new(z, Some(k), Some(*k_t), provenance).expect("signs are valid")
        }
        DesignKind::UnitBernoulli { n, p } => {
            let z: Vec<i8> = (0..*n)
                .map(|_| if rng.random_bool(*p) { 1 } else { -1 })
                .collect();
            Assignment::new(z, None, None, provenance).expect("signs are valid")
        }
        DesignKind::ClusterBernoulli { clustering, p } => {
            let k = clustering.k();
            let signs: Vec<i8> = (0..k)
                .map(|_| if rng.random_bool(*p) { 1 } else { -1 })
                .collect();
            let z: Vec<i8> = clustering
                .labels()
                .iter()
                .map(|&l| signs[l as usize])
                .collect();
            Assignment::new(z, Some(k), None, provenance).expect("signs are valid")
        }
    }
}

/// Counts of treated and control units; `n_t + n_c = N`.
pub fn treated_counts(a: &Assignment) -> (usize, usize) {
    let n_t = a.z().iter().filter(|&&v| v == 1).count();
    (n_t, a.len() - n_t)
}
