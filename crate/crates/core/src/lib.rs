//! Cluster-randomized experimental design on one-sided bipartite
//! interference graphs.
//!
//! Experimental units (where treatment is assigned and outcomes are measured)
//! interact only through interference units on the other side of a weighted
//! bipartite graph. This crate builds the induced ("folded") graph over
//! experimental units, searches for a bias-minimizing balanced clustering,
//! samples randomized assignments, simulates potential outcomes under several
//! interference models, and measures estimator bias and variance against
//! closed-form and brute-force oracles.
//!
//! The main pipeline:
//!
//! 1. [`graph`] — load or generate a [`graph::BipartiteGraph`], compute doses
//!    and exposures, and fold it into a [`graph::FoldedGraph`].
//! 2. [`partition`] — find a balanced clustering of the folded graph that
//!    minimizes cross-cluster influence.
//! 3. [`design`] — sample treatment assignments from a cluster-randomized
//!    (or Bernoulli) design.
//! 4. [`outcome`] / [`estimate`] — simulate potential outcomes and compute
//!    difference-in-means or inverse-propensity estimates.
//! 5. [`harness`] — run replicated experiments with bootstrap confidence
//!    intervals, or evaluate bias exactly where a closed form exists.
//!
//! ```
//! use clusterdesign::design::DesignSpec;
//! use clusterdesign::gen::{generate_sbm, SbmSpec};
//! use clusterdesign::graph::{fold_graph, NormalizationMode};
//! use clusterdesign::harness::{run_experiment, ExperimentConfig, NamedDesign};
//! use clusterdesign::outcome::{linear_preset, OutcomeModel};
//! use clusterdesign::partition::{balanced_partition, PartitionConfig, SymmetricGraph};
//!
//! let (graph, _labels) = generate_sbm(&SbmSpec {
//!     n_experimental: 40,
//!     n_interference: 60,
//!     n_groups: 4,
//!     p_in: 0.6,
//!     p_out: 0.02,
//!     seed: 7,
//! })?;
//! let folded = fold_graph(&graph, NormalizationMode::FULL);
//! let clusters = balanced_partition(
//!     &SymmetricGraph::from_folded(&folded),
//!     &PartitionConfig::new(4),
//! )?;
//! let designs = vec![
//!     NamedDesign::new("clustered", DesignSpec::balanced_cluster(clusters, 2, 1)?),
//!     NamedDesign::new("unit", DesignSpec::unit_bernoulli(40, 0.5, 2)?),
//! ];
//! let model = OutcomeModel::Linear(linear_preset(40, 7));
//! let reports = run_experiment(&graph, &designs, &model, &ExperimentConfig::new(400, 3))?;
//! // cluster randomization on a clusterable graph cuts the bias
//! assert!(reports[0].bias.value.abs() < reports[1].bias.value.abs());
//! # Ok::<(), clusterdesign::Error>(())
//! ```

pub mod design;
pub mod error;
pub mod estimate;
pub mod gen;
pub mod graph;
pub mod harness;
pub mod io;
pub mod objective;
pub mod outcome;
pub mod partition;
pub mod rng;

pub use error::{Error, Result};
