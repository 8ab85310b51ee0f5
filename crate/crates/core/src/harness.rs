//! Exact bias evaluation, brute-force oracles, and the replicated
//! experiment runner with bootstrap confidence intervals.
//!
//! Replicate draws run in parallel under per-draw derived seeds and are
//! reduced in a fixed order, so parallelism never changes output bits.

use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::Rng;
use rayon::prelude::*;

use crate::design::{sample_assignment, DesignKind, DesignSpec};
use crate::error::{Error, Result};
use crate::estimate::{dim_estimate, estimate_propensities, ips_estimate};
use crate::graph::{
    exposure_profile, fold_graph, Assignment, BipartiteGraph, FoldedGraph, NormalizationMode,
    Provenance,
};
use crate::objective::{objective_h, objective_trvar, Clustering};
use crate::outcome::{
    simulate_delta, simulate_linear, simulate_lipschitz, true_tate, DeltaModel, LipschitzModel,
    LipschitzShape, Marketplace, OutcomeModel, MARKETPLACE_TAU_REPS,
};
use crate::rng::{derive_seed, stream, stream_rng};

/// Hard cap on brute-force enumeration size.
pub const MAX_ENUMERATION: u128 = 100_000;

/// Seed tag separating propensity-estimation draws from evaluation draws.
const PROPENSITY_TAG: u64 = 0x50524f50;

/// Probability that an experimental unit has no two-hop neighbor in a
/// fixed other cluster of the symmetric bipartite block model:
/// `(1 - p q)^(2 M N / K^2)`, with `q` the within-group and `p` the
/// cross-group edge probability.
pub fn sbm_two_hop_isolation_prob(p: f64, q: f64, m: usize, n: usize, k: usize) -> f64 {
    let exponent = 2.0 * m as f64 * n as f64 / (k as f64 * k as f64);
    (1.0 - p * q).powf(exponent)
}

/// Closed-form difference-in-means bias under the linear model and a
/// balanced cluster design: `E[tau_hat] - tau = -(2/N) (K/(K-1))
/// sum_i sum_{j not in C(i)} gamma_i c_ij`. Independent of the treated
/// cluster count.
pub fn exact_bias_linear(
    folded: &FoldedGraph,
    c: &Clustering,
    gamma: &[f64],
    k: usize,
) -> Result<f64> {
    if !folded.mode().is_full() {
        return Err(Error::argument(
            "exact bias requires the fully normalized folded graph",
        ));
    }
    if folded.n() != c.len() || gamma.len() != c.len() {
        return Err(Error::argument(format!(
            "exact bias needs matching lengths, got folded {}, clustering {}, gamma {}",
            folded.n(),
            c.len(),
            gamma.len()
        )));
    }
    if k != c.k() || k < 2 {
        return Err(Error::argument(format!(
            "cluster count mismatch: k = {k}, clustering has {}",
            c.k()
        )));
    }
    if !c.is_equal_sized() {
        return Err(Error::argument(
            "the closed form assumes equally sized clusters",
        ));
    }
    let labels = c.labels();
    let mut acc = 0.0;
    for (i, j, v) in folded.entries() {
        if i != j && labels[i] != labels[j] {
            acc += gamma[i] * v;
        }
    }
    let n = c.len() as f64;
    let kf = k as f64;
    Ok(-(2.0 / n) * (kf / (kf - 1.0)) * acc)
}

fn binomial(n: usize, r: usize) -> u128 {
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Expected outcome vector given the assignment, for models whose
/// conditional expectation is closed-form.
fn expected_outcomes(model: &OutcomeModel, a: &Assignment, exposures: &[f64]) -> Result<Vec<f64>> {
    match model {
        OutcomeModel::Linear(coef) => simulate_linear(coef, a, exposures),
        OutcomeModel::Lipschitz(m) => simulate_lipschitz(m, a, exposures),
        OutcomeModel::DeltaNeighborhood(m) => Ok((0..a.len())
            .map(|i| {
                if (exposures[i] - a.sign(i)).abs() < m.delta {
                    -a.sign(i)
                } else {
                    0.0 // impure outcomes are uniform on [-1, 1]
                }
            })
            .collect()),
        OutcomeModel::Marketplace(_) => Err(Error::argument(
            "marketplace outcomes have no closed-form conditional expectation",
        )),
    }
}

/// Exact difference-in-means bias by enumerating every treated-cluster
/// subset of a balanced design: averages `E[tau_hat | z]` uniformly and
/// subtracts the true effect.
pub fn brute_force_bias(
    g: &BipartiteGraph,
    c: &Clustering,
    k_t: usize,
    model: &OutcomeModel,
) -> Result<f64> {
    let k = c.k();
    if c.len() != g.n_experimental() {
        return Err(Error::argument(format!(
            "clustering covers {} units but graph has {}",
            c.len(),
            g.n_experimental()
        )));
    }
    if k_t == 0 || k_t >= k {
        return Err(Error::argument(format!(
            "treated cluster count must satisfy 0 < k_t < k, got {k_t} of {k}"
        )));
    }
    let combos = binomial(k, k_t);
    if combos > MAX_ENUMERATION {
        return Err(Error::resource(format!(
            "enumeration of {combos} treated subsets exceeds the cap of {MAX_ENUMERATION}"
        )));
    }
    let tau = true_tate(model, g.n_experimental())?;
    let labels = c.labels();
    let mut acc = 0.0;
    for subset in (0..k).combinations(k_t) {
        let mut treated = vec![false; k];
        for cluster in subset {
            treated[cluster] = true;
        }
        let z: Vec<i8> = labels
            .iter()
            .map(|&l| if treated[l as usize] { 1 } else { -1 })
            .collect();
        let a = Assignment::new(z, Some(k), Some(k_t), Provenance::default())?;
        let profile = exposure_profile(g, &a, NormalizationMode::FULL)?;
        let y_bar = expected_outcomes(model, &a, &profile.exposures)?;
        acc += dim_estimate(&y_bar, &a)?;
    }
    Ok(acc / combos as f64 - tau)
}

/// Model family for [`lemma_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundFamily {
    Lipschitz { l: f64, shape: LipschitzShape },
    Delta { delta: f64 },
}

/// Measured bias against its upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub measured: f64,
    pub bound: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.measured <= self.bound + 1e-10
    }
}

/// Checks the bias bound for a model family on one instance: the bound is
/// `(2/N)(K/(K-1)) L H(C)` for `L`-Lipschitz outcomes and
/// `(2B/(N delta))(K/(K-1)) H(C)` for the neighborhood model. The measured
/// side is the largest brute-force bias magnitude over all interior
/// treated-cluster counts.
pub fn lemma_bound_check(
    g: &BipartiteGraph,
    c: &Clustering,
    family: &BoundFamily,
) -> Result<BoundCheck> {
    let n = g.n_experimental() as f64;
    let k = c.k();
    if k < 2 {
        return Err(Error::argument("bound check needs k >= 2"));
    }
    let folded = fold_graph(g, NormalizationMode::FULL);
    let h = objective_h(&folded, c)?;
    let kf = k as f64;
    let (model, coeff) = match family {
        BoundFamily::Lipschitz { l, shape } => {
            let model = OutcomeModel::Lipschitz(LipschitzModel::new(
                vec![0.0; g.n_experimental()],
                vec![0.0; g.n_experimental()],
                *l,
                *shape,
            )?);
            (model, (2.0 / n) * (kf / (kf - 1.0)) * l)
        }
        BoundFamily::Delta { delta } => {
            let model = OutcomeModel::DeltaNeighborhood(DeltaModel::new(*delta)?);
            (
                model,
                (2.0 * DeltaModel::BOUND / (n * delta)) * (kf / (kf - 1.0)),
            )
        }
    };
    let mut measured: f64 = 0.0;
    for k_t in 1..k {
        measured = measured.max(brute_force_bias(g, c, k_t, &model)?.abs());
    }
    Ok(BoundCheck {
        measured,
        bound: coeff * h,
    })
}

/// A design under evaluation, with a printable identifier.
#[derive(Debug, Clone)]
pub struct NamedDesign {
    pub id: String,
    pub spec: DesignSpec,
}

impl NamedDesign {
    pub fn new(id: impl Into<String>, spec: DesignSpec) -> Self {
        NamedDesign {
            id: id.into(),
            spec,
        }
    }
}

/// Runner configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub draws: usize,
    pub master_seed: u64,
    /// When set, IPS estimates with this full-exposure band are reported
    /// alongside the difference in means.
    pub ips_delta: Option<f64>,
    pub bootstrap_resamples: usize,
    /// Marketplace outcomes are measured over a single round per draw;
    /// raise this to average several rounds instead.
    pub market_rounds_per_draw: usize,
}

impl ExperimentConfig {
    pub fn new(draws: usize, master_seed: u64) -> Self {
        ExperimentConfig {
            draws,
            master_seed,
            ips_delta: None,
            bootstrap_resamples: 1000,
            market_rounds_per_draw: 1,
        }
    }

    pub fn with_ips_delta(mut self, delta: f64) -> Self {
        self.ips_delta = Some(delta);
        self
    }

    pub fn with_market_rounds(mut self, rounds: usize) -> Self {
        self.market_rounds_per_draw = rounds.max(1);
        self
    }
}

/// A point estimate with its 95% percentile-bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMetric {
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// IPS metrics mirrored alongside the DIM metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct IpsReport {
    pub bias: EvalMetric,
    pub rel_bias: EvalMetric,
    pub std: EvalMetric,
    pub rmse: EvalMetric,
    pub mean_skipped: f64,
}

/// Evaluation summary for one design.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub design: String,
    pub objective_h: Option<f64>,
    pub objective_trvar: Option<f64>,
    pub tau: f64,
    pub bias: EvalMetric,
    pub rel_bias: EvalMetric,
    pub std: EvalMetric,
    pub rmse: EvalMetric,
    pub ips: Option<IpsReport>,
    pub draws: usize,
    pub seed: u64,
    pub runtime: Duration,
}

struct Summary {
    bias: f64,
    rel_bias: f64,
    std: f64,
    rmse: f64,
}

fn summarize(estimates: &[f64], tau: f64) -> Summary {
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let bias = mean - tau;
    let rel_bias = if tau == 0.0 {
        f64::INFINITY
    } else {
        bias.abs() / tau.abs()
    };
    let var = if estimates.len() > 1 {
        estimates
            .iter()
            .map(|x| (x - mean) * (x - mean))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    let rmse = (estimates.iter().map(|x| (x - tau) * (x - tau)).sum::<f64>() / n).sqrt();
    Summary {
        bias,
        rel_bias,
        std: var.sqrt(),
        rmse,
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() as f64 - 1.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

fn interval(samples: &mut [f64], value: f64) -> EvalMetric {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    EvalMetric {
        value,
        ci_lo: percentile(samples, 0.025),
        ci_hi: percentile(samples, 0.975),
    }
}

/// Percentile-bootstrap metrics over per-draw estimates. When the true
/// effect is itself Monte Carlo (`tau_draws` present), each resample also
/// redraws the effect replicates so their uncertainty propagates into the
/// intervals.
fn bootstrap_metrics(
    estimates: &[f64],
    tau: f64,
    tau_draws: Option<&[f64]>,
    resamples: usize,
    rng: &mut rand_chacha::ChaCha12Rng,
) -> (EvalMetric, EvalMetric, EvalMetric, EvalMetric) {
    let point = summarize(estimates, tau);
    let n = estimates.len();
    let mut biases = Vec::with_capacity(resamples);
    let mut rels = Vec::with_capacity(resamples);
    let mut stds = Vec::with_capacity(resamples);
    let mut rmses = Vec::with_capacity(resamples);
    let mut resample = Vec::with_capacity(n);
    for _ in 0..resamples {
        resample.clear();
        for _ in 0..n {
            resample.push(estimates[rng.random_range(0..n)]);
        }
        let tau_b = match tau_draws {
            Some(draws) => {
                let mut acc = 0.0;
                for _ in 0..draws.len() {
                    acc += draws[rng.random_range(0..draws.len())];
                }
                acc / draws.len() as f64
            }
            None => tau,
        };
        let s = summarize(&resample, tau_b);
        biases.push(s.bias);
        rels.push(s.rel_bias);
        stds.push(s.std);
        rmses.push(s.rmse);
    }
    (
        interval(&mut biases, point.bias),
        interval(&mut rels, point.rel_bias),
        interval(&mut stds, point.std),
        interval(&mut rmses, point.rmse),
    )
}

fn design_clustering(spec: &DesignSpec) -> Option<&Clustering> {
    match spec.kind() {
        DesignKind::BalancedCluster { clustering, .. } => Some(clustering),
        DesignKind::ClusterBernoulli { clustering, .. } => Some(clustering),
        DesignKind::UnitBernoulli { .. } => None,
    }
}

/// Runs every design for `cfg.draws` replicate assignments: samples the
/// assignment, computes exposures, simulates outcomes, and aggregates
/// difference-in-means (and optionally IPS) bias, relative bias, standard
/// deviation and RMSE against the true effect, each with a 95%
/// percentile-bootstrap interval.
///
/// Identical configuration yields bit-identical reports.
pub fn run_experiment(
    g: &BipartiteGraph,
    designs: &[NamedDesign],
    model: &OutcomeModel,
    cfg: &ExperimentConfig,
) -> Result<Vec<EvalReport>> {
    if cfg.draws < 2 {
        return Err(Error::argument("run_experiment needs draws >= 2"));
    }
    let n = g.n_experimental();
    for nd in designs {
        if nd.spec.n_units() != n {
            return Err(Error::argument(format!(
                "design {} covers {} units but graph has {n}",
                nd.id,
                nd.spec.n_units()
            )));
        }
    }
    let market = match model {
        OutcomeModel::Marketplace(spec) => {
            if spec.n_customers != n {
                return Err(Error::argument(format!(
                    "marketplace has {} customers but graph has {n} experimental units",
                    spec.n_customers
                )));
            }
            Some(Marketplace::new(spec.clone())?)
        }
        _ => None,
    };
    let tau_draws: Option<Vec<f64>> = market.as_ref().map(|m| m.tate_draws(MARKETPLACE_TAU_REPS));
    let tau = match &tau_draws {
        Some(draws) => draws.iter().sum::<f64>() / draws.len() as f64,
        None => true_tate(model, n)?,
    };
    let folded = fold_graph(g, NormalizationMode::FULL);

    let mut reports = Vec::with_capacity(designs.len());
    for (design_idx, nd) in designs.iter().enumerate() {
        let start = Instant::now();
        let (h, trvar) = match design_clustering(&nd.spec) {
            Some(c) => (Some(objective_h(&folded, c)?), Some(objective_trvar(g, c)?)),
            None => (None, None),
        };
        let table = match cfg.ips_delta {
            Some(delta) => {
                let prop_spec = nd
                    .spec
                    .with_master_seed(derive_seed(nd.spec.master_seed(), PROPENSITY_TAG));
                Some(estimate_propensities(&prop_spec, g, delta, cfg.draws)?)
            }
            None => None,
        };

        let per_draw: Vec<(f64, Option<(f64, usize)>)> = (0..cfg.draws)
            .into_par_iter()
            .map(|r| -> Result<(f64, Option<(f64, usize)>)> {
                let a = sample_assignment(&nd.spec, r as u64);
                let profile = exposure_profile(g, &a, NormalizationMode::FULL)?;
                let y = match model {
                    OutcomeModel::Linear(coef) => simulate_linear(coef, &a, &profile.exposures)?,
                    OutcomeModel::Lipschitz(m) => simulate_lipschitz(m, &a, &profile.exposures)?,
                    OutcomeModel::DeltaNeighborhood(m) => {
                        let mut rng = stream_rng(
                            cfg.master_seed,
                            stream::OUTCOME,
                            ((design_idx as u64) << 32) | r as u64,
                        );
                        simulate_delta(&a, &profile.exposures, m, &mut rng)
                    }
                    OutcomeModel::Marketplace(_) => {
                        let mut rng = stream_rng(
                            cfg.master_seed,
                            stream::OUTCOME,
                            ((design_idx as u64) << 32) | r as u64,
                        );
                        let market = market.as_ref().expect("market built above");
                        let mut y = vec![0.0; n];
                        for _ in 0..cfg.market_rounds_per_draw {
                            let round = market.round(Some(&a), &mut rng)?;
                            for (acc, v) in y.iter_mut().zip(&round.y) {
                                *acc += v;
                            }
                        }
                        for v in &mut y {
                            *v /= cfg.market_rounds_per_draw as f64;
                        }
                        y
                    }
                };
                let dim = dim_estimate(&y, &a)?;
                let ips = match &table {
                    Some(t) => {
                        let est = ips_estimate(&y, &a, &profile.exposures, t)?;
                        Some((est.value, est.skipped))
                    }
                    None => None,
                };
                Ok((dim, ips))
            })
            .collect::<Result<Vec<_>>>()?;

        let estimates: Vec<f64> = per_draw.iter().map(|(d, _)| *d).collect();
        let mut rng = stream_rng(cfg.master_seed, stream::BOOTSTRAP, design_idx as u64);
        let (bias, rel_bias, std, rmse) = bootstrap_metrics(
            &estimates,
            tau,
            tau_draws.as_deref(),
            cfg.bootstrap_resamples,
            &mut rng,
        );
        let ips = if table.is_some() {
            let ips_estimates: Vec<f64> = per_draw
                .iter()
                .map(|(_, i)| i.expect("ips computed").0)
                .collect();
            let skipped: f64 = per_draw
                .iter()
                .map(|(_, i)| i.expect("ips computed").1 as f64)
                .sum::<f64>()
                / cfg.draws as f64;
            let (ib, irel, istd, irmse) = bootstrap_metrics(
                &ips_estimates,
                tau,
                tau_draws.as_deref(),
                cfg.bootstrap_resamples,
                &mut rng,
            );
            Some(IpsReport {
                bias: ib,
                rel_bias: irel,
                std: istd,
                rmse: irmse,
                mean_skipped: skipped,
            })
        } else {
            None
        };

        reports.push(EvalReport {
            design: nd.id.clone(),
            objective_h: h,
            objective_trvar: trvar,
            tau,
            bias,
            rel_bias,
            std,
            rmse,
            ips,
            draws: cfg.draws,
            seed: cfg.master_seed,
            runtime: start.elapsed(),
        });
    }
    Ok(reports)
}
