//! Treatment-effect estimators and their diagnostics.
//!
//! The difference-in-means estimator uses realized arm counts. The inverse
//! propensity score estimator reweighs fully exposed observations (those
//! with `|z_i - e_i| < delta`) by Monte-Carlo full-exposure probabilities;
//! units whose estimated propensity is zero are skipped and counted rather
//! than crashing the run, since full exposure can be astronomically rare
//! on connected graphs.

use crate::design::{sample_assignment, DesignSpec};
use crate::error::{Error, Result};
use crate::graph::{exposure_profile, Assignment, BipartiteGraph, NormalizationMode};

/// Per-unit Monte-Carlo probabilities of full treatment and full control.
///
/// The full-exposure rule is the symmetric band `|z_i - e_i| <
/// delta_exposure` (strict), with `z_i` matching the arm.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityTable {
    pub p_treated: Vec<f64>,
    pub p_control: Vec<f64>,
    pub draws: usize,
    pub delta_exposure: f64,
}

impl PropensityTable {
    pub fn new(
        p_treated: Vec<f64>,
        p_control: Vec<f64>,
        draws: usize,
        delta_exposure: f64,
    ) -> Result<Self> {
        if p_treated.len() != p_control.len() {
            return Err(Error::argument("propensity vectors must share one length"));
        }
        let in_range = |v: &[f64]| v.iter().all(|p| (0.0..=1.0).contains(p));
        if !in_range(&p_treated) || !in_range(&p_control) {
            return Err(Error::argument("propensities must lie in [0, 1]"));
        }
        Ok(PropensityTable {
            p_treated,
            p_control,
            draws,
            delta_exposure,
        })
    }

    pub fn len(&self) -> usize {
        self.p_treated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_treated.is_empty()
    }
}

/// Whether unit `i` is fully treated/controlled under the band rule.
fn fully_exposed(z_i: f64, e_i: f64, delta: f64) -> bool {
    (z_i - e_i).abs() < delta
}

/// Difference in means: treated mean minus control mean, with realized
/// arm counts.
pub fn dim_estimate(y: &[f64], a: &Assignment) -> Result<f64> {
    if y.len() != a.len() {
        return Err(Error::argument(format!(
            "outcome length {} does not match assignment length {}",
            y.len(),
            a.len()
        )));
    }
    let mut sum_t = 0.0;
    let mut sum_c = 0.0;
    let mut n_t = 0usize;
    let mut n_c = 0usize;
    for (i, &v) in y.iter().enumerate() {
        if a.z()[i] == 1 {
            sum_t += v;
            n_t += 1;
        } else {
            sum_c += v;
            n_c += 1;
        }
    }
    if n_t == 0 || n_c == 0 {
        return Err(Error::estimation(format!(
            "difference in means needs both arms populated, got n_t = {n_t}, n_c = {n_c}"
        )));
    }
    Ok(sum_t / n_t as f64 - sum_c / n_c as f64)
}

/// Estimates full-exposure propensities by sampling `draws` assignments
/// from the design and recording the empirical frequency of
/// `|z_i - e_i| < delta_exposure` in each arm. Exposures are fully
/// normalized, with isolated units self-exposed.
///
/// Zero frequencies are recorded as 0; the IPS estimator then skips those
/// units and reports the count.
pub fn estimate_propensities(
    spec: &DesignSpec,
    g: &BipartiteGraph,
    delta_exposure: f64,
    draws: usize,
) -> Result<PropensityTable> {
    if draws == 0 {
        return Err(Error::argument("propensity estimation needs draws >= 1"));
    }
    if spec.n_units() != g.n_experimental() {
        return Err(Error::argument(format!(
            "design covers {} units but graph has {}",
            spec.n_units(),
            g.n_experimental()
        )));
    }
    if delta_exposure <= 0.0 || delta_exposure.is_nan() {
        return Err(Error::argument(format!(
            "delta_exposure must be positive, got {delta_exposure}"
        )));
    }
    let n = g.n_experimental();
    let mut hits_t = vec![0usize; n];
    let mut hits_c = vec![0usize; n];
    for draw in 0..draws {
        let a = sample_assignment(spec, draw as u64);
        let profile = exposure_profile(g, &a, NormalizationMode::FULL)?;
        for i in 0..n {
            if fully_exposed(a.sign(i), profile.exposures[i], delta_exposure) {
                if a.z()[i] == 1 {
                    hits_t[i] += 1;
                } else {
                    hits_c[i] += 1;
                }
            }
        }
    }
    let to_freq = |hits: Vec<usize>| hits.into_iter().map(|h| h as f64 / draws as f64).collect();
    PropensityTable::new(to_freq(hits_t), to_freq(hits_c), draws, delta_exposure)
}

/// IPS estimate plus the number of fully exposed units skipped for zero
/// recorded propensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpsEstimate {
    pub value: f64,
    pub skipped: usize,
}

/// `(1/N) sum_i [ Y_i 1{fully treated} / P_i(T) - Y_i 1{fully controlled}
/// / P_i(C) ]` under the table's band rule.
pub fn ips_estimate(
    y: &[f64],
    a: &Assignment,
    exposures: &[f64],
    table: &PropensityTable,
) -> Result<IpsEstimate> {
    let n = a.len();
    if y.len() != n || exposures.len() != n || table.len() != n {
        return Err(Error::argument(format!(
            "ips inputs must share one length, got y {}, assignment {n}, exposures {}, table {}",
            y.len(),
            exposures.len(),
            table.len()
        )));
    }
    let mut acc = 0.0;
    let mut skipped = 0usize;
    for i in 0..n {
        if !fully_exposed(a.sign(i), exposures[i], table.delta_exposure) {
            continue;
        }
        if a.z()[i] == 1 {
            if table.p_treated[i] > 0.0 {
                acc += y[i] / table.p_treated[i];
            } else {
                skipped += 1;
            }
        } else if table.p_control[i] > 0.0 {
            acc -= y[i] / table.p_control[i];
        } else {
            skipped += 1;
        }
    }
    Ok(IpsEstimate {
        value: acc / n as f64,
        skipped,
    })
}

/// IPS variance under Bernoulli cluster randomization, from the pure
/// potential outcomes: `(1/N^2) sum_i [ Y_{i,T}^2 / P_i(T) + Y_{i,C}^2 /
/// P_i(C) ]`. Units with a zero propensity are excluded from the sum and
/// flagged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpsVariance {
    pub value: f64,
    pub infinite_units: usize,
}

pub fn ips_variance_bernoulli(
    y_pure_t: &[f64],
    y_pure_c: &[f64],
    table: &PropensityTable,
) -> Result<IpsVariance> {
    let n = table.len();
    if y_pure_t.len() != n || y_pure_c.len() != n {
        return Err(Error::argument(format!(
            "pure outcome vectors must match table length {n}"
        )));
    }
    let mut acc = 0.0;
    let mut infinite_units = 0usize;
    for i in 0..n {
        if table.p_treated[i] > 0.0 && table.p_control[i] > 0.0 {
            acc += y_pure_t[i] * y_pure_t[i] / table.p_treated[i]
                + y_pure_c[i] * y_pure_c[i] / table.p_control[i];
        } else {
            infinite_units += 1;
        }
    }
    Ok(IpsVariance {
        value: acc / (n as f64 * n as f64),
        infinite_units,
    })
}
