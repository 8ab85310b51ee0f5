//! Bipartite interference graphs, dose/exposure computation, and the folded
//! experimental-unit graph.
//!
//! A weighted bipartite graph connects `N` experimental units to `M`
//! interference units. A treatment assignment over the experimental units
//! induces a *dose* on each interference unit (the weighted average of its
//! neighbors' assignments) and an *exposure* on each experimental unit (the
//! weighted average of its neighbors' doses). Folding the two-hop structure
//! yields a directed graph over experimental units whose linear map `C`
//! satisfies `e = C z`.
//!
//! All types are immutable after construction and all operations are pure,
//! so everything here is safe to share across threads.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Tolerance used by row-sum checks on fully normalized folded graphs.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Which of the two averaging steps are normalized by their total edge
/// weight. The fully normalized combination keeps doses and exposures in
/// `[-1, 1]`; dropping either normalization yields the corresponding
/// unnormalized linear combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NormalizationMode {
    pub dose_normalized: bool,
    pub exposure_normalized: bool,
}

impl NormalizationMode {
    /// Both the dose and the exposure are convex combinations.
    pub const FULL: NormalizationMode = NormalizationMode {
        dose_normalized: true,
        exposure_normalized: true,
    };

    /// All four combinations, fully normalized first.
    pub fn all() -> [NormalizationMode; 4] {
        [
            NormalizationMode {
                dose_normalized: true,
                exposure_normalized: true,
            },
            NormalizationMode {
                dose_normalized: true,
                exposure_normalized: false,
            },
            NormalizationMode {
                dose_normalized: false,
                exposure_normalized: true,
            },
            NormalizationMode {
                dose_normalized: false,
                exposure_normalized: false,
            },
        ]
    }

    pub fn is_full(&self) -> bool {
        self.dose_normalized && self.exposure_normalized
    }

    /// Parses the two-letter CLI code: first letter is the exposure, second
    /// the dose; `n` = normalized, `u` = unnormalized. `"nn"` is Eq.-style
    /// full normalization.
    pub fn parse(code: &str) -> Result<Self> {
        let bytes = code.as_bytes();
        if bytes.len() != 2 || !bytes.iter().all(|b| *b == b'n' || *b == b'u') {
            return Err(Error::argument(format!(
                "normalization mode must be one of nn|nu|un|uu, got {code:?}"
            )));
        }
        Ok(NormalizationMode {
            exposure_normalized: bytes[0] == b'n',
            dose_normalized: bytes[1] == b'n',
        })
    }

    pub fn code(&self) -> &'static str {
        match (self.exposure_normalized, self.dose_normalized) {
            (true, true) => "nn",
            (true, false) => "nu",
            (false, true) => "un",
            (false, false) => "uu",
        }
    }
}

/// Weighted bipartite graph between experimental and interference units.
///
/// Construction canonicalizes the edge list (sorted by `(exp, int)`),
/// rejects duplicate pairs and non-finite or negative weights, and caches
/// the per-unit weight sums `S_i` (experimental side) and `T_s`
/// (interference side).
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    n_experimental: usize,
    n_interference: usize,
    edges: Vec<(usize, usize, f64)>,
    exp_adj: Vec<Vec<(usize, f64)>>,
    int_adj: Vec<Vec<(usize, f64)>>,
    exp_weight: Vec<f64>,
    int_weight: Vec<f64>,
}

impl BipartiteGraph {
    pub fn new(
        n_experimental: usize,
        n_interference: usize,
        mut edges: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        edges.sort_by_key(|&(i, s, _)| (i, s));
        let mut exp_adj = vec![Vec::new(); n_experimental];
        let mut int_adj = vec![Vec::new(); n_interference];
        let mut exp_weight = vec![0.0; n_experimental];
        let mut int_weight = vec![0.0; n_interference];
        for (idx, &(i, s, w)) in edges.iter().enumerate() {
            if i >= n_experimental {
                return Err(Error::argument(format!(
                    "experimental index {i} out of range (n = {n_experimental})"
                )));
            }
            if s >= n_interference {
                return Err(Error::argument(format!(
                    "interference index {s} out of range (m = {n_interference})"
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::argument(format!(
                    "edge ({i}, {s}) has invalid weight {w}; weights must be finite and >= 0"
                )));
            }
            if idx > 0 && (edges[idx - 1].0, edges[idx - 1].1) == (i, s) {
                return Err(Error::argument(format!("duplicate edge ({i}, {s})")));
            }
            exp_adj[i].push((s, w));
            int_adj[s].push((i, w));
            exp_weight[i] += w;
            int_weight[s] += w;
        }
        Ok(BipartiteGraph {
            n_experimental,
            n_interference,
            edges,
            exp_adj,
            int_adj,
            exp_weight,
            int_weight,
        })
    }

    pub fn n_experimental(&self) -> usize {
        self.n_experimental
    }

    pub fn n_interference(&self) -> usize {
        self.n_interference
    }

    /// Canonical edge list, sorted by `(exp, int)`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// `S_i`: total edge weight incident to experimental unit `i`.
    pub fn exposure_weight(&self, i: usize) -> f64 {
        self.exp_weight[i]
    }

    /// `T_s`: total edge weight incident to interference unit `s`.
    pub fn dose_weight(&self, s: usize) -> f64 {
        self.int_weight[s]
    }

    /// Interference neighbors `(s, w_is)` of experimental unit `i`.
    pub fn exp_neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.exp_adj[i]
    }

    /// Experimental neighbors `(i, w_is)` of interference unit `s`.
    pub fn int_neighbors(&self, s: usize) -> &[(usize, f64)] {
        &self.int_adj[s]
    }
}

/// A treatment assignment over the experimental units, together with the
/// design metadata that produced it. Every entry is exactly -1 or +1.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    z: Vec<i8>,
    /// Cluster count of the producing design, when cluster-randomized.
    pub k: Option<usize>,
    /// Treated-cluster count, for balanced cluster designs.
    pub k_t: Option<usize>,
    pub provenance: Provenance,
}

/// Identifies the design and seed that generated an assignment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub design: String,
    pub seed: u64,
    pub draw: u64,
}

impl Assignment {
    pub fn new(
        z: Vec<i8>,
        k: Option<usize>,
        k_t: Option<usize>,
        provenance: Provenance,
    ) -> Result<Self> {
        if let Some(&bad) = z.iter().find(|v| **v != 1 && **v != -1) {
            return Err(Error::argument(format!(
                "assignment entries must be -1 or +1, got {bad}"
            )));
        }
        Ok(Assignment {
            z,
            k,
            k_t,
            provenance,
        })
    }

    /// An assignment with no design metadata, for tests and file loading.
    pub fn from_signs(z: Vec<i8>) -> Result<Self> {
        Assignment::new(z, None, None, Provenance::default())
    }

    pub fn z(&self) -> &[i8] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn sign(&self, i: usize) -> f64 {
        f64::from(self.z[i])
    }

    pub fn signs(&self) -> Vec<f64> {
        self.z.iter().map(|&v| f64::from(v)).collect()
    }
}

/// Raw exposure of one experimental unit. Units with no edges have no
/// interference path at all; they are reported as [`Exposure::SelfExposed`]
/// and resolved by the caller to their own assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exposure {
    Value(f64),
    SelfExposed,
}

impl Exposure {
    pub fn resolve(self, z_i: f64) -> f64 {
        match self {
            Exposure::Value(v) => v,
            Exposure::SelfExposed => z_i,
        }
    }
}

/// Doses and resolved exposures for one assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureProfile {
    pub doses: Vec<f64>,
    pub exposures: Vec<f64>,
    pub mode: NormalizationMode,
}

/// Dose of every interference unit under assignment `z`.
///
/// Normalized: `d_s = sum_i w_is z_i / T_s`; unnormalized drops the
/// division. An isolated interference unit (`T_s = 0`) gets dose 0 under
/// both modes: it influences nothing and 0 is neutral in the exposure
/// average.
pub fn compute_doses(
    g: &BipartiteGraph,
    a: &Assignment,
    mode: NormalizationMode,
) -> Result<Vec<f64>> {
    if a.len() != g.n_experimental() {
        return Err(Error::argument(format!(
            "assignment length {} does not match n_experimental {}",
            a.len(),
            g.n_experimental()
        )));
    }
    let mut doses = vec![0.0; g.n_interference()];
    for (s, dose) in doses.iter_mut().enumerate() {
        let total = g.dose_weight(s);
        if total == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for &(i, w) in g.int_neighbors(s) {
            acc += w * a.sign(i);
        }
        *dose = if mode.dose_normalized {
            acc / total
        } else {
            acc
        };
    }
    Ok(doses)
}

/// Exposure of every experimental unit given the doses.
///
/// Normalized: `e_i = sum_s w_is d_s / S_i`; unnormalized drops the
/// division. Units with `S_i = 0` are sentinel [`Exposure::SelfExposed`].
pub fn compute_exposures(
    g: &BipartiteGraph,
    doses: &[f64],
    mode: NormalizationMode,
) -> Result<Vec<Exposure>> {
    if doses.len() != g.n_interference() {
        return Err(Error::argument(format!(
            "dose vector length {} does not match n_interference {}",
            doses.len(),
            g.n_interference()
        )));
    }
    let mut out = Vec::with_capacity(g.n_experimental());
    for i in 0..g.n_experimental() {
        let total = g.exposure_weight(i);
        if total == 0.0 {
            out.push(Exposure::SelfExposed);
            continue;
        }
        let mut acc = 0.0;
        for &(s, w) in g.exp_neighbors(i) {
            acc += w * doses[s];
        }
        out.push(Exposure::Value(if mode.exposure_normalized {
            acc / total
        } else {
            acc
        }));
    }
    Ok(out)
}

/// Doses plus exposures for an assignment, with self-exposed units
/// resolved to their own sign.
pub fn exposure_profile(
    g: &BipartiteGraph,
    a: &Assignment,
    mode: NormalizationMode,
) -> Result<ExposureProfile> {
    let doses = compute_doses(g, a, mode)?;
    let raw = compute_exposures(g, &doses, mode)?;
    let exposures = raw
        .iter()
        .enumerate()
        .map(|(i, e)| e.resolve(a.sign(i)))
        .collect();
    Ok(ExposureProfile {
        doses,
        exposures,
        mode,
    })
}

/// Induced weighted directed graph over experimental units: `c_ij` is half
/// the influence of flipping `z_j` on `e_i`, so that `e = C z`.
///
/// The diagonal is stored (it is part of the `e = C z` identity) but every
/// cut objective excludes it. Rows of units with no edges are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldedGraph {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
    mode: NormalizationMode,
}

/// Builds the folded graph: `c_ij = sum_s a(i,s) b(j,s)` where
/// `a(i,s) = w_is / S_i` when the exposure is normalized (else `w_is`) and
/// `b(j,s) = w_js / T_s` when the dose is normalized (else `w_js`).
pub fn fold_graph(g: &BipartiteGraph, mode: NormalizationMode) -> FoldedGraph {
    let n = g.n_experimental();
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for s in 0..g.n_interference() {
        let total = g.dose_weight(s);
        if total == 0.0 {
            continue;
        }
        for &(i, wi) in g.int_neighbors(s) {
            let a = if mode.exposure_normalized {
                wi / g.exposure_weight(i)
            } else {
                wi
            };
            for &(j, wj) in g.int_neighbors(s) {
                let b = if mode.dose_normalized { wj / total } else { wj };
                *rows[i].entry(j).or_insert(0.0) += a * b;
            }
        }
    }
    FoldedGraph {
        n,
        rows: rows.into_iter().map(|r| r.into_iter().collect()).collect(),
        mode,
    }
}

impl FoldedGraph {
    /// Rebuilds a folded graph from explicit entries (e.g. a folded TSV).
    pub fn from_entries(
        n: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
        mode: NormalizationMode,
    ) -> Result<Self> {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (i, j, c) in entries {
            if i >= n || j >= n {
                return Err(Error::argument(format!(
                    "folded entry ({i}, {j}) out of range (n = {n})"
                )));
            }
            if !c.is_finite() || c < 0.0 {
                return Err(Error::argument(format!(
                    "folded entry ({i}, {j}) has invalid weight {c}"
                )));
            }
            *rows[i].entry(j).or_insert(0.0) += c;
        }
        Ok(FoldedGraph {
            n,
            rows: rows.into_iter().map(|r| r.into_iter().collect()).collect(),
            mode,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> NormalizationMode {
        self.mode
    }

    /// `c_ij`, zero when the pair shares no interference unit.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by(|&(col, _)| col.cmp(&j))
            .map(|pos| self.rows[i][pos].1)
            .unwrap_or(0.0)
    }

    /// Nonzero entries of row `i`, sorted by column, diagonal included.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|&(_, c)| c).sum()
    }

    /// All stored entries `(i, j, c_ij)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, c)| (i, j, c)))
    }

    /// The linear map `e = C z`. Empty rows yield 0; callers that need the
    /// self-exposure convention for isolated units resolve those entries to
    /// `z_i` themselves.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.n, "assignment length must match folded graph");
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, c)| c * z[j]).sum())
            .collect()
    }

    /// Off-diagonal symmetrized weights `c_ij + c_ji` for `i < j`, the input
    /// the balanced partitioner consumes. Cut membership is symmetric, so
    /// this is equivalent for optimization to the ordered-pair objective.
    pub fn symmetrized_edges(&self) -> Vec<(usize, usize, f64)> {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, c) in self.entries() {
            if i == j {
                continue;
            }
            let key = (i.min(j), i.max(j));
            *acc.entry(key).or_insert(0.0) += c;
        }
        acc.into_iter().map(|((i, j), c)| (i, j, c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, m: usize, edges: &[(usize, usize, f64)]) -> BipartiteGraph {
        BipartiteGraph::new(n, m, edges.to_vec()).unwrap()
    }

    fn assignment(z: &[i8]) -> Assignment {
        Assignment::from_signs(z.to_vec()).unwrap()
    }

    #[test]
    fn cached_sums_match_recomputation() {
        let g = graph(3, 2, &[(0, 0, 1.5), (1, 0, 2.0), (1, 1, 0.5), (2, 1, 3.0)]);
        for i in 0..3 {
            let fresh: f64 = g.exp_neighbors(i).iter().map(|&(_, w)| w).sum();
            assert_eq!(g.exposure_weight(i), fresh);
        }
        for s in 0..2 {
            let fresh: f64 = g.int_neighbors(s).iter().map(|&(_, w)| w).sum();
            assert_eq!(g.dose_weight(s), fresh);
        }
    }

    #[test]
    fn construction_rejects_bad_edges() {
        assert!(BipartiteGraph::new(2, 1, vec![(0, 0, 1.0), (0, 0, 2.0)]).is_err());
        assert!(BipartiteGraph::new(2, 1, vec![(0, 0, -1.0)]).is_err());
        assert!(BipartiteGraph::new(2, 1, vec![(0, 0, f64::NAN)]).is_err());
        assert!(BipartiteGraph::new(2, 1, vec![(0, 0, f64::INFINITY)]).is_err());
        assert!(BipartiteGraph::new(2, 1, vec![(2, 0, 1.0)]).is_err());
        assert!(BipartiteGraph::new(2, 1, vec![(0, 1, 1.0)]).is_err());
    }

    #[test]
    fn doses_single_edge_identity() {
        let g = graph(1, 1, &[(0, 0, 1.0)]);
        let d = compute_doses(&g, &assignment(&[1]), NormalizationMode::FULL).unwrap();
        assert_eq!(d, vec![1.0]);
    }

    #[test]
    fn doses_weighted_average() {
        // edges (0,s,1),(1,s,3), z = (+1,-1): d = (1 - 3) / 4 = -0.5
        let g = graph(2, 1, &[(0, 0, 1.0), (1, 0, 3.0)]);
        let d = compute_doses(&g, &assignment(&[1, -1]), NormalizationMode::FULL).unwrap();
        assert!((d[0] - (-0.5)).abs() < 1e-15);
    }

    #[test]
    fn isolated_interference_unit_gets_zero_dose() {
        let g = graph(1, 2, &[(0, 0, 1.0)]);
        for mode in NormalizationMode::all() {
            let d = compute_doses(&g, &assignment(&[1]), mode).unwrap();
            assert_eq!(d[1], 0.0);
        }
    }

    #[test]
    fn doses_length_mismatch_is_argument_error() {
        let g = graph(2, 1, &[(0, 0, 1.0)]);
        let err = compute_doses(&g, &assignment(&[1]), NormalizationMode::FULL).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
    }

    #[test]
    fn exposures_single_neighbor() {
        let g = graph(1, 1, &[(0, 0, 2.0)]);
        let e = compute_exposures(&g, &[0.25], NormalizationMode::FULL).unwrap();
        assert_eq!(e[0], Exposure::Value(0.25));
    }

    #[test]
    fn exposures_symmetric_doses_cancel() {
        let g = graph(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]);
        for mode in NormalizationMode::all() {
            let e = compute_exposures(&g, &[1.0, -1.0], mode).unwrap();
            assert_eq!(e[0], Exposure::Value(0.0));
        }
    }

    #[test]
    fn isolated_experimental_unit_is_self_exposed() {
        let g = graph(2, 1, &[(0, 0, 1.0)]);
        let e = compute_exposures(&g, &[1.0], NormalizationMode::FULL).unwrap();
        assert_eq!(e[1], Exposure::SelfExposed);
        assert_eq!(e[1].resolve(-1.0), -1.0);
    }

    #[test]
    fn exposures_length_mismatch_is_argument_error() {
        let g = graph(1, 2, &[(0, 0, 1.0)]);
        assert!(compute_exposures(&g, &[1.0], NormalizationMode::FULL).is_err());
    }

    #[test]
    fn fold_shared_neighbor() {
        // two units, each weight 1 to one shared interference unit
        let g = graph(2, 1, &[(0, 0, 1.0), (1, 0, 1.0)]);
        let f = fold_graph(&g, NormalizationMode::FULL);
        for i in 0..2 {
            for j in 0..2 {
                assert!((f.entry(i, j) - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn fold_disconnected_units_have_identity_rows() {
        let g = graph(2, 2, &[(0, 0, 1.0), (1, 1, 1.0)]);
        let f = fold_graph(&g, NormalizationMode::FULL);
        assert_eq!(f.entry(0, 1), 0.0);
        assert_eq!(f.entry(1, 0), 0.0);
        assert!((f.entry(0, 0) - 1.0).abs() < 1e-15);
        assert!((f.entry(1, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fold_isolated_unit_has_empty_row() {
        let g = graph(2, 1, &[(0, 0, 1.0)]);
        let f = fold_graph(&g, NormalizationMode::FULL);
        assert!(f.row(1).is_empty());
        assert_eq!(f.row_sum(1), 0.0);
    }

    #[test]
    fn mode_parsing_round_trips() {
        for mode in NormalizationMode::all() {
            assert_eq!(NormalizationMode::parse(mode.code()).unwrap(), mode);
        }
        assert!(NormalizationMode::parse("xx").is_err());
        assert!(NormalizationMode::parse("n").is_err());
    }

    #[test]
    fn assignment_rejects_non_sign_entries() {
        assert!(Assignment::from_signs(vec![1, 0, -1]).is_err());
        assert!(Assignment::from_signs(vec![1, -1]).is_ok());
    }
}
