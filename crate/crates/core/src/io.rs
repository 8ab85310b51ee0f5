//! File formats: graph TSV/JSON, clustering/assignment/coefficient CSVs,
//! label CSVs, marketplace key=value configs, and the append-only results
//! CSV.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! rerun with identical inputs produces byte-identical files.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Assignment, BipartiteGraph, FoldedGraph, NormalizationMode};
use crate::harness::EvalReport;
use crate::objective::Clustering;
use crate::outcome::{LinearCoefficients, MarketplaceSpec};

/// Schema version stamped into every results row.
pub const RESULTS_SCHEMA: &str = "1";

fn parse_err(path: &Path, line: usize, msg: impl std::fmt::Display) -> Error {
    Error::parse(path.display().to_string(), format!("line {line}: {msg}"))
}

fn open_reader(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

// ---------------------------------------------------------------------
// bipartite graph

#[derive(Serialize, Deserialize)]
struct GraphJsonEdge {
    exp_id: usize,
    int_id: usize,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    #[serde(default)]
    n_experimental: Option<usize>,
    #[serde(default)]
    n_interference: Option<usize>,
    edges: Vec<GraphJsonEdge>,
}

/// Reads a graph file; `.json` files use the JSON variant, everything else
/// is the TSV format with header `exp_id\tint_id\tweight`.
pub fn read_graph(path: &Path) -> Result<BipartiteGraph> {
    if path.extension().is_some_and(|e| e == "json") {
        read_graph_json(path)
    } else {
        read_graph_tsv(path)
    }
}

fn read_graph_tsv(path: &Path) -> Result<BipartiteGraph> {
    let reader = open_reader(path)?;
    let mut edges = Vec::new();
    let mut n_exp = 0usize;
    let mut n_int = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end();
        if idx == 0 {
            if line != "exp_id\tint_id\tweight" {
                return Err(parse_err(
                    path,
                    1,
                    "expected header exp_id\\tint_id\\tweight",
                ));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (a, b, c) = (parts.next(), parts.next(), parts.next());
        let (Some(a), Some(b), Some(c)) = (a, b, c) else {
            return Err(parse_err(
                path,
                idx + 1,
                "expected three tab-separated fields",
            ));
        };
        let i: usize = a.parse().map_err(|e| parse_err(path, idx + 1, e))?;
        let s: usize = b.parse().map_err(|e| parse_err(path, idx + 1, e))?;
        let w: f64 = c.parse().map_err(|e| parse_err(path, idx + 1, e))?;
        n_exp = n_exp.max(i + 1);
        n_int = n_int.max(s + 1);
        edges.push((i, s, w));
    }
    BipartiteGraph::new(n_exp, n_int, edges)
}

fn read_graph_json(path: &Path) -> Result<BipartiteGraph> {
    let file = File::open(path)?;
    let parsed: GraphJson = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    let edges: Vec<(usize, usize, f64)> = parsed
        .edges
        .iter()
        .map(|e| (e.exp_id, e.int_id, e.weight))
        .collect();
    let n_exp = parsed
        .n_experimental
        .unwrap_or_else(|| edges.iter().map(|e| e.0 + 1).max().unwrap_or(0));
    let n_int = parsed
        .n_interference
        .unwrap_or_else(|| edges.iter().map(|e| e.1 + 1).max().unwrap_or(0));
    BipartiteGraph::new(n_exp, n_int, edges)
}

pub fn write_graph_tsv(path: &Path, g: &BipartiteGraph) -> Result<()> {
    let mut out = File::create(path)?;
    writeln!(out, "exp_id\tint_id\tweight")?;
    for &(i, s, w) in g.edges() {
        writeln!(out, "{i}\t{s}\t{w}")?;
    }
    Ok(())
}

pub fn write_graph_json(path: &Path, g: &BipartiteGraph) -> Result<()> {
    let doc = GraphJson {
        n_experimental: Some(g.n_experimental()),
        n_interference: Some(g.n_interference()),
        edges: g
            .edges()
            .iter()
            .map(|&(i, s, w)| GraphJsonEdge {
                exp_id: i,
                int_id: s,
                weight: w,
            })
            .collect(),
    };
    let mut out = File::create(path)?;
    serde_json::to_writer_pretty(&mut out, &doc)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

// ---------------------------------------------------------------------
// folded graph

/// Folded graph TSV: header `i\tj\tweight`, one stored entry per line.
pub fn write_folded_tsv(path: &Path, folded: &FoldedGraph) -> Result<()> {
    let mut out = File::create(path)?;
    writeln!(out, "i\tj\tweight")?;
    for (i, j, c) in folded.entries() {
        writeln!(out, "{i}\t{j}\t{c}")?;
    }
    Ok(())
}

/// Reads folded entries back; `mode` records how the file was produced.
pub fn read_folded_tsv(path: &Path, mode: NormalizationMode) -> Result<FoldedGraph> {
    let reader = open_reader(path)?;
    let mut entries = Vec::new();
    let mut n = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end();
        if idx == 0 {
            if line != "i\tj\tweight" {
                return Err(parse_err(path, 1, "expected header i\\tj\\tweight"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(a), Some(b), Some(c)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err(
                path,
                idx + 1,
                "expected three tab-separated fields",
            ));
        };
        let i: usize = a.parse().map_err(|e| parse_err(path, idx + 1, e))?;
        let j: usize = b.parse().map_err(|e| parse_err(path, idx + 1, e))?;
        let w: f64 = c.parse().map_err(|e| parse_err(path, idx + 1, e))?;
        n = n.max(i + 1).max(j + 1);
        entries.push((i, j, w));
    }
    FoldedGraph::from_entries(n, entries, mode)
}

// ---------------------------------------------------------------------
// clusterings and labels

/// Clustering CSV: header `unit_id,cluster_id`. Unit ids must be dense in
/// `[0, N)`.
pub fn read_clustering_csv(path: &Path) -> Result<Vec<u32>> {
    let reader = open_reader(path)?;
    let mut pairs: Vec<(usize, u32)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end();
        if idx == 0 {
            if line != "unit_id,cluster_id" {
                return Err(parse_err(path, 1, "expected header unit_id,cluster_id"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
            return Err(parse_err(path, idx + 1, "expected unit_id,cluster_id"));
        };
        let unit: usize = a.parse().map_err(|e| parse_err(path, idx + 1, e))?;
        let label: u32 = b.parse().map_err(|e| parse_err(path, idx + 1, e))?;
        pairs.push((unit, label));
    }
    pairs.sort_by_key(|&(u, _)| u);
    for (expect, &(u, _)) in pairs.iter().enumerate() {
        if u != expect {
            return Err(Error::parse(
                path.display().to_string(),
                format!(
                    "unit ids must be dense in [0, {}), missing or duplicate {expect}",
                    pairs.len()
                ),
            ));
        }
    }
    Ok(pairs.into_iter().map(|(_, l)| l).collect())
}

/// Builds a [`Clustering`] from raw labels, inferring the cluster count and
/// the smallest tolerance the observed sizes satisfy.
pub fn clustering_from_labels(labels: Vec<u32>) -> Result<Clustering> {
    let k = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    if k == 0 {
        return Err(Error::argument("clustering file contains no units"));
    }
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l as usize] += 1;
    }
    let min = *sizes.iter().min().unwrap();
    let max = *sizes.iter().max().unwrap();
    if min == 0 {
        return Err(Error::argument("every cluster id in [0, k) must be used"));
    }
    let tolerance = if max - min <= 1 {
        0.0
    } else {
        (max as f64 / min as f64 - 1.0) + 1e-9
    };
    Clustering::new(labels, k, tolerance)
}

pub fn write_clustering_csv(path: &Path, labels: &[u32]) -> Result<()> {
    let mut out = File::create(path)?;
    writeln!(out, "unit_id,cluster_id")?;
    for (unit, label) in labels.iter().enumerate() {
        writeln!(out, "{unit},{label}")?;
    }
    Ok(())
}

/// Labels CSV emitted by the generators: `unit_id,label,side` with side
/// `exp` or `int`.
pub fn write_labels_csv(path: &Path, experimental: &[u32], interference: &[u32]) -> Result<()> {
    let mut out = File::create(path)?;
    writeln!(out, "unit_id,label,side")?;
    for (unit, label) in experimental.iter().enumerate() {
        writeln!(out, "{unit},{label},exp")?;
    }
    for (unit, label) in interference.iter().enumerate() {
        writeln!(out, "{unit},{label},int")?;
    }
    Ok(())
}

/// Reads generator labels back, split by side.
pub fn read_labels_csv(path: &Path) -> Result<(Vec<u32>, Vec<u32>)> {
    let reader = open_reader(path)?;
    let mut exp: Vec<(usize, u32)> = Vec::new();
    let mut int: Vec<(usize, u32)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end();
        if idx == 0 {
            if line != "unit_id,label,side" {
                return Err(parse_err(path, 1, "expected header unit_id,label,side"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(a), Some(b), Some(c)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err(path, idx + 1, "expected unit_id,label,side"));
        };
        let unit: usize = a.parse().map_err(|e| parse_err(path, idx + 1, e))?;
        let label: u32 = b.parse().map_err(|e| parse_err(path, idx + 1, e))?;
        match c {
            "exp" => exp.push((unit, label)),
            "int" => int.push((unit, label)),
            other => return Err(parse_err(path, idx + 1, format!("unknown side {other:?}"))),
        }
    }
    exp.sort_by_key(|&(u, _)| u);
    int.sort_by_key(|&(u, _)| u);
    Ok((
        exp.into_iter().map(|(_, l)| l).collect(),
        int.into_iter().map(|(_, l)| l).collect(),
    ))
}

// ---------------------------------------------------------------------
// assignments and coefficients

/// Assignment CSV: header `unit_id,z` with z in {-1, 1}.
pub fn write_assignment_csv(path: &Path, a: &Assignment) -> Result<()> {
    let mut out = File::create(path)?;
    writeln!(out, "unit_id,z")?;
    for (unit, &z) in a.z().iter().enumerate() {
        writeln!(out, "{unit},{z}")?;
    }
    Ok(())
}

pub fn read_assignment_csv(path: &Path) -> Result<Assignment> {
    let reader = open_reader(path)?;
    let mut pairs: Vec<(usize, i8)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end();
        if idx == 0 {
            if line != "unit_id,z" {
                return Err(parse_err(path, 1, "expected header unit_id,z"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
            return Err(parse_err(path, idx + 1, "expected unit_id,z"));
        };
        let unit: usize = a.parse().map_err(|e| parse_err(path, idx + 1, e))?;
        let z: i8 = b.parse().map_err(|e| parse_err(path, idx + 1, e))?;
        pairs.push((unit, z));
    }
    pairs.sort_by_key(|&(u, _)| u);
    Assignment::from_signs(pairs.into_iter().map(|(_, z)| z).collect())
}

/// Coefficients CSV: header `unit_id,alpha,beta,gamma`.
pub fn read_coefficients_csv(path: &Path) -> Result<LinearCoefficients> {
    let reader = open_reader(path)?;
    let mut rows: Vec<(usize, f64, f64, f64)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end();
        if idx == 0 {
            if line != "unit_id,alpha,beta,gamma" {
                return Err(parse_err(
                    path,
                    1,
                    "expected header unit_id,alpha,beta,gamma",
                ));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(a), Some(b), Some(c), Some(d)) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(parse_err(
                path,
                idx + 1,
                "expected unit_id,alpha,beta,gamma",
            ));
        };
        let unit: usize = a.parse().map_err(|e| parse_err(path, idx + 1, e))?;
        let alpha: f64 = b.parse().map_err(|e| parse_err(path, idx + 1, e))?;
        let beta: f64 = c.parse().map_err(|e| parse_err(path, idx + 1, e))?;
        let gamma: f64 = d.parse().map_err(|e| parse_err(path, idx + 1, e))?;
        rows.push((unit, alpha, beta, gamma));
    }
    rows.sort_by_key(|r| r.0);
    LinearCoefficients::new(
        rows.iter().map(|r| r.1).collect(),
        rows.iter().map(|r| r.2).collect(),
        rows.iter().map(|r| r.3).collect(),
    )
}

pub fn write_coefficients_csv(path: &Path, coef: &LinearCoefficients) -> Result<()> {
    let mut out = File::create(path)?;
    writeln!(out, "unit_id,alpha,beta,gamma")?;
    for i in 0..coef.len() {
        writeln!(
            out,
            "{i},{},{},{}",
            coef.alpha[i], coef.beta[i], coef.gamma[i]
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------
// marketplace config

/// Flat `key=value` config; `#` starts a comment. Keys: n_customers,
/// n_listings, n_types, phi_same, phi_diff, alpha_lift, rounds_history,
/// seed. Missing keys keep their defaults.
pub fn read_marketplace_config(path: &Path) -> Result<MarketplaceSpec> {
    let reader = open_reader(path)?;
    let mut spec = MarketplaceSpec::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(parse_err(path, idx + 1, "expected key=value"));
        };
        let key = key.trim();
        let value = value.trim();
        let bad = |e: &dyn std::fmt::Display| parse_err(path, idx + 1, format!("{key}: {e}"));
        match key {
            "n_customers" => spec.n_customers = value.parse().map_err(|e| bad(&e))?,
            "n_listings" => spec.n_listings = value.parse().map_err(|e| bad(&e))?,
            "n_types" => spec.n_types = value.parse().map_err(|e| bad(&e))?,
            "phi_same" => spec.phi_same = value.parse().map_err(|e| bad(&e))?,
            "phi_diff" => spec.phi_diff = value.parse().map_err(|e| bad(&e))?,
            "alpha_lift" => spec.alpha_lift = value.parse().map_err(|e| bad(&e))?,
            "rounds_history" => spec.rounds_history = value.parse().map_err(|e| bad(&e))?,
            "seed" => spec.seed = value.parse().map_err(|e| bad(&e))?,
            other => return Err(parse_err(path, idx + 1, format!("unknown key {other:?}"))),
        }
    }
    spec.validate()?;
    Ok(spec)
}

// ---------------------------------------------------------------------
// results

/// Appends evaluation reports to the results CSV, writing the header only
/// when the file is empty or new. Columns:
/// `schema,design,objective_h,objective_trvar,metric,value,ci_lo,ci_hi,draws,seed`.
pub fn append_results_csv(path: &Path, reports: &[EvalReport]) -> Result<()> {
    let needs_header = std::fs::metadata(path)
        .map(|m| m.len() == 0)
        .unwrap_or(true);
    let mut out = OpenOptions::new().create(true).append(true).open(path)?;
    if needs_header {
        writeln!(
            out,
            "schema,design,objective_h,objective_trvar,metric,value,ci_lo,ci_hi,draws,seed"
        )?;
    }
    for r in reports {
        let h = r.objective_h.map(|v| v.to_string()).unwrap_or_default();
        let trvar = r.objective_trvar.map(|v| v.to_string()).unwrap_or_default();
        let mut rows: Vec<(&str, f64, f64, f64)> = vec![
            ("bias", r.bias.value, r.bias.ci_lo, r.bias.ci_hi),
            (
                "rel_bias",
                r.rel_bias.value,
                r.rel_bias.ci_lo,
                r.rel_bias.ci_hi,
            ),
            ("std", r.std.value, r.std.ci_lo, r.std.ci_hi),
            ("rmse", r.rmse.value, r.rmse.ci_lo, r.rmse.ci_hi),
            ("tau", r.tau, r.tau, r.tau),
        ];
        if let Some(ips) = &r.ips {
            rows.push(("ips_bias", ips.bias.value, ips.bias.ci_lo, ips.bias.ci_hi));
            rows.push((
                "ips_rel_bias",
                ips.rel_bias.value,
                ips.rel_bias.ci_lo,
                ips.rel_bias.ci_hi,
            ));
            rows.push(("ips_std", ips.std.value, ips.std.ci_lo, ips.std.ci_hi));
            rows.push(("ips_rmse", ips.rmse.value, ips.rmse.ci_lo, ips.rmse.ci_hi));
            rows.push((
                "ips_skipped",
                ips.mean_skipped,
                ips.mean_skipped,
                ips.mean_skipped,
            ));
        }
        for (metric, value, lo, hi) in rows {
            writeln!(
                out,
                "{RESULTS_SCHEMA},{},{h},{trvar},{metric},{value},{lo},{hi},{},{}",
                r.design, r.draws, r.seed
            )?;
        }
    }
    Ok(())
}

/// One parsed row of the results CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub schema: String,
    pub design: String,
    pub objective_h: Option<f64>,
    pub objective_trvar: Option<f64>,
    pub metric: String,
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub draws: usize,
    pub seed: u64,
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let reader = open_reader(path)?;
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end();
        if idx == 0 || line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 10 {
            return Err(parse_err(
                path,
                idx + 1,
                "expected 10 comma-separated fields",
            ));
        }
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| parse_err(path, idx + 1, e))
            }
        };
        rows.push(ResultRow {
            schema: parts[0].to_string(),
            design: parts[1].to_string(),
            objective_h: opt(parts[2])?,
            objective_trvar: opt(parts[3])?,
            metric: parts[4].to_string(),
            value: parts[5].parse().map_err(|e| parse_err(path, idx + 1, e))?,
            ci_lo: parts[6].parse().map_err(|e| parse_err(path, idx + 1, e))?,
            ci_hi: parts[7].parse().map_err(|e| parse_err(path, idx + 1, e))?,
            draws: parts[8].parse().map_err(|e| parse_err(path, idx + 1, e))?,
            seed: parts[9].parse().map_err(|e| parse_err(path, idx + 1, e))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fold_graph;

    fn tmp(name: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        (dir, path)
    }

    #[test]
    fn graph_tsv_round_trip() {
        let g = BipartiteGraph::new(3, 2, vec![(0, 0, 1.5), (1, 0, 2.0), (2, 1, 0.25)]).unwrap();
        let (_dir, path) = tmp("g.tsv");
        write_graph_tsv(&path, &g).unwrap();
        let back = read_graph(&path).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn graph_json_round_trip() {
        let g = BipartiteGraph::new(3, 2, vec![(0, 0, 1.5), (2, 1, 0.25)]).unwrap();
        let (_dir, path) = tmp("g.json");
        write_graph_json(&path, &g).unwrap();
        let back = read_graph(&path).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn folded_tsv_round_trip() {
        let g = BipartiteGraph::new(3, 2, vec![(0, 0, 1.0), (1, 0, 2.0), (2, 1, 1.0)]).unwrap();
        let f = fold_graph(&g, NormalizationMode::FULL);
        let (_dir, path) = tmp("folded.tsv");
        write_folded_tsv(&path, &f).unwrap();
        let back = read_folded_tsv(&path, NormalizationMode::FULL).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn clustering_round_trip_and_density_check() {
        let (_dir, path) = tmp("c.csv");
        write_clustering_csv(&path, &[0, 1, 1, 0]).unwrap();
        assert_eq!(read_clustering_csv(&path).unwrap(), vec![0, 1, 1, 0]);

        std::fs::write(&path, "unit_id,cluster_id\n0,0\n2,1\n").unwrap();
        assert!(read_clustering_csv(&path).is_err());
    }

    #[test]
    fn assignment_round_trip() {
        let a = Assignment::from_signs(vec![1, -1, 1]).unwrap();
        let (_dir, path) = tmp("a.csv");
        write_assignment_csv(&path, &a).unwrap();
        assert_eq!(read_assignment_csv(&path).unwrap().z(), a.z());
    }

    #[test]
    fn coefficients_round_trip() {
        let coef =
            LinearCoefficients::new(vec![0.5, -1.25], vec![1.0, 2.0], vec![-1.0, 0.125]).unwrap();
        let (_dir, path) = tmp("coef.csv");
        write_coefficients_csv(&path, &coef).unwrap();
        assert_eq!(read_coefficients_csv(&path).unwrap(), coef);
    }

    #[test]
    fn marketplace_config_parses_and_defaults() {
        let (_dir, path) = tmp("mp.cfg");
        std::fs::write(
            &path,
            "n_customers=250\nn_listings = 500 # half scale\nalpha_lift=2.0\nseed=7\n",
        )
        .unwrap();
        let spec = read_marketplace_config(&path).unwrap();
        assert_eq!(spec.n_customers, 250);
        assert_eq!(spec.n_listings, 500);
        assert_eq!(spec.alpha_lift, 2.0);
        assert_eq!(spec.seed, 7);
        assert_eq!(spec.n_types, 20);
        assert_eq!(spec.phi_same, 0.016);

        std::fs::write(&path, "bogus=1\n").unwrap();
        assert!(read_marketplace_config(&path).is_err());
    }

    #[test]
    fn labels_round_trip() {
        let (_dir, path) = tmp("labels.csv");
        write_labels_csv(&path, &[0, 0, 1], &[1, 0]).unwrap();
        let (exp, int) = read_labels_csv(&path).unwrap();
        assert_eq!(exp, vec![0, 0, 1]);
        assert_eq!(int, vec![1, 0]);
    }

    #[test]
    fn clustering_from_labels_infers_tolerance() {
        let c = clustering_from_labels(vec![0, 0, 1, 1, 1]).unwrap();
        assert_eq!(c.k(), 2);
        assert_eq!(c.tolerance(), 0.0);
        let skewed = clustering_from_labels(vec![0, 1, 1, 1, 1]).unwrap();
        assert!(skewed.tolerance() > 2.9);
    }
}
