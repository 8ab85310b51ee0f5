//! Command-line interface: generate graphs, fold them, score and search
//! clusterings, sample assignments, and run replicated evaluations.
//!
//! Every command is a deterministic function of its flags and seeds;
//! rerunning with identical arguments reproduces output files byte for
//! byte. Exit codes: 0 success, 2 argument errors, 3 resource errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use clusterdesign::design::DesignSpec;
use clusterdesign::error::{Error, Result};
use clusterdesign::gen::{generate_powerlaw, generate_sbm, PowerLawSpec, SbmSpec};
use clusterdesign::graph::{fold_graph, NormalizationMode};
use clusterdesign::harness::{run_experiment, ExperimentConfig, NamedDesign};
use clusterdesign::io;
use clusterdesign::objective::{
    cov_trace, direct_cut_cost, objective_h, objective_trvar, CovMethod, JointLabels,
};
use clusterdesign::outcome::{
    linear_preset, DeltaModel, LipschitzModel, LipschitzShape, OutcomeModel,
};
use clusterdesign::partition::{balanced_partition, InitMethod, PartitionConfig, SymmetricGraph};

#[derive(Parser)]
#[command(
    name = "clusterdesign",
    about = "Cluster-randomized experimental design on bipartite interference graphs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic bipartite graph plus ground-truth labels.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Fold a bipartite graph into the induced experimental-unit graph.
    Fold(FoldArgs),
    /// Score a clustering under one of the objectives.
    Objective(ObjectiveArgs),
    /// Search for a balanced clustering minimizing the folded cut.
    Partition(PartitionArgs),
    /// Sample a treatment assignment from a design.
    Design(DesignArgs),
    /// Run a replicated experiment and append metrics to a results CSV.
    Evaluate(EvaluateArgs),
    /// Pretty-print a results CSV.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum GenCommand {
    /// Bipartite stochastic block model.
    Sbm(GenSbmArgs),
    /// Preferential-attachment graph with Zipf degrees and latent classes.
    Powerlaw(GenPowerlawArgs),
}

#[derive(Args)]
struct GenSbmArgs {
    #[arg(long)]
    n_exp: usize,
    #[arg(long)]
    n_int: usize,
    #[arg(long)]
    groups: usize,
    #[arg(long)]
    p_in: f64,
    #[arg(long)]
    p_out: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Graph TSV output path.
    #[arg(short, long)]
    output: PathBuf,
    /// Labels CSV output path (unit_id,label,side).
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct GenPowerlawArgs {
    #[arg(long)]
    n_exp: usize,
    #[arg(long)]
    classes: usize,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 3.0)]
    zipf_exponent: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct FoldArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Normalization: first letter exposure, second dose (n/u).
    #[arg(long, default_value = "nn")]
    mode: String,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ObjectiveArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Clustering CSV. For --objective direct, rows with unit_id >= N label
    /// the interference units (offset by N).
    #[arg(long)]
    clustering: PathBuf,
    /// One of h, trvar, direct, cov.
    #[arg(long)]
    objective: String,
    #[arg(long, default_value = "nn")]
    mode: String,
    /// Treated cluster count, for --objective cov.
    #[arg(long)]
    k_t: Option<usize>,
}

#[derive(Args)]
struct PartitionArgs {
    /// Folded graph TSV (i, j, weight).
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.10)]
    tolerance: f64,
    #[arg(long, default_value_t = 20)]
    max_passes: usize,
    /// greedy_line or random.
    #[arg(long, default_value = "greedy_line")]
    init: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct DesignArgs {
    /// balanced, unit-bernoulli, or cluster-bernoulli.
    #[arg(long, default_value = "balanced")]
    design: String,
    /// Clustering CSV (required for cluster designs).
    #[arg(long)]
    clustering: Option<PathBuf>,
    /// Treated cluster count for the balanced design.
    #[arg(long)]
    k_t: Option<usize>,
    /// Treatment probability for Bernoulli designs.
    #[arg(long)]
    p: Option<f64>,
    /// Unit count for unit-bernoulli without a clustering file.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Which replicate draw to emit.
    #[arg(long, default_value_t = 0)]
    draw: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Clustering CSV backing the cluster designs.
    #[arg(long)]
    clustering: Option<PathBuf>,
    /// balanced, unit-bernoulli, or cluster-bernoulli.
    #[arg(long, default_value = "balanced")]
    design: String,
    #[arg(long)]
    k_t: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    /// linear, lipschitz, delta, or marketplace.
    #[arg(long)]
    model: String,
    /// Coefficients CSV for linear/lipschitz models; when omitted the
    /// seeded preset (alpha~N(0,1), beta~N(1,1), gamma~N(-1,1)) is used.
    #[arg(long)]
    coeffs: Option<PathBuf>,
    /// Band width of the delta model.
    #[arg(long)]
    delta: Option<f64>,
    /// Lipschitz constant and shape.
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    shape: Option<String>,
    /// Marketplace key=value config.
    #[arg(long)]
    market_config: Option<PathBuf>,
    #[arg(long)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also compute IPS estimates with this full-exposure band.
    #[arg(long)]
    ips_delta: Option<f64>,
    /// Results CSV (appended).
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    /// Restrict to one metric.
    #[arg(long)]
    metric: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(GenCommand::Sbm(args)) => {
            let spec = SbmSpec {
                n_experimental: args.n_exp,
                n_interference: args.n_int,
                n_groups: args.groups,
                p_in: args.p_in,
                p_out: args.p_out,
                seed: args.seed,
            };
            let (graph, labels) = generate_sbm(&spec)?;
            io::write_graph_tsv(&args.output, &graph)?;
            if let Some(path) = args.labels {
                io::write_labels_csv(&path, &labels.experimental, &labels.interference)?;
            }
            println!(
                "sbm graph: {} x {} units, {} edges",
                graph.n_experimental(),
                graph.n_interference(),
                graph.edges().len()
            );
        }
        Command::Gen(GenCommand::Powerlaw(args)) => {
            let spec = PowerLawSpec {
                n_experimental: args.n_exp,
                n_classes: args.classes,
                lambda: args.lambda,
                p: args.p,
                q: args.q,
                zipf_exponent: args.zipf_exponent,
                seed: args.seed,
            };
            let (graph, labels) = generate_powerlaw(&spec)?;
            io::write_graph_tsv(&args.output, &graph)?;
            if let Some(path) = args.labels {
                io::write_labels_csv(&path, &labels.experimental, &labels.interference)?;
            }
            println!(
                "powerlaw graph: {} x {} units, {} edges",
                graph.n_experimental(),
                graph.n_interference(),
                graph.edges().len()
            );
        }
        Command::Fold(args) => {
            let graph = io::read_graph(&args.graph)?;
            let mode = NormalizationMode::parse(&args.mode)?;
            let folded = fold_graph(&graph, mode);
            io::write_folded_tsv(&args.output, &folded)?;
            println!(
                "folded graph: {} units, {} entries",
                folded.n(),
                folded.entries().count()
            );
        }
        Command::Objective(args) => {
            let graph = io::read_graph(&args.graph)?;
            let mode = NormalizationMode::parse(&args.mode)?;
            let labels = io::read_clustering_csv(&args.clustering)?;
            let n = graph.n_experimental();
            let value = match args.objective.as_str() {
                "h" => {
                    let clustering = io::clustering_from_labels(exp_slice(&labels, n)?)?;
                    let folded = fold_graph(&graph, mode);
                    objective_h(&folded, &clustering)?
                }
                "trvar" => {
                    let clustering = io::clustering_from_labels(exp_slice(&labels, n)?)?;
                    objective_trvar(&graph, &clustering)?
                }
                "direct" => {
                    if labels.len() != n + graph.n_interference() {
                        return Err(Error::argument(format!(
                            "direct cut needs labels for all {} + {} units",
                            n,
                            graph.n_interference()
                        )));
                    }
                    let joint = JointLabels {
                        experimental: labels[..n].to_vec(),
                        interference: labels[n..].to_vec(),
                    };
                    direct_cut_cost(&graph, &joint)?
                }
                "cov" => {
                    let clustering = io::clustering_from_labels(exp_slice(&labels, n)?)?;
                    let k_t = args
                        .k_t
                        .ok_or_else(|| Error::argument("--objective cov requires --k-t"))?;
                    let folded = fold_graph(&graph, mode);
                    cov_trace(&folded, &clustering, k_t, CovMethod::Exact)?
                }
                other => {
                    return Err(Error::argument(format!(
                        "unknown objective {other:?}; expected h|trvar|direct|cov"
                    )))
                }
            };
            println!("{value}");
        }
        Command::Partition(args) => {
            let folded = io::read_folded_tsv(&args.graph, NormalizationMode::FULL)?;
            let sym = SymmetricGraph::from_folded(&folded);
            let cfg = PartitionConfig {
                k: args.k,
                tolerance: args.tolerance,
                max_passes: args.max_passes,
                init: InitMethod::parse(&args.init)?,
                seed: args.seed,
            };
            let clustering = balanced_partition(&sym, &cfg)?;
            io::write_clustering_csv(&args.output, clustering.labels())?;
            println!(
                "partition: k = {}, cut = {}",
                clustering.k(),
                sym.cut_weight(clustering.labels())
            );
        }
        Command::Design(args) => {
            let spec = design_spec(
                &args.design,
                args.clustering.as_deref(),
                args.k_t,
                args.p,
                args.n,
                args.seed,
            )?;
            let assignment = clusterdesign::design::sample_assignment(&spec, args.draw);
            io::write_assignment_csv(&args.output, &assignment)?;
            let (n_t, n_c) = clusterdesign::design::treated_counts(&assignment);
            println!("assignment: {n_t} treated, {n_c} control");
        }
        Command::Evaluate(args) => {
            let graph = io::read_graph(&args.graph)?;
            let n = graph.n_experimental();
            let spec = design_spec(
                &args.design,
                args.clustering.as_deref(),
                args.k_t,
                args.p,
                Some(n),
                args.seed,
            )?;
            let model = build_model(&args, n)?;
            let mut cfg = ExperimentConfig::new(args.draws, args.seed);
            if let Some(delta) = args.ips_delta {
                cfg = cfg.with_ips_delta(delta);
            }
            let designs = vec![NamedDesign::new(spec.id(), spec)];
            let reports = run_experiment(&graph, &designs, &model, &cfg)?;
            io::append_results_csv(&args.output, &reports)?;
            for r in &reports {
                println!(
                    "{}: tau = {}, bias = {} [{}, {}], std = {}",
                    r.design, r.tau, r.bias.value, r.bias.ci_lo, r.bias.ci_hi, r.std.value
                );
            }
        }
        Command::Report(args) => {
            let rows = io::read_results_csv(&args.results)?;
            println!(
                "{:<28} {:>12} {:>12} {:>12} {:>12} {:>8}",
                "design", "metric", "value", "ci_lo", "ci_hi", "draws"
            );
            for row in rows {
                if args.metric.as_deref().is_some_and(|m| m != row.metric) {
                    continue;
                }
                println!(
                    "{:<28} {:>12} {:>12.6} {:>12.6} {:>12.6} {:>8}",
                    row.design, row.metric, row.value, row.ci_lo, row.ci_hi, row.draws
                );
            }
        }
    }
    Ok(())
}

fn exp_slice(labels: &[u32], n: usize) -> Result<Vec<u32>> {
    if labels.len() < n {
        return Err(Error::argument(format!(
            "clustering labels only {} experimental units of {n}",
            labels.len()
        )));
    }
    Ok(labels[..n].to_vec())
}

fn design_spec(
    kind: &str,
    clustering: Option<&std::path::Path>,
    k_t: Option<usize>,
    p: Option<f64>,
    n: Option<usize>,
    seed: u64,
) -> Result<DesignSpec> {
    let load = |path: Option<&std::path::Path>| -> Result<_> {
        let path = path.ok_or_else(|| Error::argument("this design requires --clustering"))?;
        io::clustering_from_labels(io::read_clustering_csv(path)?)
    };
    match kind {
        "balanced" => {
            let c = load(clustering)?;
            let k_t = k_t.ok_or_else(|| Error::argument("balanced design requires --k-t"))?;
            DesignSpec::balanced_cluster(c, k_t, seed)
        }
        "unit-bernoulli" => {
            let p = p.ok_or_else(|| Error::argument("unit-bernoulli requires --p"))?;
            let n = match (n, clustering) {
                (Some(n), _) => n,
                (None, Some(path)) => io::read_clustering_csv(path)?.len(),
                (None, None) => {
                    return Err(Error::argument(
                        "unit-bernoulli requires --n or --clustering",
                    ))
                }
            };
            DesignSpec::unit_bernoulli(n, p, seed)
        }
        "cluster-bernoulli" => {
            let c = load(clustering)?;
            let p = p.ok_or_else(|| Error::argument("cluster-bernoulli requires --p"))?;
            DesignSpec::cluster_bernoulli(c, p, seed)
        }
        other => Err(Error::argument(format!(
            "unknown design {other:?}; expected balanced|unit-bernoulli|cluster-bernoulli"
        ))),
    }
}

fn build_model(args: &EvaluateArgs, n: usize) -> Result<OutcomeModel> {
    match args.model.as_str() {
        "linear" => {
            let coef = match &args.coeffs {
                Some(path) => io::read_coefficients_csv(path)?,
                None => linear_preset(n, args.seed),
            };
            Ok(OutcomeModel::Linear(coef))
        }
        "lipschitz" => {
            let coef = match &args.coeffs {
                Some(path) => io::read_coefficients_csv(path)?,
                None => linear_preset(n, args.seed),
            };
            let l = args
                .l
                .ok_or_else(|| Error::argument("lipschitz model requires --l"))?;
            let shape = LipschitzShape::parse(
                args.shape
                    .as_deref()
                    .ok_or_else(|| Error::argument("lipschitz model requires --shape"))?,
            )?;
            Ok(OutcomeModel::Lipschitz(LipschitzModel::new(
                coef.alpha.clone(),
                coef.beta.clone(),
                l,
                shape,
            )?))
        }
        "delta" => {
            let delta = args
                .delta
                .ok_or_else(|| Error::argument("delta model requires --delta"))?;
            Ok(OutcomeModel::DeltaNeighborhood(DeltaModel::new(delta)?))
        }
        "marketplace" => {
            let path = args
                .market_config
                .as_ref()
                .ok_or_else(|| Error::argument("marketplace model requires --market-config"))?;
            Ok(OutcomeModel::Marketplace(io::read_marketplace_config(
                path,
            )?))
        }
        other => Err(Error::argument(format!(
            "unknown model {other:?}; expected linear|lipschitz|delta|marketplace"
        ))),
    }
}
