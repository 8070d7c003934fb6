//! Command-line front end: simulate benchmark instances, run the full
//! inference procedure, and evaluate estimated graphs against a truth.
//!
//! Exit codes: 0 on success, 2 for usage/input/validation problems, 3 when
//! a numerical stage aborts.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use stabjgl::ebic::EbicConfig;
use stabjgl::io;
use stabjgl::metrics;
use stabjgl::model::{linear_grid, EdgeSet, GroupedDataset};
use stabjgl::pipeline::{run_stabjgl, PipelineOptions, StabJglResult, StageTimings};
use stabjgl::solver::SolverOptions;
use stabjgl::stability::StabilityConfig;
use stabjgl::synthetic::{generate_instance, measured_similarity, SimulationSpec};
use stabjgl::{Error, Result};

#[derive(Parser)]
#[command(
    name = "stabjgl",
    version,
    about = "Joint sparse network estimation with stability-selected penalties"
)]
struct Cli {
    /// Worker threads for the fitting stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-group instance with known truth.
    Simulate(SimulateArgs),
    /// Estimate networks from per-group data matrices.
    Infer(InferArgs),
    /// Score estimated edge lists against a truth edge list.
    Evaluate(EvaluateArgs),
}

/// A penalty grid given as `lo:hi:count` with inclusive endpoints.
#[derive(Clone, Debug)]
struct GridFlag(Vec<f64>);

fn parse_grid(s: &str) -> std::result::Result<GridFlag, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected lo:hi:count, got {s:?}"));
    }
    let lo: f64 = parts[0].parse().map_err(|e| format!("bad lower endpoint: {e}"))?;
    let hi: f64 = parts[1].parse().map_err(|e| format!("bad upper endpoint: {e}"))?;
    let count: usize = parts[2].parse().map_err(|e| format!("bad count: {e}"))?;
    linear_grid(lo, hi, count)
        .map(GridFlag)
        .map_err(|e| e.to_string())
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(format!("expected lo:hi, got {s:?}"));
    }
    let lo: f64 = parts[0].parse().map_err(|e| format!("bad lower endpoint: {e}"))?;
    let hi: f64 = parts[1].parse().map_err(|e| format!("bad upper endpoint: {e}"))?;
    Ok((lo, hi))
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of variables (network nodes).
    #[arg(long)]
    p: usize,
    /// Number of groups; must match the length of --n when given.
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated per-group sample sizes, e.g. 150,200,300.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Fraction of possible edges present in each true network.
    #[arg(long, default_value_t = 0.02)]
    sparsity: f64,
    /// Fraction of base edges shared by every group, in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    similarity: f64,
    /// Magnitude range lo:hi for true partial correlations.
    #[arg(long, default_value = "0.1:0.2", value_parser = parse_range)]
    partial_corr: (f64, f64),
    /// Master seed; identical flags and seed reproduce every file.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InferArgs {
    /// Comma-separated per-group data CSVs (rows = samples).
    #[arg(long, value_delimiter = ',', required = true)]
    inputs: Vec<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Sparsity-penalty grid as lo:hi:count.
    #[arg(long, default_value = "0.01:1:20", value_parser = parse_grid)]
    lambda1_grid: GridFlag,
    /// Similarity-penalty grid as lo:hi:count.
    #[arg(long, default_value = "0:0.1:20", value_parser = parse_grid)]
    lambda2_grid: GridFlag,
    /// Variability threshold for the sparsity penalty.
    #[arg(long, default_value_t = 0.1)]
    beta1: f64,
    /// Similarity penalty used during subsample fits.
    #[arg(long, default_value_t = 0.01)]
    lambda2_init: f64,
    /// Number of subsamples for the stability stage.
    #[arg(long, default_value_t = 20)]
    nsample: usize,
    /// Subsample size cap as a fraction of each group's rows.
    #[arg(long, default_value_t = 0.8)]
    subsample_cap: f64,
    /// Extra-sparsity weight of the information criterion (0 = plain BIC).
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Seed for subsample draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip standardizing each variable before analysis.
    #[arg(long)]
    no_standardize: bool,
    /// Reuse the winning selection fit instead of re-solving (same
    /// result, less work).
    #[arg(long)]
    reuse_selection_fit: bool,
    /// ADMM step size.
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// ADMM iteration cap per fit.
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Relative convergence tolerance (primal and dual).
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Magnitude at or below which a consensus entry counts as zero.
    #[arg(long, default_value_t = 1e-10)]
    zero_eps: f64,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Comma-separated per-group estimated edge TSVs (as written by infer).
    #[arg(long, value_delimiter = ',', required = true)]
    estimated: Vec<PathBuf>,
    /// Truth edge TSV (as written by simulate).
    #[arg(long)]
    truth: PathBuf,
    /// Number of variables the edge lists refer to.
    #[arg(long)]
    p: usize,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_stage_abort() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Infer(args) => cmd_infer(args, cli.threads),
        Command::Evaluate(args) => cmd_evaluate(args),
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[derive(Serialize)]
struct SimulateManifest<'a> {
    spec: &'a SimulationSpec,
    seed: u64,
    /// Mean pairwise edge-sharing fraction; absent for a single group.
    measured_similarity: Option<f64>,
    /// Realized edge fraction (identical across groups by construction).
    measured_sparsity: f64,
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    if let Some(k) = args.k {
        if k != args.n.len() {
            return Err(Error::InvalidParameter {
                what: "--k",
                why: format!("{k} groups but {} sample sizes in --n", args.n.len()),
            });
        }
    }
    let spec = SimulationSpec {
        p: args.p,
        n: args.n,
        target_sparsity: args.sparsity,
        similarity: args.similarity,
        partial_corr_range: args.partial_corr,
        seed: args.seed,
    };
    spec.validate()?;
    ensure_dir(&args.out)?;

    let instance = generate_instance(&spec)?;
    let names: Vec<String> = (1..=spec.p).map(|v| format!("V{v}")).collect();
    for (g, data) in instance.data.groups().iter().enumerate() {
        let path = args.out.join(format!("data_group{}.csv", g + 1));
        io::write_matrix_csv(&path, data, Some(&names))?;
    }
    for (g, theta) in instance.precisions.iter().enumerate() {
        let path = args.out.join(format!("precision_group{}.csv", g + 1));
        io::write_matrix_csv(&path, theta, None)?;
    }
    io::write_truth_edges_tsv(&args.out.join("truth_edges.tsv"), &instance.edge_sets)?;

    let similarity = if spec.n_groups() >= 2 {
        Some(measured_similarity(&instance.edge_sets)?)
    } else {
        None
    };
    let manifest = SimulateManifest {
        spec: &spec,
        seed: spec.seed,
        measured_similarity: similarity,
        measured_sparsity: instance.edge_sets[0].sparsity()?,
    };
    io::write_json(&args.out.join("manifest.json"), &manifest)?;

    println!(
        "simulated {} groups, p = {}, {} true edges per group",
        spec.n_groups(),
        spec.p,
        instance.edge_sets[0].len()
    );
    match similarity {
        Some(s) => println!("measured similarity {s}"),
        None => println!("measured similarity - (single group)"),
    }
    println!("wrote files to {}", args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct SelectedPenalties {
    lambda1: f64,
    lambda2: f64,
    /// Whether the variability threshold was met on the grid.
    threshold_met: bool,
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    stability: &'a StabilityConfig,
    ebic: &'a EbicConfig,
    solver: &'a SolverOptions,
    pipeline: &'a PipelineOptions,
}

#[derive(Serialize)]
struct ResultDocument<'a> {
    selected: SelectedPenalties,
    sparsity: &'a [f64],
    variable_names: Option<&'a [String]>,
    variability_trace: Vec<io::VariabilityRow>,
    ebic_trace: Vec<io::EbicRow>,
    config: ConfigEcho<'a>,
    seed: u64,
    timings: &'a StageTimings,
}

fn load_dataset(inputs: &[PathBuf]) -> Result<GroupedDataset> {
    let mut groups = Vec::with_capacity(inputs.len());
    let mut names: Option<Vec<String>> = None;
    for (g, path) in inputs.iter().enumerate() {
        let (matrix, header) = io::read_matrix_csv(path)?;
        if let Some(header) = header {
            match &names {
                None => names = Some(header),
                Some(first) if *first != header => log::warn!(
                    "column names in {} differ from group 1's; keeping group 1's",
                    path.display()
                ),
                Some(_) => {}
            }
        } else if g > 0 && names.is_some() {
            log::warn!("{} has no header row; keeping group 1's names", path.display());
        }
        groups.push(matrix);
    }
    let data = GroupedDataset::new(groups)?;
    match names {
        Some(names) => data.with_variable_names(names),
        None => Ok(data),
    }
}

fn cmd_infer(args: InferArgs, threads: Option<usize>) -> Result<()> {
    ensure_dir(&args.out)?;
    let data = load_dataset(&args.inputs)?;

    let stab_cfg = StabilityConfig {
        lambda1_grid: args.lambda1_grid.0.clone(),
        lambda2_init: args.lambda2_init,
        beta1: args.beta1,
        n_sample: args.nsample,
        subsample_cap_ratio: args.subsample_cap,
        seed: args.seed,
    };
    let ebic_cfg = EbicConfig {
        lambda2_grid: args.lambda2_grid.0.clone(),
        gamma: args.gamma,
    };
    let solver = SolverOptions {
        admm_rho: args.rho,
        max_iter: args.max_iter,
        primal_tol: args.tol,
        dual_tol: args.tol,
        zero_eps: args.zero_eps,
    };
    let opts = PipelineOptions {
        standardize: !args.no_standardize,
        reuse_selection_fit: args.reuse_selection_fit,
    };

    let result = match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidParameter {
                    what: "--threads",
                    why: e.to_string(),
                })?;
            pool.install(|| run_stabjgl(&data, &stab_cfg, &ebic_cfg, &solver, &opts))?
        }
        None => run_stabjgl(&data, &stab_cfg, &ebic_cfg, &solver, &opts)?,
    };

    write_infer_outputs(&args.out, &data, &stab_cfg, &ebic_cfg, &solver, &opts, &result)?;

    println!(
        "selected lambda1 = {}{}",
        result.lambda1,
        if result.variability.threshold_met {
            ""
        } else {
            " (variability threshold not met; largest grid value used)"
        }
    );
    println!("selected lambda2 = {}", result.lambda2);
    for (g, (edges, sparsity)) in result.edge_sets.iter().zip(&result.sparsities).enumerate() {
        println!("group {}: {} edges, sparsity {}", g + 1, edges.len(), sparsity);
    }
    println!("wrote files to {}", args.out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn write_infer_outputs(
    out: &Path,
    data: &GroupedDataset,
    stab_cfg: &StabilityConfig,
    ebic_cfg: &EbicConfig,
    solver: &SolverOptions,
    opts: &PipelineOptions,
    result: &StabJglResult,
) -> Result<()> {
    for (g, edges) in result.edge_sets.iter().enumerate() {
        let path = out.join(format!("edges_group{}.tsv", g + 1));
        io::write_estimate_edges_tsv(
            &path,
            edges,
            result.fit.z(g),
            &result.partial_correlations[g],
        )?;
    }
    let document = ResultDocument {
        selected: SelectedPenalties {
            lambda1: result.lambda1,
            lambda2: result.lambda2,
            threshold_met: result.variability.threshold_met,
        },
        sparsity: &result.sparsities,
        variable_names: data.variable_names(),
        variability_trace: io::variability_rows(&result.variability),
        ebic_trace: io::ebic_rows(&result.ebic),
        config: ConfigEcho {
            stability: stab_cfg,
            ebic: ebic_cfg,
            solver,
            pipeline: opts,
        },
        seed: stab_cfg.seed,
        timings: &result.timings,
    };
    io::write_json(&out.join("result.json"), &document)
}

#[derive(Serialize)]
struct GroupMetrics {
    group: usize,
    edges: usize,
    sparsity: f64,
    confusion: metrics::ConfusionCounts,
    precision: Option<f64>,
    recall: Option<f64>,
}

#[derive(Serialize)]
struct MetricsDocument {
    groups: Vec<GroupMetrics>,
    /// Matthews correlation between every pair of estimated graphs.
    pairwise_mcc: Vec<Vec<f64>>,
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    let truth = io::read_truth_edges_tsv(&args.truth, args.p, args.estimated.len())?;
    let estimated: Vec<EdgeSet> = args
        .estimated
        .iter()
        .map(|path| io::read_estimate_edges_tsv(path, args.p).map(|(edges, _)| edges))
        .collect::<Result<_>>()?;

    let mut groups = Vec::with_capacity(estimated.len());
    for (g, (est, tru)) in estimated.iter().zip(&truth).enumerate() {
        let confusion = metrics::confusion(est, tru)?;
        groups.push(GroupMetrics {
            group: g + 1,
            edges: est.len(),
            sparsity: est.sparsity()?,
            confusion,
            precision: metrics::precision(&confusion),
            recall: metrics::recall(&confusion),
        });
    }
    let mut pairwise = vec![vec![0.0; estimated.len()]; estimated.len()];
    for a in 0..estimated.len() {
        for b in 0..estimated.len() {
            pairwise[a][b] = metrics::mcc(&estimated[a], &estimated[b])?;
        }
    }

    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| x.to_string());
    for m in &groups {
        println!(
            "group {}: precision {}, recall {}, sparsity {}",
            m.group,
            fmt(m.precision),
            fmt(m.recall),
            m.sparsity
        );
    }
    let document = MetricsDocument {
        groups,
        pairwise_mcc: pairwise,
    };
    io::write_json(&args.out.join("metrics.json"), &document)?;
    println!("wrote metrics to {}", args.out.join("metrics.json").display());
    Ok(())
}
