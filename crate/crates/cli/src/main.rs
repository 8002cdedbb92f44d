//! `obsel` command-line front end.
//!
//! Exit codes: 0 when every method succeeded, 2 when at least one method
//! failed (its row is still written), 1 on configuration or input errors.

mod config;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use config::ConfigFile;
use obsel_core::data::{synth_dataset, synth_with_design_columns, write_csv, Dataset, FeaturePartition};
use obsel_core::experiment::{
    self, load_dataset, parse_methods, read_bundle, render_selection_matrix, render_table, run_dataset,
    write_bundle, ExperimentPlan, Method, TableFormat,
};
use obsel_core::regressors::RegressorKind;
use obsel_core::selection::evaluate_selection;
use obsel_core::suitability::Preset;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "obsel", version, about = "Observable selection with a cross-validated suitability cost")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every configured selection method and write the result bundle.
    Run(RunArgs),
    /// Compute the cost of an explicit feature list.
    Evaluate(EvaluateArgs),
    /// Print the feature scores of a filter or embedded method.
    Rank(RankArgs),
    /// Generate a synthetic dataset and matching schema.
    Synth(SynthArgs),
    /// Re-render tables from an existing results.json.
    Report(ReportArgs),
}

/// Data and cost settings shared by the verbs that read a dataset.
#[derive(Debug, Args)]
struct PlanArgs {
    /// CSV file with a header row.
    #[arg(long)]
    dataset: PathBuf,
    /// Column-role schema (`column = role` per line).
    #[arg(long)]
    schema: PathBuf,
    /// Cost weighting: mds, mis or mids.
    #[arg(long)]
    preset: Option<Preset>,
    /// TOML file with overrides (see the README).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of cross-validation folds.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    fold_seed: Option<u64>,
    #[arg(long)]
    model_seed: Option<u64>,
    /// Number of features kept by filter and embedded methods.
    #[arg(long)]
    w: Option<usize>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    plan: PlanArgs,
    /// Comma-separated method names, or `all`.
    #[arg(long)]
    methods: Option<String>,
    /// Output directory for the bundle; without it only the table is printed.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Format of the table printed to stdout.
    #[arg(long, default_value = "markdown")]
    format: TableFormat,
    /// Minimum SFS selection count flagged in the selection matrix.
    #[arg(long)]
    matrix_threshold: Option<usize>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    plan: PlanArgs,
    /// Comma-separated feature names or column indices; empty for no features.
    #[arg(long, allow_hyphen_values = true)]
    features: String,
    /// Learner families to score with (repeatable); default: every configured family.
    #[arg(long = "learner")]
    learners: Vec<RegressorKind>,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[command(flatten)]
    plan: PlanArgs,
    /// filter_mi, filter_anova, filter_pca or embedded_mdi.
    #[arg(long)]
    method: Method,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Directory receiving data.csv and schema.txt.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 84)]
    samples: usize,
    /// Total number of feature columns.
    #[arg(long, default_value_t = 20)]
    features: usize,
    /// Comma-separated indices of the columns the label depends on.
    #[arg(long, default_value = "1,5,9")]
    relevant: String,
    /// Standard deviation of the label noise.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Make columns 0 and 1 a treatment group and a sampling location.
    #[arg(long)]
    design_columns: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// A bundle directory or a results.json file.
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value = "markdown")]
    format: TableFormat,
    /// Print the selection matrix instead of the ranking table.
    #[arg(long)]
    matrix: bool,
    /// Override the flag threshold of the selection matrix.
    #[arg(long)]
    matrix_threshold: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run(args) => run(args),
        Command::Evaluate(args) => evaluate(args).map(|()| ExitCode::SUCCESS),
        Command::Rank(args) => rank(args).map(|()| ExitCode::SUCCESS),
        Command::Synth(args) => synth(args).map(|()| ExitCode::SUCCESS),
        Command::Report(args) => report(args).map(|()| ExitCode::SUCCESS),
    }
}

/// Builds the plan: preset, then the config file, then command-line flags.
fn build_plan(args: &PlanArgs) -> Result<(ExperimentPlan, Option<usize>)> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let preset = args.preset.or(file.preset).unwrap_or(Preset::Mds);
    let mut plan = ExperimentPlan::from_preset(preset);
    file.apply(&mut plan)?;
    let cfg = &mut plan.suitability;
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(seed) = args.fold_seed {
        cfg.fold_seed = seed;
    }
    if let Some(seed) = args.model_seed {
        cfg.model_seed = seed;
    }
    if let Some(w) = args.w {
        plan.w = w;
    }
    plan.validate()?;
    Ok((plan, args.jobs.or(file.jobs)))
}

fn load(args: &PlanArgs) -> Result<Dataset> {
    load_dataset(&args.dataset, &args.schema)
        .with_context(|| format!("loading {} with schema {}", args.dataset.display(), args.schema.display()))
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let (mut plan, jobs) = build_plan(&args.plan)?;
    if let Some(methods) = &args.methods {
        plan.methods = parse_methods(methods)?;
    }
    if let Some(t) = args.matrix_threshold {
        plan.matrix_threshold = t;
    }
    plan.validate()?;
    let dataset = load(&args.plan)?;
    let bundle = run_dataset(&dataset, &plan, jobs)?;
    if let Some(out) = &args.out {
        write_bundle(&bundle, out).with_context(|| format!("writing bundle to {}", out.display()))?;
        eprintln!("bundle written to {}", out.display());
    }
    print!("{}", render_table(&bundle, args.format)?);
    Ok(if bundle.any_failed() { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn parse_features(dataset: &Dataset, list: &str) -> Result<FeaturePartition> {
    let mut idx = Vec::new();
    for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let j = match dataset.feature_index(token) {
            Some(j) => j,
            None => match token.parse::<usize>() {
                Ok(j) => j,
                Err(_) => bail!("unknown feature `{token}`"),
            },
        };
        idx.push(j);
    }
    Ok(FeaturePartition::new(idx, dataset.n_features())?)
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let (plan, _) = build_plan(&args.plan)?;
    let dataset = load(&args.plan)?;
    let b = parse_features(&dataset, &args.features)?;
    let config = &plan.suitability;
    let families = if args.learners.is_empty() {
        config.grids.clone()
    } else {
        args.learners.iter().map(|&kind| config.grid_for(kind)).collect::<Result<_, _>>()?
    };
    let evaluation = evaluate_selection(&dataset, &b, config, &families, plan.aggregation)?;
    println!("{}", serde_json::to_string_pretty(&evaluation)?);
    Ok(())
}

fn rank(args: RankArgs) -> Result<()> {
    let (plan, _) = build_plan(&args.plan)?;
    let dataset = load(&args.plan)?;
    let importance = experiment::importance(&dataset, &plan, &args.method)?;
    println!("rank,feature,score");
    for (pos, j) in importance.ranking().into_iter().enumerate() {
        println!("{},{},{}", pos + 1, dataset.feature_names()[j], importance.scores[j]);
    }
    Ok(())
}

fn parse_indices(list: &str) -> Result<Vec<usize>> {
    list.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().with_context(|| format!("`{t}` is not a column index")))
        .collect()
}

fn synth(args: SynthArgs) -> Result<()> {
    let relevant = FeaturePartition::new(parse_indices(&args.relevant)?, args.features)?;
    let dataset = if args.design_columns {
        synth_with_design_columns(args.samples, args.features, &relevant, args.noise, args.seed)?
    } else {
        synth_dataset(args.samples, args.features, &relevant, args.noise, args.seed)?
    };
    fs::create_dir_all(&args.out)?;
    let data_path = args.out.join("data.csv");
    let file = fs::File::create(&data_path).with_context(|| format!("creating {}", data_path.display()))?;
    let schema = write_csv(&dataset, file, "label")?;
    fs::write(args.out.join("schema.txt"), schema.to_text())?;
    eprintln!("wrote {} and {}", data_path.display(), args.out.join("schema.txt").display());
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let path: &Path = &args.results;
    let mut bundle = read_bundle(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(t) = args.matrix_threshold {
        bundle.matrix_threshold = t;
    }
    if args.matrix {
        print!("{}", render_selection_matrix(&bundle)?);
    } else {
        print!("{}", render_table(&bundle, args.format)?);
    }
    Ok(())
}
