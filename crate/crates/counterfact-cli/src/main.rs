//! Command-line surface: data synthesis, training, single and batch
//! counterfactual explanation, and report generation.
//!
//! Exit codes: 0 success, 1 runtime/data errors, 2 usage errors.

mod config;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use counterfact::error::{Error, Result};
use counterfact::ingest::{
    build_mask, fit_scaler, load_mask_file, load_table, save_table, MaskSpec, RatingScale,
    TabularDataset,
};
use counterfact::model::{
    dataset_accuracy, dataset_loss, load_model, save_model, train, ModelBundle,
};
use counterfact::pipeline::{
    explain_row, find_row, read_results, run_batch, write_results, BatchConfig, Outcome,
};
use counterfact::report::{build_report, write_report};
use counterfact::synth::generate_dataset;

use config::{Settings, CONFIG_ENV};

#[derive(Parser)]
#[command(
    name = "counterfact",
    version,
    about = "Sparse counterfactual explanations for ordinal tabular classifiers",
    propagate_version = true
)]
struct Cli {
    /// Config file with `key = value` lines (env COUNTERFACT_CONFIG works too).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Trained model file (JSON).
    #[arg(long, global = true, value_name = "FILE")]
    model: Option<PathBuf>,

    /// Tabular data file (CSV with a rating column).
    #[arg(long, global = true, value_name = "FILE")]
    data: Option<PathBuf>,

    /// Immutable-feature list (one name per line, # comments).
    #[arg(long, global = true, value_name = "FILE")]
    mask: Option<PathBuf>,

    /// Rating-scale override (ordered symbols, best first).
    #[arg(long, global = true, value_name = "FILE")]
    scale: Option<PathBuf>,

    /// Solution method: gd or sparsity.
    #[arg(long, global = true, value_name = "NAME")]
    method: Option<String>,

    /// Cross-entropy weight ladder, e.g. 0.1,5,10,50.
    #[arg(long, global = true, value_name = "LIST")]
    lambda_ladder: Option<String>,

    /// Number of nested sparse candidates per round.
    #[arg(long, global = true, value_name = "N")]
    k: Option<usize>,

    /// Ranking rule at zero-valued features: ceiling_one or ignore_zero.
    #[arg(long, global = true, value_name = "NAME")]
    zero_handling: Option<String>,

    /// Final-selection policy: fewest_nonzeros or min_objective.
    #[arg(long, global = true, value_name = "NAME")]
    tie_break: Option<String>,

    /// Target ordinal (default: one notch better than predicted).
    #[arg(long, global = true, value_name = "ORDINAL")]
    target: Option<usize>,

    /// Seed for synthesis, training, and solver configs.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads for batch runs (0 = automatic).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    /// Output file.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the four-cluster synthetic benchmark dataset.
    Synth(SynthArgs),
    /// Train a classifier on a tabular file and save the model bundle.
    Train(TrainArgs),
    /// Explain one row: the sparse changes that improve its predicted rating.
    Explain(ExplainArgs),
    /// Run a method over every row passing the rating filter.
    Batch(BatchArgs),
    /// Aggregate result exports (and optionally a two-quarter panel) into reports.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Number of points to generate.
    #[arg(long, value_name = "N")]
    n: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    /// Hidden layer widths, e.g. 64,64.
    #[arg(long, value_name = "LIST")]
    hidden_layer_sizes: Option<String>,
    #[arg(long, value_name = "X")]
    learning_rate: Option<f64>,
    #[arg(long, value_name = "N")]
    epochs: Option<usize>,
    #[arg(long, value_name = "N")]
    batch_size: Option<usize>,
    #[arg(long, value_name = "X")]
    l2_weight_decay: Option<f64>,
    /// Hidden activation: relu or tanh.
    #[arg(long, value_name = "NAME")]
    hidden_activation: Option<String>,
}

#[derive(Args)]
struct ExplainArgs {
    /// Row index (0-based) in the data file.
    #[arg(long, value_name = "N")]
    row: Option<usize>,
    /// Entity id (with --period) as an alternative to --row.
    #[arg(long, value_name = "ID")]
    entity: Option<String>,
    #[arg(long, value_name = "PERIOD")]
    period: Option<String>,
}

#[derive(Args)]
struct BatchArgs {
    /// Ratings to include: comma-separated ordinals or symbols.
    #[arg(long, value_name = "LIST")]
    ratings: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Sparsity-method result export.
    #[arg(long, value_name = "FILE")]
    results: Option<PathBuf>,
    /// Gradient-descent result export (enables the method comparison).
    #[arg(long, value_name = "FILE")]
    gd_results: Option<PathBuf>,
    /// Output directory for the report files.
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap exits 2 on usage errors with the message on stderr, and 0
        // for --help/--version on stdout.
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut settings = Settings::default();
    let config_path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    if let Some(path) = config_path {
        settings.apply_file(&path)?;
    }
    apply_global_flags(&mut settings, &cli)?;

    match &cli.command {
        Command::Synth(args) => cmd_synth(&settings, args),
        Command::Train(args) => cmd_train(&mut settings, args),
        Command::Explain(args) => cmd_explain(&settings, args),
        Command::Batch(args) => cmd_batch(&settings, args),
        Command::Report(args) => cmd_report(&settings, args),
    }
}

fn apply_global_flags(settings: &mut Settings, cli: &Cli) -> Result<()> {
    if let Some(v) = &cli.model {
        settings.model = Some(v.clone());
    }
    if let Some(v) = &cli.data {
        settings.data = Some(v.clone());
    }
    if let Some(v) = &cli.mask {
        settings.mask = Some(v.clone());
    }
    if let Some(v) = &cli.scale {
        settings.scale = Some(v.clone());
    }
    if let Some(v) = &cli.method {
        settings.method = v.parse()?;
    }
    if let Some(v) = &cli.lambda_ladder {
        settings.lambda_ladder = config::parse_list_f64("lambda_ladder", v)?;
    }
    if let Some(v) = cli.k {
        settings.k = v;
    }
    if let Some(v) = &cli.zero_handling {
        settings.zero_handling = v.parse()?;
    }
    if let Some(v) = &cli.tie_break {
        settings.tie_break = v.parse()?;
    }
    if let Some(v) = cli.target {
        settings.target = Some(v);
    }
    if let Some(v) = cli.seed {
        settings.seed = v;
    }
    if let Some(v) = cli.workers {
        settings.workers = v;
    }
    if let Some(v) = &cli.out {
        settings.out = Some(v.clone());
    }
    Ok(())
}

fn require(path: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
    path.clone().ok_or_else(|| {
        Error::InvalidInput(format!(
            "missing required '{key}' (flag --{key} or config key)"
        ))
    })
}

fn active_scale(settings: &Settings) -> Result<RatingScale> {
    match &settings.scale {
        Some(path) => RatingScale::from_file(path),
        None => Ok(RatingScale::default_sp()),
    }
}

fn load_mask_for(features: &[String], settings: &Settings) -> Result<MaskSpec> {
    let immutable = match &settings.mask {
        Some(path) => load_mask_file(path)?,
        None => BTreeSet::new(),
    };
    let mask = build_mask(features, &immutable);
    for name in &mask.missing {
        eprintln!("warning: immutable feature '{name}' is not in the data; ignored");
    }
    Ok(mask)
}

fn batch_config(settings: &Settings, scale: &RatingScale) -> Result<BatchConfig> {
    Ok(BatchConfig {
        method: settings.method,
        rating_filter: settings.rating_filter(scale)?,
        target_override: settings.target,
        target_dist: settings.target_dist,
        workers: settings.workers,
        solver: settings.solver_config(),
        sparsity: settings.sparsity_config(),
    })
}

fn cmd_synth(settings: &Settings, args: &SynthArgs) -> Result<()> {
    let out = require(&settings.out, "out")?;
    let mut cfg = settings.synth_config();
    if let Some(n) = args.n {
        cfg.n_points = n;
    }
    let data = generate_dataset(&cfg)?;
    let scale = active_scale(settings)?;
    save_table(&data, &out, &scale)?;
    println!(
        "wrote {} rows x {} features to {}",
        data.n_rows(),
        data.n_features(),
        out.display()
    );
    Ok(())
}

fn cmd_train(settings: &mut Settings, args: &TrainArgs) -> Result<()> {
    if let Some(v) = &args.hidden_layer_sizes {
        settings.set("hidden_layer_sizes", v)?;
    }
    if let Some(v) = args.learning_rate {
        settings.learning_rate = v;
    }
    if let Some(v) = args.epochs {
        settings.epochs = v;
    }
    if let Some(v) = args.batch_size {
        settings.batch_size = v;
    }
    if let Some(v) = args.l2_weight_decay {
        settings.l2_weight_decay = v;
    }
    if let Some(v) = &args.hidden_activation {
        settings.hidden_activation = v.parse()?;
    }

    let data_path = require(&settings.data, "data")?;
    let out = require(&settings.out, "out")?;
    let scale = active_scale(settings)?;
    let data = load_table(&data_path, &settings.rating_column, &scale)?;
    let scaler = fit_scaler(&data.rows)?;
    let standardized = scaler.apply(&data.rows)?;
    let model = train(
        &settings.train_config(),
        &standardized,
        &data.ratings,
        settings.hidden_activation,
    )?;
    let loss = dataset_loss(&model, &standardized, &data.ratings)?;
    let accuracy = dataset_accuracy(&model, &standardized, &data.ratings)?;
    let bundle = ModelBundle {
        model,
        feature_names: data.feature_names.clone(),
        scaler,
        rating_scale: scale,
    };
    save_model(&bundle, &out)?;
    println!(
        "trained on {} rows ({} features, {} classes): loss {:.6}, accuracy {:.4}",
        data.n_rows(),
        data.n_features(),
        bundle.model.n_classes(),
        loss,
        accuracy
    );
    println!("model written to {}", out.display());
    Ok(())
}

fn load_inputs(settings: &Settings) -> Result<(ModelBundle, TabularDataset, MaskSpec)> {
    let model_path = require(&settings.model, "model")?;
    let data_path = require(&settings.data, "data")?;
    let bundle = load_model(&model_path)?;
    let data = load_table(&data_path, &settings.rating_column, &bundle.rating_scale)?;
    if data.feature_names != bundle.feature_names {
        return Err(Error::Contract(format!(
            "data columns do not match the model's features (data: {}, model: {})",
            data.n_features(),
            bundle.feature_names.len()
        )));
    }
    let mask = load_mask_for(&data.feature_names, settings)?;
    Ok((bundle, data, mask))
}

fn cmd_explain(settings: &Settings, args: &ExplainArgs) -> Result<()> {
    let (bundle, data, mask) = load_inputs(settings)?;
    let row_id = match (&args.row, &args.entity, &args.period) {
        (Some(row), None, None) => *row,
        (None, Some(entity), Some(period)) => find_row(&data, entity, period)?,
        _ => {
            return Err(Error::InvalidInput(
                "give either --row or both --entity and --period".into(),
            ))
        }
    };
    let cfg = batch_config(settings, &bundle.rating_scale)?;
    let run = explain_row(&bundle, &data, &mask, &cfg, row_id)?;
    let r = &run.record;
    let symbol = |ordinal: usize| -> String {
        bundle
            .rating_scale
            .to_symbol(ordinal)
            .map(|s| format!(" ({s})"))
            .unwrap_or_default()
    };

    println!("row {}", r.row_id);
    if let (Some(e), Some(p)) = (&r.entity_id, &r.period) {
        println!("entity {e}, period {p}");
    }
    println!(
        "predicted rating: {}{}",
        r.predicted_before,
        symbol(r.predicted_before)
    );
    match r.outcome {
        Outcome::Solved => {
            println!(
                "improves to: {}{} (lambda {}, sparsity level {})",
                r.predicted_after,
                symbol(r.predicted_after),
                r.lambda_used,
                r.sparsity_level
                    .map(|l| l.to_string())
                    .unwrap_or_else(|| "-".into()),
            );
            println!("changes (original units):");
            for (name, delta) in r.changed_feature_names.iter().zip(&r.delta_original_units) {
                println!("  {name}: {delta:+.6}");
            }
            println!("effort: l0 {}, l1 {:.6}, l2 {:.6}", r.l0, r.l1, r.l2);
            if let Some(probs) = &run.output_probs {
                println!("output distribution after change:");
                for (i, p) in probs.iter().enumerate() {
                    println!("  {}{}: {:.6}", i + 1, symbol(i + 1), p);
                }
            }
        }
        Outcome::NoSolution => {
            println!(
                "no solution: the rating cannot be improved by the model under this ladder (last lambda {})",
                r.lambda_used
            );
        }
    }
    Ok(())
}

fn cmd_batch(settings: &Settings, args: &BatchArgs) -> Result<()> {
    let mut settings = settings.clone();
    if let Some(r) = &args.ratings {
        settings.ratings = Some(r.clone());
    }
    let out = require(&settings.out, "out")?;
    let (bundle, data, mask) = load_inputs(&settings)?;
    let cfg = batch_config(&settings, &bundle.rating_scale)?;
    let result = run_batch(&bundle, &data, &mask, &cfg)?;
    for (row, reason) in &result.skipped {
        eprintln!("notice: row {row} skipped: {reason}");
    }
    write_results(&result.records, &out)?;
    let solved = result
        .records
        .iter()
        .filter(|r| r.outcome == Outcome::Solved)
        .count();
    println!(
        "{} rows run, {} solved, {} without solution, {} skipped; results in {}",
        result.records.len(),
        solved,
        result.records.len() - solved,
        result.skipped.len(),
        out.display()
    );
    Ok(())
}

fn cmd_report(settings: &Settings, args: &ReportArgs) -> Result<()> {
    let results_path = args
        .results
        .clone()
        .ok_or_else(|| Error::InvalidInput("missing required --results".into()))?;
    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| settings.out_dir.clone())
        .ok_or_else(|| Error::InvalidInput("missing required --out-dir".into()))?;

    let sparsity = read_results(&results_path)?;
    let gd = args.gd_results.as_deref().map(read_results).transpose()?;
    let scale = active_scale(settings)?;

    let panel_data;
    let panel_mask;
    let panel = match &settings.data {
        Some(path) => {
            panel_data = load_table(path, &settings.rating_column, &scale)?;
            panel_mask = load_mask_for(&panel_data.feature_names, settings)?;
            Some((&panel_data, &panel_mask))
        }
        None => None,
    };

    let report = build_report(&sparsity, gd.as_deref(), panel, &settings.lambda_ladder)?;
    let files = write_report(&report, Some(&scale), &out_dir)?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
