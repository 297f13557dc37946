//! `crashmine`: disassemble crash FE decks into a deduplicated part
//! catalog and mine part-shape variation against intrusion results.
//!
//! Every pipeline stage is runnable on its own (`ingest`, `stats`,
//! `cluster`, `table`, `rank`, `tree`, `report`) and `run` executes the
//! whole chain. Exit codes: 0 success, 1 usage or configuration error,
//! 2 data error, 3 i/o error.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crashmine_core::cluster::{
    two_level_grouping, GroupingParams, SimilarityWeights, VariantGrouping,
};
use crashmine_core::config::{parse_deck_source, PipelineConfig};
use crashmine_core::deck::DeckError;
use crashmine_core::mining::{
    assemble_table, build_tree, chi_squared_rank, kmeans_classes, read_results_csv,
    MiningError, MiningTable,
};
use crashmine_core::pipeline::{
    analyze_store, ingest_decks, run_pipeline, PipelineError, StageError, PIPELINE_STAGES,
};
use crashmine_core::report::ReportError;
use crashmine_core::store::{PartStore, StoreError};

#[derive(Parser)]
#[command(
    name = "crashmine",
    version,
    about = "Mine crash-simulation part geometry against intrusion results"
)]
struct Cli {
    /// Part store root directory.
    #[arg(long, global = true)]
    store: Option<PathBuf>,

    /// Config file (flat key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for result-class clustering.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct AnalysisArgs {
    /// Results CSV (header: simulation_id,<intrusion>...).
    #[arg(long)]
    results: Option<PathBuf>,

    /// Similarity weights file (name = value per line).
    #[arg(long)]
    weights: Option<PathBuf>,

    /// Linkage criterion: average, single, or complete.
    #[arg(long)]
    linkage: Option<String>,

    /// Coarse dendrogram cut height (part identity).
    #[arg(long)]
    coarse: Option<f64>,

    /// Fine dendrogram cut height (variants inside a part).
    #[arg(long)]
    fine: Option<f64>,

    /// Result columns for class clustering (comma separated; default all).
    #[arg(long)]
    columns: Option<String>,

    /// Number of crash-quality classes.
    #[arg(long)]
    k: Option<usize>,

    /// Bins for chi-squared discretization.
    #[arg(long)]
    bins: Option<usize>,

    /// Pruning confidence factor.
    #[arg(long)]
    confidence: Option<f64>,

    /// Minimum training instances per tree branch.
    #[arg(long)]
    min_instances: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse decks, compute per-part meta data, store deduplicated parts.
    Ingest {
        /// Decks as <simulation_id>=<path> or <path> (id = file stem).
        #[arg(required = true)]
        decks: Vec<String>,
        /// Feature-edge angle threshold in degrees.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Print deduplication statistics of the store.
    Stats,
    /// Group catalogued parts into part clusters and design variants.
    Cluster {
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Assemble the mining table and write it in attribute-relation format.
    Table {
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Output file (stdout if omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Rank part attributes by chi-squared impact on the crash class.
    Rank {
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Induce the gain-ratio decision tree over part attributes.
    Tree {
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the graph description here.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Produce the report bundle from the existing store and results.
    Report {
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Bundle output directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the full pipeline: ingest every configured deck, then report.
    Run {
        /// Extra decks as <simulation_id>=<path> or <path>.
        decks: Vec<String>,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// List the stages without executing anything.
        #[arg(long)]
        dry_run: bool,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap's default exit code disagrees with ours; print its
            // message and classify as usage.
            let _ = err.print();
            std::process::exit(if err.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {}", err);
        std::process::exit(exit_code(&err.source));
    }
}

fn exit_code(err: &StageError) -> i32 {
    match err {
        StageError::Config(_) => 1,
        StageError::Io(_) => 3,
        StageError::Deck(DeckError::Io(_)) => 3,
        StageError::Store(StoreError::Io(_)) => 3,
        StageError::Mining(MiningError::Io(_)) => 3,
        StageError::Report(ReportError::Io(_)) => 3,
        _ => 2,
    }
}

fn fail(stage: &'static str, source: impl Into<StageError>) -> PipelineError {
    PipelineError {
        stage,
        source: source.into(),
    }
}

/// Defaults, then config file, then global and per-command flags.
fn build_config(
    cli_store: &Option<PathBuf>,
    cli_config: &Option<PathBuf>,
    cli_seed: &Option<u64>,
    analysis: Option<&AnalysisArgs>,
) -> Result<PipelineConfig, PipelineError> {
    let mut config = match cli_config {
        Some(path) => PipelineConfig::from_file(path).map_err(|e| fail("parse", e))?,
        None => PipelineConfig::default(),
    };
    if let Some(store) = cli_store {
        config.store_root = store.clone();
    }
    if let Some(seed) = cli_seed {
        config.seed = *seed;
    }
    if let Some(args) = analysis {
        if let Some(results) = &args.results {
            config.results_path = results.clone();
        }
        if let Some(weights) = &args.weights {
            config.weights_path = Some(weights.clone());
        }
        if let Some(linkage) = &args.linkage {
            config.linkage = linkage
                .parse()
                .map_err(|e| fail("parse", StageError::Cluster(e)))?;
        }
        if let Some(coarse) = args.coarse {
            config.coarse_height = coarse;
        }
        if let Some(fine) = args.fine {
            config.fine_height = fine;
        }
        if let Some(columns) = &args.columns {
            config.result_columns = columns
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
        }
        if let Some(k) = args.k {
            config.k = k;
        }
        if let Some(bins) = args.bins {
            config.chi2_bins = bins;
        }
        if let Some(confidence) = args.confidence {
            config.tree_confidence = confidence;
        }
        if let Some(min_instances) = args.min_instances {
            config.tree_min_instances = min_instances;
        }
    }
    Ok(config)
}

fn open_store(config: &PipelineConfig) -> Result<PartStore, PipelineError> {
    PartStore::open(&config.store_root).map_err(|e| fail("ingest", e))
}

/// Grouping plus assembled table over the store's study population.
fn load_table(
    config: &PipelineConfig,
    store: &PartStore,
) -> Result<(VariantGrouping, MiningTable), PipelineError> {
    config.validate_analysis().map_err(|e| fail("parse", e))?;
    let results_text =
        std::fs::read(&config.results_path).map_err(|e| fail("parse", StageError::Io(e)))?;
    let results = read_results_csv(results_text.as_slice()).map_err(|e| fail("parse", e))?;
    let weights = match &config.weights_path {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| fail("parse", StageError::Io(e)))?;
            SimilarityWeights::parse(&text).map_err(|e| fail("parse", e))?
        }
        None => SimilarityWeights::uniform(),
    };
    let sims: std::collections::BTreeSet<String> = results
        .rows
        .iter()
        .map(|r| r.simulation_id.clone())
        .collect();
    let entries: Vec<_> = store
        .entries()
        .iter()
        .filter(|e| sims.contains(&e.simulation_id))
        .cloned()
        .collect();
    let grouping = two_level_grouping(
        &entries,
        GroupingParams {
            linkage: config.linkage,
            coarse_height: config.coarse_height,
            fine_height: config.fine_height,
        },
    )
    .map_err(|e| fail("cluster", e))?;
    let relation = config
        .output_dir
        .file_name()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "crash_study".to_string());
    let table = assemble_table(&entries, &grouping, &results, &weights, &relation)
        .map_err(|e| fail("table", e))?;
    Ok((grouping, table))
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), PipelineError> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| fail("report", StageError::Io(e))),
        None => {
            print!("{}", text);
            std::io::stdout()
                .flush()
                .map_err(|e| fail("report", StageError::Io(e)))
        }
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match &cli.command {
        Command::Ingest { decks, threshold } => {
            let mut config = build_config(&cli.store, &cli.config, &cli.seed, None)?;
            if let Some(threshold) = threshold {
                config.angle_threshold_deg = *threshold;
            }
            for deck in decks {
                config
                    .decks
                    .push(parse_deck_source(deck).map_err(|e| fail("parse", e))?);
            }
            let mut store = open_store(&config)?;
            let outcome = ingest_decks(&config, &mut store)?;
            let stats = store.dedup_stats();
            println!(
                "ingested {} part instance(s) from {} deck(s); store: {} instance(s), {} distinct content(s)",
                outcome.ingested,
                config.decks.len(),
                stats.total_instances,
                stats.distinct_digests
            );
            let warning_total: usize = outcome.warnings.values().sum();
            if warning_total > 0 {
                println!("{} warning(s) across simulations", warning_total);
            }
            Ok(())
        }
        Command::Stats => {
            let config = build_config(&cli.store, &cli.config, &cli.seed, None)?;
            let store = open_store(&config)?;
            let stats = store.dedup_stats();
            println!("total_instances = {}", stats.total_instances);
            println!("distinct_digests = {}", stats.distinct_digests);
            println!("reduction_ratio = {}", stats.reduction_ratio);
            println!("modified_parts = {}", store.modified_part_ids(None).len());
            Ok(())
        }
        Command::Cluster { analysis } => {
            let config = build_config(&cli.store, &cli.config, &cli.seed, Some(analysis))?;
            let store = open_store(&config)?;
            let entries = store.entries().to_vec();
            let grouping = two_level_grouping(
                &entries,
                GroupingParams {
                    linkage: config.linkage,
                    coarse_height: config.coarse_height,
                    fine_height: config.fine_height,
                },
            )
            .map_err(|e| fail("cluster", e))?;
            println!("part_cluster\tvariant\tsimulation\tpart_id\tdigest");
            for a in &grouping.assignments {
                println!(
                    "{}\t{}\t{}\t{}\t{}",
                    a.part_cluster, a.variant, a.entry.simulation_id, a.entry.part_id, a.entry.digest
                );
            }
            Ok(())
        }
        Command::Table { analysis, output } => {
            let config = build_config(&cli.store, &cli.config, &cli.seed, Some(analysis))?;
            let store = open_store(&config)?;
            let (_, table) = load_table(&config, &store)?;
            emit(output, &table.to_arff())
        }
        Command::Rank { analysis, output } => {
            let config = build_config(&cli.store, &cli.config, &cli.seed, Some(analysis))?;
            let store = open_store(&config)?;
            let (_, mut table) = load_table(&config, &store)?;
            kmeans_classes(&mut table, &config.result_columns, config.k, config.seed)
                .map_err(|e| fail("kmeans", e))?;
            let ranking =
                chi_squared_rank(&table, config.chi2_bins).map_err(|e| fail("rank", e))?;
            emit(output, &ranking.to_text())
        }
        Command::Tree {
            analysis,
            output,
            dot,
        } => {
            let config = build_config(&cli.store, &cli.config, &cli.seed, Some(analysis))?;
            let store = open_store(&config)?;
            let (_, mut table) = load_table(&config, &store)?;
            kmeans_classes(&mut table, &config.result_columns, config.k, config.seed)
                .map_err(|e| fail("kmeans", e))?;
            let tree = build_tree(&table, config.tree_confidence, config.tree_min_instances)
                .map_err(|e| fail("tree", e))?;
            if let Some(dot_path) = dot {
                std::fs::write(dot_path, tree.to_dot())
                    .map_err(|e| fail("report", StageError::Io(e)))?;
            }
            emit(output, &tree.to_text())
        }
        Command::Report { analysis, output } => {
            let mut config = build_config(&cli.store, &cli.config, &cli.seed, Some(analysis))?;
            if let Some(output) = output {
                config.output_dir = output.clone();
            }
            config.validate_analysis().map_err(|e| fail("parse", e))?;
            let store = open_store(&config)?;
            let bundle = analyze_store(&config, &store, Vec::new(), BTreeMap::new())?;
            println!("report bundle written to {}", bundle.output_dir.display());
            Ok(())
        }
        Command::Run {
            decks,
            analysis,
            output,
            dry_run,
        } => {
            let mut config = build_config(&cli.store, &cli.config, &cli.seed, Some(analysis))?;
            if let Some(output) = output {
                config.output_dir = output.clone();
            }
            for deck in decks {
                config
                    .decks
                    .push(parse_deck_source(deck).map_err(|e| fail("parse", e))?);
            }
            if *dry_run {
                for (i, stage) in PIPELINE_STAGES.iter().enumerate() {
                    println!("{}. {}", i + 1, stage);
                }
                return Ok(());
            }
            let bundle = run_pipeline(&config)?;
            println!(
                "pipeline complete: {} simulation(s), {} attribute(s), {} figure(s)",
                bundle.table.n_rows(),
                bundle.table.attributes.len(),
                bundle.figures.len()
            );
            println!("report bundle written to {}", bundle.output_dir.display());
            Ok(())
        }
    }
}
