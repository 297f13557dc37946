//! The end-to-end pipeline: decks in, report bundle out.
//!
//! Fixed stage order: parse, disassemble, metadata, ingest, cluster,
//! table, kmeans, rank, tree, report. Any stage failure aborts with the
//! stage name and cause; partial store writes from an aborted run are
//! harmless because the store is content-addressed and re-runs are
//! idempotent. Identical inputs, configuration, and seed reproduce the
//! bundle byte for byte; only the manifest timestamp differs between runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::cluster::{
    two_level_grouping, ClusterError, GroupingParams, SimilarityWeights, VariantGrouping,
};
use crate::config::{ConfigError, PipelineConfig};
use crate::deck::{parse_deck, DeckError};
use crate::disasm::{digest_bytes, disassemble, DisasmError};
use crate::geometry::{compute_metadata, GeometryError};
use crate::mining::{
    build_tree, chi_squared_rank, kmeans_classes, read_results_csv, AttributeRanking,
    DecisionTree, KmeansOutcome, MiningError, MiningTable,
};
use crate::report::{
    ensure_previews, render_scatter, write_report, ReportError, ReportInputs, ScatterPoint,
};
use crate::store::{write_atomic, DedupStats, PartStore, StoreError};

/// Stage names in execution order.
pub const PIPELINE_STAGES: [&str; 10] = [
    "parse",
    "disassemble",
    "metadata",
    "ingest",
    "cluster",
    "table",
    "kmeans",
    "rank",
    "tree",
    "report",
];

/// Failure of one pipeline stage.
#[derive(Debug, thiserror::Error)]
#[error("stage '{stage}' failed: {source}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub source: StageError,
}

/// Causes a stage can fail with.
#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Deck(#[from] DeckError),
    #[error(transparent)]
    Disasm(#[from] DisasmError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Mining(#[from] MiningError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

fn at<E: Into<StageError>>(stage: &'static str) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError {
        stage,
        source: e.into(),
    }
}

/// Everything a pipeline run produced, with paths relative to
/// [`ReportBundle::output_dir`] where applicable.
#[derive(Debug)]
pub struct ReportBundle {
    pub output_dir: PathBuf,
    pub report_path: PathBuf,
    pub manifest_path: PathBuf,
    pub ranking_path: PathBuf,
    pub tree_text_path: PathBuf,
    pub tree_dot_path: PathBuf,
    pub arff_path: PathBuf,
    pub stats_path: PathBuf,
    /// Figure paths relative to the output dir.
    pub figures: Vec<String>,
    pub stats: DedupStats,
    pub table: MiningTable,
    pub ranking: AttributeRanking,
    pub tree: DecisionTree,
    pub kmeans: KmeansOutcome,
    pub grouping: VariantGrouping,
    /// Warnings from parsing and metadata, keyed by simulation.
    pub warnings: BTreeMap<String, usize>,
}

/// Runs the full pipeline. `config.validate()` must pass; it is checked
/// here before anything executes.
pub fn run_pipeline(config: &PipelineConfig) -> Result<ReportBundle, PipelineError> {
    config.validate().map_err(at("parse"))?;
    let mut store = PartStore::open(&config.store_root).map_err(at("ingest"))?;
    let ingest = ingest_decks(config, &mut store)?;
    analyze_store(config, &store, ingest.input_digests, ingest.warnings)
}

/// Result of the parse/disassemble/metadata/ingest stages.
pub struct IngestOutcome {
    /// Per-simulation warning counts (unknown records, excluded elements,
    /// surface-less parts).
    pub warnings: BTreeMap<String, usize>,
    /// (label, md5) of every input file, for the run manifest.
    pub input_digests: Vec<(String, String)>,
    /// Catalog entries added or confirmed by this ingest.
    pub ingested: usize,
}

/// Stages parse, disassemble, metadata, ingest: reads every configured
/// deck into the store.
pub fn ingest_decks(
    config: &PipelineConfig,
    store: &mut PartStore,
) -> Result<IngestOutcome, PipelineError> {
    let mut parsed = Vec::with_capacity(config.decks.len());
    let mut warnings: BTreeMap<String, usize> = BTreeMap::new();
    let mut input_digests: Vec<(String, String)> = Vec::new();
    for deck_source in &config.decks {
        let bytes = fs::read(&deck_source.path).map_err(at("parse"))?;
        input_digests.push((
            format!("deck.{}", deck_source.simulation_id),
            digest_bytes(&bytes).as_hex().to_string(),
        ));
        let outcome = parse_deck(bytes.as_slice(), &deck_name(deck_source))
            .map_err(at("parse"))?;
        *warnings.entry(deck_source.simulation_id.clone()).or_insert(0) +=
            outcome.warnings.len();
        parsed.push((deck_source.simulation_id.clone(), outcome.deck));
    }

    let mut ingested = 0usize;
    for (simulation_id, deck) in &parsed {
        let parts = disassemble(deck).map_err(at("disassemble"))?;
        for part in &parts {
            if !part.has_surface_elements() {
                // Solid/beam/bar-only parts carry no surface meta data.
                *warnings.entry(simulation_id.clone()).or_insert(0) += 1;
                continue;
            }
            let outcome =
                compute_metadata(part, config.angle_threshold_deg).map_err(at("metadata"))?;
            if outcome.excluded_elements > 0 {
                *warnings.entry(simulation_id.clone()).or_insert(0) += 1;
            }
            let digest = outcome.metadata.digest.clone();
            store
                .ingest(part, &outcome.metadata, simulation_id, None)
                .map_err(at("ingest"))?;
            ingested += 1;
            let previews =
                ensure_previews(store, &digest, part).map_err(at("ingest"))?;
            store.attach_previews(
                &digest,
                previews
                    .iter()
                    .map(|p| p.display().to_string())
                    .collect(),
            );
        }
    }
    Ok(IngestOutcome {
        warnings,
        input_digests,
        ingested,
    })
}

/// Stages cluster through report over an already-populated store.
pub fn analyze_store(
    config: &PipelineConfig,
    store: &PartStore,
    mut input_digests: Vec<(String, String)>,
    warnings: BTreeMap<String, usize>,
) -> Result<ReportBundle, PipelineError> {
    let results_bytes = fs::read(&config.results_path).map_err(at("parse"))?;
    input_digests.push((
        "results".to_string(),
        digest_bytes(&results_bytes).as_hex().to_string(),
    ));
    let results = read_results_csv(results_bytes.as_slice()).map_err(at("parse"))?;

    let weights = match &config.weights_path {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(at("parse"))?;
            SimilarityWeights::parse(&text).map_err(at("parse"))?
        }
        None => SimilarityWeights::uniform(),
    };

    // cluster over the study population: entries of simulations that have
    // results.
    let study_sims: std::collections::BTreeSet<String> = results
        .rows
        .iter()
        .map(|r| r.simulation_id.clone())
        .collect();
    let entries: Vec<crate::store::CatalogEntry> = store
        .entries()
        .iter()
        .filter(|e| study_sims.contains(&e.simulation_id))
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
    .map_err(at("cluster"))?;

    // table.
    let relation = relation_name(config);
    let mut table =
        crate::mining::assemble_table(&entries, &grouping, &results, &weights, &relation)
            .map_err(at("table"))?;

    // kmeans classes.
    let kmeans = kmeans_classes(&mut table, &config.result_columns, config.k, config.seed)
        .map_err(at("kmeans"))?;

    // rank.
    let ranking = chi_squared_rank(&table, config.chi2_bins).map_err(at("rank"))?;

    // tree.
    let tree = build_tree(&table, config.tree_confidence, config.tree_min_instances)
        .map_err(at("tree"))?;

    // report: all bundle artifacts.
    let out = &config.output_dir;
    fs::create_dir_all(out.join("figures")).map_err(at("report"))?;

    let mut figures = Vec::new();
    let class = table.class.as_ref().expect("class column set by kmeans");
    let mut pair_start = 0;
    while pair_start < table.result_names.len() {
        let (xi, yi) = if pair_start + 1 < table.result_names.len() {
            (pair_start, pair_start + 1)
        } else if table.result_names.len() == 1 {
            (0, 0)
        } else {
            break;
        };
        let x_name = &table.result_names[xi];
        let y_name = &table.result_names[yi];
        let points: Vec<ScatterPoint> = (0..table.n_rows())
            .map(|row| ScatterPoint {
                x: table.results[row][xi],
                y: table.results[row][yi],
                class: class.labels[row].clone(),
            })
            .collect();
        let svg = render_scatter(&points, x_name, y_name, &class.label_order)
            .map_err(at("report"))?;
        let rel = format!("figures/scatter_{}_{}.svg", x_name, y_name);
        write_atomic(&out.join(&rel), svg.as_bytes()).map_err(at("report"))?;
        figures.push(rel);
        pair_start += 2;
    }

    let stats = store.dedup_stats();
    let simulations: Vec<(String, String)> = table
        .simulation_ids
        .iter()
        .cloned()
        .zip(table.model_names.iter().cloned())
        .collect();
    let cluster_parts = grouping.cluster_members();

    let ranking_path = out.join("ranking.txt");
    write_atomic(&ranking_path, ranking.to_text().as_bytes()).map_err(at("report"))?;
    let tree_text_path = out.join("tree.txt");
    write_atomic(&tree_text_path, tree.to_text().as_bytes()).map_err(at("report"))?;
    let tree_dot_path = out.join("tree.dot");
    write_atomic(&tree_dot_path, tree.to_dot().as_bytes()).map_err(at("report"))?;
    let arff_path = out.join("table.arff");
    write_atomic(&arff_path, table.to_arff().as_bytes()).map_err(at("report"))?;
    let stats_path = out.join("stats.txt");
    write_atomic(&stats_path, stats_text(&stats).as_bytes()).map_err(at("report"))?;

    let report = write_report(&ReportInputs {
        simulations: &simulations,
        results_path: &config.results_path.display().to_string(),
        table: &table,
        stats: &stats,
        ranking: &ranking,
        cluster_parts: &cluster_parts,
        tree: &tree,
        kmeans: &kmeans,
        figures: &figures,
        output_dir: out,
    })
    .map_err(at("report"))?;
    let report_path = out.join("report.txt");
    write_atomic(&report_path, report.as_bytes()).map_err(at("report"))?;

    let manifest_path = out.join("manifest.txt");
    let manifest = manifest_text(config, &input_digests);
    write_atomic(&manifest_path, manifest.as_bytes()).map_err(at("report"))?;

    Ok(ReportBundle {
        output_dir: out.clone(),
        report_path,
        manifest_path,
        ranking_path,
        tree_text_path,
        tree_dot_path,
        arff_path,
        stats_path,
        figures,
        stats,
        table,
        ranking,
        tree,
        kmeans,
        grouping,
        warnings,
    })
}

fn deck_name(source: &crate::config::DeckSource) -> String {
    source
        .path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| source.simulation_id.clone())
}

fn relation_name(config: &PipelineConfig) -> String {
    config
        .output_dir
        .file_name()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "crash_study".to_string())
}

fn stats_text(stats: &DedupStats) -> String {
    format!(
        "total_instances = {}\ndistinct_digests = {}\nreduction_ratio = {}\n",
        stats.total_instances, stats.distinct_digests, stats.reduction_ratio
    )
}

/// Manifest: tool version, timestamp (the single non-reproducible line),
/// config echo, and input content digests.
fn manifest_text(config: &PipelineConfig, input_digests: &[(String, String)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "tool = crashmine {}\n",
        env!("CARGO_PKG_VERSION")
    ));
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    out.push_str(&format!("generated_at_unix = {}\n", now));
    out.push('\n');
    out.push_str(&config.echo());
    out.push('\n');
    for (name, digest) in input_digests {
        out.push_str(&format!("input.{} = {}\n", name, digest));
    }
    out
}
