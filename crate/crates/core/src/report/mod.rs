//! Report artifacts: figures, preview caching, and the report document.

mod svg;

pub use svg::{render_part_preview, render_scatter, ScatterPoint};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::disasm::{ContentDigest, PartMesh};
use crate::mining::{AttributeRanking, DecisionTree, KmeansOutcome, MiningTable};
use crate::store::{write_atomic, DedupStats, PartStore};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("report i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("scatter point has non-finite coordinate ({x}, {y})")]
    NonFiniteCoordinate { x: f64, y: f64 },
    #[error("cannot render a scatter of zero points")]
    NoPoints,
    #[error("part {part_id} has no surface elements to preview")]
    NoSurfaceElements { part_id: u64 },
    #[error("report references missing figure '{path}'")]
    MissingFigure { path: String },
    #[error(transparent)]
    Geometry(Box<crate::geometry::GeometryError>),
}

/// Writes the three wireframe previews for a digest unless they already
/// exist; returns the paths either way. Preview generation runs only for
/// content the store has not seen, mirroring the ingest-time policy for
/// expensive derived artifacts.
pub fn ensure_previews(
    store: &PartStore,
    digest: &ContentDigest,
    part: &PartMesh,
) -> Result<[PathBuf; 3], ReportError> {
    let dir = store.previews_dir();
    let paths = [
        dir.join(format!("{}_xy.svg", digest)),
        dir.join(format!("{}_xz.svg", digest)),
        dir.join(format!("{}_yz.svg", digest)),
    ];
    if paths.iter().all(|p| p.exists()) {
        return Ok(paths);
    }
    let rendered = render_part_preview(part)?;
    for (path, svg) in paths.iter().zip(rendered.iter()) {
        write_atomic(path, svg.as_bytes())?;
    }
    Ok(paths)
}

/// Everything [`write_report`] needs to assemble the document.
pub struct ReportInputs<'a> {
    /// (simulation id, deck name) pairs of the study.
    pub simulations: &'a [(String, String)],
    pub results_path: &'a str,
    pub table: &'a MiningTable,
    pub stats: &'a DedupStats,
    pub ranking: &'a AttributeRanking,
    /// Distinct raw part ids per part cluster, for traceability.
    pub cluster_parts: &'a std::collections::BTreeMap<usize, Vec<u64>>,
    pub tree: &'a DecisionTree,
    pub kmeans: &'a KmeansOutcome,
    /// Figure paths relative to the bundle root.
    pub figures: &'a [String],
    /// Bundle root, used to verify figure existence.
    pub output_dir: &'a Path,
}

/// Assembles the report document: six `#`-headed sections in fixed order
/// (inputs, deduplication, ranking, tree, result clustering, figures).
/// Every referenced figure must exist under the bundle root.
pub fn write_report(inputs: &ReportInputs<'_>) -> Result<String, ReportError> {
    for figure in inputs.figures {
        if !inputs.output_dir.join(figure).exists() {
            return Err(ReportError::MissingFigure {
                path: figure.clone(),
            });
        }
    }

    let mut doc = String::new();

    writeln!(doc, "# Inputs").unwrap();
    writeln!(doc, "simulations: {}", inputs.simulations.len()).unwrap();
    for (sim, model) in inputs.simulations {
        writeln!(doc, "  {} ({})", sim, model).unwrap();
    }
    writeln!(doc, "results: {}", inputs.results_path).unwrap();
    writeln!(
        doc,
        "intrusions: {}",
        inputs.table.result_names.join(", ")
    )
    .unwrap();
    writeln!(
        doc,
        "mined attributes: {} modified part cluster(s)",
        inputs.table.attributes.len()
    )
    .unwrap();
    doc.push('\n');

    writeln!(doc, "# Deduplication").unwrap();
    writeln!(
        doc,
        "part instances: {}",
        inputs.stats.total_instances
    )
    .unwrap();
    writeln!(
        doc,
        "distinct contents: {}",
        inputs.stats.distinct_digests
    )
    .unwrap();
    writeln!(
        doc,
        "reduction: {:.1}%",
        inputs.stats.reduction_ratio * 100.0
    )
    .unwrap();
    doc.push('\n');

    writeln!(doc, "# Attribute Ranking").unwrap();
    writeln!(doc, "rank\tchi2\tattribute\tparts").unwrap();
    for (i, entry) in inputs.ranking.entries.iter().enumerate() {
        let cluster: Option<usize> = entry
            .name
            .strip_prefix("part_")
            .and_then(|s| s.parse().ok());
        let parts = cluster
            .and_then(|c| inputs.cluster_parts.get(&c))
            .map(|ids| {
                ids.iter()
                    .map(|id| id.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .unwrap_or_default();
        writeln!(
            doc,
            "{}\t{:.6}\t{}\t{}",
            i + 1,
            entry.score,
            entry.name,
            parts
        )
        .unwrap();
    }
    doc.push('\n');

    writeln!(doc, "# Decision Tree").unwrap();
    writeln!(
        doc,
        "confidence: {}  min instances: {}  nodes: {} (unpruned {})  pruned subtrees: {}",
        inputs.tree.confidence,
        inputs.tree.min_instances,
        inputs.tree.node_count(),
        inputs.tree.unpruned_node_count,
        inputs.tree.pruned_subtrees
    )
    .unwrap();
    writeln!(
        doc,
        "training errors: {}/{}",
        inputs.tree.training_errors(),
        inputs.table.n_rows()
    )
    .unwrap();
    for line in inputs.tree.to_text().lines() {
        writeln!(doc, "  {}", line).unwrap();
    }
    doc.push('\n');

    writeln!(doc, "# Result Clustering").unwrap();
    writeln!(doc, "k: {}  seed: {}", inputs.kmeans.label_order.len(), inputs.kmeans.seed).unwrap();
    for (label, mean) in inputs
        .kmeans
        .label_order
        .iter()
        .zip(&inputs.kmeans.mean_intrusion)
    {
        let count = inputs
            .kmeans
            .labels
            .iter()
            .filter(|l| *l == label)
            .count();
        writeln!(
            doc,
            "{}: {} model(s), mean total intrusion {:.3} mm",
            label, count, mean
        )
        .unwrap();
    }
    doc.push('\n');

    writeln!(doc, "# Figures").unwrap();
    for figure in inputs.figures {
        writeln!(doc, "{}", figure).unwrap();
    }

    Ok(doc)
}
