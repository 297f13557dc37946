//! Content-addressed persistent store of deduplicated parts.
//!
//! Layout under the store root:
//!
//! ```text
//! parts/<digest>.mesh    canonical part bytes, one file per distinct digest
//! previews/              wireframe projections, keyed by digest
//! catalog.jsonl          one JSON object per catalog entry, append-only
//! ```
//!
//! Mesh files are written once per distinct digest (content addressing), so
//! re-ingesting the same corpus is a byte-level no-op and interrupted runs
//! leave nothing that a re-run will not reuse. Writers must be externally
//! serialized (single-writer contract); files appear atomically via
//! temp-name + rename, so concurrent readers never observe partial meshes.
//!
//! Part names from the source system are stored for reporting but are never
//! used as identity; identity is the content digest plus clustering.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::disasm::{canonicalize, checksum, ContentDigest, PartMesh};
use crate::geometry::PartMetadata;

/// One catalogued part instance: which simulation carried which part
/// content, plus the computed meta data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub digest: ContentDigest,
    pub part_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part_name: Option<String>,
    pub source_model: String,
    pub simulation_id: String,
    pub metadata: PartMetadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preview_paths: Option<Vec<String>>,
}

/// Instance/content counts of the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedupStats {
    pub total_instances: usize,
    pub distinct_digests: usize,
    /// `1 - distinct/total`; 0 for an empty catalog.
    pub reduction_ratio: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("store i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("catalog line {line}: {source}")]
    CatalogCorrupt {
        line: usize,
        source: serde_json::Error,
    },
    #[error("catalog serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error(
        "metadata digest {metadata} does not match part content digest {content} \
         for part {part_id}"
    )]
    DigestMismatch {
        part_id: u64,
        metadata: String,
        content: String,
    },
    #[error(
        "simulation '{simulation_id}' already has part {part_id} with digest {existing}, \
         refusing to re-ingest with digest {new}"
    )]
    Conflict {
        simulation_id: String,
        part_id: u64,
        existing: String,
        new: String,
    },
}

/// Handle on a store root. Keeps the catalog in memory and appends through
/// to `catalog.jsonl`.
#[derive(Debug)]
pub struct PartStore {
    root: PathBuf,
    entries: Vec<CatalogEntry>,
    by_key: BTreeMap<(String, u64), usize>,
}

impl PartStore {
    /// Opens (or initializes) a store at `root`, loading the catalog.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join("parts"))?;
        fs::create_dir_all(root.join("previews"))?;
        let mut store = PartStore {
            root,
            entries: Vec::new(),
            by_key: BTreeMap::new(),
        };
        let catalog = store.catalog_path();
        if catalog.exists() {
            let reader = BufReader::new(fs::File::open(&catalog)?);
            for (idx, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: CatalogEntry = serde_json::from_str(&line)
                    .map_err(|source| StoreError::CatalogCorrupt {
                        line: idx + 1,
                        source,
                    })?;
                store.index(entry);
            }
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn catalog_path(&self) -> PathBuf {
        self.root.join("catalog.jsonl")
    }

    pub fn mesh_path(&self, digest: &ContentDigest) -> PathBuf {
        self.root.join("parts").join(format!("{}.mesh", digest))
    }

    pub fn previews_dir(&self) -> PathBuf {
        self.root.join("previews")
    }

    /// Catalog entries in ingestion order.
    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    /// Entries sorted by (simulation_id, part_id) for stable queries.
    pub fn entries_sorted(&self) -> Vec<&CatalogEntry> {
        let mut refs: Vec<&CatalogEntry> = self.entries.iter().collect();
        refs.sort_by(|a, b| {
            (a.simulation_id.as_str(), a.part_id).cmp(&(b.simulation_id.as_str(), b.part_id))
        });
        refs
    }

    fn index(&mut self, entry: CatalogEntry) {
        let key = (entry.simulation_id.clone(), entry.part_id);
        self.by_key.insert(key, self.entries.len());
        self.entries.push(entry);
    }

    /// Stores one part instance.
    ///
    /// The mesh file is written only if its digest is new; the catalog row
    /// is appended only if (simulation_id, part_id) is new. Re-ingesting an
    /// identical triple is a no-op returning the existing entry;
    /// re-ingesting the same (simulation, part) with different content is a
    /// conflict.
    pub fn ingest(
        &mut self,
        part: &PartMesh,
        metadata: &PartMetadata,
        simulation_id: &str,
        part_name: Option<String>,
    ) -> Result<&CatalogEntry, StoreError> {
        let content = checksum(part);
        if metadata.digest != content {
            return Err(StoreError::DigestMismatch {
                part_id: part.part_id,
                metadata: metadata.digest.as_hex().to_string(),
                content: content.as_hex().to_string(),
            });
        }
        let key = (simulation_id.to_string(), part.part_id);
        if let Some(&idx) = self.by_key.get(&key) {
            let existing = &self.entries[idx];
            if existing.digest == content {
                return Ok(&self.entries[idx]);
            }
            return Err(StoreError::Conflict {
                simulation_id: simulation_id.to_string(),
                part_id: part.part_id,
                existing: existing.digest.as_hex().to_string(),
                new: content.as_hex().to_string(),
            });
        }

        let mesh_path = self.mesh_path(&content);
        if !mesh_path.exists() {
            write_atomic(&mesh_path, &canonicalize(part))?;
        }

        let entry = CatalogEntry {
            digest: content,
            part_id: part.part_id,
            part_name,
            source_model: part.source_model.clone(),
            simulation_id: simulation_id.to_string(),
            metadata: metadata.clone(),
            preview_paths: None,
        };
        let mut line = serde_json::to_string(&entry)?;
        line.push('\n');
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.catalog_path())?;
        file.write_all(line.as_bytes())?;
        self.index(entry);
        Ok(self.entries.last().unwrap())
    }

    /// Records preview files for every catalogued instance of a digest.
    /// Kept in memory and rewritten into the catalog on the next full
    /// rewrite; previews are derivable, so the jsonl is not rewritten here.
    pub fn attach_previews(&mut self, digest: &ContentDigest, paths: Vec<String>) {
        for entry in &mut self.entries {
            if &entry.digest == digest {
                entry.preview_paths = Some(paths.clone());
            }
        }
    }

    /// Keys of part groups carrying more than one distinct content digest
    /// across the (optionally filtered) simulations. Only these parts vary
    /// and are worth mining; parts identical everywhere cannot explain
    /// result differences.
    ///
    /// `key_fn` maps an entry to its part group (the raw part id, or a part
    /// cluster id once clustering has run).
    pub fn modified_parts<K, F>(
        &self,
        simulations: Option<&BTreeSet<String>>,
        key_fn: F,
    ) -> BTreeSet<K>
    where
        K: Ord,
        F: Fn(&CatalogEntry) -> K,
    {
        let mut digests: BTreeMap<K, BTreeSet<&str>> = BTreeMap::new();
        for entry in &self.entries {
            if let Some(sims) = simulations {
                if !sims.contains(&entry.simulation_id) {
                    continue;
                }
            }
            digests
                .entry(key_fn(entry))
                .or_default()
                .insert(entry.digest.as_hex());
        }
        digests
            .into_iter()
            .filter(|(_, set)| set.len() > 1)
            .map(|(k, _)| k)
            .collect()
    }

    /// Raw part ids with more than one distinct digest.
    pub fn modified_part_ids(&self, simulations: Option<&BTreeSet<String>>) -> BTreeSet<u64> {
        self.modified_parts(simulations, |e| e.part_id)
    }

    /// Instance/content counts over the whole catalog.
    pub fn dedup_stats(&self) -> DedupStats {
        let total = self.entries.len();
        let distinct: BTreeSet<&str> = self.entries.iter().map(|e| e.digest.as_hex()).collect();
        let distinct = distinct.len();
        let reduction_ratio = if total == 0 {
            0.0
        } else {
            1.0 - distinct as f64 / total as f64
        };
        DedupStats {
            total_instances: total,
            distinct_digests: distinct,
            reduction_ratio,
        }
    }

    /// Number of mesh files on disk; equals distinct digest count.
    pub fn mesh_file_count(&self) -> Result<usize, StoreError> {
        let mut count = 0;
        for entry in fs::read_dir(self.root.join("parts"))? {
            let entry = entry?;
            if entry.path().extension().is_some_and(|e| e == "mesh") {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Distinct simulation ids in the catalog, ascending.
    pub fn simulation_ids(&self) -> BTreeSet<String> {
        self.entries
            .iter()
            .map(|e| e.simulation_id.clone())
            .collect()
    }
}

/// Writes `bytes` to `path` via a temp file + rename in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().unwrap_or_default().to_string_lossy()
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}
