//! Splits a deck into per-part sub-meshes and fingerprints their content.
//!
//! All elements sharing a part number, together with the nodes they
//! reference and the part's material, form one [`PartMesh`]. Each part is
//! serialized to a canonical byte sequence ([`canonicalize`]) whose MD5
//! digest ([`checksum`]) identifies the exact content: the digest is
//! invariant under reordering of the source deck lines but changes with any
//! coordinate, id, or material difference. Geometric near-duplicates are
//! intentionally not collapsed here; that is the job of meta-data
//! clustering.

use std::collections::BTreeMap;
use std::fmt;

use md5::{Digest as _, Md5};
use serde::{Deserialize, Serialize};

use crate::deck::{Element, InputDeck, Material, Node};

/// The sub-mesh of one part: its elements, the nodes they reference, and
/// the part material (absent only for parts without surface elements).
#[derive(Debug, Clone, PartialEq)]
pub struct PartMesh {
    pub part_id: u64,
    pub source_model: String,
    pub nodes: BTreeMap<u64, Node>,
    pub elements: BTreeMap<u64, Element>,
    pub material: Option<Material>,
}

impl PartMesh {
    /// True when the part has at least one shell or membrane element.
    pub fn has_surface_elements(&self) -> bool {
        self.elements.values().any(|e| e.kind.is_surface())
    }
}

/// Lowercase 32-character hex MD5 digest of a part's canonical bytes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContentDigest(String);

impl ContentDigest {
    /// Wraps an existing digest string, validating shape.
    pub fn from_hex(hex: impl Into<String>) -> Result<Self, DisasmError> {
        let hex = hex.into();
        let ok = hex.len() == 32
            && hex
                .bytes()
                .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        if ok {
            Ok(ContentDigest(hex))
        } else {
            Err(DisasmError::BadDigest { digest: hex })
        }
    }

    pub fn as_hex(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ContentDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DisasmError {
    #[error("part {part_id} has surface elements but no material record")]
    MissingMaterial { part_id: u64 },
    #[error("'{digest}' is not a lowercase 32-char hex MD5 digest")]
    BadDigest { digest: String },
}

/// Extracts one [`PartMesh`] per distinct part id, sorted by part id.
///
/// Every element of the deck lands in exactly one part mesh; nodes shared
/// between parts are duplicated into each. Parts owning shell or membrane
/// elements must have a material.
pub fn disassemble(deck: &InputDeck) -> Result<Vec<PartMesh>, DisasmError> {
    let mut by_part: BTreeMap<u64, PartMesh> = BTreeMap::new();
    for elem in deck.elements.values() {
        let part = by_part.entry(elem.part_id).or_insert_with(|| PartMesh {
            part_id: elem.part_id,
            source_model: deck.name.clone(),
            nodes: BTreeMap::new(),
            elements: BTreeMap::new(),
            material: deck.materials.get(&elem.part_id).copied(),
        });
        for &nid in &elem.node_ids {
            if let Some(node) = deck.nodes.get(&nid) {
                part.nodes.insert(nid, *node);
            }
        }
        part.elements.insert(elem.id, elem.clone());
    }
    for part in by_part.values() {
        if part.has_surface_elements() && part.material.is_none() {
            return Err(DisasmError::MissingMaterial {
                part_id: part.part_id,
            });
        }
    }
    Ok(by_part.into_values().collect())
}

/// Renders a real as the shortest decimal with at most 9 significant
/// digits. Used for all reals in canonical part bytes so that the bytes are
/// platform-independent.
pub fn canonical_real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    // Round to 9 significant digits, then let the shortest-round-trip
    // formatter of the rounded value pick the minimal digit string.
    let rounded: f64 = format!("{:.8e}", x).parse().unwrap();
    format!("{}", rounded)
}

/// Serializes a part to its canonical byte sequence.
///
/// Layout, with `\n` separators and no trailing whitespace:
///
/// ```text
/// PART <part_id>
/// MATER <thickness> <density>          # omitted if the part has none
/// N <id> <x> <y> <z>                   # nodes sorted by id
/// E <kind> <id> <n1> <n2> ...          # elements sorted by id
/// ```
///
/// Reals use [`canonical_real`]. Two parts equal up to insertion order
/// produce identical bytes; any content difference produces different
/// bytes.
pub fn canonicalize(part: &PartMesh) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(&format!("PART {}\n", part.part_id));
    if let Some(mat) = &part.material {
        out.push_str(&format!(
            "MATER {} {}\n",
            canonical_real(mat.thickness),
            canonical_real(mat.density)
        ));
    }
    for node in part.nodes.values() {
        out.push_str(&format!(
            "N {} {} {} {}\n",
            node.id,
            canonical_real(node.x),
            canonical_real(node.y),
            canonical_real(node.z)
        ));
    }
    for elem in part.elements.values() {
        out.push_str(&format!("E {} {}", elem.kind, elem.id));
        for nid in &elem.node_ids {
            out.push_str(&format!(" {}", nid));
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// MD5 digest of [`canonicalize`]\(part\), lowercase hex.
pub fn checksum(part: &PartMesh) -> ContentDigest {
    digest_bytes(&canonicalize(part))
}

/// MD5 digest of arbitrary bytes, lowercase hex.
pub fn digest_bytes(bytes: &[u8]) -> ContentDigest {
    let mut hasher = Md5::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    let mut hex = String::with_capacity(32);
    for b in out {
        hex.push_str(&format!("{:02x}", b));
    }
    ContentDigest(hex)
}
