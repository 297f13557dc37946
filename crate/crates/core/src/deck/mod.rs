//! Whole-vehicle FE input decks: domain types, text parser, validator.
//!
//! A deck is a line-oriented text file of keyword records describing the
//! finite-element model of one vehicle: `NODE` lines carry the geometry,
//! element lines (`SHELL`, `MEMBR`, `SOLID`, `BEAM`, `BAR`) reference nodes
//! and carry the part number, and `MATER` lines define a homogeneous
//! thickness and density per part. Lines starting with `$` or `#` are
//! comments.
//!
//! Record grammar (whitespace-separated fields, one record per line):
//!
//! ```text
//! NODE  <id> <x> <y> <z>
//! SHELL <id> <part> <n1> <n2> <n3> <n4>    # n4 = 0 or n4 = n3 -> triangle
//! MEMBR <id> <part> <n1> <n2> <n3> <n4>
//! SOLID <id> <part> <n1> .. <n8>
//! BEAM  <id> <part> <n1> <n2>
//! BAR   <id> <part> <n1> <n2> <n3>
//! MATER <part> <thickness> <density>
//! ```
//!
//! Numbers are accepted in integer, fixed, and exponent notation. Lines are
//! limited to [`MAX_LINE_LEN`] bytes.

mod parse;
mod validate;

pub use parse::{parse_deck, parse_deck_str, ParsedDeck};
pub use validate::{validate_deck, ValidationReport};

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use crate::diag::Diagnostic;

/// Maximum accepted deck line length in bytes.
pub const MAX_LINE_LEN: usize = 4096;

/// One grid point of the FE model, in millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Node {
    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Element topology. The node count is fixed per kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementKind {
    Shell3,
    Shell4,
    Membrane4,
    Solid8,
    Beam2,
    Bar3,
}

impl ElementKind {
    /// Number of nodes an element of this kind references.
    pub fn node_count(&self) -> usize {
        match self {
            ElementKind::Shell3 => 3,
            ElementKind::Shell4 => 4,
            ElementKind::Membrane4 => 4,
            ElementKind::Solid8 => 8,
            ElementKind::Beam2 => 2,
            ElementKind::Bar3 => 3,
        }
    }

    /// Shells and membranes carry the part surface and therefore mass.
    pub fn is_surface(&self) -> bool {
        matches!(
            self,
            ElementKind::Shell3 | ElementKind::Shell4 | ElementKind::Membrane4
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ElementKind::Shell3 => "shell3",
            ElementKind::Shell4 => "shell4",
            ElementKind::Membrane4 => "membrane4",
            ElementKind::Solid8 => "solid8",
            ElementKind::Beam2 => "beam2",
            ElementKind::Bar3 => "bar3",
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One finite element: its kind, owning part, and node references.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub id: u64,
    pub kind: ElementKind,
    pub part_id: u64,
    pub node_ids: Vec<u64>,
}

/// Homogeneous shell material of one part: thickness (mm) and
/// density (mass/mm^3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub part_id: u64,
    pub thickness: f64,
    pub density: f64,
}

/// A parsed whole-vehicle model: nodes, elements, and materials, keyed by id.
///
/// A deck returned by [`parse_deck`] satisfies referential integrity (every
/// element node id resolves) and has a material for every part that owns
/// shell or membrane elements. Decks are immutable after construction and
/// safe to share across threads read-only.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InputDeck {
    pub name: String,
    pub nodes: BTreeMap<u64, Node>,
    pub elements: BTreeMap<u64, Element>,
    pub materials: BTreeMap<u64, Material>,
}

impl InputDeck {
    pub fn new(name: impl Into<String>) -> Self {
        InputDeck {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Distinct part ids appearing on elements, ascending.
    pub fn part_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.elements.values().map(|e| e.part_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Serializes the deck back to record text in the grammar accepted by
    /// [`parse_deck`]. Re-parsing the output yields an equal deck.
    pub fn to_deck_text(&self) -> String {
        let mut out = String::new();
        for node in self.nodes.values() {
            out.push_str(&format!(
                "NODE {} {} {} {}\n",
                node.id, node.x, node.y, node.z
            ));
        }
        for elem in self.elements.values() {
            let keyword = match elem.kind {
                ElementKind::Shell3 | ElementKind::Shell4 => "SHELL",
                ElementKind::Membrane4 => "MEMBR",
                ElementKind::Solid8 => "SOLID",
                ElementKind::Beam2 => "BEAM",
                ElementKind::Bar3 => "BAR",
            };
            out.push_str(&format!("{} {} {}", keyword, elem.id, elem.part_id));
            for nid in &elem.node_ids {
                out.push_str(&format!(" {}", nid));
            }
            // Triangles are written in the quad record shape with a zero
            // fourth node, which parses back to shell3.
            if elem.kind == ElementKind::Shell3 {
                out.push_str(" 0");
            }
            out.push('\n');
        }
        for mat in self.materials.values() {
            out.push_str(&format!(
                "MATER {} {} {}\n",
                mat.part_id, mat.thickness, mat.density
            ));
        }
        out
    }

    /// Writes the deck text to `w`.
    pub fn write_deck<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_deck_text().as_bytes())
    }
}

/// Errors from [`parse_deck`].
#[derive(Debug, thiserror::Error)]
pub enum DeckError {
    #[error("i/o error reading deck: {0}")]
    Io(#[from] std::io::Error),
    /// The deck text had structural or syntactic violations. All collected
    /// diagnostics (errors and warnings) are attached.
    #[error("deck '{name}' rejected with {} error(s)", count_errors(diagnostics))]
    Invalid {
        name: String,
        diagnostics: Vec<Diagnostic>,
    },
}

fn count_errors(diags: &[Diagnostic]) -> usize {
    diags
        .iter()
        .filter(|d| d.severity == crate::diag::Severity::Error)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_deck() -> InputDeck {
        parse_deck_str(
            "NODE 1 0 0 0\nNODE 2 1 0 0\nNODE 3 1 1 0\nNODE 4 0 1 0\n\
             SHELL 1 11 1 2 3 4\nMATER 11 2.0 7.8e-9\n",
            "minimal",
        )
        .unwrap()
        .deck
    }

    #[test]
    fn deck_text_round_trips() {
        let deck = minimal_deck();
        let text = deck.to_deck_text();
        let reparsed = parse_deck_str(&text, "minimal").unwrap().deck;
        assert_eq!(deck, reparsed);
    }

    #[test]
    fn triangle_round_trips_through_quad_record() {
        let parsed = parse_deck_str(
            "NODE 1 0 0 0\nNODE 2 1 0 0\nNODE 3 0 1 0\n\
             SHELL 5 7 1 2 3 0\nMATER 7 1.0 1.0\n",
            "tri",
        )
        .unwrap();
        let elem = &parsed.deck.elements[&5];
        assert_eq!(elem.kind, ElementKind::Shell3);
        assert_eq!(elem.node_ids, vec![1, 2, 3]);
        let reparsed = parse_deck_str(&parsed.deck.to_deck_text(), "tri").unwrap();
        assert_eq!(parsed.deck, reparsed.deck);
    }

    #[test]
    fn part_ids_are_sorted_and_distinct() {
        let parsed = parse_deck_str(
            "NODE 1 0 0 0\nNODE 2 1 0 0\nNODE 3 1 1 0\nNODE 4 0 1 0\n\
             SHELL 1 12 1 2 3 4\nSHELL 2 11 1 2 3 4\nSHELL 3 11 2 3 4 1\n\
             MATER 11 1 1\nMATER 12 1 1\n",
            "d",
        )
        .unwrap();
        assert_eq!(parsed.deck.part_ids(), vec![11, 12]);
    }
}
