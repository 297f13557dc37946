//! Structural validation of an in-memory [`InputDeck`].

use super::InputDeck;
use crate::diag::{sort_report, DiagCode, Diagnostic, Location};

/// Deterministic list of violations, ordered by (severity, location).
pub type ValidationReport = Vec<Diagnostic>;

/// Diagnoses every invariant violation of `deck` without failing.
///
/// The report is empty exactly when the deck is well-formed: all element
/// node references resolve, no element repeats a node, ids and material
/// values are positive and finite, and every part owning shell or membrane
/// elements has a material.
pub fn validate_deck(deck: &InputDeck) -> ValidationReport {
    let mut report = structural_diagnostics(deck);
    report.extend(field_diagnostics(deck));
    sort_report(&mut report);
    report
}

/// Cross-record checks shared with the parser's final pass. Membership
/// goes through hash sets so a full-vehicle deck validates in linear time.
pub(super) fn structural_diagnostics(deck: &InputDeck) -> Vec<Diagnostic> {
    let node_ids: std::collections::HashSet<u64> = deck.nodes.keys().copied().collect();
    let material_parts: std::collections::HashSet<u64> =
        deck.materials.keys().copied().collect();
    let mut missing_material_parts = std::collections::BTreeSet::new();
    let mut diags = Vec::new();
    for elem in deck.elements.values() {
        for &nid in &elem.node_ids {
            if !node_ids.contains(&nid) {
                diags.push(Diagnostic::error(
                    DiagCode::DanglingNodeRef,
                    format!("element {} references missing node {}", elem.id, nid),
                    Location::NONE,
                ));
            }
        }
        if elem.kind.is_surface() && !material_parts.contains(&elem.part_id) {
            missing_material_parts.insert(elem.part_id);
        }
    }
    // One diagnostic per part, not per element.
    for part_id in missing_material_parts {
        diags.push(Diagnostic::error(
            DiagCode::MissingMaterial,
            format!("part {} has surface elements but no material", part_id),
            Location::NONE,
        ));
    }
    diags
}

/// Per-record checks that the parser enforces at read time but which a
/// hand-built deck may violate.
fn field_diagnostics(deck: &InputDeck) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for node in deck.nodes.values() {
        if !(node.x.is_finite() && node.y.is_finite() && node.z.is_finite()) {
            diags.push(Diagnostic::error(
                DiagCode::NonFiniteCoord,
                format!("node {} has non-finite coordinates", node.id),
                Location::NONE,
            ));
        }
    }
    for elem in deck.elements.values() {
        let mut sorted = elem.node_ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != elem.node_ids.len() {
            diags.push(Diagnostic::error(
                DiagCode::DegenerateElement,
                format!("element {} repeats a node id", elem.id),
                Location::NONE,
            ));
        }
        if elem.node_ids.len() != elem.kind.node_count() {
            diags.push(Diagnostic::error(
                DiagCode::MalformedRecord,
                format!(
                    "element {} has {} nodes, kind {} requires {}",
                    elem.id,
                    elem.node_ids.len(),
                    elem.kind,
                    elem.kind.node_count()
                ),
                Location::NONE,
            ));
        }
        if elem.part_id == 0 {
            diags.push(Diagnostic::error(
                DiagCode::NonPositiveId,
                format!("element {} has part id 0", elem.id),
                Location::NONE,
            ));
        }
    }
    for mat in deck.materials.values() {
        let ok = mat.thickness.is_finite()
            && mat.density.is_finite()
            && mat.thickness > 0.0
            && mat.density > 0.0;
        if !ok {
            diags.push(Diagnostic::error(
                DiagCode::NonPositiveMaterial,
                format!(
                    "material for part {} must have finite positive thickness and density",
                    mat.part_id
                ),
                Location::NONE,
            ));
        }
    }
    diags
}
