//! Line-oriented deck parser.
//!
//! Parsing never stops at the first problem: syntax errors are recorded per
//! line, structural checks (duplicate ids, dangling references, missing
//! materials) run after the full pass, and all violations come back in one
//! [`DeckError::Invalid`]. A successful parse still carries warnings (unknown
//! keywords, empty input).

use std::io::BufRead;

use super::{DeckError, Element, ElementKind, InputDeck, Material, Node, MAX_LINE_LEN};
use crate::diag::{sort_report, DiagCode, Diagnostic, Location};

/// Result of a successful parse: the deck plus non-fatal warnings.
#[derive(Debug)]
pub struct ParsedDeck {
    pub deck: InputDeck,
    pub warnings: Vec<Diagnostic>,
}

/// Parses deck text from a reader. Same contract as [`parse_deck_str`].
pub fn parse_deck<R: BufRead>(reader: R, name: &str) -> Result<ParsedDeck, DeckError> {
    let mut text = String::new();
    let mut r = reader;
    r.read_to_string(&mut text)?;
    parse_deck_str(&text, name)
}

/// Parses deck text into an [`InputDeck`].
///
/// Returns `Err(DeckError::Invalid)` carrying every collected diagnostic if
/// any line is malformed or the deck violates structural invariants
/// (duplicate ids, dangling node references, surface parts without a
/// material). The parse is pure: identical bytes yield an identical deck.
pub fn parse_deck_str(text: &str, name: &str) -> Result<ParsedDeck, DeckError> {
    let mut parser = Parser::new(name);
    for (idx, line) in text.lines().enumerate() {
        parser.line(idx + 1, line);
    }
    parser.finish()
}

/// Records accumulate in vectors and become id-keyed maps in one sorted
/// bulk build at the end; per-record map inserts would drag a log factor
/// into every line of a million-line deck.
struct Parser {
    name: String,
    nodes: Vec<(Node, Location)>,
    elements: Vec<(Element, Location)>,
    materials: Vec<(Material, Location)>,
    diags: Vec<Diagnostic>,
    records_seen: usize,
    unknown_keywords: usize,
}

impl Parser {
    fn new(name: &str) -> Self {
        Parser {
            name: name.to_string(),
            nodes: Vec::new(),
            elements: Vec::new(),
            materials: Vec::new(),
            diags: Vec::new(),
            records_seen: 0,
            unknown_keywords: 0,
        }
    }

    fn line(&mut self, line_no: usize, line: &str) {
        if line.len() > MAX_LINE_LEN {
            self.diags.push(Diagnostic::error(
                DiagCode::LineTooLong,
                format!("line exceeds {} bytes", MAX_LINE_LEN),
                Location::new(line_no, 1),
            ));
            return;
        }
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('$') || trimmed.starts_with('#') {
            return;
        }
        self.records_seen += 1;

        let fields = Fields::split(line);
        let keyword = fields.text(0);
        match keyword {
            "NODE" => self.node_record(line_no, &fields),
            "SHELL" => self.shell_record(line_no, &fields),
            "MEMBR" => self.element_record(line_no, &fields, ElementKind::Membrane4),
            "SOLID" => self.element_record(line_no, &fields, ElementKind::Solid8),
            "BEAM" => self.element_record(line_no, &fields, ElementKind::Beam2),
            "BAR" => self.element_record(line_no, &fields, ElementKind::Bar3),
            "MATER" => self.material_record(line_no, &fields),
            other => {
                self.unknown_keywords += 1;
                self.diags.push(Diagnostic::warning(
                    DiagCode::UnknownKeyword,
                    format!("unknown record keyword '{}' skipped", other),
                    Location::new(line_no, fields.column(0)),
                ));
            }
        }
    }

    fn node_record(&mut self, line_no: usize, fields: &Fields<'_>) {
        if !self.check_arity(line_no, fields, 5, "NODE <id> <x> <y> <z>") {
            return;
        }
        let Some(id) = self.positive_id(line_no, fields, 1, "node id") else {
            return;
        };
        let mut coords = [0.0_f64; 3];
        for (i, c) in coords.iter_mut().enumerate() {
            match self.finite_real(line_no, fields, 2 + i, "coordinate") {
                Some(v) => *c = v,
                None => return,
            }
        }
        let node = Node {
            id,
            x: coords[0],
            y: coords[1],
            z: coords[2],
        };
        self.nodes
            .push((node, Location::new(line_no, fields.column(1))));
    }

    fn shell_record(&mut self, line_no: usize, fields: &Fields<'_>) {
        if !self.check_arity(line_no, fields, 7, "SHELL <id> <part> <n1> <n2> <n3> <n4>") {
            return;
        }
        let header = self.element_header(line_no, fields);
        let Some((id, part_id)) = header else { return };
        let mut nodes = Vec::with_capacity(4);
        for i in 0..4 {
            // The fourth node of a SHELL may be 0, marking a triangle.
            let allow_zero = i == 3;
            match self.node_ref(line_no, fields, 3 + i, allow_zero) {
                Some(n) => nodes.push(n),
                None => return,
            }
        }
        let kind = if nodes[3] == 0 || nodes[3] == nodes[2] {
            nodes.truncate(3);
            ElementKind::Shell3
        } else {
            ElementKind::Shell4
        };
        self.push_element(line_no, fields, id, part_id, kind, nodes);
    }

    fn element_record(&mut self, line_no: usize, fields: &Fields<'_>, kind: ElementKind) {
        let n = kind.node_count();
        let usage = match kind {
            ElementKind::Membrane4 => "MEMBR <id> <part> <n1>..<n4>",
            ElementKind::Solid8 => "SOLID <id> <part> <n1>..<n8>",
            ElementKind::Beam2 => "BEAM <id> <part> <n1> <n2>",
            ElementKind::Bar3 => "BAR <id> <part> <n1> <n2> <n3>",
            _ => unreachable!(),
        };
        if !self.check_arity(line_no, fields, 3 + n, usage) {
            return;
        }
        let Some((id, part_id)) = self.element_header(line_no, fields) else {
            return;
        };
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            match self.node_ref(line_no, fields, 3 + i, false) {
                Some(nid) => nodes.push(nid),
                None => return,
            }
        }
        self.push_element(line_no, fields, id, part_id, kind, nodes);
    }

    fn material_record(&mut self, line_no: usize, fields: &Fields<'_>) {
        if !self.check_arity(line_no, fields, 4, "MATER <part> <d> <rho>") {
            return;
        }
        let Some(part_id) = self.positive_id(line_no, fields, 1, "part id") else {
            return;
        };
        let Some(thickness) = self.finite_real(line_no, fields, 2, "thickness") else {
            return;
        };
        let Some(density) = self.finite_real(line_no, fields, 3, "density") else {
            return;
        };
        if thickness <= 0.0 || density <= 0.0 {
            self.diags.push(Diagnostic::error(
                DiagCode::NonPositiveMaterial,
                format!(
                    "material for part {} must have positive thickness and density",
                    part_id
                ),
                Location::new(line_no, fields.column(2)),
            ));
            return;
        }
        let mat = Material {
            part_id,
            thickness,
            density,
        };
        self.materials
            .push((mat, Location::new(line_no, fields.column(1))));
    }

    fn element_header(&mut self, line_no: usize, fields: &Fields<'_>) -> Option<(u64, u64)> {
        let id = self.positive_id(line_no, fields, 1, "element id")?;
        let part_id = self.positive_id(line_no, fields, 2, "part id")?;
        Some((id, part_id))
    }

    fn push_element(
        &mut self,
        line_no: usize,
        fields: &Fields<'_>,
        id: u64,
        part_id: u64,
        kind: ElementKind,
        node_ids: Vec<u64>,
    ) {
        let mut sorted = node_ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != node_ids.len() {
            self.diags.push(Diagnostic::error(
                DiagCode::DegenerateElement,
                format!("element {} repeats a node id", id),
                Location::new(line_no, fields.column(3)),
            ));
            return;
        }
        let elem = Element {
            id,
            kind,
            part_id,
            node_ids,
        };
        self.elements
            .push((elem, Location::new(line_no, fields.column(1))));
    }

    fn check_arity(
        &mut self,
        line_no: usize,
        fields: &Fields<'_>,
        expected: usize,
        usage: &str,
    ) -> bool {
        if fields.len() == expected {
            return true;
        }
        self.diags.push(Diagnostic::error(
            DiagCode::MalformedRecord,
            format!(
                "expected {} fields ({}), found {}",
                expected,
                usage,
                fields.len()
            ),
            Location::new(line_no, fields.column(0)),
        ));
        false
    }

    fn positive_id(
        &mut self,
        line_no: usize,
        fields: &Fields<'_>,
        idx: usize,
        what: &str,
    ) -> Option<u64> {
        let text = fields.text(idx);
        let loc = Location::new(line_no, fields.column(idx));
        match text.parse::<u64>() {
            Ok(0) => {
                self.diags.push(Diagnostic::error(
                    DiagCode::NonPositiveId,
                    format!("{} must be positive, found 0", what),
                    loc,
                ));
                None
            }
            Ok(v) => Some(v),
            Err(_) => {
                self.diags.push(Diagnostic::error(
                    DiagCode::MalformedNumber,
                    format!("{} '{}' is not a positive integer", what, text),
                    loc,
                ));
                None
            }
        }
    }

    fn node_ref(
        &mut self,
        line_no: usize,
        fields: &Fields<'_>,
        idx: usize,
        allow_zero: bool,
    ) -> Option<u64> {
        let text = fields.text(idx);
        let loc = Location::new(line_no, fields.column(idx));
        match text.parse::<u64>() {
            Ok(0) if !allow_zero => {
                self.diags.push(Diagnostic::error(
                    DiagCode::NonPositiveId,
                    "node reference must be positive, found 0".to_string(),
                    loc,
                ));
                None
            }
            Ok(v) => Some(v),
            Err(_) => {
                self.diags.push(Diagnostic::error(
                    DiagCode::MalformedNumber,
                    format!("node reference '{}' is not an integer", text),
                    loc,
                ));
                None
            }
        }
    }

    fn finite_real(
        &mut self,
        line_no: usize,
        fields: &Fields<'_>,
        idx: usize,
        what: &str,
    ) -> Option<f64> {
        let text = fields.text(idx);
        let loc = Location::new(line_no, fields.column(idx));
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            Ok(_) => {
                self.diags.push(Diagnostic::error(
                    DiagCode::NonFiniteCoord,
                    format!("{} '{}' is not finite", what, text),
                    loc,
                ));
                None
            }
            Err(_) => {
                self.diags.push(Diagnostic::error(
                    DiagCode::MalformedNumber,
                    format!("{} '{}' is not a number", what, text),
                    loc,
                ));
                None
            }
        }
    }

    fn finish(mut self) -> Result<ParsedDeck, DeckError> {
        if self.records_seen == 0 {
            self.diags.push(Diagnostic::warning(
                DiagCode::EmptyDeck,
                "empty deck".to_string(),
                Location::NONE,
            ));
        }

        let mut deck = InputDeck::new(&self.name);
        deck.nodes = build_map(
            self.nodes,
            |node| node.id,
            |id, loc, diags| {
                diags.push(Diagnostic::error(
                    DiagCode::DuplicateNode,
                    format!("node id {} defined more than once", id),
                    loc,
                ))
            },
            &mut self.diags,
        );
        deck.elements = build_map(
            self.elements,
            |elem| elem.id,
            |id, loc, diags| {
                diags.push(Diagnostic::error(
                    DiagCode::DuplicateElement,
                    format!("element id {} defined more than once", id),
                    loc,
                ))
            },
            &mut self.diags,
        );
        deck.materials = build_map(
            self.materials,
            |mat| mat.part_id,
            |id, loc, diags| {
                diags.push(Diagnostic::error(
                    DiagCode::DuplicateMaterial,
                    format!("material for part {} defined more than once", id),
                    loc,
                ))
            },
            &mut self.diags,
        );

        // Structural pass: only meaningful over whatever parsed cleanly.
        self.diags
            .extend(super::validate::structural_diagnostics(&deck));
        sort_report(&mut self.diags);

        let has_errors = self
            .diags
            .iter()
            .any(|d| d.severity == crate::diag::Severity::Error);
        if has_errors {
            return Err(DeckError::Invalid {
                name: deck.name,
                diagnostics: self.diags,
            });
        }
        Ok(ParsedDeck {
            deck,
            warnings: self.diags,
        })
    }
}

/// Sorted bulk build keyed by id: the first occurrence of an id wins, every
/// later one is reported through `on_duplicate`. Adaptive sorting keeps
/// this near-linear for the ascending ids real decks carry.
fn build_map<T>(
    mut records: Vec<(T, Location)>,
    key: impl Fn(&T) -> u64,
    on_duplicate: impl Fn(u64, Location, &mut Vec<Diagnostic>),
    diags: &mut Vec<Diagnostic>,
) -> std::collections::BTreeMap<u64, T> {
    records.sort_by_key(|(record, loc)| (key(record), *loc));
    let mut last: Option<u64> = None;
    records
        .into_iter()
        .filter_map(|(record, loc)| {
            let id = key(&record);
            if last == Some(id) {
                on_duplicate(id, loc, diags);
                None
            } else {
                last = Some(id);
                Some((id, record))
            }
        })
        .collect()
}

/// Whitespace-split fields of a line, remembering 1-based byte columns.
struct Fields<'a> {
    fields: Vec<(usize, &'a str)>,
}

impl<'a> Fields<'a> {
    fn split(line: &'a str) -> Self {
        let mut fields = Vec::new();
        let mut offset = 0;
        for piece in line.split_whitespace() {
            // split_whitespace walks left to right, so this find never
            // rescans an earlier field.
            let at = line[offset..].find(piece).unwrap() + offset;
            fields.push((at + 1, piece));
            offset = at + piece.len();
        }
        Fields { fields }
    }

    fn len(&self) -> usize {
        self.fields.len()
    }

    fn text(&self, idx: usize) -> &'a str {
        self.fields.get(idx).map(|(_, t)| *t).unwrap_or("")
    }

    fn column(&self, idx: usize) -> usize {
        self.fields.get(idx).map(|(c, _)| *c).unwrap_or(1)
    }
}
