//! Diagnostics shared by the deck parser and validator.
//!
//! Decks are large and produced by other tools, so nothing in this crate
//! fails on the first problem: every check collects all violations into a
//! list of [`Diagnostic`]s and reports them in one pass.

use std::fmt;

/// How serious a diagnostic is. `Error` sorts before `Warning`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
        }
    }
}

/// Stable machine-readable diagnostic codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagCode {
    MalformedRecord,
    MalformedNumber,
    NonPositiveId,
    NonFiniteCoord,
    NonPositiveMaterial,
    LineTooLong,
    UnknownKeyword,
    EmptyDeck,
    DuplicateNode,
    DuplicateElement,
    DuplicateMaterial,
    DanglingNodeRef,
    DegenerateElement,
    MissingMaterial,
}

impl DiagCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiagCode::MalformedRecord => "MALFORMED_RECORD",
            DiagCode::MalformedNumber => "MALFORMED_NUMBER",
            DiagCode::NonPositiveId => "NONPOSITIVE_ID",
            DiagCode::NonFiniteCoord => "NONFINITE_COORD",
            DiagCode::NonPositiveMaterial => "NONPOSITIVE_MATERIAL",
            DiagCode::LineTooLong => "LINE_TOO_LONG",
            DiagCode::UnknownKeyword => "UNKNOWN_KEYWORD",
            DiagCode::EmptyDeck => "EMPTY_DECK",
            DiagCode::DuplicateNode => "DUPLICATE_NODE",
            DiagCode::DuplicateElement => "DUPLICATE_ELEMENT",
            DiagCode::DuplicateMaterial => "DUPLICATE_MATERIAL",
            DiagCode::DanglingNodeRef => "DANGLING_NODE_REF",
            DiagCode::DegenerateElement => "DEGENERATE_ELEMENT",
            DiagCode::MissingMaterial => "MISSING_MATERIAL",
        }
    }
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Source position of a diagnostic. Line and column are 1-based; 0 means
/// "not tied to a source line" (validation of an in-memory deck).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl Location {
    pub fn new(line: usize, column: usize) -> Self {
        Location { line, column }
    }

    pub const NONE: Location = Location { line: 0, column: 0 };
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "-")
        } else {
            write!(f, "{}:{}", self.line, self.column)
        }
    }
}

/// One finding: severity, stable code, human message, source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagCode,
    pub message: String,
    pub location: Location,
}

impl Diagnostic {
    pub fn error(code: DiagCode, message: impl Into<String>, location: Location) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            location,
        }
    }

    pub fn warning(code: DiagCode, message: impl Into<String>, location: Location) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            code,
            message: message.into(),
            location,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {} ({})",
            self.severity, self.code, self.message, self.location
        )
    }
}

/// Sorts diagnostics into the deterministic report order:
/// errors first, then by source position, code, and message.
pub fn sort_report(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        (a.severity, a.location, a.code, a.message.as_str()).cmp(&(
            b.severity,
            b.location,
            b.code,
            b.message.as_str(),
        ))
    });
}
