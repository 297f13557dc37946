//! Batch toolkit for mining crash-simulation geometry.
//!
//! Raw whole-vehicle FE input decks go in; out come per-part geometric
//! meta data, a content-addressed deduplicated part catalog, part/variant
//! clusters, and the mined relationships between part-shape variation and
//! crash intrusions (chi-squared attribute ranking, result-class
//! clustering, decision-tree induction) as figures and a report.
//!
//! Modules follow the processing order:
//!
//! - [`deck`]: parse and validate input decks
//! - [`disasm`]: split decks into per-part sub-meshes, canonical bytes, MD5
//! - [`geometry`]: mesh-independent per-part meta data
//! - [`store`]: content-addressed persistent part catalog
//! - [`cluster`]: part identification and variant grouping in meta-data
//!   space, similarity measure
//! - [`mining`]: the per-simulation table, k-means result classes,
//!   chi-squared ranking, decision trees
//! - [`report`]: SVG figures and the report document
//! - [`pipeline`]: end-to-end orchestration
//! - [`config`]: pipeline parameters and the config file format

pub mod cluster;
pub mod config;
pub mod deck;
pub mod diag;
pub mod disasm;
pub mod geometry;
pub mod mining;
pub mod pipeline;
pub mod report;
pub mod store;
