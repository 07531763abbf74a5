//! Hybrid relational + semantic query engine.

pub mod calibration;
pub mod catalog;
pub mod embedding;
pub mod engine;
pub mod eval;
pub mod fixture;
pub mod index;
pub mod parser;

/// Integer image identifier shared by the catalog, embedding files and index.
pub type ImageId = i64;
