//! Generators and independent reference models for the test suites.

pub mod ast;
pub mod calib;
pub mod data;
pub mod listings;
pub mod sqlgen;

use ssql_core::catalog::ResultRelation;

/// Rows of `rel` as sorted debug strings, for multiset comparison.
pub fn canonical_rows(rel: &ResultRelation) -> Vec<String> {
    let mut rows: Vec<String> = rel.rows.iter().map(|r| format!("{r:?}")).collect();
    rows.sort();
    rows
}
