//! Incomplete `2^K` contingency tables: patterns, counts, proportions, margins.

mod marginal;
mod pattern;
mod probs;
mod products;
mod table;

pub use marginal::{marginal_probs, marginalize, validate_subset, MarginalView};
pub use pattern::{observed_cells, InclusionPattern, MAX_LISTS};
pub use probs::{observed_proportions, smoothed_proportions, CellProbs};
pub use products::{log_odd_even, odd_even_products, odd_even_ratio};
pub use table::{load_table, load_table_json, load_table_path, CellJson, ObservedTable, TableJson};
