//! Building blocks for mining SEC 10-K filings for keyword-based disclosures.
//!
//! The pipeline runs in stages, each of which lives in its own module:
//!
//! - [`filing`]: filing identity and raw document types shared by every stage.
//! - [`parser`]: markup normalization and segmentation into standard Items
//!   (Item 1 "Business", Item 1A "Risk Factors", ...).
//! - [`extraction`]: keyword sets, sentence splitting, per-filing scanning and
//!   seeded sampling for manual precision review.
//! - [`analytics`]: per-year and per-industry disclosure statistics, growth
//!   multipliers and the precision lower bound.
//! - [`annotation`]: the manual labelling framework, sample groups and
//!   inter-annotator agreement.
//! - [`store`] and [`export`]: the single-file record store and the
//!   spreadsheet-compatible exports.
//! - [`query`]: filtering and paginated search shared by the CLI and the HTTP
//!   service.

pub mod analytics;
pub mod annotation;
pub mod export;
pub mod extraction;
pub mod filing;
mod offsets;
pub mod parser;
#[cfg(feature = "store")]
pub mod query;
#[cfg(feature = "store")]
pub mod store;

pub use filing::{AccessionNumber, ContentKind, FilingRef, FilingRefError, ItemId, RawFiling};
pub use parser::{FilingSection, ParseError, ParsedFiling};
