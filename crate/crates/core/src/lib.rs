//! Extractive headline generation by title decomposition.
//!
//! Titles are decomposed into spans of their own document text
//! ([`decompose`]), turned into sequential question-answer training samples
//! ([`dataset`]), and regenerated span by span through a pluggable answerer
//! ([`generate`]). [`dictionary`] measures how far a small external word
//! list widens decomposability, and [`stats`] analyses blind human scores.

pub mod corpus;
pub mod dataset;
pub mod decompose;
pub mod dictionary;
pub mod exec;
pub mod generate;
pub mod segment;
pub mod stats;

pub use corpus::Document;
pub use exec::Execution;
