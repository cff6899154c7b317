//! Blind evaluation sessions over pairs of real and generated headlines.
//!
//! Each task shows an article with its two titles in a per-session random
//! order. Which title is which stays in the store; the API only ever speaks
//! of positions 0 and 1 until scores are exported.

mod api;
mod error;
pub mod store;

use std::sync::Arc;

pub use api::{router, INSTRUCTIONS};
pub use error::ServiceError;
pub use store::{ExportRow, Store, StudyConfig, StudyDocument, DEFAULT_BATCH_SIZE};

/// Serves on an already bound listener until the process is stopped.
pub async fn serve(listener: tokio::net::TcpListener, store: Store) -> std::io::Result<()> {
    axum::serve(listener, router(Arc::new(store))).await
}
