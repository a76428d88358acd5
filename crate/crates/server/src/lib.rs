//! Hosted sessions for human play: sealed order submission behind a reveal
//! barrier, per-seat fog-of-war views, facilitator dice overrides and shock
//! injection, and a newline-delimited JSON push channel per seat.

pub mod api;
pub mod error;
pub mod session;
pub mod transcript;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

pub use api::{router, AppState};
pub use error::SessionError;
pub use session::{CreateSession, FacilitatorOverride, Phase, Role, SeatView, Session};
pub use transcript::{Transcript, TranscriptError, TranscriptTurn};

/// Serves the session API until the process is stopped.
pub async fn serve(addr: SocketAddr, data_dir: Option<PathBuf>) -> std::io::Result<()> {
    if let Some(dir) = &data_dir {
        std::fs::create_dir_all(dir)?;
    }
    let state = AppState::new(data_dir);
    api::spawn_deadline_ticker(state.clone(), Duration::from_millis(250));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
