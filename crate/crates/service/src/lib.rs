//! Render service: one live session holding a volume, its partitioned
//! distance maps and the current transfer function, exposed over HTTP and
//! a request/response WebSocket.

mod api;
mod session;

pub use api::{router, AppState, FrameParams, TfResponse, VolumeRequest, MAX_VIEWPORT};
pub use session::{FrameRequest, FrameResult, Session, SessionConfig, TfState, UpdateTimings};

use tokio::net::TcpListener;

/// Serves the API on an already bound listener until the task is dropped.
pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
