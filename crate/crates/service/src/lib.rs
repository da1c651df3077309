//! HTTP/JSON front end for CAM exploration.
//!
//! Every data endpoint lives under `/api`. Per-class CAM matrices are built
//! once when the state is created; drill-down sessions re-slice them without
//! touching the network again. Anything outside `/api` is served from the
//! optional UI directory.

mod error;
mod routes;
mod state;

use std::future::Future;
use std::io;
use std::path::PathBuf;

use axum::Router;
use tokio::net::TcpListener;
use tower_http::services::{ServeDir, ServeFile};

pub use error::{ApiError, ApiResult, ErrorBody};
pub use routes::{ClassInfo, SessionState};
pub use state::{AppState, Loaded};

pub fn app(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let router = Router::new().nest("/api", routes::api_router());
    let router = match ui_dir {
        Some(dir) => {
            let index = ServeFile::new(dir.join("index.html"));
            router.fallback_service(ServeDir::new(dir).not_found_service(index))
        }
        None => router.fallback(|| async { ApiError::not_found() }),
    };
    router.with_state(state)
}

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn serve(
    listener: TcpListener,
    router: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    if let Ok(addr) = listener.local_addr() {
        tracing::info!(%addr, "listening");
    }
    axum::serve(listener, router).with_graceful_shutdown(shutdown).await
}
