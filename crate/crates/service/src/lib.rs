//! HTTP review service: humans browse memes, submit labels and compare
//! them against the agents' labels.
//!
//! All endpoints live under `/api` and speak JSON. The caller identifies
//! itself with an `X-Annotator-Id` header (default `human`); labels from
//! annotator `alice` are reported under the source name `human:alice`.
//!
//! | Method | Path | |
//! |---|---|---|
//! | GET | `/api/memes?split=&status=&page=&page_size=` | paged listing |
//! | GET | `/api/memes/{id}?reveal=` | one meme; agent labels only with `reveal=true` |
//! | GET | `/api/memes/{id}/image` | image bytes |
//! | POST | `/api/memes/{id}/label` | `{"coarse", "fine"?}`; durable before 200 |
//! | GET | `/api/disagreements` | memes whose agent labels disagree |
//! | GET | `/api/progress` | labelling progress |
//! | GET | `/api/reports/agreement?level=` | kappa report including human labels |
//! | GET | `/api/guidelines` | label definitions |
//! | GET | `/api/export?source=` | labels as JSONL |

mod api;
mod state;
pub mod store;

pub use api::router;
pub use state::{AppState, ServiceError};
pub use store::{HumanLabel, HumanStore, StoreError};

/// Serves `state` on `addr` until ctrl-c.
pub async fn serve(addr: std::net::SocketAddr, state: AppState, cors_origins: &[String]) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let app = router(std::sync::Arc::new(state), cors_origins);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
