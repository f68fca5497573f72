//! A scriptable HTTP server that speaks the generic agent protocol:
//! `POST` `{"model", "prompt", "temperature", "image"?}` and answer
//! `{"text": ...}`.
//!
//! The script sees each request's model, prompt, the meme id found in a
//! `[meme:ID]` marker inside the prompt, and how many times that
//! (model, meme) pair has been requested, and picks a [`Reply`].

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::sync::oneshot;

#[derive(Debug, Clone)]
pub struct MockRequest {
    pub model: String,
    pub prompt: String,
    pub meme_id: Option<String>,
    /// 1 for the first request of this (model, meme) pair.
    pub attempt: u64,
    pub has_image: bool,
}

impl MockRequest {
    pub fn is_consolidation(&self) -> bool {
        self.prompt.contains("Annotator labels:")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    Text(String),
    /// An HTTP error status, optionally with `Retry-After` seconds.
    Status {
        code: u16,
        retry_after: Option<u64>,
    },
    /// Wait, then answer.
    Delayed(Duration, Box<Reply>),
    /// Close the connection without answering.
    Hang,
}

impl Reply {
    pub fn label(coarse: &str, fine: Option<&str>) -> Self {
        let mut v = json!({"coarse": coarse});
        if let Some(f) = fine {
            v["fine"] = json!(f);
        }
        Reply::Text(v.to_string())
    }

    pub fn status(code: u16) -> Self {
        Reply::Status { code, retry_after: None }
    }
}

pub type Script = Arc<dyn Fn(&MockRequest) -> Reply + Send + Sync>;

/// The meme id in the first `[meme:ID]` marker of `prompt`.
pub fn meme_marker(prompt: &str) -> Option<String> {
    let start = prompt.find("[meme:")? + "[meme:".len();
    let len = prompt[start..].find(']')?;
    Some(prompt[start..start + len].to_string())
}

#[derive(Default)]
struct Counters {
    by_model: HashMap<String, u64>,
    by_pair: HashMap<(String, String), u64>,
}

#[derive(Clone)]
struct AppState {
    script: Script,
    counters: Arc<Mutex<Counters>>,
}

pub fn router(script: Script) -> (Router, RequestCounts) {
    let counters = Arc::new(Mutex::new(Counters::default()));
    let state = AppState { script, counters: counters.clone() };
    let router = Router::new().route("/", post(handle)).route("/{*path}", post(handle)).with_state(state);
    (router, RequestCounts(counters))
}

async fn handle(State(state): State<AppState>, Json(body): Json<Value>) -> Response {
    let model = body.get("model").and_then(Value::as_str).unwrap_or("").to_string();
    let prompt = body.get("prompt").and_then(Value::as_str).unwrap_or("").to_string();
    let meme_id = meme_marker(&prompt);
    let attempt = {
        let mut c = state.counters.lock().unwrap();
        *c.by_model.entry(model.clone()).or_default() += 1;
        let n = c.by_pair.entry((model.clone(), meme_id.clone().unwrap_or_default())).or_default();
        *n += 1;
        *n
    };
    let request = MockRequest { has_image: body.get("image").is_some(), model, prompt, meme_id, attempt };
    let mut reply = (state.script)(&request);
    loop {
        match reply {
            Reply::Delayed(wait, next) => {
                tokio::time::sleep(wait).await;
                reply = *next;
            }
            Reply::Text(text) => return Json(json!({"text": text})).into_response(),
            Reply::Status { code, retry_after } => {
                let status = StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
                let mut resp = (status, "scripted failure").into_response();
                if let Some(secs) = retry_after {
                    resp.headers_mut().insert("retry-after", HeaderValue::from_str(&secs.to_string()).unwrap());
                }
                return resp;
            }
            Reply::Hang => {
                // Never answers; the client's timeout ends the request.
                std::future::pending::<()>().await;
                unreachable!()
            }
        }
    }
}

/// Request counters shared with a running server.
#[derive(Clone)]
pub struct RequestCounts(Arc<Mutex<Counters>>);

impl RequestCounts {
    pub fn for_model(&self, model: &str) -> u64 {
        self.0.lock().unwrap().by_model.get(model).copied().unwrap_or(0)
    }

    pub fn for_pair(&self, model: &str, meme_id: &str) -> u64 {
        let c = self.0.lock().unwrap();
        c.by_pair.get(&(model.to_string(), meme_id.to_string())).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.0.lock().unwrap().by_model.values().sum()
    }

    pub fn by_model(&self) -> HashMap<String, u64> {
        self.0.lock().unwrap().by_model.clone()
    }
}

/// A server running on a background task; stopped on drop.
pub struct MockServer {
    pub addr: SocketAddr,
    pub counts: RequestCounts,
    shutdown: Option<oneshot::Sender<()>>,
}

impl MockServer {
    pub fn url(&self) -> String {
        format!("http://{}/v1/generate", self.addr)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

/// Binds an ephemeral local port and serves `script`. Needs a running
/// tokio runtime.
pub async fn spawn(script: Script) -> std::io::Result<MockServer> {
    spawn_on("127.0.0.1:0".parse().unwrap(), script).await
}

pub async fn spawn_on(addr: SocketAddr, script: Script) -> std::io::Result<MockServer> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let (router, counts) = router(script);
    let (tx, rx) = oneshot::channel();
    tokio::spawn(async move {
        let _ = axum::serve(listener, router)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await;
    });
    Ok(MockServer { addr, counts, shutdown: Some(tx) })
}

pub mod scripts {
    //! Ready-made scripts.

    use super::*;

    const HATEFUL_FINE: [&str; 8] =
        ["dehumanizing", "inferiority", "inciting_violence", "mocking", "contempt", "slurs", "exclusion", "other"];
    const NOT_HATEFUL_FINE: [&str; 3] = ["humor", "sarcasm", "other"];

    fn fnv1a(parts: &[&str]) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for part in parts {
            for b in part.bytes().chain([0xff]) {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }

    /// A deterministic label derived from the meme id alone, so that every
    /// model agrees; about a fifth of memes are hateful.
    pub fn label_for(meme_id: &str) -> Reply {
        let h = fnv1a(&[meme_id]);
        if h.is_multiple_of(5) {
            Reply::label("hateful", Some(HATEFUL_FINE[(h / 5 % 8) as usize]))
        } else {
            Reply::label("not_hateful", Some(NOT_HATEFUL_FINE[(h / 5 % 3) as usize]))
        }
    }

    fn flip(reply: &Reply) -> Reply {
        if matches!(reply, Reply::Text(t) if t.contains("\"hateful\"")) {
            Reply::label("not_hateful", Some("humor"))
        } else {
            Reply::label("hateful", Some("mocking"))
        }
    }

    fn consolidate(req: &MockRequest) -> Reply {
        let hateful = req.prompt.matches("\"coarse\":\"hateful\"").count();
        let not = req.prompt.matches("\"coarse\":\"not_hateful\"").count();
        if hateful > not {
            Reply::label("hateful", None)
        } else {
            Reply::label("not_hateful", None)
        }
    }

    /// Every annotator answers [`label_for`], except that `dissenter`
    /// flips the coarse label on the memes in `disagreements`. The
    /// consolidator (any consolidation prompt) picks the majority coarse
    /// label among the candidates.
    pub fn panel(dissenter: &str, disagreements: &[String]) -> Script {
        let dissenter = dissenter.to_string();
        let disagreements: std::collections::HashSet<String> = disagreements.iter().cloned().collect();
        Arc::new(move |req: &MockRequest| {
            if req.is_consolidation() {
                return consolidate(req);
            }
            let id = req.meme_id.clone().unwrap_or_default();
            let base = label_for(&id);
            if req.model == dissenter && disagreements.contains(&id) {
                flip(&base)
            } else {
                base
            }
        })
    }

    /// Every model labels from [`label_for`]; each model additionally
    /// flips the coarse label on roughly `disagree_per_mille`/1000 of
    /// memes. The consolidator picks the majority coarse label.
    pub fn hashed(disagree_per_mille: u64) -> Script {
        Arc::new(move |req: &MockRequest| {
            let id = req.meme_id.clone().unwrap_or_default();
            if req.is_consolidation() {
                return consolidate(req);
            }
            let base = label_for(&id);
            if fnv1a(&[&req.model, &id]) % 1000 < disagree_per_mille {
                return flip(&base);
            }
            base
        })
    }
}
