//! An in-memory HTTP blob server speaking the protocol of
//! [`HttpBackend`](crate::http::HttpBackend), with bearer-token auth,
//! rate limiting and fault injection.
//!
//! Requests carrying a valid token are limited per token. All other
//! requests share one bucket per client address, so guessing different
//! tokens does not earn fresh allowances.
//!
//! Faults are set with `POST /admin/fault` and a JSON [`FaultConfig`]; the
//! posted value replaces the current one. `GET /admin/fault` returns it.
//!
//! | condition            | status |
//! |----------------------|--------|
//! | injected outage      | 503    |
//! | rate limit exceeded  | 429    |
//! | unknown/revoked token| 401    |
//! | body over size limit | 413    |

mod ratelimit;

use std::collections::{BTreeMap, HashSet};
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::Duration;

use axum::body::{Body, Bytes};
use axum::extract::{ConnectInfo, DefaultBodyLimit, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;

pub use ratelimit::{RateLimit, RateLimiter};

use crate::backend::Receipt;
use crate::key::ObjectKey;
use crate::token::StorageToken;

#[derive(Debug, Clone)]
pub struct MockConfig {
    pub tokens: Vec<StorageToken>,
    pub rate_limit: Option<RateLimit>,
    pub max_object_size: usize,
}

impl MockConfig {
    pub fn new(tokens: impl IntoIterator<Item = StorageToken>) -> Self {
        MockConfig {
            tokens: tokens.into_iter().collect(),
            rate_limit: None,
            max_object_size: 256 << 20,
        }
    }

    pub fn with_rate_limit(mut self, rps: f64, burst: f64) -> Self {
        self.rate_limit = Some(RateLimit { rps, burst });
        self
    }
}

/// Injected misbehaviour. All fields default to "healthy".
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultConfig {
    /// Answer every object request with 503.
    pub down: bool,
    /// Delay before handling each object request.
    pub latency_ms: u64,
    /// Flip this bit (offset modulo object size) in the next GET response only.
    pub tamper_next_get: Option<u64>,
    /// Flip this bit in every GET response.
    pub tamper_gets: Option<u64>,
    /// Reject every token with 401.
    pub revoke_tokens: bool,
}

struct AppState {
    objects: RwLock<BTreeMap<String, Bytes>>,
    tokens: HashSet<String>,
    limiter: Option<RateLimiter>,
    fault: Mutex<FaultConfig>,
}

/// A running mock server. Dropping it shuts the server down.
pub struct MockServer {
    addr: SocketAddr,
    state: Arc<AppState>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Starts on an ephemeral localhost port.
    pub fn start(config: MockConfig) -> std::io::Result<Self> {
        Self::start_on(SocketAddr::from(([127, 0, 0, 1], 0)), config)
    }

    pub fn start_on(addr: SocketAddr, config: MockConfig) -> std::io::Result<Self> {
        let std_listener = std::net::TcpListener::bind(addr)?;
        std_listener.set_nonblocking(true)?;
        let addr = std_listener.local_addr()?;
        let state = Arc::new(AppState::new(&config));
        let app = router(state.clone(), config.max_object_size);
        let (tx, rx) = oneshot::channel::<()>();

        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()?;
        let thread = std::thread::Builder::new()
            .name(format!("mock-blob-{}", addr.port()))
            .spawn(move || {
                runtime.block_on(async move {
                    let listener = tokio::net::TcpListener::from_std(std_listener).expect("listener handoff");
                    let _ = axum::serve(listener, app.into_make_service_with_connect_info::<SocketAddr>())
                        .with_graceful_shutdown(async {
                            let _ = rx.await;
                        })
                        .await;
                });
            })?;

        Ok(MockServer {
            addr,
            state,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    /// Serves until the process is killed.
    pub fn run_forever(addr: SocketAddr, config: MockConfig) -> std::io::Result<()> {
        let mut server = Self::start_on(addr, config)?;
        eprintln!("mock blob server listening on {}", server.url());
        if let Some(t) = server.thread.take() {
            let _ = t.join();
        }
        Ok(())
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn set_fault(&self, fault: FaultConfig) {
        *self.state.fault.lock().unwrap() = fault;
    }

    pub fn fault(&self) -> FaultConfig {
        self.state.fault.lock().unwrap().clone()
    }

    /// Keys currently stored, sorted.
    pub fn keys(&self) -> Vec<String> {
        self.state.objects.read().unwrap().keys().cloned().collect()
    }

    /// Raw stored octets, bypassing auth and faults.
    pub fn object(&self, key: &str) -> Option<Vec<u8>> {
        self.state.objects.read().unwrap().get(key).map(|b| b.to_vec())
    }

    pub fn total_octets(&self) -> usize {
        self.state.objects.read().unwrap().values().map(Bytes::len).sum()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl AppState {
    fn new(config: &MockConfig) -> Self {
        AppState {
            objects: RwLock::default(),
            tokens: config.tokens.iter().map(|t| t.expose().to_string()).collect(),
            limiter: config.rate_limit.map(RateLimiter::new),
            fault: Mutex::default(),
        }
    }
}

fn router(state: Arc<AppState>, max_object_size: usize) -> Router {
    let objects = Router::new()
        .route("/v1/o", get(list_objects))
        .route("/v1/o/{key}", put(put_object).get(get_object).delete(delete_object))
        .layer(middleware::from_fn_with_state(state.clone(), gatekeeper))
        .layer(DefaultBodyLimit::max(max_object_size));
    Router::new()
        .route("/admin/fault", get(get_fault).post(set_fault))
        .merge(objects)
        .with_state(state)
}

/// Outage, latency, rate limiting and authentication, in that order.
async fn gatekeeper(
    State(state): State<Arc<AppState>>,
    ConnectInfo(peer): ConnectInfo<SocketAddr>,
    req: Request,
    next: Next,
) -> Response {
    let fault = state.fault.lock().unwrap().clone();
    if fault.down {
        return (StatusCode::SERVICE_UNAVAILABLE, "injected outage").into_response();
    }
    if fault.latency_ms > 0 {
        tokio::time::sleep(Duration::from_millis(fault.latency_ms)).await;
    }
    let presented = req
        .headers()
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .unwrap_or("")
        .to_string();
    let known = !fault.revoke_tokens && state.tokens.contains(&presented);
    if let Some(limiter) = &state.limiter {
        let bucket = if known {
            format!("token:{presented}")
        } else {
            format!("peer:{}", peer.ip())
        };
        if !limiter.try_acquire(&bucket) {
            return (StatusCode::TOO_MANY_REQUESTS, "rate limited").into_response();
        }
    }
    if !known {
        return (StatusCode::UNAUTHORIZED, "invalid token").into_response();
    }
    next.run(req).await
}

async fn put_object(State(state): State<Arc<AppState>>, Path(key): Path<String>, body: Bytes) -> Response {
    let key = match ObjectKey::parse(&key) {
        Ok(k) => k,
        Err(e) => return (StatusCode::BAD_REQUEST, e.to_string()).into_response(),
    };
    let receipt = Receipt::for_data(&body);
    state.objects.write().unwrap().insert(key.as_str().to_string(), body);
    (StatusCode::OK, Json(receipt)).into_response()
}

async fn get_object(State(state): State<Arc<AppState>>, Path(key): Path<String>) -> Response {
    let Some(data) = state.objects.read().unwrap().get(&key).cloned() else {
        return (StatusCode::NOT_FOUND, "no such object").into_response();
    };
    let flip = {
        let mut fault = state.fault.lock().unwrap();
        fault.tamper_next_get.take().or(fault.tamper_gets)
    };
    let body = match flip {
        Some(bit) if !data.is_empty() => {
            let mut v = data.to_vec();
            let bit = bit % (v.len() as u64 * 8);
            v[(bit / 8) as usize] ^= 1 << (bit % 8);
            Bytes::from(v)
        }
        _ => data,
    };
    (
        StatusCode::OK,
        [(header::CONTENT_TYPE, "application/octet-stream")],
        Body::from(body),
    )
        .into_response()
}

async fn delete_object(State(state): State<Arc<AppState>>, Path(key): Path<String>) -> StatusCode {
    match state.objects.write().unwrap().remove(&key) {
        Some(_) => StatusCode::NO_CONTENT,
        None => StatusCode::NOT_FOUND,
    }
}

#[derive(Deserialize)]
struct ListQuery {
    #[serde(default)]
    prefix: String,
}

#[derive(Serialize)]
struct KeyListBody {
    keys: Vec<String>,
}

async fn list_objects(State(state): State<Arc<AppState>>, Query(q): Query<ListQuery>) -> Json<KeyListBody> {
    let keys = state
        .objects
        .read()
        .unwrap()
        .range(q.prefix.clone()..)
        .take_while(|(k, _)| k.starts_with(&q.prefix))
        .map(|(k, _)| k.clone())
        .collect();
    Json(KeyListBody { keys })
}

async fn get_fault(State(state): State<Arc<AppState>>) -> Json<FaultConfig> {
    Json(state.fault.lock().unwrap().clone())
}

async fn set_fault(State(state): State<Arc<AppState>>, Json(fault): Json<FaultConfig>) -> Json<FaultConfig> {
    *state.fault.lock().unwrap() = fault.clone();
    Json(fault)
}

/// Replaces the fault configuration of a running mock server over HTTP.
pub fn post_fault(base_url: &str, fault: &FaultConfig) -> Result<(), crate::StorageError> {
    let body = serde_json::to_vec(fault).expect("fault config serializes");
    let resp = ureq::post(&format!("{}/admin/fault", base_url.trim_end_matches('/')))
        .header("Content-Type", "application/json")
        .send(&body[..])
        .map_err(|e| crate::StorageError::Other(format!("admin request failed: {e}")))?;
    if resp.status() != 200 {
        return Err(crate::StorageError::Other(format!(
            "admin request returned {}",
            resp.status()
        )));
    }
    Ok(())
}
