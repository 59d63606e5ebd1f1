use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use pdm_core::render::encode_png;
use pdm_core::{
    load_raw, synth_volume, EssMode, OccupancyMode, SchemeKind, SynthKind, TransferFunction,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{Mutex, RwLock};

use crate::session::{FrameRequest, Session, SessionConfig};

/// Largest accepted viewport edge.
pub const MAX_VIEWPORT: usize = 4096;

#[derive(Clone, Default)]
pub struct AppState {
    session: Arc<RwLock<Option<Arc<Session>>>>,
    /// Serializes volume loads and TF updates.
    writer: Arc<Mutex<()>>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_session(session: Session) -> Self {
        Self {
            session: Arc::new(RwLock::new(Some(Arc::new(session)))),
            writer: Arc::default(),
        }
    }

    pub async fn session(&self) -> Option<Arc<Session>> {
        self.session.read().await.clone()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn no_session() -> Self {
        Self::new(StatusCode::CONFLICT, "no_session", "no volume loaded")
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn body(&self) -> Value {
        json!({ "code": self.code, "message": self.message })
    }
}

impl From<pdm_core::Error> for ApiError {
    fn from(e: pdm_core::Error) -> Self {
        use pdm_core::Error as E;
        match e {
            E::Io { .. } => Self::new(StatusCode::NOT_FOUND, "io", e.to_string()),
            E::InvalidTransferFunction(_) => Self::new(StatusCode::BAD_REQUEST, "invalid_tf", e.to_string()),
            E::InvalidSettings(_) | E::InvalidCamera(_) => Self::bad_request(e.to_string()),
            E::AccelMismatch(_) | E::Image(_) => {
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
            }
            _ => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_volume", e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/info", get(info))
        .route("/api/volume", post(load_volume))
        .route("/api/tf", post(post_tf))
        .route("/api/frame", get(frame))
        .route("/api/stream", get(stream))
        .with_state(state)
}

async fn require(state: &AppState) -> ApiResult<Arc<Session>> {
    state.session().await.ok_or_else(ApiError::no_session)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

fn info_json(s: &Session) -> Value {
    let tf = s.current();
    json!({
        "dims": s.volume.dims(),
        "bits": s.volume.bits(),
        "spacing": s.volume.spacing(),
        "intensity_range": s.volume.intensity_range(),
        "n": s.pdms.len(),
        "scheme": s.pdms.scheme.kind(),
        "partitions": s.pdms.scheme.partitions().iter().map(|p| [p.lo, p.hi]).collect::<Vec<_>>(),
        "block_size": s.grid.block_size,
        "occupancy": s.config.occupancy,
        "histogram": s.histogram,
        "init_ms": s.init_time().as_secs_f64() * 1e3,
        "pdm_memory_bytes": s.pdms.memory_bytes(),
        "frames_rendered": s.frames_rendered(),
        "selection": tf.selection.to_vec(),
    })
}

async fn info(State(state): State<AppState>) -> ApiResult<Json<Value>> {
    let session = require(&state).await?;
    Ok(Json(info_json(&session)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeRequest {
    /// RAW file and its JSON sidecar on the server.
    pub path: Option<PathBuf>,
    pub meta: Option<PathBuf>,
    pub synth: Option<SynthKind>,
    pub dims: Option<[usize; 3]>,
    #[serde(default)]
    pub seed: u64,
    pub partitions: Option<usize>,
    pub scheme: Option<SchemeKind>,
    pub block_size: Option<usize>,
    pub occupancy: Option<OccupancyMode>,
}

async fn load_volume(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<Value>> {
    let req: VolumeRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let mut config = SessionConfig::default();
    if let Some(n) = req.partitions {
        if n == 0 {
            return Err(ApiError::bad_request("partitions must be at least 1"));
        }
        config.partitions = n;
    }
    config.scheme = req.scheme.unwrap_or(config.scheme);
    config.block_size = req.block_size.unwrap_or(config.block_size);
    config.occupancy = req.occupancy.unwrap_or(config.occupancy);

    let _guard = state.writer.lock().await;
    let session = blocking(move || {
        let volume = match (req.path, req.meta, req.synth) {
            (Some(path), meta, None) => {
                let meta = meta.unwrap_or_else(|| path.with_extension("json"));
                load_raw(&path, &meta)?
            }
            (None, None, Some(kind)) => synth_volume(kind, req.dims.unwrap_or([64; 3]), req.seed)?,
            _ => return Err(ApiError::bad_request("give exactly one of 'path' or 'synth'")),
        };
        Ok(Session::new(volume, config)?)
    })
    .await?;
    let body = info_json(&session);
    *state.session.write().await = Some(Arc::new(session));
    Ok(Json(body))
}

#[derive(Debug, Serialize)]
pub struct TfResponse {
    pub selection: Vec<usize>,
    pub select_ms: f64,
    pub combine_ms: f64,
    /// Fraction of blocks D′ marks occupied (distance 0).
    pub dprime_nonzero_fraction: f64,
    pub dprime_checksum: u64,
}

async fn post_tf(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<TfResponse>> {
    let session = require(&state).await?;
    let text = std::str::from_utf8(&body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let tf = TransferFunction::from_json(text)?;
    if tf.bits() != session.volume.bits() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "invalid_tf",
            format!("transfer function is {}-bit, volume is {}-bit", tf.bits(), session.volume.bits()),
        ));
    }
    let _guard = state.writer.lock().await;
    let tf_state = blocking(move || Ok(session.set_tf(tf)?)).await?;
    Ok(Json(TfResponse {
        selection: tf_state.selection.to_vec(),
        select_ms: tf_state.timings.select_ms,
        combine_ms: tf_state.timings.combine_ms,
        dprime_nonzero_fraction: tf_state.dprime_occupied_fraction(),
        dprime_checksum: tf_state.dprime.checksum(),
    }))
}

/// Query and socket message shape for one frame.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameParams {
    #[serde(default)]
    pub angle: f64,
    #[serde(default = "default_edge")]
    pub w: usize,
    #[serde(default = "default_edge")]
    pub h: usize,
    #[serde(default)]
    pub ess: EssMode,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_elevation")]
    pub elevation: f64,
}

fn default_edge() -> usize {
    256
}

fn default_step() -> f64 {
    0.5
}

fn default_elevation() -> f64 {
    0.3
}

impl FrameParams {
    fn to_request(&self) -> ApiResult<FrameRequest> {
        if self.w == 0 || self.h == 0 || self.w > MAX_VIEWPORT || self.h > MAX_VIEWPORT {
            return Err(ApiError::bad_request(format!(
                "viewport {}x{} outside 1..={MAX_VIEWPORT}",
                self.w, self.h
            )));
        }
        if !self.angle.is_finite() || !self.elevation.is_finite() {
            return Err(ApiError::bad_request("angle and elevation must be finite"));
        }
        Ok(FrameRequest {
            angle: self.angle,
            width: self.w,
            height: self.h,
            ess: self.ess,
            step: self.step,
            elevation: self.elevation,
        })
    }
}

async fn frame(State(state): State<AppState>, params: Result<Query<FrameParams>, axum::extract::rejection::QueryRejection>) -> ApiResult<Response> {
    let Query(params) = params.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let session = require(&state).await?;
    let req = params.to_request()?;
    let (png, stats) = blocking(move || {
        let f = session.render(&req)?;
        Ok((encode_png(&f.image)?, f.stats))
    })
    .await?;
    let stats = serde_json::to_string(&stats).expect("stats serialize");
    Ok((
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("image/png")),
            (
                header::HeaderName::from_static("x-render-stats"),
                HeaderValue::from_str(&stats).expect("json is a valid header value"),
            ),
        ],
        png,
    )
        .into_response())
}

async fn stream(State(state): State<AppState>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| serve_socket(socket, state))
}

/// One reply per request message, rendered against the session state at
/// the moment the request is taken off the socket.
async fn serve_socket(mut socket: WebSocket, state: AppState) {
    while let Some(Ok(msg)) = socket.recv().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Binary(b) => String::from_utf8_lossy(&b).into_owned(),
            Message::Close(_) => break,
            _ => continue,
        };
        let reply = match handle_frame_message(&state, &text).await {
            Ok(v) => v,
            Err(e) => {
                let mut body = e.body();
                body["type"] = json!("error");
                body
            }
        };
        if socket.send(Message::Text(reply.to_string().into())).await.is_err() {
            break;
        }
    }
}

async fn handle_frame_message(state: &AppState, text: &str) -> ApiResult<Value> {
    let params: FrameParams = serde_json::from_str(text).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let req = params.to_request()?;
    let session = require(state).await?;
    let f = blocking(move || Ok(session.render(&req)?)).await?;
    let png = encode_png(&f.image)?;
    Ok(json!({
        "type": "frame",
        "frame_id": f.frame_id,
        "width": f.image.width,
        "height": f.image.height,
        "image": base64::engine::general_purpose::STANDARD.encode(png),
        "render_stats": f.stats,
        "update": f.timings,
    }))
}
