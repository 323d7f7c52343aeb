//! Local HTTP API for the recoloring workbench: decompose an uploaded
//! image into color layers, serve the layers, and recompose them under a
//! new palette.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/api/decompose?k=&lambda=&seed=` | multipart image upload |
//! | GET | `/api/sessions/{id}/layers/{k}` | straight-alpha RGBA PNG |
//! | POST | `/api/sessions/{id}/recolor` | `{"colors": [[r,g,b],..]}` or `{"reference_session": id}` |

mod store;

use std::net::{Ipv4Addr, SocketAddr};
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::SystemTime;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;
use ukiyo_core::color::{
    compose, decompose, estimate_palette, layer_image, recolor, transfer_palette, ColorError, Palette,
    DEFAULT_LAMBDA, DEFAULT_LAYERS,
};
use ukiyo_core::raster::{encode_rgb_png, encode_rgba_png, image_dimensions, RasterError};
use ukiyo_core::RgbRaster;

pub use store::{Session, SessionStore};

pub const DEFAULT_PORT: u16 = 8777;
pub const DEFAULT_MAX_SESSIONS: usize = 16;
pub const DEFAULT_MAX_SIDE: u32 = 4096;
const MAX_UPLOAD_BYTES: usize = 256 << 20;

const INDEX_HTML: &str = include_str!("../assets/index.html");

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub max_sessions: NonZeroUsize,
    /// Uploads wider or taller than this are refused with 413.
    pub max_side: u32,
    /// Directory served at `/` instead of the built-in page.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            max_sessions: NonZeroUsize::new(DEFAULT_MAX_SESSIONS).expect("nonzero"),
            max_side: DEFAULT_MAX_SIDE,
            static_dir: None,
        }
    }
}

struct AppState {
    sessions: SessionStore,
    config: ServiceConfig,
}

pub fn router(config: ServiceConfig) -> Router {
    let static_dir = config.static_dir.clone();
    let state = Arc::new(AppState { sessions: SessionStore::new(config.max_sessions), config });
    let api = Router::new()
        .route("/api/decompose", post(decompose_image))
        .route("/api/sessions/{id}/layers/{k}", get(layer_png))
        .route("/api/sessions/{id}/recolor", post(recolor_png))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(INDEX_HTML) })),
    }
}

/// Serves on `127.0.0.1:port` until the process is stopped.
pub async fn serve(port: u16, config: ServiceConfig) -> std::io::Result<()> {
    let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(config)).await
}

#[derive(Debug)]
struct ApiError(StatusCode, String);

impl ApiError {
    fn bad_request(msg: impl Into<String>) -> Self {
        Self(StatusCode::BAD_REQUEST, msg.into())
    }

    fn not_found(msg: impl Into<String>) -> Self {
        Self(StatusCode::NOT_FOUND, msg.into())
    }
}

impl From<ColorError> for ApiError {
    fn from(e: ColorError) -> Self {
        match e {
            ColorError::Io(_) | ColorError::Raster(RasterError::Encode(_)) => {
                Self(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
            }
            other => Self::bad_request(other.to_string()),
        }
    }
}

impl From<RasterError> for ApiError {
    fn from(e: RasterError) -> Self {
        ColorError::from(e).into()
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

#[derive(Debug, Deserialize)]
struct DecomposeQuery {
    #[serde(default = "default_k")]
    k: usize,
    #[serde(default = "default_lambda")]
    lambda: f64,
    #[serde(default)]
    seed: u64,
}

fn default_k() -> usize {
    DEFAULT_LAYERS
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DecomposeResponse {
    pub session_id: String,
    pub palette: Vec<[f64; 3]>,
    pub width: u32,
    pub height: u32,
    pub max_clip_error: f64,
}

async fn decompose_image(
    State(app): State<Arc<AppState>>,
    Query(query): Query<DecomposeQuery>,
    mut multipart: Multipart,
) -> Result<Json<DecomposeResponse>, ApiError> {
    if query.k == 0 {
        return Err(ColorError::InvalidLayerCount.into());
    }
    let mut upload = None;
    while let Some(field) = multipart.next_field().await.map_err(|e| ApiError(e.status(), e.body_text()))? {
        if field.name() == Some("image") || (upload.is_none() && field.file_name().is_some()) {
            upload = Some(field.bytes().await.map_err(|e| ApiError(e.status(), e.body_text()))?);
        }
    }
    let bytes = upload.ok_or_else(|| ApiError::bad_request("multipart body has no image field"))?;
    let (w, h) = image_dimensions(&bytes)?;
    let cap = app.config.max_side;
    if w > cap || h > cap {
        return Err(ApiError(StatusCode::PAYLOAD_TOO_LARGE, format!("image is {w}x{h}, the limit is {cap}x{cap}")));
    }

    let DecomposeQuery { k, lambda, seed } = query;
    let session = blocking(move || {
        let source = RgbRaster::decode(&bytes)?;
        let palette = estimate_palette(&source, k, seed)?;
        let stack = decompose(&source, &palette, lambda)?;
        Ok(Session { source, stack, lambda, seed, created: SystemTime::now() })
    })
    .await?;
    let response = DecomposeResponse {
        session_id: String::new(),
        palette: session.stack.palette().colors().to_vec(),
        width: session.stack.width(),
        height: session.stack.height(),
        max_clip_error: session.stack.max_clip_error(),
    };
    let session_id = app.sessions.insert(session).await;
    Ok(Json(DecomposeResponse { session_id, ..response }))
}

async fn session(app: &AppState, id: &str) -> Result<Arc<Session>, ApiError> {
    app.sessions.get(id).await.ok_or_else(|| ApiError::not_found(format!("no session {id}")))
}

async fn layer_png(State(app): State<Arc<AppState>>, Path((id, k)): Path<(String, String)>) -> Result<Response, ApiError> {
    let session = session(&app, &id).await?;
    let layers = session.stack.layer_count();
    let k = k
        .parse::<usize>()
        .ok()
        .filter(|k| *k < layers)
        .ok_or_else(|| ApiError::not_found(format!("session has layers 0..{layers}, not {k}")))?;
    let bytes = blocking(move || Ok(encode_rgba_png(&layer_image(&session.stack, k))?)).await?;
    Ok(png(bytes))
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RecolorRequest {
    Colors { colors: Vec<[f64; 3]> },
    Reference { reference_session: String },
}

async fn recolor_png(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let base = session(&app, &id).await?;
    let request: RecolorRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request(format!("expected {{\"colors\": [...]}} or {{\"reference_session\": id}}: {e}")))?;
    let reference = match &request {
        RecolorRequest::Reference { reference_session } => Some(session(&app, reference_session).await?),
        RecolorRequest::Colors { .. } => None,
    };
    let bytes = blocking(move || {
        let stack = match (request, reference) {
            (RecolorRequest::Colors { colors }, _) => recolor(&base.stack, &Palette::new(colors)?)?,
            (RecolorRequest::Reference { .. }, Some(reference)) => {
                transfer_palette(&base.stack, &reference.source, base.seed)?
            }
            (RecolorRequest::Reference { .. }, None) => unreachable!("reference resolved above"),
        };
        Ok(encode_rgb_png(&compose(&stack).to_rgb8())?)
    })
    .await?;
    Ok(png(bytes))
}
