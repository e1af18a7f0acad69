//! Localhost HTTP/JSON facade for interactive authoring.
//!
//! Every session holds its own canvas and keyframe list behind a mutex, so
//! requests on one session run one at a time while sessions stay
//! independent. Image work runs on the blocking pool.

pub mod session;

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::{Mutex, RwLock};
use uuid::Uuid;

use anicode_core::codec::LandmarkSet;
use anicode_core::draft::DraftKeyframe;
use anicode_core::io::{decode_image, encode_png};
use anicode_core::segmentation::SegParams;
use session::{Session, SessionError};

/// Upload size cap for the scene image.
pub const MAX_UPLOAD_BYTES: usize = 32 * 1024 * 1024;

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<Uuid, Arc<Mutex<Session>>>>>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/session", post(create_session))
        .route("/session/{id}", get(session_state))
        .route("/session/{id}/landmarks", put(set_landmarks))
        .route("/session/{id}/segment", post(resegment))
        .route("/session/{id}/labels.png", get(labels_png))
        .route("/session/{id}/keyframe", post(add_keyframe).delete(undo_keyframe))
        .route("/session/{id}/thumbnail.png", get(thumbnail_png))
        .route("/session/{id}/preview", get(preview))
        .route("/session/{id}/frames/{n}", get(frame_png))
        .route("/session/{id}/payload", get(payload))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}

pub enum ApiError {
    NotFound(String),
    BadRequest(String),
    Unprocessable(String),
    Session(SessionError),
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError::Session(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, json!({ "error": m })),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, json!({ "error": m })),
            ApiError::Unprocessable(m) => (StatusCode::UNPROCESSABLE_ENTITY, json!({ "error": m })),
            ApiError::Session(e) => {
                let msg = e.to_string();
                match e {
                    SessionError::BadImage(_) => (StatusCode::BAD_REQUEST, json!({ "error": msg })),
                    SessionError::Invalid(_) | SessionError::UnknownSegment(_) => {
                        (StatusCode::UNPROCESSABLE_ENTITY, json!({ "error": msg }))
                    }
                    SessionError::Capacity { used, limit, keyframe } => (
                        StatusCode::CONFLICT,
                        json!({ "error": msg, "chars_used": used, "limit": limit, "keyframe": keyframe }),
                    ),
                    SessionError::NeedsConfirmation { keyframes, invalidated } => (
                        StatusCode::CONFLICT,
                        json!({ "error": msg, "keyframes": keyframes, "invalidated": invalidated }),
                    ),
                    SessionError::NothingToUndo | SessionError::NoKeyframes | SessionError::NoLandmarks => {
                        (StatusCode::CONFLICT, json!({ "error": msg }))
                    }
                    SessionError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": msg })),
                }
            }
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_json<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::Unprocessable(e.to_string()))
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

async fn lookup(state: &AppState, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
    let not_found = || ApiError::NotFound(format!("no session {id}"));
    let uuid = Uuid::parse_str(id).map_err(|_| not_found())?;
    state.sessions.read().await.get(&uuid).cloned().ok_or_else(not_found)
}

/// Runs `f` on the locked session on the blocking pool.
async fn with_session<T, F>(state: &AppState, id: &str, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&mut Session) -> ApiResult<T> + Send + 'static,
{
    let guard = lookup(state, id).await?.lock_owned().await;
    tokio::task::spawn_blocking(move || {
        let mut s = guard;
        f(&mut s)
    })
    .await
    .map_err(|e| ApiError::Session(SessionError::Internal(e.to_string())))?
}

async fn create_session(State(state): State<AppState>, mut form: Multipart) -> ApiResult<Response> {
    let mut image = None;
    let mut landmarks = None;
    while let Some(field) = form.next_field().await.map_err(|e| ApiError::BadRequest(e.to_string()))? {
        let name = field.name().unwrap_or_default().to_string();
        let data = field.bytes().await.map_err(|e| ApiError::BadRequest(e.to_string()))?;
        match name.as_str() {
            "image" => image = Some(data),
            "landmarks" => landmarks = Some(parse_json::<LandmarkSet>(&data)?),
            _ => {}
        }
    }
    let bytes = image
        .filter(|b| !b.is_empty())
        .ok_or_else(|| ApiError::BadRequest("missing image".into()))?;
    let session = tokio::task::spawn_blocking(move || {
        let img = decode_image(&bytes).map_err(|e| SessionError::BadImage(e.to_string()))?;
        Session::new(&img, landmarks)
    })
    .await
    .map_err(|e| ApiError::Session(SessionError::Internal(e.to_string())))??;

    let body = json!({
        "landmarks": session.landmarks(),
        "seg": session.seg(),
        "segments": session.features().len(),
        "features": session.features(),
    });
    let id = Uuid::new_v4();
    state.sessions.write().await.insert(id, Arc::new(Mutex::new(session)));
    let mut body = body;
    body["id"] = json!(id.to_string());
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn session_state(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    with_session(&state, &id, |s| {
        Ok(Json(json!({
            "landmarks": s.landmarks(),
            "seg": s.seg(),
            "segments": s.features().len(),
            "keyframes": s.keyframes(),
        })))
    })
    .await
}

async fn set_landmarks(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let landmarks: LandmarkSet = parse_json(&body)?;
    with_session(&state, &id, move |s| {
        s.set_landmarks(landmarks)?;
        Ok(Json(json!({ "landmarks": landmarks })))
    })
    .await
}

#[derive(Deserialize)]
struct SegmentRequest {
    avg_superpixel_size: u32,
    compactness: u32,
    min_merge_size: Option<u32>,
    iterations: Option<u32>,
    #[serde(default)]
    confirm_clear: bool,
}

async fn resegment(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let req: SegmentRequest = parse_json(&body)?;
    let mut params = SegParams::tuned(req.avg_superpixel_size, req.compactness);
    params.min_merge_size = req.min_merge_size.unwrap_or(params.min_merge_size);
    params.iterations = req.iterations.unwrap_or(params.iterations);
    let labels = format!("/session/{id}/labels.png");
    with_session(&state, &id, move |s| {
        let report = s.resegment(params, req.confirm_clear)?;
        let mut body = serde_json::to_value(report).expect("report serializes");
        body["labels"] = json!(labels);
        Ok(Json(body))
    })
    .await
}

async fn labels_png(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    with_session(&state, &id, |s| {
        Ok(png(s.labels().encode_png16().map_err(SessionError::from)?))
    })
    .await
}

async fn add_keyframe(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let draft: DraftKeyframe = parse_json(&body)?;
    let thumbnail = format!("/session/{id}/thumbnail.png");
    with_session(&state, &id, move |s| {
        let report = s.add_keyframe(&draft)?;
        let mut body = serde_json::to_value(report).expect("report serializes");
        body["thumbnail"] = json!(thumbnail);
        Ok(Json(body))
    })
    .await
}

async fn undo_keyframe(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    with_session(&state, &id, |s| Ok(Json(serde_json::to_value(s.undo()?).expect("report serializes")))).await
}

async fn thumbnail_png(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    with_session(&state, &id, |s| {
        s.thumbnail()
            .map(|b| png(b.to_vec()))
            .ok_or(ApiError::Session(SessionError::NoKeyframes))
    })
    .await
}

async fn preview(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let base = format!("/session/{id}/frames");
    with_session(&state, &id, move |s| {
        let seq = s.preview()?;
        let frames: Vec<String> = (0..seq.frames.len()).map(|n| format!("{base}/{n}.png")).collect();
        Ok(Json(json!({ "manifest": seq.manifest, "frames": frames })))
    })
    .await
}

async fn frame_png(State(state): State<AppState>, Path((id, n)): Path<(String, String)>) -> ApiResult<Response> {
    let index: usize = n
        .strip_suffix(".png")
        .unwrap_or(&n)
        .parse()
        .map_err(|_| ApiError::NotFound(format!("no frame {n}")))?;
    with_session(&state, &id, move |s| {
        let seq = s.preview()?;
        let frame = seq.frames.get(index).ok_or_else(|| ApiError::NotFound(format!("no frame {index}")))?;
        Ok(png(encode_png(frame).map_err(|e| SessionError::Internal(e.to_string()))?))
    })
    .await
}

async fn payload(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    with_session(&state, &id, |s| {
        let payload = s.payload()?;
        Ok(Json(json!({ "payload": payload, "chars_used": payload.len() })))
    })
    .await
}
