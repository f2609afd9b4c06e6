//! HTTP service for the lighting controller.
//!
//! All routes live under `/v1`. A profile can be driven by at most one
//! session at a time; every accepted correction is written to disk before
//! the response goes out, and published to the session's event stream.

mod error;
mod wire;

use std::collections::HashMap;
use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use cabinlight_core::{LearnerConfig, ProfileStore, Session, TrialRecord};
use futures::Stream;
use rand::Rng;
use tokio::sync::watch;

pub use error::ApiError;
pub use wire::*;

pub const DEFAULT_HEARTBEAT: Duration = Duration::from_secs(15);

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    store: ProfileStore,
    heartbeat: Duration,
    registry: Mutex<Registry>,
}

#[derive(Default)]
struct Registry {
    by_token: HashMap<String, Arc<LiveSession>>,
    by_profile: HashMap<String, String>,
}

struct LiveSession {
    token: String,
    profile_id: String,
    session: tokio::sync::Mutex<Session>,
    log: Mutex<EventLog>,
    bell: watch::Sender<u64>,
}

#[derive(Default)]
struct EventLog {
    records: Vec<TrialRecord>,
    closed: bool,
}

impl LiveSession {
    fn publish(&self, record: TrialRecord) {
        self.log.lock().unwrap().records.push(record);
        self.bell.send_modify(|n| *n += 1);
    }

    fn close(&self) {
        self.log.lock().unwrap().closed = true;
        self.bell.send_modify(|n| *n += 1);
    }

    fn is_closed(&self) -> bool {
        self.log.lock().unwrap().closed
    }
}

impl AppState {
    pub fn new(data_dir: impl Into<PathBuf>) -> cabinlight_core::Result<Self> {
        Ok(Self {
            inner: Arc::new(Inner {
                store: ProfileStore::open(data_dir)?,
                heartbeat: DEFAULT_HEARTBEAT,
                registry: Mutex::default(),
            }),
        })
    }

    /// Changes the idle interval between stream heartbeats.
    pub fn with_heartbeat(self, every: Duration) -> Self {
        let inner = Arc::into_inner(self.inner).expect("configure before sharing");
        Self {
            inner: Arc::new(Inner { heartbeat: every, ..inner }),
        }
    }

    pub fn store(&self) -> &ProfileStore {
        &self.inner.store
    }

    fn live(&self, token: &str) -> Result<Arc<LiveSession>, ApiError> {
        self.inner
            .registry
            .lock()
            .unwrap()
            .by_token
            .get(token)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("no session `{token}`")))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/profiles", post(create_profile))
        .route("/v1/profiles/{id}", get(get_profile))
        .route("/v1/sessions", post(open_session))
        .route("/v1/sessions/{token}", get(get_session).delete(end_session))
        .route("/v1/sessions/{token}/feedback", post(feedback))
        .route("/v1/sessions/{token}/context", post(change_context))
        .route("/v1/sessions/{token}/stream", get(stream))
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn new_token() -> String {
    format!("{:032x}", rand::rng().random::<u128>())
}

async fn create_profile(
    State(state): State<AppState>,
    StrictJson(body): StrictJson<CreateProfile>,
) -> Result<impl IntoResponse, ApiError> {
    if !(body.age.is_finite() && (0.0..=120.0).contains(&body.age)) {
        return Err(ApiError::BadRequest(format!("age {} outside [0, 120]", body.age)));
    }
    let chronotype = body.chronotype()?;
    let cfg = body.config.apply(LearnerConfig::default());
    cfg.validate()?;
    let profile = state.store().create(body.age, chronotype, cfg)?;
    Ok((
        StatusCode::CREATED,
        Json(ProfileCreated {
            profile_id: profile.profile_id,
        }),
    ))
}

async fn get_profile(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<ProfileView>, ApiError> {
    let profile = state
        .store()
        .load(&id)?
        .ok_or_else(|| ApiError::NotFound(format!("no profile `{id}`")))?;
    Ok(Json(ProfileView::from(&profile)))
}

async fn open_session(
    State(state): State<AppState>,
    StrictJson(body): StrictJson<OpenSession>,
) -> Result<impl IntoResponse, ApiError> {
    let input = body.input.to_state()?;
    let mut registry = state.inner.registry.lock().unwrap();
    if registry.by_profile.contains_key(&body.profile_id) {
        return Err(ApiError::Conflict(format!(
            "profile `{}` already has an active session",
            body.profile_id
        )));
    }
    let profile = state
        .store()
        .load(&body.profile_id)?
        .ok_or_else(|| ApiError::NotFound(format!("no profile `{}`", body.profile_id)))?;
    let session = Session::open(profile, input)?;
    let suggestion = session.suggestion().expect("open computes a suggestion");

    let token = new_token();
    let live = Arc::new(LiveSession {
        token: token.clone(),
        profile_id: body.profile_id.clone(),
        session: tokio::sync::Mutex::new(session),
        log: Mutex::default(),
        bell: watch::channel(0).0,
    });
    registry.by_profile.insert(body.profile_id, token.clone());
    registry.by_token.insert(token.clone(), live);
    Ok((StatusCode::CREATED, Json(SessionOpened { token, suggestion })))
}

async fn get_session(
    State(state): State<AppState>,
    Path(token): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let live = state.live(&token)?;
    let session = live.session.lock().await;
    Ok(Json(SessionView {
        token: live.token.clone(),
        profile_id: live.profile_id.clone(),
        suggestion: session.suggestion(),
        input: session.input().into(),
        trials: session.trace().records.len(),
        revision: session.profile().revision,
    }))
}

async fn feedback(
    State(state): State<AppState>,
    Path(token): Path<String>,
    StrictJson(body): StrictJson<FeedbackBody>,
) -> Result<Json<FeedbackReply>, ApiError> {
    let live = state.live(&token)?;
    let value = body.corrected_intensity;
    if !(value.is_finite() && (0.0..=100.0).contains(&value)) {
        return Err(ApiError::Unprocessable(format!(
            "corrected_intensity {value} outside [0, 100]"
        )));
    }
    let mut session = live.session.lock().await;
    if live.is_closed() {
        return Err(ApiError::NotFound(format!("session `{token}` has ended")));
    }
    // Work on a copy so a failed write leaves the live state untouched.
    let mut next = session.clone();
    let outcome = next.submit_feedback(value)?;
    state.store().save(next.profile())?;
    let revision = next.profile().revision;
    *session = next;
    live.publish(outcome.record.clone());

    Ok(Json(FeedbackReply {
        trial: outcome.record.trial,
        reward: outcome.delta.reward,
        td_error: outcome.delta.td_error,
        table: outcome.delta.table_used,
        next_suggestion: outcome.next_suggestion,
        revision,
    }))
}

async fn change_context(
    State(state): State<AppState>,
    Path(token): Path<String>,
    StrictJson(body): StrictJson<ContextBody>,
) -> Result<Json<ContextReply>, ApiError> {
    let live = state.live(&token)?;
    let input = body.input.to_state()?;
    let mut session = live.session.lock().await;
    let suggestion = session.change_context(input)?;
    Ok(Json(ContextReply { suggestion }))
}

async fn end_session(
    State(state): State<AppState>,
    Path(token): Path<String>,
) -> Result<StatusCode, ApiError> {
    let live = {
        let mut registry = state.inner.registry.lock().unwrap();
        let live = registry
            .by_token
            .remove(&token)
            .ok_or_else(|| ApiError::NotFound(format!("no session `{token}`")))?;
        registry.by_profile.remove(&live.profile_id);
        live
    };
    // wait for any in-flight feedback to finish before closing the stream
    let _guard = live.session.lock().await;
    live.close();
    Ok(StatusCode::NO_CONTENT)
}

fn trial_event(record: &TrialRecord) -> Event {
    Event::default()
        .event("trial")
        .id(record.trial.to_string())
        .json_data(record)
        .expect("trial records serialize")
}

struct Cursor {
    live: Arc<LiveSession>,
    next: usize,
    bell: watch::Receiver<u64>,
    finished: bool,
}

async fn stream(
    State(state): State<AppState>,
    Path(token): Path<String>,
    Query(query): Query<StreamQuery>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let live = state.live(&token)?;
    let cursor = Cursor {
        bell: live.bell.subscribe(),
        live,
        next: query.from,
        finished: false,
    };
    let events = futures::stream::unfold(cursor, |mut c| async move {
        if c.finished {
            return None;
        }
        loop {
            {
                let log = c.live.log.lock().unwrap();
                if let Some(record) = log.records.get(c.next) {
                    let event = trial_event(record);
                    drop(log);
                    c.next += 1;
                    return Some((Ok(event), c));
                }
                if log.closed {
                    drop(log);
                    c.finished = true;
                    let end = Event::default().event("end").data(c.next.to_string());
                    return Some((Ok(end), c));
                }
            }
            if c.bell.changed().await.is_err() {
                c.finished = true;
                return Some((Ok(Event::default().event("end").data(c.next.to_string())), c));
            }
        }
    });
    let keep_alive = KeepAlive::new()
        .interval(state.inner.heartbeat)
        .event(Event::default().event("heartbeat").data(""));
    Ok(Sse::new(events).keep_alive(keep_alive))
}
