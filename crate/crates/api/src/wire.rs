//! Request and response bodies. Requests reject unknown fields.

use axum::extract::{FromRequest, Request};
use axum::Json;
use cabinlight_core::{
    Activity, Chronotype, DriveSignal, InputState, LearnerConfig, TableUsed, UserProfile,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

/// JSON body extractor that reports every parse failure as 400.
pub struct StrictJson<T>(pub T);

impl<T, S> FromRequest<S> for StrictJson<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(value)) => Ok(StrictJson(value)),
            Err(rejection) => Err(ApiError::BadRequest(rejection.body_text())),
        }
    }
}

/// A categorical value given by name (`"eating"`) or by code (`3`).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Code {
    Name(String),
    Number(f64),
}

impl Code {
    fn activity(&self) -> Result<Activity, ApiError> {
        match self {
            Code::Name(s) => s.parse(),
            Code::Number(n) => Activity::from_code(*n),
        }
        .map_err(ApiError::from)
    }

    fn chronotype(&self) -> Result<Chronotype, ApiError> {
        match self {
            Code::Name(s) => s.parse(),
            Code::Number(n) => Chronotype::from_code(*n),
        }
        .map_err(ApiError::from)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputBody {
    pub dgi: f64,
    pub age: f64,
    pub activity: Code,
    pub chronotype: Code,
}

impl InputBody {
    pub fn to_state(&self) -> Result<InputState, ApiError> {
        let x = InputState::new(
            self.dgi,
            self.age,
            self.activity.activity()?,
            self.chronotype.chronotype()?,
        );
        x.validate()?;
        Ok(x)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputView {
    pub dgi: f64,
    pub age: f64,
    pub activity: &'static str,
    pub chronotype: &'static str,
}

impl From<&InputState> for InputView {
    fn from(x: &InputState) -> Self {
        Self {
            dgi: x.dgi,
            age: x.age,
            activity: Activity::from_code(x.activity).map_or("?", |a| a.label()),
            chronotype: Chronotype::from_code(x.chronotype).map_or("?", |c| c.label()),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub eta_k: Option<f64>,
    pub eta_m: Option<f64>,
    pub eta_q: Option<f64>,
    pub gamma: Option<f64>,
    pub epsilon_bias: Option<f64>,
    pub drive: Option<DriveSignal>,
}

impl ConfigOverrides {
    pub fn apply(&self, base: LearnerConfig) -> LearnerConfig {
        LearnerConfig {
            eta_k: self.eta_k.unwrap_or(base.eta_k),
            eta_m: self.eta_m.unwrap_or(base.eta_m),
            eta_q: self.eta_q.unwrap_or(base.eta_q),
            gamma: self.gamma.unwrap_or(base.gamma),
            epsilon_bias: self.epsilon_bias.unwrap_or(base.epsilon_bias),
            drive: self.drive.unwrap_or(base.drive),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateProfile {
    pub age: f64,
    pub chronotype: Code,
    #[serde(default)]
    pub config: ConfigOverrides,
}

impl CreateProfile {
    pub fn chronotype(&self) -> Result<Chronotype, ApiError> {
        self.chronotype.chronotype()
    }
}

#[derive(Debug, Serialize)]
pub struct ProfileCreated {
    pub profile_id: String,
}

#[derive(Debug, Serialize)]
pub struct ProfileView {
    pub profile_id: String,
    pub revision: u64,
    pub age: f64,
    pub chronotype: &'static str,
    pub config: LearnerConfig,
}

impl From<&UserProfile> for ProfileView {
    fn from(p: &UserProfile) -> Self {
        Self {
            profile_id: p.profile_id.clone(),
            revision: p.revision,
            age: p.age,
            chronotype: p.chronotype.label(),
            config: p.engine.cfg.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpenSession {
    pub profile_id: String,
    pub input: InputBody,
}

#[derive(Debug, Serialize)]
pub struct SessionOpened {
    pub token: String,
    pub suggestion: f64,
}

#[derive(Debug, Serialize)]
pub struct SessionView {
    pub token: String,
    pub profile_id: String,
    pub suggestion: Option<f64>,
    pub input: InputView,
    pub trials: usize,
    pub revision: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackBody {
    pub corrected_intensity: f64,
}

#[derive(Debug, Serialize)]
pub struct FeedbackReply {
    pub trial: usize,
    pub reward: f64,
    pub td_error: f64,
    pub table: TableUsed,
    pub next_suggestion: f64,
    pub revision: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextBody {
    pub input: InputBody,
}

#[derive(Debug, Serialize)]
pub struct ContextReply {
    pub suggestion: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamQuery {
    /// Number of trial events the client has already seen.
    #[serde(default)]
    pub from: usize,
}
