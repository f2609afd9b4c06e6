//! Mutable learning state, feedback sessions and persisted user profiles.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adapt::{adaptation_step, AdaptationDelta, FeedbackEvent, LearnerConfig, QTablePair};
use crate::error::{Error, Result};
use crate::inference::Fis;
use crate::sim::{TrialRecord, TrialTrace};
use crate::variables::{Chronotype, FuzzyVariable, InputState, VariableKind, Variables};

/// Schema tag written into every profile document.
pub const PROFILE_SCHEMA: &str = "cabinlight.profile/v1";

/// Fuzzy system, Q-tables and learning rates for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct Engine {
    pub fis: Fis,
    pub tables: QTablePair,
    pub cfg: LearnerConfig,
}

impl Engine {
    pub fn new(cfg: LearnerConfig) -> Result<Self> {
        Self::with_fis(Fis::default(), cfg)
    }

    pub fn with_fis(fis: Fis, cfg: LearnerConfig) -> Result<Self> {
        cfg.validate()?;
        let tables = QTablePair::new(fis.variables.combinations());
        Ok(Self { fis, tables, cfg })
    }

    pub fn suggest(&self, x: &InputState) -> Result<f64> {
        self.fis.infer(x)
    }

    pub fn learn(&mut self, event: &FeedbackEvent) -> Result<AdaptationDelta> {
        adaptation_step(&mut self.fis, &mut self.tables, event, &self.cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    pub profile_id: String,
    pub age: f64,
    pub chronotype: Chronotype,
    pub engine: Engine,
    pub revision: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeansDoc {
    dgi: Vec<f64>,
    age: Vec<f64>,
    activity: Vec<f64>,
    chronotype: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    schema: String,
    profile_id: String,
    revision: u64,
    age: f64,
    chronotype: Chronotype,
    config: LearnerConfig,
    activation_floor: f64,
    means: MeansDoc,
    consequents: Vec<f64>,
    q_tables: QTablePair,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptProfile(msg.into())
}

impl UserProfile {
    pub fn new(
        profile_id: impl Into<String>,
        age: f64,
        chronotype: Chronotype,
        cfg: LearnerConfig,
    ) -> Result<Self> {
        if !(age.is_finite() && age >= 0.0) {
            return Err(Error::InvalidInput(format!("age must be non-negative, got {age}")));
        }
        Ok(Self {
            profile_id: profile_id.into(),
            age,
            chronotype,
            engine: Engine::new(cfg)?,
            revision: 0,
        })
    }

    /// Re-checks every invariant of the contained state.
    pub fn validate(&self) -> Result<()> {
        if !(self.age.is_finite() && self.age >= 0.0) {
            return Err(corrupt(format!("age {} is invalid", self.age)));
        }
        let e = &self.engine;
        e.cfg.validate().map_err(|err| corrupt(err.to_string()))?;
        let vars = &e.fis.variables;
        for var in vars.iter() {
            var.validate().map_err(|err| corrupt(err.to_string()))?;
        }
        if e.fis.rules.len() != vars.combinations() {
            return Err(corrupt(format!(
                "expected {} rules, found {}",
                vars.combinations(),
                e.fis.rules.len()
            )));
        }
        if e.fis.rules.iter().any(|r| !(0.0..=100.0).contains(&r.k)) {
            return Err(corrupt("consequent outside [0, 100]"));
        }
        if !(0.0..1.0).contains(&e.fis.activation_floor) {
            return Err(corrupt("activation floor outside [0, 1)"));
        }
        e.tables
            .validate(vars.combinations())
            .map_err(|err| corrupt(err.to_string()))?;
        Ok(())
    }

    fn to_doc(&self) -> ProfileDoc {
        let vars = &self.engine.fis.variables;
        let means = |k: VariableKind| vars.get(k).mfs.iter().map(|m| m.mean).collect();
        ProfileDoc {
            schema: PROFILE_SCHEMA.to_string(),
            profile_id: self.profile_id.clone(),
            revision: self.revision,
            age: self.age,
            chronotype: self.chronotype,
            config: self.engine.cfg.clone(),
            activation_floor: self.engine.fis.activation_floor,
            means: MeansDoc {
                dgi: means(VariableKind::Dgi),
                age: means(VariableKind::Age),
                activity: means(VariableKind::Activity),
                chronotype: means(VariableKind::Chronotype),
            },
            consequents: self.engine.fis.rules.consequents(),
            q_tables: self.engine.tables.clone(),
        }
    }

    fn from_doc(doc: ProfileDoc) -> Result<Self> {
        if doc.schema != PROFILE_SCHEMA {
            return Err(corrupt(format!(
                "schema `{}` is not `{PROFILE_SCHEMA}`",
                doc.schema
            )));
        }
        let mut fis = Fis::default();
        let defaults = fis.variables.clone();
        let rebuilt = |kind: VariableKind, means: &[f64]| -> Result<FuzzyVariable> {
            let mut var = defaults.get(kind).clone();
            if means.len() != var.mfs.len() {
                return Err(corrupt(format!(
                    "{kind} needs {} means, found {}",
                    var.mfs.len(),
                    means.len()
                )));
            }
            for (mf, &m) in var.mfs.iter_mut().zip(means) {
                if !kind.is_categorical() && !(var.domain.0..=var.domain.1).contains(&m) {
                    return Err(corrupt(format!("{kind} mean {m} outside its domain")));
                }
                if kind.is_categorical() && m != mf.mean {
                    return Err(corrupt(format!("{kind} code {m} does not match `{}`", mf.label)));
                }
                mf.mean = m;
            }
            Ok(var)
        };
        let variables = Variables::new([
            rebuilt(VariableKind::Dgi, &doc.means.dgi)?,
            rebuilt(VariableKind::Age, &doc.means.age)?,
            rebuilt(VariableKind::Activity, &doc.means.activity)?,
            rebuilt(VariableKind::Chronotype, &doc.means.chronotype)?,
        ])
        .map_err(|err| corrupt(err.to_string()))?;
        if doc.consequents.len() != variables.combinations() {
            return Err(corrupt(format!(
                "expected {} consequents, found {}",
                variables.combinations(),
                doc.consequents.len()
            )));
        }
        fis.variables = variables;
        fis.rules
            .set_consequents(&doc.consequents)
            .map_err(|err| corrupt(err.to_string()))?;
        fis.activation_floor = doc.activation_floor;
        let profile = Self {
            profile_id: doc.profile_id,
            age: doc.age,
            chronotype: doc.chronotype,
            engine: Engine {
                fis,
                tables: doc.q_tables,
                cfg: doc.config,
            },
            revision: doc.revision,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("profile serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProfileDoc = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
        Self::from_doc(doc)
    }

    /// Writes to a temporary sibling and renames it into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.to_json().as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

/// Result of one accepted correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackOutcome {
    pub delta: AdaptationDelta,
    pub record: TrialRecord,
    pub next_suggestion: f64,
}

/// A live control loop over one profile.
#[derive(Debug, Clone)]
pub struct Session {
    profile: UserProfile,
    input: InputState,
    last_suggestion: Option<f64>,
    trace: TrialTrace,
}

impl Session {
    /// Opens a session and computes the first suggestion.
    pub fn open(profile: UserProfile, input: InputState) -> Result<Self> {
        let mut session = Self::attach(profile, input)?;
        session.refresh()?;
        Ok(session)
    }

    /// Opens a session without computing a suggestion yet; feedback is
    /// refused until [`Session::refresh`] runs.
    pub fn attach(profile: UserProfile, input: InputState) -> Result<Self> {
        profile.validate()?;
        input.validate()?;
        let labels = profile.engine.fis.variables.adaptable_labels();
        Ok(Self {
            profile,
            input,
            last_suggestion: None,
            trace: TrialTrace::new(labels),
        })
    }

    pub fn refresh(&mut self) -> Result<f64> {
        let s = self.profile.engine.suggest(&self.input)?;
        self.last_suggestion = Some(s);
        Ok(s)
    }

    pub fn suggestion(&self) -> Option<f64> {
        self.last_suggestion
    }

    pub fn input(&self) -> &InputState {
        &self.input
    }

    pub fn profile(&self) -> &UserProfile {
        &self.profile
    }

    pub fn trace(&self) -> &TrialTrace {
        &self.trace
    }

    pub fn into_profile(self) -> UserProfile {
        self.profile
    }

    pub fn submit_feedback(&mut self, corrected: f64) -> Result<FeedbackOutcome> {
        let suggested = self.last_suggestion.ok_or(Error::NoPendingSuggestion)?;
        if !(corrected.is_finite() && (0.0..=100.0).contains(&corrected)) {
            return Err(Error::InvalidInput(format!(
                "corrected intensity {corrected} outside [0, 100]"
            )));
        }
        let event = FeedbackEvent {
            suggested,
            target: corrected,
            state: self.input,
        };
        let delta = self.profile.engine.learn(&event)?;
        let next = self.refresh()?;
        self.profile.revision += 1;
        let record = TrialRecord::new(
            self.trace.records.len() + 1,
            &event,
            &delta,
            self.profile.engine.fis.variables.adaptable_means(),
        );
        self.trace.records.push(record.clone());
        Ok(FeedbackOutcome {
            delta,
            record,
            next_suggestion: next,
        })
    }

    /// Replaces the input and recomputes the suggestion. Never adapts.
    pub fn change_context(&mut self, input: InputState) -> Result<f64> {
        input.validate()?;
        let s = self.profile.engine.suggest(&input)?;
        self.input = input;
        self.last_suggestion = Some(s);
        Ok(s)
    }
}
