//! Simulated users and the learning-rate experiment harness.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::adapt::{AdaptationDelta, FeedbackEvent, LearnerConfig, TableUsed};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::variables::{Activity, Chronotype, InputState};

/// How a simulated user answers a suggestion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UserPolicy {
    /// Always answers with the true preference.
    FullCorrection,
    /// Moves the suggestion `fraction` of the way toward the preference.
    PartialCorrection { fraction: f64 },
    /// True preference plus Gaussian noise, clamped to `[0, 100]`.
    Noisy { stddev: f64 },
    /// Accepts anything within `width` of the preference, otherwise corrects fully.
    AcceptBand { width: f64 },
}

impl UserPolicy {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            UserPolicy::FullCorrection => true,
            UserPolicy::PartialCorrection { fraction } => fraction > 0.0 && fraction <= 1.0,
            UserPolicy::Noisy { stddev } => stddev.is_finite() && stddev >= 0.0,
            UserPolicy::AcceptBand { width } => width.is_finite() && width >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidExperiment(format!("bad policy parameters: {self:?}")))
        }
    }
}

impl FromStr for UserPolicy {
    type Err = Error;

    /// `full`, `partial:<fraction>`, `noisy:<stddev>` or `band:<width>`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let num = || -> Result<f64> {
            arg.ok_or_else(|| Error::InvalidExperiment(format!("policy `{name}` needs a parameter")))?
                .parse()
                .map_err(|_| Error::InvalidExperiment(format!("bad policy parameter in `{s}`")))
        };
        let policy = match name {
            "full" => UserPolicy::FullCorrection,
            "partial" => UserPolicy::PartialCorrection { fraction: num()? },
            "noisy" => UserPolicy::Noisy { stddev: num()? },
            "band" => UserPolicy::AcceptBand { width: num()? },
            other => {
                return Err(Error::InvalidExperiment(format!(
                    "unknown policy `{other}` (expected full, partial, noisy or band)"
                )))
            }
        };
        policy.validate()?;
        Ok(policy)
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedUser {
    pub true_preference: f64,
    pub policy: UserPolicy,
    pub seed: u64,
    rng: ChaCha8Rng,
}

impl PartialEq for SimulatedUser {
    fn eq(&self, other: &Self) -> bool {
        self.true_preference == other.true_preference
            && self.policy == other.policy
            && self.seed == other.seed
    }
}

impl SimulatedUser {
    pub fn new(true_preference: f64, policy: UserPolicy, seed: u64) -> Result<Self> {
        if !(0.0..=100.0).contains(&true_preference) {
            return Err(Error::InvalidExperiment(format!(
                "preference {true_preference} outside [0, 100]"
            )));
        }
        policy.validate()?;
        Ok(Self {
            true_preference,
            policy,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn respond(&mut self, suggested: f64) -> f64 {
        let p = self.true_preference;
        match self.policy {
            UserPolicy::FullCorrection => p,
            UserPolicy::PartialCorrection { fraction } => suggested + fraction * (p - suggested),
            UserPolicy::Noisy { stddev } => {
                if stddev == 0.0 {
                    return p;
                }
                let noise = Normal::new(0.0, stddev).expect("stddev validated");
                (p + noise.sample(&mut self.rng)).clamp(0.0, 100.0)
            }
            UserPolicy::AcceptBand { width } => {
                if (suggested - p).abs() <= width {
                    suggested
                } else {
                    p
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub input: InputState,
    pub user: SimulatedUser,
    pub cfg: LearnerConfig,
    pub max_trials: usize,
    pub convergence_tol: f64,
    /// Consecutive in-tolerance suggestions needed to call it converged.
    pub window: usize,
}

impl ExperimentSpec {
    pub fn new(input: InputState, user: SimulatedUser, cfg: LearnerConfig) -> Self {
        Self {
            input,
            user,
            cfg,
            max_trials: 500,
            convergence_tol: 0.5,
            window: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.input.validate()?;
        self.cfg.validate()?;
        self.user.policy.validate()?;
        if self.max_trials == 0 || self.window == 0 {
            return Err(Error::InvalidExperiment("max_trials and window must be positive".into()));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol >= 0.0) {
            return Err(Error::InvalidExperiment("convergence tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

/// The three reference scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentPreset {
    /// Young evening person watching TV, wants it dimmer.
    Set1,
    /// Older morning person eating in glare, wants it at full.
    Set2,
    /// Young evening person about to sleep, wants it brighter.
    Set3,
}

impl ExperimentPreset {
    pub const ALL: [ExperimentPreset; 3] = [Self::Set1, Self::Set2, Self::Set3];

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn number(self) -> u8 {
        match self {
            Self::Set1 => 1,
            Self::Set2 => 2,
            Self::Set3 => 3,
        }
    }

    pub fn input(self) -> InputState {
        match self {
            Self::Set1 => InputState::new(22.0, 22.0, Activity::Entertainment, Chronotype::Evening),
            Self::Set2 => InputState::new(14.0, 50.0, Activity::Eating, Chronotype::Morning),
            Self::Set3 => InputState::new(22.0, 27.0, Activity::Sleeping, Chronotype::Evening),
        }
    }

    pub fn preference(self) -> f64 {
        match self {
            Self::Set1 => 62.0,
            Self::Set2 => 100.0,
            Self::Set3 => 35.0,
        }
    }

    pub fn spec(self, cfg: LearnerConfig, seed: u64) -> ExperimentSpec {
        let user = SimulatedUser::new(self.preference(), UserPolicy::FullCorrection, seed)
            .expect("preset preferences are in range");
        ExperimentSpec::new(self.input(), user, cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub suggested: f64,
    pub target: f64,
    pub reward: f64,
    pub td_error: f64,
    pub table: TableUsed,
    /// Adaptable means after this trial's update.
    pub means: Vec<f64>,
}

impl TrialRecord {
    pub fn new(trial: usize, event: &FeedbackEvent, delta: &AdaptationDelta, means: Vec<f64>) -> Self {
        Self {
            trial,
            suggested: event.suggested,
            target: event.target,
            reward: delta.reward,
            td_error: delta.td_error,
            table: delta.table_used,
            means,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTrace {
    pub records: Vec<TrialRecord>,
    /// First trial of the first qualifying in-tolerance run.
    pub converged_at: Option<usize>,
    pub mean_labels: Vec<String>,
}

impl TrialTrace {
    pub fn new(mean_labels: Vec<String>) -> Self {
        Self {
            records: Vec::new(),
            converged_at: None,
            mean_labels,
        }
    }

    pub fn last(&self) -> Option<&TrialRecord> {
        self.records.last()
    }

    /// Comma-separated table with one row per trial.
    pub fn to_delimited(&self) -> String {
        let mut out = String::from("trial,suggested,target,reward,td_error,table");
        for label in &self.mean_labels {
            out.push_str(",m_");
            out.push_str(label);
        }
        out.push('\n');
        for r in &self.records {
            write!(
                out,
                "{},{},{},{},{},{}",
                r.trial,
                r.suggested,
                r.target,
                r.reward,
                r.td_error,
                r.table.as_str()
            )
            .unwrap();
            for m in &r.means {
                write!(out, ",{m}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Steps an experiment one trial at a time so callers can pause and resume.
#[derive(Debug, Clone)]
pub struct ExperimentRunner {
    spec: ExperimentSpec,
    user: SimulatedUser,
    trace: TrialTrace,
    streak: usize,
    done: bool,
}

impl ExperimentRunner {
    pub fn new(spec: ExperimentSpec, engine: &Engine) -> Result<Self> {
        spec.validate()?;
        let user = spec.user.clone();
        let labels = engine.fis.variables.adaptable_labels();
        Ok(Self {
            spec,
            user,
            trace: TrialTrace::new(labels),
            streak: 0,
            done: false,
        })
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn trace(&self) -> &TrialTrace {
        &self.trace
    }

    pub fn into_trace(self) -> TrialTrace {
        self.trace
    }

    /// Runs one trial. Returns `None` once the experiment has finished.
    pub fn step(&mut self, engine: &mut Engine) -> Result<Option<&TrialRecord>> {
        if self.done {
            return Ok(None);
        }
        let suggested = engine.suggest(&self.spec.input)?;
        let target = self.user.respond(suggested);
        let event = FeedbackEvent {
            suggested,
            target,
            state: self.spec.input,
        };
        let delta = engine.learn(&event)?;
        let trial = self.trace.records.len() + 1;
        self.trace.records.push(TrialRecord::new(
            trial,
            &event,
            &delta,
            engine.fis.variables.adaptable_means(),
        ));

        if (suggested - self.user.true_preference).abs() <= self.spec.convergence_tol {
            self.streak += 1;
            if self.streak == self.spec.window {
                self.trace.converged_at = Some(trial + 1 - self.spec.window);
                self.done = true;
            }
        } else {
            self.streak = 0;
        }
        if trial >= self.spec.max_trials {
            self.done = true;
        }
        Ok(self.trace.records.last())
    }

    pub fn run(&mut self, engine: &mut Engine) -> Result<()> {
        while self.step(engine)?.is_some() {}
        Ok(())
    }
}

pub fn run_experiment(spec: &ExperimentSpec, engine: &mut Engine) -> Result<TrialTrace> {
    let mut runner = ExperimentRunner::new(spec.clone(), engine)?;
    runner.run(engine)?;
    Ok(runner.into_trace())
}

/// Runs one fresh engine per learning rate, applying each rate to the
/// consequent and Q-table steps. Runs are independent and parallel.
pub fn learning_rate_sweep(base: &ExperimentSpec, etas: &[f64]) -> Result<Vec<(f64, TrialTrace)>> {
    if etas.is_empty() {
        return Err(Error::InvalidExperiment("no learning rates given".into()));
    }
    for (i, &eta) in etas.iter().enumerate() {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidExperiment(format!("learning rate {eta} must be > 0")));
        }
        if etas[..i].contains(&eta) {
            return Err(Error::InvalidExperiment(format!("learning rate {eta} repeated")));
        }
    }
    base.validate()?;

    let results: Vec<Result<TrialTrace>> = std::thread::scope(|scope| {
        let handles: Vec<_> = etas
            .iter()
            .map(|&eta| {
                scope.spawn(move || {
                    let mut spec = base.clone();
                    spec.cfg.eta_k = eta;
                    spec.cfg.eta_q = eta;
                    let mut engine = Engine::new(spec.cfg.clone())?;
                    run_experiment(&spec, &mut engine)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    etas.iter()
        .zip(results)
        .map(|(&eta, r)| r.map(|t| (eta, t)))
        .collect()
}
