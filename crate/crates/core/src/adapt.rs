//! Reward, dual Q-tables and online adaptation of rule consequents and
//! Gaussian means.
//!
//! A correction above the suggestion means the light was too dark, below
//! means too bright. Each case has its own Q-table over the 180 antecedent
//! states and nine intensity levels, and both store non-positive rewards.
//! The table in use also fixes the direction of the parameter step: "too
//! bright" lowers the output, "too dark" raises it.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_2_PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{FiringVector, Fis};
use crate::membership::MfKind;
use crate::rules::{combination_index, OUTPUT_LEVELS};
use crate::variables::{InputState, VariableKind, Variables};

/// Suggestion and correction closer than this count as equal.
pub const MATCH_TOLERANCE: f64 = 1e-9;

pub const ACTIONS: usize = OUTPUT_LEVELS.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableUsed {
    Bright,
    Dark,
    None,
}

impl TableUsed {
    /// Sign applied to the learning signal: a bright correction lowers the
    /// output, a dark one raises it.
    pub fn direction(self) -> f64 {
        match self {
            TableUsed::Bright => 1.0,
            TableUsed::Dark => -1.0,
            TableUsed::None => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TableUsed::Bright => "bright",
            TableUsed::Dark => "dark",
            TableUsed::None => "none",
        }
    }
}

/// `-(2/pi) * atan(eps * |suggested - target|)`, with the table chosen by
/// the sign of the error. Always in `(-1, 0]`.
pub fn reward(suggested: f64, target: f64, epsilon_bias: f64) -> (f64, TableUsed) {
    let diff = suggested - target;
    if diff.abs() <= MATCH_TOLERANCE {
        return (0.0, TableUsed::None);
    }
    let r = -FRAC_2_PI * (epsilon_bias * diff.abs()).atan();
    let table = if diff > 0.0 {
        TableUsed::Bright
    } else {
        TableUsed::Dark
    };
    (r, table)
}

/// Index of the antecedent combination with the largest joint membership.
/// Ties go to the lower set index.
pub fn state_index(x: &InputState, variables: &Variables) -> usize {
    let mut digits = [0usize; 4];
    for (slot, kind) in digits.iter_mut().zip(VariableKind::ALL) {
        let degrees = variables.get(kind).degrees(x.value(kind));
        let mut best = 0;
        for (i, &d) in degrees.iter().enumerate() {
            if d > degrees[best] {
                best = i;
            }
        }
        *slot = best;
    }
    combination_index(digits, variables.radix())
}

/// Nearest intensity level; exact midpoints round down.
pub fn action_index(intensity: f64) -> usize {
    let step = OUTPUT_LEVELS[1] - OUTPUT_LEVELS[0];
    let t = (intensity / step).clamp(0.0, (ACTIONS - 1) as f64);
    let lo = t.floor();
    let idx = if t - lo > 0.5 { lo + 1.0 } else { lo };
    idx as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DriveSignal {
    /// Parameters move with the signed reward. Keeps learning while the
    /// user keeps correcting.
    #[default]
    Reward,
    /// Parameters move with the signed TD error. With no state transition
    /// the TD error decays as the Q cell absorbs the reward.
    TdError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub eta_k: f64,
    pub eta_m: f64,
    pub eta_q: f64,
    pub gamma: f64,
    pub epsilon_bias: f64,
    #[serde(default)]
    pub drive: DriveSignal,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            eta_k: 0.1,
            eta_m: 0.002,
            eta_q: 0.1,
            gamma: 0.1,
            epsilon_bias: 5.0,
            drive: DriveSignal::Reward,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eta_k", self.eta_k),
            ("eta_m", self.eta_m),
            ("eta_q", self.eta_q),
            ("epsilon_bias", self.epsilon_bias),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.gamma.is_finite() && (0.0..1.0).contains(&self.gamma)) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be in [0, 1), got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTablePair {
    pub bright: Vec<[f64; ACTIONS]>,
    pub dark: Vec<[f64; ACTIONS]>,
}

impl QTablePair {
    pub fn new(states: usize) -> Self {
        Self {
            bright: vec![[0.0; ACTIONS]; states],
            dark: vec![[0.0; ACTIONS]; states],
        }
    }

    pub fn states(&self) -> usize {
        self.bright.len()
    }

    pub fn table(&self, which: TableUsed) -> Option<&[[f64; ACTIONS]]> {
        match which {
            TableUsed::Bright => Some(&self.bright),
            TableUsed::Dark => Some(&self.dark),
            TableUsed::None => None,
        }
    }

    fn table_mut(&mut self, which: TableUsed) -> Option<&mut Vec<[f64; ACTIONS]>> {
        match which {
            TableUsed::Bright => Some(&mut self.bright),
            TableUsed::Dark => Some(&mut self.dark),
            TableUsed::None => None,
        }
    }

    pub fn value(&self, which: TableUsed, state: usize, action: usize) -> f64 {
        self.table(which).map_or(0.0, |t| t[state][action])
    }

    pub fn validate(&self, states: usize) -> Result<()> {
        if self.bright.len() != states || self.dark.len() != states {
            return Err(Error::InvalidConfig(format!(
                "q-tables must have {states} states, found {} / {}",
                self.bright.len(),
                self.dark.len()
            )));
        }
        let finite = self
            .bright
            .iter()
            .chain(&self.dark)
            .flat_map(|row| row.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig("q-tables contain non-finite values".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    /// Output the engine suggested for `state`.
    pub suggested: f64,
    /// Intensity the user corrected it to.
    pub target: f64,
    pub state: InputState,
}

impl FeedbackEvent {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("suggested", self.suggested), ("target", self.target)] {
            if !(v.is_finite() && (0.0..=100.0).contains(&v)) {
                return Err(Error::InvalidInput(format!("{name} intensity {v} outside [0, 100]")));
            }
        }
        self.state.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdOutcome {
    pub reward: f64,
    pub table: TableUsed,
    pub state: usize,
    pub action: usize,
    /// Cell value read before the write.
    pub q_value: f64,
    pub td_error: f64,
}

/// One temporal-difference write into the selected table:
/// `delta = r + gamma * max_a Q(s, a) - Q(s, a_t)`, `Q(s, a_t) += eta_q * delta`.
/// No write happens when suggestion and correction match.
pub fn td_update(
    tables: &mut QTablePair,
    event: &FeedbackEvent,
    cfg: &LearnerConfig,
    variables: &Variables,
) -> TdOutcome {
    let (r, table) = reward(event.suggested, event.target, cfg.epsilon_bias);
    let state = state_index(&event.state, variables);
    let action = action_index(event.suggested);
    let Some(t) = tables.table_mut(table) else {
        return TdOutcome {
            reward: r,
            table,
            state,
            action,
            q_value: 0.0,
            td_error: 0.0,
        };
    };
    let row = &mut t[state];
    let q = row[action];
    let v = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let delta = r + cfg.gamma * v - q;
    row[action] = q + cfg.eta_q * delta;
    TdOutcome {
        reward: r,
        table,
        state,
        action,
        q_value: q,
        td_error: delta,
    }
}

/// `(k_j - reference) / sum(w) * w_j * (x - m) / sigma^2`: the mean-update
/// factor for one rule. With `reference` equal to the current output this
/// is the exact partial derivative of the output w.r.t. the mean.
pub fn mean_gradient_factor(
    weight: f64,
    total_weight: f64,
    k: f64,
    reference: f64,
    x: f64,
    mean: f64,
    sigma: f64,
) -> f64 {
    (k - reference) / total_weight * weight * (x - mean) / (sigma * sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanDelta {
    pub variable: VariableKind,
    pub mf: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParameterDeltas {
    /// Applied change per fired rule id.
    pub k_deltas: BTreeMap<usize, f64>,
    pub m_deltas: Vec<MeanDelta>,
}

/// Gradient step on consequents and adaptable means.
///
/// `drive` is the signed learning signal; `q_value` is the Q cell read
/// before the TD write. All deltas are computed from the pre-step
/// parameters and then applied; `k` is clamped to `[0, 100]` and means are
/// kept inside their domain and in order.
pub fn adapt_parameters(
    fis: &mut Fis,
    firing: &FiringVector,
    drive: f64,
    q_value: f64,
    x: &InputState,
    cfg: &LearnerConfig,
) -> ParameterDeltas {
    let mut out = ParameterDeltas::default();
    if drive == 0.0 {
        return out;
    }

    let mut mean_steps: BTreeMap<(VariableKind, usize), f64> = BTreeMap::new();
    for j in firing.fired() {
        let rule = fis.rules.get(j).expect("firing vector matches rule base");
        for (kind, &mf_idx) in VariableKind::ALL.iter().zip(&rule.antecedent) {
            let var = fis.variables.get(*kind);
            let mf = &var.mfs[mf_idx];
            if mf.kind != MfKind::Gaussian || !mf.adaptable {
                continue;
            }
            let xi = var.clamp_input(x.value(*kind));
            let g = mean_gradient_factor(
                firing.weights[j],
                firing.total,
                rule.k,
                q_value,
                xi,
                mf.mean,
                mf.sigma,
            );
            *mean_steps.entry((*kind, mf_idx)).or_default() += cfg.eta_m * drive * g;
        }
    }

    for j in firing.fired() {
        let old = fis.rules.get(j).map(|r| r.k).unwrap_or_default();
        let new = fis
            .rules
            .set_consequent(j, old + cfg.eta_k * drive * firing.normalized[j]);
        out.k_deltas.insert(j, new - old);
    }

    for ((kind, mf), step) in mean_steps {
        if step == 0.0 {
            continue;
        }
        let old = fis.variables.get(kind).mfs[mf].mean;
        let new = fis.variables.set_mean(kind, mf, old + step);
        out.m_deltas.push(MeanDelta {
            variable: kind,
            mf,
            delta: new - old,
        });
    }
    out
}

/// Everything one feedback cycle did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationDelta {
    pub reward: f64,
    pub td_error: f64,
    /// Signed signal the parameters moved with.
    pub drive: f64,
    pub table_used: TableUsed,
    pub state: usize,
    pub action: usize,
    pub q_value: f64,
    pub k_deltas: BTreeMap<usize, f64>,
    pub m_deltas: Vec<MeanDelta>,
}

/// firing -> reward -> Q snapshot -> TD write -> parameter step.
pub fn adaptation_step(
    fis: &mut Fis,
    tables: &mut QTablePair,
    event: &FeedbackEvent,
    cfg: &LearnerConfig,
) -> Result<AdaptationDelta> {
    event.validate()?;
    let firing = fis.firing_strengths(&event.state)?;
    let td = td_update(tables, event, cfg, &fis.variables);
    let signal = match cfg.drive {
        DriveSignal::Reward => td.reward,
        DriveSignal::TdError => td.td_error,
    };
    let drive = td.table.direction() * signal;
    let params = adapt_parameters(fis, &firing, drive, td.q_value, &event.state, cfg);
    Ok(AdaptationDelta {
        reward: td.reward,
        td_error: td.td_error,
        drive,
        table_used: td.table,
        state: td.state,
        action: td.action,
        q_value: td.q_value,
        k_deltas: params.k_deltas,
        m_deltas: params.m_deltas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variables::{build_default_variables, Activity, Chronotype};

    fn set1() -> InputState {
        InputState::new(22.0, 22.0, Activity::Entertainment, Chronotype::Evening)
    }

    #[test]
    fn reward_examples() {
        let (r, t) = reward(99.99203, 100.0, 5.0);
        assert_eq!(t, TableUsed::Dark);
        assert!((r - -0.0254).abs() < 5e-5, "{r}");
        let (r, t) = reward(100.005, 100.0, 5.0);
        assert_eq!(t, TableUsed::Bright);
        assert!((r - -0.0159).abs() < 5e-5, "{r}");
        assert_eq!(reward(100.0, 100.0, 5.0), (0.0, TableUsed::None));
        let (r, t) = reward(75.0, 62.0, 5.0);
        assert_eq!(t, TableUsed::Bright);
        assert!((r - -0.990).abs() < 5e-4, "{r}");
    }

    #[test]
    fn state_indices() {
        let vars = build_default_variables();
        let on_means = InputState::new(22.0, 30.0, Activity::Entertainment, Chronotype::Evening);
        assert_eq!(state_index(&on_means, &vars), 89);
        let lowest = InputState::new(14.0, 10.0, Activity::Sleeping, Chronotype::Morning);
        assert_eq!(state_index(&lowest, &vars), 0);
        let highest = InputState::new(29.0, 75.0, Activity::Entertainment, Chronotype::Evening);
        assert_eq!(state_index(&highest, &vars), 179);
        // age 20 is equidistant from 10 and 30: lower set wins
        let tie = InputState::new(22.0, 20.0, Activity::Entertainment, Chronotype::Evening);
        assert_eq!(state_index(&tie, &vars), 89 - 9);
    }

    #[test]
    fn action_indices() {
        assert_eq!(action_index(75.0), 6);
        assert_eq!(action_index(99.99203), 8);
        assert_eq!(action_index(18.75), 1);
        assert_eq!(action_index(18.76), 2);
        assert_eq!(action_index(0.0), 0);
        assert_eq!(action_index(100.0), 8);
    }

    #[test]
    fn td_update_on_fresh_table() {
        let vars = build_default_variables();
        let mut tables = QTablePair::new(180);
        let cfg = LearnerConfig::default();
        // reward -0.5 needs atan(5 * d) = pi/4, i.e. d = 0.2
        let ev = FeedbackEvent {
            suggested: 75.2,
            target: 75.0,
            state: set1(),
        };
        let out = td_update(&mut tables, &ev, &cfg, &vars);
        assert!((out.reward - -0.5).abs() < 1e-12);
        assert!((out.td_error - -0.5).abs() < 1e-12);
        assert!((tables.bright[out.state][out.action] - -0.05).abs() < 1e-12);
        assert!(tables.dark.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn td_fixed_points() {
        let vars = build_default_variables();
        let cfg = LearnerConfig::default();
        let mut tables = QTablePair::new(180);
        let same = FeedbackEvent {
            suggested: 75.0,
            target: 75.0,
            state: set1(),
        };
        let out = td_update(&mut tables, &same, &cfg, &vars);
        assert_eq!(out.td_error, 0.0);
        assert_eq!(tables, QTablePair::new(180));

        // Put Q(s, a) = r + gamma * V, with V = 0 from the untouched cells.
        let ev = FeedbackEvent {
            suggested: 75.2,
            target: 75.0,
            state: set1(),
        };
        let s = state_index(&ev.state, &vars);
        let a = action_index(ev.suggested);
        let (r, _) = reward(ev.suggested, ev.target, cfg.epsilon_bias);
        tables.bright[s][a] = r;
        let before = tables.clone();
        let out = td_update(&mut tables, &ev, &cfg, &vars);
        assert!(out.td_error.abs() < 1e-15);
        assert_eq!(tables, before);
    }

    #[test]
    fn zero_drive_changes_nothing() {
        let mut fis = Fis::default();
        let before = fis.clone();
        let firing = fis.firing_strengths(&set1()).unwrap();
        let d = adapt_parameters(&mut fis, &firing, 0.0, 0.0, &set1(), &LearnerConfig::default());
        assert!(d.k_deltas.is_empty() && d.m_deltas.is_empty());
        assert_eq!(fis, before);
    }

    #[test]
    fn mean_on_input_does_not_move() {
        let mut fis = Fis::default();
        let x = InputState::new(22.0, 30.0, Activity::Entertainment, Chronotype::Evening);
        let firing = fis.firing_strengths(&x).unwrap();
        let d = adapt_parameters(&mut fis, &firing, -0.8, -0.3, &x, &LearnerConfig::default());
        assert!(d.m_deltas.is_empty(), "{:?}", d.m_deltas);
        assert_eq!(fis.variables.get(VariableKind::Age).mfs[1].mean, 30.0);
        assert_eq!(fis.variables.get(VariableKind::Dgi).mfs[2].mean, 22.0);
    }

    #[test]
    fn too_bright_pushes_mean_away_from_input() {
        // Literal law: drive < 0, k - q > 0, x - m < 0 gives a positive step.
        let mut fis = Fis::default();
        let firing = fis.firing_strengths(&set1()).unwrap();
        adapt_parameters(&mut fis, &firing, -0.99, 0.0, &set1(), &LearnerConfig::default());
        assert!(fis.variables.get(VariableKind::Age).mfs[1].mean > 30.0);
    }

    #[test]
    fn single_bright_step() {
        let mut fis = Fis::default();
        let before = fis.clone();
        let mut tables = QTablePair::new(180);
        let cfg = LearnerConfig::default();
        let ev = FeedbackEvent {
            suggested: 75.0,
            target: 62.0,
            state: set1(),
        };
        let d = adaptation_step(&mut fis, &mut tables, &ev, &cfg).unwrap();
        assert_eq!(d.table_used, TableUsed::Bright);
        let expected = -FRAC_2_PI * 65f64.atan();
        assert!((d.reward - expected).abs() < 1e-15);
        assert!((d.reward - -0.990).abs() < 5e-4);
        assert!(!d.k_deltas.is_empty());
        for (&j, &dk) in &d.k_deltas {
            assert!(dk < 0.0, "rule {j} moved by {dk}");
            assert!(fis.rules.get(j).unwrap().k < before.rules.get(j).unwrap().k);
        }
        let after = fis.infer(&ev.state).unwrap();
        assert!((after - 62.0).abs() < (75.0 - 62.0));
    }

    #[test]
    fn matching_feedback_is_inert() {
        let mut fis = Fis::default();
        let before = fis.clone();
        let mut tables = QTablePair::new(180);
        let ev = FeedbackEvent {
            suggested: 75.0,
            target: 75.0,
            state: set1(),
        };
        let d = adaptation_step(&mut fis, &mut tables, &ev, &LearnerConfig::default()).unwrap();
        assert_eq!(d.table_used, TableUsed::None);
        assert!(d.k_deltas.is_empty());
        assert_eq!(fis, before);
        assert_eq!(tables, QTablePair::new(180));
    }

    #[test]
    fn dark_step_raises_output_and_writes_dark_table() {
        let mut fis = Fis::default();
        let mut tables = QTablePair::new(180);
        let x = InputState::new(14.0, 50.0, Activity::Eating, Chronotype::Morning);
        let ev = FeedbackEvent {
            suggested: 87.5,
            target: 100.0,
            state: x,
        };
        adaptation_step(&mut fis, &mut tables, &ev, &LearnerConfig::default()).unwrap();
        assert!(fis.infer(&x).unwrap() > 87.5);
        assert!(tables.bright.iter().flatten().all(|v| *v == 0.0));
        assert!(tables.dark.iter().flatten().any(|v| *v < 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(LearnerConfig::default().validate().is_ok());
        let bad = [
            LearnerConfig { eta_k: 0.0, ..Default::default() },
            LearnerConfig { eta_m: -1.0, ..Default::default() },
            LearnerConfig { gamma: 1.0, ..Default::default() },
            LearnerConfig { epsilon_bias: f64::NAN, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn out_of_range_feedback_rejected() {
        let mut fis = Fis::default();
        let mut tables = QTablePair::new(180);
        let ev = FeedbackEvent {
            suggested: 75.0,
            target: 101.0,
            state: set1(),
        };
        assert!(adaptation_step(&mut fis, &mut tables, &ev, &LearnerConfig::default()).is_err());
    }
}
