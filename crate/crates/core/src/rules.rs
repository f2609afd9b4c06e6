//! The 180-rule base and its flat text file format.
//!
//! Every combination of one set per input variable gets a rule whose
//! consequent is one of nine intensity levels. Consequents come from an
//! ordinal score: a base level per activity shifted by per-set offsets for
//! glare, age and chronotype, clamped to the level range.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::variables::{Activity, Chronotype, InputState, VariableKind, Variables};

/// Consequent intensity levels, dimmest first.
pub const OUTPUT_LEVELS: [f64; 9] = [0.0, 12.5, 25.0, 37.5, 50.0, 62.5, 75.0, 87.5, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OutputLevel {
    D5,
    D4,
    D3,
    D2,
    D1,
    LU1,
    LU2,
    LU3,
    LU4,
}

impl OutputLevel {
    pub const ALL: [OutputLevel; 9] = [
        OutputLevel::D5,
        OutputLevel::D4,
        OutputLevel::D3,
        OutputLevel::D2,
        OutputLevel::D1,
        OutputLevel::LU1,
        OutputLevel::LU2,
        OutputLevel::LU3,
        OutputLevel::LU4,
    ];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn intensity(self) -> f64 {
        OUTPUT_LEVELS[self.index()]
    }

    pub fn label(self) -> &'static str {
        match self {
            OutputLevel::D5 => "D5",
            OutputLevel::D4 => "D4",
            OutputLevel::D3 => "D3",
            OutputLevel::D2 => "D2",
            OutputLevel::D1 => "D1",
            OutputLevel::LU1 => "LU1",
            OutputLevel::LU2 => "LU2",
            OutputLevel::LU3 => "LU3",
            OutputLevel::LU4 => "LU4",
        }
    }
}

impl fmt::Display for OutputLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub id: usize,
    /// One set index per variable: dgi, age, activity, chronotype.
    pub antecedent: [usize; 4],
    pub k: f64,
    /// Category the consequent was initialised from.
    pub label: OutputLevel,
}

/// Mixed-radix id of an antecedent tuple, glare index most significant.
pub fn combination_index(antecedent: [usize; 4], radix: [usize; 4]) -> usize {
    antecedent
        .iter()
        .zip(radix.iter())
        .fold(0, |acc, (&digit, &base)| acc * base + digit)
}

/// Inverse of [`combination_index`].
pub fn combination_from_index(mut index: usize, radix: [usize; 4]) -> [usize; 4] {
    let mut out = [0; 4];
    for pos in (0..4).rev() {
        out[pos] = index % radix[pos];
        index /= radix[pos];
    }
    out
}

/// Ordinal-score offsets used to derive rule consequents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsequentHeuristic {
    /// Base level index per activity: sleeping, eating, entertainment.
    pub activity_base: Vec<i32>,
    /// Negligible, acceptable, comfortable, uncomfortable, very uncomfortable.
    pub dgi_offset: Vec<i32>,
    /// 0-20, 20-40, 40-60, 60+.
    pub age_offset: Vec<i32>,
    /// Morning, intermediate, evening.
    pub chronotype_offset: Vec<i32>,
}

impl Default for ConsequentHeuristic {
    fn default() -> Self {
        Self {
            activity_base: vec![1, 4, 6],
            dgi_offset: vec![1, 0, 0, -1, -2],
            age_offset: vec![0, 0, 1, 2],
            chronotype_offset: vec![1, 0, 0],
        }
    }
}

impl ConsequentHeuristic {
    fn check_shape(&self, radix: [usize; 4]) -> Result<()> {
        let lens = [
            self.dgi_offset.len(),
            self.age_offset.len(),
            self.activity_base.len(),
            self.chronotype_offset.len(),
        ];
        if lens != radix {
            return Err(Error::InvalidRuleBase(format!(
                "offset tables have shape {lens:?}, variables have {radix:?}"
            )));
        }
        Ok(())
    }

    pub fn level(&self, antecedent: [usize; 4]) -> OutputLevel {
        let [d, a, act, c] = antecedent;
        let score = self.activity_base[act]
            + self.dgi_offset[d]
            + self.age_offset[a]
            + self.chronotype_offset[c];
        OutputLevel::from_index(score.clamp(0, 8) as usize).expect("clamped into range")
    }
}

/// The baseline cases the generated rule base must reproduce:
/// (dgi set, age set, activity, chronotype) -> level.
pub const BASELINE_ANCHORS: [([&str; 4], OutputLevel); 3] = [
    (["comfortable", "20-40", "entertainment", "evening"], OutputLevel::LU2),
    (["negligible", "40-60", "eating", "morning"], OutputLevel::LU3),
    (["comfortable", "20-40", "sleeping", "evening"], OutputLevel::D4),
];

/// Input states sitting on the three baseline anchors.
pub fn baseline_anchor_states() -> [(InputState, f64); 3] {
    [
        (
            InputState::new(22.0, 22.0, Activity::Entertainment, Chronotype::Evening),
            75.0,
        ),
        (InputState::new(14.0, 50.0, Activity::Eating, Chronotype::Morning), 87.5),
        (InputState::new(22.0, 27.0, Activity::Sleeping, Chronotype::Evening), 12.5),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleBase {
    rules: Vec<Rule>,
    radix: [usize; 4],
}

impl RuleBase {
    /// Checks cardinality, ids, antecedent ranges and consequent bounds.
    pub fn from_rules(mut rules: Vec<Rule>, variables: &Variables) -> Result<Self> {
        let radix = variables.radix();
        let expected = variables.combinations();
        if rules.len() != expected {
            return Err(Error::InvalidRuleBase(format!(
                "expected {expected} rules, found {}",
                rules.len()
            )));
        }
        rules.sort_by_key(|r| combination_index(r.antecedent, radix));
        for (i, rule) in rules.iter_mut().enumerate() {
            if rule.antecedent.iter().zip(radix).any(|(&d, r)| d >= r) {
                return Err(Error::InvalidRuleBase(format!(
                    "antecedent {:?} out of range",
                    rule.antecedent
                )));
            }
            if combination_index(rule.antecedent, radix) != i {
                return Err(Error::InvalidRuleBase(format!(
                    "antecedent {:?} is duplicated",
                    rule.antecedent
                )));
            }
            if !(0.0..=100.0).contains(&rule.k) {
                return Err(Error::InvalidRuleBase(format!(
                    "rule {:?} has k = {} outside [0, 100]",
                    rule.antecedent, rule.k
                )));
            }
            rule.id = i;
        }
        Ok(Self { rules, radix })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rule> {
        self.rules.iter()
    }

    pub fn get(&self, id: usize) -> Option<&Rule> {
        self.rules.get(id)
    }

    pub fn radix(&self) -> [usize; 4] {
        self.radix
    }

    pub fn consequents(&self) -> Vec<f64> {
        self.rules.iter().map(|r| r.k).collect()
    }

    /// Sets `k` for one rule, clamped to `[0, 100]`. Returns the stored value.
    pub fn set_consequent(&mut self, id: usize, k: f64) -> f64 {
        let k = k.clamp(0.0, 100.0);
        self.rules[id].k = k;
        k
    }

    pub fn set_consequents(&mut self, ks: &[f64]) -> Result<()> {
        if ks.len() != self.rules.len() {
            return Err(Error::InvalidRuleBase(format!(
                "expected {} consequents, found {}",
                self.rules.len(),
                ks.len()
            )));
        }
        if let Some(bad) = ks.iter().find(|k| !(0.0..=100.0).contains(*k)) {
            return Err(Error::InvalidRuleBase(format!("consequent {bad} outside [0, 100]")));
        }
        for (rule, &k) in self.rules.iter_mut().zip(ks) {
            rule.k = k;
        }
        Ok(())
    }

    pub fn find(&self, antecedent: [usize; 4]) -> Option<&Rule> {
        self.rules.get(combination_index(antecedent, self.radix))
    }
}

fn anchor_tuple(variables: &Variables, labels: [&str; 4]) -> Result<[usize; 4]> {
    let mut out = [0; 4];
    for (slot, (kind, label)) in out.iter_mut().zip(VariableKind::ALL.iter().zip(labels)) {
        *slot = variables.get(*kind).index_of(label).ok_or_else(|| {
            Error::InvalidRuleBase(format!("variable `{kind}` has no set `{label}`"))
        })?;
    }
    Ok(out)
}

/// Generates all 180 rules with the default offsets.
pub fn build_rule_base(variables: &Variables) -> Result<RuleBase> {
    build_rule_base_with(variables, &ConsequentHeuristic::default())
}

pub fn build_rule_base_with(
    variables: &Variables,
    heuristic: &ConsequentHeuristic,
) -> Result<RuleBase> {
    let radix = variables.radix();
    heuristic.check_shape(radix)?;
    let rules = (0..variables.combinations())
        .map(|id| {
            let antecedent = combination_from_index(id, radix);
            let label = heuristic.level(antecedent);
            Rule {
                id,
                antecedent,
                k: label.intensity(),
                label,
            }
        })
        .collect();
    let base = RuleBase::from_rules(rules, variables)?;
    check_anchors(&base, variables)?;
    Ok(base)
}

pub fn check_anchors(base: &RuleBase, variables: &Variables) -> Result<()> {
    for (labels, level) in BASELINE_ANCHORS {
        let tuple = anchor_tuple(variables, labels)?;
        let k = base.find(tuple).map(|r| r.k).unwrap_or(f64::NAN);
        if k != level.intensity() {
            return Err(Error::AnchorMismatch {
                antecedent: labels.join(" "),
                expected: level.intensity(),
                actual: k,
            });
        }
    }
    Ok(())
}

const RULE_FILE_HEADER: &str = "# dgi age activity chronotype k weight";

/// Writes the flat rule table: four set labels, `k` with six decimals and a
/// weight column (always 1).
pub fn export_rules(base: &RuleBase, variables: &Variables) -> String {
    let mut out = String::with_capacity(base.len() * 48);
    out.push_str(RULE_FILE_HEADER);
    out.push('\n');
    for rule in base.iter() {
        for (kind, &idx) in VariableKind::ALL.iter().zip(&rule.antecedent) {
            out.push_str(&variables.get(*kind).mfs[idx].label);
            out.push(' ');
        }
        let _ = writeln!(out, "{:.6} {:.6}", rule.k, 1.0);
    }
    out
}

/// Parses a rule table written by [`export_rules`] (or by hand). Blank
/// lines and `#` comments are ignored. Anchors are not enforced so edited
/// tables can be loaded.
pub fn parse_rules(text: &str, variables: &Variables) -> Result<RuleBase> {
    let mut rules = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::RuleFile {
                line: line_no,
                reason: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let mut antecedent = [0; 4];
        for (i, kind) in VariableKind::ALL.iter().enumerate() {
            antecedent[i] = variables.get(*kind).index_of(fields[i]).ok_or_else(|| {
                Error::RuleFile {
                    line: line_no,
                    reason: format!("`{}` is not a {kind} set", fields[i]),
                }
            })?;
        }
        let k: f64 = fields[4].parse().map_err(|_| Error::RuleFile {
            line: line_no,
            reason: format!("bad k value `{}`", fields[4]),
        })?;
        let _weight: f64 = fields[5].parse().map_err(|_| Error::RuleFile {
            line: line_no,
            reason: format!("bad weight `{}`", fields[5]),
        })?;
        let label = OutputLevel::from_index(crate::adapt::action_index(k.clamp(0.0, 100.0)))
            .expect("action index in range");
        rules.push(Rule {
            id: 0,
            antecedent,
            k,
            label,
        });
    }
    RuleBase::from_rules(rules, variables)
}
