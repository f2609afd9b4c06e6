//! Fuzzy input variables and the crisp input state.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::membership::{MembershipFunction, MfKind, SINGLETON_TOLERANCE};

/// Minimum gap kept between neighbouring means when adaptation moves them.
pub const MEAN_SEPARATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Dgi,
    Age,
    Activity,
    Chronotype,
}

impl VariableKind {
    pub const ALL: [VariableKind; 4] = [
        VariableKind::Dgi,
        VariableKind::Age,
        VariableKind::Activity,
        VariableKind::Chronotype,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            VariableKind::Dgi => "dgi",
            VariableKind::Age => "age",
            VariableKind::Activity => "activity",
            VariableKind::Chronotype => "chronotype",
        }
    }

    pub fn is_categorical(self) -> bool {
        matches!(self, VariableKind::Activity | VariableKind::Chronotype)
    }
}

impl fmt::Display for VariableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VariableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dgi" => Ok(VariableKind::Dgi),
            "age" => Ok(VariableKind::Age),
            "activity" => Ok(VariableKind::Activity),
            "chronotype" => Ok(VariableKind::Chronotype),
            other => Err(Error::UnknownCode {
                variable: "variable",
                value: other.to_string(),
                valid: "dgi, age, activity, chronotype".to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activity {
    Sleeping,
    Eating,
    /// Meetings and entertainment share one category.
    Entertainment,
}

impl Activity {
    pub const ALL: [Activity; 3] = [Activity::Sleeping, Activity::Eating, Activity::Entertainment];

    pub fn code(self) -> f64 {
        match self {
            Activity::Sleeping => 2.0,
            Activity::Eating => 3.0,
            Activity::Entertainment => 5.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Activity::Sleeping => "sleeping",
            Activity::Eating => "eating",
            Activity::Entertainment => "entertainment",
        }
    }

    pub fn from_code(code: f64) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| (a.code() - code).abs() <= SINGLETON_TOLERANCE)
            .ok_or_else(|| Error::UnknownCode {
                variable: "activity",
                value: code.to_string(),
                valid: Self::valid_list(),
            })
    }

    fn valid_list() -> String {
        "sleeping (2), eating (3), entertainment|meeting (5)".to_string()
    }
}

impl FromStr for Activity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "sleeping" | "sleep" => Ok(Activity::Sleeping),
            "eating" | "meal" => Ok(Activity::Eating),
            "entertainment" | "meeting" => Ok(Activity::Entertainment),
            _ => match t.parse::<f64>() {
                Ok(code) => Activity::from_code(code),
                Err(_) => Err(Error::UnknownCode {
                    variable: "activity",
                    value: s.to_string(),
                    valid: Self::valid_list(),
                }),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chronotype {
    Morning,
    Intermediate,
    /// Also accepts "night".
    #[serde(alias = "night")]
    Evening,
}

impl Chronotype {
    pub const ALL: [Chronotype; 3] = [
        Chronotype::Morning,
        Chronotype::Intermediate,
        Chronotype::Evening,
    ];

    pub fn code(self) -> f64 {
        match self {
            Chronotype::Morning => 5.0,
            Chronotype::Intermediate => 15.0,
            Chronotype::Evening => 25.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Chronotype::Morning => "morning",
            Chronotype::Intermediate => "intermediate",
            Chronotype::Evening => "evening",
        }
    }

    pub fn from_code(code: f64) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| (c.code() - code).abs() <= SINGLETON_TOLERANCE)
            .ok_or_else(|| Error::UnknownCode {
                variable: "chronotype",
                value: code.to_string(),
                valid: Self::valid_list(),
            })
    }

    fn valid_list() -> String {
        "morning (5), intermediate (15), evening|night (25)".to_string()
    }
}

impl FromStr for Chronotype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "morning" => Ok(Chronotype::Morning),
            "intermediate" => Ok(Chronotype::Intermediate),
            "evening" | "night" => Ok(Chronotype::Evening),
            _ => match t.parse::<f64>() {
                Ok(code) => Chronotype::from_code(code),
                Err(_) => Err(Error::UnknownCode {
                    variable: "chronotype",
                    value: s.to_string(),
                    valid: Self::valid_list(),
                }),
            },
        }
    }
}

/// The four crisp inputs at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputState {
    pub dgi: f64,
    pub age: f64,
    pub activity: f64,
    pub chronotype: f64,
}

impl InputState {
    pub fn new(dgi: f64, age: f64, activity: Activity, chronotype: Chronotype) -> Self {
        Self {
            dgi,
            age,
            activity: activity.code(),
            chronotype: chronotype.code(),
        }
    }

    /// Builds a state from raw codes, rejecting categorical codes that match
    /// no declared category.
    pub fn from_codes(dgi: f64, age: f64, activity: f64, chronotype: f64) -> Result<Self> {
        let x = Self {
            dgi,
            age,
            activity,
            chronotype,
        };
        x.validate()?;
        Ok(x)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dgi.is_finite() {
            return Err(Error::InvalidInput(format!("dgi must be finite, got {}", self.dgi)));
        }
        if !self.age.is_finite() {
            return Err(Error::InvalidInput(format!("age must be finite, got {}", self.age)));
        }
        Activity::from_code(self.activity)?;
        Chronotype::from_code(self.chronotype)?;
        Ok(())
    }

    pub fn value(&self, kind: VariableKind) -> f64 {
        match kind {
            VariableKind::Dgi => self.dgi,
            VariableKind::Age => self.age,
            VariableKind::Activity => self.activity,
            VariableKind::Chronotype => self.chronotype,
        }
    }

    pub fn set_value(&mut self, kind: VariableKind, value: f64) {
        match kind {
            VariableKind::Dgi => self.dgi = value,
            VariableKind::Age => self.age = value,
            VariableKind::Activity => self.activity = value,
            VariableKind::Chronotype => self.chronotype = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyVariable {
    pub kind: VariableKind,
    pub mfs: Vec<MembershipFunction>,
    /// Closed interval `[lo, hi]`. Numeric inputs are saturated into it.
    pub domain: (f64, f64),
}

impl FuzzyVariable {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::InvalidVariable {
                variable: self.kind.name().to_string(),
                reason,
            })
        };
        if self.mfs.is_empty() {
            return fail("no membership functions".into());
        }
        for mf in &self.mfs {
            mf.validate()?;
            let expect = if self.kind.is_categorical() {
                MfKind::Singleton
            } else {
                MfKind::Gaussian
            };
            if mf.kind != expect {
                return fail(format!("`{}` has the wrong kind", mf.label));
            }
        }
        for pair in self.mfs.windows(2) {
            if pair[1].mean <= pair[0].mean {
                return fail(format!(
                    "means must be strictly increasing (`{}` {} then `{}` {})",
                    pair[0].label, pair[0].mean, pair[1].label, pair[1].mean
                ));
            }
        }
        Ok(())
    }

    /// Saturates a numeric input into the domain; categorical codes pass through.
    pub fn clamp_input(&self, x: f64) -> f64 {
        if self.kind.is_categorical() {
            x
        } else {
            x.clamp(self.domain.0, self.domain.1)
        }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.mfs.iter().position(|mf| mf.label == label)
    }

    pub fn degrees(&self, x: f64) -> Vec<f64> {
        let x = self.clamp_input(x);
        self.mfs.iter().map(|mf| mf.degree(x)).collect()
    }
}

/// The four input variables, in the fixed order dgi, age, activity, chronotype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variables {
    vars: [FuzzyVariable; 4],
}

impl Variables {
    pub fn new(vars: [FuzzyVariable; 4]) -> Result<Self> {
        for (kind, var) in VariableKind::ALL.iter().zip(&vars) {
            if var.kind != *kind {
                return Err(Error::InvalidVariable {
                    variable: var.kind.name().to_string(),
                    reason: format!("expected `{kind}` in this position"),
                });
            }
            var.validate()?;
        }
        Ok(Self { vars })
    }

    pub fn get(&self, kind: VariableKind) -> &FuzzyVariable {
        &self.vars[kind.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = &FuzzyVariable> {
        self.vars.iter()
    }

    /// Number of sets per variable.
    pub fn radix(&self) -> [usize; 4] {
        [
            self.vars[0].mfs.len(),
            self.vars[1].mfs.len(),
            self.vars[2].mfs.len(),
            self.vars[3].mfs.len(),
        ]
    }

    pub fn combinations(&self) -> usize {
        self.radix().iter().product()
    }

    /// Moves an adaptable mean, keeping it inside the domain and strictly
    /// between its neighbours. Returns the value actually stored.
    pub fn set_mean(&mut self, kind: VariableKind, mf: usize, mean: f64) -> f64 {
        let var = &mut self.vars[kind.index()];
        let mut lo = var.domain.0;
        let mut hi = var.domain.1;
        if mf > 0 {
            lo = lo.max(var.mfs[mf - 1].mean + MEAN_SEPARATION);
        }
        if mf + 1 < var.mfs.len() {
            hi = hi.min(var.mfs[mf + 1].mean - MEAN_SEPARATION);
        }
        let old = var.mfs[mf].mean;
        let next = if lo <= hi { mean.clamp(lo, hi) } else { old };
        var.mfs[mf].mean = next;
        next
    }

    /// Means of every Gaussian set, dgi first then age.
    pub fn adaptable_means(&self) -> Vec<f64> {
        self.vars
            .iter()
            .flat_map(|v| v.mfs.iter())
            .filter(|mf| mf.kind == MfKind::Gaussian)
            .map(|mf| mf.mean)
            .collect()
    }

    /// Labels matching [`Variables::adaptable_means`], e.g. `age:20-40`.
    pub fn adaptable_labels(&self) -> Vec<String> {
        self.vars
            .iter()
            .flat_map(|v| {
                v.mfs
                    .iter()
                    .filter(|mf| mf.kind == MfKind::Gaussian)
                    .map(move |mf| format!("{}:{}", v.kind, mf.label))
            })
            .collect()
    }
}

impl Default for Variables {
    fn default() -> Self {
        build_default_variables()
    }
}

pub const DGI_DOMAIN: (f64, f64) = (10.0, 32.0);
pub const AGE_DOMAIN: (f64, f64) = (0.0, 100.0);

/// Membership functions for glare index, age, activity and chronotype.
pub fn build_default_variables() -> Variables {
    let dgi = FuzzyVariable {
        kind: VariableKind::Dgi,
        mfs: vec![
            MembershipFunction::gaussian("negligible", 14.0, 1.5),
            MembershipFunction::gaussian("acceptable", 18.0, 1.0),
            MembershipFunction::gaussian("comfortable", 22.0, 1.0),
            MembershipFunction::gaussian("uncomfortable", 25.0, 1.0),
            MembershipFunction::gaussian("very_uncomfortable", 29.0, 1.8),
        ],
        domain: DGI_DOMAIN,
    };
    let age = FuzzyVariable {
        kind: VariableKind::Age,
        mfs: vec![
            MembershipFunction::gaussian("0-20", 10.0, 5.0),
            MembershipFunction::gaussian("20-40", 30.0, 5.0),
            MembershipFunction::gaussian("40-60", 50.0, 5.0),
            MembershipFunction::gaussian("60+", 75.0, 8.0),
        ],
        domain: AGE_DOMAIN,
    };
    let activity = FuzzyVariable {
        kind: VariableKind::Activity,
        mfs: Activity::ALL
            .iter()
            .map(|a| MembershipFunction::singleton(a.label(), a.code()))
            .collect(),
        domain: (2.0, 5.0),
    };
    let chronotype = FuzzyVariable {
        kind: VariableKind::Chronotype,
        mfs: Chronotype::ALL
            .iter()
            .map(|c| MembershipFunction::singleton(c.label(), c.code()))
            .collect(),
        domain: (5.0, 25.0),
    };
    Variables::new([dgi, age, activity, chronotype]).expect("default variables are well formed")
}
