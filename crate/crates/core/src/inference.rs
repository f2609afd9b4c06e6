//! Zero-order Takagi-Sugeno inference.
//!
//! A rule fires with the product of its four membership degrees. Rules whose
//! share of the total activation falls below the activation floor are
//! dropped and the survivors renormalised; the output is the normalised
//! weighted average of the surviving consequents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::{build_rule_base, RuleBase};
use crate::variables::{build_default_variables, InputState, VariableKind, Variables};

/// Rules below this share of total activation are dropped.
pub const DEFAULT_ACTIVATION_FLOOR: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct FiringVector {
    /// Activation per rule after the floor is applied.
    pub weights: Vec<f64>,
    pub normalized: Vec<f64>,
    pub total: f64,
}

impl FiringVector {
    pub fn fired(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fis {
    pub variables: Variables,
    pub rules: RuleBase,
    pub activation_floor: f64,
}

impl Default for Fis {
    fn default() -> Self {
        let variables = build_default_variables();
        let rules = build_rule_base(&variables).expect("default rule base reproduces its anchors");
        Self {
            variables,
            rules,
            activation_floor: DEFAULT_ACTIVATION_FLOOR,
        }
    }
}

impl Fis {
    pub fn new(variables: Variables, rules: RuleBase) -> Result<Self> {
        if rules.radix() != variables.radix() {
            return Err(Error::InvalidRuleBase(
                "rule base does not match the variables".to_string(),
            ));
        }
        Ok(Self {
            variables,
            rules,
            activation_floor: DEFAULT_ACTIVATION_FLOOR,
        })
    }

    pub fn with_activation_floor(mut self, floor: f64) -> Self {
        self.activation_floor = floor;
        self
    }

    /// Membership degrees of `x` for every set, grouped per variable.
    pub fn degrees(&self, x: &InputState) -> [Vec<f64>; 4] {
        VariableKind::ALL.map(|kind| self.variables.get(kind).degrees(x.value(kind)))
    }

    /// Raw product activations, before the floor.
    pub fn raw_weights(&self, x: &InputState) -> Vec<f64> {
        let deg = self.degrees(x);
        self.rules
            .iter()
            .map(|r| {
                let [d, a, act, c] = r.antecedent;
                deg[0][d] * deg[1][a] * deg[2][act] * deg[3][c]
            })
            .collect()
    }

    pub fn firing_strengths(&self, x: &InputState) -> Result<FiringVector> {
        x.validate()?;
        let mut weights = self.raw_weights(x);
        let raw_total: f64 = weights.iter().sum();
        if raw_total <= 0.0 || !raw_total.is_finite() {
            return Err(Error::AllRulesSilent);
        }
        let cut = self.activation_floor * raw_total;
        for w in weights.iter_mut() {
            if *w < cut {
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::AllRulesSilent);
        }
        let normalized = weights.iter().map(|w| w / total).collect();
        Ok(FiringVector {
            weights,
            normalized,
            total,
        })
    }

    /// Weighted average of consequents, bounded by the fired consequents.
    pub fn output(&self, firing: &FiringVector) -> f64 {
        let mut sum = 0.0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (rule, &wn) in self.rules.iter().zip(&firing.normalized) {
            if wn > 0.0 {
                sum += wn * rule.k;
                lo = lo.min(rule.k);
                hi = hi.max(rule.k);
            }
        }
        sum.clamp(lo, hi)
    }

    pub fn infer(&self, x: &InputState) -> Result<f64> {
        let firing = self.firing_strengths(x)?;
        Ok(self.output(&firing))
    }

    pub fn surface_grid(
        &self,
        var_a: VariableKind,
        var_b: VariableKind,
        fixed: &InputState,
        resolution: usize,
    ) -> Result<SurfaceGrid> {
        let a = Axis::over_domain(&self.variables, var_a, resolution)?;
        let b = Axis::over_domain(&self.variables, var_b, resolution)?;
        self.surface_grid_on(a, b, fixed)
    }

    /// Evaluates the output over explicit axis values.
    pub fn surface_grid_on(&self, a: Axis, b: Axis, fixed: &InputState) -> Result<SurfaceGrid> {
        if a.kind == b.kind {
            return Err(Error::InvalidSurface(format!(
                "both axes sweep `{}`",
                a.kind
            )));
        }
        for axis in [&a, &b] {
            if axis.values.is_empty() {
                return Err(Error::InvalidSurface(format!("axis `{}` is empty", axis.kind)));
            }
            if axis.kind.is_categorical() {
                let codes: Vec<f64> = self
                    .variables
                    .get(axis.kind)
                    .mfs
                    .iter()
                    .map(|m| m.mean)
                    .collect();
                if let Some(v) = axis.values.iter().find(|v| !codes.contains(v)) {
                    return Err(Error::InvalidSurface(format!(
                        "{v} is not a declared {} code (valid: {codes:?})",
                        axis.kind
                    )));
                }
            }
        }
        let mut values = Vec::with_capacity(a.values.len() * b.values.len());
        let mut x = *fixed;
        for &va in &a.values {
            x.set_value(a.kind, va);
            for &vb in &b.values {
                x.set_value(b.kind, vb);
                values.push(self.infer(&x)?);
            }
        }
        Ok(SurfaceGrid { a, b, values })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub kind: VariableKind,
    pub values: Vec<f64>,
}

impl Axis {
    /// Numeric variables: `resolution` evenly spaced points over the domain.
    /// Categorical variables: their declared codes.
    pub fn over_domain(vars: &Variables, kind: VariableKind, resolution: usize) -> Result<Self> {
        let var = vars.get(kind);
        if kind.is_categorical() {
            return Ok(Self {
                kind,
                values: var.mfs.iter().map(|m| m.mean).collect(),
            });
        }
        Self::linspace(kind, var.domain.0, var.domain.1, resolution)
    }

    pub fn linspace(kind: VariableKind, lo: f64, hi: f64, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidSurface(format!(
                "resolution must be at least 2, got {resolution}"
            )));
        }
        if kind.is_categorical() {
            return Err(Error::InvalidSurface(format!(
                "`{kind}` is categorical and sweeps only its declared codes"
            )));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidSurface(format!("bad range {lo}..{hi}")));
        }
        let step = (hi - lo) / (resolution - 1) as f64;
        let values = (0..resolution)
            .map(|i| if i + 1 == resolution { hi } else { lo + step * i as f64 })
            .collect();
        Ok(Self { kind, values })
    }
}

/// Row-major grid: `values[i * b.len() + j]` is the output at `(a[i], b[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub a: Axis,
    pub b: Axis,
    pub values: Vec<f64>,
}

impl SurfaceGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.b.values.len() + j]
    }

    /// Cells as `(a, b, intensity)`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let nb = self.b.values.len();
        self.values
            .iter()
            .enumerate()
            .map(move |(idx, &v)| (self.a.values[idx / nb], self.b.values[idx % nb], v))
    }

    pub fn to_delimited(&self) -> String {
        let mut out = format!("{},{},intensity\n", self.a.kind, self.b.kind);
        for (a, b, v) in self.rows() {
            out.push_str(&format!("{a},{b},{v:.6}\n"));
        }
        out
    }
}
