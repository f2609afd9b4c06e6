//! Browser bindings: point inference, a DGI x age heatmap and a simulated
//! correction run. The plain functions are usable (and tested) natively;
//! on `wasm32` they are exported through `wasm-bindgen` returning JSON.

use cabinlight_core::{
    run_experiment, Activity, Axis, Chronotype, Engine, ExperimentPreset, Fis, InputState,
    LearnerConfig, SimulatedUser, UserPolicy, VariableKind,
};
use serde::Serialize;

pub const MAX_RESOLUTION: usize = 200;

fn state(dgi: f64, age: f64, activity: &str, chronotype: &str) -> Result<InputState, String> {
    let activity: Activity = activity.parse().map_err(|e| format!("{e}"))?;
    let chronotype: Chronotype = chronotype.parse().map_err(|e| format!("{e}"))?;
    let x = InputState::new(dgi, age, activity, chronotype);
    x.validate().map_err(|e| e.to_string())?;
    Ok(x)
}

pub fn infer_point(dgi: f64, age: f64, activity: &str, chronotype: &str) -> Result<f64, String> {
    let x = state(dgi, age, activity, chronotype)?;
    Fis::default().infer(&x).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct Heatmap {
    pub dgi: Vec<f64>,
    pub age: Vec<f64>,
    /// `values[i * age.len() + j]` is the intensity at `(dgi[i], age[j])`.
    pub values: Vec<f64>,
}

pub fn heatmap(activity: &str, chronotype: &str, resolution: usize) -> Result<Heatmap, String> {
    if !(2..=MAX_RESOLUTION).contains(&resolution) {
        return Err(format!("resolution must be in 2..={MAX_RESOLUTION}"));
    }
    let fixed = state(22.0, 30.0, activity, chronotype)?;
    let fis = Fis::default();
    let axis = |kind| Axis::over_domain(&fis.variables, kind, resolution).map_err(|e| e.to_string());
    let grid = fis
        .surface_grid_on(axis(VariableKind::Dgi)?, axis(VariableKind::Age)?, &fixed)
        .map_err(|e| e.to_string())?;
    Ok(Heatmap {
        dgi: grid.a.values,
        age: grid.b.values,
        values: grid.values,
    })
}

#[derive(Debug, Serialize)]
pub struct SimPoint {
    pub trial: usize,
    pub suggested: f64,
    pub target: f64,
    pub reward: f64,
}

#[derive(Debug, Serialize)]
pub struct Simulation {
    pub set: u8,
    pub preference: f64,
    pub converged_at: Option<usize>,
    pub points: Vec<SimPoint>,
    pub final_suggestion: f64,
}

pub fn simulate_set(
    set: u8,
    eta: f64,
    policy: &str,
    seed: u64,
    max_trials: usize,
) -> Result<Simulation, String> {
    let preset = ExperimentPreset::from_number(set).ok_or_else(|| format!("no experiment set {set}"))?;
    let policy: UserPolicy = policy.parse().map_err(|e| format!("{e}"))?;
    let cfg = LearnerConfig {
        eta_k: eta,
        eta_q: eta,
        ..LearnerConfig::default()
    };
    let mut spec = preset.spec(cfg.clone(), seed);
    spec.user = SimulatedUser::new(preset.preference(), policy, seed).map_err(|e| e.to_string())?;
    spec.max_trials = max_trials;
    let mut engine = Engine::new(cfg).map_err(|e| e.to_string())?;
    let trace = run_experiment(&spec, &mut engine).map_err(|e| e.to_string())?;
    Ok(Simulation {
        set,
        preference: preset.preference(),
        converged_at: trace.converged_at,
        points: trace
            .records
            .iter()
            .map(|r| SimPoint {
                trial: r.trial,
                suggested: r.suggested,
                target: r.target,
                reward: r.reward,
            })
            .collect(),
        final_suggestion: engine.suggest(&spec.input).map_err(|e| e.to_string())?,
    })
}

#[cfg(target_arch = "wasm32")]
mod bindings {
    use wasm_bindgen::prelude::*;

    fn js(e: String) -> JsError {
        JsError::new(&e)
    }

    fn json<T: serde::Serialize>(v: &T) -> String {
        serde_json::to_string(v).expect("plain data serializes")
    }

    #[wasm_bindgen]
    pub fn infer(dgi: f64, age: f64, activity: &str, chronotype: &str) -> Result<f64, JsError> {
        super::infer_point(dgi, age, activity, chronotype).map_err(js)
    }

    #[wasm_bindgen]
    pub fn surface(activity: &str, chronotype: &str, resolution: usize) -> Result<String, JsError> {
        super::heatmap(activity, chronotype, resolution).map(|h| json(&h)).map_err(js)
    }

    #[wasm_bindgen]
    pub fn simulate(set: u8, eta: f64, policy: &str, seed: u32, max_trials: usize) -> Result<String, JsError> {
        super::simulate_set(set, eta, policy, u64::from(seed), max_trials)
            .map(|s| json(&s))
            .map_err(js)
    }
}
