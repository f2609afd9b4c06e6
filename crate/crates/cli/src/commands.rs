use std::fs;
use std::io::Write;

use cabinlight_core::{
    build_default_variables, export_rules, learning_rate_sweep, parse_rules, rules, Activity,
    Axis, Chronotype, ExperimentPreset, Fis, InputState, LearnerConfig, SimulatedUser,
    UserProfile, VariableKind,
};
use serde::Serialize;

use crate::{ExperimentArgs, Failure, InferArgs, RulesArgs, ServeArgs, SurfaceArgs};

pub fn infer(args: &InferArgs) -> Result<(), Failure> {
    let mut fis = Fis::default();
    if let Some(path) = &args.profile {
        fis = UserProfile::load(path)?.engine.fis;
    }
    if let Some(path) = &args.rules {
        fis.rules = parse_rules(&fs::read_to_string(path)?, &fis.variables)?;
    }
    let x = InputState::new(args.dgi, args.age, args.activity, args.chronotype);
    x.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    println!("{:.4}", fis.infer(&x)?);
    Ok(())
}

#[derive(Serialize)]
struct RunSummary {
    eta: f64,
    converged_at: Option<usize>,
    trials: usize,
    final_suggestion: f64,
    final_means: Vec<(String, f64)>,
    trace: String,
}

#[derive(Serialize)]
struct Summary {
    set: u8,
    preference: f64,
    baseline: f64,
    seed: u64,
    policy: cabinlight_core::UserPolicy,
    eta_m: f64,
    runs: Vec<RunSummary>,
}

pub fn experiment(args: &ExperimentArgs) -> Result<(), Failure> {
    let preset = ExperimentPreset::from_number(args.set)
        .ok_or_else(|| Failure::Usage(format!("no experiment set {}", args.set)))?;
    let cfg = LearnerConfig {
        eta_m: args.eta_m,
        ..LearnerConfig::default()
    };
    let mut spec = preset.spec(cfg, args.seed);
    spec.user = SimulatedUser::new(preset.preference(), args.policy, args.seed)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    spec.max_trials = args.max_trials;
    spec.convergence_tol = args.tol;
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let runs = learning_rate_sweep(&spec, &args.eta).map_err(|e| Failure::Usage(e.to_string()))?;
    fs::create_dir_all(&args.out_dir)?;

    let baseline = Fis::default().infer(&spec.input)?;
    println!(
        "set {}  preference {}  baseline {baseline:.4}",
        args.set,
        preset.preference()
    );
    println!("{:>6}  {:>12}  {:>6}  {:>10}", "eta", "converged_at", "trials", "final");
    let mut summaries = Vec::new();
    let mut stalled = Vec::new();
    for (eta, trace) in &runs {
        let name = format!("set{}_eta{eta}.csv", args.set);
        fs::write(args.out_dir.join(&name), trace.to_delimited())?;
        let last = trace.last().expect("at least one trial runs");
        println!(
            "{eta:>6}  {:>12}  {:>6}  {:>10.4}",
            trace.converged_at.map_or("-".to_string(), |t| t.to_string()),
            trace.records.len(),
            last.suggested
        );
        if trace.converged_at.is_none() {
            stalled.push(*eta);
        }
        summaries.push(RunSummary {
            eta: *eta,
            converged_at: trace.converged_at,
            trials: trace.records.len(),
            final_suggestion: last.suggested,
            final_means: trace.mean_labels.iter().cloned().zip(last.means.iter().copied()).collect(),
            trace: name,
        });
    }
    let summary = Summary {
        set: args.set,
        preference: preset.preference(),
        baseline,
        seed: args.seed,
        policy: args.policy,
        eta_m: args.eta_m,
        runs: summaries,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(args.out_dir.join(format!("set{}_summary.json", args.set)), json)?;

    if stalled.is_empty() {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!(
            "no convergence within {} trials for eta {stalled:?}",
            args.max_trials
        )))
    }
}

fn parse_range(s: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::Usage(format!("range `{s}` is not `lo,hi`"));
    let (lo, hi) = s.split_once(',').ok_or_else(bad)?;
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

fn parse_fixed(spec: &str) -> Result<InputState, Failure> {
    let mut x = ExperimentPreset::Set1.input();
    for pair in spec.split(',').filter(|p| !p.trim().is_empty()) {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("`{pair}` is not `variable=value`")))?;
        let kind: VariableKind = key.parse().map_err(|e: cabinlight_core::Error| Failure::Usage(e.to_string()))?;
        let usage = |e: cabinlight_core::Error| Failure::Usage(e.to_string());
        let v = match kind {
            VariableKind::Activity => value.parse::<Activity>().map_err(usage)?.code(),
            VariableKind::Chronotype => value.parse::<Chronotype>().map_err(usage)?.code(),
            _ => value
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("`{value}` is not a number")))?,
        };
        x.set_value(kind, v);
    }
    Ok(x)
}

pub fn surface(args: &SurfaceArgs) -> Result<(), Failure> {
    let usage = |e: cabinlight_core::Error| Failure::Usage(e.to_string());
    let names: Vec<&str> = args.vars.split(',').map(str::trim).collect();
    let [a, b] = names[..] else {
        return Err(Failure::Usage(format!("--vars needs two variables, got `{}`", args.vars)));
    };
    let (a, b): (VariableKind, VariableKind) = (a.parse().map_err(usage)?, b.parse().map_err(usage)?);
    if a == b {
        return Err(Failure::Usage(format!("--vars repeats `{a}`")));
    }
    let fixed = parse_fixed(&args.fix)?;
    let fis = Fis::default();
    let axis = |kind, range: &Option<String>| -> Result<Axis, Failure> {
        match range {
            Some(r) => {
                let (lo, hi) = parse_range(r)?;
                Axis::linspace(kind, lo, hi, args.res).map_err(usage)
            }
            None => Axis::over_domain(&fis.variables, kind, args.res).map_err(usage),
        }
    };
    let grid = fis
        .surface_grid_on(axis(a, &args.range_a)?, axis(b, &args.range_b)?, &fixed)
        .map_err(usage)?;
    let text = grid.to_delimited();
    match &args.out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn rules(args: &RulesArgs) -> Result<(), Failure> {
    let vars = build_default_variables();
    if let Some(path) = &args.export {
        let base = cabinlight_core::build_rule_base(&vars)?;
        fs::write(path, export_rules(&base, &vars))?;
        println!("wrote {} rules to {}", base.len(), path.display());
    }
    if let Some(path) = &args.import {
        let base = parse_rules(&fs::read_to_string(path)?, &vars)?;
        println!("{} rules read from {}", base.len(), path.display());
        let fis = Fis::new(vars, base)?;
        for (x, _) in rules::baseline_anchor_states() {
            println!(
                "dgi {} age {} {} {}: {:.4}",
                x.dgi,
                x.age,
                Activity::from_code(x.activity)?.label(),
                Chronotype::from_code(x.chronotype)?.label(),
                fis.infer(&x)?
            );
        }
    }
    Ok(())
}

pub fn serve(args: &ServeArgs) -> Result<(), Failure> {
    let addr = format!("{}:{}", args.host, args.port);
    let listener = std::net::TcpListener::bind(&addr)
        .map_err(|e| Failure::Runtime(format!("cannot listen on {addr}: {e}")))?;
    listener.set_nonblocking(true)?;
    let state = cabinlight_api::AppState::new(&args.data_dir)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::from_std(listener)?;
        eprintln!(
            "listening on http://{} (profiles in {})",
            listener.local_addr()?,
            args.data_dir.display()
        );
        cabinlight_api::serve(listener, state).await
    })?;
    Ok(())
}
