//! End-to-end acceptance checks. Runs without the libtest harness so every
//! PASS/FAIL line is printed; exits non-zero if any check fails.

use cabinlight_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ETAS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

fn report(n: u8, name: &str, ok: bool, detail: String) -> bool {
    println!("acceptance {n} [{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn sweep(preset: ExperimentPreset) -> Vec<(f64, TrialTrace)> {
    learning_rate_sweep(&preset.spec(LearnerConfig::default(), 0), &ETAS).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng) -> InputState {
    let act = [Activity::Sleeping, Activity::Eating, Activity::Entertainment][rng.random_range(0..3)];
    let chr = [Chronotype::Morning, Chronotype::Intermediate, Chronotype::Evening][rng.random_range(0..3)];
    InputState::new(rng.random_range(10.0..=32.0), rng.random_range(0.0..=100.0), act, chr)
}

fn acceptance_1_reward_calibration() -> bool {
    let (dark, t_dark) = reward(99.99203, 100.0, 5.0);
    let (bright, t_bright) = reward(100.005, 100.0, 5.0);
    let (zero, t_zero) = reward(100.0, 100.0, 5.0);
    let ok = (dark - -0.0254).abs() <= 5e-4
        && t_dark == TableUsed::Dark
        && (bright - -0.0159).abs() <= 5e-4
        && t_bright == TableUsed::Bright
        && zero == 0.0
        && t_zero == TableUsed::None;
    report(
        1,
        "reward calibration",
        ok,
        format!("dark {dark:.5} ({t_dark:?}), bright {bright:.5} ({t_bright:?}), equal {zero}"),
    )
}

fn acceptance_2_baseline_anchors() -> bool {
    let fis = Fis::default();
    let got: Vec<f64> = ExperimentPreset::ALL
        .iter()
        .map(|p| fis.infer(&p.input()).unwrap())
        .collect();
    let ok = got == [75.0, 87.5, 12.5];
    report(2, "baseline anchors", ok, format!("{got:?}"))
}

fn acceptance_3_set1_learning_rates() -> bool {
    let runs = sweep(ExperimentPreset::Set1);
    let at: Vec<Option<usize>> = runs.iter().map(|(_, t)| t.converged_at).collect();
    let all_converged = runs.iter().all(|(_, t)| {
        t.converged_at.is_some() && (t.last().unwrap().suggested - 62.0).abs() <= 0.5
    });
    let counts: Vec<usize> = at.iter().map(|c| c.unwrap_or(usize::MAX)).collect();
    let decreasing = counts.windows(2).all(|w| w[1] < w[0]);
    let ratio = counts[4] as f64 / counts[0] as f64;
    let in_band = (0.25..=0.8).contains(&ratio);
    report(
        3,
        "set 1 reproduction",
        all_converged && decreasing && in_band,
        format!(
            "converged_at {at:?}, all converged {all_converged}, strictly decreasing {decreasing}, \
             ratio(0.5/0.1) {ratio:.3} in [0.25, 0.8] {in_band}"
        ),
    )
}

fn acceptance_4_set2_learning_rates() -> bool {
    let runs = sweep(ExperimentPreset::Set2);
    let all_converged = runs.iter().all(|(_, t)| {
        let first = t.records[0].suggested;
        let last = t.last().unwrap().suggested;
        t.converged_at.is_some() && first == 87.5 && last > first && (last - 100.0).abs() <= 0.5
    });
    let fast = runs[4].1.converged_at.unwrap_or(usize::MAX);
    let slow = runs[0].1.converged_at.unwrap_or(usize::MAX);

    let mut crossings = 0;
    let mut overshoot_ok = true;
    for (_, t) in &runs {
        for w in t.records.windows(2) {
            if w[0].suggested > 100.0 {
                crossings += 1;
                overshoot_ok &= (w[1].suggested - 100.0).abs() < (w[0].suggested - 100.0).abs();
            }
        }
    }
    let at: Vec<Option<usize>> = runs.iter().map(|(_, t)| t.converged_at).collect();
    report(
        4,
        "set 2 reproduction",
        all_converged && fast < slow && overshoot_ok,
        format!(
            "converged_at {at:?}, all upward {all_converged}, eta 0.5 faster {}, \
             crossings above 100: {crossings}, all corrected {overshoot_ok}",
            fast < slow
        ),
    )
}

fn acceptance_5_set3_membership_shift() -> bool {
    let spec = ExperimentPreset::Set3.spec(LearnerConfig::default(), 0);
    let mut engine = Engine::new(spec.cfg.clone()).unwrap();
    let trace = run_experiment(&spec, &mut engine).unwrap();
    let idx = trace.mean_labels.iter().position(|l| l == "age:20-40").unwrap();
    let series: Vec<f64> = std::iter::once(30.0)
        .chain(trace.records.iter().map(|r| r.means[idx]))
        .collect();
    let down = series.windows(2).all(|w| w[1] <= w[0]);
    let up = series.windows(2).all(|w| w[1] >= w[0]);
    let shift = series.last().unwrap() - 30.0;
    let converged = trace.converged_at.is_some() && (trace.last().unwrap().suggested - 35.0).abs() <= 0.5;
    report(
        5,
        "set 3 reproduction",
        converged && (up || down) && (1.0..=5.0).contains(&shift.abs()),
        format!(
            "converged_at {:?}, age 20-40 mean 30 -> {:.3} (shift {shift:+.3}), monotone {}",
            trace.converged_at,
            series.last().unwrap(),
            up || down
        ),
    )
}

/// Probes whose surviving rule set could change under a small perturbation
/// are redrawn.
fn stable_firing(fis: &Fis, x: &InputState) -> bool {
    let raw = fis.raw_weights(x);
    let total: f64 = raw.iter().sum();
    let cut = fis.activation_floor * total;
    raw.iter().all(|w| (w - cut).abs() > 1e-3 * cut)
}

fn acceptance_6_gradient_suite() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_k = 0.0f64;
    let mut worst_m = 0.0f64;
    let mut probes = 0;
    while probes < 100 {
        let mut fis = Fis::default();
        for j in 0..fis.rules.len() {
            fis.rules.set_consequent(j, rng.random_range(1.0..99.0));
        }
        for kind in [VariableKind::Dgi, VariableKind::Age] {
            for mf in 0..fis.variables.get(kind).mfs.len() {
                let m = fis.variables.get(kind).mfs[mf].mean;
                fis.variables.set_mean(kind, mf, m + rng.random_range(-0.4..0.4));
            }
        }
        let x = random_state(&mut rng);
        if !stable_firing(&fis, &x) {
            continue;
        }
        probes += 1;
        let firing = fis.firing_strengths(&x).unwrap();
        let f0 = fis.output(&firing);
        let fired: Vec<usize> = firing.fired().collect();

        let j = fired[rng.random_range(0..fired.len())];
        let h = 1e-4;
        let k = fis.rules.get(j).unwrap().k;
        let mut plus = fis.clone();
        plus.rules.set_consequent(j, k + h);
        let mut minus = fis.clone();
        minus.rules.set_consequent(j, k - h);
        let fd = (plus.infer(&x).unwrap() - minus.infer(&x).unwrap()) / (2.0 * h);
        let an = firing.normalized[j];
        worst_k = worst_k.max((fd - an).abs() / an.abs().max(1e-12));

        let kind = if rng.random_bool(0.5) { VariableKind::Dgi } else { VariableKind::Age };
        let rule = fis.rules.get(j).unwrap();
        let mf = rule.antecedent[kind.index()];
        let var = fis.variables.get(kind);
        let (m, sigma) = (var.mfs[mf].mean, var.mfs[mf].sigma);
        let xi = var.clamp_input(x.value(kind));
        let an: f64 = fired
            .iter()
            .filter(|&&i| fis.rules.get(i).unwrap().antecedent[kind.index()] == mf)
            .map(|&i| {
                mean_gradient_factor(
                    firing.weights[i],
                    firing.total,
                    fis.rules.get(i).unwrap().k,
                    f0,
                    xi,
                    m,
                    sigma,
                )
            })
            .sum();
        let h = 1e-5;
        let mut plus = fis.clone();
        plus.variables.set_mean(kind, mf, m + h);
        let mut minus = fis.clone();
        minus.variables.set_mean(kind, mf, m - h);
        let fd = (plus.infer(&x).unwrap() - minus.infer(&x).unwrap()) / (2.0 * h);
        worst_m = worst_m.max((fd - an).abs() / an.abs().max(1e-3));
    }
    report(
        6,
        "gradient suite",
        worst_k <= 1e-6 && worst_m <= 1e-5,
        format!("100 probes, worst relative error dk {worst_k:.2e}, dm {worst_m:.2e}"),
    )
}

fn acceptance_7_structural_invariants() -> bool {
    let mut engine = Engine::new(LearnerConfig::default()).unwrap();
    let rules = &engine.fis.rules;
    let mut antecedents: Vec<[usize; 4]> = rules.iter().map(|r| r.antecedent).collect();
    antecedents.sort();
    antecedents.dedup();
    let distinct = rules.len() == 180 && antecedents.len() == 180;

    let frozen = |e: &Engine| -> Vec<u64> {
        e.fis.variables
            .iter()
            .flat_map(|v| v.mfs.iter())
            .flat_map(|mf| {
                let mean = if mf.kind == MfKind::Singleton { Some(mf.mean.to_bits()) } else { None };
                mean.into_iter().chain(std::iter::once(mf.sigma.to_bits()))
            })
            .collect()
    };
    let before = frozen(&engine);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sum_ok = true;
    let mut bounded = true;
    let mut k_ok = true;
    for _ in 0..1000 {
        let x = random_state(&mut rng);
        let firing = engine.fis.firing_strengths(&x).unwrap();
        sum_ok &= (firing.normalized.iter().sum::<f64>() - 1.0).abs() < 1e-12;
        let f = engine.fis.output(&firing);
        let ks: Vec<f64> = firing.fired().map(|j| engine.fis.rules.get(j).unwrap().k).collect();
        let lo = ks.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        bounded &= f >= lo && f <= hi;
        let target = rng.random_range(0.0..=100.0);
        engine
            .learn(&FeedbackEvent { suggested: f, target, state: x })
            .unwrap();
        k_ok &= engine.fis.rules.iter().all(|r| (0.0..=100.0).contains(&r.k));
    }
    let stable = frozen(&engine) == before;
    report(
        7,
        "structural invariants",
        distinct && sum_ok && bounded && stable && k_ok,
        format!(
            "180 distinct {distinct}, weights sum to 1 {sum_ok}, bounded {bounded}, \
             singletons and sigmas bit-stable {stable}, k in [0,100] {k_ok}"
        ),
    )
}

fn sig12(trace: &TrialTrace) -> Vec<String> {
    trace
        .records
        .iter()
        .map(|r| {
            let mut s = format!(
                "{} {:.11e} {:.11e} {:.11e} {:.11e} {}",
                r.trial, r.suggested, r.target, r.reward, r.td_error, r.table.as_str()
            );
            for m in &r.means {
                s.push_str(&format!(" {m:.11e}"));
            }
            s
        })
        .collect()
}

fn acceptance_8_persistence() -> bool {
    let mut spec = ExperimentPreset::Set1.spec(LearnerConfig::default(), 0);
    spec.max_trials = 50;
    let mut engine = Engine::new(spec.cfg.clone()).unwrap();
    let whole = run_experiment(&spec, &mut engine).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    let mut first = Engine::new(spec.cfg.clone()).unwrap();
    let mut runner = ExperimentRunner::new(spec.clone(), &first).unwrap();
    for _ in 0..25 {
        runner.step(&mut first).unwrap();
    }
    let profile = UserProfile {
        profile_id: "split".into(),
        age: 22.0,
        chronotype: Chronotype::Evening,
        engine: first,
        revision: 25,
    };
    profile.save(&path).unwrap();
    drop(profile);
    let mut resumed = UserProfile::load(&path).unwrap().engine;
    runner.run(&mut resumed).unwrap();
    let split = runner.into_trace();

    let same12 = sig12(&whole) == sig12(&split);
    let bitwise = whole == split && resumed == engine;
    report(
        8,
        "persistence",
        whole.records.len() == 50 && same12,
        format!("{} trials, equal to 12 digits {same12}, bit-identical {bitwise}", split.records.len()),
    )
}

fn main() {
    let checks: [fn() -> bool; 8] = [
        acceptance_1_reward_calibration,
        acceptance_2_baseline_anchors,
        acceptance_3_set1_learning_rates,
        acceptance_4_set2_learning_rates,
        acceptance_5_set3_membership_shift,
        acceptance_6_gradient_suite,
        acceptance_7_structural_invariants,
        acceptance_8_persistence,
    ];
    let failed = checks.iter().filter(|check| !check()).count();
    println!("\nacceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
