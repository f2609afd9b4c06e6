//! Expected values computed independently of the library code paths.

use std::f64::consts::PI;

use cabinlight_core::*;

fn gauss(x: f64, m: f64, s: f64) -> f64 {
    (-0.5 * ((x - m) / s).powi(2)).exp()
}

const DGI: [(f64, f64); 5] = [(14.0, 1.5), (18.0, 1.0), (22.0, 1.0), (25.0, 1.0), (29.0, 1.8)];
const AGE: [(f64, f64); 4] = [(10.0, 5.0), (30.0, 5.0), (50.0, 5.0), (75.0, 8.0)];
const ACT: [f64; 3] = [2.0, 3.0, 5.0];
const CHR: [f64; 3] = [5.0, 15.0, 25.0];

/// Consequent table written out by hand from the ordinal heuristic.
fn expected_k(d: usize, a: usize, act: usize, chr: usize) -> f64 {
    let base = [1, 4, 6][act];
    let dd = [1, 0, 0, -1, -2][d];
    let da = [0, 0, 1, 2][a];
    let dc = [1, 0, 0][chr];
    12.5 * f64::from((base + dd + da + dc).clamp(0, 8))
}

/// Pure product-t-norm Takagi-Sugeno output with no activation floor.
fn product_output(x: &InputState) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (d, &(dm, ds)) in DGI.iter().enumerate() {
        for (a, &(am, asg)) in AGE.iter().enumerate() {
            for (act, &ac) in ACT.iter().enumerate() {
                for (chr, &cc) in CHR.iter().enumerate() {
                    let w = gauss(x.dgi, dm, ds)
                        * gauss(x.age, am, asg)
                        * f64::from(u8::from(ac == x.activity))
                        * f64::from(u8::from(cc == x.chronotype));
                    num += w * expected_k(d, a, act, chr);
                    den += w;
                }
            }
        }
    }
    num / den
}

#[test]
fn membership_values() {
    let fis = Fis::default();
    let comfortable = &fis.variables.get(VariableKind::Dgi).mfs[2];
    assert_eq!(membership(22.0, comfortable), 1.0);
    assert_eq!(membership(18.0, comfortable), (-8.0f64).exp());
    assert_eq!(membership(18.0, comfortable), 3.354_626_279_025_118_4e-4);
    let young = &fis.variables.get(VariableKind::Age).mfs[1];
    assert!((membership(22.0, young) - gauss(22.0, 30.0, 5.0)).abs() < 1e-15);
    let eating = &fis.variables.get(VariableKind::Activity).mfs[1];
    assert_eq!(membership(3.0, eating), 1.0);
    assert_eq!(membership(3.0 + 1e-10, eating), 1.0);
    assert_eq!(membership(3.001, eating), 0.0);
}

#[test]
fn consequent_table() {
    let rules = build_rule_base(&build_default_variables()).unwrap();
    assert_eq!(rules.len(), 180);
    for d in 0..5 {
        for a in 0..4 {
            for act in 0..3 {
                for chr in 0..3 {
                    let id = ((d * 4 + a) * 3 + act) * 3 + chr;
                    let rule = rules.get(id).unwrap();
                    assert_eq!(rule.antecedent, [d, a, act, chr]);
                    assert_eq!(rule.k, expected_k(d, a, act, chr), "rule {id}");
                }
            }
        }
    }
}

#[test]
fn pure_product_blend_matches_hand_computation() {
    let fis = Fis::default().with_activation_floor(0.0);
    for p in ExperimentPreset::ALL {
        let x = p.input();
        let got = fis.infer(&x).unwrap();
        assert!((got - product_output(&x)).abs() < 1e-9, "{p:?}: {got}");
    }
    let set1 = fis.infer(&ExperimentPreset::Set1.input()).unwrap();
    assert!((set1 - 74.85).abs() < 0.01, "{set1}");
}

#[test]
fn reward_closed_form() {
    for (f, a) in [(75.0, 62.0), (10.0, 11.0), (50.0, 50.3), (0.0, 100.0)] {
        let (r, t) = reward(f, a, 5.0);
        assert!((r - -(2.0 / PI) * (5.0 * (f - a).abs()).atan()).abs() < 1e-15);
        assert_eq!(t, if f > a { TableUsed::Bright } else { TableUsed::Dark });
    }
}

#[test]
fn first_set1_step_by_hand() {
    let mut engine = Engine::new(LearnerConfig::default()).unwrap();
    let x = ExperimentPreset::Set1.input();

    // Surviving rules: comfortable DGI, age 0-20 (80) and 20-40 (89).
    let w80 = gauss(22.0, 10.0, 5.0);
    let w89 = gauss(22.0, 30.0, 5.0);
    let n80 = w80 / (w80 + w89);
    let n89 = w89 / (w80 + w89);
    let r = -(2.0 / PI) * (5.0f64 * 13.0).atan();
    // too bright: parameters move with +r, i.e. downward
    let dk80 = 0.1 * r * n80;
    let dk89 = 0.1 * r * n89;
    let q = 0.0;
    let dm_young = 0.002 * r * (75.0 - q) / (w80 + w89) * w80 * (22.0 - 10.0) / 25.0;
    let dm_adult = 0.002 * r * (75.0 - q) / (w80 + w89) * w89 * (22.0 - 30.0) / 25.0;

    let delta = engine
        .learn(&FeedbackEvent { suggested: 75.0, target: 62.0, state: x })
        .unwrap();
    assert_eq!(delta.table_used, TableUsed::Bright);
    assert!((delta.reward - r).abs() < 1e-15);
    assert!((delta.td_error - r).abs() < 1e-15);
    assert_eq!(delta.k_deltas.len(), 2);
    assert!((delta.k_deltas[&80] - dk80).abs() < 1e-12);
    assert!((delta.k_deltas[&89] - dk89).abs() < 1e-12);

    let age = engine.fis.variables.get(VariableKind::Age);
    assert!((age.mfs[0].mean - (10.0 + dm_young)).abs() < 1e-12);
    assert!((age.mfs[1].mean - (30.0 + dm_adult)).abs() < 1e-12);
    // the DGI input sits on its mean, so it does not move
    assert_eq!(engine.fis.variables.get(VariableKind::Dgi).mfs[2].mean, 22.0);

    let q_bright = engine.tables.value(TableUsed::Bright, 89, 6);
    assert!((q_bright - 0.1 * r).abs() < 1e-15);
    assert!(engine.tables.dark.iter().flatten().all(|v| *v == 0.0));

    let next = engine.suggest(&x).unwrap();
    assert!(next < 75.0 && next > 62.0, "{next}");
}

#[test]
fn surface_grid_corner_values() {
    let fis = Fis::default();
    let fixed = ExperimentPreset::Set1.input();
    let grid = fis
        .surface_grid(VariableKind::Dgi, VariableKind::Age, &fixed, 12)
        .unwrap();
    assert_eq!(grid.values.len(), 144);
    assert_eq!(grid.a.values[0], 10.0);
    assert_eq!(grid.a.values[11], 32.0);
    for (i, &dgi) in grid.a.values.iter().enumerate() {
        for (j, &age) in grid.b.values.iter().enumerate() {
            let x = InputState { dgi, age, ..fixed };
            assert_eq!(grid.at(i, j), fis.infer(&x).unwrap());
        }
    }
}
