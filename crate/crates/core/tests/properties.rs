//! Cross-module sampled invariants: statistics identities, search bounds,
//! certification soundness, and the audit dichotomies.

use sdilab_core::attacks::{attack_3_to_log6, AttackScenario};
use sdilab_core::audit::{
    audit, check_click_input_independence, check_click_message_independence, AuditVerdict,
    EXACT_CONDITION_TOL,
};
use sdilab_core::classical::{classical_membership, MembershipResult, StrategyVertices};
use sdilab_core::quantum::{
    qrac2_protocol, qrac3_protocol, quantum_statistics, QRAC2_SUCCESS, QRAC3_SUCCESS,
};
use sdilab_core::rac::{
    brute_force_classical_optimum, factorized_worst_case_optimum, success_report,
    OptimizationCriterion, RACSpec,
};
use sdilab_core::sampling::{AliceEfficiency, BobEfficiency, ScenarioSampler};
use sdilab_core::scenario::{
    click_given_inputs, click_table, simulate_dl, simulate_ideal, DLScenario, MeasStrategy,
    MeasurementBox, PrepStrategy, PreparationBox,
};
use sdilab_core::tables::{total_variation_distance, ScenarioDims};

fn dims(n_a: usize, n_b: usize, n_msg: usize, n_out: usize) -> ScenarioDims {
    ScenarioDims::new(n_a, n_b, n_msg, n_out).unwrap()
}

/// The post-selected table times the observable click rate must equal the
/// raw success mass, recomputed here from first principles.
#[test]
fn post_selection_denominator_matches_observable_clicks() {
    let mut sampler = ScenarioSampler::new(101);
    for _ in 0..25 {
        let d = dims(3, 2, 2, 2);
        let s = sampler.scenario(d, 1, 2, AliceEfficiency::Unit, BobEfficiency::MessageDependent);
        let table = simulate_dl(&s).unwrap();
        for a in 0..d.alice_inputs {
            for b in 0..d.bob_inputs {
                let click = click_given_inputs(&s, a, b).unwrap();
                for outcome in 0..d.outcomes {
                    let mut mass = 0.0;
                    for msg in 0..d.message_dim {
                        let p_msg = s.prep.mixed_encoder_entry(a, msg);
                        for (i, ms) in s.meas.strategies().iter().enumerate() {
                            mass += ms.prior
                                * s.meas.efficiency_entry(i, msg, b)
                                * s.meas.decoder_entry(i, msg, b, outcome)
                                * p_msg;
                        }
                    }
                    assert!((table.get(outcome, a, b) * click - mass).abs() <= 1e-12);
                }
            }
        }
    }
}

/// Each post-selected entry is a ratio of affine functions of any single
/// efficiency, so it must be monotone along every coordinate.
#[test]
fn post_selected_entries_are_coordinate_monotone() {
    let mut sampler = ScenarioSampler::new(102);
    for _ in 0..20 {
        let d = dims(2, 2, 2, 2);
        let base = sampler.scenario(d, 1, 2, AliceEfficiency::Unit, BobEfficiency::MessageDependent);
        for strategy in 0..2 {
            for slot in 0..d.message_dim * d.bob_inputs {
                let mut values = Vec::new();
                for eta in [0.1, 0.5, 0.9] {
                    let mut strategies: Vec<MeasStrategy> =
                        base.meas.strategies().to_vec();
                    strategies[strategy].efficiency[slot] = eta;
                    let varied = DLScenario::new(
                        base.prep.clone(),
                        MeasurementBox::new(d, strategies).unwrap(),
                    )
                    .unwrap();
                    values.push(simulate_dl(&varied).unwrap().get(0, 0, slot % d.bob_inputs));
                }
                let up = values[0] <= values[1] + 1e-12 && values[1] <= values[2] + 1e-12;
                let down = values[0] >= values[1] - 1e-12 && values[1] >= values[2] - 1e-12;
                assert!(up || down, "not monotone: {values:?}");
            }
        }
    }
}

/// Splitting a strategy into two identical copies of half the prior is
/// invisible in the lossless statistics.
#[test]
fn refining_a_strategy_leaves_ideal_statistics_unchanged() {
    let mut sampler = ScenarioSampler::new(103);
    for _ in 0..10 {
        let d = dims(3, 2, 2, 3);
        let s = sampler.scenario(d, 2, 1, AliceEfficiency::Unit, BobEfficiency::Unit);
        let mut strategies: Vec<PrepStrategy> = s.prep.strategies().to_vec();
        let split = strategies.remove(0);
        for _ in 0..2 {
            strategies.push(PrepStrategy {
                prior: split.prior / 2.0,
                encoder: split.encoder.clone(),
                efficiency: split.efficiency.clone(),
            });
        }
        let refined = DLScenario::new(
            PreparationBox::new(d, strategies).unwrap(),
            s.meas.clone(),
        )
        .unwrap();
        let before = simulate_ideal(&s).unwrap();
        let after = simulate_ideal(&refined).unwrap();
        assert!(total_variation_distance(&before, &after).unwrap() <= 1e-12);
    }
}

/// The two quantum codes strictly separate from every classical optimum:
/// far above the no-shared-randomness baseline, and still above the
/// shared-randomness hull value.
#[test]
fn quantum_codes_separate_from_classical_optima() {
    for (n, protocol, value) in [
        (2usize, qrac2_protocol(), QRAC2_SUCCESS),
        (3, qrac3_protocol(), QRAC3_SUCCESS),
    ] {
        let spec = RACSpec::n_to_1(n).unwrap();
        let table = quantum_statistics(&protocol).unwrap();
        let report = success_report(&table, &spec).unwrap();
        assert!((report.worst_case - value).abs() <= 1e-12);
        let baseline = factorized_worst_case_optimum(&spec, 2).unwrap();
        assert!(report.worst_case >= baseline + 0.1);
        let hull = brute_force_classical_optimum(&spec, 2, OptimizationCriterion::WorstCase)
            .unwrap()
            .hull_value;
        assert!(report.worst_case > hull + 1e-3);
    }
}

/// Post-selected success never exceeds the best decoder entry for the
/// target, whatever the efficiencies are.
#[test]
fn entrywise_decoder_ceiling_holds_under_losses() {
    let mut sampler = ScenarioSampler::new(104);
    let spec = RACSpec::n_to_1(2).unwrap();
    for _ in 0..30 {
        let s = sampler.scenario(
            spec.dims(),
            1,
            2,
            AliceEfficiency::Unit,
            BobEfficiency::MessageDependent,
        );
        let attack = AttackScenario::new(s, spec, "sampled").unwrap();
        let table = simulate_dl(&attack.scenario).unwrap();
        let d = attack.scenario.dims();
        for a in 0..d.alice_inputs {
            for b in 0..d.bob_inputs {
                let target = attack.spec.target(a, b);
                let mut ceiling = f64::NEG_INFINITY;
                for i in 0..attack.scenario.meas.strategies().len() {
                    for msg in 0..d.message_dim {
                        ceiling = ceiling.max(attack.scenario.meas.decoder_entry(i, msg, b, target));
                    }
                }
                assert!(table.get(target, a, b) <= ceiling + 1e-9);
            }
        }
    }
}

/// Membership stays sound on random instances: feasible verdicts
/// reconstruct, infeasible verdicts carry witnesses valid against every
/// deterministic pair.
#[test]
fn membership_certificates_verify_on_random_tables() {
    let mut sampler = ScenarioSampler::new(105);
    let d = dims(2, 2, 2, 2);
    let vertices = StrategyVertices::collect(d, 1, 10_000).unwrap();
    for _ in 0..25 {
        let table = sampler.distribution(d);
        match classical_membership(&table, 1, 1e-9).unwrap() {
            MembershipResult::Feasible {
                reconstruction_tv, ..
            } => assert!(reconstruction_tv <= 1e-7),
            MembershipResult::Infeasible { witness } => {
                assert!(witness.violation >= 1e-7);
                assert!(witness.evaluate(&table).unwrap() > witness.bound + 1e-7);
                for k in 0..vertices.len() {
                    let vt = vertices.mixture(&[(k, 1.0)]).unwrap();
                    assert!(witness.evaluate(&vt).unwrap() <= witness.bound + 1e-9);
                }
            }
        }
    }
}

/// Message-blind losses keep the observable click rate input-independent,
/// and so does an input-independent effective encoder.
#[test]
fn click_independence_dichotomy() {
    let mut sampler = ScenarioSampler::new(106);
    for _ in 0..20 {
        let d = dims(3, 2, 2, 2);
        let blind = sampler.scenario(d, 2, 2, AliceEfficiency::Unit, BobEfficiency::MessageBlind);
        assert!(check_click_message_independence(&blind, 1e-9).unwrap().passed);
        let clicks = click_table(&blind).unwrap();
        assert!(check_click_input_independence(&clicks, 1e-9).passed);
    }
    for _ in 0..20 {
        // One constant encoder row shared by every input: the message says
        // nothing about a, so the click rate cannot depend on a either.
        let d = dims(3, 2, 2, 2);
        let row = sampler.probability_vector(d.message_dim);
        let mut encoder = Vec::new();
        for _ in 0..d.alice_inputs {
            encoder.extend_from_slice(&row);
        }
        let lossy = sampler.scenario(d, 1, 2, AliceEfficiency::Unit, BobEfficiency::MessageDependent);
        let constant_prep = DLScenario::new(
            PreparationBox::single(d, encoder).unwrap(),
            lossy.meas.clone(),
        )
        .unwrap();
        let clicks = click_table(&constant_prep).unwrap();
        assert!(check_click_input_independence(&clicks, 1e-9).passed);
    }
}

/// The audit can only certify when membership is infeasible; feasible
/// tables always read as classically explainable.
#[test]
fn audit_verdicts_are_consistent_with_membership() {
    let mut sampler = ScenarioSampler::new(107);
    for _ in 0..15 {
        let d = dims(2, 2, 2, 2);
        let s = sampler.scenario(d, 1, 1, AliceEfficiency::Unit, BobEfficiency::MessageDependent);
        let table = simulate_dl(&s).unwrap();
        let clicks = click_table(&s).unwrap();
        let report = audit(&table, &clicks, 2, EXACT_CONDITION_TOL).unwrap();
        match report.membership.feasible() {
            Some(true) => assert_eq!(report.verdict, AuditVerdict::ClassicallyExplainable),
            Some(false) | None => {
                assert_ne!(report.verdict, AuditVerdict::ClassicallyExplainable)
            }
        }
        if report.verdict == AuditVerdict::CertifiedNonClassical {
            assert_eq!(report.membership.feasible(), Some(false));
            assert!(report.click_input_independence.passed);
        }
    }
}

/// The bit+trit attack's post-selected statistics are the whole story at
/// once: certain success, flat one-third clicks, lossless value 2/3.
#[test]
fn bit_trit_attack_cross_checks() {
    let attack = attack_3_to_log6();
    let spec = attack.spec;
    let dl = simulate_dl(&attack.scenario).unwrap();
    let report = success_report(&dl, &spec).unwrap();
    assert!((report.worst_case - 1.0).abs() <= 1e-12);
    let clicks = click_table(&attack.scenario).unwrap();
    for a in 0..8 {
        for b in 0..3 {
            assert!((clicks.get(a, b) - 1.0 / 3.0).abs() <= 1e-12);
        }
    }
    // Lossless: every success entry is exactly 2/3.
    let lossless = simulate_ideal(&attack.scenario).unwrap();
    let lossless_report = success_report(&lossless, &spec).unwrap();
    assert!((lossless_report.worst_case - 2.0 / 3.0).abs() <= 1e-12);
    assert!((lossless_report.average - 2.0 / 3.0).abs() <= 1e-12);
}

/// Lossless statistics of any sampled binary-message scenario, and their
/// post-selected counterparts under message-blind losses, both admit
/// binary classical models — and the square code's statistics do not.
#[test]
fn classicality_boundary_in_one_picture() {
    let mut sampler = ScenarioSampler::new(108);
    for _ in 0..10 {
        let d = dims(4, 2, 2, 2);
        let s = sampler.scenario(d, 2, 2, AliceEfficiency::Unit, BobEfficiency::MessageBlind);
        assert!(classical_membership(&simulate_ideal(&s).unwrap(), 2, 1e-9)
            .unwrap()
            .is_feasible());
        assert!(classical_membership(&simulate_dl(&s).unwrap(), 2, 1e-9)
            .unwrap()
            .is_feasible());
    }
    let quantum = quantum_statistics(&qrac2_protocol()).unwrap();
    assert!(!classical_membership(&quantum, 2, 1e-9).unwrap().is_feasible());
}
