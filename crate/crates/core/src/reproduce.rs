//! The one-command verification suite behind `sdilab reproduce`.
//!
//! Each item pins one headline number or sampled property of the toolkit —
//! the square/cube code values, the classical baselines, the separation
//! witness, the information bound, the bit+trit attack, and the three
//! seeded suites — at its stated tolerance. The run is deterministic for a
//! fixed seed, so two runs serialize byte-identically.

use serde::Serialize;

use crate::attacks::{
    analytic_success_bound, attack_3_to_log6, dl_worst_case_search, verify_worst_case_immunity,
    AttackScenario, SearchMode,
};
use crate::classical::{classical_membership, MembershipResult, StrategyVertices};
use crate::error::Result;
use crate::quantum::{
    efficiency_mixed_success, qrac2_protocol, qrac3_protocol, quantum_statistics,
    QuantumPrepareMeasure, QRAC2_SUCCESS, QRAC3_SUCCESS,
};
use crate::rac::{
    brute_force_classical_optimum, factorized_worst_case_optimum, nayak_upper_bound,
    success_report, OptimizationCriterion, RACSpec,
};
use crate::sampling::{AliceEfficiency, BobEfficiency, ScenarioSampler};
use crate::scenario::{
    effective_preparation, simulate_dl, simulate_dl_full, simulate_ideal, with_unit_efficiencies,
    DLScenario,
};
use crate::tables::total_variation_distance;

/// Result of one reproduction item.
#[derive(Debug, Clone, Serialize)]
pub struct ItemResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

impl ItemResult {
    fn new(id: u32, name: &'static str, passed: bool, details: String) -> Self {
        Self {
            id,
            name,
            passed,
            details,
        }
    }

    pub fn render_line(&self) -> String {
        format!(
            "{} {:02} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.details
        )
    }
}

/// The full suite outcome.
#[derive(Debug, Clone, Serialize)]
pub struct ReproduceReport {
    pub seed: u64,
    pub items: Vec<ItemResult>,
    pub all_passed: bool,
}

impl ReproduceReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            out.push_str(&item.render_line());
            out.push('\n');
        }
        out.push_str(if self.all_passed {
            "all items passed\n"
        } else {
            "some items FAILED\n"
        });
        out
    }
}

/// Runs all ten items with suite seeds derived from `seed`.
pub fn run(seed: u64) -> Result<ReproduceReport> {
    let items = vec![
        square_code_value(&qrac2_protocol())?,
        cube_code_value(&qrac3_protocol())?,
        classical_baselines()?,
        separation_witness()?,
        information_bound(),
        bit_trit_attack()?,
        immunity_suite(seed)?,
        message_blind_loss_suite(seed.wrapping_add(1))?,
        efficiency_mixing()?,
        preparation_loss_elimination_suite(seed.wrapping_add(2))?,
    ];
    let all_passed = items.iter().all(|item| item.passed);
    Ok(ReproduceReport {
        seed,
        items,
        all_passed,
    })
}

/// Item 1: the square code's worst case equals ½(1 + 1/√2) to 1e-12.
/// Public over the protocol so a perturbed construction can be shown to
/// fail.
pub fn square_code_value(protocol: &QuantumPrepareMeasure) -> Result<ItemResult> {
    let report = success_report(
        &quantum_statistics(protocol)?,
        &RACSpec::n_to_1(2)?,
    )?;
    let delta = (report.worst_case - QRAC2_SUCCESS).abs();
    Ok(ItemResult::new(
        1,
        "square-code-worst-case",
        delta <= 1e-12,
        format!(
            "worst_case={} expected={} |delta|={delta:.3e}",
            report.worst_case, QRAC2_SUCCESS
        ),
    ))
}

/// Item 2: the cube code's worst case equals ½(1 + 1/√3) to 1e-12.
pub fn cube_code_value(protocol: &QuantumPrepareMeasure) -> Result<ItemResult> {
    let report = success_report(
        &quantum_statistics(protocol)?,
        &RACSpec::n_to_1(3)?,
    )?;
    let delta = (report.worst_case - QRAC3_SUCCESS).abs();
    Ok(ItemResult::new(
        2,
        "cube-code-worst-case",
        delta <= 1e-12,
        format!(
            "worst_case={} expected={} |delta|={delta:.3e}",
            report.worst_case, QRAC3_SUCCESS
        ),
    ))
}

/// Item 3: classical baselines. The detection-loophole analysis compares
/// against boxes without shared randomness, whose worst-case optimum is ½
/// for the 2- and 3-bit tasks through a binary message. The brute-force
/// enumeration pins the 2-bit average optimum at ¾, and the hull program
/// confirms that shared randomness lifts the worst case all the way to
/// that average (¾) — strictly above the no-shared-randomness baseline.
pub fn classical_baselines() -> Result<ItemResult> {
    let two_bit = RACSpec::n_to_1(2)?;
    let three_bit = RACSpec::n_to_1(3)?;
    let baseline2 = factorized_worst_case_optimum(&two_bit, 2);
    let baseline3 = factorized_worst_case_optimum(&three_bit, 2);
    let avg = brute_force_classical_optimum(&two_bit, 2, OptimizationCriterion::Average)?;
    let hull2 = brute_force_classical_optimum(&two_bit, 2, OptimizationCriterion::WorstCase)?;
    let hull3 = brute_force_classical_optimum(&three_bit, 2, OptimizationCriterion::WorstCase)?;
    let passed = baseline2 == Some(0.5)
        && baseline3 == Some(0.5)
        && (avg.vertex_value - 0.75).abs() <= 1e-9
        && (avg.hull_value - avg.vertex_value).abs() <= 1e-9
        && (hull2.hull_value - 0.75).abs() <= 1e-9
        && (hull3.hull_value - 0.75).abs() <= 1e-9
        && hull2.vertex_value == 0.0;
    Ok(ItemResult::new(
        3,
        "classical-baselines",
        passed,
        format!(
            "baseline(2bit)={:?} baseline(3bit)={:?} average(2bit)={} \
             shared_randomness_hull(2bit)={} shared_randomness_hull(3bit)={}",
            baseline2, baseline3, avg.vertex_value, hull2.hull_value, hull3.hull_value
        ),
    ))
}

/// Item 4: the square code's statistics admit no binary classical model,
/// and the produced witness verifies against every deterministic pair.
pub fn separation_witness() -> Result<ItemResult> {
    let table = quantum_statistics(&qrac2_protocol())?;
    match classical_membership(&table, 2, 1e-9)? {
        MembershipResult::Feasible { .. } => Ok(ItemResult::new(
            4,
            "square-code-separation",
            false,
            "membership unexpectedly feasible".into(),
        )),
        MembershipResult::Infeasible { witness } => {
            let vertices = StrategyVertices::collect(table.dims(), 2, 1_000_000)?;
            let mut max_vertex_slack = f64::NEG_INFINITY;
            for k in 0..vertices.len() {
                let value = witness.evaluate(&vertices.mixture(&[(k, 1.0)])?)?;
                max_vertex_slack = max_vertex_slack.max(value - witness.bound);
            }
            let passed = witness.violation >= 1e-7 && max_vertex_slack <= 1e-9;
            Ok(ItemResult::new(
                4,
                "square-code-separation",
                passed,
                format!(
                    "violation={} max_vertex_slack={max_vertex_slack:.3e}",
                    witness.violation
                ),
            ))
        }
    }
}

/// Item 5: the information bound for packing 3 bits into log₂6 of them
/// lies in (0.9805, 0.9810) with bisection residual at most 1e-12.
pub fn information_bound() -> ItemResult {
    let n = 3.0;
    let m = 6.0f64.log2();
    let bound = nayak_upper_bound(n, m);
    let residual = (crate::rac::binary_entropy(bound).expect("bound is a probability")
        - (1.0 - m / n))
        .abs();
    let passed = bound > 0.9805 && bound < 0.9810 && residual <= 1e-12;
    ItemResult::new(
        5,
        "information-bound",
        passed,
        format!("bound={bound} residual={residual:.3e}"),
    )
}

/// Item 6: the bit+trit attack post-selects every success entry to 1,
/// while the same boxes without losses sit at worst case 2/3, below the
/// information bound.
pub fn bit_trit_attack() -> Result<ItemResult> {
    let attack = attack_3_to_log6();
    let dl = simulate_dl(&attack.scenario)?;
    let dims = attack.scenario.dims();
    let mut max_gap: f64 = 0.0;
    for a in 0..dims.alice_inputs {
        for b in 0..dims.bob_inputs {
            max_gap = max_gap.max((dl.get(attack.spec.target(a, b), a, b) - 1.0).abs());
        }
    }
    let lossless = simulate_ideal(&with_unit_efficiencies(&attack.scenario))?;
    let lossless_report = success_report(&lossless, &attack.spec)?;
    let bound = nayak_upper_bound(3.0, 6.0f64.log2());
    let passed = max_gap <= 1e-12
        && (lossless_report.worst_case - 2.0 / 3.0).abs() <= 1e-12
        && lossless_report.worst_case <= bound;
    Ok(ItemResult::new(
        6,
        "bit-trit-attack",
        passed,
        format!(
            "post_selected_gap={max_gap:.3e} lossless_worst_case={} information_bound={bound}",
            lossless_report.worst_case
        ),
    ))
}

/// Instances for the immunity suite: random 2-bit scenarios over a binary
/// message, most with one measurement strategy (cheap grids), some with
/// two.
fn immunity_instances(seed: u64, count: usize) -> Vec<AttackScenario> {
    let spec = RACSpec::n_to_1(2).expect("valid task");
    let dims = spec.dims();
    let mut sampler = ScenarioSampler::new(seed);
    (0..count)
        .map(|idx| {
            let meas_strategies = if idx % 8 == 0 { 2 } else { 1 };
            let prep_strategies = 1 + sampler.pick(2);
            let scenario = sampler.scenario(
                dims,
                prep_strategies,
                meas_strategies,
                AliceEfficiency::Unit,
                BobEfficiency::MessageDependent,
            );
            AttackScenario::new(scenario, spec, format!("sampled-2bit-{idx}"))
                .expect("dims match")
        })
        .collect()
}

/// Item 7: on 100 seeded 2-bit instances whose lossless hull optimum is
/// exactly ½, neither the on/off search nor the 5-level grid search pushes
/// the worst case above ½, and the entrywise decoder ceiling holds.
pub fn immunity_suite(seed: u64) -> Result<ItemResult> {
    let instances = immunity_instances(seed, 100);
    let report = verify_worst_case_immunity(&instances, 1e-9);

    // Entrywise ceiling on the sampled scenarios' own statistics.
    let mut max_excess = f64::NEG_INFINITY;
    for attack in &instances {
        let dl = simulate_dl(&attack.scenario)?;
        let bound_table = per_cell_decoder_ceiling(attack);
        let dims = attack.scenario.dims();
        for a in 0..dims.alice_inputs {
            for b in 0..dims.bob_inputs {
                let cell = a * dims.bob_inputs + b;
                let excess = dl.get(attack.spec.target(a, b), a, b) - bound_table[cell];
                max_excess = max_excess.max(excess);
            }
        }
    }

    let passed = report.all_passed && report.qualifying == instances.len() && max_excess <= 1e-9;
    let best = report
        .instances
        .iter()
        .filter_map(|v| match &v.status {
            crate::attacks::InstanceStatus::Pass(e) | crate::attacks::InstanceStatus::Fail(e) => {
                Some(e.vertex_best.max(e.grid_best))
            }
            crate::attacks::InstanceStatus::Skipped { .. } => None,
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ItemResult::new(
        7,
        "worst-case-immunity-suite",
        passed,
        format!(
            "qualifying={} best_searched={best} max_entrywise_excess={max_excess:.3e}",
            report.qualifying
        ),
    ))
}

fn per_cell_decoder_ceiling(attack: &AttackScenario) -> Vec<f64> {
    let dims = attack.scenario.dims();
    let meas = &attack.scenario.meas;
    let mut out = vec![0.0; dims.cells()];
    for a in 0..dims.alice_inputs {
        for b in 0..dims.bob_inputs {
            let target = attack.spec.target(a, b);
            let mut cell_max = f64::NEG_INFINITY;
            for i in 0..meas.strategies().len() {
                for msg in 0..dims.message_dim {
                    cell_max = cell_max.max(meas.decoder_entry(i, msg, b, target));
                }
            }
            out[a * dims.bob_inputs + b] = cell_max;
        }
    }
    out
}

/// Item 8: on 100 seeded scenarios whose measurement losses ignore the
/// message, lossless statistics classical at d = 2 stay classical after
/// post-selection.
pub fn message_blind_loss_suite(seed: u64) -> Result<ItemResult> {
    let mut sampler = ScenarioSampler::new(seed);
    let mut checked = 0usize;
    let mut failures = 0usize;
    for idx in 0..100 {
        let alice_inputs = 2 + sampler.pick(2);
        let bob_inputs = 1 + sampler.pick(2);
        let dims = crate::tables::ScenarioDims::new(alice_inputs, bob_inputs, 2, 2)?;
        let prep_strategies = 1 + sampler.pick(2);
        let meas_strategies = 1 + sampler.pick(2);
        let scenario = sampler.scenario(
            dims,
            prep_strategies,
            meas_strategies,
            AliceEfficiency::Unit,
            BobEfficiency::MessageBlind,
        );
        let ideal = simulate_ideal(&scenario)?;
        if !classical_membership(&ideal, 2, 1e-9)?.is_feasible() {
            // Binary-message boxes always compose classically; reaching
            // this branch would be a bug, not a sampled edge case.
            return Ok(ItemResult::new(
                8,
                "message-blind-loss-suite",
                false,
                format!("instance {idx}: lossless table not classical at d=2"),
            ));
        }
        let dl = simulate_dl(&scenario)?;
        if !classical_membership(&dl, 2, 1e-9)?.is_feasible() {
            failures += 1;
        }
        checked += 1;
    }
    Ok(ItemResult::new(
        8,
        "message-blind-loss-suite",
        failures == 0 && checked == 100,
        format!("checked={checked} post_selection_broke_classicality={failures}"),
    ))
}

/// Item 9: mixing a clicking code with uniform guessing stays above ½ for
/// every positive efficiency.
pub fn efficiency_mixing() -> Result<ItemResult> {
    let mut worst_margin = f64::INFINITY;
    for eta in [0.01, 0.1, 0.5, 1.0] {
        for q in [QRAC2_SUCCESS, QRAC3_SUCCESS] {
            worst_margin = worst_margin.min(efficiency_mixed_success(q, eta)? - 0.5);
        }
    }
    Ok(ItemResult::new(
        9,
        "efficiency-mixing",
        worst_margin > 0.0,
        format!("worst_margin_above_half={worst_margin}"),
    ))
}

/// Item 10: folding the preparation box's losses into its encoder never
/// changes the post-selected statistics (100 seeded scenarios, 1e-9).
pub fn preparation_loss_elimination_suite(seed: u64) -> Result<ItemResult> {
    let mut sampler = ScenarioSampler::new(seed);
    let mut max_tv: f64 = 0.0;
    for _ in 0..100 {
        let alice_inputs = 2 + sampler.pick(2);
        let bob_inputs = 1 + sampler.pick(2);
        let message_dim = 2 + sampler.pick(2);
        let outcomes = 2 + sampler.pick(2);
        let dims =
            crate::tables::ScenarioDims::new(alice_inputs, bob_inputs, message_dim, outcomes)?;
        let prep_strategies = 1 + sampler.pick(3);
        let meas_strategies = 1 + sampler.pick(3);
        let scenario = sampler.scenario(
            dims,
            prep_strategies,
            meas_strategies,
            AliceEfficiency::Lossy,
            BobEfficiency::MessageDependent,
        );
        let full = simulate_dl_full(&scenario)?;
        let folded = DLScenario::new(
            effective_preparation(&scenario.prep)?,
            scenario.meas.clone(),
        )?;
        let simplified = simulate_dl(&folded)?;
        max_tv = max_tv.max(total_variation_distance(&full, &simplified)?);
    }
    Ok(ItemResult::new(
        10,
        "preparation-loss-elimination",
        max_tv <= 1e-9,
        format!("max_total_variation={max_tv:.3e}"),
    ))
}

/// Convenience for tests probing the search path on one instance.
pub fn searched_best(attack: &AttackScenario) -> Result<(f64, f64, f64)> {
    let vertex = dl_worst_case_search(attack, SearchMode::Vertex)?.best_value;
    let grid = dl_worst_case_search(attack, SearchMode::Grid)?.best_value;
    Ok((vertex, grid, analytic_success_bound(attack)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::BinaryQubitMeasurement;

    #[test]
    fn canonical_protocols_pass_their_items() {
        assert!(square_code_value(&qrac2_protocol()).unwrap().passed);
        assert!(cube_code_value(&qrac3_protocol()).unwrap().passed);
    }

    #[test]
    fn perturbed_square_axis_fails_item_one() {
        let mut protocol = qrac2_protocol();
        let tilt = 0.3f64;
        protocol.measurements[0] =
            BinaryQubitMeasurement::new([tilt.cos(), 0.0, tilt.sin()]).unwrap();
        let item = square_code_value(&protocol).unwrap();
        assert!(!item.passed);
    }

    #[test]
    fn report_text_is_reproducible() {
        let first = run(0).unwrap();
        let second = run(0).unwrap();
        assert_eq!(first.render_text(), second.render_text());
        assert!(first.all_passed, "\n{}", first.render_text());
    }
}
