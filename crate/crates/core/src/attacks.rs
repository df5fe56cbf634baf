//! Detection-loophole attack constructions and searches.
//!
//! The headline construction encodes three bits into a six-valued message
//! (one bit and one trit): the preparation box picks the trit uniformly at
//! random, encodes the addressed bit next to it, and the measurement box
//! clicks only when its input matches the trit. Post-selection then leaves
//! nothing but certain rounds, so every success entry of the post-selected
//! table equals 1 even though the same boxes without losses succeed with
//! probability 2/3.
//!
//! [`dl_worst_case_search`] probes how far such post-selection can push the
//! worst-case success of fixed boxes by scanning measurement-side
//! efficiency assignments, and [`verify_worst_case_immunity`] packages the
//! desk-scale check that tasks whose lossless optimum is 1/2 gain nothing.

use crate::classical::DEFAULT_ENUMERATION_CAP;
use crate::error::{Error, Result};
use crate::rac::{factorized_worst_case_optimum, success_report, RACSpec};
use crate::scenario::{
    effective_preparation, simulate_ideal, DLScenario, MeasStrategy, MeasurementBox,
    PreparationBox,
};
use crate::tables::ScenarioDims;

/// Cap on the number of assignments visited by a search.
pub const DEFAULT_SEARCH_CAP: u128 = 10_000_000;

/// Vertex mode enumerates at most 2^24 on/off assignments.
pub const VERTEX_VARIABLE_LIMIT: usize = 24;

/// A scenario paired with the random-access task it is attacking.
#[derive(Debug, Clone)]
pub struct AttackScenario {
    pub scenario: DLScenario,
    pub spec: RACSpec,
    pub tag: String,
}

impl AttackScenario {
    pub fn new(scenario: DLScenario, spec: RACSpec, tag: impl Into<String>) -> Result<Self> {
        if scenario.dims() != spec.dims() {
            return Err(Error::DimensionMismatch(format!(
                "scenario dims {:?} do not match task dims {:?}",
                scenario.dims(),
                spec.dims()
            )));
        }
        Ok(Self {
            scenario,
            spec,
            tag: tag.into(),
        })
    }
}

/// Message packing for the bit+trit attack: message = bit + 2 · trit.
fn pack_bit_trit(bit: usize, trit: usize) -> usize {
    bit + 2 * trit
}

/// The three-bit attack through a six-valued message.
///
/// The preparation box draws a trit t uniformly, then sends (a_t, t). The
/// measurement box answers with the carried bit when its input equals the
/// carried trit and guesses uniformly otherwise — but its detector only
/// clicks in the matching case, so the guessing branch never survives
/// post-selection.
pub fn attack_3_to_log6() -> AttackScenario {
    let spec = RACSpec::new(3, 6).expect("fixed task is valid");
    let dims = spec.dims();

    let mut encoder = vec![0.0; dims.alice_inputs * dims.message_dim];
    for a in 0..dims.alice_inputs {
        for trit in 0..3 {
            let bit = (a >> trit) & 1;
            encoder[a * dims.message_dim + pack_bit_trit(bit, trit)] += 1.0 / 3.0;
        }
    }
    let prep = PreparationBox::single(dims, encoder).expect("attack encoder is stochastic");

    let mut decoder = vec![0.0; dims.message_dim * dims.bob_inputs * dims.outcomes];
    let mut efficiency = vec![0.0; dims.message_dim * dims.bob_inputs];
    for msg in 0..dims.message_dim {
        let carried_bit = msg % 2;
        let carried_trit = msg / 2;
        for b in 0..dims.bob_inputs {
            let row = (msg * dims.bob_inputs + b) * dims.outcomes;
            if carried_trit == b {
                decoder[row + carried_bit] = 1.0;
                efficiency[msg * dims.bob_inputs + b] = 1.0;
            } else {
                decoder[row] = 0.5;
                decoder[row + 1] = 0.5;
            }
        }
    }
    let meas = MeasurementBox::new(
        dims,
        vec![MeasStrategy {
            prior: 1.0,
            decoder,
            efficiency,
        }],
    )
    .expect("attack decoder is stochastic");

    let scenario = DLScenario::new(prep, meas).expect("dims match by construction");
    AttackScenario::new(scenario, spec, "3->log6 bit+trit attack").expect("dims match")
}

/// The loss-free strategy distilled from a favorable message value: apply
/// strategy `i0`'s decoder whenever `msg0` arrives and answer uniformly
/// otherwise. The preparation side is folded to its effective encoder and
/// every efficiency of the result is 1.
pub fn filter_strategy(base: &DLScenario, i0: usize, msg0: usize) -> Result<DLScenario> {
    let dims = base.dims();
    if i0 >= base.meas.strategies().len() {
        return Err(Error::IndexOutOfRange {
            name: "strategy",
            index: i0,
            len: base.meas.strategies().len(),
        });
    }
    if msg0 >= dims.message_dim {
        return Err(Error::IndexOutOfRange {
            name: "message",
            index: msg0,
            len: dims.message_dim,
        });
    }
    let prep = effective_preparation(&base.prep)?;
    let uniform = 1.0 / dims.outcomes as f64;
    let mut decoder = vec![uniform; dims.message_dim * dims.bob_inputs * dims.outcomes];
    for b in 0..dims.bob_inputs {
        for outcome in 0..dims.outcomes {
            decoder[(msg0 * dims.bob_inputs + b) * dims.outcomes + outcome] =
                base.meas.decoder_entry(i0, msg0, b, outcome);
        }
    }
    let meas = MeasurementBox::single(dims, decoder)?;
    DLScenario::new(prep, meas)
}

/// Search space for [`dl_worst_case_search`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Every on/off assignment of the measurement-side efficiencies.
    Vertex,
    /// Every assignment over the levels {0, ¼, ½, ¾, 1}.
    Grid,
}

/// Best assignment found by a search.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SearchOutcome {
    /// Largest worst-case success over the scanned assignments; a lower
    /// bound on the true supremum.
    pub best_value: f64,
    /// Efficiencies of the best assignment, flat (strategy, message, b)
    /// with b fastest.
    pub best_assignment: Vec<f64>,
    pub assignments_scanned: u64,
    /// Assignments discarded because some input cell could never click.
    pub assignments_discarded: u64,
}

struct SearchContext {
    dims: ScenarioDims,
    num_strategies: usize,
    /// p_i · P(msg|a), flat ((strategy, msg), a).
    base_weight: Vec<f64>,
    /// p_i · P(msg|a) · P_i(target(a,b) | msg, b), flat ((strategy, msg), cell).
    success_weight: Vec<f64>,
}

impl SearchContext {
    fn build(attack: &AttackScenario) -> Result<Self> {
        let dims = attack.scenario.dims();
        let prep = effective_preparation(&attack.scenario.prep)?;
        let meas = &attack.scenario.meas;
        let num_strategies = meas.strategies().len();
        let blocks = num_strategies * dims.message_dim;
        let mut base_weight = vec![0.0; blocks * dims.alice_inputs];
        let mut success_weight = vec![0.0; blocks * dims.cells()];
        for (i, ms) in meas.strategies().iter().enumerate() {
            for msg in 0..dims.message_dim {
                let block = i * dims.message_dim + msg;
                for a in 0..dims.alice_inputs {
                    let w = ms.prior * prep.mixed_encoder_entry(a, msg);
                    base_weight[block * dims.alice_inputs + a] = w;
                    for b in 0..dims.bob_inputs {
                        let target = attack.spec.target(a, b);
                        success_weight[block * dims.cells() + a * dims.bob_inputs + b] =
                            w * meas.decoder_entry(i, msg, b, target);
                    }
                }
            }
        }
        Ok(Self {
            dims,
            num_strategies,
            base_weight,
            success_weight,
        })
    }

    fn num_variables(&self) -> usize {
        self.num_strategies * self.dims.message_dim * self.dims.bob_inputs
    }

    /// Worst-case success under one efficiency assignment, or None when a
    /// cell has zero click probability.
    fn evaluate(&self, eta: &[f64]) -> Option<f64> {
        let dims = self.dims;
        let mut worst = f64::INFINITY;
        for a in 0..dims.alice_inputs {
            for b in 0..dims.bob_inputs {
                let cell = a * dims.bob_inputs + b;
                let mut num = 0.0;
                let mut den = 0.0;
                for block in 0..self.num_strategies * dims.message_dim {
                    let e = eta[block * dims.bob_inputs + b];
                    if e == 0.0 {
                        continue;
                    }
                    den += e * self.base_weight[block * dims.alice_inputs + a];
                    num += e * self.success_weight[block * dims.cells() + cell];
                }
                if den <= 0.0 {
                    return None;
                }
                worst = worst.min(num / den);
            }
        }
        Some(worst)
    }
}

/// Maximizes the post-selected worst-case success over measurement-side
/// efficiency assignments, holding encoders and decoders fixed.
///
/// Assignments in which some input cell can never click are discarded.
/// Earlier assignments win ties, so the result is deterministic.
pub fn dl_worst_case_search(attack: &AttackScenario, mode: SearchMode) -> Result<SearchOutcome> {
    let ctx = SearchContext::build(attack)?;
    let k = ctx.num_variables();
    let levels: &[f64] = match mode {
        SearchMode::Vertex => {
            if k > VERTEX_VARIABLE_LIMIT {
                return Err(Error::SearchSpaceTooLarge {
                    assignments: 2u128.saturating_pow(k as u32),
                    cap: 1u128 << VERTEX_VARIABLE_LIMIT,
                });
            }
            &[0.0, 1.0]
        }
        SearchMode::Grid => &[0.0, 0.25, 0.5, 0.75, 1.0],
    };
    let total = (levels.len() as u128).saturating_pow(k as u32);
    if total > DEFAULT_SEARCH_CAP {
        return Err(Error::SearchSpaceTooLarge {
            assignments: total,
            cap: DEFAULT_SEARCH_CAP,
        });
    }

    let mut eta = vec![0.0; k];
    let mut best_value = f64::NEG_INFINITY;
    let mut best_assignment = Vec::new();
    let mut discarded = 0u64;
    for index in 0..total as u64 {
        let mut rest = index;
        for slot in eta.iter_mut() {
            *slot = levels[(rest % levels.len() as u64) as usize];
            rest /= levels.len() as u64;
        }
        match ctx.evaluate(&eta) {
            None => discarded += 1,
            Some(value) => {
                if value > best_value {
                    best_value = value;
                    best_assignment = eta.clone();
                }
            }
        }
    }
    debug_assert!(best_assignment.len() == k, "all-ones assignment always clicks");
    Ok(SearchOutcome {
        best_value,
        best_assignment,
        assignments_scanned: total as u64,
        assignments_discarded: discarded,
    })
}

/// Entrywise ceiling on any post-selected success: for each (a, b) the
/// post-selected value is a weighted average of decoder entries, so it
/// cannot exceed max over (strategy, message) of P_i(target | message, b).
pub fn analytic_success_bound(attack: &AttackScenario) -> f64 {
    let dims = attack.scenario.dims();
    let meas = &attack.scenario.meas;
    let mut bound = f64::INFINITY;
    for a in 0..dims.alice_inputs {
        for b in 0..dims.bob_inputs {
            let target = attack.spec.target(a, b);
            let mut cell_max = f64::NEG_INFINITY;
            for i in 0..meas.strategies().len() {
                for msg in 0..dims.message_dim {
                    cell_max = cell_max.max(meas.decoder_entry(i, msg, b, target));
                }
            }
            bound = bound.min(cell_max);
        }
    }
    bound
}

/// Evidence gathered for one qualifying instance.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ImmunityEvidence {
    pub no_dl_worst_case: f64,
    /// Optimal lossless worst case for the task at this message dimension,
    /// over boxes without shared randomness.
    pub task_baseline: f64,
    pub vertex_best: f64,
    pub grid_best: f64,
    pub analytic_bound: f64,
}

/// Per-instance verdict of [`verify_worst_case_immunity`].
#[derive(Debug, Clone, serde::Serialize)]
pub enum InstanceStatus {
    /// No scanned assignment pushed the worst case above 1/2.
    Pass(ImmunityEvidence),
    /// Some assignment beat 1/2 + tol — the immunity claim failed.
    Fail(ImmunityEvidence),
    /// The instance does not satisfy the 1/2 premise (or it could not be
    /// checked), so the claim does not apply.
    Skipped { reason: String },
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct InstanceVerdict {
    pub tag: String,
    pub status: InstanceStatus,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ImmunityReport {
    pub instances: Vec<InstanceVerdict>,
    /// True when no qualifying instance failed.
    pub all_passed: bool,
    pub qualifying: usize,
}

/// Checks, instance by instance, that post-selection cannot lift the
/// worst-case success of a task whose lossless optimum is exactly 1/2.
///
/// The premise is checked first: the instance's own lossless worst case
/// must not exceed 1/2, and the task's optimal lossless worst case without
/// shared randomness ([`factorized_worst_case_optimum`]) must equal 1/2.
/// Instances failing the premise, or whose baseline is unknown at desk
/// scale, are reported as skipped. Qualifying instances are searched in
/// both vertex and grid mode and compared against 1/2 + tol and the
/// analytic ceiling.
pub fn verify_worst_case_immunity(instances: &[AttackScenario], tol: f64) -> ImmunityReport {
    let mut verdicts = Vec::with_capacity(instances.len());
    let mut all_passed = true;
    let mut qualifying = 0;
    for attack in instances {
        let status = instance_status(attack, tol);
        if let InstanceStatus::Fail(_) = status {
            all_passed = false;
        }
        if !matches!(status, InstanceStatus::Skipped { .. }) {
            qualifying += 1;
        }
        verdicts.push(InstanceVerdict {
            tag: attack.tag.clone(),
            status,
        });
    }
    ImmunityReport {
        instances: verdicts,
        all_passed,
        qualifying,
    }
}

fn instance_status(attack: &AttackScenario, tol: f64) -> InstanceStatus {
    let ideal = match simulate_ideal(&attack.scenario) {
        Ok(table) => table,
        Err(e) => {
            return InstanceStatus::Skipped {
                reason: format!("lossless statistics unavailable: {e}"),
            }
        }
    };
    let no_dl = match success_report(&ideal, &attack.spec) {
        Ok(report) => report.worst_case,
        Err(e) => {
            return InstanceStatus::Skipped {
                reason: format!("task does not fit the scenario: {e}"),
            }
        }
    };
    if no_dl > 0.5 + tol {
        return InstanceStatus::Skipped {
            reason: format!(
                "premise fails: lossless worst case {no_dl:.6} already exceeds 1/2"
            ),
        };
    }
    let d = attack.scenario.dims().message_dim;
    let task_baseline = match factorized_worst_case_optimum(&attack.spec, d) {
        Some(value) => value,
        None => {
            return InstanceStatus::Skipped {
                reason: format!(
                    "premise not decidable at desk scale for a {}-bit task through a \
                     {d}-valued message",
                    attack.spec.bits()
                ),
            }
        }
    };
    if (task_baseline - 0.5).abs() > tol {
        return InstanceStatus::Skipped {
            reason: format!(
                "premise fails: optimal lossless worst case is {task_baseline:.6}, not 1/2"
            ),
        };
    }

    let run = |mode| dl_worst_case_search(attack, mode);
    let (vertex_best, grid_best) = match (run(SearchMode::Vertex), run(SearchMode::Grid)) {
        (Ok(v), Ok(g)) => (v.best_value, g.best_value),
        (Err(e), _) | (_, Err(e)) => {
            return InstanceStatus::Skipped {
                reason: format!("search not run: {e}"),
            }
        }
    };
    let analytic_bound = analytic_success_bound(attack);
    let evidence = ImmunityEvidence {
        no_dl_worst_case: no_dl,
        task_baseline,
        vertex_best,
        grid_best,
        analytic_bound,
    };
    let within = |value: f64| value <= 0.5 + tol && value <= analytic_bound + tol;
    if within(vertex_best) && within(grid_best) {
        InstanceStatus::Pass(evidence)
    } else {
        InstanceStatus::Fail(evidence)
    }
}

/// Enumeration guard re-exported for callers sizing their instances.
pub fn searchable_in_vertex_mode(attack: &AttackScenario) -> bool {
    let dims = attack.scenario.dims();
    let k = attack.scenario.meas.strategies().len() * dims.message_dim * dims.bob_inputs;
    k <= VERTEX_VARIABLE_LIMIT && crate::classical::pair_count(dims, dims.message_dim) <= DEFAULT_ENUMERATION_CAP
}
