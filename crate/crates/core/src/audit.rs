//! The parties'-eye-view certifier.
//!
//! Ingests either exact tables or event logs, estimates the post-selected
//! statistics and click rates, checks the observable click-independence
//! condition, runs the classical-membership test, and combines the three
//! into a verdict. A statistics table alone can always be explained away by
//! input-dependent post-selection; the verdict is loss-robust only when the
//! click rate is independent of the preparation input and the message is
//! binary classical.

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classical::{classical_membership, MembershipResult};
use crate::error::{Error, Result};
use crate::scenario::{click_given_message, DLScenario};
use crate::tables::{ClickTable, ConditionalDistribution, ScenarioDims};

/// Outcome of one recorded round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundOutcome {
    Click(usize),
    NoClick,
}

/// One recorded round: inputs and what the measurement box reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Round {
    pub a: usize,
    pub b: usize,
    pub outcome: RoundOutcome,
}

/// A list of recorded rounds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    pub rounds: Vec<Round>,
}

impl EventLog {
    /// Parses the line-oriented format `a b outcome`, one round per line,
    /// where `outcome` is an outcome index or the literal `NC`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rounds = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::LogParse {
                    line: idx + 1,
                    message: format!("expected `a b outcome`, found {} fields", fields.len()),
                });
            }
            let parse_index = |field: &str, name: &str| {
                field.parse::<usize>().map_err(|_| Error::LogParse {
                    line: idx + 1,
                    message: format!("{name} `{field}` is not a nonnegative integer"),
                })
            };
            let a = parse_index(fields[0], "input a")?;
            let b = parse_index(fields[1], "input b")?;
            let outcome = if fields[2] == "NC" {
                RoundOutcome::NoClick
            } else {
                RoundOutcome::Click(parse_index(fields[2], "outcome")?)
            };
            rounds.push(Round { a, b, outcome });
        }
        Ok(Self { rounds })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for round in &self.rounds {
            match round.outcome {
                RoundOutcome::Click(outcome) => {
                    out.push_str(&format!("{} {} {}\n", round.a, round.b, outcome))
                }
                RoundOutcome::NoClick => out.push_str(&format!("{} {} NC\n", round.a, round.b)),
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }
}

/// Post-selected frequencies and click rates from a log.
///
/// P̂(outcome | a, b) counts clicking rounds only; Q̂(a, b) is clicks over
/// rounds. Every cell must have at least one click.
pub fn estimate_from_log(
    log: &EventLog,
    dims: ScenarioDims,
) -> Result<(ConditionalDistribution, ClickTable)> {
    let cells = dims.cells();
    let mut rounds = vec![0u64; cells];
    let mut clicks = vec![0u64; cells];
    let mut outcome_counts = vec![0u64; dims.table_len()];
    for round in &log.rounds {
        dims.check_input(round.a, round.b)?;
        let cell = round.a * dims.bob_inputs + round.b;
        rounds[cell] += 1;
        if let RoundOutcome::Click(outcome) = round.outcome {
            if outcome >= dims.outcomes {
                return Err(Error::IndexOutOfRange {
                    name: "outcome",
                    index: outcome,
                    len: dims.outcomes,
                });
            }
            clicks[cell] += 1;
            outcome_counts[outcome * cells + cell] += 1;
        }
    }
    for a in 0..dims.alice_inputs {
        for b in 0..dims.bob_inputs {
            if clicks[a * dims.bob_inputs + b] == 0 {
                return Err(Error::EmptyCell { a, b });
            }
        }
    }
    let table = ConditionalDistribution::from_fn(dims, |outcome, a, b| {
        let cell = a * dims.bob_inputs + b;
        outcome_counts[outcome * cells + cell] as f64 / clicks[cell] as f64
    })?;
    let click_table = ClickTable::from_fn(dims, |a, b| {
        let cell = a * dims.bob_inputs + b;
        clicks[cell] as f64 / rounds[cell] as f64
    })?;
    Ok((table, click_table))
}

/// Result of a click-independence check.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConditionCheck {
    pub passed: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
}

/// The observable condition: for every measurement input b the click rate
/// must not depend on the preparation input a.
pub fn check_click_input_independence(clicks: &ClickTable, tol: f64) -> ConditionCheck {
    let dims = clicks.dims();
    let mut max_deviation: f64 = 0.0;
    for b in 0..dims.bob_inputs {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in 0..dims.alice_inputs {
            let q = clicks.get(a, b);
            lo = lo.min(q);
            hi = hi.max(q);
        }
        max_deviation = max_deviation.max(hi - lo);
    }
    ConditionCheck {
        passed: max_deviation <= tol,
        max_deviation,
        tolerance: tol,
    }
}

/// The diagnostics-only condition: for every measurement input b the click
/// rate must not depend on the received message. This needs the full boxes,
/// which the parties themselves never see.
pub fn check_click_message_independence(s: &DLScenario, tol: f64) -> Result<ConditionCheck> {
    let dims = s.dims();
    let mut max_deviation: f64 = 0.0;
    for b in 0..dims.bob_inputs {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for msg in 0..dims.message_dim {
            let q = click_given_message(s, msg, b)?;
            lo = lo.min(q);
            hi = hi.max(q);
        }
        max_deviation = max_deviation.max(hi - lo);
    }
    Ok(ConditionCheck {
        passed: max_deviation <= tol,
        max_deviation,
        tolerance: tol,
    })
}

/// Default condition tolerance for exact tables.
pub const EXACT_CONDITION_TOL: f64 = 1e-6;

/// Condition tolerance for estimated tables: three standard errors of the
/// difference of two binomial proportions at the given per-cell round count.
pub fn statistical_tolerance(min_cell_rounds: u64) -> f64 {
    assert!(min_cell_rounds > 0, "need at least one round per cell");
    3.0 * (0.5 / min_cell_rounds as f64).sqrt()
}

/// Membership outcome as recorded by an audit. Enumeration caps can make
/// the membership test unaffordable at large message dimensions; the audit
/// then records that no decision was reached rather than failing outright.
#[derive(Debug, Clone)]
pub enum AuditMembership {
    Decided(MembershipResult),
    Undecided { reason: String },
}

impl AuditMembership {
    /// Some(true/false) when decided, None otherwise.
    pub fn feasible(&self) -> Option<bool> {
        match self {
            AuditMembership::Decided(result) => Some(result.is_feasible()),
            AuditMembership::Undecided { .. } => None,
        }
    }
}

/// Overall audit verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AuditVerdict {
    /// No 2-dimensional classical model and the click rate is input
    /// independent: post-selection cannot have produced the statistics.
    CertifiedNonClassical,
    /// A classical model at the requested dimension reproduces the table.
    ClassicallyExplainable,
    /// Non-classical table, but the click rate depends on the preparation
    /// input, so post-selection could be responsible.
    InputDependentClicks,
    /// No robustness claim is possible: the guarantee covers binary
    /// classical messages only.
    DimensionOutOfScope,
    /// The membership test was not decided at this scale.
    MembershipUndecided,
}

impl std::fmt::Display for AuditVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let text = match self {
            AuditVerdict::CertifiedNonClassical => {
                "certified non-classical (robust to detection losses)"
            }
            AuditVerdict::ClassicallyExplainable => {
                "classically explainable at the requested message dimension"
            }
            AuditVerdict::InputDependentClicks => {
                "non-classical, but the click rate depends on the preparation input; \
                 post-selection could explain the statistics"
            }
            AuditVerdict::DimensionOutOfScope => {
                "no loss-robustness claim: the guarantee applies only to 2-dimensional \
                 classical messages"
            }
            AuditVerdict::MembershipUndecided => {
                "classical membership not decided at this scale; no claim"
            }
        };
        f.write_str(text)
    }
}

/// Full audit output.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub statistics: ConditionalDistribution,
    pub clicks: ClickTable,
    pub click_input_independence: ConditionCheck,
    pub dimension: usize,
    pub membership: AuditMembership,
    pub verdict: AuditVerdict,
}

/// Runs the full audit: click-independence condition plus classical
/// membership at dimension `d`, combined into a verdict.
///
/// `tol` is the condition tolerance (see [`EXACT_CONDITION_TOL`] and
/// [`statistical_tolerance`]); membership runs at the crate default.
pub fn audit(
    statistics: &ConditionalDistribution,
    clicks: &ClickTable,
    d: usize,
    tol: f64,
) -> Result<AuditReport> {
    if statistics.dims().alice_inputs != clicks.dims().alice_inputs
        || statistics.dims().bob_inputs != clicks.dims().bob_inputs
    {
        return Err(Error::DimensionMismatch(format!(
            "statistics over {:?} but clicks over {:?}",
            statistics.dims(),
            clicks.dims()
        )));
    }
    let condition = check_click_input_independence(clicks, tol);
    let membership = match classical_membership(statistics, d, 1e-9) {
        Ok(result) => AuditMembership::Decided(result),
        Err(e @ Error::EnumerationTooLarge { .. }) => AuditMembership::Undecided {
            reason: e.to_string(),
        },
        Err(e) => return Err(e),
    };
    let verdict = match &membership {
        AuditMembership::Decided(MembershipResult::Feasible { .. }) => {
            AuditVerdict::ClassicallyExplainable
        }
        AuditMembership::Decided(MembershipResult::Infeasible { .. }) => {
            if !condition.passed {
                AuditVerdict::InputDependentClicks
            } else if d == 2 {
                AuditVerdict::CertifiedNonClassical
            } else {
                AuditVerdict::DimensionOutOfScope
            }
        }
        AuditMembership::Undecided { .. } => {
            if d == 2 {
                AuditVerdict::MembershipUndecided
            } else {
                AuditVerdict::DimensionOutOfScope
            }
        }
    };
    Ok(AuditReport {
        statistics: statistics.clone(),
        clicks: clicks.clone(),
        click_input_independence: condition,
        dimension: d,
        membership,
        verdict,
    })
}

fn sample_categorical(rng: &mut impl Rng, weights: impl Iterator<Item = f64>) -> usize {
    let draw: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (idx, w) in weights.enumerate() {
        acc += w;
        last = idx;
        if draw < acc {
            return idx;
        }
    }
    last
}

/// Monte-Carlo round sampler for ingestion testing: draws inputs uniformly
/// and walks one round through both boxes, recording `NC` whenever either
/// detector stays silent. Deterministic for a fixed seed.
pub fn sample_event_log(s: &DLScenario, rounds: usize, seed: u64) -> EventLog {
    let dims = s.dims();
    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    let mut rng = SmallRng::from_rng(&mut seeder);
    let mut log = EventLog {
        rounds: Vec::with_capacity(rounds),
    };
    for _ in 0..rounds {
        let a = rng.random_range(0..dims.alice_inputs);
        let b = rng.random_range(0..dims.bob_inputs);
        let outcome = sample_round(s, a, b, &mut rng);
        log.rounds.push(Round { a, b, outcome });
    }
    log
}

fn sample_round(s: &DLScenario, a: usize, b: usize, rng: &mut impl Rng) -> RoundOutcome {
    let dims = s.dims();
    let j = sample_categorical(rng, s.prep.strategies().iter().map(|st| st.prior));
    let prep_strategy = &s.prep.strategies()[j];
    if rng.random::<f64>() >= prep_strategy.efficiency[a] {
        return RoundOutcome::NoClick;
    }
    let msg = sample_categorical(
        rng,
        (0..dims.message_dim).map(|m| prep_strategy.encoder[a * dims.message_dim + m]),
    );
    let i = sample_categorical(rng, s.meas.strategies().iter().map(|st| st.prior));
    if rng.random::<f64>() >= s.meas.efficiency_entry(i, msg, b) {
        return RoundOutcome::NoClick;
    }
    let outcome = sample_categorical(
        rng,
        (0..dims.outcomes).map(|o| s.meas.decoder_entry(i, msg, b, o)),
    );
    RoundOutcome::Click(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::attack_3_to_log6;
    use crate::quantum::{qrac2_protocol, quantum_statistics};
    use crate::scenario::{click_given_inputs, click_table, simulate_dl, PreparationBox};
    use crate::scenario::{MeasStrategy, MeasurementBox};
    use crate::tables::total_variation_distance;

    fn dims(n_a: usize, n_b: usize, n_msg: usize, n_out: usize) -> ScenarioDims {
        ScenarioDims::new(n_a, n_b, n_msg, n_out).unwrap()
    }

    #[test]
    fn log_round_trips_through_text() {
        let log = EventLog {
            rounds: vec![
                Round {
                    a: 0,
                    b: 1,
                    outcome: RoundOutcome::Click(1),
                },
                Round {
                    a: 2,
                    b: 0,
                    outcome: RoundOutcome::NoClick,
                },
            ],
        };
        let text = log.to_text();
        assert_eq!(text, "0 1 1\n2 0 NC\n");
        assert_eq!(EventLog::parse(&text).unwrap(), log);
    }

    #[test]
    fn parse_reports_line_and_field() {
        let err = EventLog::parse("0 0 1\n0 x 1\n").unwrap_err();
        match err {
            Error::LogParse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains('x'));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn clean_log_estimates_exactly() {
        let d = dims(2, 1, 2, 2);
        let mut rounds = Vec::new();
        for a in 0..2 {
            for _ in 0..4 {
                rounds.push(Round {
                    a,
                    b: 0,
                    outcome: RoundOutcome::Click(a),
                });
            }
        }
        let (table, clicks) = estimate_from_log(&EventLog { rounds }, d).unwrap();
        for a in 0..2 {
            assert_eq!(table.get(a, a, 0), 1.0);
            assert_eq!(clicks.get(a, 0), 1.0);
        }
    }

    #[test]
    fn single_click_per_cell_gives_point_mass_estimates() {
        let d = dims(2, 1, 2, 2);
        let rounds = vec![
            Round {
                a: 0,
                b: 0,
                outcome: RoundOutcome::Click(1),
            },
            Round {
                a: 1,
                b: 0,
                outcome: RoundOutcome::Click(0),
            },
        ];
        let (table, _) = estimate_from_log(&EventLog { rounds }, d).unwrap();
        for entry in table.entries() {
            assert!(*entry == 0.0 || *entry == 1.0);
        }
    }

    #[test]
    fn missing_cell_is_an_error() {
        let d = dims(2, 1, 2, 2);
        let rounds = vec![
            Round {
                a: 0,
                b: 0,
                outcome: RoundOutcome::Click(0),
            },
            Round {
                a: 1,
                b: 0,
                outcome: RoundOutcome::NoClick,
            },
        ];
        assert_eq!(
            estimate_from_log(&EventLog { rounds }, d),
            Err(Error::EmptyCell { a: 1, b: 0 })
        );
    }

    #[test]
    fn sampled_log_approaches_the_exact_statistics() {
        // Alice clicks always here, so the post-selected table is the
        // simplified one and the click rate is the observable one.
        let d = dims(2, 2, 2, 2);
        let prep = PreparationBox::single(d, vec![0.9, 0.1, 0.2, 0.8]).unwrap();
        let meas = MeasurementBox::new(
            d,
            vec![MeasStrategy {
                prior: 1.0,
                decoder: vec![
                    0.8, 0.2, 0.7, 0.3, // msg 0
                    0.1, 0.9, 0.4, 0.6, // msg 1
                ],
                efficiency: vec![0.9, 0.6, 0.5, 0.8],
            }],
        )
        .unwrap();
        let s = DLScenario::new(prep, meas).unwrap();
        let log = sample_event_log(&s, 1_000_000, 0);
        let (table, clicks) = estimate_from_log(&log, d).unwrap();

        let exact = simulate_dl(&s).unwrap();
        assert!(total_variation_distance(&table, &exact).unwrap() <= 5e-3);
        for a in 0..2 {
            for b in 0..2 {
                let q = click_given_inputs(&s, a, b).unwrap();
                assert!((clicks.get(a, b) - q).abs() <= 5e-3);
            }
        }
    }

    #[test]
    fn input_independence_check_passes_and_fails() {
        let d = dims(2, 1, 2, 2);
        let constant = ClickTable::new(d, vec![0.3, 0.3]).unwrap();
        let check = check_click_input_independence(&constant, 1e-6);
        assert!(check.passed);
        assert_eq!(check.max_deviation, 0.0);

        let skewed = ClickTable::new(d, vec![0.9, 0.5]).unwrap();
        let check = check_click_input_independence(&skewed, 1e-6);
        assert!(!check.passed);
        assert!((check.max_deviation - 0.4).abs() < 1e-12);
    }

    #[test]
    fn bit_trit_attack_clicks_pass_the_observable_check_anyway() {
        // The attack hides behind a constant 1/3 click rate: the observable
        // condition is necessary, not sufficient, outside d = 2.
        let attack = attack_3_to_log6();
        let clicks = click_table(&attack.scenario).unwrap();
        assert!(check_click_input_independence(&clicks, 1e-9).passed);
    }

    #[test]
    fn message_independence_check_detects_the_attack() {
        let attack = attack_3_to_log6();
        let check = check_click_message_independence(&attack.scenario, 1e-6).unwrap();
        assert!(!check.passed);
        assert!((check.max_deviation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn message_independence_passes_constant_efficiency() {
        let d = dims(2, 1, 2, 2);
        let prep = PreparationBox::single(d, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let meas = MeasurementBox::new(
            d,
            vec![MeasStrategy {
                prior: 1.0,
                decoder: vec![1.0, 0.0, 0.0, 1.0],
                efficiency: vec![0.7, 0.7],
            }],
        )
        .unwrap();
        let s = DLScenario::new(prep, meas).unwrap();
        let check = check_click_message_independence(&s, 1e-9).unwrap();
        assert!(check.passed);
        assert_eq!(check.max_deviation, 0.0);
    }

    #[test]
    fn audit_certifies_the_square_protocol() {
        let table = quantum_statistics(&qrac2_protocol()).unwrap();
        let clicks = ClickTable::new(table.dims(), vec![1.0; table.dims().cells()]).unwrap();
        let report = audit(&table, &clicks, 2, EXACT_CONDITION_TOL).unwrap();
        assert_eq!(report.membership.feasible(), Some(false));
        assert_eq!(report.verdict, AuditVerdict::CertifiedNonClassical);
    }

    #[test]
    fn audit_flags_classical_relay_as_explainable() {
        let d = dims(2, 1, 2, 2);
        let table = ConditionalDistribution::new(d, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let clicks = ClickTable::new(d, vec![1.0, 1.0]).unwrap();
        let report = audit(&table, &clicks, 2, EXACT_CONDITION_TOL).unwrap();
        assert_eq!(report.verdict, AuditVerdict::ClassicallyExplainable);
    }

    #[test]
    fn audit_does_not_overclaim_beyond_binary_messages() {
        let attack = attack_3_to_log6();
        let table = simulate_dl(&attack.scenario).unwrap();
        let clicks = click_table(&attack.scenario).unwrap();
        let report = audit(&table, &clicks, 6, EXACT_CONDITION_TOL).unwrap();
        assert!(report.click_input_independence.passed);
        // Membership at d = 6 over these alphabets exceeds the enumeration
        // cap; either way the verdict cannot claim robustness.
        assert_eq!(report.membership.feasible(), None);
        assert_eq!(report.verdict, AuditVerdict::DimensionOutOfScope);
    }

    #[test]
    fn statistical_tolerance_shrinks_with_rounds() {
        assert!(statistical_tolerance(100) > statistical_tolerance(10_000));
        assert!((statistical_tolerance(10_000) - 3.0 * (0.5f64 / 10_000.0).sqrt()).abs() < 1e-15);
    }
}
