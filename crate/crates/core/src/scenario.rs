//! The two black boxes of a prepare-and-measure round and their statistics.
//!
//! A [`DLScenario`] holds a preparation box (strategies with priors,
//! encoders and per-input click probabilities) and a measurement box
//! (strategies with priors, decoders and per-(message, input) click
//! probabilities). Three simulators read statistics off it:
//!
//! * [`simulate_ideal`] — every detector clicks;
//! * [`simulate_dl_full`] — both boxes may refuse to click and no-click
//!   rounds are discarded, so the output is post-selected on clicks;
//! * [`simulate_dl`] — same, but with the preparation side already reduced
//!   to a single effective strategy (see [`effective_preparation`]).
//!
//! No-click is never an element of the outcome alphabet; post-selection is
//! handled analytically, so the tables are exact asymptotic statistics.

use crate::error::{Error, Result};
use crate::tables::{ClickTable, ConditionalDistribution, ScenarioDims, PROB_TOL};

/// One strategy of the preparation box.
#[derive(Debug, Clone, PartialEq)]
pub struct PrepStrategy {
    /// Probability that the box's internal generator picks this strategy.
    pub prior: f64,
    /// Row-stochastic encoder, flat (a, message) with message fastest.
    pub encoder: Vec<f64>,
    /// Click probability per input a.
    pub efficiency: Vec<f64>,
}

/// One strategy of the measurement box.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasStrategy {
    /// Probability that the box's internal generator picks this strategy.
    pub prior: f64,
    /// Decoder, flat (message, b, outcome) with outcome fastest; stochastic
    /// over outcomes for every (message, b).
    pub decoder: Vec<f64>,
    /// Click probability per (message, b), b fastest.
    pub efficiency: Vec<f64>,
}

/// The preparation-side black box.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparationBox {
    dims: ScenarioDims,
    strategies: Vec<PrepStrategy>,
}

/// The measurement-side black box.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBox {
    dims: ScenarioDims,
    strategies: Vec<MeasStrategy>,
}

fn check_prior_sum(priors: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut sum = 0.0;
    for p in priors {
        if p < -PROB_TOL {
            return Err(Error::Invariant(format!("{what} prior {p} is negative")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::Invariant(format!("{what} priors sum to {sum}")));
    }
    Ok(())
}

fn check_stochastic_rows(values: &[f64], row_len: usize, what: &str) -> Result<()> {
    for (row_idx, row) in values.chunks(row_len).enumerate() {
        let mut sum = 0.0;
        for &p in row {
            if p < -PROB_TOL {
                return Err(Error::Invariant(format!(
                    "{what} row {row_idx} has negative entry {p}"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::Invariant(format!(
                "{what} row {row_idx} sums to {sum}"
            )));
        }
    }
    Ok(())
}

fn check_efficiencies(values: &[f64], what: &str) -> Result<()> {
    for &eta in values {
        if !(0.0..=1.0 + PROB_TOL).contains(&eta) {
            return Err(Error::OutOfRange {
                name: "efficiency",
                value: eta,
                min: 0.0,
                max: 1.0,
            });
        }
        let _ = what;
    }
    Ok(())
}

impl PreparationBox {
    pub fn new(dims: ScenarioDims, strategies: Vec<PrepStrategy>) -> Result<Self> {
        if strategies.is_empty() {
            return Err(Error::Invariant("preparation box has no strategies".into()));
        }
        check_prior_sum(strategies.iter().map(|s| s.prior), "preparation")?;
        for (idx, s) in strategies.iter().enumerate() {
            if s.encoder.len() != dims.alice_inputs * dims.message_dim {
                return Err(Error::DimensionMismatch(format!(
                    "encoder of preparation strategy {idx} has {} entries, expected {}",
                    s.encoder.len(),
                    dims.alice_inputs * dims.message_dim
                )));
            }
            if s.efficiency.len() != dims.alice_inputs {
                return Err(Error::DimensionMismatch(format!(
                    "efficiency of preparation strategy {idx} has {} entries, expected {}",
                    s.efficiency.len(),
                    dims.alice_inputs
                )));
            }
            check_stochastic_rows(
                &s.encoder,
                dims.message_dim,
                &format!("encoder of preparation strategy {idx}"),
            )?;
            check_efficiencies(&s.efficiency, "preparation")?;
        }
        Ok(Self { dims, strategies })
    }

    /// A single deterministic-free strategy box with all efficiencies 1.
    pub fn single(dims: ScenarioDims, encoder: Vec<f64>) -> Result<Self> {
        Self::new(
            dims,
            vec![PrepStrategy {
                prior: 1.0,
                encoder,
                efficiency: vec![1.0; dims.alice_inputs],
            }],
        )
    }

    pub fn dims(&self) -> ScenarioDims {
        self.dims
    }

    pub fn strategies(&self) -> &[PrepStrategy] {
        &self.strategies
    }

    /// P_j(message | a) of one strategy.
    pub fn encoder_entry(&self, strategy: usize, a: usize, message: usize) -> f64 {
        self.strategies[strategy].encoder[a * self.dims.message_dim + message]
    }

    /// Effective encoder entry with all strategies mixed by their priors,
    /// efficiencies ignored: P(message | a) = Σ_j q_j P_j(message | a).
    pub fn mixed_encoder_entry(&self, a: usize, message: usize) -> f64 {
        self.strategies
            .iter()
            .map(|s| s.prior * s.encoder[a * self.dims.message_dim + message])
            .sum()
    }
}

impl MeasurementBox {
    pub fn new(dims: ScenarioDims, strategies: Vec<MeasStrategy>) -> Result<Self> {
        if strategies.is_empty() {
            return Err(Error::Invariant("measurement box has no strategies".into()));
        }
        check_prior_sum(strategies.iter().map(|s| s.prior), "measurement")?;
        let decoder_len = dims.message_dim * dims.bob_inputs * dims.outcomes;
        let eff_len = dims.message_dim * dims.bob_inputs;
        for (idx, s) in strategies.iter().enumerate() {
            if s.decoder.len() != decoder_len {
                return Err(Error::DimensionMismatch(format!(
                    "decoder of measurement strategy {idx} has {} entries, expected {decoder_len}",
                    s.decoder.len()
                )));
            }
            if s.efficiency.len() != eff_len {
                return Err(Error::DimensionMismatch(format!(
                    "efficiency of measurement strategy {idx} has {} entries, expected {eff_len}",
                    s.efficiency.len()
                )));
            }
            check_stochastic_rows(
                &s.decoder,
                dims.outcomes,
                &format!("decoder of measurement strategy {idx}"),
            )?;
            check_efficiencies(&s.efficiency, "measurement")?;
        }
        Ok(Self { dims, strategies })
    }

    /// A single-strategy box with all efficiencies 1.
    pub fn single(dims: ScenarioDims, decoder: Vec<f64>) -> Result<Self> {
        Self::new(
            dims,
            vec![MeasStrategy {
                prior: 1.0,
                decoder,
                efficiency: vec![1.0; dims.message_dim * dims.bob_inputs],
            }],
        )
    }

    pub fn dims(&self) -> ScenarioDims {
        self.dims
    }

    pub fn strategies(&self) -> &[MeasStrategy] {
        &self.strategies
    }

    /// P_i(outcome | message, b) of one strategy.
    pub fn decoder_entry(
        &self,
        strategy: usize,
        message: usize,
        b: usize,
        outcome: usize,
    ) -> f64 {
        let d = &self.dims;
        self.strategies[strategy].decoder
            [(message * d.bob_inputs + b) * d.outcomes + outcome]
    }

    /// η_i(message, b) of one strategy.
    pub fn efficiency_entry(&self, strategy: usize, message: usize, b: usize) -> f64 {
        self.strategies[strategy].efficiency[message * self.dims.bob_inputs + b]
    }
}

/// A full scenario: one preparation box and one measurement box over the
/// same alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct DLScenario {
    pub prep: PreparationBox,
    pub meas: MeasurementBox,
}

impl DLScenario {
    pub fn new(prep: PreparationBox, meas: MeasurementBox) -> Result<Self> {
        if prep.dims != meas.dims {
            return Err(Error::DimensionMismatch(format!(
                "preparation box {:?} vs measurement box {:?}",
                prep.dims, meas.dims
            )));
        }
        Ok(Self { prep, meas })
    }

    pub fn dims(&self) -> ScenarioDims {
        self.prep.dims
    }
}

/// Statistics with every detector clicking:
/// P(outcome | a, b) = Σ_{i,j,A} p_i q_j P_i(outcome | A, b) P_j(A | a).
pub fn simulate_ideal(s: &DLScenario) -> Result<ConditionalDistribution> {
    let dims = s.dims();
    ConditionalDistribution::from_fn(dims, |outcome, a, b| {
        let mut total = 0.0;
        for msg in 0..dims.message_dim {
            let p_msg = s.prep.mixed_encoder_entry(a, msg);
            if p_msg == 0.0 {
                continue;
            }
            for (i, ms) in s.meas.strategies().iter().enumerate() {
                total += ms.prior * p_msg * s.meas.decoder_entry(i, msg, b, outcome);
            }
        }
        total
    })
}

/// Post-selected statistics with both boxes allowed to refuse a click.
///
/// Numerator and denominator follow the full post-selection formula with
/// both sides' efficiencies in place; errors with
/// [`Error::ZeroClickProbability`] if some input cell can never click.
pub fn simulate_dl_full(s: &DLScenario) -> Result<ConditionalDistribution> {
    let dims = s.dims();
    let mut entries = vec![0.0; dims.table_len()];
    for a in 0..dims.alice_inputs {
        for b in 0..dims.bob_inputs {
            // Per-message weight Σ_j q_j η_j(a) P_j(A|a), then Bob's side.
            let mut denominator = 0.0;
            let mut numerators = vec![0.0; dims.outcomes];
            for msg in 0..dims.message_dim {
                let alice_weight: f64 = s
                    .prep
                    .strategies()
                    .iter()
                    .map(|ps| ps.prior * ps.efficiency[a] * ps.encoder[a * dims.message_dim + msg])
                    .sum();
                if alice_weight == 0.0 {
                    continue;
                }
                for (i, ms) in s.meas.strategies().iter().enumerate() {
                    let w = ms.prior * s.meas.efficiency_entry(i, msg, b) * alice_weight;
                    if w == 0.0 {
                        continue;
                    }
                    denominator += w;
                    for outcome in 0..dims.outcomes {
                        numerators[outcome] += w * s.meas.decoder_entry(i, msg, b, outcome);
                    }
                }
            }
            if denominator <= 0.0 {
                return Err(Error::ZeroClickProbability { a, b: Some(b) });
            }
            for outcome in 0..dims.outcomes {
                entries[crate::tables::index_of(&dims, outcome, a, b)] =
                    numerators[outcome] / denominator;
            }
        }
    }
    ConditionalDistribution::new(dims, entries)
}

/// Post-selected statistics with the preparation side treated as clicking
/// always (its efficiencies read as 1): the simplified single-sided form.
pub fn simulate_dl(s: &DLScenario) -> Result<ConditionalDistribution> {
    let dims = s.dims();
    let mut entries = vec![0.0; dims.table_len()];
    for a in 0..dims.alice_inputs {
        for b in 0..dims.bob_inputs {
            let mut denominator = 0.0;
            let mut numerators = vec![0.0; dims.outcomes];
            for msg in 0..dims.message_dim {
                let p_msg = s.prep.mixed_encoder_entry(a, msg);
                if p_msg == 0.0 {
                    continue;
                }
                for (i, ms) in s.meas.strategies().iter().enumerate() {
                    let w = ms.prior * s.meas.efficiency_entry(i, msg, b) * p_msg;
                    if w == 0.0 {
                        continue;
                    }
                    denominator += w;
                    for outcome in 0..dims.outcomes {
                        numerators[outcome] += w * s.meas.decoder_entry(i, msg, b, outcome);
                    }
                }
            }
            if denominator <= 0.0 {
                return Err(Error::ZeroClickProbability { a, b: Some(b) });
            }
            for outcome in 0..dims.outcomes {
                entries[crate::tables::index_of(&dims, outcome, a, b)] =
                    numerators[outcome] / denominator;
            }
        }
    }
    ConditionalDistribution::new(dims, entries)
}

/// Folds the preparation box's own post-selection into a single clicking
/// strategy: P'(A|a) = Σ_j q_j η_j(a) P_j(A|a) / Σ_j q_j η_j(a), with the
/// new efficiency identically 1.
///
/// Whatever the preparation side gains by refusing clicks it can gain by
/// re-mixing its strategies; this constructor makes that reduction explicit
/// and testable.
pub fn effective_preparation(prep: &PreparationBox) -> Result<PreparationBox> {
    let dims = prep.dims();
    let mut encoder = vec![0.0; dims.alice_inputs * dims.message_dim];
    for a in 0..dims.alice_inputs {
        let click: f64 = prep
            .strategies()
            .iter()
            .map(|s| s.prior * s.efficiency[a])
            .sum();
        if click <= 0.0 {
            return Err(Error::ZeroClickProbability { a, b: None });
        }
        for msg in 0..dims.message_dim {
            let weighted: f64 = prep
                .strategies()
                .iter()
                .map(|s| s.prior * s.efficiency[a] * s.encoder[a * dims.message_dim + msg])
                .sum();
            encoder[a * dims.message_dim + msg] = weighted / click;
        }
    }
    PreparationBox::single(dims, encoder)
}

/// Probability that the measurement box clicks given it received `message`
/// and input `b`: Σ_i p_i η_i(message, b).
pub fn click_given_message(s: &DLScenario, message: usize, b: usize) -> Result<f64> {
    let dims = s.dims();
    if message >= dims.message_dim {
        return Err(Error::IndexOutOfRange {
            name: "message",
            index: message,
            len: dims.message_dim,
        });
    }
    if b >= dims.bob_inputs {
        return Err(Error::IndexOutOfRange {
            name: "b",
            index: b,
            len: dims.bob_inputs,
        });
    }
    Ok(s.meas
        .strategies()
        .iter()
        .enumerate()
        .map(|(i, ms)| ms.prior * s.meas.efficiency_entry(i, message, b))
        .sum())
}

/// Probability that the measurement box clicks given the round's inputs:
/// Σ_{i,A} p_i η_i(A, b) P(A|a), which is exactly the denominator of
/// [`simulate_dl`]. Unlike [`click_given_message`] this quantity is
/// observable by the parties.
pub fn click_given_inputs(s: &DLScenario, a: usize, b: usize) -> Result<f64> {
    let dims = s.dims();
    dims.check_input(a, b)?;
    let mut total = 0.0;
    for msg in 0..dims.message_dim {
        let p_msg = s.prep.mixed_encoder_entry(a, msg);
        if p_msg == 0.0 {
            continue;
        }
        for (i, ms) in s.meas.strategies().iter().enumerate() {
            total += ms.prior * s.meas.efficiency_entry(i, msg, b) * p_msg;
        }
    }
    Ok(total)
}

/// The same boxes with every detector forced to click: strips the
/// post-selection channel while keeping priors, encoders and decoders.
pub fn with_unit_efficiencies(s: &DLScenario) -> DLScenario {
    let dims = s.dims();
    let prep = PreparationBox::new(
        dims,
        s.prep
            .strategies()
            .iter()
            .map(|st| PrepStrategy {
                prior: st.prior,
                encoder: st.encoder.clone(),
                efficiency: vec![1.0; dims.alice_inputs],
            })
            .collect(),
    )
    .expect("source box was valid");
    let meas = MeasurementBox::new(
        dims,
        s.meas
            .strategies()
            .iter()
            .map(|st| MeasStrategy {
                prior: st.prior,
                decoder: st.decoder.clone(),
                efficiency: vec![1.0; dims.message_dim * dims.bob_inputs],
            })
            .collect(),
    )
    .expect("source box was valid");
    DLScenario { prep, meas }
}

/// The click table Q(click | a, b) over all input cells.
pub fn click_table(s: &DLScenario) -> Result<ClickTable> {
    let dims = s.dims();
    let mut entries = vec![0.0; dims.cells()];
    for a in 0..dims.alice_inputs {
        for b in 0..dims.bob_inputs {
            entries[a * dims.bob_inputs + b] = click_given_inputs(s, a, b)?;
        }
    }
    ClickTable::new(dims, entries)
}
