//! JSON file formats: scenario files consumed by the CLI, statistics
//! files, and the report shapes the CLI emits.
//!
//! A scenario file carries `dims` plus either classical `prep`/`meas`
//! blocks or a `quantum` block (Bloch-vector states and measurement axes).
//! Probabilities are plain decimal numbers; omitted efficiency blocks
//! default to 1.

use serde::{Deserialize, Serialize};

use crate::audit::{AuditMembership, AuditReport, ConditionCheck};
use crate::classical::MembershipResult;
use crate::error::{Error, Result};
use crate::quantum::{BinaryQubitMeasurement, QuantumPrepareMeasure, QubitState};
use crate::scenario::{DLScenario, MeasStrategy, MeasurementBox, PrepStrategy, PreparationBox};
use crate::tables::{ClickTable, ConditionalDistribution, ScenarioDims};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DimsDto {
    pub n_a: usize,
    pub n_b: usize,
    #[serde(rename = "n_A")]
    pub n_msg: usize,
    #[serde(rename = "n_B")]
    pub n_out: usize,
}

impl DimsDto {
    pub fn to_dims(self) -> Result<ScenarioDims> {
        ScenarioDims::new(self.n_a, self.n_b, self.n_msg, self.n_out)
    }

    pub fn from_dims(dims: ScenarioDims) -> Self {
        Self {
            n_a: dims.alice_inputs,
            n_b: dims.bob_inputs,
            n_msg: dims.message_dim,
            n_out: dims.outcomes,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepStrategyDto {
    pub q: f64,
    /// n_a rows of n_A entries.
    pub encoder: Vec<Vec<f64>>,
    /// Length n_a; defaults to all 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_a: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasStrategyDto {
    pub p: f64,
    /// n_A × n_b rows of n_B entries.
    pub decoder: Vec<Vec<Vec<f64>>>,
    /// n_A rows of n_b entries; defaults to all 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepDto {
    pub strategies: Vec<PrepStrategyDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasDto {
    pub strategies: Vec<MeasStrategyDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantumDto {
    pub states: Vec<[f64; 3]>,
    pub measurements: Vec<[f64; 3]>,
}

/// Top-level scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub dims: DimsDto,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prep: Option<PrepDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meas: Option<MeasDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantum: Option<QuantumDto>,
}

fn flatten_rows(rows: &[Vec<f64>], expected_rows: usize, row_len: usize, what: &str) -> Result<Vec<f64>> {
    if rows.len() != expected_rows {
        return Err(Error::Schema(format!(
            "{what}: expected {expected_rows} rows, found {}",
            rows.len()
        )));
    }
    let mut flat = Vec::with_capacity(expected_rows * row_len);
    for (idx, row) in rows.iter().enumerate() {
        if row.len() != row_len {
            return Err(Error::Schema(format!(
                "{what}: row {idx} has {} entries, expected {row_len}",
                row.len()
            )));
        }
        flat.extend_from_slice(row);
    }
    Ok(flat)
}

impl ScenarioFile {
    pub fn from_scenario(s: &DLScenario) -> Self {
        let dims = s.dims();
        let prep = PrepDto {
            strategies: s
                .prep
                .strategies()
                .iter()
                .map(|st| PrepStrategyDto {
                    q: st.prior,
                    encoder: st
                        .encoder
                        .chunks(dims.message_dim)
                        .map(|row| row.to_vec())
                        .collect(),
                    eta_a: Some(st.efficiency.clone()),
                })
                .collect(),
        };
        let meas = MeasDto {
            strategies: s
                .meas
                .strategies()
                .iter()
                .map(|st| MeasStrategyDto {
                    p: st.prior,
                    decoder: st
                        .decoder
                        .chunks(dims.bob_inputs * dims.outcomes)
                        .map(|per_msg| {
                            per_msg
                                .chunks(dims.outcomes)
                                .map(|row| row.to_vec())
                                .collect()
                        })
                        .collect(),
                    eta: Some(
                        st.efficiency
                            .chunks(dims.bob_inputs)
                            .map(|row| row.to_vec())
                            .collect(),
                    ),
                })
                .collect(),
        };
        Self {
            dims: DimsDto::from_dims(dims),
            prep: Some(prep),
            meas: Some(meas),
            quantum: None,
        }
    }

    pub fn from_quantum(protocol: &QuantumPrepareMeasure) -> Self {
        Self {
            dims: DimsDto {
                n_a: protocol.states.len(),
                n_b: protocol.measurements.len(),
                n_msg: 2,
                n_out: 2,
            },
            prep: None,
            meas: None,
            quantum: Some(QuantumDto {
                states: protocol.states.iter().map(|s| s.bloch()).collect(),
                measurements: protocol.measurements.iter().map(|m| m.axis()).collect(),
            }),
        }
    }

    pub fn has_quantum_block(&self) -> bool {
        self.quantum.is_some()
    }

    /// Builds the classical boxes described by the file.
    pub fn to_scenario(&self) -> Result<DLScenario> {
        if self.quantum.is_some() {
            return Err(Error::Schema(
                "file holds a quantum block; there are no classical boxes to build".into(),
            ));
        }
        let dims = self.dims.to_dims()?;
        let prep_dto = self
            .prep
            .as_ref()
            .ok_or_else(|| Error::Schema("missing `prep` block".into()))?;
        let meas_dto = self
            .meas
            .as_ref()
            .ok_or_else(|| Error::Schema("missing `meas` block".into()))?;

        let mut prep_strategies = Vec::with_capacity(prep_dto.strategies.len());
        for (idx, st) in prep_dto.strategies.iter().enumerate() {
            let encoder = flatten_rows(
                &st.encoder,
                dims.alice_inputs,
                dims.message_dim,
                &format!("prep.strategies[{idx}].encoder"),
            )?;
            let efficiency = match &st.eta_a {
                None => vec![1.0; dims.alice_inputs],
                Some(eta) => {
                    if eta.len() != dims.alice_inputs {
                        return Err(Error::Schema(format!(
                            "prep.strategies[{idx}].eta_a has {} entries, expected {}",
                            eta.len(),
                            dims.alice_inputs
                        )));
                    }
                    eta.clone()
                }
            };
            prep_strategies.push(PrepStrategy {
                prior: st.q,
                encoder,
                efficiency,
            });
        }

        let mut meas_strategies = Vec::with_capacity(meas_dto.strategies.len());
        for (idx, st) in meas_dto.strategies.iter().enumerate() {
            if st.decoder.len() != dims.message_dim {
                return Err(Error::Schema(format!(
                    "meas.strategies[{idx}].decoder: expected {} message blocks, found {}",
                    dims.message_dim,
                    st.decoder.len()
                )));
            }
            let mut decoder = Vec::with_capacity(dims.message_dim * dims.bob_inputs * dims.outcomes);
            for (msg, block) in st.decoder.iter().enumerate() {
                decoder.extend(flatten_rows(
                    block,
                    dims.bob_inputs,
                    dims.outcomes,
                    &format!("meas.strategies[{idx}].decoder[{msg}]"),
                )?);
            }
            let efficiency = match &st.eta {
                None => vec![1.0; dims.message_dim * dims.bob_inputs],
                Some(eta) => flatten_rows(
                    eta,
                    dims.message_dim,
                    dims.bob_inputs,
                    &format!("meas.strategies[{idx}].eta"),
                )?,
            };
            meas_strategies.push(MeasStrategy {
                prior: st.p,
                decoder,
                efficiency,
            });
        }

        DLScenario::new(
            PreparationBox::new(dims, prep_strategies)?,
            MeasurementBox::new(dims, meas_strategies)?,
        )
    }

    /// Builds the quantum protocol described by the file.
    pub fn to_quantum(&self) -> Result<QuantumPrepareMeasure> {
        let block = self
            .quantum
            .as_ref()
            .ok_or_else(|| Error::Schema("missing `quantum` block".into()))?;
        if block.states.len() != self.dims.n_a {
            return Err(Error::Schema(format!(
                "quantum.states has {} entries, dims.n_a is {}",
                block.states.len(),
                self.dims.n_a
            )));
        }
        if block.measurements.len() != self.dims.n_b {
            return Err(Error::Schema(format!(
                "quantum.measurements has {} entries, dims.n_b is {}",
                block.measurements.len(),
                self.dims.n_b
            )));
        }
        Ok(QuantumPrepareMeasure {
            states: block
                .states
                .iter()
                .map(|&bloch| QubitState::new(bloch))
                .collect::<Result<_>>()?,
            measurements: block
                .measurements
                .iter()
                .map(|&axis| BinaryQubitMeasurement::new(axis))
                .collect::<Result<_>>()?,
        })
    }
}

/// A conditional table with its dims, nested [outcome][a][b].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableDto {
    pub dims: DimsDto,
    pub table: Vec<Vec<Vec<f64>>>,
}

impl TableDto {
    pub fn from_distribution(table: &ConditionalDistribution) -> Self {
        let dims = table.dims();
        Self {
            dims: DimsDto::from_dims(dims),
            table: (0..dims.outcomes)
                .map(|outcome| {
                    (0..dims.alice_inputs)
                        .map(|a| (0..dims.bob_inputs).map(|b| table.get(outcome, a, b)).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_distribution(&self) -> Result<ConditionalDistribution> {
        let dims = self.dims.to_dims()?;
        if self.table.len() != dims.outcomes {
            return Err(Error::Schema(format!(
                "table has {} outcome blocks, expected {}",
                self.table.len(),
                dims.outcomes
            )));
        }
        let mut entries = vec![0.0; dims.table_len()];
        for (outcome, block) in self.table.iter().enumerate() {
            if block.len() != dims.alice_inputs {
                return Err(Error::Schema(format!(
                    "table[{outcome}] has {} rows, expected {}",
                    block.len(),
                    dims.alice_inputs
                )));
            }
            for (a, row) in block.iter().enumerate() {
                if row.len() != dims.bob_inputs {
                    return Err(Error::Schema(format!(
                        "table[{outcome}][{a}] has {} entries, expected {}",
                        row.len(),
                        dims.bob_inputs
                    )));
                }
                for (b, &p) in row.iter().enumerate() {
                    entries[crate::tables::index_of(&dims, outcome, a, b)] = p;
                }
            }
        }
        ConditionalDistribution::new(dims, entries)
    }
}

/// A statistics file for `certify`: a table plus optional click rates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatisticsFile {
    #[serde(flatten)]
    pub table: TableDto,
    /// Click rates, nested [a][b]; defaults to all 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clicks: Option<Vec<Vec<f64>>>,
}

impl StatisticsFile {
    pub fn to_parts(&self) -> Result<(ConditionalDistribution, ClickTable)> {
        let table = self.table.to_distribution()?;
        let dims = table.dims();
        let clicks = match &self.clicks {
            None => ClickTable::from_fn(dims, |_, _| 1.0)?,
            Some(rows) => {
                let flat = flatten_rows(rows, dims.alice_inputs, dims.bob_inputs, "clicks")?;
                ClickTable::new(dims, flat)?
            }
        };
        Ok((table, clicks))
    }
}

pub fn clicks_to_rows(clicks: &ClickTable) -> Vec<Vec<f64>> {
    let dims = clicks.dims();
    (0..dims.alice_inputs)
        .map(|a| (0..dims.bob_inputs).map(|b| clicks.get(a, b)).collect())
        .collect()
}

/// Serializable form of a membership verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MembershipDto {
    Feasible {
        weights: Vec<WeightDto>,
        reconstruction_tv: f64,
    },
    Infeasible {
        witness: WitnessDto,
    },
    Undecided {
        reason: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightDto {
    pub encoder: Vec<usize>,
    pub decoder: Vec<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessDto {
    pub dims: DimsDto,
    /// Nested [outcome][a][b].
    pub coefficients: Vec<Vec<Vec<f64>>>,
    pub bound: f64,
    pub violation: f64,
}

impl MembershipDto {
    pub fn from_result(result: &MembershipResult) -> Self {
        match result {
            MembershipResult::Feasible {
                weights,
                reconstruction_tv,
            } => MembershipDto::Feasible {
                weights: weights
                    .iter()
                    .map(|w| WeightDto {
                        encoder: w.pair.encoder.clone(),
                        decoder: w.pair.decoder.clone(),
                        weight: w.weight,
                    })
                    .collect(),
                reconstruction_tv: *reconstruction_tv,
            },
            MembershipResult::Infeasible { witness } => {
                let dims = witness.dims();
                MembershipDto::Infeasible {
                    witness: WitnessDto {
                        dims: DimsDto::from_dims(dims),
                        coefficients: (0..dims.outcomes)
                            .map(|outcome| {
                                (0..dims.alice_inputs)
                                    .map(|a| {
                                        (0..dims.bob_inputs)
                                            .map(|b| witness.coefficient(outcome, a, b))
                                            .collect()
                                    })
                                    .collect()
                            })
                            .collect(),
                        bound: witness.bound,
                        violation: witness.violation,
                    },
                }
            }
        }
    }

    pub fn from_audit(membership: &AuditMembership) -> Self {
        match membership {
            AuditMembership::Decided(result) => Self::from_result(result),
            AuditMembership::Undecided { reason } => MembershipDto::Undecided {
                reason: reason.clone(),
            },
        }
    }
}

/// Serializable audit report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReportDto {
    pub statistics: TableDto,
    pub clicks: Vec<Vec<f64>>,
    pub click_input_independence: ConditionCheck,
    pub dimension: usize,
    pub membership: MembershipDto,
    pub verdict: String,
}

impl AuditReportDto {
    pub fn from_report(report: &AuditReport) -> Self {
        Self {
            statistics: TableDto::from_distribution(&report.statistics),
            clicks: clicks_to_rows(&report.clicks),
            click_input_independence: report.click_input_independence,
            dimension: report.dimension,
            membership: MembershipDto::from_audit(&report.membership),
            verdict: report.verdict.to_string(),
        }
    }
}
