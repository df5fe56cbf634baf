//! Membership of a conditional distribution in the set of distributions
//! explainable by a d-valued classical message.
//!
//! The tested set is the convex hull of all deterministic strategy pairs
//! (encoder a → A, decoder (A, b) → B). That hull contains every
//! composition of stochastic encoders and decoders, with or without shared
//! randomness, so an Infeasible verdict certifies that no d-dimensional
//! classical explanation exists. Membership is decided by a two-phase
//! simplex feasibility program over the convex weights; an infeasible
//! program yields a separating witness read off the phase-1 dual.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::simplex::{self, Constraint, LinearProgram, LpSolution, Relation};
use crate::tables::{index_of, ConditionalDistribution, ScenarioDims};

/// Default cap on the number of enumerated strategy pairs.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// A deterministic encoder/decoder pair, one extreme point of the
/// classical set.
///
/// `encoder[a]` is the message sent on input `a`; `decoder[message * n_b + b]`
/// is the outcome returned on message/input `(message, b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicStrategyPair {
    pub encoder: Vec<usize>,
    pub decoder: Vec<usize>,
}

impl DeterministicStrategyPair {
    /// Outcome of the composed pair on inputs (a, b).
    pub fn response(&self, a: usize, b: usize, bob_inputs: usize) -> usize {
        self.decoder[self.encoder[a] * bob_inputs + b]
    }
}

/// Number of deterministic pairs at message dimension `d`.
pub fn pair_count(dims: ScenarioDims, d: usize) -> u128 {
    let encoders = (d as u128).pow(dims.alice_inputs as u32);
    let decoders = (dims.outcomes as u128).pow((d * dims.bob_inputs) as u32);
    encoders.saturating_mul(decoders)
}

fn digits(mut index: u64, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0usize; len];
    for slot in out.iter_mut() {
        *slot = (index % base as u64) as usize;
        index /= base as u64;
    }
    out
}

/// Enumerates every deterministic pair at message dimension `d`.
///
/// Pairs are ordered deterministically: the encoder index runs outermost,
/// and within each index the digit for slot 0 varies fastest, matching the
/// crate's little-endian conventions.
pub fn enumerate_deterministic_pairs(
    dims: ScenarioDims,
    d: usize,
) -> Result<Vec<DeterministicStrategyPair>> {
    enumerate_deterministic_pairs_with_cap(dims, d, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_deterministic_pairs_with_cap(
    dims: ScenarioDims,
    d: usize,
    cap: u128,
) -> Result<Vec<DeterministicStrategyPair>> {
    let total = pair_count(dims, d);
    if total > cap {
        return Err(Error::EnumerationTooLarge { pairs: total, cap });
    }
    let encoders = (d as u64).pow(dims.alice_inputs as u32);
    let decoders = (dims.outcomes as u64).pow((d * dims.bob_inputs) as u32);
    let mut pairs = Vec::with_capacity(total as usize);
    for e in 0..encoders {
        let encoder = digits(e, d, dims.alice_inputs);
        for f in 0..decoders {
            pairs.push(DeterministicStrategyPair {
                encoder: encoder.clone(),
                decoder: digits(f, dims.outcomes, d * dims.bob_inputs),
            });
        }
    }
    Ok(pairs)
}

/// The 0/1 table of a deterministic pair:
/// P(outcome | a, b) = [outcome == decoder(encoder(a), b)].
pub fn strategy_distribution(
    pair: &DeterministicStrategyPair,
    dims: ScenarioDims,
) -> Result<ConditionalDistribution> {
    if pair.encoder.len() != dims.alice_inputs {
        return Err(Error::DimensionMismatch(format!(
            "encoder maps {} inputs, dims expect {}",
            pair.encoder.len(),
            dims.alice_inputs
        )));
    }
    ConditionalDistribution::from_fn(dims, |outcome, a, b| {
        if pair.response(a, b, dims.bob_inputs) == outcome {
            1.0
        } else {
            0.0
        }
    })
}

/// The distinct response maps of all deterministic pairs, each with its
/// first enumerated pair as representative.
///
/// Distinct pairs often compose to the same (a, b) → outcome map; the
/// membership program only needs one column per distinct map.
#[derive(Debug, Clone)]
pub struct StrategyVertices {
    dims: ScenarioDims,
    /// Flat response maps, indexed by cell a * n_b + b.
    responses: Vec<Vec<usize>>,
    representatives: Vec<DeterministicStrategyPair>,
}

impl StrategyVertices {
    /// Enumerates and deduplicates all pairs at dimension `d`. The returned
    /// dims carry `d` as their message dimension.
    pub fn collect(dims: ScenarioDims, d: usize, cap: u128) -> Result<Self> {
        let total = pair_count(dims, d);
        if total > cap {
            return Err(Error::EnumerationTooLarge { pairs: total, cap });
        }
        let dims = ScenarioDims {
            message_dim: d,
            ..dims
        };
        let encoders = (d as u64).pow(dims.alice_inputs as u32);
        let decoders = (dims.outcomes as u64).pow((d * dims.bob_inputs) as u32);
        let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut responses = Vec::new();
        let mut representatives = Vec::new();
        for e in 0..encoders {
            let encoder = digits(e, d, dims.alice_inputs);
            for f in 0..decoders {
                let decoder = digits(f, dims.outcomes, d * dims.bob_inputs);
                let mut response = vec![0usize; dims.cells()];
                for a in 0..dims.alice_inputs {
                    for b in 0..dims.bob_inputs {
                        response[a * dims.bob_inputs + b] = decoder[encoder[a] * dims.bob_inputs + b];
                    }
                }
                if !seen.contains_key(&response) {
                    seen.insert(response.clone(), responses.len());
                    responses.push(response);
                    representatives.push(DeterministicStrategyPair { encoder: encoder.clone(), decoder });
                }
            }
        }
        Ok(Self {
            dims,
            responses,
            representatives,
        })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn dims(&self) -> ScenarioDims {
        self.dims
    }

    pub fn representative(&self, k: usize) -> &DeterministicStrategyPair {
        &self.representatives[k]
    }

    /// Outcome of vertex `k` on cell (a, b).
    pub fn response(&self, k: usize, a: usize, b: usize) -> usize {
        self.responses[k][a * self.dims.bob_inputs + b]
    }

    /// Entry V_k(outcome, a, b) of the vertex table, 0 or 1.
    fn entry(&self, k: usize, flat: usize) -> f64 {
        let cells = self.dims.cells();
        let outcome = flat / cells;
        let cell = flat % cells;
        if self.responses[k][cell] == outcome {
            1.0
        } else {
            0.0
        }
    }

    /// Convex mixture of vertex tables with the given weights.
    pub fn mixture(&self, weights: &[(usize, f64)]) -> Result<ConditionalDistribution> {
        let mut entries = vec![0.0; self.dims.table_len()];
        for &(k, w) in weights {
            for (flat, e) in entries.iter_mut().enumerate() {
                *e += w * self.entry(k, flat);
            }
        }
        ConditionalDistribution::new(self.dims, entries)
    }
}

/// One convex weight of a feasible decomposition.
#[derive(Debug, Clone)]
pub struct WeightedPair {
    pub pair: DeterministicStrategyPair,
    pub weight: f64,
}

/// A separating hyperplane: `Σ coefficients · P > bound` for the tested
/// distribution while `Σ coefficients · V <= bound` for every deterministic
/// pair — a dimension witness in certificate form.
#[derive(Debug, Clone)]
pub struct SeparatingWitness {
    dims: ScenarioDims,
    coefficients: Vec<f64>,
    pub bound: f64,
    /// Witness value on the tested distribution minus `bound`.
    pub violation: f64,
}

impl SeparatingWitness {
    pub fn dims(&self) -> ScenarioDims {
        self.dims
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient(&self, outcome: usize, a: usize, b: usize) -> f64 {
        self.coefficients[index_of(&self.dims, outcome, a, b)]
    }

    /// Σ coefficients · P over all entries of `table`.
    pub fn evaluate(&self, table: &ConditionalDistribution) -> Result<f64> {
        let t = table.dims();
        if (t.alice_inputs, t.bob_inputs, t.outcomes)
            != (self.dims.alice_inputs, self.dims.bob_inputs, self.dims.outcomes)
        {
            return Err(Error::DimensionMismatch(format!(
                "witness over {:?} applied to table over {:?}",
                self.dims, t
            )));
        }
        Ok(self
            .coefficients
            .iter()
            .zip(table.entries())
            .map(|(c, p)| c * p)
            .sum())
    }
}

/// Verdict of [`classical_membership`].
#[derive(Debug, Clone)]
pub enum MembershipResult {
    /// The distribution is within tolerance of the hull; `weights` mix
    /// deterministic pairs back into it up to `reconstruction_tv`.
    Feasible {
        weights: Vec<WeightedPair>,
        reconstruction_tv: f64,
    },
    /// No mixture exists; `witness` separates the distribution from the
    /// hull.
    Infeasible { witness: SeparatingWitness },
}

impl MembershipResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self, MembershipResult::Feasible { .. })
    }
}

/// A stochastic encoder/decoder factorization through a d-valued message.
#[derive(Debug, Clone)]
pub struct ClassicalModel {
    dims: ScenarioDims,
    /// Flat (a, message), message fastest; rows stochastic.
    encoder: Vec<f64>,
    /// Flat (message, b, outcome), outcome fastest; rows stochastic.
    decoder: Vec<f64>,
}

impl ClassicalModel {
    pub fn new(dims: ScenarioDims, encoder: Vec<f64>, decoder: Vec<f64>) -> Result<Self> {
        if encoder.len() != dims.alice_inputs * dims.message_dim {
            return Err(Error::DimensionMismatch(format!(
                "encoder has {} entries, expected {}",
                encoder.len(),
                dims.alice_inputs * dims.message_dim
            )));
        }
        if decoder.len() != dims.message_dim * dims.bob_inputs * dims.outcomes {
            return Err(Error::DimensionMismatch(format!(
                "decoder has {} entries, expected {}",
                decoder.len(),
                dims.message_dim * dims.bob_inputs * dims.outcomes
            )));
        }
        for (name, values, row) in [
            ("encoder", &encoder, dims.message_dim),
            ("decoder", &decoder, dims.outcomes),
        ] {
            for (idx, chunk) in values.chunks(row).enumerate() {
                let sum: f64 = chunk.iter().sum();
                if chunk.iter().any(|&p| p < -1e-9) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::Invariant(format!(
                        "{name} row {idx} is not a probability vector (sum {sum})"
                    )));
                }
            }
        }
        Ok(Self {
            dims,
            encoder,
            decoder,
        })
    }

    pub fn dims(&self) -> ScenarioDims {
        self.dims
    }

    pub fn encoder_entry(&self, a: usize, message: usize) -> f64 {
        self.encoder[a * self.dims.message_dim + message]
    }

    pub fn decoder_entry(&self, message: usize, b: usize, outcome: usize) -> f64 {
        self.decoder[(message * self.dims.bob_inputs + b) * self.dims.outcomes + outcome]
    }
}

/// Composes a classical model into its conditional table:
/// P(outcome | a, b) = Σ_message P(outcome | message, b) P(message | a).
pub fn model_to_distribution(model: &ClassicalModel) -> Result<ConditionalDistribution> {
    let dims = model.dims();
    ConditionalDistribution::from_fn(dims, |outcome, a, b| {
        (0..dims.message_dim)
            .map(|msg| model.encoder_entry(a, msg) * model.decoder_entry(msg, b, outcome))
            .sum()
    })
}

/// Decides whether `p` lies within `tol` (total variation per input cell)
/// of the convex hull of deterministic d-dimensional strategies.
pub fn classical_membership(
    p: &ConditionalDistribution,
    d: usize,
    tol: f64,
) -> Result<MembershipResult> {
    classical_membership_with_cap(p, d, tol, DEFAULT_ENUMERATION_CAP)
}

pub fn classical_membership_with_cap(
    p: &ConditionalDistribution,
    d: usize,
    tol: f64,
    cap: u128,
) -> Result<MembershipResult> {
    let vertices = StrategyVertices::collect(p.dims(), d, cap)?;
    let entries = p.entries();

    match simplex::solve(&feasibility_program(entries, &vertices))? {
        LpSolution::Optimal { x, .. } => feasible_result(p, &vertices, &x),
        LpSolution::Unbounded => unreachable!("feasibility program has no objective"),
        LpSolution::Infeasible { farkas, .. } => {
            // The exact program failed; a positive tolerance may still admit
            // the nearest hull point.
            if tol > 1e-9 {
                let (distance, x) = hull_distance(p, &vertices)?;
                if distance <= tol {
                    return feasible_result(p, &vertices, &x);
                }
            }
            let witness = witness_from_farkas(&farkas, entries, &vertices)?;
            Ok(MembershipResult::Infeasible { witness })
        }
    }
}

/// Minimal per-cell total variation distance from `p` to the hull, with
/// the weights of the nearest mixture (padded with slack variables, so only
/// the first `vertices.len()` entries of the solution are weights).
pub fn hull_distance(
    p: &ConditionalDistribution,
    vertices: &StrategyVertices,
) -> Result<(f64, Vec<f64>)> {
    let table_len = p.dims().table_len();
    let cells = p.dims().cells();
    let k = vertices.len();
    // Variables: weights w_0..w_{k-1}, per-entry slack e_0..e_{L-1}, then t.
    let num_vars = k + table_len + 1;
    let t_var = k + table_len;
    let mut constraints = Vec::with_capacity(1 + 2 * table_len + cells);

    let mut weight_row = vec![0.0; num_vars];
    for w in weight_row.iter_mut().take(k) {
        *w = 1.0;
    }
    constraints.push(Constraint {
        coeffs: weight_row,
        relation: Relation::Eq,
        rhs: 1.0,
    });

    for flat in 0..table_len {
        let mut up = vec![0.0; num_vars];
        for col in 0..k {
            up[col] = vertices.entry(col, flat);
        }
        let mut down = up.clone();
        up[k + flat] = -1.0;
        down[k + flat] = 1.0;
        let rhs = p.entries()[flat];
        constraints.push(Constraint {
            coeffs: up,
            relation: Relation::Le,
            rhs,
        });
        constraints.push(Constraint {
            coeffs: down,
            relation: Relation::Ge,
            rhs,
        });
    }

    for cell in 0..cells {
        let mut row = vec![0.0; num_vars];
        for outcome in 0..p.dims().outcomes {
            row[k + outcome * cells + cell] = 0.5;
        }
        row[t_var] = -1.0;
        constraints.push(Constraint {
            coeffs: row,
            relation: Relation::Le,
            rhs: 0.0,
        });
    }

    let mut objective = vec![0.0; num_vars];
    objective[t_var] = 1.0;
    let lp = LinearProgram {
        num_vars,
        objective,
        constraints,
    };
    match simplex::solve(&lp)? {
        LpSolution::Optimal { x, objective } => Ok((objective.max(0.0), x)),
        other => unreachable!("distance program is always feasible and bounded: {other:?}"),
    }
}

fn feasibility_program(p_entries: &[f64], vertices: &StrategyVertices) -> LinearProgram {
    let k = vertices.len();
    let mut constraints = Vec::with_capacity(p_entries.len() + 1);
    for (flat, &rhs) in p_entries.iter().enumerate() {
        let coeffs = (0..k).map(|col| vertices.entry(col, flat)).collect();
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Eq,
            rhs,
        });
    }
    constraints.push(Constraint {
        coeffs: vec![1.0; k],
        relation: Relation::Eq,
        rhs: 1.0,
    });
    LinearProgram {
        num_vars: k,
        objective: vec![0.0; k],
        constraints,
    }
}

fn feasible_result(
    p: &ConditionalDistribution,
    vertices: &StrategyVertices,
    x: &[f64],
) -> Result<MembershipResult> {
    let support: Vec<(usize, f64)> = x
        .iter()
        .take(vertices.len())
        .enumerate()
        .filter(|(_, &w)| w > 1e-12)
        .map(|(k, &w)| (k, w))
        .collect();
    // Rebuild over the input's own dims: the mixture carries the tested
    // message dimension, which need not match the input's.
    let reconstruction =
        ConditionalDistribution::new(p.dims(), vertices.mixture(&support)?.entries().to_vec())?;
    let reconstruction_tv = crate::tables::total_variation_distance(p, &reconstruction)?;
    let weights = support
        .into_iter()
        .map(|(k, weight)| WeightedPair {
            pair: vertices.representative(k).clone(),
            weight,
        })
        .collect();
    Ok(MembershipResult::Feasible {
        weights,
        reconstruction_tv,
    })
}

/// Turns the phase-1 dual vector into a normalized separating witness.
///
/// The dual of the reconstruction rows is the coefficient table and the
/// dual of the weight-sum row fixes the bound. After rescaling to unit sup
/// norm the bound is re-tightened to the exact vertex maximum. If the
/// resulting separation is numerically weak, a second program maximizes the
/// gap directly over all sup-norm-bounded witnesses.
fn witness_from_farkas(
    farkas: &[f64],
    p_entries: &[f64],
    vertices: &StrategyVertices,
) -> Result<SeparatingWitness> {
    let table_len = p_entries.len();
    let mut coefficients: Vec<f64> = farkas[..table_len].to_vec();
    let scale = coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale > 0.0 {
        for c in coefficients.iter_mut() {
            *c /= scale;
        }
    }
    let mut witness = tightened_witness(coefficients, p_entries, vertices);
    if witness.violation < 1e-7 {
        let improved = best_witness(p_entries, vertices)?;
        if improved.violation > witness.violation {
            witness = improved;
        }
    }
    Ok(witness)
}

fn tightened_witness(
    coefficients: Vec<f64>,
    p_entries: &[f64],
    vertices: &StrategyVertices,
) -> SeparatingWitness {
    let bound = (0..vertices.len())
        .map(|k| {
            (0..p_entries.len())
                .map(|flat| coefficients[flat] * vertices.entry(k, flat))
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let value: f64 = coefficients
        .iter()
        .zip(p_entries)
        .map(|(c, p)| c * p)
        .sum();
    SeparatingWitness {
        dims: vertices.dims(),
        coefficients,
        bound,
        violation: value - bound,
    }
}

/// Maximizes `c·p − β` over sup-norm-bounded coefficient tables subject to
/// `c·V <= β` for every vertex; the optimum is the deepest separation
/// available to any witness of unit scale.
fn best_witness(p_entries: &[f64], vertices: &StrategyVertices) -> Result<SeparatingWitness> {
    let table_len = p_entries.len();
    let k = vertices.len();
    // Variables: c+ (L), c- (L), β+ and β-.
    let num_vars = 2 * table_len + 2;
    let beta_plus = 2 * table_len;
    let beta_minus = beta_plus + 1;
    let mut constraints = Vec::with_capacity(k + 2 * table_len);
    for col in 0..k {
        let mut coeffs = vec![0.0; num_vars];
        for flat in 0..table_len {
            let v = vertices.entry(col, flat);
            coeffs[flat] = v;
            coeffs[table_len + flat] = -v;
        }
        coeffs[beta_plus] = -1.0;
        coeffs[beta_minus] = 1.0;
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Le,
            rhs: 0.0,
        });
    }
    for var in 0..2 * table_len {
        let mut coeffs = vec![0.0; num_vars];
        coeffs[var] = 1.0;
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Le,
            rhs: 1.0,
        });
    }
    let mut objective = vec![0.0; num_vars];
    for flat in 0..table_len {
        objective[flat] = -p_entries[flat];
        objective[table_len + flat] = p_entries[flat];
    }
    objective[beta_plus] = 1.0;
    objective[beta_minus] = -1.0;
    let lp = LinearProgram {
        num_vars,
        objective,
        constraints,
    };
    match simplex::solve(&lp)? {
        LpSolution::Optimal { x, .. } => {
            let coefficients: Vec<f64> = (0..table_len)
                .map(|flat| x[flat] - x[table_len + flat])
                .collect();
            Ok(tightened_witness(coefficients, p_entries, vertices))
        }
        other => unreachable!("witness program is feasible and bounded: {other:?}"),
    }
}
