//! Finite alphabets and probability tables shared by every other module.
//!
//! All alphabets are contiguous integer ranges `0..n`. Structured inputs
//! (bit strings, bit/trit pairs) are mapped onto these ranges by the
//! mixed-radix encodings documented where they are used. The entry order of
//! a conditional table is fixed crate-wide as (outcome, a, b).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default comparison tolerance for probabilities.
pub const PROB_TOL: f64 = 1e-9;

/// Alphabet sizes of a prepare-and-measure scenario.
///
/// `message_dim` is the dimension of the message alphabet, i.e. the `d`
/// against which classical models are tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioDims {
    /// Number of inputs on the preparation side.
    pub alice_inputs: usize,
    /// Number of inputs on the measurement side.
    pub bob_inputs: usize,
    /// Size of the message alphabet.
    pub message_dim: usize,
    /// Number of outcomes on the measurement side.
    pub outcomes: usize,
}

impl ScenarioDims {
    pub fn new(
        alice_inputs: usize,
        bob_inputs: usize,
        message_dim: usize,
        outcomes: usize,
    ) -> Result<Self> {
        let dims = Self {
            alice_inputs,
            bob_inputs,
            message_dim,
            outcomes,
        };
        if alice_inputs < 1 || bob_inputs < 1 || message_dim < 1 || outcomes < 1 {
            return Err(Error::Invariant(format!(
                "all alphabet sizes must be at least 1, got {dims:?}"
            )));
        }
        Ok(dims)
    }

    /// Number of (a, b) input cells.
    pub fn cells(&self) -> usize {
        self.alice_inputs * self.bob_inputs
    }

    /// Number of entries of a conditional table over these alphabets.
    pub fn table_len(&self) -> usize {
        self.outcomes * self.cells()
    }

    pub(crate) fn check_input(&self, a: usize, b: usize) -> Result<()> {
        if a >= self.alice_inputs {
            return Err(Error::IndexOutOfRange {
                name: "a",
                index: a,
                len: self.alice_inputs,
            });
        }
        if b >= self.bob_inputs {
            return Err(Error::IndexOutOfRange {
                name: "b",
                index: b,
                len: self.bob_inputs,
            });
        }
        Ok(())
    }
}

/// The conditional probability table P(outcome | a, b).
///
/// This is the lingua franca of the crate: simulators produce it, the
/// classical-model tester consumes it, success reports are read off it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDistribution {
    dims: ScenarioDims,
    /// Flat entries indexed by (outcome, a, b), b fastest.
    entries: Vec<f64>,
}

/// One invariant violation found by [`validate_distribution`].
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionViolation {
    /// An entry is below zero by `magnitude`.
    Negative {
        outcome: usize,
        a: usize,
        b: usize,
        magnitude: f64,
    },
    /// The (a, b) slice sums to 1 ± `magnitude` with `magnitude` above tolerance.
    Normalization { a: usize, b: usize, magnitude: f64 },
}

impl ConditionalDistribution {
    /// Builds a table from flat entries in (outcome, a, b) order and checks
    /// the probability invariants at the default tolerance.
    pub fn new(dims: ScenarioDims, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dims.table_len() {
            return Err(Error::DimensionMismatch(format!(
                "table needs {} entries for {dims:?}, got {}",
                dims.table_len(),
                entries.len()
            )));
        }
        let table = Self { dims, entries };
        match validate_distribution(&table, PROB_TOL).first() {
            None => Ok(table),
            Some(v) => Err(Error::Invariant(format!("{v:?}"))),
        }
    }

    /// Builds a table by evaluating `f(outcome, a, b)` on every entry.
    pub fn from_fn(dims: ScenarioDims, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut entries = vec![0.0; dims.table_len()];
        for outcome in 0..dims.outcomes {
            for a in 0..dims.alice_inputs {
                for b in 0..dims.bob_inputs {
                    entries[index_of(&dims, outcome, a, b)] = f(outcome, a, b);
                }
            }
        }
        Self::new(dims, entries)
    }

    /// The uniform table, 1/outcomes everywhere.
    pub fn uniform(dims: ScenarioDims) -> Self {
        let p = 1.0 / dims.outcomes as f64;
        Self {
            dims,
            entries: vec![p; dims.table_len()],
        }
    }

    pub fn dims(&self) -> ScenarioDims {
        self.dims
    }

    /// P(outcome | a, b). Panics on out-of-range indices.
    pub fn get(&self, outcome: usize, a: usize, b: usize) -> f64 {
        self.entries[index_of(&self.dims, outcome, a, b)]
    }

    /// Flat view of the entries in (outcome, a, b) order.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Iterates over the outcome distribution of one (a, b) cell.
    pub fn slice(&self, a: usize, b: usize) -> impl Iterator<Item = f64> + '_ {
        let dims = self.dims;
        (0..dims.outcomes).map(move |outcome| self.get(outcome, a, b))
    }
}

pub(crate) fn index_of(dims: &ScenarioDims, outcome: usize, a: usize, b: usize) -> usize {
    debug_assert!(outcome < dims.outcomes && a < dims.alice_inputs && b < dims.bob_inputs);
    (outcome * dims.alice_inputs + a) * dims.bob_inputs + b
}

/// The table of click probabilities Q(click | a, b).
#[derive(Debug, Clone, PartialEq)]
pub struct ClickTable {
    dims: ScenarioDims,
    /// Flat entries indexed by (a, b), b fastest.
    entries: Vec<f64>,
}

impl ClickTable {
    pub fn new(dims: ScenarioDims, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dims.cells() {
            return Err(Error::DimensionMismatch(format!(
                "click table needs {} entries for {dims:?}, got {}",
                dims.cells(),
                entries.len()
            )));
        }
        for &q in &entries {
            if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&q) {
                return Err(Error::OutOfRange {
                    name: "click probability",
                    value: q,
                    min: 0.0,
                    max: 1.0,
                });
            }
        }
        Ok(Self { dims, entries })
    }

    pub fn from_fn(dims: ScenarioDims, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut entries = vec![0.0; dims.cells()];
        for a in 0..dims.alice_inputs {
            for b in 0..dims.bob_inputs {
                entries[a * dims.bob_inputs + b] = f(a, b);
            }
        }
        Self::new(dims, entries)
    }

    pub fn dims(&self) -> ScenarioDims {
        self.dims
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[a * self.dims.bob_inputs + b]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Checks the probability-table invariants and reports every violation.
///
/// Validation never aborts: a table with three bad slices yields three
/// normalization entries, not an error.
pub fn validate_distribution(
    table: &ConditionalDistribution,
    tol: f64,
) -> Vec<DistributionViolation> {
    let dims = table.dims;
    let mut report = Vec::new();
    for a in 0..dims.alice_inputs {
        for b in 0..dims.bob_inputs {
            let mut sum = 0.0;
            for outcome in 0..dims.outcomes {
                let p = table.get(outcome, a, b);
                if p < -tol {
                    report.push(DistributionViolation::Negative {
                        outcome,
                        a,
                        b,
                        magnitude: -p,
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > tol {
                report.push(DistributionViolation::Normalization {
                    a,
                    b,
                    magnitude: (sum - 1.0).abs(),
                });
            }
        }
    }
    report
}

/// Largest per-cell total variation distance between two tables:
/// max over (a, b) of ½ Σ_outcome |p − q|.
pub fn total_variation_distance(
    p: &ConditionalDistribution,
    q: &ConditionalDistribution,
) -> Result<f64> {
    if p.dims != q.dims {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            p.dims, q.dims
        )));
    }
    let dims = p.dims;
    let mut worst: f64 = 0.0;
    for a in 0..dims.alice_inputs {
        for b in 0..dims.bob_inputs {
            let cell: f64 = (0..dims.outcomes)
                .map(|outcome| (p.get(outcome, a, b) - q.get(outcome, a, b)).abs())
                .sum();
            worst = worst.max(0.5 * cell);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(n_a: usize, n_b: usize, n_msg: usize, n_out: usize) -> ScenarioDims {
        ScenarioDims::new(n_a, n_b, n_msg, n_out).unwrap()
    }

    #[test]
    fn uniform_table_validates_clean() {
        let table = ConditionalDistribution::uniform(dims(3, 2, 2, 4));
        assert!(validate_distribution(&table, PROB_TOL).is_empty());
    }

    #[test]
    fn negative_entry_is_reported() {
        let d = dims(2, 1, 2, 2);
        let mut entries = ConditionalDistribution::uniform(d).entries().to_vec();
        entries[0] = -0.1;
        entries[index_of(&d, 1, 0, 0)] = 1.1;
        let table = ConditionalDistribution { dims: d, entries };
        let report = validate_distribution(&table, PROB_TOL);
        assert_eq!(
            report,
            vec![DistributionViolation::Negative {
                outcome: 0,
                a: 0,
                b: 0,
                magnitude: 0.1
            }]
        );
    }

    #[test]
    fn short_slice_is_reported_with_magnitude() {
        let d = dims(2, 1, 2, 2);
        let mut entries = ConditionalDistribution::uniform(d).entries().to_vec();
        entries[index_of(&d, 0, 1, 0)] = 0.48; // slice (a=1, b=0) now sums to 0.98
        let table = ConditionalDistribution { dims: d, entries };
        let report = validate_distribution(&table, 1e-9);
        assert_eq!(report.len(), 1);
        match &report[0] {
            DistributionViolation::Normalization { a, b, magnitude } => {
                assert_eq!((*a, *b), (1, 0));
                assert!((magnitude - 0.02).abs() < 1e-12);
            }
            other => panic!("unexpected violation {other:?}"),
        }
    }

    #[test]
    fn tvd_identity_and_extremes() {
        let d = dims(1, 1, 2, 2);
        let p = ConditionalDistribution::new(d, vec![1.0, 0.0]).unwrap();
        let q = ConditionalDistribution::new(d, vec![0.0, 1.0]).unwrap();
        assert_eq!(total_variation_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(total_variation_distance(&p, &q).unwrap(), 1.0);

        let r = ConditionalDistribution::new(d, vec![0.75, 0.25]).unwrap();
        let s = ConditionalDistribution::new(d, vec![0.5, 0.5]).unwrap();
        assert!((total_variation_distance(&r, &s).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn tvd_rejects_mismatched_dims() {
        let p = ConditionalDistribution::uniform(dims(2, 1, 2, 2));
        let q = ConditionalDistribution::uniform(dims(2, 2, 2, 2));
        assert!(matches!(
            total_variation_distance(&p, &q),
            Err(Error::DimensionMismatch(_))
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_table(d: ScenarioDims) -> impl Strategy<Value = ConditionalDistribution> {
            proptest::collection::vec(1e-3_f64..1.0, d.table_len()).prop_map(move |raw| {
                ConditionalDistribution::from_fn(d, |outcome, a, b| {
                    let slice_sum: f64 = (0..d.outcomes)
                        .map(|o| raw[index_of(&d, o, a, b)])
                        .sum();
                    raw[index_of(&d, outcome, a, b)] / slice_sum
                })
                .unwrap()
            })
        }

        proptest! {
            #[test]
            fn tvd_triangle_inequality(
                (p, q, r) in {
                    let d = ScenarioDims::new(2, 2, 2, 3).unwrap();
                    (arb_table(d), arb_table(d), arb_table(d))
                }
            ) {
                let pq = total_variation_distance(&p, &q).unwrap();
                let qr = total_variation_distance(&q, &r).unwrap();
                let pr = total_variation_distance(&p, &r).unwrap();
                prop_assert!(pr <= pq + qr + 1e-12);
                prop_assert!((pq - total_variation_distance(&q, &p).unwrap()).abs() < 1e-15);
            }
        }
    }
}
