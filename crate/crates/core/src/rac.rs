//! Random-access-code tasks: success figures of merit, brute-force
//! classical optima over deterministic strategies and their convex hull,
//! and the binary-entropy information bound.
//!
//! Bit conventions are little-endian throughout: bit `b` of the packed
//! input `a` is `(a >> b) & 1`.

use crate::classical::{StrategyVertices, WeightedPair, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::simplex::{self, Constraint, LinearProgram, LpSolution, Relation};
use crate::tables::{ConditionalDistribution, ScenarioDims};

/// An n-bit random access task: the box must output bit `b` of the packed
/// input `a` through a message of dimension `message_dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RACSpec {
    n: usize,
    message_dim: usize,
}

impl RACSpec {
    pub fn new(n: usize, message_dim: usize) -> Result<Self> {
        if n < 1 || n >= usize::BITS as usize {
            return Err(Error::OutOfRange {
                name: "n",
                value: n as f64,
                min: 1.0,
                max: (usize::BITS - 1) as f64,
            });
        }
        if message_dim < 1 {
            return Err(Error::OutOfRange {
                name: "message_dim",
                value: 0.0,
                min: 1.0,
                max: f64::INFINITY,
            });
        }
        Ok(Self { n, message_dim })
    }

    /// The n-bit task through a one-bit (or one-qubit) message.
    pub fn n_to_1(n: usize) -> Result<Self> {
        Self::new(n, 2)
    }

    pub fn bits(&self) -> usize {
        self.n
    }

    pub fn message_dim(&self) -> usize {
        self.message_dim
    }

    /// The target output on inputs (a, b): bit `b` of `a`, little-endian.
    pub fn target(&self, a: usize, b: usize) -> usize {
        (a >> b) & 1
    }

    pub fn dims(&self) -> ScenarioDims {
        ScenarioDims {
            alice_inputs: 1 << self.n,
            bob_inputs: self.n,
            message_dim: self.message_dim,
            outcomes: 2,
        }
    }

    fn check_table(&self, table: &ConditionalDistribution) -> Result<()> {
        let dims = table.dims();
        if dims.alice_inputs != 1 << self.n || dims.bob_inputs != self.n || dims.outcomes != 2 {
            return Err(Error::DimensionMismatch(format!(
                "table dims {dims:?} do not fit a {}-bit random access task",
                self.n
            )));
        }
        Ok(())
    }
}

/// Worst-case and average success of a distribution on a RAC task.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SuccessReport {
    pub worst_case: f64,
    pub average: f64,
    /// Lexicographically first (a, b) attaining the worst case.
    pub argmin: (usize, usize),
}

/// Reads the success entries P(target(a,b) | a, b) off a distribution.
pub fn success_report(table: &ConditionalDistribution, spec: &RACSpec) -> Result<SuccessReport> {
    spec.check_table(table)?;
    let dims = table.dims();
    let mut worst = f64::INFINITY;
    let mut argmin = (0, 0);
    let mut total = 0.0;
    for a in 0..dims.alice_inputs {
        for b in 0..dims.bob_inputs {
            let p = table.get(spec.target(a, b), a, b);
            total += p;
            if p < worst {
                worst = p;
                argmin = (a, b);
            }
        }
    }
    Ok(SuccessReport {
        worst_case: worst,
        average: total / dims.cells() as f64,
        argmin,
    })
}

/// Figure of merit maximized by [`brute_force_classical_optimum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizationCriterion {
    WorstCase,
    Average,
}

/// Best classical performance at a fixed message dimension.
///
/// `vertex_value` maximizes the criterion over deterministic pairs alone;
/// `hull_value` maximizes it over convex mixtures of them. For the average
/// criterion the two agree (the objective is linear); for the worst case
/// the hull can do strictly better, and it is the hull value that the
/// detection-loophole analysis compares against.
#[derive(Debug, Clone)]
pub struct ClassicalOptimum {
    pub criterion: OptimizationCriterion,
    pub vertex_value: f64,
    /// One representative pair per distinct optimal response map.
    pub optimal_pairs: Vec<crate::classical::DeterministicStrategyPair>,
    pub hull_value: f64,
    pub hull_weights: Vec<WeightedPair>,
}

pub fn brute_force_classical_optimum(
    spec: &RACSpec,
    d: usize,
    criterion: OptimizationCriterion,
) -> Result<ClassicalOptimum> {
    brute_force_classical_optimum_with_cap(spec, d, criterion, DEFAULT_ENUMERATION_CAP)
}

pub fn brute_force_classical_optimum_with_cap(
    spec: &RACSpec,
    d: usize,
    criterion: OptimizationCriterion,
    cap: u128,
) -> Result<ClassicalOptimum> {
    let dims = spec.dims();
    let vertices = StrategyVertices::collect(dims, d, cap)?;
    let cells = dims.cells();

    // 0/1 success entries of each vertex on each (a, b) cell.
    let success: Vec<Vec<f64>> = (0..vertices.len())
        .map(|k| {
            let mut row = vec![0.0; cells];
            for a in 0..dims.alice_inputs {
                for b in 0..dims.bob_inputs {
                    if vertices.response(k, a, b) == spec.target(a, b) {
                        row[a * dims.bob_inputs + b] = 1.0;
                    }
                }
            }
            row
        })
        .collect();

    let score = |row: &[f64]| -> f64 {
        match criterion {
            OptimizationCriterion::WorstCase => row.iter().copied().fold(f64::INFINITY, f64::min),
            OptimizationCriterion::Average => row.iter().sum::<f64>() / cells as f64,
        }
    };

    let mut vertex_value = f64::NEG_INFINITY;
    for row in &success {
        vertex_value = vertex_value.max(score(row));
    }
    let optimal_pairs = success
        .iter()
        .enumerate()
        .filter(|(_, row)| score(row) == vertex_value)
        .map(|(k, _)| vertices.representative(k).clone())
        .collect();

    // Hull value by linear program over the convex weights.
    let k = vertices.len();
    let (num_vars, objective, mut constraints) = match criterion {
        OptimizationCriterion::WorstCase => {
            // maximize t subject to Σ w · success >= t per cell.
            let num_vars = k + 1;
            let mut objective = vec![0.0; num_vars];
            objective[k] = -1.0;
            let constraints = (0..cells)
                .map(|cell| {
                    let mut coeffs: Vec<f64> = (0..k).map(|v| success[v][cell]).collect();
                    coeffs.push(-1.0);
                    Constraint {
                        coeffs,
                        relation: Relation::Ge,
                        rhs: 0.0,
                    }
                })
                .collect::<Vec<_>>();
            (num_vars, objective, constraints)
        }
        OptimizationCriterion::Average => {
            let objective: Vec<f64> = (0..k).map(|v| -score(&success[v])).collect();
            (k, objective, Vec::new())
        }
    };
    let mut weight_row = vec![0.0; num_vars];
    for w in weight_row.iter_mut().take(k) {
        *w = 1.0;
    }
    constraints.push(Constraint {
        coeffs: weight_row,
        relation: Relation::Eq,
        rhs: 1.0,
    });

    let lp = LinearProgram {
        num_vars,
        objective,
        constraints,
    };
    let (hull_value, x) = match simplex::solve(&lp)? {
        LpSolution::Optimal { objective, x } => (-objective, x),
        other => unreachable!("hull program is feasible and bounded: {other:?}"),
    };
    let hull_weights = x
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, &w)| w > 1e-12)
        .map(|(v, &w)| WeightedPair {
            pair: vertices.representative(v).clone(),
            weight: w,
        })
        .collect();

    Ok(ClassicalOptimum {
        criterion,
        vertex_value,
        optimal_pairs,
        hull_value,
        hull_weights,
    })
}

/// Optimal worst-case success when the two boxes hold no shared
/// randomness (each mixes its own strategies privately), at message
/// dimension `d`. Returns `None` where no desk-scale argument pins the
/// value.
///
/// The known cases:
/// * `d >= 2^n`: an injective encoder relays everything, value 1.
/// * `d == 1`: the message carries nothing, so the outcome cannot depend
///   on `a`; both target values occur in every column, forcing the
///   minimum to 1/2, which uniform guessing attains.
/// * `d == 2`, `n >= 2`: value 1/2. Beating it would need, for every b,
///   the success to exceed 1/2 on both target values; writing the encoder
///   as one number p_a = P(A=0|a) per input, the success in column b is
///   affine in p_a, so each bit of `a` would have to be a threshold
///   function of the scalar p_a — and already bits 0 and 1 of the inputs
///   (00), (10), (01) cannot both be threshold cuts of one line. Uniform
///   guessing again attains 1/2.
///
/// This is the baseline against which detection-loophole immunity is
/// judged; note it is smaller than the shared-randomness hull value
/// reported by [`brute_force_classical_optimum`] (3/4 for the 2- and
/// 3-bit tasks), because shared randomness symmetrizes the worst case up
/// to the average.
pub fn factorized_worst_case_optimum(spec: &RACSpec, d: usize) -> Option<f64> {
    if d >= spec.dims().alice_inputs {
        return Some(1.0);
    }
    if d == 1 {
        return Some(0.5);
    }
    if d == 2 && spec.bits() >= 2 {
        return Some(0.5);
    }
    None
}

/// Shannon binary entropy in bits, with 0·log 0 = 0.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange {
            name: "x",
            value: x,
            min: 0.0,
            max: 1.0,
        });
    }
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.log2() };
    Ok(term(x) + term(1.0 - x))
}

/// Upper bound on the worst-case success of any code packing `n` bits into
/// a message of `m` bits: the unique p in [½, 1] with h(p) = 1 − m/n.
///
/// `m` may be fractional (a six-valued message carries log₂ 6 bits). When
/// `m >= n` the constraint is vacuous and the bound is 1. The root is
/// found by bisection until the entropy residual drops below 1e-12.
pub fn nayak_upper_bound(n: f64, m: f64) -> f64 {
    assert!(n > 0.0 && m > 0.0, "bit counts must be positive");
    if m >= n {
        return 1.0;
    }
    let target = 1.0 - m / n;
    let mut lo = 0.5;
    let mut hi = 1.0;
    let mut mid = 0.75;
    for _ in 0..500 {
        mid = 0.5 * (lo + hi);
        let value = binary_entropy(mid).expect("bisection stays inside [0, 1]");
        if (value - target).abs() <= 1e-12 {
            break;
        }
        if value > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{strategy_distribution, DeterministicStrategyPair};
    use crate::quantum::{qrac2_protocol, quantum_statistics, QRAC2_SUCCESS, QRAC3_SUCCESS};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn uniform_table_scores_one_half() {
        let spec = RACSpec::n_to_1(2).unwrap();
        let table = ConditionalDistribution::uniform(spec.dims());
        let report = success_report(&table, &spec).unwrap();
        assert_eq!(report.worst_case, 0.5);
        assert_eq!(report.average, 0.5);
        assert_eq!(report.argmin, (0, 0));
    }

    #[test]
    fn square_protocol_scores_its_value_everywhere() {
        let spec = RACSpec::n_to_1(2).unwrap();
        let table = quantum_statistics(&qrac2_protocol()).unwrap();
        let report = success_report(&table, &spec).unwrap();
        assert!((report.worst_case - QRAC2_SUCCESS).abs() < 1e-12);
        assert!((report.average - QRAC2_SUCCESS).abs() < 1e-12);
    }

    #[test]
    fn send_first_bit_scores_zero_worst_three_quarters_average() {
        let spec = RACSpec::n_to_1(2).unwrap();
        let pair = DeterministicStrategyPair {
            encoder: vec![0, 1, 0, 1],
            decoder: vec![0, 0, 1, 1],
        };
        let table = strategy_distribution(&pair, spec.dims()).unwrap();
        let report = success_report(&table, &spec).unwrap();
        assert_eq!(report.worst_case, 0.0);
        assert_eq!(report.average, 0.75);
        // First failure: a = 1 (bits a0 = 1, a1 = 0), asked for a1.
        assert_eq!(report.argmin, (1, 1));
    }

    #[test]
    fn brute_force_average_optimum_for_two_bits_is_three_quarters() {
        let spec = RACSpec::n_to_1(2).unwrap();
        let opt =
            brute_force_classical_optimum(&spec, 2, OptimizationCriterion::Average).unwrap();
        assert!((opt.vertex_value - 0.75).abs() < 1e-12);
        // Linear objective: the hull cannot improve on the best vertex.
        assert!((opt.hull_value - opt.vertex_value).abs() < 1e-9);
        for pair in &opt.optimal_pairs {
            let table = strategy_distribution(pair, spec.dims()).unwrap();
            let report = success_report(&table, &spec).unwrap();
            assert_eq!(report.average, 0.75);
        }
    }

    #[test]
    fn hull_worst_case_matches_the_average_optimum() {
        // Shared randomness symmetrizes the worst case up to the average
        // optimum: mixing "send a_y, predict the other bit" strategies puts
        // exactly 3 of 4 winners on every cell, so the hull value is 3/4
        // even though no single pair wins every cell (vertex value 0).
        for n in [2, 3] {
            let spec = RACSpec::n_to_1(n).unwrap();
            let opt =
                brute_force_classical_optimum(&spec, 2, OptimizationCriterion::WorstCase).unwrap();
            assert_eq!(opt.vertex_value, 0.0);
            assert!((opt.hull_value - 0.75).abs() < 1e-9, "n={n}: {}", opt.hull_value);
        }
    }

    #[test]
    fn baseline_without_shared_randomness() {
        assert_eq!(
            factorized_worst_case_optimum(&RACSpec::n_to_1(2).unwrap(), 2),
            Some(0.5)
        );
        assert_eq!(
            factorized_worst_case_optimum(&RACSpec::n_to_1(3).unwrap(), 2),
            Some(0.5)
        );
        // An injective encoder relays the whole input.
        assert_eq!(
            factorized_worst_case_optimum(&RACSpec::n_to_1(2).unwrap(), 4),
            Some(1.0)
        );
        assert_eq!(
            factorized_worst_case_optimum(&RACSpec::n_to_1(1).unwrap(), 2),
            Some(1.0)
        );
        // A trivial message pins the value at chance level.
        assert_eq!(
            factorized_worst_case_optimum(&RACSpec::n_to_1(3).unwrap(), 1),
            Some(0.5)
        );
        // The six-valued three-bit task is open at desk scale.
        assert_eq!(
            factorized_worst_case_optimum(&RACSpec::new(3, 6).unwrap(), 6),
            None
        );
    }

    #[test]
    fn hull_weights_reproduce_the_hull_value() {
        let spec = RACSpec::n_to_1(2).unwrap();
        let opt =
            brute_force_classical_optimum(&spec, 2, OptimizationCriterion::WorstCase).unwrap();
        let dims = spec.dims();
        let mut min_success = f64::INFINITY;
        for a in 0..dims.alice_inputs {
            for b in 0..dims.bob_inputs {
                let mut p = 0.0;
                for w in &opt.hull_weights {
                    if w.pair.response(a, b, dims.bob_inputs) == spec.target(a, b) {
                        p += w.weight;
                    }
                }
                min_success = min_success.min(p);
            }
        }
        assert!((min_success - opt.hull_value).abs() < 1e-9);
    }

    #[test]
    fn entropy_boundary_and_interior_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // Frozen from an independent evaluation of -x log2 x - (1-x) log2 (1-x).
        assert!((binary_entropy(0.981).unwrap() - 0.135_788_412_885_585_82).abs() < 1e-12);
        assert!(matches!(
            binary_entropy(1.5),
            Err(Error::OutOfRange { name: "x", .. })
        ));
    }

    #[test]
    fn information_bound_known_points() {
        // Frozen from an independent 200-step bisection oracle.
        assert!((nayak_upper_bound(2.0, 1.0) - 0.889_972_135_561_640_3).abs() < 1e-9);
        let six = nayak_upper_bound(3.0, 6.0f64.log2());
        assert!((six - 0.980_549_183_945_218_1).abs() < 1e-9);
        assert!(six < 0.981);
        assert_eq!(nayak_upper_bound(3.0, 3.0), 1.0);
        assert_eq!(nayak_upper_bound(2.0, 5.0), 1.0);
    }

    #[test]
    fn information_bound_residual_is_tiny() {
        for (n, m) in [(2.0, 1.0), (3.0, 1.0), (3.0, 6.0f64.log2()), (5.0, 2.3)] {
            let p = nayak_upper_bound(n, m);
            let residual = (binary_entropy(p).unwrap() - (1.0 - m / n)).abs();
            assert!(residual <= 1e-12, "residual {residual} at n={n}, m={m}");
        }
    }

    #[test]
    fn information_bound_is_monotone() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..50 {
            let n = 1.0 + rng.random::<f64>() * 5.0;
            let m = 0.1 + rng.random::<f64>() * (n - 0.1);
            let step = 0.05;
            assert!(nayak_upper_bound(n, m + step) >= nayak_upper_bound(n, m) - 1e-9);
            assert!(nayak_upper_bound(n + step, m) <= nayak_upper_bound(n, m) + 1e-9);
        }
    }

    #[test]
    fn quantum_codes_respect_the_information_bound() {
        assert!(QRAC2_SUCCESS <= nayak_upper_bound(2.0, 1.0));
        assert!(QRAC3_SUCCESS <= nayak_upper_bound(3.0, 1.0));
    }

    #[test]
    fn worst_case_never_exceeds_average() {
        let mut rng = StdRng::seed_from_u64(23);
        let spec = RACSpec::n_to_1(2).unwrap();
        for _ in 0..50 {
            let raw: Vec<f64> = (0..spec.dims().table_len())
                .map(|_| rng.random::<f64>() + 1e-6)
                .collect();
            let dims = spec.dims();
            let cells = dims.cells();
            let table = ConditionalDistribution::from_fn(dims, |outcome, a, b| {
                let cell = a * dims.bob_inputs + b;
                let total: f64 = (0..2).map(|o| raw[o * cells + cell]).sum();
                raw[outcome * cells + cell] / total
            })
            .unwrap();
            let report = success_report(&table, &spec).unwrap();
            assert!(report.worst_case <= report.average + 1e-12);
        }
    }
}
