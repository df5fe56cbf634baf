//! Minimal qubit layer: Bloch vectors, binary projective measurements and
//! the standard square/cube random-access-code constructions.
//!
//! States are kept as Bloch 3-vectors, so the Born rule is a plain inner
//! product and no complex linear algebra is needed. Outcome 0 is always the
//! effect along the measurement axis.

use crate::error::{Error, Result};
use crate::tables::{ConditionalDistribution, ScenarioDims};

/// Worst-case success of the two-bit qubit code, ½(1 + 1/√2).
pub const QRAC2_SUCCESS: f64 = 0.5 * (1.0 + std::f64::consts::FRAC_1_SQRT_2);

/// Worst-case success of the three-bit qubit code, ½(1 + 1/√3).
pub const QRAC3_SUCCESS: f64 = 0.5 * (1.0 + 0.577_350_269_189_625_8);

/// A qubit state as its Bloch vector; mixed states sit strictly inside the
/// unit ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    bloch: [f64; 3],
}

impl QubitState {
    pub fn new(bloch: [f64; 3]) -> Result<Self> {
        let norm = norm3(bloch);
        if norm > 1.0 + 1e-12 {
            return Err(Error::OutOfRange {
                name: "bloch vector norm",
                value: norm,
                min: 0.0,
                max: 1.0,
            });
        }
        Ok(Self { bloch })
    }

    pub fn maximally_mixed() -> Self {
        Self { bloch: [0.0; 3] }
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (norm3(self.bloch) - 1.0).abs() <= tol
    }
}

/// A binary projective measurement along a unit axis; outcome 0 is the
/// +axis effect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryQubitMeasurement {
    axis: [f64; 3],
}

impl BinaryQubitMeasurement {
    pub fn new(axis: [f64; 3]) -> Result<Self> {
        let norm = norm3(axis);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::OutOfRange {
                name: "measurement axis norm",
                value: norm,
                min: 1.0,
                max: 1.0,
            });
        }
        Ok(Self { axis })
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn dot3(u: [f64; 3], v: [f64; 3]) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

/// Born rule for a binary measurement:
/// P(outcome) = (1 + (−1)^outcome · bloch·axis) / 2.
pub fn born_probability(
    state: &QubitState,
    measurement: &BinaryQubitMeasurement,
    outcome: usize,
) -> f64 {
    assert!(outcome < 2, "binary measurement outcome must be 0 or 1");
    let overlap = dot3(state.bloch, measurement.axis);
    let sign = if outcome == 0 { 1.0 } else { -1.0 };
    0.5 * (1.0 + sign * overlap)
}

/// One qubit state per preparation input and one binary measurement per
/// measurement input.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumPrepareMeasure {
    pub states: Vec<QubitState>,
    pub measurements: Vec<BinaryQubitMeasurement>,
}

impl QuantumPrepareMeasure {
    pub fn dims(&self) -> Result<ScenarioDims> {
        ScenarioDims::new(self.states.len(), self.measurements.len(), 2, 2)
    }
}

/// The square construction for encoding two bits into one qubit.
///
/// Input `a` is read as little-endian bits (a₀, a₁); the state sits at
/// ((−1)^a₀, 0, (−1)^a₁)/√2 and the two measurements read the x and z
/// components, so every success entry equals [`QRAC2_SUCCESS`].
pub fn qrac2_protocol() -> QuantumPrepareMeasure {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let states = (0..4)
        .map(|a| {
            let x = if a & 1 == 0 { c } else { -c };
            let z = if (a >> 1) & 1 == 0 { c } else { -c };
            QubitState::new([x, 0.0, z]).expect("square states are unit vectors")
        })
        .collect();
    let measurements = vec![
        BinaryQubitMeasurement::new([1.0, 0.0, 0.0]).expect("unit axis"),
        BinaryQubitMeasurement::new([0.0, 0.0, 1.0]).expect("unit axis"),
    ];
    QuantumPrepareMeasure {
        states,
        measurements,
    }
}

/// The cube construction for encoding three bits into one qubit.
///
/// States sit at the cube vertices ((−1)^a₀, (−1)^a₁, (−1)^a₂)/√3 and the
/// measurements read the x, y and z components; every success entry equals
/// [`QRAC3_SUCCESS`].
pub fn qrac3_protocol() -> QuantumPrepareMeasure {
    let c = 1.0 / 3.0f64.sqrt();
    let states = (0..8)
        .map(|a: usize| {
            let coord = |bit: usize| if (a >> bit) & 1 == 0 { c } else { -c };
            QubitState::new([coord(0), coord(1), coord(2)]).expect("cube states are unit vectors")
        })
        .collect();
    let measurements = vec![
        BinaryQubitMeasurement::new([1.0, 0.0, 0.0]).expect("unit axis"),
        BinaryQubitMeasurement::new([0.0, 1.0, 0.0]).expect("unit axis"),
        BinaryQubitMeasurement::new([0.0, 0.0, 1.0]).expect("unit axis"),
    ];
    QuantumPrepareMeasure {
        states,
        measurements,
    }
}

/// Evaluates the Born rule on every (state, measurement, outcome) triple.
pub fn quantum_statistics(protocol: &QuantumPrepareMeasure) -> Result<ConditionalDistribution> {
    let dims = protocol.dims()?;
    ConditionalDistribution::from_fn(dims, |outcome, a, b| {
        born_probability(&protocol.states[a], &protocol.measurements[b], outcome)
    })
}

/// Success probability when the detector clicks with probability `eta` and
/// the box answers uniformly at random otherwise:
/// eta · success + (1 − eta)/2.
pub fn efficiency_mixed_success(success: f64, eta: f64) -> Result<f64> {
    for (name, value) in [("success", success), ("eta", eta)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfRange {
                name,
                value,
                min: 0.0,
                max: 1.0,
            });
        }
    }
    Ok(eta * success + (1.0 - eta) * 0.5)
}
