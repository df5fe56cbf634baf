//! Seeded random scenarios and tables for the sampled property suites.
//!
//! Everything flows from one ChaCha stream, so a fixed seed reproduces the
//! same instances on any platform. Efficiencies are drawn from [0.2, 1] and
//! probability vectors get a small floor, which keeps every click
//! probability strictly positive.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scenario::{DLScenario, MeasStrategy, MeasurementBox, PrepStrategy, PreparationBox};
use crate::tables::{ConditionalDistribution, ScenarioDims};

/// How the preparation box loses rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AliceEfficiency {
    Unit,
    /// Random per-input click probability in [0.2, 1].
    Lossy,
}

/// How the measurement box loses rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BobEfficiency {
    Unit,
    /// Random per-(message, input) click probability in [0.2, 1].
    MessageDependent,
    /// Random per-input click probability copied across messages.
    MessageBlind,
}

/// Deterministic scenario generator.
pub struct ScenarioSampler {
    rng: ChaCha8Rng,
}

impl ScenarioSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// A strictly positive probability vector of the given length.
    pub fn probability_vector(&mut self, len: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..len).map(|_| self.rng.random::<f64>() + 1e-2).collect();
        let sum: f64 = v.iter().sum();
        for x in &mut v {
            *x /= sum;
        }
        v
    }

    fn efficiency(&mut self) -> f64 {
        0.2 + 0.8 * self.rng.random::<f64>()
    }

    /// A normalized random conditional table.
    pub fn distribution(&mut self, dims: ScenarioDims) -> ConditionalDistribution {
        let mut raw = vec![0.0; dims.table_len()];
        for x in &mut raw {
            *x = self.rng.random::<f64>() + 1e-3;
        }
        let cells = dims.cells();
        ConditionalDistribution::from_fn(dims, |outcome, a, b| {
            let cell = a * dims.bob_inputs + b;
            let total: f64 = (0..dims.outcomes).map(|o| raw[o * cells + cell]).sum();
            raw[outcome * cells + cell] / total
        })
        .expect("normalized by construction")
    }

    /// A random scenario with the requested strategy counts and loss models.
    pub fn scenario(
        &mut self,
        dims: ScenarioDims,
        prep_strategies: usize,
        meas_strategies: usize,
        alice: AliceEfficiency,
        bob: BobEfficiency,
    ) -> DLScenario {
        let priors_q = self.probability_vector(prep_strategies);
        let prep = PreparationBox::new(
            dims,
            priors_q
                .into_iter()
                .map(|prior| {
                    let mut encoder = Vec::with_capacity(dims.alice_inputs * dims.message_dim);
                    for _ in 0..dims.alice_inputs {
                        encoder.extend(self.probability_vector(dims.message_dim));
                    }
                    let efficiency = match alice {
                        AliceEfficiency::Unit => vec![1.0; dims.alice_inputs],
                        AliceEfficiency::Lossy => {
                            (0..dims.alice_inputs).map(|_| self.efficiency()).collect()
                        }
                    };
                    PrepStrategy {
                        prior,
                        encoder,
                        efficiency,
                    }
                })
                .collect(),
        )
        .expect("sampled preparation box is valid");

        let priors_p = self.probability_vector(meas_strategies);
        let meas = MeasurementBox::new(
            dims,
            priors_p
                .into_iter()
                .map(|prior| {
                    let mut decoder =
                        Vec::with_capacity(dims.message_dim * dims.bob_inputs * dims.outcomes);
                    for _ in 0..dims.message_dim * dims.bob_inputs {
                        decoder.extend(self.probability_vector(dims.outcomes));
                    }
                    let efficiency = match bob {
                        BobEfficiency::Unit => vec![1.0; dims.message_dim * dims.bob_inputs],
                        BobEfficiency::MessageDependent => (0..dims.message_dim * dims.bob_inputs)
                            .map(|_| self.efficiency())
                            .collect(),
                        BobEfficiency::MessageBlind => {
                            let per_input: Vec<f64> =
                                (0..dims.bob_inputs).map(|_| self.efficiency()).collect();
                            let mut eff =
                                Vec::with_capacity(dims.message_dim * dims.bob_inputs);
                            for _ in 0..dims.message_dim {
                                eff.extend_from_slice(&per_input);
                            }
                            eff
                        }
                    };
                    MeasStrategy {
                        prior,
                        decoder,
                        efficiency,
                    }
                })
                .collect(),
        )
        .expect("sampled measurement box is valid");

        DLScenario::new(prep, meas).expect("dims match by construction")
    }

    /// Uniform choice among small integers, for varying instance shapes.
    pub fn pick(&mut self, upper: usize) -> usize {
        self.rng.random_range(0..upper)
    }
}
