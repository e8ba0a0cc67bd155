//! Seeded stationary sample paths.
//!
//! Randomness comes from ChaCha8 with a 64-bit master seed; independent
//! replicas use distinct ChaCha stream ids, so replica `i` of a Monte Carlo
//! experiment is a pure function of `(master seed, i)` no matter which
//! thread runs it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{Observable, ReversibleChain};
use crate::error::{Error, Result};

/// The random stream for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Walks a stationary chain one state at a time.
pub struct PathWalker<'a> {
    chain: &'a ReversibleChain,
    rng: ChaCha8Rng,
    state: usize,
}

impl<'a> PathWalker<'a> {
    /// Start a walk with `ξ_0 ~ π`.
    pub fn new(chain: &'a ReversibleChain, seed: u64, stream: u64) -> Self {
        let mut rng = stream_rng(seed, stream);
        let state = chain.initial_state(rng.random::<f64>());
        Self { chain, rng, state }
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn step(&mut self) -> usize {
        self.state = self.chain.next_state(self.state, self.rng.random::<f64>());
        self.state
    }
}

/// A sample path `ξ_0..ξ_N` with `X_i = f(ξ_i)` and `S_n = Σ_{i=1}^n X_i`.
///
/// All three sequences have length `N + 1`; `values[0] = X_0` and
/// `partial_sums[0] = S_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub values: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
}

impl Trajectory {
    /// Number of transitions `N`.
    pub fn len(&self) -> usize {
        self.states.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn state(&self, i: usize) -> usize {
        self.states[i]
    }

    pub fn x(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn s(&self, n: usize) -> f64 {
        self.partial_sums[n]
    }
}

pub fn sample_trajectory(
    chain: &ReversibleChain,
    f: &Observable,
    length: usize,
    seed: u64,
) -> Result<Trajectory> {
    sample_trajectory_stream(chain, f, length, seed, 0)
}

/// Like [`sample_trajectory`] on an explicit stream of the master seed.
pub fn sample_trajectory_stream(
    chain: &ReversibleChain,
    f: &Observable,
    length: usize,
    seed: u64,
    stream: u64,
) -> Result<Trajectory> {
    if length == 0 {
        return Err(Error::InvalidLength(length));
    }
    if f.len() != chain.n_states() {
        return Err(Error::DimensionMismatch {
            expected: chain.n_states(),
            got: f.len(),
        });
    }
    let mut walker = PathWalker::new(chain, seed, stream);
    let mut states = Vec::with_capacity(length + 1);
    states.push(walker.state());
    states.extend((0..length).map(|_| walker.step()));
    let values: Vec<f64> = states.iter().map(|&s| f.at(s)).collect();
    let mut partial_sums = Vec::with_capacity(length + 1);
    let mut acc = 0.0;
    partial_sums.push(acc);
    for x in &values[1..] {
        acc += x;
        partial_sums.push(acc);
    }
    Ok(Trajectory {
        states,
        values,
        partial_sums,
        seed,
        stream,
    })
}
