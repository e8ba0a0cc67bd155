//! Reference chains used by the test suites, the acceptance run and the
//! Python smoke test.

use nalgebra::DMatrix;
use rand::Rng;

use crate::chain::{
    build_chain, build_metropolis, build_random_walk, project_mean_zero, Observable,
    ReversibleChain,
};
use crate::sampling::stream_rng;

pub type Fixture = (ReversibleChain, Observable);

fn rows(data: &[&[f64]]) -> DMatrix<f64> {
    DMatrix::from_fn(data.len(), data.len(), |i, j| data[i][j])
}

/// `Q = [[1−p, p], [q, 1−q]]` with `f` the centered version of `(1, −1)`.
pub fn two_state(p: f64, q: f64) -> Fixture {
    let chain = build_chain(&rows(&[&[1.0 - p, p], &[q, 1.0 - q]])).expect("valid two-state chain");
    let f = project_mean_zero(&[1.0, -1.0], &chain).expect("finite observable");
    (chain, f)
}

/// Independent draws from `pi`: every row of `Q` equals `pi`.
pub fn iid(pi: &[f64], raw: &[f64]) -> Fixture {
    let n = pi.len();
    let chain = build_chain(&DMatrix::from_fn(n, n, |_, j| pi[j])).expect("valid i.i.d. chain");
    let f = project_mean_zero(raw, &chain).expect("finite observable");
    (chain, f)
}

/// The period-two chain `Q = [[0, 1], [1, 0]]`, `f = (1, −1)`.
pub fn flip() -> Fixture {
    let chain = build_random_walk(&rows(&[&[0.0, 1.0], &[1.0, 0.0]])).expect("single edge");
    let f = project_mean_zero(&[1.0, -1.0], &chain).expect("finite observable");
    (chain, f)
}

/// Metropolis chain on three states, target `(0.5, 0.3, 0.2)`, uniform proposal.
pub fn metropolis_three() -> Fixture {
    let chain = build_metropolis(&[0.5, 0.3, 0.2], &DMatrix::from_element(3, 3, 1.0 / 3.0))
        .expect("valid metropolis chain");
    let f = project_mean_zero(&[1.0, 0.0, -1.0], &chain).expect("finite observable");
    (chain, f)
}

/// Lazy random walk (holding probability 1/2) on a four-state star.
pub fn lazy_star() -> Fixture {
    let chain = build_random_walk(&rows(&[
        &[3.0, 1.0, 1.0, 1.0],
        &[1.0, 1.0, 0.0, 0.0],
        &[1.0, 0.0, 1.0, 0.0],
        &[1.0, 0.0, 0.0, 1.0],
    ]))
    .expect("connected star");
    let f = project_mean_zero(&[0.0, 1.0, 2.0, -1.0], &chain).expect("finite observable");
    (chain, f)
}

/// Random walk on the three-cycle with holding probability 1/4 and a
/// non-symmetric observable; has a negative eigenvalue.
pub fn holding_cycle() -> Fixture {
    let chain = build_chain(&rows(&[
        &[0.25, 0.375, 0.375],
        &[0.375, 0.25, 0.375],
        &[0.375, 0.375, 0.25],
    ]))
    .expect("valid cycle");
    let f = project_mean_zero(&[2.0, -1.0, 0.5], &chain).expect("finite observable");
    (chain, f)
}

/// Named fixtures with absolute spectral gap at least 1/4 and `σ² > 0`.
pub fn mixing_set() -> Vec<(&'static str, Fixture)> {
    vec![
        ("two_state_quarter", two_state(0.25, 0.25)),
        ("iid_two_state", iid(&[0.5, 0.5], &[1.0, -1.0])),
        ("metropolis_three", metropolis_three()),
        ("holding_cycle", holding_cycle()),
        ("lazy_star", lazy_star()),
    ]
}

/// Every named fixture with at most three states, including the flip chain.
pub fn small_set() -> Vec<(&'static str, Fixture)> {
    vec![
        ("two_state_quarter", two_state(0.25, 0.25)),
        ("two_state_asym", two_state(0.2, 0.6)),
        ("iid_two_state", iid(&[0.5, 0.5], &[1.0, -1.0])),
        ("iid_three_state", iid(&[0.2, 0.5, 0.3], &[1.0, -2.0, 3.0])),
        ("flip", flip()),
        ("metropolis_three", metropolis_three()),
        ("holding_cycle", holding_cycle()),
    ]
}

/// A random reversible chain on `n_states` states with absolute spectral gap
/// at least `min_gap`, plus a random centered observable. Deterministic in
/// `(seed, index)`.
pub fn random_reversible(n_states: usize, min_gap: f64, seed: u64, index: u64) -> Fixture {
    let mut rng = stream_rng(seed, index);
    loop {
        let mut w = DMatrix::zeros(n_states, n_states);
        for i in 0..n_states {
            for j in (i + 1)..n_states {
                // keep a spanning path so the graph stays connected
                let on_path = j == i + 1;
                if on_path || rng.random::<f64>() < 0.6 {
                    let v = 0.05 + rng.random::<f64>();
                    w[(i, j)] = v;
                    w[(j, i)] = v;
                }
            }
        }
        let holding = 0.1 + 0.4 * rng.random::<f64>();
        for i in 0..n_states {
            let degree: f64 = w.row(i).sum();
            w[(i, i)] += holding * degree / (1.0 - holding);
        }
        let Ok(chain) = build_random_walk(&w) else {
            continue;
        };
        match chain.absolute_spectral_gap() {
            Ok(gap) if gap >= min_gap => {}
            _ => continue,
        }
        let raw: Vec<f64> = (0..n_states)
            .map(|_| 2.0 * rng.random::<f64>() - 1.0)
            .collect();
        let f = project_mean_zero(&raw, &chain).expect("finite observable");
        if f.second_moment(&chain) < 1e-3 {
            continue;
        }
        return (chain, f);
    }
}

/// `count` random chains with between 2 and `max_states` states.
pub fn random_family(count: usize, max_states: usize, min_gap: f64, seed: u64) -> Vec<Fixture> {
    let mut sizes = stream_rng(seed, u64::MAX);
    (0..count)
        .map(|i| {
            let n = 2 + (sizes.random::<u64>() % (max_states as u64 - 1)) as usize;
            random_reversible(n, min_gap, seed, i as u64)
        })
        .collect()
}
