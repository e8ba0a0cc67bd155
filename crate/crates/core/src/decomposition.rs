//! Forward and reversed martingale differences along a sample path.
//!
//! Under the Markov property `E_k f(ξ_{k+j}) = (Q^j f)(ξ_k)`, and by
//! reversibility `E(f(ξ_{k−j}) | ξ_k) = (Q^j f)(ξ_k)`. With
//!
//! ```text
//! u_n = (1/n) Σ_{i=0}^{n−1} Σ_{j=0}^{i} Q^j f = Σ_{j=0}^{n−1} (n − j)/n · Q^j f
//! ```
//!
//! the Cesàro-averaged differences are
//!
//! ```text
//! D_k^n = u_n(ξ_k) − (Q u_n)(ξ_{k−1})      (forward)
//! D̃_k^n = u_n(ξ_k) − (Q u_n)(ξ_{k+1})      (reversed)
//! ```
//!
//! and the limits replace `u_n` by the Poisson solution `g = (I − Q)^{-1} f`.
//!
//! Two boundary terms exist. [`Decomposer::boundary_term`] is
//! `B_{n,k} = (1/n) E_k(S_n − S_k)` with `n − k` summands. The two-step
//! identity `X_k + X_{k+1} = D_{k+1}^n + D̃_k^n + B̄_{n,k} + B̄_{n,k+1}` holds
//! exactly with the horizon-`n` term `B̄_{n,k} = (1/n) E_k(S_{k+n} − S_k)`
//! ([`Decomposer::stationary_boundary_term`]).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::chain::{Observable, ReversibleChain};
use crate::error::{Error, Result};
use crate::sampling::Trajectory;
use crate::spectral::{one_step_l2, solve_poisson, PoissonSolution};

/// Residual bound the exact identities are certified to.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Precomputed `Q^j f`, `u_n` and the Poisson solution for one horizon.
pub struct Decomposer<'a> {
    chain: &'a ReversibleChain,
    horizon: usize,
    // cumulative[m] = Σ_{j=1}^m Q^j f
    cumulative: Vec<DVector<f64>>,
    u: DVector<f64>,
    qu: DVector<f64>,
    poisson: PoissonSolution,
}

fn out_of_range(index: usize, reason: impl Into<String>) -> Error {
    Error::IndexOutOfRange {
        index,
        reason: reason.into(),
    }
}

/// `Q^j f` for `j = 0..=count`.
fn kernel_powers(chain: &ReversibleChain, f: &Observable, count: usize) -> Vec<DVector<f64>> {
    let mut powers = Vec::with_capacity(count + 1);
    powers.push(f.values().clone());
    for j in 1..=count {
        let next = chain.apply(&powers[j - 1]);
        powers.push(next);
    }
    powers
}

fn cesaro_vector(powers: &[DVector<f64>], n: usize) -> DVector<f64> {
    let nf = n as f64;
    let mut u = DVector::zeros(powers[0].len());
    for (j, p) in powers.iter().enumerate().take(n) {
        u.axpy((n - j) as f64 / nf, p, 1.0);
    }
    u
}

impl<'a> Decomposer<'a> {
    pub fn new(chain: &'a ReversibleChain, f: &Observable, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if f.len() != chain.n_states() {
            return Err(Error::DimensionMismatch {
                expected: chain.n_states(),
                got: f.len(),
            });
        }
        let powers = kernel_powers(chain, f, horizon);
        let mut cumulative = Vec::with_capacity(horizon + 1);
        cumulative.push(DVector::zeros(f.len()));
        for j in 1..=horizon {
            let next = &cumulative[j - 1] + &powers[j];
            cumulative.push(next);
        }
        let u = cesaro_vector(&powers, horizon);
        let qu = chain.apply(&u);
        let poisson = solve_poisson(chain, f)?;
        Ok(Self {
            chain,
            horizon,
            cumulative,
            u,
            qu,
            poisson,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn poisson(&self) -> &PoissonSolution {
        &self.poisson
    }

    /// `D_k^n`; needs `1 ≤ k` and `k + n ≤ N`.
    pub fn forward_difference(&self, traj: &Trajectory, k: usize) -> Result<f64> {
        if k == 0 || k + self.horizon > traj.len() {
            return Err(out_of_range(
                k,
                format!(
                    "need 1 <= k <= N - n = {}",
                    traj.len() as i64 - self.horizon as i64
                ),
            ));
        }
        Ok(self.u[traj.state(k)] - self.qu[traj.state(k - 1)])
    }

    /// `D̃_k^n`; needs `k + n ≤ N`.
    pub fn reversed_difference(&self, traj: &Trajectory, k: usize) -> Result<f64> {
        if k + self.horizon > traj.len() {
            return Err(out_of_range(
                k,
                format!(
                    "need k <= N - n = {}",
                    traj.len() as i64 - self.horizon as i64
                ),
            ));
        }
        Ok(self.u[traj.state(k)] - self.qu[traj.state(k + 1)])
    }

    /// `θ_k^n = (1/n) Σ_{i=0}^{n−1} E_k(S_{k+i})`.
    pub fn theta(&self, traj: &Trajectory, k: usize) -> Result<f64> {
        if k > traj.len() {
            return Err(out_of_range(k, "beyond the trajectory"));
        }
        let x = traj.state(k);
        Ok(traj.s(k) + self.u[x] - traj.x(k))
    }

    /// `B_{n,k} = (1/n) E_k(S_n − S_k) = (1/n) Σ_{j=1}^{n−k} (Q^j f)(ξ_k)`.
    pub fn boundary_term(&self, traj: &Trajectory, k: usize) -> Result<f64> {
        if k > self.horizon || self.horizon > traj.len() {
            return Err(out_of_range(k, "need k <= n <= N"));
        }
        Ok(self.cumulative[self.horizon - k][traj.state(k)] / self.horizon as f64)
    }

    /// `B̄_{n,k} = (1/n) E_k(S_{k+n} − S_k) = (1/n) Σ_{j=1}^{n} (Q^j f)(ξ_k)`.
    pub fn stationary_boundary_term(&self, traj: &Trajectory, k: usize) -> Result<f64> {
        if k > traj.len() {
            return Err(out_of_range(k, "beyond the trajectory"));
        }
        Ok(self.cumulative[self.horizon][traj.state(k)] / self.horizon as f64)
    }

    /// Limit forward difference `D_k = g(ξ_k) − (Qg)(ξ_{k−1})`, `1 ≤ k ≤ N`.
    pub fn limit_forward(&self, traj: &Trajectory, k: usize) -> Result<f64> {
        if k == 0 || k > traj.len() {
            return Err(out_of_range(k, "need 1 <= k <= N"));
        }
        Ok(self.poisson.g[traj.state(k)] - self.poisson.qg[traj.state(k - 1)])
    }

    /// Limit reversed difference `D̃_k = g(ξ_k) − (Qg)(ξ_{k+1})`, `0 ≤ k < N`.
    pub fn limit_reversed(&self, traj: &Trajectory, k: usize) -> Result<f64> {
        if k >= traj.len() {
            return Err(out_of_range(k, "need k < N"));
        }
        Ok(self.poisson.g[traj.state(k)] - self.poisson.qg[traj.state(k + 1)])
    }

    /// `|X_k + X_{k+1} − D_{k+1}^n − D̃_k^n − B̄_{n,k} − B̄_{n,k+1}|`.
    pub fn two_step_residual(&self, traj: &Trajectory, k: usize) -> Result<f64> {
        let lhs = traj.x(k) + traj.x(k + 1);
        let rhs = self.forward_difference(traj, k + 1)?
            + self.reversed_difference(traj, k)?
            + self.stationary_boundary_term(traj, k)?
            + self.stationary_boundary_term(traj, k + 1)?;
        Ok((lhs - rhs).abs())
    }

    /// `max_x |Σ_y Q(x, y) D^n(y; x)|` where `D^n(y; x) = u_n(y) − (Q u_n)(x)`.
    ///
    /// The reversed difference `D̃^n(x; z) = u_n(x) − (Q u_n)(z)` has the same
    /// functional form, so this also certifies the reversed property.
    pub fn cesaro_certificate(&self) -> f64 {
        conditional_mean_residual(self.chain, &self.u, &self.qu)
    }

    /// Same certificate for the limit differences built from `g`.
    pub fn limit_certificate(&self) -> f64 {
        conditional_mean_residual(self.chain, &self.poisson.g, &self.poisson.qg)
    }

    /// `E(D_k²) = Σ_x π(x) Σ_y Q(x, y) (g(y) − (Qg)(x))²`.
    pub fn limit_second_moment(&self) -> f64 {
        one_step_l2(self.chain, &self.poisson.g)
    }

    /// `E(D_k^n − D_k)²` at this horizon.
    pub fn l2_distance_to_limit(&self) -> f64 {
        one_step_l2(self.chain, &(&self.u - &self.poisson.g))
    }
}

fn conditional_mean_residual(chain: &ReversibleChain, h: &DVector<f64>, qh: &DVector<f64>) -> f64 {
    let q = chain.kernel();
    let n = chain.n_states();
    (0..n)
        .map(|x| {
            (0..n)
                .map(|y| q[(x, y)] * (h[y] - qh[x]))
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max)
}

pub fn forward_difference(
    chain: &ReversibleChain,
    f: &Observable,
    traj: &Trajectory,
    k: usize,
    n: usize,
) -> Result<f64> {
    Decomposer::new(chain, f, n)?.forward_difference(traj, k)
}

pub fn reversed_difference(
    chain: &ReversibleChain,
    f: &Observable,
    traj: &Trajectory,
    k: usize,
    n: usize,
) -> Result<f64> {
    Decomposer::new(chain, f, n)?.reversed_difference(traj, k)
}

pub fn boundary_term(
    chain: &ReversibleChain,
    f: &Observable,
    traj: &Trajectory,
    k: usize,
    n: usize,
) -> Result<f64> {
    Decomposer::new(chain, f, n)?.boundary_term(traj, k)
}

/// `(D_k, D̃_k)` for `1 ≤ k < N`.
pub fn limit_difference(
    chain: &ReversibleChain,
    f: &Observable,
    traj: &Trajectory,
    k: usize,
) -> Result<(f64, f64)> {
    let d = Decomposer::new(chain, f, 1)?;
    Ok((d.limit_forward(traj, k)?, d.limit_reversed(traj, k)?))
}

/// Exact `E(D_k^n − D_k)²` for each horizon; stationarity makes it
/// independent of `k`.
pub fn l2_convergence_table(
    chain: &ReversibleChain,
    f: &Observable,
    horizons: &[usize],
) -> Result<Vec<f64>> {
    if horizons.contains(&0) {
        return Err(Error::InvalidArgument("horizons must be positive".into()));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "horizons must be strictly increasing".into(),
        ));
    }
    let Some(&max) = horizons.last() else {
        return Ok(Vec::new());
    };
    let powers = kernel_powers(chain, f, max);
    let g = solve_poisson(chain, f)?.g;
    Ok(horizons
        .iter()
        .map(|&n| one_step_l2(chain, &(cesaro_vector(&powers, n) - &g)))
        .collect())
}

/// All decomposition sequences for one trajectory; see the field docs for
/// the index range each sequence covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTerms {
    /// Cesàro horizon `n`.
    pub n: usize,
    /// Trajectory length `N`.
    pub length: usize,
    /// `X_k`, `k = 0..=N`.
    pub x: Vec<f64>,
    /// `D_k^n`, `k = 1..=N−n` (entry `k − 1`).
    pub forward: Vec<f64>,
    /// `D̃_k^n`, `k = 0..=N−n`.
    pub reversed: Vec<f64>,
    /// `θ_k^n`, `k = 0..=N`.
    pub theta: Vec<f64>,
    /// `B̄_{n,k}`, `k = 0..=N`.
    pub boundary: Vec<f64>,
    /// `D_k`, `k = 1..=N` (entry `k − 1`).
    pub limit_forward: Vec<f64>,
    /// `D̃_k`, `k = 0..N`.
    pub limit_reversed: Vec<f64>,
    /// `M^d_m = Σ_{i=1}^m D_i`, `m = 0..=N`.
    pub m_d: Vec<f64>,
    /// `M^r_m = Σ_{i=0}^{m−1} D̃_i`, `m = 0..=N`.
    pub m_r: Vec<f64>,
    /// Two-step identity residual, `k = 0..N−n`.
    pub residual_xk1: Vec<f64>,
    /// `|2S_m − M^d_m − M^r_m − X_m + X_0|`, `m = 0..=N`.
    pub residual_martdec: Vec<f64>,
}

/// One CSV row; `None` where the quantity is undefined at `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionRow {
    pub k: usize,
    pub x: f64,
    pub forward: Option<f64>,
    pub reversed: Option<f64>,
    pub boundary: Option<f64>,
    pub limit_forward: Option<f64>,
    pub residual_xk1: Option<f64>,
    pub residual_martdec: Option<f64>,
}

impl DecompositionTerms {
    pub fn max_residual_xk1(&self) -> f64 {
        self.residual_xk1.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_residual_martdec(&self) -> f64 {
        self.residual_martdec.iter().copied().fold(0.0, f64::max)
    }

    pub fn certified(&self) -> bool {
        self.max_residual_xk1() <= IDENTITY_TOL && self.max_residual_martdec() <= IDENTITY_TOL
    }

    pub fn rows(&self) -> Vec<DecompositionRow> {
        (0..=self.length)
            .map(|k| DecompositionRow {
                k,
                x: self.x[k],
                forward: k.checked_sub(1).and_then(|i| self.forward.get(i).copied()),
                reversed: self.reversed.get(k).copied(),
                boundary: self.boundary.get(k).copied(),
                limit_forward: k
                    .checked_sub(1)
                    .and_then(|i| self.limit_forward.get(i).copied()),
                residual_xk1: self.residual_xk1.get(k).copied(),
                residual_martdec: self.residual_martdec.get(k).copied(),
            })
            .collect()
    }
}

/// Fill every decomposition sequence for `traj` at Cesàro horizon `horizon`.
pub fn decompose_trajectory(
    chain: &ReversibleChain,
    f: &Observable,
    traj: &Trajectory,
    horizon: usize,
) -> Result<DecompositionTerms> {
    let big_n = traj.len();
    if big_n < 2 {
        return Err(Error::InvalidLength(big_n));
    }
    let d = Decomposer::new(chain, f, horizon)?;
    let cesaro_last = big_n.checked_sub(horizon);

    let forward = match cesaro_last {
        Some(last) => (1..=last)
            .map(|k| d.forward_difference(traj, k))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let reversed = match cesaro_last {
        Some(last) => (0..=last)
            .map(|k| d.reversed_difference(traj, k))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let residual_xk1 = match cesaro_last {
        Some(last) if last >= 1 => (0..last)
            .map(|k| d.two_step_residual(traj, k))
            .collect::<Result<_>>()?,
        _ => Vec::new(),
    };
    let theta = (0..=big_n)
        .map(|k| d.theta(traj, k))
        .collect::<Result<_>>()?;
    let boundary = (0..=big_n)
        .map(|k| d.stationary_boundary_term(traj, k))
        .collect::<Result<_>>()?;
    let limit_forward: Vec<f64> = (1..=big_n)
        .map(|k| d.limit_forward(traj, k))
        .collect::<Result<_>>()?;
    let limit_reversed: Vec<f64> = (0..big_n)
        .map(|k| d.limit_reversed(traj, k))
        .collect::<Result<_>>()?;

    let mut m_d = Vec::with_capacity(big_n + 1);
    let mut m_r = Vec::with_capacity(big_n + 1);
    let (mut acc_d, mut acc_r) = (0.0, 0.0);
    m_d.push(acc_d);
    m_r.push(acc_r);
    for (df, dr) in limit_forward.iter().zip(&limit_reversed) {
        acc_d += df;
        acc_r += dr;
        m_d.push(acc_d);
        m_r.push(acc_r);
    }
    let x0 = traj.x(0);
    let residual_martdec = (0..=big_n)
        .map(|m| (2.0 * traj.s(m) - m_d[m] - m_r[m] - traj.x(m) + x0).abs())
        .collect();

    Ok(DecompositionTerms {
        n: horizon,
        length: big_n,
        x: traj.values.clone(),
        forward,
        reversed,
        theta,
        boundary,
        limit_forward,
        limit_reversed,
        m_d,
        m_r,
        residual_xk1,
        residual_martdec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sampling::sample_trajectory;
    use crate::spectral::{spectral_measure, SpectralMeasure};
    use approx::assert_abs_diff_eq;

    fn path(states: &[usize], f: &Observable) -> Trajectory {
        let values: Vec<f64> = states.iter().map(|&s| f.at(s)).collect();
        let mut partial_sums = vec![0.0];
        for x in &values[1..] {
            partial_sums.push(partial_sums.last().unwrap() + x);
        }
        Trajectory {
            states: states.to_vec(),
            values,
            partial_sums,
            seed: 0,
            stream: 0,
        }
    }

    #[test]
    fn iid_differences_are_observations() {
        let (chain, f) = fixtures::iid(&[0.2, 0.5, 0.3], &[1.0, -2.0, 3.0]);
        let traj = sample_trajectory(&chain, &f, 40, 5).unwrap();
        for n in [1, 3, 10] {
            let d = Decomposer::new(&chain, &f, n).unwrap();
            for k in 1..=(40 - n) {
                assert_abs_diff_eq!(
                    d.forward_difference(&traj, k).unwrap(),
                    traj.x(k),
                    epsilon = 1e-14
                );
                assert_abs_diff_eq!(
                    d.reversed_difference(&traj, k).unwrap(),
                    traj.x(k),
                    epsilon = 1e-14
                );
                assert_abs_diff_eq!(
                    d.limit_forward(&traj, k).unwrap(),
                    traj.x(k),
                    epsilon = 1e-13
                );
            }
            for k in 0..=n {
                assert_abs_diff_eq!(d.boundary_term(&traj, k).unwrap(), 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn two_state_hand_assembly() {
        let (chain, f) = fixtures::two_state(0.25, 0.25);
        let traj = path(&[0, 0, 0, 1, 0, 1, 1], &f);
        let d = Decomposer::new(&chain, &f, 2).unwrap();
        assert_abs_diff_eq!(
            d.forward_difference(&traj, 1).unwrap(),
            0.625,
            epsilon = 1e-15
        );

        let d = Decomposer::new(&chain, &f, 4).unwrap();
        assert_abs_diff_eq!(d.boundary_term(&traj, 2).unwrap(), 0.1875, epsilon = 1e-15);
        assert_eq!(d.boundary_term(&traj, 4).unwrap(), 0.0);

        // g = 2f, Qg = f
        let (df, dr) = limit_difference(&chain, &f, &traj, 3).unwrap();
        assert_abs_diff_eq!(df, 2.0 * f.at(1) - f.at(0), epsilon = 1e-14);
        assert_abs_diff_eq!(dr, 2.0 * f.at(1) - f.at(0), epsilon = 1e-14);
        assert_abs_diff_eq!(d.limit_second_moment(), 3.0, epsilon = 1e-13);
    }

    #[test]
    fn conditional_means_vanish() {
        for (_, (chain, f)) in fixtures::small_set() {
            for n in [1, 2, 5, 17] {
                let d = Decomposer::new(&chain, &f, n).unwrap();
                assert!(d.cesaro_certificate() <= 1e-12);
                assert!(d.limit_certificate() <= 1e-12);
            }
        }
    }

    #[test]
    fn reversed_difference_matches_identity() {
        let (chain, f) = fixtures::metropolis_three();
        let traj = sample_trajectory(&chain, &f, 200, 11).unwrap();
        let d = Decomposer::new(&chain, &f, 7).unwrap();
        for k in 0..(200 - 7) {
            let implied = traj.x(k) + traj.x(k + 1)
                - d.forward_difference(&traj, k + 1).unwrap()
                - d.stationary_boundary_term(&traj, k).unwrap()
                - d.stationary_boundary_term(&traj, k + 1).unwrap();
            assert_abs_diff_eq!(
                d.reversed_difference(&traj, k).unwrap(),
                implied,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn theta_definition() {
        // D_k^n = θ_k^n − E_{k−1} θ_k^n
        let (chain, f) = fixtures::holding_cycle();
        let traj = sample_trajectory(&chain, &f, 30, 2).unwrap();
        let n = 4;
        let d = Decomposer::new(&chain, &f, n).unwrap();
        let q = chain.kernel();
        for k in 1..=(30 - n) {
            let prev = traj.state(k - 1);
            let conditional: f64 = (0..chain.n_states())
                .map(|y| {
                    let mut alt = traj.clone();
                    alt.states[k] = y;
                    alt.values[k] = f.at(y);
                    alt.partial_sums[k] = alt.partial_sums[k - 1] + f.at(y);
                    q[(prev, y)] * d.theta(&alt, k).unwrap()
                })
                .sum();
            assert_abs_diff_eq!(
                d.forward_difference(&traj, k).unwrap(),
                d.theta(&traj, k).unwrap() - conditional,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn index_checks() {
        let (chain, f) = fixtures::two_state(0.25, 0.25);
        let traj = sample_trajectory(&chain, &f, 10, 1).unwrap();
        let d = Decomposer::new(&chain, &f, 3).unwrap();
        assert!(d.forward_difference(&traj, 0).is_err());
        assert!(d.forward_difference(&traj, 8).is_err());
        assert!(d.forward_difference(&traj, 7).is_ok());
        assert!(d.reversed_difference(&traj, 8).is_err());
        assert!(d.boundary_term(&traj, 4).is_err());
        assert!(d.limit_reversed(&traj, 10).is_err());
        assert!(Decomposer::new(&chain, &f, 0).is_err());
    }

    #[test]
    fn flip_chain_has_zero_limit_martingale() {
        let (chain, f) = fixtures::flip();
        let traj = sample_trajectory(&chain, &f, 25, 9).unwrap();
        let terms = decompose_trajectory(&chain, &f, &traj, 3).unwrap();
        assert!(terms.m_d.iter().all(|v| v.abs() < 1e-15));
        for m in 0..=25 {
            assert_abs_diff_eq!(2.0 * traj.s(m), traj.x(m) - traj.x(0), epsilon = 1e-15);
            assert!(traj.s(m).abs() <= 1.0);
        }
        assert!(terms.certified());
    }

    #[test]
    fn iid_pins_reversed_index_convention() {
        let (chain, f) = fixtures::iid(&[0.5, 0.5], &[1.0, -1.0]);
        let traj = sample_trajectory(&chain, &f, 60, 4).unwrap();
        let terms = decompose_trajectory(&chain, &f, &traj, 5).unwrap();
        assert!(terms.max_residual_martdec() <= 1e-12);
        // Σ_{i=0}^{m−1} D̃_i with D̃_i = X_i
        for m in 0..=60 {
            assert_abs_diff_eq!(
                terms.m_r[m],
                traj.s(m) - traj.x(m) + traj.x(0),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn short_two_state_trajectory_certified() {
        let (chain, f) = fixtures::two_state(0.25, 0.25);
        let traj = sample_trajectory(&chain, &f, 3, 42).unwrap();
        let terms = decompose_trajectory(&chain, &f, &traj, 1).unwrap();
        assert_eq!(terms.residual_xk1.len(), 2);
        assert_eq!(terms.residual_martdec.len(), 4);
        assert!(terms.certified());
        let rows = terms.rows();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].forward.is_none());
        assert!(rows[3].residual_xk1.is_none());
    }

    #[test]
    fn l2_table_iid_is_zero() {
        let (chain, f) = fixtures::iid(&[0.2, 0.5, 0.3], &[1.0, -2.0, 3.0]);
        let table = l2_convergence_table(&chain, &f, &[1, 10, 100]).unwrap();
        assert!(table.iter().all(|v| v.abs() < 1e-24));
    }

    #[test]
    fn l2_table_matches_spectral_formula() {
        // c_λ = −λ (1 − λ^n) / (n (1 − λ)²); E(D^n − D)² = Σ w (1 − λ²) c_λ²
        let spectral = |rho: &SpectralMeasure, n: usize| -> f64 {
            rho.atoms
                .iter()
                .map(|a| {
                    let l = a.lambda;
                    let c = -l * (1.0 - l.powi(n as i32)) / (n as f64 * (1.0 - l).powi(2));
                    a.weight * (1.0 - l * l) * c * c
                })
                .sum()
        };
        let (chain, f) = fixtures::holding_cycle();
        let rho = spectral_measure(&chain, &f).unwrap();
        let horizons = [1, 2, 4, 8, 16, 64, 256];
        let table = l2_convergence_table(&chain, &f, &horizons).unwrap();
        for (v, &n) in table.iter().zip(&horizons) {
            assert_abs_diff_eq!(*v, spectral(&rho, n), epsilon = 1e-13);
        }
        assert!(table.windows(2).all(|w| w[1] < w[0]));
        assert!(l2_convergence_table(&chain, &f, &[3, 2]).is_err());
    }

    #[test]
    fn l2_table_rate_two_state() {
        let (chain, f) = fixtures::two_state(0.25, 0.25);
        let table = l2_convergence_table(&chain, &f, &[10, 100, 1000]).unwrap();
        assert!(table.windows(2).all(|w| w[1] < w[0]));
        let c = table[0] * 10.0;
        assert!(table[1] <= c / 100.0);
        assert!(table[2] <= c / 1000.0);
        // the geometric tail actually gives 1/n²
        let c2 = table[0] * 100.0;
        assert!(table[1] <= c2 / 100.0f64.powi(2) * 1.01);
        assert!(table[2] <= c2 / 1000.0f64.powi(2) * 1.01);
    }
}
