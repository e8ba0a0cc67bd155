//! Finite-state reversible Markov chains and centered observables.
//!
//! Every constructor funnels through [`ReversibleChain::certify`], which
//! symmetrizes the probability flux `π_i Q_ij` and re-derives `Q` and `π`
//! from it. Inputs are admitted at [`ADMISSION_TOL`]; the resulting chain
//! satisfies row-stochasticity, detailed balance and stationarity to
//! [`CERTIFY_TOL`].

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance applied to user-supplied kernels, weights and targets.
pub const ADMISSION_TOL: f64 = 1e-9;

/// Tolerance the constructed chain is certified to.
pub const CERTIFY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ReversibleChain {
    kernel: DMatrix<f64>,
    stationary: DVector<f64>,
    // Row-major cumulative sums of the kernel, last entry of each row pinned to 1.
    cumulative: Vec<f64>,
    cumulative_stationary: Vec<f64>,
}

/// A real function on the state space, centered under the stationary law.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    values: DVector<f64>,
}

/// Turn a list of rows into a dense matrix, rejecting ragged input.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
        return Err(Error::DimensionMismatch {
            expected: n_cols,
            got: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(n_rows, n_cols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn check_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(m.nrows())
}

/// Strong connectivity of the directed graph `i -> j` iff `edge(i, j)`.
fn strongly_connected(n: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for (j, s) in seen.iter_mut().enumerate() {
                let linked = if forward { edge(i, j) } else { edge(j, i) };
                if linked && !*s {
                    *s = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

fn check_row_sums(kernel: &DMatrix<f64>, tol: f64) -> Result<()> {
    for (i, row) in kernel.row_iter().enumerate() {
        if let Some(v) = row.iter().find(|v| **v < 0.0) {
            return Err(Error::NotStochastic(format!(
                "negative entry {v} in row {i}"
            )));
        }
        let sum: f64 = row.sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::NotStochastic(format!("row {i} sums to {sum}")));
        }
    }
    Ok(())
}

/// Solve `π (Q - I) = 0`, `Σ π = 1` for the left eigenvector at eigenvalue 1.
fn stationary_vector(kernel: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = kernel.nrows();
    let mut system = kernel.transpose() - DMatrix::identity(n, n);
    system.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NotIrreducible("stationary law is not unique".into()))?;
    if let Some(i) = pi.iter().position(|p| !(*p > 0.0)) {
        return Err(Error::NotIrreducible(format!(
            "stationary mass {} at state {i}",
            pi[i]
        )));
    }
    Ok(pi)
}

fn detailed_balance_residual(kernel: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    let n = kernel.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((pi[i] * kernel[(i, j)] - pi[j] * kernel[(j, i)]).abs());
        }
    }
    worst
}

/// Build a chain from a row-stochastic kernel; the stationary law is computed.
pub fn build_chain(kernel: &DMatrix<f64>) -> Result<ReversibleChain> {
    let n = check_square(kernel)?;
    check_row_sums(kernel, ADMISSION_TOL)?;
    if !strongly_connected(n, |i, j| kernel[(i, j)] > 0.0) {
        return Err(Error::NotIrreducible(
            "support graph is not strongly connected".into(),
        ));
    }
    let pi = stationary_vector(kernel)?;
    let residual = detailed_balance_residual(kernel, &pi);
    if residual > ADMISSION_TOL {
        return Err(Error::NotReversible { residual });
    }
    ReversibleChain::certify(kernel, &pi)
}

/// Random walk on a weighted undirected graph: `Q_ij = w_ij / Σ_j w_ij`,
/// `π_i ∝ Σ_j w_ij`.
pub fn build_random_walk(weights: &DMatrix<f64>) -> Result<ReversibleChain> {
    let n = check_square(weights)?;
    let scale = weights.amax().max(1.0);
    for i in 0..n {
        for j in 0..n {
            let w = weights[(i, j)];
            if w < 0.0 {
                return Err(Error::NegativeWeight {
                    row: i,
                    col: j,
                    value: w,
                });
            }
            if (w - weights[(j, i)]).abs() > ADMISSION_TOL * scale {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    let degrees: Vec<f64> = weights.row_iter().map(|r| r.sum()).collect();
    if degrees.iter().any(|d| *d <= 0.0) || !strongly_connected(n, |i, j| weights[(i, j)] > 0.0) {
        return Err(Error::Disconnected);
    }
    let total: f64 = degrees.iter().sum();
    let pi = DVector::from_iterator(n, degrees.iter().map(|d| d / total));
    let kernel = DMatrix::from_fn(n, n, |i, j| weights[(i, j)] / degrees[i]);
    ReversibleChain::certify(&kernel, &pi)
}

/// Metropolis chain targeting `target` with a symmetric proposal.
pub fn build_metropolis(target: &[f64], proposal: &DMatrix<f64>) -> Result<ReversibleChain> {
    let n = check_square(proposal)?;
    if target.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: target.len(),
        });
    }
    if target.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite);
    }
    if let Some(i) = target.iter().position(|t| *t <= 0.0) {
        return Err(Error::ZeroTargetMass(i));
    }
    check_row_sums(proposal, ADMISSION_TOL)?;
    for i in 0..n {
        for j in (i + 1)..n {
            if (proposal[(i, j)] - proposal[(j, i)]).abs() > ADMISSION_TOL {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    if !strongly_connected(n, |i, j| proposal[(i, j)] > 0.0) {
        return Err(Error::NotIrreducible(
            "proposal support graph is not connected".into(),
        ));
    }
    let total: f64 = target.iter().sum();
    let pi = DVector::from_iterator(n, target.iter().map(|t| t / total));
    let mut kernel = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut moved = 0.0;
        for j in 0..n {
            if i != j {
                let q = proposal[(i, j)] * (pi[j] / pi[i]).min(1.0);
                kernel[(i, j)] = q;
                moved += q;
            }
        }
        kernel[(i, i)] = 1.0 - moved;
    }
    ReversibleChain::certify(&kernel, &pi)
}

/// Center `raw` under the stationary law of `chain`.
pub fn project_mean_zero(raw: &[f64], chain: &ReversibleChain) -> Result<Observable> {
    if raw.len() != chain.n_states() {
        return Err(Error::DimensionMismatch {
            expected: chain.n_states(),
            got: raw.len(),
        });
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let raw = DVector::from_column_slice(raw);
    let mean = chain.stationary().dot(&raw);
    Observable::new(raw.add_scalar(-mean), chain)
}

impl ReversibleChain {
    /// Re-derive `(Q, π)` from the symmetrized flux `diag(π) Q` and certify
    /// the result.
    fn certify(kernel: &DMatrix<f64>, pi: &DVector<f64>) -> Result<Self> {
        let n = kernel.nrows();
        let raw_flux = DMatrix::from_fn(n, n, |i, j| pi[i] * kernel[(i, j)]);
        let mut flux = (&raw_flux + raw_flux.transpose()) * 0.5;
        flux /= flux.sum();
        let stationary = DVector::from_iterator(n, flux.row_iter().map(|r| r.sum()));
        let kernel = DMatrix::from_fn(n, n, |i, j| flux[(i, j)] / stationary[i]);

        let chain = Self::assemble(kernel, stationary);
        let db = chain.detailed_balance_residual();
        if db > CERTIFY_TOL {
            return Err(Error::NotReversible { residual: db });
        }
        let rows = chain.row_sum_residual();
        if rows > CERTIFY_TOL {
            return Err(Error::NotStochastic(format!(
                "certified row-sum residual {rows:e}"
            )));
        }
        let stat = chain.stationarity_residual();
        if stat > CERTIFY_TOL {
            return Err(Error::NotIrreducible(format!(
                "certified stationarity residual {stat:e}"
            )));
        }
        Ok(chain)
    }

    fn assemble(kernel: DMatrix<f64>, stationary: DVector<f64>) -> Self {
        let n = kernel.nrows();
        let cumulate = |values: &mut dyn Iterator<Item = f64>| {
            let mut acc = 0.0;
            let mut out: Vec<f64> = values
                .map(|v| {
                    acc += v;
                    acc
                })
                .collect();
            if let Some(last) = out.last_mut() {
                *last = 1.0;
            }
            out
        };
        let mut cumulative = Vec::with_capacity(n * n);
        for i in 0..n {
            cumulative.extend(cumulate(&mut kernel.row(i).iter().copied()));
        }
        let cumulative_stationary = cumulate(&mut stationary.iter().copied());
        Self {
            kernel,
            stationary,
            cumulative,
            cumulative_stationary,
        }
    }

    pub fn n_states(&self) -> usize {
        self.stationary.len()
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn stationary(&self) -> &DVector<f64> {
        &self.stationary
    }

    /// `(Qv)(x) = Σ_y Q(x, y) v(y)`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.kernel * v
    }

    /// Inner product in `L²(π)`.
    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        self.stationary
            .iter()
            .zip(a.iter().zip(b.iter()))
            .map(|(p, (x, y))| p * x * y)
            .sum()
    }

    pub fn detailed_balance_residual(&self) -> f64 {
        detailed_balance_residual(&self.kernel, &self.stationary)
    }

    pub fn row_sum_residual(&self) -> f64 {
        self.kernel
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max_j |(πQ)_j - π_j|`.
    pub fn stationarity_residual(&self) -> f64 {
        let pq = self.kernel.tr_mul(&self.stationary);
        (pq - &self.stationary).amax()
    }

    /// Sample the next state from row `state` given a uniform draw in `[0, 1)`.
    pub fn next_state(&self, state: usize, u: f64) -> usize {
        let n = self.n_states();
        let row = &self.cumulative[state * n..(state + 1) * n];
        row.partition_point(|c| *c <= u).min(n - 1)
    }

    /// Sample a state from `π` given a uniform draw in `[0, 1)`.
    pub fn initial_state(&self, u: f64) -> usize {
        let n = self.n_states();
        self.cumulative_stationary
            .partition_point(|c| *c <= u)
            .min(n - 1)
    }

    /// Eigenvalues of `Q`, ascending, from the symmetrized kernel.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let (values, _) = crate::spectral::symmetric_eigen(self)?;
        Ok(values)
    }

    /// `1 - max |λ|` over all eigenvalues other than the top one.
    pub fn absolute_spectral_gap(&self) -> Result<f64> {
        let values = self.eigenvalues()?;
        let rest = &values[..values.len().saturating_sub(1)];
        Ok(1.0 - rest.iter().map(|v| v.abs()).fold(0.0, f64::max))
    }
}

impl Observable {
    /// Wrap `values`, requiring `Σ π_i f_i = 0` to `1e-12` relative to `max |f|`.
    pub fn new(values: DVector<f64>, chain: &ReversibleChain) -> Result<Self> {
        if values.len() != chain.n_states() {
            return Err(Error::DimensionMismatch {
                expected: chain.n_states(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mean = chain.stationary().dot(&values);
        if mean.abs() > CERTIFY_TOL * values.amax().max(1.0) {
            return Err(Error::NotCentered { mean });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, state: usize) -> f64 {
        self.values[state]
    }

    /// `E_π f²`.
    pub fn second_moment(&self, chain: &ReversibleChain) -> f64 {
        chain.inner(&self.values, &self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        matrix_from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn two_state_stationary_is_uniform() {
        let chain = build_chain(&m(&[&[0.75, 0.25], &[0.25, 0.75]])).unwrap();
        assert_abs_diff_eq!(chain.stationary()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(chain.stationary()[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn asymmetric_two_state_stationary() {
        // π = (q, p) / (p + q) for Q = [[1-p, p], [q, 1-q]].
        let chain = build_chain(&m(&[&[0.8, 0.2], &[0.6, 0.4]])).unwrap();
        assert_abs_diff_eq!(chain.stationary()[0], 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(chain.stationary()[1], 0.25, epsilon = 1e-14);
    }

    #[test]
    fn identity_is_not_irreducible() {
        let err = build_chain(&DMatrix::identity(3, 3)).unwrap_err();
        assert!(matches!(err, Error::NotIrreducible(_)), "{err:?}");
    }

    #[test]
    fn three_cycle_is_not_reversible() {
        let err =
            build_chain(&m(&[&[0.5, 0.5, 0.0], &[0.0, 0.5, 0.5], &[0.5, 0.0, 0.5]])).unwrap_err();
        assert!(matches!(err, Error::NotReversible { .. }), "{err:?}");
    }

    #[test]
    fn bad_row_sum_rejected() {
        let err = build_chain(&m(&[&[0.5, 0.4], &[0.5, 0.5]])).unwrap_err();
        assert!(matches!(err, Error::NotStochastic(_)));
        let err = build_chain(&m(&[&[1.1, -0.1], &[0.5, 0.5]])).unwrap_err();
        assert!(matches!(err, Error::NotStochastic(_)));
    }

    #[test]
    fn non_square_rejected() {
        let err = build_chain(&DMatrix::from_element(2, 3, 1.0 / 3.0)).unwrap_err();
        assert!(matches!(err, Error::NotSquare { rows: 2, cols: 3 }));
        assert!(matrix_from_rows(&[vec![1.0], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn complete_graph_walk() {
        let chain =
            build_random_walk(&m(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0]])).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(chain.stationary()[i], 1.0 / 3.0, epsilon = 1e-15);
            for j in 0..3 {
                let expected = if i == j { 0.0 } else { 0.5 };
                assert_abs_diff_eq!(chain.kernel()[(i, j)], expected, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn single_edge_is_flip_chain() {
        let chain = build_random_walk(&m(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert_eq!(chain.kernel(), &m(&[&[0.0, 1.0], &[1.0, 0.0]]));
        assert_abs_diff_eq!(chain.stationary()[0], 0.5);
    }

    #[test]
    fn star_graph_degree_normalization() {
        let chain = build_random_walk(&m(&[
            &[0.0, 1.0, 1.0, 1.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0],
        ]))
        .unwrap();
        let expected = [0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        for (p, e) in chain.stationary().iter().zip(expected) {
            assert_abs_diff_eq!(*p, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn random_walk_errors() {
        let err = build_random_walk(&m(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]]))
            .unwrap_err();
        assert_eq!(err, Error::Disconnected);
        let err = build_random_walk(&m(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]))
            .unwrap_err();
        assert_eq!(err, Error::Disconnected);
        let err = build_random_walk(&m(&[&[0.0, -1.0], &[-1.0, 0.0]])).unwrap_err();
        assert!(matches!(err, Error::NegativeWeight { .. }));
        let err = build_random_walk(&m(&[&[0.0, 1.0], &[2.0, 0.0]])).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
    }

    #[test]
    fn metropolis_uniform_target_keeps_proposal() {
        let proposal = m(&[&[0.2, 0.5, 0.3], &[0.5, 0.1, 0.4], &[0.3, 0.4, 0.3]]);
        let chain = build_metropolis(&[1.0 / 3.0; 3], &proposal).unwrap();
        for (a, b) in chain.kernel().iter().zip(proposal.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
    }

    #[test]
    fn metropolis_two_state() {
        let chain =
            build_metropolis(&[2.0 / 3.0, 1.0 / 3.0], &m(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        let expected = m(&[&[0.5, 0.5], &[1.0, 0.0]]);
        for (a, b) in chain.kernel().iter().zip(expected.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(chain.stationary()[0], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn metropolis_zero_target_mass() {
        let proposal = DMatrix::from_element(3, 3, 1.0 / 3.0);
        let err = build_metropolis(&[0.5, 0.5, 0.0], &proposal).unwrap_err();
        assert_eq!(err, Error::ZeroTargetMass(2));
    }

    #[test]
    fn projection_examples() {
        let chain = build_chain(&m(&[&[0.75, 0.25], &[0.25, 0.75]])).unwrap();
        let f = project_mean_zero(&[1.0, -1.0], &chain).unwrap();
        assert_eq!(f.values().as_slice(), &[1.0, -1.0]);
        let f = project_mean_zero(&[1.0, 0.0], &chain).unwrap();
        assert_eq!(f.values().as_slice(), &[0.5, -0.5]);

        let star = build_random_walk(&m(&[
            &[0.0, 1.0, 1.0, 1.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0],
        ]))
        .unwrap();
        let f = project_mean_zero(&[1.0; 4], &star).unwrap();
        assert!(f.values().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn uncentered_observable_rejected() {
        let chain = build_chain(&m(&[&[0.75, 0.25], &[0.25, 0.75]])).unwrap();
        let err = Observable::new(DVector::from_vec(vec![1.0, 0.0]), &chain).unwrap_err();
        assert!(matches!(err, Error::NotCentered { .. }));
    }

    #[test]
    fn next_state_respects_zero_entries() {
        let chain = build_random_walk(&m(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        for u in [0.0, 0.3, 0.999_999] {
            assert_eq!(chain.next_state(0, u), 1);
            assert_eq!(chain.next_state(1, u), 0);
        }
    }
}
