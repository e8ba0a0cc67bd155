//! Spectral measure of an observable under a reversible kernel and the
//! asymptotic variance it determines.
//!
//! `Q` is self-adjoint on `L²(π)`, so `A = D^{1/2} Q D^{-1/2}` with
//! `D = diag(π)` is symmetric. With `A φ_k = λ_k φ_k` and
//! `ψ_k = D^{-1/2} φ_k`, the measure `ρ` of `f` is purely atomic:
//! `ρ = Σ_k ⟨f, ψ_k⟩²_π δ_{λ_k}` and `⟨Q^k f, f⟩_π = ∫ t^k ρ(dt)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::chain::{Observable, ReversibleChain};
use crate::error::{Error, Result};

/// Eigenvalues further than this outside `[-1, 1]` are a solver failure.
pub const CLAMP_TOL: f64 = 1e-10;
/// Atoms lighter than this are discarded.
pub const ATOM_DROP: f64 = 1e-14;
/// Eigenvalues closer than this are one point of the spectrum.
pub const MERGE_TOL: f64 = 1e-10;
/// An eigenvalue within this distance of 1 counts as the unit eigenvalue.
pub const UNIT_EIGEN_TOL: f64 = 1e-10;
/// Mass tolerated at the unit eigenvalue before it is treated as real.
pub const UNIT_MASS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub lambda: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    pub atoms: Vec<Atom>,
    pub total_mass: f64,
}

/// Eigenvalues (ascending, clamped to `[-1, 1]`) and orthonormal eigenvectors
/// of the symmetrized kernel.
pub fn symmetric_eigen(chain: &ReversibleChain) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = chain.n_states();
    let root: Vec<f64> = chain.stationary().iter().map(|p| p.sqrt()).collect();
    let q = chain.kernel();
    let a = DMatrix::from_fn(n, n, |i, j| root[i] * q[(i, j)] / root[j]);
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenFailure("QL iteration did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut values = Vec::with_capacity(n);
    for &i in &order {
        let v = eig.eigenvalues[i];
        if v.abs() > 1.0 + CLAMP_TOL {
            return Err(Error::EigenFailure(format!(
                "eigenvalue {v} outside [-1, 1]"
            )));
        }
        values.push(v.clamp(-1.0, 1.0));
    }
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

pub fn spectral_measure(chain: &ReversibleChain, f: &Observable) -> Result<SpectralMeasure> {
    if f.len() != chain.n_states() {
        return Err(Error::DimensionMismatch {
            expected: chain.n_states(),
            got: f.len(),
        });
    }
    let (values, vectors) = symmetric_eigen(chain)?;
    // ⟨f, ψ_k⟩_π = Σ_i √π_i f_i φ_k(i)
    let scaled = DVector::from_iterator(
        f.len(),
        chain
            .stationary()
            .iter()
            .zip(f.values().iter())
            .map(|(p, v)| p.sqrt() * v),
    );
    // eigenvalues are ascending; a repeated eigenvalue carries one atom
    let mut merged: Vec<Atom> = Vec::new();
    for (k, &lambda) in values.iter().enumerate() {
        let weight = vectors.column(k).dot(&scaled).powi(2);
        match merged.last_mut() {
            Some(last) if lambda - last.lambda <= MERGE_TOL => {
                let total = last.weight + weight;
                if total > 0.0 {
                    last.lambda = (last.lambda * last.weight + lambda * weight) / total;
                }
                last.weight = total;
            }
            _ => merged.push(Atom { lambda, weight }),
        }
    }
    let atoms = merged
        .into_iter()
        .filter(|a| a.weight >= ATOM_DROP)
        .filter(|a| !(a.lambda >= 1.0 - UNIT_EIGEN_TOL && a.weight <= UNIT_MASS_TOL))
        .collect();
    let rho = SpectralMeasure::new(atoms)?;
    let second_moment = f.second_moment(chain);
    if (rho.total_mass - second_moment).abs() > 1e-10 * second_moment.max(1.0) {
        return Err(Error::EigenFailure(format!(
            "spectral mass {} does not match E f² = {second_moment}",
            rho.total_mass
        )));
    }
    Ok(rho)
}

impl SpectralMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            if !(a.lambda.abs() <= 1.0) || !(a.weight >= 0.0) || !a.weight.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "atom ({}, {}) outside [-1, 1] x [0, inf)",
                    a.lambda, a.weight
                )));
            }
        }
        let total_mass = atoms.iter().map(|a| a.weight).sum();
        Ok(Self { atoms, total_mass })
    }

    /// A measure from `(λ, w)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(lambda, weight)| Atom { lambda, weight })
                .collect(),
        )
    }

    fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.weight * g(a.lambda)).sum()
    }

    fn unit_mass(&self) -> Option<f64> {
        let w: f64 = self
            .atoms
            .iter()
            .filter(|a| a.lambda >= 1.0 - UNIT_EIGEN_TOL)
            .map(|a| a.weight)
            .sum();
        (w > 0.0).then_some(w)
    }

    /// `∫ t^k ρ(dt)`, which is `E(X_0 X_k)`.
    pub fn moment(&self, k: u32) -> f64 {
        self.integrate(|t| powu(t, k as u64))
    }

    /// `∫ ρ(dt) / (1 - t)`; finite iff `Var(S_n)/n` converges.
    pub fn finiteness_integral(&self) -> Result<f64> {
        if let Some(weight) = self.unit_mass() {
            return Err(Error::FiniteVarianceViolated { weight });
        }
        Ok(self.integrate(|t| 1.0 / (1.0 - t)))
    }

    /// `σ² = ∫ (1 + t)/(1 - t) ρ(dt)`.
    pub fn asymptotic_variance(&self) -> Result<f64> {
        if let Some(weight) = self.unit_mass() {
            return Err(Error::FiniteVarianceViolated { weight });
        }
        Ok(self.integrate(|t| (1.0 + t) / (1.0 - t)))
    }

    /// `γ_k = E(X_0 X_k)` for `k = 0..count`.
    pub fn autocovariances(&self, count: usize) -> Vec<f64> {
        let mut gamma = vec![0.0; count];
        for a in &self.atoms {
            let mut p = 1.0;
            for g in gamma.iter_mut() {
                *g += a.weight * p;
                p *= a.lambda;
            }
        }
        gamma
    }

    /// `Var(S_n)/n` from the integrated bracket
    /// `(1/n)[(t+⋯+t^n)² + Σ_{k=0}^{n-1}((1+⋯+t^k)² − (t+⋯+t^{k+1})²)]`.
    pub fn variance_integrand_check(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        Ok(self.integrate(|t| bracket_integrand(t, n)))
    }

    /// Closed form of
    /// `A_{n,p} = E(E(S_p − S_{n−1}|𝓕_1) − E(S_p − S_{n−1}|𝓕_0))²`:
    /// `∫ t^{2n−2}(1 − t^{p−n+1})²(1 + t)/(1 − t) ρ(dt)`.
    pub fn cauchy_quantity(&self, n: usize, p: usize) -> Result<f64> {
        check_cauchy_indices(n, p)?;
        if let Some(weight) = self.unit_mass() {
            return Err(Error::FiniteVarianceViolated { weight });
        }
        Ok(self.integrate(|t| {
            powu(t, 2 * n as u64 - 2) * (1.0 - powu(t, (p - n + 1) as u64)).powi(2) * (1.0 + t)
                / (1.0 - t)
        }))
    }

    /// `8 ∫ t^{2n−2}/(1 − t) ρ(dt)`, the uniform-in-`p` bound on `A_{n,p}`.
    pub fn cauchy_bound(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if let Some(weight) = self.unit_mass() {
            return Err(Error::FiniteVarianceViolated { weight });
        }
        Ok(8.0 * self.integrate(|t| powu(t, 2 * n as u64 - 2) / (1.0 - t)))
    }

    /// `Var(B_{n,k}) = n^{-2} ∫ (t + ⋯ + t^{n−k})² ρ(dt)`.
    pub fn boundary_variance(&self, n: usize, k: usize) -> Result<f64> {
        if n == 0 || k > n {
            return Err(Error::IndexOutOfRange {
                index: k,
                reason: format!("need k <= n with n >= 1 (n = {n})"),
            });
        }
        let terms = (n - k) as u64;
        let nf = n as f64;
        Ok(self.integrate(|t| geometric_tail(t, terms).powi(2)) / (nf * nf))
    }

    /// `(2/n) ∫ ρ(dt)/(1 − t)`, the uniform-in-`k` bound on `Var(B_{n,k})`.
    pub fn boundary_bound(&self, n: usize) -> Result<f64> {
        Ok(2.0 / n as f64 * self.finiteness_integral()?)
    }

    /// `max_k 1/(1 − λ_k)` over the atoms.
    pub fn max_resolvent(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| 1.0 / (1.0 - a.lambda))
            .fold(0.0, f64::max)
    }
}

fn check_cauchy_indices(n: usize, p: usize) -> Result<()> {
    if n == 0 || p <= n {
        return Err(Error::InvalidArgument(format!(
            "need p > n >= 1, got n = {n}, p = {p}"
        )));
    }
    Ok(())
}

fn powu(t: f64, k: u64) -> f64 {
    // powi takes i32; exponents here stay far below that.
    t.powi(k as i32)
}

/// `t + t² + ⋯ + t^m`.
fn geometric_tail(t: f64, m: u64) -> f64 {
    if t.abs() < 0.999 {
        return t * (1.0 - powu(t, m)) / (1.0 - t);
    }
    let mut acc = 0.0;
    let mut p = 1.0;
    for _ in 0..m {
        p *= t;
        acc += p;
    }
    acc
}

fn bracket_integrand(t: f64, n: usize) -> f64 {
    // head = 1 + t + ⋯ + t^k, shifted = t + ⋯ + t^{k+1}
    let mut head = 0.0;
    let mut shifted = 0.0;
    let mut power = 1.0;
    let mut sum = 0.0;
    for _ in 0..n {
        head += power;
        power *= t;
        shifted += power;
        sum += head * head - shifted * shifted;
    }
    // after the loop `shifted` is t + ⋯ + t^n
    (shifted * shifted + sum) / n as f64
}

/// `E_π(f · Q^k f)` by repeated application of the kernel.
pub fn direct_autocovariance(chain: &ReversibleChain, f: &Observable, k: u32) -> f64 {
    let mut v = f.values().clone();
    for _ in 0..k {
        v = chain.apply(&v);
    }
    chain.inner(f.values(), &v)
}

/// `σ²` from the spectral integral.
pub fn asymptotic_variance_spectral(rho: &SpectralMeasure) -> Result<f64> {
    rho.asymptotic_variance()
}

/// Solution `g` of `(I − Q) g = f` with `E_π g = 0`, together with `Qg`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution {
    pub g: DVector<f64>,
    pub qg: DVector<f64>,
    pub residual: f64,
}

/// Solve the Poisson equation on the mean-zero subspace by deflating the
/// constant eigendirection: `(I − Q + 1 πᵀ) g = f`.
pub fn solve_poisson(chain: &ReversibleChain, f: &Observable) -> Result<PoissonSolution> {
    let n = chain.n_states();
    let q = chain.kernel();
    let pi = chain.stationary();
    let system = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - q[(i, j)] + pi[j]
    });
    let lu = system.clone().lu();
    let mut g = lu.solve(f.values()).ok_or(Error::SingularPoisson {
        residual: f64::INFINITY,
    })?;
    // one step of iterative refinement
    let r = f.values() - &system * &g;
    if let Some(delta) = lu.solve(&r) {
        g += delta;
    }
    let qg = chain.apply(&g);
    let residual = (&g - &qg - f.values()).amax();
    if !(residual <= 1e-9) {
        return Err(Error::SingularPoisson { residual });
    }
    Ok(PoissonSolution { g, qg, residual })
}

/// `σ² = 2⟨g, f⟩_π − ⟨f, f⟩_π` with `g` the Poisson solution.
pub fn asymptotic_variance_poisson(chain: &ReversibleChain, f: &Observable) -> Result<f64> {
    let sol = solve_poisson(chain, f)?;
    Ok(2.0 * chain.inner(&sol.g, f.values()) - f.second_moment(chain))
}

/// `Var(S_n)/n` for `n = 1..=n_max`, from
/// `Var(S_n) = n γ_0 + 2 Σ_{k=1}^{n−1} (n − k) γ_k`.
pub fn asymptotic_variance_series(rho: &SpectralMeasure, n_max: usize) -> Result<Vec<f64>> {
    Ok(variance_series_parts(rho, n_max)?.0)
}

/// `(Var(S_n)/n for n = 1..=n_max, σ² extrapolated from the series)`.
///
/// `Var(S_n) − Var(S_{n−1}) = γ_0 + 2 Σ_{k=1}^{n−1} γ_k`; the extrapolated
/// value averages the last two increments, which is exact for atoms at −1
/// and converges like `λ^{n_max}` otherwise.
fn variance_series_parts(rho: &SpectralMeasure, n_max: usize) -> Result<(Vec<f64>, f64)> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let gamma = rho.autocovariances(n_max);
    let mut out = Vec::with_capacity(n_max);
    let mut var = 0.0;
    let mut increment = 0.0;
    let mut prev_increment = 0.0;
    let mut tail = 0.0; // Σ_{k=1}^{n−1} γ_k
    for n in 1..=n_max {
        if n > 1 {
            tail += gamma[n - 1];
        }
        prev_increment = increment;
        increment = gamma[0] + 2.0 * tail;
        var += increment;
        out.push(var / n as f64);
    }
    let limit = if n_max >= 3 {
        0.5 * (increment + prev_increment)
    } else {
        out[n_max - 1]
    };
    Ok((out, limit))
}

/// `A_{n,p}` by matrix algebra: with `h = Σ_{i=n}^p Q^{i−1} f`,
/// `A_{n,p} = Σ_x π(x) Σ_y Q(x,y) (h(y) − (Qh)(x))²`.
pub fn cauchy_quantity_direct(
    chain: &ReversibleChain,
    f: &Observable,
    n: usize,
    p: usize,
) -> Result<f64> {
    check_cauchy_indices(n, p)?;
    let mut power = f.values().clone();
    for _ in 1..n {
        power = chain.apply(&power);
    }
    let mut h = DVector::zeros(f.len());
    for _ in n..=p {
        h += &power;
        power = chain.apply(&power);
    }
    Ok(one_step_l2(chain, &h))
}

/// `E(h(ξ_1) − (Qh)(ξ_0))²` under the stationary two-step law.
pub fn one_step_l2(chain: &ReversibleChain, h: &DVector<f64>) -> f64 {
    let qh = chain.apply(h);
    let q = chain.kernel();
    let pi = chain.stationary();
    let n = chain.n_states();
    let mut total = 0.0;
    for x in 0..n {
        let mut row = 0.0;
        for y in 0..n {
            row += q[(x, y)] * (h[y] - qh[x]).powi(2);
        }
        total += pi[x] * row;
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub total_mass: f64,
    pub sigma2_spectral: f64,
    pub sigma2_poisson: f64,
    pub sigma2_series: f64,
    pub finiteness_integral: f64,
    /// `Var(S_n)/n` for `n = 1..=n_max`.
    pub var_sn_over_n: Vec<f64>,
}

impl VarianceReport {
    /// `|σ²_spectral − (2 ∫ρ/(1−t) − ρ([−1,1]))|`.
    pub fn identity_residual(&self) -> f64 {
        (self.sigma2_spectral - (2.0 * self.finiteness_integral - self.total_mass)).abs()
    }

    /// Largest pairwise gap between the three σ² estimates.
    pub fn max_pairwise_gap(&self) -> f64 {
        let s = [
            self.sigma2_spectral,
            self.sigma2_poisson,
            self.sigma2_series,
        ];
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in (i + 1)..3 {
                worst = worst.max((s[i] - s[j]).abs());
            }
        }
        worst
    }
}

pub fn variance_report(
    chain: &ReversibleChain,
    f: &Observable,
    n_max: usize,
) -> Result<VarianceReport> {
    let rho = spectral_measure(chain, f)?;
    variance_report_with(chain, f, &rho, n_max)
}

pub fn variance_report_with(
    chain: &ReversibleChain,
    f: &Observable,
    rho: &SpectralMeasure,
    n_max: usize,
) -> Result<VarianceReport> {
    let sigma2_spectral = rho.asymptotic_variance()?;
    let finiteness_integral = rho.finiteness_integral()?;
    let sigma2_poisson = asymptotic_variance_poisson(chain, f)?;
    let (var_sn_over_n, sigma2_series) = variance_series_parts(rho, n_max)?;
    Ok(VarianceReport {
        total_mass: rho.total_mass,
        sigma2_spectral,
        sigma2_poisson,
        sigma2_series,
        finiteness_integral,
        var_sn_over_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    fn single(lambda: f64, weight: f64) -> SpectralMeasure {
        SpectralMeasure::from_pairs(&[(lambda, weight)]).unwrap()
    }

    #[test]
    fn two_state_single_atom() {
        let (chain, f) = fixtures::two_state(0.25, 0.25);
        let rho = spectral_measure(&chain, &f).unwrap();
        assert_eq!(rho.atoms.len(), 1);
        assert_abs_diff_eq!(rho.atoms[0].lambda, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(rho.atoms[0].weight, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn iid_single_atom_at_zero() {
        let (chain, f) = fixtures::iid(&[0.2, 0.5, 0.3], &[1.0, -2.0, 3.0]);
        let rho = spectral_measure(&chain, &f).unwrap();
        assert_eq!(rho.atoms.len(), 1);
        assert_abs_diff_eq!(rho.atoms[0].lambda, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            rho.atoms[0].weight,
            f.second_moment(&chain),
            epsilon = 1e-13
        );
    }

    #[test]
    fn flip_single_atom_at_minus_one() {
        let (chain, f) = fixtures::flip();
        let rho = spectral_measure(&chain, &f).unwrap();
        assert_eq!(rho.atoms.len(), 1);
        assert_eq!(rho.atoms[0].lambda, -1.0);
        assert_abs_diff_eq!(rho.atoms[0].weight, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn moment_examples() {
        assert_eq!(single(0.5, 1.0).moment(3), 0.125);
        let rho = SpectralMeasure::from_pairs(&[(0.3, 0.2), (-0.4, 0.7)]).unwrap();
        assert_abs_diff_eq!(rho.moment(0), rho.total_mass, epsilon = 1e-15);
        for k in 1..5 {
            assert_eq!(single(0.0, 2.5).moment(k), 0.0);
        }
    }

    #[test]
    fn spectral_variance_examples() {
        assert_abs_diff_eq!(single(0.5, 1.0).asymptotic_variance().unwrap(), 3.0);
        assert_abs_diff_eq!(single(0.0, 1.7).asymptotic_variance().unwrap(), 1.7);
        assert_eq!(single(-1.0, 1.0).asymptotic_variance().unwrap(), 0.0);
        let err = single(1.0, 0.5).asymptotic_variance().unwrap_err();
        assert!(matches!(err, Error::FiniteVarianceViolated { .. }));
    }

    #[test]
    fn poisson_examples() {
        let (chain, f) = fixtures::two_state(0.25, 0.25);
        let sol = solve_poisson(&chain, &f).unwrap();
        assert_abs_diff_eq!(sol.g[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sol.g[1], -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            asymptotic_variance_poisson(&chain, &f).unwrap(),
            3.0,
            epsilon = 1e-13
        );

        let (chain, f) = fixtures::iid(&[0.2, 0.5, 0.3], &[1.0, -2.0, 3.0]);
        let sol = solve_poisson(&chain, &f).unwrap();
        for (g, v) in sol.g.iter().zip(f.values().iter()) {
            assert_abs_diff_eq!(*g, *v, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(
            asymptotic_variance_poisson(&chain, &f).unwrap(),
            f.second_moment(&chain),
            epsilon = 1e-12
        );

        let (chain, f) = fixtures::flip();
        let sol = solve_poisson(&chain, &f).unwrap();
        assert_abs_diff_eq!(sol.g[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            asymptotic_variance_poisson(&chain, &f).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn series_examples() {
        let s = asymptotic_variance_series(&single(0.5, 1.0), 2).unwrap();
        assert_abs_diff_eq!(s[1], 1.5, epsilon = 1e-15);
        let s = asymptotic_variance_series(&single(0.0, 1.0), 50).unwrap();
        assert!(s.iter().all(|v| (*v - 1.0).abs() < 1e-15));
        let s = asymptotic_variance_series(&single(0.5, 1.0), 1000).unwrap();
        for w in s.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for (i, v) in s.iter().enumerate() {
            let n = (i + 1) as f64;
            // exact gap: 2 λ (1 − λ^n) / ((1 − λ)² n) = 4 (1 − 0.5^n) / n
            let gap = 4.0 * (1.0 - 0.5f64.powi(i as i32 + 1)) / n;
            assert_abs_diff_eq!(3.0 - v, gap, epsilon = 1e-12);
        }
    }

    #[test]
    fn integrand_examples() {
        assert_abs_diff_eq!(single(0.0, 1.0).variance_integrand_check(3).unwrap(), 1.0);
        assert_abs_diff_eq!(single(0.5, 1.0).variance_integrand_check(2).unwrap(), 1.5);
        assert_abs_diff_eq!(single(-1.0, 1.0).variance_integrand_check(2).unwrap(), 0.0);
    }

    #[test]
    fn integrand_matches_series() {
        let rho = SpectralMeasure::from_pairs(&[(0.7, 0.3), (-0.6, 0.5), (0.1, 0.2), (-1.0, 0.1)])
            .unwrap();
        let series = asymptotic_variance_series(&rho, 200).unwrap();
        for n in 1..=200 {
            assert_abs_diff_eq!(
                rho.variance_integrand_check(n).unwrap(),
                series[n - 1],
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn cauchy_examples() {
        assert_abs_diff_eq!(single(0.5, 1.0).cauchy_quantity(2, 3).unwrap(), 0.421875);
        assert_eq!(single(0.0, 1.0).cauchy_quantity(2, 5).unwrap(), 0.0);
        let rho = single(0.5, 1.0);
        for n in 1..20 {
            let bound = rho.cauchy_bound(n).unwrap();
            assert_abs_diff_eq!(
                bound,
                8.0 * 0.5f64.powi(2 * n as i32 - 2) / 0.5,
                epsilon = 1e-12
            );
            for p in (n + 1)..40 {
                assert!(rho.cauchy_quantity(n, p).unwrap() <= bound);
            }
        }
        assert!(rho.cauchy_quantity(3, 3).is_err());
    }

    #[test]
    fn cauchy_direct_matches_closed_form() {
        let (chain, f) = fixtures::metropolis_three();
        let rho = spectral_measure(&chain, &f).unwrap();
        for n in 1..8 {
            for p in (n + 1)..10 {
                assert_abs_diff_eq!(
                    rho.cauchy_quantity(n, p).unwrap(),
                    cauchy_quantity_direct(&chain, &f, n, p).unwrap(),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn boundary_variance_example() {
        assert_abs_diff_eq!(
            single(0.5, 1.0).boundary_variance(4, 2).unwrap(),
            0.03515625
        );
        assert_eq!(single(0.0, 1.0).boundary_variance(7, 3).unwrap(), 0.0);
        assert_eq!(single(0.5, 1.0).boundary_variance(4, 4).unwrap(), 0.0);
        assert!(single(0.5, 1.0).boundary_variance(4, 5).is_err());
    }

    #[test]
    fn report_three_way() {
        let (chain, f) = fixtures::two_state(0.25, 0.25);
        let report = variance_report(&chain, &f, 10_000).unwrap();
        assert_abs_diff_eq!(report.sigma2_spectral, 3.0, epsilon = 1e-12);
        assert!(report.max_pairwise_gap() < 1e-10);
        assert!(report.identity_residual() < 1e-12);
        assert_eq!(report.var_sn_over_n.len(), 10_000);

        let (chain, f) = fixtures::flip();
        let report = variance_report(&chain, &f, 11).unwrap();
        assert_abs_diff_eq!(report.sigma2_series, 0.0, epsilon = 1e-14);
    }
}
