//! Monte Carlo and exhaustive checks of the limit theorems.
//!
//! Replica `r` of every experiment runs on ChaCha stream `r` of the master
//! seed and results are gathered in replica order, so reports are
//! bit-reproducible regardless of thread scheduling.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::chain::{Observable, ReversibleChain};
use crate::error::{Error, Result};
use crate::sampling::PathWalker;
use crate::spectral::{one_step_l2, solve_poisson, spectral_measure};

/// Below this the asymptotic variance counts as zero.
pub const DEGENERATE_SIGMA2: f64 = 1e-8;
/// KS acceptance threshold at `m = 10^4` replicas.
pub const KS_THRESHOLD: f64 = 0.02;
/// Monte Carlo agreement is judged at this many standard errors.
pub const SE_MULTIPLIER: f64 = 3.0;
/// Largest path count the exhaustive mode will enumerate.
pub const EXHAUSTIVE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    Clt,
    Fclt,
    Maximal,
    UiDiagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub t: f64,
    pub index: usize,
    pub variance: f64,
    pub expected: f64,
    pub std_error: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariancePoint {
    pub s: f64,
    pub t: f64,
    pub covariance: f64,
    pub expected: f64,
    pub std_error: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalMargin {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_std_error: f64,
    pub rhs_std_error: f64,
    /// `4 n E D²` (one-sided) or `8 n E D²` (two-sided).
    pub crude_bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub c: f64,
    /// `sup_n E[Y_n I(Y_n > c)]` with `Y_n = max_{j ≤ n} S_j² / n`.
    pub tail: f64,
    /// The estimate for each entry of `n_list`.
    pub per_n: Vec<f64>,
    pub std_error: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub kind: ReportKind,
    pub n: usize,
    pub m: usize,
    pub sigma2_used: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_statistic: Option<f64>,
    /// DKW half-width at 99% confidence for `m` samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dkw_band: Option<f64>,
    pub variance_profile: Vec<ProfilePoint>,
    pub covariance_profile: Vec<CovariancePoint>,
    pub maximal_margins: Vec<MaximalMargin>,
    pub tail_profile: Vec<TailPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub exact: bool,
    pub tolerances: BTreeMap<String, f64>,
    pub passed: bool,
    /// `S_n / (σ √n)` per replica (CLT only); written to CSV, not JSON.
    #[serde(skip)]
    pub standardized: Vec<f64>,
}

impl LimitReport {
    fn empty(kind: ReportKind, n: usize, m: usize) -> Self {
        Self {
            kind,
            n,
            m,
            sigma2_used: f64::NAN,
            ks_statistic: None,
            dkw_band: None,
            variance_profile: Vec::new(),
            covariance_profile: Vec::new(),
            maximal_margins: Vec::new(),
            tail_profile: Vec::new(),
            seed: None,
            exact: false,
            tolerances: BTreeMap::new(),
            passed: true,
            standardized: Vec::new(),
        }
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `sup_x |F_m(x) − F(x)|` for the empirical CDF of `samples`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let fx = cdf(x);
            ((i + 1) as f64 / m - fx).max(fx - i as f64 / m)
        })
        .fold(0.0, f64::max)
}

/// Dvoretzky–Kiefer–Wolfowitz half-width: `P(D_m > ε) ≤ α` for
/// `ε = sqrt(ln(2/α) / (2m))`.
pub fn dkw_band(m: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * m as f64)).sqrt()
}

fn nondegenerate_sigma2(chain: &ReversibleChain, f: &Observable) -> Result<f64> {
    let sigma2 = spectral_measure(chain, f)?.asymptotic_variance()?;
    if !(sigma2 > DEGENERATE_SIGMA2) {
        return Err(Error::DegenerateVariance(sigma2));
    }
    Ok(sigma2)
}

fn check_sizes(n: usize, m: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidLength(n));
    }
    if m == 0 {
        return Err(Error::InvalidReplicas(m));
    }
    Ok(())
}

/// Partial sums `S_j` at each of the sorted `indices` (all `≤ n`).
fn recorded_sums(
    chain: &ReversibleChain,
    f: &Observable,
    n: usize,
    seed: u64,
    stream: u64,
    indices: &[usize],
) -> Vec<f64> {
    let mut walker = PathWalker::new(chain, seed, stream);
    let mut out = Vec::with_capacity(indices.len());
    let mut next = indices.iter().peekable();
    let mut s = 0.0;
    for j in 0..=n {
        if j > 0 {
            s += f.at(walker.step());
        }
        while next.next_if(|&&i| i == j).is_some() {
            out.push(s);
        }
    }
    out
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample covariance and the standard error of that estimate.
fn covariance_with_se(a: &[f64], b: &[f64]) -> (f64, f64) {
    let m = a.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let products: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let cov = products.iter().sum::<f64>() / (m - 1.0);
    let mp = mean(&products);
    let spread = products.iter().map(|p| (p - mp).powi(2)).sum::<f64>() / (m - 1.0);
    (cov, (spread / m).sqrt())
}

fn mean_with_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mu = mean(values);
    if values.len() < 2 {
        return (mu, 0.0);
    }
    let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (m - 1.0);
    (mu, (var / m).sqrt())
}

/// Kolmogorov–Smirnov test of `S_n / (σ √n)` against `N(0, 1)` over `m`
/// independent stationary replicas.
pub fn clt_test(
    chain: &ReversibleChain,
    f: &Observable,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<LimitReport> {
    check_sizes(n, m)?;
    let sigma2 = nondegenerate_sigma2(chain, f)?;
    let scale = (sigma2 * n as f64).sqrt();
    let standardized: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|r| recorded_sums(chain, f, n, seed, r as u64, &[n])[0] / scale)
        .collect();
    let ks = ks_statistic(&standardized, normal_cdf);

    let mut report = LimitReport::empty(ReportKind::Clt, n, m);
    report.sigma2_used = sigma2;
    report.ks_statistic = Some(ks);
    report.dkw_band = Some(dkw_band(m, 0.01));
    report.seed = Some(seed);
    report
        .tolerances
        .insert("ks_threshold".into(), KS_THRESHOLD);
    report.passed = ks <= KS_THRESHOLD;
    report.standardized = standardized;
    Ok(report)
}

/// Empirical variance and covariance profile of `W_n(t) = S_{[nt]} / √n`.
pub fn fclt_profile(
    chain: &ReversibleChain,
    f: &Observable,
    n: usize,
    m: usize,
    grid: &[f64],
    seed: u64,
) -> Result<LimitReport> {
    check_sizes(n, m)?;
    if m < 2 {
        return Err(Error::InvalidReplicas(m));
    }
    if let Some(t) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::InvalidArgument(format!(
            "grid point {t} outside [0, 1]"
        )));
    }
    let sigma2 = nondegenerate_sigma2(chain, f)?;
    let indices: Vec<usize> = grid
        .iter()
        .map(|t| (n as f64 * t).floor() as usize)
        .collect();
    let mut sorted = indices.clone();
    sorted.sort_unstable();
    sorted.dedup();

    let root_n = (n as f64).sqrt();
    let samples: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|r| {
            recorded_sums(chain, f, n, seed, r as u64, &sorted)
                .into_iter()
                .map(|s| s / root_n)
                .collect()
        })
        .collect();
    let column = |idx: usize| -> Vec<f64> {
        let pos = sorted.binary_search(&idx).expect("recorded index");
        samples.iter().map(|row| row[pos]).collect()
    };

    let mut report = LimitReport::empty(ReportKind::Fclt, n, m);
    report.sigma2_used = sigma2;
    report.seed = Some(seed);
    report
        .tolerances
        .insert("std_error_multiplier".into(), SE_MULTIPLIER);

    let columns: Vec<Vec<f64>> = indices.iter().map(|&i| column(i)).collect();
    for (gi, &t) in grid.iter().enumerate() {
        let (variance, std_error) = covariance_with_se(&columns[gi], &columns[gi]);
        let expected = sigma2 * t;
        let within = (variance - expected).abs() <= SE_MULTIPLIER * std_error;
        report.variance_profile.push(ProfilePoint {
            t,
            index: indices[gi],
            variance,
            expected,
            std_error,
            within,
        });
    }
    for (i, &s) in grid.iter().enumerate() {
        for (j, &t) in grid.iter().enumerate() {
            if !(s < t) || s == 0.0 {
                continue;
            }
            let (covariance, std_error) = covariance_with_se(&columns[i], &columns[j]);
            let expected = sigma2 * s.min(t);
            let within = (covariance - expected).abs() <= SE_MULTIPLIER * std_error;
            report.covariance_profile.push(CovariancePoint {
                s,
                t,
                covariance,
                expected,
                std_error,
                within,
            });
        }
    }
    report.passed = report.variance_profile.iter().all(|p| p.within)
        && report.covariance_profile.iter().all(|p| p.within);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaximalMode {
    /// Partial sums of `D_k = g(ξ_k) − (Qg)(ξ_{k−1})`, `k = 1..n`.
    Forward,
    /// Partial sums of `D̃_k = g(ξ_k) − (Qg)(ξ_{k+1})` accumulated in
    /// reversed time, `k = n−1, …, 0`, where they form a martingale.
    Reversed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaximalMethod {
    Exhaustive,
    MonteCarlo { replicas: usize, seed: u64 },
}

/// Per-path contributions to both sides of the maximal inequality, one
/// `(lhs, rhs)` pair per `λ`.
fn maximal_terms(diffs: &[f64], lambdas: &[f64], two_sided: bool) -> Vec<(f64, f64)> {
    lambdas
        .iter()
        .map(|&lambda| {
            let (mut s, mut top, mut bottom) = (0.0f64, 0.0f64, 0.0f64);
            let mut rhs = 0.0;
            for d in diffs {
                s += d;
                top = top.max(s);
                bottom = bottom.max(-s);
                if top > lambda {
                    rhs += d * d;
                }
                if two_sided && bottom > lambda {
                    rhs += d * d;
                }
            }
            let reach = if two_sided { top.max(bottom) } else { top };
            ((reach - lambda).max(0.0).powi(2), 4.0 * rhs)
        })
        .collect()
}

struct DifferenceMap {
    g: Vec<f64>,
    qg: Vec<f64>,
    mode: MaximalMode,
}

impl DifferenceMap {
    fn fill(&self, states: &[usize], out: &mut Vec<f64>) {
        out.clear();
        let n = states.len() - 1;
        match self.mode {
            MaximalMode::Forward => {
                out.extend((1..=n).map(|k| self.g[states[k]] - self.qg[states[k - 1]]))
            }
            MaximalMode::Reversed => out.extend(
                (0..n)
                    .rev()
                    .map(|k| self.g[states[k]] - self.qg[states[k + 1]]),
            ),
        }
    }
}

/// Both sides of `E((S_n^* − λ)_+²) ≤ 4 Σ_k E(D_k² I(S_k^* > λ))` for the
/// limit martingale differences; with `two_sided`, `S^*` becomes
/// `max_k |S_k|` and the right side picks up the mirrored indicator (at most
/// `8 n E D²`).
pub fn maximal_inequality_check(
    chain: &ReversibleChain,
    f: &Observable,
    n: usize,
    lambdas: &[f64],
    mode: MaximalMode,
    method: MaximalMethod,
    two_sided: bool,
) -> Result<LimitReport> {
    if n == 0 {
        return Err(Error::InvalidLength(n));
    }
    let poisson = solve_poisson(chain, f)?;
    let second_moment = one_step_l2(chain, &poisson.g);
    let map = DifferenceMap {
        g: poisson.g.iter().copied().collect(),
        qg: poisson.qg.iter().copied().collect(),
        mode,
    };
    let factor = if two_sided { 8.0 } else { 4.0 };
    let crude_bound = factor * n as f64 * second_moment;

    let mut report;
    match method {
        MaximalMethod::Exhaustive => {
            let states = chain.n_states();
            let paths = (states as f64).powi(n as i32 + 1);
            if paths > EXHAUSTIVE_LIMIT as f64 {
                return Err(Error::ExhaustiveTooLarge {
                    paths,
                    limit: EXHAUSTIVE_LIMIT,
                });
            }
            let q = chain.kernel();
            let pi = chain.stationary();
            let mut sums = vec![(0.0, 0.0); lambdas.len()];
            let mut path = vec![0usize; n + 1];
            let mut diffs = Vec::with_capacity(n);
            loop {
                let mut prob = pi[path[0]];
                for w in path.windows(2) {
                    prob *= q[(w[0], w[1])];
                }
                if prob > 0.0 {
                    map.fill(&path, &mut diffs);
                    for (acc, (l, r)) in sums
                        .iter_mut()
                        .zip(maximal_terms(&diffs, lambdas, two_sided))
                    {
                        acc.0 += prob * l;
                        acc.1 += prob * r;
                    }
                }
                // odometer increment over {0..states}^{n+1}
                let mut pos = 0;
                while pos <= n {
                    path[pos] += 1;
                    if path[pos] < states {
                        break;
                    }
                    path[pos] = 0;
                    pos += 1;
                }
                if pos > n {
                    break;
                }
            }
            report = LimitReport::empty(ReportKind::Maximal, n, 0);
            report.exact = true;
            for (&lambda, (lhs, rhs)) in lambdas.iter().zip(sums) {
                report.maximal_margins.push(MaximalMargin {
                    lambda,
                    lhs,
                    rhs,
                    lhs_std_error: 0.0,
                    rhs_std_error: 0.0,
                    crude_bound,
                    holds: lhs <= rhs,
                });
            }
        }
        MaximalMethod::MonteCarlo { replicas, seed } => {
            if replicas == 0 {
                return Err(Error::InvalidReplicas(replicas));
            }
            let per_replica: Vec<Vec<(f64, f64)>> = (0..replicas)
                .into_par_iter()
                .map(|r| {
                    let mut walker = PathWalker::new(chain, seed, r as u64);
                    let mut states = Vec::with_capacity(n + 1);
                    states.push(walker.state());
                    states.extend((0..n).map(|_| walker.step()));
                    let mut diffs = Vec::with_capacity(n);
                    map.fill(&states, &mut diffs);
                    maximal_terms(&diffs, lambdas, two_sided)
                })
                .collect();
            report = LimitReport::empty(ReportKind::Maximal, n, replicas);
            report.seed = Some(seed);
            report
                .tolerances
                .insert("std_error_multiplier".into(), SE_MULTIPLIER);
            for (li, &lambda) in lambdas.iter().enumerate() {
                let lhs_samples: Vec<f64> = per_replica.iter().map(|v| v[li].0).collect();
                let rhs_samples: Vec<f64> = per_replica.iter().map(|v| v[li].1).collect();
                let (lhs, lhs_se) = mean_with_se(&lhs_samples);
                let (rhs, rhs_se) = mean_with_se(&rhs_samples);
                report.maximal_margins.push(MaximalMargin {
                    lambda,
                    lhs,
                    rhs,
                    lhs_std_error: lhs_se,
                    rhs_std_error: rhs_se,
                    crude_bound,
                    holds: lhs <= rhs + SE_MULTIPLIER * (lhs_se + rhs_se),
                });
            }
        }
    }
    report.sigma2_used = 2.0 * chain.inner(&poisson.g, f.values()) - f.second_moment(chain);
    report.tolerances.insert("factor".into(), factor);
    report.passed = report.maximal_margins.iter().all(|m| m.holds);
    Ok(report)
}

/// Tail expectations `E[Y_n I(Y_n > c)]` of `Y_n = max_{1≤j≤n} S_j² / n`,
/// reported as the supremum over `n_list` for each threshold `c`.
///
/// A diagnostic: the report passes when the tail is nonincreasing in `c`.
pub fn uniform_integrability_diagnostic(
    chain: &ReversibleChain,
    f: &Observable,
    n_list: &[usize],
    thresholds: &[f64],
    m: usize,
    seed: u64,
) -> Result<LimitReport> {
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::InvalidArgument(
            "n_list must hold positive lengths".into(),
        ));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n_list must be increasing".into()));
    }
    if m == 0 {
        return Err(Error::InvalidReplicas(m));
    }
    let mut sorted_c = thresholds.to_vec();
    sorted_c.sort_by(f64::total_cmp);

    // replicas for n_list[i] use streams i * 2^32 + r
    let maxima: Vec<Vec<f64>> = n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            (0..m)
                .into_par_iter()
                .map(|r| {
                    let mut walker = PathWalker::new(chain, seed, ((i as u64) << 32) | r as u64);
                    let (mut s, mut top) = (0.0f64, 0.0f64);
                    for _ in 0..n {
                        s += f.at(walker.step());
                        top = top.max(s * s);
                    }
                    top / n as f64
                })
                .collect()
        })
        .collect();

    let mut report = LimitReport::empty(ReportKind::UiDiagnostic, *n_list.last().unwrap(), m);
    report.seed = Some(seed);
    report.sigma2_used = spectral_measure(chain, f)
        .and_then(|rho| rho.asymptotic_variance())
        .unwrap_or(f64::NAN);
    for &c in &sorted_c {
        let (per_n, std_error): (Vec<f64>, Vec<f64>) = maxima
            .iter()
            .map(|ys| {
                let tails: Vec<f64> = ys.iter().map(|&y| if y > c { y } else { 0.0 }).collect();
                mean_with_se(&tails)
            })
            .unzip();
        let tail = per_n.iter().copied().fold(0.0, f64::max);
        report.tail_profile.push(TailPoint {
            c,
            tail,
            per_n,
            std_error,
        });
    }
    report.passed = report
        .tail_profile
        .windows(2)
        .all(|w| w[1].tail <= w[0].tail);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        // midpoints of m equal-probability cells give D = 1/(2m)
        let m = 1000;
        let samples: Vec<f64> = (0..m)
            .map(|i| statrs_quantile((i as f64 + 0.5) / m as f64))
            .collect();
        assert_abs_diff_eq!(
            ks_statistic(&samples, normal_cdf),
            0.5 / m as f64,
            epsilon = 1e-9
        );
    }

    fn statrs_quantile(p: f64) -> f64 {
        use statrs::distribution::{ContinuousCDF, Normal};
        Normal::standard().inverse_cdf(p)
    }

    #[test]
    fn ks_handles_ties() {
        let samples = vec![0.0; 10];
        assert_abs_diff_eq!(ks_statistic(&samples, normal_cdf), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn dkw_value() {
        assert_abs_diff_eq!(dkw_band(10_000, 0.01), 0.016_276, epsilon = 1e-6);
    }

    #[test]
    fn clt_errors() {
        let (chain, f) = fixtures::flip();
        assert!(matches!(
            clt_test(&chain, &f, 100, 100, 1).unwrap_err(),
            Error::DegenerateVariance(_)
        ));
        let (chain, f) = fixtures::two_state(0.25, 0.25);
        assert_eq!(
            clt_test(&chain, &f, 100, 0, 1).unwrap_err(),
            Error::InvalidReplicas(0)
        );
        assert_eq!(
            clt_test(&chain, &f, 0, 10, 1).unwrap_err(),
            Error::InvalidLength(0)
        );
    }

    #[test]
    fn clt_is_reproducible() {
        let (chain, f) = fixtures::metropolis_three();
        let a = clt_test(&chain, &f, 200, 500, 9).unwrap();
        let b = clt_test(&chain, &f, 200, 500, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.standardized.len(), 500);
    }

    #[test]
    fn fclt_zero_time_is_exact() {
        let (chain, f) = fixtures::two_state(0.25, 0.25);
        let r = fclt_profile(&chain, &f, 100, 200, &[0.0, 0.5, 1.0], 3).unwrap();
        assert_eq!(r.variance_profile[0].variance, 0.0);
        assert_eq!(r.variance_profile[0].index, 0);
        assert!(r.variance_profile[0].within);
        assert!(fclt_profile(&chain, &f, 100, 200, &[1.5], 3).is_err());
    }

    #[test]
    fn maximal_lambda_large_vanishes() {
        let (chain, f) = fixtures::metropolis_three();
        let r = maximal_inequality_check(
            &chain,
            &f,
            4,
            &[1e6],
            MaximalMode::Forward,
            MaximalMethod::Exhaustive,
            false,
        )
        .unwrap();
        assert_eq!(r.maximal_margins[0].lhs, 0.0);
        assert_eq!(r.maximal_margins[0].rhs, 0.0);
    }

    #[test]
    fn maximal_iid_by_hand_enumeration() {
        // i.i.d. ±1 steps: D_k = X_k; enumerate the 2^3 sign patterns.
        let (chain, f) = fixtures::iid(&[0.5, 0.5], &[1.0, -1.0]);
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for bits in 0..8u32 {
            let xs: Vec<f64> = (0..3)
                .map(|i| if bits >> i & 1 == 0 { 1.0 } else { -1.0 })
                .collect();
            let (mut s, mut top) = (0.0f64, 0.0f64);
            for x in &xs {
                s += x;
                top = top.max(s);
                if top > 0.0 {
                    rhs += 4.0 * x * x / 8.0;
                }
            }
            lhs += top * top / 8.0;
        }
        let r = maximal_inequality_check(
            &chain,
            &f,
            3,
            &[0.0],
            MaximalMode::Forward,
            MaximalMethod::Exhaustive,
            false,
        )
        .unwrap();
        assert!(r.exact);
        assert_abs_diff_eq!(r.maximal_margins[0].lhs, lhs, epsilon = 1e-12);
        assert_abs_diff_eq!(r.maximal_margins[0].rhs, rhs, epsilon = 1e-12);
        assert!(r.maximal_margins[0].rhs <= r.maximal_margins[0].crude_bound + 1e-12);
        assert!(r.passed);
    }

    #[test]
    fn exhaustive_size_limit() {
        let (chain, f) = fixtures::lazy_star();
        let err = maximal_inequality_check(
            &chain,
            &f,
            10,
            &[0.0],
            MaximalMode::Forward,
            MaximalMethod::Exhaustive,
            false,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ExhaustiveTooLarge { .. }));
    }

    #[test]
    fn monte_carlo_maximal_agrees_with_exhaustive() {
        let (chain, f) = fixtures::holding_cycle();
        for mode in [MaximalMode::Forward, MaximalMode::Reversed] {
            let exact = maximal_inequality_check(
                &chain,
                &f,
                5,
                &[0.0, 1.0],
                mode,
                MaximalMethod::Exhaustive,
                false,
            )
            .unwrap();
            let mc = maximal_inequality_check(
                &chain,
                &f,
                5,
                &[0.0, 1.0],
                mode,
                MaximalMethod::MonteCarlo {
                    replicas: 20_000,
                    seed: 5,
                },
                false,
            )
            .unwrap();
            assert!(mc.passed);
            for (e, m) in exact.maximal_margins.iter().zip(&mc.maximal_margins) {
                assert!((e.lhs - m.lhs).abs() <= 4.0 * m.lhs_std_error + 1e-12);
                assert!((e.rhs - m.rhs).abs() <= 4.0 * m.rhs_std_error + 1e-12);
            }
        }
    }

    #[test]
    fn ui_single_step_matches_exact_tail() {
        let (chain, f) = fixtures::metropolis_three();
        let thresholds = [0.0, 0.2, 0.5, 1.5];
        let r = uniform_integrability_diagnostic(&chain, &f, &[1], &thresholds, 20_000, 8).unwrap();
        for p in &r.tail_profile {
            let exact: f64 = (0..3)
                .map(|i| {
                    let y = f.at(i).powi(2);
                    if y > p.c {
                        chain.stationary()[i] * y
                    } else {
                        0.0
                    }
                })
                .sum();
            assert!(
                (p.tail - exact).abs() <= 4.0 * p.std_error[0] + 1e-12,
                "{p:?} vs {exact}"
            );
        }
        assert!(r.passed);
    }

    #[test]
    fn ui_flip_chain_bounded() {
        let (chain, f) = fixtures::flip();
        let n = 50;
        let r = uniform_integrability_diagnostic(&chain, &f, &[n], &[1.0 / n as f64, 0.5], 100, 1)
            .unwrap();
        for p in &r.tail_profile {
            assert_eq!(p.tail, 0.0);
        }
    }
}
