//! Numerical laboratory for additive functionals of finite reversible
//! Markov chains: spectral measures, asymptotic variance, the
//! forward-backward martingale decomposition and Monte Carlo checks of the
//! CLT and its functional version.

// negated float comparisons below are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod decomposition;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod limits;
pub mod sampling;
pub mod spectral;

pub use chain::{
    build_chain, build_metropolis, build_random_walk, project_mean_zero, Observable,
    ReversibleChain,
};
pub use decomposition::{
    boundary_term, decompose_trajectory, forward_difference, l2_convergence_table,
    limit_difference, reversed_difference, Decomposer, DecompositionTerms,
};
pub use error::{Error, Result};
pub use io::{ChainFile, ChainKind};
pub use limits::{
    clt_test, fclt_profile, maximal_inequality_check, uniform_integrability_diagnostic,
    LimitReport, MaximalMethod, MaximalMode, ReportKind,
};
pub use sampling::{sample_trajectory, Trajectory};
pub use spectral::{
    asymptotic_variance_poisson, asymptotic_variance_series, asymptotic_variance_spectral,
    spectral_measure, variance_report, variance_report_with, SpectralMeasure, VarianceReport,
};
