//! JSON chain definition files:
//! `{ "kind": "kernel"|"random_walk"|"metropolis", "matrix": [[...]], "target": [...], "observable": [...] }`.

use serde::{Deserialize, Serialize};

use crate::chain::{
    build_chain, build_metropolis, build_random_walk, matrix_from_rows, matrix_to_rows, Observable,
    ReversibleChain,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainKind {
    /// `matrix` is the transition kernel.
    Kernel,
    /// `matrix` holds symmetric edge weights.
    RandomWalk,
    /// `matrix` is a symmetric proposal; `target` is required.
    Metropolis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainFile {
    pub kind: ChainKind,
    pub matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<Vec<f64>>,
}

impl ChainFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("chain file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chain file serializes")
    }

    /// Describe `chain` by its kernel, with `f` as the observable.
    pub fn from_chain(chain: &ReversibleChain, f: Option<&Observable>) -> Self {
        Self {
            kind: ChainKind::Kernel,
            matrix: matrix_to_rows(chain.kernel()),
            target: None,
            observable: f.map(|f| f.values().iter().copied().collect()),
        }
    }

    pub fn build(&self) -> Result<ReversibleChain> {
        let matrix = matrix_from_rows(&self.matrix)?;
        match self.kind {
            ChainKind::Kernel => build_chain(&matrix),
            ChainKind::RandomWalk => build_random_walk(&matrix),
            ChainKind::Metropolis => {
                let target = self.target.as_deref().ok_or_else(|| {
                    Error::InvalidArgument("metropolis chain needs a \"target\"".into())
                })?;
                build_metropolis(target, &matrix)
            }
        }
    }
}
