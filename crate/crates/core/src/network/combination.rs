use serde::{Deserialize, Serialize};

use super::{NetworkError, Topology};
use crate::numerics::DenseMatrix;

/// Column/row sums must match one within this tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StochasticKind {
    /// Columns sum to one (`Aᵀ𝟙 = 𝟙`).
    LeftStochastic,
    /// Rows sum to one (`C𝟙 = 𝟙`).
    RightStochastic,
    DoublyStochastic,
}

impl StochasticKind {
    pub fn is_left(self) -> bool {
        matches!(self, Self::LeftStochastic | Self::DoublyStochastic)
    }

    pub fn is_right(self) -> bool {
        matches!(self, Self::RightStochastic | Self::DoublyStochastic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinationRule {
    Averaging,
    RelativeDegree,
    Metropolis,
    Identity,
    /// Hand-supplied weights.
    Custom,
}

impl CombinationRule {
    pub fn name(self) -> &'static str {
        match self {
            Self::Averaging => "averaging",
            Self::RelativeDegree => "relative_degree",
            Self::Metropolis => "metropolis",
            Self::Identity => "identity",
            Self::Custom => "custom",
        }
    }
}

/// Nonnegative combination weights with a declared stochasticity.
///
/// Entry `(l, k)` is the weight node `k` gives to node `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationMatrix {
    matrix: DenseMatrix,
    kind: StochasticKind,
    rule: CombinationRule,
}

impl CombinationMatrix {
    /// Validate nonnegativity and the declared column/row sums.
    pub fn new(matrix: DenseMatrix, kind: StochasticKind, rule: CombinationRule) -> Result<Self, NetworkError> {
        let n = matrix.nrows();
        if n != matrix.ncols() || n == 0 {
            return Err(NetworkError::InvalidCombination(format!(
                "combination matrix must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if let Some(v) = matrix.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(NetworkError::InvalidCombination(format!(
                "entry {v} is negative or non-finite"
            )));
        }
        if kind.is_left() {
            for (k, col) in matrix.column_iter().enumerate() {
                let s: f64 = col.sum();
                if (s - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(NetworkError::InvalidCombination(format!(
                        "column {k} sums to {s}, not 1"
                    )));
                }
            }
        }
        if kind.is_right() {
            for (l, row) in matrix.row_iter().enumerate() {
                let s: f64 = row.sum();
                if (s - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(NetworkError::InvalidCombination(format!("row {l} sums to {s}, not 1")));
                }
            }
        }
        Ok(Self { matrix, kind, rule })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DenseMatrix::identity(n, n),
            kind: StochasticKind::DoublyStochastic,
            rule: CombinationRule::Identity,
        }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> StochasticKind {
        self.kind
    }

    pub fn rule(&self) -> CombinationRule {
        self.rule
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Whether every nonzero weight connects neighbors in `topology`.
    pub fn respects(&self, topology: &Topology) -> bool {
        let n = self.n();
        if topology.n_nodes() != n {
            return false;
        }
        (0..n).all(|l| (0..n).all(|k| self.matrix[(l, k)] == 0.0 || topology.is_neighbor(l, k)))
    }
}

/// Left-stochastic combination matrix by the averaging, relative-degree or
/// Metropolis rule. Metropolis weights are symmetric and hence doubly
/// stochastic.
pub fn build_a(topology: &Topology, rule: CombinationRule) -> Result<CombinationMatrix, NetworkError> {
    let n = topology.n_nodes();
    let deg: Vec<f64> = (0..n).map(|k| topology.closed_degree(k) as f64).collect();
    let mut a = DenseMatrix::zeros(n, n);
    let kind = match rule {
        CombinationRule::Averaging => {
            for k in 0..n {
                let mut off = 0.0;
                for l in topology.neighborhood(k).filter(|&l| l != k) {
                    a[(l, k)] = 1.0 / deg[k];
                    off += a[(l, k)];
                }
                a[(k, k)] = 1.0 - off;
            }
            StochasticKind::LeftStochastic
        }
        CombinationRule::RelativeDegree => {
            for k in 0..n {
                let total: f64 = topology.neighborhood(k).map(|m| deg[m]).sum();
                for l in topology.neighborhood(k) {
                    a[(l, k)] = deg[l] / total;
                }
            }
            StochasticKind::LeftStochastic
        }
        CombinationRule::Metropolis => {
            for k in 0..n {
                let mut off = 0.0;
                for l in topology.neighborhood(k).filter(|&l| l != k) {
                    a[(l, k)] = 1.0 / deg[l].max(deg[k]);
                    off += a[(l, k)];
                }
                a[(k, k)] = 1.0 - off;
            }
            StochasticKind::DoublyStochastic
        }
        CombinationRule::Identity | CombinationRule::Custom => {
            return Err(NetworkError::UnsupportedRule {
                rule: rule.name(),
                target: "A",
            })
        }
    };
    CombinationMatrix::new(a, kind, rule)
}

/// Right-stochastic `C`, built as the transpose of the left-stochastic matrix
/// the rule produces. The identity rule gives `I_N`.
pub fn build_c(topology: &Topology, rule: CombinationRule) -> Result<CombinationMatrix, NetworkError> {
    match rule {
        CombinationRule::Identity => Ok(CombinationMatrix::identity(topology.n_nodes())),
        CombinationRule::Averaging | CombinationRule::RelativeDegree => {
            let left = build_a(topology, rule)?;
            CombinationMatrix::new(left.matrix.transpose(), StochasticKind::RightStochastic, rule)
        }
        CombinationRule::Metropolis | CombinationRule::Custom => Err(NetworkError::UnsupportedRule {
            rule: rule.name(),
            target: "C",
        }),
    }
}
