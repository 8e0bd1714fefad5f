//! Topologies, combination matrices and the structural assumptions on them:
//! primitivity of the composite matrix, its Perron vector, and the joint
//! condition on combination weights and step sizes under which the
//! small-step-size bias vanishes.

mod combination;
mod topology;

pub use combination::{build_a, build_c, CombinationMatrix, CombinationRule, StochasticKind, STOCHASTIC_TOL};
pub use topology::{generate_topology, Topology};

use serde::Serialize;
use thiserror::Error;

use crate::numerics::{self, DenseMatrix, DenseVector, NumericsError};

/// Default tolerance for declaring the step-size/combination condition met.
pub const ASSUMPTION3_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("cannot build a connected graph with n={n} and average degree {target}: {reason}")]
    DegreeRequest {
        n: usize,
        target: f64,
        reason: &'static str,
    },
    #[error("invalid combination matrix: {0}")]
    InvalidCombination(String),
    #[error("rule `{rule}` cannot build matrix {target}")]
    UnsupportedRule { rule: &'static str, target: &'static str },
    #[error("Assumption 2 violated: {0}")]
    NotPrimitive(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("step-size design impossible: A2·theta has zero entry at node {node}")]
    ZeroWeight { node: usize },
    #[error("edge list parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Perron vector of the composite `A₁A₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronData {
    pub theta: DenseVector,
    pub composite: DenseMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Assumption3Report {
    pub satisfied: bool,
    #[serde(rename = "c0")]
    pub c0_estimate: f64,
    pub max_deviation: f64,
}

/// Primitivity of a nonnegative square matrix, decided on its zero pattern:
/// `p` is primitive iff `p^K > 0` for the Wielandt bound `K = N² − 2N + 2`.
pub fn check_primitive(p: &DenseMatrix) -> Result<bool, NetworkError> {
    let n = p.nrows();
    if n != p.ncols() {
        return Err(NetworkError::Dimension(format!(
            "primitivity needs a square matrix, got {}x{}",
            n,
            p.ncols()
        )));
    }
    if let Some(v) = p.iter().find(|v| **v < 0.0) {
        return Err(NetworkError::InvalidCombination(format!(
            "negative entry {v} in primitivity check"
        )));
    }
    if n == 0 {
        return Ok(false);
    }
    let pattern = BoolMatrix::from_fn(n, |i, j| p[(i, j)] > 0.0);
    let exponent = (n - 1) * (n - 1) + 1;
    Ok(pattern.pow(exponent).all())
}

#[derive(Clone)]
struct BoolMatrix {
    n: usize,
    bits: Vec<bool>,
}

impl BoolMatrix {
    fn from_fn(n: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut bits = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                bits[i * n + j] = f(i, j);
            }
        }
        Self { n, bits }
    }

    fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| i == j)
    }

    fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut bits = vec![false; n * n];
        for i in 0..n {
            for k in 0..n {
                if self.bits[i * n + k] {
                    for j in 0..n {
                        bits[i * n + j] |= other.bits[k * n + j];
                    }
                }
            }
        }
        Self { n, bits }
    }

    fn pow(&self, mut e: usize) -> Self {
        let mut result = Self::identity(self.n);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    fn all(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }
}

/// Perron vector `θ` of `A₁A₂`: `A₁A₂θ = θ`, `θᵀ𝟙 = 1`.
pub fn perron_theta(a1: &CombinationMatrix, a2: &CombinationMatrix) -> Result<PerronData, NetworkError> {
    if a1.n() != a2.n() {
        return Err(NetworkError::Dimension(format!(
            "A1 is {0}x{0}, A2 is {1}x{1}",
            a1.n(),
            a2.n()
        )));
    }
    if !a1.kind().is_left() || !a2.kind().is_left() {
        return Err(NetworkError::NotPrimitive(
            "A1 and A2 must both be left-stochastic".into(),
        ));
    }
    let composite = a1.matrix() * a2.matrix();
    if !check_primitive(&composite)? {
        return Err(NetworkError::NotPrimitive(
            "the composite A1·A2 is not primitive".into(),
        ));
    }
    let (_, theta) = numerics::dominant_eigpair(&composite, numerics::DEFAULT_TOL, numerics::DEFAULT_MAX_ITER)?;
    let theta = refine_perron(&composite, &theta);
    let theta = theta.map(|v| v.max(0.0));
    let theta = &theta / theta.sum();
    Ok(PerronData { theta, composite })
}

/// One direct solve of `(P − I)θ = 0` with one row replaced by `𝟙ᵀθ = 1`,
/// which removes the power iteration's residual. Falls back to `start` if
/// the bordered system is singular in floating point.
fn refine_perron(p: &DenseMatrix, start: &DenseVector) -> DenseVector {
    let n = p.nrows();
    let mut system = p - DenseMatrix::identity(n, n);
    system.row_mut(n - 1).fill(1.0);
    let mut rhs = DenseVector::zeros(n);
    rhs[n - 1] = 1.0;
    match numerics::solve_linear(&system, &rhs) {
        Ok(theta) if theta.iter().all(|v| v.is_finite()) && (&theta - start / start.sum()).amax() < 1e-6 => theta,
        _ => start.clone(),
    }
}

/// Check `θᵀA₂ᵀΩ₀Cᵀ = c₀𝟙ᵀ`. `c₀` is estimated as the mean of the row
/// vector and the report carries the largest deviation from it.
pub fn check_assumption3(
    theta: &DenseVector,
    a2: &CombinationMatrix,
    omega0: &DenseVector,
    c: &CombinationMatrix,
    tol: f64,
) -> Result<Assumption3Report, NetworkError> {
    let n = theta.len();
    if a2.n() != n || c.n() != n || omega0.len() != n {
        return Err(NetworkError::Dimension(format!(
            "theta has {n} entries, A2 is {0}x{0}, C is {1}x{1}, omega0 has {2}",
            a2.n(),
            c.n(),
            omega0.len()
        )));
    }
    // v = (C Ω₀ A₂ θ)ᵀ
    let z = weighted_perron(theta, a2, omega0);
    let v = c.matrix() * z;
    let c0 = v.mean();
    let max_deviation = v.iter().map(|x| (x - c0).abs()).fold(0.0, f64::max);
    Ok(Assumption3Report {
        satisfied: max_deviation <= tol,
        c0_estimate: c0,
        max_deviation,
    })
}

/// `z = Ω₀A₂θ`.
pub fn weighted_perron(theta: &DenseVector, a2: &CombinationMatrix, omega0: &DenseVector) -> DenseVector {
    (a2.matrix() * theta).component_mul(omega0)
}

/// Step sizes that make `Ω₀A₂θ` constant, so the condition holds with
/// `C = I`: `μₖ = μ_max · min_j(uⱼ) / uₖ` with `u = A₂θ`.
pub fn design_step_sizes_for_assumption3(
    a1: &CombinationMatrix,
    a2: &CombinationMatrix,
    mu_max: f64,
) -> Result<DenseVector, NetworkError> {
    if !(mu_max > 0.0) {
        return Err(NetworkError::InvalidCombination(format!(
            "mu_max must be positive, got {mu_max}"
        )));
    }
    let perron = perron_theta(a1, a2)?;
    let u = a2.matrix() * &perron.theta;
    if let Some(node) = u.iter().position(|&v| v <= 0.0) {
        return Err(NetworkError::ZeroWeight { node });
    }
    let u_min = u.min();
    Ok(u.map(|uk| mu_max * u_min / uk))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn custom_left(entries: &[f64]) -> CombinationMatrix {
        let n = (entries.len() as f64).sqrt() as usize;
        CombinationMatrix::new(
            DenseMatrix::from_row_slice(n, n, entries),
            StochasticKind::LeftStochastic,
            CombinationRule::Custom,
        )
        .unwrap()
    }

    #[test]
    fn primitive_examples() {
        assert!(!check_primitive(&DenseMatrix::identity(3, 3)).unwrap());
        assert!(check_primitive(&DenseMatrix::identity(1, 1)).unwrap());
        assert!(check_primitive(&DenseMatrix::from_row_slice(2, 2, &[0.7, 0.4, 0.3, 0.6])).unwrap());
        assert!(!check_primitive(&DenseMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.])).unwrap());
        // Wielandt matrix: primitive with exponent exactly N² − 2N + 2
        let w = DenseMatrix::from_row_slice(3, 3, &[0., 1., 0., 0., 0., 1., 1., 1., 0.]);
        assert!(check_primitive(&w).unwrap());
        assert!(check_primitive(&DenseMatrix::from_row_slice(2, 2, &[1., -1., 0., 1.])).is_err());
    }

    #[test]
    fn primitivity_transpose_invariant() {
        for seed in 0..5 {
            let t = generate_topology(12, 2.5, seed).unwrap();
            let a = build_a(&t, CombinationRule::Averaging).unwrap();
            let p = a.matrix() * a.matrix();
            assert_eq!(check_primitive(&p).unwrap(), check_primitive(&p.transpose()).unwrap());
            assert!(check_primitive(&p).unwrap());
        }
    }

    #[test]
    fn theta_examples() {
        let t = generate_topology(10, 3.0, 4).unwrap();
        let m = build_a(&t, CombinationRule::Metropolis).unwrap();
        let p = perron_theta(&CombinationMatrix::identity(10), &m).unwrap();
        for v in p.theta.iter() {
            assert!((v - 0.1).abs() < 1e-10);
        }

        let a = custom_left(&[0.7, 0.4, 0.3, 0.6]);
        let p = perron_theta(&a, &CombinationMatrix::identity(2)).unwrap();
        assert!((p.theta[0] - 4. / 7.).abs() < 1e-10);
        assert!((p.theta[1] - 3. / 7.).abs() < 1e-10);
        let back = &p.composite * &p.theta;
        assert!((back - &p.theta).amax() < 1e-8);
    }

    #[test]
    fn theta_requires_primitive() {
        let err = perron_theta(&CombinationMatrix::identity(3), &CombinationMatrix::identity(3)).unwrap_err();
        assert!(err.to_string().contains("Assumption 2"));
    }

    #[test]
    fn assumption3_examples() {
        let n = 8;
        let t = generate_topology(n, 3.0, 2).unwrap();
        let m = build_a(&t, CombinationRule::Metropolis).unwrap();
        let c = build_c(&t, CombinationRule::RelativeDegree).unwrap();
        let eye = CombinationMatrix::identity(n);
        let theta = perron_theta(&eye, &m).unwrap().theta;
        let ones = DenseVector::from_element(n, 1.0);
        let r = check_assumption3(&theta, &m, &ones, &c, ASSUMPTION3_TOL).unwrap();
        assert!(r.satisfied);
        assert!((r.c0_estimate - 1.0 / n as f64).abs() < 1e-10);

        let a = custom_left(&[0.7, 0.4, 0.3, 0.6]);
        let eye2 = CombinationMatrix::identity(2);
        let theta = perron_theta(&a, &eye2).unwrap().theta;
        let r = check_assumption3(
            &theta,
            &eye2,
            &DenseVector::from_element(2, 1.0),
            &eye2,
            ASSUMPTION3_TOL,
        )
        .unwrap();
        assert!(!r.satisfied);
        assert!((r.c0_estimate - 0.5).abs() < 1e-10);
        assert!((r.max_deviation - 1.0 / 14.0).abs() < 1e-10);

        // steps proportional to 1/theta with C = I
        let omega0 = theta.map(|t| (3.0 / 7.0) / t);
        let r = check_assumption3(&theta, &eye2, &omega0, &eye2, ASSUMPTION3_TOL).unwrap();
        assert!(r.satisfied);
    }

    #[test]
    fn designed_steps() {
        let a = custom_left(&[0.7, 0.4, 0.3, 0.6]);
        let eye2 = CombinationMatrix::identity(2);
        let mu = design_step_sizes_for_assumption3(&a, &eye2, 0.01).unwrap();
        assert!((mu[0] - 0.0075).abs() < 1e-12);
        assert!((mu[1] - 0.01).abs() < 1e-12);

        for seed in 0..5 {
            let t = generate_topology(15, 3.0, seed).unwrap();
            let a = build_a(&t, CombinationRule::RelativeDegree).unwrap();
            let eye = CombinationMatrix::identity(15);
            let mu = design_step_sizes_for_assumption3(&eye, &a, 0.02).unwrap();
            assert!((mu.max() - 0.02).abs() < 1e-15);
            let theta = perron_theta(&eye, &a).unwrap().theta;
            let r = check_assumption3(&theta, &a, &(mu / 0.02), &eye, 1e-10).unwrap();
            assert!(r.satisfied, "{r:?}");

            let m = build_a(&t, CombinationRule::Metropolis).unwrap();
            let mu = design_step_sizes_for_assumption3(&eye, &m, 0.02).unwrap();
            assert!(mu.iter().all(|v| (v - 0.02).abs() < 1e-10));
        }
    }

    #[test]
    fn design_rejects_nonpositive_mu() {
        let eye = CombinationMatrix::identity(2);
        let a = custom_left(&[0.7, 0.4, 0.3, 0.6]);
        assert!(design_step_sizes_for_assumption3(&a, &eye, 0.0).is_err());
    }
}
