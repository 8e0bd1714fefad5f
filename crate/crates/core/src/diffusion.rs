//! The general diffusion recursion (combine with `A₁`, adapt with `C`-weighted
//! gradients, combine with `A₂`) and its ATC/CTA special cases.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costs::{self, CostEnsemble, CostError, CostModel};
use crate::network::CombinationMatrix;
use crate::numerics::{DenseMatrix, DenseVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiffusionError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("step size bound violated at node {node}: step size {mu:e} is not below the bound {bound:e}")]
    StepSizeBound { node: usize, mu: f64, bound: f64 },
    #[error("iteration diverged: non-finite estimate at node {node}, iteration {iteration}")]
    Divergence { node: usize, iteration: usize },
    #[error(transparent)]
    Cost(#[from] CostError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Adapt then combine: `A₁ = I`, `A₂ = A`.
    Atc,
    /// Combine then adapt: `A₁ = A`, `A₂ = I`.
    Cta,
    General,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Self::Atc => "atc",
            Self::Cta => "cta",
            Self::General => "general",
        }
    }
}

pub fn preset_atc(a: &CombinationMatrix) -> (CombinationMatrix, CombinationMatrix) {
    (CombinationMatrix::identity(a.n()), a.clone())
}

pub fn preset_cta(a: &CombinationMatrix) -> (CombinationMatrix, CombinationMatrix) {
    (a.clone(), CombinationMatrix::identity(a.n()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionConfig {
    pub a1: CombinationMatrix,
    pub a2: CombinationMatrix,
    pub c: CombinationMatrix,
    /// Diagonal of `Ω`.
    pub step_sizes: DenseVector,
    pub strategy: Strategy,
}

impl DiffusionConfig {
    /// Checks stochasticity kinds, sizes and step-size positivity. The
    /// per-node step-size bound depends on the costs and is checked by
    /// [`DiffusionConfig::validate`].
    pub fn new(
        a1: CombinationMatrix,
        a2: CombinationMatrix,
        c: CombinationMatrix,
        step_sizes: DenseVector,
        strategy: Strategy,
    ) -> Result<Self, DiffusionError> {
        let n = a1.n();
        if a2.n() != n || c.n() != n || step_sizes.len() != n {
            return Err(DiffusionError::Dimension(format!(
                "A1 {n}x{n}, A2 {0}x{0}, C {1}x{1}, {2} step sizes",
                a2.n(),
                c.n(),
                step_sizes.len()
            )));
        }
        if !a1.kind().is_left() || !a2.kind().is_left() {
            return Err(DiffusionError::InvalidConfig(
                "A1 and A2 must be left-stochastic".into(),
            ));
        }
        if !c.kind().is_right() {
            return Err(DiffusionError::InvalidConfig("C must be right-stochastic".into()));
        }
        if let Some(k) = step_sizes.iter().position(|&mu| !(mu > 0.0 && mu.is_finite())) {
            return Err(DiffusionError::InvalidConfig(format!(
                "step size at node {k} must be positive, got {}",
                step_sizes[k]
            )));
        }
        Ok(Self {
            a1,
            a2,
            c,
            step_sizes,
            strategy,
        })
    }

    pub fn atc(a: &CombinationMatrix, c: CombinationMatrix, step_sizes: DenseVector) -> Result<Self, DiffusionError> {
        let (a1, a2) = preset_atc(a);
        Self::new(a1, a2, c, step_sizes, Strategy::Atc)
    }

    pub fn cta(a: &CombinationMatrix, c: CombinationMatrix, step_sizes: DenseVector) -> Result<Self, DiffusionError> {
        let (a1, a2) = preset_cta(a);
        Self::new(a1, a2, c, step_sizes, Strategy::Cta)
    }

    pub fn n_nodes(&self) -> usize {
        self.a1.n()
    }

    pub fn mu_max(&self) -> f64 {
        self.step_sizes.max()
    }

    /// Normalized step sizes `Ω₀ = Ω / μ_max`.
    pub fn omega0(&self) -> DenseVector {
        &self.step_sizes / self.mu_max()
    }

    /// Same `Ω₀`, new largest step size.
    pub fn with_mu_max(&self, mu_max: f64) -> Result<Self, DiffusionError> {
        let steps = self.omega0() * mu_max;
        Self::new(self.a1.clone(), self.a2.clone(), self.c.clone(), steps, self.strategy)
    }

    /// Check Assumption 1 and the per-node step-size bound.
    pub fn validate(&self, ensemble: &CostEnsemble) -> Result<(), DiffusionError> {
        if ensemble.n_nodes() != self.n_nodes() {
            return Err(DiffusionError::Dimension(format!(
                "config has {} nodes, ensemble has {}",
                self.n_nodes(),
                ensemble.n_nodes()
            )));
        }
        let report = costs::check_assumption1(&self.c, ensemble)?;
        for k in 0..self.n_nodes() {
            if !(report.weighted_min[k] > 0.0) {
                return Err(CostError::WeightedCurvature {
                    node: k,
                    value: report.weighted_min[k],
                }
                .into());
            }
            let bound = report.step_bound(k);
            if !(self.step_sizes[k] < bound) {
                return Err(DiffusionError::StepSizeBound {
                    node: k,
                    mu: self.step_sizes[k],
                    bound,
                });
            }
        }
        Ok(())
    }
}

/// Per-node estimates, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub iterate: DenseMatrix,
    pub iteration: usize,
}

impl NetworkState {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            iterate: DenseMatrix::zeros(n, m),
            iteration: 0,
        }
    }

    pub fn node(&self, k: usize) -> DenseVector {
        self.iterate.row(k).transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointResult {
    /// `w_{k,∞}`, one row per node.
    pub w_infinity: DenseMatrix,
    pub iterations_used: usize,
    pub converged: bool,
    /// Largest `‖w_{k,i} − w_{k,i−1}‖ / (1 + ‖w_{k,i}‖)` at the last iteration.
    pub final_update_norm: f64,
}

/// One synchronous iteration of the recursion, evaluated literally: every
/// node combines with `A₁`, takes a `C`-weighted gradient step using its
/// neighbors' gradients at its own intermediate estimate, then combines with
/// `A₂`. All nodes read the previous iterate only.
pub fn step(
    state: &NetworkState,
    config: &DiffusionConfig,
    ensemble: &CostEnsemble,
) -> Result<NetworkState, DiffusionError> {
    let n = config.n_nodes();
    let m = ensemble.dim();
    if state.iterate.shape() != (n, m) || ensemble.n_nodes() != n {
        return Err(DiffusionError::Dimension(format!(
            "state is {:?}, expected ({n}, {m}) with {} costs",
            state.iterate.shape(),
            ensemble.n_nodes()
        )));
    }
    let a1 = config.a1.matrix();
    let a2 = config.a2.matrix();
    let c = config.c.matrix();
    let w = &state.iterate;
    // φ = A₁ᵀ w (rows are nodes)
    let phi = a1.transpose() * w;
    let mut psi = DenseMatrix::zeros(n, m);
    for k in 0..n {
        let phi_k = phi.row(k).transpose();
        let mut grad = DenseVector::zeros(m);
        for (l, cost) in ensemble.costs().iter().enumerate() {
            let weight = c[(l, k)];
            if weight != 0.0 {
                grad += cost.gradient(&phi_k) * weight;
            }
        }
        let psi_k = phi_k - grad * config.step_sizes[k];
        psi.set_row(k, &psi_k.transpose());
    }
    let next = a2.transpose() * psi;
    let iteration = state.iteration + 1;
    check_finite(&next, iteration)?;
    Ok(NetworkState {
        iterate: next,
        iteration,
    })
}

fn check_finite(w: &DenseMatrix, iteration: usize) -> Result<(), DiffusionError> {
    for k in 0..w.nrows() {
        if w.row(k).iter().any(|v| !v.is_finite()) {
            return Err(DiffusionError::Divergence { node: k, iteration });
        }
    }
    Ok(())
}

/// Iterate until `max_k ‖w_{k,i} − w_{k,i−1}‖ ≤ tol·(1 + ‖w_{k,i}‖)` or
/// `max_iter` iterations. Exhausting `max_iter` is reported through
/// `converged = false`, not as an error.
pub fn run_to_fixed_point(
    config: &DiffusionConfig,
    ensemble: &CostEnsemble,
    init: &DenseMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointResult, DiffusionError> {
    run_to_fixed_point_traced(config, ensemble, init, tol, max_iter, |_, _| {})
}

/// [`run_to_fixed_point`] with a sink that receives `(iteration, update)`
/// after every iteration.
pub fn run_to_fixed_point_traced(
    config: &DiffusionConfig,
    ensemble: &CostEnsemble,
    init: &DenseMatrix,
    tol: f64,
    max_iter: usize,
    mut trace: impl FnMut(usize, f64),
) -> Result<FixedPointResult, DiffusionError> {
    config.validate(ensemble)?;
    let n = config.n_nodes();
    let m = ensemble.dim();
    if init.shape() != (n, m) {
        return Err(DiffusionError::Dimension(format!(
            "init is {:?}, expected ({n}, {m})",
            init.shape()
        )));
    }
    let kernel = Kernel::new(config, ensemble);
    // node-major flat buffers: node k occupies [k*m, (k+1)*m)
    let mut w: Vec<f64> = (0..n)
        .flat_map(|k| (0..m).map(move |j| (k, j)))
        .map(|(k, j)| init[(k, j)])
        .collect();
    let mut next = vec![0.0; n * m];
    let mut scratch = Scratch::new(n, m);
    let mut update = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        kernel.apply(&w, &mut next, &mut scratch);
        iterations += 1;
        update = 0.0;
        for k in 0..n {
            let (mut diff2, mut norm2) = (0.0, 0.0);
            for j in 0..m {
                let v = next[k * m + j];
                if !v.is_finite() {
                    return Err(DiffusionError::Divergence {
                        node: k,
                        iteration: iterations,
                    });
                }
                let d = v - w[k * m + j];
                diff2 += d * d;
                norm2 += v * v;
            }
            update = f64::max(update, diff2.sqrt() / (1.0 + norm2.sqrt()));
        }
        std::mem::swap(&mut w, &mut next);
        trace(iterations, update);
        if update <= tol {
            converged = true;
            break;
        }
    }
    Ok(FixedPointResult {
        w_infinity: DenseMatrix::from_row_slice(n, m, &w),
        iterations_used: iterations,
        converged,
        final_update_norm: update,
    })
}

/// Sparse form of one iteration. For quadratic costs the `C`-weighted
/// gradient sum at node `k` is `Rₖφ − rₖ` with `Rₖ = Σ_l c_lk 2X_lᵀX_l` and
/// `rₖ = Σ_l c_lk 2X_lᵀy_l`, so both are formed once.
struct Kernel {
    n: usize,
    m: usize,
    a1: Vec<Vec<(usize, f64)>>,
    a2: Vec<Vec<(usize, f64)>>,
    /// `μₖRₖ`, row-major m×m per node.
    scaled_hessian: Vec<f64>,
    /// `μₖrₖ`.
    scaled_linear: Vec<f64>,
    a1_identity: bool,
    a2_identity: bool,
}

struct Scratch {
    phi: Vec<f64>,
    psi: Vec<f64>,
}

impl Scratch {
    fn new(n: usize, m: usize) -> Self {
        Self {
            phi: vec![0.0; n * m],
            psi: vec![0.0; n * m],
        }
    }
}

fn column_lists(a: &DenseMatrix) -> Vec<Vec<(usize, f64)>> {
    (0..a.ncols())
        .map(|k| {
            (0..a.nrows())
                .filter(|&l| a[(l, k)] != 0.0)
                .map(|l| (l, a[(l, k)]))
                .collect()
        })
        .collect()
}

impl Kernel {
    fn new(config: &DiffusionConfig, ensemble: &CostEnsemble) -> Self {
        let n = config.n_nodes();
        let m = ensemble.dim();
        let c = config.c.matrix();
        let mut scaled_hessian = vec![0.0; n * m * m];
        let mut scaled_linear = vec![0.0; n * m];
        for k in 0..n {
            let mu = config.step_sizes[k];
            let mut r = DenseMatrix::zeros(m, m);
            let mut b = DenseVector::zeros(m);
            for (l, cost) in ensemble.costs().iter().enumerate() {
                let weight = c[(l, k)];
                if weight != 0.0 {
                    r += cost.hessian() * weight;
                    b += cost.linear_term() * weight;
                }
            }
            for i in 0..m {
                scaled_linear[k * m + i] = mu * b[i];
                for j in 0..m {
                    scaled_hessian[(k * m + i) * m + j] = mu * r[(i, j)];
                }
            }
        }
        let is_identity = |a: &CombinationMatrix| a.matrix() == &DenseMatrix::identity(n, n);
        Self {
            n,
            m,
            a1: column_lists(config.a1.matrix()),
            a2: column_lists(config.a2.matrix()),
            scaled_hessian,
            scaled_linear,
            a1_identity: is_identity(&config.a1),
            a2_identity: is_identity(&config.a2),
        }
    }

    fn combine(lists: &[Vec<(usize, f64)>], m: usize, src: &[f64], dst: &mut [f64]) {
        for (k, list) in lists.iter().enumerate() {
            let out = &mut dst[k * m..(k + 1) * m];
            out.fill(0.0);
            for &(l, a) in list {
                let s = &src[l * m..(l + 1) * m];
                for j in 0..m {
                    out[j] += a * s[j];
                }
            }
        }
    }

    fn apply(&self, w: &[f64], next: &mut [f64], scratch: &mut Scratch) {
        let m = self.m;
        let phi: &[f64] = if self.a1_identity {
            w
        } else {
            Self::combine(&self.a1, m, w, &mut scratch.phi);
            &scratch.phi
        };
        let psi: &mut [f64] = if self.a2_identity { &mut *next } else { &mut scratch.psi };
        for k in 0..self.n {
            let p = &phi[k * m..(k + 1) * m];
            let h = &self.scaled_hessian[k * m * m..(k + 1) * m * m];
            let b = &self.scaled_linear[k * m..(k + 1) * m];
            for i in 0..m {
                let row = &h[i * m..(i + 1) * m];
                let mut g = -b[i];
                for j in 0..m {
                    g += row[j] * p[j];
                }
                psi[k * m + i] = p[i] - g;
            }
        }
        if !self.a2_identity {
            Self::combine(&self.a2, m, &scratch.psi, next);
        }
    }
}
