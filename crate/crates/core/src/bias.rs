//! Asymptotic-bias analytics.
//!
//! For a fixed step-size vector the fixed point of the recursion has bias
//! `w̃∞ = [I − 𝓐₂ᵀ(I − 𝓜𝓡∞)𝓐₁ᵀ]⁻¹ 𝓐₂ᵀ𝓜𝓒ᵀg°`, with `𝓐 = A ⊗ I_M`,
//! `𝓜 = Ω ⊗ I_M`, `𝓡∞` block diagonal with blocks `Σ_l c_lk ∇²J_l(w°)` and
//! `g°` the stacked per-node gradients at the Pareto optimum.
//!
//! As `μ_max → 0` with `Ω₀ = Ω/μ_max` fixed, every node's bias tends to
//!
//! ```text
//! (Σₖ zₖ Σ_l c_lk ∇²J_l(w°))⁻¹ (Σₖ zₖ Σ_l c_lk ∇J_l(w°)),   z = Ω₀A₂θ
//! ```
//!
//! which is zero whenever `θᵀA₂ᵀΩ₀Cᵀ` is a constant row. [`LimitOperators`]
//! exposes the intermediate operators `𝓧 = I − 𝓐₂ᵀ𝓐₁ᵀ`,
//! `𝓨 = 𝓐₂ᵀ𝓜₀𝓡∞𝓐₁ᵀ`, `𝓓` and `𝓩 = (𝟙⊗I)𝓓(θᵀ⊗I)` so their identities
//! can be checked numerically.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::costs::{self, CostEnsemble, CostError};
use crate::diffusion::{DiffusionConfig, DiffusionError, FixedPointResult};
use crate::network::{self, Assumption3Report, CombinationMatrix, NetworkError, ASSUMPTION3_TOL};
use crate::numerics::{self, kron, kron_vec_identity, DenseMatrix, DenseVector, NumericsError};

/// Squarings used by the spectral-radius estimate (exponent `2^64`).
pub const SPECTRAL_SQUARINGS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BiasError {
    #[error("bias system is singular (spectral radius estimate {spectral_radius}): {source}")]
    SingularBiasSystem {
        spectral_radius: f64,
        source: NumericsError,
    },
    #[error("Assumption 1 violated: the z-weighted Hessian is singular ({0})")]
    SingularLimitSystem(NumericsError),
    #[error("invalid step-size schedule: {0}")]
    Schedule(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// `𝓡∞`: block diagonal, block `k` equal to `Σ_l c_lk ∇²J_l(w*)`.
pub fn r_infinity(
    c: &CombinationMatrix,
    ensemble: &CostEnsemble,
    w_star: &DenseVector,
) -> Result<DenseMatrix, BiasError> {
    let n = ensemble.n_nodes();
    let m = ensemble.dim();
    if c.n() != n || w_star.len() != m {
        return Err(CostError::Dimension(format!(
            "C is {0}x{0}, w* has {1} entries; ensemble is N={n}, M={m}",
            c.n(),
            w_star.len()
        ))
        .into());
    }
    let blocks = weighted_hessians(c, ensemble, w_star);
    let mut r = DenseMatrix::zeros(n * m, n * m);
    for (k, block) in blocks.iter().enumerate() {
        r.view_mut((k * m, k * m), (m, m)).copy_from(block);
    }
    Ok(r)
}

/// `Σ_l c_lk ∇²J_l(w*)` for every node `k`.
fn weighted_hessians(c: &CombinationMatrix, ensemble: &CostEnsemble, w_star: &DenseVector) -> Vec<DenseMatrix> {
    use crate::costs::CostModel;
    let m = ensemble.dim();
    let hessians: Vec<DenseMatrix> = ensemble.costs().iter().map(|cost| cost.hessian_at(w_star)).collect();
    let cm = c.matrix();
    (0..ensemble.n_nodes())
        .map(|k| {
            hessians
                .iter()
                .enumerate()
                .filter(|(l, _)| cm[(*l, k)] != 0.0)
                .fold(DenseMatrix::zeros(m, m), |acc, (l, h)| acc + h * cm[(l, k)])
        })
        .collect()
}

/// `𝓐₂ᵀ(I − 𝓜𝓡∞)𝓐₁ᵀ` for an arbitrary (possibly zero) step-size vector.
pub fn error_propagation(
    a1: &CombinationMatrix,
    a2: &CombinationMatrix,
    step_sizes: &DenseVector,
    r_inf: &DenseMatrix,
) -> DenseMatrix {
    let mn = r_inf.nrows();
    let m = mn / a1.n();
    let eye_m = DenseMatrix::identity(m, m);
    let big_a1t = kron(&a1.matrix().transpose(), &eye_m);
    let big_a2t = kron(&a2.matrix().transpose(), &eye_m);
    let big_m = kron(&DenseMatrix::from_diagonal(step_sizes), &eye_m);
    let inner = DenseMatrix::identity(mn, mn) - big_m * r_inf;
    big_a2t * inner * big_a1t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCheck {
    pub spectral_radius: f64,
    pub converged: bool,
    /// Raised when the estimate is not below one.
    pub warning: bool,
}

/// Spectral radius of the error-propagation matrix `𝓐₂ᵀ(I − 𝓜𝓡∞)𝓐₁ᵀ`.
pub fn spectral_check(config: &DiffusionConfig, ensemble: &CostEnsemble) -> Result<SpectralCheck, BiasError> {
    let w_opt = costs::global_optimum(ensemble)?;
    let r_inf = r_infinity(&config.c, ensemble, &w_opt)?;
    let b = error_propagation(&config.a1, &config.a2, &config.step_sizes, &r_inf);
    spectral_check_matrix(&b)
}

pub fn spectral_check_matrix(b: &DenseMatrix) -> Result<SpectralCheck, BiasError> {
    let est = numerics::spectral_radius(b, numerics::DEFAULT_TOL, SPECTRAL_SQUARINGS)?;
    Ok(SpectralCheck {
        spectral_radius: est.value,
        converged: est.converged,
        warning: !(est.value < 1.0),
    })
}

/// Stacked bias `w̃∞` (length `MN`) by a direct solve of the fixed-point
/// system.
pub fn closed_form_bias(config: &DiffusionConfig, ensemble: &CostEnsemble) -> Result<DenseVector, BiasError> {
    let n = config.n_nodes();
    let m = ensemble.dim();
    if ensemble.n_nodes() != n {
        return Err(
            DiffusionError::Dimension(format!("config has {n} nodes, ensemble has {}", ensemble.n_nodes())).into(),
        );
    }
    let w_opt = costs::global_optimum(ensemble)?;
    let g_opt = costs::stacked_gradient(ensemble, &w_opt)?;
    let r_inf = r_infinity(&config.c, ensemble, &w_opt)?;
    let eye_m = DenseMatrix::identity(m, m);
    let b = error_propagation(&config.a1, &config.a2, &config.step_sizes, &r_inf);
    let system = DenseMatrix::identity(n * m, n * m) - &b;
    let big_a2t = kron(&config.a2.matrix().transpose(), &eye_m);
    let big_ct = kron(&config.c.matrix().transpose(), &eye_m);
    let big_m = kron(&DenseMatrix::from_diagonal(&config.step_sizes), &eye_m);
    let rhs = big_a2t * (big_m * (big_ct * g_opt));
    numerics::solve_linear(&system, &rhs).map_err(|source| {
        let spectral_radius = spectral_check_matrix(&b).map(|s| s.spectral_radius).unwrap_or(f64::NAN);
        BiasError::SingularBiasSystem {
            spectral_radius,
            source,
        }
    })
}

/// Operators behind the small-step-size limit.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitOperators {
    pub theta: DenseVector,
    /// `z = Ω₀A₂θ`.
    pub z_vector: DenseVector,
    /// `𝓧 = I − 𝓐₂ᵀ𝓐₁ᵀ`.
    pub x_op: DenseMatrix,
    /// `𝓨 = 𝓐₂ᵀ𝓜₀𝓡∞𝓐₁ᵀ`.
    pub y_op: DenseMatrix,
    /// `𝓓 = [(θᵀ⊗I)𝓨(𝟙⊗I)]⁻¹`.
    pub d_matrix: DenseMatrix,
    /// `𝓩 = (𝟙⊗I)𝓓(θᵀ⊗I)`.
    pub z_op: DenseMatrix,
}

impl LimitOperators {
    /// `(θᵀ⊗I)𝓨(𝟙⊗I)`, the `M×M` matrix `𝓓` inverts.
    pub fn projected_y(&self) -> DenseMatrix {
        let m = self.d_matrix.nrows();
        let n = self.theta.len();
        let theta_k = kron_vec_identity(&self.theta, m).transpose();
        let ones_k = kron_vec_identity(&DenseVector::from_element(n, 1.0), m);
        theta_k * &self.y_op * ones_k
    }
}

pub fn limit_operators(config: &DiffusionConfig, ensemble: &CostEnsemble) -> Result<LimitOperators, BiasError> {
    let n = config.n_nodes();
    let m = ensemble.dim();
    let perron = network::perron_theta(&config.a1, &config.a2)?;
    let theta = perron.theta;
    let omega0 = config.omega0();
    let z_vector = network::weighted_perron(&theta, &config.a2, &omega0);

    let w_opt = costs::global_optimum(ensemble)?;
    let r_inf = r_infinity(&config.c, ensemble, &w_opt)?;
    let eye_m = DenseMatrix::identity(m, m);
    let big_a1t = kron(&config.a1.matrix().transpose(), &eye_m);
    let big_a2t = kron(&config.a2.matrix().transpose(), &eye_m);
    let big_m0 = kron(&DenseMatrix::from_diagonal(&omega0), &eye_m);
    let x_op = DenseMatrix::identity(n * m, n * m) - &big_a2t * &big_a1t;
    let y_op = big_a2t * big_m0 * r_inf * big_a1t;

    let theta_k = kron_vec_identity(&theta, m).transpose();
    let ones_k = kron_vec_identity(&DenseVector::from_element(n, 1.0), m);
    let projected = &theta_k * &y_op * &ones_k;
    let d_matrix = numerics::solve_matrix(&projected, &eye_m).map_err(BiasError::SingularLimitSystem)?;
    let z_op = ones_k * &d_matrix * theta_k;
    Ok(LimitOperators {
        theta,
        z_vector,
        x_op,
        y_op,
        d_matrix,
        z_op,
    })
}

/// Small-step-size limit of the per-node bias (length `M`; identical at
/// every node).
pub fn limit_bias(config: &DiffusionConfig, ensemble: &CostEnsemble) -> Result<DenseVector, BiasError> {
    use crate::costs::CostModel;
    let n = config.n_nodes();
    let m = ensemble.dim();
    let theta = network::perron_theta(&config.a1, &config.a2)?.theta;
    let z = network::weighted_perron(&theta, &config.a2, &config.omega0());
    let w_opt = costs::global_optimum(ensemble)?;
    let hessians = weighted_hessians(&config.c, ensemble, &w_opt);
    let grads: Vec<DenseVector> = ensemble.costs().iter().map(|c| c.gradient(&w_opt)).collect();
    let cm = config.c.matrix();
    let mut lhs = DenseMatrix::zeros(m, m);
    let mut rhs = DenseVector::zeros(m);
    for k in 0..n {
        lhs += &hessians[k] * z[k];
        for l in 0..n {
            if cm[(l, k)] != 0.0 {
                rhs += &grads[l] * (z[k] * cm[(l, k)]);
            }
        }
    }
    numerics::solve_linear(&lhs, &rhs).map_err(BiasError::SingularLimitSystem)
}

/// Limit bias replicated at every node (length `MN`).
pub fn replicate(per_node: &DenseVector, n: usize) -> DenseVector {
    let m = per_node.len();
    DenseVector::from_fn(n * m, |i, _| per_node[i % m])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitDeviation {
    pub mu_max: f64,
    /// `‖closed_form_bias − replicated limit‖`.
    pub deviation: f64,
}

/// Evaluate the closed-form bias along a strictly decreasing `μ_max`
/// schedule (same `Ω₀`) and report its distance from the limit.
pub fn verify_limit_convergence(
    config: &DiffusionConfig,
    ensemble: &CostEnsemble,
    mu_schedule: &[f64],
) -> Result<Vec<LimitDeviation>, BiasError> {
    if mu_schedule.is_empty() {
        return Err(BiasError::Schedule("schedule is empty".into()));
    }
    if let Some(w) = mu_schedule.windows(2).find(|w| !(w[1] < w[0])) {
        return Err(BiasError::Schedule(format!(
            "schedule must be strictly decreasing ({} then {})",
            w[0], w[1]
        )));
    }
    let scaled: Vec<DiffusionConfig> = mu_schedule
        .iter()
        .map(|&mu| {
            let cfg = config.with_mu_max(mu)?;
            cfg.validate(ensemble)?;
            Ok(cfg)
        })
        .collect::<Result<_, BiasError>>()?;
    let limit = replicate(&limit_bias(config, ensemble)?, config.n_nodes());
    scaled
        .iter()
        .zip(mu_schedule)
        .map(|(cfg, &mu_max)| {
            let bias = closed_form_bias(cfg, ensemble)?;
            Ok(LimitDeviation {
                mu_max,
                deviation: (bias - &limit).norm(),
            })
        })
        .collect()
}

/// Everything known about one configuration's bias.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasReport {
    /// `w° − w_{k,∞}` from iteration, one row per node.
    #[serde(serialize_with = "ser_rows")]
    pub empirical_bias: DenseMatrix,
    #[serde(serialize_with = "ser_vec")]
    pub closed_form_bias: DenseVector,
    #[serde(rename = "limit_bias", serialize_with = "ser_vec")]
    pub limit_bias_per_node: DenseVector,
    #[serde(rename = "spectral_radius", serialize_with = "ser_real")]
    pub spectral_radius_b: f64,
    #[serde(serialize_with = "ser_assumption3")]
    pub assumption3: Assumption3Report,
}

impl BiasReport {
    /// Assemble a report around an already computed fixed point.
    pub fn build(
        config: &DiffusionConfig,
        ensemble: &CostEnsemble,
        fixed_point: &FixedPointResult,
    ) -> Result<Self, BiasError> {
        let w_opt = costs::global_optimum(ensemble)?;
        let empirical_bias = empirical_bias(&w_opt, &fixed_point.w_infinity);
        let closed_form_bias = closed_form_bias(config, ensemble)?;
        let limit_bias_per_node = limit_bias(config, ensemble)?;
        let spectral = spectral_check(config, ensemble)?;
        let theta = network::perron_theta(&config.a1, &config.a2)?.theta;
        let assumption3 = network::check_assumption3(&theta, &config.a2, &config.omega0(), &config.c, ASSUMPTION3_TOL)?;
        Ok(Self {
            empirical_bias,
            closed_form_bias,
            limit_bias_per_node,
            spectral_radius_b: spectral.spectral_radius,
            assumption3,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields are finite reals")
    }
}

/// `w° − w_{k,∞}` per node.
pub fn empirical_bias(w_opt: &DenseVector, w_infinity: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(w_infinity.nrows(), w_infinity.ncols(), |k, j| {
        w_opt[j] - w_infinity[(k, j)]
    })
}

/// Row-major flattening of a node-by-dimension array into the stacked form.
pub fn stack_rows(a: &DenseMatrix) -> DenseVector {
    DenseVector::from_fn(a.nrows() * a.ncols(), |i, _| a[(i / a.ncols(), i % a.ncols())])
}

/// Reals are written with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn raw_real(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() {
        format_real(x)
    } else {
        "null".to_string()
    };
    RawValue::from_string(text).expect("formatted real is valid JSON")
}

fn ser_real<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    raw_real(*x).serialize(s)
}

fn ser_vec<S: Serializer>(v: &DenseVector, s: S) -> Result<S::Ok, S::Error> {
    v.iter().map(|&x| raw_real(x)).collect::<Vec<_>>().serialize(s)
}

fn ser_rows<S: Serializer>(a: &DenseMatrix, s: S) -> Result<S::Ok, S::Error> {
    a.row_iter()
        .map(|r| r.iter().map(|&x| raw_real(x)).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .serialize(s)
}

fn ser_assumption3<S: Serializer>(r: &Assumption3Report, s: S) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Out {
        satisfied: bool,
        c0: Box<RawValue>,
        max_deviation: Box<RawValue>,
    }
    Out {
        satisfied: r.satisfied,
        c0: raw_real(r.c0_estimate),
        max_deviation: raw_real(r.max_deviation),
    }
    .serialize(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::{sample_ensemble, sample_identical_ensemble, QuadraticCost};
    use crate::diffusion::{run_to_fixed_point, Strategy};
    use crate::network::{build_a, build_c, generate_topology, CombinationRule, StochasticKind};

    fn scalar_ensemble(targets: &[f64]) -> CostEnsemble {
        let costs = targets
            .iter()
            .map(|&t| {
                QuadraticCost::new(DenseMatrix::from_element(1, 1, 1.0), DenseVector::from_element(1, t)).unwrap()
            })
            .collect();
        CostEnsemble::new(costs, 0).unwrap()
    }

    fn two_node_config(mu: f64) -> DiffusionConfig {
        let a = CombinationMatrix::new(
            DenseMatrix::from_row_slice(2, 2, &[0.7, 0.4, 0.3, 0.6]),
            StochasticKind::LeftStochastic,
            CombinationRule::Custom,
        )
        .unwrap();
        let eye = CombinationMatrix::identity(2);
        DiffusionConfig::new(a, eye.clone(), eye, DenseVector::from_element(2, mu), Strategy::Cta).unwrap()
    }

    #[test]
    fn r_infinity_examples() {
        let e = scalar_ensemble(&[1.0, 3.0]);
        let r = r_infinity(&CombinationMatrix::identity(2), &e, &DenseVector::from_element(1, 2.0)).unwrap();
        assert_eq!(r, DenseMatrix::from_diagonal(&DenseVector::from_vec(vec![2.0, 2.0])));

        let e = sample_ensemble(4, 3, 5, 1).unwrap();
        let w = DenseVector::zeros(3);
        let r = r_infinity(&CombinationMatrix::identity(4), &e, &w).unwrap();
        for (k, cost) in e.costs().iter().enumerate() {
            let block = r.view((3 * k, 3 * k), (3, 3)).into_owned();
            assert_eq!(&block, cost.hessian());
        }
        let t = generate_topology(4, 2.0, 1).unwrap();
        let c = build_c(&t, CombinationRule::Averaging).unwrap();
        let r = r_infinity(&c, &e, &w).unwrap();
        for k in 0..4 {
            let block = r.view((3 * k, 3 * k), (3, 3)).into_owned();
            assert!(block.symmetric_eigen().eigenvalues.min() > 0.0);
        }
    }

    #[test]
    fn zero_gradient_means_zero_bias() {
        let e = sample_identical_ensemble(6, 3, 5, 2).unwrap();
        let t = generate_topology(6, 2.0, 2).unwrap();
        let a = build_a(&t, CombinationRule::Averaging).unwrap();
        let cfg = DiffusionConfig::atc(
            &a,
            build_c(&t, CombinationRule::Averaging).unwrap(),
            DenseVector::from_element(6, 0.01),
        )
        .unwrap();
        assert!(closed_form_bias(&cfg, &e).unwrap().amax() < 1e-12);
    }

    #[test]
    fn two_node_closed_form_matches_iteration() {
        let e = scalar_ensemble(&[1.0, 3.0]);
        let cfg = two_node_config(0.01);
        let closed = closed_form_bias(&cfg, &e).unwrap();
        let fp = run_to_fixed_point(&cfg, &e, &DenseMatrix::zeros(2, 1), 1e-15, 10_000_000).unwrap();
        assert!(fp.converged);
        let emp = stack_rows(&empirical_bias(&DenseVector::from_element(1, 2.0), &fp.w_infinity));
        assert!((closed - emp).amax() < 1e-10);
    }

    #[test]
    fn two_node_limit_values() {
        let e = scalar_ensemble(&[1.0, 3.0]);
        let cfg = two_node_config(0.01);
        let ops = limit_operators(&cfg, &e).unwrap();
        assert!((ops.z_vector[0] - 4. / 7.).abs() < 1e-12);
        assert!((ops.z_vector[1] - 3. / 7.).abs() < 1e-12);
        assert!((ops.d_matrix[(0, 0)] - 0.5).abs() < 1e-12);
        let lb = limit_bias(&cfg, &e).unwrap();
        assert!((lb[0] - 1. / 7.).abs() < 1e-12);
        // Ω₀ is scale-free
        let lb2 = limit_bias(&cfg.with_mu_max(0.123).unwrap(), &e).unwrap();
        assert!((lb2[0] - lb[0]).abs() < 1e-15);
    }

    #[test]
    fn d_is_half_identity_for_doubly_stochastic_unit_hessians() {
        let n = 6;
        let m = 3;
        let costs = (0..n)
            .map(|k| QuadraticCost::new(DenseMatrix::identity(m, m), DenseVector::from_element(m, k as f64)).unwrap())
            .collect();
        let e = CostEnsemble::new(costs, 0).unwrap();
        let t = generate_topology(n, 2.0, 5).unwrap();
        let a = build_a(&t, CombinationRule::Metropolis).unwrap();
        let cfg = DiffusionConfig::atc(&a, CombinationMatrix::identity(n), DenseVector::from_element(n, 0.05)).unwrap();
        let ops = limit_operators(&cfg, &e).unwrap();
        assert!((&ops.d_matrix - DenseMatrix::identity(m, m) * 0.5).amax() < 1e-10);
    }

    #[test]
    fn limit_is_zero_under_balanced_condition() {
        let n = 12;
        let e = sample_ensemble(n, 4, 6, 8).unwrap();
        let t = generate_topology(n, 3.0, 8).unwrap();
        let a = build_a(&t, CombinationRule::Metropolis).unwrap();
        let c = build_c(&t, CombinationRule::RelativeDegree).unwrap();
        let cfg = DiffusionConfig::atc(&a, c, DenseVector::from_element(n, 0.005)).unwrap();
        let lb = limit_bias(&cfg, &e).unwrap();
        assert!(lb.amax() < 1e-12, "{lb}");
    }

    #[test]
    fn limit_matches_weighted_least_squares() {
        // limit = w° − argmin Σₖ zₖ Σ_l c_lk J_l(w)
        let n = 10;
        let e = sample_ensemble(n, 4, 6, 14).unwrap();
        let t = generate_topology(n, 3.0, 14).unwrap();
        let a = build_a(&t, CombinationRule::Averaging).unwrap();
        let c = build_c(&t, CombinationRule::RelativeDegree).unwrap();
        let steps = DenseVector::from_fn(n, |k, _| 0.004 + 0.0005 * (k % 3) as f64);
        let cfg = DiffusionConfig::atc(&a, c.clone(), steps).unwrap();
        let ops = limit_operators(&cfg, &e).unwrap();
        let weights: Vec<f64> = (0..n)
            .map(|l| (0..n).map(|k| ops.z_vector[k] * c.matrix()[(l, k)]).sum())
            .collect();
        let mut normal = DenseMatrix::zeros(4, 4);
        let mut rhs = DenseVector::zeros(4);
        for (l, cost) in e.costs().iter().enumerate() {
            normal += cost.x().transpose() * cost.x() * weights[l];
            rhs += cost.x().transpose() * cost.y() * weights[l];
        }
        let weighted_min = normal.lu().solve(&rhs).unwrap();
        let expected = costs::global_optimum(&e).unwrap() - weighted_min;
        let lb = limit_bias(&cfg, &e).unwrap();
        assert!((lb - expected).amax() < 1e-10);
    }

    #[test]
    fn schedule_validation() {
        let e = scalar_ensemble(&[1.0, 3.0]);
        let cfg = two_node_config(0.01);
        assert!(verify_limit_convergence(&cfg, &e, &[1e-3, 1e-3]).is_err());
        assert!(verify_limit_convergence(&cfg, &e, &[]).is_err());
        // bound is 1 for these costs
        assert!(matches!(
            verify_limit_convergence(&cfg, &e, &[2.0, 1e-3]),
            Err(BiasError::Diffusion(DiffusionError::StepSizeBound { .. }))
        ));
    }

    #[test]
    fn deviations_shrink_per_decade() {
        let e = scalar_ensemble(&[1.0, 3.0]);
        let cfg = two_node_config(0.01);
        let table = verify_limit_convergence(&cfg, &e, &[1e-2, 1e-3, 1e-4]).unwrap();
        for pair in table.windows(2) {
            let ratio = pair[0].deviation / pair[1].deviation;
            assert!((ratio - 10.0).abs() < 0.5, "{ratio}");
        }
    }

    #[test]
    fn spectral_examples() {
        let e = sample_ensemble(8, 3, 5, 3).unwrap();
        let t = generate_topology(8, 3.0, 3).unwrap();
        let a = build_a(&t, CombinationRule::RelativeDegree).unwrap();
        let c = build_c(&t, CombinationRule::Averaging).unwrap();
        let cfg = DiffusionConfig::atc(&a, c.clone(), DenseVector::from_element(8, 0.01)).unwrap();
        cfg.validate(&e).unwrap();
        let s = spectral_check(&cfg, &e).unwrap();
        assert!(s.spectral_radius < 1.0 && !s.warning);

        let w = costs::global_optimum(&e).unwrap();
        let r = r_infinity(&c, &e, &w).unwrap();
        let (a1, a2) = (cfg.a1.clone(), cfg.a2.clone());
        let b0 = error_propagation(&a1, &a2, &DenseVector::zeros(8), &r);
        let s0 = spectral_check_matrix(&b0).unwrap();
        assert!((s0.spectral_radius - 1.0).abs() < 1e-10);

        // one scalar node with μ = 1.5 against the bound 1
        let e1 = scalar_ensemble(&[1.0]);
        let eye = CombinationMatrix::identity(1);
        let bad = DiffusionConfig::new(
            eye.clone(),
            eye.clone(),
            eye,
            DenseVector::from_element(1, 1.5),
            Strategy::General,
        )
        .unwrap();
        let s = spectral_check(&bad, &e1).unwrap();
        assert!(s.warning);
        assert!((s.spectral_radius - 2.0).abs() < 1e-10);
    }

    #[test]
    fn report_json_fields() {
        let e = scalar_ensemble(&[1.0, 3.0]);
        let cfg = two_node_config(0.01);
        let fp = run_to_fixed_point(&cfg, &e, &DenseMatrix::zeros(2, 1), 1e-13, 1_000_000).unwrap();
        let report = BiasReport::build(&cfg, &e, &fp).unwrap();
        let json = report.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in [
            "empirical_bias",
            "closed_form_bias",
            "limit_bias",
            "spectral_radius",
            "assumption3",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["assumption3"]["satisfied"], false);
        assert!(v["assumption3"].get("c0").is_some());
        assert!(
            (v["limit_bias"][0].as_f64().unwrap() - 1.0 / 7.0).abs() < 1e-12,
            "{json}"
        );
    }
}
