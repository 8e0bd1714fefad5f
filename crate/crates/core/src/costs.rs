//! Per-node cost models, the global least-squares optimum, and the
//! step-size bound checks that depend on Hessian eigenvalues.

use std::fmt::Write as _;

use thiserror::Error;

use crate::network::CombinationMatrix;
use crate::numerics::{self, DenseMatrix, DenseVector, NumericsError};
use crate::rng::SeededStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("Assumption 1 violated: aggregate normal matrix is singular ({0})")]
    SingularAggregate(NumericsError),
    #[error("Assumption 1 violated at node {node}: sum_l c_lk * lambda_l,min = {value:e}")]
    WeightedCurvature { node: usize, value: f64 },
    #[error("ensemble parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A twice-differentiable per-node cost.
pub trait CostModel {
    fn dim(&self) -> usize;
    fn value(&self, w: &DenseVector) -> f64;
    /// Write `∇J(w)` into `out`.
    fn gradient_into(&self, w: &DenseVector, out: &mut DenseVector);
    fn hessian_at(&self, w: &DenseVector) -> DenseMatrix;
    fn hessian_bounds(&self) -> Result<HessianBounds, CostError>;

    fn gradient(&self, w: &DenseVector) -> DenseVector {
        let mut out = DenseVector::zeros(self.dim());
        self.gradient_into(w, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// `J(w) = ‖Xw − y‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    x: DenseMatrix,
    y: DenseVector,
    // 2XᵀX and 2Xᵀy, so gradients cost one M×M product
    hessian: DenseMatrix,
    linear: DenseVector,
}

impl QuadraticCost {
    pub fn new(x: DenseMatrix, y: DenseVector) -> Result<Self, CostError> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(CostError::Dimension("X must have at least one row and column".into()));
        }
        if x.nrows() != y.len() {
            return Err(CostError::Dimension(format!(
                "X has {} rows but y has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        numerics::ensure_finite(&x)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(CostError::Dimension("y has a non-finite entry".into()));
        }
        let hessian = x.transpose() * &x * 2.0;
        let linear = x.transpose() * &y * 2.0;
        Ok(Self { x, y, hessian, linear })
    }

    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn y(&self) -> &DenseVector {
        &self.y
    }

    /// `2XᵀX`, independent of the evaluation point.
    pub fn hessian(&self) -> &DenseMatrix {
        &self.hessian
    }

    /// `2Xᵀy`.
    pub fn linear_term(&self) -> &DenseVector {
        &self.linear
    }

    pub fn rows(&self) -> usize {
        self.x.nrows()
    }
}

impl CostModel for QuadraticCost {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn value(&self, w: &DenseVector) -> f64 {
        (&self.x * w - &self.y).norm_squared()
    }

    fn gradient_into(&self, w: &DenseVector, out: &mut DenseVector) {
        // 2Xᵀ(Xw − y) = (2XᵀX)w − 2Xᵀy
        self.hessian.mul_to(w, out);
        *out -= &self.linear;
    }

    fn hessian_at(&self, _w: &DenseVector) -> DenseMatrix {
        self.hessian.clone()
    }

    fn hessian_bounds(&self) -> Result<HessianBounds, CostError> {
        let (lambda_min, lambda_max) =
            numerics::symmetric_extreme_eigenvalues(&self.hessian, 1e-15, numerics::DEFAULT_MAX_ITER)?;
        Ok(HessianBounds { lambda_min, lambda_max })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostEnsemble {
    costs: Vec<QuadraticCost>,
    dim: usize,
    data_seed: u64,
}

impl CostEnsemble {
    pub fn new(costs: Vec<QuadraticCost>, data_seed: u64) -> Result<Self, CostError> {
        let dim = costs
            .first()
            .map(|c| c.dim())
            .ok_or_else(|| CostError::Dimension("ensemble needs at least one cost".into()))?;
        if let Some(k) = costs.iter().position(|c| c.dim() != dim) {
            return Err(CostError::Dimension(format!(
                "cost {k} has dim {} but cost 0 has {dim}",
                costs[k].dim()
            )));
        }
        Ok(Self { costs, dim, data_seed })
    }

    pub fn costs(&self) -> &[QuadraticCost] {
        &self.costs
    }

    pub fn n_nodes(&self) -> usize {
        self.costs.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data_seed(&self) -> u64 {
        self.data_seed
    }

    pub fn aggregate_value(&self, w: &DenseVector) -> f64 {
        self.costs.iter().map(|c| c.value(w)).sum()
    }

    pub fn aggregate_gradient(&self, w: &DenseVector) -> DenseVector {
        self.costs
            .iter()
            .fold(DenseVector::zeros(self.dim), |acc, c| acc + c.gradient(w))
    }

    pub fn hessian_bounds(&self) -> Result<Vec<HessianBounds>, CostError> {
        self.costs.iter().map(|c| c.hessian_bounds()).collect()
    }

    /// Plain-text bundle: `N M rows` header, then for every node the rows of
    /// `Xₖ` followed by `yₖ` on one line, 17 significant digits.
    pub fn to_bundle(&self) -> Result<String, CostError> {
        let rows = self.costs[0].rows();
        if self.costs.iter().any(|c| c.rows() != rows) {
            return Err(CostError::Dimension("bundle format needs equal row counts".into()));
        }
        let mut s = format!("{} {} {}\n", self.n_nodes(), self.dim, rows);
        for c in &self.costs {
            for r in 0..rows {
                let line: Vec<String> = (0..self.dim).map(|j| format!("{:.16e}", c.x[(r, j)])).collect();
                let _ = writeln!(s, "{}", line.join(" "));
            }
            let line: Vec<String> = c.y.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        Ok(s)
    }

    pub fn from_bundle(text: &str, data_seed: u64) -> Result<Self, CostError> {
        let mut tokens = text.split_whitespace();
        let mut header = |what: &str| -> Result<usize, CostError> {
            let t = tokens
                .next()
                .ok_or_else(|| CostError::Parse(format!("missing {what}")))?;
            t.parse()
                .map_err(|e| CostError::Parse(format!("bad {what} {t:?}: {e}")))
        };
        let (n, m, rows) = (header("N")?, header("M")?, header("rows")?);
        let mut values = Vec::with_capacity(n * rows * (m + 1));
        for t in tokens {
            values.push(
                t.parse::<f64>()
                    .map_err(|e| CostError::Parse(format!("bad number {t:?}: {e}")))?,
            );
        }
        let per_node = rows * (m + 1);
        if values.len() != n * per_node {
            return Err(CostError::Parse(format!(
                "expected {} numbers, found {}",
                n * per_node,
                values.len()
            )));
        }
        let costs = values
            .chunks(per_node)
            .map(|chunk| {
                let x = DenseMatrix::from_row_slice(rows, m, &chunk[..rows * m]);
                let y = DenseVector::from_column_slice(&chunk[rows * m..]);
                QuadraticCost::new(x, y)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(costs, data_seed)
    }
}

/// `n` independent least-squares costs with standard-normal `Xₖ` (`rows×m`)
/// and `yₖ`. Draw order: node by node, `Xₖ` row-major, then `yₖ`.
pub fn sample_ensemble(n: usize, m: usize, rows: usize, data_seed: u64) -> Result<CostEnsemble, CostError> {
    if n == 0 || m == 0 || rows == 0 {
        return Err(CostError::Dimension(format!(
            "need n, m, rows >= 1, got {n}, {m}, {rows}"
        )));
    }
    let mut rng = SeededStream::new(data_seed);
    let costs = (0..n)
        .map(|_| {
            let mut x = DenseMatrix::zeros(rows, m);
            for r in 0..rows {
                for c in 0..m {
                    x[(r, c)] = rng.normal();
                }
            }
            let y = DenseVector::from_fn(rows, |_, _| rng.normal());
            QuadraticCost::new(x, y)
        })
        .collect::<Result<Vec<_>, _>>()?;
    CostEnsemble::new(costs, data_seed)
}

/// Same as [`sample_ensemble`] but every node receives node 0's data; the
/// Pareto optimum then minimizes every cost and the bias is zero.
pub fn sample_identical_ensemble(n: usize, m: usize, rows: usize, data_seed: u64) -> Result<CostEnsemble, CostError> {
    let one = sample_ensemble(1, m, rows, data_seed)?;
    let cost = one.costs[0].clone();
    CostEnsemble::new(vec![cost; n], data_seed)
}

/// `w° = (Σ XₖᵀXₖ)⁻¹ Σ Xₖᵀyₖ`.
pub fn global_optimum(ensemble: &CostEnsemble) -> Result<DenseVector, CostError> {
    let m = ensemble.dim();
    let (normal, rhs) = ensemble
        .costs
        .iter()
        .fold((DenseMatrix::zeros(m, m), DenseVector::zeros(m)), |(a, b), c| {
            (a + c.x.transpose() * &c.x, b + c.x.transpose() * &c.y)
        });
    numerics::solve_linear(&normal, &rhs).map_err(CostError::SingularAggregate)
}

/// Stack `∇Jₖ(w)` for `k = 1..N` into an `MN` vector.
pub fn stacked_gradient(ensemble: &CostEnsemble, w: &DenseVector) -> Result<DenseVector, CostError> {
    let m = ensemble.dim();
    if w.len() != m {
        return Err(CostError::Dimension(format!(
            "w has {} entries, costs have dim {m}",
            w.len()
        )));
    }
    let mut out = DenseVector::zeros(m * ensemble.n_nodes());
    for (k, c) in ensemble.costs.iter().enumerate() {
        out.rows_mut(k * m, m).copy_from(&c.gradient(w));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assumption1Report {
    pub satisfied: bool,
    /// `Σ_l c_lk λ_l,min` per node.
    pub weighted_min: Vec<f64>,
    /// `Σ_l c_lk λ_l,max` per node.
    pub weighted_max: Vec<f64>,
}

impl Assumption1Report {
    /// Strict upper bound `2 / Σ_l c_lk λ_l,max` on node `k`'s step size.
    pub fn step_bound(&self, k: usize) -> f64 {
        2.0 / self.weighted_max[k]
    }
}

pub fn check_assumption1(c: &CombinationMatrix, ensemble: &CostEnsemble) -> Result<Assumption1Report, CostError> {
    let bounds = ensemble.hessian_bounds()?;
    check_assumption1_with(c, &bounds)
}

pub fn check_assumption1_with(c: &CombinationMatrix, bounds: &[HessianBounds]) -> Result<Assumption1Report, CostError> {
    let n = bounds.len();
    if c.n() != n {
        return Err(CostError::Dimension(format!(
            "C is {0}x{0} but ensemble has {n} nodes",
            c.n()
        )));
    }
    let cm = c.matrix();
    let weighted = |f: fn(&HessianBounds) -> f64| -> Vec<f64> {
        (0..n)
            .map(|k| (0..n).map(|l| cm[(l, k)] * f(&bounds[l])).sum())
            .collect()
    };
    let weighted_min = weighted(|b| b.lambda_min);
    let weighted_max = weighted(|b| b.lambda_max);
    Ok(Assumption1Report {
        satisfied: weighted_min.iter().all(|&v| v > 0.0),
        weighted_min,
        weighted_max,
    })
}

/// Strict upper bound on node `k`'s step size. Fails when the node's
/// weighted curvature lower bound is not positive.
pub fn max_step_size(node_index: usize, c: &CombinationMatrix, ensemble: &CostEnsemble) -> Result<f64, CostError> {
    let report = check_assumption1(c, ensemble)?;
    if node_index >= ensemble.n_nodes() {
        return Err(CostError::Dimension(format!("node {node_index} out of range")));
    }
    let value = report.weighted_min[node_index];
    if !(value > 0.0) {
        return Err(CostError::WeightedCurvature {
            node: node_index,
            value,
        });
    }
    Ok(report.step_bound(node_index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_c, generate_topology, CombinationRule};

    fn scalar(x: f64, y: f64) -> QuadraticCost {
        QuadraticCost::new(DenseMatrix::from_element(1, 1, x), DenseVector::from_element(1, y)).unwrap()
    }

    fn vec1(v: f64) -> DenseVector {
        DenseVector::from_element(1, v)
    }

    #[test]
    fn sample_shape_and_determinism() {
        let e = sample_ensemble(50, 4, 6, 2).unwrap();
        assert_eq!(e.n_nodes(), 50);
        assert!(e.costs().iter().all(|c| c.x().shape() == (6, 4) && c.y().len() == 6));
        let f = sample_ensemble(50, 4, 6, 2).unwrap();
        assert_eq!(e.to_bundle().unwrap(), f.to_bundle().unwrap());
        assert_ne!(e, sample_ensemble(50, 4, 6, 3).unwrap());
    }

    #[test]
    fn sample_mean_near_zero() {
        let e = sample_ensemble(1000, 4, 6, 17).unwrap();
        let (sum, count) = e
            .costs()
            .iter()
            .fold((0.0, 0usize), |(s, n), c| (s + c.x().sum(), n + c.x().len()));
        assert!((sum / count as f64).abs() < 0.02);
    }

    #[test]
    fn gradient_examples() {
        let c = scalar(1.0, 1.0);
        assert_eq!(c.gradient(&vec1(0.0))[0], -2.0);
        let e = sample_ensemble(1, 3, 5, 8).unwrap();
        let single = CostEnsemble::new(e.costs().to_vec(), 0).unwrap();
        let w = global_optimum(&single).unwrap();
        assert!(e.costs()[0].gradient(&w).amax() < 1e-10);
    }

    #[test]
    fn hessian_examples() {
        assert_eq!(scalar(1.0, 0.0).hessian()[(0, 0)], 2.0);
        let c = QuadraticCost::new(DenseMatrix::identity(2, 2), DenseVector::zeros(2)).unwrap();
        assert_eq!(c.hessian(), &(DenseMatrix::identity(2, 2) * 2.0));
        let b = c.hessian_bounds().unwrap();
        assert!((b.lambda_min - 2.0).abs() < 1e-12 && (b.lambda_max - 2.0).abs() < 1e-12);
        let d = QuadraticCost::new(
            DenseMatrix::from_diagonal(&DenseVector::from_vec(vec![1., 2.])),
            DenseVector::zeros(2),
        )
        .unwrap();
        let b = d.hessian_bounds().unwrap();
        assert!((b.lambda_min - 2.0).abs() < 1e-12 && (b.lambda_max - 8.0).abs() < 1e-12);
    }

    #[test]
    fn hessian_bounds_match_symmetric_eigen() {
        let e = sample_ensemble(30, 4, 6, 5).unwrap();
        for c in e.costs() {
            let b = c.hessian_bounds().unwrap();
            let eig = c.hessian().clone().symmetric_eigen().eigenvalues;
            assert!(
                (b.lambda_max - eig.max()).abs() < 1e-8 * eig.max(),
                "{} {}",
                b.lambda_max,
                eig.max()
            );
            assert!(
                (b.lambda_min - eig.min()).abs() < 1e-8 * eig.max(),
                "{} {}",
                b.lambda_min,
                eig.min()
            );
            assert!(b.lambda_min > 0.0);
        }
    }

    #[test]
    fn rank_deficient_has_zero_lambda_min() {
        let e = sample_ensemble(5, 4, 2, 5).unwrap();
        for c in e.costs() {
            let b = c.hessian_bounds().unwrap();
            assert!(b.lambda_min.abs() < 1e-8 * b.lambda_max);
        }
    }

    #[test]
    fn global_optimum_examples() {
        let e = CostEnsemble::new(vec![scalar(1.0, 1.0), scalar(1.0, 3.0)], 0).unwrap();
        assert!((global_optimum(&e).unwrap()[0] - 2.0).abs() < 1e-15);
        let g = stacked_gradient(&e, &vec1(2.0)).unwrap();
        assert_eq!(g.as_slice(), &[2.0, -2.0]);

        let x = DenseMatrix::from_row_slice(2, 2, &[2., 1., 1., 3.]);
        let y = DenseVector::from_vec(vec![1., 2.]);
        let single = CostEnsemble::new(vec![QuadraticCost::new(x.clone(), y.clone()).unwrap()], 0).unwrap();
        let w = global_optimum(&single).unwrap();
        assert!((&x * &w - &y).amax() < 1e-14);
    }

    #[test]
    fn global_optimum_singular() {
        let zero = QuadraticCost::new(DenseMatrix::zeros(3, 2), DenseVector::zeros(3)).unwrap();
        let e = CostEnsemble::new(vec![zero.clone(), zero], 0).unwrap();
        assert!(matches!(global_optimum(&e), Err(CostError::SingularAggregate(_))));
    }

    #[test]
    fn stacked_gradient_sums_to_zero_at_optimum() {
        let e = sample_ensemble(20, 4, 6, 9).unwrap();
        let w = global_optimum(&e).unwrap();
        let g = stacked_gradient(&e, &w).unwrap();
        let mut total = DenseVector::zeros(4);
        let mut scale = 0.0;
        for k in 0..20 {
            let block = g.rows(k * 4, 4);
            total += block;
            scale += block.norm();
        }
        assert!(total.norm() <= 1e-9 * scale);
        let w2 = DenseVector::from_vec(vec![0.3, -1.0, 2.0, 0.5]);
        let g2 = stacked_gradient(&e, &w2).unwrap();
        let mut sum = DenseVector::zeros(4);
        for k in 0..20 {
            sum += g2.rows(k * 4, 4);
        }
        assert!((sum - e.aggregate_gradient(&w2)).amax() < 1e-10);
        assert!(stacked_gradient(&e, &vec1(0.0)).is_err());
    }

    #[test]
    fn step_bound_examples() {
        let e = CostEnsemble::new(vec![scalar(1.0, 1.0)], 0).unwrap();
        let c = CombinationMatrix::identity(1);
        assert!((max_step_size(0, &c, &e).unwrap() - 1.0).abs() < 1e-12);
        let e = CostEnsemble::new(
            vec![QuadraticCost::new(DenseMatrix::identity(2, 2), DenseVector::zeros(2)).unwrap()],
            0,
        )
        .unwrap();
        assert!((max_step_size(0, &c, &e).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn step_bound_halves_when_data_scaled() {
        // doubling the Hessian (X scaled by sqrt 2) halves the bound
        let e = sample_ensemble(10, 4, 6, 1).unwrap();
        let scaled = CostEnsemble::new(
            e.costs()
                .iter()
                .map(|c| QuadraticCost::new(c.x() * std::f64::consts::SQRT_2, c.y().clone()).unwrap())
                .collect(),
            0,
        )
        .unwrap();
        let t = generate_topology(10, 3.0, 1).unwrap();
        let c = build_c(&t, CombinationRule::Averaging).unwrap();
        for k in 0..10 {
            let a = max_step_size(k, &c, &e).unwrap();
            let b = max_step_size(k, &c, &scaled).unwrap();
            assert!((b / a - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn assumption1_examples() {
        let e = sample_ensemble(6, 3, 5, 4).unwrap();
        let eye = CombinationMatrix::identity(6);
        assert!(check_assumption1(&eye, &e).unwrap().satisfied);

        let mut costs = e.costs().to_vec();
        costs[2] = QuadraticCost::new(DenseMatrix::zeros(5, 3), DenseVector::zeros(5)).unwrap();
        let degenerate = CostEnsemble::new(costs, 0).unwrap();
        let r = check_assumption1(&eye, &degenerate).unwrap();
        assert!(!r.satisfied);
        assert_eq!(r.weighted_min[2], 0.0);
        assert!(matches!(
            max_step_size(2, &eye, &degenerate),
            Err(CostError::WeightedCurvature { node: 2, .. })
        ));

        let t = generate_topology(6, 2.0, 3).unwrap();
        let c = build_c(&t, CombinationRule::Averaging).unwrap();
        assert!(check_assumption1(&c, &e).unwrap().satisfied);
    }

    #[test]
    fn bundle_round_trip_exact() {
        let e = sample_ensemble(4, 3, 5, 21).unwrap();
        let text = e.to_bundle().unwrap();
        assert!(text.starts_with("4 3 5\n"));
        let back = CostEnsemble::from_bundle(&text, 21).unwrap();
        assert_eq!(back, e);
        assert!(CostEnsemble::from_bundle("2 1 1\n1.0 2.0\n", 0).is_err());
    }
}
