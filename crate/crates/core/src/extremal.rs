//! Constrained least-norm problems over a truncated derivative space.
//!
//! The unknown is `f' = sum_j c_j b_j`. With `y = conj(c)` the squared norm
//! is `y^H G y` and the point conditions `(f')^{(k)}(zeta) = delta_{k,n-1}`
//! read `conj(C) y = e_n`, `C_kj = b_j^{(k)}(zeta)`. The vanishing of `f`
//! itself at `zeta` is a normalization of the primitive, not a constraint.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::basis::{Basis, GramMatrix};
use crate::error::{Error, Result};
use crate::geometry::{ensure_finite, outside, CirclePoint};

const KKT_CONDITION_LIMIT: f64 = 1e12;
const RANK_TOL: f64 = 1e-12;
const CHARACTERIZATION_TOL: f64 = 1e-8;

#[derive(Clone)]
pub struct ExtremalProblem {
    basis: Arc<dyn Basis>,
    zeta: CirclePoint,
    n: usize,
    constraints: DMatrix<Complex64>,
}

impl std::fmt::Debug for ExtremalProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExtremalProblem").field("zeta", &self.zeta).field("n", &self.n).finish()
    }
}

impl ExtremalProblem {
    pub fn new(basis: Arc<dyn Basis>, zeta: CirclePoint, n: usize) -> Result<Self> {
        ensure_finite(zeta)?;
        if n == 0 {
            return Err(Error::InvalidKernelOrder { n, min: 1 });
        }
        if !basis.region().contains(zeta) {
            return Err(outside(zeta));
        }
        basis.check_derivative(n - 1)?;
        let rows: Vec<Vec<Complex64>> = (0..n).map(|k| basis.derivs(zeta, k)).collect();
        let constraints = DMatrix::from_fn(n, basis.len(), |k, j| rows[k][j]);
        Ok(ExtremalProblem { basis, zeta, n, constraints })
    }

    pub fn zeta(&self) -> CirclePoint {
        self.zeta
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &dyn Basis {
        self.basis.as_ref()
    }

    pub fn constraints(&self) -> &DMatrix<Complex64> {
        &self.constraints
    }

    /// `(f')^{(k)}(zeta)` for `k = 0..n-1`, i.e. `f^{(k+1)}(zeta)`.
    pub fn point_values(&self, c: &DVector<Complex64>) -> DVector<Complex64> {
        &self.constraints * c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalSolution {
    /// Coefficients of `f'` over the basis.
    pub coefficients: DVector<Complex64>,
    pub min_norm_sq: f64,
    /// `1 / min_norm_sq`, the diagonal value of the order-`n` kernel derivative.
    pub kernel_diag: f64,
}

/// `||sum_j c_j b_j||^2`.
pub fn norm_sq(gram: &GramMatrix, c: &DVector<Complex64>) -> f64 {
    let y = c.map(|v| v.conj());
    (y.adjoint() * gram.entries() * &y)[(0, 0)].re
}

pub fn solve_extremal(problem: &ExtremalProblem, gram: &GramMatrix) -> Result<ExtremalSolution> {
    let m = problem.basis.len();
    let n = problem.n;
    if gram.dim() != m {
        return Err(Error::InvalidExperiment(format!("Gram dimension {} does not match basis size {m}", gram.dim())));
    }
    let g = gram.entries();
    let s: Vec<f64> = (0..m).map(|j| 1.0 / g[(j, j)].re.max(f64::MIN_POSITIVE).sqrt()).collect();
    let a = problem.constraints.map(|v| v.conj());
    let row_scale: Vec<f64> = (0..n)
        .map(|k| {
            let norm = (0..m).map(|j| (a[(k, j)] * s[j]).norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 { 1.0 / norm } else { 1.0 }
        })
        .collect();
    let a_scaled = DMatrix::from_fn(n, m, |k, j| a[(k, j)] * (s[j] * row_scale[k]));

    let sv = a_scaled.clone().svd(false, false).singular_values;
    let (smin, smax) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(smin > RANK_TOL * smax) {
        return Err(Error::RankDeficientConstraints);
    }

    // [S G S, A'^H; A', 0] [y'; lambda] = [0; R e_n], y = S y'.
    let dim = m + n;
    let kkt = DMatrix::from_fn(dim, dim, |i, j| match (i < m, j < m) {
        (true, true) => g[(i, j)] * (s[i] * s[j]),
        (true, false) => a_scaled[(j - m, i)].conj(),
        (false, true) => a_scaled[(i - m, j)],
        (false, false) => Complex64::new(0.0, 0.0),
    });
    let svals = kkt.clone().svd(false, false).singular_values;
    let (lo, hi) = svals.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition > KKT_CONDITION_LIMIT {
        return Err(Error::IllConditioned { condition });
    }
    let mut rhs = DVector::<Complex64>::zeros(dim);
    rhs[m + n - 1] = Complex64::new(row_scale[n - 1], 0.0);
    let sol = kkt.lu().solve(&rhs).ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
    let coefficients = DVector::from_fn(m, |j, _| (sol[j] * s[j]).conj());
    let min_norm_sq = norm_sq(gram, &coefficients);
    if !(min_norm_sq > 0.0) {
        return Err(Error::NegativeDiagonal { value: min_norm_sq });
    }
    Ok(ExtremalSolution { coefficients, min_norm_sq, kernel_diag: 1.0 / min_norm_sq })
}

/// `M_{D,mu,n}(., zeta) = kernel_diag * f` with `f` the minimizer, its
/// primitive pinned to vanish at `zeta`.
#[derive(Clone)]
pub struct KernelFunction {
    basis: Arc<dyn Basis>,
    zeta: CirclePoint,
    coefficients: DVector<Complex64>,
    offset: DVector<Complex64>,
}

impl KernelFunction {
    pub fn coefficients(&self) -> &DVector<Complex64> {
        &self.coefficients
    }

    pub fn value(&self, z: CirclePoint) -> Complex64 {
        let mut p = vec![Complex64::new(0.0, 0.0); self.basis.len()];
        self.basis.primitive(z, &mut p);
        let p = DVector::from_vec(p) - &self.offset;
        p.dot(&self.coefficients)
    }

    /// `M^{(d)}(z)`; `d = 1` is the order-`n` kernel `K_n(z, zeta)`.
    pub fn deriv(&self, z: CirclePoint, d: usize) -> Complex64 {
        if d == 0 {
            return self.value(z);
        }
        DVector::from_vec(self.basis.derivs(z, d - 1)).dot(&self.coefficients)
    }

    pub fn zeta(&self) -> CirclePoint {
        self.zeta
    }
}

pub fn kernel_function_m(problem: &ExtremalProblem, solution: &ExtremalSolution) -> KernelFunction {
    let mut p = vec![Complex64::new(0.0, 0.0); problem.basis.len()];
    problem.basis.primitive(problem.zeta, &mut p);
    KernelFunction {
        basis: problem.basis.clone(),
        zeta: problem.zeta,
        coefficients: &solution.coefficients * Complex64::new(solution.kernel_diag, 0.0),
        offset: DVector::from_vec(p),
    }
}

/// Membership in `{f^{(n)}(zeta) >= 0, ||f||^2 <= f^{(n)}(zeta)}` plus
/// dominance `f^{(n)}(zeta) >= K^{(n-1)}(zeta, zeta)`; together these force
/// `f` to be the kernel function.
pub fn characterization_check(
    candidate: &DVector<Complex64>,
    problem: &ExtremalProblem,
    gram: &GramMatrix,
    solution: &ExtremalSolution,
) -> bool {
    let vals = problem.point_values(candidate);
    let n = problem.n;
    let top = vals[n - 1];
    let scale = solution.kernel_diag.max(top.norm());
    let vanishes = (0..n - 1).all(|k| vals[k].norm() <= CHARACTERIZATION_TOL * scale.max(1.0));
    let nonnegative = top.im.abs() <= CHARACTERIZATION_TOL * scale && top.re >= -CHARACTERIZATION_TOL * scale;
    let bounded = norm_sq(gram, candidate) <= top.re + CHARACTERIZATION_TOL * scale;
    let dominant = top.re >= solution.kernel_diag * (1.0 - CHARACTERIZATION_TOL);
    vanishes && nonnegative && bounded && dominant
}
