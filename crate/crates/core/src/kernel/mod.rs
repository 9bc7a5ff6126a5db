//! Kernel evaluation: closed forms on the disc, truncated series from a Gram
//! factorization, and higher orders through the bordered determinant.

mod closed_form;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::basis::{gram_matrix, Basis, BasisSet, GramMatrix, GramOptions};
use crate::error::{Error, Result};
use crate::geometry::{ensure_finite, outside, CircleDomain, CirclePoint};
use crate::quadrature::{build_rule, DEFAULT_ANGULAR_ORDER, DEFAULT_RADIAL_ORDER};
use crate::weight::Weight;

pub use closed_form::{disc_kernel_diag, disc_kernel_n, disc_kernel_n_deriv, disc_kernel_n_z_deriv};
pub(crate) use closed_form::factorial;

const SINGULAR_MINOR: f64 = 1e-13;
const IMAGINARY_RESIDUE: f64 = 1e-10;
const NEGATIVE_DIAGONAL: f64 = 1e-9;

/// Anything that can produce `K_{D,mu,n}` and its `z`-derivatives.
pub trait KernelSource: Send + Sync {
    /// `p`-th `z`-derivative of `K_{D,mu,n}(z, zeta)`.
    fn kernel_z_deriv(&self, z: CirclePoint, zeta: CirclePoint, n: usize, p: usize) -> Result<Complex64>;

    /// `K^{(n-1)}_{D,mu,n}(z, zeta)`.
    fn kernel_deriv(&self, z: CirclePoint, zeta: CirclePoint, n: usize) -> Result<Complex64> {
        if n == 0 {
            return Err(Error::InvalidKernelOrder { n, min: 1 });
        }
        self.kernel_z_deriv(z, zeta, n, n - 1)
    }
}

/// Closed-form kernels of the unweighted unit disc.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UnitDiscKernel;

impl KernelSource for UnitDiscKernel {
    fn kernel_z_deriv(&self, z: CirclePoint, zeta: CirclePoint, n: usize, p: usize) -> Result<Complex64> {
        disc_kernel_n_z_deriv(z, zeta, n, p)
    }

    fn kernel_deriv(&self, z: CirclePoint, zeta: CirclePoint, n: usize) -> Result<Complex64> {
        disc_kernel_n_deriv(z, zeta, n)
    }
}

impl KernelSource for KernelEvaluator {
    fn kernel_z_deriv(&self, z: CirclePoint, zeta: CirclePoint, n: usize, p: usize) -> Result<Complex64> {
        KernelEvaluator::kernel_z_deriv(self, z, zeta, n, p)
    }

    fn kernel_deriv(&self, z: CirclePoint, zeta: CirclePoint, n: usize) -> Result<Complex64> {
        KernelEvaluator::kernel_deriv(self, z, zeta, n)
    }
}

/// Truncation and quadrature settings for a Gram-backed evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    pub outer_cap: usize,
    pub hole_cap: usize,
    pub max_derivative: usize,
    pub radial_order: usize,
    pub angular_order: usize,
    pub gram: GramOptions,
}

impl KernelConfig {
    pub const DISC_CAP: usize = 24;
    pub const HOLE_CAP: usize = 16;

    /// Defaults: cap 24 without holes, 16 with holes; 32 x 256 quadrature.
    pub fn for_domain(domain: &CircleDomain) -> Self {
        let cap = if domain.holes().is_empty() { Self::DISC_CAP } else { Self::HOLE_CAP };
        KernelConfig {
            outer_cap: cap,
            hole_cap: cap,
            max_derivative: 4,
            radial_order: DEFAULT_RADIAL_ORDER,
            angular_order: DEFAULT_ANGULAR_ORDER,
            gram: GramOptions::default(),
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.outer_cap = cap;
        self.hole_cap = cap;
        self
    }

    pub fn with_quadrature(mut self, radial: usize, angular: usize) -> Self {
        self.radial_order = radial;
        self.angular_order = angular;
        self
    }
}

/// Finite-rank reproducing kernel of the span of a basis.
#[derive(Clone)]
pub struct KernelEvaluator {
    basis: Arc<dyn Basis>,
    gram: GramMatrix,
    weight: Weight,
    zero_set_empty: bool,
}

impl std::fmt::Debug for KernelEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelEvaluator")
            .field("dim", &self.basis.len())
            .field("weight", &self.weight)
            .field("condition", &self.gram.condition_estimate())
            .finish()
    }
}

/// `K_{j,k}(z, zeta) = d^j_z d^k_{conj zeta} K(z, zeta)` for the first row
/// and the diagonal block at `zeta`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeMatrix {
    pub order: usize,
    pub row: Vec<Complex64>,
    pub diagonal: DMatrix<Complex64>,
}

impl DerivativeMatrix {
    /// `J_m = det(K_{j,k}(zeta, zeta))_{j,k=0..m}`.
    pub fn leading_minor(&self, m: usize) -> Complex64 {
        self.diagonal.view((0, 0), (m + 1, m + 1)).into_owned().determinant()
    }

    /// Bordered matrix: first row from `row`, then diagonal rows `0..n-2`.
    pub fn bordered(&self) -> DMatrix<Complex64> {
        let n = self.order;
        DMatrix::from_fn(n, n, |i, k| if i == 0 { self.row[k] } else { self.diagonal[(i - 1, k)] })
    }
}

impl KernelEvaluator {
    pub fn new(basis: Arc<dyn Basis>, gram: GramMatrix, weight: Weight) -> Result<Self> {
        if gram.dim() != basis.len() {
            return Err(Error::InvalidExperiment(format!(
                "Gram dimension {} does not match basis size {}",
                gram.dim(),
                basis.len()
            )));
        }
        let zero_set_empty = weight.is_l1();
        Ok(KernelEvaluator { basis, gram, weight, zero_set_empty })
    }

    /// Laurent basis, quadrature rule and Gram factorization in one go.
    pub fn for_domain(domain: &CircleDomain, weight: &Weight, config: &KernelConfig) -> Result<Self> {
        let basis = BasisSet::with_caps(domain, config.outer_cap, config.hole_cap, config.max_derivative)?;
        let rule = build_rule(domain, config.radial_order, config.angular_order)?;
        let gram = gram_matrix(&basis, weight, &rule, config.gram)?;
        Self::new(Arc::new(basis), gram, weight.clone())
    }

    pub fn basis(&self) -> &dyn Basis {
        self.basis.as_ref()
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn zero_set_empty(&self) -> bool {
        self.zero_set_empty
    }

    fn check_point(&self, z: CirclePoint) -> Result<()> {
        ensure_finite(z)?;
        if !self.basis.region().contains(z) {
            return Err(outside(z));
        }
        Ok(())
    }

    /// Derivatives of an orthonormal family of the span at `z`.
    pub fn orthonormal_values(&self, z: CirclePoint, d: usize) -> Result<DVector<Complex64>> {
        self.check_point(z)?;
        self.basis.check_derivative(d)?;
        Ok(self.gram.whiten(&self.basis.derivs(z, d)))
    }

    /// `d^dz_z d^dwbar_{conj w} K(z, w)`.
    pub fn eval(&self, z: CirclePoint, w: CirclePoint, dz: usize, dwbar: usize) -> Result<Complex64> {
        let a = self.orthonormal_values(z, dz)?;
        let b = self.orthonormal_values(w, dwbar)?;
        Ok(b.dotc(&a))
    }

    pub fn derivative_matrix(&self, z: CirclePoint, zeta: CirclePoint, n: usize, row_order: usize) -> Result<DerivativeMatrix> {
        let at_zeta: Vec<DVector<Complex64>> =
            (0..n).map(|k| self.orthonormal_values(zeta, k)).collect::<Result<_>>()?;
        let first = self.orthonormal_values(z, row_order)?;
        let row = at_zeta.iter().map(|v| v.dotc(&first)).collect();
        let diagonal = DMatrix::from_fn(n, n, |j, k| at_zeta[k].dotc(&at_zeta[j]));
        Ok(DerivativeMatrix { order: n, row, diagonal })
    }

    fn require_zero_set_empty(&self) -> Result<()> {
        if self.zero_set_empty {
            Ok(())
        } else {
            Err(Error::ZeroSetNonEmpty)
        }
    }

    /// `p`-th `z`-derivative of the `n`-th order kernel through the bordered
    /// determinant; only the first row depends on `z`, so differentiating the
    /// determinant amounts to differentiating that row.
    pub fn kernel_nth_determinant_deriv(&self, z: CirclePoint, zeta: CirclePoint, n: usize, p: usize) -> Result<Complex64> {
        if n < 2 {
            return Err(Error::InvalidKernelOrder { n, min: 2 });
        }
        self.require_zero_set_empty()?;
        let m = self.derivative_matrix(z, zeta, n, p)?;
        let j = m.leading_minor(n - 2);
        let largest = (0..n).map(|i| m.diagonal[(i, i)].re.abs()).fold(0.0, f64::max);
        let scale = largest.powi(n as i32 - 1);
        if !(j.norm() > SINGULAR_MINOR * scale) {
            return Err(Error::SingularMinor { value: j.norm(), scale });
        }
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        Ok(m.bordered().determinant() * sign / j)
    }

    /// `K_{D,mu,n}(z, zeta)`, `n >= 2`.
    pub fn kernel_nth_determinant(&self, z: CirclePoint, zeta: CirclePoint, n: usize) -> Result<Complex64> {
        self.kernel_nth_determinant_deriv(z, zeta, n, 0)
    }

    /// `p`-th `z`-derivative of `K_{D,mu,n}(z, zeta)`.
    pub fn kernel_z_deriv(&self, z: CirclePoint, zeta: CirclePoint, n: usize, p: usize) -> Result<Complex64> {
        match n {
            0 => Err(Error::InvalidKernelOrder { n, min: 1 }),
            1 => self.eval(z, zeta, p, 0),
            _ => self.kernel_nth_determinant_deriv(z, zeta, n, p),
        }
    }

    /// `K^{(n-1)}_{D,mu,n}(z, zeta)`; `n = 1` is the plain kernel.
    pub fn kernel_deriv(&self, z: CirclePoint, zeta: CirclePoint, n: usize) -> Result<Complex64> {
        if n == 0 {
            return Err(Error::InvalidKernelOrder { n, min: 1 });
        }
        self.kernel_z_deriv(z, zeta, n, n - 1)
    }

    /// `K^{(n-1)}_{D,mu,n}(z, z)` as a real number.
    pub fn kernel_diag_deriv(&self, n: usize, z: CirclePoint) -> Result<f64> {
        let v = self.kernel_deriv(z, z, n)?;
        if v.im.abs() > IMAGINARY_RESIDUE * v.re.abs().max(1.0) {
            return Err(Error::IllConditioned { condition: v.im.abs() / v.re.abs() });
        }
        if v.re < -NEGATIVE_DIAGONAL {
            return Err(Error::NegativeDiagonal { value: v.re });
        }
        Ok(v.re.max(0.0))
    }
}
