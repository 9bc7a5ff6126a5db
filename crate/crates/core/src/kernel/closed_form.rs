//! Exact kernels of the unweighted unit disc.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{ensure_finite, outside, CirclePoint, GEOMETRY_TOL};

fn check_point(z: CirclePoint) -> Result<()> {
    ensure_finite(z)?;
    if z.norm() >= 1.0 - GEOMETRY_TOL {
        return Err(outside(z));
    }
    Ok(())
}

fn check_order(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidKernelOrder { n, min: 1 });
    }
    Ok(())
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `K_n(xi, zeta) = (n!/pi) (xi - zeta)^{n-1} / ((1 - conj(zeta) xi)^{n+1} (1 - |zeta|^2)^{n-1})`.
pub fn disc_kernel_n(xi: CirclePoint, zeta: CirclePoint, n: usize) -> Result<Complex64> {
    check_order(n)?;
    check_point(xi)?;
    check_point(zeta)?;
    let m = n as i32;
    let num = (xi - zeta).powi(m - 1) * (factorial(n) / PI);
    let den = (1.0 - zeta.conj() * xi).powi(m + 1) * (1.0 - zeta.norm_sqr()).powi(m - 1);
    Ok(num / den)
}

/// `(n-1)`-st derivative in the first argument, by the Leibniz rule:
/// `sum_k C(n-1,k)^2 (n+k)! (n-k-1)! conj(w)^k (z-w)^k / (1 - conj(w) z)^{n+k+1}`,
/// over `pi (1 - |w|^2)^{n-1}`.
pub fn disc_kernel_n_deriv(z: CirclePoint, w: CirclePoint, n: usize) -> Result<Complex64> {
    check_order(n)?;
    check_point(z)?;
    check_point(w)?;
    let a = 1.0 - w.conj() * z;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let coeff = binomial(n - 1, k).powi(2) * factorial(n + k) * factorial(n - k - 1);
        sum += (w.conj() * (z - w)).powi(k as i32) * coeff / a.powi((n + k + 1) as i32);
    }
    Ok(sum / (PI * (1.0 - w.norm_sqr()).powi(n as i32 - 1)))
}

/// `p`-th `z`-derivative of `K_n(z, w)`: Leibniz over
/// `(z - w)^{n-1}` and `(1 - conj(w) z)^{-(n+1)}`.
pub fn disc_kernel_n_z_deriv(z: CirclePoint, w: CirclePoint, n: usize, p: usize) -> Result<Complex64> {
    check_order(n)?;
    check_point(z)?;
    check_point(w)?;
    let a = 1.0 - w.conj() * z;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..=p.min(n - 1) {
        let j = p - k;
        // d^k (z-w)^{n-1} and d^j (1 - conj(w) z)^{-(n+1)}
        let left = factorial(n - 1) / factorial(n - 1 - k);
        let right = factorial(n + j) / factorial(n);
        let coeff = binomial(p, k) * left * right;
        sum += (z - w).powi((n - 1 - k) as i32) * w.conj().powi(j as i32) * coeff / a.powi((n + 1 + j) as i32);
    }
    Ok(sum * (factorial(n) / (PI * (1.0 - w.norm_sqr()).powi(n as i32 - 1))))
}

/// `n!(n-1)! / (pi (1 - |z|^2)^{2n})`.
pub fn disc_kernel_diag(z: CirclePoint, n: usize) -> Result<f64> {
    check_order(n)?;
    check_point(z)?;
    Ok(factorial(n) * factorial(n - 1) / (PI * (1.0 - z.norm_sqr()).powi(2 * n as i32)))
}
