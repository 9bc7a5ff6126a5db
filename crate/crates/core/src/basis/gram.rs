use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::Basis;
use crate::error::{Error, Result};
use crate::quadrature::{Panel, PanelShape, PolarGrid, QuadratureRule};
use crate::weight::Weight;

pub const DEFAULT_CONDITION_LIMIT: f64 = 1e12;
const EIGEN_CUTOFF: f64 = 1e-13;
const NEGATIVE_RIPPLE: f64 = 1e-12;
const DENSE_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramOptions {
    /// Condition estimates above this are rejected, unless truncation is allowed.
    pub condition_limit: f64,
    /// Fall back to a truncated eigendecomposition instead of failing.
    pub allow_truncation: bool,
}

impl Default for GramOptions {
    fn default() -> Self {
        GramOptions { condition_limit: DEFAULT_CONDITION_LIMIT, allow_truncation: false }
    }
}

#[derive(Debug, Clone)]
enum Factor {
    /// `S G S = L L^H`.
    Cholesky(DMatrix<Complex64>),
    /// `A = Lambda^{-1/2} U^H`, kept eigenpairs only.
    Eigen(DMatrix<Complex64>),
}

/// Hermitian Gram matrix `G[j][k] = <b_j, b_k>` with a whitening map that
/// turns basis values into values of an orthonormal family.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    entries: DMatrix<Complex64>,
    scale: Vec<f64>,
    factor: Factor,
    condition: f64,
}

impl GramMatrix {
    pub fn from_entries(entries: DMatrix<Complex64>, options: GramOptions) -> Result<Self> {
        let n = entries.nrows();
        for j in 0..n {
            for k in 0..n {
                let v = entries[(j, k)];
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFiniteEntry { row: j, col: k });
                }
            }
        }
        let scale: Vec<f64> = (0..n)
            .map(|j| {
                let d = entries[(j, j)].re;
                if d > 0.0 { 1.0 / d.sqrt() } else { 1.0 }
            })
            .collect();
        let scaled = DMatrix::from_fn(n, n, |j, k| entries[(j, k)] * (scale[j] * scale[k]));

        // A complex Cholesky may "succeed" on an indefinite matrix by taking
        // square roots of negative pivots; only real positive pivots count.
        let factored = scaled.clone().cholesky().map(|ch| ch.unpack()).filter(|l| {
            (0..n).all(|i| l[(i, i)].im.abs() <= 1e-14 * l[(i, i)].re.abs() && l[(i, i)].re > 0.0)
        });
        if let Some(l) = factored {
            let diag: Vec<f64> = (0..n).map(|i| l[(i, i)].re).collect();
            let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
            let condition = (hi / lo).powi(2);
            if condition <= options.condition_limit {
                return Ok(GramMatrix { entries, scale, factor: Factor::Cholesky(l), condition });
            }
            if !options.allow_truncation {
                return Err(Error::IllConditioned { condition });
            }
        }

        let eig = scaled.symmetric_eigen();
        let lmax = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
        let lmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if !(lmax > 0.0) || lmin < -NEGATIVE_RIPPLE * lmax {
            return Err(Error::NotPositiveDefinite { ratio: if lmax > 0.0 { lmin / lmax } else { lmin } });
        }
        let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
        if !options.allow_truncation && condition > options.condition_limit {
            return Err(Error::IllConditioned { condition });
        }
        let kept: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] >= EIGEN_CUTOFF * lmax).collect();
        let a = DMatrix::from_fn(kept.len(), n, |r, c| {
            let i = kept[r];
            eig.eigenvectors[(c, i)].conj() / eig.eigenvalues[i].sqrt()
        });
        Ok(GramMatrix { entries, scale, factor: Factor::Eigen(a), condition })
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self.factor, Factor::Eigen(_))
    }

    /// Maps basis values `b(z)` to orthonormal-family values `phi(z)`.
    pub fn whiten(&self, values: &[Complex64]) -> DVector<Complex64> {
        let v = DVector::from_iterator(values.len(), values.iter().zip(&self.scale).map(|(v, s)| v * *s));
        match &self.factor {
            Factor::Cholesky(l) => l.solve_lower_triangular(&v).expect("Cholesky factor has a positive diagonal"),
            Factor::Eigen(a) => a * v,
        }
    }
}

/// Assembles `G[j][k] = sum_i w_i mu(z_i) b_j(z_i) conj(b_k(z_i))`.
pub fn gram_matrix(
    basis: &dyn Basis,
    weight: &Weight,
    rule: &QuadratureRule,
    options: GramOptions,
) -> Result<GramMatrix> {
    GramMatrix::from_entries(assemble(basis, weight, rule)?, options)
}

pub(crate) fn assemble(basis: &dyn Basis, weight: &Weight, rule: &QuadratureRule) -> Result<DMatrix<Complex64>> {
    let n = basis.len();
    let mut g = DMatrix::<Complex64>::zeros(n, n);
    let powers = basis.power_structure();
    for panel in &rule.panels {
        let mu = weights_at_nodes(weight, panel)?;
        match (&panel.shape, &powers) {
            (PanelShape::Polar(grid), Some((c, p))) if (grid.center - c).norm() <= 1e-12 * (1.0 + c.norm()) => {
                g += polar_block(grid, p, &mu);
            }
            _ => g += dense_block(basis, panel, &mu)?,
        }
    }
    // Exact Hermitian symmetry: keep the upper triangle, mirror it.
    for j in 0..n {
        g[(j, j)].im = 0.0;
        for k in (j + 1)..n {
            g[(k, j)] = g[(j, k)].conj();
        }
    }
    Ok(g)
}

fn weights_at_nodes(weight: &Weight, panel: &Panel) -> Result<Vec<f64>> {
    panel
        .nodes
        .iter()
        .map(|z| {
            let v = weight.eval(*z);
            if !v.is_finite() {
                Err(Error::NonFiniteIntegrand { re: z.re, im: z.im })
            } else if v <= 0.0 {
                Err(Error::InvalidWeight(format!("weight {v} is not positive at ({}, {})", z.re, z.im)))
            } else {
                Ok(v)
            }
        })
        .collect()
}

/// Separable assembly for power bases on a polar grid about their center:
/// `G_jk = sum_a w_a T_aj T_ak S_a(m_j - m_k)` with `T_aj = (r_a/s_j)^{m_j}`
/// and `S_a(d) = sum_b mu_ab e^{i d theta_b} dtheta` obtained by one FFT per
/// radius. Cost drops from `O(nodes * n^2)` to `O(radii * n^2)`.
fn polar_block(grid: &PolarGrid, powers: &[(f64, i64)], mu: &[f64]) -> DMatrix<Complex64> {
    let nt = grid.n_theta;
    let nr = grid.radii.len();
    let n = powers.len();
    let dt = grid.angular_weight();

    let fft = FftPlanner::<f64>::new().plan_fft_inverse(nt);
    let spectra: Vec<Vec<Complex64>> = (0..nr)
        .into_par_iter()
        .map(|a| {
            let mut buf: Vec<Complex64> = mu[a * nt..(a + 1) * nt].iter().map(|&m| Complex64::new(m * dt, 0.0)).collect();
            Arc::clone(&fft).process(&mut buf);
            buf
        })
        .collect();

    let phase = |d: i64| Complex64::from_polar(1.0, d as f64 * grid.theta0);
    let t: Vec<Vec<f64>> = (0..nr)
        .map(|a| powers.iter().map(|(s, m)| (grid.radii[a] / s).powi(*m as i32)).collect())
        .collect();

    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mj = powers[j].1;
            (0..n)
                .map(|k| {
                    if k < j {
                        return Complex64::new(0.0, 0.0);
                    }
                    let d = mj - powers[k].1;
                    let idx = d.rem_euclid(nt as i64) as usize;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for a in 0..nr {
                        let tt = grid.radial_weights[a] * t[a][j] * t[a][k];
                        if tt != 0.0 {
                            acc += spectra[a][idx] * tt;
                        }
                    }
                    acc * phase(d)
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(n, n, |j, k| rows[j][k])
}

/// `B^H W B` through real matrix products, chunked over nodes.
fn dense_block(basis: &dyn Basis, panel: &Panel, mu: &[f64]) -> Result<DMatrix<Complex64>> {
    let n = basis.len();
    let chunks: Vec<(usize, usize)> =
        (0..panel.len()).step_by(DENSE_CHUNK).map(|s| (s, (s + DENSE_CHUNK).min(panel.len()))).collect();
    let parts: Vec<Result<(DMatrix<f64>, DMatrix<f64>)>> = chunks
        .par_iter()
        .map(|&(s, e)| {
            let m = e - s;
            let mut x = DMatrix::<f64>::zeros(m, n);
            let mut y = DMatrix::<f64>::zeros(m, n);
            let mut vals = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..m {
                let z = panel.nodes[s + i];
                basis.eval_deriv(z, 0, &mut vals);
                let sw = (panel.weights[s + i] * mu[s + i]).sqrt();
                for (j, v) in vals.iter().enumerate() {
                    if !(v.re.is_finite() && v.im.is_finite()) {
                        return Err(Error::NonFiniteIntegrand { re: z.re, im: z.im });
                    }
                    x[(i, j)] = v.re * sw;
                    y[(i, j)] = v.im * sw;
                }
            }
            let re = x.tr_mul(&x) + y.tr_mul(&y);
            let im = x.tr_mul(&y) - y.tr_mul(&x);
            Ok((re, im))
        })
        .collect();
    let mut re = DMatrix::<f64>::zeros(n, n);
    let mut im = DMatrix::<f64>::zeros(n, n);
    for part in parts {
        let (r, i) = part?;
        re += r;
        im += i;
    }
    Ok(DMatrix::from_fn(n, n, |j, k| Complex64::new(re[(j, k)], im[(j, k)])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSet;
    use crate::geometry::{CircleDomain, Disc};
    use crate::quadrature::build_rule;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn disc_unit_weight_is_diagonal() {
        let d = CircleDomain::unit_disc();
        let b = BasisSet::new(&d, 3, 0).unwrap();
        let rule = build_rule(&d, 32, 256).unwrap();
        let g = gram_matrix(&b, &Weight::unit(), &rule, GramOptions::default()).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                let v = g.entries()[(j, k)];
                if j == k {
                    assert!((v.re - PI / (k as f64 + 1.0)).abs() < 1e-12);
                } else {
                    assert!(v.norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn radial_weight_moments() {
        let d = CircleDomain::unit_disc();
        let b = BasisSet::new(&d, 3, 0).unwrap();
        let rule = build_rule(&d, 32, 256).unwrap();
        let w = Weight::radial_power(c(0.0, 0.0), 2.0).unwrap();
        let g = gram_matrix(&b, &w, &rule, GramOptions::default()).unwrap();
        for k in 0..4 {
            assert!((g.entries()[(k, k)].re - PI / (k as f64 + 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn fast_and_dense_paths_agree() {
        let a = CircleDomain::annulus(0.5, 1.0).unwrap();
        let b = BasisSet::new(&a, 6, 0).unwrap();
        let rule = build_rule(&a, 24, 64).unwrap();
        let w = Weight::builtin("two-plus-re").unwrap();
        let fast = assemble(&b, &w, &rule).unwrap();
        let mut dense = DMatrix::zeros(b.len(), b.len());
        for p in &rule.panels {
            dense += dense_block(&b, p, &weights_at_nodes(&w, p).unwrap()).unwrap();
        }
        for j in 0..b.len() {
            for k in j..b.len() {
                assert!((fast[(j, k)] - dense[(j, k)]).norm() < 1e-13, "{j} {k}");
            }
        }
        // <z, z^-2> vanishes for the constant weight
        let g = assemble(&b, &Weight::unit(), &rule).unwrap();
        assert!(g[(1, 7)].norm() < 1e-10);
    }

    #[test]
    fn laurent_moments_on_annulus() {
        let rho: f64 = 0.5;
        let a = CircleDomain::annulus(rho, 1.0).unwrap();
        let b = BasisSet::new(&a, 8, 0).unwrap();
        let rule = build_rule(&a, 32, 256).unwrap();
        let g = assemble(&b, &Weight::unit(), &rule).unwrap();
        for (j, e) in b.elements().iter().enumerate() {
            // int |z|^{2m} over the annulus, with the element's normalization
            let m = e.power as f64;
            let raw = if e.power == -1 { 2.0 * PI * (1.0 / rho).ln() } else { PI * (1.0 - rho.powf(2.0 * m + 2.0)) / (m + 1.0) };
            let exact = raw / e.scale.powf(2.0 * m);
            assert!((g[(j, j)].re / exact - 1.0).abs() < 1e-9, "{j}");
        }
    }

    #[test]
    fn entries_are_hermitian_and_equivariant() {
        let holes = vec![Disc::new(c(0.4, 0.1), 0.2).unwrap()];
        let d = CircleDomain::new(Disc::unit(), holes).unwrap();
        let b = BasisSet::new(&d, 4, 0).unwrap();
        let rule = build_rule(&d, 16, 32).unwrap();
        let g = assemble(&b, &Weight::unit(), &rule).unwrap();
        assert_eq!(g, g.adjoint());
        let order: Vec<usize> = (0..b.len()).rev().collect();
        let gp = assemble(&b.permuted(&order), &Weight::unit(), &rule).unwrap();
        for j in 0..b.len() {
            for k in 0..b.len() {
                assert!((gp[(j, k)] - g[(order[j], order[k])]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn non_finite_entries_and_indefinite_matrices_rejected() {
        let mut m = DMatrix::<Complex64>::identity(3, 3);
        m[(1, 2)] = c(f64::NAN, 0.0);
        assert_eq!(
            GramMatrix::from_entries(m, GramOptions::default()).unwrap_err(),
            Error::NonFiniteEntry { row: 1, col: 2 }
        );
        let mut m = DMatrix::<Complex64>::identity(2, 2);
        m[(0, 1)] = c(2.0, 0.0);
        m[(1, 0)] = c(2.0, 0.0);
        assert!(matches!(
            GramMatrix::from_entries(m, GramOptions::default()),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn ill_conditioning_detected_and_truncated_on_request() {
        let mut m = DMatrix::<Complex64>::identity(2, 2);
        m[(0, 1)] = c(1.0 - 1e-14, 0.0);
        m[(1, 0)] = c(1.0 - 1e-14, 0.0);
        assert!(matches!(
            GramMatrix::from_entries(m.clone(), GramOptions::default()),
            Err(Error::IllConditioned { .. })
        ));
        let g = GramMatrix::from_entries(m, GramOptions { allow_truncation: true, ..Default::default() }).unwrap();
        assert!(g.is_truncated());
        assert_eq!(g.whiten(&[c(1.0, 0.0), c(0.0, 0.0)]).len(), 1);
    }
}
