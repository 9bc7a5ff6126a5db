use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::Basis;
use crate::error::{Error, Result};
use crate::geometry::{CirclePoint, Region};
use crate::quadrature::{gauss_interval, QuadratureRule};
use crate::weight::Weight;

/// Polynomials orthonormalized by an Arnoldi process against a discrete
/// weighted measure. Monomials on a thin cap stall around three digits;
/// the recurrence keeps the basis well conditioned at high degree.
///
/// `q_{k+1} = (u q_k - sum_{j<=k} H_{jk} q_j) / H_{k+1,k}`, `u = (z - c)/s`.
pub struct ArnoldiBasis {
    region: Box<dyn Region>,
    center: CirclePoint,
    scale: f64,
    h: DMatrix<Complex64>,
    h0: f64,
    degree: usize,
    max_derivative: usize,
}

impl std::fmt::Debug for ArnoldiBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ArnoldiBasis")
            .field("center", &self.center)
            .field("scale", &self.scale)
            .field("degree", &self.degree)
            .finish()
    }
}

impl ArnoldiBasis {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        region: impl Region + 'static,
        rule: &QuadratureRule,
        weight: &Weight,
        center: CirclePoint,
        scale: f64,
        degree: usize,
        max_derivative: usize,
    ) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidDegreeCap);
        }
        let (nodes, sqrt_w): (Vec<_>, Vec<_>) = rule
            .nodes()
            .map(|(z, w)| {
                let mu = weight.eval(z);
                (z, (w * mu).sqrt())
            })
            .unzip();
        if let Some((i, _)) = sqrt_w.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteIntegrand { re: nodes[i].re, im: nodes[i].im });
        }
        let m = nodes.len();
        let u: Vec<Complex64> = nodes.iter().map(|z| (z - center) / scale).collect();

        let mut q = DMatrix::<Complex64>::zeros(m, degree + 1);
        let mut h = DMatrix::<Complex64>::zeros(degree + 2, degree + 1);
        let h0 = sqrt_w.iter().map(|w| w * w).sum::<f64>().sqrt();
        for (i, w) in sqrt_w.iter().enumerate() {
            q[(i, 0)] = Complex64::new(w / h0, 0.0);
        }
        for k in 0..degree {
            let mut v = DVector::from_iterator(m, (0..m).map(|i| u[i] * q[(i, k)]));
            for _ in 0..2 {
                let basis = q.columns(0, k + 1);
                let coeffs: Vec<Complex64> = (0..=k)
                    .into_par_iter()
                    .map(|j| basis.column(j).dotc(&v))
                    .collect();
                for (j, c) in coeffs.iter().enumerate() {
                    h[(j, k)] += c;
                    v.axpy(-*c, &basis.column(j), Complex64::new(1.0, 0.0));
                }
            }
            let nrm = v.norm();
            if !(nrm.is_finite() && nrm > 0.0) {
                return Err(Error::IllConditioned { condition: f64::INFINITY });
            }
            h[(k + 1, k)] = Complex64::new(nrm, 0.0);
            q.column_mut(k + 1).copy_from(&(v / Complex64::new(nrm, 0.0)));
        }
        Ok(ArnoldiBasis { region: Box::new(region), center, scale, h, h0, degree, max_derivative })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// All derivatives `0..=d` of every element at `z`; row `p` holds order `p`.
    fn derivative_table(&self, z: CirclePoint, d: usize) -> Vec<Vec<Complex64>> {
        let n = self.degree + 1;
        let u = (z - self.center) / self.scale;
        let mut table = vec![vec![Complex64::new(0.0, 0.0); n]; d + 1];
        table[0][0] = Complex64::new(1.0 / self.h0, 0.0);
        for k in 0..self.degree {
            let sub = self.h[(k + 1, k)];
            for p in 0..=d {
                let mut v = u * table[p][k];
                if p > 0 {
                    v += table[p - 1][k] * (p as f64 / self.scale);
                }
                for j in 0..=k {
                    v -= self.h[(j, k)] * table[p][j];
                }
                table[p][k + 1] = v / sub;
            }
        }
        table
    }
}

impl Basis for ArnoldiBasis {
    fn len(&self) -> usize {
        self.degree + 1
    }

    fn max_derivative(&self) -> usize {
        self.max_derivative
    }

    fn eval_deriv(&self, z: CirclePoint, d: usize, out: &mut [Complex64]) {
        let table = self.derivative_table(z, d);
        out.copy_from_slice(&table[d]);
    }

    /// Straight-line integral from the center; exact for the degree.
    fn primitive(&self, z: CirclePoint, out: &mut [Complex64]) {
        let (ts, ws) = gauss_interval(self.degree / 2 + 2, 0.0, 1.0);
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        let dz = z - self.center;
        for (t, w) in ts.iter().zip(&ws) {
            let row = &self.derivative_table(self.center + dz * *t, 0)[0];
            for (o, v) in out.iter_mut().zip(row) {
                *o += v * dz * *w;
            }
        }
    }

    fn region(&self) -> &dyn Region {
        self.region.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Disc, Lens};
    use crate::quadrature::build_lens_rule;

    #[test]
    fn orthonormal_on_the_building_measure() {
        let lens = Lens::new(Disc::unit(), Complex64::new(1.0, 0.0), 0.3).unwrap();
        let rule = build_lens_rule(&lens, 40, 40).unwrap();
        let zc = lens.centroid_guess();
        let b = ArnoldiBasis::new(lens, &rule, &Weight::unit(), zc, 0.7f64.acos().sin(), 30, 2).unwrap();
        let vals: Vec<Vec<Complex64>> = rule.nodes().map(|(z, _)| b.derivs(z, 0)).collect();
        let ws: Vec<f64> = rule.nodes().map(|(_, w)| w).collect();
        for j in 0..b.len() {
            for k in 0..b.len() {
                let g: Complex64 = vals.iter().zip(&ws).map(|(v, w)| v[j] * v[k].conj() * *w).sum();
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((g - want).norm() < 1e-10, "{j} {k} {g}");
            }
        }
    }

    #[test]
    fn derivatives_and_primitives_are_consistent() {
        let lens = Lens::new(Disc::unit(), Complex64::new(0.0, 1.0), 0.5).unwrap();
        let rule = build_lens_rule(&lens, 24, 24).unwrap();
        let zc = lens.centroid_guess();
        let b = ArnoldiBasis::new(lens, &rule, &Weight::unit(), zc, 0.8, 12, 3).unwrap();
        let z = Complex64::new(0.1, 0.8);
        let h = 1e-5;
        for d in 1..=3 {
            let exact = b.derivs(z, d);
            let (p, m) = (b.derivs(z + h, d - 1), b.derivs(z - h, d - 1));
            for j in 0..b.len() {
                let fd = (p[j] - m[j]) / (2.0 * h);
                assert!((fd - exact[j]).norm() < 1e-6 * (1.0 + exact[j].norm()));
            }
        }
        let mut p1 = vec![Complex64::new(0.0, 0.0); b.len()];
        let mut p2 = p1.clone();
        b.primitive(z + h, &mut p1);
        b.primitive(z - h, &mut p2);
        let v = b.derivs(z, 0);
        for j in 0..b.len() {
            assert!(((p1[j] - p2[j]) / (2.0 * h) - v[j]).norm() < 1e-7 * (1.0 + v[j].norm()));
        }
    }
}
