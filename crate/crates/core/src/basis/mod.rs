//! Bases of the derivative space and their weighted Gram matrices.

mod arnoldi;
mod gram;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{CircleDomain, CirclePoint, Region};

pub use arnoldi::ArnoldiBasis;
pub use gram::{gram_matrix, GramMatrix, GramOptions};

/// A finite family of holomorphic functions `b_j` spanning a subspace of
/// the derivative space, evaluated with closed-form derivatives.
pub trait Basis: Send + Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest derivative order callers may request.
    fn max_derivative(&self) -> usize;

    /// `out[j] = b_j^{(d)}(z)`; `d` is not checked against `max_derivative`.
    fn eval_deriv(&self, z: CirclePoint, d: usize, out: &mut [Complex64]);

    /// Single-valued primitives `B_j` with `B_j' = b_j`, up to constants.
    fn primitive(&self, z: CirclePoint, out: &mut [Complex64]);

    fn region(&self) -> &dyn Region;

    /// `(center, [(scale_j, m_j)])` if every element is `((z - c)/s_j)^{m_j}`
    /// about one common center; enables separable Gram assembly on polar grids.
    fn power_structure(&self) -> Option<(CirclePoint, Vec<(f64, i64)>)> {
        None
    }

    fn check_derivative(&self, d: usize) -> Result<()> {
        if d > self.max_derivative() {
            Err(Error::DerivativeOrderUnsupported { requested: d, available: self.max_derivative() })
        } else {
            Ok(())
        }
    }

    fn derivs(&self, z: CirclePoint, d: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        self.eval_deriv(z, d, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// `((z - c)/R)^k` about the outer center.
    Monomial { k: usize },
    /// `(r_i / (z - q_i))^k`, `k >= 2`; the residue term `k = 1` has a
    /// logarithmic primitive and is excluded.
    NegativePower { hole: usize, k: usize },
}

/// `((z - center)/scale)^power`, normalized so that it is at most 1 in
/// modulus on the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisElement {
    pub kind: BasisKind,
    pub center: CirclePoint,
    pub scale: f64,
    pub power: i64,
}

impl BasisElement {
    fn monomial(center: CirclePoint, radius: f64, k: usize) -> Self {
        BasisElement { kind: BasisKind::Monomial { k }, center, scale: radius, power: k as i64 }
    }

    fn negative(hole: usize, center: CirclePoint, radius: f64, k: usize) -> Self {
        BasisElement { kind: BasisKind::NegativePower { hole, k }, center, scale: radius, power: -(k as i64) }
    }

    pub fn deriv(&self, z: CirclePoint, d: usize) -> Complex64 {
        let u = (z - self.center) / self.scale;
        let m = self.power;
        let mut factor = 1.0;
        for i in 0..d as i64 {
            factor *= (m - i) as f64;
        }
        if factor == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        factor / self.scale.powi(d as i32) * u.powi((m - d as i64) as i32)
    }

    /// `s/(m+1) * u^{m+1}`; never called with `m = -1`.
    pub fn primitive(&self, z: CirclePoint) -> Complex64 {
        let u = (z - self.center) / self.scale;
        let m = self.power;
        self.scale / (m + 1) as f64 * u.powi((m + 1) as i32)
    }
}

/// Laurent-type basis: monomials about the outer center followed by
/// negative powers about each hole, in domain order.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    domain: CircleDomain,
    elements: Vec<BasisElement>,
    outer_cap: usize,
    hole_cap: usize,
    max_derivative: usize,
    reference: CirclePoint,
}

impl BasisSet {
    /// `N + 1` monomials and `N` negative powers per hole.
    pub fn new(domain: &CircleDomain, degree_cap: usize, max_derivative: usize) -> Result<Self> {
        Self::with_caps(domain, degree_cap, degree_cap, max_derivative)
    }

    /// Independent truncation for the outer expansion and the hole expansions.
    pub fn with_caps(
        domain: &CircleDomain,
        outer_cap: usize,
        hole_cap: usize,
        max_derivative: usize,
    ) -> Result<Self> {
        if outer_cap < 1 || (hole_cap < 1 && !domain.holes().is_empty()) {
            return Err(Error::InvalidDegreeCap);
        }
        let outer = domain.outer();
        let mut elements: Vec<_> = (0..=outer_cap).map(|k| BasisElement::monomial(outer.center, outer.radius, k)).collect();
        for (i, h) in domain.holes().iter().enumerate() {
            elements.extend((2..=hole_cap + 1).map(|k| BasisElement::negative(i, h.center, h.radius, k)));
        }
        Ok(BasisSet {
            domain: domain.clone(),
            elements,
            outer_cap,
            hole_cap,
            max_derivative,
            reference: domain.reference_point(),
        })
    }

    pub fn domain(&self) -> &CircleDomain {
        &self.domain
    }

    pub fn elements(&self) -> &[BasisElement] {
        &self.elements
    }

    pub fn outer_cap(&self) -> usize {
        self.outer_cap
    }

    pub fn hole_cap(&self) -> usize {
        self.hole_cap
    }

    /// Point at which every primitive vanishes.
    pub fn reference_point(&self) -> CirclePoint {
        self.reference
    }

    /// Reorders elements; used to check Gram equivariance.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let elements = order.iter().map(|&i| self.elements[i]).collect();
        BasisSet { elements, ..self.clone() }
    }
}

impl Basis for BasisSet {
    fn len(&self) -> usize {
        self.elements.len()
    }

    fn max_derivative(&self) -> usize {
        self.max_derivative
    }

    fn eval_deriv(&self, z: CirclePoint, d: usize, out: &mut [Complex64]) {
        for (o, e) in out.iter_mut().zip(&self.elements) {
            *o = e.deriv(z, d);
        }
    }

    fn primitive(&self, z: CirclePoint, out: &mut [Complex64]) {
        for (o, e) in out.iter_mut().zip(&self.elements) {
            *o = e.primitive(z) - e.primitive(self.reference);
        }
    }

    fn region(&self) -> &dyn Region {
        &self.domain
    }

    fn power_structure(&self) -> Option<(CirclePoint, Vec<(f64, i64)>)> {
        let c = self.elements.first()?.center;
        let tol = 1e-12 * self.domain.outer().radius;
        if self.elements.iter().any(|e| (e.center - c).norm() > tol) {
            return None;
        }
        Some((c, self.elements.iter().map(|e| (e.scale, e.power)).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Disc;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn disc_basis_is_monomials() {
        let b = BasisSet::new(&CircleDomain::unit_disc(), 3, 0).unwrap();
        let kinds: Vec<_> = b.elements().iter().map(|e| e.kind).collect();
        assert_eq!(kinds, (0..=3).map(|k| BasisKind::Monomial { k }).collect::<Vec<_>>());
        let z = c(0.3, -0.2);
        for (k, v) in b.derivs(z, 0).iter().enumerate() {
            assert!((v - z.powu(k as u32)).norm() < 1e-15);
        }
    }

    #[test]
    fn annulus_basis_skips_residue() {
        let a = CircleDomain::annulus(0.5, 1.0).unwrap();
        let b = BasisSet::new(&a, 2, 0).unwrap();
        assert_eq!(b.len(), 5);
        let powers: Vec<_> = b.elements().iter().map(|e| e.power).collect();
        assert_eq!(powers, vec![0, 1, 2, -2, -3]);
        assert!(b.elements().iter().all(|e| e.power != -1));
    }

    #[test]
    fn size_formula() {
        let holes = vec![Disc::new(c(0.4, 0.0), 0.1).unwrap(), Disc::new(c(-0.4, 0.0), 0.2).unwrap()];
        let d = CircleDomain::new(Disc::unit(), holes).unwrap();
        assert_eq!(BasisSet::new(&d, 7, 0).unwrap().len(), 8 + 2 * 7);
        assert!(BasisSet::new(&d, 7, 0).unwrap().power_structure().is_none());
        assert_eq!(BasisSet::new(&d, 0, 0), Err(Error::InvalidDegreeCap));
    }

    #[test]
    fn periods_vanish() {
        let a = CircleDomain::annulus(0.5, 1.0).unwrap();
        let b = BasisSet::new(&a, 6, 0).unwrap();
        let n = 512;
        let mut sums = vec![Complex64::new(0.0, 0.0); b.len()];
        let mut vals = vec![Complex64::new(0.0, 0.0); b.len()];
        for k in 0..n {
            let w = Complex64::from_polar(0.7, TAU * k as f64 / n as f64);
            let dz = w * Complex64::i() * (TAU / n as f64);
            b.eval_deriv(w, 0, &mut vals);
            for (s, v) in sums.iter_mut().zip(&vals) {
                *s += v * dz;
            }
        }
        assert!(sums.iter().all(|s| s.norm() < 1e-12), "{sums:?}");
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let holes = vec![Disc::new(c(0.3, 0.2), 0.15).unwrap()];
        let d = CircleDomain::new(Disc::new(c(0.1, 0.0), 1.2).unwrap(), holes).unwrap();
        let b = BasisSet::new(&d, 5, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        let mut count = 0;
        while count < 10 {
            let z = c(rng.random_range(-1.0..1.2), rng.random_range(-1.1..1.1));
            if d.distance_to_boundary(z).map_or(true, |t| t < 0.05) {
                continue;
            }
            count += 1;
            for order in 1..=3 {
                let exact = b.derivs(z, order);
                let fp = b.derivs(z + h, order - 1);
                let fm = b.derivs(z - h, order - 1);
                for j in 0..b.len() {
                    let fd = (fp[j] - fm[j]) / (2.0 * h);
                    assert!((fd - exact[j]).norm() <= 1e-8 * (1.0 + exact[j].norm()) * 10f64.powi(order as i32 - 1));
                }
            }
            let mut p1 = vec![Complex64::new(0.0, 0.0); b.len()];
            let mut p2 = p1.clone();
            b.primitive(z + h, &mut p1);
            b.primitive(z - h, &mut p2);
            let v = b.derivs(z, 0);
            for j in 0..b.len() {
                assert!(((p1[j] - p2[j]) / (2.0 * h) - v[j]).norm() < 1e-8);
            }
        }
        let mut p = vec![Complex64::new(0.0, 0.0); b.len()];
        b.primitive(b.reference_point(), &mut p);
        assert!(p.iter().all(|v| v.norm() == 0.0));
    }
}
