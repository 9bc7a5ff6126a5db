//! Möbius-type biholomorphisms, images of circle domains, and the
//! transformation rule for higher-order kernels.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{ensure_finite, CircleDomain, CirclePoint, Disc, GEOMETRY_TOL};
use crate::kernel::{factorial, KernelSource};
use crate::weight::Weight;

#[derive(Debug, Clone, PartialEq)]
pub enum Biholomorphism {
    /// `(a z + b) / (c z + d)`.
    Mobius { a: Complex64, b: Complex64, c: Complex64, d: Complex64 },
    /// `(zeta0 - z) / (1 - z conj(zeta0))`, an involution of the unit disc.
    DiscAutomorphism { zeta0: Complex64 },
    /// `r / (z - q)`.
    HoleInversion { q: Complex64, r: f64 },
    /// `s z + t`.
    Affine { s: Complex64, t: Complex64 },
    /// Applied left to right: `Composition([f, g])` is `g o f`.
    Composition(Vec<Biholomorphism>),
}

/// Coefficients `[a, b, c, d]` of `(a z + b)/(c z + d)`.
type Coeffs = [Complex64; 4];

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl Biholomorphism {
    pub fn identity() -> Self {
        Biholomorphism::Affine { s: one(), t: zero() }
    }

    pub fn mobius(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let f = Biholomorphism::Mobius { a, b, c, d };
        f.validate()?;
        Ok(f)
    }

    pub fn disc_automorphism(zeta0: Complex64) -> Result<Self> {
        ensure_finite(zeta0)?;
        if zeta0.norm() >= 1.0 {
            return Err(Error::PointOutsideDomain { re: zeta0.re, im: zeta0.im });
        }
        Ok(Biholomorphism::DiscAutomorphism { zeta0 })
    }

    pub fn hole_inversion(q: Complex64, r: f64) -> Result<Self> {
        let f = Biholomorphism::HoleInversion { q, r };
        f.validate()?;
        Ok(f)
    }

    pub fn affine(s: Complex64, t: Complex64) -> Result<Self> {
        let f = Biholomorphism::Affine { s, t };
        f.validate()?;
        Ok(f)
    }

    /// `T(z) = (z - p) / h`, the blow-up used by the scaling principle.
    pub fn scaling(p: Complex64, h: f64) -> Result<Self> {
        Self::affine(Complex64::new(1.0 / h, 0.0), -p / h)
    }

    /// The map `(2z + 1)/(-2z + 3)` from `{Re z < 1/2}` onto the unit disc.
    pub fn half_plane_to_disc() -> Self {
        Biholomorphism::Mobius {
            a: Complex64::new(2.0, 0.0),
            b: one(),
            c: Complex64::new(-2.0, 0.0),
            d: Complex64::new(3.0, 0.0),
        }
    }

    pub fn then(self, next: Biholomorphism) -> Self {
        match self {
            Biholomorphism::Composition(mut v) => {
                v.push(next);
                Biholomorphism::Composition(v)
            }
            f => Biholomorphism::Composition(vec![f, next]),
        }
    }

    fn validate(&self) -> Result<()> {
        let [a, b, c, d] = self.coeffs();
        if [a, b, c, d].iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinitePoint);
        }
        if (a * d - b * c).norm() <= f64::MIN_POSITIVE {
            return Err(Error::DegenerateMap);
        }
        Ok(())
    }

    fn coeffs(&self) -> Coeffs {
        match self {
            Biholomorphism::Mobius { a, b, c, d } => [*a, *b, *c, *d],
            Biholomorphism::DiscAutomorphism { zeta0 } => [-one(), *zeta0, -zeta0.conj(), one()],
            Biholomorphism::HoleInversion { q, r } => [zero(), Complex64::new(*r, 0.0), one(), -q],
            Biholomorphism::Affine { s, t } => [*s, *t, zero(), one()],
            Biholomorphism::Composition(maps) => maps.iter().fold([one(), zero(), zero(), one()], |acc, f| {
                let [a, b, c, d] = f.coeffs();
                let [e, g, h, k] = acc;
                [a * e + b * h, a * g + b * k, c * e + d * h, c * g + d * k]
            }),
        }
    }

    pub fn eval(&self, z: CirclePoint) -> Complex64 {
        match self {
            Biholomorphism::Composition(maps) => maps.iter().fold(z, |w, f| f.eval(w)),
            _ => {
                let [a, b, c, d] = self.coeffs();
                (a * z + b) / (c * z + d)
            }
        }
    }

    pub fn derivative(&self, z: CirclePoint) -> Complex64 {
        match self {
            Biholomorphism::Composition(maps) => {
                let mut w = z;
                let mut d = one();
                for f in maps {
                    d *= f.derivative(w);
                    w = f.eval(w);
                }
                d
            }
            _ => {
                let [a, b, c, d] = self.coeffs();
                (a * d - b * c) / (c * z + d).powi(2)
            }
        }
    }

    /// `[f'(z), f''(z), ..., f^{(m)}(z)]`, from
    /// `f^{(k)} = (-1)^{k+1} k! c^{k-1} (ad - bc) / (cz + d)^{k+1}`.
    pub fn derivatives(&self, z: CirclePoint, m: usize) -> Vec<Complex64> {
        let [a, b, c, d] = self.coeffs();
        let det = a * d - b * c;
        let q = (c * z + d).inv();
        (1..=m)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                det * c.powi(k as i32 - 1) * q.powi(k as i32 + 1) * (sign * factorial(k))
            })
            .collect()
    }

    pub fn inverse(&self) -> Biholomorphism {
        match self {
            Biholomorphism::DiscAutomorphism { .. } => self.clone(),
            Biholomorphism::Composition(maps) => Biholomorphism::Composition(maps.iter().rev().map(|f| f.inverse()).collect()),
            Biholomorphism::Affine { s, t } => Biholomorphism::Affine { s: s.inv(), t: -t / s },
            _ => {
                let [a, b, c, d] = self.coeffs();
                Biholomorphism::Mobius { a: d, b: -b, c: -c, d: a }
            }
        }
    }

    /// The point sent to infinity, if any.
    pub fn pole(&self) -> Option<Complex64> {
        let [_, _, c, d] = self.coeffs();
        if c.norm() == 0.0 {
            None
        } else {
            Some(-d / c)
        }
    }

    /// Image circle, or `None` when the circle passes through the pole.
    fn map_circle(&self, disc: &Disc) -> Option<Disc> {
        let [a, b, c, d] = self.coeffs();
        let t = |z: Complex64| (a * z + b) / (c * z + d);
        let center = match self.pole() {
            None => t(disc.center),
            Some(p) => {
                let dist = (p - disc.center).norm();
                if (dist - disc.radius).abs() <= GEOMETRY_TOL * disc.radius.max(1.0) {
                    return None;
                }
                if dist <= GEOMETRY_TOL {
                    a / c
                } else {
                    // The reflection of the pole goes to the image center.
                    t(disc.center + disc.radius * disc.radius / (p - disc.center).conj())
                }
            }
        };
        // Average over a few boundary points to damp rounding.
        let radius = (0..4)
            .map(|k| {
                let z = disc.center + Complex64::from_polar(disc.radius, k as f64 * std::f64::consts::FRAC_PI_2);
                (t(z) - center).norm()
            })
            .sum::<f64>()
            / 4.0;
        Some(Disc { center, radius })
    }
}

/// Image of a circle domain; component indices in errors are 0 for the
/// outer circle and `1 + i` for hole `i`.
pub fn apply_map(f: &Biholomorphism, domain: &CircleDomain) -> Result<CircleDomain> {
    let circles: Vec<Disc> = std::iter::once(*domain.outer()).chain(domain.holes().iter().copied()).collect();
    let images: Vec<Disc> = circles
        .iter()
        .enumerate()
        .map(|(i, c)| f.map_circle(c).ok_or(Error::ImageNotCircleDomain { index: i }))
        .collect::<Result<_>>()?;
    // Which image circle bounds from outside depends on where the pole sits.
    let outer_index = match f.pole() {
        None => 0,
        Some(p) if (p - domain.outer().center).norm() > domain.outer().radius => 0,
        Some(p) => match domain.holes().iter().position(|h| (p - h.center).norm() < h.radius) {
            Some(i) => i + 1,
            None => return Err(Error::PoleInDomain),
        },
    };
    let outer = images[outer_index];
    let holes = images.iter().enumerate().filter(|(i, _)| *i != outer_index).map(|(_, d)| *d).collect();
    CircleDomain::new(outer, holes)
}

/// `nu o f`.
pub fn pullback_weight(f: &Biholomorphism, nu: &Weight) -> Weight {
    let g = f.clone();
    let inv = f.inverse();
    nu.composed("pullback", Arc::new(move |z| g.eval(z)), move |p| inv.eval(p))
}

/// `K^{(n-1)}_{D1,nu o f,n}(z, zeta)` from kernels of `D2 = f(D1)`.
///
/// Differentiating `M_1(z, zeta) = conj(f'(zeta))^n M_2(f(z), f(zeta))`
/// `n` times in `z` gives
/// `conj(f'(zeta))^n sum_k B_{n,k}(f'(z), f''(z), ...) M_2^{(k)}(f(z), f(zeta))`
/// with Bell polynomials `B_{n,k}`. The terms `k < n` carry derivatives of
/// order `>= 2` of `f` and vanish on the diagonal and for affine `f`,
/// where this reduces to `f'(z)^n K^{(n-1)}_{D2}(f(z), f(zeta)) conj(f'(zeta))^n`.
pub fn transformed_kernel_deriv(
    f: &Biholomorphism,
    target: &dyn KernelSource,
    n: usize,
    z: CirclePoint,
    zeta: CirclePoint,
) -> Result<Complex64> {
    ensure_finite(z)?;
    ensure_finite(zeta)?;
    if n == 0 {
        return Err(Error::InvalidKernelOrder { n, min: 1 });
    }
    let (fz, fzeta) = (f.eval(z), f.eval(zeta));
    let derivs = f.derivatives(z, n);
    let bell = bell_polynomials(n, &derivs);
    let mut sum = bell[n] * target.kernel_deriv(fz, fzeta, n)?;
    let curved = derivs[1..].iter().any(|d| d.norm() > 0.0);
    if curved {
        for (k, b) in bell.iter().enumerate().take(n).skip(1) {
            if b.norm() > 0.0 {
                // M_2^{(k)} is the (k-1)-st derivative of K_n
                sum += b * target.kernel_z_deriv(fz, fzeta, n, k - 1)?;
            }
        }
    }
    Ok(sum * f.derivative(zeta).conj().powi(n as i32))
}

/// `B_{n,k}(x_1, ..., x_{n-k+1})` for `k = 0..=n`, by
/// `B_{m,k} = sum_i C(m-1, i-1) x_i B_{m-i,k-1}`.
fn bell_polynomials(n: usize, x: &[Complex64]) -> Vec<Complex64> {
    let mut table = vec![vec![zero(); n + 1]; n + 1];
    table[0][0] = one();
    for m in 1..=n {
        for k in 1..=m {
            let mut acc = zero();
            for i in 1..=m - k + 1 {
                let binom = factorial(m - 1) / (factorial(i - 1) * factorial(m - i));
                acc += x[i - 1] * table[m - i][k - 1] * binom;
            }
            table[m][k] = acc;
        }
    }
    table.swap_remove(n)
}

/// `K^{(n-1)}_{H,n}(0, 0)` on `H = {Re z < 1/2}`, routed through the disc.
pub fn half_plane_diag(n: usize) -> Result<f64> {
    let f = Biholomorphism::half_plane_to_disc();
    let v = transformed_kernel_deriv(&f, &crate::kernel::UnitDiscKernel, n, zero(), zero())?;
    Ok(v.re)
}

/// `n!(n-1)!/pi`, the half-plane value written out.
pub fn half_plane_constant(n: usize) -> f64 {
    factorial(n) * factorial(n.saturating_sub(1)) / std::f64::consts::PI
}
