//! Circle domains: an outer disc with finitely many closed sub-discs removed.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A point of the plane. Public operations reject non-finite coordinates.
pub type CirclePoint = Complex64;

/// Absolute tolerance for interior/boundary predicates.
pub const GEOMETRY_TOL: f64 = 1e-12;

/// Points farther than this from every circle are not "on" the boundary.
pub const ON_BOUNDARY_TOL: f64 = 1e-10;

pub(crate) fn ensure_finite(z: CirclePoint) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinitePoint)
    }
}

pub(crate) fn outside(z: CirclePoint) -> Error {
    Error::PointOutsideDomain { re: z.re, im: z.im }
}

/// Open disc `|z - center| < radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub center: CirclePoint,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: CirclePoint, radius: f64) -> Result<Self> {
        ensure_finite(center)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidDisc { radius });
        }
        Ok(Disc { center, radius })
    }

    pub fn unit() -> Self {
        Disc { center: Complex64::new(0.0, 0.0), radius: 1.0 }
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    fn total_cmp(&self, other: &Disc) -> Ordering {
        self.center
            .re
            .total_cmp(&other.center.re)
            .then(self.center.im.total_cmp(&other.center.im))
            .then(self.radius.total_cmp(&other.radius))
    }
}

/// Which circle of a circle domain's boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryComponent {
    Outer,
    Hole(usize),
}

/// Outer disc minus finitely many pairwise-disjoint closed sub-discs.
///
/// Holes are stored in a canonical order (lexicographic in center, then
/// radius) so that permuting the input list yields an equal domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleDomain {
    outer: Disc,
    holes: Vec<Disc>,
}

impl CircleDomain {
    /// Validates the hole configuration. Hole indices in errors refer to
    /// positions in the caller's list.
    pub fn new(outer: Disc, holes: Vec<Disc>) -> Result<Self> {
        let outer = Disc::new(outer.center, outer.radius)?;
        for hole in &holes {
            Disc::new(hole.center, hole.radius)?;
        }
        for (i, hole) in holes.iter().enumerate() {
            if (hole.center - outer.center).norm() + hole.radius >= outer.radius {
                return Err(Error::HoleEscapes { index: i });
            }
        }
        for i in 0..holes.len() {
            for j in (i + 1)..holes.len() {
                let gap = (holes[i].center - holes[j].center).norm();
                if gap <= holes[i].radius + holes[j].radius {
                    return Err(Error::HoleOverlap { first: i, second: j });
                }
            }
        }
        let mut holes = holes;
        holes.sort_by(Disc::total_cmp);
        Ok(CircleDomain { outer, holes })
    }

    pub fn disc(center: CirclePoint, radius: f64) -> Result<Self> {
        Self::new(Disc::new(center, radius)?, Vec::new())
    }

    pub fn unit_disc() -> Self {
        CircleDomain { outer: Disc::unit(), holes: Vec::new() }
    }

    /// `{inner < |z| < outer}` centered at the origin.
    pub fn annulus(inner: f64, outer: f64) -> Result<Self> {
        let origin = Complex64::new(0.0, 0.0);
        Self::new(Disc::new(origin, outer)?, vec![Disc::new(origin, inner)?])
    }

    pub fn outer(&self) -> &Disc {
        &self.outer
    }

    pub fn holes(&self) -> &[Disc] {
        &self.holes
    }

    pub fn connectivity(&self) -> usize {
        1 + self.holes.len()
    }

    pub fn area(&self) -> f64 {
        self.outer.area() - self.holes.iter().map(Disc::area).sum::<f64>()
    }

    /// Interior predicate with the `GEOMETRY_TOL` margin from every circle.
    pub fn contains(&self, z: CirclePoint) -> bool {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return false;
        }
        if (z - self.outer.center).norm() >= self.outer.radius - GEOMETRY_TOL {
            return false;
        }
        self.holes
            .iter()
            .all(|h| (z - h.center).norm() > h.radius + GEOMETRY_TOL)
    }

    pub fn distance_to_boundary(&self, z: CirclePoint) -> Result<f64> {
        ensure_finite(z)?;
        if !self.contains(z) {
            return Err(outside(z));
        }
        let outer = self.outer.radius - (z - self.outer.center).norm();
        Ok(self
            .holes
            .iter()
            .map(|h| (z - h.center).norm() - h.radius)
            .fold(outer, f64::min))
    }

    pub fn component_circle(&self, component: BoundaryComponent) -> Disc {
        match component {
            BoundaryComponent::Outer => self.outer,
            BoundaryComponent::Hole(i) => self.holes[i],
        }
    }

    /// The unique boundary circle through `p`.
    pub fn locate_boundary(&self, p: CirclePoint) -> Result<BoundaryComponent> {
        ensure_finite(p)?;
        let on = |d: &Disc| ((p - d.center).norm() - d.radius).abs() <= ON_BOUNDARY_TOL;
        let mut found = Vec::new();
        if on(&self.outer) {
            found.push(BoundaryComponent::Outer);
        }
        for (i, h) in self.holes.iter().enumerate() {
            if on(h) {
                found.push(BoundaryComponent::Hole(i));
            }
        }
        match found.as_slice() {
            [one] => Ok(*one),
            _ => Err(Error::NotOnBoundary { re: p.re, im: p.im }),
        }
    }

    /// Outer center when it is an interior point, otherwise the midpoint of
    /// the widest radial gap found along a few fixed directions.
    pub fn reference_point(&self) -> CirclePoint {
        let c = self.outer.center;
        if self.contains(c) {
            return c;
        }
        let mut best = (f64::NEG_INFINITY, c);
        for k in 0..16 {
            let dir = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 16.0);
            for s in 1..64 {
                let z = c + dir * (self.outer.radius * s as f64 / 64.0);
                if let Ok(d) = self.distance_to_boundary(z) {
                    if d > best.0 {
                        best = (d, z);
                    }
                }
            }
        }
        best.1
    }
}

/// Real defining function `psi` for one boundary circle near an anchor `p`:
/// negative inside the domain, zero on the circle, and normalized so that
/// `d psi / dz (p) = 1` in the rotated frame `z = c + rotation * w`.
///
/// For the outer circle `psi(z) = (|z - c|^2 - r^2) / r`; for a hole the
/// sign is flipped. On the unit disc with `p = 1` this is `|z|^2 - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefiningFunction {
    component: BoundaryComponent,
    anchor: CirclePoint,
    circle: Disc,
    sign: f64,
    rotation: Complex64,
}

impl DefiningFunction {
    pub fn new(domain: &CircleDomain, p: CirclePoint) -> Result<Self> {
        let component = domain.locate_boundary(p)?;
        let circle = domain.component_circle(component);
        let sign = match component {
            BoundaryComponent::Outer => 1.0,
            BoundaryComponent::Hole(_) => -1.0,
        };
        let mut psi = DefiningFunction {
            component,
            anchor: p,
            circle,
            sign,
            rotation: Complex64::new(1.0, 0.0),
        };
        let w = psi.wirtinger(p);
        psi.rotation = w.conj() / w.norm();
        Ok(psi)
    }

    pub fn component(&self) -> BoundaryComponent {
        self.component
    }

    pub fn anchor(&self) -> CirclePoint {
        self.anchor
    }

    pub fn circle(&self) -> Disc {
        self.circle
    }

    /// Unit complex number `e^{i beta}` of the frame in which the
    /// normalization holds.
    pub fn rotation(&self) -> Complex64 {
        self.rotation
    }

    pub fn eval(&self, z: CirclePoint) -> f64 {
        let r = self.circle.radius;
        self.sign * ((z - self.circle.center).norm_sqr() - r * r) / r
    }

    /// `d psi / dz` in the original coordinates.
    pub fn wirtinger(&self, z: CirclePoint) -> Complex64 {
        self.sign * (z - self.circle.center).conj() / self.circle.radius
    }

    /// `d psi / dw` in the rotated frame; equals 1 at the anchor.
    pub fn normalized_wirtinger(&self, z: CirclePoint) -> Complex64 {
        self.wirtinger(z) * self.rotation
    }

    /// Unit inward normal at the anchor.
    pub fn inward_normal(&self) -> Complex64 {
        let g = self.wirtinger(self.anchor).conj();
        -g / g.norm()
    }
}

/// The cap `{ |z - c| < R, Re((z - c) conj(u)) > R (1 - h) }` cut from a disc
/// by a half-plane orthogonal to the unit direction `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lens {
    pub disc: Disc,
    pub direction: Complex64,
    pub height: f64,
}

impl Lens {
    pub fn new(disc: Disc, direction: Complex64, height: f64) -> Result<Self> {
        ensure_finite(direction)?;
        if !(height > 0.0 && height < 2.0) || direction.norm() < 1e-300 {
            return Err(Error::InvalidExperiment(format!("cap height {height} must lie in (0, 2)")));
        }
        Ok(Lens { disc, direction: direction / direction.norm(), height })
    }

    /// Signed coordinate along the direction, normalized by the radius.
    fn axial(&self, z: CirclePoint) -> f64 {
        ((z - self.disc.center) * self.direction.conj()).re / self.disc.radius
    }

    pub fn chord_offset(&self) -> f64 {
        self.disc.radius * (1.0 - self.height)
    }

    pub fn half_angle(&self) -> f64 {
        (1.0 - self.height).acos()
    }

    pub fn contains(&self, z: CirclePoint) -> bool {
        z.re.is_finite()
            && z.im.is_finite()
            && (z - self.disc.center).norm() < self.disc.radius - GEOMETRY_TOL
            && self.axial(z) > 1.0 - self.height + GEOMETRY_TOL / self.disc.radius
    }

    pub fn area(&self) -> f64 {
        let th = self.half_angle();
        let r = self.disc.radius;
        r * r * (th - th.sin() * th.cos())
    }

    /// Lies in the complementary half-plane, hence misses the cap.
    pub fn misses(&self, hole: &Disc) -> bool {
        let axial = ((hole.center - self.disc.center) * self.direction.conj()).re;
        axial + hole.radius < self.chord_offset()
    }

    /// A point well inside the cap, used to center polynomial bases.
    pub fn centroid_guess(&self) -> CirclePoint {
        let mid = 1.0 - self.height / 2.0;
        self.disc.center + self.direction * (self.disc.radius * mid)
    }
}

/// Anything that can tell an interior point from an exterior one.
pub trait Region: Send + Sync {
    fn contains(&self, z: CirclePoint) -> bool;
}

impl Region for CircleDomain {
    fn contains(&self, z: CirclePoint) -> bool {
        CircleDomain::contains(self, z)
    }
}

impl Region for Lens {
    fn contains(&self, z: CirclePoint) -> bool {
        Lens::contains(self, z)
    }
}
