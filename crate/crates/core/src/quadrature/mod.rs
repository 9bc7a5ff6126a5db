//! Tensor-product quadrature over circle domains and lens caps.
//!
//! The domain is split into panels. Without off-center holes a single polar
//! annulus about the outer center covers everything: Gauss–Legendre in the
//! radius, trapezoid in the angle. Each off-center hole is wrapped in a thin
//! polar collar about its own center, and the rest is swept by rays from the
//! outer center with angular breaks at the collars' tangent directions.

mod gauss;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{CircleDomain, CirclePoint, Lens};

pub use gauss::{gauss_interval, gauss_legendre};

pub const DEFAULT_RADIAL_ORDER: usize = 32;
pub const DEFAULT_ANGULAR_ORDER: usize = 256;

/// Holes closer than this (relative to the outer radius) are not resolvable.
const MIN_RELATIVE_GAP: f64 = 1e-6;

/// Tensor grid `center + r_a e^{i(theta0 + 2 pi b / n_theta)}`, stored
/// radius-major. `radial_weights` already include the Jacobian `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    pub center: CirclePoint,
    pub radii: Vec<f64>,
    pub radial_weights: Vec<f64>,
    pub theta0: f64,
    pub n_theta: usize,
}

impl PolarGrid {
    fn new(center: CirclePoint, inner: f64, outer: f64, nr: usize, n_theta: usize) -> Self {
        let (radii, w) = gauss_interval(nr, inner, outer);
        let radial_weights = radii.iter().zip(&w).map(|(r, w)| r * w).collect();
        PolarGrid { center, radii, radial_weights, theta0: 0.0, n_theta }
    }

    pub fn angle(&self, b: usize) -> f64 {
        self.theta0 + TAU * b as f64 / self.n_theta as f64
    }

    pub fn angular_weight(&self) -> f64 {
        TAU / self.n_theta as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PanelShape {
    Polar(PolarGrid),
    Scattered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub shape: PanelShape,
    pub nodes: Vec<CirclePoint>,
    pub weights: Vec<f64>,
}

impl Panel {
    fn from_grid(grid: PolarGrid) -> Self {
        let dt = grid.angular_weight();
        let dirs: Vec<Complex64> = (0..grid.n_theta).map(|b| Complex64::from_polar(1.0, grid.angle(b))).collect();
        let mut nodes = Vec::with_capacity(grid.radii.len() * grid.n_theta);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for (r, w) in grid.radii.iter().zip(&grid.radial_weights) {
            for d in &dirs {
                nodes.push(grid.center + d * r);
                weights.push(w * dt);
            }
        }
        Panel { shape: PanelShape::Polar(grid), nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Fixed quadrature rule; node order and summation order never change.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub radial_order: usize,
    pub angular_order: usize,
    pub panels: Vec<Panel>,
    pub area: f64,
}

fn check_orders(radial: usize, angular: usize) -> Result<()> {
    if radial < 4 || angular < 4 {
        return Err(Error::InvalidOrder { radial, angular });
    }
    Ok(())
}

impl QuadratureRule {
    pub fn for_domain(domain: &CircleDomain, radial_order: usize, angular_order: usize) -> Result<Self> {
        build_rule(domain, radial_order, angular_order)
    }

    pub fn node_count(&self) -> usize {
        self.panels.iter().map(Panel::len).sum()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (CirclePoint, f64)> + '_ {
        self.panels.iter().flat_map(|p| p.nodes.iter().copied().zip(p.weights.iter().copied()))
    }

    pub fn weight_sum(&self) -> f64 {
        self.panels.iter().map(|p| pairwise_real(&p.weights)).sum()
    }

    /// `sum_i w_i f(z_i)`, pairwise within each panel, panels in order.
    pub fn integrate<F>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(CirclePoint) -> Complex64,
    {
        let mut total = Complex64::new(0.0, 0.0);
        let mut terms = Vec::new();
        for panel in &self.panels {
            terms.clear();
            for (z, w) in panel.nodes.iter().zip(&panel.weights) {
                let v = f(*z);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFiniteIntegrand { re: z.re, im: z.im });
                }
                terms.push(v * *w);
            }
            total += pairwise(&terms);
        }
        Ok(total)
    }
}

pub(crate) fn pairwise(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise(&xs[..mid]) + pairwise(&xs[mid..])
}

fn pairwise_real(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_real(&xs[..mid]) + pairwise_real(&xs[mid..])
}

pub fn build_rule(domain: &CircleDomain, radial_order: usize, angular_order: usize) -> Result<QuadratureRule> {
    check_orders(radial_order, angular_order)?;
    let c = domain.outer().center;
    let big_r = domain.outer().radius;

    let mut inner = 0.0;
    let mut off_center = Vec::new();
    for h in domain.holes() {
        if (h.center - c).norm() <= 1e-12 * big_r {
            inner = h.radius;
        } else {
            off_center.push(*h);
        }
    }

    // Per-hole clearance to every other circle.
    let mut gaps = vec![f64::INFINITY; off_center.len()];
    for (i, h) in off_center.iter().enumerate() {
        let d = (h.center - c).norm();
        gaps[i] = gaps[i].min(big_r - d - h.radius);
        if inner > 0.0 {
            gaps[i] = gaps[i].min(d - h.radius - inner);
        }
        for (j, g) in off_center.iter().enumerate() {
            if i != j {
                gaps[i] = gaps[i].min((h.center - g.center).norm() - h.radius - g.radius);
            }
        }
    }
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    if min_gap < MIN_RELATIVE_GAP * big_r {
        return Err(Error::DecompositionFailure { min_gap });
    }

    if off_center.is_empty() {
        let grid = PolarGrid::new(c, inner, big_r, radial_order, angular_order);
        return Ok(QuadratureRule {
            radial_order,
            angular_order,
            panels: vec![Panel::from_grid(grid)],
            area: domain.area(),
        });
    }

    let mut panels = Vec::new();
    let mut excluded = Vec::new();
    for (h, gap) in off_center.iter().zip(&gaps) {
        let width = gap / 3.0;
        let grid = PolarGrid::new(h.center, h.radius, h.radius + width, radial_order, angular_order);
        panels.push(Panel::from_grid(grid));
        excluded.push((h.center, h.radius + width));
    }
    let per_panel = (angular_order / 2).max(16);
    panels.push(ray_panel(c, inner, big_r, &excluded, radial_order, per_panel));
    Ok(QuadratureRule { radial_order, angular_order, panels, area: domain.area() })
}

/// Rays from `c` over `{inner < |z - c| < outer}` minus the given discs.
fn ray_panel(
    c: CirclePoint,
    inner: f64,
    outer: f64,
    discs: &[(CirclePoint, f64)],
    nr: usize,
    nt: usize,
) -> Panel {
    let mut breaks = Vec::new();
    for (q, rho) in discs {
        let d = (q - c).norm();
        if d > *rho {
            let phi = (q - c).arg();
            let a = (rho / d).asin();
            breaks.push((phi - a).rem_euclid(TAU));
            breaks.push((phi + a).rem_euclid(TAU));
        }
    }
    if breaks.is_empty() {
        breaks = vec![0.0, PI];
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let first = breaks[0];
    breaks.push(first + TAU);

    let (s, ws) = gauss_legendre(nt);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for pair in breaks.windows(2) {
        let (m, h) = (0.5 * (pair[0] + pair[1]), 0.5 * (pair[1] - pair[0]));
        for (sk, wk) in s.iter().zip(&ws) {
            // Sine substitution tames the square-root behavior of chord
            // lengths near tangent directions.
            let theta = m + h * (FRAC_PI_2 * sk).sin();
            let dtheta = wk * h * FRAC_PI_2 * (FRAC_PI_2 * sk).cos();
            let dir = Complex64::from_polar(1.0, theta);
            for (a, b) in ray_segments(c, dir, inner, outer, discs) {
                let (rs, rw) = gauss_interval(nr, a, b);
                for (r, w) in rs.iter().zip(&rw) {
                    nodes.push(c + dir * r);
                    weights.push(w * r * dtheta);
                }
            }
        }
    }
    Panel { shape: PanelShape::Scattered, nodes, weights }
}

fn ray_segments(
    c: CirclePoint,
    dir: Complex64,
    inner: f64,
    outer: f64,
    discs: &[(CirclePoint, f64)],
) -> Vec<(f64, f64)> {
    let mut cuts: Vec<(f64, f64)> = Vec::new();
    for (q, rho) in discs {
        let v = q - c;
        let b = (v * dir.conj()).re;
        let disc = b * b - (v.norm_sqr() - rho * rho);
        if disc > 0.0 {
            let sq = disc.sqrt();
            let (t1, t2) = ((b - sq).max(0.0), b + sq);
            if t2 > 0.0 {
                cuts.push((t1, t2));
            }
        }
    }
    cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut segs = Vec::new();
    let mut start = inner;
    for (a, b) in cuts {
        if a > start {
            segs.push((start, a.min(outer)));
        }
        start = start.max(b);
    }
    if start < outer {
        segs.push((start, outer));
    }
    segs.retain(|(a, b)| b > a);
    segs
}

/// Rule for a lens cap: polar about the disc center, angles clipped to the
/// chord, radius running from the chord to the arc.
pub fn build_lens_rule(lens: &Lens, radial_order: usize, angular_order: usize) -> Result<QuadratureRule> {
    check_orders(radial_order, angular_order)?;
    let c = lens.disc.center;
    let big_r = lens.disc.radius;
    let phi = lens.direction.arg();
    let th0 = lens.half_angle();
    let chord = lens.chord_offset();
    let (ts, tw) = gauss_interval(angular_order, -th0, th0);
    let mut nodes = Vec::with_capacity(radial_order * angular_order);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for (t, w) in ts.iter().zip(&tw) {
        let dir = Complex64::from_polar(1.0, phi + t);
        let (rs, rw) = gauss_interval(radial_order, chord / t.cos(), big_r);
        for (r, v) in rs.iter().zip(&rw) {
            nodes.push(c + dir * r);
            weights.push(w * v * r);
        }
    }
    Ok(QuadratureRule {
        radial_order,
        angular_order,
        panels: vec![Panel { shape: PanelShape::Scattered, nodes, weights }],
        area: lens.area(),
    })
}
