//! Ratio of the kernel of a boundary cap to the kernel of the whole domain.

use std::sync::Arc;

use rayon::prelude::*;

use super::{ApproachSequence, Check, ConvergenceReport, Refinement, GRAM_TOLERANCE};
use crate::basis::{gram_matrix, ArnoldiBasis, GramOptions};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryComponent, CircleDomain, CirclePoint, Lens};
use crate::kernel::{KernelConfig, KernelEvaluator};
use crate::quadrature::build_lens_rule;
use crate::weight::Weight;

const RATIO_FLOOR: f64 = 1e-6;
const STABLE_BELOW: f64 = 0.05;
const STABLE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct LocalizationSpec {
    pub domain: CircleDomain,
    pub weight: Weight,
    /// On the outer circle.
    pub anchor: CirclePoint,
    /// Cap `{Re((z - c) conj(u)) > R (1 - h)}` with `u` pointing at the anchor.
    pub height: f64,
    pub n: usize,
    pub t0: f64,
    pub ratio: f64,
    pub count: usize,
    /// Polynomial degree on the cap.
    pub cap_degree: usize,
    pub cap_radial: usize,
    pub cap_angular: usize,
    /// Evaluator settings for the whole domain.
    pub domain_config: KernelConfig,
}

impl LocalizationSpec {
    pub fn new(domain: CircleDomain, anchor: CirclePoint, height: f64, n: usize) -> Self {
        let domain_config = KernelConfig::for_domain(&domain);
        LocalizationSpec {
            domain,
            weight: Weight::unit(),
            anchor,
            height,
            n,
            t0: ApproachSequence::DEFAULT_T0,
            ratio: ApproachSequence::DEFAULT_RATIO,
            count: ApproachSequence::DEFAULT_COUNT,
            cap_degree: 48,
            cap_radial: 64,
            cap_angular: 64,
            domain_config,
        }
    }

    pub fn lens(&self) -> Result<Lens> {
        let outer = *self.domain.outer();
        Lens::new(outer, self.anchor - outer.center, self.height)
    }
}

/// `K_{D cap U}(z_k, z_k) / K_D(z_k, z_k)` along the inward normal at the anchor.
pub fn run_localization(spec: &LocalizationSpec) -> Result<ConvergenceReport> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::InvalidKernelOrder { n, min: 1 });
    }
    if spec.domain.locate_boundary(spec.anchor)? != BoundaryComponent::Outer {
        return Err(Error::InvalidExperiment("the cap anchor must lie on the outer circle".into()));
    }
    let lens = spec.lens()?;
    if let Some(index) = spec.domain.holes().iter().position(|h| !lens.misses(h)) {
        return Err(Error::CapTouchesHole { index });
    }
    let approach = ApproachSequence::new(&spec.domain, spec.anchor, spec.t0, spec.ratio, spec.count)?;
    if let Some(z) = approach.points.iter().find(|z| !lens.contains(**z)) {
        return Err(Error::InvalidExperiment(format!("approach point {z} lies outside the cap")));
    }

    let fine = ratios(spec, &lens, &approach.points, spec.cap_degree, &spec.domain_config)?;
    let coarse_config = KernelConfig {
        outer_cap: spec.domain_config.outer_cap.saturating_sub(4).max(1),
        hole_cap: spec.domain_config.hole_cap.saturating_sub(4).max(1),
        ..spec.domain_config
    };
    let coarse_degree = spec.cap_degree.saturating_sub(4).max(1);
    let coarse = ratios(spec, &lens, &approach.points, coarse_degree, &coarse_config)?;

    let above = fine.iter().all(|&r| r >= 1.0 - RATIO_FLOOR);
    let stable = fine
        .windows(2)
        .zip(approach.params.windows(2))
        .filter(|(_, t)| t[1] < STABLE_BELOW)
        .all(|(r, _)| r[1] <= r[0] + STABLE_SLACK);
    let checks = vec![
        Check::new("ratio >= 1 at every step", above),
        Check::new("ratio settles monotonically once t < 0.05", stable),
    ];
    let report = ConvergenceReport::assemble(
        format!("cap localization, h={}, n={n}", spec.height),
        &approach.params,
        &fine,
        1.0,
        GRAM_TOLERANCE,
        checks,
    );
    let differences = coarse.iter().zip(&fine).map(|(c, f)| (f - c).abs()).collect();
    Ok(report.with_refinement(Refinement {
        fine_cap: spec.cap_degree,
        coarse_cap: coarse_degree,
        coarse_values: coarse,
        differences,
    }))
}

fn ratios(spec: &LocalizationSpec, lens: &Lens, points: &[CirclePoint], degree: usize, config: &KernelConfig) -> Result<Vec<f64>> {
    let cap = cap_evaluator(spec, lens, degree)?;
    let config = KernelConfig { max_derivative: config.max_derivative.max(spec.n), ..*config };
    let whole = KernelEvaluator::for_domain(&spec.domain, &spec.weight, &config)?;
    points
        .par_iter()
        .map(|&z| Ok(cap.kernel_diag_deriv(spec.n, z)? / whole.kernel_diag_deriv(spec.n, z)?))
        .collect()
}

/// Arnoldi-orthogonalized polynomials on the cap, so the Gram matrix is
/// close to the identity.
pub(crate) fn cap_evaluator(spec: &LocalizationSpec, lens: &Lens, degree: usize) -> Result<KernelEvaluator> {
    let rule = build_lens_rule(lens, spec.cap_radial, spec.cap_angular)?;
    let big_r = lens.disc.radius;
    let scale = (big_r * lens.height / 2.0).max(big_r * lens.half_angle().sin());
    let basis = ArnoldiBasis::new(*lens, &rule, &spec.weight, lens.centroid_guess(), scale, degree, spec.n.max(1))?;
    let gram = gram_matrix(&basis, &spec.weight, &rule, GramOptions::default())?;
    KernelEvaluator::new(Arc::new(basis), gram, spec.weight.clone())
}
