//! Normalized diagonal kernels along a radial approach to a boundary point.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{ApproachSequence, Check, ConvergenceReport, Refinement, CLOSED_FORM_TOLERANCE, GRAM_TOLERANCE};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryComponent, CircleDomain, CirclePoint, DefiningFunction};
use crate::kernel::{disc_kernel_diag, factorial, KernelConfig, KernelEvaluator};
use crate::weight::Weight;

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryBackend {
    /// Exact disc formula; unit disc with a constant weight only.
    ClosedForm,
    /// Gram-backed evaluator, refined against caps reduced by four.
    Gram(KernelConfig),
}

#[derive(Debug, Clone)]
pub struct BoundarySpec {
    pub domain: CircleDomain,
    pub weight: Option<Weight>,
    pub anchor: CirclePoint,
    pub n: usize,
    pub t0: f64,
    pub ratio: f64,
    pub count: usize,
    pub backend: BoundaryBackend,
}

impl BoundarySpec {
    pub fn new(domain: CircleDomain, anchor: CirclePoint, n: usize, backend: BoundaryBackend) -> Self {
        BoundarySpec {
            domain,
            weight: None,
            anchor,
            n,
            t0: ApproachSequence::DEFAULT_T0,
            ratio: ApproachSequence::DEFAULT_RATIO,
            count: ApproachSequence::DEFAULT_COUNT,
            backend,
        }
    }

    pub fn with_weight(mut self, weight: Weight) -> Self {
        self.weight = Some(weight);
        self
    }

    pub fn with_approach(mut self, t0: f64, ratio: f64, count: usize) -> Self {
        self.t0 = t0;
        self.ratio = ratio;
        self.count = count;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryReports {
    /// `(-psi(z_k))^{2n} K(z_k, z_k)` against `n!(n-1)!/(pi nu(p))`.
    pub psi: ConvergenceReport,
    /// For a hole anchor, `(1 - |r/(z - q)|^2)^{2n} K(z_k, z_k)` against
    /// `n!(n-1)!/(pi r^{2n})`.
    pub inversion: Option<ConvergenceReport>,
}

impl BoundaryReports {
    pub fn passed(&self) -> bool {
        self.psi.passed && self.inversion.as_ref().is_none_or(|r| r.passed)
    }
}

pub fn run_boundary_asymptotics(spec: &BoundarySpec) -> Result<BoundaryReports> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::InvalidKernelOrder { n, min: 1 });
    }
    let weight = spec.weight.clone().unwrap_or_else(Weight::unit);
    let nu_p = weight.value_at_continuity_point(spec.anchor)?;
    let psi = DefiningFunction::new(&spec.domain, spec.anchor)?;
    let approach = ApproachSequence::new(&spec.domain, spec.anchor, spec.t0, spec.ratio, spec.count)?;

    let (diag, refinement, tolerance) = match &spec.backend {
        BoundaryBackend::ClosedForm => {
            let c = match weight.family() {
                crate::weight::WeightFamily::Constant(c) => *c,
                _ => return Err(Error::InvalidExperiment("closed form needs a constant weight".into())),
            };
            let unit = spec.domain.holes().is_empty()
                && spec.domain.outer().center.norm() <= 1e-15
                && (spec.domain.outer().radius - 1.0).abs() <= 1e-15;
            if !unit {
                return Err(Error::InvalidExperiment("closed form is only available on the unit disc".into()));
            }
            let values = approach.points.iter().map(|&z| Ok(disc_kernel_diag(z, n)? / c)).collect::<Result<Vec<_>>>()?;
            (values, None, CLOSED_FORM_TOLERANCE)
        }
        BoundaryBackend::Gram(config) => {
            let coarse_config = KernelConfig {
                outer_cap: config.outer_cap.saturating_sub(4).max(1),
                hole_cap: config.hole_cap.saturating_sub(4).max(1),
                ..*config
            };
            let fine = gram_diagonal(&spec.domain, &weight, config, &approach.points, n)?;
            let coarse = gram_diagonal(&spec.domain, &weight, &coarse_config, &approach.points, n)?;
            (fine, Some((coarse, config.outer_cap.max(config.hole_cap))), GRAM_TOLERANCE)
        }
    };

    let target = factorial(n) * factorial(n - 1) / (PI * nu_p);
    let psi_factor: Vec<f64> = approach.points.iter().map(|&z| (-psi.eval(z)).powi(2 * n as i32)).collect();
    let normalized: Vec<f64> = diag.iter().zip(&psi_factor).map(|(k, f)| k * f).collect();
    let name = format!("defining-function normalization, n={n}");
    let mut psi_report = ConvergenceReport::assemble(name, &approach.params, &normalized, target, tolerance, gram_checks(&diag));

    let mut inversion = None;
    if let BoundaryComponent::Hole(i) = psi.component() {
        let hole = spec.domain.holes()[i];
        let factor: Vec<f64> = approach
            .points
            .iter()
            .map(|&z| (1.0 - (hole.radius / (z - hole.center)).norm_sqr()).powi(2 * n as i32))
            .collect();
        let values: Vec<f64> = diag.iter().zip(&factor).map(|(k, f)| k * f).collect();
        let target = factorial(n) * factorial(n - 1) / (PI * hole.radius.powi(2 * n as i32) * nu_p);
        let name = format!("hole-inversion normalization, n={n}");
        let mut report = ConvergenceReport::assemble(name, &approach.params, &values, target, tolerance, gram_checks(&diag));
        if let Some((coarse, cap)) = &refinement {
            report = report.with_refinement(refine(coarse, &factor, &values, *cap));
        }
        inversion = Some(report);
    }
    if let Some((coarse, cap)) = &refinement {
        psi_report = psi_report.with_refinement(refine(coarse, &psi_factor, &normalized, *cap));
    }
    Ok(BoundaryReports { psi: psi_report, inversion })
}

fn gram_diagonal(domain: &CircleDomain, weight: &Weight, config: &KernelConfig, points: &[CirclePoint], n: usize) -> Result<Vec<f64>> {
    let config = KernelConfig { max_derivative: config.max_derivative.max(n), ..*config };
    let ev = KernelEvaluator::for_domain(domain, weight, &config)?;
    points.par_iter().map(|&z| ev.kernel_diag_deriv(n, z)).collect()
}

fn gram_checks(diag: &[f64]) -> Vec<Check> {
    vec![Check::new("diagonal positive", diag.iter().all(|&v| v > 0.0))]
}

fn refine(coarse_diag: &[f64], factor: &[f64], fine: &[f64], fine_cap: usize) -> Refinement {
    let coarse_values: Vec<f64> = coarse_diag.iter().zip(factor).map(|(k, f)| k * f).collect();
    let differences = coarse_values.iter().zip(fine).map(|(c, f)| (f - c).abs()).collect();
    Refinement { fine_cap, coarse_cap: fine_cap.saturating_sub(4).max(1), coarse_values, differences }
}
