//! Convergence experiments along boundary approach sequences and exhaustions.

mod boundary;
mod localization;
mod ramadanov;
mod scaling;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{CircleDomain, CirclePoint, DefiningFunction};

pub use boundary::{run_boundary_asymptotics, BoundaryBackend, BoundaryReports, BoundarySpec};
pub use localization::{run_localization, LocalizationSpec};
pub use ramadanov::{run_ramadanov_decreasing, run_ramadanov_increasing, RamadanovFamily, RamadanovSpec};
pub use scaling::run_scaling;

/// Closed-form-backed experiments.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-3;
/// Gram-backed experiments, limited by truncation.
pub const GRAM_TOLERANCE: f64 = 5e-2;
/// Closest admissible approach, relative to the outer radius.
pub const PROXIMITY_FLOOR: f64 = 7.8125e-4;
/// Errors within this of each other count as non-increasing.
pub const MONOTONE_FLOOR: f64 = 1e-12;

/// Points `z_k = p + t_k * normal`, `t_k = t0 * ratio^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproachSequence {
    pub anchor: CirclePoint,
    pub normal: Complex64,
    pub params: Vec<f64>,
    pub points: Vec<CirclePoint>,
}

impl ApproachSequence {
    pub const DEFAULT_T0: f64 = 0.2;
    pub const DEFAULT_RATIO: f64 = 0.5;
    pub const DEFAULT_COUNT: usize = 8;

    pub fn new(domain: &CircleDomain, anchor: CirclePoint, t0: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(t0 > 0.0 && ratio > 0.0 && ratio < 1.0 && count >= 1) {
            return Err(Error::InvalidExperiment(format!(
                "approach needs t0 > 0, ratio in (0, 1), count >= 1 (got {t0}, {ratio}, {count})"
            )));
        }
        let psi = DefiningFunction::new(domain, anchor)?;
        let normal = psi.inward_normal();
        let params: Vec<f64> = (0..count).map(|k| t0 * ratio.powi(k as i32)).collect();
        let floor = PROXIMITY_FLOOR * domain.outer().radius * (1.0 - 1e-9);
        if let Some(t) = params.iter().find(|&&t| t < floor) {
            return Err(Error::InvalidExperiment(format!("approach parameter {t:e} is below the proximity floor {floor:e}")));
        }
        let points: Vec<CirclePoint> = params.iter().map(|t| anchor + normal * *t).collect();
        for z in &points {
            domain.distance_to_boundary(*z)?;
        }
        Ok(ApproachSequence { anchor, normal, params, points })
    }

    pub fn with_defaults(domain: &CircleDomain, anchor: CirclePoint) -> Result<Self> {
        Self::new(domain, anchor, Self::DEFAULT_T0, Self::DEFAULT_RATIO, Self::DEFAULT_COUNT)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportStep {
    pub step: usize,
    pub param: f64,
    pub value: f64,
    pub target: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool) -> Self {
        Check { name: name.into(), passed }
    }
}

/// Values at a coarser truncation, as an error proxy for Gram-backed runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refinement {
    pub fine_cap: usize,
    pub coarse_cap: usize,
    pub coarse_values: Vec<f64>,
    pub differences: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub name: String,
    pub steps: Vec<ReportStep>,
    pub target: f64,
    pub tolerance: f64,
    pub final_error: f64,
    pub monotone: bool,
    pub empirical_order: Option<f64>,
    pub checks: Vec<Check>,
    pub refinement: Option<Refinement>,
    pub passed: bool,
}

impl ConvergenceReport {
    /// Relative errors against `target`; passes when the final error is
    /// within `tolerance`, the last four errors do not increase, and every
    /// extra check holds.
    pub fn assemble(
        name: impl Into<String>,
        params: &[f64],
        values: &[f64],
        target: f64,
        tolerance: f64,
        checks: Vec<Check>,
    ) -> Self {
        let steps: Vec<ReportStep> = params
            .iter()
            .zip(values)
            .enumerate()
            .map(|(step, (&param, &value))| ReportStep {
                step,
                param,
                value,
                target,
                error: ((value - target) / target).abs(),
            })
            .collect();
        let errors: Vec<f64> = steps.iter().map(|s| s.error).collect();
        let final_error = errors.last().copied().unwrap_or(f64::NAN);
        let tail = &errors[errors.len().saturating_sub(4)..];
        let monotone = tail.windows(2).all(|p| p[1] <= p[0] + MONOTONE_FLOOR);
        let empirical_order = empirical_order(params, &errors);
        let passed = errors.iter().all(|e| e.is_finite())
            && final_error <= tolerance
            && monotone
            && checks.iter().all(|c| c.passed);
        ConvergenceReport {
            name: name.into(),
            steps,
            target,
            tolerance,
            final_error,
            monotone,
            empirical_order,
            checks,
            refinement: None,
            passed,
        }
    }

    /// Re-judges the report against another final-error tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.passed = self.steps.iter().all(|s| s.error.is_finite())
            && self.final_error <= tolerance
            && self.monotone
            && self.checks.iter().all(|c| c.passed);
        self
    }

    pub fn with_refinement(mut self, refinement: Refinement) -> Self {
        self.refinement = Some(refinement);
        self
    }

    pub fn values(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.value).collect()
    }
}

/// Least-squares slope of `log(error)` against `log(param)` over the last
/// four steps; `None` once errors sit at rounding level.
fn empirical_order(params: &[f64], errors: &[f64]) -> Option<f64> {
    let start = errors.len().saturating_sub(4);
    let pts: Vec<(f64, f64)> = params[start..]
        .iter()
        .zip(&errors[start..])
        .filter(|(p, e)| **p > 0.0 && **e > 1e-13)
        .map(|(p, e)| (p.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

pub(crate) fn non_increasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|p| p[1] <= p[0] + slack * p[0].abs())
}

pub(crate) fn non_decreasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|p| p[1] >= p[0] - slack * p[0].abs())
}
