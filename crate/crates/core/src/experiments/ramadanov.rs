//! Diagonal kernels along monotone exhaustions (and shrinking families) of the disc.

use num_complex::Complex64;
use rayon::prelude::*;

use super::{non_decreasing, non_increasing, Check, ConvergenceReport, CLOSED_FORM_TOLERANCE};
use crate::error::{Error, Result};
use crate::geometry::{CircleDomain, CirclePoint};
use crate::kernel::{disc_kernel_diag, KernelConfig, KernelEvaluator, UnitDiscKernel};
use crate::transform::{transformed_kernel_deriv, Biholomorphism};
use crate::weight::Weight;

const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum RamadanovFamily {
    /// Discs `D(0, r_i)`.
    Radii(Vec<f64>),
    /// Constant weights `mu_i = c_i` on the unit disc.
    WeightScales(Vec<f64>),
}

impl RamadanovFamily {
    fn members(&self) -> &[f64] {
        match self {
            RamadanovFamily::Radii(v) | RamadanovFamily::WeightScales(v) => v,
        }
    }

    /// `r_i = 1 - 2^{-i}` for `i = 1..=count`.
    pub fn increasing_radii(count: usize) -> Self {
        RamadanovFamily::Radii((1..=count).map(|i| 1.0 - 0.5f64.powi(i as i32)).collect())
    }

    /// `r_i = 1 + 2^{-i}` for `i = 1..=count`.
    pub fn decreasing_radii(count: usize) -> Self {
        RamadanovFamily::Radii((1..=count).map(|i| 1.0 + 0.5f64.powi(i as i32)).collect())
    }

    /// `mu_i = 1 - 2^{-i}` for `i = 1..=count`.
    pub fn increasing_weights(count: usize) -> Self {
        RamadanovFamily::WeightScales((1..=count).map(|i| 1.0 - 0.5f64.powi(i as i32)).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamadanovSpec {
    pub family: RamadanovFamily,
    pub probes: Vec<CirclePoint>,
    pub n: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Direction {
    Increasing,
    Decreasing,
}

/// Values must not increase along the family and converge down to the disc value.
pub fn run_ramadanov_increasing(spec: &RamadanovSpec) -> Result<ConvergenceReport> {
    run(spec, Direction::Increasing)
}

/// Values must not decrease along the family and converge up to the disc value.
pub fn run_ramadanov_decreasing(spec: &RamadanovSpec) -> Result<ConvergenceReport> {
    run(spec, Direction::Decreasing)
}

fn run(spec: &RamadanovSpec, dir: Direction) -> Result<ConvergenceReport> {
    validate(spec, dir)?;
    let members = spec.family.members();
    // values[probe][step]
    let values: Vec<Vec<f64>> = spec
        .probes
        .iter()
        .map(|&z| members.par_iter().map(|&m| member_value(&spec.family, m, z, spec.n)).collect::<Result<Vec<f64>>>())
        .collect::<Result<_>>()?;
    let targets: Vec<f64> = spec.probes.iter().map(|&z| disc_kernel_diag(z, spec.n)).collect::<Result<_>>()?;

    let mut checks = Vec::new();
    for (k, (vals, target)) in values.iter().zip(&targets).enumerate() {
        let ordered = match dir {
            Direction::Increasing => non_increasing(vals, MONOTONE_SLACK),
            Direction::Decreasing => non_decreasing(vals, MONOTONE_SLACK),
        };
        let label = match dir {
            Direction::Increasing => "non-increasing",
            Direction::Decreasing => "non-decreasing",
        };
        checks.push(Check::new(format!("probe {k} {label}"), ordered));
        if k > 0 {
            let err = (vals.last().unwrap() / target - 1.0).abs();
            checks.push(Check::new(format!("probe {k} final error {err:.3e}"), err <= CLOSED_FORM_TOLERANCE));
        }
    }
    let params: Vec<f64> = members.iter().map(|m| (1.0 - m).abs()).collect();
    let name = match (&spec.family, dir) {
        (RamadanovFamily::Radii(_), Direction::Increasing) => "exhaustion by increasing discs",
        (RamadanovFamily::Radii(_), Direction::Decreasing) => "intersection of decreasing discs",
        (RamadanovFamily::WeightScales(_), Direction::Increasing) => "increasing constant weights",
        (RamadanovFamily::WeightScales(_), Direction::Decreasing) => "decreasing constant weights",
    };
    Ok(ConvergenceReport::assemble(
        format!("{name}, n={}", spec.n),
        &params,
        &values[0],
        targets[0],
        CLOSED_FORM_TOLERANCE,
        checks,
    ))
}

fn validate(spec: &RamadanovSpec, dir: Direction) -> Result<()> {
    let members = spec.family.members();
    if spec.n == 0 {
        return Err(Error::InvalidKernelOrder { n: 0, min: 1 });
    }
    if members.is_empty() || spec.probes.is_empty() {
        return Err(Error::InvalidExperiment("family and probes must be non-empty".into()));
    }
    let (ok, what) = match dir {
        Direction::Increasing => (members.windows(2).all(|p| p[1] > p[0]) && members.iter().all(|&m| m > 0.0 && m < 1.0), "strictly increasing in (0, 1)"),
        Direction::Decreasing => (members.windows(2).all(|p| p[1] < p[0]) && members.iter().all(|&m| m > 1.0), "strictly decreasing above 1"),
    };
    if !ok {
        return Err(Error::InvalidExperiment(format!("family must be {what}")));
    }
    let smallest = match spec.family {
        RamadanovFamily::Radii(_) => members.iter().cloned().fold(1.0, f64::min),
        RamadanovFamily::WeightScales(_) => 1.0,
    };
    let limit = CircleDomain::disc(Complex64::new(0.0, 0.0), smallest)?;
    for &z in &spec.probes {
        limit.distance_to_boundary(z)?;
    }
    Ok(())
}

fn member_value(family: &RamadanovFamily, m: f64, z: CirclePoint, n: usize) -> Result<f64> {
    match family {
        RamadanovFamily::Radii(_) => {
            // D(0, r) -> unit disc by z / r
            let f = Biholomorphism::affine(Complex64::new(1.0 / m, 0.0), Complex64::new(0.0, 0.0))?;
            Ok(transformed_kernel_deriv(&f, &UnitDiscKernel, n, z, z)?.re)
        }
        RamadanovFamily::WeightScales(_) => {
            let d = CircleDomain::unit_disc();
            let config = KernelConfig::for_domain(&d);
            let ev = KernelEvaluator::for_domain(&d, &Weight::constant(m)?, &config)?;
            ev.kernel_diag_deriv(n, z)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn zero() -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    #[test]
    fn increasing_discs_scale_as_inverse_square() {
        let spec = RamadanovSpec { family: RamadanovFamily::increasing_radii(8), probes: vec![zero()], n: 1 };
        let r = run_ramadanov_increasing(&spec).unwrap();
        for (s, i) in r.steps.iter().zip(1..) {
            let ri = 1.0 - 0.5f64.powi(i);
            assert!((s.value - 1.0 / (PI * ri * ri)).abs() < 1e-14);
        }
        assert!(r.checks.iter().all(|c| c.passed) && r.monotone);
        // 1/r_8^2 - 1 is about 7.8e-3; the 1e-3 tolerance needs i >= 11
        assert!((r.final_error - (1.0 / (1.0 - 1.0 / 256.0f64).powi(2) - 1.0)).abs() < 1e-14);
        let long = RamadanovSpec { family: RamadanovFamily::increasing_radii(12), ..spec };
        assert!(run_ramadanov_increasing(&long).unwrap().passed);
    }

    #[test]
    fn second_order_quartic_scaling() {
        let spec = RamadanovSpec { family: RamadanovFamily::increasing_radii(8), probes: vec![zero()], n: 2 };
        let r = run_ramadanov_increasing(&spec).unwrap();
        for (s, i) in r.steps.iter().zip(1..) {
            let ri = 1.0 - 0.5f64.powi(i);
            assert!((s.value / (2.0 / (PI * ri.powi(4))) - 1.0).abs() < 1e-13);
        }
        assert!((r.target - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn decreasing_discs_increase_to_limit() {
        let spec = RamadanovSpec { family: RamadanovFamily::decreasing_radii(12), probes: vec![zero()], n: 1 };
        let r = run_ramadanov_decreasing(&spec).unwrap();
        assert!(r.checks.iter().all(|c| c.passed));
        assert!(r.steps.windows(2).all(|p| p[1].value > p[0].value));
        let spec = RamadanovSpec {
            family: RamadanovFamily::decreasing_radii(12),
            probes: vec![Complex64::new(0.3, 0.0)],
            n: 2,
        };
        let r = run_ramadanov_decreasing(&spec).unwrap();
        assert!(r.checks[0].passed);
        assert!(r.final_error < 2e-2);
    }

    #[test]
    fn constant_weights_scale_inversely() {
        let spec = RamadanovSpec { family: RamadanovFamily::increasing_weights(8), probes: vec![zero()], n: 1 };
        let r = run_ramadanov_increasing(&spec).unwrap();
        for (s, i) in r.steps.iter().zip(1..) {
            let mi = 1.0 - 0.5f64.powi(i);
            assert!((s.value * mi * PI - 1.0).abs() < 1e-10);
        }
        assert!(r.checks.iter().all(|c| c.passed));
    }

    #[test]
    fn rejects_bad_families() {
        let bad = RamadanovSpec { family: RamadanovFamily::Radii(vec![0.5, 0.4]), probes: vec![zero()], n: 1 };
        assert!(run_ramadanov_increasing(&bad).is_err());
        let outside = RamadanovSpec { family: RamadanovFamily::increasing_radii(3), probes: vec![Complex64::new(0.6, 0.0)], n: 1 };
        assert!(matches!(run_ramadanov_increasing(&outside), Err(Error::PointOutsideDomain { .. })));
    }
}
