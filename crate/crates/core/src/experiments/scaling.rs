//! Blow-up of a boundary point of the disc onto a half-plane.

use num_complex::Complex64;

use super::{Check, ConvergenceReport, CLOSED_FORM_TOLERANCE};
use crate::error::{Error, Result};
use crate::geometry::{CircleDomain, CirclePoint, DefiningFunction};
use crate::kernel::{disc_kernel_diag, UnitDiscKernel};
use crate::transform::{half_plane_diag, transformed_kernel_deriv, Biholomorphism};

const PATH_AGREEMENT: f64 = 1e-10;

/// `K_{D_j}(0, 0)` for `D_j = T_j(D)`, `T_j(z) = (z - p_j)/(-psi(p_j))`,
/// `p_j = (1 - 2^{-j}) p`, computed through the map and through the defining
/// function; both should approach the half-plane value.
pub fn run_scaling(anchor: CirclePoint, n: usize, count: usize) -> Result<ConvergenceReport> {
    if n == 0 {
        return Err(Error::InvalidKernelOrder { n, min: 1 });
    }
    if count == 0 {
        return Err(Error::InvalidExperiment("scaling needs at least one step".into()));
    }
    let disc = CircleDomain::unit_disc();
    let psi = DefiningFunction::new(&disc, anchor)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut params = Vec::with_capacity(count);
    let mut direct = Vec::with_capacity(count);
    let mut agree = true;
    for j in 1..=count {
        let t = 0.5f64.powi(j as i32);
        let pj = anchor * (1.0 - t);
        let h = -psi.eval(pj);
        let tj = Biholomorphism::scaling(pj, h)?;
        let a = transformed_kernel_deriv(&tj.inverse(), &UnitDiscKernel, n, zero, zero)?.re;
        let b = psi.eval(pj).powi(2 * n as i32) * disc_kernel_diag(pj, n)?;
        agree &= (a - b).abs() <= PATH_AGREEMENT * a.abs().max(b.abs());
        params.push(t);
        direct.push(a);
    }
    let target = half_plane_diag(n)?;
    Ok(ConvergenceReport::assemble(
        format!("scaling toward the half-plane, n={n}"),
        &params,
        &direct,
        target,
        CLOSED_FORM_TOLERANCE,
        vec![Check::new("map and defining-function paths agree", agree)],
    ))
}
