//! One-dimensional RK evaluation with a linear basis.
//!
//! Used for verification: with the tent kernel and support equal to the nodal
//! spacing, the RK construction degenerates to the finite-element hat
//! functions, which gives a closed-form oracle for the whole pipeline.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{real, SmallSymMatrix};

use super::Kernel;

/// Values and derivatives of all contributing 1D shape functions at `x`.
#[derive(Debug, Clone)]
pub struct LineShapeEval {
    pub ids: Vec<u32>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
}

impl LineShapeEval {
    pub fn value_of(&self, id: u32) -> f64 {
        self.ids
            .iter()
            .position(|&i| i == id)
            .map_or(0.0, |k| self.values[k])
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// 1D moment matrix over an explicit (position, kernel value) set, linear
/// basis [1, x - x_I].
pub fn moment_matrix_1d(x: f64, contributions: &[(f64, f64)]) -> SmallSymMatrix {
    let mut m = SmallSymMatrix::zeros(2);
    for &(xn, phi) in contributions {
        m.add_outer(&[1.0, x - xn], phi);
    }
    m
}

/// Linear-basis RK shape functions on a 1D node set with uniform support.
pub fn shape_functions_1d(
    x: f64,
    nodes: &[f64],
    support: f64,
    kernel: Kernel,
) -> Result<LineShapeEval> {
    if !(support > 0.0) {
        return Err(Error::Parameter("support must be positive".into()));
    }
    let mut ids = Vec::new();
    let mut phis = Vec::new();
    for (id, &xn) in nodes.iter().enumerate() {
        let z = real::abs(x - xn) / support;
        if z < 1.0 {
            let (phi, dphi_dz) = kernel.value_deriv(z);
            let dz_dx = if x == xn { 0.0 } else { (x - xn).signum() / support };
            ids.push(id as u32);
            phis.push((xn, phi, dphi_dz * dz_dx));
        }
    }
    if ids.len() < 2 {
        return Err(Error::Coverage {
            x: [x, 0.0],
            contributing: ids.len(),
            condition: f64::INFINITY,
        });
    }

    let mut m = SmallSymMatrix::zeros(2);
    let mut mp = SmallSymMatrix::zeros(2);
    for &(xn, phi, dphi) in &phis {
        let h = [1.0, x - xn];
        m.add_outer(&h, phi);
        // d/dx of H H^T phi: H' = [0, 1]
        let v00 = mp.get(0, 0) + dphi;
        mp.set(0, 0, v00);
        let v01 = mp.get(0, 1) + phi + h[1] * dphi;
        mp.set(0, 1, v01);
        let v11 = mp.get(1, 1) + 2.0 * h[1] * phi + h[1] * h[1] * dphi;
        mp.set(1, 1, v11);
    }
    let factor = m.ldlt().ok_or(Error::Coverage {
        x: [x, 0.0],
        contributing: ids.len(),
        condition: f64::INFINITY,
    })?;
    let mut b = [1.0, 0.0];
    factor.solve(&mut b);
    let mut bp = [0.0, 0.0];
    mp.mul_vec(&b, &mut bp);
    bp[0] = -bp[0];
    bp[1] = -bp[1];
    factor.solve(&mut bp);

    let mut values = Vec::with_capacity(ids.len());
    let mut derivatives = Vec::with_capacity(ids.len());
    for &(xn, phi, dphi) in &phis {
        let h = [1.0, x - xn];
        let bh = b[0] * h[0] + b[1] * h[1];
        let bph = bp[0] * h[0] + bp[1] * h[1];
        let bhp = b[1];
        values.push(bh * phi);
        derivatives.push((bph + bhp) * phi + bh * dphi);
    }
    Ok(LineShapeEval { ids, values, derivatives })
}
