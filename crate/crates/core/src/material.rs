//! Constitutive layer: spectral strain split with tension-only degradation,
//! strain-history damage, smeared interface geometry and the exponential
//! cohesive zone model, plus phase-wise properties with homogenization
//! blending.
//!
//! Units are mm / N / MPa throughout; critical energy release rates are N/mm.

use alloc::format;

use crate::error::{Error, Result};
use crate::math::{real, Mat2, SymTensor2, Vec2};
use crate::score::{Phase, ScoreFunction};

/// Elastic and fracture constants of one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseProperties {
    /// Young's modulus (MPa).
    pub e: f64,
    /// Poisson ratio.
    pub nu: f64,
    /// Critical energy release rate (N/mm).
    pub g_c: f64,
}

impl PhaseProperties {
    pub fn new(e_mpa: f64, nu: f64, g_c: f64) -> Result<Self> {
        if !(e_mpa > 0.0) {
            return Err(Error::Parameter(format!("Young's modulus must be positive, got {e_mpa}")));
        }
        if !(0.0..0.5).contains(&nu) {
            return Err(Error::Parameter(format!("Poisson ratio must be in [0, 0.5), got {nu}")));
        }
        if !(g_c > 0.0) {
            return Err(Error::Parameter(format!("energy release rate must be positive, got {g_c}")));
        }
        Ok(PhaseProperties { e: e_mpa, nu, g_c })
    }

    /// Inputs in GPa are converted to the internal MPa unit system.
    pub fn from_gpa(e_gpa: f64, nu: f64, g_c: f64) -> Result<Self> {
        Self::new(e_gpa * 1000.0, nu, g_c)
    }

    /// Lame parameters (plane strain).
    #[inline]
    pub fn lame(&self) -> (f64, f64) {
        let lambda = self.e * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu));
        let mu = self.e / (2.0 * (1.0 + self.nu));
        (lambda, mu)
    }
}

/// Weighted-average property of the two phases at inclusion volume fraction p,
/// applied to E, nu and g_c independently.
pub fn homogenize(x_matrix: f64, x_inclusion: f64, p: f64) -> f64 {
    (1.0 - p) * x_matrix + p * x_inclusion
}

pub fn homogenize_properties(
    matrix: &PhaseProperties,
    inclusion: &PhaseProperties,
    p: f64,
) -> Result<PhaseProperties> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("volume fraction must be in [0, 1], got {p}")));
    }
    PhaseProperties::new(
        homogenize(matrix.e, inclusion.e, p),
        homogenize(matrix.nu, inclusion.nu, p),
        homogenize(matrix.g_c, inclusion.g_c, p),
    )
}

/// Linear blend between microstructure and homogenized values.
#[inline]
pub fn blend(x_micro: f64, x_homogenized: f64, alpha: f64) -> f64 {
    (1.0 - alpha) * x_micro + alpha * x_homogenized
}

/// Scaled logistic profile across a blending zone: 0 at the microstructure
/// boundary (s = 0), 1/2 at mid-zone, 1 at the homogenized boundary
/// (s = width). Outside the zone the caller decides by region.
pub fn blend_profile(s: f64, width: f64) -> f64 {
    debug_assert!(width > 0.0);
    let a = 1.0 / (1.0 + real::exp(-12.0 * (s / width - 0.5)));
    a.clamp(0.0, 1.0)
}

/// Xu-Needleman cohesive parameters with the characteristic openings derived
/// from the peak tractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CzmParameters {
    /// Interface critical energy release rate (N/mm).
    pub g_c: f64,
    /// Peak normal traction (MPa).
    pub t_n_max: f64,
    /// Peak tangential traction (MPa).
    pub t_t_max: f64,
    /// Characteristic normal opening (mm).
    pub delta_n: f64,
    /// Characteristic tangential opening (mm).
    pub delta_t: f64,
    /// Zeroes every tangential contribution (pure mode I).
    pub pure_mode_i: bool,
}

/// Characteristic openings: `delta_n = g_c / (T_n_max e)`,
/// `delta_t = g_c / (T_t_max sqrt(e/2))`.
pub fn czm_lengths(g_c: f64, t_n_max: f64, t_t_max: f64) -> Result<(f64, f64)> {
    if !(g_c > 0.0) || !(t_n_max > 0.0) || !(t_t_max > 0.0) {
        return Err(Error::Parameter(
            "cohesive energy and peak tractions must be positive".into(),
        ));
    }
    let e = real::exp(1.0);
    Ok((g_c / (t_n_max * e), g_c / (t_t_max * real::sqrt(0.5 * e))))
}

impl CzmParameters {
    pub fn new(g_c: f64, t_n_max: f64, t_t_max: f64, pure_mode_i: bool) -> Result<Self> {
        let (delta_n, delta_t) = czm_lengths(g_c, t_n_max, t_t_max)?;
        Ok(CzmParameters { g_c, t_n_max, t_t_max, delta_n, delta_t, pure_mode_i })
    }
}

/// Cohesive potential: zero at closure, releasing `g_c` at full decohesion.
pub fn czm_potential(w_n: f64, w_t: f64, p: &CzmParameters) -> f64 {
    let w_t = if p.pure_mode_i { 0.0 } else { w_t };
    let en = real::exp(-w_n / p.delta_n);
    let et = real::exp(-(w_t * w_t) / (p.delta_t * p.delta_t));
    p.g_c * (1.0 - (1.0 + w_n / p.delta_n) * en * et)
}

/// Normal and tangential tractions, the exact gradient of [`czm_potential`].
pub fn czm_tractions(w_n: f64, w_t: f64, p: &CzmParameters) -> (f64, f64) {
    let w_t_eff = if p.pure_mode_i { 0.0 } else { w_t };
    let en = real::exp(-w_n / p.delta_n);
    let et = real::exp(-(w_t_eff * w_t_eff) / (p.delta_t * p.delta_t));
    let t_n = p.g_c * w_n / (p.delta_n * p.delta_n) * en * et;
    if p.pure_mode_i {
        return (t_n, 0.0);
    }
    let t_t = 2.0 * p.g_c * w_t / (p.delta_t * p.delta_t) * (1.0 + w_n / p.delta_n) * en * et;
    (t_n, t_t)
}

/// Secant moduli `t/w` of the cohesive law in the (normal, tangent) frame,
/// finite at closure. The tangential secant turns negative past deep normal
/// compression (w_n < -delta_n); it is floored at zero to keep the assembled
/// operator positive semi-definite.
pub fn czm_secant(w_n: f64, w_t: f64, p: &CzmParameters) -> (f64, f64) {
    let w_t_eff = if p.pure_mode_i { 0.0 } else { w_t };
    let en = real::exp(-w_n / p.delta_n);
    let et = real::exp(-(w_t_eff * w_t_eff) / (p.delta_t * p.delta_t));
    let k_n = p.g_c / (p.delta_n * p.delta_n) * en * et;
    if p.pure_mode_i {
        return (k_n, 0.0);
    }
    let k_t = 2.0 * p.g_c / (p.delta_t * p.delta_t) * (1.0 + w_n / p.delta_n) * en * et;
    (k_n, f64::max(k_t, 0.0))
}

/// Regularization lengths and the residual stiffness factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationLengths {
    /// Damage length scale l_d (mm).
    pub l_d: f64,
    /// Interface length scale l_beta (mm), independent of l_d.
    pub l_beta: f64,
    /// Jump smearing length h (mm).
    pub h_jump: f64,
    /// Residual stiffness factor kappa.
    pub kappa: f64,
}

impl RegularizationLengths {
    pub fn new(l_d: f64, l_beta: f64, h_jump: f64, kappa: f64) -> Result<Self> {
        if !(l_d > 0.0) || !(l_beta > 0.0) || !(h_jump > 0.0) {
            return Err(Error::Parameter("regularization lengths must be positive".into()));
        }
        if !(kappa > 0.0) || kappa >= 1.0 {
            return Err(Error::Parameter(format!("kappa must be in (0, 1), got {kappa}")));
        }
        Ok(RegularizationLengths { l_d, l_beta, h_jump, kappa })
    }
}

pub const DEFAULT_KAPPA: f64 = 1e-8;

/// Principal strains (high to low) with orthonormal directions.
pub fn spectral_split(eps: SymTensor2) -> ((f64, f64), (Vec2, Vec2)) {
    eps.eigen()
}

#[inline]
fn macaulay_pos(x: f64) -> f64 {
    0.5 * (x + real::abs(x))
}

#[inline]
fn macaulay_neg(x: f64) -> f64 {
    0.5 * (x - real::abs(x))
}

/// Tensile and compressive strain energies
/// `psi+- = mu <e_i>+- <e_i>+- + lambda/2 <tr eps>+-^2`.
pub fn strain_energy_split(eps: SymTensor2, lambda: f64, mu: f64) -> (f64, f64) {
    let ((e1, e2), _) = eps.eigen();
    let tr = eps.trace();
    let tp = macaulay_pos(tr);
    let tn = macaulay_neg(tr);
    let plus = mu * (macaulay_pos(e1) * macaulay_pos(e1) + macaulay_pos(e2) * macaulay_pos(e2))
        + 0.5 * lambda * tp * tp;
    let minus = mu * (macaulay_neg(e1) * macaulay_neg(e1) + macaulay_neg(e2) * macaulay_neg(e2))
        + 0.5 * lambda * tn * tn;
    (plus, minus)
}

/// Cauchy stress with the tensile part degraded by `g(d) + kappa`,
/// `g(d) = (1 - d)^2`.
pub fn degraded_stress(
    eps: SymTensor2,
    d: f64,
    lambda: f64,
    mu: f64,
    kappa: f64,
) -> Result<SymTensor2> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Parameter(format!("damage must be in [0, 1], got {d}")));
    }
    let g = (1.0 - d) * (1.0 - d) + kappa;
    let ((e1, e2), (v1, v2)) = eps.eigen();
    let tr = eps.trace();
    let mut sigma = SymTensor2::ZERO;
    for (ev, dir) in [(e1, v1), (e2, v2)] {
        let coef = 2.0 * mu * (g * macaulay_pos(ev) + macaulay_neg(ev));
        sigma += SymTensor2::outer(dir) * coef;
    }
    let vol = lambda * (g * macaulay_pos(tr) + macaulay_neg(tr));
    sigma += SymTensor2::new(vol, vol, 0.0);
    Ok(sigma)
}

/// Degraded elasticity operator in Voigt form ([e11, e22, 2 e12] ordering)
/// with the tension/compression state frozen at `eps`. Contracting it with
/// `eps` itself reproduces [`degraded_stress`]; the solver uses it as the
/// Picard secant.
pub fn degraded_stiffness(
    eps: SymTensor2,
    d: f64,
    lambda: f64,
    mu: f64,
    kappa: f64,
) -> [[f64; 3]; 3] {
    let g = (1.0 - d) * (1.0 - d) + kappa;
    let ((e1, e2), (v1, v2)) = eps.eigen();
    let mut c = [[0.0f64; 3]; 3];
    let mut add_outer = |p: [f64; 3], w: f64| {
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] += w * p[i] * p[j];
            }
        }
    };
    for (ev, dir) in [(e1, v1), (e2, v2)] {
        let f = if ev >= 0.0 { g } else { 1.0 };
        add_outer([dir.x * dir.x, dir.y * dir.y, dir.x * dir.y], 2.0 * mu * f);
    }
    let f_tr = if eps.trace() >= 0.0 { g } else { 1.0 };
    add_outer([1.0, 1.0, 0.0], lambda * f_tr);
    c
}

/// Smeared interface weight `beta = exp(-|dist| / l_beta)`, the 1D
/// Euler-Lagrange profile of the interface functional.
#[inline]
pub fn interface_beta(dist: f64, l_beta: f64) -> f64 {
    debug_assert!(l_beta > 0.0);
    real::exp(-real::abs(dist) / l_beta)
}

/// Interface density for the exponential profile: `|grad beta| = beta/l_beta`
/// collapses the density to `beta^2 / l_beta`.
#[inline]
pub fn interface_density(beta: f64, l_beta: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&beta));
    beta * beta / l_beta
}

/// Smeared displacement jump `w = h (grad u) n`.
#[inline]
pub fn smeared_jump(grad_u: Mat2, normal: Vec2, h_jump: f64) -> Vec2 {
    grad_u.mul_vec(normal) * h_jump
}

/// Admissible bulk strain `eps_e = sym(grad u) - gamma_beta * (n (x)s w)`.
#[inline]
pub fn effective_strain(sym_grad: SymTensor2, w: Vec2, normal: Vec2, gamma_beta: f64) -> SymTensor2 {
    sym_grad - SymTensor2::sym_outer(normal, w) * gamma_beta
}

/// Strain-driven damage `d = 2H / (2H + (1 - beta) g_c / l_d)`.
pub fn damage(history: f64, beta: f64, g_c: f64, l_d: f64) -> f64 {
    debug_assert!(history >= 0.0);
    let resistance = (1.0 - beta) * g_c / l_d;
    if history == 0.0 {
        return 0.0;
    }
    2.0 * history / (2.0 * history + resistance)
}

/// Irreversibility: the history field is the running maximum of the tensile
/// energy.
#[inline]
pub fn update_history(h_old: f64, psi_plus: f64) -> f64 {
    f64::max(h_old, psi_plus)
}

/// Smeared interface geometry at a point: weight, density and the local
/// normal/tangent frame. A degenerate score gradient means "no interface in
/// reach" and returns the pure-bulk limit (beta = 0).
#[derive(Debug, Clone, Copy)]
pub struct InterfaceGeometry {
    pub beta: f64,
    pub gamma_beta: f64,
    pub normal: Vec2,
    pub tangent: Vec2,
}

impl InterfaceGeometry {
    pub const BULK: InterfaceGeometry = InterfaceGeometry {
        beta: 0.0,
        gamma_beta: 0.0,
        normal: Vec2 { x: 1.0, y: 0.0 },
        tangent: Vec2 { x: 0.0, y: 1.0 },
    };
}

pub fn interface_geometry(score: &dyn ScoreFunction, x: Vec2, l_beta: f64) -> InterfaceGeometry {
    let g = score.score_gradient(x);
    let norm = g.norm();
    if norm <= score.gradient_epsilon() {
        return InterfaceGeometry::BULK;
    }
    let normal = g * (1.0 / norm);
    let dist = score.score(x) / norm;
    let beta = interface_beta(dist, l_beta);
    InterfaceGeometry {
        beta,
        gamma_beta: interface_density(beta, l_beta),
        normal,
        tangent: normal.rot90(),
    }
}

/// Per-phase material data for a two-phase solid.
#[derive(Debug, Clone, Copy)]
pub struct MaterialModel {
    pub matrix: PhaseProperties,
    pub inclusion: PhaseProperties,
    pub czm: CzmParameters,
    pub lengths: RegularizationLengths,
}

impl MaterialModel {
    #[inline]
    pub fn phase(&self, phase: Phase) -> &PhaseProperties {
        match phase {
            Phase::Matrix => &self.matrix,
            Phase::Inclusion => &self.inclusion,
        }
    }
}
