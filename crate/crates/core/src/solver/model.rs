//! Cached Galerkin model: shape functions, interface geometry and blended
//! material data at every volume and boundary quadrature point, plus the
//! assembly routines of the Picard-linearized operator.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::discretization::{
    boundary_quadrature, build_quadrature, BoundaryStation, NodeSet, QuadratureRule,
};
use crate::error::{Error, Result};
use crate::material::{
    blend, blend_profile, czm_secant, czm_tractions, damage, degraded_stiffness, degraded_stress,
    effective_strain, homogenize_properties, interface_geometry, smeared_jump, strain_energy_split,
    CzmParameters, InterfaceGeometry, MaterialModel, PhaseProperties,
};
use crate::math::{Mat2, Rect, SymTensor2, Vec2};
use crate::rk::{shape_functions, InterfaceMod, ShapeConfig, ShapeEval};
use crate::score::{Phase, ScoreFunction};
use crate::solver::banded::BandedSymMatrix;

/// Solver construction options.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub shape: ShapeConfig,
    /// Gauss order of the background cells.
    pub quadrature_order: usize,
    /// Background cell edge in multiples of the nodal spacing.
    pub cell_size_factor: f64,
    /// Kernel-truncation length c in multiples of the nodal spacing.
    pub im_scale_factor: f64,
    /// Use interface-modified kernels (meaningful when a score with an
    /// interface is supplied).
    pub interface_modified: bool,
    /// Boundary penalty in multiples of E_max / h_node.
    pub penalty_factor: f64,
    /// Freeze the damage field at zero (verification runs).
    pub damage_enabled: bool,
    /// Fixed-point iteration controls.
    pub max_picard_iterations: usize,
    pub damage_tolerance: f64,
    pub displacement_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            shape: ShapeConfig::default(),
            quadrature_order: 2,
            cell_size_factor: 1.0,
            im_scale_factor: 1.0,
            interface_modified: true,
            penalty_factor: 1e7,
            damage_enabled: true,
            max_picard_iterations: 50,
            damage_tolerance: 1e-4,
            displacement_tolerance: 1e-6,
        }
    }
}

/// Optional 1D blending band between the microstructure window and a
/// homogenized remainder, per coordinate axis.
#[derive(Debug, Clone, Copy)]
pub struct BlendZone {
    /// 0 = blend along x, 1 = along y.
    pub axis: usize,
    /// Microstructure window on that axis (mm).
    pub micro_min: f64,
    pub micro_max: f64,
    /// Blending band width (mm).
    pub width: f64,
    /// Inclusion volume fraction of the homogenized remainder.
    pub volume_fraction: f64,
}

/// Per-quadrature-point cache. Geometry and shape data never change during a
/// simulation; only the state (history, damage) evolves.
#[derive(Debug, Clone)]
pub(crate) struct PointData {
    pub weight: f64,
    pub position: Vec2,
    pub shape: ShapeEval,
    pub geometry: InterfaceGeometry,
    pub lambda: f64,
    pub mu: f64,
    pub g_c: f64,
    /// Interface terms are assembled only where the smeared weight matters.
    pub interface_active: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct BoundaryData {
    pub station: BoundaryStation,
    pub shape: ShapeEval,
}

/// Immutable discretized problem: nodes, quadrature, cached shape data and
/// material constants.
pub struct GalerkinModel {
    nodes: NodeSet,
    quadrature: QuadratureRule,
    pub(crate) points: Vec<PointData>,
    pub(crate) boundary: Vec<BoundaryData>,
    pub material: MaterialModel,
    pub options: SolverOptions,
    pub(crate) ndof: usize,
    pub(crate) bandwidth: usize,
    pub(crate) penalty: f64,
    pub(crate) has_interface_points: bool,
}

/// Kinematic state of one quadrature point under a displacement vector.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PointKinematics {
    pub eps_eff: SymTensor2,
    pub w_n: f64,
    pub w_t: f64,
    pub psi_plus: f64,
    pub psi_minus: f64,
}

impl GalerkinModel {
    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quadrature
    }

    pub fn ndof(&self) -> usize {
        self.ndof
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    pub fn point_position(&self, idx: usize) -> Vec2 {
        self.points[idx].position
    }

    pub fn point_beta(&self, idx: usize) -> f64 {
        self.points[idx].geometry.beta
    }

    pub fn domain(&self) -> Rect {
        self.quadrature.domain
    }

    /// True when no quadrature point carries interface terms.
    pub fn interface_inactive(&self) -> bool {
        !self.has_interface_points
    }

    /// Interpolated displacement at an arbitrary point.
    pub fn displacement_at(&self, x: Vec2, u: &[f64]) -> Result<Vec2> {
        let eval = shape_functions(x, &self.nodes, None, &self.options.shape)?;
        let mut v = Vec2::ZERO;
        for (k, &id) in eval.ids.iter().enumerate() {
            let i = id as usize;
            v += Vec2::new(u[2 * i], u[2 * i + 1]) * eval.values[k];
        }
        Ok(v)
    }

    pub(crate) fn kinematics(&self, pd: &PointData, u: &[f64]) -> PointKinematics {
        let mut grad = Mat2::ZERO;
        for (k, &id) in pd.shape.ids.iter().enumerate() {
            let i = id as usize;
            let g = pd.shape.gradients[k];
            let (ux, uy) = (u[2 * i], u[2 * i + 1]);
            grad.xx += ux * g.x;
            grad.xy += ux * g.y;
            grad.yx += uy * g.x;
            grad.yy += uy * g.y;
        }
        let sym = grad.sym();
        let (eps_eff, w_n, w_t) = if pd.interface_active {
            let geo = &pd.geometry;
            let w = smeared_jump(grad, geo.normal, self.material.lengths.h_jump);
            (
                effective_strain(sym, w, geo.normal, geo.gamma_beta),
                w.dot(geo.normal),
                w.dot(geo.tangent),
            )
        } else {
            (sym, 0.0, 0.0)
        };
        let (psi_plus, psi_minus) = strain_energy_split(eps_eff, pd.lambda, pd.mu);
        PointKinematics { eps_eff, w_n, w_t, psi_plus, psi_minus }
    }

    /// Damage at a point from its committed-or-trial history value.
    pub(crate) fn point_damage(&self, pd: &PointData, history: f64) -> f64 {
        if !self.options.damage_enabled {
            return 0.0;
        }
        damage(history, pd.geometry.beta, pd.g_c, self.material.lengths.l_d)
    }
}

fn blended_properties(
    material: &MaterialModel,
    zone: Option<&BlendZone>,
    phase: Phase,
    x: Vec2,
) -> Result<PhaseProperties> {
    let micro = *material.phase(phase);
    let Some(z) = zone else {
        return Ok(micro);
    };
    let coord = if z.axis == 0 { x.x } else { x.y };
    let s = if coord < z.micro_min {
        z.micro_min - coord
    } else if coord > z.micro_max {
        coord - z.micro_max
    } else {
        return Ok(micro);
    };
    let hom = homogenize_properties(&material.matrix, &material.inclusion, z.volume_fraction)?;
    if s >= z.width {
        return Ok(hom);
    }
    let alpha = blend_profile(s, z.width);
    PhaseProperties::new(
        blend(micro.e, hom.e, alpha),
        blend(micro.nu, hom.nu, alpha),
        blend(micro.g_c, hom.g_c, alpha),
    )
}

/// Builds the cached model. Nodes are re-sorted by position to keep the
/// operator bandwidth tight before any shape data is cached.
pub fn build_model(
    nodes: NodeSet,
    domain: Rect,
    score: &dyn ScoreFunction,
    material: MaterialModel,
    blend_zone: Option<BlendZone>,
    options: SolverOptions,
) -> Result<GalerkinModel> {
    let mut sorted = nodes.nodes().to_vec();
    sorted.sort_by(|a, b| {
        (a.position.y, a.position.x)
            .partial_cmp(&(b.position.y, b.position.x))
            .unwrap()
    });
    let has_interface_nodes = sorted.iter().any(|n| n.is_interface());
    let nodes = NodeSet::from_parts(sorted, nodes.spacing())?;

    let cell = options.cell_size_factor * nodes.spacing();
    let use_im = options.interface_modified && has_interface_nodes;
    let score_for_cut = if use_im { Some(score) } else { None };
    let quadrature = build_quadrature(domain, cell, options.quadrature_order, score_for_cut)?;
    let stations = boundary_quadrature(domain, cell, options.quadrature_order)?;

    let im = InterfaceMod { score, scale: options.im_scale_factor * nodes.spacing() };
    let im_opt = use_im.then_some(&im);

    let l_beta = material.lengths.l_beta;
    let mut points = Vec::with_capacity(quadrature.points.len());
    let mut has_interface_points = false;
    for qp in &quadrature.points {
        let shape = shape_functions(qp.position, &nodes, im_opt, &options.shape)?;
        let geometry = interface_geometry(score, qp.position, l_beta);
        // the smeared band decays exponentially; drop tails that cannot
        // contribute above roundoff
        let interface_active = geometry.beta > 1e-8;
        has_interface_points |= interface_active;
        let phase = Phase::from_score(score.score(qp.position));
        let props = blended_properties(&material, blend_zone.as_ref(), phase, qp.position)?;
        let (lambda, mu) = props.lame();
        points.push(PointData {
            weight: qp.weight,
            position: qp.position,
            shape,
            geometry,
            lambda,
            mu,
            g_c: props.g_c,
            interface_active,
        });
    }

    let mut boundary = Vec::with_capacity(stations.len());
    for st in stations {
        let shape = shape_functions(st.position, &nodes, im_opt, &options.shape)?;
        boundary.push(BoundaryData { station: st, shape });
    }

    let mut span = 0usize;
    for pd in points.iter().map(|p| &p.shape).chain(boundary.iter().map(|b| &b.shape)) {
        let lo = pd.ids.iter().min().copied().unwrap_or(0) as usize;
        let hi = pd.ids.iter().max().copied().unwrap_or(0) as usize;
        span = span.max(hi - lo);
    }
    let bandwidth = 2 * span + 1;
    let e_max = f64::max(material.matrix.e, material.inclusion.e);
    let penalty = options.penalty_factor * e_max / nodes.spacing();
    if !(penalty > 0.0) {
        return Err(Error::Parameter("boundary penalty must be positive".into()));
    }

    let ndof = 2 * nodes.len();
    Ok(GalerkinModel {
        nodes,
        quadrature,
        points,
        boundary,
        material,
        options,
        ndof,
        bandwidth,
        penalty,
        has_interface_points,
    })
}

/// Assembled linear system of one Picard iteration.
pub struct SystemMatrices {
    pub stiffness: BandedSymMatrix,
    pub rhs: Vec<f64>,
}

/// Assembles the Picard operator: the bulk part uses the degraded secant
/// elasticity with the spectral sign state frozen at `u_state`, the interface
/// part the cohesive secant moduli at the frozen jump.
pub(crate) fn assemble_stiffness(
    model: &GalerkinModel,
    u_state: &[f64],
    damage_field: &[f64],
) -> SystemMatrices {
    let mut k = BandedSymMatrix::zeros(model.ndof, model.bandwidth);
    let kappa = model.material.lengths.kappa;
    let h_jump = model.material.lengths.h_jump;
    let czm = &model.material.czm;

    for (p_idx, pd) in model.points.iter().enumerate() {
        let kin = model.kinematics(pd, u_state);
        let d = damage_field[p_idx];
        let c = degraded_stiffness(kin.eps_eff, d, pd.lambda, pd.mu, kappa);
        let w = pd.weight;

        let nn = pd.shape.ids.len();
        // effective strain-displacement rows: B_J = grad row minus the
        // smeared-jump correction gamma_beta * h * (grad Psi_J . n) * N
        let geo = &pd.geometry;
        let (k_n, k_t) = if pd.interface_active {
            czm_secant(kin.w_n, kin.w_t, czm)
        } else {
            (0.0, 0.0)
        };
        let mut b_rows: Vec<[[f64; 2]; 3]> = Vec::with_capacity(nn);
        let mut c_dir: Vec<f64> = Vec::with_capacity(nn);
        for g in pd.shape.gradients.iter() {
            let mut b = [[g.x, 0.0], [0.0, g.y], [g.y, g.x]];
            let cj = if pd.interface_active { g.dot(geo.normal) } else { 0.0 };
            if pd.interface_active {
                let f = geo.gamma_beta * h_jump * cj;
                b[0][0] -= f * geo.normal.x;
                b[1][1] -= f * geo.normal.y;
                b[2][0] -= f * geo.normal.y;
                b[2][1] -= f * geo.normal.x;
            }
            b_rows.push(b);
            c_dir.push(cj);
        }
        // interface secant in the global frame
        let dmat = if pd.interface_active {
            let n = geo.normal;
            let t = geo.tangent;
            [
                [
                    k_n * n.x * n.x + k_t * t.x * t.x,
                    k_n * n.x * n.y + k_t * t.x * t.y,
                ],
                [
                    k_n * n.x * n.y + k_t * t.x * t.y,
                    k_n * n.y * n.y + k_t * t.y * t.y,
                ],
            ]
        } else {
            [[0.0; 2]; 2]
        };
        let jump_scale = geo.gamma_beta * h_jump * h_jump * w;

        for a in 0..nn {
            let ia = pd.shape.ids[a] as usize;
            // C * B_a columns
            let mut cba = [[0.0f64; 2]; 3];
            for r in 0..3 {
                for col in 0..2 {
                    cba[r][col] = c[r][0] * b_rows[a][0][col]
                        + c[r][1] * b_rows[a][1][col]
                        + c[r][2] * b_rows[a][2][col];
                }
            }
            for b in 0..=a {
                let ib = pd.shape.ids[b] as usize;
                let mut block = [[0.0f64; 2]; 2];
                for r in 0..2 {
                    for s in 0..2 {
                        block[r][s] = w
                            * (b_rows[b][0][r] * cba[0][s]
                                + b_rows[b][1][r] * cba[1][s]
                                + b_rows[b][2][r] * cba[2][s]);
                    }
                }
                if pd.interface_active {
                    let f = jump_scale * c_dir[a] * c_dir[b];
                    for r in 0..2 {
                        for s in 0..2 {
                            block[r][s] += f * dmat[r][s];
                        }
                    }
                }
                // symmetric scatter; diagonal blocks only keep the lower half
                for r in 0..2 {
                    for s in 0..2 {
                        let (gi, gj) = (2 * ib + r, 2 * ia + s);
                        if gi >= gj {
                            k.add(gi, gj, block[r][s]);
                        } else if ia != ib {
                            k.add(gj, gi, 0.0);
                            k.add(gi, gj, block[r][s]);
                        }
                    }
                }
            }
        }
    }
    SystemMatrices { stiffness: k, rhs: vec![0.0; model.ndof] }
}

/// Internal force vector at the actual (nonlinear) stress and cohesive
/// traction state. Reactions are extracted from this, never from penalty
/// forces.
pub(crate) fn internal_forces(
    model: &GalerkinModel,
    u: &[f64],
    damage_field: &[f64],
) -> Vec<f64> {
    let mut f = vec![0.0f64; model.ndof];
    let kappa = model.material.lengths.kappa;
    let h_jump = model.material.lengths.h_jump;
    for (p_idx, pd) in model.points.iter().enumerate() {
        let kin = model.kinematics(pd, u);
        let d = damage_field[p_idx];
        let sigma = degraded_stress(kin.eps_eff, d, pd.lambda, pd.mu, kappa)
            .expect("damage stays in [0, 1]");
        let w = pd.weight;
        let geo = &pd.geometry;
        let traction = if pd.interface_active {
            let (t_n, t_t) = czm_tractions(kin.w_n, kin.w_t, &model.material.czm);
            geo.normal * t_n + geo.tangent * t_t
        } else {
            Vec2::ZERO
        };
        for (k_idx, &id) in pd.shape.ids.iter().enumerate() {
            let i = id as usize;
            let g = pd.shape.gradients[k_idx];
            let mut b = [[g.x, 0.0], [0.0, g.y], [g.y, g.x]];
            let cj = if pd.interface_active { g.dot(geo.normal) } else { 0.0 };
            if pd.interface_active {
                let fac = geo.gamma_beta * h_jump * cj;
                b[0][0] -= fac * geo.normal.x;
                b[1][1] -= fac * geo.normal.y;
                b[2][0] -= fac * geo.normal.y;
                b[2][1] -= fac * geo.normal.x;
            }
            let sv = [sigma.xx, sigma.yy, sigma.xy];
            for comp in 0..2 {
                let mut v = 0.0;
                for r in 0..3 {
                    v += sv[r] * b[r][comp];
                }
                if pd.interface_active {
                    let wv = geo.gamma_beta * h_jump * cj;
                    v += wv * if comp == 0 { traction.x } else { traction.y };
                }
                f[2 * i + comp] += w * v;
            }
        }
    }
    f
}

/// Energy bookkeeping of a committed state.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnergyReport {
    /// Stored elastic energy (degraded tensile + compressive), N mm.
    pub elastic: f64,
    /// Bulk crack surface energy, N mm.
    pub crack: f64,
    /// Smeared interface (cohesive) energy, N mm.
    pub interface: f64,
}

impl EnergyReport {
    pub fn dissipated(&self) -> f64 {
        self.crack + self.interface
    }
}

pub(crate) fn energies(
    model: &GalerkinModel,
    u: &[f64],
    damage_field: &[f64],
) -> EnergyReport {
    use crate::material::czm_potential;
    let kappa = model.material.lengths.kappa;
    let l_d = model.material.lengths.l_d;
    let mut report = EnergyReport::default();
    for (p_idx, pd) in model.points.iter().enumerate() {
        let kin = model.kinematics(pd, u);
        let d = damage_field[p_idx];
        let g = (1.0 - d) * (1.0 - d) + kappa;
        report.elastic += pd.weight * (g * kin.psi_plus + kin.psi_minus);
        report.crack +=
            pd.weight * (1.0 - pd.geometry.beta) * pd.g_c * d * d / (2.0 * l_d);
        if pd.interface_active {
            report.interface += pd.weight
                * pd.geometry.gamma_beta
                * czm_potential(kin.w_n, kin.w_t, &model.material.czm);
        }
    }
    report
}

/// Convenience wrapper retained for spec-level assembly checks: builds the
/// operator at a given state and reports the residual `f_int - f_ext` with a
/// zero external load.
pub fn assemble(
    model: &GalerkinModel,
    u_state: &[f64],
    damage_field: &[f64],
) -> Result<(SystemMatrices, Vec<f64>)> {
    if u_state.len() != model.ndof || damage_field.len() != model.points.len() {
        return Err(Error::Config(format!(
            "state sizes ({}, {}) do not match model ({}, {})",
            u_state.len(),
            damage_field.len(),
            model.ndof,
            model.points.len()
        )));
    }
    let sys = assemble_stiffness(model, u_state, damage_field);
    let residual = internal_forces(model, u_state, damage_field);
    Ok((sys, residual))
}
