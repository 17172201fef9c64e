//! Reproducing-kernel shape functions and their interface-modified variant.
//!
//! Shape functions are kernel functions corrected to reproduce polynomials
//! exactly: `Psi_I(x) = H(0)^T M(x)^{-1} H(x - x_I) phi_a(x - x_I)` with the
//! moment matrix `M = sum_I H H^T phi_a`. The interface-modified variant
//! multiplies every regular node's kernel by a regularized Heaviside of the
//! score, truncating supports across material interfaces while interface
//! nodes keep full two-sided coverage.

pub mod line;

use alloc::vec::Vec;

use crate::discretization::{Node, NodeKind, NodeSet};
use crate::error::{Error, Result};
use crate::math::{SmallSymMatrix, Vec2};
use crate::score::{regularized_heaviside, regularized_heaviside_deriv, ScoreFunction};

/// Kernel families. The cubic B-spline is the working default; the tent
/// kernel exists for the 1D finite-element degeneracy checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    #[default]
    CubicBspline,
    Tent,
}

impl Kernel {
    /// Kernel value and d/dz at normalized radius z = |x - x_I| / a.
    #[inline]
    pub fn value_deriv(self, z: f64) -> (f64, f64) {
        match self {
            Kernel::CubicBspline => {
                if z < 0.5 {
                    (
                        2.0 / 3.0 - 4.0 * z * z + 4.0 * z * z * z,
                        -8.0 * z + 12.0 * z * z,
                    )
                } else if z < 1.0 {
                    (
                        4.0 / 3.0 - 4.0 * z + 4.0 * z * z - 4.0 / 3.0 * z * z * z,
                        -4.0 + 8.0 * z - 4.0 * z * z,
                    )
                } else {
                    (0.0, 0.0)
                }
            }
            Kernel::Tent => {
                if z < 1.0 {
                    (1.0 - z, -1.0)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }
}

/// Kernel value and spatial gradient; the gradient is zero at the center and
/// outside the support.
pub fn kernel_value(x: Vec2, x_node: Vec2, a: f64, kernel: Kernel) -> (f64, Vec2) {
    debug_assert!(a > 0.0);
    let d = x - x_node;
    let r = d.norm();
    let z = r / a;
    if z >= 1.0 {
        return (0.0, Vec2::ZERO);
    }
    let (phi, dphi) = kernel.value_deriv(z);
    if r == 0.0 {
        return (phi, Vec2::ZERO);
    }
    (phi, d * (dphi / (a * r)))
}

/// Monomial basis order; length is (n+1)(n+2)/2 in 2D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Basis {
    Constant,
    #[default]
    Linear,
    Quadratic,
}

impl Basis {
    #[inline]
    pub fn len(self) -> usize {
        match self {
            Basis::Constant => 1,
            Basis::Linear => 3,
            Basis::Quadratic => 6,
        }
    }

    #[inline]
    pub fn order(self) -> usize {
        match self {
            Basis::Constant => 0,
            Basis::Linear => 1,
            Basis::Quadratic => 2,
        }
    }

    /// Fills H(d/s) (monomials of the scaled offset) and its x/y derivatives.
    /// Scaling by the support length keeps the moment matrix well conditioned
    /// and cancels out of the shape functions.
    fn fill(
        self,
        d: Vec2,
        inv_scale: f64,
        h: &mut [f64; 6],
        hx: &mut [f64; 6],
        hy: &mut [f64; 6],
    ) {
        let u = d.x * inv_scale;
        let v = d.y * inv_scale;
        h[0] = 1.0;
        hx[0] = 0.0;
        hy[0] = 0.0;
        if matches!(self, Basis::Constant) {
            return;
        }
        h[1] = u;
        h[2] = v;
        hx[1] = inv_scale;
        hx[2] = 0.0;
        hy[1] = 0.0;
        hy[2] = inv_scale;
        if matches!(self, Basis::Linear) {
            return;
        }
        h[3] = u * u;
        h[4] = u * v;
        h[5] = v * v;
        hx[3] = 2.0 * u * inv_scale;
        hx[4] = v * inv_scale;
        hx[5] = 0.0;
        hy[3] = 0.0;
        hy[4] = u * inv_scale;
        hy[5] = 2.0 * v * inv_scale;
    }
}

/// Moment matrix `M(x) = sum_I H(x - x_I) H^T(x - x_I) phi_I` over an
/// explicit contributing set of (position, kernel value) pairs. The basis is
/// unscaled here, matching the printed definition.
pub fn moment_matrix(x: Vec2, contributions: &[(Vec2, f64)], basis: Basis) -> SmallSymMatrix {
    let m_len = basis.len();
    let mut m = SmallSymMatrix::zeros(m_len);
    let mut h = [0.0f64; 6];
    let mut hx = [0.0f64; 6];
    let mut hy = [0.0f64; 6];
    for &(x_node, phi) in contributions {
        basis.fill(x - x_node, 1.0, &mut h, &mut hx, &mut hy);
        m.add_outer(&h[..m_len], phi);
    }
    m
}

/// Interface modification: the score function plus the truncation length c
/// (of the order of the nodal spacing).
#[derive(Clone, Copy)]
pub struct InterfaceMod<'a> {
    pub score: &'a dyn ScoreFunction,
    /// Scaling length c in the Heaviside argument S(x)/c (mm).
    pub scale: f64,
}

/// Modified kernel of one node: interface nodes keep the plain kernel;
/// regular nodes are scaled by `max(0, tanh(+-S(x)/c))`, the sign chosen so
/// the factor approaches 1 on the node's own side of the interface and is
/// exactly 0 across it.
pub fn modified_kernel(
    x: Vec2,
    node: &Node,
    im: &InterfaceMod<'_>,
    kernel: Kernel,
) -> Result<(f64, Vec2)> {
    if !(im.scale > 0.0) {
        return Err(Error::Parameter("interface scaling length must be positive".into()));
    }
    let s = im.score.score(x);
    let g = im.score.score_gradient(x);
    Ok(modified_kernel_cached(x, node, s, g, im.scale, kernel))
}

/// As [`modified_kernel`] with the score and its gradient already evaluated
/// at `x` (they are shared by every node during a shape evaluation).
#[inline]
pub(crate) fn modified_kernel_cached(
    x: Vec2,
    node: &Node,
    score_at_x: f64,
    score_grad_at_x: Vec2,
    c: f64,
    kernel: Kernel,
) -> (f64, Vec2) {
    let (phi, dphi) = kernel_value(x, node.position, node.support, kernel);
    match node.kind {
        NodeKind::Interface => (phi, dphi),
        NodeKind::Regular { phase } => {
            let sign = phase.sign();
            let xi = sign * score_at_x / c;
            let h = regularized_heaviside(xi);
            if h == 0.0 {
                return (0.0, Vec2::ZERO);
            }
            let dh = regularized_heaviside_deriv(xi) * sign / c;
            (phi * h, dphi * h + score_grad_at_x * (phi * dh))
        }
    }
}

/// Evaluation options for [`shape_functions`].
#[derive(Debug, Clone, Copy)]
pub struct ShapeConfig {
    pub kernel: Kernel,
    pub basis: Basis,
    /// Evaluations whose moment-matrix condition estimate exceeds this cap
    /// fail loudly instead of being silently regularized.
    pub condition_cap: f64,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        ShapeConfig {
            kernel: Kernel::CubicBspline,
            basis: Basis::Linear,
            condition_cap: 1e12,
        }
    }
}

/// Shape-function values and gradients of every contributing node at one
/// evaluation point.
#[derive(Debug, Clone)]
pub struct ShapeEval {
    pub ids: Vec<u32>,
    pub values: Vec<f64>,
    pub gradients: Vec<Vec2>,
    /// Condition estimate of the moment matrix.
    pub condition: f64,
}

impl ShapeEval {
    /// Shape value of a node, zero when it does not contribute.
    pub fn value_of(&self, id: u32) -> f64 {
        self.ids
            .iter()
            .position(|&i| i == id)
            .map_or(0.0, |k| self.values[k])
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn gradient_sum(&self) -> Vec2 {
        let mut g = Vec2::ZERO;
        for gi in &self.gradients {
            g += *gi;
        }
        g
    }
}

/// Evaluates RK (or IM-RK when `im` is given) shape functions at `x`.
pub fn shape_functions(
    x: Vec2,
    nodes: &NodeSet,
    im: Option<&InterfaceMod<'_>>,
    cfg: &ShapeConfig,
) -> Result<ShapeEval> {
    let mut candidates = Vec::new();
    nodes.supporting_nodes(x, &mut candidates);
    shape_functions_with(x, nodes, &candidates, im, cfg)
}

/// As [`shape_functions`] with the candidate set (ids whose support contains
/// `x`) already looked up.
pub fn shape_functions_with(
    x: Vec2,
    nodes: &NodeSet,
    candidates: &[u32],
    im: Option<&InterfaceMod<'_>>,
    cfg: &ShapeConfig,
) -> Result<ShapeEval> {
    if let Some(im) = im {
        if !(im.scale > 0.0) {
            return Err(Error::Parameter("interface scaling length must be positive".into()));
        }
    }
    let score_at_x = im.map(|m| (m.score.score(x), m.score.score_gradient(x)));

    // contributing set: nonzero (modified) kernel
    let mut ids: Vec<u32> = Vec::with_capacity(candidates.len());
    let mut phis: Vec<(f64, Vec2)> = Vec::with_capacity(candidates.len());
    let mut scale = 0.0f64;
    for &id in candidates {
        let node = nodes.node(id as usize);
        let pk = match (im, score_at_x) {
            (Some(m), Some((s, g))) => {
                modified_kernel_cached(x, node, s, g, m.scale, cfg.kernel)
            }
            _ => kernel_value(x, node.position, node.support, cfg.kernel),
        };
        if pk.0 > 0.0 {
            ids.push(id);
            phis.push(pk);
            scale = f64::max(scale, node.support);
        }
    }
    let m_len = cfg.basis.len();
    if ids.len() < m_len {
        return Err(Error::Coverage {
            x: [x.x, x.y],
            contributing: ids.len(),
            condition: f64::INFINITY,
        });
    }

    // moment matrix and its gradient in support-scaled coordinates
    let inv_scale = 1.0 / scale;
    let mut m = SmallSymMatrix::zeros(m_len);
    let mut mx = SmallSymMatrix::zeros(m_len);
    let mut my = SmallSymMatrix::zeros(m_len);
    let mut h = [0.0f64; 6];
    let mut hx = [0.0f64; 6];
    let mut hy = [0.0f64; 6];
    let mut h_all: Vec<[f64; 6]> = Vec::with_capacity(ids.len());
    let mut hx_all: Vec<[f64; 6]> = Vec::with_capacity(ids.len());
    let mut hy_all: Vec<[f64; 6]> = Vec::with_capacity(ids.len());
    for (k, &id) in ids.iter().enumerate() {
        let node = nodes.node(id as usize);
        cfg.basis.fill(x - node.position, inv_scale, &mut h, &mut hx, &mut hy);
        let (phi, dphi) = phis[k];
        for i in 0..m_len {
            let hi = h[i];
            for j in 0..=i {
                let hj = h[j];
                let sym = hi * hj;
                let v = m.get(i, j) + sym * phi;
                m.set(i, j, v);
                let vx = mx.get(i, j) + (hx[i] * hj + hi * hx[j]) * phi + sym * dphi.x;
                mx.set(i, j, vx);
                let vy = my.get(i, j) + (hy[i] * hj + hi * hy[j]) * phi + sym * dphi.y;
                my.set(i, j, vy);
            }
        }
        h_all.push(h);
        hx_all.push(hx);
        hy_all.push(hy);
    }

    let factor = m.ldlt().ok_or(Error::Coverage {
        x: [x.x, x.y],
        contributing: ids.len(),
        condition: f64::INFINITY,
    })?;
    if factor.condition_estimate > cfg.condition_cap {
        return Err(Error::Coverage {
            x: [x.x, x.y],
            contributing: ids.len(),
            condition: factor.condition_estimate,
        });
    }

    // b = M^{-1} H(0); grad b from implicit differentiation of M b = H(0)
    let mut b = [0.0f64; 6];
    b[0] = 1.0;
    factor.solve(&mut b[..m_len]);
    let mut bx = [0.0f64; 6];
    let mut by = [0.0f64; 6];
    mx.mul_vec(&b[..m_len], &mut bx[..m_len]);
    my.mul_vec(&b[..m_len], &mut by[..m_len]);
    for v in bx.iter_mut().take(m_len) {
        *v = -*v;
    }
    for v in by.iter_mut().take(m_len) {
        *v = -*v;
    }
    factor.solve(&mut bx[..m_len]);
    factor.solve(&mut by[..m_len]);

    let mut values = Vec::with_capacity(ids.len());
    let mut gradients = Vec::with_capacity(ids.len());
    for k in 0..ids.len() {
        let (phi, dphi) = phis[k];
        let h = &h_all[k];
        let mut bh = 0.0;
        let mut bxh = 0.0;
        let mut byh = 0.0;
        let mut bhx = 0.0;
        let mut bhy = 0.0;
        for i in 0..m_len {
            bh += b[i] * h[i];
            bxh += bx[i] * h[i];
            byh += by[i] * h[i];
            bhx += b[i] * hx_all[k][i];
            bhy += b[i] * hy_all[k][i];
        }
        values.push(bh * phi);
        gradients.push(Vec2::new(
            (bxh + bhx) * phi + bh * dphi.x,
            (byh + bhy) * phi + bh * dphi.y,
        ));
    }
    Ok(ShapeEval { ids, values, gradients, condition: factor.condition_estimate })
}

/// Compares analytic shape gradients against central differences (step
/// `1e-6 * max support`); returns the largest error relative to the gradient
/// field scale.
pub fn gradient_check(
    x: Vec2,
    nodes: &NodeSet,
    im: Option<&InterfaceMod<'_>>,
    cfg: &ShapeConfig,
) -> Result<f64> {
    let eval = shape_functions(x, nodes, im, cfg)?;
    let a_max = eval
        .ids
        .iter()
        .map(|&id| nodes.node(id as usize).support)
        .fold(0.0f64, f64::max);
    let step = 1e-6 * a_max;
    let xp = shape_functions(Vec2::new(x.x + step, x.y), nodes, im, cfg)?;
    let xm = shape_functions(Vec2::new(x.x - step, x.y), nodes, im, cfg)?;
    let yp = shape_functions(Vec2::new(x.x, x.y + step), nodes, im, cfg)?;
    let ym = shape_functions(Vec2::new(x.x, x.y - step), nodes, im, cfg)?;
    let scale = eval
        .gradients
        .iter()
        .map(|g| g.norm())
        .fold(0.0f64, f64::max)
        .max(1e-30);
    let mut worst = 0.0f64;
    for (k, &id) in eval.ids.iter().enumerate() {
        let fd = Vec2::new(
            (xp.value_of(id) - xm.value_of(id)) / (2.0 * step),
            (yp.value_of(id) - ym.value_of(id)) / (2.0 * step),
        );
        worst = f64::max(worst, (eval.gradients[k] - fd).norm() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{Node, NodeSet};
    use crate::math::real;
    use crate::score::{Phase, PlaneScore};
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cubic_bspline_values() {
        let (v0, _) = Kernel::CubicBspline.value_deriv(0.0);
        assert!((v0 - 2.0 / 3.0).abs() < 1e-15);
        // both branches meet at z = 1/2
        let eps = 1e-12;
        let (l, _) = Kernel::CubicBspline.value_deriv(0.5 - eps);
        let (r, _) = Kernel::CubicBspline.value_deriv(0.5 + eps);
        assert!((l - 1.0 / 6.0).abs() < 1e-11);
        assert!((r - 1.0 / 6.0).abs() < 1e-11);
        // C1 cutoff at z = 1
        let (v1, d1) = Kernel::CubicBspline.value_deriv(1.0);
        assert_eq!(v1, 0.0);
        assert_eq!(d1, 0.0);
        let (v, d) = Kernel::CubicBspline.value_deriv(1.0 - 1e-8);
        assert!(v.abs() < 1e-15);
        assert!(d.abs() < 1e-7);
    }

    #[test]
    fn kernel_gradient_matches_fd() {
        let x_node = Vec2::new(0.3, -0.2);
        let a = 1.7;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let x = Vec2::new(rng.gen_range(-1.0..1.5), rng.gen_range(-1.5..1.0));
            let z = x.dist(x_node) / a;
            if z < 1e-3 || (z - 0.5).abs() < 1e-3 || (z - 1.0).abs() < 1e-3 {
                continue;
            }
            let (_, g) = kernel_value(x, x_node, a, Kernel::CubicBspline);
            let h = 1e-7;
            let fd = Vec2::new(
                (kernel_value(Vec2::new(x.x + h, x.y), x_node, a, Kernel::CubicBspline).0
                    - kernel_value(Vec2::new(x.x - h, x.y), x_node, a, Kernel::CubicBspline).0)
                    / (2.0 * h),
                (kernel_value(Vec2::new(x.x, x.y + h), x_node, a, Kernel::CubicBspline).0
                    - kernel_value(Vec2::new(x.x, x.y - h), x_node, a, Kernel::CubicBspline).0)
                    / (2.0 * h),
            );
            assert!((g - fd).norm() < 1e-6, "z = {z}");
        }
    }

    fn uniform_cloud(n: usize, h: f64, support: f64) -> NodeSet {
        let mut nodes = Vec::new();
        for j in 0..n {
            for i in 0..n {
                nodes.push(Node::regular(
                    Vec2::new(h * (i as f64 + 0.5), h * (j as f64 + 0.5)),
                    support,
                    Phase::Matrix,
                ));
            }
        }
        NodeSet::from_parts(nodes, h).unwrap()
    }

    #[test]
    fn partition_of_unity_and_linear_reproduction() {
        let nodes = uniform_cloud(8, 1.0, 2.0);
        let cfg = ShapeConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let x = Vec2::new(rng.gen_range(0.5..7.5), rng.gen_range(0.5..7.5));
            let eval = shape_functions(x, &nodes, None, &cfg).unwrap();
            assert!((eval.sum() - 1.0).abs() < 1e-12);
            let mut rx = Vec2::ZERO;
            for (k, &id) in eval.ids.iter().enumerate() {
                rx += nodes.node(id as usize).position * eval.values[k];
            }
            assert!((rx - x).norm() < 1e-11, "linear reproduction at {x:?}");
            assert!(eval.gradient_sum().norm() < 1e-8 / 2.0);
        }
    }

    #[test]
    fn random_cloud_linear_reproduction() {
        // 5x5 perturbed cloud, checked against direct evaluation at 50 points
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut nodes = Vec::new();
        for j in 0..5 {
            for i in 0..5 {
                let p = Vec2::new(
                    i as f64 + rng.gen_range(-0.2..0.2),
                    j as f64 + rng.gen_range(-0.2..0.2),
                );
                nodes.push(Node::regular(p, 2.4, Phase::Matrix));
            }
        }
        let nodes = NodeSet::from_parts(nodes, 1.0).unwrap();
        let cfg = ShapeConfig::default();
        for _ in 0..50 {
            let x = Vec2::new(rng.gen_range(0.8..3.2), rng.gen_range(0.8..3.2));
            let eval = shape_functions(x, &nodes, None, &cfg).unwrap();
            let mut rx = Vec2::ZERO;
            for (k, &id) in eval.ids.iter().enumerate() {
                rx += nodes.node(id as usize).position * eval.values[k];
            }
            assert!((rx - x).norm() < 1e-9, "at {x:?}: {:?}", rx - x);
        }
    }

    #[test]
    fn quadratic_basis_reproduces_quadratics() {
        let nodes = uniform_cloud(9, 1.0, 2.6);
        let cfg = ShapeConfig { basis: Basis::Quadratic, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..25 {
            let x = Vec2::new(rng.gen_range(2.0..7.0), rng.gen_range(2.0..7.0));
            let eval = shape_functions(x, &nodes, None, &cfg).unwrap();
            let mut q = 0.0;
            for (k, &id) in eval.ids.iter().enumerate() {
                let p = nodes.node(id as usize).position;
                q += eval.values[k] * (p.x * p.x + 0.5 * p.x * p.y - p.y * p.y);
            }
            let exact = x.x * x.x + 0.5 * x.x * x.y - x.y * x.y;
            assert!((q - exact).abs() < 1e-8, "at {x:?}: {q} vs {exact}");
        }
    }

    #[test]
    fn moment_matrix_single_node_constant_basis() {
        let x = Vec2::new(0.2, 0.0);
        let x_node = Vec2::ZERO;
        let (phi, _) = kernel_value(x, x_node, 1.0, Kernel::CubicBspline);
        let m = moment_matrix(x, &[(x_node, phi)], Basis::Constant);
        assert_eq!(m.size(), 1);
        assert_eq!(m.get(0, 0), phi);
    }

    #[test]
    fn moment_matrix_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let x = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let contributions: Vec<(Vec2, f64)> = (0..6)
                .map(|_| {
                    (
                        Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        rng.gen_range(0.01..1.0),
                    )
                })
                .collect();
            let m = moment_matrix(x, &contributions, Basis::Quadratic);
            for i in 0..6 {
                for j in 0..6 {
                    assert_eq!(m.get(i, j), m.get(j, i));
                }
            }
        }
    }

    #[test]
    fn gradient_check_interior_point() {
        let nodes = uniform_cloud(8, 1.0, 2.0);
        let cfg = ShapeConfig::default();
        let err = gradient_check(Vec2::new(3.7, 4.1), &nodes, None, &cfg).unwrap();
        assert!(err < 1e-6, "gradient error {err}");
    }

    #[test]
    fn gradient_check_propagates_coverage_error() {
        let nodes = uniform_cloud(3, 1.0, 2.0);
        let cfg = ShapeConfig::default();
        let far = Vec2::new(50.0, 50.0);
        assert!(matches!(
            gradient_check(far, &nodes, None, &cfg),
            Err(Error::Coverage { .. })
        ));
    }

    fn interface_cloud() -> (NodeSet, PlaneScore) {
        // 8x8 lattice with a vertical interface at x = 3.7 and interface
        // nodes seeded along it
        let score = PlaneScore::vertical(3.7);
        let mut nodes = Vec::new();
        for j in 0..8 {
            for i in 0..8 {
                let p = Vec2::new(i as f64 + 0.5, j as f64 + 0.5);
                let phase = Phase::from_score(score.score(p));
                nodes.push(Node::regular(p, 2.0, phase));
            }
        }
        for j in 0..8 {
            nodes.push(Node::interface(Vec2::new(3.7, j as f64 + 0.5), 2.0));
        }
        (NodeSet::from_parts(nodes, 1.0).unwrap(), score)
    }

    #[test]
    fn im_kernel_interface_node_is_unmodified() {
        let (nodes, score) = interface_cloud();
        let im = InterfaceMod { score: &score, scale: 1.0 };
        let interface_id = nodes
            .nodes()
            .iter()
            .position(|n| n.is_interface())
            .unwrap();
        let n = nodes.node(interface_id);
        let x = Vec2::new(3.2, 0.7);
        let (plain, plain_g) = kernel_value(x, n.position, n.support, Kernel::CubicBspline);
        let (modified, modified_g) = modified_kernel(x, n, &im, Kernel::CubicBspline).unwrap();
        assert_eq!(plain, modified);
        assert_eq!(plain_g, modified_g);
    }

    #[test]
    fn im_kernel_truncates_across_interface() {
        let (nodes, score) = interface_cloud();
        let im = InterfaceMod { score: &score, scale: 1.0 };
        // matrix node (right of interface), evaluated on the inclusion side
        let node = nodes
            .nodes()
            .iter()
            .find(|n| n.phase() == Some(Phase::Matrix) && (n.position.x - 4.5).abs() < 0.01)
            .unwrap();
        let x = Vec2::new(3.2, node.position.y);
        assert!(score.score(x) < 0.0);
        let (v, g) = modified_kernel(x, node, &im, Kernel::CubicBspline).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g, Vec2::ZERO);
    }

    #[test]
    fn im_kernel_own_side_scaling() {
        let (nodes, score) = interface_cloud();
        let im = InterfaceMod { score: &score, scale: 1.0 };
        // matrix node evaluated at a point with S(x)/c = 1 on its own side
        let node = nodes
            .nodes()
            .iter()
            .find(|n| n.phase() == Some(Phase::Matrix) && (n.position.x - 4.5).abs() < 0.01)
            .unwrap();
        let x = Vec2::new(4.7, node.position.y + 0.3);
        assert!((score.score(x) - 1.0).abs() < 1e-12);
        let (plain, _) = kernel_value(x, node.position, node.support, Kernel::CubicBspline);
        let (v, _) = modified_kernel(x, node, &im, Kernel::CubicBspline).unwrap();
        assert!((v - plain * real::tanh(1.0)).abs() < 1e-14);
    }

    #[test]
    fn imrk_truncation_and_two_sided_interface_support() {
        let (nodes, score) = interface_cloud();
        let im = InterfaceMod { score: &score, scale: 1.0 };
        let cfg = ShapeConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let x = Vec2::new(rng.gen_range(1.5..6.5), rng.gen_range(1.5..6.5));
            if score.score(x).abs() < 1e-9 {
                continue;
            }
            let eval = shape_functions(x, &nodes, Some(&im), &cfg).unwrap();
            assert!((eval.sum() - 1.0).abs() < 1e-10);
            let x_phase = Phase::from_score(score.score(x));
            for (k, &id) in eval.ids.iter().enumerate() {
                if let Some(phase) = nodes.node(id as usize).phase() {
                    if phase != x_phase {
                        panic!(
                            "cross-interface node {id} contributes {} at {x:?}",
                            eval.values[k]
                        );
                    }
                }
            }
        }
        // interface nodes support both sides
        let if_id = nodes.nodes().iter().position(|n| n.is_interface()).unwrap() as u32;
        let p = nodes.node(if_id as usize).position;
        let left = shape_functions(Vec2::new(p.x - 0.4, p.y), &nodes, Some(&im), &cfg).unwrap();
        let right = shape_functions(Vec2::new(p.x + 0.4, p.y), &nodes, Some(&im), &cfg).unwrap();
        assert!(left.value_of(if_id) != 0.0);
        assert!(right.value_of(if_id) != 0.0);
    }

    #[test]
    fn imrk_gradient_check_away_from_interface() {
        let (nodes, score) = interface_cloud();
        let im = InterfaceMod { score: &score, scale: 1.0 };
        let cfg = ShapeConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut tested = 0;
        while tested < 20 {
            let x = Vec2::new(rng.gen_range(1.5..6.5), rng.gen_range(1.5..6.5));
            if score.score(x).abs() < 0.05 {
                continue;
            }
            let err = gradient_check(x, &nodes, Some(&im), &cfg).unwrap();
            assert!(err < 1e-5, "IM-RK gradient error {err} at {x:?}");
            tested += 1;
        }
    }

    #[test]
    fn ill_conditioned_moment_matrix_is_a_coverage_error() {
        // three collinear nodes cannot support a 2D linear basis
        let nodes = NodeSet::from_parts(
            vec![
                Node::regular(Vec2::new(0.0, 0.0), 3.0, Phase::Matrix),
                Node::regular(Vec2::new(1.0, 0.0), 3.0, Phase::Matrix),
                Node::regular(Vec2::new(2.0, 0.0), 3.0, Phase::Matrix),
            ],
            1.0,
        )
        .unwrap();
        let cfg = ShapeConfig::default();
        assert!(matches!(
            shape_functions(Vec2::new(1.0, 0.3), &nodes, None, &cfg),
            Err(Error::Coverage { .. })
        ));
    }
}
