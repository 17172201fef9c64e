//! Node sets, interface-node insertion and background quadrature cells.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::imaging::ImageGrid;
use crate::math::{real, Rect, Vec2};
use crate::score::{Phase, ScoreFunction};

/// Default kernel support radius in multiples of the nodal spacing.
pub const DEFAULT_SUPPORT_FACTOR: f64 = 2.0;
/// Interface nodes closer than this fraction of the nodal spacing are merged.
pub const MERGE_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Regular { phase: Phase },
    Interface,
}

#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub position: Vec2,
    /// Kernel support radius a (mm).
    pub support: f64,
    pub kind: NodeKind,
}

impl Node {
    pub fn regular(position: Vec2, support: f64, phase: Phase) -> Self {
        Node { position, support, kind: NodeKind::Regular { phase } }
    }

    pub fn interface(position: Vec2, support: f64) -> Self {
        Node { position, support, kind: NodeKind::Interface }
    }

    #[inline]
    pub fn is_interface(&self) -> bool {
        matches!(self.kind, NodeKind::Interface)
    }

    #[inline]
    pub fn phase(&self) -> Option<Phase> {
        match self.kind {
            NodeKind::Regular { phase } => Some(phase),
            NodeKind::Interface => None,
        }
    }
}

/// Regular lattice the node set was generated on (needed for edge-crossing
/// interface detection and quadrature alignment).
#[derive(Debug, Clone, Copy)]
pub struct Lattice {
    pub origin: Vec2,
    pub nx: usize,
    pub ny: usize,
    /// Nodal spacing (mm).
    pub spacing: f64,
}

impl Lattice {
    #[inline]
    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + self.spacing * (i as f64 + 0.5),
            self.origin.y + self.spacing * (j as f64 + 0.5),
        )
    }

    pub fn domain(&self) -> Rect {
        Rect::new(
            self.origin,
            self.origin + Vec2::new(self.spacing * self.nx as f64, self.spacing * self.ny as f64),
        )
    }
}

/// Immutable node cloud with a uniform-grid neighbor index.
#[derive(Debug, Clone)]
pub struct NodeSet {
    nodes: Vec<Node>,
    h_node: f64,
    lattice: Option<Lattice>,
    grid: SearchGrid,
}

impl NodeSet {
    /// Builds a node set from explicit nodes (used for hand-made test clouds
    /// and perturbed configurations). `h_node` is the characteristic spacing.
    pub fn from_parts(nodes: Vec<Node>, h_node: f64) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Config("node set is empty".into()));
        }
        if !(h_node > 0.0) {
            return Err(Error::Parameter("nodal spacing must be positive".into()));
        }
        if nodes.iter().any(|n| !(n.support > 0.0)) {
            return Err(Error::Parameter("support radii must be positive".into()));
        }
        let grid = SearchGrid::build(&nodes);
        Ok(NodeSet { nodes, h_node, lattice: None, grid })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    #[inline]
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Characteristic nodal spacing h (mm).
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.h_node
    }

    #[inline]
    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }

    pub fn interface_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_interface()).count()
    }

    /// Ids of nodes whose kernel support contains `x` (strictly).
    pub fn supporting_nodes(&self, x: Vec2, out: &mut Vec<u32>) {
        self.grid.query(x, &self.nodes, out);
    }
}

/// Uniform bin grid over the node bounding box; bin edge equals the largest
/// support radius so a 3x3 block always covers a support query.
#[derive(Debug, Clone)]
struct SearchGrid {
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    bins: Vec<Vec<u32>>,
}

impl SearchGrid {
    fn build(nodes: &[Node]) -> SearchGrid {
        let mut min = nodes[0].position;
        let mut max = nodes[0].position;
        let mut cell = 0.0f64;
        for n in nodes {
            min.x = f64::min(min.x, n.position.x);
            min.y = f64::min(min.y, n.position.y);
            max.x = f64::max(max.x, n.position.x);
            max.y = f64::max(max.y, n.position.y);
            cell = f64::max(cell, n.support);
        }
        let nx = usize::max(1, ((max.x - min.x) / cell) as usize + 1);
        let ny = usize::max(1, ((max.y - min.y) / cell) as usize + 1);
        let mut bins = vec![Vec::new(); nx * ny];
        for (id, n) in nodes.iter().enumerate() {
            let (i, j) = Self::bin_of(min, cell, nx, ny, n.position);
            bins[j * nx + i].push(id as u32);
        }
        SearchGrid { origin: min, cell, nx, ny, bins }
    }

    #[inline]
    fn bin_of(origin: Vec2, cell: f64, nx: usize, ny: usize, p: Vec2) -> (usize, usize) {
        let i = real::floor((p.x - origin.x) / cell) as i64;
        let j = real::floor((p.y - origin.y) / cell) as i64;
        (
            i.clamp(0, nx as i64 - 1) as usize,
            j.clamp(0, ny as i64 - 1) as usize,
        )
    }

    fn query(&self, x: Vec2, nodes: &[Node], out: &mut Vec<u32>) {
        out.clear();
        let (bi, bj) = Self::bin_of(self.origin, self.cell, self.nx, self.ny, x);
        let i0 = bi.saturating_sub(1);
        let j0 = bj.saturating_sub(1);
        let i1 = usize::min(bi + 1, self.nx - 1);
        let j1 = usize::min(bj + 1, self.ny - 1);
        for j in j0..=j1 {
            for i in i0..=i1 {
                for &id in &self.bins[j * self.nx + i] {
                    let n = &nodes[id as usize];
                    if x.dist(n.position) < n.support {
                        out.push(id);
                    }
                }
            }
        }
    }
}

/// Uniform nodes at (refined) pixel centroids, phase-tagged by the score
/// sign. `refine` subdivides each pixel into `refine x refine` nodes.
pub fn generate_nodes(
    img: &ImageGrid,
    score: &dyn ScoreFunction,
    refine: usize,
    support_factor: f64,
) -> Result<NodeSet> {
    if refine < 1 {
        return Err(Error::Parameter("refine factor must be >= 1".into()));
    }
    if !(support_factor > 0.0) {
        return Err(Error::Parameter("support factor must be positive".into()));
    }
    let spacing = img.pixel_size / refine as f64;
    let lattice = Lattice {
        origin: img.origin,
        nx: img.width() * refine,
        ny: img.height() * refine,
        spacing,
    };
    let support = support_factor * spacing;
    let mut nodes = Vec::with_capacity(lattice.nx * lattice.ny);
    for j in 0..lattice.ny {
        for i in 0..lattice.nx {
            let p = lattice.point(i, j);
            let s = score.score(p);
            if s == 0.0 {
                return Err(Error::Classification { x: [p.x, p.y] });
            }
            nodes.push(Node::regular(p, support, Phase::from_score(s)));
        }
    }
    let grid = SearchGrid::build(&nodes);
    Ok(NodeSet { nodes, h_node: spacing, lattice: Some(lattice), grid })
}

/// Inserts interface nodes where the score changes sign along lattice edges,
/// locating each zero by bisection and merging near-duplicates. Returns the
/// augmented node set.
pub fn generate_interface_nodes(
    score: &dyn ScoreFunction,
    base: &NodeSet,
) -> Result<NodeSet> {
    let lattice = base.lattice.ok_or_else(|| {
        Error::Config("interface nodes need a lattice-generated node set".into())
    })?;
    let tol = 1e-10 * lattice.spacing;
    let mut crossings: Vec<Vec2> = Vec::new();

    let node_score = |i: usize, j: usize| score.score(lattice.point(i, j));
    // horizontal then vertical lattice edges, row-major: deterministic order
    for j in 0..lattice.ny {
        for i in 0..lattice.nx.saturating_sub(1) {
            let (a, b) = (lattice.point(i, j), lattice.point(i + 1, j));
            if let Some(x) = edge_crossing(score, a, b, node_score(i, j), node_score(i + 1, j), tol)? {
                crossings.push(x);
            }
        }
    }
    for j in 0..lattice.ny.saturating_sub(1) {
        for i in 0..lattice.nx {
            let (a, b) = (lattice.point(i, j), lattice.point(i, j + 1));
            if let Some(x) = edge_crossing(score, a, b, node_score(i, j), node_score(i, j + 1), tol)? {
                crossings.push(x);
            }
        }
    }

    // greedy merge: keep a crossing only if no kept node is within range
    let merge_dist = MERGE_FRACTION * base.h_node;
    let mut kept: Vec<Vec2> = Vec::new();
    for c in crossings {
        if kept.iter().all(|k| k.dist(c) >= merge_dist) {
            kept.push(c);
        }
    }

    let support = base
        .nodes
        .first()
        .map(|n| n.support)
        .unwrap_or(DEFAULT_SUPPORT_FACTOR * base.h_node);
    let mut nodes = base.nodes.clone();
    nodes.extend(kept.into_iter().map(|p| Node::interface(p, support)));
    let grid = SearchGrid::build(&nodes);
    Ok(NodeSet { nodes, h_node: base.h_node, lattice: Some(lattice), grid })
}

fn edge_crossing(
    score: &dyn ScoreFunction,
    a: Vec2,
    b: Vec2,
    sa: f64,
    sb: f64,
    tol: f64,
) -> Result<Option<Vec2>> {
    if sa == 0.0 || sb == 0.0 || (sa < 0.0) == (sb < 0.0) {
        return Ok(None);
    }
    let (mut lo, mut hi) = (a, b);
    let mut s_lo = sa;
    for iter in 0..200 {
        if lo.dist(hi) <= tol {
            return Ok(Some((lo + hi) * 0.5));
        }
        if iter == 199 {
            break;
        }
        let mid = (lo + hi) * 0.5;
        let sm = score.score(mid);
        if sm == 0.0 {
            return Ok(Some(mid));
        }
        if (sm < 0.0) == (s_lo < 0.0) {
            lo = mid;
            s_lo = sm;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence(format!(
        "interface bisection did not converge on edge ({}, {}) -- ({}, {})",
        a.x, a.y, b.x, b.y
    )))
}

/// Gauss-Legendre abscissae/weights on [-1, 1] for orders 1..=5.
pub fn gauss_rule(order: usize) -> Result<(&'static [f64], &'static [f64])> {
    const X2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
    const W2: [f64; 2] = [1.0, 1.0];
    const X3: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const W3: [f64; 3] = [
        0.555_555_555_555_555_6,
        0.888_888_888_888_888_9,
        0.555_555_555_555_555_6,
    ];
    const X4: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ];
    const W4: [f64; 4] = [
        0.347_854_845_137_453_85,
        0.652_145_154_862_546_2,
        0.652_145_154_862_546_2,
        0.347_854_845_137_453_85,
    ];
    const X5: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const W5: [f64; 5] = [
        0.236_926_885_056_189_08,
        0.478_628_670_499_366_47,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
    ];
    match order {
        1 => Ok((&[0.0], &[2.0])),
        2 => Ok((&X2, &W2)),
        3 => Ok((&X3, &W3)),
        4 => Ok((&X4, &W4)),
        5 => Ok((&X5, &W5)),
        _ => Err(Error::Parameter(format!("Gauss order {order} outside 1..=5"))),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub position: Vec2,
    /// Integration weight (area, mm^2).
    pub weight: f64,
    /// Owning background cell.
    pub cell: u32,
}

/// Background-cell Gauss quadrature over a rectangular domain.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<QuadPoint>,
    pub domain: Rect,
    pub cells_x: usize,
    pub cells_y: usize,
    pub order: usize,
}

impl QuadratureRule {
    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }
}

/// Builds the background rule: `order x order` Gauss points per cell; cells
/// whose corner scores change sign are subdivided once into 2x2 subcells with
/// the same rule.
pub fn build_quadrature(
    domain: Rect,
    cell_size: f64,
    order: usize,
    score: Option<&dyn ScoreFunction>,
) -> Result<QuadratureRule> {
    if !(cell_size > 0.0) {
        return Err(Error::Parameter("cell size must be positive".into()));
    }
    let (gx, gw) = gauss_rule(order)?;
    let cells_x = usize::max(1, (domain.width() / cell_size + 0.5) as usize);
    let cells_y = usize::max(1, (domain.height() / cell_size + 0.5) as usize);
    let hx = domain.width() / cells_x as f64;
    let hy = domain.height() / cells_y as f64;

    let mut points = Vec::with_capacity(cells_x * cells_y * order * order);
    let emit = |x0: f64, y0: f64, wx: f64, wy: f64, cell: u32, points: &mut Vec<QuadPoint>| {
        // map the [-1,1]^2 tensor rule onto [x0, x0+wx] x [y0, y0+wy]
        for (i, &xi) in gx.iter().enumerate() {
            for (j, &yj) in gx.iter().enumerate() {
                points.push(QuadPoint {
                    position: Vec2::new(
                        x0 + 0.5 * wx * (1.0 + xi),
                        y0 + 0.5 * wy * (1.0 + yj),
                    ),
                    weight: 0.25 * wx * wy * gw[i] * gw[j],
                    cell,
                });
            }
        }
    };

    for cj in 0..cells_y {
        for ci in 0..cells_x {
            let cell = (cj * cells_x + ci) as u32;
            let x0 = domain.min.x + ci as f64 * hx;
            let y0 = domain.min.y + cj as f64 * hy;
            let cut = score.is_some_and(|s| {
                let corners = [
                    s.score(Vec2::new(x0, y0)),
                    s.score(Vec2::new(x0 + hx, y0)),
                    s.score(Vec2::new(x0, y0 + hy)),
                    s.score(Vec2::new(x0 + hx, y0 + hy)),
                ];
                corners.iter().any(|&v| v < 0.0) && corners.iter().any(|&v| v >= 0.0)
            });
            if cut {
                for sj in 0..2 {
                    for si in 0..2 {
                        emit(
                            x0 + 0.5 * hx * si as f64,
                            y0 + 0.5 * hy * sj as f64,
                            0.5 * hx,
                            0.5 * hy,
                            cell,
                            &mut points,
                        );
                    }
                }
            } else {
                emit(x0, y0, hx, hy, cell, &mut points);
            }
        }
    }
    Ok(QuadratureRule { points, domain, cells_x, cells_y, order })
}

/// Which edge of the rectangular domain a boundary station sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

#[derive(Debug, Clone, Copy)]
pub struct BoundaryStation {
    pub position: Vec2,
    /// 1D integration weight (length, mm).
    pub weight: f64,
    pub side: Side,
}

/// 1D Gauss stations along each domain edge, segmented to match the
/// background cells.
pub fn boundary_quadrature(
    domain: Rect,
    cell_size: f64,
    order: usize,
) -> Result<Vec<BoundaryStation>> {
    if !(cell_size > 0.0) {
        return Err(Error::Parameter("cell size must be positive".into()));
    }
    let (gx, gw) = gauss_rule(order)?;
    let mut stations = Vec::new();
    let run = |len: f64, side: Side, place: &dyn Fn(f64) -> Vec2, out: &mut Vec<BoundaryStation>| {
        let n = usize::max(1, (len / cell_size + 0.5) as usize);
        let h = len / n as f64;
        for k in 0..n {
            let s0 = k as f64 * h;
            for (i, &xi) in gx.iter().enumerate() {
                out.push(BoundaryStation {
                    position: place(s0 + 0.5 * h * (1.0 + xi)),
                    weight: 0.5 * h * gw[i],
                    side,
                });
            }
        }
    };
    let (w, h) = (domain.width(), domain.height());
    run(h, Side::Left, &|s| Vec2::new(domain.min.x, domain.min.y + s), &mut stations);
    run(h, Side::Right, &|s| Vec2::new(domain.max.x, domain.min.y + s), &mut stations);
    run(w, Side::Bottom, &|s| Vec2::new(domain.min.x + s, domain.min.y), &mut stations);
    run(w, Side::Top, &|s| Vec2::new(domain.min.x + s, domain.max.y), &mut stations);
    Ok(stations)
}

/// Coverage diagnostics: quadrature points with fewer contributing nodes
/// (nonzero unmodified kernel) than the basis needs.
#[derive(Debug, Clone)]
pub struct CoverageReport {
    pub required: usize,
    /// (point index, contributing count) for each deficient point.
    pub deficient: Vec<(usize, usize)>,
}

impl CoverageReport {
    pub fn is_covered(&self) -> bool {
        self.deficient.is_empty()
    }
}

pub fn check_coverage(
    nodes: &NodeSet,
    quad: &QuadratureRule,
    basis_len: usize,
) -> CoverageReport {
    let mut ids = Vec::new();
    let mut deficient = Vec::new();
    for (idx, p) in quad.points.iter().enumerate() {
        nodes.supporting_nodes(p.position, &mut ids);
        if ids.len() < basis_len {
            deficient.push((idx, ids.len()));
        }
    }
    CoverageReport { required: basis_len, deficient }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::{CircleScore, PlaneScore, UniformScore};

    fn test_image(n: usize, pixel: f64) -> ImageGrid {
        ImageGrid::new(n, n, vec![0u8; n * n], pixel, Vec2::ZERO).unwrap()
    }

    #[test]
    fn thirty_square_image_gives_900_nodes() {
        let img = test_image(30, 0.008);
        let score = UniformScore::default();
        let nodes = generate_nodes(&img, &score, 1, 2.0).unwrap();
        assert_eq!(nodes.len(), 900);
        assert_eq!(nodes.spacing(), 0.008);
        assert!(nodes.nodes().iter().all(|n| n.phase() == Some(Phase::Matrix)));
    }

    #[test]
    fn refine_two_quadruples_nodes_and_halves_spacing() {
        let img = test_image(30, 0.008);
        let score = UniformScore::default();
        let nodes = generate_nodes(&img, &score, 2, 2.0).unwrap();
        assert_eq!(nodes.len(), 3600);
        assert_eq!(nodes.spacing(), 0.004);
    }

    #[test]
    fn nodes_inside_circle_are_inclusion_phase() {
        let img = test_image(20, 0.1);
        let score = CircleScore { center: Vec2::new(1.0, 1.0), radius: 0.5 };
        let nodes = generate_nodes(&img, &score, 1, 2.0).unwrap();
        for n in nodes.nodes() {
            let inside = n.position.dist(Vec2::new(1.0, 1.0)) < 0.5;
            assert_eq!(n.phase() == Some(Phase::Inclusion), inside, "at {:?}", n.position);
        }
    }

    #[test]
    fn vertical_interface_one_node_per_row() {
        let img = test_image(8, 1.0);
        let score = PlaneScore::vertical(4.2); // passes between centroid columns 3.5 and 4.5
        let base = generate_nodes(&img, &score, 1, 2.0).unwrap();
        let with_if = generate_interface_nodes(&score, &base).unwrap();
        let added = with_if.interface_count();
        assert_eq!(added, 8);
        for n in with_if.nodes().iter().filter(|n| n.is_interface()) {
            assert!((n.position.x - 4.2).abs() < 1e-9, "x = {}", n.position.x);
        }
    }

    #[test]
    fn single_phase_score_adds_no_interface_nodes() {
        let img = test_image(6, 1.0);
        let score = UniformScore::default();
        let base = generate_nodes(&img, &score, 1, 2.0).unwrap();
        let with_if = generate_interface_nodes(&score, &base).unwrap();
        assert_eq!(with_if.interface_count(), 0);
        assert_eq!(with_if.len(), base.len());
    }

    #[test]
    fn circle_interface_nodes_sit_on_the_circle() {
        let img = test_image(40, 0.1);
        let center = Vec2::new(2.0, 2.0);
        let r = 1.2;
        let score = CircleScore { center, radius: r };
        let base = generate_nodes(&img, &score, 1, 2.0).unwrap();
        let with_if = generate_interface_nodes(&score, &base).unwrap();
        let h = with_if.spacing();
        let mut count = 0usize;
        for n in with_if.nodes().iter().filter(|n| n.is_interface()) {
            count += 1;
            assert!(
                (n.position.dist(center) - r).abs() < 1e-6 * r,
                "radius error {}",
                (n.position.dist(center) - r).abs()
            );
        }
        let expected = 2.0 * core::f64::consts::PI * r / h;
        assert!(
            (count as f64) > 0.7 * expected && (count as f64) < 1.3 * expected,
            "count {count}, perimeter/h {expected}"
        );
        // merge invariant among interface nodes
        let ifn: Vec<Vec2> = with_if
            .nodes()
            .iter()
            .filter(|n| n.is_interface())
            .map(|n| n.position)
            .collect();
        for (i, a) in ifn.iter().enumerate() {
            for b in ifn.iter().skip(i + 1) {
                assert!(a.dist(*b) >= MERGE_FRACTION * h);
            }
        }
    }

    #[test]
    fn interface_node_scores_are_tiny() {
        let img = test_image(16, 0.5);
        let score = CircleScore { center: Vec2::new(4.0, 4.0), radius: 2.3 };
        let base = generate_nodes(&img, &score, 1, 2.0).unwrap();
        let with_if = generate_interface_nodes(&score, &base).unwrap();
        // bisection tolerance is positional; |S| <= |grad S| * tol
        let tol = 1e-10 * 0.5;
        for n in with_if.nodes().iter().filter(|n| n.is_interface()) {
            assert!(score.score(n.position).abs() <= tol * 1.01);
        }
    }

    #[test]
    fn quadrature_unit_square_counts_and_weight() {
        let rule = build_quadrature(
            Rect::new(Vec2::ZERO, Vec2::new(1.0, 1.0)),
            0.5,
            2,
            None,
        )
        .unwrap();
        assert_eq!(rule.points.len(), 16);
        assert!((rule.total_weight() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quadrature_first_moments_match_centroid() {
        let domain = Rect::new(Vec2::new(-0.3, 0.2), Vec2::new(1.1, 2.7));
        let rule = build_quadrature(domain, 0.37, 3, None).unwrap();
        let area = domain.area();
        let sx: f64 = rule.points.iter().map(|p| p.weight * p.position.x).sum();
        let sy: f64 = rule.points.iter().map(|p| p.weight * p.position.y).sum();
        assert!((rule.total_weight() - area).abs() < 1e-10 * area);
        assert!((sx - area * 0.5 * (domain.min.x + domain.max.x)).abs() < 1e-10 * area);
        assert!((sy - area * 0.5 * (domain.min.y + domain.max.y)).abs() < 1e-10 * area);
    }

    #[test]
    fn quadrature_integrates_bilinear_exactly() {
        let rule = build_quadrature(
            Rect::new(Vec2::ZERO, Vec2::new(1.0, 1.0)),
            0.5,
            2,
            None,
        )
        .unwrap();
        let v: f64 = rule.points.iter().map(|p| p.weight * p.position.x * p.position.y).sum();
        assert!((v - 0.25).abs() < 1e-14);
    }

    #[test]
    fn cut_cells_are_subdivided_but_weight_is_preserved() {
        let domain = Rect::new(Vec2::ZERO, Vec2::new(1.0, 1.0));
        let score = PlaneScore::vertical(0.5);
        let plain = build_quadrature(domain, 0.25, 2, None).unwrap();
        let cut = build_quadrature(domain, 0.25, 2, Some(&score)).unwrap();
        assert!(cut.points.len() > plain.points.len());
        assert!((cut.total_weight() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn boundary_stations_cover_the_perimeter() {
        let domain = Rect::new(Vec2::ZERO, Vec2::new(2.0, 1.0));
        let st = boundary_quadrature(domain, 0.5, 2).unwrap();
        let total: f64 = st.iter().map(|s| s.weight).sum();
        assert!((total - 6.0).abs() < 1e-12);
        for s in &st {
            match s.side {
                Side::Left => assert_eq!(s.position.x, 0.0),
                Side::Right => assert_eq!(s.position.x, 2.0),
                Side::Bottom => assert_eq!(s.position.y, 0.0),
                Side::Top => assert_eq!(s.position.y, 1.0),
            }
        }
    }

    #[test]
    fn coverage_report_flags_sparse_regions() {
        let nodes = NodeSet::from_parts(
            vec![Node::regular(Vec2::ZERO, 0.5, Phase::Matrix)],
            1.0,
        )
        .unwrap();
        let rule = build_quadrature(
            Rect::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)),
            1.0,
            2,
            None,
        )
        .unwrap();
        let report = check_coverage(&nodes, &rule, 3);
        assert!(!report.is_covered());
        assert_eq!(report.required, 3);
    }

    #[test]
    fn search_grid_finds_exactly_the_support_nodes() {
        let img = test_image(10, 1.0);
        let score = UniformScore::default();
        let nodes = generate_nodes(&img, &score, 1, 2.0).unwrap();
        let mut ids = Vec::new();
        let x = Vec2::new(5.2, 5.2);
        nodes.supporting_nodes(x, &mut ids);
        // brute force
        let expected: Vec<u32> = (0..nodes.len() as u32)
            .filter(|&i| x.dist(nodes.node(i as usize).position) < nodes.node(i as usize).support)
            .collect();
        let mut got = ids.clone();
        got.sort_unstable();
        assert_eq!(got, expected);
        assert!(!expected.is_empty());
    }
}
