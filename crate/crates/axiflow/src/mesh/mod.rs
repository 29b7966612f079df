//! Discrete generating curves and their element/vertex geometry.
//!
//! A curve is a polygon in the (r, z) half-plane, either closed (the
//! generated surface is a torus-like genus-1 surface) or open. Each endpoint
//! of an open curve is classified: attached to the rotation axis, held
//! fixed, sliding along a coaxial cylinder, or sliding within a horizontal
//! plane. The two slide conditions carry a contact energy density.
//!
//! The reference parameterization is always the uniform grid q_j = j/J;
//! mesh nonuniformity lives entirely in the node positions.

pub mod io;
pub mod ip;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::schemes::{FlowSpec, IntegrationVariant, SchemeTag};
use crate::vec2::Vec2;
use crate::Result;

/// Relative tolerance (times curve diameter) below which an element counts
/// as degenerate during evolution.
pub const DEGENERATE_ELEMENT_REL_TOL: f64 = 1e-14;

/// Relative singular-value threshold for the span (rank) checks.
pub const SPAN_RANK_REL_TOL: f64 = 1e-10;

/// Classification of one endpoint of an open generating curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Endpoint on the rotation axis (r = 0); generates an interior point
    /// of the surface. Moves vertically only.
    Axis,
    /// Fixed boundary circle; the node does not move.
    Fixed,
    /// Boundary circle sliding along an infinite coaxial cylinder
    /// (r fixed, z free), with contact energy density `rho`.
    CylinderSlide { rho: f64 },
    /// Boundary circle expanding/shrinking within a horizontal plane
    /// (z fixed, r free), with contact energy density `rho`.
    PlaneSlide { rho: f64 },
}

impl BoundaryKind {
    pub fn contact_density(&self) -> f64 {
        match self {
            BoundaryKind::CylinderSlide { rho } | BoundaryKind::PlaneSlide { rho } => *rho,
            _ => 0.0,
        }
    }

    pub fn is_axis(&self) -> bool {
        matches!(self, BoundaryKind::Axis)
    }

    fn validate(&self) -> Result<()> {
        let rho = self.contact_density();
        if !rho.is_finite() || rho.abs() > 1.0 {
            return Err(Error::InvalidCurve(format!(
                "contact density {rho} outside [-1, 1]"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Periodic curve; node 0 follows the last node.
    Closed,
    /// Open curve with classified endpoints at node 0 (`start`) and the
    /// last node (`end`).
    Open {
        start: BoundaryKind,
        end: BoundaryKind,
    },
}

/// Scalar nodal coefficients, aligned with curve node indexing.
pub type NodeScalarField = Vec<f64>;
/// Vector nodal coefficients, aligned with curve node indexing.
pub type NodeVectorField = Vec<Vec2>;

/// Polygonal generating curve of an axisymmetric surface.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCurve {
    nodes: Vec<Vec2>,
    topology: Topology,
}

impl DiscreteCurve {
    pub fn closed(nodes: Vec<Vec2>) -> Result<Self> {
        let curve = DiscreteCurve {
            nodes,
            topology: Topology::Closed,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn open(nodes: Vec<Vec2>, start: BoundaryKind, end: BoundaryKind) -> Result<Self> {
        let curve = DiscreteCurve {
            nodes,
            topology: Topology::Open { start, end },
        };
        curve.validate()?;
        Ok(curve)
    }

    /// Replace the node positions, re-validating every curve invariant.
    pub fn with_nodes(&self, nodes: Vec<Vec2>) -> Result<Self> {
        let curve = DiscreteCurve {
            nodes,
            topology: self.topology,
        };
        curve.validate()?;
        Ok(curve)
    }

    fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        match self.topology {
            Topology::Closed => {
                if n < 3 {
                    return Err(Error::InvalidCurve(format!(
                        "closed curve needs at least 3 nodes, got {n}"
                    )));
                }
            }
            Topology::Open { start, end } => {
                if n < 4 {
                    return Err(Error::InvalidCurve(format!(
                        "open curve needs at least 4 nodes (J >= 3), got {n}"
                    )));
                }
                start.validate()?;
                end.validate()?;
            }
        }
        for (j, p) in self.nodes.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidCurve(format!(
                    "non-finite coordinates at node {j}"
                )));
            }
            let on_axis = self.is_axis_node(j);
            if on_axis {
                if p.x != 0.0 {
                    return Err(Error::InvalidCurve(format!(
                        "axis endpoint {j} has r = {} (must be exactly 0)",
                        p.x
                    )));
                }
            } else if p.x <= 0.0 {
                return Err(Error::InvalidCurve(format!(
                    "node {j} has r = {} (must be positive off the axis)",
                    p.x
                )));
            }
        }
        for e in 0..self.n_elements() {
            let (a, b) = self.element_nodes(e);
            let len = (self.nodes[b] - self.nodes[a]).norm();
            if len <= 0.0 {
                return Err(Error::ZeroLengthElement {
                    index: e,
                    length: len,
                });
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn node(&self, j: usize) -> Vec2 {
        self.nodes[j]
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        match self.topology {
            Topology::Closed => self.nodes.len(),
            Topology::Open { .. } => self.nodes.len() - 1,
        }
    }

    /// Grid spacing of the reference parameterization, h = 1/J.
    pub fn h_ref(&self) -> f64 {
        1.0 / self.n_elements() as f64
    }

    pub fn is_closed(&self) -> bool {
        matches!(self.topology, Topology::Closed)
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Node indices (a, b) of element `e`, oriented from a to b.
    pub fn element_nodes(&self, e: usize) -> (usize, usize) {
        match self.topology {
            Topology::Closed => (e, (e + 1) % self.nodes.len()),
            Topology::Open { .. } => (e, e + 1),
        }
    }

    /// Elements adjacent to node `j` as (incoming, outgoing).
    pub fn adjacent_elements(&self, j: usize) -> (Option<usize>, Option<usize>) {
        let n = self.n_elements();
        match self.topology {
            Topology::Closed => (Some((j + n - 1) % n), Some(j)),
            Topology::Open { .. } => {
                let left = if j > 0 { Some(j - 1) } else { None };
                let right = if j < n { Some(j) } else { None };
                (left, right)
            }
        }
    }

    /// Node index of endpoint p (0 or 1). Only meaningful for open curves.
    pub fn endpoint_node(&self, p: usize) -> usize {
        if p == 0 {
            0
        } else {
            self.nodes.len() - 1
        }
    }

    pub fn endpoint_kind(&self, p: usize) -> Option<BoundaryKind> {
        match self.topology {
            Topology::Closed => None,
            Topology::Open { start, end } => Some(if p == 0 { start } else { end }),
        }
    }

    /// Boundary classification of node `j`, if it is an endpoint.
    pub fn node_kind(&self, j: usize) -> Option<BoundaryKind> {
        match self.topology {
            Topology::Closed => None,
            Topology::Open { start, end } => {
                if j == 0 {
                    Some(start)
                } else if j == self.nodes.len() - 1 {
                    Some(end)
                } else {
                    None
                }
            }
        }
    }

    pub fn is_axis_node(&self, j: usize) -> bool {
        self.node_kind(j).map_or(false, |k| k.is_axis())
    }

    pub fn element_lengths(&self) -> Vec<f64> {
        (0..self.n_elements())
            .map(|e| {
                let (a, b) = self.element_nodes(e);
                (self.nodes[b] - self.nodes[a]).norm()
            })
            .collect()
    }

    /// Bounding-box diagonal; the scale used by degeneracy tolerances.
    pub fn diameter(&self) -> f64 {
        let mut lo = self.nodes[0];
        let mut hi = self.nodes[0];
        for p in &self.nodes {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (hi - lo).norm()
    }

    /// Per-element unit tangents and outward normals. The normal is the
    /// clockwise rotation of the tangent, so a counterclockwise generating
    /// curve has normals pointing away from the enclosed region.
    pub fn element_tangents_normals(&self) -> Result<(Vec<Vec2>, Vec<Vec2>)> {
        let frames = Frames::new(self)?;
        Ok((frames.tangents, frames.normals))
    }

    /// Mass-lumped L2 projection of the element normals onto continuous
    /// piecewise linears: the element-length weighted average of the two
    /// adjacent normals (the single adjacent normal at open endpoints).
    pub fn vertex_normals(&self) -> Result<NodeVectorField> {
        let frames = Frames::new(self)?;
        Ok(frames.vertex_normals)
    }

    /// Ratio of the longest to the shortest element length.
    pub fn element_ratio(&self) -> Result<f64> {
        let lengths = self.element_lengths();
        let max = lengths.iter().cloned().fold(f64::MIN, f64::max);
        let min = lengths.iter().cloned().fold(f64::MAX, f64::min);
        let tol = DEGENERATE_ELEMENT_REL_TOL * self.diameter();
        if min <= tol {
            let index = lengths.iter().position(|&l| l <= tol).unwrap_or(0);
            return Err(Error::ZeroLengthElement { index, length: min });
        }
        Ok(max / min)
    }

    /// Smallest radial coordinate over nodes not pinned to the axis.
    pub fn min_radius_off_axis(&self) -> f64 {
        (0..self.n_nodes())
            .filter(|&j| !self.is_axis_node(j))
            .map(|j| self.nodes[j].x)
            .fold(f64::MAX, f64::min)
    }
}

/// Element and vertex geometry of one curve state, computed once per step.
#[derive(Clone, Debug)]
pub struct Frames {
    /// Element lengths |X_j - X_{j-1}|.
    pub lengths: Vec<f64>,
    pub tangents: Vec<Vec2>,
    pub normals: Vec<Vec2>,
    /// Vertex normals (length-weighted averages of adjacent element normals).
    pub vertex_normals: Vec<Vec2>,
    /// Lumped-mass weight per node: half the total adjacent element length.
    pub node_weights: Vec<f64>,
}

impl Frames {
    pub fn new(curve: &DiscreteCurve) -> Result<Self> {
        let tol = DEGENERATE_ELEMENT_REL_TOL * curve.diameter();
        let ne = curve.n_elements();
        let nn = curve.n_nodes();
        let mut lengths = Vec::with_capacity(ne);
        let mut tangents = Vec::with_capacity(ne);
        let mut normals = Vec::with_capacity(ne);
        for e in 0..ne {
            let (a, b) = curve.element_nodes(e);
            let d = curve.node(b) - curve.node(a);
            let len = d.norm();
            if len <= tol {
                return Err(Error::ZeroLengthElement {
                    index: e,
                    length: len,
                });
            }
            let tau = d / len;
            lengths.push(len);
            tangents.push(tau);
            normals.push(tau.perp_cw());
        }
        let mut vertex_normals = Vec::with_capacity(nn);
        let mut node_weights = Vec::with_capacity(nn);
        for j in 0..nn {
            let (left, right) = curve.adjacent_elements(j);
            let mut num = Vec2::ZERO;
            let mut den = 0.0;
            if let Some(e) = left {
                num += lengths[e] * normals[e];
                den += lengths[e];
            }
            if let Some(e) = right {
                num += lengths[e] * normals[e];
                den += lengths[e];
            }
            vertex_normals.push(num / den);
            node_weights.push(0.5 * den);
        }
        Ok(Frames {
            lengths,
            tangents,
            normals,
            vertex_normals,
            node_weights,
        })
    }
}

/// Outcome of a single assumption check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Check {
    pub pass: bool,
    /// Index of the first offending element or node, when meaningful.
    pub offending_index: Option<usize>,
}

impl Check {
    fn pass() -> Self {
        Check {
            pass: true,
            offending_index: None,
        }
    }

    fn fail(index: Option<usize>) -> Self {
        Check {
            pass: false,
            offending_index: index,
        }
    }
}

/// Results of the solvability assumption checks for a curve state.
///
/// The two span checks report the plain rank-2 condition. Step solvability
/// additionally accounts for boundary constraints: the span condition only
/// has to control constant displacements admitted by the constrained test
/// space, so e.g. a straight cylinder with fixed ends is fine for every
/// scheme even though its normals are rank deficient.
#[derive(Clone, Copy, Debug)]
pub struct AssumptionReport {
    /// Every element length above the degeneracy tolerance.
    pub positive_lengths: Check,
    /// Radial coordinate positive at every node off the axis.
    pub positive_radius: Check,
    /// Vertex normals span the plane (scheme-A family).
    pub vertex_normal_span: Check,
    /// Radially weighted normal functionals span the plane (scheme-C family).
    pub weighted_normal_span: Check,
    vertex_normal_solvable: bool,
    weighted_normal_solvable: bool,
}

impl AssumptionReport {
    pub fn element_geometry_ok(&self) -> bool {
        self.positive_lengths.pass && self.positive_radius.pass
    }

    /// Whether the step system of `scheme` is solvable on this state.
    pub fn scheme_ok(&self, scheme: SchemeTag) -> bool {
        if !self.element_geometry_ok() {
            return false;
        }
        match scheme {
            SchemeTag::A => self.vertex_normal_solvable,
            SchemeTag::B | SchemeTag::D | SchemeTag::DStar => true,
            SchemeTag::C | SchemeTag::CStar => self.weighted_normal_solvable,
        }
    }

    pub fn describe_failure(&self, scheme: SchemeTag) -> String {
        if !self.positive_lengths.pass {
            return format!(
                "degenerate element at index {:?}",
                self.positive_lengths.offending_index
            );
        }
        if !self.positive_radius.pass {
            return format!(
                "nonpositive radius at node {:?}",
                self.positive_radius.offending_index
            );
        }
        match scheme {
            SchemeTag::A => "vertex normals leave a constant null mode".to_string(),
            SchemeTag::C | SchemeTag::CStar => {
                "weighted normal functionals leave a constant null mode".to_string()
            }
            _ => "assumptions hold".to_string(),
        }
    }
}

/// Rank-2 test for a set of plane vectors via the 2x2 Gram matrix:
/// passes when the smallest singular value exceeds `SPAN_RANK_REL_TOL`
/// times the largest.
fn spans_plane(vectors: impl Iterator<Item = Vec2>) -> bool {
    let (mut gxx, mut gxy, mut gyy) = (0.0, 0.0, 0.0);
    for v in vectors {
        gxx += v.x * v.x;
        gxy += v.x * v.y;
        gyy += v.y * v.y;
    }
    let tr = gxx + gyy;
    let disc = ((gxx - gyy).powi(2) + 4.0 * gxy * gxy).sqrt();
    let lam_max = 0.5 * (tr + disc);
    let lam_min = 0.5 * (tr - disc).max(0.0);
    lam_min > SPAN_RANK_REL_TOL * SPAN_RANK_REL_TOL * lam_max
}

/// Constant vector fields contained in the constrained displacement test
/// space, as (e1 admissible, e2 admissible). Closed curves admit both;
/// endpoint constraints remove directions.
fn admissible_constants(curve: &DiscreteCurve) -> (bool, bool) {
    match curve.topology() {
        Topology::Closed => (true, true),
        Topology::Open { start, end } => {
            let mut e1 = true;
            let mut e2 = true;
            for kind in [start, end] {
                match kind {
                    BoundaryKind::Axis | BoundaryKind::CylinderSlide { .. } => e1 = false,
                    BoundaryKind::PlaneSlide { .. } => e2 = false,
                    BoundaryKind::Fixed => {
                        e1 = false;
                        e2 = false;
                    }
                }
            }
            (e1, e2)
        }
    }
}

/// Whether `vectors` control every constant direction that survives the
/// boundary constraints. The full rank-2 span condition is sufficient for
/// solvability but not necessary: its role is to exclude the constant null
/// mode, and endpoint constraints may already do so.
fn spans_admissible_constants(curve: &DiscreteCurve, vectors: &[Vec2]) -> bool {
    let (e1, e2) = admissible_constants(curve);
    match (e1, e2) {
        (true, true) => spans_plane(vectors.iter().copied()),
        (false, false) => true,
        (along_e1, _) => {
            let d = if along_e1 {
                Vec2::new(1.0, 0.0)
            } else {
                Vec2::new(0.0, 1.0)
            };
            let proj: f64 = vectors.iter().map(|v| v.dot(d) * v.dot(d)).sum();
            let scale: f64 = vectors.iter().map(|v| v.norm_sq()).sum();
            proj > SPAN_RANK_REL_TOL * SPAN_RANK_REL_TOL * scale
        }
    }
}

/// Check the solvability assumptions for `curve` in the context of `spec`.
pub fn check_assumptions(curve: &DiscreteCurve, spec: &FlowSpec) -> AssumptionReport {
    let tol = DEGENERATE_ELEMENT_REL_TOL * curve.diameter();
    let lengths = curve.element_lengths();
    let positive_lengths = match lengths.iter().position(|&l| l <= tol) {
        Some(e) => Check::fail(Some(e)),
        None => Check::pass(),
    };
    let positive_radius = match (0..curve.n_nodes())
        .find(|&j| !curve.is_axis_node(j) && curve.node(j).x <= 0.0)
    {
        Some(j) => Check::fail(Some(j)),
        None => Check::pass(),
    };

    if !positive_lengths.pass {
        // Normals are not well defined on a degenerate mesh.
        return AssumptionReport {
            positive_lengths,
            positive_radius,
            vertex_normal_span: Check::fail(None),
            weighted_normal_span: Check::fail(None),
            vertex_normal_solvable: false,
            weighted_normal_solvable: false,
        };
    }

    let frames = Frames::new(curve).expect("lengths checked above");
    let vertex_normal_span = if spans_plane(frames.vertex_normals.iter().copied()) {
        Check::pass()
    } else {
        Check::fail(None)
    };
    let vertex_normal_solvable = spans_admissible_constants(curve, &frames.vertex_normals);

    let weighted = weighted_normal_functionals(curve, &frames, spec.variant);
    let weighted_normal_span = if spans_plane(weighted.iter().copied()) {
        Check::pass()
    } else {
        Check::fail(None)
    };
    let weighted_normal_solvable = spans_admissible_constants(curve, &weighted);

    AssumptionReport {
        positive_lengths,
        positive_radius,
        vertex_normal_span,
        weighted_normal_span,
        vertex_normal_solvable,
        weighted_normal_solvable,
    }
}

/// The vectors (r nu, chi_j |X_rho|)^(h) over the admissible test nodes;
/// their span condition governs solvability of the scheme-C family.
fn weighted_normal_functionals(
    curve: &DiscreteCurve,
    frames: &Frames,
    variant: IntegrationVariant,
) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(curve.n_nodes());
    for j in 0..curve.n_nodes() {
        // In the mass-lumped setting the curvature test space omits axis
        // nodes; with true integration it does not, but there r = 0 makes
        // the functional vanish at the axis anyway.
        if curve.is_axis_node(j) && variant == IntegrationVariant::MassLumped {
            continue;
        }
        let r_j = curve.node(j).x;
        let v = match variant {
            IntegrationVariant::MassLumped => {
                r_j * frames.node_weights[j] * frames.vertex_normals[j]
            }
            IntegrationVariant::Exact => {
                let (left, right) = curve.adjacent_elements(j);
                let mut v = Vec2::ZERO;
                if let Some(e) = left {
                    let (a, _) = curve.element_nodes(e);
                    let r_a = curve.node(a).x;
                    v += frames.lengths[e] * (r_a + 2.0 * r_j) / 6.0 * frames.normals[e];
                }
                if let Some(e) = right {
                    let (_, b) = curve.element_nodes(e);
                    let r_b = curve.node(b).x;
                    v += frames.lengths[e] * (2.0 * r_j + r_b) / 6.0 * frames.normals[e];
                }
                v
            }
        };
        out.push(v);
    }
    out
}

/// Closed regular polygon used by tests across modules.
#[cfg(test)]
pub(crate) fn regular_polygon(center: Vec2, radius: f64, j: usize) -> DiscreteCurve {
    let nodes = (0..j)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / j as f64;
            center + Vec2::new(radius * th.cos(), radius * th.sin())
        })
        .collect();
    DiscreteCurve::closed(nodes).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{FlowSpec, SchemeTag};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn square_curve() -> DiscreteCurve {
        // Regular closed 4-gon around (2, 1).
        DiscreteCurve::closed(vec![
            Vec2::new(2.0, 0.0),
            Vec2::new(3.0, 1.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(1.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn tangent_normal_axis_aligned_segments() {
        // Unit segment (1,0) -> (1,1) inside an open curve.
        let c = DiscreteCurve::open(
            vec![
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(1.0, 2.0),
                Vec2::new(1.0, 3.0),
            ],
            BoundaryKind::Fixed,
            BoundaryKind::Fixed,
        )
        .unwrap();
        let (tau, nu) = c.element_tangents_normals().unwrap();
        assert_eq!(tau[0], Vec2::new(0.0, 1.0));
        assert_eq!(nu[0], Vec2::new(1.0, 0.0));
    }

    #[test]
    fn tangent_normal_clockwise_rotation() {
        // Segment along e1: tangent (1,0), normal (0,-1).
        let c = DiscreteCurve::open(
            vec![
                Vec2::new(1.0, 0.0),
                Vec2::new(2.0, 0.0),
                Vec2::new(3.0, 0.0),
                Vec2::new(4.0, 0.0),
            ],
            BoundaryKind::Fixed,
            BoundaryKind::Fixed,
        )
        .unwrap();
        let (tau, nu) = c.element_tangents_normals().unwrap();
        assert_eq!(tau[1], Vec2::new(1.0, 0.0));
        assert_eq!(nu[1], Vec2::new(0.0, -1.0));
    }

    #[test]
    fn square_normals_point_outward() {
        let c = square_curve();
        let (_, nu) = c.element_tangents_normals().unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert_relative_eq!(nu[0].x, s, epsilon = 1e-15);
        assert_relative_eq!(nu[0].y, -s, epsilon = 1e-15);
        // All normals point radially away from the center (2,1).
        let center = Vec2::new(2.0, 1.0);
        for e in 0..4 {
            let (a, b) = c.element_nodes(e);
            let mid = (c.node(a) + c.node(b)) * 0.5;
            assert!(nu[e].dot(mid - center) > 0.0);
        }
    }

    #[test]
    fn tangents_normals_orthonormal() {
        let c = super::regular_polygon(Vec2::new(3.0, -1.0), 1.3, 17);
        let (tau, nu) = c.element_tangents_normals().unwrap();
        for e in 0..c.n_elements() {
            assert!((tau[e].norm() - 1.0).abs() < 1e-14);
            assert!((nu[e].norm() - 1.0).abs() < 1e-14);
            assert!(tau[e].dot(nu[e]).abs() < 1e-14);
        }
    }

    #[test]
    fn vertex_normals_parallel_elements() {
        // Straight polyline: vertex normal equals element normal, norm 1.
        let c = DiscreteCurve::open(
            vec![
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(1.0, 2.5),
                Vec2::new(1.0, 3.0),
            ],
            BoundaryKind::Fixed,
            BoundaryKind::Fixed,
        )
        .unwrap();
        let omega = c.vertex_normals().unwrap();
        for w in &omega {
            assert_relative_eq!(w.x, 1.0, epsilon = 1e-15);
            assert_relative_eq!(w.y, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn vertex_normals_regular_polygon_norm() {
        for j in [5usize, 8, 32] {
            let c = super::regular_polygon(Vec2::new(4.0, 0.0), 1.0, j);
            let omega = c.vertex_normals().unwrap();
            let expect = (PI / j as f64).cos();
            for w in &omega {
                assert_relative_eq!(w.norm(), expect, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn vertex_normal_open_endpoint_is_element_normal() {
        let c = DiscreteCurve::open(
            vec![
                Vec2::new(1.0, 0.0),
                Vec2::new(2.0, 0.5),
                Vec2::new(2.5, 1.5),
                Vec2::new(2.0, 2.5),
            ],
            BoundaryKind::Fixed,
            BoundaryKind::Fixed,
        )
        .unwrap();
        let (_, nu) = c.element_tangents_normals().unwrap();
        let omega = c.vertex_normals().unwrap();
        assert_eq!(omega[0], nu[0]);
        assert_eq!(omega[3], nu[2]);
    }

    #[test]
    fn element_ratio_basic() {
        let c = super::regular_polygon(Vec2::new(4.0, 0.0), 1.0, 12);
        assert_relative_eq!(c.element_ratio().unwrap(), 1.0, epsilon = 1e-12);

        // Element lengths {1, 2, 4} -> ratio 4.
        let c = DiscreteCurve::open(
            vec![
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(1.0, 3.0),
                Vec2::new(1.0, 7.0),
            ],
            BoundaryKind::Fixed,
            BoundaryKind::Fixed,
        )
        .unwrap();
        assert_relative_eq!(c.element_ratio().unwrap(), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn assumptions_circle_passes() {
        let c = super::regular_polygon(Vec2::new(4.0, 0.0), 1.0, 16);
        let spec = FlowSpec::mcf(SchemeTag::A);
        let rep = check_assumptions(&c, &spec);
        assert!(rep.positive_lengths.pass);
        assert!(rep.positive_radius.pass);
        assert!(rep.vertex_normal_span.pass);
        assert!(rep.weighted_normal_span.pass);
        assert!(rep.scheme_ok(SchemeTag::A));
    }

    #[test]
    fn assumptions_straight_segment_fails_span() {
        let nodes = vec![
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 2.0),
            Vec2::new(1.0, 3.0),
        ];
        let c = DiscreteCurve::open(nodes.clone(), BoundaryKind::Fixed, BoundaryKind::Fixed)
            .unwrap();
        let rep = check_assumptions(&c, &FlowSpec::mcf(SchemeTag::A));
        // Parallel normals: the raw rank-2 condition fails...
        assert!(!rep.vertex_normal_span.pass);
        assert!(!rep.weighted_normal_span.pass);
        // ...but fixed endpoints leave no constant null mode, so the step
        // is still solvable; only scheme B needs nothing at all.
        assert!(rep.scheme_ok(SchemeTag::A));
        assert!(rep.scheme_ok(SchemeTag::B));

        // With endpoints sliding along a cylinder, vertical translations
        // survive the constraints and the system is genuinely singular.
        let c = DiscreteCurve::open(
            nodes,
            BoundaryKind::CylinderSlide { rho: 0.0 },
            BoundaryKind::CylinderSlide { rho: 0.0 },
        )
        .unwrap();
        let rep = check_assumptions(&c, &FlowSpec::mcf(SchemeTag::A));
        assert!(!rep.scheme_ok(SchemeTag::A));
        assert!(!rep.scheme_ok(SchemeTag::CStar));
    }

    #[test]
    fn assumptions_semicircle_on_axis_passes() {
        let c = crate::harness::generate::nonuniform_semicircle(1.0, 16).unwrap();
        let rep = check_assumptions(&c, &FlowSpec::mcf(SchemeTag::A));
        assert!(rep.scheme_ok(SchemeTag::A));
        assert!(rep.scheme_ok(SchemeTag::CStar));
    }

    #[test]
    fn rejects_invalid_curves() {
        assert!(DiscreteCurve::closed(vec![Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)]).is_err());
        // Axis endpoint with nonzero r.
        assert!(DiscreteCurve::open(
            vec![
                Vec2::new(0.5, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(1.0, 2.0),
                Vec2::new(0.0, 3.0),
            ],
            BoundaryKind::Axis,
            BoundaryKind::Axis,
        )
        .is_err());
        // Negative radius off axis.
        assert!(DiscreteCurve::closed(vec![
            Vec2::new(-1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(2.0, 0.0),
        ])
        .is_err());
        // Contact density out of range.
        assert!(DiscreteCurve::open(
            vec![
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(1.0, 2.0),
                Vec2::new(1.0, 3.0),
            ],
            BoundaryKind::PlaneSlide { rho: 1.5 },
            BoundaryKind::Fixed,
        )
        .is_err());
        // Repeated node -> zero length element.
        assert!(DiscreteCurve::closed(vec![
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 1.0),
        ])
        .is_err());
    }
}
