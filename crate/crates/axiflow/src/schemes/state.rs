//! Per-step state shared by assembly and residual evaluation: element and
//! vertex geometry of the current curve, the degree-of-freedom layout with
//! boundary constraints eliminated, and gather/scatter between nodal fields
//! and the packed unknown vector.

use crate::error::Error;
use crate::mesh::{BoundaryKind, DiscreteCurve, Frames};
use crate::schemes::{FastPath, FlowSpec, IntegrationVariant, SchemeTag};
use crate::solver::NewtonConfig;
use crate::vec2::Vec2;
use crate::Result;

/// Local unknown slots per node: displacement components then curvature
/// components. Constrained or absent slots carry no global index.
const MAX_LOCALS: usize = 4;

#[derive(Clone, Debug)]
pub struct DofLayout {
    slots: Vec<[Option<u32>; MAX_LOCALS]>,
    n_free: usize,
    /// Trailing unknowns forming the cyclic border (dofs of the last node
    /// of a closed curve), 0 for open curves.
    pub border: usize,
    pub bandwidth: usize,
    pub curv_comps: usize,
}

impl DofLayout {
    pub fn build(curve: &DiscreteCurve, curv_comps: usize, curv_absent_at_axis: bool) -> Self {
        let nn = curve.n_nodes();
        let mut slots = vec![[None; MAX_LOCALS]; nn];
        let mut next: u32 = 0;
        for j in 0..nn {
            let kind = curve.node_kind(j);
            let (dx_free, dz_free) = match kind {
                None => (true, true),
                Some(BoundaryKind::Axis) => (false, true),
                Some(BoundaryKind::Fixed) => (false, false),
                Some(BoundaryKind::CylinderSlide { .. }) => (false, true),
                Some(BoundaryKind::PlaneSlide { .. }) => (true, false),
            };
            if dx_free {
                slots[j][0] = Some(next);
                next += 1;
            }
            if dz_free {
                slots[j][1] = Some(next);
                next += 1;
            }
            let curv_here = !(curv_absent_at_axis && curve.is_axis_node(j));
            if curv_here {
                for c in 0..curv_comps {
                    slots[j][2 + c] = Some(next);
                    next += 1;
                }
            }
        }
        let n_free = next as usize;

        let border = if curve.is_closed() {
            slots[nn - 1].iter().flatten().count()
        } else {
            0
        };

        // Band of the leading (non-border) block: widest span over element
        // node pairs that avoid the border node.
        let first = |j: usize| -> Option<u32> { slots[j].iter().flatten().min().copied() };
        let last = |j: usize| -> Option<u32> { slots[j].iter().flatten().max().copied() };
        let border_node = if curve.is_closed() { Some(nn - 1) } else { None };
        let mut bandwidth = 1usize;
        for e in 0..curve.n_elements() {
            let (a, b) = curve.element_nodes(e);
            if Some(a) == border_node || Some(b) == border_node {
                continue;
            }
            if let (Some(fa), Some(lb)) = (
                first(a).min(first(b)),
                last(a).max(last(b)),
            ) {
                bandwidth = bandwidth.max((lb - fa) as usize);
            }
        }

        DofLayout {
            slots,
            n_free,
            border,
            bandwidth,
            curv_comps,
        }
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Global index of a node's local slot (0 = dr, 1 = dz, 2.. = curvature).
    #[inline]
    pub fn dof(&self, node: usize, local: usize) -> Option<usize> {
        self.slots[node][local].map(|i| i as usize)
    }

    pub fn delta_dof(&self, node: usize, comp: usize) -> Option<usize> {
        self.dof(node, comp)
    }

    pub fn curv_dof(&self, node: usize, comp: usize) -> Option<usize> {
        self.dof(node, 2 + comp)
    }

    pub fn has_curv(&self, node: usize) -> bool {
        self.curv_comps > 0 && self.slots[node][2].is_some()
    }

    /// Expand a packed unknown vector into nodal displacement and curvature
    /// fields, inserting exact zeros at constrained or absent slots; this
    /// realizes membership in the constrained trial spaces.
    pub fn scatter(&self, u: &[f64]) -> Unknowns {
        debug_assert_eq!(u.len(), self.n_free);
        let nn = self.slots.len();
        let mut delta = vec![Vec2::ZERO; nn];
        let mut curv = vec![Vec2::ZERO; nn];
        for j in 0..nn {
            if let Some(i) = self.dof(j, 0) {
                delta[j].x = u[i];
            }
            if let Some(i) = self.dof(j, 1) {
                delta[j].y = u[i];
            }
            if let Some(i) = self.dof(j, 2) {
                curv[j].x = u[i];
            }
            if let Some(i) = self.dof(j, 3) {
                curv[j].y = u[i];
            }
        }
        Unknowns { delta, curv }
    }

    /// Pack nodal fields into an unknown vector (ignoring constrained slots).
    pub fn gather(&self, delta: &[Vec2], curv: &[Vec2]) -> Vec<f64> {
        let mut u = vec![0.0; self.n_free];
        for j in 0..self.slots.len() {
            if let Some(i) = self.dof(j, 0) {
                u[i] = delta[j].x;
            }
            if let Some(i) = self.dof(j, 1) {
                u[i] = delta[j].y;
            }
            if let Some(i) = self.dof(j, 2) {
                u[i] = curv[j].x;
            }
            if let Some(i) = self.dof(j, 3) {
                u[i] = curv[j].y;
            }
        }
        u
    }
}

/// Nodal view of the packed unknowns. For scalar-curvature schemes only the
/// x component of `curv` is meaningful.
#[derive(Clone, Debug)]
pub struct Unknowns {
    pub delta: Vec<Vec2>,
    pub curv: Vec<Vec2>,
}

/// Everything a scheme needs about the time-level-m state.
pub struct StepState<'a> {
    pub curve: &'a DiscreteCurve,
    pub spec: &'a FlowSpec,
    pub frames: Frames,
    pub dt: f64,
    /// Nodal radius r_j.
    pub r: Vec<f64>,
    /// Diagonal weight of the axis substitution: 1 off the axis, 2 at axis
    /// endpoints (the substitute contributes the negated curvature there).
    pub lambda: Vec<f64>,
    /// Azimuthal quotient (omega . e1)/r off the axis, 0 at axis nodes.
    pub quotient: Vec<f64>,
    pub layout: DofLayout,
    /// In-plane curvature at level m for the explicit and lagged variants.
    pub kappa_prev: Option<Vec<f64>>,
    /// Lagged volume-conserving average (scheme A^{f,V}).
    pub conserved_shift: f64,
    pub newton: NewtonConfig,
}

impl StepState<'_> {
    /// Values of |X_rho| per element.
    pub fn w_xrho(&self) -> Vec<f64> {
        let j = self.curve.n_elements() as f64;
        self.frames.lengths.iter().map(|l| l * j).collect()
    }

    /// Mean radius per element (the exact integral of r over the element
    /// divided by h).
    pub fn r_bar(&self, e: usize) -> f64 {
        let (a, b) = self.curve.element_nodes(e);
        0.5 * (self.r[a] + self.r[b])
    }

    /// Whether this spec needs the speed law applied to its curvature
    /// unknown (A^f and C*^f families).
    pub fn applies_speed_implicitly(&self) -> bool {
        !matches!(
            self.spec.speed,
            crate::schemes::SpeedLaw::Identity | crate::schemes::SpeedLaw::GaussCurvature
        )
    }

    /// Scalar speed-law argument per node for the A family:
    /// lambda_j kappa_j - quotient_j.
    pub fn a_family_arg(&self, kappa: &[f64], j: usize) -> f64 {
        self.lambda[j] * kappa[j] - self.quotient[j]
    }
}

pub(crate) fn curv_absent_at_axis(spec: &FlowSpec) -> bool {
    matches!(
        spec.scheme,
        SchemeTag::C | SchemeTag::CStar | SchemeTag::D | SchemeTag::DStar
    ) && spec.variant == IntegrationVariant::MassLumped
}

/// Precompute the step state, checking element geometry along the way.
pub fn build_state<'a>(
    curve: &'a DiscreteCurve,
    spec: &'a FlowSpec,
    dt: f64,
    kappa_prev: Option<Vec<f64>>,
    newton: NewtonConfig,
) -> Result<StepState<'a>> {
    spec.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidConfig(format!("time step {dt} must be > 0")));
    }
    let frames = Frames::new(curve)?;
    let nn = curve.n_nodes();
    let mut r = Vec::with_capacity(nn);
    let mut lambda = Vec::with_capacity(nn);
    let mut quotient = Vec::with_capacity(nn);
    for j in 0..nn {
        let rj = curve.node(j).x;
        r.push(rj);
        if curve.is_axis_node(j) {
            lambda.push(2.0);
            quotient.push(0.0);
        } else {
            if rj <= 0.0 {
                return Err(Error::AssumptionViolated(format!(
                    "nonpositive radius at node {j}"
                )));
            }
            lambda.push(1.0);
            quotient.push(frames.vertex_normals[j].x / rj);
        }
    }

    let curv_comps = match spec.fast_path {
        FastPath::None => spec.scheme.curvature_components(),
        _ => 0,
    };
    let layout = DofLayout::build(curve, curv_comps, curv_absent_at_axis(spec));

    let mut state = StepState {
        curve,
        spec,
        frames,
        dt,
        r,
        lambda,
        quotient,
        layout,
        kappa_prev,
        conserved_shift: 0.0,
        newton,
    };

    // The A-family needs level-m curvature for the explicit Gauss speed and
    // for the lagged conserving average; seed it with the mirror-corrected
    // estimate when no previous level is available.
    let needs_prev = spec.scheme == SchemeTag::A
        && (spec.conserved || spec.speed == crate::schemes::SpeedLaw::GaussCurvature);
    if needs_prev && state.kappa_prev.is_none() {
        state.kappa_prev = Some(crate::schemes::curvature_estimate(curve)?);
    }
    if spec.scheme == SchemeTag::A && spec.conserved {
        state.conserved_shift = conserved_average(&state)?;
    }
    Ok(state)
}

/// Lagged nonlocal average of the conserving scheme A^{f,V}: the lumped
/// integral of r f(kappa - substitute) at level m over the exact integral
/// of r.
fn conserved_average(state: &StepState) -> Result<f64> {
    let kappa = state
        .kappa_prev
        .as_ref()
        .expect("conserved average needs level-m curvature");
    let curve = state.curve;
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..curve.n_nodes() {
        let w = state.r[j] * state.frames.node_weights[j];
        if w == 0.0 {
            continue; // axis nodes carry zero radial weight
        }
        let arg = state.a_family_arg(kappa, j);
        if !state.spec.speed.in_domain(arg) {
            return Err(Error::DomainViolation(format!(
                "speed argument {arg:.3e} at node {j} outside the domain"
            )));
        }
        num += w * state.spec.speed.eval(arg);
    }
    for e in 0..curve.n_elements() {
        den += state.frames.lengths[e] * state.r_bar(e);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generate::{nonuniform_semicircle, torus_circle};
    use crate::schemes::FlowSpec;

    #[test]
    fn layout_counts_open_axis_curve() {
        let c = nonuniform_semicircle(1.0, 8).unwrap();
        // Scheme A: 2 displacement dofs per interior node, 1 at each axis
        // endpoint (z only), kappa everywhere.
        let layout = DofLayout::build(&c, 1, false);
        let nn = c.n_nodes();
        assert_eq!(layout.n_free(), 2 * (nn - 2) + 2 + nn);
        assert_eq!(layout.border, 0);
        assert_eq!(layout.delta_dof(0, 0), None);
        assert!(layout.delta_dof(0, 1).is_some());

        // Lumped C: kappa absent at axis endpoints.
        let layout = DofLayout::build(&c, 1, true);
        assert_eq!(layout.n_free(), 2 * (nn - 2) + 2 + nn - 2);
        assert!(!layout.has_curv(0));
        assert!(layout.has_curv(1));
    }

    #[test]
    fn layout_closed_curve_has_border() {
        let c = torus_circle(1.0, 0.5, 8).unwrap();
        let layout = DofLayout::build(&c, 2, false);
        assert_eq!(layout.n_free(), 8 * 4);
        assert_eq!(layout.border, 4);
        assert!(layout.bandwidth >= 7);
    }

    #[test]
    fn scatter_gather_round_trip() {
        let c = torus_circle(1.0, 0.5, 6).unwrap();
        let layout = DofLayout::build(&c, 1, false);
        let u: Vec<f64> = (0..layout.n_free()).map(|i| i as f64 * 0.5 - 3.0).collect();
        let s = layout.scatter(&u);
        let back = layout.gather(&s.delta, &s.curv);
        assert_eq!(u, back);
    }

    #[test]
    fn axis_substitution_weights() {
        let c = nonuniform_semicircle(1.0, 8).unwrap();
        let spec = FlowSpec::mcf(crate::schemes::SchemeTag::A);
        let state = build_state(&c, &spec, 1e-3, None, NewtonConfig::default()).unwrap();
        assert_eq!(state.lambda[0], 2.0);
        assert_eq!(state.lambda[1], 1.0);
        assert_eq!(state.quotient[0], 0.0);
        // Unit-circle node near the equator: quotient close to 1.
        let mid = c.n_nodes() / 2;
        assert!((state.quotient[mid] - 1.0).abs() < 0.1);
    }
}
