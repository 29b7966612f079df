//! Jacobian assembly for all schemes. Entries are the closed-form
//! derivatives of the weak-form residuals in `residual`; for the linear
//! schemes the Jacobian is the step matrix itself. The assembled operator
//! is banded in the node ordering, with the last node of a closed curve
//! kept as a dense border, and the volume-conserving average contributes a
//! rank-one term.

use crate::mesh::ip::GAUSS3;
use crate::mesh::BoundaryKind;
use crate::schemes::state::{StepState, Unknowns};
use crate::schemes::{FastPath, IntegrationVariant, SchemeTag, SpeedLaw};
use crate::solver::StepSystem;
use crate::vec2::Vec2;
use crate::Result;

pub fn jacobian(state: &StepState, u: &[f64]) -> Result<StepSystem> {
    let unknowns = state.layout.scatter(u);
    let n = state.layout.n_free();
    let mut sys = StepSystem::new(n, state.layout.border, state.layout.bandwidth, state.layout.bandwidth);
    match (state.spec.scheme, state.spec.fast_path) {
        (_, FastPath::Eliminated | FastPath::EliminatedNu) => {
            eliminated_jacobian(state, &unknowns, &mut sys)
        }
        (SchemeTag::A, _) => a_jacobian(state, &unknowns, &mut sys),
        (SchemeTag::B, _) => b_jacobian(state, &mut sys),
        (SchemeTag::C | SchemeTag::CStar, _) => c_jacobian(state, &unknowns, &mut sys),
        (SchemeTag::D | SchemeTag::DStar, _) => d_jacobian(state, &unknowns, &mut sys),
    }
    Ok(sys)
}

/// Derivative of the speed value fed into the curvature equation.
fn speed_derivative(state: &StepState, arg: f64) -> f64 {
    match state.spec.speed {
        SpeedLaw::Identity => 1.0,
        SpeedLaw::Power { .. } | SpeedLaw::Inverse => state.spec.speed.derivative(arg),
        SpeedLaw::GaussCurvature => 0.0,
    }
}

fn comp(v: Vec2, k: usize) -> f64 {
    if k == 0 {
        v.x
    } else {
        v.y
    }
}

/// Unweighted or radially weighted stiffness entries of
/// (w X_rho, eta_rho |X_rho|^{-1}).
fn add_stiffness(state: &StepState, sys: &mut StepSystem, radial_weight: bool) {
    let curve = state.curve;
    for e in 0..curve.n_elements() {
        let (a, b) = curve.element_nodes(e);
        let c = if radial_weight {
            state.r_bar(e) / state.frames.lengths[e]
        } else {
            1.0 / state.frames.lengths[e]
        };
        for k in 0..2 {
            let ra = state.layout.delta_dof(a, k);
            let rb = state.layout.delta_dof(b, k);
            if let Some(i) = ra {
                sys.add(i, i, c);
                if let Some(jb) = rb {
                    sys.add(i, jb, -c);
                }
            }
            if let Some(i) = rb {
                sys.add(i, i, c);
                if let Some(ja) = ra {
                    sys.add(i, ja, -c);
                }
            }
        }
    }
}

/// Derivative of the implicit length term (eta . e1, |X^{m+1}_rho|): each
/// adjacent element contributes half its new unit direction.
fn add_length_term_derivative(state: &StepState, unknowns: &Unknowns, sys: &mut StepSystem) {
    let curve = state.curve;
    for e in 0..curve.n_elements() {
        let (a, b) = curve.element_nodes(e);
        let d = (curve.node(b) + unknowns.delta[b]) - (curve.node(a) + unknowns.delta[a]);
        let len = d.norm();
        let tau = if len > 0.0 { d / len } else { Vec2::ZERO };
        for &(row_node, _other) in &[(a, b), (b, a)] {
            if let Some(row) = state.layout.delta_dof(row_node, 0) {
                for k in 0..2 {
                    if let Some(cb) = state.layout.delta_dof(b, k) {
                        sys.add(row, cb, 0.5 * comp(tau, k));
                    }
                    if let Some(ca) = state.layout.delta_dof(a, k) {
                        sys.add(row, ca, -0.5 * comp(tau, k));
                    }
                }
            }
        }
    }
}

/// Positive part of the plane-contact density acts on the new position.
fn add_split_contact_derivative(state: &StepState, sys: &mut StepSystem) {
    let curve = state.curve;
    for p in 0..2 {
        if let Some(BoundaryKind::PlaneSlide { rho }) = curve.endpoint_kind(p) {
            let node = curve.endpoint_node(p);
            if let Some(i) = state.layout.delta_dof(node, 0) {
                sys.add(i, i, rho.max(0.0));
            }
        }
    }
}

fn a_jacobian(state: &StepState, unknowns: &Unknowns, sys: &mut StepSystem) {
    let curve = state.curve;
    for j in 0..curve.n_nodes() {
        let w_j = state.frames.node_weights[j];
        let omega = state.frames.vertex_normals[j];
        if let Some(row) = state.layout.curv_dof(j, 0) {
            for k in 0..2 {
                if let Some(col) = state.layout.delta_dof(j, k) {
                    sys.add(row, col, comp(omega, k) * w_j / state.dt);
                }
            }
            if state.spec.speed != SpeedLaw::GaussCurvature {
                let kappa: f64 = unknowns.curv[j].x;
                let arg = state.lambda[j] * kappa - state.quotient[j];
                let ds = state.lambda[j] * speed_derivative(state, arg);
                sys.add(row, row, -ds * w_j);
            }
        }
        for k in 0..2 {
            if let Some(row) = state.layout.delta_dof(j, k) {
                if let Some(col) = state.layout.curv_dof(j, 0) {
                    sys.add(row, col, comp(omega, k) * w_j);
                }
            }
        }
    }
    add_stiffness(state, sys, false);
}

fn b_jacobian(state: &StepState, sys: &mut StepSystem) {
    let curve = state.curve;
    for j in 0..curve.n_nodes() {
        let w_j = state.frames.node_weights[j];
        for k in 0..2 {
            if let Some(row) = state.layout.curv_dof(j, k) {
                if let Some(col) = state.layout.delta_dof(j, k) {
                    sys.add(row, col, w_j / state.dt);
                }
                sys.add(row, row, -state.lambda[j] * w_j);
            }
            if let Some(row) = state.layout.delta_dof(j, k) {
                if let Some(col) = state.layout.curv_dof(j, k) {
                    sys.add(row, col, w_j);
                }
            }
        }
    }
    add_stiffness(state, sys, false);
}

/// Radially weighted element mass entries M^e_{pq} = (r hat_p, hat_q |X_rho|)
/// restricted to one element, via the shared Gauss rule.
fn element_mass(state: &StepState, e: usize) -> [[f64; 2]; 2] {
    let (a, b) = state.curve.element_nodes(e);
    let (ra, rb) = (state.r[a], state.r[b]);
    let len = state.frames.lengths[e];
    let mut m = [[0.0; 2]; 2];
    for &(t, wt) in &GAUSS3 {
        let r = ra + t * (rb - ra);
        let hats = [1.0 - t, t];
        for p in 0..2 {
            for q in 0..2 {
                m[p][q] += wt * r * hats[p] * hats[q];
            }
        }
    }
    for row in &mut m {
        for v in row.iter_mut() {
            *v *= len;
        }
    }
    m
}

fn c_jacobian(state: &StepState, unknowns: &Unknowns, sys: &mut StepSystem) {
    let curve = state.curve;
    let starred = state.spec.scheme == SchemeTag::CStar;
    let implicit_speed = state.applies_speed_implicitly();
    let ds = |j: usize| -> f64 {
        if implicit_speed {
            speed_derivative(state, unknowns.curv[j].x)
        } else {
            1.0
        }
    };

    match state.spec.variant {
        IntegrationVariant::MassLumped => {
            for j in 0..curve.n_nodes() {
                let rw = state.r[j] * state.frames.node_weights[j];
                let omega = state.frames.vertex_normals[j];
                if let Some(row) = state.layout.curv_dof(j, 0) {
                    for k in 0..2 {
                        if let Some(col) = state.layout.delta_dof(j, k) {
                            sys.add(row, col, rw * comp(omega, k) / state.dt);
                        }
                    }
                    sys.add(row, row, -rw * ds(j));
                }
                for k in 0..2 {
                    if let Some(row) = state.layout.delta_dof(j, k) {
                        if let Some(col) = state.layout.curv_dof(j, 0) {
                            sys.add(row, col, rw * comp(omega, k));
                        }
                    }
                }
            }
        }
        IntegrationVariant::Exact => {
            for e in 0..curve.n_elements() {
                let (a, b) = curve.element_nodes(e);
                let nodes = [a, b];
                let m = element_mass(state, e);
                let nu = state.frames.normals[e];
                for p in 0..2 {
                    for q in 0..2 {
                        let (jp, jq) = (nodes[p], nodes[q]);
                        if let Some(row) = state.layout.curv_dof(jp, 0) {
                            for k in 0..2 {
                                if let Some(col) = state.layout.delta_dof(jq, k) {
                                    sys.add(row, col, m[p][q] * comp(nu, k) / state.dt);
                                }
                            }
                            if let Some(col) = state.layout.curv_dof(jq, 0) {
                                sys.add(row, col, -m[p][q] * ds(jq));
                            }
                        }
                        for k in 0..2 {
                            if let Some(row) = state.layout.delta_dof(jp, k) {
                                if let Some(col) = state.layout.curv_dof(jq, 0) {
                                    sys.add(row, col, m[p][q] * comp(nu, k));
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    if state.spec.conserved {
        // Rank-one coupling of the nonlocal average: rows are curvature
        // equations, columns are curvature unknowns.
        let w = state.w_xrho();
        let u_r = match state.spec.variant {
            IntegrationVariant::MassLumped => crate::mesh::ip::lumped_moments(
                curve,
                &crate::mesh::ip::PwScalar::from_nodal(curve, &state.r),
                &w,
            ),
            IntegrationVariant::Exact => crate::mesh::ip::exact_moments(
                curve,
                &[&crate::mesh::ip::PwScalar::from_nodal(curve, &state.r)],
                &w,
            ),
        };
        let den: f64 = (0..curve.n_elements())
            .map(|e| state.frames.lengths[e] * state.r_bar(e))
            .sum();
        let mut u1 = vec![0.0; state.layout.n_free()];
        let mut v1 = vec![0.0; state.layout.n_free()];
        for j in 0..curve.n_nodes() {
            if let Some(i) = state.layout.curv_dof(j, 0) {
                u1[i] = u_r[j];
                v1[i] = u_r[j] * ds(j) / den;
            }
        }
        sys.set_rank_one(u1, v1);
    }

    add_stiffness(state, sys, true);
    if starred {
        add_length_term_derivative(state, unknowns, sys);
        add_split_contact_derivative(state, sys);
    }
}

fn d_jacobian(state: &StepState, unknowns: &Unknowns, sys: &mut StepSystem) {
    let curve = state.curve;
    let starred = state.spec.scheme == SchemeTag::DStar;
    match state.spec.variant {
        IntegrationVariant::MassLumped => {
            for j in 0..curve.n_nodes() {
                let rw = state.r[j] * state.frames.node_weights[j];
                for k in 0..2 {
                    if let Some(row) = state.layout.curv_dof(j, k) {
                        if let Some(col) = state.layout.delta_dof(j, k) {
                            sys.add(row, col, rw / state.dt);
                        }
                        sys.add(row, row, -rw);
                    }
                    if let Some(row) = state.layout.delta_dof(j, k) {
                        if let Some(col) = state.layout.curv_dof(j, k) {
                            sys.add(row, col, rw);
                        }
                    }
                }
            }
        }
        IntegrationVariant::Exact => {
            for e in 0..curve.n_elements() {
                let (a, b) = curve.element_nodes(e);
                let nodes = [a, b];
                let m = element_mass(state, e);
                for p in 0..2 {
                    for q in 0..2 {
                        let (jp, jq) = (nodes[p], nodes[q]);
                        for k in 0..2 {
                            if let Some(row) = state.layout.curv_dof(jp, k) {
                                if let Some(col) = state.layout.delta_dof(jq, k) {
                                    sys.add(row, col, m[p][q] / state.dt);
                                }
                                if let Some(col) = state.layout.curv_dof(jq, k) {
                                    sys.add(row, col, -m[p][q]);
                                }
                            }
                            if let Some(row) = state.layout.delta_dof(jp, k) {
                                if let Some(col) = state.layout.curv_dof(jq, k) {
                                    sys.add(row, col, m[p][q]);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    add_stiffness(state, sys, true);
    if starred {
        add_length_term_derivative(state, unknowns, sys);
        add_split_contact_derivative(state, sys);
    }
}

fn eliminated_jacobian(state: &StepState, unknowns: &Unknowns, sys: &mut StepSystem) {
    let curve = state.curve;
    match (state.spec.scheme, state.spec.fast_path) {
        (SchemeTag::CStar, FastPath::Eliminated) => {
            for j in 0..curve.n_nodes() {
                let rw = state.r[j] * state.frames.node_weights[j] / state.dt;
                let omega = state.frames.vertex_normals[j];
                for k in 0..2 {
                    if let Some(row) = state.layout.delta_dof(j, k) {
                        for k2 in 0..2 {
                            if let Some(col) = state.layout.delta_dof(j, k2) {
                                sys.add(row, col, rw * comp(omega, k) * comp(omega, k2));
                            }
                        }
                    }
                }
            }
        }
        (SchemeTag::CStar, FastPath::EliminatedNu) => {
            for j in 0..curve.n_nodes() {
                let (left, right) = curve.adjacent_elements(j);
                for e in [left, right].into_iter().flatten() {
                    let nu = state.frames.normals[e];
                    let c = 0.5 * state.frames.lengths[e] * state.r[j] / state.dt;
                    for k in 0..2 {
                        if let Some(row) = state.layout.delta_dof(j, k) {
                            for k2 in 0..2 {
                                if let Some(col) = state.layout.delta_dof(j, k2) {
                                    sys.add(row, col, c * comp(nu, k) * comp(nu, k2));
                                }
                            }
                        }
                    }
                }
            }
        }
        (SchemeTag::DStar, _) => match state.spec.variant {
            IntegrationVariant::MassLumped => {
                for j in 0..curve.n_nodes() {
                    let rw = state.r[j] * state.frames.node_weights[j] / state.dt;
                    for k in 0..2 {
                        if let Some(row) = state.layout.delta_dof(j, k) {
                            sys.add(row, row, rw);
                        }
                    }
                }
            }
            IntegrationVariant::Exact => {
                for e in 0..curve.n_elements() {
                    let (a, b) = curve.element_nodes(e);
                    let nodes = [a, b];
                    let m = element_mass(state, e);
                    for p in 0..2 {
                        for q in 0..2 {
                            for k in 0..2 {
                                if let (Some(row), Some(col)) = (
                                    state.layout.delta_dof(nodes[p], k),
                                    state.layout.delta_dof(nodes[q], k),
                                ) {
                                    sys.add(row, col, m[p][q] / state.dt);
                                }
                            }
                        }
                    }
                }
            }
        },
        _ => unreachable!("validated fast-path combinations"),
    }
    add_stiffness(state, sys, true);
    add_length_term_derivative(state, unknowns, sys);
    add_split_contact_derivative(state, sys);
}
