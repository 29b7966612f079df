//! Residual evaluation for every scheme, written directly against the
//! lumped/exact inner products on piecewise fields. This is the path Newton
//! iterates on, and it doubles as the independent check of each linear
//! solve: the banded assembly in `assemble` uses closed-form nodal weights,
//! while this module integrates the weak forms term by term.

use crate::error::Error;
use crate::mesh::ip::{exact_moments, exact_moments_vec, lumped_moments, lumped_moments_vec, PwScalar, PwVec};
use crate::mesh::BoundaryKind;
use crate::schemes::state::{StepState, Unknowns};
use crate::schemes::{FastPath, IntegrationVariant, SchemeTag, SpeedLaw};
use crate::vec2::Vec2;
use crate::Result;

pub fn evaluate(state: &StepState, u: &[f64]) -> Result<Vec<f64>> {
    let unknowns = state.layout.scatter(u);
    let mut out = vec![0.0; state.layout.n_free()];
    match (state.spec.scheme, state.spec.fast_path) {
        (_, FastPath::Eliminated | FastPath::EliminatedNu) => {
            eliminated_rows(state, &unknowns, &mut out)?
        }
        (SchemeTag::A, _) => {
            a_curvature_rows(state, &unknowns, &mut out)?;
            ab_displacement_rows(state, &unknowns, &mut out, false);
        }
        (SchemeTag::B, _) => {
            b_curvature_rows(state, &unknowns, &mut out)?;
            ab_displacement_rows(state, &unknowns, &mut out, true);
        }
        (SchemeTag::C | SchemeTag::CStar, _) => {
            c_curvature_rows(state, &unknowns, &mut out)?;
            cd_displacement_rows(state, &unknowns, &mut out)?;
        }
        (SchemeTag::D | SchemeTag::DStar, _) => {
            d_curvature_rows(state, &unknowns, &mut out)?;
            cd_displacement_rows(state, &unknowns, &mut out)?;
        }
    }
    Ok(out)
}

fn speed_values(state: &StepState, args: &[f64]) -> Result<Vec<f64>> {
    args.iter()
        .enumerate()
        .map(|(j, &arg)| {
            if !state.spec.speed.in_domain(arg) {
                return Err(Error::DomainViolation(format!(
                    "speed argument {arg:.3e} at node {j}"
                )));
            }
            Ok(state.spec.speed.eval(arg))
        })
        .collect()
}

/// Element-endpoint values of (field . element normal).
fn dot_with_normals(state: &StepState, field: &[Vec2]) -> PwScalar {
    let curve = state.curve;
    let ends = (0..curve.n_elements())
        .map(|e| {
            let (a, b) = curve.element_nodes(e);
            let nu = state.frames.normals[e];
            (field[a].dot(nu), field[b].dot(nu))
        })
        .collect();
    PwScalar { ends }
}

fn element_normal_field(state: &StepState) -> PwVec {
    PwVec {
        ends: state.frames.normals.iter().map(|&n| (n, n)).collect(),
    }
}

fn new_positions(state: &StepState, unknowns: &Unknowns) -> Vec<Vec2> {
    state
        .curve
        .nodes()
        .iter()
        .zip(&unknowns.delta)
        .map(|(x, d)| *x + *d)
        .collect()
}

fn new_lengths(state: &StepState, x_new: &[Vec2]) -> Vec<f64> {
    (0..state.curve.n_elements())
        .map(|e| {
            let (a, b) = state.curve.element_nodes(e);
            (x_new[b] - x_new[a]).norm()
        })
        .collect()
}

fn add_delta_row(state: &StepState, out: &mut [f64], j: usize, v: Vec2) {
    if let Some(i) = state.layout.delta_dof(j, 0) {
        out[i] += v.x;
    }
    if let Some(i) = state.layout.delta_dof(j, 1) {
        out[i] += v.y;
    }
}

/// Scheme-A curvature equation: velocity against chi nu minus the (speed of
/// the) curvature/substitute combination, both mass lumped.
fn a_curvature_rows(state: &StepState, unknowns: &Unknowns, out: &mut [f64]) -> Result<()> {
    let curve = state.curve;
    let w = state.w_xrho();
    let m1 = lumped_moments(curve, &dot_with_normals(state, &unknowns.delta), &w);

    let kappa: Vec<f64> = unknowns.curv.iter().map(|k| k.x).collect();
    let rhs_vals = match state.spec.speed {
        SpeedLaw::Identity => (0..curve.n_nodes())
            .map(|j| state.a_family_arg(&kappa, j) - state.conserved_shift)
            .collect::<Vec<f64>>(),
        SpeedLaw::Power { .. } | SpeedLaw::Inverse => {
            let args: Vec<f64> = (0..curve.n_nodes())
                .map(|j| state.a_family_arg(&kappa, j))
                .collect();
            let mut vals = speed_values(state, &args)?;
            for v in &mut vals {
                *v -= state.conserved_shift;
            }
            vals
        }
        SpeedLaw::GaussCurvature => {
            // Explicit speed -k_g evaluated from the level-m curvature.
            let km = state
                .kappa_prev
                .as_ref()
                .expect("Gauss flow needs level-m curvature");
            (0..curve.n_nodes())
                .map(|j| {
                    let subst = if curve.is_axis_node(j) {
                        -km[j]
                    } else {
                        state.quotient[j]
                    };
                    let gauss = -km[j] * subst;
                    -gauss
                })
                .collect()
        }
    };
    let m2 = lumped_moments(curve, &PwScalar::from_nodal(curve, &rhs_vals), &w);

    for j in 0..curve.n_nodes() {
        if let Some(i) = state.layout.curv_dof(j, 0) {
            out[i] += m1[j] / state.dt - m2[j];
        }
    }
    Ok(())
}

/// Scheme-B curvature equation (vector form with the rescaled substitute).
fn b_curvature_rows(state: &StepState, unknowns: &Unknowns, out: &mut [f64]) -> Result<()> {
    let curve = state.curve;
    let w = state.w_xrho();
    let m1 = lumped_moments_vec(curve, &PwVec::from_nodal(curve, &unknowns.delta), &w);

    let mut rhs = vec![Vec2::ZERO; curve.n_nodes()];
    for j in 0..curve.n_nodes() {
        let kv = unknowns.curv[j];
        rhs[j] = if curve.is_axis_node(j) {
            kv * 2.0
        } else {
            let omega = state.frames.vertex_normals[j];
            let wsq = omega.norm_sq();
            if wsq <= f64::EPSILON {
                return Err(Error::AssumptionViolated(format!(
                    "vanishing vertex normal at node {j}"
                )));
            }
            kv - omega * (state.quotient[j] / wsq)
        };
    }
    let m2 = lumped_moments_vec(curve, &PwVec::from_nodal(curve, &rhs), &w);

    for j in 0..curve.n_nodes() {
        for comp in 0..2 {
            if let Some(i) = state.layout.curv_dof(j, comp) {
                let v1 = if comp == 0 { m1[j].x } else { m1[j].y };
                let v2 = if comp == 0 { m2[j].x } else { m2[j].y };
                out[i] += v1 / state.dt - v2;
            }
        }
    }
    Ok(())
}

/// Displacement equation shared by schemes A and B: curvature against the
/// test function, plus the unweighted stiffness of the new positions, plus
/// contact-density boundary loads.
fn ab_displacement_rows(state: &StepState, unknowns: &Unknowns, out: &mut [f64], vector: bool) {
    let curve = state.curve;
    let w = state.w_xrho();

    let mvec = if vector {
        lumped_moments_vec(curve, &PwVec::from_nodal(curve, &unknowns.curv), &w)
    } else {
        let ends = (0..curve.n_elements())
            .map(|e| {
                let (a, b) = curve.element_nodes(e);
                let nu = state.frames.normals[e];
                (nu * unknowns.curv[a].x, nu * unknowns.curv[b].x)
            })
            .collect();
        lumped_moments_vec(curve, &PwVec { ends }, &w)
    };

    let x_new = new_positions(state, unknowns);
    for j in 0..curve.n_nodes() {
        add_delta_row(state, out, j, mvec[j]);
    }
    for e in 0..curve.n_elements() {
        let (a, b) = curve.element_nodes(e);
        let d = (x_new[b] - x_new[a]) / state.frames.lengths[e];
        add_delta_row(state, out, b, d);
        add_delta_row(state, out, a, -d);
    }
    for p in 0..2 {
        if let Some(kind) = curve.endpoint_kind(p) {
            let node = curve.endpoint_node(p);
            match kind {
                BoundaryKind::CylinderSlide { rho } => {
                    add_delta_row(state, out, node, Vec2::new(0.0, rho));
                }
                BoundaryKind::PlaneSlide { rho } => {
                    add_delta_row(state, out, node, Vec2::new(rho, 0.0));
                }
                _ => {}
            }
        }
    }
}

/// Nodal values fed to the speed law in the C* family: f(kappa_S) at nodes
/// carrying a curvature unknown, 0 elsewhere (those values only ever meet
/// zero weights).
fn c_speed_field(state: &StepState, unknowns: &Unknowns) -> Result<Vec<f64>> {
    let curve = state.curve;
    (0..curve.n_nodes())
        .map(|j| {
            if !state.layout.has_curv(j) {
                return Ok(0.0);
            }
            let k = unknowns.curv[j].x;
            if state.applies_speed_implicitly() {
                if !state.spec.speed.in_domain(k) {
                    return Err(Error::DomainViolation(format!(
                        "speed argument {k:.3e} at node {j}"
                    )));
                }
                Ok(state.spec.speed.eval(k))
            } else {
                Ok(k)
            }
        })
        .collect()
}

/// Moments of the radius against every hat, (r, chi_j |X_rho|)^(h); also
/// the coefficients of the conserving average.
fn radius_moments(state: &StepState, w: &[f64]) -> Vec<f64> {
    let r_pw = PwScalar::from_nodal(state.curve, &state.r);
    match state.spec.variant {
        IntegrationVariant::MassLumped => lumped_moments(state.curve, &r_pw, w),
        IntegrationVariant::Exact => exact_moments(state.curve, &[&r_pw], w),
    }
}

fn weighted_length(state: &StepState) -> f64 {
    (0..state.curve.n_elements())
        .map(|e| state.frames.lengths[e] * state.r_bar(e))
        .sum()
}

/// C-family curvature equation. For the conserving variant the nonlocal
/// average couples every curvature unknown.
fn c_curvature_rows(state: &StepState, unknowns: &Unknowns, out: &mut [f64]) -> Result<()> {
    let curve = state.curve;
    let w = state.w_xrho();
    let r_pw = PwScalar::from_nodal(curve, &state.r);
    let s_vals = c_speed_field(state, unknowns)?;
    let s_pw = PwScalar::from_nodal(curve, &s_vals);
    let dxnu = dot_with_normals(state, &unknowns.delta);

    let (m1, m2) = match state.spec.variant {
        IntegrationVariant::MassLumped => {
            let prod = PwScalar {
                ends: (0..curve.n_elements())
                    .map(|e| {
                        let (a, b) = curve.element_nodes(e);
                        let (da, db) = dxnu.ends[e];
                        (state.r[a] * da, state.r[b] * db)
                    })
                    .collect(),
            };
            let rs = PwScalar {
                ends: (0..curve.n_elements())
                    .map(|e| {
                        let (a, b) = curve.element_nodes(e);
                        (state.r[a] * s_vals[a], state.r[b] * s_vals[b])
                    })
                    .collect(),
            };
            (
                lumped_moments(curve, &prod, &w),
                lumped_moments(curve, &rs, &w),
            )
        }
        IntegrationVariant::Exact => (
            exact_moments(curve, &[&r_pw, &dxnu], &w),
            exact_moments(curve, &[&r_pw, &s_pw], &w),
        ),
    };

    let conserved = state.spec.conserved;
    let (u_r, shift) = if conserved {
        let u_r = radius_moments(state, &w);
        let num: f64 = u_r.iter().zip(&s_vals).map(|(u, s)| u * s).sum();
        let den = weighted_length(state);
        (u_r, num / den)
    } else {
        (Vec::new(), 0.0)
    };

    for j in 0..curve.n_nodes() {
        if let Some(i) = state.layout.curv_dof(j, 0) {
            out[i] += m1[j] / state.dt - m2[j];
            if conserved {
                out[i] += shift * u_r[j];
            }
        }
    }
    Ok(())
}

/// D-family curvature equation (componentwise, no normal projection).
fn d_curvature_rows(state: &StepState, unknowns: &Unknowns, out: &mut [f64]) -> Result<()> {
    let curve = state.curve;
    let w = state.w_xrho();
    let (m1, m2) = match state.spec.variant {
        IntegrationVariant::MassLumped => {
            let rd = PwVec {
                ends: (0..curve.n_elements())
                    .map(|e| {
                        let (a, b) = curve.element_nodes(e);
                        (
                            unknowns.delta[a] * state.r[a],
                            unknowns.delta[b] * state.r[b],
                        )
                    })
                    .collect(),
            };
            let rk = PwVec {
                ends: (0..curve.n_elements())
                    .map(|e| {
                        let (a, b) = curve.element_nodes(e);
                        (unknowns.curv[a] * state.r[a], unknowns.curv[b] * state.r[b])
                    })
                    .collect(),
            };
            (
                lumped_moments_vec(curve, &rd, &w),
                lumped_moments_vec(curve, &rk, &w),
            )
        }
        IntegrationVariant::Exact => {
            let r_pw = PwScalar::from_nodal(curve, &state.r);
            (
                exact_moments_vec(
                    curve,
                    &PwVec::from_nodal(curve, &unknowns.delta),
                    &[&r_pw],
                    &w,
                ),
                exact_moments_vec(
                    curve,
                    &PwVec::from_nodal(curve, &unknowns.curv),
                    &[&r_pw],
                    &w,
                ),
            )
        }
    };
    for j in 0..curve.n_nodes() {
        for comp in 0..2 {
            if let Some(i) = state.layout.curv_dof(j, comp) {
                let v1 = if comp == 0 { m1[j].x } else { m1[j].y };
                let v2 = if comp == 0 { m2[j].x } else { m2[j].y };
                out[i] += v1 / state.dt - v2;
            }
        }
    }
    Ok(())
}

/// Displacement equation of the C and D families: radially weighted
/// curvature term, the area variation (length term), the radially weighted
/// stiffness of the new positions, and contact loads. Starred schemes make
/// the length term implicit and split the plane-contact load by the sign
/// of the density.
fn cd_displacement_rows(state: &StepState, unknowns: &Unknowns, out: &mut [f64]) -> Result<()> {
    let curve = state.curve;
    let w = state.w_xrho();
    let starred = matches!(state.spec.scheme, SchemeTag::CStar | SchemeTag::DStar);
    let vector = matches!(state.spec.scheme, SchemeTag::D | SchemeTag::DStar);

    let mvec = if vector {
        match state.spec.variant {
            IntegrationVariant::MassLumped => {
                let rk = PwVec {
                    ends: (0..curve.n_elements())
                        .map(|e| {
                            let (a, b) = curve.element_nodes(e);
                            (unknowns.curv[a] * state.r[a], unknowns.curv[b] * state.r[b])
                        })
                        .collect(),
                };
                lumped_moments_vec(curve, &rk, &w)
            }
            IntegrationVariant::Exact => {
                let r_pw = PwScalar::from_nodal(curve, &state.r);
                exact_moments_vec(
                    curve,
                    &PwVec::from_nodal(curve, &unknowns.curv),
                    &[&r_pw],
                    &w,
                )
            }
        }
    } else {
        match state.spec.variant {
            IntegrationVariant::MassLumped => {
                let ends = (0..curve.n_elements())
                    .map(|e| {
                        let (a, b) = curve.element_nodes(e);
                        let nu = state.frames.normals[e];
                        (
                            nu * (state.r[a] * unknowns.curv[a].x),
                            nu * (state.r[b] * unknowns.curv[b].x),
                        )
                    })
                    .collect();
                lumped_moments_vec(curve, &PwVec { ends }, &w)
            }
            IntegrationVariant::Exact => {
                let r_pw = PwScalar::from_nodal(curve, &state.r);
                let k_vals: Vec<f64> = unknowns.curv.iter().map(|k| k.x).collect();
                let k_pw = PwScalar::from_nodal(curve, &k_vals);
                exact_moments_vec(curve, &element_normal_field(state), &[&r_pw, &k_pw], &w)
            }
        }
    };
    for j in 0..curve.n_nodes() {
        add_delta_row(state, out, j, mvec[j]);
    }

    let x_new = new_positions(state, unknowns);

    // Length term (eta . e1, |X_rho|): level m for the linear schemes,
    // level m+1 for the starred ones. Exact in both variants since the
    // integrand is linear times an element constant.
    let half_lengths: Vec<f64> = if starred {
        new_lengths(state, &x_new)
    } else {
        state.frames.lengths.clone()
    };
    for e in 0..curve.n_elements() {
        let (a, b) = curve.element_nodes(e);
        let half = 0.5 * half_lengths[e];
        add_delta_row(state, out, a, Vec2::new(half, 0.0));
        add_delta_row(state, out, b, Vec2::new(half, 0.0));
    }

    // Radially weighted stiffness with level-m weights.
    for e in 0..curve.n_elements() {
        let (a, b) = curve.element_nodes(e);
        let d = (x_new[b] - x_new[a]) * (state.r_bar(e) / state.frames.lengths[e]);
        add_delta_row(state, out, b, d);
        add_delta_row(state, out, a, -d);
    }

    for p in 0..2 {
        if let Some(kind) = curve.endpoint_kind(p) {
            let node = curve.endpoint_node(p);
            match kind {
                BoundaryKind::CylinderSlide { rho } => {
                    add_delta_row(state, out, node, Vec2::new(0.0, rho * state.r[node]));
                }
                BoundaryKind::PlaneSlide { rho } => {
                    let load = if starred {
                        rho.max(0.0) * x_new[node].x + rho.min(0.0) * state.r[node]
                    } else {
                        rho * state.r[node]
                    };
                    add_delta_row(state, out, node, Vec2::new(load, 0.0));
                }
                _ => {}
            }
        }
    }
    Ok(())
}

/// Reduced forms with the curvature unknown eliminated: displacement rows
/// only. The velocity term projects onto vertex normals (C*), element
/// normals (the nu variant), or stays componentwise (D*).
fn eliminated_rows(state: &StepState, unknowns: &Unknowns, out: &mut [f64]) -> Result<()> {
    let curve = state.curve;
    let w = state.w_xrho();

    let m1 = match (state.spec.scheme, state.spec.fast_path) {
        (SchemeTag::CStar, FastPath::Eliminated) => {
            let g: Vec<Vec2> = (0..curve.n_nodes())
                .map(|j| {
                    let omega = state.frames.vertex_normals[j];
                    omega * (state.r[j] * unknowns.delta[j].dot(omega))
                })
                .collect();
            lumped_moments_vec(curve, &PwVec::from_nodal(curve, &g), &w)
        }
        (SchemeTag::CStar, FastPath::EliminatedNu) => {
            let ends = (0..curve.n_elements())
                .map(|e| {
                    let (a, b) = curve.element_nodes(e);
                    let nu = state.frames.normals[e];
                    (
                        nu * (state.r[a] * unknowns.delta[a].dot(nu)),
                        nu * (state.r[b] * unknowns.delta[b].dot(nu)),
                    )
                })
                .collect();
            lumped_moments_vec(curve, &PwVec { ends }, &w)
        }
        (SchemeTag::DStar, _) => match state.spec.variant {
            IntegrationVariant::MassLumped => {
                let rd = PwVec {
                    ends: (0..curve.n_elements())
                        .map(|e| {
                            let (a, b) = curve.element_nodes(e);
                            (
                                unknowns.delta[a] * state.r[a],
                                unknowns.delta[b] * state.r[b],
                            )
                        })
                        .collect(),
                };
                lumped_moments_vec(curve, &rd, &w)
            }
            IntegrationVariant::Exact => {
                let r_pw = PwScalar::from_nodal(curve, &state.r);
                exact_moments_vec(
                    curve,
                    &PwVec::from_nodal(curve, &unknowns.delta),
                    &[&r_pw],
                    &w,
                )
            }
        },
        _ => unreachable!("validated fast-path combinations"),
    };
    for j in 0..curve.n_nodes() {
        add_delta_row(state, out, j, m1[j] / state.dt);
    }

    let x_new = new_positions(state, unknowns);
    let len_new = new_lengths(state, &x_new);
    for e in 0..curve.n_elements() {
        let (a, b) = curve.element_nodes(e);
        let half = 0.5 * len_new[e];
        add_delta_row(state, out, a, Vec2::new(half, 0.0));
        add_delta_row(state, out, b, Vec2::new(half, 0.0));
        let d = (x_new[b] - x_new[a]) * (state.r_bar(e) / state.frames.lengths[e]);
        add_delta_row(state, out, b, d);
        add_delta_row(state, out, a, -d);
    }
    for p in 0..2 {
        if let Some(kind) = curve.endpoint_kind(p) {
            let node = curve.endpoint_node(p);
            match kind {
                BoundaryKind::CylinderSlide { rho } => {
                    add_delta_row(state, out, node, Vec2::new(0.0, rho * state.r[node]));
                }
                BoundaryKind::PlaneSlide { rho } => {
                    let load = rho.max(0.0) * x_new[node].x + rho.min(0.0) * state.r[node];
                    add_delta_row(state, out, node, Vec2::new(load, 0.0));
                }
                _ => {}
            }
        }
    }
    Ok(())
}
