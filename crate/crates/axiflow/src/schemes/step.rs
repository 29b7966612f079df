//! One time step: assumption checks, the linear or Newton solve, the
//! independent residual verification of linear solves, energy-stability
//! assertions for the unconditionally stable schemes, and assembly of the
//! step result.

use crate::error::Error;
use crate::geometry;
use crate::mesh::ip::{ip_exact_product, PwScalar};
use crate::mesh::{check_assumptions, DiscreteCurve, DEGENERATE_ELEMENT_REL_TOL};
use crate::schemes::state::{build_state, StepState, Unknowns};
use crate::schemes::{
    assemble, residual, FastPath, FlowSpec, SchemeCurvature, SchemeTag, SpeedLaw, StepDiagnostics,
    StepResult,
};
use crate::solver::{
    max_abs, newton_solve, solve_linear, timestep_guard, GuardOutcome, NewtonConfig,
    NonlinearSystem,
};
use crate::vec2::Vec2;
use crate::Result;

/// Relative tolerance of the independent residual verification applied to
/// every linear scheme solve.
pub const STEP_VERIFY_REL_TOL: f64 = 1e-9;

/// Slack factor of the discrete energy-stability assertions.
pub const STABILITY_SLACK: f64 = 1e-12;

/// Optional step inputs: the level-m curvature for lagged/explicit scheme-A
/// variants and the Newton configuration.
#[derive(Clone, Debug, Default)]
pub struct StepContext {
    pub kappa_prev: Option<Vec<f64>>,
    pub newton: Option<NewtonConfig>,
}

struct SchemeProblem<'a, 'b> {
    state: &'a StepState<'b>,
}

impl NonlinearSystem for SchemeProblem<'_, '_> {
    fn dim(&self) -> usize {
        self.state.layout.n_free()
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        residual::evaluate(self.state, u)
    }

    fn jacobian(&self, u: &[f64]) -> Result<crate::solver::StepSystem> {
        assemble::jacobian(self.state, u)
    }

    fn admissible(&self, u: &[f64]) -> bool {
        let state = self.state;
        if !state.applies_speed_implicitly() {
            return true;
        }
        let unknowns = state.layout.scatter(u);
        match state.spec.scheme {
            SchemeTag::A => (0..state.curve.n_nodes()).all(|j| {
                let kappa: Vec<f64> = unknowns.curv.iter().map(|k| k.x).collect();
                state.spec.speed.in_domain(state.a_family_arg(&kappa, j))
            }),
            SchemeTag::CStar => (0..state.curve.n_nodes())
                .filter(|&j| state.layout.has_curv(j))
                .all(|j| state.spec.speed.in_domain(unknowns.curv[j].x)),
            _ => true,
        }
    }
}

/// Initial Newton iterate: zero displacement and a curvature guess that
/// keeps restricted speed laws inside their domain.
pub fn newton_start(state: &StepState) -> Result<Vec<f64>> {
    let nn = state.curve.n_nodes();
    let delta = vec![Vec2::ZERO; nn];
    let mut curv = vec![Vec2::ZERO; nn];
    match state.spec.scheme {
        SchemeTag::A => {
            let kappa = match &state.kappa_prev {
                Some(k) => k.clone(),
                None => crate::schemes::curvature_estimate(state.curve)?,
            };
            for j in 0..nn {
                curv[j].x = kappa[j];
            }
        }
        SchemeTag::CStar if state.applies_speed_implicitly() => {
            let diag = geometry::curvature_diagnostics(state.curve)?;
            for j in 0..nn {
                curv[j].x = diag.mean[j];
            }
        }
        _ => {}
    }
    Ok(state.layout.gather(&delta, &curv))
}

/// Advance one step of the scheme described by `spec`.
pub fn step_with(
    spec: &FlowSpec,
    curve: &DiscreteCurve,
    dt: f64,
    ctx: &StepContext,
) -> Result<StepResult> {
    let newton = ctx.newton.unwrap_or_default();
    let state = build_state(curve, spec, dt, ctx.kappa_prev.clone(), newton)?;

    let report = check_assumptions(curve, spec);
    if !report.scheme_ok(spec.scheme) {
        return Err(Error::AssumptionViolated(
            report.describe_failure(spec.scheme),
        ));
    }
    let guard = matches!(spec.scheme, SchemeTag::DStar).then(|| timestep_guard(curve, dt));

    let (u, iterations) = if spec.is_nonlinear() {
        let problem = SchemeProblem { state: &state };
        let start = newton_start(&state)?;
        newton_solve(&problem, start, &newton)?
    } else {
        let zero = vec![0.0; state.layout.n_free()];
        let f0 = residual::evaluate(&state, &zero)?;
        let mut sys = assemble::jacobian(&state, &zero)?;
        for (slot, v) in sys.rhs.iter_mut().zip(&f0) {
            *slot = -v;
        }
        let x = solve_linear(&sys)?;
        // Independent verification: the weak-form residual at the solution,
        // with no reuse of the assembled matrix or its factorization. The
        // bound is backward-error scaled.
        let fx = residual::evaluate(&state, &x)?;
        let res = max_abs(&fx);
        let bound =
            STEP_VERIFY_REL_TOL * (1.0 + max_abs(&f0) + sys.inf_norm() * max_abs(&x));
        if !(res <= bound) {
            return Err(Error::VerificationFailed {
                residual: res,
                bound,
            });
        }
        (x, 0)
    };

    finalize(&state, &u, iterations, guard)
}

fn finalize(
    state: &StepState,
    u: &[f64],
    iterations: usize,
    guard: Option<GuardOutcome>,
) -> Result<StepResult> {
    let curve = state.curve;
    let unknowns = state.layout.scatter(u);

    // New positions; constrained components are copied bit-for-bit.
    let mut nodes = curve.nodes().to_vec();
    for j in 0..curve.n_nodes() {
        if state.layout.delta_dof(j, 0).is_some() {
            nodes[j].x += unknowns.delta[j].x;
        }
        if state.layout.delta_dof(j, 1).is_some() {
            nodes[j].y += unknowns.delta[j].y;
        }
    }
    for (j, p) in nodes.iter().enumerate() {
        if !curve.is_axis_node(j) && p.x <= 0.0 {
            return Err(Error::NegativeRadius {
                node: j,
                value: p.x,
            });
        }
    }
    let new_curve = curve.with_nodes(nodes)?;
    {
        let tol = DEGENERATE_ELEMENT_REL_TOL * new_curve.diameter();
        let lengths = new_curve.element_lengths();
        if let Some(e) = lengths.iter().position(|&l| l <= tol) {
            return Err(Error::ZeroLengthElement {
                index: e,
                length: lengths[e],
            });
        }
    }

    let curvature = extract_curvature(state, &unknowns);
    assert_stability(state, &unknowns, &new_curve)?;
    let diagnostics = diagnostics_snapshot(&new_curve, state.spec)?;

    Ok(StepResult {
        curve: new_curve,
        curvature,
        newton_iterations: iterations,
        diagnostics,
        guard,
    })
}

/// Diagnostics of an arbitrary curve state, as recorded after every step.
pub fn diagnostics_snapshot(curve: &DiscreteCurve, spec: &FlowSpec) -> Result<StepDiagnostics> {
    let energy = geometry::discrete_energy(curve);
    let volume = geometry::generates_closed_surface(curve)
        .then(|| geometry::enclosed_volume(curve))
        .transpose()?;
    let lengths = curve.element_lengths();
    let min_element_length = lengths.iter().cloned().fold(f64::MAX, f64::min);
    Ok(StepDiagnostics {
        energy,
        volume,
        element_ratio: curve.element_ratio()?,
        min_radius: curve.min_radius_off_axis(),
        min_element_length,
        max_contact_residual: geometry::max_contact_residual(curve)?,
        assumptions: check_assumptions(curve, spec),
    })
}

fn extract_curvature(state: &StepState, unknowns: &Unknowns) -> SchemeCurvature {
    let nn = state.curve.n_nodes();
    match (state.spec.scheme, state.spec.fast_path) {
        (SchemeTag::A, _) => {
            SchemeCurvature::InPlane(unknowns.curv.iter().map(|k| k.x).collect())
        }
        (SchemeTag::B, _) => SchemeCurvature::InPlaneVector(unknowns.curv.clone()),
        (SchemeTag::C | SchemeTag::CStar, FastPath::None) => {
            SchemeCurvature::Mean(unknowns.curv.iter().map(|k| k.x).collect())
        }
        (SchemeTag::CStar, _) => {
            // Reconstructed from the eliminated relation kappa_S = v . omega.
            let vals = (0..nn)
                .map(|j| {
                    if state.curve.is_axis_node(j) {
                        0.0
                    } else {
                        unknowns.delta[j].dot(state.frames.vertex_normals[j]) / state.dt
                    }
                })
                .collect();
            SchemeCurvature::Mean(vals)
        }
        (SchemeTag::D | SchemeTag::DStar, FastPath::None) => {
            SchemeCurvature::MeanVector(unknowns.curv.clone())
        }
        (SchemeTag::DStar, _) => {
            let vals = (0..nn)
                .map(|j| {
                    if state.curve.is_axis_node(j)
                        && state.spec.variant == crate::schemes::IntegrationVariant::MassLumped
                    {
                        Vec2::ZERO
                    } else {
                        unknowns.delta[j] / state.dt
                    }
                })
                .collect();
            SchemeCurvature::MeanVector(vals)
        }
        _ => unreachable!("validated fast paths"),
    }
}

enum StabilityKind {
    None,
    /// E(new) + 2 pi dt (r |kappa|^2, |X_rho|)^(h) <= E(old).
    FullDissipation,
    /// E(new) <= E(old) (conserving C* with the identity speed).
    EnergyMonotone,
    /// E(new) + 2 pi dt (r f(kappa), kappa)^h <= E(old) for monotone f
    /// with f(0) = 0 (power laws, lumped variant).
    MonotoneSpeed,
}

fn stability_kind(spec: &FlowSpec) -> StabilityKind {
    if !matches!(spec.scheme, SchemeTag::CStar | SchemeTag::DStar) {
        return StabilityKind::None;
    }
    match (spec.speed, spec.conserved) {
        (SpeedLaw::Identity, false) => StabilityKind::FullDissipation,
        (SpeedLaw::Identity, true) => StabilityKind::EnergyMonotone,
        (SpeedLaw::Power { .. }, false)
            if spec.scheme == SchemeTag::CStar
                && spec.variant == crate::schemes::IntegrationVariant::MassLumped =>
        {
            StabilityKind::MonotoneSpeed
        }
        _ => StabilityKind::None,
    }
}

/// Energy dissipation functional of the starred schemes at level m weights.
fn dissipation(state: &StepState, unknowns: &Unknowns) -> f64 {
    let curve = state.curve;
    let w = state.w_xrho();
    let vector = matches!(state.spec.scheme, SchemeTag::D | SchemeTag::DStar);

    if state.spec.fast_path == FastPath::EliminatedNu {
        // (r (v . nu)^2, |X_rho|)^h with v the discrete velocity.
        let mut sum = 0.0;
        let half_h = 0.5 * curve.h_ref();
        for e in 0..curve.n_elements() {
            let (a, b) = curve.element_nodes(e);
            let nu = state.frames.normals[e];
            let va = unknowns.delta[a].dot(nu) / state.dt;
            let vb = unknowns.delta[b].dot(nu) / state.dt;
            sum += half_h * w[e] * (state.r[a] * va * va + state.r[b] * vb * vb);
        }
        return sum;
    }

    // Curvature fields, reconstructed for the eliminated paths.
    let kappa: Vec<Vec2> = match state.spec.fast_path {
        FastPath::None => unknowns.curv.clone(),
        _ => (0..curve.n_nodes())
            .map(|j| {
                if vector {
                    unknowns.delta[j] / state.dt
                } else {
                    let k = unknowns.delta[j].dot(state.frames.vertex_normals[j]) / state.dt;
                    Vec2::new(k, 0.0)
                }
            })
            .collect(),
    };

    match state.spec.variant {
        crate::schemes::IntegrationVariant::MassLumped => {
            let mut sum = 0.0;
            for j in 0..curve.n_nodes() {
                let k2 = if vector {
                    kappa[j].norm_sq()
                } else {
                    kappa[j].x * kappa[j].x
                };
                sum += state.r[j] * state.frames.node_weights[j] * k2;
            }
            sum
        }
        crate::schemes::IntegrationVariant::Exact => {
            let r_pw = PwScalar::from_nodal(curve, &state.r);
            if vector {
                let kx: Vec<f64> = kappa.iter().map(|k| k.x).collect();
                let ky: Vec<f64> = kappa.iter().map(|k| k.y).collect();
                let kx = PwScalar::from_nodal(curve, &kx);
                let ky = PwScalar::from_nodal(curve, &ky);
                ip_exact_product(curve, &[&r_pw, &kx, &kx], &w)
                    + ip_exact_product(curve, &[&r_pw, &ky, &ky], &w)
            } else {
                let k: Vec<f64> = kappa.iter().map(|k| k.x).collect();
                let k = PwScalar::from_nodal(curve, &k);
                ip_exact_product(curve, &[&r_pw, &k, &k], &w)
            }
        }
    }
}

/// Lumped (r f(kappa), kappa)^h for the monotone-speed bound.
fn speed_dissipation(state: &StepState, unknowns: &Unknowns) -> f64 {
    let mut sum = 0.0;
    for j in 0..state.curve.n_nodes() {
        if !state.layout.has_curv(j) {
            continue;
        }
        let k = unknowns.curv[j].x;
        sum += state.r[j] * state.frames.node_weights[j] * state.spec.speed.eval(k) * k;
    }
    sum
}

fn assert_stability(
    state: &StepState,
    unknowns: &Unknowns,
    new_curve: &DiscreteCurve,
) -> Result<()> {
    let kind = stability_kind(state.spec);
    if matches!(kind, StabilityKind::None) {
        return Ok(());
    }
    let e_old = geometry::discrete_energy(state.curve).total;
    let e_new = geometry::discrete_energy(new_curve).total;
    let slack = STABILITY_SLACK * (1.0 + e_old.abs());
    let lhs = match kind {
        StabilityKind::FullDissipation => {
            e_new + 2.0 * std::f64::consts::PI * state.dt * dissipation(state, unknowns)
        }
        StabilityKind::EnergyMonotone => e_new,
        StabilityKind::MonotoneSpeed => {
            e_new + 2.0 * std::f64::consts::PI * state.dt * speed_dissipation(state, unknowns)
        }
        StabilityKind::None => unreachable!(),
    };
    if lhs > e_old + slack {
        return Err(Error::StabilityViolation {
            increase: lhs - e_old,
        });
    }
    Ok(())
}

/// Discrete energy bound bookkeeping exposed for tests: returns
/// (energy before, energy after + dissipation term) for a starred step.
pub fn stability_sides(
    spec: &FlowSpec,
    curve: &DiscreteCurve,
    dt: f64,
    result: &StepResult,
) -> (f64, f64) {
    let e_old = geometry::discrete_energy(curve).total;
    let e_new = result.diagnostics.energy.total;
    let state = build_state(curve, spec, dt, None, NewtonConfig::default()).expect("valid state");
    let delta: Vec<Vec2> = curve
        .nodes()
        .iter()
        .zip(result.curve.nodes())
        .map(|(a, b)| *b - *a)
        .collect();
    let curv = match &result.curvature {
        SchemeCurvature::Mean(k) | SchemeCurvature::InPlane(k) => {
            k.iter().map(|&v| Vec2::new(v, 0.0)).collect()
        }
        SchemeCurvature::MeanVector(k) | SchemeCurvature::InPlaneVector(k) => k.clone(),
    };
    let unknowns = Unknowns { delta, curv };
    (
        e_old,
        e_new + 2.0 * std::f64::consts::PI * dt * dissipation(&state, &unknowns),
    )
}
