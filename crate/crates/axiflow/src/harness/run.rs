//! Experiment runner: steps a flow until the final time or a stop
//! condition, collecting diagnostics, snapshots, error metrics and the
//! terminal status.

use serde::Serialize;

use crate::error::Error;
use crate::geometry;
use crate::harness::config::{exact_solution_radius, ExperimentConfig};
use crate::mesh::DiscreteCurve;
use crate::schemes::{
    self, diagnostics_snapshot, SchemeCurvature, SchemeTag, StepContext, StepDiagnostics,
};
use crate::solver::GuardOutcome;
use crate::Result;

/// One row of the diagnostics series (one per completed step plus t = 0).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiagnosticsRow {
    pub time: f64,
    pub energy_total: f64,
    pub energy_area: f64,
    pub volume: Option<f64>,
    pub ratio: f64,
    pub min_r: f64,
    pub min_element_length: f64,
    pub max_contact_residual: f64,
}

impl DiagnosticsRow {
    fn new(time: f64, d: &StepDiagnostics) -> Self {
        DiagnosticsRow {
            time,
            energy_total: d.energy.total,
            energy_area: d.energy.area_term,
            volume: d.volume,
            ratio: d.element_ratio,
            min_r: d.min_radius,
            min_element_length: d.min_element_length,
            max_contact_residual: d.max_contact_residual,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TerminalStatus {
    Completed,
    /// A node left the positive half-plane (the scheme-C failure mode).
    NegativeRadiusStop,
    /// A configured minimum radius or element length was crossed.
    PinchOffStop,
    /// Newton failed to converge or a speed law left its domain.
    NoConvergence,
    /// A solvability assumption failed (or the step system was singular).
    AssumptionViolated,
}

#[derive(Clone, Debug)]
pub struct SimOutcome {
    pub status: TerminalStatus,
    pub detail: String,
    pub stop_time: f64,
    pub steps: usize,
    pub dt: f64,
    /// Largest element length of the initial curve.
    pub h_gamma0: f64,
    pub diagnostics: Vec<DiagnosticsRow>,
    /// (step index, time, curve) triples.
    pub snapshots: Vec<(usize, f64, DiscreteCurve)>,
    pub final_curve: DiscreteCurve,
    /// Max-norm radius error against the exact sphere, when tracked.
    pub max_radius_error: Option<f64>,
    pub max_newton_iterations: usize,
    pub guard_warnings: usize,
    /// First time the oscillation detector fired (scheme B runs).
    pub first_oscillation: Option<f64>,
    /// Largest relative drift of the enclosed volume.
    pub max_volume_drift: Option<f64>,
    /// Triplet dump of the first step's system, when requested.
    pub first_system_dump: Option<String>,
}

pub fn run_simulation(config: &ExperimentConfig) -> Result<SimOutcome> {
    config.validate()?;
    let mut curve = config.build_curve()?;
    let h_gamma0 = curve
        .element_lengths()
        .into_iter()
        .fold(f64::MIN, f64::max);
    let dt = config.resolve_dt(h_gamma0);
    let spec = config.flow;
    let r0 = config.initial_radius();

    let first_system_dump = if config.output.dump_matrices {
        let state = schemes::internals::build_state(
            &curve,
            &spec,
            dt,
            None,
            crate::solver::NewtonConfig::default(),
        )?;
        let start = schemes::internals::newton_start(&state)?;
        let sys = schemes::internals::jacobian(&state, &start)?;
        Some(crate::solver::dump_system(&sys))
    } else {
        None
    };

    let mut diagnostics = Vec::new();
    diagnostics.push(DiagnosticsRow::new(0.0, &diagnostics_snapshot(&curve, &spec)?));
    let volume0 = diagnostics[0].volume;

    let mut snapshots = vec![(0usize, 0.0, curve.clone())];
    let mut pending_times: Vec<f64> = config.output.snapshot_times.clone();
    pending_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut next_time_idx = 0;

    let mut t = 0.0;
    let mut m = 0usize;
    let mut kappa_prev: Option<Vec<f64>> = None;
    let mut max_radius_error: Option<f64> = config.track_radius_error.then_some(0.0);
    let mut max_newton_iterations = 0usize;
    let mut guard_warnings = 0usize;
    let mut first_oscillation: Option<f64> = None;
    let mut max_volume_drift: Option<f64> = volume0.map(|_| 0.0);

    let tiny = 1e-6 * dt;
    let (status, detail) = loop {
        if t >= config.t_end - tiny {
            break (TerminalStatus::Completed, String::new());
        }
        if let Some(max_steps) = config.stop.max_steps {
            if m >= max_steps {
                break (TerminalStatus::Completed, format!("max_steps {max_steps} reached"));
            }
        }
        let dt_m = dt.min(config.t_end - t);
        let ctx = StepContext {
            kappa_prev: kappa_prev.take(),
            newton: None,
        };
        let result = match schemes::step_with(&spec, &curve, dt_m, &ctx) {
            Ok(r) => r,
            Err(e) => {
                let mapped = match &e {
                    Error::NegativeRadius { .. } => TerminalStatus::NegativeRadiusStop,
                    Error::ZeroLengthElement { .. } => TerminalStatus::PinchOffStop,
                    Error::AssumptionViolated(_) | Error::SingularSystem(_) => {
                        TerminalStatus::AssumptionViolated
                    }
                    Error::NoConvergence { .. } | Error::DomainViolation(_) => {
                        TerminalStatus::NoConvergence
                    }
                    // Stability or verification failures indicate bugs and
                    // are never converted into a status.
                    _ => return Err(e),
                };
                break (mapped, e.to_string());
            }
        };
        t += dt_m;
        m += 1;
        curve = result.curve.clone();
        if let SchemeCurvature::InPlane(k) = &result.curvature {
            kappa_prev = Some(k.clone());
        }
        max_newton_iterations = max_newton_iterations.max(result.newton_iterations);
        if matches!(result.guard, Some(GuardOutcome::Warn { .. })) {
            guard_warnings += 1;
        }

        diagnostics.push(DiagnosticsRow::new(t, &result.diagnostics));

        if let (Some(v0), Some(v)) = (volume0, result.diagnostics.volume) {
            let drift = ((v - v0) / v0).abs();
            let slot = max_volume_drift.get_or_insert(0.0);
            *slot = slot.max(drift);
        }

        if let Some(err) = max_radius_error.as_mut() {
            let r_exact = exact_solution_radius(&spec, t, r0.unwrap_or(1.0))?;
            for p in curve.nodes() {
                *err = err.max((p.norm() - r_exact).abs());
            }
        }

        if spec.scheme == SchemeTag::B && first_oscillation.is_none() {
            if let Ok(diag) = geometry::curvature_diagnostics(&curve) {
                let alternations = geometry::sign_alternations(&diag.mean, curve.is_closed());
                if alternations > curve.n_elements() / 4 {
                    first_oscillation = Some(t);
                }
            }
        }

        let mut snapshot = false;
        while next_time_idx < pending_times.len() && pending_times[next_time_idx] <= t + tiny {
            snapshot = true;
            next_time_idx += 1;
        }
        if let Some(every) = config.output.snapshot_every {
            if every > 0 && m % every == 0 {
                snapshot = true;
            }
        }
        if snapshot {
            snapshots.push((m, t, curve.clone()));
        }

        let d = &result.diagnostics;
        if let Some(thr) = config.stop.min_radius {
            if d.min_radius < thr {
                break (
                    TerminalStatus::PinchOffStop,
                    format!("min radius {:.3e} fell below {thr:.3e}", d.min_radius),
                );
            }
        }
        if let Some(thr) = config.stop.min_element {
            if d.min_element_length < thr {
                break (
                    TerminalStatus::PinchOffStop,
                    format!(
                        "min element length {:.3e} fell below {thr:.3e}",
                        d.min_element_length
                    ),
                );
            }
        }
    };

    if snapshots.last().map(|s| s.0) != Some(m) {
        snapshots.push((m, t, curve.clone()));
    }

    Ok(SimOutcome {
        status,
        detail,
        stop_time: t,
        steps: m,
        dt,
        h_gamma0,
        diagnostics,
        snapshots,
        final_curve: curve,
        max_radius_error,
        max_newton_iterations,
        guard_warnings,
        first_oscillation,
        max_volume_drift,
        first_system_dump,
    })
}
