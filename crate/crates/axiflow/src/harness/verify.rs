//! Tagged verification suites: canned experiments checking the structural
//! guarantees of the schemes (energy stability, equidistribution, volume
//! conservation, convergence against the reference tables, and the
//! solvability assumption machinery).

use std::f64::consts::PI;
use std::fmt;

use crate::harness::config::{
    ExperimentConfig, GeometryConfig, OutputConfig, StopConfig, TimeStepConfig,
};
use crate::harness::converge::{run_convergence_study, ConvergenceReport};
use crate::harness::fixtures::{self, ReferenceColumn, J_VALUES};
use crate::harness::run::{run_simulation, TerminalStatus};
use crate::mesh::{check_assumptions, BoundaryKind, DiscreteCurve};
use crate::schemes::{FlowSpec, IntegrationVariant, SchemeTag, SpeedLaw};
use crate::solver::{timestep_guard, GuardOutcome};
use crate::vec2::Vec2;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyTag {
    Stability,
    Equidistribution,
    Conservation,
    Convergence,
    Assumptions,
}

impl VerifyTag {
    pub fn parse(s: &str) -> Option<VerifyTag> {
        match s {
            "stability" => Some(VerifyTag::Stability),
            "equidistribution" => Some(VerifyTag::Equidistribution),
            "conservation" => Some(VerifyTag::Conservation),
            "convergence" => Some(VerifyTag::Convergence),
            "assumptions" => Some(VerifyTag::Assumptions),
            _ => None,
        }
    }

    pub const ALL: [VerifyTag; 5] = [
        VerifyTag::Stability,
        VerifyTag::Equidistribution,
        VerifyTag::Conservation,
        VerifyTag::Convergence,
        VerifyTag::Assumptions,
    ];
}

impl fmt::Display for VerifyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VerifyTag::Stability => "stability",
            VerifyTag::Equidistribution => "equidistribution",
            VerifyTag::Conservation => "conservation",
            VerifyTag::Convergence => "convergence",
            VerifyTag::Assumptions => "assumptions",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct VerifyItem {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub tag: VerifyTag,
    pub items: Vec<VerifyItem>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            let mark = if item.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("[{mark}] {}: {}\n", item.name, item.detail));
        }
        out.push_str(&format!(
            "{}: {}\n",
            self.tag,
            if self.all_pass() { "all checks passed" } else { "FAILURES PRESENT" }
        ));
        out
    }
}

fn item(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> VerifyItem {
    VerifyItem {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

pub fn verify_suite(tag: VerifyTag) -> Result<VerifyReport> {
    let items = match tag {
        VerifyTag::Stability => stability_items()?,
        VerifyTag::Equidistribution => equidistribution_items()?,
        VerifyTag::Conservation => conservation_items()?,
        VerifyTag::Convergence => convergence_items()?,
        VerifyTag::Assumptions => assumption_items()?,
    };
    Ok(VerifyReport { tag, items })
}

// ---------------------------------------------------------------- stability

fn stability_fixture(name: &str, j: usize) -> ExperimentConfig {
    let geometry = match name {
        "sphere" => GeometryConfig::SemicircleNonuniform { radius: 1.0 },
        "torus" => GeometryConfig::Circle {
            major_radius: 1.0,
            minor_radius: 0.5,
        },
        _ => GeometryConfig::CylinderSegment {
            radius: 1.0,
            z_min: -2.0,
            z_max: 2.0,
            start: BoundaryKind::Fixed,
            end: BoundaryKind::Fixed,
        },
    };
    ExperimentConfig {
        geometry,
        j,
        time_step: TimeStepConfig::Fixed { dt: 1e-4 },
        t_end: 1.0,
        flow: FlowSpec::mcf(SchemeTag::CStar),
        stop: StopConfig {
            max_steps: Some(10),
            ..Default::default()
        },
        output: OutputConfig::default(),
        track_radius_error: false,
    }
}

/// The starred schemes assert the discrete energy bound inside every step;
/// a run can only finish (with any status) if no violation occurred.
fn stability_items() -> Result<Vec<VerifyItem>> {
    let mut items = Vec::new();
    let schemes = [
        ("c_star_lumped", SchemeTag::CStar, IntegrationVariant::MassLumped),
        ("c_star_exact", SchemeTag::CStar, IntegrationVariant::Exact),
        ("d_star_lumped", SchemeTag::DStar, IntegrationVariant::MassLumped),
        ("d_star_exact", SchemeTag::DStar, IntegrationVariant::Exact),
    ];
    for fixture in ["sphere", "torus", "cylinder"] {
        for (scheme_name, scheme, variant) in schemes {
            for dt in [1e-4, 1e-2, 1.0] {
                let mut config = stability_fixture(fixture, 32);
                config.flow = FlowSpec::mcf(scheme).with_variant(variant);
                config.time_step = TimeStepConfig::Fixed { dt };
                config.t_end = 10.0 * dt;
                let name = format!("stab_{fixture}_{scheme_name}_dt{dt:.0e}");
                match run_simulation(&config) {
                    Ok(outcome) => items.push(item(
                        name,
                        true,
                        format!(
                            "energy bound held for {} steps (status {:?})",
                            outcome.steps, outcome.status
                        ),
                    )),
                    Err(e) => items.push(item(name, false, e.to_string())),
                }
            }
        }
    }
    Ok(items)
}

// ---------------------------------------------------- equidistribution

fn max_ratio_nonparallel(curve: &DiscreteCurve) -> Result<f64> {
    let (tangents, _) = curve.element_tangents_normals()?;
    let lengths = curve.element_lengths();
    let ne = curve.n_elements();
    let pairs = if curve.is_closed() { ne } else { ne - 1 };
    let mut worst = 1.0f64;
    for e in 0..pairs {
        let e2 = (e + 1) % ne;
        let cross = tangents[e].x * tangents[e2].y - tangents[e].y * tangents[e2].x;
        if cross.abs() < 1e-9 {
            continue;
        }
        let (a, b) = (lengths[e], lengths[e2]);
        worst = worst.max(a.max(b) / a.min(b));
    }
    Ok(worst)
}

fn equidistribution_items() -> Result<Vec<VerifyItem>> {
    let config = fixtures::conserved_sphere_config(fixtures::conserved_flow_a());
    let outcome = run_simulation(&config)?;
    let ratio = max_ratio_nonparallel(&outcome.final_curve)?;
    let global = outcome.final_curve.element_ratio()?;
    Ok(vec![
        item(
            "equidistribution_conserved_sphere",
            outcome.status == TerminalStatus::Completed && ratio <= 1.05,
            format!("adjacent non-parallel ratio {ratio:.4} (global {global:.4})"),
        ),
    ])
}

// ---------------------------------------------------------- conservation

fn conservation_items() -> Result<Vec<VerifyItem>> {
    let mut items = Vec::new();
    let sphere = run_simulation(&fixtures::conserved_sphere_config(fixtures::conserved_flow_a()))?;
    let drift = sphere.max_volume_drift.unwrap_or(f64::NAN);
    items.push(item(
        "conserved_sphere_volume",
        sphere.status == TerminalStatus::Completed && drift <= 2e-3,
        format!("relative volume drift {drift:.3e}"),
    ));

    let torus = run_simulation(&fixtures::torus_conserved_config())?;
    let drift = torus.max_volume_drift.unwrap_or(f64::NAN);
    items.push(item(
        "conserved_torus_volume",
        drift <= 2e-3 && torus.status == TerminalStatus::PinchOffStop,
        format!(
            "relative volume drift {drift:.3e} up to {:?} at t = {:.4}",
            torus.status, torus.stop_time
        ),
    ));
    Ok(items)
}

// ----------------------------------------------------------- convergence

pub fn check_reference_column(column: &ReferenceColumn, report: &ConvergenceReport) -> VerifyItem {
    let mut pass = true;
    let mut details = Vec::new();
    for (k, row) in report.rows.iter().enumerate() {
        match row.error {
            Some(err) => {
                let reference = column.errors[k];
                let rel = (err - reference).abs() / reference;
                if rel > column.rel_tol {
                    pass = false;
                    details.push(format!(
                        "J={}: error {err:.4e} vs {reference:.4e} ({:.2}%)",
                        row.j,
                        100.0 * rel
                    ));
                }
            }
            None => {
                pass = false;
                details.push(format!("J={}: {:?} {}", row.j, row.status, row.detail));
            }
        }
        if let (Some((lo, hi)), Some(eoc)) = (column.eoc_range, row.eoc) {
            if !(eoc >= lo && eoc <= hi) {
                pass = false;
                details.push(format!("J={}: EOC {eoc:.3} outside [{lo}, {hi}]", row.j));
            }
        }
    }
    let errors: Vec<String> = report
        .rows
        .iter()
        .map(|r| r.error.map(|e| format!("{e:.4e}")).unwrap_or("---".into()))
        .collect();
    let detail = if details.is_empty() {
        format!("errors [{}]", errors.join(", "))
    } else {
        details.join("; ")
    };
    item(format!("convergence_{}", column.name), pass, detail)
}

fn convergence_items() -> Result<Vec<VerifyItem>> {
    let mut items = Vec::new();
    for column in fixtures::mcf_reference_columns()
        .into_iter()
        .chain(fixtures::nonlinear_reference_columns())
    {
        let study = fixtures::sphere_study(column.flow, column.t_end, &J_VALUES);
        let report = run_convergence_study(&study)?;
        items.push(check_reference_column(&column, &report));
    }

    // The linear scheme-C runs stop with a negative radius at every J.
    for variant in [IntegrationVariant::MassLumped, IntegrationVariant::Exact] {
        let mut pass = true;
        let mut details = Vec::new();
        for &j in &J_VALUES {
            let outcome = run_simulation(&fixtures::scheme_c_sphere_config(variant, j))?;
            if outcome.status != TerminalStatus::NegativeRadiusStop {
                pass = false;
            }
            details.push(format!("J={j}: {:?} at t = {:.4}", outcome.status, outcome.stop_time));
        }
        items.push(item(
            format!("scheme_c_{variant:?}_negative_radius_stop").to_lowercase(),
            pass,
            details.join("; "),
        ));
    }

    // Travelling-wave speed of the plane-contact cylinder. The transient
    // decays like 1/t, so the fit needs the long horizon.
    let outcome = run_simulation(&fixtures::grim_reaper_config(100.0))?;
    let times: Vec<f64> = outcome.diagnostics.iter().map(|d| d.time).collect();
    let lows: Vec<f64> = outcome.diagnostics.iter().map(|d| d.min_r).collect();
    let speed = fixtures::fit_speed(&times, &lows, 0.5);
    let target = PI / 3.0;
    let rel = (speed - target).abs() / target;
    items.push(item(
        "grim_reaper_speed",
        outcome.status == TerminalStatus::Completed && rel <= 0.02,
        format!("fitted speed {speed:.5} vs pi/3 = {target:.5} ({:.2}%)", 100.0 * rel),
    ));

    Ok(items)
}

// ----------------------------------------------------------- assumptions

fn assumption_items() -> Result<Vec<VerifyItem>> {
    let mut items = Vec::new();

    let circle = crate::harness::generate::torus_circle(4.0, 1.0, 16)?;
    let report = check_assumptions(&circle, &FlowSpec::mcf(SchemeTag::A));
    items.push(item(
        "assumptions_circle_all_pass",
        report.element_geometry_ok()
            && report.vertex_normal_span.pass
            && report.weighted_normal_span.pass,
        "off-axis circle satisfies every solvability assumption",
    ));

    let segment = DiscreteCurve::open(
        (0..5).map(|k| Vec2::new(1.0, k as f64)).collect(),
        BoundaryKind::Fixed,
        BoundaryKind::Fixed,
    )?;
    let report = check_assumptions(&segment, &FlowSpec::mcf(SchemeTag::A));
    items.push(item(
        "assumptions_segment_span_fails",
        !report.vertex_normal_span.pass
            && report.element_geometry_ok()
            && report.scheme_ok(SchemeTag::A),
        "parallel normals are rank deficient, yet fixed ends keep the step solvable",
    ));

    let sphere = crate::harness::generate::nonuniform_semicircle(1.0, 32)?;
    let report = check_assumptions(&sphere, &FlowSpec::mcf(SchemeTag::CStar));
    items.push(item(
        "assumptions_semicircle_pass",
        report.scheme_ok(SchemeTag::A) && report.scheme_ok(SchemeTag::CStar),
        "axis-attached semicircle satisfies the span conditions",
    ));

    let torus = crate::harness::generate::torus_circle(1.0, 0.5, 32)?;
    items.push(item(
        "guard_torus_pass_and_warn",
        timestep_guard(&torus, 1e-4) == GuardOutcome::Pass
            && matches!(timestep_guard(&torus, 1.0), GuardOutcome::Warn { .. }),
        "step-size guard passes at dt = 1e-4 and warns at dt = 1",
    ));
    items.push(item(
        "guard_skipped_on_axis",
        timestep_guard(&sphere, 1e-3) == GuardOutcome::SkippedAxisContact,
        "guard hypothesis fails for curves touching the axis",
    ));

    // Terminal status reachability.
    let completed = run_simulation(&fixtures::torus_shrinking_config(
        FlowSpec::mcf(SchemeTag::A),
        2e-3,
    ))?;
    items.push(item(
        "status_completed",
        completed.status == TerminalStatus::Completed,
        format!("{:?}", completed.status),
    ));

    let neg = run_simulation(&fixtures::scheme_c_sphere_config(
        IntegrationVariant::MassLumped,
        32,
    ))?;
    items.push(item(
        "status_negative_radius",
        neg.status == TerminalStatus::NegativeRadiusStop,
        format!("{:?} at t = {:.4}: {}", neg.status, neg.stop_time, neg.detail),
    ));

    let closing = run_simulation(&fixtures::torus_closing_config())?;
    items.push(item(
        "status_pinch_off_torus_closing",
        closing.status == TerminalStatus::PinchOffStop
            && closing.stop_time >= 0.075
            && closing.stop_time <= 0.09,
        format!("{:?} at t = {:.4}", closing.status, closing.stop_time),
    ));

    // Inverse flow with zero mean curvature at the inner equator: the speed
    // law is evaluated at the domain boundary immediately.
    let imcf_degenerate = run_simulation(&ExperimentConfig {
        geometry: GeometryConfig::Circle {
            major_radius: 1.0,
            minor_radius: 0.5,
        },
        j: 32,
        time_step: TimeStepConfig::Fixed { dt: 1e-4 },
        t_end: 1e-3,
        flow: FlowSpec::mcf(SchemeTag::A).with_speed(SpeedLaw::Inverse),
        stop: StopConfig::default(),
        output: OutputConfig::default(),
        track_radius_error: false,
    })?;
    items.push(item(
        "status_no_convergence_domain",
        imcf_degenerate.status == TerminalStatus::NoConvergence,
        format!("{:?}: {}", imcf_degenerate.status, imcf_degenerate.detail),
    ));

    // A straight cylinder sliding along a coaxial cylinder of the same
    // radius: vertical translations survive the constraints while every
    // vertex normal is horizontal, so the step system is singular.
    let mut bad = fixtures::cylinder_pinch_config();
    bad.geometry = GeometryConfig::CylinderSegment {
        radius: 1.0,
        z_min: 0.0,
        z_max: 1.0,
        start: BoundaryKind::CylinderSlide { rho: 0.0 },
        end: BoundaryKind::CylinderSlide { rho: 0.0 },
    };
    bad.t_end = 1e-3;
    bad.j = 8;
    bad.stop = StopConfig::default();
    let assumption = run_simulation(&bad)?;
    items.push(item(
        "status_assumption_violated",
        assumption.status == TerminalStatus::AssumptionViolated,
        format!("{:?}: {}", assumption.status, assumption.detail),
    ));

    let pinch = run_simulation(&fixtures::cylinder_pinch_config())?;
    items.push(item(
        "cylinder_pinch_time",
        pinch.status == TerminalStatus::PinchOffStop
            && pinch.stop_time >= 0.45
            && pinch.stop_time <= 0.57,
        format!("{:?} at t = {:.4}", pinch.status, pinch.stop_time),
    ));

    let imcf = run_simulation(&fixtures::imcf_torus_config())?;
    items.push(item(
        "imcf_torus_unphysical",
        imcf.status != TerminalStatus::Completed
            && imcf.stop_time >= 0.42
            && imcf.stop_time <= 0.60,
        format!("{:?} at t = {:.4}: {}", imcf.status, imcf.stop_time, imcf.detail),
    ));

    Ok(items)
}
