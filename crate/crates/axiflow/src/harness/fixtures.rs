//! Canned experiment configurations and reference values used by the
//! verification suites and the acceptance tests.

use crate::harness::config::{
    ExperimentConfig, GeometryConfig, OutputConfig, StopConfig, TimeStepConfig,
};
use crate::harness::converge::ConvergenceStudy;
use crate::mesh::BoundaryKind;
use crate::schemes::{FlowSpec, IntegrationVariant, SchemeTag, SpeedLaw};

pub const J_VALUES: [usize; 5] = [32, 64, 128, 256, 512];

/// Largest initial element lengths of the nonuniform semicircle at the
/// standard refinements.
pub const H_GAMMA0: [f64; 5] = [1.0792e-1, 5.3988e-2, 2.6997e-2, 1.3499e-2, 6.7495e-3];

/// Half the extinction time of the unit sphere under the beta = 1/2 power
/// law: (1/2) * (2/3) * 2^(-1/2).
pub fn beta_half_t_end() -> f64 {
    (1.0 / 3.0) * 2.0f64.powf(-0.5)
}

/// One column of the sphere convergence tables: reference max-norm errors
/// at J in `J_VALUES` plus the tolerances the reproduction must meet.
#[derive(Clone, Copy, Debug)]
pub struct ReferenceColumn {
    pub name: &'static str,
    pub flow: FlowSpec,
    pub t_end: f64,
    pub errors: [f64; 5],
    /// Allowed relative deviation of each error.
    pub rel_tol: f64,
    /// Allowed range for every experimental order (rows 2..).
    pub eoc_range: Option<(f64, f64)>,
}

fn spec(scheme: SchemeTag, variant: IntegrationVariant) -> FlowSpec {
    FlowSpec::mcf(scheme).with_variant(variant)
}

/// Mean curvature flow columns (shrinking unit sphere, T = 0.125).
pub fn mcf_reference_columns() -> Vec<ReferenceColumn> {
    use IntegrationVariant::*;
    use SchemeTag::*;
    let t = 0.125;
    vec![
        ReferenceColumn {
            name: "scheme_a",
            flow: spec(A, MassLumped),
            t_end: t,
            errors: [7.3110e-4, 1.8422e-4, 4.6098e-5, 1.1525e-5, 2.8813e-6],
            rel_tol: 0.01,
            eoc_range: Some((1.95, 2.05)),
        },
        ReferenceColumn {
            name: "scheme_b",
            flow: spec(B, MassLumped),
            t_end: t,
            errors: [1.2074e-3, 3.0227e-4, 7.5534e-5, 1.8878e-5, 4.7192e-6],
            rel_tol: 0.01,
            eoc_range: Some((1.95, 2.05)),
        },
        ReferenceColumn {
            name: "scheme_c_star_lumped",
            flow: spec(CStar, MassLumped),
            t_end: t,
            errors: [6.5076e-3, 1.9553e-3, 5.8247e-4, 1.7056e-4, 4.9112e-5],
            rel_tol: 0.02,
            eoc_range: None,
        },
        ReferenceColumn {
            name: "scheme_c_star_exact",
            flow: spec(CStar, Exact),
            t_end: t,
            errors: [3.7596e-3, 1.1565e-3, 3.5226e-4, 1.0672e-4, 3.2277e-5],
            rel_tol: 0.02,
            eoc_range: None,
        },
        ReferenceColumn {
            name: "scheme_d_lumped",
            flow: spec(D, MassLumped),
            t_end: t,
            errors: [8.1006e-3, 2.4707e-3, 7.3144e-4, 2.1165e-4, 6.0176e-5],
            rel_tol: 0.02,
            eoc_range: None,
        },
        ReferenceColumn {
            name: "scheme_d_exact",
            flow: spec(D, Exact),
            t_end: t,
            errors: [3.0757e-3, 8.8590e-4, 2.5363e-4, 7.2522e-5, 2.0472e-5],
            rel_tol: 0.02,
            eoc_range: None,
        },
        ReferenceColumn {
            name: "scheme_d_star_lumped",
            flow: spec(DStar, MassLumped),
            t_end: t,
            errors: [8.0470e-3, 2.4549e-3, 7.2755e-4, 2.1075e-4, 5.9972e-5],
            rel_tol: 0.02,
            eoc_range: None,
        },
        ReferenceColumn {
            name: "scheme_d_star_exact",
            flow: spec(DStar, Exact),
            t_end: t,
            errors: [3.6921e-3, 1.0449e-3, 2.9111e-4, 8.0222e-5, 2.1916e-5],
            rel_tol: 0.02,
            eoc_range: None,
        },
    ]
}

/// Nonlinear-flow columns: beta = 1/2 power law and the inverse flow.
pub fn nonlinear_reference_columns() -> Vec<ReferenceColumn> {
    use IntegrationVariant::*;
    use SchemeTag::*;
    vec![
        ReferenceColumn {
            name: "scheme_a_f_beta_half",
            flow: spec(A, MassLumped).with_speed(SpeedLaw::Power { beta: 0.5 }),
            t_end: beta_half_t_end(),
            errors: [7.4955e-5, 1.8223e-5, 4.5218e-6, 1.1282e-6, 2.8189e-7],
            rel_tol: 0.01,
            eoc_range: Some((1.9, 2.1)),
        },
        ReferenceColumn {
            name: "scheme_a_f_inverse",
            flow: spec(A, MassLumped).with_speed(SpeedLaw::Inverse),
            t_end: 1.0,
            errors: [7.1401e-4, 1.8106e-4, 4.5484e-5, 1.1388e-5, 2.8483e-6],
            rel_tol: 0.01,
            eoc_range: Some((1.9, 2.1)),
        },
        ReferenceColumn {
            name: "scheme_c_star_f_beta_half",
            flow: spec(CStar, Exact).with_speed(SpeedLaw::Power { beta: 0.5 }),
            t_end: beta_half_t_end(),
            errors: [3.0322e-3, 1.0450e-3, 3.5931e-4, 1.2357e-4, 4.2698e-5],
            rel_tol: f64::INFINITY, // only the sub-quadratic orders are pinned
            eoc_range: Some((1.35, 1.60)),
        },
        ReferenceColumn {
            name: "scheme_c_star_f_inverse",
            flow: spec(CStar, Exact).with_speed(SpeedLaw::Inverse),
            t_end: 1.0,
            errors: [1.2445e-2, 4.7424e-3, 1.7539e-3, 6.3806e-4, 2.3002e-4],
            rel_tol: f64::INFINITY,
            eoc_range: Some((1.35, 1.60)),
        },
    ]
}

/// Sphere convergence study for one column.
pub fn sphere_study(flow: FlowSpec, t_end: f64, j_values: &[usize]) -> ConvergenceStudy {
    ConvergenceStudy {
        base: ExperimentConfig {
            geometry: GeometryConfig::SemicircleNonuniform { radius: 1.0 },
            j: j_values[0],
            time_step: TimeStepConfig::CoupledH2 { factor: 0.1 },
            t_end,
            flow,
            stop: StopConfig::default(),
            output: OutputConfig::default(),
            track_radius_error: true,
        },
        j_values: j_values.to_vec(),
    }
}

/// The linear scheme-C runs on the sphere, which fail with a node leaving
/// the half-plane.
pub fn scheme_c_sphere_config(variant: IntegrationVariant, j: usize) -> ExperimentConfig {
    ExperimentConfig {
        geometry: GeometryConfig::SemicircleNonuniform { radius: 1.0 },
        j,
        time_step: TimeStepConfig::CoupledH2 { factor: 0.1 },
        t_end: 0.125,
        flow: spec(SchemeTag::C, variant),
        stop: StopConfig::default(),
        output: OutputConfig::default(),
        track_radius_error: true,
    }
}

/// Conserved mean curvature flow of the unit sphere from the nonuniform
/// semicircle; the fixture behind the mesh-quality comparison.
pub fn conserved_sphere_config(flow: FlowSpec) -> ExperimentConfig {
    ExperimentConfig {
        geometry: GeometryConfig::SemicircleNonuniform { radius: 1.0 },
        j: 64,
        time_step: TimeStepConfig::Fixed { dt: 1e-4 },
        t_end: 1.0,
        flow,
        stop: StopConfig::default(),
        output: OutputConfig::default(),
        track_radius_error: false,
    }
}

pub fn conserved_flow_a() -> FlowSpec {
    FlowSpec::mcf(SchemeTag::A).conserved()
}

pub fn conserved_flow_c_star(variant: IntegrationVariant) -> FlowSpec {
    FlowSpec::mcf(SchemeTag::CStar).with_variant(variant).conserved()
}

/// Torus that closes up towards a genus-0 surface under mean curvature flow.
pub fn torus_closing_config() -> ExperimentConfig {
    ExperimentConfig {
        geometry: GeometryConfig::Circle {
            major_radius: 1.0,
            minor_radius: 0.7,
        },
        j: 256,
        time_step: TimeStepConfig::Fixed { dt: 1e-4 },
        t_end: 0.12,
        flow: FlowSpec::mcf(SchemeTag::A),
        stop: StopConfig {
            min_radius: Some(0.05),
            ..Default::default()
        },
        output: OutputConfig::default(),
        track_radius_error: false,
    }
}

/// Torus that shrinks towards a circle; completes past t = 0.13.
pub fn torus_shrinking_config(flow: FlowSpec, t_end: f64) -> ExperimentConfig {
    ExperimentConfig {
        geometry: GeometryConfig::Circle {
            major_radius: 1.0,
            minor_radius: 0.5,
        },
        j: 256,
        time_step: TimeStepConfig::Fixed { dt: 1e-4 },
        t_end,
        flow,
        stop: StopConfig::default(),
        output: OutputConfig::default(),
        track_radius_error: false,
    }
}

/// Conserved torus run: the surface attempts to close up instead of
/// shrinking; stops on the minimum-radius threshold.
pub fn torus_conserved_config() -> ExperimentConfig {
    ExperimentConfig {
        geometry: GeometryConfig::Circle {
            major_radius: 1.0,
            minor_radius: 0.5,
        },
        j: 256,
        time_step: TimeStepConfig::Fixed { dt: 1e-4 },
        t_end: 0.2,
        flow: conserved_flow_a(),
        stop: StopConfig {
            min_radius: Some(0.05),
            ..Default::default()
        },
        output: OutputConfig::default(),
        track_radius_error: false,
    }
}

/// Cylinder with fixed boundary circles pinching off near t = 0.5.
pub fn cylinder_pinch_config() -> ExperimentConfig {
    ExperimentConfig {
        geometry: GeometryConfig::CylinderSegment {
            radius: 1.0,
            z_min: -2.0,
            z_max: 2.0,
            start: BoundaryKind::Fixed,
            end: BoundaryKind::Fixed,
        },
        j: 128,
        time_step: TimeStepConfig::Fixed { dt: 1e-4 },
        t_end: 0.7,
        flow: FlowSpec::mcf(SchemeTag::A),
        stop: StopConfig {
            min_radius: Some(0.05),
            min_element: Some(1e-4),
            ..Default::default()
        },
        output: OutputConfig::default(),
        track_radius_error: false,
    }
}

/// Cylinder between two horizontal planes with negative contact densities:
/// grows into a travelling wave whose speed approaches pi/3.
pub fn grim_reaper_config(t_end: f64) -> ExperimentConfig {
    ExperimentConfig {
        geometry: GeometryConfig::CylinderSegment {
            radius: 1.0,
            z_min: 0.0,
            z_max: 1.0,
            start: BoundaryKind::PlaneSlide { rho: -0.5 },
            end: BoundaryKind::PlaneSlide { rho: -0.5 },
        },
        j: 128,
        time_step: TimeStepConfig::Fixed { dt: 1e-3 },
        t_end,
        flow: FlowSpec::mcf(SchemeTag::A),
        stop: StopConfig::default(),
        output: OutputConfig::default(),
        track_radius_error: false,
    }
}

/// Inverse mean curvature flow of a thin torus; the run turns unphysical
/// (domain or assumption failure) around t = 0.52.
pub fn imcf_torus_config() -> ExperimentConfig {
    ExperimentConfig {
        geometry: GeometryConfig::Circle {
            major_radius: 1.0,
            minor_radius: 0.25,
        },
        j: 256,
        time_step: TimeStepConfig::Fixed { dt: 1e-4 },
        t_end: 0.6,
        flow: FlowSpec::mcf(SchemeTag::A).with_speed(SpeedLaw::Inverse),
        stop: StopConfig::default(),
        output: OutputConfig::default(),
        track_radius_error: false,
    }
}

/// Gauss curvature flow of a cigar (short qualitative run).
pub fn gauss_cigar_config(t_end: f64) -> ExperimentConfig {
    ExperimentConfig {
        geometry: GeometryConfig::Cigar { rx: 0.8, rz: 2.0 },
        j: 128,
        time_step: TimeStepConfig::Fixed { dt: 1e-5 },
        t_end,
        flow: FlowSpec::mcf(SchemeTag::A).with_speed(SpeedLaw::GaussCurvature),
        stop: StopConfig::default(),
        output: OutputConfig::default(),
        track_radius_error: false,
    }
}

/// Least-squares slope of (t, y) samples over the trailing fraction of the
/// time window; the travelling-wave speed estimator.
pub fn fit_speed(times: &[f64], values: &[f64], trailing_fraction: f64) -> f64 {
    let t_min = times.last().unwrap() * (1.0 - trailing_fraction);
    let pairs: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t_min)
        .map(|(t, v)| (*t, *v))
        .collect();
    let n = pairs.len() as f64;
    let mean_t: f64 = pairs.iter().map(|(t, _)| t).sum::<f64>() / n;
    let mean_v: f64 = pairs.iter().map(|(_, v)| v).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, v) in pairs {
        num += (t - mean_t) * (v - mean_v);
        den += (t - mean_t) * (t - mean_t);
    }
    num / den
}
