//! Experiment configuration: a JSON document mirroring these types drives
//! the `run` and `converge` subcommands.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::harness::generate;
use crate::mesh::{io as curve_io, BoundaryKind, DiscreteCurve};
use crate::schemes::{FlowSpec, SpeedLaw};
use crate::Result;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GeometryConfig {
    /// Nonuniformly partitioned semicircle attached to the axis.
    SemicircleNonuniform { radius: f64 },
    /// Uniform semicircle attached to the axis.
    Semicircle { radius: f64 },
    /// Torus generating circle (closed).
    Circle { major_radius: f64, minor_radius: f64 },
    CylinderSegment {
        radius: f64,
        z_min: f64,
        z_max: f64,
        start: BoundaryKind,
        end: BoundaryKind,
    },
    Cigar { rx: f64, rz: f64 },
    Disc { rx: f64, rz: f64 },
    Spiral {
        center_r: f64,
        inner_radius: f64,
        gap_per_turn: f64,
        turns: f64,
        half_thickness: f64,
    },
    /// Load the initial curve from a curve text file; `j` is ignored.
    CurveFile { path: String },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TimeStepConfig {
    Fixed { dt: f64 },
    /// dt = factor * (largest initial element length)^2.
    CoupledH2 { factor: f64 },
}

impl Default for TimeStepConfig {
    fn default() -> Self {
        TimeStepConfig::CoupledH2 { factor: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct StopConfig {
    /// Stop when any non-axis node's radius falls below this.
    pub min_radius: Option<f64>,
    /// Stop when any element length falls below this.
    pub min_element: Option<f64>,
    pub max_steps: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    /// Times at which to write curve snapshots (t = 0 and the final state
    /// are always included).
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Snapshot every n-th step instead.
    #[serde(default)]
    pub snapshot_every: Option<usize>,
    /// Also write an SVG overlay of the snapshots.
    #[serde(default)]
    pub svg: bool,
    /// Dump the first step's assembled system in triplet form.
    #[serde(default)]
    pub dump_matrices: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    pub j: usize,
    #[serde(default)]
    pub time_step: TimeStepConfig,
    pub t_end: f64,
    pub flow: FlowSpec,
    #[serde(default)]
    pub stop: StopConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Track the max-norm radius error against the exact shrinking or
    /// expanding sphere (requires a sphere geometry and a flow with a known
    /// exact solution).
    #[serde(default)]
    pub track_radius_error: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.flow.validate()?;
        if self.j < 3 {
            return Err(Error::InvalidConfig(format!(
                "J = {} must be at least 3",
                self.j
            )));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::InvalidConfig("t_end must be positive".into()));
        }
        match self.time_step {
            TimeStepConfig::Fixed { dt } if !(dt > 0.0) => {
                return Err(Error::InvalidConfig("dt must be positive".into()));
            }
            TimeStepConfig::CoupledH2 { factor } if !(factor > 0.0) => {
                return Err(Error::InvalidConfig(
                    "time step coupling factor must be positive".into(),
                ));
            }
            _ => {}
        }
        if self.flow.speed == SpeedLaw::GaussCurvature
            && !matches!(self.time_step, TimeStepConfig::Fixed { .. })
        {
            return Err(Error::InvalidConfig(
                "the explicit Gauss-flow scheme requires a fixed dt".into(),
            ));
        }
        if self.track_radius_error {
            if !matches!(
                self.geometry,
                GeometryConfig::SemicircleNonuniform { .. } | GeometryConfig::Semicircle { .. }
            ) {
                return Err(Error::InvalidConfig(
                    "radius-error tracking needs a sphere geometry".into(),
                ));
            }
            let radius = self.initial_radius().unwrap_or(1.0);
            exact_solution_radius(&self.flow, 0.0, radius)?;
        }
        Ok(())
    }

    pub fn initial_radius(&self) -> Option<f64> {
        match self.geometry {
            GeometryConfig::SemicircleNonuniform { radius }
            | GeometryConfig::Semicircle { radius } => Some(radius),
            _ => None,
        }
    }

    pub fn build_curve(&self) -> Result<DiscreteCurve> {
        match &self.geometry {
            GeometryConfig::SemicircleNonuniform { radius } => {
                generate::nonuniform_semicircle(*radius, self.j)
            }
            GeometryConfig::Semicircle { radius } => generate::uniform_semicircle(*radius, self.j),
            GeometryConfig::Circle {
                major_radius,
                minor_radius,
            } => generate::torus_circle(*major_radius, *minor_radius, self.j),
            GeometryConfig::CylinderSegment {
                radius,
                z_min,
                z_max,
                start,
                end,
            } => generate::cylinder_segment(*radius, *z_min, *z_max, self.j, *start, *end),
            GeometryConfig::Cigar { rx, rz } => generate::cigar(*rx, *rz, self.j),
            GeometryConfig::Disc { rx, rz } => generate::disc(*rx, *rz, self.j),
            GeometryConfig::Spiral {
                center_r,
                inner_radius,
                gap_per_turn,
                turns,
                half_thickness,
            } => generate::spiral(
                *center_r,
                *inner_radius,
                *gap_per_turn,
                *turns,
                *half_thickness,
                self.j,
            ),
            GeometryConfig::CurveFile { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                curve_io::parse(&text)
            }
        }
    }

    /// Resolve the time step size against the initial mesh.
    pub fn resolve_dt(&self, h_gamma0: f64) -> f64 {
        match self.time_step {
            TimeStepConfig::Fixed { dt } => dt,
            TimeStepConfig::CoupledH2 { factor } => factor * h_gamma0 * h_gamma0,
        }
    }
}

/// Radius of the exact sphere solution at time `t` for flows with a known
/// closed form: sqrt(r0^2 - 4 t) for mean curvature flow,
/// (r0^(b+1) - (b+1) 2^b t)^(1/(b+1)) for the power law, and r0 e^(t/2) for
/// the inverse flow.
pub fn exact_solution_radius(flow: &FlowSpec, t: f64, r0: f64) -> Result<f64> {
    if flow.conserved {
        return Err(Error::InvalidConfig(
            "conserved flows have no shrinking-sphere solution".into(),
        ));
    }
    match flow.speed {
        SpeedLaw::Identity => {
            let sq = r0 * r0 - 4.0 * t;
            if sq <= 0.0 {
                return Err(Error::PastExtinction { t });
            }
            Ok(sq.sqrt())
        }
        SpeedLaw::Power { beta } => {
            let p = beta + 1.0;
            let v = r0.powf(p) - p * 2.0f64.powf(beta) * t;
            if v <= 0.0 {
                return Err(Error::PastExtinction { t });
            }
            Ok(v.powf(1.0 / p))
        }
        SpeedLaw::Inverse => Ok(r0 * (0.5 * t).exp()),
        SpeedLaw::GaussCurvature => Err(Error::InvalidConfig(
            "no closed-form sphere radius is used for the Gauss flow".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{FlowSpec, SchemeTag};
    use approx::assert_relative_eq;

    #[test]
    fn exact_radii_reference_values() {
        let mcf = FlowSpec::mcf(SchemeTag::A);
        assert_relative_eq!(
            exact_solution_radius(&mcf, 0.125, 1.0).unwrap(),
            0.5f64.sqrt(),
            epsilon = 1e-12
        );
        // Power law beta = 1/2 at half the extinction time: (1/2)^(2/3).
        let beta = FlowSpec::mcf(SchemeTag::A).with_speed(SpeedLaw::Power { beta: 0.5 });
        let t_bar = (2.0 / 3.0) * 2.0f64.powf(-0.5);
        assert_relative_eq!(
            exact_solution_radius(&beta, 0.5 * t_bar, 1.0).unwrap(),
            0.5f64.powf(2.0 / 3.0),
            epsilon = 1e-12
        );
        let imcf = FlowSpec::mcf(SchemeTag::A).with_speed(SpeedLaw::Inverse);
        assert_relative_eq!(
            exact_solution_radius(&imcf, 1.0, 1.0).unwrap(),
            0.5f64.exp(),
            epsilon = 1e-12
        );
        assert!(matches!(
            exact_solution_radius(&mcf, 0.3, 1.0),
            Err(Error::PastExtinction { .. })
        ));
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = ExperimentConfig {
            geometry: GeometryConfig::Circle {
                major_radius: 1.0,
                minor_radius: 0.5,
            },
            j: 64,
            time_step: TimeStepConfig::Fixed { dt: 1e-4 },
            t_end: 0.1,
            flow: FlowSpec::mcf(SchemeTag::A),
            stop: StopConfig {
                min_radius: Some(0.05),
                ..Default::default()
            },
            output: OutputConfig::default(),
            track_radius_error: false,
        };
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(back.j, 64);
        assert!(matches!(back.geometry, GeometryConfig::Circle { .. }));
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut config = ExperimentConfig {
            geometry: GeometryConfig::Semicircle { radius: 1.0 },
            j: 2,
            time_step: TimeStepConfig::default(),
            t_end: 0.1,
            flow: FlowSpec::mcf(SchemeTag::A),
            stop: StopConfig::default(),
            output: OutputConfig::default(),
            track_radius_error: false,
        };
        assert!(config.validate().is_err());
        config.j = 32;
        config.validate().unwrap();
        config.t_end = -1.0;
        assert!(config.validate().is_err());
        config.t_end = 0.1;
        config.flow = FlowSpec::mcf(SchemeTag::A).with_speed(SpeedLaw::GaussCurvature);
        // Gauss flow needs an explicit dt.
        assert!(config.validate().is_err());
        config.time_step = TimeStepConfig::Fixed { dt: 1e-5 };
        config.validate().unwrap();
    }
}
