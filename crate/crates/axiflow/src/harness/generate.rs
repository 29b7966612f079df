//! Initial-curve generators for the canned experiments.

use std::f64::consts::PI;

use crate::error::Error;
use crate::mesh::{BoundaryKind, DiscreteCurve};
use crate::vec2::Vec2;
use crate::Result;

fn check_j(j: usize) -> Result<()> {
    if j < 3 {
        return Err(Error::InvalidConfig(format!("J = {j} must be at least 3")));
    }
    Ok(())
}

/// Semicircle of radius `r0` attached to the axis at both ends, with the
/// standard nonuniform angle perturbation. The endpoint radial coordinates
/// are clamped to exactly zero.
pub fn nonuniform_semicircle(r0: f64, j: usize) -> Result<DiscreteCurve> {
    semicircle(r0, j, true)
}

/// Uniform-angle semicircle of radius `r0` attached to the axis.
pub fn uniform_semicircle(r0: f64, j: usize) -> Result<DiscreteCurve> {
    semicircle(r0, j, false)
}

fn semicircle(r0: f64, j: usize, perturbed: bool) -> Result<DiscreteCurve> {
    check_j(j)?;
    if !(r0 > 0.0) {
        return Err(Error::InvalidConfig(format!("radius {r0} must be positive")));
    }
    let h = 1.0 / j as f64;
    let mut nodes = Vec::with_capacity(j + 1);
    for k in 0..=j {
        let base = (k as f64 * h - 0.5) * PI;
        let theta = if perturbed {
            base + 0.1 * base.cos()
        } else {
            base
        };
        let mut p = Vec2::new(r0 * theta.cos(), r0 * theta.sin());
        if k == 0 || k == j {
            p.x = 0.0;
        }
        nodes.push(p);
    }
    DiscreteCurve::open(nodes, BoundaryKind::Axis, BoundaryKind::Axis)
}

/// Closed circle of radius `minor` around (major, 0): the generating curve
/// of a torus. Counterclockwise, starting at the outer equator.
pub fn torus_circle(major: f64, minor: f64, j: usize) -> Result<DiscreteCurve> {
    check_j(j)?;
    if !(minor > 0.0) || !(major > minor) {
        return Err(Error::InvalidConfig(format!(
            "torus radii R = {major}, r = {minor} must satisfy R > r > 0"
        )));
    }
    let nodes = (0..j)
        .map(|k| {
            let u = 2.0 * PI * k as f64 / j as f64;
            Vec2::new(major + minor * u.cos(), minor * u.sin())
        })
        .collect();
    DiscreteCurve::closed(nodes)
}

/// Vertical line segment at the given radius: the generating curve of a
/// cylinder between the heights `z0` and `z1`.
pub fn cylinder_segment(
    radius: f64,
    z0: f64,
    z1: f64,
    j: usize,
    start: BoundaryKind,
    end: BoundaryKind,
) -> Result<DiscreteCurve> {
    check_j(j)?;
    if !(radius > 0.0) || !(z1 > z0) {
        return Err(Error::InvalidConfig(
            "cylinder needs radius > 0 and z1 > z0".into(),
        ));
    }
    if start.is_axis() || end.is_axis() {
        return Err(Error::InvalidConfig(
            "a cylinder segment does not touch the axis".into(),
        ));
    }
    let nodes = (0..=j)
        .map(|k| Vec2::new(radius, z0 + (z1 - z0) * k as f64 / j as f64))
        .collect();
    DiscreteCurve::open(nodes, start, end)
}

/// Superellipse-like genus-0 profile attached to the axis at both poles.
/// `rx`/`rz` set the equatorial radius and pole height; `exponent` = 2 is
/// an ellipse, larger values flatten the sides.
pub fn superellipse(rx: f64, rz: f64, exponent: f64, j: usize) -> Result<DiscreteCurve> {
    check_j(j)?;
    if !(rx > 0.0 && rz > 0.0 && exponent >= 1.0) {
        return Err(Error::InvalidConfig(
            "superellipse needs rx, rz > 0 and exponent >= 1".into(),
        ));
    }
    let pow = 2.0 / exponent;
    let mut nodes = Vec::with_capacity(j + 1);
    for k in 0..=j {
        let phi = (k as f64 / j as f64 - 0.5) * PI;
        let (s, c) = phi.sin_cos();
        let mut p = Vec2::new(
            rx * c.abs().powf(pow),
            rz * s.signum() * s.abs().powf(pow),
        );
        if k == 0 || k == j {
            p.x = 0.0;
            p.y = rz * s.signum();
        }
        nodes.push(p);
    }
    DiscreteCurve::open(nodes, BoundaryKind::Axis, BoundaryKind::Axis)
}

/// Tall cigar profile.
pub fn cigar(rx: f64, rz: f64, j: usize) -> Result<DiscreteCurve> {
    superellipse(rx, rz, 2.5, j)
}

/// Flat disc profile.
pub fn disc(rx: f64, rz: f64, j: usize) -> Result<DiscreteCurve> {
    superellipse(rx, rz, 2.5, j)
}

/// Closed band winding `turns` times around a center in the half-plane: a
/// rolled-up strip of the given half-thickness whose generated surface is a
/// genus-1 "spiral". Node counts per piece are proportional to arc length.
pub fn spiral(
    center_r: f64,
    inner_radius: f64,
    gap_per_turn: f64,
    turns: f64,
    half_thickness: f64,
    j: usize,
) -> Result<DiscreteCurve> {
    check_j(j)?;
    let u_max = 2.0 * PI * turns;
    let rho = |u: f64| inner_radius + gap_per_turn * u / (2.0 * PI);
    let outer_reach = rho(u_max) + half_thickness;
    if !(half_thickness > 0.0)
        || !(inner_radius > half_thickness)
        || !(turns > 0.0)
        || !(center_r > outer_reach)
    {
        return Err(Error::InvalidConfig(
            "spiral must stay inside the positive half-plane with positive thickness".into(),
        ));
    }
    if gap_per_turn <= 2.0 * half_thickness && turns > 1.0 {
        return Err(Error::InvalidConfig(
            "spiral turns would overlap: need gap_per_turn > 2 * half_thickness".into(),
        ));
    }
    let center = Vec2::new(center_r, 0.0);
    let radial = |u: f64| Vec2::new(u.cos(), u.sin());
    let tangential = |u: f64| Vec2::new(-u.sin(), u.cos());

    // Arc lengths of the four pieces decide the node budget.
    let len_outer: f64 = u_max * (rho(u_max / 2.0) + half_thickness);
    let len_inner: f64 = u_max * (rho(u_max / 2.0) - half_thickness);
    let len_cap = PI * half_thickness;
    let total = len_outer + len_inner + 2.0 * len_cap;
    let n_of = |len: f64| ((j as f64 * len / total).round() as usize).max(2);
    let (n_outer, n_inner, n_cap) = (n_of(len_outer), n_of(len_inner), n_of(len_cap));

    let mut nodes: Vec<Vec2> = Vec::new();
    // Outer branch, u increasing.
    for k in 0..n_outer {
        let u = u_max * k as f64 / n_outer as f64;
        nodes.push(center + radial(u) * (rho(u) + half_thickness));
    }
    // Far cap around the centerline end, bulging along +tangent.
    for k in 0..n_cap {
        let th = PI * k as f64 / n_cap as f64;
        let p = center + radial(u_max) * rho(u_max);
        nodes.push(
            p + radial(u_max) * (half_thickness * th.cos())
                + tangential(u_max) * (half_thickness * th.sin()),
        );
    }
    // Inner branch, u decreasing.
    for k in 0..n_inner {
        let u = u_max * (1.0 - k as f64 / n_inner as f64);
        nodes.push(center + radial(u) * (rho(u) - half_thickness));
    }
    // Near cap, bulging along -tangent.
    for k in 0..n_cap {
        let th = PI * k as f64 / n_cap as f64;
        let p = center + radial(0.0) * rho(0.0);
        nodes.push(
            p - radial(0.0) * (half_thickness * th.cos())
                - tangential(0.0) * (half_thickness * th.sin()),
        );
    }
    DiscreteCurve::closed(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn semicircle_matches_reference_nodes() {
        // Node j=2 of the J=4 curve sits at angle 0.1.
        let c = nonuniform_semicircle(1.0, 4).unwrap();
        assert_relative_eq!(c.node(2).x, 0.1f64.cos(), epsilon = 1e-15);
        assert_relative_eq!(c.node(2).y, 0.1f64.sin(), epsilon = 1e-15);
        // Axis endpoints exactly on the axis.
        assert_eq!(c.node(0).x, 0.0);
        assert_eq!(c.node(4).x, 0.0);
    }

    #[test]
    fn semicircle_matches_reference_mesh_size() {
        // Largest element of the J=32 nonuniform semicircle.
        let c = nonuniform_semicircle(1.0, 32).unwrap();
        let h_max = c
            .element_lengths()
            .into_iter()
            .fold(f64::MIN, f64::max);
        assert!((h_max - 1.0792e-01).abs() < 5e-6, "h_max = {h_max:.6e}");
        // Element ratio of the J=64 curve.
        let c = nonuniform_semicircle(1.0, 64).unwrap();
        let ratio = c.element_ratio().unwrap();
        assert!((ratio - 1.22).abs() < 5e-3, "ratio = {ratio}");
    }

    #[test]
    fn torus_circle_reference_nodes() {
        let c = torus_circle(1.0, 0.5, 4).unwrap();
        let expect = [
            Vec2::new(1.5, 0.0),
            Vec2::new(1.0, 0.5),
            Vec2::new(0.5, 0.0),
            Vec2::new(1.0, -0.5),
        ];
        for (have, want) in c.nodes().iter().zip(&expect) {
            assert_relative_eq!(have.x, want.x, epsilon = 1e-15);
            assert_relative_eq!(have.y, want.y, epsilon = 1e-12);
        }
    }

    #[test]
    fn generators_validate_inputs() {
        assert!(nonuniform_semicircle(1.0, 2).is_err());
        assert!(nonuniform_semicircle(-1.0, 8).is_err());
        assert!(torus_circle(0.5, 1.0, 8).is_err());
        assert!(cylinder_segment(1.0, 1.0, 0.0, 8, BoundaryKind::Fixed, BoundaryKind::Fixed).is_err());
        assert!(spiral(1.0, 0.5, 0.5, 2.0, 0.2, 64).is_err()); // pokes through the axis
    }

    #[test]
    fn shaped_generators_produce_valid_curves() {
        let c = cigar(0.8, 2.0, 64).unwrap();
        assert_eq!(c.n_nodes(), 65);
        assert!(c.is_axis_node(0) && c.is_axis_node(64));
        let c = disc(2.0, 0.6, 64).unwrap();
        assert!(c.element_ratio().unwrap() < 10.0);
        let c = spiral(3.0, 0.5, 0.5, 2.0, 0.15, 256).unwrap();
        assert!(c.is_closed());
        assert!(c.min_radius_off_axis() > 1.0);
        assert!(c.element_ratio().unwrap() < 25.0);
    }
}
