//! Discrete surface energy, enclosed volume, and curvature diagnostics.
//!
//! Sign conventions: the element normal is the clockwise rotation of the
//! tangent, so a counterclockwise generating curve has outward normals and
//! the in-plane curvature of such a circle is negative (-1/radius). A
//! shrinking sphere under mean curvature flow then has mean curvature
//! -2/radius and Gauss curvature +1/radius^2.

use std::f64::consts::PI;

use crate::error::Error;
use crate::mesh::{BoundaryKind, DiscreteCurve, Frames, NodeScalarField};
use crate::vec2::Vec2;
use crate::Result;

/// Surface free energy split into its contributions. The area term is
/// 2*pi times the radially weighted curve length; the contact terms are the
/// boundary energies of cylinder- and plane-attached boundary circles.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub area_term: f64,
    pub cylinder_contact: f64,
    pub plane_contact: f64,
    pub total: f64,
}

/// Energy of the axisymmetric surface generated by `curve`.
///
/// The area integrand is linear on each element, so the exact per-element
/// integral is the trapezoid value.
pub fn discrete_energy(curve: &DiscreteCurve) -> EnergyBreakdown {
    let mut area = 0.0;
    for e in 0..curve.n_elements() {
        let (a, b) = curve.element_nodes(e);
        let pa = curve.node(a);
        let pb = curve.node(b);
        let len = (pb - pa).norm();
        area += len * 0.5 * (pa.x + pb.x);
    }
    let area_term = 2.0 * PI * area;

    let mut cylinder_contact = 0.0;
    let mut plane_contact = 0.0;
    for p in 0..2 {
        match curve.endpoint_kind(p) {
            Some(BoundaryKind::CylinderSlide { rho }) => {
                let x = curve.node(curve.endpoint_node(p));
                cylinder_contact += 2.0 * PI * rho * x.x * x.y;
            }
            Some(BoundaryKind::PlaneSlide { rho }) => {
                let x = curve.node(curve.endpoint_node(p));
                plane_contact += PI * rho * x.x * x.x;
            }
            _ => {}
        }
    }

    EnergyBreakdown {
        area_term,
        cylinder_contact,
        plane_contact,
        total: area_term + cylinder_contact + plane_contact,
    }
}

/// Whether the generated surface is closed (no boundary circles), which is
/// what makes the enclosed volume well defined.
pub fn generates_closed_surface(curve: &DiscreteCurve) -> bool {
    curve.is_closed()
        || (curve.endpoint_kind(0).map_or(false, |k| k.is_axis())
            && curve.endpoint_kind(1).map_or(false, |k| k.is_axis()))
}

/// Signed enclosed volume pi * integral of r^2 dz along the curve,
/// evaluated exactly per element. Positive for positively oriented curves
/// (a generating semicircle traversed bottom to top, or a counterclockwise
/// closed curve); reversing the node order flips the sign.
pub fn enclosed_volume(curve: &DiscreteCurve) -> Result<f64> {
    if !generates_closed_surface(curve) {
        return Err(Error::OpenSurface);
    }
    let mut vol = 0.0;
    for e in 0..curve.n_elements() {
        let (a, b) = curve.element_nodes(e);
        let pa = curve.node(a);
        let pb = curve.node(b);
        let dz = pb.y - pa.y;
        vol += dz * (pa.x * pa.x + pa.x * pb.x + pb.x * pb.x) / 3.0;
    }
    Ok(PI * vol)
}

/// Nodal curvature fields of the surface of revolution.
///
/// `azimuthal` stores the quotient (nu . e1)/(x . e1) entering the mean and
/// Gauss curvature formulas; at axis nodes it takes its limit value, the
/// negated in-plane curvature. The azimuthal principal curvature itself is
/// the negative of this quotient, so `mean = in_plane - azimuthal` and
/// `gauss = -in_plane * azimuthal`.
#[derive(Clone, Debug)]
pub struct CurvatureDiagnostics {
    pub in_plane: NodeScalarField,
    pub azimuthal: NodeScalarField,
    pub mean: NodeScalarField,
    pub gauss: NodeScalarField,
}

/// Discrete vector curvature from the lumped identity
/// (kappa_vec, eta |X_rho|)^h + (X_rho, eta_rho |X_rho|^{-1}) = 0,
/// tested against every nodal hat. The lumped mass is diagonal, so the
/// solve is explicit: kappa_vec_j = 2 (tau_right - tau_left) / (L_left + L_right).
///
/// With `mirror_axis` set, axis endpoints are treated as interior nodes of
/// the curve extended by reflection across the axis, which recovers the
/// correct pole curvature instead of the free-endpoint artifact.
pub(crate) fn vector_curvature(
    curve: &DiscreteCurve,
    frames: &Frames,
    mirror_axis: bool,
) -> Vec<Vec2> {
    let mut out = vec![Vec2::ZERO; curve.n_nodes()];
    for j in 0..curve.n_nodes() {
        let (left, right) = curve.adjacent_elements(j);
        out[j] = match (left, right) {
            (Some(l), Some(r)) => {
                (frames.tangents[r] - frames.tangents[l])
                    * (2.0 / (frames.lengths[l] + frames.lengths[r]))
            }
            (None, Some(r)) => {
                if mirror_axis && curve.is_axis_node(j) {
                    // Mirror neighbor (-x1, z1): both tangent differences
                    // reduce to a vertical vector.
                    let (_, b) = curve.element_nodes(r);
                    let d = curve.node(b) - curve.node(j);
                    Vec2::new(0.0, 2.0 * d.y) / frames.lengths[r].powi(2)
                } else {
                    frames.tangents[r] * (2.0 / frames.lengths[r])
                }
            }
            (Some(l), None) => {
                if mirror_axis && curve.is_axis_node(j) {
                    let (a, _) = curve.element_nodes(l);
                    let d = curve.node(a) - curve.node(j);
                    Vec2::new(0.0, 2.0 * d.y) / frames.lengths[l].powi(2)
                } else {
                    -frames.tangents[l] * (2.0 / frames.lengths[l])
                }
            }
            (None, None) => unreachable!("every node touches an element"),
        };
    }
    out
}

/// Nodal in-plane, azimuthal, mean and Gauss curvature diagnostics.
pub fn curvature_diagnostics(curve: &DiscreteCurve) -> Result<CurvatureDiagnostics> {
    let frames = Frames::new(curve)?;
    let kappa_vec = vector_curvature(curve, &frames, true);
    let n = curve.n_nodes();
    let mut in_plane = vec![0.0; n];
    let mut azimuthal = vec![0.0; n];
    let mut mean = vec![0.0; n];
    let mut gauss = vec![0.0; n];
    for j in 0..n {
        let omega = frames.vertex_normals[j];
        let omega_norm = omega.norm();
        if omega_norm <= f64::EPSILON {
            return Err(Error::AssumptionViolated(format!(
                "vanishing vertex normal at node {j}"
            )));
        }
        let kappa = kappa_vec[j].dot(omega) / omega_norm;
        let quot = if curve.is_axis_node(j) {
            -kappa
        } else {
            let r = curve.node(j).x;
            if r <= 0.0 {
                return Err(Error::AssumptionViolated(format!(
                    "nonpositive radius at node {j}"
                )));
            }
            omega.x / r
        };
        in_plane[j] = kappa;
        azimuthal[j] = quot;
        mean[j] = kappa - quot;
        gauss[j] = -kappa * quot;
    }
    Ok(CurvatureDiagnostics {
        in_plane,
        azimuthal,
        mean,
        gauss,
    })
}

/// Residuals of the contact angle conditions at the two endpoints of an
/// open curve, `None` for closed curves. Zero residual means the condition
/// holds exactly: for a cylinder contact, (-1)^p tau . e2 = rho; for a
/// plane contact, (-1)^p tau . e1 = rho; axis endpoints must be met
/// orthogonally (X_rho . e2 = 0); fixed endpoints impose nothing.
pub fn contact_angle_residual(curve: &DiscreteCurve) -> Result<Option<[f64; 2]>> {
    if curve.is_closed() {
        return Ok(None);
    }
    let (tangents, _) = curve.element_tangents_normals()?;
    let h = curve.h_ref();
    let mut out = [0.0; 2];
    for p in 0..2 {
        let kind = curve.endpoint_kind(p).expect("open curve");
        let e = if p == 0 { 0 } else { curve.n_elements() - 1 };
        let tau = tangents[e];
        let sign = if p == 0 { 1.0 } else { -1.0 };
        out[p] = match kind {
            BoundaryKind::CylinderSlide { rho } => sign * tau.y - rho,
            BoundaryKind::PlaneSlide { rho } => sign * tau.x - rho,
            BoundaryKind::Axis => {
                let (a, b) = curve.element_nodes(e);
                (curve.node(b).y - curve.node(a).y) / h
            }
            BoundaryKind::Fixed => 0.0,
        };
    }
    Ok(Some(out))
}

/// Count of sign alternations of a nodal field along the curve, the raw
/// statistic behind the oscillation detector for unstable schemes.
pub fn sign_alternations(values: &[f64], closed: bool) -> usize {
    let n = values.len();
    let mut count = 0;
    let pairs = if closed { n } else { n - 1 };
    for j in 0..pairs {
        let a = values[j];
        let b = values[(j + 1) % n];
        if a * b < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest-magnitude contact residual, 0 when there are no endpoints.
pub fn max_contact_residual(curve: &DiscreteCurve) -> Result<f64> {
    Ok(contact_angle_residual(curve)?
        .map(|r| r[0].abs().max(r[1].abs()))
        .unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generate::{nonuniform_semicircle, torus_circle, uniform_semicircle};
    use crate::mesh::BoundaryKind;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_energy_and_volume_converge() {
        // Unit sphere: area 4*pi, volume 4*pi/3.
        let exact_area = 4.0 * PI;
        let exact_vol = 4.0 * PI / 3.0;
        let mut prev_area_err = f64::MAX;
        let mut prev_vol_err = f64::MAX;
        for j in [16usize, 32, 64, 128] {
            let c = uniform_semicircle(1.0, j).unwrap();
            let area_err = (discrete_energy(&c).total - exact_area).abs();
            let vol_err = (enclosed_volume(&c).unwrap() - exact_vol).abs();
            // Observed order at least ~2 (errors drop by ~4x per doubling).
            assert!(area_err < prev_area_err / 3.5);
            assert!(vol_err < prev_vol_err / 3.5);
            prev_area_err = area_err;
            prev_vol_err = vol_err;
        }
        let c = uniform_semicircle(1.0, 256).unwrap();
        assert_relative_eq!(discrete_energy(&c).total, exact_area, max_relative = 1e-4);
        assert_relative_eq!(enclosed_volume(&c).unwrap(), exact_vol, max_relative = 1e-4);
    }

    #[test]
    fn torus_energy_and_volume() {
        // R = 1, r = 0.5: area 4 pi^2 R r = 2 pi^2, volume 2 pi^2 R r^2.
        let c = torus_circle(1.0, 0.5, 512).unwrap();
        assert_relative_eq!(
            discrete_energy(&c).total,
            2.0 * PI * PI,
            max_relative = 5e-5
        );
        assert_relative_eq!(
            enclosed_volume(&c).unwrap(),
            PI * PI / 2.0,
            max_relative = 5e-5
        );
    }

    #[test]
    fn plane_contact_energy_terms() {
        // Vertical unit segment at r = 1 with plane-slide endpoints and
        // rho = 1/2 at both: area 2*pi, plane term pi, total 3*pi.
        let nodes: Vec<Vec2> = (0..5).map(|j| Vec2::new(1.0, j as f64 / 4.0)).collect();
        let c = DiscreteCurve::open(
            nodes,
            BoundaryKind::PlaneSlide { rho: 0.5 },
            BoundaryKind::PlaneSlide { rho: 0.5 },
        )
        .unwrap();
        let e = discrete_energy(&c);
        assert_relative_eq!(e.area_term, 2.0 * PI, epsilon = 1e-12);
        assert_relative_eq!(e.plane_contact, PI, epsilon = 1e-12);
        assert_relative_eq!(e.cylinder_contact, 0.0, epsilon = 1e-15);
        assert_relative_eq!(e.total, 3.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn volume_sign_flips_with_orientation() {
        let c = torus_circle(1.0, 0.5, 64).unwrap();
        let mut rev: Vec<Vec2> = c.nodes().to_vec();
        rev.reverse();
        let c_rev = DiscreteCurve::closed(rev).unwrap();
        let v = enclosed_volume(&c).unwrap();
        let v_rev = enclosed_volume(&c_rev).unwrap();
        assert!(v > 0.0);
        assert_relative_eq!(v, -v_rev, epsilon = 1e-12);
    }

    #[test]
    fn volume_requires_closed_surface() {
        let nodes: Vec<Vec2> = (0..5).map(|j| Vec2::new(1.0, j as f64 / 4.0)).collect();
        let c = DiscreteCurve::open(nodes, BoundaryKind::Fixed, BoundaryKind::Fixed).unwrap();
        assert!(matches!(enclosed_volume(&c), Err(Error::OpenSurface)));
    }

    #[test]
    fn circle_curvature_exact_for_inscribed_polygons() {
        // The nodal curvature is the circumcircle curvature of three
        // consecutive nodes, so polygons inscribed in a circle of radius 2
        // recover -1/2 to machine precision, uniform or not.
        let c = crate::mesh::regular_polygon(Vec2::new(5.0, 0.0), 2.0, 64);
        let d = curvature_diagnostics(&c).unwrap();
        for j in 0..c.n_nodes() {
            assert_relative_eq!(d.in_plane[j], -0.5, epsilon = 1e-12);
        }
        let nodes = (0..48)
            .map(|k| {
                let t = k as f64 / 48.0;
                let th = 2.0 * PI * t + 0.1 * (2.0 * PI * t).cos();
                Vec2::new(5.0 + 2.0 * th.cos(), 2.0 * th.sin())
            })
            .collect();
        let c = DiscreteCurve::closed(nodes).unwrap();
        let d = curvature_diagnostics(&c).unwrap();
        for j in 0..c.n_nodes() {
            assert_relative_eq!(d.in_plane[j], -0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn ellipse_curvature_second_order() {
        // On an ellipse the curvature varies, so the refinement study sees
        // the genuine convergence order (>= ~1.9 observed).
        let (a, b, cx) = (2.0, 1.0, 5.0);
        let exact = |t: f64| {
            -a * b / (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).powf(1.5)
        };
        let mut prev = f64::MAX;
        for j in [16usize, 32, 64, 128, 256] {
            let nodes: Vec<Vec2> = (0..j)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / j as f64;
                    Vec2::new(cx + a * t.cos(), b * t.sin())
                })
                .collect();
            let c = DiscreteCurve::closed(nodes).unwrap();
            let d = curvature_diagnostics(&c).unwrap();
            let err = (0..j)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / j as f64;
                    (d.in_plane[k] - exact(t)).abs()
                })
                .fold(0.0, f64::max);
            assert!(err < prev / 3.5, "err {err} prev {prev}");
            prev = err;
        }
        assert!(prev < 1.5e-3);
    }

    #[test]
    fn sphere_mean_and_gauss_curvature() {
        for radius in [1.0, 2.0] {
            let c = uniform_semicircle(radius, 128).unwrap();
            let d = curvature_diagnostics(&c).unwrap();
            for j in 0..c.n_nodes() {
                assert_relative_eq!(d.mean[j], -2.0 / radius, max_relative = 2e-3);
                assert_relative_eq!(d.gauss[j], 1.0 / (radius * radius), max_relative = 4e-3);
            }
        }
    }

    #[test]
    fn axis_node_azimuthal_is_negated_in_plane() {
        let c = nonuniform_semicircle(1.0, 32).unwrap();
        let d = curvature_diagnostics(&c).unwrap();
        for j in [0, c.n_nodes() - 1] {
            assert_eq!(d.azimuthal[j], -d.in_plane[j]);
            assert_relative_eq!(d.mean[j], 2.0 * d.in_plane[j], epsilon = 1e-15);
        }
    }

    #[test]
    fn straight_segment_interior_curvature_zero() {
        let nodes: Vec<Vec2> = (0..6).map(|j| Vec2::new(1.0, j as f64)).collect();
        let c = DiscreteCurve::open(nodes, BoundaryKind::Fixed, BoundaryKind::Fixed).unwrap();
        let d = curvature_diagnostics(&c).unwrap();
        for j in 1..c.n_nodes() - 1 {
            assert_relative_eq!(d.in_plane[j], 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn contact_residuals_basic() {
        // Axis endpoints with exactly horizontal end elements: residual 0.
        let c = DiscreteCurve::open(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(0.5, 0.0),
                Vec2::new(0.5, 1.0),
                Vec2::new(0.0, 1.0),
            ],
            BoundaryKind::Axis,
            BoundaryKind::Axis,
        )
        .unwrap();
        let r = contact_angle_residual(&c).unwrap().unwrap();
        assert_eq!(r[0], 0.0);
        assert_eq!(r[1], 0.0);

        // Plane-slide endpoint p = 1 with rho = 0 and tau = (1, 0):
        // residual -tau.e1 = -1.
        let nodes: Vec<Vec2> = (0..5).map(|j| Vec2::new(1.0 + j as f64, 0.0)).collect();
        let c = DiscreteCurve::open(
            nodes,
            BoundaryKind::Fixed,
            BoundaryKind::PlaneSlide { rho: 0.0 },
        )
        .unwrap();
        let r = contact_angle_residual(&c).unwrap().unwrap();
        assert_relative_eq!(r[1], -1.0, epsilon = 1e-15);

        let c = torus_circle(1.0, 0.5, 16).unwrap();
        assert!(contact_angle_residual(&c).unwrap().is_none());
    }

    #[test]
    fn grim_reaper_profile_contact_residual_vanishes() {
        // Travelling-wave profile with rho = -1/2 at both plane contacts:
        // the exact profile satisfies the angle condition.
        let j = 64;
        let nodes: Vec<Vec2> = (0..=j)
            .map(|k| {
                let rho = k as f64 / j as f64;
                let x = -(3.0 / PI) * ((PI / 3.0) * (rho - 0.5)).cos().ln() + 1.0;
                Vec2::new(x, rho)
            })
            .collect();
        let c = DiscreteCurve::open(
            nodes,
            BoundaryKind::PlaneSlide { rho: -0.5 },
            BoundaryKind::PlaneSlide { rho: -0.5 },
        )
        .unwrap();
        let r = contact_angle_residual(&c).unwrap().unwrap();
        // Discrete tangents differ from the exact profile tangent by O(h).
        assert!(r[0].abs() < 0.02, "residual {}", r[0]);
        assert!(r[1].abs() < 0.02, "residual {}", r[1]);
    }

    #[test]
    fn energy_and_volume_translation_invariance() {
        let c = torus_circle(1.0, 0.5, 48).unwrap();
        let shifted = c
            .with_nodes(c.nodes().iter().map(|p| *p + Vec2::new(0.0, 3.7)).collect())
            .unwrap();
        assert_relative_eq!(
            discrete_energy(&c).total,
            discrete_energy(&shifted).total,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            enclosed_volume(&c).unwrap(),
            enclosed_volume(&shifted).unwrap(),
            epsilon = 1e-12
        );
    }
}
