//! File outputs: diagnostics and convergence CSVs, curve snapshots, and an
//! SVG overlay of the generating curves. Floats are written in shortest
//! round-trip form, so reruns with the same configuration produce
//! bit-identical files.

use std::fs;
use std::path::Path;

use crate::error::Error;
use crate::harness::converge::ConvergenceReport;
use crate::harness::run::SimOutcome;
use crate::mesh::{io as curve_io, DiscreteCurve};
use crate::Result;

pub const DIAGNOSTICS_HEADER: &str =
    "time,energy_total,energy_area,volume,ratio,min_r,min_element_length,max_contact_residual";

pub fn diagnostics_csv(outcome: &SimOutcome) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for row in &outcome.diagnostics {
        let volume = row
            .volume
            .map(|v| v.to_string())
            .unwrap_or_else(|| "nan".into());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.time,
            row.energy_total,
            row.energy_area,
            volume,
            row.ratio,
            row.min_r,
            row.min_element_length,
            row.max_contact_residual
        ));
    }
    out
}

pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("j,h_gamma0,error,eoc,status\n");
    for row in &report.rows {
        let error = row
            .error
            .map(|v| v.to_string())
            .unwrap_or_else(|| "nan".into());
        let eoc = row
            .eoc
            .map(|v| v.to_string())
            .unwrap_or_else(|| "nan".into());
        out.push_str(&format!(
            "{},{},{},{},{:?}\n",
            row.j, row.h_gamma0, error, eoc, row.status
        ));
    }
    out
}

fn write(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    fs::write(path, content).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Write diagnostics, snapshots (named by zero-padded step index), the
/// optional SVG overlay, and the optional first-system dump into `dir`.
pub fn emit_outputs(outcome: &SimOutcome, dir: &Path, svg: bool) -> Result<()> {
    write(&dir.join("diagnostics.csv"), &diagnostics_csv(outcome))?;
    for (step, time, curve) in &outcome.snapshots {
        let mut text = format!("# t = {time}\n");
        text.push_str(&curve_io::serialize(curve));
        write(&dir.join(format!("snapshots/curve_{step:06}.txt")), &text)?;
    }
    if svg {
        let curves: Vec<(f64, &DiscreteCurve)> = outcome
            .snapshots
            .iter()
            .map(|(_, t, c)| (*t, c))
            .collect();
        write(&dir.join("curves.svg"), &svg_overlay(&curves))?;
    }
    if let Some(dump) = &outcome.first_system_dump {
        write(&dir.join("system_step0.txt"), dump)?;
    }
    Ok(())
}

pub fn emit_convergence(report: &ConvergenceReport, dir: &Path) -> Result<()> {
    write(&dir.join("convergence.csv"), &convergence_csv(report))
}

/// Minimal SVG with one polyline per snapshot, axes, and time labels.
pub fn svg_overlay(curves: &[(f64, &DiscreteCurve)]) -> String {
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (0.0f64, 1e-9f64, 0.0f64, 1e-9f64);
    for (_, c) in curves {
        for p in c.nodes() {
            min_x = min_x.min(p.x);
            max_x = max_x.max(p.x);
            min_y = min_y.min(p.y);
            max_y = max_y.max(p.y);
        }
    }
    let pad = 0.05 * ((max_x - min_x) + (max_y - min_y)).max(1e-9);
    min_x -= pad;
    max_x += pad;
    min_y -= pad;
    max_y += pad;
    let width = 640.0;
    let height = width * (max_y - min_y) / (max_x - min_x);
    let sx = width / (max_x - min_x);
    let sy = height / (max_y - min_y);
    let tx = |x: f64| (x - min_x) * sx;
    let ty = |y: f64| height - (y - min_y) * sy;

    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.1} {height:.1}\">\n"
    );
    // Rotation axis (r = 0) and the z = 0 line.
    out.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"0\" x2=\"{:.2}\" y2=\"{height:.2}\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n",
        tx(0.0),
        tx(0.0)
    ));
    out.push_str(&format!(
        "<line x1=\"0\" y1=\"{:.2}\" x2=\"{width:.2}\" y2=\"{:.2}\" stroke=\"#ccc\"/>\n",
        ty(0.0),
        ty(0.0)
    ));
    let n = curves.len().max(1);
    for (i, (time, curve)) in curves.iter().enumerate() {
        let shade = 30 + (200 * i) / n;
        let mut points = String::new();
        for p in curve.nodes() {
            points.push_str(&format!("{:.2},{:.2} ", tx(p.x), ty(p.y)));
        }
        if curve.is_closed() {
            let p = curve.node(0);
            points.push_str(&format!("{:.2},{:.2}", tx(p.x), ty(p.y)));
        }
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"rgb({shade},{shade},220)\" stroke-width=\"1\" points=\"{points}\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"4\" y=\"{:.1}\" font-size=\"10\" fill=\"rgb({shade},{shade},220)\">t = {time}</text>\n",
            12.0 + 11.0 * i as f64
        ));
    }
    out.push_str("</svg>\n");
    out
}
