use axiflow::harness::fixtures::*;
use axiflow::harness::{run_simulation, TerminalStatus};
use axiflow::schemes::{FlowSpec, SchemeTag};

fn main() {
    let t0 = std::time::Instant::now();
    let closing = run_simulation(&torus_closing_config()).unwrap();
    println!(
        "torus r=0.7 closing: {:?} at t = {:.4} ({:.1?})",
        closing.status, closing.stop_time, t0.elapsed()
    );

    let t0 = std::time::Instant::now();
    let shrink = run_simulation(&torus_shrinking_config(FlowSpec::mcf(SchemeTag::A), 0.135)).unwrap();
    println!(
        "torus r=0.5 scheme A: {:?} at t = {:.4}, ratio {:.3} ({:.1?})",
        shrink.status,
        shrink.stop_time,
        shrink.final_curve.element_ratio().unwrap(),
        t0.elapsed()
    );

    let t0 = std::time::Instant::now();
    let b = run_simulation(&torus_shrinking_config(FlowSpec::mcf(SchemeTag::B), 0.13)).unwrap();
    println!(
        "torus r=0.5 scheme B: {:?}, first oscillation at {:?} ({:.1?})",
        b.status, b.first_oscillation, t0.elapsed()
    );

    let t0 = std::time::Instant::now();
    let pinch = run_simulation(&cylinder_pinch_config()).unwrap();
    println!(
        "cylinder pinch: {:?} at t = {:.4} ({:.1?})",
        pinch.status, pinch.stop_time, t0.elapsed()
    );

    let t0 = std::time::Instant::now();
    let reaper = run_simulation(&grim_reaper_config(20.0)).unwrap();
    let times: Vec<f64> = reaper.diagnostics.iter().map(|d| d.time).collect();
    let lows: Vec<f64> = reaper.diagnostics.iter().map(|d| d.min_r).collect();
    let speed = fit_speed(&times, &lows, 0.5);
    println!(
        "grim reaper: {:?}, speed {:.5} vs pi/3 = {:.5} rel {:.4} ({:.1?})",
        reaper.status,
        speed,
        std::f64::consts::PI / 3.0,
        (speed - std::f64::consts::PI / 3.0).abs() / (std::f64::consts::PI / 3.0),
        t0.elapsed()
    );

    let t0 = std::time::Instant::now();
    let imcf = run_simulation(&imcf_torus_config()).unwrap();
    println!(
        "imcf torus: {:?} at t = {:.4} [{}] ({:.1?})",
        imcf.status, imcf.stop_time, imcf.detail, t0.elapsed()
    );
    assert!(imcf.status != TerminalStatus::Completed);

    let t0 = std::time::Instant::now();
    let torus_cons = run_simulation(&torus_conserved_config()).unwrap();
    println!(
        "torus conserved: {:?} at t = {:.4}, drift {:.3e} ({:.1?})",
        torus_cons.status,
        torus_cons.stop_time,
        torus_cons.max_volume_drift.unwrap_or(f64::NAN),
        t0.elapsed()
    );

    let t0 = std::time::Instant::now();
    let gauss = run_simulation(&gauss_cigar_config(0.01)).unwrap();
    println!(
        "gauss cigar: {:?}, energy {:.4} -> {:.4} ({:.1?})",
        gauss.status,
        gauss.diagnostics.first().unwrap().energy_total,
        gauss.diagnostics.last().unwrap().energy_total,
        t0.elapsed()
    );
}
