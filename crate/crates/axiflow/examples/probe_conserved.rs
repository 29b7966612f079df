use axiflow::harness::fixtures::*;
use axiflow::harness::run_simulation;
use axiflow::schemes::IntegrationVariant;

fn main() {
    for (name, flow) in [
        ("A_fV", conserved_flow_a()),
        ("CstarV_lumped", conserved_flow_c_star(IntegrationVariant::MassLumped)),
        ("CstarV_exact", conserved_flow_c_star(IntegrationVariant::Exact)),
    ] {
        let t0 = std::time::Instant::now();
        let outcome = run_simulation(&conserved_sphere_config(flow)).unwrap();
        let ratio = outcome.final_curve.element_ratio().unwrap();
        println!(
            "{name}: status {:?} ratio {:.4} drift {:.3e} newton_max {} elapsed {:.1?}",
            outcome.status,
            ratio,
            outcome.max_volume_drift.unwrap_or(f64::NAN),
            outcome.max_newton_iterations,
            t0.elapsed()
        );
    }
}
