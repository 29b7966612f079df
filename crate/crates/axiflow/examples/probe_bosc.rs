use axiflow::geometry::{curvature_diagnostics, sign_alternations};
use axiflow::harness::generate::torus_circle;
use axiflow::schemes::{step_with, FlowSpec, SchemeTag, StepContext};

fn main() {
    for j in [32usize, 64, 128, 256] {
        for dt in [2e-2, 1e-2, 2e-3] {
            let mut curve = torus_circle(1.0, 0.5, j).unwrap();
            let spec = FlowSpec::mcf(SchemeTag::B);
            let mut t: f64 = 0.0;
            let mut max_alt = 0;
            let mut failed = String::new();
            while t < 0.13 - 1e-9 {
                match step_with(&spec, &curve, dt, &StepContext::default()) {
                    Ok(res) => {
                        curve = res.curve;
                        t += dt;
                    }
                    Err(e) => {
                        failed = e.to_string();
                        break;
                    }
                }
                if let Ok(d) = curvature_diagnostics(&curve) {
                    max_alt = max_alt.max(sign_alternations(&d.mean, true));
                }
            }
            println!("B J={j} dt={dt:.0e}: t={t:.3} max_alt={max_alt} (J/4={}) {failed}", j / 4);
        }
    }
}
