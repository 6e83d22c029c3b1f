//! Risk of the stopped-process estimator over a decade of ε, split into
//! the part from paths that cross the threshold.
//!
//! ```bash
//! cargo run --release --example rate_alt
//! ```

use smallnoise::experiments::{risk_curve_alt, EvalWindow, MonteCarlo};
use smallnoise::kernels::{make_kernel, KernelFamily};
use smallnoise::{ModelSpec, Multiplier, ThetaFamily};

fn main() -> smallnoise::Result<()> {
    let spec = ModelSpec::additive(
        Multiplier::new(
            ThetaFamily::Trig {
                a: 1.0,
                b: 0.5,
                omega: 2.0,
            },
            1.5,
            1,
        ),
        1.0,
        3.0,
    );
    let kernel = make_kernel(KernelFamily::Epanechnikov, 1)?;
    let window = EvalWindow::default_for(spec.horizon);

    // a decaying path and large ε: the threshold ½x₀e^{-LT} is often crossed
    let decaying = ModelSpec::additive(Multiplier::new(ThetaFamily::Constant { c: -1.0 }, 1.0, 1), 1.0, 2.0);
    let narrow = EvalWindow { a: 0.8, b: 1.2 };
    let c = risk_curve_alt(&decaying, &kernel, &[0.4, 0.2, 0.1], &narrow, &MonteCarlo::new(400, 9))?;
    println!("decaying path, large ε:");
    for i in 0..c.epsilons.len() {
        println!(
            "  ε = {:.2}: risk {:.4e}, failure frequency {:.3}, from failures {:.4e}",
            c.epsilons[i],
            c.risks[i],
            c.failure_frequency.as_ref().unwrap()[i],
            c.failure_risk.as_ref().unwrap()[i]
        );
    }

    let eps: Vec<f64> = (0..4).map(|i| 0.1 * 10f64.powf(-(i as f64) / 3.0)).collect();
    let c = risk_curve_alt(&spec, &kernel, &eps, &window, &MonteCarlo::new(200, 9))?;
    println!("small ε:");
    for ((e, r), bw) in c.epsilons.iter().zip(&c.risks).zip(&c.bandwidths) {
        println!("  ε = {e:.4}, φ = {bw:.4}: risk {r:.4e}");
    }
    println!("slope {:.3} ± {:.3}", c.fit.slope, c.fit.slope_se);
    Ok(())
}
