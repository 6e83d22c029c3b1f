//! Risk of the convolution estimator over a decade of ε, and the ε = 0
//! bias sweep that isolates the kernel order.
//!
//! ```bash
//! cargo run --release --example rate_main
//! ```

use smallnoise::experiments::{bias_sweep, risk_curve_main, EvalWindow, MonteCarlo};
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
    let eps: Vec<f64> = (0..4).map(|i| 0.1 * 10f64.powf(-(i as f64) / 3.0)).collect();

    let c = risk_curve_main(&spec, &kernel, &eps, &window, &MonteCarlo::new(200, 5))?;
    for ((e, r), bw) in c.epsilons.iter().zip(&c.risks).zip(&c.bandwidths) {
        println!("ε = {e:.4}, φ = {bw:.4}: risk {r:.4e}");
    }
    println!(
        "slope {:.3} ± {:.3}, theory {:.3}\n",
        c.fit.slope,
        c.fit.slope_se,
        c.theoretical_slope.unwrap()
    );

    let b = bias_sweep(&spec, &kernel, &[0.2, 0.1, 0.05, 0.025], &window, 1 << 18)?;
    println!(
        "noiseless bias² slope in φ: {:.3} (theory {})",
        b.fit.slope, b.theoretical_slope
    );
    Ok(())
}
