//! The stopped-process estimator: θ̃(t) from the increments dX/X of a path
//! kept above ½x₀e^{-LT}, compared with the convolution estimator.
//!
//! ```bash
//! cargo run --release --example stopped_estimator
//! ```

use smallnoise::estimate::{build_stopped_process, estimate_theta_alt, estimate_theta_main};
use smallnoise::experiments::{EvalWindow, StepPolicy};
use smallnoise::kernels::{bandwidth_alt, bandwidth_main, make_kernel, KernelFamily};
use smallnoise::simulate::simulate_path;
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
    let eps = 0.01;
    let (bw_alt, bw_main) = (
        bandwidth_alt(eps, spec.theta.rho())?,
        bandwidth_main(eps, spec.theta.k)?,
    );
    let grid = StepPolicy::default().grid_for(spec.horizon, bw_alt.min(bw_main), &kernel);
    let path = simulate_path(&spec, &grid, eps, 11)?;
    let stopped = build_stopped_process(&path, &spec)?;

    println!(
        "threshold {:.4}, event A holds: {}",
        stopped.threshold, stopped.event_a_holds
    );
    println!("φ_alt = {bw_alt:.4}, φ_main = {bw_main:.4}, {} steps", grid.n_steps);
    for t in EvalWindow::default_for(spec.horizon).lattice() {
        println!(
            "t = {t:.2}: θ̃ = {:+.4}, θ̂ = {:+.4}, θ = {:+.4}",
            estimate_theta_alt(&stopped, &kernel, bw_alt, t)?,
            estimate_theta_main(&path, &kernel, bw_main, t)?,
            spec.theta.value(t)
        );
    }
    Ok(())
}
