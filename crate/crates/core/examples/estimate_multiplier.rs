//! Estimates θ(t) from one path with the convolution estimator at the
//! rate-optimal bandwidth, for a few noise levels.
//!
//! ```bash
//! cargo run --release --example estimate_multiplier
//! ```

use smallnoise::estimate::{estimate_series, EstimatorKind, StateDivisor};
use smallnoise::experiments::{EvalWindow, StepPolicy};
use smallnoise::kernels::{bandwidth_main, make_kernel, KernelFamily};
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
    let times = EvalWindow::default_for(spec.horizon).lattice();

    for eps in [0.1, 0.01, 0.001] {
        let bw = bandwidth_main(eps, spec.theta.k)?;
        let grid = StepPolicy::default().grid_for(spec.horizon, bw, &kernel);
        let path = simulate_path(&spec, &grid, eps, 7)?;
        let s = estimate_series(
            &path,
            &spec,
            &kernel,
            bw,
            &times,
            EstimatorKind::Main,
            StateDivisor::Observed,
        )?;
        println!("ε = {eps}, φ = {bw:.4}, {} steps", grid.n_steps);
        for (t, th) in times.iter().zip(&s.theta_hat).step_by(2) {
            println!("  t = {t:.2}: θ̂ = {th:+.4}, θ = {:+.4}", spec.theta.value(*t));
        }
    }
    Ok(())
}
