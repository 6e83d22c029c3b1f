//! Standardized convolution estimator against its Gaussian limit.
//!
//! ```bash
//! cargo run --release --example normality
//! ```

use smallnoise::experiments::{distribution_check, MonteCarlo};
use smallnoise::kernels::{make_kernel, KernelFamily};
use smallnoise::{ModelSpec, Multiplier, ThetaFamily};

fn main() -> smallnoise::Result<()> {
    let spec = ModelSpec::additive(Multiplier::new(ThetaFamily::Constant { c: 0.0 }, 0.0, 1), 1.0, 1.0);
    let kernel = make_kernel(KernelFamily::Epanechnikov, 1)?;
    let d = distribution_check(&spec, &kernel, 0.005, 0.5, &MonteCarlo::new(1000, 3))?;
    println!("α = {:.4}, φ = {:.4}, {} steps", d.alpha, d.bandwidth, d.n_steps);
    println!("reference variance ν∫G² = {:.4}", d.reference_variance);
    println!(
        "sample mean {:+.4}, sample variance {:.4} (ratio {:.4})",
        d.sample_mean, d.sample_variance, d.variance_ratio
    );
    println!("KS D = {:.4}, p = {:.4}", d.ks.statistic, d.ks.p_value);
    println!("verdict: {:?}", d.passed);
    Ok(())
}
