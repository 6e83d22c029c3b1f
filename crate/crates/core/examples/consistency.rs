//! Risk along halving ε for a consistent bandwidth rule, and the rejection
//! of one that is not.
//!
//! ```bash
//! cargo run --release --example consistency
//! ```

use smallnoise::experiments::{consistency_sweep, BandwidthRule, EvalWindow, MonteCarlo};
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
    let eps = [0.2, 0.1, 0.05, 0.025, 0.0125];
    let mc = MonteCarlo::new(100, 2);

    let r = consistency_sweep(
        &spec,
        &kernel,
        BandwidthRule::Power { exponent: 0.5 },
        &eps,
        &window,
        &mc,
    )?;
    for (e, risk) in eps.iter().zip(&r.curve.risks) {
        println!("ε = {e:<7} risk {risk:.4e}");
    }
    println!("monotone: {}, last/first = {:.4}", r.monotone, r.reduction);

    match consistency_sweep(
        &spec,
        &kernel,
        BandwidthRule::Power { exponent: 1.0 },
        &eps,
        &window,
        &mc,
    ) {
        Err(e) => println!("φ = ε: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
