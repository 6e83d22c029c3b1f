//! Builds kernels of increasing order and prints their moments.
//!
//! ```bash
//! cargo run --release --example kernel_moments
//! ```

use smallnoise::kernels::{kernel_moment, make_kernel, KernelFamily, Moment};

fn main() -> smallnoise::Result<()> {
    for (family, order) in [
        (KernelFamily::Epanechnikov, 1),
        (KernelFamily::Triangular, 1),
        (
            KernelFamily::Rectangular {
                lower: -0.25,
                upper: 0.75,
            },
            0,
        ),
    ] {
        let g = make_kernel(family, order)?;
        println!(
            "{:<12} order {order}: ∫G² = {:.6}, ∫u^{}G = {:+.6}",
            g.family.name(),
            kernel_moment(&g, 0, Moment::Squared),
            order + 1,
            kernel_moment(&g, order + 1, Moment::Plain)
        );
    }

    println!("\npolynomial kernels on [-1, 1]:");
    for order in 0..=6 {
        let g = make_kernel(KernelFamily::PolynomialOrderK, order)?;
        let worst = (1..=order)
            .map(|j| kernel_moment(&g, j, Moment::Plain).abs())
            .fold(0.0f64, f64::max);
        println!(
            "order {order}: G(0) = {:8.4}, ∫G² = {:8.4}, max |∫u^jG| = {worst:.1e}, ∫u^{}G = {:+.5}",
            g.eval(0.0),
            kernel_moment(&g, 0, Moment::Squared),
            order + 1,
            kernel_moment(&g, order + 1, Moment::Plain)
        );
    }
    Ok(())
}
