//! Deviation of X from the limit path: the pathwise bound on every grid
//! point, and the ε² scaling of the mean-square deviation.
//!
//! ```bash
//! cargo run --release --example deviation_bounds
//! ```

use smallnoise::experiments::{check_deviation_bounds, MonteCarlo};
use smallnoise::{ModelSpec, Multiplier, PathGrid, ScalarField2, ThetaFamily, YDynamics};

fn main() -> smallnoise::Result<()> {
    let mut spec = ModelSpec::additive(
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
        1.0,
    );
    spec.sigma1 = ScalarField2::LinearGrowth { kappa: 0.5 };
    spec.growth_k = 0.5;
    spec.sigma2 = ScalarField2::CosOfY;
    spec.y = YDynamics::Ou {
        a: 1.0,
        b: 1.0,
        y0: 0.0,
    };

    let grid = PathGrid::new(1.0, 1000)?;
    let r = check_deviation_bounds(&spec, &grid, &[0.2, 0.1, 0.05, 0.025], 0.1, &MonteCarlo::new(500, 1))?;
    let p = &r.pathwise;
    println!(
        "pathwise: {} violations in {} paths × {} points (slack {:.2e}, worst ratio {:.4})",
        p.violations, p.n_paths, p.n_points, p.slack, p.max_ratio
    );
    for (e, m) in r.mse.epsilons.iter().zip(&r.mse.sup_mse) {
        println!("ε = {e:<6} sup_t E(X - x)² = {m:.4e}");
    }
    println!("fitted exponent {:.4} (expected 2)", r.mse.fit.slope);
    Ok(())
}
