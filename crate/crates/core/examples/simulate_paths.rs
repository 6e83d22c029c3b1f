//! Simulates a few paths with Ornstein-Uhlenbeck driven volatility and
//! prints how far each ends from the noiseless limit.
//!
//! ```bash
//! cargo run --release --example simulate_paths
//! ```

use smallnoise::model::limit_path;
use smallnoise::simulate::{noise_sup_functional, simulate_ensemble, write_path_csv};
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
        2.0,
    );
    spec.sigma1 = ScalarField2::LinearGrowth { kappa: 0.5 };
    spec.growth_k = 0.5;
    spec.sigma2 = ScalarField2::CosOfY;
    spec.y = YDynamics::Ou {
        a: 2.0,
        b: 1.0,
        y0: 0.0,
    };

    let grid = PathGrid::new(spec.horizon, 2000)?;
    let limit = limit_path(&spec, &grid)?;
    let ensemble = simulate_ensemble(&spec, &grid, 0.05, 5, 42)?;

    println!("x_T (limit) = {:.6}", limit[grid.n_steps]);
    for (i, p) in ensemble.paths.iter().enumerate() {
        println!(
            "replicate {i}: X_T = {:.6}, |X_T - x_T| = {:.3e}, sup|V| = {:.4}",
            p.x[grid.n_steps],
            (p.x[grid.n_steps] - limit[grid.n_steps]).abs(),
            noise_sup_functional(p, &spec)
        );
    }

    let mut csv = Vec::new();
    write_path_csv(&mut csv, &[(Some(0), &ensemble.paths[0])])?;
    let text = String::from_utf8(csv).unwrap();
    println!("\nfirst CSV rows:");
    for line in text.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
