//! Euler–Maruyama simulation of `(W, Y, X)` and reproducible ensembles.

use std::io::{Read, Write};
use std::path::Path as FsPath;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, PathGrid, YDynamics};
use crate::rng::{path_rng, replicate_seed};

/// Paths are abandoned once `|X|` exceeds this.
pub const OVERFLOW_GUARD: f64 = 1e12;

/// One sampled path on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub grid: PathGrid,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub epsilon: f64,
    pub seed: u64,
}

impl Path {
    #[inline]
    pub fn increment(&self, i: usize) -> f64 {
        self.x[i + 1] - self.x[i]
    }

    #[inline]
    pub fn dw(&self, i: usize) -> f64 {
        self.w[i + 1] - self.w[i]
    }
}

/// Simulates one path. Deterministic in `(spec, grid, epsilon, seed)`.
pub fn simulate_path(spec: &ModelSpec, grid: &PathGrid, epsilon: f64, seed: u64) -> Result<Path> {
    PathSimulator::new(spec, grid).simulate(epsilon, seed)
}

/// Runs the recursion on caller-supplied Brownian increments.
pub fn simulate_with_increments(
    spec: &ModelSpec,
    grid: &PathGrid,
    epsilon: f64,
    seed: u64,
    dw: &[f64],
) -> Result<Path> {
    PathSimulator::new(spec, grid).run(epsilon, seed, dw)
}

/// Euler–Maruyama stepper with θ tabulated on the grid, for repeated use
/// across replicates.
pub struct PathSimulator<'a> {
    spec: &'a ModelSpec,
    grid: PathGrid,
    theta: Vec<f64>,
}

impl<'a> PathSimulator<'a> {
    pub fn new(spec: &'a ModelSpec, grid: &PathGrid) -> Self {
        let theta = (0..grid.n_steps).map(|i| spec.theta.value(grid.time(i))).collect();
        Self {
            spec,
            grid: *grid,
            theta,
        }
    }

    pub fn grid(&self) -> &PathGrid {
        &self.grid
    }

    pub fn simulate(&self, epsilon: f64, seed: u64) -> Result<Path> {
        let mut rng = path_rng(seed);
        let sd = self.grid.dt().sqrt();
        let dw: Vec<f64> = (0..self.grid.n_steps)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sd * z
            })
            .collect();
        self.run(epsilon, seed, &dw)
    }

    pub fn run(&self, epsilon: f64, seed: u64, dw: &[f64]) -> Result<Path> {
        let (spec, grid) = (self.spec, &self.grid);
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Precondition(format!(
                "epsilon must be non-negative, got {epsilon}"
            )));
        }
        if dw.len() != grid.n_steps {
            return Err(Error::Precondition(format!(
                "expected {} increments, got {}",
                grid.n_steps,
                dw.len()
            )));
        }
        let n = grid.n_steps;
        let dt = grid.dt();
        let mut x = Vec::with_capacity(n + 1);
        let mut y = Vec::with_capacity(n + 1);
        let mut w = Vec::with_capacity(n + 1);
        x.push(spec.x0);
        y.push(spec.y.initial());
        w.push(0.0);

        // exact OU transition: mean factor and conditional sd per unit of dW/√dt
        let ou = match spec.y {
            YDynamics::Ou { a, b, .. } if a > 0.0 => {
                let decay = (-a * dt).exp();
                Some((decay, b * ((1.0 - decay * decay) / (2.0 * a * dt)).sqrt()))
            }
            YDynamics::Ou { b, .. } => Some((1.0, b)),
            _ => None,
        };
        let unit_noise = spec.sigma1.is_one() && spec.sigma2.is_one();

        for i in 0..n {
            let (xi, yi) = (x[i], y[i]);
            let coeff = if unit_noise {
                1.0
            } else {
                spec.diffusion(grid.time(i), xi, yi)
            };
            let next = xi + self.theta[i] * xi * dt + epsilon * coeff * dw[i];
            if !next.is_finite() || next.abs() > OVERFLOW_GUARD {
                return Err(Error::Diverged {
                    step: i + 1,
                    replicate: None,
                });
            }
            x.push(next);
            let wn = w[i] + dw[i];
            w.push(wn);
            y.push(match (&spec.y, ou) {
                (_, Some((decay, scale))) => decay * yi + scale * dw[i],
                (YDynamics::Wiener, _) => wn,
                _ => yi,
            });
        }
        Ok(Path {
            grid: *grid,
            x,
            y,
            w,
            epsilon,
            seed,
        })
    }
}

/// Independent replicates sharing a model.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub spec: ModelSpec,
    pub paths: Vec<Path>,
    pub master_seed: u64,
}

pub fn simulate_ensemble(
    spec: &ModelSpec,
    grid: &PathGrid,
    epsilon: f64,
    n_paths: usize,
    master_seed: u64,
) -> Result<Ensemble> {
    if n_paths == 0 {
        return Err(Error::Precondition("n_paths must be at least 1".into()));
    }
    let sim = PathSimulator::new(spec, grid);
    let paths = par_replicates(n_paths, master_seed, |_, seed| sim.simulate(epsilon, seed))?;
    Ok(Ensemble {
        spec: spec.clone(),
        paths,
        master_seed,
    })
}

/// Maps `f(index, replicate_seed)` over replicates in parallel. The output is
/// in replicate order; divergence errors are tagged with the replicate index.
pub fn par_replicates<T, F>(n: usize, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            f(i, replicate_seed(master_seed, i as u64)).map_err(|e| match e {
                Error::Diverged { step, .. } => Error::Diverged {
                    step,
                    replicate: Some(i),
                },
                other => other,
            })
        })
        .collect()
}

/// `V_i = Σ_{j<i} σ₁(t_j,X_j) σ₂(t_j,Y_j) ΔW_j` on the grid.
pub fn noise_integral(path: &Path, spec: &ModelSpec) -> Vec<f64> {
    let mut v = Vec::with_capacity(path.x.len());
    let mut acc = 0.0;
    v.push(0.0);
    for i in 0..path.grid.n_steps {
        acc += spec.diffusion(path.grid.time(i), path.x[i], path.y[i]) * path.dw(i);
        v.push(acc);
    }
    v
}

/// `max_{j≤i} |V_j|` for every grid index.
pub fn noise_running_sup(path: &Path, spec: &ModelSpec) -> Vec<f64> {
    let mut best = 0.0f64;
    noise_integral(path, spec)
        .into_iter()
        .map(|v| {
            best = best.max(v.abs());
            best
        })
        .collect()
}

/// `max_i |V_i|`, the discrete running supremum of the noise integral at `T`.
pub fn noise_sup_functional(path: &Path, spec: &ModelSpec) -> f64 {
    noise_integral(path, spec).iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    replicate: Option<usize>,
    t: f64,
    w: f64,
    y: f64,
    x: f64,
}

/// Writes `t,w,y,x` rows, prefixed by a `replicate` column when given.
pub fn write_path_csv<W: Write>(out: W, paths: &[(Option<usize>, &Path)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for (replicate, path) in paths {
        for i in 0..path.x.len() {
            wtr.serialize(Row {
                replicate: *replicate,
                t: path.grid.time(i),
                w: path.w[i],
                y: path.y[i],
                x: path.x[i],
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Writes an ensemble either as one file with a replicate column or as one
/// file per replicate (`replicate_00000.csv`, …) under `dir`.
pub fn write_ensemble(dir: &FsPath, ensemble: &Ensemble, per_replicate: bool) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    if per_replicate {
        let mut written = Vec::with_capacity(ensemble.paths.len());
        for (i, p) in ensemble.paths.iter().enumerate() {
            let file = dir.join(format!("replicate_{i:05}.csv"));
            write_path_csv(std::fs::File::create(&file)?, &[(None, p)])?;
            written.push(file);
        }
        Ok(written)
    } else {
        let file = dir.join("paths.csv");
        let rows: Vec<_> = ensemble.paths.iter().enumerate().map(|(i, p)| (Some(i), p)).collect();
        write_path_csv(std::fs::File::create(&file)?, &rows)?;
        Ok(vec![file])
    }
}

/// Reads a path written by [`write_path_csv`]. With a replicate column,
/// `replicate` selects which one (default 0). The grid is rebuilt from the
/// time column, which must be uniform.
pub fn read_path_csv<R: Read>(input: R, replicate: Option<usize>) -> Result<Path> {
    let mut rdr = csv::Reader::from_reader(input);
    let want = replicate.unwrap_or(0);
    let (mut t, mut w, mut y, mut x) = (vec![], vec![], vec![], vec![]);
    for row in rdr.deserialize() {
        let row: Row = row?;
        if row.replicate.is_some_and(|r| r != want) {
            continue;
        }
        t.push(row.t);
        w.push(row.w);
        y.push(row.y);
        x.push(row.x);
    }
    if t.len() < 2 {
        return Err(Error::Config("path file has fewer than two rows".into()));
    }
    let grid = PathGrid::new(*t.last().unwrap(), t.len() - 1)?;
    let tol = 1e-9 * grid.horizon;
    if let Some(i) = t
        .iter()
        .enumerate()
        .position(|(i, &ti)| (ti - grid.time(i)).abs() > tol)
    {
        return Err(Error::Config(format!("time column is not uniform at row {i}")));
    }
    Ok(Path {
        grid,
        x,
        y,
        w,
        epsilon: f64::NAN,
        seed: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{limit_path, Multiplier, ScalarField2, ThetaFamily};

    fn additive(c: f64, x0: f64) -> ModelSpec {
        ModelSpec::additive(
            Multiplier::new(ThetaFamily::Constant { c }, c.abs().max(0.1), 2),
            x0,
            1.0,
        )
    }

    #[test]
    fn no_drift_no_noise_is_constant() {
        let spec = additive(0.0, 3.0);
        let grid = PathGrid::new(1.0, 100).unwrap();
        let p = simulate_path(&spec, &grid, 0.0, 11).unwrap();
        assert!(p.x.iter().all(|&x| x == 3.0));
        assert_eq!(p.w[0], 0.0);
    }

    #[test]
    fn zero_noise_tracks_exponential() {
        let spec = additive(1.0, 1.0);
        let grid = PathGrid::new(1.0, 1 << 14).unwrap();
        let p = simulate_path(&spec, &grid, 0.0, 0).unwrap();
        let limit = limit_path(&spec, &grid).unwrap();
        assert!((p.x[grid.n_steps] - std::f64::consts::E).abs() < 5e-4);
        assert!((p.x[grid.n_steps] - limit[grid.n_steps]).abs() < 5e-4);
    }

    #[test]
    fn same_seed_same_path() {
        let mut spec = additive(0.5, 1.0);
        spec.sigma1 = ScalarField2::LinearGrowth { kappa: 0.5 };
        spec.sigma2 = ScalarField2::CosOfY;
        spec.y = YDynamics::Ou {
            a: 1.0,
            b: 0.5,
            y0: 0.2,
        };
        let grid = PathGrid::new(1.0, 500).unwrap();
        let a = simulate_path(&spec, &grid, 0.1, 99).unwrap();
        let b = simulate_path(&spec, &grid, 0.1, 99).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.x, simulate_path(&spec, &grid, 0.1, 100).unwrap().x);
    }

    #[test]
    fn y_follows_the_same_brownian_motion() {
        let mut spec = additive(0.0, 1.0);
        spec.y = YDynamics::Wiener;
        let grid = PathGrid::new(1.0, 200).unwrap();
        let p = simulate_path(&spec, &grid, 0.1, 5).unwrap();
        assert_eq!(p.y, p.w);
        // additive unit noise with no drift: X - x0 = εW exactly
        for i in 0..=200 {
            assert!((p.x[i] - 1.0 - 0.1 * p.w[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_is_reported_with_step() {
        let spec = additive(0.0, 1e12);
        let grid = PathGrid::new(1.0, 10).unwrap();
        let dw = vec![1.0; 10];
        let err = simulate_with_increments(&spec, &grid, 1.0, 0, &dw).unwrap_err();
        assert!(matches!(
            err,
            Error::Diverged {
                step: 1,
                replicate: None
            }
        ));
    }

    #[test]
    fn noise_sup_is_running_max_of_w_for_unit_coefficients() {
        let spec = additive(0.3, 1.0);
        let grid = PathGrid::new(1.0, 300).unwrap();
        let p = simulate_path(&spec, &grid, 0.2, 3).unwrap();
        let want = p.w.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        assert!((noise_sup_functional(&p, &spec) - want).abs() < 1e-12);
        let flat = simulate_with_increments(&spec, &grid, 0.2, 0, &vec![0.0; 300]).unwrap();
        assert_eq!(noise_sup_functional(&flat, &spec), 0.0);
    }

    #[test]
    fn ensemble_of_one_matches_replicate_zero() {
        let spec = additive(0.2, 1.0);
        let grid = PathGrid::new(1.0, 64).unwrap();
        let e = simulate_ensemble(&spec, &grid, 0.1, 1, 42).unwrap();
        let direct = simulate_path(&spec, &grid, 0.1, replicate_seed(42, 0)).unwrap();
        assert_eq!(e.paths[0], direct);
        assert!(simulate_ensemble(&spec, &grid, 0.1, 0, 42).is_err());
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let spec = additive(0.2, 1.0);
        let grid = PathGrid::new(2.0, 50).unwrap();
        let e = simulate_ensemble(&spec, &grid, 0.1, 3, 1).unwrap();
        let mut buf = Vec::new();
        let rows: Vec<_> = e.paths.iter().enumerate().map(|(i, p)| (Some(i), p)).collect();
        write_path_csv(&mut buf, &rows).unwrap();
        let back = read_path_csv(buf.as_slice(), Some(2)).unwrap();
        assert_eq!(back.grid, grid);
        assert_eq!(back.x, e.paths[2].x);
        assert_eq!(back.w, e.paths[2].w);
    }
}
