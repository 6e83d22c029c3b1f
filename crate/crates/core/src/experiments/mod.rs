//! Monte Carlo harness for the estimators' asymptotic claims.
//!
//! Every experiment is a pure function of its inputs and `master_seed`:
//! replicates use counter-derived seeds, and all reductions run in replicate
//! order, so reports are reproducible bit for bit.

mod bounds;
mod distribution;
mod rates;

pub use bounds::{
    check_deviation_bounds, ensemble_pathwise, mse_scaling, pathwise_check, zero_noise_slack, DeviationReport,
    MseScaling, PathwiseCheck, CLOSED_FORM_TOLERANCE, MSE_SLOPE_TOLERANCE,
};
pub use distribution::{
    distribution_check, estimate_nu, nu_profile, DistributionCheck, NuEstimate, KS_MIN_P_VALUE,
    VARIANCE_RATIO_TOLERANCE,
};
pub use rates::{
    bias_sweep, consistency_sweep, risk_curve, risk_curve_alt, risk_curve_main, BiasSweep, ConsistencyReport,
    RiskCurve, ALT_SLOPE_TOLERANCE, BIAS_SLOPE_TOLERANCE, MAX_FAILURE_FREQUENCY,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{bandwidth_alt, bandwidth_main, Kernel};
use crate::model::{ModelSpec, PathGrid};
use crate::rng::replicate_seed;

/// Number of evaluation times used for the supremum over `[a, b]`.
pub const EVAL_POINTS: usize = 9;

/// Default tolerance on fitted log-log slopes.
pub const SLOPE_TOLERANCE: f64 = 0.3;

/// Interior interval `[a, b] ⊂ (0, T)` on which estimators are assessed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalWindow {
    pub a: f64,
    pub b: f64,
}

impl EvalWindow {
    /// `[0.2T, 0.8T]`.
    pub fn default_for(horizon: f64) -> Self {
        Self {
            a: 0.2 * horizon,
            b: 0.8 * horizon,
        }
    }

    /// `EVAL_POINTS` equally spaced times in `[a, b]`.
    pub fn lattice(&self) -> Vec<f64> {
        let n = EVAL_POINTS;
        (0..n)
            .map(|i| self.a + (self.b - self.a) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// How the bandwidth follows ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BandwidthRule {
    /// `ε^{1/(k+2)}`
    Main { k: usize },
    /// `ε^{2/(2ρ-1)}`
    Alt { rho: f64 },
    /// `ε^p`
    Power { exponent: f64 },
    /// Independent of ε.
    Fixed { bandwidth: f64 },
}

impl BandwidthRule {
    pub fn bandwidth(&self, epsilon: f64) -> Result<f64> {
        match *self {
            BandwidthRule::Main { k } => bandwidth_main(epsilon, k),
            BandwidthRule::Alt { rho } => bandwidth_alt(epsilon, rho),
            BandwidthRule::Power { exponent } => {
                if epsilon > 0.0 && epsilon < 1.0 {
                    Ok(epsilon.powf(exponent))
                } else {
                    Err(Error::Domain(format!("epsilon must lie in (0, 1), got {epsilon}")))
                }
            }
            BandwidthRule::Fixed { bandwidth } => Ok(bandwidth),
        }
    }

    /// `p` in `φ_ε = ε^p`, if the rule is a power law.
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            BandwidthRule::Main { k } => Some(1.0 / (k as f64 + 2.0)),
            BandwidthRule::Alt { rho } => Some(2.0 / (2.0 * rho - 1.0)),
            BandwidthRule::Power { exponent } => Some(exponent),
            BandwidthRule::Fixed { .. } => None,
        }
    }

    /// Both `φ_ε → 0` and `ε/φ_ε → 0` as `ε → 0`, i.e. `0 < p < 1`.
    pub fn is_consistent(&self) -> bool {
        self.exponent().is_some_and(|p| p > 0.0 && p < 1.0)
    }
}

/// Chooses the step count of each simulated path.
///
/// Left-point discretization adds an `O(Δ)` bias to the estimators, so `Δ`
/// is capped at `bias_fraction · φ^{order+1}`, the kernel's own bias scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    pub steps_per_unit_time: usize,
    pub bias_fraction: f64,
    pub max_steps: usize,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            steps_per_unit_time: 1 << 12,
            bias_fraction: 0.01,
            max_steps: 1 << 20,
        }
    }
}

impl StepPolicy {
    pub fn floor_grid(&self, horizon: f64) -> PathGrid {
        let n = ((horizon * self.steps_per_unit_time as f64).ceil() as usize).max(1);
        PathGrid {
            horizon,
            n_steps: n.min(self.max_steps),
        }
    }

    pub fn grid_for(&self, horizon: f64, bandwidth: f64, kernel: &Kernel) -> PathGrid {
        let floor = self.floor_grid(horizon);
        let dt_cap = self.bias_fraction * bandwidth.powi(kernel.order as i32 + 1);
        let n = (horizon / dt_cap).ceil() as usize;
        PathGrid {
            horizon,
            n_steps: n.clamp(floor.n_steps, self.max_steps.max(floor.n_steps)),
        }
    }
}

/// Replication settings shared by the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub n_replicates: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub steps: StepPolicy,
}

impl MonteCarlo {
    pub fn new(n_replicates: usize, master_seed: u64) -> Self {
        Self {
            n_replicates,
            master_seed,
            steps: StepPolicy::default(),
        }
    }
}

/// Replicates per chunk in [`replicate_sum`]; fixes the reduction order.
const CHUNK: usize = 64;

/// Element-wise sum over replicates of `f(index, seed)`, each of length
/// `len`. Chunks run in parallel; partial sums are combined in chunk order,
/// so the result does not depend on scheduling.
pub fn replicate_sum<F>(n: usize, master_seed: u64, len: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize, u64) -> Result<Vec<f64>> + Sync,
{
    let chunks: Vec<Vec<f64>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; len];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let v = f(i, replicate_seed(master_seed, i as u64)).map_err(|e| match e {
                    Error::Diverged { step, .. } => Error::Diverged {
                        step,
                        replicate: Some(i),
                    },
                    other => other,
                })?;
                for (a, b) in acc.iter_mut().zip(v) {
                    *a += b;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![0.0; len];
    for chunk in chunks {
        for (a, b) in total.iter_mut().zip(chunk) {
            *a += b;
        }
    }
    Ok(total)
}

/// Checks that every kernel window `[t + φA, t + φB]` (or its mirror for the
/// stopped-process estimator) fits in `[0, T]`.
pub(crate) fn check_windows(
    spec: &ModelSpec,
    kernel: &Kernel,
    window: &EvalWindow,
    bandwidth: f64,
    mirrored: bool,
) -> Result<()> {
    let (lo_w, hi_w) = if mirrored {
        (-kernel.upper, -kernel.lower)
    } else {
        (kernel.lower, kernel.upper)
    };
    for t in [window.a, window.b] {
        let (lo, hi) = (t + bandwidth * lo_w, t + bandwidth * hi_w);
        if lo < -1e-12 * spec.horizon || hi > spec.horizon * (1.0 + 1e-12) {
            return Err(Error::Boundary {
                t,
                bandwidth,
                lo,
                hi,
                horizon: spec.horizon,
            });
        }
    }
    Ok(())
}
