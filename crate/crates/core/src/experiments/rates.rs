//! Risk curves of both estimators as ε → 0, the ε = 0 bias sweep, and the
//! consistency sweep.

use serde::Serialize;

use super::{check_windows, replicate_sum, BandwidthRule, EvalWindow, MonteCarlo, SLOPE_TOLERANCE};
use crate::error::{Error, Result};
use crate::estimate::{build_stopped_process, estimate_j, estimate_theta_alt, EstimatorKind};
use crate::kernels::Kernel;
use crate::model::{limit_path, ModelSpec, PathGrid};
use crate::simulate::{Path, PathSimulator};
use crate::stats::{fit_log_log, LineFit};

/// Tolerance on the stopped-process estimator's slope.
pub const ALT_SLOPE_TOLERANCE: f64 = 0.4;
/// Tolerance on the ε = 0 bias slope.
pub const BIAS_SLOPE_TOLERANCE: f64 = 0.2;
/// Largest acceptable event-A failure frequency at the smallest ε.
pub const MAX_FAILURE_FREQUENCY: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiskCurve {
    pub estimator: EstimatorKind,
    pub rule: BandwidthRule,
    pub epsilons: Vec<f64>,
    pub bandwidths: Vec<f64>,
    pub n_steps: Vec<usize>,
    pub n_replicates: usize,
    pub master_seed: u64,
    pub window: EvalWindow,
    /// The supremum over `[a, b]` is taken over these times only.
    pub eval_times: Vec<f64>,
    /// Main: `max_t Ê(θ̂_tX_t - θ(t)x_t)²`. Alternate: `max_t Ê(θ̃(t) - θ(t))²`.
    pub risks: Vec<f64>,
    pub argmax_time: Vec<f64>,
    pub fit: LineFit,
    pub theoretical_slope: Option<f64>,
    pub tolerance: f64,
    /// Alternate only: frequency of paths that dip below the threshold.
    pub failure_frequency: Option<Vec<f64>>,
    /// Alternate only: the part of `risks` (at its argmax) from failed paths.
    pub failure_risk: Option<Vec<f64>>,
    /// Alternate only: log-log slope of failure frequency against ε, when
    /// at least two frequencies are positive.
    pub failure_fit: Option<LineFit>,
    pub passed: bool,
}

fn validate_epsilons(eps: &[f64]) -> Result<()> {
    if eps.len() < 2 {
        return Err(Error::Config("a risk curve needs at least two epsilon values".into()));
    }
    if eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::Config(format!("epsilon values must lie in (0, 1): {eps:?}")));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(format!(
            "epsilon values must be strictly decreasing: {eps:?}"
        )));
    }
    Ok(())
}

struct Pass {
    risk: f64,
    argmax: f64,
    failure_frequency: f64,
    failure_risk: f64,
    n_steps: usize,
}

/// One ε of a risk curve. Per-replicate vectors hold the squared errors at
/// each eval time, followed for the alternate kind by the same errors on
/// failed paths only and by the failure indicator.
fn risk_at(
    spec: &ModelSpec,
    kernel: &Kernel,
    kind: EstimatorKind,
    epsilon: f64,
    bandwidth: f64,
    times: &[f64],
    mc: &MonteCarlo,
) -> Result<Pass> {
    let grid = mc.steps.grid_for(spec.horizon, bandwidth, kernel);
    let sim = PathSimulator::new(spec, &grid);
    let m = times.len();
    let sums = match kind {
        EstimatorKind::Main => {
            let target: Vec<f64> = times.iter().map(|&t| spec.j(t)).collect();
            replicate_sum(mc.n_replicates, mc.master_seed, m, |_, seed| {
                let p = sim.simulate(epsilon, seed)?;
                times
                    .iter()
                    .zip(&target)
                    .map(|(&t, j)| Ok((estimate_j(&p, kernel, bandwidth, t)? - j).powi(2)))
                    .collect()
            })?
        }
        EstimatorKind::Alternate => {
            let target: Vec<f64> = times.iter().map(|&t| spec.theta.value(t)).collect();
            replicate_sum(mc.n_replicates, mc.master_seed, 2 * m + 1, |_, seed| {
                let p = sim.simulate(epsilon, seed)?;
                let stopped = build_stopped_process(&p, spec)?;
                let failed = if stopped.event_a_holds { 0.0 } else { 1.0 };
                let mut v = Vec::with_capacity(2 * m + 1);
                for (&t, th) in times.iter().zip(&target) {
                    v.push((estimate_theta_alt(&stopped, kernel, bandwidth, t)? - th).powi(2));
                }
                for i in 0..m {
                    v.push(v[i] * failed);
                }
                v.push(failed);
                Ok(v)
            })?
        }
    };
    let n = mc.n_replicates as f64;
    let (i_max, risk) = sums[..m]
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    let (failure_frequency, failure_risk) = match kind {
        EstimatorKind::Main => (0.0, 0.0),
        EstimatorKind::Alternate => (sums[2 * m] / n, sums[m + i_max] / n),
    };
    Ok(Pass {
        risk: risk / n,
        argmax: times[i_max],
        failure_frequency,
        failure_risk,
        n_steps: grid.n_steps,
    })
}

/// Risk curve for any bandwidth rule. `theoretical_slope`, when given, is
/// checked against the fitted slope at `tolerance`.
#[allow(clippy::too_many_arguments)]
pub fn risk_curve(
    spec: &ModelSpec,
    kernel: &Kernel,
    kind: EstimatorKind,
    rule: BandwidthRule,
    epsilons: &[f64],
    window: &EvalWindow,
    mc: &MonteCarlo,
    theoretical_slope: Option<f64>,
    tolerance: f64,
) -> Result<RiskCurve> {
    validate_epsilons(epsilons)?;
    if mc.n_replicates == 0 {
        return Err(Error::Config("n_replicates must be positive".into()));
    }
    let bandwidths = epsilons
        .iter()
        .map(|&e| rule.bandwidth(e))
        .collect::<Result<Vec<_>>>()?;
    let mirrored = kind == EstimatorKind::Alternate;
    for &bw in &bandwidths {
        check_windows(spec, kernel, window, bw, mirrored)?;
    }
    let times = window.lattice();
    let mut passes = Vec::with_capacity(epsilons.len());
    for (&eps, &bw) in epsilons.iter().zip(&bandwidths) {
        passes.push(risk_at(spec, kernel, kind, eps, bw, &times, mc)?);
    }
    let risks: Vec<f64> = passes.iter().map(|p| p.risk).collect();
    let fit = fit_log_log(epsilons, &risks);
    let positive = risks.iter().all(|&r| r > 0.0);
    let slope_ok = theoretical_slope.is_none_or(|s| (fit.slope - s).abs() <= tolerance);

    let (failure_frequency, failure_risk, failure_fit, failure_ok) = if mirrored {
        let freq: Vec<f64> = passes.iter().map(|p| p.failure_frequency).collect();
        let risk: Vec<f64> = passes.iter().map(|p| p.failure_risk).collect();
        let (e, f): (Vec<f64>, Vec<f64>) = epsilons.iter().zip(&freq).filter(|(_, f)| **f > 0.0).unzip();
        let ffit = (e.len() >= 2).then(|| fit_log_log(&e, &f));
        let ok = *freq.last().unwrap() <= MAX_FAILURE_FREQUENCY;
        (Some(freq), Some(risk), ffit, ok)
    } else {
        (None, None, None, true)
    };

    Ok(RiskCurve {
        estimator: kind,
        rule,
        epsilons: epsilons.to_vec(),
        bandwidths,
        n_steps: passes.iter().map(|p| p.n_steps).collect(),
        n_replicates: mc.n_replicates,
        master_seed: mc.master_seed,
        window: *window,
        eval_times: times,
        risks,
        argmax_time: passes.iter().map(|p| p.argmax).collect(),
        fit,
        theoretical_slope,
        tolerance,
        failure_frequency,
        failure_risk,
        failure_fit,
        passed: positive && slope_ok && failure_ok,
    })
}

fn require_order(spec: &ModelSpec, kernel: &Kernel) -> Result<usize> {
    let k = spec.theta.k;
    if kernel.order < k {
        return Err(Error::Config(format!(
            "kernel order {} is below the smoothness index k = {k}",
            kernel.order
        )));
    }
    Ok(k)
}

/// `φ_ε = ε^{1/(k+2)}`; the risk should fall like `ε^{2(k+1)/(k+2)}`.
pub fn risk_curve_main(
    spec: &ModelSpec,
    kernel: &Kernel,
    epsilons: &[f64],
    window: &EvalWindow,
    mc: &MonteCarlo,
) -> Result<RiskCurve> {
    let k = require_order(spec, kernel)?;
    let slope = 2.0 * (k as f64 + 1.0) / (k as f64 + 2.0);
    risk_curve(
        spec,
        kernel,
        EstimatorKind::Main,
        BandwidthRule::Main { k },
        epsilons,
        window,
        mc,
        Some(slope),
        SLOPE_TOLERANCE,
    )
}

/// `φ_ε = ε^{2/(2ρ-1)}`; the risk of `θ̃` should fall like `ε^{4ρ/(2ρ-1)}`.
pub fn risk_curve_alt(
    spec: &ModelSpec,
    kernel: &Kernel,
    epsilons: &[f64],
    window: &EvalWindow,
    mc: &MonteCarlo,
) -> Result<RiskCurve> {
    require_order(spec, kernel)?;
    if !(spec.x0 > 0.0) {
        return Err(Error::Precondition(format!(
            "the stopped-process estimator needs x0 > 0, got {}",
            spec.x0
        )));
    }
    let rho = spec.theta.rho();
    let slope = 4.0 * rho / (2.0 * rho - 1.0);
    risk_curve(
        spec,
        kernel,
        EstimatorKind::Alternate,
        BandwidthRule::Alt { rho },
        epsilons,
        window,
        mc,
        Some(slope),
        ALT_SLOPE_TOLERANCE,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasSweep {
    pub kernel_order: usize,
    pub bandwidths: Vec<f64>,
    pub n_steps: usize,
    pub window: EvalWindow,
    pub eval_times: Vec<f64>,
    /// `max_t (θ̂_tx_t - θ(t)x_t)²` on the noiseless path.
    pub risks: Vec<f64>,
    pub fit: LineFit,
    pub theoretical_slope: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Squared bias of the convolution estimator applied to the exact limit
/// path, as a function of `φ`. Should scale like `φ^{2(order+1)}`.
pub fn bias_sweep(
    spec: &ModelSpec,
    kernel: &Kernel,
    bandwidths: &[f64],
    window: &EvalWindow,
    n_steps: usize,
) -> Result<BiasSweep> {
    if bandwidths.len() < 2 || bandwidths.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::Config(
            "bias sweep needs at least two positive bandwidths".into(),
        ));
    }
    for &bw in bandwidths {
        check_windows(spec, kernel, window, bw, false)?;
    }
    let grid = PathGrid::new(spec.horizon, n_steps)?;
    let x = limit_path(spec, &grid)?;
    let len = x.len();
    let path = Path {
        grid,
        x,
        y: vec![spec.y.initial(); len],
        w: vec![0.0; len],
        epsilon: 0.0,
        seed: 0,
    };
    let times = window.lattice();
    let mut risks = Vec::with_capacity(bandwidths.len());
    for &bw in bandwidths {
        let mut worst = 0.0f64;
        for &t in &times {
            worst = worst.max((estimate_j(&path, kernel, bw, t)? - spec.j(t)).powi(2));
        }
        risks.push(worst);
    }
    let fit = fit_log_log(bandwidths, &risks);
    let theoretical_slope = 2.0 * (kernel.order as f64 + 1.0);
    Ok(BiasSweep {
        kernel_order: kernel.order,
        bandwidths: bandwidths.to_vec(),
        n_steps,
        window: *window,
        eval_times: times,
        passed: risks.iter().all(|&r| r > 0.0) && (fit.slope - theoretical_slope).abs() <= BIAS_SLOPE_TOLERANCE,
        risks,
        fit,
        theoretical_slope,
        tolerance: BIAS_SLOPE_TOLERANCE,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub curve: RiskCurve,
    pub monotone: bool,
    /// `risks.last / risks.first`.
    pub reduction: f64,
    /// Whether the ε range spans at least a decade, which arms the
    /// `reduction < 0.1` check.
    pub spans_decade: bool,
    pub passed: bool,
}

/// Main-estimator risk along ε for a rule with `φ_ε → 0` and `ε/φ_ε → 0`.
pub fn consistency_sweep(
    spec: &ModelSpec,
    kernel: &Kernel,
    rule: BandwidthRule,
    epsilons: &[f64],
    window: &EvalWindow,
    mc: &MonteCarlo,
) -> Result<ConsistencyReport> {
    if !rule.is_consistent() {
        return Err(Error::Config(format!(
            "bandwidth rule {rule:?} does not satisfy φ → 0 and ε/φ → 0"
        )));
    }
    let curve = risk_curve(
        spec,
        kernel,
        EstimatorKind::Main,
        rule,
        epsilons,
        window,
        mc,
        None,
        SLOPE_TOLERANCE,
    )?;
    let monotone = curve.risks.windows(2).all(|w| w[1] < w[0]);
    let reduction = curve.risks.last().unwrap() / curve.risks[0];
    let spans_decade = epsilons[0] / epsilons.last().unwrap() >= 10.0 * (1.0 - 1e-12);
    let passed = curve.passed && monotone && (!spans_decade || reduction < 0.1);
    Ok(ConsistencyReport {
        curve,
        monotone,
        reduction,
        spans_decade,
        passed,
    })
}
