//! Command-line front end.
//!
//! Every subcommand reads a [`RunConfig`], writes `report.json` (the config
//! used, the results and one entry per assertion) and plot-ready CSV files
//! under `data/`, prints one line per assertion and exits 0 only if all of
//! them pass. Exit status 1 means an assertion failed; 2 means the run could
//! not be carried out.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{apply_overrides, KernelConfig, RunConfig};
use crate::error::{Error, Result};
use crate::estimate::{estimate_series, EstimatorKind};
use crate::experiments::{
    check_deviation_bounds, consistency_sweep, distribution_check, risk_curve, risk_curve_alt, risk_curve_main,
    RiskCurve, SLOPE_TOLERANCE,
};
use crate::kernels::{kernel_moment, Kernel, Moment};
use crate::model::{limit_path, validate_model};
use crate::rng::replicate_seed;
use crate::simulate::{simulate_ensemble, simulate_path, write_path_csv};

const DEFAULTS: &str = "\
Config defaults (TOML; override any key with --override a.b=value):
  output = \"out\"              n_replicates = 100
  estimator = \"main\"          divisor = \"observed\"
  epsilon = last of eps_list, else 0.005
  window = [0.2T, 0.8T]       eval_time = window midpoint
  kernel = epanechnikov, order 1
  bandwidth = eps^(1/(k+2)) for main, eps^(2/(2rho-1)) for alternate
  steps.steps_per_unit_time = 4096, steps.bias_fraction = 0.01,
  steps.max_steps = 1048576 (dt <= bias_fraction * bandwidth^(order+1))
Exit status: 0 all assertions pass, 1 an assertion failed, 2 error.";

#[derive(Debug, Parser)]
#[command(name = "smallnoise", version, about = "Simulate small-noise SDEs and estimate the time-varying multiplier", after_help = DEFAULTS)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replaces `master_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replaces `output`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key=value` with a dotted key; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate `n_replicates` paths at `epsilon`.
    Simulate(Common),
    /// Estimate θ along one path at `epsilon`.
    Estimate(Common),
    /// Risk curve of the convolution estimator over `eps_list`.
    Rates(Common),
    /// Risk curve of the stopped-process estimator over `eps_list`.
    RatesAlt(Common),
    /// Standardized estimator against its Gaussian limit at `epsilon`.
    Normality(Common),
    /// Pathwise and mean-square deviation from the limit path.
    LemmaCheck(Common),
    /// Risk along `eps_list` for a consistent bandwidth rule.
    Consistency(Common),
    /// Support, order and moments of the configured kernel; the config is
    /// optional here.
    KernelInfo(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Estimate(_) => "estimate",
            Command::Rates(_) => "rates",
            Command::RatesAlt(_) => "rates-alt",
            Command::Normality(_) => "normality",
            Command::LemmaCheck(_) => "lemma-check",
            Command::Consistency(_) => "consistency",
            Command::KernelInfo(_) => "kernel-info",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Simulate(c)
            | Command::Estimate(c)
            | Command::Rates(c)
            | Command::RatesAlt(c)
            | Command::Normality(c)
            | Command::LemmaCheck(c)
            | Command::Consistency(c)
            | Command::KernelInfo(c) => c,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub config: Option<RunConfig>,
    pub results: Value,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

/// A report plus the CSV files to write under `data/`.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub data: Vec<(String, Vec<u8>)>,
    pub output: PathBuf,
}

impl Outcome {
    fn new(command: &'static str, config: &RunConfig, results: Value, assertions: Vec<Assertion>) -> Self {
        let passed = assertions.iter().all(|a| a.passed);
        Self {
            report: Report {
                command,
                config: Some(config.clone()),
                results,
                assertions,
                passed,
            },
            data: Vec::new(),
            output: config.output.clone(),
        }
    }

    /// Writes `report.json` and `data/*.csv` into the output directory.
    pub fn write(&self) -> Result<()> {
        let data_dir = self.output.join("data");
        fs::create_dir_all(&data_dir)?;
        let mut json = serde_json::to_string_pretty(&self.report)?;
        json.push('\n');
        fs::write(self.output.join("report.json"), json)?;
        for (name, bytes) in &self.data {
            fs::write(data_dir.join(name), bytes)?;
        }
        Ok(())
    }
}

fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn load(common: &Common) -> Result<RunConfig> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required for this subcommand".into()))?;
    let mut cfg = RunConfig::load(path, &common.overrides, common.seed)?;
    if let Some(out) = &common.out {
        cfg.output = out.clone();
    }
    Ok(cfg)
}

/// Runs a parsed command without touching the filesystem output.
pub fn execute(command: &Command) -> Result<Outcome> {
    if let Command::KernelInfo(c) = command {
        return kernel_info(c);
    }
    let cfg = load(command.common())?;
    let checks = validate_model(&cfg.model, 1000)?;
    if checks.iter().any(|c| !c.passed) {
        let assertions = checks
            .iter()
            .map(|c| {
                let detail = match &c.worst {
                    Some(p) => format!("worst at t = {}, v = {}: {} > {}", p.t, p.v, p.value, p.limit),
                    None => "holds on the sample lattice".into(),
                };
                Assertion::new(&format!("model condition {:?}", c.condition), c.passed, detail)
            })
            .collect();
        return Ok(Outcome::new(
            command.name(),
            &cfg,
            json!({ "model_validation": checks }),
            assertions,
        ));
    }
    let kernel = cfg.kernel.build()?;
    match command {
        Command::Simulate(_) => simulate(&cfg, &kernel),
        Command::Estimate(_) => estimate(&cfg, &kernel),
        Command::Rates(_) => rates(&cfg, &kernel, EstimatorKind::Main),
        Command::RatesAlt(_) => rates(&cfg, &kernel, EstimatorKind::Alternate),
        Command::Normality(_) => normality(&cfg, &kernel),
        Command::LemmaCheck(_) => lemma_check(&cfg, &kernel),
        Command::Consistency(_) => consistency(&cfg, &kernel),
        Command::KernelInfo(_) => unreachable!(),
    }
}

fn simulate(cfg: &RunConfig, kernel: &Kernel) -> Result<Outcome> {
    let eps = cfg.single_epsilon();
    let grid = cfg.grid_for(None, kernel)?;
    let ens = simulate_ensemble(&cfg.model, &grid, eps, cfg.n_replicates, cfg.master_seed)?;
    let limit = limit_path(&cfg.model, &grid)?;
    let n = ens.paths.len() as f64;
    let last = grid.n_steps;
    let mean_final = ens.paths.iter().map(|p| p.x[last]).sum::<f64>() / n;
    let max_dev = ens
        .paths
        .iter()
        .flat_map(|p| p.x.iter().zip(&limit).map(|(a, b)| (a - b).abs()))
        .fold(0.0f64, f64::max);
    let finite = ens.paths.iter().all(|p| p.x.iter().all(|v| v.is_finite()));
    let results = json!({
        "epsilon": eps,
        "n_steps": grid.n_steps,
        "n_paths": ens.paths.len(),
        "seeds": ens.paths.iter().map(|p| p.seed).collect::<Vec<_>>(),
        "mean_final_x": mean_final,
        "limit_final_x": limit[last],
        "max_abs_deviation": max_dev,
    });
    let assertions = vec![Assertion::new(
        "paths finite",
        finite,
        format!("{} paths", ens.paths.len()),
    )];
    let mut out = Outcome::new("simulate", cfg, results, assertions);
    let tagged: Vec<_> = ens.paths.iter().enumerate().map(|(i, p)| (Some(i), p)).collect();
    let mut buf = Vec::new();
    write_path_csv(&mut buf, &tagged)?;
    out.data.push(("paths.csv".into(), buf));
    #[derive(Serialize)]
    struct Row {
        t: f64,
        x_limit: f64,
    }
    out.data.push((
        "limit.csv".into(),
        csv_bytes(limit.iter().enumerate().map(|(i, &x)| Row {
            t: grid.time(i),
            x_limit: x,
        }))?,
    ));
    Ok(out)
}

fn estimate(cfg: &RunConfig, kernel: &Kernel) -> Result<Outcome> {
    let eps = cfg.single_epsilon();
    let rule = cfg.bandwidth_rule();
    let bw = rule.bandwidth(eps)?;
    let grid = cfg.grid_for(Some(bw), kernel)?;
    let seed = replicate_seed(cfg.master_seed, 0);
    let path = simulate_path(&cfg.model, &grid, eps, seed)?;
    let w = cfg.window();
    let n_times = 101;
    let times: Vec<f64> = (0..n_times)
        .map(|i| w.a + (w.b - w.a) * i as f64 / (n_times - 1) as f64)
        .collect();
    let series = estimate_series(&path, &cfg.model, kernel, bw, &times, cfg.estimator, cfg.divisor)?;
    #[derive(Serialize)]
    struct Row {
        t: f64,
        j_hat: f64,
        theta_hat: f64,
        theta_true: f64,
        x_limit: f64,
    }
    let rows: Vec<Row> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| Row {
            t,
            j_hat: series.j_hat[i],
            theta_hat: series.theta_hat[i],
            theta_true: cfg.model.theta.value(t),
            x_limit: cfg.model.limit_value(t),
        })
        .collect();
    let max_err = rows
        .iter()
        .map(|r| (r.theta_hat - r.theta_true).abs())
        .fold(0.0f64, f64::max);
    let rmse = (rows.iter().map(|r| (r.theta_hat - r.theta_true).powi(2)).sum::<f64>() / rows.len() as f64).sqrt();
    let finite = rows.iter().all(|r| r.theta_hat.is_finite() && r.j_hat.is_finite());
    let results = json!({
        "epsilon": eps,
        "estimator": cfg.estimator,
        "bandwidth_rule": rule,
        "bandwidth": bw,
        "n_steps": grid.n_steps,
        "seed": seed,
        "max_abs_theta_error": max_err,
        "rms_theta_error": rmse,
    });
    let assertions = vec![Assertion::new("estimates finite", finite, format!("{n_times} times"))];
    let mut out = Outcome::new("estimate", cfg, results, assertions);
    out.data.push(("estimate.csv".into(), csv_bytes(rows)?));
    Ok(out)
}

fn risk_rows(c: &RiskCurve) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Row {
        epsilon: f64,
        bandwidth: f64,
        n_steps: usize,
        risk: f64,
        argmax_t: f64,
        failure_frequency: Option<f64>,
        failure_risk: Option<f64>,
    }
    csv_bytes((0..c.epsilons.len()).map(|i| Row {
        epsilon: c.epsilons[i],
        bandwidth: c.bandwidths[i],
        n_steps: c.n_steps[i],
        risk: c.risks[i],
        argmax_t: c.argmax_time[i],
        failure_frequency: c.failure_frequency.as_ref().map(|f| f[i]),
        failure_risk: c.failure_risk.as_ref().map(|f| f[i]),
    }))
}

fn slope_assertion(c: &RiskCurve) -> Assertion {
    let s = c.theoretical_slope.unwrap_or(f64::NAN);
    Assertion::new(
        "risk slope",
        (c.fit.slope - s).abs() <= c.tolerance,
        format!(
            "fitted {:.4} ± {:.4} vs {:.4} ± {}",
            c.fit.slope, c.fit.slope_se, s, c.tolerance
        ),
    )
}

fn rates(cfg: &RunConfig, kernel: &Kernel, kind: EstimatorKind) -> Result<Outcome> {
    let mc = cfg.monte_carlo();
    let w = cfg.window();
    let curve = match (kind, cfg.bandwidth) {
        (EstimatorKind::Main, None) => risk_curve_main(&cfg.model, kernel, &cfg.eps_list, &w, &mc)?,
        (EstimatorKind::Alternate, None) => risk_curve_alt(&cfg.model, kernel, &cfg.eps_list, &w, &mc)?,
        (_, Some(rule)) => {
            let slope = rule.exponent().map(|p| {
                let k = kernel.order as f64;
                // bias² ~ φ^{2(order+1)}, variance ~ ε²/φ; the slower wins
                (2.0 * (k + 1.0) * p).min(2.0 - p)
            });
            risk_curve(
                &cfg.model,
                kernel,
                kind,
                rule,
                &cfg.eps_list,
                &w,
                &mc,
                slope,
                SLOPE_TOLERANCE,
            )?
        }
    };
    let mut assertions = vec![slope_assertion(&curve)];
    if let Some(f) = &curve.failure_frequency {
        let last = *f.last().unwrap();
        assertions.push(Assertion::new(
            "event A failure frequency",
            last <= crate::experiments::MAX_FAILURE_FREQUENCY,
            format!("{last} at ε = {}", curve.epsilons.last().unwrap()),
        ));
    }
    let name = if kind == EstimatorKind::Main {
        "rates"
    } else {
        "rates-alt"
    };
    let data = risk_rows(&curve)?;
    let mut out = Outcome::new(name, cfg, serde_json::to_value(&curve)?, assertions);
    out.data.push(("risk.csv".into(), data));
    Ok(out)
}

fn normality(cfg: &RunConfig, kernel: &Kernel) -> Result<Outcome> {
    let eps = cfg.single_epsilon();
    let w = cfg.window();
    let t = cfg.eval_time.unwrap_or(0.5 * (w.a + w.b));
    let check = distribution_check(&cfg.model, kernel, eps, t, &cfg.monte_carlo())?;
    let assertions = match check.passed {
        Some(_) => vec![
            Assertion::new(
                "variance ratio",
                (check.variance_ratio - 1.0).abs() <= crate::experiments::VARIANCE_RATIO_TOLERANCE,
                format!(
                    "{:.4} (reference variance {:.6})",
                    check.variance_ratio, check.reference_variance
                ),
            ),
            Assertion::new(
                "KS p-value",
                check.ks.p_value > crate::experiments::KS_MIN_P_VALUE,
                format!("D = {:.5}, p = {:.4}", check.ks.statistic, check.ks.p_value),
            ),
            Assertion::new(
                "mean within 3 SE",
                check.mean_within_3se,
                format!("mean {:.5}", check.sample_mean),
            ),
        ],
        // state-dependent noise: the limit may be mixed normal, so record only
        None => Vec::new(),
    };
    #[derive(Serialize)]
    struct Row {
        replicate: usize,
        standardized: f64,
    }
    let data = csv_bytes(check.samples.iter().enumerate().map(|(i, &v)| Row {
        replicate: i,
        standardized: v,
    }))?;
    let mut out = Outcome::new("normality", cfg, serde_json::to_value(&check)?, assertions);
    out.data.push(("standardized.csv".into(), data));
    Ok(out)
}

fn lemma_check(cfg: &RunConfig, kernel: &Kernel) -> Result<Outcome> {
    let grid = cfg.grid_for(None, kernel)?;
    let eps = cfg.single_epsilon();
    let eps_list = if cfg.eps_list.is_empty() {
        vec![eps]
    } else {
        cfg.eps_list.clone()
    };
    let r = check_deviation_bounds(&cfg.model, &grid, &eps_list, eps, &cfg.monte_carlo())?;
    let mut assertions = vec![Assertion::new(
        "pathwise bound",
        r.pathwise.passed,
        format!(
            "{} violations over {} paths × {} points at ε = {}",
            r.pathwise.violations, r.pathwise.n_paths, r.pathwise.n_points, eps
        ),
    )];
    if eps_list.len() >= 2 {
        assertions.push(Assertion::new(
            "mean-square slope",
            (r.mse.fit.slope - 2.0).abs() <= r.mse.tolerance,
            format!("fitted {:.4} vs 2 ± {}", r.mse.fit.slope, r.mse.tolerance),
        ));
    }
    if let Some(e) = r.mse.closed_form_max_rel_error {
        assertions.push(Assertion::new(
            "closed form ε²T",
            e <= crate::experiments::CLOSED_FORM_TOLERANCE,
            format!("max relative error {e:.4}"),
        ));
    }
    #[derive(Serialize)]
    struct Row {
        epsilon: f64,
        sup_mse: f64,
        argmax_t: f64,
        closed_form: Option<f64>,
    }
    let data = csv_bytes((0..eps_list.len()).map(|i| Row {
        epsilon: eps_list[i],
        sup_mse: r.mse.sup_mse[i],
        argmax_t: r.mse.argmax_time[i],
        closed_form: r.mse.closed_form.as_ref().map(|c| c[i]),
    }))?;
    let mut out = Outcome::new("lemma-check", cfg, serde_json::to_value(&r)?, assertions);
    out.data.push(("mse.csv".into(), data));
    Ok(out)
}

fn consistency(cfg: &RunConfig, kernel: &Kernel) -> Result<Outcome> {
    let rule = cfg.bandwidth_rule();
    let r = consistency_sweep(
        &cfg.model,
        kernel,
        rule,
        &cfg.eps_list,
        &cfg.window(),
        &cfg.monte_carlo(),
    )?;
    let mut assertions = vec![Assertion::new(
        "risk decreasing",
        r.monotone,
        format!("{:?}", r.curve.risks),
    )];
    if r.spans_decade {
        assertions.push(Assertion::new(
            "risk reduced tenfold",
            r.reduction < 0.1,
            format!("last/first = {:.4}", r.reduction),
        ));
    }
    let data = risk_rows(&r.curve)?;
    let mut out = Outcome::new("consistency", cfg, serde_json::to_value(&r)?, assertions);
    out.data.push(("risk.csv".into(), data));
    Ok(out)
}

fn kernel_info(common: &Common) -> Result<Outcome> {
    let (kc, cfg) = match &common.config {
        Some(_) => {
            let cfg = load(common)?;
            (cfg.kernel.clone(), Some(cfg))
        }
        None => {
            let mut table = toml::Table::new();
            apply_overrides(&mut table, &common.overrides)?;
            let kc: KernelConfig = match table.remove("kernel") {
                Some(v) => v.try_into()?,
                None => KernelConfig::default(),
            };
            (kc, None)
        }
    };
    let kernel = kc.build()?;
    let k = kernel.order;
    let moments: Vec<f64> = (0..=k + 1).map(|j| kernel_moment(&kernel, j, Moment::Plain)).collect();
    let g2 = kernel_moment(&kernel, 0, Moment::Squared);
    let results = json!({
        "family": kernel.family.name(),
        "support": [kernel.lower, kernel.upper],
        "order": k,
        "mass": moments[0],
        "moments": moments,
        "int_g_squared": g2,
        "next_moment": moments[k + 1],
    });
    println!("family      {}", kernel.family.name());
    println!("support     [{}, {}]", kernel.lower, kernel.upper);
    println!("order       {k}");
    println!("∫G          {:.12}", moments[0]);
    println!("∫G²         {g2:.12}");
    println!("∫u^{}G       {:.12}", k + 1, moments[k + 1]);
    let mass_ok = (moments[0] - 1.0).abs() <= 1e-10;
    let vanish_ok = moments[1..=k].iter().all(|m| m.abs() <= 1e-9);
    let assertions = vec![
        Assertion::new("unit mass", mass_ok, format!("{:.3e}", moments[0] - 1.0)),
        Assertion::new("vanishing moments", vanish_ok, format!("{:?}", &moments[1..=k])),
    ];
    #[derive(Serialize)]
    struct Row {
        u: f64,
        g: f64,
    }
    let n = 201;
    let rows = (0..n).map(|i| {
        let u = kernel.lower + (kernel.upper - kernel.lower) * i as f64 / (n - 1) as f64;
        Row { u, g: kernel.eval(u) }
    });
    let data = csv_bytes(rows)?;
    let passed = assertions.iter().all(|a| a.passed);
    let output = common
        .out
        .clone()
        .or_else(|| cfg.as_ref().map(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from(crate::config::DEFAULT_OUTPUT));
    Ok(Outcome {
        report: Report {
            command: "kernel-info",
            config: cfg,
            results,
            assertions,
            passed,
        },
        data: vec![("kernel.csv".into(), data)],
        output,
    })
}

/// Parses `args`, runs the command, writes artifacts and returns the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match execute(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Err(e) = outcome.write() {
        eprintln!("error: cannot write artifacts to {}: {e}", outcome.output.display());
        return 2;
    }
    for a in &outcome.report.assertions {
        println!("[{}] {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
    println!("report: {}", outcome.output.join("report.json").display());
    if outcome.report.passed {
        0
    } else {
        1
    }
}
