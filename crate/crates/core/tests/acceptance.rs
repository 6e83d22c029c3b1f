//! Acceptance criteria. Every criterion runs and prints one `[PASS]`/`[FAIL]`
//! line; the process exits non-zero if any failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};

use smallnoise::cli::{execute, Command, Common};
use smallnoise::config::RunConfig;
use smallnoise::experiments::{
    bias_sweep, distribution_check, mse_scaling, pathwise_check, risk_curve_alt, risk_curve_main, EvalWindow,
};
use smallnoise::kernels::{make_kernel, KernelFamily};
use smallnoise::{Kernel, ModelSpec, Multiplier, PathGrid, ThetaFamily};

fn config(name: &str) -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    RunConfig::load(&path, &[], None).unwrap()
}

static ANY_FAILED: AtomicBool = AtomicBool::new(false);

fn verdict(criterion: &str, passed: bool, detail: String) {
    println!("[{}] {criterion}: {detail}", if passed { "PASS" } else { "FAIL" });
    if !passed {
        ANY_FAILED.store(true, Ordering::SeqCst);
    }
}

fn c1_mean_square_deviation_scales_like_epsilon_squared() {
    let closed = config("deviation_closed_form.toml");
    let grid = PathGrid::new(closed.model.horizon, closed.grid.n_steps.unwrap()).unwrap();
    assert_eq!(closed.n_replicates, 10_000);
    let r = mse_scaling(&closed.model, &grid, &closed.eps_list, &closed.monte_carlo()).unwrap();
    // independent oracle: E(εW_T)² = ε²T, attained at t = T
    let worst = closed
        .eps_list
        .iter()
        .zip(&r.sup_mse)
        .map(|(e, m)| (m / (e * e * closed.model.horizon) - 1.0).abs())
        .fold(0.0f64, f64::max);
    let closed_ok = worst <= 0.05;

    let general = config("deviation_general.toml");
    assert_eq!(general.eps_list, vec![0.2, 0.1, 0.05, 0.025]);
    let grid = PathGrid::new(general.model.horizon, general.grid.n_steps.unwrap()).unwrap();
    let g = mse_scaling(&general.model, &grid, &general.eps_list, &general.monte_carlo()).unwrap();
    let slope_ok = (g.fit.slope - 2.0).abs() <= 0.15;
    verdict(
        "C1 mean-square deviation",
        closed_ok && slope_ok,
        format!(
            "closed form max rel. error {worst:.4} (≤ 0.05, n = 10⁴); general slope {:.4} (2 ± 0.15)",
            g.fit.slope
        ),
    );
}

fn c2_pathwise_bound_has_no_violations() {
    let cfg = config("deviation_general.toml");
    assert_eq!((cfg.n_replicates, cfg.single_epsilon()), (1000, 0.1));
    let grid = PathGrid::new(cfg.model.horizon, cfg.grid.n_steps.unwrap()).unwrap();
    let r = pathwise_check(&cfg.model, &grid, 0.1, &cfg.monte_carlo()).unwrap();
    verdict(
        "C2 pathwise bound",
        r.violations == 0,
        format!(
            "{} violations over {} paths × {} points, slack {:.3e}, max ratio {:.6}",
            r.violations, r.n_paths, r.n_points, r.slack, r.max_ratio
        ),
    );
}

fn c3_main_estimator_rate() {
    let cfg = config("rates.toml");
    let kernel = cfg.kernel.build().unwrap();
    assert_eq!((cfg.model.theta.k, kernel.order, cfg.n_replicates), (1, 1, 500));
    assert!((cfg.eps_list[0] / cfg.eps_list[3] - 10.0).abs() < 1e-9);
    let c = risk_curve_main(&cfg.model, &kernel, &cfg.eps_list, &cfg.window(), &cfg.monte_carlo()).unwrap();
    verdict(
        "C3 main rate",
        (c.fit.slope - 4.0 / 3.0).abs() <= 0.3,
        format!(
            "slope {:.4} ± {:.4} (4/3 ± 0.3), risks {:?}",
            c.fit.slope, c.fit.slope_se, c.risks
        ),
    );
}

fn c4_noiseless_bias_order() {
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
        4.0,
    );
    let window = EvalWindow::default_for(spec.horizon);
    let bandwidths = [0.2, 0.1, 0.05, 0.025];
    // symmetric kernels have a vanishing first moment, so the order-0 case
    // needs an off-centre window
    let kernels: [(usize, Kernel); 2] = [
        (
            0,
            make_kernel(
                KernelFamily::Rectangular {
                    lower: -0.25,
                    upper: 0.75,
                },
                0,
            )
            .unwrap(),
        ),
        (1, make_kernel(KernelFamily::Epanechnikov, 1).unwrap()),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (k, kernel) in &kernels {
        let s = bias_sweep(&spec, kernel, &bandwidths, &window, 1 << 20).unwrap();
        let target = 2.0 * (*k as f64 + 1.0);
        ok &= (s.fit.slope - target).abs() <= 0.2;
        detail.push(format!("k = {k}: slope {:.4} ({target} ± 0.2)", s.fit.slope));
    }
    verdict("C4 bias order", ok, detail.join("; "));
}

fn c5_gaussian_limit() {
    let cfg = config("normality.toml");
    let kernel = cfg.kernel.build().unwrap();
    assert_eq!((cfg.single_epsilon(), cfg.n_replicates), (0.005, 2000));
    let d = distribution_check(&cfg.model, &kernel, 0.005, cfg.eval_time.unwrap(), &cfg.monte_carlo()).unwrap();
    // ∫G² for ¾(1 - u²) is 3/5
    assert!((d.reference_variance - 0.6).abs() < 1e-12);
    let var_ok = (0.85..=1.15).contains(&d.variance_ratio);
    let ks_ok = d.ks.p_value > 0.01;
    verdict(
        "C5 Gaussian limit",
        var_ok && ks_ok,
        format!(
            "variance ratio {:.4} ([0.85, 1.15]), KS p-value {:.4} (> 0.01), mean {:.4}",
            d.variance_ratio, d.ks.p_value, d.sample_mean
        ),
    );
}

fn c6_stopped_process_estimator_rate() {
    let cfg = config("rates_alt.toml");
    let kernel = cfg.kernel.build().unwrap();
    assert_eq!(cfg.model.theta.rho(), 2.0);
    let c = risk_curve_alt(&cfg.model, &kernel, &cfg.eps_list, &cfg.window(), &cfg.monte_carlo()).unwrap();
    let freq = *c.failure_frequency.as_ref().unwrap().last().unwrap();
    verdict(
        "C6 stopped-process rate",
        (c.fit.slope - 8.0 / 3.0).abs() <= 0.4 && freq <= 0.01,
        format!(
            "slope {:.4} ± {:.4} (8/3 ± 0.4), failure frequency {freq} (≤ 0.01), risks {:?}",
            c.fit.slope, c.fit.slope_se, c.risks
        ),
    );
}

/// Composite Simpson with `n` panels; independent of the Gauss-Legendre
/// rule inside the crate.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

fn c7_kernels_up_to_order_six() {
    let mut worst_mass = 0.0f64;
    let mut worst_moment = 0.0f64;
    for k in 0..=6 {
        let g = make_kernel(KernelFamily::PolynomialOrderK, k).unwrap();
        let (a, b) = g.support();
        let mass = simpson(|u| g.eval(u), a, b, 20_000);
        worst_mass = worst_mass.max((mass - 1.0).abs());
        for j in 1..=k {
            worst_moment = worst_moment.max(simpson(|u| u.powi(j as i32) * g.eval(u), a, b, 20_000).abs());
        }
    }
    verdict(
        "C7 kernel construction",
        worst_mass <= 1e-10 && worst_moment <= 1e-9,
        format!("max |∫G - 1| = {worst_mass:.2e} (≤ 1e-10), max |∫u^jG| = {worst_moment:.2e} (≤ 1e-9)"),
    );
}

type Subcommand = fn(Common) -> Command;

fn run_twice(sub: Subcommand, cfg: &str) -> bool {
    // same output directory both times, since the report embeds the config
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut bytes = Vec::new();
    for _ in 0..2 {
        let common = Common {
            config: Some(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(cfg)),
            seed: None,
            out: Some(out.clone()),
            overrides: Vec::new(),
        };
        execute(&sub(common)).unwrap().write().unwrap();
        let mut files = vec![std::fs::read(out.join("report.json")).unwrap()];
        let mut names: Vec<_> = std::fs::read_dir(out.join("data"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        names.sort();
        files.extend(names.iter().map(|p| std::fs::read(p).unwrap()));
        bytes.push(files);
    }
    bytes[0] == bytes[1]
}

fn c8_reruns_are_byte_identical() {
    let cases: [(&str, Subcommand, &str); 5] = [
        ("lemma-check", Command::LemmaCheck, "deviation_general.toml"),
        ("rates", Command::Rates, "rates.toml"),
        ("rates-alt", Command::RatesAlt, "rates_alt.toml"),
        ("normality", Command::Normality, "normality.toml"),
        ("consistency", Command::Consistency, "consistency.toml"),
    ];
    let mut failed = Vec::new();
    for (name, sub, cfg) in cases {
        if !run_twice(sub, cfg) {
            failed.push(name);
        }
    }
    verdict(
        "C8 determinism",
        failed.is_empty(),
        format!("report.json and data/*.csv identical across reruns; differing: {failed:?}"),
    );
}

fn main() {
    let criteria: [(&str, fn()); 8] = [
        (
            "c1_mean_square_deviation_scales_like_epsilon_squared",
            c1_mean_square_deviation_scales_like_epsilon_squared,
        ),
        (
            "c2_pathwise_bound_has_no_violations",
            c2_pathwise_bound_has_no_violations,
        ),
        ("c3_main_estimator_rate", c3_main_estimator_rate),
        ("c4_noiseless_bias_order", c4_noiseless_bias_order),
        ("c5_gaussian_limit", c5_gaussian_limit),
        ("c6_stopped_process_estimator_rate", c6_stopped_process_estimator_rate),
        ("c7_kernels_up_to_order_six", c7_kernels_up_to_order_six),
        ("c8_reruns_are_byte_identical", c8_reruns_are_byte_identical),
    ];
    for (name, f) in criteria {
        if catch_unwind(AssertUnwindSafe(f)).is_err() {
            println!("[FAIL] {name}: panicked");
            ANY_FAILED.store(true, Ordering::SeqCst);
        }
    }
    if ANY_FAILED.load(Ordering::SeqCst) {
        std::process::exit(1);
    }
}
