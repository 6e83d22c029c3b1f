//! Problem instances, regularity checks and the deterministic limit path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Built-in families for the unknown multiplier θ(t).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ThetaFamily {
    Constant {
        c: f64,
    },
    /// `c₀ + c₁ t + … + c_m t^m`
    Poly {
        coeffs: Vec<f64>,
    },
    /// `a + b sin(ω t)`
    Trig {
        a: f64,
        b: f64,
        omega: f64,
    },
}

impl ThetaFamily {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            ThetaFamily::Constant { c } => *c,
            ThetaFamily::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            ThetaFamily::Trig { a, b, omega } => a + b * (omega * t).sin(),
        }
    }

    /// `n`-th derivative, `None` when no closed form is available.
    pub fn derivative(&self, t: f64, n: usize) -> Option<f64> {
        if n == 0 {
            return Some(self.value(t));
        }
        Some(match self {
            ThetaFamily::Constant { .. } => 0.0,
            ThetaFamily::Poly { coeffs } => {
                // coefficient of t^(j-n) in the n-th derivative is c_j · j!/(j-n)!
                let mut acc = 0.0;
                for (j, c) in coeffs.iter().enumerate().skip(n).rev() {
                    let falling: f64 = ((j - n + 1)..=j).map(|m| m as f64).product();
                    acc = acc * t + c * falling;
                }
                acc
            }
            ThetaFamily::Trig { b, omega, .. } => {
                let phase = n as f64 * std::f64::consts::FRAC_PI_2;
                b * omega.powi(n as i32) * (omega * t + phase).sin()
            }
        })
    }
}

/// The multiplier θ together with its declared regularity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    #[serde(flatten)]
    pub family: ThetaFamily,
    /// `L`: `|θ(t)| ≤ L` on `[0, T]`.
    pub bound: f64,
    /// `k`: number of derivatives θ is declared to have.
    #[serde(default)]
    pub k: usize,
    /// Hölder exponent γ ∈ (0, 1] of θ^(k); Lipschitz when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder: Option<f64>,
}

impl Multiplier {
    pub fn new(family: ThetaFamily, bound: f64, k: usize) -> Self {
        Self {
            family,
            bound,
            k,
            holder: None,
        }
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        self.family.value(t)
    }

    /// `ρ = k + γ`.
    pub fn rho(&self) -> f64 {
        self.k as f64 + self.holder.unwrap_or(1.0)
    }

    /// `∫_a^b θ(s) ds` by composite Simpson, about 1024 panels per unit time.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let panels = (((b - a).abs() * 1024.0).ceil() as usize).max(1) * 2;
        simpson(|s| self.value(s), a, b, panels)
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    debug_assert!(panels.is_multiple_of(2));
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Built-in coefficient families for σ₁(t, x) and σ₂(t, y).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScalarField2 {
    One,
    Constant {
        c: f64,
    },
    /// `√(κ(1 + v²))`
    LinearGrowth {
        kappa: f64,
    },
    /// `s (½ + 1/(1 + e^{-v}))`, which lies in `(s/2, 3s/2)`.
    BoundedSigmoid {
        s: f64,
    },
    /// `cos(v)`
    CosOfY,
    /// `v`; unbounded, useful only to exercise the regularity checks.
    Identity,
}

impl ScalarField2 {
    #[inline]
    pub fn eval(&self, _t: f64, v: f64) -> f64 {
        match self {
            ScalarField2::One => 1.0,
            ScalarField2::Constant { c } => *c,
            ScalarField2::LinearGrowth { kappa } => (kappa * (1.0 + v * v)).sqrt(),
            ScalarField2::BoundedSigmoid { s } => s * (0.5 + 1.0 / (1.0 + (-v).exp())),
            ScalarField2::CosOfY => v.cos(),
            ScalarField2::Identity => v,
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self, ScalarField2::One) || matches!(self, ScalarField2::Constant { c } if *c == 1.0)
    }
}

/// The auxiliary process `Y`, always driven by the same Brownian motion as `X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum YDynamics {
    /// `dY = -a Y dt + b dW`, `Y_0 = y0`.
    Ou {
        a: f64,
        b: f64,
        #[serde(default)]
        y0: f64,
    },
    /// `Y = W`.
    Wiener,
    Const {
        c: f64,
    },
}

impl YDynamics {
    pub fn initial(&self) -> f64 {
        match self {
            YDynamics::Ou { y0, .. } => *y0,
            YDynamics::Wiener => 0.0,
            YDynamics::Const { c } => *c,
        }
    }
}

/// A full problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub theta: Multiplier,
    pub sigma1: ScalarField2,
    pub sigma2: ScalarField2,
    pub y: YDynamics,
    pub x0: f64,
    /// Horizon `T`.
    pub horizon: f64,
    /// `K` in `σ₁(t,x)² ≤ K(1 + x²)`.
    pub growth_k: f64,
    pub sigma2_bound: f64,
}

impl ModelSpec {
    /// Additive unit noise: `σ₁ = σ₂ = 1`, `Y ≡ 0`.
    pub fn additive(theta: Multiplier, x0: f64, horizon: f64) -> Self {
        Self {
            theta,
            sigma1: ScalarField2::One,
            sigma2: ScalarField2::One,
            y: YDynamics::Const { c: 0.0 },
            x0,
            horizon,
            growth_k: 1.0,
            sigma2_bound: 1.0,
        }
    }

    #[inline]
    pub fn diffusion(&self, t: f64, x: f64, y: f64) -> f64 {
        self.sigma1.eval(t, x) * self.sigma2.eval(t, y)
    }

    /// `x_t = x₀ exp(∫₀ᵗ θ)` at an arbitrary time.
    pub fn limit_value(&self, t: f64) -> f64 {
        self.x0 * self.theta.integral(0.0, t).exp()
    }

    /// `J(t) = θ(t) x_t`.
    pub fn j(&self, t: f64) -> f64 {
        self.theta.value(t) * self.limit_value(t)
    }
}

/// Uniform lattice `t_i = iT/n`, `i = 0..=n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    pub horizon: f64,
    pub n_steps: usize,
}

impl PathGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Precondition(format!("horizon must be positive, got {horizon}")));
        }
        if n_steps == 0 {
            return Err(Error::Precondition("n_steps must be at least 1".into()));
        }
        Ok(Self { horizon, n_steps })
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.horizon
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }

    /// Grid index nearest to `t`; ties go to the lower index.
    pub fn nearest_index(&self, t: f64) -> usize {
        let s = t / self.dt();
        let lo = s.floor().clamp(0.0, self.n_steps as f64) as usize;
        let hi = (lo + 1).min(self.n_steps);
        if (self.time(hi) - t).abs() < (t - self.time(lo)).abs() {
            hi
        } else {
            lo
        }
    }
}

/// Which part of the regularity condition a check covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `|θ(t)| ≤ L`
    MultiplierBounded,
    /// `|σ₂(t,y)| ≤ sigma2_bound`
    Sigma2Bounded,
    /// `σ₁(t,x)² ≤ K(1 + x²)`
    Sigma1Growth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub t: f64,
    pub v: f64,
    pub value: f64,
    pub limit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub condition: Condition,
    pub passed: bool,
    /// Sample with the largest excess over the bound, when any exceeds it.
    pub worst: Option<SamplePoint>,
}

/// State-space box sampled by [`validate_model`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationBox {
    pub x_range: f64,
    pub y_range: f64,
}

impl Default for ValidationBox {
    fn default() -> Self {
        Self {
            x_range: 10.0,
            y_range: 10.0,
        }
    }
}

const RELATIVE_SLACK: f64 = 1e-12;

/// Checks the three regularity conditions on a `density × density` lattice.
pub fn validate_model(spec: &ModelSpec, lattice_density: usize) -> Result<Vec<ConditionCheck>> {
    validate_model_in(spec, lattice_density, ValidationBox::default())
}

pub fn validate_model_in(
    spec: &ModelSpec,
    lattice_density: usize,
    bounds: ValidationBox,
) -> Result<Vec<ConditionCheck>> {
    if lattice_density < 100 {
        return Err(Error::Precondition(format!(
            "lattice density must be at least 100, got {lattice_density}"
        )));
    }
    let n = lattice_density;
    let ts: Vec<f64> = (0..n).map(|i| spec.horizon * i as f64 / (n - 1) as f64).collect();
    let span = |r: f64| -> Vec<f64> { (0..n).map(|i| -r + 2.0 * r * i as f64 / (n - 1) as f64).collect() };

    let finite = |coefficient: &'static str, t: f64, v: f64, value: f64| -> Result<f64> {
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFinite { coefficient, t, v })
        }
    };

    let mut checks = Vec::with_capacity(3);

    let mut worst: Option<SamplePoint> = None;
    for &t in &ts {
        let value = finite("theta", t, 0.0, spec.theta.value(t))?.abs();
        record_excess(&mut worst, t, 0.0, value, spec.theta.bound);
    }
    checks.push(ConditionCheck {
        condition: Condition::MultiplierBounded,
        passed: worst.is_none(),
        worst,
    });

    let mut worst: Option<SamplePoint> = None;
    let ys = span(bounds.y_range);
    for &t in &ts {
        for &y in &ys {
            let value = finite("sigma2", t, y, spec.sigma2.eval(t, y))?.abs();
            record_excess(&mut worst, t, y, value, spec.sigma2_bound);
        }
    }
    checks.push(ConditionCheck {
        condition: Condition::Sigma2Bounded,
        passed: worst.is_none(),
        worst,
    });

    let mut worst: Option<SamplePoint> = None;
    let xs = span(bounds.x_range);
    for &t in &ts {
        for &x in &xs {
            let s = finite("sigma1", t, x, spec.sigma1.eval(t, x))?;
            record_excess(&mut worst, t, x, s * s, spec.growth_k * (1.0 + x * x));
        }
    }
    checks.push(ConditionCheck {
        condition: Condition::Sigma1Growth,
        passed: worst.is_none(),
        worst,
    });

    Ok(checks)
}

fn record_excess(worst: &mut Option<SamplePoint>, t: f64, v: f64, value: f64, limit: f64) {
    if value <= limit * (1.0 + RELATIVE_SLACK) {
        return;
    }
    let excess = value - limit;
    if worst.as_ref().is_none_or(|w| excess > w.value - w.limit) {
        *worst = Some(SamplePoint { t, v, value, limit });
    }
}

/// Default Simpson refinement per grid interval for [`limit_path`].
pub const LIMIT_REFINEMENT: usize = 4;

/// `x_{t_i} = x₀ exp(∫₀^{t_i} θ)` on the grid.
pub fn limit_path(spec: &ModelSpec, grid: &PathGrid) -> Result<Vec<f64>> {
    limit_path_refined(spec, grid, LIMIT_REFINEMENT)
}

/// As [`limit_path`], with each grid interval split into `refinement`
/// Simpson panels (rounded up to even).
pub fn limit_path_refined(spec: &ModelSpec, grid: &PathGrid, refinement: usize) -> Result<Vec<f64>> {
    let panels = (refinement.max(2) + 1) & !1;
    let mut out = Vec::with_capacity(grid.n_steps + 1);
    let mut integral = 0.0;
    out.push(spec.x0);
    for i in 0..grid.n_steps {
        let (a, b) = (grid.time(i), grid.time(i + 1));
        let piece = simpson(|s| spec.theta.value(s), a, b, panels);
        if !piece.is_finite() {
            return Err(Error::NonFinite {
                coefficient: "theta",
                t: a,
                v: 0.0,
            });
        }
        integral += piece;
        out.push(spec.x0 * integral.exp());
    }
    Ok(out)
}

/// `J^{(order)}(t)` for `J(t) = θ(t) x_t`.
///
/// Uses `x' = θx`, so `J^{(n)} = x^{(n+1)}` and
/// `x^{(m+1)} = Σ_{j≤m} C(m,j) θ^{(j)} x^{(m-j)}`. Falls back to
/// [`limit_path_derivative_numeric`] when θ has no closed-form derivatives.
pub fn limit_path_derivatives(spec: &ModelSpec, t: f64, order: usize) -> Result<f64> {
    let available = spec.theta.k + 1;
    if order > available {
        return Err(Error::UnsupportedOrder { order, available });
    }
    let thetas: Option<Vec<f64>> = (0..=order).map(|j| spec.theta.family.derivative(t, j)).collect();
    let Some(thetas) = thetas else {
        return Ok(limit_path_derivative_numeric(spec, t, order));
    };
    let mut xs = Vec::with_capacity(order + 2);
    xs.push(spec.limit_value(t));
    for m in 0..=order {
        let mut binom = 1.0;
        let mut next = 0.0;
        for j in 0..=m {
            next += binom * thetas[j] * xs[m - j];
            binom = binom * (m - j) as f64 / (j + 1) as f64;
        }
        xs.push(next);
    }
    Ok(xs[order + 1])
}

/// Central finite difference of `J` of the given order, step `h = T·1e-4`,
/// with one Richardson extrapolation step. Accurate for low orders only.
pub fn limit_path_derivative_numeric(spec: &ModelSpec, t: f64, order: usize) -> f64 {
    if order == 0 {
        return spec.j(t);
    }
    let central = |h: f64| -> f64 {
        // Δ_h^n J(t) / h^n on the symmetric stencil t + (n/2 - i) h
        let n = order;
        let mut binom = 1.0;
        let mut acc = 0.0;
        for i in 0..=n {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * spec.j(t + (n as f64 / 2.0 - i as f64) * h);
            binom = binom * (n - i) as f64 / (i + 1) as f64;
        }
        acc / h.powi(n as i32)
    };
    let h = spec.horizon * 1e-4;
    (4.0 * central(h / 2.0) - central(h)) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec_with(theta: ThetaFamily, bound: f64, x0: f64, horizon: f64) -> ModelSpec {
        ModelSpec::additive(Multiplier::new(theta, bound, 3), x0, horizon)
    }

    /// Adaptive Simpson, used as an independent quadrature oracle.
    fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn step(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        step(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    #[test]
    fn bounded_sine_passes_multiplier_check() {
        let spec = spec_with(
            ThetaFamily::Trig {
                a: 0.0,
                b: 1.0,
                omega: 1.0,
            },
            1.0,
            1.0,
            1.0,
        );
        let checks = validate_model(&spec, 100).unwrap();
        assert!(checks[0].passed);
        assert_eq!(checks[0].condition, Condition::MultiplierBounded);
    }

    #[test]
    fn identity_sigma2_fails_boundedness() {
        let mut spec = spec_with(ThetaFamily::Constant { c: 0.0 }, 1.0, 1.0, 1.0);
        spec.sigma2 = ScalarField2::Identity;
        let bounds = ValidationBox {
            x_range: 10.0,
            y_range: 1e6,
        };
        let checks = validate_model_in(&spec, 200, bounds).unwrap();
        assert!(!checks[1].passed);
        let worst = checks[1].worst.as_ref().unwrap();
        assert_eq!(worst.v.abs(), 1e6);
    }

    #[test]
    fn linear_growth_passes_with_equality() {
        let mut spec = spec_with(ThetaFamily::Constant { c: 0.0 }, 1.0, 1.0, 1.0);
        spec.sigma1 = ScalarField2::LinearGrowth { kappa: 1.0 };
        spec.growth_k = 1.0;
        let checks = validate_model(&spec, 150).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
        spec.growth_k = 0.99;
        assert!(!validate_model(&spec, 150).unwrap()[2].passed);
    }

    #[test]
    fn validation_rejects_sparse_lattice_and_nan() {
        let spec = spec_with(ThetaFamily::Constant { c: 0.0 }, 1.0, 1.0, 1.0);
        assert!(matches!(validate_model(&spec, 99), Err(Error::Precondition(_))));
        let spec = spec_with(ThetaFamily::Constant { c: f64::NAN }, 1.0, 1.0, 1.0);
        assert!(matches!(
            validate_model(&spec, 100),
            Err(Error::NonFinite {
                coefficient: "theta",
                ..
            })
        ));
    }

    #[test]
    fn validation_is_pure() {
        let mut spec = spec_with(
            ThetaFamily::Trig {
                a: 1.0,
                b: 0.5,
                omega: 2.0,
            },
            1.2,
            1.0,
            2.0,
        );
        spec.sigma1 = ScalarField2::BoundedSigmoid { s: 1.0 };
        assert_eq!(validate_model(&spec, 120).unwrap(), validate_model(&spec, 120).unwrap());
    }

    #[test]
    fn limit_path_zero_and_constant_drift() {
        let grid = PathGrid::new(1.0, 64).unwrap();
        let spec = spec_with(ThetaFamily::Constant { c: 0.0 }, 1.0, 1.0, 1.0);
        assert!(limit_path(&spec, &grid).unwrap().iter().all(|&x| x == 1.0));
        let spec = spec_with(ThetaFamily::Constant { c: 0.7 }, 1.0, 1.0, 1.0);
        let path = limit_path(&spec, &grid).unwrap();
        assert_relative_eq!(path[64], 0.7f64.exp(), epsilon = 1e-13);
    }

    #[test]
    fn limit_path_sine_matches_quadrature_oracle() {
        let pi = std::f64::consts::PI;
        let spec = spec_with(
            ThetaFamily::Trig {
                a: 0.0,
                b: 1.0,
                omega: 1.0,
            },
            1.0,
            2.0,
            pi,
        );
        let grid = PathGrid::new(pi, 256).unwrap();
        let path = limit_path(&spec, &grid).unwrap();
        let oracle = 2.0 * adaptive(&|s: f64| s.sin(), 0.0, pi, 1e-14).exp();
        assert!((oracle - 2.0 * 2f64.exp()).abs() < 1e-11);
        assert!((path[256] - oracle).abs() < 1e-10, "{} vs {}", path[256], oracle);
    }

    #[test]
    fn limit_path_is_multiplicative_and_bounded() {
        let spec = spec_with(
            ThetaFamily::Trig {
                a: 0.3,
                b: 0.9,
                omega: 3.0,
            },
            1.2,
            1.5,
            2.0,
        );
        let grid = PathGrid::new(2.0, 200).unwrap();
        let path = limit_path(&spec, &grid).unwrap();
        let (s, t) = (60, 170);
        let ratio = path[t] / path[s];
        let oracle = adaptive(&|u| spec.theta.value(u), grid.time(s), grid.time(t), 1e-13).exp();
        assert_relative_eq!(ratio, oracle, max_relative = 1e-10);
        let l = spec.theta.bound;
        for (i, &x) in path.iter().enumerate() {
            let t = grid.time(i);
            assert!(x > 0.0);
            assert!(x >= spec.x0 * (-l * t).exp() * (1.0 - 1e-12));
            assert!(x <= spec.x0 * (l * t).exp() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn j_derivatives_closed_forms() {
        let c = 0.8;
        let spec = spec_with(ThetaFamily::Constant { c }, 1.0, 1.0, 1.0);
        let t = 0.4;
        assert_relative_eq!(
            limit_path_derivatives(&spec, t, 0).unwrap(),
            c * (c * t).exp(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            limit_path_derivatives(&spec, t, 1).unwrap(),
            c * c * (c * t).exp(),
            max_relative = 1e-12
        );
        let zero = spec_with(ThetaFamily::Constant { c: 0.0 }, 1.0, 1.0, 1.0);
        for j in 0..=4 {
            assert_eq!(limit_path_derivatives(&zero, t, j).unwrap(), 0.0);
        }
    }

    #[test]
    fn j_derivative_of_affine_multiplier_at_origin() {
        let (a, b) = (0.6, -0.4);
        let spec = spec_with(ThetaFamily::Poly { coeffs: vec![a, b] }, 2.0, 1.0, 1.0);
        let analytic = limit_path_derivatives(&spec, 0.0, 1).unwrap();
        assert_relative_eq!(analytic, b + a * a, max_relative = 1e-12);
        // finite-difference oracle on the closed form (a+bt)exp(at+bt²/2)
        let j = |t: f64| (a + b * t) * (a * t + b * t * t / 2.0).exp();
        let h = 1e-5;
        let fd = (j(h) - j(-h)) / (2.0 * h);
        assert!((analytic - fd).abs() < 1e-8);
    }

    #[test]
    fn numeric_fallback_agrees_with_analytic() {
        let spec = spec_with(
            ThetaFamily::Trig {
                a: 1.0,
                b: 0.5,
                omega: 2.0,
            },
            1.5,
            1.0,
            4.0,
        );
        for (order, tol) in [(0, 1e-12), (1, 1e-7), (2, 1e-4)] {
            let t = 1.3;
            let a = limit_path_derivatives(&spec, t, order).unwrap();
            let n = limit_path_derivative_numeric(&spec, t, order);
            assert!((a - n).abs() < tol * a.abs().max(1.0), "order {order}: {a} vs {n}");
        }
    }

    #[test]
    fn derivative_order_beyond_smoothness_is_rejected() {
        let mut spec = spec_with(ThetaFamily::Constant { c: 1.0 }, 1.0, 1.0, 1.0);
        spec.theta.k = 1;
        assert!(limit_path_derivatives(&spec, 0.5, 2).is_ok());
        assert!(matches!(
            limit_path_derivatives(&spec, 0.5, 3),
            Err(Error::UnsupportedOrder { order: 3, available: 2 })
        ));
    }

    #[test]
    fn trig_and_poly_derivatives() {
        let trig = ThetaFamily::Trig {
            a: 1.0,
            b: 0.5,
            omega: 2.0,
        };
        let t = 0.3;
        assert_relative_eq!(trig.derivative(t, 1).unwrap(), (2.0 * t).cos(), max_relative = 1e-14);
        assert_relative_eq!(
            trig.derivative(t, 2).unwrap(),
            -2.0 * (2.0 * t).sin(),
            max_relative = 1e-14
        );
        let poly = ThetaFamily::Poly {
            coeffs: vec![1.0, 2.0, 3.0, 4.0],
        };
        assert_relative_eq!(poly.derivative(2.0, 1).unwrap(), 2.0 + 6.0 * 2.0 + 12.0 * 4.0);
        assert_relative_eq!(poly.derivative(2.0, 2).unwrap(), 6.0 + 24.0 * 2.0);
        assert_eq!(poly.derivative(2.0, 4).unwrap(), 0.0);
    }

    #[test]
    fn nearest_index_breaks_ties_low() {
        let grid = PathGrid::new(1.0, 4).unwrap();
        assert_eq!(grid.nearest_index(0.125), 0);
        assert_eq!(grid.nearest_index(0.13), 1);
        assert_eq!(grid.nearest_index(1.0), 4);
        assert_eq!(grid.time(4), 1.0);
        assert!(PathGrid::new(1.0, 0).is_err());
    }
}
