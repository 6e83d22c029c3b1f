//! Compactly supported kernels with vanishing moments, and the two bandwidth
//! rules.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MASS_TOL: f64 = 1e-10;
const MOMENT_TOL: f64 = 1e-9;
const QUAD_NODES: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelFamily {
    /// Uniform density on `[lower, upper]`.
    Rectangular {
        #[serde(default = "half_down")]
        lower: f64,
        #[serde(default = "half_up")]
        upper: f64,
    },
    /// `1 - |u|` on `[-1, 1]`.
    Triangular,
    /// `¾(1 - u²)` on `[-1, 1]`.
    Epanechnikov,
    /// Minimum-degree polynomial on `[-1, 1]` with moments `1..=order` zero.
    PolynomialOrderK,
}

fn half_down() -> f64 {
    -0.5
}
fn half_up() -> f64 {
    0.5
}

impl KernelFamily {
    pub fn rectangular() -> Self {
        KernelFamily::Rectangular {
            lower: -0.5,
            upper: 0.5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Rectangular { .. } => "rectangular",
            KernelFamily::Triangular => "triangular",
            KernelFamily::Epanechnikov => "epanechnikov",
            KernelFamily::PolynomialOrderK => "polynomial_order_k",
        }
    }
}

/// A kernel `G` supported on `[lower, upper]` with `lower < 0 < upper`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Kernel {
    pub family: KernelFamily,
    pub lower: f64,
    pub upper: f64,
    /// Moments `1..=order` vanish.
    pub order: usize,
    /// Legendre coefficients for polynomial kernels.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    legendre: Vec<f64>,
}

impl Kernel {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if u < self.lower || u > self.upper {
            return 0.0;
        }
        match self.family {
            KernelFamily::Rectangular { .. } => 1.0 / (self.upper - self.lower),
            KernelFamily::Triangular => 1.0 - u.abs(),
            KernelFamily::Epanechnikov => 0.75 * (1.0 - u * u),
            KernelFamily::PolynomialOrderK => legendre_series(&self.legendre, u),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn is_symmetric(&self) -> bool {
        self.lower == -self.upper
    }

    fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        // split at the origin: triangular has a kink there
        gauss_legendre(&f, self.lower, 0.0) + gauss_legendre(&f, 0.0, self.upper)
    }
}

/// Which moment functional [`kernel_moment`] computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Moment {
    /// `∫ u^j G(u) du`
    Plain,
    /// `∫ |u^j G(u)| du`
    Absolute,
    /// `∫ u^{2j} G(u)² du`
    Squared,
}

pub fn kernel_moment(kernel: &Kernel, j: usize, kind: Moment) -> f64 {
    let p = j as i32;
    match kind {
        Moment::Plain => kernel.integrate(|u| u.powi(p) * kernel.eval(u)),
        Moment::Absolute => kernel.integrate(|u| (u.powi(p) * kernel.eval(u)).abs()),
        Moment::Squared => kernel.integrate(|u| {
            let g = u.powi(p) * kernel.eval(u);
            g * g
        }),
    }
}

pub fn make_kernel(family: KernelFamily, order: usize) -> Result<Kernel> {
    let (lower, upper, legendre) = match &family {
        KernelFamily::Rectangular { lower, upper } => {
            if !(*lower < 0.0 && *upper > 0.0) {
                return Err(Error::Kernel(format!("support [{lower}, {upper}] must straddle 0")));
            }
            (*lower, *upper, Vec::new())
        }
        KernelFamily::Triangular | KernelFamily::Epanechnikov => (-1.0, 1.0, Vec::new()),
        KernelFamily::PolynomialOrderK => (-1.0, 1.0, moment_system(order)?),
    };
    let kernel = Kernel {
        family,
        lower,
        upper,
        order,
        legendre,
    };
    if !matches!(kernel.family, KernelFamily::PolynomialOrderK) && order > usize::from(kernel.is_symmetric()) {
        return Err(Error::Kernel(format!(
            "{} kernel on [{lower}, {upper}] has order {}; use polynomial_order_k for order {order}",
            kernel.family.name(),
            usize::from(kernel.is_symmetric()),
        )));
    }
    check_moments(&kernel)?;
    Ok(kernel)
}

fn check_moments(kernel: &Kernel) -> Result<()> {
    let mass = kernel_moment(kernel, 0, Moment::Plain);
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::Kernel(format!("kernel mass is {mass}, not 1")));
    }
    for j in 1..=kernel.order {
        let m = kernel_moment(kernel, j, Moment::Plain);
        if m.abs() > MOMENT_TOL {
            return Err(Error::Kernel(format!("moment {j} is {m:e}, not 0")));
        }
    }
    Ok(())
}

/// Solves `∫ u^i Σ_j c_j P_j(u) du = δ_{i0}`, `i, j = 0..=order`, on `[-1, 1]`.
fn moment_system(order: usize) -> Result<Vec<f64>> {
    let n = order + 1;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut basis = vec![0.0; j + 1];
            basis[j] = 1.0;
            m[(i, j)] = gauss_legendre(&|u: f64| u.powi(i as i32) * legendre_series(&basis, u), -1.0, 1.0);
        }
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[0] = 1.0;
    let coeffs = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Kernel(format!("singular moment system for order {order}")))?;
    Ok(coeffs.iter().map(|&c| if c.abs() < 1e-15 { 0.0 } else { c }).collect())
}

/// `Σ c_j P_j(u)` by the three-term recurrence.
fn legendre_series(coeffs: &[f64], u: f64) -> f64 {
    let mut acc = 0.0;
    let (mut p_prev, mut p) = (0.0, 1.0);
    for (n, c) in coeffs.iter().enumerate() {
        acc += c * p;
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * u * p - nf * p_prev) / (nf + 1.0);
        p_prev = p;
        p = next;
    }
    acc
}

fn gauss_legendre(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gl_rule();
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    nodes
        .iter()
        .zip(weights)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

fn gl_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = QUAD_NODES;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        (nodes, weights)
    })
}

/// `φ_ε = ε^{1/(k+2)}`, the bandwidth for the convolution estimator.
pub fn bandwidth_main(epsilon: f64, k: usize) -> Result<f64> {
    check_epsilon(epsilon)?;
    Ok(epsilon.powf(1.0 / (k as f64 + 2.0)))
}

/// `φ_ε = ε^{2/(2ρ-1)}`, the bandwidth for the stopped-process estimator.
pub fn bandwidth_alt(epsilon: f64, rho: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if !(rho > 1.0) {
        return Err(Error::Domain(format!("smoothness rho must exceed 1, got {rho}")));
    }
    Ok(epsilon.powf(2.0 / (2.0 * rho - 1.0)))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("epsilon must lie in (0, 1), got {epsilon}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rectangular_unit_mass_zero_mean() {
        let k = make_kernel(KernelFamily::rectangular(), 1).unwrap();
        assert_eq!(k.eval(0.3), 1.0);
        assert_eq!(k.eval(0.6), 0.0);
        assert_relative_eq!(kernel_moment(&k, 0, Moment::Plain), 1.0, epsilon = 1e-14);
        assert!(kernel_moment(&k, 1, Moment::Plain).abs() < 1e-14);
    }

    #[test]
    fn epanechnikov_moments() {
        let k = make_kernel(KernelFamily::Epanechnikov, 1).unwrap();
        assert_relative_eq!(kernel_moment(&k, 2, Moment::Plain), 0.2, epsilon = 1e-14);
        assert_relative_eq!(kernel_moment(&k, 0, Moment::Squared), 0.6, epsilon = 1e-14);
    }

    #[test]
    fn triangular_kink_is_integrated_exactly() {
        let k = make_kernel(KernelFamily::Triangular, 1).unwrap();
        assert_relative_eq!(kernel_moment(&k, 0, Moment::Plain), 1.0, epsilon = 1e-14);
        // ∫ u²(1-|u|) = 1/6, ∫(1-|u|)² = 2/3
        assert_relative_eq!(kernel_moment(&k, 2, Moment::Plain), 1.0 / 6.0, epsilon = 1e-14);
        assert_relative_eq!(kernel_moment(&k, 0, Moment::Squared), 2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn order_two_polynomial_kernel() {
        let k = make_kernel(KernelFamily::PolynomialOrderK, 2).unwrap();
        // minimum-degree solution: (9 - 15u²)/8
        for u in [-0.9, -0.2, 0.0, 0.5] {
            assert_relative_eq!(k.eval(u), (9.0 - 15.0 * u * u) / 8.0, epsilon = 1e-13);
        }
        for j in 1..=3 {
            assert!(kernel_moment(&k, j, Moment::Plain).abs() < 1e-13);
        }
        assert!(kernel_moment(&k, 4, Moment::Plain).abs() > 1e-3);
    }

    #[test]
    fn odd_moments_of_symmetric_kernels_vanish() {
        for (fam, order) in [
            (KernelFamily::rectangular(), 1),
            (KernelFamily::Triangular, 1),
            (KernelFamily::Epanechnikov, 1),
            (KernelFamily::PolynomialOrderK, 4),
        ] {
            let k = make_kernel(fam, order).unwrap();
            for j in [1, 3, 5, 7] {
                assert!(kernel_moment(&k, j, Moment::Plain).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn asymmetric_rectangular_is_order_zero() {
        let fam = KernelFamily::Rectangular {
            lower: -0.25,
            upper: 0.75,
        };
        let k = make_kernel(fam.clone(), 0).unwrap();
        assert_relative_eq!(kernel_moment(&k, 1, Moment::Plain), 0.25, epsilon = 1e-14);
        assert!(make_kernel(fam, 1).is_err());
        assert!(make_kernel(KernelFamily::Epanechnikov, 2).is_err());
        assert!(make_kernel(KernelFamily::Rectangular { lower: 0.1, upper: 1.0 }, 0).is_err());
    }

    #[test]
    fn bandwidth_rules() {
        assert_relative_eq!(
            bandwidth_main(0.01, 1).unwrap(),
            0.215_443_469_003_188_4,
            epsilon = 1e-12
        );
        assert_relative_eq!(bandwidth_main(0.01, 0).unwrap(), 0.1, epsilon = 1e-15);
        assert_relative_eq!(
            bandwidth_alt(0.01, 2.0).unwrap(),
            0.046_415_888_336_127_8,
            epsilon = 1e-12
        );
        assert_relative_eq!(bandwidth_alt(0.04, 1.5).unwrap(), 0.04, epsilon = 1e-15);
        assert!(bandwidth_main(1.0, 1).is_err());
        assert!(bandwidth_main(0.0, 1).is_err());
        assert!(bandwidth_alt(0.5, 1.0).is_err());
    }

    #[test]
    fn bandwidths_increase_towards_one() {
        let eps: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        let main: Vec<f64> = eps.iter().map(|&e| bandwidth_main(e, 2).unwrap()).collect();
        assert!(main.windows(2).all(|w| w[0] < w[1]));
        assert!(*main.last().unwrap() < 1.0 && *main.last().unwrap() > 0.99);
        let rhos = [2.0, 5.0, 20.0, 200.0, 2000.0];
        let alt: Vec<f64> = rhos.iter().map(|&r| bandwidth_alt(0.3, r).unwrap()).collect();
        assert!(alt.windows(2).all(|w| w[0] < w[1]));
        assert!(alt[4] < 1.0 && alt[4] > 0.998);
    }
}
