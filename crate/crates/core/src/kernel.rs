//! Jackson-type trigonometric kernel.
//!
//! `J_n(t) = Σ â_k cos(kt) = (1/π)|Σ a_k e^{ikt}|²` with
//! `a_k = sin((k+1)π/(n+2)) / sqrt(2 Σ_j sin²((j+1)π/(n+2)))`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points used for the first-moment integral, whose integrand `|t|` has a kink.
pub const MOMENT_QUAD_POINTS: usize = 1 << 16;

/// Degree-`n` kernel with its base and cosine coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacksonKernel {
    pub degree: usize,
    pub base: Vec<f64>,
    pub cosine: Vec<f64>,
}

/// Result of [`kernel_checks`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelChecks {
    pub degree: usize,
    pub normality: f64,
    pub scaled_first_moment: f64,
    pub min_value: f64,
    pub max_abs_cosine: f64,
    pub adjacent_sum_error: f64,
}

impl KernelChecks {
    pub fn passes(&self) -> bool {
        (self.normality - 1.0).abs() <= 1e-10
            && self.scaled_first_moment <= PI * PI / 2.0 + 1e-8
            && self.min_value >= -1e-12
            && self.max_abs_cosine <= 5.0 * PI
            && self.adjacent_sum_error <= 1e-12
    }
}

/// Base coefficients `a_{k,n}`, `k = 0..=n`.
pub fn jackson_base_coeffs(n: usize) -> Vec<f64> {
    let step = PI / (n as f64 + 2.0);
    let s: Vec<f64> = (0..=n).map(|k| ((k as f64 + 1.0) * step).sin()).collect();
    let norm = (2.0 * s.iter().map(|v| v * v).sum::<f64>()).sqrt();
    s.into_iter().map(|v| v / norm).collect()
}

/// Cosine coefficients `â_0 = 1/(2π)`, `â_k = (2/π) Σ_j a_j a_{j+k}`.
pub fn jackson_hat_coeffs(n: usize) -> Vec<f64> {
    let a = jackson_base_coeffs(n);
    let mut hat = vec![0.0; n + 1];
    hat[0] = 1.0 / (2.0 * PI);
    for k in 1..=n {
        let s: f64 = (0..=n - k).map(|j| a[j] * a[j + k]).sum();
        hat[k] = 2.0 / PI * s;
    }
    hat
}

impl JacksonKernel {
    pub fn new(n: usize) -> Self {
        JacksonKernel { degree: n, base: jackson_base_coeffs(n), cosine: jackson_hat_coeffs(n) }
    }

    /// `Σ_k â_k cos(kt)`.
    pub fn eval(&self, t: f64) -> f64 {
        kernel_eval(self, t)
    }

    /// `(1/π)|Σ a_k e^{ikt}|²`, the squared-modulus form.
    pub fn eval_modulus_form(&self, t: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (k, a) in self.base.iter().enumerate() {
            let (s, c) = (k as f64 * t).sin_cos();
            re += a * c;
            im += a * s;
        }
        (re * re + im * im) / PI
    }

    /// `Σ_k a_k a_{k+1}`, which equals `cos(π/(n+2))/2`.
    pub fn adjacent_sum(&self) -> f64 {
        self.base.windows(2).map(|w| w[0] * w[1]).sum()
    }
}

/// Evaluates the cosine series of the kernel at `t`.
pub fn kernel_eval(kernel: &JacksonKernel, t: f64) -> f64 {
    kernel.cosine.iter().enumerate().map(|(k, c)| c * (k as f64 * t).cos()).sum()
}

/// Periodic trapezoid nodes on `[-π, π)`.
pub(crate) fn periodic_nodes(m: usize) -> impl Iterator<Item = f64> {
    let h = 2.0 * PI / m as f64;
    (0..m).map(move |i| -PI + i as f64 * h)
}

/// Checks normality, the scaled first moment, positivity, the `5π` coefficient
/// bound and the adjacent-sum identity.
///
/// `quad_points` drives the normality integral and the positivity sampling and
/// must be at least `4(n+2)`. The first moment always uses
/// [`MOMENT_QUAD_POINTS`] points.
pub fn kernel_checks(kernel: &JacksonKernel, quad_points: usize) -> Result<KernelChecks> {
    let n = kernel.degree;
    let need = 4 * (n + 2);
    if quad_points < need {
        return Err(Error::Quadrature { got: quad_points, need });
    }
    let h = 2.0 * PI / quad_points as f64;
    let mut normality = 0.0;
    let mut min_value = f64::INFINITY;
    for t in periodic_nodes(quad_points) {
        let v = kernel.eval(t);
        normality += v;
        min_value = min_value.min(v);
    }
    normality *= h;

    let hm = 2.0 * PI / MOMENT_QUAD_POINTS as f64;
    let moment: f64 = periodic_nodes(MOMENT_QUAD_POINTS).map(|t| t.abs() * kernel.eval(t)).sum::<f64>() * hm;

    let max_abs_cosine = kernel.cosine.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let adjacent_sum_error = (kernel.adjacent_sum() - (PI / (n as f64 + 2.0)).cos() / 2.0).abs();
    Ok(KernelChecks {
        degree: n,
        normality,
        scaled_first_moment: n as f64 * moment,
        min_value,
        max_abs_cosine,
        adjacent_sum_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_small_degrees() {
        let a0 = jackson_base_coeffs(0);
        assert!((a0[0] - 0.5f64.sqrt()).abs() < 1e-15);
        let a1 = jackson_base_coeffs(1);
        assert!((a1[0] - 0.5).abs() < 1e-15 && (a1[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hat_first_coefficients() {
        assert!((jackson_hat_coeffs(1)[1] - 1.0 / (2.0 * PI)).abs() < 1e-15);
        for n in [1usize, 2, 7, 30] {
            let hat = jackson_hat_coeffs(n);
            assert_eq!(hat[0], 1.0 / (2.0 * PI));
            assert!((hat[1] - (PI / (n as f64 + 2.0)).cos() / PI).abs() < 1e-14);
        }
    }

    #[test]
    fn eval_known_values() {
        let k0 = JacksonKernel::new(0);
        assert!((k0.eval(1.234) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let k1 = JacksonKernel::new(1);
        assert!((k1.eval(0.0) - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn rejects_coarse_quadrature() {
        let k = JacksonKernel::new(4);
        assert!(matches!(kernel_checks(&k, 23), Err(Error::Quadrature { need: 24, .. })));
        assert!(kernel_checks(&k, 24).is_ok());
    }

    #[test]
    fn degree_zero_checks() {
        let c = kernel_checks(&JacksonKernel::new(0), 8).unwrap();
        assert!((c.normality - 1.0).abs() < 1e-14);
        assert_eq!(c.scaled_first_moment, 0.0);
    }
}
