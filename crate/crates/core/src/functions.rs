//! Registry of named target functions.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chebseries::cheb_t;
use crate::error::{Error, Result};

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A named real function on `ℝ^d`.
#[derive(Clone)]
pub struct TargetFn {
    pub name: String,
    pub params: Vec<f64>,
    eval: Evaluator,
}

impl fmt::Debug for TargetFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetFn").field("name", &self.name).field("params", &self.params).finish()
    }
}

/// Serializable reference to a registry entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl TargetFn {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        TargetFn { name: name.into(), params: vec![], eval: Arc::new(f) }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// Precomposition `x ↦ f(g(x))` with an affine or other point map.
    pub fn compose_with(&self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> TargetFn {
        let inner = self.eval.clone();
        TargetFn { name: self.name.clone(), params: self.params.clone(), eval: Arc::new(move |x| inner(&g(x))) }
    }

    pub fn from_spec(spec: &FunctionSpec) -> Result<Self> {
        lookup(&spec.name, &spec.params)
    }
}

/// `−x^{1/3} ln x` with value 0 at the origin, extended evenly to negative input.
pub fn x13lnx(x: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        0.0
    } else {
        -a.cbrt() * a.ln()
    }
}

/// `ψ·sqrt|x²−y²|·ln(1/(x²+y²))`, zero at the origin.
pub fn rot_sqrt_log(x: f64, y: f64, cutoff: Option<f64>) -> f64 {
    let r2 = x * x + y * y;
    if r2 == 0.0 {
        return 0.0;
    }
    let psi = match cutoff {
        None => 1.0,
        Some(r0) => {
            let r = r2.sqrt();
            if r <= 0.5 * r0 {
                1.0
            } else if r >= r0 {
                0.0
            } else {
                let s = (r - 0.5 * r0) / (0.5 * r0);
                (0.5 * std::f64::consts::PI * s).cos().powi(2)
            }
        }
    };
    psi * (x * x - y * y).abs().sqrt() * (1.0 / r2).ln()
}

fn param(params: &[f64], i: usize, default: f64) -> f64 {
    params.get(i).copied().unwrap_or(default)
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| Error::Invalid(format!("expected a bracketed list, got {s:?}")))?;
    inner
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Invalid(format!("bad coefficient {t:?}: {e}"))))
        .collect()
}

/// Resolves a registry name.
///
/// | name | value |
/// |---|---|
/// | `constant` | `params[0]` (default 1) |
/// | `identity_sum` | `Σ x_i` |
/// | `abs_sum` | `Σ |x_i − params[i]|` (missing shifts are 0) |
/// | `x13lnx` | `−x^{1/3} ln x`, 0 at 0 |
/// | `max_exp_diff` | `max{e^{x−y}, e^{y−x}}` |
/// | `rot_sqrt_log` | `ψ sqrt|x²−y²| ln(1/(x²+y²))`; `params[0]` is an optional cutoff radius |
/// | `exp_sum` | `exp(a Σ x_i)`, `a = params[0]` (default 1) |
/// | `runge` | `1/(1 + c Σ x_i²)`, `c = params[0]` (default 25) |
/// | `cheb:k` | `Π_i T_k(x_i)` |
/// | `poly:[c0,c1,..]` | `Σ_j c_j x_0^j` |
pub fn lookup(name: &str, params: &[f64]) -> Result<TargetFn> {
    let p = params.to_vec();
    let f: TargetFn = if let Some(k) = name.strip_prefix("cheb:") {
        let k: usize = k.trim().parse().map_err(|_| Error::Invalid(format!("bad Chebyshev degree in {name:?}")))?;
        TargetFn::new(name, move |x| x.iter().map(|&xi| cheb_t(k, xi)).product())
    } else if let Some(list) = name.strip_prefix("poly:") {
        let c = parse_list(list)?;
        if c.is_empty() {
            return Err(Error::Invalid("poly needs at least one coefficient".into()));
        }
        TargetFn::new(name, move |x| c.iter().rev().fold(0.0, |acc, cj| acc * x[0] + cj))
    } else {
        match name {
            "constant" => {
                let c = param(&p, 0, 1.0);
                TargetFn::new(name, move |_| c)
            }
            "identity_sum" => TargetFn::new(name, |x| x.iter().sum()),
            "abs_sum" => {
                let s = p.clone();
                TargetFn::new(name, move |x| x.iter().enumerate().map(|(i, xi)| (xi - param(&s, i, 0.0)).abs()).sum())
            }
            "x13lnx" => TargetFn::new(name, |x| x13lnx(x[0])),
            "max_exp_diff" => TargetFn::new(name, |x| (x[0] - x[1]).abs().exp()),
            "rot_sqrt_log" => {
                let cutoff = p.first().copied();
                TargetFn::new(name, move |x| rot_sqrt_log(x[0], x[1], cutoff))
            }
            "exp_sum" => {
                let a = param(&p, 0, 1.0);
                TargetFn::new(name, move |x| (a * x.iter().sum::<f64>()).exp())
            }
            "runge" => {
                let c = param(&p, 0, 25.0);
                TargetFn::new(name, move |x| 1.0 / (1.0 + c * x.iter().map(|v| v * v).sum::<f64>()))
            }
            _ => return Err(Error::Invalid(format!("unknown function {name:?}"))),
        }
    };
    Ok(TargetFn { params: p, ..f })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_values() {
        assert_eq!(lookup("constant", &[2.5]).unwrap().eval(&[0.3]), 2.5);
        assert_eq!(lookup("identity_sum", &[]).unwrap().eval(&[0.25, 0.5]), 0.75);
        assert_eq!(lookup("abs_sum", &[1.0]).unwrap().eval(&[0.25, 0.5]), 1.25);
        assert_eq!(lookup("x13lnx", &[]).unwrap().eval(&[0.0]), 0.0);
        assert!((lookup("x13lnx", &[]).unwrap().eval(&[0.125]) - 0.5 * 8f64.ln()).abs() < 1e-15);
        assert_eq!(lookup("max_exp_diff", &[]).unwrap().eval(&[0.5, 0.5]), 1.0);
        assert_eq!(lookup("rot_sqrt_log", &[]).unwrap().eval(&[0.0, 0.0]), 0.0);
        assert_eq!(lookup("cheb:2", &[]).unwrap().eval(&[0.5]), -0.5);
        assert_eq!(lookup("poly:[1, 0, 2]", &[]).unwrap().eval(&[0.5]), 1.5);
        assert!((lookup("runge", &[]).unwrap().eval(&[0.2]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(lookup("nope", &[]).is_err());
        assert!(lookup("poly:[]", &[]).is_err());
        assert!(lookup("cheb:x", &[]).is_err());
    }

    #[test]
    fn cutoff_variant_vanishes_far_out() {
        assert_eq!(rot_sqrt_log(0.9, 0.1, Some(0.5)), 0.0);
        assert_eq!(rot_sqrt_log(0.2, 0.1, Some(0.5)), rot_sqrt_log(0.2, 0.1, None));
    }
}
