//! Measurements: sup errors, decay fits, support checks and bound tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::TargetFn;
use crate::geometry::Domain;
use crate::netir::ReluNetwork;
use crate::sampling::{linspace, RdSequence};

/// Tensor grid with `m` points per axis on the box `[lo, hi]`.
pub fn tensor_grid(lo: &[f64], hi: &[f64], m: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = lo.iter().zip(hi).map(|(a, b)| linspace(*a, *b, m)).collect();
    let total = axes.iter().map(|a| a.len()).product::<usize>();
    (0..total)
        .map(|mut idx| {
            let mut p = vec![0.0; axes.len()];
            for i in (0..axes.len()).rev() {
                let len = axes[i].len();
                p[i] = axes[i][idx % len];
                idx /= len;
            }
            p
        })
        .collect()
}

/// `count` low-discrepancy points in the box `[lo, hi]`.
pub fn quasi_random_points(lo: &[f64], hi: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let seq = RdSequence::new(lo.len(), seed);
    (0..count as u64).map(|k| seq.point_in_box(k, lo, hi)).collect()
}

/// Where a sup error was attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupError {
    pub max_abs_error: f64,
    pub argmax: Vec<f64>,
}

/// `max |net(x) − f(x)|` over `points`; the first maximizer wins ties.
pub fn sup_error(net: &ReluNetwork, f: &TargetFn, points: &[Vec<f64>]) -> Result<SupError> {
    sup_error_with(points, |x| (net.eval_scalar(x) - f.eval(x)).abs())
}

/// `max |g(x)|` over `points` for a pointwise error function `g`.
pub fn sup_error_with(points: &[Vec<f64>], err: impl Fn(&[f64]) -> f64 + Sync) -> Result<SupError> {
    if points.is_empty() {
        return Err(Error::Invalid("empty sample region".into()));
    }
    let errs: Vec<f64> = points.par_iter().map(|x| err(x)).collect();
    let (i, e) = errs.iter().enumerate().fold((0, f64::NEG_INFINITY), |(bi, be), (i, &e)| if e > be || e.is_nan() && !be.is_nan() { (i, e) } else { (bi, be) });
    Ok(SupError { max_abs_error: e, argmax: points[i].clone() })
}

/// One row of an error ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub n: f64,
    pub measured: f64,
    #[serde(default)]
    pub bound: f64,
}

/// Rows of (parameter, measured error, theoretical bound).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorLadder {
    pub rows: Vec<LadderRow>,
}

impl ErrorLadder {
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        ErrorLadder { rows: pairs.iter().map(|&(n, measured)| LadderRow { n, measured, bound: 0.0 }).collect() }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,measured,bound\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:e},{:e}\n", r.n, r.measured, r.bound));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// `err ≈ C·n^s`.
    Power,
    /// `err ≈ C·n^s·|ln n|`.
    PowerLog,
    /// `err ≈ C·e^{s·n}`.
    Exponential,
}

/// Least-squares fit in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub slope: f64,
    pub intercept: f64,
    /// `−slope` for the exponential model, `slope` otherwise.
    pub rate: f64,
    /// Root mean square of the log residuals.
    pub residual: f64,
    /// Rows whose measured value was floored to machine epsilon.
    pub floored: usize,
}

pub fn decay_fit(ladder: &ErrorLadder, model: DecayModel) -> Result<DecayFit> {
    if ladder.rows.len() < 4 {
        return Err(Error::Invalid(format!("decay fit needs at least 4 rows, got {}", ladder.rows.len())));
    }
    let mut floored = 0;
    let mut xs = vec![];
    let mut ys = vec![];
    for r in &ladder.rows {
        let mut m = r.measured;
        if !(m > 0.0) {
            m = f64::EPSILON;
            floored += 1;
        }
        let (x, y) = match model {
            DecayModel::Power => (r.n.ln(), m.ln()),
            DecayModel::PowerLog => (r.n.ln(), m.ln() - r.n.ln().abs().ln()),
            DecayModel::Exponential => (r.n, m.ln()),
        };
        xs.push(x);
        ys.push(y);
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("decay fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / k).sqrt();
    let rate = if model == DecayModel::Exponential { -slope } else { slope };
    Ok(DecayFit { model, slope, intercept, rate, residual, floored })
}

/// `max |net|` over `samples` points outside `k` by at least `margin`.
pub fn support_check(net: &ReluNetwork, k: &Domain, margin: f64, samples: usize, seed: u64) -> f64 {
    let pad = 0.5 * k.diameter() + 2.0 * margin;
    let pts = k.sample_exterior(samples, margin, pad, seed);
    pts.par_iter().map(|x| net.eval_scalar(x).abs()).reduce(|| 0.0, f64::max)
}

/// Parameters for [`bound_table`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// Polynomial or series degree.
    pub n: usize,
    /// Product accuracy level.
    pub big_n: u32,
    pub d: usize,
    /// Number of glued pieces.
    pub k: usize,
    pub m: f64,
    /// `max |a_j|` for the polynomial bound.
    pub coeff_max: f64,
}

/// Closed-form error bounds at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTable {
    /// `max|a_j|·n²·2^{−2N−1}`.
    pub polynomial: f64,
    /// `n²·3ⁿ·2^{−2N−1}`.
    pub chebyshev: f64,
    /// `Bx·By·2^{−2N}` with unit bounds.
    pub product: f64,
    /// `(3(k+2)²/4)·M·2^{−2N}`.
    pub glue: f64,
    /// `(k+2)²·M·2^{−2N}`, the tighter threshold.
    pub glue_tight: f64,
    /// `n^d·2^{−2N}`.
    pub tensor_products: f64,
    /// Set when `N = 0`, where every bound is trivially large.
    pub degenerate: bool,
}

pub fn bound_table(p: &BoundParams) -> BoundTable {
    let n = p.n as f64;
    let e = 2f64.powi(-2 * p.big_n as i32);
    let k2 = (p.k as f64 + 2.0).powi(2);
    BoundTable {
        polynomial: p.coeff_max * n * n * e / 2.0,
        chebyshev: cheb_gadget_bound(p.n, p.big_n),
        product: e,
        glue: 0.75 * k2 * p.m * e,
        glue_tight: k2 * p.m * e,
        tensor_products: n.powi(p.d as i32) * e,
        degenerate: p.big_n == 0,
    }
}

/// `k²·3^k·2^{−2N−1}`.
pub fn cheb_gadget_bound(k: usize, big_n: u32) -> f64 {
    let k = k as f64;
    k * k * 3f64.powf(k) * 2f64.powi(-2 * big_n as i32 - 1)
}

/// Sup of `|g(s+h) − g(s)|` over `0 < h ≤ t` on a periodic grid of `samples` points.
pub fn periodic_modulus(g: impl Fn(f64) -> f64 + Sync, t: f64, samples: usize) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let step = two_pi / samples as f64;
    let vals: Vec<f64> = (0..samples).map(|i| g(i as f64 * step)).collect();
    let shifts = ((t / step).floor() as usize).max(1);
    let mut best = (1..=shifts)
        .into_par_iter()
        .map(|s| (0..samples).map(|i| (vals[(i + s) % samples] - vals[i]).abs()).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max);
    // Exact step t from every grid point.
    let at_t = (0..samples).into_par_iter().map(|i| {
        let s = i as f64 * step;
        (g(s + t) - vals[i]).abs()
    });
    best = best.max(at_t.reduce(|| 0.0, f64::max));
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_power_ladder() {
        let pairs: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0].iter().map(|&n| (n, 1.0 / n)).collect();
        let fit = decay_fit(&ErrorLadder::from_pairs(&pairs), DecayModel::Power).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn synthetic_exponential_ladder() {
        let pairs: Vec<(f64, f64)> = (1..=6).map(|n| (n as f64, 3f64.powi(-n))).collect();
        let fit = decay_fit(&ErrorLadder::from_pairs(&pairs), DecayModel::Exponential).unwrap();
        assert!((fit.rate - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fit_floors_nonpositive_values() {
        let pairs = [(1.0, 1e-3), (2.0, 1e-4), (3.0, 0.0), (4.0, 1e-6)];
        let fit = decay_fit(&ErrorLadder::from_pairs(&pairs), DecayModel::Exponential).unwrap();
        assert_eq!(fit.floored, 1);
        assert!(decay_fit(&ErrorLadder::from_pairs(&pairs[..3]), DecayModel::Power).is_err());
    }

    #[test]
    fn bound_table_examples() {
        let b = bound_table(&BoundParams { n: 2, big_n: 10, d: 1, k: 2, m: 1.0, coeff_max: 2.0 });
        assert_eq!(b.chebyshev, 4.0 * 9.0 * 2f64.powi(-21));
        let g = bound_table(&BoundParams { n: 2, big_n: 8, d: 1, k: 2, m: 1.0, coeff_max: 1.0 });
        assert_eq!(g.glue, 12.0 * 2f64.powi(-16));
        assert!(bound_table(&BoundParams { n: 2, big_n: 0, d: 1, k: 1, m: 1.0, coeff_max: 1.0 }).degenerate);
    }

    #[test]
    fn grid_and_sup_error() {
        let g = tensor_grid(&[0.0, 0.0], &[1.0, 2.0], 3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[5], vec![0.5, 2.0]);
        let id = ReluNetwork::identity(1);
        let f = TargetFn::new("id", |x| x[0]);
        assert_eq!(sup_error(&id, &f, &tensor_grid(&[-1.0], &[1.0], 11)).unwrap().max_abs_error, 0.0);
        assert!(sup_error(&id, &f, &[]).is_err());
    }

    #[test]
    fn periodic_modulus_of_cosine() {
        let w = periodic_modulus(f64::cos, 0.1, 4096);
        assert!((w - 2.0 * (0.05f64).sin()).abs() < 1e-6);
    }
}
