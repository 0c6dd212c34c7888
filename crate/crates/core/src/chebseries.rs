//! Chebyshev coefficient tensors: kernel-smoothed (Jackson) and interpolation
//! paths, plus Clenshaw evaluation.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::TargetFn;
use crate::kernel::jackson_hat_coeffs;

/// Default cap on `d·(n+1)^d·quad_points` for tensor construction.
pub const DEFAULT_COEFF_BUDGET: u64 = 2_000_000_000;

/// Which construction produced a [`ChebTensor`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffPath {
    Kernel,
    Interp,
}

/// Dense `(n+1)^d` coefficient tensor, row-major with the first axis slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebTensor {
    pub dim: usize,
    pub degree: usize,
    pub path: CoeffPath,
    pub coeffs: Vec<f64>,
}

/// `T_k(x)` by the three-term recurrence.
pub fn cheb_t(k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut a, mut b) = (1.0, x);
            for _ in 2..=k {
                let c = 2.0 * x * b - a;
                a = b;
                b = c;
            }
            b
        }
    }
}

/// Monomial coefficients of `T_k`, lowest degree first.
pub fn cheb_monomial(k: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for _ in 2..=k {
        let mut next = vec![0.0; cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += 2.0 * c;
        }
        for (i, p) in prev.iter().enumerate() {
            next[i] -= p;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Clenshaw evaluation of `Σ c_k T_k(x)`.
pub fn clenshaw(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c.first().copied().unwrap_or(0.0) + x * b1 - b2
}

impl ChebTensor {
    pub fn len_per_axis(&self) -> usize {
        self.degree + 1
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &j| acc * (self.degree + 1) + j)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.coeffs[self.flat_index(idx)]
    }

    /// Multi-index of a flat position.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let m = self.degree + 1;
        let mut idx = vec![0; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = flat % m;
            flat /= m;
        }
        idx
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tensor serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: ChebTensor = serde_json::from_str(s)?;
        let expect = (t.degree + 1).checked_pow(t.dim as u32).unwrap_or(usize::MAX);
        if t.dim == 0 || t.coeffs.len() != expect {
            return Err(Error::Malformed(format!("tensor of dim {} degree {} needs {expect} coefficients", t.dim, t.degree)));
        }
        Ok(t)
    }
}

/// Applies `mat` (rows × shape[axis]) along `axis` of a row-major tensor.
fn mode_product(data: &[f64], shape: &[usize], axis: usize, mat: &[Vec<f64>]) -> (Vec<f64>, Vec<usize>) {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let m = shape[axis];
    let r = mat.len();
    let mut out = vec![0.0; outer * r * inner];
    out.par_chunks_mut(r * inner).enumerate().for_each(|(o, block)| {
        let src = &data[o * m * inner..(o + 1) * m * inner];
        for (k, row) in mat.iter().enumerate() {
            let dst = &mut block[k * inner..(k + 1) * inner];
            for (i, w) in row.iter().enumerate() {
                if *w == 0.0 {
                    continue;
                }
                let s = &src[i * inner..(i + 1) * inner];
                for (d, v) in dst.iter_mut().zip(s) {
                    *d += w * v;
                }
            }
        }
    });
    let mut new_shape = shape.to_vec();
    new_shape[axis] = r;
    (out, new_shape)
}

/// Evaluates `f` on a tensor grid whose axes share the node list `nodes`.
fn grid_values(f: &TargetFn, nodes: &[f64], d: usize) -> Vec<f64> {
    let m = nodes.len();
    let total = m.pow(d as u32);
    (0..total)
        .into_par_iter()
        .map_init(
            || vec![0.0; d],
            |x, mut flat| {
                for slot in x.iter_mut().rev() {
                    *slot = nodes[flat % m];
                    flat /= m;
                }
                f.eval(x)
            },
        )
        .collect()
}

/// Half-period trapezoid nodes `t_i = −π + i·2π/M`, `i = 0..=⌊M/2⌋`, with
/// weights that reproduce the full periodic rule for even integrands.
fn folded_trapezoid(m: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 2.0 * PI / m as f64;
    let half = m / 2;
    let t: Vec<f64> = (0..=half).map(|i| -PI + i as f64 * h).collect();
    let w = (0..=half).map(|i| if i == 0 || (m.is_multiple_of(2) && i == half) { h } else { 2.0 * h }).collect();
    (t, w)
}

/// Per-axis analysis matrix `K[j][i] = â_j w_i cos(j t_i)`.
fn kernel_matrix(n: usize, quad_points: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let hat = jackson_hat_coeffs(n);
    let (t, w) = folded_trapezoid(quad_points);
    let mat = (0..=n)
        .map(|j| t.iter().zip(&w).map(|(ti, wi)| hat[j] * wi * (j as f64 * ti).cos()).collect())
        .collect();
    (t.iter().map(|ti| ti.cos()).collect(), mat)
}

fn check_quadrature(n: usize, quad_points: usize) -> Result<()> {
    let need = 8 * (n + 2);
    if quad_points < need {
        return Err(Error::Quadrature { got: quad_points, need });
    }
    Ok(())
}

/// Default quadrature resolution, `32(n+2)` points per axis.
pub fn default_quad_points(n: usize) -> usize {
    32 * (n + 2)
}

/// Kernel-smoothed 1D coefficients `c_k = â_k ∫ f(cos t) cos(kt) dt`.
pub fn cheb_coeff_1d(f: impl Fn(f64) -> f64, n: usize, quad_points: usize) -> Result<Vec<f64>> {
    check_quadrature(n, quad_points)?;
    let (x, mat) = kernel_matrix(n, quad_points);
    let vals: Vec<f64> = x.iter().map(|&xi| f(xi)).collect();
    Ok(mat.iter().map(|row| row.iter().zip(&vals).map(|(a, b)| a * b).sum()).collect())
}

/// Kernel-smoothed tensor coefficients
/// `ã_j = Π â_{j_i} ∫ f(cos θ) Π cos(j_i θ_i) dθ`.
pub fn cheb_coeff_tensor(f: &TargetFn, n: usize, d: usize, quad_points: usize, budget: u64) -> Result<ChebTensor> {
    check_quadrature(n, quad_points)?;
    if d == 0 {
        return Err(Error::Invalid("dimension must be positive".into()));
    }
    let cost = (d as u64).saturating_mul(((n + 1) as u64).saturating_pow(d as u32)).saturating_mul(quad_points as u64);
    if cost > budget {
        return Err(Error::Budget(format!("coefficient cost {cost} exceeds budget {budget}")));
    }
    let (x, mat) = kernel_matrix(n, quad_points);
    let mut data = grid_values(f, &x, d);
    let mut shape = vec![x.len(); d];
    for axis in 0..d {
        let (nd, ns) = mode_product(&data, &shape, axis, &mat);
        data = nd;
        shape = ns;
    }
    Ok(ChebTensor { dim: d, degree: n, path: CoeffPath::Kernel, coeffs: data })
}

/// Chebyshev–Lobatto interpolation coefficients on the grid `cos(iπ/n)`.
pub fn cheb_interp_tensor(f: &TargetFn, n: usize, d: usize) -> Result<ChebTensor> {
    if n == 0 || d == 0 {
        return Err(Error::Invalid("interpolation needs n ≥ 1 and d ≥ 1".into()));
    }
    let nodes: Vec<f64> = (0..=n).map(|i| (i as f64 * PI / n as f64).cos()).collect();
    let mat: Vec<Vec<f64>> = (0..=n)
        .map(|k| {
            let edge_k = if k == 0 || k == n { 0.5 } else { 1.0 };
            (0..=n)
                .map(|i| {
                    let edge_i = if i == 0 || i == n { 0.5 } else { 1.0 };
                    2.0 / n as f64 * edge_k * edge_i * ((k * i) as f64 * PI / n as f64).cos()
                })
                .collect()
        })
        .collect();
    let mut data = grid_values(f, &nodes, d);
    let mut shape = vec![n + 1; d];
    for axis in 0..d {
        let (nd, ns) = mode_product(&data, &shape, axis, &mat);
        data = nd;
        shape = ns;
    }
    Ok(ChebTensor { dim: d, degree: n, path: CoeffPath::Interp, coeffs: data })
}

/// Value of `Σ ã_j Π T_{j_i}(x_i)`, contracting the last axis first by Clenshaw.
pub fn cheb_series_eval(t: &ChebTensor, x: &[f64]) -> f64 {
    assert_eq!(x.len(), t.dim, "point dimension");
    let m = t.degree + 1;
    let mut data = t.coeffs.clone();
    for axis in (0..t.dim).rev() {
        data = data.chunks(m).map(|c| clenshaw(c, x[axis])).collect();
    }
    data[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recurrence_and_monomials_agree() {
        for k in 0..10 {
            let mono = cheb_monomial(k);
            for &x in &[-0.9, -0.3, 0.0, 0.4, 1.0] {
                let v = mono.iter().rev().fold(0.0, |acc, c| acc * x + c);
                assert!((v - cheb_t(k, x)).abs() < 1e-12);
                assert!((cheb_t(k, x) - (k as f64 * f64::acos(x)).cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn clenshaw_single_term() {
        assert_eq!(clenshaw(&[0.0, 0.0, 1.0], 0.5), -0.5);
        assert_eq!(clenshaw(&[], 0.5), 0.0);
    }

    #[test]
    fn constant_and_identity_1d() {
        let c = cheb_coeff_1d(|_| 1.0, 5, default_quad_points(5)).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-14);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-14));
        let c = cheb_coeff_1d(|x| x, 2, 64).unwrap();
        assert!((c[1] - (PI / 4.0).cos()).abs() < 1e-14);
        assert!(c[0].abs() < 1e-14 && c[2].abs() < 1e-14);
    }

    #[test]
    fn odd_resolution_matches_even() {
        let f = |x: f64| (3.0 * x).cos() + x.abs();
        let a = cheb_coeff_1d(f, 6, 257).unwrap();
        let b = cheb_coeff_1d(f, 6, 256).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-4);
        }
    }

    #[test]
    fn quadrature_threshold() {
        assert!(matches!(cheb_coeff_1d(|x| x, 2, 31), Err(Error::Quadrature { need: 32, .. })));
    }

    #[test]
    fn budget_is_enforced() {
        let f = TargetFn::new("one", |_| 1.0);
        assert!(matches!(cheb_coeff_tensor(&f, 4, 2, 192, 100), Err(Error::Budget(_))));
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let f = TargetFn::new("t3", |x| cheb_t(3, x[0]));
        let t = cheb_interp_tensor(&f, 5, 1).unwrap();
        for (k, c) in t.coeffs.iter().enumerate() {
            assert!((c - if k == 3 { 1.0 } else { 0.0 }).abs() < 1e-14);
        }
        let g = TargetFn::new("t2t1", |x| cheb_t(2, x[0]) * x[1]);
        let t = cheb_interp_tensor(&g, 3, 2).unwrap();
        for (i, c) in t.coeffs.iter().enumerate() {
            let want = if t.multi_index(i) == vec![2, 1] { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-14);
        }
    }

    #[test]
    fn json_round_trip() {
        let f = TargetFn::new("e", |x| x[0].exp());
        let t = cheb_interp_tensor(&f, 6, 1).unwrap();
        let s = t.to_json();
        assert!(s.contains("\"path\":\"interp\""));
        assert_eq!(ChebTensor::from_json(&s).unwrap(), t);
        assert!(ChebTensor::from_json(r#"{"dim":1,"degree":2,"path":"kernel","coeffs":[1.0]}"#).is_err());
    }
}
