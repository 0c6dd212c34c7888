//! Piece compilation, fast-decreasing masks and gluing.
//!
//! A piece network maps `x` to cube coordinates `u`, builds one Chebyshev bank
//! per axis and contracts the coefficient tensor axis by axis, innermost axis
//! first, with scaled products. Products are only formed between values from
//! disjoint frontier columns, so a piece vanishes exactly as soon as any cube
//! coordinate leaves `[−1,1]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chebseries::{cheb_coeff_tensor, cheb_interp_tensor, cheb_monomial, cheb_series_eval, default_quad_points, ChebTensor, DEFAULT_COEFF_BUDGET};
use crate::error::{Error, Result};
use crate::functions::TargetFn;
use crate::gadgets::{bump_block, product_block, product_block_affine, ChebBank, Form, PowerMode, Staged};
use crate::geometry::{pp_to_cube_map, validate_covering, AffineMap, Covering, Domain, Parallelepiped};
use crate::netir::{compose, stack, Layer, ReluNetwork, SparseMatrix};
use crate::verify::{cheb_gadget_bound, decay_fit, tensor_grid, DecayFit, DecayModel, ErrorLadder};

/// Coefficient source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Path {
    /// Kernel-damped series (continuous targets).
    #[default]
    Continuous,
    /// Chebyshev–Lobatto interpolation (analytic targets).
    Analytic,
}

/// Accuracy cap for the analytic path, where series errors reach rounding level.
pub const ANALYTIC_ACCURACY: u32 = 26;

/// Compilation parameters; unset fields take their documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileParams {
    pub n: usize,
    /// Chebyshev gadget accuracy; default `n` (continuous) or 26 (analytic).
    #[serde(rename = "N1", default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<u32>,
    /// Series product accuracy; default `⌈(d+α)/2·log₂ n⌉` (continuous) or 26 (analytic).
    #[serde(rename = "N2", default, skip_serializing_if = "Option::is_none")]
    pub n2: Option<u32>,
    /// Gluing product accuracy; default `N2`.
    #[serde(rename = "N_glue", default, skip_serializing_if = "Option::is_none")]
    pub n_glue: Option<u32>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Clip margin; default `1 − λ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Declared sup bound of the pieces; default measured sup × 1.05.
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default)]
    pub path: Path,
    #[serde(default)]
    pub power_mode: PowerMode,
    /// Grid points per axis for error measurement; default by dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Quadrature points for kernel-path coefficients; default `32(n+2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_points: Option<usize>,
    /// Work budget for coefficient tensors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    /// Extra degrees to compile for a decay ladder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<usize>>,
    #[serde(default)]
    pub seed: u64,
}

fn default_alpha() -> f64 {
    1.0
}

fn default_lambda() -> f64 {
    0.9
}

impl CompileParams {
    pub fn new(n: usize) -> Self {
        CompileParams {
            n,
            n1: None,
            n2: None,
            n_glue: None,
            alpha: default_alpha(),
            lambda: default_lambda(),
            delta: None,
            m: None,
            path: Path::Continuous,
            power_mode: PowerMode::Tree,
            grid: None,
            quad_points: None,
            budget: None,
            ladder: None,
            seed: 0,
        }
    }

    /// Fills defaults for dimension `d`.
    pub fn resolve(&self, d: usize) -> Result<Resolved> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::Invalid(format!("shrink factor {} outside (0,1)", self.lambda)));
        }
        let delta = self.delta.unwrap_or(1.0 - self.lambda);
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Invalid(format!("clip margin {delta} outside (0,1)")));
        }
        if self.alpha < 0.0 || !self.alpha.is_finite() {
            return Err(Error::Invalid("tail exponent must be nonnegative".into()));
        }
        let n = self.n;
        let log_default = ((d as f64 + self.alpha) / 2.0 * (n.max(2) as f64).log2()).ceil().max(1.0) as u32;
        let (n1_default, n2_default) = match self.path {
            Path::Continuous => ((n as u32).max(1), log_default),
            Path::Analytic => (ANALYTIC_ACCURACY, ANALYTIC_ACCURACY),
        };
        let n1 = self.n1.unwrap_or(n1_default);
        let n2 = self.n2.unwrap_or(n2_default);
        let n_glue = self.n_glue.unwrap_or(n2);
        if n1 == 0 || n2 == 0 || n_glue == 0 {
            return Err(Error::Invalid("accuracy levels must be positive".into()));
        }
        let grid = self.grid.unwrap_or(match d {
            1 => 2001,
            2 => 161,
            3 => 25,
            _ => 9,
        });
        Ok(Resolved {
            n,
            n1,
            n2,
            n_glue,
            lambda: self.lambda,
            delta,
            m: self.m,
            path: self.path,
            power_mode: self.power_mode,
            grid: grid.max(2),
            quad_points: self.quad_points.unwrap_or_else(|| default_quad_points(n)),
            budget: self.budget.unwrap_or(DEFAULT_COEFF_BUDGET),
            seed: self.seed,
        })
    }
}

/// Parameters with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub n: usize,
    #[serde(rename = "N1")]
    pub n1: u32,
    #[serde(rename = "N2")]
    pub n2: u32,
    #[serde(rename = "N_glue")]
    pub n_glue: u32,
    pub lambda: f64,
    pub delta: f64,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub path: Path,
    pub power_mode: PowerMode,
    pub grid: usize,
    pub quad_points: usize,
    pub budget: u64,
    pub seed: u64,
}

/// Gate `φ`: `1` on `E^λ`, `0` outside `E`, in `[0,1]` between.
///
/// Layer 1 holds one trapezoid per cube coordinate (width `4d`); for `d ≥ 2`
/// a second intra-linked layer folds them with `min(u,v) = v − σ(v−u)`, each
/// running minimum materialized as its own neuron.
pub fn fast_decreasing_net(e: &Parallelepiped, lambda: f64) -> Result<ReluNetwork> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Invalid(format!("shrink factor {lambda} outside (0,1)")));
    }
    let (fwd, _) = pp_to_cube_map(e)?;
    let d = e.dim();
    let bumps: Vec<ReluNetwork> = (0..d).map(|i| bump_block(1.0 - lambda, d, &row_form(&fwd, i), fwd.offset[i])).collect();
    let first = stack(&bumps)?;
    if d == 1 {
        return Ok(first);
    }
    // Running minima m_1 = σ(ψ_1), r_i = σ(p_i − m_{i−1}), m_i = σ(p_i − r_i).
    let mut rows: Vec<Form> = vec![];
    let mut intra: Vec<Form> = vec![];
    let mut bias = vec![];
    let mut push = |row: Form, links: Form| {
        rows.push(row);
        intra.push(links);
        bias.push(0.0);
        rows.len() - 1
    };
    let mut m = push(vec![(0, 1.0)], vec![]);
    for i in 1..d {
        let p = push(vec![(i, 1.0)], vec![]);
        let r = push(vec![], vec![(p, 1.0), (m, -1.0)]);
        m = push(vec![], vec![(p, 1.0), (r, -1.0)]);
    }
    let w = rows.len();
    let layer = Layer::relu(SparseMatrix::from_rows(d, rows), bias, Some(SparseMatrix::from_rows(w, intra)));
    let out = Layer::linear(SparseMatrix::from_rows(w, vec![vec![(m, 1.0)]]), vec![0.0]);
    compose(&ReluNetwork::new(d, vec![layer, out])?, &first)
}

fn row_form(map: &AffineMap, i: usize) -> Form {
    map.matrix[i].iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect()
}

/// Measurements for one compiled piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceReport {
    /// Sup of `|f̂ − f|` on the grid of `E^λ`.
    pub sup_error: f64,
    /// `series_error + gadget_budget`.
    pub budget: f64,
    /// Sup of `|S_n f − f|` on the same grid (exact series evaluation).
    pub series_error: f64,
    /// Propagated worst-case gadget error of the series network.
    pub gadget_budget: f64,
    /// Sup of `|f̂|` on the grid of `E`.
    pub sup_abs: f64,
    pub width: usize,
    pub depth: usize,
}

/// A value on the frontier given by a linear form, with an upper bound on
/// its magnitude and on its error against the exact series value.
#[derive(Clone)]
struct Term {
    form: Form,
    bound: f64,
    err: f64,
}

/// Network of the tensor series with inputs `x` and cube map `fwd`.
///
/// Returns the network and its propagated gadget error on `[−(1−δ), 1−δ]^d`.
pub fn series_network(t: &ChebTensor, fwd: &AffineMap, p: &Resolved) -> Result<(ReluNetwork, f64)> {
    let d = t.dim;
    let n = t.degree;
    let in_dim = fwd.input_dim();
    let banks = (0..d)
        .map(|i| ChebBank::new(n, p.n1 as usize, p.delta, in_dim, &row_form(fwd, i), fwd.offset[i], p.power_mode))
        .collect::<Result<Vec<_>>>()?;
    let mut offsets = vec![0];
    for b in &banks {
        offsets.push(offsets.last().unwrap() + b.network().output_dim());
    }
    let nets: Vec<ReluNetwork> = banks.iter().map(|b| b.network().clone()).collect();
    let mut st = Staged::new(stack(&nets)?);
    // cheb[i][k]: form of T̄_k(u_i) over the current frontier.
    let cheb: Vec<Vec<Form>> = banks
        .iter()
        .enumerate()
        .map(|(i, b)| b.forms.iter().map(|f| f.iter().map(|&(c, v)| (c + offsets[i], v)).collect()).collect())
        .collect();
    let eps: Vec<f64> = (0..=n).map(|k| cheb_gadget_bound(k, p.n1)).collect();
    let bt: Vec<f64> = (0..=n).map(|k| 1.0 + if cheb_monomial(k)[0] != 0.0 { 1.0 } else { 0.0 } + eps[k]).collect();

    // Innermost axis: S_{p} = Σ_k c_{p,k} T̄_k(u_{d−1}).
    let stride = n + 1;
    let prefixes = t.coeffs.len() / stride;
    let mut terms: Vec<Term> = (0..prefixes)
        .map(|q| {
            let mut form = Form::new();
            let (mut bound, mut err) = (0.0, 0.0);
            for k in 0..=n {
                let c = t.coeffs[q * stride + k];
                if c == 0.0 {
                    continue;
                }
                form.extend(cheb[d - 1][k].iter().map(|&(i, v)| (i, c * v)));
                bound += c.abs() * bt[k];
                err += c.abs() * eps[k];
            }
            Term { form, bound, err }
        })
        .collect();

    let prod_err = 2f64.powi(-2 * p.n2 as i32);
    for axis in (0..d - 1).rev() {
        // Keep the banks of axes < axis; products of axis with the current terms.
        let keep: Vec<usize> = (offsets[0]..offsets[axis]).collect();
        let mut blocks = vec![st.keep(&keep)];
        let m = st.dim();
        let groups = terms.len() / stride;
        let mut next = Vec::with_capacity(groups);
        let mut pos = keep.len();
        for q in 0..groups {
            let mut acc = Term { form: Form::new(), bound: 0.0, err: 0.0 };
            for k in 0..=n {
                let s = &terms[q * stride + k];
                if s.bound == 0.0 || s.form.is_empty() {
                    continue;
                }
                blocks.push(product_block(p.n2 as usize, bt[k], s.bound, m, &cheb[axis][k], &s.form));
                acc.form.push((pos, 1.0));
                pos += 1;
                acc.bound += bt[k] * s.bound * (1.0 + prod_err);
                acc.err += bt[k] * s.bound * prod_err + eps[k] * s.bound + s.err;
            }
            next.push(acc);
        }
        // Kept banks stay at the front of the frontier, so `cheb` needs no remap.
        st.apply(&blocks)?;
        terms = next;
    }
    let top = &terms[0];
    let out = ReluNetwork::new(st.dim(), vec![Layer::linear(SparseMatrix::from_rows(st.dim(), vec![top.form.clone()]), vec![0.0])])?;
    Ok((compose(&out, &st.net)?, top.err))
}

/// Grid over `E^s` (`s` = dilation) in original coordinates.
fn piece_grid(e: &Parallelepiped, s: f64, m: usize) -> Result<Vec<Vec<f64>>> {
    let (_, inv) = pp_to_cube_map(e)?;
    let d = e.dim();
    Ok(tensor_grid(&vec![-s; d], &vec![s; d], m).iter().map(|u| inv.apply(u)).collect())
}

/// Coefficient tensor of `f` pulled back to the cube of `e`.
pub fn piece_tensor(f: &TargetFn, e: &Parallelepiped, p: &Resolved) -> Result<ChebTensor> {
    let (_, inv) = pp_to_cube_map(e)?;
    let g = f.compose_with(move |u| inv.apply(u));
    match p.path {
        Path::Continuous => cheb_coeff_tensor(&g, p.n, e.dim(), p.quad_points, p.budget),
        Path::Analytic => cheb_interp_tensor(&g, p.n, e.dim()),
    }
}

/// Network vanishing outside `e` that approximates `f` on `E^λ`.
pub fn compile_piece(f: &TargetFn, e: &Parallelepiped, p: &Resolved) -> Result<(ReluNetwork, PieceReport)> {
    let tensor = piece_tensor(f, e, p)?;
    let (fwd, _) = pp_to_cube_map(e)?;
    let (net, gadget_budget) = series_network(&tensor, &fwd, p)?;
    let inner = piece_grid(e, p.lambda, p.grid)?;
    let (sup_error, series_error) = inner
        .par_iter()
        .map(|x| {
            let fx = f.eval(x);
            let u = fwd.apply(x);
            ((net.eval_scalar(x) - fx).abs(), (cheb_series_eval(&tensor, &u) - fx).abs())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let full = piece_grid(e, 1.0, p.grid)?;
    let sup_abs = full.par_iter().map(|x| net.eval_scalar(x).abs()).reduce(|| 0.0, f64::max);
    let size = net.size_report();
    let report = PieceReport {
        sup_error,
        budget: series_error + gadget_budget,
        series_error,
        gadget_budget,
        sup_abs,
        width: size.width,
        depth: size.depth,
    };
    Ok((net, report))
}

/// `f̃_1 = f̂_1`, `f̃_j = ×̌(f̂_j, φ_j) + ×̌(f̃_{j−1}, 1 − φ_j)`.
///
/// Each piece must satisfy `|f̂_j| ≤ M`; the checked products use bounds `(M, 1)`.
pub fn glue(pieces: &[(ReluNetwork, Parallelepiped)], lambda: f64, n_glue: u32, m: f64) -> Result<ReluNetwork> {
    let k = pieces.len();
    if k == 0 {
        return Err(Error::Invalid("nothing to glue".into()));
    }
    if k == 1 {
        return Ok(pieces[0].0.clone());
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Invalid(format!("sup bound M = {m} must be positive")));
    }
    // Frontier: f̂_1..f̂_k, φ_2..φ_k.
    let mut blocks: Vec<ReluNetwork> = pieces.iter().map(|(n, _)| n.clone()).collect();
    for (_, e) in &pieces[1..] {
        blocks.push(fast_decreasing_net(e, lambda)?);
    }
    let mut st = Staged::new(stack(&blocks)?);
    let piece_at = |j: usize| j; // f̂_{j+1}
    let mask_at = |j: usize| k + j - 1; // φ_{j+1}, j ≥ 1
    let mut prev: Form = vec![(piece_at(0), 1.0)];
    let mut live: Vec<usize> = (0..st.dim()).collect();
    for j in 1..k {
        let m_dim = st.dim();
        let loc = |orig: usize| live.iter().position(|&c| c == orig).expect("live frontier value");
        let originals = 2 * k - 1;
        let rest: Vec<usize> = live.iter().copied().filter(|&c| (c > piece_at(j) && c < k) || (c > mask_at(j) && c < originals)).collect();
        let keep_pos: Vec<usize> = rest.iter().map(|&c| loc(c)).collect();
        let phi = loc(mask_at(j));
        let mut stage = vec![st.keep(&keep_pos)];
        stage.push(product_block(n_glue as usize, m, 1.0, m_dim, &vec![(loc(piece_at(j)), 1.0)], &vec![(phi, 1.0)]));
        stage.push(product_block_affine(n_glue as usize, m, 1.0, m_dim, (&prev, 0.0), (&vec![(phi, -1.0)], 1.0)));
        st.apply(&stage)?;
        let r = rest.len();
        prev = vec![(r, 1.0), (r + 1, 1.0)];
        live = rest;
        // Product outputs take placeholder ids past every original value.
        live.push(usize::MAX - 1);
        live.push(usize::MAX);
    }
    let out = ReluNetwork::new(st.dim(), vec![Layer::linear(SparseMatrix::from_rows(st.dim(), vec![prev]), vec![0.0])])?;
    compose(&out, &st.net)
}

/// Gluing overhead bound `(3(k+2)²/4)·M·2^{−2N}`.
pub fn glue_overhead_bound(k: usize, m: f64, n_glue: u32) -> f64 {
    0.75 * (k as f64 + 2.0).powi(2) * m * 2f64.powi(-2 * n_glue as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlueReport {
    pub overhead_bound: f64,
    /// `(k+2)²·M·2^{−2N}`, reported for comparison.
    pub overhead_bound_tight: f64,
    /// Sup over `K′` samples of `|f̃ − f̂_j|`, `j` the last piece whose `λ`-dilate holds the sample.
    pub measured: f64,
    pub order: Vec<usize>,
    /// Fraction of `K′` samples lying in more than one piece.
    pub overlap_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub n: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileReport {
    pub per_piece: Vec<PieceReport>,
    pub glue: GlueReport,
    /// Max `|f̃|` over exterior samples; must be exactly zero.
    pub support_leak: f64,
    #[serde(rename = "K_prime_error")]
    pub k_prime_error: f64,
    /// Sup error on the excluded margin region, where no bound is claimed.
    pub trifling_error: f64,
    /// `max_j budget_j + overhead_bound`.
    pub total_budget: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub width: usize,
    pub depth: usize,
    pub parameter_count: usize,
    pub params: Resolved,
    pub ladder: Vec<LadderEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder_fit: Option<DecayFit>,
}

/// Exterior samples used for the support check.
pub const SUPPORT_SAMPLES: usize = 10_000;

/// Compiles every piece and glues them; measures the result on `K′`.
pub fn compile(f: &TargetFn, k: &Domain, covering: &Covering, params: &CompileParams) -> Result<(ReluNetwork, CompileReport)> {
    let d = k.dim();
    let cov = if covering.validated { covering.clone() } else { validate_covering(k, &covering.pieces, covering.lambda, 10_000)?.0 };
    let mut params = params.clone();
    params.lambda = cov.lambda;
    let p = params.resolve(d)?;
    let compiled = cov.pieces.par_iter().map(|e| compile_piece(f, e, &p)).collect::<Result<Vec<_>>>()?;
    let measured_m = compiled.iter().map(|(_, r)| r.sup_abs).fold(0.0, f64::max);
    let m = match p.m {
        Some(m) => {
            if measured_m > m {
                return Err(Error::Budget(format!("piece sup {measured_m:e} exceeds the declared bound M = {m:e}")));
            }
            m
        }
        None => (measured_m * 1.05).max(f64::MIN_POSITIVE),
    };
    let pieces: Vec<(ReluNetwork, Parallelepiped)> = compiled.iter().map(|(n, _)| n.clone()).zip(cov.pieces.iter().cloned()).collect();
    let net = glue(&pieces, cov.lambda, p.n_glue, m)?;

    // K′ and trifling-region errors on a grid of the bounding box.
    let (lo, hi) = k.bounding_box();
    let grid: Vec<Vec<f64>> = tensor_grid(&lo, &hi, p.grid).into_iter().filter(|x| k.contains(x) && cov.covers(x, 1e-12)).collect();
    let stats: Vec<(bool, f64, f64, bool)> = grid
        .par_iter()
        .map(|x| {
            let v = net.eval_scalar(x);
            let err = (v - f.eval(x)).abs();
            let inside = cov.in_k_prime(x);
            let mut owner = None;
            let mut count = 0;
            for (j, e) in cov.pieces.iter().enumerate() {
                if e.contains(x, 1e-12) {
                    count += 1;
                    owner = Some(j);
                }
            }
            let local = owner.map_or(0.0, |j| (v - pieces[j].0.eval_scalar(x)).abs());
            (inside, err, local, count > 1)
        })
        .collect();
    let k_prime: Vec<&(bool, f64, f64, bool)> = stats.iter().filter(|s| s.0).collect();
    let k_prime_error = k_prime.iter().map(|s| s.1).fold(0.0, f64::max);
    let trifling_error = stats.iter().filter(|s| !s.0).map(|s| s.1).fold(0.0, f64::max);
    let glue_measured = k_prime.iter().map(|s| s.2).fold(0.0, f64::max);
    let overlap_fraction = if k_prime.is_empty() { 0.0 } else { k_prime.iter().filter(|s| s.3).count() as f64 / k_prime.len() as f64 };

    let margin = 1e-6 * k.diameter();
    let support_leak = crate::verify::support_check(&net, k, margin, SUPPORT_SAMPLES, p.seed);
    let npieces = cov.pieces.len();
    let overhead_bound = if npieces > 1 { glue_overhead_bound(npieces, m, p.n_glue) } else { 0.0 };
    let per_piece: Vec<PieceReport> = compiled.into_iter().map(|(_, r)| r).collect();
    let total_budget = per_piece.iter().map(|r| r.budget).fold(0.0, f64::max) + overhead_bound;
    let size = net.size_report();
    let report = CompileReport {
        per_piece,
        glue: GlueReport {
            overhead_bound,
            overhead_bound_tight: if npieces > 1 { (npieces as f64 + 2.0).powi(2) * m * 2f64.powi(-2 * p.n_glue as i32) } else { 0.0 },
            measured: glue_measured,
            order: (0..npieces).collect(),
            overlap_fraction,
        },
        support_leak,
        k_prime_error,
        trifling_error,
        total_budget,
        m,
        width: size.width,
        depth: size.depth,
        parameter_count: size.parameter_count,
        params: p,
        ladder: vec![],
        ladder_fit: None,
    };
    Ok((net, report))
}

/// `K′` errors for each degree in `ns`, all other parameters fixed.
pub fn compile_ladder(f: &TargetFn, k: &Domain, covering: &Covering, params: &CompileParams, ns: &[usize]) -> Result<Vec<LadderEntry>> {
    ns.iter()
        .map(|&n| {
            let mut q = params.clone();
            q.n = n;
            q.ladder = None;
            let (_, r) = compile(f, k, covering, &q)?;
            Ok(LadderEntry { n, error: r.k_prime_error })
        })
        .collect()
}

/// Decay fit of a compile ladder: exponential for the analytic path, power otherwise.
pub fn fit_ladder(ladder: &[LadderEntry], path: Path) -> Result<DecayFit> {
    let pairs: Vec<(f64, f64)> = ladder.iter().map(|e| (e.n as f64, e.error)).collect();
    let model = match path {
        Path::Continuous => DecayModel::Power,
        Path::Analytic => DecayModel::Exponential,
    };
    decay_fit(&ErrorLadder::from_pairs(&pairs), model)
}

/// [`compile`] followed by the configured ladder, if any.
pub fn compile_with_ladder(f: &TargetFn, k: &Domain, covering: &Covering, params: &CompileParams) -> Result<(ReluNetwork, CompileReport)> {
    let (net, mut report) = compile(f, k, covering, params)?;
    if let Some(ns) = &params.ladder {
        report.ladder = compile_ladder(f, k, covering, params, ns)?;
        if report.ladder.len() >= 4 {
            report.ladder_fit = Some(fit_ladder(&report.ladder, params.path)?);
        }
    }
    Ok((net, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::linspace;

    fn unit_square() -> Parallelepiped {
        Parallelepiped::from_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn mask_values() {
        let phi = fast_decreasing_net(&unit_square(), 0.5).unwrap();
        assert_eq!(phi.eval_scalar(&[0.5, 0.5]), 1.0);
        assert_eq!(phi.eval_scalar(&[0.125, 0.5]), 0.5);
        assert_eq!(phi.eval_scalar(&[-0.01, 0.5]), 0.0);
        assert_eq!(phi.eval_scalar(&[0.5, 1.2]), 0.0);
        let r = phi.size_report();
        assert_eq!((r.width, r.depth), (8, 2));
    }

    #[test]
    fn defaults() {
        let p = CompileParams::new(16).resolve(2).unwrap();
        assert_eq!((p.n1, p.n2, p.n_glue), (16, 6, 6));
        assert!((p.delta - 0.1).abs() < 1e-15);
        let mut bad = CompileParams::new(4);
        bad.lambda = 1.0;
        assert!(bad.resolve(1).is_err());
    }

    #[test]
    fn identity_piece_1d() {
        let e = Parallelepiped::from_box(&[-1.0], &[1.0]).unwrap();
        let f = TargetFn::new("id", |x| x[0]);
        let mut params = CompileParams::new(8);
        params.n1 = Some(8);
        let p = params.resolve(1).unwrap();
        let (net, r) = compile_piece(&f, &e, &p).unwrap();
        let series = 1.0 - (std::f64::consts::PI / 10.0).cos();
        assert!(r.sup_error <= series + r.gadget_budget + 1e-12, "{r:?}");
        for x in linspace(1.0 + 1e-9, 3.0, 50) {
            assert_eq!(net.eval_scalar(&[x]), 0.0);
            assert_eq!(net.eval_scalar(&[-x]), 0.0);
        }
    }

    #[test]
    fn constant_piece_2d() {
        let e = unit_square();
        let f = TargetFn::new("c", |_| 0.75);
        let p = CompileParams::new(3).resolve(2).unwrap();
        let (net, r) = compile_piece(&f, &e, &p).unwrap();
        assert!(r.sup_error <= r.budget + 1e-12, "{r:?}");
        assert!((net.eval_scalar(&[0.5, 0.5]) - 0.75).abs() < 1e-9);
        assert_eq!(net.eval_scalar(&[1.5, 0.5]), 0.0);
        assert_eq!(net.eval_scalar(&[0.5, -0.5]), 0.0);
    }

    #[test]
    fn two_piece_glue() {
        let a = Parallelepiped::from_box(&[0.0], &[2.0]).unwrap();
        let b = Parallelepiped::from_box(&[1.0], &[3.0]).unwrap();
        let fa = fast_decreasing_net(&a, 0.9).unwrap();
        let fb = fast_decreasing_net(&b, 0.9).unwrap();
        let g = glue(&[(fa.clone(), a), (fb.clone(), b)], 0.9, 10, 1.0).unwrap();
        let bound = glue_overhead_bound(2, 1.0, 10);
        for x in linspace(-1.0, 4.0, 501) {
            let v = g.eval_scalar(&[x]);
            if !(0.0..=3.0).contains(&x) {
                assert_eq!(v, 0.0);
            }
            if (1.1..=2.9).contains(&x) {
                assert!((v - fb.eval_scalar(&[x])).abs() <= bound);
            }
            if (0.1..=0.9).contains(&x) {
                assert!((v - fa.eval_scalar(&[x])).abs() <= bound);
            }
        }
    }

    #[test]
    fn single_piece_glue_is_identity() {
        let e = unit_square();
        let net = fast_decreasing_net(&e, 0.5).unwrap();
        assert_eq!(glue(&[(net.clone(), e)], 0.9, 4, 1.0).unwrap(), net);
    }
}
