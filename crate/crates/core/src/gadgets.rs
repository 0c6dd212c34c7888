//! Constructive sub-networks: sawtooth, squaring, products, powers, clipping
//! and clipped Chebyshev polynomials.
//!
//! Every product gadget returns exactly `0.0` when either argument is exactly
//! zero, for any input. Downstream support claims rest on this, so the
//! constructions below fix the floating point evaluation order with care:
//! the four squaring chains of a product are bitwise mirror images of each
//! other in the zero cases, and their two halves are summed inside the second
//! layer before the final difference is taken.

use serde::{Deserialize, Serialize};

use crate::chebseries::cheb_monomial;
use crate::error::{Error, Result};
use crate::netir::{compose, stack, Layer, ReluNetwork, SparseMatrix};

/// Sparse linear form over the inputs of a block: `(index, coefficient)`.
pub type Form = Vec<(usize, f64)>;

/// Closed-form sawtooth `g_s` on `[0,1]`: zeros at `2k/2^s`, peaks at `(2k−1)/2^s`.
pub fn sawtooth_closed_form(s: usize, x: f64) -> f64 {
    let u = x * 2f64.powi(s as i32 - 1);
    let r = u - u.floor();
    1.0 - (2.0 * r - 1.0).abs()
}

/// Affine expression `c + Σ coef[j]·y_j` over the neurons of one chain.
#[derive(Debug, Clone)]
struct ChainExpr {
    coef: Vec<f64>,
    constant: f64,
}

/// Intra-linked sawtooth chain of width `s+1`.
///
/// `y_0 = σ(t)`, `y_1 = σ(y_0 − 1/2)`, and for `k ≥ 2`
/// `y_k = σ(1/2 − g_{k−1})` with `g_1 = 2y_0 − 4y_1` and
/// `g_k = 2 − 2g_{k−1} − 4y_k`. Only `y_0` reads the input.
#[derive(Debug, Clone)]
struct Chain {
    bias: Vec<f64>,
    intra: Vec<Vec<(usize, f64)>>,
    g: Vec<ChainExpr>,
}

impl Chain {
    fn new(s: usize) -> Self {
        assert!(s >= 1);
        let w = s + 1;
        let mut bias = vec![0.0, -0.5];
        let mut intra = vec![vec![], vec![(0, 1.0)]];
        let mut g1 = vec![0.0; w];
        g1[0] = 2.0;
        g1[1] = -4.0;
        let mut g = vec![ChainExpr { coef: g1, constant: 0.0 }];
        for k in 2..=s {
            let prev = g.last().unwrap().clone();
            bias.push(0.5 - prev.constant);
            intra.push((0..k).filter(|&j| prev.coef[j] != 0.0).map(|j| (j, -prev.coef[j])).collect());
            let mut coef: Vec<f64> = prev.coef.iter().map(|c| -2.0 * c).collect();
            coef[k] = -4.0;
            g.push(ChainExpr { coef, constant: 2.0 - 2.0 * prev.constant });
        }
        Chain { bias, intra, g }
    }

    fn width(&self) -> usize {
        self.bias.len()
    }

    /// `f_N = y_0 − Σ_{j=1}^{N} g_j / 4^j`.
    fn square_expr(&self) -> ChainExpr {
        let mut coef = vec![0.0; self.width()];
        coef[0] = 1.0;
        let mut constant = 0.0;
        for (j, gj) in self.g.iter().enumerate() {
            let scale = 0.25f64.powi(j as i32 + 1);
            for (c, v) in coef.iter_mut().zip(&gj.coef) {
                *c -= v * scale;
            }
            constant -= gj.constant * scale;
        }
        ChainExpr { coef, constant }
    }
}

/// Accumulates the neurons of one activated layer.
#[derive(Default)]
struct LayerBuf {
    rows: Vec<Form>,
    bias: Vec<f64>,
    intra: Vec<Form>,
}

impl LayerBuf {
    fn width(&self) -> usize {
        self.bias.len()
    }

    fn push(&mut self, row: Form, bias: f64, intra: Form) -> usize {
        self.rows.push(row);
        self.bias.push(bias);
        self.intra.push(intra);
        self.bias.len() - 1
    }

    /// Appends a chain reading `input`; returns the offset of its first neuron.
    fn push_chain(&mut self, chain: &Chain, input: &Form, input_bias: f64) -> usize {
        let off = self.width();
        for k in 0..chain.width() {
            let (row, b) = if k == 0 { (input.clone(), input_bias) } else { (vec![], chain.bias[k]) };
            let intra = chain.intra[k].iter().map(|&(j, v)| (j + off, v)).collect();
            self.push(row, b, intra);
        }
        off
    }

    fn build(self, in_dim: usize) -> Layer {
        let w = self.width();
        Layer::relu(SparseMatrix::from_rows(in_dim, self.rows), self.bias, Some(SparseMatrix::from_rows(w, self.intra)))
    }
}

fn expr_form(e: &ChainExpr, off: usize) -> Form {
    e.coef.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j + off, *v)).collect()
}

fn linear_layer(in_dim: usize, rows: Vec<Form>, bias: Vec<f64>) -> Layer {
    Layer::linear(SparseMatrix::from_rows(in_dim, rows), bias)
}

fn net(input_dim: usize, layers: Vec<Layer>) -> ReluNetwork {
    ReluNetwork::new(input_dim, layers).expect("gadget construction is dimensionally consistent")
}

/// Single intra-linked layer of width `s+1` realizing `g_s` on `[0,1]`.
pub fn sawtooth_net(s: usize) -> ReluNetwork {
    let chain = Chain::new(s);
    let mut buf = LayerBuf::default();
    buf.push_chain(&chain, &vec![(0, 1.0)], 0.0);
    let gs = chain.g.last().unwrap();
    let w = buf.width();
    net(1, vec![buf.build(1), linear_layer(w, vec![expr_form(gs, 0)], vec![gs.constant])])
}

/// Single layer of width `N+1` realizing `f_N(x) = x − Σ g_j(x)/4^j` on `[0,1]`.
pub fn square_net(n: usize) -> ReluNetwork {
    let chain = Chain::new(n);
    let mut buf = LayerBuf::default();
    buf.push_chain(&chain, &vec![(0, 1.0)], 0.0);
    let f = chain.square_expr();
    let w = buf.width();
    net(1, vec![buf.build(1), linear_layer(w, vec![expr_form(&f, 0)], vec![f.constant])])
}

/// `σ(f_N(x)) + σ(f_N(−x))`: width `2(N+1)`, depth 2.
pub fn even_square_net(n: usize) -> ReluNetwork {
    let chain = Chain::new(n);
    let f = chain.square_expr();
    let mut l1 = LayerBuf::default();
    let a = l1.push_chain(&chain, &vec![(0, 1.0)], 0.0);
    let b = l1.push_chain(&chain, &vec![(0, -1.0)], 0.0);
    let w1 = l1.width();
    let mut l2 = LayerBuf::default();
    l2.push(expr_form(&f, a), f.constant, vec![]);
    l2.push(expr_form(&f, b), f.constant, vec![]);
    net(1, vec![l1.build(1), l2.build(w1), linear_layer(2, vec![vec![(0, 1.0), (1, 1.0)]], vec![0.0])])
}

/// Product block `Bx·By·~×(ℓx(v)/Bx, ℓy(v)/By)` over an input vector `v` of
/// length `in_dim`: width `4(N+1)`, depth 2, one output.
pub fn product_block(n: usize, bx: f64, by: f64, in_dim: usize, fx: &Form, fy: &Form) -> ReluNetwork {
    product_block_affine(n, bx, by, in_dim, (fx, 0.0), (fy, 0.0))
}

/// [`product_block`] with affine arguments `ℓx(v) + x0` and `ℓy(v) + y0`.
///
/// Exactly zero whenever either argument evaluates to an exact zero with
/// form columns disjoint from the other argument's.
pub fn product_block_affine(n: usize, bx: f64, by: f64, in_dim: usize, x: (&Form, f64), y: (&Form, f64)) -> ReluNetwork {
    assert!(bx > 0.0 && by > 0.0, "product bounds must be positive");
    let chain = Chain::new(n);
    let f = chain.square_expr();
    let mut cx = vec![0.0; in_dim];
    let mut cy = vec![0.0; in_dim];
    for &(i, v) in x.0 {
        cx[i] += v / bx * 0.5;
    }
    for &(i, v) in y.0 {
        cy[i] += v / by * 0.5;
    }
    let (cx0, cy0) = (x.1 / bx * 0.5, y.1 / by * 0.5);
    let cols: Vec<usize> = (0..in_dim).filter(|&i| cx[i] != 0.0 || cy[i] != 0.0).collect();
    let form = |sx: f64, sy: f64| -> (Form, f64) {
        (cols.iter().map(|&i| (i, sx * (cx[i] + sy * cy[i]))).collect(), sx * (cx0 + sy * cy0))
    };
    // (x+y)/2, −(x+y)/2, (x−y)/2, −(x−y)/2
    let inputs = [form(1.0, 1.0), form(-1.0, 1.0), form(1.0, -1.0), form(-1.0, -1.0)];
    let mut l1 = LayerBuf::default();
    let offs: Vec<usize> = inputs.iter().map(|(inp, b)| l1.push_chain(&chain, inp, *b)).collect();
    let w1 = l1.width();
    let mut l2 = LayerBuf::default();
    for &o in &offs {
        l2.push(expr_form(&f, o), f.constant, vec![]);
    }
    l2.push(vec![], 0.0, vec![(0, 1.0), (1, 1.0)]);
    l2.push(vec![], 0.0, vec![(2, 1.0), (3, 1.0)]);
    let w = bx * by;
    let out = linear_layer(6, vec![vec![(4, w), (5, -w)]], vec![0.0]);
    net(in_dim, vec![l1.build(in_dim), l2.build(w1), out])
}

/// `~×(x,y) = f̃_N((x+y)/2) − f̃_N((x−y)/2)` on `[−1,1]²`, with `f̃_N` the even square.
pub fn product_net(n: usize) -> ReluNetwork {
    scaled_product_net(n, 1.0, 1.0)
}

/// `×̂(x,y) = Bx·By·~×(x/Bx, y/By)`, accurate to `Bx·By·2^{−2N}` for `|x| ≤ Bx`, `|y| ≤ By`.
pub fn scaled_product_net(n: usize, bx: f64, by: f64) -> ReluNetwork {
    product_block(n, bx, by, 2, &vec![(0, 1.0)], &vec![(1, 1.0)])
}

/// `×̌(g, φ)` for `|g| ≤ M`, `φ ∈ [0,1]`.
pub fn checked_product_net(n: usize, m: f64) -> ReluNetwork {
    scaled_product_net(n, m, 1.0)
}

/// Linear block `v ↦ (Σ rows[k]·v + bias[k])_k`.
pub fn linear_block(in_dim: usize, rows: Vec<Form>, bias: Vec<f64>) -> ReluNetwork {
    net(in_dim, vec![linear_layer(in_dim, rows, bias)])
}

/// Clip `h(x)`: `x` on `[−1+δ, 1−δ]`, `0` outside `(−1,1)`, linear between.
///
/// One intra-linked layer of width 6 computing `g(σ(t)) − g(σ(−t))` with
/// `g(s) = σ(min(s, c(1−s)))`, `c = (1−δ)/δ`, so every output for `|t| ≥ 1` is
/// an exact zero.
pub fn clip_block(delta: f64, in_dim: usize, input: &Form, input_bias: f64) -> ReluNetwork {
    assert!(delta > 0.0 && delta < 1.0, "clip margin must lie in (0,1)");
    let c = (1.0 - delta) / delta;
    let neg: Form = input.iter().map(|&(i, v)| (i, -v)).collect();
    let mut l = LayerBuf::default();
    for (row, b) in [(input.clone(), input_bias), (neg, -input_bias)] {
        let s = l.push(row, b, vec![]);
        let r = l.push(vec![], c, vec![(s, -(c + 1.0))]);
        l.push(vec![], c, vec![(s, -c), (r, -1.0)]);
    }
    net(in_dim, vec![l.build(in_dim), linear_layer(6, vec![vec![(2, 1.0), (5, -1.0)]], vec![0.0])])
}

/// Trapezoid `ψ`: `1` on `[−1+δ, 1−δ]`, `0` outside `(−1,1)`, linear between.
///
/// One intra-linked layer of width 4: `v = σ((1 − σ(t) − σ(−t))/δ)`,
/// `ψ = v − σ(v − 1)`.
pub fn bump_block(delta: f64, in_dim: usize, input: &Form, input_bias: f64) -> ReluNetwork {
    assert!(delta > 0.0 && delta < 1.0, "bump margin must lie in (0,1)");
    let neg: Form = input.iter().map(|&(i, v)| (i, -v)).collect();
    let r = 1.0 / delta;
    let mut l = LayerBuf::default();
    let p = l.push(input.clone(), input_bias, vec![]);
    let q = l.push(neg, -input_bias, vec![]);
    let v = l.push(vec![], r, vec![(p, -r), (q, -r)]);
    l.push(vec![], -1.0, vec![(v, 1.0)]);
    net(in_dim, vec![l.build(in_dim), linear_layer(4, vec![vec![(2, 1.0), (3, -1.0)]], vec![0.0])])
}

pub fn clip_net(delta: f64) -> ReluNetwork {
    clip_block(delta, 1, &vec![(0, 1.0)], 0.0)
}

pub fn bump_net(delta: f64) -> ReluNetwork {
    bump_block(delta, 1, &vec![(0, 1.0)], 0.0)
}

/// How approximate powers are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerMode {
    /// `h_j = ×̂(x, h_{j−1})`, depth `2(n−1)`.
    Chain,
    /// `h_j = ×̂(h_{⌊j/2⌋}, h_{⌈j/2⌉})`, depth `2⌈log₂ n⌉`.
    #[default]
    Tree,
}

/// A network under construction whose outputs form the current frontier.
pub(crate) struct Staged {
    pub net: ReluNetwork,
}

impl Staged {
    pub fn new(net: ReluNetwork) -> Self {
        Staged { net }
    }

    pub fn dim(&self) -> usize {
        self.net.output_dim()
    }

    /// Runs `blocks` side by side on the frontier; their outputs become the new frontier.
    pub fn apply(&mut self, blocks: &[ReluNetwork]) -> Result<()> {
        let s = stack(blocks)?;
        self.net = compose(&s, &self.net)?;
        Ok(())
    }

    /// Frontier passthrough block keeping every current value.
    pub fn keep_all(&self) -> ReluNetwork {
        self.keep(&(0..self.dim()).collect::<Vec<_>>())
    }

    /// Passthrough block for the listed frontier positions, in order.
    pub fn keep(&self, idx: &[usize]) -> ReluNetwork {
        linear_block(self.dim(), idx.iter().map(|&i| vec![(i, 1.0)]).collect(), vec![0.0; idx.len()])
    }
}

/// Builds approximate powers `h_1..h_n` of the frontier value at `x_index`.
///
/// Returns the frontier position of every power (`pos[j]` for `h_j`,
/// `pos[0]` unused). Products use bounds `1, 1`.
pub(crate) fn build_powers(st: &mut Staged, x_index: usize, n: usize, nprod: usize, mode: PowerMode) -> Result<Vec<usize>> {
    let mut pos = vec![usize::MAX; n + 1];
    if n >= 1 {
        pos[1] = x_index;
    }
    let mut done = 1;
    while done < n {
        let m = st.dim();
        let targets: Vec<usize> = match mode {
            PowerMode::Chain => vec![done + 1],
            PowerMode::Tree => ((done + 1)..=n.min(2 * done)).collect(),
        };
        let mut blocks = vec![st.keep_all()];
        for &j in &targets {
            let (a, b) = match mode {
                PowerMode::Chain => (1, j - 1),
                PowerMode::Tree => (j / 2, j - j / 2),
            };
            blocks.push(product_block(nprod, 1.0, 1.0, m, &vec![(pos[a], 1.0)], &vec![(pos[b], 1.0)]));
        }
        st.apply(&blocks)?;
        for (k, &j) in targets.iter().enumerate() {
            pos[j] = m + k;
        }
        done = *targets.last().unwrap();
    }
    Ok(pos)
}

/// `Σ_j a_j h_j` with approximate powers `h_j` of `x ∈ [−1,1]`.
///
/// The error is at most `max|a_j|·n²·2^{−2N−1}` on `[−1,1]`.
pub fn poly_net(coeffs: &[f64], n_prod: usize, mode: PowerMode) -> Result<ReluNetwork> {
    if coeffs.is_empty() {
        return Err(Error::Invalid("poly_net needs at least one coefficient".into()));
    }
    let deg = coeffs.len() - 1;
    let mut st = Staged::new(ReluNetwork::identity(1));
    let pos = build_powers(&mut st, 0, deg, n_prod, mode)?;
    let row: Form = (1..=deg).map(|j| (pos[j], coeffs[j])).collect();
    let out = linear_block(st.dim(), vec![row], vec![coeffs[0]]);
    compose(&out, &st.net)
}

/// Approximate Chebyshev polynomials `T̄_0..T̄_n` of one input coordinate.
///
/// `T̄_k = Σ_{j≥1} a_{k,j} h_j(clip(t)) + a_{k,0}·ψ(t)`, where `a_{k,j}` are
/// the monomial coefficients of `T_k`. This equals `P̄_k∘clip − a_{k,0}(1−ψ)`:
/// every term vanishes exactly for `|t| ≥ 1`, and `ψ ≡ 1` on `I_δ` leaves the
/// approximation there unchanged.
pub struct ChebBank {
    /// Network with outputs `[ψ, clip, …]` followed by the power frontier.
    pub(crate) staged: Staged,
    /// Linear forms over the frontier giving `T̄_k`, `k = 0..=n`.
    pub forms: Vec<Form>,
}

impl ChebBank {
    /// Bank for the coordinate `t = input·v + input_bias` of an input vector `v`.
    pub fn new(n: usize, n_prod: usize, delta: f64, in_dim: usize, input: &Form, input_bias: f64, mode: PowerMode) -> Result<Self> {
        let first = stack(&[bump_block(delta, in_dim, input, input_bias), clip_block(delta, in_dim, input, input_bias)])?;
        let mut st = Staged::new(first);
        let pos = build_powers(&mut st, 1, n, n_prod, mode)?;
        let forms = (0..=n)
            .map(|k| {
                let mono = cheb_monomial(k);
                let mut f: Form = (1..=k).filter(|&j| mono[j] != 0.0).map(|j| (pos[j], mono[j])).collect();
                if mono[0] != 0.0 {
                    f.push((0, mono[0]));
                }
                f
            })
            .collect();
        Ok(ChebBank { staged: st, forms })
    }

    pub fn network(&self) -> &ReluNetwork {
        &self.staged.net
    }

    /// Standalone network with outputs `T̄_0..T̄_n`.
    pub fn outputs_net(&self) -> Result<ReluNetwork> {
        let out = linear_block(self.staged.dim(), self.forms.clone(), vec![0.0; self.forms.len()]);
        compose(&out, &self.staged.net)
    }
}

/// `T̄_k`: within `k²3^k2^{−2N−1}` of `T_k` on `[−1+δ, 1−δ]`, exactly zero for `|x| ≥ 1`.
pub fn cheb_net(k: usize, n_prod: usize, delta: f64) -> Result<ReluNetwork> {
    let bank = ChebBank::new(k, n_prod, delta, 1, &vec![(0, 1.0)], 0.0, PowerMode::Tree)?;
    let out = linear_block(bank.staged.dim(), vec![bank.forms[k].clone()], vec![0.0]);
    compose(&out, bank.network())
}
