//! ReLU network intermediate representation.
//!
//! A network is a list of layers. Each layer applies an affine map to the
//! previous output; an activated layer then applies ReLU neuron by neuron,
//! adding to neuron `k` the intra-link contributions `Σ_{j<k} W[k][j]·y_j` of
//! the already activated neurons of the same layer. Unactivated (linear)
//! layers may appear anywhere; the last layer is always linear.
//!
//! Evaluation order is fixed: bias first, then matrix terms by increasing
//! column, then intra terms by increasing column. Zero weights are never
//! stored, so stacking and composing networks does not change the floating
//! point operations performed for any output. [`compose`] concatenates layers
//! instead of multiplying matrices, which keeps `compose(a, b)(x)` bit-identical
//! to `a(b(x))`; [`lower`] produces the fused, intra-free form for export.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compressed sparse rows; entries within a row are sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols, row_ptr: vec![0; rows + 1], col: vec![], val: vec![] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows(n, (0..n).map(|i| vec![(i, 1.0)]).collect())
    }

    /// Builds from per-row `(column, value)` lists. Zero values are dropped and
    /// repeated columns are summed in the order given.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut m = SparseMatrix { rows: rows.len(), cols, row_ptr: vec![0], col: vec![], val: vec![] };
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(r.len());
            for (c, v) in r {
                assert!(c < cols, "column {c} out of range {cols}");
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            for (c, v) in merged {
                if v != 0.0 {
                    m.col.push(c as u32);
                    m.val.push(v);
                }
            }
            m.row_ptr.push(m.col.len());
        }
        m
    }

    pub fn from_dense(rows: &[Vec<f64>], cols: usize) -> Self {
        Self::from_rows(cols, rows.iter().map(|r| r.iter().copied().enumerate().collect()).collect())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| {
                let mut r = vec![0.0; self.cols];
                for (c, v) in self.row(i) {
                    r[c] = v;
                }
                r
            })
            .collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col[a..b].iter().zip(&self.val[a..b]).map(|(c, v)| (*c as usize, *v))
    }

    pub fn row_vec(&self, i: usize) -> Vec<(usize, f64)> {
        self.row(i).collect()
    }

    fn is_strictly_lower(&self) -> bool {
        (0..self.rows).all(|i| self.row(i).all(|(c, _)| c < i))
    }

    /// `self · other`, summing in column order of `self`.
    pub fn matmul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.cols, other.rows);
        let rows = (0..self.rows)
            .map(|i| {
                let mut acc = vec![0.0; other.cols];
                let mut touched = vec![];
                for (k, a) in self.row(i) {
                    for (j, b) in other.row(k) {
                        if acc[j] == 0.0 {
                            touched.push(j);
                        }
                        acc[j] += a * b;
                    }
                }
                touched.sort_unstable();
                touched.dedup();
                touched.into_iter().map(|j| (j, acc[j])).collect()
            })
            .collect();
        SparseMatrix::from_rows(other.cols, rows)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// Block-diagonal concatenation.
    fn block_diag(blocks: &[&SparseMatrix]) -> SparseMatrix {
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut rows = vec![];
        let mut off = 0;
        for b in blocks {
            for i in 0..b.rows {
                rows.push(b.row(i).map(|(c, v)| (c + off, v)).collect());
            }
            off += b.cols;
        }
        SparseMatrix::from_rows(cols, rows)
    }

    /// Vertical concatenation of blocks sharing their columns.
    fn vstack(blocks: &[&SparseMatrix]) -> SparseMatrix {
        let cols = blocks.first().map_or(0, |b| b.cols);
        let mut rows = vec![];
        for b in blocks {
            assert_eq!(b.cols, cols);
            for i in 0..b.rows {
                rows.push(b.row_vec(i));
            }
        }
        SparseMatrix::from_rows(cols, rows)
    }

    fn all_finite(&self) -> bool {
        self.val.iter().all(|v| v.is_finite())
    }
}

/// One layer: affine map, optional intra links, activation flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub matrix: SparseMatrix,
    pub bias: Vec<f64>,
    pub intra: Option<SparseMatrix>,
    pub activated: bool,
}

impl Layer {
    pub fn linear(matrix: SparseMatrix, bias: Vec<f64>) -> Self {
        Layer { matrix, bias, intra: None, activated: false }
    }

    pub fn relu(matrix: SparseMatrix, bias: Vec<f64>, intra: Option<SparseMatrix>) -> Self {
        let intra = intra.filter(|w| w.nnz() > 0);
        Layer { matrix, bias, intra, activated: true }
    }

    pub fn width(&self) -> usize {
        self.bias.len()
    }

    pub fn input_dim(&self) -> usize {
        self.matrix.cols()
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (k, b) in self.bias.iter().enumerate() {
            let mut z = *b;
            for (c, w) in self.matrix.row(k) {
                z += w * x[c];
            }
            if self.activated {
                if let Some(intra) = &self.intra {
                    for (c, w) in intra.row(k) {
                        z += w * out[c];
                    }
                }
                z = relu(z);
            }
            out.push(z);
        }
    }

    fn identity_linear(n: usize) -> Self {
        Layer::linear(SparseMatrix::identity(n), vec![0.0; n])
    }

    fn identity_relu(n: usize) -> Self {
        Layer::relu(SparseMatrix::identity(n), vec![0.0; n], None)
    }
}

/// `max(0, z)` returning `+0.0` for every nonpositive input.
#[inline]
pub fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// Layered ReLU network with intra-layer links.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluNetwork {
    pub input_dim: usize,
    pub layers: Vec<Layer>,
}

/// Structural counts of a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeReport {
    pub width: usize,
    pub depth: usize,
    pub parameter_count: usize,
    pub intra_link_count: usize,
}

impl ReluNetwork {
    /// Validates dimensions, intra structure and finiteness.
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        let net = ReluNetwork { input_dim, layers };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        let last = self.layers.last().ok_or_else(|| Error::Malformed("network has no layers".into()))?;
        if last.activated {
            return Err(Error::Malformed("the final layer must be an unactivated output map".into()));
        }
        let mut dim = self.input_dim;
        for (i, l) in self.layers.iter().enumerate() {
            if l.matrix.cols() != dim {
                return Err(Error::Dimension(format!("layer {i} reads {} inputs, previous width is {dim}", l.matrix.cols())));
            }
            if l.matrix.rows() != l.bias.len() {
                return Err(Error::Dimension(format!("layer {i} has {} rows but {} biases", l.matrix.rows(), l.bias.len())));
            }
            if let Some(w) = &l.intra {
                if !l.activated && w.nnz() > 0 {
                    return Err(Error::Malformed(format!("layer {i} is linear but has intra links")));
                }
                if w.rows() != l.width() || w.cols() != l.width() {
                    return Err(Error::Dimension(format!("layer {i} intra matrix is not {0}×{0}", l.width())));
                }
                if !w.is_strictly_lower() {
                    return Err(Error::Malformed(format!("layer {i} intra matrix is not strictly lower triangular")));
                }
                if !w.all_finite() {
                    return Err(Error::Malformed(format!("layer {i} has non-finite intra weights")));
                }
            }
            if !l.matrix.all_finite() || !l.bias.iter().all(|b| b.is_finite()) {
                return Err(Error::Malformed(format!("layer {i} has non-finite weights")));
            }
            dim = l.width();
        }
        Ok(())
    }

    /// Single linear layer `x ↦ Mx + b`.
    pub fn affine(matrix: SparseMatrix, bias: Vec<f64>) -> Self {
        ReluNetwork { input_dim: matrix.cols(), layers: vec![Layer::linear(matrix, bias)] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::affine(SparseMatrix::identity(dim), vec![0.0; dim])
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.input_dim, |l| l.width())
    }

    /// Maximum layer width.
    pub fn width(&self) -> usize {
        self.layers.iter().map(|l| l.width()).max().unwrap_or(0)
    }

    /// Number of activated layers.
    pub fn depth(&self) -> usize {
        self.layers.iter().filter(|l| l.activated).count()
    }

    pub fn size_report(&self) -> SizeReport {
        let mut parameter_count = 0;
        let mut intra_link_count = 0;
        for l in &self.layers {
            parameter_count += l.matrix.nnz() + l.bias.iter().filter(|b| **b != 0.0).count();
            if let Some(w) = &l.intra {
                intra_link_count += w.nnz();
            }
        }
        SizeReport { width: self.width(), depth: self.depth(), parameter_count: parameter_count + intra_link_count, intra_link_count }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension(format!("network expects {} inputs, got {}", self.input_dim, x.len())));
        }
        let mut a = x.to_vec();
        let mut b = Vec::new();
        for l in &self.layers {
            l.apply(&a, &mut b);
            std::mem::swap(&mut a, &mut b);
        }
        Ok(a)
    }

    /// First output; panics on dimension mismatch.
    pub fn eval_scalar(&self, x: &[f64]) -> f64 {
        self.eval(x).expect("input dimension")[0]
    }

    /// Parallel evaluation of the first output at many points.
    pub fn eval_scalar_batch(&self, points: &[Vec<f64>]) -> Vec<f64> {
        points.par_iter().map(|p| self.eval_scalar(p)).collect()
    }

    /// Reads inputs through `map`: input `i` of `self` becomes input `map[i]`
    /// of a network with `new_input_dim` inputs.
    pub fn reindex_inputs(&self, new_input_dim: usize, map: &[usize]) -> Result<Self> {
        if map.len() != self.input_dim || map.iter().any(|&m| m >= new_input_dim) {
            return Err(Error::Dimension("input map does not match the network".into()));
        }
        let mut net = self.clone();
        let first = &net.layers[0].matrix;
        let rows = (0..first.rows()).map(|i| first.row(i).map(|(c, v)| (map[c], v)).collect()).collect();
        net.layers[0].matrix = SparseMatrix::from_rows(new_input_dim, rows);
        net.input_dim = new_input_dim;
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&NetworkJson::from(self)).expect("network serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let dto: NetworkJson = serde_json::from_str(s)?;
        dto.try_into()
    }
}

/// `outer ∘ inner` by layer concatenation; bit-identical to nested evaluation.
pub fn compose(outer: &ReluNetwork, inner: &ReluNetwork) -> Result<ReluNetwork> {
    if inner.output_dim() != outer.input_dim {
        return Err(Error::Dimension(format!("inner outputs {} values, outer reads {}", inner.output_dim(), outer.input_dim)));
    }
    let mut layers = inner.layers.clone();
    layers.extend(outer.layers.iter().cloned());
    Ok(ReluNetwork { input_dim: inner.input_dim, layers })
}

/// Pads a network to `depth` activated layers without changing its outputs.
///
/// With at least one activated layer, identity ReLU layers are inserted after
/// the last activated one (its outputs are nonnegative). A purely linear
/// network first routes its input through `σ(t), σ(−t)` pairs.
pub fn pad_depth(net: &ReluNetwork, depth: usize) -> ReluNetwork {
    let have = net.depth();
    if have >= depth {
        return net.clone();
    }
    let mut net = net.clone();
    if have == 0 {
        // Route each input read by the first layer through the exact pair
        // σ(t), σ(−t); the two halves of one input are summed consecutively.
        let m = net.input_dim;
        let first = &net.layers[0].matrix;
        let mut used: Vec<usize> = (0..first.rows()).flat_map(|k| first.row(k).map(|(c, _)| c)).collect();
        used.sort_unstable();
        used.dedup();
        let mut slot = vec![usize::MAX; m];
        for (i, &c) in used.iter().enumerate() {
            slot[c] = i;
        }
        let pairs = SparseMatrix::from_rows(m, used.iter().flat_map(|&c| [vec![(c, 1.0)], vec![(c, -1.0)]]).collect());
        let rows = (0..first.rows())
            .map(|k| first.row(k).flat_map(|(c, v)| [(2 * slot[c], v), (2 * slot[c] + 1, -v)]).collect())
            .collect();
        net.layers[0].matrix = SparseMatrix::from_rows(2 * used.len(), rows);
        net.layers.insert(0, Layer::relu(pairs, vec![0.0; 2 * used.len()], None));
    }
    let last_a = net.layers.iter().rposition(|l| l.activated).expect("has an activated layer");
    let w = net.layers[last_a].width();
    for _ in net.depth()..depth {
        net.layers.insert(last_a + 1, Layer::identity_relu(w));
    }
    net
}

/// Linear-run lengths around the activated layers: `gaps[m]` linear layers
/// precede activated layer `m`; `gaps[depth]` trail the last one.
fn gaps(net: &ReluNetwork) -> Vec<usize> {
    let mut g = vec![0];
    for l in &net.layers {
        if l.activated {
            g.push(0);
        } else {
            *g.last_mut().unwrap() += 1;
        }
    }
    g
}

/// Runs networks sharing an input side by side; outputs are concatenated.
///
/// Shorter networks are padded with exact identity ReLU layers, and linear
/// runs are equalized with identity linear layers, so every block evaluates
/// exactly as it would alone.
pub fn stack(nets: &[ReluNetwork]) -> Result<ReluNetwork> {
    let first = nets.first().ok_or_else(|| Error::Invalid("stack of no networks".into()))?;
    if nets.iter().any(|n| n.input_dim != first.input_dim) {
        return Err(Error::Dimension("stacked networks must share their input dimension".into()));
    }
    if nets.len() == 1 {
        return Ok(first.clone());
    }
    let depth = nets.iter().map(|n| n.depth()).max().unwrap();
    let padded: Vec<ReluNetwork> = nets.iter().map(|n| pad_depth(n, depth)).collect();
    let all_gaps: Vec<Vec<usize>> = padded.iter().map(gaps).collect();
    let target: Vec<usize> = (0..=depth).map(|m| all_gaps.iter().map(|g| g[m]).max().unwrap()).collect();
    let aligned: Vec<Vec<Layer>> = padded
        .iter()
        .zip(&all_gaps)
        .map(|(net, g)| {
            let mut out = vec![];
            let mut dim = net.input_dim;
            let mut m = 0;
            for l in &net.layers {
                if l.activated {
                    for _ in g[m]..target[m] {
                        out.push(Layer::identity_linear(dim));
                    }
                    m += 1;
                }
                out.push(l.clone());
                dim = l.width();
            }
            for _ in g[depth]..target[depth] {
                out.push(Layer::identity_linear(dim));
            }
            out
        })
        .collect();
    let n_layers = aligned[0].len();
    let mut layers = Vec::with_capacity(n_layers);
    for i in 0..n_layers {
        let parts: Vec<&Layer> = aligned.iter().map(|a| &a[i]).collect();
        let mats: Vec<&SparseMatrix> = parts.iter().map(|l| &l.matrix).collect();
        let matrix = if i == 0 { SparseMatrix::vstack(&mats) } else { SparseMatrix::block_diag(&mats) };
        let bias = parts.iter().flat_map(|l| l.bias.iter().copied()).collect();
        let activated = parts[0].activated;
        debug_assert!(parts.iter().all(|l| l.activated == activated));
        let layer = if activated {
            let intras: Vec<SparseMatrix> =
                parts.iter().map(|l| l.intra.clone().unwrap_or_else(|| SparseMatrix::zeros(l.width(), l.width()))).collect();
            let refs: Vec<&SparseMatrix> = intras.iter().collect();
            Layer::relu(matrix, bias, Some(SparseMatrix::block_diag(&refs)))
        } else {
            Layer::linear(matrix, bias)
        };
        layers.push(layer);
    }
    ReluNetwork::new(first.input_dim, layers)
}

/// Export form: no intra links and no interior linear layers.
///
/// Each intra-linked layer of width `w` becomes `w` plain layers that carry
/// the layer input through `σ(t), σ(−t)` pairs and the finished neurons
/// through identity ReLUs; linear layers are then multiplied into their
/// successors. Values agree with the source network up to rounding.
pub fn lower(net: &ReluNetwork) -> ReluNetwork {
    let mut layers: Vec<Layer> = vec![];
    let mut dim = net.input_dim;
    for l in &net.layers {
        match &l.intra {
            Some(w) if l.activated => layers.extend(unroll_intra(l, w, dim)),
            _ => layers.push(l.clone()),
        }
        dim = l.width();
    }
    let mut fused: Vec<Layer> = vec![];
    let mut pending: Option<Layer> = None;
    for l in layers {
        let l = match pending.take() {
            Some(p) => {
                let matrix = l.matrix.matmul(&p.matrix);
                let shift = l.matrix.mul_vec(&p.bias);
                let bias = l.bias.iter().zip(shift).map(|(b, s)| b + s).collect();
                Layer { matrix, bias, intra: l.intra, activated: l.activated }
            }
            None => l,
        };
        if l.activated {
            fused.push(l);
        } else {
            pending = Some(l);
        }
    }
    fused.push(pending.expect("networks end with a linear layer"));
    ReluNetwork { input_dim: net.input_dim, layers: fused }
}

fn unroll_intra(l: &Layer, w: &SparseMatrix, m: usize) -> Vec<Layer> {
    let width = l.width();
    // Carried state after step i: [σ(u) (m), σ(−u) (m), y_0..y_i].
    let mut out = Vec::with_capacity(width + 1);
    for i in 0..width {
        let carried = if i == 0 { 0 } else { 2 * m + i };
        let mut rows: Vec<Vec<(usize, f64)>> = vec![];
        let mut bias = vec![];
        let cols = if i == 0 { m } else { carried };
        let u_term = |c: usize, v: f64| -> Vec<(usize, f64)> {
            if i == 0 {
                vec![(c, v)]
            } else {
                vec![(c, v), (c + m, -v)]
            }
        };
        for c in 0..m {
            rows.push(u_term(c, 1.0));
            bias.push(0.0);
        }
        for c in 0..m {
            rows.push(u_term(c, -1.0));
            bias.push(0.0);
        }
        for j in 0..i {
            rows.push(vec![(2 * m + j, 1.0)]);
            bias.push(0.0);
        }
        let mut r: Vec<(usize, f64)> = l.matrix.row(i).flat_map(|(c, v)| u_term(c, v)).collect();
        r.extend(w.row(i).map(|(c, v)| (2 * m + c, v)));
        rows.push(r);
        bias.push(l.bias[i]);
        out.push(Layer::relu(SparseMatrix::from_rows(cols, rows), bias, None));
    }
    // Drop the carried input pairs, keeping the layer's outputs.
    let sel = SparseMatrix::from_rows(2 * m + width, (0..width).map(|j| vec![(2 * m + j, 1.0)]).collect());
    out.push(Layer::linear(sel, vec![0.0; width]));
    out
}

#[derive(Serialize, Deserialize)]
struct LayerJson {
    matrix: Vec<Vec<f64>>,
    bias: Vec<f64>,
    intra: Option<Vec<Vec<f64>>>,
    activated: bool,
}

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    input_dim: usize,
    layers: Vec<LayerJson>,
}

impl From<&ReluNetwork> for NetworkJson {
    fn from(net: &ReluNetwork) -> Self {
        NetworkJson {
            input_dim: net.input_dim,
            layers: net
                .layers
                .iter()
                .map(|l| LayerJson {
                    matrix: l.matrix.to_dense(),
                    bias: l.bias.clone(),
                    intra: l.intra.as_ref().filter(|w| w.nnz() > 0).map(|w| w.to_dense()),
                    activated: l.activated,
                })
                .collect(),
        }
    }
}

impl TryFrom<NetworkJson> for ReluNetwork {
    type Error = Error;

    fn try_from(dto: NetworkJson) -> Result<Self> {
        let mut dim = dto.input_dim;
        let mut layers = Vec::with_capacity(dto.layers.len());
        for (i, l) in dto.layers.into_iter().enumerate() {
            if let Some(r) = l.matrix.iter().find(|r| r.len() != dim) {
                return Err(Error::Dimension(format!("layer {i} row has {} entries, expected {dim}", r.len())));
            }
            let width = l.bias.len();
            let intra = match l.intra {
                None => None,
                Some(w) => {
                    if w.len() != width || w.iter().any(|r| r.len() != width) {
                        return Err(Error::Dimension(format!("layer {i} intra matrix is not {width}×{width}")));
                    }
                    for (r, row) in w.iter().enumerate() {
                        if row[r..].iter().any(|v| *v != 0.0) {
                            return Err(Error::Malformed(format!("layer {i} intra matrix is not strictly lower triangular")));
                        }
                    }
                    Some(SparseMatrix::from_dense(&w, width))
                }
            };
            let matrix = SparseMatrix::from_dense(&l.matrix, dim);
            layers.push(Layer { matrix, bias: l.bias, intra, activated: l.activated });
            dim = width;
        }
        ReluNetwork::new(dto.input_dim, layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_layer(m: &[Vec<f64>], b: &[f64], act: bool) -> Layer {
        let l = SparseMatrix::from_dense(m, m[0].len());
        if act {
            Layer::relu(l, b.to_vec(), None)
        } else {
            Layer::linear(l, b.to_vec())
        }
    }

    #[test]
    fn identity_layer_passes_values() {
        let net = ReluNetwork::identity(2);
        assert_eq!(net.eval(&[0.3, -0.2]).unwrap(), vec![0.3, -0.2]);
    }

    #[test]
    fn single_relu_neuron() {
        let net =
            ReluNetwork::new(1, vec![dense_layer(&[vec![1.0]], &[-0.5], true), dense_layer(&[vec![1.0]], &[0.0], false)]).unwrap();
        assert_eq!(net.eval_scalar(&[0.2]), 0.0);
        assert_eq!(net.eval_scalar(&[0.7]), 0.7 - 0.5);
    }

    #[test]
    fn intra_links_see_activated_outputs() {
        // y0 = σ(x), y1 = σ(1 − 2 y0)
        let intra = SparseMatrix::from_rows(2, vec![vec![], vec![(0, -2.0)]]);
        let l = Layer::relu(SparseMatrix::from_rows(1, vec![vec![(0, 1.0)], vec![]]), vec![0.0, 1.0], Some(intra));
        let net = ReluNetwork::new(1, vec![l, dense_layer(&[vec![0.0, 1.0]], &[0.0], false)]).unwrap();
        assert_eq!(net.eval_scalar(&[0.25]), 0.5);
        assert_eq!(net.eval_scalar(&[-3.0]), 1.0);
        assert_eq!(net.eval_scalar(&[0.75]), 0.0);
    }

    #[test]
    fn dimension_errors() {
        let net = ReluNetwork::identity(2);
        assert!(matches!(net.eval(&[1.0]), Err(Error::Dimension(_))));
        let bad = ReluNetwork::new(2, vec![dense_layer(&[vec![1.0]], &[0.0], false)]);
        assert!(matches!(bad, Err(Error::Dimension(_))));
        assert!(compose(&ReluNetwork::identity(3), &net).is_err());
    }

    #[test]
    fn final_layer_must_be_linear() {
        let r = ReluNetwork::new(1, vec![dense_layer(&[vec![1.0]], &[0.0], true)]);
        assert!(matches!(r, Err(Error::Malformed(_))));
    }

    #[test]
    fn passthrough_pair_is_exact() {
        let net = pad_depth(&ReluNetwork::identity(1), 3);
        assert_eq!(net.depth(), 3);
        assert_eq!(net.eval_scalar(&[-3.7]), -3.7);
        assert_eq!(net.eval_scalar(&[2.25]), 2.25);
    }
}
