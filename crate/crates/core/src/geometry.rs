//! Polytopes, parallelepipeds, coverings and modulus estimation.
//!
//! Halfspaces are stored with inward normals: `normal·x ≥ offset`.
//! Membership tests are closed and use a tolerance of `1e-10` times the
//! diameter. Sampling uses the `R_d` sequence, so every report is a pure
//! function of its seed.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::TargetFn;
use crate::netir::{ReluNetwork, SparseMatrix};
use crate::sampling::RdSequence;

const REL_TOL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64], t: f64, e: &[f64]) -> Vec<f64> {
    x.iter().zip(e).map(|(a, b)| a + t * b).collect()
}

/// Affine map `x ↦ Ax + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl AffineMap {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.iter().zip(&self.offset).map(|(row, b)| dot(row, x) + b).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.matrix.first().map_or(0, |r| r.len())
    }

    /// Single linear layer computing the map.
    pub fn to_network(&self) -> ReluNetwork {
        ReluNetwork::affine(SparseMatrix::from_dense(&self.matrix, self.input_dim()), self.offset.clone())
    }
}

/// `corner + Σ s_i·edges[i]`, `s ∈ [0,1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parallelepiped {
    pub corner: Vec<f64>,
    pub edges: Vec<Vec<f64>>,
}

impl Parallelepiped {
    pub fn new(corner: Vec<f64>, edges: Vec<Vec<f64>>) -> Result<Self> {
        let p = Parallelepiped { corner, edges };
        p.validate()?;
        Ok(p)
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension(format!("box corners of length {} and {}", lo.len(), hi.len())));
        }
        let d = lo.len();
        let edges = (0..d)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i] = hi[i] - lo[i];
                e
            })
            .collect();
        Parallelepiped::new(lo.to_vec(), edges)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.corner.len();
        if d == 0 || self.edges.len() != d || self.edges.iter().any(|e| e.len() != d) {
            return Err(Error::Dimension(format!("parallelepiped in dimension {d} needs {d} edges of length {d}")));
        }
        if self.corner.iter().chain(self.edges.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite parallelepiped data".into()));
        }
        let scale = self.scale();
        let det = self.edge_matrix().determinant();
        if !(det.abs() > 1e-12 * scale.powi(d as i32)) {
            return Err(Error::Geometry(format!("degenerate edge matrix (det = {det:e})")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    /// Longest edge length.
    pub fn scale(&self) -> f64 {
        self.edges.iter().map(|e| norm(e)).fold(0.0, f64::max)
    }

    /// Matrix whose columns are the edges.
    fn edge_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.edges[j][i])
    }

    pub fn center(&self) -> Vec<f64> {
        let mut c = self.corner.clone();
        for e in &self.edges {
            for (ci, ei) in c.iter_mut().zip(e) {
                *ci += 0.5 * ei;
            }
        }
        c
    }

    /// All `2^d` vertices.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                let mut v = self.corner.clone();
                for (i, e) in self.edges.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        v = axpy(&v, 1.0, e);
                    }
                }
                v
            })
            .collect()
    }

    pub fn to_cube_coords(&self, x: &[f64]) -> Vec<f64> {
        pp_to_cube_map(self).expect("validated parallelepiped").0.apply(x)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        pp_contains(self, x, tol)
    }
}

/// Forward map onto `[−1,1]^d` (corner to `(−1,…,−1)`, edges to `2e_i`) and its inverse.
pub fn pp_to_cube_map(e: &Parallelepiped) -> Result<(AffineMap, AffineMap)> {
    e.validate()?;
    let d = e.dim();
    let m = e.edge_matrix();
    let inv = m.clone().try_inverse().ok_or_else(|| Error::Geometry("edge matrix is singular".into()))?;
    let a = inv * 2.0;
    let c = DVector::from_column_slice(&e.corner);
    let b = -(&a * c) - DVector::from_element(d, 1.0);
    let fwd = AffineMap {
        matrix: (0..d).map(|i| (0..d).map(|j| a[(i, j)]).collect()).collect(),
        offset: b.iter().copied().collect(),
    };
    let center = e.center();
    let back = AffineMap { matrix: (0..d).map(|i| (0..d).map(|j| 0.5 * m[(i, j)]).collect()).collect(), offset: center };
    Ok((fwd, back))
}

/// Dilation about the center by `λ ∈ (0,1]`.
pub fn pp_dilate(e: &Parallelepiped, lambda: f64) -> Result<Parallelepiped> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Invalid(format!("dilation factor {lambda} outside (0,1]")));
    }
    let c = e.center();
    let edges: Vec<Vec<f64>> = e.edges.iter().map(|v| v.iter().map(|x| lambda * x).collect()).collect();
    let mut corner = c;
    for v in &edges {
        corner = axpy(&corner, -0.5, v);
    }
    Parallelepiped::new(corner, edges)
}

/// Closed membership with absolute tolerance `tol` in cube coordinates.
pub fn pp_contains(e: &Parallelepiped, x: &[f64], tol: f64) -> bool {
    e.to_cube_coords(x).iter().all(|u| u.abs() <= 1.0 + tol)
}

/// Inward halfspace `normal·x ≥ offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Convex polytope given by its vertices and inward halfspaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    pub vertices: Vec<Vec<f64>>,
    pub halfspaces: Vec<Halfspace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<Vec<f64>>>,
}

impl Polytope {
    pub fn new(vertices: Vec<Vec<f64>>, halfspaces: Vec<Halfspace>, edges: Option<Vec<Vec<f64>>>) -> Result<Self> {
        let p = Polytope { vertices, halfspaces, edges };
        p.validate()?;
        Ok(p)
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let d = lo.len();
        if hi.len() != d || d == 0 {
            return Err(Error::Dimension("box bounds must have equal positive length".into()));
        }
        let vertices = Parallelepiped::from_box(lo, hi)?.vertices();
        let mut halfspaces = Vec::with_capacity(2 * d);
        for i in 0..d {
            let mut n = vec![0.0; d];
            n[i] = 1.0;
            halfspaces.push(Halfspace { normal: n.clone(), offset: lo[i] });
            n[i] = -1.0;
            halfspaces.push(Halfspace { normal: n, offset: -hi[i] });
        }
        Polytope::new(vertices, halfspaces, None)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 || self.vertices.len() < d + 1 {
            return Err(Error::Geometry("a polytope needs at least d+1 vertices".into()));
        }
        if self.vertices.iter().any(|v| v.len() != d) || self.halfspaces.iter().any(|h| h.normal.len() != d) {
            return Err(Error::Dimension("inconsistent polytope dimensions".into()));
        }
        if let Some(edges) = &self.edges {
            if edges.iter().any(|e| e.len() != d || norm(e) == 0.0) {
                return Err(Error::Dimension("edge directions must be nonzero vectors of the polytope dimension".into()));
            }
        }
        let tol = REL_TOL * self.diameter().max(f64::MIN_POSITIVE);
        for h in &self.halfspaces {
            let nn = norm(&h.normal);
            if nn == 0.0 {
                return Err(Error::Geometry("halfspace with zero normal".into()));
            }
            let slack: Vec<f64> = self.vertices.iter().map(|v| (dot(&h.normal, v) - h.offset) / nn).collect();
            if slack.iter().any(|&s| s < -tol) {
                return Err(Error::Geometry("a vertex violates a halfspace".into()));
            }
            if slack.iter().all(|&s| s > tol) {
                return Err(Error::Geometry("a halfspace touches no vertex".into()));
            }
        }
        // Hull samples must satisfy the halfspaces.
        let seq = RdSequence::new(self.vertices.len(), 7);
        for k in 0..256 {
            let w = seq.point(k);
            let s: f64 = w.iter().sum();
            let mut x = vec![0.0; d];
            for (wi, v) in w.iter().zip(&self.vertices) {
                x = axpy(&x, wi / s, v);
            }
            if !self.contains(&x) {
                return Err(Error::Geometry("halfspaces are inconsistent with the vertex hull".into()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.vertices.first().map_or(0, |v| v.len())
    }

    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                best = best.max(norm(&axpy(a, -1.0, b)));
            }
        }
        best
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        bounding_box(&self.vertices)
    }

    pub fn tolerance(&self) -> f64 {
        REL_TOL * self.diameter()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        polytope_contains(self, x, self.tolerance())
    }

    /// Parameter interval `[t_min, t_max]` of the chord `{x + t·e} ∩ K`.
    pub fn chord(&self, x: &[f64], e: &[f64]) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for h in &self.halfspaces {
            let a = dot(&h.normal, x) - h.offset;
            let b = dot(&h.normal, e);
            if b.abs() <= 1e-15 * norm(&h.normal) {
                continue;
            }
            let t = -a / b;
            if b > 0.0 {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
        }
        (lo, hi)
    }
}

fn bounding_box(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = points[0].len();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in points {
        for i in 0..d {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    (lo, hi)
}

pub fn polytope_contains(k: &Polytope, x: &[f64], tol: f64) -> bool {
    k.halfspaces.iter().all(|h| dot(&h.normal, x) - h.offset >= -tol * norm(&h.normal))
}

/// A domain: one convex polytope or a union of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Domain {
    Union { union: Vec<Polytope> },
    Convex(Polytope),
}

impl Domain {
    /// Union of axis-aligned boxes.
    pub fn box_union(boxes: &[(Vec<f64>, Vec<f64>)]) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::Invalid("empty box list".into()));
        }
        let parts = boxes.iter().map(|(lo, hi)| Polytope::from_box(lo, hi)).collect::<Result<Vec<_>>>()?;
        Ok(if parts.len() == 1 { Domain::Convex(parts.into_iter().next().unwrap()) } else { Domain::Union { union: parts } })
    }

    pub fn parts(&self) -> &[Polytope] {
        match self {
            Domain::Union { union } => union,
            Domain::Convex(p) => std::slice::from_ref(p),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let parts = self.parts();
        if parts.is_empty() {
            return Err(Error::Geometry("empty domain".into()));
        }
        let d = parts[0].dim();
        for p in parts {
            p.validate()?;
            if p.dim() != d {
                return Err(Error::Dimension("domain parts differ in dimension".into()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.parts()[0].dim()
    }

    pub fn vertices(&self) -> Vec<Vec<f64>> {
        self.parts().iter().flat_map(|p| p.vertices.iter().cloned()).collect()
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        bounding_box(&self.vertices())
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        norm(&axpy(&hi, -1.0, &lo))
    }

    pub fn tolerance(&self) -> f64 {
        REL_TOL * self.diameter()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let tol = self.tolerance();
        self.parts().iter().any(|p| polytope_contains(p, x, tol))
    }

    /// Distance-like exterior margin: `min` over parts of the largest halfspace violation.
    pub fn exterior_margin(&self, x: &[f64]) -> f64 {
        self.parts()
            .iter()
            .map(|p| p.halfspaces.iter().map(|h| (h.offset - dot(&h.normal, x)) / norm(&h.normal)).fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min)
    }

    /// `count` quasi-random points of the domain (rejection from the bounding box).
    pub fn sample_interior(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let (lo, hi) = self.bounding_box();
        let seq = RdSequence::new(self.dim(), seed);
        let mut out = Vec::with_capacity(count);
        let mut k = 0u64;
        while out.len() < count && k < 1000 * count as u64 + 1000 {
            let p = seq.point_in_box(k, &lo, &hi);
            if self.contains(&p) {
                out.push(p);
            }
            k += 1;
        }
        out
    }

    /// `count` quasi-random points outside the domain by at least `margin`,
    /// drawn from the bounding box enlarged by `pad` on every side.
    pub fn sample_exterior(&self, count: usize, margin: f64, pad: f64, seed: u64) -> Vec<Vec<f64>> {
        let (mut lo, mut hi) = self.bounding_box();
        for (l, h) in lo.iter_mut().zip(hi.iter_mut()) {
            *l -= pad;
            *h += pad;
        }
        let seq = RdSequence::new(self.dim(), seed);
        let mut out = Vec::with_capacity(count);
        let mut k = 0u64;
        while out.len() < count && k < 1000 * count as u64 + 1000 {
            let p = seq.point_in_box(k, &lo, &hi);
            if self.exterior_margin(&p) >= margin {
                out.push(p);
            }
            k += 1;
        }
        out
    }
}

/// Family of parallelepipeds with a common shrink factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covering {
    pub pieces: Vec<Parallelepiped>,
    pub lambda: f64,
    #[serde(default)]
    pub validated: bool,
}

impl Covering {
    pub fn new(pieces: Vec<Parallelepiped>, lambda: f64) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Invalid("a covering needs at least one piece".into()));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Invalid(format!("shrink factor {lambda} outside (0,1)")));
        }
        let d = pieces[0].dim();
        for p in &pieces {
            p.validate()?;
            if p.dim() != d {
                return Err(Error::Dimension("pieces differ in dimension".into()));
            }
        }
        Ok(Covering { pieces, lambda, validated: false })
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    fn cube_coords(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.pieces.iter().map(|p| p.to_cube_coords(x)).collect()
    }

    /// `x ∈ ∪K_j ∖ ∪(K_j ∖ K_j^λ)`.
    pub fn in_k_prime(&self, x: &[f64]) -> bool {
        let tol = 1e-12;
        let mut inside = false;
        for u in self.cube_coords(x) {
            let m = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if m <= 1.0 + tol {
                inside = true;
                if m > self.lambda + tol {
                    return false;
                }
            }
        }
        inside
    }

    pub fn covers(&self, x: &[f64], tol: f64) -> bool {
        self.pieces.iter().any(|p| pp_contains(p, x, tol))
    }
}

/// Outcome of [`validate_covering`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub samples: usize,
    pub uncovered_fraction: f64,
    pub trifling_fraction: f64,
    /// `1 − λ^d`, the single-piece reference value.
    pub trifling_reference: f64,
}

/// Checks that every piece lies in `K` (by its vertices) and that sampled
/// points of `K` are covered.
pub fn validate_covering(k: &Domain, pieces: &[Parallelepiped], lambda: f64, samples: usize) -> Result<(Covering, CoveringReport)> {
    if samples < 10_000 {
        return Err(Error::Invalid(format!("covering validation needs at least 10^4 samples, got {samples}")));
    }
    k.validate()?;
    let mut cov = Covering::new(pieces.to_vec(), lambda)?;
    if cov.dim() != k.dim() {
        return Err(Error::Dimension("covering and domain dimensions differ".into()));
    }
    for (j, p) in cov.pieces.iter().enumerate() {
        if let Some(v) = p.vertices().into_iter().find(|v| !k.contains(v)) {
            return Err(Error::Geometry(format!("vertex {v:?} of piece {j} lies outside the domain")));
        }
    }
    let pts = k.sample_interior(samples, 0);
    let flags: Vec<(bool, bool)> = pts.par_iter().map(|x| (cov.covers(x, 1e-10), cov.in_k_prime(x))).collect();
    let uncovered = flags.iter().filter(|f| !f.0).count();
    if uncovered > 0 {
        return Err(Error::Geometry(format!("{uncovered} of {} domain samples are not covered", pts.len())));
    }
    let trifling = flags.iter().filter(|f| !f.1).count();
    let n = pts.len().max(1) as f64;
    cov.validated = true;
    let report = CoveringReport {
        samples: pts.len(),
        uncovered_fraction: 0.0,
        trifling_fraction: trifling as f64 / n,
        trifling_reference: 1.0 - lambda.powi(k.dim() as i32),
    };
    Ok((cov, report))
}

/// Covering of a union of axis-aligned boxes by the boxes themselves.
pub fn auto_cover_box_union(boxes: &[(Vec<f64>, Vec<f64>)], lambda: f64) -> Result<Covering> {
    if boxes.is_empty() {
        return Err(Error::Invalid("empty box list".into()));
    }
    let pieces = boxes.iter().map(|(lo, hi)| Parallelepiped::from_box(lo, hi)).collect::<Result<Vec<_>>>()?;
    Covering::new(pieces, lambda)
}

/// `√(‖x−a‖·‖x−b‖)` for the chord endpoints `a`, `b` of `K` through `x` along `e`.
pub fn dt_distance(k: &Polytope, e: &[f64], x: &[f64]) -> Result<f64> {
    if !k.contains(x) {
        return Err(Error::Geometry(format!("point {x:?} lies outside the polytope")));
    }
    let (lo, hi) = k.chord(x, e);
    let ne = norm(e);
    Ok(((-lo).max(0.0) * ne * hi.max(0.0) * ne).sqrt())
}

fn push_unique_direction(dirs: &mut Vec<Vec<f64>>, v: &[f64]) {
    let n = norm(v);
    if n == 0.0 {
        return;
    }
    let mut u: Vec<f64> = v.iter().map(|x| x / n).collect();
    // Canonical sign: first significant component positive.
    if let Some(&first) = u.iter().find(|c| c.abs() > 1e-12) {
        if first < 0.0 {
            u.iter_mut().for_each(|c| *c = -*c);
        }
    }
    if !dirs.iter().any(|w| w.iter().zip(&u).all(|(a, b)| (a - b).abs() < 1e-9)) {
        dirs.push(u);
    }
}

/// Unit edge directions of `K`, `e` and `−e` identified.
pub fn edge_directions(k: &Polytope) -> Result<Vec<Vec<f64>>> {
    let d = k.dim();
    let mut dirs = Vec::new();
    if let Some(edges) = &k.edges {
        for e in edges {
            push_unique_direction(&mut dirs, e);
        }
        return Ok(dirs);
    }
    if d > 3 {
        return Err(Error::Invalid(format!("edge directions must be supplied in dimension {d}")));
    }
    let tol = k.tolerance();
    let tight: Vec<Vec<usize>> = k
        .vertices
        .iter()
        .map(|v| {
            k.halfspaces
                .iter()
                .enumerate()
                .filter(|(_, h)| (dot(&h.normal, v) - h.offset).abs() <= tol * norm(&h.normal))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    for i in 0..k.vertices.len() {
        for j in i + 1..k.vertices.len() {
            let shared = tight[i].iter().filter(|f| tight[j].contains(f)).count();
            if shared + 1 >= d {
                push_unique_direction(&mut dirs, &axpy(&k.vertices[j], -1.0, &k.vertices[i]));
            }
        }
    }
    Ok(dirs)
}

/// Sampling plan for modulus estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusConfig {
    /// Quasi-random base points of `K`.
    pub n_x: usize,
    /// Step sizes per octave in the global grid `h = 2^{−j/levels}`.
    pub levels_per_octave: usize,
    /// Octaves covered by the step grid.
    pub octaves: usize,
    /// Dyadic contractions of base points toward vertices and chord ends.
    pub refine_depth: usize,
    pub seed: u64,
}

impl Default for ModulusConfig {
    fn default() -> Self {
        ModulusConfig { n_x: 1000, levels_per_octave: 4, octaves: 16, refine_depth: 35, seed: 0 }
    }
}

/// Precomputed point cloud, directions and step grid for one polytope.
///
/// Estimates are running maxima over a fixed step grid, so they are
/// nondecreasing in `t` by construction.
pub struct ModulusEstimator<'a> {
    k: &'a Polytope,
    dirs: Vec<Vec<f64>>,
    points: Vec<Vec<f64>>,
    steps: Vec<f64>,
}

impl<'a> ModulusEstimator<'a> {
    /// `extra_steps` are merged into the step grid so that every requested
    /// `t` is itself a step.
    pub fn new(k: &'a Polytope, cfg: &ModulusConfig, extra_steps: &[f64]) -> Result<Self> {
        let dirs = edge_directions(k)?;
        let domain = Domain::Convex(k.clone());
        let base = domain.sample_interior(cfg.n_x, cfg.seed);
        let mut points = base.clone();
        points.extend(k.vertices.iter().cloned());
        for v in &k.vertices {
            for m in 1..=cfg.refine_depth {
                let s = 0.5f64.powi(m as i32);
                points.extend(base.iter().map(|p| axpy(v, s, &axpy(p, -1.0, v))));
            }
        }
        for e in &dirs {
            for sign in [1.0, -1.0] {
                let se: Vec<f64> = e.iter().map(|c| sign * c).collect();
                for p in &base {
                    let (_, hi) = k.chord(p, &se);
                    if !hi.is_finite() {
                        continue;
                    }
                    let b = axpy(p, hi, &se);
                    for m in 1..=cfg.refine_depth {
                        let s = 0.5f64.powi(m as i32);
                        points.push(axpy(&b, s, &axpy(p, -1.0, &b)));
                    }
                }
            }
        }
        let lv = cfg.levels_per_octave.max(1);
        let mut steps: Vec<f64> = (0..=cfg.octaves * lv).map(|j| 2f64.powf(-(j as f64) / lv as f64)).collect();
        steps.extend(extra_steps.iter().filter(|t| **t > 0.0));
        steps.sort_by(|a, b| b.total_cmp(a));
        steps.dedup();
        Ok(ModulusEstimator { k, dirs, points, steps })
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.dirs
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    /// Sup of `|f(x + s e) − f(x − s e)|`, `s = h·d̃(x)/2`, for each grid step `h`.
    pub fn dt_profile(&self, f: &TargetFn) -> Vec<f64> {
        let slack = 1e-15 * self.k.diameter();
        // Chord half-lengths (a, b) per direction and point.
        let chords: Vec<Vec<(f64, f64)>> = self
            .dirs
            .iter()
            .map(|e| {
                self.points
                    .par_iter()
                    .map(|x| {
                        let (lo, hi) = self.k.chord(x, e);
                        ((-lo).max(0.0), hi.max(0.0))
                    })
                    .collect()
            })
            .collect();
        self.steps
            .par_iter()
            .map(|&h| {
                let mut best = 0.0f64;
                let (mut p, mut q) = (vec![0.0; self.k.dim()], vec![0.0; self.k.dim()]);
                for (e, ch) in self.dirs.iter().zip(&chords) {
                    for (x, &(a, b)) in self.points.iter().zip(ch) {
                        let s = h * (a * b).sqrt() / 2.0;
                        if s > a + slack || s > b + slack {
                            continue;
                        }
                        for i in 0..x.len() {
                            p[i] = x[i] + s * e[i];
                            q[i] = x[i] - s * e[i];
                        }
                        let v = (f.eval(&p) - f.eval(&q)).abs();
                        if v.is_finite() {
                            best = best.max(v);
                        }
                    }
                }
                best
            })
            .collect()
    }

    /// Sup of `|f(x + h u) − f(x)|` over edge and coordinate directions `±u`.
    pub fn ordinary_profile(&self, f: &TargetFn) -> Vec<f64> {
        let d = self.k.dim();
        let mut dirs = self.dirs.clone();
        for i in 0..d {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            push_unique_direction(&mut dirs, &e);
        }
        let fx: Vec<f64> = self.points.par_iter().map(|x| f.eval(x)).collect();
        self.steps
            .par_iter()
            .map(|&h| {
                let mut best = 0.0f64;
                let mut y = vec![0.0; d];
                for e in &dirs {
                    for sign in [1.0, -1.0] {
                        for (x, v0) in self.points.iter().zip(&fx) {
                            for i in 0..d {
                                y[i] = x[i] + sign * h * e[i];
                            }
                            if !self.k.contains(&y) {
                                continue;
                            }
                            let v = (f.eval(&y) - v0).abs();
                            if v.is_finite() {
                                best = best.max(v);
                            }
                        }
                    }
                }
                best
            })
            .collect()
    }

    /// Running maximum of `profile` over grid steps `h ≤ t`.
    pub fn at(&self, profile: &[f64], t: f64) -> f64 {
        self.steps.iter().zip(profile).filter(|(h, _)| **h <= t).map(|(_, v)| *v).fold(0.0, f64::max)
    }
}

/// One row of a modulus ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusRow {
    pub t: f64,
    pub ordinary: f64,
    pub dt: f64,
}

/// Both moduli on a ladder of `t` values.
pub fn modulus_ladder(f: &TargetFn, k: &Polytope, ts: &[f64], cfg: &ModulusConfig) -> Result<Vec<ModulusRow>> {
    let est = ModulusEstimator::new(k, cfg, ts)?;
    let dt = est.dt_profile(f);
    let ord = est.ordinary_profile(f);
    Ok(ts.iter().map(|&t| ModulusRow { t, ordinary: est.at(&ord, t), dt: est.at(&dt, t) }).collect())
}

/// Empirical Ditzian–Totik modulus with `n_x` base points and `n_h` steps per octave.
pub fn dt_modulus_estimate(f: &TargetFn, k: &Polytope, t: f64, n_x: usize, n_h: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Invalid("modulus step must be positive".into()));
    }
    let cfg = ModulusConfig { n_x, levels_per_octave: n_h, octaves: octaves_for(t), ..ModulusConfig::default() };
    let est = ModulusEstimator::new(k, &cfg, &[t])?;
    Ok(est.at(&est.dt_profile(f), t))
}

/// Empirical ordinary modulus from `n_pairs` base points.
pub fn ordinary_modulus_estimate(f: &TargetFn, k: &Polytope, t: f64, n_pairs: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Invalid("modulus step must be positive".into()));
    }
    let cfg = ModulusConfig { n_x: n_pairs, octaves: octaves_for(t), ..ModulusConfig::default() };
    let est = ModulusEstimator::new(k, &cfg, &[t])?;
    Ok(est.at(&est.ordinary_profile(f), t))
}

fn octaves_for(t: f64) -> usize {
    ((-t.log2()).ceil().max(0.0) as usize + 8).min(60)
}
