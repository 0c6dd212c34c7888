//! Random network strategies shared by the property and acceptance suites.

#![allow(dead_code)]

use kpmnet::netir::{Layer, SparseMatrix};
use kpmnet::ReluNetwork;
use proptest::prelude::*;

/// Layer plan: (width, activated, intra links).
type Plan = Vec<(usize, bool, bool)>;

fn take(w: &[f64], i: &mut usize) -> f64 {
    let v = w[*i % w.len()];
    *i += 1;
    // Roughly a fifth of the weights are structural zeros.
    if v.abs() < 0.4 {
        0.0
    } else {
        v
    }
}

fn build(input_dim: usize, output_dim: usize, plan: &Plan, w: &[f64]) -> ReluNetwork {
    let mut i = 0;
    let mut dim = input_dim;
    let mut layers = vec![];
    let dense = |rows: usize, cols: usize, i: &mut usize| {
        SparseMatrix::from_rows(cols, (0..rows).map(|_| (0..cols).map(|c| (c, take(w, i))).filter(|e| e.1 != 0.0).collect()).collect())
    };
    for &(width, activated, intra) in plan {
        let m = dense(width, dim, &mut i);
        let b: Vec<f64> = (0..width).map(|_| take(w, &mut i) * 0.5).collect();
        if activated {
            let links = intra.then(|| {
                let rows = (0..width).map(|r| (0..r).map(|c| (c, take(w, &mut i) * 0.5)).filter(|e| e.1 != 0.0).collect()).collect();
                SparseMatrix::from_rows(width, rows)
            });
            layers.push(Layer::relu(m, b, links));
        } else {
            layers.push(Layer::linear(m, b));
        }
        dim = width;
    }
    let m = dense(output_dim, dim, &mut i);
    let b = (0..output_dim).map(|_| take(w, &mut i)).collect();
    layers.push(Layer::linear(m, b));
    ReluNetwork::new(input_dim, layers).expect("generated network is consistent")
}

/// Networks with the given input and output dimensions, up to 4 hidden layers
/// of width ≤ 5, mixing linear, plain and intra-linked layers.
pub fn arb_net(input_dim: usize, output_dim: usize) -> impl Strategy<Value = ReluNetwork> {
    let plan = prop::collection::vec((1usize..=5, prop::bool::weighted(0.75), any::<bool>()), 0..=4);
    let weights = prop::collection::vec(-2.0f64..2.0, 64);
    (plan, weights).prop_map(move |(p, w)| build(input_dim, output_dim, &p, &w))
}

pub fn arb_point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, dim)
}

/// `(outer, inner, x)` with matching interface dimension.
pub fn arb_compose_case() -> impl Strategy<Value = (ReluNetwork, ReluNetwork, Vec<f64>)> {
    (1usize..=3, 1usize..=3, 1usize..=3)
        .prop_flat_map(|(a, m, b)| (arb_net(m, b), arb_net(a, m), arb_point(a)))
}

/// Two to four networks on a shared input, plus a point.
pub fn arb_stack_case() -> impl Strategy<Value = (Vec<ReluNetwork>, Vec<f64>)> {
    (1usize..=3).prop_flat_map(|a| (prop::collection::vec((1usize..=3).prop_flat_map(move |o| arb_net(a, o)), 2..=4), arb_point(a)))
}

/// Value equality that identifies `+0.0` and `−0.0`.
pub fn same(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y)
}
