//! Deterministic low-discrepancy points (the additive `R_d` recurrence).

/// `R_d` sequence: point `k` is `frac(0.5 + (k + offset)·α)` with
/// `α_i = φ_d^{-(i+1)}` and `φ_d` the positive root of `x^{d+1} = x + 1`.
#[derive(Debug, Clone)]
pub struct RdSequence {
    alpha: Vec<f64>,
    offset: u64,
}

fn generalized_golden_ratio(d: usize) -> f64 {
    let mut x = 2.0f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (d as f64 + 1.0));
    }
    x
}

impl RdSequence {
    pub fn new(dim: usize, seed: u64) -> Self {
        let g = generalized_golden_ratio(dim);
        let alpha = (1..=dim).map(|i| g.powi(-(i as i32))).collect();
        RdSequence { alpha, offset: seed }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// Point `k` in `[0,1)^d`; a pure function of `(seed, k)`.
    pub fn point(&self, k: u64) -> Vec<f64> {
        let idx = (k + self.offset) as f64 + 1.0;
        self.alpha.iter().map(|a| (0.5 + idx * a).fract()).collect()
    }

    /// Point `k` mapped affinely into the box `[lo, hi]`.
    pub fn point_in_box(&self, k: u64, lo: &[f64], hi: &[f64]) -> Vec<f64> {
        self.point(k).iter().zip(lo.iter().zip(hi)).map(|(u, (l, h))| l + u * (h - l)).collect()
    }
}

/// Uniform grid of `m` points on `[a, b]` including both ends.
pub fn linspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    match m {
        0 => vec![],
        1 => vec![0.5 * (a + b)],
        _ => (0..m).map(|i| a + (b - a) * i as f64 / (m - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_ratios() {
        assert!((generalized_golden_ratio(1) - 1.618_033_988_749_895).abs() < 1e-14);
        assert!((generalized_golden_ratio(2) - 1.324_717_957_244_746).abs() < 1e-14);
    }

    #[test]
    fn points_are_deterministic_and_in_unit_cube() {
        let s = RdSequence::new(3, 7);
        assert_eq!(s.point(11), RdSequence::new(3, 7).point(11));
        for k in 0..1000 {
            assert!(s.point(k).iter().all(|u| (0.0..1.0).contains(u)));
        }
    }

    #[test]
    fn one_dimensional_points_fill_the_interval() {
        let s = RdSequence::new(1, 0);
        let mut pts: Vec<f64> = (0..1000).map(|k| s.point(k)[0]).collect();
        pts.sort_by(f64::total_cmp);
        let gap = pts.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        assert!(gap < 3e-3);
    }
}
