//! Deterministic low-discrepancy sampling.
//!
//! Points come from the additive recurrence `u_i = frac(1/2 + i·α)` with
//! `α_j = φ_d^{-j}`, `φ_d` the positive root of `x^{d+1} = x + 1` (the
//! "R_d" sequence). Simplex samples are obtained from cube samples by the
//! sorted-spacings map, so the whole pipeline has no random state.

/// The generalized golden ratio for dimension `d`.
fn phi(d: usize) -> f64 {
    let mut x: f64 = 2.0;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (d as f64 + 1.0));
    }
    x
}

#[derive(Clone, Debug)]
pub struct LowDiscrepancy {
    alpha: Vec<f64>,
    next: u64,
}

impl LowDiscrepancy {
    /// Sequence in `[0,1)^dim` starting at index `offset` (the CLI seed).
    pub fn new(dim: usize, offset: u64) -> Self {
        let g = phi(dim);
        let alpha = (1..=dim).map(|j| g.powi(-(j as i32)).fract()).collect();
        LowDiscrepancy { alpha, next: offset }
    }

    pub fn point(&self, index: u64) -> Vec<f64> {
        self.alpha
            .iter()
            .map(|a| (0.5 + (index as f64) * a).fract())
            .collect()
    }

    pub fn take_points(&mut self, count: usize) -> Vec<Vec<f64>> {
        let pts = (0..count as u64).map(|i| self.point(self.next + i)).collect();
        self.next += count as u64;
        pts
    }
}

/// Barycentric weights (length `n + 1`) of a cube point `u ∈ [0,1)^n`;
/// uniform cube points map to uniform simplex points.
pub fn cube_to_barycentric(u: &[f64]) -> Vec<f64> {
    let mut s = u.to_vec();
    s.sort_by(f64::total_cmp);
    let mut w = Vec::with_capacity(u.len() + 1);
    let mut prev = 0.0;
    for x in s {
        w.push(x - prev);
        prev = x;
    }
    w.push(1.0 - prev);
    w
}

/// `Σ_i w_i v_i`.
pub fn combine(weights: &[f64], vertices: &[Vec<f64>]) -> Vec<f64> {
    let dim = vertices[0].len();
    let mut p = vec![0.0; dim];
    for (w, v) in weights.iter().zip(vertices) {
        for (pi, vi) in p.iter_mut().zip(v) {
            *pi += w * vi;
        }
    }
    p
}
