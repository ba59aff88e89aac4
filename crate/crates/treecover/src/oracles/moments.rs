//! Exact first and second moments of the local-time field at root clock `t`.
//!
//! Every pair covariance is `Cov(L(x), L(y)) = 2 |x∧y| t`, so level and
//! tree sums reduce to counting ordered pairs by the depth of their meet.

use serde::Serialize;

use crate::tree::{TreeKind, TreeShape};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactMoments {
    pub es: f64,
    pub var_s: f64,
    pub er: f64,
    pub var_r: f64,
    /// `Var Ŝ`
    pub var_s_hat: f64,
}

pub fn cov_local_times(meet_depth: u32, t: f64) -> f64 {
    2.0 * meet_depth as f64 * t
}

/// Vertices at depth `d` under a fixed vertex at depth `k`.
fn below(kind: TreeKind, k: u32, d: u32) -> f64 {
    if kind == TreeKind::UnaryRoot && k == 0 {
        kind.width(d) as f64
    } else {
        2f64.powi((d - k) as i32)
    }
}

/// Ordered pairs `(x, y)` with `|x| = dx`, `|y| = dy` whose meet sits at
/// depth exactly `k`, summed over all meet vertices at that depth.
fn pairs_meeting_at(kind: TreeKind, k: u32, dx: u32, dy: u32) -> f64 {
    let inside = below(kind, k, dx) * below(kind, k, dy);
    let split = if dx > k && dy > k {
        let children = if kind == TreeKind::UnaryRoot && k == 0 { 1.0 } else { 2.0 };
        children * below(kind, k + 1, dx) * below(kind, k + 1, dy)
    } else {
        0.0
    };
    kind.width(k) as f64 * (inside - split)
}

pub fn exact_moments(shape: TreeShape, t: f64) -> ExactMoments {
    let (kind, n) = (shape.kind, shape.n);
    let mut var_s = 0.0;
    for k in 0..=n {
        var_s += cov_local_times(k, t) * pairs_meeting_at(kind, k, n, n);
    }
    let mut var_r = 0.0;
    for dx in 0..=n {
        for dy in 0..=n {
            for k in 0..=dx.min(dy) {
                var_r += cov_local_times(k, t) * pairs_meeting_at(kind, k, dx, dy);
            }
        }
    }
    let leaves = shape.leaf_count() as f64;
    ExactMoments {
        es: leaves * t,
        var_s,
        er: shape.vertex_count() as f64 * t,
        var_r,
        var_s_hat: var_s / (leaves * leaves),
    }
}

/// `Cov(L(x) - Ŝ, L(y) - Ŝ)` on the leaves of `T_n`.
pub fn centered_leaf_cov(n: u32, meet_depth: u32, t: f64) -> f64 {
    2.0 * t * (meet_depth as f64 - 1.0 + 0.5f64.powi(n as i32))
}

/// `Cov(L(x) - Ŝ, Ŝ)` on the leaves of `T_n`; zero by symmetry.
pub fn centered_leaf_cross(n: u32, t: f64) -> f64 {
    let m = exact_moments(TreeShape { kind: TreeKind::Regular, n }, t);
    m.var_s / 2f64.powi(2 * n as i32) - m.var_s_hat
}
