//! Local-time fields sampled generation by generation.
//!
//! While a vertex accrues local time `l`, excursions into each child arrive
//! as a rate-1 Poisson process and each contributes Exp(1) at the child. So
//! given `L(parent) = l`, the children are independent compound Poisson
//! sums `Gamma(Poisson(l), 1)`. At root clock `t` the root carries `t`.

use rand_distr::{Distribution, Gamma, Poisson};

use super::{LocalTimeField, Tracking};
use crate::error::{Error, Result};
use crate::rng::{exp1, Rng};
use crate::tree::TreeShape;

/// Local time accrued at a child while its parent accrues `l`.
#[inline]
pub fn child_local_time(l: f64, rng: &mut Rng) -> f64 {
    if l <= 0.0 {
        return 0.0;
    }
    let k: f64 = Poisson::new(l).expect("positive rate").sample(rng);
    match k as u64 {
        0 => 0.0,
        1 => exp1(rng),
        k => Gamma::new(k as f64, 1.0).expect("positive shape").sample(rng),
    }
}

/// The field at root clock `t`.
pub fn sample_field(shape: TreeShape, t: f64, rng: &mut Rng) -> Result<LocalTimeField> {
    if !(t >= 0.0) {
        return Err(Error::Argument(format!("root clock {t}")));
    }
    let mut values = vec![0.0; shape.vertex_count()];
    values[0] = t;
    fill_below(&mut values, shape, 0, rng);
    let real_elapsed = values.iter().sum();
    Ok(LocalTimeField {
        shape,
        values,
        real_elapsed,
        root_local: t,
        tracking: Tracking::All,
    })
}

/// Lift a fully tracked field on `T_k` to `shape` (depth `n >= k`) by
/// sampling the generations below `k`.
pub fn extend(field: &LocalTimeField, shape: TreeShape, rng: &mut Rng) -> Result<LocalTimeField> {
    let k = field.shape.n;
    if field.shape.kind != shape.kind || shape.n < k {
        return Err(Error::Argument("extension to a smaller or different tree".into()));
    }
    if !field.depth_tracked(k) {
        return Err(Error::State("depth-k local times not tracked".into()));
    }
    let mut values = vec![0.0; shape.vertex_count()];
    values[..field.values.len()].copy_from_slice(&field.values);
    fill_below(&mut values, shape, k, rng);
    let below: f64 = values[shape.offset(k + 1).min(values.len())..].iter().sum();
    Ok(LocalTimeField {
        shape,
        values,
        real_elapsed: field.real_elapsed + below,
        root_local: field.root_local,
        tracking: field.tracking,
    })
}

fn fill_below(values: &mut [f64], shape: TreeShape, from: u32, rng: &mut Rng) {
    for d in from..shape.n {
        let off = shape.offset(d);
        let child_off = shape.offset(d + 1);
        if d == 0 && shape.kind == crate::tree::TreeKind::UnaryRoot {
            values[child_off] = child_local_time(values[0], rng);
            continue;
        }
        for i in 0..shape.width(d) as usize {
            let l = values[off + i];
            values[child_off + 2 * i] = child_local_time(l, rng);
            values[child_off + 2 * i + 1] = child_local_time(l, rng);
        }
    }
}

/// Leaf local times at root clock `t` for the given leaf indices only,
/// sampling just the union of their root paths. Output follows the input
/// order; repeated indices get the same value.
pub fn sample_paths(shape: TreeShape, t: f64, leaves: &[u64], rng: &mut Rng) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::Argument(format!("root clock {t}")));
    }
    let width = shape.leaf_count() as u64;
    if let Some(&bad) = leaves.iter().find(|&&i| i >= width) {
        return Err(Error::Range(format!("leaf index {bad} >= {width}")));
    }
    let mut order: Vec<u64> = leaves.to_vec();
    order.sort_unstable();
    order.dedup();
    // (index at current depth, local time) for every vertex on some path
    let mut level: Vec<(u64, f64)> = vec![(0, t)];
    for d in 1..=shape.n {
        let shift = shape.n - d;
        let mut next: Vec<(u64, f64)> = Vec::with_capacity(level.len() * 2);
        let mut j = 0;
        for &(p, l) in &level {
            let fan = if d == 1 && shape.kind == crate::tree::TreeKind::UnaryRoot { 1 } else { 2 };
            for c in 0..fan {
                let idx = p * fan + c;
                // skip children with no requested leaf below
                while j < order.len() && order[j] >> shift < idx {
                    j += 1;
                }
                if j < order.len() && order[j] >> shift == idx {
                    next.push((idx, child_local_time(l, rng)));
                }
            }
        }
        level = next;
    }
    Ok(leaves
        .iter()
        .map(|i| level[order.binary_search(i).expect("present")].1)
        .collect())
}
