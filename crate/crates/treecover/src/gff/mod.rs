//! DGFF / branching random walk samplers and their martingales.

pub mod negcorr;

pub use negcorr::{
    negcorr_covariance_oracle, omega_covariance_by_accumulation, omega_covariance_oracle,
    sample_negcorr, CopyVertex, NegCorrField,
};

use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::stats::centering::sqrt_log2;
use crate::tree::{TreeKind, TreeShape, VertexRef};

pub const EDGE_VARIANCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianField {
    pub shape: TreeShape,
    /// heap order, same layout as [`crate::walk::LocalTimeField`]
    pub values: Vec<f64>,
}

impl GaussianField {
    pub fn zero(shape: TreeShape) -> Self {
        GaussianField {
            shape,
            values: vec![0.0; shape.vertex_count()],
        }
    }

    pub fn get(&self, v: &VertexRef) -> f64 {
        self.values[v.flat()]
    }

    pub fn level(&self, depth: u32) -> &[f64] {
        let off = self.shape.offset(depth);
        &self.values[off..off + self.shape.width(depth) as usize]
    }

    pub fn leaves(&self) -> &[f64] {
        self.level(self.shape.n)
    }
}

#[inline]
pub(crate) fn half_normal_step(rng: &mut Rng) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z * EDGE_VARIANCE.sqrt()
}

/// Edges are drawn in breadth-first order, so the depth-`K` field is a
/// prefix of the depth-`K + 1` field drawn from the same stream.
pub fn sample_dgff(shape: TreeShape, rng: &mut Rng) -> GaussianField {
    let mut values = vec![0.0; shape.vertex_count()];
    for f in 1..values.len() {
        let p = shape.from_flat(f).parent().expect("non-root").flat();
        values[f] = values[p] + half_normal_step(rng);
    }
    GaussianField { shape, values }
}

/// Leaf values only, generated level by level with the same stream usage
/// as [`sample_dgff`].
pub fn sample_dgff_leaves(shape: TreeShape, rng: &mut Rng) -> Vec<f64> {
    let mut level = vec![0.0];
    for d in 1..=shape.n {
        let w = shape.width(d) as usize;
        let mut next = Vec::with_capacity(w);
        let fan = if shape.kind == TreeKind::UnaryRoot && d == 1 { 1 } else { 2 };
        for &p in &level {
            for _ in 0..fan {
                next.push(p + half_normal_step(rng));
            }
        }
        level = next;
    }
    level
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MartingaleVariant {
    /// derivative martingale on the regular tree
    Z,
    /// derivative martingale on the unary-root tree
    ZBar,
    /// critical exponential martingale, tree taken from the field
    Exponential,
}

fn log_prefactor(kind: TreeKind, n: u32) -> f64 {
    let base = -2.0 * n as f64 * std::f64::consts::LN_2;
    match kind {
        TreeKind::Regular => base,
        TreeKind::UnaryRoot => base + std::f64::consts::LN_2,
    }
}

/// Martingale value from the depth-`n` values of a field on `kind`.
pub fn martingale_from_level(kind: TreeKind, n: u32, level: &[f64], variant: MartingaleVariant) -> Result<f64> {
    match (variant, kind) {
        (MartingaleVariant::Z, TreeKind::UnaryRoot) | (MartingaleVariant::ZBar, TreeKind::Regular) => {
            return Err(Error::Argument(format!("{variant:?} on a {kind:?} tree")));
        }
        _ => {}
    }
    if level.is_empty() {
        return Err(Error::Argument("empty level".into()));
    }
    let c = 2.0 * sqrt_log2();
    let a = sqrt_log2() * n as f64;
    let top = level.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for &h in level {
        let w = (c * (h - top)).exp();
        sum += match variant {
            MartingaleVariant::Exponential => w,
            _ => (a - h) * w,
        };
    }
    Ok(sum * (log_prefactor(kind, n) + c * top).exp())
}

pub fn derivative_martingale(field: &GaussianField, n: u32, variant: MartingaleVariant) -> Result<f64> {
    if n > field.shape.n {
        return Err(Error::State(format!(
            "martingale at depth {n} from a field of depth {}",
            field.shape.n
        )));
    }
    martingale_from_level(field.shape.kind, n, field.level(n), variant)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleSeries {
    pub variant: MartingaleVariant,
    pub values: Vec<(u32, f64)>,
}

/// `Z_n` for every `n` in `depths`, all from the same realization.
pub fn martingale_series(field: &GaussianField, depths: &[u32], variant: MartingaleVariant) -> Result<MartingaleSeries> {
    let values = depths
        .iter()
        .map(|&n| derivative_martingale(field, n, variant).map(|z| (n, z)))
        .collect::<Result<_>>()?;
    Ok(MartingaleSeries { variant, values })
}

/// `Λ = exp(-2 log 2 + G)` with `G ~ N(0, 2 log 2)`.
pub fn sample_lambda(rng: &mut Rng) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    LogNormal::new(-2.0 * ln2, (2.0 * ln2).sqrt())
        .expect("valid parameters")
        .sample(rng)
}

/// Monte Carlo average of `exp(-C Z e^{-rate s})`.
pub fn gumbel_mixture_cdf(s: f64, rate: f64, c: f64, z_samples: &[f64]) -> Result<f64> {
    if z_samples.is_empty() {
        return Err(Error::Argument("no Z samples".into()));
    }
    if !(rate > 0.0) || !(c > 0.0) {
        return Err(Error::Argument(format!("rate {rate}, C {c}")));
    }
    let scale = c * (-rate * s).exp();
    let total: f64 = z_samples.iter().map(|z| (-scale * z).exp()).sum();
    Ok(total / z_samples.len() as f64)
}

#[cfg(test)]
mod tests;
