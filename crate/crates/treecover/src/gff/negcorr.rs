//! Two copies of the DGFF on the regular tree with negative cross
//! correlation, built from i.i.d. antisymmetric fields `σ_m`.
//!
//! Copy `i` is identified with the subtree of child `i` of an auxiliary
//! regular tree, so a generation-`j` edge of copy `i` ends at a depth-`j+1`
//! vertex of that tree. Its weight is `2^{-(j+1)/2}` times the `σ_{j+1}`
//! path sum to that vertex.

use rand_distr::{Distribution, StandardNormal};

use super::GaussianField;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tree::{TreeKind, TreeShape, VertexRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CopyVertex {
    /// 0 or 1
    pub copy: u8,
    pub v: VertexRef,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegCorrField {
    pub n: u32,
    pub copies: [GaussianField; 2],
    /// `sigma_paths[m - 2]` holds the `σ_m` path sums over depth `m`,
    /// for `m = 2..=n+1`
    pub sigma_paths: Vec<Vec<f64>>,
}

impl NegCorrField {
    pub fn get(&self, x: &CopyVertex) -> f64 {
        self.copies[x.copy as usize].get(&x.v)
    }
}

/// Variance of a generation-`k` edge of `σ`.
fn sigma_edge_variance(k: u32) -> f64 {
    2f64.powi(k.saturating_sub(2) as i32)
}

fn sigma_path_sums(m: u32, rng: &mut Rng) -> Vec<f64> {
    let mut level = vec![0.0];
    for d in 1..=m {
        let sd = sigma_edge_variance(d).sqrt();
        let mut next = Vec::with_capacity(level.len() * 2);
        for &p in &level {
            let z: f64 = StandardNormal.sample(rng);
            next.push(p + sd * z);
            next.push(p - sd * z);
        }
        level = next;
    }
    level
}

pub fn sample_negcorr(n: u32, rng: &mut Rng) -> Result<NegCorrField> {
    let shape = TreeShape::regular(n)?;
    let sigma_paths: Vec<Vec<f64>> = (2..=n + 1).map(|m| sigma_path_sums(m, rng)).collect();
    let mut copies = [GaussianField::zero(shape), GaussianField::zero(shape)];
    for (i, copy) in copies.iter_mut().enumerate() {
        for j in 1..=n {
            let m = j + 1;
            let scale = 2f64.powf(-(m as f64) / 2.0);
            let paths = &sigma_paths[(m - 2) as usize];
            let off = shape.offset(j);
            let prev = shape.offset(j - 1);
            let w = shape.width(j) as usize;
            for v in 0..w {
                let omega = scale * paths[(i << j) + v];
                copy.values[off + v] = copy.values[prev + (v >> 1)] + omega;
            }
        }
    }
    Ok(NegCorrField {
        n,
        copies,
        sigma_paths,
    })
}

/// `E h(a) h(b)`.
pub fn negcorr_covariance_oracle(a: &CopyVertex, b: &CopyVertex) -> Result<f64> {
    if a.v.kind != TreeKind::Regular || b.v.kind != TreeKind::Regular {
        return Err(Error::Argument("two-tree field lives on regular trees".into()));
    }
    if a.copy == b.copy {
        Ok(a.v.meet_depth(&b.v) as f64 / 2.0)
    } else {
        let d = a.v.depth.min(b.v.depth);
        Ok(-0.5 * (1.0 - 0.5f64.powi(d as i32)))
    }
}

/// Target covariance of the edge weights `ω`; an edge is named by its
/// lower endpoint.
pub fn omega_covariance_oracle(e: &CopyVertex, f: &CopyVertex) -> f64 {
    if e == f {
        0.5
    } else if e.copy != f.copy && e.v.depth == f.v.depth {
        -0.5f64.powi(e.v.depth as i32 + 1)
    } else {
        0.0
    }
}

/// All edges of both copies of `T_n`, copy-major, breadth-first.
pub fn omega_edges(n: u32) -> Result<Vec<CopyVertex>> {
    let shape = TreeShape::regular(n)?;
    let mut out = Vec::new();
    for copy in 0..2u8 {
        for f in 1..shape.vertex_count() {
            out.push(CopyVertex {
                copy,
                v: shape.from_flat(f),
            });
        }
    }
    Ok(out)
}

/// Covariance of `ω` implied by the construction, accumulated over the
/// independent sign-paired normals without sampling. Row-major over
/// [`omega_edges`].
pub fn omega_covariance_by_accumulation(n: u32) -> Result<Vec<f64>> {
    let edges = omega_edges(n)?;
    let size = edges.len();
    let mut cov = vec![0.0; size * size];
    for (a, e) in edges.iter().enumerate() {
        for (b, f) in edges.iter().enumerate() {
            if e.v.depth != f.v.depth {
                continue;
            }
            let m = e.v.depth + 1;
            let x = ((e.copy as u64) << e.v.depth) | e.v.index;
            let y = ((f.copy as u64) << f.v.depth) | f.v.index;
            let mut c = 0.0;
            for d in 1..=m {
                // the normal attached to the depth d-1 ancestor enters both
                // sums only if that ancestor is shared
                if x >> (m - d + 1) != y >> (m - d + 1) {
                    break;
                }
                let sx = if (x >> (m - d)) & 1 == 0 { 1.0 } else { -1.0 };
                let sy = if (y >> (m - d)) & 1 == 0 { 1.0 } else { -1.0 };
                c += sx * sy * sigma_edge_variance(d);
            }
            cov[a * size + b] = c * 0.5f64.powi(m as i32);
        }
    }
    Ok(cov)
}
