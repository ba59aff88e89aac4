//! Low-local-time leaf sets: `r_n`-cluster decompositions and the
//! trajectory classifiers built on bands around `√log2 (n - k)`.

pub mod classify;

pub use classify::{
    band, classify_gaussian, classify_trajectories, ClassParams, LeafClass, TrajectoryClass,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tree::{TreeShape, VertexRef};
use crate::walk::LocalTimeField;

/// `⌊n^{1/2 - η}⌋`, at least 1.
pub fn r_n_of(n: u32, eta: f64) -> Result<u32> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::Argument(format!("eta = {eta} outside (0, 1/2)")));
    }
    Ok(((n as f64).powf(0.5 - eta).floor() as u32).max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    /// shared ancestor at depth `r_n`
    pub ancestor: VertexRef,
    /// depth of the deepest common ancestor of the members
    pub root_depth: u32,
    pub members: Vec<VertexRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterDecomposition {
    pub n: u32,
    pub r_n: u32,
    pub clusters: Vec<Cluster>,
}

impl ClusterDecomposition {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Leaves of clusters whose root depth lies in `[lo, hi]`.
    pub fn window(&self, lo: u32, hi: u32) -> Vec<VertexRef> {
        self.clusters
            .iter()
            .filter(|c| (lo..=hi).contains(&c.root_depth))
            .flat_map(|c| c.members.iter().copied())
            .collect()
    }

    pub fn cluster_of(&self, leaf: &VertexRef) -> Option<&Cluster> {
        let a = leaf.ancestor_unchecked(self.r_n);
        self.clusters
            .binary_search_by(|c| c.ancestor.index.cmp(&a.index))
            .ok()
            .map(|i| &self.clusters[i])
    }
}

fn check_leaves(leaves: &[VertexRef], n: u32) -> Result<()> {
    match leaves.iter().find(|v| v.depth != n) {
        Some(v) => Err(Error::Argument(format!("{v:?} is not at depth {n}"))),
        None => Ok(()),
    }
}

/// Group leaves by their ancestor at depth `r_n`.
pub fn decompose(leaves: &[VertexRef], n: u32, r_n: u32) -> Result<ClusterDecomposition> {
    check_leaves(leaves, n)?;
    if r_n > n {
        return Err(Error::Range(format!("r_n = {r_n} > n = {n}")));
    }
    let mut sorted = leaves.to_vec();
    sorted.sort_by_key(|v| v.index);
    sorted.dedup();
    let mut clusters: Vec<Cluster> = Vec::new();
    for v in sorted {
        let a = v.ancestor_unchecked(r_n);
        match clusters.last_mut() {
            Some(c) if c.ancestor == a => c.members.push(v),
            _ => clusters.push(Cluster {
                ancestor: a,
                root_depth: n,
                members: vec![v],
            }),
        }
    }
    for c in &mut clusters {
        // members are sorted, so the extremes meet at the deepest common ancestor
        let first = c.members[0];
        let last = *c.members.last().expect("nonempty");
        c.root_depth = first.meet_depth(&last);
    }
    Ok(ClusterDecomposition { n, r_n, clusters })
}

/// Every pair meets at depth `>= big_r` or `< r`.
pub fn is_clustered(leaves: &[VertexRef], r: u32, big_r: u32) -> Result<bool> {
    if r > big_r {
        return Err(Error::Argument(format!("r = {r} > R = {big_r}")));
    }
    let mut sorted = leaves.to_vec();
    sorted.sort_by_key(|v| v.index);
    sorted.dedup();
    // in sorted order, every pairwise meet depth is some adjacent meet depth
    Ok(sorted.windows(2).all(|w| {
        let d = w[0].meet_depth(&w[1]);
        d >= big_r || d < r
    }))
}

/// Distinct ancestors at depth `k`, i.e. `|[A]_k|`.
pub fn ancestors_at(leaves: &[VertexRef], k: u32) -> usize {
    let mut idx: Vec<u64> = leaves.iter().map(|v| v.ancestor_unchecked(k).index).collect();
    idx.sort_unstable();
    idx.dedup();
    idx.len()
}

/// `{x : L(x) <= u}` over the leaves.
pub fn sublevel_leaves(field: &LocalTimeField, u: f64) -> Vec<VertexRef> {
    let shape = field.shape;
    field
        .leaves()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l <= u)
        .map(|(i, _)| shape.vertex(shape.n, i as u64).expect("leaf index"))
        .collect()
}

/// `|[F(0)]_{r_n}| / √n` for a phase-A snapshot.
pub fn cluster_count_statistic(snapshot_a: &LocalTimeField, eta: f64) -> Result<f64> {
    let n = snapshot_a.shape.n;
    let r_n = r_n_of(n, eta)?;
    let zeros = sublevel_leaves(snapshot_a, 0.0);
    Ok(ancestors_at(&zeros, r_n) as f64 / (n as f64).sqrt())
}

/// `|[F^B(0) ∩ W^{[n - r_n, n]}_A(0)]_{r_n}|`: clusters rooted near the
/// leaves after phase A that keep an unvisited leaf through phase B.
pub fn phase_b_unvisited_clusters(snapshot_a: &LocalTimeField, b_unvisited: &[u64], eta: f64) -> Result<usize> {
    let shape = snapshot_a.shape;
    let n = shape.n;
    let r_n = r_n_of(n, eta)?;
    let zeros = sublevel_leaves(snapshot_a, 0.0);
    let deco = decompose(&zeros, n, r_n)?;
    let deep = deco.window(n.saturating_sub(r_n), n);
    let mut marks = b_unvisited.to_vec();
    marks.sort_unstable();
    let survivors: Vec<VertexRef> = deep
        .into_iter()
        .filter(|v| marks.binary_search(&v.index).is_ok())
        .collect();
    Ok(ancestors_at(&survivors, r_n))
}

/// `M` leaves of `shape` spread as evenly as possible, pairwise meeting as
/// close to the root as the tree allows.
pub fn spread_leaves(shape: &TreeShape, m: usize) -> Result<Vec<VertexRef>> {
    let w = shape.leaf_count() as u64;
    if m == 0 || m as u64 > w {
        return Err(Error::Argument(format!("{m} leaves out of {w}")));
    }
    (0..m as u64)
        .map(|i| shape.vertex(shape.n, i * w / m as u64))
        .collect()
}

#[cfg(test)]
mod tests;
