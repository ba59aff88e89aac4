//! Geometry of the finite binary trees `T_n` (root of degree 2) and `T̄_n`
//! (root with a single child).
//!
//! A vertex is `(depth, index)` where `index` is the bit-path from the root,
//! most significant bit first. On `T̄` the first step is pinned, so the path
//! at depth `d >= 1` has `d - 1` free bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DEPTH: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TreeKind {
    Regular,
    UnaryRoot,
}

impl TreeKind {
    pub fn width(self, depth: u32) -> u64 {
        match self {
            TreeKind::Regular => 1u64 << depth,
            TreeKind::UnaryRoot => 1u64 << depth.saturating_sub(1),
        }
    }

    /// Flat heap offset of the first vertex at `depth`.
    pub fn offset(self, depth: u32) -> u64 {
        match self {
            TreeKind::Regular => (1u64 << depth) - 1,
            TreeKind::UnaryRoot => {
                if depth == 0 {
                    0
                } else {
                    1u64 << (depth - 1)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexRef {
    pub kind: TreeKind,
    pub depth: u32,
    pub index: u64,
}

impl VertexRef {
    pub fn root(kind: TreeKind) -> Self {
        VertexRef { kind, depth: 0, index: 0 }
    }

    pub fn new(kind: TreeKind, depth: u32, index: u64) -> Result<Self> {
        if depth > MAX_DEPTH || index >= kind.width(depth) {
            return Err(Error::Range(format!(
                "vertex ({depth}, {index}) outside {kind:?}"
            )));
        }
        Ok(VertexRef { kind, depth, index })
    }

    pub fn is_root(&self) -> bool {
        self.depth == 0
    }

    pub fn flat(&self) -> usize {
        (self.kind.offset(self.depth) + self.index) as usize
    }

    pub fn parent(&self) -> Option<VertexRef> {
        if self.depth == 0 {
            return None;
        }
        Some(VertexRef {
            kind: self.kind,
            depth: self.depth - 1,
            index: self.index >> 1,
        })
    }

    /// Child `i`. The `T̄` root only has child 0.
    pub fn child(&self, i: u64) -> Result<VertexRef> {
        let unary_root = self.kind == TreeKind::UnaryRoot && self.depth == 0;
        if i > 1 || (unary_root && i != 0) || self.depth >= MAX_DEPTH {
            return Err(Error::Range(format!("child {i} of {self:?}")));
        }
        let index = if unary_root { 0 } else { (self.index << 1) | i };
        Ok(VertexRef {
            kind: self.kind,
            depth: self.depth + 1,
            index,
        })
    }

    pub fn children(&self) -> impl Iterator<Item = VertexRef> + '_ {
        let count = if self.kind == TreeKind::UnaryRoot && self.depth == 0 {
            1
        } else {
            2
        };
        (0..count).map(move |i| self.child(i).expect("child within depth cap"))
    }

    pub fn ancestor(&self, k: u32) -> Result<VertexRef> {
        if k > self.depth {
            return Err(Error::Range(format!(
                "ancestor at depth {k} of vertex at depth {}",
                self.depth
            )));
        }
        Ok(self.ancestor_unchecked(k))
    }

    #[inline]
    pub fn ancestor_unchecked(&self, k: u32) -> VertexRef {
        VertexRef {
            kind: self.kind,
            depth: k,
            index: self.index >> (self.depth - k),
        }
    }

    /// Depth of `self ∧ other`.
    #[inline]
    pub fn meet_depth(&self, other: &VertexRef) -> u32 {
        let m = self.depth.min(other.depth);
        let a = self.index >> (self.depth - m);
        let b = other.index >> (other.depth - m);
        let diff = a ^ b;
        m - (64 - diff.leading_zeros())
    }

    pub fn meet(&self, other: &VertexRef) -> Result<VertexRef> {
        if self.kind != other.kind {
            return Err(Error::Argument("meet of vertices in different trees".into()));
        }
        Ok(self.ancestor_unchecked(self.meet_depth(other)))
    }

    pub fn is_ancestor_of(&self, other: &VertexRef) -> bool {
        self.depth <= other.depth && other.ancestor_unchecked(self.depth).index == self.index
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeShape {
    pub kind: TreeKind,
    pub n: u32,
}

impl TreeShape {
    pub fn new(kind: TreeKind, n: u32) -> Result<Self> {
        if n == 0 || n > MAX_DEPTH {
            return Err(Error::Range(format!("tree depth {n} not in 1..={MAX_DEPTH}")));
        }
        Ok(TreeShape { kind, n })
    }

    pub fn regular(n: u32) -> Result<Self> {
        Self::new(TreeKind::Regular, n)
    }

    pub fn unary(n: u32) -> Result<Self> {
        Self::new(TreeKind::UnaryRoot, n)
    }

    pub fn root(&self) -> VertexRef {
        VertexRef::root(self.kind)
    }

    pub fn vertex_count(&self) -> usize {
        (self.kind.offset(self.n) + self.kind.width(self.n)) as usize
    }

    pub fn width(&self, depth: u32) -> u64 {
        self.kind.width(depth)
    }

    pub fn offset(&self, depth: u32) -> usize {
        self.kind.offset(depth) as usize
    }

    pub fn leaf_count(&self) -> usize {
        self.width(self.n) as usize
    }

    pub fn contains(&self, v: &VertexRef) -> bool {
        v.kind == self.kind && v.depth <= self.n && v.index < self.width(v.depth)
    }

    pub fn vertex(&self, depth: u32, index: u64) -> Result<VertexRef> {
        if depth > self.n {
            return Err(Error::Range(format!("depth {depth} beyond n = {}", self.n)));
        }
        VertexRef::new(self.kind, depth, index)
    }

    /// Inverse of [`VertexRef::flat`].
    pub fn from_flat(&self, flat: usize) -> VertexRef {
        let flat = flat as u64;
        let depth = match self.kind {
            TreeKind::Regular => 63 - (flat + 1).leading_zeros(),
            TreeKind::UnaryRoot => {
                if flat == 0 {
                    0
                } else {
                    64 - flat.leading_zeros()
                }
            }
        };
        VertexRef {
            kind: self.kind,
            depth,
            index: flat - self.kind.offset(depth),
        }
    }

    pub fn level(&self, depth: u32) -> impl Iterator<Item = VertexRef> + '_ {
        let kind = self.kind;
        (0..self.width(depth)).map(move |index| VertexRef { kind, depth, index })
    }

    pub fn leaves(&self) -> impl Iterator<Item = VertexRef> + '_ {
        self.level(self.n)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexRef> + '_ {
        (0..=self.n).flat_map(move |d| self.level(d))
    }

    pub fn degree(&self, v: &VertexRef) -> u32 {
        depth_degree(self.kind, self.n, v.depth)
    }

    /// Descendants of `y` at distance `r`. With `side = Some(b)` only those
    /// in the one-sided subtree through child `b` of `y` are returned.
    pub fn subtree_leaves(
        &self,
        y: &VertexRef,
        r: u32,
        side: Option<u64>,
    ) -> Result<Vec<VertexRef>> {
        if y.depth + r > self.n {
            return Err(Error::Range(format!(
                "depth {} + {r} exceeds n = {}",
                y.depth, self.n
            )));
        }
        if r == 0 {
            return Ok(vec![*y]);
        }
        let first = match side {
            Some(b) => y.child(b)?,
            None => *y,
        };
        let span = r - (first.depth - y.depth);
        if y.kind == TreeKind::UnaryRoot && y.depth == 0 {
            let base = VertexRef::root(y.kind).child(0)?;
            let span = r - 1;
            return Ok((0..1u64 << span)
                .map(|j| VertexRef {
                    kind: y.kind,
                    depth: r,
                    index: (base.index << span) | j,
                })
                .collect());
        }
        Ok((0..1u64 << span)
            .map(|j| VertexRef {
                kind: y.kind,
                depth: y.depth + r,
                index: (first.index << span) | j,
            })
            .collect())
    }
}

#[inline]
pub fn depth_degree(kind: TreeKind, n: u32, depth: u32) -> u32 {
    if depth == n {
        1
    } else if depth == 0 {
        match kind {
            TreeKind::Regular => 2,
            TreeKind::UnaryRoot => 1,
        }
    } else {
        3
    }
}

/// Graph distance between two vertices of the same tree.
pub fn distance(x: &VertexRef, y: &VertexRef) -> u32 {
    let m = x.meet_depth(y);
    x.depth + y.depth - 2 * m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reg(d: u32, i: u64) -> VertexRef {
        VertexRef::new(TreeKind::Regular, d, i).unwrap()
    }

    #[test]
    fn ancestor_examples() {
        let leaf = reg(5, 13);
        assert_eq!(leaf.ancestor(5).unwrap(), leaf);
        assert_eq!(reg(3, 6).ancestor(1).unwrap(), reg(1, 1));
        assert!(leaf.ancestor(0).unwrap().is_root());
        assert!(matches!(leaf.ancestor(6), Err(Error::Range(_))));
    }

    #[test]
    fn meet_examples() {
        let x = reg(4, 9);
        assert_eq!(x.meet(&x).unwrap(), x);
        assert_eq!(reg(2, 0).meet(&reg(2, 1)).unwrap(), reg(1, 0));
        assert!(reg(2, 0).meet(&reg(2, 3)).unwrap().is_root());
        let u = VertexRef::new(TreeKind::UnaryRoot, 2, 0).unwrap();
        assert!(matches!(x.meet(&u), Err(Error::Argument(_))));
    }

    #[test]
    fn unary_root_meets_at_depth_one() {
        let shape = TreeShape::unary(4).unwrap();
        let a = shape.vertex(4, 0).unwrap();
        let b = shape.vertex(4, 7).unwrap();
        assert_eq!(a.meet_depth(&b), 1);
        assert_eq!(shape.leaf_count(), 8);
    }

    #[test]
    fn subtree_leaf_examples() {
        let shape = TreeShape::regular(5).unwrap();
        let root = shape.root();
        assert_eq!(shape.subtree_leaves(&root, 2, None).unwrap().len(), 4);
        let y = reg(3, 5);
        assert_eq!(shape.subtree_leaves(&y, 0, None).unwrap(), vec![y]);
        let z = reg(4, 3);
        assert_eq!(
            shape.subtree_leaves(&z, 1, None).unwrap(),
            vec![reg(5, 6), reg(5, 7)]
        );
        let right = shape.subtree_leaves(&y, 2, Some(1)).unwrap();
        assert_eq!(right, vec![reg(5, 22), reg(5, 23)]);
        assert!(shape.subtree_leaves(&z, 2, None).is_err());

        let ushape = TreeShape::unary(4).unwrap();
        assert_eq!(ushape.subtree_leaves(&ushape.root(), 4, None).unwrap().len(), 8);
    }

    #[test]
    fn degrees() {
        let u = TreeShape::unary(4).unwrap();
        assert_eq!(u.degree(&u.root()), 1);
        let t = TreeShape::regular(4).unwrap();
        assert_eq!(t.degree(&t.root()), 2);
        assert_eq!(t.degree(&reg(2, 1)), 3);
        assert_eq!(t.degree(&reg(4, 1)), 1);
    }

    #[test]
    fn counts_and_flat_roundtrip() {
        for kind in [TreeKind::Regular, TreeKind::UnaryRoot] {
            for n in 1..=8 {
                let shape = TreeShape::new(kind, n).unwrap();
                let total: u64 = (0..=n).map(|d| kind.width(d)).sum();
                assert_eq!(shape.vertex_count() as u64, total);
                for (i, v) in shape.vertices().enumerate() {
                    assert_eq!(v.flat(), i);
                    assert_eq!(shape.from_flat(i), v);
                }
            }
        }
    }

    #[test]
    fn leaf_distances_exhaustive() {
        for n in 1..=6 {
            let shape = TreeShape::regular(n).unwrap();
            let leaves: Vec<_> = shape.leaves().collect();
            for x in &leaves {
                for y in &leaves {
                    if x == y {
                        continue;
                    }
                    // brute force: climb until equal
                    let (mut a, mut b, mut steps) = (*x, *y, 0);
                    while a != b {
                        a = a.parent().unwrap();
                        b = b.parent().unwrap();
                        steps += 2;
                    }
                    assert_eq!(steps, 2 * (n - x.meet_depth(y)));
                    assert_eq!(distance(x, y), steps);
                }
            }
        }
    }

    #[test]
    fn level_subtrees_partition_leaves() {
        let shape = TreeShape::regular(6).unwrap();
        for d in 0..=6 {
            let mut all: Vec<_> = shape
                .level(d)
                .flat_map(|y| shape.subtree_leaves(&y, 6 - d, None).unwrap())
                .collect();
            all.sort_by_key(|v| v.index);
            let expected: Vec<_> = shape.leaves().collect();
            assert_eq!(all, expected);
        }
    }

    proptest! {
        #[test]
        fn meet_is_common_ancestor(n in 1u32..20, a in any::<u64>(), b in any::<u64>(), unary in any::<bool>()) {
            let kind = if unary { TreeKind::UnaryRoot } else { TreeKind::Regular };
            let w = kind.width(n);
            let x = VertexRef::new(kind, n, a % w).unwrap();
            let y = VertexRef::new(kind, n, b % w).unwrap();
            let m = x.meet(&y).unwrap();
            for k in 0..=m.depth {
                prop_assert_eq!(m.ancestor(k).unwrap(), x.ancestor(k).unwrap());
                prop_assert_eq!(m.ancestor(k).unwrap(), y.ancestor(k).unwrap());
            }
            if m.depth < n {
                prop_assert_ne!(x.ancestor(m.depth + 1).unwrap(), y.ancestor(m.depth + 1).unwrap());
            }
        }

        #[test]
        fn parent_of_child(n in 0u32..20, a in any::<u64>(), bit in 0u64..2, unary in any::<bool>()) {
            let kind = if unary { TreeKind::UnaryRoot } else { TreeKind::Regular };
            let v = VertexRef::new(kind, n, a % kind.width(n)).unwrap();
            let bit = if unary && n == 0 { 0 } else { bit };
            prop_assert_eq!(v.child(bit).unwrap().parent().unwrap(), v);
        }
    }
}
