use super::*;
use crate::rng::replica_rng;
use crate::tree::{TreeKind, TreeShape};
use crate::walk::{branching, Tracking};
use proptest::prelude::*;
use rand::Rng as _;

fn leaf(n: u32, i: u64) -> VertexRef {
    TreeShape::unary(n).unwrap().vertex(n, i).unwrap()
}

#[test]
fn r_n_examples() {
    assert_eq!(r_n_of(100, 0.25).unwrap(), 3);
    assert_eq!(r_n_of(16, 0.25).unwrap(), 2);
    assert_eq!(r_n_of(1, 0.3).unwrap(), 1);
    assert!(r_n_of(10, 0.5).is_err());
    assert!(r_n_of(10, 0.0).is_err());
}

#[test]
fn decompose_examples() {
    let n = 8;
    let d = decompose(&[leaf(n, 5)], n, 2).unwrap();
    assert_eq!(d.len(), 1);
    assert_eq!(d.clusters[0].root_depth, n);
    let d = decompose(&[leaf(n, 4), leaf(n, 5)], n, 2).unwrap();
    assert_eq!(d.len(), 1);
    assert_eq!(d.clusters[0].root_depth, n - 1);
    // meet at depth 1 < r_n
    let d = decompose(&[leaf(n, 0), leaf(n, 127)], n, 2).unwrap();
    assert_eq!(d.len(), 2);
    assert!(decompose(&[leaf(n, 0).parent().unwrap()], n, 2).is_err());
}

#[test]
fn is_clustered_examples() {
    let n = 8;
    assert!(is_clustered(&[leaf(n, 3)], 2, 6).unwrap());
    assert!(is_clustered(&[leaf(n, 4), leaf(n, 5)], 2, n - 1).unwrap());
    // meet depth 4 sits in [2, 6)
    let a = leaf(n, 0);
    let b = leaf(n, 8);
    assert_eq!(a.meet_depth(&b), 4);
    assert!(!is_clustered(&[a, b], 2, 6).unwrap());
    assert!(is_clustered(&[a, b], 2, 4).unwrap());
    assert!(is_clustered(&[a, b], 5, 6).unwrap());
}

#[test]
fn zero_snapshot_statistics() {
    let shape = TreeShape::unary(6).unwrap();
    let mut full = LocalTimeField::zero(shape);
    full.values.iter_mut().for_each(|v| *v = 1.0);
    assert_eq!(cluster_count_statistic(&full, 0.25).unwrap(), 0.0);
    assert_eq!(phase_b_unvisited_clusters(&full, &[0, 1, 2], 0.25).unwrap(), 0);
    let empty = LocalTimeField::zero(shape);
    // everything unvisited: one r_n-cluster per depth-r_n vertex
    let r = r_n_of(6, 0.25).unwrap();
    assert_eq!(cluster_count_statistic(&empty, 0.25).unwrap(), shape.width(r) as f64 / 6f64.sqrt());
}

#[test]
fn phase_b_count_uses_deep_clusters_only() {
    let n = 16u32;
    let shape = TreeShape::unary(n).unwrap();
    let mut a = LocalTimeField::zero(shape);
    a.values.iter_mut().for_each(|v| *v = 1.0);
    let off = shape.offset(n);
    // r_n = 2: a cluster rooted at depth n-1 (siblings) and one rooted at depth 2
    for i in [0usize, 1, 20_000, 32_767] {
        a.values[off + i] = 0.0;
    }
    assert_eq!(phase_b_unvisited_clusters(&a, &[0, 1, 20_000, 32_767], 0.25).unwrap(), 1);
    assert_eq!(phase_b_unvisited_clusters(&a, &[1], 0.25).unwrap(), 1);
    assert_eq!(phase_b_unvisited_clusters(&a, &[20_000], 0.25).unwrap(), 0);
}

#[test]
fn spread_leaves_shape() {
    let shape = TreeShape::unary(16).unwrap();
    let l = spread_leaves(&shape, 4).unwrap();
    assert_eq!(l.iter().map(|v| v.index).collect::<Vec<_>>(), vec![0, 8192, 16384, 24576]);
    assert!(spread_leaves(&shape, 0).is_err());
}

fn profile_field(n: u32, f: impl Fn(u32) -> f64) -> LocalTimeField {
    // every vertex at depth k carries f(k)^2, the leaf 0 carries 0
    let shape = TreeShape::unary(n).unwrap();
    let mut field = LocalTimeField::zero(shape);
    for v in shape.vertices() {
        field.values[v.flat()] = f(v.depth).powi(2);
    }
    for i in 1..shape.leaf_count() {
        field.values[shape.offset(n) + i] = 1e6;
    }
    field.values[shape.offset(n)] = 0.0;
    field
}

#[test]
fn lower_band_edge_is_inside() {
    let n = 20u32;
    let p = ClassParams::default();
    let lower = |k: u32| {
        if k == n {
            0.0
        } else {
            sqrt_line(n, k) + band(n - k, p.eta).0
        }
    };
    let c = classify_trajectories(&profile_field(n, lower), &p).unwrap();
    assert_eq!(c.leaves.len(), 1);
    let x = c.leaves[0];
    assert!(x.in_q);
    // on the upper half of the window both sets use the same band
    let same = ClassParams {
        window: Some((n / 2, n - c.r_n)),
        ..p
    };
    let c = classify_trajectories(&profile_field(n, lower), &same).unwrap();
    assert!(c.leaves[0].in_q && !c.leaves[0].in_r);
}

fn sqrt_line(n: u32, k: u32) -> f64 {
    crate::stats::centering::sqrt_log2() * (n - k) as f64
}

#[test]
fn low_profile_is_flagged() {
    let n = 20u32;
    let p = ClassParams::default();
    let c = classify_trajectories(&profile_field(n, |k| 0.5 * sqrt_line(n, k)), &p).unwrap();
    let x = c.leaves[0];
    assert!(x.in_r && x.in_d && !x.in_q && !x.in_o);
    let high = classify_trajectories(&profile_field(n, |k| sqrt_line(n, k) + 10.0 * (k < n) as u32 as f64), &p).unwrap();
    let x = high.leaves[0];
    assert!(x.in_o && !x.in_d);
}

#[test]
fn degenerate_window_is_reported() {
    let shape = TreeShape::unary(2).unwrap();
    let c = classify_trajectories(&LocalTimeField::zero(shape), &ClassParams::default()).unwrap();
    assert!(c.degenerate_window);
    assert!(c.leaves.iter().all(|x| !x.in_r && !x.in_d && x.in_q));
}

#[test]
fn sparse_fields_are_rejected() {
    let mut f = LocalTimeField::zero(TreeShape::unary(5).unwrap());
    f.tracking = Tracking::LeavesAndBranch(None);
    assert!(matches!(classify_trajectories(&f, &ClassParams::default()), Err(Error::State(_))));
}

#[test]
fn gaussian_classifier_threshold() {
    let shape = TreeShape::unary(12).unwrap();
    let mut rng = replica_rng(3, "h", 0);
    let mut h = crate::gff::sample_dgff(shape, &mut rng);
    let m = crate::stats::centering::m_n(12.0);
    h.values.iter_mut().for_each(|v| *v += m);
    let g = classify_gaussian(&h, 1.0, &ClassParams::default()).unwrap();
    for x in &g.members {
        assert!(h.get(x).powi(2) <= 1.0);
    }
    assert_eq!(g.members.len(), g.in_h.len());
}

#[test]
fn sets_on_sampled_phase_a() {
    // structural invariants on a real snapshot
    let n = 12u32;
    let shape = TreeShape::unary(n).unwrap();
    let t = crate::stats::centering::m_n(n as f64).powi(2);
    for r in 0..10 {
        let mut rng = replica_rng(8, "snap", r);
        let f = branching::sample_field(shape, t, &mut rng).unwrap();
        let p = ClassParams::default();
        let c = classify_trajectories(&f, &p).unwrap();
        let zeros = sublevel_leaves(&f, 0.0);
        assert_eq!(c.leaves.len(), zeros.len());
        let e = c.select(|x| x.in_e);
        assert!(is_clustered(&e, c.r_n, n - p.r).unwrap());
        let d = decompose(&zeros, n, c.r_n).unwrap();
        assert_eq!(d.window(c.r_n, n).len(), zeros.len());
        let a = d.window(c.r_n, n / 2);
        let b = d.window(n / 2 + 1, n);
        assert_eq!(a.len() + b.len(), zeros.len());
        // O needs every window depth above the line, so it excludes R-low
        assert!(c.leaves.iter().all(|x| !(x.in_o && x.in_d)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn decomposition_partitions(n in 2u32..20, seed in any::<u64>(), frac in 0.0f64..0.2, r in 1u32..4) {
        let shape = TreeShape::new(TreeKind::UnaryRoot, n).unwrap();
        let r = r.min(n);
        let mut rng = replica_rng(seed, "subset", 0);
        let picks: Vec<VertexRef> = shape.leaves().filter(|_| rng.random::<f64>() < frac).collect();
        let d = decompose(&picks, n, r).unwrap();
        let mut all: Vec<u64> = d.clusters.iter().flat_map(|c| c.members.iter().map(|v| v.index)).collect();
        let total = all.len();
        all.sort_unstable();
        all.dedup();
        prop_assert_eq!(all.len(), total);
        prop_assert_eq!(total, picks.len());
        for c in &d.clusters {
            prop_assert!(c.root_depth >= r && c.root_depth <= n);
            for m in &c.members {
                prop_assert_eq!(m.ancestor_unchecked(r), c.ancestor);
            }
        }
        prop_assert_eq!(ancestors_at(&picks, r), d.len());
    }

    #[test]
    fn sublevel_is_monotone(seed in any::<u64>(), u in 0.0f64..3.0, du in 0.0f64..3.0) {
        let shape = TreeShape::unary(8).unwrap();
        let mut rng = replica_rng(seed, "mono", 0);
        let f = branching::sample_field(shape, 20.0, &mut rng).unwrap();
        let a = sublevel_leaves(&f, u);
        let b = sublevel_leaves(&f, u + du);
        prop_assert!(a.iter().all(|x| b.contains(x)));
    }
}
