use super::*;
use crate::rng::replica_rng;
use crate::stats::{covariance_se, ks_two_sample, mean_se, median};

#[test]
fn dgff_basic_covariances() {
    let shape = TreeShape::regular(3).unwrap();
    let mut rng = replica_rng(1, "dgff", 0);
    let fields: Vec<GaussianField> = (0..100_000).map(|_| sample_dgff(shape, &mut rng)).collect();
    let at = |d: u32, i: u64| -> Vec<f64> {
        let v = shape.vertex(d, i).unwrap();
        fields.iter().map(|f| f.get(&v)).collect()
    };
    assert!(fields.iter().all(|f| f.values[0] == 0.0));
    let (c, se) = covariance_se(&at(1, 0), &at(1, 0));
    assert!((c - 0.5).abs() < 3.0 * se);
    let (c, se) = covariance_se(&at(2, 0), &at(2, 1));
    assert!((c - 0.5).abs() < 3.0 * se);
    let (c, se) = covariance_se(&at(3, 0), &at(3, 7));
    assert!(c.abs() < 3.0 * se);
    let (c, se) = covariance_se(&at(3, 2), &at(3, 2));
    assert!((c - 1.5).abs() < 3.0 * se);
}

#[test]
fn leaf_sampler_matches_full_sampler() {
    for kind in [TreeKind::Regular, TreeKind::UnaryRoot] {
        let shape = TreeShape::new(kind, 6).unwrap();
        let full = sample_dgff(shape, &mut replica_rng(9, "dgff", 2));
        let leaves = sample_dgff_leaves(shape, &mut replica_rng(9, "dgff", 2));
        assert_eq!(full.leaves(), &leaves[..]);
    }
}

#[test]
fn shallower_field_is_prefix() {
    let a = sample_dgff(TreeShape::regular(5).unwrap(), &mut replica_rng(4, "dgff", 0));
    let b = sample_dgff(TreeShape::regular(7).unwrap(), &mut replica_rng(4, "dgff", 0));
    assert_eq!(a.values[..], b.values[..a.values.len()]);
}

#[test]
fn linear_functional_is_gaussian() {
    // skewness and excess kurtosis z-tests for the sum over leaves
    let shape = TreeShape::regular(4).unwrap();
    let mut rng = replica_rng(2, "dgff", 0);
    let x: Vec<f64> = (0..100_000)
        .map(|_| sample_dgff(shape, &mut rng).leaves().iter().sum())
        .collect();
    let (m, _) = mean_se(&x);
    let var = crate::stats::variance(&x);
    let n = x.len() as f64;
    let skew = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n / var.powf(1.5);
    let kurt = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n / (var * var) - 3.0;
    assert!(skew.abs() < 3.0 * (6.0 / n).sqrt(), "skew {skew}");
    assert!(kurt.abs() < 3.0 * (24.0 / n).sqrt(), "kurt {kurt}");
}

#[test]
fn martingale_of_flat_field() {
    for n in 1..=10u32 {
        let f = GaussianField::zero(TreeShape::regular(n).unwrap());
        let z = derivative_martingale(&f, n, MartingaleVariant::Z).unwrap();
        let expect = 0.5f64.powi(n as i32) * sqrt_log2() * n as f64;
        assert!((z - expect).abs() < 1e-14 * expect.max(1.0));
        let fb = GaussianField::zero(TreeShape::unary(n).unwrap());
        let zb = derivative_martingale(&fb, n, MartingaleVariant::ZBar).unwrap();
        assert!((zb - expect).abs() < 1e-14 * expect.max(1.0));
    }
}

#[test]
fn martingale_errors() {
    let f = GaussianField::zero(TreeShape::regular(3).unwrap());
    assert!(matches!(derivative_martingale(&f, 4, MartingaleVariant::Z), Err(Error::State(_))));
    assert!(derivative_martingale(&f, 3, MartingaleVariant::ZBar).is_err());
}

#[test]
fn max_shift_is_stable() {
    // naive evaluation overflows; the shifted one stays finite
    let shape = TreeShape::regular(3).unwrap();
    let mut f = GaussianField::zero(shape);
    for v in f.values.iter_mut().skip(shape.offset(3)) {
        *v = 400.0;
    }
    let z = derivative_martingale(&f, 3, MartingaleVariant::Exponential).unwrap();
    assert!(z.is_infinite() || z > 1e200);
    f.values[shape.offset(3)] = 0.0;
    let z = derivative_martingale(&f, 2, MartingaleVariant::Exponential).unwrap();
    assert!(z.is_finite());
}

#[test]
fn two_z_is_sum_of_halves() {
    // per realization: the two halves of T are two unary-root trees
    let shape = TreeShape::regular(8).unwrap();
    let f = sample_dgff(shape, &mut replica_rng(7, "dgff", 0));
    let z = derivative_martingale(&f, 8, MartingaleVariant::Z).unwrap();
    let leaves = f.leaves();
    let half = leaves.len() / 2;
    let l = martingale_from_level(TreeKind::UnaryRoot, 8, &leaves[..half], MartingaleVariant::ZBar).unwrap();
    let r = martingale_from_level(TreeKind::UnaryRoot, 8, &leaves[half..], MartingaleVariant::ZBar).unwrap();
    assert!((2.0 * z - l - r).abs() < 1e-12 * (l.abs() + r.abs()));
}

#[test]
fn two_z_law_at_depth_ten() {
    let reps = 3000;
    let mut rng = replica_rng(8, "dgff", 0);
    let two_z: Vec<f64> = (0..reps)
        .map(|_| {
            let l = sample_dgff_leaves(TreeShape::regular(10).unwrap(), &mut rng);
            2.0 * martingale_from_level(TreeKind::Regular, 10, &l, MartingaleVariant::Z).unwrap()
        })
        .collect();
    let sum: Vec<f64> = (0..reps)
        .map(|_| {
            let shape = TreeShape::unary(10).unwrap();
            let a = sample_dgff_leaves(shape, &mut rng);
            let b = sample_dgff_leaves(shape, &mut rng);
            martingale_from_level(TreeKind::UnaryRoot, 10, &a, MartingaleVariant::ZBar).unwrap()
                + martingale_from_level(TreeKind::UnaryRoot, 10, &b, MartingaleVariant::ZBar).unwrap()
        })
        .collect();
    assert!(ks_two_sample(&two_z, &sum).unwrap().p > 0.01);
}

#[test]
fn series_uses_one_realization() {
    let f = sample_dgff(TreeShape::regular(6).unwrap(), &mut replica_rng(1, "dgff", 5));
    let s = martingale_series(&f, &[1, 3, 6], MartingaleVariant::Z).unwrap();
    assert_eq!(s.values.len(), 3);
    assert_eq!(s.values[1].1, derivative_martingale(&f, 3, MartingaleVariant::Z).unwrap());
    let e = martingale_series(&f, &[2, 4, 6], MartingaleVariant::Exponential).unwrap();
    assert!(e.values.iter().all(|&(_, z)| z >= 0.0));
}

#[test]
fn lambda_moments() {
    let mut rng = replica_rng(1, "lambda", 0);
    let x: Vec<f64> = (0..100_000).map(|_| sample_lambda(&mut rng)).collect();
    assert!(x.iter().all(|&v| v > 0.0));
    let (m, se) = mean_se(&x);
    assert!((m - 0.5).abs() < 3.0 * se, "{m}");
    // median CI from the binomial count below 1/4
    let below = x.iter().filter(|&&v| v < 0.25).count() as f64 / x.len() as f64;
    assert!((below - 0.5).abs() < 3.0 * (0.25 / x.len() as f64).sqrt());
    assert!((median(&x) - 0.25).abs() < 0.01);
}

#[test]
fn gumbel_mixture_values() {
    assert!((gumbel_mixture_cdf(0.0, 1.0, 1.0, &[1.0]).unwrap() - (-1f64).exp()).abs() < 1e-15);
    assert!(gumbel_mixture_cdf(0.0, 1.0, 1.0, &[]).is_err());
    assert!(gumbel_mixture_cdf(0.0, 0.0, 1.0, &[1.0]).is_err());
    let z = [0.3, 1.0, 2.5];
    assert!(gumbel_mixture_cdf(50.0, 1.0, 1.0, &z).unwrap() > 1.0 - 1e-15);
    assert!(gumbel_mixture_cdf(-50.0, 1.0, 1.0, &z).unwrap() < 1e-15);
    let mut prev = 0.0;
    for i in -12..=12 {
        let c = gumbel_mixture_cdf(i as f64 / 4.0, 2.0 * sqrt_log2(), 1.0, &z).unwrap();
        assert!(c > prev);
        prev = c;
    }
}
