//! The second Ray-Knight identity on `T̄_n`: `L_t + h² = (h' + √t)²` in law,
//! with `L` and `h` independent.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gff::{sample_dgff, GaussianField};
use crate::report::{Calibration, ExperimentReport, TestResult};
use crate::rng::{replica_rng, Rng};
use crate::stats::{self, centering::m_n};
use crate::tree::{TreeShape, VertexRef};
use crate::walk::sampler::LocalTimeSampler;
use crate::walk::{LocalTimeField, WalkConfig};

#[derive(Debug, Clone)]
pub struct IsoSample {
    pub l: LocalTimeField,
    pub h: GaussianField,
    /// `L + h²` at every vertex
    pub lhs: Vec<f64>,
}

impl IsoSample {
    /// Every leaf with `L + h² <= u` also has `L <= u`.
    pub fn contained(&self, u: f64) -> bool {
        let shape = self.l.shape;
        let off = shape.offset(shape.n);
        (off..shape.vertex_count()).all(|f| self.lhs[f] > u || self.l.values[f] <= u)
    }
}

pub fn iso_lhs_sample(sampler: &dyn LocalTimeSampler, n: u32, t: f64, seed: u64, replica: u64) -> Result<IsoSample> {
    if !(t >= 0.0) {
        return Err(Error::Argument(format!("root clock {t}")));
    }
    let shape = TreeShape::unary(n)?;
    let l = sampler.root_clock_field(&WalkConfig::new(shape, seed, replica), t)?;
    let h = sample_dgff(shape, &mut replica_rng(seed, "iso-h", replica));
    let lhs = l.values.iter().zip(&h.values).map(|(a, b)| a + b * b).collect();
    Ok(IsoSample { l, h, lhs })
}

/// `(h' + √t)²` at every vertex of `T̄_n` for a fresh DGFF `h'`.
pub fn iso_rhs_sample(n: u32, t: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::Argument(format!("root clock {t}")));
    }
    let h = sample_dgff(TreeShape::unary(n)?, rng);
    let a = t.sqrt();
    Ok(h.values.iter().map(|x| (x + a) * (x + a)).collect())
}

/// `E[(X + a)²(Y + a)²]` for centred Gaussians with the given variances and
/// covariance, `a = √t`.
pub fn rhs_second_moment(var_x: f64, var_y: f64, cov: f64, t: f64) -> f64 {
    var_x * var_y + 2.0 * cov * cov + t * (var_x + var_y) + 4.0 * t * cov + t * t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubLevelSource {
    /// `ĥ² = (h' + m_n)²`
    G,
    /// local times
    F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubLevelSet {
    pub u: f64,
    pub members: Vec<u64>,
    pub source: SubLevelSource,
}

/// Leaf indices with `statistic <= u`.
pub fn sublevel(leaf_values: &[f64], u: f64, source: SubLevelSource) -> Result<SubLevelSet> {
    if !(u >= 0.0) {
        return Err(Error::Argument(format!("level {u}")));
    }
    let members = leaf_values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= u)
        .map(|(i, _)| i as u64)
        .collect();
    Ok(SubLevelSet { u, members, source })
}

/// `ĥ²` on the leaves of `T̄_n`, with `ĥ = h' + m_n`.
pub fn hhat_squared(h_prime: &GaussianField) -> Vec<f64> {
    let m = m_n(h_prime.shape.n as f64);
    h_prime.leaves().iter().map(|x| (x + m) * (x + m)).collect()
}

/// `ĥ = h' + m_n` at every vertex.
pub fn hhat(h_prime: &GaussianField) -> GaussianField {
    let m = m_n(h_prime.shape.n as f64);
    GaussianField {
        shape: h_prime.shape,
        values: h_prime.values.iter().map(|x| x + m).collect(),
    }
}

/// `𝒢_n(u)` as leaf vertices.
pub fn g_set(h_prime: &GaussianField, u: f64) -> Result<Vec<VertexRef>> {
    let shape = h_prime.shape;
    let set = sublevel(&hhat_squared(h_prime), u, SubLevelSource::G)?;
    set.members.iter().map(|&i| shape.vertex(shape.n, i)).collect()
}

#[derive(Debug, Clone)]
pub struct IsoTestParams {
    pub n: u32,
    pub t: f64,
    pub samples: usize,
    pub projections: usize,
    pub alpha: f64,
    pub seed: u64,
}

/// Compare the laws of `L + h²` and `(h' + √t)²` over the non-root vertices
/// of `T̄_n`: marginal KS per vertex, second moments for every pair (against
/// each other and against the exact value), and KS on random projections.
/// p-values go into one Holm family.
pub fn iso_distribution_test(sampler: &dyn LocalTimeSampler, p: &IsoTestParams) -> Result<ExperimentReport> {
    if p.samples < 100 {
        return Err(Error::Argument(format!("{} samples is too few", p.samples)));
    }
    let shape = TreeShape::unary(p.n)?;
    let name = format!("iso-n{}-t{}", p.n, p.t);
    let mut report = ExperimentReport::new(&name, p.seed);
    report.params.insert("n".into(), p.n.into());
    report.params.insert("t".into(), p.t.into());
    report.params.insert("samples".into(), p.samples.into());
    report.params.insert("projections".into(), p.projections.into());
    report.params.insert("sampler".into(), sampler.name().into());
    for s in ["iso-h", "iso-rhs", "iso-proj"] {
        report.stream(s);
    }
    report.stream(sampler.name());

    let verts: Vec<usize> = (1..shape.vertex_count()).collect();
    let dim = verts.len();
    let lhs: Vec<Vec<f64>> = (0..p.samples as u64)
        .into_par_iter()
        .map(|r| iso_lhs_sample(sampler, p.n, p.t, p.seed, r).map(|s| verts.iter().map(|&f| s.lhs[f]).collect()))
        .collect::<Result<_>>()?;
    let rhs: Vec<Vec<f64>> = (0..p.samples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(p.seed, "iso-rhs", r);
            iso_rhs_sample(p.n, p.t, &mut rng).map(|v| verts.iter().map(|&f| v[f]).collect())
        })
        .collect::<Result<_>>()?;
    let column = |rows: &[Vec<f64>], j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();

    for (j, &f) in verts.iter().enumerate() {
        let v = shape.from_flat(f);
        let (a, b) = (column(&lhs, j), column(&rhs, j));
        let ks = stats::ks_two_sample(&a, &b)?;
        report.add_test(TestResult::p_value(
            &format!("marginal-ks-d{}-i{}", v.depth, v.index),
            ks.statistic,
            ks.p,
            p.alpha,
            Calibration::Exact,
        ));
    }
    for j in 0..dim {
        for k in j..dim {
            let (x, y) = (shape.from_flat(verts[j]), shape.from_flat(verts[k]));
            let prod = |rows: &[Vec<f64>]| rows.iter().map(|r| r[j] * r[k]).collect::<Vec<f64>>();
            let (ml, sl) = stats::mean_se(&prod(&lhs));
            let (mr, sr) = stats::mean_se(&prod(&rhs));
            let exact = rhs_second_moment(
                x.depth as f64 / 2.0,
                y.depth as f64 / 2.0,
                x.meet_depth(&y) as f64 / 2.0,
                p.t,
            );
            let label = format!("d{}i{}-d{}i{}", x.depth, x.index, y.depth, y.index);
            let se = (sl * sl + sr * sr).sqrt();
            let z = (ml - mr) / se;
            report.add_test(
                TestResult::p_value(&format!("moment2-{label}"), z, stats::normal_two_sided(z), p.alpha, Calibration::Exact)
                    .with_detail(format!("lhs {ml:.4} rhs {mr:.4} se {se:.4}; within 3 sigma: {}", z.abs() <= 3.0)),
            );
            let z = (ml - exact) / sl;
            report.add_test(
                TestResult::p_value(&format!("moment2-exact-{label}"), z, stats::normal_two_sided(z), p.alpha, Calibration::Derived)
                    .with_detail(format!("lhs {ml:.4} exact {exact:.4}")),
            );
        }
    }
    let mut rng = replica_rng(p.seed, "iso-proj", 0);
    for q in 0..p.projections {
        let w: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let proj = |rows: &[Vec<f64>]| {
            rows.iter()
                .map(|r| r.iter().zip(&w).map(|(a, b)| a * b).sum())
                .collect::<Vec<f64>>()
        };
        let ks = stats::ks_two_sample(&proj(&lhs), &proj(&rhs))?;
        report.add_test(TestResult::p_value(&format!("projection-ks-{q}"), ks.statistic, ks.p, p.alpha, Calibration::Exact));
    }
    // keep the first leaf as a per-replica series
    let leaf = dim - 1;
    report.add_stat("lhs-leaf", column(&lhs, leaf));
    report.add_stat("rhs-leaf", column(&rhs, leaf));
    report.finalize();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::sampler::{Branching, EventLoop};
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_clock_lhs_is_h_squared() {
        let s = iso_lhs_sample(&EventLoop, 3, 0.0, 5, 0).unwrap();
        for (a, h) in s.lhs.iter().zip(&s.h.values) {
            assert_eq!(*a, h * h);
        }
        let mut rng = replica_rng(5, "x", 0);
        let r = iso_rhs_sample(3, 0.0, &mut rng).unwrap();
        assert!(r.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn lhs_mean_and_rhs_variance() {
        let (n, t) = (3, 2.0);
        let reps = 40_000;
        let leaf = TreeShape::unary(n).unwrap().offset(n);
        let lhs: Vec<f64> = (0..reps)
            .map(|r| iso_lhs_sample(&Branching, n, t, 9, r).unwrap().lhs[leaf])
            .collect();
        let (m, se) = stats::mean_se(&lhs);
        assert!((m - 3.5).abs() < 3.5 * se, "{m} {se}");
        let mut rng = replica_rng(9, "rhs", 0);
        let rhs: Vec<f64> = (0..reps).map(|_| iso_rhs_sample(n, t, &mut rng).unwrap()[leaf]).collect();
        let (m, se) = stats::mean_se(&rhs);
        assert!((m - 3.5).abs() < 3.5 * se);
        // Var((G + a)²) for G ~ N(0, n/2) is n²/2 + 2nt
        let v = stats::variance(&rhs);
        assert!((v - 16.5).abs() < 0.06 * 16.5, "{v}");
    }

    #[test]
    fn second_moment_formula() {
        assert_abs_diff_eq!(rhs_second_moment(1.5, 1.5, 1.5, 2.0), 16.5 + 3.5 * 3.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rhs_second_moment(0.0, 0.0, 0.0, 3.0), 9.0, epsilon = 1e-12);
    }

    #[test]
    fn containment_always_holds() {
        for r in 0..200 {
            let s = iso_lhs_sample(&EventLoop, 5, 1.5, 2, r).unwrap();
            for u in [0.0, 0.5, 1.0, 4.0] {
                assert!(s.contained(u));
            }
        }
    }

    #[test]
    fn sublevel_edges() {
        let v = [0.0, 2.0, 0.0, 5.0];
        let s = sublevel(&v, 0.0, SubLevelSource::F).unwrap();
        assert_eq!(s.members, vec![0, 2]);
        let s = sublevel(&v, 5.0, SubLevelSource::F).unwrap();
        assert_eq!(s.members.len(), 4);
        assert!(sublevel(&v, -1.0, SubLevelSource::F).is_err());
        // zero level of a local-time field is the unvisited set
        let l = Branching.root_clock_field(&WalkConfig::new(TreeShape::unary(6).unwrap(), 3, 0), 2.0).unwrap();
        let s = sublevel(l.leaves(), 0.0, SubLevelSource::F).unwrap();
        assert_eq!(s.members, l.zero_leaves());
    }

    #[test]
    fn small_distribution_test_passes() {
        let p = IsoTestParams {
            n: 2,
            t: 1.0,
            samples: 20_000,
            projections: 3,
            alpha: 0.01,
            seed: 4,
        };
        let r = iso_distribution_test(&EventLoop, &p).unwrap();
        assert!(r.pass, "{:#?}", r.tests.iter().filter(|t| !t.pass).collect::<Vec<_>>());
        // 3 marginals, 6 pairs twice, 3 projections
        assert_eq!(r.tests.len(), 3 + 12 + 3);
    }

    #[test]
    fn distribution_test_detects_wrong_clock() {
        // lhs at t = 1 against rhs at t = 1.3
        struct Shifted;
        impl LocalTimeSampler for Shifted {
            fn name(&self) -> &'static str {
                "shifted"
            }
            fn root_clock_field(&self, c: &WalkConfig, t: f64) -> Result<LocalTimeField> {
                Branching.root_clock_field(c, t / 1.3)
            }
            fn phases(&self, c: &WalkConfig, s: f64) -> Result<crate::walk::PhaseRun> {
                Branching.phases(c, s)
            }
        }
        let p = IsoTestParams {
            n: 2,
            t: 1.3,
            samples: 20_000,
            projections: 2,
            alpha: 0.01,
            seed: 4,
        };
        assert!(!iso_distribution_test(&Shifted, &p).unwrap().pass);
    }

    #[test]
    fn g_set_is_tight_small_scale() {
        let mut sizes = Vec::new();
        for n in [6u32, 10] {
            let v: Vec<f64> = (0..400)
                .map(|r| {
                    let h = sample_dgff(TreeShape::unary(n).unwrap(), &mut replica_rng(1, "g", r));
                    g_set(&h, 1.0).unwrap().len() as f64
                })
                .collect();
            sizes.push(stats::quantile(&v, 0.95));
        }
        assert!(sizes[1] <= 3.0 * sizes[0] + 3.0, "{sizes:?}");
    }
}
