//! Local time along one branch: the atom at zero, the Girsanov
//! representation, and the density envelope.

use super::{scaled, Experiment, RunContext};
use crate::error::Result;
use crate::oracles::bessel::{branch_path, WeightedEstimate};
use crate::oracles::{bessel_atom, bessel_density_bound, bessel_girsanov_estimate};
use crate::report::{Calibration, ExperimentReport, TestResult};
use crate::rng::replica_rng;
use crate::stats::{self, poisson_pmf};
use crate::tree::TreeShape;
use crate::walk::{simulate, StopRule, WalkConfig};

/// Envelope constant fitted on a pilot run (seed 1, 2·10⁵ branches,
/// t = 6, depth 4) with a 25% margin; see `tests/pilots.rs`.
pub const DENSITY_C: f64 = 0.28;

const CHUNK: usize = 10_000;

pub struct BesselExperiment;

impl Experiment for BesselExperiment {
    fn name(&self) -> &'static str {
        "bessel"
    }

    fn description(&self) -> &'static str {
        "zero atom of a branch local time, Girsanov cross-check, density envelope"
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let p = &ctx.params;
        let mut report = ExperimentReport::new(self.name(), ctx.seed);

        // atom with the event loop
        let n = p.u32("n", 8)?;
        let k = p.u32("k", 4)?;
        let t = p.f64("t", 6.0)?;
        let reps = scaled(ctx, "replicas", 100_000, 500)?;
        let shape = TreeShape::unary(n)?;
        let anc = shape.vertex(n, 0)?.ancestor(k)?.flat();
        let seed = ctx.stream_seed("bessel/atom");
        report.stream("bessel/atom");
        let zero = ctx.replicas(reps, |r| {
            let c = WalkConfig::new(shape, seed, r).with_branch(0);
            let out = simulate(&c, &StopRule::RootLocalTime(t))?;
            Ok((out.field.values[anc] == 0.0) as u8 as f64)
        })?;
        let q = bessel_atom(t, k)?;
        let se = (q * (1.0 - q) / reps as f64).sqrt();
        report.add_test(
            TestResult::within_sigma("atom", stats::mean(&zero), se, q, 3.0, Calibration::Theory)
                .with_detail(format!("e^(-t/k) = {q:.6}")),
        );
        report.add_test(TestResult::tolerance(
            "atom-poisson-identity",
            q,
            poisson_pmf(t / k as f64, 0),
            1e-15,
            Calibration::Exact,
        ));

        // Girsanov weights against direct branch simulation
        let gn = p.u32("girsanov_n", 6)?;
        let gt = p.f64("girsanov_t", 8.0)?;
        let ga = p.f64("girsanov_a", 4.0)?;
        let dt = p.f64("dt", 0.005)?;
        let paths = scaled(ctx, "paths", 200_000, 2 * CHUNK)?;
        let tail = move |y: &[f64]| (y[y.len() - 1] > ga) as u8 as f64;
        let weighted = chunked_girsanov(ctx, "bessel/girsanov", gt, gn, &tail, dt, paths)?;
        report.stream("bessel/girsanov");
        let key = ctx.stream_seed("bessel/direct");
        report.stream("bessel/direct");
        let direct = ctx.replicas(paths, |r| {
            let y = branch_path(gt, gn, &mut replica_rng(key, "branch", r));
            Ok(tail(&y))
        })?;
        let (dm, dse) = stats::mean_se(&direct);
        let rel = (weighted.mean - dm).abs() / dm;
        report.add_test(
            TestResult::below("girsanov-vs-direct", rel, 0.05, Calibration::Calibrated).with_detail(format!(
                "weighted {:.5} ± {:.5}, direct {dm:.5} ± {dse:.5}",
                weighted.mean, weighted.se
            )),
        );
        let big_t = p.f64("girsanov_big_t", 40.0)?;
        let one = |_: &[f64]| 1.0;
        let survive = chunked_girsanov(ctx, "bessel/survival", big_t, gn, &one, dt, paths / 4)?;
        let exact = 1.0 - bessel_atom(big_t, gn)?;
        report.add_test(
            TestResult::below("girsanov-survival", (survive.mean - exact).abs() / exact, 0.05, Calibration::Calibrated)
                .with_detail(format!("weighted {:.5} ± {:.5}, 1 - e^(-t/n) = {exact:.5}", survive.mean, survive.se)),
        );
        let zero_phi = |_: &[f64]| 0.0;
        let z = bessel_girsanov_estimate(gt, gn, zero_phi, dt, 100, &mut replica_rng(ctx.seed, "bessel/zero", 0))?;
        report.add_test(TestResult::check("girsanov-zero", z.mean == 0.0, Calibration::Exact));

        // density envelope on a fresh stream
        let samples = scaled(ctx, "density_samples", 200_000, 10_000)?;
        let c = p.f64("density_c", DENSITY_C)?;
        let key = ctx.stream_seed("bessel/density");
        report.stream("bessel/density");
        let ys = ctx.replicas(samples, |r| Ok(branch_path(t, k, &mut replica_rng(key, "branch", r))[k as usize]))?;
        let ratio = envelope_ratio(&ys, t, k as f64, 0.5, 50)?;
        report.add_test(
            TestResult::below("density-envelope", ratio, c, Calibration::Calibrated)
                .with_detail("max over bins of density / bound shape".to_string()),
        );
        report.add_stat("branch-y", ys);
        Ok(report)
    }
}

/// Largest histogram-density to bound-shape ratio over bins of `(0, ∞)`
/// holding at least `min_count` samples.
pub fn envelope_ratio(ys: &[f64], t: f64, s: f64, width: f64, min_count: usize) -> Result<f64> {
    let top = ys.iter().copied().fold(0.0, f64::max);
    let bins = (top / width).ceil() as usize + 1;
    let mut counts = vec![0usize; bins];
    for &y in ys.iter().filter(|&&y| y > 0.0) {
        counts[(y / width) as usize] += 1;
    }
    let total = ys.len() as f64;
    let mut worst: f64 = 0.0;
    for (b, &c) in counts.iter().enumerate() {
        if c < min_count {
            continue;
        }
        let mid = (b as f64 + 0.5) * width;
        let density = c as f64 / (total * width);
        worst = worst.max(density / bessel_density_bound(t, s, mid)?);
    }
    Ok(worst)
}

fn chunked_girsanov(
    ctx: &RunContext,
    label: &str,
    t: f64,
    n: u32,
    phi: &(dyn Fn(&[f64]) -> f64 + Sync),
    dt: f64,
    paths: usize,
) -> Result<WeightedEstimate> {
    let chunks = paths.div_ceil(CHUNK).max(1);
    let key = ctx.stream_seed(label);
    let parts = ctx.replicas(chunks, |r| {
        bessel_girsanov_estimate(t, n, phi, dt, CHUNK, &mut replica_rng(key, "chunk", r))
    })?;
    let c = chunks as f64;
    Ok(WeightedEstimate {
        mean: parts.iter().map(|e| e.mean).sum::<f64>() / c,
        se: parts.iter().map(|e| e.se * e.se).sum::<f64>().sqrt() / c,
    })
}
