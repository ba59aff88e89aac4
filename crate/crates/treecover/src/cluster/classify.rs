//! Per-leaf membership in the repulsion sets. All bands are closed.

use serde::Serialize;

use super::{decompose, r_n_of, sublevel_leaves};
use crate::error::{Error, Result};
use crate::gff::GaussianField;
use crate::stats::centering::sqrt_log2;
use crate::tree::VertexRef;
use crate::walk::{LocalTimeField, Tracking};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassParams {
    pub eta: f64,
    pub eta_prime: f64,
    /// sub-level height
    pub u: f64,
    /// depth offset of the cluster-root window `[n - r, n]` used for `E`
    pub r: u32,
    /// overrides `[r_n, n - r_n]` for the windowed sets
    pub window: Option<(u32, u32)>,
}

impl Default for ClassParams {
    fn default() -> Self {
        ClassParams {
            eta: 0.25,
            eta_prime: 0.1,
            u: 0.0,
            r: 2,
            window: None,
        }
    }
}

/// `[k^{1/2-η}, k^{1/2+η}]`; `{0}` at `k = 0`.
pub fn band(k: u32, eta: f64) -> (f64, f64) {
    if k == 0 {
        return (0.0, 0.0);
    }
    let k = k as f64;
    (k.powf(0.5 - eta), k.powf(0.5 + eta))
}

fn wedge(n: u32, k: u32) -> u32 {
    k.min(n - k)
}

fn line(n: u32, k: u32) -> f64 {
    sqrt_log2() * (n - k) as f64
}

fn in_band(x: f64, lo: f64, hi: f64) -> bool {
    lo <= x && x <= hi
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeafClass {
    pub leaf: VertexRef,
    pub cluster_root_depth: u32,
    /// `R`: some window depth outside the two-sided band
    pub in_r: bool,
    /// an ancestor in the window is unusually low (`D`)
    pub in_d: bool,
    /// `U`: cluster root carries unusually high local time
    pub in_u: bool,
    /// `B`: cluster larger than `e^{∧(k)^{1/2-η}}`
    pub in_b: bool,
    /// `Q`: every window depth inside the band of width set by `n - k`
    pub in_q: bool,
    /// `O`: unvisited and every window depth above the line by `r'_n`
    pub in_o: bool,
    /// `E`: rooted in `[n - r, n]` and in `Q` over `[n/2, n - r]`
    pub in_e: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryClass {
    pub n: u32,
    pub r_n: u32,
    pub r_prime: u32,
    pub window: (u32, u32),
    /// `r_n >= n - r_n`: the default window is empty
    pub degenerate_window: bool,
    pub leaves: Vec<LeafClass>,
}

impl TrajectoryClass {
    pub fn count(&self, pred: impl Fn(&LeafClass) -> bool) -> usize {
        self.leaves.iter().filter(|c| pred(c)).count()
    }

    pub fn select(&self, pred: impl Fn(&LeafClass) -> bool) -> Vec<VertexRef> {
        self.leaves.iter().filter(|c| pred(c)).map(|c| c.leaf).collect()
    }
}

fn window_of(n: u32, r_n: u32, params: &ClassParams) -> ((u32, u32), bool) {
    match params.window {
        Some((lo, hi)) => ((lo, hi.min(n)), lo > hi.min(n)),
        None => {
            let hi = n.saturating_sub(r_n);
            ((r_n, hi), r_n >= hi)
        }
    }
}

pub fn classify_trajectories(field: &LocalTimeField, params: &ClassParams) -> Result<TrajectoryClass> {
    if field.tracking != Tracking::All {
        return Err(Error::State("classifiers need local times at every depth".into()));
    }
    if !(params.eta_prime > 0.0 && params.eta_prime < 0.5) {
        return Err(Error::Argument(format!("eta' = {} outside (0, 1/2)", params.eta_prime)));
    }
    let n = field.shape.n;
    let r_n = r_n_of(n, params.eta)?;
    let r_prime = (n as f64).powf(params.eta_prime).ceil() as u32;
    let ((lo, hi), degenerate) = window_of(n, r_n, params);
    let window: Vec<u32> = if degenerate { Vec::new() } else { (lo..=hi).collect() };
    let e_lo = n.div_ceil(2);
    let e_hi = n.saturating_sub(params.r);
    let e_window: Vec<u32> = (e_lo..=e_hi).collect();

    let f = sublevel_leaves(field, params.u);
    let deco = decompose(&f, n, r_n)?;
    let root_local = |x: &VertexRef, k: u32| field.get(&x.ancestor_unchecked(k)).sqrt();
    let mut leaves = Vec::with_capacity(f.len());
    for c in &deco.clusters {
        let kc = c.root_depth;
        let wk = wedge(n, kc) as f64;
        let big = c.members.len() as f64 > wk.powf(0.5 - params.eta).exp();
        for x in &c.members {
            let sym_band = |k: u32| {
                let (a, b) = band(wedge(n, k), params.eta);
                in_band(root_local(x, k), line(n, k) + a, line(n, k) + b)
            };
            let tail_band = |k: u32| {
                let (a, b) = band(n - k, params.eta);
                in_band(root_local(x, k), line(n, k) + a, line(n, k) + b)
            };
            let in_r = window.iter().any(|&k| !sym_band(k));
            let in_d = window
                .iter()
                .any(|&k| root_local(x, k) <= line(n, k) - (wedge(n, k) as f64).powf(0.5 - params.eta_prime));
            let in_u = root_local(x, kc) > line(n, kc) + wk.powf(0.5 - params.eta);
            let in_q = window.iter().all(|&k| tail_band(k));
            let unvisited = field.get(x) == 0.0;
            let in_o = unvisited && window.iter().all(|&k| root_local(x, k) >= line(n, k) + r_prime as f64);
            let in_e = kc >= e_hi && e_window.iter().all(|&k| tail_band(k));
            leaves.push(LeafClass {
                leaf: *x,
                cluster_root_depth: kc,
                in_r,
                in_d,
                in_u,
                in_b: big,
                in_q,
                in_o,
                in_e,
            });
        }
    }
    Ok(TrajectoryClass {
        n,
        r_n,
        r_prime,
        window: (lo, hi),
        degenerate_window: degenerate,
        leaves,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianClass {
    pub window: (u32, u32),
    pub degenerate_window: bool,
    /// leaves with `ĥ² <= u`
    pub members: Vec<VertexRef>,
    /// membership in `H` for each of `members`
    pub in_h: Vec<bool>,
}

/// The Gaussian analogue `H`: leaves of `G(u)` whose trajectory `ĥ([x]_k)`
/// leaves the band `√log2 (n - k) + 𝔯_{∧(k)}` somewhere in the window.
pub fn classify_gaussian(hhat: &GaussianField, u: f64, params: &ClassParams) -> Result<GaussianClass> {
    let shape = hhat.shape;
    let n = shape.n;
    let r_n = r_n_of(n, params.eta)?;
    let ((lo, hi), degenerate) = window_of(n, r_n, params);
    let window: Vec<u32> = if degenerate { Vec::new() } else { (lo..=hi).collect() };
    let mut members = Vec::new();
    let mut in_h = Vec::new();
    for (i, &h) in hhat.leaves().iter().enumerate() {
        if h * h > u {
            continue;
        }
        let x = shape.vertex(n, i as u64)?;
        let out = window.iter().any(|&k| {
            let (a, b) = band(wedge(n, k), params.eta);
            let y = hhat.get(&x.ancestor_unchecked(k)) - line(n, k);
            !in_band(y, a, b)
        });
        members.push(x);
        in_h.push(out);
    }
    Ok(GaussianClass {
        window: (lo, hi),
        degenerate_window: degenerate,
        members,
        in_h,
    })
}
