//! Harmonic measure on a finite tree by leaf-to-root elimination.
//!
//! On a tree, eliminating unknowns deepest-first creates no fill-in: each
//! free vertex ends up as `h(v) = a_v + b_v h(parent)`.

use crate::error::{Error, Result};
use crate::tree::{TreeShape, VertexRef};

const PIVOT_EPS: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-10;

/// Solve `h = boundary` on the given vertices and `h` harmonic (uniform
/// neighbour average) elsewhere.
pub fn harmonic(shape: &TreeShape, boundary: &[(VertexRef, f64)]) -> Result<Vec<f64>> {
    let size = shape.vertex_count();
    let mut fixed: Vec<Option<f64>> = vec![None; size];
    for (v, val) in boundary {
        if !shape.contains(v) {
            return Err(Error::Argument(format!("{v:?} not in tree")));
        }
        fixed[v.flat()] = Some(*val);
    }
    let mut a = vec![0.0; size];
    let mut b = vec![0.0; size];
    let mut root_value = None;
    for f in (0..size).rev() {
        if let Some(val) = fixed[f] {
            a[f] = val;
            b[f] = 0.0;
            if f == 0 {
                root_value = Some(val);
            }
            continue;
        }
        let v = shape.from_flat(f);
        let (mut sa, mut sb) = (0.0, 0.0);
        if v.depth < shape.n {
            for c in v.children() {
                sa += a[c.flat()];
                sb += b[c.flat()];
            }
        }
        let pivot = shape.degree(&v) as f64 - sb;
        if pivot.abs() < PIVOT_EPS {
            return Err(Error::Numeric(format!(
                "singular harmonic system at {v:?}: component without boundary"
            )));
        }
        if f == 0 {
            root_value = Some(sa / pivot);
        } else {
            a[f] = sa / pivot;
            b[f] = 1.0 / pivot;
        }
    }
    let mut h = vec![0.0; size];
    h[0] = root_value.expect("root processed");
    for f in 1..size {
        let p = shape.from_flat(f).parent().expect("non-root").flat();
        h[f] = a[f] + b[f] * h[p];
    }

    let mut worst = 0.0f64;
    for f in 0..size {
        if fixed[f].is_some() {
            continue;
        }
        let v = shape.from_flat(f);
        let mut nb = 0.0;
        if let Some(p) = v.parent() {
            nb += h[p.flat()];
        }
        if v.depth < shape.n {
            nb += v.children().map(|c| h[c.flat()]).sum::<f64>();
        }
        worst = worst.max((shape.degree(&v) as f64 * h[f] - nb).abs());
    }
    if worst > RESIDUAL_TOL {
        return Err(Error::Numeric(format!("harmonic residual {worst:e}")));
    }
    Ok(h)
}

/// Probability that the discrete walk from `start` hits `target` before
/// `avoid`.
pub fn hitting_probability(
    shape: &TreeShape,
    start: &VertexRef,
    target: &VertexRef,
    avoid: &VertexRef,
) -> Result<f64> {
    if target == avoid {
        return Err(Error::Argument("target and avoid coincide".into()));
    }
    let h = harmonic(shape, &[(*target, 1.0), (*avoid, 0.0)])?;
    Ok(h[start.flat()])
}

/// Probability that one root excursion reaches at least one vertex of `set`.
pub fn excursion_hit_probability(shape: &TreeShape, set: &[VertexRef]) -> Result<f64> {
    let root = shape.root();
    let mut boundary: Vec<(VertexRef, f64)> = set.iter().map(|v| (*v, 1.0)).collect();
    boundary.push((root, 0.0));
    let h = harmonic(shape, &boundary)?;
    let children: Vec<VertexRef> = root.children().collect();
    Ok(children.iter().map(|c| h[c.flat()]).sum::<f64>() / children.len() as f64)
}

/// Law of the number of vertices of `set` left unvisited after root clock
/// `t`, by inclusion-exclusion over subsets. Excursions leave the root as
/// a Poisson process of rate `deg(root)` per unit root local time.
pub fn unvisited_count_law(shape: &TreeShape, set: &[VertexRef], t: f64) -> Result<Vec<f64>> {
    let m = set.len();
    if m > 20 {
        return Err(Error::Argument(format!("{m} vertices is too many for inclusion-exclusion")));
    }
    if !(t >= 0.0) {
        return Err(Error::Argument(format!("root clock {t}")));
    }
    let rate = shape.degree(&shape.root()) as f64 * t;
    let mut q = vec![1.0; 1 << m];
    for mask in 1usize..(1 << m) {
        let sub: Vec<VertexRef> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| set[i]).collect();
        q[mask] = (-rate * excursion_hit_probability(shape, &sub)?).exp();
    }
    let binom = |a: usize, b: usize| -> f64 { (0..b).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64) };
    let mut law = vec![0.0; m + 1];
    for (j, slot) in law.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (mask, &qb) in q.iter().enumerate() {
            let size = mask.count_ones() as usize;
            if size >= j {
                let sign = if (size - j) % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * binom(size, j) * qb;
            }
        }
        *slot = acc.clamp(0.0, 1.0);
    }
    Ok(law)
}
