//! Laws along a single root-to-leaf branch: one half times a
//! zero-dimensional squared Bessel process started from `2t`.

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// `P(Y_k = 0) = e^{-t/k}`.
pub fn bessel_atom(t: f64, k: u32) -> Result<f64> {
    if !(t >= 0.0) || k == 0 {
        return Err(Error::Argument(format!("bessel_atom(t={t}, k={k})")));
    }
    Ok((-t / k as f64).exp())
}

/// Shape of the density bound, constant set to 1.
pub fn bessel_density_bound(t: f64, s: f64, y: f64) -> Result<f64> {
    if !(y > 0.0) || !(s > 0.0) {
        return Err(Error::Argument(format!("density bound at y={y}, s={s}")));
    }
    let d = t.sqrt() - y.sqrt();
    Ok((t / y).sqrt() / s * (-d * d / s).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEstimate {
    pub mean: f64,
    pub se: f64,
}

/// Weighted Brownian estimate of `E[φ(Y_0..Y_n); Y_n != 0]`.
///
/// `B` starts at `√t` with variance 1/2 per unit time, Euler step `dt`,
/// killed at the first grid point where `B <= 0`; the integral of `B^{-2}`
/// uses the trapezoid rule.
pub fn bessel_girsanov_estimate(
    t: f64,
    n: u32,
    phi: impl Fn(&[f64]) -> f64,
    dt: f64,
    paths: usize,
    rng: &mut Rng,
) -> Result<WeightedEstimate> {
    if !(dt > 0.0) {
        return Err(Error::Argument(format!("step {dt}")));
    }
    if !(t > 0.0) || paths < 2 {
        return Err(Error::Argument("girsanov estimate needs t > 0 and paths >= 2".into()));
    }
    let per_unit = (1.0 / dt).round().max(1.0) as usize;
    let h = 1.0 / per_unit as f64;
    let step = Normal::new(0.0, (h / 2.0).sqrt()).expect("finite sd");
    let b0 = t.sqrt();
    let mut grid = vec![0.0; n as usize + 1];
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..paths {
        let mut b = b0;
        let mut integral = 0.0;
        let mut alive = true;
        grid[0] = b * b;
        'path: for unit in 1..=n as usize {
            for _ in 0..per_unit {
                let next = b + step.sample(rng);
                if next <= 0.0 {
                    alive = false;
                    break 'path;
                }
                integral += 0.5 * h * (1.0 / (b * b) + 1.0 / (next * next));
                b = next;
            }
            grid[unit] = b * b;
        }
        let value = if alive {
            phi(&grid) * (b0 / b).sqrt() * (-3.0 / 16.0 * integral).exp()
        } else {
            0.0
        };
        sum += value;
        sum2 += value * value;
    }
    let m = sum / paths as f64;
    let var = (sum2 / paths as f64 - m * m) * paths as f64 / (paths as f64 - 1.0);
    Ok(WeightedEstimate {
        mean: m,
        se: (var.max(0.0) / paths as f64).sqrt(),
    })
}

/// Direct simulation of `(Y_0, ..., Y_n)` by the generation recursion.
pub fn branch_path(t: f64, n: u32, rng: &mut Rng) -> Vec<f64> {
    let mut y = Vec::with_capacity(n as usize + 1);
    y.push(t);
    for k in 0..n as usize {
        let next = crate::walk::branching::child_local_time(y[k], rng);
        y.push(next);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;
    use approx::assert_abs_diff_eq;

    #[test]
    fn atom_values() {
        assert_abs_diff_eq!(bessel_atom(6.0, 4).unwrap(), 0.223130, epsilon = 1e-6);
        assert_eq!(bessel_atom(0.0, 3).unwrap(), 1.0);
        assert!(bessel_atom(1.0, 0).is_err());
    }

    #[test]
    fn atom_equals_poisson_zero_mass() {
        // same number as the chance that a leaf at depth k of T̄_k is missed
        for (t, k) in [(6.0, 4u32), (2.0, 7), (10.0, 3)] {
            assert_abs_diff_eq!(
                bessel_atom(t, k).unwrap(),
                crate::stats::poisson_pmf(t / k as f64, 0),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn density_bound_examples() {
        assert_abs_diff_eq!(bessel_density_bound(4.0, 2.0, 4.0).unwrap(), 0.5, epsilon = 1e-15);
        assert!(bessel_density_bound(4.0, 2.0, 1e6).unwrap() < 1e-100);
        assert!(bessel_density_bound(4.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn girsanov_zero_functional() {
        let mut rng = replica_rng(1, "g", 0);
        let e = bessel_girsanov_estimate(2.0, 3, |_| 0.0, 0.01, 100, &mut rng).unwrap();
        assert_eq!(e.mean, 0.0);
        assert!(bessel_girsanov_estimate(2.0, 3, |_| 1.0, 0.0, 100, &mut rng).is_err());
    }

    #[test]
    fn girsanov_survival_matches_atom() {
        let mut rng = replica_rng(2, "g", 0);
        let (t, n) = (8.0, 4u32);
        let e = bessel_girsanov_estimate(t, n, |_| 1.0, 0.005, 20_000, &mut rng).unwrap();
        let exact = 1.0 - bessel_atom(t, n).unwrap();
        assert!((e.mean - exact).abs() < 0.05 * exact, "{} vs {exact}", e.mean);
    }

    #[test]
    fn branch_recursion_atom() {
        let mut rng = replica_rng(3, "b", 0);
        let reps = 100_000;
        let zeros = (0..reps).filter(|_| branch_path(6.0, 4, &mut rng)[4] == 0.0).count() as f64;
        let p = zeros / reps as f64;
        let exact = bessel_atom(6.0, 4).unwrap();
        assert!((p - exact).abs() < 4.0 * (exact * (1.0 - exact) / reps as f64).sqrt());
    }
}
