//! Exact and analytic reference values.

pub mod bessel;
pub mod hitting;
pub mod moments;

pub use bessel::{bessel_atom, bessel_density_bound, bessel_girsanov_estimate};
pub use hitting::{excursion_hit_probability, harmonic, hitting_probability, unvisited_count_law};
pub use moments::{centered_leaf_cov, centered_leaf_cross, cov_local_times, exact_moments, ExactMoments};

use std::f64::consts::LN_2;

/// `e^{-t/n + 2tu/n² + n log 2 + 1}`, a bound on `E |F_{n,t}(u)|`.
pub fn first_moment_bound(n: u32, t: f64, u: f64) -> f64 {
    let nf = n as f64;
    (-t / nf + 2.0 * t * u / (nf * nf) + nf * LN_2 + 1.0).exp()
}

/// `C_u e^{-√log2 s}` with `C_u = e^{2 log2 u + 1}`, valid for
/// `√t = √log2 n + s` and `n >= 4u`.
pub fn first_moment_bound_shifted(s: f64, u: f64) -> f64 {
    (2.0 * LN_2 * u + 1.0).exp() * (-LN_2.sqrt() * s).exp()
}
