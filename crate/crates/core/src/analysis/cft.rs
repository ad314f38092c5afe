use crate::error::{Error, Result};
use crate::scalar::Real;

/// `λ(μ, ξ) = arccos(√μ cos 2πξ) / 2π`, principal branch.
pub fn cft_lambda<T: Real>(mu: T, xi: T) -> T {
    let two_pi = T::lit(2.0) * T::PI();
    let arg = (mu.sqrt() * (two_pi * xi).cos()).min(T::one()).max(-T::one());
    arg.acos() / two_pi
}

/// Critical band energy `(λ + n)² + p` in units of `ħΔ`.
pub fn cft_energy<T: Real>(mu: T, xi: T, n: i64, p: usize) -> Result<T> {
    if !(mu >= T::zero() && mu <= T::one()) {
        return Err(Error::Domain(format!("mobility must lie in [0, 1], got {mu}")));
    }
    let half = T::lit(0.5);
    if !(xi >= -half && xi <= half) {
        return Err(Error::Domain(format!("bias must lie in [-1/2, 1/2], got {xi}")));
    }
    let shift = cft_lambda(mu, xi) + T::lit(n as f64);
    Ok(shift * shift + T::from_count(p))
}

/// Number of integer partitions of `0..=max`.
pub fn partition_counts(max: usize) -> Vec<usize> {
    let mut p = vec![0usize; max + 1];
    p[0] = 1;
    for part in 1..=max {
        for total in part..=max {
            p[total] += p[total - part];
        }
    }
    p
}

/// Lowest `count` critical levels at `(μ, ξ)`, every `(n, p)` branch repeated
/// by the number of partitions of `p`, sorted ascending.
pub fn cft_levels<T: Real>(mu: T, xi: T, count: usize) -> Result<Vec<T>> {
    let base = cft_energy(mu, xi, 0, 0)?;
    let lambda = base.sqrt();
    // (λ + n)² + p ≥ p, and (λ + n)² ≥ (|n| - 1/2)², so a finite window suffices
    let window = count + 2;
    let parts = partition_counts(window);
    let mut levels = Vec::new();
    let max_n = (window as f64).sqrt().ceil() as i64 + 2;
    for n in -max_n..=max_n {
        let s = lambda + T::lit(n as f64);
        for (p, &mult) in parts.iter().enumerate() {
            let e = s * s + T::from_count(p);
            for _ in 0..mult {
                levels.push(e);
            }
        }
    }
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.truncate(count);
    Ok(levels)
}
