//! Displaced number-state overlaps and the Laguerre machinery behind them.
//!
//! Everything is evaluated through the normalized quantity
//! `T_n^(d)(x) = sqrt(n!/(n+d)!) x^(d/2) e^(-x/2) L_n^(d)(x)`, which obeys a
//! three-term recurrence with O(1) coefficients. The overall scale is carried
//! in the log domain so that neither the factorials nor the Gaussian factor
//! overflow for occupations up to a few hundred.

use crate::scalar::Real;
use nalgebra::Complex;

/// `ln Γ(n + 1)` by direct summation; exact enough for the occupations used here.
pub fn ln_factorial<T: Real>(n: usize) -> T {
    let mut acc = T::zero();
    for k in 2..=n {
        acc = acc + T::from_count(k).ln();
    }
    acc
}

/// Generalized Laguerre polynomial `L_n^(alpha)(x)` for integer `alpha >= 0`.
pub fn laguerre<T: Real>(n: usize, alpha: usize, x: T) -> T {
    let a = T::from_count(alpha);
    let mut prev = T::zero();
    let mut cur = T::one();
    for k in 0..n {
        let kf = T::from_count(k);
        let next = ((T::lit(2.0) * kf + T::one() + a - x) * cur - (kf + a) * prev) / (kf + T::one());
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[n] = T_n^(d)(x)` for `n = 0..out.len()`.
fn normalized_laguerre_run<T: Real>(d: usize, x: T, out: &mut [T]) {
    if out.is_empty() {
        return;
    }
    if x == T::zero() {
        let v = if d == 0 { T::one() } else { T::zero() };
        out.iter_mut().for_each(|o| *o = v);
        return;
    }
    let df = T::from_count(d);
    let ln_t0 = T::lit(0.5) * df * x.ln() - T::lit(0.5) * x - T::lit(0.5) * ln_factorial::<T>(d);
    // Recurrence on a rescaled sequence; `log_scale` tracks the factor removed.
    let big = T::lit(1e100);
    let mut log_scale = ln_t0;
    let mut prev = T::zero();
    let mut cur = T::one();
    out[0] = ln_t0.exp();
    for n in 0..out.len() - 1 {
        let nf = T::from_count(n);
        let lhs = ((nf + T::one()) * (nf + T::one() + df)).sqrt();
        let next = ((T::lit(2.0) * nf + T::one() + df - x) * cur - (nf * (nf + df)).sqrt() * prev) / lhs;
        prev = cur;
        cur = next;
        if cur.abs() > big {
            prev = prev / big;
            cur = cur / big;
            log_scale = log_scale + big.ln();
        }
        out[n + 1] = cur * log_scale.exp();
    }
}

/// `T_n^(d)(x)` for a single pair.
pub fn normalized_laguerre<T: Real>(n: usize, d: usize, x: T) -> T {
    let mut buf = vec![T::zero(); n + 1];
    normalized_laguerre_run(d, x, &mut buf);
    buf[n]
}

/// `<m| D(x) |n>` for a real displacement `x`.
pub fn displaced_real<T: Real>(m: usize, n: usize, x: T) -> T {
    let (lo, d) = if m >= n { (n, m - n) } else { (m, n - m) };
    let t = normalized_laguerre(lo, d, x * x);
    let odd = d % 2 == 1;
    // m >= n carries x^d, m < n carries (-x)^d.
    let negative = odd && ((m >= n) == (x < T::zero()));
    if negative {
        -t
    } else {
        t
    }
}

/// Dense table `t[m * size + n] = <m| D(x) |n>` for `m, n < size`, real `x`.
pub fn displacement_table<T: Real>(size: usize, x: T) -> Vec<T> {
    let mut table = vec![T::zero(); size * size];
    let mut run = vec![T::zero(); size];
    let x2 = x * x;
    for d in 0..size {
        let len = size - d;
        normalized_laguerre_run(d, x2, &mut run[..len]);
        let odd = d % 2 == 1;
        for (lo, &t) in run[..len].iter().enumerate() {
            let hi = lo + d;
            // (m, n) = (hi, lo): x^d ; (m, n) = (lo, hi): (-x)^d
            let s_up = if odd && x < T::zero() { -t } else { t };
            let s_dn = if odd && x > T::zero() { -t } else { t };
            table[hi * size + lo] = s_up;
            table[lo * size + hi] = s_dn;
        }
    }
    table
}

/// `<m| D†(beta) D(alpha) |n>` including the BCH phase `exp((alpha beta* - alpha* beta)/2)`.
pub fn displaced_overlap<T: Real>(n: usize, m: usize, alpha: Complex<T>, beta: Complex<T>) -> Complex<T> {
    let half = T::lit(0.5);
    let cross = alpha * beta.conj() - alpha.conj() * beta;
    let phase = Complex::new(half * cross.re, half * cross.im).exp();
    let gamma = alpha - beta;
    let amp = gamma.norm();
    let (lo, d) = if m >= n { (n, m - n) } else { (m, n - m) };
    let t = normalized_laguerre(lo, d, amp * amp);
    if d == 0 {
        return phase * Complex::new(t, T::zero());
    }
    let theta = gamma.im.atan2(gamma.re);
    let dir = if m >= n { theta } else { T::PI() - theta };
    let rot = Complex::new(T::zero(), T::from_count(d) * dir).exp();
    phase * rot * Complex::new(t, T::zero())
}
