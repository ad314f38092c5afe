//! Scalar kernels: monotone cubic interpolation, bracketed root finding and
//! bounded minimization. Generic over [`Real`].

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Clone, Debug, PartialEq)]
pub struct Pchip<T> {
    x: Vec<T>,
    y: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Real> Pchip<T> {
    /// Needs at least two points with strictly increasing `x`.
    pub fn new(x: &[T], y: &[T]) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::Domain(format!("need >= 2 matching points, got {} and {}", x.len(), y.len())));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotone("interpolation abscissae must increase strictly".into()));
        }
        let h: Vec<T> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<T> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut slopes = vec![T::zero(); n];
        if n == 2 {
            slopes[0] = delta[0];
            slopes[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > T::zero() {
                    let w1 = T::lit(2.0) * h[i] + h[i - 1];
                    let w2 = h[i] + T::lit(2.0) * h[i - 1];
                    slopes[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Pchip { x: x.to_vec(), y: y.to_vec(), slopes })
    }

    pub fn domain(&self) -> (T, T) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Value at `t`; clamps to the end values outside the domain.
    pub fn eval(&self, t: T) -> T {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.y[i],
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = three * s2 - two * s3;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.slopes[i] + h01 * self.y[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

/// Three-point end slope, limited to keep monotonicity.
fn end_slope<T: Real>(h0: T, h1: T, d0: T, d1: T) -> T {
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let s = ((two * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s * d0 <= T::zero() {
        T::zero()
    } else if d0 * d1 <= T::zero() && s.abs() > (three * d0).abs() {
        three * d0
    } else {
        s
    }
}

/// Root of `f` in `[lo, hi]` by Brent's method; the endpoints must bracket a sign change.
pub fn brent_root<T: Real, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, tol: T) -> Result<T> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa * fb > T::zero() {
        return Err(Error::NotBracketed { lo: lo.to_f64().unwrap_or(f64::NAN), hi: hi.to_f64().unwrap_or(f64::NAN) });
    }
    let two = T::lit(2.0);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb * fc > T::zero() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = two * T::epsilon() * b.abs() + tol / two;
        let m = (c - b) / two;
        if m.abs() <= tol1 || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            if two * p < (T::lit(3.0) * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol1 { b + d } else { b + tol1 * m.signum() };
        fb = f(b);
    }
    Ok(b)
}

/// Minimizer of `f` on `[lo, hi]`: best point of a uniform pre-scan with
/// `scan` intervals, refined by Brent's parabolic search inside its neighbours.
pub fn minimize_bounded<T: Real, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, scan: usize, tol: T) -> (T, T) {
    let scan = scan.max(2);
    let step = (hi - lo) / T::from_count(scan);
    let mut best = (lo, f(lo));
    for i in 1..=scan {
        let x = if i == scan { hi } else { lo + step * T::from_count(i) };
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let a = (best.0 - step).max(lo);
    let b = (best.0 + step).min(hi);
    let refined = brent_min(&mut f, a, b, tol);
    if refined.1 < best.1 {
        refined
    } else {
        best
    }
}

fn brent_min<T: Real, F: FnMut(T) -> T>(f: &mut F, lo: T, hi: T, tol: T) -> (T, T) {
    let golden = T::lit(0.381_966_011_250_105_1);
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let (mut a, mut b) = (lo, hi);
    let mut x = a + golden * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (T::zero(), T::zero());
    for _ in 0..500 {
        let xm = half * (a + b);
        let tol1 = tol + T::epsilon().sqrt() * x.abs() * T::lit(1e-3);
        let tol2 = two * tol1;
        if (x - xm).abs() <= tol2 - half * (b - a) {
            break;
        }
        let mut golden_step = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = two * (q - r);
            if q > T::zero() {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            if p.abs() < (half * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden_step = false;
            }
        }
        if golden_step {
            e = if x >= xm { a - x } else { b - x };
            d = golden * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + if d >= T::zero() { tol1 } else { -tol1 } };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pchip_interpolates_and_stays_monotone() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.0, 0.1, 0.9, 1.0, 1.0];
        let p = Pchip::new(&x, &y).unwrap();
        for i in 0..5 {
            assert_eq!(p.eval(x[i]), y[i]);
        }
        let mut prev = -1.0;
        for i in 0..=400 {
            let v = p.eval(i as f64 / 100.0);
            assert!(v >= prev - 1e-15 && v <= 1.0 + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn pchip_rejects_unsorted() {
        assert!(matches!(Pchip::new(&[0.0, 0.0], &[1.0, 2.0]), Err(Error::NonMonotone(_))));
    }

    #[test]
    fn root_of_cubic() {
        let r = brent_root(|x: f64| x * x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
        assert!(matches!(brent_root(|x: f64| x + 5.0, 0.0, 1.0, 1e-12), Err(Error::NotBracketed { .. })));
    }

    #[test]
    fn bounded_minimum() {
        let (x, _) = minimize_bounded(|x: f64| (x - 0.37).powi(2), 0.0, 1.0, 50, 1e-10);
        assert!((x - 0.37).abs() < 1e-7);
        let (x, _) = minimize_bounded(|x: f64| x, 0.0, 1.0, 50, 1e-10);
        assert_eq!(x, 0.0);
        let (x, _) = minimize_bounded(|x: f32| (x - 0.25).powi(2), 0.0, 1.0, 50, 1e-5);
        assert!((x - 0.25).abs() < 1e-3);
    }
}
