//! Composite rules on uniform grids and a bracketing root finder.

use crate::error::{Error, Result};

/// Composite Simpson over uniformly spaced samples.
///
/// An odd number of intervals closes with the 3/8 rule on the last three;
/// two samples fall back to the trapezoid.
pub fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len().saturating_sub(1);
    match n {
        0 => 0.0,
        1 => 0.5 * h * (y[0] + y[1]),
        _ if n.is_multiple_of(2) => simpson_even(y, h),
        2 => unreachable!(),
        _ => {
            let m = n - 3;
            let tail = &y[m..];
            simpson_even(&y[..=m], h)
                + 3.0 * h / 8.0 * (tail[0] + 3.0 * tail[1] + 3.0 * tail[2] + tail[3])
        }
    }
}

fn simpson_even(y: &[f64], h: f64) -> f64 {
    let n = y.len() - 1;
    if n == 0 {
        return 0.0;
    }
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, v) in y.iter().enumerate().take(n).skip(1) {
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (y[0] + y[n] + 4.0 * odd + 2.0 * even)
}

/// Brent's method on a sign-changing bracket.
///
/// Stops once the bracket is narrower than `xtol` (plus a relative machine
/// epsilon term) or the function vanishes exactly.
pub fn brent<F>(mut f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
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
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            // inverse quadratic interpolation, or secant when only two points
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::IterationLimit(max_iter))
}
