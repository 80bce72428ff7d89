//! Small scalar solvers shared by the game and large-system code.

use crate::error::{Error, Result};

/// Bisection on a sign change of `f` over `[lo, hi]`.
///
/// Stops when the bracket is narrower than `x_tol` (absolute) or when
/// `|f(mid)| <= f_tol`. Returns the final bracket so callers can confirm
/// the sign change.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, x_tol: f64, f_tol: f64, what: &str) -> Result<Bracket>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(Bracket { lo: a, hi: a, root: a, residual: 0.0 });
    }
    if fb == 0.0 {
        return Ok(Bracket { lo: b, hi: b, root: b, residual: 0.0 });
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::NoRoot { what: what.to_string(), lo, hi });
    }
    let mut mid = 0.5 * (a + b);
    let mut fm = f(mid);
    // 200 halvings exhaust any f64 interval.
    for _ in 0..200 {
        if fm == 0.0 || (b - a) <= x_tol && fm.abs() <= f_tol {
            break;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
        let next = 0.5 * (a + b);
        if next == a || next == b {
            break;
        }
        mid = next;
        fm = f(mid);
    }
    Ok(Bracket { lo: a, hi: b, root: mid, residual: fm })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub root: f64,
    pub residual: f64,
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_max<F>(mut f: F, lo: f64, hi: f64, x_tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > x_tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
