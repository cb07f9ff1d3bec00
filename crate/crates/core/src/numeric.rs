//! Scalar root finding, quadrature, and 1-D maximization.

use crate::error::{Error, Result};

pub const MAX_BISECTION_ITERS: usize = 200;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SUBINTERVALS: usize = 4000;

/// 15-point Kronrod estimate with the embedded 7-point Gauss error bound.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Fixed composite rule: `panels` equal GK15 panels.
pub fn composite_gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + w * i as f64;
            let hi = if i + 1 == panels { b } else { lo + w };
            gk15(f, lo, hi).0
        })
        .sum()
}

/// Globally adaptive GK15 quadrature with absolute tolerance `tol`.
///
/// Returns 0 for empty or reversed intervals.
pub fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(b > a) {
        return Ok(0.0);
    }
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    loop {
        let floor = 64.0 * f64::EPSILON * total.abs();
        if err <= tol.max(floor) {
            return Ok(total);
        }
        if parts.len() >= MAX_SUBINTERVALS {
            return Err(Error::Quadrature {
                a,
                b,
                estimate: err,
            });
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, pv, pe) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval exhausted at machine resolution
            return Err(Error::Quadrature {
                a,
                b,
                estimate: err,
            });
        }
        let (lv, le) = gk15(&f, lo, mid);
        let (rv, re) = gk15(&f, mid, hi);
        total += lv + rv - pv;
        err += le + re - pe;
        parts.push((lo, mid, lv, le));
        parts.push((mid, hi, rv, re));
        if err < 0.0 {
            err = parts.iter().map(|p| p.3).sum();
        }
    }
}

/// Adaptive quadrature over `[a, b]` split at the interior `breaks`.
pub fn quad_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<f64> {
    if !(b > a) {
        return Ok(0.0);
    }
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut lo = a;
    let mut acc = 0.0;
    let share = tol / (pts.len() + 1) as f64;
    for &x in pts.iter().chain(std::iter::once(&b)) {
        acc += quad(&f, lo, x, share)?;
        lo = x;
    }
    Ok(acc)
}

/// Bisection for a sign change of `f` on `[a, b]`.
///
/// Stops when the bracket is narrower than `xtol` or cannot be split further.
/// Returns `None` if the endpoints do not straddle zero.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Option<f64> {
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.is_nan() || fb.is_nan() || (fa > 0.0) == (fb > 0.0) {
        return None;
    }
    let neg_at_a = fa < 0.0;
    for _ in 0..MAX_BISECTION_ITERS {
        let m = 0.5 * (a + b);
        if m <= a || m >= b || b - a <= xtol {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if (fm < 0.0) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Smallest point of `[a, b]` where a monotone predicate turns true.
///
/// Requires `!pred(a)` and `pred(b)`; returns the upper end of the final bracket.
pub fn bisect_predicate<P: FnMut(f64) -> bool>(mut pred: P, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    for _ in 0..MAX_BISECTION_ITERS {
        let m = 0.5 * (a + b);
        if m <= a || m >= b || b - a <= xtol {
            break;
        }
        if pred(m) {
            b = m;
        } else {
            a = m;
        }
    }
    b
}

/// Golden-section maximization on `[a, b]`; returns `(argmax, max)`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
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
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .max_by(|p, q| p.1.total_cmp(&q.1))
        .expect("three candidates")
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// `n` log-spaced points from `a` to `b` inclusive; both ends are exact.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    let mut xs: Vec<f64> = linspace(la, lb, n).into_iter().map(f64::exp).collect();
    if let Some(first) = xs.first_mut() {
        *first = a;
    }
    if n > 1 {
        xs[n - 1] = b;
    }
    xs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_constant() {
        assert!((quad(|_| 1.0, 0.0, 1.0, 1e-12).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quad_affine_payoff() {
        let v = quad(|t| (t - 11.0) / 10.0, 5.0, 15.0, 1e-12).unwrap();
        assert!((v + 1.0).abs() < 1e-12);
    }

    #[test]
    fn quad_weighted_payoff() {
        let v = quad(|t| (t - 11.0) / 10.0 / t, 5.0, 15.0, 1e-12).unwrap();
        assert!((v - (1.0 - 1.1 * 3f64.ln())).abs() < 1e-12);
        assert!((v + 0.20847).abs() < 1e-5);
    }

    #[test]
    fn quad_polynomials_match_closed_form() {
        for k in 0..8 {
            let exact = (2f64.powi(k + 1) - (-1f64).powi(k + 1)) / (k + 1) as f64;
            let v = quad(|x| x.powi(k), -1.0, 2.0, 1e-12).unwrap();
            assert!((v - exact).abs() < 1e-10, "degree {k}");
        }
    }

    #[test]
    fn quad_handles_kinks_when_split() {
        let v = quad_split(|x: f64| x.abs(), -1.0, 2.0, &[0.0], 1e-13).unwrap();
        assert!((v - 2.5).abs() < 1e-13);
    }

    #[test]
    fn quad_reports_nonconvergence() {
        let r = quad(|x: f64| 1.0 / x.abs().sqrt().max(1e-300) * (1.0 / x).sin(), -1.0, 1.0, 1e-15);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-14).is_none());
    }

    #[test]
    fn predicate_boundary() {
        let r = bisect_predicate(|x| x >= 0.3, 0.0, 1.0, 0.0);
        assert!((r - 0.3).abs() < 1e-15);
    }

    #[test]
    fn golden_section_parabola() {
        let (x, fx) = golden_max(|x| -(x - 0.7) * (x - 0.7) + 2.0, 0.0, 3.0, 1e-10);
        assert!((x - 0.7).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-15);
    }

    #[test]
    fn logspace_endpoints_exact() {
        let xs = logspace(0.3, 30.0, 60);
        assert_eq!(xs.len(), 60);
        assert_eq!(xs[0], 0.3);
        assert_eq!(xs[59], 30.0);
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
    }
}
