//! Dense univariate polynomial kernels on coefficient slices (ascending
//! powers) and real-root isolation by derivative-guided bisection.

/// Horner evaluation.
#[inline]
pub fn eval(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * u + a)
}

/// Drops trailing exact zeros, keeping at least one coefficient.
pub fn trim(mut c: Vec<f64>) -> Vec<f64> {
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    if c.is_empty() {
        c.push(0.0);
    }
    c
}

/// Degree ignoring trailing exact zeros.
pub fn degree(c: &[f64]) -> usize {
    c.iter().rposition(|&a| a != 0.0).unwrap_or(0)
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter().enumerate().skip(1).map(|(j, &a)| j as f64 * a).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
        .collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|&x| x * s).collect()
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients of `v ↦ p(shift + factor·v)`.
pub fn compose_affine(c: &[f64], shift: f64, factor: f64) -> Vec<f64> {
    let mut out = vec![0.0; c.len()];
    // Horner with polynomial accumulator: out = out·(shift + factor v) + c_j
    let mut len = 0usize;
    for &a in c.iter().rev() {
        let mut next = vec![0.0; len + 1];
        for i in 0..len {
            next[i] += out[i] * shift;
            next[i + 1] += out[i] * factor;
        }
        next[0] += a;
        len += 1;
        out[..len].copy_from_slice(&next[..len]);
    }
    out
}

/// Exact `∫_{-1}^{1} p(u) du` from monomial moments.
pub fn integral_ref(c: &[f64]) -> f64 {
    c.iter()
        .enumerate()
        .filter(|(j, _)| j % 2 == 0)
        .map(|(j, &a)| 2.0 * a / (j as f64 + 1.0))
        .sum()
}

/// Bisection on a bracket with `f(a)·f(b) < 0` down to floating resolution.
fn bisect(c: &[f64], mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = eval(c, m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Sorted real roots of `c` in the open interval `(lo, hi)` at which `c`
/// changes sign or vanishes exactly at a critical point.
///
/// The interval is cut at the roots of the derivative (found recursively), so
/// `c` is monotone on each segment and a sign change brackets exactly one root.
pub fn roots_in(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let d = degree(c);
    match d {
        0 => Vec::new(),
        1 => {
            let r = -c[0] / c[1];
            if r > lo && r < hi {
                vec![r]
            } else {
                Vec::new()
            }
        }
        _ => {
            let c = &c[..=d];
            let crit = roots_in(&derivative(c), lo, hi);
            let mut pts = Vec::with_capacity(crit.len() + 2);
            pts.push(lo);
            pts.extend(crit.iter().copied());
            pts.push(hi);
            let vals: Vec<f64> = pts.iter().map(|&x| eval(c, x)).collect();
            let mut out = Vec::new();
            for i in 0..pts.len() - 1 {
                let (a, b) = (pts[i], pts[i + 1]);
                let (fa, fb) = (vals[i], vals[i + 1]);
                if i > 0 && fa == 0.0 {
                    out.push(a);
                    continue;
                }
                if fa != 0.0 && fb != 0.0 && (fa < 0.0) != (fb < 0.0) {
                    out.push(bisect(c, a, b, fa));
                }
            }
            out.dedup();
            out
        }
    }
}

/// Points of `[lo, hi]` where `|c|` may attain its maximum: endpoints and
/// the sign-change roots of the derivative.
pub fn extremum_candidates(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = vec![lo];
    pts.extend(roots_in(&derivative(c), lo, hi));
    pts.push(hi);
    pts
}

/// `max_{[lo,hi]} |c|` from endpoint and critical values.
pub fn max_abs_on(c: &[f64], lo: f64, hi: f64) -> f64 {
    extremum_candidates(c, lo, hi)
        .into_iter()
        .map(|u| eval(c, u).abs())
        .fold(0.0, f64::max)
}

/// `(min, max)` of `c` on `[lo, hi]`.
pub fn min_max_on(c: &[f64], lo: f64, hi: f64) -> (f64, f64) {
    extremum_candidates(c, lo, hi)
        .into_iter()
        .map(|u| eval(c, u))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}
