//! Gauss–Legendre rules (cached) and an adaptive bisecting integrator.

use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use thiserror::Error;

const MAX_CACHED: usize = 128;

static RULES: [OnceLock<Vec<(f64, f64)>>; MAX_CACHED + 1] = [const { OnceLock::new() }; MAX_CACHED + 1];

/// Nodes and weights of the `n`-point rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    assert!((1..=MAX_CACHED).contains(&n), "Gauss-Legendre rule size {n} unsupported");
    RULES[n].get_or_init(|| {
        let rule = GaussLegendre::new(n.try_into().unwrap());
        let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        pairs
    })
}

/// Number of nodes integrating degree `d` exactly: `⌈(d + 1) / 2⌉`.
pub fn nodes_for_degree(d: usize) -> usize {
    (d + 2) / 2
}

/// Fixed rule on `[a, b]`.
pub fn fixed<F: FnMut(f64) -> f64>(n: usize, a: f64, b: f64, mut f: F) -> f64 {
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    h * gauss_legendre(n).iter().map(|&(x, w)| w * f(m + h * x)).sum::<f64>()
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("adaptive quadrature did not converge on [{a}, {b}] within depth {depth}")]
    NonConvergence { a: f64, b: f64, depth: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub max_depth: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_depth: 40 }
    }
}

const ADAPTIVE_NODES: usize = 10;

/// Adaptive bisection of a 10-point rule. `scale` is the magnitude the
/// relative tolerance refers to (typically a coarse estimate of the total
/// integral over the whole domain); segments split the tolerance in half.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    scale: f64,
    opts: QuadOptions,
) -> Result<f64, QuadratureError> {
    if b <= a {
        return Ok(0.0);
    }
    let whole = fixed(ADAPTIVE_NODES, a, b, f);
    let tol = opts.rel_tol * scale.abs().max(whole.abs()).max(f64::MIN_POSITIVE);
    recurse(f, a, b, whole, tol, 0, opts.max_depth)
}

fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    max_depth: usize,
) -> Result<f64, QuadratureError> {
    let m = 0.5 * (a + b);
    let left = fixed(ADAPTIVE_NODES, a, m, f);
    let right = fixed(ADAPTIVE_NODES, m, b, f);
    let both = left + right;
    let err = (both - whole).abs();
    if err <= tol || err <= 4.0 * f64::EPSILON * both.abs() {
        return Ok(both);
    }
    if depth >= max_depth || m <= a || m >= b {
        return Err(QuadratureError::NonConvergence { a, b, depth });
    }
    Ok(recurse(f, a, m, left, 0.5 * tol, depth + 1, max_depth)?
        + recurse(f, m, b, right, 0.5 * tol, depth + 1, max_depth)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rules_are_exact_on_monomials() {
        for n in 1..12 {
            for j in 0..2 * n {
                let got: f64 = gauss_legendre(n).iter().map(|&(x, w)| w * x.powi(j as i32)).sum();
                let want = if j % 2 == 0 { 2.0 / (j as f64 + 1.0) } else { 0.0 };
                assert_abs_diff_eq!(got, want, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let f = |x: f64| x.powf(1.5);
        let got = adaptive(&f, 0.0, 1.0, 1.0, QuadOptions::default()).unwrap();
        assert_abs_diff_eq!(got, 0.4, epsilon = 1e-10);
        let g = |x: f64| x.sqrt();
        let got = adaptive(&g, 0.0, 1.0, 1.0, QuadOptions::default()).unwrap();
        assert_abs_diff_eq!(got, 2.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn adaptive_reports_nonconvergence() {
        let f = |x: f64| if x < 1.0 / 3.0 { 0.0 } else { 1e6 };
        let opts = QuadOptions { rel_tol: 1e-16, max_depth: 3 };
        assert!(adaptive(&f, 0.0, 1.0, 1.0, opts).is_err());
    }
}
