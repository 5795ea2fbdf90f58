//! Remez-type inequalities for a single polynomial piece.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intervals::IntervalUnion;
use crate::piecewise::Polynomial;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum RemezError {
    #[error("the comparison set has measure zero")]
    EmptySet,

    #[error("polynomial has order {order}, more than k = {k}")]
    OrderExceeded { order: usize, k: usize },

    #[error("comparison set is not contained in [{lo}, {hi}]")]
    NotInside { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemezBound {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemezLevel {
    pub threshold: f64,
    pub set: IntervalUnion,
    pub measure: f64,
    pub pass: bool,
}

fn check_order(p: &Polynomial, k: usize) -> Result<(), RemezError> {
    let order = p.degree() + 1;
    if order > k.max(1) {
        return Err(RemezError::OrderExceeded { order, k });
    }
    Ok(())
}

/// `‖p‖_{L∞(V)} ≤ (4|V|/|E|)^{k−1} ‖p‖_{L∞(E)}` with `V = [p.lo, p.hi]`.
pub fn remez_bound_check(p: &Polynomial, e: &IntervalUnion, k: usize) -> Result<RemezBound, RemezError> {
    check_order(p, k)?;
    if !e.is_subset_of(&IntervalUnion::interval(p.lo, p.hi), 0.0) {
        return Err(RemezError::NotInside { lo: p.lo, hi: p.hi });
    }
    let measure = e.measure();
    if measure <= 0.0 {
        return Err(RemezError::EmptySet);
    }
    let lhs = p.sup_norm();
    let factor = (4.0 * p.len() / measure).powi(k as i32 - 1);
    let rhs = factor * p.sup_norm_on_union(e);
    Ok(RemezBound { lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-10) })
}

/// Measure of `{x ∈ V : |p(x)| ≥ 8^{−k+1} ‖p‖_{L∞(V)}}`, which must be at least `|V|/2`.
pub fn remez_level_measure(p: &Polynomial, k: usize) -> Result<RemezLevel, RemezError> {
    check_order(p, k)?;
    let threshold = 8f64.powi(-(k as i32 - 1)) * p.sup_norm();
    let set = p.abs_level_set(threshold);
    let measure = set.measure();
    Ok(RemezLevel { threshold, pass: measure >= p.len() / 2.0 - 1e-12, set, measure })
}
