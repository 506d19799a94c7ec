//! Operator p-norm brackets.
//!
//! `p = 1` has an exact weighted column form and `p = 2` an exact spectral
//! form (after conjugating the weights away). For other `p` the norm is
//! nonconvex, so we report a bracket: the lower bound is the best ratio
//! found by a dual power iteration with deterministic restarts, the upper
//! bound the minimum of the Riesz–Thorin interpolation bound
//! `||a||_1^{1/p} ||a||_inf^{1-1/p}` and the dimension-factor bound from
//! the spectral norm.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng;

use super::{conjugate_exponent, validate_p, LpOperator, OpTag};

/// A certified `[lower, upper]` bracket with provenance tags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub lower: f64,
    pub upper: f64,
    pub method_tags: Vec<String>,
}

impl NormEstimate {
    pub fn new(lower: f64, upper: f64, tags: Vec<String>) -> Self {
        assert!(
            lower.is_finite() && upper.is_finite() && lower <= upper + 1e-9,
            "invalid bracket [{lower}, {upper}]"
        );
        NormEstimate { lower, upper: upper.max(lower), method_tags: tags }
    }

    pub fn exact(value: f64, tag: &str) -> Self {
        NormEstimate::new(value, value, vec![tag.to_string()])
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64, tol: f64) -> bool {
        self.lower - tol <= value && value <= self.upper + tol
    }

    /// Bracket of a product of two nonnegative bracketed quantities.
    pub fn product(&self, other: &NormEstimate) -> NormEstimate {
        let mut tags = self.method_tags.clone();
        tags.extend(other.method_tags.iter().cloned());
        NormEstimate::new(self.lower * other.lower, self.upper * other.upper, tags)
    }

    pub fn scale(&self, c: f64) -> NormEstimate {
        assert!(c >= 0.0);
        NormEstimate::new(self.lower * c, self.upper * c, self.method_tags.clone())
    }

    /// `(sum_k b_k^p)^{1/p}` applied to both endpoints.
    pub fn p_sum(brackets: &[NormEstimate], p: f64) -> NormEstimate {
        let lo = brackets.iter().map(|b| b.lower.powf(p)).sum::<f64>().powf(1.0 / p);
        let up = brackets.iter().map(|b| b.upper.powf(p)).sum::<f64>().powf(1.0 / p);
        NormEstimate::new(lo, up, vec!["p-sum".into()])
    }

    /// Keep the better half of each side (both must bracket the same value).
    pub fn intersect(&self, other: &NormEstimate) -> NormEstimate {
        let lower = self.lower.max(other.lower);
        let upper = self.upper.min(other.upper);
        let mut tags = self.method_tags.clone();
        tags.extend(other.method_tags.iter().cloned());
        // Numerical slack may cross the endpoints; widen rather than invent.
        NormEstimate::new(lower.min(upper), upper.max(lower), tags)
    }

    pub fn with_tag(mut self, tag: &str) -> NormEstimate {
        self.method_tags.push(tag.to_string());
        self
    }
}

/// Weights of source/target conjugated into the matrix:
/// `a~ = W_t^{1/p} A W_s^{-1/p}`, so unweighted `l_p -> l_p` analysis applies.
fn conjugated_signed(a: &LpOperator<f64>, p: f64) -> DMatrix<f64> {
    let ws = a.source().weights();
    let wt = a.target().weights();
    let mut m = a.matrix().clone();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            m[(i, j)] *= wt[i].powf(1.0 / p) / ws[j].powf(1.0 / p);
        }
    }
    m
}

fn unweighted_p_norm(v: &DVector<f64>, p: f64) -> f64 {
    v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Exact weighted `||a||_{L1 -> L1} = max_j sum_i w_i |a_ij| / w_j`.
fn weighted_norm_1(a: &LpOperator<f64>) -> f64 {
    let ws = a.source().weights();
    let wt = a.target().weights();
    let m = a.matrix();
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| wt[i] * m[(i, j)].abs()).sum::<f64>() / ws[j])
        .fold(0.0, f64::max)
}

/// Exact `||a||_{Linf -> Linf} = max_i sum_j |a_ij|` (weights drop out).
fn sup_norm_inf(a: &LpOperator<f64>) -> f64 {
    let m = a.matrix();
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let svd = m.clone().svd(false, false);
    svd.singular_values.iter().copied().fold(0.0, f64::max)
}

/// One Boyd/Higham dual power pass from `x`; returns the best ratio seen.
fn power_ascent(m: &DMatrix<f64>, p: f64, x0: DVector<f64>, max_iter: usize) -> f64 {
    let q = conjugate_exponent(p);
    let mut x = x0;
    let nx = unweighted_p_norm(&x, p);
    if nx == 0.0 {
        return 0.0;
    }
    x /= nx;
    let mut best = 0.0f64;
    for _ in 0..max_iter {
        let y = m * &x;
        let ny = unweighted_p_norm(&y, p);
        if ny <= best + 1e-15 {
            best = best.max(ny);
            break;
        }
        best = ny;
        // Dual vector of y in l_p, then pull back and dualize in l_q.
        let mut psi = y;
        for v in psi.iter_mut() {
            *v = v.signum() * v.abs().powf(p - 1.0);
        }
        let z = m.transpose() * psi;
        let mut xn = z;
        if q.is_finite() {
            for v in xn.iter_mut() {
                *v = v.signum() * v.abs().powf(q - 1.0);
            }
        } else {
            // p = 1: concentrate on a maximizing coordinate.
            let mut bi = 0;
            let mut ba = -1.0;
            for (i, v) in xn.iter().enumerate() {
                if v.abs() > ba {
                    ba = v.abs();
                    bi = i;
                }
            }
            let s = xn[bi].signum();
            xn.fill(0.0);
            xn[bi] = s;
        }
        let nn = unweighted_p_norm(&xn, p);
        if nn == 0.0 {
            break;
        }
        x = xn / nn;
    }
    best
}

/// Certified lower bound on the unweighted p-norm via restarts.
fn power_lower(m: &DMatrix<f64>, p: f64, restarts: usize, seed: u64) -> f64 {
    let d = m.ncols();
    if d == 0 || m.nrows() == 0 {
        return 0.0;
    }
    // Structured starts: all basis vectors and the all-ones vector.
    let mut starts: Vec<DVector<f64>> =
        (0..d).map(|j| DVector::from_fn(d, |i, _| if i == j { 1.0 } else { 0.0 })).collect();
    starts.push(DVector::from_element(d, 1.0));
    let structured = starts
        .into_iter()
        .map(|x0| power_ascent(m, p, x0, 64))
        .fold(0.0, f64::max);
    let random = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::rng(seed, "opnorm-restart", k as u64);
            let x0 = DVector::from_fn(d, |_, _| r.gen_range(-1.0..1.0));
            power_ascent(m, p, x0, 64)
        })
        .reduce(|| 0.0, f64::max);
    structured.max(random)
}

/// Two-sided bracket for the weighted `L_p -> L_p` operator norm.
///
/// Exact for `p` in `{1, 2}` and for tagged projections, isometries, and
/// rank-one operators; otherwise a power-iteration lower bound paired with
/// interpolation and dimension-factor upper bounds.
pub fn operator_norm(a: &LpOperator<f64>, p: f64) -> Result<NormEstimate> {
    validate_p(p)?;
    match a.tag() {
        OpTag::ProperProjection(z) => {
            let v = if z.is_empty() { 0.0 } else { 1.0 };
            return Ok(NormEstimate::exact(v, "proper-projection"));
        }
        OpTag::ProperIsometry => return Ok(NormEstimate::exact(1.0, "proper-isometry")),
        OpTag::RankOne { xi, density } => {
            let q = conjugate_exponent(p);
            let nx = super::weighted_p_norm(xi, &a.target().weights(), p);
            let nf = super::weighted_dual_norm(density, &a.source().weights(), q);
            return Ok(NormEstimate::exact(nx * nf, "rank-one"));
        }
        OpTag::General => {}
    }

    if p == 1.0 {
        return Ok(NormEstimate::exact(weighted_norm_1(a), "exact-p1"));
    }
    if p == 2.0 {
        return Ok(NormEstimate::exact(spectral_norm(&conjugated_signed(a, 2.0)), "exact-spectral"));
    }

    let interp = weighted_norm_1(a).powf(1.0 / p) * sup_norm_inf(a).powf(1.0 - 1.0 / p);
    let s2 = spectral_norm(&conjugated_signed(a, 2.0));
    let dim_factor = {
        // ||x||_2 <-> ||x||_p conversion constants on both sides.
        let ds = a.matrix().ncols() as f64;
        let dt = a.matrix().nrows() as f64;
        let from_p = if p < 2.0 { 1.0 } else { ds.powf(0.5 - 1.0 / p) };
        let to_p = if p > 2.0 { 1.0 } else { dt.powf(1.0 / p - 0.5) };
        from_p * to_p * s2
    };
    let upper = interp.min(dim_factor);
    let lower = power_lower(&conjugated_signed(a, p), p, 32, 0x5eed).min(upper);
    Ok(NormEstimate::new(lower, upper, vec!["power-lower".into(), "interp/dim-upper".into()]))
}

impl LpOperator<f64> {
    /// Convenience: bracket of this operator's p-norm.
    pub fn norm_bracket(&self, p: f64) -> Result<NormEstimate> {
        operator_norm(self, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_validation() {
        let e = NormEstimate::new(1.0, 2.0, vec![]);
        assert!(e.contains(1.5, 0.0));
        assert!(!e.contains(2.5, 0.1));
        let s = NormEstimate::p_sum(&[NormEstimate::exact(3.0, "t"), NormEstimate::exact(4.0, "t")], 2.0);
        assert!((s.lower - 5.0).abs() < 1e-12 && (s.upper - 5.0).abs() < 1e-12);
    }

    #[test]
    #[should_panic]
    fn inverted_bracket_panics() {
        let _ = NormEstimate::new(2.0, 1.0, vec![]);
    }
}
