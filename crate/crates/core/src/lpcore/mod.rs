//! Weighted `L_p` linear algebra: vectors, functionals, operators,
//! proper projections, and the norm-1 projection onto a span of
//! normalized indicators.
//!
//! Conventions. A vector holds plain coefficients; its norm is the
//! weighted p-norm `(sum_i w_i |v_i|^p)^{1/p}`. A functional holds the
//! density of the pairing `<f, v> = sum_i w_i f_i v_i`, so its norm is
//! the weighted q-norm with `1/p + 1/q = 1` (max-modulus when `q` is
//! infinite). Operators act on coefficients; rectangular operators
//! between different spaces are allowed (copy embeddings, extractions).

mod opnorm;

pub use opnorm::{operator_norm, NormEstimate};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{check_pairwise_disjoint, CopiedSpace, MeasurableSubset, Space};
use crate::scalar::{modulus, Scalar};

/// Conjugate exponent `q` with `1/p + 1/q = 1`; infinite when `p = 1`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p <= 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

pub fn validate_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must lie in [1, inf), got {p}")));
    }
    Ok(())
}

/// Weighted p-norm of a coefficient slice.
pub fn weighted_p_norm<S: Scalar>(coeffs: &DVector<S>, weights: &[f64], p: f64) -> f64 {
    debug_assert_eq!(coeffs.len(), weights.len());
    let mut acc = 0.0;
    for (c, w) in coeffs.iter().zip(weights) {
        acc += w * modulus(*c).powf(p);
    }
    acc.powf(1.0 / p)
}

/// Weighted q-norm of a functional density; max-modulus when `q = inf`.
pub fn weighted_dual_norm<S: Scalar>(coeffs: &DVector<S>, weights: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        coeffs.iter().map(|c| modulus(*c)).fold(0.0, f64::max)
    } else {
        weighted_p_norm(coeffs, weights, q)
    }
}

// ---------------------------------------------------------------------------
// Vectors and functionals
// ---------------------------------------------------------------------------

/// Element of `L_p(X)` over a finite model space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpVector<S: Scalar = f64> {
    space: Space,
    p: f64,
    coeffs: DVector<S>,
}

impl<S: Scalar> LpVector<S> {
    pub fn new(space: Space, p: f64, coeffs: Vec<S>) -> Result<Self> {
        validate_p(p)?;
        if coeffs.len() != space.dim() {
            return Err(Error::ShapeMismatch(format!(
                "vector has {} coefficients, space dimension is {}",
                coeffs.len(),
                space.dim()
            )));
        }
        Ok(LpVector { space, p, coeffs: DVector::from_vec(coeffs) })
    }

    pub fn from_dvector(space: Space, p: f64, coeffs: DVector<S>) -> Result<Self> {
        Self::new(space, p, coeffs.iter().copied().collect())
    }

    pub fn zero(space: Space, p: f64) -> Self {
        let d = space.dim();
        LpVector { space, p, coeffs: DVector::from_element(d, S::from_real_f64(0.0)) }
    }

    pub fn basis(space: Space, p: f64, i: usize) -> Self {
        let mut v = Self::zero(space, p);
        v.coeffs[i] = S::from_real_f64(1.0);
        v
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn coeffs(&self) -> &DVector<S> {
        &self.coeffs
    }

    /// Weighted p-norm.
    pub fn norm(&self) -> f64 {
        weighted_p_norm(&self.coeffs, &self.space.weights(), self.p)
    }

    pub fn scale(&self, c: S) -> Self {
        LpVector { space: self.space.clone(), p: self.p, coeffs: &self.coeffs * c }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(LpVector {
            space: self.space.clone(),
            p: self.p,
            coeffs: &self.coeffs + &other.coeffs,
        })
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.space != other.space || self.p != other.p {
            return Err(Error::ShapeMismatch(
                "vectors live in different spaces or exponents".into(),
            ));
        }
        Ok(())
    }

    /// Functional of norm <= 1 with `<f, v> = ||v||` (norm-attaining).
    pub fn attaining_functional(&self) -> LpFunctional<S> {
        let n = self.norm();
        let q = conjugate_exponent(self.p);
        let d = self.coeffs.len();
        let mut f = DVector::from_element(d, S::from_real_f64(0.0));
        if n > 0.0 {
            if self.p > 1.0 {
                for i in 0..d {
                    let a = modulus(self.coeffs[i]);
                    if a > 0.0 {
                        // conj(sign(v_i)) |v_i|^{p-1} / ||v||^{p-1}
                        f[i] = self.coeffs[i].conjugate()
                            * S::from_real_f64(a.powf(self.p - 2.0) / n.powf(self.p - 1.0));
                    }
                }
            } else {
                for i in 0..d {
                    let a = modulus(self.coeffs[i]);
                    if a > 0.0 {
                        f[i] = self.coeffs[i].conjugate() * S::from_real_f64(1.0 / a);
                    }
                }
            }
        }
        LpFunctional { space: self.space.clone(), q, coeffs: f }
    }
}

/// Element of the dual `L_p(X)^*`, stored as a pairing density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpFunctional<S: Scalar = f64> {
    space: Space,
    q: f64,
    coeffs: DVector<S>,
}

impl<S: Scalar> LpFunctional<S> {
    /// Build from the base exponent `p` (the functional's own exponent is
    /// the conjugate `q`).
    pub fn new(space: Space, p: f64, coeffs: Vec<S>) -> Result<Self> {
        validate_p(p)?;
        if coeffs.len() != space.dim() {
            return Err(Error::ShapeMismatch(format!(
                "functional has {} coefficients, space dimension is {}",
                coeffs.len(),
                space.dim()
            )));
        }
        Ok(LpFunctional { space, q: conjugate_exponent(p), coeffs: DVector::from_vec(coeffs) })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn coeffs(&self) -> &DVector<S> {
        &self.coeffs
    }

    /// `<f, v> = sum_i w_i f_i v_i`.
    pub fn pair(&self, v: &LpVector<S>) -> S {
        debug_assert_eq!(self.space.dim(), v.space.dim());
        let mut acc = S::from_real_f64(0.0);
        for i in 0..self.coeffs.len() {
            acc += S::from_real_f64(self.space.weight(i)) * self.coeffs[i] * v.coeffs[i];
        }
        acc
    }

    /// Weighted q-norm (max-modulus when `q = inf`).
    pub fn norm(&self) -> f64 {
        weighted_dual_norm(&self.coeffs, &self.space.weights(), self.q)
    }

    /// Vector of norm <= 1 with `<f, xi> = ||f||` (norm-attaining).
    pub fn attaining_vector(&self, p: f64) -> LpVector<S> {
        let n = self.norm();
        let d = self.coeffs.len();
        let mut v = DVector::from_element(d, S::from_real_f64(0.0));
        if n > 0.0 {
            if self.q.is_finite() {
                for i in 0..d {
                    let a = modulus(self.coeffs[i]);
                    if a > 0.0 {
                        v[i] = self.coeffs[i].conjugate()
                            * S::from_real_f64(a.powf(self.q - 2.0) / n.powf(self.q - 1.0));
                    }
                }
            } else {
                // q = inf: place mass on a maximizing coordinate.
                let mut best = 0usize;
                let mut best_a = -1.0;
                for i in 0..d {
                    let a = modulus(self.coeffs[i]);
                    if a > best_a {
                        best_a = a;
                        best = i;
                    }
                }
                let w = self.space.weight(best);
                v[best] = self.coeffs[best].conjugate() * S::from_real_f64(1.0 / (best_a * w));
            }
        }
        LpVector { space: self.space.clone(), p, coeffs: v }
    }
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// Structural information an operator may carry; exact norm paths key off it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OpTag<S: Scalar = f64> {
    General,
    /// Pointwise multiplication by a subset indicator.
    ProperProjection(MeasurableSubset),
    /// Weight-preserving coordinate embedding; isometry for every `p`.
    ProperIsometry,
    /// `eta -> <f, eta> xi`, stored with its factors.
    RankOne { xi: DVector<S>, density: DVector<S> },
}

/// Linear operator between (possibly different) model spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpOperator<S: Scalar = f64> {
    source: Space,
    target: Space,
    matrix: DMatrix<S>,
    tag: OpTag<S>,
}

impl<S: Scalar> LpOperator<S> {
    pub fn new(source: Space, target: Space, matrix: DMatrix<S>) -> Result<Self> {
        if matrix.nrows() != target.dim() || matrix.ncols() != source.dim() {
            return Err(Error::ShapeMismatch(format!(
                "matrix is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                target.dim(),
                source.dim()
            )));
        }
        Ok(LpOperator { source, target, matrix, tag: OpTag::General })
    }

    pub fn endomorphism(space: Space, matrix: DMatrix<S>) -> Result<Self> {
        LpOperator::new(space.clone(), space, matrix)
    }

    pub fn identity(space: Space) -> Self {
        let d = space.dim();
        LpOperator {
            source: space.clone(),
            target: space,
            matrix: DMatrix::identity(d, d),
            tag: OpTag::ProperIsometry,
        }
    }

    /// Rank-one operator `eta -> <f, eta> xi`.
    pub fn rank_one(xi: &LpVector<S>, f: &LpFunctional<S>) -> Self {
        let d_t = xi.space().dim();
        let d_s = f.space().dim();
        let mut m = DMatrix::from_element(d_t, d_s, S::from_real_f64(0.0));
        for i in 0..d_t {
            for j in 0..d_s {
                m[(i, j)] = xi.coeffs()[i] * S::from_real_f64(f.space().weight(j)) * f.coeffs()[j];
            }
        }
        LpOperator {
            source: f.space().clone(),
            target: xi.space().clone(),
            matrix: m,
            tag: OpTag::RankOne { xi: xi.coeffs().clone(), density: f.coeffs().clone() },
        }
    }

    /// The copy embedding `I_j` onto copy `j` of a copied space.
    pub fn copy_embedding(cs: &CopiedSpace, j: usize) -> Self {
        let d = cs.base_dim();
        let mut m = DMatrix::from_element(cs.dim(), d, S::from_real_f64(0.0));
        for i in 0..d {
            m[(cs.coord(j, i), i)] = S::from_real_f64(1.0);
        }
        LpOperator {
            source: Space::Plain(cs.base().clone()),
            target: Space::Copied(cs.clone()),
            matrix: m,
            tag: OpTag::ProperIsometry,
        }
    }

    pub fn source(&self) -> &Space {
        &self.source
    }

    pub fn target(&self) -> &Space {
        &self.target
    }

    pub fn matrix(&self) -> &DMatrix<S> {
        &self.matrix
    }

    pub fn tag(&self) -> &OpTag<S> {
        &self.tag
    }

    pub fn apply(&self, v: &LpVector<S>) -> Result<LpVector<S>> {
        if v.space() != &self.source {
            return Err(Error::ShapeMismatch("operator applied to vector from another space".into()));
        }
        Ok(LpVector { space: self.target.clone(), p: v.p(), coeffs: &self.matrix * v.coeffs() })
    }

    pub fn compose(&self, inner: &LpOperator<S>) -> Result<LpOperator<S>> {
        if inner.target != self.source {
            return Err(Error::ShapeMismatch("composition spaces do not match".into()));
        }
        Ok(LpOperator {
            source: inner.source.clone(),
            target: self.target.clone(),
            matrix: &self.matrix * &inner.matrix,
            tag: OpTag::General,
        })
    }

    pub fn add(&self, other: &LpOperator<S>) -> Result<LpOperator<S>> {
        if self.source != other.source || self.target != other.target {
            return Err(Error::ShapeMismatch("operator sum spaces do not match".into()));
        }
        Ok(LpOperator {
            source: self.source.clone(),
            target: self.target.clone(),
            matrix: &self.matrix + &other.matrix,
            tag: OpTag::General,
        })
    }

    pub fn scale(&self, c: S) -> LpOperator<S> {
        LpOperator {
            source: self.source.clone(),
            target: self.target.clone(),
            matrix: &self.matrix * c,
            tag: OpTag::General,
        }
    }

    /// Range projection for tagged isometries: the proper projection onto
    /// the coordinates the image touches.
    pub fn range_projection(&self) -> Result<LpOperator<S>> {
        if self.tag != OpTag::ProperIsometry {
            return Err(Error::InvalidParameter("range projection needs a tagged isometry".into()));
        }
        let mut touched = Vec::new();
        for i in 0..self.matrix.nrows() {
            if (0..self.matrix.ncols()).any(|j| modulus(self.matrix[(i, j)]) > 0.0) {
                touched.push(i);
            }
        }
        let z = MeasurableSubset::new(&self.target, touched)?;
        Ok(proper_projection(&self.target, &z))
    }
}

/// Multiplication by the subset indicator: diagonal 0/1, idempotent.
pub fn proper_projection<S: Scalar>(space: &Space, z: &MeasurableSubset) -> LpOperator<S> {
    let d = space.dim();
    let mut m = DMatrix::from_element(d, d, S::from_real_f64(0.0));
    for i in z.indices() {
        m[(i, i)] = S::from_real_f64(1.0);
    }
    LpOperator {
        source: space.clone(),
        target: space.clone(),
        matrix: m,
        tag: OpTag::ProperProjection(z.clone()),
    }
}

/// Norm-1 projection onto `span{normalized indicators of Z_k}`.
///
/// The dual vectors are the canonical q-normalized indicators, so the
/// projection fixes each normalized indicator and contracts every norm
/// (its matrix is `w_j / mu(Z_k)` on the diagonal blocks of the family).
pub fn span_projection<S: Scalar>(
    space: &Space,
    subsets: &[MeasurableSubset],
    p: f64,
) -> Result<LpOperator<S>> {
    validate_p(p)?;
    if subsets.is_empty() {
        return Err(Error::InvalidParameter("span projection needs at least one subset".into()));
    }
    for z in subsets {
        if z.measure() <= 0.0 {
            return Err(Error::DegenerateSubset);
        }
    }
    check_pairwise_disjoint(subsets)?;
    let d = space.dim();
    let mut m = DMatrix::from_element(d, d, S::from_real_f64(0.0));
    for z in subsets {
        let mu = z.measure();
        for i in z.indices() {
            for j in z.indices() {
                m[(i, j)] = S::from_real_f64(space.weight(j) / mu);
            }
        }
    }
    Ok(LpOperator { source: space.clone(), target: space.clone(), matrix: m, tag: OpTag::General })
}

#[cfg(test)]
mod tests;
