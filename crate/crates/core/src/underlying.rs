//! Underlying norms on the finite-dimensional space `E`.
//!
//! Restricted to descriptions whose dual-side optimization is tractable:
//! weighted `l_r` norms, explicitly enumerated facet polytopes, and
//! ellipsoids. Each description knows its norm, its dual norm, a
//! norm-attaining dual functional, and — where the dual ball is a
//! polytope — the finite list of its extreme points, which makes suprema
//! of convex functions over the ball exact by corner enumeration.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{modulus, Scalar};

/// Cap on corner enumerations (2^(n-1) sign patterns for an l1 dual ball).
const CORNER_CAP: usize = 1 << 14;

fn unit_vec(d: usize, j: usize, value: f64) -> DVector<f64> {
    let mut v = DVector::zeros(d);
    v[j] = value;
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UnderlyingNorm {
    /// `(sum_s v_s |x_s|^r)^{1/r}`, max-weighted-modulus when `r = inf`.
    WeightedLr { r: f64, weights: Vec<f64> },
    /// Unit ball `{x : |<a_j, x>| <= 1 for all j}`; norm = max_j |<a_j, x>|.
    FacetPolytope { facets: Vec<Vec<f64>>, dim: usize },
    /// `sqrt(x^T Q x)` for symmetric positive definite `Q`.
    Ellipsoid { q: Vec<Vec<f64>> },
}

impl UnderlyingNorm {
    /// Plain `l_r^n`.
    pub fn lr(r: f64, dim: usize) -> Self {
        UnderlyingNorm::WeightedLr { r, weights: vec![1.0; dim] }
    }

    pub fn l1(dim: usize) -> Self {
        Self::lr(1.0, dim)
    }

    pub fn l2(dim: usize) -> Self {
        Self::lr(2.0, dim)
    }

    pub fn linf(dim: usize) -> Self {
        Self::lr(f64::INFINITY, dim)
    }

    /// The unique norm on a one-dimensional space.
    pub fn scalar() -> Self {
        Self::lr(2.0, 1)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            UnderlyingNorm::WeightedLr { r, weights } => {
                if !(*r >= 1.0) {
                    return Err(Error::InvalidParameter(format!("l_r exponent must be >= 1, got {r}")));
                }
                if weights.is_empty() || weights.iter().any(|w| *w <= 0.0 || !w.is_finite()) {
                    return Err(Error::InvalidParameter("l_r weights must be positive".into()));
                }
            }
            UnderlyingNorm::FacetPolytope { facets, dim } => {
                if *dim == 0 || facets.is_empty() {
                    return Err(Error::InvalidParameter("facet polytope needs dim >= 1 and facets".into()));
                }
                if facets.iter().any(|a| a.len() != *dim) {
                    return Err(Error::InvalidParameter("facet length must equal dim".into()));
                }
                let m = DMatrix::from_fn(facets.len(), *dim, |j, s| facets[j][s]);
                if m.rank(1e-10) < *dim {
                    return Err(Error::InvalidParameter(
                        "facets must span the dual space (bounded unit ball)".into(),
                    ));
                }
            }
            UnderlyingNorm::Ellipsoid { q } => {
                let n = q.len();
                if n == 0 || q.iter().any(|row| row.len() != n) {
                    return Err(Error::InvalidParameter("ellipsoid matrix must be square".into()));
                }
                let m = DMatrix::from_fn(n, n, |i, j| q[i][j]);
                if (&m - m.transpose()).amax() > 1e-10 || m.clone().cholesky().is_none() {
                    return Err(Error::InvalidParameter(
                        "ellipsoid matrix must be symmetric positive definite".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            UnderlyingNorm::WeightedLr { weights, .. } => weights.len(),
            UnderlyingNorm::FacetPolytope { dim, .. } => *dim,
            UnderlyingNorm::Ellipsoid { q } => q.len(),
        }
    }

    /// `N_E(x)`; scalar-field agnostic (moduli of the coordinates).
    pub fn norm<S: Scalar>(&self, x: &DVector<S>) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            UnderlyingNorm::WeightedLr { r, weights } => {
                if r.is_infinite() {
                    x.iter().zip(weights).map(|(c, v)| v * modulus(*c)).fold(0.0, f64::max)
                } else {
                    x.iter()
                        .zip(weights)
                        .map(|(c, v)| v * modulus(*c).powf(*r))
                        .sum::<f64>()
                        .powf(1.0 / r)
                }
            }
            UnderlyingNorm::FacetPolytope { facets, .. } => facets
                .iter()
                .map(|a| {
                    let mut acc = S::from_real_f64(0.0);
                    for (s, c) in a.iter().zip(x.iter()) {
                        acc += S::from_real_f64(*s) * *c;
                    }
                    modulus(acc)
                })
                .fold(0.0, f64::max),
            UnderlyingNorm::Ellipsoid { q } => {
                let n = self.dim();
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        // x^H Q x is real for symmetric real Q.
                        acc += q[i][j] * (x[i].conjugate() * x[j]).real();
                    }
                }
                acc.max(0.0).sqrt()
            }
        }
    }

    /// Dual norm `N_{E*}(g) = sup { <g, x> : N_E(x) <= 1 }` (plain pairing).
    pub fn dual_norm(&self, g: &DVector<f64>) -> f64 {
        match self {
            UnderlyingNorm::WeightedLr { r, weights } => {
                if *r == 1.0 {
                    g.iter().zip(weights).map(|(c, v)| c.abs() / v).fold(0.0, f64::max)
                } else if r.is_infinite() {
                    g.iter().zip(weights).map(|(c, v)| c.abs() / v).sum()
                } else {
                    let rc = r / (r - 1.0);
                    g.iter()
                        .zip(weights)
                        .map(|(c, v)| v.powf(-rc / r) * c.abs().powf(rc))
                        .sum::<f64>()
                        .powf(1.0 / rc)
                }
            }
            UnderlyingNorm::FacetPolytope { .. } => self
                .primal_ball_vertices()
                .iter()
                .map(|x| g.dot(x).abs())
                .fold(0.0, f64::max),
            UnderlyingNorm::Ellipsoid { .. } => {
                let x = self.ellipsoid_solve(g);
                (g.dot(&x)).max(0.0).sqrt()
            }
        }
    }

    /// A functional `g` with `N_{E*}(g) <= 1` and `<g, z> = N_E(z)`.
    pub fn dual_attaining(&self, z: &DVector<f64>) -> DVector<f64> {
        let n = self.norm(z);
        let d = self.dim();
        if n == 0.0 {
            return DVector::zeros(d);
        }
        match self {
            UnderlyingNorm::WeightedLr { r, weights } => {
                let mut g = DVector::zeros(d);
                if *r == 1.0 {
                    for s in 0..d {
                        g[s] = weights[s] * z[s].signum() * if z[s] == 0.0 { 0.0 } else { 1.0 };
                    }
                } else if r.is_infinite() {
                    let mut best = 0;
                    let mut best_v = -1.0;
                    for s in 0..d {
                        let v = weights[s] * z[s].abs();
                        if v > best_v {
                            best_v = v;
                            best = s;
                        }
                    }
                    g[best] = weights[best] * z[best].signum();
                } else {
                    for s in 0..d {
                        if z[s] != 0.0 {
                            g[s] = weights[s] * z[s].signum() * z[s].abs().powf(r - 1.0)
                                / n.powf(r - 1.0);
                        }
                    }
                }
                g
            }
            UnderlyingNorm::FacetPolytope { facets, .. } => {
                let mut best = 0;
                let mut best_v = -1.0;
                for (j, a) in facets.iter().enumerate() {
                    let v: f64 = a.iter().zip(z.iter()).map(|(s, c)| s * c).sum();
                    if v.abs() > best_v {
                        best_v = v.abs();
                        best = j;
                    }
                }
                let a = DVector::from_vec(facets[best].clone());
                let sign: f64 = a.dot(z).signum();
                a * sign
            }
            UnderlyingNorm::Ellipsoid { q } => {
                let dq = DMatrix::from_fn(d, d, |i, j| q[i][j]);
                (&dq * z) / n
            }
        }
    }

    /// A vector `x` with `N_E(x) <= 1` and `<g, x> = N_{E*}(g)`.
    pub fn primal_attaining(&self, g: &DVector<f64>) -> DVector<f64> {
        let d = self.dim();
        let ng = self.dual_norm(g);
        if ng == 0.0 {
            return DVector::zeros(d);
        }
        match self {
            UnderlyingNorm::WeightedLr { r, weights } => {
                let mut x = DVector::zeros(d);
                if *r == 1.0 {
                    let mut best = 0;
                    let mut best_v = -1.0;
                    for s in 0..d {
                        let v = g[s].abs() / weights[s];
                        if v > best_v {
                            best_v = v;
                            best = s;
                        }
                    }
                    x[best] = g[best].signum() / weights[best];
                } else if r.is_infinite() {
                    for s in 0..d {
                        x[s] = g[s].signum() / weights[s];
                    }
                } else {
                    let rc = r / (r - 1.0);
                    for s in 0..d {
                        if g[s] != 0.0 {
                            let a = g[s].abs() / weights[s];
                            x[s] = g[s].signum() * a.powf(rc - 1.0)
                                / (weights[s].powf(rc - 1.0) * ng.powf(rc - 1.0)).max(f64::MIN_POSITIVE);
                        }
                    }
                    // Normalize against accumulated rounding.
                    let n = self.norm(&x);
                    if n > 0.0 {
                        x /= n;
                    }
                }
                x
            }
            UnderlyingNorm::FacetPolytope { .. } => {
                let mut best: Option<DVector<f64>> = None;
                let mut best_v = f64::NEG_INFINITY;
                for v in self.primal_ball_vertices() {
                    let val = g.dot(&v);
                    if val.abs() > best_v {
                        best_v = val.abs();
                        best = Some(if val >= 0.0 { v } else { -v });
                    }
                }
                best.unwrap_or_else(|| DVector::zeros(d))
            }
            UnderlyingNorm::Ellipsoid { .. } => {
                let x = self.ellipsoid_solve(g);
                let n = self.norm(&x);
                if n > 0.0 {
                    x / n
                } else {
                    DVector::zeros(d)
                }
            }
        }
    }

    /// Extreme points of the dual ball when it is a polytope (up to sign:
    /// the returned list omits negatives). `None` for smooth balls.
    pub fn dual_ball_extremes(&self) -> Option<Vec<DVector<f64>>> {
        let d = self.dim();
        match self {
            UnderlyingNorm::WeightedLr { r, weights } => {
                if *r == 1.0 {
                    // Dual ball = weighted cube: 2^(d-1) sign corners.
                    if d > 1 && (1usize << (d - 1)) > CORNER_CAP {
                        return None;
                    }
                    let count = 1usize << d.saturating_sub(1);
                    let mut out = Vec::with_capacity(count);
                    for mask in 0..count {
                        let mut g = DVector::zeros(d);
                        g[0] = weights[0];
                        for s in 1..d {
                            let sign = if (mask >> (s - 1)) & 1 == 1 { -1.0 } else { 1.0 };
                            g[s] = sign * weights[s];
                        }
                        out.push(g);
                    }
                    Some(out)
                } else if r.is_infinite() {
                    // Dual ball = weighted cross-polytope: scaled basis vectors.
                    Some((0..d).map(|s| unit_vec(d, s, weights[s])).collect())
                } else {
                    None
                }
            }
            UnderlyingNorm::FacetPolytope { facets, .. } => Some(
                facets.iter().map(|a| DVector::from_vec(a.clone())).collect(),
            ),
            UnderlyingNorm::Ellipsoid { .. } => None,
        }
    }

    /// Extreme points of the primal unit ball when it is a polytope
    /// (up to sign). `None` for smooth balls.
    pub fn primal_ball_extremes(&self) -> Option<Vec<DVector<f64>>> {
        let d = self.dim();
        match self {
            UnderlyingNorm::WeightedLr { r, weights } => {
                if *r == 1.0 {
                    // Cross-polytope: scaled basis vectors.
                    Some((0..d).map(|s| unit_vec(d, s, 1.0 / weights[s])).collect())
                } else if r.is_infinite() {
                    if d > 1 && (1usize << (d - 1)) > CORNER_CAP {
                        return None;
                    }
                    let count = 1usize << d.saturating_sub(1);
                    let mut out = Vec::with_capacity(count);
                    for mask in 0..count {
                        let mut x = DVector::zeros(d);
                        x[0] = 1.0 / weights[0];
                        for s in 1..d {
                            let sign = if (mask >> (s - 1)) & 1 == 1 { -1.0 } else { 1.0 };
                            x[s] = sign / weights[s];
                        }
                        out.push(x);
                    }
                    Some(out)
                } else {
                    None
                }
            }
            UnderlyingNorm::FacetPolytope { .. } => Some(self.primal_ball_vertices()),
            UnderlyingNorm::Ellipsoid { .. } => None,
        }
    }

    /// `sup { ||x||_1 : N_E(x) <= 1 } = max over sign vectors of N_{E*}(eps)`.
    pub fn primal_l1_sup(&self) -> f64 {
        let d = self.dim();
        if d <= 16 {
            let mut best = 0.0f64;
            for mask in 0..(1usize << d.saturating_sub(1)) {
                let eps = DVector::from_fn(d, |s, _| {
                    if s == 0 {
                        1.0
                    } else if (mask >> (s - 1)) & 1 == 1 {
                        -1.0
                    } else {
                        1.0
                    }
                });
                best = best.max(self.dual_norm(&eps));
            }
            best
        } else {
            (0..d).map(|s| self.dual_norm(&unit_vec(d, s, 1.0))).sum()
        }
    }

    /// Factor `R` with `ball = R * (unit l2 ball)` when the ball is an
    /// ellipsoid; enables exact spectral suprema at `p = 2`.
    pub fn primal_l2_factor(&self) -> Option<DMatrix<f64>> {
        match self {
            UnderlyingNorm::WeightedLr { r, weights } if *r == 2.0 => {
                let d = weights.len();
                Some(DMatrix::from_fn(d, d, |i, j| {
                    if i == j {
                        1.0 / weights[i].sqrt()
                    } else {
                        0.0
                    }
                }))
            }
            UnderlyingNorm::Ellipsoid { q } => {
                let n = q.len();
                let m = DMatrix::from_fn(n, n, |i, j| q[i][j]);
                let chol = m.cholesky()?;
                // x = L^{-T} h has x^T Q x = ||h||^2.
                let l_inv_t = chol.l().transpose().try_inverse()?;
                Some(l_inv_t)
            }
            _ => None,
        }
    }

    /// Whitener `W` with `N_E(x) = ||W x||_2` for ellipsoidal norms.
    pub fn l2_whitener(&self) -> Option<DMatrix<f64>> {
        match self {
            UnderlyingNorm::WeightedLr { r, weights } if *r == 2.0 => {
                let d = weights.len();
                Some(DMatrix::from_fn(d, d, |i, j| {
                    if i == j {
                        weights[i].sqrt()
                    } else {
                        0.0
                    }
                }))
            }
            UnderlyingNorm::Ellipsoid { q } => {
                let n = q.len();
                let m = DMatrix::from_fn(n, n, |i, j| q[i][j]);
                Some(m.cholesky()?.l().transpose())
            }
            _ => None,
        }
    }

    /// Factor `R` with `dual ball = R * (unit l2 ball)`.
    pub fn dual_l2_factor(&self) -> Option<DMatrix<f64>> {
        match self {
            UnderlyingNorm::WeightedLr { r, weights } if *r == 2.0 => {
                let d = weights.len();
                Some(DMatrix::from_fn(d, d, |i, j| {
                    if i == j {
                        weights[i].sqrt()
                    } else {
                        0.0
                    }
                }))
            }
            UnderlyingNorm::Ellipsoid { q } => {
                let n = q.len();
                let m = DMatrix::from_fn(n, n, |i, j| q[i][j]);
                Some(m.cholesky()?.l())
            }
            _ => None,
        }
    }

    /// `sup { ||g||_1 : g in dual ball } = max over sign vectors eps of
    /// sup_{g} <eps, g> = max over sign vectors of N_E(eps)` (bidual
    /// identity). Used by envelope upper bounds when the dual ball is
    /// smooth; falls back to the coordinate-wise bound `sum_s N_E(e_s)`
    /// in high dimension.
    pub fn dual_l1_sup(&self) -> f64 {
        let d = self.dim();
        if d <= 16 {
            let mut best = 0.0f64;
            for mask in 0..(1usize << d.saturating_sub(1)) {
                let eps = DVector::from_fn(d, |s, _| {
                    if s == 0 {
                        1.0
                    } else if (mask >> (s - 1)) & 1 == 1 {
                        -1.0
                    } else {
                        1.0
                    }
                });
                best = best.max(self.norm(&eps));
            }
            best
        } else {
            (0..d).map(|s| self.norm(&unit_vec(d, s, 1.0))).sum()
        }
    }

    fn ellipsoid_solve(&self, g: &DVector<f64>) -> DVector<f64> {
        if let UnderlyingNorm::Ellipsoid { q } = self {
            let n = q.len();
            let m = DMatrix::from_fn(n, n, |i, j| q[i][j]);
            m.cholesky().expect("validated SPD").solve(g)
        } else {
            unreachable!()
        }
    }

    /// Vertices of the primal unit ball of a facet polytope, one per sign
    /// class. Exhaustive over d-subsets of facets; fine at desk dimensions.
    fn primal_ball_vertices(&self) -> Vec<DVector<f64>> {
        let UnderlyingNorm::FacetPolytope { facets, dim } = self else {
            return Vec::new();
        };
        let d = *dim;
        let m = facets.len();
        let mut verts: Vec<DVector<f64>> = Vec::new();
        let mut combo = vec![0usize; d];
        // Iterate over all d-combinations of facet indices.
        fn combos(m: usize, d: usize, start: usize, combo: &mut Vec<usize>, level: usize, out: &mut Vec<Vec<usize>>) {
            if level == d {
                out.push(combo.clone());
                return;
            }
            for j in start..m {
                combo[level] = j;
                combos(m, d, j + 1, combo, level + 1, out);
            }
        }
        let mut all = Vec::new();
        combos(m, d, 0, &mut combo, 0, &mut all);
        for subset in all {
            for signs in 0..(1usize << d) {
                let a = DMatrix::from_fn(d, d, |row, col| {
                    let sgn = if (signs >> row) & 1 == 1 { -1.0 } else { 1.0 };
                    sgn * facets[subset[row]][col]
                });
                let rhs = DVector::from_element(d, 1.0);
                let Some(x) = a.lu().solve(&rhs) else { continue };
                // Feasible for every facet?
                if self.norm(&x) <= 1.0 + 1e-9 {
                    if !verts.iter().any(|v| (v - &x).amax() < 1e-9 || (v + &x).amax() < 1e-9) {
                        verts.push(x);
                    }
                }
            }
        }
        verts
    }
}
