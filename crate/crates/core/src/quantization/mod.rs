//! Amplifications `L ⊗ E` with attached norm structures.
//!
//! A [`QuantizedSpace`] couples an `L`-side (a model space with exponent
//! `p`) with a norm structure on the amplification: minimal (injective),
//! maximal (projective), vector-valued, the standard extension of another
//! structure over a copy space, a norm induced through the first-copy
//! embedding, or the computed p-convex tensor structure (evaluated by the
//! tensor layer). Elements are coefficient matrices with one row per
//! `L`-coordinate.

mod norms;

pub use norms::{
    amplified_norm, amplified_norm_with, amplify_apply, amplify_operator, sup_over_dual_ball,
    sup_over_primal_ball, underlying_operator_norm, PNormSpec,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lpcore::{
    conjugate_exponent, validate_p, weighted_dual_norm, LpFunctional, LpOperator, LpVector,
};
use crate::measure::{CopiedSpace, MeasurableSubset, Space};
use crate::scalar::{modulus, Scalar};
use crate::underlying::UnderlyingNorm;

/// Budget knobs for the optimization-backed norm evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptBudget {
    pub restarts: usize,
    pub iters: usize,
}

impl Default for OptBudget {
    fn default() -> Self {
        OptBudget { restarts: 32, iters: 60 }
    }
}

impl OptBudget {
    pub fn light() -> Self {
        OptBudget { restarts: 8, iters: 30 }
    }
}

/// Configuration for the computed p-convex tensor structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSettings {
    /// Truncation of the copy space used for routing and the induced norm.
    pub copies: usize,
    /// Coordinate pairing of the canonical diamond.
    pub pairing: PairingKind,
    /// Alternating-search restarts for the upper bound.
    pub restarts: usize,
}

impl Default for TensorSettings {
    fn default() -> Self {
        TensorSettings { copies: 8, pairing: PairingKind::Cantor, restarts: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QuantKind {
    /// Injective structure: `sup_{g in dual ball} ||U g||_p`.
    Min { underlying: UnderlyingNorm },
    /// Projective structure: `inf sum ||xi_k|| N(x_k)` over decompositions.
    Max { underlying: UnderlyingNorm },
    /// `L_p(X, E)` row-wise structure.
    VectorValued { underlying: UnderlyingNorm },
    /// p-sum of per-copy inner norms over a copy space.
    StandardExtension { inner: Box<QuantizedSpace> },
    /// Norm pulled back through the first-copy embedding into `inner`.
    Induced { inner: Box<QuantizedSpace> },
    /// The computed p-convex tensor structure on `E (x) F`.
    PConvexTensor {
        left: Box<QuantizedSpace>,
        right: Box<QuantizedSpace>,
        settings: TensorSettings,
    },
}

impl QuantKind {
    pub fn name(&self) -> &'static str {
        match self {
            QuantKind::Min { .. } => "min",
            QuantKind::Max { .. } => "max",
            QuantKind::VectorValued { .. } => "vector-valued",
            QuantKind::StandardExtension { .. } => "standard-extension",
            QuantKind::Induced { .. } => "induced",
            QuantKind::PConvexTensor { .. } => "p-convex-tensor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedSpace {
    base: Space,
    p: f64,
    kind: QuantKind,
}

impl QuantizedSpace {
    pub fn min(base: Space, p: f64, underlying: UnderlyingNorm) -> Result<Self> {
        validate_p(p)?;
        underlying.validate()?;
        Ok(QuantizedSpace { base, p, kind: QuantKind::Min { underlying } })
    }

    pub fn max(base: Space, p: f64, underlying: UnderlyingNorm) -> Result<Self> {
        validate_p(p)?;
        underlying.validate()?;
        Ok(QuantizedSpace { base, p, kind: QuantKind::Max { underlying } })
    }

    pub fn vector_valued(base: Space, p: f64, underlying: UnderlyingNorm) -> Result<Self> {
        validate_p(p)?;
        underlying.validate()?;
        Ok(QuantizedSpace { base, p, kind: QuantKind::VectorValued { underlying } })
    }

    /// The one-dimensional underlying space has a unique quantization; the
    /// amplification is `L` itself.
    pub fn scalar_quantization(base: Space, p: f64) -> Self {
        QuantizedSpace::min(base, p, UnderlyingNorm::scalar()).expect("valid")
    }

    /// Standard extension over `copies` copies of the inner base.
    pub fn standard_extension(inner: QuantizedSpace, copies: usize) -> Result<Self> {
        let cs = CopiedSpace::over(&inner.base, copies)?;
        Ok(QuantizedSpace {
            base: Space::Copied(cs),
            p: inner.p,
            kind: QuantKind::StandardExtension { inner: Box::new(inner) },
        })
    }

    /// Norm on amplifications over `base` induced by `J` into `inner`,
    /// whose base must be a copy space over `base`.
    pub fn induced(base: Space, inner: QuantizedSpace) -> Result<Self> {
        let Space::Copied(cs) = &inner.base else {
            return Err(Error::InvalidParameter(
                "induced structure needs an inner host over a copy space".into(),
            ));
        };
        if cs.base() != &base.flattened() {
            return Err(Error::ShapeMismatch(
                "inner copy space must be built over the induced base".into(),
            ));
        }
        let p = inner.p;
        Ok(QuantizedSpace { base, p, kind: QuantKind::Induced { inner: Box::new(inner) } })
    }

    /// The computed p-convex tensor structure on `E (x) F` over the
    /// factors' common base. Evaluated by the tensor layer.
    pub fn p_convex_tensor(
        left: QuantizedSpace,
        right: QuantizedSpace,
        settings: TensorSettings,
    ) -> Result<Self> {
        if left.base != right.base || left.p != right.p {
            return Err(Error::ShapeMismatch(
                "tensor factors must share base space and exponent".into(),
            ));
        }
        let base = left.base.clone();
        let p = left.p;
        Ok(QuantizedSpace {
            base,
            p,
            kind: QuantKind::PConvexTensor {
                left: Box::new(left),
                right: Box::new(right),
                settings,
            },
        })
    }

    pub fn base(&self) -> &Space {
        &self.base
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn kind(&self) -> &QuantKind {
        &self.kind
    }

    /// Dimension of the underlying space `E`.
    pub fn underlying_dim(&self) -> usize {
        match &self.kind {
            QuantKind::Min { underlying }
            | QuantKind::Max { underlying }
            | QuantKind::VectorValued { underlying } => underlying.dim(),
            QuantKind::StandardExtension { inner } | QuantKind::Induced { inner } => {
                inner.underlying_dim()
            }
            QuantKind::PConvexTensor { left, right, .. } => {
                left.underlying_dim() * right.underlying_dim()
            }
        }
    }

    /// The explicit underlying norm, when the kind carries one.
    pub fn underlying(&self) -> Option<&UnderlyingNorm> {
        match &self.kind {
            QuantKind::Min { underlying }
            | QuantKind::Max { underlying }
            | QuantKind::VectorValued { underlying } => Some(underlying),
            QuantKind::StandardExtension { inner } | QuantKind::Induced { inner } => {
                inner.underlying()
            }
            QuantKind::PConvexTensor { .. } => None,
        }
    }

    /// Same structure transported to another `L`-side; used by module
    /// actions along rectangular operators.
    pub(crate) fn with_base(&self, base: Space) -> QuantizedSpace {
        QuantizedSpace { base, p: self.p, kind: self.kind.clone() }
    }
}

// ---------------------------------------------------------------------------
// Elements
// ---------------------------------------------------------------------------

/// `u in LE`: one row per `L`-coordinate, one column per `E`-coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplifiedElement<S: Scalar = f64> {
    host: QuantizedSpace,
    data: DMatrix<S>,
}

impl<S: Scalar> AmplifiedElement<S> {
    pub fn new(host: QuantizedSpace, data: DMatrix<S>) -> Result<Self> {
        if data.nrows() != host.base().dim() || data.ncols() != host.underlying_dim() {
            return Err(Error::ShapeMismatch(format!(
                "element is {}x{}, host expects {}x{}",
                data.nrows(),
                data.ncols(),
                host.base().dim(),
                host.underlying_dim()
            )));
        }
        Ok(AmplifiedElement { host, data })
    }

    pub fn zero(host: QuantizedSpace) -> Self {
        let rows = host.base().dim();
        let cols = host.underlying_dim();
        AmplifiedElement { host, data: DMatrix::from_element(rows, cols, S::from_real_f64(0.0)) }
    }

    /// Elementary tensor `xi (x) x`.
    pub fn elementary(host: QuantizedSpace, xi: &LpVector<S>, x: &DVector<S>) -> Result<Self> {
        if xi.space() != host.base() {
            return Err(Error::ShapeMismatch("elementary tensor: wrong L-side space".into()));
        }
        if x.len() != host.underlying_dim() {
            return Err(Error::ShapeMismatch("elementary tensor: wrong E-side dimension".into()));
        }
        let data = DMatrix::from_fn(xi.space().dim(), x.len(), |i, s| xi.coeffs()[i] * x[s]);
        Ok(AmplifiedElement { host, data })
    }

    pub fn host(&self) -> &QuantizedSpace {
        &self.host
    }

    pub fn data(&self) -> &DMatrix<S> {
        &self.data
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.host != other.host {
            return Err(Error::ShapeMismatch("element sum hosts differ".into()));
        }
        Ok(AmplifiedElement { host: self.host.clone(), data: &self.data + &other.data })
    }

    pub fn scale(&self, c: S) -> Self {
        AmplifiedElement { host: self.host.clone(), data: &self.data * c }
    }

    /// Smallest proper projection fixing the element: the set of nonzero
    /// rows. Returns the empty subset for the zero element.
    pub fn support(&self) -> MeasurableSubset {
        let rows: Vec<usize> = (0..self.data.nrows())
            .filter(|&i| (0..self.data.ncols()).any(|s| modulus(self.data[(i, s)]) > 0.0))
            .collect();
        if rows.is_empty() {
            MeasurableSubset::empty(self.host.base())
        } else {
            MeasurableSubset::new(self.host.base(), rows).expect("rows are in range")
        }
    }
}

/// `(a (x) id_E) u`; rectangular operators re-base the host.
pub fn module_action<S: Scalar>(
    a: &LpOperator<S>,
    u: &AmplifiedElement<S>,
) -> Result<AmplifiedElement<S>> {
    if a.source() != u.host().base() {
        return Err(Error::ShapeMismatch("module action: operator source != element base".into()));
    }
    let data = a.matrix() * u.data();
    let host = if a.target() == a.source() {
        u.host().clone()
    } else {
        u.host().with_base(a.target().clone())
    };
    Ok(AmplifiedElement { host, data })
}

/// `(f (x) id_E) u`: contract the `L`-side with a functional, leaving a
/// vector in `E` (coefficients `y_s = sum_i w_i f_i U_{is}`).
pub fn l_contraction<S: Scalar>(f: &LpFunctional<S>, u: &AmplifiedElement<S>) -> Result<DVector<S>> {
    if f.space() != u.host().base() {
        return Err(Error::ShapeMismatch("contraction: functional space != element base".into()));
    }
    let rows = u.data().nrows();
    let cols = u.data().ncols();
    let mut y = DVector::from_element(cols, S::from_real_f64(0.0));
    for s in 0..cols {
        let mut acc = S::from_real_f64(0.0);
        for i in 0..rows {
            acc += S::from_real_f64(f.space().weight(i)) * f.coeffs()[i] * u.data()[(i, s)];
        }
        y[s] = acc;
    }
    Ok(y)
}

/// `(sum_m ||f_m||_q^q)^{1/q}` — the dual norm of the standard extension
/// (max over components when `q` is infinite).
pub fn extension_dual_norm(components: &[LpFunctional]) -> Result<f64> {
    if components.is_empty() {
        return Ok(0.0);
    }
    let q = components[0].q();
    if components.iter().any(|f| f.q() != q) {
        return Err(Error::ShapeMismatch("extension components have mixed exponents".into()));
    }
    if q.is_infinite() {
        Ok(components.iter().map(|f| f.norm()).fold(0.0, f64::max))
    } else {
        Ok(components.iter().map(|f| f.norm().powf(q)).sum::<f64>().powf(1.0 / q))
    }
}

// ---------------------------------------------------------------------------
// Diamond operations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairingKind {
    /// `(s+t)(s+t+1)/2 + t`.
    Cantor,
    /// `s * dim + t`.
    RowMajor,
}

impl PairingKind {
    pub fn index(&self, s: usize, t: usize, dim: usize) -> usize {
        match self {
            PairingKind::Cantor => (s + t) * (s + t + 1) / 2 + t,
            PairingKind::RowMajor => s * dim + t,
        }
    }

    fn max_index(&self, dim: usize) -> usize {
        match self {
            PairingKind::Cantor => self.index(dim - 1, dim - 1, dim),
            PairingKind::RowMajor => dim * dim - 1,
        }
    }
}

/// A norm-one bilinear pairing `L x L -> L_p(target)` given by an injective
/// coordinate pairing and a weight-compensating scale rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiamondOp {
    source: Space,
    target: Space,
    p: f64,
    pairing: Vec<Vec<usize>>,
    scales: Vec<Vec<f64>>,
}

impl DiamondOp {
    /// Canonical diamond: pairing injection into enough copies of the
    /// source, `scale(s,t) = (w_s w_t / w_sigma)^{1/p}`, which makes the
    /// cross identity `||xi <> eta|| = ||xi|| ||eta||` exact.
    pub fn canonical(source: &Space, p: f64, kind: PairingKind) -> Result<DiamondOp> {
        validate_p(p)?;
        let d = source.dim();
        let needed = kind.max_index(d) + 1;
        let copies = needed.div_ceil(d);
        let target = Space::Copied(CopiedSpace::over(source, copies)?);
        DiamondOp::with_target(source.clone(), target, p, kind)
    }

    /// Diamond into an explicitly chosen target; errors when the pairing
    /// image does not fit.
    pub fn with_target(source: Space, target: Space, p: f64, kind: PairingKind) -> Result<DiamondOp> {
        validate_p(p)?;
        let d = source.dim();
        let needed = kind.max_index(d) + 1;
        if needed > target.dim() {
            return Err(Error::DiamondOverflow { needed, dim: target.dim() });
        }
        let mut pairing = vec![vec![0usize; d]; d];
        let mut scales = vec![vec![0f64; d]; d];
        let mut seen = vec![false; target.dim()];
        for s in 0..d {
            for t in 0..d {
                let idx = kind.index(s, t, d);
                if seen[idx] {
                    return Err(Error::InvalidParameter(format!(
                        "pairing is not injective at target coordinate {idx}"
                    )));
                }
                seen[idx] = true;
                pairing[s][t] = idx;
                scales[s][t] =
                    (source.weight(s) * source.weight(t) / target.weight(idx)).powf(1.0 / p);
            }
        }
        Ok(DiamondOp { source, target, p, pairing, scales })
    }

    /// Replace the canonical scale rule; the bilinear norm is then no
    /// longer 1 by construction (see [`bilinear_norm`](Self::bilinear_norm)).
    pub fn with_scales(mut self, scales: Vec<Vec<f64>>) -> Result<DiamondOp> {
        let d = self.source.dim();
        if scales.len() != d || scales.iter().any(|row| row.len() != d) {
            return Err(Error::ShapeMismatch("scale table must be dim x dim".into()));
        }
        self.scales = scales;
        Ok(self)
    }

    pub fn source(&self) -> &Space {
        &self.source
    }

    pub fn target(&self) -> &Space {
        &self.target
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `xi <> eta` on plain vectors.
    pub fn apply_vectors<S: Scalar>(&self, xi: &LpVector<S>, eta: &LpVector<S>) -> Result<LpVector<S>> {
        if xi.space() != &self.source || eta.space() != &self.source {
            return Err(Error::ShapeMismatch("diamond arguments live off the source space".into()));
        }
        let d = self.source.dim();
        let mut out = vec![S::from_real_f64(0.0); self.target.dim()];
        for s in 0..d {
            for t in 0..d {
                let c = xi.coeffs()[s] * eta.coeffs()[t] * S::from_real_f64(self.scales[s][t]);
                out[self.pairing[s][t]] += c;
            }
        }
        LpVector::new(self.target.clone(), self.p, out)
    }

    /// Exact bilinear norm: with injective pairing the norm is
    /// `max_{s,t} (w_sigma scale^p / (w_s w_t))^{1/p}` (1 for the
    /// canonical rule).
    pub fn bilinear_norm(&self) -> f64 {
        let d = self.source.dim();
        let mut best = 0.0f64;
        for s in 0..d {
            for t in 0..d {
                let c = self.target.weight(self.pairing[s][t]) * self.scales[s][t].powf(self.p)
                    / (self.source.weight(s) * self.source.weight(t));
                best = best.max(c);
            }
        }
        best.powf(1.0 / self.p)
    }

    /// The coordinate of `sigma(s, t)` in the target.
    pub fn pair_index(&self, s: usize, t: usize) -> usize {
        self.pairing[s][t]
    }

    pub fn scale(&self, s: usize, t: usize) -> f64 {
        self.scales[s][t]
    }
}

/// Amplified diamond `u <> v`: coefficient at `(sigma(s,t), (i,j))` is
/// `scale(s,t) u(s,i) v(t,j)`. The result lives in the p-convex tensor
/// structure over the diamond target.
pub fn diamond<S: Scalar>(
    d: &DiamondOp,
    u: &AmplifiedElement<S>,
    v: &AmplifiedElement<S>,
    settings: TensorSettings,
) -> Result<AmplifiedElement<S>> {
    if u.host().base() != &d.source || v.host().base() != &d.source {
        return Err(Error::ShapeMismatch("diamond: element bases differ from source".into()));
    }
    let de = u.host().underlying_dim();
    let df = v.host().underlying_dim();
    let dl = d.source.dim();
    let mut data =
        DMatrix::from_element(d.target.dim(), de * df, S::from_real_f64(0.0));
    for s in 0..dl {
        for t in 0..dl {
            let row = d.pairing[s][t];
            let sc = S::from_real_f64(d.scales[s][t]);
            for i in 0..de {
                for j in 0..df {
                    data[(row, i * df + j)] += sc * u.data()[(s, i)] * v.data()[(t, j)];
                }
            }
        }
    }
    let host = QuantizedSpace::p_convex_tensor(
        u.host().with_base(d.target.clone()),
        v.host().with_base(d.target.clone()),
        settings,
    )?;
    AmplifiedElement::new(host, data)
}

// ---------------------------------------------------------------------------
// J / Q maps and the bar diamond
// ---------------------------------------------------------------------------

/// `J xi = (xi, 0, 0, ...)`: first-copy embedding into `copies` copies.
pub fn j_vector<S: Scalar>(xi: &LpVector<S>, copies: usize) -> Result<LpVector<S>> {
    let cs = CopiedSpace::over(xi.space(), copies)?;
    let mut out = vec![S::from_real_f64(0.0); cs.dim()];
    for i in 0..xi.space().dim() {
        out[i] = xi.coeffs()[i];
    }
    LpVector::new(Space::Copied(cs), xi.p(), out)
}

/// `Q (xi_1, xi_2, ...) = xi_1`: first-copy extraction.
pub fn q_vector<S: Scalar>(xi: &LpVector<S>) -> Result<LpVector<S>> {
    let Space::Copied(cs) = xi.space() else {
        return Err(Error::ShapeMismatch("Q needs a vector over a copy space".into()));
    };
    let base = Space::Plain(cs.base().clone());
    let coeffs = (0..cs.base_dim()).map(|i| xi.coeffs()[i]).collect();
    LpVector::new(base, xi.p(), coeffs)
}

/// `J_G`: lift an amplified element into the standard extension over
/// `copies` copies (content in copy 1, zeros elsewhere).
pub fn j_map<S: Scalar>(u: &AmplifiedElement<S>, copies: usize) -> Result<AmplifiedElement<S>> {
    let host = QuantizedSpace::standard_extension(u.host().clone(), copies)?;
    let rows = host.base().dim();
    let cols = host.underlying_dim();
    let mut data = DMatrix::from_element(rows, cols, S::from_real_f64(0.0));
    for i in 0..u.data().nrows() {
        for s in 0..cols {
            data[(i, s)] = u.data()[(i, s)];
        }
    }
    AmplifiedElement::new(host, data)
}

/// `Q_G`: extract the first copy of a standard-extension element.
pub fn q_map<S: Scalar>(u: &AmplifiedElement<S>) -> Result<AmplifiedElement<S>> {
    let QuantKind::StandardExtension { inner } = u.host().kind() else {
        return Err(Error::ShapeMismatch("Q needs a standard-extension element".into()));
    };
    let base_dim = inner.base().dim();
    let cols = u.data().ncols();
    let data = DMatrix::from_fn(base_dim, cols, |i, s| u.data()[(i, s)]);
    AmplifiedElement::new(inner.as_ref().clone(), data)
}

/// Bar diamond on vectors over a copy space: extract first copies, apply
/// the base diamond, re-embed into the first copy of the extended target.
pub fn bar_diamond_vectors<S: Scalar>(
    d: &DiamondOp,
    xi: &LpVector<S>,
    eta: &LpVector<S>,
) -> Result<LpVector<S>> {
    let Space::Copied(cs) = xi.space() else {
        return Err(Error::ShapeMismatch("bar diamond needs vectors over a copy space".into()));
    };
    if eta.space() != xi.space() {
        return Err(Error::ShapeMismatch("bar diamond arguments differ".into()));
    }
    let copies = cs.copies();
    let qx = q_vector(xi)?;
    let qe = q_vector(eta)?;
    let core = d.apply_vectors(&qx, &qe)?;
    j_vector(&core, copies)
}

/// Bar diamond on amplified elements over standard extensions.
pub fn bar_diamond<S: Scalar>(
    d: &DiamondOp,
    u: &AmplifiedElement<S>,
    v: &AmplifiedElement<S>,
    settings: TensorSettings,
) -> Result<AmplifiedElement<S>> {
    let (QuantKind::StandardExtension { inner: iu }, QuantKind::StandardExtension { inner: iv }) =
        (u.host().kind(), v.host().kind())
    else {
        return Err(Error::ShapeMismatch("bar diamond needs standard-extension elements".into()));
    };
    if u.host().base() != v.host().base() {
        return Err(Error::ShapeMismatch("bar diamond elements over different copy spaces".into()));
    }
    let Space::Copied(cs) = u.host().base() else { unreachable!() };
    let copies = cs.copies();
    let _ = (iu, iv);
    let qu = q_map(u)?;
    let qv = q_map(v)?;
    let core = diamond(d, &qu, &qv, settings)?;
    j_map(&core, copies)
}

/// Check shared by the near-L criterion and its reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalCheckReport {
    pub trials: usize,
    pub worst_ratio: f64,
    pub violations: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Functional and element achieving the worst ratio.
    pub witness_f: Vec<f64>,
    pub witness_u: Vec<Vec<f64>>,
}

/// Sampled check of the functional criterion
/// `||(f (x) id_E) u||_E <= ||f|| ||u|| + tol` for a cross-norm host.
///
/// Violations are reported, not thrown; `worst_ratio` is
/// `||(f (x) id)u|| / (||f|| upper(||u||))` maximized over the samples.
pub fn near_l_check(host: &QuantizedSpace, trials: usize, seed: u64) -> Result<FunctionalCheckReport> {
    use rand::Rng;
    let underlying = host
        .underlying()
        .ok_or_else(|| Error::UnsupportedKind(format!("near-L check on {}", host.kind().name())))?
        .clone();
    let dl = host.base().dim();
    let de = host.underlying_dim();
    let q = conjugate_exponent(host.p());
    let tolerance = crate::tol::OPT;
    let mut worst: f64 = 0.0;
    let mut violations = 0usize;
    let mut wf = vec![0.0; dl];
    let mut wu = vec![vec![0.0; de]; dl];
    for k in 0..trials {
        let mut r = crate::rng::rng(seed, "near-l", k as u64);
        let f = LpFunctional::new(
            host.base().clone(),
            host.p(),
            (0..dl).map(|_| r.gen_range(-1.0..1.0)).collect(),
        )?;
        let data = DMatrix::from_fn(dl, de, |_, _| r.gen_range(-1.0..1.0));
        let u = AmplifiedElement::new(host.clone(), data)?;
        let nf = weighted_dual_norm(f.coeffs(), &host.base().weights(), q);
        let nu = amplified_norm(&u)?;
        let contracted = l_contraction(&f, &u)?;
        let lhs = underlying.norm(&contracted);
        let denom = nf * nu.upper;
        if denom == 0.0 {
            continue;
        }
        let ratio = lhs / denom;
        if ratio > worst {
            worst = ratio;
            wf = f.coeffs().iter().copied().collect();
            wu = (0..dl)
                .map(|i| (0..de).map(|s| u.data()[(i, s)]).collect())
                .collect();
        }
        if lhs > denom + tolerance {
            violations += 1;
        }
    }
    Ok(FunctionalCheckReport {
        trials,
        worst_ratio: worst,
        violations,
        tolerance,
        seed,
        witness_f: wf,
        witness_u: wu,
    })
}

#[cfg(test)]
mod tests;
