//! The p-convex tensor norm: representations, the upper-bound search over
//! them, certificate lower bounds, and the induced-norm route through the
//! first-copy embedding.
//!
//! A representation realizes `U = a . sum_k I_k . (u_k <> v_k)` where the
//! `I_k` are the block embeddings of the diamond target into a routing
//! copy space and `a` maps the routing space back to `U`'s space. Its cost
//! `upper(||a||) (sum_k ||u_k||^p ||v_k||^p)^{1/p}` is a certified upper
//! bound for the tensor norm of the reconstructed element; the reported
//! upper bound is the best cost found over representations with at most
//! `N` terms. Lower bounds divide `||R_inf(U)||` by a verified bound on
//! the amplified norm of a bilinear certificate.

mod factor;

pub use factor::{
    check_metric_mapping_transport, theta_contractivity, universal_factorization_check,
    FactorizationReport, MetricMappingReport, ThetaReport,
};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lpcore::{conjugate_exponent, LpOperator, NormEstimate};
use crate::measure::{CopiedSpace, Space};
use crate::quantization::{
    amplified_norm_with, diamond, AmplifiedElement, DiamondOp, OptBudget, QuantKind,
    QuantizedSpace, TensorSettings,
};
use crate::rng;
use crate::underlying::UnderlyingNorm;

// ---------------------------------------------------------------------------
// Representations
// ---------------------------------------------------------------------------

/// One routed term: elementary-or-general elements over the diamond source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepTerm {
    pub u: AmplifiedElement,
    pub v: AmplifiedElement,
}

/// `U = a . sum_k I_k . (u_k <> v_k)` with the `I_k` fixed as the block
/// embeddings of the diamond target into `routing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Representation {
    p: f64,
    diamond: DiamondOp,
    routing: CopiedSpace,
    target_space: Space,
    left_host: QuantizedSpace,
    right_host: QuantizedSpace,
    terms: Vec<RepTerm>,
    /// Dense matrix of `a` (target dim x routing dim) for reconstruction.
    a_matrix: DMatrix<f64>,
    /// Certified upper bound on `||a||`.
    a_upper: f64,
    a_tags: Vec<String>,
}

impl Representation {
    pub fn terms(&self) -> &[RepTerm] {
        &self.terms
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn a_upper(&self) -> f64 {
        self.a_upper
    }

    pub fn routing_copies(&self) -> usize {
        self.routing.copies()
    }

    pub fn target_space(&self) -> &Space {
        &self.target_space
    }

    /// Reconstruct the represented element's coefficient matrix.
    pub fn value(&self) -> Result<DMatrix<f64>> {
        let de = self.left_host.underlying_dim();
        let df = self.right_host.underlying_dim();
        let dt = self.diamond.target().dim();
        let mut m = DMatrix::zeros(self.routing.dim(), de * df);
        for (k, term) in self.terms.iter().enumerate() {
            let dd = diamond(&self.diamond, &term.u, &term.v, TensorSettings::default())?;
            for r in 0..dt {
                for c in 0..de * df {
                    m[(k * dt + r, c)] = dd.data()[(r, c)];
                }
            }
        }
        Ok(&self.a_matrix * m)
    }

    /// `upper(||a||) (sum_k upper||u_k||^p upper||v_k||^p)^{1/p}`.
    pub fn cost_upper(&self) -> Result<f64> {
        if self.terms.is_empty() {
            return Ok(0.0);
        }
        let mut acc = 0.0f64;
        for term in &self.terms {
            let nu = amplified_norm_with(&term.u, OptBudget::light(), 0x7e50)?.upper;
            let nv = amplified_norm_with(&term.v, OptBudget::light(), 0x7e51)?.upper;
            acc += (nu * nv).powf(self.p);
        }
        Ok(self.a_upper * acc.powf(1.0 / self.p))
    }

    /// Move scalar mass between `a` and the terms: with per-term factors
    /// `alpha_k` (the `a`-side norms) and `beta_k = ||u_k|| ||v_k||`, the
    /// cost `(sum (alpha/lam)^q)^{1/q} (sum (lam beta)^p)^{1/p}` is
    /// minimized at `lam_k ~ (alpha^q / beta^p)^{1/(p+q)}`.
    ///
    /// Only applies to representations whose `a` is the canonical
    /// disjoint rank-one sum (one column block per term); those are the
    /// representations this module constructs.
    fn rebalance(&mut self, col_per_term: &[usize]) -> Result<()> {
        if self.terms.is_empty() {
            return Ok(());
        }
        let q = conjugate_exponent(self.p);
        let n = self.terms.len();
        let mut alphas = Vec::with_capacity(n);
        let mut betas = Vec::with_capacity(n);
        let wtarget = self.target_space.weights();
        for (k, term) in self.terms.iter().enumerate() {
            let col = col_per_term[k];
            let xi_norm = {
                let mut acc = 0.0;
                for i in 0..self.a_matrix.nrows() {
                    acc += wtarget[i] * self.a_matrix[(i, col)].abs().powf(self.p);
                }
                // Column entries are xi * w_c^{1/p}; the functional norm is 1.
                acc.powf(1.0 / self.p) / self.routing.base().weight(col % self.routing.base_dim()).powf(1.0 / self.p)
            };
            let nu = amplified_norm_with(&term.u, OptBudget::light(), 0x7e52)?.upper;
            let nv = amplified_norm_with(&term.v, OptBudget::light(), 0x7e53)?.upper;
            alphas.push(xi_norm);
            betas.push(nu * nv);
        }
        for k in 0..n {
            if alphas[k] <= 0.0 || betas[k] <= 0.0 {
                continue;
            }
            let lam = if q.is_finite() {
                (alphas[k].powf(q) / betas[k].powf(self.p)).powf(1.0 / (self.p + q))
            } else {
                alphas[k]
            };
            if !(lam.is_finite() && lam > 0.0) {
                continue;
            }
            // u_k <- sqrt(lam) u_k, v_k <- sqrt(lam) v_k, a-column /= lam.
            let s = lam.sqrt();
            self.terms[k].u = self.terms[k].u.scale(s);
            self.terms[k].v = self.terms[k].v.scale(s);
            let col = col_per_term[k];
            for i in 0..self.a_matrix.nrows() {
                self.a_matrix[(i, col)] /= lam;
            }
        }
        self.recompute_structured_upper(col_per_term);
        Ok(())
    }

    /// `||a|| <= (sum_k (||xi_k|| ||g_k||)^q)^{1/q}` for the disjoint
    /// rank-one sum (max over terms when `q` is infinite).
    fn recompute_structured_upper(&mut self, col_per_term: &[usize]) {
        let q = conjugate_exponent(self.p);
        let wtarget = self.target_space.weights();
        let mut acc: f64 = 0.0;
        let mut mx: f64 = 0.0;
        for &col in col_per_term {
            let mut xin = 0.0;
            for i in 0..self.a_matrix.nrows() {
                xin += wtarget[i] * self.a_matrix[(i, col)].abs().powf(self.p);
            }
            let xin = xin.powf(1.0 / self.p)
                / self.routing.base().weight(col % self.routing.base_dim()).powf(1.0 / self.p);
            if q.is_finite() {
                acc += xin.powf(q);
            } else {
                mx = mx.max(xin);
            }
        }
        self.a_upper = if q.is_finite() { acc.powf(1.0 / q) } else { mx };
        self.a_tags = vec!["disjoint-rank-one-sum".into()];
    }

    /// Transport the representation along amplified maps of the factors:
    /// the same routing realizes `(phi (x) psi)_inf U` with terms
    /// `phi_inf u_k`, `psi_inf v_k`.
    pub fn map_factors(
        &self,
        phi: &DMatrix<f64>,
        psi: &DMatrix<f64>,
        left_host: &QuantizedSpace,
        right_host: &QuantizedSpace,
    ) -> Result<Representation> {
        let mut out = self.clone();
        out.left_host = left_host.with_base(self.diamond.source().clone());
        out.right_host = right_host.with_base(self.diamond.source().clone());
        for term in &mut out.terms {
            term.u = crate::quantization::amplify_apply(phi, &term.u, &out.left_host)?;
            term.v = crate::quantization::amplify_apply(psi, &term.v, &out.right_host)?;
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

fn factor_hosts(host: &QuantizedSpace) -> Result<(QuantizedSpace, QuantizedSpace, TensorSettings)> {
    match host.kind() {
        QuantKind::PConvexTensor { left, right, settings } => {
            Ok((left.as_ref().clone(), right.as_ref().clone(), settings.clone()))
        }
        _ => Err(Error::UnsupportedKind(format!(
            "tensor norm on host kind {}",
            host.kind().name()
        ))),
    }
}

/// Canonical unit vector pair: the normalized indicator of the source
/// coordinate whose diamond square stays single-coordinate.
fn canonical_nu(source: &Space, p: f64) -> (usize, f64) {
    // scale so that ||nu|| = 1: nu = w_0^{-1/p} e_0.
    (0, source.weight(0).powf(-1.0 / p))
}

/// Assemble the structured representation from CP-style factors:
/// `U = sum_k xi_k (x_k (x) y_k)` routed one term per copy block.
fn assemble(
    xi: &[DVector<f64>],
    xs: &[DVector<f64>],
    ys: &[DVector<f64>],
    target_space: &Space,
    left_host: &QuantizedSpace,
    right_host: &QuantizedSpace,
    d: &DiamondOp,
    p: f64,
) -> Result<(Representation, Vec<usize>)> {
    let n = xi.len();
    let routing = CopiedSpace::over(d.target(), n.max(1))?;
    let (s0, nu_val) = canonical_nu(d.source(), p);
    let c0 = d.pair_index(s0, s0);
    let dt = d.target().dim();
    let w_c0 = d.target().weight(c0);
    let q = conjugate_exponent(p);

    let mut a = DMatrix::zeros(target_space.dim(), routing.dim());
    let mut terms = Vec::with_capacity(n);
    let mut cols = Vec::with_capacity(n);
    let src_host_l = left_host.with_base(d.source().clone());
    let src_host_r = right_host.with_base(d.source().clone());
    for k in 0..n {
        let col = k * dt + c0;
        cols.push(col);
        // <g_k, .> has density w_c0^{-1/q} at the block coordinate.
        // a(eta) = sum_k <g_k, eta> xi_k  =>  a[i, col] = xi_k[i] w_c0^{1/p}.
        for i in 0..target_space.dim() {
            a[(i, col)] = xi[k][i] * w_c0.powf(1.0 / p);
        }
        let nu = crate::lpcore::LpVector::new(
            d.source().clone(),
            p,
            {
                let mut cfs = vec![0.0; d.source().dim()];
                cfs[s0] = nu_val;
                cfs
            },
        )?;
        let u = AmplifiedElement::elementary(src_host_l.clone(), &nu, &xs[k])?;
        let v = AmplifiedElement::elementary(src_host_r.clone(), &nu, &ys[k])?;
        terms.push(RepTerm { u, v });
    }
    let _ = q;
    let mut rep = Representation {
        p,
        diamond: d.clone(),
        routing,
        target_space: target_space.clone(),
        left_host: src_host_l,
        right_host: src_host_r,
        terms,
        a_matrix: a,
        a_upper: 0.0,
        a_tags: Vec::new(),
    };
    rep.recompute_structured_upper(&cols);
    Ok((rep, cols))
}

/// Basis-expansion representation: one term per nonzero column of `U`,
/// `u_k = nu (x) e_s`, `v_k = nu' (x) e_t`, with `a` the disjoint
/// rank-one sum sending each routed coordinate to the matching column.
/// Reconstructs exactly.
pub fn decompose(u: &AmplifiedElement, d: &DiamondOp, copies: usize) -> Result<Representation> {
    let (left, right, _) = factor_hosts(u.host())?;
    let de = left.underlying_dim();
    let df = right.underlying_dim();
    let target_space = u.host().base().clone();

    let mut xi = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in 0..de {
        for t in 0..df {
            let col = s * df + t;
            let colvec = DVector::from_fn(target_space.dim(), |i, _| u.data()[(i, col)]);
            if colvec.amax() == 0.0 {
                continue;
            }
            xi.push(colvec);
            xs.push(DVector::from_fn(de, |i, _| if i == s { 1.0 } else { 0.0 }));
            ys.push(DVector::from_fn(df, |j, _| if j == t { 1.0 } else { 0.0 }));
        }
    }
    if xi.len() > copies.max(1) && !xi.is_empty() {
        return Err(Error::InsufficientCopies { needed: xi.len(), available: copies });
    }
    let (mut rep, cols) = assemble(&xi, &xs, &ys, &target_space, &left, &right, d, u.host().p())?;
    rep.rebalance(&cols)?;
    Ok(rep)
}

// ---------------------------------------------------------------------------
// CP-style alternating search for the upper bound
// ---------------------------------------------------------------------------

fn khatri_rao(b: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = b.ncols();
    let de = b.nrows();
    let df = c.nrows();
    DMatrix::from_fn(de * df, n, |row, k| b[(row / df, k)] * c[(row % df, k)])
}

/// Least-squares solve `x a^T ~ target` for `x` given `a` (via SVD).
fn solve_factor(target: &DMatrix<f64>, a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    // x = target a (a^T a)^{-1}; use pseudo-inverse for rank safety.
    let pinv = a.clone().svd(true, true).pseudo_inverse(1e-12).ok()?;
    Some(target * pinv.transpose())
}

struct CpFit {
    xi: Vec<DVector<f64>>,
    xs: Vec<DVector<f64>>,
    ys: Vec<DVector<f64>>,
}

/// Alternating least squares for `U1 = A (B ⊙ C)^T` with `n` components;
/// returns factors only when the reconstruction is exact to 1e-12
/// (relative), which keeps every accepted representation valid.
fn cp_fit(
    u1: &DMatrix<f64>,
    de: usize,
    df: usize,
    n: usize,
    iters: usize,
    seed: u64,
) -> Option<CpFit> {
    let du = u1.nrows();
    let scale = u1.amax();
    if scale == 0.0 {
        return Some(CpFit { xi: Vec::new(), xs: Vec::new(), ys: Vec::new() });
    }
    let mut r = rng::rng(seed, "cp-init", n as u64);
    let mut a = DMatrix::from_fn(du, n, |_, _| r.gen_range(-1.0..1.0));
    let mut b = DMatrix::from_fn(de, n, |_, _| r.gen_range(-1.0..1.0));
    let mut c = DMatrix::from_fn(df, n, |_, _| r.gen_range(-1.0..1.0));

    // U2 (dE x dU*dF) and U3 (dF x dU*dE) unfoldings.
    let u2 = DMatrix::from_fn(de, du * df, |s, col| u1[(col / df, s * df + col % df)]);
    let u3 = DMatrix::from_fn(df, du * de, |t, col| u1[(col / de, (col % de) * df + t)]);

    let mut last_res = f64::INFINITY;
    for _ in 0..iters {
        a = solve_factor(u1, &khatri_rao(&b, &c))?;
        b = solve_factor(&u2, &khatri_rao(&a, &c))?;
        c = solve_factor(&u3, &khatri_rao(&a, &b))?;
        let res = (u1 - &a * khatri_rao(&b, &c).transpose()).amax();
        if res <= 1e-13 * scale.max(1.0) {
            break;
        }
        if res >= last_res * (1.0 - 1e-10) && res > 1e-10 * scale {
            // Stalled without an exact fit.
            return None;
        }
        last_res = res;
    }
    let res = (u1 - &a * khatri_rao(&b, &c).transpose()).amax();
    if res > 1e-12 * scale.max(1.0) {
        return None;
    }
    Some(CpFit {
        xi: (0..n).map(|k| DVector::from_fn(du, |i, _| a[(i, k)])).collect(),
        xs: (0..n).map(|k| DVector::from_fn(de, |s, _| b[(s, k)])).collect(),
        ys: (0..n).map(|k| DVector::from_fn(df, |t, _| c[(t, k)])).collect(),
    })
}

/// Best representation cost per term count `n = 1..=max_len`
/// (`None` where no exact-fit representation was found).
fn upper_candidates(
    u: &AmplifiedElement,
    d: &DiamondOp,
    max_len: usize,
    restarts: usize,
    seed: u64,
) -> Result<Vec<Option<(f64, Representation)>>> {
    let (left, right, _) = factor_hosts(u.host())?;
    let de = left.underlying_dim();
    let df = right.underlying_dim();
    let target_space = u.host().base().clone();
    let p = u.host().p();

    let mut best: Vec<Option<(f64, Representation)>> = vec![None; max_len];
    let mut consider = |n: usize, rep: Representation| -> Result<()> {
        let cost = rep.cost_upper()?;
        let slot = &mut best[n - 1];
        if slot.as_ref().map_or(true, |(c, _)| cost < *c) {
            *slot = Some((cost, rep));
        }
        Ok(())
    };

    // Basis seed at its own length.
    match decompose(u, d, max_len) {
        Ok(rep) => {
            let n = rep.term_count().max(1);
            if n <= max_len {
                consider(n, rep)?;
            }
        }
        Err(Error::InsufficientCopies { .. }) => {}
        Err(e) => return Err(e),
    }

    // CP fits at every feasible length; a handful of exact fits per
    // length is plenty, so stop early once several are in.
    let cap = (de * df).min(max_len);
    for n in 1..=cap {
        let mut successes = 0usize;
        for rs in 0..restarts.max(1) {
            let Some(fit) =
                cp_fit(u.data(), de, df, n, 60 + 20 * n, rng::derive(seed, "cp", (n * 1000 + rs) as u64))
            else {
                continue;
            };
            if fit.xi.is_empty() && u.data().amax() > 0.0 {
                continue;
            }
            let (mut rep, cols) =
                assemble(&fit.xi, &fit.xs, &fit.ys, &target_space, &left, &right, d, p)?;
            // Accept only exact reconstructions.
            if (rep.value()? - u.data()).amax() > 1e-12 * u.data().amax().max(1.0) {
                continue;
            }
            rep.rebalance(&cols)?;
            consider(n, rep)?;
            successes += 1;
            if successes >= 8 {
                break;
            }
        }
    }
    Ok(best)
}

/// Minimize the representation cost at truncation `copies`; never worse
/// than the basis seed when that seed fits, monotone in the budget.
pub fn tensor_norm_upper(
    u: &AmplifiedElement,
    d: &DiamondOp,
    copies: usize,
    restarts: usize,
    seed: u64,
) -> Result<(f64, Representation)> {
    let (left, right, _) = factor_hosts(u.host())?;
    if u.data().amax() == 0.0 {
        let (rep, _) = assemble(
            &[],
            &[],
            &[],
            u.host().base(),
            &left,
            &right,
            d,
            u.host().p(),
        )?;
        return Ok((0.0, rep));
    }
    let candidates = upper_candidates(u, d, copies, restarts, seed)?;
    candidates
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite costs"))
        .ok_or(Error::InsufficientCopies {
            needed: left.underlying_dim() * right.underlying_dim(),
            available: copies,
        })
}

// ---------------------------------------------------------------------------
// Lower bounds via certificates
// ---------------------------------------------------------------------------

/// A verified `L`-bounded bilinear map into a p-convex target. The linear
/// map associated with `rho` is stored as a `dG x (dE * dF)` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerCertificate {
    pub target: QuantizedSpace,
    pub rho: DMatrix<f64>,
    pub verified_amp_bound: f64,
    pub method_tags: Vec<String>,
}

impl LowerCertificate {
    /// `R_inf(U)`: contract the `E (x) F` index with the associated map.
    pub fn apply(&self, u: &AmplifiedElement) -> Result<AmplifiedElement> {
        if self.rho.ncols() != u.data().ncols() {
            return Err(Error::ShapeMismatch("certificate shape mismatch".into()));
        }
        let data = u.data() * self.rho.transpose();
        AmplifiedElement::new(self.target.with_base(u.host().base().clone()), data)
    }
}

/// Scalar certificate `rho(x, y) = f(x) g(y)` into the base space's unique
/// quantization; the amplified bound is `N_{E*}(f) N_{F*}(g)` times the
/// diamond norm, verified by sampling before use.
pub fn scalar_certificate(
    f: &DVector<f64>,
    g: &DVector<f64>,
    left: &UnderlyingNorm,
    right: &UnderlyingNorm,
    base: &Space,
    p: f64,
    diamond_norm: f64,
) -> LowerCertificate {
    let de = left.dim();
    let df = right.dim();
    let rho = DMatrix::from_fn(1, de * df, |_, col| f[col / df] * g[col % df]);
    let bound = left.dual_norm(f) * right.dual_norm(g) * diamond_norm;
    LowerCertificate {
        target: QuantizedSpace::scalar_quantization(base.clone(), p),
        rho,
        verified_amp_bound: bound,
        method_tags: vec!["scalar(f,g)".into(), "bound=N*(f)N*(g)*diamond".into()],
    }
}

/// Sampling verification of a certificate's amplified bound: rejects the
/// certificate if any sampled pair violates `||rho_inf(u, v)|| <=
/// bound ||u|| ||v|| + tol`.
pub fn verify_certificate(
    cert: &LowerCertificate,
    left_host: &QuantizedSpace,
    right_host: &QuantizedSpace,
    d: &DiamondOp,
    samples: usize,
    seed: u64,
) -> Result<bool> {
    let src_l = left_host.with_base(d.source().clone());
    let src_r = right_host.with_base(d.source().clone());
    for k in 0..samples {
        let mut r = rng::rng(seed, "cert-verify", k as u64);
        let du = DMatrix::from_fn(src_l.base().dim(), src_l.underlying_dim(), |_, _| {
            r.gen_range(-1.0..1.0)
        });
        let dv = DMatrix::from_fn(src_r.base().dim(), src_r.underlying_dim(), |_, _| {
            r.gen_range(-1.0..1.0)
        });
        let u = AmplifiedElement::new(src_l.clone(), du)?;
        let v = AmplifiedElement::new(src_r.clone(), dv)?;
        let uv = diamond(d, &u, &v, TensorSettings::default())?;
        let image = LowerCertificate {
            target: cert.target.with_base(d.target().clone()),
            rho: cert.rho.clone(),
            verified_amp_bound: cert.verified_amp_bound,
            method_tags: cert.method_tags.clone(),
        }
        .apply(&uv)?;
        let lhs = amplified_norm_with(&image, OptBudget::light(), 1)?.lower;
        let nu = amplified_norm_with(&u, OptBudget::light(), 2)?.upper;
        let nv = amplified_norm_with(&v, OptBudget::light(), 3)?.upper;
        if lhs > cert.verified_amp_bound * nu * nv + crate::tol::OPT {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Default certificate library for a given element: norm-attaining scalar
/// pairs aligned with the element plus dual-ball corner pairs.
pub fn default_certificates(u: &AmplifiedElement, d: &DiamondOp) -> Result<Vec<LowerCertificate>> {
    let (left, right, _) = factor_hosts(u.host())?;
    let e = left
        .underlying()
        .ok_or_else(|| Error::UnsupportedKind("certificates need explicit factor norms".into()))?
        .clone();
    let f = right
        .underlying()
        .ok_or_else(|| Error::UnsupportedKind("certificates need explicit factor norms".into()))?
        .clone();
    let de = e.dim();
    let df = f.dim();
    let base = u.host().base().clone();
    let p = u.host().p();
    let dn = d.bilinear_norm();

    let mut pairs: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();

    // Directions aligned with the element: split dominant rows into
    // rank-one factors of the E (x) F index.
    let mut row_candidates: Vec<DVector<f64>> = Vec::new();
    let mut best_row = 0usize;
    let mut best_norm = -1.0;
    for i in 0..u.data().nrows() {
        let row = DVector::from_fn(de * df, |c, _| u.data()[(i, c)]);
        let n = row.norm();
        if n > best_norm {
            best_norm = n;
            best_row = i;
        }
    }
    row_candidates.push(DVector::from_fn(de * df, |c, _| u.data()[(best_row, c)]));
    // Weighted average row as a second probe.
    let w = base.weights();
    row_candidates.push(DVector::from_fn(de * df, |c, _| {
        (0..u.data().nrows()).map(|i| w[i] * u.data()[(i, c)]).sum()
    }));
    for z in row_candidates {
        if z.amax() == 0.0 {
            continue;
        }
        let zm = DMatrix::from_fn(de, df, |s, t| z[s * df + t]);
        let svd = zm.svd(true, true);
        if let (Some(pu), Some(vt)) = (svd.u.as_ref(), svd.v_t.as_ref()) {
            let x = DVector::from_fn(de, |s, _| pu[(s, 0)]);
            let y = DVector::from_fn(df, |t, _| vt[(0, t)]);
            let fa = e.dual_attaining(&x);
            let ga = f.dual_attaining(&y);
            if fa.amax() > 0.0 && ga.amax() > 0.0 {
                pairs.push((fa, ga));
            }
        }
    }

    // Corner pairs when the dual balls are polytopes (capped).
    if let (Some(fc), Some(gc)) = (e.dual_ball_extremes(), f.dual_ball_extremes()) {
        if fc.len() * gc.len() <= 64 {
            for fa in &fc {
                for ga in &gc {
                    pairs.push((fa.clone(), ga.clone()));
                }
            }
        }
    }

    let mut out = Vec::new();
    for (fa, ga) in pairs {
        let nf = e.dual_norm(&fa);
        let ng = f.dual_norm(&ga);
        if nf == 0.0 || ng == 0.0 {
            continue;
        }
        out.push(scalar_certificate(&(fa / nf), &(ga / ng), &e, &f, &base, p, dn));
    }
    Ok(out)
}

/// Best certificate lower bound: `max_c lower(||R_inf(J U)||) / bound_c`.
/// An empty list yields 0 with a warning tag.
pub fn tensor_norm_lower(
    u: &AmplifiedElement,
    certs: &[LowerCertificate],
) -> Result<(f64, Option<LowerCertificate>)> {
    if certs.is_empty() {
        return Ok((0.0, None));
    }
    let mut best = 0.0f64;
    let mut best_cert = None;
    for cert in certs {
        if cert.verified_amp_bound <= 0.0 {
            continue;
        }
        let image = cert.apply(u)?;
        let val = amplified_norm_with(&image, OptBudget::light(), 0x10)?.lower;
        let bound = val / cert.verified_amp_bound;
        if bound > best {
            best = bound;
            best_cert = Some(cert.clone());
        }
    }
    Ok((best, best_cert))
}

// ---------------------------------------------------------------------------
// The full tensor norm
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    /// Work over the element's own (convenient) base space.
    Direct,
    /// Embed through `J` into the truncated copy space and compute there.
    Induced,
}

/// Result of a tensor-norm computation: the bracket, the witnesses, and
/// the per-truncation trace of upper bounds (`None` where no
/// representation fits).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorNormResult {
    pub estimate: NormEstimate,
    pub best_rep: Option<Representation>,
    pub best_cert: Option<LowerCertificate>,
    pub copies_used: usize,
    pub per_n_trace: Vec<(usize, Option<f64>)>,
    pub route: Route,
}

/// Tensor norm along a chosen route, with the per-truncation sweep.
pub fn tensor_norm_via(
    u: &AmplifiedElement,
    route: Route,
    extra_certs: &[LowerCertificate],
    seed: u64,
) -> Result<TensorNormResult> {
    let (_, _, settings) = factor_hosts(u.host())?;
    let p = u.host().p();
    let d = DiamondOp::canonical(u.host().base(), p, settings.pairing)?;

    // The working element: U itself, or its J image over the truncation.
    let work: AmplifiedElement = match route {
        Route::Direct => u.clone(),
        Route::Induced => {
            let cs = CopiedSpace::over(u.host().base(), settings.copies)?;
            let big = Space::Copied(cs);
            let mut data = DMatrix::zeros(big.dim(), u.data().ncols());
            for i in 0..u.data().nrows() {
                for c in 0..u.data().ncols() {
                    data[(i, c)] = u.data()[(i, c)];
                }
            }
            AmplifiedElement::new(u.host().with_base(big), data)?
        }
    };

    let mut trace = Vec::new();
    let mut best_upper = f64::INFINITY;
    let mut best_rep = None;
    if work.data().amax() == 0.0 {
        let (cost, rep) = tensor_norm_upper(&work, &d, settings.copies, 1, seed)?;
        best_upper = cost;
        best_rep = Some(rep);
        for n in 1..=settings.copies {
            trace.push((n, Some(0.0)));
        }
    } else {
        // One search per term count; the per-truncation trace is the
        // running minimum (any n-term representation is valid at every
        // truncation N >= n).
        let candidates =
            upper_candidates(&work, &d, settings.copies, settings.restarts, rng::derive(seed, "upper", 0))?;
        for n in 1..=settings.copies {
            if let Some(Some((cost, rep))) = candidates.get(n - 1) {
                if *cost < best_upper {
                    best_upper = *cost;
                    best_rep = Some(rep.clone());
                }
            }
            trace.push((n, best_rep.as_ref().map(|_| best_upper)));
        }
    }
    if best_rep.is_none() {
        return Err(Error::InsufficientCopies {
            needed: u.host().underlying_dim(),
            available: settings.copies,
        });
    }

    let mut certs = default_certificates(u, &d)?;
    certs.extend(extra_certs.iter().cloned());
    let (lower, best_cert) = tensor_norm_lower(u, &certs)?;
    let lower = lower.min(best_upper);

    Ok(TensorNormResult {
        estimate: NormEstimate::new(
            lower,
            best_upper,
            vec!["certificate-lower".into(), "representation-upper".into()],
        ),
        best_rep,
        best_cert,
        copies_used: settings.copies,
        per_n_trace: trace,
        route,
    })
}

/// Tensor norm of an element of a `PConvexTensor` host: the direct route
/// when the base space is convenient, the induced route otherwise.
pub fn tensor_norm(u: &AmplifiedElement, seed: u64) -> Result<TensorNormResult> {
    let route = if u.host().base().is_convenient() { Route::Direct } else { Route::Induced };
    tensor_norm_via(u, route, &[], seed)
}

/// Norm dispatch covering every host kind, including the tensor structure.
pub fn host_norm(u: &AmplifiedElement) -> Result<NormEstimate> {
    match u.host().kind() {
        QuantKind::PConvexTensor { .. } => Ok(tensor_norm(u, 0x7e2508)?.estimate),
        _ => crate::quantization::amplified_norm(u),
    }
}

// ---------------------------------------------------------------------------
// Representation transforms for the property checks
// ---------------------------------------------------------------------------

/// Upper bound for `a . U` by composing onto the representation:
/// `upper(||a||) * cost(rep)`, with the reconstruction transported.
pub fn compose_left(rep: &Representation, a: &LpOperator<f64>) -> Result<(Representation, f64)> {
    if a.source() != &rep.target_space {
        return Err(Error::ShapeMismatch("composition space mismatch".into()));
    }
    let bracket = crate::lpcore::operator_norm(a, rep.p)?;
    let mut out = rep.clone();
    out.a_matrix = a.matrix() * &rep.a_matrix;
    out.target_space = a.target().clone();
    out.a_upper = bracket.upper * rep.a_upper;
    out.a_tags.push("composed-left".into());
    let cost = out.cost_upper()?;
    Ok((out, cost))
}

/// Merge representations of transversally supported elements: terms keep
/// their own routing blocks, the output rows are masked by the disjoint
/// supports, and the merged cost obeys the p-sum inequality
/// `cost^p <= cost_u^p + cost_v^p`.
pub fn merge_disjoint(
    rep_u: &Representation,
    rep_v: &Representation,
    mask_u: &crate::measure::MeasurableSubset,
    mask_v: &crate::measure::MeasurableSubset,
) -> Result<Representation> {
    if rep_u.target_space != rep_v.target_space
        || rep_u.p != rep_v.p
        || rep_u.diamond != rep_v.diamond
    {
        return Err(Error::ShapeMismatch("merge: incompatible representations".into()));
    }
    if !mask_u.is_disjoint(mask_v) {
        return Err(Error::OverlappingSubsets {
            index: mask_u.indices().find(|i| mask_v.contains(*i)).unwrap_or(0),
        });
    }
    let p = rep_u.p;
    // Normalize both so the masked a-parts have norm upper <= 1; the
    // scalar moves into the terms.
    let normalize = |rep: &Representation, mask: &crate::measure::MeasurableSubset| -> Representation {
        let mut out = rep.clone();
        // Mask output rows.
        for i in 0..out.a_matrix.nrows() {
            if !mask.contains(i) {
                for j in 0..out.a_matrix.ncols() {
                    out.a_matrix[(i, j)] = 0.0;
                }
            }
        }
        let scale = rep.a_upper;
        if scale > 0.0 {
            out.a_matrix /= scale;
            out.a_upper = 1.0;
            let s = scale.sqrt();
            for term in &mut out.terms {
                term.u = term.u.scale(s);
                term.v = term.v.scale(s);
            }
        }
        out
    };
    let nu = normalize(rep_u, mask_u);
    let nv = normalize(rep_v, mask_v);

    let n_total = nu.terms.len() + nv.terms.len();
    let routing = CopiedSpace::over(rep_u.diamond.target(), n_total.max(1))?;
    let dt = rep_u.diamond.target().dim();
    let mut a = DMatrix::zeros(rep_u.target_space.dim(), routing.dim());
    if !nu.terms.is_empty() {
        for i in 0..nu.a_matrix.nrows() {
            for j in 0..nu.a_matrix.ncols() {
                a[(i, j)] = nu.a_matrix[(i, j)];
            }
        }
    }
    if !nv.terms.is_empty() {
        let offset = nu.terms.len() * dt;
        for i in 0..nv.a_matrix.nrows() {
            for j in 0..nv.a_matrix.ncols() {
                a[(i, offset + j)] = nv.a_matrix[(i, j)];
            }
        }
    }
    let mut terms = nu.terms.clone();
    terms.extend(nv.terms.iter().cloned());
    // Masked disjoint-output groups with disjoint input blocks: the merged
    // norm is bounded by the max of the group norms (here both <= 1).
    Ok(Representation {
        p,
        diamond: rep_u.diamond.clone(),
        routing,
        target_space: rep_u.target_space.clone(),
        left_host: rep_u.left_host.clone(),
        right_host: rep_u.right_host.clone(),
        terms,
        a_matrix: a,
        a_upper: nu.a_upper.max(nv.a_upper),
        a_tags: vec!["merged-disjoint".into()],
    })
}

#[cfg(test)]
mod tests;
