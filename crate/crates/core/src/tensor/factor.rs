//! Factorization checks: the canonical bilinear map's contractivity, the
//! equality chain between a bilinear map's amplified norm and its
//! linearization's, and the metric mapping property via representation
//! transport.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lpcore::NormEstimate;
use crate::measure::CopiedSpace;
use crate::quantization::{
    amplified_norm_with, amplify_operator, bar_diamond, diamond, j_map, AmplifiedElement,
    DiamondOp, OptBudget, QuantizedSpace, TensorSettings,
};
use crate::rng;
use crate::tol;

use super::{tensor_norm_upper, upper_candidates, LowerCertificate, RepTerm, Representation};

fn rand_element(host: &QuantizedSpace, seed: u64, tag: &str, k: u64) -> Result<AmplifiedElement> {
    let mut r = rng::rng(seed, tag, k);
    let data = DMatrix::from_fn(host.base().dim(), host.underlying_dim(), |_, _| {
        r.gen_range(-1.0..1.0)
    });
    AmplifiedElement::new(host.clone(), data)
}

/// One-term representation of `u <> v` through the identity routing:
/// certifies `||u <> v||_{pL} <= ||u|| ||v||` for arbitrary elements.
pub(super) fn one_term_rep(
    d: &DiamondOp,
    u: &AmplifiedElement,
    v: &AmplifiedElement,
) -> Result<Representation> {
    let routing = CopiedSpace::over(d.target(), 1)?;
    let dt = d.target().dim();
    Ok(Representation {
        p: u.host().p(),
        diamond: d.clone(),
        routing,
        target_space: d.target().clone(),
        left_host: u.host().clone(),
        right_host: v.host().clone(),
        terms: vec![RepTerm { u: u.clone(), v: v.clone() }],
        a_matrix: DMatrix::identity(dt, dt),
        a_upper: 1.0,
        a_tags: vec!["identity-extraction".into()],
    })
}

/// Sampled contractivity of the canonical bilinear map:
/// `upper(||u <> v||) <= upper(||u||) upper(||v||) + tol`, the upper side
/// taken as the best of the one-term representation and the search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaReport {
    pub trials: usize,
    pub worst_ratio: f64,
    pub pass: bool,
    pub tolerance: f64,
    pub seed: u64,
}

pub fn theta_contractivity(
    left_host: &QuantizedSpace,
    right_host: &QuantizedSpace,
    d: &DiamondOp,
    trials: usize,
    seed: u64,
) -> Result<ThetaReport> {
    let src_l = left_host.with_base(d.source().clone());
    let src_r = right_host.with_base(d.source().clone());
    let mut worst: f64 = 0.0;
    for k in 0..trials {
        let u = rand_element(&src_l, seed, "theta-u", k as u64)?;
        let v = rand_element(&src_r, seed, "theta-v", k as u64)?;
        let nu = amplified_norm_with(&u, OptBudget::light(), 1)?.upper;
        let nv = amplified_norm_with(&v, OptBudget::light(), 2)?.upper;
        if nu * nv == 0.0 {
            continue;
        }
        let rep = one_term_rep(d, &u, &v)?;
        let ratio = rep.cost_upper()? / (nu * nv);
        worst = worst.max(ratio);
    }
    Ok(ThetaReport {
        trials,
        worst_ratio: worst,
        pass: worst <= 1.0 + tol::Tolerances::violation_threshold(tol::OPT),
        tolerance: tol::OPT,
        seed,
    })
}

// ---------------------------------------------------------------------------
// Universal factorization chain
// ---------------------------------------------------------------------------

/// Brackets for the four amplified norms of a scalar bilinear certificate
/// and the consistency of the equality chain between them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub rho_inf: NormEstimate,
    pub rho_bar_inf: NormEstimate,
    pub r_inf: NormEstimate,
    pub r_bar_inf: NormEstimate,
    pub chain_consistent: bool,
    pub tolerance: f64,
    pub seed: u64,
}

fn brackets_overlap(a: &NormEstimate, b: &NormEstimate, tol: f64) -> bool {
    a.lower <= b.upper + tol && b.lower <= a.upper + tol
}

/// Verify the equality chain for a scalar-valued bilinear map
/// `rho(x, y) = sum_{s,t} B_{st} x_s y_t` between explicit factor hosts:
/// the bar amplification has the same norm and the associated linear map
/// matches on the tensor structure, all at bracket precision.
pub fn universal_factorization_check(
    form: &DMatrix<f64>,
    left_host: &QuantizedSpace,
    right_host: &QuantizedSpace,
    copies: usize,
    samples: usize,
    seed: u64,
) -> Result<FactorizationReport> {
    let e = left_host
        .underlying()
        .ok_or_else(|| Error::UnsupportedKind("factorization check needs explicit factors".into()))?
        .clone();
    let f = right_host
        .underlying()
        .ok_or_else(|| Error::UnsupportedKind("factorization check needs explicit factors".into()))?
        .clone();
    if form.nrows() != e.dim() || form.ncols() != f.dim() {
        return Err(Error::ShapeMismatch("form must be dE x dF".into()));
    }
    let base = left_host.base().clone();
    let p = left_host.p();
    let d = DiamondOp::canonical(&base, p, crate::quantization::PairingKind::Cantor)?;
    let src_l = left_host.with_base(base.clone());
    let src_r = right_host.with_base(base.clone());
    let de = e.dim();
    let df = f.dim();

    // Upper bound via the SVD split of the form: rho = sum_r sigma_r f_r (x) g_r,
    // each rank-one piece amplifying to at most N*(f) N*(g) |diamond|.
    let upper_rho = {
        let svd = form.clone().svd(true, true);
        let mut acc = 0.0;
        if let (Some(pu), Some(vt)) = (svd.u.as_ref(), svd.v_t.as_ref()) {
            for r in 0..svd.singular_values.len() {
                let fr = DVector::from_fn(de, |s, _| pu[(s, r)]);
                let gr = DVector::from_fn(df, |t, _| vt[(r, t)]);
                acc += svd.singular_values[r] * e.dual_norm(&fr) * f.dual_norm(&gr);
            }
        }
        acc * d.bilinear_norm()
    };

    let rho_row = DMatrix::from_fn(1, de * df, |_, col| form[(col / df, col % df)]);
    let cert = LowerCertificate {
        target: QuantizedSpace::scalar_quantization(base.clone(), p),
        rho: rho_row.clone(),
        verified_amp_bound: upper_rho,
        method_tags: vec!["svd-split-upper".into()],
    };

    // rho_inf lower: sampled pairs, including attaining elementary ones.
    let mut lower_rho: f64 = 0.0;
    for k in 0..samples {
        let u = rand_element(&src_l, seed, "uf-u", k as u64)?;
        let v = rand_element(&src_r, seed, "uf-v", k as u64)?;
        let uv = diamond(&d, &u, &v, TensorSettings::default())?;
        let image = cert.apply(&uv)?;
        let val = amplified_norm_with(&image, OptBudget::light(), 3)?.lower;
        let nu = amplified_norm_with(&u, OptBudget::light(), 4)?.upper;
        let nv = amplified_norm_with(&v, OptBudget::light(), 5)?.upper;
        if nu * nv > 0.0 {
            lower_rho = lower_rho.max(val / (nu * nv));
        }
    }
    // Attaining elementary pair from the top singular direction.
    {
        let svd = form.clone().svd(true, true);
        if let (Some(pu), Some(vt)) = (svd.u.as_ref(), svd.v_t.as_ref()) {
            let fr = DVector::from_fn(de, |s, _| pu[(s, 0)]);
            let gr = DVector::from_fn(df, |t, _| vt[(0, t)]);
            let x = e.primal_attaining(&fr);
            let y = f.primal_attaining(&gr);
            let xi = crate::lpcore::LpVector::basis(base.clone(), p, 0);
            let u = AmplifiedElement::elementary(src_l.clone(), &xi, &x)?;
            let v = AmplifiedElement::elementary(src_r.clone(), &xi, &y)?;
            let uv = diamond(&d, &u, &v, TensorSettings::default())?;
            let image = cert.apply(&uv)?;
            let val = amplified_norm_with(&image, OptBudget::light(), 6)?.lower;
            let nu = amplified_norm_with(&u, OptBudget::light(), 7)?.upper;
            let nv = amplified_norm_with(&v, OptBudget::light(), 8)?.upper;
            if nu * nv > 0.0 {
                lower_rho = lower_rho.max(val / (nu * nv));
            }
        }
    }
    let lower_rho = lower_rho.min(upper_rho);
    let rho_inf = NormEstimate::new(lower_rho, upper_rho, vec!["sampled-lower".into(), "svd-split-upper".into()]);

    // Bar route: standard extensions over `copies` copies with the bar
    // diamond. J-lifted samples realize the same ratios; the composition
    // J . rho . (Q x Q) keeps the upper bound.
    let ext_l = QuantizedSpace::standard_extension(src_l.clone(), copies)?;
    let _ext_r = QuantizedSpace::standard_extension(src_r.clone(), copies)?;
    let mut lower_bar: f64 = 0.0;
    for k in 0..samples.min(24) {
        let u0 = rand_element(&src_l, seed, "uf-bu", k as u64)?;
        let v0 = rand_element(&src_r, seed, "uf-bv", k as u64)?;
        let ub = j_map(&u0, copies)?;
        let vb = j_map(&v0, copies)?;
        let uvb = bar_diamond(&d, &ub, &vb, TensorSettings::default())?;
        // Scalar target over the extended diamond target.
        let image = LowerCertificate {
            target: QuantizedSpace::scalar_quantization(uvb.host().base().clone(), p),
            rho: rho_row.clone(),
            verified_amp_bound: upper_rho,
            method_tags: Vec::new(),
        }
        .apply(&uvb)?;
        let val = amplified_norm_with(&image, OptBudget::light(), 9)?.lower;
        let nu = amplified_norm_with(&ub, OptBudget::light(), 10)?.upper;
        let nv = amplified_norm_with(&vb, OptBudget::light(), 11)?.upper;
        if nu * nv > 0.0 {
            lower_bar = lower_bar.max(val / (nu * nv));
        }
    }
    let lower_bar = lower_bar.max(lower_rho).min(upper_rho);
    let rho_bar_inf =
        NormEstimate::new(lower_bar, upper_rho, vec!["j-lift-lower".into(), "composition-upper".into()]);
    let _ = ext_l;

    // R_inf on the tensor structure: lower from diamond products and
    // random elements; upper transfers from rho through representations.
    let settings = TensorSettings { copies, pairing: crate::quantization::PairingKind::Cantor, restarts: 8 };
    let tensor_host = QuantizedSpace::p_convex_tensor(src_l.clone(), src_r.clone(), settings.clone())?;
    let mut lower_r: f64 = 0.0;
    for k in 0..samples.min(24) {
        let candidate = if k % 2 == 0 {
            let u = rand_element(&src_l, seed, "uf-ru", k as u64)?;
            let v = rand_element(&src_r, seed, "uf-rv", k as u64)?;
            let uv = diamond(&d, &u, &v, settings.clone())?;
            // Its tensor norm upper: one-term representation.
            let cost = one_term_rep(&d, &u, &v)?.cost_upper()?;
            (uv, cost)
        } else {
            let w = rand_element(&tensor_host, seed, "uf-rw", k as u64)?;
            let dd = DiamondOp::canonical(&base, p, settings.pairing)?;
            let (cost, _) = tensor_norm_upper(&w, &dd, copies, settings.restarts, rng::derive(seed, "uf-r", k as u64))?;
            (w, cost)
        };
        let (element, norm_upper) = candidate;
        if norm_upper == 0.0 {
            continue;
        }
        let image = LowerCertificate {
            target: QuantizedSpace::scalar_quantization(element.host().base().clone(), p),
            rho: rho_row.clone(),
            verified_amp_bound: upper_rho,
            method_tags: Vec::new(),
        }
        .apply(&element)?;
        let val = amplified_norm_with(&image, OptBudget::light(), 12)?.lower;
        lower_r = lower_r.max(val / norm_upper);
    }
    let lower_r = lower_r.min(upper_rho);
    let r_inf = NormEstimate::new(lower_r, upper_rho, vec!["product-lower".into(), "rho-transfer-upper".into()]);
    let r_bar_inf = NormEstimate::new(
        lower_r.max(lower_bar).min(upper_rho),
        upper_rho,
        vec!["j-lift-lower".into(), "rho-transfer-upper".into()],
    );

    let tolerance = 1e-3;
    let chain_consistent = brackets_overlap(&rho_inf, &rho_bar_inf, tolerance)
        && r_inf.lower <= r_bar_inf.upper + tolerance
        && brackets_overlap(&r_inf, &rho_inf, tolerance);

    Ok(FactorizationReport {
        rho_inf,
        rho_bar_inf,
        r_inf,
        r_bar_inf,
        chain_consistent,
        tolerance,
        seed,
    })
}

// ---------------------------------------------------------------------------
// Metric mapping property via representation transport
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricMappingReport {
    pub trials: usize,
    pub worst_ratio: f64,
    pub pass: bool,
    pub tolerance: f64,
    pub seed: u64,
}

/// Sampled check of `upper((phi (x) psi)_inf U) <= upper||phi_inf||
/// upper||psi_inf|| upper(U) + tol`, the left side computed by
/// transporting the best representation of `U`.
#[allow(clippy::too_many_arguments)]
pub fn check_metric_mapping_transport(
    phi: &DMatrix<f64>,
    psi: &DMatrix<f64>,
    src_left: &QuantizedSpace,
    src_right: &QuantizedSpace,
    dst_left: &QuantizedSpace,
    dst_right: &QuantizedSpace,
    trials: usize,
    seed: u64,
) -> Result<MetricMappingReport> {
    let nphi = amplify_operator(phi, src_left, dst_left, OptBudget::light(), rng::derive(seed, "mm-phi", 0))?;
    let npsi = amplify_operator(psi, src_right, dst_right, OptBudget::light(), rng::derive(seed, "mm-psi", 0))?;
    let settings = TensorSettings {
        copies: (src_left.underlying_dim() * src_right.underlying_dim()).max(4),
        pairing: crate::quantization::PairingKind::Cantor,
        restarts: 8,
    };
    let host = QuantizedSpace::p_convex_tensor(src_left.clone(), src_right.clone(), settings.clone())?;
    let d = DiamondOp::canonical(host.base(), host.p(), settings.pairing)?;
    let mut worst: f64 = 0.0;
    for k in 0..trials {
        let u = rand_element(&host, seed, "mm-u", k as u64)?;
        let candidates = upper_candidates(&u, &d, settings.copies, settings.restarts, rng::derive(seed, "mm-up", k as u64))?;
        let Some((upper_u, rep)) = candidates
            .into_iter()
            .flatten()
            .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"))
        else {
            continue;
        };
        if upper_u == 0.0 {
            continue;
        }
        let transported = rep.map_factors(phi, psi, dst_left, dst_right)?;
        let lhs = transported.cost_upper()?;
        let rhs = nphi.upper * npsi.upper * upper_u;
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        }
    }
    Ok(MetricMappingReport {
        trials,
        worst_ratio: worst,
        pass: worst <= 1.0 + tol::Tolerances::violation_threshold(tol::OPT),
        tolerance: tol::OPT,
        seed,
    })
}
