use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::lpcore::{operator_norm, LpFunctional, LpOperator, LpVector};
use crate::measure::{MeasurableSubset, MeasureSpace, Space};
use crate::rng;
use crate::tol;
use crate::underlying::UnderlyingNorm;

use super::*;

fn unit_space(n: usize) -> Space {
    Space::Plain(MeasureSpace::unit_atoms(n))
}

fn min_host(dl: usize, de: usize, p: f64) -> QuantizedSpace {
    QuantizedSpace::min(unit_space(dl), p, UnderlyingNorm::l1(de)).unwrap()
}

fn rand_element(host: &QuantizedSpace, seed: u64) -> AmplifiedElement {
    let mut r = rng::rng(seed, "qel", 0);
    let data = DMatrix::from_fn(host.base().dim(), host.underlying_dim(), |_, _| {
        r.gen_range(-1.0..1.0)
    });
    AmplifiedElement::new(host.clone(), data).unwrap()
}

fn rand_lpvec(space: &Space, p: f64, seed: u64) -> LpVector {
    let mut r = rng::rng(seed, "qv", 0);
    LpVector::new(space.clone(), p, (0..space.dim()).map(|_| r.gen_range(-1.0..1.0)).collect())
        .unwrap()
}

/// Sylvester-Hadamard matrix of order `2^k`, scaled to be orthogonal.
fn hadamard_orthogonal(order: usize) -> DMatrix<f64> {
    assert!(order.is_power_of_two());
    let mut h = DMatrix::from_element(1, 1, 1.0);
    let mut n = 1;
    while n < order {
        let mut next = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                next[(i, j)] = h[(i, j)];
                next[(i, j + n)] = h[(i, j)];
                next[(i + n, j)] = h[(i, j)];
                next[(i + n, j + n)] = -h[(i, j)];
            }
        }
        h = next;
        n *= 2;
    }
    h / (order as f64).sqrt()
}

// ---------------------------------------------------------------------------
// module action
// ---------------------------------------------------------------------------

#[test]
fn module_action_identity_and_projection() {
    let host = min_host(4, 2, 2.0);
    let u = rand_element(&host, 1);
    let id = LpOperator::identity(host.base().clone());
    assert_eq!(module_action(&id, &u).unwrap().data(), u.data());

    let z = MeasurableSubset::new(host.base(), [1, 3]).unwrap();
    let pz: LpOperator = crate::lpcore::proper_projection(host.base(), &z);
    let pu = module_action(&pz, &u).unwrap();
    for i in 0..4 {
        for s in 0..2 {
            let expect = if z.contains(i) { u.data()[(i, s)] } else { 0.0 };
            assert_eq!(pu.data()[(i, s)], expect);
        }
    }
    // Support of the projected element sits inside Z.
    assert!(pu.support().indices().all(|i| z.contains(i)));
}

#[test]
fn module_action_rank_one_factorizes_through_contraction() {
    // a u = xi (x) ((f (x) id_E) u) for a = <f, .> xi.
    let host = min_host(3, 2, 2.5);
    let u = rand_element(&host, 2);
    let xi = rand_lpvec(host.base(), 2.5, 3);
    let f = LpFunctional::new(host.base().clone(), 2.5, vec![0.4, -0.2, 0.9]).unwrap();
    let a = LpOperator::rank_one(&xi, &f);
    let au = module_action(&a, &u).unwrap();
    let y = l_contraction(&f, &u).unwrap();
    let expect = AmplifiedElement::elementary(host, &xi, &y).unwrap();
    assert!((au.data() - expect.data()).amax() < tol::EXACT);
}

// ---------------------------------------------------------------------------
// amplified norms
// ---------------------------------------------------------------------------

#[test]
fn elementary_min_norm_is_cross() {
    for (de, p) in [(2usize, 1.5), (3, 2.0), (2, 3.0)] {
        let host = min_host(3, de, p);
        let xi = rand_lpvec(host.base(), p, 40 + de as u64);
        let x = DVector::from_fn(de, |s, _| 0.3 + s as f64);
        let u = AmplifiedElement::elementary(host.clone(), &xi, &x).unwrap();
        let e = amplified_norm(&u).unwrap();
        let expect = xi.norm() * host.underlying().unwrap().norm(&x);
        assert!((e.lower - expect).abs() < tol::OPT, "lower {} vs {expect}", e.lower);
        assert!((e.upper - expect).abs() < tol::OPT, "upper {} vs {expect}", e.upper);
    }
}

#[test]
fn vector_valued_two_rows_example() {
    // u = e1 (x) x + e2 (x) y at p = 2, unit weights: (N(x)^2 + N(y)^2)^(1/2).
    let host =
        QuantizedSpace::vector_valued(unit_space(2), 2.0, UnderlyingNorm::l1(2)).unwrap();
    let x = DVector::from_vec(vec![1.0, 2.0]);
    let y = DVector::from_vec(vec![-0.5, 1.5]);
    let data = DMatrix::from_fn(2, 2, |i, s| if i == 0 { x[s] } else { y[s] });
    let u = AmplifiedElement::new(host.clone(), data).unwrap();
    let e = amplified_norm(&u).unwrap();
    let un = host.underlying().unwrap();
    let expect = (un.norm(&x).powi(2) + un.norm(&y).powi(2)).sqrt();
    assert!((e.lower - expect).abs() < tol::EXACT && e.gap() < tol::EXACT);
}

#[test]
fn max_bracket_dominates_min_bracket() {
    for k in 0..200u64 {
        let de = 2 + (k % 2) as usize;
        let minh = min_host(3, de, 2.0);
        let maxh = QuantizedSpace::max(unit_space(3), 2.0, UnderlyingNorm::l1(de)).unwrap();
        let u_min = rand_element(&minh, 100 + k);
        let u_max = AmplifiedElement::new(maxh, u_min.data().clone()).unwrap();
        let emin = amplified_norm(&u_min).unwrap();
        let emax = amplified_norm(&u_max).unwrap();
        assert!(
            emax.lower >= emin.lower - tol::OPT,
            "k={k}: projective lower {} under injective lower {}",
            emax.lower,
            emin.lower
        );
        assert!(emax.upper >= emin.lower - tol::OPT);
    }
}

#[test]
fn cross_norm_restriction_recovers_underlying() {
    // || xi (x) x || with unit xi equals N_E(x) for every kind.
    let bases = unit_space(3);
    let underlyings = [UnderlyingNorm::l1(2), UnderlyingNorm::l2(2), UnderlyingNorm::linf(2)];
    for un in underlyings {
        for p in [1.5, 2.0] {
            let hosts = [
                QuantizedSpace::min(bases.clone(), p, un.clone()).unwrap(),
                QuantizedSpace::max(bases.clone(), p, un.clone()).unwrap(),
                QuantizedSpace::vector_valued(bases.clone(), p, un.clone()).unwrap(),
            ];
            let mut xi = rand_lpvec(&bases, p, 7);
            let nx = xi.norm();
            xi = xi.scale(1.0 / nx);
            let x = DVector::from_vec(vec![0.8, -1.3]);
            for host in hosts {
                let u = AmplifiedElement::elementary(host.clone(), &xi, &x).unwrap();
                let e = amplified_norm(&u).unwrap();
                let expect = un.norm(&x);
                assert!(
                    e.contains(expect, tol::OPT),
                    "kind {} bracket [{}, {}] vs {}",
                    host.kind().name(),
                    e.lower,
                    e.upper,
                    expect
                );
                // Both endpoints tight on elementary tensors.
                assert!(e.gap() < tol::OPT);
            }
            // Standard extension of the min structure.
            let inner = QuantizedSpace::min(bases.clone(), p, un.clone()).unwrap();
            let host = QuantizedSpace::standard_extension(inner.clone(), 3).unwrap();
            let u0 = AmplifiedElement::elementary(inner, &xi, &x).unwrap();
            let lifted = j_map(&u0, 3).unwrap();
            assert_eq!(lifted.host(), &host);
            let e = amplified_norm(&lifted).unwrap();
            assert!(e.contains(un.norm(&x), tol::OPT));
        }
    }
}

#[test]
fn standard_extension_norm_is_p_sum() {
    let inner = QuantizedSpace::vector_valued(unit_space(2), 2.0, UnderlyingNorm::l1(2)).unwrap();
    let host = QuantizedSpace::standard_extension(inner.clone(), 2).unwrap();
    let u1 = rand_element(&inner, 11);
    let u2 = rand_element(&inner, 12);
    let mut data = DMatrix::zeros(4, 2);
    for i in 0..2 {
        for s in 0..2 {
            data[(i, s)] = u1.data()[(i, s)];
            data[(i + 2, s)] = u2.data()[(i, s)];
        }
    }
    let u = AmplifiedElement::new(host, data).unwrap();
    let e = amplified_norm(&u).unwrap();
    let n1 = amplified_norm(&u1).unwrap().lower;
    let n2 = amplified_norm(&u2).unwrap().lower;
    let expect = (n1 * n1 + n2 * n2).sqrt();
    assert!((e.lower - expect).abs() < tol::CLOSED);
}

// ---------------------------------------------------------------------------
// extension dual norm
// ---------------------------------------------------------------------------

#[test]
fn extension_dual_norm_examples() {
    let s = unit_space(2);
    let f1 = LpFunctional::new(s.clone(), 2.0, vec![3.0, 0.0]).unwrap();
    assert!((extension_dual_norm(std::slice::from_ref(&f1)).unwrap() - 3.0).abs() < tol::EXACT);

    let f2 = LpFunctional::new(s.clone(), 2.0, vec![0.0, 4.0]).unwrap();
    let n = extension_dual_norm(&[f1, f2]).unwrap();
    assert!((n - 5.0).abs() < tol::EXACT, "p=2 components of norms 3 and 4 give 5, got {n}");

    // p = 1 (q = inf): max of component norms.
    let g1 = LpFunctional::new(s.clone(), 1.0, vec![2.0, 0.0]).unwrap();
    let g2 = LpFunctional::new(s, 1.0, vec![0.0, 3.0]).unwrap();
    assert!((extension_dual_norm(&[g1, g2]).unwrap() - 3.0).abs() < tol::EXACT);
}

#[test]
fn extension_dual_norm_matches_pairing_oracle() {
    // Brute-force sup { |<f, v>| : ||v|| <= 1 } by normalized hill climbing
    // over the concatenated coefficient vector.
    let s = unit_space(3);
    for (case, p) in [(0u64, 1.5), (1, 2.0), (2, 3.0)] {
        for k in 0..17u64 {
            let mut r = rng::rng(9000 + case, "edn", k);
            let parts: Vec<LpFunctional> = (0..3)
                .map(|_| {
                    LpFunctional::new(
                        s.clone(),
                        p,
                        (0..3).map(|_| r.gen_range(-1.0..1.0)).collect(),
                    )
                    .unwrap()
                })
                .collect();
            let expect = extension_dual_norm(&parts).unwrap();

            let w = s.weights();
            let pair = |v: &DVector<f64>| -> f64 {
                let mut acc = 0.0;
                for m in 0..3 {
                    for i in 0..3 {
                        acc += w[i] * parts[m].coeffs()[i] * v[3 * m + i];
                    }
                }
                acc
            };
            let pnorm = |v: &DVector<f64>| -> f64 {
                (0..9).map(|t| w[t % 3] * v[t].abs().powf(p)).sum::<f64>().powf(1.0 / p)
            };
            let mut best = 0.0f64;
            let mut best_v = DVector::zeros(9);
            for _ in 0..200 {
                let v = DVector::from_fn(9, |_, _| r.gen_range(-1.0..1.0));
                let g = pair(&v).abs() / pnorm(&v);
                if g > best {
                    best = g;
                    best_v = v;
                }
            }
            let mut step = 0.5;
            for _ in 0..600 {
                if step < 1e-9 {
                    break;
                }
                let mut improved = false;
                for t in 0..9 {
                    for dir in [step, -step] {
                        let mut v = best_v.clone();
                        v[t] += dir;
                        let g = pair(&v).abs() / pnorm(&v);
                        if g > best {
                            best = g;
                            best_v = v;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            assert!(
                (best - expect).abs() < 1e-4 * (1.0 + expect),
                "p={p} k={k}: oracle {best} vs formula {expect}"
            );
        }
    }
}

// ---------------------------------------------------------------------------
// near-L criterion
// ---------------------------------------------------------------------------

#[test]
fn near_l_check_passes_for_min_and_vv() {
    let hosts = [
        QuantizedSpace::min(unit_space(3), 2.0, UnderlyingNorm::l1(3)).unwrap(),
        QuantizedSpace::vector_valued(unit_space(3), 2.0, UnderlyingNorm::l1(3)).unwrap(),
        QuantizedSpace::standard_extension(
            QuantizedSpace::min(unit_space(2), 1.5, UnderlyingNorm::l1(2)).unwrap(),
            2,
        )
        .unwrap(),
    ];
    for host in hosts {
        let report = near_l_check(&host, 400, 77).unwrap();
        assert_eq!(report.violations, 0, "kind {}", host.kind().name());
        assert!(report.worst_ratio <= 1.0 + tol::OPT);
    }
}

// ---------------------------------------------------------------------------
// the fixed contractibility witness (vector-valued structure)
// ---------------------------------------------------------------------------

#[test]
fn hadamard_witness_ratio_two_at_dim_four() {
    // Four unit atoms, E = l1^4, u = sum_i e_i (x) e_i, a = H4 / 2.
    let host = QuantizedSpace::vector_valued(unit_space(4), 2.0, UnderlyingNorm::l1(4)).unwrap();
    let u = AmplifiedElement::new(host.clone(), DMatrix::identity(4, 4)).unwrap();
    let a = LpOperator::endomorphism(unit_space(4), hadamard_orthogonal(4)).unwrap();

    let norm_u = amplified_norm(&u).unwrap();
    assert!((norm_u.lower - 2.0).abs() < tol::CLOSED && norm_u.gap() < tol::EXACT);

    let norm_a = operator_norm(&a, 2.0).unwrap();
    assert!((norm_a.lower - 1.0).abs() < tol::CLOSED);

    let au = module_action(&a, &u).unwrap();
    let norm_au = amplified_norm(&au).unwrap();
    assert!((norm_au.lower - 4.0).abs() < tol::CLOSED, "||a u|| = {}", norm_au.lower);

    let ratio = norm_au.lower / (norm_a.upper * norm_u.upper);
    assert!((ratio - 2.0).abs() < tol::CLOSED, "ratio {ratio}");
}

#[test]
fn hadamard_witness_ratio_sqrt2_at_dim_two() {
    // The 2x2 instance tops out at the Banach-Mazur distance sqrt(2).
    let host = QuantizedSpace::vector_valued(unit_space(2), 2.0, UnderlyingNorm::l1(2)).unwrap();
    let u = AmplifiedElement::new(host.clone(), DMatrix::identity(2, 2)).unwrap();
    let a = LpOperator::endomorphism(unit_space(2), hadamard_orthogonal(2)).unwrap();
    let ratio = amplified_norm(&module_action(&a, &u).unwrap()).unwrap().lower
        / (operator_norm(&a, 2.0).unwrap().upper * amplified_norm(&u).unwrap().upper);
    assert!((ratio - 2.0_f64.sqrt()).abs() < tol::CLOSED, "ratio {ratio}");
}

// ---------------------------------------------------------------------------
// diamonds
// ---------------------------------------------------------------------------

#[test]
fn canonical_diamond_cross_identity() {
    let m = MeasureSpace::new(vec![("a".into(), 0.5), ("b".into(), 2.0)], 1, 0.25, false).unwrap();
    let s = Space::Plain(m);
    for p in [1.0, 1.5, 2.0, 3.0] {
        let d = DiamondOp::canonical(&s, p, PairingKind::Cantor).unwrap();
        assert!((d.bilinear_norm() - 1.0).abs() < tol::EXACT);
        for k in 0..50u64 {
            let xi = rand_lpvec(&s, p, 500 + k);
            let eta = rand_lpvec(&s, p, 600 + k);
            let dd = d.apply_vectors(&xi, &eta).unwrap();
            assert!(
                (dd.norm() - xi.norm() * eta.norm()).abs() < tol::CLOSED,
                "p={p} k={k}: {} vs {}",
                dd.norm(),
                xi.norm() * eta.norm()
            );
        }
    }
}

#[test]
fn diamond_elementary_factorization_and_bilinearity() {
    let s = unit_space(2);
    let p = 2.0;
    let d = DiamondOp::canonical(&s, p, PairingKind::Cantor).unwrap();
    let he = min_host(2, 2, p);
    let hf = QuantizedSpace::min(s.clone(), p, UnderlyingNorm::l2(2)).unwrap();

    let xi = rand_lpvec(&s, p, 1);
    let eta = rand_lpvec(&s, p, 2);
    let x = DVector::from_vec(vec![1.0, -2.0]);
    let y = DVector::from_vec(vec![0.5, 0.25]);
    let u = AmplifiedElement::elementary(he.clone(), &xi, &x).unwrap();
    let v = AmplifiedElement::elementary(hf.clone(), &eta, &y).unwrap();

    let uv = diamond(&d, &u, &v, TensorSettings::default()).unwrap();
    // (xi x) <> (eta y) = (xi <> eta) (x (x) y).
    let de = d.apply_vectors(&xi, &eta).unwrap();
    for row in 0..d.target().dim() {
        for i in 0..2 {
            for j in 0..2 {
                let expect = de.coeffs()[row] * x[i] * y[j];
                assert!((uv.data()[(row, i * 2 + j)] - expect).abs() < tol::EXACT);
            }
        }
    }

    // Bilinearity is exact.
    let u2 = rand_element(&he, 3);
    let both = diamond(&d, &u.add(&u2).unwrap(), &v, TensorSettings::default()).unwrap();
    let split = diamond(&d, &u, &v, TensorSettings::default())
        .unwrap()
        .add(&diamond(&d, &u2, &v, TensorSettings::default()).unwrap())
        .unwrap();
    assert!((both.data() - split.data()).amax() < tol::EXACT);
}

#[test]
fn diamond_overflow_errors() {
    let s = unit_space(3);
    let tiny = unit_space(4); // Cantor needs index 12 for dim 3
    let err = DiamondOp::with_target(s.clone(), tiny, 2.0, PairingKind::Cantor).unwrap_err();
    assert!(matches!(err, crate::Error::DiamondOverflow { .. }));
    assert!(err.to_string().contains("increase copies/resolution"));
}

#[test]
fn row_major_pairing_also_norm_one() {
    let s = unit_space(2);
    let d = DiamondOp::canonical(&s, 1.5, PairingKind::RowMajor).unwrap();
    assert!((d.bilinear_norm() - 1.0).abs() < tol::EXACT);
    assert_eq!(d.target().dim(), 4);
}

// ---------------------------------------------------------------------------
// J / Q and the bar diamond
// ---------------------------------------------------------------------------

#[test]
fn j_q_round_trip_and_norms() {
    let host = min_host(3, 2, 2.0);
    let u = rand_element(&host, 21);
    let lifted = j_map(&u, 4).unwrap();
    let back = q_map(&lifted).unwrap();
    assert_eq!(back.data(), u.data());

    // J is isometric for the standard-extension norm.
    let nu = amplified_norm(&u).unwrap();
    let nl = amplified_norm(&lifted).unwrap();
    assert!((nu.lower - nl.lower).abs() < tol::CLOSED && (nu.upper - nl.upper).abs() < tol::CLOSED);

    // Q is contractive on random extension elements.
    let ext_host = QuantizedSpace::standard_extension(host.clone(), 3).unwrap();
    for k in 0..200u64 {
        let bar = rand_element(&ext_host, 3000 + k);
        let q = q_map(&bar).unwrap();
        let nq = amplified_norm(&q).unwrap();
        let nb = amplified_norm(&bar).unwrap();
        assert!(nq.lower <= nb.upper + tol::CLOSED);
        // Exact evaluations on l1 underlying: compare the certified sides.
        assert!(nq.upper <= nb.upper + tol::CLOSED);
    }
}

#[test]
fn bar_diamond_matches_base_diamond_through_j() {
    let s = unit_space(2);
    let p = 2.0;
    let d = DiamondOp::canonical(&s, p, PairingKind::Cantor).unwrap();
    for k in 0..30u64 {
        let xi = rand_lpvec(&s, p, 800 + k);
        let eta = rand_lpvec(&s, p, 900 + k);
        let jxi = j_vector(&xi, 3).unwrap();
        let jeta = j_vector(&eta, 3).unwrap();
        let bar = bar_diamond_vectors(&d, &jxi, &jeta).unwrap();
        let core = q_vector(&bar).unwrap();
        let direct = d.apply_vectors(&xi, &eta).unwrap();
        assert!((core.coeffs() - direct.coeffs()).amax() < tol::EXACT);
        // Norm-one property of the bar diamond on these samples.
        assert!(bar.norm() <= jxi.norm() * jeta.norm() + tol::CLOSED);
    }
}

#[test]
fn bar_diamond_kills_higher_copies() {
    let s = unit_space(2);
    let d = DiamondOp::canonical(&s, 2.0, PairingKind::Cantor).unwrap();
    let host = min_host(2, 2, 2.0);
    let ext = QuantizedSpace::standard_extension(host.clone(), 3).unwrap();
    // Element supported purely in copy 2.
    let mut data = DMatrix::zeros(6, 2);
    data[(2, 0)] = 1.0;
    data[(3, 1)] = -2.0;
    let u = AmplifiedElement::new(ext.clone(), data).unwrap();
    let v = j_map(&rand_element(&host, 5), 3).unwrap();
    let out = bar_diamond(&d, &u, &v, TensorSettings::default()).unwrap();
    assert_eq!(out.data().amax(), 0.0);
}

// ---------------------------------------------------------------------------
// amplified operators
// ---------------------------------------------------------------------------

#[test]
fn amplify_identity_and_scaling() {
    for un in [UnderlyingNorm::l1(2), UnderlyingNorm::l2(2), UnderlyingNorm::lr(1.5, 2)] {
        let host = QuantizedSpace::min(unit_space(3), 2.0, un).unwrap();
        let id = DMatrix::identity(2, 2);
        let e = amplify_operator(&id, &host, &host, OptBudget::default(), 5).unwrap();
        assert!(e.contains(1.0, tol::OPT), "bracket [{}, {}]", e.lower, e.upper);
        assert!(e.gap() <= tol::OPT);

        let e2 = amplify_operator(&(id * 2.0), &host, &host, OptBudget::default(), 5).unwrap();
        assert!(e2.contains(2.0, tol::OPT));
    }
}

#[test]
fn amplified_norm_equals_underlying_norm_for_min_kind() {
    // || phi_inf || = || phi || on random 2x2 maps; both sides have
    // corner-exact evaluations for l1 underlying norms.
    let host = min_host(2, 2, 2.0);
    for k in 0..40u64 {
        let mut r = rng::rng(4000 + k, "phi", 0);
        let phi = DMatrix::from_fn(2, 2, |_, _| r.gen_range(-1.0..1.0));
        let bracket = amplify_operator(&phi, &host, &host, OptBudget::default(), k).unwrap();
        assert!(bracket.gap() < tol::OPT);

        // Oracle: sampled amplified ratios never exceed the bracket, and
        // the attaining elementary tensor reaches its lower end.
        let mut sampled: f64 = 0.0;
        for t in 0..40u64 {
            let u = rand_element(&host, 9000 + 40 * k + t);
            let fu = amplify_apply(&phi, &u, &host).unwrap();
            let r_up = amplified_norm(&fu).unwrap().lower;
            let r_dn = amplified_norm(&u).unwrap().upper;
            if r_dn > 0.0 {
                sampled = sampled.max(r_up / r_dn);
            }
        }
        assert!(sampled <= bracket.upper + 1e-4);
        let e_ball = host.underlying().unwrap();
        let x_star = e_ball
            .primal_ball_extremes()
            .unwrap()
            .into_iter()
            .max_by(|a, b| {
                e_ball.norm(&(&phi * a)).partial_cmp(&e_ball.norm(&(&phi * b))).unwrap()
            })
            .unwrap();
        let xi = LpVector::basis(host.base().clone(), 2.0, 0);
        let u_star = AmplifiedElement::elementary(host.clone(), &xi, &x_star).unwrap();
        let attained = amplified_norm(&amplify_apply(&phi, &u_star, &host).unwrap())
            .unwrap()
            .lower
            / amplified_norm(&u_star).unwrap().upper;
        assert!((attained - bracket.lower).abs() < 1e-9, "attained {attained} vs {}", bracket.lower);
    }
}

#[test]
fn amplification_is_module_morphism() {
    // phi_inf(a u) = a phi_inf(u), exactly.
    let he = min_host(3, 2, 2.0);
    let hf = QuantizedSpace::min(unit_space(3), 2.0, UnderlyingNorm::l1(3)).unwrap();
    let mut r = rng::rng(31, "mm", 0);
    let phi = DMatrix::from_fn(3, 2, |_, _| r.gen_range(-1.0..1.0));
    for k in 0..50u64 {
        let u = rand_element(&he, 500 + k);
        let a = LpOperator::endomorphism(
            he.base().clone(),
            DMatrix::from_fn(3, 3, |_, _| r.gen_range(-1.0..1.0)),
        )
        .unwrap();
        let lhs = amplify_apply(&phi, &module_action(&a, &u).unwrap(), &hf).unwrap();
        let rhs = module_action(&a, &amplify_apply(&phi, &u, &hf).unwrap()).unwrap();
        assert!((lhs.data() - rhs.data()).amax() < tol::EXACT);
    }
}

#[test]
fn mixed_kind_amplification_rejected() {
    let he = min_host(2, 2, 2.0);
    let hf = QuantizedSpace::vector_valued(unit_space(2), 2.0, UnderlyingNorm::l1(2)).unwrap();
    let phi = DMatrix::identity(2, 2);
    assert!(matches!(
        amplify_operator(&phi, &he, &hf, OptBudget::default(), 0),
        Err(crate::Error::UnsupportedKind(_))
    ));
}

#[test]
fn tensor_kind_defers_to_tensor_layer() {
    let he = min_host(2, 2, 2.0);
    let hf = min_host(2, 2, 2.0);
    let host = QuantizedSpace::p_convex_tensor(he, hf, TensorSettings::default()).unwrap();
    assert_eq!(host.underlying_dim(), 4);
    let u = AmplifiedElement::zero(host);
    assert!(matches!(amplified_norm(&u), Err(crate::Error::UnsupportedKind(_))));
}
