use proptest::prelude::*;
use tripletflow_core::cayley::*;
use tripletflow_core::fixtures::*;
use tripletflow_core::linalg::*;
use tripletflow_core::relspace::*;

/// T = {(a e₁, 0)} in C², A = graph of the zero matrix.
fn defect_one_model(mu: C64) -> SymmetricModel {
    let t = LinearRelation::from_blocks(&from_real(2, 1, &[1.0, 0.0]), &zeros(2, 1), 1e-10).unwrap();
    let a = LinearRelation::graph_of(&zeros(2, 2));
    SymmetricModel::new(t, a, mu, 1e-10).unwrap()
}

fn e(n: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[i] = cr(1.0);
    v
}

#[test]
fn self_adjoint_t_has_no_defect() {
    let mut r = rng(4);
    let h = random_hermitian(&mut r, 4);
    let t = LinearRelation::graph_of(&h);
    let (kp, km) = deficiency_of(&t, I).unwrap();
    assert_eq!((kp.dim(), km.dim()), (0, 0));
    let m = SymmetricModel::new(t.clone(), t, I, 1e-10).unwrap();
    assert_eq!(m.isometry_v().shape(), (0, 0));
}

#[test]
fn defect_one_model_oracle() {
    // T* = {(x, y) : y₁ = 0}, so (x, ix) ∈ T* forces x₁ = 0: K± = span(e₂)
    let m = defect_one_model(I);
    let (kp, km) = m.deficiency_spaces();
    assert_eq!((kp.dim(), km.dim()), (1, 1));
    assert!(kp.distance_to(&e(2, 1)) < 1e-14 && km.distance_to(&e(2, 1)) < 1e-14);
    // A = graph(0): V = (0 − i)/(0 + i) = −1 up to the basis phases
    let v = m.isometry_v()[(0, 0)];
    assert!((v.norm() - 1.0).abs() < 1e-14);
    let phase = kp.basis()[(1, 0)] / km.basis()[(1, 0)];
    assert!((v * km.basis()[(1, 0)] / kp.basis()[(1, 0)] - cr(-1.0)).norm() < 1e-14, "{v} {phase}");
}

#[test]
fn isometry_matches_cayley_restriction() {
    let mut r = rng(17);
    for _ in 0..10 {
        let m = random_model(&mut r, 6, 2, c(0.3, 1.7)).unwrap();
        let (kp, km) = m.deficiency_spaces();
        let u = mu_cayley(m.a(), m.mu()).unwrap();
        let lhs = &u * kp.basis();
        let rhs = km.basis() * m.isometry_v();
        assert!(max_abs(&(lhs - rhs)) < 1e-10);
        let v = m.isometry_v();
        assert!(max_abs(&(v.adjoint() * v - eye(2))) < 1e-12);
    }
}

#[test]
fn components_of_domain_and_deficiency_vectors() {
    let mut r = rng(21);
    let m = random_model(&mut r, 5, 2, I).unwrap();
    let t_pair = m.t().graph().basis().column(0).into_owned();
    let p = von_neumann_components(&m, &t_pair).unwrap();
    assert!((p.z_t - &t_pair).norm() < 1e-12);
    for v in [&p.z_plus, &p.z_minus, &p.z0, &p.z1] {
        assert!(v.norm() < 1e-12);
    }
    let (_, km) = m.deficiency_spaces();
    let z = km.basis().column(1).into_owned();
    let pair = m.pair(&z, &(&z * m.mu().conj()));
    let p = von_neumann_components(&m, &pair).unwrap();
    assert!((&p.z0 - &z).norm() < 1e-12);
    assert!((&p.z1 + &z * m.mu()).norm() < 1e-12);
}

#[test]
fn decomposition_agrees_with_qr_oracle() {
    let mut r = rng(33);
    for _ in 0..20 {
        let m = random_model(&mut r, 6, 2, I).unwrap();
        let (kp, km) = m.deficiency_spaces();
        let coeff = random_cvec(&mut r, m.tstar().dim());
        let z = m.tstar().graph().basis() * coeff;
        let p = von_neumann_components(&m, &z).unwrap();
        // oracle: QR least squares on [T | (x, ix) | (x, −ix)]
        let lp = vstack(kp.basis(), &(kp.basis() * I));
        let lm = vstack(km.basis(), &(km.basis() * (-I)));
        let big = hstack(&hstack(m.t().graph().basis(), &lp), &lm);
        let qr = big.clone().qr();
        let rhs = qr.q().adjoint() * &z;
        let sol = qr.r().solve_upper_triangular(&rhs).unwrap();
        let d = m.t().dim();
        let zp = kp.basis() * sol.rows(d, 2);
        let zm = km.basis() * sol.rows(d + 2, 2);
        assert!((zp - &p.z_plus).norm() < 1e-10);
        assert!((zm - &p.z_minus).norm() < 1e-10);
        assert!(p.reconstruction < 1e-10, "{} {}", p.reconstruction, p.membership);
    }
}

#[test]
fn lagrange_identity_on_special_pairs() {
    let mut r = rng(8);
    let m = random_model(&mut r, 5, 2, I).unwrap();
    let (kp, km) = m.deficiency_spaces();
    let xp = kp.basis().column(0).into_owned();
    let zm = km.basis().column(1).into_owned();
    let x = m.pair(&xp, &(&xp * I));
    let z = m.pair(&zm, &(&zm * (-I)));
    assert!(lagrange_vonn_check(&m, &x, &z) < 1e-10);
    let t0 = m.t().graph().basis().column(0).into_owned();
    let t1 = m.t().graph().basis().column(1).into_owned();
    assert!(lagrange_vonn_check(&m, &t0, &t1) < 1e-12);
}

#[test]
fn extension_examples() {
    let mut r = rng(12);
    let m = random_model(&mut r, 6, 2, I).unwrap();
    let ext = extension_from_relation(&m, &LinearRelation::multivalued(2)).unwrap();
    assert!(ext.self_adjoint);
    assert!(ext.relation.gap(m.a()) < 1e-10);
    // graph of 0: the restriction of T* to Ker Γ₁
    let ext = extension_from_relation(&m, &LinearRelation::graph_of(&zeros(2, 2))).unwrap();
    let g1 = m.gamma1_matrix() * ext.relation.graph().basis();
    assert!(max_abs(&g1) < 1e-10);
    assert!(ext.self_adjoint);
    let skew = LinearRelation::graph_of(&CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(0.0), cr(0.0)]));
    let ext = extension_from_relation(&m, &skew).unwrap();
    assert!(!ext.boundary_self_adjoint && !ext.self_adjoint);
}

#[test]
fn defect_one_scalar_conditions() {
    let m = defect_one_model(I);
    for t in [-2.0, 0.0, 1.0, 5.0] {
        let b = LinearRelation::graph_of(&from_real(1, 1, &[t]));
        let ext = extension_from_relation(&m, &b).unwrap();
        assert!(ext.self_adjoint);
        assert!(m.t().graph().excess(ext.relation.graph()) < 1e-12);
        assert!(ext.relation.graph().excess(m.tstar().graph()) < 1e-12);
    }
    let b = LinearRelation::graph_of(&from_real(1, 1, &[1.0]));
    let (r1, r2) = cayley_factorization_check(&m, &b).unwrap();
    assert!(r1 < 1e-10 && r2 < 1e-10, "{r1} {r2}");
}

#[test]
fn trivial_boundary_condition_gives_identity_factor() {
    let mut r = rng(2);
    let m = random_model(&mut r, 7, 3, I).unwrap();
    let (r1, r2) = cayley_factorization_check(&m, &LinearRelation::multivalued(3)).unwrap();
    assert!(r1 < 1e-12 && r2 < 1e-12);
}

#[test]
fn partial_cayley_plus_isometry() {
    let mut r = rng(40);
    for _ in 0..10 {
        let m = random_model_any(&mut r, c(-0.5, 2.0)).unwrap();
        assert!(cayley_t_residual(&m).unwrap() < 1e-10);
    }
}

#[test]
fn model_literal_round_trip() {
    let mut r = rng(77);
    let m = random_model(&mut r, 4, 1, I).unwrap();
    let text = serde_json::to_string(&ModelLiteral::from_model(&m)).unwrap();
    let back: ModelLiteral = serde_json::from_str(&text).unwrap();
    let m2 = back.to_model(1e-10).unwrap();
    assert!(m2.a().gap(m.a()) < 1e-14);
}

#[test]
fn invalid_models_are_rejected() {
    let t = LinearRelation::graph_of(&from_real(1, 1, &[1.0]));
    assert!(SymmetricModel::new(t.clone(), t.clone(), cr(1.0), 1e-10).is_err());
    let not_sym = LinearRelation::graph_of(&CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(0.0), cr(0.0)]));
    assert!(SymmetricModel::new(not_sym.clone(), not_sym, I, 1e-10).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn random_models_satisfy_the_identities(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_model_any(&mut r, I).unwrap();
        let (kp, km) = m.deficiency_spaces();
        prop_assert_eq!(kp.dim(), km.dim());
        let ts = m.tstar().graph().basis();
        let x = ts * random_cvec(&mut r, ts.ncols());
        let z = ts * random_cvec(&mut r, ts.ncols());
        let p = von_neumann_components(&m, &z).unwrap();
        prop_assert!(p.reconstruction < 1e-10);
        prop_assert!(lagrange_vonn_check(&m, &x, &z) < 1e-10);
        // the three blocks are independent: dimensions add up
        prop_assert_eq!(m.t().dim() + 2 * kp.dim(), m.tstar().dim());
        let mv = (seed % 2) as usize;
        let b = random_self_adjoint(&mut r, m.defect(), mv.min(m.defect()));
        let ext = extension_from_relation(&m, &b).unwrap();
        prop_assert!(ext.self_adjoint);
        let (r1, r2) = cayley_factorization_check(&m, &b).unwrap();
        prop_assert!(r1 < 1e-9 && r2 < 1e-9, "{} {}", r1, r2);
    }
}
