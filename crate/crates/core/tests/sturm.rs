use std::f64::consts::PI;

use proptest::prelude::*;
use rand::Rng;
use tripletflow_core::fixtures::rng;
use tripletflow_core::linalg::*;
use tripletflow_core::relspace::LinearRelation;
use tripletflow_core::sturm::*;

fn adaptive_simpson(f: &dyn Fn(f64) -> C64, a: f64, b: f64, tol: f64) -> C64 {
    fn simpson(f: &dyn Fn(f64) -> C64, a: f64, fa: C64, b: f64, fb: C64) -> (f64, C64, C64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (fa + fm * cr(4.0) + fb) * cr((b - a) / 6.0))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> C64, a: f64, fa: C64, b: f64, fb: C64, whole: C64, m: f64, fm: C64, tol: f64, depth: u32) -> C64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.norm() <= 15.0 * tol {
            return left + right + delta / cr(15.0);
        }
        rec(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1) + rec(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, whole, m, fm, tol, 40)
}

fn random_exppoly(r: &mut impl Rng, terms: usize) -> ExpPoly {
    let mut out = Vec::new();
    for _ in 0..terms {
        let rate = if r.gen_bool(0.25) { cr(0.0) } else { c(r.gen_range(-3.0..3.0), r.gen_range(-6.0..6.0)) };
        out.push(Term {
            coeff: c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)),
            power: r.gen_range(0..3),
            rate,
        });
    }
    ExpPoly::new(out)
}

#[test]
fn algebra_examples() {
    let lam = c(0.3, -1.2);
    let d = exppoly_derivative(&ExpPoly::exp(lam));
    assert_eq!(d, ExpPoly::exp(lam).scale(lam));
    assert!((exppoly_inner(&ExpPoly::constant(cr(1.0)), &ExpPoly::constant(cr(1.0))) - cr(1.0)).norm() < 1e-15);
    let xe = &ExpPoly::x() * &ExpPoly::exp(cr(1.0));
    assert!((xe.integral01() - cr(1.0)).norm() < 1e-14);
    assert!((exppoly_eval(&xe, 1.0) - cr(1f64.exp())).norm() < 1e-14);
}

#[test]
fn canonical_form_merges_and_drops() {
    let a = ExpPoly::new(vec![
        Term { coeff: cr(1.0), power: 1, rate: c(-0.0, 0.0) },
        Term { coeff: cr(-1.0), power: 1, rate: c(0.0, -0.0) },
        Term { coeff: cr(2.0), power: 0, rate: cr(1.0) },
    ]);
    assert_eq!(a, ExpPoly::exp(cr(1.0)).scale(cr(2.0)));
    assert!((&a - &a).is_zero());
}

#[test]
fn antiderivative_inverts_derivative() {
    let mut r = rng(3);
    for _ in 0..30 {
        let u = random_exppoly(&mut r, 5);
        let back = u.antiderivative().derivative();
        assert!((&back - &u).max_coeff() < 1e-10 * (1.0 + u.max_coeff()));
    }
}

#[test]
fn closed_form_inner_matches_quadrature() {
    let mut r = rng(5);
    for _ in 0..25 {
        let u = random_exppoly(&mut r, 4);
        let v = random_exppoly(&mut r, 4);
        let exact = u.inner(&v);
        let quad = adaptive_simpson(&|x| u.eval(x) * v.eval(x).conj(), 0.0, 1.0, 1e-13);
        assert!((exact - quad).norm() <= 1e-10 * (1.0 + exact.norm()), "{exact} vs {quad}");
    }
}

#[test]
fn moments_near_zero_rate() {
    for &lam in &[c(1e-9, 0.0), c(0.0, 1e-6), c(-0.4, 0.3), c(2.5, 0.0), c(-40.0, 3.0)] {
        for k in 0..5 {
            let quad = adaptive_simpson(&|x| cr(x.powi(k as i32)) * (lam * cr(x)).exp(), 0.0, 1.0, 1e-14);
            assert!((moment(k, lam) - quad).norm() < 1e-10, "k={k} lam={lam}");
        }
    }
}

#[test]
fn dirichlet_examples() {
    let u = dirichlet_solve(&ExpPoly::constant(cr(-2.0)));
    let expect = &ExpPoly::monomial(2) - &ExpPoly::x();
    assert!((&u - &expect).max_coeff() < 1e-14);

    let s = ExpPoly::sin(cr(PI));
    let u = dirichlet_solve(&s.scale(cr(PI * PI)));
    assert!((&u - &s).max_coeff() < 1e-12);

    // e^{λx}: u = −e^{λx}/λ² + αx + β with u(0) = u(1) = 0
    let lam = c(1.5, 0.7);
    let u = dirichlet_solve(&ExpPoly::exp(lam));
    let base = ExpPoly::exp(lam).scale(-cr(1.0) / (lam * lam));
    let beta = -base.eval(0.0);
    let alpha = -base.eval(1.0) - beta;
    let expect = &(&base + &ExpPoly::x().scale(alpha)) + &ExpPoly::constant(beta);
    assert!((&u - &expect).max_coeff() < 1e-13);
}

#[test]
fn dirichlet_is_two_sided_inverse() {
    let mut r = rng(8);
    for _ in 0..20 {
        let f = random_exppoly(&mut r, 6);
        let u = dirichlet_solve(&f);
        assert!((&u.tstar() - &f).max_coeff() < 1e-9 * (1.0 + f.max_coeff()));
        assert!(u.eval(0.0).norm() < 1e-11 && u.eval(1.0).norm() < 1e-11);
        // reverse direction on Dirichlet data
        let w = &f - &ExpPoly::constant(f.eval(0.0));
        let w = &w - &ExpPoly::x().scale(w.eval(1.0));
        let back = dirichlet_solve(&w.tstar());
        assert!((&back - &w).max_coeff() < 1e-9 * (1.0 + w.max_coeff()));
    }
}

#[test]
fn resolvent_solve_general_mu() {
    let mut r = rng(10);
    for &mu in &[I, -I, c(3.0, 0.5), c(-2.0, 0.0)] {
        let f = random_exppoly(&mut r, 5);
        let u = resolvent_solve(&f, mu).unwrap();
        assert!((&(&u.tstar() - &u.scale(mu)) - &f).max_coeff() < 1e-9);
        assert!(u.eval(0.0).norm() < 1e-11 && u.eval(1.0).norm() < 1e-11);
    }
    assert!(resolvent_solve(&ExpPoly::constant(cr(1.0)), cr(PI * PI)).is_err());
}

#[test]
fn deficiency_basis_examples() {
    let [a, b] = deficiency_basis(cr(0.0));
    assert_eq!(a, ExpPoly::constant(cr(1.0)));
    assert_eq!(b, ExpPoly::x());
    for &mu in &[cr(PI * PI), I] {
        for u in deficiency_basis(mu) {
            assert!((&u.tstar() - &u.scale(mu)).max_coeff() < 1e-12);
        }
    }
    let [e, _] = deficiency_basis(I);
    let lam = e.terms()[0].rate;
    assert!((lam * lam + I).norm() < 1e-15);
    assert!((lam - C64::from_polar(1.0, -PI / 4.0)).norm() < 1e-15);
    // span{sin πx, cos πx}
    let [p, q] = deficiency_basis(cr(PI * PI));
    let s = ExpPoly::sin(cr(PI));
    let g = CMat::from_fn(3, 3, |i, j| {
        let v = [&p, &q, &s];
        v[j].inner(v[i])
    });
    assert!(smallest_singular(&g) < 1e-12);
}

#[test]
fn m0_closed_form() {
    let m = rellich_m0();
    let expect = from_real(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
    assert!(max_abs(&(&m - &expect)) <= 1e-12);
    let apply = |a: f64, b: f64| &m * CVec::from_vec(vec![cr(a), cr(b)]);
    assert_eq!(apply(1.0, 1.0), CVec::from_vec(vec![cr(0.0), cr(0.0)]));
    // graph(M0) equals the Cauchy data span{(a,b,b−a,a−b)}
    let g = LinearRelation::graph_of(&m);
    let cauchy = from_real(4, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 1.0, 1.0, -1.0]);
    let data = LinearRelation::from_columns(2, 2, &cauchy, 1e-10).unwrap();
    assert!(g.gap(&data) < 1e-12);
}

#[test]
fn lagrange_identity_exact() {
    let mut r = rng(12);
    for _ in 0..40 {
        let u = random_exppoly(&mut r, 6);
        let v = random_exppoly(&mut r, 6);
        let scale = 1.0 + u.max_coeff() * v.max_coeff() * 100.0;
        assert!(lagrange_residual(&u, &v) <= 1e-13 * scale);
    }
}

#[test]
fn rellich_relations() {
    let r0 = rellich_relation(0.0);
    let expect = from_real(4, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    assert!(r0.gap(&LinearRelation::from_columns(2, 2, &expect, 1e-10).unwrap()) < 1e-14);
    let inf = rellich_relation(f64::INFINITY);
    assert!(inf.gap(&LinearRelation::multivalued(2)) < 1e-14);
    for &k in &[-3.0, 0.0, 0.5, 1.0, 7.0, f64::INFINITY] {
        assert!(rellich_relation(k).is_self_adjoint(1e-10).unwrap());
    }
    assert_eq!(kappa_of_theta(0.0), f64::INFINITY);
    assert!((kappa_of_theta(PI / 2.0) - 1.0).abs() < 1e-15);
    assert!(rellich_relation_theta(PI / 2.0).gap(&rellich_relation(1.0)) < 1e-14);
}

#[test]
fn secular_limits() {
    let d = secular_eigenvalues(f64::INFINITY, 400.0, 5).unwrap();
    for (n, l) in d.iter().enumerate() {
        let exact = ((n + 1) as f64 * PI).powi(2);
        assert!((l - exact).abs() <= 1e-10 * exact, "{l} vs {exact}");
    }
    let neumann = SeparatedRobin { left: RobinEnd::DIRICHLET, right: RobinEnd::NEUMANN };
    let nv = neumann.eigenvalues(400.0, 5).unwrap();
    assert_eq!(nv.len(), 5);
    for (n, l) in nv.iter().enumerate() {
        let exact = ((n as f64 + 0.5) * PI).powi(2);
        assert!((l - exact).abs() <= 1e-10 * exact);
    }
    let at_one = secular_eigenvalues(1.0, 400.0, 1).unwrap();
    assert!(at_one[0].abs() < 1e-12);
}

fn tanh_oracle() -> f64 {
    // tanh s = s/2 on (1, 3)
    let (mut a, mut b) = (1.0f64, 3.0f64);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (m.tanh() - m / 2.0) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn negative_branch_oracle() {
    let s = tanh_oracle();
    assert!((s - 1.9150).abs() < 1e-4);
    let l = secular_eigenvalues(2.0, 400.0, 1).unwrap()[0];
    assert!((l + s * s).abs() <= 1e-8, "{l} vs {}", -s * s);
    assert!((l + 3.6672).abs() < 1e-4);
}

#[test]
fn eigenfunction_residuals() {
    for &k in &[-5.0, -0.3, 0.0, 1.0, 2.0, 30.0, f64::INFINITY] {
        let fam = SeparatedRobin::rellich(k);
        for l in fam.eigenvalues(400.0, 10).unwrap() {
            assert!(fam.eigen_residual(l) <= 1e-10, "κ={k} λ={l}");
        }
    }
    let general = SeparatedRobin { left: RobinEnd { p: 0.6, q: -0.8 }, right: RobinEnd { p: 1.0, q: 2.0 } };
    for l in general.eigenvalues(400.0, 10).unwrap() {
        assert!(general.eigen_residual(l) <= 1e-10);
    }
}

#[test]
fn galerkin_examples() {
    assert!(galerkin_project(3).is_err());
    let g = galerkin_project(8).unwrap();
    let p2 = PI * PI;
    assert!((g.cayley[0] - (cr(p2) - I) / (cr(p2) + I)).norm() < 1e-15);
    let s2 = g.coordinates(&ExpPoly::sin(cr(2.0 * PI)));
    for n in 0..8 {
        let expect = if n == 1 { 1.0 / 2f64.sqrt() } else { 0.0 };
        assert!((s2[n] - cr(expect)).norm() < 1e-13, "{n}: {}", s2[n]);
    }
    let x = g.coordinates(&ExpPoly::x());
    for n in 1..=8 {
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let expect = 2f64.sqrt() * sign / (n as f64 * PI);
        assert!((x[n - 1] - cr(expect)).norm() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn lagrange_identity_random(seed in any::<u64>(), nu in 1usize..=6, nv in 1usize..=6) {
        let mut r = rng(seed);
        let u = random_exppoly(&mut r, nu);
        let v = random_exppoly(&mut r, nv);
        let scale = 1.0 + u.max_coeff() * v.max_coeff() * 100.0;
        prop_assert!(lagrange_residual(&u, &v) <= 1e-13 * scale);
    }

    #[test]
    fn robin_family_self_adjoint(theta in 0.0..(2.0 * PI)) {
        prop_assert!(rellich_relation_theta(theta).is_self_adjoint(1e-10).unwrap());
    }
}
