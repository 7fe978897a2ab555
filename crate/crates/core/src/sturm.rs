//! The operator −d²/dx² on [0,1] over the exact algebra of exponential polynomials
//! Σ c·x^k·e^{λx}, with Robin boundary families and their secular equations.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg::*;
use crate::gelfand::GelfandTriple;
use crate::relspace::{LinearRelation, DEFAULT_TOL};
use crate::triplet::BoundaryProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coeff: C64,
    pub power: u32,
    pub rate: C64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpPoly {
    terms: Vec<Term>,
}

fn clean(z: C64) -> C64 {
    // fold -0.0 into 0.0 so that equal rates compare equal
    c(z.re + 0.0, z.im + 0.0)
}

fn rate_order(a: &Term, b: &Term) -> Ordering {
    a.rate
        .re
        .total_cmp(&b.rate.re)
        .then(a.rate.im.total_cmp(&b.rate.im))
        .then(a.power.cmp(&b.power))
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// ∫₀¹ x^k e^{λx} dx.
pub fn moment(k: u32, lambda: C64) -> C64 {
    if lambda == cr(0.0) {
        return cr(1.0 / (k as f64 + 1.0));
    }
    if lambda.norm() <= k as f64 + 2.0 {
        // Σ λ^j / (j! (k + j + 1))
        let mut sum = cr(0.0);
        let mut pow = cr(1.0);
        for j in 0..200u32 {
            let term = pow / cr(k as f64 + j as f64 + 1.0);
            sum += term;
            if term.norm() <= 1e-18 * sum.norm() && j > 2 {
                break;
            }
            pow = pow * lambda / cr(j as f64 + 1.0);
        }
        return sum;
    }
    let e = lambda.exp();
    let mut acc = (e - cr(1.0)) / lambda;
    for j in 1..=k {
        acc = (e - acc * cr(j as f64)) / lambda;
    }
    acc
}

impl ExpPoly {
    pub fn new(terms: Vec<Term>) -> Self {
        let mut terms: Vec<Term> = terms
            .into_iter()
            .map(|t| Term { coeff: t.coeff, power: t.power, rate: clean(t.rate) })
            .collect();
        terms.sort_by(rate_order);
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.power == t.power && last.rate == t.rate => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != cr(0.0));
        ExpPoly { terms: merged }
    }

    pub fn zero() -> Self {
        ExpPoly { terms: vec![] }
    }

    pub fn term(coeff: C64, power: u32, rate: C64) -> Self {
        Self::new(vec![Term { coeff, power, rate }])
    }

    pub fn constant(value: C64) -> Self {
        Self::term(value, 0, cr(0.0))
    }

    pub fn monomial(power: u32) -> Self {
        Self::term(cr(1.0), power, cr(0.0))
    }

    pub fn x() -> Self {
        Self::monomial(1)
    }

    pub fn exp(rate: C64) -> Self {
        Self::term(cr(1.0), 0, rate)
    }

    /// sin(ωx) for complex ω.
    pub fn sin(omega: C64) -> Self {
        (Self::exp(omega * I) - Self::exp(-omega * I)) * c(0.0, -0.5)
    }

    pub fn cos(omega: C64) -> Self {
        (Self::exp(omega * I) + Self::exp(-omega * I)) * cr(0.5)
    }

    pub fn sinh(s: C64) -> Self {
        (Self::exp(s) - Self::exp(-s)) * cr(0.5)
    }

    pub fn cosh(s: C64) -> Self {
        (Self::exp(s) + Self::exp(-s)) * cr(0.5)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.iter().fold(0.0, |a, t| a.max(t.coeff.norm()))
    }

    pub fn derivative(&self) -> Self {
        let mut out = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            if t.rate != cr(0.0) {
                out.push(Term { coeff: t.coeff * t.rate, power: t.power, rate: t.rate });
            }
            if t.power > 0 {
                out.push(Term { coeff: t.coeff * cr(t.power as f64), power: t.power - 1, rate: t.rate });
            }
        }
        Self::new(out)
    }

    pub fn second_derivative(&self) -> Self {
        self.derivative().derivative()
    }

    pub fn antiderivative(&self) -> Self {
        let mut out = Vec::new();
        for t in &self.terms {
            if t.rate == cr(0.0) {
                out.push(Term { coeff: t.coeff / cr(t.power as f64 + 1.0), power: t.power + 1, rate: t.rate });
                continue;
            }
            // e^{λx} Σ_j (−1)^j k!/(k−j)! x^{k−j} / λ^{j+1}
            let k = t.power;
            let mut factor = cr(1.0) / t.rate;
            for j in 0..=k {
                let falling = factorial(k) / factorial(k - j);
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                out.push(Term { coeff: t.coeff * factor * cr(sign * falling), power: k - j, rate: t.rate });
                factor /= t.rate;
            }
        }
        Self::new(out)
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.terms
            .iter()
            .map(|t| t.coeff * cr(x.powi(t.power as i32)) * (t.rate * cr(x)).exp())
            .sum()
    }

    /// Pointwise complex conjugate on the real interval.
    pub fn conj(&self) -> Self {
        Self::new(
            self.terms
                .iter()
                .map(|t| Term { coeff: t.coeff.conj(), power: t.power, rate: t.rate.conj() })
                .collect(),
        )
    }

    pub fn integral01(&self) -> C64 {
        self.terms.iter().map(|t| t.coeff * moment(t.power, t.rate)).sum()
    }

    /// ∫₀¹ u·conj(v).
    pub fn inner(&self, v: &ExpPoly) -> C64 {
        (self * &v.conj()).integral01()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.terms.iter().map(|t| Term { coeff: t.coeff * s, ..*t }).collect())
    }

    /// −u″.
    pub fn tstar(&self) -> Self {
        -self.second_derivative()
    }

    pub fn combine(coeffs: &[C64], elems: &[ExpPoly]) -> Self {
        let mut terms = Vec::new();
        for (a, u) in coeffs.iter().zip(elems) {
            terms.extend(u.terms.iter().map(|t| Term { coeff: t.coeff * a, ..*t }));
        }
        Self::new(terms)
    }
}

impl Add for &ExpPoly {
    type Output = ExpPoly;
    fn add(self, rhs: &ExpPoly) -> ExpPoly {
        ExpPoly::new(self.terms.iter().chain(rhs.terms.iter()).copied().collect())
    }
}

impl Add for ExpPoly {
    type Output = ExpPoly;
    fn add(self, rhs: ExpPoly) -> ExpPoly {
        &self + &rhs
    }
}

impl Neg for ExpPoly {
    type Output = ExpPoly;
    fn neg(self) -> ExpPoly {
        self.scale(cr(-1.0))
    }
}

impl Sub for &ExpPoly {
    type Output = ExpPoly;
    fn sub(self, rhs: &ExpPoly) -> ExpPoly {
        self + &rhs.scale(cr(-1.0))
    }
}

impl Sub for ExpPoly {
    type Output = ExpPoly;
    fn sub(self, rhs: ExpPoly) -> ExpPoly {
        &self - &rhs
    }
}

impl Mul<C64> for ExpPoly {
    type Output = ExpPoly;
    fn mul(self, s: C64) -> ExpPoly {
        self.scale(s)
    }
}

impl Mul for &ExpPoly {
    type Output = ExpPoly;
    fn mul(self, rhs: &ExpPoly) -> ExpPoly {
        let mut out = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                out.push(Term { coeff: a.coeff * b.coeff, power: a.power + b.power, rate: a.rate + b.rate });
            }
        }
        ExpPoly::new(out)
    }
}

pub fn exppoly_derivative(u: &ExpPoly) -> ExpPoly {
    u.derivative()
}

pub fn exppoly_inner(u: &ExpPoly, v: &ExpPoly) -> C64 {
    u.inner(v)
}

pub fn exppoly_eval(u: &ExpPoly, x: f64) -> C64 {
    u.eval(x)
}

/// Polynomial q with (−D² − μ)(q e^{λx}) = x^k e^{λx}.
fn particular_term(k: u32, lambda: C64, mu: C64) -> ExpPoly {
    let cval = lambda * lambda + mu;
    let k = k as usize;
    let resonant = cval.norm() <= 1e-13 * (lambda.norm_sqr() + mu.norm() + 1.0);
    let mut a = vec![cr(0.0); k + 3];
    if !resonant {
        for j in (0..=k).rev() {
            let delta = if j == k { cr(1.0) } else { cr(0.0) };
            let rest = a[j + 2] * cr(((j + 2) * (j + 1)) as f64) + lambda * a[j + 1] * cr(2.0 * (j + 1) as f64);
            a[j] = -(delta + rest) / cval;
        }
    } else if lambda != cr(0.0) {
        a[k + 1] = -cr(1.0) / (lambda * cr(2.0 * (k + 1) as f64));
        for j in (0..k).rev() {
            a[j + 1] = -a[j + 2] * cr((j + 2) as f64) / (lambda * cr(2.0));
        }
    } else {
        a[k + 2] = cr(-1.0 / ((k + 1) * (k + 2)) as f64);
    }
    ExpPoly::new(
        a.iter()
            .enumerate()
            .map(|(p, &coeff)| Term { coeff, power: p as u32, rate: lambda })
            .collect(),
    )
}

/// Two independent solutions of −u″ = μu.
pub fn deficiency_basis(mu: C64) -> [ExpPoly; 2] {
    if mu == cr(0.0) {
        return [ExpPoly::constant(cr(1.0)), ExpPoly::x()];
    }
    let lambda = (-mu).sqrt();
    [ExpPoly::exp(lambda), ExpPoly::exp(-lambda)]
}

/// u with −u″ − μu = f and u(0) = u(1) = 0.
pub fn resolvent_solve(f: &ExpPoly, mu: C64) -> Result<ExpPoly> {
    let mut up = ExpPoly::zero();
    for t in f.terms() {
        up = &up + &particular_term(t.power, t.rate, mu).scale(t.coeff);
    }
    let [h1, h2] = deficiency_basis(mu);
    let m = CMat::from_row_slice(2, 2, &[h1.eval(0.0), h2.eval(0.0), h1.eval(1.0), h2.eval(1.0)]);
    let rhs = CVec::from_vec(vec![-up.eval(0.0), -up.eval(1.0)]);
    let ab = inverse(&m).map_err(|_| Error::Singular(format!("{mu} is a Dirichlet eigenvalue")))? * rhs;
    Ok(&(&up + &h1.scale(ab[0])) + &h2.scale(ab[1]))
}

/// u with −u″ = f and u(0) = u(1) = 0.
pub fn dirichlet_solve(f: &ExpPoly) -> ExpPoly {
    resolvent_solve(f, cr(0.0)).expect("zero is not a Dirichlet eigenvalue")
}

pub fn gamma0(u: &ExpPoly) -> CVec {
    CVec::from_vec(vec![u.eval(0.0), u.eval(1.0)])
}

pub fn gamma1(u: &ExpPoly) -> CVec {
    let d = u.derivative();
    CVec::from_vec(vec![d.eval(0.0), -d.eval(1.0)])
}

/// γ(0)(a, b) = a + (b − a)x.
pub fn gamma_field(a: C64, b: C64) -> ExpPoly {
    &ExpPoly::constant(a) + &ExpPoly::x().scale(b - a)
}

/// M(0) = Γ₁ ∘ γ(0), computed in the algebra.
pub fn rellich_m0() -> CMat {
    let mut m = zeros(2, 2);
    for j in 0..2 {
        let (a, b) = if j == 0 { (cr(1.0), cr(0.0)) } else { (cr(0.0), cr(1.0)) };
        m.set_column(j, &gamma1(&gamma_field(a, b)));
    }
    m
}

/// |⟨−u″,v⟩ − ⟨u,−v″⟩ − (⟨γ₁u,γ₀v⟩ − ⟨γ₀u,γ₁v⟩)|.
pub fn lagrange_residual(u: &ExpPoly, v: &ExpPoly) -> f64 {
    let lhs = u.tstar().inner(v) - u.inner(&v.tstar());
    let rhs = gamma0(v).dotc(&gamma1(u)) - gamma1(v).dotc(&gamma0(u));
    (lhs - rhs).norm()
}

/// Homogeneous Robin condition p·u′ = q·u at one end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobinEnd {
    pub p: f64,
    pub q: f64,
}

impl RobinEnd {
    pub const DIRICHLET: RobinEnd = RobinEnd { p: 0.0, q: 1.0 };
    pub const NEUMANN: RobinEnd = RobinEnd { p: 1.0, q: 0.0 };

    /// u′ = κu, with κ = ∞ meaning u = 0.
    pub fn from_kappa(kappa: f64) -> Self {
        if kappa.is_infinite() {
            Self::DIRICHLET
        } else {
            RobinEnd { p: 1.0, q: kappa }
        }
    }

    /// Point (sin θ/2, cos θ/2) of the circle of conditions, so κ = cot(θ/2).
    pub fn from_theta(theta: f64) -> Self {
        RobinEnd { p: (theta / 2.0).sin(), q: (theta / 2.0).cos() }
    }

    pub fn kappa(&self) -> f64 {
        if self.p == 0.0 {
            f64::INFINITY
        } else {
            self.q / self.p
        }
    }
}

/// κ(θ) = cot(θ/2), with κ(0) = ∞.
pub fn kappa_of_theta(theta: f64) -> f64 {
    RobinEnd::from_theta(theta).kappa()
}

/// Separated conditions p₀u′(0) = q₀u(0), p₁u′(1) = q₁u(1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatedRobin {
    pub left: RobinEnd,
    pub right: RobinEnd,
}

/// Search window for the hyperbolic branch, s ∈ (0, S_MAX].
pub const S_MAX: f64 = 50.0;
pub const NEGATIVE_GRID: usize = 10_000;
pub const DEFAULT_LAMBDA_MAX: f64 = 400.0;

impl SeparatedRobin {
    /// The family u(0) = 0, u′(1) = κu(1).
    pub fn rellich(kappa: f64) -> Self {
        SeparatedRobin { left: RobinEnd::DIRICHLET, right: RobinEnd::from_kappa(kappa) }
    }

    pub fn rellich_theta(theta: f64) -> Self {
        SeparatedRobin { left: RobinEnd::DIRICHLET, right: RobinEnd::from_theta(theta) }
    }

    /// Boundary relation {(p₀a, p₁b, q₀a, −q₁b)} in trace coordinates (u(0), u(1), u′(0), −u′(1)).
    pub fn relation(&self) -> LinearRelation {
        let (l, r) = (self.left, self.right);
        let x = from_real(2, 2, &[l.p, 0.0, 0.0, r.p]);
        let y = from_real(2, 2, &[l.q, 0.0, 0.0, -r.q]);
        LinearRelation::from_blocks(&x, &y, DEFAULT_TOL).unwrap()
    }

    /// Secular function in t, λ = sign(t)·t², scaled by 1/cosh s on the hyperbolic side.
    pub fn secular(&self, t: f64) -> f64 {
        let (c1, dc1, s1, ds1) = if t >= 0.0 {
            let w = t;
            let sinc = if w == 0.0 { 1.0 } else { w.sin() / w };
            (w.cos(), -w * w.sin(), sinc, w.cos())
        } else {
            let s = -t;
            let th = s.tanh();
            (1.0, s * th, th / s, 1.0)
        };
        let (l, r) = (self.left, self.right);
        let u1 = l.p * c1 + l.q * s1;
        let du1 = l.p * dc1 + l.q * ds1;
        r.p * du1 - r.q * u1
    }

    /// Eigenvalues in [−S_MAX², λ_max], ascending, at most `count` of them.
    pub fn eigenvalues(&self, lambda_max: f64, count: usize) -> Result<Vec<f64>> {
        if !(lambda_max > 0.0) {
            return Err(Error::Input(format!("lambda_max must be positive, got {lambda_max}")));
        }
        let mut roots = Vec::new();
        let neg_step = S_MAX / NEGATIVE_GRID as f64;
        let w_max = lambda_max.sqrt();
        let pos_n = ((w_max / neg_step).ceil() as usize).max(16);
        let mut grid: Vec<f64> = (0..NEGATIVE_GRID).map(|i| -S_MAX + i as f64 * neg_step).collect();
        grid.extend((0..=pos_n).map(|i| w_max * i as f64 / pos_n as f64));
        let values: Vec<f64> = grid.iter().map(|&t| self.secular(t)).collect();
        for i in 0..grid.len() {
            if values[i] == 0.0 {
                roots.push(grid[i]);
            }
            if i + 1 < grid.len() && values[i] * values[i + 1] < 0.0 {
                roots.push(self.bisect(grid[i], grid[i + 1], values[i])?);
            }
        }
        let mut lams: Vec<f64> = roots.into_iter().map(|t| t.signum() * t * t).filter(|&l| l <= lambda_max).collect();
        lams.sort_by(f64::total_cmp);
        lams.truncate(count);
        Ok(lams)
    }

    fn bisect(&self, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let fm = self.secular(m);
            if fm == 0.0 {
                return Ok(m);
            }
            if fa * fm < 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        if (b - a).abs() > 1e-12 * (1.0 + a.abs()) {
            return Err(Error::Bracket(format!("bisection stalled on [{a}, {b}]")));
        }
        Ok(0.5 * (a + b))
    }

    /// Solution of −u″ = λu satisfying the left condition.
    pub fn eigenfunction(&self, lambda: f64) -> ExpPoly {
        let (cfun, sfun) = if lambda > 0.0 {
            let w = cr(lambda.sqrt());
            (ExpPoly::cos(w), ExpPoly::sin(w).scale(cr(1.0) / w))
        } else if lambda < 0.0 {
            let s = cr((-lambda).sqrt());
            (ExpPoly::cosh(s), ExpPoly::sinh(s).scale(cr(1.0) / s))
        } else {
            (ExpPoly::constant(cr(1.0)), ExpPoly::x())
        };
        &cfun.scale(cr(self.left.p)) + &sfun.scale(cr(self.left.q))
    }

    /// Relative residual of the ODE and both boundary conditions.
    pub fn eigen_residual(&self, lambda: f64) -> f64 {
        let u = self.eigenfunction(lambda);
        let du = u.derivative();
        let scale = u.max_coeff().max(1.0) * (1.0 + lambda.abs());
        let ode = (&u.tstar() - &u.scale(cr(lambda))).max_coeff();
        let left = (du.eval(0.0) * self.left.p - u.eval(0.0) * self.left.q).norm();
        let right = (du.eval(1.0) * self.right.p - u.eval(1.0) * self.right.q).norm();
        ode.max(left).max(right) / scale
    }
}

/// 𝓡(κ) = {(0, b, c, −κb)}; κ = ∞ gives {(0, 0, c, d)}.
pub fn rellich_relation(kappa: f64) -> LinearRelation {
    SeparatedRobin::rellich(kappa).relation()
}

pub fn rellich_relation_theta(theta: f64) -> LinearRelation {
    SeparatedRobin::rellich_theta(theta).relation()
}

pub fn secular_eigenvalues(kappa: f64, lambda_max: f64, count: usize) -> Result<Vec<f64>> {
    SeparatedRobin::rellich(kappa).eigenvalues(lambda_max, count)
}

/// Truncation of the Dirichlet operator in the basis √2·sin(nπx), n = 1..N.
#[derive(Debug, Clone)]
pub struct Galerkin {
    pub eigenvalues: Vec<f64>,
    pub cayley: Vec<C64>,
}

impl Galerkin {
    pub fn basis_function(n: usize) -> ExpPoly {
        ExpPoly::sin(cr(n as f64 * PI)).scale(cr(2f64.sqrt()))
    }

    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Sine coordinates ⟨f, φₙ⟩.
    pub fn coordinates(&self, f: &ExpPoly) -> CVec {
        CVec::from_fn(self.size(), |i, _| f.inner(&Self::basis_function(i + 1)))
    }

    pub fn cayley_matrix(&self) -> CMat {
        CMat::from_diagonal(&CVec::from_vec(self.cayley.clone()))
    }
}

pub fn galerkin_project(n: usize) -> Result<Galerkin> {
    if n < 4 {
        return Err(Error::Input(format!("Galerkin size must be at least 4, got {n}")));
    }
    let eigenvalues: Vec<f64> = (1..=n).map(|k| (k as f64 * PI).powi(2)).collect();
    let cayley = eigenvalues.iter().map(|&l| (cr(l) - I) / (cr(l) + I)).collect();
    Ok(Galerkin { eigenvalues, cayley })
}

/// −d²/dx² on [0,1] with γ₀u = (u(0), u(1)), γ₁u = (u′(0), −u′(1)) and the Dirichlet reference.
#[derive(Debug, Clone)]
pub struct RellichProblem {
    triple: GelfandTriple,
}

impl Default for RellichProblem {
    fn default() -> Self {
        RellichProblem { triple: GelfandTriple::identity(2) }
    }
}

impl RellichProblem {
    pub fn new() -> Self {
        Self::default()
    }
}

impl BoundaryProblem for RellichProblem {
    type Elem = ExpPoly;

    fn triple(&self) -> &GelfandTriple {
        &self.triple
    }

    fn gamma0(&self, u: &ExpPoly) -> CVec {
        gamma0(u)
    }

    fn gamma1(&self, u: &ExpPoly) -> CVec {
        gamma1(u)
    }

    fn green(&self, u: &ExpPoly, v: &ExpPoly) -> C64 {
        u.tstar().inner(v) - u.inner(&v.tstar())
    }

    fn reference_projection(&self, u: &ExpPoly) -> Result<ExpPoly> {
        Ok(dirichlet_solve(&u.tstar()))
    }

    fn kernel_basis(&self) -> Vec<ExpPoly> {
        deficiency_basis(cr(0.0)).to_vec()
    }

    fn test_elements(&self) -> Vec<ExpPoly> {
        let bump = &ExpPoly::monomial(2) * &(&ExpPoly::constant(cr(1.0)) - &ExpPoly::x());
        let bump = &bump * &bump.scale(cr(4.0));
        let mut out: Vec<ExpPoly> = (0..=4).map(ExpPoly::monomial).collect();
        out.push(ExpPoly::exp(cr(1.5)));
        out.push(&ExpPoly::x() * &ExpPoly::exp(c(-1.0, 2.0)));
        out.push(ExpPoly::sin(cr(PI)));
        out.push(ExpPoly::cos(cr(2.5)));
        out.push(&bump * &ExpPoly::exp(cr(0.7)));
        out.push(bump);
        out
    }

    fn dom_t_defect(&self, u: &ExpPoly) -> CVec {
        let d = u.derivative();
        CVec::from_vec(vec![u.eval(0.0), u.eval(1.0), d.eval(0.0), d.eval(1.0)])
    }

    fn combine(&self, coeffs: &[C64], elems: &[ExpPoly]) -> ExpPoly {
        ExpPoly::combine(coeffs, elems)
    }

    fn norm(&self, u: &ExpPoly) -> f64 {
        u.norm()
    }
}
