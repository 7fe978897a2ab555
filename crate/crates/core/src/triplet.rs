//! Reduced boundary triplets: projections p and k, the gamma field, the Weyl operator M(0),
//! boundary-condition transforms and comparison with the inner triplet of a symmetric model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cayley::{eigen_kernel, resolvent_pair, SymmetricModel};
use crate::error::{Error, Result};
use crate::fixtures::{random_hermitian, random_hpd, random_invertible, random_model, FixtureRng};
use crate::gelfand::GelfandTriple;
use crate::linalg::*;
use crate::relspace::{LinearRelation, Subspace};

pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-9;

/// A symmetric operator T with boundary maps Γ₀, Γ₁ into a Gelfand triple and a reference
/// extension A with dom A = Ker Γ₀.
pub trait BoundaryProblem {
    type Elem: Clone;

    fn triple(&self) -> &GelfandTriple;

    fn boundary_dim(&self) -> usize {
        self.triple().dim()
    }

    fn gamma0(&self, u: &Self::Elem) -> CVec;

    fn gamma1(&self, u: &Self::Elem) -> CVec;

    /// ⟨T*u, v⟩ − ⟨u, T*v⟩.
    fn green(&self, u: &Self::Elem, v: &Self::Elem) -> C64;

    /// p(u) = A⁻¹T*u.
    fn reference_projection(&self, u: &Self::Elem) -> Result<Self::Elem>;

    /// Basis of Ker T*.
    fn kernel_basis(&self) -> Vec<Self::Elem>;

    /// Finite spanning set used by every check; kernels are compared in its coefficient space.
    fn test_elements(&self) -> Vec<Self::Elem>;

    /// Linear map vanishing exactly on dom T.
    fn dom_t_defect(&self, u: &Self::Elem) -> CVec;

    fn combine(&self, coeffs: &[C64], elems: &[Self::Elem]) -> Self::Elem;

    fn norm(&self, u: &Self::Elem) -> f64;
}

fn sub<P: BoundaryProblem>(bp: &P, a: &P::Elem, b: &P::Elem) -> P::Elem {
    bp.combine(&[cr(1.0), cr(-1.0)], &[a.clone(), b.clone()])
}

/// ⟨a, b⟩_∂ = bᴴ G_∂ a.
fn inner_partial(t: &GelfandTriple, a: &CVec, b: &CVec) -> C64 {
    t.inner_partial(a, b)
}

/// (p(z), k(z)).
pub fn projections_pk<P: BoundaryProblem>(bp: &P, z: &P::Elem) -> Result<(P::Elem, P::Elem)> {
    let p = bp.reference_projection(z)?;
    let k = sub(bp, z, &p);
    Ok((p, k))
}

/// γ(0) = (Γ₀|Ker T*)⁻¹ as coefficients over `kernel_basis`.
#[derive(Debug, Clone)]
pub struct GammaField<E> {
    pub kernel: Vec<E>,
    pub coeffs: CMat,
}

impl<E: Clone> GammaField<E> {
    pub fn apply<P: BoundaryProblem<Elem = E>>(&self, bp: &P, a: &CVec) -> E {
        let c = &self.coeffs * a;
        bp.combine(c.as_slice(), &self.kernel)
    }
}

fn trace_matrix<E>(elems: &[E], f: impl Fn(&E) -> CVec, rows: usize) -> CMat {
    let mut m = zeros(rows, elems.len());
    for (j, u) in elems.iter().enumerate() {
        m.set_column(j, &f(u));
    }
    m
}

pub fn gamma_field0<P: BoundaryProblem>(bp: &P) -> Result<GammaField<P::Elem>> {
    let kernel = bp.kernel_basis();
    let m = bp.boundary_dim();
    if kernel.len() != m {
        return Err(Error::Model(format!("dim Ker T* = {} but the boundary space has dim {m}", kernel.len())));
    }
    let g0 = trace_matrix(&kernel, |u| bp.gamma0(u), m);
    let coeffs =
        inverse(&g0).map_err(|_| Error::Singular("Γ₀ is not injective on Ker T*, so Ker A ≠ 0".into()))?;
    Ok(GammaField { kernel, coeffs })
}

/// M(0) = Γ₁ ∘ γ(0).
pub fn weyl_m0<P: BoundaryProblem>(bp: &P) -> Result<CMat> {
    let field = gamma_field0(bp)?;
    let m = bp.boundary_dim();
    Ok(trace_matrix(&field.kernel, |u| bp.gamma1(u), m) * &field.coeffs)
}

#[derive(Debug, Clone)]
pub struct ReducedTriplet<E> {
    pub m0: CMat,
    pub gamma_field: GammaField<E>,
    lambda: CMat,
    lambda_inv: CMat,
}

impl<E: Clone> ReducedTriplet<E> {
    /// Γ̄₀ = Λ′Γ₀.
    pub fn gamma0_bar<P: BoundaryProblem<Elem = E>>(&self, bp: &P, u: &E) -> CVec {
        &self.lambda * bp.gamma0(u)
    }

    /// Γ̄₁ = Γ₁ − M(0)Γ₀.
    pub fn gamma1_bar<P: BoundaryProblem<Elem = E>>(&self, bp: &P, u: &E) -> CVec {
        bp.gamma1(u) - &self.m0 * bp.gamma0(u)
    }

    /// Λ⁻¹Γ̄₁.
    pub fn gamma1_bold<P: BoundaryProblem<Elem = E>>(&self, bp: &P, u: &E) -> CVec {
        &self.lambda_inv * self.gamma1_bar(bp, u)
    }
}

pub fn reduced_operator<P: BoundaryProblem>(bp: &P) -> Result<ReducedTriplet<P::Elem>> {
    let gamma_field = gamma_field0(bp)?;
    let m = bp.boundary_dim();
    let m0 = trace_matrix(&gamma_field.kernel, |u| bp.gamma1(u), m) * &gamma_field.coeffs;
    let t = bp.triple();
    Ok(ReducedTriplet { m0, gamma_field, lambda: t.lambda().clone(), lambda_inv: t.lambda_inv().clone() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        Check { name: name.into(), residual, tol, pass: residual.is_finite() && residual <= tol }
    }

    /// A check that could not be evaluated.
    pub fn failed(name: impl Into<String>, err: &Error) -> Self {
        Check { name: format!("{}: {err}", name.into()), residual: f64::INFINITY, tol: 0.0, pass: false }
    }
}

struct Traces {
    g0: CMat,
    g1: CMat,
    g1_bar: CMat,
    g0_bar: CMat,
    g1_bold: CMat,
    defect: CMat,
    defect_p: CMat,
}

fn traces<P: BoundaryProblem>(bp: &P, rt: &ReducedTriplet<P::Elem>) -> Result<Traces> {
    let tests = bp.test_elements();
    let m = bp.boundary_dim();
    let g0 = trace_matrix(&tests, |u| bp.gamma0(u), m);
    let g1 = trace_matrix(&tests, |u| bp.gamma1(u), m);
    let g1_bar = &g1 - &rt.m0 * &g0;
    let g0_bar = &rt.lambda * &g0;
    let g1_bold = &rt.lambda_inv * &g1_bar;
    let d_rows = tests.first().map(|u| bp.dom_t_defect(u).len()).unwrap_or(0);
    let defect = trace_matrix(&tests, |u| bp.dom_t_defect(u), d_rows);
    let mut defect_p = zeros(d_rows, tests.len());
    for (j, u) in tests.iter().enumerate() {
        defect_p.set_column(j, &bp.dom_t_defect(&bp.reference_projection(u)?));
    }
    Ok(Traces { g0, g1, g1_bar, g0_bar, g1_bold, defect, defect_p })
}

fn kernel_gap(a: &CMat, b: &CMat) -> f64 {
    let ka = Subspace::span_abs(&null_space(a, 1e-10), 1e-12);
    let kb = Subspace::span_abs(&null_space(b, 1e-10), 1e-12);
    ka.gap(&kb)
}

/// max ‖Γ̄₁u − Γ₁p(u)‖ over the test set, relative to the trace sizes.
pub fn reduced_gamma_residual<P: BoundaryProblem>(bp: &P, rt: &ReducedTriplet<P::Elem>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mnorm = norm2(&rt.m0);
    for u in bp.test_elements() {
        let p = bp.reference_projection(&u)?;
        let lhs = rt.gamma1_bar(bp, &u);
        let rhs = bp.gamma1(&p);
        let scale = 1.0 + bp.gamma1(&u).norm() + mnorm * bp.gamma0(&u).norm();
        worst = worst.max((lhs - rhs).norm() / scale);
    }
    Ok(worst)
}

/// Green identity for the raw maps with the K′–K pairing.
pub fn raw_lagrange_residual<P: BoundaryProblem>(bp: &P) -> f64 {
    let t = bp.triple();
    let tests = bp.test_elements();
    let mut worst: f64 = 0.0;
    for u in &tests {
        for v in &tests {
            let (g0u, g1u, g0v, g1v) = (bp.gamma0(u), bp.gamma1(u), bp.gamma0(v), bp.gamma1(v));
            let rhs = t.pairing_kprime_k(&g1u, &g0v) - t.pairing_kprime_k(&g1v, &g0u).conj();
            let lhs = bp.green(u, v);
            let scale = 1.0 + g0u.norm() * g1v.norm() + g1u.norm() * g0v.norm() + bp.norm(u) * bp.norm(v);
            worst = worst.max((lhs - rhs).norm() / scale);
        }
    }
    worst
}

/// ⟨T*u,v⟩ − ⟨u,T*v⟩ = ⟨Γ̄₁u, Γ̄₀v⟩_∂ − ⟨Γ̄₀u, Γ̄₁v⟩_∂ with bold Γ̄₁.
pub fn standard_lagrange_residual<P: BoundaryProblem>(bp: &P, rt: &ReducedTriplet<P::Elem>) -> f64 {
    let t = bp.triple();
    let tests = bp.test_elements();
    let mut worst: f64 = 0.0;
    for u in &tests {
        for v in &tests {
            let (b0u, b1u) = (rt.gamma0_bar(bp, u), rt.gamma1_bold(bp, u));
            let (b0v, b1v) = (rt.gamma0_bar(bp, v), rt.gamma1_bold(bp, v));
            let rhs = inner_partial(t, &b1u, &b0v) - inner_partial(t, &b0u, &b1v);
            let lhs = bp.green(u, v);
            let scale = 1.0 + b0u.norm() * b1v.norm() + b1u.norm() * b0v.norm() + bp.norm(u) * bp.norm(v);
            worst = worst.max((lhs - rhs).norm() / scale);
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelReport {
    /// gap(Ker Γ̄₁, dom T ∔ Ker T*).
    pub reduced_kernel: f64,
    /// gap(Ker(Γ₀ ⊕ Γ̄₁), dom T).
    pub joint_kernel: f64,
    /// gap(Ker(Γ₀ ⊕ Γ₁), dom T).
    pub raw_kernel: f64,
    /// rank(Γ₀ ⊕ Γ̄₁) − 2m, zero when surjective.
    pub surjectivity_defect: i64,
}

pub fn kernel_checks<P: BoundaryProblem>(bp: &P, rt: &ReducedTriplet<P::Elem>) -> Result<KernelReport> {
    let tr = traces(bp, rt)?;
    let m = bp.boundary_dim();
    let joint = vstack(&tr.g0, &tr.g1_bar);
    let raw = vstack(&tr.g0, &tr.g1);
    let r = rank(&joint, 1e-10) as i64;
    Ok(KernelReport {
        reduced_kernel: kernel_gap(&tr.g1_bar, &tr.defect_p),
        joint_kernel: kernel_gap(&joint, &tr.defect),
        raw_kernel: kernel_gap(&raw, &tr.defect),
        surjectivity_defect: r - 2 * m as i64,
    })
}

/// (Λ′ ⊕ Λ⁻¹)(B|K − M); on finite triples B|K = B.
pub fn transform_boundary_condition(t: &GelfandTriple, m0: &CMat, b: &LinearRelation) -> Result<LinearRelation> {
    if b.dom_dim() != t.dim() || b.cod_dim() != t.dim() {
        return Err(Error::Dimension("boundary condition does not live on the triple".into()));
    }
    t.to_partial(&b.shift(m0))
}

/// Coefficients (over the test set) of the extension {u : (x(u), y(u)) ∈ B}.
fn extension_kernel(x: &CMat, y: &CMat, b: &LinearRelation) -> CMat {
    let perp = b.graph().complement().basis().adjoint();
    null_space(&(perp * vstack(x, y)), 1e-10)
}

/// Gap between the extension cut out by B through (Γ₀, Γ₁) and the one cut out by the
/// transformed condition through (Γ̄₀, Γ̄₁).
pub fn extension_equality_gap<P: BoundaryProblem>(
    bp: &P,
    rt: &ReducedTriplet<P::Elem>,
    b: &LinearRelation,
) -> Result<f64> {
    let tr = traces(bp, rt)?;
    let bt = transform_boundary_condition(bp.triple(), &rt.m0, b)?;
    let raw = extension_kernel(&tr.g0, &tr.g1, b);
    let reduced = extension_kernel(&tr.g0_bar, &tr.g1_bold, &bt);
    Ok(Subspace::span_abs(&raw, 1e-12).gap(&Subspace::span_abs(&reduced, 1e-12)))
}

/// Gap between the reduced boundary relation of T*|Ker Γ₁ and graph(−Λ⁻¹M(Λ′)⁻¹).
pub fn neumann_graph_check<P: BoundaryProblem>(bp: &P, rt: &ReducedTriplet<P::Elem>) -> Result<f64> {
    let tr = traces(bp, rt)?;
    let coeffs = null_space(&tr.g1, 1e-10);
    let pairs = vstack(&(&tr.g0_bar * &coeffs), &(&tr.g1_bold * &coeffs));
    let m = bp.boundary_dim();
    let rel = LinearRelation::from_columns(m, m, &pairs, 1e-9)?;
    let target = -(&rt.lambda_inv * &rt.m0 * &rt.lambda_inv);
    Ok(rel.gap(&LinearRelation::graph_of(&target)))
}

/// Gap of (Λ′ ⊕ Λ⁻¹)(graph M) from its ∂-adjoint.
pub fn weyl_self_adjoint_gap<P: BoundaryProblem>(bp: &P, rt: &ReducedTriplet<P::Elem>) -> Result<f64> {
    let t = bp.triple();
    t.partial_self_adjoint_gap(&t.to_partial(&LinearRelation::graph_of(&rt.m0))?)
}

/// All reduced-triplet checks for a problem; `conditions` are boundary relations used for the
/// extension-equality check.
pub fn verify_problem<P: BoundaryProblem>(bp: &P, conditions: &[LinearRelation], tol: f64) -> Vec<Check> {
    let rt = match reduced_operator(bp) {
        Ok(rt) => rt,
        Err(e) => return vec![Check::failed("reduced triplet", &e)],
    };
    let mut out = Vec::new();
    let field = &rt.gamma_field;
    let m = bp.boundary_dim();
    let mut field_res: f64 = 0.0;
    for j in 0..m {
        let mut e = CVec::zeros(m);
        e[j] = cr(1.0);
        field_res = field_res.max((bp.gamma0(&field.apply(bp, &e)) - e).norm());
    }
    out.push(Check::new("gamma field inverts Γ₀ on Ker T*", field_res, tol));
    out.push(Check::new("raw Lagrange identity", raw_lagrange_residual(bp), tol));
    match reduced_gamma_residual(bp, &rt) {
        Ok(r) => out.push(Check::new("Γ̄₁ = Γ₁∘p", r, tol)),
        Err(e) => out.push(Check::failed("Γ̄₁ = Γ₁∘p", &e)),
    }
    out.push(Check::new("standard-form Lagrange identity", standard_lagrange_residual(bp, &rt), tol));
    match kernel_checks(bp, &rt) {
        Ok(k) => {
            out.push(Check::new("Ker Γ̄₁ = dom T ∔ Ker T*", k.reduced_kernel, tol * 10.0));
            out.push(Check::new("Ker(Γ₀ ⊕ Γ̄₁) = dom T", k.joint_kernel, tol * 10.0));
            out.push(Check::new("Γ₀ ⊕ Γ̄₁ surjective", k.surjectivity_defect.unsigned_abs() as f64, 0.0));
        }
        Err(e) => out.push(Check::failed("kernels", &e)),
    }
    match neumann_graph_check(bp, &rt) {
        Ok(r) => out.push(Check::new("Neumann extension = graph(−Λ⁻¹MΛ′⁻¹)", r, tol * 10.0)),
        Err(e) => out.push(Check::failed("Neumann extension", &e)),
    }
    match weyl_self_adjoint_gap(bp, &rt) {
        Ok(r) => out.push(Check::new("M self-adjoint across the triple", r, tol * 10.0)),
        Err(e) => out.push(Check::failed("M self-adjoint across the triple", &e)),
    }
    let mut ext: f64 = 0.0;
    for b in conditions {
        match extension_equality_gap(bp, &rt, b) {
            Ok(g) => ext = ext.max(g),
            Err(e) => {
                out.push(Check::failed("extension equality", &e));
                return out;
            }
        }
    }
    out.push(Check::new("raw and reduced extensions agree", ext, tol * 10.0));
    out
}

/// Finite model with Γ₀ = EΓ⁰ and Γ₁ = G_∂⁻¹E⁻ᴴ(Γ¹ + RΓ⁰), built from the inner triplet at μ = i.
#[derive(Debug, Clone)]
pub struct FiniteBoundaryProblem {
    model: SymmetricModel,
    triple: GelfandTriple,
    e: CMat,
    g0: CMat,
    g1: CMat,
    inner0: CMat,
    inner1: CMat,
    kernel: CMat,
    tests: CMat,
    t_perp: CMat,
}

fn inner_weyl(model: &SymmetricModel, kernel: &CMat) -> Result<CMat> {
    let g0 = model.gamma0_matrix() * kernel;
    let g1 = model.gamma1_matrix() * kernel;
    Ok(hermitian_part(&(g1 * inverse(&g0)?)))
}

impl FiniteBoundaryProblem {
    pub fn new(model: SymmetricModel, triple: GelfandTriple, e: CMat, r: CMat) -> Result<Self> {
        let model = if (model.mu() - I).norm() > 0.0 { model.with_mu(I)? } else { model };
        let m = model.defect();
        if triple.dim() != m || e.shape() != (m, m) || r.shape() != (m, m) {
            return Err(Error::Dimension(format!("boundary data must be {m}×{m}")));
        }
        if max_abs(&(&r - r.adjoint())) > 1e-10 * (1.0 + max_abs(&r)) {
            return Err(Error::Input("R must be Hermitian".into()));
        }
        let n = model.dim_h();
        let a = model.a();
        inverse(&a.y()).map_err(|_| Error::Model("reference extension is not invertible".into()))?;
        let e_inv_h = inverse(&e)?.adjoint();
        let gp_inv = inverse(triple.gram_partial())?;
        let inner0 = model.gamma0_matrix();
        let inner1 = model.gamma1_matrix();
        let g0 = &e * &inner0;
        let g1 = &gp_inv * &e_inv_h * (&inner1 + &r * &inner0);
        let ker = eigen_kernel(model.tstar(), cr(0.0));
        let kernel = vstack(ker.basis(), &zeros(n, ker.dim()));
        let tests = model.tstar().graph().basis().clone();
        let t_perp = model.t().graph().complement().basis().adjoint();
        Ok(FiniteBoundaryProblem { model, triple, e, g0, g1, inner0, inner1, kernel, tests, t_perp })
    }

    /// Chooses R so that M(0) = target; target must be self-adjoint across the triple.
    pub fn with_weyl(model: SymmetricModel, triple: GelfandTriple, e: CMat, target: &CMat) -> Result<Self> {
        let model = if (model.mu() - I).norm() > 0.0 { model.with_mu(I)? } else { model };
        let n = model.dim_h();
        let ker = eigen_kernel(model.tstar(), cr(0.0));
        let kernel = vstack(ker.basis(), &zeros(n, ker.dim()));
        let mi = inner_weyl(&model, &kernel)?;
        let r = hermitian_part(&(e.adjoint() * triple.gram_partial() * target * &e - mi));
        Self::new(model, triple, e, r)
    }

    /// Random model of size n with the given defect, random triple, E and R.
    pub fn random(rng: &mut FixtureRng, n: usize, defect: usize) -> Result<Self> {
        let model = random_model(rng, n, defect, I)?;
        let triple = GelfandTriple::new(&random_hpd(rng, defect), &random_hpd(rng, defect), 1e-12)?;
        let e = random_invertible(rng, defect);
        let r = random_hermitian(rng, defect);
        Self::new(model, triple, e, r)
    }

    pub fn random_any(rng: &mut FixtureRng) -> Result<Self> {
        let n = rng.gen_range(2..=8usize);
        let defect = rng.gen_range(1..=3usize.min(n));
        Self::random(rng, n, defect)
    }

    pub fn model(&self) -> &SymmetricModel {
        &self.model
    }

    pub fn e(&self) -> &CMat {
        &self.e
    }

    /// Γ⁰ of the inner triplet, in K₋ coordinates.
    pub fn inner_gamma0(&self, z: &CVec) -> CVec {
        &self.inner0 * z
    }

    pub fn inner_gamma1(&self, z: &CVec) -> CVec {
        &self.inner1 * z
    }
}

impl BoundaryProblem for FiniteBoundaryProblem {
    type Elem = CVec;

    fn triple(&self) -> &GelfandTriple {
        &self.triple
    }

    fn gamma0(&self, u: &CVec) -> CVec {
        &self.g0 * u
    }

    fn gamma1(&self, u: &CVec) -> CVec {
        &self.g1 * u
    }

    fn green(&self, u: &CVec, v: &CVec) -> C64 {
        let m = &self.model;
        m.first(v).dotc(&m.second(u)) - m.second(v).dotc(&m.first(u))
    }

    fn reference_projection(&self, u: &CVec) -> Result<CVec> {
        let m = &self.model;
        let (x, y) = resolvent_pair(m.a(), cr(0.0), &m.second(u))?;
        Ok(m.pair(&x, &y))
    }

    fn kernel_basis(&self) -> Vec<CVec> {
        self.kernel.column_iter().map(|c| c.into_owned()).collect()
    }

    fn test_elements(&self) -> Vec<CVec> {
        self.tests.column_iter().map(|c| c.into_owned()).collect()
    }

    fn dom_t_defect(&self, u: &CVec) -> CVec {
        &self.t_perp * u
    }

    fn combine(&self, coeffs: &[C64], elems: &[CVec]) -> CVec {
        let mut out = CVec::zeros(2 * self.model.dim_h());
        for (a, u) in coeffs.iter().zip(elems) {
            out += u * *a;
        }
        out
    }

    fn norm(&self, u: &CVec) -> f64 {
        u.norm()
    }
}

/// D, P and the block matrix 𝒲 relating the inner triplet (Γ⁰, Γ¹) to the reduced one.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub d: CMat,
    pub d_star: CMat,
    pub p: CMat,
    pub w_inv: CMat,
    /// ‖Γ̄₀ − D⁻¹Γ⁰‖ on the test set.
    pub d_residual: f64,
    /// ‖Γ̄₁ − D*Γ¹ − PD⁻¹Γ⁰‖ on the test set.
    pub p_residual: f64,
    /// Non-Hermitian part of P in ∂-orthonormal coordinates.
    pub p_hermitian: f64,
    /// ‖(Γ̄₀, Γ̄₁) − 𝒲⁻¹(Γ⁰, Γ¹)‖ on the test set.
    pub block_residual: f64,
}

pub fn compare_triplets(bp: &FiniteBoundaryProblem) -> Result<Comparison> {
    let rt = reduced_operator(bp)?;
    let t = bp.triple();
    let kernel = bp.kernel_basis();
    let m = bp.boundary_dim();
    let inner0_k = trace_matrix(&kernel, |u| bp.inner_gamma0(u), m);
    let bar0_k = trace_matrix(&kernel, |u| rt.gamma0_bar(bp, u), m);
    let d = &inner0_k * inverse(&bar0_k)?;
    let d_inv = inverse(&d)?;
    let d_star = inverse(t.gram_partial())? * d.adjoint();

    let tests = bp.test_elements();
    let i0 = trace_matrix(&tests, |u| bp.inner_gamma0(u), m);
    let i1 = trace_matrix(&tests, |u| bp.inner_gamma1(u), m);
    let b0 = trace_matrix(&tests, |u| rt.gamma0_bar(bp, u), m);
    let b1 = trace_matrix(&tests, |u| rt.gamma1_bold(bp, u), m);
    let scale = 1.0 + norm2(&i0) + norm2(&i1);

    let d_residual = norm2(&(&b0 - &d_inv * &i0)) / scale;
    let rhs = &b1 - &d_star * &i1;
    let p = &rhs * pinv(&b0, 1e-12);
    let p_residual = norm2(&(&rhs - &p * &b0)) / scale;
    let white = t.whitening() * &p * t.whitening_inv();
    let p_hermitian = max_abs(&(&white - white.adjoint()));
    let w_inv = blocks(&d_inv, &zeros(m, m), &(&p * &d_inv), &d_star);
    let block_residual = norm2(&(vstack(&b0, &b1) - &w_inv * vstack(&i0, &i1))) / scale;
    Ok(Comparison { d, d_star, p, w_inv, d_residual, p_residual, p_hermitian, block_residual })
}
