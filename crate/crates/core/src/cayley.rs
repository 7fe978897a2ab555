//! Symmetric relations, deficiency spaces and the extensions parametrised by boundary relations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::*;
use crate::relspace::{LinearRelation, RelationLiteral, Subspace, SELF_ADJOINT_CHECK};

/// Inclusion tolerance used when validating models.
const MODEL_CHECK: f64 = 1e-8;

/// Ker(T* − μ) and Ker(T* − μ̄).
pub fn deficiency_of(t: &LinearRelation, mu: C64) -> Result<(Subspace, Subspace)> {
    if t.dom_dim() != t.cod_dim() {
        return Err(Error::Dimension("symmetric relation must be square".into()));
    }
    let ts = t.adjoint();
    Ok((eigen_kernel(&ts, mu), eigen_kernel(&ts, mu.conj())))
}

/// {x : (x, μx) ∈ B}.
pub fn eigen_kernel(b: &LinearRelation, mu: C64) -> Subspace {
    let (x, y) = (b.x(), b.y());
    let scale = 1.0 + mu.norm();
    let nul = null_space_abs(&(&y - &x * mu), b.tol() * scale);
    Subspace::span_abs(&(x * nul), b.tol())
}

/// μ-Cayley transform (Y − μX)(Y − μ̄X)⁻¹ of a self-adjoint relation.
pub fn mu_cayley(a: &LinearRelation, mu: C64) -> Result<CMat> {
    let (x, y) = (a.x(), a.y());
    if a.dim() != a.dom_dim() {
        return Err(Error::NotSelfAdjoint(format!("relation of dim {} in C^{}", a.dim(), a.dom_dim())));
    }
    let den = &y - &x * mu.conj();
    Ok((&y - &x * mu) * inverse(&den)?)
}

/// Partial isometry Cayley of a symmetric relation, vanishing on Im(T − μ̄)^⊥.
pub fn partial_cayley(t: &LinearRelation, mu: C64) -> CMat {
    let (x, y) = (t.x(), t.y());
    let den = &y - &x * mu.conj();
    (&y - &x * mu) * pinv(&den, 1e-12)
}

/// Solution of (A − μ)x = w inside A: returns (x, x′) with (x, x′) ∈ A and x′ − μx = w.
pub fn resolvent_pair(a: &LinearRelation, mu: C64, w: &CVec) -> Result<(CVec, CVec)> {
    let (x, y) = (a.x(), a.y());
    let coeff = inverse(&(&y - &x * mu))? * w;
    Ok((&x * &coeff, &y * &coeff))
}

#[derive(Debug, Clone)]
pub struct SymmetricModel {
    dim_h: usize,
    t: LinearRelation,
    tstar: LinearRelation,
    a: LinearRelation,
    mu: C64,
    tol: f64,
    k_plus: Subspace,
    k_minus: Subspace,
    v: CMat,
    v_residual: f64,
    decomp: CMat,
}

impl SymmetricModel {
    pub fn new(t: LinearRelation, a: LinearRelation, mu: C64, tol: f64) -> Result<Self> {
        if mu.im == 0.0 {
            return Err(Error::Input(format!("mu must be nonreal, got {mu}")));
        }
        let n = t.dom_dim();
        if t.cod_dim() != n || a.dom_dim() != n || a.cod_dim() != n {
            return Err(Error::Dimension("T and A must live in the same square space".into()));
        }
        let tstar = t.adjoint();
        let sym = t.graph().excess(tstar.graph());
        if sym > MODEL_CHECK {
            return Err(Error::Model(format!("T is not symmetric: excess {sym:.3e}")));
        }
        let sa = a.self_adjoint_gap()?;
        if sa > MODEL_CHECK {
            return Err(Error::Model(format!("A is not self-adjoint: gap {sa:.3e}")));
        }
        let lo = t.graph().excess(a.graph());
        let hi = a.graph().excess(tstar.graph());
        if lo > MODEL_CHECK || hi > MODEL_CHECK {
            return Err(Error::Model(format!("T ⊆ A ⊆ T* fails: {lo:.3e}, {hi:.3e}")));
        }
        let (k_plus, k_minus) = deficiency_of(&t, mu)?;
        if k_plus.dim() != k_minus.dim() {
            return Err(Error::Model(format!(
                "deficiency indices ({}, {}) differ",
                k_plus.dim(),
                k_minus.dim()
            )));
        }
        let u = mu_cayley(&a, mu)?;
        let (qp, qm) = (k_plus.basis(), k_minus.basis());
        let image = &u * qp;
        let v = qm.adjoint() * &image;
        let v_residual = norm2(&(image - qm * &v));
        let lifted_p = vstack(qp, &(qp * mu));
        let lifted_m = vstack(qm, &(qm * mu.conj()));
        let blocks = hstack(&hstack(t.graph().basis(), &lifted_p), &lifted_m);
        let decomp = pinv(&blocks, 1e-12);
        Ok(SymmetricModel { dim_h: n, t, tstar, a, mu, tol, k_plus, k_minus, v, v_residual, decomp })
    }

    pub fn with_mu(&self, mu: C64) -> Result<Self> {
        Self::new(self.t.clone(), self.a.clone(), mu, self.tol)
    }

    pub fn with_reference(&self, a: LinearRelation) -> Result<Self> {
        Self::new(self.t.clone(), a, self.mu, self.tol)
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn t(&self) -> &LinearRelation {
        &self.t
    }

    pub fn tstar(&self) -> &LinearRelation {
        &self.tstar
    }

    pub fn a(&self) -> &LinearRelation {
        &self.a
    }

    pub fn mu(&self) -> C64 {
        self.mu
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn defect(&self) -> usize {
        self.k_plus.dim()
    }

    pub fn deficiency_spaces(&self) -> (Subspace, Subspace) {
        (self.k_plus.clone(), self.k_minus.clone())
    }

    /// V : K₊ → K₋ in the orthonormal bases of K₊ and K₋.
    pub fn isometry_v(&self) -> &CMat {
        &self.v
    }

    /// Distance of U_μ(A)K₊ from K₋.
    pub fn v_residual(&self) -> f64 {
        self.v_residual
    }

    /// The isometry as an operator on H (zero on K₊^⊥).
    pub fn v0(&self) -> CMat {
        self.k_minus.basis() * &self.v * self.k_plus.basis().adjoint()
    }

    /// Coefficients of ẑ ∈ T* in the blocks (T, K̂₊, K̂₋).
    fn split(&self, z: &CVec) -> (CVec, CVec, CVec) {
        let coeff = &self.decomp * z;
        let d = self.t.dim();
        let m = self.defect();
        (coeff.rows(0, d).into_owned(), coeff.rows(d, m).into_owned(), coeff.rows(d + m, m).into_owned())
    }

    /// Γ⁰ as an m × 2n matrix on pairs, in K₋ coordinates.
    pub fn gamma0_matrix(&self) -> CMat {
        let (d, m) = (self.t.dim(), self.defect());
        let mut sel = zeros(m, d + 2 * m);
        sel.view_mut((0, d), (m, m)).copy_from(&self.v);
        sel.view_mut((0, d + m), (m, m)).copy_from(&eye(m));
        sel * &self.decomp
    }

    /// Γ¹ as an m × 2n matrix on pairs, in K₋ coordinates.
    pub fn gamma1_matrix(&self) -> CMat {
        let (d, m) = (self.t.dim(), self.defect());
        let mut sel = zeros(m, d + 2 * m);
        sel.view_mut((0, d), (m, m)).copy_from(&(&self.v * (-self.mu.conj())));
        sel.view_mut((0, d + m), (m, m)).copy_from(&(eye(m) * (-self.mu)));
        sel * &self.decomp
    }

    pub fn gamma0(&self, z: &CVec) -> CVec {
        let (_, p, m) = self.split(z);
        m + &self.v * p
    }

    pub fn gamma1(&self, z: &CVec) -> CVec {
        let (_, p, m) = self.split(z);
        m * (-self.mu) - &self.v * p * self.mu.conj()
    }

    /// Embedding of K₋ coordinates into H.
    pub fn k_minus_embed(&self, coords: &CVec) -> CVec {
        self.k_minus.basis() * coords
    }

    pub fn pair(&self, x: &CVec, y: &CVec) -> CVec {
        let mut v = CVec::zeros(2 * self.dim_h);
        v.rows_mut(0, self.dim_h).copy_from(x);
        v.rows_mut(self.dim_h, self.dim_h).copy_from(y);
        v
    }

    pub fn first(&self, z: &CVec) -> CVec {
        z.rows(0, self.dim_h).into_owned()
    }

    pub fn second(&self, z: &CVec) -> CVec {
        z.rows(self.dim_h, self.dim_h).into_owned()
    }

    /// Resolvent (A − μ)⁻¹w and A(A − μ)⁻¹w = w + μ(A − μ)⁻¹w.
    pub fn resolvent(&self, w: &CVec) -> Result<(CVec, CVec)> {
        resolvent_pair(&self.a, self.mu, w)
    }

    /// U(B)_H = I + Q₋(U(B) − I)Q₋ᴴ for B self-adjoint in K₋ coordinates.
    pub fn lift_unitary(&self, b: &LinearRelation) -> Result<CMat> {
        let ub = mu_cayley(b, self.mu)?;
        let q = self.k_minus.basis();
        let m = self.defect();
        Ok(eye(self.dim_h) + q * (ub - eye(m)) * q.adjoint())
    }
}

pub fn deficiency_spaces(m: &SymmetricModel) -> (Subspace, Subspace) {
    m.deficiency_spaces()
}

pub fn extension_isometry_v(m: &SymmetricModel) -> CMat {
    m.isometry_v().clone()
}

#[derive(Debug, Clone)]
pub struct VonNeumannParts {
    /// Pair in T.
    pub z_t: CVec,
    pub z_plus: CVec,
    pub z_minus: CVec,
    pub z0: CVec,
    pub z1: CVec,
    /// Distance of the input pair from T*.
    pub membership: f64,
    /// ‖z − (z_T + A(A−μ)⁻¹z₀ + (A−μ)⁻¹z₁)‖.
    pub reconstruction: f64,
}

/// Split of a pair ẑ = (z, z′) ∈ T* into T ∔ K̂₊ ∔ K̂₋.
pub fn von_neumann_components(m: &SymmetricModel, z: &CVec) -> Result<VonNeumannParts> {
    if z.len() != 2 * m.dim_h {
        return Err(Error::Dimension(format!("pair of length {} for H of dim {}", z.len(), m.dim_h)));
    }
    let membership = m.tstar.graph().distance_to(z);
    let (ct, cp, cm) = m.split(z);
    let z_t = m.t.graph().basis() * ct;
    let z_plus = m.k_plus.basis() * &cp;
    let z_minus = m.k_minus.basis() * &cm;
    let z0 = m.k_minus_embed(&m.gamma0(z));
    let z1 = m.k_minus_embed(&m.gamma1(z));
    let (r1, _) = m.resolvent(&z1)?;
    let (_, a0) = m.resolvent(&z0)?;
    let rebuilt = m.first(&z_t) + a0 + r1;
    let reconstruction = (m.first(z) - rebuilt).norm();
    Ok(VonNeumannParts { z_t, z_plus, z_minus, z0, z1, membership, reconstruction })
}

/// |⟨x′,z⟩ − ⟨x,z′⟩ − (⟨Γ₁x,Γ₀z⟩ − ⟨Γ₀x,Γ₁z⟩)| for pairs x̂, ẑ ∈ T*.
pub fn lagrange_vonn_check(m: &SymmetricModel, x: &CVec, z: &CVec) -> f64 {
    let lhs = m.first(z).dotc(&m.second(x)) - m.second(z).dotc(&m.first(x));
    let (g0x, g1x, g0z, g1z) = (m.gamma0(x), m.gamma1(x), m.gamma0(z), m.gamma1(z));
    let rhs = g0z.dotc(&g1x) - g1z.dotc(&g0x);
    (lhs - rhs).norm()
}

#[derive(Debug, Clone)]
pub struct Extension {
    pub relation: LinearRelation,
    pub self_adjoint: bool,
    pub boundary_self_adjoint: bool,
}

/// A′ = {ẑ ∈ T* : (Γ₀ẑ, Γ₁ẑ) ∈ B} for B ⊂ K₋ ⊕ K₋ in coordinates.
pub fn extension_from_relation(m: &SymmetricModel, b: &LinearRelation) -> Result<Extension> {
    let k = m.defect();
    if b.dom_dim() != k || b.cod_dim() != k {
        return Err(Error::Dimension(format!("boundary relation must live in C^{k} ⊕ C^{k}")));
    }
    let boundary_self_adjoint = b.self_adjoint_gap()? <= SELF_ADJOINT_CHECK;
    let ts = m.tstar.graph().basis();
    let traces = vstack(&(m.gamma0_matrix() * ts), &(m.gamma1_matrix() * ts));
    let constraints = b.graph().complement().basis().adjoint() * traces;
    let nul = null_space_abs(&constraints, m.tol * (1.0 + m.mu.norm()));
    let relation = LinearRelation::new(m.dim_h, m.dim_h, Subspace::span_abs(&(ts * nul), m.tol))?;
    let self_adjoint = relation.self_adjoint_gap()? <= SELF_ADJOINT_CHECK;
    Ok(Extension { relation, self_adjoint, boundary_self_adjoint })
}

/// (‖U(A′) − U(B)_H U(A)‖, ‖U(A″) − U(A) U(B)_H‖): the second uses the model at μ = −i, with B
/// placed on Ker(T* − i).
pub fn cayley_factorization_check(m: &SymmetricModel, b: &LinearRelation) -> Result<(f64, f64)> {
    if (m.mu - I).norm() > 1e-15 {
        return Err(Error::Input("the factorization check expects mu = i".into()));
    }
    let ua = m.a.cayley_unitary()?;
    let ext = extension_from_relation(m, b)?;
    let first = norm2(&(ext.relation.cayley_unitary()? - m.lift_unitary(b)? * &ua));
    let twin = m.with_mu(-I)?;
    let ext2 = extension_from_relation(&twin, b)?;
    let lift2 = twin.k_minus.basis() * (b.cayley_unitary()? - eye(m.defect())) * twin.k_minus.basis().adjoint()
        + eye(m.dim_h);
    let second = norm2(&(ext2.relation.cayley_unitary()? - ua * lift2));
    Ok((first, second))
}

/// ‖U_μ(A) − (U_μ(T) + V₀)‖.
pub fn cayley_t_residual(m: &SymmetricModel) -> Result<f64> {
    let ua = mu_cayley(&m.a, m.mu)?;
    Ok(norm2(&(ua - partial_cayley(&m.t, m.mu) - m.v0())))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelLiteral {
    pub t: RelationLiteral,
    pub a: RelationLiteral,
    pub mu: [f64; 2],
}

impl ModelLiteral {
    pub fn from_model(m: &SymmetricModel) -> Self {
        ModelLiteral { t: m.t.to_literal(), a: m.a.to_literal(), mu: [m.mu.re, m.mu.im] }
    }

    pub fn to_model(&self, tol: f64) -> Result<SymmetricModel> {
        SymmetricModel::new(self.t.to_relation(tol)?, self.a.to_relation(tol)?, c(self.mu[0], self.mu[1]), tol)
    }
}
