//! Symbol-level linear algebra: splitting by the sign of Im λ, the Calderón
//! projector symbol, Dirac-like blocks, transversality and the Φ map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::famindex::unwrap_winding;
use crate::gelfand::{matrix_from_literal, MatrixLiteral};
use crate::linalg::*;
use crate::relspace::{LinearRelation, Subspace};

pub const SIGN_TOL: f64 = 1e-12;
pub const SIGN_MAX_STEPS: usize = 100;

/// Principal angles below this count as a nontrivial intersection.
pub const TRANSVERSAL_ANGLE: f64 = 1e-8;

/// Matrix sign function by scaled Newton iteration S ← (μS + (μS)⁻¹)/2.
pub fn matrix_sign(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!("matrix sign needs a square matrix, got {}x{}", n, a.ncols())));
    }
    if !is_finite(a) {
        return Err(Error::Input("non-finite entries".into()));
    }
    let id = eye(n);
    let mut s = a.clone();
    let mut scaling = true;
    for _ in 0..SIGN_MAX_STEPS {
        let resid = (&s * &s - &id).norm();
        if resid <= SIGN_TOL * (n as f64).sqrt() {
            return Ok(s);
        }
        let inv = s
            .clone()
            .try_inverse()
            .filter(is_finite)
            .ok_or_else(|| Error::NoConvergence("singular iterate in the sign iteration".into()))?;
        let mu = if scaling {
            let d = s.determinant().norm();
            if d > 0.0 && d.is_finite() {
                d.powf(-1.0 / n as f64)
            } else {
                1.0
            }
        } else {
            1.0
        };
        let next = (&s * cr(mu) + inv * cr(1.0 / mu)) * cr(0.5);
        let step = (&next - &s).norm() / next.norm().max(1.0);
        if step < 1e-2 {
            scaling = false;
        }
        s = next;
        if !is_finite(&s) {
            break;
        }
    }
    Err(Error::NoConvergence(format!("sign iteration did not converge in {SIGN_MAX_STEPS} steps")))
}

/// Spectral projector onto the generalized eigenspaces with Im λ < 0, along those with Im λ > 0.
pub fn minus_projector(rho: &CMat) -> Result<CMat> {
    let s = matrix_sign(&(rho * I))?;
    Ok((eye(rho.nrows()) + s) * cr(0.5))
}

/// Σ over eigenvalues with Im λ < 0 of the residues of (t − ρ)⁻¹, from a dense eigensolver.
/// Independent of the sign iteration; meaningful for diagonalizable ρ.
pub fn residue_projector(rho: &CMat) -> Result<CMat> {
    let n = rho.nrows();
    let fm = faer::Mat::<C64>::from_fn(n, n, |i, j| rho[(i, j)]);
    let e = fm.eigen().map_err(|e| Error::NoConvergence(format!("eigensolver failed: {e:?}")))?;
    let v = CMat::from_fn(n, n, |i, j| e.U()[(i, j)]);
    let s = e.S().column_vector();
    let chi = CVec::from_fn(n, |k, _| cr(if s[k].im < 0.0 { 1.0 } else { 0.0 }));
    Ok(&v * CMat::from_diagonal(&chi) * inverse(&v)?)
}

fn projector_range(p: &CMat) -> Subspace {
    let n = p.nrows();
    let r = p.trace().re.round().clamp(0.0, n as f64) as usize;
    let u = svd(p).u;
    Subspace::span_abs(&u.columns(0, r).into_owned(), 1e-12)
}

/// (L₋, L₊): sums of generalized eigenspaces of ρ with Im λ < 0 and Im λ > 0.
pub fn spectral_split(rho: &CMat, tol: f64) -> Result<(Subspace, Subspace)> {
    if !(tol > 0.0) {
        return Err(Error::Input(format!("tolerance must be positive, got {tol}")));
    }
    let p = minus_projector(rho)?;
    let lm = projector_range(&p);
    let lp = projector_range(&(eye(rho.nrows()) - &p));
    if lm.dim() + lp.dim() != rho.nrows() || lm.sum(&lp).dim() != rho.nrows() {
        return Err(Error::NoConvergence("spectral subspaces do not span the space".into()));
    }
    Ok((lm, lp))
}

#[derive(Debug, Clone)]
pub struct SymbolPoint {
    sigma: CMat,
    tau: CMat,
    rho: CMat,
    tau_bold: Option<CMat>,
}

impl SymbolPoint {
    pub fn new(sigma: CMat, tau: CMat, tol: f64) -> Result<Self> {
        let n = sigma.nrows();
        if sigma.ncols() != n || tau.shape() != (n, n) {
            return Err(Error::Dimension("sigma and tau must be square of equal size".into()));
        }
        if !is_finite(&sigma) || !is_finite(&tau) {
            return Err(Error::Input("non-finite symbol entries".into()));
        }
        if (&sigma - sigma.adjoint()).norm() > tol * sigma.norm().max(1.0) {
            return Err(Error::Input("sigma is not Hermitian".into()));
        }
        if (&tau - tau.adjoint()).norm() > tol * tau.norm().max(1.0) {
            return Err(Error::Input("tau is not Hermitian".into()));
        }
        let sinv = inverse(&sigma)?;
        let rho = &sinv * &tau;
        Ok(SymbolPoint { sigma, tau, rho, tau_bold: None })
    }

    /// σ = [[0, −i], [i, 0]], τ = diag(i𝛕, −i𝛕), so ρ = [[0, −𝛕], [−𝛕, 0]].
    pub fn dirac_like(tau_bold: &CMat, tol: f64) -> Result<Self> {
        check_skew_invertible(tau_bold, tol)?;
        let n = tau_bold.nrows();
        let sigma = boundary_sigma(n);
        let tau = block_diag(&(tau_bold * I), &(tau_bold * (-I)));
        let mut sp = SymbolPoint::new(sigma, tau, tol)?;
        sp.tau_bold = Some(tau_bold.clone());
        Ok(sp)
    }

    pub fn sigma(&self) -> &CMat {
        &self.sigma
    }

    pub fn tau(&self) -> &CMat {
        &self.tau
    }

    pub fn rho(&self) -> &CMat {
        &self.rho
    }

    pub fn is_dirac_like(&self) -> bool {
        self.tau_bold.is_some()
    }

    pub fn tau_bold(&self) -> Option<&CMat> {
        self.tau_bold.as_ref()
    }

    /// The symbol at the opposite covector: τ ↦ −τ.
    pub fn negated(&self) -> SymbolPoint {
        SymbolPoint {
            sigma: self.sigma.clone(),
            tau: -&self.tau,
            rho: -&self.rho,
            tau_bold: self.tau_bold.as_ref().map(|t| -t),
        }
    }

    pub fn split(&self, tol: f64) -> Result<(Subspace, Subspace)> {
        spectral_split(&self.rho, tol)
    }

    pub fn upsilon(&self, tol: f64) -> Result<CMat> {
        match &self.tau_bold {
            Some(t) => dirac_upsilon(t, tol),
            None => Err(Error::Input("symbol point was not built as Dirac-like".into())),
        }
    }
}

/// [[0, −i], [i, 0]] on Cⁿ ⊕ Cⁿ, i.e. iΣ = [[0, 1], [−1, 0]].
pub fn boundary_sigma(n: usize) -> CMat {
    let z = zeros(n, n);
    blocks(&z, &(eye(n) * (-I)), &(eye(n) * I), &z)
}

fn check_skew_invertible(t: &CMat, tol: f64) -> Result<()> {
    let n = t.nrows();
    if t.ncols() != n || n == 0 {
        return Err(Error::Dimension("tau block must be square and nonempty".into()));
    }
    if !is_finite(t) {
        return Err(Error::Input("non-finite tau block".into()));
    }
    let scale = t.norm().max(f64::MIN_POSITIVE);
    if (t + t.adjoint()).norm() > tol * scale.max(1.0) {
        return Err(Error::Input("tau block is not skew-adjoint".into()));
    }
    if smallest_singular(t) <= tol * scale {
        return Err(Error::Singular("tau block is not invertible".into()));
    }
    Ok(())
}

/// c₊: the projector onto L₋(ρ) along L₊(ρ).
pub fn calderon_symbol(sp: &SymbolPoint) -> Result<CMat> {
    minus_projector(&sp.rho)
}

/// υ = −i𝛕|𝛕|⁻¹ = sign(−i𝛕), so that i𝛕 = −υ|𝛕|.
pub fn dirac_upsilon(tau_bold: &CMat, tol: f64) -> Result<CMat> {
    check_skew_invertible(tau_bold, tol)?;
    let (vals, vecs) = eigh(&(tau_bold * (-I)));
    let d = CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&v| cr(v.signum()))));
    Ok(&vecs * d * vecs.adjoint())
}

pub fn graph_subspace(m: &CMat) -> Subspace {
    LinearRelation::graph_of(m).graph().clone()
}

#[derive(Debug, Clone, Serialize)]
pub struct TransversalityReport {
    /// Minimal principal angles of (L₋, F⊕0), (L₋, 0⊕F), (L₊, F⊕0), (L₊, 0⊕F).
    pub angles: [f64; 4],
    pub transversal: [bool; 4],
    pub all: bool,
}

fn minimal_angle(a: &Subspace, b: &Subspace) -> f64 {
    if a.dim() == 0 || b.dim() == 0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let s = svd(&(a.basis().adjoint() * b.basis()));
    let top = s.sigma.first().copied().unwrap_or(0.0).min(1.0);
    top.acos()
}

pub fn transversality_check(sp: &SymbolPoint, tol: f64) -> Result<TransversalityReport> {
    let m = sp.rho.nrows();
    if m % 2 != 0 {
        return Err(Error::Dimension(format!("boundary space of odd dimension {m} has no F ⊕ F splitting")));
    }
    let n = m / 2;
    let (lm, lp) = sp.split(tol)?;
    let first = Subspace::span_abs(&vstack(&eye(n), &zeros(n, n)), 1e-12);
    let second = Subspace::span_abs(&vstack(&zeros(n, n), &eye(n)), 1e-12);
    let mut angles = [0.0; 4];
    let mut transversal = [false; 4];
    for (k, (l, axis)) in [(&lm, &first), (&lm, &second), (&lp, &first), (&lp, &second)].into_iter().enumerate() {
        angles[k] = minimal_angle(l, axis);
        transversal[k] = l.dim() == n && angles[k] > TRANSVERSAL_ANGLE;
    }
    Ok(TransversalityReport { angles, transversal, all: transversal.iter().all(|&t| t) })
}

/// ω(p, q) = qᴴ F p with F = [[0, 1], [−1, 0]]: the form whose Lagrangians are self-adjoint relations.
pub fn standard_form(n: usize) -> CMat {
    let z = zeros(n, n);
    blocks(&z, &eye(n), &(-eye(n)), &z)
}

/// ‖Bᴴ F B‖ for an orthonormal basis B.
pub fn form_residual(l: &Subspace, form: &CMat) -> f64 {
    norm2(&(l.basis().adjoint() * form * l.basis()))
}

pub fn is_lagrangian(l: &Subspace, form: &CMat, tol: f64) -> bool {
    2 * l.dim() == l.ambient_dim() && form_residual(l, form) <= tol
}

#[derive(Debug, Clone)]
pub struct PhiMap {
    pub upsilon: CMat,
    pub sigma: CMat,
    pub phi: CMat,
    pub phi_inv: CMat,
}

/// Φ(a, b) = (a − Υ⁻¹b, Υa + b) on (K ⊕ K) ⊕ (K ⊕ K).
pub fn phi_map(upsilon: &CMat, sigma: &CMat, tol: f64) -> Result<PhiMap> {
    let n = upsilon.nrows();
    if upsilon.ncols() != n || sigma.shape() != (n, n) {
        return Err(Error::Dimension("Upsilon and Sigma must be square of equal size".into()));
    }
    let id = eye(n);
    if norm2(&(upsilon.adjoint() * upsilon - &id)) > tol {
        return Err(Error::Input("Upsilon is not unitary".into()));
    }
    if norm2(&(upsilon * sigma - sigma * upsilon)) > tol * sigma.norm().max(1.0) {
        return Err(Error::Input("Upsilon does not commute with Sigma".into()));
    }
    let ui = upsilon.adjoint();
    let phi = blocks(&id, &(-&ui), upsilon, &id);
    let phi_inv = blocks(&id, &ui, &(-upsilon), &id) * cr(0.5);
    Ok(PhiMap { upsilon: upsilon.clone(), sigma: sigma.clone(), phi, phi_inv })
}

impl PhiMap {
    pub fn dim(&self) -> usize {
        self.upsilon.nrows()
    }

    /// Σ̂ = Σ ⊕ −Σ.
    pub fn sigma_hat(&self) -> CMat {
        block_diag(&self.sigma, &(-&self.sigma))
    }

    /// The Lagrangian form of Σ̂, ⟨iΣ̂p, q⟩.
    pub fn hat_form(&self) -> CMat {
        self.sigma_hat() * I
    }

    /// ‖ΦᴴFΦ − 2iΣ̂‖: zero exactly when Φ carries the Σ̂ form to the standard one.
    pub fn symplectic_residual(&self) -> f64 {
        let f = standard_form(self.dim());
        norm2(&(self.phi.adjoint() * f * &self.phi - self.hat_form() * cr(2.0)))
    }

    pub fn inverse_residual(&self) -> f64 {
        norm2(&(&self.phi * &self.phi_inv - eye(2 * self.dim())))
    }

    /// 𝒞 = {(u, Υu)}.
    pub fn graph_relation(&self) -> Subspace {
        graph_subspace(&self.upsilon)
    }

    pub fn image(&self, l: &Subspace) -> Subspace {
        l.image(&self.phi)
    }

    /// M_⊕ = Φ⁻¹(graph M).
    pub fn m_oplus(&self, m: &LinearRelation) -> Result<Subspace> {
        let n = self.dim();
        if m.dom_dim() != n || m.cod_dim() != n {
            return Err(Error::Dimension(format!(
                "relation is {}→{}, Phi acts on {n} ⊕ {n}",
                m.dom_dim(),
                m.cod_dim()
            )));
        }
        Ok(m.graph().image(&self.phi_inv))
    }
}

/// A sampled loop w ↦ (𝛕_w, f_w) over the circle.
#[derive(Debug, Clone)]
pub struct SymbolLoop {
    pub samples: Vec<(f64, CMat, CMat)>,
}

impl SymbolLoop {
    pub fn from_fn(samples: usize, f: impl Fn(f64) -> (CMat, CMat)) -> Self {
        let samples = (0..samples)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / samples as f64;
                let (t, g) = f(th);
                (th, t, g)
            })
            .collect();
        SymbolLoop { samples }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SumIndexReport {
    pub total: i64,
    pub plus: i64,
    pub minus: i64,
    pub additive: bool,
    pub commutation_residual: f64,
}

/// Windings of det(i𝛕), det(i𝛕 on L₊(f)) and det(i𝛕 on L₋(f)) around the loop.
/// Restricted determinants are taken as det(i𝛕P + 1 − P) with P the spectral projector of f.
pub fn sum_index_zero_check(lp: &SymbolLoop, tol: f64) -> Result<SumIndexReport> {
    if lp.samples.len() < 2 {
        return Err(Error::Input("a loop needs at least two samples".into()));
    }
    let mut dets = (Vec::new(), Vec::new(), Vec::new());
    let mut thetas = Vec::new();
    let mut comm: f64 = 0.0;
    for (th, t, f) in &lp.samples {
        let n = t.nrows();
        if t.ncols() != n || f.shape() != (n, n) {
            return Err(Error::Dimension("tau and f must be square of equal size".into()));
        }
        comm = comm.max(norm2(&(t * f - f * t)) / (t.norm() * f.norm()).max(1.0));
        let it = t * I;
        let pm = minus_projector(f)?;
        let pp = eye(n) - &pm;
        let restricted = |p: &CMat| (&it * p + eye(n) - p).determinant();
        thetas.push(*th);
        dets.0.push(it.determinant());
        dets.1.push(restricted(&pp));
        dets.2.push(restricted(&pm));
    }
    if comm > tol {
        return Err(Error::Input(format!("tau does not preserve the splitting of f, residual {comm:.3e}")));
    }
    let total = unwrap_winding(&thetas, &dets.0)?;
    let plus = unwrap_winding(&thetas, &dets.1)?;
    let minus = unwrap_winding(&thetas, &dets.2)?;
    Ok(SumIndexReport { total, plus, minus, additive: total == plus + minus, commutation_residual: comm })
}

/// Either a general (σ, τ) pair or a Dirac-like 𝛕 block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolLiteral {
    General { sigma: MatrixLiteral, tau: MatrixLiteral },
    DiracLike { tau_bold: MatrixLiteral },
}

impl SymbolLiteral {
    pub fn to_point(&self, tol: f64) -> Result<SymbolPoint> {
        match self {
            SymbolLiteral::General { sigma, tau } => SymbolPoint::new(matrix_from_literal(sigma)?, matrix_from_literal(tau)?, tol),
            SymbolLiteral::DiracLike { tau_bold } => SymbolPoint::dirac_like(&matrix_from_literal(tau_bold)?, tol),
        }
    }
}
