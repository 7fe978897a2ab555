//! Finite-dimensional Gelfand triples K ⊂ K^∂ ⊂ K′ carried by two Gram matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::*;
use crate::relspace::{LinearRelation, SELF_ADJOINT_CHECK};

#[derive(Debug, Clone)]
pub struct GelfandTriple {
    dim: usize,
    gram_k: CMat,
    gram_partial: CMat,
    iota_star: CMat,
    lambda: CMat,
    lambda_inv: CMat,
    gram_kprime: CMat,
    w: CMat,
    w_inv: CMat,
    tol: f64,
}

fn check_hermitian(g: &CMat, name: &str, tol: f64) -> Result<()> {
    if g.nrows() != g.ncols() {
        return Err(Error::Dimension(format!("{name} is not square")));
    }
    if !is_finite(g) {
        return Err(Error::Input(format!("{name} has non-finite entries")));
    }
    let scale = max_abs(g).max(1.0);
    if max_abs(&(g - g.adjoint())) > tol.max(1e-12) * scale {
        return Err(Error::Input(format!("{name} is not Hermitian")));
    }
    Ok(())
}

impl GelfandTriple {
    pub fn new(gram_k: &CMat, gram_partial: &CMat, tol: f64) -> Result<Self> {
        check_hermitian(gram_k, "gram_K", tol)?;
        check_hermitian(gram_partial, "gram_partial", tol)?;
        if gram_k.shape() != gram_partial.shape() {
            return Err(Error::Dimension("Gram matrices have different sizes".into()));
        }
        let dim = gram_k.nrows();
        let gram_k = hermitian_part(gram_k);
        let gram_partial = hermitian_part(gram_partial);
        let gk_inv = inverse(&gram_k).map_err(|_| Error::Input("gram_K is singular".into()))?;
        let w = hpd_sqrt(&gram_partial, tol).map_err(|_| Error::Input("gram_partial is not positive definite".into()))?;
        let w_inv = hpd_inv_sqrt(&gram_partial, tol)?;
        hpd_sqrt(&gram_k, tol).map_err(|_| Error::Input("gram_K is not positive definite".into()))?;
        let core = hermitian_part(&(&w * &gk_inv * &w));
        let lambda = &w_inv * hpd_sqrt(&core, tol)? * &w;
        let lambda_inv = &w_inv * hpd_inv_sqrt(&core, tol)? * &w;
        let iota_star = &gk_inv * &gram_partial;
        let gram_kprime = hermitian_part(&(&gram_partial * &gk_inv * &gram_partial));
        Ok(GelfandTriple { dim, gram_k, gram_partial, iota_star, lambda, lambda_inv, gram_kprime, w, w_inv, tol })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(&eye(n), &eye(n), 1e-10).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn gram_k(&self) -> &CMat {
        &self.gram_k
    }

    pub fn gram_partial(&self) -> &CMat {
        &self.gram_partial
    }

    pub fn gram_kprime(&self) -> &CMat {
        &self.gram_kprime
    }

    pub fn iota_star(&self) -> &CMat {
        &self.iota_star
    }

    /// j = ι ∘ ι*; the embedding is the identity on coordinates.
    pub fn j(&self) -> &CMat {
        &self.iota_star
    }

    pub fn lambda(&self) -> &CMat {
        &self.lambda
    }

    /// Λ′ coincides with Λ as a matrix.
    pub fn lambda_prime(&self) -> &CMat {
        &self.lambda
    }

    pub fn lambda_inv(&self) -> &CMat {
        &self.lambda_inv
    }

    /// G_∂^{1/2}: maps ∂-coordinates to Euclidean ones.
    pub fn whitening(&self) -> &CMat {
        &self.w
    }

    pub fn whitening_inv(&self) -> &CMat {
        &self.w_inv
    }

    pub fn inner_k(&self, x: &CVec, y: &CVec) -> C64 {
        y.dotc(&(&self.gram_k * x))
    }

    pub fn inner_partial(&self, x: &CVec, y: &CVec) -> C64 {
        y.dotc(&(&self.gram_partial * x))
    }

    pub fn inner_kprime(&self, x: &CVec, y: &CVec) -> C64 {
        y.dotc(&(&self.gram_kprime * x))
    }

    /// ⟨y, x⟩_{K′,K}, linear in y.
    pub fn pairing_kprime_k(&self, y: &CVec, x: &CVec) -> C64 {
        x.dotc(&(&self.gram_partial * y))
    }

    /// ⟨x, y⟩_{K,K′} = conj ⟨y, x⟩_{K′,K}.
    pub fn pairing_k_kprime(&self, x: &CVec, y: &CVec) -> C64 {
        y.dotc(&(&self.gram_partial * x))
    }

    /// |⟨y,x⟩_{K′,K} − ⟨Λ′y, Λ⁻¹x⟩_∂|.
    pub fn shift_identity_residual(&self, y: &CVec, x: &CVec) -> f64 {
        let lhs = self.pairing_kprime_k(y, x);
        let rhs = self.inner_partial(&(&self.lambda * y), &(&self.lambda_inv * x));
        (lhs - rhs).norm()
    }

    fn pair_map(&self, a: &CMat, b: &CMat) -> CMat {
        block_diag(a, b)
    }

    /// Adjoint with respect to the pairing ⟨b,x⟩_{K,K′} = ⟨a,y⟩_{K′,K}.
    pub fn triple_adjoint(&self, b: &LinearRelation) -> Result<LinearRelation> {
        if b.dom_dim() != self.dim || b.cod_dim() != self.dim {
            return Err(Error::Dimension("relation does not live on the triple".into()));
        }
        let white = b.map(&self.pair_map(&self.w, &self.w))?;
        white.adjoint().map(&self.pair_map(&self.w_inv, &self.w_inv))
    }

    /// (Λ′ ⊕ Λ⁻¹)(B).
    pub fn to_partial(&self, b: &LinearRelation) -> Result<LinearRelation> {
        b.map(&self.pair_map(&self.lambda, &self.lambda_inv))
    }

    /// Gap between a relation in K^∂ ⊕ K^∂ and its ∂-metric adjoint.
    pub fn partial_self_adjoint_gap(&self, b: &LinearRelation) -> Result<f64> {
        b.map(&self.pair_map(&self.w, &self.w))?.self_adjoint_gap()
    }

    /// Self-adjointness across the triple: (Λ′ ⊕ Λ⁻¹)(B) is ∂-self-adjoint.
    pub fn is_self_adjoint_across(&self, b: &LinearRelation, tol: f64) -> Result<bool> {
        Ok(self.partial_self_adjoint_gap(&self.to_partial(b)?)? <= tol.max(SELF_ADJOINT_CHECK.min(tol * 100.0)))
    }

    pub fn residuals(&self) -> TripleResiduals {
        let n = self.dim;
        let gk = &self.gram_k;
        let gp = &self.gram_partial;
        let iota_adjoint = max_abs(&(gp - self.iota_star.adjoint() * gk));
        let gj = gp * &self.iota_star;
        let j_self_adjoint = max_abs(&(&gj - gj.adjoint()));
        let j_nonnegative = eigh(&hermitian_part(&gj)).0.first().copied().unwrap_or(0.0);
        let lambda_square = max_abs(&(&self.lambda * &self.lambda - &self.iota_star));
        let lambda_isometry = max_abs(&(self.lambda.adjoint() * gk * &self.lambda - gp));
        let lambda_lambda = max_abs(&(gp * &self.lambda - self.lambda.adjoint() * gp));
        let kprime = max_abs(&(self.iota_star.adjoint() * gk * &self.iota_star - &self.gram_kprime));
        let inverse = max_abs(&(&self.lambda * &self.lambda_inv - eye(n)));
        TripleResiduals {
            iota_adjoint,
            j_self_adjoint,
            j_min_eigenvalue: j_nonnegative,
            lambda_square,
            lambda_isometry,
            lambda_lambda,
            gram_kprime: kprime,
            lambda_inverse: inverse,
        }
    }
}

pub fn build_triple(gram_k: &CMat, gram_partial: &CMat, tol: f64) -> Result<GelfandTriple> {
    GelfandTriple::new(gram_k, gram_partial, tol)
}

pub fn pairing_kprime_k(t: &GelfandTriple, y: &CVec, x: &CVec) -> C64 {
    t.pairing_kprime_k(y, x)
}

pub fn shift_identity_residual(t: &GelfandTriple, y: &CVec, x: &CVec) -> f64 {
    t.shift_identity_residual(y, x)
}

pub fn triple_adjoint(t: &GelfandTriple, b: &LinearRelation) -> Result<LinearRelation> {
    t.triple_adjoint(b)
}

#[derive(Debug, Clone, Copy)]
pub struct TripleResiduals {
    pub iota_adjoint: f64,
    pub j_self_adjoint: f64,
    /// Smallest eigenvalue of the Hermitian form G_∂ j; positive for a valid triple.
    pub j_min_eigenvalue: f64,
    pub lambda_square: f64,
    pub lambda_isometry: f64,
    pub lambda_lambda: f64,
    pub gram_kprime: f64,
    pub lambda_inverse: f64,
}

impl TripleResiduals {
    pub fn max(&self) -> f64 {
        [
            self.iota_adjoint,
            self.j_self_adjoint,
            self.lambda_square,
            self.lambda_isometry,
            self.lambda_lambda,
            self.gram_kprime,
            self.lambda_inverse,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub type MatrixLiteral = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_literal(m: &CMat) -> MatrixLiteral {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn matrix_from_literal(rows: &MatrixLiteral) -> Result<CMat> {
    let r = rows.len();
    let cols = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != cols) {
        return Err(Error::Input("ragged matrix literal".into()));
    }
    Ok(CMat::from_fn(r, cols, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleLiteral {
    #[serde(rename = "gram_K")]
    pub gram_k: MatrixLiteral,
    pub gram_partial: MatrixLiteral,
}

impl TripleLiteral {
    pub fn to_triple(&self, tol: f64) -> Result<GelfandTriple> {
        GelfandTriple::new(&matrix_from_literal(&self.gram_k)?, &matrix_from_literal(&self.gram_partial)?, tol)
    }
}
