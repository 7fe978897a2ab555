//! Subspaces of Cⁿ and linear relations in Cⁿ ⊕ Cᵐ, carried as orthonormal bases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::*;

/// Default relative rank threshold.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Gap used when a relation must be recognised as self-adjoint before a Cayley transform.
pub const SELF_ADJOINT_CHECK: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Subspace {
    ambient_dim: usize,
    basis: CMat,
    tol: f64,
}

impl Subspace {
    pub fn span(columns: &CMat, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::Input(format!("rank threshold must be positive, got {tol}")));
        }
        if !is_finite(columns) {
            return Err(Error::Input("non-finite entries in spanning set".into()));
        }
        Ok(Subspace { ambient_dim: columns.nrows(), basis: orth(columns, tol), tol })
    }

    /// Span with an absolute singular-value cutoff, for columns already on unit scale.
    pub fn span_abs(columns: &CMat, tol: f64) -> Self {
        Subspace { ambient_dim: columns.nrows(), basis: orth_abs(columns, tol), tol }
    }

    pub fn zero(n: usize) -> Self {
        Subspace { ambient_dim: n, basis: zeros(n, 0), tol: DEFAULT_TOL }
    }

    pub fn full(n: usize) -> Self {
        Subspace { ambient_dim: n, basis: eye(n), tol: DEFAULT_TOL }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn projector(&self) -> CMat {
        &self.basis * self.basis.adjoint()
    }

    pub fn complement(&self) -> Subspace {
        let basis = if self.dim() == 0 {
            eye(self.ambient_dim)
        } else {
            null_space_abs(&self.basis.adjoint(), self.tol)
        };
        Subspace { ambient_dim: self.ambient_dim, basis, tol: self.tol }
    }

    /// Largest principal-angle sine; 1 when the dimensions differ.
    pub fn gap(&self, other: &Subspace) -> f64 {
        assert_eq!(self.ambient_dim, other.ambient_dim, "gap between different ambients");
        if self.dim() != other.dim() {
            return 1.0;
        }
        if self.dim() == 0 {
            return 0.0;
        }
        let a = &self.basis;
        let b = &other.basis;
        let d1 = norm2(&(a - b * (b.adjoint() * a)));
        let d2 = norm2(&(b - a * (a.adjoint() * b)));
        d1.max(d2)
    }

    /// ‖(I − P_other) basis‖: zero iff self ⊆ other.
    pub fn excess(&self, other: &Subspace) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let b = &other.basis;
        norm2(&(&self.basis - b * (b.adjoint() * &self.basis)))
    }

    pub fn distance_to(&self, v: &CVec) -> f64 {
        (v - &self.basis * (self.basis.adjoint() * v)).norm()
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        let n = self.ambient_dim;
        if self.dim() == 0 || other.dim() == 0 {
            return Subspace::zero(n);
        }
        let stacked = hstack(&self.basis, &(-other.basis.clone()));
        let nul = null_space_abs(&stacked, self.tol);
        let top = nul.rows(0, self.dim()).into_owned();
        let cols = &self.basis * top;
        Subspace { ambient_dim: n, basis: orth_abs(&cols, self.tol), tol: self.tol }
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let cols = hstack(&self.basis, &other.basis);
        Subspace { ambient_dim: self.ambient_dim, basis: orth(&cols, self.tol), tol: self.tol }
    }

    pub fn image(&self, m: &CMat) -> Subspace {
        let cols = m * &self.basis;
        Subspace { ambient_dim: m.nrows(), basis: orth(&cols, self.tol), tol: self.tol }
    }
}

pub fn span_orthonormalize(columns: &CMat, tol: f64) -> Result<Subspace> {
    Subspace::span(columns, tol)
}

#[derive(Debug, Clone)]
pub struct LinearRelation {
    dom_dim: usize,
    cod_dim: usize,
    graph: Subspace,
}

impl LinearRelation {
    pub fn new(dom_dim: usize, cod_dim: usize, graph: Subspace) -> Result<Self> {
        if graph.ambient_dim() != dom_dim + cod_dim {
            return Err(Error::Dimension(format!(
                "graph ambient {} != {} + {}",
                graph.ambient_dim(),
                dom_dim,
                cod_dim
            )));
        }
        Ok(LinearRelation { dom_dim, cod_dim, graph })
    }

    /// Relation spanned by the columns of `[X; Y]`.
    pub fn from_columns(dom_dim: usize, cod_dim: usize, columns: &CMat, tol: f64) -> Result<Self> {
        Self::new(dom_dim, cod_dim, Subspace::span(columns, tol)?)
    }

    pub fn from_blocks(x: &CMat, y: &CMat, tol: f64) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(Error::Dimension("blocks have different column counts".into()));
        }
        Self::from_columns(x.nrows(), y.nrows(), &vstack(x, y), tol)
    }

    /// Graph of `m : C^{m.ncols} → C^{m.nrows}`.
    pub fn graph_of(m: &CMat) -> Self {
        let n = m.ncols();
        Self::from_blocks(&eye(n), m, DEFAULT_TOL).expect("graph of a finite matrix")
    }

    /// The purely multivalued relation 0 ⊕ Cⁿ.
    pub fn multivalued(n: usize) -> Self {
        Self::from_blocks(&zeros(n, n), &eye(n), DEFAULT_TOL).unwrap()
    }

    /// Relation with unitary Cayley transform `u`.
    pub fn from_cayley(u: &CMat) -> Result<Self> {
        let n = u.nrows();
        let x = (eye(n) - u) * c(0.0, -0.5);
        let y = (eye(n) + u) * cr(0.5);
        Self::from_blocks(&x, &y, DEFAULT_TOL)
    }

    pub fn dom_dim(&self) -> usize {
        self.dom_dim
    }

    pub fn cod_dim(&self) -> usize {
        self.cod_dim
    }

    pub fn graph(&self) -> &Subspace {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.graph.dim()
    }

    pub fn tol(&self) -> f64 {
        self.graph.tol()
    }

    /// Upper block X of the basis [X; Y].
    pub fn x(&self) -> CMat {
        self.graph.basis().rows(0, self.dom_dim).into_owned()
    }

    /// Lower block Y of the basis [X; Y].
    pub fn y(&self) -> CMat {
        self.graph.basis().rows(self.dom_dim, self.cod_dim).into_owned()
    }

    pub fn gap(&self, other: &LinearRelation) -> f64 {
        self.graph.gap(&other.graph)
    }

    pub fn contains(&self, a: &CVec, b: &CVec) -> f64 {
        let mut v = CVec::zeros(self.dom_dim + self.cod_dim);
        v.rows_mut(0, self.dom_dim).copy_from(a);
        v.rows_mut(self.dom_dim, self.cod_dim).copy_from(b);
        self.graph.distance_to(&v)
    }

    pub fn adjoint(&self) -> LinearRelation {
        let constraints = hstack(&self.y().adjoint(), &(-self.x().adjoint()));
        let basis = null_space_abs(&constraints, self.tol());
        LinearRelation {
            dom_dim: self.cod_dim,
            cod_dim: self.dom_dim,
            graph: Subspace { ambient_dim: self.dom_dim + self.cod_dim, basis, tol: self.tol() },
        }
    }

    pub fn inverse(&self) -> LinearRelation {
        LinearRelation::from_blocks(&self.y(), &self.x(), self.tol()).unwrap()
    }

    pub fn is_self_adjoint(&self, tol: f64) -> Result<bool> {
        Ok(self.self_adjoint_gap()? <= tol)
    }

    pub fn self_adjoint_gap(&self) -> Result<f64> {
        if self.dom_dim != self.cod_dim {
            return Err(Error::Dimension(format!(
                "self-adjointness needs a square relation, got {}→{}",
                self.dom_dim, self.cod_dim
            )));
        }
        Ok(self.gap(&self.adjoint()))
    }

    /// (Y − iX)(Y + iX)⁻¹ for the orthonormal basis [X; Y].
    pub fn cayley_unitary(&self) -> Result<CMat> {
        let g = self.self_adjoint_gap()?;
        if g > SELF_ADJOINT_CHECK {
            return Err(Error::NotSelfAdjoint(format!("gap to adjoint {g:.3e}")));
        }
        let (x, y) = (self.x(), self.y());
        let den = &y + &x * I;
        if smallest_singular(&den) < 1e-8 {
            return Err(Error::NotSelfAdjoint("Y + iX is singular".into()));
        }
        let num = &y - &x * I;
        Ok(num * inverse(&den)?)
    }

    /// Multivalued part {y : (0, y) ∈ B}.
    pub fn multivalued_part(&self) -> Subspace {
        let nul = null_space_abs(&self.x(), self.tol());
        self.range_of(&(self.y() * nul), self.cod_dim)
    }

    /// Kernel {x : (x, 0) ∈ B}.
    pub fn kernel(&self) -> Subspace {
        let nul = null_space_abs(&self.y(), self.tol());
        self.range_of(&(self.x() * nul), self.dom_dim)
    }

    pub fn domain(&self) -> Subspace {
        self.range_of(&self.x(), self.dom_dim)
    }

    pub fn range(&self) -> Subspace {
        self.range_of(&self.y(), self.cod_dim)
    }

    fn range_of(&self, cols: &CMat, n: usize) -> Subspace {
        Subspace { ambient_dim: n, basis: orth_abs(cols, self.tol()), tol: self.tol() }
    }

    pub fn is_operator(&self) -> bool {
        self.multivalued_part().dim() == 0
    }

    /// Matrix of the relation when it is the graph of an everywhere defined operator.
    pub fn to_matrix(&self) -> Result<CMat> {
        if !self.is_operator() || self.dim() != self.dom_dim {
            return Err(Error::Input("relation is not the graph of an operator".into()));
        }
        Ok(self.y() * inverse(&self.x())?)
    }

    /// B = operator_part ⊕ (0 ⊕ mul_part).
    pub fn parts_decomposition(&self) -> (LinearRelation, Subspace) {
        let mul = self.multivalued_part();
        let basis = self.graph.basis();
        let constraints = mul.basis().adjoint() * self.y();
        let nul = null_space_abs(&constraints, self.tol());
        let op = basis * nul;
        let graph = Subspace { ambient_dim: self.dom_dim + self.cod_dim, basis: orth_abs(&op, self.tol()), tol: self.tol() };
        (LinearRelation { dom_dim: self.dom_dim, cod_dim: self.cod_dim, graph }, mul)
    }

    /// L(B) for an invertible L on C^dom ⊕ C^cod.
    pub fn map(&self, l: &CMat) -> Result<LinearRelation> {
        let n = self.dom_dim + self.cod_dim;
        if l.shape() != (n, n) {
            return Err(Error::Dimension(format!("map of shape {:?} on a relation of ambient {n}", l.shape())));
        }
        if rank(l, self.tol()) < n {
            return Err(Error::Input("map is singular".into()));
        }
        let cols = l * self.graph.basis();
        let graph = if cols.ncols() == 0 { Subspace::zero(n) } else { Subspace::span(&cols, self.tol())? };
        Ok(LinearRelation { dom_dim: self.dom_dim, cod_dim: self.cod_dim, graph })
    }

    /// B ∩ (K_dom ⊕ K_cod).
    pub fn restrict(&self, k_dom: &Subspace, k_cod: &Subspace) -> Result<LinearRelation> {
        if k_dom.ambient_dim() != self.dom_dim || k_cod.ambient_dim() != self.cod_dim {
            return Err(Error::Dimension("restriction subspaces do not match the relation".into()));
        }
        let a = k_dom.complement().basis().adjoint() * self.x();
        let b = k_cod.complement().basis().adjoint() * self.y();
        let nul = null_space_abs(&vstack(&a, &b), self.tol());
        let cols = self.graph.basis() * nul;
        let n = self.dom_dim + self.cod_dim;
        let graph = Subspace { ambient_dim: n, basis: orth_abs(&cols, self.tol()), tol: self.tol() };
        Ok(LinearRelation { dom_dim: self.dom_dim, cod_dim: self.cod_dim, graph })
    }

    /// Pointwise direct sum, coordinates ordered (dom₁, dom₂, cod₁, cod₂).
    pub fn direct_sum(&self, other: &LinearRelation) -> LinearRelation {
        let x = block_diag(&self.x(), &other.x());
        let y = block_diag(&self.y(), &other.y());
        LinearRelation::from_blocks(&x, &y, self.tol()).unwrap()
    }

    /// {(a, b − m a)}.
    pub fn shift(&self, m: &CMat) -> LinearRelation {
        let x = self.x();
        let y = self.y() - m * &x;
        LinearRelation::from_blocks(&x, &y, self.tol()).unwrap()
    }

    pub fn to_literal(&self) -> RelationLiteral {
        let b = self.graph.basis();
        RelationLiteral {
            dom_dim: self.dom_dim,
            cod_dim: self.cod_dim,
            basis: b.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

pub fn adjoint_relation(b: &LinearRelation) -> LinearRelation {
    b.adjoint()
}

pub fn is_self_adjoint(b: &LinearRelation, tol: f64) -> Result<bool> {
    b.is_self_adjoint(tol)
}

pub fn cayley_unitary(b: &LinearRelation) -> Result<CMat> {
    b.cayley_unitary()
}

pub fn parts_decomposition(b: &LinearRelation) -> (LinearRelation, Subspace) {
    b.parts_decomposition()
}

pub fn map_relation(l: &CMat, b: &LinearRelation) -> Result<LinearRelation> {
    b.map(l)
}

pub fn restrict_relation(b: &LinearRelation, k_dom: &Subspace, k_cod: &Subspace) -> Result<LinearRelation> {
    b.restrict(k_dom, k_cod)
}

/// JSON form: column-major (dom+cod) × k basis as [re, im] pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationLiteral {
    pub dom_dim: usize,
    pub cod_dim: usize,
    pub basis: Vec<[f64; 2]>,
}

impl RelationLiteral {
    pub fn to_relation(&self, tol: f64) -> Result<LinearRelation> {
        let n = self.dom_dim + self.cod_dim;
        if n == 0 {
            return Err(Error::Input("relation with empty ambient space".into()));
        }
        if self.basis.len() % n != 0 {
            return Err(Error::Input(format!(
                "basis length {} is not a multiple of dom_dim + cod_dim = {n}",
                self.basis.len()
            )));
        }
        let k = self.basis.len() / n;
        let m = CMat::from_iterator(n, k, self.basis.iter().map(|p| c(p[0], p[1])));
        LinearRelation::from_columns(self.dom_dim, self.cod_dim, &m, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_examples() {
        assert_eq!(span_orthonormalize(&eye(2), 1e-10).unwrap().dim(), 2);
        assert_eq!(span_orthonormalize(&zeros(2, 1), 1e-10).unwrap().dim(), 0);
        let s = span_orthonormalize(&from_real(2, 1, &[1.0, 1.0]), 1e-10).unwrap();
        let b = s.basis();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b[(0, 0)].norm() - r).abs() < 1e-14 && (b[(0, 0)] - b[(1, 0)]).norm() < 1e-14);
        let mut bad = eye(2);
        bad[(0, 0)] = cr(f64::NAN);
        assert!(span_orthonormalize(&bad, 1e-10).is_err());
    }

    #[test]
    fn cayley_scalars() {
        let u = LinearRelation::graph_of(&from_real(1, 1, &[0.0])).cayley_unitary().unwrap();
        assert!((u[(0, 0)] - cr(-1.0)).norm() < 1e-15);
        let u = LinearRelation::multivalued(1).cayley_unitary().unwrap();
        assert!((u[(0, 0)] - cr(1.0)).norm() < 1e-15);
        let u = LinearRelation::graph_of(&from_real(1, 1, &[1.0])).cayley_unitary().unwrap();
        assert!((u[(0, 0)] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn non_hermitian_graph() {
        let b = LinearRelation::graph_of(&from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        assert!(!b.is_self_adjoint(1e-10).unwrap());
        assert!(b.cayley_unitary().is_err());
        let d = LinearRelation::graph_of(&from_real(2, 2, &[1.0, 0.0, 0.0, -2.0]));
        assert!(d.is_self_adjoint(1e-10).unwrap());
    }

    #[test]
    fn parts_of_multivalued() {
        let (op, mul) = LinearRelation::multivalued(1).parts_decomposition();
        assert_eq!(op.dim(), 0);
        assert_eq!(mul.dim(), 1);
    }

    #[test]
    fn restrict_to_zero() {
        let r = LinearRelation::multivalued(1).restrict(&Subspace::zero(1), &Subspace::zero(1)).unwrap();
        assert_eq!(r.dim(), 0);
    }
}
