//! Seeded random instances. The generator is ChaCha8 seeded with a 64-bit integer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cayley::{deficiency_of, SymmetricModel};
use crate::error::Result;
use crate::linalg::*;
use crate::relspace::{LinearRelation, Subspace, DEFAULT_TOL};

pub type FixtureRng = ChaCha8Rng;

pub fn rng(seed: u64) -> FixtureRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut FixtureRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_cvec(rng: &mut FixtureRng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| c(normal(rng), normal(rng)) * cr(std::f64::consts::FRAC_1_SQRT_2))
}

pub fn random_cmat(rng: &mut FixtureRng, r: usize, cols: usize) -> CMat {
    CMat::from_fn(r, cols, |_, _| c(normal(rng), normal(rng)) * cr(std::f64::consts::FRAC_1_SQRT_2))
}

pub fn random_unitary(rng: &mut FixtureRng, n: usize) -> CMat {
    if n == 0 {
        return zeros(0, 0);
    }
    let qr = random_cmat(rng, n, n).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut out = q;
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / cr(d.norm()) } else { cr(1.0) };
        let column = out.column(j) * ph;
        out.set_column(j, &column);
    }
    out
}

pub fn random_hermitian(rng: &mut FixtureRng, n: usize) -> CMat {
    hermitian_part(&random_cmat(rng, n, n))
}

/// Hermitian positive definite with spectrum in roughly [0.5, 3].
pub fn random_hpd(rng: &mut FixtureRng, n: usize) -> CMat {
    let b = random_cmat(rng, n, n);
    &b * b.adjoint() * cr(1.0 / n.max(1) as f64) + eye(n) * cr(0.5)
}

pub fn random_invertible(rng: &mut FixtureRng, n: usize) -> CMat {
    random_cmat(rng, n, n) * cr(0.5) + eye(n)
}

pub fn random_subspace(rng: &mut FixtureRng, n: usize, d: usize) -> Subspace {
    Subspace::span(&random_cmat(rng, n, d), DEFAULT_TOL).unwrap()
}

/// Random self-adjoint relation on Cᵐ; `multivalued` directions carry Cayley eigenvalue 1.
pub fn random_self_adjoint(rng: &mut FixtureRng, m: usize, multivalued: usize) -> LinearRelation {
    let q = random_unitary(rng, m);
    let phases = CVec::from_fn(m, |i, _| {
        if i < multivalued {
            cr(1.0)
        } else {
            let t: f64 = rng.gen_range(0.2..(2.0 * std::f64::consts::PI - 0.2));
            C64::from_polar(1.0, t)
        }
    });
    let u = &q * CMat::from_diagonal(&phases) * q.adjoint();
    LinearRelation::from_cayley(&u).unwrap()
}

/// T = graph(H) restricted to a random subspace of codimension `defect`, with a reference
/// extension A generated from a random unitary K₊ → K₋.
pub fn random_model(rng: &mut FixtureRng, n: usize, defect: usize, mu: C64) -> Result<SymmetricModel> {
    let h = random_hermitian(rng, n);
    let d = n - defect;
    let qd = random_subspace(rng, n, d).basis().clone();
    let t = LinearRelation::from_blocks(&qd, &(&h * &qd), DEFAULT_TOL)?;
    let (kp, km) = deficiency_of(&t, mu)?;
    let v = random_unitary(rng, kp.dim());
    let (qp, qm) = (kp.basis(), km.basis());
    let x = hstack(&qd, &(qp - qm * &v));
    let y = hstack(&(&h * &qd), &(qp * mu - qm * &v * mu.conj()));
    let a = LinearRelation::from_blocks(&x, &y, DEFAULT_TOL)?;
    SymmetricModel::new(t, a, mu, DEFAULT_TOL)
}

/// Random model with dimensions drawn in the ranges used by the suites (n ≤ 8, defect ≤ 3).
pub fn random_model_any(rng: &mut FixtureRng, mu: C64) -> Result<SymmetricModel> {
    let n = rng.gen_range(2..=8usize);
    let defect = rng.gen_range(1..=3usize.min(n));
    random_model(rng, n, defect, mu)
}

fn random_sign(rng: &mut FixtureRng) -> f64 {
    if rng.gen_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// Skew-adjoint 𝛕 = iQ diag(μ) Qᴴ with |μ| in [0.2, 3].
pub fn random_skew_invertible(rng: &mut FixtureRng, n: usize) -> CMat {
    let q = random_unitary(rng, n);
    let mu = CVec::from_fn(n, |_, _| cr(rng.gen_range(0.2..3.0) * random_sign(rng)));
    &q * CMat::from_diagonal(&mu) * q.adjoint() * I
}

/// V D V⁻¹ with eigenvalues satisfying 0.4 ≤ |Im λ| ≤ 2.
pub fn random_offaxis(rng: &mut FixtureRng, n: usize) -> CMat {
    let d = CVec::from_fn(n, |_, _| c(2.0 * normal(rng), rng.gen_range(0.4..2.0) * random_sign(rng)));
    let v = eye(n) + random_cmat(rng, n, n) * cr(0.3);
    let vi = v.clone().try_inverse().expect("near-identity matrix is invertible");
    &v * CMat::from_diagonal(&d) * vi
}
