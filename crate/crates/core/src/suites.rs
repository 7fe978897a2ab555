//! Seeded verification suites, one per module, reporting the worst residual of each check.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::cayley::{cayley_factorization_check, cayley_t_residual, lagrange_vonn_check, von_neumann_components};
use crate::error::{Error, Result};
use crate::famindex::{spectral_flow, RobinLoop, DEFAULT_BUDGET};
use crate::fixtures::*;
use crate::gelfand::GelfandTriple;
use crate::linalg::*;
use crate::relspace::LinearRelation;
use crate::sturm::{rellich_m0, rellich_relation, rellich_relation_theta, secular_eigenvalues, RellichProblem, RobinEnd, SeparatedRobin};
use crate::symbols::*;
use crate::triplet::{compare_triplets, verify_problem, BoundaryProblem, Check, FiniteBoundaryProblem, DEFAULT_RESIDUAL_TOL};

pub const SUITES: [&str; 6] = ["relspace", "cayley", "gelfand", "triplet", "sturm", "symbols"];

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: usize,
    /// Replaces every per-check default tolerance when set.
    pub tol: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 42, trials: 50, tol: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub trials: usize,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Worst residual per check name, in first-seen order.
#[derive(Default)]
struct Worst {
    checks: Vec<Check>,
}

impl Worst {
    fn push(&mut self, c: Check) {
        match self.checks.iter_mut().find(|o| o.name == c.name) {
            Some(o) => {
                if !c.pass || (o.pass && c.residual > o.residual) {
                    *o = c;
                }
            }
            None => self.checks.push(c),
        }
    }

    fn add(&mut self, name: &str, residual: f64, tol: f64) {
        self.push(Check::new(name, residual, tol));
    }

    fn result(&mut self, name: &str, r: Result<f64>, tol: f64) {
        match r {
            Ok(v) => self.add(name, v, tol),
            Err(e) => self.push(Check::failed(name, &e)),
        }
    }
}

fn trial_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Runs `f` on each trial index in parallel; results come back in trial order.
fn par_trials<T: Send>(trials: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(trials.max(1));
    let chunk = trials.div_ceil(threads.max(1)).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..trials)
            .step_by(chunk)
            .map(|start| {
                let f = &f;
                s.spawn(move || (start..(start + chunk).min(trials)).map(f).collect::<Vec<T>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("trial worker panicked")).collect()
    })
}

fn collect(trials: Vec<Vec<Check>>) -> Vec<Check> {
    let mut w = Worst::default();
    for c in trials.into_iter().flatten() {
        w.push(c);
    }
    w.checks
}

pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<Vec<SuiteReport>> {
    if cfg.trials == 0 {
        return Err(Error::Input("trials must be at least 1".into()));
    }
    if let Some(t) = cfg.tol {
        if !(t > 0.0) {
            return Err(Error::Input(format!("tolerance must be positive, got {t}")));
        }
    }
    let names: Vec<&str> = match name {
        "all" => SUITES.to_vec(),
        n if SUITES.contains(&n) => vec![n],
        other => {
            return Err(Error::Input(format!(
                "unknown suite '{other}', expected one of {} or all",
                SUITES.join(", ")
            )))
        }
    };
    Ok(names
        .into_iter()
        .map(|n| {
            let checks = match n {
                "relspace" => relspace_suite(cfg),
                "cayley" => cayley_suite(cfg),
                "gelfand" => gelfand_suite(cfg),
                "triplet" => triplet_suite(cfg),
                "sturm" => sturm_suite(cfg),
                _ => symbols_suite(cfg),
            };
            let pass = checks.iter().all(|c| c.pass);
            SuiteReport { suite: n.to_string(), seed: cfg.seed, trials: cfg.trials, checks, pass }
        })
        .collect())
}

pub fn relspace_suite(cfg: &SuiteConfig) -> Vec<Check> {
    let tol = |d: f64| cfg.tol.unwrap_or(d);
    collect(par_trials(cfg.trials, |k| {
        let mut r = rng(trial_seed(cfg.seed, k));
        let mut w = Worst::default();
        let n = 1 + k % 8;
        let mv = r.gen_range(0..=n);
        let b = random_self_adjoint(&mut r, n, mv);
        w.result("self-adjoint gap", b.self_adjoint_gap(), tol(1e-10));
        match b.cayley_unitary() {
            Ok(u) => {
                w.add("Cayley transform is unitary", norm2(&(u.adjoint() * &u - eye(n))), tol(1e-10));
                w.result("Cayley round trip", LinearRelation::from_cayley(&u).map(|back| back.gap(&b)), tol(1e-9));
            }
            Err(e) => w.push(Check::failed("Cayley transform is unitary", &e)),
        }
        let d = r.gen_range(0..=2 * n);
        match LinearRelation::from_columns(n, n, &random_cmat(&mut r, 2 * n, d), 1e-10) {
            Ok(g) => {
                w.add("adjoint is an involution", g.adjoint().adjoint().gap(&g), tol(1e-10));
                w.add("dim B + dim B* = 2n", (g.dim() + g.adjoint().dim()).abs_diff(2 * n) as f64, 0.0);
            }
            Err(e) => w.push(Check::failed("adjoint is an involution", &e)),
        }
        w.checks
    }))
}

pub fn cayley_suite(cfg: &SuiteConfig) -> Vec<Check> {
    let tol = |d: f64| cfg.tol.unwrap_or(d);
    collect(par_trials(cfg.trials, |k| {
        let mut r = rng(trial_seed(cfg.seed, k));
        let mut w = Worst::default();
        let m = match random_model_any(&mut r, I) {
            Ok(m) => m,
            Err(e) => return vec![Check::failed("model construction", &e)],
        };
        let ts = m.tstar().graph().basis().clone();
        let x = &ts * random_cvec(&mut r, ts.ncols());
        let z = &ts * random_cvec(&mut r, ts.ncols());
        w.result("von Neumann reconstruction", von_neumann_components(&m, &z).map(|p| p.reconstruction), tol(1e-10));
        w.add("von Neumann Lagrange identity", lagrange_vonn_check(&m, &x, &z), tol(1e-10));
        w.result("U(A) = U(T) + V₀", cayley_t_residual(&m), tol(1e-10));
        let mv = r.gen_range(0..=m.defect());
        let b = random_self_adjoint(&mut r, m.defect(), mv);
        match cayley_factorization_check(&m, &b) {
            Ok((first, twin)) => {
                w.add("U(A′) = U(B)_H U(A)", first, tol(1e-9));
                w.add("U(A″) = U(A) U(B)_H at −i", twin, tol(1e-9));
            }
            Err(e) => w.push(Check::failed("U(A′) = U(B)_H U(A)", &e)),
        }
        w.checks
    }))
}

pub fn gelfand_suite(cfg: &SuiteConfig) -> Vec<Check> {
    let tol = |d: f64| cfg.tol.unwrap_or(d);
    collect(par_trials(cfg.trials, |k| {
        let mut r = rng(trial_seed(cfg.seed, k));
        let mut w = Worst::default();
        let n = 1 + k % 8;
        let t = match GelfandTriple::new(&random_hpd(&mut r, n), &random_hpd(&mut r, n), 1e-10) {
            Ok(t) => t,
            Err(e) => return vec![Check::failed("triple construction", &e)],
        };
        let res = t.residuals();
        let (x, y) = (random_cvec(&mut r, n), random_cvec(&mut r, n));
        w.add("shift identity", t.shift_identity_residual(&y, &x), tol(1e-10));
        w.add("Λ isometry", res.lambda_isometry, tol(1e-10));
        w.add("Λ² = ι*", res.lambda_square, tol(1e-10));
        w.add("G_∂Λ = ΛᴴG_∂", res.lambda_lambda, tol(1e-10));
        w.add("ι* adjoint", res.iota_adjoint, tol(1e-10));
        w.add("j self-adjoint", res.j_self_adjoint, tol(1e-10));
        w.add("j positive", if res.j_min_eigenvalue > 0.0 { 0.0 } else { 1.0 }, 0.0);
        let h = random_hermitian(&mut r, n);
        let core = t.whitening_inv() * &h * t.whitening();
        let b = LinearRelation::graph_of(&(t.lambda() * core * t.lambda_prime()));
        w.result("Hermitian core is self-adjoint across", t.to_partial(&b).and_then(|p| t.partial_self_adjoint_gap(&p)), tol(1e-9));
        w.checks
    }))
}

pub fn triplet_suite(cfg: &SuiteConfig) -> Vec<Check> {
    let base = cfg.tol.unwrap_or(DEFAULT_RESIDUAL_TOL);
    let mut w = Worst::default();
    let rellich_conditions: Vec<LinearRelation> = [-2.0, 0.0, 1.0, 3.0, f64::INFINITY]
        .iter()
        .map(|&k| rellich_relation(k))
        .chain(std::iter::once(LinearRelation::multivalued(2)))
        .collect();
    for mut c in verify_problem(&RellichProblem::new(), &rellich_conditions, base) {
        c.name = format!("rellich: {}", c.name);
        w.push(c);
    }
    let finite = collect(par_trials(cfg.trials, |k| {
        let mut r = rng(trial_seed(cfg.seed, k));
        let bp = match FiniteBoundaryProblem::random_any(&mut r) {
            Ok(bp) => bp,
            Err(e) => return vec![Check::failed("finite: construction", &e)],
        };
        let m = bp.boundary_dim();
        let conds = vec![random_self_adjoint(&mut r, m, 0), random_self_adjoint(&mut r, m, 1.min(m))];
        let mut out: Vec<Check> = verify_problem(&bp, &conds, base)
            .into_iter()
            .map(|mut c| {
                c.name = format!("finite: {}", c.name);
                c
            })
            .collect();
        match compare_triplets(&bp) {
            Ok(cmp) => {
                out.push(Check::new("finite: Γ̄₀ = D⁻¹Γ⁰", cmp.d_residual, base));
                out.push(Check::new("finite: Γ̄₁ = D*Γ¹ + PD⁻¹Γ⁰", cmp.p_residual, base));
                out.push(Check::new("finite: P self-adjoint", cmp.p_hermitian, base));
                out.push(Check::new("finite: block inverse", cmp.block_residual, base));
            }
            Err(e) => out.push(Check::failed("finite: comparison", &e)),
        }
        out
    }));
    for c in finite {
        w.push(c);
    }
    w.checks
}

/// Root of tanh s = s/2 on (1, 3) by bisection.
pub fn tanh_root() -> f64 {
    let (mut a, mut b) = (1.0f64, 3.0f64);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m.tanh() > m / 2.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

pub fn sturm_suite(cfg: &SuiteConfig) -> Vec<Check> {
    let tol = |d: f64| cfg.tol.unwrap_or(d);
    let mut w = Worst::default();
    let expect = from_real(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
    w.add("M(0) closed form", max_abs(&(rellich_m0() - expect)), tol(1e-12));
    let rel_err = |got: Result<Vec<f64>>, exact: &dyn Fn(usize) -> f64| -> Result<f64> {
        let got = got?;
        if got.len() < 5 {
            return Err(Error::Bracket(format!("found {} eigenvalues, expected 5", got.len())));
        }
        Ok(got.iter().take(5).enumerate().map(|(n, l)| (l - exact(n)).abs() / exact(n)).fold(0.0, f64::max))
    };
    w.result(
        "Dirichlet eigenvalues (nπ)²",
        rel_err(secular_eigenvalues(f64::INFINITY, 400.0, 5), &|n| ((n + 1) as f64 * PI).powi(2)),
        tol(1e-10),
    );
    let neumann = SeparatedRobin { left: RobinEnd::DIRICHLET, right: RobinEnd::NEUMANN };
    w.result(
        "Neumann eigenvalues ((n − ½)π)²",
        rel_err(neumann.eigenvalues(400.0, 5), &|n| ((n as f64 + 0.5) * PI).powi(2)),
        tol(1e-10),
    );
    let fam = RobinLoop::rellich(400.0);
    let crossing = spectral_flow(&fam, 180, 0.0, DEFAULT_BUDGET).and_then(|f| match f.crossings.as_slice() {
        [c] => Ok((fam.kappa(c.theta) - 1.0).abs()),
        other => Err(Error::Model(format!("expected one crossing of level 0, found {}", other.len()))),
    });
    w.result("level-0 crossing at κ = 1", crossing, tol(1e-10));
    let s = tanh_root();
    w.result(
        "tanh s = s/2 eigenvalue",
        secular_eigenvalues(2.0, 400.0, 1).map(|l| (l[0] + s * s).abs()),
        tol(1e-8),
    );
    let mut eig: Result<f64> = Ok(0.0);
    for &k in &[-5.0, -0.3, 0.0, 1.0, 2.0, 30.0, f64::INFINITY] {
        let fam = SeparatedRobin::rellich(k);
        eig = eig.and_then(|acc| {
            Ok(fam.eigenvalues(400.0, 10)?.into_iter().map(|l| fam.eigen_residual(l)).fold(acc, f64::max))
        });
    }
    w.result("eigenfunction residuals", eig, tol(1e-10));
    let trials = cfg.trials.min(32);
    let sa = (0..trials)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / trials as f64;
            rellich_relation_theta(th).self_adjoint_gap()
        })
        .try_fold(0.0f64, |acc, g| g.map(|g| acc.max(g)));
    w.result("R(κ) self-adjoint", sa, tol(1e-10));
    w.checks
}

pub fn symbols_suite(cfg: &SuiteConfig) -> Vec<Check> {
    let tol = |d: f64| cfg.tol.unwrap_or(d);
    collect(par_trials(cfg.trials, |k| {
        let mut r = rng(trial_seed(cfg.seed, k));
        let mut w = Worst::default();
        let n = 1 + k % 6;
        let rho = random_offaxis(&mut r, n);
        match minus_projector(&rho) {
            Ok(p) => {
                w.add("c₊ idempotent", norm2(&(&p * &p - &p)), tol(1e-9));
                w.add("c₊ commutes with ρ", norm2(&(&p * &rho - &rho * &p)) / rho.norm().max(1.0), tol(1e-9));
                w.result("c₊ matches residue oracle", residue_projector(&rho).map(|o| norm2(&(o - &p))), tol(1e-8));
                let swap = spectral_split(&rho, 1e-10)
                    .and_then(|(lm, lp)| spectral_split(&(-&rho), 1e-10).map(|(m2, p2)| lp.gap(&m2).max(lm.gap(&p2))));
                w.result("L₊(ρ) = L₋(−ρ)", swap, tol(1e-9));
            }
            Err(e) => w.push(Check::failed("c₊ idempotent", &e)),
        }
        let tb = random_skew_invertible(&mut r, n);
        let dirac = SymbolPoint::dirac_like(&tb, 1e-10).and_then(|sp| {
            let u = sp.upsilon(1e-10)?;
            let (lm, _) = sp.split(1e-10)?;
            let bad = [&sp, &sp.negated()]
                .into_iter()
                .map(|p| transversality_check(p, 1e-10).map(|t| !t.all as usize))
                .sum::<Result<usize>>()?;
            Ok((graph_subspace(&u).gap(&lm), bad))
        });
        match dirac {
            Ok((gap, bad)) => {
                w.add("graph(υ) = L₋(ρ)", gap, tol(1e-9));
                w.add("Dirac-like points transversal", bad as f64, 0.0);
            }
            Err(e) => w.push(Check::failed("graph(υ) = L₋(ρ)", &e)),
        }
        let h = 1 + k % 3;
        let sigma = boundary_sigma(h);
        let phi = phi_map(&(&sigma * I), &sigma, 1e-10);
        match phi {
            Ok(phi) => {
                w.add("Φ symplectic", phi.symplectic_residual(), tol(1e-10));
                w.add("Φ Φ⁻¹ = 1", phi.inverse_residual(), tol(1e-10));
                let mv = r.gen_range(0..=2 * h);
                let m = random_self_adjoint(&mut r, 2 * h, mv);
                w.result("M_⊕ Lagrangian for self-adjoint M", phi.m_oplus(&m).map(|s| form_residual(&s, &phi.hat_form())), tol(1e-9));
                w.add("𝒞 = graph Υ Lagrangian", form_residual(&phi.graph_relation(), &phi.hat_form()), tol(1e-10));
            }
            Err(e) => w.push(Check::failed("Φ symplectic", &e)),
        }
        let (k0, k1) = (r.gen_range(-2i64..=2), r.gen_range(-2i64..=2));
        let (n0, n1) = (r.gen_range(1..=2usize), r.gen_range(1..=2usize));
        let t0 = random_skew_invertible(&mut r, n0);
        let t1 = random_skew_invertible(&mut r, n1);
        let f = block_diag(&(eye(n0) * (-I)), &(eye(n1) * I));
        let lp = SymbolLoop::from_fn(96, |t| {
            let d0 = &t0 * C64::from_polar(1.0, k0 as f64 * t);
            let d1 = &t1 * C64::from_polar(1.0, k1 as f64 * t);
            (block_diag(&d0, &d1), f.clone())
        });
        match sum_index_zero_check(&lp, 1e-9) {
            Ok(rep) => {
                w.add("sum-index additivity", (rep.total - rep.plus - rep.minus).abs() as f64, 0.0);
                let expected = (rep.minus - k0 * n0 as i64).abs() + (rep.plus - k1 * n1 as i64).abs();
                w.add("sum-index parts", expected as f64, 0.0);
            }
            Err(e) => w.push(Check::failed("sum-index additivity", &e)),
        }
        let minus_i = eye(n) * (-I);
        let q = random_unitary(&mut r, n);
        let zero_loop = SymbolLoop::from_fn(64, |t| {
            let d = CVec::from_fn(n, |j, _| C64::from_polar(1.0, (j as f64 - 1.0) * t));
            let u = &q * CMat::from_diagonal(&d) * q.adjoint();
            (&u * &tb * u.adjoint(), minus_i.clone())
        });
        match sum_index_zero_check(&zero_loop, 1e-9) {
            Ok(rep) => w.add("f ≡ −i total vanishes", (rep.total.abs() + rep.plus.abs()) as f64, 0.0),
            Err(e) => w.push(Check::failed("f ≡ −i total vanishes", &e)),
        }
        w.checks
    }))
}
