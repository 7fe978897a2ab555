//! End-to-end acceptance run: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use clap::Parser;
use tripletflow_cli::{rellich_report, run, Cli, EXIT_OK};
use tripletflow_core::famindex::*;
use tripletflow_core::fixtures::{random_hermitian, rng};
use tripletflow_core::linalg::*;
use tripletflow_core::sturm::*;
use tripletflow_core::suites::*;
use tripletflow_core::triplet::{weyl_m0, Check};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn find<'a>(checks: &'a [Check], name: &str) -> &'a Check {
    checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("missing check '{name}'"))
}

/// All named checks must be present, evaluated and within `tol`.
fn within(checks: &[Check], names: &[&str], tol: f64) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in names {
        let c = find(checks, n);
        let good = c.residual.is_finite() && c.residual <= tol;
        ok &= good;
        parts.push(format!("{n} {:.2e}", c.residual));
    }
    (ok, parts.join("; "))
}

fn expi(h: &CMat) -> CMat {
    let (vals, vecs) = eigh(h);
    let d = CVec::from_iterator(vals.len(), vals.iter().map(|&v| C64::from_polar(1.0, v)));
    &vecs * CMat::from_diagonal(&d) * vecs.adjoint()
}

fn tanh_bisection() -> f64 {
    let (mut a, mut b) = (1.0f64, 3.0f64);
    while b - a > 1e-15 {
        let m = 0.5 * (a + b);
        if m.tanh() - 0.5 * m > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn rellich_index() -> Outcome {
    let dir = tempfile::tempdir().expect("temporary directory");
    let cli = Cli::parse_from(["tripletflow", "rellich", "--samples", "720", "--out", dir.path().to_str().unwrap()]);
    let start = Instant::now();
    let res = run(&cli);
    let secs = start.elapsed().as_secs_f64();
    match res {
        Ok(o) => {
            let rep: serde_json::Value = serde_json::from_str(&o.stdout).expect("index report json");
            let (sf, w) = (rep["spectral_flow"].as_i64(), rep["winding"].as_i64());
            let pass = o.code == EXIT_OK
                && sf.map(i64::abs) == Some(1)
                && w.map(i64::abs) == Some(1)
                && sf == w
                && rep["consistent"] == true
                && secs <= 10.0;
            outcome(pass, format!("spectral_flow {sf:?}, winding {w:?}, {secs:.2} s"))
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn m0_closed_form() -> Outcome {
    let expect = from_real(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
    let closed = max_abs(&(rellich_m0() - &expect));
    let built = weyl_m0(&RellichProblem::new()).map(|m| max_abs(&(m - &expect)));
    match built {
        Ok(b) => outcome(closed <= 1e-12 && b <= 1e-12, format!("closed form {closed:.2e}, from the gamma field {b:.2e}")),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn secular_limits() -> Outcome {
    let mut worst_d: f64 = 0.0;
    let mut worst_n: f64 = 0.0;
    match secular_eigenvalues(f64::INFINITY, 400.0, 5) {
        Ok(d) if d.len() == 5 => {
            for (n, l) in d.iter().enumerate() {
                let exact = ((n + 1) as f64 * PI).powi(2);
                worst_d = worst_d.max((l - exact).abs() / exact);
            }
        }
        other => return outcome(false, format!("Dirichlet eigenvalues: {other:?}")),
    }
    let neumann = SeparatedRobin { left: RobinEnd::DIRICHLET, right: RobinEnd::NEUMANN };
    match neumann.eigenvalues(400.0, 5) {
        Ok(v) if v.len() == 5 => {
            for (n, l) in v.iter().enumerate() {
                let exact = ((n as f64 + 0.5) * PI).powi(2);
                worst_n = worst_n.max((l - exact).abs() / exact);
            }
        }
        other => return outcome(false, format!("Neumann eigenvalues: {other:?}")),
    }
    let crossing = rellich_report(720, 400.0).map(|(fam, _, flow)| {
        flow.crossings.iter().map(|c| (fam.kappa(c.theta) - 1.0).abs()).collect::<Vec<_>>()
    });
    let (cross_ok, cross) = match crossing {
        Ok(v) if v.len() == 1 => (v[0] <= 1e-10, format!("{:.2e}", v[0])),
        Ok(v) => (false, format!("{} crossings", v.len())),
        Err(e) => (false, e.to_string()),
    };
    outcome(
        worst_d <= 1e-10 && worst_n <= 1e-10 && cross_ok,
        format!("Dirichlet rel {worst_d:.2e}, Neumann rel {worst_n:.2e}, |kappa - 1| at crossing {cross}"),
    )
}

fn tanh_oracle() -> Outcome {
    let s = tanh_bisection();
    let oracle = -s * s;
    match secular_eigenvalues(2.0, 400.0, 1) {
        Ok(l) if !l.is_empty() => {
            let err = (l[0] - oracle).abs();
            let pass = err <= 1e-8 && (s - 1.9150).abs() < 1e-4 && (oracle + 3.6672).abs() < 1e-4;
            outcome(pass, format!("s = {s:.10}, lambda = {:.10}, |error| {err:.2e}", l[0]))
        }
        other => outcome(false, format!("{other:?}")),
    }
}

fn suite(name: &str, trials: usize) -> Vec<Check> {
    let cfg = SuiteConfig { seed: 42, trials, tol: None };
    run_suite(name, &cfg).expect("suite runs").remove(0).checks
}

fn cayley_factorization(checks: &[Check]) -> Outcome {
    let (ok, d) = within(checks, &["U(A′) = U(B)_H U(A)", "U(A″) = U(A) U(B)_H at −i"], 1e-9);
    outcome(ok, format!("200 models: {d}"))
}

fn von_neumann(checks: &[Check]) -> Outcome {
    let (ok, d) = within(checks, &["von Neumann reconstruction", "von Neumann Lagrange identity"], 1e-10);
    outcome(ok, format!("200 triples: {d}"))
}

fn gelfand() -> Outcome {
    let checks = suite("gelfand", 100);
    let (ok, d) = within(&checks, &["shift identity", "Λ isometry"], 1e-10);
    outcome(ok, format!("100 triples: {d}"))
}

fn reduced_triplet() -> Outcome {
    let checks = suite("triplet", 100);
    let mut ok = true;
    let mut parts = Vec::new();
    for real in ["rellich", "finite"] {
        let n = |s: &str| format!("{real}: {s}");
        for (names, tol) in [
            (vec![n("Γ̄₁ = Γ₁∘p"), n("standard-form Lagrange identity")], 1e-9),
            (vec![n("Ker(Γ₀ ⊕ Γ̄₁) = dom T"), n("Neumann extension = graph(−Λ⁻¹MΛ′⁻¹)")], 1e-8),
        ] {
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let (good, d) = within(&checks, &refs, tol);
            ok &= good;
            parts.push(d);
        }
    }
    let (good, d) = within(
        &checks,
        &["finite: Γ̄₀ = D⁻¹Γ⁰", "finite: Γ̄₁ = D*Γ¹ + PD⁻¹Γ⁰", "finite: P self-adjoint"],
        1e-9,
    );
    ok &= good;
    parts.push(d);
    outcome(ok, parts.join("; "))
}

fn index_theorem() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["rellich", "mirror", "left-robin-neumann"] {
        let fam = RobinLoop::by_name(name, 400.0).expect("built-in loop");
        match verify_index_theorem(&fam, 360, DEFAULT_BUDGET) {
            Ok((rep, _)) => {
                ok &= rep.consistent && rep.spectral_flow.is_some() && rep.spectral_flow == fam.expected;
                parts.push(format!("{name} sf {:?} = index {:?}", rep.spectral_flow, rep.winding));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    let fam = RobinLoop::rellich(400.0);
    let mut r = rng(33);
    let (h1, h2) = (random_hermitian(&mut r, 2), random_hermitian(&mut r, 2));
    let base = relation_family_index_fn(&|t| fam.reduced_relation(t), 180, DEFAULT_BUDGET);
    let conj = relation_family_index_fn(
        &|t| {
            let u = expi(&(&h1 * cr(t.cos()) + &h2 * cr(t.sin())));
            fam.reduced_relation(t)?.map(&block_diag(&u, &u))
        },
        180,
        DEFAULT_BUDGET,
    );
    let conj_ok = matches!((&base, &conj), (Ok(a), Ok(b)) if a == b);
    ok &= conj_ok;
    parts.push(format!("conjugation {}", if conj_ok { "invariant" } else { "changed" }));
    let m = random_hermitian(&mut r, 2);
    let raw = relation_family_index_fn(&|t| Ok(fam.relation(t)), 180, DEFAULT_BUDGET);
    let shift_ok = [0.25, 0.5, 0.75, 1.0].iter().all(|&s| {
        let shifted = relation_family_index_fn(&|t| Ok(fam.relation(t).shift(&(&m * cr(s)))), 180, DEFAULT_BUDGET);
        matches!((&raw, &shifted), (Ok(a), Ok(b)) if a == b)
    });
    ok &= shift_ok;
    parts.push(format!("M-shift {}", if shift_ok { "invariant" } else { "changed" }));
    outcome(ok, parts.join("; "))
}

fn symbols() -> Outcome {
    let checks = suite("symbols", 50);
    let mut ok = true;
    let mut parts = Vec::new();
    for (names, tol) in [
        (vec!["c₊ idempotent", "c₊ commutes with ρ"], 1e-9),
        (vec!["c₊ matches residue oracle"], 1e-8),
        (vec!["graph(υ) = L₋(ρ)"], 1e-9),
        (vec!["sum-index additivity", "sum-index parts", "f ≡ −i total vanishes"], 0.0),
    ] {
        let (good, d) = within(&checks, &names, tol);
        ok &= good;
        parts.push(d);
    }
    outcome(ok, parts.join("; "))
}

fn main() {
    let cayley = suite("cayley", 200);
    let results: Vec<(&str, Outcome)> = vec![
        ("Rellich index", rellich_index()),
        ("M(0) closed form", m0_closed_form()),
        ("secular limits", secular_limits()),
        ("tanh oracle", tanh_oracle()),
        ("Cayley factorization", cayley_factorization(&cayley)),
        ("von Neumann", von_neumann(&cayley)),
        ("Gelfand triple", gelfand()),
        ("reduced triplet", reduced_triplet()),
        ("index theorem", index_theorem()),
        ("symbols", symbols()),
    ];
    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        println!("criterion {:>2} {:<22} {}  {}", k + 1, name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
