//! Indices of loops over the circle: spectral flow by branch tracking and the winding of
//! det U along Cayley loops.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gelfand::GelfandTriple;
use crate::linalg::*;
use crate::relspace::{LinearRelation, RelationLiteral, SELF_ADJOINT_CHECK};
use crate::sturm::{rellich_m0, RobinEnd, SeparatedRobin, DEFAULT_LAMBDA_MAX, S_MAX};
use crate::triplet::transform_boundary_condition;

pub const CONVENTION: &str = "theta increases counterclockwise on [0, 2pi); upward crossings of the level count +1; \
K1(S1) = Z by the winding of det U along the Cayley loop U = (Y - iX)(Y + iX)^-1; Robin chart kappa = cot(theta/2)";

/// Consecutive unitaries must be closer than this in operator norm.
pub const MAX_STEP: f64 = 0.5;
pub const DEFAULT_BUDGET: usize = 1 << 15;
const MAX_DEPTH: usize = 48;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub spectral_flow: Option<i64>,
    pub winding: Option<i64>,
    pub consistent: bool,
    pub convention: String,
}

impl IndexReport {
    pub fn new(spectral_flow: Option<i64>, winding: Option<i64>) -> Self {
        let consistent = match (spectral_flow, winding) {
            (Some(a), Some(b)) => a == b,
            _ => true,
        };
        IndexReport { spectral_flow, winding, consistent, convention: CONVENTION.into() }
    }
}

/// Sampled loop over θ ∈ [0, 2π); the closing segment runs from the last sample back to the first.
#[derive(Debug, Clone)]
pub struct FamilyLoop<T> {
    pub samples: Vec<(f64, T)>,
    pub orientation: i32,
}

impl<T> FamilyLoop<T> {
    pub fn new(samples: Vec<(f64, T)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Input("a loop needs at least two samples".into()));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Input(format!("theta must increase strictly: {} then {}", w[0].0, w[1].0)));
            }
        }
        let (first, last) = (samples[0].0, samples[samples.len() - 1].0);
        if !(first >= 0.0 && last < TAU) {
            return Err(Error::Input(format!("theta must lie in [0, 2pi), got [{first}, {last}]")));
        }
        Ok(FamilyLoop { samples, orientation: 1 })
    }

    pub fn reversed(mut self) -> Self {
        self.orientation = -self.orientation;
        self
    }
}

/// Sum of the eigenphases of UₐᴴU_b, read off from its Hermitian Cayley transform.
pub fn step_phase(a: &CMat, b: &CMat) -> Result<f64> {
    let n = a.nrows();
    let w = a.adjoint() * b;
    let c = (eye(n) - &w) * inverse(&(eye(n) + &w))? * I;
    let (vals, _) = eigh(&hermitian_part(&c));
    Ok(vals.iter().map(|&t| 2.0 * t.atan()).sum())
}

fn round_winding(total: f64, lo: f64, hi: f64) -> Result<i64> {
    let w = total / TAU;
    if (w - w.round()).abs() > 0.05 {
        return Err(Error::Refinement { lo, hi });
    }
    Ok(w.round() as i64)
}

/// Winding number of a closed sampled loop of nonzero complex numbers.
/// Each step, including the closing one, must turn by less than π/2.
pub fn unwrap_winding(thetas: &[f64], values: &[C64]) -> Result<i64> {
    let n = values.len();
    if n == 0 || thetas.len() != n {
        return Err(Error::Input("winding needs matching nonempty theta and value lists".into()));
    }
    if let Some(k) = values.iter().position(|z| !(z.norm() > 0.0) || !z.is_finite()) {
        return Err(Error::Singular(format!("loop passes through zero at theta = {}", thetas[k])));
    }
    let mut total = 0.0;
    for k in 0..n {
        let step = (values[(k + 1) % n] / values[k]).arg();
        if step.abs() >= std::f64::consts::FRAC_PI_2 {
            let hi = if k + 1 == n { thetas[0] + TAU } else { thetas[k + 1] };
            return Err(Error::Refinement { lo: thetas[k], hi });
        }
        total += step;
    }
    round_winding(total, thetas[0], thetas[n - 1])
}

/// Winding of det U over a closed sampled loop.
pub fn winding_det(samples: &[(f64, CMat)]) -> Result<i64> {
    if samples.is_empty() {
        return Ok(0);
    }
    let n = samples.len();
    let mut total = 0.0;
    for k in 0..n {
        let (ta, ua) = &samples[k];
        let (tb, ub) = &samples[(k + 1) % n];
        let tb = if k + 1 == n { tb + TAU } else { *tb };
        if norm2(&(ub - ua)) >= MAX_STEP {
            return Err(Error::Refinement { lo: *ta, hi: tb });
        }
        total += step_phase(ua, ub)?;
    }
    round_winding(total, samples[0].0, samples[n - 1].0)
}

/// Winding of det U(θ) for a 2π-periodic family, bisecting steps until ‖ΔU‖ < MAX_STEP.
pub fn winding_refined(f: &dyn Fn(f64) -> Result<CMat>, samples: usize, budget: usize) -> Result<i64> {
    if samples < 2 {
        return Err(Error::Input("at least two samples are required".into()));
    }
    let thetas: Vec<f64> = (0..samples).map(|k| TAU * k as f64 / samples as f64).collect();
    let us = thetas.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
    let mut used = samples;
    let mut total = 0.0;
    for k in 0..samples {
        let (ta, tb) = (thetas[k], if k + 1 == samples { TAU } else { thetas[k + 1] });
        let ub = &us[(k + 1) % samples];
        let mut stack = vec![(ta, us[k].clone(), tb, ub.clone(), 0usize)];
        while let Some((a, ua, b, ub, depth)) = stack.pop() {
            if norm2(&(&ub - &ua)) < MAX_STEP {
                total += step_phase(&ua, &ub)?;
                continue;
            }
            if used >= budget || depth >= MAX_DEPTH {
                return Err(Error::Refinement { lo: a, hi: b });
            }
            let m = 0.5 * (a + b);
            let um = f(m.rem_euclid(TAU))?;
            used += 1;
            stack.push((m, um.clone(), b, ub, depth + 1));
            stack.push((a, ua, m, um, depth + 1));
        }
    }
    round_winding(total, 0.0, TAU)
}

/// Cayley unitary of a sample, rejecting non-self-adjoint relations.
pub fn relation_unitary(b: &LinearRelation) -> Result<CMat> {
    let gap = b.self_adjoint_gap()?;
    if gap > SELF_ADJOINT_CHECK {
        return Err(Error::NotSelfAdjoint(format!("gap {gap:.3e}")));
    }
    b.cayley_unitary()
}

pub fn relation_family_index(family: &FamilyLoop<LinearRelation>) -> Result<i64> {
    let us = family
        .samples
        .iter()
        .map(|(t, b)| Ok((*t, relation_unitary(b)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(family.orientation as i64 * winding_det(&us)?)
}

/// Index of a 2π-periodic relation family with adaptive refinement.
pub fn relation_family_index_fn(f: &dyn Fn(f64) -> Result<LinearRelation>, samples: usize, budget: usize) -> Result<i64> {
    winding_refined(&|t| relation_unitary(&f(t)?), samples, budget)
}

/// A 2π-periodic family of self-adjoint operators with discrete spectrum.
pub trait OperatorFamily: Sync {
    /// Sorted eigenvalues inside `window()`.
    fn eigenvalues(&self, theta: f64) -> Result<Vec<f64>>;

    fn window(&self) -> (f64, f64);

    /// Continuous in θ and zero exactly when `level` is an eigenvalue.
    fn level_function(&self, _theta: f64, _level: f64) -> Option<f64> {
        None
    }
}

/// Family given by an eigenvalue closure.
pub struct FnFamily<F: Fn(f64) -> Vec<f64> + Sync> {
    pub f: F,
    pub window: (f64, f64),
}

impl<F: Fn(f64) -> Vec<f64> + Sync> OperatorFamily for FnFamily<F> {
    fn eigenvalues(&self, theta: f64) -> Result<Vec<f64>> {
        let (lo, hi) = self.window;
        let mut v: Vec<f64> = (self.f)(theta).into_iter().filter(|&l| l >= lo && l <= hi).collect();
        v.sort_by(f64::total_cmp);
        Ok(v)
    }

    fn window(&self) -> (f64, f64) {
        self.window
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub theta: f64,
    pub direction: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchSample {
    pub theta: f64,
    /// (branch id, eigenvalue), ascending in eigenvalue.
    pub points: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowReport {
    pub flow: i64,
    pub crossings: Vec<Crossing>,
    pub samples: Vec<BranchSample>,
    pub refinements: usize,
}

/// Index shift j = i + shift matching `a` to `b`, or None if the match is ambiguous.
fn match_lists(a: &[f64], b: &[f64], window: (f64, f64), level: f64) -> Option<isize> {
    let (lo, hi) = window;
    let bottom = 0.5 * (lo + level);
    let top = 0.5 * (hi + level);
    let gap = |v: &[f64], i: usize| {
        let mut g = f64::INFINITY;
        if i > 0 {
            g = g.min(v[i] - v[i - 1]);
        }
        if i + 1 < v.len() {
            g = g.min(v[i + 1] - v[i]);
        }
        g
    };
    let (na, nb) = (a.len() as isize, b.len() as isize);
    let mut best: Option<(f64, isize)> = None;
    for shift in -4isize..=4 {
        let mut ok = true;
        let mut score: f64 = 0.0;
        for i in 0..na {
            let j = i + shift;
            let x = a[i as usize];
            if j < 0 {
                ok &= x < bottom;
            } else if j >= nb {
                ok &= x > top;
            } else {
                let y = b[j as usize];
                let d = (x - y).abs();
                ok &= d < 0.5 * gap(a, i as usize).min(gap(b, j as usize));
                score = score.max(d);
            }
        }
        for j in 0..nb {
            let i = j - shift;
            let y = b[j as usize];
            if i < 0 {
                ok &= y < bottom;
            } else if i >= na {
                ok &= y > top;
            }
        }
        if ok && best.is_none_or(|(s, _)| score < s) {
            best = Some((score, shift));
        }
    }
    best.map(|(_, s)| s)
}

struct FlowState<'a, F: OperatorFamily + ?Sized> {
    family: &'a F,
    level: f64,
    budget: usize,
    used: usize,
    next_id: usize,
    flow: i64,
    crossings: Vec<Crossing>,
    samples: Vec<BranchSample>,
}

impl<F: OperatorFamily + ?Sized> FlowState<'_, F> {
    fn locate(&self, a: f64, b: f64, la: f64, lb: f64) -> f64 {
        let f = |t: f64| self.family.level_function(t.rem_euclid(TAU), self.level);
        if let (Some(fa), Some(fb)) = (f(a), f(b)) {
            if fa == 0.0 {
                return a;
            }
            if fa * fb < 0.0 {
                let (mut x, mut y, mut fx) = (a, b, fa);
                for _ in 0..200 {
                    let m = 0.5 * (x + y);
                    if m <= x || m >= y {
                        break;
                    }
                    let fm = f(m).unwrap_or(0.0);
                    if fm == 0.0 {
                        return m.rem_euclid(TAU);
                    }
                    if fx * fm < 0.0 {
                        y = m;
                    } else {
                        x = m;
                        fx = fm;
                    }
                }
                return (0.5 * (x + y)).rem_euclid(TAU);
            }
        }
        (a + (b - a) * (self.level - la) / (lb - la)).rem_euclid(TAU)
    }

    fn segment(&mut self, a: f64, ea: &[f64], ida: &[usize], b: f64, eb: &[f64], depth: usize, record: bool) -> Result<Vec<usize>> {
        match match_lists(ea, eb, self.family.window(), self.level) {
            Some(shift) => {
                let mut idb = Vec::with_capacity(eb.len());
                for (j, &y) in eb.iter().enumerate() {
                    let i = j as isize - shift;
                    if i >= 0 && (i as usize) < ea.len() {
                        let x = ea[i as usize];
                        idb.push(ida[i as usize]);
                        let (below_a, below_b) = (x < self.level, y < self.level);
                        if below_a != below_b {
                            let direction = if below_a { 1 } else { -1 };
                            self.flow += direction as i64;
                            let theta = self.locate(a, b, x, y);
                            self.crossings.push(Crossing { theta, direction });
                        }
                    } else {
                        idb.push(self.next_id);
                        self.next_id += 1;
                    }
                }
                Ok(idb)
            }
            None => {
                if self.used >= self.budget || depth >= MAX_DEPTH {
                    return Err(Error::Refinement { lo: a, hi: b });
                }
                let m = 0.5 * (a + b);
                let em = self.family.eigenvalues(m.rem_euclid(TAU))?;
                self.used += 1;
                let idm = self.segment(a, ea, ida, m, &em, depth + 1, record)?;
                if record {
                    self.samples.push(BranchSample { theta: m, points: idm.iter().copied().zip(em.iter().copied()).collect() });
                }
                self.segment(m, &em, &idm, b, eb, depth + 1, record)
            }
        }
    }
}

fn sample_parallel<F: OperatorFamily + ?Sized>(family: &F, thetas: &[f64]) -> Result<Vec<Vec<f64>>> {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(thetas.len().max(1));
    let chunk = thetas.len().div_ceil(workers).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = thetas
            .chunks(chunk)
            .map(|ts| s.spawn(move || ts.iter().map(|&t| family.eigenvalues(t)).collect::<Result<Vec<_>>>()))
            .collect();
        let mut out = Vec::with_capacity(thetas.len());
        for h in handles {
            out.extend(h.join().expect("sampling thread panicked")?);
        }
        Ok(out)
    })
}

/// Spectral flow through `level` over a uniform grid of `samples` points, refining ambiguous steps.
pub fn spectral_flow<F: OperatorFamily + ?Sized>(family: &F, samples: usize, level: f64, budget: usize) -> Result<FlowReport> {
    if samples < 2 {
        return Err(Error::Input("at least two samples are required".into()));
    }
    let thetas: Vec<f64> = (0..samples).map(|k| TAU * k as f64 / samples as f64).collect();
    let eigs = sample_parallel(family, &thetas)?;
    let mut st = FlowState {
        family,
        level,
        budget,
        used: samples,
        next_id: eigs[0].len(),
        flow: 0,
        crossings: Vec::new(),
        samples: Vec::new(),
    };
    let mut ids: Vec<usize> = (0..eigs[0].len()).collect();
    st.samples.push(BranchSample { theta: 0.0, points: ids.iter().copied().zip(eigs[0].iter().copied()).collect() });
    for k in 0..samples {
        let closing = k + 1 == samples;
        let (b, eb) = if closing { (TAU, &eigs[0]) } else { (thetas[k + 1], &eigs[k + 1]) };
        ids = st.segment(thetas[k], &eigs[k], &ids, b, eb, 0, !closing)?;
        if !closing {
            st.samples.push(BranchSample { theta: b, points: ids.iter().copied().zip(eb.iter().copied()).collect() });
        }
    }
    st.crossings.sort_by(|x, y| x.theta.total_cmp(&y.theta));
    Ok(FlowReport { flow: st.flow, crossings: st.crossings, samples: st.samples, refinements: st.used - samples })
}

/// Spectral flow of a sampled loop without refinement.
pub fn spectral_flow_sampled(samples: &FamilyLoop<Vec<f64>>, window: (f64, f64), level: f64) -> Result<i64> {
    let n = samples.samples.len();
    let mut flow = 0i64;
    for k in 0..n {
        let (a, ea) = &samples.samples[k];
        let (b, eb) = &samples.samples[(k + 1) % n];
        let shift = match_lists(ea, eb, window, level).ok_or(Error::Refinement { lo: *a, hi: *b })?;
        for (j, &y) in eb.iter().enumerate() {
            let i = j as isize - shift;
            if i >= 0 && (i as usize) < ea.len() {
                let x = ea[i as usize];
                if (x < level) != (y < level) {
                    flow += if x < level { 1 } else { -1 };
                }
            }
        }
    }
    Ok(samples.orientation as i64 * flow)
}

type Conditions = Arc<dyn Fn(f64) -> SeparatedRobin + Send + Sync>;

/// A loop θ ↦ T(θ) of separated Robin realizations of −d²/dx² on [0,1].
#[derive(Clone)]
pub struct RobinLoop {
    pub name: String,
    conditions: Conditions,
    pub lambda_max: f64,
    /// Index fixed by the fixture construction, when known.
    pub expected: Option<i64>,
}

impl std::fmt::Debug for RobinLoop {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RobinLoop").field("name", &self.name).field("lambda_max", &self.lambda_max).finish()
    }
}

impl RobinLoop {
    pub fn new(name: &str, lambda_max: f64, expected: Option<i64>, f: impl Fn(f64) -> SeparatedRobin + Send + Sync + 'static) -> Self {
        RobinLoop { name: name.into(), conditions: Arc::new(f), lambda_max, expected }
    }

    /// u(0) = 0, u′(1) = κu(1) with κ = cot(θ/2).
    pub fn rellich(lambda_max: f64) -> Self {
        Self::new("rellich", lambda_max, Some(1), SeparatedRobin::rellich_theta)
    }

    /// Mirror image of the Rellich loop: Robin at 0, Dirichlet at 1.
    pub fn mirror(lambda_max: f64) -> Self {
        Self::new("mirror", lambda_max, Some(1), |t| SeparatedRobin {
            left: RobinEnd { p: (t / 2.0).sin(), q: -(t / 2.0).cos() },
            right: RobinEnd::DIRICHLET,
        })
    }

    /// u′(0) = κu(0) with κ = cot(θ/2), Neumann at 1.
    pub fn left_robin_neumann(lambda_max: f64) -> Self {
        Self::new("left-robin-neumann", lambda_max, Some(-1), |t| SeparatedRobin {
            left: RobinEnd::from_theta(t),
            right: RobinEnd::NEUMANN,
        })
    }

    /// The Rellich loop traversed twice.
    pub fn double(lambda_max: f64) -> Self {
        Self::new("double", lambda_max, Some(2), |t| SeparatedRobin::rellich_theta((2.0 * t).rem_euclid(TAU)))
    }

    /// κ = 2 + cos θ never reaches the Dirichlet point.
    pub fn contractible(lambda_max: f64) -> Self {
        Self::new("contractible", lambda_max, Some(0), |t| SeparatedRobin::rellich(2.0 + t.cos()))
    }

    pub fn constant_dirichlet(lambda_max: f64) -> Self {
        Self::new("dirichlet", lambda_max, Some(0), |_| SeparatedRobin::rellich(f64::INFINITY))
    }

    pub fn reversed(&self) -> Self {
        let f = self.conditions.clone();
        RobinLoop {
            name: format!("{}-reversed", self.name),
            conditions: Arc::new(move |t| f((TAU - t).rem_euclid(TAU))),
            lambda_max: self.lambda_max,
            expected: self.expected.map(|e| -e),
        }
    }

    pub fn by_name(name: &str, lambda_max: f64) -> Result<Self> {
        Ok(match name {
            "rellich" => Self::rellich(lambda_max),
            "mirror" => Self::mirror(lambda_max),
            "left-robin-neumann" => Self::left_robin_neumann(lambda_max),
            "double" => Self::double(lambda_max),
            "contractible" => Self::contractible(lambda_max),
            "dirichlet" => Self::constant_dirichlet(lambda_max),
            _ => return Err(Error::Input(format!("unknown family {name:?}"))),
        })
    }

    pub const NAMES: [&'static str; 6] = ["rellich", "mirror", "left-robin-neumann", "double", "contractible", "dirichlet"];

    pub fn conditions(&self, theta: f64) -> SeparatedRobin {
        (self.conditions)(theta)
    }

    /// Boundary relation in trace coordinates.
    pub fn relation(&self, theta: f64) -> LinearRelation {
        self.conditions(theta).relation()
    }

    /// (Λ′ ⊕ Λ⁻¹)(𝓑(θ) − M(0)) on the identity triple.
    pub fn reduced_relation(&self, theta: f64) -> Result<LinearRelation> {
        transform_boundary_condition(&GelfandTriple::identity(2), &rellich_m0(), &self.relation(theta))
    }

    /// κ of the right end, or of the left end when the right end is fixed.
    pub fn kappa(&self, theta: f64) -> f64 {
        let c = self.conditions(theta);
        if self.name.starts_with("mirror") || self.name.starts_with("left") {
            c.left.kappa()
        } else {
            c.right.kappa()
        }
    }
}

impl OperatorFamily for RobinLoop {
    fn eigenvalues(&self, theta: f64) -> Result<Vec<f64>> {
        self.conditions(theta).eigenvalues(self.lambda_max, usize::MAX)
    }

    fn window(&self) -> (f64, f64) {
        (-S_MAX * S_MAX, self.lambda_max)
    }

    fn level_function(&self, theta: f64, level: f64) -> Option<f64> {
        Some(self.conditions(theta).secular(level.signum() * level.abs().sqrt()))
    }
}

/// Spectral flow of the operator loop against the index of its reduced boundary family.
pub fn verify_index_theorem(family: &RobinLoop, samples: usize, budget: usize) -> Result<(IndexReport, FlowReport)> {
    let flow = spectral_flow(family, samples, 0.0, budget)?;
    let winding = relation_family_index_fn(&|t| family.reduced_relation(t), samples, budget)?;
    Ok((IndexReport::new(Some(flow.flow), Some(winding)), flow))
}

pub fn default_rellich() -> RobinLoop {
    RobinLoop::rellich(DEFAULT_LAMBDA_MAX)
}

/// Samples of a relation family as the loop file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopLiteral {
    pub dim: usize,
    pub samples: Vec<LoopSampleLiteral>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopSampleLiteral {
    pub theta: f64,
    pub relation: RelationLiteral,
}

impl LoopLiteral {
    pub fn from_fn(dim: usize, samples: usize, f: impl Fn(f64) -> LinearRelation) -> Self {
        let samples = (0..samples)
            .map(|k| {
                let theta = TAU * k as f64 / samples as f64;
                LoopSampleLiteral { theta, relation: f(theta).to_literal() }
            })
            .collect();
        LoopLiteral { dim, samples }
    }

    pub fn to_loop(&self, tol: f64) -> Result<FamilyLoop<LinearRelation>> {
        let mut out = Vec::with_capacity(self.samples.len());
        for s in &self.samples {
            let r = s.relation.to_relation(tol)?;
            if r.dom_dim() != self.dim || r.cod_dim() != self.dim {
                return Err(Error::Dimension(format!("sample at theta = {} is not a relation on C^{}", s.theta, self.dim)));
            }
            out.push((s.theta, r));
        }
        FamilyLoop::new(out)
    }
}

/// Graph of a real scalar t(θ) = tan((θ − π)/2), whose Cayley transform winds once.
pub fn scalar_mobius_loop(samples: usize) -> LoopLiteral {
    LoopLiteral::from_fn(1, samples, |t| {
        let half = (t - PI) / 2.0;
        let x = from_real(1, 1, &[half.cos()]);
        let y = from_real(1, 1, &[half.sin()]);
        LinearRelation::from_blocks(&x, &y, 1e-12).unwrap()
    })
}
