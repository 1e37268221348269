//! Translation-invariant fixed points of the recursion for the three-state
//! models: closed-form asymmetric branches at k = 2 for hinge and wand, the
//! one-dimensional symmetric equations, the pipe solver with its uniqueness
//! certificate, multi-start counting, and critical-activity location.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::format;

use crate::error::{Error, Result};
use crate::graph::{ActivityVector, Builtin, ConstraintGraph};
use crate::math;
use crate::roots::{self, NewtonOptions};

/// Deduplication tolerance for distinct fixed points (relative sup norm).
pub const DEDUP_TOL: f64 = 1e-7;
/// A candidate counts as a fixed point only below this defect.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Components closer than this are considered equal when classifying a
/// solution as symmetric. At a degenerate (transition) fixed point the
/// residual is cubically flat, which caps the attainable root accuracy
/// near (eps/|cubic|)^(1/3); this tolerance sits above that cap.
pub const CLASSIFY_TOL: f64 = 1e-5;
/// Distinct roots are never closer than this in the supported models; the
/// degenerate-cluster collapse only inspects pairs within this radius.
const CLUSTER_RADIUS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    Symmetric,
    AsymmetricPlus,
    AsymmetricMinus,
}

impl SolutionKind {
    pub fn tag(self) -> &'static str {
        match self {
            SolutionKind::Symmetric => "symmetric",
            SolutionKind::AsymmetricPlus => "asymmetric_plus",
            SolutionKind::AsymmetricMinus => "asymmetric_minus",
        }
    }
}

/// One translation-invariant fixed point with its classification and the
/// maximum componentwise defect in the TI system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiSolution {
    pub z: [f64; 2],
    pub kind: SolutionKind,
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolutionSet {
    pub solutions: Vec<TiSolution>,
}

impl SolutionSet {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, TiSolution> {
        self.solutions.iter()
    }
}

/// Models with a symmetric/asymmetric phase transition at k = 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionModel {
    Hinge,
    Wand,
}

impl TransitionModel {
    pub fn builtin(self) -> Builtin {
        match self {
            TransitionModel::Hinge => Builtin::Hinge,
            TransitionModel::Wand => Builtin::Wand,
        }
    }
}

fn check_lambda(lam: f64) -> Result<()> {
    if !(lam > 0.0) || !lam.is_finite() {
        return Err(Error::InvalidInput(format!("activity must be positive, got {lam}")));
    }
    Ok(())
}

fn check_order(k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::InvalidInput(format!("order k must be >= 1, got {k}")));
    }
    Ok(())
}

/// TI image of `z` under the recursion for a three-state graph: every child
/// carries the same vector, so the product collapses to a k-th power.
pub(crate) fn ti_image(g: &ConstraintGraph, lam: &ActivityVector, k: usize, z: [f64; 2]) -> [f64; 2] {
    let den = g.a(0, 0) + g.a(0, 1) * z[0] + g.a(0, 2) * z[1];
    let mut out = [0.0; 2];
    for j in 1..=2usize {
        let num = g.a(j, 0) + g.a(j, 1) * z[0] + g.a(j, 2) * z[1];
        out[j - 1] = lam.ratio(j) * math::powi(num / den, k);
    }
    out
}

/// Residual (and optionally Jacobian) of `z - T(z)` for the TI system.
fn ti_residual_jac(
    g: &ConstraintGraph,
    lam: &ActivityVector,
    k: usize,
    z: &[f64],
    r: &mut [f64],
    jac: Option<&mut [f64]>,
) {
    let den = g.a(0, 0) + g.a(0, 1) * z[0] + g.a(0, 2) * z[1];
    let mut t = [0.0f64; 2];
    let mut num = [0.0f64; 2];
    for j in 1..=2usize {
        num[j - 1] = g.a(j, 0) + g.a(j, 1) * z[0] + g.a(j, 2) * z[1];
        t[j - 1] = lam.ratio(j) * math::powi(num[j - 1] / den, k);
        r[j - 1] = z[j - 1] - t[j - 1];
    }
    if let Some(jac) = jac {
        for j in 0..2usize {
            for i in 0..2usize {
                let dt = t[j] * k as f64 * (g.a(j + 1, i + 1) / num[j] - g.a(0, i + 1) / den);
                jac[j * 2 + i] = if i == j { 1.0 } else { 0.0 } - dt;
            }
        }
    }
}

pub(crate) fn ti_residual_norm(
    g: &ConstraintGraph,
    lam: &ActivityVector,
    k: usize,
    z: [f64; 2],
) -> f64 {
    let t = ti_image(g, lam, k, z);
    math::max(math::abs(z[0] - t[0]), math::abs(z[1] - t[1]))
}

fn classify(z: [f64; 2]) -> SolutionKind {
    let scale = math::max(1.0, math::max(math::abs(z[0]), math::abs(z[1])));
    if math::abs(z[0] - z[1]) <= CLASSIFY_TOL * scale {
        SolutionKind::Symmetric
    } else if z[0] > z[1] {
        SolutionKind::AsymmetricPlus
    } else {
        SolutionKind::AsymmetricMinus
    }
}

fn make_solution(g: &ConstraintGraph, lam: &ActivityVector, k: usize, z: [f64; 2]) -> TiSolution {
    TiSolution { z, kind: classify(z), residual: ti_residual_norm(g, lam, k, z) }
}

/// All TI fixed points of a three-state graph found by dense log-grid
/// seeding plus damped Newton, deduplicated and sorted by components.
///
/// A second pass reseeds around every root along the swap direction so
/// pitchfork branches close to a symmetric root are not missed.
pub fn count_ti_solutions(
    g: &ConstraintGraph,
    lam: &ActivityVector,
    k: usize,
) -> Result<SolutionSet> {
    count_ti_solutions_on_grid(g, lam, k, 64, (1e-4, 1e4))
}

pub fn count_ti_solutions_on_grid(
    g: &ConstraintGraph,
    lam: &ActivityVector,
    k: usize,
    grid: usize,
    range: (f64, f64),
) -> Result<SolutionSet> {
    check_order(k)?;
    if g.q() != 2 {
        return Err(Error::InvalidInput(format!(
            "TI counting works on three-state graphs; got q = {}",
            g.q()
        )));
    }
    if lam.len() != 3 {
        return Err(Error::InvalidInput(format!(
            "activity vector must have 3 entries, got {}",
            lam.len()
        )));
    }
    if grid < 2 || !(range.0 > 0.0) || !(range.1 > range.0) {
        return Err(Error::InvalidInput(String::from("bad seeding grid")));
    }

    let system = |z: &[f64], r: &mut [f64], jac: &mut [f64]| {
        ti_residual_jac(g, lam, k, z, r, Some(jac));
    };
    let opts = NewtonOptions { clamp: (1e-14, 1e14), ..NewtonOptions::default() };

    let axis = roots::log_grid(range.0, range.1, grid);
    let mut found: Vec<Vec<f64>> = Vec::new();
    let try_seed = |seed: [f64; 2], found: &mut Vec<Vec<f64>>| {
        if let Some(out) = roots::newton(&system, &seed, &opts) {
            let z = [out.x[0], out.x[1]];
            if z[0] > 0.0 && z[1] > 0.0 && ti_residual_norm(g, lam, k, z) <= RESIDUAL_TOL {
                found.push(out.x);
            }
        }
    };

    for &z1 in &axis {
        for &z2 in &axis {
            try_seed([z1, z2], &mut found);
        }
    }
    let mut kept = roots::dedup_points(found, DEDUP_TOL);

    // reseed around every located root along the swap direction; this is
    // what resolves counts right next to the pitchfork
    let ladder = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 1e-5, 1e-6];
    let mut extra: Vec<Vec<f64>> = kept.clone();
    for root in kept.clone() {
        let scale = math::max(1.0, math::max(root[0], root[1]));
        for &d in &ladder {
            let delta = d * scale;
            try_seed([root[0] + delta, root[1] - delta], &mut extra);
            try_seed([root[0] - delta, root[1] + delta], &mut extra);
        }
        try_seed([root[1], root[0]], &mut extra);
    }
    kept = roots::dedup_points(extra, DEDUP_TOL);

    // right at a transition the fixed point is degenerate and stalled
    // Newton runs scatter candidates over the flat region; candidates whose
    // midpoint still satisfies the system are one root, reported once
    kept = roots::collapse_degenerate_clusters(kept, CLUSTER_RADIUS, RESIDUAL_TOL, |p| {
        ti_residual_norm(g, lam, k, [p[0], p[1]])
    });

    kept.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    if kept.is_empty() {
        return Err(Error::EmptySolutionSet);
    }
    Ok(SolutionSet {
        solutions: kept
            .into_iter()
            .map(|z| make_solution(g, lam, k, [z[0], z[1]]))
            .collect(),
    })
}

/// Unique root of the symmetric hinge equation `z/lam = ((1+z)/(1+2z))^k`,
/// by bracketed bisection on [0, lam].
pub fn solve_hinge_symmetric(lam: f64, k: usize) -> Result<TiSolution> {
    check_lambda(lam)?;
    check_order(k)?;
    let f = |z: f64| lam * math::powi((1.0 + z) / (1.0 + 2.0 * z), k) - z;
    let z = roots::bisect(f, 0.0, lam);
    let g = ConstraintGraph::builtin(Builtin::Hinge);
    let act = ActivityVector::canonical(lam)?;
    Ok(make_solution(&g, &act, k, [z, z]))
}

/// Unique root of the symmetric wand equation `z = lam ((1+z)/(2z))^k`.
pub fn solve_wand_symmetric(lam: f64, k: usize) -> Result<TiSolution> {
    check_lambda(lam)?;
    check_order(k)?;
    let f = |z: f64| lam * math::powi((1.0 + z) / (2.0 * z), k) - z;
    let mut lo = 1e-8;
    while f(lo) <= 0.0 && lo > 1e-290 {
        lo *= 1e-3;
    }
    let hi = math::max(lam, 1.0) + 1.0;
    let z = roots::bisect(f, lo, hi);
    let g = ConstraintGraph::builtin(Builtin::Wand);
    let act = ActivityVector::canonical(lam)?;
    Ok(make_solution(&g, &act, k, [z, z]))
}

/// The two asymmetric branch values of the k = 2 closed form,
/// `((1 +- sqrt(1-4a^2)) / (2a))^2`; their product is exactly 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormBranches {
    pub a: f64,
    pub hi: f64,
    pub lo: f64,
}

impl ClosedFormBranches {
    fn from_a(a: f64) -> Option<Self> {
        let disc = 1.0 - 4.0 * a * a;
        if disc <= 0.0 {
            return None;
        }
        let s = math::sqrt(disc);
        let hi = math::powi((1.0 + s) / (2.0 * a), 2);
        let lo = math::powi((1.0 - s) / (2.0 * a), 2);
        Some(Self { a, hi, lo })
    }
}

/// Hinge closed form at k = 2: real branches exist only above lam = 9/4.
pub fn hinge_closed_form_k2(lam: f64) -> Option<ClosedFormBranches> {
    if !(lam > 0.0) {
        return None;
    }
    ClosedFormBranches::from_a(2.0 / (math::sqrt(lam) + math::sqrt(lam + 4.0)))
}

/// Wand closed form at k = 2: real branches exist only above lam = 1.
pub fn wand_closed_form_k2(lam: f64) -> Option<ClosedFormBranches> {
    if !(lam > 0.0) {
        return None;
    }
    ClosedFormBranches::from_a(2.0 / (math::sqrt(lam) + math::sqrt(lam + 8.0)))
}

fn asymmetric_pair(
    which: Builtin,
    lam: f64,
    branches: Option<ClosedFormBranches>,
    sum_target: f64,
    sum_observed: impl Fn([f64; 2]) -> f64,
) -> Result<Vec<TiSolution>> {
    let Some(b) = branches else {
        return Ok(Vec::new());
    };
    let g = ConstraintGraph::builtin(which);
    let act = ActivityVector::canonical(lam)?;
    let mut out = Vec::with_capacity(2);
    for z in [[b.hi, b.lo], [b.lo, b.hi]] {
        let sol = make_solution(&g, &act, 2, z);
        if sol.residual > RESIDUAL_TOL {
            return Err(Error::Inconsistent(format!(
                "closed-form branch for {which} at lambda = {lam} has residual {}",
                sol.residual
            )));
        }
        let s = sum_observed(z);
        if math::abs(s - sum_target) > 1e-10 * math::max(1.0, sum_target) {
            return Err(Error::Inconsistent(format!(
                "sum identity violated for {which} at lambda = {lam}: {s} vs {sum_target}"
            )));
        }
        out.push(sol);
    }
    Ok(out)
}

/// Asymmetric hinge solutions at k = 2: empty at or below the critical
/// activity 9/4, otherwise the two swapped closed-form branches, verified
/// against the TI system and the sum identity.
pub fn solve_hinge_asymmetric_k2(lam: f64) -> Result<Vec<TiSolution>> {
    check_lambda(lam)?;
    let sum_target = (lam + math::sqrt(lam * lam + 4.0 * lam)) / 2.0;
    asymmetric_pair(
        Builtin::Hinge,
        lam,
        hinge_closed_form_k2(lam),
        sum_target,
        |z| 1.0 + z[0] + z[1],
    )
}

/// Asymmetric wand solutions at k = 2: empty at or below the critical
/// activity 1, otherwise the two swapped closed-form branches.
pub fn solve_wand_asymmetric_k2(lam: f64) -> Result<Vec<TiSolution>> {
    check_lambda(lam)?;
    let sum_target = (lam + math::sqrt(lam * lam + 8.0 * lam)) / 2.0;
    asymmetric_pair(
        Builtin::Wand,
        lam,
        wand_closed_form_k2(lam),
        sum_target,
        |z| z[0] + z[1],
    )
}

/// `y(x) = (x (1+x)^k)^(1/(k+1))`, the `z1` implied by `z2 = x` in the pipe
/// system.
fn pipe_y(x: f64, k: usize) -> f64 {
    math::exp((math::ln(x) + k as f64 * math::ln_1p(x)) / (k + 1) as f64)
}

/// Composed one-dimensional pipe map: `f(x) = (y/(1+y))^k` with `y = y(x)`.
fn pipe_f(x: f64, k: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let y = pipe_y(x, k);
    math::powi(y / (1.0 + y), k)
}

/// Analytic derivative of the composed pipe map; positive for x > 0.
fn pipe_f_prime(x: f64, k: usize) -> f64 {
    let kf = k as f64;
    let y = pipe_y(x, k);
    kf / (kf + 1.0) * ((kf + 1.0) * x + 1.0) / (x * (x + 1.0)) * math::powi(y, k)
        / math::powi(1.0 + y, k + 1)
}

/// The unique TI pipe solution: bisection on the composed one-dimensional
/// equation `x = lam f(x)` in `x = z2`, recovery of `z1` through
/// `u = (z2/lam)^(1/k)`, `z1 = u/(1-u)`, then a joint Newton polish of the
/// two-dimensional system.
pub fn solve_pipe(lam: f64, k: usize) -> Result<TiSolution> {
    check_lambda(lam)?;
    check_order(k)?;
    let g = |x: f64| lam * pipe_f(x, k) - x;
    let mut lo = lam * 1e-12;
    while g(lo) <= 0.0 && lo > 1e-290 {
        lo *= 1e-3;
    }
    let x = roots::bisect(g, lo, lam);

    let u = math::exp((math::ln(x) - math::ln(lam)) / k as f64);
    if !(u < 1.0) {
        return Err(Error::Inconsistent(format!(
            "pipe recovery produced u = {u} >= 1 at lambda = {lam}, k = {k}"
        )));
    }
    let z1 = u / (1.0 - u);
    // the same z1 through the composed map; the two routes must agree
    let y = pipe_y(x, k);
    if math::abs(z1 - y) > 1e-6 * math::max(1.0, y) {
        return Err(Error::Inconsistent(format!(
            "pipe recovery routes disagree: u-route {z1} vs composed {y}"
        )));
    }

    let graph = ConstraintGraph::builtin(Builtin::Pipe);
    let act = ActivityVector::canonical(lam)?;
    let system = |z: &[f64], r: &mut [f64], jac: &mut [f64]| {
        ti_residual_jac(&graph, &act, k, z, r, Some(jac));
    };
    let opts = NewtonOptions { clamp: (1e-300, 1e300), ..NewtonOptions::default() };
    let polished = roots::newton(&system, &[z1, x], &opts)
        .map(|o| [o.x[0], o.x[1]])
        .unwrap_or([z1, x]);
    let sol = make_solution(&graph, &act, k, polished);
    if sol.residual > RESIDUAL_TOL {
        return Err(Error::Inconsistent(format!(
            "pipe solution residual {} above tolerance",
            sol.residual
        )));
    }
    Ok(sol)
}

/// Numeric certificate that the pipe TI solution is unique: the composed
/// map must be increasing, its tangency reduction must have exactly one
/// root, and the primary equation exactly one root over a log grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PipeCertificate {
    pub lam: f64,
    pub k: usize,
    pub grid_points: usize,
    pub f_increasing: bool,
    pub reduced_root_count: usize,
    pub primary_root_count: usize,
    pub endpoints_ok: bool,
}

impl PipeCertificate {
    pub fn passed(&self) -> bool {
        self.f_increasing
            && self.reduced_root_count == 1
            && self.primary_root_count == 1
            && self.endpoints_ok
    }
}

pub fn pipe_uniqueness_certificate(lam: f64, k: usize) -> Result<PipeCertificate> {
    check_lambda(lam)?;
    check_order(k)?;
    let grid_points = 2001usize;
    let kf = k as f64;

    // monotonicity of the composed map: analytic derivative positive and
    // sampled values strictly increasing on a wide log grid
    let grid = roots::log_grid(1e-8, 1e8, grid_points);
    let mut f_increasing = true;
    let mut prev = 0.0f64;
    for &x in &grid {
        if pipe_f_prime(x, k) <= 0.0 {
            f_increasing = false;
        }
        let fx = pipe_f(x, k);
        if fx <= prev {
            f_increasing = false;
        }
        prev = fx;
    }

    // the twice-reduced tangency equation `(k+1) x = 1/y(x) + k` has a
    // decreasing right-hand side, so exactly one root
    let reduced = |x: f64| (kf + 1.0) * x - (1.0 / pipe_y(x, k) + kf);
    let reduced_root_count = roots::sign_change_roots(reduced, &grid).len();

    // the primary equation `x = lam f(x)` over a lambda-scaled grid
    let gfun = |x: f64| lam * pipe_f(x, k) - x;
    let mut lo = lam * 1e-12;
    while gfun(lo) <= 0.0 && lo > 1e-290 {
        lo *= 1e-3;
    }
    let primary_grid = roots::log_grid(lo, 2.0 * lam, grid_points);
    let primary_root_count = roots::sign_change_roots(gfun, &primary_grid).len();

    let endpoints_ok = pipe_f(1e-300, k) < 1e-30 && pipe_f(1e15, k) > 1.0 - 1e-4;

    Ok(PipeCertificate {
        lam,
        k,
        grid_points,
        f_increasing,
        reduced_root_count,
        primary_root_count,
        endpoints_ok,
    })
}

/// Bisection on the TI solution count over an activity bracket; `lo` must
/// sit in the one-solution phase and `hi` in the three-solution phase.
pub fn locate_transition(
    model: TransitionModel,
    k: usize,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    check_order(k)?;
    check_lambda(lo)?;
    if !(hi > lo) || !(tol > 0.0) {
        return Err(Error::InvalidInput(String::from("bad transition bracket")));
    }
    let g = ConstraintGraph::builtin(model.builtin());
    let count = |lam: f64| -> Result<usize> {
        Ok(count_ti_solutions(&g, &ActivityVector::canonical(lam)?, k)?.len())
    };
    if count(lo)? >= 3 {
        return Err(Error::InvalidInput(format!("lower bracket {lo} already has 3 solutions")));
    }
    if count(hi)? < 3 {
        return Err(Error::InvalidInput(format!("upper bracket {hi} still has 1 solution")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(mid)? >= 3 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Critical activity separating the unique phase from the three-solution
/// phase. Exact at k = 2 (9/4 for hinge, 1 for wand); located by scanning
/// and bisecting the solution count otherwise.
pub fn critical_lambda(model: TransitionModel, k: usize) -> Result<f64> {
    check_order(k)?;
    if k == 2 {
        return Ok(match model {
            TransitionModel::Hinge => 2.25,
            TransitionModel::Wand => 1.0,
        });
    }
    let g = ConstraintGraph::builtin(model.builtin());
    let scan = roots::log_grid(1e-8, 1e6, 141);
    let mut prev: Option<(f64, usize)> = None;
    for &lam in &scan {
        let n = count_ti_solutions(&g, &ActivityVector::canonical(lam)?, k)?.len();
        if let Some((plam, pn)) = prev {
            if pn < 3 && n >= 3 {
                return locate_transition(model, k, plam, lam, 1e-9 * math::max(1.0, lam));
            }
        }
        prev = Some((lam, n));
    }
    Err(Error::NoTransition { lambda_max: 1e6 })
}
