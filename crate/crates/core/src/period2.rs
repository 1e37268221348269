//! Period-2 solutions of the hinge recursion: fields alternating between
//! two values on even and odd generations. The symmetric reduction collapses
//! the four-equation system to 2-cycles of the scalar map
//! `gamma(x) = lam ((1+x)/(1+2x))^k`, which bifurcate exactly where the
//! slope at the fixed point passes -1.

use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{Error, Result};
use crate::graph::{ActivityVector, Builtin, ConstraintGraph};
use crate::math;
use crate::roots::{self, NewtonOptions};
use crate::ti;

/// The scalar symmetric-reduction map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaMap {
    pub lam: f64,
    pub k: usize,
}

impl GammaMap {
    pub fn new(lam: f64, k: usize) -> Result<Self> {
        if !(lam > 0.0) || !lam.is_finite() {
            return Err(Error::InvalidInput(format!("activity must be positive, got {lam}")));
        }
        if k < 1 {
            return Err(Error::InvalidInput(format!("order k must be >= 1, got {k}")));
        }
        Ok(Self { lam, k })
    }

    /// `gamma(x) = lam ((1+x)/(1+2x))^k`; strictly decreasing on (0, inf),
    /// from `lam` down to `lam 2^-k`.
    pub fn value(&self, x: f64) -> f64 {
        self.lam * math::powi((1.0 + x) / (1.0 + 2.0 * x), self.k)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let base = (1.0 + x) / (1.0 + 2.0 * x);
        -self.lam * self.k as f64 * math::powi(base, self.k - 1)
            / math::powi(1.0 + 2.0 * x, 2)
    }

    /// The unique fixed point, by bisection; `|gamma(x*) - x*| <= 1e-12`-level.
    pub fn fixed_point(&self) -> f64 {
        let lo = 0.5 * self.lam * math::powi(0.5, self.k);
        let hi = self.lam;
        roots::bisect(|x| self.value(x) - x, lo, hi)
    }

    /// `2x^2 + (3-k)x + 1`; negative exactly where the slope at the fixed
    /// point is below -1.
    pub fn slope_quadratic(&self, x: f64) -> f64 {
        2.0 * x * x + (3.0 - self.k as f64) * x + 1.0
    }
}

/// Fixed point of the symmetric-reduction map.
pub fn gamma_fixed_point(lam: f64, k: usize) -> Result<f64> {
    Ok(GammaMap::new(lam, k)?.fixed_point())
}

/// True iff the decreasing map crosses its fixed point with slope below -1,
/// which forces a 2-cycle. Evaluated through the sign of the quadratic
/// `2 x*^2 + (3-k) x* + 1` and cross-checked against the analytic slope.
pub fn kesten_condition(lam: f64, k: usize) -> Result<bool> {
    let gamma = GammaMap::new(lam, k)?;
    let xs = gamma.fixed_point();
    let quad = gamma.slope_quadratic(xs);
    let slope = gamma.derivative(xs);
    // the two routes agree identically in exact arithmetic; tolerate only
    // rounding-scale disagreement right at the bifurcation
    let slope_says = slope < -1.0;
    let quad_says = quad < 0.0;
    if slope_says != quad_says && math::abs(slope + 1.0) > 1e-9 {
        return Err(Error::Inconsistent(format!(
            "slope {slope} and quadratic {quad} disagree at lambda = {lam}, k = {k}"
        )));
    }
    Ok(quad_says)
}

/// The open activity interval on which the symmetric reduction has a
/// 2-cycle; empty below k = 6. Obtained by inverting `gamma(x) = x` at the
/// roots of the slope quadratic: `lam = x ((1+2x)/(1+x))^k`.
pub fn bifurcation_window(k: usize) -> Result<Option<(f64, f64)>> {
    if k < 1 {
        return Err(Error::InvalidInput(format!("order k must be >= 1, got {k}")));
    }
    let kf = k as f64;
    let disc = (kf - 3.0) * (kf - 3.0) - 8.0;
    if disc <= 0.0 {
        return Ok(None);
    }
    let s = math::sqrt(disc);
    let x_lo = (kf - 3.0 - s) / 4.0;
    let x_hi = (kf - 3.0 + s) / 4.0;
    let invert = |x: f64| x * math::powi((1.0 + 2.0 * x) / (1.0 + x), k);
    Ok(Some((invert(x_lo), invert(x_hi))))
}

/// All fixed points of `gamma . gamma`, reported as pairs `(x, gamma(x))`
/// sorted by the first entry. Always contains the diagonal `(x*, x*)`; the
/// alternating pair appears exactly when the slope condition holds, found
/// by a sign-change scan plus slope-guided bracketing around the fixed
/// point so near-bifurcation cycles are not missed.
pub fn solve_period2_symmetric(lam: f64, k: usize) -> Result<Vec<(f64, f64)>> {
    let gamma = GammaMap::new(lam, k)?;
    let xs = gamma.fixed_point();
    let lo = 0.25 * lam * math::powi(0.5, k);
    let hi = 1.05 * lam;
    let g2 = |x: f64| gamma.value(gamma.value(x)) - x;

    let mut points: Vec<f64> = vec![xs];
    let grid = roots::log_grid(lo, hi, 1024);
    points.extend(roots::sign_change_roots(g2, &grid));

    let slope = gamma.derivative(xs);
    if slope * slope > 1.0 {
        // the double map upcrosses at x*; push a bracket off the fixed point
        // on each side to capture the enclosing 2-cycle
        let mut s = math::max(xs * 1e-9, 1e-12);
        while g2(xs - s) >= 0.0 && xs - s > lo {
            s *= 2.0;
        }
        if xs - s > lo {
            let x0 = roots::bisect(g2, lo, xs - s);
            points.push(x0);
            points.push(gamma.value(x0));
        }
        let mut s = math::max(xs * 1e-9, 1e-12);
        while g2(xs + s) <= 0.0 && xs + s < hi {
            s *= 2.0;
        }
        if xs + s < hi {
            let x1 = roots::bisect(g2, xs + s, hi);
            points.push(x1);
            points.push(gamma.value(x1));
        }
    }

    let as_vecs: Vec<Vec<f64>> = points.into_iter().map(|x| vec![x]).collect();
    let mut kept: Vec<f64> = roots::dedup_points(as_vecs, 1e-9).into_iter().map(|v| v[0]).collect();
    kept.sort_by(|a, b| a.total_cmp(b));

    let mut out = Vec::with_capacity(kept.len());
    for x in kept {
        let y = gamma.value(x);
        if math::abs(gamma.value(y) - x) > 1e-9 * math::max(1.0, x) {
            return Err(Error::Inconsistent(format!(
                "spurious 2-cycle candidate {x} at lambda = {lam}, k = {k}"
            )));
        }
        out.push((x, y));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Period2Kind {
    /// Even and odd generations carry the same field (a TI solution).
    Diagonal,
    Alternating,
}

/// A solution of the full period-2 system: `z` on even generations, `t` on
/// odd ones, each the TI image of the other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Period2Solution {
    pub z: [f64; 2],
    pub t: [f64; 2],
    pub kind: Period2Kind,
    pub residual: f64,
}

/// Multi-start Newton over the full four-dimensional period-2 system for
/// the hinge model: `z` is the TI image of `t` and vice versa. Every TI
/// solution must reappear as a diagonal and every symmetric-reduction
/// cycle as a `z1 = z2` alternating solution; their absence is reported as
/// an internal error.
pub fn solve_period2_full(lam: f64, k: usize) -> Result<Vec<Period2Solution>> {
    let g = ConstraintGraph::builtin(Builtin::Hinge);
    let mut embedded: Vec<[f64; 4]> = Vec::new();
    for (x0, x1) in solve_period2_symmetric(lam, k)? {
        if math::abs(x0 - x1) > 1e-9 * math::max(1.0, x0) {
            embedded.push([x0, x0, x1, x1]);
        }
    }
    solve_period2_for_graph(&g, &ActivityVector::canonical(lam)?, k, &embedded)
}

/// The alternating system for an arbitrary three-state graph: the scalar
/// reduction above is hinge-specific, but the two-level structure is not,
/// so other models can reuse this solver directly. `extra_seeds` are
/// solutions known by other means; each must reappear in the output.
pub fn solve_period2_for_graph(
    g: &ConstraintGraph,
    act: &ActivityVector,
    k: usize,
    extra_seeds: &[[f64; 4]],
) -> Result<Vec<Period2Solution>> {
    if k < 1 {
        return Err(Error::InvalidInput(format!("order k must be >= 1, got {k}")));
    }
    if g.q() != 2 {
        return Err(Error::InvalidInput(format!(
            "period-2 solving works on three-state graphs; got q = {}",
            g.q()
        )));
    }

    let image = |z: [f64; 2]| ti::ti_image(g, act, k, z);
    let system = |v: &[f64], r: &mut [f64], jac: &mut [f64]| {
        let z = [v[0], v[1]];
        let t = [v[2], v[3]];
        let tz = image(z);
        let tt = image(t);
        r[0] = z[0] - tt[0];
        r[1] = z[1] - tt[1];
        r[2] = t[0] - tz[0];
        r[3] = t[1] - tz[1];
        // block Jacobian: [I, -dT(t); -dT(z), I]
        let kf = k as f64;
        let blocks = |w: [f64; 2], tw: [f64; 2]| -> [f64; 4] {
            let den = g.a(0, 0) + g.a(0, 1) * w[0] + g.a(0, 2) * w[1];
            let num = [
                g.a(1, 0) + g.a(1, 1) * w[0] + g.a(1, 2) * w[1],
                g.a(2, 0) + g.a(2, 1) * w[0] + g.a(2, 2) * w[1],
            ];
            let mut b = [0.0; 4];
            for j in 0..2 {
                for i in 0..2 {
                    b[j * 2 + i] =
                        tw[j] * kf * (g.a(j + 1, i + 1) / num[j] - g.a(0, i + 1) / den);
                }
            }
            b
        };
        let dt_t = blocks(t, tt);
        let dt_z = blocks(z, tz);
        for x in jac.iter_mut() {
            *x = 0.0;
        }
        jac[0] = 1.0;
        jac[5] = 1.0;
        jac[10] = 1.0;
        jac[15] = 1.0;
        jac[2] = -dt_t[0];
        jac[3] = -dt_t[1];
        jac[6] = -dt_t[2];
        jac[7] = -dt_t[3];
        jac[8] = -dt_z[0];
        jac[9] = -dt_z[1];
        jac[12] = -dt_z[2];
        jac[13] = -dt_z[3];
    };

    let opts = NewtonOptions { clamp: (1e-14, 1e14), ..NewtonOptions::default() };
    let residual_of = |z: [f64; 2], t: [f64; 2]| -> f64 {
        let tz = image(z);
        let tt = image(t);
        let mut worst = 0.0f64;
        for d in [z[0] - tt[0], z[1] - tt[1], t[0] - tz[0], t[1] - tz[1]] {
            worst = math::max(worst, math::abs(d));
        }
        worst
    };

    // seeds: (z, T(z)) over the grid, plus every known embedded solution
    let mut seeds: Vec<[f64; 4]> = Vec::new();
    let mut embedded: Vec<[f64; 4]> = extra_seeds.to_vec();
    for s in ti::count_ti_solutions(g, act, k)?.iter() {
        seeds.push([s.z[0], s.z[1], s.z[0], s.z[1]]);
        embedded.push([s.z[0], s.z[1], s.z[0], s.z[1]]);
    }
    seeds.extend_from_slice(extra_seeds);
    let axis = roots::log_grid(1e-4, 1e4, 64);
    for &a in &axis {
        for &b in &axis {
            let z = [a, b];
            let t = image(z);
            if t.iter().all(|&x| x > 1e-14 && x < 1e14) {
                seeds.push([a, b, t[0], t[1]]);
            }
        }
    }

    let mut found: Vec<Vec<f64>> = Vec::new();
    for seed in seeds {
        if let Some(out) = roots::newton(&system, &seed, &opts) {
            let z = [out.x[0], out.x[1]];
            let t = [out.x[2], out.x[3]];
            if z.iter().chain(t.iter()).all(|&x| x > 0.0)
                && residual_of(z, t) <= ti::RESIDUAL_TOL
            {
                found.push(out.x);
            }
        }
    }
    let mut kept = roots::dedup_points(found, ti::DEDUP_TOL);
    kept = roots::collapse_degenerate_clusters(kept, 1e-4, ti::RESIDUAL_TOL, |p| {
        residual_of([p[0], p[1]], [p[2], p[3]])
    });
    kept.sort_by(|a, b| {
        a[0].total_cmp(&b[0])
            .then(a[1].total_cmp(&b[1]))
            .then(a[2].total_cmp(&b[2]))
    });

    for e in &embedded {
        let present = kept.iter().any(|v| {
            v.iter()
                .zip(e.iter())
                .all(|(a, b)| math::abs(a - b) <= 1e-6 * math::max(1.0, math::abs(*b)))
        });
        if !present {
            return Err(Error::Inconsistent(format!(
                "known period-2 solution {e:?} lost by the grid solve at k = {k}"
            )));
        }
    }

    Ok(kept
        .into_iter()
        .map(|v| {
            let z = [v[0], v[1]];
            let t = [v[2], v[3]];
            let scale = math::max(1.0, math::max(z[0], z[1]));
            let kind = if math::abs(z[0] - t[0]) <= 1e-7 * scale
                && math::abs(z[1] - t[1]) <= 1e-7 * scale
            {
                Period2Kind::Diagonal
            } else {
                Period2Kind::Alternating
            };
            Period2Solution { z, t, kind, residual: residual_of(z, t) }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_examples() {
        // same equation as the symmetric hinge solve at lam = 9/4, k = 2
        let x = gamma_fixed_point(2.25, 2).unwrap();
        assert!((x - 1.0).abs() < 1e-12);

        let x = gamma_fixed_point(5.0, 6).unwrap();
        assert!((x - 0.665_376_218_413_112_3).abs() < 1e-10);

        // gamma(1/2) = 1/2 exactly at lam = 2048/729, k = 6
        let x = gamma_fixed_point(2048.0 / 729.0, 6).unwrap();
        assert!((x - 0.5).abs() < 1e-12);

        let g = GammaMap::new(5.0, 6).unwrap();
        let x = g.fixed_point();
        assert!((g.value(x) - x).abs() < 1e-12);
    }

    #[test]
    fn slope_condition_examples() {
        // k = 5 never satisfies the condition: the quadratic has no real roots
        for lam in [0.5, 1.0, 2.0, 5.0, 20.0, 200.0] {
            assert!(!kesten_condition(lam, 5).unwrap(), "lam={lam}");
        }
        assert!(kesten_condition(5.0, 6).unwrap());
        assert!(!kesten_condition(2.0, 6).unwrap());
        // quadratic value at the k=6, lam=5 fixed point
        let g = GammaMap::new(5.0, 6).unwrap();
        let q = g.slope_quadratic(g.fixed_point());
        assert!((q - (-0.110_677_631_2)).abs() < 1e-9);
    }

    #[test]
    fn window_endpoints() {
        assert!(bifurcation_window(5).unwrap().is_none());
        assert!(bifurcation_window(2).unwrap().is_none());
        let (lo, hi) = bifurcation_window(6).unwrap().unwrap();
        assert!((lo - 2048.0 / 729.0).abs() <= 1e-9);
        assert!((hi - 729.0 / 64.0).abs() <= 1e-9);
        // k = 7 window bounds in x: (4 -+ sqrt(8))/4
        let (lo7, hi7) = bifurcation_window(7).unwrap().unwrap();
        let x_lo = (4.0 - 8.0f64.sqrt()) / 4.0;
        let x_hi = (4.0 + 8.0f64.sqrt()) / 4.0;
        let invert = |x: f64, k: i32| x * ((1.0 + 2.0 * x) / (1.0 + x)).powi(k);
        assert!((lo7 - invert(x_lo, 7)).abs() < 1e-12);
        assert!((hi7 - invert(x_hi, 7)).abs() < 1e-12);
    }

    #[test]
    fn symmetric_cycles() {
        // k = 2: only the diagonal, whatever the activity
        for lam in [0.5, 2.25, 4.0, 50.0] {
            let sols = solve_period2_symmetric(lam, 2).unwrap();
            assert_eq!(sols.len(), 1, "lam={lam}");
            assert!((sols[0].0 - sols[0].1).abs() < 1e-10);
        }
        // inside the k = 6 window: diagonal plus the swapped cycle
        let sols = solve_period2_symmetric(5.0, 6).unwrap();
        assert_eq!(sols.len(), 3);
        let xs = gamma_fixed_point(5.0, 6).unwrap();
        assert!((sols[0].0 - 0.365_932_490_193_423_1).abs() < 1e-9);
        assert!((sols[2].0 - 1.203_541_951_567_813_1).abs() < 1e-9);
        assert!(sols[0].0 < xs && xs < sols[2].0);
        assert!((sols[0].1 - sols[2].0).abs() < 1e-9);
        assert!((sols[2].1 - sols[0].0).abs() < 1e-9);
        // below the window: diagonal only
        let sols = solve_period2_symmetric(2.5, 6).unwrap();
        assert_eq!(sols.len(), 1);
    }

    #[test]
    fn cycle_count_matches_slope_condition_on_grid() {
        for k in [2usize, 4, 6, 7] {
            for i in 0..12 {
                let lam = 0.5 + 1.1 * i as f64;
                let number = solve_period2_symmetric(lam, k).unwrap().len();
                let expected = if kesten_condition(lam, k).unwrap() { 3 } else { 1 };
                assert_eq!(number, expected, "k={k} lam={lam}");
            }
        }
    }

    #[test]
    fn generic_alternating_solver_covers_other_models() {
        use crate::graph::ConstraintGraph;
        let pipe = ConstraintGraph::builtin(Builtin::Pipe);
        let act = ActivityVector::canonical(2.25).unwrap();
        let sols = solve_period2_for_graph(&pipe, &act, 2, &[]).unwrap();
        let ti_sol = ti::solve_pipe(2.25, 2).unwrap();
        assert!(sols.iter().any(|s| s.kind == Period2Kind::Diagonal
            && (s.z[0] - ti_sol.z[0]).abs() < 1e-8
            && (s.z[1] - ti_sol.z[1]).abs() < 1e-8));
        for s in &sols {
            assert!(s.residual <= 1e-10);
        }
    }

    #[test]
    fn full_system_contains_embeddings() {
        // k = 2, lam = 4: the three TI solutions as diagonals
        let sols = solve_period2_full(4.0, 2).unwrap();
        let diagonals: Vec<_> =
            sols.iter().filter(|s| s.kind == Period2Kind::Diagonal).collect();
        assert!(diagonals.len() >= 3);
        let ti_sym = ti::solve_hinge_symmetric(4.0, 2).unwrap();
        assert!(sols.iter().any(|s| (s.z[0] - ti_sym.z[0]).abs() < 1e-8
            && s.kind == Period2Kind::Diagonal));

        // k = 6, lam = 5: the alternating symmetric pair is present
        let sols = solve_period2_full(5.0, 6).unwrap();
        let cycles = solve_period2_symmetric(5.0, 6).unwrap();
        let (x0, x1) = cycles[0];
        assert!(sols.iter().any(|s| s.kind == Period2Kind::Alternating
            && (s.z[0] - x0).abs() < 1e-7
            && (s.t[0] - x1).abs() < 1e-7));
        // alternating solutions come in swapped pairs
        for s in sols.iter().filter(|s| s.kind == Period2Kind::Alternating) {
            assert!(sols.iter().any(|w| (w.z[0] - s.t[0]).abs() < 1e-7
                && (w.z[1] - s.t[1]).abs() < 1e-7
                && (w.t[0] - s.z[0]).abs() < 1e-7));
        }
        // every solution satisfies the system
        for s in &sols {
            assert!(s.residual <= 1e-10);
        }
    }
}
