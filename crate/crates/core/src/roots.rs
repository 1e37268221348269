//! Shared root-finding machinery: bracketed bisection, damped Newton with
//! analytic Jacobians, grid seeding and solution deduplication.

use alloc::vec::Vec;
use alloc::vec;

use crate::math;

/// Bisection on a bracketing interval. `f(lo)` and `f(hi)` must have
/// opposite signs (or vanish); converges to f64 resolution.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return hi;
    }
    debug_assert!(
        flo * fhi < 0.0,
        "bisect needs a sign change on the bracket"
    );
    let descending = flo > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval at f64 resolution
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == descending {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Logarithmically spaced grid, inclusive of both endpoints.
pub(crate) fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    debug_assert!(lo > 0.0 && hi > lo && count >= 2);
    let llo = math::ln(lo);
    let lhi = math::ln(hi);
    (0..count)
        .map(|i| math::exp(llo + (lhi - llo) * i as f64 / (count - 1) as f64))
        .collect()
}

/// All sign-change roots of `f` over a grid, each polished by bisection.
pub(crate) fn sign_change_roots<F: Fn(f64) -> f64 + Copy>(f: F, grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev = grid[0];
    let mut fprev = f(prev);
    for &x in &grid[1..] {
        let fx = f(x);
        if fprev == 0.0 {
            out.push(prev);
        } else if fx != 0.0 && fprev * fx < 0.0 {
            out.push(bisect(f, prev, x));
        }
        prev = x;
        fprev = fx;
    }
    if fprev == 0.0 {
        out.push(prev);
    }
    out
}

/// Gaussian elimination with partial pivoting; solves in place, `a` is
/// row-major `n x n`. Returns false on a (numerically) singular matrix.
pub(crate) fn solve_linear(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    for col in 0..n {
        let mut pivot = col;
        let mut best = math::abs(a[col * n + col]);
        for row in col + 1..n {
            let v = math::abs(a[row * n + col]);
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return false;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
            b.swap(col, pivot);
        }
        let inv = 1.0 / a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] * inv;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[row * n + j] -= factor * a[col * n + j];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut x = b[col];
        for j in col + 1..n {
            x -= a[col * n + j] * b[j];
        }
        b[col] = x / a[col * n + col];
    }
    b.iter().all(|x| x.is_finite())
}

pub(crate) struct NewtonOutcome {
    pub x: Vec<f64>,
    #[allow(dead_code)]
    pub residual: f64,
    #[allow(dead_code)]
    pub last_step: f64,
}

pub(crate) struct NewtonOptions {
    pub max_iterations: usize,
    pub residual_target: f64,
    pub step_target: f64,
    /// Iterates must stay inside (lo, hi) componentwise.
    pub clamp: (f64, f64),
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            residual_target: 1e-13,
            step_target: 1e-11,
            clamp: (1e-300, 1e300),
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for &x in v {
        m = math::max(m, math::abs(x));
    }
    m
}

/// Damped Newton iteration. `system` fills the residual and the row-major
/// Jacobian at the given point. The step is halved while the residual grows;
/// seeds that leave the clamp box or stall are reported as `None`.
pub(crate) fn newton<F>(system: &F, seed: &[f64], opts: &NewtonOptions) -> Option<NewtonOutcome>
where
    F: Fn(&[f64], &mut [f64], &mut [f64]),
{
    let n = seed.len();
    let mut x = seed.to_vec();
    let mut r = vec![0.0; n];
    let mut jac = vec![0.0; n * n];
    let mut jac_work = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    let mut last_step = f64::INFINITY;

    system(&x, &mut r, &mut jac);
    let mut res_norm = inf_norm(&r);
    if !res_norm.is_finite() {
        return None;
    }

    for _ in 0..opts.max_iterations {
        let scale = math::max(1.0, inf_norm(&x));
        if res_norm <= opts.residual_target * scale && last_step <= opts.step_target * scale {
            return Some(NewtonOutcome { x, residual: res_norm, last_step });
        }
        jac_work.copy_from_slice(&jac);
        for i in 0..n {
            rhs[i] = -r[i];
        }
        if !solve_linear(&mut jac_work, &mut rhs, n) {
            return None;
        }
        // damped update: halve while the residual increases or the iterate
        // leaves the admissible box
        let mut damping = 1.0f64;
        let mut accepted = false;
        for _ in 0..40 {
            let mut candidate = x.clone();
            for i in 0..n {
                candidate[i] = x[i] + damping * rhs[i];
            }
            let inside = candidate
                .iter()
                .all(|&c| c > opts.clamp.0 && c < opts.clamp.1 && c.is_finite());
            if inside {
                let mut r_new = vec![0.0; n];
                let mut jac_new = vec![0.0; n * n];
                system(&candidate, &mut r_new, &mut jac_new);
                let new_norm = inf_norm(&r_new);
                if new_norm.is_finite() && (new_norm < res_norm || res_norm == 0.0) {
                    last_step = damping * inf_norm(&rhs);
                    x = candidate;
                    r = r_new;
                    jac = jac_new;
                    res_norm = new_norm;
                    accepted = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !accepted {
            // no productive step left; report the point if it already converged
            let scale = math::max(1.0, inf_norm(&x));
            if res_norm <= opts.residual_target * scale {
                return Some(NewtonOutcome { x, residual: res_norm, last_step });
            }
            return None;
        }
    }
    let scale = math::max(1.0, inf_norm(&x));
    if res_norm <= opts.residual_target * scale && last_step <= opts.step_target * scale {
        return Some(NewtonOutcome { x, residual: res_norm, last_step });
    }
    None
}

/// Collapses clusters of near-coincident root candidates around degenerate
/// roots. At a bifurcation the residual is cubically flat, so stalled
/// Newton runs deposit many candidates inside the flat region; two
/// candidates are the same root exactly when the system stays satisfied
/// midway between them. Each cluster is replaced by its centroid.
/// `radius_rel` bounds how far genuine distinct roots may sit: pairs
/// farther apart are never tested, so well-separated roots are untouched.
pub(crate) fn collapse_degenerate_clusters<F>(
    points: Vec<Vec<f64>>,
    radius_rel: f64,
    residual_tol: f64,
    residual: F,
) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let n = points.len();
    if n <= 1 {
        return points;
    }
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut root = i;
        while label[root] != root {
            root = label[root];
        }
        let mut cur = i;
        while label[cur] != root {
            let next = label[cur];
            label[cur] = root;
            cur = next;
        }
        root
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut scale = 1.0f64;
            let mut dist = 0.0f64;
            for (a, b) in points[i].iter().zip(points[j].iter()) {
                scale = math::max(scale, math::max(math::abs(*a), math::abs(*b)));
                dist = math::max(dist, math::abs(a - b));
            }
            if dist > radius_rel * scale {
                continue;
            }
            let mid: Vec<f64> = points[i]
                .iter()
                .zip(points[j].iter())
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            if residual(&mid) <= residual_tol {
                let (ri, rj) = (find(&mut label, i), find(&mut label, j));
                if ri != rj {
                    label[rj.max(ri)] = rj.min(ri);
                }
            }
        }
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for i in 0..n {
        let root = find(&mut label, i);
        if seen.contains(&root) {
            continue;
        }
        seen.push(root);
        let members: Vec<&Vec<f64>> = (0..n)
            .filter(|&j| find(&mut label, j) == root)
            .map(|j| &points[j])
            .collect();
        let dim = members[0].len();
        let mut centroid = vec![0.0f64; dim];
        for m in &members {
            for (c, v) in centroid.iter_mut().zip(m.iter()) {
                *c += v;
            }
        }
        for c in centroid.iter_mut() {
            *c /= members.len() as f64;
        }
        out.push(centroid);
    }
    out
}

/// Deduplicates points under a relative sup-norm tolerance, keeping first
/// occurrences (input order decides the representative).
pub(crate) fn dedup_points(points: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    'outer: for p in points {
        for q in &kept {
            let mut close = true;
            for (a, b) in p.iter().zip(q.iter()) {
                let scale = math::max(1.0, math::max(math::abs(*a), math::abs(*b)));
                if math::abs(a - b) > tol * scale {
                    close = false;
                    break;
                }
            }
            if close {
                continue 'outer;
            }
        }
        kept.push(p);
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let root = bisect(|x| x * x - 2.0, 0.0, 2.0);
        assert!((root - 2.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sign_changes_on_cubic() {
        let grid: Vec<f64> = (0..200).map(|i| 0.05 + i as f64 * 0.05).collect();
        // roots at 1, 2, 5
        let f = |x: f64| (x - 1.0) * (x - 2.0) * (x - 5.0);
        let roots = sign_change_roots(f, &grid);
        assert_eq!(roots.len(), 3);
        assert!((roots[0] - 1.0).abs() < 1e-12);
        assert!((roots[1] - 2.0).abs() < 1e-12);
        assert!((roots[2] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn newton_solves_coupled_system() {
        // x^2 + y^2 = 5, x y = 2 -> (2, 1) and (1, 2) in the positive quadrant
        let system = |p: &[f64], r: &mut [f64], j: &mut [f64]| {
            r[0] = p[0] * p[0] + p[1] * p[1] - 5.0;
            r[1] = p[0] * p[1] - 2.0;
            j[0] = 2.0 * p[0];
            j[1] = 2.0 * p[1];
            j[2] = p[1];
            j[3] = p[0];
        };
        let out = newton(&system, &[1.8, 0.7], &NewtonOptions::default()).unwrap();
        assert!((out.x[0] - 2.0).abs() < 1e-12);
        assert!((out.x[1] - 1.0).abs() < 1e-12);
        assert!(out.residual < 1e-12);
    }

    #[test]
    fn dedup_keeps_distinct_roots() {
        let pts = vec![
            vec![1.0, 2.0],
            vec![1.0 + 1e-9, 2.0 - 1e-9],
            vec![1.001, 2.0],
        ];
        let kept = dedup_points(pts, 1e-7);
        assert_eq!(kept.len(), 2);
    }
}
