//! Path-indexed boundary fields for the hinge model at k = 2: a two-valued
//! boundary law split along an infinite path, swept inward and deepened
//! until the field on V_n stabilises. Inside the contraction window the
//! deepening is a contraction, so the limit exists and is unique; distinct
//! path parameters produce distinct fields.
//!
//! Off-path subtrees are one-sided, so their boundary is a constant corner
//! value, and the corners are exact fixed points of the one-vertex step.
//! The sweep therefore collapses to a recursion along the path itself,
//! which is what makes deepening by hundreds of generations affordable;
//! agreement with the literal full-tree sweep is covered by tests.

use alloc::vec::Vec;
use alloc::{format, vec};

use crate::envelope::z_minus_for_window;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::graph::{ActivityVector, Builtin, ConstraintGraph};
use crate::math;
use crate::recursion::{lipschitz_constant, step};
use crate::roots;
use crate::tree::{split_assign, PathCode, SplitClass, TreeShape, VertexAddress};

/// Lower edge of the contraction window (the TI transition point).
pub const WINDOW_LOWER: f64 = 2.25;

/// The open activity interval on which the boundary-law contraction holds:
/// the envelope bound `z-` must exceed `(sqrt(5)-1)/2`, which pins the upper
/// edge by bisection on the monotone map from activity to `z-`.
pub fn contraction_window() -> (f64, f64) {
    let target = (math::sqrt(5.0) - 1.0) / 2.0;
    let upper = roots::bisect(
        |lam| z_minus_for_window(lam) - target,
        WINDOW_LOWER + 1e-9,
        3.0,
    );
    (WINDOW_LOWER, upper)
}

fn require_window(lam: f64) -> Result<f64> {
    let (lo, hi) = contraction_window();
    if !(lam > lo && lam < hi) {
        return Err(Error::InvalidInput(format!(
            "activity {lam} outside the contraction window ({lo}, {hi:.6})"
        )));
    }
    Ok(z_minus_for_window(lam))
}

/// The two extremal corner values of the boundary law, on the z scale.
/// The T1 side carries `(z-, 1/z-)`, the T2 side its swap; both are exact
/// TI fixed points of the k = 2 hinge recursion.
fn corners(z_minus: f64) -> ([f64; 2], [f64; 2]) {
    ([z_minus, 1.0 / z_minus], [1.0 / z_minus, z_minus])
}

/// Boundary field on W_n for the path-split law: T1-side vertices (and the
/// path vertex itself) take the T1 corner, T2-side vertices the other.
pub fn build_boundary(t: f64, lam: f64, shape: &TreeShape) -> Result<Field> {
    if shape.k != 2 {
        return Err(Error::InvalidInput(format!(
            "path fields are built for k = 2, got k = {}",
            shape.k
        )));
    }
    let zm = require_window(lam)?;
    let (c1, c2) = corners(zm);
    let path = PathCode::new(t)?;
    let w = shape.layer_size(shape.n)?;
    let offset = shape.layer_offset(shape.n)?;
    let mut data = Vec::with_capacity(w * 2);
    for i in 0..w {
        let addr = shape.address(offset + i)?;
        let value = match split_assign(shape, &path, &addr) {
            SplitClass::T2 => c2,
            _ => c1,
        };
        data.extend_from_slice(&value);
    }
    Field::new(2, data)
}

/// Field values along the path for a sweep truncated at `depth`: entry `m`
/// is the on-path vertex of generation `m`. The on-path boundary vertex
/// takes the T1 corner; off-path children resolve to their side's corner.
fn path_chain(
    g: &ConstraintGraph,
    act: &ActivityVector,
    digits: &[u32],
    c1: [f64; 2],
    c2: [f64; 2],
    depth: usize,
) -> Result<Vec<[f64; 2]>> {
    debug_assert!(digits.len() >= depth);
    let mut chain = vec![[0.0f64; 2]; depth + 1];
    chain[depth] = c1;
    for m in (0..depth).rev() {
        let pd = digits[m] as usize;
        let width = if m == 0 { 3 } else { 2 };
        let mut kids: Vec<[f64; 2]> = Vec::with_capacity(width);
        for d in 0..width {
            kids.push(if d == pd {
                chain[m + 1]
            } else if d < pd {
                c1
            } else {
                c2
            });
        }
        let slices: Vec<&[f64]> = kids.iter().map(|a| &a[..]).collect();
        let v = step(g, act, &slices)?;
        chain[m] = [v[0], v[1]];
    }
    Ok(chain)
}

fn materialize(
    shape: &TreeShape,
    path: &PathCode,
    chain: &[[f64; 2]],
    c1: [f64; 2],
    c2: [f64; 2],
) -> Result<Field> {
    let count = shape.vertex_count()?;
    let digits = path.digits(shape.k, shape.n);
    let mut data = Vec::with_capacity(count * 2);
    for v in 0..count {
        let addr = shape.address(v)?;
        let mut value = chain[addr.generation()];
        for (i, (&xd, &pd)) in addr.digits().iter().zip(digits.iter()).enumerate() {
            if xd != pd {
                value = if xd < pd { c1 } else { c2 };
                let _ = i;
                break;
            }
        }
        data.extend_from_slice(&value);
    }
    Field::new(2, data)
}

/// The field on V_n produced by a single inward sweep of the path boundary
/// placed on W_depth (`depth >= n`), restricted to V_n.
pub fn truncated_field(t: f64, lam: f64, n: usize, depth: usize) -> Result<Field> {
    if depth < n {
        return Err(Error::InvalidInput(format!("truncation {depth} below report depth {n}")));
    }
    let zm = require_window(lam)?;
    let (c1, c2) = corners(zm);
    let path = PathCode::new(t)?;
    let g = ConstraintGraph::builtin(Builtin::Hinge);
    let act = ActivityVector::canonical(lam)?;
    let digits = path.digits(2, depth.max(1));
    let chain = path_chain(&g, &act, &digits, c1, c2, depth)?;
    let shape = TreeShape::new(2, n)?;
    materialize(&shape, &path, &chain[..=n], c1, c2)
}

/// A converged (or diagnosed) path field on V_n.
#[derive(Debug, Clone, PartialEq)]
pub struct PathField {
    pub t: f64,
    pub lam: f64,
    pub n: usize,
    /// Field on V_n, z scale, vertex-aligned with `TreeShape::new(2, n)`.
    pub fields: Field,
    pub converged: bool,
    /// Last sup-norm change of the log-field on V_n between deepenings.
    pub sup_change: f64,
    /// Every recorded change, one per extra truncation depth.
    pub changes: Vec<f64>,
    /// Truncation depth the iteration stopped at.
    pub depth_reached: usize,
}

/// Truncation depth that guarantees `tol` under the window's contraction
/// rate: `n + ceil(ln tol / ln L)`.
pub fn default_max_depth(n: usize, lam: f64, tol: f64) -> Result<usize> {
    let zm = require_window(lam)?;
    let rate = lipschitz_constant(zm)?;
    if !(tol > 0.0) || !(rate < 1.0) {
        return Err(Error::InvalidInput(format!("bad tolerance {tol} or rate {rate}")));
    }
    let extra = (math::ln(tol) / math::ln(rate)) + 1.0;
    Ok(n + math::max(extra, 1.0) as usize)
}

/// Sweeps the path boundary inward from deeper and deeper truncations and
/// records the sup-norm log-field change on V_n per extra depth.
///
/// Convergence is certified through the contraction envelope, not the
/// observed changes: a deepening at depth d can move the field by at most
/// `diam * L^(d-n)` (boundary values live in the box, and each level
/// contracts by the Lipschitz constant L). Observed changes are not
/// monotone - a deepening along a maximal digit is nearly invisible and
/// later digits inject fresh changes - so stopping on one small observed
/// change would be unsound.
pub fn solve_path_field(t: f64, lam: f64, n: usize, max_depth: usize, tol: f64) -> Result<PathField> {
    if max_depth < n {
        return Err(Error::InvalidInput(format!(
            "max depth {max_depth} below report depth {n}"
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidInput(format!("negative tolerance {tol}")));
    }
    let zm = require_window(lam)?;
    let (c1, c2) = corners(zm);
    let rate = lipschitz_constant(zm)?;
    let diameter = -2.0 * math::ln(zm);
    let path = PathCode::new(t)?;
    let g = ConstraintGraph::builtin(Builtin::Hinge);
    let act = ActivityVector::canonical(lam)?;
    let digits = path.digits(2, max_depth.max(1));

    let mut chain = path_chain(&g, &act, &digits, c1, c2, n)?;
    let mut changes: Vec<f64> = Vec::new();
    let mut converged = diameter <= tol;
    let mut depth_reached = n;
    let mut envelope = diameter;
    for depth in n + 1..=max_depth {
        let next = path_chain(&g, &act, &digits, c1, c2, depth)?;
        let mut change = 0.0f64;
        for m in 0..=n {
            for c in 0..2 {
                change = math::max(
                    change,
                    math::abs(math::ln(next[m][c]) - math::ln(chain[m][c])),
                );
            }
        }
        changes.push(change);
        chain = next;
        depth_reached = depth;
        envelope *= rate;
        if envelope <= tol {
            converged = true;
            break;
        }
    }
    let shape = TreeShape::new(2, n)?;
    let fields = materialize(&shape, &path, &chain[..=n], c1, c2)?;
    let sup_change = changes.last().copied().unwrap_or(0.0);
    Ok(PathField { t, lam, n, fields, converged, sup_change, changes, depth_reached })
}

/// First breadth-first vertex (root excluded; the field proper lives on
/// V minus the root) at which the depth-`n` truncated fields of two path
/// parameters differ by more than `tol` in any log component. `None` means
/// the difference, if any, lives deeper than this truncation.
pub fn distinguish(
    t1: f64,
    t2: f64,
    lam: f64,
    n: usize,
    tol: f64,
) -> Result<Option<VertexAddress>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let fa = truncated_field(t1, lam, n, n)?;
    let fb = truncated_field(t2, lam, n, n)?;
    let shape = TreeShape::new(2, n)?;
    for v in 1..fa.vertices() {
        let a = fa.get(v);
        let b = fb.get(v);
        let gap = math::max(
            math::abs(math::ln(a[0]) - math::ln(b[0])),
            math::abs(math::ln(a[1]) - math::ln(b[1])),
        );
        if gap > tol {
            return Ok(Some(shape.address(v)?));
        }
    }
    Ok(None)
}
