//! The compatibility recursion: one parent-from-children step, finite-tree
//! inward sweeps, the hinge log-field map and its contraction estimates.
//!
//! For a constraint graph with adjacency `a` and activities `lam`, the
//! parent field is
//!
//! ```text
//! z[j] = (lam[j]/lam[0]) * prod_y (a[j][0] + sum_i a[j][i] z[i,y])
//!                                / (a[0][0] + sum_i a[0][i] z[i,y])
//! ```
//!
//! over the direct successors `y`. A field on V_n is recursion-consistent
//! when every internal vertex equals the step applied to its children; the
//! root uses its `k+1` children, every other vertex `k`.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::graph::{ActivityVector, ConstraintGraph};
use crate::math;
use crate::tree::TreeShape;

/// Children counts at or above this switch the product into log space.
const LOG_SPACE_CHILDREN: usize = 20;

/// One parent-from-children step of the recursion.
pub fn step(g: &ConstraintGraph, lam: &ActivityVector, children: &[&[f64]]) -> Result<Vec<f64>> {
    let q = g.q();
    if lam.len() != q + 1 {
        return Err(Error::InvalidInput(format!(
            "activity vector has {} entries, graph has {} states",
            lam.len(),
            q + 1
        )));
    }
    if children.is_empty() {
        return Err(Error::InvalidInput(String::from("step needs at least one child")));
    }
    for (y, child) in children.iter().enumerate() {
        if child.len() != q {
            return Err(Error::InvalidInput(format!(
                "child {y} has {} components, expected {q}",
                child.len()
            )));
        }
        if child.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput(format!("child {y} has nonpositive components")));
        }
    }

    let log_space = children.len() >= LOG_SPACE_CHILDREN;
    let mut out = vec![0.0; q];
    for j in 1..=q {
        let mut prod = 1.0f64;
        let mut log_acc = 0.0f64;
        for (y, child) in children.iter().enumerate() {
            let mut num = g.a(j, 0);
            let mut den = g.a(0, 0);
            for (i, &zi) in child.iter().enumerate() {
                num += g.a(j, i + 1) * zi;
                den += g.a(0, i + 1) * zi;
            }
            if !(den > 0.0) {
                return Err(Error::SingularModel { child: y });
            }
            if log_space {
                log_acc += math::ln(num) - math::ln(den);
            } else {
                prod *= num / den;
            }
        }
        let factor = if log_space { math::exp(log_acc) } else { prod };
        out[j - 1] = lam.ratio(j) * factor;
    }
    Ok(out)
}

/// Leaf-to-root evaluation of the recursion from a boundary field on W_n.
///
/// Children are consumed in address order, so the reduction is
/// deterministic. Returns the field on all of V_n; the W_n layer is the
/// boundary itself.
pub fn inward_sweep(
    g: &ConstraintGraph,
    lam: &ActivityVector,
    shape: &TreeShape,
    boundary: &Field,
) -> Result<Field> {
    let q = g.q();
    if boundary.q() != q {
        return Err(Error::InvalidInput(format!(
            "boundary field has q = {}, graph needs {q}",
            boundary.q()
        )));
    }
    let w_n = shape.layer_size(shape.n)?;
    if boundary.vertices() != w_n {
        return Err(Error::InvalidInput(format!(
            "boundary has {} vertices, W_n has {w_n}",
            boundary.vertices()
        )));
    }
    let count = shape.vertex_count()?;
    let mut field = Field::zeros_unchecked(q, count);
    let w_n_offset = shape.layer_offset(shape.n)?;
    for i in 0..w_n {
        field.set(w_n_offset + i, boundary.get(i));
    }
    for m in (0..shape.n).rev() {
        for v in shape.layer_range(m)? {
            let kids = shape.children_of(v)?;
            let children: Vec<&[f64]> = kids.map(|c| field.get(c)).collect();
            let value = step(g, lam, &children)?;
            field.set(v, &value);
        }
    }
    Ok(field)
}

/// Log-field map of the three-state hinge model for a single child:
/// `F1 = ln((1+e^h1)/(1+e^h1+e^h2))`, `F2` with the roles swapped.
/// Computed via softplus/log-sum-exp so large |h| cannot overflow.
pub fn hinge_log_map(h: [f64; 2]) -> [f64; 2] {
    let lse = math::log_sum_1ab(h[0], h[1]);
    [math::softplus(h[0]) - lse, math::softplus(h[1]) - lse]
}

/// Translation-invariant form of the hinge recursion in log coordinates:
/// `h -> (ln lam, ln lam) + k * hinge_log_map(h)`.
pub fn hinge_log_fixed_point_map(lam: f64, k: usize, h: [f64; 2]) -> [f64; 2] {
    let f = hinge_log_map(h);
    let ll = math::ln(lam);
    [ll + k as f64 * f[0], ll + k as f64 * f[1]]
}

/// Determinant of the linearised coincidence system at `l`:
/// `-(1 + e^l1 + e^l2)`, always below -1, which makes the log-field map
/// injective.
pub fn injectivity_determinant(l: [f64; 2]) -> f64 {
    -(1.0 + math::exp(l[0]) + math::exp(l[1]))
}

/// The closed box `[ln z-, -ln z-]^2` on which the contraction estimates hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzBox {
    pub lower: f64,
    pub upper: f64,
}

impl LipschitzBox {
    pub fn new(z_minus: f64) -> Result<Self> {
        if !(z_minus > 0.0 && z_minus < 1.0) {
            return Err(Error::InvalidInput(format!(
                "LipschitzBox needs z- in (0,1), got {z_minus}"
            )));
        }
        let l = math::ln(z_minus);
        Ok(Self { lower: l, upper: -l })
    }

    pub fn contains(&self, h: [f64; 2], slack: f64) -> bool {
        h.iter()
            .all(|&x| x >= self.lower - slack && x <= self.upper + slack)
    }

    /// Same box expressed on the z scale: `[z-, 1/z-]`.
    pub fn z_bounds(&self) -> (f64, f64) {
        (math::exp(self.lower), math::exp(self.upper))
    }
}

/// Sup-norm Lipschitz bound of the hinge log-field map on the box:
/// `2 / (1 + z- + z-^2)`. Below 1 exactly when `z- > (sqrt(5)-1)/2`.
pub fn lipschitz_constant(z_minus: f64) -> Result<f64> {
    if !(z_minus > 0.0 && z_minus < 1.0) {
        return Err(Error::InvalidInput(format!(
            "lipschitz_constant needs z- in (0,1), got {z_minus}"
        )));
    }
    Ok(2.0 / (1.0 + z_minus + z_minus * z_minus))
}

/// Bound on |dF1/dh1| (and |dF2/dh2|) over the box: `1/(sqrt(z-+1)+sqrt(z-))^2`.
pub fn diagonal_partial_bound(z_minus: f64) -> Result<f64> {
    if !(z_minus > 0.0 && z_minus < 1.0) {
        return Err(Error::InvalidInput(format!("needs z- in (0,1), got {z_minus}")));
    }
    let s = math::sqrt(z_minus + 1.0) + math::sqrt(z_minus);
    Ok(1.0 / (s * s))
}

/// Bound on |dF1/dh2| (and |dF2/dh1|) over the box: `1/(1+z-+z-^2)`.
pub fn cross_partial_bound(z_minus: f64) -> Result<f64> {
    if !(z_minus > 0.0 && z_minus < 1.0) {
        return Err(Error::InvalidInput(format!("needs z- in (0,1), got {z_minus}")));
    }
    Ok(1.0 / (1.0 + z_minus + z_minus * z_minus))
}
