//! Cayley-tree addressing and the encoding of infinite paths by t in [0,1].
//!
//! Vertices are indexed in layer order (generation-major, digit order inside
//! a generation). The root has `k+1` direct successors, every other vertex
//! has `k`. Addresses are digit strings: the first digit picks one of the
//! root's `k+1` children, later digits one of `k`.

use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::math;

const VERTEX_LIMIT: usize = usize::MAX / 64;

/// Branching order and truncation depth of the rooted tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeShape {
    pub k: usize,
    pub n: usize,
}

impl TreeShape {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidInput(format!("order k must be >= 1, got {k}")));
        }
        Ok(Self { k, n })
    }

    /// |W_m|: 1 for the root layer, then (k+1) k^(m-1).
    pub fn layer_size(&self, m: usize) -> Result<usize> {
        if m == 0 {
            return Ok(1);
        }
        let mut size: u128 = (self.k as u128) + 1;
        for _ in 1..m {
            size = size.saturating_mul(self.k as u128);
        }
        if size > VERTEX_LIMIT as u128 {
            return Err(Error::TooLarge { vertices: usize::MAX, limit: VERTEX_LIMIT });
        }
        Ok(size as usize)
    }

    /// Index of the first vertex of layer `m`.
    pub fn layer_offset(&self, m: usize) -> Result<usize> {
        let mut total: u128 = 0;
        for j in 0..m {
            total += self.layer_size(j)? as u128;
            if total > VERTEX_LIMIT as u128 {
                return Err(Error::TooLarge { vertices: usize::MAX, limit: VERTEX_LIMIT });
            }
        }
        Ok(total as usize)
    }

    /// |V_n|.
    pub fn vertex_count(&self) -> Result<usize> {
        self.layer_offset(self.n + 1)
    }

    pub fn layer_range(&self, m: usize) -> Result<Range<usize>> {
        let lo = self.layer_offset(m)?;
        Ok(lo..lo + self.layer_size(m)?)
    }

    /// Generation of a vertex index.
    pub fn layer_of(&self, v: usize) -> Result<usize> {
        let mut m = 0;
        let mut offset = 0usize;
        loop {
            let size = self.layer_size(m)?;
            if v < offset + size {
                return Ok(m);
            }
            offset += size;
            m += 1;
            if m > self.n {
                return Err(Error::InvalidInput(format!("vertex index {v} outside V_n")));
            }
        }
    }

    /// Global indices of the direct successors; empty at the boundary layer.
    pub fn children_of(&self, v: usize) -> Result<Range<usize>> {
        let m = self.layer_of(v)?;
        if m == self.n {
            return Ok(0..0);
        }
        let next = self.layer_offset(m + 1)?;
        if v == 0 {
            return Ok(next..next + self.k + 1);
        }
        let rank = v - self.layer_offset(m)?;
        Ok(next + rank * self.k..next + (rank + 1) * self.k)
    }

    pub fn parent_of(&self, v: usize) -> Result<Option<usize>> {
        if v == 0 {
            return Ok(None);
        }
        let m = self.layer_of(v)?;
        let rank = v - self.layer_offset(m)?;
        if m == 1 {
            return Ok(Some(0));
        }
        Ok(Some(self.layer_offset(m - 1)? + rank / self.k))
    }

    /// Digit address of a vertex index.
    pub fn address(&self, v: usize) -> Result<VertexAddress> {
        let m = self.layer_of(v)?;
        let mut rank = v - self.layer_offset(m)?;
        if m == 0 {
            return Ok(VertexAddress::root());
        }
        let mut digits = vec![0u32; m];
        for i in (1..m).rev() {
            digits[i] = (rank % self.k) as u32;
            rank /= self.k;
        }
        digits[0] = rank as u32;
        Ok(VertexAddress(digits))
    }

    /// Vertex index of a digit address.
    pub fn index_of(&self, addr: &VertexAddress) -> Result<usize> {
        let m = addr.generation();
        if m > self.n {
            return Err(Error::InvalidInput(format!(
                "address {addr} deeper than tree depth {}",
                self.n
            )));
        }
        if m == 0 {
            return Ok(0);
        }
        let d0 = addr.0[0] as usize;
        if d0 > self.k {
            return Err(Error::InvalidInput(format!("first digit {d0} > k = {}", self.k)));
        }
        let mut rank = d0;
        for &d in &addr.0[1..] {
            let d = d as usize;
            if d >= self.k {
                return Err(Error::InvalidInput(format!("digit {d} >= k = {}", self.k)));
            }
            rank = rank * self.k + d;
        }
        Ok(self.layer_offset(m)? + rank)
    }
}

/// Digit path from the root; the empty address is the root itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexAddress(pub Vec<u32>);

impl VertexAddress {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn generation(&self) -> usize {
        self.0.len()
    }

    pub fn child(&self, digit: u32) -> Self {
        let mut d = self.0.clone();
        d.push(digit);
        Self(d)
    }

    pub fn digits(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Display for VertexAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("\u{3b5}"); // ε for the root
        }
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Direct successors of `x`, in digit order; empty at depth `n`.
pub fn successors(shape: &TreeShape, x: &VertexAddress) -> Vec<VertexAddress> {
    if x.generation() >= shape.n {
        return Vec::new();
    }
    let width = if x.generation() == 0 { shape.k + 1 } else { shape.k };
    (0..width as u32).map(|d| x.child(d)).collect()
}

/// Infinite path encoded by a real t in [0,1]; the first branch choice is
/// the base-(k+1) digit of t, later choices its base-k digits. Ambiguous
/// (rational) t take the terminating expansion; t=0 is the all-zero path
/// and t=1 the all-max path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCode {
    t: f64,
}

impl PathCode {
    pub fn new(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidInput(format!("path parameter t = {t} outside [0,1]")));
        }
        Ok(Self { t })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// First `depth` branch choices of the encoded path.
    pub fn digits(&self, k: usize, depth: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(depth);
        if depth == 0 {
            return out;
        }
        let first_base = (k + 1) as f64;
        let mut d = math::floor(self.t * first_base);
        if d > k as f64 {
            d = k as f64;
        }
        let mut r = self.t * first_base - d;
        out.push(d as u32);
        let base = k as f64;
        for _ in 1..depth {
            let mut d = math::floor(r * base);
            if d > (k - 1) as f64 {
                d = (k - 1) as f64;
            }
            r = r * base - d;
            out.push(d as u32);
        }
        out
    }
}

/// Which side of the path a vertex falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitClass {
    OnPath,
    T1,
    T2,
}

impl SplitClass {
    pub fn tag(self) -> &'static str {
        match self {
            SplitClass::OnPath => "on_path",
            SplitClass::T1 => "t1",
            SplitClass::T2 => "t2",
        }
    }
}

/// Classifies `x` against the path: `OnPath` if `x` is a prefix of the path,
/// otherwise by comparing digits at the first divergence (smaller digit side
/// is `T1`, larger is `T2`).
pub fn split_assign(shape: &TreeShape, path: &PathCode, x: &VertexAddress) -> SplitClass {
    let m = x.generation();
    if m == 0 {
        return SplitClass::OnPath;
    }
    let pd = path.digits(shape.k, m);
    for (xi, pi) in x.digits().iter().zip(pd.iter()) {
        if xi < pi {
            return SplitClass::T1;
        }
        if xi > pi {
            return SplitClass::T2;
        }
    }
    SplitClass::OnPath
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn successor_counts() {
        let shape = TreeShape::new(2, 3).unwrap();
        let root = VertexAddress::root();
        let kids = successors(&shape, &root);
        assert_eq!(kids.len(), 3);
        assert_eq!(kids[0].digits(), &[0]);
        assert_eq!(kids[2].digits(), &[2]);
        let x = VertexAddress(vec![0]);
        let kids = successors(&shape, &x);
        assert_eq!(kids.len(), 2);
        assert_eq!(kids[1].digits(), &[0, 1]);

        let line = TreeShape::new(1, 3).unwrap();
        let kids = successors(&line, &VertexAddress(vec![0]));
        assert_eq!(kids.len(), 1);
        assert_eq!(kids[0].digits(), &[0, 0]);

        // boundary layer has none
        let deep = VertexAddress(vec![0, 1, 0]);
        assert!(successors(&shape, &deep).is_empty());
    }

    #[test]
    fn layer_sizes_and_counts() {
        for k in 1..=3usize {
            for n in 0..=4usize {
                let shape = TreeShape::new(k, n).unwrap();
                // direct enumeration of addresses, layer by layer
                let mut per_layer = vec![1usize];
                for m in 1..=n {
                    let prev = per_layer[m - 1];
                    per_layer.push(if m == 1 { k + 1 } else { prev * k });
                }
                let total: usize = per_layer.iter().sum();
                assert_eq!(shape.vertex_count().unwrap(), total);
                for (m, &sz) in per_layer.iter().enumerate() {
                    assert_eq!(shape.layer_size(m).unwrap(), sz, "k={k} m={m}");
                }
            }
        }
    }

    #[test]
    fn index_address_roundtrip_and_children() {
        let shape = TreeShape::new(2, 3).unwrap();
        let count = shape.vertex_count().unwrap();
        assert_eq!(count, 1 + 3 + 6 + 12);
        for v in 0..count {
            let addr = shape.address(v).unwrap();
            assert_eq!(shape.index_of(&addr).unwrap(), v);
            for c in shape.children_of(v).unwrap() {
                assert_eq!(shape.parent_of(c).unwrap(), Some(v));
                let caddr = shape.address(c).unwrap();
                assert_eq!(&caddr.digits()[..addr.generation()], addr.digits());
            }
        }
    }

    #[test]
    fn path_digit_extremes() {
        let p0 = PathCode::new(0.0).unwrap();
        assert_eq!(p0.digits(2, 5), vec![0, 0, 0, 0, 0]);
        let p1 = PathCode::new(1.0).unwrap();
        assert_eq!(p1.digits(2, 5), vec![2, 1, 1, 1, 1]);
        let ph = PathCode::new(0.5).unwrap();
        assert_eq!(ph.digits(2, 4), vec![1, 1, 0, 0]);
        assert!(PathCode::new(1.5).is_err());
    }

    #[test]
    fn split_examples() {
        let shape = TreeShape::new(2, 4).unwrap();
        let p0 = PathCode::new(0.0).unwrap();
        let p1 = PathCode::new(1.0).unwrap();
        let ph = PathCode::new(0.5).unwrap();
        // all off-path vertices are T2 for t=0 and T1 for t=1
        for v in 1..shape.vertex_count().unwrap() {
            let addr = shape.address(v).unwrap();
            let s0 = split_assign(&shape, &p0, &addr);
            let s1 = split_assign(&shape, &p1, &addr);
            if s0 != SplitClass::OnPath {
                assert_eq!(s0, SplitClass::T2);
            }
            if s1 != SplitClass::OnPath {
                assert_eq!(s1, SplitClass::T1);
            }
        }
        assert_eq!(split_assign(&shape, &ph, &VertexAddress(vec![0])), SplitClass::T1);
        assert_eq!(split_assign(&shape, &ph, &VertexAddress(vec![1])), SplitClass::OnPath);
        assert_eq!(split_assign(&shape, &ph, &VertexAddress(vec![2])), SplitClass::T2);
    }

    #[test]
    fn split_partitions_off_path_vertices() {
        let shape = TreeShape::new(2, 4).unwrap();
        for t in [0.0, 0.125, 0.5, 0.8125, 1.0] {
            let p = PathCode::new(t).unwrap();
            let mut on = 0;
            for v in 0..shape.vertex_count().unwrap() {
                let addr = shape.address(v).unwrap();
                if split_assign(&shape, &p, &addr) == SplitClass::OnPath {
                    on += 1;
                }
            }
            assert_eq!(on, shape.n + 1, "one path vertex per generation, t={t}");
        }
    }

    #[test]
    fn address_display() {
        assert_eq!(VertexAddress::root().to_string(), "\u{3b5}");
        assert_eq!(VertexAddress(vec![2, 0, 1]).to_string(), "2.0.1");
    }
}
