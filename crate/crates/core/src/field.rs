//! Per-vertex boundary fields.
//!
//! A `Field` stores one strictly positive vector of length `q` per vertex
//! (the vacant component is normalised to 1 and kept implicit). The same
//! container serves fields on a boundary layer W_n and on the whole of V_n;
//! entries are aligned with the owning vertex list in layer order.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    q: usize,
    data: Vec<f64>,
}

impl Field {
    /// Builds a field from flat per-vertex data (`vertices * q` entries).
    pub fn new(q: usize, data: Vec<f64>) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidInput(String::from("field needs q >= 1")));
        }
        if !data.len().is_multiple_of(q) {
            return Err(Error::InvalidInput(format!(
                "field data length {} not a multiple of q = {q}",
                data.len()
            )));
        }
        if data.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput(String::from(
                "field components must be strictly positive and finite",
            )));
        }
        Ok(Self { q, data })
    }

    /// Same positive vector at every vertex.
    pub fn constant(q: usize, vertices: usize, value: &[f64]) -> Result<Self> {
        if value.len() != q {
            return Err(Error::InvalidInput(format!(
                "constant value has {} components, expected {q}",
                value.len()
            )));
        }
        let mut data = Vec::with_capacity(vertices * q);
        for _ in 0..vertices {
            data.extend_from_slice(value);
        }
        Self::new(q, data)
    }

    pub fn zeros_unchecked(q: usize, vertices: usize) -> Self {
        Self { q, data: vec![0.0; vertices * q] }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of vertices carrying a vector.
    pub fn vertices(&self) -> usize {
        self.data.len() / self.q
    }

    pub fn get(&self, v: usize) -> &[f64] {
        &self.data[v * self.q..(v + 1) * self.q]
    }

    pub fn set(&mut self, v: usize, value: &[f64]) {
        self.data[v * self.q..(v + 1) * self.q].copy_from_slice(value);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sup-norm distance between log-fields, component- and vertex-wise.
    pub fn max_log_distance(&self, other: &Field) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        let mut worst = 0.0f64;
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            worst = math::max(worst, math::abs(math::ln(*a) - math::ln(*b)));
        }
        worst
    }

    /// Sup-norm distance on the raw components.
    pub fn max_distance(&self, other: &Field) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        let mut worst = 0.0f64;
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            worst = math::max(worst, math::abs(a - b));
        }
        worst
    }
}
