//! Constraint graphs on the spin values, admissibility, and activities.
//!
//! A configuration is admissible when every nearest-neighbour pair of spins
//! is an edge (or loop) of the constraint graph. The four named three-state
//! graphs are built in; arbitrary graphs come from their adjacency matrices.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::error::{Error, Result};
use crate::tree::TreeShape;

/// Spin value at a site; `0` is the vacant state.
pub type State = u8;

/// The four fertile three-state graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Wrench,
    Wand,
    Hinge,
    Pipe,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [Builtin::Wrench, Builtin::Wand, Builtin::Hinge, Builtin::Pipe];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Wrench => "wrench",
            Builtin::Wand => "wand",
            Builtin::Hinge => "hinge",
            Builtin::Pipe => "pipe",
        }
    }

    fn rows(self) -> [[u8; 3]; 3] {
        match self {
            // edges {0,1},{0,2}; loops at 0 and 1
            Builtin::Wrench => [[1, 1, 1], [1, 1, 0], [1, 0, 0]],
            // edges {0,1},{0,2}; loops at 1 and 2
            Builtin::Wand => [[0, 1, 1], [1, 1, 0], [1, 0, 1]],
            // edges {0,1},{0,2}; loops at 0, 1 and 2
            Builtin::Hinge => [[1, 1, 1], [1, 1, 0], [1, 0, 1]],
            // edges {0,1},{1,2}; loop at 0
            Builtin::Pipe => [[1, 1, 0], [1, 0, 1], [0, 1, 0]],
        }
    }
}

impl core::str::FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wrench" => Ok(Builtin::Wrench),
            "wand" => Ok(Builtin::Wand),
            "hinge" => Ok(Builtin::Hinge),
            "pipe" => Ok(Builtin::Pipe),
            other => Err(Error::InvalidInput(format!(
                "unknown model '{other}' (expected wrench, wand, hinge or pipe)"
            ))),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Symmetric 0/1 adjacency over states `0..=q`, loops allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintGraph {
    q: usize,
    adj: Vec<u8>,
    name: Option<String>,
}

impl ConstraintGraph {
    /// Builds a graph from adjacency rows, validating symmetry and that no
    /// state is globally forbidden (every row carries at least one 1).
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self> {
        let states = rows.len();
        if states < 2 {
            return Err(Error::InvalidGraph(format!(
                "need at least 2 states, got {states}"
            )));
        }
        let mut adj = vec![0u8; states * states];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != states {
                return Err(Error::InvalidGraph(format!(
                    "row {i} has {} entries, expected {states}",
                    row.len()
                )));
            }
            let mut any = false;
            for (j, &e) in row.iter().enumerate() {
                if e > 1 {
                    return Err(Error::InvalidGraph(format!(
                        "entry ({i},{j}) = {e}, adjacency must be 0 or 1"
                    )));
                }
                any |= e == 1;
                adj[i * states + j] = e;
            }
            if !any {
                return Err(Error::InvalidGraph(format!(
                    "state {i} has no admissible neighbour"
                )));
            }
        }
        for i in 0..states {
            for j in 0..i {
                if adj[i * states + j] != adj[j * states + i] {
                    return Err(Error::InvalidGraph(format!(
                        "adjacency not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { q: states - 1, adj, name: None })
    }

    pub fn builtin(which: Builtin) -> Self {
        let rows = which.rows().iter().map(|r| r.to_vec()).collect();
        let mut g = Self::new(rows).expect("builtin adjacency is valid");
        g.name = Some(String::from(which.name()));
        g
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = Some(String::from(name));
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Number of occupied states; spins range over `0..=q`.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn states(&self) -> usize {
        self.q + 1
    }

    /// Adjacency entry as a float coefficient.
    pub fn a(&self, i: usize, j: usize) -> f64 {
        f64::from(self.adj[i * self.states() + j])
    }

    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.states() + j] == 1
    }

    pub fn adjacency_rows(&self) -> Vec<Vec<u8>> {
        (0..self.states())
            .map(|i| self.adj[i * self.states()..(i + 1) * self.states()].to_vec())
            .collect()
    }
}

/// True iff the states `i`, `j` may sit on the two ends of an edge.
pub fn is_admissible_pair(g: &ConstraintGraph, i: State, j: State) -> Result<bool> {
    let (i, j) = (usize::from(i), usize::from(j));
    if i >= g.states() || j >= g.states() {
        return Err(Error::InvalidInput(format!(
            "state out of range: ({i},{j}) with q = {}",
            g.q()
        )));
    }
    Ok(g.allowed(i, j))
}

/// True iff every parent-child edge of the depth-`n` tree carries an
/// admissible pair. `cfg` assigns a state to every vertex in layer order.
pub fn is_admissible_config(g: &ConstraintGraph, shape: &TreeShape, cfg: &[State]) -> Result<bool> {
    let count = shape.vertex_count()?;
    if cfg.len() != count {
        return Err(Error::InvalidInput(format!(
            "configuration has {} entries, tree has {count} vertices",
            cfg.len()
        )));
    }
    for (i, &s) in cfg.iter().enumerate() {
        if usize::from(s) >= g.states() {
            return Err(Error::InvalidInput(format!(
                "state {s} at vertex {i} out of range (q = {})",
                g.q()
            )));
        }
    }
    for v in 0..count {
        for c in shape.children_of(v)? {
            if !g.allowed(usize::from(cfg[v]), usize::from(cfg[c])) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Per-state activities; `lam[0]` weights the vacant state.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityVector {
    lam: Vec<f64>,
}

impl ActivityVector {
    pub fn new(lam: Vec<f64>) -> Result<Self> {
        if lam.is_empty() {
            return Err(Error::InvalidInput(String::from("empty activity vector")));
        }
        if lam.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput(String::from(
                "activities must be strictly positive and finite",
            )));
        }
        Ok(Self { lam })
    }

    /// The three-state setting used throughout: `(1, lambda, lambda)`.
    pub fn canonical(lambda: f64) -> Result<Self> {
        Self::new(vec![1.0, lambda, lambda])
    }

    pub fn len(&self) -> usize {
        self.lam.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lam.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.lam[i]
    }

    /// `lam[j] / lam[0]`, the ratio entering the recursion.
    pub fn ratio(&self, j: usize) -> f64 {
        self.lam[j] / self.lam[0]
    }
}
