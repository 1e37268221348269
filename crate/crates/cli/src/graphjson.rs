//! JSON description of arbitrary constraint graphs:
//! `{"q": int, "adj": [[0|1, ...], ...], "name": optional string}`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use treegibbs_core::ConstraintGraph;

use crate::CmdError;

#[derive(Debug, Serialize, Deserialize)]
pub struct GraphSpec {
    pub q: usize,
    pub adj: Vec<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl GraphSpec {
    pub fn into_graph(self) -> Result<ConstraintGraph, CmdError> {
        if self.adj.len() != self.q + 1 {
            return Err(CmdError::Usage(format!(
                "graph JSON has q = {} but {} adjacency rows",
                self.q,
                self.adj.len()
            )));
        }
        let g = ConstraintGraph::new(self.adj).map_err(crate::from_core)?;
        Ok(match self.name {
            Some(name) => g.with_name(&name),
            None => g,
        })
    }
}

pub fn load(path: &Path) -> Result<ConstraintGraph, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::Usage(format!("cannot read graph JSON {}: {e}", path.display())))?;
    let spec: GraphSpec = serde_json::from_str(&text)
        .map_err(|e| CmdError::Usage(format!("malformed graph JSON {}: {e}", path.display())))?;
    spec.into_graph()
}
