//! JSON instance files.
//!
//! ```json
//! { "n": 2, "d": 2, "edges": [[0, 1, 1.0]],
//!   "terms": { "0,1": [[re, im], ...] }, "meta": { "family": "ring", "seed": 7 } }
//! ```
//!
//! Edge weights are the combined mass of both orientations and sum to one.
//! Floats are written in shortest round-trip form, so save/load is bit-exact.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::graph::InteractionGraph;
use super::instance::{HamiltonianInstance, InstanceMeta};
use crate::scalar::C;
use crate::{Error, Matrix, NumericPolicy, Result};

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    d: usize,
    edges: Vec<(usize, usize, f64)>,
    terms: BTreeMap<String, Vec<[f64; 2]>>,
    meta: InstanceMeta,
}

impl HamiltonianInstance {
    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            n: self.n(),
            d: self.d(),
            edges: self.graph().edges().iter().map(|e| (e.i, e.j, e.weight)).collect(),
            terms: self
                .terms()
                .iter()
                .map(|(&(i, j), m)| (format!("{i},{j}"), m.as_slice().iter().map(|z| [z.re, z.im]).collect()))
                .collect(),
            meta: self.meta().clone(),
        };
        serde_json::to_string(&file).expect("instance serialises")
    }

    pub fn from_json(text: &str, policy: &NumericPolicy) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        let graph = InteractionGraph::from_normalized_edges(file.n, &file.edges)?;
        let dd = file.d * file.d;
        let mut terms = BTreeMap::new();
        for (key, entries) in file.terms {
            let (i, j) = key
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
                .ok_or_else(|| Error::InvalidSpec(format!("bad term key '{key}'")))?;
            if entries.len() != dd * dd {
                return Err(Error::DimensionMismatch(format!("term '{key}' has {} entries, expected {}", entries.len(), dd * dd)));
            }
            let data = entries.into_iter().map(|[re, im]| C::new(re, im)).collect();
            terms.insert((i, j), Matrix::from_vec(dd, dd, data)?);
        }
        HamiltonianInstance::new(file.d, graph, terms, file.meta, policy)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path, policy: &NumericPolicy) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?, policy)
    }
}
