//! Model persistence.
//!
//! A model file is a self-describing JSON record of the grammar, depth,
//! weight values, and pruned mask. Weights round-trip bit-exactly: the
//! serializer emits shortest-round-trip decimal representations, which parse
//! back to the identical f64.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::grammar::GrammarSpec;
use crate::graph::{GraphError, ProgramGraph, WeightStore};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum ModelError {
    Io(std::io::Error),
    Parse(serde_json::Error),
    SchemaVersion { found: u32, expected: u32 },
    /// Weight/mask arrays disagree with each other or with the architecture.
    Inconsistent(String),
    Graph(GraphError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Io(e) => write!(f, "model I/O error: {e}"),
            ModelError::Parse(e) => write!(f, "model parse error: {e}"),
            ModelError::SchemaVersion { found, expected } => {
                write!(f, "unsupported model schema version {found} (expected {expected})")
            }
            ModelError::Inconsistent(msg) => write!(f, "inconsistent model file: {msg}"),
            ModelError::Graph(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ModelError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ModelError::Io(e) => Some(e),
            ModelError::Parse(e) => Some(e),
            ModelError::Graph(e) => Some(e),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub grammar: GrammarSpec,
    pub depth: u32,
    pub weights: Vec<f64>,
    pub pruned: Vec<bool>,
}

impl ModelFile {
    pub fn from_parts(graph: &ProgramGraph, weights: &WeightStore, config_hash: Option<String>) -> Self {
        assert_eq!(graph.weight_count(), weights.len());
        ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            config_hash,
            grammar: graph.spec().clone(),
            depth: graph.depth(),
            weights: weights.values().to_vec(),
            pruned: weights.pruned_mask().to_vec(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let model: ModelFile = serde_json::from_str(text).map_err(ModelError::Parse)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        fs::write(path, self.to_json() + "\n").map_err(ModelError::Io)
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = fs::read_to_string(path).map_err(ModelError::Io)?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(ModelError::SchemaVersion {
                found: self.schema_version,
                expected: MODEL_SCHEMA_VERSION,
            });
        }
        if self.weights.len() != self.pruned.len() {
            return Err(ModelError::Inconsistent(format!(
                "{} weights but {} mask entries",
                self.weights.len(),
                self.pruned.len()
            )));
        }
        for (i, (&v, &p)) in self.weights.iter().zip(&self.pruned).enumerate() {
            if p && v != 0.0 {
                return Err(ModelError::Inconsistent(format!(
                    "pruned weight {i} has nonzero value {v}"
                )));
            }
        }
        Ok(())
    }

    /// Rebuilds the architecture and weight store described by this file.
    pub fn instantiate(&self) -> Result<(ProgramGraph, WeightStore), ModelError> {
        let graph = ProgramGraph::build(&self.grammar, self.depth).map_err(ModelError::Graph)?;
        if graph.weight_count() != self.weights.len() {
            return Err(ModelError::Inconsistent(format!(
                "architecture has {} weights but the file stores {}",
                graph.weight_count(),
                self.weights.len()
            )));
        }
        Ok((graph, WeightStore::from_parts(self.weights.clone(), self.pruned.clone())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{GrammarSpec, OperatorKind};

    fn small_graph() -> ProgramGraph {
        let spec = GrammarSpec::new(
            vec![OperatorKind::Sin, OperatorKind::Exp],
            vec![OperatorKind::Multiply],
            vec!["x".into(), "t".into()],
            true,
        )
        .unwrap();
        ProgramGraph::build(&spec, 1).unwrap()
    }

    #[test]
    fn weights_round_trip_bit_exactly() {
        let g = small_graph();
        let mut w = WeightStore::zeros(g.weight_count());
        // Awkward values: subnormal, negative zero, long fractions.
        let samples = [1.0 / 3.0, -0.0, 5e-324, 0.1 + 0.2, -1.2345678901234567e-7, 2.0f64.sqrt()];
        for i in 0..w.len() {
            w.set(i, samples[i % samples.len()]);
        }
        w.prune(3);
        let file = ModelFile::from_parts(&g, &w, Some("deadbeef".into()));
        let back = ModelFile::from_json(&file.to_json()).unwrap();
        let (_, w2) = back.instantiate().unwrap();
        for i in 0..w.len() {
            assert_eq!(w.value(i).to_bits(), w2.value(i).to_bits(), "weight {i}");
            assert_eq!(w.is_pruned(i), w2.is_pruned(i));
        }
    }

    #[test]
    fn rejects_inconsistent_mask() {
        let g = small_graph();
        let w = WeightStore::zeros(g.weight_count());
        let mut file = ModelFile::from_parts(&g, &w, None);
        file.pruned[0] = true;
        file.weights[0] = 0.5;
        let err = ModelFile::from_json(&file.to_json()).unwrap_err();
        assert!(matches!(err, ModelError::Inconsistent(_)));
    }

    #[test]
    fn rejects_wrong_schema_version() {
        let g = small_graph();
        let w = WeightStore::zeros(g.weight_count());
        let mut file = ModelFile::from_parts(&g, &w, None);
        file.schema_version = 99;
        assert!(matches!(
            ModelFile::from_json(&file.to_json()),
            Err(ModelError::SchemaVersion { found: 99, .. })
        ));
    }

    #[test]
    fn rejects_weight_count_mismatch() {
        let g = small_graph();
        let w = WeightStore::zeros(g.weight_count());
        let mut file = ModelFile::from_parts(&g, &w, None);
        file.weights.push(0.0);
        file.pruned.push(false);
        assert!(matches!(file.instantiate(), Err(ModelError::Inconsistent(_))));
    }
}
