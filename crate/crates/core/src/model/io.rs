//! JSON linkage description files.

use serde::{Deserialize, Serialize};

use super::LinkageSpec;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkageFile {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeEntry>,
    #[serde(default)]
    pub base: Vec<BaseEntry>,
    #[serde(default)]
    pub diagonals: Vec<DiagonalEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub a: String,
    pub b: String,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseEntry {
    pub vertex: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalEntry {
    pub a: String,
    pub b: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionFile {
    pub pieces: Vec<Vec<String>>,
    pub joints: Vec<Vec<String>>,
}

impl LinkageFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("linkage files always serialize")
    }

    /// Resolves vertex names. Structural problems other than unknown names
    /// are left for [`LinkageSpec::validate`].
    pub fn to_spec(&self) -> Result<LinkageSpec> {
        let mut spec = LinkageSpec::new(&self.vertices);
        for e in &self.edges {
            spec.add_edge(&e.a, &e.b, e.length)?;
        }
        for b in &self.base {
            spec.add_base(&b.vertex, b.x, b.y)?;
        }
        for d in &self.diagonals {
            spec.add_diagonal(&d.a, &d.b)?;
        }
        Ok(spec)
    }

    pub fn from_spec(spec: &LinkageSpec) -> Self {
        let name = |v: usize| spec.name(v).to_owned();
        Self {
            vertices: spec.vertices().to_vec(),
            edges: spec
                .edges()
                .iter()
                .map(|e| EdgeEntry {
                    a: name(e.a),
                    b: name(e.b),
                    length: e.length,
                })
                .collect(),
            base: spec
                .base()
                .iter()
                .map(|b| BaseEntry {
                    vertex: name(b.vertex),
                    x: b.position.x,
                    y: b.position.y,
                })
                .collect(),
            diagonals: spec
                .diagonals()
                .iter()
                .map(|d| DiagonalEntry {
                    a: name(d.a),
                    b: name(d.b),
                })
                .collect(),
            decomposition: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUAD: &str = r#"{
        "vertices": ["A", "B", "C", "D"],
        "edges": [
            {"a": "A", "b": "B", "length": 1.0},
            {"a": "B", "b": "C", "length": 2.0},
            {"a": "C", "b": "D", "length": 2.0},
            {"a": "D", "b": "A", "length": 2.0}
        ],
        "base": [],
        "diagonals": [{"a": "A", "b": "C"}]
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let file = LinkageFile::parse(QUAD).unwrap();
        let spec = file.to_spec().unwrap();
        assert_eq!(spec.edges().len(), 4);
        assert_eq!(spec.diagonals().len(), 1);
        assert_eq!(LinkageFile::from_spec(&spec), file);
        assert_eq!(LinkageFile::parse(&file.to_json()).unwrap(), file);
    }

    #[test]
    fn unknown_keys_rejected_with_position() {
        let text = QUAD.replace("\"base\"", "\"bases\"");
        let err = LinkageFile::parse(&text).unwrap_err().to_string();
        assert!(err.contains("line 9 column 15"), "{err}");
        assert!(err.contains("bases"), "{err}");
    }

    #[test]
    fn unknown_vertex_name() {
        let text = QUAD.replace("{\"a\": \"A\", \"b\": \"C\"}", "{\"a\": \"A\", \"b\": \"Q\"}");
        let file = LinkageFile::parse(&text).unwrap();
        assert!(matches!(file.to_spec(), Err(Error::UnknownVertex(v)) if v == "Q"));
    }
}
