//! Instance files: an additive or block scenario plus optional provenance.
//!
//! Additive: `{"theorem", "lambda": [re, im], "a", "b"}`.
//! Block: `{"theorem", "lambda", "A", "B", "C", "D"}`.
//! Either may carry `"provenance": {"generator", "seed", "config"}`.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::additive::AdditiveScenario;
use crate::blockmat::BlockScenario;
use crate::error::{Error, Result};
use crate::gen::Provenance;
use crate::linalg::ComplexMatrix;
use crate::theorem::{Family, Theorem};

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Additive(AdditiveScenario),
    Block(BlockScenario),
}

impl Instance {
    pub fn theorem(&self) -> Theorem {
        match self {
            Instance::Additive(s) => s.theorem,
            Instance::Block(s) => s.theorem,
        }
    }

    pub fn lambda(&self) -> Complex64 {
        match self {
            Instance::Additive(s) => s.lambda,
            Instance::Block(s) => s.lambda,
        }
    }

    /// Operand size (`n` for `n x n` operands or blocks).
    pub fn n(&self) -> usize {
        match self {
            Instance::Additive(s) => s.n(),
            Instance::Block(s) => s.n(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Instance::Additive(s) => s.validate(),
            Instance::Block(s) => s.validate(),
        }
    }

    pub fn matrices(&self) -> Vec<&ComplexMatrix> {
        match self {
            Instance::Additive(s) => vec![&s.a, &s.b],
            Instance::Block(s) => vec![&s.a, &s.b, &s.c, &s.d],
        }
    }

    /// Same statement and lambda with every operand replaced by `f(operand)`.
    pub fn map_matrices(&self, mut f: impl FnMut(&ComplexMatrix) -> ComplexMatrix) -> Instance {
        match self {
            Instance::Additive(s) => Instance::Additive(AdditiveScenario {
                a: f(&s.a),
                b: f(&s.b),
                ..s.clone()
            }),
            Instance::Block(s) => Instance::Block(BlockScenario {
                a: f(&s.a),
                b: f(&s.b),
                c: f(&s.c),
                d: f(&s.d),
                ..s.clone()
            }),
        }
    }

    /// Deletes row and column `i` of every operand; `None` for `1 x 1` operands.
    pub fn delete_index(&self, i: usize) -> Option<Instance> {
        if self.n() <= 1 || i >= self.n() {
            return None;
        }
        Some(self.map_matrices(|m| m.delete_row_col(i).expect("n > 1")))
    }

    pub fn with_theorem(&self, theorem: Theorem) -> Instance {
        match self {
            Instance::Additive(s) => Instance::Additive(AdditiveScenario { theorem, ..s.clone() }),
            Instance::Block(s) => Instance::Block(BlockScenario { theorem, ..s.clone() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub instance: Instance,
    pub provenance: Option<Provenance>,
}

impl InstanceFile {
    pub fn new(instance: Instance) -> Self {
        InstanceFile {
            instance,
            provenance: None,
        }
    }

    pub fn to_value(&self) -> Value {
        let mut v = match &self.instance {
            Instance::Additive(s) => serde_json::to_value(s),
            Instance::Block(s) => serde_json::to_value(s),
        }
        .expect("scenarios serialize");
        if let (Some(p), Value::Object(map)) = (&self.provenance, &mut v) {
            map.insert(
                "provenance".into(),
                serde_json::to_value(p).expect("provenance serializes"),
            );
        }
        v
    }

    pub fn from_value(mut v: Value) -> Result<Self> {
        let map = v
            .as_object_mut()
            .ok_or_else(|| Error::Parse("instance must be a JSON object".into()))?;
        let provenance = match map.remove("provenance") {
            None | Some(Value::Null) => None,
            Some(p) => Some(serde_json::from_value(p)?),
        };
        let tag = map
            .get("theorem")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("missing string field `theorem`".into()))?;
        let theorem: Theorem = tag.parse()?;
        let instance = match theorem.family() {
            Family::Additive => Instance::Additive(serde_json::from_value(v)?),
            Family::Block => Instance::Block(serde_json::from_value(v)?),
        };
        instance.validate()?;
        Ok(InstanceFile { instance, provenance })
    }

    /// JSON of the instance alone, without provenance.
    pub fn instance_value(&self) -> Value {
        InstanceFile::new(self.instance.clone()).to_value()
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("instance serializes")
    }
}

pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    InstanceFile::from_value(serde_json::from_str(text)?)
}

impl Serialize for InstanceFile {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for InstanceFile {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        InstanceFile::from_value(Value::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl From<AdditiveScenario> for Instance {
    fn from(s: AdditiveScenario) -> Self {
        Instance::Additive(s)
    }
}

impl From<BlockScenario> for Instance {
    fn from(s: BlockScenario) -> Self {
        Instance::Block(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{gen_t21, gen_t35, GeneratorConfig};
    use crate::linalg::ONE;

    #[test]
    fn additive_round_trip_with_provenance() {
        let g = gen_t21(&GeneratorConfig::new(vec![1, 1, 1, 0], Complex64::new(2.0, 0.0), 3)).unwrap();
        let file = InstanceFile {
            instance: g.scenario.into(),
            provenance: Some(g.provenance),
        };
        let back = parse_instance(&file.to_json_pretty()).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn block_round_trip_uses_upper_case_keys() {
        let g = gen_t35(&GeneratorConfig::new(vec![2, 1], ONE, 3)).unwrap();
        let file = InstanceFile::new(g.scenario.into());
        let v = file.to_value();
        assert!(v.get("A").is_some() && v.get("a").is_none());
        assert_eq!(parse_instance(&v.to_string()).unwrap(), file);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_instance("[1,2]").is_err());
        assert!(parse_instance(r#"{"theorem": "T9.9"}"#).is_err());
        let mismatched = r#"{"theorem":"T2.1","lambda":[1,0],
            "a":{"rows":1,"cols":1,"data":[[1,0]]},
            "b":{"rows":2,"cols":2,"data":[[1,0],[0,0],[0,0],[1,0]]}}"#;
        assert!(matches!(
            parse_instance(mismatched),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
