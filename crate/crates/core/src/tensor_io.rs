//! Self-describing tensor files shared by RNN models and GP posteriors: a
//! kind tag, scalar metadata, and named tensors with shape and row-major
//! values. Doubles round-trip exactly.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Tensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, values: Vec<f64>) -> Self {
        Tensor { name: name.into(), shape, values }
    }

    pub fn scalar(name: impl Into<String>, value: f64) -> Self {
        Tensor::new(name, Vec::new(), vec![value])
    }

    fn check(&self) -> Result<()> {
        let n: usize = self.shape.iter().product();
        if n != self.values.len() {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: self.values.len(),
                context: "tensor values vs shape",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorFile {
    pub kind: String,
    #[serde(default)]
    pub meta: BTreeMap<String, serde_json::Value>,
    pub tensors: Vec<Tensor>,
}

impl TensorFile {
    pub fn new(kind: impl Into<String>) -> Self {
        TensorFile { kind: kind.into(), meta: BTreeMap::new(), tensors: Vec::new() }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn push(&mut self, tensor: Tensor) {
        self.tensors.push(tensor);
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Parse(format!("missing tensor {name:?}")))
    }

    /// Tensor with the given shape.
    pub fn expect(&self, name: &str, shape: &[usize]) -> Result<&Tensor> {
        let t = self.get(name)?;
        if t.shape != shape {
            return Err(Error::Parse(format!("tensor {name:?} has shape {:?}, expected {shape:?}", t.shape)));
        }
        Ok(t)
    }

    pub fn meta_usize(&self, key: &str) -> Result<usize> {
        self.meta
            .get(key)
            .and_then(serde_json::Value::as_u64)
            .map(|v| v as usize)
            .ok_or_else(|| Error::Parse(format!("missing integer metadata {key:?}")))
    }

    pub fn meta_f64(&self, key: &str) -> Result<f64> {
        self.meta
            .get(key)
            .and_then(serde_json::Value::as_f64)
            .ok_or_else(|| Error::Parse(format!("missing numeric metadata {key:?}")))
    }

    pub fn meta_str(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .and_then(serde_json::Value::as_str)
            .ok_or_else(|| Error::Parse(format!("missing string metadata {key:?}")))
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Parse(format!("expected a {kind} file, found {}", self.kind)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TensorFile = serde_json::from_str(text)?;
        for t in &file.tensors {
            t.check()?;
        }
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn doubles_round_trip_exactly(values in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 1..40)) {
            let mut file = TensorFile::new("test").with_meta("n", values.len());
            file.push(Tensor::new("x", vec![values.len()], values.clone()));
            let back = TensorFile::from_json(&file.to_json().unwrap()).unwrap();
            let got = &back.get("x").unwrap().values;
            prop_assert_eq!(got.len(), values.len());
            for (a, b) in got.iter().zip(&values) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let text = r#"{"kind":"k","tensors":[{"name":"x","shape":[2,2],"values":[1.0]}]}"#;
        assert!(TensorFile::from_json(text).is_err());
    }
}
