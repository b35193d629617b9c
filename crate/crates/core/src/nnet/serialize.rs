use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{ParamSet, Tensor};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// On-disk model: `{"version":1,"kind":…,"config":{…},"params":{name:{"shape":[…],"data":[…]}}}`.
///
/// Optimizer moments are not stored; a loaded model restarts Adam from zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile<C> {
    pub version: u32,
    pub kind: String,
    pub config: C,
    pub params: BTreeMap<String, TensorRecord>,
}

impl<C: Serialize + DeserializeOwned> ModelFile<C> {
    pub fn new(kind: &str, config: C, params: &ParamSet) -> Self {
        ModelFile {
            version: MODEL_FORMAT_VERSION,
            kind: kind.to_string(),
            config,
            params: params
                .iter()
                .map(|(name, p)| {
                    let record = TensorRecord {
                        shape: p.value.shape().to_vec(),
                        data: p.value.data().to_vec(),
                    };
                    (name.to_string(), record)
                })
                .collect(),
        }
    }

    /// Rebuilds the parameter set, checking version, kind, and that every
    /// tensor matches `expected` shapes.
    pub fn into_params(
        self,
        kind: &str,
        expected: &[(&str, Vec<usize>)],
    ) -> Result<(C, ParamSet)> {
        if self.version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!("unsupported version {}", self.version)));
        }
        if self.kind != kind {
            return Err(Error::Model(format!("expected kind {kind:?}, found {:?}", self.kind)));
        }
        let mut params = ParamSet::new();
        for (name, record) in self.params {
            let tensor = Tensor::from_vec(&record.shape, record.data)?;
            if !tensor.all_finite() {
                return Err(Error::Model(format!("parameter {name:?} has non-finite values")));
            }
            params.insert(&name, tensor);
        }
        params.check_shapes(expected)?;
        Ok((self.config, params))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Reads only the `kind` field of a model file.
pub(crate) fn peek_kind(json: &str) -> Result<String> {
    #[derive(Deserialize)]
    struct Kind {
        kind: String,
    }
    Ok(serde_json::from_str::<Kind>(json)?.kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
    struct Cfg {
        width: usize,
    }

    fn params() -> ParamSet {
        let mut ps = ParamSet::new();
        ps.insert("w", Tensor::from_vec(&[2, 2], vec![0.1, -2.5e-17, 3.0, 1.0 / 3.0]).unwrap());
        ps.insert("b", Tensor::vector(&[0.0, 7.0]));
        ps
    }

    #[test]
    fn json_layout_and_round_trip() {
        let file = ModelFile::new("toy", Cfg { width: 2 }, &params());
        let json = file.to_json().unwrap();
        assert!(json.starts_with(r#"{"version":1,"kind":"toy","config":{"width":2},"params":{"b":{"shape":[2],"data":[0.0,7.0]}"#), "{json}");
        let back: ModelFile<Cfg> = serde_json::from_str(&json).unwrap();
        let (cfg, ps) = back
            .into_params("toy", &[("w", vec![2, 2]), ("b", vec![2])])
            .unwrap();
        assert_eq!(cfg, Cfg { width: 2 });
        assert_eq!(ps.get("w"), params().get("w"));
        assert_eq!(peek_kind(&json).unwrap(), "toy");
    }

    #[test]
    fn validation_failures() {
        let file = ModelFile::new("toy", Cfg { width: 2 }, &params());
        assert!(file.clone().into_params("other", &[]).is_err());
        assert!(file
            .clone()
            .into_params("toy", &[("w", vec![4]), ("b", vec![2])])
            .is_err());
        let mut bad = file.clone();
        bad.version = 2;
        assert!(bad.into_params("toy", &[("w", vec![2, 2]), ("b", vec![2])]).is_err());
        let mut ragged = file;
        ragged.params.get_mut("b").unwrap().data.push(1.0);
        assert!(ragged.into_params("toy", &[("w", vec![2, 2]), ("b", vec![2])]).is_err());
    }
}
