//! Versioned JSON model files.
//!
//! A model file is a single compact JSON object:
//!
//! ```text
//! {"format_version":1,"kind":"svm"|"forest","created_with":{...},"payload":{...}}
//! ```
//!
//! Every real is written as `d.dddddddddddddddde±x` (17 significant
//! digits), fields follow declaration order and maps are sorted, so two
//! equal models always produce identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::Label;
use crate::error::{Error, Result};
use crate::ml::{forest_predict, svm_predict, ForestModel, SvmModel};
use crate::scalar::Scalar;

pub const FORMAT_VERSION: i64 = 1;
pub const MODEL_EXTENSION: &str = "pdmodel.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Svm,
    Forest,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Svm => "svm",
            ModelKind::Forest => "forest",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model<T> {
    Svm(SvmModel<T>),
    Forest(ForestModel<T>),
}

impl<T: Scalar> Model<T> {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Svm(_) => ModelKind::Svm,
            Model::Forest(_) => ModelKind::Forest,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Svm(m) => m.n_features,
            Model::Forest(m) => m.n_features,
        }
    }

    /// SVM decision value or forest positive-vote fraction, with the label.
    pub fn predict(&self, x: &[T]) -> Result<(T, Label)> {
        match self {
            Model::Svm(m) => svm_predict(m, x),
            Model::Forest(m) => forest_predict(m, x),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Svm(m) => m.validate(),
            Model::Forest(m) => m.validate(),
        }
    }
}

/// A model together with the configuration it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEnvelope<T> {
    pub created_with: BTreeMap<String, String>,
    pub model: Model<T>,
}

#[derive(Serialize)]
struct EnvelopeOut<'a, P> {
    format_version: i64,
    kind: ModelKind,
    created_with: &'a BTreeMap<String, String>,
    payload: &'a P,
}

struct CanonicalFormatter;

impl serde_json::ser::Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", f64::from(value))
    }
}

/// Compact JSON with every real in 17-significant-digit exponent form.
/// Non-finite reals become `null`.
pub fn to_canonical_json<S: Serialize + ?Sized>(value: &S) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::format(format!("serialization failed: {e}")))?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

pub fn save_model<T>(model: &Model<T>, created_with: &BTreeMap<String, String>) -> Result<String>
where
    T: Scalar + Serialize,
{
    model.validate()?;
    let kind = model.kind();
    let mut text = match model {
        Model::Svm(m) => to_canonical_json(&EnvelopeOut {
            format_version: FORMAT_VERSION,
            kind,
            created_with,
            payload: m,
        }),
        Model::Forest(m) => to_canonical_json(&EnvelopeOut {
            format_version: FORMAT_VERSION,
            kind,
            created_with,
            payload: m,
        }),
    }?;
    text.push('\n');
    Ok(text)
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn typed<D: DeserializeOwned>(value: &Value, prefix: &str) -> Result<D> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." {
            prefix.to_string()
        } else {
            format!("{prefix}.{inner}")
        };
        schema(path, e.into_inner().to_string())
    })
}

/// Checks the version and kind before the payload schema, so files from a
/// newer format report a version error rather than a field error.
pub fn load_model<T>(text: &str) -> Result<ModelEnvelope<T>>
where
    T: Scalar + DeserializeOwned,
{
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Error::format(format!("model file is not JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| schema(".", "expected a JSON object"))?;
    let version = obj
        .get("format_version")
        .ok_or_else(|| schema("format_version", "missing field"))?;
    let version = version
        .as_i64()
        .ok_or_else(|| schema("format_version", "expected an integer"))?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    if let Some(key) = obj.keys().find(|k| {
        !matches!(
            k.as_str(),
            "format_version" | "kind" | "created_with" | "payload"
        )
    }) {
        return Err(schema(key.as_str(), "unknown field"));
    }
    let kind = obj
        .get("kind")
        .ok_or_else(|| schema("kind", "missing field"))?;
    let kind = kind
        .as_str()
        .ok_or_else(|| schema("kind", "expected a string"))?;
    let created_with = obj
        .get("created_with")
        .ok_or_else(|| schema("created_with", "missing field"))?;
    let created_with: BTreeMap<String, String> = typed(created_with, "created_with")?;
    let payload = obj
        .get("payload")
        .ok_or_else(|| schema("payload", "missing field"))?;
    let model = match kind {
        "svm" => Model::Svm(typed(payload, "payload")?),
        "forest" => Model::Forest(typed(payload, "payload")?),
        other => return Err(Error::format(format!("unknown model kind `{other}`"))),
    };
    model.validate()?;
    Ok(ModelEnvelope {
        created_with,
        model,
    })
}

/// Writes to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::input(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn write_model_file<T>(
    path: &Path,
    model: &Model<T>,
    created_with: &BTreeMap<String, String>,
) -> Result<()>
where
    T: Scalar + Serialize,
{
    write_atomic(path, save_model(model, created_with)?.as_bytes())
}

pub fn read_model_file<T>(path: &Path) -> Result<ModelEnvelope<T>>
where
    T: Scalar + DeserializeOwned,
{
    load_model(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::{ForestParams, Node};

    fn tiny_svm() -> Model<f64> {
        Model::Svm(SvmModel {
            n_features: 2,
            gamma: 0.5,
            c: 10.0,
            bias: -0.125,
            alphas_times_labels: vec![1.5, -1.5],
            support_vectors: vec![vec![0.0, 1.0], vec![1.0, 0.1]],
        })
    }

    fn tiny_forest() -> Model<f64> {
        Model::Forest(ForestModel {
            n_features: 1,
            params: ForestParams {
                n_trees: 1,
                max_depth: 1,
                min_samples_leaf: 1,
                mtry: Some(1),
                seed: 9,
            },
            trees: vec![Node::Split {
                feature: 0,
                threshold: 0.5,
                left: Box::new(Node::Leaf { counts: [3, 0] }),
                right: Box::new(Node::Leaf { counts: [0, 2] }),
            }],
        })
    }

    fn snapshot() -> BTreeMap<String, String> {
        BTreeMap::from([("pipeline".to_string(), "test".to_string())])
    }

    #[test]
    fn canonical_numbers() {
        assert_eq!(to_canonical_json(&[0.1f64, -0.0, 1.0, 1e300]).unwrap(),
            "[1.0000000000000001e-1,-0.0000000000000000e0,1.0000000000000000e0,1.0000000000000001e300]");
        assert_eq!(to_canonical_json(&[f64::NAN]).unwrap(), "[null]");
        assert_eq!(to_canonical_json(&(3u64, "x")).unwrap(), "[3,\"x\"]");
    }

    #[test]
    fn round_trip_is_byte_identical() {
        for model in [tiny_svm(), tiny_forest()] {
            let text = save_model(&model, &snapshot()).unwrap();
            let loaded = load_model::<f64>(&text).unwrap();
            assert_eq!(loaded.model, model);
            assert_eq!(loaded.created_with, snapshot());
            assert_eq!(
                save_model(&loaded.model, &loaded.created_with).unwrap(),
                text
            );
        }
    }

    #[test]
    fn version_and_kind_errors() {
        let text = save_model(&tiny_svm(), &snapshot()).unwrap();
        let v2 = text.replace("\"format_version\":1", "\"format_version\":2");
        assert!(matches!(
            load_model::<f64>(&v2),
            Err(Error::UnsupportedVersion(2))
        ));
        let bad_kind = text.replace("\"kind\":\"svm\"", "\"kind\":\"mlp\"");
        assert!(matches!(
            load_model::<f64>(&bad_kind),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            load_model::<f64>("not json"),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn schema_errors_carry_paths() {
        let text = save_model(&tiny_svm(), &snapshot()).unwrap();
        let missing = text.replace("\"bias\":-1.2500000000000000e-1,", "");
        match load_model::<f64>(&missing) {
            Err(Error::Schema { path, message }) => {
                assert_eq!(path, "payload");
                assert!(message.contains("bias"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let wrong_type = text.replace("\"gamma\":5.0000000000000000e-1", "\"gamma\":\"half\"");
        match load_model::<f64>(&wrong_type) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "payload.gamma"),
            other => panic!("{other:?}"),
        }
        let forest = save_model(&tiny_forest(), &snapshot()).unwrap();
        let bad_leaf = forest.replace("\"counts\":[3,0]", "\"counts\":[3,\"a\"]");
        assert!(matches!(
            load_model::<f64>(&bad_leaf),
            Err(Error::Schema { .. })
        ));
        let extra = text.replacen('{', "{\"extra\":1,", 1);
        assert!(matches!(
            load_model::<f64>(&extra),
            Err(Error::Schema { .. })
        ));
    }

    #[test]
    fn structural_validation_on_load() {
        let text = save_model(&tiny_forest(), &snapshot()).unwrap();
        let bad = text.replace("\"feature\":0", "\"feature\":4");
        assert!(load_model::<f64>(&bad).is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = std::env::temp_dir().join(format!("pd-persist-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("m.{MODEL_EXTENSION}"));
        write_model_file(&path, &tiny_svm(), &snapshot()).unwrap();
        write_model_file(&path, &tiny_forest(), &snapshot()).unwrap();
        let loaded = read_model_file::<f64>(&path).unwrap();
        assert_eq!(loaded.model.kind(), ModelKind::Forest);
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        fs::remove_dir_all(&dir).unwrap();
    }
}
