//! Model checkpoints as JSON:
//!
//! ```text
//! { "format": "frloss-mlp", "version": 1,
//!   "layers": [ { "inputs": m, "outputs": h, "weights": [...], "biases": [...] }, ... ] }
//! ```
//!
//! Weights are row-major `(outputs, inputs)`. Floats round-trip exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Layer, MlpModel};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "frloss-mlp";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    layers: Vec<Layer>,
}

pub fn save_checkpoint(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ckpt = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        layers: model.layers().to_vec(),
    };
    let text = serde_json::to_string(&ckpt).expect("checkpoint serializes");
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<MlpModel> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ckpt: Checkpoint =
        serde_json::from_str(&text).map_err(|e| Error::format_at_line(&name, e.line() as u64, e.to_string()))?;
    if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
        return Err(Error::format_at_line(
            &name,
            1,
            format!("unsupported checkpoint {} v{}", ckpt.format, ckpt.version),
        ));
    }
    MlpModel::from_layers(ckpt.layers).map_err(|e| Error::format_at_line(&name, 1, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LossKind;
    use crate::mlp::{init_model, MlpConfig};

    #[test]
    fn round_trip() {
        let model = init_model(&MlpConfig::new(vec![5, 4, 3], LossKind::Fr)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_checkpoint(&model, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), model);
    }

    #[test]
    fn rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        fs::write(&path, "{").unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Format { .. })));
        fs::write(
            &path,
            r#"{"format":"frloss-mlp","version":1,"layers":[{"inputs":2,"outputs":2,"weights":[1.0],"biases":[0.0,0.0]}]}"#,
        )
        .unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Format { .. })));
        fs::write(&path, r#"{"format":"other","version":1,"layers":[]}"#).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
