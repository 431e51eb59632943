//! Checkpoints: `<stem>.bin` holds the parameters as little-endian f64,
//! `<stem>.json` the architecture.

use std::fs;
use std::path::{Path, PathBuf};

use super::model::{Architecture, ModelParams};
use crate::error::{Error, Result};

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

pub fn save_checkpoint(params: &ModelParams, stem: &Path) -> Result<()> {
    let (bin, json) = paths(stem);
    let bytes: Vec<u8> = params.values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))?;
    let descriptor = serde_json::to_string_pretty(&params.arch)?;
    fs::write(&json, descriptor).map_err(|e| Error::io(&json, e))?;
    Ok(())
}

pub fn load_checkpoint(stem: &Path) -> Result<ModelParams> {
    let (bin, json) = paths(stem);
    let text = fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
    let arch: Architecture = serde_json::from_str(&text)?;
    let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    if bytes.len() != arch.param_count() * 8 {
        return Err(Error::ShapeMismatch {
            expected: format!("{} parameters", arch.param_count()),
            actual: format!("{} bytes", bytes.len()),
        });
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(ModelParams { arch, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let arch = Architecture {
            history: 2,
            horizon: 3,
            num_files: 4,
            hidden: vec![3],
        };
        let m = ModelParams::random(arch, 1.0, 8).unwrap();
        let stem = dir.path().join("model");
        save_checkpoint(&m, &stem).unwrap();
        assert_eq!(load_checkpoint(&stem).unwrap(), m);
        fs::write(stem.with_extension("bin"), [0u8; 8]).unwrap();
        assert!(matches!(load_checkpoint(&stem), Err(Error::ShapeMismatch { .. })));
    }
}
