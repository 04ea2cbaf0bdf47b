//! File formats: weights JSON and small JSON/CSV helpers.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::WeightVector;

pub fn complex_to_pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

pub fn pair_to_complex(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// `weights.json`: `[re, im]` pairs plus magnitude and phase for reading by eye.
///
/// On input either `weights` or both `magnitude` and `phase_rad` are accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnitude: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_rad: Option<Vec<f64>>,
}

impl WeightsFile {
    pub fn from_weights(w: &WeightVector) -> Self {
        let s = w.as_slice();
        Self {
            weights: Some(s.iter().map(|c| complex_to_pair(*c)).collect()),
            magnitude: Some(s.iter().map(|c| c.norm()).collect()),
            phase_rad: Some(s.iter().map(|c| c.arg()).collect()),
        }
    }

    pub fn to_weights(&self) -> Result<WeightVector> {
        match (&self.weights, &self.magnitude, &self.phase_rad) {
            (Some(w), _, _) => WeightVector::new(w.iter().map(|p| pair_to_complex(*p)).collect()),
            (None, Some(m), Some(p)) => WeightVector::from_polar(m, p),
            _ => Err(Error::InvalidWeights(
                "weights file needs `weights` or `magnitude` with `phase_rad`".into(),
            )),
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidRequest(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidRequest(format!("cannot parse {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidRequest(format!("cannot serialise {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::InvalidRequest(format!("cannot write {}: {e}", path.display())))
}

pub fn read_weights(path: &Path) -> Result<WeightVector> {
    read_json::<WeightsFile>(path)?.to_weights()
}

pub fn write_weights(path: &Path, w: &WeightVector) -> Result<()> {
    write_json(path, &WeightsFile::from_weights(w))
}
