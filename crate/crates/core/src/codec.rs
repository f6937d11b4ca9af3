//! Bit-exact model and ensemble serialization.
//!
//! Models are stored as JSON documents whose numeric arrays are base64 of
//! little-endian IEEE-754 doubles, so a round trip reproduces every
//! parameter bit for bit on any platform. The `format_version` field
//! gates future layout changes.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ensemble::{DiversityStrategy, Ensemble, HiddenTemplate};
use crate::error::{Error, Result};
use crate::randnn::{RandNNConfig, RandNNModel};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    /// base64 of row-major little-endian f64 bytes.
    data: String,
}

fn encode_f64s(values: impl Iterator<Item = f64>) -> String {
    let mut bytes = Vec::new();
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    BASE64.encode(bytes)
}

fn decode_f64s(data: &str, expected: usize) -> Result<Vec<f64>> {
    let bytes = BASE64
        .decode(data)
        .map_err(|e| Error::Serialization(format!("bad base64: {e}")))?;
    if bytes.len() != expected * 8 {
        return Err(Error::Serialization(format!(
            "expected {} bytes of f64 data, got {}",
            expected * 8,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn matrix_repr(m: &DMatrix<f64>) -> MatrixRepr {
    MatrixRepr {
        rows: m.nrows(),
        cols: m.ncols(),
        data: encode_f64s((0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))).map(|(i, j)| m[(i, j)])),
    }
}

fn matrix_from_repr(repr: &MatrixRepr) -> Result<DMatrix<f64>> {
    let flat = decode_f64s(&repr.data, repr.rows * repr.cols)?;
    Ok(DMatrix::from_row_slice(repr.rows, repr.cols, &flat))
}

fn vector_repr(v: &DVector<f64>) -> MatrixRepr {
    MatrixRepr {
        rows: v.len(),
        cols: 1,
        data: encode_f64s(v.iter().copied()),
    }
}

fn vector_from_repr(repr: &MatrixRepr) -> Result<DVector<f64>> {
    if repr.cols != 1 {
        return Err(Error::Serialization(format!(
            "expected a column vector, got {} columns",
            repr.cols
        )));
    }
    Ok(DVector::from_vec(decode_f64s(&repr.data, repr.rows)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelRepr {
    format_version: u32,
    config: RandNNConfig,
    hidden_weights: MatrixRepr,
    hidden_biases: MatrixRepr,
    output_weights: MatrixRepr,
    feature_mask: Option<Vec<bool>>,
    anchor_indices: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TemplateRepr {
    weights: MatrixRepr,
    biases: MatrixRepr,
    anchor_indices: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EnsembleRepr {
    format_version: u32,
    strategy: DiversityStrategy,
    base_config: RandNNConfig,
    shared_template: Option<TemplateRepr>,
    members: Vec<ModelRepr>,
}

fn model_repr(model: &RandNNModel) -> ModelRepr {
    ModelRepr {
        format_version: FORMAT_VERSION,
        config: *model.config(),
        hidden_weights: matrix_repr(model.hidden_weights()),
        hidden_biases: vector_repr(model.hidden_biases()),
        output_weights: matrix_repr(model.output_weights()),
        feature_mask: model.feature_mask().map(|m| m.to_vec()),
        anchor_indices: model.anchor_indices().to_vec(),
    }
}

fn model_from_repr(repr: &ModelRepr) -> Result<RandNNModel> {
    if repr.format_version != FORMAT_VERSION {
        return Err(Error::Serialization(format!(
            "unsupported format version {}",
            repr.format_version
        )));
    }
    RandNNModel::from_parts(
        matrix_from_repr(&repr.hidden_weights)?,
        vector_from_repr(&repr.hidden_biases)?,
        matrix_from_repr(&repr.output_weights)?,
        repr.config,
        repr.feature_mask.clone(),
        repr.anchor_indices.clone(),
    )
}

impl RandNNModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&model_repr(self)).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let repr: ModelRepr =
            serde_json::from_str(json).map_err(|e| Error::Serialization(e.to_string()))?;
        model_from_repr(&repr)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl Ensemble {
    pub fn to_json(&self) -> String {
        let repr = EnsembleRepr {
            format_version: FORMAT_VERSION,
            strategy: *self.strategy(),
            base_config: *self.base_config(),
            shared_template: self.shared_template().map(|t| TemplateRepr {
                weights: matrix_repr(&t.weights),
                biases: vector_repr(&t.biases),
                anchor_indices: t.anchor_indices.clone(),
            }),
            members: self.members().iter().map(model_repr).collect(),
        };
        serde_json::to_string(&repr).expect("ensemble serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let repr: EnsembleRepr =
            serde_json::from_str(json).map_err(|e| Error::Serialization(e.to_string()))?;
        if repr.format_version != FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported format version {}",
                repr.format_version
            )));
        }
        let members: Result<Vec<RandNNModel>> = repr.members.iter().map(model_from_repr).collect();
        let template = repr
            .shared_template
            .as_ref()
            .map(|t| -> Result<HiddenTemplate> {
                Ok(HiddenTemplate {
                    weights: matrix_from_repr(&t.weights)?,
                    biases: vector_from_repr(&t.biases)?,
                    anchor_indices: t.anchor_indices.clone(),
                })
            })
            .transpose()?;
        Ensemble::from_parts(members?, repr.strategy, template, repr.base_config)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn matrix_round_trip_is_bit_exact() {
        let m = dmatrix![1.0, -0.0, f64::MIN_POSITIVE; 1e300, -7.25, 0.1];
        let back = matrix_from_repr(&matrix_repr(&m)).unwrap();
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn truncated_data_is_rejected() {
        let mut repr = matrix_repr(&dmatrix![1.0, 2.0]);
        repr.cols = 3;
        assert!(matches!(
            matrix_from_repr(&repr),
            Err(Error::Serialization(_))
        ));
    }
}
