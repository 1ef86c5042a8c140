//! Model file format, version 1.
//!
//! ```text
//! FUSELAB-MODEL
//! format_version=1
//! input_dim=16
//! layers=3
//! layer.0=64,16,relu        rows,cols,activation
//! layer.0.bias=64
//! ...
//! seed_tag=init7-shuffle8   (omitted when the model has no tag)
//! payload
//! <for each layer: weights row-major, then bias; little-endian f64>
//! ```
//!
//! The loader checks the dimension chain and finiteness through
//! [`MlpModel::new`] before returning.

use std::path::Path;

use super::{Activation, DenseLayer, MlpModel};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::manifest::{push_f64s, Manifest, PayloadReader};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "FUSELAB-MODEL";

pub fn write_model(model: &MlpModel) -> Result<Vec<u8>> {
    let mut manifest = Manifest::new();
    manifest.push("format_version", MODEL_FORMAT_VERSION);
    manifest.push("input_dim", model.input_dim());
    manifest.push("layers", model.layers().len());
    let mut payload = Vec::new();
    for (i, layer) in model.layers().iter().enumerate() {
        manifest.push(
            &format!("layer.{i}"),
            format!("{},{},{}", layer.out_dim(), layer.in_dim(), layer.activation()),
        );
        manifest.push(&format!("layer.{i}.bias"), layer.bias().len());
        // nalgebra is column-major; the payload is row-major.
        push_f64s(&mut payload, layer.weights().transpose().iter().copied());
        push_f64s(&mut payload, layer.bias().iter().copied());
    }
    if let Some(tag) = model.seed_tag() {
        if tag.contains('\n') {
            return Err(Error::Validation("seed_tag may not contain newlines".into()));
        }
        manifest.push("seed_tag", tag);
    }
    Ok(manifest.encode(MAGIC, &payload))
}

pub fn read_model(bytes: &[u8]) -> Result<MlpModel> {
    let (manifest, payload) = Manifest::decode(MAGIC, bytes)?;
    let version: u32 = manifest.parse_num("format_version")?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::parse("format_version", format!("unsupported version {version}")));
    }
    let input_dim: usize = manifest.parse_num("input_dim")?;
    let count: usize = manifest.parse_num("layers")?;
    let mut reader = PayloadReader::new(payload);
    let mut layers = Vec::with_capacity(count);
    for i in 0..count {
        let key = format!("layer.{i}");
        let spec = manifest.require(&key)?;
        let parts: Vec<&str> = spec.split(',').collect();
        let [rows, cols, act] = parts[..] else {
            return Err(Error::parse(&key, format!("expected rows,cols,activation, got `{spec}`")));
        };
        let rows: usize = rows
            .parse()
            .map_err(|_| Error::parse(&key, format!("bad row count `{rows}`")))?;
        let cols: usize = cols
            .parse()
            .map_err(|_| Error::parse(&key, format!("bad column count `{cols}`")))?;
        let activation: Activation = act.parse().map_err(|_| Error::parse(&key, format!("unknown activation `{act}`")))?;
        let bias_key = format!("layer.{i}.bias");
        let bias_len: usize = manifest.parse_num(&bias_key)?;
        let weights = reader.f64s(rows * cols, &key)?;
        let bias = reader.f64s(bias_len, &bias_key)?;
        let layer = DenseLayer::new(
            Matrix::from_row_slice(rows, cols, &weights),
            Vector::from_vec(bias),
            activation,
        )
        .map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("layer {i}: {msg}")),
            other => other,
        })?;
        layers.push(layer);
    }
    reader.finish()?;
    let seed_tag = manifest.get("seed_tag").map(str::to_string);
    MlpModel::new(layers, input_dim, seed_tag)
}

pub fn save_model(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_model(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MlpModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MlpModel {
        let l0 = DenseLayer::new(
            Matrix::from_row_slice(3, 2, &[0.1, -0.2, 0.3, 1e-300, f64::MIN_POSITIVE, 7.5]),
            Vector::from_row_slice(&[0.0, -1.0, 2.0]),
            Activation::Relu,
        )
        .unwrap();
        let l1 = DenseLayer::new(
            Matrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]),
            Vector::from_row_slice(&[0.5, 0.25, -0.125]),
            Activation::Relu,
        )
        .unwrap();
        let l2 = DenseLayer::new(
            Matrix::from_row_slice(2, 3, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]),
            Vector::from_row_slice(&[1.0, -1.0]),
            Activation::Identity,
        )
        .unwrap();
        MlpModel::new(vec![l0, l1, l2], 2, Some("seed-3".into())).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = sample();
        let back = read_model(&write_model(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.layers().iter().zip(m.layers()) {
            for (x, y) in a.weights().iter().zip(b.weights().iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn round_trip_without_tag() {
        let m = sample().with_seed_tag(None);
        assert_eq!(read_model(&write_model(&m).unwrap()).unwrap(), m);
    }

    fn header_end(bytes: &[u8]) -> usize {
        bytes.windows(8).position(|w| w == b"payload\n").unwrap() + 8
    }

    fn patch_header(bytes: &[u8], from: &str, to: &str) -> Vec<u8> {
        let end = header_end(bytes);
        let header = std::str::from_utf8(&bytes[..end]).unwrap();
        assert!(header.contains(from));
        let mut out = header.replace(from, to).into_bytes();
        out.extend_from_slice(&bytes[end..]);
        out
    }

    #[test]
    fn bias_length_mismatch_is_a_validation_error() {
        let bytes = write_model(&sample()).unwrap();
        // Shrink the declared bias and drop one trailing value from the payload
        // so only the dimension check can object.
        let mut tampered = patch_header(&bytes, "layer.0.bias=3", "layer.0.bias=2");
        tampered.truncate(tampered.len() - 8);
        let err = read_model(&tampered).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("bias length")), "{err}");
    }

    #[test]
    fn non_finite_payload_is_rejected() {
        let mut bytes = write_model(&sample()).unwrap();
        let start = header_end(&bytes);
        bytes[start..start + 8].copy_from_slice(&f64::INFINITY.to_le_bytes());
        assert!(matches!(read_model(&bytes), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_manifest_names_the_field() {
        let bytes = write_model(&sample()).unwrap();
        match read_model(&patch_header(&bytes, "input_dim=2", "input_dim=two")) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "input_dim"),
            other => panic!("expected parse error, got {other:?}"),
        }
        let truncated = &bytes[..bytes.len() - 4];
        assert!(matches!(read_model(truncated), Err(Error::Parse { .. })));
    }

    #[test]
    fn broken_dimension_chain_is_rejected() {
        let bytes = write_model(&sample()).unwrap();
        let tampered = patch_header(&bytes, "input_dim=2", "input_dim=3");
        assert!(matches!(read_model(&tampered), Err(Error::Validation(_))));
    }
}
