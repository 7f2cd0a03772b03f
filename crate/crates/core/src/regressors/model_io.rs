//! Self-describing single-file model persistence.
//!
//! Layout: 8-byte magic `RAGQMODL`, format version (u32), model kind tag
//! (u8), then the kind's config and parameters. All integers and floats
//! are little-endian; parameters are 64-bit floats. Round-trips reproduce
//! bit-identical predictions.

use std::path::{Path, PathBuf};

use ndarray::Array1;
use thiserror::Error;

use super::bilstm::{BilstmConfig, BilstmNetwork, BilstmRegressor, LstmCellParams, SeqLayout};
use super::gbt::{GbtConfig, GbtModel};
use super::tree::RegressionTree;

pub const MODEL_MAGIC: &[u8; 8] = b"RAGQMODL";
pub const MODEL_FORMAT_VERSION: u32 = 1;

const KIND_BILSTM: u8 = 1;
const KIND_GBT: u8 = 2;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("cannot save an unfitted model")]
    Unfitted,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("unknown model kind tag {0}")]
    UnknownKind(u8),
    #[error("corrupt model file: {0}")]
    Corrupt(String),
}

/// A model that can live in the single-file format.
///
/// One value exists per pipeline run, so the size gap between the variants
/// never multiplies.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum SavedModel {
    Bilstm(BilstmRegressor),
    Gbt(GbtModel),
}

pub fn save_model(model: &SavedModel, path: &Path) -> Result<(), ModelIoError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MODEL_MAGIC);
    put_u32(&mut buf, MODEL_FORMAT_VERSION);
    match model {
        SavedModel::Bilstm(m) => {
            buf.push(KIND_BILSTM);
            write_bilstm(&mut buf, m)?;
        }
        SavedModel::Gbt(m) => {
            buf.push(KIND_GBT);
            write_gbt(&mut buf, m)?;
        }
    }
    std::fs::write(path, &buf).map_err(|source| ModelIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<SavedModel, ModelIoError> {
    let bytes = std::fs::read(path).map_err(|source| ModelIoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut r = Reader {
        buf: &bytes,
        pos: 0,
    };
    if r.bytes(8)? != MODEL_MAGIC {
        return Err(ModelIoError::BadMagic);
    }
    let version = r.u32()?;
    if version != MODEL_FORMAT_VERSION {
        return Err(ModelIoError::UnsupportedVersion(version));
    }
    let kind = r.u8()?;
    let model = match kind {
        KIND_BILSTM => SavedModel::Bilstm(read_bilstm(&mut r)?),
        KIND_GBT => SavedModel::Gbt(read_gbt(&mut r)?),
        other => return Err(ModelIoError::UnknownKind(other)),
    };
    if r.pos != bytes.len() {
        return Err(ModelIoError::Corrupt(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Ok(model)
}

fn write_gbt(buf: &mut Vec<u8>, model: &GbtModel) -> Result<(), ModelIoError> {
    let state = model.state.as_ref().ok_or(ModelIoError::Unfitted)?;
    let cfg = model.config();
    put_f64(buf, cfg.learning_rate);
    put_u32(buf, cfg.max_depth as u32);
    put_f64(buf, cfg.leaf_l2);
    put_f64(buf, cfg.split_gain_floor);
    put_u32(buf, cfg.n_rounds as u32);
    put_u32(buf, cfg.min_leaf_samples as u32);
    put_u64(buf, cfg.seed);
    put_f64(buf, state.base);
    put_u32(buf, state.n_features as u32);
    put_u32(buf, state.trees.len() as u32);
    for tree in &state.trees {
        let rows = tree.to_flat();
        put_u32(buf, rows.len() as u32);
        for (is_leaf, feature, value, left, right) in rows {
            buf.push(is_leaf as u8);
            put_u32(buf, feature);
            put_f64(buf, value);
            put_u32(buf, left);
            put_u32(buf, right);
        }
    }
    Ok(())
}

fn read_gbt(r: &mut Reader) -> Result<GbtModel, ModelIoError> {
    let config = GbtConfig {
        learning_rate: r.f64()?,
        max_depth: r.u32()? as usize,
        leaf_l2: r.f64()?,
        split_gain_floor: r.f64()?,
        n_rounds: r.u32()? as usize,
        min_leaf_samples: r.u32()? as usize,
        seed: r.u64()?,
    };
    let base = r.f64()?;
    let n_features = r.u32()? as usize;
    let n_trees = r.u32()? as usize;
    let mut trees = Vec::with_capacity(n_trees);
    for t in 0..n_trees {
        let n_nodes = r.u32()? as usize;
        let mut rows = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let is_leaf = r.u8()? != 0;
            let feature = r.u32()?;
            let value = r.f64()?;
            let left = r.u32()?;
            let right = r.u32()?;
            rows.push((is_leaf, feature, value, left, right));
        }
        let tree = RegressionTree::from_flat(rows)
            .ok_or_else(|| ModelIoError::Corrupt(format!("tree {t} has an invalid topology")))?;
        trees.push(tree);
    }
    Ok(GbtModel::restore(config, base, n_features, trees))
}

fn layout_tag(layout: SeqLayout) -> u8 {
    match layout {
        SeqLayout::PerFeatureSteps => 0,
        SeqLayout::FlatSteps => 1,
    }
}

fn write_bilstm(buf: &mut Vec<u8>, model: &BilstmRegressor) -> Result<(), ModelIoError> {
    let (net, y_min, y_range, n_features) = model.fitted_parts().ok_or(ModelIoError::Unfitted)?;
    let cfg = model.config();
    put_u32(buf, cfg.hidden_units as u32);
    put_f64(buf, cfg.initial_lr);
    put_f64(buf, cfg.l2_coefficient);
    put_u32(buf, cfg.max_epochs as u32);
    put_f64(buf, cfg.grad_clip_norm);
    put_u32(buf, cfg.lr_drop_epoch as u32);
    put_f64(buf, cfg.lr_drop_factor);
    buf.push(layout_tag(cfg.seq_layout));
    put_u64(buf, cfg.seed);
    put_f64(buf, y_min);
    put_f64(buf, y_range);
    put_u32(buf, n_features as u32);
    let params = net.param_vector();
    put_u32(buf, params.len() as u32);
    for p in params {
        put_f64(buf, p);
    }
    Ok(())
}

fn read_bilstm(r: &mut Reader) -> Result<BilstmRegressor, ModelIoError> {
    let config = BilstmConfig {
        hidden_units: r.u32()? as usize,
        initial_lr: r.f64()?,
        l2_coefficient: r.f64()?,
        max_epochs: r.u32()? as usize,
        grad_clip_norm: r.f64()?,
        lr_drop_epoch: r.u32()? as usize,
        lr_drop_factor: r.f64()?,
        seq_layout: match r.u8()? {
            0 => SeqLayout::PerFeatureSteps,
            1 => SeqLayout::FlatSteps,
            other => {
                return Err(ModelIoError::Corrupt(format!(
                    "unknown sequence layout tag {other}"
                )))
            }
        },
        seed: r.u64()?,
    };
    let y_min = r.f64()?;
    let y_range = r.f64()?;
    let n_features = r.u32()? as usize;
    let n_params = r.u32()? as usize;
    let mut params = Vec::with_capacity(n_params);
    for _ in 0..n_params {
        let v = r.f64()?;
        if !v.is_finite() {
            return Err(ModelIoError::Corrupt("non-finite parameter".into()));
        }
        params.push(v);
    }
    let hidden = config.hidden_units;
    let channels = match config.seq_layout {
        SeqLayout::PerFeatureSteps => {
            if hidden == 0 || !n_features.is_multiple_of(7) || n_features == 0 {
                return Err(ModelIoError::Corrupt(format!(
                    "feature count {n_features} does not fit the per-feature layout"
                )));
            }
            n_features / 7
        }
        SeqLayout::FlatSteps => {
            if n_features == 0 {
                return Err(ModelIoError::Corrupt("zero feature count".into()));
            }
            1
        }
    };
    let mut net = BilstmNetwork {
        fwd: LstmCellParams::zeros(hidden, channels),
        rev: LstmCellParams::zeros(hidden, channels),
        w_out: Array1::zeros(2 * hidden),
        b_out: 0.0,
        hidden,
        channels,
    };
    net.set_param_vector(&params)
        .map_err(|e| ModelIoError::Corrupt(format!("parameter block mismatch: {e}")))?;
    Ok(BilstmRegressor::restore(
        config, net, y_min, y_range, n_features,
    ))
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn bytes(&mut self, n: usize) -> Result<&'a [u8], ModelIoError> {
        if self.pos + n > self.buf.len() {
            return Err(ModelIoError::Corrupt("truncated file".into()));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, ModelIoError> {
        Ok(self.bytes(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, ModelIoError> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().expect("len")))
    }

    fn u64(&mut self) -> Result<u64, ModelIoError> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().expect("len")))
    }

    fn f64(&mut self) -> Result<f64, ModelIoError> {
        Ok(f64::from_le_bytes(self.bytes(8)?.try_into().expect("len")))
    }
}
