//! Binary trainer snapshots.
//!
//! Layout: the 8-byte magic `QRAGCKPT`, a little-endian `u32` format version,
//! a little-endian `u64` header length, the JSON header, then the online
//! parameters, target parameters and the two Adam moment vectors as
//! little-endian `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::{EncoderConfig, EncoderParams, QModel};
use crate::error::{Error, Result};
use crate::train::{OptimizerState, TrainConfig, Trainer};

const MAGIC: &[u8; 8] = b"QRAGCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
    pub step: u64,
    pub opt_step: u64,
    pub skipped_steps: u64,
    pub param_count: usize,
    /// Caller-defined metadata (the CLI stores its run configuration here).
    #[serde(default)]
    pub extra: serde_json::Value,
}

pub fn save_trainer(path: impl AsRef<Path>, trainer: &Trainer, extra: serde_json::Value) -> Result<()> {
    let header = CheckpointHeader {
        encoder: *trainer.model().config(),
        train: trainer.config().clone(),
        step: trainer.step(),
        opt_step: trainer.optimizer().step,
        skipped_steps: trainer.skipped_steps(),
        param_count: trainer.model().param_count(),
        extra,
    };
    let json = serde_json::to_vec(&header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    let opt = trainer.optimizer();
    for block in [
        &trainer.params().values,
        &trainer.target_params().values,
        &opt.m,
        &opt.v,
    ] {
        for x in block {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Checkpoint(format!("truncated file: {e}")))?;
    Ok(buf)
}

fn read_block(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| Ok(f64::from_le_bytes(read_exact::<8>(r)?))).collect()
}

/// Reads only the header.
pub fn read_header(path: impl AsRef<Path>) -> Result<CheckpointHeader> {
    let mut r = BufReader::new(File::open(path)?);
    read_header_from(&mut r)
}

fn read_header_from(r: &mut impl Read) -> Result<CheckpointHeader> {
    if &read_exact::<8>(r)? != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version = u32::from_le_bytes(read_exact::<4>(r)?);
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let len = u64::from_le_bytes(read_exact::<8>(r)?) as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)
        .map_err(|e| Error::Checkpoint(format!("truncated header: {e}")))?;
    Ok(serde_json::from_slice(&json)?)
}

/// Restores a trainer exactly as it was saved.
pub fn load_trainer(path: impl AsRef<Path>) -> Result<(Trainer, CheckpointHeader)> {
    let mut r = BufReader::new(File::open(path)?);
    let header = read_header_from(&mut r)?;
    let model = QModel::new(header.encoder)?;
    if model.param_count() != header.param_count {
        return Err(Error::Checkpoint(format!(
            "header declares {} parameters, the encoder config implies {}",
            header.param_count,
            model.param_count()
        )));
    }
    let n = header.param_count;
    let online = EncoderParams {
        values: read_block(&mut r, n)?,
    };
    let target = EncoderParams {
        values: read_block(&mut r, n)?,
    };
    let opt = OptimizerState {
        m: read_block(&mut r, n)?,
        v: read_block(&mut r, n)?,
        step: header.opt_step,
    };
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Checkpoint("trailing bytes after parameter blocks".into()));
    }
    let trainer = Trainer::from_parts(
        model,
        header.train.clone(),
        online,
        target,
        opt,
        header.step,
        header.skipped_steps,
    )?;
    Ok((trainer, header))
}
