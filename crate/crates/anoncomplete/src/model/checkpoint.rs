use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::net::Model;
use crate::model::{Mode, ModelConfig};
use crate::tensor::params::{ParamSet, Tensor};
use crate::tensor::scalar::Scalar;

const MAGIC: &[u8; 4] = b"ANM1";
const VERSION: u32 = 1;

/// Checkpoint header: configuration plus the fingerprint of the vocabulary
/// the model was trained against.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointHeader {
    pub config: ModelConfig,
    pub vocab_fingerprint: u64,
    pub run_id: u64,
}

/// Writes `magic, header, named 32-bit float arrays`, little-endian.
pub fn save_checkpoint<S: Scalar>(
    model: &Model<S>,
    vocab_fingerprint: u64,
    run_id: u64,
    path: &Path,
) -> Result<()> {
    let err = |e| Error::io(path, e);
    let file = File::create(path).map_err(err)?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&run_id.to_le_bytes())?;
        let cfg = &model.config;
        for v in [
            cfg.mode.tag(),
            cfg.type_emb_dim as u32,
            cfg.value_emb_dim as u32,
            cfg.hidden_dim as u32,
            cfg.window as u32,
            cfg.num_types as u32,
            cfg.num_values as u32,
            cfg.attention as u32,
            cfg.pointer as u32,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&vocab_fingerprint.to_le_bytes())?;
        w.write_all(&(model.params.len() as u32).to_le_bytes())?;
        for (name, tensor) in model.params.iter() {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&(tensor.rows as u32).to_le_bytes())?;
            w.write_all(&(tensor.cols as u32).to_le_bytes())?;
            for &x in &tensor.data {
                w.write_all(&(x.to_f64() as f32).to_le_bytes())?;
            }
        }
        w.flush()
    })()
    .map_err(err)
}

/// Reads a checkpoint back; the stored 32-bit arrays convert into the
/// requested precision.
pub fn load_checkpoint<S: Scalar>(path: &Path) -> Result<(Model<S>, CheckpointHeader)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let format_err = |msg: String| Error::Format {
        path: path.to_path_buf(),
        msg,
    };

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != MAGIC {
        return Err(format_err("bad magic (not an ANM1 checkpoint)".into()));
    }

    let mut u32buf = [0u8; 4];
    let mut u64buf = [0u8; 8];
    let mut read_u32 = |r: &mut BufReader<File>| -> std::io::Result<u32> {
        r.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };

    (|| -> std::io::Result<std::result::Result<(Model<S>, CheckpointHeader), Error>> {
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Ok(Err(format_err(format!(
                "unsupported checkpoint version {version}"
            ))));
        }
        r.read_exact(&mut u64buf)?;
        let run_id = u64::from_le_bytes(u64buf);
        let mode_tag = read_u32(&mut r)?;
        let type_emb_dim = read_u32(&mut r)? as usize;
        let value_emb_dim = read_u32(&mut r)? as usize;
        let hidden_dim = read_u32(&mut r)? as usize;
        let window = read_u32(&mut r)? as usize;
        let num_types = read_u32(&mut r)? as usize;
        let num_values = read_u32(&mut r)? as usize;
        let attention = read_u32(&mut r)? != 0;
        let pointer = read_u32(&mut r)? != 0;
        r.read_exact(&mut u64buf)?;
        let vocab_fingerprint = u64::from_le_bytes(u64buf);

        let mode = match Mode::from_tag(mode_tag) {
            Ok(m) => m,
            Err(e) => return Ok(Err(e)),
        };
        let config = ModelConfig {
            mode,
            type_emb_dim,
            value_emb_dim,
            hidden_dim,
            window,
            num_types,
            num_values,
            attention,
            pointer,
        };

        let n_params = read_u32(&mut r)? as usize;
        let mut params: ParamSet<S> = ParamSet::new();
        for _ in 0..n_params {
            let name_len = read_u32(&mut r)? as usize;
            let mut name_buf = vec![0u8; name_len];
            r.read_exact(&mut name_buf)?;
            let name = String::from_utf8(name_buf)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            let rows = read_u32(&mut r)? as usize;
            let cols = read_u32(&mut r)? as usize;
            let mut data = Vec::with_capacity(rows * cols);
            let mut f32buf = [0u8; 4];
            for _ in 0..rows * cols {
                r.read_exact(&mut f32buf)?;
                data.push(S::from_f64(f32::from_le_bytes(f32buf) as f64));
            }
            params.push(name, Tensor { rows, cols, data });
        }

        let header = CheckpointHeader {
            config: config.clone(),
            vocab_fingerprint,
            run_id,
        };
        Ok(Model::from_parts(config, params).map(|m| (m, header)))
    })()
    .map_err(|e| Error::Format {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?
}

/// Checks a checkpoint against the corpus it is about to run on.
pub fn verify_fingerprint(header: &CheckpointHeader, corpus_fingerprint: u64) -> Result<()> {
    if header.vocab_fingerprint != corpus_fingerprint {
        return Err(Error::Fingerprint(format!(
            "checkpoint was trained against vocabulary {:016x}, corpus has {:016x}",
            header.vocab_fingerprint, corpus_fingerprint
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_model() -> Model<f32> {
        let config = ModelConfig {
            mode: Mode::Dynamic,
            type_emb_dim: 3,
            value_emb_dim: 4,
            hidden_dim: 5,
            window: 50,
            num_types: 6,
            num_values: 8,
            attention: true,
            pointer: true,
        };
        Model::new(config, 99).unwrap()
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let model = tiny_model();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("m.anm");
        let p2 = dir.path().join("m2.anm");
        save_checkpoint(&model, 0xfeed, 7, &p1).unwrap();
        let (back, header) = load_checkpoint::<f32>(&p1).unwrap();
        assert_eq!(header.vocab_fingerprint, 0xfeed);
        assert_eq!(header.run_id, 7);
        assert_eq!(back.config, model.config);
        for i in 0..model.params.len() {
            assert_eq!(back.params.name(i), model.params.name(i));
            assert_eq!(back.params.tensor(i), model.params.tensor(i));
        }
        save_checkpoint(&back, 0xfeed, 7, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn fingerprint_mismatch_is_detected() {
        let header = CheckpointHeader {
            config: tiny_model().config,
            vocab_fingerprint: 1,
            run_id: 0,
        };
        assert!(matches!(
            verify_fingerprint(&header, 2),
            Err(Error::Fingerprint(_))
        ));
        assert!(verify_fingerprint(&header, 1).is_ok());
    }

    #[test]
    fn truncated_file_is_a_format_error() {
        let model = tiny_model();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.anm");
        save_checkpoint(&model, 1, 1, &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
        assert!(load_checkpoint::<f32>(&p).is_err());
    }
}
