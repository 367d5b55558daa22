use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::Mode;
use crate::train::loss::Strategy;
use crate::train::run::TrainConfig;

/// A parsed `key = value` config file. Lines starting with `#` and blank
/// lines are ignored; unknown keys are rejected so typos fail loudly.
#[derive(Debug, Clone)]
pub struct TrainFile {
    pub train: TrainConfig,
    /// Corpus cache the run reads (relative paths resolve against the
    /// config file's directory).
    pub corpus: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    /// Expected placeholder count; validated against anonymized caches and
    /// used by the parameter report.
    pub k: Option<usize>,
    /// Value-vocabulary cutoff for the parameter report in full-data modes.
    pub vocab_size: Option<usize>,
    /// Type-vocabulary size for the parameter report.
    pub num_types: Option<usize>,
}

const KNOWN_KEYS: &[&str] = &[
    "mode",
    "type_emb_dim",
    "value_emb_dim",
    "hidden_dim",
    "window",
    "attention",
    "pointer",
    "strategy",
    "lr",
    "decay",
    "weight_decay",
    "epochs",
    "batch_size",
    "seed",
    "clip_norm",
    "holdout_fraction",
    "workers",
    "reanonymize_each_epoch",
    "corpus",
    "out_dir",
    "k",
    "vocab_size",
    "num_types",
];

pub fn parse_train_file(text: &str, base_dir: Option<&Path>) -> Result<TrainFile> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Malformed {
            line: lineno + 1,
            msg: format!("expected 'key = value', got '{line}'"),
        })?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Malformed {
                line: lineno + 1,
                msg: format!("unknown key '{key}'"),
            });
        }
        map.insert(key, value.trim().to_string());
    }

    let mut cfg = TrainConfig::default();
    let parse_usize = |map: &BTreeMap<String, String>, key: &str, dflt: usize| -> Result<usize> {
        match map.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("bad integer for {key}: '{v}'"))),
            None => Ok(dflt),
        }
    };
    let parse_f64 = |map: &BTreeMap<String, String>, key: &str, dflt: f64| -> Result<f64> {
        match map.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("bad number for {key}: '{v}'"))),
            None => Ok(dflt),
        }
    };
    let parse_bool = |map: &BTreeMap<String, String>, key: &str, dflt: bool| -> Result<bool> {
        match map.get(key).map(String::as_str) {
            None => Ok(dflt),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(v) => Err(Error::Config(format!("bad boolean for {key}: '{v}'"))),
        }
    };

    if let Some(m) = map.get("mode") {
        cfg.mode = Mode::parse(m)?;
    }
    if let Some(s) = map.get("strategy") {
        cfg.strategy = Strategy::parse(s)?;
    }
    cfg.type_emb_dim = parse_usize(&map, "type_emb_dim", cfg.type_emb_dim)?;
    cfg.value_emb_dim = parse_usize(&map, "value_emb_dim", cfg.value_emb_dim)?;
    cfg.hidden_dim = parse_usize(&map, "hidden_dim", cfg.hidden_dim)?;
    cfg.window = parse_usize(&map, "window", cfg.window)?;
    cfg.attention = parse_bool(&map, "attention", cfg.attention)?;
    cfg.pointer = parse_bool(&map, "pointer", cfg.pointer)?;
    cfg.lr = parse_f64(&map, "lr", cfg.lr)?;
    cfg.decay = parse_f64(&map, "decay", cfg.decay)?;
    cfg.weight_decay = parse_f64(&map, "weight_decay", cfg.weight_decay)?;
    cfg.epochs = parse_usize(&map, "epochs", cfg.epochs)?;
    cfg.batch_size = parse_usize(&map, "batch_size", cfg.batch_size)?;
    cfg.seed = parse_usize(&map, "seed", cfg.seed as usize)? as u64;
    cfg.clip_norm = parse_f64(&map, "clip_norm", cfg.clip_norm)?;
    cfg.holdout_fraction = parse_f64(&map, "holdout_fraction", cfg.holdout_fraction)?;
    cfg.workers = parse_usize(&map, "workers", cfg.workers)?;
    cfg.reanonymize_each_epoch =
        parse_bool(&map, "reanonymize_each_epoch", cfg.reanonymize_each_epoch)?;

    let resolve = |v: &String| -> PathBuf {
        let p = PathBuf::from(v);
        match (p.is_relative(), base_dir) {
            (true, Some(base)) => base.join(p),
            _ => p,
        }
    };
    let corpus = map.get("corpus").map(resolve);
    let out_dir = map.get("out_dir").map(resolve);
    let k = match map.get("k") {
        Some(v) => Some(
            v.parse()
                .map_err(|_| Error::Config(format!("bad integer for k: '{v}'")))?,
        ),
        None => None,
    };
    let vocab_size = match map.get("vocab_size") {
        Some(v) => Some(
            v.parse()
                .map_err(|_| Error::Config(format!("bad integer for vocab_size: '{v}'")))?,
        ),
        None => None,
    };
    let num_types = match map.get("num_types") {
        Some(v) => Some(
            v.parse()
                .map_err(|_| Error::Config(format!("bad integer for num_types: '{v}'")))?,
        ),
        None => None,
    };

    Ok(TrainFile {
        train: cfg,
        corpus,
        out_dir,
        k,
        vocab_size,
        num_types,
    })
}

pub fn read_train_file(path: &Path) -> Result<TrainFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_train_file(&text, path.parent())
}
