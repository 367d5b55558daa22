use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::corpus::flatten::FlatProgram;
use crate::corpus::vocab::{StringTable, Vocabulary};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"ANC1";
const VERSION: u32 = 1;

/// Which transformation produced the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    Full,
    Anonymized { k: u32, seed: u64 },
    Stripped,
}

impl View {
    fn tag(self) -> u32 {
        match self {
            View::Full => 0,
            View::Anonymized { .. } => 1,
            View::Stripped => 2,
        }
    }
}

/// A preprocessed corpus: programs as flat token streams, the model-visible
/// vocabulary, and the full value intern table that backs original ids.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub view: View,
    pub vocab: Vocabulary,
    /// Full (uncut) value strings; `FlatProgram::orig` indexes this.
    pub full_values: StringTable,
    pub programs: Vec<FlatProgram>,
    /// Per program, orig value id -> placeholder id. Empty unless anonymized.
    pub anon_maps: Vec<Vec<(u32, u32)>>,
    /// Id of the run manifest that produced this artifact.
    pub run_id: u64,
}

impl Corpus {
    pub fn fingerprint(&self) -> u64 {
        self.vocab.fingerprint()
    }

    /// Inverse anonymization lookup for one program.
    pub fn placeholder_to_orig(&self, program_idx: usize, placeholder: u32) -> Option<u32> {
        self.anon_maps
            .get(program_idx)?
            .iter()
            .find(|&&(_, p)| p == placeholder)
            .map(|&(o, _)| o)
    }

    pub fn token_count(&self) -> usize {
        self.programs.iter().map(FlatProgram::len).sum()
    }
}

struct Writer<W: Write> {
    w: W,
}

impl<W: Write> Writer<W> {
    fn u32(&mut self, x: u32) -> std::io::Result<()> {
        self.w.write_all(&x.to_le_bytes())
    }
    fn i32(&mut self, x: i32) -> std::io::Result<()> {
        self.w.write_all(&x.to_le_bytes())
    }
    fn u64(&mut self, x: u64) -> std::io::Result<()> {
        self.w.write_all(&x.to_le_bytes())
    }
    fn str(&mut self, s: &str) -> std::io::Result<()> {
        self.u32(s.len() as u32)?;
        self.w.write_all(s.as_bytes())
    }
    fn u32s(&mut self, xs: &[u32]) -> std::io::Result<()> {
        for &x in xs {
            self.u32(x)?;
        }
        Ok(())
    }
}

struct Reader<R: Read> {
    r: R,
}

impl<R: Read> Reader<R> {
    fn u32(&mut self) -> std::io::Result<u32> {
        let mut b = [0u8; 4];
        self.r.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn i32(&mut self) -> std::io::Result<i32> {
        let mut b = [0u8; 4];
        self.r.read_exact(&mut b)?;
        Ok(i32::from_le_bytes(b))
    }
    fn u64(&mut self) -> std::io::Result<u64> {
        let mut b = [0u8; 8];
        self.r.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }
    fn str(&mut self) -> std::io::Result<String> {
        let n = self.u32()? as usize;
        let mut buf = vec![0u8; n];
        self.r.read_exact(&mut buf)?;
        String::from_utf8(buf).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
    fn u32s(&mut self, n: usize) -> std::io::Result<Vec<u32>> {
        (0..n).map(|_| self.u32()).collect()
    }
}

pub fn write_cache(corpus: &Corpus, path: &Path) -> Result<()> {
    let err = |e| Error::io(path, e);
    let file = File::create(path).map_err(err)?;
    let mut w = Writer {
        w: BufWriter::new(file),
    };
    (|| -> std::io::Result<()> {
        w.w.write_all(MAGIC)?;
        w.u32(VERSION)?;
        w.u64(corpus.run_id)?;
        w.u32(corpus.view.tag())?;
        let (k, seed) = match corpus.view {
            View::Anonymized { k, seed } => (k, seed),
            _ => (0, 0),
        };
        w.u32(k)?;
        w.u64(seed)?;
        w.u64(corpus.vocab.fingerprint())?;

        let v = &corpus.vocab;
        w.u32(v.types.len() as u32)?;
        for name in v.types.names() {
            w.str(name)?;
        }
        w.u32(v.values.len() as u32)?;
        for (i, name) in v.values.names().iter().enumerate() {
            w.str(name)?;
            w.u64(v.value_counts[i])?;
        }
        w.u32s(&v.to_orig)?;
        w.u32(v.remap.len() as u32)?;
        w.u32s(&v.remap)?;

        w.u32(corpus.full_values.len() as u32)?;
        for name in corpus.full_values.names() {
            w.str(name)?;
        }

        w.u32(corpus.programs.len() as u32)?;
        for (pi, p) in corpus.programs.iter().enumerate() {
            w.u32(p.len() as u32)?;
            for &(t, val) in &p.tokens {
                w.u32(t)?;
                w.u32(val)?;
            }
            w.u32s(&p.orig)?;
            for &par in &p.parent {
                w.i32(par)?;
            }
            let map = corpus.anon_maps.get(pi).map(Vec::as_slice).unwrap_or(&[]);
            w.u32(map.len() as u32)?;
            for &(o, ph) in map {
                w.u32(o)?;
                w.u32(ph)?;
            }
        }
        w.w.flush()
    })()
    .map_err(err)
}

pub fn read_cache(path: &Path) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader {
        r: BufReader::new(file),
    };
    let bad = |msg: &str| Error::Format {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };

    let mut magic = [0u8; 4];
    r.r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != MAGIC {
        return Err(bad("bad magic (not an ANC1 corpus cache)"));
    }
    (|| -> std::io::Result<Corpus> {
        let version = r.u32()?;
        let run_id = r.u64()?;
        let view_tag = r.u32()?;
        let k = r.u32()?;
        let seed = r.u64()?;
        let stored_fp = r.u64()?;

        let n_types = r.u32()? as usize;
        let types: Vec<String> = (0..n_types).map(|_| r.str()).collect::<std::io::Result<_>>()?;
        let n_vals = r.u32()? as usize;
        let mut value_names = Vec::with_capacity(n_vals);
        let mut value_counts = Vec::with_capacity(n_vals);
        for _ in 0..n_vals {
            value_names.push(r.str()?);
            value_counts.push(r.u64()?);
        }
        let to_orig = r.u32s(n_vals)?;
        let n_remap = r.u32()? as usize;
        let remap = r.u32s(n_remap)?;

        let n_full = r.u32()? as usize;
        let full: Vec<String> = (0..n_full).map(|_| r.str()).collect::<std::io::Result<_>>()?;

        let n_programs = r.u32()? as usize;
        let mut programs = Vec::with_capacity(n_programs);
        let mut anon_maps = Vec::with_capacity(n_programs);
        for _ in 0..n_programs {
            let t = r.u32()? as usize;
            let mut tokens = Vec::with_capacity(t);
            for _ in 0..t {
                let ty = r.u32()?;
                let val = r.u32()?;
                tokens.push((ty, val));
            }
            let orig = r.u32s(t)?;
            let parent: Vec<i32> = (0..t).map(|_| r.i32()).collect::<std::io::Result<_>>()?;
            let m = r.u32()? as usize;
            let mut map = Vec::with_capacity(m);
            for _ in 0..m {
                let o = r.u32()?;
                let ph = r.u32()?;
                map.push((o, ph));
            }
            programs.push(FlatProgram {
                tokens,
                orig,
                parent,
            });
            anon_maps.push(map);
        }

        let vocab = Vocabulary {
            types: StringTable::from_names(types),
            values: StringTable::from_names(value_names),
            value_counts,
            to_orig,
            remap,
        };
        let view = match view_tag {
            0 => View::Full,
            1 => View::Anonymized { k, seed },
            2 => View::Stripped,
            _ => {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    "unknown view tag",
                ))
            }
        };
        let corpus = Corpus {
            view,
            vocab,
            full_values: StringTable::from_names(full),
            programs,
            anon_maps,
            run_id,
        };
        if version != VERSION {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("unsupported cache version {version}"),
            ));
        }
        if corpus.vocab.fingerprint() != stored_fp {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "vocabulary fingerprint does not match stored header",
            ));
        }
        Ok(corpus)
    })()
    .map_err(|e| Error::Format {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}
