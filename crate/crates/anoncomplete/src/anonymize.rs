//! Variable-name anonymization: per-program random placeholders
//! `var1..varK`, the 99% coverage rule for choosing K, and the stripped
//! (no-variables) baseline view.

use std::collections::HashMap;

use crate::corpus::{
    is_dummy, Corpus, FlatProgram, StringTable, View, Vocabulary, NUM_RESERVED, RESERVED_NAMES,
    UNK_ID,
};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Per-program assignment from original value ids to placeholder ids.
pub type AnonMap = Vec<(u32, u32)>;

/// Restricts anonymization to values sitting under the listed node types.
/// With no filter every non-dummy leaf value is anonymized.
#[derive(Debug, Clone, Default)]
pub struct ValueFilter {
    pub types: Vec<String>,
}

impl ValueFilter {
    fn type_ids(&self, vocab: &Vocabulary) -> Vec<u32> {
        self.types.iter().map(|t| vocab.resolve_type(t)).collect()
    }
}

fn distinct_nondummy(program: &FlatProgram, filter_ids: Option<&[u32]>) -> Vec<u32> {
    let mut seen = Vec::new();
    for (i, &o) in program.orig.iter().enumerate() {
        if is_dummy(o) {
            continue;
        }
        if let Some(ids) = filter_ids {
            if !ids.contains(&program.tokens[i].0) {
                continue;
            }
        }
        if !seen.contains(&o) {
            seen.push(o);
        }
    }
    seen
}

/// Smallest K such that at least `coverage` of programs contain no more
/// than K distinct non-dummy values.
pub fn select_k(programs: &[FlatProgram], coverage: f64) -> usize {
    let mut counts: Vec<usize> = programs
        .iter()
        .map(|p| distinct_nondummy(p, None).len())
        .collect();
    counts.sort_unstable();
    if counts.is_empty() {
        return 1;
    }
    let need = (coverage * counts.len() as f64 - 1e-9).ceil().max(1.0) as usize;
    counts[need.min(counts.len()) - 1].max(1)
}

/// Placeholder vocabulary: the three dummies plus var1..varK.
pub fn placeholder_vocabulary(types: &StringTable, k: usize) -> Vocabulary {
    let mut names: Vec<String> = RESERVED_NAMES.iter().map(|s| s.to_string()).collect();
    for i in 1..=k {
        names.push(format!("var{i}"));
    }
    let n = names.len();
    Vocabulary {
        types: types.clone(),
        values: StringTable::from_names(names),
        value_counts: vec![0; n],
        to_orig: vec![UNK_ID; n],
        remap: Vec::new(),
    }
}

/// Anonymizes one program in place against an existing placeholder
/// vocabulary. The first K distinct non-dummy values (in order of first
/// appearance) map to a random K'-subset of placeholders; later distinct
/// values map to UNK. All occurrences of the same value share a placeholder.
pub fn anonymize_program(
    program: &mut FlatProgram,
    k: usize,
    rng: &mut Rng,
    filter_ids: Option<&[u32]>,
    keep_remap: Option<&[u32]>,
) -> Result<AnonMap> {
    if k < 1 {
        return Err(Error::Config("anonymization requires K >= 1".into()));
    }
    let distinct = distinct_nondummy(program, filter_ids);
    let assigned = distinct.len().min(k);
    let placeholders = rng.sample_distinct(k, assigned);
    let mut map: HashMap<u32, u32> = HashMap::new();
    let mut anon_map = AnonMap::new();
    for (rank, &orig) in distinct.iter().enumerate() {
        let ph = if rank < assigned {
            NUM_RESERVED + placeholders[rank] as u32
        } else {
            UNK_ID
        };
        map.insert(orig, ph);
        if ph != UNK_ID {
            anon_map.push((orig, ph));
        }
    }
    for (i, tok) in program.tokens.iter_mut().enumerate() {
        let o = program.orig[i];
        if is_dummy(o) {
            continue;
        }
        match (filter_ids, keep_remap) {
            (Some(ids), Some(remap)) if !ids.contains(&tok.0) => {
                // Outside the filter: keep the value, shifted past the
                // placeholder block.
                let v = remap[o as usize];
                tok.1 = if v == UNK_ID || is_dummy(v) { v } else { v + k as u32 };
            }
            _ => tok.1 = map.get(&o).copied().unwrap_or(UNK_ID),
        }
    }
    Ok(anon_map)
}

/// Anonymizes a whole corpus. Per-program generators derive from the global
/// seed and the program index, so programs can be processed independently.
pub fn anonymize_corpus(
    corpus: &Corpus,
    k: usize,
    seed: u64,
    filter: Option<&ValueFilter>,
) -> Result<Corpus> {
    if k < 1 {
        return Err(Error::Config("anonymization requires K >= 1".into()));
    }
    let filter_ids = filter.map(|f| f.type_ids(&corpus.vocab));
    let root = Rng::new(seed);

    let mut vocab = placeholder_vocabulary(&corpus.vocab.types, k);
    if filter.is_some() {
        // Retained (non-filtered) values follow the placeholder block,
        // keeping their original vocabulary order.
        let mut names = vocab.values.names().to_vec();
        for name in corpus.vocab.values.names().iter().skip(NUM_RESERVED as usize) {
            names.push(name.clone());
        }
        let n = names.len();
        vocab.values = StringTable::from_names(names);
        vocab.value_counts = vec![0; n];
        vocab.to_orig = vec![UNK_ID; n];
    }

    let mut programs = corpus.programs.clone();
    let mut anon_maps = Vec::with_capacity(programs.len());
    for (idx, p) in programs.iter_mut().enumerate() {
        let mut rng = root.substream(idx as u64);
        let map = anonymize_program(
            p,
            k,
            &mut rng,
            filter_ids.as_deref(),
            filter.map(|_| corpus.vocab.remap.as_slice()),
        )?;
        anon_maps.push(map);
    }

    let mut counts = vec![0u64; vocab.values.len()];
    for p in &programs {
        for &(_, v) in &p.tokens {
            counts[v as usize] += 1;
        }
    }
    vocab.value_counts = counts;

    Ok(Corpus {
        view: View::Anonymized { k: k as u32, seed },
        vocab,
        full_values: corpus.full_values.clone(),
        programs,
        anon_maps,
        run_id: corpus.run_id,
    })
}

/// Replaces every non-dummy value id with UNK; structure untouched.
pub fn strip_program(program: &mut FlatProgram) {
    for tok in &mut program.tokens {
        if !is_dummy(tok.1) {
            tok.1 = UNK_ID;
        }
    }
}

/// The no-variables baseline corpus: the vocabulary shrinks to the dummies.
pub fn strip_corpus(corpus: &Corpus) -> Corpus {
    let mut programs = corpus.programs.clone();
    for p in &mut programs {
        strip_program(p);
    }
    let names: Vec<String> = RESERVED_NAMES.iter().map(|s| s.to_string()).collect();
    let mut counts = vec![0u64; NUM_RESERVED as usize];
    for p in &programs {
        for &(_, v) in &p.tokens {
            counts[v as usize] += 1;
        }
    }
    let mut remap = vec![UNK_ID; corpus.full_values.len()];
    for d in 0..NUM_RESERVED {
        remap[d as usize] = d;
    }
    let vocab = Vocabulary {
        types: corpus.vocab.types.clone(),
        values: StringTable::from_names(names),
        value_counts: counts,
        to_orig: vec![0, 1, 2],
        remap,
    };
    Corpus {
        view: View::Stripped,
        vocab,
        full_values: corpus.full_values.clone(),
        programs,
        anon_maps: vec![Vec::new(); corpus.programs.len()],
        run_id: corpus.run_id,
    }
}
