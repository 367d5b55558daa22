use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::flatten::FlatProgram;
use crate::error::{Error, Result};
use crate::rng::fnv1a_parts;

/// Reserved dummy ids, shared by the type table, the value vocabulary and
/// the full intern table. Fixed and never reassigned.
pub const EMPTY_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const EOF_ID: u32 = 2;
pub const NUM_RESERVED: u32 = 3;
pub const RESERVED_NAMES: [&str; 3] = ["<EMPTY>", "<UNK>", "<EOF>"];

pub fn is_dummy(id: u32) -> bool {
    id < NUM_RESERVED
}

/// Bidirectional string <-> id map with the three reserved dummies at
/// ids 0..3. Insertion order is preserved, so ids are first-seen order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StringTable {
    names: Vec<String>,
    map: HashMap<String, u32>,
}

impl StringTable {
    pub fn new() -> Self {
        let mut t = StringTable {
            names: Vec::new(),
            map: HashMap::new(),
        };
        for name in RESERVED_NAMES {
            t.intern(name);
        }
        t
    }

    pub fn from_names(names: Vec<String>) -> Self {
        let map = names
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        StringTable { names, map }
    }

    pub fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.map.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(s.to_string());
        self.map.insert(s.to_string(), id);
        id
    }

    /// Total resolution: unknown strings map to UNK.
    pub fn resolve(&self, s: &str) -> u32 {
        self.map.get(s).copied().unwrap_or(UNK_ID)
    }

    pub fn lookup(&self, s: &str) -> Option<u32> {
        self.map.get(s).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

impl Default for StringTable {
    fn default() -> Self {
        Self::new()
    }
}

/// Flatten-time interner: every observed node type and every observed node
/// value, no cutoff. Value ids from this table are the "original" identities
/// carried through anonymization and used for pointer matching.
#[derive(Debug, Clone, Default)]
pub struct InternTable {
    pub types: StringTable,
    pub values: StringTable,
}

impl InternTable {
    pub fn new() -> Self {
        InternTable {
            types: StringTable::new(),
            values: StringTable::new(),
        }
    }

    pub fn intern(&mut self, value: &str) -> u32 {
        self.values.intern(value)
    }

    pub fn intern_type(&mut self, type_name: &str) -> u32 {
        self.types.intern(type_name)
    }

    pub fn string(&self, value_id: usize) -> &str {
        self.values.name(value_id as u32)
    }
}

/// The model-visible vocabulary: all node types, and the `max_values` most
/// frequent node values plus the reserved dummies. Any value outside the map
/// resolves to UNK.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pub types: StringTable,
    pub values: StringTable,
    /// Occurrence counts aligned with `values`; the UNK slot holds the total
    /// count of out-of-vocabulary occurrences.
    pub value_counts: Vec<u64>,
    /// Vocab value id -> full intern id (UNK has no single origin and maps
    /// to UNK).
    pub to_orig: Vec<u32>,
    /// Full intern id -> vocab value id (UNK for values outside the map).
    pub remap: Vec<u32>,
}

impl Vocabulary {
    pub fn num_values(&self) -> usize {
        self.values.len()
    }

    pub fn resolve_value(&self, s: &str) -> u32 {
        self.values.resolve(s)
    }

    pub fn resolve_type(&self, s: &str) -> u32 {
        self.types.resolve(s)
    }

    /// Stable fingerprint over the ordered type and value string lists.
    pub fn fingerprint(&self) -> u64 {
        let parts = std::iter::once(b"types".as_slice())
            .chain(self.types.names().iter().map(|s| s.as_bytes()))
            .chain(std::iter::once(b"values".as_slice()))
            .chain(self.values.names().iter().map(|s| s.as_bytes()));
        fnv1a_parts(parts)
    }

    /// Writes the plain-text value vocabulary: `id<TAB>string<TAB>count`.
    pub fn write_text(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (id, name) in self.values.names().iter().enumerate() {
            writeln!(w, "{id}\t{name}\t{}", self.value_counts[id]).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_text(path: &Path) -> Result<Vec<(u32, String, u64)>> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut rows = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let mut parts = line.splitn(3, '\t');
            let id = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Malformed {
                    line: idx + 1,
                    msg: "bad id column".into(),
                })?;
            let name = parts.next().unwrap_or("").to_string();
            let count = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Malformed {
                    line: idx + 1,
                    msg: "bad count column".into(),
                })?;
            rows.push((id, name, count));
        }
        Ok(rows)
    }
}

/// Builds the vocabulary from a flattened corpus: the full type table plus
/// the `max_values` most frequent non-dummy values. Frequency ties break by
/// first occurrence (lower intern id), which keeps builds deterministic.
pub fn build_vocabulary(
    programs: &[FlatProgram],
    intern: &InternTable,
    max_values: usize,
) -> Vocabulary {
    let mut counts = vec![0u64; intern.values.len()];
    for p in programs {
        for &o in &p.orig {
            counts[o as usize] += 1;
        }
    }

    // Non-dummy intern ids sorted by count desc, intern id (first seen) asc.
    let mut candidates: Vec<u32> = (NUM_RESERVED..intern.values.len() as u32).collect();
    candidates.sort_by(|&a, &b| {
        counts[b as usize]
            .cmp(&counts[a as usize])
            .then(a.cmp(&b))
    });
    candidates.truncate(max_values);
    // Keep selected values in first-seen order for stable, readable ids.
    candidates.sort_unstable();

    let mut names: Vec<String> = RESERVED_NAMES.iter().map(|s| s.to_string()).collect();
    let mut value_counts: Vec<u64> = (0..NUM_RESERVED).map(|i| counts[i as usize]).collect();
    let mut to_orig: Vec<u32> = vec![EMPTY_ID, UNK_ID, EOF_ID];
    let mut remap: Vec<u32> = vec![UNK_ID; intern.values.len()];
    for d in 0..NUM_RESERVED {
        remap[d as usize] = d;
    }
    for &orig in &candidates {
        let id = names.len() as u32;
        names.push(intern.values.name(orig).to_string());
        value_counts.push(counts[orig as usize]);
        to_orig.push(orig);
        remap[orig as usize] = id;
    }
    // Everything unselected resolves to UNK; tally its mass there.
    let oov_total: u64 = (NUM_RESERVED as usize..intern.values.len())
        .filter(|&o| remap[o] == UNK_ID)
        .map(|o| counts[o])
        .sum();
    value_counts[UNK_ID as usize] += oov_total;

    Vocabulary {
        types: intern.types.clone(),
        values: StringTable::from_names(names),
        value_counts,
        to_orig,
        remap,
    }
}

/// Rewrites program value ids through the vocabulary remap (OOV -> UNK).
/// Type ids are already vocabulary ids because the type table is full.
pub fn apply_vocabulary(programs: &mut [FlatProgram], vocab: &Vocabulary) {
    for p in programs {
        for (tok, &o) in p.tokens.iter_mut().zip(&p.orig) {
            tok.1 = vocab.remap[o as usize];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn program_with_origs(origs: &[u32]) -> FlatProgram {
        FlatProgram {
            tokens: origs.iter().map(|&o| (EMPTY_ID, o)).collect(),
            orig: origs.to_vec(),
            parent: vec![-1; origs.len()],
        }
    }

    fn intern_values(strings: &[&str]) -> InternTable {
        let mut t = InternTable::new();
        for s in strings {
            t.intern(s);
        }
        t
    }

    #[test]
    fn top_m_by_frequency() {
        // a:5, b:3, c:1, max 2 -> {a, b}; c resolves to UNK.
        let intern = intern_values(&["a", "b", "c"]);
        let a = 3u32;
        let b = 4u32;
        let c = 5u32;
        let mut origs = vec![a; 5];
        origs.extend(vec![b; 3]);
        origs.push(c);
        let programs = vec![program_with_origs(&origs)];
        let vocab = build_vocabulary(&programs, &intern, 2);
        assert_eq!(vocab.num_values(), 5);
        assert_eq!(vocab.resolve_value("a"), 3);
        assert_eq!(vocab.resolve_value("b"), 4);
        assert_eq!(vocab.resolve_value("c"), UNK_ID);
        assert_eq!(vocab.value_counts[3], 5);
        assert_eq!(vocab.value_counts[UNK_ID as usize], 1);
    }

    #[test]
    fn max_values_zero_maps_all_to_unk() {
        let intern = intern_values(&["a", "b"]);
        let programs = vec![program_with_origs(&[3, 4, 3])];
        let vocab = build_vocabulary(&programs, &intern, 0);
        assert_eq!(vocab.num_values(), NUM_RESERVED as usize);
        assert_eq!(vocab.resolve_value("a"), UNK_ID);
        assert_eq!(vocab.resolve_value("b"), UNK_ID);
    }

    #[test]
    fn ties_break_by_first_occurrence() {
        // b and c tie at 2; b was seen first and wins the last slot.
        let intern = intern_values(&["a", "b", "c"]);
        let programs = vec![program_with_origs(&[3, 3, 3, 4, 5, 4, 5])];
        let vocab = build_vocabulary(&programs, &intern, 2);
        assert_ne!(vocab.resolve_value("b"), UNK_ID);
        assert_eq!(vocab.resolve_value("c"), UNK_ID);
    }

    #[test]
    fn resolution_is_total() {
        let intern = intern_values(&["a"]);
        let programs = vec![program_with_origs(&[3])];
        let vocab = build_vocabulary(&programs, &intern, 10);
        assert_eq!(vocab.resolve_value("never-seen"), UNK_ID);
        assert_eq!(vocab.resolve_type("NoSuchType"), UNK_ID);
    }

    #[test]
    fn vocab_text_round_trip() {
        let intern = intern_values(&["alpha", "beta"]);
        let programs = vec![program_with_origs(&[3, 4, 4])];
        let vocab = build_vocabulary(&programs, &intern, 8);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.vocab");
        vocab.write_text(&path).unwrap();
        let rows = Vocabulary::read_text(&path).unwrap();
        assert_eq!(rows.len(), vocab.num_values());
        assert_eq!(rows[3].1, "alpha");
        assert_eq!(rows[4], (4, "beta".to_string(), 2));
    }

    #[test]
    fn fingerprint_changes_with_content() {
        let intern = intern_values(&["a"]);
        let programs = vec![program_with_origs(&[3])];
        let v1 = build_vocabulary(&programs, &intern, 10);
        let intern2 = intern_values(&["b"]);
        let v2 = build_vocabulary(&programs, &intern2, 10);
        assert_ne!(v1.fingerprint(), v2.fingerprint());
    }
}
