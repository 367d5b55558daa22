//! Corpus ingestion: serialized ASTs in, flattened token streams out.
//!
//! Programs arrive as line-delimited JSON node arrays, are flattened
//! depth-first into `(node type, node value)` token streams with parent
//! links, and are chunked for training. Vocabularies cut node values to the
//! most frequent entries; everything else resolves to UNK.

pub mod ast;
pub mod cache;
pub mod chunk;
pub mod flatten;
pub mod vocab;

pub use ast::{parse_ast_file, parse_ast_line, AstNode, ParseOutcome};
pub use cache::{read_cache, write_cache, Corpus, View};
pub use chunk::{chunk, chunk_with_targets, Chunk};
pub use flatten::{flatten, FlatProgram};
pub use vocab::{
    apply_vocabulary, build_vocabulary, is_dummy, InternTable, StringTable, Vocabulary, EMPTY_ID,
    EOF_ID, NUM_RESERVED, RESERVED_NAMES, UNK_ID,
};
