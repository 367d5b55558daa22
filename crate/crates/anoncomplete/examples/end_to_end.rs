//! The whole pipeline in one run: generate a small corpus, preprocess it,
//! derive the anonymized view, train a dynamic-embedding model briefly, and
//! evaluate it. Artifacts land under target/example_runs/end_to_end.
//!
//!     cargo run --release -p anoncomplete --example end_to_end

use std::path::PathBuf;

use anoncomplete::anonymize::select_k;
use anoncomplete::corpus::read_cache;
use anoncomplete::model::Mode;
use anoncomplete::pipeline::{anonymize_cmd, gen_corpus_cmd, preprocess, train_cmd, KChoice};
use anoncomplete::synth::SynthConfig;
use anoncomplete::train::{parse_train_file, TrainFile};

fn main() {
    let dir = PathBuf::from("target/example_runs/end_to_end");
    std::fs::create_dir_all(&dir).unwrap();

    let jsonl = dir.join("corpus.jsonl");
    let n = gen_corpus_cmd(
        &jsonl,
        &SynthConfig {
            programs: 400,
            seed: 7,
            ..Default::default()
        },
    )
    .unwrap();
    println!("generated {n} programs -> {}", jsonl.display());

    let full = dir.join("full.anc");
    let out = preprocess(&jsonl, &full, 200, 7).unwrap();
    println!(
        "preprocessed: {} programs, {} tokens, {} vocabulary values",
        out.programs, out.tokens, out.vocab_values
    );

    let corpus = read_cache(&full).unwrap();
    let k = select_k(&corpus.programs, 0.99);
    println!("coverage rule picks K = {k}");

    let anon = dir.join("anon.anc");
    anonymize_cmd(&full, &anon, KChoice::Fixed(k), 0.99, 11, None).unwrap();

    let mut file: TrainFile = parse_train_file(
        "mode = dynamic\n\
         type_emb_dim = 16\n\
         value_emb_dim = 32\n\
         hidden_dim = 64\n\
         epochs = 8\n\
         batch_size = 4\n\
         lr = 0.004\n\
         decay = 0.85\n\
         seed = 42\n",
        None,
    )
    .unwrap();
    assert_eq!(file.train.mode, Mode::Dynamic);
    file.corpus = Some(anon.clone());
    file.out_dir = Some(dir.join("train-out"));

    println!("\ntraining a small dynamic model (8 epochs)...");
    let done = train_cmd(&file, None).unwrap();
    println!(
        "holdout accuracy {:.4}; checkpoint {}",
        done.final_holdout_accuracy.unwrap_or(0.0),
        done.final_checkpoint.display()
    );
    println!("metrics at {}", done.metrics_path.display());
}
