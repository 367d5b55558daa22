//! Greedy completion: hide the last values of a program, let the model
//! predict them one at a time, feeding its own choices back.
//!
//!     cargo run --release -p anoncomplete --example complete

use std::path::PathBuf;

use anoncomplete::pipeline::{
    complete_cmd, gen_corpus_cmd, preprocess, train_cmd,
};
use anoncomplete::synth::{generate, write_jsonl, SynthConfig};
use anoncomplete::train::{parse_train_file, TrainFile};

fn main() {
    let dir = PathBuf::from("target/example_runs/complete");
    std::fs::create_dir_all(&dir).unwrap();

    let jsonl = dir.join("corpus.jsonl");
    gen_corpus_cmd(
        &jsonl,
        &SynthConfig {
            programs: 400,
            seed: 13,
            ..Default::default()
        },
    )
    .unwrap();
    let full = dir.join("full.anc");
    preprocess(&jsonl, &full, 200, 13).unwrap();

    let mut file: TrainFile = parse_train_file(
        "mode = static\n\
         type_emb_dim = 16\n\
         value_emb_dim = 32\n\
         hidden_dim = 64\n\
         epochs = 8\n\
         batch_size = 4\n\
         lr = 0.004\n\
         decay = 0.85\n\
         seed = 2\n",
        None,
    )
    .unwrap();
    file.corpus = Some(full.clone());
    file.out_dir = Some(dir.join("train-out"));
    println!("training a small full-data model (8 epochs)...");
    let done = train_cmd(&file, None).unwrap();

    // A held-out program as the prefix: its last 8 values get hidden.
    let prefix = dir.join("prefix.jsonl");
    let fresh = generate(&SynthConfig {
        programs: 1,
        seed: 999,
        ..Default::default()
    });
    write_jsonl(&fresh, &prefix).unwrap();

    println!("\ngreedy continuation of the last 8 positions:");
    let steps = complete_cmd(&done.final_checkpoint, &full, &prefix, 8, 13).unwrap();
    for s in &steps {
        println!(
            "  pos {:>3}  {:<18} p={:.3} via {:<10} (actual: {})",
            s.position, s.value, s.probability, s.mechanism, s.actual
        );
    }
    let hits = steps.iter().filter(|s| s.value == s.actual).count();
    println!("\n{hits} of {} match the hidden values.", steps.len());
}
