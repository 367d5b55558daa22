//! Dynamic embeddings up close: every placeholder starts from the shared
//! initial embedding, a token's occurrence rewrites exactly its own slot,
//! and dummy values never move.
//!
//!     cargo run --release -p anoncomplete --example dynamic_embeddings

use anoncomplete::corpus::chunk::chunk;
use anoncomplete::corpus::{FlatProgram, EMPTY_ID, EOF_ID};
use anoncomplete::model::{run_chunk, CarriedState, Mode, Model, ModelConfig};

fn main() {
    let config = ModelConfig {
        mode: Mode::Dynamic,
        type_emb_dim: 8,
        value_emb_dim: 6,
        hidden_dim: 12,
        window: 50,
        num_types: 6,
        num_values: 8, // dummies + var1..var5
        attention: true,
        pointer: true,
    };
    let model: Model<f64> = Model::new(config, 42).unwrap();

    // Value stream: EMPTY, var1, var2, var1, EMPTY, EOF.
    let values = [EMPTY_ID, 3, 4, 3, EMPTY_ID, EOF_ID];
    let program = FlatProgram {
        tokens: values.iter().map(|&v| (3, v)).collect(),
        orig: values.to_vec(),
        parent: (0..values.len() as i32).map(|i| i - 1).collect(),
    };
    let chunks = chunk(&program, 50);
    let run = run_chunk(&model, &chunks[0], &CarriedState::fresh(&model.config)).unwrap();

    println!("first step (input EMPTY): placeholder logits are all equal");
    let logits = run.tape.value(run.steps[0].vocab_logits);
    println!(
        "  logits[var1..var5] = {:?}",
        logits[3..].iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>()
    );

    println!("\nafter the whole program, the carried bank shows which slots moved:");
    let carried = run.carried();
    for (v, slot) in carried.slot_values().iter().enumerate() {
        let who = match v {
            0 => "<EMPTY>".into(),
            1 => "<UNK>".into(),
            2 => "<EOF>".into(),
            _ => format!("var{}", v - 2),
        };
        match slot {
            None => println!("  {who:<8} untouched (still the shared initial embedding)"),
            Some((h, _)) => println!(
                "  {who:<8} updated, |h| = {:.4}",
                h.iter().map(|x| x * x).sum::<f64>().sqrt()
            ),
        }
    }
    println!("\nvar1 occurred twice, var2 once, var3..var5 and all dummies never.");
}
