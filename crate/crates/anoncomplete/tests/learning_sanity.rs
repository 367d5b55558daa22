//! Can the network fit a trivial value dependency at all? Programs where
//! the next value is fully determined by the current one must be learnable
//! to high accuracy in a few hundred steps; this guards the whole
//! embedding -> LSTM -> head -> logits pathway.

use anoncomplete::corpus::{Corpus, FlatProgram, StringTable, View, Vocabulary, EOF_ID};
use anoncomplete::eval::evaluate;
use anoncomplete::model::Mode;
use anoncomplete::train::{train, Strategy, TrainConfig};

fn repeated_pairs_corpus(programs: usize) -> Corpus {
    // Value stream per program: EMPTY v v EMPTY w w ... EOF with a fixed
    // deterministic cycle v=3,4,5; every value occurs twice in a row, so
    // "next value = current value" half the time and "after EMPTY comes
    // the cycle successor" otherwise.
    let mut names: Vec<String> = vec!["<EMPTY>".into(), "<UNK>".into(), "<EOF>".into()];
    for i in 1..=3 {
        names.push(format!("var{i}"));
    }
    let values = StringTable::from_names(names);
    let types = StringTable::from_names(vec![
        "<EMPTY>".into(),
        "<UNK>".into(),
        "<EOF>".into(),
        "Stmt".into(),
        "Name".into(),
    ]);
    let mut progs = Vec::new();
    for p in 0..programs {
        let mut tokens = Vec::new();
        let mut orig = Vec::new();
        let mut parent = Vec::new();
        for group in 0..6 {
            let v = 3 + ((p + group) % 3) as u32;
            let base = tokens.len() as i32;
            tokens.push((3, 0));
            orig.push(0);
            parent.push(base - 1);
            for _ in 0..2 {
                tokens.push((4, v));
                orig.push(v + 100);
                parent.push(base);
            }
        }
        tokens.push((EOF_ID, EOF_ID));
        orig.push(EOF_ID);
        parent.push(-1);
        progs.push(FlatProgram {
            tokens,
            orig,
            parent,
        });
    }
    let n = progs.len();
    let nv = values.len();
    Corpus {
        view: View::Anonymized { k: 3, seed: 0 },
        vocab: Vocabulary {
            types,
            values,
            value_counts: vec![0; nv],
            to_orig: vec![0, 1, 2, 1, 1, 1],
            remap: Vec::new(),
        },
        full_values: StringTable::new(),
        programs: progs,
        anon_maps: (0..n)
            .map(|_| vec![(103, 3), (104, 4), (105, 5)])
            .collect(),
        run_id: 0,
    }
}

#[test]
fn static_model_fits_deterministic_values() {
    let corpus = repeated_pairs_corpus(24);
    let cfg = TrainConfig {
        mode: Mode::Static,
        type_emb_dim: 8,
        value_emb_dim: 16,
        hidden_dim: 32,
        window: 50,
        attention: true,
        pointer: false,
        strategy: Strategy::Standard,
        lr: 5e-3,
        decay: 1.0,
        weight_decay: 0.0,
        epochs: 80,
        batch_size: 2,
        seed: 5,
        clip_norm: 5.0,
        holdout_fraction: 0.0,
        workers: 1,
        reanonymize_each_epoch: false,
    };
    let out = train::<f32>(&corpus, &cfg, |_, _| Ok(())).unwrap();
    let report = evaluate(&out.model, &corpus).unwrap();
    assert!(
        report.in_vocab.accuracy() > 0.55,
        "static model failed to fit a deterministic pattern: in-vocab accuracy {:.3} (loss {:.3})",
        report.in_vocab.accuracy(),
        out.epochs.last().unwrap().train_loss
    );
}
