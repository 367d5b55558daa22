//! The four ways to combine pointer and vocabulary losses at positions
//! where the target is both in-vocabulary and copyable: pointer priority,
//! vocabulary priority, their minimum, and a per-position coin flip. The
//! minimum is never above either priority.
//!
//!     cargo run --release -p anoncomplete --example loss_strategies

use anoncomplete::corpus::chunk::chunk;
use anoncomplete::corpus::FlatProgram;
use anoncomplete::model::{run_chunk, CarriedState, Mode, Model, ModelConfig};
use anoncomplete::rng::Rng;
use anoncomplete::train::targets::TargetKind;
use anoncomplete::train::{position_loss, Strategy};

fn main() {
    let config = ModelConfig {
        mode: Mode::Static,
        type_emb_dim: 8,
        value_emb_dim: 10,
        hidden_dim: 16,
        window: 50,
        num_types: 6,
        num_values: 9,
        attention: true,
        pointer: true,
    };
    let model: Model<f64> = Model::new(config, 17).unwrap();

    // var3 repeats: positions predicting its reoccurrence are Both-sided.
    let values = [0u32, 3, 4, 5, 3, 5, 4, 3, 0, 2];
    let program = FlatProgram {
        tokens: values.iter().map(|&v| (3, v)).collect(),
        orig: values.to_vec(),
        parent: (0..values.len() as i32).map(|i| i - 1).collect(),
    };
    let chunks = chunk(&program, 50);
    let both_positions: Vec<usize> = chunks[0]
        .targets
        .iter()
        .enumerate()
        .filter(|(_, t)| matches!(t, TargetKind::Both(..)))
        .map(|(i, _)| i)
        .collect();
    println!("both-sided positions: {both_positions:?}");

    let strategies = [
        Strategy::PtrPriority,
        Strategy::VocabPriority,
        Strategy::Min,
        Strategy::Random,
    ];
    println!("\n{:<6} {:>14} {:>14} {:>14} {:>14}", "pos", "ptr", "vocab", "min", "random");
    for &pos in &both_positions {
        let mut row = Vec::new();
        for strat in strategies {
            let mut run =
                run_chunk(&model, &chunks[0], &CarriedState::fresh(&model.config)).unwrap();
            let step = run.steps[pos].clone();
            let mut rng = Rng::new(1);
            let loss = position_loss(&mut run.tape, &step, chunks[0].targets[pos], strat, &mut rng)
                .unwrap();
            row.push(run.tape.scalar_value(loss));
        }
        println!(
            "{:<6} {:>14.6} {:>14.6} {:>14.6} {:>14.6}",
            pos, row[0], row[1], row[2], row[3]
        );
        assert!(row[2] <= row[0] + 1e-12 && row[2] <= row[1] + 1e-12);
    }
    println!("\nmin is pointwise below both priorities, as it must be.");
}
