//! Central finite differences against the tape's gradients for the complete
//! dynamic model (both LSTMs, attention, parent connection, tied logits,
//! switcher, min loss) in 64-bit precision.
//!
//!     cargo run --release -p anoncomplete --example gradient_check

use anoncomplete::pipeline::{full_model_gradcheck, GradcheckSpec};

fn main() {
    let spec = GradcheckSpec::default();
    println!(
        "checking a dynamic-mode model (hidden {}, embeddings {}/{}, K {}) on a {}-token chunk",
        spec.hidden, spec.value_emb, spec.type_emb, spec.k, spec.chunk_len
    );
    let (report, counted) = full_model_gradcheck(&spec).unwrap();
    println!(
        "max relative error: {:.3e} over {} coordinates ({} loss positions)",
        report.max_rel_err, report.coords_checked, counted
    );
    if let Some((name, coord)) = &report.worst {
        println!("worst coordinate: {name}[{coord}]");
    }
    assert!(report.max_rel_err < 1e-4);
    println!("PASS (tolerance 1e-4)");
}
