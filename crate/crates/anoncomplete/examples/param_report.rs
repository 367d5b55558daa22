//! Trainable-parameter accounting for the three anonymized-setting
//! architectures at the published dimensions (type embeddings 300, value
//! embeddings 1200 or 500, hidden 1500, K = 500). The dynamic model is the
//! smallest of the three despite carrying a second LSTM.
//!
//!     cargo run --release -p anoncomplete --example param_report

use anoncomplete::pipeline::paper_comparison;

fn main() {
    let reports = paper_comparison(330);
    for r in &reports {
        println!("[{}]", r.mode);
        for (name, n) in &r.tensors {
            println!("  {name:<16} {n:>12}");
        }
        println!("  {:<16} {:>12}  ({:.2}M)", "total", r.total, r.total as f64 / 1e6);
        println!();
    }
    let total = |m: &str| reports.iter().find(|r| r.mode == m).unwrap().total;
    assert!(total("dynamic") < total("no_vars"));
    assert!(total("no_vars") < total("static"));
    println!(
        "ordering holds: dynamic {:.2}M < no_vars {:.2}M < static {:.2}M",
        total("dynamic") as f64 / 1e6,
        total("no_vars") as f64 / 1e6,
        total("static") as f64 / 1e6
    );
}
