//! The command-line surface: artifact formats, exit codes, fingerprint
//! checks.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anoncomplete"))
}

fn run_ok(args: &[&str], dir: &Path) -> String {
    let out = bin().args(args).current_dir(dir).output().unwrap();
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn pipeline_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    run_ok(
        &["gen-corpus", "--out", "c.jsonl", "--programs", "40", "--seed", "7"],
        d,
    );
    let out = run_ok(
        &["preprocess", "c.jsonl", "--out", "full.anc", "--max-values", "100"],
        d,
    );
    assert!(out.contains("40 programs"));
    assert!(d.join("full.vocab").exists());
    assert!(d.join("full.anc.manifest.json").exists());

    // Vocabulary file format: id<TAB>string<TAB>count per line.
    let vocab = std::fs::read_to_string(d.join("full.vocab")).unwrap();
    let first = vocab.lines().next().unwrap();
    let cols: Vec<&str> = first.split('\t').collect();
    assert_eq!(cols.len(), 3);
    assert_eq!(cols[0], "0");
    assert_eq!(cols[1], "<EMPTY>");

    run_ok(
        &["anonymize", "full.anc", "--out", "anon.anc", "--k", "auto", "--seed", "3"],
        d,
    );
    run_ok(&["strip", "full.anc", "--out", "strip.anc"], d);

    // Train a tiny model.
    std::fs::write(
        d.join("train.cfg"),
        "mode = dynamic\n\
         type_emb_dim = 8\n\
         value_emb_dim = 12\n\
         hidden_dim = 16\n\
         epochs = 1\n\
         batch_size = 8\n\
         corpus = anon.anc\n\
         out_dir = out\n",
    )
    .unwrap();
    run_ok(&["train", "--config", "train.cfg"], d);
    assert!(d.join("out/model.anm").exists());
    assert!(d.join("out/ckpt_epoch_0.anm").exists());
    let metrics = std::fs::read_to_string(d.join("out/metrics.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(metrics.lines().next().unwrap()).unwrap();
    assert_eq!(first["epoch"], 0);
    assert_eq!(first["split"], "train");
    assert!(first["loss"].is_f64());

    let eval = run_ok(
        &["eval", "--model", "out/model.anm", "--corpus", "anon.anc", "--per-category"],
        d,
    );
    assert!(eval.contains("accuracy"));
    assert!(eval.contains("via-pointer"));

    // Fingerprint mismatch: the model was trained on the anonymized view.
    let out = bin()
        .args(["eval", "--model", "out/model.anm", "--corpus", "full.anc"])
        .current_dir(d)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "fingerprint mismatch exits 3");

    // Bad input exits 2.
    let out = bin()
        .args(["preprocess", "missing.jsonl", "--out", "x.anc"])
        .current_dir(d)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Gradcheck exits 0 and prints the error magnitude.
    let out = run_ok(&["gradcheck", "--dims", "tiny"], d);
    assert!(out.contains("max relative error"));

    // Param report at paper dims shows the ordering line.
    let out = run_ok(&["param-report", "--paper"], d);
    assert!(out.contains("ordering: dynamic"));

    // Completion on a fresh prefix.
    run_ok(
        &["gen-corpus", "--out", "prefix.jsonl", "--programs", "1", "--seed", "99"],
        d,
    );
    let out = run_ok(
        &[
            "complete",
            "--model",
            "out/model.anm",
            "--corpus",
            "anon.anc",
            "--prefix",
            "prefix.jsonl",
            "--n",
            "5",
        ],
        d,
    );
    assert_eq!(out.lines().count(), 5, "one line per predicted value:\n{out}");
}

#[test]
fn identically_seeded_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(
        &["gen-corpus", "--out", "c.jsonl", "--programs", "30", "--seed", "5"],
        d,
    );
    for name in ["a.anc", "b.anc"] {
        run_ok(
            &["preprocess", "c.jsonl", "--out", name, "--max-values", "64"],
            d,
        );
    }
    assert_eq!(
        std::fs::read(d.join("a.anc")).unwrap(),
        std::fs::read(d.join("b.anc")).unwrap()
    );
    // Manifests carry the same run id (wall time may differ).
    let a: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(d.join("a.anc.manifest.json")).unwrap(),
    )
    .unwrap();
    let b: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(d.join("b.anc.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(a["run_id"], b["run_id"]);
    assert_eq!(a["version"], b["version"]);
}
