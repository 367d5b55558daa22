use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use anoncomplete::anonymize::ValueFilter;
use anoncomplete::model::Mode;
use anoncomplete::pipeline::{self, paper_comparison, paper_dims_config, GradcheckSpec, KChoice};
use anoncomplete::synth::SynthConfig;
use anoncomplete::train::read_train_file;
use anoncomplete::{Error, Result};

/// Code completion over flattened ASTs with anonymized variables.
#[derive(Parser)]
#[command(name = "anoncomplete", version, about)]
struct Cli {
    /// Seed fallback for subcommands that take one (env:
    /// ANONCOMPLETE_SEED).
    #[arg(long, global = true, env = "ANONCOMPLETE_SEED", default_value_t = 1)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic AST corpus (line-delimited JSON).
    GenCorpus(GenCorpusArgs),
    /// Parse, flatten and index a corpus into a binary cache.
    Preprocess(PreprocessArgs),
    /// Replace variable names with per-program random placeholders.
    Anonymize(AnonymizeArgs),
    /// Replace every non-dummy value with UNK (no-variables baseline).
    Strip(StripArgs),
    /// Train a model from a `key = value` config file.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a corpus cache.
    Eval(EvalArgs),
    /// Max-probability ensemble of two checkpoints over aligned views.
    EnsembleEval(EnsembleArgs),
    /// Greedy continuation of a program prefix.
    Complete(CompleteArgs),
    /// Finite-difference check of the full model's gradients.
    Gradcheck(GradcheckArgs),
    /// Trainable-parameter counts per named tensor.
    ParamReport(ParamReportArgs),
}

#[derive(Args)]
struct GenCorpusArgs {
    /// Output path (.jsonl).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2200)]
    programs: usize,
    /// Probability that a variable gets a rare, program-unique name.
    #[arg(long, default_value_t = 0.3)]
    rare_prob: f64,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Input corpus: one JSON node array per line.
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Keep only this many most-frequent node values.
    #[arg(long, default_value_t = 50000)]
    max_values: usize,
}

#[derive(Args)]
struct AnonymizeArgs {
    /// Full-view cache from `preprocess`.
    cache: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Placeholder count, or `auto` for the coverage rule.
    #[arg(long, default_value = "auto")]
    k: String,
    /// Fraction of programs whose distinct values must fit in K.
    #[arg(long, default_value_t = 0.99)]
    coverage: f64,
    /// Only anonymize values under these node types (comma-separated).
    #[arg(long)]
    value_filter: Option<String>,
}

#[derive(Args)]
struct StripArgs {
    cache: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Config file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Override the corpus path from the config.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Override the output directory from the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Override the worker count from the config.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Expand the per-category breakdown.
    #[arg(long)]
    per_category: bool,
    /// Emit the report as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long)]
    model_a: PathBuf,
    #[arg(long)]
    model_b: PathBuf,
    #[arg(long)]
    corpus_full: PathBuf,
    #[arg(long)]
    corpus_anon: PathBuf,
    #[arg(long)]
    per_category: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CompleteArgs {
    #[arg(long)]
    model: PathBuf,
    /// Corpus cache providing the vocabulary the model was trained with.
    #[arg(long)]
    corpus: PathBuf,
    /// File holding one program; its last N values are hidden and
    /// predicted greedily.
    #[arg(long)]
    prefix: PathBuf,
    #[arg(long, default_value_t = 10)]
    n: usize,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Dimension preset; only `tiny` is defined.
    #[arg(long, default_value = "tiny")]
    dims: String,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
}

#[derive(Args)]
struct ParamReportArgs {
    /// Read dims/mode from a train config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report the three anonymized-setting architectures at the published
    /// dimensions (300/1200/1500, K=500).
    #[arg(long)]
    paper: bool,
    #[arg(long, default_value_t = 330)]
    num_types: usize,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenCorpus(a) => {
            let cfg = SynthConfig {
                programs: a.programs,
                seed: cli.seed,
                rare_name_prob: a.rare_prob,
                ..Default::default()
            };
            let n = pipeline::gen_corpus_cmd(&a.out, &cfg)?;
            println!("wrote {n} programs to {}", a.out.display());
        }
        Command::Preprocess(a) => {
            let out = pipeline::preprocess(&a.corpus, &a.out, a.max_values, cli.seed)?;
            println!(
                "{} programs ({} rejected lines), {} tokens, {} vocabulary values",
                out.programs, out.rejected, out.tokens, out.vocab_values
            );
            println!(
                "cache: {}  vocabulary: {}",
                out.cache_path.display(),
                out.vocab_path.display()
            );
        }
        Command::Anonymize(a) => {
            let k = match a.k.as_str() {
                "auto" => KChoice::Auto,
                s => KChoice::Fixed(s.parse().map_err(|_| {
                    Error::Config(format!("--k expects an integer or 'auto', got '{s}'"))
                })?),
            };
            let filter = a.value_filter.map(|list| ValueFilter {
                types: list.split(',').map(str::trim).map(String::from).collect(),
            });
            let out = pipeline::anonymize_cmd(&a.cache, &a.out, k, a.coverage, cli.seed, filter)?;
            println!("anonymized with K = {} -> {}", out.k, out.cache_path.display());
        }
        Command::Strip(a) => {
            pipeline::strip_cmd(&a.cache, &a.out)?;
            println!("stripped view -> {}", a.out.display());
        }
        Command::Train(a) => {
            let mut file = read_train_file(&a.config)?;
            if let Some(c) = a.corpus {
                file.corpus = Some(c);
            }
            if let Some(o) = a.out_dir {
                file.out_dir = Some(o);
            }
            if let Some(w) = a.workers {
                file.train.workers = w;
            }
            let out = pipeline::train_cmd(&file, Some(&a.config))?;
            println!(
                "final checkpoint: {} (holdout accuracy {})",
                out.final_checkpoint.display(),
                out.final_holdout_accuracy
                    .map(|a| format!("{a:.4}"))
                    .unwrap_or_else(|| "n/a".into())
            );
            println!("metrics: {}", out.metrics_path.display());
        }
        Command::Eval(a) => {
            let report = pipeline::eval_cmd(&a.model, &a.corpus)?;
            if a.json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else if a.per_category {
                print!("{}", report.render_table());
            } else {
                println!(
                    "accuracy {:.4} ({} / {})",
                    report.accuracy, report.correct, report.total
                );
            }
        }
        Command::EnsembleEval(a) => {
            let report =
                pipeline::ensemble_cmd(&a.model_a, &a.model_b, &a.corpus_full, &a.corpus_anon)?;
            if a.json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else if a.per_category {
                print!("{}", report.render_table());
            } else {
                println!(
                    "ensemble accuracy {:.4} ({} / {})",
                    report.accuracy, report.correct, report.total
                );
            }
        }
        Command::Complete(a) => {
            let steps = pipeline::complete_cmd(&a.model, &a.corpus, &a.prefix, a.n, cli.seed)?;
            for s in steps {
                println!(
                    "{:>5}  {:<20} p={:.3}  via {:<10} (actual: {})",
                    s.position, s.value, s.probability, s.mechanism, s.actual
                );
            }
        }
        Command::Gradcheck(a) => {
            if a.dims != "tiny" {
                return Err(Error::Config(format!(
                    "unknown dims preset '{}' (only 'tiny' exists)",
                    a.dims
                )));
            }
            let spec = GradcheckSpec {
                eps: a.eps,
                seed: cli.seed,
                ..Default::default()
            };
            let (report, counted) = pipeline::full_model_gradcheck(&spec)?;
            println!(
                "max relative error {:.3e} over {} coordinates ({} loss positions)",
                report.max_rel_err, report.coords_checked, counted
            );
            if report.max_rel_err >= 1e-4 {
                return Err(Error::NonFinite(format!(
                    "gradient check failed: max relative error {:.3e} at {:?}",
                    report.max_rel_err, report.worst
                )));
            }
        }
        Command::ParamReport(a) => {
            let print_report = |r: &pipeline::ParamReport| {
                println!("[{}]", r.mode);
                for (name, n) in &r.tensors {
                    println!("  {name:<16} {n:>12}");
                }
                println!("  {:<16} {:>12}", "total", r.total);
            };
            if a.paper {
                let reports = paper_comparison(a.num_types);
                for r in &reports {
                    print_report(r);
                }
                let get = |m: &str| reports.iter().find(|r| r.mode == m).unwrap().total;
                println!(
                    "ordering: dynamic {} < no_vars {} < static {}",
                    get("dynamic"),
                    get("no_vars"),
                    get("static")
                );
            } else if let Some(cfg_path) = a.config {
                let file = read_train_file(&cfg_path)?;
                let t = &file.train;
                let num_values = match (t.mode, file.k, file.vocab_size) {
                    (Mode::NoVars, _, _) => 3,
                    (Mode::Static | Mode::Dynamic | Mode::DynamicFullData, Some(k), _) => k + 3,
                    (_, _, Some(v)) => v + 3,
                    (m, None, None) => {
                        return Err(Error::Config(format!(
                            "param-report for mode {} needs 'k =' or 'vocab_size =' in the config",
                            m.as_str()
                        )))
                    }
                };
                let config = anoncomplete::model::ModelConfig {
                    mode: t.mode,
                    type_emb_dim: t.type_emb_dim,
                    value_emb_dim: t.value_emb_dim,
                    hidden_dim: t.hidden_dim,
                    window: t.window,
                    num_types: file.num_types.unwrap_or(a.num_types),
                    num_values,
                    attention: t.attention,
                    pointer: t.pointer,
                };
                config.validate()?;
                print_report(&pipeline::param_report(&config));
            } else {
                let config = paper_dims_config(Mode::Dynamic, a.num_types);
                print_report(&pipeline::param_report(&config));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
