//! `substruct` command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 resource or budget error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use substruct::counterexamples::{doubled_pattern_pair, path_counterexample_pair, verify_pair};
use substruct::counting::{count, CountMode, Pattern};
use substruct::datasets::{
    gen_erdos_renyi, gen_random_regular, label_dataset, load_labeled, read_meta, read_splits,
    split_indices, write_labels, write_unlabeled, DatasetMeta, SplitSpec, Task, PAPER_RR_CONFIGS,
};
use substruct::harness::{
    cmd_report, cmd_reproduce, cmd_verify, BenchmarkRow, Check, Report, ReproduceOptions, Scale,
    VerifyOptions,
};
use substruct::io::{self, load_graphs, serialize_graph};
use substruct::models::{train_lrp, TrainConfig};
use substruct::wl::{wl_refine_pair, Iterations, Verdict, WlOptions, DEFAULT_BUDGET};
use substruct::{AttributedGraph, Error};

#[derive(Parser)]
#[command(name = "substruct", version, about = "Substructure counting, k-WL and LRP toolkit")]
struct Cli {
    /// Root seed; required by commands that draw random numbers.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Largest number of k-tuples a WL run may color.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Er,
    Rr,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Triangle,
    #[value(name = "3star")]
    ThreeStar,
}

impl TaskArg {
    fn task(self) -> Task {
        match self {
            TaskArg::Triangle => Task::triangle(),
            TaskArg::ThreeStar => Task::three_star(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Matching,
    Containment,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructionArg {
    Doubled,
    Path,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Lrp,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an unlabeled dataset directory.
    Gen {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        /// ER node count.
        #[arg(long, default_value_t = 10)]
        nodes: usize,
        /// ER edge probability.
        #[arg(long, default_value_t = 0.3)]
        p: f64,
    },
    /// Count labels for a dataset directory.
    Label {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        task: TaskArg,
    },
    /// Count a pattern in every graph of a file.
    Count {
        #[arg(long)]
        graphs: PathBuf,
        /// `builtin:<name>` or a graph file.
        #[arg(long)]
        pattern: String,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run k-WL on two graphs.
    Wl {
        #[arg(long)]
        g1: PathBuf,
        #[arg(long)]
        g2: PathBuf,
        #[arg(long)]
        k: usize,
        /// Number of rounds or `stable`.
        #[arg(long, default_value = "stable")]
        iters: String,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Build (and optionally check) a counterexample pair.
    Counterexample {
        #[arg(long, value_enum)]
        construction: ConstructionArg,
        #[arg(long)]
        pattern: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long = "T")]
        t: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train an LRP model on a labeled dataset directory.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long, value_enum, default_value = "lrp")]
        model: ModelArg,
        #[arg(long = "H", default_value_t = 16)]
        hidden: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        /// `model.json,metrics.csv`
        #[arg(long, value_delimiter = ',', num_args = 1..=2)]
        out: Vec<PathBuf>,
    },
    /// Run verification sweeps (`all` or one check name).
    Verify {
        check: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the benchmark rows over several seeds and summarize.
    Reproduce {
        /// Row name or `all`.
        row: String,
        #[arg(long, default_value = "desk")]
        scale: String,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge report files into one CSV.
    Report {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Error(Error),
    Usage(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. }
        | Error::SizeLimitExceeded { .. }
        | Error::PatternTooLarge { .. }
        | Error::Overflow(_)
        | Error::GenerationFailure(_)
        | Error::Io(_)
        | Error::Internal(_) => 3,
        _ => 2,
    }
}

fn need_seed(seed: Option<u64>, what: &str) -> Result<u64, Failure> {
    seed.ok_or_else(|| Failure::Usage(format!("{what} needs --seed")))
}

fn write_or_print(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load_pattern(spec: &str) -> Result<Pattern, Failure> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return Ok(Pattern::builtin(name)?);
    }
    let g = single_graph(Path::new(spec))?;
    Ok(Pattern::named(spec, g)?)
}

fn single_graph(path: &Path) -> Result<AttributedGraph, Failure> {
    let mut gs = load_graphs(path)?;
    if gs.len() != 1 {
        return Err(Failure::Usage(format!(
            "{} holds {} graphs, expected one",
            path.display(),
            gs.len()
        )));
    }
    Ok(gs.remove(0))
}

fn parse_iterations(s: &str) -> Result<Iterations, Failure> {
    if s == "stable" {
        return Ok(Iterations::UntilStable);
    }
    s.parse()
        .map(Iterations::Fixed)
        .map_err(|_| Failure::Usage(format!("--iters expects a number or `stable`, got `{s}`")))
}

fn histogram_json(h: &[(u32, usize)]) -> serde_json::Value {
    json!(h.iter().map(|&(c, n)| [c as usize, n]).collect::<Vec<_>>())
}

fn run(cli: Cli) -> CmdResult {
    let budget = cli.budget;
    match cli.command {
        Command::Gen {
            family,
            count,
            out,
            nodes,
            p,
        } => {
            let seed = need_seed(cli.seed, "gen")?;
            let (graphs, meta) = match family {
                Family::Er => (
                    gen_erdos_renyi(count, nodes, p, seed)?,
                    DatasetMeta {
                        generator: "er".into(),
                        params: json!({ "count": count, "m": nodes, "p": p }),
                        seed,
                    },
                ),
                Family::Rr => (
                    gen_random_regular(count, &PAPER_RR_CONFIGS, seed)?,
                    DatasetMeta {
                        generator: "rr".into(),
                        params: json!({ "count": count, "configs": PAPER_RR_CONFIGS }),
                        seed,
                    },
                ),
            };
            let splits = split_indices(count, &SplitSpec::paper(seed))?;
            write_unlabeled(&out, &graphs, &meta, &splits)?;
            println!("wrote {count} graphs to {}", out.display());
        }
        Command::Label { dataset, task } => {
            let meta = read_meta(&dataset)?;
            let graphs = io::read_jsonl(&dataset.join("graphs.jsonl"))?;
            let ds = label_dataset(
                graphs,
                task.task(),
                DatasetMeta {
                    generator: meta.generator,
                    params: meta.params,
                    seed: meta.seed,
                },
            )?;
            write_labels(&dataset, &ds)?;
            println!("labeled {} graphs, variance {}", ds.len(), ds.variance);
        }
        Command::Count {
            graphs,
            pattern,
            mode,
            out,
        } => {
            let p = load_pattern(&pattern)?;
            let gs = load_graphs(&graphs)?;
            let mode = match mode {
                ModeArg::Matching => CountMode::Matching,
                ModeArg::Containment => CountMode::Containment,
            };
            use rayon::prelude::*;
            let counts: Vec<u64> = gs
                .par_iter()
                .map(|g| count(g, &p, mode))
                .collect::<Result<_, _>>()?;
            let mut csv = String::from("graph_id,count\n");
            for (i, c) in counts.iter().enumerate() {
                writeln!(csv, "{i},{c}").expect("write to string");
            }
            write_or_print(out.as_deref(), &csv)?;
        }
        Command::Wl {
            g1,
            g2,
            k,
            iters,
            trace,
        } => {
            let (a, b) = (single_graph(&g1)?, single_graph(&g2)?);
            let iterations = parse_iterations(&iters)?;
            let r = wl_refine_pair(&a, &b, WlOptions { k, iterations, budget })?;
            let verdict = match r.verdict {
                Verdict::DistinguishedAtIteration(t) => format!("distinguished at iteration {t}"),
                Verdict::IndistinguishableAfter(t) => format!("indistinguishable after {t} iterations"),
                Verdict::IndistinguishableStable => "indistinguishable (stable)".to_string(),
            };
            println!("{verdict}");
            if let Some(path) = trace {
                let first_difference = r.histories[0]
                    .iter()
                    .zip(&r.histories[1])
                    .position(|(x, y)| x != y)
                    .map(|t| {
                        json!({
                            "iteration": t,
                            "g1": histogram_json(&r.histories[0][t]),
                            "g2": histogram_json(&r.histories[1][t]),
                        })
                    });
                let doc = json!({
                    "k": k,
                    "iterations": iterations,
                    "verdict": r.verdict,
                    "class_counts": r.class_counts,
                    "first_difference": first_difference,
                });
                fs::write(path, serde_json::to_string_pretty(&doc).expect("json"))?;
            }
        }
        Command::Counterexample {
            construction,
            pattern,
            k,
            t,
            m,
            verify,
            out,
        } => {
            let (cp, k, iterations) = match construction {
                ConstructionArg::Doubled => {
                    let spec = pattern
                        .ok_or_else(|| Failure::Usage("doubled needs --pattern".into()))?;
                    let p = load_pattern(&spec)?;
                    (doubled_pattern_pair(&p)?, k.unwrap_or(2), Iterations::UntilStable)
                }
                ConstructionArg::Path => {
                    let (Some(k), Some(t), Some(m)) = (k, t, m) else {
                        return Err(Failure::Usage("path needs --k, --T and --m".into()));
                    };
                    (path_counterexample_pair(k, t, m)?, k, Iterations::Fixed(t))
                }
            };
            let verification = if verify {
                Some(verify_pair(&cp, k, iterations, budget)?)
            } else {
                None
            };
            let doc = json!({
                "construction": cp.construction,
                "pattern": cp.expected.pattern.name(),
                "mode": cp.expected.mode,
                "expected": { "g1": cp.expected.count_g1, "g2": cp.expected.count_g2 },
                "in_regime": cp.in_regime,
                "g1": serialize_graph(&cp.g1),
                "g2": serialize_graph(&cp.g2),
                "verification": verification,
            });
            let text = serde_json::to_string_pretty(&doc).expect("json") + "\n";
            write_or_print(out.as_deref(), &text)?;
            if let Some(v) = verification {
                if !v.pass {
                    return Err(Failure::Verification(format!(
                        "counts {}/{}, {:?}, expected {:?}",
                        v.count_g1, v.count_g2, v.verdict, v.expectation
                    )));
                }
            }
        }
        Command::Train {
            dataset,
            task,
            model: ModelArg::Lrp,
            hidden,
            lr,
            epochs,
            batch_size,
            out,
        } => {
            let seed = need_seed(cli.seed, "train")?;
            let ds = load_labeled(&dataset, task.task())?;
            let splits = match read_splits(&dataset) {
                Ok(s) => s,
                Err(Error::FileNotFound(_)) => split_indices(ds.len(), &SplitSpec::paper(seed))?,
                Err(e) => return Err(e.into()),
            };
            let cfg = TrainConfig {
                hidden,
                lr,
                epochs,
                batch_size,
                seed,
            };
            let outcome = train_lrp(
                &ds.subset(&splits.train),
                &ds.subset(&splits.val),
                &ds.subset(&splits.test),
                ds.variance,
                &cfg,
            )?;
            let model_path = out.first().cloned().unwrap_or_else(|| "model.json".into());
            let metrics_path = out.get(1).cloned().unwrap_or_else(|| "metrics.csv".into());
            fs::write(&model_path, serde_json::to_string(&outcome.model).expect("json"))?;
            let mut csv = String::from("epoch,train_mse,val_mse,test_mse,test_mse_over_variance\n");
            for e in &outcome.history {
                writeln!(
                    csv,
                    "{},{},{},{},{}",
                    e.epoch, e.train_mse, e.val_mse, e.test_mse, e.test_mse_over_variance
                )
                .expect("write to string");
            }
            fs::write(&metrics_path, csv)?;
            println!(
                "best epoch {}: test MSE {:.4e}, normalized {:.4e}",
                outcome.best.epoch, outcome.best.test_mse, outcome.best.test_mse_over_variance
            );
        }
        Command::Verify { check, out } => {
            let checks: Vec<Check> = if check == "all" {
                Check::ALL.to_vec()
            } else {
                vec![check.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?]
            };
            let seed = if checks.iter().any(|c| c.is_stochastic()) {
                need_seed(cli.seed, "this check")?
            } else {
                cli.seed.unwrap_or(0)
            };
            let opts = VerifyOptions { seed, budget };
            let mut reports = Vec::new();
            let mut failed = Vec::new();
            for c in checks {
                let r = cmd_verify(c, &opts)?;
                match r.first_failure() {
                    None => println!(
                        "PASS {} ({} instances, {:.1}s)",
                        r.id,
                        r.instances.len(),
                        r.wall_clock_secs
                    ),
                    Some(f) => {
                        println!("FAIL {}: first failing instance {}: {}", r.id, f.id, f.detail);
                        failed.push(r.id.clone());
                    }
                }
                reports.push(Report::Verification(r));
            }
            if let Some(path) = out {
                fs::write(path, serde_json::to_string_pretty(&reports).expect("json"))?;
            }
            if !failed.is_empty() {
                return Err(Failure::Verification(format!("failed: {}", failed.join(", "))));
            }
        }
        Command::Reproduce {
            row,
            scale,
            runs,
            epochs,
            out,
        } => {
            let seed = need_seed(cli.seed, "reproduce")?;
            let scale: Scale = scale.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
            let rows: Vec<BenchmarkRow> = if row == "all" {
                BenchmarkRow::ALL.to_vec()
            } else {
                vec![row.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?]
            };
            let mut opts = ReproduceOptions::new(seed, scale);
            opts.runs = runs;
            opts.train.epochs = epochs;
            opts.budget = budget;
            let mut reports = Vec::new();
            let mut failed = Vec::new();
            for r in rows {
                let rep = cmd_reproduce(r, &opts)?;
                println!(
                    "{} {}: best {:.3e} median {:.3e} (reference {:.2e} / {:.2e}){}",
                    if rep.pass { "PASS" } else { "FAIL" },
                    rep.id,
                    rep.best_normalized_mse,
                    rep.median_normalized_mse,
                    rep.reference_best,
                    rep.reference_median,
                    rep.wl_floor.map_or(String::new(), |f| format!(
                        ", 2-WL floor {:.3e} vs LRP {:.3e}",
                        f.normalized_floor, f.lrp_normalized_mse
                    ))
                );
                if !rep.pass {
                    failed.push(rep.id.clone());
                }
                reports.push(Report::Experiment(rep));
            }
            if let Some(path) = out {
                fs::write(path, serde_json::to_string_pretty(&reports).expect("json"))?;
            }
            if !failed.is_empty() {
                return Err(Failure::Verification(format!("failed: {}", failed.join(", "))));
            }
        }
        Command::Report { inputs, out } => {
            let csv = cmd_report(&inputs)?;
            write_or_print(out.as_deref(), &csv)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
