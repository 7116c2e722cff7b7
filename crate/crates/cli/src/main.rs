mod config;
mod output;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mmlda::composition::node_seed;
use mmlda::corpus::simulate_dataset;
use mmlda::corpus::{split_dataset, BlockDocument, ConditionLabel, Modality};
use mmlda::evaluation::{
    compare_nmi, evaluate, export_topic_vectors, extrapolation_csv, interpolation_csv,
    nmi_comparison_csv, nmi_table, EvalSettings,
};
use mmlda::tuning::{trace_csv, tune_weights, TuneTarget};
use mmlda::{build_model, ArchitectureKind, ComposedModel, Dataset, WeightConfig};
use serde::Serialize;

use config::RunConfig;
use output::{write_atomic, write_text};

#[derive(Parser, Debug)]
#[command(
    name = "mmlda",
    version,
    about = "Hierarchical multimodal topic models for reward-comparison data"
)]
struct Cli {
    /// Seed for simulation, splitting, training and inference.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a dataset and write it as JSONL (default dataset.jsonl).
    Generate {
        #[arg(long)]
        days: Option<usize>,
    },
    /// Train on the training days; writes a snapshot and `<out>.log.json`.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        arch: Option<ArchitectureKind>,
    },
    /// Full evaluation on the test days into a report directory.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Second snapshot for a paired NMI comparison (IPM vs ECM).
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Predicted distribution of one modality for every block.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Modality code to predict: As, Ap, Rs, Rp or S.
        #[arg(long, default_value = "As", value_parser = parse_modality)]
        target: Modality,
        /// Comma-separated modality codes to condition on (default: all
        /// except the target).
        #[arg(long, value_delimiter = ',', value_parser = parse_modality)]
        from: Vec<Modality>,
        #[arg(long, value_enum, default_value_t = Part::Test)]
        split: Part,
    },
    /// Random search over modality weights; writes trace.csv and best.toml.
    Tune {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        arch: Option<ArchitectureKind>,
        /// Number of candidates, baseline included.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Per-block topic vectors of one node as CSV.
    Export {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        node: Option<String>,
        #[arg(long, value_enum, default_value_t = Part::Test)]
        split: Part,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Part {
    Train,
    Test,
    All,
}

fn parse_modality(s: &str) -> Result<Modality, String> {
    let code = s.trim().trim_start_matches("w_");
    Modality::from_code(code)
        .ok_or_else(|| format!("unknown modality {s:?} (expected As, Ap, Rs, Rp or S)"))
}

#[derive(Serialize)]
struct ErrorRecord {
    error: String,
    causes: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = ErrorRecord {
                error: e.to_string(),
                causes: e.chain().skip(1).map(ToString::to_string).collect(),
            };
            eprintln!("{}", serde_json::to_string(&record).expect("plain strings"));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.validate()?;
    if let Some(n) = cli.threads.or(cfg.threads) {
        anyhow::ensure!(n >= 1, "--threads must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let seed = cfg.seed(cli.seed);
    let out = cli.out;
    match cli.command {
        Command::Generate { days } => generate(
            &cfg,
            seed,
            days,
            out.unwrap_or_else(|| "dataset.jsonl".into()),
        ),
        Command::Train { dataset, arch } => train(
            &cfg,
            seed,
            &dataset,
            arch,
            out.unwrap_or_else(|| "model.json".into()),
        ),
        Command::Evaluate {
            model,
            dataset,
            compare,
        } => evaluate_cmd(
            &cfg,
            seed,
            &model,
            &dataset,
            compare.as_deref(),
            out.unwrap_or_else(|| "report".into()),
        ),
        Command::Predict {
            model,
            dataset,
            target,
            from,
            split,
        } => predict(
            &cfg,
            seed,
            &model,
            &dataset,
            target,
            &from,
            split,
            out.unwrap_or_else(|| "predictions.csv".into()),
        ),
        Command::Tune {
            dataset,
            arch,
            budget,
        } => tune(
            &cfg,
            seed,
            &dataset,
            arch,
            budget,
            out.unwrap_or_else(|| "tune".into()),
        ),
        Command::Export {
            model,
            dataset,
            node,
            split,
        } => export(
            &cfg,
            seed,
            &model,
            &dataset,
            node,
            split,
            out.unwrap_or_else(|| "topics.csv".into()),
        ),
    }
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    let f = File::open(path).with_context(|| format!("opening dataset {}", path.display()))?;
    Dataset::read_jsonl(BufReader::new(f))
        .with_context(|| format!("reading dataset {}", path.display()))
}

fn read_model(path: &Path) -> Result<ComposedModel> {
    let f = File::open(path).with_context(|| format!("opening model {}", path.display()))?;
    ComposedModel::read_snapshot(BufReader::new(f))
        .with_context(|| format!("reading model {}", path.display()))
}

fn part(data: &Dataset, which: Part) -> Result<Dataset> {
    if which == Part::All {
        return Ok(Dataset {
            days: data.days.clone(),
            split: None,
        });
    }
    let (train, test) = data.split_parts()?;
    Ok(if which == Part::Train { train } else { test })
}

fn settings(cfg: &RunConfig, seed: u64) -> EvalSettings {
    EvalSettings {
        schedule: cfg.evaluation.inference,
        seed,
    }
}

fn generate(cfg: &RunConfig, seed: u64, days: Option<usize>, out: PathBuf) -> Result<()> {
    let mut params = cfg.simulator.clone();
    params.seed = seed;
    if let Some(d) = days {
        params.n_days = d;
    }
    let mut data = simulate_dataset(&params)?;
    data.assign_split(cfg.split.train_fraction, seed)?;
    let mut bytes = Vec::new();
    data.write_jsonl(&mut bytes)?;
    anyhow::ensure!(
        Dataset::read_jsonl(bytes.as_slice())? == data,
        "dataset failed to round-trip"
    );
    write_atomic(&out, &bytes)?;

    println!(
        "wrote {} ({} days, {} blocks)",
        out.display(),
        data.n_days(),
        data.n_blocks()
    );
    println!("condition,self_reward_mean,partner_reward_mean");
    for (c, (s, p)) in ConditionLabel::ALL.iter().zip(data.reward_means()) {
        println!("{c},{s:.2},{p:.2}");
    }
    Ok(())
}

fn train(
    cfg: &RunConfig,
    seed: u64,
    dataset: &Path,
    arch: Option<ArchitectureKind>,
    out: PathBuf,
) -> Result<()> {
    let data = read_dataset(dataset)?;
    let (train, _) = data.split_parts()?;
    let docs: Vec<BlockDocument> = train.blocks().cloned().collect();
    let kind = arch.unwrap_or(cfg.model.architecture);
    let mut model = build_model(kind, &cfg.model.defaults)?;
    let log = model.train(&docs, cfg.schedule, seed)?;

    let mut bytes = Vec::new();
    model.write_snapshot(&mut bytes)?;
    anyhow::ensure!(
        ComposedModel::read_snapshot(bytes.as_slice())? == model,
        "snapshot failed to round-trip"
    );
    let log_path = out.with_extension("log.json");
    write_text(&log_path, &serde_json::to_string_pretty(&log)?)?;
    write_atomic(&out, &bytes)?;
    println!(
        "trained {kind} on {} blocks ({} sweeps per node); wrote {} and {}",
        docs.len(),
        cfg.schedule.inner_iterations * cfg.schedule.global_passes,
        out.display(),
        log_path.display()
    );
    Ok(())
}

fn evaluate_cmd(
    cfg: &RunConfig,
    seed: u64,
    model_path: &Path,
    dataset: &Path,
    compare: Option<&Path>,
    out: PathBuf,
) -> Result<()> {
    let model = read_model(model_path)?;
    let data = read_dataset(dataset)?;
    let (_, test) = data.split_parts()?;
    let settings = settings(cfg, seed);
    let mut report = evaluate(&model, &test, &settings, &cfg.evaluation.extrapolation())?;

    if let Some(other_path) = compare {
        let other = read_model(other_path)?;
        match (report.nmi_values(), other.architecture()) {
            (Some(first), Some(kind @ (ArchitectureKind::Ipm | ArchitectureKind::Ecm))) => {
                let second = nmi_table(&other, &test, &settings)?;
                let first_name = model.architecture().map_or("first", ArchitectureKind::name);
                let records = compare_nmi(first_name, &first, kind.name(), &second)?;
                write_text(
                    &out.join("nmi_comparison.csv"),
                    &nmi_comparison_csv(&records),
                )?;
                report.nmi_comparison = Some(records);
            }
            _ => report
                .notices
                .push("NMI comparison skipped: only IPM and ECM are compared".to_string()),
        }
    }

    let docs: Vec<BlockDocument> = test.blocks().cloned().collect();
    let topics = export_topic_vectors(&model, &docs, &cfg.evaluation.export_node, &settings)?;
    write_text(
        &out.join("interpolation.csv"),
        &interpolation_csv(&report.interpolation),
    )?;
    write_text(
        &out.join("extrapolation.csv"),
        &extrapolation_csv(&report.extrapolation),
    )?;
    write_text(&out.join("topic_vectors.csv"), &topics)?;
    if let Some(nmi) = &report.nmi {
        let mut csv = String::from("node,model,median,iqr\n");
        for (node, s) in nmi {
            csv.push_str(&format!("{node},{},{},{}\n", s.model, s.median, s.iqr));
        }
        write_text(&out.join("nmi.csv"), &csv)?;
    }
    let json = report.to_json()?;
    mmlda::evaluation::EvalReport::from_json(&json)?;
    write_text(&out.join("report.json"), &json)?;

    println!(
        "rand index {:.4} (chance {:.4}) over {} test blocks; report in {}",
        report.rand_index,
        report.chance_level,
        report.n_test_blocks,
        out.display()
    );
    for notice in &report.notices {
        println!("notice: {notice}");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn predict(
    cfg: &RunConfig,
    seed: u64,
    model_path: &Path,
    dataset: &Path,
    target: Modality,
    from: &[Modality],
    split: Part,
    out: PathBuf,
) -> Result<()> {
    let model = read_model(model_path)?;
    let data = part(&read_dataset(dataset)?, split)?;
    if from.contains(&target) {
        bail!("--from must not include the target modality {target}");
    }
    let inputs: Vec<Modality> = if from.is_empty() {
        Modality::ALL.into_iter().filter(|&m| m != target).collect()
    } else {
        from.to_vec()
    };
    let mut csv = String::from("day,block,condition");
    for w in 0..target.vocab_size() {
        csv.push_str(&format!(",p_{w}"));
    }
    csv.push('\n');
    for (i, doc) in data.blocks().enumerate() {
        let query = doc.restricted_to(&inputs);
        let dist = model.predict(
            &query,
            target,
            cfg.evaluation.inference,
            node_seed(seed, i, 7),
        )?;
        csv.push_str(&format!(
            "{},{},{}",
            doc.day_index, doc.block_index, doc.condition
        ));
        for p in dist {
            csv.push_str(&format!(",{p}"));
        }
        csv.push('\n');
    }
    write_text(&out, &csv)?;
    println!(
        "predicted {target} for {} blocks; wrote {}",
        data.n_blocks(),
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct WeightsFragment {
    model: WeightsOnly,
}

#[derive(Serialize)]
struct WeightsOnly {
    weights: WeightConfig,
}

fn tune(
    cfg: &RunConfig,
    seed: u64,
    dataset: &Path,
    arch: Option<ArchitectureKind>,
    budget: Option<usize>,
    out: PathBuf,
) -> Result<()> {
    let data = read_dataset(dataset)?;
    let (train, _) = data.split_parts()?;
    let (fit, held) = split_dataset(&train, 1.0 - cfg.tuning.heldout_fraction, seed)?;
    let fit: Vec<BlockDocument> = fit.blocks().cloned().collect();
    let held: Vec<BlockDocument> = held.blocks().cloned().collect();
    let mut search = cfg.tuning.budget;
    if let Some(n) = budget {
        search.n_candidates = n;
    }
    let target = TuneTarget {
        architecture: arch.unwrap_or(cfg.model.architecture),
        defaults: cfg.model.defaults,
        schedule: cfg.schedule,
        seed,
    };
    let (best, trace) = tune_weights(&fit, &held, &search, &target)?;

    let fragment = toml::to_string(&WeightsFragment {
        model: WeightsOnly { weights: best },
    })?;
    let parsed: RunConfig =
        toml::from_str(&fragment).context("best.toml is not a valid run config")?;
    anyhow::ensure!(
        parsed.model.defaults.weights == best,
        "best.toml did not round-trip"
    );
    write_text(&out.join("trace.csv"), &trace_csv(&trace))?;
    write_text(&out.join("best.toml"), &fragment)?;
    let best_score = trace.iter().map(|c| c.score).fold(f64::INFINITY, f64::min);
    println!(
        "{} candidates for {}; best held-out KL {best_score:.5}; wrote {}",
        trace.len(),
        target.architecture,
        out.display()
    );
    Ok(())
}

fn export(
    cfg: &RunConfig,
    seed: u64,
    model_path: &Path,
    dataset: &Path,
    node: Option<String>,
    split: Part,
    out: PathBuf,
) -> Result<()> {
    let model = read_model(model_path)?;
    let data = part(&read_dataset(dataset)?, split)?;
    let node = node.unwrap_or_else(|| cfg.evaluation.export_node.clone());
    let docs: Vec<BlockDocument> = data.blocks().cloned().collect();
    let csv = export_topic_vectors(&model, &docs, &node, &settings(cfg, seed))?;
    write_text(&out, &csv)?;
    println!(
        "exported {node} topic vectors for {} blocks to {}",
        docs.len(),
        out.display()
    );
    Ok(())
}
