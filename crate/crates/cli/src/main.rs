use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deckscan::detect::{benchmark, BenchDetector, CannyConfig, Classifier, ClassifierConfig, BENCH_HEADER};
use deckscan::env::{read_trace, write_trace, BridgeEnv, TRACE_HEADER};
use deckscan::harness::{
    build_detector, compare_dirs, eval_scenario, record_episode, render_replay, resolve_model,
    run_scenario_with_model, write_episodes, EpisodeMetrics, ExperimentSpec, ModelSource, PolicyKind,
    CLASSIFIER_LOG_HEADER, EPISODES_FILE, MANIFEST_FILE,
};
use deckscan::io::{csv_bytes, write_atomic, write_csv, CsvRow};
use deckscan::ppo::{evaluate, summarize, ActorCritic, Policy};
use deckscan::render::{gen_dataset, load_dataset, RenderConfig};
use deckscan::rng::stream;
use deckscan::{Error, Result};

#[derive(Parser)]
#[command(name = "deckscan", version, about = "Bridge-deck crack survey simulator")]
struct Cli {
    /// Scenario/experiment config file (key=value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Crack detector; overrides the config's `detector`.
    #[arg(long, global = true, value_parser = ["canny", "cnn", "oracle"])]
    detector: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a PPO policy (or run the random baseline) for every seed.
    Train(TrainArgs),
    /// Evaluate a checkpoint or the random policy on held-out layouts.
    Evaluate(EvaluateArgs),
    /// Accuracy and latency of the detectors on a patch corpus.
    BenchDetectors(BenchArgs),
    /// Write a labeled patch corpus.
    GenDataset(GenArgs),
    /// Train the patch classifier on a corpus.
    TrainClassifier(TrainClassifierArgs),
    /// Aggregate finished runs against a reference run.
    Compare(CompareArgs),
    /// Print an episode trace step by step.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Classifier weights for the cnn detector.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Generate a corpus and train the classifier first.
    #[arg(long, conflicts_with = "model")]
    train_model: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    n_seeds: Option<usize>,
    #[arg(long, value_parser = ["ppo", "random"])]
    policy: Option<String>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory holding actor.bin and critic.bin.
    #[arg(long, required_unless_present = "random")]
    checkpoint: Option<PathBuf>,
    /// Evaluate the uniform random policy instead.
    #[arg(long, conflicts_with = "checkpoint")]
    random: bool,
    #[arg(long)]
    episodes: Option<usize>,
    /// Take the most likely action instead of sampling.
    #[arg(long)]
    deterministic: bool,
    /// Also record the first episode as a trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    data: PathBuf,
    /// Classifier weights; without them only Canny and the oracle run.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Fraction of patches showing a true crack.
    #[arg(long, default_value_t = 0.5)]
    balance: f64,
}

#[derive(Args)]
struct TrainClassifierArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    /// Model path; defaults to `<out>/model.bin`.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Reference run directory (100% completion time).
    #[arg(long)]
    reference: PathBuf,
    /// Other run directories.
    runs: Vec<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Emit the trace as CSV instead of text frames.
    #[arg(long)]
    csv: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.kind());
            ExitCode::FAILURE
        }
    }
}

/// Config file plus the global overrides.
fn load_spec(cli: &Cli) -> Result<ExperimentSpec> {
    let mut spec = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentSpec::parse(&text)?
        }
        None => ExperimentSpec::default(),
    };
    if let Some(seed) = cli.seed {
        spec.scenario.seed = seed;
    }
    if let Some(d) = &cli.detector {
        spec.scenario.detector = d.parse()?;
    }
    if let Some(out) = &cli.out {
        spec.out_dir = out.clone();
    }
    Ok(spec)
}

fn apply_model(spec: &mut ExperimentSpec, m: &ModelArgs) {
    if let Some(path) = &m.model {
        spec.model = ModelSource::File(path.clone());
    } else if m.train_model {
        spec.model = ModelSource::Train(Default::default());
    }
}

fn out_dir(cli: &Cli, default: &Path) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| default.to_path_buf())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Train(a) => {
            let mut spec = load_spec(&cli)?;
            if let Some(n) = a.episodes {
                spec.ppo.total_episodes = n;
            }
            if let Some(n) = a.n_seeds {
                spec.n_seeds = n;
            }
            if let Some(p) = &a.policy {
                spec.policy = p.parse()?;
            }
            apply_model(&mut spec, &a.model);
            spec.validate()?;
            let model = resolve_model(&spec)?;
            let mut progress = |seed: u64, row: &deckscan::ppo::TrainLogRow| {
                println!(
                    "seed {seed} update {} episodes {} mean_reward {:.2} entropy {:.3}",
                    row.update, row.episodes, row.mean_ep_reward, row.entropy
                );
            };
            let run = run_scenario_with_model(&spec, model.as_ref(), Some(&mut progress))?;
            for s in &run.seeds {
                let records: Vec<f64> = s.evaluation.iter().map(|m| m.reward as f64).collect();
                let mean = records.iter().sum::<f64>() / records.len() as f64;
                println!("seed {} evaluation mean_reward {mean:.2} -> {}", s.seed, s.dir.display());
            }
            Ok(())
        }
        Command::Evaluate(a) => {
            let mut spec = load_spec(&cli)?;
            apply_model(&mut spec, &a.model);
            spec.policy = if a.random { PolicyKind::Random } else { PolicyKind::Ppo };
            spec.n_seeds = 1;
            if let Some(n) = a.episodes {
                spec.eval_episodes = n;
            }
            spec.eval_stochastic = !a.deterministic;
            spec.validate()?;
            let model = resolve_model(&spec)?;
            let detector = build_detector(&spec.scenario, model.as_ref())?;
            let seed = spec.scenario.seed;
            let scenario = eval_scenario(&spec.scenario, seed);
            let net = a.checkpoint.as_deref().map(ActorCritic::load).transpose()?;
            let policy = match &net {
                Some(net) => Policy::Actor { net, deterministic: a.deterministic },
                None => Policy::Random,
            };
            let records = evaluate(policy, BridgeEnv::new(scenario.clone(), detector.clone())?, spec.eval_episodes, seed)?;
            let rows: Vec<EpisodeMetrics> = records
                .iter()
                .map(|r| EpisodeMetrics::from_record(seed, spec.policy, spec.scenario.detector, r))
                .collect();
            write_atomic(&spec.out_dir.join(MANIFEST_FILE), spec.manifest().as_bytes())?;
            write_episodes(&spec.out_dir.join(EPISODES_FILE), &rows)?;
            if let Some(path) = &a.trace {
                let mut env = BridgeEnv::new(scenario, detector)?;
                let trace = record_episode(&mut env, policy, &mut stream(seed, &[0]))?;
                write_trace(path, &trace)?;
            }
            let s = summarize(&records);
            println!(
                "episodes {} mean_reward {:.2} std {:.2} mean_steps {:.1} completion {:.2}",
                s.episodes, s.mean_reward, s.std_reward, s.mean_steps, s.completion_rate
            );
            Ok(())
        }
        Command::BenchDetectors(a) => {
            let data = load_dataset(&a.data)?;
            let model = a.model.as_deref().map(Classifier::load).transpose()?;
            let mut dets = vec![BenchDetector::Canny(CannyConfig::default())];
            if let Some(m) = &model {
                dets.push(BenchDetector::Cnn(m));
            }
            dets.push(BenchDetector::Oracle { flip: 0.0 });
            let rows = benchmark(&dets, &data, a.repetitions, cli.seed.unwrap_or(0))?;
            let path = out_dir(&cli, Path::new(".")).join("bench.csv");
            write_csv(&path, BENCH_HEADER, &rows)?;
            for r in &rows {
                println!(
                    "{} accuracy {:.4} recall {:.4} latency_ms {:.4}",
                    r.detector, r.accuracy, r.recall, r.latency_ms_mean
                );
            }
            Ok(())
        }
        Command::GenDataset(a) => {
            let dir = cli.out.clone().ok_or_else(|| Error::InvalidArgument("gen-dataset needs --out".into()))?;
            let rows = gen_dataset(a.n, a.balance, &RenderConfig::default(), cli.seed.unwrap_or(0), &dir)?;
            println!("{} patches -> {}", rows.len(), dir.display());
            Ok(())
        }
        Command::TrainClassifier(a) => {
            let data = load_dataset(&a.data)?;
            let cfg = ClassifierConfig {
                epochs: a.epochs,
                batch_size: a.batch_size,
                learning_rate: a.learning_rate,
                seed: cli.seed.unwrap_or(0),
                ..Default::default()
            };
            let (model, report) = deckscan::detect::train_classifier(&data, &cfg)?;
            let dir = out_dir(&cli, &a.data);
            let model_path = a.model.clone().unwrap_or_else(|| dir.join("model.bin"));
            model.save(&model_path)?;
            write_csv(&dir.join("classifier_log.csv"), CLASSIFIER_LOG_HEADER, &report.epochs)?;
            println!(
                "validation_accuracy {:.4} -> {}",
                report.final_validation_accuracy(),
                model_path.display()
            );
            Ok(())
        }
        Command::Compare(a) => {
            let report = compare_dirs(&a.runs, &a.reference)?;
            let path = out_dir(&cli, Path::new(".")).join("comparison.csv");
            report.write(&path)?;
            for r in &report.rows {
                println!(
                    "{} mean_reward {:.2} mean_sim_seconds {:.1} relative_time_pct {:.1}",
                    r.run, r.mean_reward, r.mean_sim_seconds, r.relative_time_pct
                );
            }
            Ok(())
        }
        Command::Replay(a) => {
            let trace = read_trace(&a.trace)?;
            let text = if a.csv {
                let mut header = TRACE_HEADER.to_vec();
                header.push("r_cum");
                let mut cum = 0i64;
                let rows: Vec<Vec<String>> = trace
                    .iter()
                    .map(|r| {
                        cum += r.reward.total;
                        let mut f = r.fields();
                        f.push(cum.to_string());
                        f
                    })
                    .collect();
                String::from_utf8_lossy(&csv_bytes(&header, &rows)?).into_owned()
            } else {
                let spec = load_spec(&cli)?;
                render_replay(&trace, spec.scenario.cols(), spec.scenario.rows())
            };
            match &cli.out {
                Some(dir) => write_atomic(&dir.join(if a.csv { "replay.csv" } else { "replay.txt" }), text.as_bytes())?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}
