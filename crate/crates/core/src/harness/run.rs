use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::spec::{ClassifierTraining, ExperimentSpec, ModelSource, PolicyKind};
use crate::detect::{
    train_classifier, CannyDetector, Classifier, ClassifierConfig, CnnDetector, CrackDetector, EpochStats,
    OracleDetector,
};
use crate::env::{BridgeEnv, DetectorKind, ScenarioConfig};
use crate::error::{Error, Result};
use crate::io::{write_atomic, write_csv, CsvRow};
use crate::ppo::{evaluate, train_with, EpisodeRecord, Policy, TrainLogRow, TRAIN_LOG_HEADER};
use crate::render::{gen_dataset, load_dataset, RenderConfig};
use crate::rng::{derive_seed, TAG_EVAL};

pub const EPISODES_HEADER: &[&str] = &[
    "seed",
    "episode",
    "policy",
    "detector",
    "reward",
    "steps",
    "sim_seconds",
    "scans",
    "cracks_detected",
    "total_cracks",
    "false_positives",
    "pauses",
    "revisits",
    "completed",
];

pub const CLASSIFIER_LOG_HEADER: &[&str] = &["epoch", "train_loss", "train_accuracy", "validation_accuracy"];

pub const EPISODES_FILE: &str = "episodes.csv";
pub const TRAINING_EPISODES_FILE: &str = "training_episodes.csv";
pub const TRAINING_LOG_FILE: &str = "training_log.csv";
pub const MANIFEST_FILE: &str = "run_manifest";

/// One episode in the shared metrics schema used by every policy and detector.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub seed: u64,
    pub episode: u64,
    pub policy: PolicyKind,
    pub detector: DetectorKind,
    pub reward: i64,
    pub steps: u32,
    pub sim_seconds: f64,
    pub scans: u32,
    pub cracks_detected: usize,
    pub total_cracks: usize,
    pub false_positives: u32,
    pub pauses: u32,
    pub revisits: u32,
    pub completed: bool,
}

impl EpisodeMetrics {
    pub fn from_record(seed: u64, policy: PolicyKind, detector: DetectorKind, r: &EpisodeRecord) -> Self {
        EpisodeMetrics {
            seed,
            episode: r.episode,
            policy,
            detector,
            reward: r.reward,
            steps: r.steps,
            sim_seconds: r.sim_seconds,
            scans: r.scans,
            cracks_detected: r.cracks_detected,
            total_cracks: r.total_cracks,
            false_positives: r.false_positives,
            pauses: r.pauses,
            revisits: r.revisits,
            completed: r.completed,
        }
    }
}

impl CsvRow for EpisodeMetrics {
    fn fields(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            self.episode.to_string(),
            self.policy.to_string(),
            self.detector.to_string(),
            self.reward.to_string(),
            self.steps.to_string(),
            format!("{:.3}", self.sim_seconds),
            self.scans.to_string(),
            self.cracks_detected.to_string(),
            self.total_cracks.to_string(),
            self.false_positives.to_string(),
            self.pauses.to_string(),
            self.revisits.to_string(),
            u8::from(self.completed).to_string(),
        ]
    }
}

pub fn write_episodes(path: &Path, rows: &[EpisodeMetrics]) -> Result<()> {
    write_csv(path, EPISODES_HEADER, rows)
}

pub fn read_episodes(path: &Path) -> Result<Vec<EpisodeMetrics>> {
    let mut rdr = csv::Reader::from_path(path)?;
    if rdr.headers()?.iter().ne(EPISODES_HEADER.iter().copied()) {
        return Err(Error::Corrupt { path: path.into(), detail: "unexpected episodes header".into() });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let bad = |i: usize| Error::Corrupt {
            path: path.into(),
            detail: format!("bad `{}` value `{}`", EPISODES_HEADER[i], &rec[i]),
        };
        macro_rules! num {
            ($i:expr) => {
                rec[$i].parse().map_err(|_| bad($i))?
            };
        }
        out.push(EpisodeMetrics {
            seed: num!(0),
            episode: num!(1),
            policy: rec[2].parse().map_err(|_| bad(2))?,
            detector: rec[3].parse().map_err(|_| bad(3))?,
            reward: num!(4),
            steps: num!(5),
            sim_seconds: num!(6),
            scans: num!(7),
            cracks_detected: num!(8),
            total_cracks: num!(9),
            false_positives: num!(10),
            pauses: num!(11),
            revisits: num!(12),
            completed: rec[13] == *"1",
        });
    }
    Ok(out)
}

impl CsvRow for EpochStats {
    fn fields(&self) -> Vec<String> {
        vec![
            self.epoch.to_string(),
            format!("{:.6}", self.train_loss),
            format!("{:.6}", self.train_accuracy),
            format!("{:.6}", self.validation_accuracy),
        ]
    }
}

/// Generates a corpus under `dir/dataset`, trains the classifier, and writes
/// `dir/model.bin` and `dir/classifier_log.csv`.
pub fn gen_and_train_classifier(t: &ClassifierTraining, dir: &Path) -> Result<(Classifier, Vec<EpochStats>)> {
    let data_dir = dir.join("dataset");
    gen_dataset(t.patches, 0.5, &RenderConfig::default(), t.seed, &data_dir)?;
    let data = load_dataset(&data_dir)?;
    let cfg = ClassifierConfig { epochs: t.epochs, seed: t.seed, ..Default::default() };
    let (model, report) = train_classifier(&data, &cfg)?;
    model.save(&dir.join("model.bin"))?;
    write_csv(&dir.join("classifier_log.csv"), CLASSIFIER_LOG_HEADER, &report.epochs)?;
    Ok((model, report.epochs))
}

/// Builds the scenario's detector. The CNN needs `model`.
pub fn build_detector(scenario: &ScenarioConfig, model: Option<&Classifier>) -> Result<Arc<dyn CrackDetector>> {
    Ok(match scenario.detector {
        DetectorKind::Canny => Arc::new(CannyDetector::default()),
        DetectorKind::Oracle => Arc::new(OracleDetector { flip: scenario.oracle_flip }),
        DetectorKind::Cnn => {
            let model = model.ok_or_else(|| Error::Config("detector cnn needs a trained model".into()))?;
            Arc::new(CnnDetector { model: model.clone(), render: RenderConfig::default() })
        }
    })
}

/// Resolves the classifier a spec asks for, training it under the output
/// directory when requested.
pub fn resolve_model(spec: &ExperimentSpec) -> Result<Option<Classifier>> {
    match &spec.model {
        ModelSource::None => Ok(None),
        ModelSource::File(path) => Classifier::load(path).map(Some),
        ModelSource::Train(t) => gen_and_train_classifier(t, &spec.out_dir.join("classifier")).map(|(m, _)| Some(m)),
    }
}

/// Evaluation layouts come from a base seed disjoint from training layouts.
pub fn eval_scenario(scenario: &ScenarioConfig, run_seed: u64) -> ScenarioConfig {
    ScenarioConfig { seed: derive_seed(run_seed, &[TAG_EVAL]), ..scenario.clone() }
}

/// Uniform random masked actions on `n_episodes` layouts of the scenario.
pub fn random_baseline(
    scenario: &ScenarioConfig,
    detector: Arc<dyn CrackDetector>,
    n_episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeMetrics>> {
    let env = BridgeEnv::new(scenario.clone(), detector)?;
    let records = evaluate(Policy::Random, env, n_episodes, seed)?;
    Ok(records.iter().map(|r| EpisodeMetrics::from_record(seed, PolicyKind::Random, scenario.detector, r)).collect())
}

/// Results of one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub dir: PathBuf,
    pub log: Vec<TrainLogRow>,
    pub training: Vec<EpisodeMetrics>,
    pub evaluation: Vec<EpisodeMetrics>,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub seeds: Vec<SeedRun>,
}

impl ScenarioRun {
    pub fn evaluation(&self) -> Vec<EpisodeMetrics> {
        self.seeds.iter().flat_map(|s| s.evaluation.iter().cloned()).collect()
    }
}

/// Per-seed progress callback: seed and training log row.
pub type Progress<'a> = &'a mut dyn FnMut(u64, &TrainLogRow);

/// Trains (PPO) and evaluates every seed of the spec.
///
/// Layout of `out_dir`: `run_manifest`, `episodes.csv` (evaluation episodes
/// of all seeds) and one `seed_<n>/` per seed holding `training_log.csv`,
/// `training_episodes.csv`, `actor.bin`, `critic.bin` and its own
/// `episodes.csv`.
pub fn run_scenario(spec: &ExperimentSpec, progress: Option<Progress>) -> Result<ScenarioRun> {
    spec.validate()?;
    let model = resolve_model(spec)?;
    run_scenario_with_model(spec, model.as_ref(), progress)
}

pub fn run_scenario_with_model(
    spec: &ExperimentSpec,
    model: Option<&Classifier>,
    mut progress: Option<Progress>,
) -> Result<ScenarioRun> {
    spec.validate()?;
    let detector = build_detector(&spec.scenario, model)?;
    let kind = spec.scenario.detector;
    write_atomic(&spec.out_dir.join(MANIFEST_FILE), spec.manifest().as_bytes())?;
    let mut seeds = Vec::new();
    for seed in spec.seeds() {
        let dir = spec.out_dir.join(format!("seed_{seed}"));
        let eval_env = BridgeEnv::new(eval_scenario(&spec.scenario, seed), detector.clone())?;
        let (log, training, evaluation) = match spec.policy {
            PolicyKind::Random => {
                let ev = evaluate(Policy::Random, eval_env, spec.eval_episodes, seed)?;
                (Vec::new(), Vec::new(), ev)
            }
            PolicyKind::Ppo => {
                let env = BridgeEnv::new(ScenarioConfig { seed, ..spec.scenario.clone() }, detector.clone())?;
                let cfg = crate::ppo::PpoConfig { seed, ..spec.ppo.clone() };
                let out = train_with(env, &cfg, |row, _| {
                    if let Some(p) = progress.as_mut() {
                        p(seed, row);
                    }
                    Ok(())
                })?;
                out.net.save(&dir)?;
                let policy = Policy::Actor { net: &out.net, deterministic: !spec.eval_stochastic };
                let ev = evaluate(policy, eval_env, spec.eval_episodes, seed)?;
                (out.log, out.episodes, ev)
            }
        };
        let to_rows = |recs: &[EpisodeRecord]| -> Vec<EpisodeMetrics> {
            recs.iter().map(|r| EpisodeMetrics::from_record(seed, spec.policy, kind, r)).collect()
        };
        let training = to_rows(&training);
        let evaluation = to_rows(&evaluation);
        if spec.policy == PolicyKind::Ppo {
            write_csv(&dir.join(TRAINING_LOG_FILE), TRAIN_LOG_HEADER, &log)?;
            write_episodes(&dir.join(TRAINING_EPISODES_FILE), &training)?;
        }
        write_episodes(&dir.join(EPISODES_FILE), &evaluation)?;
        seeds.push(SeedRun { seed, dir, log, training, evaluation });
    }
    let run = ScenarioRun { seeds };
    write_episodes(&spec.out_dir.join(EPISODES_FILE), &run.evaluation())?;
    Ok(run)
}
