//! Experiment runs: per-seed training and evaluation, random baselines,
//! scenario comparison and episode replays. Everything written is CSV or
//! flat `key=value` text.

mod compare;
mod replay;
mod run;
mod spec;

pub use compare::{compare, compare_dirs, ComparisonReport, ComparisonRow, RunResult, COMPARISON_HEADER};
pub use replay::{record_episode, render_replay};
pub use run::{
    build_detector, eval_scenario, gen_and_train_classifier, random_baseline, read_episodes, resolve_model,
    run_scenario, run_scenario_with_model, write_episodes, EpisodeMetrics, Progress, ScenarioRun, SeedRun,
    CLASSIFIER_LOG_HEADER, EPISODES_FILE, EPISODES_HEADER, MANIFEST_FILE, TRAINING_EPISODES_FILE,
    TRAINING_LOG_FILE,
};
pub use spec::{ClassifierTraining, ExperimentSpec, ModelSource, PolicyKind, HARNESS_KEYS, PPO_KEYS};
