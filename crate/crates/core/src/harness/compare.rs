use std::fs;
use std::path::{Path, PathBuf};

use super::run::{read_episodes, EpisodeMetrics, EPISODES_FILE, MANIFEST_FILE};
use super::spec::PolicyKind;
use crate::env::{parse_kv, ScenarioConfig};
use crate::error::{Error, Result};
use crate::io::{write_csv, CsvRow};
use crate::ppo::mean_std;

/// Relative completion time is `100 * reference mean / scenario mean`, so
/// slower scenarios fall below 100. The column name carries the convention.
pub const COMPARISON_HEADER: &[&str] = &[
    "run",
    "policy",
    "detector",
    "n_cracks",
    "n_cars",
    "n_false_cracks",
    "episodes",
    "mean_reward",
    "std_reward",
    "mean_steps",
    "mean_sim_seconds",
    "std_sim_seconds",
    "relative_time_pct_ref_over_run",
    "mean_cracks_detected",
    "mean_false_positives",
    "completion_rate",
];

/// A finished run: its resolved scenario and evaluation episodes.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub name: String,
    pub scenario: ScenarioConfig,
    pub policy: PolicyKind,
    pub episodes: Vec<EpisodeMetrics>,
}

impl RunResult {
    /// Loads `run_manifest` and `episodes.csv` from a run directory.
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
        let mut map = parse_kv(&text)?;
        let scenario = ScenarioConfig::from_map(&mut map)?;
        let policy = map
            .get("policy")
            .ok_or_else(|| Error::Corrupt { path: manifest.clone(), detail: "no policy key".into() })?
            .parse()?;
        let episodes = read_episodes(&dir.join(EPISODES_FILE))?;
        let name = dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned());
        Ok(RunResult { name, scenario, policy, episodes })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub run: String,
    pub policy: PolicyKind,
    pub scenario: ScenarioConfig,
    pub episodes: usize,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub mean_steps: f64,
    pub mean_sim_seconds: f64,
    pub std_sim_seconds: f64,
    pub relative_time_pct: f64,
    pub mean_cracks_detected: f64,
    pub mean_false_positives: f64,
    pub completion_rate: f64,
}

impl CsvRow for ComparisonRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.run.clone(),
            self.policy.to_string(),
            self.scenario.detector.to_string(),
            self.scenario.n_cracks.to_string(),
            self.scenario.n_cars.to_string(),
            self.scenario.n_false_cracks.to_string(),
            self.episodes.to_string(),
            format!("{:.6}", self.mean_reward),
            format!("{:.6}", self.std_reward),
            format!("{:.6}", self.mean_steps),
            format!("{:.6}", self.mean_sim_seconds),
            format!("{:.6}", self.std_sim_seconds),
            format!("{:.6}", self.relative_time_pct),
            format!("{:.6}", self.mean_cracks_detected),
            format!("{:.6}", self.mean_false_positives),
            format!("{:.6}", self.completion_rate),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub reference: String,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        write_csv(path, COMPARISON_HEADER, &self.rows)
    }

    pub fn row(&self, run: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.run == run)
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (n, s) = v.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    s / n as f64
}

fn summarize_run(run: &RunResult, reference_time: f64) -> ComparisonRow {
    let e = &run.episodes;
    let (mean_reward, std_reward) = mean_std(&e.iter().map(|m| m.reward as f64).collect::<Vec<_>>());
    let (mean_sim_seconds, std_sim_seconds) = mean_std(&e.iter().map(|m| m.sim_seconds).collect::<Vec<_>>());
    ComparisonRow {
        run: run.name.clone(),
        policy: run.policy,
        scenario: run.scenario.clone(),
        episodes: e.len(),
        mean_reward,
        std_reward,
        mean_steps: mean(e.iter().map(|m| m.steps as f64)),
        mean_sim_seconds,
        std_sim_seconds,
        relative_time_pct: 100.0 * reference_time / mean_sim_seconds,
        mean_cracks_detected: mean(e.iter().map(|m| m.cracks_detected as f64)),
        mean_false_positives: mean(e.iter().map(|m| m.false_positives as f64)),
        completion_rate: mean(e.iter().map(|m| f64::from(u8::from(m.completed)))),
    }
}

/// Aggregates runs against the run named `reference`. Runs without episodes
/// (or a missing reference) are rejected by name.
pub fn compare(runs: &[RunResult], reference: &str) -> Result<ComparisonReport> {
    let mut missing: Vec<String> = runs.iter().filter(|r| r.episodes.is_empty()).map(|r| r.name.clone()).collect();
    let reference_run = runs.iter().find(|r| r.name == reference);
    if reference_run.is_none() {
        missing.push(reference.to_string());
    }
    if !missing.is_empty() {
        return Err(Error::MissingRuns(missing.join(", ")));
    }
    let reference_run = reference_run.unwrap();
    let reference_time = mean(reference_run.episodes.iter().map(|m| m.sim_seconds));
    Ok(ComparisonReport {
        reference: reference.to_string(),
        rows: runs.iter().map(|r| summarize_run(r, reference_time)).collect(),
    })
}

/// Loads every run directory and compares them. All absent or unreadable
/// runs are reported together.
pub fn compare_dirs(dirs: &[PathBuf], reference: &Path) -> Result<ComparisonReport> {
    let mut all: Vec<&Path> = dirs.iter().map(PathBuf::as_path).collect();
    if !all.contains(&reference) {
        all.insert(0, reference);
    }
    let mut runs = Vec::new();
    let mut missing = Vec::new();
    for dir in &all {
        if !dir.join(MANIFEST_FILE).is_file() || !dir.join(EPISODES_FILE).is_file() {
            missing.push(dir.display().to_string());
            continue;
        }
        let mut run = RunResult::load(dir)?;
        run.name = dir.display().to_string();
        runs.push(run);
    }
    if !missing.is_empty() {
        return Err(Error::MissingRuns(missing.join(", ")));
    }
    compare(&runs, &reference.display().to_string())
}
