//! Grid-world bridge deck: crack layout, traffic, UAV dynamics and rewards.

mod config;
mod crack;
mod geometry;
mod observe;
mod state;
mod step;
mod trace;
mod traffic;
mod world;

use std::sync::Arc;

pub use config::{parse_kv, DetectorKind, ScenarioConfig, SCENARIO_KEYS};
pub use crack::{
    cell_rect, generate_crack, CrackKind, CrackSpec, BEZIER_GEOMETRY_STEPS, MAX_CRACK_EXTENT_M,
    MAX_CRACK_WIDTH_M, MIN_CRACK_EXTENT_M,
};
pub use geometry::{bezier_point, segment_distance, Cell, Point, Rect};
pub use observe::{observe, OBS_LEN};
pub use state::{Action, EnvState};
pub use step::{
    episode_return, step, RewardBreakdown, StepInfo, StepOutcome, R_CRACK, R_EPISODE_END,
    R_NEW_LOCATION, R_PAUSE, R_REVISIT, R_TEMPORAL,
};
pub use trace::{read_trace, write_trace, TraceRow, TRACE_HEADER};
pub use traffic::{advance_car, advance_traffic, CarState, CAR_LENGTH_M, CAR_WIDTH_M};
pub use world::{reset, WorldState};

use crate::detect::CrackDetector;
use crate::error::Result;
use crate::rng::{derive_seed, stream, SimRng, TAG_EPISODE, TAG_SCAN};

/// Seed of episode `index` under a scenario's base seed.
pub fn episode_seed(base: u64, index: u64) -> u64 {
    derive_seed(base, &[TAG_EPISODE, index])
}

/// Stateful wrapper: a fresh crack layout per episode, derived from the
/// scenario seed and the episode index.
pub struct BridgeEnv {
    config: ScenarioConfig,
    detector: Arc<dyn CrackDetector>,
    world: WorldState,
    state: EnvState,
    scan_rng: SimRng,
    episode: u64,
}

impl BridgeEnv {
    pub fn new(config: ScenarioConfig, detector: Arc<dyn CrackDetector>) -> Result<Self> {
        let seed = episode_seed(config.seed, 0);
        let (world, state) = reset(&config, seed)?;
        Ok(BridgeEnv {
            scan_rng: stream(seed, &[TAG_SCAN]),
            config,
            detector,
            world,
            state,
            episode: 0,
        })
    }

    /// Starts episode `index`.
    pub fn reset_to(&mut self, index: u64) -> Result<Vec<f64>> {
        let seed = episode_seed(self.config.seed, index);
        let (world, state) = reset(&self.config, seed)?;
        self.world = world;
        self.state = state;
        self.scan_rng = stream(seed, &[TAG_SCAN]);
        self.episode = index;
        Ok(self.observation())
    }

    /// Starts the next episode.
    pub fn reset(&mut self) -> Result<Vec<f64>> {
        self.reset_to(self.episode + 1)
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        step(&mut self.world, &mut self.state, action, self.detector.as_ref(), &mut self.scan_rng)
    }

    pub fn observation(&self) -> Vec<f64> {
        observe(&self.state, self.config.pause_limit)
    }

    pub fn action_mask(&self) -> [bool; Action::COUNT] {
        self.state.action_mask(self.config.pause_limit)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }

    pub fn detector(&self) -> &Arc<dyn CrackDetector> {
        &self.detector
    }
}
