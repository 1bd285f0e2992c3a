use super::geometry::Cell;
use super::state::{Action, EnvState};
use super::traffic::advance_traffic;
use super::world::WorldState;
use crate::detect::{CrackDetector, Detection};
use crate::error::{Error, Result};
use crate::rng::SimRng;

pub const R_TEMPORAL: i64 = -1;
pub const R_PAUSE: i64 = 0;
pub const R_REVISIT: i64 = -1;
pub const R_CRACK: i64 = 10;
pub const R_NEW_LOCATION: i64 = 5;
pub const R_EPISODE_END: i64 = 20;

/// Per-step reward components. `r_c` is `R_CRACK` per newly confirmed crack,
/// less the false-positive penalty when the detector fires on a crack-free cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RewardBreakdown {
    pub r_m: i64,
    pub r_p: i64,
    pub r_v: i64,
    pub r_c: i64,
    pub r_nl: i64,
    pub r_e: i64,
    pub total: i64,
}

impl RewardBreakdown {
    pub fn component_sum(&self) -> i64 {
        self.r_m + self.r_p + self.r_v + self.r_c + self.r_nl + self.r_e
    }

    fn finish(mut self) -> Self {
        self.total = self.component_sum();
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepInfo {
    /// True crack ids confirmed on this step.
    pub new_cracks: Vec<usize>,
    /// The detector fired on a cell without a true crack.
    pub false_positive: bool,
    /// Traffic prevented the scan of the UAV's cell.
    pub blocked: bool,
    /// The move hit the grid boundary and left the UAV in place.
    pub clamped: bool,
    pub scanned: bool,
    pub detection: Option<Detection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub reward: RewardBreakdown,
    pub done: bool,
    pub info: StepInfo,
}

/// Advances the episode by one action.
///
/// Order: move (or pause), advance cars, read traffic at the UAV's cell, scan
/// if unobstructed, then check termination. A move scans on every unblocked
/// arrival, including clamped moves and revisits, so a crack missed earlier can
/// still be found. A pause scans only when the cell is still unvisited and the
/// traffic has cleared.
pub fn step(
    world: &mut WorldState,
    state: &mut EnvState,
    action: Action,
    detector: &dyn CrackDetector,
    rng: &mut SimRng,
) -> Result<StepOutcome> {
    if state.done {
        return Err(Error::EpisodeFinished);
    }
    let cfg = &world.config;
    if action == Action::Pause && !state.pause_allowed(cfg.pause_limit) {
        return Err(Error::MaskedAction(format!(
            "pause with t_pause = {} at limit {}",
            state.t_pause, cfg.pause_limit
        )));
    }
    let mut r = RewardBreakdown::default();
    let mut info = StepInfo::default();

    let moving = action != Action::Pause;
    if moving || cfg.temporal_penalty_on_pause {
        r.r_m = R_TEMPORAL;
    }
    if moving {
        let (dx, dy) = action.delta();
        let nx = (state.uav.x as i64 + dx).clamp(0, world.cols as i64 - 1) as usize;
        let ny = (state.uav.y as i64 + dy).clamp(0, world.rows as i64 - 1) as usize;
        let target = Cell::new(nx, ny);
        info.clamped = target == state.uav;
        state.uav = target;
        state.t_pause = 0;
        if state.is_visited(target) {
            r.r_v = R_REVISIT;
        }
    } else {
        r.r_p = R_PAUSE;
        state.t_pause += 1;
    }

    let (length_m, tick_s) = (cfg.length_m, cfg.tick_s());
    advance_traffic(&mut world.cars, length_m, tick_s);
    state.s_t = world.traffic_at(state.uav);
    info.blocked = state.s_t;

    let wants_scan = moving || !state.is_visited(state.uav);
    if wants_scan && !state.s_t {
        scan(world, state, detector, rng, &mut r, &mut info)?;
    }

    state.step += 1;
    if state.fully_covered() {
        state.done = true;
        r.r_e = R_EPISODE_END;
    } else if state.step >= world.config.max_steps {
        state.done = true;
    }
    Ok(StepOutcome { reward: r.finish(), done: state.done, info })
}

fn scan(
    world: &WorldState,
    state: &mut EnvState,
    detector: &dyn CrackDetector,
    rng: &mut SimRng,
    r: &mut RewardBreakdown,
    info: &mut StepInfo,
) -> Result<()> {
    let cell = state.uav;
    let idx = state.index(cell);
    info.scanned = true;
    if !state.visited[idx] {
        state.visited[idx] = true;
        r.r_nl = R_NEW_LOCATION;
    }
    let det = detector.detect(world, cell, rng)?;
    if det.present {
        state.flagged[idx] = true;
        let mut true_here = false;
        for id in world.cracks_in(cell).collect::<Vec<_>>() {
            if world.cracks[id].is_false {
                continue;
            }
            true_here = true;
            if state.detected.insert(id) {
                info.new_cracks.push(id);
            }
        }
        r.r_c = R_CRACK * info.new_cracks.len() as i64;
        if !true_here {
            info.false_positive = true;
            state.false_positives += 1;
            r.r_c -= world.config.false_positive_penalty;
        }
    }
    info.detection = Some(det);
    Ok(())
}

/// Sum of per-step totals.
pub fn episode_return(trace: &[RewardBreakdown]) -> i64 {
    trace.iter().map(|r| r.total).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::OracleDetector;
    use crate::env::{reset, CarState, CrackKind, CrackSpec, Point, ScenarioConfig};
    use crate::rng::stream;

    const ORACLE: OracleDetector = OracleDetector { flip: 0.0 };

    fn empty(cfg: ScenarioConfig) -> (WorldState, EnvState, SimRng) {
        let cfg = ScenarioConfig { n_cracks: 0, n_false_cracks: 0, n_cars: 0, ..cfg };
        let (w, s) = reset(&cfg, 1).unwrap();
        (w, s, stream(1, &[]))
    }

    fn add_crack(w: &mut WorldState, cell: Cell, is_false: bool) -> usize {
        let (x, y) = (cell.x as f64 * 100.0 + 40.0, cell.y as f64 * 100.0 + 50.0);
        let c = CrackSpec {
            kind: CrackKind::Line,
            points: vec![Point::new(x, y), Point::new(x + 10.0, y)],
            width_m: 0.5,
            is_false,
        };
        w.crack_cells.push(c.cells(100.0, w.cols, w.rows));
        w.cracks.push(c);
        w.cracks.len() - 1
    }

    fn go(w: &mut WorldState, s: &mut EnvState, a: Action, rng: &mut SimRng) -> StepOutcome {
        step(w, s, a, &ORACLE, rng).unwrap()
    }

    #[test]
    fn new_cell_then_revisit() {
        let (mut w, mut s, mut rng) = empty(ScenarioConfig::default());
        let o = go(&mut w, &mut s, Action::Right, &mut rng);
        assert_eq!((o.reward.r_m, o.reward.r_nl, o.reward.total), (-1, 5, 4));
        let o = go(&mut w, &mut s, Action::Left, &mut rng);
        assert_eq!((o.reward.r_v, o.reward.total), (-1, -2));
    }

    #[test]
    fn clamped_move_counts_as_revisit() {
        let (mut w, mut s, mut rng) = empty(ScenarioConfig::default());
        let o = go(&mut w, &mut s, Action::Down, &mut rng);
        assert!(o.info.clamped);
        assert_eq!(s.uav, Cell::new(0, 0));
        assert_eq!(o.reward.total, -2);
    }

    #[test]
    fn crack_reward_fires_once() {
        let (mut w, mut s, mut rng) = empty(ScenarioConfig::default());
        let id = add_crack(&mut w, Cell::new(1, 0), false);
        let o = go(&mut w, &mut s, Action::Right, &mut rng);
        assert_eq!((o.reward.r_c, o.reward.total), (10, 14));
        assert_eq!(o.info.new_cracks, vec![id]);
        go(&mut w, &mut s, Action::Left, &mut rng);
        let o = go(&mut w, &mut s, Action::Right, &mut rng);
        assert_eq!((o.reward.r_c, o.reward.total), (0, -2));
        assert_eq!(s.detected.len(), 1);
    }

    #[test]
    fn false_crack_earns_nothing() {
        let cfg = ScenarioConfig { detector: crate::env::DetectorKind::Oracle, ..Default::default() };
        let (mut w, mut s, mut rng) = empty(cfg);
        add_crack(&mut w, Cell::new(1, 0), true);
        let o = go(&mut w, &mut s, Action::Right, &mut rng);
        assert_eq!(o.reward.r_c, 0);
        assert!(!o.info.false_positive);
        // A detector that always fires produces a false positive, penalized when configured.
        struct Always;
        impl CrackDetector for Always {
            fn name(&self) -> &str {
                "always"
            }
            fn detect(&self, _: &WorldState, cell: Cell, _: &mut SimRng) -> Result<Detection> {
                Ok(Detection { present: true, confidence: 1.0, pixel_count: 0, cells: vec![cell] })
            }
        }
        w.config.false_positive_penalty = 3;
        let o = step(&mut w, &mut s, Action::Up, &Always, &mut rng).unwrap();
        assert!(o.info.false_positive);
        assert_eq!((o.reward.r_c, o.reward.total), (-3, 1));
        assert_eq!(s.false_positives, 1);
    }

    #[test]
    fn completing_coverage_ends_episode() {
        let cfg = ScenarioConfig { length_m: 200.0, breadth_m: 100.0, ..Default::default() };
        let (mut w, mut s, mut rng) = empty(cfg);
        let o = go(&mut w, &mut s, Action::Right, &mut rng);
        assert_eq!((o.reward.r_e, o.reward.total), (20, 24));
        assert!(o.done);
        assert!(matches!(step(&mut w, &mut s, Action::Left, &ORACLE, &mut rng), Err(Error::EpisodeFinished)));
    }

    #[test]
    fn step_budget_ends_episode_without_bonus() {
        let (mut w, mut s, mut rng) = empty(ScenarioConfig { max_steps: 3, ..Default::default() });
        for i in 0..3 {
            let o = go(&mut w, &mut s, Action::Down, &mut rng);
            assert_eq!(o.done, i == 2);
            assert_eq!(o.reward.r_e, 0);
        }
    }

    fn parked_car(lane: usize, pos_m: f64) -> CarState {
        CarState { lane, pos_m, speed_mps: 1e-9, dir: 1.0 }
    }

    #[test]
    fn traffic_blocks_scan_and_pause_accounting() {
        let (mut w, mut s, mut rng) = empty(ScenarioConfig { pause_limit: 2, ..Default::default() });
        w.cars.push(parked_car(0, 150.0));
        let o = go(&mut w, &mut s, Action::Right, &mut rng);
        assert!(o.info.blocked && !o.info.scanned);
        assert_eq!(o.reward.total, -1);
        assert!(!s.is_visited(Cell::new(1, 0)));
        let o = go(&mut w, &mut s, Action::Pause, &mut rng);
        assert_eq!((o.reward.r_p, o.reward.total, s.t_pause), (0, -1, 1));
        go(&mut w, &mut s, Action::Pause, &mut rng);
        assert_eq!(s.t_pause, 2);
        let err = step(&mut w, &mut s, Action::Pause, &ORACLE, &mut rng).unwrap_err();
        assert!(matches!(err, Error::MaskedAction(_)));
        // The car leaves; moving on resets the counter and the skipped cell stays unvisited.
        w.cars.clear();
        let o = go(&mut w, &mut s, Action::Up, &mut rng);
        assert_eq!((s.t_pause, o.reward.total), (0, 4));
        assert!(!s.is_visited(Cell::new(1, 0)));
    }

    #[test]
    fn pause_scans_once_traffic_clears() {
        let (mut w, mut s, mut rng) = empty(ScenarioConfig::default());
        w.cars.push(parked_car(0, 150.0));
        go(&mut w, &mut s, Action::Right, &mut rng);
        w.cars.clear();
        let o = go(&mut w, &mut s, Action::Pause, &mut rng);
        assert!(o.info.scanned);
        assert_eq!(o.reward.total, 4);
        let o = go(&mut w, &mut s, Action::Pause, &mut rng);
        assert!(!o.info.scanned);
        assert_eq!(o.reward.total, -1);
    }

    #[test]
    fn pause_without_temporal_penalty_is_neutral() {
        let cfg = ScenarioConfig { temporal_penalty_on_pause: false, ..Default::default() };
        let (mut w, mut s, mut rng) = empty(cfg);
        let o = go(&mut w, &mut s, Action::Pause, &mut rng);
        assert_eq!(o.reward.total, 0);
    }

    #[test]
    fn episode_return_sums_totals() {
        assert_eq!(episode_return(&[]), 0);
        let r = RewardBreakdown { r_m: -1, r_nl: 5, total: 4, ..Default::default() };
        assert_eq!(episode_return(&[r; 7]), 28);
    }
}
