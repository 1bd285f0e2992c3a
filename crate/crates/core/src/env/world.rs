use super::config::ScenarioConfig;
use super::crack::{cell_rect, generate_crack, CrackSpec};
use super::geometry::{Cell, Rect};
use super::state::EnvState;
use super::traffic::CarState;
use crate::error::Result;
use crate::rng::{stream, TAG_CARS, TAG_FALSE_CRACKS, TAG_TRUE_CRACKS};

/// Hidden ground truth of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub config: ScenarioConfig,
    /// True cracks first, then false cracks; the index is the crack id.
    pub cracks: Vec<CrackSpec>,
    /// Cells each crack touches, parallel to `cracks`.
    pub crack_cells: Vec<Vec<Cell>>,
    pub cars: Vec<CarState>,
    pub cols: usize,
    pub rows: usize,
}

impl WorldState {
    pub fn base_cell(&self) -> Cell {
        Cell::new(0, 0)
    }

    pub fn n_true_cracks(&self) -> usize {
        self.cracks.iter().filter(|c| !c.is_false).count()
    }

    /// Ids of cracks (true or false) touching `cell`.
    pub fn cracks_in(&self, cell: Cell) -> impl Iterator<Item = usize> + '_ {
        self.crack_cells
            .iter()
            .enumerate()
            .filter(move |(_, cells)| cells.contains(&cell))
            .map(|(id, _)| id)
    }

    pub fn has_true_crack(&self, cell: Cell) -> bool {
        self.cracks_in(cell).any(|id| !self.cracks[id].is_false)
    }

    pub fn has_false_crack(&self, cell: Cell) -> bool {
        self.cracks_in(cell).any(|id| self.cracks[id].is_false)
    }

    pub fn traffic_at(&self, cell: Cell) -> bool {
        self.cars
            .iter()
            .any(|c| c.cell(self.config.cell_m, self.cols) == cell)
    }

    pub fn in_grid(&self, cell: Cell) -> bool {
        cell.x < self.cols && cell.y < self.rows
    }
}

/// Builds the world for `seed` and the initial agent state.
///
/// True cracks, false cracks and cars draw from separate streams, so the true
/// crack layout for a seed does not change with the number of false cracks or
/// cars. No crack touches the base cell, where the UAV starts without scanning.
pub fn reset(config: &ScenarioConfig, seed: u64) -> Result<(WorldState, EnvState)> {
    config.validate()?;
    let (cols, rows) = (config.cols(), config.rows());
    let deck = Rect { x0: 0.0, y0: 0.0, x1: config.length_m, y1: config.breadth_m };
    let base = cell_rect(Cell::new(0, 0), config.cell_m);

    let mut cracks = Vec::with_capacity(config.n_cracks + config.n_false_cracks);
    for (n, tag, is_false) in [
        (config.n_cracks, TAG_TRUE_CRACKS, false),
        (config.n_false_cracks, TAG_FALSE_CRACKS, true),
    ] {
        let mut rng = stream(seed, &[tag]);
        for _ in 0..n {
            let mut crack = generate_crack(None, &mut rng, deck, is_false)?;
            let mut attempts = 1;
            while crack.intersects(&base) {
                if attempts >= 1000 {
                    return Err(crate::Error::Config(
                        "could not place a crack outside the base cell".into(),
                    ));
                }
                crack = generate_crack(None, &mut rng, deck, is_false)?;
                attempts += 1;
            }
            cracks.push(crack);
        }
    }
    let crack_cells = cracks.iter().map(|c| c.cells(config.cell_m, cols, rows)).collect();

    let mut rng = stream(seed, &[TAG_CARS]);
    let cars = (0..config.n_cars)
        .map(|_| CarState::random(&mut rng, rows, config.length_m))
        .collect();

    let world = WorldState { config: config.clone(), cracks, crack_cells, cars, cols, rows };
    let state = EnvState::initial(&world);
    Ok((world, state))
}
