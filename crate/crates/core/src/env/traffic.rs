use rand::Rng;

use super::geometry::Cell;

pub const MIN_CAR_SPEED_MPS: f64 = 8.0;
pub const MAX_CAR_SPEED_MPS: f64 = 20.0;
/// Car footprint used when rendering occlusion.
pub const CAR_LENGTH_M: f64 = 5.0;
pub const CAR_WIDTH_M: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarState {
    /// Grid row the car drives along.
    pub lane: usize,
    /// Longitudinal position in `[0, length]`.
    pub pos_m: f64,
    pub speed_mps: f64,
    /// `+1.0` or `-1.0`.
    pub dir: f64,
}

impl CarState {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, rows: usize, length_m: f64) -> Self {
        CarState {
            lane: rng.random_range(0..rows),
            pos_m: rng.random_range(0.0..=length_m),
            speed_mps: rng.random_range(MIN_CAR_SPEED_MPS..=MAX_CAR_SPEED_MPS),
            dir: if rng.random_bool(0.5) { 1.0 } else { -1.0 },
        }
    }

    pub fn cell(&self, cell_m: f64, cols: usize) -> Cell {
        let x = ((self.pos_m / cell_m).floor().max(0.0) as usize).min(cols - 1);
        Cell::new(x, self.lane)
    }
}

/// Moves a car for `tick_s` seconds, reflecting off both bridge ends.
pub fn advance_car(car: &mut CarState, length_m: f64, tick_s: f64) {
    let mut pos = car.pos_m + car.dir * car.speed_mps * tick_s;
    loop {
        if pos > length_m {
            pos = 2.0 * length_m - pos;
            car.dir = -1.0;
        } else if pos < 0.0 {
            pos = -pos;
            car.dir = 1.0;
        } else {
            break;
        }
    }
    car.pos_m = pos;
}

pub fn advance_traffic(cars: &mut [CarState], length_m: f64, tick_s: f64) {
    for car in cars {
        advance_car(car, length_m, tick_s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn car(pos: f64, dir: f64) -> CarState {
        CarState { lane: 0, pos_m: pos, speed_mps: 20.0, dir }
    }

    #[test]
    fn straight_motion() {
        let mut c = car(0.0, 1.0);
        advance_car(&mut c, 800.0, 4.0);
        assert_eq!((c.pos_m, c.dir), (80.0, 1.0));
    }

    #[test]
    fn reflects_at_far_end() {
        // 790 + 80 = 870 -> 800 - 70 = 730.
        let mut c = car(790.0, 1.0);
        advance_car(&mut c, 800.0, 4.0);
        assert_eq!((c.pos_m, c.dir), (730.0, -1.0));
        // A 2 s tick covers 40 m: 790 + 40 = 830 -> 770.
        let mut c = car(790.0, 1.0);
        advance_car(&mut c, 800.0, 2.0);
        assert_eq!((c.pos_m, c.dir), (770.0, -1.0));
    }

    #[test]
    fn reflects_at_origin() {
        let mut c = car(10.0, -1.0);
        advance_car(&mut c, 800.0, 4.0);
        assert_eq!((c.pos_m, c.dir), (70.0, 1.0));
    }

    #[test]
    fn end_of_deck_maps_to_last_column() {
        assert_eq!(car(800.0, 1.0).cell(100.0, 8), Cell::new(7, 0));
        assert_eq!(car(99.9, 1.0).cell(100.0, 8), Cell::new(0, 0));
    }
}
