use std::f64::consts::PI;

use rand::Rng;

use super::geometry::{bezier_point, Cell, Point, Rect};
use crate::error::{Error, Result};

pub const MIN_CRACK_EXTENT_M: f64 = 5.0;
pub const MAX_CRACK_EXTENT_M: f64 = 20.0;
pub const MAX_CRACK_WIDTH_M: f64 = 1.0;
const MIN_CRACK_WIDTH_M: f64 = 0.1;
const MAX_PLACEMENT_ATTEMPTS: usize = 1000;
/// Parameter steps used when a Bezier crack is flattened for cell lookup.
pub const BEZIER_GEOMETRY_STEPS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrackKind {
    Line,
    Fork,
    Bezier,
}

impl CrackKind {
    pub const ALL: [CrackKind; 3] = [CrackKind::Line, CrackKind::Fork, CrackKind::Bezier];

    pub fn name(self) -> &'static str {
        match self {
            CrackKind::Line => "line",
            CrackKind::Fork => "fork",
            CrackKind::Bezier => "bezier",
        }
    }
}

/// Crack geometry in deck meters.
///
/// Point layout: `Line` = `[a, b]`; `Fork` = `[trunk_a, trunk_b, trunk_b, branch_end]`
/// (the branch starts at the trunk end); `Bezier` = `[P0, P1, P2, P3]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrackSpec {
    pub kind: CrackKind,
    pub points: Vec<Point>,
    pub width_m: f64,
    pub is_false: bool,
}

impl CrackSpec {
    /// Largest distance between control points. The curve lies in the
    /// convex hull of its control points, so this bounds the crack's extent.
    pub fn extent(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.max(a.dist(*b));
            }
        }
        best
    }

    /// Geometry as polylines; Bezier curves are flattened with `bezier_steps` segments.
    pub fn polylines(&self, bezier_steps: usize) -> Vec<Vec<Point>> {
        let p = &self.points;
        match self.kind {
            CrackKind::Line => vec![vec![p[0], p[1]]],
            CrackKind::Fork => vec![vec![p[0], p[1]], vec![p[2], p[3]]],
            CrackKind::Bezier => {
                let n = bezier_steps.max(1);
                vec![(0..=n)
                    .map(|i| bezier_point(p[0], p[1], p[2], p[3], i as f64 / n as f64).unwrap())
                    .collect()]
            }
        }
    }

    pub fn intersects(&self, rect: &Rect) -> bool {
        self.polylines(BEZIER_GEOMETRY_STEPS)
            .iter()
            .any(|line| line.windows(2).any(|s| rect.intersects_segment(s[0], s[1])))
    }

    /// Grid cells touched by the crack's centerline.
    pub fn cells(&self, cell_m: f64, cols: usize, rows: usize) -> Vec<Cell> {
        let mut out = Vec::new();
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in &self.points {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        let idx = |v: f64, n: usize| ((v / cell_m).floor().max(0.0) as usize).min(n - 1);
        for cy in idx(y0, rows)..=idx(y1, rows) {
            for cx in idx(x0, cols)..=idx(x1, cols) {
                let rect = cell_rect(Cell::new(cx, cy), cell_m);
                if self.intersects(&rect) {
                    out.push(Cell::new(cx, cy));
                }
            }
        }
        out
    }
}

pub fn cell_rect(cell: Cell, cell_m: f64) -> Rect {
    Rect {
        x0: cell.x as f64 * cell_m,
        y0: cell.y as f64 * cell_m,
        x1: (cell.x + 1) as f64 * cell_m,
        y1: (cell.y + 1) as f64 * cell_m,
    }
}

/// Samples a crack whose control points all lie inside `region`.
///
/// The extent (control-point diameter) is uniform in [5, 20] m and the width
/// uniform in [0.1, 1] m; `kind = None` draws the kind uniformly. Positions
/// are resampled until the shape fits, which only fails when the region is
/// too small to hold it.
pub fn generate_crack<R: Rng + ?Sized>(
    kind: Option<CrackKind>,
    rng: &mut R,
    region: Rect,
    is_false: bool,
) -> Result<CrackSpec> {
    let kind = kind.unwrap_or_else(|| CrackKind::ALL[rng.random_range(0..3)]);
    let extent = rng.random_range(MIN_CRACK_EXTENT_M..=MAX_CRACK_EXTENT_M);
    let width_m = rng.random_range(MIN_CRACK_WIDTH_M..=MAX_CRACK_WIDTH_M);
    let shape = unit_shape(kind, rng);
    let shape_extent = diameter(&shape);
    // Scale to the drawn extent, anchored at the origin.
    let scaled: Vec<Point> = shape.iter().map(|p| *p * (extent / shape_extent)).collect();
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let anchor = Point::new(
            rng.random_range(region.x0..=region.x1),
            rng.random_range(region.y0..=region.y1),
        );
        let points: Vec<Point> = scaled.iter().map(|p| *p + anchor).collect();
        if points.iter().all(|p| region.contains(*p)) {
            return Ok(CrackSpec { kind, points, width_m, is_false });
        }
    }
    Err(Error::Config(format!(
        "could not fit a {extent:.1} m {} crack in region {region:?}",
        kind.name()
    )))
}

/// Shape with the first point at the origin, arbitrary scale.
fn unit_shape<R: Rng + ?Sized>(kind: CrackKind, rng: &mut R) -> Vec<Point> {
    let angle = rng.random_range(0.0..2.0 * PI);
    let dir = Point::new(angle.cos(), angle.sin());
    let normal = Point::new(-dir.y, dir.x);
    let origin = Point::new(0.0, 0.0);
    match kind {
        CrackKind::Line => vec![origin, dir],
        CrackKind::Fork => {
            // A line crack extended from its end at a random angle and length.
            let trunk_end = dir;
            let turn = rng.random_range(PI / 9.0..=7.0 * PI / 18.0);
            let turn = if rng.random_bool(0.5) { turn } else { -turn };
            let b_angle = angle + turn;
            let b_len = rng.random_range(0.3..=0.8);
            let branch_end = trunk_end + Point::new(b_angle.cos(), b_angle.sin()) * b_len;
            vec![origin, trunk_end, trunk_end, branch_end]
        }
        CrackKind::Bezier => {
            // Offsets of equal sign bend one way (parabolic); opposite signs give an S.
            let a1 = rng.random_range(-0.4..=0.4);
            let a2 = rng.random_range(-0.4..=0.4);
            vec![
                origin,
                dir * (1.0 / 3.0) + normal * a1,
                dir * (2.0 / 3.0) + normal * a2,
                dir,
            ]
        }
    }
}

fn diameter(points: &[Point]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(a.dist(*b));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn deck() -> Rect {
        Rect { x0: 0.0, y0: 0.0, x1: 800.0, y1: 600.0 }
    }

    #[test]
    fn point_counts_per_kind() {
        let mut rng = stream(1, &[]);
        for (kind, n) in [(CrackKind::Line, 2), (CrackKind::Fork, 4), (CrackKind::Bezier, 4)] {
            let c = generate_crack(Some(kind), &mut rng, deck(), false).unwrap();
            assert_eq!(c.points.len(), n);
        }
    }

    #[test]
    fn fork_branch_shares_trunk_end_and_stays_close() {
        let mut rng = stream(2, &[]);
        for _ in 0..500 {
            let c = generate_crack(Some(CrackKind::Fork), &mut rng, deck(), false).unwrap();
            assert_eq!(c.points[1], c.points[2]);
            assert!(c.points[3].dist(c.points[1]) <= MAX_CRACK_EXTENT_M + 1e-9);
            assert!(c.extent() <= MAX_CRACK_EXTENT_M + 1e-9);
        }
    }

    #[test]
    fn extent_and_width_ranges() {
        let mut rng = stream(3, &[]);
        for _ in 0..2000 {
            let c = generate_crack(None, &mut rng, deck(), false).unwrap();
            let e = c.extent();
            assert!((MIN_CRACK_EXTENT_M - 1e-9..=MAX_CRACK_EXTENT_M + 1e-9).contains(&e), "{e}");
            assert!(c.width_m > 0.0 && c.width_m <= 1.0);
        }
    }

    #[test]
    fn tiny_region_fails() {
        let mut rng = stream(4, &[]);
        let region = Rect { x0: 0.0, y0: 0.0, x1: 2.0, y1: 2.0 };
        assert!(generate_crack(Some(CrackKind::Line), &mut rng, region, false).is_err());
    }

    #[test]
    fn cells_of_crossing_line() {
        let c = CrackSpec {
            kind: CrackKind::Line,
            points: vec![Point::new(95.0, 50.0), Point::new(108.0, 50.0)],
            width_m: 0.5,
            is_false: false,
        };
        assert_eq!(c.cells(100.0, 8, 6), vec![Cell::new(0, 0), Cell::new(1, 0)]);
    }
}
