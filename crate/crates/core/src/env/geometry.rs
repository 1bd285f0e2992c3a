use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, o: Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` in deck meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    /// Whether the closed segment `a-b` touches the rectangle (Liang-Barsky).
    pub fn intersects_segment(&self, a: Point, b: Point) -> bool {
        let d = b - a;
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for (p, q) in [
            (-d.x, a.x - self.x0),
            (d.x, self.x1 - a.x),
            (-d.y, a.y - self.y0),
            (d.y, self.y1 - a.y),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

/// Grid cell; `x` indexes along the deck length, `y` across the breadth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }
}

/// Cubic Bezier point `(1-t)^3 P0 + 3(1-t)^2 t P1 + 3(1-t) t^2 P2 + t^3 P3`.
/// Returns `None` for `t` outside `[0, 1]`.
pub fn bezier_point(p0: Point, p1: Point, p2: Point, p3: Point, t: f64) -> Option<Point> {
    if !(0.0..=1.0).contains(&t) {
        return None;
    }
    let u = 1.0 - t;
    let (a, b, c, d) = (u * u * u, 3.0 * u * u * t, 3.0 * u * t * t, t * t * t);
    Some(Point::new(
        a * p0.x + b * p1.x + c * p2.x + d * p3.x,
        a * p0.y + b * p1.y + c * p2.y + d * p3.y,
    ))
}

/// Distance from `p` to the segment `a-b`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len2 = d.x * d.x + d.y * d.y;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * d.x + (p.y - a.y) * d.y) / len2).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    const P0: Point = Point::new(1.0, 2.0);
    const P1: Point = Point::new(4.0, -3.0);
    const P2: Point = Point::new(-2.0, 7.0);
    const P3: Point = Point::new(9.0, 5.0);

    #[test]
    fn bezier_endpoints_and_midpoint() {
        assert_eq!(bezier_point(P0, P1, P2, P3, 0.0), Some(P0));
        assert_eq!(bezier_point(P0, P1, P2, P3, 1.0), Some(P3));
        let mid = bezier_point(P0, P1, P2, P3, 0.5).unwrap();
        let want = (P0 + P1 * 3.0 + P2 * 3.0 + P3) * 0.125;
        assert!(mid.dist(want) < 1e-12);
    }

    #[test]
    fn bezier_rejects_out_of_range() {
        assert!(bezier_point(P0, P1, P2, P3, -0.01).is_none());
        assert!(bezier_point(P0, P1, P2, P3, 1.5).is_none());
    }

    #[test]
    fn segment_rect_intersection() {
        let r = Rect { x0: 0.0, y0: 0.0, x1: 10.0, y1: 10.0 };
        assert!(r.intersects_segment(Point::new(-5.0, 5.0), Point::new(15.0, 5.0)));
        assert!(r.intersects_segment(Point::new(2.0, 2.0), Point::new(3.0, 3.0)));
        assert!(!r.intersects_segment(Point::new(-5.0, -1.0), Point::new(15.0, -1.0)));
        assert!(!r.intersects_segment(Point::new(11.0, 0.0), Point::new(20.0, 10.0)));
    }
}
