use std::collections::VecDeque;

use super::Detection;
use crate::env::Cell;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CannyConfig {
    pub kernel_size: usize,
    pub sigma: f64,
    /// Hysteresis thresholds on the normalized gradient magnitude.
    pub low: f64,
    pub high: f64,
    /// Decision threshold on the edge score.
    pub decision_threshold: f64,
    /// Edge pixels per patch side that saturate the edge score.
    pub reference_per_side: f64,
}

impl Default for CannyConfig {
    fn default() -> Self {
        CannyConfig {
            kernel_size: 5,
            sigma: 1.0,
            low: 0.1,
            high: 0.3,
            decision_threshold: 0.6,
            reference_per_side: 0.46875,
        }
    }
}

impl CannyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kernel_size < 3 || self.kernel_size.is_multiple_of(2) {
            return Err(Error::Config("kernel_size must be odd and >= 3".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Config("sigma must be positive".into()));
        }
        if !(0.0 < self.low && self.low < self.high && self.high < 1.0) {
            return Err(Error::Config("thresholds must satisfy 0 < low < high < 1".into()));
        }
        if !(self.decision_threshold > 0.0 && self.decision_threshold <= 1.0) {
            return Err(Error::Config("decision_threshold must be in (0, 1]".into()));
        }
        if !(self.reference_per_side > 0.0) {
            return Err(Error::Config("reference_per_side must be positive".into()));
        }
        Ok(())
    }

    /// Edge count that maps to confidence 1 for a `side`-pixel patch.
    pub fn reference_count(&self, side: usize) -> f64 {
        self.reference_per_side * side as f64
    }
}

/// Gradient direction bins, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    D0,
    D45,
    D90,
    D135,
}

impl Direction {
    pub fn quantize(gx: f64, gy: f64) -> Direction {
        let mut deg = gy.atan2(gx).to_degrees();
        if deg < 0.0 {
            deg += 180.0;
        }
        if !(22.5..157.5).contains(&deg) {
            Direction::D0
        } else if deg < 67.5 {
            Direction::D45
        } else if deg < 112.5 {
            Direction::D90
        } else {
            Direction::D135
        }
    }

    /// Offsets of the two neighbours along the gradient.
    fn offsets(self) -> [(i64, i64); 2] {
        match self {
            Direction::D0 => [(1, 0), (-1, 0)],
            Direction::D45 => [(1, 1), (-1, -1)],
            Direction::D90 => [(0, 1), (0, -1)],
            Direction::D135 => [(-1, 1), (1, -1)],
        }
    }
}

/// Row-major scalar image.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    fn at_clamped(&self, x: i64, y: i64) -> f64 {
        let x = x.clamp(0, self.width as i64 - 1) as usize;
        let y = y.clamp(0, self.height as i64 - 1) as usize;
        self.data[y * self.width + x]
    }

    fn at(&self, x: i64, y: i64) -> f64 {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            0.0
        } else {
            self.data[y as usize * self.width + x as usize]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub edges: Vec<bool>,
}

impl EdgeMap {
    pub fn count(&self) -> usize {
        self.edges.iter().filter(|&&e| e).count()
    }
}

pub fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let r = (size / 2) as f64;
    let k: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - r;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Separable Gaussian blur with replicated borders.
pub fn gaussian_blur(img: &Plane, size: usize, sigma: f64) -> Plane {
    let k = gaussian_kernel(size, sigma);
    let r = (size / 2) as i64;
    let (w, h) = (img.width, img.height);
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * img.at_clamped(x as i64 + i as i64 - r, y as i64))
                .sum();
        }
    }
    let tmp = Plane { width: w, height: h, data: tmp };
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp.at_clamped(x as i64, y as i64 + i as i64 - r))
                .sum();
        }
    }
    Plane { width: w, height: h, data: out }
}

/// Sobel gradient magnitude, scaled so a unit step edge gives 1, and the
/// quantized gradient direction.
pub fn sobel(img: &Plane) -> (Plane, Vec<Direction>) {
    let (w, h) = (img.width, img.height);
    let mut mag = vec![0.0; w * h];
    let mut dir = vec![Direction::D0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let p = |dx: i64, dy: i64| img.at_clamped(x + dx, y + dy);
            let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            let i = y as usize * w + x as usize;
            mag[i] = gx.hypot(gy) / 4.0;
            dir[i] = Direction::quantize(gx, gy);
        }
    }
    (Plane { width: w, height: h, data: mag }, dir)
}

/// Keeps pixels that are at least as large as both neighbours along the
/// gradient; the rest become 0.
pub fn non_max_suppression(mag: &Plane, dir: &[Direction]) -> Plane {
    let (w, h) = (mag.width, mag.height);
    let mut out = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let i = y as usize * w + x as usize;
            let m = mag.data[i];
            let [a, b] = dir[i].offsets();
            if m > 0.0 && m >= mag.at(x + a.0, y + a.1) && m >= mag.at(x + b.0, y + b.1) {
                out[i] = m;
            }
        }
    }
    Plane { width: w, height: h, data: out }
}

/// `(strong, weak)` masks: `mag >= high` and `low <= mag < high`.
pub fn double_threshold(mag: &Plane, low: f64, high: f64) -> (Vec<bool>, Vec<bool>) {
    let strong = mag.data.iter().map(|&m| m >= high).collect();
    let weak = mag.data.iter().map(|&m| m >= low && m < high).collect();
    (strong, weak)
}

/// Strong pixels plus weak pixels 8-connected to a strong one through weak pixels.
pub fn hysteresis(width: usize, height: usize, strong: &[bool], weak: &[bool]) -> EdgeMap {
    let mut edges = strong.to_vec();
    let mut queue: VecDeque<usize> = (0..edges.len()).filter(|&i| edges[i]).collect();
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % width) as i64, (i / width) as i64);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                    continue;
                }
                let j = ny as usize * width + nx as usize;
                if weak[j] && !edges[j] {
                    edges[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    EdgeMap { width, height, edges }
}

/// Full pipeline: blur, Sobel, non-maximum suppression, double threshold,
/// hysteresis. `pixels` is a row-major `width x height` image in `[0, 1]`.
pub fn canny(pixels: &[f64], width: usize, height: usize, cfg: &CannyConfig) -> Result<EdgeMap> {
    cfg.validate()?;
    if pixels.len() != width * height {
        return Err(Error::InvalidArgument(format!(
            "{} pixels for a {width}x{height} image",
            pixels.len()
        )));
    }
    if width < cfg.kernel_size || height < cfg.kernel_size {
        return Err(Error::InvalidArgument(format!(
            "{width}x{height} patch is smaller than the {} px kernel",
            cfg.kernel_size
        )));
    }
    let img = Plane { width, height, data: pixels.to_vec() };
    let blurred = gaussian_blur(&img, cfg.kernel_size, cfg.sigma);
    let (mag, dir) = sobel(&blurred);
    let thin = non_max_suppression(&mag, &dir);
    let (strong, weak) = double_threshold(&thin, cfg.low, cfg.high);
    Ok(hysteresis(width, height, &strong, &weak))
}

/// Edge score `min(1, edges / reference)`; present when it reaches the decision threshold.
pub fn decide_canny(edges: &EdgeMap, cell: Cell, cfg: &CannyConfig) -> Detection {
    let count = edges.count();
    let side = edges.width.max(edges.height);
    let confidence = (count as f64 / cfg.reference_count(side)).min(1.0);
    Detection {
        present: confidence >= cfg.decision_threshold,
        confidence,
        pixel_count: count,
        cells: vec![cell],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_image(side: usize, col: usize) -> Vec<f64> {
        (0..side * side)
            .map(|i| if i % side < col { 0.2 } else { 0.8 })
            .collect()
    }

    #[test]
    fn constant_image_has_no_edges() {
        let e = canny(&vec![0.37; 32 * 32], 32, 32, &CannyConfig::default()).unwrap();
        assert_eq!(e.count(), 0);
    }

    #[test]
    fn step_edge_is_localized() {
        let e = canny(&step_image(32, 16), 32, 32, &CannyConfig::default()).unwrap();
        assert!(e.count() > 0);
        for (i, &on) in e.edges.iter().enumerate() {
            if on {
                let x = i % 32;
                // The step lies between columns 15 and 16.
                assert!((15..=17).contains(&x), "edge at column {x}");
            }
        }
    }

    #[test]
    fn unit_step_gradient_is_one() {
        let img = Plane { width: 8, height: 8, data: (0..64).map(|i| if i % 8 < 4 { 0.0 } else { 1.0 }).collect() };
        let (mag, dir) = sobel(&img);
        assert_eq!(mag.data[3 * 8 + 3], 1.0);
        assert_eq!(mag.data[3 * 8 + 4], 1.0);
        assert_eq!(mag.data[3 * 8 + 1], 0.0);
        assert_eq!(dir[3 * 8 + 4], Direction::D0);
    }

    #[test]
    fn isolated_weak_pixels_are_dropped() {
        let mut weak = vec![false; 25];
        let mut strong = vec![false; 25];
        weak[6] = true;
        weak[18] = true;
        strong[0] = true;
        let e = hysteresis(5, 5, &strong, &weak);
        assert!(e.edges[0] && e.edges[6]);
        assert!(!e.edges[18]);
    }

    #[test]
    fn rejects_small_patch_and_bad_config() {
        assert!(canny(&[0.5; 9], 3, 3, &CannyConfig::default()).is_err());
        let bad = CannyConfig { low: 0.4, ..CannyConfig::default() };
        assert!(canny(&[0.5; 64], 8, 8, &bad).is_err());
    }

    #[test]
    fn decision_saturates() {
        let cfg = CannyConfig::default();
        let side = 64;
        let reference = cfg.reference_count(side) as usize;
        let mut e = EdgeMap { width: side, height: side, edges: vec![false; side * side] };
        let d = decide_canny(&e, Cell::new(0, 0), &cfg);
        assert_eq!((d.present, d.confidence), (false, 0.0));
        // 18 edge pixels is the smallest count that fires at 64 px.
        for (n, fires) in [(17, false), (18, true)] {
            e.edges[..n].iter_mut().for_each(|v| *v = true);
            assert_eq!(decide_canny(&e, Cell::new(0, 0), &cfg).present, fires);
        }
        for v in e.edges.iter_mut().take(reference) {
            *v = true;
        }
        let d = decide_canny(&e, Cell::new(0, 0), &cfg);
        assert_eq!((d.present, d.confidence), (true, 1.0));
    }
}
