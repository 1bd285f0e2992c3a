//! Camera patches of grid cells and labeled patch corpora.

mod dataset;
mod pgm;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

pub use dataset::{gen_dataset, load_dataset, Dataset, ManifestRow, MANIFEST_HEADER};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm, GrayImage};

use crate::env::{
    cell_rect, segment_distance, CarState, Cell, CrackSpec, Point, Rect, WorldState, CAR_LENGTH_M,
    CAR_WIDTH_M,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    /// Pixels per patch side.
    pub resolution: usize,
    pub background_mean: f64,
    /// Per-pixel background texture.
    pub background_std: f64,
    /// Additive sensor noise.
    pub noise_std: f64,
    pub true_crack_intensity: f64,
    pub false_crack_intensity: f64,
    pub min_thickness_px: f64,
    pub car_intensity: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            resolution: 64,
            background_mean: 0.75,
            background_std: 0.02,
            noise_std: 0.04,
            true_crack_intensity: 0.15,
            false_crack_intensity: 0.45,
            min_thickness_px: 2.0,
            car_intensity: 0.9,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolution < 16 {
            return Err(Error::Config("resolution must be at least 16".into()));
        }
        let unit = [
            self.background_mean,
            self.true_crack_intensity,
            self.false_crack_intensity,
            self.car_intensity,
        ];
        if unit.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config("intensities must be in [0, 1]".into()));
        }
        if !(self.background_std >= 0.0 && self.noise_std >= 0.0) {
            return Err(Error::Config("noise levels must be non-negative".into()));
        }
        let contrast = |v: f64| (v - self.background_mean).abs();
        if contrast(self.true_crack_intensity) <= contrast(self.false_crack_intensity) {
            return Err(Error::Config("true cracks must contrast more than false cracks".into()));
        }
        if !(self.min_thickness_px > 0.0) {
            return Err(Error::Config("min_thickness_px must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatchLabel {
    Crack,
    None,
    False,
}

impl PatchLabel {
    pub fn name(self) -> &'static str {
        match self {
            PatchLabel::Crack => "crack",
            PatchLabel::None => "none",
            PatchLabel::False => "false",
        }
    }

    pub fn is_crack(self) -> bool {
        self == PatchLabel::Crack
    }
}

impl fmt::Display for PatchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PatchLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crack" => Ok(PatchLabel::Crack),
            "none" => Ok(PatchLabel::None),
            "false" => Ok(PatchLabel::False),
            other => Err(Error::InvalidArgument(format!("unknown label `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub resolution: usize,
    /// Row-major intensities in `[0, 1]`; row index grows with deck `y`.
    pub pixels: Vec<f64>,
    pub label: PatchLabel,
    /// Crack geometry before occlusion and noise.
    pub mask: Vec<bool>,
}

impl Patch {
    pub fn mask_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn image(&self) -> GrayImage {
        GrayImage { width: self.resolution, height: self.resolution, pixels: self.pixels.clone() }
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }
}

/// Pixel mask of a crack inside `rect`, drawn as round-capped strokes of
/// `thickness` pixels. Bezier cracks are sampled at `4 * resolution` steps.
///
/// A pixel is set when its center lies within `thickness / 2 + 1/8` of the
/// centerline. Without the margin a 2 px diagonal stroke can cover as few as
/// 1.5 pixels per pixel of length; with it every direction covers at least
/// `thickness`, and axis-aligned strokes are unchanged.
pub fn rasterize(crack: &CrackSpec, rect: Rect, resolution: usize, thickness: f64) -> Vec<bool> {
    let mut mask = vec![false; resolution * resolution];
    let px = (rect.x1 - rect.x0) / resolution as f64;
    let half = thickness / 2.0 + STROKE_MARGIN_PX;
    let to_px = |p: Point| Point::new((p.x - rect.x0) / px, (p.y - rect.y0) / px);
    for line in crack.polylines(4 * resolution) {
        for seg in line.windows(2) {
            let (a, b) = (to_px(seg[0]), to_px(seg[1]));
            let lo_x = (a.x.min(b.x) - half).floor().max(0.0) as usize;
            let lo_y = (a.y.min(b.y) - half).floor().max(0.0) as usize;
            let hi_x = (a.x.max(b.x) + half).ceil().min(resolution as f64);
            let hi_y = (a.y.max(b.y) + half).ceil().min(resolution as f64);
            if hi_x <= 0.0 || hi_y <= 0.0 {
                continue;
            }
            for j in lo_y..hi_y as usize {
                for i in lo_x..hi_x as usize {
                    let c = Point::new(i as f64 + 0.5, j as f64 + 0.5);
                    if segment_distance(c, a, b) <= half {
                        mask[j * resolution + i] = true;
                    }
                }
            }
        }
    }
    mask
}

const STROKE_MARGIN_PX: f64 = 0.125;

/// Stroke thickness in pixels for a crack of `width_m`.
pub fn stroke_px(width_m: f64, rect: Rect, cfg: &RenderConfig) -> f64 {
    let px = (rect.x1 - rect.x0) / cfg.resolution as f64;
    (width_m / px).max(cfg.min_thickness_px)
}

/// Renders the view of `rect` containing `cracks` and `cars`.
pub fn render_scene<R: Rng + ?Sized>(
    cracks: &[&CrackSpec],
    cars: &[CarState],
    rect: Rect,
    lane_m: f64,
    cfg: &RenderConfig,
    rng: &mut R,
) -> Patch {
    let res = cfg.resolution;
    let n = res * res;
    let mut true_mask = vec![false; n];
    let mut false_mask = vec![false; n];
    let mut label = PatchLabel::None;
    for crack in cracks {
        if !crack.intersects(&rect) {
            continue;
        }
        let m = rasterize(crack, rect, res, stroke_px(crack.width_m, rect, cfg));
        let target = if crack.is_false { &mut false_mask } else { &mut true_mask };
        for (t, v) in target.iter_mut().zip(m) {
            *t |= v;
        }
        if !crack.is_false {
            label = PatchLabel::Crack;
        } else if label == PatchLabel::None {
            label = PatchLabel::False;
        }
    }

    let texture = normal(cfg.background_std);
    let noise = normal(cfg.noise_std);
    let mut pixels: Vec<f64> = (0..n).map(|_| cfg.background_mean + texture.sample(rng)).collect();
    for i in 0..n {
        if true_mask[i] {
            pixels[i] = cfg.true_crack_intensity;
        } else if false_mask[i] {
            pixels[i] = cfg.false_crack_intensity;
        }
    }
    let px = (rect.x1 - rect.x0) / res as f64;
    for car in cars {
        let lane_y = (car.lane as f64 + 0.5) * lane_m;
        let car_rect = Rect {
            x0: car.pos_m - CAR_LENGTH_M / 2.0,
            x1: car.pos_m + CAR_LENGTH_M / 2.0,
            y0: lane_y - CAR_WIDTH_M / 2.0,
            y1: lane_y + CAR_WIDTH_M / 2.0,
        };
        for j in 0..res {
            for i in 0..res {
                let c = Point::new(rect.x0 + (i as f64 + 0.5) * px, rect.y0 + (j as f64 + 0.5) * px);
                if car_rect.contains(c) {
                    pixels[j * res + i] = cfg.car_intensity;
                }
            }
        }
    }
    for p in pixels.iter_mut() {
        *p = (*p + noise.sample(rng)).clamp(0.0, 1.0);
    }
    let mask = true_mask.iter().zip(&false_mask).map(|(a, b)| *a || *b).collect();
    Patch { resolution: res, pixels, label, mask }
}

/// Camera patch of one grid cell.
pub fn render_patch<R: Rng + ?Sized>(world: &WorldState, cell: Cell, cfg: &RenderConfig, rng: &mut R) -> Patch {
    let cell_m = world.config.cell_m;
    let rect = cell_rect(cell, cell_m);
    let cracks: Vec<&CrackSpec> = world.cracks_in(cell).map(|id| &world.cracks[id]).collect();
    let cars: Vec<CarState> = world
        .cars
        .iter()
        .filter(|c| c.lane == cell.y)
        .copied()
        .collect();
    render_scene(&cracks, &cars, rect, cell_m, cfg, rng)
}

fn normal(std: f64) -> Normal<f64> {
    Normal::new(0.0, std).expect("std validated non-negative")
}
