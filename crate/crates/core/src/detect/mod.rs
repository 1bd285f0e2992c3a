//! Crack detectors: Canny edge pipeline, trained patch classifier, and a
//! ground-truth oracle, plus an accuracy/latency benchmark.

mod bench;
mod canny;
mod classifier;

use rand::Rng;

pub use bench::{benchmark, BenchDetector, BenchRow, BENCH_HEADER};
pub use canny::{
    canny, decide_canny, double_threshold, gaussian_blur, gaussian_kernel, hysteresis,
    non_max_suppression, sobel, CannyConfig, Direction, EdgeMap, Plane,
};
pub use classifier::{
    classifier_spec, infer_classifier, train_classifier, Classifier, ClassifierConfig, EpochStats,
    TrainReport,
};

use crate::env::{Cell, WorldState};
use crate::error::Result;
use crate::render::{render_patch, RenderConfig};
use crate::rng::SimRng;

/// Detector verdict for one scanned cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub present: bool,
    pub confidence: f64,
    /// Edge pixels for Canny; 0 for detectors without a pixel count.
    pub pixel_count: usize,
    pub cells: Vec<Cell>,
}

/// Scans one cell of the world. Randomness (rendering noise, oracle flips)
/// comes only from `rng`.
pub trait CrackDetector: Send + Sync {
    fn name(&self) -> &str;
    fn detect(&self, world: &WorldState, cell: Cell, rng: &mut SimRng) -> Result<Detection>;
}

#[derive(Debug, Clone, Default)]
pub struct CannyDetector {
    pub canny: CannyConfig,
    pub render: RenderConfig,
}

impl CrackDetector for CannyDetector {
    fn name(&self) -> &str {
        "canny"
    }

    fn detect(&self, world: &WorldState, cell: Cell, rng: &mut SimRng) -> Result<Detection> {
        let patch = render_patch(world, cell, &self.render, rng);
        let edges = canny(&patch.pixels, patch.resolution, patch.resolution, &self.canny)?;
        Ok(decide_canny(&edges, cell, &self.canny))
    }
}

#[derive(Debug, Clone)]
pub struct CnnDetector {
    pub model: Classifier,
    pub render: RenderConfig,
}

impl CrackDetector for CnnDetector {
    fn name(&self) -> &str {
        "cnn"
    }

    fn detect(&self, world: &WorldState, cell: Cell, rng: &mut SimRng) -> Result<Detection> {
        let patch = render_patch(world, cell, &self.render, rng);
        infer_classifier(&self.model, &patch.pixels, patch.resolution, cell)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OracleDetector {
    pub flip: f64,
}

impl CrackDetector for OracleDetector {
    fn name(&self) -> &str {
        "oracle"
    }

    fn detect(&self, world: &WorldState, cell: Cell, rng: &mut SimRng) -> Result<Detection> {
        Ok(oracle_detector(world, cell, self.flip, rng))
    }
}

/// Ground truth (a true crack touches `cell`), inverted with probability `flip`.
pub fn oracle_detector<R: Rng + ?Sized>(world: &WorldState, cell: Cell, flip: f64, rng: &mut R) -> Detection {
    oracle_verdict(world.has_true_crack(cell), flip, cell, rng)
}

fn oracle_verdict<R: Rng + ?Sized>(truth: bool, flip: f64, cell: Cell, rng: &mut R) -> Detection {
    let present = truth ^ (rng.random::<f64>() < flip);
    Detection {
        present,
        confidence: if present { 1.0 } else { 0.0 },
        pixel_count: 0,
        cells: vec![cell],
    }
}
