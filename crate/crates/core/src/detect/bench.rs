use std::hint::black_box;
use std::time::Instant;

use super::{canny, decide_canny, infer_classifier, oracle_verdict, CannyConfig, Classifier, Detection};
use crate::env::Cell;
use crate::error::{Error, Result};
use crate::io::CsvRow;
use crate::render::{Dataset, PatchLabel};
use crate::rng::stream;

pub const BENCH_HEADER: &[&str] = &[
    "detector",
    "accuracy",
    "precision",
    "recall",
    "fpr_false_cracks",
    "latency_ms_mean",
    "latency_ms_p95",
];

pub enum BenchDetector<'a> {
    Canny(CannyConfig),
    Cnn(&'a Classifier),
    Oracle { flip: f64 },
}

impl BenchDetector<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            BenchDetector::Canny(_) => "canny",
            BenchDetector::Cnn(_) => "cnn",
            BenchDetector::Oracle { .. } => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub detector: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    /// Share of false-crack patches reported as cracks.
    pub fpr_false_cracks: f64,
    pub latency_ms_mean: f64,
    pub latency_ms_p95: f64,
}

impl CsvRow for BenchRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.detector.clone(),
            format!("{:.6}", self.accuracy),
            format!("{:.6}", self.precision),
            format!("{:.6}", self.recall),
            format!("{:.6}", self.fpr_false_cracks),
            format!("{:.6}", self.latency_ms_mean),
            format!("{:.6}", self.latency_ms_p95),
        ]
    }
}

/// Scores each detector on every patch and times it. Verdicts come from the
/// first timed pass; latency is the per-patch wall-clock mean over
/// `repetitions` passes, measured after one warm-up pass.
pub fn benchmark(detectors: &[BenchDetector], data: &Dataset, repetitions: usize, seed: u64) -> Result<Vec<BenchRow>> {
    if repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
    }
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let res = data.resolution;
    let cell = Cell::new(0, 0);
    let mut rows = Vec::with_capacity(detectors.len());
    for det in detectors {
        let run = |i: usize, rng: &mut crate::rng::SimRng| -> Result<Detection> {
            let img = &data.images[i];
            match det {
                BenchDetector::Canny(cfg) => Ok(decide_canny(&canny(img, res, res, cfg)?, cell, cfg)),
                BenchDetector::Cnn(model) => infer_classifier(model, img, res, cell),
                BenchDetector::Oracle { flip } => {
                    Ok(oracle_verdict(data.rows[i].label.is_crack(), *flip, cell, rng))
                }
            }
        };
        let mut rng = stream(seed, &[]);
        for i in 0..data.len() {
            black_box(run(i, &mut rng)?);
        }
        let mut rng = stream(seed, &[]);
        let mut verdicts = Vec::with_capacity(data.len());
        let mut per_patch = vec![0.0; data.len()];
        for rep in 0..repetitions {
            for (i, t) in per_patch.iter_mut().enumerate() {
                let start = Instant::now();
                let d = black_box(run(i, &mut rng)?);
                *t += start.elapsed().as_secs_f64() * 1e3;
                if rep == 0 {
                    verdicts.push(d.present);
                }
            }
        }
        for t in per_patch.iter_mut() {
            *t /= repetitions as f64;
        }
        rows.push(score(det.name(), data, &verdicts, &per_patch));
    }
    Ok(rows)
}

fn score(name: &str, data: &Dataset, verdicts: &[bool], latency_ms: &[f64]) -> BenchRow {
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    let (mut false_total, mut false_hits) = (0usize, 0usize);
    for (row, &v) in data.rows.iter().zip(verdicts) {
        match (row.label.is_crack(), v) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
        if row.label == PatchLabel::False {
            false_total += 1;
            false_hits += usize::from(v);
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut sorted = latency_ms.to_vec();
    sorted.sort_by(f64::total_cmp);
    let p95 = sorted[((sorted.len() as f64 * 0.95).ceil() as usize).clamp(1, sorted.len()) - 1];
    BenchRow {
        detector: name.to_string(),
        accuracy: ratio(tp + tn, verdicts.len()),
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        fpr_false_cracks: ratio(false_hits, false_total),
        latency_ms_mean: latency_ms.iter().sum::<f64>() / latency_ms.len() as f64,
        latency_ms_p95: p95,
    }
}
