//! Shared fixtures for the criterion benchmarks.

use std::sync::Arc;

use deckscan::detect::{classifier_spec, Classifier, ClassifierConfig, OracleDetector};
use deckscan::env::{generate_crack, BridgeEnv, CrackKind, DetectorKind, Rect, ScenarioConfig};
use deckscan::nn::Parameters;
use deckscan::render::{render_scene, Patch, RenderConfig};
use deckscan::rng::stream;

const CELL: Rect = Rect { x0: 0.0, y0: 0.0, x1: 100.0, y1: 100.0 };

/// A rendered cell with one line crack.
pub fn crack_patch(seed: u64) -> Patch {
    let mut rng = stream(seed, &[]);
    let crack = generate_crack(Some(CrackKind::Line), &mut rng, CELL, false).expect("crack fits a 100 m cell");
    render_scene(&[&crack], &[], CELL, 100.0, &RenderConfig::default(), &mut rng)
}

/// Untrained classifier with the default architecture; inference cost does
/// not depend on the weights.
pub fn classifier(seed: u64) -> Classifier {
    let res = RenderConfig::default().resolution;
    let spec = classifier_spec(res, ClassifierConfig::default().channels).expect("valid spec");
    let params = Parameters::init(&spec, &mut stream(seed, &[]));
    Classifier { spec, params }
}

/// Default deck with an exact oracle, so a step costs only the simulator.
pub fn oracle_env(seed: u64) -> BridgeEnv {
    let cfg = ScenarioConfig { detector: DetectorKind::Oracle, seed, ..Default::default() };
    BridgeEnv::new(cfg, Arc::new(OracleDetector { flip: 0.0 })).expect("default scenario is valid")
}
