use std::path::Path;

use rand::seq::SliceRandom;

use super::Detection;
use crate::env::Cell;
use crate::error::{Error, Result};
use crate::nn::{
    adam_step, backward, cross_entropy, forward, stored_spec_description, Activation, AdamState,
    Layer, NetworkSpec, Parameters, Tensor,
};
use crate::render::Dataset;
use crate::rng::{stream, TAG_INIT, TAG_SHUFFLE};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    /// Output channels of the two convolution stages.
    pub channels: (usize, usize),
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            channels: (8, 16),
            epochs: 20,
            batch_size: 32,
            learning_rate: 1e-3,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Conv(1->c1, 3) -> ReLU -> MaxPool2 -> Conv(c1->c2, 3) -> ReLU -> MaxPool2
/// -> Flatten -> Dense -> Softmax over `[no crack, crack]`.
pub fn classifier_spec(resolution: usize, channels: (usize, usize)) -> Result<NetworkSpec> {
    let (c1, c2) = channels;
    let side = ((resolution.saturating_sub(2)) / 2).saturating_sub(2) / 2;
    NetworkSpec::new(
        vec![1, resolution, resolution],
        vec![
            Layer::Conv2d { in_channels: 1, out_channels: c1, kernel: 3, stride: 1 },
            Layer::Activation(Activation::Relu),
            Layer::MaxPool { window: 2 },
            Layer::Conv2d { in_channels: c1, out_channels: c2, kernel: 3, stride: 1 },
            Layer::Activation(Activation::Relu),
            Layer::MaxPool { window: 2 },
            Layer::Flatten,
            Layer::Dense { inputs: c2 * side * side, outputs: 2 },
            Layer::Activation(Activation::Softmax),
        ],
    )
}

/// Trained patch classifier.
#[derive(Debug, Clone)]
pub struct Classifier {
    pub spec: NetworkSpec,
    pub params: Parameters,
}

impl Classifier {
    pub fn resolution(&self) -> usize {
        self.spec.input_shape()[1]
    }

    /// Crack probability per image; `images` are row-major square patches.
    pub fn predict(&self, images: &[&[f64]]) -> Result<Vec<f64>> {
        let res = self.resolution();
        let mut data = Vec::with_capacity(images.len() * res * res);
        for img in images {
            if img.len() != res * res {
                return Err(Error::InvalidArgument(format!(
                    "patch has {} pixels, classifier expects {res}x{res}",
                    img.len()
                )));
            }
            data.extend_from_slice(img);
        }
        let input = Tensor::new(vec![images.len(), 1, res, res], data)?;
        let (out, _) = forward(&self.spec, &self.params, &input)?;
        Ok(out.data().chunks(2).map(|p| p[1]).collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.params.save(&self.spec, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let spec: NetworkSpec = stored_spec_description(path)?.parse()?;
        let params = Parameters::load(&spec, path)?;
        Ok(Classifier { spec, params })
    }
}

/// Crack-class probability as confidence; present at `>= 0.5`.
pub fn infer_classifier(model: &Classifier, pixels: &[f64], resolution: usize, cell: Cell) -> Result<Detection> {
    if resolution != model.resolution() {
        return Err(Error::InvalidArgument(format!(
            "patch resolution {resolution} does not match classifier resolution {}",
            model.resolution()
        )));
    }
    let confidence = model.predict(&[pixels])?[0];
    Ok(Detection { present: confidence >= 0.5, confidence, pixel_count: 0, cells: vec![cell] })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Dataset indices held out for validation.
    pub validation_indices: Vec<usize>,
}

impl TrainReport {
    pub fn final_validation_accuracy(&self) -> f64 {
        self.epochs.last().map_or(0.0, |e| e.validation_accuracy)
    }
}

/// Trains from scratch with Adam on a seeded 80/20 split (by default).
/// Crack patches are the positive class; bare and false-crack patches negative.
pub fn train_classifier(data: &Dataset, cfg: &ClassifierConfig) -> Result<(Classifier, TrainReport)> {
    if cfg.epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be at least 1".into()));
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::InvalidArgument("batch_size and learning_rate must be positive".into()));
    }
    if !(0.0..1.0).contains(&cfg.validation_fraction) {
        return Err(Error::InvalidArgument("validation_fraction must be in [0, 1)".into()));
    }
    let labels: Vec<usize> = data.rows.iter().map(|r| usize::from(r.label.is_crack())).collect();
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::InvalidArgument("training data must contain both classes".into()));
    }
    let spec = classifier_spec(data.resolution, cfg.channels)?;
    let mut params = Parameters::init(&spec, &mut stream(cfg.seed, &[TAG_INIT]));
    let mut adam = AdamState::new(&params, cfg.learning_rate);

    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut stream(cfg.seed, &[TAG_SHUFFLE]));
    let n_val = (data.len() as f64 * cfg.validation_fraction).round() as usize;
    let (val, train) = order.split_at(n_val);
    let mut train = train.to_vec();
    let res = data.resolution;

    let batch_input = |idx: &[usize]| -> Result<Tensor> {
        let mut v = Vec::with_capacity(idx.len() * res * res);
        for &i in idx {
            v.extend_from_slice(&data.images[i]);
        }
        Tensor::new(vec![idx.len(), 1, res, res], v)
    };

    let mut report = TrainReport { epochs: Vec::new(), validation_indices: val.to_vec() };
    for epoch in 0..cfg.epochs {
        train.shuffle(&mut stream(cfg.seed, &[TAG_SHUFFLE, epoch as u64 + 1]));
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for chunk in train.chunks(cfg.batch_size) {
            let input = batch_input(chunk)?;
            let y: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (probs, cache) = forward(&spec, &params, &input)?;
            let (loss, grad) = cross_entropy(&probs, &y);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss(format!("classifier epoch {epoch}")));
            }
            loss_sum += loss * chunk.len() as f64;
            correct += probs
                .data()
                .chunks(2)
                .zip(&y)
                .filter(|(p, &t)| usize::from(p[1] >= 0.5) == t)
                .count();
            let (grads, _) = backward(&spec, &params, &cache, &grad)?;
            adam_step(&mut params, &grads, &mut adam)?;
        }
        let model = Classifier { spec: spec.clone(), params: params.clone() };
        let validation_accuracy = accuracy(&model, data, val, &labels)?;
        report.epochs.push(EpochStats {
            epoch: epoch + 1,
            train_loss: loss_sum / train.len().max(1) as f64,
            train_accuracy: correct as f64 / train.len().max(1) as f64,
            validation_accuracy,
        });
    }
    Ok((Classifier { spec, params }, report))
}

fn accuracy(model: &Classifier, data: &Dataset, idx: &[usize], labels: &[usize]) -> Result<f64> {
    if idx.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for chunk in idx.chunks(64) {
        let imgs: Vec<&[f64]> = chunk.iter().map(|&i| data.images[i].as_slice()).collect();
        let probs = model.predict(&imgs)?;
        correct += probs
            .iter()
            .zip(chunk)
            .filter(|(&p, &i)| usize::from(p >= 0.5) == labels[i])
            .count();
    }
    Ok(correct as f64 / idx.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_shapes() {
        let spec = classifier_spec(64, (8, 16)).unwrap();
        assert_eq!(spec.output_shape(), &[2]);
        assert_eq!(spec.layer_input_shape(7), &[16 * 14 * 14]);
        assert_eq!(classifier_spec(32, (8, 16)).unwrap().layer_input_shape(7), &[16 * 6 * 6]);
    }

    #[test]
    fn tie_goes_to_detection_and_resolution_is_checked() {
        let spec = classifier_spec(16, (2, 2)).unwrap();
        // All-zero parameters give equal logits, so p(crack) = 0.5 exactly.
        let model = Classifier { params: Parameters::zeros(&spec), spec };
        let d = infer_classifier(&model, &[0.5; 256], 16, Cell::new(1, 1)).unwrap();
        assert_eq!(d.confidence, 0.5);
        assert!(d.present);
        assert!(infer_classifier(&model, &[0.5; 1024], 32, Cell::new(1, 1)).is_err());
    }
}
