use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Softmax,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Dense { inputs: usize, outputs: usize },
    /// Valid padding: output side is `(side - kernel) / stride + 1`.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
    },
    /// Non-overlapping `window x window` pooling; trailing rows/cols that do
    /// not fill a window are dropped.
    MaxPool { window: usize },
    Activation(Activation),
    Flatten,
}

impl Layer {
    pub fn has_params(&self) -> bool {
        matches!(self, Layer::Dense { .. } | Layer::Conv2d { .. })
    }

    /// (weight shape, bias shape) for parameterized layers.
    pub(crate) fn param_shapes(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        match *self {
            Layer::Dense { inputs, outputs } => Some((vec![outputs, inputs], vec![outputs])),
            Layer::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => Some((
                vec![out_channels, in_channels, kernel, kernel],
                vec![out_channels],
            )),
            _ => None,
        }
    }

    fn output_shape(&self, input: &[usize]) -> std::result::Result<Vec<usize>, String> {
        match *self {
            Layer::Dense { inputs, outputs } => match input {
                [n] if *n == inputs => Ok(vec![outputs]),
                _ => Err(format!("dense expects [{inputs}], got {input:?}")),
            },
            Layer::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
            } => match input {
                [c, h, w] if *c == in_channels => {
                    if kernel == 0 || stride == 0 {
                        return Err("kernel and stride must be positive".into());
                    }
                    if *h < kernel || *w < kernel {
                        return Err(format!("input {h}x{w} smaller than kernel {kernel}"));
                    }
                    Ok(vec![
                        out_channels,
                        (h - kernel) / stride + 1,
                        (w - kernel) / stride + 1,
                    ])
                }
                _ => Err(format!("conv expects [{in_channels}, h, w], got {input:?}")),
            },
            Layer::MaxPool { window } => match input {
                [c, h, w] if window > 0 && *h >= window && *w >= window => {
                    Ok(vec![*c, h / window, w / window])
                }
                _ => Err(format!("max-pool {window} cannot apply to {input:?}")),
            },
            Layer::Activation(Activation::Softmax) => match input {
                [_] => Ok(input.to_vec()),
                _ => Err(format!("softmax expects a vector, got {input:?}")),
            },
            Layer::Activation(_) => Ok(input.to_vec()),
            Layer::Flatten => Ok(vec![input.iter().product()]),
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layer::Dense { inputs, outputs } => write!(f, "dense{inputs}-{outputs}"),
            Layer::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
            } => write!(f, "conv{in_channels}-{out_channels}k{kernel}s{stride}"),
            Layer::MaxPool { window } => write!(f, "maxpool{window}"),
            Layer::Activation(Activation::Relu) => f.write_str("relu"),
            Layer::Activation(Activation::Softmax) => f.write_str("softmax"),
            Layer::Activation(Activation::Sigmoid) => f.write_str("sigmoid"),
            Layer::Flatten => f.write_str("flatten"),
        }
    }
}

/// Layer stack plus the per-sample input shape it was validated against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    shapes: Vec<Vec<usize>>,
}

impl NetworkSpec {
    pub fn new(input_shape: Vec<usize>, layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Network("at least one layer is required".into()));
        }
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(Error::Network(format!("bad input shape {input_shape:?}")));
        }
        let mut shapes = vec![input_shape.clone()];
        for (i, layer) in layers.iter().enumerate() {
            let next = layer
                .output_shape(shapes.last().unwrap())
                .map_err(|detail| Error::Shape { layer: i, detail })?;
            shapes.push(next);
        }
        Ok(NetworkSpec {
            input_shape,
            layers,
            shapes,
        })
    }

    /// Fully connected stack: `sizes[0] -> ... -> sizes[n]` with ReLU between
    /// layers and an optional final activation.
    pub fn mlp(sizes: &[usize], output: Option<Activation>) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Network("mlp needs at least two sizes".into()));
        }
        let mut layers = Vec::new();
        for (i, pair) in sizes.windows(2).enumerate() {
            layers.push(Layer::Dense {
                inputs: pair[0],
                outputs: pair[1],
            });
            if i + 2 < sizes.len() {
                layers.push(Layer::Activation(Activation::Relu));
            }
        }
        if let Some(act) = output {
            layers.push(Layer::Activation(act));
        }
        NetworkSpec::new(vec![sizes[0]], layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        self.shapes.last().unwrap()
    }

    /// Per-sample input shape of layer `i`.
    pub fn layer_input_shape(&self, i: usize) -> &[usize] {
        &self.shapes[i]
    }

    /// FNV-1a over the canonical description.
    pub fn fingerprint(&self) -> u64 {
        fnv1a(self.to_string().as_bytes())
    }
}

impl fmt::Display for NetworkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.input_shape.iter().map(|d| d.to_string()).collect();
        write!(f, "in{}", dims.join("x"))?;
        for layer in &self.layers {
            write!(f, ";{layer}")?;
        }
        Ok(())
    }
}

impl FromStr for Layer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Network(format!("cannot parse layer `{s}`"));
        let num = |v: &str| v.parse::<usize>().map_err(|_| bad());
        Ok(match s {
            "relu" => Layer::Activation(Activation::Relu),
            "softmax" => Layer::Activation(Activation::Softmax),
            "sigmoid" => Layer::Activation(Activation::Sigmoid),
            "flatten" => Layer::Flatten,
            _ => {
                if let Some(rest) = s.strip_prefix("dense") {
                    let (i, o) = rest.split_once('-').ok_or_else(bad)?;
                    Layer::Dense { inputs: num(i)?, outputs: num(o)? }
                } else if let Some(rest) = s.strip_prefix("conv") {
                    let (i, rest) = rest.split_once('-').ok_or_else(bad)?;
                    let (o, rest) = rest.split_once('k').ok_or_else(bad)?;
                    let (k, st) = rest.split_once('s').ok_or_else(bad)?;
                    Layer::Conv2d { in_channels: num(i)?, out_channels: num(o)?, kernel: num(k)?, stride: num(st)? }
                } else if let Some(w) = s.strip_prefix("maxpool") {
                    Layer::MaxPool { window: num(w)? }
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

/// Parses the canonical description produced by `Display`.
impl FromStr for NetworkSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(';');
        let input = parts
            .next()
            .and_then(|p| p.strip_prefix("in"))
            .ok_or_else(|| Error::Network(format!("missing input shape in `{s}`")))?;
        let input_shape = input
            .split('x')
            .map(|d| d.parse::<usize>().map_err(|_| Error::Network(format!("bad input shape `{input}`"))))
            .collect::<Result<Vec<_>>>()?;
        let layers = parts.map(str::parse).collect::<Result<Vec<Layer>>>()?;
        NetworkSpec::new(input_shape, layers)
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
