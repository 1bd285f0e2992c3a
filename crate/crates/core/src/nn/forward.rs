//! Batched forward and backward passes. Every tensor passed through the
//! network carries a leading batch dimension.

use super::params::{LayerParams, Parameters};
use super::spec::{Activation, Layer, NetworkSpec};
use super::tensor::{axpy, dot, Tensor};
use crate::error::{Error, Result};

/// Intermediate values from [`forward`] needed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    fingerprint: u64,
    revision: u64,
    /// `acts[i]` is the input of layer `i`; the last entry is the output.
    acts: Vec<Tensor>,
    /// Flat argmax indices (into the layer input) for each max-pool layer.
    argmax: Vec<Option<Vec<usize>>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Tensor {
        self.acts.last().unwrap()
    }
}

pub fn forward(spec: &NetworkSpec, params: &Parameters, input: &Tensor) -> Result<(Tensor, ForwardCache)> {
    params.check_matches(spec)?;
    let shape = input.shape();
    if shape.len() != spec.input_shape().len() + 1 || &shape[1..] != spec.input_shape() {
        return Err(Error::Shape {
            layer: 0,
            detail: format!(
                "input {:?} does not match [batch, {:?}]",
                shape,
                spec.input_shape()
            ),
        });
    }
    let batch = shape[0];
    let mut acts = Vec::with_capacity(spec.layers().len() + 1);
    let mut argmax = Vec::with_capacity(spec.layers().len());
    acts.push(input.clone());
    for (i, (layer, p)) in spec.layers().iter().zip(params.layers()).enumerate() {
        let x = acts.last().unwrap();
        let in_shape = spec.layer_input_shape(i);
        let out_shape = spec.layer_input_shape(i + 1);
        let mut full = vec![batch];
        full.extend_from_slice(out_shape);
        let mut pool_idx = None;
        let y = match *layer {
            Layer::Dense { inputs, outputs } => dense_forward(x, p, batch, inputs, outputs, full),
            Layer::Conv2d { stride, .. } => conv_forward(x, p, batch, in_shape, out_shape, stride, full),
            Layer::MaxPool { window } => {
                let (y, idx) = pool_forward(x, batch, in_shape, out_shape, window, full);
                pool_idx = Some(idx);
                y
            }
            Layer::Activation(act) => activation_forward(x, act, full),
            Layer::Flatten => x.clone().reshape(full)?,
        };
        if !y.all_finite() {
            return Err(Error::Shape { layer: i, detail: "non-finite activation".into() });
        }
        argmax.push(pool_idx);
        acts.push(y);
    }
    let out = acts.last().unwrap().clone();
    Ok((
        out,
        ForwardCache {
            fingerprint: spec.fingerprint(),
            revision: params.revision(),
            acts,
            argmax,
        },
    ))
}

/// Returns parameter gradients and the gradient with respect to the input.
pub fn backward(
    spec: &NetworkSpec,
    params: &Parameters,
    cache: &ForwardCache,
    upstream: &Tensor,
) -> Result<(Parameters, Tensor)> {
    if cache.fingerprint != spec.fingerprint() {
        return Err(Error::StaleCache("cache was produced by a different network".into()));
    }
    if cache.revision != params.revision() {
        return Err(Error::StaleCache("parameters changed since the forward pass".into()));
    }
    if upstream.shape() != cache.output().shape() {
        return Err(Error::Shape {
            layer: spec.layers().len() - 1,
            detail: format!(
                "upstream gradient {:?} does not match output {:?}",
                upstream.shape(),
                cache.output().shape()
            ),
        });
    }
    let batch = upstream.batch();
    let mut grads = Parameters::zeros(spec);
    let mut g = upstream.clone();
    {
        let glayers = grads.layers_mut();
        for i in (0..spec.layers().len()).rev() {
            let layer = spec.layers()[i];
            let x = &cache.acts[i];
            let y = &cache.acts[i + 1];
            let p = &params.layers()[i];
            let in_shape = spec.layer_input_shape(i);
            let out_shape = spec.layer_input_shape(i + 1);
            g = match layer {
                Layer::Dense { inputs, outputs } => {
                    dense_backward(x, p, &g, &mut glayers[i], batch, inputs, outputs)
                }
                Layer::Conv2d { stride, .. } => {
                    conv_backward(x, p, &g, &mut glayers[i], batch, in_shape, out_shape, stride)
                }
                Layer::MaxPool { .. } => {
                    let idx = cache.argmax[i].as_ref().unwrap();
                    let mut dx = Tensor::zeros(x.shape());
                    let d = dx.data_mut();
                    for (gi, &src) in g.data().iter().zip(idx) {
                        d[src] += gi;
                    }
                    dx
                }
                Layer::Activation(act) => activation_backward(x, y, &g, act),
                Layer::Flatten => g.reshape(x.shape().to_vec())?,
            };
        }
    }
    Ok((grads, g))
}

fn dense_forward(x: &Tensor, p: &LayerParams, batch: usize, inputs: usize, outputs: usize, shape: Vec<usize>) -> Tensor {
    let w = p.weight.data();
    let b = p.bias.data();
    let xd = x.data();
    let mut out = vec![0.0; batch * outputs];
    for n in 0..batch {
        let xr = &xd[n * inputs..(n + 1) * inputs];
        let yr = &mut out[n * outputs..(n + 1) * outputs];
        for o in 0..outputs {
            yr[o] = b[o] + dot(&w[o * inputs..(o + 1) * inputs], xr);
        }
    }
    Tensor::new(shape, out).unwrap()
}

fn dense_backward(
    x: &Tensor,
    p: &LayerParams,
    g: &Tensor,
    grad: &mut LayerParams,
    batch: usize,
    inputs: usize,
    outputs: usize,
) -> Tensor {
    let w = p.weight.data();
    let xd = x.data();
    let gd = g.data();
    let mut dx = Tensor::zeros(x.shape());
    {
        let dw = grad.weight.data_mut();
        for n in 0..batch {
            let xr = &xd[n * inputs..(n + 1) * inputs];
            for o in 0..outputs {
                let go = gd[n * outputs + o];
                if go != 0.0 {
                    axpy(go, xr, &mut dw[o * inputs..(o + 1) * inputs]);
                }
            }
        }
    }
    {
        let db = grad.bias.data_mut();
        for n in 0..batch {
            for o in 0..outputs {
                db[o] += gd[n * outputs + o];
            }
        }
    }
    let dxd = dx.data_mut();
    for n in 0..batch {
        let dxr = &mut dxd[n * inputs..(n + 1) * inputs];
        for o in 0..outputs {
            let go = gd[n * outputs + o];
            if go != 0.0 {
                axpy(go, &w[o * inputs..(o + 1) * inputs], dxr);
            }
        }
    }
    dx
}

fn conv_forward(
    x: &Tensor,
    p: &LayerParams,
    batch: usize,
    in_shape: &[usize],
    out_shape: &[usize],
    stride: usize,
    shape: Vec<usize>,
) -> Tensor {
    let (cin, h, w) = (in_shape[0], in_shape[1], in_shape[2]);
    let (cout, oh, ow) = (out_shape[0], out_shape[1], out_shape[2]);
    let k = p.weight.shape()[2];
    let wd = p.weight.data();
    let bd = p.bias.data();
    let xd = x.data();
    let in_size = cin * h * w;
    let out_size = cout * oh * ow;
    let mut out = vec![0.0; batch * out_size];
    for n in 0..batch {
        let xs = &xd[n * in_size..(n + 1) * in_size];
        let ys = &mut out[n * out_size..(n + 1) * out_size];
        for o in 0..cout {
            let plane = &mut ys[o * oh * ow..(o + 1) * oh * ow];
            plane.iter_mut().for_each(|v| *v = bd[o]);
            for c in 0..cin {
                let xc = &xs[c * h * w..(c + 1) * h * w];
                for ky in 0..k {
                    for kx in 0..k {
                        let wv = wd[((o * cin + c) * k + ky) * k + kx];
                        for oy in 0..oh {
                            let row = &xc[(oy * stride + ky) * w..];
                            let dst = &mut plane[oy * ow..(oy + 1) * ow];
                            if stride == 1 {
                                axpy(wv, &row[kx..kx + ow], dst);
                            } else {
                                for (ox, d) in dst.iter_mut().enumerate() {
                                    *d += wv * row[ox * stride + kx];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::new(shape, out).unwrap()
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    x: &Tensor,
    p: &LayerParams,
    g: &Tensor,
    grad: &mut LayerParams,
    batch: usize,
    in_shape: &[usize],
    out_shape: &[usize],
    stride: usize,
) -> Tensor {
    let (cin, h, w) = (in_shape[0], in_shape[1], in_shape[2]);
    let (cout, oh, ow) = (out_shape[0], out_shape[1], out_shape[2]);
    let k = p.weight.shape()[2];
    let wd = p.weight.data();
    let xd = x.data();
    let gd = g.data();
    let in_size = cin * h * w;
    let out_size = cout * oh * ow;
    let mut dx = Tensor::zeros(x.shape());
    let dxd = dx.data_mut();
    let (dw_t, db_t) = (&mut grad.weight, &mut grad.bias);
    let dw = dw_t.data_mut();
    let db = db_t.data_mut();
    for n in 0..batch {
        let xs = &xd[n * in_size..(n + 1) * in_size];
        let gs = &gd[n * out_size..(n + 1) * out_size];
        let dxs = &mut dxd[n * in_size..(n + 1) * in_size];
        for o in 0..cout {
            let gplane = &gs[o * oh * ow..(o + 1) * oh * ow];
            db[o] += gplane.iter().sum::<f64>();
            for c in 0..cin {
                let xc = &xs[c * h * w..(c + 1) * h * w];
                for ky in 0..k {
                    for kx in 0..k {
                        let widx = ((o * cin + c) * k + ky) * k + kx;
                        let wv = wd[widx];
                        let mut acc = 0.0;
                        for oy in 0..oh {
                            let grow = &gplane[oy * ow..(oy + 1) * ow];
                            let row = (oy * stride + ky) * w + kx;
                            let drow = c * h * w + row;
                            if stride == 1 {
                                acc += dot(grow, &xc[row..row + ow]);
                                axpy(wv, grow, &mut dxs[drow..drow + ow]);
                            } else {
                                for (ox, &gv) in grow.iter().enumerate() {
                                    acc += gv * xc[row + ox * stride];
                                    dxs[drow + ox * stride] += wv * gv;
                                }
                            }
                        }
                        dw[widx] += acc;
                    }
                }
            }
        }
    }
    dx
}

fn pool_forward(
    x: &Tensor,
    batch: usize,
    in_shape: &[usize],
    out_shape: &[usize],
    window: usize,
    shape: Vec<usize>,
) -> (Tensor, Vec<usize>) {
    let (c, h, w) = (in_shape[0], in_shape[1], in_shape[2]);
    let (oh, ow) = (out_shape[1], out_shape[2]);
    let xd = x.data();
    let in_size = c * h * w;
    let mut out = Vec::with_capacity(batch * c * oh * ow);
    let mut idx = Vec::with_capacity(out.capacity());
    for n in 0..batch {
        for ch in 0..c {
            let base = n * in_size + ch * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_i = 0;
                    for dy in 0..window {
                        for dx in 0..window {
                            let i = base + (oy * window + dy) * w + ox * window + dx;
                            // First maximum wins on ties.
                            if xd[i] > best {
                                best = xd[i];
                                best_i = i;
                            }
                        }
                    }
                    out.push(best);
                    idx.push(best_i);
                }
            }
        }
    }
    (Tensor::new(shape, out).unwrap(), idx)
}

fn activation_forward(x: &Tensor, act: Activation, shape: Vec<usize>) -> Tensor {
    let data = match act {
        Activation::Relu => x.data().iter().map(|&v| v.max(0.0)).collect(),
        Activation::Sigmoid => x.data().iter().map(|&v| sigmoid(v)).collect(),
        Activation::Softmax => {
            let width = shape[1];
            let mut out = Vec::with_capacity(x.len());
            for row in x.data().chunks(width) {
                out.extend(softmax(row));
            }
            out
        }
    };
    Tensor::new(shape, data).unwrap()
}

fn activation_backward(x: &Tensor, y: &Tensor, g: &Tensor, act: Activation) -> Tensor {
    let data = match act {
        Activation::Relu => x
            .data()
            .iter()
            .zip(g.data())
            .map(|(&xv, &gv)| if xv > 0.0 { gv } else { 0.0 })
            .collect(),
        Activation::Sigmoid => y
            .data()
            .iter()
            .zip(g.data())
            .map(|(&s, &gv)| gv * s * (1.0 - s))
            .collect(),
        Activation::Softmax => {
            let width = y.shape()[1];
            let mut out = Vec::with_capacity(y.len());
            for (p, gr) in y.data().chunks(width).zip(g.data().chunks(width)) {
                let s = dot(p, gr);
                out.extend(p.iter().zip(gr).map(|(&pi, &gi)| pi * (gi - s)));
            }
            out
        }
    };
    Tensor::new(x.shape().to_vec(), data).unwrap()
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
