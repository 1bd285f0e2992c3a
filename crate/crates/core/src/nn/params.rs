use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use super::spec::{fnv1a, NetworkSpec};
use super::tensor::Tensor;
use crate::error::{Error, Result};

static REVISION: AtomicU64 = AtomicU64::new(1);

fn next_revision() -> u64 {
    REVISION.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl LayerParams {
    fn empty() -> Self {
        LayerParams { weight: Tensor::empty(), bias: Tensor::empty() }
    }
}

/// Weights and biases for every layer of a [`NetworkSpec`]; parameter-free
/// layers hold empty tensors. Gradients use the same type.
///
/// Each value carries a revision stamp that changes on every mutable access,
/// which lets `backward` reject caches produced by other parameters.
#[derive(Debug, Clone)]
pub struct Parameters {
    layers: Vec<LayerParams>,
    revision: u64,
}

impl PartialEq for Parameters {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

impl Parameters {
    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init<R: Rng + ?Sized>(spec: &NetworkSpec, rng: &mut R) -> Self {
        let layers = spec
            .layers()
            .iter()
            .map(|layer| match layer.param_shapes() {
                Some((wshape, bshape)) => {
                    let (fan_in, fan_out) = if wshape.len() == 4 {
                        let k = wshape[2] * wshape[3];
                        (wshape[1] * k, wshape[0] * k)
                    } else {
                        (wshape[1], wshape[0])
                    };
                    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    let mut weight = Tensor::zeros(&wshape);
                    for w in weight.data_mut() {
                        *w = rng.random_range(-limit..limit);
                    }
                    LayerParams { weight, bias: Tensor::zeros(&bshape) }
                }
                None => LayerParams::empty(),
            })
            .collect();
        Parameters { layers, revision: next_revision() }
    }

    pub fn zeros(spec: &NetworkSpec) -> Self {
        let layers = spec
            .layers()
            .iter()
            .map(|layer| match layer.param_shapes() {
                Some((w, b)) => LayerParams { weight: Tensor::zeros(&w), bias: Tensor::zeros(&b) },
                None => LayerParams::empty(),
            })
            .collect();
        Parameters { layers, revision: next_revision() }
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    /// Mutable access; invalidates forward caches taken from these parameters.
    pub fn layers_mut(&mut self) -> &mut [LayerParams] {
        self.revision = next_revision();
        &mut self.layers
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn num_values(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// All values in layer order (weight then bias per layer).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_values());
        for l in &self.layers {
            out.extend_from_slice(l.weight.data());
            out.extend_from_slice(l.bias.data());
        }
        out
    }

    pub fn check_matches(&self, spec: &NetworkSpec) -> Result<()> {
        if self.layers.len() != spec.layers().len() {
            return Err(Error::Network(format!(
                "parameters have {} layers, spec has {}",
                self.layers.len(),
                spec.layers().len()
            )));
        }
        for (i, (p, layer)) in self.layers.iter().zip(spec.layers()).enumerate() {
            let ok = match layer.param_shapes() {
                Some((w, b)) => p.weight.shape() == w.as_slice() && p.bias.shape() == b.as_slice(),
                None => p.weight.is_empty() && p.bias.is_empty(),
            };
            if !ok {
                return Err(Error::Shape {
                    layer: i,
                    detail: format!("parameters do not fit {layer}"),
                });
            }
        }
        Ok(())
    }

    /// Writes the binary parameter file. The header holds the magic, format
    /// version, spec fingerprint, spec description, value count and a payload
    /// checksum; the payload is little-endian `f64` values in layer order.
    pub fn save(&self, spec: &NetworkSpec, path: &Path) -> Result<()> {
        self.check_matches(spec)?;
        let desc = spec.to_string();
        let mut payload = Vec::with_capacity(self.num_values() * 8);
        for v in self.flatten() {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        let mut buf = Vec::with_capacity(payload.len() + 64 + desc.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&spec.fingerprint().to_le_bytes());
        buf.extend_from_slice(&(desc.len() as u32).to_le_bytes());
        buf.extend_from_slice(desc.as_bytes());
        buf.extend_from_slice(&(self.num_values() as u64).to_le_bytes());
        buf.extend_from_slice(&fnv1a(&payload).to_le_bytes());
        buf.extend_from_slice(&payload);
        crate::io::write_atomic(path, &buf)
    }

    pub fn load(spec: &NetworkSpec, path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let corrupt = |detail: &str| Error::Corrupt {
            path: path.to_path_buf(),
            detail: detail.to_string(),
        };
        let mut r = Reader { bytes: &bytes, pos: 0 };
        if r.take(8).ok_or_else(|| corrupt("truncated header"))? != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = r.u32().ok_or_else(|| corrupt("truncated header"))?;
        if version != VERSION {
            return Err(corrupt(&format!("unsupported version {version}")));
        }
        let fingerprint = r.u64().ok_or_else(|| corrupt("truncated header"))?;
        let desc_len = r.u32().ok_or_else(|| corrupt("truncated header"))? as usize;
        let desc = r
            .take(desc_len)
            .and_then(|b| std::str::from_utf8(b).ok())
            .ok_or_else(|| corrupt("bad spec description"))?
            .to_string();
        if fingerprint != spec.fingerprint() || desc != spec.to_string() {
            return Err(Error::SpecMismatch(format!(
                "file was written for `{desc}` ({fingerprint:016x}), network is `{spec}` ({:016x})",
                spec.fingerprint()
            )));
        }
        let count = r.u64().ok_or_else(|| corrupt("truncated header"))? as usize;
        let checksum = r.u64().ok_or_else(|| corrupt("truncated header"))?;
        let payload = &bytes[r.pos..];
        if payload.len() != count * 8 {
            return Err(corrupt(&format!(
                "expected {} payload bytes, found {}",
                count * 8,
                payload.len()
            )));
        }
        if fnv1a(payload) != checksum {
            return Err(corrupt("payload checksum mismatch"));
        }
        let mut values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mut params = Parameters::zeros(spec);
        if params.num_values() != count {
            return Err(corrupt("value count does not match network"));
        }
        for l in params.layers_mut() {
            for v in l.weight.data_mut().iter_mut().chain(l.bias.data_mut()) {
                *v = values.next().unwrap();
            }
        }
        Ok(params)
    }
}

const MAGIC: &[u8; 8] = b"DSCNPRM\0";
const VERSION: u32 = 1;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }
    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }
    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
}

/// Reads just the spec description stored in a parameter file header.
pub fn stored_spec_description(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader { bytes: &bytes, pos: 0 };
    let bad = || Error::Corrupt { path: path.to_path_buf(), detail: "bad header".into() };
    if r.take(8) != Some(&MAGIC[..]) {
        return Err(bad());
    }
    r.u32().ok_or_else(bad)?;
    r.u64().ok_or_else(bad)?;
    let n = r.u32().ok_or_else(bad)? as usize;
    let s = r.take(n).and_then(|b| std::str::from_utf8(b).ok()).ok_or_else(bad)?;
    Ok(s.to_string())
}
