//! Network parameters, forward pass with activation caches, and
//! backpropagation for single samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Arch, Loss};
use crate::coeffgen::BoxMuller;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

const MODEL_FORMAT: &str = "murmurforge-nn-v1";

/// Samples per unit of parallel work. Fixed so gradient sums reduce in the
/// same order regardless of thread count.
pub(crate) const GRAD_CHUNK: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Layer {
    Conv {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        pad: usize,
        in_len: usize,
        out_len: usize,
        param: usize,
    },
    Relu,
    MaxPool {
        ch: usize,
        kernel: usize,
        pad: usize,
        stride: usize,
        in_len: usize,
        out_len: usize,
    },
    Dropout {
        rate: f64,
    },
    Dense {
        inp: usize,
        out: usize,
        param: usize,
    },
}

/// One trainable tensor pair (weights then bias) per conv or dense layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGroup {
    pub name: String,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    /// Fan-in used for initialization.
    pub fan_in: usize,
}

impl ParamGroup {
    fn zeros(name: String, weights: usize, biases: usize, fan_in: usize) -> Self {
        ParamGroup {
            name,
            weight: vec![0.0; weights],
            bias: vec![0.0; biases],
            fan_in,
        }
    }

    pub fn len(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> f64 {
        if i < self.weight.len() {
            self.weight[i]
        } else {
            self.bias[i - self.weight.len()]
        }
    }

    pub fn get_mut(&mut self, i: usize) -> &mut f64 {
        let w = self.weight.len();
        if i < w {
            &mut self.weight[i]
        } else {
            &mut self.bias[i - w]
        }
    }

    pub(crate) fn zeros_like(&self) -> Self {
        ParamGroup::zeros(
            self.name.clone(),
            self.weight.len(),
            self.bias.len(),
            self.fan_in,
        )
    }

    pub(crate) fn add_assign(&mut self, other: &ParamGroup) {
        for (a, b) in self.weight.iter_mut().zip(&other.weight) {
            *a += b;
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }
}

/// Gradients share the parameter layout.
pub type Gradients = Vec<ParamGroup>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Classification,
    Regression,
}

impl From<Loss> for Head {
    fn from(l: Loss) -> Head {
        match l {
            Loss::CrossEntropy => Head::Classification,
            Loss::MseScalar => Head::Regression,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct AdamState {
    pub step: u64,
    pub m: Vec<ParamGroup>,
    pub v: Vec<ParamGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnModel {
    pub format: String,
    pub arch: Arch,
    pub head: Head,
    /// Ascending class labels; output unit `i` scores `classes[i]`.
    pub classes: Vec<u32>,
    pub params: Vec<ParamGroup>,
    #[serde(skip)]
    pub(crate) adam: Option<AdamState>,
}

/// Per-sample activations kept for backpropagation.
pub(crate) struct Trace {
    /// `acts[0]` is the input; `acts[i + 1]` is the output of layer `i`.
    acts: Vec<Vec<f64>>,
    /// Argmax positions for pool layers, dropout masks for dropout layers.
    aux: Vec<Vec<usize>>,
    masks: Vec<Vec<f64>>,
}

impl Trace {
    pub(crate) fn output(&self) -> &[f64] {
        self.acts.last().expect("input is always present")
    }
}

impl NnModel {
    /// Kaiming-normal weights (std `sqrt(2 / fan_in)`) from a seeded stream,
    /// zero biases.
    pub fn new(arch: Arch, classes: Vec<u32>, head: Head, seed: u64) -> Result<Self> {
        let mut model = Self::zeroed(arch, classes, head)?;
        let mut normals = BoxMuller::new(seed);
        for g in &mut model.params {
            let std = (2.0 / g.fan_in as f64).sqrt();
            g.weight
                .iter_mut()
                .for_each(|w| *w = std * normals.next_normal());
        }
        Ok(model)
    }

    pub fn zeroed(arch: Arch, classes: Vec<u32>, head: Head) -> Result<Self> {
        arch.validate()?;
        if classes.is_empty() || !classes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "classes must be nonempty and strictly ascending".into(),
            ));
        }
        let want_out = match head {
            Head::Classification => classes.len(),
            Head::Regression => 1,
        };
        if arch.out_width() != want_out {
            return Err(Error::Config(format!(
                "output width {} does not match {} for {:?}",
                arch.out_width(),
                want_out,
                head
            )));
        }
        if head == Head::Classification && want_out < 2 {
            return Err(Error::Config(
                "classification needs at least 2 classes".into(),
            ));
        }
        let params = layer_plan(&arch)
            .into_iter()
            .filter_map(|l| match l {
                Layer::Conv {
                    in_ch,
                    out_ch,
                    kernel,
                    param,
                    ..
                } => Some(ParamGroup::zeros(
                    format!("conv{}", param + 1),
                    out_ch * in_ch * kernel,
                    out_ch,
                    in_ch * kernel,
                )),
                Layer::Dense { inp, out, param } => Some(ParamGroup::zeros(
                    format!("dense{}", param + 1),
                    out * inp,
                    out,
                    inp,
                )),
                _ => None,
            })
            .collect();
        Ok(NnModel {
            format: MODEL_FORMAT.to_string(),
            arch,
            head,
            classes,
            params,
            adam: None,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(ParamGroup::len).sum()
    }

    pub(crate) fn layers(&self) -> Vec<Layer> {
        layer_plan(&self.arch)
    }

    pub fn input_length(&self) -> usize {
        self.arch.input_length()
    }

    /// Activation lengths (per channel) at the output of every layer, for
    /// shape inspection.
    pub fn activation_shapes(&self) -> Vec<(String, usize, usize)> {
        self.layers()
            .iter()
            .map(|l| match *l {
                Layer::Conv {
                    out_ch, out_len, ..
                } => ("conv".to_string(), out_ch, out_len),
                Layer::MaxPool { ch, out_len, .. } => ("maxpool".to_string(), ch, out_len),
                Layer::Dense { out, .. } => ("dense".to_string(), 1, out),
                Layer::Relu => ("relu".to_string(), 0, 0),
                Layer::Dropout { .. } => ("dropout".to_string(), 0, 0),
            })
            .collect()
    }

    pub(crate) fn sample_trace(
        &self,
        input: &[f64],
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Trace> {
        let layers = self.layers();
        let mut acts = Vec::with_capacity(layers.len() + 1);
        let mut aux = vec![Vec::new(); layers.len()];
        let mut masks = vec![Vec::new(); layers.len()];
        acts.push(input.to_vec());
        for (li, layer) in layers.iter().enumerate() {
            let x = acts.last().expect("nonempty");
            let y = match *layer {
                Layer::Conv {
                    in_ch,
                    out_ch,
                    kernel,
                    pad,
                    in_len,
                    out_len,
                    param,
                } => {
                    let g = &self.params[param];
                    conv_forward(
                        x, &g.weight, &g.bias, in_ch, out_ch, kernel, pad, in_len, out_len,
                    )
                }
                Layer::Relu => x.iter().map(|v| v.max(0.0)).collect(),
                Layer::MaxPool {
                    ch,
                    kernel,
                    pad,
                    stride,
                    in_len,
                    out_len,
                } => {
                    let (y, idx) = pool_forward(x, ch, kernel, pad, stride, in_len, out_len);
                    aux[li] = idx;
                    y
                }
                Layer::Dropout { rate } => match rng.as_deref_mut() {
                    Some(rng) if rate > 0.0 => {
                        let keep = 1.0 / (1.0 - rate);
                        let mask: Vec<f64> = (0..x.len())
                            .map(|_| if rng.gen::<f64>() >= rate { keep } else { 0.0 })
                            .collect();
                        let y = x.iter().zip(&mask).map(|(a, m)| a * m).collect();
                        masks[li] = mask;
                        y
                    }
                    _ => x.clone(),
                },
                Layer::Dense { inp, out, param } => {
                    let g = &self.params[param];
                    dense_forward(x, &g.weight, &g.bias, inp, out)
                }
            };
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
            acts.push(y);
        }
        Ok(Trace { acts, aux, masks })
    }

    /// Accumulates parameter gradients for one sample given `d loss / d output`.
    pub(crate) fn sample_backward(
        &self,
        trace: &Trace,
        grad_out: &[f64],
        grads: &mut [ParamGroup],
    ) {
        let layers = self.layers();
        let mut g = grad_out.to_vec();
        for (li, layer) in layers.iter().enumerate().rev() {
            let x = &trace.acts[li];
            g = match *layer {
                Layer::Conv {
                    in_ch,
                    out_ch,
                    kernel,
                    pad,
                    in_len,
                    out_len,
                    param,
                } => conv_backward(
                    x,
                    &g,
                    &self.params[param].weight,
                    &mut grads[param],
                    in_ch,
                    out_ch,
                    kernel,
                    pad,
                    in_len,
                    out_len,
                    li > 0,
                ),
                Layer::Relu => g
                    .iter()
                    .zip(x)
                    .map(|(gi, xi)| if *xi > 0.0 { *gi } else { 0.0 })
                    .collect(),
                Layer::MaxPool { .. } => {
                    let mut dx = vec![0.0; x.len()];
                    for (gi, &src) in g.iter().zip(&trace.aux[li]) {
                        dx[src] += gi;
                    }
                    dx
                }
                Layer::Dropout { .. } => {
                    let mask = &trace.masks[li];
                    if mask.is_empty() {
                        g
                    } else {
                        g.iter().zip(mask).map(|(a, m)| a * m).collect()
                    }
                }
                Layer::Dense { inp, out, param } => dense_backward(
                    x,
                    &g,
                    &self.params[param].weight,
                    &mut grads[param],
                    inp,
                    out,
                    li > 0,
                ),
            };
        }
    }

    fn check_input(&self, x: &DenseMatrix) -> Result<()> {
        if x.cols() != self.input_length() {
            return Err(Error::Dimension {
                expected: self.input_length(),
                got: x.cols(),
            });
        }
        Ok(())
    }

    /// Inference-mode outputs (`b x out_width`); dropout is the identity.
    pub fn predict_logits(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_input(x)?;
        let rows: Vec<usize> = (0..x.rows()).collect();
        let chunks: Vec<Result<Vec<f64>>> = rows
            .par_chunks(GRAD_CHUNK)
            .map(|chunk| {
                let mut out = Vec::with_capacity(chunk.len() * self.arch.out_width());
                for &i in chunk {
                    out.extend_from_slice(self.sample_trace(x.row(i), None)?.output());
                }
                Ok(out)
            })
            .collect();
        let mut data = Vec::with_capacity(x.rows() * self.arch.out_width());
        for c in chunks {
            data.extend(c?);
        }
        DenseMatrix::from_vec(x.rows(), self.arch.out_width(), data)
    }

    /// Outputs for a batch. With `training`, dropout masks are drawn from
    /// `rng` (one derived stream per sample, in row order).
    pub fn forward(
        &self,
        x: &DenseMatrix,
        training: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<DenseMatrix> {
        if !training {
            return self.predict_logits(x);
        }
        self.check_input(x)?;
        let mut data = Vec::with_capacity(x.rows() * self.arch.out_width());
        for i in 0..x.rows() {
            let mut sample_rng = ChaCha8Rng::seed_from_u64(rng.gen());
            data.extend_from_slice(self.sample_trace(x.row(i), Some(&mut sample_rng))?.output());
        }
        DenseMatrix::from_vec(x.rows(), self.arch.out_width(), data)
    }

    pub fn zero_grads(&self) -> Gradients {
        self.params.iter().map(ParamGroup::zeros_like).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: NnModel = serde_json::from_str(s)?;
        if m.format != MODEL_FORMAT {
            return Err(Error::Version(m.format));
        }
        let fresh = NnModel::zeroed(m.arch.clone(), m.classes.clone(), m.head)?;
        let shapes_match = fresh.params.len() == m.params.len()
            && fresh
                .params
                .iter()
                .zip(&m.params)
                .all(|(a, b)| a.weight.len() == b.weight.len() && a.bias.len() == b.bias.len());
        if !shapes_match {
            return Err(Error::Config(
                "parameter shapes do not match the architecture".into(),
            ));
        }
        if m.params
            .iter()
            .any(|g| g.weight.iter().chain(&g.bias).any(|v| !v.is_finite()))
        {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }
}

pub(crate) fn layer_plan(arch: &Arch) -> Vec<Layer> {
    let mut layers = Vec::new();
    let mut param = 0;
    let mut width;
    let fc_widths;
    let out_width;
    match arch {
        Arch::Cnn(c) => {
            let mut ch = c.input_channels;
            let mut len = c.input_length;
            for &out_ch in &c.conv_channels {
                let conv_len = c.conv_out_len(len).unwrap_or(0);
                layers.push(Layer::Conv {
                    in_ch: ch,
                    out_ch,
                    kernel: c.kernel,
                    pad: c.padding,
                    in_len: len,
                    out_len: conv_len,
                    param,
                });
                param += 1;
                layers.push(Layer::Relu);
                let pool_len = c.pool_out_len(conv_len).unwrap_or(0);
                layers.push(Layer::MaxPool {
                    ch: out_ch,
                    kernel: c.pool_kernel,
                    pad: c.pool_padding,
                    stride: c.pool_stride,
                    in_len: conv_len,
                    out_len: pool_len,
                });
                ch = out_ch;
                len = pool_len;
            }
            layers.push(Layer::Dropout { rate: c.dropout });
            width = ch * len;
            fc_widths = c.fc_widths.clone();
            out_width = c.out_width;
            for &w in &fc_widths {
                layers.push(Layer::Dense {
                    inp: width,
                    out: w,
                    param,
                });
                param += 1;
                layers.push(Layer::Relu);
                width = w;
            }
        }
        Arch::Fnn(c) => {
            width = c.input_length;
            out_width = c.out_width;
            for (i, &w) in c.hidden_widths.iter().enumerate() {
                layers.push(Layer::Dense {
                    inp: width,
                    out: w,
                    param,
                });
                param += 1;
                layers.push(Layer::Relu);
                if i == 0 {
                    layers.push(Layer::Dropout { rate: c.dropout });
                }
                width = w;
            }
        }
    }
    layers.push(Layer::Dense {
        inp: width,
        out: out_width,
        param,
    });
    layers
}

#[allow(clippy::too_many_arguments)]
fn conv_forward(
    x: &[f64],
    w: &[f64],
    b: &[f64],
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    pad: usize,
    in_len: usize,
    out_len: usize,
) -> Vec<f64> {
    let mut y = vec![0.0; out_ch * out_len];
    for co in 0..out_ch {
        let out = &mut y[co * out_len..(co + 1) * out_len];
        out.iter_mut().for_each(|v| *v = b[co]);
        for ci in 0..in_ch {
            let inp = &x[ci * in_len..(ci + 1) * in_len];
            for j in 0..kernel {
                let wv = w[(co * in_ch + ci) * kernel + j];
                // out[t] += wv * inp[t + j - pad] where the index is in range.
                let lo = pad.saturating_sub(j);
                let hi = out_len.min((in_len + pad).saturating_sub(j));
                for t in lo..hi {
                    out[t] += wv * inp[t + j - pad];
                }
            }
        }
    }
    y
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    x: &[f64],
    g: &[f64],
    w: &[f64],
    grad: &mut ParamGroup,
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    pad: usize,
    in_len: usize,
    out_len: usize,
    need_input_grad: bool,
) -> Vec<f64> {
    let mut dx = vec![0.0; if need_input_grad { in_ch * in_len } else { 0 }];
    for co in 0..out_ch {
        let go = &g[co * out_len..(co + 1) * out_len];
        grad.bias[co] += go.iter().sum::<f64>();
        for ci in 0..in_ch {
            let inp = &x[ci * in_len..(ci + 1) * in_len];
            for j in 0..kernel {
                let widx = (co * in_ch + ci) * kernel + j;
                let lo = pad.saturating_sub(j);
                let hi = out_len.min((in_len + pad).saturating_sub(j));
                let mut acc = 0.0;
                for t in lo..hi {
                    acc += go[t] * inp[t + j - pad];
                }
                grad.weight[widx] += acc;
                if need_input_grad {
                    let wv = w[widx];
                    let dxi = &mut dx[ci * in_len..(ci + 1) * in_len];
                    for t in lo..hi {
                        dxi[t + j - pad] += go[t] * wv;
                    }
                }
            }
        }
    }
    dx
}

/// Max over each window, ignoring padded positions; ties take the lowest index.
fn pool_forward(
    x: &[f64],
    ch: usize,
    kernel: usize,
    pad: usize,
    stride: usize,
    in_len: usize,
    out_len: usize,
) -> (Vec<f64>, Vec<usize>) {
    let mut y = Vec::with_capacity(ch * out_len);
    let mut idx = Vec::with_capacity(ch * out_len);
    for c in 0..ch {
        let base = c * in_len;
        for o in 0..out_len {
            let start = (o * stride) as isize - pad as isize;
            let mut best: Option<usize> = None;
            for j in 0..kernel as isize {
                let s = start + j;
                if s < 0 || s >= in_len as isize {
                    continue;
                }
                let s = base + s as usize;
                if best.is_none_or(|b| x[s] > x[b]) {
                    best = Some(s);
                }
            }
            let b = best.expect("every pooling window overlaps the input");
            y.push(x[b]);
            idx.push(b);
        }
    }
    (y, idx)
}

fn dense_forward(x: &[f64], w: &[f64], b: &[f64], inp: usize, out: usize) -> Vec<f64> {
    (0..out)
        .map(|o| {
            b[o] + w[o * inp..(o + 1) * inp]
                .iter()
                .zip(x)
                .map(|(a, c)| a * c)
                .sum::<f64>()
        })
        .collect()
}

fn dense_backward(
    x: &[f64],
    g: &[f64],
    w: &[f64],
    grad: &mut ParamGroup,
    inp: usize,
    out: usize,
    need_input_grad: bool,
) -> Vec<f64> {
    let mut dx = vec![0.0; if need_input_grad { inp } else { 0 }];
    for o in 0..out {
        let go = g[o];
        grad.bias[o] += go;
        if go == 0.0 {
            continue;
        }
        let gw = &mut grad.weight[o * inp..(o + 1) * inp];
        for (d, xi) in gw.iter_mut().zip(x) {
            *d += go * xi;
        }
        if need_input_grad {
            for (d, wi) in dx.iter_mut().zip(&w[o * inp..(o + 1) * inp]) {
                *d += go * wi;
            }
        }
    }
    dx
}
