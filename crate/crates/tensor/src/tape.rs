//! Define-by-run reverse-mode differentiation.
//!
//! A [`Tape`] records every primitive operation as it executes; nodes are
//! appended in execution order, so the record is already topologically
//! sorted. [`Tape::backward`] walks it once in reverse, accumulating
//! gradients into dense per-node buffers. The tape is rebuilt on every
//! forward pass and owned by a single thread; independent tapes may run in
//! parallel.

use crate::conv::{conv1d_backward, conv1d_forward, gemm, gemm_at, gemm_bt, ConvGeom};
use crate::error::{Result, TensorError};
use crate::tensor::Tensor;
use rand::Rng;

/// Padding policy for convolution and pooling windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Zero-pad so that stride-1 output length equals input length. Even
    /// kernel lengths pad one extra zero on the right.
    Same,
    /// No padding; output length is `(T - L)/stride + 1`.
    Valid,
}

/// Train/eval switch for batch norm and dropout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Value(usize);

enum Op {
    Leaf,
    Conv1d {
        input: usize,
        kernels: usize,
        bias: Option<usize>,
        geom: ConvGeom,
    },
    BatchNorm {
        input: usize,
        gamma: usize,
        beta: usize,
        mode: Mode,
        // per-element normalized values and per-channel 1/sqrt(var+eps)
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Relu {
        input: usize,
    },
    MaxPool {
        input: usize,
        // flat index into the input for each output element
        argmax: Vec<usize>,
    },
    GlobalAvgPool {
        input: usize,
    },
    Dense {
        input: usize,
        weight: usize,
        bias: Option<usize>,
    },
    Softmax {
        input: usize,
    },
    Dropout {
        input: usize,
        // 0.0 or 1/(1-rate), applied multiplicatively
        mask: Vec<f64>,
    },
    Flatten {
        input: usize,
    },
    Add {
        lhs: usize,
        rhs: usize,
    },
    ConcatChannels {
        inputs: Vec<usize>,
    },
    Scale {
        input: usize,
        factor: f64,
    },
    CrossEntropy {
        probs: usize,
        one_hot: Tensor,
    },
    MseLoss {
        pred: usize,
        target: Tensor,
    },
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Gradients produced by [`Tape::backward`], indexed by node.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Value) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Value) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

/// Probability floor applied before every `log` in the loss ops.
pub const LOG_CLAMP: f64 = 1e-12;

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Pushes an input or parameter tensor onto the tape.
    pub fn leaf(&mut self, tensor: Tensor) -> Value {
        let requires_grad = tensor.requires_grad();
        self.push(tensor, Op::Leaf, requires_grad)
    }

    pub fn value(&self, v: Value) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Value {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Value(self.nodes.len() - 1)
    }

    fn needs(&self, ids: &[usize]) -> bool {
        ids.iter().any(|&i| self.nodes[i].requires_grad)
    }

    /// 1-D convolution over `[N, C_in, T]` with kernels `[C_out, C_in, L]`.
    ///
    /// `out[n, co, t] = sum_{ci, tau} w[co, ci, tau] * x[n, ci, t*stride - pl + tau] + b[co]`
    /// where `pl = floor((L-1)/2)` under `Same` padding and 0 under `Valid`.
    pub fn conv1d(
        &mut self,
        input: Value,
        kernels: Value,
        bias: Option<Value>,
        padding: Padding,
        stride: usize,
    ) -> Result<Value> {
        let x = self.value(input);
        let w = self.value(kernels);
        x.expect_rank(3)?;
        w.expect_rank(3)?;
        if stride == 0 {
            return Err(TensorError::InvalidArgument("stride must be >= 1".into()));
        }
        let (batch, c_in, t_in) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (c_out, kc_in, kernel) = (w.shape()[0], w.shape()[1], w.shape()[2]);
        if kc_in != c_in {
            return Err(TensorError::ShapeMismatch {
                axis: "input channels",
                expected: kc_in,
                actual: c_in,
            });
        }
        if let Some(b) = bias {
            let bt = self.value(b);
            bt.expect_rank(1)?;
            if bt.shape()[0] != c_out {
                return Err(TensorError::ShapeMismatch {
                    axis: "bias channels",
                    expected: c_out,
                    actual: bt.shape()[0],
                });
            }
        }
        let (pad_left, t_out) = match padding {
            Padding::Same => {
                if stride != 1 {
                    return Err(TensorError::InvalidArgument(
                        "`same` padding requires stride 1".into(),
                    ));
                }
                ((kernel - 1) / 2, t_in)
            }
            Padding::Valid => {
                if kernel > t_in {
                    return Err(TensorError::ShapeMismatch {
                        axis: "time (kernel longer than input)",
                        expected: kernel,
                        actual: t_in,
                    });
                }
                (0, (t_in - kernel) / stride + 1)
            }
        };
        let geom = ConvGeom {
            batch,
            c_in,
            t_in,
            c_out,
            kernel,
            stride,
            pad_left,
            t_out,
        };
        let bias_data = bias.map(|b| self.value(b).data());
        let out = conv1d_forward(x.data(), w.data(), bias_data, &geom);
        let value = Tensor::from_vec(&[batch, c_out, t_out], out)?;
        let mut ids = vec![input.0, kernels.0];
        if let Some(b) = bias {
            ids.push(b.0);
        }
        let rg = self.needs(&ids);
        Ok(self.push(
            value,
            Op::Conv1d {
                input: input.0,
                kernels: kernels.0,
                bias: bias.map(|b| b.0),
                geom,
            },
            rg,
        ))
    }

    /// Per-channel batch normalization over `[N, C, T]`.
    ///
    /// Train mode standardizes with batch statistics (population variance
    /// over `N*T`) and folds them into `running_mean`/`running_var` by
    /// exponential moving average; eval mode standardizes with the running
    /// statistics.
    #[allow(clippy::too_many_arguments)]
    pub fn batch_norm1d(
        &mut self,
        input: Value,
        gamma: Value,
        beta: Value,
        running_mean: &mut Tensor,
        running_var: &mut Tensor,
        mode: Mode,
        eps: f64,
        momentum: f64,
    ) -> Result<Value> {
        let x = self.value(input);
        x.expect_rank(3)?;
        let (batch, channels, t) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        if batch == 0 {
            return Err(TensorError::EmptyBatch);
        }
        for (name, v) in [("gamma", gamma), ("beta", beta)] {
            let p = self.value(v);
            p.expect_rank(1)?;
            if p.shape()[0] != channels {
                return Err(TensorError::ShapeMismatch {
                    axis: match name {
                        "gamma" => "gamma channels",
                        _ => "beta channels",
                    },
                    expected: channels,
                    actual: p.shape()[0],
                });
            }
        }
        if eps <= 0.0 {
            return Err(TensorError::InvalidArgument("eps must be > 0".into()));
        }
        let m = (batch * t) as f64;
        let mut mean = vec![0.0; channels];
        let mut var = vec![0.0; channels];
        let xd = self.value(input).data();
        match mode {
            Mode::Train => {
                for c in 0..channels {
                    let mut s = 0.0;
                    for n in 0..batch {
                        let row = &xd[(n * channels + c) * t..(n * channels + c + 1) * t];
                        s += row.iter().sum::<f64>();
                    }
                    let mu = s / m;
                    let mut v = 0.0;
                    for n in 0..batch {
                        let row = &xd[(n * channels + c) * t..(n * channels + c + 1) * t];
                        v += row.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>();
                    }
                    mean[c] = mu;
                    var[c] = v / m;
                }
                for c in 0..channels {
                    running_mean.data_mut()[c] =
                        (1.0 - momentum) * running_mean.data()[c] + momentum * mean[c];
                    running_var.data_mut()[c] =
                        (1.0 - momentum) * running_var.data()[c] + momentum * var[c];
                }
            }
            Mode::Eval => {
                mean.copy_from_slice(running_mean.data());
                var.copy_from_slice(running_var.data());
            }
        }
        let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + eps).sqrt()).collect();
        let g = self.value(gamma).data().to_vec();
        let b = self.value(beta).data().to_vec();
        let xd = self.value(input).data();
        let mut xhat = vec![0.0; xd.len()];
        let mut out = vec![0.0; xd.len()];
        for n in 0..batch {
            for c in 0..channels {
                let base = (n * channels + c) * t;
                for i in 0..t {
                    let h = (xd[base + i] - mean[c]) * inv_std[c];
                    xhat[base + i] = h;
                    out[base + i] = g[c] * h + b[c];
                }
            }
        }
        let value = Tensor::from_vec(&[batch, channels, t], out)?;
        let rg = self.needs(&[input.0, gamma.0, beta.0]);
        Ok(self.push(
            value,
            Op::BatchNorm {
                input: input.0,
                gamma: gamma.0,
                beta: beta.0,
                mode,
                xhat,
                inv_std,
            },
            rg,
        ))
    }

    pub fn relu(&mut self, input: Value) -> Value {
        let out: Vec<f64> = self
            .value(input)
            .data()
            .iter()
            .map(|&v| v.max(0.0))
            .collect();
        let shape = self.value(input).shape().to_vec();
        let value = Tensor::from_vec(&shape, out).expect("same shape");
        let rg = self.needs(&[input.0]);
        self.push(value, Op::Relu { input: input.0 }, rg)
    }

    /// Max pooling over the time axis. Under `Same` padding (stride 1) the
    /// window is clipped at the boundaries rather than zero-padded.
    pub fn max_pool1d(
        &mut self,
        input: Value,
        window: usize,
        stride: usize,
        padding: Padding,
    ) -> Result<Value> {
        let x = self.value(input);
        x.expect_rank(3)?;
        if window == 0 || stride == 0 {
            return Err(TensorError::InvalidArgument(
                "pool window and stride must be >= 1".into(),
            ));
        }
        let (batch, channels, t_in) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (pad_left, t_out) = match padding {
            Padding::Same => {
                if stride != 1 {
                    return Err(TensorError::InvalidArgument(
                        "`same` padding requires stride 1".into(),
                    ));
                }
                ((window - 1) / 2, t_in)
            }
            Padding::Valid => {
                if window > t_in {
                    return Err(TensorError::ShapeMismatch {
                        axis: "time (window longer than input)",
                        expected: window,
                        actual: t_in,
                    });
                }
                (0, (t_in - window) / stride + 1)
            }
        };
        let xd = x.data();
        let mut out = vec![0.0; batch * channels * t_out];
        let mut argmax = vec![0usize; batch * channels * t_out];
        for n in 0..batch {
            for c in 0..channels {
                let base = (n * channels + c) * t_in;
                let obase = (n * channels + c) * t_out;
                for t in 0..t_out {
                    let start = (t * stride) as isize - pad_left as isize;
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0usize;
                    for tau in 0..window {
                        let pos = start + tau as isize;
                        if pos < 0 || pos as usize >= t_in {
                            continue;
                        }
                        let v = xd[base + pos as usize];
                        if v > best {
                            best = v;
                            best_idx = base + pos as usize;
                        }
                    }
                    out[obase + t] = best;
                    argmax[obase + t] = best_idx;
                }
            }
        }
        let value = Tensor::from_vec(&[batch, channels, t_out], out)?;
        let rg = self.needs(&[input.0]);
        Ok(self.push(
            value,
            Op::MaxPool {
                input: input.0,
                argmax,
            },
            rg,
        ))
    }

    /// Averages each channel over the whole time axis: `[N, C, T] -> [N, C]`.
    pub fn global_avg_pool(&mut self, input: Value) -> Result<Value> {
        let x = self.value(input);
        x.expect_rank(3)?;
        let (batch, channels, t) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let xd = x.data();
        let mut out = vec![0.0; batch * channels];
        for n in 0..batch {
            for c in 0..channels {
                let row = &xd[(n * channels + c) * t..(n * channels + c + 1) * t];
                out[n * channels + c] = row.iter().sum::<f64>() / t as f64;
            }
        }
        let value = Tensor::from_vec(&[batch, channels], out)?;
        let rg = self.needs(&[input.0]);
        Ok(self.push(value, Op::GlobalAvgPool { input: input.0 }, rg))
    }

    /// Fully connected layer: `[N, F] x [K, F]^T + b -> [N, K]`.
    pub fn dense(&mut self, input: Value, weight: Value, bias: Option<Value>) -> Result<Value> {
        let x = self.value(input);
        let w = self.value(weight);
        x.expect_rank(2)?;
        w.expect_rank(2)?;
        let (batch, features) = (x.shape()[0], x.shape()[1]);
        let (units, wf) = (w.shape()[0], w.shape()[1]);
        if wf != features {
            return Err(TensorError::ShapeMismatch {
                axis: "dense input features",
                expected: wf,
                actual: features,
            });
        }
        if let Some(b) = bias {
            let bt = self.value(b);
            bt.expect_rank(1)?;
            if bt.shape()[0] != units {
                return Err(TensorError::ShapeMismatch {
                    axis: "dense bias units",
                    expected: units,
                    actual: bt.shape()[0],
                });
            }
        }
        let mut out = vec![0.0; batch * units];
        gemm_bt(batch, features, units, x.data(), w.data(), &mut out);
        if let Some(b) = bias {
            let bd = self.value(b).data();
            for n in 0..batch {
                for k in 0..units {
                    out[n * units + k] += bd[k];
                }
            }
        }
        let value = Tensor::from_vec(&[batch, units], out)?;
        let mut ids = vec![input.0, weight.0];
        if let Some(b) = bias {
            ids.push(b.0);
        }
        let rg = self.needs(&ids);
        Ok(self.push(
            value,
            Op::Dense {
                input: input.0,
                weight: weight.0,
                bias: bias.map(|b| b.0),
            },
            rg,
        ))
    }

    /// Row-wise softmax over `[N, K]`, stabilized by subtracting the row max.
    pub fn softmax(&mut self, logits: Value) -> Result<Value> {
        let x = self.value(logits);
        x.expect_rank(2)?;
        let (batch, classes) = (x.shape()[0], x.shape()[1]);
        let xd = x.data();
        let mut out = vec![0.0; xd.len()];
        for n in 0..batch {
            let row = &xd[n * classes..(n + 1) * classes];
            let max = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let mut sum = 0.0;
            for (o, &v) in out[n * classes..(n + 1) * classes].iter_mut().zip(row) {
                *o = (v - max).exp();
                sum += *o;
            }
            for o in &mut out[n * classes..(n + 1) * classes] {
                *o /= sum;
            }
        }
        let value = Tensor::from_vec(&[batch, classes], out)?;
        let rg = self.needs(&[logits.0]);
        Ok(self.push(value, Op::Softmax { input: logits.0 }, rg))
    }

    /// Inverted dropout: train mode zeroes each element with probability
    /// `rate` and scales survivors by `1/(1-rate)`; eval mode is the
    /// identity (no node is recorded).
    pub fn dropout<R: Rng>(
        &mut self,
        input: Value,
        rate: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Value> {
        if !(0.0..1.0).contains(&rate) {
            return Err(TensorError::InvalidArgument(format!(
                "dropout rate {rate} outside [0, 1)"
            )));
        }
        if mode == Mode::Eval || rate == 0.0 {
            return Ok(input);
        }
        let keep = 1.0 - rate;
        let scale = 1.0 / keep;
        let x = self.value(input);
        let shape = x.shape().to_vec();
        let mask: Vec<f64> = (0..x.numel())
            .map(|_| {
                if rng.gen::<f64>() < keep {
                    scale
                } else {
                    0.0
                }
            })
            .collect();
        let out: Vec<f64> = self
            .value(input)
            .data()
            .iter()
            .zip(&mask)
            .map(|(&v, &m)| v * m)
            .collect();
        let value = Tensor::from_vec(&shape, out)?;
        let rg = self.needs(&[input.0]);
        Ok(self.push(
            value,
            Op::Dropout {
                input: input.0,
                mask,
            },
            rg,
        ))
    }

    /// `[N, C, T] -> [N, C*T]`.
    pub fn flatten(&mut self, input: Value) -> Result<Value> {
        let x = self.value(input);
        x.expect_rank(3)?;
        let (batch, channels, t) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let value = Tensor::from_vec(&[batch, channels * t], x.data().to_vec())?;
        let rg = self.needs(&[input.0]);
        Ok(self.push(value, Op::Flatten { input: input.0 }, rg))
    }

    /// Elementwise sum of two same-shape values (residual connections).
    pub fn add(&mut self, lhs: Value, rhs: Value) -> Result<Value> {
        let a = self.value(lhs);
        let b = self.value(rhs);
        if a.shape() != b.shape() {
            return Err(TensorError::ShapeMismatch {
                axis: "add operands",
                expected: a.numel(),
                actual: b.numel(),
            });
        }
        let shape = a.shape().to_vec();
        let out: Vec<f64> = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
        let value = Tensor::from_vec(&shape, out)?;
        let rg = self.needs(&[lhs.0, rhs.0]);
        Ok(self.push(
            value,
            Op::Add {
                lhs: lhs.0,
                rhs: rhs.0,
            },
            rg,
        ))
    }

    /// Concatenates `[N, C_i, T]` values along the channel axis.
    pub fn concat_channels(&mut self, inputs: &[Value]) -> Result<Value> {
        if inputs.is_empty() {
            return Err(TensorError::InvalidArgument(
                "concat of zero tensors".into(),
            ));
        }
        let first = self.value(inputs[0]);
        first.expect_rank(3)?;
        let (batch, t) = (first.shape()[0], first.shape()[2]);
        let mut c_total = 0;
        for &v in inputs {
            let x = self.value(v);
            x.expect_rank(3)?;
            if x.shape()[0] != batch {
                return Err(TensorError::ShapeMismatch {
                    axis: "concat batch",
                    expected: batch,
                    actual: x.shape()[0],
                });
            }
            if x.shape()[2] != t {
                return Err(TensorError::ShapeMismatch {
                    axis: "concat time",
                    expected: t,
                    actual: x.shape()[2],
                });
            }
            c_total += x.shape()[1];
        }
        let mut out = vec![0.0; batch * c_total * t];
        for n in 0..batch {
            let mut c_off = 0;
            for &v in inputs {
                let x = self.value(v);
                let c = x.shape()[1];
                let src = &x.data()[n * c * t..(n + 1) * c * t];
                out[(n * c_total + c_off) * t..(n * c_total + c_off + c) * t]
                    .copy_from_slice(src);
                c_off += c;
            }
        }
        let value = Tensor::from_vec(&[batch, c_total, t], out)?;
        let ids: Vec<usize> = inputs.iter().map(|v| v.0).collect();
        let rg = self.needs(&ids);
        Ok(self.push(value, Op::ConcatChannels { inputs: ids }, rg))
    }

    /// Multiplies every element by a constant.
    pub fn scale(&mut self, input: Value, factor: f64) -> Value {
        let x = self.value(input);
        let shape = x.shape().to_vec();
        let out: Vec<f64> = x.data().iter().map(|&v| v * factor).collect();
        let value = Tensor::from_vec(&shape, out).expect("same shape");
        let rg = self.needs(&[input.0]);
        self.push(
            value,
            Op::Scale {
                input: input.0,
                factor,
            },
            rg,
        )
    }

    /// Batch-mean categorical cross entropy against one-hot targets.
    ///
    /// Probabilities are clamped at [`LOG_CLAMP`] before the log.
    pub fn cross_entropy_loss(&mut self, probs: Value, one_hot: &Tensor) -> Result<Value> {
        let p = self.value(probs);
        p.expect_rank(2)?;
        if p.shape() != one_hot.shape() {
            return Err(TensorError::ShapeMismatch {
                axis: "one-hot labels",
                expected: p.shape()[1],
                actual: if one_hot.rank() == 2 {
                    one_hot.shape()[1]
                } else {
                    0
                },
            });
        }
        let (batch, classes) = (p.shape()[0], p.shape()[1]);
        if batch == 0 {
            return Err(TensorError::EmptyBatch);
        }
        let mut loss = 0.0;
        for n in 0..batch {
            for k in 0..classes {
                let y = one_hot.at2(n, k);
                if y != 0.0 {
                    loss -= y * p.at2(n, k).max(LOG_CLAMP).ln();
                }
            }
        }
        loss /= batch as f64;
        let rg = self.needs(&[probs.0]);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                probs: probs.0,
                one_hot: one_hot.clone(),
            },
            rg,
        ))
    }

    /// Batch-mean squared error, averaged over every output element.
    pub fn mse_loss(&mut self, pred: Value, target: &Tensor) -> Result<Value> {
        let p = self.value(pred);
        if p.shape() != target.shape() {
            return Err(TensorError::ShapeMismatch {
                axis: "mse target",
                expected: p.numel(),
                actual: target.numel(),
            });
        }
        let loss = p
            .data()
            .iter()
            .zip(target.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / p.numel() as f64;
        let rg = self.needs(&[pred.0]);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::MseLoss {
                pred: pred.0,
                target: target.clone(),
            },
            rg,
        ))
    }

    /// Reverse pass from a scalar loss. Returns one gradient per node that
    /// transitively requires one; evaluation order is the reverse of the
    /// recorded order, so results are deterministic.
    pub fn backward(&self, loss: Value) -> Result<Gradients> {
        let loss_tensor = self.value(loss);
        if loss_tensor.numel() != 1 {
            return Err(TensorError::NonScalarLoss {
                shape: loss_tensor.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for id in (0..=loss.0).rev() {
            if !self.nodes[id].requires_grad {
                continue;
            }
            let is_leaf = matches!(self.nodes[id].op, Op::Leaf);
            // Intermediate gradients are fully consumed here; only leaves
            // (parameters and inputs) keep theirs.
            let grad = if is_leaf {
                grads[id].clone()
            } else {
                grads[id].take()
            };
            let Some(grad) = grad else {
                continue;
            };
            self.backprop_node(id, &grad, &mut grads)?;
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], id: usize, delta_data: Vec<f64>) {
        if !self.nodes[id].requires_grad {
            return;
        }
        match &mut grads[id] {
            Some(existing) => {
                for (g, d) in existing.data_mut().iter_mut().zip(&delta_data) {
                    *g += d;
                }
            }
            slot => {
                let shape = self.nodes[id].value.shape().to_vec();
                *slot = Some(Tensor::from_vec(&shape, delta_data).expect("gradient shape"));
            }
        }
    }

    fn backprop_node(
        &self,
        id: usize,
        grad: &Tensor,
        grads: &mut [Option<Tensor>],
    ) -> Result<()> {
        match &self.nodes[id].op {
            Op::Leaf => {}
            Op::Conv1d {
                input,
                kernels,
                bias,
                geom,
            } => {
                let x = self.nodes[*input].value.data();
                let w = self.nodes[*kernels].value.data();
                let need_dx = self.nodes[*input].requires_grad;
                let need_db = bias.map(|b| self.nodes[b].requires_grad).unwrap_or(false);
                let out = conv1d_backward(x, w, grad.data(), geom, need_dx, need_db);
                self.accumulate(grads, *kernels, out.dw);
                if let (Some(b), Some(db)) = (bias, out.db) {
                    self.accumulate(grads, *b, db);
                }
                if let Some(dx) = out.dx {
                    self.accumulate(grads, *input, dx);
                }
            }
            Op::BatchNorm {
                input,
                gamma,
                beta,
                mode,
                xhat,
                inv_std,
            } => {
                let shape = self.nodes[id].value.shape();
                let (batch, channels, t) = (shape[0], shape[1], shape[2]);
                let m = (batch * t) as f64;
                let g = self.nodes[*gamma].value.data();
                let dy = grad.data();
                // per-channel reductions
                let mut sum_dy = vec![0.0; channels];
                let mut sum_dy_xhat = vec![0.0; channels];
                for n in 0..batch {
                    for c in 0..channels {
                        let base = (n * channels + c) * t;
                        for i in 0..t {
                            sum_dy[c] += dy[base + i];
                            sum_dy_xhat[c] += dy[base + i] * xhat[base + i];
                        }
                    }
                }
                self.accumulate(grads, *beta, sum_dy.clone());
                self.accumulate(grads, *gamma, sum_dy_xhat.clone());
                if self.nodes[*input].requires_grad {
                    let mut dx = vec![0.0; dy.len()];
                    for n in 0..batch {
                        for c in 0..channels {
                            let base = (n * channels + c) * t;
                            let k = g[c] * inv_std[c];
                            for i in 0..t {
                                dx[base + i] = match mode {
                                    // batch statistics depend on x
                                    Mode::Train => {
                                        k * (dy[base + i]
                                            - sum_dy[c] / m
                                            - xhat[base + i] * sum_dy_xhat[c] / m)
                                    }
                                    // running statistics are constants
                                    Mode::Eval => k * dy[base + i],
                                };
                            }
                        }
                    }
                    self.accumulate(grads, *input, dx);
                }
            }
            Op::Relu { input } => {
                let x = self.nodes[*input].value.data();
                let dx: Vec<f64> = grad
                    .data()
                    .iter()
                    .zip(x)
                    .map(|(&g, &v)| if v > 0.0 { g } else { 0.0 })
                    .collect();
                self.accumulate(grads, *input, dx);
            }
            Op::MaxPool { input, argmax } => {
                let mut dx = vec![0.0; self.nodes[*input].value.numel()];
                for (g, &idx) in grad.data().iter().zip(argmax) {
                    dx[idx] += g;
                }
                self.accumulate(grads, *input, dx);
            }
            Op::GlobalAvgPool { input } => {
                let ishape = self.nodes[*input].value.shape();
                let (batch, channels, t) = (ishape[0], ishape[1], ishape[2]);
                let mut dx = vec![0.0; batch * channels * t];
                for n in 0..batch {
                    for c in 0..channels {
                        let g = grad.data()[n * channels + c] / t as f64;
                        for i in 0..t {
                            dx[(n * channels + c) * t + i] = g;
                        }
                    }
                }
                self.accumulate(grads, *input, dx);
            }
            Op::Dense {
                input,
                weight,
                bias,
            } => {
                let x = self.nodes[*input].value.data();
                let w = self.nodes[*weight].value.data();
                let ishape = self.nodes[*input].value.shape();
                let (batch, features) = (ishape[0], ishape[1]);
                let units = self.nodes[*weight].value.shape()[0];
                let dy = grad.data();
                // dW[K,F] = dY^T[K,N] * X[N,F]
                let mut dw = vec![0.0; units * features];
                gemm_at(units, batch, features, dy, x, &mut dw);
                self.accumulate(grads, *weight, dw);
                if let Some(b) = bias {
                    if self.nodes[*b].requires_grad {
                        let mut db = vec![0.0; units];
                        for n in 0..batch {
                            for k in 0..units {
                                db[k] += dy[n * units + k];
                            }
                        }
                        self.accumulate(grads, *b, db);
                    }
                }
                if self.nodes[*input].requires_grad {
                    // dX[N,F] = dY[N,K] * W[K,F]
                    let mut dx = vec![0.0; batch * features];
                    gemm(batch, units, features, dy, w, &mut dx);
                    self.accumulate(grads, *input, dx);
                }
            }
            Op::Softmax { input } => {
                let y = self.nodes[id].value.data();
                let shape = self.nodes[id].value.shape();
                let (batch, classes) = (shape[0], shape[1]);
                let dy = grad.data();
                let mut dx = vec![0.0; dy.len()];
                for n in 0..batch {
                    let yrow = &y[n * classes..(n + 1) * classes];
                    let grow = &dy[n * classes..(n + 1) * classes];
                    let dot: f64 = yrow.iter().zip(grow).map(|(a, b)| a * b).sum();
                    for k in 0..classes {
                        dx[n * classes + k] = yrow[k] * (grow[k] - dot);
                    }
                }
                self.accumulate(grads, *input, dx);
            }
            Op::Dropout { input, mask } => {
                let dx: Vec<f64> = grad
                    .data()
                    .iter()
                    .zip(mask)
                    .map(|(&g, &m)| g * m)
                    .collect();
                self.accumulate(grads, *input, dx);
            }
            Op::Flatten { input } => {
                self.accumulate(grads, *input, grad.data().to_vec());
            }
            Op::Add { lhs, rhs } => {
                self.accumulate(grads, *lhs, grad.data().to_vec());
                self.accumulate(grads, *rhs, grad.data().to_vec());
            }
            Op::ConcatChannels { inputs } => {
                let shape = self.nodes[id].value.shape();
                let (batch, c_total, t) = (shape[0], shape[1], shape[2]);
                let dy = grad.data();
                let mut c_off = 0;
                for &inp in inputs {
                    let c = self.nodes[inp].value.shape()[1];
                    let mut dx = vec![0.0; batch * c * t];
                    for n in 0..batch {
                        let src = &dy[(n * c_total + c_off) * t..(n * c_total + c_off + c) * t];
                        dx[n * c * t..(n + 1) * c * t].copy_from_slice(src);
                    }
                    self.accumulate(grads, inp, dx);
                    c_off += c;
                }
            }
            Op::Scale { input, factor } => {
                let dx: Vec<f64> = grad.data().iter().map(|&g| g * factor).collect();
                self.accumulate(grads, *input, dx);
            }
            Op::CrossEntropy { probs, one_hot } => {
                let p = self.nodes[*probs].value.data();
                let shape = self.nodes[*probs].value.shape();
                let (batch, classes) = (shape[0], shape[1]);
                let scale = grad.data()[0] / batch as f64;
                let mut dp = vec![0.0; p.len()];
                for n in 0..batch {
                    for k in 0..classes {
                        let y = one_hot.at2(n, k);
                        if y != 0.0 {
                            let pv = p[n * classes + k];
                            // Clamped probabilities have zero local slope.
                            if pv > LOG_CLAMP {
                                dp[n * classes + k] = -scale * y / pv;
                            }
                        }
                    }
                }
                self.accumulate(grads, *probs, dp);
            }
            Op::MseLoss { pred, target } => {
                let p = self.nodes[*pred].value.data();
                let scale = 2.0 * grad.data()[0] / p.len() as f64;
                let dp: Vec<f64> = p
                    .iter()
                    .zip(target.data())
                    .map(|(a, b)| scale * (a - b))
                    .collect();
                self.accumulate(grads, *pred, dp);
            }
        }
        Ok(())
    }
}
