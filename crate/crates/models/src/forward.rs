//! Forward passes: each call records a fresh tape over the model parameters.

use crate::build::{
    inception_wiring, resnet_blocks, FCN_LAYOUT, MLP_DROPOUT, MLP_UNITS, RESNET_KERNELS,
};
use crate::error::{ModelError, Result};
use crate::spec::{Architecture, Head, ModelSpec};
use crate::state::ModelState;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use tsc_tensor::{Mode, Padding, Tape, Tensor, Value};

/// Which batch-norm statistics a forward pass reads and updates. Models
/// carry a second set (suffix `@adv`) only when prepared for AdvProp-style
/// adversarial training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BnSet {
    #[default]
    Clean,
    Adversarial,
}

/// Resolves a batch-norm tensor name within a BN set.
pub fn bn_key(base: &str, set: BnSet) -> String {
    match set {
        BnSet::Clean => base.to_string(),
        BnSet::Adversarial => format!("{base}@adv"),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ForwardOpts {
    pub mode: Mode,
    pub bn_set: BnSet,
    /// Record parameters as differentiation targets.
    pub trainable: bool,
    /// Record the input as a differentiation target (for attacks).
    pub input_grad: bool,
}

impl ForwardOpts {
    pub fn eval() -> Self {
        ForwardOpts {
            mode: Mode::Eval,
            bn_set: BnSet::Clean,
            trainable: false,
            input_grad: false,
        }
    }

    pub fn train() -> Self {
        ForwardOpts {
            mode: Mode::Train,
            bn_set: BnSet::Clean,
            trainable: true,
            input_grad: false,
        }
    }
}

/// A recorded forward pass. Values stay readable (and differentiable)
/// until the pass is dropped.
pub struct ForwardPass {
    pub tape: Tape,
    pub input: Value,
    /// Output of the last convolutional stage, the tensor the GAP layer
    /// averages; absent for the MLP.
    pub gap_input: Option<Value>,
    /// GAP feature vector per sample; absent for the MLP.
    pub gap: Option<Value>,
    pub logits: Value,
    /// Softmax probabilities for classification heads, raw outputs for
    /// regression heads.
    pub output: Value,
    pub params: BTreeMap<String, Value>,
}

impl ForwardPass {
    pub fn output_tensor(&self) -> &Tensor {
        self.tape.value(self.output)
    }
}

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;

struct Ctx<'a> {
    tape: Tape,
    params: &'a BTreeMap<String, Tensor>,
    running: &'a mut BTreeMap<String, Tensor>,
    values: BTreeMap<String, Value>,
    opts: ForwardOpts,
}

impl<'a> Ctx<'a> {
    fn param(&mut self, name: &str) -> Result<Value> {
        if let Some(&v) = self.values.get(name) {
            return Ok(v);
        }
        let tensor = self
            .params
            .get(name)
            .ok_or_else(|| ModelError::MissingParameter(name.to_string()))?
            .clone();
        let tensor = if self.opts.trainable {
            tensor.with_grad()
        } else {
            tensor
        };
        let v = self.tape.leaf(tensor);
        self.values.insert(name.to_string(), v);
        Ok(v)
    }

    fn conv(&mut self, name: &str, x: Value, padding: Padding) -> Result<Value> {
        let w = self.param(&format!("{name}.weight"))?;
        let bias = if self.params.contains_key(&format!("{name}.bias")) {
            Some(self.param(&format!("{name}.bias"))?)
        } else {
            None
        };
        Ok(self.tape.conv1d(x, w, bias, padding, 1)?)
    }

    fn batch_norm(&mut self, name: &str, x: Value) -> Result<Value> {
        let set = self.opts.bn_set;
        let gamma = self.param(&bn_key(&format!("{name}.gamma"), set))?;
        let beta = self.param(&bn_key(&format!("{name}.beta"), set))?;
        let mean_key = bn_key(&format!("{name}.mean"), set);
        let var_key = bn_key(&format!("{name}.var"), set);
        let mut mean = self
            .running
            .remove(&mean_key)
            .ok_or_else(|| ModelError::MissingParameter(mean_key.clone()))?;
        let mut var = self
            .running
            .remove(&var_key)
            .ok_or_else(|| ModelError::MissingParameter(var_key.clone()))?;
        let out = self.tape.batch_norm1d(
            x,
            gamma,
            beta,
            &mut mean,
            &mut var,
            self.opts.mode,
            BN_EPS,
            BN_MOMENTUM,
        );
        self.running.insert(mean_key, mean);
        self.running.insert(var_key, var);
        Ok(out?)
    }

    fn conv_bn_relu(&mut self, conv: &str, bn: &str, x: Value) -> Result<Value> {
        let c = self.conv(conv, x, Padding::Same)?;
        let n = self.batch_norm(bn, c)?;
        Ok(self.tape.relu(n))
    }
}

fn check_input(spec: &ModelSpec, input: &Tensor) -> Result<()> {
    input.expect_rank(3).map_err(ModelError::Tensor)?;
    if input.shape()[1] != spec.input_dims {
        return Err(ModelError::DimsMismatch {
            expected: spec.input_dims,
            actual: input.shape()[1],
        });
    }
    if let Some(t) = spec.input_length {
        // GAP-terminated nets accept any length; the MLP cannot.
        if spec.architecture == Architecture::Mlp && input.shape()[2] != t {
            return Err(ModelError::LengthMismatch {
                expected: t,
                actual: input.shape()[2],
            });
        }
    }
    Ok(())
}

/// Runs a forward pass over `[N, D, T]` input. Train mode updates the
/// running statistics behind the chosen BN set.
pub fn forward(
    spec: &ModelSpec,
    params: &BTreeMap<String, Tensor>,
    running: &mut BTreeMap<String, Tensor>,
    input: &Tensor,
    opts: ForwardOpts,
    rng: &mut ChaCha8Rng,
) -> Result<ForwardPass> {
    check_input(spec, input)?;
    let mut ctx = Ctx {
        tape: Tape::new(),
        params,
        running,
        values: BTreeMap::new(),
        opts,
    };
    let input_tensor = if opts.input_grad {
        input.clone().with_grad()
    } else {
        input.clone()
    };
    let x = ctx.tape.leaf(input_tensor);

    let (gap_input, gap, logits) = match spec.architecture {
        Architecture::Fcn => {
            let mut h = x;
            for i in 1..=FCN_LAYOUT.len() {
                h = ctx.conv_bn_relu(&format!("conv{i}"), &format!("bn{i}"), h)?;
            }
            let gap = ctx.tape.global_avg_pool(h)?;
            let head_w = ctx.param("head.weight")?;
            let head_b = ctx.param("head.bias")?;
            let logits = ctx.tape.dense(gap, head_w, Some(head_b))?;
            (Some(h), Some(gap), logits)
        }
        Architecture::ResNet => {
            let mut h = x;
            for (bi, &(filters, c_in)) in resnet_blocks(spec.input_dims).iter().enumerate() {
                let block = format!("b{}", bi + 1);
                let block_input = h;
                let mut y = h;
                for (ci, _) in RESNET_KERNELS.iter().enumerate() {
                    let conv = format!("{block}.conv{}", ci + 1);
                    let bn = format!("{block}.bn{}", ci + 1);
                    let c = ctx.conv(&conv, y, Padding::Same)?;
                    y = ctx.batch_norm(&bn, c)?;
                    if ci + 1 < RESNET_KERNELS.len() {
                        y = ctx.tape.relu(y);
                    }
                }
                // identity shortcut when the channel counts agree, 1x1
                // conv + BN projection otherwise; ReLU after the merge
                let shortcut = if c_in == filters {
                    block_input
                } else {
                    let p = ctx.conv(&format!("{block}.shortcut"), block_input, Padding::Same)?;
                    ctx.batch_norm(&format!("{block}.shortcut_bn"), p)?
                };
                let merged = ctx.tape.add(y, shortcut)?;
                h = ctx.tape.relu(merged);
            }
            let gap = ctx.tape.global_avg_pool(h)?;
            let head_w = ctx.param("head.weight")?;
            let head_b = ctx.param("head.bias")?;
            let logits = ctx.tape.dense(gap, head_w, Some(head_b))?;
            (Some(h), Some(gap), logits)
        }
        Architecture::Inception => {
            let wiring = inception_wiring(spec);
            let mut h = x;
            let mut residual_input = x;
            for (i, w) in wiring.iter().enumerate() {
                let module = format!("m{}", i + 1);
                let branch_src = if w.bottleneck {
                    ctx.conv(&format!("{module}.bottleneck"), h, Padding::Same)?
                } else {
                    h
                };
                let mut branches = Vec::with_capacity(spec.inception.kernel_sizes.len() + 1);
                for j in 1..=spec.inception.kernel_sizes.len() {
                    branches.push(ctx.conv(&format!("{module}.conv{j}"), branch_src, Padding::Same)?);
                }
                let pooled = ctx.tape.max_pool1d(h, 3, 1, Padding::Same)?;
                branches.push(ctx.conv(&format!("{module}.poolconv"), pooled, Padding::Same)?);
                let cat = ctx.tape.concat_channels(&branches)?;
                let bn = ctx.batch_norm(&format!("{module}.bn"), cat)?;
                h = ctx.tape.relu(bn);
                if let Some((_, projection)) = w.residual {
                    let shortcut = if projection {
                        let p = ctx.conv(&format!("r{}", i + 1), residual_input, Padding::Same)?;
                        ctx.batch_norm(&format!("r{}.bn", i + 1), p)?
                    } else {
                        residual_input
                    };
                    let merged = ctx.tape.add(h, shortcut)?;
                    h = ctx.tape.relu(merged);
                    residual_input = h;
                }
            }
            let gap = ctx.tape.global_avg_pool(h)?;
            let head_w = ctx.param("head.weight")?;
            let head_b = ctx.param("head.bias")?;
            let logits = ctx.tape.dense(gap, head_w, Some(head_b))?;
            (Some(h), Some(gap), logits)
        }
        Architecture::Mlp => {
            let flat = ctx.tape.flatten(x)?;
            let mut h = flat;
            for (i, &rate) in MLP_DROPOUT.iter().enumerate() {
                h = ctx.tape.dropout(h, rate, opts.mode, rng)?;
                if i < 3 {
                    let w = ctx.param(&format!("fc{}.weight", i + 1))?;
                    let b = ctx.param(&format!("fc{}.bias", i + 1))?;
                    let z = ctx.tape.dense(h, w, Some(b))?;
                    h = ctx.tape.relu(z);
                    debug_assert_eq!(ctx.tape.value(h).shape()[1], MLP_UNITS);
                }
            }
            let w = ctx.param("head.weight")?;
            let b = ctx.param("head.bias")?;
            let logits = ctx.tape.dense(h, w, Some(b))?;
            (None, None, logits)
        }
    };

    let output = match spec.head {
        Head::Classification => ctx.tape.softmax(logits)?,
        Head::Regression(_) => logits,
    };
    Ok(ForwardPass {
        tape: ctx.tape,
        input: x,
        gap_input,
        gap,
        logits,
        output,
        params: ctx.values,
    })
}

impl ModelState {
    /// Forward pass that may update running statistics (train mode).
    pub fn forward_mut(
        &mut self,
        input: &Tensor,
        opts: ForwardOpts,
        rng: &mut ChaCha8Rng,
    ) -> Result<ForwardPass> {
        forward(&self.spec, &self.params, &mut self.running, input, opts, rng)
    }

    /// Evaluation forward pass; running statistics are left untouched.
    pub fn forward_eval(&self, input: &Tensor, opts: ForwardOpts) -> Result<ForwardPass> {
        let mut running = self.running.clone();
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        forward(&self.spec, &self.params, &mut running, input, opts, &mut rng)
    }

    /// Class probabilities (or regression outputs) in eval mode.
    pub fn predict(&self, input: &Tensor) -> Result<Tensor> {
        let pass = self.forward_eval(input, ForwardOpts::eval())?;
        Ok(pass.output_tensor().clone())
    }

    /// Argmax labels for a batch, eval mode.
    pub fn predict_labels(&self, input: &Tensor) -> Result<Vec<usize>> {
        let probs = self.predict(input)?;
        Ok(argmax_rows(&probs))
    }
}

/// Row-wise argmax of a `[N, K]` tensor; ties resolve to the lowest index.
pub fn argmax_rows(probs: &Tensor) -> Vec<usize> {
    let (n, k) = (probs.shape()[0], probs.shape()[1]);
    (0..n)
        .map(|row| {
            (0..k)
                .max_by(|&a, &b| {
                    probs
                        .at2(row, a)
                        .partial_cmp(&probs.at2(row, b))
                        .unwrap()
                        .then(b.cmp(&a))
                })
                .unwrap()
        })
        .collect()
}
