//! Parameter allocation for each architecture.
//!
//! Builders lay out zero-filled parameters (batch-norm scales start at one,
//! running variances at one); weight initialization is the trainer's job.
//! The names declared here are the contract the forward pass reads.

use crate::error::{ModelError, Result};
use crate::spec::{Architecture, ModelSpec};
use crate::state::{ModelState, TrainMeta};
use std::collections::BTreeMap;
use tsc_tensor::Tensor;

pub(crate) struct Builder {
    params: BTreeMap<String, Tensor>,
    running: BTreeMap<String, Tensor>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            params: BTreeMap::new(),
            running: BTreeMap::new(),
        }
    }

    fn conv(&mut self, name: &str, c_out: usize, c_in: usize, kernel: usize, bias: bool) {
        self.params
            .insert(format!("{name}.weight"), Tensor::zeros(&[c_out, c_in, kernel]));
        if bias {
            self.params
                .insert(format!("{name}.bias"), Tensor::zeros(&[c_out]));
        }
    }

    fn batch_norm(&mut self, name: &str, channels: usize) {
        self.params
            .insert(format!("{name}.gamma"), Tensor::full(&[channels], 1.0));
        self.params
            .insert(format!("{name}.beta"), Tensor::zeros(&[channels]));
        self.running
            .insert(format!("{name}.mean"), Tensor::zeros(&[channels]));
        self.running
            .insert(format!("{name}.var"), Tensor::full(&[channels], 1.0));
    }

    fn dense(&mut self, name: &str, units: usize, features: usize) {
        self.params
            .insert(format!("{name}.weight"), Tensor::zeros(&[units, features]));
        self.params
            .insert(format!("{name}.bias"), Tensor::zeros(&[units]));
    }

    fn finish(self, spec: ModelSpec) -> ModelState {
        ModelState {
            spec,
            params: self.params,
            running: self.running,
            train_meta: TrainMeta::default(),
        }
    }
}

/// Channel bookkeeping shared by the inception builder and forward pass.
pub(crate) struct InceptionModuleWiring {
    pub c_in: usize,
    pub bottleneck: bool,
    pub branch_in: usize,
    pub c_out: usize,
    /// Residual merge after this module: `(input_channels, projection)`.
    pub residual: Option<(usize, bool)>,
}

pub(crate) fn inception_wiring(spec: &ModelSpec) -> Vec<InceptionModuleWiring> {
    let inc = &spec.inception;
    let c_out = (inc.kernel_sizes.len() + 1) * inc.n_filters;
    let mut wiring = Vec::with_capacity(inc.depth);
    let mut c_in = spec.input_dims;
    let mut residual_channels = spec.input_dims;
    for i in 0..inc.depth {
        let bottleneck = inc.use_bottleneck && c_in > 1;
        let branch_in = if bottleneck { inc.bottleneck_size } else { c_in };
        let residual = (inc.use_residual && i % 3 == 2).then(|| {
            let projection = residual_channels != c_out;
            let merge = (residual_channels, projection);
            residual_channels = c_out;
            merge
        });
        wiring.push(InceptionModuleWiring {
            c_in,
            bottleneck,
            branch_in,
            c_out,
            residual,
        });
        c_in = c_out;
    }
    wiring
}

/// ResNet block plan: `(filters, input_channels)` for the three blocks.
pub(crate) fn resnet_blocks(input_dims: usize) -> [(usize, usize); 3] {
    [(64, input_dims), (128, 64), (128, 128)]
}

pub(crate) const RESNET_KERNELS: [usize; 3] = [8, 5, 3];
pub(crate) const FCN_LAYOUT: [(usize, usize); 3] = [(128, 8), (256, 5), (128, 3)];
pub(crate) const MLP_UNITS: usize = 500;
pub(crate) const MLP_DROPOUT: [f64; 4] = [0.1, 0.2, 0.2, 0.3];

pub fn build_fcn(spec: &ModelSpec) -> Result<ModelState> {
    expect_arch(spec, Architecture::Fcn)?;
    let mut b = Builder::new();
    let mut c_in = spec.input_dims;
    for (i, &(filters, kernel)) in FCN_LAYOUT.iter().enumerate() {
        b.conv(&format!("conv{}", i + 1), filters, c_in, kernel, true);
        b.batch_norm(&format!("bn{}", i + 1), filters);
        c_in = filters;
    }
    b.dense("head", spec.output_units(), c_in);
    Ok(b.finish(spec.clone()))
}

pub fn build_resnet(spec: &ModelSpec) -> Result<ModelState> {
    expect_arch(spec, Architecture::ResNet)?;
    let mut b = Builder::new();
    for (bi, &(filters, c_in)) in resnet_blocks(spec.input_dims).iter().enumerate() {
        let block = format!("b{}", bi + 1);
        let mut c = c_in;
        for (ci, &kernel) in RESNET_KERNELS.iter().enumerate() {
            b.conv(&format!("{block}.conv{}", ci + 1), filters, c, kernel, true);
            b.batch_norm(&format!("{block}.bn{}", ci + 1), filters);
            c = filters;
        }
        if c_in != filters {
            b.conv(&format!("{block}.shortcut"), filters, c_in, 1, true);
            b.batch_norm(&format!("{block}.shortcut_bn"), filters);
        }
    }
    b.dense("head", spec.output_units(), 128);
    Ok(b.finish(spec.clone()))
}

pub fn build_inception(spec: &ModelSpec) -> Result<ModelState> {
    expect_arch(spec, Architecture::Inception)?;
    let inc = &spec.inception;
    let mut b = Builder::new();
    for (i, w) in inception_wiring(spec).iter().enumerate() {
        let module = format!("m{}", i + 1);
        if w.bottleneck {
            b.conv(&format!("{module}.bottleneck"), inc.bottleneck_size, w.c_in, 1, false);
        }
        for (j, &kernel) in inc.kernel_sizes.iter().enumerate() {
            b.conv(&format!("{module}.conv{}", j + 1), inc.n_filters, w.branch_in, kernel, false);
        }
        b.conv(&format!("{module}.poolconv"), inc.n_filters, w.c_in, 1, false);
        b.batch_norm(&format!("{module}.bn"), w.c_out);
        if let Some((res_c, projection)) = w.residual {
            if projection {
                b.conv(&format!("r{}", i + 1), w.c_out, res_c, 1, false);
                b.batch_norm(&format!("r{}.bn", i + 1), w.c_out);
            }
        }
    }
    let final_channels = (inc.kernel_sizes.len() + 1) * inc.n_filters;
    b.dense("head", spec.output_units(), final_channels);
    Ok(b.finish(spec.clone()))
}

pub fn build_mlp(spec: &ModelSpec) -> Result<ModelState> {
    expect_arch(spec, Architecture::Mlp)?;
    let t = spec
        .input_length
        .ok_or(ModelError::NeedsFixedLength { arch: "mlp" })?;
    let mut b = Builder::new();
    let mut features = spec.input_dims * t;
    for i in 0..3 {
        b.dense(&format!("fc{}", i + 1), MLP_UNITS, features);
        features = MLP_UNITS;
    }
    b.dense("head", spec.output_units(), MLP_UNITS);
    Ok(b.finish(spec.clone()))
}

/// Builds the architecture named by the spec.
pub fn build(spec: &ModelSpec) -> Result<ModelState> {
    spec.validate()?;
    match spec.architecture {
        Architecture::Mlp => build_mlp(spec),
        Architecture::Fcn => build_fcn(spec),
        Architecture::ResNet => build_resnet(spec),
        Architecture::Inception => build_inception(spec),
    }
}

fn expect_arch(spec: &ModelSpec, arch: Architecture) -> Result<()> {
    spec.validate()?;
    if spec.architecture != arch {
        return Err(ModelError::Spec(format!(
            "spec names architecture {}, builder is {}",
            spec.architecture.as_str(),
            arch.as_str()
        )));
    }
    Ok(())
}
