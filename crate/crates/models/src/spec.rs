//! Declarative model descriptions and the flat `key = value` grammar they
//! serialize to.

use crate::error::{ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Mlp,
    Fcn,
    ResNet,
    Inception,
}

impl Architecture {
    pub fn as_str(&self) -> &'static str {
        match self {
            Architecture::Mlp => "mlp",
            Architecture::Fcn => "fcn",
            Architecture::ResNet => "resnet",
            Architecture::Inception => "inception",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(Architecture::Mlp),
            "fcn" => Ok(Architecture::Fcn),
            "resnet" => Ok(Architecture::ResNet),
            "inception" => Ok(Architecture::Inception),
            other => Err(ModelError::Spec(format!("unknown architecture {other:?}"))),
        }
    }

    /// GAP-terminated architectures accept any input length and expose
    /// class activation maps.
    pub fn has_gap(&self) -> bool {
        !matches!(self, Architecture::Mlp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Classification,
    Regression(usize),
}

/// Inception-specific knobs; defaults follow the reference configuration
/// (depth 6, 32 filters at lengths 10/20/40, bottleneck 32, residuals on).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InceptionParams {
    pub depth: usize,
    pub n_filters: usize,
    pub kernel_sizes: Vec<usize>,
    pub bottleneck_size: usize,
    pub use_residual: bool,
    pub use_bottleneck: bool,
}

impl Default for InceptionParams {
    fn default() -> Self {
        InceptionParams {
            depth: 6,
            n_filters: 32,
            kernel_sizes: vec![10, 20, 40],
            bottleneck_size: 32,
            use_residual: true,
            use_bottleneck: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub input_dims: usize,
    /// `None` means "any"; only valid for GAP-terminated architectures.
    pub input_length: Option<usize>,
    pub n_classes: usize,
    pub inception: InceptionParams,
    pub head: Head,
}

impl ModelSpec {
    pub fn new(architecture: Architecture, input_dims: usize, n_classes: usize) -> Self {
        ModelSpec {
            architecture,
            input_dims,
            input_length: None,
            n_classes,
            inception: InceptionParams::default(),
            head: Head::Classification,
        }
    }

    pub fn with_length(mut self, t: usize) -> Self {
        self.input_length = Some(t);
        self
    }

    /// Output units: classes for a classification head, outputs for a
    /// regression head.
    pub fn output_units(&self) -> usize {
        match self.head {
            Head::Classification => self.n_classes,
            Head::Regression(outputs) => outputs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dims == 0 {
            return Err(ModelError::Spec("input_dims must be >= 1".into()));
        }
        if self.output_units() == 0 {
            return Err(ModelError::Spec("output units must be >= 1".into()));
        }
        if self.architecture == Architecture::Mlp && self.input_length.is_none() {
            return Err(ModelError::NeedsFixedLength { arch: "mlp" });
        }
        let inc = &self.inception;
        if self.architecture == Architecture::Inception {
            if inc.depth == 0 || inc.bottleneck_size == 0 || inc.n_filters == 0 {
                return Err(ModelError::Spec(
                    "inception depth, filters and bottleneck must be >= 1".into(),
                ));
            }
            if inc.kernel_sizes.is_empty() || inc.kernel_sizes.windows(2).any(|w| w[0] > w[1]) {
                return Err(ModelError::Spec(
                    "kernel_sizes must be non-empty and sorted ascending".into(),
                ));
            }
        }
        Ok(())
    }

    /// Flat `key = value` rendering; the inverse of [`ModelSpec::parse`].
    pub fn to_config(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("architecture = {}\n", self.architecture.as_str()));
        out.push_str(&format!("input_dims = {}\n", self.input_dims));
        match self.input_length {
            Some(t) => out.push_str(&format!("input_length = {t}\n")),
            None => out.push_str("input_length = any\n"),
        }
        out.push_str(&format!("n_classes = {}\n", self.n_classes));
        let inc = &self.inception;
        out.push_str(&format!("depth = {}\n", inc.depth));
        out.push_str(&format!("n_filters = {}\n", inc.n_filters));
        let ks: Vec<String> = inc.kernel_sizes.iter().map(|k| k.to_string()).collect();
        out.push_str(&format!("kernel_sizes = {}\n", ks.join(",")));
        out.push_str(&format!("bottleneck_size = {}\n", inc.bottleneck_size));
        out.push_str(&format!("use_residual = {}\n", inc.use_residual));
        out.push_str(&format!("use_bottleneck = {}\n", inc.use_bottleneck));
        match self.head {
            Head::Classification => out.push_str("head = classification\n"),
            Head::Regression(outputs) => out.push_str(&format!("head = regression:{outputs}\n")),
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = ModelSpec::new(Architecture::Fcn, 1, 2);
        let mut saw_arch = false;
        for (key, value) in parse_kv(text) {
            match key.as_str() {
                "architecture" => {
                    spec.architecture = Architecture::parse(&value)?;
                    saw_arch = true;
                }
                "input_dims" => spec.input_dims = parse_num(&key, &value)?,
                "input_length" => {
                    spec.input_length = if value == "any" {
                        None
                    } else {
                        Some(parse_num(&key, &value)?)
                    }
                }
                "n_classes" => spec.n_classes = parse_num(&key, &value)?,
                "depth" => spec.inception.depth = parse_num(&key, &value)?,
                "n_filters" => spec.inception.n_filters = parse_num(&key, &value)?,
                "kernel_sizes" => {
                    spec.inception.kernel_sizes = value
                        .split(',')
                        .map(|t| parse_num("kernel_sizes", t.trim()))
                        .collect::<Result<_>>()?;
                }
                "bottleneck_size" => spec.inception.bottleneck_size = parse_num(&key, &value)?,
                "use_residual" => spec.inception.use_residual = parse_bool(&key, &value)?,
                "use_bottleneck" => spec.inception.use_bottleneck = parse_bool(&key, &value)?,
                "head" => {
                    spec.head = if value == "classification" {
                        Head::Classification
                    } else if let Some(outputs) = value.strip_prefix("regression:") {
                        Head::Regression(parse_num("head outputs", outputs)?)
                    } else {
                        return Err(ModelError::Spec(format!("unknown head {value:?}")));
                    }
                }
                // train metadata keys are handled by the state loader
                "epochs_seen" | "checkpoint_tag" => {}
                other => {
                    return Err(ModelError::Spec(format!("unknown spec key {other:?}")));
                }
            }
        }
        if !saw_arch {
            return Err(ModelError::Spec("missing architecture key".into()));
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Splits a flat config into `(key, value)` pairs; blank lines and `#`
/// comments are skipped.
pub fn parse_kv(text: &str) -> Vec<(String, String)> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| {
            let (k, v) = l.split_once('=')?;
            Some((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn parse_num(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| ModelError::Spec(format!("bad numeric value for {key}: {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ModelError::Spec(format!(
            "bad boolean value for {key}: {value:?}"
        ))),
    }
}
