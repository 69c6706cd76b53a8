use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{OptimizerKind, Step};

/// Patch side length; also the receptive field of one output-map cell.
pub const PATCH: usize = 64;
/// Input pixels between neighbouring output-map cells.
pub const STRIDE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerDesc {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub bn: bool,
}

/// Which of the three trained networks a checkpoint holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Six-way classifier trained on corner-centered patches.
    Softmax,
    /// Six-way classifier read out at propagated corner locations.
    MaskSoftmax,
    /// Scalar regressor of the degradation factor, read out at corner locations.
    Mask,
}

impl ModelKind {
    pub fn head(self) -> usize {
        match self {
            ModelKind::Softmax | ModelKind::MaskSoftmax => 6,
            ModelKind::Mask => 1,
        }
    }

    pub fn is_regression(self) -> bool {
        self == ModelKind::Mask
    }

    pub fn default_optimizer(self) -> OptimizerKind {
        match self {
            ModelKind::Mask => OptimizerKind::SgdMomentum,
            ModelKind::Softmax | ModelKind::MaskSoftmax => OptimizerKind::Adam,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Softmax => "softmax",
            ModelKind::MaskSoftmax => "mask-softmax",
            ModelKind::Mask => "mask",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax" => Ok(ModelKind::Softmax),
            "mask-softmax" => Ok(ModelKind::MaskSoftmax),
            "mask" => Ok(ModelKind::Mask),
            _ => Err(Error::InvalidArgument(format!(
                "unknown model {s:?} (expected softmax, mask-softmax or mask)"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Layer stack and execution order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Architecture {
    pub layers: Vec<LayerDesc>,
    pub steps: Vec<Step>,
    pub head: usize,
}

impl Architecture {
    /// conv(16,5)+bn, conv(16,5)+bn, pool, conv(32,5)+bn, pool,
    /// conv(32,5)+bn, relu, conv(d,8).
    pub fn standard(head: usize) -> Self {
        let layer = |in_ch, out_ch, kernel, bn| LayerDesc {
            in_ch,
            out_ch,
            kernel,
            bn,
        };
        Architecture {
            layers: vec![
                layer(1, 16, 5, true),
                layer(16, 16, 5, true),
                layer(16, 32, 5, true),
                layer(32, 32, 5, true),
                layer(32, head, 8, false),
            ],
            steps: vec![
                Step::Conv(0),
                Step::BatchNorm(0),
                Step::Conv(1),
                Step::BatchNorm(1),
                Step::Pool,
                Step::Conv(2),
                Step::BatchNorm(2),
                Step::Pool,
                Step::Conv(3),
                Step::BatchNorm(3),
                Step::Relu,
                Step::Conv(4),
            ],
            head,
        }
    }

    /// Output length along one axis by walking the steps; `None` if any
    /// layer would produce an empty map.
    pub fn spatial_out(&self, t: usize) -> Option<usize> {
        let mut len = t;
        for step in &self.steps {
            len = match *step {
                Step::Conv(i) => len.checked_sub(self.layers[i].kernel - 1).filter(|&l| l > 0)?,
                Step::Pool => Some(len / 2).filter(|&l| l > 0)?,
                Step::BatchNorm(_) | Step::Relu => len,
            };
        }
        Some(len)
    }

    /// Text table of the layer stack and output sizes for a few inputs.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "step  op         channels  kernel  size@64");
        let mut len = PATCH;
        for (n, step) in self.steps.iter().enumerate() {
            let (op, ch, k) = match *step {
                Step::Conv(i) => {
                    let l = self.layers[i];
                    len -= l.kernel - 1;
                    ("conv", format!("{}->{}", l.in_ch, l.out_ch), l.kernel.to_string())
                }
                Step::BatchNorm(i) => ("batchnorm", self.layers[i].out_ch.to_string(), "-".into()),
                Step::Pool => {
                    len /= 2;
                    ("maxpool2", "-".into(), "2".into())
                }
                Step::Relu => ("relu", "-".into(), "-".into()),
            };
            let _ = writeln!(s, "{n:<5} {op:<10} {ch:<9} {k:<7} {len}");
        }
        let _ = writeln!(s, "\ninput  output");
        for t in [64, 65, 96, 128, 256, 480, 720, 1080, 1920] {
            let _ = writeln!(s, "{t:<6} {}", shape_fn(t).map_or("-".into(), |v| v.to_string()));
        }
        s
    }
}

/// Output-map length for input length `t` under the standard stack:
/// ⌊(⌊(t−8)/2⌋ − 4)/2⌋ − 11.
pub fn shape_fn(t: usize) -> Result<usize> {
    if t < PATCH {
        return Err(Error::InvalidArgument(format!("input side {t} is below {PATCH}")));
    }
    Ok(((t - 8) / 2 - 4) / 2 - 11)
}
