//! Network hyperparameters and the per-layer shape plan.
//!
//! The CNN input for one epoch is a `channels x frames` grid with one input
//! plane per feature. Each conv block is a 3x3 convolution, ELU and 2x2 max
//! pooling (floor). Low channel counts cannot be pooled three times; the
//! [`Adaptation`] decides what happens then.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{config_hash, parse_config};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adaptation {
    /// Every layer must pool 2x2; failure is an error.
    Strict,
    /// Skip pooling (or valid convolution) along any axis too small for it.
    PreserveDims,
    /// Remove trailing conv layers until the strict plan fits.
    DropLayers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    Same,
    Valid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkSpec {
    pub conv_layers: usize,
    pub kernels: usize,
    pub dropout: f64,
    pub dense_units: usize,
    pub lstm_hidden: usize,
    pub adaptation: Adaptation,
    pub padding: Padding,
    /// Under `DropLayers`, a layer whose pooling leaves fewer channel rows
    /// than this counts as a dimensionality-reduction failure.
    pub min_pooled_channels: usize,
    /// Epochs per LSTM context window.
    pub segment_epochs: usize,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self {
            conv_layers: 3,
            kernels: 16,
            dropout: 0.2,
            dense_units: 32,
            lstm_hidden: 32,
            adaptation: Adaptation::PreserveDims,
            padding: Padding::Same,
            min_pooled_channels: 2,
            segment_epochs: 60,
        }
    }
}

pub const KERNEL: usize = 3;

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(1..=3).contains(&self.conv_layers) {
            return bad(format!("conv_layers {} not in 1..=3", self.conv_layers));
        }
        if self.kernels == 0 || self.dense_units == 0 || self.lstm_hidden == 0 {
            return bad("kernels, dense_units and lstm_hidden must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} not in [0, 1)", self.dropout));
        }
        if self.segment_epochs == 0 {
            return bad("segment_epochs must be positive".into());
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        config_hash(self)
    }

    /// Parses `key = value` lines (`#` comments) or a JSON object.
    pub fn parse(text: &str) -> Result<Self> {
        let spec: Self = parse_config(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let v = serde_json::to_value(self).expect("spec serializes");
        let mut s = String::new();
        for (k, v) in v.as_object().expect("object") {
            let v = match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

/// Shapes through one conv block. Heights are channel rows, widths frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayerPlan {
    pub in_h: usize,
    pub in_w: usize,
    pub pad_h: usize,
    pub pad_w: usize,
    pub conv_h: usize,
    pub conv_w: usize,
    pub pool_h: usize,
    pub pool_w: usize,
    pub out_h: usize,
    pub out_w: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShapePlan {
    pub channels: usize,
    pub frames: usize,
    pub layers: Vec<LayerPlan>,
}

impl ShapePlan {
    pub fn conv_layers(&self) -> usize {
        self.layers.len()
    }

    /// `(rows, cols)` after every block, starting with the input grid.
    pub fn dims(&self) -> Vec<(usize, usize)> {
        std::iter::once((self.channels, self.frames))
            .chain(self.layers.iter().map(|l| (l.out_h, l.out_w)))
            .collect()
    }

    pub fn flat_len(&self, kernels: usize) -> usize {
        let last = self.layers.last().expect("at least one layer");
        kernels * last.out_h * last.out_w
    }
}

fn axis_name(i: usize) -> &'static str {
    if i == 0 {
        "channel"
    } else {
        "frame"
    }
}

fn plan_layers(
    channels: usize,
    frames: usize,
    layers: usize,
    spec: &NetworkSpec,
    lenient: bool,
    min_pooled_channels: usize,
) -> Result<Vec<LayerPlan>> {
    let mut dims = [channels, frames];
    let mut out = Vec::with_capacity(layers);
    for layer in 1..=layers {
        let mut pad = [0usize; 2];
        let mut conv = dims;
        for a in 0..2 {
            match spec.padding {
                Padding::Same => pad[a] = KERNEL / 2,
                Padding::Valid if dims[a] >= KERNEL => conv[a] = dims[a] - KERNEL + 1,
                Padding::Valid if lenient => pad[a] = KERNEL / 2,
                Padding::Valid => {
                    return Err(Error::ShapePlan {
                        layer,
                        axis: axis_name(a),
                        size: dims[a],
                        op: "3x3 valid convolution",
                    })
                }
            }
        }
        let mut pool = [2usize; 2];
        for a in 0..2 {
            if conv[a] < 2 {
                if lenient {
                    pool[a] = 1;
                } else {
                    return Err(Error::ShapePlan {
                        layer,
                        axis: axis_name(a),
                        size: conv[a],
                        op: "2x2 max-pooling",
                    });
                }
            }
        }
        let next = [conv[0] / pool[0], conv[1] / pool[1]];
        if next[0] < min_pooled_channels {
            return Err(Error::ShapePlan {
                layer,
                axis: "channel",
                size: conv[0],
                op: "2x2 max-pooling without collapsing the channel axis",
            });
        }
        out.push(LayerPlan {
            in_h: dims[0],
            in_w: dims[1],
            pad_h: pad[0],
            pad_w: pad[1],
            conv_h: conv[0],
            conv_w: conv[1],
            pool_h: pool[0],
            pool_w: pool[1],
            out_h: next[0],
            out_w: next[1],
        });
        dims = next;
    }
    Ok(out)
}

/// Per-layer spatial dimensions for a `channels x frames` input grid.
pub fn shape_plan(channels: usize, frames: usize, spec: &NetworkSpec) -> Result<ShapePlan> {
    spec.validate()?;
    if channels == 0 || frames == 0 {
        return Err(Error::InvalidConfig("input grid must be non-empty".into()));
    }
    let layers = match spec.adaptation {
        Adaptation::Strict => plan_layers(channels, frames, spec.conv_layers, spec, false, 1)?,
        Adaptation::PreserveDims => plan_layers(channels, frames, spec.conv_layers, spec, true, 1)?,
        Adaptation::DropLayers => {
            let mut last_err = None;
            let mut found = None;
            for n in (1..=spec.conv_layers).rev() {
                match plan_layers(channels, frames, n, spec, false, spec.min_pooled_channels) {
                    Ok(l) => {
                        found = Some(l);
                        break;
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            match found {
                Some(l) => l,
                None => return Err(last_err.expect("at least one attempt")),
            }
        }
    };
    Ok(ShapePlan {
        channels,
        frames,
        layers,
    })
}
