//! Run configuration and its `key = value` text form.
//!
//! Every field has a default; a config file only needs the keys it changes.
//! Lines starting with `#` are comments. The rendered form lists every key in
//! sorted order so two identical configs always render to identical bytes.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::imaging::{CornerConfig, ResampleMethod};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub deterministic: bool,

    // imaging
    pub resample: ResampleMethod,
    pub harris_kappa: f64,
    pub harris_sigma: f64,
    pub nms_radius: usize,
    pub nms_rel_threshold: f64,
    pub max_corners: usize,

    // synthesis
    pub split_fraction: f64,
    pub reg_variants: usize,
    pub patches_per_image: usize,
    pub frames_per_video: usize,

    // training
    pub epochs: usize,
    pub batch0: usize,
    pub batch_double_every: usize,
    pub lr0: f64,
    pub lr_drop_factor: f64,
    pub plateau_patience: usize,
    pub plateau_min_delta: f64,
    pub max_lr_drops: usize,
    pub val_fraction: f64,
    /// `auto` picks SGD for the regression model and Adam otherwise.
    pub optimizer: String,
    pub momentum: f64,
    pub weight_decay: f64,
    pub precision: String,

    // aggregation
    pub image_pct: f64,
    pub video_pct: f64,
    pub low_confidence_corners: usize,

    // baselines
    pub forest_trees: usize,
    pub tree_min_leaf: usize,
    pub logreg_l2: f64,
    pub logreg_lr: f64,
    pub logreg_max_iter: usize,
    pub logreg_tol: f64,
    pub nb_var_floor: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            deterministic: true,
            resample: ResampleMethod::Bicubic,
            harris_kappa: 0.05,
            harris_sigma: 1.5,
            nms_radius: 10,
            nms_rel_threshold: 0.01,
            max_corners: 200,
            split_fraction: 0.7,
            reg_variants: 6,
            patches_per_image: 32,
            frames_per_video: 10,
            epochs: 40,
            batch0: 32,
            batch_double_every: 10,
            lr0: 1e-4,
            lr_drop_factor: 10.0,
            plateau_patience: 5,
            plateau_min_delta: 1e-4,
            max_lr_drops: 2,
            val_fraction: 0.1,
            optimizer: "auto".into(),
            momentum: 0.9,
            weight_decay: 1e-4,
            precision: "f32".into(),
            image_pct: 90.0,
            video_pct: 70.0,
            low_confidence_corners: 10,
            forest_trees: 300,
            tree_min_leaf: 2,
            logreg_l2: 1e-4,
            logreg_lr: 0.5,
            logreg_max_iter: 10_000,
            logreg_tol: 1e-5,
            nb_var_floor: 1e-9,
        }
    }
}

fn parse_scalar(raw: &str) -> Value {
    serde_json::from_str::<Value>(raw)
        .ok()
        .filter(|v| !v.is_object() && !v.is_array())
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

impl RunConfig {
    fn to_map(&self) -> Map<String, Value> {
        match serde_json::to_value(self).expect("plain struct") {
            Value::Object(m) => m,
            _ => unreachable!(),
        }
    }

    fn from_map(map: Map<String, Value>) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_value(Value::Object(map)).map_err(|e| Error::format("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Overrides one field from its textual value.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let mut map = self.to_map();
        let slot = map
            .get_mut(key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown config key {key:?}")))?;
        let mut value = parse_scalar(raw.trim());
        // Keep string-typed fields strings even when the text looks numeric.
        if slot.is_string() && !value.is_string() {
            value = Value::String(raw.trim().to_string());
        }
        *slot = value;
        *self = RunConfig::from_map(map)?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply(text)?;
        Ok(cfg)
    }

    /// Applies the keys of a config text on top of this config.
    pub fn apply(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::format("config", format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.to_map() {
            let text = match v {
                Value::String(s) => s,
                other => other.to_string(),
            };
            out.push_str(&format!("{k} = {text}\n"));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.to_map())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("config: {what}")));
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad("split_fraction must be in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return bad("val_fraction must be in [0, 1)");
        }
        if self.epochs == 0 || self.batch0 == 0 || self.batch_double_every == 0 {
            return bad("epochs, batch0 and batch_double_every must be positive");
        }
        if !(self.lr0 > 0.0) || !(self.lr_drop_factor > 1.0) {
            return bad("lr0 must be positive and lr_drop_factor above 1");
        }
        if !["auto", "sgd", "adam"].contains(&self.optimizer.as_str()) {
            return bad("optimizer must be auto, sgd or adam");
        }
        if !["f32", "f64"].contains(&self.precision.as_str()) {
            return bad("precision must be f32 or f64");
        }
        if !(0.0..=100.0).contains(&self.image_pct) || !(0.0..=100.0).contains(&self.video_pct) {
            return bad("percentiles must be in [0, 100]");
        }
        if self.nms_radius == 0 || self.reg_variants == 0 || self.frames_per_video == 0 {
            return bad("nms_radius, reg_variants and frames_per_video must be positive");
        }
        if self.forest_trees == 0 || self.tree_min_leaf == 0 {
            return bad("forest_trees and tree_min_leaf must be positive");
        }
        Ok(())
    }

    pub fn corner_config(&self) -> CornerConfig {
        CornerConfig {
            kappa: self.harris_kappa,
            sigma: self.harris_sigma,
            nms_radius: self.nms_radius,
            rel_threshold: self.nms_rel_threshold,
            max_corners: self.max_corners,
        }
    }
}
