//! Training schedules, image-level evaluation, ablations and percentile sweeps.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aggregate::{image_class_or_fallback, image_reg, video_quality, FALLBACK_VALUE};
use crate::baselines::{
    map_features, Classifier, DecisionTree, FeatureVector, GaussianNb, LogRegConfig, LogisticRegression, RandomForest,
    TreeConfig, FEATURE_LEN,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::imaging::{detect_corners, CornerSet, Plane};
use crate::models::{argmax_class, mask_locations, Model, ModelKind, OutputMap, PATCH};
use crate::numkernel::{mse_loss, seeded_rng, softmax_xent, Mode, OptimizerKind, OptimizerState, Real, Tensor};
use crate::synth::{extract_patches, Dataset, Label, Manifest, ManifestEntry, PatchRecord, Split};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch0: usize,
    pub batch_double_every: usize,
    pub lr0: f64,
    pub lr_drop_factor: f64,
    pub plateau_patience: usize,
    pub plateau_min_delta: f64,
    pub max_lr_drops: usize,
    pub optimizer: OptimizerKind,
    pub momentum: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn from_run(cfg: &RunConfig, kind: ModelKind) -> Result<Self> {
        cfg.validate()?;
        let optimizer = match cfg.optimizer.as_str() {
            "auto" => kind.default_optimizer(),
            other => other.parse()?,
        };
        Ok(TrainConfig {
            epochs: cfg.epochs,
            batch0: cfg.batch0,
            batch_double_every: cfg.batch_double_every,
            lr0: cfg.lr0,
            lr_drop_factor: cfg.lr_drop_factor,
            plateau_patience: cfg.plateau_patience,
            plateau_min_delta: cfg.plateau_min_delta,
            max_lr_drops: cfg.max_lr_drops,
            optimizer,
            momentum: cfg.momentum,
            weight_decay: cfg.weight_decay,
            seed: cfg.seed,
        })
    }

    /// batch0 · 2^⌊epoch / batch_double_every⌋ (epochs count from 0).
    pub fn batch_size(&self, epoch: usize) -> usize {
        self.batch0 << (epoch / self.batch_double_every).min(20)
    }
}

/// Learning-rate drops when the validation metric stops improving.
#[derive(Clone, Debug, PartialEq)]
pub struct Plateau {
    pub lr: f64,
    lr0: f64,
    best: f64,
    wait: usize,
    pub drops: usize,
    patience: usize,
    min_delta: f64,
    factor: f64,
    max_drops: usize,
}

impl Plateau {
    pub fn new(cfg: &TrainConfig) -> Self {
        Plateau {
            lr: cfg.lr0,
            lr0: cfg.lr0,
            best: f64::NEG_INFINITY,
            wait: 0,
            drops: 0,
            patience: cfg.plateau_patience,
            min_delta: cfg.plateau_min_delta,
            factor: cfg.lr_drop_factor,
            max_drops: cfg.max_lr_drops,
        }
    }

    /// Records one epoch's validation metric; returns true if the rate dropped.
    pub fn observe(&mut self, metric: f64) -> bool {
        if metric > self.best + self.min_delta {
            self.best = metric;
            self.wait = 0;
            return false;
        }
        self.wait += 1;
        if self.wait >= self.patience && self.drops < self.max_drops {
            self.drops += 1;
            self.lr = self.lr0 / self.factor.powi(self.drops as i32);
            self.wait = 0;
            return true;
        }
        false
    }
}

/// Training sources held out for validation: a seeded draw of
/// round(fraction · n) of them (at least one when fraction > 0 and n ≥ 2).
pub fn validation_sources(manifest: &Manifest, fraction: f64, seed: u64) -> BTreeSet<u32> {
    let sources: Vec<u32> = manifest
        .split(Split::Train)
        .map(|e| e.source)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = sources.len();
    if fraction <= 0.0 || n < 2 {
        return BTreeSet::new();
    }
    let k = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order = sources;
    let mut rng = seeded_rng(seed ^ 0x5641_4c00);
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    order[..k].iter().copied().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub train_loss: f64,
    /// Accuracy (classification) or R² (regression) of the epoch's batches.
    pub train_metric: f64,
    pub val_metric: f64,
    pub test_metric: Option<f64>,
}

pub fn curves_csv(curves: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,batch_size,lr,train_loss,train_metric,val_metric,test_metric\n");
    for r in curves {
        let test = r.test_metric.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.epoch, r.batch_size, r.lr, r.train_loss, r.train_metric, r.val_metric, test
        ));
    }
    out
}

pub struct TrainOutcome<T: Real> {
    /// Weights of the epoch with the best validation metric.
    pub model: Model<T>,
    pub curves: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_metric: f64,
    pub lr_drops: usize,
}

fn batch_tensor<T: Real>(records: &[&PatchRecord]) -> Result<Tensor<T>> {
    let mut data = Vec::with_capacity(records.len() * PATCH * PATCH);
    for r in records {
        data.extend(r.pixels.data().iter().map(|&v| T::of(v as f64)));
    }
    Tensor::from_vec([records.len(), 1, PATCH, PATCH], data)
}

fn class_label(label: f32) -> Result<usize> {
    let c = label.round();
    if !(1.0..=6.0).contains(&c) || c != label {
        return Err(Error::InvalidArgument(format!("patch label {label} is not a class")));
    }
    Ok(c as usize)
}

/// R², or −MSE when the targets have no variance.
fn regression_metric(preds: &[f64], targets: &[f64]) -> f64 {
    r_squared(preds, targets).unwrap_or_else(|_| {
        -preds.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / preds.len().max(1) as f64
    })
}

/// Patch-level metric in inference mode: accuracy or R².
pub fn patch_metric<T: Real>(model: &Model<T>, records: &[PatchRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("patch set"));
    }
    let planes: Vec<Plane> = records.iter().map(|r| r.pixels.clone()).collect();
    let outputs = model.forward_patches(&planes)?;
    if model.kind.is_regression() {
        let preds: Vec<f64> = outputs.iter().map(|o| o[0].as_f64()).collect();
        let targets: Vec<f64> = records.iter().map(|r| r.label as f64).collect();
        Ok(regression_metric(&preds, &targets))
    } else {
        let mut correct = 0;
        for (o, r) in outputs.iter().zip(records) {
            correct += (argmax_class(o) == class_label(r.label)?) as usize;
        }
        Ok(correct as f64 / records.len() as f64)
    }
}

/// Trains a fresh model of `kind` on patch records.
///
/// Batches are drawn from a seeded per-epoch shuffle; a final batch of one
/// sample is dropped because batch statistics need two. The learning rate
/// drops on validation plateaus, and the returned weights are those of the
/// best validation epoch.
pub fn train_model<T: Real>(
    kind: ModelKind,
    train: &[PatchRecord],
    val: &[PatchRecord],
    test: Option<&[PatchRecord]>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    if train.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 training patches, got {}", train.len())));
    }
    for r in train.iter().chain(val) {
        if kind.is_regression() {
            if !r.label.is_finite() {
                return Err(Error::InvalidArgument("non-finite regression target".into()));
            }
        } else {
            class_label(r.label)?;
        }
    }
    let mut model: Model<T> = Model::new(kind, cfg.seed);
    let mut opt = OptimizerState::<T>::new(cfg.optimizer, cfg.lr0, cfg.momentum, cfg.weight_decay)?;
    let mut plateau = Plateau::new(cfg);
    let mut best: Option<(f64, usize, Model<T>)> = None;
    let mut curves = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let batch_size = cfg.batch_size(epoch).min(train.len());
        let lr = plateau.lr;
        opt.set_lr(lr)?;
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut rng = seeded_rng(cfg.seed ^ (epoch as u64 + 1).wrapping_mul(0xA24B_AED4_963E_E407));
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        let mut correct = 0usize;
        let mut preds = Vec::new();
        let mut targets = Vec::new();
        for (b, chunk) in order.chunks(batch_size).enumerate() {
            if chunk.len() < 2 {
                continue;
            }
            let records: Vec<&PatchRecord> = chunk.iter().map(|&i| &train[i]).collect();
            let x = batch_tensor::<T>(&records)?;
            let y = model.net.forward(&x, Mode::Train)?;
            let d = model.head();
            let (loss, grad) = if kind.is_regression() {
                let target = Tensor::from_vec(y.shape(), records.iter().map(|r| T::of(r.label as f64)).collect())?;
                for (p, r) in y.data().iter().zip(&records) {
                    preds.push(p.as_f64());
                    targets.push(r.label as f64);
                }
                mse_loss(&y, &target)?
            } else {
                let labels = records.iter().map(|r| class_label(r.label)).collect::<Result<Vec<_>>>()?;
                for (o, &l) in y.data().chunks(d).zip(&labels) {
                    correct += (argmax_class(o) == l) as usize;
                }
                softmax_xent(&y, &labels)?
            };
            let loss = loss.as_f64();
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, batch: b, loss });
            }
            loss_sum += loss * chunk.len() as f64;
            seen += chunk.len();
            let (grads, _) = model.net.backward(&grad)?;
            let slices: Vec<&[T]> = grads.iter().flat_map(|g| g.slices()).collect();
            opt.step(model.net.params_mut(), slices)?;
        }
        let train_metric = if kind.is_regression() {
            regression_metric(&preds, &targets)
        } else {
            correct as f64 / seen.max(1) as f64
        };
        let val_metric = if val.is_empty() {
            train_metric
        } else {
            patch_metric(&model, val)?
        };
        let test_metric = match test {
            Some(t) if !t.is_empty() => Some(patch_metric(&model, t)?),
            _ => None,
        };
        log::info!(
            "{kind} epoch {epoch}: loss {:.5} train {train_metric:.4} val {val_metric:.4} lr {lr:e}",
            loss_sum / seen.max(1) as f64
        );
        curves.push(EpochRecord {
            epoch,
            batch_size,
            lr,
            train_loss: loss_sum / seen.max(1) as f64,
            train_metric,
            val_metric,
            test_metric,
        });
        if best.as_ref().is_none_or(|(m, _, _)| val_metric > *m) {
            best = Some((val_metric, epoch, model.clone()));
        }
        if plateau.observe(val_metric) {
            log::info!("validation plateau: learning rate now {:e}", plateau.lr);
        }
    }
    let (best_val_metric, best_epoch, model) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        model,
        curves,
        best_epoch,
        best_val_metric,
        lr_drops: plateau.drops,
    })
}

/// Train, validation and test patch sets of a dataset for a model kind:
/// mask models learn from receptive windows, the patch model from
/// corner-centered crops.
pub fn training_sets(
    ds: &Dataset,
    kind: ModelKind,
    val_fraction: f64,
    seed: u64,
) -> Result<(Vec<PatchRecord>, Vec<PatchRecord>, Vec<PatchRecord>)> {
    let load = |split| match kind {
        ModelKind::Softmax => ds.patches(split),
        ModelKind::MaskSoftmax | ModelKind::Mask => ds.windows(split),
    };
    let held_out = validation_sources(&ds.manifest, val_fraction, seed);
    let source_of: Vec<u32> = ds.manifest.entries.iter().map(|e| e.source).collect();
    let (val, train): (Vec<PatchRecord>, Vec<PatchRecord>) = load(Split::Train)?
        .into_iter()
        .partition(|r| held_out.contains(&source_of[r.entry as usize]));
    Ok((train, val, load(Split::Test)?))
}

/// 1 − SSres/SStot.
pub fn r_squared(preds: &[f64], targets: &[f64]) -> Result<f64> {
    if preds.len() != targets.len() {
        return Err(Error::shape("r_squared", preds.len(), targets.len()));
    }
    if targets.len() < 2 {
        return Err(Error::InvalidArgument("R² needs at least 2 targets".into()));
    }
    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    let ss_tot: f64 = targets.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::InvalidArgument("R² undefined: targets have zero variance".into()));
    }
    let ss_res: f64 = preds.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub accuracy: f64,
    pub total: usize,
    /// `matrix[true − 1][predicted − 1]`.
    pub matrix: [[usize; 6]; 6],
}

pub fn accuracy_confusion(preds: &[u8], labels: &[u8]) -> Result<Confusion> {
    if preds.len() != labels.len() {
        return Err(Error::shape("accuracy_confusion", preds.len(), labels.len()));
    }
    if preds.is_empty() {
        return Err(Error::Empty("accuracy_confusion"));
    }
    let mut matrix = [[0; 6]; 6];
    for (&p, &l) in preds.iter().zip(labels) {
        if !(1..=6).contains(&p) || !(1..=6).contains(&l) {
            return Err(Error::InvalidArgument(format!("class pair ({l}, {p}) outside 1..=6")));
        }
        matrix[l as usize - 1][p as usize - 1] += 1;
    }
    let trace: usize = (0..6).map(|i| matrix[i][i]).sum();
    Ok(Confusion {
        accuracy: trace as f64 / preds.len() as f64,
        total: preds.len(),
        matrix,
    })
}

/// Corners of an image and the output-map cells they propagate to.
pub fn corner_cells<T: Real>(model: &Model<T>, image: &Plane, cfg: &RunConfig) -> Result<(CornerSet, Vec<(usize, usize)>)> {
    let corners = detect_corners(image, &cfg.corner_config())?;
    let cells = mask_locations(&model.propagate(&corners.to_mask())?);
    Ok((corners, cells))
}

/// Class predictions of every unit (patch or output cell) of one image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassUnits {
    pub entry: u32,
    pub label: u8,
    /// (video id, variant) for frames.
    pub video: Option<(String, u32)>,
    pub corners: usize,
    pub q: Vec<u8>,
}

fn entry_class(e: &ManifestEntry) -> Result<u8> {
    e.label
        .class()
        .ok_or_else(|| Error::InvalidArgument(format!("entry {} has a regression label; a class dataset is required", e.id)))
}

/// Unit predictions of one image: corner patches for the patch model,
/// propagated corner cells of the output map for the mask model.
pub fn image_units<T: Real>(model: &Model<T>, image: &Plane, cfg: &RunConfig) -> Result<(usize, Vec<u8>)> {
    match model.kind {
        ModelKind::Softmax => {
            let corners = detect_corners(image, &cfg.corner_config())?;
            let patches: Vec<Plane> = extract_patches(image, &corners, PATCH).into_iter().map(|p| p.pixels).collect();
            let out = model.forward_patches(&patches)?;
            Ok((corners.len(), out.iter().map(|o| argmax_class(o) as u8).collect()))
        }
        ModelKind::MaskSoftmax => {
            let (corners, cells) = corner_cells(model, image, cfg)?;
            let map = model.forward_map(image)?;
            Ok((corners.len(), cells.iter().map(|&(x, y)| map.argmax(x, y) as u8).collect()))
        }
        ModelKind::Mask => Err(Error::InvalidArgument("the regression model has no class units".into())),
    }
}

pub fn class_units<T: Real>(model: &Model<T>, ds: &Dataset, split: Split, cfg: &RunConfig) -> Result<Vec<ClassUnits>> {
    let mut out = Vec::new();
    ds.for_each_image(split, |e, image| {
        let label = entry_class(e)?;
        let (corners, q) = image_units(model, image, cfg)?;
        out.push(ClassUnits {
            entry: e.id,
            label,
            video: e.video_id.clone().map(|v| (v, e.variant)),
            corners,
            q,
        });
        Ok(())
    })?;
    if out.is_empty() {
        return Err(Error::Empty("evaluation split"));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub images: usize,
    pub accuracy: f64,
    pub confusion: [[usize; 6]; 6],
    /// Images without corners or with fewer than the configured minimum.
    pub low_confidence: usize,
    pub videos: usize,
    pub video_accuracy: Option<f64>,
}

/// Per-video verdicts: (label, predicted) for each (video, variant) group.
pub fn video_verdicts(units: &[ClassUnits], image_pct: f64, video_pct: f64) -> Result<Vec<(u8, u8)>> {
    let mut groups: BTreeMap<(String, u32), (u8, Vec<u8>)> = BTreeMap::new();
    for u in units {
        if let Some(key) = &u.video {
            let v = image_class_or_fallback(&u.q, image_pct)?.value;
            groups.entry(key.clone()).or_insert((u.label, Vec::new())).1.push(v);
        }
    }
    groups
        .into_values()
        .map(|(label, frames)| Ok((label, video_quality(&frames, video_pct)?)))
        .collect()
}

pub fn class_metrics(units: &[ClassUnits], cfg: &RunConfig) -> Result<ClassMetrics> {
    let mut preds = Vec::with_capacity(units.len());
    let mut low = 0;
    for u in units {
        let v = image_class_or_fallback(&u.q, cfg.image_pct)?;
        low += (v.low_confidence || u.corners < cfg.low_confidence_corners) as usize;
        preds.push(v.value);
    }
    let labels: Vec<u8> = units.iter().map(|u| u.label).collect();
    let c = accuracy_confusion(&preds, &labels)?;
    let videos = video_verdicts(units, cfg.image_pct, cfg.video_pct)?;
    let video_accuracy =
        (!videos.is_empty()).then(|| videos.iter().filter(|(l, p)| l == p).count() as f64 / videos.len() as f64);
    Ok(ClassMetrics {
        images: units.len(),
        accuracy: c.accuracy,
        confusion: c.matrix,
        low_confidence: low,
        videos: videos.len(),
        video_accuracy,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Image,
    Video,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: SweepAxis,
    pub percentile: u32,
    pub accuracy: f64,
    pub count: usize,
}

pub const SWEEP_PERCENTILES: [u32; 9] = [10, 20, 30, 40, 50, 60, 70, 80, 90];

/// Accuracy at percentiles 10..90. The image axis varies the per-image
/// percentile over all images; the video axis varies the per-video
/// percentile with the image percentile held at its configured value.
/// Returns no points for the video axis when there are no videos.
pub fn percentile_sweep(units: &[ClassUnits], axis: SweepAxis, cfg: &RunConfig) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::new();
    for p in SWEEP_PERCENTILES {
        let (correct, count) = match axis {
            SweepAxis::Image => {
                let mut correct = 0;
                for u in units {
                    correct += (image_class_or_fallback(&u.q, p as f64)?.value == u.label) as usize;
                }
                (correct, units.len())
            }
            SweepAxis::Video => {
                let v = video_verdicts(units, cfg.image_pct, p as f64)?;
                (v.iter().filter(|(l, p)| l == p).count(), v.len())
            }
        };
        if count == 0 {
            continue;
        }
        out.push(SweepPoint {
            axis,
            percentile: p,
            accuracy: correct as f64 / count as f64,
            count,
        });
    }
    Ok(out)
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("axis,percentile,accuracy,count\n");
    for p in points {
        let axis = match p.axis {
            SweepAxis::Image => "image",
            SweepAxis::Video => "video",
        };
        out.push_str(&format!("{axis},{},{},{}\n", p.percentile, p.accuracy, p.count));
    }
    out
}

/// The three regression aggregates of one image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegUnits {
    pub entry: u32,
    pub target: f64,
    pub corners: usize,
    /// Mean of the map over the propagated corner cells.
    pub mask_mean: f64,
    /// Mean of the whole map.
    pub map_mean: f64,
    /// Mean of per-patch outputs over corner-centered patches.
    pub patch_mean: f64,
}

fn map_mean<T: Real>(map: &OutputMap<T>) -> f64 {
    map.map.data().iter().map(|v| v.as_f64()).sum::<f64>() / map.map.len() as f64
}

pub fn image_reg_units<T: Real>(model: &Model<T>, image: &Plane, cfg: &RunConfig) -> Result<(usize, f64, f64, f64)> {
    if model.head() != 1 {
        return Err(Error::InvalidArgument("regression evaluation needs the single-output model".into()));
    }
    let (corners, cells) = corner_cells(model, image, cfg)?;
    let map = model.forward_map(image)?;
    let mask_mean = if cells.is_empty() {
        FALLBACK_VALUE
    } else {
        image_reg(&map, &cells)?
    };
    let patches: Vec<Plane> = extract_patches(image, &corners, PATCH).into_iter().map(|p| p.pixels).collect();
    let patch_mean = if patches.is_empty() {
        FALLBACK_VALUE
    } else {
        let out = model.forward_patches(&patches)?;
        out.iter().map(|o| o[0].as_f64()).sum::<f64>() / out.len() as f64
    };
    Ok((corners.len(), mask_mean, map_mean(&map), patch_mean))
}

pub fn reg_units<T: Real>(model: &Model<T>, ds: &Dataset, split: Split, cfg: &RunConfig) -> Result<Vec<RegUnits>> {
    let mut out = Vec::new();
    ds.for_each_image(split, |e, image| {
        let Label::Target(target) = e.label else {
            return Err(Error::InvalidArgument(format!(
                "entry {} has a class label; a regression dataset is required",
                e.id
            )));
        };
        let (corners, mask_mean, map_mean, patch_mean) = image_reg_units(model, image, cfg)?;
        out.push(RegUnits {
            entry: e.id,
            target,
            corners,
            mask_mean,
            map_mean,
            patch_mean,
        });
        Ok(())
    })?;
    if out.is_empty() {
        return Err(Error::Empty("evaluation split"));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ablation {
    pub images: usize,
    /// Mean over the propagated corner cells.
    pub mask_cnn_r2: f64,
    /// Mean over the whole output map.
    pub no_mask_r2: f64,
    /// Mean over corner-centered patches.
    pub corner_patches_r2: f64,
}

pub fn ablation_regression(units: &[RegUnits]) -> Result<Ablation> {
    let targets: Vec<f64> = units.iter().map(|u| u.target).collect();
    let r2 = |f: fn(&RegUnits) -> f64| r_squared(&units.iter().map(f).collect::<Vec<_>>(), &targets);
    Ok(Ablation {
        images: units.len(),
        mask_cnn_r2: r2(|u| u.mask_mean)?,
        no_mask_r2: r2(|u| u.map_mean)?,
        corner_patches_r2: r2(|u| u.patch_mean)?,
    })
}

/// Top-50 map features (from the regression model) of every image of a
/// class dataset split. Images without corner cells get the fallback value
/// in every slot.
pub fn feature_vectors<T: Real>(model: &Model<T>, ds: &Dataset, split: Split, cfg: &RunConfig) -> Result<Vec<FeatureVector>> {
    if model.head() != 1 {
        return Err(Error::InvalidArgument("features come from the single-output model".into()));
    }
    let mut out = Vec::new();
    ds.for_each_image(split, |e, image| {
        let label = entry_class(e)?;
        let (_, cells) = corner_cells(model, image, cfg)?;
        let values = if cells.is_empty() {
            vec![FALLBACK_VALUE; FEATURE_LEN]
        } else {
            map_features(&model.forward_map(image)?, &cells)?
        };
        out.push(FeatureVector {
            values,
            entry: e.id,
            label,
        });
        Ok(())
    })?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineScores {
    pub train_images: usize,
    pub test_images: usize,
    pub decision_tree: f64,
    pub random_forest: f64,
    pub naive_bayes: f64,
    pub logistic_regression: f64,
    pub logistic_converged: bool,
}

pub fn evaluate_baselines(train: &[FeatureVector], test: &[FeatureVector], cfg: &RunConfig) -> Result<BaselineScores> {
    if test.is_empty() {
        return Err(Error::Empty("baseline test set"));
    }
    let x: Vec<Vec<f64>> = train.iter().map(|f| f.values.clone()).collect();
    let y: Vec<u8> = train.iter().map(|f| f.label).collect();
    let xt: Vec<Vec<f64>> = test.iter().map(|f| f.values.clone()).collect();
    let yt: Vec<u8> = test.iter().map(|f| f.label).collect();
    let acc = |m: &dyn Classifier| -> Result<f64> { Ok(accuracy_confusion(&m.predict_all(&xt), &yt)?.accuracy) };
    let tree = DecisionTree::fit(
        &x,
        &y,
        TreeConfig {
            min_leaf: cfg.tree_min_leaf,
            max_features: None,
        },
        cfg.seed,
    )?;
    let forest = RandomForest::fit(&x, &y, cfg.forest_trees, cfg.tree_min_leaf, cfg.seed)?;
    let nb = GaussianNb::fit(&x, &y, cfg.nb_var_floor)?;
    let logreg = LogisticRegression::fit(
        &x,
        &y,
        LogRegConfig {
            l2: cfg.logreg_l2,
            lr: cfg.logreg_lr,
            max_iter: cfg.logreg_max_iter,
            tol: cfg.logreg_tol,
        },
    )?;
    Ok(BaselineScores {
        train_images: train.len(),
        test_images: test.len(),
        decision_tree: acc(&tree)?,
        random_forest: acc(&forest)?,
        naive_bayes: acc(&nb)?,
        logistic_regression: acc(&logreg)?,
        logistic_converged: logreg.converged,
    })
}
