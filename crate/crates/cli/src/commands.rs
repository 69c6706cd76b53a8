use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};

use latres::aggregate::{image_class_or_fallback, video_quality};
use latres::baselines::features_csv;
use latres::config::RunConfig;
use latres::imaging::load_image;
use latres::models::{shape_fn, Architecture, Model, ModelKind};
use latres::numkernel::{set_deterministic, Real};
use latres::synth::{
    class_name, nearest_class, synthesize, video_frame_paths, write_procedural_corpus, Dataset, Split, SynthMode,
};
use latres::traineval::{
    ablation_regression, class_metrics, class_units, curves_csv, evaluate_baselines, feature_vectors, image_reg_units,
    image_units, percentile_sweep, reg_units, sweep_csv, train_model, training_sets, SweepAxis, SweepPoint, TrainConfig,
};

use crate::{Command, ConfigArgs};

pub const CHECKPOINT_FILE: &str = "model.lres";

/// Bad invocation: exit code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// 2 usage, 3 data, 4 numeric failure.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<Usage>().is_some() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<latres::Error>() {
            return match err {
                latres::Error::Divergence { .. } | latres::Error::Numeric(_) => 4,
                _ => 3,
            };
        }
    }
    3
}

fn resolve_config(mut cfg: RunConfig, args: &ConfigArgs) -> Result<RunConfig> {
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        cfg.apply(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    for kv in &args.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v).map_err(|e| usage(e.to_string()))?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(p) = args.image_pct {
        cfg.image_pct = p;
    }
    if let Some(p) = args.video_pct {
        cfg.video_pct = p;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    set_deterministic(cfg.deterministic);
    Ok(cfg)
}

fn set_key(cfg: &mut RunConfig, key: &str, value: &str) -> Result<()> {
    cfg.set(key, value).map_err(|e| usage(e.to_string()))
}

fn require_dir(path: &Path, what: &str) -> Result<()> {
    if !path.is_dir() {
        return Err(usage(format!("{what} {} is not a directory", path.display())));
    }
    Ok(())
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        return Err(usage(format!("{what} {} does not exist", path.display())));
    }
    Ok(())
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    write(path, &(serde_json::to_string_pretty(v)? + "\n"))
}

fn open_dataset(dir: &Path) -> Result<Dataset> {
    require_dir(dir, "dataset")?;
    Ok(Dataset::open(dir)?)
}

fn check_split(split: Split, force: bool) -> Result<()> {
    if split == Split::Train && !force {
        return Err(usage("refusing to evaluate on the training split (pass --force to override)"));
    }
    Ok(())
}

fn expected_mode(kind: ModelKind) -> SynthMode {
    if kind.is_regression() {
        SynthMode::Reg
    } else {
        SynthMode::Class
    }
}

fn check_mode(ds: &Dataset, kind: ModelKind) -> Result<()> {
    let want = expected_mode(kind);
    if ds.info.mode != want {
        return Err(usage(format!(
            "model {kind} needs a {} dataset, {} is {}",
            mode_name(want),
            ds.dir.display(),
            mode_name(ds.info.mode)
        )));
    }
    Ok(())
}

fn mode_name(m: SynthMode) -> &'static str {
    match m {
        SynthMode::Class => "class",
        SynthMode::Reg => "reg",
    }
}

fn split_name(s: Split) -> &'static str {
    match s {
        Split::Train => "train",
        Split::Test => "test",
    }
}

/// Loads a checkpoint and the config stamped into it.
fn load_model<T: Real>(path: &Path) -> Result<(Model<T>, Option<RunConfig>)> {
    require_file(path, "checkpoint")?;
    let (model, stamp) = Model::<T>::load(path)?;
    let cfg = stamp.map(|s| RunConfig::parse(&s)).transpose()?;
    Ok((model, cfg))
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Corpus {
            out,
            images,
            videos,
            frames,
            height,
            width,
            seed,
        } => {
            if height < 64 || width < 64 || frames == 0 {
                return Err(usage("corpus sources must be at least 64×64 with at least one frame"));
            }
            write_procedural_corpus(&out, images, videos, frames, (height, width), seed)?;
            println!("wrote {images} images and {videos} videos to {}", out.display());
            Ok(())
        }
        Command::Synth {
            corpus,
            out,
            mode,
            variants,
            resample,
            cfg,
        } => {
            let mut cfg = resolve_config(RunConfig::default(), &cfg)?;
            if let Some(v) = variants {
                set_key(&mut cfg, "reg_variants", &v.to_string())?;
            }
            if let Some(m) = resample {
                set_key(&mut cfg, "resample", &m)?;
            }
            require_dir(&corpus, "corpus")?;
            let manifest = synthesize(&corpus, &out, mode, &cfg)?;
            write(&out.join("config.txt"), &cfg.render())?;
            let ds = Dataset::open(&out)?;
            println!(
                "{} entries from {} sources; {} train / {} test patches, {} train / {} test windows",
                manifest.entries.len(),
                ds.info.sources,
                ds.info.train_patches,
                ds.info.test_patches,
                ds.info.train_windows,
                ds.info.test_windows
            );
            Ok(())
        }
        Command::Train {
            dataset,
            model,
            out,
            optimizer,
            epochs,
            cfg,
        } => {
            let ds = open_dataset(&dataset)?;
            let mut cfg = resolve_config(ds.config.clone(), &cfg)?;
            if let Some(o) = optimizer {
                set_key(&mut cfg, "optimizer", &o)?;
            }
            if let Some(e) = epochs {
                set_key(&mut cfg, "epochs", &e.to_string())?;
            }
            check_mode(&ds, model)?;
            match cfg.precision.as_str() {
                "f64" => train::<f64>(&ds, model, &out, &cfg),
                _ => train::<f32>(&ds, model, &out, &cfg),
            }
        }
        Command::Predict { model, input, cfg } => {
            if !input.exists() {
                return Err(usage(format!("input {} does not exist", input.display())));
            }
            let (probe, stamp) = load_model::<f32>(&model)?;
            let cfg = resolve_config(stamp.unwrap_or_default(), &cfg)?;
            match cfg.precision.as_str() {
                "f64" => predict(&probe.cast::<f64>(), &input, &cfg),
                _ => predict(&probe, &input, &cfg),
            }
        }
        Command::Eval {
            model,
            dataset,
            out,
            split,
            force,
            baselines,
            cfg,
        } => {
            check_split(split, force)?;
            let ds = open_dataset(&dataset)?;
            let cfg = resolve_config(ds.config.clone(), &cfg)?;
            if let Some(b) = &baselines {
                require_file(b, "baseline checkpoint")?;
                if ds.info.mode != SynthMode::Class {
                    return Err(usage("baselines predict classes and need a class dataset"));
                }
            }
            match cfg.precision.as_str() {
                "f64" => eval::<f64>(&model, &ds, &out, split, baselines.as_deref(), &cfg),
                _ => eval::<f32>(&model, &ds, &out, split, baselines.as_deref(), &cfg),
            }
        }
        Command::Sweep {
            model,
            dataset,
            out,
            split,
            force,
            cfg,
        } => {
            check_split(split, force)?;
            let ds = open_dataset(&dataset)?;
            let cfg = resolve_config(ds.config.clone(), &cfg)?;
            let (m, _) = load_model::<f32>(&model)?;
            if m.kind.is_regression() {
                return Err(usage("the sweep needs a classification model"));
            }
            check_mode(&ds, m.kind)?;
            create_out(&out)?;
            let units = class_units(&m, &ds, split, &cfg)?;
            let points = sweep_points(&units, &cfg)?;
            write(&out.join("sweep.csv"), &sweep_csv(&points))?;
            write(&out.join("config.txt"), &cfg.render())?;
            print!("{}", sweep_csv(&points));
            Ok(())
        }
        Command::Features {
            model,
            dataset,
            out,
            split,
            cfg,
        } => {
            let ds = open_dataset(&dataset)?;
            let cfg = resolve_config(ds.config.clone(), &cfg)?;
            let (m, _) = load_model::<f32>(&model)?;
            if m.head() != 1 {
                return Err(usage("features come from the single-output (mask) model"));
            }
            if ds.info.mode != SynthMode::Class {
                return Err(usage("features are labeled with classes and need a class dataset"));
            }
            let rows = feature_vectors(&m, &ds, split, &cfg)?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                create_out(parent)?;
            }
            write(&out, &features_csv(&rows))?;
            println!("{} feature vectors written to {}", rows.len(), out.display());
            Ok(())
        }
        Command::Describe { model, sizes, cfg } => {
            let cfg = resolve_config(RunConfig::default(), &cfg)?;
            let arch = Architecture::standard(model.head());
            println!("model: {model} (output channels {})", model.head());
            print!("{}", arch.describe());
            println!("parameters: {}", Model::<f32>::new(model, cfg.seed).net.param_count());
            for t in sizes {
                match shape_fn(t) {
                    Ok(s) => println!("input {t}×{t} -> output map {s}×{s}"),
                    Err(e) => println!("input {t}×{t} -> {e}"),
                }
            }
            println!("\n# effective config");
            print!("{}", cfg.render());
            Ok(())
        }
    }
}

fn train<T: Real>(ds: &Dataset, kind: ModelKind, out: &Path, cfg: &RunConfig) -> Result<()> {
    let tc = TrainConfig::from_run(cfg, kind)?;
    let (train_set, val_set, test_set) = training_sets(ds, kind, cfg.val_fraction, cfg.seed)?;
    create_out(out)?;
    let outcome = train_model::<T>(kind, &train_set, &val_set, Some(&test_set), &tc)?;
    let stamp = cfg.render();
    outcome.model.save(&out.join(CHECKPOINT_FILE), Some(&stamp))?;
    write(&out.join("curves.csv"), &curves_csv(&outcome.curves))?;
    write(&out.join("config.txt"), &stamp)?;
    let report = json!({
        "command": "train",
        "model": kind.to_string(),
        "optimizer": tc.optimizer.to_string(),
        "precision": cfg.precision,
        "train_patches": train_set.len(),
        "val_patches": val_set.len(),
        "test_patches": test_set.len(),
        "best_epoch": outcome.best_epoch,
        "best_val_metric": outcome.best_val_metric,
        "lr_drops": outcome.lr_drops,
        "curves": outcome.curves,
        "config": cfg.to_json(),
    });
    write_json(&out.join("report.json"), &report)?;
    let last = outcome.curves.last().expect("at least one epoch");
    println!(
        "trained {kind}: best epoch {} (val {:.4}); final train {:.4}, test {}",
        outcome.best_epoch,
        outcome.best_val_metric,
        last.train_metric,
        last.test_metric.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
    );
    Ok(())
}

fn sweep_points(units: &[latres::traineval::ClassUnits], cfg: &RunConfig) -> Result<Vec<SweepPoint>> {
    let mut points = percentile_sweep(units, SweepAxis::Image, cfg)?;
    points.extend(percentile_sweep(units, SweepAxis::Video, cfg)?);
    Ok(points)
}

fn eval<T: Real>(
    model_path: &Path,
    ds: &Dataset,
    out: &Path,
    split: Split,
    baselines: Option<&Path>,
    cfg: &RunConfig,
) -> Result<()> {
    let (model, _) = load_model::<T>(model_path)?;
    check_mode(ds, model.kind)?;
    let baseline_model = baselines.map(load_model::<T>).transpose()?.map(|(m, _)| m);
    if let Some(b) = &baseline_model {
        if b.head() != 1 {
            return Err(usage("baseline features come from the single-output (mask) model"));
        }
    }
    create_out(out)?;
    let mut report = json!({
        "command": "eval",
        "model": model.kind.to_string(),
        "split": split_name(split),
    });
    if model.kind.is_regression() {
        let units = reg_units(&model, ds, split, cfg)?;
        let a = ablation_regression(&units)?;
        println!("Mask-CNN R2 {:.4}", a.mask_cnn_r2);
        println!("CNN without mask R2 {:.4}", a.no_mask_r2);
        println!("CNN from corner-centered patches R2 {:.4}", a.corner_patches_r2);
        report["regression"] = serde_json::to_value(&a)?;
    } else {
        let units = class_units(&model, ds, split, cfg)?;
        let m = class_metrics(&units, cfg)?;
        let points = sweep_points(&units, cfg)?;
        println!("{} accuracy {:.4} over {} images", model.kind, m.accuracy, m.images);
        if let Some(v) = m.video_accuracy {
            println!("video accuracy {v:.4} over {} videos", m.videos);
        }
        write(&out.join("sweep.csv"), &sweep_csv(&points))?;
        report["classification"] = serde_json::to_value(&m)?;
        report["sweep"] = serde_json::to_value(&points)?;
    }
    if let Some(b) = &baseline_model {
        let train_f = feature_vectors(b, ds, Split::Train, cfg)?;
        let test_f = feature_vectors(b, ds, split, cfg)?;
        let s = evaluate_baselines(&train_f, &test_f, cfg)?;
        println!(
            "baselines: tree {:.4}, forest {:.4}, naive bayes {:.4}, logistic {:.4}",
            s.decision_tree, s.random_forest, s.naive_bayes, s.logistic_regression
        );
        report["baselines"] = serde_json::to_value(&s)?;
    }
    report["config"] = cfg.to_json();
    write_json(&out.join("report.json"), &report)?;
    write(&out.join("config.txt"), &cfg.render())?;
    Ok(())
}

fn predict<T: Real>(model: &Model<T>, input: &Path, cfg: &RunConfig) -> Result<()> {
    let frames: Vec<PathBuf> = if input.is_dir() {
        video_frame_paths(input, cfg.frames_per_video)?
    } else {
        vec![input.to_path_buf()]
    };
    let mut classes = Vec::new();
    let mut values = Vec::new();
    let mut min_corners = usize::MAX;
    let mut fallback = false;
    for path in &frames {
        let image = load_image(path)?.plane;
        if image.h() < 64 || image.w() < 64 {
            return Err(latres::Error::InvalidArgument(format!(
                "{}: {}×{} is smaller than 64×64",
                path.display(),
                image.h(),
                image.w()
            ))
            .into());
        }
        if model.kind.is_regression() {
            let (corners, mask_mean, _, _) = image_reg_units(model, &image, cfg)?;
            fallback |= corners == 0;
            min_corners = min_corners.min(corners);
            values.push(mask_mean);
        } else {
            let (corners, q) = image_units(model, &image, cfg)?;
            let v = image_class_or_fallback(&q, cfg.image_pct)?;
            fallback |= v.low_confidence;
            min_corners = min_corners.min(corners);
            classes.push(v.value);
        }
    }
    let low = fallback || min_corners < cfg.low_confidence_corners;
    if input.is_dir() {
        println!("frames: {}", frames.len());
    }
    if model.kind.is_regression() {
        let k = video_quality(&values, cfg.video_pct)?;
        let cls = nearest_class((k * 1080.0).round().max(0.0) as usize);
        println!("resolution: {}", class_name(cls));
        println!("factor: {k:.4}");
        println!("class: {cls}");
    } else {
        let cls = video_quality(&classes, cfg.video_pct)?;
        println!("resolution: {}", class_name(cls));
        println!("class: {cls}");
    }
    println!("corners: {min_corners}");
    println!("low_confidence: {low}");
    Ok(())
}
