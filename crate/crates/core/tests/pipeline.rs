//! Small end-to-end runs: seeded synthesis is reproducible and both heads can
//! fit a handful of patches.

use std::fs;

use latres::config::RunConfig;
use latres::models::{Model, ModelKind};
use latres::numkernel::OptimizerKind;
use latres::synth::{synthesize, write_procedural_corpus, Dataset, PatchRecord, Split, SynthMode, MANIFEST_FILE};
use latres::traineval::{train_model, TrainConfig};

fn small_config() -> RunConfig {
    RunConfig::parse("patches_per_image = 4\nframes_per_video = 2\nreg_variants = 2\n").unwrap()
}

#[test]
fn synthesis_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    write_procedural_corpus(&corpus, 3, 1, 3, (1080, 800), 9).unwrap();
    let cfg = small_config();
    for mode in [SynthMode::Class, SynthMode::Reg] {
        let a = tmp.path().join(format!("{mode:?}_a"));
        let b = tmp.path().join(format!("{mode:?}_b"));
        let ma = synthesize(&corpus, &a, mode, &cfg).unwrap();
        let mb = synthesize(&corpus, &b, mode, &cfg).unwrap();
        assert_eq!(ma, mb);
        let per_source = if mode == SynthMode::Class { 6 } else { 2 };
        assert_eq!(ma.entries.len(), (3 + 2) * per_source);
        let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for name in names {
            assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
        }
        let ds = Dataset::open(&a).unwrap();
        assert!(fs::read_to_string(a.join(MANIFEST_FILE)).unwrap().lines().count() == ma.entries.len());
        assert!(!ds.patches(Split::Train).unwrap().is_empty());
    }
}

fn fit(kind: ModelKind, records: &[PatchRecord]) -> f64 {
    let mut cfg = TrainConfig::from_run(&RunConfig::default(), kind).unwrap();
    cfg.epochs = 200;
    cfg.batch0 = records.len();
    cfg.batch_double_every = 1000;
    cfg.lr0 = 1e-3;
    cfg.optimizer = OptimizerKind::Adam;
    cfg.weight_decay = 0.0;
    let out = train_model::<f32>(kind, records, records, None, &cfg).unwrap();
    out.curves.last().unwrap().train_loss
}

fn toy_patches(kind: ModelKind) -> Vec<PatchRecord> {
    let image = latres::synth::procedural_image(64, 640, 4).unwrap();
    (0..10)
        .map(|i| PatchRecord {
            pixels: image.crop(0, 64 * i, 64, 64).unwrap(),
            label: if kind.is_regression() { 0.1 + 0.09 * i as f32 } else { (i % 6 + 1) as f32 },
            entry: i as u32,
            row: 32,
            col: 64 * i as u32 + 32,
        })
        .collect()
}

#[test]
fn overfits_ten_patches() {
    for kind in [ModelKind::Softmax, ModelKind::Mask] {
        let loss = fit(kind, &toy_patches(kind));
        assert!(loss < 0.01, "{kind}: final loss {loss}");
    }
}

#[test]
fn untrained_models_are_seeded() {
    let a: Model<f32> = Model::new(ModelKind::MaskSoftmax, 3);
    let b: Model<f32> = Model::new(ModelKind::MaskSoftmax, 3);
    let p = toy_patches(ModelKind::MaskSoftmax)[0].pixels.clone();
    assert_eq!(a.forward_patch(&p).unwrap(), b.forward_patch(&p).unwrap());
}
