use vaest::dataio::{fixed_split, generate_synthetic_dataset, DataSplit, SynthConfig, Va, VideoSequence};
use vaest::lds::{estimate_target_weights, LdsParams, SmoothingKernel, TargetWeights};
use vaest::model::{ModelConfig, ModelMode};
use vaest::phasediff::FilterBank;
use vaest::train::{fit, fit_with_weights, prepare_videos, resume, Checkpoint, PreparedVideo, TrainConfig, TrainReport};
use vaest::Error;

fn model_config(mode: ModelMode) -> ModelConfig {
    ModelConfig {
        mode,
        image_size: 16,
        backbone_channels: 2,
        spatial_feature_dim: 4,
        mlp_hidden: 6,
        phase_channels: 4,
        temporal_channels: 3,
        recurrent_hidden: 5,
        window_length: 6,
    }
}

fn raw_videos(n: usize, frames: usize, seed: u64) -> Vec<VideoSequence> {
    generate_synthetic_dataset(&SynthConfig {
        n_videos: n,
        frames_per_video: frames,
        image_size: 16,
        imbalance_exponent: 2.0,
        noise_std: 0.02,
        seed,
    })
    .unwrap()
}

fn dataset(n: usize, frames: usize, two_stream: bool) -> (Vec<PreparedVideo>, DataSplit) {
    let bank = FilterBank::new(1, 4, 16).unwrap();
    let videos = prepare_videos(raw_videos(n, frames, 5), two_stream.then_some(&bank), 0.5, None).unwrap();
    let ids: Vec<String> = videos.iter().map(|v| v.video.video_id.clone()).collect();
    let split = fixed_split(&ids, 0.3, 1).unwrap();
    (videos, split)
}

fn train_config(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_windows: 3,
        learning_rate: 0.05,
        seed: 9,
        ..Default::default()
    }
}

#[test]
fn smoke_one_epoch() {
    let (videos, split) = dataset(3, 24, true);
    let out = fit(&videos, &split, &model_config(ModelMode::TwoStream), &train_config(1), None).unwrap();
    let r = &out.report;
    assert_eq!(r.history.len(), 1);
    assert!(r.history[0].train_loss.is_finite() && r.history[0].train_loss >= 0.0);
    assert_eq!(r.n_train_videos, 2);
    assert_eq!(r.n_val_videos, 1);
    assert_eq!(r.best_epoch, 1);
    assert!((r.best_mean_ccc - (r.best_valence + r.best_arousal) / 2.0).abs() < 1e-12);
    assert!(r.best_checkpoint.is_none());
}

#[test]
fn same_seed_same_trajectory() {
    let (videos, split) = dataset(4, 30, true);
    let cfg = model_config(ModelMode::TwoStream);
    let a = fit(&videos, &split, &cfg, &train_config(2), None).unwrap();
    let b = fit(&videos, &split, &cfg, &train_config(2), None).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.best_model.params(), b.best_model.params());
    let other = TrainConfig {
        seed: 10,
        ..train_config(2)
    };
    let c = fit(&videos, &split, &cfg, &other, None).unwrap();
    assert_ne!(a.report.history, c.report.history);
}

#[test]
fn lds_disabled_equals_explicit_unit_weights() {
    let (videos, split) = dataset(4, 30, false);
    let cfg = model_config(ModelMode::SpatialOnly);
    let off = TrainConfig {
        lds_enabled: false,
        ..train_config(2)
    };
    let a = fit(&videos, &split, &cfg, &off, None).unwrap();
    let b = fit_with_weights(&videos, &split, &cfg, &train_config(2), TargetWeights::uniform(200), None).unwrap();
    for (x, y) in a.report.history.iter().zip(&b.report.history) {
        assert_eq!(x.train_loss.to_bits(), y.train_loss.to_bits());
        assert_eq!(x.val_mean_ccc.to_bits(), y.val_mean_ccc.to_bits());
    }
    assert_eq!(a.best_model.params(), b.best_model.params());
    let on = fit(&videos, &split, &cfg, &train_config(2), None).unwrap();
    assert_ne!(on.report.history[0].train_loss, a.report.history[0].train_loss);
}

#[test]
fn weights_come_from_training_labels_only() {
    let (videos, split) = dataset(5, 30, false);
    let out = fit(&videos, &split, &model_config(ModelMode::SpatialOnly), &train_config(1), None).unwrap();
    let train_labels: Vec<Va> = videos
        .iter()
        .filter(|v| split.train.contains(&v.video.video_id))
        .flat_map(|v| v.video.labels())
        .collect();
    let all_labels: Vec<Va> = videos.iter().flat_map(|v| v.video.labels()).collect();
    let params = LdsParams::default();
    assert_eq!(out.weights, estimate_target_weights(&train_labels, &params).unwrap());
    assert_ne!(out.weights, estimate_target_weights(&all_labels, &params).unwrap());
}

fn relabel(videos: &mut [PreparedVideo], f: impl Fn(usize) -> Va) {
    let mut k = 0;
    for v in videos {
        for fr in &mut v.video.frames {
            fr.label = f(k);
            k += 1;
        }
    }
}

/// With a flat training-label distribution LDS is a no-op. Flat is taken in
/// two exact senses: every label identical, and equal counts in every bin
/// under the delta kernel. (Gaussian smoothing of equal counts leaves the
/// edge bins under-dense, so that case is not flat after smoothing.)
#[test]
fn flat_labels_make_lds_a_no_op() {
    let cfg = model_config(ModelMode::SpatialOnly);
    let (mut videos, split) = dataset(3, 40, false);
    relabel(&mut videos, |_| Va::new(0.3, 0.3));
    // Validation needs label variance for a meaningful CCC, so only the
    // training videos carry the constant label.
    for v in videos.iter_mut().filter(|v| split.val.contains(&v.video.video_id)) {
        for (i, fr) in v.video.frames.iter_mut().enumerate() {
            fr.label = Va::new((i as f64 / 20.0) - 1.0, 1.0 - i as f64 / 20.0);
        }
    }
    let on = fit(&videos, &split, &cfg, &train_config(2), None).unwrap();
    assert!((on.weights.valence.weight_for(0.3).unwrap() - 1.0).abs() < 1e-6);
    assert!((on.weights.arousal.weight_for(0.3).unwrap() - 1.0).abs() < 1e-6);
    let off = fit(
        &videos,
        &split,
        &cfg,
        &TrainConfig {
            lds_enabled: false,
            ..train_config(2)
        },
        None,
    )
    .unwrap();
    for (x, y) in on.report.history.iter().zip(&off.report.history) {
        assert!((x.train_loss - y.train_loss).abs() < 1e-6);
    }

    // Balanced: 20 bins, every training frame cycles through bin centres.
    let (mut videos, split) = dataset(3, 40, false);
    relabel(&mut videos, |k| {
        let c = -1.0 + 0.1 * (k % 20) as f64 + 0.05;
        Va::new(c, -c)
    });
    let lds = LdsParams {
        n_bins: 20,
        kernel: SmoothingKernel::delta(),
        clip_max: 50.0,
    };
    let on_cfg = TrainConfig { lds, ..train_config(2) };
    let on = fit(&videos, &split, &cfg, &on_cfg, None).unwrap();
    for w in on.weights.valence.weights.iter().chain(&on.weights.arousal.weights) {
        assert!((w - 1.0).abs() < 1e-6, "weight {w}");
    }
    let off = fit(
        &videos,
        &split,
        &cfg,
        &TrainConfig {
            lds_enabled: false,
            ..on_cfg
        },
        None,
    )
    .unwrap();
    for (x, y) in on.report.history.iter().zip(&off.report.history) {
        assert!((x.train_loss - y.train_loss).abs() < 1e-6);
    }
}

#[test]
fn resume_is_exact() {
    let (videos, split) = dataset(4, 30, true);
    let cfg = model_config(ModelMode::TwoStream);
    let dir = tempfile::tempdir().unwrap();
    let full = fit(&videos, &split, &cfg, &train_config(3), None).unwrap();
    let partial = fit(&videos, &split, &cfg, &train_config(3).clone_with_epochs(2), Some(dir.path())).unwrap();
    assert_eq!(partial.report.history[..], full.report.history[..2]);
    let saved = Checkpoint::load(&dir.path().join("fold0/last.ckpt.json")).unwrap();
    assert_eq!(saved, partial.last);
    let resumed = resume(&videos, &split, saved, 3, None).unwrap();
    assert_eq!(resumed.report.history, full.report.history);
    assert_eq!(resumed.last.tensors, full.last.tensors);
    assert_eq!(resumed.last.momentum, full.last.momentum);
    assert_eq!(resumed.best_model.params(), full.best_model.params());
    assert!(dir.path().join("fold0/best.ckpt.json").exists());
    assert_eq!(partial.report.best_checkpoint.as_deref(), Some("fold0/best.ckpt.json"));
}

trait WithEpochs {
    fn clone_with_epochs(&self, epochs: usize) -> Self;
}

impl WithEpochs for TrainConfig {
    fn clone_with_epochs(&self, epochs: usize) -> Self {
        TrainConfig { epochs, ..self.clone() }
    }
}

#[test]
fn divergence_is_reported() {
    let (videos, split) = dataset(3, 24, false);
    let cfg = TrainConfig {
        learning_rate: 1e300,
        grad_clip: 0.0,
        momentum: 0.0,
        ..train_config(3)
    };
    let err = fit(&videos, &split, &model_config(ModelMode::SpatialOnly), &cfg, None).unwrap_err();
    assert!(matches!(err, Error::Divergence { fold: 0, .. }), "{err}");
}

#[test]
fn report_text_has_one_row_per_epoch() {
    let (videos, split) = dataset(3, 24, false);
    let out = fit(&videos, &split, &model_config(ModelMode::SpatialOnly), &train_config(2), None).unwrap();
    let report = TrainReport {
        seed: 9,
        config_echo: "epochs = 2\n".into(),
        folds: vec![out.report.clone()],
    };
    let text = report.to_text();
    let rows: Vec<&str> = text.lines().filter(|l| l.starts_with("0,")).collect();
    assert_eq!(rows.len(), 3, "{text}");
    assert!(text.contains("epochs = 2"));
    assert_eq!(text, report.to_text());
}

#[test]
fn phase_cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let bank = FilterBank::new(1, 4, 16).unwrap();
    let fresh = prepare_videos(raw_videos(2, 8, 1), Some(&bank), 0.5, Some(dir.path())).unwrap();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
    let cached = prepare_videos(raw_videos(2, 8, 1), Some(&bank), 0.5, Some(dir.path())).unwrap();
    for (a, b) in fresh.iter().zip(&cached) {
        assert_eq!(a.stacks, b.stacks);
    }
}
