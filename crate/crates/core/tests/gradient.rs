use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vaest::dataio::{generate_synthetic_dataset, SynthConfig, Va};
use vaest::model::{ModelConfig, ModelMode, TwoStreamModel};
use vaest::phasediff::FilterBank;
use vaest::train::{batch_loss, loss_and_grad, prepare_videos, LossKind, TrainWindow};

fn tiny_config(mode: ModelMode) -> ModelConfig {
    ModelConfig {
        mode,
        image_size: 16,
        backbone_channels: 3,
        spatial_feature_dim: 5,
        mlp_hidden: 6,
        phase_channels: 4,
        temporal_channels: 3,
        recurrent_hidden: 5,
        window_length: 4,
    }
}

/// Central differences at `h = 1e-6` carry round-off near 1e-10, so relative
/// error is only meaningful for gradients well above that. Smaller
/// magnitudes are measured against this floor instead. A larger `h` would
/// shrink round-off but crosses ReLU kinks in the first convolution.
const GRAD_FLOOR: f64 = 1e-5;

/// Largest relative error over a sample of parameters, with relative error
/// `|a - n| / max(|a|, |n|, floor)`.
fn max_relative_error(mode: ModelMode, kind: LossKind, seed: u64) -> f64 {
    let synth = SynthConfig {
        n_videos: 2,
        frames_per_video: 9,
        image_size: 16,
        imbalance_exponent: 1.0,
        noise_std: 0.05,
        seed,
    };
    let bank = FilterBank::new(1, 4, 16).unwrap();
    let videos = prepare_videos(generate_synthetic_dataset(&synth).unwrap(), Some(&bank), 0.5, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch: Vec<TrainWindow> = videos
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut w = TrainWindow::from_video(v, i * 2 + 1, 4, &vaest::lds::TargetWeights::uniform(10)).unwrap();
            for k in 0..4 {
                w.v_weights[k] = rng.random_range(0.5..3.0);
                w.a_weights[k] = rng.random_range(0.5..3.0);
            }
            w.mask[1] = false;
            w.targets[1] = Va::UNANNOTATED;
            w
        })
        .collect();

    let mut model = TwoStreamModel::new(tiny_config(mode), seed).unwrap();
    assert!(model.num_parameters() < 10_000);
    let (_, grad) = loss_and_grad(&model, &batch, kind).unwrap();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..150 {
        let i = rng.random_range(0..model.num_parameters());
        let orig = model.params()[i];
        model.params_mut()[i] = orig + h;
        let up = batch_loss(&model, &batch, kind).unwrap();
        model.params_mut()[i] = orig - h;
        let down = batch_loss(&model, &batch, kind).unwrap();
        model.params_mut()[i] = orig;
        let fd = (up - down) / (2.0 * h);
        let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(GRAD_FLOOR);
        worst = worst.max(rel);
    }
    worst
}

#[test]
fn two_stream_weighted_mse_gradient() {
    for seed in [1, 2] {
        let e = max_relative_error(ModelMode::TwoStream, LossKind::WeightedMse, seed);
        assert!(e < 1e-4, "seed {seed}: max relative error {e}");
    }
}

#[test]
fn spatial_only_weighted_mse_gradient() {
    let e = max_relative_error(ModelMode::SpatialOnly, LossKind::WeightedMse, 3);
    assert!(e < 1e-4, "max relative error {e}");
}

#[test]
fn ccc_term_gradient() {
    let e = max_relative_error(ModelMode::TwoStream, LossKind::WeightedMsePlusCcc, 4);
    assert!(e < 1e-4, "max relative error {e}");
}
