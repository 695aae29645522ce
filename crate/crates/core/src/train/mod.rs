//! Training with the density-reweighted loss, held-out model selection, and
//! full-coverage inference.

mod checkpoint;
mod loss;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::{DataSplit, Va, VideoSequence};
use crate::error::{Error, Result};
use crate::eval::{ccc, ccc_grad_x, mean_ccc, score, EvalReport, Pooling, ScoredVideo};
use crate::image::Image;
use crate::lds::{estimate_target_weights, LdsParams, TargetWeights};
use crate::model::{ModelConfig, ModelMode, TwoStreamModel};
use crate::phasediff::{cache_file_name, image_phase_diffs, read_stack_cache, write_stack_cache, FilterBank, PhaseDiffStack};

pub use checkpoint::{BestState, Checkpoint, RngState, CHECKPOINT_FORMAT};
pub use loss::{ccc_loss, ccc_loss_grad, weighted_loss, weighted_loss_grad};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    WeightedMse,
    /// Weighted MSE plus `1 - CCC` averaged over the two targets.
    WeightedMsePlusCcc,
}

impl LossKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossKind::WeightedMse => "weighted_mse",
            LossKind::WeightedMsePlusCcc => "weighted_mse_plus_ccc",
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weighted_mse" => Ok(LossKind::WeightedMse),
            "weighted_mse_plus_ccc" => Ok(LossKind::WeightedMsePlusCcc),
            _ => Err(Error::Config(format!("unknown loss kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Windows per SGD step.
    pub batch_windows: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Global gradient-norm clip; 0 disables clipping.
    pub grad_clip: f64,
    pub loss_kind: LossKind,
    pub lds_enabled: bool,
    pub lds: LdsParams,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_windows: 4,
            learning_rate: 0.01,
            momentum: 0.9,
            grad_clip: 5.0,
            loss_kind: LossKind::WeightedMse,
            lds_enabled: true,
            lds: LdsParams::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_windows == 0 {
            return Err(Error::Config("batch_windows must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if !(self.grad_clip >= 0.0 && self.grad_clip.is_finite()) {
            return Err(Error::Config(format!("grad_clip must be >= 0, got {}", self.grad_clip)));
        }
        if self.lds.clip_max < 1.0 {
            return Err(Error::Config(format!("lds clip_max must be >= 1, got {}", self.lds.clip_max)));
        }
        Ok(())
    }
}

/// A video with its precomputed phase-difference stacks (`None` for models
/// without a temporal stream). `stacks[t]` compares frame `t` with `t + 1`.
#[derive(Debug, Clone)]
pub struct PreparedVideo {
    pub video: VideoSequence,
    pub stacks: Option<Vec<PhaseDiffStack>>,
}

impl PreparedVideo {
    /// Phase-difference input of frame `i`: the stack ending at `i`.
    fn stack_for(&self, i: usize) -> Option<&PhaseDiffStack> {
        match (&self.stacks, i) {
            (Some(s), i) if i > 0 => s.get(i - 1),
            _ => None,
        }
    }
}

/// Attaches phase-difference stacks to each video, reading and writing
/// `cache_dir` when given. A cache file whose stack count does not match the
/// video is recomputed.
pub fn prepare_videos(
    videos: Vec<VideoSequence>,
    bank: Option<&FilterBank>,
    amplitude_quantile: f64,
    cache_dir: Option<&Path>,
) -> Result<Vec<PreparedVideo>> {
    let Some(bank) = bank else {
        return Ok(videos.into_iter().map(|video| PreparedVideo { video, stacks: None }).collect());
    };
    if let Some(dir) = cache_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    videos
        .into_iter()
        .map(|video| {
            let expected = video.len().saturating_sub(1);
            let cache_path = cache_dir.map(|d| d.join(cache_file_name(&video.video_id, bank, amplitude_quantile)));
            if let Some(p) = cache_path.as_ref().filter(|p| p.exists()) {
                let stacks = read_stack_cache(p)?;
                if stacks.len() == expected {
                    return Ok(PreparedVideo {
                        video,
                        stacks: Some(stacks),
                    });
                }
            }
            let stacks = if expected == 0 {
                Vec::new()
            } else {
                let images: Vec<&Image> = video.images().collect();
                image_phase_diffs(&images, bank, amplitude_quantile)?
            };
            if let Some(p) = &cache_path {
                write_stack_cache(p, &stacks)?;
            }
            Ok(PreparedVideo {
                video,
                stacks: Some(stacks),
            })
        })
        .collect()
}

/// One training window with its targets and per-frame loss weights.
#[derive(Debug, Clone)]
pub struct TrainWindow<'a> {
    pub frames: Vec<&'a Image>,
    pub stacks: Vec<Option<&'a PhaseDiffStack>>,
    pub targets: Vec<Va>,
    pub v_weights: Vec<f64>,
    pub a_weights: Vec<f64>,
    pub mask: Vec<bool>,
}

impl<'a> TrainWindow<'a> {
    /// Frames `start..start + len` of `video`, weighted by `weights`.
    pub fn from_video(video: &'a PreparedVideo, start: usize, len: usize, weights: &TargetWeights) -> Result<Self> {
        let frames = &video.video.frames[start..start + len];
        let mut w = TrainWindow {
            frames: frames.iter().map(|f| f.image.as_ref()).collect(),
            stacks: (start..start + len).map(|i| video.stack_for(i)).collect(),
            targets: Vec::with_capacity(len),
            v_weights: Vec::with_capacity(len),
            a_weights: Vec::with_capacity(len),
            mask: Vec::with_capacity(len),
        };
        for f in frames {
            let (wv, wa) = if f.is_annotated() {
                weights.weights_for(f.label)?
            } else {
                (1.0, 1.0)
            };
            w.targets.push(f.label);
            w.v_weights.push(wv);
            w.a_weights.push(wa);
            w.mask.push(f.is_annotated());
        }
        Ok(w)
    }
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Gradient of the batch-wide `mean over targets of (1 - CCC)` term with
/// respect to each prediction, plus its value. A target whose unmasked
/// labels are constant in the batch contributes nothing.
fn ccc_term(preds: &[Va], targets: &[Va], mask: &[bool]) -> Result<(f64, Vec<(f64, f64)>)> {
    let idx: Vec<usize> = (0..preds.len()).filter(|&i| mask[i]).collect();
    let mut grad = vec![(0.0, 0.0); preds.len()];
    let mut value = 0.0;
    if idx.len() < 2 {
        return Ok((value, grad));
    }
    for comp in 0..2 {
        let pick = |v: &Va| if comp == 0 { v.valence } else { v.arousal };
        let p: Vec<f64> = idx.iter().map(|&i| pick(&preds[i])).collect();
        let t: Vec<f64> = idx.iter().map(|&i| pick(&targets[i])).collect();
        if t.iter().all(|&x| x == t[0]) {
            continue;
        }
        value += (1.0 - ccc(&p, &t)?) / 2.0;
        for (&i, g) in idx.iter().zip(ccc_grad_x(&p, &t)?) {
            if comp == 0 {
                grad[i].0 -= g / 2.0;
            } else {
                grad[i].1 -= g / 2.0;
            }
        }
    }
    Ok((value, grad))
}

/// Training objective of a batch and its gradient with respect to the flat
/// parameter vector. The loss is taken over the concatenation of the
/// batch's frames.
pub fn loss_and_grad(model: &TwoStreamModel, batch: &[TrainWindow], kind: LossKind) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    let tapes = par_map(batch, |w| model.forward_window(&w.frames, &w.stacks))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let cat = |f: &dyn Fn(&TrainWindow) -> Vec<f64>| batch.iter().flat_map(f).collect::<Vec<f64>>();
    let preds: Vec<Va> = tapes.iter().flat_map(|t| t.predictions()).collect();
    let targets: Vec<Va> = batch.iter().flat_map(|w| w.targets.iter().copied()).collect();
    let mask: Vec<bool> = batch.iter().flat_map(|w| w.mask.iter().copied()).collect();
    let (mut loss, mut d_preds) = weighted_loss_grad(
        &preds,
        &targets,
        &cat(&|w| w.v_weights.clone()),
        &cat(&|w| w.a_weights.clone()),
        &mask,
    )?;
    if kind == LossKind::WeightedMsePlusCcc {
        let (value, g) = ccc_term(&preds, &targets, &mask)?;
        loss += value;
        for (d, e) in d_preds.iter_mut().zip(g) {
            d.0 += e.0;
            d.1 += e.1;
        }
    }
    let mut offsets = Vec::with_capacity(batch.len());
    let mut at = 0;
    for w in batch {
        offsets.push(at);
        at += w.frames.len();
    }
    let jobs: Vec<usize> = (0..batch.len()).collect();
    let grads = par_map(&jobs, |&k| {
        let mut g = vec![0.0; model.num_parameters()];
        let d = &d_preds[offsets[k]..offsets[k] + batch[k].frames.len()];
        model.backward_window(&tapes[k], d, &mut g);
        g
    });
    let mut total = vec![0.0; model.num_parameters()];
    for g in &grads {
        for (t, v) in total.iter_mut().zip(g) {
            *t += v;
        }
    }
    Ok((loss, total))
}

/// Objective value only.
pub fn batch_loss(model: &TwoStreamModel, batch: &[TrainWindow], kind: LossKind) -> Result<f64> {
    let preds: Vec<Va> = par_map(batch, |w| model.predict_window(&w.frames, &w.stacks))
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .concat();
    let targets: Vec<Va> = batch.iter().flat_map(|w| w.targets.iter().copied()).collect();
    let mask: Vec<bool> = batch.iter().flat_map(|w| w.mask.iter().copied()).collect();
    let vw: Vec<f64> = batch.iter().flat_map(|w| w.v_weights.iter().copied()).collect();
    let aw: Vec<f64> = batch.iter().flat_map(|w| w.a_weights.iter().copied()).collect();
    let mut loss = weighted_loss(&preds, &targets, &vw, &aw, &mask)?;
    if kind == LossKind::WeightedMsePlusCcc {
        loss += ccc_term(&preds, &targets, &mask)?.0;
    }
    Ok(loss)
}

/// Non-overlapping training windows `(start, len)` with stride `w`; the
/// last one may be shorter.
pub fn training_windows(n_frames: usize, w: usize) -> Vec<(usize, usize)> {
    (0..n_frames).step_by(w.max(1)).map(|s| (s, w.min(n_frames - s))).collect()
}

/// Full-coverage inference windows: stride `w`, with the last window
/// aligned to the end of the video so every window has length `min(w, n)`.
pub fn inference_windows(n_frames: usize, w: usize) -> Vec<(usize, usize)> {
    if n_frames <= w {
        return vec![(0, n_frames)];
    }
    let mut out: Vec<(usize, usize)> = (0..=n_frames - w).step_by(w).map(|s| (s, w)).collect();
    if out.last().is_some_and(|&(s, _)| s + w < n_frames) {
        out.push((n_frames - w, w));
    }
    out
}

/// Per-frame predictions for a whole video. Frames covered by two windows
/// keep the prediction of the earlier window.
pub fn predict_video(model: &TwoStreamModel, video: &PreparedVideo) -> Result<Vec<Va>> {
    let n = video.video.len();
    if n == 0 {
        return Err(Error::EmptySequence(video.video.video_id.clone()));
    }
    if model.config().mode == ModelMode::TwoStream && video.stacks.is_none() {
        return Err(Error::Shape(format!(
            "video {}: two_stream model needs phase-difference stacks",
            video.video.video_id
        )));
    }
    let mut out: Vec<Option<Va>> = vec![None; n];
    for (start, len) in inference_windows(n, model.config().window_length) {
        let frames: Vec<&Image> = video.video.frames[start..start + len].iter().map(|f| f.image.as_ref()).collect();
        let stacks: Vec<Option<&PhaseDiffStack>> = (start..start + len).map(|i| video.stack_for(i)).collect();
        for (i, p) in model.predict_window(&frames, &stacks)?.into_iter().enumerate() {
            out[start + i].get_or_insert(p);
        }
    }
    Ok(out.into_iter().map(|p| p.expect("inference windows cover every frame")).collect())
}

/// Predicts every video and scores the predictions.
pub fn evaluate(model: &TwoStreamModel, videos: &[PreparedVideo], pooling: Pooling) -> Result<(EvalReport, Vec<Vec<Va>>)> {
    let preds = par_map(videos, |v| predict_video(model, v))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let scored: Vec<ScoredVideo> = videos
        .iter()
        .zip(&preds)
        .map(|(v, p)| ScoredVideo {
            video_id: v.video.video_id.clone(),
            predictions: p.clone(),
            labels: v.video.labels().collect(),
        })
        .collect();
    Ok((score(&scored, pooling)?, preds))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Frame-weighted mean of the batch objectives over the epoch.
    pub train_loss: f64,
    pub val_valence: f64,
    pub val_arousal: f64,
    pub val_mean_ccc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub init_seed: u64,
    pub shuffle_seed: u64,
    pub lds_enabled: bool,
    pub n_train_videos: usize,
    pub n_val_videos: usize,
    pub n_train_windows: usize,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_valence: f64,
    pub best_arousal: f64,
    pub best_mean_ccc: f64,
    /// Best checkpoint path relative to the output directory.
    pub best_checkpoint: Option<String>,
}

/// Result of one `fit` call.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub report: FoldReport,
    /// Parameters from the epoch with the best held-out mean CCC.
    pub best_model: TwoStreamModel,
    /// Weights the loss used, estimated from the training videos only.
    pub weights: TargetWeights,
    /// State after the last epoch; pass to [`resume`] to continue.
    pub last: Checkpoint,
}

/// Seed of an independent stream for `(seed, fold, purpose)`.
pub fn derive_seed(seed: u64, fold: usize, purpose: u64) -> u64 {
    let mut z = seed
        .wrapping_add((fold as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(purpose.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn select<'a>(videos: &'a [PreparedVideo], ids: &[String]) -> Result<Vec<&'a PreparedVideo>> {
    let by_id: BTreeMap<&str, &PreparedVideo> = videos.iter().map(|v| (v.video.video_id.as_str(), v)).collect();
    ids.iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::Validation(format!("split names unknown video {id:?}")))
        })
        .collect()
}

/// Loss weights for a training split: LDS tables from the training labels,
/// or all ones when LDS is disabled.
pub fn split_weights(videos: &[PreparedVideo], split: &DataSplit, config: &TrainConfig) -> Result<TargetWeights> {
    if !config.lds_enabled {
        return Ok(TargetWeights::uniform(config.lds.n_bins));
    }
    let labels: Vec<Va> = select(videos, &split.train)?
        .iter()
        .flat_map(|v| v.video.labels())
        .collect();
    estimate_target_weights(&labels, &config.lds)
}

/// Trains one fold. Checkpoints go to `out_dir/fold{k}/` when `out_dir` is
/// given.
pub fn fit(
    videos: &[PreparedVideo],
    split: &DataSplit,
    model_config: &ModelConfig,
    config: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<FitOutcome> {
    config.validate()?;
    let weights = split_weights(videos, split, config)?;
    fit_with_weights(videos, split, model_config, config, weights, out_dir)
}

/// [`fit`] with caller-supplied loss weights.
pub fn fit_with_weights(
    videos: &[PreparedVideo],
    split: &DataSplit,
    model_config: &ModelConfig,
    config: &TrainConfig,
    weights: TargetWeights,
    out_dir: Option<&Path>,
) -> Result<FitOutcome> {
    config.validate()?;
    let init_seed = derive_seed(config.seed, split.fold, 0);
    let shuffle_seed = derive_seed(config.seed, split.fold, 1);
    let model = TwoStreamModel::new(model_config.clone(), init_seed)?;
    let state = Checkpoint {
        format: CHECKPOINT_FORMAT.to_string(),
        model_config: model_config.clone(),
        train_config: config.clone(),
        fold: split.fold,
        init_seed,
        shuffle_seed,
        epochs_completed: 0,
        tensors: model.named_tensors(),
        momentum: vec![0.0; model.num_parameters()],
        rng: RngState::capture(&ChaCha8Rng::seed_from_u64(shuffle_seed)),
        history: Vec::new(),
        best: None,
    };
    run(videos, split, state, weights, config.epochs, out_dir)
}

/// Continues training from `state` until `epochs` epochs have completed.
/// Produces the same parameters and history as an uninterrupted run.
pub fn resume(
    videos: &[PreparedVideo],
    split: &DataSplit,
    state: Checkpoint,
    epochs: usize,
    out_dir: Option<&Path>,
) -> Result<FitOutcome> {
    if state.fold != split.fold {
        return Err(Error::Validation(format!(
            "checkpoint is for fold {}, split is fold {}",
            state.fold, split.fold
        )));
    }
    state.train_config.validate()?;
    let weights = split_weights(videos, split, &state.train_config)?;
    run(videos, split, state, weights, epochs, out_dir)
}

fn run(
    videos: &[PreparedVideo],
    split: &DataSplit,
    mut state: Checkpoint,
    weights: TargetWeights,
    epochs: usize,
    out_dir: Option<&Path>,
) -> Result<FitOutcome> {
    let config = state.train_config.clone();
    let train = select(videos, &split.train)?;
    let val: Vec<PreparedVideo> = select(videos, &split.val)?.into_iter().cloned().collect();
    if train.is_empty() {
        return Err(Error::Config(format!("fold {}: empty training split", split.fold)));
    }
    if val.is_empty() {
        return Err(Error::Config(format!("fold {}: empty validation split", split.fold)));
    }
    let mut model = state.model()?;
    let wl = model.config().window_length;

    let mut windows: Vec<(usize, usize, usize)> = Vec::new();
    for (vi, v) in train.iter().enumerate() {
        for (s, l) in training_windows(v.video.len(), wl) {
            if v.video.frames[s..s + l].iter().any(|f| f.is_annotated()) {
                windows.push((vi, s, l));
            }
        }
    }
    if windows.is_empty() {
        return Err(Error::Config(format!("fold {}: no annotated training frames", split.fold)));
    }

    let fold_dir: Option<PathBuf> = out_dir.map(|d| d.join(format!("fold{}", split.fold)));
    if let Some(d) = &fold_dir {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let mut rng = state.rng.restore()?;
    let mut velocity = std::mem::take(&mut state.momentum);

    for epoch in state.epochs_completed..epochs {
        let mut order = windows.clone();
        order.shuffle(&mut rng);
        let (mut loss_sum, mut frame_sum) = (0.0, 0usize);
        for (step, chunk) in order.chunks(config.batch_windows).enumerate() {
            let batch = chunk
                .iter()
                .map(|&(vi, s, l)| TrainWindow::from_video(train[vi], s, l, &weights))
                .collect::<Result<Vec<_>>>()?;
            let (loss, mut grad) = loss_and_grad(&model, &batch, config.loss_kind)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence {
                    fold: split.fold,
                    epoch: epoch + 1,
                    step,
                    loss,
                });
            }
            if config.grad_clip > 0.0 {
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > config.grad_clip {
                    let s = config.grad_clip / norm;
                    grad.iter_mut().for_each(|g| *g *= s);
                }
            }
            for ((p, v), g) in model.params_mut().iter_mut().zip(&mut velocity).zip(&grad) {
                *v = config.momentum * *v + g;
                *p -= config.learning_rate * *v;
            }
            let n: usize = batch.iter().map(|w| w.mask.iter().filter(|&&m| m).count()).sum();
            loss_sum += loss * n as f64;
            frame_sum += n;
        }

        let (report, _) = evaluate(&model, &val, Pooling::Pooled)?;
        let (cv, ca) = report.pooled;
        let record = EpochRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / frame_sum as f64,
            val_valence: cv,
            val_arousal: ca,
            val_mean_ccc: mean_ccc(cv, ca),
        };
        let improved = state.best.as_ref().is_none_or(|b| record.val_mean_ccc > b.mean_ccc);
        if improved {
            state.best = Some(BestState {
                epoch: record.epoch,
                valence: cv,
                arousal: ca,
                mean_ccc: record.val_mean_ccc,
                tensors: model.named_tensors(),
            });
        }
        state.history.push(record);
        state.epochs_completed = epoch + 1;
        state.tensors = model.named_tensors();
        state.momentum = velocity.clone();
        state.rng = RngState::capture(&rng);
        if let Some(d) = &fold_dir {
            state.save(&d.join("last.ckpt.json"))?;
            if improved {
                state.save(&d.join("best.ckpt.json"))?;
            }
        }
    }
    state.momentum = velocity;

    let best = state
        .best
        .clone()
        .ok_or_else(|| Error::Config("no epoch was run".into()))?;
    let best_model = state.best_model()?.expect("best state exists");
    let report = FoldReport {
        fold: split.fold,
        init_seed: state.init_seed,
        shuffle_seed: state.shuffle_seed,
        lds_enabled: config.lds_enabled,
        n_train_videos: train.len(),
        n_val_videos: val.len(),
        n_train_windows: windows.len(),
        history: state.history.clone(),
        best_epoch: best.epoch,
        best_valence: best.valence,
        best_arousal: best.arousal,
        best_mean_ccc: best.mean_ccc,
        best_checkpoint: fold_dir.map(|_| format!("fold{}/best.ckpt.json", split.fold)),
    };
    Ok(FitOutcome {
        report,
        best_model,
        weights,
        last: state,
    })
}

/// All folds of a training run plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    /// Verbatim configuration text, reproduced at the top of the report.
    pub config_echo: String,
    pub folds: Vec<FoldReport>,
}

impl TrainReport {
    /// Mean over folds of the best held-out mean CCC.
    pub fn mean_best_ccc(&self) -> f64 {
        self.folds.iter().map(|f| f.best_mean_ccc).sum::<f64>() / self.folds.len().max(1) as f64
    }

    /// Fixed-layout text: config echo, one row per (fold, epoch), one row
    /// per fold.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# train report");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "\n[config]");
        s.push_str(self.config_echo.trim_end());
        let _ = writeln!(s, "\n\n[epochs]");
        let _ = writeln!(s, "fold,epoch,train_loss,val_ccc_valence,val_ccc_arousal,val_mean_ccc");
        for f in &self.folds {
            for r in &f.history {
                let _ = writeln!(
                    s,
                    "{},{},{:.10},{:.10},{:.10},{:.10}",
                    f.fold, r.epoch, r.train_loss, r.val_valence, r.val_arousal, r.val_mean_ccc
                );
            }
        }
        let _ = writeln!(s, "\n[folds]");
        let _ = writeln!(
            s,
            "fold,lds,train_videos,val_videos,train_windows,best_epoch,val_ccc_valence,val_ccc_arousal,val_mean_ccc,init_seed,shuffle_seed,checkpoint"
        );
        for f in &self.folds {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{:.10},{:.10},{:.10},{},{},{}",
                f.fold,
                f.lds_enabled,
                f.n_train_videos,
                f.n_val_videos,
                f.n_train_windows,
                f.best_epoch,
                f.best_valence,
                f.best_arousal,
                f.best_mean_ccc,
                f.init_seed,
                f.shuffle_seed,
                f.best_checkpoint.as_deref().unwrap_or("-")
            );
        }
        let _ = writeln!(s, "\n[summary]");
        let _ = writeln!(s, "folds = {}", self.folds.len());
        let _ = writeln!(s, "mean_best_val_ccc = {:.10}", self.mean_best_ccc());
        s
    }
}
