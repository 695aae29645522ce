//! Subcommand implementations. Each writes `config.echo.toml` next to its
//! outputs and prints a short summary to stdout.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use vaest::dataio::{
    fixed_split, format_annotation_file, generate_synthetic_dataset, make_folds, parse_annotation_file, read_dataset,
    write_dataset, DataSplit, Va, VideoSequence, INDEX_FILE,
};
use vaest::eval::{impute_missing, score, EvalReport, ScoredVideo};
use vaest::lds::{empirical_density, estimate_target, LdsParams, TargetLds};
use vaest::model::ModelMode;
use vaest::phasediff::FilterBank;
use vaest::train::{derive_seed, fit, predict_video, prepare_videos, Checkpoint, PreparedVideo, TrainReport};

use crate::config::{CvMode, RunConfig};
use crate::plot;
use crate::Failure;

pub const ECHO_FILE: &str = "config.echo.toml";

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::runtime(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| io_failure(path, e))
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(|e| io_failure(path, e))
}

fn is_non_empty_dir(path: &Path) -> bool {
    fs::read_dir(path).map(|mut d| d.next().is_some()).unwrap_or(false)
}

/// Creates `dir` for outputs, refusing to reuse a non-empty one unless
/// `force` is set, and writes the config echo into it.
fn output_dir(dir: &Path, cfg: &RunConfig, force: bool) -> Result<(), Failure> {
    if is_non_empty_dir(dir) && !force {
        return Err(Failure::user(format!(
            "{} exists and is not empty; pass --force to overwrite",
            dir.display()
        )));
    }
    create_dir(dir)?;
    write_file(&dir.join(ECHO_FILE), cfg.to_toml())
}

fn load_dataset(cfg: &RunConfig) -> Result<Vec<VideoSequence>, Failure> {
    let root = &cfg.dataset_root;
    if !root.join(INDEX_FILE).is_file() {
        return Err(Failure::user(format!(
            "no dataset at {} (missing {INDEX_FILE}); run `vaest synth` or pass --data",
            root.display()
        )));
    }
    let videos = read_dataset(root)?;
    if videos.is_empty() {
        return Err(Failure::user(format!("dataset at {} has no videos", root.display())));
    }
    Ok(videos)
}

fn all_labels(videos: &[VideoSequence]) -> Vec<Va> {
    videos.iter().flat_map(|v| v.labels()).filter(|l| !l.is_sentinel()).collect()
}

/// Ten-bin text histogram of one target.
pub fn text_histogram(name: &str, values: &[f64]) -> Result<String, Failure> {
    let hist = empirical_density(values, 10)?;
    let top = hist.counts.iter().copied().max().unwrap_or(1).max(1);
    let edges = hist.bin_edges();
    let mut s = format!("{name} ({} frames)\n", values.len());
    for (b, &c) in hist.counts.iter().enumerate() {
        let bar = "#".repeat((40 * c / top) as usize);
        let _ = writeln!(s, "  [{:+.1}, {:+.1}) {c:>8} {bar}", edges[b], edges[b + 1]);
    }
    Ok(s)
}

pub fn synth(cfg: &RunConfig, force: bool) -> Result<(), Failure> {
    let root = &cfg.dataset_root;
    if is_non_empty_dir(root) && !force {
        return Err(Failure::user(format!(
            "{} exists and is not empty; pass --force to overwrite",
            root.display()
        )));
    }
    let videos = generate_synthetic_dataset(&cfg.synth())?;
    write_dataset(root, &videos)?;
    write_file(&root.join(ECHO_FILE), cfg.to_toml())?;
    let labels = all_labels(&videos);
    println!("wrote {} videos to {}", videos.len(), root.display());
    print!("{}", text_histogram("valence", &labels.iter().map(|l| l.valence).collect::<Vec<_>>())?);
    print!("{}", text_histogram("arousal", &labels.iter().map(|l| l.arousal).collect::<Vec<_>>())?);
    Ok(())
}

pub fn ingest_check(cfg: &RunConfig) -> Result<(), Failure> {
    let videos = load_dataset(cfg)?;
    let (mut frames, mut annotated) = (0, 0);
    println!("video_id,frames,annotated,first_frame_index");
    for v in &videos {
        let a = v.frames.iter().filter(|f| f.is_annotated()).count();
        println!(
            "{},{},{},{}",
            v.video_id,
            v.len(),
            a,
            v.frames.first().map_or(0, |f| f.frame_index)
        );
        frames += v.len();
        annotated += a;
    }
    let labels = all_labels(&videos);
    let range = |f: fn(&Va) -> f64| {
        labels
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    };
    let (vl, vh) = range(|l| l.valence);
    let (al, ah) = range(|l| l.arousal);
    println!(
        "ok: {} videos, {frames} frames, {annotated} annotated; valence [{vl:.3}, {vh:.3}], arousal [{al:.3}, {ah:.3}]",
        videos.len()
    );
    Ok(())
}

/// Weight-table statistics for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSummary {
    pub min: f64,
    pub max: f64,
    /// Largest `|w - 1|` over bins at least one kernel half-width away from
    /// either end of the label range.
    pub interior_max_deviation: f64,
}

pub fn weight_summary(lds: &TargetLds, params: &LdsParams) -> WeightSummary {
    let w = &lds.weights.weights;
    let hw = params.kernel.half_width;
    let interior = if w.len() > 2 * hw { &w[hw..w.len() - hw] } else { &w[..] };
    WeightSummary {
        min: w.iter().copied().fold(f64::INFINITY, f64::min),
        max: w.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        interior_max_deviation: interior.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max),
    }
}

pub fn weights(cfg: &RunConfig) -> Result<(), Failure> {
    let videos = load_dataset(cfg)?;
    let dir = cfg.out_dir.join("weights");
    output_dir(&dir, cfg, true)?;
    let params = cfg.lds()?;
    let labels = all_labels(&videos);
    for (name, values) in [
        ("valence", labels.iter().map(|l| l.valence).collect::<Vec<_>>()),
        ("arousal", labels.iter().map(|l| l.arousal).collect()),
    ] {
        let lds = estimate_target(&values, &params)?;
        write_file(&dir.join(format!("{name}_weights.csv")), lds.weights.to_text())?;
        plot::density_plot(
            &lds.histogram.counts,
            &lds.density.density,
            cfg.plot_width,
            cfg.plot_height,
            &dir.join(format!("{name}_density.png")),
        )?;
        let s = weight_summary(&lds, &params);
        println!(
            "{name}: {} labels, weight min {:.4} max {:.4}, interior max |w-1| {:.4}",
            values.len(),
            s.min,
            s.max,
            s.interior_max_deviation
        );
    }
    println!("wrote weight tables and density figures to {}", dir.display());
    Ok(())
}

fn prepare(cfg: &RunConfig, videos: Vec<VideoSequence>, mode: ModelMode) -> Result<Vec<PreparedVideo>, Failure> {
    let phase = cfg.phase();
    let bank = match mode {
        ModelMode::TwoStream => Some(FilterBank::from_params(&phase, cfg.image_size)?),
        ModelMode::SpatialOnly => None,
    };
    let cache = cfg.cache_path();
    Ok(prepare_videos(
        videos,
        bank.as_ref(),
        phase.amplitude_quantile,
        Some(&cache),
    )?)
}

fn splits(cfg: &RunConfig, ids: &[String]) -> Result<Vec<DataSplit>, Failure> {
    Ok(match cfg.cv()? {
        CvMode::Fixed => vec![fixed_split(ids, cfg.val_fraction, cfg.seed)?],
        CvMode::KFold => {
            let folds = make_folds(ids, cfg.folds, cfg.seed)?;
            (0..cfg.folds).map(|k| folds.split(k)).collect::<Result<_, _>>()?
        }
    })
}

pub fn train(cfg: &RunConfig, only_fold: Option<usize>, force: bool) -> Result<TrainReport, Failure> {
    let model_cfg = cfg.model()?;
    let train_cfg = cfg.train()?;
    let videos = prepare(cfg, load_dataset(cfg)?, model_cfg.mode)?;
    let ids: Vec<String> = videos.iter().map(|v| v.video.video_id.clone()).collect();
    let mut splits = splits(cfg, &ids)?;
    if let Some(k) = only_fold {
        if k >= splits.len() {
            return Err(Failure::user(format!("fold {k} out of range (have {})", splits.len())));
        }
        splits = vec![splits.swap_remove(k)];
    }
    let dir = cfg.out_dir.join("train");
    output_dir(&dir, cfg, force)?;

    let mut folds = Vec::new();
    for split in &splits {
        let out = fit(&videos, split, &model_cfg, &train_cfg, Some(&dir))?;
        for r in &out.report.history {
            println!(
                "fold {} epoch {}: train loss {:.6}, val ccc v {:.4} a {:.4} mean {:.4}",
                split.fold, r.epoch, r.train_loss, r.val_valence, r.val_arousal, r.val_mean_ccc
            );
        }
        folds.push(out.report);
    }
    let report = TrainReport {
        seed: cfg.seed,
        config_echo: cfg.to_toml(),
        folds,
    };
    let path = dir.join("train_report.txt");
    write_file(&path, report.to_text())?;
    println!(
        "mean best held-out ccc {:.4}; report at {}",
        report.mean_best_ccc(),
        path.display()
    );
    Ok(report)
}

/// Uniform draw in `[0, 1)` for frame `t` of video `v`, fixed by the seed.
fn frame_uniform(seed: u64, v: usize, t: usize) -> f64 {
    (derive_seed(seed ^ t as u64, v, 7) >> 11) as f64 / (1u64 << 53) as f64
}

/// Drops each prediction with probability `rate`, then imputes the gaps.
pub fn drop_and_impute(preds: &[Va], rate: f64, seed: u64, video_index: usize) -> Vec<Va> {
    if rate <= 0.0 {
        return preds.to_vec();
    }
    let masked: Vec<Option<Va>> = preds
        .iter()
        .enumerate()
        .map(|(t, p)| (frame_uniform(seed, video_index, t) >= rate).then_some(*p))
        .collect();
    impute_missing(&masked)
}

/// Prediction file for a video: one row per original frame position, with
/// the sentinel for frames that alignment dropped.
fn prediction_file(video: &VideoSequence, preds: &[Va]) -> String {
    let lead = video.frames.first().map_or(0, |f| f.frame_index);
    let mut rows = vec![Va::UNANNOTATED; lead];
    rows.extend_from_slice(preds);
    format_annotation_file(&rows)
}

fn read_predictions(dir: &Path, video: &VideoSequence) -> Result<Vec<Va>, Failure> {
    let path = dir.join(format!("{}.txt", video.video_id));
    let text = fs::read_to_string(&path).map_err(|e| Failure::user(format!("{}: {e}", path.display())))?;
    let rows = parse_annotation_file(&text).map_err(|e| Failure::user(format!("{}: {e}", path.display())))?;
    video
        .frames
        .iter()
        .map(|f| {
            rows.get(f.frame_index).copied().ok_or_else(|| {
                Failure::user(format!(
                    "{}: no row for frame {} ({} rows)",
                    path.display(),
                    f.frame_index,
                    rows.len()
                ))
            })
        })
        .collect()
}

fn default_checkpoint(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir.join("train").join("fold0").join("best.ckpt.json")
}

pub fn eval(cfg: &RunConfig, checkpoint: Option<&Path>, predictions: Option<&Path>) -> Result<EvalReport, Failure> {
    let videos = load_dataset(cfg)?;
    let raw_preds: Vec<Vec<Va>> = match predictions {
        Some(dir) => videos
            .iter()
            .map(|v| read_predictions(dir, v))
            .collect::<Result<_, _>>()?,
        None => {
            let path = checkpoint.map_or_else(|| default_checkpoint(cfg), Path::to_path_buf);
            if !path.is_file() {
                return Err(Failure::user(format!("checkpoint {} not found", path.display())));
            }
            let ck = Checkpoint::load(&path)?;
            let model = ck.model()?;
            if model.config().mode == ModelMode::TwoStream
                && model.config().phase_channels != cfg.phase_scales * cfg.phase_orientations
            {
                return Err(Failure::user(format!(
                    "checkpoint expects {} phase channels, config gives {}",
                    model.config().phase_channels,
                    cfg.phase_scales * cfg.phase_orientations
                )));
            }
            let prepared = prepare(cfg, videos.clone(), model.config().mode)?;
            prepared
                .iter()
                .map(|v| predict_video(&model, v))
                .collect::<Result<_, _>>()?
        }
    };
    let preds: Vec<Vec<Va>> = raw_preds
        .iter()
        .enumerate()
        .map(|(i, p)| drop_and_impute(p, cfg.eval_missing_rate, cfg.seed, i))
        .collect();

    let dir = cfg.out_dir.join("eval");
    output_dir(&dir, cfg, true)?;
    let pred_dir = dir.join("predictions");
    create_dir(&pred_dir)?;
    for (v, p) in videos.iter().zip(&preds) {
        write_file(&pred_dir.join(format!("{}.txt", v.video_id)), prediction_file(v, p))?;
    }
    let scored: Vec<ScoredVideo> = videos
        .iter()
        .zip(preds)
        .map(|(v, p)| ScoredVideo {
            video_id: v.video_id.clone(),
            predictions: p,
            labels: v.labels().collect(),
        })
        .collect();
    let report = score(&scored, cfg.pooling()?)?;
    let recomputed = (report.headline.0 + report.headline.1) / 2.0;
    if (report.mean_ccc - recomputed).abs() > 1e-12 {
        return Err(Failure::runtime(format!(
            "inconsistent report: mean_ccc {} but components average to {recomputed}",
            report.mean_ccc
        )));
    }
    write_file(&dir.join("eval_report.txt"), report.to_text())?;
    println!(
        "ccc valence {:.4} arousal {:.4} mean {:.4} over {} frames; report at {}",
        report.headline.0,
        report.headline.1,
        report.mean_ccc,
        report.n_frames_scored,
        dir.join("eval_report.txt").display()
    );
    Ok(report)
}

pub fn plot_histogram(cfg: &RunConfig) -> Result<(), Failure> {
    let videos = load_dataset(cfg)?;
    let labels = all_labels(&videos);
    if labels.is_empty() {
        return Err(Failure::user("dataset has no annotated frames"));
    }
    let cells = cfg.histogram_cells;
    let grid = plot::va_histogram(&labels, cells)?;
    let dir = cfg.out_dir.join("plots");
    output_dir(&dir, cfg, true)?;
    let path = dir.join("va_histogram.png");
    plot::histogram_plot(&grid, cfg.plot_width.min(cfg.plot_height).max(200), &path)?;
    println!(
        "{} frames on a {cells}x{cells} grid, max/min cell ratio {:.3}; figure at {}",
        labels.len(),
        plot::cell_ratio(&grid),
        path.display()
    );
    Ok(())
}
