//! Concordance correlation coefficient, the mean-CCC criterion, and
//! missing-frame imputation for prediction streams.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataio::Va;
use crate::error::{Error, Result};

/// How a CCC value was obtained when the formula is 0/0 or trivially 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    /// Both sequences constant and equal; reported as 1.
    ConstantEqual,
    /// Both sequences constant but different; reported as 0.
    ConstantUnequal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ccc {
    pub value: f64,
    pub degeneracy: Option<Degeneracy>,
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    mean_x: f64,
    mean_y: f64,
    var_x: f64,
    var_y: f64,
    cov: f64,
}

fn moments(x: &[f64], y: &[f64]) -> Result<Moments> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("ccc inputs differ in length: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Degenerate(format!("ccc needs at least 2 values, got {}", x.len())));
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let (mut var_x, mut var_y, mut cov) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mean_x, b - mean_y);
        var_x += dx * dx;
        var_y += dy * dy;
        cov += dx * dy;
    }
    Ok(Moments {
        mean_x,
        mean_y,
        var_x: var_x / n,
        var_y: var_y / n,
        cov: cov / n,
    })
}

/// CCC with population moments, `2 cov / (var_x + var_y + (mean_x - mean_y)^2)`,
/// plus a flag for the two degenerate constant-input cases.
pub fn ccc_detailed(x: &[f64], y: &[f64]) -> Result<Ccc> {
    let m = moments(x, y)?;
    let dm = m.mean_x - m.mean_y;
    let denom = m.var_x + m.var_y + dm * dm;
    if denom == 0.0 {
        return Ok(Ccc {
            value: 1.0,
            degeneracy: Some(Degeneracy::ConstantEqual),
        });
    }
    let degeneracy = (m.var_x == 0.0 && m.var_y == 0.0).then_some(Degeneracy::ConstantUnequal);
    Ok(Ccc {
        value: (2.0 * m.cov / denom).clamp(-1.0, 1.0),
        degeneracy,
    })
}

pub fn ccc(x: &[f64], y: &[f64]) -> Result<f64> {
    ccc_detailed(x, y).map(|c| c.value)
}

/// Pearson correlation; zero when either sequence is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let m = moments(x, y)?;
    if m.var_x == 0.0 || m.var_y == 0.0 {
        return Ok(0.0);
    }
    Ok(m.cov / (m.var_x.sqrt() * m.var_y.sqrt()))
}

/// Gradient of `ccc(x, y)` with respect to `x`.
pub fn ccc_grad_x(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let m = moments(x, y)?;
    let n = x.len() as f64;
    let dm = m.mean_x - m.mean_y;
    let denom = m.var_x + m.var_y + dm * dm;
    if denom == 0.0 {
        return Ok(vec![0.0; x.len()]);
    }
    let num = 2.0 * m.cov;
    Ok(x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let d_num = 2.0 * (yi - m.mean_y) / n;
            let d_den = 2.0 * (xi - m.mean_x) / n + 2.0 * dm / n;
            (d_num * denom - num * d_den) / (denom * denom)
        })
        .collect())
}

/// Challenge criterion: the average of the valence and arousal CCCs.
pub fn mean_ccc(valence: f64, arousal: f64) -> f64 {
    (valence + arousal) / 2.0
}

/// Fills gaps in a prediction stream: leading gaps get the sentinel, later
/// gaps repeat the previous emitted prediction.
pub fn impute_missing(predictions: &[Option<Va>]) -> Vec<Va> {
    let mut out = Vec::with_capacity(predictions.len());
    let mut last: Option<Va> = None;
    for p in predictions {
        let emitted = match (p, last) {
            (Some(v), _) => *v,
            (None, Some(prev)) => prev,
            (None, None) => Va::UNANNOTATED,
        };
        if p.is_some() {
            last = Some(emitted);
        }
        out.push(emitted);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// CCC over the concatenation of all scored frames.
    Pooled,
    /// Average of per-video CCCs.
    PerVideo,
}

impl std::str::FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" => Ok(Pooling::Pooled),
            "per_video" => Ok(Pooling::PerVideo),
            _ => Err(Error::Config(format!("unknown pooling {s:?}"))),
        }
    }
}

/// Predictions and ground truth for one video, frame-aligned.
#[derive(Debug, Clone)]
pub struct ScoredVideo {
    pub video_id: String,
    pub predictions: Vec<Va>,
    pub labels: Vec<Va>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pooling: Pooling,
    /// Per-video (valence, arousal) CCC; videos with fewer than two scored
    /// frames are omitted.
    pub per_video: BTreeMap<String, (f64, f64)>,
    /// CCC over all scored frames.
    pub pooled: (f64, f64),
    /// The (valence, arousal) pair the criterion is computed from: `pooled`
    /// or the macro average of `per_video`.
    pub headline: (f64, f64),
    pub mean_ccc: f64,
    pub n_frames_scored: usize,
    /// Frames whose prediction was the sentinel (missing at the start of a
    /// video) and were therefore left out.
    pub n_frames_unpredicted: usize,
    /// Degenerate CCC computations, as `(scope, target, kind)`.
    pub degenerate: Vec<(String, String, Degeneracy)>,
}

/// Scores predictions against annotated frames. Frames whose ground truth is
/// the sentinel are skipped, as are frames whose prediction is the sentinel.
pub fn score(videos: &[ScoredVideo], pooling: Pooling) -> Result<EvalReport> {
    let mut all = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut per_video = BTreeMap::new();
    let mut degenerate = Vec::new();
    let mut unpredicted = 0;
    for v in videos {
        if v.predictions.len() != v.labels.len() {
            return Err(Error::Shape(format!(
                "video {}: {} predictions for {} frames",
                v.video_id,
                v.predictions.len(),
                v.labels.len()
            )));
        }
        let mut cols = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (p, l) in v.predictions.iter().zip(&v.labels) {
            if l.is_sentinel() {
                continue;
            }
            if p.is_sentinel() {
                unpredicted += 1;
                continue;
            }
            cols.0.push(p.valence);
            cols.1.push(l.valence);
            cols.2.push(p.arousal);
            cols.3.push(l.arousal);
        }
        if cols.0.len() >= 2 {
            let cv = ccc_detailed(&cols.0, &cols.1)?;
            let ca = ccc_detailed(&cols.2, &cols.3)?;
            for (target, c) in [("valence", cv), ("arousal", ca)] {
                if let Some(d) = c.degeneracy {
                    degenerate.push((v.video_id.clone(), target.to_string(), d));
                }
            }
            per_video.insert(v.video_id.clone(), (cv.value, ca.value));
        }
        all.0.extend(cols.0);
        all.1.extend(cols.1);
        all.2.extend(cols.2);
        all.3.extend(cols.3);
    }
    let n = all.0.len();
    if n < 2 {
        return Err(Error::Degenerate(format!("only {n} scorable frames")));
    }
    let cv = ccc_detailed(&all.0, &all.1)?;
    let ca = ccc_detailed(&all.2, &all.3)?;
    for (target, c) in [("valence", cv), ("arousal", ca)] {
        if let Some(d) = c.degeneracy {
            degenerate.push(("pooled".into(), target.to_string(), d));
        }
    }
    let pooled = (cv.value, ca.value);
    let headline = match pooling {
        Pooling::Pooled => pooled,
        Pooling::PerVideo => {
            if per_video.is_empty() {
                return Err(Error::Degenerate("no video has two scorable frames".into()));
            }
            let k = per_video.len() as f64;
            let (sv, sa) = per_video.values().fold((0.0, 0.0), |(a, b), &(v, w)| (a + v, b + w));
            (sv / k, sa / k)
        }
    };
    Ok(EvalReport {
        pooling,
        per_video,
        pooled,
        headline,
        mean_ccc: mean_ccc(headline.0, headline.1),
        n_frames_scored: n,
        n_frames_unpredicted: unpredicted,
        degenerate,
    })
}

impl EvalReport {
    /// Fixed-order text rendering.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let pooling = match self.pooling {
            Pooling::Pooled => "pooled",
            Pooling::PerVideo => "per_video",
        };
        let _ = writeln!(s, "pooling = {pooling}");
        let _ = writeln!(s, "n_frames_scored = {}", self.n_frames_scored);
        let _ = writeln!(s, "n_frames_unpredicted = {}", self.n_frames_unpredicted);
        let _ = writeln!(s, "pooled_ccc_valence = {:.9}", self.pooled.0);
        let _ = writeln!(s, "pooled_ccc_arousal = {:.9}", self.pooled.1);
        let _ = writeln!(s, "headline_ccc_valence = {:.9}", self.headline.0);
        let _ = writeln!(s, "headline_ccc_arousal = {:.9}", self.headline.1);
        let _ = writeln!(s, "mean_ccc = {:.9}", self.mean_ccc);
        for (scope, target, kind) in &self.degenerate {
            let _ = writeln!(s, "degenerate = {scope},{target},{kind:?}");
        }
        let _ = writeln!(s, "[per_video]");
        let _ = writeln!(s, "video_id,ccc_valence,ccc_arousal");
        for (id, (v, a)) in &self.per_video {
            let _ = writeln!(s, "{id},{v:.9},{a:.9}");
        }
        s
    }
}
