//! Label distribution smoothing.
//!
//! The empirical label histogram over `[-1, 1]` is convolved with a symmetric
//! kernel to obtain an effective label density; loss weights are the inverse
//! of that density, optionally clipped, and rescaled to unit mean over the
//! training labels.
//!
//! Binning is half-open, `[edge_b, edge_{b+1})`, with the last bin closed so
//! that a label of exactly `1.0` lands in bin `B - 1`. At the range boundary
//! each source bin's kernel is truncated to the bins inside `[-1, 1]` and
//! renormalized, so smoothing never loses mass.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataio::Va;
use crate::error::{Error, Result};

/// Density floor applied before inversion so empty bins get finite weights.
pub const DENSITY_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Gaussian,
    Triangular,
    Laplacian,
    Delta,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] = [
        KernelKind::Gaussian,
        KernelKind::Triangular,
        KernelKind::Laplacian,
        KernelKind::Delta,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Triangular => "triangular",
            KernelKind::Laplacian => "laplacian",
            KernelKind::Delta => "delta",
        }
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown kernel kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingKernel {
    pub kind: KernelKind,
    /// Scale in label units: the Gaussian standard deviation, the Laplace
    /// scale, or the triangle half-base.
    pub bandwidth: f64,
    /// Support radius in bins.
    pub half_width: usize,
}

impl SmoothingKernel {
    pub fn new(kind: KernelKind, bandwidth: f64, half_width: usize) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::Config(format!("kernel bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Self {
            kind,
            bandwidth,
            half_width,
        })
    }

    pub fn delta() -> Self {
        Self {
            kind: KernelKind::Delta,
            bandwidth: 1.0,
            half_width: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdsParams {
    pub n_bins: usize,
    pub kernel: SmoothingKernel,
    pub clip_max: f64,
}

impl Default for LdsParams {
    fn default() -> Self {
        Self {
            n_bins: 200,
            kernel: SmoothingKernel {
                kind: KernelKind::Gaussian,
                bandwidth: 0.02,
                half_width: 5,
            },
            clip_max: 50.0,
        }
    }
}

/// Left edge of bin `b`; `bin_edge(n_bins, n_bins) == 1.0`.
pub fn bin_edge(b: usize, n_bins: usize) -> f64 {
    2.0 * b as f64 / n_bins as f64 - 1.0
}

/// Index of the bin containing `label`.
pub fn bin_index(label: f64, n_bins: usize) -> Result<usize> {
    if !(-1.0..=1.0).contains(&label) {
        return Err(Error::Validation(format!("label {label} outside [-1, 1]")));
    }
    let mut b = (((label + 1.0) * 0.5 * n_bins as f64).floor() as usize).min(n_bins - 1);
    // Settle rounding against the edges as `bin_edge` computes them.
    if b + 1 < n_bins && label >= bin_edge(b + 1, n_bins) {
        b += 1;
    } else if b > 0 && label < bin_edge(b, n_bins) {
        b -= 1;
    }
    Ok(b)
}

fn edges(n_bins: usize) -> Vec<f64> {
    (0..=n_bins).map(|b| bin_edge(b, n_bins)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelHistogram {
    pub counts: Vec<u64>,
}

impl LabelHistogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        edges(self.n_bins())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn empirical_density(labels: &[f64], n_bins: usize) -> Result<LabelHistogram> {
    if n_bins < 2 {
        return Err(Error::Config(format!("need at least 2 bins, got {n_bins}")));
    }
    if labels.is_empty() {
        return Err(Error::Degenerate("no labels to histogram".into()));
    }
    let mut counts = vec![0u64; n_bins];
    for &l in labels {
        counts[bin_index(l, n_bins)?] += 1;
    }
    Ok(LabelHistogram { counts })
}

/// Kernel weights at bin offsets `-half_width..=half_width`, normalized to
/// sum to one. The delta kernel is always `[1.0]`.
pub fn discretize_kernel(kernel: &SmoothingKernel, bin_width: f64) -> Vec<f64> {
    if kernel.kind == KernelKind::Delta {
        return vec![1.0];
    }
    let h = kernel.half_width as isize;
    let bw = kernel.bandwidth;
    let raw: Vec<f64> = (-h..=h)
        .map(|o| {
            let d = (o as f64 * bin_width).abs();
            match kernel.kind {
                KernelKind::Gaussian => (-0.5 * (d / bw).powi(2)).exp(),
                KernelKind::Triangular => (1.0 - d / bw).max(0.0),
                KernelKind::Laplacian => (-d / bw).exp(),
                KernelKind::Delta => unreachable!(),
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|k| k / total).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub density: Vec<f64>,
}

impl DensityEstimate {
    pub fn n_bins(&self) -> usize {
        self.density.len()
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        edges(self.n_bins())
    }

    pub fn total(&self) -> f64 {
        self.density.iter().sum()
    }

    pub fn at(&self, label: f64) -> Result<f64> {
        Ok(self.density[bin_index(label, self.n_bins())?])
    }
}

/// Convolves the histogram with the kernel, spreading each bin's count over
/// its in-range neighbours.
pub fn smooth_density(hist: &LabelHistogram, kernel: &SmoothingKernel) -> DensityEstimate {
    let n = hist.n_bins();
    let k = discretize_kernel(kernel, 2.0 / n as f64);
    let h = (k.len() / 2) as isize;
    let mut density = vec![0.0; n];
    for (src, &count) in hist.counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let lo = (src as isize - h).max(0);
        let hi = (src as isize + h).min(n as isize - 1);
        let inside: f64 = (lo..=hi).map(|dst| k[(dst - src as isize + h) as usize]).sum();
        let scale = count as f64 / inside;
        for dst in lo..=hi {
            density[dst as usize] += scale * k[(dst - src as isize + h) as usize];
        }
    }
    DensityEstimate { density }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTable {
    pub weights: Vec<f64>,
    pub clip_max: f64,
}

impl WeightTable {
    /// All-ones table; equivalent to disabling re-weighting.
    pub fn uniform(n_bins: usize) -> Self {
        Self {
            weights: vec![1.0; n_bins],
            clip_max: 1.0,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.weights.len()
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        edges(self.n_bins())
    }

    /// Weight of the bin containing `label`. Sentinel and out-of-range labels
    /// are rejected.
    pub fn weight_for(&self, label: f64) -> Result<f64> {
        Ok(self.weights[bin_index(label, self.n_bins())?])
    }

    /// `bin_left,bin_right,weight` rows under a header line.
    pub fn to_text(&self) -> String {
        let e = self.bin_edges();
        let mut s = String::from("bin_left,bin_right,weight\n");
        for (b, w) in self.weights.iter().enumerate() {
            let _ = writeln!(s, "{:.6},{:.6},{w}", e[b], e[b + 1]);
        }
        s
    }
}

/// Inverse-density weights `min(c / max(density, ε), clip_max)`, with the
/// scale `c` chosen so the weights average exactly one over `labels`.
pub fn compute_weights(density: &DensityEstimate, clip_max: f64, labels: &[f64]) -> Result<WeightTable> {
    if !(clip_max >= 1.0) {
        return Err(Error::Config(format!(
            "clip_max must be at least 1 so weights can average to one, got {clip_max}"
        )));
    }
    if density.density.iter().all(|&d| d <= 0.0) {
        return Err(Error::Degenerate("density has no mass".into()));
    }
    if labels.is_empty() {
        return Err(Error::Degenerate("no training labels to normalize weights over".into()));
    }
    let n = density.n_bins();
    let raw: Vec<f64> = density.density.iter().map(|&d| 1.0 / d.max(DENSITY_FLOOR)).collect();
    let mut counts = vec![0u64; n];
    for &l in labels {
        counts[bin_index(l, n)?] += 1;
    }
    let total = labels.len() as f64;

    // Occupied bins by decreasing raw weight; the first `j` are the clipped ones.
    let mut occupied: Vec<usize> = (0..n).filter(|&b| counts[b] > 0).collect();
    occupied.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]));
    let mut clipped_count = 0.0;
    let mut free_mass: f64 = occupied.iter().map(|&b| counts[b] as f64 * raw[b]).sum();
    let mut scale = None;
    for j in 0..=occupied.len() {
        if j > 0 {
            let b = occupied[j - 1];
            clipped_count += counts[b] as f64;
            free_mass -= counts[b] as f64 * raw[b];
        }
        if j == occupied.len() {
            // Every occupied bin clipped: only consistent when clip_max == 1.
            scale = Some(clip_max / raw[occupied[j - 1]]);
            break;
        }
        // written so an infinite clip_max with nothing clipped stays finite
        let clipped_mass = if clipped_count > 0.0 { clip_max * clipped_count } else { 0.0 };
        let c = (total - clipped_mass) / free_mass;
        let tol = 1.0 + 1e-12;
        let top_ok = j == 0 || c * raw[occupied[j - 1]] * tol >= clip_max;
        let next_ok = c * raw[occupied[j]] <= clip_max * tol;
        if c > 0.0 && top_ok && next_ok {
            scale = Some(c);
            break;
        }
    }
    let c = scale.expect("a unit-mean scale exists whenever clip_max >= 1");
    let weights = raw.iter().map(|&r| (c * r).min(clip_max)).collect();
    Ok(WeightTable { weights, clip_max })
}

/// One weight table per target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetWeights {
    pub valence: WeightTable,
    pub arousal: WeightTable,
}

impl TargetWeights {
    pub fn uniform(n_bins: usize) -> Self {
        Self {
            valence: WeightTable::uniform(n_bins),
            arousal: WeightTable::uniform(n_bins),
        }
    }

    /// Per-target weights of an annotated label.
    pub fn weights_for(&self, label: Va) -> Result<(f64, f64)> {
        Ok((self.valence.weight_for(label.valence)?, self.arousal.weight_for(label.arousal)?))
    }
}

/// Histogram, smoothed density and weights for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetLds {
    pub histogram: LabelHistogram,
    pub density: DensityEstimate,
    pub weights: WeightTable,
}

pub fn estimate_target(labels: &[f64], params: &LdsParams) -> Result<TargetLds> {
    let histogram = empirical_density(labels, params.n_bins)?;
    let density = smooth_density(&histogram, &params.kernel);
    let weights = compute_weights(&density, params.clip_max, labels)?;
    Ok(TargetLds {
        histogram,
        density,
        weights,
    })
}

/// Estimates independent valence and arousal weight tables from the
/// annotated labels; sentinel labels are skipped.
pub fn estimate_target_weights(labels: &[Va], params: &LdsParams) -> Result<TargetWeights> {
    let (v, a): (Vec<f64>, Vec<f64>) = labels
        .iter()
        .filter(|l| !l.is_sentinel())
        .map(|l| (l.valence, l.arousal))
        .unzip();
    Ok(TargetWeights {
        valence: estimate_target(&v, params)?.weights,
        arousal: estimate_target(&a, params)?.weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn hist(counts: &[u64]) -> LabelHistogram {
        LabelHistogram {
            counts: counts.to_vec(),
        }
    }

    #[test]
    fn binning_rule() {
        assert_eq!(empirical_density(&[-1.0, 0.0, 1.0], 2).unwrap().counts, vec![1, 2]);
        assert_eq!(empirical_density(&[0.25; 100], 4).unwrap().counts, vec![0, 0, 100, 0]);
        assert_eq!(empirical_density(&[0.5; 100], 4).unwrap().counts, vec![0, 0, 0, 100]);
        assert!(matches!(empirical_density(&[], 4), Err(Error::Degenerate(_))));
        assert!(matches!(empirical_density(&[1.5], 4), Err(Error::Validation(_))));
        assert!(matches!(empirical_density(&[0.0], 1), Err(Error::Config(_))));
    }

    #[test]
    fn every_edge_maps_to_its_right_bin() {
        for n in [2, 3, 7, 20, 200] {
            for b in 0..n {
                assert_eq!(bin_index(bin_edge(b, n), n).unwrap(), b, "n={n} b={b}");
            }
            assert_eq!(bin_index(1.0, n).unwrap(), n - 1);
        }
    }

    #[test]
    fn delta_kernel_is_identity() {
        assert_eq!(discretize_kernel(&SmoothingKernel::delta(), 0.01), vec![1.0]);
        let h = hist(&[3, 0, 5, 1]);
        assert_eq!(smooth_density(&h, &SmoothingKernel::delta()).density, vec![3.0, 0.0, 5.0, 1.0]);
    }

    #[test]
    fn triangular_kernel_values() {
        let k = SmoothingKernel::new(KernelKind::Triangular, 0.2, 1).unwrap();
        let d = discretize_kernel(&k, 0.1);
        assert_eq!(d.len(), 3);
        assert_abs_diff_eq!(d[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d[2], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn gaussian_kernel_matches_normalized_pdf() {
        let k = SmoothingKernel::new(KernelKind::Gaussian, 0.1, 2).unwrap();
        let d = discretize_kernel(&k, 0.1);
        // exp(-o^2/2) at o = 0, 1, 2 normalized.
        let raw = [(-2.0f64).exp(), (-0.5f64).exp(), 1.0, (-0.5f64).exp(), (-2.0f64).exp()];
        let s: f64 = raw.iter().sum();
        for (a, b) in d.iter().zip(raw) {
            assert_abs_diff_eq!(*a, b / s, epsilon = 1e-15);
        }
        assert_eq!(d[0], d[4]);
        assert_eq!(d[1], d[3]);
    }

    #[test]
    fn boundary_renormalization_example() {
        let k = SmoothingKernel::new(KernelKind::Triangular, 2.0 / 3.0 * 2.0, 1).unwrap();
        // Three bins of width 2/3; bandwidth of two bins gives [0.25, 0.5, 0.25].
        let d = smooth_density(&hist(&[10, 0, 0]), &k).density;
        assert_abs_diff_eq!(d[0], 20.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d[1], 10.0 / 3.0, epsilon = 1e-12);
        assert_eq!(d[2], 0.0);
    }

    #[test]
    fn inverse_weights_example() {
        let labels = {
            let mut l = vec![-0.9; 8];
            l.push(0.0);
            l.push(0.9);
            l
        };
        let h = empirical_density(&labels, 3).unwrap();
        assert_eq!(h.counts, vec![8, 1, 1]);
        let d = smooth_density(&h, &SmoothingKernel::delta());
        let w = compute_weights(&d, 1e6, &labels).unwrap();
        assert_abs_diff_eq!(w.weights[0], 5.0 / 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.weights[1], 10.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.weights[2], 10.0 / 3.0, epsilon = 1e-12);
        let mean: f64 = labels.iter().map(|&l| w.weight_for(l).unwrap()).sum::<f64>() / 10.0;
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn uniform_density_gives_unit_weights() {
        let labels: Vec<f64> = (0..4).map(|b| bin_edge(b, 4) + 0.1).collect();
        let h = empirical_density(&labels, 4).unwrap();
        let w = compute_weights(&smooth_density(&h, &SmoothingKernel::delta()), 50.0, &labels).unwrap();
        for x in &w.weights {
            assert_abs_diff_eq!(*x, 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(w.weight_for(0.37).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_bin_hits_the_clip() {
        let labels = [-0.9, -0.8, 0.9];
        let h = empirical_density(&labels, 4).unwrap();
        let w = compute_weights(&smooth_density(&h, &SmoothingKernel::delta()), 10.0, &labels).unwrap();
        assert_eq!(w.weights[1], 10.0);
        assert_eq!(w.weights[2], 10.0);
        let mean: f64 = labels.iter().map(|&l| w.weight_for(l).unwrap()).sum::<f64>() / 3.0;
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn clip_engaging_on_occupied_bins_keeps_unit_mean() {
        let mut labels = vec![-0.5; 1000];
        labels.push(0.5);
        let h = empirical_density(&labels, 2).unwrap();
        let w = compute_weights(&smooth_density(&h, &SmoothingKernel::delta()), 5.0, &labels).unwrap();
        assert_eq!(w.weights[1], 5.0);
        let mean: f64 = labels.iter().map(|&l| w.weight_for(l).unwrap()).sum::<f64>() / labels.len() as f64;
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-12);
        assert!(w.weights.iter().all(|&x| x > 0.0 && x <= 5.0));
    }

    #[test]
    fn clip_of_one_forces_unit_weights() {
        let labels = [-0.9, -0.9, 0.2];
        let h = empirical_density(&labels, 4).unwrap();
        let w = compute_weights(&smooth_density(&h, &SmoothingKernel::delta()), 1.0, &labels).unwrap();
        assert!(w.weights.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn infinite_clip_is_pure_inverse_weighting() {
        let labels = [-0.5, -0.5, 0.1, 0.9];
        let h = empirical_density(&labels, 4).unwrap();
        let w = compute_weights(&smooth_density(&h, &SmoothingKernel::delta()), f64::INFINITY, &labels).unwrap();
        // counts [0, 2, 1, 1]: c / [2, 1, 1] averaged over 4 labels is 1 when c = 4/3
        assert!((w.weights[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((w.weights[2] - 4.0 / 3.0).abs() < 1e-12);
        assert!(w.weights[0].is_finite() && w.weights[0] > 1e7);
    }

    #[test]
    fn weight_errors() {
        let d = DensityEstimate { density: vec![0.0; 4] };
        assert!(matches!(compute_weights(&d, 10.0, &[0.1]), Err(Error::Degenerate(_))));
        let d = DensityEstimate { density: vec![1.0; 4] };
        assert!(matches!(compute_weights(&d, 0.5, &[0.1]), Err(Error::Config(_))));
        let t = WeightTable::uniform(4);
        assert!(matches!(t.weight_for(-5.0), Err(Error::Validation(_))));
        assert!(t.weight_for(1.2).is_err());
        assert_eq!(t.weight_for(0.3).unwrap(), 1.0);
    }

    #[test]
    fn edge_label_takes_right_bin_weight() {
        let t = WeightTable {
            weights: vec![1.0, 2.0, 3.0, 4.0],
            clip_max: 10.0,
        };
        assert_eq!(t.weight_for(0.0).unwrap(), 3.0);
        assert_eq!(t.weight_for(-0.5).unwrap(), 2.0);
        assert_eq!(t.weight_for(1.0).unwrap(), 4.0);
        assert_eq!(t.weight_for(-1.0).unwrap(), 1.0);
    }

    #[test]
    fn weight_table_text() {
        let t = WeightTable {
            weights: vec![0.5, 2.0],
            clip_max: 10.0,
        };
        assert_eq!(t.to_text(), "bin_left,bin_right,weight\n-1.000000,0.000000,0.5\n0.000000,1.000000,2\n");
    }

    #[test]
    fn kernel_kind_parsing() {
        for k in KernelKind::ALL {
            assert_eq!(k.as_str().parse::<KernelKind>().unwrap(), k);
        }
        assert!("box".parse::<KernelKind>().is_err());
        assert!(SmoothingKernel::new(KernelKind::Gaussian, 0.0, 3).is_err());
    }

    fn kernel_strategy() -> impl Strategy<Value = SmoothingKernel> {
        (0usize..4, 0.005f64..0.3, 0usize..9).prop_map(|(k, bw, hw)| SmoothingKernel {
            kind: KernelKind::ALL[k],
            bandwidth: bw,
            half_width: hw,
        })
    }

    proptest! {
        #[test]
        fn discretized_kernel_is_symmetric_and_normalized(kernel in kernel_strategy(), bins in 2usize..300) {
            let k = discretize_kernel(&kernel, 2.0 / bins as f64);
            let n = k.len();
            prop_assert_eq!(n % 2, 1);
            for i in 0..n {
                prop_assert_eq!(k[i], k[n - 1 - i]);
            }
            prop_assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn smoothing_conserves_mass(counts in proptest::collection::vec(0u64..1000, 2..64), kernel in kernel_strategy()) {
            let h = hist(&counts);
            let d = smooth_density(&h, &kernel);
            prop_assert!((d.total() - h.total() as f64).abs() < 1e-9 * (1.0 + h.total() as f64));
            prop_assert!(d.density.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn smoothing_commutes_with_reflection(counts in proptest::collection::vec(0u64..1000, 2..64), kernel in kernel_strategy()) {
            let fwd = smooth_density(&hist(&counts), &kernel).density;
            let rev_counts: Vec<u64> = counts.iter().rev().copied().collect();
            let rev = smooth_density(&hist(&rev_counts), &kernel).density;
            for (a, b) in fwd.iter().rev().zip(&rev) {
                prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn weights_invariant_to_duplication(labels in proptest::collection::vec(-1.0f64..=1.0, 1..200), kernel in kernel_strategy(), clip in 1.0f64..100.0) {
            let params = LdsParams { n_bins: 50, kernel, clip_max: clip };
            let once = estimate_target(&labels, &params).unwrap().weights;
            let mut twice = labels.clone();
            twice.extend_from_slice(&labels);
            let dup = estimate_target(&twice, &params).unwrap().weights;
            for (a, b) in once.weights.iter().zip(&dup.weights) {
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
        }

        #[test]
        fn weights_bounded_with_unit_mean(labels in proptest::collection::vec(-1.0f64..=1.0, 1..300), kernel in kernel_strategy(), clip in 1.0f64..100.0) {
            let params = LdsParams { n_bins: 40, kernel, clip_max: clip };
            let w = estimate_target(&labels, &params).unwrap().weights;
            prop_assert!(w.weights.iter().all(|&x| x > 0.0 && x <= clip && x.is_finite()));
            let mean = labels.iter().map(|&l| w.weight_for(l).unwrap()).sum::<f64>() / labels.len() as f64;
            prop_assert!((mean - 1.0).abs() < 1e-9);
        }
    }
}
