//! Local phase from a bank of oriented quadrature filters, and wrapped
//! frame-to-frame phase differences for the temporal stream.
//!
//! Filters are one-sided log-Gabor filters built in the frequency domain.
//! Each filter passes the half-plane opposite its orientation vector, so a
//! pattern translating by `d` pixels along `(cos θ, sin θ)` advances the local
//! phase by `2π d / λ`.

use std::f64::consts::PI;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dataio::VideoSequence;
use crate::error::{Error, Result};
use crate::image::Image;

/// Radial bandwidth: standard deviation of `ln(ρ / f0)`.
const RADIAL_SIGMA: f64 = 0.6;
/// Angular standard deviation as a fraction of the orientation spacing.
const ANGULAR_SIGMA_FRACTION: f64 = 0.6;
const BASE_WAVELENGTH: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    pub n_scales: usize,
    pub n_orientations: usize,
    /// Amplitude quantile below which phase is treated as unreliable.
    pub amplitude_quantile: f64,
}

impl Default for PhaseParams {
    fn default() -> Self {
        Self {
            n_scales: 2,
            n_orientations: 4,
            amplitude_quantile: 0.5,
        }
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x - 2.0 * PI * ((x + PI) / (2.0 * PI)).floor();
    if r <= -PI {
        r + 2.0 * PI
    } else if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

pub struct FilterBank {
    n_scales: usize,
    n_orientations: usize,
    size: usize,
    wavelengths: Vec<f64>,
    orientations: Vec<f64>,
    /// `n_scales * n_orientations` frequency responses, scale-major.
    filters: Vec<Vec<f64>>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FilterBank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FilterBank")
            .field("n_scales", &self.n_scales)
            .field("n_orientations", &self.n_orientations)
            .field("size", &self.size)
            .field("wavelengths", &self.wavelengths)
            .finish()
    }
}

fn signed_frequency(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64 / n as f64
    } else {
        k as f64 / n as f64 - 1.0
    }
}

impl FilterBank {
    pub fn new(n_scales: usize, n_orientations: usize, image_size: usize) -> Result<Self> {
        if image_size < 16 {
            return Err(Error::Config(format!("image_size must be at least 16, got {image_size}")));
        }
        if !(1..=5).contains(&n_scales) {
            return Err(Error::Config(format!("n_scales must be in 1..=5, got {n_scales}")));
        }
        if !(2..=8).contains(&n_orientations) {
            return Err(Error::Config(format!("n_orientations must be in 2..=8, got {n_orientations}")));
        }
        let wavelengths: Vec<f64> = (0..n_scales).map(|s| BASE_WAVELENGTH * (1 << s) as f64).collect();
        let orientations: Vec<f64> = (0..n_orientations)
            .map(|o| PI * o as f64 / n_orientations as f64)
            .collect();
        let angular_sigma = ANGULAR_SIGMA_FRACTION * PI / n_orientations as f64;

        let mut filters = Vec::with_capacity(n_scales * n_orientations);
        for &wavelength in &wavelengths {
            let f0 = 1.0 / wavelength;
            for &theta in &orientations {
                let pass_dir = theta + PI;
                let mut g = vec![0.0; image_size * image_size];
                for ky in 0..image_size {
                    let fv = signed_frequency(ky, image_size);
                    for kx in 0..image_size {
                        let fu = signed_frequency(kx, image_size);
                        let rho = (fu * fu + fv * fv).sqrt();
                        // The Nyquist row and column are their own mirror
                        // images, so they cannot belong to one half-plane.
                        if rho == 0.0 || 2 * kx == image_size || 2 * ky == image_size {
                            continue;
                        }
                        let delta = wrap_phase(fv.atan2(fu) - pass_dir);
                        if delta.abs() >= PI / 2.0 {
                            continue;
                        }
                        let radial = (-(rho / f0).ln().powi(2) / (2.0 * RADIAL_SIGMA * RADIAL_SIGMA)).exp();
                        let angular = (-delta * delta / (2.0 * angular_sigma * angular_sigma)).exp();
                        g[ky * image_size + kx] = radial * angular;
                    }
                }
                filters.push(g);
            }
        }

        let mut planner = FftPlanner::new();
        Ok(Self {
            n_scales,
            n_orientations,
            size: image_size,
            wavelengths,
            orientations,
            filters,
            fft: planner.plan_fft_forward(image_size),
            ifft: planner.plan_fft_inverse(image_size),
        })
    }

    pub fn from_params(params: &PhaseParams, image_size: usize) -> Result<Self> {
        Self::new(params.n_scales, params.n_orientations, image_size)
    }

    pub fn n_scales(&self) -> usize {
        self.n_scales
    }

    pub fn n_orientations(&self) -> usize {
        self.n_orientations
    }

    pub fn n_filters(&self) -> usize {
        self.filters.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Center wavelength per scale, in pixels.
    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    /// Orientation angles in `[0, π)`.
    pub fn orientations(&self) -> &[f64] {
        &self.orientations
    }

    /// Real-valued frequency response of filter `(scale, orientation)`.
    pub fn filter(&self, scale: usize, orientation: usize) -> &[f64] {
        &self.filters[scale * self.n_orientations + orientation]
    }

    fn fft2(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.size;
        let plan = if inverse { &self.ifft } else { &self.fft };
        plan.process(buf);
        let mut t = vec![Complex64::new(0.0, 0.0); n * n];
        for y in 0..n {
            for x in 0..n {
                t[x * n + y] = buf[y * n + x];
            }
        }
        plan.process(&mut t);
        for y in 0..n {
            for x in 0..n {
                buf[y * n + x] = t[x * n + y];
            }
        }
    }

    /// Per-filter local phase and amplitude of a grayscale frame.
    pub fn decompose(&self, frame: &Image) -> Result<PhaseMap> {
        if !frame.is_square(self.size) {
            return Err(Error::Shape(format!(
                "frame is {}x{}, filter bank expects {}x{}",
                frame.width(),
                frame.height(),
                self.size,
                self.size
            )));
        }
        let n = self.size;
        let area = n * n;
        let mut spectrum: Vec<Complex64> = frame.pixels().iter().map(|&p| Complex64::new(p, 0.0)).collect();
        self.fft2(&mut spectrum, false);

        let mut phase = Vec::with_capacity(self.filters.len() * area);
        let mut amplitude = Vec::with_capacity(self.filters.len() * area);
        let norm = 1.0 / area as f64;
        let mut resp = vec![Complex64::new(0.0, 0.0); area];
        for g in &self.filters {
            for ((r, s), &gv) in resp.iter_mut().zip(&spectrum).zip(g) {
                *r = s * gv;
            }
            self.fft2(&mut resp, true);
            for r in &resp {
                let r = r * norm;
                let p = r.im.atan2(r.re);
                phase.push(if p <= -PI { PI } else { p });
                amplitude.push(r.norm());
            }
        }
        Ok(PhaseMap {
            n_scales: self.n_scales,
            n_orientations: self.n_orientations,
            height: n,
            width: n,
            phase,
            amplitude,
        })
    }
}

/// Layout of both maps is `[scale][orientation][y][x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    pub n_scales: usize,
    pub n_orientations: usize,
    pub height: usize,
    pub width: usize,
    pub phase: Vec<f64>,
    pub amplitude: Vec<f64>,
}

impl PhaseMap {
    pub fn channel_len(&self) -> usize {
        self.height * self.width
    }

    pub fn amplitude_channel(&self, scale: usize, orientation: usize) -> &[f64] {
        let c = scale * self.n_orientations + orientation;
        &self.amplitude[c * self.channel_len()..(c + 1) * self.channel_len()]
    }

    pub fn phase_channel(&self, scale: usize, orientation: usize) -> &[f64] {
        let c = scale * self.n_orientations + orientation;
        &self.phase[c * self.channel_len()..(c + 1) * self.channel_len()]
    }

    fn dims(&self) -> (usize, usize, usize, usize) {
        (self.n_scales, self.n_orientations, self.height, self.width)
    }
}

/// Wrapped phase differences with the amplitude-reliability mask; masked-out
/// entries are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiffStack {
    pub n_scales: usize,
    pub n_orientations: usize,
    pub height: usize,
    pub width: usize,
    pub diff: Vec<f64>,
    pub mask: Vec<bool>,
}

impl PhaseDiffStack {
    pub fn zeros(n_scales: usize, n_orientations: usize, height: usize, width: usize) -> Self {
        let n = n_scales * n_orientations * height * width;
        Self {
            n_scales,
            n_orientations,
            height,
            width,
            diff: vec![0.0; n],
            mask: vec![false; n],
        }
    }

    pub fn channels(&self) -> usize {
        self.n_scales * self.n_orientations
    }

    pub fn channel_len(&self) -> usize {
        self.height * self.width
    }

    pub fn channel(&self, scale: usize, orientation: usize) -> (&[f64], &[bool]) {
        let c = scale * self.n_orientations + orientation;
        let r = c * self.channel_len()..(c + 1) * self.channel_len();
        (&self.diff[r.clone()], &self.mask[r])
    }

    /// Mean of the unmasked differences in one channel, if any.
    pub fn masked_mean(&self, scale: usize, orientation: usize) -> Option<f64> {
        let (d, m) = self.channel(scale, orientation);
        let (sum, n) = d
            .iter()
            .zip(m)
            .filter(|(_, &keep)| keep)
            .fold((0.0, 0usize), |(s, n), (&v, _)| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

/// Linear-interpolated quantile of `values` (sorted in place).
fn quantile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let pos = q * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(values.len() - 1);
    values[lo] + (values[hi] - values[lo]) * (pos - lo as f64)
}

/// `wrap(curr.phase - prev.phase)`, kept where both amplitudes exceed the
/// `amplitude_quantile` of the pooled amplitudes of the two maps.
pub fn phase_difference(prev: &PhaseMap, curr: &PhaseMap, amplitude_quantile: f64) -> Result<PhaseDiffStack> {
    if prev.dims() != curr.dims() {
        return Err(Error::Shape(format!(
            "phase maps differ in shape: {:?} vs {:?}",
            prev.dims(),
            curr.dims()
        )));
    }
    if !(0.0..1.0).contains(&amplitude_quantile) {
        return Err(Error::Config(format!(
            "amplitude_quantile must lie in [0, 1), got {amplitude_quantile}"
        )));
    }
    let mut pooled: Vec<f64> = prev.amplitude.iter().chain(&curr.amplitude).copied().collect();
    let threshold = quantile(&mut pooled, amplitude_quantile);
    let n = prev.phase.len();
    let mut diff = vec![0.0; n];
    let mut mask = vec![false; n];
    for i in 0..n {
        if prev.amplitude[i].min(curr.amplitude[i]) > threshold {
            mask[i] = true;
            diff[i] = wrap_phase(curr.phase[i] - prev.phase[i]);
        }
    }
    Ok(PhaseDiffStack {
        n_scales: prev.n_scales,
        n_orientations: prev.n_orientations,
        height: prev.height,
        width: prev.width,
        diff,
        mask,
    })
}

/// Phase differences between consecutive images; element `t` compares image
/// `t` with image `t + 1`.
pub fn image_phase_diffs(images: &[&Image], bank: &FilterBank, amplitude_quantile: f64) -> Result<Vec<PhaseDiffStack>> {
    if images.len() < 2 {
        return Err(Error::Shape(format!(
            "need at least 2 frames for phase differences, got {}",
            images.len()
        )));
    }
    #[cfg(feature = "parallel")]
    let maps: Vec<PhaseMap> = {
        use rayon::prelude::*;
        images
            .par_iter()
            .map(|img| bank.decompose(img))
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let maps: Vec<PhaseMap> = images.iter().map(|img| bank.decompose(img)).collect::<Result<_>>()?;
    maps.windows(2)
        .map(|w| phase_difference(&w[0], &w[1], amplitude_quantile))
        .collect()
}

pub fn sequence_phase_diffs(video: &VideoSequence, bank: &FilterBank, amplitude_quantile: f64) -> Result<Vec<PhaseDiffStack>> {
    let images: Vec<&Image> = video.images().collect();
    image_phase_diffs(&images, bank, amplitude_quantile)
}

const CACHE_MAGIC: &[u8; 4] = b"PDS1";
const DTYPE_F64: u8 = 8;

/// Cache file name for a video under a given bank configuration.
pub fn cache_file_name(video_id: &str, bank: &FilterBank, amplitude_quantile: f64) -> String {
    format!(
        "{video_id}.s{}o{}n{}q{}.pdiff",
        bank.n_scales, bank.n_orientations, bank.size, amplitude_quantile
    )
}

/// Binary layout: magic, then little-endian u32 `S, O, H, W, count`, a dtype
/// byte, then per stack `S*O*H*W` f64 differences and as many mask bytes.
pub fn write_stack_cache(path: &Path, stacks: &[PhaseDiffStack]) -> Result<()> {
    let (s, o, h, w) = stacks
        .first()
        .map(|x| (x.n_scales, x.n_orientations, x.height, x.width))
        .unwrap_or((0, 0, 0, 0));
    let mut buf = Vec::new();
    buf.extend_from_slice(CACHE_MAGIC);
    for v in [s, o, h, w, stacks.len()] {
        buf.extend_from_slice(&(v as u32).to_le_bytes());
    }
    buf.push(DTYPE_F64);
    for st in stacks {
        if (st.n_scales, st.n_orientations, st.height, st.width) != (s, o, h, w) {
            return Err(Error::Shape("stacks in one cache file must share a shape".into()));
        }
        for d in &st.diff {
            buf.extend_from_slice(&d.to_le_bytes());
        }
        buf.extend(st.mask.iter().map(|&m| m as u8));
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_stack_cache(path: &Path) -> Result<Vec<PhaseDiffStack>> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::Parse {
        line: 0,
        message: format!("{}: {m}", path.display()),
    };
    if bytes.len() < 25 || &bytes[..4] != CACHE_MAGIC {
        return Err(bad("not a phase-difference cache"));
    }
    let field = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (s, o, h, w, count) = (field(0), field(1), field(2), field(3), field(4));
    if bytes[24] != DTYPE_F64 {
        return Err(bad("unsupported dtype"));
    }
    let n = s * o * h * w;
    if bytes.len() != 25 + count * n * 9 {
        return Err(bad("truncated cache"));
    }
    let mut pos = 25;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let diff = (0..n)
            .map(|i| f64::from_le_bytes(bytes[pos + 8 * i..pos + 8 * i + 8].try_into().unwrap()))
            .collect();
        pos += 8 * n;
        let mask = bytes[pos..pos + n].iter().map(|&b| b != 0).collect();
        pos += n;
        out.push(PhaseDiffStack {
            n_scales: s,
            n_orientations: o,
            height: h,
            width: w,
            diff,
            mask,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::grating;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(size: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(size, size, |_, _| rng.random::<f64>())
    }

    #[test]
    fn bank_construction_rule() {
        let bank = FilterBank::new(2, 4, 64).unwrap();
        assert_eq!(bank.n_filters(), 8);
        assert_eq!(bank.wavelengths(), &[4.0, 8.0]);
        let expected = [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0];
        for (a, b) in bank.orientations().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn bank_rebuild_is_bit_identical() {
        let a = FilterBank::new(3, 6, 32).unwrap();
        let b = FilterBank::new(3, 6, 32).unwrap();
        assert_eq!(a.filters, b.filters);
    }

    #[test]
    fn bank_rejects_out_of_range_parameters() {
        assert!(FilterBank::new(0, 4, 32).is_err());
        assert!(FilterBank::new(6, 4, 32).is_err());
        assert!(FilterBank::new(2, 1, 32).is_err());
        assert!(FilterBank::new(2, 9, 32).is_err());
        assert!(FilterBank::new(2, 4, 8).is_err());
    }

    #[test]
    fn filters_are_one_sided_and_dc_free() {
        let bank = FilterBank::new(2, 4, 32).unwrap();
        let n = 32;
        for s in 0..2 {
            for o in 0..4 {
                let g = bank.filter(s, o);
                assert_eq!(g[0], 0.0);
                for ky in 0..n {
                    for kx in 0..n {
                        let mirror = ((n - ky) % n) * n + (n - kx) % n;
                        let idx = ky * n + kx;
                        if idx != mirror {
                            assert!(g[idx] == 0.0 || g[mirror] == 0.0, "filter {s},{o} not one-sided at {kx},{ky}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn constant_image_has_no_amplitude() {
        let bank = FilterBank::new(2, 4, 32).unwrap();
        let flat = bank.decompose(&Image::filled(32, 32, 0.7)).unwrap();
        let textured = bank.decompose(&random_image(32, 1)).unwrap();
        let max = textured.amplitude.iter().copied().fold(0.0, f64::max);
        assert!(flat.amplitude.iter().all(|&a| a <= 1e-6 * max));
    }

    #[test]
    fn dominant_response_at_matching_scale_and_orientation() {
        let bank = FilterBank::new(2, 4, 32).unwrap();
        for (orientation_idx, theta) in [(0usize, 0.0), (2, PI / 2.0)] {
            let img = grating(32, 4.0, theta, 0.3, 0.5, 0.4);
            let map = bank.decompose(&img).unwrap();
            let mut best = (0, 0, 0.0);
            for s in 0..2 {
                for o in 0..4 {
                    let e: f64 = map.amplitude_channel(s, o).iter().sum();
                    if e > best.2 {
                        best = (s, o, e);
                    }
                }
            }
            assert_eq!((best.0, best.1), (0, orientation_idx));
        }
    }

    #[test]
    fn phase_in_range() {
        let bank = FilterBank::new(2, 4, 16).unwrap();
        let map = bank.decompose(&random_image(16, 3)).unwrap();
        assert!(map.phase.iter().all(|&p| p > -PI && p <= PI));
        assert!(map.amplitude.iter().all(|&a| a >= 0.0));
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let bank = FilterBank::new(2, 4, 16).unwrap();
        assert!(matches!(bank.decompose(&Image::filled(16, 17, 0.0)), Err(Error::Shape(_))));
        let a = bank.decompose(&random_image(16, 1)).unwrap();
        let other = FilterBank::new(2, 4, 32).unwrap().decompose(&random_image(32, 1)).unwrap();
        assert!(matches!(phase_difference(&a, &other, 0.5), Err(Error::Shape(_))));
    }

    #[test]
    fn wrapping_arithmetic() {
        assert!((wrap_phase(PI / 2.0 - (-3.0 * PI / 4.0)) - (-3.0 * PI / 4.0)).abs() < 1e-12);
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
        assert!((wrap_phase(7.0 * PI) - PI).abs() < 1e-12);
        assert_eq!(wrap_phase(0.25), 0.25);
    }

    #[test]
    fn identical_frames_give_zero_difference() {
        let bank = FilterBank::new(2, 4, 16).unwrap();
        let m = bank.decompose(&random_image(16, 9)).unwrap();
        let d = phase_difference(&m, &m, 0.5).unwrap();
        assert!(d.diff.iter().all(|&x| x == 0.0));
        assert!(d.mask.iter().any(|&m| m));
    }

    #[test]
    fn translation_matches_fourier_shift() {
        let bank = FilterBank::new(2, 4, 32).unwrap();
        for (s, &lambda) in bank.wavelengths().iter().enumerate() {
            for d in [0.25, 0.5, 1.0] {
                let shift = 2.0 * PI * d / lambda;
                let a = bank.decompose(&grating(32, lambda, 0.0, 0.0, 0.5, 0.3)).unwrap();
                let b = bank.decompose(&grating(32, lambda, 0.0, shift, 0.5, 0.3)).unwrap();
                let stack = phase_difference(&a, &b, 0.5).unwrap();
                let mean = stack.masked_mean(s, 0).unwrap();
                assert!((mean - shift).abs() <= 0.05 * shift, "λ={lambda} d={d}: {mean} vs {shift}");
            }
        }
    }

    #[test]
    fn offset_and_scale_invariance() {
        let bank = FilterBank::new(2, 4, 16).unwrap();
        let a = random_image(16, 4);
        let b = random_image(16, 5);
        let base = phase_difference(&bank.decompose(&a).unwrap(), &bank.decompose(&b).unwrap(), 0.5).unwrap();

        let ma = bank.decompose(&a).unwrap();
        let ma_off = bank.decompose(&a.map(|p| p + 0.3)).unwrap();
        for (x, y) in ma.phase.iter().zip(&ma_off.phase) {
            assert!(wrap_phase(x - y).abs() < 1e-9);
        }
        let ma_scaled = bank.decompose(&a.map(|p| 2.5 * p)).unwrap();
        for (x, y) in ma.amplitude.iter().zip(&ma_scaled.amplitude) {
            assert!((2.5 * x - y).abs() < 1e-9 * (1.0 + y));
        }

        let shifted = phase_difference(
            &bank.decompose(&a.map(|p| p + 0.3)).unwrap(),
            &bank.decompose(&b.map(|p| p + 0.3)).unwrap(),
            0.5,
        )
        .unwrap();
        let scaled = phase_difference(
            &bank.decompose(&a.map(|p| 3.0 * p)).unwrap(),
            &bank.decompose(&b.map(|p| 3.0 * p)).unwrap(),
            0.5,
        )
        .unwrap();
        for other in [&shifted, &scaled] {
            assert_eq!(other.mask, base.mask);
            for (x, y) in base.diff.iter().zip(&other.diff) {
                assert!(wrap_phase(x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sequence_contract() {
        use crate::dataio::{generate_synthetic_dataset, SynthConfig};
        let cfg = SynthConfig {
            n_videos: 1,
            frames_per_video: 5,
            ..SynthConfig::default()
        };
        let video = &generate_synthetic_dataset(&cfg).unwrap()[0];
        let bank = FilterBank::new(2, 4, 16).unwrap();
        let fwd = sequence_phase_diffs(video, &bank, 0.5).unwrap();
        assert_eq!(fwd.len(), 4);
        assert!(fwd.iter().flat_map(|s| &s.diff).all(|&d| d > -PI && d <= PI));

        let mut reversed = video.clone();
        reversed.frames.reverse();
        let rev = sequence_phase_diffs(&reversed, &bank, 0.5).unwrap();
        for (f, r) in fwd.iter().zip(rev.iter().rev()) {
            assert_eq!(f.mask, r.mask);
            for (a, b) in f.diff.iter().zip(&r.diff) {
                assert!(wrap_phase(a + b).abs() < 1e-9, "{a} vs {b}");
            }
        }

        let two = crate::dataio::VideoSequence {
            video_id: "two".into(),
            frames: video.frames[..2].to_vec(),
        };
        assert_eq!(sequence_phase_diffs(&two, &bank, 0.5).unwrap().len(), 1);
        let one = crate::dataio::VideoSequence {
            video_id: "one".into(),
            frames: video.frames[..1].to_vec(),
        };
        assert!(sequence_phase_diffs(&one, &bank, 0.5).is_err());
    }

    #[test]
    fn static_video_gives_zero_stacks() {
        let img = random_image(16, 11);
        let bank = FilterBank::new(2, 4, 16).unwrap();
        let stacks = image_phase_diffs(&[&img, &img, &img, &img], &bank, 0.5).unwrap();
        assert_eq!(stacks.len(), 3);
        assert!(stacks.iter().all(|s| s.diff.iter().all(|&d| d == 0.0)));
    }

    #[test]
    fn cache_round_trip() {
        let bank = FilterBank::new(2, 3, 16).unwrap();
        let imgs: Vec<Image> = (0..4).map(|s| random_image(16, s)).collect();
        let refs: Vec<&Image> = imgs.iter().collect();
        let stacks = image_phase_diffs(&refs, &bank, 0.5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(cache_file_name("vid", &bank, 0.5));
        write_stack_cache(&path, &stacks).unwrap();
        assert_eq!(read_stack_cache(&path).unwrap(), stacks);
        fs::write(&path, b"junk").unwrap();
        assert!(read_stack_cache(&path).is_err());
    }
}
