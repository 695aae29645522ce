//! Browser bindings for three small views of the pipeline: LDS density and
//! weight curves for a skewed label sample, the phase-difference readout for
//! a shifted grating, and a CCC calculator.

use std::f64::consts::PI;

use vaest::dataio::grating;
use vaest::eval::{ccc_detailed, pearson, Degeneracy};
use vaest::lds::{estimate_target, KernelKind, LdsParams, SmoothingKernel};
use vaest::phasediff::{phase_difference, FilterBank};
use wasm_bindgen::prelude::*;

fn js_err(e: vaest::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Histogram, smoothed density and weights for one label sample.
#[wasm_bindgen]
pub struct LdsCurves {
    counts: Vec<f64>,
    density: Vec<f64>,
    weights: Vec<f64>,
}

#[wasm_bindgen]
impl LdsCurves {
    #[wasm_bindgen(getter)]
    pub fn counts(&self) -> Vec<f64> {
        self.counts.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn density(&self) -> Vec<f64> {
        self.density.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn weights(&self) -> Vec<f64> {
        self.weights.clone()
    }
}

/// `n` labels at evenly spaced quantiles of `2 u^(1+skew) - 1`, so
/// `skew = 0` is uniform and larger values crowd labels towards -1.
pub fn skewed_labels(n: usize, skew: f64) -> Vec<f64> {
    (0..n)
        .map(|i| 2.0 * ((i as f64 + 0.5) / n as f64).powf(1.0 + skew) - 1.0)
        .collect()
}

#[wasm_bindgen]
pub fn lds_curves(
    n_labels: usize,
    skew: f64,
    n_bins: usize,
    kernel: &str,
    bandwidth: f64,
    half_width: usize,
    clip_max: f64,
) -> Result<LdsCurves, JsValue> {
    let kind: KernelKind = kernel.parse().map_err(js_err)?;
    let kernel = match kind {
        KernelKind::Delta => SmoothingKernel::delta(),
        _ => SmoothingKernel::new(kind, bandwidth, half_width).map_err(js_err)?,
    };
    let params = LdsParams {
        n_bins,
        kernel,
        clip_max,
    };
    let lds = estimate_target(&skewed_labels(n_labels.max(1), skew), &params).map_err(js_err)?;
    Ok(LdsCurves {
        counts: lds.histogram.counts.iter().map(|&c| c as f64).collect(),
        density: lds.density.density,
        weights: lds.weights.weights,
    })
}

/// Phase-difference readout for a grating moved by `shift` pixels.
#[wasm_bindgen]
pub struct ShiftReadout {
    size: usize,
    measured: f64,
    expected: f64,
    diff: Vec<f64>,
}

#[wasm_bindgen]
impl ShiftReadout {
    #[wasm_bindgen(getter)]
    pub fn size(&self) -> usize {
        self.size
    }

    /// Masked mean phase difference at the matched filter, radians.
    #[wasm_bindgen(getter)]
    pub fn measured(&self) -> f64 {
        self.measured
    }

    /// `2π · shift / wavelength`.
    #[wasm_bindgen(getter)]
    pub fn expected(&self) -> f64 {
        self.expected
    }

    /// Per-pixel wrapped difference of the matched channel; masked pixels are 0.
    #[wasm_bindgen(getter)]
    pub fn diff(&self) -> Vec<f64> {
        self.diff.clone()
    }
}

/// Shifts a grating at the centre wavelength of `scale` along orientation
/// `orientation` of a 2-scale, 4-orientation bank on a 32 px frame.
#[wasm_bindgen]
pub fn phase_shift(shift: f64, scale: usize, orientation: usize) -> Result<ShiftReadout, JsValue> {
    let size = 32;
    let bank = FilterBank::new(2, 4, size).map_err(js_err)?;
    if scale >= bank.n_scales() || orientation >= bank.n_orientations() {
        return Err(JsValue::from_str("scale or orientation out of range"));
    }
    let wavelength = bank.wavelengths()[scale];
    let theta = bank.orientations()[orientation];
    let k = 2.0 * PI / wavelength;
    let a = grating(size, wavelength, theta, 0.0, 0.5, 0.4);
    let b = grating(size, wavelength, theta, k * shift, 0.5, 0.4);
    let stack = phase_difference(
        &bank.decompose(&a).map_err(js_err)?,
        &bank.decompose(&b).map_err(js_err)?,
        0.5,
    )
    .map_err(js_err)?;
    let (diff, _) = stack.channel(scale, orientation);
    Ok(ShiftReadout {
        size,
        measured: stack.masked_mean(scale, orientation).unwrap_or(0.0),
        expected: k * shift,
        diff: diff.to_vec(),
    })
}

/// CCC, Pearson correlation and a degeneracy note for two sequences.
#[wasm_bindgen]
pub struct CccResult {
    ccc: f64,
    pearson: f64,
    note: String,
}

#[wasm_bindgen]
impl CccResult {
    #[wasm_bindgen(getter)]
    pub fn ccc(&self) -> f64 {
        self.ccc
    }

    #[wasm_bindgen(getter)]
    pub fn pearson(&self) -> f64 {
        self.pearson
    }

    #[wasm_bindgen(getter)]
    pub fn note(&self) -> String {
        self.note.clone()
    }
}

/// Parses comma- or whitespace-separated numbers.
pub fn parse_numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: {t:?}")))
        .collect()
}

#[wasm_bindgen]
pub fn ccc_of(x: &str, y: &str) -> Result<CccResult, JsValue> {
    let x = parse_numbers(x).map_err(|e| JsValue::from_str(&e))?;
    let y = parse_numbers(y).map_err(|e| JsValue::from_str(&e))?;
    let c = ccc_detailed(&x, &y).map_err(js_err)?;
    let note = match c.degeneracy {
        Some(Degeneracy::ConstantEqual) => "both sequences constant and equal: reported as 1",
        Some(Degeneracy::ConstantUnequal) => "both sequences constant and different: reported as 0",
        None => "",
    };
    Ok(CccResult {
        ccc: c.value,
        pearson: pearson(&x, &y).map_err(js_err)?,
        note: note.to_string(),
    })
}
