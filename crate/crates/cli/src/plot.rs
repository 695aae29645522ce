//! Static PNG figures: label density before/after smoothing, and the 2D
//! valence-arousal histogram.

use std::path::Path;

use image::{Rgb, RgbImage};
use vaest::dataio::Va;
use vaest::lds::bin_index;

use crate::Failure;

const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);
const AXIS: Rgb<u8> = Rgb([40, 40, 40]);
const EMPIRICAL: Rgb<u8> = Rgb([170, 190, 215]);
const SMOOTHED: Rgb<u8> = Rgb([200, 40, 40]);
const MARGIN: u32 = 24;

fn fill_rect(img: &mut RgbImage, x0: u32, y0: u32, x1: u32, y1: u32, color: Rgb<u8>) {
    for y in y0.min(img.height())..y1.min(img.height()) {
        for x in x0.min(img.width())..x1.min(img.width()) {
            img.put_pixel(x, y, color);
        }
    }
}

fn line(img: &mut RgbImage, (x0, y0): (f64, f64), (x1, y1): (f64, f64), color: Rgb<u8>) {
    let steps = ((x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize).max(1);
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let (x, y) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        for (dx, dy) in [(0.0, 0.0), (0.0, 1.0)] {
            let (px, py) = ((x + dx).round(), (y + dy).round());
            if px >= 0.0 && py >= 0.0 && (px as u32) < img.width() && (py as u32) < img.height() {
                img.put_pixel(px as u32, py as u32, color);
            }
        }
    }
}

fn save(img: &RgbImage, path: &Path) -> Result<(), Failure> {
    img.save(path)
        .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))
}

/// Bars for the empirical density, a line for the smoothed one. Both are
/// normalized to unit mass so they share an axis.
pub fn density_plot(counts: &[u64], smoothed: &[f64], width: u32, height: u32, path: &Path) -> Result<(), Failure> {
    assert_eq!(counts.len(), smoothed.len());
    let mut img = RgbImage::from_pixel(width, height, BACKGROUND);
    let n = counts.len();
    let total_c = counts.iter().sum::<u64>().max(1) as f64;
    let total_s = smoothed.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let emp: Vec<f64> = counts.iter().map(|&c| c as f64 / total_c).collect();
    let smo: Vec<f64> = smoothed.iter().map(|&d| d / total_s).collect();
    let top = emp.iter().chain(&smo).copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);

    let (pw, ph) = ((width - 2 * MARGIN) as f64, (height - 2 * MARGIN) as f64);
    let x_of = |b: f64| MARGIN as f64 + pw * b / n as f64;
    let y_of = |v: f64| (height - MARGIN) as f64 - ph * v / top;
    for (b, &v) in emp.iter().enumerate() {
        let (x0, x1) = (x_of(b as f64).floor() as u32, x_of(b as f64 + 1.0).ceil() as u32);
        fill_rect(&mut img, x0, y_of(v).round() as u32, x1.max(x0 + 1), height - MARGIN, EMPIRICAL);
    }
    for b in 1..n {
        let p = (x_of(b as f64 - 0.5), y_of(smo[b - 1]));
        let q = (x_of(b as f64 + 0.5), y_of(smo[b]));
        line(&mut img, p, q, SMOOTHED);
    }
    let (l, r, bottom) = (MARGIN as f64, (width - MARGIN) as f64, (height - MARGIN) as f64);
    line(&mut img, (l, bottom), (r, bottom), AXIS);
    line(&mut img, (l, MARGIN as f64), (l, bottom), AXIS);
    save(&img, path)
}

/// Counts on a `cells × cells` grid over `[-1, 1]²`; row 0 is the lowest
/// arousal. Sentinel frames are skipped.
pub fn va_histogram(labels: &[Va], cells: usize) -> Result<Vec<Vec<u64>>, Failure> {
    let mut grid = vec![vec![0u64; cells]; cells];
    for l in labels.iter().filter(|l| !l.is_sentinel()) {
        let col = bin_index(l.valence, cells)?;
        let row = bin_index(l.arousal, cells)?;
        grid[row][col] += 1;
    }
    Ok(grid)
}

/// Largest over smallest cell count; infinite when a cell is empty.
pub fn cell_ratio(grid: &[Vec<u64>]) -> f64 {
    let cells = grid.iter().flatten();
    let max = cells.clone().copied().max().unwrap_or(0);
    let min = cells.copied().min().unwrap_or(0);
    if min == 0 {
        f64::INFINITY
    } else {
        max as f64 / min as f64
    }
}

/// Heat map of `ln(1 + count)`, valence to the right, arousal upwards.
pub fn histogram_plot(grid: &[Vec<u64>], size: u32, path: &Path) -> Result<(), Failure> {
    let cells = grid.len() as u32;
    let cell_px = ((size - 2 * MARGIN) / cells).max(1);
    let side = cell_px * cells + 2 * MARGIN;
    let mut img = RgbImage::from_pixel(side, side, BACKGROUND);
    let top = grid.iter().flatten().map(|&c| (c as f64).ln_1p()).fold(0.0, f64::max);
    for (row, counts) in grid.iter().enumerate() {
        for (col, &c) in counts.iter().enumerate() {
            let t = if top > 0.0 { (c as f64).ln_1p() / top } else { 0.0 };
            let shade = |lo: f64, hi: f64| (lo + t * (hi - lo)).round() as u8;
            let color = Rgb([shade(250.0, 20.0), shade(250.0, 60.0), shade(250.0, 140.0)]);
            let x0 = MARGIN + col as u32 * cell_px;
            let y0 = MARGIN + (cells - 1 - row as u32) * cell_px;
            fill_rect(&mut img, x0, y0, x0 + cell_px, y0 + cell_px, color);
        }
    }
    let (lo, hi) = (MARGIN as f64, (side - MARGIN) as f64);
    let mid = (lo + hi) / 2.0;
    line(&mut img, (lo, mid), (hi, mid), AXIS);
    line(&mut img, (mid, lo), (mid, hi), AXIS);
    save(&img, path)
}
