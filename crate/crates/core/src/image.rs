//! Grayscale rasters and square resampling.

use alloc::vec::Vec;

use crate::{math, Error, Result};

/// Row-major grayscale raster.
///
/// Loaders, the synthetic generator and [`preprocess`] keep intensities in
/// `[0, 1]`. Images produced by inverse transforms carry unclipped values; call
/// [`Image::clipped`] before display.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                what: "pixel count",
                expected: width * height,
                found: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            pixels: alloc::vec![value; width * height],
        }
    }

    pub fn zeros(side: usize) -> Self {
        Self::filled(side, side, 0.0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Side length of a square image.
    pub fn side(&self) -> Option<usize> {
        (self.width == self.height).then_some(self.width)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn clipped(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|p| p.clamp(0.0, 1.0)).collect(),
        }
    }

    /// Linearly rescales so the minimum maps to 0 and the maximum to 1.
    /// A constant image maps to all zeros.
    pub fn min_max_normalized(&self) -> Self {
        let (lo, hi) = self
            .pixels
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
                (lo.min(p), hi.max(p))
            });
        let span = hi - lo;
        let pixels = if span > 0.0 && span.is_finite() {
            self.pixels.iter().map(|p| (p - lo) / span).collect()
        } else {
            alloc::vec![0.0; self.pixels.len()]
        };
        Self {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

/// Center-crops `img` to its largest centered square and resamples that
/// square bilinearly to `side`×`side`.
///
/// Sampling uses pixel-center alignment: output pixel `i` reads source
/// coordinate `(i + 0.5) * s / side - 0.5`, clamped to the crop. Upsampling is
/// refused unless `allow_upsample` is set.
pub fn preprocess(img: &Image, side: usize, allow_upsample: bool) -> Result<Image> {
    if !side.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(side));
    }
    let crop = img.width.min(img.height);
    if crop < side && !allow_upsample {
        return Err(Error::UpsampleNotPermitted {
            from: crop,
            to: side,
        });
    }
    if crop == 0 {
        return Err(Error::DimensionMismatch {
            what: "image side",
            expected: side,
            found: 0,
        });
    }
    let top = (img.height - crop) / 2;
    let left = (img.width - crop) / 2;
    if crop == side {
        let mut pixels = Vec::with_capacity(side * side);
        for r in 0..side {
            let start = (top + r) * img.width + left;
            pixels.extend_from_slice(&img.pixels[start..start + side]);
        }
        return Image::new(side, side, pixels);
    }

    let scale = crop as f64 / side as f64;
    let taps: Vec<(usize, usize, f64)> = (0..side)
        .map(|i| {
            let src = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (crop - 1) as f64);
            let i0 = math::floor(src) as usize;
            let i1 = (i0 + 1).min(crop - 1);
            (i0, i1, src - i0 as f64)
        })
        .collect();

    let mut pixels = Vec::with_capacity(side * side);
    for &(r0, r1, tr) in &taps {
        let row0 = &img.pixels[(top + r0) * img.width + left..];
        let row1 = &img.pixels[(top + r1) * img.width + left..];
        for &(c0, c1, tc) in &taps {
            let upper = row0[c0] * (1.0 - tc) + row0[c1] * tc;
            let lower = row1[c0] * (1.0 - tc) + row1[c1] * tc;
            pixels.push(upper * (1.0 - tr) + lower * tr);
        }
    }
    Image::new(side, side, pixels)
}
