//! Periodized multi-level 2D Daubechies transform.
//!
//! One analysis step on a length-`n` signal `x` produces
//!
//! ```text
//! approx[k] = sum_j lo[j] * x[(2k + j) mod n]
//! detail[k] = sum_j hi[j] * x[(2k + j) mod n],   hi[j] = (-1)^j lo[L-1-j]
//! ```
//!
//! for `k < n/2`. With orthonormal taps this is an orthogonal map, so the
//! synthesis step is its transpose. The 2D step filters every row, then every
//! column, and recurses on the low/low quadrant.
//!
//! Coefficients are stacked coarsest first: the approximation band, then for
//! each level from coarsest to finest the horizontal, vertical and diagonal
//! detail bands, each band row-major. "Horizontal" is low-pass along rows and
//! high-pass along columns; "vertical" is the reverse.

mod filters;

use alloc::vec::Vec;
use core::ops::Range;

use crate::image::Image;
use crate::{Error, Result};

/// Orthonormal Daubechies filter pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSpec {
    order: usize,
    lo: &'static [f64],
    hi: Vec<f64>,
}

impl WaveletSpec {
    /// `dbN` for `N` in `1..=10`; filter length is `2N`.
    pub fn daubechies(order: usize) -> Result<Self> {
        let lo = filters::taps(order).ok_or(Error::UnknownWavelet(order))?;
        let len = lo.len();
        let hi = (0..len)
            .map(|j| if j % 2 == 0 { lo[len - 1 - j] } else { -lo[len - 1 - j] })
            .collect();
        Ok(Self { order, lo, hi })
    }

    pub fn haar() -> Self {
        Self::daubechies(1).expect("db1 exists")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn filter_len(&self) -> usize {
        self.lo.len()
    }

    pub fn low_pass(&self) -> &[f64] {
        self.lo
    }

    pub fn high_pass(&self) -> &[f64] {
        &self.hi
    }

    /// Deepest admissible level for an image of `side` pixels.
    pub fn max_level(&self, side: usize) -> Result<usize> {
        max_level(side, self.filter_len())
    }
}

impl Default for WaveletSpec {
    fn default() -> Self {
        Self::daubechies(2).expect("db2 exists")
    }
}

/// `floor(log2(side / (filter_len - 1)))`, the deepest level at which the
/// coarsest band is still at least as long as the filter's support.
pub fn max_level(side: usize, filter_len: usize) -> Result<usize> {
    if filter_len < 2 || side < filter_len {
        return Err(Error::SideTooSmall { side, filter_len });
    }
    let support = filter_len - 1;
    let mut level = 0;
    while support << (level + 1) <= side {
        level += 1;
    }
    Ok(level)
}

/// Detail orientation within one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subband {
    Horizontal,
    Vertical,
    Diagonal,
}

/// Where each band lives in a stacked coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoeffLayout {
    side: usize,
    levels: usize,
}

impl CoeffLayout {
    pub fn new(side: usize, levels: usize) -> Result<Self> {
        if !side.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(side));
        }
        let max = side.trailing_zeros() as usize;
        if levels == 0 || levels > max {
            return Err(Error::LevelOutOfRange { level: levels, max });
        }
        Ok(Self { side, levels })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn is_empty(&self) -> bool {
        self.side == 0
    }

    /// Side of the bands at decomposition `level` (1 is finest).
    pub fn band_side(&self, level: usize) -> usize {
        self.side >> level
    }

    pub fn approx(&self) -> Range<usize> {
        let s = self.band_side(self.levels);
        0..s * s
    }

    /// Offsets of a detail band; `level` runs from 1 (finest) to `levels`.
    pub fn band(&self, level: usize, band: Subband) -> Range<usize> {
        assert!((1..=self.levels).contains(&level), "level out of range");
        let s = self.band_side(level);
        // Everything coarser than this level has exactly the size of the
        // approximation at `level`, s*s.
        let start = s * s
            * match band {
                Subband::Horizontal => 1,
                Subband::Vertical => 2,
                Subband::Diagonal => 3,
            };
        start..start + s * s
    }
}

/// Stacked wavelet coefficients with their layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    values: Vec<f64>,
    layout: CoeffLayout,
}

impl CoeffVector {
    pub fn new(values: Vec<f64>, layout: CoeffLayout) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::DimensionMismatch {
                what: "coefficient count",
                expected: layout.len(),
                found: values.len(),
            });
        }
        Ok(Self { values, layout })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> CoeffLayout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A fixed (wavelet, side, level) transform on flat pixel/coefficient slices.
#[derive(Debug, Clone)]
pub struct Transform2d {
    spec: WaveletSpec,
    layout: CoeffLayout,
}

impl Transform2d {
    pub fn new(spec: WaveletSpec, side: usize, level: usize) -> Result<Self> {
        if !side.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(side));
        }
        let max = spec.max_level(side)?;
        if level == 0 || level > max {
            return Err(Error::LevelOutOfRange { level, max });
        }
        let layout = CoeffLayout::new(side, level)?;
        Ok(Self { spec, layout })
    }

    /// Transform at the deepest admissible level.
    pub fn at_max_level(spec: WaveletSpec, side: usize) -> Result<Self> {
        let level = spec.max_level(side)?;
        Self::new(spec, side, level)
    }

    pub fn spec(&self) -> &WaveletSpec {
        &self.spec
    }

    pub fn layout(&self) -> CoeffLayout {
        self.layout
    }

    pub fn side(&self) -> usize {
        self.layout.side
    }

    pub fn level(&self) -> usize {
        self.layout.levels
    }

    pub fn len(&self) -> usize {
        self.layout.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layout.is_empty()
    }

    pub fn forward(&self, pixels: &[f64]) -> Result<Vec<f64>> {
        self.check_len(pixels.len())?;
        let side = self.side();
        let lo = self.spec.lo;
        let hi = &self.spec.hi[..];
        let mut out = alloc::vec![0.0; side * side];
        let mut cur = pixels.to_vec();
        let mut tmp = alloc::vec![0.0; side * side];
        let mut line = alloc::vec![0.0; side];
        let mut line_out = alloc::vec![0.0; side];

        for level in 1..=self.level() {
            let s = side >> (level - 1);
            let h = s / 2;
            for r in 0..s {
                analysis_1d(&cur[r * s..(r + 1) * s], &mut tmp[r * s..(r + 1) * s], lo, hi);
            }
            for c in 0..s {
                for r in 0..s {
                    line[r] = tmp[r * s + c];
                }
                analysis_1d(&line[..s], &mut line_out[..s], lo, hi);
                for r in 0..s {
                    cur[r * s + c] = line_out[r];
                }
            }
            // cur (s x s): top-left LL, top-right V, bottom-left H, bottom-right D.
            for (band, (r0, c0)) in [
                (Subband::Horizontal, (h, 0)),
                (Subband::Vertical, (0, h)),
                (Subband::Diagonal, (h, h)),
            ] {
                let dst = self.layout.band(level, band);
                let dst = &mut out[dst];
                for r in 0..h {
                    dst[r * h..(r + 1) * h]
                        .copy_from_slice(&cur[(r0 + r) * s + c0..(r0 + r) * s + c0 + h]);
                }
            }
            let mut ll = alloc::vec![0.0; h * h];
            for r in 0..h {
                ll[r * h..(r + 1) * h].copy_from_slice(&cur[r * s..r * s + h]);
            }
            cur[..h * h].copy_from_slice(&ll);
            cur.truncate(h * h);
        }
        let approx = self.layout.approx();
        out[approx].copy_from_slice(&cur);
        Ok(out)
    }

    pub fn inverse(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_len(coeffs.len())?;
        let side = self.side();
        let lo = self.spec.lo;
        let hi = &self.spec.hi[..];
        let mut cur = coeffs[self.layout.approx()].to_vec();
        let mut line = alloc::vec![0.0; side];
        let mut line_out = alloc::vec![0.0; side];

        for level in (1..=self.level()).rev() {
            let s = side >> (level - 1);
            let h = s / 2;
            let mut block = alloc::vec![0.0; s * s];
            for r in 0..h {
                block[r * s..r * s + h].copy_from_slice(&cur[r * h..(r + 1) * h]);
            }
            for (band, (r0, c0)) in [
                (Subband::Horizontal, (h, 0)),
                (Subband::Vertical, (0, h)),
                (Subband::Diagonal, (h, h)),
            ] {
                let src = &coeffs[self.layout.band(level, band)];
                for r in 0..h {
                    block[(r0 + r) * s + c0..(r0 + r) * s + c0 + h]
                        .copy_from_slice(&src[r * h..(r + 1) * h]);
                }
            }
            for c in 0..s {
                for r in 0..s {
                    line[r] = block[r * s + c];
                }
                synthesis_1d(&line[..s], &mut line_out[..s], lo, hi);
                for r in 0..s {
                    block[r * s + c] = line_out[r];
                }
            }
            for r in 0..s {
                line[..s].copy_from_slice(&block[r * s..(r + 1) * s]);
                synthesis_1d(&line[..s], &mut block[r * s..(r + 1) * s], lo, hi);
            }
            cur = block;
        }
        Ok(cur)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::DimensionMismatch {
                what: "transform input length",
                expected: self.len(),
                found: len,
            });
        }
        Ok(())
    }
}

fn analysis_1d(x: &[f64], out: &mut [f64], lo: &[f64], hi: &[f64]) {
    let n = x.len();
    let h = n / 2;
    for k in 0..h {
        let (mut a, mut d) = (0.0, 0.0);
        for (j, (&l, &g)) in lo.iter().zip(hi).enumerate() {
            let v = x[(2 * k + j) % n];
            a += l * v;
            d += g * v;
        }
        out[k] = a;
        out[h + k] = d;
    }
}

fn synthesis_1d(c: &[f64], out: &mut [f64], lo: &[f64], hi: &[f64]) {
    let n = c.len();
    let h = n / 2;
    out.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..h {
        let (a, d) = (c[k], c[h + k]);
        for (j, (&l, &g)) in lo.iter().zip(hi).enumerate() {
            out[(2 * k + j) % n] += l * a + g * d;
        }
    }
}

/// Forward transform of a square power-of-two image.
pub fn fwt2(img: &Image, spec: &WaveletSpec, level: usize) -> Result<CoeffVector> {
    let side = img.side().ok_or(Error::NotSquare {
        width: img.width(),
        height: img.height(),
    })?;
    let t = Transform2d::new(spec.clone(), side, level)?;
    let values = t.forward(img.pixels())?;
    CoeffVector::new(values, t.layout())
}

/// Inverse of [`fwt2`]. The returned image is not clipped.
pub fn ifwt2(c: &CoeffVector, spec: &WaveletSpec, level: usize, side: usize) -> Result<Image> {
    if c.layout != CoeffLayout::new(side, level)? {
        return Err(Error::LayoutMismatch { side, level });
    }
    let t = Transform2d::new(spec.clone(), side, level)?;
    Image::new(side, side, t.inverse(&c.values)?)
}

/// Sum of squared taps and sum of taps, for checking orthonormality.
pub fn tap_identities(spec: &WaveletSpec) -> (f64, f64) {
    let energy = spec.lo.iter().map(|h| h * h).sum();
    let sum = spec.lo.iter().sum();
    (energy, sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_levels() {
        assert_eq!(max_level(128, 4).unwrap(), 5);
        assert_eq!(max_level(128, 2).unwrap(), 7);
        assert_eq!(max_level(64, 20).unwrap(), 1);
        assert_eq!(max_level(128, 20).unwrap(), 2);
        assert_eq!(
            max_level(16, 20),
            Err(Error::SideTooSmall {
                side: 16,
                filter_len: 20
            })
        );
    }

    #[test]
    fn taps_are_orthonormal() {
        for order in 1..=10 {
            let spec = WaveletSpec::daubechies(order).unwrap();
            let (energy, sum) = tap_identities(&spec);
            assert!((energy - 1.0).abs() < 1e-14, "db{order} energy {energy}");
            assert!((sum - core::f64::consts::SQRT_2).abs() < 1e-14, "db{order} sum {sum}");
            let lo = spec.low_pass();
            // Even shifts are orthogonal.
            for shift in (2..lo.len()).step_by(2) {
                let c: f64 = (0..lo.len() - shift).map(|j| lo[j] * lo[j + shift]).sum();
                assert!(c.abs() < 1e-14, "db{order} shift {shift}: {c}");
            }
            // High-pass annihilates constants.
            assert!(spec.high_pass().iter().sum::<f64>().abs() < 1e-14);
        }
        assert_eq!(WaveletSpec::daubechies(11), Err(Error::UnknownWavelet(11)));
    }

    #[test]
    fn layout_partitions_the_vector() {
        let layout = CoeffLayout::new(32, 3).unwrap();
        let mut covered = alloc::vec![0u8; layout.len()];
        let mut ranges = alloc::vec![layout.approx()];
        for level in (1..=3).rev() {
            for b in [Subband::Horizontal, Subband::Vertical, Subband::Diagonal] {
                ranges.push(layout.band(level, b));
            }
        }
        // Contiguous, in stacking order.
        for w in ranges.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        for r in ranges {
            for i in r {
                covered[i] += 1;
            }
        }
        assert!(covered.iter().all(|&c| c == 1));
    }

    #[test]
    fn constant_image_concentrates_in_approx() {
        let spec = WaveletSpec::default();
        let img = Image::filled(32, 32, 0.25);
        let level = 3;
        let c = fwt2(&img, &spec, level).unwrap();
        let approx = c.layout().approx();
        for (i, &v) in c.values().iter().enumerate() {
            if approx.contains(&i) {
                assert!((v - 0.25 * 8.0).abs() < 1e-12);
            } else {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let spec = WaveletSpec::daubechies(3).unwrap();
        let c = fwt2(&Image::zeros(16), &spec, 1).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.0));
        let img = ifwt2(&c, &spec, 1, 16).unwrap();
        assert!(img.pixels().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_levels_and_layouts() {
        let spec = WaveletSpec::default();
        let img = Image::zeros(16);
        assert!(matches!(fwt2(&img, &spec, 0), Err(Error::LevelOutOfRange { .. })));
        assert!(matches!(fwt2(&img, &spec, 3), Err(Error::LevelOutOfRange { .. })));
        let c = fwt2(&img, &spec, 2).unwrap();
        assert_eq!(
            ifwt2(&c, &spec, 1, 16),
            Err(Error::LayoutMismatch { side: 16, level: 1 })
        );
        let rect = Image::filled(16, 8, 0.0);
        assert!(matches!(fwt2(&rect, &spec, 1), Err(Error::NotSquare { .. })));
    }
}
