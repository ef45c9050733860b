//! Seeded binary sensing operators and the compression step `y = Φ W x`.
//!
//! Entries are i.i.d. Bernoulli(1/2) over `{0, 1}`. The bits come from
//! ChaCha8 seeded with `seed_from_u64(seed)`, consumed as little-endian `u64`
//! words in row-major order: row `i` owns `ceil(n / 64)` consecutive words and
//! entry `(i, 64w + b)` is bit `b` of word `w` of that row. Bits past column
//! `n` in the last word of a row are discarded. [`StorageMode::Regenerate`]
//! replays the same stream on every application instead of keeping the bits.

use alloc::vec::Vec;

use rand::RngCore;

use crate::dataset::Valence;
use crate::image::Image;
use crate::rng::{seeded, ChaCha8Rng};
use crate::wavelet::Transform2d;
use crate::{Error, Result};

/// A real linear map with an adjoint, as used by the recovery solvers.
pub trait LinearOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `out = A x`. Lengths are the caller's responsibility.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    /// `out = Aᵀ r`.
    fn adjoint_into(&self, r: &[f64], out: &mut [f64]);

    /// Euclidean norm of column `j`.
    fn column_norm(&self, j: usize) -> f64 {
        let mut e = alloc::vec![0.0; self.cols()];
        e[j] = 1.0;
        let mut col = alloc::vec![0.0; self.rows()];
        self.apply_into(&e, &mut col);
        crate::math::norm2(&col)
    }

    fn column(&self, j: usize) -> Vec<f64> {
        let mut e = alloc::vec![0.0; self.cols()];
        e[j] = 1.0;
        let mut col = alloc::vec![0.0; self.rows()];
        self.apply_into(&e, &mut col);
        col
    }

    /// Sum of squared entries.
    fn frobenius_sq(&self) -> f64 {
        (0..self.cols())
            .map(|j| {
                let c = self.column_norm(j);
                c * c
            })
            .sum()
    }

    /// Row-major dense copy.
    fn dense_rows(&self) -> Vec<f64> {
        let (m, n) = (self.rows(), self.cols());
        let mut out = alloc::vec![0.0; m * n];
        for j in 0..n {
            for (i, v) in self.column(j).into_iter().enumerate() {
                out[i * n + j] = v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum StorageMode {
    /// Bits held in memory, `m * ceil(n/64)` words.
    Dense,
    /// Rows re-derived from the seed on every application.
    Regenerate,
}

#[derive(Debug, Clone)]
enum Storage {
    /// Row-major words plus the transpose, `n * ceil(m/64)` words with
    /// column `j` contiguous.
    Dense { rows: Vec<u64>, cols: Vec<u64> },
    Regenerate,
}

/// Binary `m × n` operator fully determined by `(m, n, seed)`.
#[derive(Debug, Clone)]
pub struct SensingOperator {
    m: usize,
    n: usize,
    seed: u64,
    words_per_row: usize,
    storage: Storage,
    column_ones: Vec<u32>,
}

impl SensingOperator {
    pub fn new(m: usize, n: usize, seed: u64, mode: StorageMode) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::InvalidMeasurementCount { m, n });
        }
        let words_per_row = n.div_ceil(64);
        let mut rng = seeded(seed);
        let mut column_ones = alloc::vec![0u32; n];
        let mut dense = match mode {
            StorageMode::Dense => Vec::with_capacity(m * words_per_row),
            StorageMode::Regenerate => Vec::new(),
        };
        let mut row = alloc::vec![0u64; words_per_row];
        for _ in 0..m {
            fill_row(&mut rng, &mut row, n);
            for (w, &word) in row.iter().enumerate() {
                for_each_bit(word, w * 64, |j| column_ones[j] += 1);
            }
            if mode == StorageMode::Dense {
                dense.extend_from_slice(&row);
            }
        }
        let storage = match mode {
            StorageMode::Dense => {
                let wpc = m.div_ceil(64);
                let mut cols = alloc::vec![0u64; n * wpc];
                for_each_block_transposed(&dense, m, n, words_per_row, |blk, j, word| {
                    cols[j * wpc + blk] = word;
                });
                Storage::Dense { rows: dense, cols }
            }
            StorageMode::Regenerate => Storage::Regenerate,
        };
        Ok(Self {
            m,
            n,
            seed,
            words_per_row,
            storage,
            column_ones,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> StorageMode {
        match self.storage {
            Storage::Dense { .. } => StorageMode::Dense,
            Storage::Regenerate => StorageMode::Regenerate,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> u8 {
        assert!(i < self.m && j < self.n, "entry out of bounds");
        let mut found = 0;
        self.with_rows(|row, words| {
            if row == i {
                found = ((words[j / 64] >> (j % 64)) & 1) as u8;
            }
        });
        found
    }

    /// Number of ones in column `j`.
    pub fn column_ones(&self, j: usize) -> u32 {
        self.column_ones[j]
    }

    /// Total number of ones.
    pub fn ones(&self) -> u64 {
        self.column_ones.iter().map(|&c| c as u64).sum()
    }

    /// Row-major dense copy as 0.0/1.0.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.m * self.n];
        let n = self.n;
        self.with_rows(|i, words| {
            for (w, &word) in words.iter().enumerate() {
                for_each_bit(word, w * 64, |j| out[i * n + j] = 1.0);
            }
        });
        out
    }

    /// `Φ s`.
    pub fn apply(&self, s: &[f64]) -> Result<Vec<f64>> {
        if s.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "sensing input length",
                expected: self.n,
                found: s.len(),
            });
        }
        let mut out = alloc::vec![0.0; self.m];
        self.apply_into(s, &mut out);
        Ok(out)
    }

    /// `Φᵀ r`.
    pub fn apply_adjoint(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.m {
            return Err(Error::DimensionMismatch {
                what: "adjoint input length",
                expected: self.m,
                found: r.len(),
            });
        }
        let mut out = alloc::vec![0.0; self.n];
        self.adjoint_into(r, &mut out);
        Ok(out)
    }

    fn with_rows(&self, mut f: impl FnMut(usize, &[u64])) {
        let wpr = self.words_per_row;
        match &self.storage {
            Storage::Dense { rows, .. } => {
                for (i, row) in rows.chunks_exact(wpr).enumerate() {
                    f(i, row);
                }
            }
            Storage::Regenerate => {
                let mut rng = seeded(self.seed);
                let mut row = alloc::vec![0u64; wpr];
                for i in 0..self.m {
                    fill_row(&mut rng, &mut row, self.n);
                    f(i, &row);
                }
            }
        }
    }
}

impl LinearOperator for SensingOperator {
    fn rows(&self) -> usize {
        self.m
    }

    fn cols(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let wpr = self.words_per_row;
        let table = nibble_table(x, wpr);
        match &self.storage {
            Storage::Dense { rows, .. } => {
                // Column tiles keep the table slice cache resident; per-row
                // accumulators preserve the untiled summation order.
                let mut accs = alloc::vec![[0.0f64; 4]; self.m];
                for w0 in (0..wpr).step_by(APPLY_TILE_WORDS) {
                    let w1 = (w0 + APPLY_TILE_WORDS).min(wpr);
                    let slice = &table[w0 * 256..w1 * 256];
                    for (acc, row) in accs.iter_mut().zip(rows.chunks_exact(wpr)) {
                        accumulate(slice, &row[w0..w1], acc);
                    }
                }
                for (o, acc) in out.iter_mut().zip(accs) {
                    *o = combine(acc);
                }
            }
            Storage::Regenerate => self.with_rows(|i, words| {
                let mut acc = [0.0; 4];
                accumulate(&table, words, &mut acc);
                out[i] = combine(acc);
            }),
        }
    }

    fn adjoint_into(&self, r: &[f64], out: &mut [f64]) {
        let wpc = self.m.div_ceil(64);
        let table = nibble_table(r, wpc);
        match &self.storage {
            Storage::Dense { cols, .. } => {
                for (o, words) in out.iter_mut().zip(cols.chunks_exact(wpc)) {
                    let mut acc = [0.0; 4];
                    accumulate(&table, words, &mut acc);
                    *o = combine(acc);
                }
            }
            Storage::Regenerate => {
                // Same per-column accumulation order as the dense path, one
                // 64-row block at a time.
                let mut accs = alloc::vec![[0.0f64; 4]; self.n];
                let wpr = self.words_per_row;
                let mut rng = seeded(self.seed);
                let mut block = alloc::vec![0u64; 64 * wpr];
                for blk in 0..wpc {
                    let rows = (self.m - 64 * blk).min(64);
                    block.iter_mut().for_each(|w| *w = 0);
                    for row in block.chunks_exact_mut(wpr).take(rows) {
                        fill_row(&mut rng, row, self.n);
                    }
                    let slice = &table[blk * 256..(blk + 1) * 256];
                    for_each_block_transposed(&block, 64, self.n, wpr, |_, j, word| {
                        accumulate(slice, &[word], &mut accs[j]);
                    });
                }
                for (o, acc) in out.iter_mut().zip(accs) {
                    *o = combine(acc);
                }
            }
        }
    }

    fn column_norm(&self, j: usize) -> f64 {
        crate::math::sqrt(self.column_ones[j] as f64)
    }

    fn column(&self, j: usize) -> Vec<f64> {
        let mut col = alloc::vec![0.0; self.m];
        self.with_rows(|i, words| col[i] = ((words[j / 64] >> (j % 64)) & 1) as f64);
        col
    }

    fn frobenius_sq(&self) -> f64 {
        self.ones() as f64
    }

    fn dense_rows(&self) -> Vec<f64> {
        self.to_dense()
    }
}

fn fill_row(rng: &mut ChaCha8Rng, row: &mut [u64], n: usize) {
    for word in row.iter_mut() {
        *word = rng.next_u64();
    }
    let tail = n % 64;
    if tail != 0 {
        if let Some(last) = row.last_mut() {
            *last &= (1u64 << tail) - 1;
        }
    }
}

const APPLY_TILE_WORDS: usize = 8;

/// Subset sums of `v` over groups of four consecutive entries:
/// `t[16 g + b] = Σ v[4 g + k]` over the set bits `k` of `b`. Covers
/// `words * 64` entries; positions past `v.len()` count as zero.
fn nibble_table(v: &[f64], words: usize) -> Vec<f64> {
    let groups = words * 16;
    let mut t = alloc::vec![0.0; groups * 16];
    for (g, chunk) in t.chunks_exact_mut(16).enumerate() {
        for b in 1..16usize {
            let idx = 4 * g + b.trailing_zeros() as usize;
            let val = v.get(idx).copied().unwrap_or(0.0);
            chunk[b] = chunk[b & (b - 1)] + val;
        }
    }
    t
}

/// Adds the table entries selected by each nibble of `words`, nibble `k` of
/// a word going to accumulator `k % 4`.
#[inline]
fn accumulate(table: &[f64], words: &[u64], acc: &mut [f64; 4]) {
    for (t, &word) in table.chunks_exact(256).zip(words) {
        let t: &[f64; 256] = t.try_into().expect("chunk of 256");
        for k in 0..16 {
            acc[k & 3] += t[(16 * k + ((word >> (4 * k)) & 15) as usize) & 255];
        }
    }
}

#[inline]
fn combine(acc: [f64; 4]) -> f64 {
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// Walks `rows` (row-major, `wpr` words per row, `m` rows) in 64-row blocks
/// and reports, for every block and column `j < n`, the 64-bit word whose bit
/// `i` is the entry in row `64 blk + i`.
fn for_each_block_transposed(
    rows: &[u64],
    m: usize,
    n: usize,
    wpr: usize,
    mut f: impl FnMut(usize, usize, u64),
) {
    let mut tile = [0u64; 64];
    for blk in 0..m.div_ceil(64) {
        let r0 = 64 * blk;
        let count = (m - r0).min(64);
        for w in 0..wpr {
            for (i, t) in tile.iter_mut().enumerate() {
                *t = if i < count { rows[(r0 + i) * wpr + w] } else { 0 };
            }
            transpose64(&mut tile);
            for (b, &word) in tile.iter().enumerate() {
                let j = 64 * w + b;
                if j < n {
                    f(blk, j, word);
                }
            }
        }
    }
}

/// In-place transpose of a 64×64 bit matrix where bit `j` of `a[i]` is
/// entry `(i, j)`.
fn transpose64(a: &mut [u64; 64]) {
    let mut j = 32;
    let mut mask: u64 = 0x0000_0000_FFFF_FFFF;
    while j != 0 {
        let mut k = 0;
        while k < 64 {
            let t = ((a[k] >> j) ^ a[k + j]) & mask;
            a[k] ^= t << j;
            a[k + j] ^= t;
            k = (k + j + 1) & !j;
        }
        j >>= 1;
        mask ^= mask << j;
    }
}

#[inline]
fn for_each_bit(mut word: u64, base: usize, mut f: impl FnMut(usize)) {
    while word != 0 {
        let b = word.trailing_zeros() as usize;
        f(base + b);
        word &= word - 1;
    }
}

/// Dense operator for `(m, n, seed)`.
pub fn gen_operator(m: usize, n: usize, seed: u64) -> Result<SensingOperator> {
    SensingOperator::new(m, n, seed, StorageMode::Dense)
}

/// Percentage of measurements kept: `100 m / n`.
pub fn compression_ratio(m: usize, n: usize) -> f64 {
    100.0 * m as f64 / n as f64
}

/// Measurement vector of one image, the only representation the pipeline
/// persists.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompressedSample {
    pub y: Vec<f64>,
    pub label: Option<Valence>,
    pub operator_seed: u64,
}

impl CompressedSample {
    pub fn m(&self) -> usize {
        self.y.len()
    }

    pub fn with_label(mut self, label: Valence) -> Self {
        self.label = Some(label);
        self
    }
}

/// Wavelet transform followed by sensing: the acquisition pipeline.
#[derive(Debug, Clone)]
pub struct Encoder {
    transform: Transform2d,
    op: SensingOperator,
}

impl Encoder {
    pub fn new(transform: Transform2d, op: SensingOperator) -> Result<Self> {
        if op.n() != transform.len() {
            return Err(Error::DimensionMismatch {
                what: "operator width",
                expected: transform.len(),
                found: op.n(),
            });
        }
        Ok(Self { transform, op })
    }

    pub fn transform(&self) -> &Transform2d {
        &self.transform
    }

    pub fn operator(&self) -> &SensingOperator {
        &self.op
    }

    pub fn encode(&self, img: &Image) -> Result<CompressedSample> {
        if img.side() != Some(self.transform.side()) {
            return Err(Error::DimensionMismatch {
                what: "image side",
                expected: self.transform.side(),
                found: img.width(),
            });
        }
        let coeffs = self.transform.forward(img.pixels())?;
        Ok(CompressedSample {
            y: self.op.apply(&coeffs)?,
            label: None,
            operator_seed: self.op.seed(),
        })
    }
}

/// `y = Φ · fwt2(img)`.
pub fn compress_image(
    img: &Image,
    spec: &crate::wavelet::WaveletSpec,
    level: usize,
    op: &SensingOperator,
) -> Result<CompressedSample> {
    let side = img.side().ok_or(Error::NotSquare {
        width: img.width(),
        height: img.height(),
    })?;
    let enc = Encoder::new(Transform2d::new(spec.clone(), side, level)?, op.clone())?;
    enc.encode(img)
}
