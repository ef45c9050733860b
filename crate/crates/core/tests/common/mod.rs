//! Dense reference implementations shared by the integration tests.
#![allow(dead_code)]

use hushcam_core::wavelet::WaveletSpec;

/// Single-level periodized analysis matrix for length `n`, built straight
/// from the taps: row k < n/2 is the low-pass filter shifted by 2k, row
/// n/2 + k the high-pass filter shifted by 2k.
fn analysis_1d(lo: &[f64], hi: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for k in 0..n / 2 {
        for j in 0..lo.len() {
            a[k][(2 * k + j) % n] += lo[j];
            a[n / 2 + k][(2 * k + j) % n] += hi[j];
        }
    }
    a
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let p = b[0].len();
    let mut c = vec![vec![0.0; p]; n];
    for i in 0..n {
        for k in 0..b.len() {
            for j in 0..p {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..a[0].len())
        .map(|j| a.iter().map(|r| r[j]).collect())
        .collect()
}

/// Multilevel 2D transform by repeated `H X Hᵀ` on the top-left block,
/// then stacked: approx, then coarsest to finest (bottom-left, top-right,
/// bottom-right).
pub fn oracle_forward(spec: &WaveletSpec, x: &[f64], side: usize, levels: usize) -> Vec<f64> {
    let mut grid: Vec<Vec<f64>> = x.chunks(side).map(|r| r.to_vec()).collect();
    let mut s = side;
    for _ in 0..levels {
        let h = analysis_1d(spec.low_pass(), spec.high_pass(), s);
        let block: Vec<Vec<f64>> = grid[..s].iter().map(|r| r[..s].to_vec()).collect();
        let y = matmul(&matmul(&h, &block), &transpose(&h));
        for i in 0..s {
            grid[i][..s].copy_from_slice(&y[i]);
        }
        s /= 2;
    }
    let take = |r0: usize, c0: usize, n: usize, out: &mut Vec<f64>| {
        for row in &grid[r0..r0 + n] {
            out.extend_from_slice(&row[c0..c0 + n]);
        }
    };
    let mut out = Vec::with_capacity(side * side);
    take(0, 0, s, &mut out);
    let mut b = s;
    while b < side {
        take(b, 0, b, &mut out);
        take(0, b, b, &mut out);
        take(b, b, b, &mut out);
        b *= 2;
    }
    out
}

/// Synthetic corpus compressed with one operator at `m` measurements.
pub fn compressed_corpus(
    n_per_class: usize,
    side: usize,
    m: usize,
    seed: u64,
    operator_seed: u64,
) -> (hushcam_core::Matrix, Vec<hushcam_core::dataset::Valence>) {
    use hushcam_core::dataset::{synth_dataset, SynthSpec};
    use hushcam_core::sensing::{Encoder, SensingOperator, StorageMode};
    use hushcam_core::wavelet::Transform2d;
    let data = synth_dataset(&SynthSpec::new(n_per_class, side, seed)).unwrap();
    let t = Transform2d::at_max_level(WaveletSpec::default(), side).unwrap();
    let op = SensingOperator::new(m, side * side, operator_seed, StorageMode::Dense).unwrap();
    let enc = Encoder::new(t, op).unwrap();
    let rows: Vec<Vec<f64>> = data.iter().map(|(img, _)| enc.encode(img).unwrap().y).collect();
    let labels = data.iter().map(|(_, v)| *v).collect();
    (hushcam_core::Matrix::from_rows(&rows).unwrap(), labels)
}
