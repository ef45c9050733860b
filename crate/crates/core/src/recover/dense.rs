//! Small dense kernels: LU with partial pivoting and an incremental QR.

use alloc::vec::Vec;

use crate::math;

const LU_PANEL: usize = 32;
const LU_STRIPE: usize = 512;

/// `y -= a x`.
fn axpy_neg(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi -= a * xi;
    }
}

/// Row-major LU factorisation with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub(crate) struct LuFactor {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactor {
    /// Returns `None` when a pivot falls below `n * eps * max|A|`.
    ///
    /// Right-looking and blocked by column panels. Every entry receives its
    /// rank-one updates in the same order as the textbook loop, so the result
    /// does not depend on the block size.
    pub(crate) fn factor(n: usize, mut a: Vec<f64>) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let scale = math::norm_inf(&a);
        let tiny = scale * f64::EPSILON * n as f64;
        let mut perm: Vec<usize> = (0..n).collect();
        for k0 in (0..n).step_by(LU_PANEL) {
            let k1 = (k0 + LU_PANEL).min(n);
            for k in k0..k1 {
                let (p, pmax) = (k..n)
                    .map(|i| (i, a[i * n + k].abs()))
                    .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
                if !(pmax > tiny) {
                    return None;
                }
                if p != k {
                    let (head, tail) = a.split_at_mut(p * n);
                    head[k * n..(k + 1) * n].swap_with_slice(&mut tail[..n]);
                    perm.swap(k, p);
                }
                let (head, tail) = a.split_at_mut((k + 1) * n);
                let pivot_row = &head[k * n..];
                let pivot = pivot_row[k];
                for row in tail.chunks_exact_mut(n) {
                    let l = row[k] / pivot;
                    row[k] = l;
                    if l != 0.0 {
                        axpy_neg(l, &pivot_row[k + 1..k1], &mut row[k + 1..k1]);
                    }
                }
            }
            if k1 == n {
                break;
            }
            // Columns right of the panel, one L2-sized stripe at a time.
            for c0 in (k1..n).step_by(LU_STRIPE) {
                let c1 = (c0 + LU_STRIPE).min(n);
                // U12 = L11⁻¹ A12 with unit lower L11.
                for i in k0 + 1..k1 {
                    let (head, tail) = a.split_at_mut(i * n);
                    let row = &mut tail[..n];
                    for p in k0..i {
                        let l = row[p];
                        if l != 0.0 {
                            axpy_neg(l, &head[p * n + c0..p * n + c1], &mut row[c0..c1]);
                        }
                    }
                }
                // A22 -= L21 U12.
                let (head, tail) = a.split_at_mut(k1 * n);
                for row in tail.chunks_exact_mut(n) {
                    for p in k0..k1 {
                        let l = row[p];
                        if l != 0.0 {
                            axpy_neg(l, &head[p * n + c0..p * n + c1], &mut row[c0..c1]);
                        }
                    }
                }
            }
        }
        Some(Self { n, lu: a, perm })
    }

    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s = math::dot(row, &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s = math::dot(&row[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / row[i];
        }
        x
    }
}

/// Thin QR grown one column at a time by twice-repeated modified
/// Gram-Schmidt.
#[derive(Debug, Clone, Default)]
pub(crate) struct IncrementalQr {
    q: Vec<Vec<f64>>,
    // Column-major upper triangle: r[j] holds R[0..=j, j].
    r: Vec<Vec<f64>>,
}

impl IncrementalQr {
    pub(crate) fn len(&self) -> usize {
        self.q.len()
    }

    pub(crate) fn q(&self, i: usize) -> &[f64] {
        &self.q[i]
    }

    /// Appends `a`; returns `false` (and leaves the factor untouched) when `a`
    /// is numerically in the span of the current columns.
    pub(crate) fn push(&mut self, a: &[f64]) -> bool {
        let anorm = math::norm2(a);
        let mut v = a.to_vec();
        let mut coeffs = alloc::vec![0.0; self.q.len() + 1];
        for _ in 0..2 {
            for (i, q) in self.q.iter().enumerate() {
                let c = math::dot(q, &v);
                coeffs[i] += c;
                for (x, &qi) in v.iter_mut().zip(q) {
                    *x -= c * qi;
                }
            }
        }
        let nrm = math::norm2(&v);
        if !(nrm > 1e-10 * anorm) {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= nrm);
        *coeffs.last_mut().expect("nonempty") = nrm;
        self.q.push(v);
        self.r.push(coeffs);
        true
    }

    /// Solves `R c = Qᵀ b`.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let k = self.q.len();
        let mut c: Vec<f64> = self.q.iter().map(|q| math::dot(q, b)).collect();
        for j in (0..k).rev() {
            c[j] /= self.r[j][j];
            let cj = c[j];
            for (i, ci) in c.iter_mut().enumerate().take(j) {
                *ci -= self.r[j][i] * cj;
            }
        }
        c
    }
}
