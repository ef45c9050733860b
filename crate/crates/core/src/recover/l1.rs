use alloc::vec::Vec;

use crate::{math, Error, Result};

/// Euclidean projection of `v` onto `{w : ‖w‖₁ ≤ tau}`.
///
/// Soft-thresholds at the exact level found by sorting magnitudes and
/// scanning the cumulative sums, `O(n log n)`.
pub fn project_l1(v: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau >= 0.0) {
        return Err(Error::NegativeRadius(tau));
    }
    let mut out = v.to_vec();
    project_l1_in_place(&mut out, tau);
    Ok(out)
}

pub(crate) fn project_l1_in_place(v: &mut [f64], tau: f64) {
    if math::norm1(v) <= tau {
        return;
    }
    if tau == 0.0 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - tau) / (j + 1) as f64;
        if u > t {
            theta = t;
        } else {
            break;
        }
    }
    soft_threshold(v, theta);
    // Rounding can leave the norm a few ulps above tau; nudge the threshold.
    let mut excess = math::norm1(v) - tau;
    let mut guard = 0;
    while excess > 0.0 && guard < 8 {
        let active = v.iter().filter(|x| **x != 0.0).count().max(1);
        let bump = excess / active as f64 + f64::EPSILON * tau;
        soft_threshold(v, bump);
        excess = math::norm1(v) - tau;
        guard += 1;
    }
}

fn soft_threshold(v: &mut [f64], theta: f64) {
    for x in v.iter_mut() {
        let m = x.abs() - theta;
        *x = if m > 0.0 { m.copysign(*x) } else { 0.0 };
    }
}
