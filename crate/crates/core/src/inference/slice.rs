//! Univariate slice sampling with interval doubling and shrinkage.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

/// One slice-sampling update of `x0` under the unnormalized log density `log_f`.
///
/// The initial interval has width `w` and is doubled at most `max_doublings` times; proposals
/// are shrunk toward `x0` and screened with the doubling acceptance test, so the update leaves
/// the target invariant. `log_f` should return `-inf` outside the support.
pub fn slice_sample<R, F>(x0: f64, log_f: F, w: f64, max_doublings: u32, rng: &mut R) -> f64
where
    R: Rng + ?Sized,
    F: Fn(f64) -> f64,
{
    let e: f64 = Exp1.sample(rng);
    let log_y = log_f(x0) - e;

    let mut left = x0 - w * rng.random::<f64>();
    let mut right = left + w;
    let mut f_left = log_f(left);
    let mut f_right = log_f(right);
    let mut k = max_doublings;
    while k > 0 && (log_y < f_left || log_y < f_right) {
        if rng.random::<bool>() {
            left -= right - left;
            f_left = log_f(left);
        } else {
            right += right - left;
            f_right = log_f(right);
        }
        k -= 1;
    }

    let (mut lo, mut hi) = (left, right);
    loop {
        let x1 = lo + rng.random::<f64>() * (hi - lo);
        if log_y < log_f(x1) && acceptable(x0, x1, log_y, w, left, right, &log_f) {
            return x1;
        }
        if x1 < x0 {
            lo = x1;
        } else {
            hi = x1;
        }
        if hi - lo <= f64::EPSILON * x0.abs().max(1.0) {
            return x0;
        }
    }
}

fn acceptable<F: Fn(f64) -> f64>(x0: f64, x1: f64, log_y: f64, w: f64, left: f64, right: f64, log_f: &F) -> bool {
    let (mut l, mut r) = (left, right);
    let mut differ = false;
    while r - l > 1.1 * w {
        let m = 0.5 * (l + r);
        if (x0 < m) != (x1 < m) {
            differ = true;
        }
        if x1 < m {
            r = m;
        } else {
            l = m;
        }
        if differ && log_y >= log_f(l) && log_y >= log_f(r) {
            return false;
        }
    }
    true
}
