//! Adaptive Simpson quadrature with Richardson correction.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Half-width of each integration window in (tilted) component standard deviations.
    pub span_sd: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-10, span_sd: 12.0, max_subdivisions: 2048 }
    }
}

impl QuadratureConfig {
    pub fn is_valid(&self) -> bool {
        self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.span_sd >= 8.0 && self.max_subdivisions > 0
    }

    /// Same config with both tolerances divided by `factor`. Simpson's error falls with the fourth
    /// power of the panel width, so the subdivision budget grows by twice the fourth root.
    pub fn tightened(&self, factor: f64) -> Self {
        let budget = (self.max_subdivisions as f64 * 2.0 * factor.max(1.0).powf(0.25)).ceil() as usize;
        Self { abs_tol: self.abs_tol / factor, rel_tol: self.rel_tol / factor, max_subdivisions: budget, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    /// Sum of the local error estimates over accepted panels.
    pub error: T,
    pub subdivisions: usize,
    pub converged: bool,
}

struct Panel<T> {
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
}

const INITIAL_PANELS: usize = 16;
const MAX_DEPTH: u32 = 60;

/// Integrates `f` over `[a, b]`.
///
/// The interval is first cut into a fixed number of panels so that narrow peaks are seen; each
/// panel is then bisected until the Simpson estimates of the halves agree to within fifteen
/// times the panel's share of the tolerance. The tolerance is
/// `max(abs_tol, rel_tol * coarse estimate of the integral of |f|)`, divided among panels by length.
pub fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, cfg: &QuadratureConfig) -> Integral<T> {
    if a == b {
        return Integral { value: T::zero(), error: T::zero(), subdivisions: 0, converged: true };
    }
    let (lo, hi, sign) = if a < b { (a, b, T::one()) } else { (b, a, -T::one()) };
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let n = T::lit(INITIAL_PANELS as f64);
    let width = (hi - lo) / n;

    let mut panels: Vec<Panel<T>> = Vec::with_capacity(INITIAL_PANELS);
    let mut coarse_abs = T::zero();
    let mut f_left = f(lo);
    for i in 0..INITIAL_PANELS {
        let pa = lo + width * T::lit(i as f64);
        let pb = if i + 1 == INITIAL_PANELS { hi } else { lo + width * T::lit((i + 1) as f64) };
        let pm = (pa + pb) / two;
        let fm = f(pm);
        let fb = f(pb);
        let whole = (pb - pa) * (f_left + T::lit(4.0) * fm + fb) / six;
        coarse_abs = coarse_abs + (pb - pa) * (f_left.abs() + T::lit(4.0) * fm.abs() + fb.abs()) / six;
        panels.push(Panel { a: pa, b: pb, fa: f_left, fm, fb, whole, tol: T::zero(), depth: 0 });
        f_left = fb;
    }
    let total_tol = T::lit(cfg.abs_tol).max(T::lit(cfg.rel_tol) * coarse_abs);
    for p in &mut panels {
        p.tol = total_tol * (p.b - p.a) / (hi - lo);
    }

    let mut value = T::zero();
    let mut error = T::zero();
    let mut subdivisions = 0usize;
    let mut converged = true;
    // depth-first, left to right, so the summation order is fixed
    panels.reverse();
    while let Some(p) = panels.pop() {
        let m = (p.a + p.b) / two;
        let lm = (p.a + m) / two;
        let rm = (m + p.b) / two;
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - p.a) * (p.fa + T::lit(4.0) * flm + p.fm) / six;
        let right = (p.b - m) * (p.fm + T::lit(4.0) * frm + p.fb) / six;
        let diff = left + right - p.whole;
        let accept = diff.abs() <= T::lit(15.0) * p.tol;
        let exhausted = subdivisions >= cfg.max_subdivisions || p.depth >= MAX_DEPTH;
        if accept || exhausted {
            if !accept {
                converged = false;
            }
            value = value + left + right + diff / T::lit(15.0);
            error = error + diff.abs() / T::lit(15.0);
        } else {
            subdivisions += 1;
            let tol = p.tol / two;
            panels.push(Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right, tol, depth: p.depth + 1 });
            panels.push(Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left, tol, depth: p.depth + 1 });
        }
    }
    Integral { value: sign * value, error, subdivisions, converged }
}
