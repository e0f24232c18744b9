//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
    /// Panels the interval is cut into before adaptive refinement starts.
    pub initial_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-10, max_depth: 60, initial_panels: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    /// True when some panel hit `max_depth` before meeting its tolerance.
    pub depth_limited: bool,
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

struct State<'f, F> {
    f: &'f F,
    evaluations: usize,
    error: f64,
    depth_limited: bool,
    max_depth: u32,
}

impl<F: Fn(f64) -> f64> State<'_, F> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        self.evaluations += 1;
        let y = (self.f)(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite(x))
        }
    }

    fn refine(&mut self, p: Panel, tol: f64, depth: u32) -> Result<f64> {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let diff = left + right - p.whole;
        if diff.abs() <= 15.0 * tol || depth >= self.max_depth {
            if diff.abs() > 15.0 * tol {
                self.depth_limited = true;
            }
            self.error += diff.abs() / 15.0;
            return Ok(left + right + diff / 15.0);
        }
        let l = Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left };
        let r = Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right };
        Ok(self.refine(l, 0.5 * tol, depth + 1)? + self.refine(r, 0.5 * tol, depth + 1)?)
    }
}

/// Integrates `f` over `[a, b]` (either orientation).
///
/// The overall tolerance is `max(abs_tol, rel_tol * |I0|)`, where `I0` is the
/// composite Simpson estimate on the initial panels.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("quadrature needs a finite interval, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error_estimate: 0.0, evaluations: 0, depth_limited: false });
    }
    if a > b {
        let r = adaptive_simpson(f, b, a, opts)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }
    let mut state = State { f: &f, evaluations: 0, error: 0.0, depth_limited: false, max_depth: opts.max_depth };
    let n = opts.initial_panels.max(1);
    let h = (b - a) / n as f64;
    let mut panels = Vec::with_capacity(n);
    let mut fa = state.eval(a)?;
    for i in 0..n {
        let pa = a + h * i as f64;
        let pb = if i + 1 == n { b } else { a + h * (i + 1) as f64 };
        let fm = state.eval(0.5 * (pa + pb))?;
        let fb = state.eval(pb)?;
        panels.push(Panel { a: pa, b: pb, fa, fm, fb, whole: simpson(pa, pb, fa, fm, fb) });
        fa = fb;
    }
    let coarse: f64 = panels.iter().map(|p| p.whole).sum();
    let tol = opts.abs_tol.max(opts.rel_tol * coarse.abs());
    let share = tol / n as f64;
    let mut value = 0.0;
    for p in panels {
        value += state.refine(p, share, 1)?;
    }
    Ok(QuadResult {
        value,
        error_estimate: state.error,
        evaluations: state.evaluations,
        depth_limited: state.depth_limited,
    })
}
