//! Scalar extremum search: a coarse scan to bracket the best grid point,
//! then golden-section refinement.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub t: f64,
    pub value: f64,
    /// The best value sits on an endpoint rather than in the interior.
    pub at_endpoint: bool,
}

const SCAN_CELLS: usize = 256;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

pub const DEFAULT_TOLERANCE: f64 = 1e-4;

/// Extremum of `f` on `[lo, hi]`, located to within `tol` in `t`.
pub fn find_extremum<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    kind: ExtremumKind,
    tol: f64,
) -> Result<Extremum> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Domain(format!("extremum search needs lo < hi, got [{lo}, {hi}]")));
    }
    let sign = match kind {
        ExtremumKind::Max => -1.0,
        ExtremumKind::Min => 1.0,
    };
    let g = |t: f64| -> Result<f64> {
        let y = f(t);
        if y.is_finite() {
            Ok(sign * y)
        } else {
            Err(Error::NonFinite(t))
        }
    };

    let h = (hi - lo) / SCAN_CELLS as f64;
    let grid = |i: usize| if i == SCAN_CELLS { hi } else { lo + h * i as f64 };
    let mut best = (0, g(lo)?);
    for i in 1..=SCAN_CELLS {
        let y = g(grid(i))?;
        if y < best.1 {
            best = (i, y);
        }
    }
    let (i, _) = best;
    let mut a = grid(i.saturating_sub(1));
    let mut b = grid((i + 1).min(SCAN_CELLS));

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut gc, mut gd) = (g(c)?, g(d)?);
    while (b - a).abs() > tol {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d)?;
        }
    }
    let t = 0.5 * (a + b);
    let mut out = (t, g(t)?);
    for end in [lo, hi] {
        let y = g(end)?;
        if y < out.1 {
            out = (end, y);
        }
    }
    let at_endpoint = out.0 - lo < tol || hi - out.0 < tol;
    Ok(Extremum { t: out.0, value: sign * out.1, at_endpoint })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_max() {
        let e = find_extremum(|t| -(t - 5.0).powi(2), 0.0, 10.0, ExtremumKind::Max, 1e-6).unwrap();
        assert!((e.t - 5.0).abs() < 1e-6);
        assert!(e.value.abs() < 1e-12);
        assert!(!e.at_endpoint);
    }

    #[test]
    fn min_and_endpoint() {
        let e = find_extremum(|t| (t - 1.0).cosh(), -3.0, 4.0, ExtremumKind::Min, 1e-8).unwrap();
        assert!((e.t - 1.0).abs() < 1e-6);
        let e = find_extremum(|t| t, 0.0, 1.0, ExtremumKind::Max, 1e-6).unwrap();
        assert_eq!(e.t, 1.0);
        assert!(e.at_endpoint);
    }

    #[test]
    fn multimodal_picks_global() {
        let f = |t: f64| (t).sin() + 0.1 * t;
        let e = find_extremum(f, 0.0, 17.0, ExtremumKind::Max, 1e-7).unwrap();
        // highest peak: cos t = -0.1 on the third rising-to-falling crossing
        let expect = (-0.1f64).acos() + 4.0 * std::f64::consts::PI;
        assert!((e.t - expect).abs() < 1e-5, "{}", e.t);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(find_extremum(|t| t, 1.0, 1.0, ExtremumKind::Max, 1e-4).is_err());
        assert!(matches!(
            find_extremum(|t| 1.0 / (t - 0.5), 0.0, 1.0, ExtremumKind::Max, 1e-4),
            Err(Error::NonFinite(_))
        ));
    }
}
