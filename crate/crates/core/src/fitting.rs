//! Least-squares estimation of the volume models, goodness of fit and the
//! backward prediction test.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dataset::{AnchorSet, AnnualSeries};
use crate::error::{Error, Result};
use crate::models::{Family, GrowthCurve, VolumeModel};
use crate::solver::{self, LeastSquaresProblem, SolverOptions};
use crate::units::{TimeYears, ONE_BIT_EB};

/// How residuals are weighted in the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// `model - observed`, in EB.
    #[default]
    Absolute,
    /// `(model - observed) / observed`; close to fitting in log space.
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitOptions {
    pub weighting: Weighting,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub model: VolumeModel,
    /// Unweighted sum of squared residuals, EB^2.
    pub sse: f64,
    pub pearson: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct CurveProblem<'a> {
    family: Family,
    t0: TimeYears,
    series: &'a AnnualSeries,
    weights: Vec<f64>,
}

impl CurveProblem<'_> {
    fn model(&self, p: &[f64]) -> VolumeModel {
        VolumeModel::from_values_unchecked(self.family, p, self.t0)
    }
}

impl LeastSquaresProblem for CurveProblem<'_> {
    fn parameter_count(&self) -> usize {
        self.family.parameter_count()
    }

    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        let model = self.model(p);
        DVector::from_iterator(
            self.series.len(),
            self.series
                .points()
                .iter()
                .zip(&self.weights)
                .map(|(o, w)| w * (model.eval(o.year) - o.volume_eb)),
        )
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let points = self.series.points();
        let n = self.parameter_count();
        let mut j = DMatrix::zeros(points.len(), n);
        for (i, (o, w)) in points.iter().zip(&self.weights).enumerate() {
            let tau = o.year - self.t0;
            match self.family {
                Family::Exponential => {
                    let e = (p[1] * tau).exp();
                    j[(i, 0)] = w * e;
                    j[(i, 1)] = w * p[0] * tau * e;
                }
                Family::Logistic => {
                    let e = (-p[2] * tau).exp();
                    let d = 1.0 + p[1] * e;
                    j[(i, 0)] = w / d;
                    j[(i, 1)] = -w * p[0] * e / (d * d);
                    j[(i, 2)] = w * p[0] * p[1] * tau * e / (d * d);
                }
            }
        }
        j
    }
}

/// Ordinary least-squares line `y = intercept + slope * x`.
fn regress(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Guess("all observation years are equal".into()));
    }
    let slope = sxy / sxx;
    if !slope.is_finite() {
        return Err(Error::Guess("regression slope is not finite".into()));
    }
    Ok((my - slope * mx, slope))
}

/// Log-linear starting values.
///
/// Exponential: `ln v` regressed on `t - t0`. Logistic: with `a0 = 2 max v`,
/// `ln(a0 / v - 1)` regressed on `t - t0` gives `ln b` and `-c`.
pub fn initial_guess(series: &AnnualSeries, family: Family, t0: TimeYears) -> Result<VolumeModel> {
    let volumes: Vec<f64> = series.volumes().collect();
    let first = volumes[0];
    if volumes.iter().all(|v| *v == first) {
        return Err(Error::Guess("volumes are constant".into()));
    }
    let tau: Vec<f64> = series.years().map(|t| t - t0).collect();
    match family {
        Family::Exponential => {
            let logs: Vec<f64> = volumes.iter().map(|v| v.ln()).collect();
            let (intercept, slope) = regress(&tau, &logs)?;
            VolumeModel::from_values(family, &[intercept.exp(), slope], t0)
                .map_err(|e| Error::Guess(format!("data does not grow: {e}")))
        }
        Family::Logistic => {
            let a0 = 2.0 * volumes.iter().copied().fold(f64::MIN, f64::max);
            let z: Vec<f64> = volumes.iter().map(|v| (a0 / v - 1.0).ln()).collect();
            let (intercept, slope) = regress(&tau, &z)?;
            VolumeModel::from_values(family, &[a0, intercept.exp(), -slope], t0)
                .map_err(|e| Error::Guess(format!("data does not grow: {e}")))
        }
    }
}

pub fn fit(series: &AnnualSeries, family: Family, t0: TimeYears) -> Result<FitResult> {
    fit_with(series, family, t0, &FitOptions::default())
}

/// Least-squares fit starting from [`initial_guess`].
///
/// A fit that hits the iteration cap is returned with `converged = false`.
pub fn fit_with(
    series: &AnnualSeries,
    family: Family,
    t0: TimeYears,
    opts: &FitOptions,
) -> Result<FitResult> {
    let needed = family.parameter_count() + 1;
    if series.len() < needed.max(3) {
        return Err(Error::Validation(format!(
            "{family} fit needs at least {} observations, got {}",
            needed.max(3),
            series.len()
        )));
    }
    let start = initial_guess(series, family, t0)?;
    let weights = match opts.weighting {
        Weighting::Absolute => vec![1.0; series.len()],
        Weighting::Relative => series.volumes().map(|v| 1.0 / v).collect(),
    };
    let problem = CurveProblem { family, t0, series, weights };
    let report = solver::minimize(&problem, &start.values(), &opts.solver)?;
    let model = VolumeModel::from_values(family, &report.params, t0)
        .map_err(|e| Error::Fit(format!("optimizer left the admissible region: {e}")))?;
    Ok(FitResult {
        model,
        sse: sse(series, &model),
        pearson: pearson(series, &model)?,
        iterations: report.iterations,
        converged: report.converged,
    })
}

/// Unweighted sum of squared residuals.
pub fn sse(series: &AnnualSeries, model: &impl GrowthCurve) -> f64 {
    series
        .points()
        .iter()
        .map(|o| (model.eval(o.year) - o.volume_eb).powi(2))
        .sum()
}

/// Product-moment correlation of two equally long samples.
pub fn correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need two samples of equal length >= 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::UndefinedCorrelation("a sample has zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation between model values at the observation years and the
/// observed volumes.
pub fn pearson(series: &AnnualSeries, model: &impl GrowthCurve) -> Result<f64> {
    let predicted: Vec<f64> = series.years().map(|t| model.eval(t)).collect();
    let observed: Vec<f64> = series.volumes().collect();
    correlation(&predicted, &observed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchorError {
    pub year: TimeYears,
    pub label: String,
    pub weight: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackcastReport {
    /// Year at which the model's annual production equals `bit_volume`.
    pub tb: TimeYears,
    pub abs_errors: Vec<AnchorError>,
    pub weighted_abs_error: f64,
    pub relative_error_pct: f64,
}

/// `delta` as a percentage of the span from `tb` to the first observation.
pub fn relative_error_pct(delta: f64, tb: TimeYears, first_year: TimeYears) -> f64 {
    delta / (first_year - tb) * 100.0
}

/// Backcast with the default volume of one bit.
pub fn backcast_bit(
    model: &impl GrowthCurve,
    series: &AnnualSeries,
    anchors: &AnchorSet,
) -> Result<BackcastReport> {
    backcast(model, series, anchors, ONE_BIT_EB)
}

pub fn backcast(
    model: &impl GrowthCurve,
    series: &AnnualSeries,
    anchors: &AnchorSet,
    bit_volume: f64,
) -> Result<BackcastReport> {
    let tb = model.inverse(bit_volume)?;
    let abs_errors: Vec<AnchorError> = anchors
        .anchors()
        .iter()
        .map(|a| AnchorError {
            year: a.year,
            label: a.label.clone(),
            weight: a.weight,
            abs_error: (tb - a.year).abs(),
        })
        .collect();
    let weighted_abs_error =
        abs_errors.iter().map(|e| e.weight * e.abs_error).sum::<f64>() / anchors.total_weight();
    Ok(BackcastReport {
        tb,
        relative_error_pct: relative_error_pct(weighted_abs_error, tb, series.first_year()),
        abs_errors,
        weighted_abs_error,
    })
}
