//! Damped Gauss-Newton (Levenberg-Marquardt) minimization of a sum of
//! squared residuals.
//!
//! Each trial solves the column-scaled damped system
//! `[J D^-1/2; sqrt(lambda) I] dx = [-r; 0]` by SVD. The damping factor is
//! multiplied by ten after a trial that increases the objective and divided
//! by ten after one that decreases it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A least-squares problem with an analytic Jacobian.
pub trait LeastSquaresProblem {
    fn parameter_count(&self) -> usize;
    /// Residuals at `params`; any non-finite entry marks the point infeasible.
    fn residuals(&self, params: &[f64]) -> DVector<f64>;
    /// `J[i][j] = d residual_i / d param_j`.
    fn jacobian(&self, params: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Trial steps allowed, accepted or rejected.
    pub max_iterations: usize,
    /// Relative decrease of the objective below which a step counts as stalled.
    pub sse_rtol: f64,
    /// Largest relative parameter change below which a step counts as stalled.
    pub step_rtol: f64,
    /// Largest cosine between the residual vector and any Jacobian column.
    pub gradient_tol: f64,
    pub initial_damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            sse_rtol: 1e-12,
            step_rtol: 1e-10,
            gradient_tol: 1e-6,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub params: Vec<f64>,
    pub sse: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sse_of(r: &DVector<f64>) -> f64 {
    r.norm_squared()
}

fn feasible(r: &DVector<f64>) -> bool {
    r.iter().all(|x| x.is_finite())
}

/// Column norms of `jacobian`, used both for scaling and for the
/// gradient test.
fn column_norms(jacobian: &DMatrix<f64>) -> Vec<f64> {
    jacobian.column_iter().map(|c| c.norm()).collect()
}

fn gradient_cosine(jacobian: &DMatrix<f64>, r: &DVector<f64>, norms: &[f64]) -> f64 {
    let rn = sse_of(r).sqrt();
    let g = jacobian.transpose() * r;
    g.iter()
        .zip(norms)
        .filter(|(_, nj)| **nj != 0.0)
        .map(|(gj, nj)| gj.abs() / (nj * rn))
        .fold(0.0, f64::max)
}

fn gradient_small(
    jacobian: &DMatrix<f64>,
    r: &DVector<f64>,
    norms: &[f64],
    tol: f64,
    negligible_sse: f64,
) -> bool {
    sse_of(r) <= negligible_sse || gradient_cosine(jacobian, r, norms) <= tol
}

/// Undamped Gauss–Newton steps from a converged point.
///
/// Near the optimum the objective differences drown in rounding, so the
/// steps are judged by the gradient instead.
fn polish<P: LeastSquaresProblem>(problem: &P, report: &mut SolverReport, negligible_sse: f64) {
    let mut r = problem.residuals(&report.params);
    let mut jacobian = problem.jacobian(&report.params);
    let mut norms = column_norms(&jacobian);
    let mut cosine = gradient_cosine(&jacobian, &r, &norms);
    for _ in 0..8 {
        if report.sse <= negligible_sse || cosine == 0.0 {
            return;
        }
        let step = damped_step(&jacobian, &r, &norms, 0.0);
        let trial: Vec<f64> = report.params.iter().zip(step.iter()).map(|(p, d)| p + d).collect();
        let r_trial = problem.residuals(&trial);
        if !feasible(&r_trial) {
            return;
        }
        let sse_trial = sse_of(&r_trial);
        let j_trial = problem.jacobian(&trial);
        let n_trial = column_norms(&j_trial);
        let c_trial = gradient_cosine(&j_trial, &r_trial, &n_trial);
        if !(c_trial < cosine && sse_trial <= report.sse * (1.0 + 1e-10)) {
            return;
        }
        report.params = trial;
        report.sse = sse_trial;
        (r, jacobian, norms, cosine) = (r_trial, j_trial, n_trial, c_trial);
    }
}

fn relative_step(step: &DVector<f64>, params: &[f64]) -> f64 {
    step.iter()
        .zip(params)
        .map(|(d, p)| d.abs() / p.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Minimizes `sum r_i(p)^2` from `start`.
///
/// Returns the best point found. `converged` is set only when the last
/// accepted step met both the objective and step criteria (or no descent
/// step could be found) and the gradient test holds there.
pub fn minimize<P: LeastSquaresProblem>(
    problem: &P,
    start: &[f64],
    opts: &SolverOptions,
) -> Result<SolverReport> {
    let n = problem.parameter_count();
    if start.len() != n {
        return Err(Error::Fit(format!("expected {n} starting values, got {}", start.len())));
    }
    let mut params = start.to_vec();
    let mut r = problem.residuals(&params);
    if !feasible(&r) {
        return Err(Error::Fit("residuals are not finite at the starting point".into()));
    }
    let m = r.len();
    if m < n {
        return Err(Error::Fit(format!("{m} residuals cannot determine {n} parameters")));
    }
    let mut sse = sse_of(&r);
    // objective treated as zero: exact fit up to rounding of the data scale
    let negligible_sse = {
        let y_scale = problem.residuals(&vec![0.0; n]);
        let s = if feasible(&y_scale) { sse_of(&y_scale) } else { sse };
        1e-28 * s.max(f64::MIN_POSITIVE)
    };

    let mut jacobian = problem.jacobian(&params);
    let mut norms = column_norms(&jacobian);
    check_rank(&jacobian, &norms)?;

    let mut lambda = opts.initial_damping;
    let mut iterations = 0;
    let mut stalled = false;

    while iterations < opts.max_iterations {
        if sse <= negligible_sse {
            return Ok(SolverReport { params, sse, iterations, converged: true });
        }
        if stalled && gradient_small(&jacobian, &r, &norms, opts.gradient_tol, negligible_sse) {
            let mut report = SolverReport { params, sse, iterations, converged: true };
            polish(problem, &mut report, negligible_sse);
            return Ok(report);
        }

        iterations += 1;
        let step = damped_step(&jacobian, &r, &norms, lambda);
        let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, d)| p + d).collect();
        let r_trial = problem.residuals(&trial);
        let sse_trial = if feasible(&r_trial) { sse_of(&r_trial) } else { f64::INFINITY };
        let rel_step = relative_step(&step, &params);

        if sse_trial <= sse {
            let rel_sse = (sse - sse_trial) / sse.max(f64::MIN_POSITIVE);
            stalled = rel_sse < opts.sse_rtol && rel_step < opts.step_rtol;
            params = trial;
            r = r_trial;
            sse = sse_trial;
            lambda = (lambda / 10.0).max(1e-300);
            jacobian = problem.jacobian(&params);
            norms = column_norms(&jacobian);
        } else {
            lambda *= 10.0;
            // no descent direction left at this resolution, unless damping
            // alone is what shrank the step
            stalled = !lambda.is_finite()
                || (rel_step < opts.step_rtol
                    && relative_step(&damped_step(&jacobian, &r, &norms, 0.0), &params)
                        < opts.step_rtol);
            if !lambda.is_finite() {
                break;
            }
        }
    }
    let converged =
        stalled && gradient_small(&jacobian, &r, &norms, opts.gradient_tol, negligible_sse);
    let mut report = SolverReport { params, sse, iterations, converged };
    if converged {
        polish(problem, &mut report, negligible_sse);
    }
    Ok(report)
}

fn check_rank(jacobian: &DMatrix<f64>, norms: &[f64]) -> Result<()> {
    if norms.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(Error::Fit("degenerate Jacobian: a parameter has no influence".into()));
    }
    let mut scaled = jacobian.clone();
    for (j, nj) in norms.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(*nj);
    }
    let sv = scaled.singular_values();
    let max = sv.max();
    let min = sv.min();
    if !(min > 1e-13 * max) {
        return Err(Error::Fit(format!(
            "degenerate Jacobian: scaled singular values range {min:e}..{max:e}"
        )));
    }
    Ok(())
}

fn damped_step(jacobian: &DMatrix<f64>, r: &DVector<f64>, norms: &[f64], lambda: f64) -> DVector<f64> {
    let (m, n) = jacobian.shape();
    let mut a = DMatrix::<f64>::zeros(m + n, n);
    for j in 0..n {
        for i in 0..m {
            a[(i, j)] = jacobian[(i, j)] / norms[j];
        }
        a[(m + j, j)] = lambda.sqrt();
    }
    let mut rhs = DVector::<f64>::zeros(m + n);
    for i in 0..m {
        rhs[i] = -r[i];
    }
    let scaled = a
        .svd(true, true)
        .solve(&rhs, 0.0)
        .expect("SVD computed with both factors");
    DVector::from_iterator(n, scaled.iter().zip(norms).map(|(s, nj)| s / nj))
}
