//! Parametric growth curves: exponential and logistic production volume
//! models, and the hyperbolic (arccotangent) world population model.
//!
//! All evaluation is closed form. Derivatives are analytic, the inverse is
//! explicit and antiderivatives are exact up to an additive constant.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{TimeYears, T0};

/// Horizontal limit of a curve as `t -> +inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Asymptote {
    Finite(f64),
    Unbounded,
}

impl Asymptote {
    pub fn finite(self) -> Option<f64> {
        match self {
            Asymptote::Finite(v) => Some(v),
            Asymptote::Unbounded => None,
        }
    }
}

pub trait GrowthCurve {
    fn eval(&self, t: TimeYears) -> f64;
    fn deriv1(&self, t: TimeYears) -> f64;
    fn deriv2(&self, t: TimeYears) -> f64;
    /// The `t` with `eval(t) == value`.
    fn inverse(&self, value: f64) -> Result<TimeYears>;
    fn antiderivative(&self, t: TimeYears) -> f64;
    fn asymptote(&self) -> Asymptote;

    /// Definite integral of `eval` over `[from, to]`.
    fn integral(&self, from: TimeYears, to: TimeYears) -> f64 {
        self.antiderivative(to) - self.antiderivative(from)
    }
}

/// Inverse cotangent with range `(0, pi)`.
pub fn arcctg(x: f64) -> f64 {
    if x > 0.0 {
        (1.0 / x).atan()
    } else {
        FRAC_PI_2 - x.atan()
    }
}

/// `a * exp(b * (t - t0))`; the additive offset is fixed at zero so the
/// curve vanishes in the distant past.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialParams {
    pub a: f64,
    pub b: f64,
    pub t0: TimeYears,
}

impl ExponentialParams {
    pub fn new(a: f64, b: f64, t0: TimeYears) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() && t0.is_finite()) {
            return Err(Error::Domain(format!(
                "exponential parameters need a > 0, b > 0; got a = {a}, b = {b}"
            )));
        }
        Ok(Self { a, b, t0 })
    }

    /// Published least-squares coefficients for the 2006-2012 series.
    pub fn published() -> Self {
        Self { a: 44.417592, b: 0.403777, t0: T0 }
    }
}

impl GrowthCurve for ExponentialParams {
    fn eval(&self, t: TimeYears) -> f64 {
        self.a * (self.b * (t - self.t0)).exp()
    }

    fn deriv1(&self, t: TimeYears) -> f64 {
        self.b * self.eval(t)
    }

    fn deriv2(&self, t: TimeYears) -> f64 {
        self.b * self.b * self.eval(t)
    }

    fn inverse(&self, value: f64) -> Result<TimeYears> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Domain(format!(
                "exponential inverse defined on (0, inf), got {value}"
            )));
        }
        Ok(self.t0 + (value / self.a).ln() / self.b)
    }

    fn antiderivative(&self, t: TimeYears) -> f64 {
        self.a / self.b * (self.b * (t - self.t0)).exp()
    }

    fn integral(&self, from: TimeYears, to: TimeYears) -> f64 {
        self.a / self.b * (self.b * (from - self.t0)).exp() * (self.b * (to - from)).exp_m1()
    }

    fn asymptote(&self) -> Asymptote {
        Asymptote::Unbounded
    }
}

/// `a / (1 + b * exp(-c * (t - t0)))`, saturating at `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub t0: TimeYears,
}

/// Above this exponent the antiderivative switches to its overflow-free form.
const LOGISTIC_LINEAR_REGIME: f64 = 500.0;

impl LogisticParams {
    pub fn new(a: f64, b: f64, c: f64, t0: TimeYears) -> Result<Self> {
        let ok = [a, b, c].iter().all(|x| *x > 0.0 && x.is_finite()) && t0.is_finite();
        if !ok {
            return Err(Error::Domain(format!(
                "logistic parameters need a, b, c > 0; got a = {a}, b = {b}, c = {c}"
            )));
        }
        Ok(Self { a, b, c, t0 })
    }

    pub fn published() -> Self {
        Self { a: 1.320155e4, b: 390.843634, c: 0.451372, t0: T0 }
    }

    /// Inflection point, where growth is fastest and the value is `a / 2`.
    pub fn inflection(&self) -> TimeYears {
        self.t0 + self.b.ln() / self.c
    }

    // s = V/a and q = 1 - s, each computed without cancellation.
    fn fractions(&self, t: TimeYears) -> (f64, f64) {
        let x = self.c * (t - self.t0);
        let s = 1.0 / (1.0 + self.b * (-x).exp());
        let q = 1.0 / (1.0 + x.exp() / self.b);
        (s, q)
    }
}

impl GrowthCurve for LogisticParams {
    fn eval(&self, t: TimeYears) -> f64 {
        self.a / (1.0 + self.b * (-self.c * (t - self.t0)).exp())
    }

    fn deriv1(&self, t: TimeYears) -> f64 {
        let (s, q) = self.fractions(t);
        self.a * self.c * s * q
    }

    fn deriv2(&self, t: TimeYears) -> f64 {
        let (s, q) = self.fractions(t);
        self.a * self.c * self.c * s * q * (q - s)
    }

    fn inverse(&self, value: f64) -> Result<TimeYears> {
        if !(value > 0.0 && value < self.a) {
            return Err(Error::Domain(format!(
                "logistic inverse defined on (0, {}), got {value}",
                self.a
            )));
        }
        Ok(self.t0 - ((self.a / value - 1.0) / self.b).ln() / self.c)
    }

    fn antiderivative(&self, t: TimeYears) -> f64 {
        let tau = t - self.t0;
        let x = self.c * tau;
        if x > LOGISTIC_LINEAR_REGIME {
            self.a * tau + self.a / self.c * (self.b * (-x).exp()).ln_1p()
        } else {
            self.a / self.c * (x.exp() + self.b).ln()
        }
    }

    /// `(a/c) * ln((e^x2 + b) / (e^x1 + b))`, evaluated so that both the
    /// far past (both terms near `ln b`) and the far future stay accurate.
    fn integral(&self, from: TimeYears, to: TimeYears) -> f64 {
        if from > to {
            return -self.integral(to, from);
        }
        let x1 = self.c * (from - self.t0);
        let growth = (self.c * (to - from)).exp_m1();
        if !growth.is_finite() {
            return self.antiderivative(to) - self.antiderivative(from);
        }
        let share = 1.0 / (1.0 + self.b * (-x1).exp());
        self.a / self.c * (growth * share).ln_1p()
    }

    fn asymptote(&self) -> Asymptote {
        Asymptote::Finite(self.a)
    }
}

/// World population `N(t) = (c_h / tau_h) * arcctg((t0_h - t) / tau_h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemographicParams {
    /// Person-years.
    pub c_h: f64,
    /// Years.
    pub tau_h: f64,
    pub t0_h: TimeYears,
}

impl Default for DemographicParams {
    fn default() -> Self {
        Self { c_h: 186e9, tau_h: 42.0, t0_h: 2007.0 }
    }
}

impl DemographicParams {
    pub fn new(c_h: f64, tau_h: f64, t0_h: TimeYears) -> Result<Self> {
        if !(c_h > 0.0 && tau_h > 0.0 && c_h.is_finite() && tau_h.is_finite() && t0_h.is_finite())
        {
            return Err(Error::Domain(format!(
                "demographic parameters need c_h > 0, tau_h > 0; got {c_h}, {tau_h}"
            )));
        }
        Ok(Self { c_h, tau_h, t0_h })
    }

    fn u(&self, t: TimeYears) -> f64 {
        (self.t0_h - t) / self.tau_h
    }

    pub fn limit(&self) -> f64 {
        PI * self.c_h / self.tau_h
    }
}

impl GrowthCurve for DemographicParams {
    fn eval(&self, t: TimeYears) -> f64 {
        self.c_h / self.tau_h * arcctg(self.u(t))
    }

    fn deriv1(&self, t: TimeYears) -> f64 {
        let u = self.u(t);
        self.c_h / (self.tau_h * self.tau_h * (1.0 + u * u))
    }

    fn deriv2(&self, t: TimeYears) -> f64 {
        let u = self.u(t);
        let d = 1.0 + u * u;
        2.0 * self.c_h * u / (self.tau_h.powi(3) * d * d)
    }

    fn inverse(&self, value: f64) -> Result<TimeYears> {
        let limit = self.limit();
        if !(value > 0.0 && value < limit) {
            return Err(Error::Domain(format!(
                "population inverse defined on (0, {limit}), got {value}"
            )));
        }
        let angle = value * self.tau_h / self.c_h;
        Ok(self.t0_h - self.tau_h * angle.cos() / angle.sin())
    }

    fn antiderivative(&self, t: TimeYears) -> f64 {
        let u = self.u(t);
        -self.c_h * (u * arcctg(u) + 1f64.hypot(u).ln())
    }

    fn asymptote(&self) -> Asymptote {
        Asymptote::Finite(self.limit())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Exponential,
    Logistic,
}

impl Family {
    pub fn parameter_count(self) -> usize {
        match self {
            Family::Exponential => 2,
            Family::Logistic => 3,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Exponential => "exponential",
            Family::Logistic => "logistic",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exponential" | "exp" => Ok(Family::Exponential),
            "logistic" => Ok(Family::Logistic),
            other => Err(Error::Validation(format!("unknown model family '{other}'"))),
        }
    }
}

/// A fitted or supplied annual production volume model (EB per year).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum VolumeModel {
    Exponential(ExponentialParams),
    Logistic(LogisticParams),
}

impl VolumeModel {
    pub fn family(&self) -> Family {
        match self {
            VolumeModel::Exponential(_) => Family::Exponential,
            VolumeModel::Logistic(_) => Family::Logistic,
        }
    }

    pub fn published(family: Family) -> Self {
        match family {
            Family::Exponential => VolumeModel::Exponential(ExponentialParams::published()),
            Family::Logistic => VolumeModel::Logistic(LogisticParams::published()),
        }
    }

    /// Exponential rate of the early (pre-saturation) regime, per year.
    pub fn growth_rate(&self) -> f64 {
        match self {
            VolumeModel::Exponential(p) => p.b,
            VolumeModel::Logistic(p) => p.c,
        }
    }

    pub fn t0(&self) -> TimeYears {
        match self {
            VolumeModel::Exponential(p) => p.t0,
            VolumeModel::Logistic(p) => p.t0,
        }
    }

    /// Parameters in fixed order: `[a, b]` or `[a, b, c]`.
    pub fn values(&self) -> Vec<f64> {
        match self {
            VolumeModel::Exponential(p) => vec![p.a, p.b],
            VolumeModel::Logistic(p) => vec![p.a, p.b, p.c],
        }
    }

    pub fn names(&self) -> &'static [&'static str] {
        match self {
            VolumeModel::Exponential(_) => &["a", "b"],
            VolumeModel::Logistic(_) => &["a", "b", "c"],
        }
    }

    /// Builds a model from raw values without validating positivity; used
    /// while an optimizer explores parameter space.
    pub(crate) fn from_values_unchecked(family: Family, values: &[f64], t0: TimeYears) -> Self {
        match family {
            Family::Exponential => {
                VolumeModel::Exponential(ExponentialParams { a: values[0], b: values[1], t0 })
            }
            Family::Logistic => VolumeModel::Logistic(LogisticParams {
                a: values[0],
                b: values[1],
                c: values[2],
                t0,
            }),
        }
    }

    pub fn from_values(family: Family, values: &[f64], t0: TimeYears) -> Result<Self> {
        if values.len() != family.parameter_count() {
            return Err(Error::Validation(format!(
                "{family} model takes {} parameters, got {}",
                family.parameter_count(),
                values.len()
            )));
        }
        Ok(match family {
            Family::Exponential => {
                VolumeModel::Exponential(ExponentialParams::new(values[0], values[1], t0)?)
            }
            Family::Logistic => {
                VolumeModel::Logistic(LogisticParams::new(values[0], values[1], values[2], t0)?)
            }
        })
    }
}

impl GrowthCurve for VolumeModel {
    fn eval(&self, t: TimeYears) -> f64 {
        match self {
            VolumeModel::Exponential(p) => p.eval(t),
            VolumeModel::Logistic(p) => p.eval(t),
        }
    }

    fn deriv1(&self, t: TimeYears) -> f64 {
        match self {
            VolumeModel::Exponential(p) => p.deriv1(t),
            VolumeModel::Logistic(p) => p.deriv1(t),
        }
    }

    fn deriv2(&self, t: TimeYears) -> f64 {
        match self {
            VolumeModel::Exponential(p) => p.deriv2(t),
            VolumeModel::Logistic(p) => p.deriv2(t),
        }
    }

    fn inverse(&self, value: f64) -> Result<TimeYears> {
        match self {
            VolumeModel::Exponential(p) => p.inverse(value),
            VolumeModel::Logistic(p) => p.inverse(value),
        }
    }

    fn antiderivative(&self, t: TimeYears) -> f64 {
        match self {
            VolumeModel::Exponential(p) => p.antiderivative(t),
            VolumeModel::Logistic(p) => p.antiderivative(t),
        }
    }

    fn integral(&self, from: TimeYears, to: TimeYears) -> f64 {
        match self {
            VolumeModel::Exponential(p) => p.integral(from, to),
            VolumeModel::Logistic(p) => p.integral(from, to),
        }
    }

    fn asymptote(&self) -> Asymptote {
        match self {
            VolumeModel::Exponential(p) => p.asymptote(),
            VolumeModel::Logistic(p) => p.asymptote(),
        }
    }
}
