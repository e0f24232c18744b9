//! Quantities derived from a volume model coupled to the population model:
//! cumulative production, activity coefficient, per-capita rate, stock and
//! generation time, their limits, milestones and the external cross-checks.
//!
//! Integrals use the closed-form antiderivatives; the adaptive quadrature
//! routes exist as independent checks.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{Asymptote, DemographicParams, GrowthCurve, VolumeModel};
use crate::quadrature::{adaptive_simpson, QuadOptions};
use crate::units::{
    annual_per_capita_rate_kbit_s, TimeYears, VolumeEb, BITS_PER_BYTE, BITS_PER_KBIT,
    BYTES_PER_EB, BYTES_PER_GB, DAYS_PER_YEAR, EB_PER_ZB, KBIT_PER_MB, MINUTES_PER_MONTH,
    ONE_BIT_EB, SECONDS_PER_DAY, SECONDS_PER_MINUTE,
};

/// Integration offset that makes the activity coefficient equal one at the
/// one-bit date, in the exponential regime: `-ln(1 - c) / c`.
pub fn solve_delta_tb(rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::NoSolution(format!(
            "integration offset exists only for growth rates in (0, 1), got {rate}"
        )));
    }
    Ok(-(-rate).ln_1p() / rate)
}

/// Relative deviation `2|x - y| / (x + y)`.
pub fn relative_deviation(x: f64, y: f64) -> f64 {
    2.0 * (x - y).abs() / (x + y)
}

/// A volume model tied to the population model through the start of the
/// digital era.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoupledModel {
    pub volume: VolumeModel,
    pub population: DemographicParams,
    /// One-bit date of `volume`.
    pub tb: TimeYears,
    pub delta_tb: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Asymptotes {
    pub volume_eb: Option<f64>,
    pub population: Option<f64>,
    pub activity: Option<f64>,
    pub rate_kbit_s: Option<f64>,
    pub stock_gb: Option<f64>,
    pub generation_days: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Milestone {
    pub label: String,
    pub t: TimeYears,
}

impl CoupledModel {
    /// Couples with the one-bit date and the offset from [`solve_delta_tb`].
    pub fn new(volume: VolumeModel, population: DemographicParams) -> Result<Self> {
        let tb = volume.inverse(ONE_BIT_EB)?;
        let delta_tb = solve_delta_tb(volume.growth_rate())?;
        Ok(Self { volume, population, tb, delta_tb })
    }

    pub fn with_delta_tb(self, delta_tb: f64) -> Result<Self> {
        if !(delta_tb > 0.0 && delta_tb.is_finite()) {
            return Err(Error::Domain(format!("delta_tb must be positive, got {delta_tb}")));
        }
        Ok(Self { delta_tb, ..self })
    }

    /// Lower limit of the cumulative volume integral.
    pub fn volume_origin(&self) -> TimeYears {
        self.tb - self.delta_tb
    }

    /// Lower limit of the cumulative population integral.
    pub fn tbh(&self) -> TimeYears {
        self.volume_origin() - self.population.tau_h / 2.0
    }

    fn check_volume_domain(&self, t: TimeYears, what: &str) -> Result<()> {
        let lo = self.volume_origin();
        if t < lo || t.is_nan() {
            return Err(Error::Domain(format!("{what} is defined for t >= {lo}, got {t}")));
        }
        Ok(())
    }

    /// Annual production `V(t)`, EB per year.
    pub fn volume(&self, t: TimeYears) -> f64 {
        self.volume.eval(t)
    }

    /// Total volume produced since the start of the digital era, EB.
    pub fn cumulative_volume(&self, t: TimeYears) -> Result<VolumeEb> {
        self.check_volume_domain(t, "cumulative volume")?;
        Ok(self.volume.integral(self.volume_origin(), t))
    }

    pub fn cumulative_volume_quadrature(&self, t: TimeYears, opts: &QuadOptions) -> Result<VolumeEb> {
        self.check_volume_domain(t, "cumulative volume")?;
        Ok(adaptive_simpson(|x| self.volume.eval(x), self.volume_origin(), t, opts)?.value)
    }

    /// `V(t) / I(t)`.
    pub fn activity_coefficient(&self, t: TimeYears) -> Result<f64> {
        let i = self.cumulative_volume(t)?;
        if !(i > 0.0) {
            return Err(Error::Domain(format!(
                "activity coefficient needs t > {}, got {t}",
                self.volume_origin()
            )));
        }
        Ok(self.volume(t) / i)
    }

    pub fn population(&self, t: TimeYears) -> f64 {
        self.population.eval(t)
    }

    /// Person-years lived since `tbh`.
    pub fn cumulative_population(&self, t: TimeYears) -> Result<f64> {
        let lo = self.tbh();
        if t < lo || t.is_nan() {
            return Err(Error::Domain(format!(
                "cumulative population is defined for t >= {lo}, got {t}"
            )));
        }
        Ok(self.population.integral(lo, t))
    }

    pub fn cumulative_population_quadrature(&self, t: TimeYears, opts: &QuadOptions) -> Result<f64> {
        let lo = self.tbh();
        if t < lo || t.is_nan() {
            return Err(Error::Domain(format!(
                "cumulative population is defined for t >= {lo}, got {t}"
            )));
        }
        Ok(adaptive_simpson(|x| self.population.eval(x), lo, t, opts)?.value)
    }

    /// Average data production per person, kbit/s.
    pub fn per_capita_rate(&self, t: TimeYears) -> Result<f64> {
        annual_per_capita_rate_kbit_s(self.volume(t), self.population(t))
    }

    /// Cumulative volume per person-year lived, GB.
    pub fn per_capita_stock(&self, t: TimeYears) -> Result<f64> {
        let i = self.cumulative_volume(t)?;
        let p = self.cumulative_population(t)?;
        if !(p > 0.0) {
            return Err(Error::Domain(format!(
                "per-capita stock needs t > {}, got {t}",
                self.tbh()
            )));
        }
        Ok(i / p * BYTES_PER_EB / BYTES_PER_GB)
    }

    /// Per-capita stock divided by per-capita rate, in days.
    pub fn generation_time(&self, t: TimeYears) -> Result<f64> {
        let q = self.per_capita_stock(t)?;
        let r = self.per_capita_rate(t)?;
        if !(r > 0.0) {
            return Err(Error::Domain(format!("per-capita rate is zero at t = {t}")));
        }
        Ok(stock_over_rate_days(q, r))
    }

    /// Limits as `t -> +inf`, from the closed-form model limits.
    pub fn asymptotes(&self) -> Asymptotes {
        let n_inf = self.population.limit();
        match self.volume.asymptote() {
            Asymptote::Finite(v_inf) => {
                let r = annual_per_capita_rate_kbit_s(v_inf, n_inf).ok();
                // I ~ V_inf t and P ~ N_inf t
                let q = v_inf / n_inf * BYTES_PER_EB / BYTES_PER_GB;
                Asymptotes {
                    volume_eb: Some(v_inf),
                    population: Some(n_inf),
                    activity: Some(0.0),
                    rate_kbit_s: r,
                    stock_gb: Some(q),
                    generation_days: r.map(|r| stock_over_rate_days(q, r)),
                }
            }
            Asymptote::Unbounded => Asymptotes {
                volume_eb: None,
                population: Some(n_inf),
                activity: Some(self.volume.growth_rate()),
                rate_kbit_s: None,
                stock_gb: None,
                generation_days: Some(0.0),
            },
        }
    }

    /// Dates of the 10 %, 50 % and 90 % saturation levels and the inflection.
    pub fn milestones(&self) -> Result<Vec<Milestone>> {
        let VolumeModel::Logistic(p) = self.volume else {
            return Err(Error::Domain("milestones need a logistic volume model".into()));
        };
        let mut out = Vec::with_capacity(4);
        for level in [0.1, 0.5, 0.9] {
            out.push(Milestone {
                label: format!("{:.0}% of limit", level * 100.0),
                t: p.inverse(level * p.a)?,
            });
        }
        out.push(Milestone { label: "inflection".into(), t: p.inflection() });
        Ok(out)
    }

    pub fn metric(&self, metric: Metric, t: TimeYears) -> Result<f64> {
        Ok(match metric {
            Metric::V => self.volume(t),
            Metric::DV => self.volume.deriv1(t),
            Metric::D2V => self.volume.deriv2(t),
            Metric::I => self.cumulative_volume(t)? / EB_PER_ZB,
            Metric::KI => self.activity_coefficient(t)?,
            Metric::N => self.population(t),
            Metric::R => self.per_capita_rate(t)?,
            Metric::QI => self.per_capita_stock(t)?,
            Metric::TauI => self.generation_time(t)?,
        })
    }

    /// Smallest `t` at which `metric` is defined, if bounded below. Metrics
    /// that divide by an integral exclude the bound itself.
    pub fn lower_limit(&self, metric: Metric) -> Option<(TimeYears, bool)> {
        match metric {
            Metric::I => Some((self.volume_origin(), true)),
            Metric::KI | Metric::QI | Metric::TauI => Some((self.volume_origin(), false)),
            _ => None,
        }
    }

    pub fn asymptote_of(&self, metric: Metric) -> Option<f64> {
        let a = self.asymptotes();
        match metric {
            Metric::V => a.volume_eb,
            Metric::DV | Metric::D2V => a.volume_eb.map(|_| 0.0),
            Metric::I => None,
            Metric::KI => a.activity,
            Metric::N => a.population,
            Metric::R => a.rate_kbit_s,
            Metric::QI => a.stock_gb,
            Metric::TauI => a.generation_days,
        }
    }

    pub fn sample(&self, metric: Metric, grid: &Grid) -> Result<MetricSeries> {
        let samples = grid
            .points()
            .into_iter()
            .map(|t| Ok((t, self.metric(metric, t)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(MetricSeries { metric, samples })
    }
}

fn stock_over_rate_days(q_gb: f64, r_kbit_s: f64) -> f64 {
    q_gb * BYTES_PER_GB * BITS_PER_BYTE / BITS_PER_KBIT / r_kbit_s / SECONDS_PER_DAY
}

/// Generation time limit for a saturating model is exactly one year.
pub const GENERATION_TIME_LIMIT_DAYS: f64 = DAYS_PER_YEAR;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UserNetInputs {
    pub traffic_eb: f64,
    pub broadband_share: f64,
    pub year: TimeYears,
}

impl Default for UserNetInputs {
    fn default() -> Self {
        Self { traffic_eb: 388.332, broadband_share: 0.046, year: 2013.0 }
    }
}

/// Per-user rate of internet traffic among broadband users, scaled from the
/// model's per-capita rate, kbit/s.
pub fn crosscheck_usernet(cm: &CoupledModel, inputs: &UserNetInputs) -> Result<f64> {
    if !(inputs.broadband_share > 0.0 && inputs.broadband_share <= 1.0) {
        return Err(Error::Domain(format!(
            "broadband share must lie in (0, 1], got {}",
            inputs.broadband_share
        )));
    }
    if !(inputs.traffic_eb >= 0.0) {
        return Err(Error::Domain(format!("traffic must be nonnegative, got {}", inputs.traffic_eb)));
    }
    let r = cm.per_capita_rate(inputs.year)?;
    Ok(r / inputs.broadband_share * inputs.traffic_eb / cm.volume(inputs.year))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalInputs {
    pub total_seconds_month: f64,
    pub broadband_share: f64,
    pub mb_per_min: f64,
    pub year: TimeYears,
}

impl Default for EmpiricalInputs {
    fn default() -> Self {
        Self { total_seconds_month: 6.776e12, broadband_share: 0.046, mb_per_min: 4.86, year: 2013.0 }
    }
}

/// The same per-user rate estimated from time online and traffic per minute.
pub fn crosscheck_empirical(dp: &DemographicParams, inputs: &EmpiricalInputs) -> Result<f64> {
    if !(inputs.broadband_share > 0.0 && inputs.broadband_share <= 1.0) {
        return Err(Error::Domain(format!(
            "broadband share must lie in (0, 1], got {}",
            inputs.broadband_share
        )));
    }
    if !(inputs.total_seconds_month >= 0.0 && inputs.mb_per_min >= 0.0) {
        return Err(Error::Domain("time online and traffic per minute must be nonnegative".into()));
    }
    let users = dp.eval(inputs.year) * inputs.broadband_share;
    if !(users > 0.0) {
        return Err(Error::Domain(format!("no users at t = {}", inputs.year)));
    }
    let online = inputs.total_seconds_month / users / MINUTES_PER_MONTH;
    Ok(online * (inputs.mb_per_min * KBIT_PER_MB / SECONDS_PER_MINUTE))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Metric {
    V,
    DV,
    D2V,
    I,
    KI,
    N,
    R,
    QI,
    TauI,
}

impl Metric {
    pub const ALL: [Metric; 9] =
        [Metric::V, Metric::DV, Metric::D2V, Metric::I, Metric::KI, Metric::N, Metric::R, Metric::QI, Metric::TauI];

    pub fn name(self) -> &'static str {
        match self {
            Metric::V => "V",
            Metric::DV => "dV",
            Metric::D2V => "d2V",
            Metric::I => "I",
            Metric::KI => "K_I",
            Metric::N => "N",
            Metric::R => "R",
            Metric::QI => "Q_I",
            Metric::TauI => "tau_I",
        }
    }

    /// Column header for tables: name and unit.
    pub fn column(self) -> &'static str {
        match self {
            Metric::V => "V_eb_per_yr",
            Metric::DV => "dV_eb_per_yr2",
            Metric::D2V => "d2V_eb_per_yr3",
            Metric::I => "I_zb",
            Metric::KI => "K_I",
            Metric::N => "N_persons",
            Metric::R => "R_kbit_s",
            Metric::QI => "Q_I_gb",
            Metric::TauI => "tau_I_days",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Metric::V => "EB/yr",
            Metric::DV => "EB/yr^2",
            Metric::D2V => "EB/yr^3",
            Metric::I => "ZB",
            Metric::KI => "1",
            Metric::N => "persons",
            Metric::R => "kbit/s",
            Metric::QI => "GB",
            Metric::TauI => "days",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Validation(format!("unknown metric '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSeries {
    pub metric: Metric,
    pub samples: Vec<(TimeYears, f64)>,
}

impl MetricSeries {
    pub fn unit(&self) -> &'static str {
        self.metric.unit()
    }
}

/// Evenly spaced sample times `from, from + step, ...` up to `to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub from: TimeYears,
    pub to: TimeYears,
    pub step: f64,
}

impl Grid {
    pub fn new(from: TimeYears, to: TimeYears, step: f64) -> Result<Self> {
        if !(from.is_finite() && to.is_finite() && from < to) {
            return Err(Error::Validation(format!("grid needs from < to, got {from}..{to}")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Validation(format!("grid step must be positive, got {step}")));
        }
        Ok(Self { from, to, step })
    }

    pub fn points(&self) -> Vec<TimeYears> {
        let n = ((self.to - self.from) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.from + self.step * i as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ExponentialParams;

    fn paper() -> CoupledModel {
        CoupledModel::new(VolumeModel::published(crate::models::Family::Logistic), DemographicParams::default())
            .unwrap()
    }

    #[test]
    fn delta_tb_values() {
        assert!((solve_delta_tb(0.451372).unwrap() - 1.3300).abs() < 1e-4);
        assert!((solve_delta_tb(0.5).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!((solve_delta_tb(1e-12).unwrap() - 1.0).abs() < 1e-9);
        assert!(matches!(solve_delta_tb(1.0), Err(Error::NoSolution(_))));
        assert!(solve_delta_tb(0.0).is_err());
    }

    #[test]
    fn coupled_limits() {
        let cm = paper();
        assert!((cm.tb - 1897.7717).abs() < 1e-3);
        assert!((cm.tbh() - (cm.tb - cm.delta_tb - 21.0)).abs() < 1e-12);
        assert_eq!(cm.cumulative_volume(cm.volume_origin()).unwrap(), 0.0);
        assert_eq!(cm.cumulative_population(cm.tbh()).unwrap(), 0.0);
        assert!(cm.cumulative_volume(cm.volume_origin() - 1e-6).is_err());
        assert!(cm.cumulative_population(cm.tbh() - 1.0).is_err());
        assert!(cm.with_delta_tb(0.0).is_err());
    }

    #[test]
    fn activity_is_one_at_start() {
        let cm = paper();
        let k = cm.activity_coefficient(cm.tb).unwrap();
        assert!((k - 1.0).abs() < 0.01, "{k}");
        assert!(cm.activity_coefficient(cm.volume_origin()).is_err());
    }

    #[test]
    fn per_capita_stock_near_origin_is_finite() {
        let cm = paper();
        let q = cm.per_capita_stock(cm.volume_origin() + 1e-3).unwrap();
        assert!(q.is_finite() && q > 0.0, "{q}");
    }

    #[test]
    fn exponential_coupling() {
        let cm = CoupledModel::new(
            VolumeModel::Exponential(ExponentialParams::published()),
            DemographicParams::default(),
        )
        .unwrap();
        assert!((cm.tb - 1884.81).abs() < 0.01);
        assert!(cm.milestones().is_err());
        let a = cm.asymptotes();
        assert_eq!(a.volume_eb, None);
        assert_eq!(a.activity, Some(0.403777));
    }

    #[test]
    fn crosscheck_cancellation() {
        let cm = paper();
        let inputs = UserNetInputs { traffic_eb: cm.volume(2013.0), broadband_share: 1.0, year: 2013.0 };
        let x = crosscheck_usernet(&cm, &inputs).unwrap();
        assert!((x - cm.per_capita_rate(2013.0).unwrap()).abs() < 1e-12);
        assert!(crosscheck_usernet(&cm, &UserNetInputs { broadband_share: 0.0, ..Default::default() }).is_err());
        let z = crosscheck_empirical(&cm.population, &EmpiricalInputs { mb_per_min: 0.0, ..Default::default() })
            .unwrap();
        assert_eq!(z, 0.0);
        assert!(crosscheck_empirical(&cm.population, &EmpiricalInputs { broadband_share: 0.0, ..Default::default() })
            .is_err());
        assert_eq!(relative_deviation(3.0, 3.0), 0.0);
    }

    #[test]
    fn milestones_logistic() {
        let m = paper().milestones().unwrap();
        assert_eq!(m.len(), 4);
        assert!((m[0].t - 2010.3547).abs() < 1e-3);
        assert!((m[1].t - 2015.2226).abs() < 1e-3);
        assert!((m[2].t - 2020.0905).abs() < 1e-3);
        assert!((m[3].t - m[1].t).abs() < 1e-9);
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("Z".parse::<Metric>().is_err());
    }

    #[test]
    fn grid_points() {
        let g = Grid::new(2000.0, 2001.0, 0.25).unwrap();
        assert_eq!(g.points(), vec![2000.0, 2000.25, 2000.5, 2000.75, 2001.0]);
        let g = Grid::new(0.0, 1.0, 0.3).unwrap();
        assert_eq!(g.points().len(), 4);
        assert!(Grid::new(1.0, 1.0, 0.1).is_err());
        assert!(Grid::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn sample_reports_domain_errors() {
        let cm = paper();
        let g = Grid::new(1800.0, 1900.0, 10.0).unwrap();
        assert!(cm.sample(Metric::KI, &g).is_err());
        assert!(cm.sample(Metric::N, &g).is_ok());
    }
}
