//! Invariants of the models, the fit and the derived metrics.

use datagrowth::analysis::CoupledModel;
use datagrowth::dataset::{load_series, reference_table1, AnnualSeries, SeriesFormat};
use datagrowth::fitting::{correlation, fit, sse};
use datagrowth::models::{
    DemographicParams, ExponentialParams, Family, GrowthCurve, LogisticParams, VolumeModel,
};
use datagrowth::quadrature::{adaptive_simpson, QuadOptions};
use proptest::prelude::*;

fn central_difference(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    (f(t + h) - f(t - h)) / (2.0 * h)
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

/// Quadrature oracle with no absolute floor, so tiny integrals stay in relative terms.
fn oracle() -> QuadOptions {
    QuadOptions { abs_tol: 0.0, rel_tol: 1e-12, ..QuadOptions::default() }
}

fn paper_coupled() -> CoupledModel {
    CoupledModel::new(VolumeModel::published(Family::Logistic), DemographicParams::default()).unwrap()
}

fn logistic_strategy() -> impl Strategy<Value = LogisticParams> {
    (50.0..5e4f64, 0.2..0.8f64, 2.0..9.0f64)
        .prop_map(|(a, c, k)| LogisticParams::new(a, (c * k).exp(), c, 2002.0).unwrap())
}

proptest! {
    #[test]
    fn logistic_derivatives_match_finite_differences(p in logistic_strategy(), t in 1850.0..2030.0f64) {
        let h = 1e-5;
        // past saturation the difference quotient drowns in the rounding of V
        prop_assume!(f64::EPSILON * p.eval(t) / (h * p.deriv1(t)) < 1e-8);
        let fd1 = central_difference(|x| p.eval(x), t, h);
        prop_assert!(rel_err(fd1, p.deriv1(t)) < 1e-6, "d1 {} vs {}", fd1, p.deriv1(t));
        prop_assume!((t - p.inflection()).abs() > 0.05);
        prop_assume!(f64::EPSILON * p.deriv1(t) / (h * p.deriv2(t).abs()) < 1e-8);
        let fd2 = central_difference(|x| p.deriv1(x), t, h);
        prop_assert!(rel_err(fd2, p.deriv2(t)) < 1e-6, "d2 {} vs {}", fd2, p.deriv2(t));
    }

    #[test]
    fn exponential_derivatives_match_finite_differences(a in 1.0..100.0f64, b in 0.1..0.8f64, t in 1850.0..2030.0f64) {
        let p = ExponentialParams::new(a, b, 2002.0).unwrap();
        let h = 1e-5;
        prop_assert!(rel_err(central_difference(|x| p.eval(x), t, h), p.deriv1(t)) < 1e-6);
        prop_assert!(rel_err(central_difference(|x| p.deriv1(x), t, h), p.deriv2(t)) < 1e-6);
    }

    #[test]
    fn demographic_derivatives_match_finite_differences(t in 1700.0..2300.0f64) {
        let p = DemographicParams::default();
        let h = 1e-5;
        prop_assert!(rel_err(central_difference(|x| p.eval(x), t, h), p.deriv1(t)) < 1e-6);
        prop_assume!((t - p.t0_h).abs() > 0.5);
        prop_assert!(rel_err(central_difference(|x| p.deriv1(x), t, h), p.deriv2(t)) < 1e-6);
    }

    #[test]
    fn pearson_is_bounded(xs in prop::collection::vec(-1e3..1e3f64, 3..20), seed in 0u64..1000) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x.sin() * (seed as f64 + i as f64)).collect();
        if let Ok(r) = correlation(&xs, &ys) {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn affine_increasing_map_has_unit_correlation(xs in prop::collection::vec(-1e3..1e3f64, 3..20), k in 0.01..100.0f64, off in -1e3..1e3f64) {
        let ys: Vec<f64> = xs.iter().map(|x| k * x + off).collect();
        if let Ok(r) = correlation(&xs, &ys) {
            prop_assert!((r - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn load_series_ignores_row_order(perm in Just((0..7usize).collect::<Vec<_>>()).prop_shuffle()) {
        let points = reference_table1().points().to_vec();
        let mut csv = String::from("year,volume_eb\n");
        for i in &perm {
            csv.push_str(&format!("{},{}\n", points[*i].year, points[*i].volume_eb));
        }
        let s = load_series(csv.as_bytes(), SeriesFormat::Csv).unwrap();
        prop_assert_eq!(s, reference_table1());
    }

    #[test]
    fn exact_logistic_data_is_recovered(p in logistic_strategy()) {
        let pairs: Vec<(f64, f64)> = (2003..=2012).map(|y| (f64::from(y), p.eval(f64::from(y)))).collect();
        let r = fit(&AnnualSeries::from_pairs(&pairs).unwrap(), Family::Logistic, 2002.0).unwrap();
        prop_assert!(r.converged);
        prop_assert!(r.sse < 1e-12, "sse {}", r.sse);
        let v = r.model.values();
        prop_assert!(rel_err(v[0], p.a) < 1e-6 && rel_err(v[1], p.b) < 1e-6 && rel_err(v[2], p.c) < 1e-6, "{:?} vs {:?}", v, p);
    }

    #[test]
    fn exact_exponential_data_is_recovered(a in 1.0..1e3f64, b in 0.05..0.9f64) {
        let p = ExponentialParams::new(a, b, 2002.0).unwrap();
        let pairs: Vec<(f64, f64)> = (2003..=2012).map(|y| (f64::from(y), p.eval(f64::from(y)))).collect();
        let r = fit(&AnnualSeries::from_pairs(&pairs).unwrap(), Family::Exponential, 2002.0).unwrap();
        prop_assert!(r.converged);
        prop_assert!(r.sse < 1e-12, "sse {}", r.sse);
        prop_assert!(rel_err(r.model.values()[0], a) < 1e-9 && rel_err(r.model.values()[1], b) < 1e-9);
    }

    #[test]
    fn fit_is_scale_equivariant(k in 0.01..100.0f64, logistic in any::<bool>()) {
        let family = if logistic { Family::Logistic } else { Family::Exponential };
        let base = fit(&reference_table1(), family, 2002.0).unwrap();
        let scaled = fit(&reference_table1().scaled(k).unwrap(), family, 2002.0).unwrap();
        prop_assert!(scaled.converged);
        let (b, s) = (base.model.values(), scaled.model.values());
        prop_assert!(rel_err(s[0], k * b[0]) < 1e-6, "a {} vs {}", s[0], k * b[0]);
        for j in 1..b.len() {
            prop_assert!(rel_err(s[j], b[j]) < 1e-6);
        }
        prop_assert!((scaled.pearson - base.pearson).abs() < 1e-9);
    }

    #[test]
    fn fit_is_shift_equivariant(dt in -300.0..300.0f64, logistic in any::<bool>()) {
        let family = if logistic { Family::Logistic } else { Family::Exponential };
        let base = fit(&reference_table1(), family, 2002.0).unwrap();
        let shifted = fit(&reference_table1().shifted(dt).unwrap(), family, 2002.0 + dt).unwrap();
        prop_assert!(shifted.converged);
        for (s, b) in shifted.model.values().iter().zip(base.model.values()) {
            prop_assert!(rel_err(*s, b) < 1e-9, "{} vs {}", s, b);
        }
    }
}

#[test]
fn inverse_of_eval_is_identity() {
    let l = LogisticParams::published();
    let e = ExponentialParams::published();
    let d = DemographicParams::default();
    for i in 0..1000 {
        let t = 1850.0 + 190.0 * f64::from(i) / 999.0;
        for m in [&l as &dyn GrowthCurve, &e] {
            let back = m.inverse(m.eval(t)).unwrap();
            assert!((back - t).abs() < 1e-9, "{t} -> {back}");
        }
        let back = d.inverse(d.eval(t)).unwrap();
        assert!((back - t).abs() < 1e-9, "{t} -> {back}");
    }
}

#[test]
fn closed_form_integrals_match_quadrature() {
    let opts = oracle();
    let l = LogisticParams::published();
    let e = ExponentialParams::published();
    let d = DemographicParams::default();
    for i in 1..=50 {
        let t = 1900.0 + 200.0 * f64::from(i) / 50.0;
        for m in [&l as &dyn GrowthCurve, &e, &d] {
            let q = adaptive_simpson(|x| m.eval(x), 1900.0, t, &opts).unwrap().value;
            let c = m.integral(1900.0, t);
            assert!(rel_err(c, q) < 1e-9, "t = {t}: {c} vs {q}");
            let naive = m.antiderivative(t) - m.antiderivative(1900.0);
            assert!(rel_err(naive, q) < 1e-6 || m.eval(1900.0) < 1e-3, "t = {t}");
        }
    }
}

#[test]
fn cumulative_metrics_match_quadrature() {
    let cm = paper_coupled();
    let opts = oracle();
    let mut prev_i = 0.0;
    let mut prev_p = 0.0;
    for k in 0..1000 {
        let t = 1900.0 + 200.0 * f64::from(k) / 999.0;
        let i = cm.cumulative_volume(t).unwrap();
        let p = cm.cumulative_population(t).unwrap();
        assert!(rel_err(i, cm.cumulative_volume_quadrature(t, &opts).unwrap()) < 1e-9, "I at {t}");
        assert!(rel_err(p, cm.cumulative_population_quadrature(t, &opts).unwrap()) < 1e-9, "P at {t}");
        assert!(i >= prev_i && p >= prev_p);
        assert!(i <= 13201.55 * (t - cm.volume_origin()));
        prev_i = i;
        prev_p = p;
    }
}

#[test]
fn models_are_nonnegative_and_vanish_in_the_past() {
    let l = LogisticParams::published();
    let e = ExponentialParams::published();
    for i in 0..=2000 {
        let t = -8000.0 + 6.0 * f64::from(i);
        assert!(l.eval(t) >= 0.0 && e.eval(t) >= 0.0);
    }
    assert!(l.eval(l.t0 - 1e4) < 1e-30 * l.a);
    assert!(e.eval(e.t0 - 1e4) < 1e-30 * e.a);
}

#[test]
fn logistic_shape() {
    let l = LogisticParams::published();
    let ti = l.inflection();
    let mut prev = f64::NEG_INFINITY;
    let mut sign_changes = Vec::new();
    let mut prev_d2 = l.deriv2(1800.0);
    for i in 0..=4000 {
        let t = 1800.0 + 0.1 * f64::from(i) + 0.0123;
        let v = l.eval(t);
        // strict while the gap to the ceiling is still representable
        if l.a - v > 1e-12 * l.a {
            assert!(v > prev, "not increasing at {t}");
        } else {
            assert!(v >= prev, "decreasing at {t}");
        }
        assert!(l.deriv1(t) > 0.0, "deriv1 at {t}");
        let d2 = l.deriv2(t);
        if d2.signum() != prev_d2.signum() {
            sign_changes.push(t);
        }
        prev = v;
        prev_d2 = d2;
    }
    assert_eq!(sign_changes.len(), 1);
    assert!((sign_changes[0] - ti).abs() <= 0.1);
}

#[test]
fn demographic_range_and_monotonicity() {
    let d = DemographicParams::default();
    let mut prev = 0.0;
    for i in 0..=4000 {
        let t = -5000.0 + 3.0 * f64::from(i);
        let n = d.eval(t);
        assert!(n > 0.0 && n < d.limit());
        assert!(n > prev);
        prev = n;
    }
}

#[test]
fn activity_coefficient_shape() {
    let cm = paper_coupled();
    let ti = LogisticParams::published().inflection();
    let mut prev = f64::INFINITY;
    for i in 0..=500 {
        let t = ti + 0.5 * f64::from(i);
        let k = cm.activity_coefficient(t).unwrap();
        assert!(k < prev && k > 0.0);
        prev = k;
    }
    for i in 0..=1000 {
        let t = cm.tb + 0.25 * f64::from(i);
        let k = cm.activity_coefficient(t).unwrap();
        assert!(k > 0.0 && k <= 1.0 + 1e-9, "K_I({t}) = {k}");
    }
    assert!(cm.activity_coefficient(1e4).unwrap() < 1e-2);
    assert!((cm.activity_coefficient(cm.tb).unwrap() - 1.0).abs() < 0.01);
}

#[test]
fn symbolic_limits_match_far_future() {
    let cm = paper_coupled();
    let a = cm.asymptotes();
    let q = cm.per_capita_stock(1e5).unwrap();
    let tau = cm.generation_time(1e5).unwrap();
    assert!(rel_err(q, a.stock_gb.unwrap()) < 1e-3, "{q}");
    assert!(rel_err(tau, a.generation_days.unwrap()) < 1e-3, "{tau}");
    assert!(rel_err(cm.per_capita_rate(1e5).unwrap(), a.rate_kbit_s.unwrap()) < 1e-3);
}

#[test]
fn published_params_are_not_better_than_fit() {
    let t1 = reference_table1();
    for family in [Family::Exponential, Family::Logistic] {
        let r = fit(&t1, family, 2002.0).unwrap();
        let published = sse(&t1, &VolumeModel::published(family));
        assert!(r.sse <= published * (1.0 + 1e-6));
        // each parameter perturbed by 0.1 % raises the objective
        let base = r.model.values();
        for j in 0..base.len() {
            for s in [-1e-3, 1e-3] {
                let mut v = base.clone();
                v[j] *= 1.0 + s;
                let m = VolumeModel::from_values(family, &v, 2002.0).unwrap();
                assert!(sse(&t1, &m) > r.sse, "{family} param {j} {s}");
            }
        }
    }
}
