use chrono::{Duration, NaiveDate};
use feelab::forecast::{
    build_features, fit_ts, predict_components, read_daily_series, write_components_csv, Holiday, HolidaySpec,
    TsConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn day(m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, m, d).unwrap()
}

fn window(n: i64) -> Vec<NaiveDate> {
    (0..n).map(|i| day(8, 1) + Duration::days(i)).collect()
}

fn drops() -> HolidaySpec {
    HolidaySpec(vec![
        Holiday::new("Fatales", day(8, 31)),
        Holiday::new("Pointilla", day(9, 9)),
        Holiday::new("GalaxyEggs", day(9, 14)),
    ])
}

fn series(dates: &[NaiveDate], holidays: &HolidaySpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dates
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let t = i as f64;
            let h = if holidays.0.iter().any(|h| h.covers(*d)) { 5.0 } else { 0.0 };
            1.0 + 0.1 * t + 2.0 * (std::f64::consts::TAU * t / 7.0).sin() + h + rng.gen_range(-0.1..0.1)
        })
        .collect()
}

#[test]
fn components_add_up_and_band_brackets() {
    let dates = window(90);
    let y = series(&dates, &drops(), 1);
    let model = fit_ts(&dates, &y, &drops(), &TsConfig::default()).unwrap();
    let comps = predict_components(&model, &dates);
    assert_eq!(comps.len(), 90);
    for c in &comps {
        assert!((c.trend + c.weekly + c.holiday - c.yhat).abs() < 1e-12);
        assert!(c.lo < c.yhat && c.yhat < c.hi);
    }
    let on = comps.iter().filter(|c| c.holiday != 0.0).count();
    assert_eq!(on, 3);
}

#[test]
fn dropping_planted_holidays_hurts_fit_on_those_days() {
    let dates = window(90);
    let y = series(&dates, &drops(), 2);
    let with = predict_components(&fit_ts(&dates, &y, &drops(), &TsConfig::default()).unwrap(), &dates);
    let without = predict_components(
        &fit_ts(&dates, &y, &HolidaySpec::default(), &TsConfig::default()).unwrap(),
        &dates,
    );
    for h in &drops().0 {
        let i = dates.iter().position(|d| *d == h.date).unwrap();
        let err_with = (with[i].yhat - y[i]).abs();
        let err_without = (without[i].yhat - y[i]).abs();
        assert!(err_with < 0.5 && err_without > 3.0, "{}: {err_with} vs {err_without}", h.name);
    }
}

#[test]
fn holiday_outside_window_has_zero_effect() {
    let dates = window(60);
    let mut spec = drops();
    spec.0.push(Holiday::new("Later", day(12, 25)));
    let y = series(&dates, &spec, 3);
    let model = fit_ts(&dates, &y, &spec, &TsConfig::default()).unwrap();
    let later = model.effect("Later").unwrap();
    assert!(!later.in_window);
    assert_eq!(later.effect, 0.0);
}

#[test]
fn windowed_holiday_covers_neighbours() {
    let dates = window(40);
    let spec = HolidaySpec(vec![Holiday {
        name: "drop".into(),
        date: day(8, 20),
        window: 1,
    }]);
    let f = build_features(&dates, &spec, &TsConfig::default()).unwrap();
    let col = f.names.iter().position(|n| n == "holiday:drop").unwrap();
    let active: Vec<usize> = (0..dates.len()).filter(|&i| f.x.get(i, col) == 1.0).collect();
    assert_eq!(active, vec![18, 19, 20]);
}

#[test]
fn components_csv_round_trips_through_series_reader() {
    let dates = window(30);
    let y = series(&dates, &HolidaySpec::default(), 4);
    let model = fit_ts(&dates, &y, &HolidaySpec::default(), &TsConfig::default()).unwrap();
    let comps = predict_components(&model, &dates);
    let mut buf = Vec::new();
    write_components_csv(&comps, &mut buf).unwrap();
    let (d2, yhat) = read_daily_series(buf.as_slice(), "yhat").unwrap();
    assert_eq!(d2, dates);
    for (a, b) in yhat.iter().zip(&comps) {
        assert_eq!(*a, b.yhat);
    }
}

#[test]
fn too_short_series_is_rejected() {
    let dates = window(5);
    let y = vec![1.0; 5];
    assert!(fit_ts(&dates, &y, &HolidaySpec::default(), &TsConfig::default()).is_err());
}
