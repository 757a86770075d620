//! ADF statistics against values frozen from statsmodels' `adfuller`
//! (regression "c") on the fixture series.

use seqcast::data::{adf_test, LagSelection};

fn fixture() -> Vec<(String, Vec<f64>)> {
    let text = include_str!("fixtures/adf_series.csv");
    let mut lines = text.lines();
    let names: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let mut cols = vec![Vec::new(); names.len()];
    for line in lines {
        for (c, v) in line.split(',').enumerate() {
            cols[c].push(v.parse::<f64>().unwrap());
        }
    }
    names.into_iter().zip(cols).collect()
}

fn series(name: &str) -> Vec<f64> {
    fixture().into_iter().find(|(n, _)| n == name).unwrap().1
}

/// (series, lag selection, statistic, p-value, lags used, n_obs)
const REFERENCE: &[(&str, Option<usize>, f64, f64, usize, usize)] = &[
    ("random_walk", Some(0), -1.3624610058155164, 0.6001346892523277, 0, 499),
    ("random_walk", Some(4), -1.3451575805811498, 0.6082679768491607, 4, 495),
    ("random_walk", None, -1.3624610058155164, 0.6001346892523277, 0, 499),
    ("ar_half", Some(0), -11.89266563374639, 5.8191285854634685e-22, 0, 499),
    ("ar_half", Some(4), -8.554293368287725, 9.04669131247055e-14, 4, 495),
    ("ar_half", None, -9.646652923556092, 1.4717057481232045e-16, 3, 496),
    ("white_noise", Some(0), -23.133283852986434, 0.0, 0, 499),
    ("white_noise", Some(4), -9.941955758314895, 2.649903817795413e-17, 4, 495),
    ("white_noise", None, -11.254243237228055, 1.682453812229142e-20, 2, 497),
    ("ar_two", Some(0), -7.283109198306488, 1.4825891758213526e-10, 0, 499),
    ("ar_two", Some(4), -8.728492990395708, 3.2394634602181383e-14, 4, 495),
    ("ar_two", None, -12.238511126548598, 1.0150988265555793e-22, 1, 498),
];

#[test]
fn statistics_match_reference() {
    for &(name, lag, stat, p, lags, nobs) in REFERENCE {
        let sel = match lag {
            Some(l) => LagSelection::Fixed(l),
            None => LagSelection::default(),
        };
        let r = adf_test(&series(name), sel).unwrap();
        assert!(
            (r.statistic - stat).abs() < 1e-6,
            "{name} {lag:?}: {} vs {stat}",
            r.statistic
        );
        assert!((r.p_value - p).abs() <= 1e-9 + 1e-6 * p, "{name} {lag:?}: {} vs {p}", r.p_value);
        assert_eq!((r.lags_used, r.n_obs), (lags, nobs), "{name} {lag:?}");
    }
}

#[test]
fn unit_root_and_stationary_decisions() {
    let rw = adf_test(&series("random_walk"), LagSelection::Fixed(0)).unwrap();
    assert!(rw.p_value > 0.10);
    let wn = adf_test(&series("white_noise"), LagSelection::Fixed(0)).unwrap();
    assert!(wn.p_value < 0.01);
}
