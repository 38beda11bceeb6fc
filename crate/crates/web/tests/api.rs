use serde_json::Value;
use tunable_ht_web::{d_b_sweep, exponent_trace, loss_curves};

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.expect("ok")).unwrap()
}

#[test]
fn loss_curves_one_series_per_nu() {
    let v = parse(loss_curves("1, 2, inf", 20));
    let series = v.as_array().unwrap();
    assert_eq!(series.len(), 3);
    assert_eq!(series[2]["label"], "ν = inf");
    let y = series[2]["y"].as_array().unwrap();
    assert_eq!(y.len(), 20);
    assert_eq!(y[19], 0.0);
    assert!((y[0].as_f64().unwrap() - 0.95).abs() < 1e-12);
}

#[test]
fn sweep_ends_at_zero() {
    let v = parse(d_b_sweep("0.5,0.5", "0.7,0.3", 1.0, 2.0, 11));
    let y = v["y"].as_array().unwrap();
    assert_eq!(y.len(), 11);
    assert!((y[0].as_f64().unwrap() - 0.030757).abs() < 1e-5);
    assert_eq!(y[10], 0.0);
}

#[test]
fn traces_for_both_kinds() {
    let np = parse(exponent_trace("np", "0.5,0.5", "0.7,0.3", "2", 0.1, 0.5, 100, 25));
    assert_eq!(np["estimate"]["x"].as_array().unwrap().len(), 4);
    assert_eq!(np["references"][0][0], "kl");
    let bayes = parse(exponent_trace("bayes", "0.5,0.5", "0.7,0.3", "inf", 0.1, 0.5, 60, 20));
    assert_eq!(bayes["references"][0][0], "chernoff");
}

#[test]
fn bad_input_is_reported() {
    assert!(d_b_sweep("0.5,x", "0.7,0.3", 1.0, 2.0, 11).unwrap_err().contains("'x'"));
    assert!(exponent_trace("np", "0.5,0.5", "0.7,0.3", "2", 0.1, 0.5, 5000, 10).is_err());
    assert!(exponent_trace("other", "0.5,0.5", "0.7,0.3", "2", 0.1, 0.5, 10, 10).is_err());
    assert!(loss_curves("0.5", 10).is_err());
}
