use kedlab_web::{curve_json, enumerate_json, probe_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn enumeration_matches_counts() {
    for (dim, periodic, n) in [(1, false, 4), (2, false, 7), (3, false, 12), (1, true, 7)] {
        let rows = parse(enumerate_json(dim, periodic).unwrap());
        assert_eq!(rows.as_array().unwrap().len(), n, "D={dim} periodic={periodic}");
    }
    let rows = parse(enumerate_json(3, false).unwrap());
    assert_eq!(rows[0]["class"], "LocalizedAdmissible");
    assert_eq!(rows[0]["q_num"], 5);
    assert!(enumerate_json(0, false).is_err());
}

#[test]
fn curve_tracks_its_asymptote() {
    let c = parse(curve_json("hydrogenic", "2", 200).unwrap());
    assert_eq!(c["abscissa"], "r");
    assert_eq!(c["log_scale"], true);
    let x = c["x"].as_array().unwrap();
    let y = c["y"].as_array().unwrap();
    assert_eq!(x.len(), 200);
    let line = &c["predicted"];
    assert_eq!(line["slope"].as_f64().unwrap(), -2.0);
    // t = rho / 2 * 8 on hydrogen: exactly linear in r
    let (xs, ys) = (x[120].as_f64().unwrap(), y[120].as_f64().unwrap());
    let on_line = line["slope"].as_f64().unwrap() * xs + line["intercept"].as_f64().unwrap();
    assert!((ys - on_line).abs() < 1e-9);
}

#[test]
fn gaussian_curve_uses_squared_radius() {
    let c = parse(curve_json("gauss:a=1,D=3", "0,1", 64).unwrap());
    assert_eq!(c["abscissa"], "r2");
    let w = c["window"].as_array().unwrap();
    assert!((w[0].as_f64().unwrap() - 200.0).abs() < 1e-9);
}

#[test]
fn periodic_curve_is_raw_and_repeats() {
    let c = parse(curve_json("cos:rho0=1,A=0.5,L=2", "2", 301).unwrap());
    assert_eq!(c["log_scale"], false);
    assert!(c["predicted"].is_null());
    let y = c["y"].as_array().unwrap();
    // three cells of 100 intervals each
    let a = y[10].as_f64().unwrap();
    let b = y[110].as_f64().unwrap();
    assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
}

#[test]
fn probe_reports_agreement_and_errors() {
    let p = parse(probe_json("exp:b=1,D=2", "0,0,1", 0.0).unwrap());
    assert_eq!(p["probe"]["agrees_with_theory"], true);
    assert_eq!(p["class"], "LocalizedAdmissible");
    let p = parse(probe_json("cos:rho0=1,A=0.5,L=2", "0,0,1", 0.0).unwrap());
    assert_eq!(p["periodic"]["bounded"], true);
    let err = probe_json("hydrogenic", "1,0", 0.0).unwrap_err();
    assert!(err.contains("trailing zeros"), "{err}");
    assert!(probe_json("nope", "2", 0.0).is_err());
}
