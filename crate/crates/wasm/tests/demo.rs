use robin_spectra::oracle::{interval_robin_p2, interval_xi_of_m};
use robin_spectra_wasm::{maximize_json, robin_json, sweep_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn robin_on_the_interval() {
    let v = parse(robin_json("builtin:interval:200", 2.0, 1.0).unwrap());
    let exact = interval_robin_p2(1.0, 1.0).unwrap().lambda;
    assert!((v["lambda"].as_f64().unwrap() - exact).abs() < 1e-3 * exact);
    assert!(v["lambda"].as_f64().unwrap() < v["lambda_dirichlet"].as_f64().unwrap());
    assert_eq!(v["u"].as_array().unwrap().len(), 201);
    assert_eq!(v["mesh"]["cells"].as_array().unwrap().len(), 200);
}

#[test]
fn maximize_on_the_interval() {
    let v = parse(maximize_json("builtin:interval:200", 2.0, 2.0).unwrap());
    let exact = interval_xi_of_m(2.0).unwrap().lambda;
    assert!((v["xi_m"].as_f64().unwrap() - exact).abs() < 5e-3 * exact);
    let sigma = v["sigma"].as_array().unwrap();
    assert_eq!(sigma.len(), 2);
    let mass: f64 = sigma.iter().map(|s| s[2].as_f64().unwrap()).sum();
    assert!((mass - 2.0).abs() < 1e-9);
}

#[test]
fn sweep_rows_pass() {
    let v = parse(sweep_json("builtin:disk:0.2", 3.0, "0.5,2,8").unwrap());
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["pass"] == true));
    assert!(rows
        .windows(2)
        .all(|w| w[1]["big_lambda"].as_f64() >= w[0]["big_lambda"].as_f64()));
}

#[test]
fn rejects_what_the_page_cannot_serve() {
    assert!(robin_json("file:/etc/passwd", 2.0, 1.0).is_err());
    assert!(robin_json("builtin:disk:0.01", 2.0, 1.0).is_err());
    assert!(robin_json("builtin:interval:50", 20.0, 1.0).is_err());
    assert!(sweep_json("builtin:interval:50", 2.0, "2,1").is_err());
}
