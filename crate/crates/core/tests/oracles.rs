//! Statistics and PCA against values frozen from an independent
//! implementation (see tools/oracles.py).

use gridprobe_core::deviation::{mean_sem, ols, ttest_ind, ttest_ind_with, TTestKind};
use gridprobe_core::deviation::pca_matrix;
use serde_json::Value;

fn oracle() -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/oracles/statistics.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    v.as_array().unwrap().iter().map(floats).collect()
}

fn same_6_digits(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 5e-7 * a.abs().max(b.abs())
}

#[test]
fn student_and_welch() {
    let o = oracle();
    let cases = o["ttest"].as_array().unwrap();
    assert_eq!(cases.len(), 20);
    for (i, c) in cases.iter().enumerate() {
        let (xs, ys) = (floats(&c["xs"]), floats(&c["ys"]));
        let r = ttest_ind(&xs, &ys).unwrap();
        assert!(same_6_digits(r.t, c["t"].as_f64().unwrap()), "case {i}: t {}", r.t);
        assert!(same_6_digits(r.p, c["p"].as_f64().unwrap()), "case {i}: p {}", r.p);
        let w = ttest_ind_with(&xs, &ys, TTestKind::Welch).unwrap();
        assert!(same_6_digits(w.t, c["welch_t"].as_f64().unwrap()), "case {i}: welch t");
        assert!(same_6_digits(w.p, c["welch_p"].as_f64().unwrap()), "case {i}: welch p {}", w.p);
        let back = ttest_ind(&ys, &xs).unwrap();
        assert_eq!(back.t, -r.t);
        assert_eq!(back.p, r.p);
    }
}

#[test]
fn mean_and_sem() {
    for c in oracle()["ttest"].as_array().unwrap() {
        let r = mean_sem(&floats(&c["xs"])).unwrap();
        assert!(same_6_digits(r.mean, c["mean_x"].as_f64().unwrap()));
        assert!(same_6_digits(r.sem.unwrap(), c["sem_x"].as_f64().unwrap()));
    }
}

#[test]
fn least_squares() {
    for c in oracle()["ols"].as_array().unwrap() {
        let fit = ols(&floats(&c["xs"]), &floats(&c["ys"])).unwrap();
        assert!((fit.slope - c["slope"].as_f64().unwrap()).abs() < 1e-12);
        assert!((fit.intercept - c["intercept"].as_f64().unwrap()).abs() < 1e-12);
    }
    // Normal equations by hand: slope 1.8, intercept 0.05.
    let fit = ols(&[0.0, 0.25, 0.5], &[0.0, 0.6, 0.9]).unwrap();
    assert!((fit.slope - 1.8).abs() < 1e-12 && (fit.intercept - 0.05).abs() < 1e-12);
}

#[test]
fn pca_matches_up_to_sign() {
    for (m_idx, c) in oracle()["pca"].as_array().unwrap().iter().enumerate() {
        let rows = matrix(&c["matrix"]);
        let (components, _, explained, projections) = pca_matrix(&rows).unwrap();
        let expected = matrix(&c["components"]);
        let proj = matrix(&c["projections"]);
        let ratios = floats(&c["explained_variance_ratio"]);
        for (k, want) in expected.iter().enumerate() {
            let got = &components[k];
            let dot: f64 = got.iter().zip(want).map(|(a, b)| a * b).sum();
            let sign = dot.signum();
            for (a, b) in got.iter().zip(want) {
                assert!((a - sign * b).abs() < 1e-9, "matrix {m_idx} component {k}");
            }
            for (i, row) in proj.iter().enumerate() {
                assert!((projections[i][k] - sign * row[k]).abs() < 1e-9);
            }
            assert!((explained[k] - ratios[k]).abs() < 1e-9);
        }
    }
}
