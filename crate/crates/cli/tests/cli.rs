use std::f64::consts::{FRAC_PI_2, PI};
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_melnikov-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

/// `K(k)` by the arithmetic-geometric mean.
fn agm_first_kind(k: f64) -> f64 {
    let (mut a, mut b) = (1.0f64, (1.0 - k * k).sqrt());
    while (a - b).abs() > 4.0 * f64::EPSILON * a {
        (a, b) = (0.5 * (a + b), (a * b).sqrt());
    }
    FRAC_PI_2 / a
}

#[test]
fn inner_resonances_at_unit_frequency() {
    let (h, rows) = table(&stdout(&["resonances", "--family", "inner", "--omega", "1", "--m-max", "9", "--n-max", "1"]));
    let ms: Vec<u32> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(ms, (2..=9).collect::<Vec<_>>());
    for (k, check) in column(&h, &rows, "k").into_iter().zip(column(&h, &rows, "omega_check")) {
        assert!(check.abs() <= 1e-12);
        assert!(k > 0.0 && k < 1.0);
    }
    let ks = column(&h, &rows, "k");
    assert!(ks.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn unreachable_resonances_give_an_empty_table() {
    let (h, rows) = table(&stdout(&["resonances", "--omega", "10", "--m-max", "5", "--n-max", "1", "--family", "inner"]));
    assert_eq!(h[0], "family");
    assert!(rows.is_empty());
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["resonances", "--omega", "0"],
        vec!["resonances", "--omega=-1"],
        vec!["resonances", "--family", "homoclinic-plus"],
        vec!["melnikov", "--family", "inner"],
        vec!["certify", "--format", "csv"],
        vec!["contour", "--family", "sideways", "--m", "1"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn missing_resonance_exits_with_three() {
    let out = run(&["melnikov", "--m", "1", "--omega", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no resonant orbit"));
}

#[test]
fn homoclinic_table_matches_closed_form() {
    let text = stdout(&["melnikov", "--family", "homoclinic-plus", "--beta", "1", "--delta", "0", "--omega", "1", "--theta-points", "16"]);
    let (h, rows) = table(&text);
    assert_eq!(rows.len(), 16);
    assert!(column(&h, &rows, "difference").iter().all(|d| d.abs() <= 1e-8));
    let amp = 2.0 * PI / (0.5 * PI).cosh();
    for (th, c) in column(&h, &rows, "theta").into_iter().zip(column(&h, &rows, "closed_form")) {
        assert!((c - amp * th.cos()).abs() <= 1e-12);
    }
}

#[test]
fn unforced_undamped_curve_is_zero() {
    let (h, rows) = table(&stdout(&["melnikov", "--m", "3", "--beta", "0", "--delta", "0", "--theta-points", "8"]));
    for name in ["quadrature", "closed_form", "difference"] {
        assert!(column(&h, &rows, name).iter().all(|v| *v == 0.0), "{name}");
    }
}

#[test]
fn parity_zero_case() {
    let (h, rows) = table(&stdout(&["melnikov", "--m", "3", "--n", "2", "--delta", "0", "--theta-points", "16"]));
    assert!(column(&h, &rows, "closed_form").iter().all(|v| *v == 0.0));
    assert!(column(&h, &rows, "quadrature").iter().all(|v| v.abs() <= 1e-8));
}

#[test]
fn contour_matches_residue_value() {
    let (h, rows) = table(&stdout(&["contour", "--family", "inner", "--m", "3", "--beta", "1", "--theta-points", "4"]));
    let (rh, rrows) = table(&stdout(&["resonances", "--m", "3", "--m-max", "3"]));
    let k_prime = column(&rh, &rrows, "k_prime")[0];
    let expected = 4.0 * PI * agm_first_kind(k_prime).cosh();
    let theta = column(&h, &rows, "theta");
    let (re, im) = (column(&h, &rows, "re_numeric"), column(&h, &rows, "im_numeric"));
    let zero_rows: Vec<usize> = (0..rows.len()).filter(|&i| theta[i] == 0.0).collect();
    assert_eq!(zero_rows.len(), 3, "one row per radius");
    for i in zero_rows {
        assert!(im[i].abs() <= 1e-8);
        assert!((re[i] - expected).abs() <= 1e-8 * expected);
    }
    let radii = column(&h, &rows, "radius");
    assert!(radii[0] < radii[1] && radii[1] < radii[2]);
}

#[test]
fn rotating_branches_have_opposite_contour_values() {
    let args = |fam| vec!["contour", "--family", fam, "--m", "1", "--beta", "1", "--delta", "0", "--theta-points", "8"];
    let (h, plus) = table(&stdout(&args("rotating-plus")));
    let (_, minus) = table(&stdout(&args("rotating-minus")));
    for name in ["re_numeric", "im_numeric", "re_closed", "im_closed"] {
        for (p, m) in column(&h, &plus, name).into_iter().zip(column(&h, &minus, name)) {
            assert!((p + m).abs() <= 1e-9 * (1.0 + p.abs()), "{name}: {p} vs {m}");
        }
    }
    let (h0, zero) = table(&stdout(&["contour", "--m", "2", "--beta", "0", "--theta-points", "4"]));
    assert!(column(&h0, &zero, "re_closed").iter().all(|v| *v == 0.0));
    assert!(column(&h0, &zero, "re_numeric").iter().all(|v| v.abs() <= 1e-9));
}

fn certificate(beta: &str, delta: &str) -> Value {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let out = run(&["certify", "--beta", beta, "--delta", delta, "--omega", "1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("4a"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn certificate_cases() {
    let flags = |c: &Value| {
        ["prop_4a", "prop_4b", "prop_4c"].map(|p| c[p]["applies"].as_bool().unwrap())
    };
    let both = certificate("1", "1");
    assert_eq!(both["schema"], "melnikov-cert/1");
    assert_eq!(both["conventions"]["j1_arg"], "n");
    assert_eq!(flags(&both), [true, true, true]);
    assert!(both["chaos"]["ratio"].as_f64().unwrap() > 0.0);

    let unforced = certificate("0", "1");
    assert_eq!(flags(&unforced), [true, false, false]);
    assert_eq!(unforced["prop_4b"]["status"], "inconclusive");

    let undamped = certificate("1", "0");
    assert_eq!(flags(&undamped), [false, true, true]);
    assert_eq!(undamped["chaos"]["holds"], true);
    assert_eq!(undamped["chaos"]["ratio"], "inf");
}

#[test]
fn verify_scaling_and_negative_control() {
    let report: Value = serde_json::from_str(&stdout(&["verify", "--m", "3", "--eps", "1e-3,5e-4,2.5e-4,0"])).unwrap();
    assert_eq!(report["hypothesis"], "simple-zero");
    assert_eq!(report["first_order"], true);
    assert!(report["band"].as_f64().unwrap() <= 2.0);
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3]["distance_to_unperturbed"].as_f64(), Some(0.0));

    let control: Value = serde_json::from_str(&stdout(&["verify", "--m", "3", "--delta", "1", "--eps", "1e-3,5e-4"])).unwrap();
    assert_eq!(control["hypothesis"], "violated");
    assert_eq!(control["first_order"], false);
}

#[test]
fn csv_and_json_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("r.csv");
    let json_path = dir.path().join("r.json");
    let base = ["resonances", "--family", "rotating-plus", "--omega", "0.8", "--m-max", "7", "--n-max", "7"];
    let (csv_arg, json_arg) = (csv_path.to_str().unwrap(), json_path.to_str().unwrap());
    stdout(&[&base[..], &["--out", csv_arg]].concat());
    stdout(&[&base[..], &["--format", "json", "--out", json_arg]].concat());
    let (h, rows) = table(&std::fs::read_to_string(&csv_path).unwrap());
    let json: Value = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let records = json.as_array().unwrap();
    assert_eq!(records.len(), rows.len());
    assert!(!rows.is_empty());
    for name in ["k", "k_prime", "period", "omega_check"] {
        let i = h.iter().position(|c| c == name).unwrap();
        for (row, rec) in rows.iter().zip(records) {
            let v: f64 = row[i].parse().unwrap();
            assert_eq!(format!("{v:.16e}"), row[i], "text survives a parse");
            assert_eq!(rec[name].as_f64().unwrap().to_bits(), v.to_bits(), "{name}");
        }
    }
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let args = ["melnikov", "--m", "2", "--delta", "0.5", "--theta-points", "12"];
    let run_with = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_melnikov-lab"))
            .args(args)
            .env("MELNIKOV_LAB_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run_with("1"), run_with("3"));
    let bad = Command::new(env!("CARGO_BIN_EXE_melnikov-lab"))
        .args(args)
        .env("MELNIKOV_LAB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
