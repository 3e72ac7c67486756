use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command, Output};

use lpiso_core::chord::DiscreteMeasure;
use lpiso_core::lp::LinearProgram;
use serde_json::Value;

fn lpiso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpiso")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lpiso-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn euclidean_certificate() {
    let out = lpiso(&["certificate", "--dim", "4", "--kappa", "0", "--radius", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["passed"], true);
    let r = &v["result"];
    assert_eq!((r["a"].as_f64(), r["b"].as_f64(), r["c"].as_f64()), (Some(1.0), Some(0.0), Some(0.0)));
    assert!((r["d"].as_f64().unwrap() - 12.0).abs() < 1e-12);
    assert_eq!(v["config"]["global"]["dim"], 4);
    assert!(v["tolerances"]["consistency"].is_number());
}

#[test]
fn profile_csv_is_the_planar_isoperimetric_curve() {
    let out = lpiso(&["profile", "--dim", "2", "--kappa", "0", "--vmin", "1", "--vmax", "4", "--steps", "4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("volume,area"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (v, a) = l.split_once(',').unwrap();
            (v.parse().unwrap(), a.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 4);
    for (i, (v, a)) in rows.into_iter().enumerate() {
        assert_eq!(v, (i + 1) as f64);
        assert!((a - 2.0 * (PI * v).sqrt()).abs() < 1e-12);
    }
}

#[test]
fn spherical_lemma_passes() {
    let out = lpiso(&["lemma", "--case", "spherical", "--grid", "120"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let scan = &v["result"]["cases"][0]["h_scan"];
    assert!(scan["min"].as_f64().unwrap() >= -1e-9);
    assert_eq!(scan["grid"]["n"], 120);
}

#[test]
fn reports_are_byte_identical() {
    let args = ["measure-check", "--dim", "4", "--kappa", "1", "--radius", "0.8", "--mc-samples", "20000", "--seed", "5"];
    let a = lpiso(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_lpiso")).args(args).env("LPISO_THREADS", "1").output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let q = ["negbound", "--kappa", "-1", "--radius", "0.5", "--grid", "12"];
    let c = Command::new(env!("CARGO_BIN_EXE_lpiso")).args(q).env("LPISO_THREADS", "3").output().unwrap();
    assert_eq!(c.stdout, lpiso(&q).stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(lpiso(&["certificate", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(lpiso(&["frobnicate"]).status.code(), Some(2));
    // Sampling without a seed.
    assert_eq!(lpiso(&["measure-check", "--radius", "1", "--mc-samples", "10"]).status.code(), Some(2));
    // Both or neither of volume and radius.
    assert_eq!(lpiso(&["certificate", "--dim", "4"]).status.code(), Some(2));
    assert_eq!(lpiso(&["certificate", "--radius", "1", "--volume", "1"]).status.code(), Some(2));
    // Past the hemisphere.
    assert_eq!(lpiso(&["certificate", "--kappa", "1", "--radius", "2"]).status.code(), Some(2));
    // The signed certificate fails the nonnegative constraint set.
    let out = lpiso(&["certificate", "--dim", "4", "--kappa", "-1", "--radius", "0.7", "--constraint-set", "table1"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["passed"], false);
    assert!(v["result"]["report"]["sign_flags"].as_array().unwrap().iter().any(|f| f == "negative b"));
}

#[test]
fn measure_files_round_trip() {
    for name in ["mu.csv", "mu.json"] {
        let path = scratch(name);
        let p = path.to_str().unwrap();
        let out = lpiso(&["measure-check", "--dim", "2", "--kappa", "-1", "--radius", "1.1", "--measure-out", p]);
        assert_eq!(out.status.code(), Some(0));
        let text = std::fs::read_to_string(&path).unwrap();
        let mu = if name.ends_with("csv") {
            DiscreteMeasure::read_csv(text.as_bytes()).unwrap()
        } else {
            DiscreteMeasure::from_json(&text).unwrap()
        };
        assert_eq!(mu.atoms.len(), 128);
        let back = lpiso(&["measure-check", "--dim", "2", "--kappa", "-1", "--radius", "1.1", "--measure", p]);
        assert_eq!(back.status.code(), Some(0));
        assert_eq!(json(&back)["result"]["measure"], "external");
    }
}

#[test]
fn lp_tables_and_text_export() {
    let path = scratch("table1.lp");
    let p = path.to_str().unwrap();
    let out = lpiso(&["lp", "--dim", "2", "--kappa", "1", "--radius", "0.9", "--grid", "10", "--lp-out", p]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["result"]["program"]["relative_error"].as_f64().unwrap().abs() <= 0.02);
    let lp = LinearProgram::from_text(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(lp.rows.len(), v["result"]["program"]["rows"].as_u64().unwrap() as usize);

    let out = lpiso(&["lp", "--table", "2", "--m", "2", "--dim", "2", "--volume", "1", "--grid", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let s = &json(&out)["result"]["scalings"];
    assert!(s["corrected"]["relative_error"].as_f64().unwrap().abs() <= 0.02);
    assert!(s["as-printed"]["optimum"].is_number());
}

#[test]
fn prince_shapes() {
    let out = lpiso(&["prince", "--shape", "disk", "--r", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["result"]["gravity"].as_f64().unwrap() - 0.5).abs() <= 1e-10);
    let path = scratch("half-disk.csv");
    let mut table = String::from("alpha,L\n");
    for i in 0..=100 {
        let a = -PI / 2.0 + PI * i as f64 / 100.0;
        table += &format!("{a},{}\n", 1.5 * a.cos());
    }
    std::fs::write(&path, table).unwrap();
    let out = lpiso(&["prince", "--shape", "csv", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["result"]["margin"].as_f64().unwrap() >= -1e-10);
    assert_eq!(lpiso(&["prince", "--shape", "csv"]).status.code(), Some(2));
}

#[test]
fn relative_and_negbound_reports() {
    let out = lpiso(&["relative", "--dim", "2", "--kappa", "0", "--m", "2", "--volume", "1.5707963267948966"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["result"]["bound"].as_f64().unwrap() - PI).abs() < 1e-12);
    let out = lpiso(&["negbound", "--kappa", "-4", "--radius", "0.25", "--grid", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["hyp2"]["convention"], "bare-volume");
    assert!(v["result"]["question1"]["complex_hyperbolic"]["best_margin"].as_f64().unwrap() < 0.0);
    assert_eq!(lpiso(&["negbound", "--kappa", "1", "--radius", "0.5"]).status.code(), Some(2));
}

#[test]
fn out_flag_writes_the_report() {
    let path = scratch("report.json");
    let out = lpiso(&["prince", "--shape", "square", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "prince");
}
