#[path = "../../core/tests/common/mod.rs"]
mod common;

use common::cyclotomic::ExactSum;
use common::{lobachevsky_quadrature, rel_gap, C64};
use qvol_core::cfrac::SurgeryPresentation;
use serde_json::Value;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command, Output};

fn qvol(args: &[&str]) -> Output {
    qvol_env(args, None)
}

fn qvol_env(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qvol"));
    cmd.args(args).env_remove("QVOL_THREADS");
    if let Some(t) = threads {
        cmd.env("QVOL_THREADS", t);
    }
    cmd.output().expect("qvol runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON output")
}

fn scratch(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn rt_matches_exact_oracle() {
    let v = json(&qvol(&["rt", "--p", "5", "--q", "1", "--a0", "0", "--r", "7", "--m0", "2"]));
    let pres = SurgeryPresentation::new(5, 1, 0).unwrap();
    let want = ExactSum::new(7).rt(0, &pres.a, pres.sigma, 2);
    let got = C64::new(v["re"].as_f64().unwrap(), v["im"].as_f64().unwrap());
    assert!(rel_gap(got, want) < 1e-12, "{got} vs {want}");
    assert!(v["cancellationEstimate"].is_number());
    assert_eq!(v["m0"], 2);
    assert!(v["termCount"].as_u64().unwrap() > 0);
}

#[test]
fn rt_chooses_color_from_theta() {
    let v = json(&qvol(&["rt", "--p", "5", "--q", "1", "--r", "21", "--theta", "pi"]));
    let m0 = v["m0"].as_u64().unwrap();
    // m0 = round((r - 2)/2 - θr/4π) = round(9.5 - 5.25).
    assert_eq!(m0, 4);
    assert_eq!(v["thetaRequested"].as_f64().unwrap(), PI);
    let again = json(&qvol(&["rt", "--p", "5", "--q", "1", "--r", "21", "--m0", "4"]));
    assert_eq!(v["re"], again["re"]);
    assert_eq!(v["im"], again["im"]);
}

#[test]
fn excluded_slope_exits_with_usage_code() {
    let out = qvol(&["rt", "--p", "1", "--q", "0", "--r", "7", "--m0", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("(1, 0)") || err.contains("(1,0)") || err.contains("excluded"), "stderr: {err}");
    let out = qvol(&["rt", "--p", "5", "--q", "1", "--r", "7"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn geom_near_complete_structure() {
    let out = qvol(&["geom", "--p", "5", "--q", "1", "--theta", "1e-3"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&String::from_utf8(out.stdout).unwrap());
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let vol: f64 = rows[0][col("vol")].parse().unwrap();
    assert!((vol - 6.0 * lobachevsky_quadrature(PI / 3.0)).abs() < 1e-4, "vol {vol}");
    assert!(rows[0][col("gluing_residual")].parse::<f64>().unwrap() < 1e-10);
    assert!(rows[0][col("grad_norm")].parse::<f64>().unwrap() < 1e-10);
}

#[test]
fn geom_grid_reports_monotone_volume() {
    let v = json(&qvol(&["geom", "--p", "5", "--q", "1", "--theta-grid", "0.1:6:16", "--format", "json"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r["vol_decreasing"] == 1));
    assert!(rows.iter().all(|r| r["gluing_residual"].as_f64().unwrap() < 1e-10));
    assert_eq!(v["family"]["strictlyDecreasing"], true);
    assert!(v["family"]["minImDhlDhm"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_writes_csv_with_decreasing_error() {
    let path = scratch("verify.csv");
    let out = qvol(&[
        "verify", "--p", "5", "--q", "1", "--theta", "pi", "--r-min", "51", "--r-max", "201", "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let (header, rows) = csv_rows(&text);
    assert_eq!(header, ["r", "m0", "rt_re", "rt_im", "pred_re", "pred_im", "ratio_err", "log_growth"]);
    assert_eq!(rows.len(), 4);
    let err: Vec<f64> = rows.iter().map(|r| r[6].parse().unwrap()).collect();
    assert!(err.windows(2).all(|w| w[1] < w[0]), "{err:?}");
    // 17 significant digits in every float field.
    for row in &rows {
        for field in &row[2..] {
            let mantissa = field.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17, "field {field}");
        }
    }
}

#[test]
fn verify_rejects_angle_failing_hypothesis() {
    let out = qvol(&["verify", "--p", "5", "--q", "1", "--theta", "6.2", "--r-min", "51", "--r-max", "51"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let out = qvol(&["verify", "--p", "5", "--q", "1", "--theta", "pi", "--r-min", "50", "--r-max", "101"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_json_fit_block() {
    let v = json(&qvol(&[
        "verify", "--p", "5", "--q", "1", "--theta", "pi", "--r-min", "51", "--r-max", "151", "--format", "json",
    ]));
    let fit = &v["fit"];
    let (vol_fit, geom_vol, gap) =
        (fit["volFit"].as_f64().unwrap(), fit["geomVol"].as_f64().unwrap(), fit["volGap"].as_f64().unwrap());
    assert_eq!(gap, (vol_fit - geom_vol).abs());
    assert!(gap < 1e-2, "volFit {vol_fit} vs {geom_vol}");
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn flags_override_config_file() {
    let path = scratch("sweep.conf");
    std::fs::write(&path, "# sweep\np = 5\nq = 1\ntheta = pi\nrMin = 51\nr_max = 101\nformat = json\n").unwrap();
    let cfg = path.to_str().unwrap();
    let v = json(&qvol(&["verify", "--config", cfg]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    let v = json(&qvol(&["verify", "--config", cfg, "--r-max", "151"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    let out = qvol(&["verify", "--config", cfg, "--format", "csv"]);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("r,m0,"));
}

#[test]
fn worker_count_never_changes_output() {
    let args = ["verify", "--p", "5", "--q", "1", "--theta", "pi", "--r-min", "51", "--r-max", "151"];
    let base = qvol_env(&args, Some("1"));
    assert!(base.status.success());
    for t in ["4", "8"] {
        assert_eq!(qvol_env(&args, Some(t)).stdout, base.stdout, "QVOL_THREADS = {t}");
    }
    let rt = ["rt", "--p", "7", "--q", "3", "--a0", "-2", "--r", "9", "--m0", "3"];
    let base = qvol_env(&rt, Some("1"));
    for t in ["4", "8"] {
        assert_eq!(qvol_env(&rt, Some(t)).stdout, base.stdout, "QVOL_THREADS = {t}");
    }
    assert_eq!(qvol_env(&rt, Some("0")).status.code(), Some(2));
}

#[test]
fn fourier_check_reports_gap_and_ordering() {
    let v = json(&qvol(&["fourier-check", "--p", "5", "--q", "1", "--theta", "pi", "--r", "13", "--nmax", "1"]));
    assert_eq!(v["r"], 13);
    assert!(v["poisson"]["gap"].as_f64().unwrap() >= 0.0);
    let dom = v["dominance"].as_array().unwrap();
    assert_eq!(dom.len(), 2);
    for d in dom {
        assert_eq!(d["others"].as_array().unwrap().len(), 8);
        assert_eq!(d["dominant"], d["largestOther"].as_f64().unwrap() < d["leading"].as_f64().unwrap());
    }
}

#[test]
fn specfun_lobachevsky() {
    let v = json(&qvol(&["specfun", "lobachevsky", "--theta", "pi/6"]));
    assert!((v["re"].as_f64().unwrap() - lobachevsky_quadrature(PI / 6.0)).abs() < 1e-12);
    let v = json(&qvol(&["specfun", "dilog", "--re", "-1"]));
    assert!((v["re"].as_f64().unwrap() + PI * PI / 12.0).abs() < 1e-15);
    assert_eq!(qvol(&["specfun", "qdilog", "--re", "1"]).status.code(), Some(2));
    assert_eq!(qvol(&["specfun", "log", "--re", "-1"]).status.code(), Some(1));
}
