use std::process::{Command, Output};

use serde_json::Value;

fn hyperdual(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hyperdual"));
    cmd.args(args).env_remove("HYPERDUAL_THREADS");
    if let Some(t) = threads {
        cmd.env("HYPERDUAL_THREADS", t);
    }
    cmd.output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn selberg_example_passes() {
    let out = hyperdual(&["selberg-check", "--l", "2", "--m", "0.7", "--kappa", "2.5"], None);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["check"], "selberg-check");
    assert_eq!(r["pass"], true);
    let keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["schema", "check", "params", "values", "max_rel_err", "tolerance", "pass", "runtime_ms", "timestamp"]);
}

#[test]
fn duality_example_passes() {
    let out = hyperdual(&["duality-check", "--m1", "2.3", "--m2", "1", "--l1", "1.3", "--l2", "2", "--kappa", "2.5", "--z", "1+2i"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(report(&out)["max_rel_err"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn lower_half_plane_is_a_config_error() {
    for z in ["1-2i", "3"] {
        let out = hyperdual(&["duality-check", "--z", z], None);
        assert_eq!(out.status.code(), Some(2), "z = {z}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("Im z > 0"));
    }
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(hyperdual(&["duality-check", "--m1", "1", "--l1", "1"], None).status.code(), Some(2));
    assert_eq!(hyperdual(&["selberg-check", "--l", "1", "--m", "0.7"], Some("zero")).status.code(), Some(2));
    assert_eq!(hyperdual(&["selberg-check", "--l", "1", "--m", "0.7 + 1i"], None).status.code(), Some(2));
}

#[test]
fn failing_check_exits_with_one() {
    let out = hyperdual(&["saddle-check", "--band-low", "10", "--band-high", "20"], None);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["pass"], false);
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let args = ["duality-check", "--m2", "1", "--l2", "3", "--z", "3i"];
    let strip = |mut v: Value| {
        let o = v.as_object_mut().unwrap();
        o.remove("timestamp");
        o.remove("runtime_ms");
        v
    };
    let one = strip(report(&hyperdual(&args, Some("1"))));
    let three = strip(report(&hyperdual(&args, Some("3"))));
    assert_eq!(one, three);
}

#[test]
fn dim_scan_writes_csv() {
    let out = hyperdual(&["dim-scan", "--l2", "1,2,8"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "l2,l1,direct,dual,ratio,err,saddle,dual_over_saddle");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(!rows[1][2].is_empty() && rows[2][2].is_empty());
}

#[test]
fn glrep_and_saddle_checks_pass() {
    for args in [&["glrep-check", "--m2", "2", "--l2", "3", "--points", "5"][..], &["saddle-check", "--kind", "inner", "--a", "0.25"][..]] {
        let out = hyperdual(args, None);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stdout));
    }
}
