use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("lg-{name}-{}", std::process::id()));
    fs::create_dir_all(&d).unwrap();
    d
}

fn lg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lg")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("domain.json");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn ball(dir: &Path) -> String {
    write_config(dir, r#"{"type":"ball","n":2}"#)
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn geodesic_ball_trace() {
    let d = scratch("geo");
    let out = d.join("disc.json");
    let o = lg(&["geodesic", "--domain", &ball(&d), "--p", "1,0", "--vhat", "0", "--nodes", "64", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let disc: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(disc["phi"]["n"], 64);
    let csv = fs::read_to_string(d.join("disc.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "theta,re_z1,re_z2,im_z1,im_z2");
    let rs = rows(&csv);
    assert_eq!(rs.len(), 64);
    for r in &rs {
        let v: Vec<f64> = r.iter().map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - v[0].cos()).abs() < 1e-10 && (v[3] - v[0].sin()).abs() < 1e-10);
        assert!(v[2].abs() < 1e-10 && v[4].abs() < 1e-10);
        // 17 significant digits.
        assert_eq!(r[1].split('e').next().unwrap().trim_start_matches('-').len(), 18);
    }
}

#[test]
fn bad_config_exits_1() {
    let d = scratch("badcfg");
    let cfg = write_config(&d, r#"{"type":"ellipsoid","n":2,"epsilon":1.5,"B":[[1,0],[0,1]]}"#);
    let o = lg(&["geodesic", "--domain", &cfg, "--p", "1,0", "--vhat", "0", "--out", d.join("x.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("NotSlc"));

    let o = lg(&["geodesic", "--domain", &ball(&d), "--p", "1,zz", "--vhat", "0", "--out", "x.json"]);
    assert_eq!(o.status.code(), Some(1));
    let o = lg(&["geodesic", "--domain", &ball(&d), "--p", "0.5,0", "--vhat", "0", "--out", "x.json"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn io_errors_exit_3() {
    let d = scratch("io");
    let o = lg(&["geodesic", "--domain", d.join("missing.json").to_str().unwrap(), "--p", "1,0", "--vhat", "0", "--out", "x.json"]);
    assert_eq!(o.status.code(), Some(3));
    let o = lg(&["geodesic", "--domain", &ball(&d), "--p", "1,0", "--vhat", "0", "--nodes", "32", "--out", d.join("no/such/dir.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn resolution_study() {
    let d = scratch("res");
    let cfg = write_config(&d, r#"{"type":"ellipsoid","n":2,"epsilon":0.2,"B":[[1,0],[0,1]]}"#);
    // Boundary point on the real z₁ axis: x²(1 + ε) = 1.
    let p = format!("{:.17},0", 1.0 / 1.2f64.sqrt());
    let mut coeffs = Vec::new();
    for n in ["128", "256"] {
        let out = d.join(format!("disc{n}.json"));
        let o = lg(&["geodesic", "--domain", &cfg, "--p", &p, "--vhat", "0.3-0.2i", "--nodes", n, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        coeffs.push(v["phi"].clone());
    }
    let get = |j: &Value, k: i64, c: usize| {
        let n = j["n"].as_i64().unwrap();
        let a = &j["coeffs"][((k + n / 2) * 2) as usize + c];
        (a[0].as_f64().unwrap(), a[1].as_f64().unwrap())
    };
    let mut worst = 0.0f64;
    for k in -64..64 {
        for c in 0..2 {
            let (a, b) = (get(&coeffs[0], k, c), get(&coeffs[1], k, c));
            worst = worst.max((a.0 - b.0).hypot(a.1 - b.1));
        }
    }
    assert!(worst < 1e-9, "coefficient difference {worst}");
}

#[test]
fn field_ball_slice() {
    let d = scratch("field");
    let grid = r#"{"center":[[0,0],[0,0]],"a":[[1,0],[0,0]],"b":[[0,0],[0,0.5]],"extent":1.0,"n":5}"#;
    let out = d.join("p.csv");
    let o = lg(&["--jobs", "2", "field", "--domain", &ball(&d), "--p", "1,0", "--grid", grid, "--quantity", "P", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "re_z1,re_z2,im_z1,im_z2,P,psi_norm,converged");
    let mut flagged = 0;
    for r in rows(&csv) {
        let x: Vec<f64> = r[..4].iter().map(|s| s.parse().unwrap()).collect();
        let (z1, z2) = ((x[0], x[2]), (x[1], x[3]));
        let nz2 = z1.0 * z1.0 + z1.1 * z1.1 + z2.0 * z2.0 + z2.1 * z2.1;
        if r[6] == "0" {
            assert!(r[4].is_empty());
            flagged += 1;
            continue;
        }
        let exact = -(1.0 - nz2) / ((1.0 - z1.0).powi(2) + z1.1 * z1.1);
        let k: f64 = r[4].parse().unwrap();
        assert!((k - exact).abs() < 1e-7, "{r:?}: {exact}");
    }
    assert!(flagged >= 1);

    // Same flags give byte-identical output.
    let again = d.join("p2.csv");
    let o = lg(&["field", "--domain", &ball(&d), "--p", "1,0", "--grid", grid, "--out", again.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());

    let gpath = d.join("grid.json");
    fs::write(&gpath, grid).unwrap();
    let psi = d.join("psi.csv");
    let o = lg(&["field", "--domain", &ball(&d), "--p", "1,0", "--grid", gpath.to_str().unwrap(), "--quantity", "psi", "--out", psi.to_str().unwrap()]);
    assert!(o.status.success());
    for r in rows(&fs::read_to_string(&psi).unwrap()) {
        assert!(r[4].is_empty());
        if r[6] == "1" {
            assert!(r[5].parse::<f64>().unwrap() <= 1.0 + 1e-7);
        }
    }
}

#[test]
fn verify_ball_all() {
    let d = scratch("verify");
    let out = d.join("report.json");
    let o = lg(&["verify", "--domain", &ball(&d), "--suite", "all", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rep["pass"], true);
    assert_eq!(rep["flags"]["suite"], "all");
    assert_eq!(rep["flags"]["domain_config"]["type"], "ball");
    let checks = rep["checks"].as_array().unwrap();
    assert!(checks.len() >= 10);
    for c in checks {
        for key in ["name", "max_violation", "threshold", "pass"] {
            assert!(c.get(key).is_some());
        }
    }
}
