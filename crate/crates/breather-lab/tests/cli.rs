use std::process::{Command, Output};

fn breather(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_breather")).args(args).output().expect("spawn breather")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn preset_is_byte_identical() {
    let a = breather(&["table", "--preset", "fig14-right"]);
    let b = breather(&["table", "--preset", "fig14-right"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let s = stdout(&a);
    assert!(s.starts_with("# breather table preset=fig14-right\n# config family=sg"));
    assert!(s.contains("v=0.7000000000"));
    assert_eq!(data_rows(&s).len(), 9);
}

#[test]
fn thread_cap_does_not_change_output() {
    let run = |n: &str| {
        Command::new(env!("CARGO_BIN_EXE_breather"))
            .env("BREATHER_THREADS", n)
            .args(["spectrum", "--family", "kksh", "--beta", "1", "--k", "0.03", "--n", "24"])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn every_column_is_defined() {
    let o = breather(&["sweep", "--family", "mkdv", "--alpha", "0.5", "--beta", "1", "--param", "x1", "--range", "0:0.2:0.1", "--n", "40"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let header = &data_rows(&s)[0];
    for c in header {
        assert!(s.contains(&format!("# column {c}: ")), "{c}");
    }
    assert_eq!(data_rows(&s).len(), 4);
}

#[test]
fn small_values_use_scientific_notation() {
    let o = breather(&["residual", "--family", "mkdv", "--alpha", "0.5", "--beta", "1"]);
    assert_eq!(o.status.code(), Some(0));
    for row in data_rows(&stdout(&o)).iter().skip(1) {
        let v: f64 = row[1].parse().unwrap();
        if v != 0.0 && v.abs() < 1e-3 {
            assert!(row[1].contains('e'), "{row:?}");
        }
    }
}

#[test]
fn exit_codes() {
    assert_eq!(breather(&["spectrum", "--family", "sg", "--beta", "1", "--v", "1.5"]).status.code(), Some(2));
    assert_eq!(breather(&["spectrum", "--family", "mkdv", "--alpha", "0.5"]).status.code(), Some(2));
    assert_eq!(breather(&["nonsense"]).status.code(), Some(2));
    let o = breather(&["residual", "--family", "mkdv", "--alpha", "0.5", "--beta", "1", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!o.stdout.is_empty(), "output is written before the quality failure");
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "command=spectrum\nfamily=sg\nbeta=0.5\nv=0.3\ndim_total=30\n").unwrap();
    let c = cfg.to_str().unwrap();
    let base = stdout(&breather(&["--config", c]));
    assert!(base.contains("v=0.3000000000") && base.contains("dim=30"));
    let over = breather(&["spectrum", "--config", c, "--v", "0"]);
    assert_eq!(over.status.code(), Some(0));
    let s = stdout(&over);
    assert!(s.contains(" v=0 ") && !s.contains("v=0.3"));
    let stderr = String::from_utf8(over.stderr).unwrap();
    assert!(stderr.contains("resolved config:") && stderr.contains("alpha="));
}

#[test]
fn json_schema_and_matrix_dump() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.csv");
    let o = breather(&[
        "spectrum", "--family", "mkdv", "--alpha", "0.5", "--beta", "1", "--n", "30", "--format", "json", "--dump-matrix", m.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for k in ["config", "eigenvalues", "classification", "diagnostics"] {
        assert!(v.get(k).is_some(), "{k}");
    }
    for k in ["n_neg", "kernel_dim", "gap"] {
        assert!(v["classification"].get(k).is_some(), "{k}");
    }
    for k in ["asymmetry", "quadrature_drift"] {
        assert!(v["diagnostics"][k].as_f64().is_some(), "{k}");
    }
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 31);
    assert_eq!(v["config"]["alpha"].as_f64(), Some(0.5));
    let dump = std::fs::read_to_string(&m).unwrap();
    assert!(dump.starts_with("# galerkin N=30 family=mkdv\n"));
    assert_eq!(dump.lines().filter(|l| !l.starts_with('#')).count(), 31);
}

#[test]
fn stability_columns_and_domain() {
    let o = breather(&["stability", "--k", "0.03,0.057"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let rows = data_rows(&s);
    assert_eq!(rows[0].join(","), "beta,k,m,alpha,L,mass,a1,a2,D,HG,verdict");
    assert_eq!(rows.len(), 3);
    assert_eq!(breather(&["stability", "--k", "0.07"]).status.code(), Some(2));
    assert_eq!(breather(&["stability", "--m", "0.5"]).status.code(), Some(0));
}

#[test]
fn conserved_and_backlund() {
    let o = breather(&["conserved", "--family", "sg", "--beta", "0.5", "--v", "0.3", "--times", "0,0.5,1"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let energy: Vec<f64> = data_rows(&s).iter().filter(|r| r[1] == "energy").map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(energy.len(), 3);
    assert!(energy.iter().all(|e| (e - 8.0).abs() < 1e-8), "{energy:?}");
    let b = breather(&["backlund", "--c1", "1.65", "--c2", "2.95", "--p", "22", "--q", "23"]);
    assert_eq!(b.status.code(), Some(0), "{}", String::from_utf8_lossy(&b.stderr));
    assert!(stdout(&b).contains("permutability"));
}

#[test]
fn out_extension_selects_json() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.json");
    let o = breather(&["spectrum", "--family", "sg", "--beta", "0.5", "--v", "0", "--dim-total", "20", "--out", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(v["classification"]["n_neg"], 1);
    assert_eq!(breather(&["table", "--preset", "fig14-right", "--format", "json"]).status.code(), Some(2));
}
