use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wittlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wittlab")).args(args).output().expect("binary runs")
}

fn run_config(dir: &Path, name: &str, json: &str, extra: &[&str]) -> (Output, std::path::PathBuf) {
    let cfg = dir.join(format!("{name}.json"));
    fs::write(&cfg, json).unwrap();
    let out = dir.join(name);
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (wittlab(&args), out)
}

fn csv_rows(path: &Path) -> (String, Vec<BTreeMap<String, String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let hash = lines.next().unwrap().to_string();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows = lines
        .map(|l| header.iter().zip(l.split(',')).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        .collect();
    (hash, rows)
}

const SPHERE: &str = r#"{"model": {"kind": "sphere", "function": {"name": "sphere_height"}}, "pipelines": ["resonances"]}"#;

#[test]
fn sphere_resonances_have_kernel_multiplicities() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, out) = run_config(tmp.path(), "sphere", SPHERE, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (hash, rows) = csv_rows(&out.join("resonances.csv"));
    assert!(hash.starts_with("# config_sha256: "));
    for (k, want) in [(0, 1), (1, 0), (2, 1)] {
        let m: Vec<&BTreeMap<String, String>> =
            rows.iter().filter(|r| r["degree"] == k.to_string() && r["value"].parse::<f64>().unwrap() == 0.0).collect();
        assert_eq!(m.len(), want, "degree {k}");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["provenance"]["resonances.csv"], "resonance_engine");
    assert_eq!(summary["config_hash"].as_str().unwrap(), &hash["# config_sha256: ".len()..]);
    let (_, crit) = csv_rows(&out.join("critical_points.csv"));
    assert_eq!(crit.len(), 2);
    assert_eq!(crit[0]["index"], "0");
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"model": {"kind": "sphere", "function": {"name": "sphere_bumped", "bump": 1.0}},
        "mesh_levels": [2], "hbar_grid": [0.3], "pipelines": ["resonances", "spectrum", "morse"],
        "export": {"mesh_off": true, "matrices_coo": true}}"#;
    let (a, da) = run_config(tmp.path(), "a", cfg, &[]);
    let (b, db) = run_config(tmp.path(), "b", cfg, &[]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let names: Vec<_> = fs::read_dir(&da).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(names.len() >= 8);
    for n in names {
        assert_eq!(fs::read(da.join(&n)).unwrap(), fs::read(db.join(&n)).unwrap(), "{n:?}");
    }
    let off = fs::read_to_string(da.join("mesh_level2.off")).unwrap();
    assert!(off.starts_with("OFF\n# config_sha256: "));
    let coo = fs::read_to_string(da.join("witten_level2_hbar0_degree1.coo")).unwrap();
    assert!(coo.lines().nth(1).unwrap().split(' ').count() == 3);
}

#[test]
fn spectrum_rows_use_full_precision() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"model": {"kind": "sphere", "function": {"name": "sphere_height"}},
        "mesh_levels": [2], "hbar_grid": [0.3], "spectrum": {"count": 3}, "pipelines": ["spectrum"]}"#;
    let (o, out) = run_config(tmp.path(), "s", cfg, &[]);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = csv_rows(&out.join("spectrum.csv"));
    assert_eq!(rows.len(), 9);
    let lam = &rows[1]["lambda"];
    let mantissa = lam.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{lam}");
    // level 2 cannot resolve hbar = 0.3: rows are flagged, run still succeeds
    assert!(rows.iter().all(|r| r["resolved_flag"] == "0"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn invalid_configs_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        SPHERE.replace("\"pipelines\"", "\"extra\": true, \"pipelines\""),
        SPHERE.replace("\"pipelines\"", "\"hbar_grid\": [0.1, 0.2], \"pipelines\""),
        SPHERE.replace("\"pipelines\"", "\"tolerances\": {\"ode\": -1}, \"pipelines\""),
        SPHERE.replace("sphere_height", "torus_cosine"),
        "{not json".to_string(),
    ];
    for (i, c) in cases.iter().enumerate() {
        let (o, _) = run_config(tmp.path(), &format!("bad{i}"), c, &[]);
        assert_eq!(o.status.code(), Some(2), "case {i}");
    }
    let (o, _) = run_config(tmp.path(), "override", SPHERE, &["--pipelines", "resonances,nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn degenerate_function_is_a_morse_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"model": {"kind": "torus", "function": {"name": "torus_x_only"}}, "pipelines": ["resonances"]}"#;
    let (o, out) = run_config(tmp.path(), "deg", cfg, &[]);
    assert_eq!(o.status.code(), Some(3));
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"exit_code\": 3"));
}

#[test]
fn saddle_connection_is_a_transversality_suspect() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"model": {"kind": "torus", "function": {"name": "torus_saddle_connection"}}, "pipelines": ["morse"]}"#;
    let (o, _) = run_config(tmp.path(), "conn", cfg, &[]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn pipeline_override_selects_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"model": {"kind": "torus", "function": {"name": "torus_cosine"}}, "pipelines": ["resonances"]}"#;
    let (o, out) = run_config(tmp.path(), "t", cfg, &["--pipelines", "morse"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("morse.json").exists());
    assert!(!out.join("resonances.csv").exists());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("morse.json")).unwrap()).unwrap();
    assert_eq!(m["betti"], serde_json::json!([1, 2, 1]));
    assert_eq!(m["instantons"].as_array().unwrap().len(), 8);
}

#[test]
fn compare_matches_with_multiplicity_and_checks_hashes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"model": {"kind": "sphere", "function": {"name": "sphere_height"}},
        "mesh_levels": [3], "hbar_grid": [0.2], "spectrum": {"count": 4}, "pipelines": ["resonances", "spectrum"]}"#;
    let (o, out) = run_config(tmp.path(), "c", cfg, &[]);
    assert_eq!(o.status.code(), Some(0));
    let c = wittlab(&["compare", out.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(0), "{}", String::from_utf8_lossy(&c.stderr));
    let (_, rows) = csv_rows(&out.join("comparison.csv"));
    let deg0: Vec<&BTreeMap<String, String>> = rows.iter().filter(|r| r["degree"] == "0").collect();
    let res: Vec<f64> = deg0.iter().map(|r| r["resonance"].parse().unwrap()).collect();
    // −1 has multiplicity two and absorbs λ_2, λ_3 before −2 is used
    assert_eq!(res, vec![0.0, -1.0, -1.0, -2.0]);
    assert!(deg0[0]["deviation"].parse::<f64>().unwrap().abs() < 1e-10);

    // a resonance file from another experiment is rejected
    let other = SPHERE.replace("\"pipelines\"", "\"seed\": 9, \"pipelines\"");
    let (_, out2) = run_config(tmp.path(), "d", &other, &[]);
    fs::copy(out2.join("resonances.csv"), out.join("resonances.csv")).unwrap();
    let c = wittlab(&["compare", out.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&c.stderr).contains("hash mismatch"));
}
