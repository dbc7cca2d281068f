use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fracproj(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracproj"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SMALL: &str = r#"
schema_version = 1
seed = 11

[[theorem1]]
id = "dim"
fixture = { kind = "cantor", depth = 8 }
family = "planar"
n_lambda = 16
scales = [0.1111111111111111, 0.037037037037037035, 0.012345679012345678, 0.00411522633744856, 0.0013717421124828531]
tol = 0.1

[[theorem4]]
id = "atom"
fixture = { kind = "atom", dim = 2 }
family = "planar"
n_lambda = 8
radii = [0.1, 0.01]
expect = "fail"
"#;

#[test]
fn generate_energy_dimension_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = fracproj(&["generate", "--fixture", "cantor", "--depth", "8", "--out", "c.json"], d);
    assert!(out.status.success(), "{out:?}");

    let out = fracproj(&["energy", "--measure", "c.json", "--s", "0.5", "--r-min", "1e-6"], d);
    assert!(out.status.success());
    let direct: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let out = fracproj(&["energy", "--measure", "c.json", "--s", "0.5", "--r-min", "1e-6", "--layercake"], d);
    let layer: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let (a, b) = (direct["energy"].as_f64().unwrap(), layer["energy"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-9 * a);

    let scales = "0.1111111111111111,0.037037037037037035,0.012345679012345678,0.00411522633744856,0.0013717421124828531";
    let out = fracproj(&["dimension", "--measure", "c.json", "--scales", scales], d);
    assert!(out.status.success());
    let est: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((est["value"].as_f64().unwrap() - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
}

#[test]
fn csv_measures_and_projection() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = fracproj(&["generate", "--fixture", "cantor-product", "--depth", "2", "--format", "csv", "--out", "sq.csv"], d);
    assert!(out.status.success());
    let text = fs::read_to_string(d.join("sq.csv")).unwrap();
    assert_eq!(text.lines().count(), 17);
    assert!(text.starts_with("x0,x1,w\n"));

    let out = fracproj(&["project", "--family", "planar", "--lambda", "0", "--measure", "sq.csv"], d);
    assert!(out.status.success(), "{out:?}");
    let nu: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(nu["ambient_dim"], 1);
    assert_eq!(nu["points"].as_array().unwrap().len(), 16);
}

#[test]
fn transversality_subcommand_reports_bound() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fracproj(&["generate", "--fixture", "cantor-product", "--depth", "3", "--out", "m.json"], d);
    let out = fracproj(&["transversality", "--family", "planar", "--measure", "m.json", "--n-lambda", "2000"], d);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["bound_check"]["passed"], true);
    let out = fracproj(
        &["transversality", "--family", "planar", "--measure", "m.json", "--n-lambda", "2000", "--bound-c", "0.3"],
        d,
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_report_anchors_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("small.toml"), SMALL).unwrap();
    let out = fracproj(&["verify", "--config", "small.toml", "--out", "r.json", "--anchors", "a.json"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("a.json").exists());
    assert!(d.join("r_plots/dim_dimension.dat").exists());
    let dat = fs::read_to_string(d.join("r_plots/dim_dimension.dat")).unwrap();
    assert_eq!(dat.lines().count(), 16);

    // Second run reproduces the frozen anchors.
    let out = fracproj(&["verify", "--config", "small.toml", "--out", "r2.json", "--anchors", "a.json"], d);
    assert!(out.status.success());
    assert_eq!(fs::read(d.join("r.json")).unwrap(), fs::read(d.join("r2.json")).unwrap());

    // A different seed changes the estimates and breaks the anchors.
    let out = fracproj(&["verify", "--config", "small.toml", "--seed", "12", "--out", "r3.json", "--anchors", "a.json"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("anchor mismatch"));

    let out = fracproj(&["report", "--input", "r.json", "--format", "csv"], d);
    assert!(out.status.success());
    let csv = stdout(&out);
    assert!(csv.starts_with("id,theorem,expect,status,outcome_ok"));
    assert!(csv.contains("atom,theorem4,fail,fail,true"));

    let out = fracproj(&["report", "--input", "r.json"], d);
    assert_eq!(stdout(&out), fs::read_to_string(d.join("r.json")).unwrap());
}

#[test]
fn unexpected_outcome_and_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("flip.toml"), SMALL.replace("expect = \"fail\"", "expect = \"pass\"")).unwrap();
    let out = fracproj(&["verify", "--config", "flip.toml", "--no-plots", "--out", "r.json"], d);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(report["summary"]["unexpected"][0], "atom");

    fs::write(d.join("bad.toml"), SMALL.replace("family = \"planar\"\nn_lambda = 8", "family = \"nope\"\nn_lambda = 8")).unwrap();
    let out = fracproj(&["verify", "--config", "bad.toml"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn generate_from_fixture_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("fx.toml"), "[fixture]\nkind = \"sierpinski\"\ndepth = 3\n").unwrap();
    let out = fracproj(&["generate", "--config", "fx.toml"], d);
    assert!(out.status.success());
    let mu: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(mu["points"].as_array().unwrap().len(), 27);
}
