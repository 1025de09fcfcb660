use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uniapprox"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// CSV body without the timestamped first line.
fn body(o: &Output) -> String {
    stdout(o).lines().skip(1).collect::<Vec<_>>().join("\n")
}

#[test]
fn converge_writes_six_monotone_rows() {
    let o = run(&["ridge", "converge", "--m-max", "9", "--out", "csv"]);
    assert!(o.status.success());
    let text = body(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,certified_sup_error"));
    let rows: Vec<(u32, f64)> = lines
        .map(|l| {
            let (m, e) = l.split_once(',').unwrap();
            (m.parse().unwrap(), e.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), vec![4, 5, 6, 7, 8, 9]);
    assert!(rows.windows(2).all(|w| w[1].1 <= w[0].1));
}

#[test]
fn decay_is_reproducible() {
    let args = ["--seed", "3", "ridge", "decay", "--radii", "10:1000:log:6"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(body(&a), body(&b));
    assert!(stdout(&a).starts_with("# uniapprox ridge decay seed=3"));
    let slope: f64 = body(&a).lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((-3.3..=-2.7).contains(&slope));
}

#[test]
fn baseline_separation_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = run(&["sep", "certify", "--candidate", "baseline", "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(report["bound"].as_f64().unwrap() >= 0.24);
    assert!(!report["directions"].as_array().unwrap().is_empty());
}

#[test]
fn invalid_activation_exits_one() {
    let o = run(&["lift", "tensor", "--activation", "swish"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("swish"));
}

#[test]
fn lift_emits_model_and_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let o = run(&["lift", "tensor", "--n", "1", "--activation", "relu", "--emit", model.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cert: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("model.cert.json")).unwrap()).unwrap();
    for key in ["grid_max", "slack", "tail", "total", "r", "h"] {
        assert!(cert.get(key).is_some(), "missing {key}");
    }
    // standard profile at 0.5 is 0.125
    let e = run(&["net", "eval", "--model", model.to_str().unwrap(), "--point", "0.5"]);
    let v: f64 = stdout(&e).trim().parse().unwrap();
    assert!((v - 0.125).abs() < 1e-9);
}

#[test]
fn vanish_on_saved_network() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("net.json");
    std::fs::write(
        &model,
        r#"{"input_dim":2,"layers":[{"activation":"tanh","units":[{"w":[1.0,0.5],"b":0.1},{"w":[-0.3,2.0],"b":-1.0}]}],"out_coeffs":[1.5,-0.7],"out_bias":0.2}"#,
    )
    .unwrap();
    let o = run(&["sep", "vanish", "--model", model.to_str().unwrap(), "--trials", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = body(&o);
    let rel: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(rel.len(), 20);
    assert!(rel.iter().all(|r| *r < 1e-9));
}

#[test]
fn wedge_verify_and_config_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("verify.csv");
    std::fs::write(
        &cfg,
        format!("command = \"wedge verify\"\nin = \"mollified-and\"\nsamples = 500\nout = \"{}\"\n", out.display()),
    )
    .unwrap();
    let o = bin().args(["run", "--config"]).arg(&cfg).env("UNIAPPROX_THREADS", "1").output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(Path::new(&out)).unwrap();
    let last = text.lines().last().unwrap();
    let resid: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!(resid < 1e-9);
}

#[test]
fn bad_config_field_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "command = \"ridge converge\"\nm_max = [1, 2]\n").unwrap();
    let o = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("m_max"));
}
