use std::process::{Command, Output};

fn thinset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thinset"))
        .args(args)
        .output()
        .unwrap()
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

fn header(out: &Output) -> Vec<String> {
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    r.headers().unwrap().iter().map(String::from).collect()
}

fn col(out: &Output, name: &str) -> Vec<String> {
    let i = header(out).iter().position(|h| h == name).unwrap();
    rows(out).into_iter().map(|r| r[i].clone()).collect()
}

#[test]
fn up_is_deterministic() {
    let args = ["up", "--pair", "wolff", "--eps", "0.01", "--seed", "7"];
    let a = thinset(&args);
    let b = thinset(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(col(&a, "inequality_holds"), vec!["true"]);
}

#[test]
fn counterexample_ladder_rows() {
    let out = thinset(&["counterexample", "--dim", "1", "--k", "2,4,8"]);
    assert!(out.status.success());
    assert_eq!(
        header(&out)[..9],
        [
            "config_hash",
            "dim",
            "eps",
            "k",
            "n",
            "a_n",
            "ratio",
            "thinness_E",
            "thinness_Sigma"
        ]
    );
    let ratios: Vec<f64> = col(&out, "ratio")
        .iter()
        .map(|r| r.parse().unwrap())
        .collect();
    assert_eq!(ratios.len(), 3);
    assert!(ratios[0] > ratios[1] && ratios[1] > ratios[2]);
    let hashes = col(&out, "config_hash");
    assert!(hashes.iter().all(|h| h == &hashes[0] && h.len() == 12));
}

#[test]
fn power_pair_holds() {
    let out = thinset(&["verify-condition", "--pair", "powerlaw:a=2"]);
    assert!(out.status.success());
    assert_eq!(col(&out, "holds"), vec!["true"]);
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "experiment = \"contraction\"\nmu1 = \"atoms:0:0.5,1:0.5\"\np = [2.0]\ndelta = [0.05]\n",
    )
    .unwrap();
    let a = thinset(&["--config", cfg.to_str().unwrap()]);
    let b = thinset(&[
        "contraction",
        "--mu1",
        "atoms:0:0.5,1:0.5",
        "--p",
        "2",
        "--delta",
        "0.05",
    ]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let beta: f64 = col(&a, "beta")[0].parse().unwrap();
    assert!(beta <= 1.0 - 1e-3);
    let path = dir.path().join("out.csv");
    let c = thinset(&["contraction", "--out", path.to_str().unwrap()]);
    assert!(c.status.success() && c.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), b.stdout);
}

#[test]
fn exit_codes() {
    let out = thinset(&[
        "thinness",
        "--set",
        "periodic:n=8,h=0.1",
        "--rho",
        "constant:c=1",
        "--eps",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invariant failed"));
    let out = thinset(&["verify-condition", "--pair", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`pair`"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "experiment = \"cover\"\ninstancez = 3\n").unwrap();
    let out = thinset(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("instancez"));
}

#[test]
fn cover_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("centers.csv");
    let out = thinset(&[
        "cover",
        "--instances",
        "6",
        "--dump",
        dump.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(rows(&out).len(), 6);
    assert!(col(&out, "covered").iter().all(|c| c == "true"));
    let text = std::fs::read_to_string(&dump).unwrap();
    assert!(text.starts_with("c1,radius,selected"));
}
