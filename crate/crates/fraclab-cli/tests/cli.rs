use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SMALL: [&str; 4] = ["--n-theta", "32", "--n-phi", "64"];

fn fraclab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraclab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("FRACLAB_OUT")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn error_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&o.stderr)))
}

fn with_small<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(SMALL).collect()
}

#[test]
fn eig_half_and_empty() {
    let t = TempDir::new().unwrap();
    let o = fraclab(t.path(), &with_small(&["eig", "--s", "0.5", "--k", "1"]));
    assert!(o.status.success());
    let rows = &json(&t.path().join("eig/eig.json"))["rows"];
    let lam = rows[0]["lambda"].as_f64().unwrap();
    // first order in the mesh size; 1% needs 128×256
    assert!((lam - 0.75).abs() < 0.03 * 0.75, "{lam}");
    let bin = std::fs::metadata(t.path().join("eig/eigenfunction_k1_symmetric.bin")).unwrap();
    assert_eq!(bin.len(), 32 * 64 * 8);

    let o = fraclab(t.path(), &with_small(&["eig", "--s", "0.5", "--omega", "empty"]));
    assert!(o.status.success());
    let lam = json(&t.path().join("eig/eig.json"))["rows"][0]["lambda"].as_f64().unwrap();
    assert!((lam - 2.0).abs() < 0.01);
}

#[test]
fn eig_both_formulations() {
    let t = TempDir::new().unwrap();
    let o = fraclab(t.path(), &with_small(&["eig", "--k", "1", "2", "4", "--formulation", "both"]));
    assert!(o.status.success());
    let rows = json(&t.path().join("eig/eig.json"))["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 6);
    for pair in rows.chunks(2) {
        let (a, b) = (pair[0]["lambda"].as_f64().unwrap(), pair[1]["lambda"].as_f64().unwrap());
        assert!((a - b).abs() < 0.02 * a);
    }
}

#[test]
fn validation_failures_exit_2() {
    let t = TempDir::new().unwrap();
    for args in [
        vec!["eig", "--s", "1.5"],
        vec!["sweep", "--kmax", "0"],
        vec!["compete", "--beta", "-1"],
        vec!["eig", "--n-phi", "63"],
        vec!["eig", "--k", "3", "--n-phi", "64"],
        vec!["eig", "--s", "abc"],
    ] {
        let o = fraclab(t.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let e = error_json(&o);
        assert_eq!(e["exit_code"], 2);
        assert_eq!(e["kind"], "validation");
    }
}

#[test]
fn sweep_chain() {
    let t = TempDir::new().unwrap();
    let o = fraclab(t.path(), &with_small(&["sweep", "--s", "0.5", "--kmax", "8"]));
    assert!(o.status.success());
    let doc = json(&t.path().join("sweep/sweep.json"));
    let d: Vec<f64> = doc["rows"].as_array().unwrap().iter().map(|r| r["d"].as_f64().unwrap()).collect();
    assert_eq!(d.len(), 8);
    assert!(d.windows(2).all(|w| w[1] >= w[0]) && d.iter().all(|x| *x < 1.0));
    assert_eq!(doc["summary"]["below_ceiling"], true);

    let o = fraclab(t.path(), &with_small(&["sweep", "--s", "0.25", "--kmax", "4"]));
    assert!(o.status.success());
    let d1 = json(&t.path().join("sweep/sweep.json"))["rows"][0]["d"].as_f64().unwrap();
    assert!((d1 - 0.25).abs() < 0.03 * 0.25, "{d1}");
}

#[test]
fn compete_bundle() {
    let t = TempDir::new().unwrap();
    let args = ["compete", "--s", "0.5", "--k", "1", "--beta", "1e3", "--n-theta", "16", "--n-phi", "32", "--n-r", "16"];
    let o = fraclab(t.path(), &args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let b = json(&t.path().join("compete/k1_beta1e3/bundle.json"));
    assert!(b["two_i"].as_f64().unwrap() <= 0.5 * 1.02 + 0.01);
    assert_eq!(b["n_monotone"], true);
    assert_eq!(b["converged"], true);
    assert_eq!(b["doubling_ok"], true);
    assert!(b["interior_min"].as_f64().unwrap() > 0.0);
    for f in ["u.bin", "v.bin", "log.csv", "manifest.json", "frequency.csv"] {
        assert!(t.path().join("compete/k1_beta1e3").join(f).exists(), "{f}");
    }
    let m = json(&t.path().join("compete/manifest.json"));
    assert_eq!(m["status"], "ok");
    assert!(m["files"].as_array().unwrap().iter().any(|f| f == "k1_beta1e3/u.bin"));
}

#[test]
fn symmetrize_cases() {
    let t = TempDir::new().unwrap();
    let grid = ["--n-theta", "12", "--n-phi", "24"];
    let random: Vec<&str> = ["symmetrize", "--seed", "7"].into_iter().chain(grid).collect();
    let o = fraclab(t.path(), &random);
    assert!(o.status.success());
    let r = json(&t.path().join("symmetrize/report.json"));
    assert!(r["energy_after"].as_f64().unwrap() <= r["energy_before"].as_f64().unwrap());
    assert_eq!(r["energy_nonincreasing"], true);
    assert_eq!(r["converged"], true);

    let sym = t.path().join("sym.csv");
    std::fs::copy(t.path().join("symmetrize/symmetrized.csv"), &sym).unwrap();
    let again = t.path().join("again");
    let args: Vec<&str> = ["symmetrize", "--input", sym.to_str().unwrap()].into_iter().chain(grid).collect();
    let o = fraclab(&again, &args);
    assert!(o.status.success());
    let strip = |p: &Path| std::fs::read_to_string(p).unwrap().lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&sym), strip(&again.join("symmetrize/symmetrized.csv")));
    assert_eq!(json(&again.join("symmetrize/report.json"))["polarization_steps"], 0);
    assert_eq!(std::fs::read_to_string(again.join("symmetrize/trace.csv")).unwrap().lines().count(), 3);

    let text = std::fs::read_to_string(&sym).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[6] = "0,4,not-a-number";
    let bad = t.path().join("bad.csv");
    std::fs::write(&bad, lines.join("\n")).unwrap();
    let args: Vec<&str> = ["symmetrize", "--input", bad.to_str().unwrap()].into_iter().chain(grid).collect();
    let o = fraclab(t.path(), &args);
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert_eq!(e["kind"], "parse");
    assert!(e["message"].as_str().unwrap().contains("line 7"));
}

#[test]
fn outputs_are_deterministic_and_stamped() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let runs: [&[&str]; 3] = [
        &["sweep", "--kmax", "3", "--n-theta", "16", "--n-phi", "32"],
        &["symmetrize", "--seed", "11", "--n-theta", "8", "--n-phi", "16"],
        &["compete", "--beta", "100", "--n-theta", "8", "--n-phi", "16", "--n-r", "8"],
    ];
    for args in runs {
        assert!(fraclab(a.path(), args).status.success());
        assert!(fraclab(b.path(), args).status.success());
    }
    let mut csvs = 0;
    for entry in walk(a.path()) {
        let rel = entry.strip_prefix(a.path()).unwrap();
        let (x, y) = (std::fs::read(&entry).unwrap(), std::fs::read(b.path().join(rel)).unwrap());
        assert_eq!(x, y, "{}", rel.display());
        if entry.extension().is_some_and(|e| e == "csv") && !rel.ends_with("log.csv") {
            let head = String::from_utf8(x).unwrap();
            let first = head.lines().next().unwrap();
            assert!(first.starts_with("# config_hash=") && first.contains("n_phi="), "{}", rel.display());
            csvs += 1;
        }
    }
    assert!(csvs >= 6);
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn config_file_and_env() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("run.json");
    std::fs::write(&cfg, r#"{"s": 0.25, "n_theta": 16, "n_phi": 32, "kmax": 3}"#).unwrap();
    let o = fraclab(t.path(), &["sweep", "--config", cfg.to_str().unwrap(), "--kmax", "2"]);
    assert!(o.status.success());
    let m = json(&t.path().join("sweep/manifest.json"));
    assert_eq!(m["config"]["s"], 0.25);
    assert_eq!(m["config"]["kmax"], 2);
    assert_eq!(json(&t.path().join("sweep/sweep.json"))["rows"].as_array().unwrap().len(), 2);

    std::fs::write(&cfg, r#"{"s": 0.25, "bogus": 1}"#).unwrap();
    let o = fraclab(t.path(), &["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let env_out = t.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_fraclab"))
        .args(["sweep", "--kmax", "1", "--n-theta", "8", "--n-phi", "16"])
        .env("FRACLAB_OUT", &env_out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(env_out.join("sweep/sweep.csv").exists());
}
