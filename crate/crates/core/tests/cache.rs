use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::Command;

const ARGS: [&str; 7] = ["verify", "--p", "3", "--ext", "sqrt-pi", "--nmax", "6"];

fn run(extra: &[&str], env_dir: Option<&Path>) -> (i32, Vec<u8>, Value) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_weiltwist"));
    cmd.args(ARGS).args(extra).arg("--out").arg(&out);
    match env_dir {
        Some(d) => cmd.env("WEILTWIST_CACHE_DIR", d),
        None => cmd.env_remove("WEILTWIST_CACHE_DIR"),
    };
    let status = cmd.status().unwrap().code().unwrap();
    let report = std::fs::read(&out).unwrap();
    let mut t = out.into_os_string();
    t.push(".timing.json");
    let timing = serde_json::from_str(&std::fs::read_to_string(PathBuf::from(t)).unwrap()).unwrap();
    (status, report, timing)
}

fn entry(dir: &Path) -> PathBuf {
    let files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1, "{files:?}");
    files[0].clone()
}

fn stat(t: &Value, k: &str) -> u64 {
    t["cache"][k].as_u64().unwrap()
}

#[test]
fn warm_run_hits_and_matches_cold_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (s0, plain, t0) = run(&["--no-cache", "--cache-dir", d], None);
    assert_eq!(stat(&t0, "disabled"), 1);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    let (s1, cold, t1) = run(&["--cache-dir", d], None);
    let (s2, warm, t2) = run(&["--cache-dir", d], None);
    assert_eq!((s0, s1, s2), (0, 0, 0));
    assert_eq!(stat(&t1, "misses"), 1);
    assert_eq!(stat(&t2, "hits"), 1);
    assert_eq!(plain, cold);
    assert_eq!(cold, warm);
    assert!(entry(dir.path()).file_name().unwrap().to_str().unwrap().contains("-v1"));
}

#[test]
fn environment_variable_selects_the_cache_directory() {
    let dir = tempfile::tempdir().unwrap();
    let (_, a, t1) = run(&[], Some(dir.path()));
    let (_, b, t2) = run(&[], Some(dir.path()));
    assert_eq!(stat(&t1, "misses"), 1);
    assert_eq!(stat(&t2, "hits"), 1);
    assert_eq!(a, b);
}

type Edit = Box<dyn Fn(&mut Value)>;

fn tamper(path: &Path, f: impl Fn(&mut Value)) {
    let mut v: Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    f(&mut v);
    std::fs::write(path, serde_json::to_vec(&v).unwrap()).unwrap();
}

#[test]
fn tampered_entries_are_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (_, cold, _) = run(&["--cache-dir", d], None);
    let path = entry(dir.path());
    let edits: Vec<(&str, Edit)> = vec![
        ("flipped sign", Box::new(|v: &mut Value| {
            let s = v["table"]["eps_inv"][3].as_i64().unwrap();
            v["table"]["eps_inv"][3] = Value::from(-s);
        })),
        ("basis order", Box::new(|v: &mut Value| {
            let o = v["space"]["group"]["basis"][0]["order"].as_u64().unwrap();
            v["space"]["group"]["basis"][0]["order"] = Value::from(o * 2);
        })),
        ("version", Box::new(|v: &mut Value| v["version"] = Value::from(99))),
        ("dropped character", Box::new(|v: &mut Value| {
            v["table"]["chars"].as_array_mut().unwrap().pop();
        })),
    ];
    for (what, edit) in edits {
        tamper(&path, edit);
        let (status, report, t) = run(&["--cache-dir", d], None);
        assert_eq!(status, 0, "{what}");
        assert_eq!(stat(&t, "rejected"), 1, "{what}");
        assert_eq!(report, cold, "{what}");
        // The rewritten entry is trusted again.
        let (_, _, t) = run(&["--cache-dir", d], None);
        assert_eq!(stat(&t, "hits"), 1, "{what}");
    }
    std::fs::write(&path, b"{ not json").unwrap();
    let (_, report, t) = run(&["--cache-dir", d], None);
    assert_eq!(stat(&t, "rejected"), 1);
    assert_eq!(report, cold);
}
