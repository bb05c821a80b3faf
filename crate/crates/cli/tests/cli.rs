use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/e2e").join(name)
}

fn workspace(config_extra: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for name in ["data.jsonl", "mock.json"] {
        fs::copy(fixture(name), dir.path().join(name)).unwrap();
    }
    let config = fs::read_to_string(fixture("config.toml")).unwrap();
    fs::write(dir.path().join("config.toml"), format!("{config_extra}\n{config}")).unwrap();
    dir
}

fn dimabsa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dimabsa")).current_dir(dir).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn run_equals_the_stages_in_sequence() {
    let whole = workspace("");
    let out = dimabsa(whole.path(), &["run", "--config", "config.toml", "--mock-endpoint", "mock.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("network calls 10"), "{stdout}");

    let staged = workspace("");
    for args in [
        &["infer", "--config", "config.toml", "--mock-endpoint", "mock.json"][..],
        &["aggregate", "--config", "config.toml"],
        &["evaluate", "--config", "config.toml"],
        &["stats", "--config", "config.toml"],
    ] {
        let o = dimabsa(staged.path(), args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(tree(&whole.path().join("out")), tree(&staged.path().join("out")));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = workspace("");
    assert_eq!(code(&dimabsa(dir.path(), &["run", "--config", "missing.toml"])), 2);
    // No endpoint URL and no mock.
    assert_eq!(code(&dimabsa(dir.path(), &["infer", "--config", "config.toml"])), 2);
    // Threshold above the smallest k.
    assert_eq!(code(&dimabsa(dir.path(), &["aggregate", "--config", "config.toml", "--threshold", "2"])), 2);
    let bad = workspace("k_values = [0]");
    assert_eq!(code(&dimabsa(bad.path(), &["aggregate", "--config", "config.toml"])), 2);
}

#[test]
fn missing_inputs_exit_3() {
    let dir = workspace("");
    let out = dimabsa(dir.path(), &["aggregate", "--config", "config.toml"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("infer"));
    fs::write(dir.path().join("data.jsonl"), "{\"ID\": \"x\", \"Text\": \"t\"}\n{not json}\n").unwrap();
    let out = dimabsa(dir.path(), &["run", "--config", "config.toml", "--mock-endpoint", "mock.json"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn strict_mode_and_unreachable_exit_4() {
    let dir = workspace("");
    fs::write(
        dir.path().join("mock.json"),
        r#"{"default": ["[]"], "instances": {"r2": ["[]", {"fail": "permanent"}]}}"#,
    )
    .unwrap();
    let lenient = dimabsa(dir.path(), &["run", "--config", "config.toml", "--mock-endpoint", "mock.json"]);
    assert_eq!(code(&lenient), 0, "{}", String::from_utf8_lossy(&lenient.stderr));
    assert!(String::from_utf8_lossy(&lenient.stdout).contains("failed 1"));
    let strict = dimabsa(dir.path(), &["run", "--config", "config.toml", "--mock-endpoint", "mock.json", "--strict"]);
    assert_eq!(code(&strict), 4);

    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let down = workspace("");
    let config = fs::read_to_string(down.path().join("config.toml")).unwrap();
    fs::write(down.path().join("config.toml"), config.replace("[endpoint]", &format!("[endpoint]\nbase_url = \"http://{addr}/v1\""))).unwrap();
    assert_eq!(code(&dimabsa(down.path(), &["infer", "--config", "config.toml"])), 4);
}

#[test]
fn category_in_triplet_data_exits_3() {
    let dir = workspace("");
    fs::write(
        dir.path().join("pred.jsonl"),
        "{\"id\": \"r1\", \"tuples\": []}\n{\"id\": \"r2\", \"tuples\": []}\n{\"id\": \"r3\", \"tuples\": [{\"aspect\": \"Staff\", \"category\": \"SERVICE#GENERAL\", \"opinion\": \"rude\", \"valence\": \"2.00\", \"arousal\": \"6.00\"}]}\n",
    )
    .unwrap();
    let out = dimabsa(dir.path(), &["score", "--task", "DimASTE", "--gold", "data.jsonl", "--pred", "pred.jsonl"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pred.jsonl:3"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn score_with_a_single_file() {
    let dir = workspace("");
    let out = dimabsa(
        dir.path(),
        &["score", "--task", "DimASTE", "--gold", "data.jsonl", "--pred", "gold=data.jsonl", "--out", "t.json"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("100.00  100.00  100.00"), "{stdout}");
    assert!(dir.path().join("t.txt").is_file());
    assert!(!dir.path().join("t.significance.json").exists());
}
