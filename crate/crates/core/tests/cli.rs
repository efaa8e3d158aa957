//! The command-line front end on fixture files.

use std::path::PathBuf;
use std::process::{Command, Output};

use cgk::fixtures;

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cgk-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let files = [
        ("host3.json", fixtures::host(3, 7)),
        ("host5.json", fixtures::host(5, 7)),
        ("guest_z.json", fixtures::guest_z(7)),
        ("guest_dyadic.json", fixtures::guest_dyadic(7)),
        ("fib.json", fixtures::fib(8)),
    ];
    for (name, d) in files {
        std::fs::write(dir.join(name), d.to_json()).unwrap();
    }
    let broken = fixtures::single_loop(2).to_json().replacen("\"to\": \"x\"", "\"to\": \"y\"", 1);
    std::fs::write(dir.join("broken.json"), broken).unwrap();
    dir
}

fn run(dir: &PathBuf, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgk")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn exit_codes_and_reports() {
    let dir = workdir("codes");
    let hz = ["--host", "host3.json", "--guest", "guest_z.json"];

    let o = run(&dir, &["validate", "host3.json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS structure"));

    let o = run(&dir, &["validate", "broken.json"]);
    assert_eq!(code(&o), 1, "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("FAIL structure"));

    assert_eq!(code(&run(&dir, &["validate", "missing.json"])), 2);
    assert_eq!(code(&run(&dir, &["algebra", "taf", "--n0", "1"])), 2);

    let o = run(&dir, &["relation", "axioms", "--depth", "1", hz[0], hz[1], hz[2], hz[3]]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    let o = run(&dir, &["algebra", "taf", "--n0", "1", "--l", "4", hz[0], hz[1], hz[2], hz[3]]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS trace bound: 1/216 <= 1/4"));

    let o = run(&dir, &["algebra", "k18", "--n", "1", "--m", "3", hz[0], hz[1], hz[2], hz[3]]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL d commutes"));

    let o = run(&dir, &["ktheory", "presentation", "fib.json", "--to", "3"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("determinant 1"));

    let o = run(&dir, &["embed", "--host", "host5.json", "--guest", "guest_dyadic.json"]);
    assert_eq!(code(&o), 0);
    std::fs::write(dir.join("emb.json"), stdout(&o).lines().take_while(|l| !l.starts_with("PASS")).collect::<Vec<_>>().join("\n")).unwrap();
    let o = run(&dir, &["ktheory", "k30", "--host", "host5.json", "--guest", "guest_dyadic.json", "--emb", "emb.json", "--depth", "2"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn json_reports_are_deterministic() {
    let dir = workdir("json");
    let args = ["--format", "json", "ktheory", "report", "--host", "host5.json", "--guest", "guest_dyadic.json", "--depth", "2"];
    let a = run(&dir, &args);
    let b = run(&dir, &["--sequential"].iter().chain(args.iter()).copied().collect::<Vec<_>>());
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["data"]["guest_window"]["invariant_factors"][0], "2");
    let out = dir.join("report.json");
    let c = run(&dir, &["--format", "json", "--output", out.to_str().unwrap(), "ktheory", "report", "--host", "host5.json", "--guest", "guest_dyadic.json", "--depth", "2"]);
    assert_eq!(code(&c), 0);
    assert_eq!(std::fs::read(&out).unwrap(), a.stdout);
    std::fs::remove_dir_all(&dir).ok();
}
