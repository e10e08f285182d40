use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use xqmft::corpus;

fn xqmft(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_xqmft"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let input = stdin.unwrap_or("").to_string();
    let mut pipe = child.stdin.take().unwrap();
    std::thread::spawn(move || {
        let _ = pipe.write_all(input.as_bytes());
    });
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn compile_optimize_run_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(dir.path(), "person.xq", corpus::P_PERSON);
    let doc = write(dir.path(), "person.xml", corpus::PERSON_DOC);
    let rules = stdout(&xqmft(&["compile", &q], None));
    let opt = stdout(&xqmft(&["optimize"], Some(&rules)));
    let out = stdout(&xqmft(&["run", &doc], Some(&opt)));
    assert_eq!(out.trim_end(), "<out>JimLi</out>");
    let direct = stdout(&xqmft(&["eval", "--query", &q, "--interpret", &doc], None));
    assert_eq!(direct, out);
}

#[test]
fn run_stats_and_no_opt() {
    let args = |no_opt: bool| {
        let mut a = vec!["run", "--corpus", "q01", "--gen", "xmark-lite", "--size", "5000", "--stats"];
        if no_opt {
            a.push("--no-opt");
        }
        let o = xqmft(&a, None);
        assert!(o.status.success());
        let err = String::from_utf8(o.stderr).unwrap();
        let peak = err.lines().find_map(|l| l.strip_prefix("peak_retained=")).unwrap();
        (String::from_utf8(o.stdout).unwrap(), peak.parse::<usize>().unwrap())
    };
    let (out, peak) = args(false);
    let (out_raw, peak_raw) = args(true);
    assert_eq!(out, out_raw);
    assert!(peak < 50 && peak_raw >= 5000, "{peak} {peak_raw}");
}

#[test]
fn compose_writes_valid_rules() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.mft", "q(a(x1)x2) -> b(q(x1)) q(x2)\nq(%t(x1)x2) -> %t(q(x1)) q(x2)\nq(eps) -> eps\n");
    let b = write(dir.path(), "b.mft", "p(b(x1)x2) -> c(p(x1)) p(x2)\np(%t(x1)x2) -> %t(p(x1)) p(x2)\np(eps) -> eps\n");
    let o = xqmft(&["compose", &a, &b, "--mode", "tt-tt", "--report"], None);
    let rules = stdout(&o);
    assert!(String::from_utf8_lossy(&o.stderr).contains("mode=tt-tt"));
    let m = xqmft::mft::parse_mft(&rules).unwrap();
    assert!(xqmft::mft::validate(&m).is_empty());
    let doc = write(dir.path(), "d.xml", "<a><a/><x/></a>");
    let c = write(dir.path(), "c.mft", &rules);
    assert_eq!(stdout(&xqmft(&["run", "--rules", &c, &doc], None)).trim_end(), "<c><c/><x/></c>");
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("g.xml");
    let f = f.to_str().unwrap();
    stdout(&xqmft(&["gen", "--profile", "deep-chain:9", "--size", "200", "--seed", "4", "-o", f], None));
    let a = std::fs::read_to_string(f).unwrap();
    let b = stdout(&xqmft(&["gen", "--profile", "deep-chain:9", "--size", "200", "--seed", "4"], None));
    assert_eq!(a, b);
    assert_eq!(xqmft::events::xml_to_forest(&a).unwrap().depth(), 9);
}

#[test]
fn bench_records() {
    let out = stdout(&xqmft(&["bench", "--queries", "q02,fourstar", "--sizes", "500,1000", "--reps", "1"], None));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    for l in lines {
        let keys: Vec<&str> = l.split(' ').map(|kv| kv.split('=').next().unwrap()).collect();
        assert_eq!(keys, ["query", "nodes", "ms", "peak", "out_bytes"]);
    }
}

#[test]
fn usage_errors_exit_2() {
    for args in [&["run"][..], &["frobnicate"], &["compose", "a", "b", "--mode", "x-y"], &["gen", "--size", "0"]] {
        assert_eq!(xqmft(args, None).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn pipeline_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.xml", "<a><b></a>");
    let q = write(dir.path(), "q.xq", "<r>{$input/a}</r>");
    let unscoped = write(dir.path(), "u.xq", "<r>{$nope/a}</r>");
    assert_eq!(xqmft(&["run", "--query", &q, &bad], None).status.code(), Some(1));
    assert_eq!(xqmft(&["compile", &unscoped], None).status.code(), Some(1));
    assert_eq!(xqmft(&["optimize", "missing.mft"], None).status.code(), Some(1));
    let o = xqmft(&["run", "--corpus", "q99", "-"], Some("<a/>"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}
