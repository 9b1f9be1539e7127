use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mogi::minilang::{parse, pretty_print};
use mogi::search::RunRecord;

fn mogi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mogi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn corpus_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks")
}

fn bench_file(name: &str, file: &str) -> String {
    corpus_root()
        .join(name)
        .join(file)
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let dest = to.join(e.file_name());
        if e.file_type().unwrap().is_dir() {
            copy_dir(&e.path(), &dest);
        } else {
            fs::copy(e.path(), dest).unwrap();
        }
    }
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn run_into(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--out",
        dir.to_str().unwrap(),
        "--benchmark",
        "B1-redundant-stmt",
        "--algorithm",
        "nsga2",
    ];
    args.extend_from_slice(extra);
    mogi(&args)
}

#[test]
fn run_writes_one_record_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_into(tmp.path(), &["--seed-range", "3..4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<String> = listing(tmp.path()).into_iter().map(|(n, _)| n).collect();
    assert_eq!(
        names,
        [
            "B1-redundant-stmt_nsga2_3.json",
            "B1-redundant-stmt_nsga2_4.json"
        ]
    );
    let r = RunRecord::from_json(&fs::read_to_string(tmp.path().join(&names[0])).unwrap()).unwrap();
    assert_eq!(r.config.seed, 3);
    assert_eq!(r.benchmark, "B1-redundant-stmt");
}

#[test]
fn reruns_are_byte_identical_under_any_job_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    assert!(run_into(a.path(), &["--seed-range", "0..2", "--jobs", "1"])
        .status
        .success());
    assert!(run_into(b.path(), &["--seed-range", "0..2", "--jobs", "4"])
        .status
        .success());
    assert!(run_into(c.path(), &["--seed-range", "0..2"])
        .status
        .success());
    assert_eq!(listing(a.path()), listing(b.path()));
    assert_eq!(listing(a.path()), listing(c.path()));
}

#[test]
fn config_file_drives_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("runs");
    let cfg = tmp.path().join("exp.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"benchmarks": ["B6-redundant-guard"], "algorithms": ["spea2", "hillclimb"], "seeds": "5..5",
                "search": {{"evaluation_budget": 60}}, "out": {:?}}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = mogi(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<String> = listing(&out).into_iter().map(|(n, _)| n).collect();
    assert_eq!(
        names,
        [
            "B6-redundant-guard_hillclimb_5.json",
            "B6-redundant-guard_spea2_5.json"
        ]
    );
    for (_, bytes) in listing(&out) {
        let r = RunRecord::from_json(std::str::from_utf8(&bytes).unwrap()).unwrap();
        assert!(r.evaluations_used <= 60);
    }
}

#[test]
fn analyze_emits_every_table() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_into(tmp.path(), &["--seed-range", "0..3"])
        .status
        .success());
    let report_dir = tmp.path().join("report");
    let o = mogi(&[
        "analyze",
        tmp.path().to_str().unwrap(),
        "--out",
        report_dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "report.json",
        "hv.csv",
        "effects.csv",
        "improvements.csv",
        "cost.csv",
        "fronts/B1-redundant-stmt.csv",
    ] {
        assert!(report_dir.join(f).is_file(), "{f}");
    }
    // the rediscovery column agrees with the records themselves
    let records: Vec<RunRecord> = listing(tmp.path())
        .into_iter()
        .filter(|(n, _)| n.ends_with(".json"))
        .map(|(_, b)| RunRecord::from_json(std::str::from_utf8(&b).unwrap()).unwrap())
        .collect();
    let expected = records
        .iter()
        .filter(|r| {
            r.oracles
                .iter()
                .any(|o| r.front_weakly_dominates(&o.fitness))
        })
        .count();
    let table = fs::read_to_string(report_dir.join("improvements.csv")).unwrap();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(
        row[..4],
        ["B1-redundant-stmt", "nsga2", "4", &expected.to_string()]
    );

    // analyzing in place skips the report it wrote earlier
    assert!(mogi(&["analyze", tmp.path().to_str().unwrap()])
        .status
        .success());
    assert!(mogi(&["analyze", tmp.path().to_str().unwrap()])
        .status
        .success());
}

#[test]
fn baseline_only_run_has_no_improvements() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.json");
    fs::write(&cfg, r#"{"search": {"evaluation_budget": 1}}"#).unwrap();
    let runs = tmp.path().join("runs");
    let o = mogi(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        runs.to_str().unwrap(),
        "--benchmark",
        "B3-config-resolution",
        "--algorithm",
        "hillclimb",
        "--seed-range",
        "0..0",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(mogi(&["analyze", runs.to_str().unwrap()]).status.success());
    let table = fs::read_to_string(runs.join("improvements.csv")).unwrap();
    assert_eq!(
        table.lines().nth(1).unwrap(),
        "B3-config-resolution,hillclimb,1,0,0,0,0,0,0.0,0.0,0.0"
    );
    let hv = fs::read_to_string(runs.join("hv.csv")).unwrap();
    assert!(
        hv.lines().nth(1).unwrap().ends_with(",0.0,0.0,0.0,0.0"),
        "{hv}"
    );
}

#[test]
fn analyze_without_records_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mogi(&["analyze", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no run records"));
}

#[test]
fn apply_empty_patch_prints_the_original() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.patch");
    fs::write(&empty, "").unwrap();
    let program = bench_file("B1-redundant-stmt", "program.mini");
    let o = mogi(&["apply", &program, empty.to_str().unwrap()]);
    assert!(o.status.success());
    let expected = pretty_print(&parse(&fs::read_to_string(&program).unwrap()).unwrap());
    assert_eq!(stdout(&o), expected);
}

#[test]
fn apply_method_cache_oracle() {
    let o = mogi(&[
        "apply",
        &bench_file("B2-repeated-call", "program.mini"),
        &bench_file("B2-repeated-call", "oracle/cache-foo.patch"),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(
        text.contains("var cachedVar1: int = foo(a, b, c);"),
        "{text}"
    );
    assert_eq!(text.matches("cachedVar1").count(), 3);
}

#[test]
fn apply_failure_exits_3_with_a_report() {
    let tmp = tempfile::tempdir().unwrap();
    let program = tmp.path().join("p.mini");
    fs::write(
        &program,
        "fn f() -> int { var k: int = 3; return k; }\nfn test_f() { assert(f() == 3); }\n",
    )
    .unwrap();
    let patch = tmp.path().join("bad.patch");
    fs::write(&patch, "DELETE p.mini:0\n").unwrap();
    let o = mogi(&["apply", program.to_str().unwrap(), patch.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(
        err.contains("stage: Failed") && err.contains("`k`"),
        "{err}"
    );
}

#[test]
fn apply_rejects_malformed_patches() {
    let tmp = tempfile::tempdir().unwrap();
    let patch = tmp.path().join("bad.patch");
    fs::write(&patch, "FROB x:1\n").unwrap();
    let o = mogi(&[
        "apply",
        &bench_file("B1-redundant-stmt", "program.mini"),
        patch.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("patch line 1"));
}

#[test]
fn validate_prints_the_baseline() {
    let o = mogi(&["validate", "B1-redundant-stmt"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "B1-redundant-stmt: ok steps=218 peak_bytes=176 net_bytes=0\n"
    );
}

#[test]
fn validate_all_shipped_benchmarks() {
    let o = mogi(&["validate"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(
        stdout(&o).lines().filter(|l| l.contains(": ok ")).count(),
        6
    );
}

#[test]
fn tampered_manifest_is_a_named_drift() {
    let tmp = tempfile::tempdir().unwrap();
    copy_dir(&corpus_root(), tmp.path());
    let manifest = tmp.path().join("B1-redundant-stmt/manifest.json");
    let text =
        fs::read_to_string(&manifest)
            .unwrap()
            .replacen("\"steps\": 218.0", "\"steps\": 217.0", 1);
    fs::write(&manifest, text).unwrap();
    let root = tmp.path().to_str().unwrap();
    let o = mogi(&["validate", "--corpus", root, "B1-redundant-stmt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stdout(&o).contains("manifest drift in `baseline.steps`: recorded 217, measured 218"),
        "{}",
        stdout(&o)
    );

    // a run refuses to start on a drifted corpus
    let runs = tmp.path().join("runs");
    let o = mogi(&[
        "run",
        "--corpus",
        root,
        "--out",
        runs.to_str().unwrap(),
        "--seed-range",
        "0..0",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!runs.exists());

    // blessing repairs it
    assert!(mogi(&["validate", "--corpus", root, "--bless"])
        .status
        .success());
    assert!(mogi(&["validate", "--corpus", root]).status.success());
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(mogi(&["frob"]).status.code(), Some(1));
    assert_eq!(
        mogi(&["run", "--seed-range", "4..2"]).status.code(),
        Some(1)
    );
    assert_eq!(
        mogi(&["run", "--algorithm", "simplex"]).status.code(),
        Some(1)
    );
    assert_eq!(
        mogi(&["run", "--config", "/nonexistent/exp.json"])
            .status
            .code(),
        Some(1)
    );
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.json");
    fs::write(&cfg, r#"{"search": {"population_size": 0}}"#).unwrap();
    let o = mogi(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert_eq!(mogi(&["validate", "B9-missing"]).status.code(), Some(2));
    assert_eq!(mogi(&["--help"]).status.code(), Some(0));
}
