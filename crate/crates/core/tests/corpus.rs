use std::fs;
use std::path::Path;

use mogi::corpus::{Corpus, CorpusError};
use mogi::interp::{run_tests, FitnessVector, TestOutcome};
use mogi::minilang::{pretty_print, stmt_to_string, typecheck, walk_block, NodeId, Program};
use mogi::operators::{apply_class_cache, apply_method_cache, find_call, CacheScope, CacheTarget};
use mogi::patch::Edit;

fn shipped() -> Corpus {
    Corpus::shipped()
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

fn scratch_corpus() -> (tempfile::TempDir, Corpus) {
    let tmp = tempfile::tempdir().unwrap();
    copy_dir(&shipped().root, tmp.path());
    let c = Corpus::new(tmp.path());
    (tmp, c)
}

#[test]
fn every_benchmark_loads_and_validates() {
    let c = shipped();
    let names = c.names().unwrap();
    assert!(names.len() >= 6);
    for n in names {
        let b = c.load(&n).unwrap_or_else(|e| panic!("{e}"));
        assert!(!b.oracles.is_empty(), "{n}");
        let problem = b.problem().unwrap();
        assert!(problem.baseline.passed, "{n}");
    }
}

#[test]
fn b1_oracle_is_a_single_delete() {
    let b = shipped().load("B1-redundant-stmt").unwrap();
    assert_eq!(b.oracles.len(), 1);
    assert!(matches!(
        b.oracles[0].patch.edits.as_slice(),
        [Edit::Delete { .. }]
    ));
    assert_eq!(b.manifest.baseline, FitnessVector::new(218.0, 176.0, 0.0));
    let report = run_tests(&b.program, &b.fixtures, u64::MAX);
    assert!(report.tests.iter().all(|t| t.outcome == TestOutcome::Pass));
    assert_eq!(report.fitness(), b.manifest.baseline);
}

fn oracle_delta(name: &str) -> (FitnessVector, FitnessVector) {
    let b = shipped().load(name).unwrap();
    (b.manifest.baseline, b.oracles[0].fitness)
}

#[test]
fn oracles_move_the_advertised_objectives() {
    // B1: steps and memory improve
    let (base, o) = oracle_delta("B1-redundant-stmt");
    assert!(o.steps < base.steps && o.peak_bytes < base.peak_bytes);
    // B2: steps improve, memory does not grow
    let (base, o) = oracle_delta("B2-repeated-call");
    assert!(o.steps < base.steps && o.peak_bytes <= base.peak_bytes);
    // B3: steps and bandwidth improve at a memory cost
    let (base, o) = oracle_delta("B3-config-resolution");
    assert!(o.steps < base.steps && o.net_bytes < base.net_bytes && o.peak_bytes > base.peak_bytes);
    // B4: steps improve
    let (base, o) = oracle_delta("B4-loop-invariant");
    assert!(o.steps < base.steps && o.peak_bytes <= base.peak_bytes);
    // B5: bandwidth and steps improve
    let (base, o) = oracle_delta("B5-repeated-fetch");
    assert!(o.steps < base.steps && o.net_bytes < base.net_bytes);
    // B6: steps improve
    let (base, o) = oracle_delta("B6-redundant-guard");
    assert!(o.steps < base.steps);
}

#[test]
fn oracle_edit_shapes() {
    let c = shipped();
    let edits = |n: &str| c.load(n).unwrap().oracles[0].patch.edits.clone();
    assert!(matches!(
        edits("B2-repeated-call").as_slice(),
        [Edit::CacheMethod { .. }]
    ));
    assert!(matches!(
        edits("B3-config-resolution").as_slice(),
        [Edit::CacheClass { .. }]
    ));
    assert!(matches!(
        edits("B4-loop-invariant").as_slice(),
        [Edit::Copy { .. }, Edit::Delete { .. }]
    ));
    assert!(matches!(
        edits("B5-repeated-fetch").as_slice(),
        [Edit::CacheMethod { .. } | Edit::CacheClass { .. }]
    ));
    assert!(matches!(
        edits("B6-redundant-guard").as_slice(),
        [Edit::Replace { .. } | Edit::Delete { .. }]
    ));
}

fn target(call: u32, function: &str, occurrences: &[u32], scope: CacheScope) -> CacheTarget {
    CacheTarget {
        call: NodeId(call),
        enclosing_function: function.to_string(),
        occurrence_ids: occurrences.iter().map(|&i| NodeId(i)).collect(),
        scope,
    }
}

#[test]
fn b2_targets_by_hand() {
    // foo: 0 var r, 1 for, 2 r = .., 3 return; compute: 4 var x, 5 foo(..), 6 var y, 7 foo(..), 8 return
    let b = shipped().load("B2-repeated-call").unwrap();
    assert_eq!(
        b.manifest.method_cache_targets,
        vec![target(5, "compute", &[5, 7], CacheScope::Method)]
    );
    assert_eq!(
        b.manifest.class_cache_targets,
        vec![target(5, "compute", &[5, 7], CacheScope::Class)]
    );
}

#[test]
fn b3_targets_by_hand() {
    // resolve_name: 0 var raw, 1 fetch(..), 2 var name, 3 for, 4 name = .., 5 return
    // header: 6 rendered = .., 7 return, 8 len(..), 9 resolve_name()
    // footer: 10 rendered = .., 11 return, 12 len(..), 13 resolve_name()
    let b = shipped().load("B3-config-resolution").unwrap();
    assert!(b.manifest.method_cache_targets.is_empty());
    assert_eq!(
        b.manifest.class_cache_targets,
        vec![
            target(1, "resolve_name", &[1], CacheScope::Class),
            target(8, "header", &[8, 12], CacheScope::Class),
            target(9, "header", &[9, 13], CacheScope::Class),
        ]
    );
}

fn all_targets() -> Vec<(String, Program, CacheTarget)> {
    let c = shipped();
    let mut out = Vec::new();
    for n in c.names().unwrap() {
        let b = c.load(&n).unwrap();
        for t in b
            .manifest
            .method_cache_targets
            .iter()
            .chain(&b.manifest.class_cache_targets)
        {
            out.push((n.clone(), b.program.clone(), t.clone()));
        }
    }
    out
}

#[test]
fn cache_transforms_keep_corpus_programs_well_typed() {
    let targets = all_targets();
    assert!(targets.len() >= 5);
    for (name, program, t) in targets {
        let patched = match t.scope {
            CacheScope::Method => apply_method_cache(&program, &t),
            CacheScope::Class => apply_class_cache(&program, &t),
        }
        .unwrap_or_else(|e| panic!("{name} {t:?}: {e:?}"));
        typecheck(&patched)
            .unwrap_or_else(|e| panic!("{name} {t:?}: {e}\n{}", pretty_print(&patched)));
    }
}

/// No field writes and no fetch or alloc anywhere in the callee's body.
fn is_pure(program: &Program, callee: &str) -> bool {
    let Some(f) = program.function(callee) else {
        return !matches!(callee, "fetch" | "alloc");
    };
    let fields: Vec<&str> = program.fields.iter().map(|f| f.name.as_str()).collect();
    let mut pure = true;
    walk_block(&f.body, &mut |s| {
        let text = stmt_to_string(s);
        let head = text.lines().next().unwrap_or("");
        if head.contains("fetch(") || head.contains("alloc(") {
            pure = false;
        }
        if fields.iter().any(|name| {
            head.starts_with(&format!("{name} = ")) || head.starts_with(&format!("{name}["))
        }) {
            pure = false;
        }
    });
    pure
}

#[test]
fn method_cache_on_pure_callees_keeps_outcomes() {
    let c = shipped();
    let mut checked = 0;
    for n in c.names().unwrap() {
        let b = c.load(&n).unwrap();
        let before: Vec<TestOutcome> = run_tests(&b.program, &b.fixtures, u64::MAX)
            .tests
            .into_iter()
            .map(|t| t.outcome)
            .collect();
        for t in &b.manifest.method_cache_targets {
            let call = find_call(&b.program, t.call).unwrap();
            if !is_pure(&b.program, &call.callee) {
                continue;
            }
            let patched = apply_method_cache(&b.program, t).unwrap();
            let after: Vec<TestOutcome> = run_tests(&patched, &b.fixtures, u64::MAX)
                .tests
                .into_iter()
                .map(|t| t.outcome)
                .collect();
            assert_eq!(before, after, "{n} {t:?}");
            checked += 1;
        }
    }
    assert!(checked >= 1);
}

#[test]
fn unknown_benchmark_is_reported() {
    assert!(
        matches!(shipped().load("B0-nothing"), Err(CorpusError::UnknownBenchmark(n)) if n == "B0-nothing")
    );
}

#[test]
fn tampered_oracle_fitness_is_drift() {
    let (_tmp, c) = scratch_corpus();
    let path = c.root.join("B2-repeated-call/manifest.json");
    let mut m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    m["oracles"][0]["fitness"]["peak_bytes"] = serde_json::json!(1.0);
    fs::write(&path, serde_json::to_string_pretty(&m).unwrap()).unwrap();
    match c.load("B2-repeated-call") {
        Err(CorpusError::Drift {
            field,
            recorded,
            measured,
            ..
        }) => {
            assert_eq!(field, "oracles[cache-foo].fitness.peak_bytes");
            assert_eq!((recorded.as_str(), measured.as_str()), ("1", "88"));
        }
        other => panic!("{other:?}"),
    }
    c.load_unchecked("B2-repeated-call")
        .unwrap()
        .bless()
        .unwrap();
    c.load("B2-repeated-call").unwrap();
}

#[test]
fn tampered_targets_are_drift() {
    let (_tmp, c) = scratch_corpus();
    let path = c.root.join("B3-config-resolution/manifest.json");
    let mut m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    m["class_cache_targets"].as_array_mut().unwrap().pop();
    fs::write(&path, serde_json::to_string_pretty(&m).unwrap()).unwrap();
    assert!(
        matches!(c.load("B3-config-resolution"), Err(CorpusError::Drift { field, .. }) if field == "class_cache_targets")
    );
}

#[test]
fn failing_oracle_is_rejected() {
    let (_tmp, c) = scratch_corpus();
    // deleting `built = built + 1` breaks the field assertion
    fs::write(
        c.root
            .join("B1-redundant-stmt/oracle/delete-reallocation.patch"),
        "DELETE program.mini:7\n",
    )
    .unwrap();
    let err = c.load("B1-redundant-stmt").unwrap_err();
    assert!(matches!(err, CorpusError::OracleInvalid { .. }), "{err}");
    assert!(err.to_string().contains("fails test_build"), "{err}");
}

#[test]
fn uncovered_statement_in_edited_function_is_rejected() {
    let (_tmp, c) = scratch_corpus();
    let dir = c.root.join("B6-redundant-guard");
    let source = fs::read_to_string(dir.join("program.mini")).unwrap();
    // a branch the tests never take, inside the function the oracle edits
    let source = source.replace(
        "    if (len(bookmarks) >= 0) {",
        "    if (len(bookmarks) > 100) {\n        shown = 0;\n    }\n    if (len(bookmarks) >= 0) {",
    );
    fs::write(dir.join("program.mini"), source).unwrap();
    // 0 new if, 1 len(..), 2 shown = 0, 3 old if, 4 len(..), 5 shown = ..
    fs::write(
        dir.join("oracle/unguard.patch"),
        "REPLACE program.mini:5 -> program.mini:3\n",
    )
    .unwrap();
    let b = c.load_unchecked("B6-redundant-guard").unwrap();
    b.bless().unwrap();
    let err = c.load("B6-redundant-guard").unwrap_err();
    assert!(
        matches!(&err, CorpusError::Coverage { function, stmt, .. } if function == "show" && *stmt == NodeId(2)),
        "{err}"
    );
}
