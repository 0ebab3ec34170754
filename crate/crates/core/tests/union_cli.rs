//! Coarse unions and the command-line surface.

mod common;

use std::process::Command;

use boxspace::family::FamilySpec;
use boxspace::graph::DEFAULT_VERTEX_CAP;
use boxspace::union::{build_union, CoarseUnion, DEFAULT_MATRIX_LIMIT};
use boxspace::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn union(text: &str) -> CoarseUnion {
    build_union(&FamilySpec::parse(text).unwrap(), DEFAULT_VERTEX_CAP).unwrap()
}

const FAMILIES: [&str; 3] = [
    "cycle --primes 3,5,7",
    "sym --range 3..5",
    "sl,m=3,ring=zmod{i},gens=st --range 2..3",
];

#[test]
fn union_examples() {
    let u = union("cycle --primes 3,5,7");
    let diams: Vec<usize> = u.components.iter().map(|c| c.diameter).collect();
    assert_eq!(diams, [1, 2, 3]);
    assert_eq!(u.dist((5, 0), (5, 1)).unwrap(), 1);
    assert_eq!(u.dist((3, 0), (5, 0)).unwrap(), 11);
    let s = union("sym --range 3..5");
    let diams: Vec<usize> = s.components.iter().map(|c| c.diameter).collect();
    assert_eq!(diams, [2, 6, 10]);
    assert_eq!(s.dist((3, 1), (4, 5)).unwrap(), 2 + 6 + 7);
    let sl = union("sl,m=3,ring=zmod{i},gens=st --range 2..3");
    assert_eq!(sl.components.len(), 2);
    assert!(matches!(u.dist((4, 0), (3, 0)), Err(Error::NotFound(_))));
    assert!(matches!(u.dist((7, 7), (3, 0)), Err(Error::NotFound(_))));
}

#[test]
fn union_metric_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for text in FAMILIES {
        let u = union(text);
        let point = |rng: &mut ChaCha8Rng| {
            let c = &u.components[rng.gen_range(0..u.components.len())];
            (c.index, rng.gen_range(0..c.size))
        };
        for _ in 0..10_000 {
            let (a, b, c) = (point(&mut rng), point(&mut rng), point(&mut rng));
            let (ab, bc, ac) = (u.dist(a, b).unwrap(), u.dist(b, c).unwrap(), u.dist(a, c).unwrap());
            assert!(ac <= ab + bc, "{text}: {a:?} {b:?} {c:?}");
            assert_eq!(ab, u.dist(b, a).unwrap());
            assert_eq!(ab == 0, a == b);
        }
    }
}

#[test]
fn union_restricts_to_word_metric() {
    for text in FAMILIES {
        let u = union(text);
        for c in u.components.iter().filter(|c| c.size <= 200) {
            let g = c.graph().unwrap();
            let oracle = common::all_pairs(g.len(), &g.edges());
            for a in 0..c.size {
                for b in 0..c.size {
                    assert_eq!(u.dist((c.index, a), (c.index, b)).unwrap(), oracle[a][b] as u64);
                }
            }
        }
    }
}

#[test]
fn union_export_round_trip() {
    let u = union("sym --range 3..5");
    let json = u.to_json(DEFAULT_MATRIX_LIMIT).unwrap();
    let doc: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["metric"], "remark-cdu-v1");
    assert_eq!(doc["components"].as_array().unwrap().len(), 3);
    let back = CoarseUnion::from_json(&json, DEFAULT_VERTEX_CAP).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..2000 {
        let a = (rng.gen_range(3..=5u64), rng.gen_range(0..6));
        let b = (rng.gen_range(3..=5u64), rng.gen_range(0..6));
        assert_eq!(back.dist(a, b).unwrap(), u.dist(a, b).unwrap());
    }
    let slim = u.export(30).unwrap();
    let omitted: Vec<bool> = slim.components.iter().map(|c| c.distances_omitted).collect();
    assert_eq!(omitted, [false, false, true]);
    let back = CoarseUnion::import(&slim, DEFAULT_VERTEX_CAP).unwrap();
    assert_eq!(back.dist((5, 7), (5, 100)).unwrap(), u.dist((5, 7), (5, 100)).unwrap());
    let mut bad = slim.clone();
    bad.metric = "other".into();
    assert!(CoarseUnion::import(&bad, DEFAULT_VERTEX_CAP).is_err());
}

#[test]
fn family_examples() {
    assert_eq!(FamilySpec::parse("sym --range 3..8").unwrap().members().unwrap().len(), 6);
    let f = FamilySpec::parse("sl,ring=zmod{km},gens=st --range 3..7:2 --km 2,3,5").unwrap();
    let kms: Vec<Option<u64>> = f.members().unwrap().iter().map(|m| m.km).collect();
    assert_eq!(kms, [Some(2), Some(3), Some(5)]);
    assert_eq!(FamilySpec::parse("psl2 --primes 3,5,7,11,13").unwrap().members().unwrap().len(), 5);
    assert!(matches!(FamilySpec::parse("sym --range 3-8"), Err(Error::Parse { .. })));
}

fn boxspace(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_boxspace")).args(args).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    (
        out.status.code().unwrap(),
        serde_json::from_str(&stdout).unwrap_or(Value::String(stdout)),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn cli_examples() {
    let (code, v, _) = boxspace(&[
        "converge", "--family", "sym", "--range", "5..13:2", "--limit", "limit:sym", "--radius", "3",
    ]);
    assert_eq!(code, 0);
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for row in rows.iter().filter(|r| r["index"].as_u64().unwrap() >= 9) {
        assert!(row["radius"].as_u64().unwrap() >= 3);
        assert_eq!(row["threshold_met"], true);
    }
    assert!(v["tables"]["agreement"].as_str().unwrap().starts_with("index,km,spec,radius"));
    let (code, v, _) = boxspace(&["spectral", "--group", "cycle:n=6"]);
    assert_eq!(code, 0);
    assert!((v["result"]["report"]["lambda1"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(v["command"], "spectral");
    assert_eq!(v["format_version"], 1);
    let (code, v, _) = boxspace(&["order", "--group", "sl:m=3,ring=zmod6,gens=stu", "--generator", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["order"], "6");
}

#[test]
fn cli_version_and_errors() {
    let (code, v, _) = boxspace(&["--version"]);
    assert_eq!(code, 0);
    assert!(v.as_str().unwrap().contains("report format 1"));
    let (code, _, err) = boxspace(&["spectral", "--group", "sl:m=4,ring=zmod2,gens=st"]);
    assert_eq!(code, 2);
    let e: Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(e["error"]["kind"], "unsupported_parameter");
    let (code, _, _) = boxspace(&["order", "--group", "sym:m=5", "--group", "sym:m=6", "--generator", "1"]);
    assert_eq!(code, 2);
    let (code, _, err) = boxspace(&["folner", "--group", "sym:m=6", "--radius", "6"]);
    assert_eq!(code, 3);
    assert!(err.contains("exact_too_large"));
}

#[test]
fn cli_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("wall_time_ms");
        v
    };
    let mut reports = Vec::new();
    for threads in ["1", "2"] {
        let path = dir.path().join(format!("report{threads}.json"));
        let (code, _, _) = boxspace(&[
            "--out",
            path.to_str().unwrap(),
            "--threads",
            threads,
            "expander-scan",
            "--family",
            "psl2",
            "--primes",
            "5,7,11",
        ]);
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(&path).unwrap();
        reports.push(strip(serde_json::from_str(&text).unwrap()));
    }
    assert_eq!(reports[0]["result"]["rows"].as_array().unwrap().len(), 3);
    let lambdas = |v: &Value| -> Vec<f64> {
        v["result"]["rows"].as_array().unwrap().iter().map(|r| r["lambda1"].as_f64().unwrap()).collect()
    };
    for (a, b) in lambdas(&reports[0]).iter().zip(lambdas(&reports[1])) {
        assert!((a - b).abs() < 1e-9);
    }
    let (_, a, _) = boxspace(&["folner", "--group", "sym:m=4", "--radius", "3", "--profile"]);
    let (_, b, _) = boxspace(&["--threads", "1", "folner", "--group", "sym:m=4", "--radius", "3", "--profile"]);
    assert_eq!(a["result"], b["result"]);
    assert_eq!(a["tables"], b["tables"]);
}
