use proptest::prelude::*;
use regmod::cli::*;
use regmod::exactnum::{parse_scalar, Scalar};
use regmod::moduli::Verdict;
use serde_json::{json, Value};

const SUM_SCENARIO: &str = include_str!("../scenarios/sum_stability.json");

fn s(t: &str) -> Scalar {
    parse_scalar(t).unwrap()
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut all = vec!["regmod"];
    all.extend_from_slice(args);
    let code = main_with(all, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json_of(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn sum_stability_scenario() {
    let r = run_text(SUM_SCENARIO, &FlagArgs::default()).unwrap();
    assert_eq!(r.exit_code(), EXIT_OK);
    assert_eq!(r.count(Verdict::Fails), 2);
    assert_eq!(r.count(Verdict::Holds), 1);
    assert!(r.results.iter().filter(|c| c.verdict() == Verdict::Fails).all(|c| c.expect == Some(Verdict::Fails)));
}

#[test]
fn unknown_map_is_usage_error() {
    let text = r#"{"checks":[{"op":"check","args":{"map":"no_such_map","point":["0","0"],"property":"open","rate":"1"}}]}"#;
    assert!(matches!(run_text(text, &FlagArgs::default()), Err(CliError::Usage(_))));
    let dir = std::env::temp_dir().join(format!("regmod-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("unknown.json");
    std::fs::write(&path, text).unwrap();
    let (code, _, err) = cli(&["run", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("no_such_map"));
}

#[test]
fn parse_errors_carry_paths() {
    let text = r#"{"checks":[{"op":"sum_stability","args":{"f":"abs","g":"abs","point":["0","x/0","0"]}}]}"#;
    match run_text(text, &FlagArgs::default()) {
        Err(CliError::Parse { path, .. }) => assert!(path.contains("checks[0].args.point"), "{path}"),
        other => panic!("{other:?}"),
    }
    let text = r#"{"checks":[{"op":"frobnicate"}]}"#;
    assert!(matches!(run_text(text, &FlagArgs::default()), Err(CliError::Parse { .. })));
    let text = r#"{"checks":[], "extra": 1}"#;
    assert!(matches!(run_text(text, &FlagArgs::default()), Err(CliError::Parse { .. })));
    let text = r#"{"maps":{"a":{"kind":"inverse","of":"a"}},"checks":[]}"#;
    assert!(matches!(run_text(text, &FlagArgs::default()), Err(CliError::Usage(_))));
}

#[test]
fn bundles_match_their_expectations() {
    for (name, _) in BUNDLES {
        let r = check_builtin_example(name, &FlagArgs::default()).unwrap();
        assert_eq!(r.exit_code(), EXIT_OK, "{name}: {}", r.to_text());
    }
    let j = check_builtin_example("jump_pair", &FlagArgs::default()).unwrap().to_json();
    let wit = &j["results"][0]["result"]["certificate"]["witness"];
    let w = wit["values"].as_array().unwrap().iter().find(|v| v["name"] == json!("w")).unwrap();
    assert_eq!(w["value"]["exact"], json!("0"));

    let r = check_builtin_example("rat_tail_pair", &FlagArgs::default()).unwrap();
    let v: Vec<Verdict> = r.results.iter().map(|c| c.verdict()).collect();
    assert_eq!(v, [Verdict::Holds, Verdict::Holds, Verdict::Fails]);

    let r = check_builtin_example("abs_pair", &FlagArgs::default()).unwrap().to_json();
    let t = &r["results"][1]["result"]["theorem"];
    assert_eq!(t["predicted"]["lip_sum"]["exact"], json!("2"));
    assert_eq!(t["tightness"]["tight"], json!(true));

    let r = check_builtin_example("shelf_pair", &FlagArgs::default()).unwrap().to_json();
    let hyps = r["results"][1]["result"]["theorem"]["hypotheses"].as_array().unwrap().clone();
    assert!(hyps.iter().any(|h| h["verdict"] == json!("fails")));
    assert_eq!(r["results"][2]["verdict"], json!("fails"));

    let (code, _, err) = cli(&["example", "no_such_bundle"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("abs_pair"));
}

#[test]
fn estimate_examples() {
    let (code, out, _) = cli(&["estimate", "--map", "linear-2x", "--point", "0,0", "--kind", "lop"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("[2, 2]"), "{out}");

    let (code, out, _) = cli(&["estimate", "--map", "linear_2x", "--point", "0,0", "--kind", "lop", "--budget", "0", "--format", "json"]);
    assert_eq!(code, EXIT_INCONCLUSIVE);
    let b = &json_of(&out)["results"][0]["result"]["bracket"];
    assert_eq!(b["lo"]["exact"], json!(Scalar::pow2(-20).to_string()));
    assert_eq!(b["hi"]["exact"], json!(Scalar::pow2(20).to_string()));

    let (code, out, _) = cli(&["estimate", "--map", "abs_interval", "--point", "1,1", "--kind", "reg", "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let b = &json_of(&out)["results"][0]["result"]["bracket"];
    assert_eq!(b["lo"]["exact"], json!("1"));

    let inline = r#"{"kind":"pa","pieces":[{"dom":{"lo":"-inf","hi":"inf"},"lower":{"a":"3","b":"0"},"upper":{"a":"3","b":"0"}}]}"#;
    let (code, out, _) = cli(&["estimate", "--map", inline, "--point", "0,0", "--kind", "lip"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("[3, 3]"), "{out}");

    assert_eq!(cli(&["estimate", "--map", "nope", "--point", "0,0", "--kind", "lop"]).0, EXIT_USAGE);
    assert_eq!(cli(&["estimate", "--map", "abs", "--point", "0,0", "--kind", "wobble"]).0, EXIT_USAGE);
    assert_eq!(cli(&["estimate", "--map", "abs", "--point", "0", "--kind", "lop"]).0, EXIT_USAGE);
    assert_eq!(cli(&["estimate", "--map", "abs", "--point", "0,5", "--kind", "lop"]).0, EXIT_USAGE);
    assert_eq!(cli(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(cli(&["--help"]).0, EXIT_OK);
}

#[test]
fn reports_are_deterministic() {
    let f = FlagArgs { seed: Some(11), ..FlagArgs::default() };
    let a = run_text(SUM_SCENARIO, &f).unwrap().to_json_string();
    let b = run_text(SUM_SCENARIO, &f).unwrap().to_json_string();
    assert_eq!(a, b);
    let (_, x, _) = cli(&["example", "rat_tail_pair", "--format", "json", "--seed", "5"]);
    let (_, y, _) = cli(&["example", "rat_tail_pair", "--format", "json", "--seed", "5"]);
    assert_eq!(x, y);
    let v = json_of(&x);
    assert_eq!(v["settings"]["seed"], json!("5"));
    assert_eq!(v["summary"], json!({"holds": 2, "fails": 1, "inconclusive": 0, "mismatches": 0, "exit_code": 0}));
}

#[test]
fn check_seeds_differ_by_index() {
    let seeds: Vec<u64> = (0..8).map(|i| check_seed(3, i)).collect();
    let mut d = seeds.clone();
    d.sort();
    d.dedup();
    assert_eq!(d.len(), seeds.len());
    assert_eq!(check_seed(3, 2), seeds[2]);
    assert_ne!(check_seed(4, 2), seeds[2]);
}

#[test]
fn scalars_show_exact_and_approx() {
    let r = check_builtin_example("abs_pair", &FlagArgs::default()).unwrap().to_json();
    let p = &r["results"][1]["result"]["theorem"]["predicted"]["lip_sum"];
    let approx: f64 = p["approx"].as_str().unwrap().parse().unwrap();
    assert_eq!(approx, 2.0);
    assert_eq!(s(p["exact"].as_str().unwrap()), s("2"));
}

/// Checks whose verdicts are known and cheap to compute.
fn pool() -> Vec<(Value, Verdict)> {
    let chk = |rate: &str| json!({"op": "check", "args": {"map": "linear_2x", "point": ["0", "0"], "property": "open", "rate": rate}});
    vec![
        (chk("2"), Verdict::Holds),
        (chk("3"), Verdict::Fails),
        (
            json!({"op": "graves", "args": {"f": "abs_interval", "g": "identity", "x": "0", "z": "0", "l": "1", "m": "1", "lip": "1"}}),
            Verdict::Inconclusive,
        ),
    ]
}

fn oracle_exit(cases: &[(Verdict, Option<Verdict>)], strict: bool) -> i32 {
    let mut mismatch = false;
    let mut undecided = false;
    for (got, want) in cases {
        match (got, want) {
            (g, Some(w)) if g == w => {}
            (Verdict::Inconclusive, Some(_)) => undecided = true,
            (_, Some(_)) => mismatch = true,
            (Verdict::Holds, None) => {}
            (Verdict::Fails, None) => mismatch = true,
            (Verdict::Inconclusive, None) if strict => mismatch = true,
            (Verdict::Inconclusive, None) => undecided = true,
        }
    }
    if mismatch {
        1
    } else if undecided {
        2
    } else {
        0
    }
}

fn verdict(i: usize) -> Option<Verdict> {
    [None, Some(Verdict::Holds), Some(Verdict::Fails), Some(Verdict::Inconclusive)][i]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exit_code_contract(picks in prop::collection::vec((0usize..3, 0usize..4), 0..5), strict in any::<bool>()) {
        let pool = pool();
        let mut checks = Vec::new();
        let mut cases = Vec::new();
        for (k, e) in &picks {
            let (mut c, v) = pool[*k].clone();
            if let Some(e) = verdict(*e) {
                c["expect"] = json!(e.to_string());
            }
            checks.push(c);
            cases.push((v, verdict(*e)));
        }
        let text = json!({"checks": checks}).to_string();
        let f = FlagArgs { expect_strict: strict, ..FlagArgs::default() };
        let r = run_text(&text, &f).unwrap();
        prop_assert_eq!(r.exit_code(), oracle_exit(&cases, strict));
        prop_assert_eq!(r.results.len(), picks.len());
    }
}
