use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

const STDLIB: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/corpus/stdlib.fx");
const BAD: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/corpus/bad.fx");

fn fx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fx"))
        .args(args)
        .output()
        .expect("fx runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn scratch(name: &str, contents: &str) -> String {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    fs::write(&p, contents).unwrap();
    p.display().to_string()
}

#[test]
fn eval_prints_values() {
    let f = scratch("eval.fx", "eval (\\x. 0) (raise e)\neval (\\x. try x with e -> 0) (raise e)\neval S (S 0)\neval [0; raise e]\n");
    let o = fx(&["eval", &f]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "0\n0\n2\n[0; raise e]\n");
}

#[test]
fn eval_reports_stuck_and_fuel() {
    let f = scratch("stuck.fx", "eval S 0 0\n");
    let o = fx(&["eval", &f]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("stuck"));

    let f = scratch("loop.fx", "eval (\\x. x x) (\\x. x x)\n");
    let o = fx(&["--fuel", "50", "--format", "machine", "eval", &f]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout(&o), "eval@1\tfuel\tfuel exhausted after 50 steps\n");
}

#[test]
fn eval_trace_goes_to_stderr() {
    let f = scratch("trace.fx", "eval (\\x. x) 0\n");
    let o = fx(&["--trace", "eval", &f]);
    assert_eq!(stdout(&o), "0\n");
    assert!(!o.stderr.is_empty());
}

#[test]
fn parse_and_read_errors_exit_2() {
    let f = scratch("broken.fx", "let x : nat = (\n");
    assert_eq!(code(&fx(&["check", &f])), 2);
    assert_eq!(code(&fx(&["eval", "/nonexistent/file.fx"])), 2);
    assert_eq!(code(&fx(&["sub", "nat ->", "nat"])), 2);
}

#[test]
fn check_stdlib_is_all_yes() {
    let o = fx(&["--format", "machine", "check", STDLIB]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.lines().count() >= 20);
    assert!(
        out.lines().all(|l| l.split('\t').nth(1) == Some("Yes")),
        "{out}"
    );
}

#[test]
fn check_bad_corpus() {
    let o = fx(&["--format", "machine", "check", BAD]);
    assert_eq!(code(&o), 1);
    let rows: Vec<Vec<String>> = stdout(&o)
        .lines()
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect();
    assert_eq!(rows[0][..2], ["bad".to_string(), "No".to_string()]);
    assert_eq!(rows[1][..2], ["ok".to_string(), "Yes".to_string()]);
}

#[test]
fn sub_verdicts_and_statuses() {
    let o = fx(&["sub", "nat -> nat", "nat^{e} -> nat^{e}"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.starts_with("Yes\n"));
    assert!(out.lines().count() > 1, "derivation is printed");

    let o = fx(&["sub", "nat^{e}", "nat"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("No"));

    let o = fx(&["sub", "forall a. list a + {e}", "forall a. list a + {e}"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn sub_checks_supplied_derivations() {
    let o = fx(&["sub", "nat -> nat", "nat^{e} -> nat^{e}"]);
    let text: String = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| format!("{l}\n"))
        .collect();
    let good = scratch("sub_ok.der", &text);
    let o = fx(&[
        "sub",
        "nat -> nat",
        "nat^{e} -> nat^{e}",
        "--derivation",
        &good,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    // a valid derivation of a different judgement
    let o = fx(&["sub", "nat", "nat + {e}", "--derivation", &good]);
    assert_eq!(code(&o), 1);

    let wrong = scratch("sub_bad.der", &text.replacen("nat ^ {e}", "nat ^ {f}", 1));
    let o = fx(&[
        "sub",
        "nat -> nat",
        "nat^{e} -> nat^{e}",
        "--derivation",
        &wrong,
    ]);
    assert_ne!(code(&o), 0);
}

#[test]
fn derive_check_round_trip() {
    let f = scratch("typed.fx", "check \\x : nat. S x : nat -> nat\n");
    let o = fx(&["--trace", "check", &f]);
    assert_eq!(code(&o), 0);
    let text: String = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| format!("{l}\n"))
        .collect();
    let d = scratch("typed.der", &text);
    assert_eq!(code(&fx(&["derive-check", &d])), 0);

    let bad = scratch(
        "typed_bad.der",
        &text.replace("|- S : nat -> nat", "|- S : nat -> list nat"),
    );
    assert_eq!(code(&fx(&["derive-check", &bad])), 1);
}

#[test]
fn corrupt_holds_on_stdlib() {
    let o = fx(&[
        "--seed",
        "3",
        "--format",
        "machine",
        "corrupt",
        STDLIB,
        "--delta",
        "{e, pred_err}",
        "--samples",
        "5",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(
        out.lines().any(|l| l.starts_with("pred\theld\t5/5")),
        "{out}"
    );
    assert!(
        out.lines().any(|l| l.starts_with("hd\tskipped")),
        "polymorphic items are skipped"
    );
}

#[test]
fn model_report() {
    let o = fx(&["model", STDLIB]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("item | type | oracle-i | oracle-ii | agree\n"));
    assert!(out.lines().last().unwrap().starts_with("summary: "));

    let f = scratch(
        "model.fx",
        "let star : nat = #\nlet r : nat ^ {e} = raise e\n",
    );
    let o = fx(&["--format", "machine", "model", &f]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o),
        "star\tagree\tnat true true\nr\tagree\tnat ^ {e} true true\n"
    );
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning: star"));
}

#[test]
fn machine_output_is_deterministic() {
    let runs = [
        vec!["--format", "machine", "check", STDLIB],
        vec!["--format", "machine", "eval", STDLIB],
        vec![
            "--format",
            "machine",
            "--seed",
            "9",
            "corrupt",
            STDLIB,
            "--delta",
            "{e}",
            "--samples",
            "3",
        ],
        vec!["--format", "machine", "model", STDLIB],
    ];
    for args in runs {
        let (a, b) = (fx(&args), fx(&args));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.status, b.status);
    }
}
