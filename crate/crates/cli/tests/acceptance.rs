//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Seeds, sample counts and fuel are
//! pinned below.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fx_core::corpus::{Corpus, BAD, STDLIB};
use fx_core::eval::{
    check_diamond, enumerate_par, evaluate, is_par_step, par_develop, step_any, whnf, whnf_quiet,
    Outcome,
};
use fx_core::generate::{
    closed_term, corrupt, exc_set, nat_term, nonempty_exc_set, stdlib_term, sub_pair, EXC_POOL,
};
use fx_core::model::{
    in_nat_interp, in_union_interp, lift, plug, unlift, EvalContext, Membership, Oracle,
};
use fx_core::parser::{parse_term, parse_type, print_type};
use fx_core::subtyping::{check_sub_derivation, decide_sub, SubVerdict};
use fx_core::syntax::{ExcSet, Term, Type, TypingContext};
use fx_core::typing::{bidi_check, corruption_theorem_probe};

const EVAL_FUEL: u64 = 100_000;
const PAIRS: usize = 1_000;
const CORRUPTION_TERMS: usize = 500;
const CONFLUENCE_TERMS: usize = 2_000;
const CONFLUENCE_SIZE: usize = 12;
const DIAMOND_DEPTH: usize = 3;
const PAR_LIMIT: usize = 500;
const MODEL_SAMPLES: usize = 500;
const MODEL_FUEL: u64 = 10_000;
/// Upper bound on the share of fuel-exhausted model samples.
const MAX_FUEL_SHARE: f64 = 0.01;
const SAFETY_SAMPLES: usize = 200;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn fx(args: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_fx"))
        .args(args)
        .output()
        .expect("fx runs");
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stdout).into_owned(),
    )
}

fn ty(s: &str) -> Type {
    parse_type(s).unwrap()
}

fn tm(s: &str) -> Term {
    parse_term(s).unwrap()
}

/// Worked example: the stdlib pipeline and `pred`, run through `fx eval`.
fn criterion_1() -> Verdict {
    let lets: String = STDLIB
        .lines()
        .filter(|l| !l.starts_with("eval ") && !l.starts_with("check "))
        .map(|l| format!("{l}\n"))
        .collect();
    let cases = [
        ("h [2; 1; 5]", "5"),
        ("f [2; 1; 5]", "[5; raise div_by_0; 2]"),
        ("pred 0", "raise pred_err"),
        ("pred (S 0)", "0"),
        ("pred (S 1)", "1"),
        ("pred (S 2)", "2"),
    ];
    let src = cases
        .iter()
        .fold(lets, |acc, (e, _)| format!("{acc}eval {e}\n"));
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance_1.fx");
    fs::write(&path, src).unwrap();
    let fuel = EVAL_FUEL.to_string();
    let (_, out) = fx(&[
        "--fuel",
        &fuel,
        "--format",
        "machine",
        "eval",
        path.to_str().unwrap(),
    ]);
    let got: Vec<String> = out
        .lines()
        .map(|l| l.split('\t').nth(2).unwrap_or("").to_string())
        .collect();
    let wrong: Vec<String> = cases
        .iter()
        .zip(
            got.iter()
                .map(String::as_str)
                .chain(std::iter::repeat("<missing>")),
        )
        .filter(|((_, want), g)| want != g)
        .map(|((e, want), g)| format!("`{e}` printed {g}, expected {want}"))
        .collect();
    if wrong.is_empty() {
        Ok(format!("{} evaluations match", cases.len()))
    } else {
        Err(wrong.join("; "))
    }
}

/// Call-by-name: an unused raising argument is discarded, a used one is caught.
fn criterion_2() -> Verdict {
    let cases = [
        ("(\\x. 0) (raise e)", "0"),
        ("(\\x. try x with e -> 0) (raise e)", "0"),
    ];
    for (src, want) in cases {
        let r = evaluate(&tm(src), EVAL_FUEL).map_err(|e| e.to_string())?;
        let got = fx_core::parser::print_term(&r.term);
        if got != want {
            return Err(format!("{src} gave {got}"));
        }
    }
    Ok("2 evaluations match".into())
}

fn criterion_3() -> Verdict {
    let mut bad = Vec::new();
    let qs = Corpus::stdlib().questions();
    for q in &qs {
        let v = q.check();
        if !v.is_yes() {
            bad.push(format!(
                "{} : {} gave {}",
                q.label,
                print_type(&q.ty),
                v.label()
            ));
        }
    }
    let v = bidi_check(&TypingContext::new(), &tm("raise e"), &Type::Nat);
    if !v.is_no() {
        bad.push(format!("raise e : nat gave {}", v.label()));
    }
    let bad_corpus = Corpus::parse(BAD, "bad.fx")
        .map_err(|e| e.to_string())?
        .questions();
    if !bad_corpus[0].check().is_no() {
        bad.push("bad.fx `bad` was not refuted".into());
    }
    if bad.is_empty() {
        Ok(format!("{} stdlib items Yes, raise e : nat No", qs.len()))
    } else {
        Err(bad.join("; "))
    }
}

fn criterion_4() -> Verdict {
    let mut yes = vec![
        ("nat", "nat + {e}"),
        ("nat + {e}", "nat ^ {e}"),
        ("a -> nat", "(a -> nat) + {e}"),
        ("(a -> nat) + {e}", "(a -> nat) ^ {e}"),
        ("(nat -> list nat) ^ {e}", "nat ^ {e} -> (list nat) ^ {e}"),
        ("nat ^ {e} -> (list nat) ^ {e}", "(nat -> list nat) ^ {e}"),
        ("(a -> b) ^ {e}", "a ^ {e} -> b ^ {e}"),
        ("a ^ {e} -> b ^ {e}", "(a -> b) ^ {e}"),
        ("nat ^ {e, f} -> a", "nat ^ {e, f} -> a ^ {e, f}"),
        ("list nat ^ {e} -> nat", "list nat ^ {e} -> nat ^ {e}"),
        // derived rules at A := a -> nat
        ("(a -> nat) + {}", "a -> nat"),
        ("(forall a. a -> nat) + {e}", "forall a. (a -> nat) + {e}"),
        ("(forall a. a -> nat) ^ {e}", "forall a. (a -> nat) ^ {e}"),
    ];
    let spines = ["nat", "a", "list nat", "nat -> nat"];
    let mut owned = Vec::new();
    for a1 in spines {
        for a3 in spines {
            owned.push((
                format!("({a1}) -> b -> ({a3})"),
                format!("({a1}) ^ {{e, f}} -> b ^ {{e, f}} -> ({a3}) ^ {{e, f}}"),
            ));
        }
    }
    yes.extend(owned.iter().map(|(a, b)| (a.as_str(), b.as_str())));
    let mut bad = Vec::new();
    for (a, b) in &yes {
        match decide_sub(&ty(a), &ty(b)) {
            SubVerdict::Yes(d) => {
                if let Err(e) = check_sub_derivation(&d) {
                    bad.push(format!("{a} <= {b}: derivation rejected: {e}"));
                }
            }
            v => bad.push(format!("{a} <= {b} gave {}", v.label())),
        }
    }
    let v = decide_sub(&ty("nat ^ {e}"), &Type::Nat);
    if !v.is_no() {
        bad.push(format!("nat ^ {{e}} <= nat gave {}", v.label()));
    }
    if bad.is_empty() {
        Ok(format!("{} Yes cases, 1 No case", yes.len()))
    } else {
        Err(bad.join("; "))
    }
}

/// Subtyping is stable under corruption.
fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut n, mut bad) = (0, Vec::new());
    while n < PAIRS {
        let Some((a, b)) = sub_pair(&mut rng, 3, 50) else {
            continue;
        };
        n += 1;
        let d = exc_set(&mut rng, &EXC_POOL, 3);
        let v = decide_sub(
            &Type::corrupt(a.clone(), d.clone()),
            &Type::corrupt(b.clone(), d.clone()),
        );
        if !v.is_yes() {
            bad.push(format!("{a} <= {b} under {d}: {}", v.label()));
        }
    }
    if bad.is_empty() {
        Ok(format!("{PAIRS} pairs re-verified"))
    } else {
        Err(format!("{} failures, first: {}", bad.len(), bad[0]))
    }
}

/// Corruptions of well-typed terms check at the corrupted type.
fn criterion_6() -> Verdict {
    let globals = Corpus::stdlib().globals();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut n, mut bad) = (0, Vec::new());
    while n < CORRUPTION_TERMS {
        let (m, a) = stdlib_term(&mut rng, 3);
        if a.has_forall() || !bidi_check(&globals, &m, &a).is_yes() {
            continue;
        }
        n += 1;
        let d = nonempty_exc_set(&mut rng, &["e", "f", "pred_err"], 2);
        let k = rng.gen_range(1..=3);
        let c = corrupt(&mut rng, &m.erase(), &d, k);
        match corruption_theorem_probe(&globals, &m, &a, &c, &d) {
            Ok(true) => {}
            r => bad.push(format!("{m} : {a} corrupted to {c} under {d}: {r:?}")),
        }
    }
    if bad.is_empty() {
        Ok(format!("{CORRUPTION_TERMS} corrupted terms check"))
    } else {
        Err(format!("{} failures, first: {}", bad.len(), bad[0]))
    }
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut pairs, mut forks, mut bad) = (0usize, 0usize, Vec::new());
    for _ in 0..CONFLUENCE_TERMS {
        let m = closed_term(&mut rng, CONFLUENCE_SIZE);
        if step_any(&m).len() > 1 {
            forks += 1;
        }
        if !check_diamond(&m, DIAMOND_DEPTH) {
            bad.push(format!("diamond fails below {m}"));
        }
        let dev = par_develop(&m);
        if let Some(ns) = enumerate_par(&m, PAR_LIMIT) {
            // every two parallel reducts of m meet at its development
            pairs += ns.len() * ns.len();
            for n in ns.iter().filter(|n| !is_par_step(n, &dev)) {
                bad.push(format!("{m} => {n} does not reach {dev}"));
            }
        }
    }
    if bad.is_empty() {
        Ok(format!("{CONFLUENCE_TERMS} terms ({forks} with competing redexes), {pairs} parallel pairs joined"))
    } else {
        Err(format!("{} failures, first: {}", bad.len(), bad[0]))
    }
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sets = [ExcSet::empty(), ExcSet::of(&["e"]), ExcSet::of(&["e", "f"])];
    let (mut checks, mut fuel, mut bad) = (0usize, 0usize, Vec::new());
    let mut tally = |m: &Term, what: &str, r: Membership| {
        checks += 1;
        if r.verdict() == Oracle::FuelExhausted {
            fuel += 1;
        } else if !r.agree() {
            bad.push(format!("{m} at {what}: {r:?}"));
        }
    };
    for i in 0..MODEL_SAMPLES {
        let m = nat_term(&mut rng, 4);
        let d = &sets[i % sets.len()];
        tally(&m, &format!("nat ^ {d}"), in_nat_interp(&m, d, MODEL_FUEL));
        tally(
            &m,
            &format!("nat + {d}"),
            in_union_interp(&m, d, &ExcSet::empty(), MODEL_FUEL),
        );
    }

    let d = ExcSet::of(&["e"]);
    let rec0 = EvalContext::rec_at(Term::Zero, tm("\\x. \\y. y"), EvalContext::Hole);
    let (c1, c2) = (unlift(&d, &rec0), lift(&d, &rec0));
    let outcomes = [
        (&c1, "raise e", Term::Daimon),
        (&c1, "S (raise e)", tm("raise e")),
        (&c2, "raise e", Term::Daimon),
        (&c2, "S (raise e)", Term::Daimon),
    ];
    for (c, m, want) in outcomes {
        let got = whnf_quiet(&plug(c, &tm(m)), MODEL_FUEL)
            .map_err(|e| e.to_string())?
            .result;
        if got != want {
            bad.push(format!("{c} at {m} reduced to {got}, expected {want}"));
        }
    }

    let share = fuel as f64 / checks as f64;
    if share >= MAX_FUEL_SHARE {
        bad.push(format!("fuel exhausted on {fuel} of {checks} checks"));
    }
    if bad.is_empty() {
        Ok(format!(
            "{checks} membership checks agree ({fuel} fuel-exhausted), 4 context outcomes match"
        ))
    } else {
        Err(format!("{} failures, first: {}", bad.len(), bad[0]))
    }
}

/// Closed accepted terms reach a value; those at `nat` reach a numeral.
fn criterion_9() -> Verdict {
    let stdlib = Corpus::stdlib();
    let bad_corpus = Corpus::parse(BAD, "bad.fx").map_err(|e| e.to_string())?;
    let mut terms: Vec<(String, Term, Type)> = Vec::new();
    for c in [&stdlib, &bad_corpus] {
        for q in c.questions() {
            if q.check().is_yes() {
                terms.push((q.label.clone(), c.expand(&q.term), q.ty.clone()));
            }
        }
    }
    let globals = stdlib.globals();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut sampled = 0;
    while sampled < SAFETY_SAMPLES {
        let (m, a) = stdlib_term(&mut rng, 3);
        if bidi_check(&globals, &m, &a).is_yes() {
            sampled += 1;
            terms.push((format!("sample {m}"), stdlib.expand(&m), a));
        }
    }
    let mut bad = Vec::new();
    let mut nats = 0;
    for (label, m, a) in &terms {
        let tr = whnf(m, EVAL_FUEL).map_err(|e| e.to_string())?;
        if !matches!(tr.outcome, Outcome::Value(_)) {
            bad.push(format!("{label}: {}", tr.outcome));
        }
        if *a == Type::Nat {
            nats += 1;
            let r = evaluate(m, EVAL_FUEL).map_err(|e| e.to_string())?;
            if r.term.as_numeral().is_none() {
                bad.push(format!("{label}: evaluated to {}", r.term));
            }
        }
    }
    if bad.is_empty() {
        Ok(format!(
            "{} closed terms reach values, {nats} at nat are numerals",
            terms.len()
        ))
    } else {
        Err(format!("{} failures, first: {}", bad.len(), bad[0]))
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("worked example end to end", criterion_1),
        ("call-by-name discipline", criterion_2),
        ("stdlib typechecks", criterion_3),
        ("subtyping suite", criterion_4),
        ("subtyping stable under corruption", criterion_5),
        ("corruption preserves typing", criterion_6),
        ("confluence", criterion_7),
        ("model lemma instances", criterion_8),
        ("nat safety and weak head normalization", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let r = run();
        let secs = t0.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
