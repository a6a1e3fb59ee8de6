//! The standard library evaluated against plain Rust arithmetic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fx_core::corpus::Corpus;
use fx_core::eval::{evaluate, whnf, Outcome, ValueOutcome};
use fx_core::parser::parse_term;
use fx_core::syntax::{Term, TypingContext};
use fx_core::typing::bidi_check;

const FUEL: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum R {
    N(u64),
    Raise(&'static str),
}

fn pred(n: u64) -> R {
    if n == 0 {
        R::Raise("pred_err")
    } else {
        R::N(n - 1)
    }
}

fn div(m: u64, n: u64) -> R {
    m.checked_div(n).map_or(R::Raise("div_by_0"), R::N)
}

/// One element of `f l`: `div 10 (pred n)`.
fn f_elem(n: u64) -> R {
    match pred(n) {
        R::N(p) => div(10, p),
        r => r,
    }
}

fn h(l: &[u64]) -> u64 {
    match l.first() {
        None => 0,
        Some(&n) => match f_elem(n) {
            R::N(v) => v,
            R::Raise(_) => 0,
        },
    }
}

fn run(c: &Corpus, src: &str) -> Term {
    let m = c.expand(&parse_term(src).unwrap());
    let r = evaluate(&m, FUEL).unwrap();
    assert!(
        matches!(r.outcome, Outcome::Value(_)),
        "{src}: {}",
        r.outcome
    );
    r.term
}

fn read(t: &Term) -> R {
    match t {
        Term::Raise(e) => R::Raise(match e.as_str() {
            "pred_err" => "pred_err",
            "div_by_0" => "div_by_0",
            "hd_fail" => "hd_fail",
            other => panic!("unexpected exception {other}"),
        }),
        _ => R::N(
            t.as_numeral()
                .unwrap_or_else(|| panic!("not a numeral: {t}")),
        ),
    }
}

fn fx_list(l: &[u64]) -> String {
    let items: Vec<String> = l.iter().map(u64::to_string).collect();
    format!("[{}]", items.join("; "))
}

#[test]
fn arithmetic_matches() {
    let c = Corpus::stdlib();
    for m in 0..5u64 {
        assert_eq!(read(&run(&c, &format!("pred {m}"))), pred(m), "pred {m}");
        assert_eq!(
            read(&run(&c, &format!("pred' {m}"))),
            R::N(m.saturating_sub(1))
        );
        assert_eq!(
            read(&run(&c, &format!("iszero {m}"))),
            R::N(u64::from(m == 0))
        );
        for n in 0..5u64 {
            assert_eq!(read(&run(&c, &format!("add {m} {n}"))), R::N(m + n));
            assert_eq!(read(&run(&c, &format!("mul {m} {n}"))), R::N(m * n));
            assert_eq!(
                read(&run(&c, &format!("sub {m} {n}"))),
                R::N(m.saturating_sub(n))
            );
            assert_eq!(
                read(&run(&c, &format!("div {m} {n}"))),
                div(m, n),
                "div {m} {n}"
            );
        }
    }
}

#[test]
fn pipeline_matches_on_random_lists() {
    let c = Corpus::stdlib();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..25 {
        let len = rng.gen_range(0..4);
        let l: Vec<u64> = (0..len).map(|_| rng.gen_range(0..6)).collect();
        let src = fx_list(&l);

        assert_eq!(
            run(&c, &format!("h {src}")).as_numeral(),
            Some(h(&l)),
            "h {src}"
        );

        let out = run(&c, &format!("f {src}"));
        let items = out
            .as_list()
            .unwrap_or_else(|| panic!("f {src} gave {out}"));
        let got: Vec<R> = items.into_iter().map(read).collect();
        let want: Vec<R> = l.iter().map(|&n| f_elem(n)).collect();
        assert_eq!(got, want, "f {src}");

        let want = l.first().map_or(R::Raise("hd_fail"), |&n| f_elem(n));
        assert_eq!(read(&run(&c, &format!("g {src}"))), want, "g {src}");
    }
}

#[test]
fn nat_definitions_compute_numerals() {
    let c = Corpus::stdlib();
    let want = [
        ("first", h(&[2, 1, 5])),
        ("none", 0),
        ("safe", 0),
        ("sum", 5),
        ("quotient", 3),
    ];
    for (name, v) in want {
        let r = evaluate(&c.expand(&Term::var(name)), FUEL).unwrap();
        assert_eq!(r.outcome, Outcome::Value(ValueOutcome::Regular), "{name}");
        assert_eq!(r.term.as_numeral(), Some(v), "{name}");
    }
}

/// Every closed well-typed question reaches a weak-head value, and the
/// terms along the way are never refuted at the same type.
#[test]
fn closed_questions_normalize_and_stay_typed() {
    let c = Corpus::stdlib();
    for q in c.questions() {
        if !q.check().is_yes() || q.ty.has_forall() {
            continue;
        }
        let closed = c.expand(&q.term);
        let tr = whnf(&closed, FUEL).unwrap();
        assert!(
            matches!(tr.outcome, Outcome::Value(_)),
            "{}: {}",
            q.label,
            tr.outcome
        );
        for st in tr.steps.iter().take(8) {
            let v = bidi_check(&TypingContext::new(), &st.term, &q.ty);
            assert!(!v.is_no(), "{}: {} refuted at {}", q.label, st.term, q.ty);
        }
    }
}

#[test]
fn bad_definition_is_refuted() {
    let c = Corpus::parse(fx_core::corpus::BAD, "bad.fx").unwrap();
    let qs = c.questions();
    assert!(qs[0].check().is_no());
    assert!(qs[1].check().is_yes());
}
