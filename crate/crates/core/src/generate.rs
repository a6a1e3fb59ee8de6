//! Seeded generators for terms, types, subtyping pairs and corruptions.
//! Every function takes the random source from the caller.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::subtyping::decide_sub;
use crate::syntax::{ExcName, ExcSet, Term, Type};

/// Exception names used by the generators.
pub const EXC_POOL: [&str; 3] = ["e", "f", "g"];

fn name(s: &str) -> ExcName {
    ExcName::new(s).expect("pool names are valid")
}

/// A random subset of `pool` with at most `max` names.
pub fn exc_set<R: Rng>(rng: &mut R, pool: &[&str], max: usize) -> ExcSet {
    let k = rng.gen_range(0..=max.min(pool.len()));
    pool.choose_multiple(rng, k).map(|s| name(s)).collect()
}

/// A non-empty random subset of `pool` with at most `max` names.
pub fn nonempty_exc_set<R: Rng>(rng: &mut R, pool: &[&str], max: usize) -> ExcSet {
    let k = rng.gen_range(1..=max.clamp(1, pool.len()));
    pool.choose_multiple(rng, k).map(|s| name(s)).collect()
}

/// A closed, annotation-free term of size at most `size`. Model-only forms
/// appear occasionally.
pub fn closed_term<R: Rng>(rng: &mut R, size: usize) -> Term {
    let mut scope = Vec::new();
    let mut counter = 0;
    let t = term_in(rng, size.max(1), &mut scope, &mut counter);
    debug_assert!(t.size() <= size.max(1) && t.is_closed());
    t
}

fn leaf<R: Rng>(rng: &mut R, scope: &[String]) -> Term {
    if !scope.is_empty() && rng.gen_bool(0.4) {
        return Term::var(scope.choose(rng).unwrap());
    }
    match rng.gen_range(0..10) {
        0 | 1 => Term::Zero,
        2 => Term::Succ,
        3 => Term::Rec,
        4 => Term::Fold,
        5 => Term::Cons,
        6 => Term::Nil,
        7 => Term::raise("e"),
        8 => Term::raise("f"),
        _ => {
            if rng.gen_bool(0.5) {
                Term::Daimon
            } else {
                Term::Zero
            }
        }
    }
}

fn term_in<R: Rng>(rng: &mut R, size: usize, scope: &mut Vec<String>, counter: &mut usize) -> Term {
    if size <= 1 || rng.gen_bool(0.2) {
        return leaf(rng, scope);
    }
    let pick = if size == 2 { 0 } else { rng.gen_range(0..10) };
    match pick {
        0..=2 => {
            let x = format!("x{counter}");
            *counter += 1;
            scope.push(x.clone());
            let body = term_in(rng, size - 1, scope, counter);
            scope.pop();
            Term::lam(&x, body)
        }
        3..=7 => {
            let (l, r) = split(rng, size - 1);
            Term::app(
                term_in(rng, l, scope, counter),
                term_in(rng, r, scope, counter),
            )
        }
        8 => {
            let (l, r) = split(rng, size - 1);
            let e = *EXC_POOL[..2].choose(rng).unwrap();
            Term::try_with(
                term_in(rng, l, scope, counter),
                e,
                term_in(rng, r, scope, counter),
            )
        }
        _ => {
            if size >= 3 && rng.gen_bool(0.3) {
                let (l, r) = split(rng, size - 1);
                Term::seq(
                    term_in(rng, l, scope, counter),
                    term_in(rng, r, scope, counter),
                )
            } else if size >= 3 {
                Term::app(Term::Succ, term_in(rng, size - 2, scope, counter))
            } else {
                leaf(rng, scope)
            }
        }
    }
}

fn split<R: Rng>(rng: &mut R, budget: usize) -> (usize, usize) {
    let l = rng.gen_range(1..budget);
    (l, budget - l)
}

/// A quantifier-free type over `nat`, `list`, arrows, two type variables
/// and decorations from [`EXC_POOL`].
pub fn qf_type<R: Rng>(rng: &mut R, depth: usize) -> Type {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..4) {
            0 | 1 => Type::Nat,
            2 => Type::var("a"),
            _ => Type::var("b"),
        };
    }
    match rng.gen_range(0..6) {
        0 => Type::list(qf_type(rng, depth - 1)),
        1 | 2 => Type::arrow(qf_type(rng, depth - 1), qf_type(rng, depth - 1)),
        3 => Type::union(qf_type(rng, depth - 1), nonempty_exc_set(rng, &EXC_POOL, 2)),
        4 => Type::corrupt(qf_type(rng, depth - 1), nonempty_exc_set(rng, &EXC_POOL, 2)),
        _ => qf_type(rng, depth - 1),
    }
}

/// A random supertype of `a`, built from moves that are sound by
/// construction.
pub fn supertype<R: Rng>(rng: &mut R, a: &Type) -> Type {
    match rng.gen_range(0..6) {
        0 => a.clone(),
        1 => Type::union(a.clone(), nonempty_exc_set(rng, &EXC_POOL, 2)),
        2 => Type::corrupt(a.clone(), nonempty_exc_set(rng, &EXC_POOL, 2)),
        _ => match a {
            Type::Union(b, d) => {
                if rng.gen_bool(0.5) {
                    Type::union(supertype(rng, b), d.union(&exc_set(rng, &EXC_POOL, 2)))
                } else {
                    Type::corrupt(supertype(rng, b), d.clone())
                }
            }
            Type::Corrupt(b, e) => {
                Type::corrupt(supertype(rng, b), e.union(&exc_set(rng, &EXC_POOL, 2)))
            }
            Type::List(b) => Type::list(supertype(rng, b)),
            Type::Arrow(d, c) => {
                if rng.gen_bool(0.3) {
                    let e = nonempty_exc_set(rng, &EXC_POOL, 2);
                    Type::arrow(
                        Type::corrupt(d.as_ref().clone(), e.clone()),
                        Type::corrupt(c.as_ref().clone(), e),
                    )
                } else {
                    Type::arrow(subtype(rng, d), supertype(rng, c))
                }
            }
            _ => Type::corrupt(a.clone(), nonempty_exc_set(rng, &EXC_POOL, 1)),
        },
    }
}

/// A random subtype of `a`, the dual of [`supertype`].
pub fn subtype<R: Rng>(rng: &mut R, a: &Type) -> Type {
    match a {
        Type::Union(b, d) | Type::Corrupt(b, d) if rng.gen_bool(0.5) => {
            if rng.gen_bool(0.5) {
                subtype(rng, b)
            } else {
                let keep: ExcSet = d.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
                match a {
                    Type::Union(..) => Type::union(subtype(rng, b), keep),
                    _ => Type::corrupt(subtype(rng, b), keep),
                }
            }
        }
        Type::List(b) => Type::list(subtype(rng, b)),
        Type::Arrow(d, c) => Type::arrow(supertype(rng, d), subtype(rng, c)),
        _ => a.clone(),
    }
}

/// A pair the decision procedure proves, drawn from supertype moves and
/// from independent draws. Gives up after `tries` attempts.
pub fn sub_pair<R: Rng>(rng: &mut R, depth: usize, tries: usize) -> Option<(Type, Type)> {
    for _ in 0..tries {
        let a = qf_type(rng, depth);
        let b = if rng.gen_bool(0.9) {
            supertype(rng, &a)
        } else {
            qf_type(rng, depth)
        };
        if decide_sub(&a, &b).is_yes() {
            return Some((a, b));
        }
    }
    None
}

/// A closed term aimed at the `nat` interpretations: numerals with
/// exceptional or daimon tails, redexes producing them, and junk.
pub fn nat_term<R: Rng>(rng: &mut R, depth: usize) -> Term {
    let tail = |rng: &mut R| match rng.gen_range(0..6) {
        0 | 1 => Term::Zero,
        2 => Term::raise("e"),
        3 => Term::raise("f"),
        4 => Term::Daimon,
        _ => Term::raise("g"),
    };
    if depth == 0 {
        return tail(rng);
    }
    match rng.gen_range(0..10) {
        0 | 1 => Term::app(Term::Succ, nat_term(rng, depth - 1)),
        2 => tail(rng),
        3 => Term::app(
            Term::lam("x", Term::app(Term::Succ, Term::var("x"))),
            nat_term(rng, depth - 1),
        ),
        4 => {
            let e = *EXC_POOL.choose(rng).unwrap();
            Term::try_with(nat_term(rng, depth - 1), e, nat_term(rng, depth - 1))
        }
        5 => Term::apps(
            Term::Rec,
            [
                nat_term(rng, depth - 1),
                Term::lam("y", Term::lam("x", Term::var("y"))),
                nat_term(rng, depth - 1),
            ],
        ),
        6 => Term::app(Term::lam("x", Term::Zero), nat_term(rng, depth - 1)),
        7 => match rng.gen_range(0..4) {
            0 => Term::Nil,
            1 => Term::lam("x", Term::var("x")),
            2 => Term::app(Term::Succ, Term::Nil),
            _ => Term::apps(Term::Cons, [Term::Zero, Term::Nil]),
        },
        _ => Term::numeral(rng.gen_range(0..4)),
    }
}

/// A random list of nat terms, possibly with an exceptional terminator.
pub fn list_term<R: Rng>(rng: &mut R, len: usize) -> Term {
    let end = match rng.gen_range(0..5) {
        0 => Term::raise("e"),
        1 => Term::Daimon,
        _ => Term::Nil,
    };
    (0..len).fold(end, |acc, _| {
        Term::apps(Term::Cons, [nat_term(rng, 2), acc])
    })
}

/// A random well-typed candidate over the standard library globals,
/// together with its intended type. Callers confirm the typing.
pub fn stdlib_term<R: Rng>(rng: &mut R, depth: usize) -> (Term, Type) {
    let u = |t: Type, names: &[&str]| Type::union(t, ExcSet::of(names));
    match rng.gen_range(0..8) {
        0 => (
            Term::app(Term::var("pred"), nat_expr(rng, depth)),
            u(Type::Nat, &["pred_err"]),
        ),
        1 => (
            Term::apps(
                Term::var("div"),
                [nat_expr(rng, depth), nat_expr(rng, depth)],
            ),
            u(Type::Nat, &["div_by_0"]),
        ),
        2 => (
            Term::app(Term::var("hd"), list_expr(rng, depth)),
            u(Type::Nat, &["hd_fail"]),
        ),
        3 => (list_expr(rng, depth), Type::list(Type::Nat)),
        4 => {
            let body = nat_expr_in(rng, depth, &["x"]);
            (Term::lam("x", body), Type::arrow(Type::Nat, Type::Nat))
        }
        5 => (
            Term::app(Term::var("f"), list_expr(rng, depth)),
            Type::list(u(
                Type::corrupt(Type::Nat, ExcSet::of(&["pred_err"])),
                &["div_by_0"],
            )),
        ),
        _ => (nat_expr(rng, depth), Type::Nat),
    }
}

fn nat_expr<R: Rng>(rng: &mut R, depth: usize) -> Term {
    nat_expr_in(rng, depth, &[])
}

fn nat_expr_in<R: Rng>(rng: &mut R, depth: usize, vars: &[&str]) -> Term {
    if depth == 0 || rng.gen_bool(0.25) {
        if !vars.is_empty() && rng.gen_bool(0.5) {
            return Term::var(vars.choose(rng).unwrap());
        }
        return Term::numeral(rng.gen_range(0..4));
    }
    let d = depth - 1;
    match rng.gen_range(0..7) {
        0 => Term::app(Term::Succ, nat_expr_in(rng, d, vars)),
        1 => Term::app(Term::var("pred'"), nat_expr_in(rng, d, vars)),
        2 => Term::apps(
            Term::var("add"),
            [nat_expr_in(rng, d, vars), nat_expr_in(rng, d, vars)],
        ),
        3 => Term::apps(
            Term::var("mul"),
            [nat_expr_in(rng, d, vars), nat_expr_in(rng, d, vars)],
        ),
        4 => Term::app(Term::var("h"), list_expr(rng, d)),
        5 => Term::try_with(
            Term::app(Term::var("pred"), nat_expr_in(rng, d, vars)),
            "pred_err",
            nat_expr_in(rng, d, vars),
        ),
        _ => Term::app(
            Term::lam("y", nat_expr_in(rng, d, &["y"])),
            nat_expr_in(rng, d, vars),
        ),
    }
}

fn list_expr<R: Rng>(rng: &mut R, depth: usize) -> Term {
    let len = rng.gen_range(0..3);
    let items: Vec<Term> = (0..len)
        .map(|_| nat_expr(rng, depth.saturating_sub(1)))
        .collect();
    if rng.gen_bool(0.3) {
        Term::apps(
            Term::Cons,
            [nat_expr(rng, depth.saturating_sub(1)), Term::list(items)],
        )
    } else {
        Term::list(items)
    }
}

/// Positions a corruption may replace: everything reachable through
/// abstractions, applications and `try`, the root included.
fn positions(m: &Term, path: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    out.push(path.clone());
    match m {
        Term::Lam(_, _, b) => {
            path.push(0);
            positions(b, path, out);
            path.pop();
        }
        Term::App(a, b) | Term::Try(a, _, b) => {
            path.push(0);
            positions(a, path, out);
            path.pop();
            path.push(1);
            positions(b, path, out);
            path.pop();
        }
        _ => {}
    }
}

fn replace_at(m: &Term, path: &[u8], with: &Term) -> Term {
    let Some((&i, rest)) = path.split_first() else {
        return with.clone();
    };
    match (m, i) {
        (Term::Lam(x, a, b), 0) => {
            Term::Lam(x.clone(), a.clone(), Box::new(replace_at(b, rest, with)))
        }
        (Term::App(a, b), 0) => Term::app(replace_at(a, rest, with), b.as_ref().clone()),
        (Term::App(a, b), _) => Term::app(a.as_ref().clone(), replace_at(b, rest, with)),
        (Term::Try(a, e, b), 0) => {
            Term::Try(Box::new(replace_at(a, rest, with)), e.clone(), b.clone())
        }
        (Term::Try(a, e, b), _) => {
            Term::Try(a.clone(), e.clone(), Box::new(replace_at(b, rest, with)))
        }
        _ => unreachable!("path comes from positions"),
    }
}

/// Replaces up to `count` random sub-terms of `m` by `raise ε` with ε drawn
/// from `delta`. An empty `delta` returns `m` unchanged.
pub fn corrupt<R: Rng>(rng: &mut R, m: &Term, delta: &ExcSet, count: usize) -> Term {
    let names: Vec<&ExcName> = delta.iter().collect();
    if names.is_empty() {
        return m.clone();
    }
    let mut cur = m.clone();
    for _ in 0..count {
        let mut ps = Vec::new();
        positions(&cur, &mut Vec::new(), &mut ps);
        let p = ps.choose(rng).unwrap().clone();
        let e = names.choose(rng).unwrap();
        cur = replace_at(&cur, &p, &Term::Raise((*e).clone()));
    }
    cur
}
