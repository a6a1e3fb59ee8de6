//! Cross-checks `decide_sub` against a bounded search over the subtyping
//! axioms, applied by rewriting under the covariant and contravariant
//! positions of quantifier-free types.

use std::collections::HashSet;

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fx_core::generate::{list_term, nat_term};
use fx_core::model::{is_ground, member, Oracle};
use fx_core::parser::{parse_type, print_type};
use fx_core::subtyping::{canonicalize, check_sub_derivation, decide_sub, SubVerdict};
use fx_core::syntax::{ExcSet, Type};

const SEARCH_DEPTH: usize = 3;
const SIZE_SLACK: usize = 3;

fn pool() -> Vec<ExcSet> {
    vec![
        ExcSet::empty(),
        ExcSet::of(&["e"]),
        ExcSet::of(&["f"]),
        ExcSet::of(&["e", "f"]),
    ]
}

fn size(t: &Type) -> usize {
    match t {
        Type::Nat | Type::Var(_) => 1,
        Type::List(a) | Type::Forall(_, a) | Type::Union(a, _) | Type::Corrupt(a, _) => 1 + size(a),
        Type::Arrow(a, b) => 1 + size(a) + size(b),
    }
}

/// Pairs `(d1, d2)` from the pool whose union is `d`.
fn splits(d: &ExcSet) -> Vec<(ExcSet, ExcSet)> {
    let p = pool();
    let mut out = Vec::new();
    for a in &p {
        for b in &p {
            if a.union(b) == *d {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// Both directions of the four equalities at the root.
fn root_eq(t: &Type) -> Vec<Type> {
    let mut out = Vec::new();
    match t {
        Type::Union(a, d2) => {
            if let Type::Union(x, d1) = a.as_ref() {
                out.push(Type::union(x.as_ref().clone(), d1.union(d2)));
            }
            if let Type::Corrupt(x, d1) = a.as_ref() {
                out.push(Type::corrupt(
                    Type::union(x.as_ref().clone(), d2.clone()),
                    d1.clone(),
                ));
            }
            for (d1, d2) in splits(d2) {
                out.push(Type::union(Type::union(a.as_ref().clone(), d1), d2));
            }
        }
        Type::Corrupt(a, d2) => {
            match a.as_ref() {
                Type::Corrupt(x, d1) => out.push(Type::corrupt(x.as_ref().clone(), d1.union(d2))),
                Type::Union(x, d1) => out.push(Type::union(
                    Type::corrupt(x.as_ref().clone(), d2.clone()),
                    d1.clone(),
                )),
                Type::Arrow(x, y) => out.push(Type::arrow(
                    Type::corrupt(x.as_ref().clone(), d2.clone()),
                    Type::corrupt(y.as_ref().clone(), d2.clone()),
                )),
                _ => {}
            }
            for (d1, d2) in splits(d2) {
                out.push(Type::corrupt(Type::corrupt(a.as_ref().clone(), d1), d2));
            }
        }
        Type::Arrow(x, y) => {
            if let (Type::Corrupt(a, d), Type::Corrupt(b, d2)) = (x.as_ref(), y.as_ref()) {
                if d == d2 {
                    out.push(Type::corrupt(
                        Type::arrow(a.as_ref().clone(), b.as_ref().clone()),
                        d.clone(),
                    ));
                }
            }
        }
        _ => {}
    }
    out
}

/// Types `t'` with `t <= t'` by one axiom at the root.
fn root_up(t: &Type) -> Vec<Type> {
    let mut out = root_eq(t);
    for d in pool() {
        out.push(Type::union(t.clone(), d));
    }
    match t {
        Type::Union(a, d) => {
            out.push(Type::corrupt(a.as_ref().clone(), d.clone()));
            if let Type::Arrow(x, y) = a.as_ref() {
                out.push(Type::arrow(
                    x.as_ref().clone(),
                    Type::union(y.as_ref().clone(), d.clone()),
                ));
            }
        }
        Type::Corrupt(a, d) if d.is_empty() => out.push(a.as_ref().clone()),
        Type::List(a) => {
            if let Type::Corrupt(x, d) = a.as_ref() {
                out.push(Type::corrupt(Type::list(x.as_ref().clone()), d.clone()));
            }
        }
        _ => {}
    }
    out
}

/// Types `t'` with `t' <= t` by one axiom at the root.
fn root_down(t: &Type) -> Vec<Type> {
    let mut out = root_eq(t);
    out.push(Type::corrupt(t.clone(), ExcSet::empty()));
    match t {
        Type::Union(a, _) => out.push(a.as_ref().clone()),
        Type::Corrupt(a, d) => {
            out.push(Type::union(a.as_ref().clone(), d.clone()));
            if let Type::List(x) = a.as_ref() {
                out.push(Type::list(Type::corrupt(x.as_ref().clone(), d.clone())));
            }
        }
        Type::Arrow(x, y) => {
            if let Type::Union(b, d) = y.as_ref() {
                out.push(Type::union(
                    Type::arrow(x.as_ref().clone(), b.as_ref().clone()),
                    d.clone(),
                ));
            }
        }
        _ => {}
    }
    out
}

/// One rewrite anywhere, moving up (`t <= t'`) or down (`t' <= t`).
fn neighbours(t: &Type, up: bool) -> Vec<Type> {
    let mut out = if up { root_up(t) } else { root_down(t) };
    match t {
        Type::Arrow(a, b) => {
            out.extend(
                neighbours(a, !up)
                    .into_iter()
                    .map(|a2| Type::arrow(a2, b.as_ref().clone())),
            );
            out.extend(
                neighbours(b, up)
                    .into_iter()
                    .map(|b2| Type::arrow(a.as_ref().clone(), b2)),
            );
        }
        Type::Union(a, d) => out.extend(
            neighbours(a, up)
                .into_iter()
                .map(|a2| Type::union(a2, d.clone())),
        ),
        Type::List(a) => out.extend(neighbours(a, up).into_iter().map(Type::list)),
        _ => {}
    }
    out
}

fn closure(start: &Type, up: bool, bound: usize) -> HashSet<Type> {
    let mut seen: HashSet<Type> = HashSet::from([start.clone()]);
    let mut frontier = vec![start.clone()];
    for _ in 0..SEARCH_DEPTH {
        let mut next = Vec::new();
        for t in &frontier {
            for n in neighbours(t, up) {
                if size(&n) <= bound && seen.insert(n.clone()) {
                    next.push(n);
                }
            }
        }
        frontier = next;
    }
    seen
}

/// Meets an upward search from `a` with a downward search from `b`.
fn search(a: &Type, b: &Type) -> bool {
    let bound = size(a).max(size(b)) + SIZE_SLACK;
    let fwd = closure(a, true, bound);
    closure(b, false, bound).iter().any(|t| fwd.contains(t))
}

fn arb_set() -> impl Strategy<Value = ExcSet> {
    prop::sample::select(pool())
}

fn arb_qf() -> impl Strategy<Value = Type> {
    let leaf = prop_oneof![3 => Just(Type::Nat), 1 => Just(Type::var("a"))];
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Type::list),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Type::arrow(a, b)),
            (inner.clone(), arb_set()).prop_map(|(a, d)| Type::union(a, d)),
            (inner, arb_set()).prop_map(|(a, d)| Type::corrupt(a, d)),
        ]
    })
}

/// A random walk of upward rewrites, so `a <= result` holds by construction.
fn walk(a: &Type, seed: u64, steps: usize) -> Type {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = a.clone();
    for _ in 0..steps {
        let ns: Vec<Type> = neighbours(&t, true)
            .into_iter()
            .filter(|n| size(n) <= size(a) + 4)
            .collect();
        if ns.is_empty() {
            break;
        }
        t = ns[rng.gen_range(0..ns.len())].clone();
    }
    t
}

fn ty(s: &str) -> Type {
    parse_type(s).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn no_false_no_on_random_pairs(a in arb_qf(), b in arb_qf()) {
        let v = decide_sub(&a, &b);
        if let SubVerdict::Yes(d) = &v {
            prop_assert!(check_sub_derivation(d).is_ok());
        }
        if v.is_no() {
            prop_assert!(!search(&a, &b), "{} <= {} has a derivation", print_type(&a), print_type(&b));
        }
    }

    #[test]
    fn no_false_no_on_derivable_pairs(a in arb_qf(), seed in any::<u64>(), steps in 1usize..5) {
        let b = walk(&a, seed, steps);
        let v = decide_sub(&a, &b);
        prop_assert!(!v.is_no(), "{} <= {} refuted: {v:?}", print_type(&a), print_type(&b));
        if let SubVerdict::Yes(d) = &v {
            prop_assert!(check_sub_derivation(d).is_ok());
        }
    }
}

#[test]
fn search_agrees_on_fixed_examples() {
    let yes = [
        ("nat", "nat + {e}"),
        ("nat + {e}", "nat ^ {e}"),
        ("nat ^ {}", "nat"),
        ("(nat -> nat) + {e}", "nat -> nat + {e}"),
        ("list (nat ^ {e})", "(list nat) ^ {e}"),
        ("nat ^ {e} -> nat ^ {e}", "(nat -> nat) ^ {e}"),
        ("nat -> nat", "nat ^ {e} -> nat ^ {e}"),
    ];
    for (a, b) in yes {
        let (a, b) = (ty(a), ty(b));
        assert!(search(&a, &b), "search misses {a} <= {b}");
        assert!(decide_sub(&a, &b).is_yes(), "{a} <= {b}");
    }
    let no = [
        ("nat ^ {e}", "nat"),
        ("nat + {e}", "nat"),
        ("nat ^ {e}", "nat + {e}"),
        ("nat + {e}", "nat + {f}"),
    ];
    for (a, b) in no {
        let (a, b) = (ty(a), ty(b));
        assert!(!search(&a, &b), "search finds {a} <= {b}");
        assert!(decide_sub(&a, &b).is_no(), "{a} <= {b}");
    }
}

#[test]
fn canonical_forms_are_equivalent() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..300 {
        let t = arb_qf().new_tree(&mut runner).unwrap().current();
        let c = canonicalize(&t);
        assert!(check_sub_derivation(&c.fwd).is_ok(), "{t}");
        assert!(check_sub_derivation(&c.bwd).is_ok(), "{t}");
        assert_eq!(canonicalize(&c.ty).ty, c.ty);
    }
}

/// A subtyping verdict on ground types must not let a term of the smaller
/// interpretation fall out of the larger one.
#[test]
fn yes_verdicts_are_sound_in_the_model() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 60 {
        let a = arb_qf().new_tree(&mut runner).unwrap().current();
        if !is_ground(&a) {
            continue;
        }
        let b = walk(&a, rng.gen(), 3);
        if !is_ground(&b) || !decide_sub(&a, &b).is_yes() {
            continue;
        }
        checked += 1;
        for _ in 0..20 {
            let m = if rng.gen_bool(0.5) {
                nat_term(&mut rng, 3)
            } else {
                list_term(&mut rng, 3)
            };
            let (Some(ma), Some(mb)) = (member(&m, &a, 20_000, 4), member(&m, &b, 20_000, 4))
            else {
                continue;
            };
            if ma.verdict() == Oracle::True {
                assert_ne!(mb.verdict(), Oracle::False, "{m} in {a} but not in {b}");
            }
        }
    }
}
