//! Subtyping: checkable derivations, canonical forms, and a sound
//! three-valued decision procedure.
//!
//! Canonical forms push corruption through arrows and quantifiers, merge
//! nested unions and corruptions, hoist unions above corruption and erase
//! empty sets. Corruption over `list` stays put since only
//! `list (A^D) <= (list A)^D` holds.
//!
//! Besides the primitive rules, derivations may use `ex-stable`
//! (`A <= B` gives `A^D <= B^D`), the stability of subtyping under
//! corruption.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::parser::{parse_sub_judgment, print_type, ParseError};
use crate::syntax::{fresh_name, subst_type, ExcSet, Type};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dir {
    /// Left-to-right reading of the equality as written.
    Lr,
    Rl,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubRule {
    StId,
    StTrans,
    StArrow,
    FGen,
    FInst(Type),
    FDistr,
    ExUni,
    ExCorrupt,
    ExNoexc,
    ExCtx,
    ExArru,
    ExFallc,
    ExFallu,
    ExLcor,
    ExLctx,
    EqUu(Dir),
    EqCc(Dir),
    EqUc(Dir),
    EqArrc(Dir),
    /// Stability under corruption, a derived rule.
    ExStable,
}

impl SubRule {
    pub fn name(&self) -> String {
        let eq =
            |base: &str, d: &Dir| format!("{base}({})", if *d == Dir::Lr { "lr" } else { "rl" });
        match self {
            SubRule::StId => "st-id".into(),
            SubRule::StTrans => "st-trans".into(),
            SubRule::StArrow => "st-arrow".into(),
            SubRule::FGen => "f-gen".into(),
            SubRule::FInst(_) => "f-inst".into(),
            SubRule::FDistr => "f-distr".into(),
            SubRule::ExUni => "ex-uni".into(),
            SubRule::ExCorrupt => "ex-corrupt".into(),
            SubRule::ExNoexc => "ex-noexc".into(),
            SubRule::ExCtx => "ex-ctx".into(),
            SubRule::ExArru => "ex-arru".into(),
            SubRule::ExFallc => "ex-fallc".into(),
            SubRule::ExFallu => "ex-fallu".into(),
            SubRule::ExLcor => "ex-lcor".into(),
            SubRule::ExLctx => "ex-lctx".into(),
            SubRule::EqUu(d) => eq("eq-uu", d),
            SubRule::EqCc(d) => eq("eq-cc", d),
            SubRule::EqUc(d) => eq("eq-uc", d),
            SubRule::EqArrc(d) => eq("eq-arrc", d),
            SubRule::ExStable => "ex-stable".into(),
        }
    }

    fn arity(&self) -> usize {
        match self {
            SubRule::StTrans | SubRule::StArrow => 2,
            SubRule::FGen | SubRule::ExCtx | SubRule::ExLctx | SubRule::ExStable => 1,
            _ => 0,
        }
    }

    fn parse(name: &str, witness: Option<Type>) -> Option<SubRule> {
        let dir = |s: &str| match s {
            "lr" => Some(Dir::Lr),
            "rl" => Some(Dir::Rl),
            _ => None,
        };
        if let Some((base, rest)) = name.split_once('(') {
            let d = dir(rest.strip_suffix(')')?)?;
            return match base {
                "eq-uu" => Some(SubRule::EqUu(d)),
                "eq-cc" => Some(SubRule::EqCc(d)),
                "eq-uc" => Some(SubRule::EqUc(d)),
                "eq-arrc" => Some(SubRule::EqArrc(d)),
                _ => None,
            };
        }
        Some(match name {
            "st-id" => SubRule::StId,
            "st-trans" => SubRule::StTrans,
            "st-arrow" => SubRule::StArrow,
            "f-gen" => SubRule::FGen,
            "f-inst" => SubRule::FInst(witness?),
            "f-distr" => SubRule::FDistr,
            "ex-uni" => SubRule::ExUni,
            "ex-corrupt" => SubRule::ExCorrupt,
            "ex-noexc" => SubRule::ExNoexc,
            "ex-ctx" => SubRule::ExCtx,
            "ex-arru" => SubRule::ExArru,
            "ex-fallc" => SubRule::ExFallc,
            "ex-fallu" => SubRule::ExFallu,
            "ex-lcor" => SubRule::ExLcor,
            "ex-lctx" => SubRule::ExLctx,
            "ex-stable" => SubRule::ExStable,
            _ => return None,
        })
    }
}

impl fmt::Display for SubRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// A derivation of `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubDerivation {
    pub rule: SubRule,
    pub lhs: Type,
    pub rhs: Type,
    pub premises: Vec<SubDerivation>,
}

impl SubDerivation {
    pub fn new(rule: SubRule, lhs: Type, rhs: Type, premises: Vec<SubDerivation>) -> Self {
        SubDerivation {
            rule,
            lhs,
            rhs,
            premises,
        }
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(|p| p.size()).sum::<usize>()
    }

    /// Indented text, one node per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write_text(&mut s, 0);
        s
    }

    pub(crate) fn write_text(&self, out: &mut String, indent: usize) {
        out.push_str(&"  ".repeat(indent));
        out.push_str(&format!(
            "{} : {} <= {}",
            self.rule,
            print_type(&self.lhs),
            print_type(&self.rhs)
        ));
        if let SubRule::FInst(w) = &self.rule {
            out.push_str(&format!(" @ {}", print_type(w)));
        }
        out.push('\n');
        for p in &self.premises {
            p.write_text(out, indent + 1);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at node {path} ({rule}: {lhs} <= {rhs}): {message}")]
pub struct SubCheckError {
    /// Premise indices from the root, e.g. `0.1`; `root` for the root.
    pub path: String,
    pub rule: String,
    pub lhs: String,
    pub rhs: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DerivationParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Syntax { line: usize, source: ParseError },
}

fn fail(msg: impl Into<String>) -> Result<(), String> {
    Err(msg.into())
}

fn same(a: &Type, b: &Type) -> bool {
    a.alpha_eq(b)
}

fn check_node(d: &SubDerivation) -> Result<(), String> {
    let (l, r) = (&d.lhs, &d.rhs);
    if d.premises.len() != d.rule.arity() {
        return fail(format!(
            "expected {} premise(s), found {}",
            d.rule.arity(),
            d.premises.len()
        ));
    }
    let p = &d.premises;
    match &d.rule {
        SubRule::StId => {
            if !same(l, r) {
                return fail("sides differ");
            }
        }
        SubRule::StTrans => {
            if !same(l, &p[0].lhs) || !same(r, &p[1].rhs) {
                return fail("conclusion does not match the outer premise types");
            }
            if !same(&p[0].rhs, &p[1].lhs) {
                return fail("premises do not share their middle type");
            }
        }
        SubRule::StArrow => match (l, r) {
            (Type::Arrow(a, b), Type::Arrow(a2, b2)) => {
                if !(same(&p[0].lhs, a2) && same(&p[0].rhs, a)) {
                    return fail("first premise must relate the domains contravariantly");
                }
                if !(same(&p[1].lhs, b) && same(&p[1].rhs, b2)) {
                    return fail("second premise must relate the codomains");
                }
            }
            _ => return fail("both sides must be arrows"),
        },
        SubRule::FGen => match r {
            Type::Forall(a, body) => {
                if !same(&p[0].lhs, l) || !same(&p[0].rhs, body) {
                    return fail("premise must be the left side against the quantified body");
                }
                if l.free_vars().contains(a) {
                    return fail(format!(
                        "side condition violated: `{a}` is free on the left"
                    ));
                }
            }
            _ => return fail("right side must be a quantified type"),
        },
        SubRule::FInst(w) => match l {
            Type::Forall(a, body) => {
                if !same(&subst_type(body, a, w), r) {
                    return fail("right side is not the instance at the witness");
                }
            }
            _ => return fail("left side must be a quantified type"),
        },
        SubRule::FDistr => match (l, r) {
            (Type::Forall(a, inner), Type::Arrow(dom, cod)) => match &**inner {
                Type::Arrow(a1, b1) => {
                    if inner_fv_contains(a1, a) {
                        return fail(format!(
                            "side condition violated: `{a}` is free in the domain"
                        ));
                    }
                    let expect = Type::arrow((**a1).clone(), Type::Forall(a.clone(), b1.clone()));
                    if !same(&expect, &Type::Arrow(dom.clone(), cod.clone())) {
                        return fail("right side must distribute the quantifier over the codomain");
                    }
                }
                _ => return fail("quantified body must be an arrow"),
            },
            _ => return fail("shape must be forall a. (A -> B) <= A -> forall a. B"),
        },
        SubRule::ExUni => match r {
            Type::Union(a, _) if same(a, l) => {}
            _ => return fail("right side must be a union over the left side"),
        },
        SubRule::ExCorrupt => match (l, r) {
            (Type::Union(a, d1), Type::Corrupt(b, d2)) if d1 == d2 && same(a, b) => {}
            _ => return fail("shape must be A + {D} <= A ^ {D}"),
        },
        SubRule::ExNoexc => match l {
            Type::Corrupt(a, d) if d.is_empty() && same(a, r) => {}
            _ => return fail("shape must be A ^ {} <= A"),
        },
        SubRule::ExCtx => match (l, r) {
            (Type::Union(a, d1), Type::Union(b, d2)) if d1 == d2 => {
                if !(same(&p[0].lhs, a) && same(&p[0].rhs, b)) {
                    return fail("premise must relate the bodies of the unions");
                }
            }
            _ => return fail("both sides must be unions over the same set"),
        },
        SubRule::ExArru => match (l, r) {
            (Type::Union(f, d1), Type::Arrow(a2, cod)) => match (&**f, &**cod) {
                (Type::Arrow(a, b), Type::Union(b2, d2))
                    if d1 == d2 && same(a, a2) && same(b, b2) => {}
                _ => return fail("shape must be (A -> B) + {D} <= A -> B + {D}"),
            },
            _ => return fail("shape must be (A -> B) + {D} <= A -> B + {D}"),
        },
        SubRule::ExFallc => match (l, r) {
            (Type::Forall(a, inner), Type::Corrupt(outer, d2)) => match &**inner {
                Type::Corrupt(body, d1) if d1 == d2 => {
                    if !same(&Type::Forall(a.clone(), body.clone()), outer) {
                        return fail("quantified bodies differ");
                    }
                }
                _ => return fail("shape must be forall a. A ^ {D} <= (forall a. A) ^ {D}"),
            },
            _ => return fail("shape must be forall a. A ^ {D} <= (forall a. A) ^ {D}"),
        },
        SubRule::ExFallu => match (l, r) {
            (Type::Forall(a, inner), Type::Union(outer, d2)) => match &**inner {
                Type::Union(body, d1) if d1 == d2 => {
                    if !same(&Type::Forall(a.clone(), body.clone()), outer) {
                        return fail("quantified bodies differ");
                    }
                }
                _ => return fail("shape must be forall a. A + {D} <= (forall a. A) + {D}"),
            },
            _ => return fail("shape must be forall a. A + {D} <= (forall a. A) + {D}"),
        },
        SubRule::ExLcor => match (l, r) {
            (Type::List(inner), Type::Corrupt(outer, d2)) => match (&**inner, &**outer) {
                (Type::Corrupt(a, d1), Type::List(b)) if d1 == d2 && same(a, b) => {}
                _ => return fail("shape must be list (A ^ {D}) <= (list A) ^ {D}"),
            },
            _ => return fail("shape must be list (A ^ {D}) <= (list A) ^ {D}"),
        },
        SubRule::ExLctx => match (l, r) {
            (Type::List(a), Type::List(b)) => {
                if !(same(&p[0].lhs, a) && same(&p[0].rhs, b)) {
                    return fail("premise must relate the element types");
                }
            }
            _ => return fail("both sides must be lists"),
        },
        SubRule::ExStable => match (l, r) {
            (Type::Corrupt(a, d1), Type::Corrupt(b, d2)) if d1 == d2 => {
                if !(same(&p[0].lhs, a) && same(&p[0].rhs, b)) {
                    return fail("premise must relate the corrupted bodies");
                }
            }
            _ => return fail("both sides must be corruptions over the same set"),
        },
        SubRule::EqUu(dir) => {
            let (big, small) = orient(*dir, l, r);
            // big = (A + D) + D', small = A + (D u D')
            match (big, small) {
                (Type::Union(inner, d2), Type::Union(a2, s)) => match &**inner {
                    Type::Union(a, d1) if same(a, a2) && d1.union(d2) == *s => {}
                    _ => return fail("shape must be (A + D) + D' = A + (D u D')"),
                },
                _ => return fail("shape must be (A + D) + D' = A + (D u D')"),
            }
        }
        SubRule::EqCc(dir) => {
            let (big, small) = orient(*dir, l, r);
            match (big, small) {
                (Type::Corrupt(inner, d2), Type::Corrupt(a2, s)) => match &**inner {
                    Type::Corrupt(a, d1) if same(a, a2) && d1.union(d2) == *s => {}
                    _ => return fail("shape must be (A ^ D) ^ D' = A ^ (D u D')"),
                },
                _ => return fail("shape must be (A ^ D) ^ D' = A ^ (D u D')"),
            }
        }
        SubRule::EqUc(dir) => {
            let (cu, uc) = orient(*dir, l, r);
            // cu = (A + D) ^ D', uc = (A ^ D') + D
            match (cu, uc) {
                (Type::Corrupt(inner, dc), Type::Union(outer, du)) => match (&**inner, &**outer) {
                    (Type::Union(a, du2), Type::Corrupt(a2, dc2))
                        if du == du2 && dc == dc2 && same(a, a2) => {}
                    _ => return fail("shape must be (A + D) ^ D' = (A ^ D') + D"),
                },
                _ => return fail("shape must be (A + D) ^ D' = (A ^ D') + D"),
            }
        }
        SubRule::EqArrc(dir) => {
            let (c, a) = orient(*dir, l, r);
            match (c, a) {
                (Type::Corrupt(inner, d), Type::Arrow(ca, cb)) => match (&**inner, &**ca, &**cb) {
                    (Type::Arrow(x, y), Type::Corrupt(x2, d1), Type::Corrupt(y2, d2))
                        if d == d1 && d == d2 && same(x, x2) && same(y, y2) => {}
                    _ => return fail("shape must be (A -> B) ^ D = A ^ D -> B ^ D"),
                },
                _ => return fail("shape must be (A -> B) ^ D = A ^ D -> B ^ D"),
            }
        }
    }
    Ok(())
}

fn inner_fv_contains(t: &Type, v: &str) -> bool {
    t.free_vars().contains(v)
}

fn orient<'a>(dir: Dir, l: &'a Type, r: &'a Type) -> (&'a Type, &'a Type) {
    match dir {
        Dir::Lr => (l, r),
        Dir::Rl => (r, l),
    }
}

/// Checks every node of a derivation against its rule.
pub fn check_sub_derivation(d: &SubDerivation) -> Result<(), SubCheckError> {
    fn go(d: &SubDerivation, path: &mut Vec<usize>) -> Result<(), SubCheckError> {
        if let Err(message) = check_node(d) {
            return Err(SubCheckError {
                path: if path.is_empty() {
                    "root".to_string()
                } else {
                    path.iter()
                        .map(|i| i.to_string())
                        .collect::<Vec<_>>()
                        .join(".")
                },
                rule: d.rule.name(),
                lhs: print_type(&d.lhs),
                rhs: print_type(&d.rhs),
                message,
            });
        }
        for (i, p) in d.premises.iter().enumerate() {
            path.push(i);
            go(p, path)?;
            path.pop();
        }
        Ok(())
    }
    go(d, &mut Vec::new())
}

/// Splits a derivation line into indentation depth, rule name and body.
pub(crate) fn split_line(
    line: &str,
    lineno: usize,
) -> Result<(usize, &str, &str), DerivationParseError> {
    let trimmed = line.trim_start_matches(' ');
    let spaces = line.len() - trimmed.len();
    if !spaces.is_multiple_of(2) {
        return Err(DerivationParseError::Malformed {
            line: lineno,
            message: "indentation must be a multiple of two spaces".into(),
        });
    }
    let Some((rule, body)) = trimmed.split_once(" : ") else {
        return Err(DerivationParseError::Malformed {
            line: lineno,
            message: "expected `<rule> : <judgment>`".into(),
        });
    };
    Ok((spaces / 2, rule.trim(), body))
}

pub(crate) fn parse_sub_line(
    rule: &str,
    body: &str,
    lineno: usize,
) -> Result<SubDerivation, DerivationParseError> {
    let (a, b, w) = parse_sub_judgment(body, &format!("line {lineno}")).map_err(|source| {
        DerivationParseError::Syntax {
            line: lineno,
            source,
        }
    })?;
    if w.len() > 1 {
        return Err(DerivationParseError::Malformed {
            line: lineno,
            message: "at most one witness is allowed".into(),
        });
    }
    let witness = w.into_iter().next();
    let has_witness = witness.is_some();
    let rule = SubRule::parse(rule, witness).ok_or_else(|| DerivationParseError::Malformed {
        line: lineno,
        message: format!("unknown subtyping rule `{rule}`"),
    })?;
    if has_witness && !matches!(rule, SubRule::FInst(_)) {
        return Err(DerivationParseError::Malformed {
            line: lineno,
            message: "only f-inst takes a witness".into(),
        });
    }
    Ok(SubDerivation::new(rule, a, b, Vec::new()))
}

/// Parses the indented text format produced by [`SubDerivation::to_text`].
pub fn parse_sub_derivation(text: &str) -> Result<SubDerivation, DerivationParseError> {
    let mut nodes: Vec<(usize, SubDerivation)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() || line.trim_start().starts_with("--") {
            continue;
        }
        let (depth, rule, body) = split_line(line, lineno)?;
        nodes.push((depth, parse_sub_line(rule, body, lineno)?));
    }
    build_tree(nodes, |parent: &mut SubDerivation, child| {
        parent.premises.push(child);
        Ok(())
    })
    .map_err(|message| DerivationParseError::Malformed { line: 0, message })
}

/// Assembles `(depth, node)` pairs in preorder into a single tree.
pub(crate) fn build_tree<T>(
    nodes: Vec<(usize, T)>,
    attach: impl Fn(&mut T, T) -> Result<(), String> + Copy,
) -> Result<T, String> {
    let mut stack: Vec<(usize, T)> = Vec::new();
    let mut root = None;
    for (depth, node) in nodes {
        if root.is_some() {
            return Err("more than one root node".into());
        }
        while let Some((d, _)) = stack.last() {
            if *d >= depth {
                let (_, child) = stack.pop().expect("nonempty");
                match stack.last_mut() {
                    Some((_, parent)) => attach(parent, child)?,
                    None => root = Some(child),
                }
            } else {
                break;
            }
        }
        if root.is_some() {
            return Err("more than one root node".into());
        }
        match stack.last() {
            Some((d, _)) if depth != d + 1 => {
                return Err("child indented more than one level".into())
            }
            None if depth != 0 => return Err("root must not be indented".into()),
            _ => {}
        }
        stack.push((depth, node));
    }
    while let Some((_, child)) = stack.pop() {
        match stack.last_mut() {
            Some((_, parent)) => attach(parent, child)?,
            None => root = Some(child),
        }
    }
    root.ok_or_else(|| "empty derivation".to_string())
}

// ---- derivation builders ----

fn id(t: &Type) -> SubDerivation {
    SubDerivation::new(SubRule::StId, t.clone(), t.clone(), vec![])
}

fn is_id(d: &SubDerivation) -> bool {
    d.rule == SubRule::StId
}

fn trans(d1: SubDerivation, d2: SubDerivation) -> SubDerivation {
    if is_id(&d1) {
        return d2;
    }
    if is_id(&d2) {
        return d1;
    }
    debug_assert!(d1.rhs.alpha_eq(&d2.lhs), "{} vs {}", d1.rhs, d2.lhs);
    let (l, r) = (d1.lhs.clone(), d2.rhs.clone());
    SubDerivation::new(SubRule::StTrans, l, r, vec![d1, d2])
}

fn chain(ds: impl IntoIterator<Item = SubDerivation>) -> SubDerivation {
    let mut it = ds.into_iter();
    let first = it.next().expect("nonempty chain");
    it.fold(first, trans)
}

fn leaf(rule: SubRule, l: Type, r: Type) -> SubDerivation {
    SubDerivation::new(rule, l, r, vec![])
}

/// `A + D <= B + D` from `A <= B`.
fn ctx_union(d: SubDerivation, delta: &ExcSet) -> SubDerivation {
    if is_id(&d) {
        return id(&Type::union(d.lhs.clone(), delta.clone()));
    }
    let (l, r) = (
        Type::union(d.lhs.clone(), delta.clone()),
        Type::union(d.rhs.clone(), delta.clone()),
    );
    SubDerivation::new(SubRule::ExCtx, l, r, vec![d])
}

/// `A ^ D <= B ^ D` from `A <= B`.
fn ctx_corrupt(d: SubDerivation, delta: &ExcSet) -> SubDerivation {
    if is_id(&d) {
        return id(&Type::corrupt(d.lhs.clone(), delta.clone()));
    }
    let (l, r) = (
        Type::corrupt(d.lhs.clone(), delta.clone()),
        Type::corrupt(d.rhs.clone(), delta.clone()),
    );
    SubDerivation::new(SubRule::ExStable, l, r, vec![d])
}

fn ctx_list(d: SubDerivation) -> SubDerivation {
    if is_id(&d) {
        return id(&Type::list(d.lhs.clone()));
    }
    let (l, r) = (Type::list(d.lhs.clone()), Type::list(d.rhs.clone()));
    SubDerivation::new(SubRule::ExLctx, l, r, vec![d])
}

/// `A -> B <= A' -> B'` from `A' <= A` and `B <= B'`.
fn ctx_arrow(dom: SubDerivation, cod: SubDerivation) -> SubDerivation {
    if is_id(&dom) && is_id(&cod) {
        return id(&Type::arrow(dom.lhs.clone(), cod.lhs.clone()));
    }
    let l = Type::arrow(dom.rhs.clone(), cod.lhs.clone());
    let r = Type::arrow(dom.lhs.clone(), cod.rhs.clone());
    SubDerivation::new(SubRule::StArrow, l, r, vec![dom, cod])
}

/// `forall a. A <= forall a. B` from `A <= B`, via instantiation at `a`
/// and generalization.
fn ctx_forall(a: &str, d: SubDerivation) -> SubDerivation {
    if is_id(&d) {
        return id(&Type::forall(a, d.lhs.clone()));
    }
    let fa = Type::forall(a, d.lhs.clone());
    let inst = leaf(SubRule::FInst(Type::var(a)), fa.clone(), d.lhs.clone());
    let prem = trans(inst, d.clone());
    SubDerivation::new(SubRule::FGen, fa, Type::forall(a, d.rhs), vec![prem])
}

/// `A <= A + D`.
fn uni(a: &Type, d: &ExcSet) -> SubDerivation {
    leaf(SubRule::ExUni, a.clone(), Type::union(a.clone(), d.clone()))
}

/// `A + D <= A ^ D`.
fn corrupt_leaf(a: &Type, d: &ExcSet) -> SubDerivation {
    leaf(
        SubRule::ExCorrupt,
        Type::union(a.clone(), d.clone()),
        Type::corrupt(a.clone(), d.clone()),
    )
}

/// `(A ^ D) ^ D2 <= A ^ (D u D2)`.
fn cc_lr(a: &Type, d: &ExcSet, d2: &ExcSet) -> SubDerivation {
    leaf(
        SubRule::EqCc(Dir::Lr),
        Type::corrupt(Type::corrupt(a.clone(), d.clone()), d2.clone()),
        Type::corrupt(a.clone(), d.union(d2)),
    )
}

fn cc_rl(a: &Type, d: &ExcSet, d2: &ExcSet) -> SubDerivation {
    leaf(
        SubRule::EqCc(Dir::Rl),
        Type::corrupt(a.clone(), d.union(d2)),
        Type::corrupt(Type::corrupt(a.clone(), d.clone()), d2.clone()),
    )
}

/// `(A + D) + D2 <= A + (D u D2)`.
fn uu_lr(a: &Type, d: &ExcSet, d2: &ExcSet) -> SubDerivation {
    leaf(
        SubRule::EqUu(Dir::Lr),
        Type::union(Type::union(a.clone(), d.clone()), d2.clone()),
        Type::union(a.clone(), d.union(d2)),
    )
}

fn uu_rl(a: &Type, d: &ExcSet, d2: &ExcSet) -> SubDerivation {
    leaf(
        SubRule::EqUu(Dir::Rl),
        Type::union(a.clone(), d.union(d2)),
        Type::union(Type::union(a.clone(), d.clone()), d2.clone()),
    )
}

/// Result of canonicalization: the canonical type and derivations of
/// `input <= ty` and `ty <= input`.
#[derive(Debug, Clone)]
pub struct Canonical {
    pub ty: Type,
    pub fwd: SubDerivation,
    pub bwd: SubDerivation,
}

impl Canonical {
    fn same(t: &Type) -> Canonical {
        Canonical {
            ty: t.clone(),
            fwd: id(t),
            bwd: id(t),
        }
    }

    /// Composes `self` (A = B) with `next` (B = C).
    fn then(self, next: Canonical) -> Canonical {
        Canonical {
            ty: next.ty,
            fwd: trans(self.fwd, next.fwd),
            bwd: trans(next.bwd, self.bwd),
        }
    }
}

/// Rewrites a type to canonical form together with both derivations.
pub fn canonicalize(a: &Type) -> Canonical {
    match a {
        Type::Nat | Type::Var(_) => Canonical::same(a),
        Type::List(x) => {
            let c = canonicalize(x);
            Canonical {
                ty: Type::list(c.ty),
                fwd: ctx_list(c.fwd),
                bwd: ctx_list(c.bwd),
            }
        }
        Type::Arrow(x, y) => {
            let (cx, cy) = (canonicalize(x), canonicalize(y));
            Canonical {
                ty: Type::arrow(cx.ty, cy.ty),
                fwd: ctx_arrow(cx.bwd.clone(), cy.fwd.clone()),
                bwd: ctx_arrow(cx.fwd, cy.bwd),
            }
        }
        Type::Forall(v, x) => {
            let c = canonicalize(x);
            Canonical {
                ty: Type::forall(v, c.ty),
                fwd: ctx_forall(v, c.fwd),
                bwd: ctx_forall(v, c.bwd),
            }
        }
        Type::Union(x, d) => {
            let c = canonicalize(x);
            let inner = Canonical {
                ty: Type::union(c.ty.clone(), d.clone()),
                fwd: ctx_union(c.fwd, d),
                bwd: ctx_union(c.bwd, d),
            };
            let outer = union_norm(d, &c.ty);
            inner.then(outer)
        }
        Type::Corrupt(x, d) => {
            let c = canonicalize(x);
            let inner = Canonical {
                ty: Type::corrupt(c.ty.clone(), d.clone()),
                fwd: ctx_corrupt(c.fwd, d),
                bwd: ctx_corrupt(c.bwd, d),
            };
            let outer = corrupt_norm(d, &c.ty);
            inner.then(outer)
        }
    }
}

/// Normalizes `c + D` for canonical `c`.
fn union_norm(d: &ExcSet, c: &Type) -> Canonical {
    let whole = Type::union(c.clone(), d.clone());
    if d.is_empty() {
        let fwd = trans(
            corrupt_leaf(c, d),
            leaf(
                SubRule::ExNoexc,
                Type::corrupt(c.clone(), d.clone()),
                c.clone(),
            ),
        );
        return Canonical {
            ty: c.clone(),
            fwd,
            bwd: uni(c, d),
        };
    }
    match c {
        Type::Union(x, d2) => {
            let step = Canonical {
                ty: Type::union((**x).clone(), d2.union(d)),
                fwd: uu_lr(x, d2, d),
                bwd: uu_rl(x, d2, d),
            };
            let rest = union_flat(&d2.union(d), x);
            step.then(rest)
        }
        Type::Forall(v, body) => {
            // (forall v. B) + D  =  forall v. (B + D)
            let pushed = Type::forall(v, Type::union((**body).clone(), d.clone()));
            let inst = leaf(SubRule::FInst(Type::var(v)), c.clone(), (**body).clone());
            let fwd = SubDerivation::new(
                SubRule::FGen,
                whole.clone(),
                pushed.clone(),
                vec![ctx_union(inst, d)],
            );
            let bwd = leaf(SubRule::ExFallu, pushed.clone(), whole.clone());
            let step = Canonical {
                ty: pushed,
                fwd,
                bwd,
            };
            let inner = union_norm(d, body);
            let under = Canonical {
                ty: Type::forall(v, inner.ty.clone()),
                fwd: ctx_forall(v, inner.fwd),
                bwd: ctx_forall(v, inner.bwd),
            };
            step.then(under)
        }
        _ => union_flat(d, c),
    }
}

/// `A + D <= A` when every name of `D` is already in the corruption of `A`.
fn absorb(d: &ExcSet, x: &Type) -> SubDerivation {
    let Type::Corrupt(k, e) = x else {
        unreachable!("absorb needs a corruption")
    };
    debug_assert!(d.is_subset(e));
    trans(corrupt_leaf(x, d), cc_lr(k, e, d))
}

/// Normalizes `x + D` where `x` is canonical and not itself a union.
fn union_flat(d: &ExcSet, x: &Type) -> Canonical {
    let whole = Type::union(x.clone(), d.clone());
    let Type::Corrupt(_, e) = x else {
        return Canonical::same(&whole);
    };
    let p = d.intersection(e);
    if p.is_empty() {
        return Canonical::same(&whole);
    }
    let rest = d.difference(e);
    if rest.is_empty() {
        return Canonical {
            ty: x.clone(),
            fwd: absorb(d, x),
            bwd: uni(x, d),
        };
    }
    let fwd = trans(uu_rl(x, &p, &rest), ctx_union(absorb(&p, x), &rest));
    let bwd = trans(ctx_union(uni(x, &p), &rest), uu_lr(x, &p, &rest));
    Canonical {
        ty: Type::union(x.clone(), rest),
        fwd,
        bwd,
    }
}

/// Normalizes `c ^ E` for canonical `c`.
fn corrupt_norm(e: &ExcSet, c: &Type) -> Canonical {
    let whole = Type::corrupt(c.clone(), e.clone());
    if e.is_empty() {
        let bwd = trans(uni(c, e), corrupt_leaf(c, e));
        return Canonical {
            ty: c.clone(),
            fwd: leaf(SubRule::ExNoexc, whole, c.clone()),
            bwd,
        };
    }
    match c {
        Type::Union(x, d) => {
            // (X + D) ^ E  =  (X ^ E) + D
            let swapped = Type::union(Type::corrupt((**x).clone(), e.clone()), d.clone());
            let step = Canonical {
                ty: swapped.clone(),
                fwd: leaf(SubRule::EqUc(Dir::Lr), whole.clone(), swapped.clone()),
                bwd: leaf(SubRule::EqUc(Dir::Rl), swapped, whole),
            };
            let inner = corrupt_norm(e, x);
            let lifted = Canonical {
                ty: Type::union(inner.ty.clone(), d.clone()),
                fwd: ctx_union(inner.fwd, d),
                bwd: ctx_union(inner.bwd, d),
            };
            let outer = union_norm(d, &inner.ty);
            step.then(lifted).then(outer)
        }
        Type::Corrupt(k, f) => Canonical {
            ty: Type::corrupt((**k).clone(), f.union(e)),
            fwd: cc_lr(k, f, e),
            bwd: cc_rl(k, f, e),
        },
        Type::Arrow(a, b) => {
            let split = Type::arrow(
                Type::corrupt((**a).clone(), e.clone()),
                Type::corrupt((**b).clone(), e.clone()),
            );
            let step = Canonical {
                ty: split.clone(),
                fwd: leaf(SubRule::EqArrc(Dir::Lr), whole.clone(), split.clone()),
                bwd: leaf(SubRule::EqArrc(Dir::Rl), split, whole),
            };
            let (ca, cb) = (corrupt_norm(e, a), corrupt_norm(e, b));
            let under = Canonical {
                ty: Type::arrow(ca.ty.clone(), cb.ty.clone()),
                fwd: ctx_arrow(ca.bwd.clone(), cb.fwd.clone()),
                bwd: ctx_arrow(ca.fwd, cb.bwd),
            };
            step.then(under)
        }
        Type::Forall(v, body) => {
            // (forall v. B) ^ E  =  forall v. (B ^ E)
            let pushed = Type::forall(v, Type::corrupt((**body).clone(), e.clone()));
            let inst = leaf(SubRule::FInst(Type::var(v)), c.clone(), (**body).clone());
            let fwd = SubDerivation::new(
                SubRule::FGen,
                whole.clone(),
                pushed.clone(),
                vec![ctx_corrupt(inst, e)],
            );
            let bwd = leaf(SubRule::ExFallc, pushed.clone(), whole);
            let step = Canonical {
                ty: pushed,
                fwd,
                bwd,
            };
            let inner = corrupt_norm(e, body);
            let under = Canonical {
                ty: Type::forall(v, inner.ty.clone()),
                fwd: ctx_forall(v, inner.fwd),
                bwd: ctx_forall(v, inner.bwd),
            };
            step.then(under)
        }
        Type::Nat | Type::Var(_) | Type::List(_) => Canonical::same(&whole),
    }
}

/// `Θ_Δ(a)` followed by canonicalization.
pub fn corrupt_type(a: &Type, delta: &ExcSet) -> Type {
    canonicalize(&Type::corrupt(a.clone(), delta.clone())).ty
}

/// True if the type is in canonical form.
pub fn is_canonical(t: &Type) -> bool {
    canonicalize(t).ty == *t
}

// ---- decision procedure ----

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubVerdict {
    Yes(SubDerivation),
    No(String),
    Unknown(String),
}

impl SubVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, SubVerdict::Yes(_))
    }

    pub fn is_no(&self) -> bool {
        matches!(self, SubVerdict::No(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            SubVerdict::Yes(_) => "Yes",
            SubVerdict::No(_) => "No",
            SubVerdict::Unknown(_) => "Unknown",
        }
    }
}

/// Decorations of a canonical type: `core ^ e + d`.
struct View<'a> {
    d: ExcSet,
    e: ExcSet,
    core: &'a Type,
}

fn view(t: &Type) -> View<'_> {
    let (d, rest) = match t {
        Type::Union(x, d) => (d.clone(), &**x),
        _ => (ExcSet::empty(), t),
    };
    match rest {
        Type::Corrupt(k, e) => View {
            d,
            e: e.clone(),
            core: k,
        },
        _ => View {
            d,
            e: ExcSet::empty(),
            core: rest,
        },
    }
}

fn decorate(d: &ExcSet, e: &ExcSet, core: &Type) -> Type {
    let inner = if e.is_empty() {
        core.clone()
    } else {
        Type::corrupt(core.clone(), e.clone())
    };
    if d.is_empty() {
        inner
    } else {
        Type::union(inner, d.clone())
    }
}

/// `K ^ e1 <= K ^ e2` for `e1 ⊆ e2` (empty sets omitted).
fn widen_corruption(k: &Type, e1: &ExcSet, e2: &ExcSet) -> SubDerivation {
    if e1 == e2 {
        return id(&decorate(&ExcSet::empty(), e1, k));
    }
    let r = e2.difference(e1);
    if e1.is_empty() {
        return trans(uni(k, &r), corrupt_leaf(k, &r));
    }
    let x = Type::corrupt(k.clone(), e1.clone());
    chain([uni(&x, &r), corrupt_leaf(&x, &r), cc_lr(k, e1, &r)])
}

/// `X + d1 <= X + d2` where `X` is `K ^ e` (or a bare core when `e` is
/// empty) and `d1 ⊆ d2 ∪ e`.
fn widen_union(x: &Type, e: &ExcSet, d1: &ExcSet, d2: &ExcSet) -> SubDerivation {
    let keep = d1.intersection(d2);
    let drop = d1.difference(d2);
    debug_assert!(drop.is_subset(e));
    let with = |s: &ExcSet| {
        if s.is_empty() {
            x.clone()
        } else {
            Type::union(x.clone(), s.clone())
        }
    };
    // x + d1  <=  x + keep
    let shrink = if drop.is_empty() {
        id(&with(d1))
    } else if keep.is_empty() {
        absorb(&drop, x)
    } else {
        trans(uu_rl(x, &drop, &keep), ctx_union(absorb(&drop, x), &keep))
    };
    // x + keep  <=  x + d2
    let extra = d2.difference(&keep);
    let grow = if extra.is_empty() {
        id(&with(d2))
    } else if keep.is_empty() {
        uni(x, &extra)
    } else {
        trans(uni(&with(&keep), &extra), uu_lr(x, &keep, &extra))
    };
    trans(shrink, grow)
}

const MAX_DEPTH: usize = 48;

fn sub(a: &Type, b: &Type, depth: usize) -> SubVerdict {
    if a.alpha_eq(b) {
        return SubVerdict::Yes(id(a));
    }
    if depth > MAX_DEPTH {
        return SubVerdict::Unknown("search depth exceeded".into());
    }
    if let Type::Forall(v, body) = b {
        let fv = a.free_vars();
        let (v2, body2) = if fv.contains(v) {
            let mut avoid = fv.clone();
            body.all_vars(&mut avoid);
            let v2 = fresh_name(v, &avoid);
            let body2 = subst_type(body, v, &Type::Var(v2.clone()));
            (v2, body2)
        } else {
            (v.clone(), (**body).clone())
        };
        return match sub(a, &body2, depth + 1) {
            SubVerdict::Yes(d) => SubVerdict::Yes(SubDerivation::new(
                SubRule::FGen,
                a.clone(),
                Type::forall(&v2, body2),
                vec![d],
            )),
            SubVerdict::No(m) | SubVerdict::Unknown(m) => SubVerdict::Unknown(m),
        };
    }
    if let Type::Forall(..) = a {
        return instantiate_left(a, b, depth);
    }
    let (va, vb) = (view(a), view(b));
    match (va.core, vb.core) {
        (Type::Arrow(a1, b1), Type::Arrow(a2, b2)) => {
            arrow_sub(a, b, (a1, b1, &va.d), (a2, b2, &vb.d), depth)
        }
        (Type::Arrow(..), _) | (_, Type::Arrow(..)) => SubVerdict::No(format!(
            "{} and {} have different shapes",
            print_type(a),
            print_type(b)
        )),
        (Type::Forall(..), _) | (_, Type::Forall(..)) => {
            SubVerdict::Unknown("quantifier under a union".into())
        }
        (k1, k2) => {
            let (d1, e1, d2, e2) = (&va.d, &va.e, &vb.d, &vb.e);
            if !e1.is_subset(e2) {
                return SubVerdict::No(format!("corruption {} is not covered by {}", e1, e2));
            }
            if !d1.is_subset(&d2.union(e2)) {
                return SubVerdict::No(format!(
                    "exceptions {} escape {} and corruption {}",
                    d1, d2, e2
                ));
            }
            let core = match core_sub(k1, k2, e2, depth) {
                SubVerdict::Yes(d) => d,
                other => return other,
            };
            // K1^e1 + d1 <= K1^e2 + d1 <= K2^e2 + d1 <= K2^e2 + d2
            let widen = widen_corruption(k1, e1, e2);
            let widen = if d1.is_empty() {
                widen
            } else {
                ctx_union(widen, d1)
            };
            let core = if d1.is_empty() {
                core
            } else {
                ctx_union(core, d1)
            };
            let x2 = decorate(&ExcSet::empty(), e2, k2);
            let last = if d1 == d2 {
                id(&decorate(d2, e2, k2))
            } else {
                widen_union(&x2, e2, d1, d2)
            };
            SubVerdict::Yes(chain([id(a), widen, core, last]))
        }
    }
}

/// Subsets of `names` ordered by size, smallest first.
fn subsets_by_size(names: &ExcSet) -> Vec<ExcSet> {
    let v: Vec<_> = names.iter().cloned().collect();
    let mut out: Vec<ExcSet> = (0u32..(1 << v.len()))
        .map(|mask| {
            (0..v.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| v[i].clone())
                .collect()
        })
        .collect();
    out.sort_by_key(|s: &ExcSet| s.len());
    out
}

const MAX_ARROW_NAMES: usize = 6;

/// `(a1 -> b1) + d1 <= (a2 -> b2) + d2`.
///
/// Names of `d1` missing from `d2` move into the codomain by ex-arru. The
/// left arrow may then be corrupted by some `E` (`f <= f ^ E`, with the
/// corruption distributed over the arrow) before comparing componentwise.
/// Only names occurring in `b2` can usefully appear in `E`.
fn arrow_sub(
    a: &Type,
    b: &Type,
    (a1, b1, d1): (&Type, &Type, &ExcSet),
    (a2, b2, d2): (&Type, &Type, &ExcSet),
    depth: usize,
) -> SubVerdict {
    let keep = d1.intersection(d2);
    let push = d1.difference(d2);
    let names = b2.exc_names();
    if names.len() > MAX_ARROW_NAMES {
        return SubVerdict::Unknown("too many exception names to search".into());
    }
    let b1p = if push.is_empty() {
        b1.clone()
    } else {
        Type::union(b1.clone(), push.clone())
    };
    let g = Type::arrow(a1.clone(), b1p.clone());
    let mut last = SubVerdict::No(format!(
        "{} is not a subtype of {}",
        print_type(a),
        print_type(b)
    ));
    let mut inner = None;
    for e in subsets_by_size(&names) {
        let (pre, cg) = if e.is_empty() {
            (id(&g), canonicalize(&g))
        } else {
            (
                widen_corruption(&g, &ExcSet::empty(), &e),
                canonicalize(&Type::corrupt(g.clone(), e.clone())),
            )
        };
        let Type::Arrow(ca, cb) = &cg.ty else {
            unreachable!("corrupted arrow stays an arrow")
        };
        let dom = match sub(a2, ca, depth + 1) {
            SubVerdict::Yes(d) => d,
            v => {
                last = merge_failure(last, v);
                continue;
            }
        };
        let cod = match sub(cb, b2, depth + 1) {
            SubVerdict::Yes(d) => d,
            v => {
                last = merge_failure(last, v);
                continue;
            }
        };
        inner = Some(chain([pre, cg.fwd, ctx_arrow(dom, cod)]));
        break;
    }
    let Some(inner) = inner else { return last };
    let f1 = Type::arrow(a1.clone(), b1.clone());
    let mut steps = vec![id(a)];
    if !push.is_empty() {
        if !keep.is_empty() {
            steps.push(uu_rl(&f1, &push, &keep));
        }
        let arru = leaf(
            SubRule::ExArru,
            Type::union(f1.clone(), push.clone()),
            g.clone(),
        );
        steps.push(if keep.is_empty() {
            arru
        } else {
            ctx_union(arru, &keep)
        });
    }
    steps.push(if keep.is_empty() {
        inner
    } else {
        ctx_union(inner, &keep)
    });
    let target = Type::arrow(a2.clone(), b2.clone());
    let extra = d2.difference(&keep);
    if !extra.is_empty() {
        if keep.is_empty() {
            steps.push(uni(&target, &extra));
        } else {
            let kt = Type::union(target.clone(), keep.clone());
            steps.push(trans(uni(&kt, &extra), uu_lr(&target, &keep, &extra)));
        }
    }
    SubVerdict::Yes(chain(steps))
}

/// Unknown dominates No when collecting failed alternatives.
fn merge_failure(prev: SubVerdict, next: SubVerdict) -> SubVerdict {
    match (&prev, &next) {
        (SubVerdict::Unknown(_), _) => prev,
        _ => next,
    }
}

/// `K1 ^ e <= K2 ^ e` for base cores.
fn core_sub(k1: &Type, k2: &Type, e: &ExcSet, depth: usize) -> SubVerdict {
    let wrap = |t: &Type| decorate(&ExcSet::empty(), e, t);
    match (k1, k2) {
        (Type::Nat, Type::Nat) => SubVerdict::Yes(id(&wrap(k1))),
        (Type::Var(x), Type::Var(y)) if x == y => SubVerdict::Yes(id(&wrap(k1))),
        (Type::List(c1), Type::List(c2)) if e.is_empty() => match sub(c1, c2, depth + 1) {
            SubVerdict::Yes(d) => SubVerdict::Yes(ctx_list(d)),
            other => other,
        },
        (Type::List(c1), Type::List(c2)) => {
            // (list c1)^e <= (list c1^e)^e <= (list c2^e)^e <= ((list c2)^e)^e <= (list c2)^e
            let n1 = canonicalize(&Type::corrupt((**c1).clone(), e.clone()));
            let n2 = canonicalize(&Type::corrupt((**c2).clone(), e.clone()));
            let mid = match sub(&n1.ty, &n2.ty, depth + 1) {
                SubVerdict::Yes(d) => d,
                other => return other,
            };
            let c2e = Type::corrupt((**c2).clone(), e.clone());
            let up = trans(widen_corruption(c1, &ExcSet::empty(), e), n1.fwd);
            let elem = chain([up, mid, n2.bwd]);
            let step1 = ctx_corrupt(ctx_list(elem), e);
            let lcor = leaf(
                SubRule::ExLcor,
                Type::list(c2e),
                Type::corrupt(Type::list((**c2).clone()), e.clone()),
            );
            let step2 = ctx_corrupt(lcor, e);
            let step3 = cc_lr(&Type::list((**c2).clone()), e, e);
            SubVerdict::Yes(chain([step1, step2, step3]))
        }
        _ => SubVerdict::No(format!(
            "{} is not a subtype of {}",
            print_type(k1),
            print_type(k2)
        )),
    }
}

/// Candidate instantiations for the variables `metas` obtained by walking
/// `pat` and `target` in parallel.
pub(crate) fn match_candidates(
    pat: &Type,
    target: &Type,
    metas: &[String],
    out: &mut Vec<Vec<Type>>,
) {
    if let Type::Var(v) = pat {
        if let Some(i) = metas.iter().position(|m| m == v) {
            push_candidate(&mut out[i], target.clone());
            push_candidate(&mut out[i], view(target).core.clone());
            return;
        }
    }
    let (vp, vt) = (view(pat), view(target));
    match (vp.core, vt.core) {
        (Type::Var(v), _) if metas.contains(v) => {
            let i = metas.iter().position(|m| m == v).expect("meta");
            push_candidate(&mut out[i], vt.core.clone());
            let rest_d = vt.d.difference(&vp.d);
            let rest_e = vt.e.difference(&vp.e);
            push_candidate(&mut out[i], decorate(&rest_d, &rest_e, vt.core));
        }
        (Type::List(p), Type::List(t)) => match_candidates(p, t, metas, out),
        (Type::Arrow(p1, p2), Type::Arrow(t1, t2)) => {
            match_candidates(p1, t1, metas, out);
            match_candidates(p2, t2, metas, out);
        }
        (Type::Forall(_, p), Type::Forall(_, t)) => match_candidates(p, t, metas, out),
        _ => {}
    }
}

fn push_candidate(v: &mut Vec<Type>, t: Type) {
    if !v.iter().any(|x| x.alpha_eq(&t)) {
        v.push(t);
    }
}

const MAX_INSTANTIATIONS: usize = 64;

fn instantiate_left(a: &Type, b: &Type, depth: usize) -> SubVerdict {
    // rename the leading binders apart from everything in sight
    let mut avoid = BTreeSet::new();
    a.all_vars(&mut avoid);
    b.all_vars(&mut avoid);
    let mut metas = Vec::new();
    let mut body = a.clone();
    let mut renamed_a = Vec::new();
    while let Type::Forall(v, inner) = body {
        let v2 = fresh_name(&v, &avoid);
        avoid.insert(v2.clone());
        body = subst_type(&inner, &v, &Type::Var(v2.clone()));
        metas.push(v2.clone());
        renamed_a.push(v2);
    }
    let mut cands: Vec<Vec<Type>> = vec![Vec::new(); metas.len()];
    match_candidates(&body, b, &metas, &mut cands);
    let fv = body.free_vars();
    for (i, m) in metas.iter().enumerate() {
        if !fv.contains(m) || cands[i].is_empty() {
            push_candidate(&mut cands[i], Type::Nat);
        }
    }
    // the renamed quantified type, alpha-equivalent to `a`
    let a_renamed = metas
        .iter()
        .rev()
        .fold(body.clone(), |acc, m| Type::forall(m, acc));
    let mut combos: Vec<Vec<Type>> = vec![Vec::new()];
    for c in &cands {
        let mut next = Vec::new();
        for prefix in &combos {
            for t in c {
                let mut p = prefix.clone();
                p.push(t.clone());
                next.push(p);
                if next.len() >= MAX_INSTANTIATIONS {
                    break;
                }
            }
        }
        combos = next;
    }
    let mut reason = String::from("no instantiation found");
    for ws in combos {
        // peel one quantifier at a time with f-inst
        let mut steps = vec![id(a)];
        let mut cur = a_renamed.clone();
        for w in &ws {
            let Type::Forall(v, inner) = &cur else {
                unreachable!()
            };
            let next = subst_type(inner, v, w);
            steps.push(leaf(SubRule::FInst(w.clone()), cur.clone(), next.clone()));
            cur = next;
        }
        let c = canonicalize(&cur);
        match sub(&c.ty, b, depth + 1) {
            SubVerdict::Yes(d) => {
                steps.push(c.fwd);
                steps.push(d);
                return SubVerdict::Yes(chain(steps));
            }
            SubVerdict::No(m) | SubVerdict::Unknown(m) => reason = m,
        }
    }
    SubVerdict::Unknown(reason)
}

/// Three-valued subtyping check. `Yes` carries a derivation of `a <= b`;
/// `No` is returned only on the quantifier-free fragment.
pub fn decide_sub(a: &Type, b: &Type) -> SubVerdict {
    const CACHE_LIMIT: usize = 50_000;
    thread_local! {
        static CACHE: RefCell<HashMap<(Type, Type), SubVerdict>> = RefCell::new(HashMap::new());
    }
    let key = (a.clone(), b.clone());
    if let Some(v) = CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return v;
    }
    let v = decide_sub_uncached(a, b);
    CACHE.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() >= CACHE_LIMIT {
            c.clear();
        }
        c.insert(key, v.clone());
    });
    v
}

fn decide_sub_uncached(a: &Type, b: &Type) -> SubVerdict {
    let ca = canonicalize(a);
    let cb = canonicalize(b);
    match sub(&ca.ty, &cb.ty, 0) {
        SubVerdict::Yes(d) => {
            let d = chain([ca.fwd, d, cb.bwd]);
            debug_assert!(
                check_sub_derivation(&d).is_ok(),
                "{:?}",
                check_sub_derivation(&d)
            );
            SubVerdict::Yes(d)
        }
        SubVerdict::No(m) => {
            if a.has_forall() || b.has_forall() {
                SubVerdict::Unknown(m)
            } else {
                SubVerdict::No(m)
            }
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_type;

    fn ty(s: &str) -> Type {
        parse_type(s).unwrap()
    }

    fn yes(a: &str, b: &str) -> SubDerivation {
        match decide_sub(&ty(a), &ty(b)) {
            SubVerdict::Yes(d) => {
                check_sub_derivation(&d).unwrap();
                assert!(d.lhs.alpha_eq(&ty(a)) && d.rhs.alpha_eq(&ty(b)));
                d
            }
            other => panic!("{a} <= {b}: {other:?}"),
        }
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(
            canonicalize(&ty("(nat -> nat) ^ {e}")).ty,
            ty("nat ^ {e} -> nat ^ {e}")
        );
        assert_eq!(
            canonicalize(&ty("(nat ^ {b}) ^ {a}")).ty,
            ty("nat ^ {a, b}")
        );
        assert_eq!(canonicalize(&ty("(nat ^ {}) + {}")).ty, Type::Nat);
        assert_eq!(canonicalize(&ty("nat + {e} ^ {e}")).ty, ty("nat ^ {e}"));
        for s in [
            "(nat -> nat) ^ {e}",
            "(nat + {a}) ^ {b}",
            "(forall a. a -> nat) + {e}",
            "list nat ^ {e} + {} ^ {f}",
        ] {
            let c = canonicalize(&ty(s));
            check_sub_derivation(&c.fwd).unwrap();
            check_sub_derivation(&c.bwd).unwrap();
            assert!(c.fwd.lhs.alpha_eq(&ty(s)) && c.fwd.rhs.alpha_eq(&c.ty));
            assert_eq!(canonicalize(&c.ty).ty, c.ty);
        }
    }

    #[test]
    fn corrupt_type_examples() {
        assert_eq!(
            corrupt_type(&ty("nat -> nat"), &ExcSet::of(&["e"])),
            ty("nat ^ {e} -> nat ^ {e}")
        );
        assert_eq!(
            corrupt_type(&ty("nat -> nat"), &ExcSet::empty()),
            ty("nat -> nat")
        );
        assert_eq!(
            corrupt_type(&ty("nat + {a}"), &ExcSet::of(&["b"])),
            ty("nat ^ {b} + {a}")
        );
    }

    #[test]
    fn decide_examples() {
        yes("nat ^ {e} -> nat", "nat -> nat ^ {e}");
        yes("nat -> nat", "nat ^ {e} -> nat ^ {e}");
        yes("nat -> nat -> nat", "nat ^ {e} -> nat ^ {e} -> nat ^ {e}");
        assert!(decide_sub(&ty("nat ^ {e} -> nat ^ {e}"), &ty("nat -> nat")).is_no());
        assert!(decide_sub(&ty("nat -> nat"), &ty("nat ^ {e} -> nat")).is_no());
        yes("nat ^ {e} -> nat", "nat ^ {e} -> nat ^ {e}");
        yes("nat", "nat + {e}");
        yes("nat + {e}", "nat ^ {e}");
        yes("(nat -> nat) + {e}", "nat -> nat + {e}");
        yes("list (nat ^ {e})", "(list nat) ^ {e}");
        yes("(list nat) ^ {e}", "(list (nat ^ {e})) ^ {e}");
        yes("forall a. a + {e}", "nat + {e}");
        yes("forall a. a + {e}", "nat ^ {e}");
        yes("forall a. a -> a", "forall b. b -> b");
        assert!(decide_sub(&ty("nat ^ {e}"), &ty("nat")).is_no());
        assert!(decide_sub(&ty("nat + {e}"), &ty("nat")).is_no());
        assert!(decide_sub(&ty("nat -> nat + {e}"), &ty("(nat -> nat) + {e}")).is_no());
        assert!(decide_sub(&ty("nat"), &ty("list nat")).is_no());
    }

    #[test]
    fn checker_rejects_bad_nodes() {
        let bad = SubDerivation::new(
            SubRule::FGen,
            ty("a"),
            ty("forall a. a"),
            vec![id(&ty("a"))],
        );
        let err = check_sub_derivation(&bad).unwrap_err();
        assert!(err.message.contains("side condition"));
        assert_eq!(err.path, "root");
    }

    #[test]
    fn text_round_trip() {
        let d = yes("forall a. a + {e}", "nat ^ {e}");
        let text = d.to_text();
        assert!(text.contains("f-inst"));
        let back = parse_sub_derivation(&text).unwrap();
        check_sub_derivation(&back).unwrap();
        assert_eq!(back.to_text(), text);
    }
}
