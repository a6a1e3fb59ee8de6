//! Typing: checkable derivations, a bidirectional checker for annotated
//! terms, and the corruption relation.
//!
//! Derivations are about erased terms. Lambda annotations and `(M : A)`
//! only guide [`bidi_check`].

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::model;
use crate::parser::{
    looks_like_sub_judgment, parse_exc_set, parse_typing_judgment, print_context, print_term,
    print_type,
};
use crate::subtyping::{
    build_tree, canonicalize, check_sub_derivation, corrupt_type, decide_sub, match_candidates,
    parse_sub_line, split_line, DerivationParseError, SubDerivation, SubRule, SubVerdict,
};
use crate::syntax::{
    fresh_name, subst_term, subst_type, ExcName, ExcSet, Term, Type, TypingContext,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypingRule {
    Ax,
    Abs,
    App,
    Gen,
    Subs,
    Zero,
    Succ,
    Rec { delta: ExcSet, delta2: ExcSet },
    Nil,
    Cons,
    Fold { delta: ExcSet, delta2: ExcSet },
    Raise,
    Try,
}

impl TypingRule {
    pub fn name(&self) -> String {
        match self {
            TypingRule::Ax => "ax".into(),
            TypingRule::Abs => "abs".into(),
            TypingRule::App => "app".into(),
            TypingRule::Gen => "gen".into(),
            TypingRule::Subs => "subs".into(),
            TypingRule::Zero => "zero".into(),
            TypingRule::Succ => "succ".into(),
            TypingRule::Rec { delta, delta2 } => format!("rec {delta} {delta2}"),
            TypingRule::Nil => "nil".into(),
            TypingRule::Cons => "cons".into(),
            TypingRule::Fold { delta, delta2 } => format!("fold {delta} {delta2}"),
            TypingRule::Raise => "raise".into(),
            TypingRule::Try => "try".into(),
        }
    }

    fn parse(s: &str) -> Option<TypingRule> {
        let indexed = |rest: &str| -> Option<(ExcSet, ExcSet)> {
            let rest = rest.trim();
            let close = rest.find('}')?;
            let d1 = parse_exc_set(&rest[..=close]).ok()?;
            let d2 = parse_exc_set(rest[close + 1..].trim()).ok()?;
            Some((d1, d2))
        };
        if let Some(rest) = s.strip_prefix("rec ") {
            let (delta, delta2) = indexed(rest)?;
            return Some(TypingRule::Rec { delta, delta2 });
        }
        if let Some(rest) = s.strip_prefix("fold ") {
            let (delta, delta2) = indexed(rest)?;
            return Some(TypingRule::Fold { delta, delta2 });
        }
        Some(match s {
            "ax" => TypingRule::Ax,
            "abs" => TypingRule::Abs,
            "app" => TypingRule::App,
            "gen" => TypingRule::Gen,
            "subs" => TypingRule::Subs,
            "zero" => TypingRule::Zero,
            "succ" => TypingRule::Succ,
            "nil" => TypingRule::Nil,
            "cons" => TypingRule::Cons,
            "raise" => TypingRule::Raise,
            "try" => TypingRule::Try,
            _ => return None,
        })
    }
}

/// A derivation of `ctx |- term : ty`.
///
/// Constant rules may carry instantiations, read as the constant's scheme
/// followed by (f-inst) steps in binder order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypingDerivation {
    pub rule: TypingRule,
    pub ctx: TypingContext,
    pub term: Term,
    pub ty: Type,
    pub inst: Vec<Type>,
    pub premises: Vec<TypingDerivation>,
    /// Present exactly for (subs).
    pub sub: Option<SubDerivation>,
}

impl TypingDerivation {
    fn node(
        rule: TypingRule,
        ctx: &TypingContext,
        term: &Term,
        ty: Type,
        premises: Vec<TypingDerivation>,
    ) -> Self {
        TypingDerivation {
            rule,
            ctx: ctx.clone(),
            term: term.erase(),
            ty,
            inst: Vec::new(),
            premises,
            sub: None,
        }
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(|p| p.size()).sum::<usize>()
            + self.sub.as_ref().map_or(0, |s| s.size())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write_text(&mut s, 0);
        s
    }

    fn write_text(&self, out: &mut String, indent: usize) {
        out.push_str(&"  ".repeat(indent));
        out.push_str(&format!(
            "{} : {} |- {} : {}",
            self.rule.name(),
            print_context(&self.ctx),
            print_term(&self.term),
            print_type(&self.ty)
        ));
        for w in &self.inst {
            out.push_str(&format!(" @ {}", print_type(w)));
        }
        out.push('\n');
        for p in &self.premises {
            p.write_text(out, indent + 1);
        }
        if let Some(s) = &self.sub {
            s.write_text(out, indent + 1);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at node {path} ({rule}: {judgment}): {message}")]
pub struct TypingCheckError {
    pub path: String,
    pub rule: String,
    pub judgment: String,
    pub message: String,
}

// ---- schemes ----

/// `forall a. a + {D} -> (nat ^ {D} -> a + {D} -> a + {D}) -> (nat ^ {D}) + {D'} -> a + {D u D'}`
pub fn rec_scheme(delta: &ExcSet, delta2: &ExcSet) -> Type {
    let a = || Type::union(Type::var("a"), delta.clone());
    let n = || Type::corrupt(Type::Nat, delta.clone());
    Type::forall(
        "a",
        Type::arrows(
            [
                a(),
                Type::arrows([n(), a()], a()),
                Type::union(n(), delta2.clone()),
            ],
            Type::union(Type::var("a"), delta.union(delta2)),
        ),
    )
}

/// `forall a. forall b. a + {D} -> (b ^ {D} -> (list b) ^ {D} -> a + {D} -> a + {D})
///   -> ((list b) ^ {D}) + {D'} -> a + {D u D'}`
pub fn fold_scheme(delta: &ExcSet, delta2: &ExcSet) -> Type {
    let a = || Type::union(Type::var("a"), delta.clone());
    let lb = || Type::corrupt(Type::list(Type::var("b")), delta.clone());
    Type::forall(
        "a",
        Type::forall(
            "b",
            Type::arrows(
                [
                    a(),
                    Type::arrows(
                        [Type::corrupt(Type::var("b"), delta.clone()), lb(), a()],
                        a(),
                    ),
                    Type::union(lb(), delta2.clone()),
                ],
                Type::union(Type::var("a"), delta.union(delta2)),
            ),
        ),
    )
}

pub fn raise_scheme(e: &ExcName) -> Type {
    Type::forall(
        "a",
        Type::union(Type::var("a"), ExcSet::singleton(e.clone())),
    )
}

pub fn nil_scheme() -> Type {
    Type::forall("a", Type::list(Type::var("a")))
}

pub fn cons_scheme() -> Type {
    Type::forall(
        "a",
        Type::arrows(
            [Type::var("a"), Type::list(Type::var("a"))],
            Type::list(Type::var("a")),
        ),
    )
}

/// Peels quantifiers of `t` substituting the given witnesses in order.
pub fn instantiate(t: &Type, ws: &[Type]) -> Option<Type> {
    let mut cur = t.clone();
    for w in ws {
        match cur {
            Type::Forall(v, body) => cur = subst_type(&body, &v, w),
            _ => return None,
        }
    }
    Some(cur)
}

// ---- checking ----

fn fail(msg: impl Into<String>) -> Result<(), String> {
    Err(msg.into())
}

fn check_node(d: &TypingDerivation) -> Result<(), String> {
    if !d.term.is_erased() {
        return fail("derivation terms must not carry annotations");
    }
    let n = d.premises.len();
    let arity = match d.rule {
        TypingRule::Abs | TypingRule::Gen | TypingRule::Subs => 1,
        TypingRule::App | TypingRule::Try => 2,
        _ => 0,
    };
    if n != arity {
        return fail(format!("expected {arity} premise(s), found {n}"));
    }
    if d.sub.is_some() != (d.rule == TypingRule::Subs) {
        return fail("only (subs) carries a subtyping derivation");
    }
    let polymorphic = matches!(
        d.rule,
        TypingRule::Rec { .. }
            | TypingRule::Fold { .. }
            | TypingRule::Nil
            | TypingRule::Cons
            | TypingRule::Raise
    );
    if !d.inst.is_empty() && !polymorphic {
        return fail("only polymorphic constants take instantiations");
    }
    let same_ctx = |p: &TypingDerivation| p.ctx.alpha_eq(&d.ctx);
    let constant = |term_ok: bool, scheme: Type| -> Result<(), String> {
        if !term_ok {
            return fail("term does not match the rule");
        }
        let Some(t) = instantiate(&scheme, &d.inst) else {
            return fail("more instantiations than quantifiers");
        };
        if !t.alpha_eq(&d.ty) {
            return fail(format!("expected type {}", print_type(&t)));
        }
        Ok(())
    };
    match &d.rule {
        TypingRule::Ax => match &d.term {
            Term::Var(x) => match d.ctx.lookup(x) {
                Some(t) if t.alpha_eq(&d.ty) => {}
                Some(t) => return fail(format!("`{x}` has type {} in the context", print_type(t))),
                None => return fail(format!("`{x}` is not in the context")),
            },
            _ => return fail("term must be a variable"),
        },
        TypingRule::Abs => {
            let (Term::Lam(x, _, body), Type::Arrow(a, b)) = (&d.term, &d.ty) else {
                return fail("shape must be a lambda at an arrow type");
            };
            let p = &d.premises[0];
            let pb = p.ctx.bindings();
            let gb = d.ctx.bindings();
            if pb.len() != gb.len() + 1
                || !pb[..gb.len()]
                    .iter()
                    .zip(gb)
                    .all(|(u, v)| u.0 == v.0 && u.1.alpha_eq(&v.1))
            {
                return fail("premise context must extend the conclusion context by one binding");
            }
            let (y, ty) = &pb[gb.len()];
            if !ty.alpha_eq(a) {
                return fail("new binding must have the domain type");
            }
            if d.ctx.contains(y) {
                return fail(format!("`{y}` is already bound"));
            }
            if y != x && body.free_vars().contains(y) {
                return fail(format!("renaming `{x}` to `{y}` captures"));
            }
            if !p.term.alpha_eq(&subst_term(body, x, &Term::var(y))) {
                return fail("premise term must be the lambda body");
            }
            if !p.ty.alpha_eq(b) {
                return fail("premise type must be the codomain");
            }
        }
        TypingRule::App => {
            let Term::App(f, a) = &d.term else {
                return fail("term must be an application");
            };
            let (p0, p1) = (&d.premises[0], &d.premises[1]);
            if !same_ctx(p0) || !same_ctx(p1) {
                return fail("premises must share the context");
            }
            if !p0.term.alpha_eq(f) || !p1.term.alpha_eq(a) {
                return fail("premise terms must be the function and the argument");
            }
            match &p0.ty {
                Type::Arrow(dom, cod) => {
                    if !cod.alpha_eq(&d.ty) {
                        return fail("function codomain differs from the conclusion type");
                    }
                    if !dom.alpha_eq(&p1.ty) {
                        return fail("argument type differs from the function domain");
                    }
                }
                _ => return fail("function premise must have an arrow type"),
            }
        }
        TypingRule::Gen => {
            let Type::Forall(v, body) = &d.ty else {
                return fail("type must be quantified");
            };
            let p = &d.premises[0];
            if !same_ctx(p) || !p.term.alpha_eq(&d.term) || !p.ty.alpha_eq(body) {
                return fail("premise must type the same term at the quantified body");
            }
            if d.ctx.free_type_vars().contains(v) {
                return fail(format!(
                    "side condition violated: `{v}` is free in the context"
                ));
            }
        }
        TypingRule::Subs => {
            let p = &d.premises[0];
            let s = d.sub.as_ref().expect("checked above");
            if !same_ctx(p) || !p.term.alpha_eq(&d.term) {
                return fail("premise must type the same term");
            }
            if !s.lhs.alpha_eq(&p.ty) || !s.rhs.alpha_eq(&d.ty) {
                return fail(
                    "subtyping derivation must relate the premise type to the conclusion type",
                );
            }
        }
        TypingRule::Zero => {
            if d.term != Term::Zero || d.ty != Type::Nat {
                return fail("shape must be 0 : nat");
            }
        }
        TypingRule::Succ => {
            if d.term != Term::Succ || d.ty != Type::arrow(Type::Nat, Type::Nat) {
                return fail("shape must be S : nat -> nat");
            }
        }
        TypingRule::Rec { delta, delta2 } => {
            constant(d.term == Term::Rec, rec_scheme(delta, delta2))?
        }
        TypingRule::Fold { delta, delta2 } => {
            constant(d.term == Term::Fold, fold_scheme(delta, delta2))?
        }
        TypingRule::Nil => constant(d.term == Term::Nil, nil_scheme())?,
        TypingRule::Cons => constant(d.term == Term::Cons, cons_scheme())?,
        TypingRule::Raise => match &d.term {
            Term::Raise(e) => constant(true, raise_scheme(e))?,
            _ => return fail("term must be raise"),
        },
        TypingRule::Try => {
            let Term::Try(m, e, h) = &d.term else {
                return fail("term must be a try");
            };
            let (p0, p1) = (&d.premises[0], &d.premises[1]);
            if !same_ctx(p0) || !same_ctx(p1) {
                return fail("premises must share the context");
            }
            if !p0.term.alpha_eq(m) || !p1.term.alpha_eq(h) {
                return fail("premise terms must be the body and the handler");
            }
            let want = Type::union(d.ty.clone(), ExcSet::singleton(e.clone()));
            if !p0.ty.alpha_eq(&want) {
                return fail(format!("body must have type {}", print_type(&want)));
            }
            if !p1.ty.alpha_eq(&d.ty) {
                return fail("handler must have the conclusion type");
            }
        }
    }
    Ok(())
}

/// Checks every node, delegating (subs) to the subtyping checker.
pub fn check_typing_derivation(d: &TypingDerivation) -> Result<(), TypingCheckError> {
    fn path_str(path: &[usize]) -> String {
        if path.is_empty() {
            "root".into()
        } else {
            path.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(".")
        }
    }
    fn go(d: &TypingDerivation, path: &mut Vec<usize>) -> Result<(), TypingCheckError> {
        let err = |message: String| TypingCheckError {
            path: path_str(path),
            rule: d.rule.name(),
            judgment: format!(
                "{} |- {} : {}",
                print_context(&d.ctx),
                print_term(&d.term),
                print_type(&d.ty)
            ),
            message,
        };
        check_node(d).map_err(err)?;
        if let Some(s) = &d.sub {
            check_sub_derivation(s).map_err(|e| err(format!("subtyping premise: {e}")))?;
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

enum Node {
    Typing(TypingDerivation),
    Sub(SubDerivation),
}

/// Parses the indented text format of [`TypingDerivation::to_text`].
/// Children of a (subs) node are its typing premise followed by the
/// subtyping derivation.
pub fn parse_typing_derivation(text: &str) -> Result<TypingDerivation, DerivationParseError> {
    let mut nodes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() || line.trim_start().starts_with("--") {
            continue;
        }
        let (depth, rule, body) = split_line(line, lineno)?;
        let malformed = |message: String| DerivationParseError::Malformed {
            line: lineno,
            message,
        };
        let node = if looks_like_sub_judgment(body) {
            Node::Sub(parse_sub_line(rule, body, lineno)?)
        } else {
            let (ctx, term, ty, inst) = parse_typing_judgment(body, &format!("line {lineno}"))
                .map_err(|source| DerivationParseError::Syntax {
                    line: lineno,
                    source,
                })?;
            let rule = TypingRule::parse(rule)
                .ok_or_else(|| malformed(format!("unknown typing rule `{rule}`")))?;
            Node::Typing(TypingDerivation {
                rule,
                ctx,
                term,
                ty,
                inst,
                premises: Vec::new(),
                sub: None,
            })
        };
        nodes.push((depth, node));
    }
    let root = build_tree(nodes, |parent: &mut Node, child: Node| {
        match (parent, child) {
            (Node::Typing(p), Node::Typing(c)) => p.premises.push(c),
            (Node::Typing(p), Node::Sub(s)) => {
                if p.sub.is_some() {
                    return Err("a typing node has at most one subtyping derivation".into());
                }
                p.sub = Some(s);
            }
            (Node::Sub(p), Node::Sub(c)) => p.premises.push(c),
            (Node::Sub(_), Node::Typing(_)) => {
                return Err("a subtyping node cannot have typing premises".into())
            }
        }
        Ok(())
    })
    .map_err(|message| DerivationParseError::Malformed { line: 0, message })?;
    match root {
        Node::Typing(d) => Ok(d),
        Node::Sub(_) => Err(DerivationParseError::Malformed {
            line: 1,
            message: "root must be a typing judgment".into(),
        }),
    }
}

// ---- bidirectional checking ----

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeVerdict {
    Yes(TypingDerivation),
    No(String),
    Unknown(String),
}

impl TypeVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, TypeVerdict::Yes(_))
    }

    pub fn is_no(&self) -> bool {
        matches!(self, TypeVerdict::No(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            TypeVerdict::Yes(_) => "Yes",
            TypeVerdict::No(_) => "No",
            TypeVerdict::Unknown(_) => "Unknown",
        }
    }
}

#[derive(Clone)]
enum V<T> {
    Yes(T),
    No(String),
    Unknown(String),
}

impl<T> V<T> {
    fn fail<U>(self) -> V<U> {
        match self {
            V::Yes(_) => unreachable!("fail on success"),
            V::No(m) => V::No(m),
            V::Unknown(m) => V::Unknown(m),
        }
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            V::Yes(t) => t,
            other => return other.fail(),
        }
    };
}

/// Keeps the more informative failure: Unknown beats No.
fn worse<T>(prev: Option<V<T>>, next: V<T>) -> Option<V<T>> {
    match (&prev, &next) {
        (Some(V::Unknown(_)), _) => prev,
        _ => Some(next),
    }
}

const STEP_LIMIT: usize = 200_000;
const MAX_COMBOS: usize = 24;
const REFUTATION_FUEL: u64 = 10_000;

type MemoKey = (Vec<(String, Type)>, Term, Type);

#[derive(Default)]
struct Checker {
    steps: usize,
    memo: HashMap<MemoKey, V<TypingDerivation>>,
}

fn subs(d: TypingDerivation, s: SubDerivation) -> TypingDerivation {
    if s.rule == SubRule::StId {
        return d;
    }
    let mut n = TypingDerivation::node(
        TypingRule::Subs,
        &d.ctx.clone(),
        &d.term.clone(),
        s.rhs.clone(),
        vec![d],
    );
    n.sub = Some(s);
    n
}

fn subsume(d: TypingDerivation, target: &Type) -> V<TypingDerivation> {
    if d.ty.alpha_eq(target) {
        return V::Yes(d);
    }
    match decide_sub(&d.ty, target) {
        SubVerdict::Yes(s) => V::Yes(subs(d, s)),
        SubVerdict::No(m) => V::No(format!(
            "{} : {} is not a subtype of {} ({m})",
            print_term(&d.term),
            print_type(&d.ty),
            print_type(target)
        )),
        SubVerdict::Unknown(m) => V::Unknown(format!(
            "cannot decide {} <= {} for {} ({m})",
            print_type(&d.ty),
            print_type(target),
            print_term(&d.term)
        )),
    }
}

/// Whether a term's type can be found without an expected type.
fn synthesizable(m: &Term) -> bool {
    match m {
        Term::Var(_)
        | Term::Annot(..)
        | Term::Zero
        | Term::Succ
        | Term::Nil
        | Term::Cons
        | Term::Raise(_) => true,
        Term::Rec | Term::Fold => true,
        Term::App(..) => synthesizable(m.spine().0),
        Term::Lam(_, Some(_), body) => synthesizable(body),
        Term::Try(_, _, h) => synthesizable(h),
        _ => false,
    }
}

/// Names of every exception occurring in a term, its annotations included.
fn term_names(m: &Term) -> ExcSet {
    let mut out = m.exc_names();
    fn annots(m: &Term, out: &mut ExcSet) {
        match m {
            Term::Lam(_, a, b) => {
                if let Some(a) = a {
                    *out = out.union(&a.exc_names());
                }
                annots(b, out);
            }
            Term::App(a, b) | Term::Seq(a, b) | Term::Try(a, _, b) => {
                annots(a, out);
                annots(b, out);
            }
            Term::Annot(a, t) => {
                *out = out.union(&t.exc_names());
                annots(a, out);
            }
            _ => {}
        }
    }
    annots(m, &mut out);
    out
}

fn arrow_parts(t: &Type) -> Option<(&Type, &Type)> {
    match t {
        Type::Arrow(a, b) => Some((a, b)),
        _ => None,
    }
}

/// Decorations of a canonical type: `(corruption, union)`.
fn decorations(t: &Type) -> (ExcSet, ExcSet) {
    let (d, rest) = match t {
        Type::Union(x, d) => (d.clone(), &**x),
        _ => (ExcSet::empty(), t),
    };
    match rest {
        Type::Corrupt(_, e) => (e.clone(), d),
        _ => (ExcSet::empty(), d),
    }
}

fn strip_forall(t: &Type) -> &Type {
    match t {
        Type::Forall(_, b) => strip_forall(b),
        _ => t,
    }
}

impl Checker {
    fn tick(&mut self) -> bool {
        self.steps += 1;
        self.steps > STEP_LIMIT
    }

    fn check(&mut self, g: &TypingContext, m: &Term, t: &Type) -> V<TypingDerivation> {
        let key = (g.bindings().to_vec(), m.clone(), t.clone());
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let v = self.check_uncached(g, m, t);
        // budget failures are not answers
        if self.steps <= STEP_LIMIT {
            self.memo.insert(key, v.clone());
        }
        v
    }

    fn check_uncached(&mut self, g: &TypingContext, m: &Term, t: &Type) -> V<TypingDerivation> {
        if self.tick() {
            return V::Unknown("search budget exhausted".into());
        }
        if let Term::Annot(inner, a) = m {
            let d = tri!(self.check(g, inner, a));
            return subsume(d, t);
        }
        if matches!(m, Term::Daimon | Term::Seq(..)) {
            return V::No(
                "the daimon and sequencing are model-only forms with no typing rule".into(),
            );
        }
        let c = canonicalize(t);
        if let Type::Forall(v, body) = &c.ty {
            let (v2, body2) = if g.free_type_vars().contains(v) {
                let mut avoid = g.free_type_vars();
                c.ty.all_vars(&mut avoid);
                let v2 = fresh_name(v, &avoid);
                let b2 = subst_type(body, v, &Type::var(&v2));
                (v2, b2)
            } else {
                (v.clone(), (**body).clone())
            };
            let d = tri!(self.check(g, m, &body2));
            let gen =
                TypingDerivation::node(TypingRule::Gen, g, m, Type::forall(&v2, body2), vec![d]);
            return V::Yes(subs(gen, c.bwd));
        }
        match m {
            Term::Lam(x, ann, body) => match &c.ty {
                Type::Arrow(a, b) => {
                    let dom = ann.clone().unwrap_or_else(|| (**a).clone());
                    let dom_sub = if ann.is_some() {
                        match decide_sub(a, &dom) {
                            SubVerdict::Yes(s) => Some(s),
                            SubVerdict::No(msg) => {
                                return V::No(format!(
                                    "annotation {} of `{x}` does not accept the domain {} ({msg})",
                                    print_type(&dom),
                                    print_type(a)
                                ))
                            }
                            SubVerdict::Unknown(msg) => return V::Unknown(msg),
                        }
                    } else {
                        None
                    };
                    let (y, body2) = if g.contains(x) {
                        let mut avoid = g.names();
                        body.all_vars(&mut avoid);
                        let y = fresh_name(x, &avoid);
                        let b2 = subst_term(body, x, &Term::var(&y));
                        (y, b2)
                    } else {
                        (x.clone(), (**body).clone())
                    };
                    let g2 = g.extend(&y, dom.clone()).expect("fresh binder");
                    let db = tri!(self.check(&g2, &body2, b));
                    let abs = TypingDerivation::node(
                        TypingRule::Abs,
                        g,
                        m,
                        Type::arrow(dom.clone(), (**b).clone()),
                        vec![db],
                    );
                    let d = match dom_sub {
                        Some(s) => {
                            let id_b = SubDerivation::new(
                                SubRule::StId,
                                (**b).clone(),
                                (**b).clone(),
                                vec![],
                            );
                            let arr = SubDerivation::new(
                                SubRule::StArrow,
                                abs.ty.clone(),
                                c.ty.clone(),
                                vec![s, id_b],
                            );
                            let arr = if arr.lhs.alpha_eq(&arr.rhs) {
                                SubDerivation::new(SubRule::StId, arr.lhs.clone(), arr.lhs, vec![])
                            } else {
                                arr
                            };
                            subs(abs, arr)
                        }
                        None => abs,
                    };
                    V::Yes(subs(d, c.bwd))
                }
                Type::Union(inner, _) if matches!(&**inner, Type::Arrow(..)) => {
                    let d = tri!(self.check(g, m, inner));
                    subsume(d, t)
                }
                _ => V::No(format!("a lambda cannot have type {}", print_type(t))),
            },
            Term::Try(body, e, h) => {
                let want = Type::union(t.clone(), ExcSet::singleton(e.clone()));
                let db = tri!(self.check(g, body, &want));
                let dh = tri!(self.check(g, h, t));
                V::Yes(TypingDerivation::node(
                    TypingRule::Try,
                    g,
                    m,
                    t.clone(),
                    vec![db, dh],
                ))
            }
            _ => {
                let (head, args) = m.spine();
                self.spine(g, head, &args, Some(t))
            }
        }
    }

    fn synth(&mut self, g: &TypingContext, m: &Term) -> V<TypingDerivation> {
        if self.tick() {
            return V::Unknown("search budget exhausted".into());
        }
        let constant =
            |rule: TypingRule, ty: Type| V::Yes(TypingDerivation::node(rule, g, m, ty, vec![]));
        match m {
            Term::Var(x) => match g.lookup(x) {
                Some(t) => constant(TypingRule::Ax, t.clone()),
                None => V::No(format!("unbound variable `{x}`")),
            },
            Term::Annot(inner, a) => self.check(g, inner, a),
            Term::Zero => constant(TypingRule::Zero, Type::Nat),
            Term::Succ => constant(TypingRule::Succ, Type::arrow(Type::Nat, Type::Nat)),
            Term::Nil => constant(TypingRule::Nil, nil_scheme()),
            Term::Cons => constant(TypingRule::Cons, cons_scheme()),
            Term::Raise(e) => constant(TypingRule::Raise, raise_scheme(e)),
            Term::Rec => {
                let (d1, d2) = (ExcSet::empty(), ExcSet::empty());
                constant(
                    TypingRule::Rec {
                        delta: d1.clone(),
                        delta2: d2.clone(),
                    },
                    rec_scheme(&d1, &d2),
                )
            }
            Term::Fold => {
                let (d1, d2) = (ExcSet::empty(), ExcSet::empty());
                constant(
                    TypingRule::Fold {
                        delta: d1.clone(),
                        delta2: d2.clone(),
                    },
                    fold_scheme(&d1, &d2),
                )
            }
            Term::App(..) => {
                let (head, args) = m.spine();
                self.spine(g, head, &args, None)
            }
            Term::Lam(x, Some(a), body) => {
                let (y, body2) = if g.contains(x) {
                    let mut avoid = g.names();
                    body.all_vars(&mut avoid);
                    let y = fresh_name(x, &avoid);
                    let b2 = subst_term(body, x, &Term::var(&y));
                    (y, b2)
                } else {
                    (x.clone(), (**body).clone())
                };
                let g2 = g.extend(&y, a.clone()).expect("fresh binder");
                let db = tri!(self.synth(&g2, &body2));
                let ty = Type::arrow(a.clone(), db.ty.clone());
                V::Yes(TypingDerivation::node(TypingRule::Abs, g, m, ty, vec![db]))
            }
            Term::Lam(x, None, _) => {
                V::Unknown(format!("binder `{x}` needs a type annotation here"))
            }
            Term::Try(body, e, h) => {
                let dh = tri!(self.synth(g, h));
                let want = Type::union(dh.ty.clone(), ExcSet::singleton(e.clone()));
                let db = tri!(self.check(g, body, &want));
                let ty = dh.ty.clone();
                V::Yes(TypingDerivation::node(
                    TypingRule::Try,
                    g,
                    m,
                    ty,
                    vec![db, dh],
                ))
            }
            Term::Daimon | Term::Seq(..) => {
                V::No("the daimon and sequencing are model-only forms with no typing rule".into())
            }
        }
    }

    /// Types `head args...`; with an expected type the conclusion has
    /// exactly that type.
    fn spine(
        &mut self,
        g: &TypingContext,
        head: &Term,
        args: &[&Term],
        expected: Option<&Type>,
    ) -> V<TypingDerivation> {
        let arg_ds: Vec<Option<TypingDerivation>> = args
            .iter()
            .map(|a| {
                if synthesizable(a) {
                    self.synth_opt(g, a)
                } else {
                    None
                }
            })
            .collect();
        let heads = match head {
            Term::Rec | Term::Fold => self.indexed_heads(g, head, args, &arg_ds, expected),
            _ if args.is_empty() => {
                let d = tri!(self.synth(g, head));
                return match expected {
                    Some(t) => subsume(d, t),
                    None => V::Yes(d),
                };
            }
            _ => vec![tri!(self.synth(g, head))],
        };
        // corruption sets tried on the head type, smallest evidence first
        let mut upgrades: Vec<ExcSet> = vec![ExcSet::empty()];
        let mut push = |s: ExcSet| {
            if !s.is_empty() && !upgrades.contains(&s) {
                upgrades.push(s);
            }
        };
        let mut all = ExcSet::empty();
        if let Some(t) = expected {
            push(decorations(&canonicalize(t).ty).0);
            push(t.exc_names());
            all = all.union(&t.exc_names());
        }
        let synth_names = arg_ds
            .iter()
            .flatten()
            .fold(ExcSet::empty(), |acc, d| acc.union(&d.ty.exc_names()));
        push(synth_names.clone());
        all = all.union(&synth_names);
        let term_ns = args
            .iter()
            .fold(ExcSet::empty(), |acc, a| acc.union(&term_names(a)));
        push(term_ns.clone());
        all = all.union(&term_ns);
        push(all);
        let mut failure = None;
        for dh in heads {
            for e in &upgrades {
                let d = if e.is_empty() {
                    dh.clone()
                } else {
                    let target = corrupt_type(&dh.ty, e);
                    match decide_sub(&dh.ty, &target) {
                        SubVerdict::Yes(s) => subs(dh.clone(), s),
                        _ => continue,
                    }
                };
                match self.apply(g, d, args, &arg_ds, expected, 0) {
                    V::Yes(d) => return V::Yes(d),
                    other => failure = worse(failure, other),
                }
                if self.steps > STEP_LIMIT {
                    return V::Unknown("search budget exhausted".into());
                }
            }
        }
        failure.unwrap_or_else(|| V::No("no typing for the application".into()))
    }

    fn synth_opt(&mut self, g: &TypingContext, m: &Term) -> Option<TypingDerivation> {
        match self.synth(g, m) {
            V::Yes(d) => Some(d),
            _ => None,
        }
    }

    /// Head derivations for `rec`/`fold`, with the exception indices read
    /// off the scrutinee type or the expected type.
    fn indexed_heads(
        &mut self,
        g: &TypingContext,
        head: &Term,
        args: &[&Term],
        arg_ds: &[Option<TypingDerivation>],
        expected: Option<&Type>,
    ) -> Vec<TypingDerivation> {
        let mut scrut: Option<Type> = None;
        if args.len() >= 3 {
            scrut = arg_ds[2]
                .as_ref()
                .map(|d| canonicalize(strip_forall(&canonicalize(&d.ty).ty)).ty);
        } else if let Some(t) = expected {
            let mut cur = canonicalize(t).ty;
            for _ in 0..(2 - args.len()) {
                cur = match arrow_parts(&cur) {
                    Some((_, b)) => b.clone(),
                    None => break,
                };
            }
            scrut = arrow_parts(&cur).map(|(a, _)| a.clone());
        }
        let mut options = Vec::new();
        if let Some(s) = scrut {
            let (e, d) = decorations(&s);
            options.push((e.clone(), d.difference(&e)));
        }
        options.push((ExcSet::empty(), ExcSet::empty()));
        options.dedup();
        options
            .into_iter()
            .map(|(delta, delta2)| {
                let (rule, ty) = if *head == Term::Rec {
                    let ty = rec_scheme(&delta, &delta2);
                    (TypingRule::Rec { delta, delta2 }, ty)
                } else {
                    let ty = fold_scheme(&delta, &delta2);
                    (TypingRule::Fold { delta, delta2 }, ty)
                };
                TypingDerivation::node(rule, g, head, ty, vec![])
            })
            .collect()
    }

    fn apply(
        &mut self,
        g: &TypingContext,
        d: TypingDerivation,
        args: &[&Term],
        arg_ds: &[Option<TypingDerivation>],
        expected: Option<&Type>,
        depth: usize,
    ) -> V<TypingDerivation> {
        if self.tick() {
            return V::Unknown("search budget exhausted".into());
        }
        if depth > 8 {
            return V::Unknown("instantiation depth exceeded".into());
        }
        if args.is_empty() {
            return match expected {
                Some(t) => subsume(d, t),
                None => V::Yes(d),
            };
        }
        let c = canonicalize(&d.ty);
        let d = subs(d, c.fwd);
        match &c.ty {
            Type::Forall(..) => {
                let combos = self.instantiations(&c.ty, args, arg_ds, expected);
                let mut failure = None;
                for ws in combos {
                    let mut cur = c.ty.clone();
                    let mut steps = Vec::new();
                    for w in &ws {
                        let Type::Forall(v, body) = &cur else {
                            unreachable!()
                        };
                        let next = subst_type(body, v, w);
                        steps.push(SubDerivation::new(
                            SubRule::FInst(w.clone()),
                            cur.clone(),
                            next.clone(),
                            vec![],
                        ));
                        cur = next;
                    }
                    let s = steps
                        .into_iter()
                        .reduce(|a, b| {
                            let (l, r) = (a.lhs.clone(), b.rhs.clone());
                            SubDerivation::new(SubRule::StTrans, l, r, vec![a, b])
                        })
                        .expect("at least one quantifier");
                    match self.apply(g, subs(d.clone(), s), args, arg_ds, expected, depth + 1) {
                        V::Yes(d) => return V::Yes(d),
                        other => failure = worse(failure, other),
                    }
                }
                failure.unwrap_or_else(|| V::Unknown("no instantiation found".into()))
            }
            Type::Arrow(a, b) => {
                let da = tri!(self.check_arg(g, args[0], a, arg_ds[0].as_ref()));
                let term = Term::app(d.term.clone(), args[0].erase());
                let app =
                    TypingDerivation::node(TypingRule::App, g, &term, (**b).clone(), vec![d, da]);
                self.apply(g, app, &args[1..], &arg_ds[1..], expected, depth)
            }
            Type::Union(inner, delta) if matches!(&**inner, Type::Arrow(..)) => {
                let (a, b) = arrow_parts(inner).expect("arrow");
                let target = Type::arrow(a.clone(), Type::union(b.clone(), delta.clone()));
                let d = tri!(subsume(d, &target));
                self.apply(g, d, args, arg_ds, expected, depth)
            }
            other => V::No(format!(
                "{} : {} is applied but is not a function",
                print_term(&d.term),
                print_type(other)
            )),
        }
    }

    fn check_arg(
        &mut self,
        g: &TypingContext,
        arg: &Term,
        dom: &Type,
        synthesized: Option<&TypingDerivation>,
    ) -> V<TypingDerivation> {
        if let Some(ds) = synthesized {
            match subsume(ds.clone(), dom) {
                V::Yes(d) => return V::Yes(d),
                other if matches!(arg, Term::Var(_)) => return other,
                _ => {}
            }
        }
        self.check(g, arg, dom)
    }

    /// Candidate witnesses for the leading quantifiers of `t`, obtained by
    /// matching the argument types and the expected result.
    fn instantiations(
        &mut self,
        t: &Type,
        args: &[&Term],
        arg_ds: &[Option<TypingDerivation>],
        expected: Option<&Type>,
    ) -> Vec<Vec<Type>> {
        let mut avoid = BTreeSet::new();
        t.all_vars(&mut avoid);
        for d in arg_ds.iter().flatten() {
            d.ty.all_vars(&mut avoid);
        }
        if let Some(e) = expected {
            e.all_vars(&mut avoid);
        }
        let mut metas = Vec::new();
        let mut body = t.clone();
        while let Type::Forall(v, inner) = body {
            let v2 = fresh_name(&v, &avoid);
            avoid.insert(v2.clone());
            body = subst_type(&inner, &v, &Type::var(&v2));
            metas.push(v2);
        }
        let mut cands: Vec<Vec<Type>> = vec![Vec::new(); metas.len()];
        let mut cur = canonicalize(&body).ty;
        let mut i = 0;
        while i < args.len() {
            match &cur {
                Type::Arrow(a, b) => {
                    if let Some(d) = &arg_ds[i] {
                        let s = canonicalize(&d.ty).ty;
                        match_candidates(a, strip_forall(&s), &metas, &mut cands);
                    }
                    cur = (**b).clone();
                    i += 1;
                }
                Type::Union(inner, _) if matches!(&**inner, Type::Arrow(..)) => {
                    cur = (**inner).clone();
                }
                _ => break,
            }
        }
        if let Some(e) = expected {
            let ce = canonicalize(e).ty;
            if i == args.len() {
                match_candidates(&cur, &ce, &metas, &mut cands);
            } else {
                // the result is a variable applied to the remaining arguments;
                // arguments without a synthesized type are guessed at the
                // expected type, then at nat
                let core = match &cur {
                    Type::Union(x, _) => &**x,
                    other => other,
                };
                let core = match core {
                    Type::Corrupt(x, _) => &**x,
                    other => other,
                };
                if let Type::Var(v) = core {
                    if let Some(k) = metas.iter().position(|m| m == v) {
                        for guess in [&ce, &Type::Nat] {
                            let rest: Vec<Type> = arg_ds[i..]
                                .iter()
                                .map(|d| {
                                    d.as_ref()
                                        .map(|d| d.ty.clone())
                                        .unwrap_or_else(|| guess.clone())
                                })
                                .collect();
                            let t1 = Type::arrows(rest, ce.clone());
                            if !cands[k].iter().any(|c| c.alpha_eq(&t1)) {
                                cands[k].push(t1);
                            }
                        }
                    }
                }
            }
        }
        let fv = body.free_vars();
        for (k, m) in metas.iter().enumerate() {
            if cands[k].is_empty() || !fv.contains(m) {
                cands[k].push(Type::Nat);
            }
        }
        let mut combos: Vec<Vec<Type>> = vec![Vec::new()];
        for c in &cands {
            let mut next = Vec::new();
            'outer: for prefix in &combos {
                for t in c {
                    let mut p = prefix.clone();
                    p.push(t.clone());
                    next.push(p);
                    if next.len() >= MAX_COMBOS {
                        break 'outer;
                    }
                }
            }
            combos = next;
        }
        combos
    }
}

/// Checks `m` against `expected` under `ctx`. A `Yes` carries a derivation
/// accepted by [`check_typing_derivation`].
pub fn bidi_check(ctx: &TypingContext, m: &Term, expected: &Type) -> TypeVerdict {
    let mut c = Checker::default();
    match c.check(ctx, m, expected) {
        V::Yes(d) => {
            debug_assert!(
                check_typing_derivation(&d).is_ok(),
                "{:?}",
                check_typing_derivation(&d)
            );
            TypeVerdict::Yes(d)
        }
        V::No(msg) => TypeVerdict::No(msg),
        V::Unknown(msg) => match semantic_refutation(m, expected) {
            Some(why) => TypeVerdict::No(why),
            None => TypeVerdict::Unknown(msg),
        },
    }
}

/// A closed term that both model oracles place outside the interpretation
/// of a ground type has no typing at that type, by soundness of the model.
fn semantic_refutation(m: &Term, expected: &Type) -> Option<String> {
    let m = m.erase();
    if !m.is_closed() || m.mentions_model_forms() {
        return None;
    }
    let mb = model::member(&m, expected, REFUTATION_FUEL, 1)?;
    (mb.orthogonality == model::Oracle::False && mb.syntactic == model::Oracle::False)
        .then(|| format!("{m} is not in the interpretation of {expected}"))
}

/// Synthesizes a type for `m`, if the checker can find one without help.
pub fn synthesize(ctx: &TypingContext, m: &Term) -> Option<TypingDerivation> {
    let mut c = Checker::default();
    c.synth_opt(ctx, m)
}

// ---- corruption relation ----

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorruptionRule {
    Id,
    Rai(ExcName),
    Lam,
    App,
    Try,
}

impl CorruptionRule {
    pub fn name(&self) -> &'static str {
        match self {
            CorruptionRule::Id => "c-id",
            CorruptionRule::Rai(_) => "c-rai",
            CorruptionRule::Lam => "c-lam",
            CorruptionRule::App => "c-app",
            CorruptionRule::Try => "c-try",
        }
    }
}

/// A derivation of `left ⊑_Δ right` over erased terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorruptionWitness {
    pub rule: CorruptionRule,
    pub delta: ExcSet,
    pub left: Term,
    pub right: Term,
    pub premises: Vec<CorruptionWitness>,
}

impl CorruptionWitness {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write(&mut s, 0);
        s
    }

    fn write(&self, out: &mut String, indent: usize) {
        out.push_str(&format!(
            "{}{} {} : {} ~> {}\n",
            "  ".repeat(indent),
            self.rule.name(),
            self.delta,
            print_term(&self.left),
            print_term(&self.right)
        ));
        for p in &self.premises {
            p.write(out, indent + 1);
        }
    }

    /// Rechecks every node of the witness.
    pub fn check(&self) -> bool {
        let p = &self.premises;
        let ok = match (&self.rule, &self.left, &self.right) {
            (CorruptionRule::Id, l, r) => p.is_empty() && l.alpha_eq(r),
            (CorruptionRule::Rai(e), _, Term::Raise(e2)) => {
                p.is_empty() && e == e2 && self.delta.contains(e)
            }
            (CorruptionRule::Lam, Term::Lam(x, _, b), Term::Lam(y, _, c)) => {
                p.len() == 1 && {
                    let z = fresh_for(&[b, c]);
                    p[0].left.alpha_eq(&subst_term(b, x, &Term::var(&z)))
                        && p[0].right.alpha_eq(&subst_term(c, y, &Term::var(&z)))
                }
            }
            (CorruptionRule::App, Term::App(a, b), Term::App(c, d)) => {
                p.len() == 2
                    && p[0].left.alpha_eq(a)
                    && p[0].right.alpha_eq(c)
                    && p[1].left.alpha_eq(b)
                    && p[1].right.alpha_eq(d)
            }
            (CorruptionRule::Try, Term::Try(a, e, b), Term::Try(c, e2, d)) => {
                e == e2
                    && p.len() == 2
                    && p[0].left.alpha_eq(a)
                    && p[0].right.alpha_eq(c)
                    && p[1].left.alpha_eq(b)
                    && p[1].right.alpha_eq(d)
            }
            _ => false,
        };
        ok && p.iter().all(|q| q.delta == self.delta && q.check())
    }
}

fn fresh_for(ts: &[&Term]) -> String {
    let mut avoid = BTreeSet::new();
    for t in ts {
        t.all_vars(&mut avoid);
    }
    fresh_name("z", &avoid)
}

/// Decides `m ⊑_Δ n`, trying (c-rai) before the structural rules.
pub fn is_corruption(m: &Term, n: &Term, delta: &ExcSet) -> Option<CorruptionWitness> {
    fn go(m: &Term, n: &Term, delta: &ExcSet) -> Option<CorruptionWitness> {
        let w = |rule, premises| CorruptionWitness {
            rule,
            delta: delta.clone(),
            left: m.clone(),
            right: n.clone(),
            premises,
        };
        if let Term::Raise(e) = n {
            if delta.contains(e) {
                return Some(w(CorruptionRule::Rai(e.clone()), vec![]));
            }
        }
        if m.alpha_eq(n) {
            return Some(w(CorruptionRule::Id, vec![]));
        }
        match (m, n) {
            (Term::Lam(x, _, b), Term::Lam(y, _, c)) => {
                let z = fresh_for(&[b, c]);
                let p = go(
                    &subst_term(b, x, &Term::var(&z)),
                    &subst_term(c, y, &Term::var(&z)),
                    delta,
                )?;
                Some(w(CorruptionRule::Lam, vec![p]))
            }
            (Term::App(a, b), Term::App(c, d)) => {
                let p0 = go(a, c, delta)?;
                let p1 = go(b, d, delta)?;
                Some(w(CorruptionRule::App, vec![p0, p1]))
            }
            (Term::Try(a, e, b), Term::Try(c, e2, d)) if e == e2 => {
                let p0 = go(a, c, delta)?;
                let p1 = go(b, d, delta)?;
                Some(w(CorruptionRule::Try, vec![p0, p1]))
            }
            _ => None,
        }
    }
    go(&m.erase(), &n.erase(), delta)
}

/// Replaces every annotation `A` in `m` by `A ^ Δ` in canonical form.
pub fn corrupt_annotations(m: &Term, delta: &ExcSet) -> Term {
    match m {
        Term::Lam(x, a, b) => Term::Lam(
            x.clone(),
            a.as_ref().map(|a| corrupt_type(a, delta)),
            Box::new(corrupt_annotations(b, delta)),
        ),
        Term::App(a, b) => Term::app(corrupt_annotations(a, delta), corrupt_annotations(b, delta)),
        Term::Seq(a, b) => Term::seq(corrupt_annotations(a, delta), corrupt_annotations(b, delta)),
        Term::Try(a, e, b) => Term::Try(
            Box::new(corrupt_annotations(a, delta)),
            e.clone(),
            Box::new(corrupt_annotations(b, delta)),
        ),
        Term::Annot(a, t) => Term::annot(corrupt_annotations(a, delta), corrupt_type(t, delta)),
        other => other.clone(),
    }
}

/// Transfers the annotations of `m`, corrupted by `Δ`, onto its
/// corruption `n`. Requires `m ⊑_Δ n` up to annotations.
pub fn reannotate(m: &Term, n: &Term, delta: &ExcSet) -> Option<Term> {
    let n = n.erase();
    if let Term::Raise(e) = &n {
        if delta.contains(e) {
            return Some(n);
        }
    }
    if m.erase().alpha_eq(&n) {
        return Some(corrupt_annotations(m, delta));
    }
    match (m, &n) {
        (Term::Annot(a, t), _) => Some(Term::annot(
            reannotate(a, &n, delta)?,
            corrupt_type(t, delta),
        )),
        (Term::Lam(x, ann, b), Term::Lam(y, _, c)) => {
            let c2 = if x == y {
                (**c).clone()
            } else {
                if c.free_vars().contains(x) {
                    return None;
                }
                subst_term(c, y, &Term::var(x))
            };
            let body = reannotate(b, &c2, delta)?;
            Some(Term::Lam(
                x.clone(),
                ann.as_ref().map(|a| corrupt_type(a, delta)),
                Box::new(body),
            ))
        }
        (Term::App(a, b), Term::App(c, d)) => Some(Term::app(
            reannotate(a, c, delta)?,
            reannotate(b, d, delta)?,
        )),
        (Term::Try(a, e, b), Term::Try(c, e2, d)) if e == e2 => Some(Term::Try(
            Box::new(reannotate(a, c, delta)?),
            e.clone(),
            Box::new(reannotate(b, d, delta)?),
        )),
        _ => None,
    }
}

/// Rebuilds the term of a derivation with every binder annotated by its
/// domain and every application argument wrapped in `(N : A)` at the
/// argument type the derivation uses.
pub fn annotate_from_derivation(d: &TypingDerivation) -> Term {
    match (&d.rule, &d.term) {
        (TypingRule::Subs | TypingRule::Gen, _) => annotate_from_derivation(&d.premises[0]),
        (TypingRule::Abs, Term::Lam(..)) => {
            let p = &d.premises[0];
            let Type::Arrow(dom, _) = &d.ty else {
                return d.term.clone();
            };
            let (y, _) = p.ctx.bindings().last().expect("abs extends the context");
            Term::lam_ann(y, (**dom).clone(), annotate_from_derivation(p))
        }
        (TypingRule::App, Term::App(..)) => {
            let (f, a) = (&d.premises[0], &d.premises[1]);
            Term::app(
                annotate_from_derivation(f),
                Term::annot(annotate_from_derivation(a), a.ty.clone()),
            )
        }
        (TypingRule::Try, Term::Try(_, e, _)) => Term::Try(
            Box::new(annotate_from_derivation(&d.premises[0])),
            e.clone(),
            Box::new(annotate_from_derivation(&d.premises[1])),
        ),
        _ => d.term.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProbeError {
    #[error("the original term does not check at its type: {0}")]
    NotWellTyped(String),
    #[error("the second term is not a corruption of the first")]
    NotACorruption,
}

/// Checks one instance of the corruption theorem: if `ctx |- m : a` and
/// `m ⊑_Δ n` then `n` checks at `a ^ Δ`. The check of `n` is guided by the
/// annotations of `m`, then by those read off the derivation found for
/// `m`, each corrupted by `Δ`.
pub fn corruption_theorem_probe(
    ctx: &TypingContext,
    m: &Term,
    a: &Type,
    n: &Term,
    delta: &ExcSet,
) -> Result<bool, ProbeError> {
    let dm = match bidi_check(ctx, m, a) {
        TypeVerdict::Yes(d) => d,
        TypeVerdict::No(msg) | TypeVerdict::Unknown(msg) => {
            return Err(ProbeError::NotWellTyped(msg))
        }
    };
    is_corruption(m, n, delta).ok_or(ProbeError::NotACorruption)?;
    let target = corrupt_type(a, delta);
    let n2 = reannotate(m, n, delta).ok_or(ProbeError::NotACorruption)?;
    if bidi_check(ctx, &n2, &target).is_yes() {
        return Ok(true);
    }
    Ok(match reannotate(&annotate_from_derivation(&dm), n, delta) {
        Some(n3) => bidi_check(ctx, &n3, &target).is_yes(),
        None => false,
    })
}
