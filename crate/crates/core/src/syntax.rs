//! Abstract syntax of terms and types, exception-name sets, binding and
//! substitution.
//!
//! Binders are named. Alpha-equivalence is decided structurally by pairing
//! binders, and substitution renames a binder (by priming it) whenever it
//! would capture a free variable of the replacement.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("invalid exception name `{0}`")]
    InvalidExcName(String),
    #[error("variable `{0}` is already bound in the typing context")]
    DuplicateBinding(String),
    #[error("term has free variable `{0}`")]
    OpenTerm(String),
}

/// Name of an exception. Lowercase-led identifier over `[a-z][A-Za-z0-9_]*`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExcName(String);

impl ExcName {
    pub fn new(text: impl Into<String>) -> Result<Self, SyntaxError> {
        let text = text.into();
        let mut chars = text.chars();
        let ok = matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        if ok {
            Ok(ExcName(text))
        } else {
            Err(SyntaxError::InvalidExcName(text))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for ExcName {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExcName::new(s)
    }
}

impl fmt::Display for ExcName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Finite set of exception names, iterated in lexicographic order.
///
/// The fixed order is the one used whenever a set has to be laid out as a
/// sequence, e.g. when building a tower of `try ... with e -> #` handlers.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExcSet(BTreeSet<ExcName>);

impl ExcSet {
    pub fn empty() -> Self {
        ExcSet(BTreeSet::new())
    }

    pub fn singleton(name: ExcName) -> Self {
        ExcSet(std::iter::once(name).collect())
    }

    /// Builds a set from names, panicking on an invalid name. Meant for
    /// literals in tests and fixtures.
    pub fn of(names: &[&str]) -> Self {
        names
            .iter()
            .map(|n| ExcName::new(*n).expect("valid exception name"))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, name: &ExcName) -> bool {
        self.0.contains(name)
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &ExcName> + '_ {
        self.0.iter()
    }

    pub fn union(&self, other: &ExcSet) -> ExcSet {
        ExcSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn intersection(&self, other: &ExcSet) -> ExcSet {
        ExcSet(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &ExcSet) -> ExcSet {
        ExcSet(self.0.difference(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &ExcSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn insert(&mut self, name: ExcName) {
        self.0.insert(name);
    }
}

impl FromIterator<ExcName> for ExcSet {
    fn from_iter<I: IntoIterator<Item = ExcName>>(iter: I) -> Self {
        ExcSet(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a ExcSet {
    type Item = &'a ExcName;
    type IntoIter = std::collections::btree_set::Iter<'a, ExcName>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for ExcSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str("}")
    }
}

/// Set union of exception sets.
pub fn exc_union(a: &ExcSet, b: &ExcSet) -> ExcSet {
    a.union(b)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Var(String),
    Nat,
    List(Box<Type>),
    Arrow(Box<Type>, Box<Type>),
    Forall(String, Box<Type>),
    /// `A + {Δ}`: either an `A` or an exception of `Δ` at top level.
    Union(Box<Type>, ExcSet),
    /// `A ^ {Δ}`: an `A` where any sub-term may be an exception of `Δ`.
    Corrupt(Box<Type>, ExcSet),
}

impl Type {
    pub fn var(name: &str) -> Type {
        Type::Var(name.to_string())
    }

    pub fn list(elem: Type) -> Type {
        Type::List(Box::new(elem))
    }

    pub fn arrow(dom: Type, cod: Type) -> Type {
        Type::Arrow(Box::new(dom), Box::new(cod))
    }

    /// Right-nested arrow `a1 -> a2 -> ... -> result`.
    pub fn arrows(doms: impl IntoIterator<Item = Type>, result: Type) -> Type {
        let doms: Vec<Type> = doms.into_iter().collect();
        doms.into_iter()
            .rev()
            .fold(result, |acc, d| Type::arrow(d, acc))
    }

    pub fn forall(name: &str, body: Type) -> Type {
        Type::Forall(name.to_string(), Box::new(body))
    }

    pub fn union(body: Type, delta: ExcSet) -> Type {
        Type::Union(Box::new(body), delta)
    }

    pub fn corrupt(body: Type, delta: ExcSet) -> Type {
        Type::Corrupt(Box::new(body), delta)
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
        match self {
            Type::Var(v) => {
                if !bound.contains(&v.as_str()) {
                    out.insert(v.clone());
                }
            }
            Type::Nat => {}
            Type::List(a) | Type::Union(a, _) | Type::Corrupt(a, _) => a.collect_free(bound, out),
            Type::Arrow(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Type::Forall(v, body) => {
                bound.push(v);
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Every type-variable name occurring in the type, free or bound.
    pub fn all_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Type::Var(v) => {
                out.insert(v.clone());
            }
            Type::Nat => {}
            Type::List(a) | Type::Union(a, _) | Type::Corrupt(a, _) => a.all_vars(out),
            Type::Arrow(a, b) => {
                a.all_vars(out);
                b.all_vars(out);
            }
            Type::Forall(v, body) => {
                out.insert(v.clone());
                body.all_vars(out);
            }
        }
    }

    /// Exception names mentioned anywhere in the type.
    pub fn exc_names(&self) -> ExcSet {
        let mut out = ExcSet::empty();
        self.collect_exc(&mut out);
        out
    }

    fn collect_exc(&self, out: &mut ExcSet) {
        match self {
            Type::Var(_) | Type::Nat => {}
            Type::List(a) | Type::Forall(_, a) => a.collect_exc(out),
            Type::Arrow(a, b) => {
                a.collect_exc(out);
                b.collect_exc(out);
            }
            Type::Union(a, d) | Type::Corrupt(a, d) => {
                *out = out.union(d);
                a.collect_exc(out);
            }
        }
    }

    pub fn has_forall(&self) -> bool {
        match self {
            Type::Var(_) | Type::Nat => false,
            Type::Forall(..) => true,
            Type::List(a) | Type::Union(a, _) | Type::Corrupt(a, _) => a.has_forall(),
            Type::Arrow(a, b) => a.has_forall() || b.has_forall(),
        }
    }

    pub fn alpha_eq(&self, other: &Type) -> bool {
        fn go<'a>(a: &'a Type, b: &'a Type, env: &mut Vec<(&'a str, &'a str)>) -> bool {
            match (a, b) {
                (Type::Var(x), Type::Var(y)) => {
                    for (l, r) in env.iter().rev() {
                        if *l == x || *r == y {
                            return *l == x && *r == y;
                        }
                    }
                    x == y
                }
                (Type::Nat, Type::Nat) => true,
                (Type::List(x), Type::List(y)) => go(x, y, env),
                (Type::Arrow(a1, b1), Type::Arrow(a2, b2)) => go(a1, a2, env) && go(b1, b2, env),
                (Type::Forall(x, b1), Type::Forall(y, b2)) => {
                    env.push((x, y));
                    let r = go(b1, b2, env);
                    env.pop();
                    r
                }
                (Type::Union(x, d1), Type::Union(y, d2))
                | (Type::Corrupt(x, d1), Type::Corrupt(y, d2)) => d1 == d2 && go(x, y, env),
                _ => false,
            }
        }
        go(self, other, &mut Vec::new())
    }

    /// Renames every bound variable to a canonical name determined by its
    /// binding depth, so that alpha-equivalent types become equal.
    pub fn alpha_normal(&self) -> Type {
        fn go(t: &Type, env: &mut Vec<(String, String)>) -> Type {
            match t {
                Type::Var(v) => match env.iter().rev().find(|(o, _)| o == v) {
                    Some((_, n)) => Type::Var(n.clone()),
                    None => t.clone(),
                },
                Type::Nat => Type::Nat,
                Type::List(a) => Type::list(go(a, env)),
                Type::Arrow(a, b) => Type::arrow(go(a, env), go(b, env)),
                Type::Forall(v, body) => {
                    let n = format!("%{}", env.len());
                    env.push((v.clone(), n.clone()));
                    let b = go(body, env);
                    env.pop();
                    Type::Forall(n, Box::new(b))
                }
                Type::Union(a, d) => Type::union(go(a, env), d.clone()),
                Type::Corrupt(a, d) => Type::corrupt(go(a, env), d.clone()),
            }
        }
        go(self, &mut Vec::new())
    }
}

/// Free type variables of a type.
pub fn free_type_vars(t: &Type) -> BTreeSet<String> {
    t.free_vars()
}

/// Returns `base` primed until it avoids every name in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let mut name = format!("{base}'");
    while avoid.contains(&name) {
        name.push('\'');
    }
    name
}

/// Capture-avoiding substitution `body[replacement / var]` on types.
pub fn subst_type(body: &Type, var: &str, replacement: &Type) -> Type {
    let fv = replacement.free_vars();
    subst_type_with(body, var, replacement, &fv)
}

fn subst_type_with(body: &Type, var: &str, repl: &Type, fv_repl: &BTreeSet<String>) -> Type {
    match body {
        Type::Var(v) if v == var => repl.clone(),
        Type::Var(_) | Type::Nat => body.clone(),
        Type::List(a) => Type::list(subst_type_with(a, var, repl, fv_repl)),
        Type::Arrow(a, b) => Type::arrow(
            subst_type_with(a, var, repl, fv_repl),
            subst_type_with(b, var, repl, fv_repl),
        ),
        Type::Union(a, d) => Type::union(subst_type_with(a, var, repl, fv_repl), d.clone()),
        Type::Corrupt(a, d) => Type::corrupt(subst_type_with(a, var, repl, fv_repl), d.clone()),
        Type::Forall(v, inner) => {
            if v == var {
                return body.clone();
            }
            let inner_fv = inner.free_vars();
            if !inner_fv.contains(var) {
                return body.clone();
            }
            if fv_repl.contains(v) {
                let mut avoid = fv_repl.clone();
                avoid.extend(inner_fv);
                avoid.insert(var.to_string());
                let v2 = fresh_name(v, &avoid);
                let renamed = subst_type(inner, v, &Type::Var(v2.clone()));
                Type::Forall(v2, Box::new(subst_type_with(&renamed, var, repl, fv_repl)))
            } else {
                Type::Forall(
                    v.clone(),
                    Box::new(subst_type_with(inner, var, repl, fv_repl)),
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    /// Lambda with an optional binder annotation (checker hint only).
    Lam(String, Option<Type>, Box<Term>),
    App(Box<Term>, Box<Term>),
    Raise(ExcName),
    /// `try body with name -> handler`. The name is not a binder.
    Try(Box<Term>, ExcName, Box<Term>),
    Zero,
    Succ,
    Rec,
    Nil,
    Cons,
    Fold,
    /// The daimon `#`. Model-only; has no typing rule.
    Daimon,
    /// `left ; right`. Model-only; has no typing rule.
    Seq(Box<Term>, Box<Term>),
    /// `(term : type)`. Checker hint only.
    Annot(Box<Term>, Type),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn lam(name: &str, body: Term) -> Term {
        Term::Lam(name.to_string(), None, Box::new(body))
    }

    pub fn lam_ann(name: &str, ann: Type, body: Term) -> Term {
        Term::Lam(name.to_string(), Some(ann), Box::new(body))
    }

    pub fn app(fun: Term, arg: Term) -> Term {
        Term::App(Box::new(fun), Box::new(arg))
    }

    pub fn apps(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(head, Term::app)
    }

    pub fn raise(name: &str) -> Term {
        Term::Raise(ExcName::new(name).expect("valid exception name"))
    }

    pub fn try_with(body: Term, name: &str, handler: Term) -> Term {
        Term::Try(
            Box::new(body),
            ExcName::new(name).expect("valid exception name"),
            Box::new(handler),
        )
    }

    pub fn seq(left: Term, right: Term) -> Term {
        Term::Seq(Box::new(left), Box::new(right))
    }

    pub fn annot(term: Term, ty: Type) -> Term {
        Term::Annot(Box::new(term), ty)
    }

    /// `S (S ... 0)` with `n` successors.
    pub fn numeral(n: u64) -> Term {
        (0..n).fold(Term::Zero, |acc, _| Term::app(Term::Succ, acc))
    }

    /// `cons a0 (cons a1 (... nil))`.
    pub fn list(items: impl IntoIterator<Item = Term>) -> Term {
        let items: Vec<Term> = items.into_iter().collect();
        items
            .into_iter()
            .rev()
            .fold(Term::Nil, |acc, t| Term::apps(Term::Cons, [t, acc]))
    }

    /// Reads the term back as a numeral, if it is one.
    pub fn as_numeral(&self) -> Option<u64> {
        let mut n = 0;
        let mut cur = self;
        loop {
            match cur {
                Term::Zero => return Some(n),
                Term::App(f, a) if **f == Term::Succ => {
                    n += 1;
                    cur = a;
                }
                _ => return None,
            }
        }
    }

    /// Reads `cons a0 (... nil)` back as its elements.
    pub fn as_list(&self) -> Option<Vec<&Term>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Term::Nil => return Some(out),
                _ => {
                    let (h, args) = cur.spine();
                    if *h == Term::Cons && args.len() == 2 {
                        out.push(args[0]);
                        cur = args[1];
                    } else {
                        return None;
                    }
                }
            }
        }
    }

    /// Splits an application spine into its head and arguments.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Term::App(f, a) = cur {
            args.push(&**a);
            cur = f;
        }
        args.reverse();
        (cur, args)
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                if !bound.contains(&v.as_str()) {
                    out.insert(v.clone());
                }
            }
            Term::Lam(x, _, body) => {
                bound.push(x);
                body.collect_free(bound, out);
                bound.pop();
            }
            Term::App(a, b) | Term::Try(a, _, b) | Term::Seq(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Term::Annot(a, _) => a.collect_free(bound, out),
            Term::Raise(_)
            | Term::Zero
            | Term::Succ
            | Term::Rec
            | Term::Nil
            | Term::Cons
            | Term::Fold
            | Term::Daimon => {}
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Every variable name occurring in the term, free or bound.
    pub fn all_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Lam(x, _, body) => {
                out.insert(x.clone());
                body.all_vars(out);
            }
            Term::App(a, b) | Term::Try(a, _, b) | Term::Seq(a, b) => {
                a.all_vars(out);
                b.all_vars(out);
            }
            Term::Annot(a, _) => a.all_vars(out),
            _ => {}
        }
    }

    /// Strips lambda annotations and `Annot` nodes.
    pub fn erase(&self) -> Term {
        match self {
            Term::Lam(x, _, body) => Term::Lam(x.clone(), None, Box::new(body.erase())),
            Term::App(a, b) => Term::app(a.erase(), b.erase()),
            Term::Try(a, e, b) => Term::Try(Box::new(a.erase()), e.clone(), Box::new(b.erase())),
            Term::Seq(a, b) => Term::seq(a.erase(), b.erase()),
            Term::Annot(a, _) => a.erase(),
            other => other.clone(),
        }
    }

    pub fn is_erased(&self) -> bool {
        match self {
            Term::Lam(_, ann, body) => ann.is_none() && body.is_erased(),
            Term::App(a, b) | Term::Try(a, _, b) | Term::Seq(a, b) => {
                a.is_erased() && b.is_erased()
            }
            Term::Annot(..) => false,
            _ => true,
        }
    }

    /// True for terms built from the model-only forms `#` and `;`.
    pub fn mentions_model_forms(&self) -> bool {
        match self {
            Term::Daimon | Term::Seq(..) => true,
            Term::Lam(_, _, a) | Term::Annot(a, _) => a.mentions_model_forms(),
            Term::App(a, b) | Term::Try(a, _, b) => {
                a.mentions_model_forms() || b.mentions_model_forms()
            }
            _ => false,
        }
    }

    /// Exception names raised or caught anywhere in the term.
    pub fn exc_names(&self) -> ExcSet {
        let mut out = ExcSet::empty();
        self.collect_exc(&mut out);
        out
    }

    fn collect_exc(&self, out: &mut ExcSet) {
        match self {
            Term::Raise(e) => out.insert(e.clone()),
            Term::Try(a, e, b) => {
                out.insert(e.clone());
                a.collect_exc(out);
                b.collect_exc(out);
            }
            Term::Lam(_, _, a) | Term::Annot(a, _) => a.collect_exc(out),
            Term::App(a, b) | Term::Seq(a, b) => {
                a.collect_exc(out);
                b.collect_exc(out);
            }
            _ => {}
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Lam(_, _, a) | Term::Annot(a, _) => 1 + a.size(),
            Term::App(a, b) | Term::Try(a, _, b) | Term::Seq(a, b) => 1 + a.size() + b.size(),
            _ => 1,
        }
    }

    pub fn alpha_eq(&self, other: &Term) -> bool {
        fn go<'a>(a: &'a Term, b: &'a Term, env: &mut Vec<(&'a str, &'a str)>) -> bool {
            match (a, b) {
                (Term::Var(x), Term::Var(y)) => {
                    for (l, r) in env.iter().rev() {
                        if *l == x || *r == y {
                            return *l == x && *r == y;
                        }
                    }
                    x == y
                }
                (Term::Lam(x, t1, b1), Term::Lam(y, t2, b2)) => {
                    let anns = match (t1, t2) {
                        (None, None) => true,
                        (Some(t1), Some(t2)) => t1.alpha_eq(t2),
                        _ => false,
                    };
                    if !anns {
                        return false;
                    }
                    env.push((x, y));
                    let r = go(b1, b2, env);
                    env.pop();
                    r
                }
                (Term::App(f1, a1), Term::App(f2, a2)) | (Term::Seq(f1, a1), Term::Seq(f2, a2)) => {
                    go(f1, f2, env) && go(a1, a2, env)
                }
                (Term::Try(b1, e1, h1), Term::Try(b2, e2, h2)) => {
                    e1 == e2 && go(b1, b2, env) && go(h1, h2, env)
                }
                (Term::Annot(t1, a1), Term::Annot(t2, a2)) => a1.alpha_eq(a2) && go(t1, t2, env),
                (Term::Raise(e1), Term::Raise(e2)) => e1 == e2,
                (Term::Zero, Term::Zero)
                | (Term::Succ, Term::Succ)
                | (Term::Rec, Term::Rec)
                | (Term::Nil, Term::Nil)
                | (Term::Cons, Term::Cons)
                | (Term::Fold, Term::Fold)
                | (Term::Daimon, Term::Daimon) => true,
                _ => false,
            }
        }
        go(self, other, &mut Vec::new())
    }

    /// Canonical representative of the alpha-equivalence class: bound
    /// variables are renamed by binding depth.
    pub fn alpha_normal(&self) -> Term {
        fn go(t: &Term, env: &mut Vec<(String, String)>) -> Term {
            match t {
                Term::Var(v) => match env.iter().rev().find(|(o, _)| o == v) {
                    Some((_, n)) => Term::Var(n.clone()),
                    None => t.clone(),
                },
                Term::Lam(x, ann, body) => {
                    let n = format!("%{}", env.len());
                    env.push((x.clone(), n.clone()));
                    let b = go(body, env);
                    env.pop();
                    Term::Lam(n, ann.as_ref().map(Type::alpha_normal), Box::new(b))
                }
                Term::App(a, b) => Term::app(go(a, env), go(b, env)),
                Term::Try(a, e, b) => {
                    Term::Try(Box::new(go(a, env)), e.clone(), Box::new(go(b, env)))
                }
                Term::Seq(a, b) => Term::seq(go(a, env), go(b, env)),
                Term::Annot(a, ty) => Term::annot(go(a, env), ty.alpha_normal()),
                other => other.clone(),
            }
        }
        go(self, &mut Vec::new())
    }
}

/// Capture-avoiding substitution `body[replacement / var]`.
pub fn subst_term(body: &Term, var: &str, replacement: &Term) -> Term {
    let fv = replacement.free_vars();
    subst_term_with(body, var, replacement, &fv)
}

/// Substitution where the free variables of the replacement are already
/// known. With an empty set (closed replacement) no renaming ever happens.
pub(crate) fn subst_term_with(
    body: &Term,
    var: &str,
    repl: &Term,
    fv_repl: &BTreeSet<String>,
) -> Term {
    match body {
        Term::Var(v) if v == var => repl.clone(),
        Term::Lam(x, ann, inner) => {
            if x == var {
                return body.clone();
            }
            if fv_repl.contains(x) {
                let inner_fv = inner.free_vars();
                if !inner_fv.contains(var) {
                    return body.clone();
                }
                let mut avoid = fv_repl.clone();
                avoid.extend(inner_fv);
                avoid.insert(var.to_string());
                let x2 = fresh_name(x, &avoid);
                let renamed = subst_term(inner, x, &Term::Var(x2.clone()));
                Term::Lam(
                    x2,
                    ann.clone(),
                    Box::new(subst_term_with(&renamed, var, repl, fv_repl)),
                )
            } else {
                Term::Lam(
                    x.clone(),
                    ann.clone(),
                    Box::new(subst_term_with(inner, var, repl, fv_repl)),
                )
            }
        }
        Term::App(a, b) => Term::app(
            subst_term_with(a, var, repl, fv_repl),
            subst_term_with(b, var, repl, fv_repl),
        ),
        Term::Try(a, e, b) => Term::Try(
            Box::new(subst_term_with(a, var, repl, fv_repl)),
            e.clone(),
            Box::new(subst_term_with(b, var, repl, fv_repl)),
        ),
        Term::Seq(a, b) => Term::seq(
            subst_term_with(a, var, repl, fv_repl),
            subst_term_with(b, var, repl, fv_repl),
        ),
        Term::Annot(a, ty) => Term::annot(subst_term_with(a, var, repl, fv_repl), ty.clone()),
        _ => body.clone(),
    }
}

/// Shape test behind the regular-value grammar. Does not check closedness.
pub(crate) fn has_regular_shape(m: &Term) -> bool {
    let (head, args) = m.spine();
    let k = args.len();
    match head {
        Term::Lam(..) => k == 0,
        Term::Zero | Term::Nil => k == 0,
        Term::Succ => k <= 1,
        Term::Rec | Term::Cons | Term::Fold => k <= 2,
        _ => false,
    }
}

/// Whether a closed term is a regular value: a lambda, `0`, `S`, `S N`,
/// `nil`, or `rec`/`cons`/`fold` applied to at most two arguments.
/// Annotations are erased before the test.
pub fn is_regular_value(m: &Term) -> Result<bool, SyntaxError> {
    if let Some(v) = m.free_vars().into_iter().next() {
        return Err(SyntaxError::OpenTerm(v));
    }
    Ok(has_regular_shape(&m.erase()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Regular,
    Exception,
    Daimon,
}

/// Classifies a closed, erased term as a value (regular value, `raise e`,
/// or the daimon), or `None` when it is not a value.
pub fn value_kind(m: &Term) -> Option<ValueKind> {
    match m {
        Term::Raise(_) => Some(ValueKind::Exception),
        Term::Daimon => Some(ValueKind::Daimon),
        _ if has_regular_shape(m) => Some(ValueKind::Regular),
        _ => None,
    }
}

/// Ordered typing context with pairwise-distinct variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypingContext {
    bindings: Vec<(String, Type)>,
}

impl TypingContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn extend(&self, name: &str, ty: Type) -> Result<TypingContext, SyntaxError> {
        if self.lookup(name).is_some() {
            return Err(SyntaxError::DuplicateBinding(name.to_string()));
        }
        let mut bindings = self.bindings.clone();
        bindings.push((name.to_string(), ty));
        Ok(TypingContext { bindings })
    }

    pub fn lookup(&self, name: &str) -> Option<&Type> {
        self.bindings
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    pub fn bindings(&self) -> &[(String, Type)] {
        &self.bindings
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn names(&self) -> BTreeSet<String> {
        self.bindings.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn free_type_vars(&self) -> BTreeSet<String> {
        self.bindings
            .iter()
            .flat_map(|(_, t)| t.free_vars())
            .collect()
    }

    /// Same bindings in the same order, types compared up to alpha.
    pub fn alpha_eq(&self, other: &TypingContext) -> bool {
        self.bindings.len() == other.bindings.len()
            && self
                .bindings
                .iter()
                .zip(&other.bindings)
                .all(|((n1, t1), (n2, t2))| n1 == n2 && t1.alpha_eq(t2))
    }
}

impl FromIterator<(String, Type)> for TypingContext {
    /// Later duplicates are dropped.
    fn from_iter<I: IntoIterator<Item = (String, Type)>>(iter: I) -> Self {
        let mut ctx = TypingContext::new();
        for (n, t) in iter {
            if let Ok(next) = ctx.extend(&n, t) {
                ctx = next;
            }
        }
        ctx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> ExcName {
        ExcName::new(s).unwrap()
    }

    #[test]
    fn exc_names_validate() {
        assert!(ExcName::new("pred_err").is_ok());
        assert!(ExcName::new("div_by_0").is_ok());
        assert!(ExcName::new("Bad").is_err());
        assert!(ExcName::new("").is_err());
        assert!(ExcName::new("a-b").is_err());
    }

    #[test]
    fn exc_union_examples() {
        assert_eq!(
            exc_union(&ExcSet::of(&["a"]), &ExcSet::of(&["b"])),
            ExcSet::of(&["a", "b"])
        );
        assert_eq!(
            exc_union(&ExcSet::empty(), &ExcSet::of(&["x"])),
            ExcSet::of(&["x"])
        );
        assert_eq!(
            exc_union(&ExcSet::of(&["a", "b"]), &ExcSet::of(&["b", "c"])),
            ExcSet::of(&["a", "b", "c"])
        );
        assert_ne!(ExcSet::empty(), ExcSet::of(&["a"]));
        let order: Vec<_> = ExcSet::of(&["zeta", "alpha", "mid"])
            .iter()
            .cloned()
            .collect();
        assert_eq!(order, vec![e("alpha"), e("mid"), e("zeta")]);
    }

    #[test]
    fn subst_term_examples() {
        let x = Term::var("x");
        assert_eq!(subst_term(&x, "x", &Term::Zero), Term::Zero);

        let captured = subst_term(&Term::lam("y", Term::var("x")), "x", &Term::var("y"));
        match &captured {
            Term::Lam(y2, None, body) => {
                assert_ne!(y2, "y");
                assert_eq!(**body, Term::var("y"));
            }
            other => panic!("unexpected {other:?}"),
        }

        let shadow = Term::lam("x", Term::var("x"));
        assert_eq!(subst_term(&shadow, "x", &Term::Zero), shadow);
    }

    #[test]
    fn subst_type_examples() {
        let nat = Type::Nat;
        let id = Type::forall("a", Type::var("a"));
        assert_eq!(subst_type(&id, "a", &nat), id);
        assert_eq!(
            subst_type(&Type::arrow(Type::var("a"), Type::var("a")), "a", &nat),
            Type::arrow(Type::Nat, Type::Nat)
        );
        let t = Type::forall("b", Type::arrow(Type::var("a"), Type::var("b")));
        let out = subst_type(&t, "a", &Type::var("b"));
        match &out {
            Type::Forall(b2, body) => {
                assert_ne!(b2, "b");
                assert_eq!(**body, Type::arrow(Type::var("b"), Type::Var(b2.clone())));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn free_type_vars_examples() {
        let t = Type::forall("a", Type::arrow(Type::var("a"), Type::var("b")));
        assert_eq!(free_type_vars(&t), ["b".to_string()].into_iter().collect());
        assert!(free_type_vars(&Type::Nat).is_empty());
        let c = Type::corrupt(Type::var("a"), ExcSet::of(&["e"]));
        assert_eq!(free_type_vars(&c), ["a".to_string()].into_iter().collect());
    }

    #[test]
    fn regular_values() {
        let s_raise = Term::app(Term::Succ, Term::raise("e"));
        assert_eq!(is_regular_value(&s_raise), Ok(true));
        assert_eq!(is_regular_value(&Term::raise("e")), Ok(false));
        let rec2 = Term::apps(
            Term::Rec,
            [Term::Zero, Term::lam("x", Term::lam("y", Term::var("x")))],
        );
        assert_eq!(is_regular_value(&rec2), Ok(true));
        let rec3 = Term::app(rec2, Term::Zero);
        assert_eq!(is_regular_value(&rec3), Ok(false));
        let cons3 = Term::apps(Term::Cons, [Term::Zero, Term::Nil, Term::Zero]);
        assert_eq!(is_regular_value(&cons3), Ok(false));
        assert!(matches!(
            is_regular_value(&Term::var("x")),
            Err(SyntaxError::OpenTerm(_))
        ));
    }

    #[test]
    fn alpha_equivalence() {
        let a = Term::lam("x", Term::lam("y", Term::var("x")));
        let b = Term::lam("u", Term::lam("v", Term::var("u")));
        let c = Term::lam("u", Term::lam("v", Term::var("v")));
        assert!(a.alpha_eq(&b));
        assert!(!a.alpha_eq(&c));
        assert_eq!(a.alpha_normal(), b.alpha_normal());
        // free variables are compared by name
        assert!(!Term::lam("x", Term::var("y")).alpha_eq(&Term::lam("y", Term::var("y"))));
    }

    #[test]
    fn context_rejects_duplicates() {
        let ctx = TypingContext::new().extend("x", Type::Nat).unwrap();
        assert_eq!(ctx.lookup("x"), Some(&Type::Nat));
        assert!(ctx.extend("x", Type::Nat).is_err());
        assert!(ctx.lookup("y").is_none());
    }
}
