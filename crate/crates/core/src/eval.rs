//! Reduction: the root rules, the weak-head strategy, full one-step
//! reduction, and parallel reduction with its complete development.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::syntax::{has_regular_shape, subst_term, ExcName, Term};

pub const DEFAULT_FUEL: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("cannot evaluate an open term (free variable `{0}`)")]
    OpenTerm(String),
    #[error("cannot evaluate a term that still carries annotations; erase it first")]
    Annotated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Beta,
    RaiseApp,
    TryRaise,
    TryOther,
    TryValue,
    RecZero,
    RecSucc,
    RecRaise,
    FoldNil,
    FoldCons,
    FoldRaise,
    DaimonApp,
    DaimonTry,
    DaimonRec,
    DaimonFold,
    Seq,
}

impl Rule {
    pub fn label(self) -> &'static str {
        match self {
            Rule::Beta => "beta",
            Rule::RaiseApp => "raise-app",
            Rule::TryRaise => "try-raise",
            Rule::TryOther => "try-other",
            Rule::TryValue => "try-value",
            Rule::RecZero => "rec-zero",
            Rule::RecSucc => "rec-succ",
            Rule::RecRaise => "rec-raise",
            Rule::FoldNil => "fold-nil",
            Rule::FoldCons => "fold-cons",
            Rule::FoldRaise => "fold-raise",
            Rule::DaimonApp => "daimon-app",
            Rule::DaimonTry => "daimon-try",
            Rule::DaimonRec => "daimon-rec",
            Rule::DaimonFold => "daimon-fold",
            Rule::Seq => "seq",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathStep {
    Fun,
    Arg,
    Body,
    TryBody,
    Handler,
    SeqLeft,
    SeqRight,
}

impl PathStep {
    fn label(self) -> &'static str {
        match self {
            PathStep::Fun => "fun",
            PathStep::Arg => "arg",
            PathStep::Body => "body",
            PathStep::TryBody => "try",
            PathStep::Handler => "handler",
            PathStep::SeqLeft => "left",
            PathStep::SeqRight => "right",
        }
    }
}

/// Position of a sub-term, read from the root.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Path(pub Vec<PathStep>);

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(|s| s.label()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

impl Path {
    fn prefixed(mut self, steps: &[PathStep]) -> Path {
        let mut v = steps.to_vec();
        v.append(&mut self.0);
        Path(v)
    }
}

/// Sub-term at a path, if the path exists.
pub fn subterm_at<'a>(m: &'a Term, path: &Path) -> Option<&'a Term> {
    let mut cur = m;
    for step in &path.0 {
        cur = match (step, cur) {
            (PathStep::Fun, Term::App(f, _)) => f,
            (PathStep::Arg, Term::App(_, a)) => a,
            (PathStep::Body, Term::Lam(_, _, b)) => b,
            (PathStep::TryBody, Term::Try(b, _, _)) => b,
            (PathStep::Handler, Term::Try(_, _, h)) => h,
            (PathStep::SeqLeft, Term::Seq(l, _)) => l,
            (PathStep::SeqRight, Term::Seq(_, r)) => r,
            _ => return None,
        };
    }
    Some(cur)
}

fn replace_at(m: &Term, path: &[PathStep], new: Term) -> Term {
    let Some((step, rest)) = path.split_first() else {
        return new;
    };
    match (step, m) {
        (PathStep::Fun, Term::App(f, a)) => {
            Term::App(Box::new(replace_at(f, rest, new)), a.clone())
        }
        (PathStep::Arg, Term::App(f, a)) => {
            Term::App(f.clone(), Box::new(replace_at(a, rest, new)))
        }
        (PathStep::Body, Term::Lam(x, t, b)) => {
            Term::Lam(x.clone(), t.clone(), Box::new(replace_at(b, rest, new)))
        }
        (PathStep::TryBody, Term::Try(b, e, h)) => {
            Term::Try(Box::new(replace_at(b, rest, new)), e.clone(), h.clone())
        }
        (PathStep::Handler, Term::Try(b, e, h)) => {
            Term::Try(b.clone(), e.clone(), Box::new(replace_at(h, rest, new)))
        }
        (PathStep::SeqLeft, Term::Seq(l, r)) => {
            Term::Seq(Box::new(replace_at(l, rest, new)), r.clone())
        }
        (PathStep::SeqRight, Term::Seq(l, r)) => {
            Term::Seq(l.clone(), Box::new(replace_at(r, rest, new)))
        }
        _ => panic!("path does not match term shape"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueOutcome {
    Regular,
    Exception(ExcName),
    Daimon,
}

impl fmt::Display for ValueOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueOutcome::Regular => f.write_str("regular"),
            ValueOutcome::Exception(e) => write!(f, "exception({e})"),
            ValueOutcome::Daimon => f.write_str("daimon"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepResult {
    Reduced { next: Term, rule: Rule, path: Path },
    Stuck,
    ValueReached(ValueOutcome),
}

fn check_evaluable(m: &Term) -> Result<(), EvalError> {
    if !m.is_erased() {
        return Err(EvalError::Annotated);
    }
    if let Some(v) = m.free_vars().into_iter().next() {
        return Err(EvalError::OpenTerm(v));
    }
    Ok(())
}

fn value_outcome(m: &Term) -> Option<ValueOutcome> {
    match m {
        Term::Raise(e) => Some(ValueOutcome::Exception(e.clone())),
        Term::Daimon => Some(ValueOutcome::Daimon),
        _ if has_regular_shape(m) => Some(ValueOutcome::Regular),
        _ => None,
    }
}

/// Root contraction of `m`, assuming its scrutinee positions already hold
/// the sub-terms the rule inspects. Purely syntactic, so it also applies to
/// open terms.
fn contract(m: &Term) -> Option<(Term, Rule)> {
    match m {
        Term::App(f, n) => {
            match &**f {
                Term::Lam(x, _, body) => return Some((subst_term(body, x, n), Rule::Beta)),
                Term::Raise(e) => return Some((Term::Raise(e.clone()), Rule::RaiseApp)),
                Term::Daimon => return Some((Term::Daimon, Rule::DaimonApp)),
                _ => {}
            }
            let (head, args) = m.spine();
            if args.len() != 3 {
                return None;
            }
            let (x, y, z) = (args[0], args[1], args[2]);
            match head {
                Term::Rec => match z {
                    Term::Zero => Some((x.clone(), Rule::RecZero)),
                    Term::Raise(e) => Some((Term::Raise(e.clone()), Rule::RecRaise)),
                    Term::Daimon => Some((Term::Daimon, Rule::DaimonRec)),
                    Term::App(s, n) if **s == Term::Succ => {
                        let again = Term::apps(Term::Rec, [x.clone(), y.clone(), (**n).clone()]);
                        Some((Term::apps(y.clone(), [(**n).clone(), again]), Rule::RecSucc))
                    }
                    _ => None,
                },
                Term::Fold => match z {
                    Term::Nil => Some((x.clone(), Rule::FoldNil)),
                    Term::Raise(e) => Some((Term::Raise(e.clone()), Rule::FoldRaise)),
                    Term::Daimon => Some((Term::Daimon, Rule::DaimonFold)),
                    _ => {
                        let (h, cargs) = z.spine();
                        if *h == Term::Cons && cargs.len() == 2 {
                            let (e, l) = (cargs[0].clone(), cargs[1].clone());
                            let again = Term::apps(Term::Fold, [x.clone(), y.clone(), l.clone()]);
                            Some((Term::apps(y.clone(), [e, l, again]), Rule::FoldCons))
                        } else {
                            None
                        }
                    }
                },
                _ => None,
            }
        }
        Term::Try(body, e, handler) => match &**body {
            Term::Raise(e2) if e2 == e => Some(((**handler).clone(), Rule::TryRaise)),
            Term::Raise(e2) => Some((Term::Raise(e2.clone()), Rule::TryOther)),
            Term::Daimon => Some((Term::Daimon, Rule::DaimonTry)),
            b if has_regular_shape(b) => Some((b.clone(), Rule::TryValue)),
            _ => None,
        },
        Term::Seq(l, r) if **l == Term::Daimon => Some(((**r).clone(), Rule::Seq)),
        _ => None,
    }
}

enum Wh {
    Value(ValueOutcome),
    Redex(Path),
    Stuck,
}

/// Locates the weak-head redex: the root if it is a redex, otherwise the
/// position whose value the root rule is waiting for.
fn locate(m: &Term) -> Wh {
    if let Some(v) = value_outcome(m) {
        return Wh::Value(v);
    }
    match m {
        Term::Try(body, _, _) => match locate(body) {
            Wh::Value(_) => Wh::Redex(Path::default()),
            Wh::Redex(p) => Wh::Redex(p.prefixed(&[PathStep::TryBody])),
            Wh::Stuck => Wh::Stuck,
        },
        Term::Seq(l, _) => match locate(l) {
            Wh::Value(ValueOutcome::Daimon) => Wh::Redex(Path::default()),
            Wh::Value(_) => Wh::Stuck,
            Wh::Redex(p) => Wh::Redex(p.prefixed(&[PathStep::SeqLeft])),
            Wh::Stuck => Wh::Stuck,
        },
        Term::App(..) => {
            let (head, args) = m.spine();
            let k = args.len();
            let to_head = vec![PathStep::Fun; k];
            match head {
                Term::Lam(..) | Term::Raise(_) | Term::Daimon => {
                    Wh::Redex(Path(vec![PathStep::Fun; k - 1]))
                }
                Term::Rec | Term::Fold if k >= 3 => {
                    let mut at = vec![PathStep::Fun; k - 3];
                    if contract(subterm_at(m, &Path(at.clone())).expect("spine")).is_some() {
                        return Wh::Redex(Path(at));
                    }
                    at.push(PathStep::Arg);
                    match locate(args[2]) {
                        Wh::Redex(p) => Wh::Redex(p.prefixed(&at)),
                        _ => Wh::Stuck,
                    }
                }
                Term::Try(..) | Term::Seq(..) => match locate(head) {
                    Wh::Redex(p) => Wh::Redex(p.prefixed(&to_head)),
                    _ => Wh::Stuck,
                },
                _ => Wh::Stuck,
            }
        }
        _ => Wh::Stuck,
    }
}

fn step_unchecked(m: &Term) -> StepResult {
    match locate(m) {
        Wh::Value(v) => StepResult::ValueReached(v),
        Wh::Stuck => StepResult::Stuck,
        Wh::Redex(path) => {
            let redex = subterm_at(m, &path).expect("redex path");
            let (contractum, rule) = contract(redex).expect("located redex contracts");
            StepResult::Reduced {
                next: replace_at(m, &path.0, contractum),
                rule,
                path,
            }
        }
    }
}

/// One step of the weak-head strategy on a closed, erased term.
pub fn head_step(m: &Term) -> Result<StepResult, EvalError> {
    check_evaluable(m)?;
    Ok(step_unchecked(m))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Value(ValueOutcome),
    Stuck,
    FuelExhausted,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Value(v) => write!(f, "value {v}"),
            Outcome::Stuck => f.write_str("stuck"),
            Outcome::FuelExhausted => f.write_str("fuel exhausted"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub term: Term,
    pub rule: Rule,
    pub path: Path,
}

/// Result of running the weak-head strategy. `steps` holds the term after
/// every step when recording was requested; `result` is the last term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub start: Term,
    pub steps: Vec<TraceStep>,
    pub result: Term,
    pub fuel_used: u64,
    pub outcome: Outcome,
}

impl Trace {
    /// One line per step: `<rule> @ <path> : <term>`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for st in &self.steps {
            s.push_str(&format!("{} @ {} : {}\n", st.rule, st.path, st.term));
        }
        s
    }
}

fn run_whnf(m: &Term, fuel: u64, record: bool) -> Trace {
    let mut cur = m.clone();
    let mut steps = Vec::new();
    let mut used = 0;
    loop {
        match step_unchecked(&cur) {
            StepResult::ValueReached(v) => {
                return Trace {
                    start: m.clone(),
                    steps,
                    result: cur,
                    fuel_used: used,
                    outcome: Outcome::Value(v),
                }
            }
            StepResult::Stuck => {
                return Trace {
                    start: m.clone(),
                    steps,
                    result: cur,
                    fuel_used: used,
                    outcome: Outcome::Stuck,
                }
            }
            StepResult::Reduced { next, rule, path } => {
                if used == fuel {
                    return Trace {
                        start: m.clone(),
                        steps,
                        result: cur,
                        fuel_used: used,
                        outcome: Outcome::FuelExhausted,
                    };
                }
                used += 1;
                if record {
                    steps.push(TraceStep {
                        term: next.clone(),
                        rule,
                        path,
                    });
                }
                cur = next;
            }
        }
    }
}

/// Runs the weak-head strategy for at most `fuel` steps, recording each one.
pub fn whnf(m: &Term, fuel: u64) -> Result<Trace, EvalError> {
    check_evaluable(m)?;
    Ok(run_whnf(m, fuel, true))
}

/// Like [`whnf`] without recording intermediate terms.
pub fn whnf_quiet(m: &Term, fuel: u64) -> Result<Trace, EvalError> {
    check_evaluable(m)?;
    Ok(run_whnf(m, fuel, false))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluated {
    pub term: Term,
    pub fuel_used: u64,
    pub outcome: Outcome,
}

/// Evaluates to weak-head form and keeps going inside the arguments of
/// `S` and `cons`, so numerals and lists come out fully computed. Fuel is
/// shared across the whole run. The outcome is the first non-value outcome
/// met, or the outcome of the root.
pub fn evaluate(m: &Term, fuel: u64) -> Result<Evaluated, EvalError> {
    check_evaluable(m)?;
    let mut budget = fuel;
    let mut worst = None;
    let term = deep(m, &mut budget, &mut worst);
    let root = run_whnf(&term, 0, false).outcome;
    let outcome = match worst {
        Some(o) => o,
        None => root,
    };
    Ok(Evaluated {
        term,
        fuel_used: fuel - budget,
        outcome,
    })
}

fn deep(m: &Term, budget: &mut u64, worst: &mut Option<Outcome>) -> Term {
    let tr = run_whnf(m, *budget, false);
    *budget -= tr.fuel_used;
    if !matches!(tr.outcome, Outcome::Value(_)) {
        if worst.is_none() {
            *worst = Some(tr.outcome.clone());
        }
        return tr.result;
    }
    let v = tr.result;
    let (head, args) = v.spine();
    match (head, args.len()) {
        (Term::Succ, 1) => Term::app(Term::Succ, deep(args[0], budget, worst)),
        (Term::Cons, 2) => {
            let e = deep(args[0], budget, worst);
            let l = deep(args[1], budget, worst);
            Term::apps(Term::Cons, [e, l])
        }
        _ => v,
    }
}

/// All one-step reducts under the full congruence closure, with the rule
/// and position of each contracted redex. Annotations are erased first.
pub fn step_any(m: &Term) -> Vec<(Term, Rule, Path)> {
    let m = m.erase();
    let mut out = Vec::new();
    collect_steps(&m, &mut Vec::new(), &m, &mut out);
    out
}

fn collect_steps(root: &Term, at: &mut Vec<PathStep>, m: &Term, out: &mut Vec<(Term, Rule, Path)>) {
    if let Some((c, rule)) = contract(m) {
        out.push((replace_at(root, at, c), rule, Path(at.clone())));
    }
    let mut visit = |step: PathStep, sub: &Term, out: &mut Vec<(Term, Rule, Path)>| {
        at.push(step);
        collect_steps(root, at, sub, out);
        at.pop();
    };
    match m {
        Term::App(f, a) => {
            visit(PathStep::Fun, f, out);
            visit(PathStep::Arg, a, out);
        }
        Term::Lam(_, _, b) => visit(PathStep::Body, b, out),
        Term::Try(b, _, h) => {
            visit(PathStep::TryBody, b, out);
            visit(PathStep::Handler, h, out);
        }
        Term::Seq(l, r) => {
            visit(PathStep::SeqLeft, l, out);
            visit(PathStep::SeqRight, r, out);
        }
        _ => {}
    }
}

/// Complete development: contracts every redex visible in the term at once.
pub fn par_develop(m: &Term) -> Term {
    let m = m.erase();
    develop(&m)
}

fn develop(m: &Term) -> Term {
    match m {
        Term::App(f, n) => {
            match &**f {
                Term::Lam(x, _, body) => return subst_term(&develop(body), x, &develop(n)),
                Term::Raise(e) => return Term::Raise(e.clone()),
                Term::Daimon => return Term::Daimon,
                _ => {}
            }
            let (head, args) = m.spine();
            if args.len() == 3 && matches!(head, Term::Rec | Term::Fold) {
                let (x, y, z) = (args[0], args[1], args[2]);
                if let Some((_, rule)) = contract(m) {
                    return match rule {
                        Rule::RecZero | Rule::FoldNil => develop(x),
                        Rule::RecRaise | Rule::FoldRaise | Rule::DaimonRec | Rule::DaimonFold => {
                            z.clone()
                        }
                        Rule::RecSucc => {
                            let Term::App(_, n) = z else { unreachable!() };
                            let (x, y, n) = (develop(x), develop(y), develop(n));
                            let again = Term::apps(Term::Rec, [x, y.clone(), n.clone()]);
                            Term::apps(y, [n, again])
                        }
                        Rule::FoldCons => {
                            let (_, cargs) = z.spine();
                            let (x, y) = (develop(x), develop(y));
                            let (e, l) = (develop(cargs[0]), develop(cargs[1]));
                            let again = Term::apps(Term::Fold, [x, y.clone(), l.clone()]);
                            Term::apps(y, [e, l, again])
                        }
                        _ => unreachable!("rec/fold spine contracts by its own rules"),
                    };
                }
            }
            Term::app(develop(f), develop(n))
        }
        Term::Lam(x, _, b) => Term::Lam(x.clone(), None, Box::new(develop(b))),
        Term::Try(b, e, h) => match &**b {
            Term::Raise(e2) if e2 == e => develop(h),
            Term::Raise(e2) => Term::Raise(e2.clone()),
            Term::Daimon => Term::Daimon,
            v if has_regular_shape(v) => develop(v),
            _ => Term::Try(Box::new(develop(b)), e.clone(), Box::new(develop(h))),
        },
        Term::Seq(l, r) => {
            if **l == Term::Daimon {
                develop(r)
            } else {
                Term::seq(develop(l), develop(r))
            }
        }
        Term::Annot(t, _) => develop(t),
        other => other.clone(),
    }
}

fn push_unique(out: &mut Vec<Term>, seen: &mut HashSet<Term>, t: Term) {
    if seen.insert(t.alpha_normal()) {
        out.push(t);
    }
}

/// Every `n` with `m => n`, up to alpha-equivalence. Exponential in the
/// term; meant for small terms. Returns `None` past `limit` results.
pub fn enumerate_par(m: &Term, limit: usize) -> Option<Vec<Term>> {
    par_all(&m.erase(), limit)
}

fn par_all(m: &Term, limit: usize) -> Option<Vec<Term>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    macro_rules! add {
        ($t:expr) => {{
            push_unique(&mut out, &mut seen, $t);
            if out.len() > limit {
                return None;
            }
        }};
    }
    match m {
        Term::App(f, n) => {
            let fs = par_all(f, limit)?;
            let ns = par_all(n, limit)?;
            for f2 in &fs {
                for n2 in &ns {
                    add!(Term::app(f2.clone(), n2.clone()));
                }
            }
            match &**f {
                Term::Lam(x, _, body) => {
                    for b2 in par_all(body, limit)? {
                        for n2 in &ns {
                            add!(subst_term(&b2, x, n2));
                        }
                    }
                }
                Term::Raise(e) => add!(Term::Raise(e.clone())),
                Term::Daimon => add!(Term::Daimon),
                _ => {}
            }
            let (head, args) = m.spine();
            if args.len() == 3 && matches!(head, Term::Rec | Term::Fold) {
                if let Some((_, rule)) = contract(m) {
                    let (x, y, z) = (args[0], args[1], args[2]);
                    match rule {
                        Rule::RecZero | Rule::FoldNil => {
                            for x2 in par_all(x, limit)? {
                                add!(x2);
                            }
                        }
                        Rule::RecRaise | Rule::FoldRaise | Rule::DaimonRec | Rule::DaimonFold => {
                            add!(z.clone())
                        }
                        Rule::RecSucc => {
                            let Term::App(_, n) = z else { unreachable!() };
                            let (xs, ys, ns) =
                                (par_all(x, limit)?, par_all(y, limit)?, par_all(n, limit)?);
                            for x2 in &xs {
                                for y2 in &ys {
                                    for n2 in &ns {
                                        let again = Term::apps(
                                            Term::Rec,
                                            [x2.clone(), y2.clone(), n2.clone()],
                                        );
                                        add!(Term::apps(y2.clone(), [n2.clone(), again]));
                                    }
                                }
                            }
                        }
                        Rule::FoldCons => {
                            let (_, cargs) = z.spine();
                            let xs = par_all(x, limit)?;
                            let ys = par_all(y, limit)?;
                            let es = par_all(cargs[0], limit)?;
                            let ls = par_all(cargs[1], limit)?;
                            for x2 in &xs {
                                for y2 in &ys {
                                    for e2 in &es {
                                        for l2 in &ls {
                                            let again = Term::apps(
                                                Term::Fold,
                                                [x2.clone(), y2.clone(), l2.clone()],
                                            );
                                            add!(Term::apps(
                                                y2.clone(),
                                                [e2.clone(), l2.clone(), again]
                                            ));
                                        }
                                    }
                                }
                            }
                        }
                        _ => {}
                    }
                }
            }
        }
        Term::Lam(x, _, b) => {
            for b2 in par_all(b, limit)? {
                add!(Term::Lam(x.clone(), None, Box::new(b2)));
            }
        }
        Term::Try(b, e, h) => {
            let hs = par_all(h, limit)?;
            let bs = par_all(b, limit)?;
            for b2 in &bs {
                for h2 in &hs {
                    add!(Term::Try(
                        Box::new(b2.clone()),
                        e.clone(),
                        Box::new(h2.clone())
                    ));
                }
            }
            match &**b {
                Term::Raise(e2) if e2 == e => {
                    for h2 in hs {
                        add!(h2);
                    }
                }
                Term::Raise(e2) => add!(Term::Raise(e2.clone())),
                Term::Daimon => add!(Term::Daimon),
                v if has_regular_shape(v) => {
                    for b2 in bs {
                        add!(b2);
                    }
                }
                _ => {}
            }
        }
        Term::Seq(l, r) => {
            let rs = par_all(r, limit)?;
            for l2 in par_all(l, limit)? {
                for r2 in &rs {
                    add!(Term::seq(l2.clone(), r2.clone()));
                }
            }
            if **l == Term::Daimon {
                for r2 in rs {
                    add!(r2);
                }
            }
        }
        Term::Annot(t, _) => return par_all(t, limit),
        other => add!(other.clone()),
    }
    Some(out)
}

/// Decides `m => n` by following the rules of parallel reduction.
pub fn is_par_step(m: &Term, n: &Term) -> bool {
    par_rel(&m.erase(), &n.erase())
}

fn par_rel(m: &Term, n: &Term) -> bool {
    // congruence (reflexivity on atoms included)
    let congruent = match (m, n) {
        (Term::App(f, a), Term::App(f2, a2)) => par_rel(f, f2) && par_rel(a, a2),
        (Term::Lam(x, _, b), Term::Lam(y, _, b2)) => {
            if x == y {
                par_rel(b, b2)
            } else {
                let mut avoid = b.free_vars();
                avoid.extend(b2.free_vars());
                avoid.insert(x.clone());
                avoid.insert(y.clone());
                let z = crate::syntax::fresh_name(x, &avoid);
                let zv = Term::Var(z);
                par_rel(&subst_term(b, x, &zv), &subst_term(b2, y, &zv))
            }
        }
        (Term::Try(b, e, h), Term::Try(b2, e2, h2)) => e == e2 && par_rel(b, b2) && par_rel(h, h2),
        (Term::Seq(l, r), Term::Seq(l2, r2)) => par_rel(l, l2) && par_rel(r, r2),
        (Term::Lam(..) | Term::App(..) | Term::Try(..) | Term::Seq(..), _) => false,
        (a, b) => a == b,
    };
    if congruent {
        return true;
    }
    let Some((_, rule)) = contract(m) else {
        return false;
    };
    match rule {
        Rule::RaiseApp
        | Rule::DaimonApp
        | Rule::TryOther
        | Rule::DaimonTry
        | Rule::RecRaise
        | Rule::FoldRaise
        | Rule::DaimonRec
        | Rule::DaimonFold => contract(m).map(|(c, _)| c == *n).unwrap_or(false),
        Rule::Beta => {
            let Term::App(f, a) = m else { unreachable!() };
            let Term::Lam(x, _, body) = &**f else {
                unreachable!()
            };
            let (Some(bs), Some(as_)) = (par_all(body, 4096), par_all(a, 4096)) else {
                return false;
            };
            bs.iter()
                .any(|b2| as_.iter().any(|a2| subst_term(b2, x, a2).alpha_eq(n)))
        }
        Rule::TryRaise => {
            let Term::Try(_, _, h) = m else {
                unreachable!()
            };
            par_rel(h, n)
        }
        Rule::TryValue => {
            let Term::Try(b, _, _) = m else {
                unreachable!()
            };
            par_rel(b, n)
        }
        Rule::Seq => {
            let Term::Seq(_, r) = m else { unreachable!() };
            par_rel(r, n)
        }
        Rule::RecZero | Rule::FoldNil => {
            let (_, args) = m.spine();
            par_rel(args[0], n)
        }
        Rule::RecSucc => {
            let (_, args) = m.spine();
            let Term::App(_, sn) = args[2] else {
                unreachable!()
            };
            // n = Y' N' (rec X' Y' N')
            let (nh, nargs) = n.spine();
            if nargs.len() < 2 {
                return false;
            }
            let k = nargs.len();
            let again = nargs[k - 1];
            let n1 = nargs[k - 2];
            let y1 = rebuild(nh, &nargs[..k - 2]);
            let (rh, rargs) = again.spine();
            *rh == Term::Rec
                && rargs.len() == 3
                && par_rel(args[0], rargs[0])
                && par_rel(args[1], &y1)
                && y1.alpha_eq(rargs[1])
                && par_rel(sn, n1)
                && n1.alpha_eq(rargs[2])
        }
        Rule::FoldCons => {
            let (_, args) = m.spine();
            let (_, cargs) = args[2].spine();
            let (nh, nargs) = n.spine();
            if nargs.len() < 3 {
                return false;
            }
            let k = nargs.len();
            let again = nargs[k - 1];
            let l1 = nargs[k - 2];
            let e1 = nargs[k - 3];
            let y1 = rebuild(nh, &nargs[..k - 3]);
            let (fh, fargs) = again.spine();
            *fh == Term::Fold
                && fargs.len() == 3
                && par_rel(args[0], fargs[0])
                && par_rel(args[1], &y1)
                && y1.alpha_eq(fargs[1])
                && par_rel(cargs[0], e1)
                && par_rel(cargs[1], l1)
                && l1.alpha_eq(fargs[2])
        }
    }
}

fn rebuild(head: &Term, args: &[&Term]) -> Term {
    Term::apps(head.clone(), args.iter().map(|a| (*a).clone()))
}

/// All terms reachable from `m` in at most `depth` one-step reductions,
/// deduplicated up to alpha. Gives up (returns `None`) past `limit` terms.
pub fn reachable(m: &Term, depth: usize, limit: usize) -> Option<Vec<Term>> {
    let mut seen = HashSet::new();
    let start = m.erase();
    seen.insert(start.alpha_normal());
    let mut out = vec![start.clone()];
    let mut queue = VecDeque::from([(start, 0)]);
    while let Some((t, d)) = queue.pop_front() {
        if d == depth {
            continue;
        }
        for (n, _, _) in step_any(&t) {
            if seen.insert(n.alpha_normal()) {
                if out.len() >= limit {
                    return None;
                }
                out.push(n.clone());
                queue.push_back((n, d + 1));
            }
        }
    }
    Some(out)
}

/// Local confluence check on the reduction graph of `m` to `depth`: at
/// every reachable term `t`, every one-step reduct of `t` parallel-reduces
/// to the complete development of `t`, which therefore joins any two of
/// them. Terms whose reduction graph exceeds an internal bound are
/// explored only up to that bound.
pub fn check_diamond(m: &Term, depth: usize) -> bool {
    const LIMIT: usize = 20_000;
    let mut seen = HashSet::new();
    let start = m.erase();
    seen.insert(start.alpha_normal());
    let mut queue = VecDeque::from([(start, 0)]);
    while let Some((t, d)) = queue.pop_front() {
        let dev = develop(&t);
        for (n, _, _) in step_any(&t) {
            if !par_rel(&n, &dev) {
                return false;
            }
            if d < depth && seen.len() < LIMIT && seen.insert(n.alpha_normal()) {
                queue.push_back((n, d + 1));
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn value_of(s: &str) -> Term {
        let tr = whnf(&t(s), 100).unwrap();
        assert!(
            matches!(tr.outcome, Outcome::Value(_)),
            "{s}: {:?}",
            tr.outcome
        );
        tr.result
    }

    #[test]
    fn head_step_examples() {
        match head_step(&t("(raise e) 0")).unwrap() {
            StepResult::Reduced { next, rule, .. } => {
                assert_eq!(next, Term::raise("e"));
                assert_eq!(rule, Rule::RaiseApp);
            }
            other => panic!("{other:?}"),
        }
        match head_step(&t("try (raise f) with e -> 0")).unwrap() {
            StepResult::Reduced { next, rule, .. } => {
                assert_eq!(next, Term::raise("f"));
                assert_eq!(rule, Rule::TryOther);
            }
            other => panic!("{other:?}"),
        }
        match head_step(&t("try (S (raise e)) with e -> 0")).unwrap() {
            StepResult::Reduced { next, rule, .. } => {
                assert_eq!(next, t("S (raise e)"));
                assert_eq!(rule, Rule::TryValue);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(head_step(&t("x")), Err(EvalError::OpenTerm(_))));
        assert_eq!(head_step(&t("0 0")).unwrap(), StepResult::Stuck);
        assert_eq!(
            head_step(&t("#")).unwrap(),
            StepResult::ValueReached(ValueOutcome::Daimon)
        );
    }

    #[test]
    fn whnf_examples() {
        assert_eq!(value_of("(\\x. 0) (raise e)"), Term::Zero);
        assert_eq!(value_of("(\\x. try x with e -> 0) (raise e)"), Term::Zero);
        assert_eq!(value_of("rec 0 (\\x. \\y. y) (raise e)"), Term::raise("e"));
        assert_eq!(value_of("rec 0 (\\x. \\y. x) 3"), Term::numeral(2));
        assert_eq!(
            value_of("fold 0 (\\e. \\l. \\r. e) [4; 5]"),
            Term::numeral(4)
        );
        assert_eq!(value_of("# ; 0"), Term::Zero);
        assert_eq!(value_of("try # with e -> 0"), Term::Daimon);
    }

    #[test]
    fn fuel_is_distinguished() {
        let omega = t("(\\x. x x) (\\x. x x)");
        let tr = whnf(&omega, 50).unwrap();
        assert_eq!(tr.outcome, Outcome::FuelExhausted);
        assert_eq!(tr.fuel_used, 50);
        assert_eq!(whnf(&t("0 ; 0"), 50).unwrap().outcome, Outcome::Stuck);
    }

    #[test]
    fn trace_paths_point_at_redexes() {
        let tr = whnf(&t("rec 0 (\\x. \\y. x) ((\\z. z) 1)"), 100).unwrap();
        assert_eq!(tr.steps[0].rule, Rule::Beta);
        assert_eq!(tr.steps[0].path.to_string(), "[arg]");
        assert!(tr.to_text().starts_with("beta @ [arg] : "));
    }

    #[test]
    fn step_any_examples() {
        let r = step_any(&t("\\x. (\\y. y) x"));
        assert_eq!(r.len(), 1);
        assert!(r[0].0.alpha_eq(&t("\\x. x")));
        assert_eq!(r[0].1, Rule::Beta);
        assert_eq!(r[0].2, Path(vec![PathStep::Body]));
        assert_eq!(step_any(&t("(\\x. x) ((\\y. y) 0)")).len(), 2);
        assert!(step_any(&Term::Zero).is_empty());
    }

    #[test]
    fn develop_examples() {
        assert_eq!(par_develop(&Term::Zero), Term::Zero);
        assert_eq!(
            par_develop(&t("try (raise e) with e -> (\\y. y) 0")),
            Term::Zero
        );
        let m = t("(\\x. x x) ((\\y. y) z)");
        assert!(par_develop(&m).alpha_eq(&t("z z")));
    }

    #[test]
    fn diamond_examples() {
        assert!(check_diamond(&t("(\\x. x) ((\\y. y) 0)"), 3));
        assert!(check_diamond(&t("try ((\\x. raise e) 0) with e -> 1"), 4));
        assert!(check_diamond(&Term::Zero, 1));
    }

    #[test]
    fn deep_evaluation() {
        let r = evaluate(&t("[(\\x. x) 1; raise e]"), 100).unwrap();
        assert_eq!(r.term, t("[1; raise e]"));
        assert_eq!(r.outcome, Outcome::Value(ValueOutcome::Regular));
    }
}
