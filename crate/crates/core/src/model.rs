//! Realizability harness: contexts with a hole, orthogonality against the
//! daimon, Δ-try lifting and membership oracles for ground types.
//!
//! Every ground type here has exactly one structural context, so the
//! orthogonality oracle is exact up to fuel. Membership is decided twice,
//! once through that context and once by peeling the weak-head form, and the
//! two answers are compared.

use std::fmt;

use crate::eval::{whnf_quiet, Outcome};
use crate::subtyping::canonicalize;
use crate::syntax::{ExcName, ExcSet, Term, Type};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalContext {
    Hole,
    AppTo(Box<EvalContext>, Term),
    /// `try C with ε -> #`
    TryDaimon(Box<EvalContext>, ExcName),
    /// `rec x y C`
    RecAt(Term, Term, Box<EvalContext>),
    /// `fold x y C`
    FoldAt(Term, Term, Box<EvalContext>),
}

impl EvalContext {
    pub fn app_to(c: EvalContext, arg: Term) -> Self {
        EvalContext::AppTo(Box::new(c), arg)
    }

    pub fn try_daimon(c: EvalContext, name: ExcName) -> Self {
        EvalContext::TryDaimon(Box::new(c), name)
    }

    pub fn rec_at(x: Term, y: Term, c: EvalContext) -> Self {
        EvalContext::RecAt(x, y, Box::new(c))
    }

    pub fn fold_at(x: Term, y: Term, c: EvalContext) -> Self {
        EvalContext::FoldAt(x, y, Box::new(c))
    }

    /// Number of constructors between the root and the hole.
    pub fn depth(&self) -> usize {
        match self {
            EvalContext::Hole => 0,
            EvalContext::AppTo(c, _)
            | EvalContext::TryDaimon(c, _)
            | EvalContext::RecAt(_, _, c)
            | EvalContext::FoldAt(_, _, c) => 1 + c.depth(),
        }
    }
}

impl fmt::Display for EvalContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", plug(self, &Term::var("[]")))
    }
}

/// Fills the hole. Contexts are closed apart from the hole, so nothing is
/// captured.
pub fn plug(c: &EvalContext, m: &Term) -> Term {
    match c {
        EvalContext::Hole => m.clone(),
        EvalContext::AppTo(c, n) => Term::app(plug(c, m), n.clone()),
        EvalContext::TryDaimon(c, e) => Term::try_with(plug(c, m), e.as_str(), Term::Daimon),
        EvalContext::RecAt(x, y, c) => Term::apps(Term::Rec, [x.clone(), y.clone(), plug(c, m)]),
        EvalContext::FoldAt(x, y, c) => Term::apps(Term::Fold, [x.clone(), y.clone(), plug(c, m)]),
    }
}

/// `outer[inner[hole]]`
pub fn compose(outer: &EvalContext, inner: &EvalContext) -> EvalContext {
    match outer {
        EvalContext::Hole => inner.clone(),
        EvalContext::AppTo(c, n) => EvalContext::app_to(compose(c, inner), n.clone()),
        EvalContext::TryDaimon(c, e) => EvalContext::try_daimon(compose(c, inner), e.clone()),
        EvalContext::RecAt(x, y, c) => EvalContext::rec_at(x.clone(), y.clone(), compose(c, inner)),
        EvalContext::FoldAt(x, y, c) => {
            EvalContext::fold_at(x.clone(), y.clone(), compose(c, inner))
        }
    }
}

/// `try_Δ #`: one `try .. with ε -> #` per name, the least name innermost.
/// The empty set gives the bare hole.
pub fn delta_try(delta: &ExcSet) -> EvalContext {
    delta.iter().fold(EvalContext::Hole, |c, e| {
        EvalContext::try_daimon(c, e.clone())
    })
}

/// `try_Δ#[C]`: the handlers wrap the whole context.
pub fn lift(delta: &ExcSet, c: &EvalContext) -> EvalContext {
    compose(&delta_try(delta), c)
}

/// `C[try_Δ#[hole]]`: the handlers wrap the hole.
pub fn unlift(delta: &ExcSet, c: &EvalContext) -> EvalContext {
    compose(c, &delta_try(delta))
}

/// `rec # (λy.λx.x) hole`, the context of `nat`.
pub fn str_nat() -> EvalContext {
    EvalContext::rec_at(
        Term::Daimon,
        Term::lam("y", Term::lam("x", Term::var("x"))),
        EvalContext::Hole,
    )
}

/// `fold # (λe.λl.λr. C[e]; r) hole` for an element context `C`.
pub fn str_list(elem: &EvalContext) -> EvalContext {
    let step = Term::lam(
        "e",
        Term::lam(
            "l",
            Term::lam("r", Term::seq(plug(elem, &Term::var("e")), Term::var("r"))),
        ),
    );
    EvalContext::fold_at(Term::Daimon, step, EvalContext::Hole)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    True,
    False,
    FuelExhausted,
}

impl Oracle {
    fn from_bool(b: bool) -> Oracle {
        if b {
            Oracle::True
        } else {
            Oracle::False
        }
    }

    /// Conjunction where a definite `False` beats running out of fuel.
    fn and(self, other: Oracle) -> Oracle {
        match (self, other) {
            (Oracle::False, _) | (_, Oracle::False) => Oracle::False,
            (Oracle::FuelExhausted, _) | (_, Oracle::FuelExhausted) => Oracle::FuelExhausted,
            _ => Oracle::True,
        }
    }
}

impl fmt::Display for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Oracle::True => "true",
            Oracle::False => "false",
            Oracle::FuelExhausted => "fuel-exhausted",
        })
    }
}

/// Whether `c[m]` reaches the daimon under the weak-head strategy.
/// Annotations are erased; an open `m` is never orthogonal.
pub fn orthogonal(m: &Term, c: &EvalContext, fuel: u64) -> Oracle {
    let Ok(tr) = whnf_quiet(&plug(c, &m.erase()), fuel) else {
        return Oracle::False;
    };
    match tr.outcome {
        Outcome::FuelExhausted => Oracle::FuelExhausted,
        _ => Oracle::from_bool(tr.result == Term::Daimon),
    }
}

/// Both answers to a membership question.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Membership {
    /// Orthogonality against the type's contexts.
    pub orthogonality: Oracle,
    /// Peeling of the weak-head form.
    pub syntactic: Oracle,
}

impl Membership {
    /// Fuel exhaustion on either side leaves the question open, which is
    /// not counted as a disagreement.
    pub fn agree(&self) -> bool {
        self.orthogonality == self.syntactic
            || self.orthogonality == Oracle::FuelExhausted
            || self.syntactic == Oracle::FuelExhausted
    }

    /// The common answer, or `FuelExhausted` when either side ran out.
    pub fn verdict(&self) -> Oracle {
        if self.orthogonality == Oracle::FuelExhausted || self.syntactic == Oracle::FuelExhausted {
            Oracle::FuelExhausted
        } else if self.orthogonality == self.syntactic {
            self.orthogonality
        } else {
            Oracle::False
        }
    }
}

/// Types made of `nat`, `list`, unions and corruptions only.
pub fn is_ground(t: &Type) -> bool {
    match t {
        Type::Nat => true,
        Type::List(a) | Type::Union(a, _) | Type::Corrupt(a, _) => is_ground(a),
        Type::Var(_) | Type::Arrow(..) | Type::Forall(..) => false,
    }
}

fn split(t: &Type) -> (ExcSet, ExcSet, &Type) {
    let (d, t) = match t {
        Type::Union(a, d) => (d.clone(), a.as_ref()),
        _ => (ExcSet::empty(), t),
    };
    let (e, t) = match t {
        Type::Corrupt(a, e) => (e.clone(), a.as_ref()),
        _ => (ExcSet::empty(), t),
    };
    (d, e, t)
}

/// The structural contexts of a ground type in canonical form, at most
/// `samples` of them (at least one).
pub fn contexts(t: &Type, samples: usize) -> Vec<EvalContext> {
    let t = canonicalize(t).ty;
    let mut out = raw_contexts(&t);
    out.truncate(samples.max(1));
    out
}

fn raw_contexts(t: &Type) -> Vec<EvalContext> {
    let (d, e, core) = split(t);
    let base = match core {
        Type::Nat => vec![str_nat()],
        Type::List(c) => {
            // Element contexts come from Θ_E C so that exceptional elements
            // are caught by the outer handlers. Lifting the whole list context
            // instead would leave `raise e; r` stuck inside the fold.
            let elem = canonicalize(&Type::corrupt(c.as_ref().clone(), e.clone())).ty;
            raw_contexts(&elem).iter().map(str_list).collect()
        }
        _ => Vec::new(),
    };
    base.iter().map(|c| unlift(&d, &lift(&e, c))).collect()
}

/// Membership by weak-head peeling of `t`'s canonical form.
pub fn syntactic_member(m: &Term, t: &Type, fuel: u64) -> Oracle {
    peel(&m.erase(), &canonicalize(t).ty, fuel)
}

fn whnf_value(m: &Term, fuel: u64) -> Result<Term, Oracle> {
    match whnf_quiet(m, fuel) {
        Err(_) => Err(Oracle::False),
        Ok(tr) => match tr.outcome {
            Outcome::FuelExhausted => Err(Oracle::FuelExhausted),
            Outcome::Stuck => Err(Oracle::False),
            Outcome::Value(_) => Ok(tr.result),
        },
    }
}

fn peel(m: &Term, t: &Type, fuel: u64) -> Oracle {
    let (d, e, core) = split(t);
    let v = match whnf_value(m, fuel) {
        Ok(v) => v,
        Err(o) => return o,
    };
    let terminal = |v: &Term| match v {
        Term::Daimon => Some(true),
        Term::Raise(x) => Some(d.contains(x) || e.contains(x)),
        _ => None,
    };
    match core {
        Type::Nat => {
            let mut cur = v;
            loop {
                if let Some(b) = terminal(&cur) {
                    return Oracle::from_bool(b);
                }
                match cur {
                    Term::Zero => return Oracle::True,
                    Term::App(f, n) if *f == Term::Succ => {
                        // Below the first S the union handlers are out of reach.
                        match whnf_value(&n, fuel) {
                            Ok(next) => {
                                if let Term::Raise(x) = &next {
                                    return Oracle::from_bool(e.contains(x));
                                }
                                cur = next;
                            }
                            Err(o) => return o,
                        }
                    }
                    _ => return Oracle::False,
                }
            }
        }
        Type::List(c) => {
            let elem = canonicalize(&Type::corrupt(c.as_ref().clone(), e.clone())).ty;
            let mut acc = Oracle::True;
            let mut cur = v;
            let mut first = true;
            loop {
                if first {
                    if let Some(b) = terminal(&cur) {
                        return acc.and(Oracle::from_bool(b));
                    }
                } else {
                    match &cur {
                        Term::Daimon => return acc,
                        Term::Raise(x) => return acc.and(Oracle::from_bool(e.contains(x))),
                        _ => {}
                    }
                }
                first = false;
                if cur == Term::Nil {
                    return acc;
                }
                let (head, args) = cur.spine();
                if *head != Term::Cons || args.len() != 2 {
                    return Oracle::False;
                }
                acc = acc.and(peel(args[0], &elem, fuel));
                if acc == Oracle::False {
                    return acc;
                }
                let tail = args[1].clone();
                cur = match whnf_value(&tail, fuel) {
                    Ok(v) => v,
                    Err(o) => return acc.and(o),
                };
            }
        }
        _ => Oracle::False,
    }
}

/// Membership by orthogonality against every sampled context of `t`.
pub fn orthogonality_member(m: &Term, t: &Type, fuel: u64, samples: usize) -> Oracle {
    contexts(t, samples)
        .iter()
        .fold(Oracle::True, |acc, c| acc.and(orthogonal(m, c, fuel)))
}

/// Both oracles for a ground type; `None` outside the ground fragment.
pub fn member(m: &Term, t: &Type, fuel: u64, samples: usize) -> Option<Membership> {
    if !is_ground(t) {
        return None;
    }
    Some(Membership {
        orthogonality: orthogonality_member(m, t, fuel, samples),
        syntactic: syntactic_member(m, t, fuel),
    })
}

/// Membership in `Θ_Δ nat`.
pub fn in_nat_interp(m: &Term, delta: &ExcSet, fuel: u64) -> Membership {
    member(m, &Type::corrupt(Type::Nat, delta.clone()), fuel, 1).expect("nat is ground")
}

/// Membership in `∪_D (Θ_E nat)`.
pub fn in_union_interp(m: &Term, d: &ExcSet, e: &ExcSet, fuel: u64) -> Membership {
    let t = Type::union(Type::corrupt(Type::Nat, e.clone()), d.clone());
    member(m, &t, fuel, 1).expect("nat is ground")
}

/// Membership in `Θ_Δ (list A)` for a ground element type `A`.
pub fn in_list_interp(
    m: &Term,
    elem: &Type,
    delta: &ExcSet,
    fuel: u64,
    samples: usize,
) -> Option<Membership> {
    member(
        m,
        &Type::corrupt(Type::list(elem.clone()), delta.clone()),
        fuel,
        samples,
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeStatus {
    Checked(Membership),
    /// Outside the ground fragment.
    Declined,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeRow {
    pub item: String,
    pub ty: Type,
    pub status: ProbeStatus,
    pub warning: Option<String>,
}

impl ProbeRow {
    /// Declined rows count as agreeing.
    pub fn agree(&self) -> bool {
        match &self.status {
            ProbeStatus::Checked(mb) => mb.agree() && mb.verdict() != Oracle::False,
            ProbeStatus::Declined => true,
        }
    }
}

/// Model soundness at a closed ground-typed item: both oracles must place
/// the term in the interpretation of its type.
pub fn semantic_probe(item: &str, m: &Term, t: &Type, fuel: u64) -> ProbeRow {
    let warning = m
        .mentions_model_forms()
        .then(|| "model-only form, not well typed".to_string());
    let status = match member(m, t, fuel, 4) {
        Some(mb) => ProbeStatus::Checked(mb),
        None => ProbeStatus::Declined,
    };
    ProbeRow {
        item: item.to_string(),
        ty: t.clone(),
        status,
        warning,
    }
}

/// Table `item | type | oracle-i | oracle-ii | agree` and a summary line.
pub fn render_report(rows: &[ProbeRow]) -> String {
    let mut s = String::from("item | type | oracle-i | oracle-ii | agree\n");
    let (mut ok, mut bad, mut declined, mut fuel) = (0, 0, 0, 0);
    for r in rows {
        let (i, ii) = match &r.status {
            ProbeStatus::Checked(mb) => (mb.orthogonality.to_string(), mb.syntactic.to_string()),
            ProbeStatus::Declined => ("declined".to_string(), "declined".to_string()),
        };
        match &r.status {
            ProbeStatus::Declined => declined += 1,
            ProbeStatus::Checked(mb) if mb.verdict() == Oracle::FuelExhausted => fuel += 1,
            _ if r.agree() => ok += 1,
            _ => bad += 1,
        }
        s.push_str(&format!(
            "{} | {} | {} | {} | {}",
            r.item,
            r.ty,
            i,
            ii,
            if r.agree() { "yes" } else { "NO" }
        ));
        if let Some(w) = &r.warning {
            s.push_str(&format!("  (warning: {w})"));
        }
        s.push('\n');
    }
    s.push_str(&format!(
        "summary: {} items, {ok} agree, {bad} disagree, {declined} declined, {fuel} fuel-exhausted\n",
        rows.len()
    ));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_term, parse_type};

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn e() -> ExcName {
        ExcName::new("e").unwrap()
    }

    fn rec0() -> EvalContext {
        EvalContext::rec_at(Term::Zero, t("\\x. \\y. y"), EvalContext::Hole)
    }

    #[test]
    fn plug_examples() {
        assert_eq!(plug(&EvalContext::Hole, &Term::Zero), Term::Zero);
        let c = EvalContext::try_daimon(EvalContext::Hole, e());
        assert_eq!(plug(&c, &t("raise e")), t("try raise e with e -> #"));
        assert_eq!(plug(&str_nat(), &t("S 0")), t("rec # (\\y. \\x. x) (S 0)"));
    }

    #[test]
    fn orthogonal_examples() {
        assert_eq!(orthogonal(&Term::Zero, &str_nat(), 100), Oracle::True);
        assert_eq!(orthogonal(&t("raise e"), &str_nat(), 100), Oracle::False);
        let lifted = lift(&ExcSet::of(&["e"]), &str_nat());
        assert_eq!(orthogonal(&t("raise e"), &lifted, 100), Oracle::True);
    }

    #[test]
    fn lift_and_unlift_outcomes() {
        let d = ExcSet::of(&["e"]);
        let c1 = unlift(&d, &rec0());
        let c2 = lift(&d, &rec0());
        assert_eq!(
            plug(&c1, &t("m")),
            t("rec 0 (\\x. \\y. y) (try m with e -> #)")
        );
        let drive = |c: &EvalContext, m: &str| whnf_quiet(&plug(c, &t(m)), 100).unwrap().result;
        assert_eq!(drive(&c1, "raise e"), Term::Daimon);
        assert_eq!(drive(&c1, "S (raise e)"), t("raise e"));
        assert_eq!(drive(&c2, "raise e"), Term::Daimon);
        assert_eq!(drive(&c2, "S (raise e)"), Term::Daimon);
    }

    #[test]
    fn delta_try_nests_least_name_innermost() {
        let c = delta_try(&ExcSet::of(&["b", "a"]));
        assert_eq!(
            plug(&c, &Term::Zero),
            t("try (try 0 with a -> #) with b -> #")
        );
        assert_eq!(delta_try(&ExcSet::empty()), EvalContext::Hole);
    }

    #[test]
    fn nat_membership() {
        let yes = in_nat_interp(&t("S (S 0)"), &ExcSet::empty(), 100);
        assert_eq!(
            (yes.orthogonality, yes.syntactic),
            (Oracle::True, Oracle::True)
        );
        let yes = in_nat_interp(&t("S (raise e)"), &ExcSet::of(&["e"]), 100);
        assert_eq!(
            (yes.orthogonality, yes.syntactic),
            (Oracle::True, Oracle::True)
        );
        let no = in_nat_interp(&t("S (raise e)"), &ExcSet::empty(), 100);
        assert_eq!(
            (no.orthogonality, no.syntactic),
            (Oracle::False, Oracle::False)
        );
        let d = in_nat_interp(&Term::Daimon, &ExcSet::empty(), 100);
        assert_eq!(d.verdict(), Oracle::True);
    }

    #[test]
    fn union_membership() {
        let d = ExcSet::of(&["e"]);
        let m = in_union_interp(&t("raise e"), &d, &ExcSet::empty(), 100);
        assert_eq!((m.orthogonality, m.syntactic), (Oracle::True, Oracle::True));
        let m = in_union_interp(&t("S (raise e)"), &d, &ExcSet::empty(), 100);
        assert_eq!(
            (m.orthogonality, m.syntactic),
            (Oracle::False, Oracle::False)
        );
    }

    #[test]
    fn list_membership() {
        let nat = Type::Nat;
        let none = ExcSet::empty();
        let m = in_list_interp(&t("[0; S 0]"), &nat, &none, 1000, 10).unwrap();
        assert_eq!(m.verdict(), Oracle::True);
        assert!(m.agree());
        let elem = Type::corrupt(Type::Nat, ExcSet::of(&["e"]));
        let m = in_list_interp(&t("cons (raise e) nil"), &elem, &none, 1000, 10).unwrap();
        assert_eq!((m.orthogonality, m.syntactic), (Oracle::True, Oracle::True));
        let m = in_list_interp(&t("raise e"), &nat, &none, 1000, 10).unwrap();
        assert_eq!(
            (m.orthogonality, m.syntactic),
            (Oracle::False, Oracle::False)
        );
        let m =
            in_list_interp(&t("cons 0 (raise e)"), &nat, &ExcSet::of(&["e"]), 1000, 10).unwrap();
        assert_eq!((m.orthogonality, m.syntactic), (Oracle::True, Oracle::True));
        let m = in_list_interp(
            &t("cons (raise e) nil"),
            &nat,
            &ExcSet::of(&["e"]),
            1000,
            10,
        )
        .unwrap();
        assert_eq!((m.orthogonality, m.syntactic), (Oracle::True, Oracle::True));
    }

    #[test]
    fn probe_declines_outside_ground_fragment() {
        let row = semantic_probe("id", &t("\\x. x"), &parse_type("nat -> nat").unwrap(), 100);
        assert_eq!(row.status, ProbeStatus::Declined);
        assert!(row.agree());
        let row = semantic_probe("d", &Term::Daimon, &Type::Nat, 100);
        assert!(row.agree());
        assert!(row.warning.is_some());
        let report = render_report(&[row]);
        assert!(report
            .ends_with("summary: 1 items, 1 agree, 0 disagree, 0 declined, 0 fuel-exhausted\n"));
    }
}
