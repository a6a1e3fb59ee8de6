//! `.fx` corpora: named definitions plus `check` and `eval` pragmas.
//!
//! Definitions are typed through a context holding the declared types of
//! the earlier ones, so each body is checked once. Evaluation substitutes
//! the bodies back in.

use thiserror::Error;

use crate::parser::{parse_file, Item, ParseError, SourceSpan};
use crate::syntax::{subst_term, Term, Type, TypingContext};
use crate::typing::{bidi_check, synthesize, TypeVerdict};

/// The bundled standard library.
pub const STDLIB: &str = include_str!("../corpus/stdlib.fx");
/// Two small items, one ill typed.
pub const BAD: &str = include_str!("../corpus/bad.fx");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{span}: `{name}` is defined twice")]
    Duplicate { name: String, span: SourceSpan },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub name: String,
    pub ty: Option<Type>,
    pub term: Term,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub items: Vec<Item>,
}

/// One typing question of a corpus: a typed definition or a `check`.
#[derive(Debug, Clone)]
pub struct Question {
    pub label: String,
    pub ctx: TypingContext,
    pub term: Term,
    pub ty: Type,
}

impl Corpus {
    pub fn parse(src: &str, file: &str) -> Result<Corpus, CorpusError> {
        let items = parse_file(src, file)?;
        let mut seen = std::collections::BTreeSet::new();
        for it in &items {
            if let Item::Let { name, span, .. } = it {
                if !seen.insert(name.clone()) {
                    return Err(CorpusError::Duplicate {
                        name: name.clone(),
                        span: span.clone(),
                    });
                }
            }
        }
        Ok(Corpus { items })
    }

    pub fn stdlib() -> Corpus {
        Corpus::parse(STDLIB, "stdlib.fx").expect("bundled corpus parses")
    }

    pub fn definitions(&self) -> Vec<Definition> {
        self.items
            .iter()
            .filter_map(|it| match it {
                Item::Let {
                    name,
                    ty,
                    term,
                    span,
                } => Some(Definition {
                    name: name.clone(),
                    ty: ty.clone(),
                    term: term.clone(),
                    span: span.clone(),
                }),
                _ => None,
            })
            .collect()
    }

    pub fn definition(&self, name: &str) -> Option<Definition> {
        self.definitions().into_iter().find(|d| d.name == name)
    }

    /// Typing questions in file order, each with the context of the
    /// definitions before it. Untyped definitions enter the context with a
    /// synthesized type when one is found.
    pub fn questions(&self) -> Vec<Question> {
        let mut ctx = TypingContext::new();
        let mut out = Vec::new();
        for it in &self.items {
            match it {
                Item::Let {
                    name,
                    ty: Some(ty),
                    term,
                    ..
                } => {
                    out.push(Question {
                        label: name.clone(),
                        ctx: ctx.clone(),
                        term: term.clone(),
                        ty: ty.clone(),
                    });
                    ctx = ctx.extend(name, ty.clone()).expect("names are unique");
                }
                Item::Let {
                    name,
                    ty: None,
                    term,
                    ..
                } => {
                    if let Some(d) = synthesize(&ctx, term) {
                        ctx = ctx.extend(name, d.ty).expect("names are unique");
                    }
                }
                Item::Check { term, ty, span } => out.push(Question {
                    label: format!("check@{}", span.start.line),
                    ctx: ctx.clone(),
                    term: term.clone(),
                    ty: ty.clone(),
                }),
                Item::Eval { .. } => {}
            }
        }
        out
    }

    /// Context of every typed definition.
    pub fn globals(&self) -> TypingContext {
        let mut ctx = TypingContext::new();
        for d in self.definitions() {
            if let Some(ty) = d.ty {
                ctx = ctx.extend(&d.name, ty).expect("names are unique");
            }
        }
        ctx
    }

    /// Replaces every global by its body, latest definition first.
    pub fn expand(&self, m: &Term) -> Term {
        self.definitions().iter().rev().fold(m.erase(), |acc, d| {
            subst_term(&acc, &d.name, &d.term.erase())
        })
    }

    /// `eval` pragmas in file order.
    pub fn eval_terms(&self) -> Vec<(SourceSpan, Term)> {
        self.items
            .iter()
            .filter_map(|it| match it {
                Item::Eval { term, span } => Some((span.clone(), term.clone())),
                _ => None,
            })
            .collect()
    }
}

impl Question {
    pub fn check(&self) -> TypeVerdict {
        bidi_check(&self.ctx, &self.term, &self.ty)
    }
}
