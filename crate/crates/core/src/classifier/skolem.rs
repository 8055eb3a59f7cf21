use std::collections::BTreeSet;
use std::fmt;

use crate::term::{BuiltinOp, Prop, Substitution, SubsetTy, Term, Type};

use super::ClassifyError;

#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Builtin(BuiltinOp, Term, Term),
    InSeq(Term, Vec<Term>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Literal {
    pub negated: bool,
    pub atom: Atom,
}

impl Literal {
    pub fn terms(&self) -> Vec<&Term> {
        match &self.atom {
            Atom::Builtin(_, a, b) => vec![a, b],
            Atom::InSeq(t, ts) => std::iter::once(t).chain(ts).collect(),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.terms().into_iter().flat_map(Term::free_vars).collect()
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "not ")?;
        }
        match &self.atom {
            Atom::Builtin(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Atom::InSeq(t, ts) => {
                write!(f, "{t} in [")?;
                for (i, x) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// A subset type's proposition with its existentials replaced by skolem
/// variables (each ranging over a class) and its body in disjunctive normal
/// form.
#[derive(Debug, Clone, PartialEq)]
pub struct SkolemClause {
    /// `(variable, class)` in quantifier order.
    pub skolems: Vec<(String, String)>,
    pub disjuncts: Vec<Vec<Literal>>,
}

enum Form {
    True,
    False,
    Lit(Literal),
    And(Box<Form>, Box<Form>),
    Or(Box<Form>, Box<Form>),
}

pub fn skolemize(s: &SubsetTy) -> Result<SkolemClause, ClassifyError> {
    let mut used: BTreeSet<String> = s.prop.free_vars();
    used.extend(s.binding_term.free_vars());
    let mut skolems = Vec::new();
    let form = nnf(&s.prop, true, &Substitution::new(), &mut used, &mut skolems)?;
    Ok(SkolemClause {
        skolems,
        disjuncts: dnf(form),
    })
}

fn nnf(
    p: &Prop,
    positive: bool,
    renames: &Substitution,
    used: &mut BTreeSet<String>,
    skolems: &mut Vec<(String, String)>,
) -> Result<Form, ClassifyError> {
    Ok(match p {
        Prop::True => if positive { Form::True } else { Form::False },
        Prop::False => if positive { Form::False } else { Form::True },
        Prop::Builtin(op, args) => match args.as_slice() {
            [a, b] => Form::Lit(Literal {
                negated: !positive,
                atom: Atom::Builtin(*op, renames.apply(a), renames.apply(b)),
            }),
            _ => return Err(ClassifyError::Unsupported(format!("{} needs two arguments", op.symbol()))),
        },
        Prop::InSequence(t, ts) => Form::Lit(Literal {
            negated: !positive,
            atom: Atom::InSeq(renames.apply(t), ts.iter().map(|t| renames.apply(t)).collect()),
        }),
        Prop::Not(q) => nnf(q, !positive, renames, used, skolems)?,
        Prop::And(a, b) | Prop::Or(a, b) => {
            let l = Box::new(nnf(a, positive, renames, used, skolems)?);
            let r = Box::new(nnf(b, positive, renames, used, skolems)?);
            match (p, positive) {
                (Prop::And(..), true) | (Prop::Or(..), false) => Form::And(l, r),
                _ => Form::Or(l, r),
            }
        }
        Prop::Exists(v, ty, body) => {
            if !positive {
                return Err(ClassifyError::QuantifierUnderNot(v.clone()));
            }
            let Type::Alias(class) = ty else {
                return Err(ClassifyError::Unsupported(format!(
                    "quantifier bound for {v} must name a class, found {ty}"
                )));
            };
            let name = if used.contains(v) {
                crate::term::fresh_name(v, used)
            } else {
                v.clone()
            };
            used.insert(name.clone());
            skolems.push((name.clone(), class.clone()));
            let mut inner = renames.clone();
            inner.bind(v.clone(), Term::Var(name));
            nnf(body, positive, &inner, used, skolems)?
        }
    })
}

fn dnf(f: Form) -> Vec<Vec<Literal>> {
    match f {
        Form::True => vec![vec![]],
        Form::False => vec![],
        Form::Lit(l) => vec![vec![l]],
        Form::Or(a, b) => {
            let mut out = dnf(*a);
            out.extend(dnf(*b));
            out
        }
        Form::And(a, b) => {
            let left = dnf(*a);
            let right = dnf(*b);
            let mut out = Vec::with_capacity(left.len() * right.len());
            for l in &left {
                for r in &right {
                    out.push(l.iter().chain(r).cloned().collect());
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::build::*;

    fn subset(t: Type) -> SubsetTy {
        match t {
            Type::Subset(s) => *s,
            _ => panic!("not a subset type"),
        }
    }

    pub(crate) fn fi_related() -> Type {
        let (p, q, r, s, t) = (var("p"), var("q"), var("r"), var("s"), var("t"));
        subset_ty(
            triple("fi-related", p.clone(), q.clone()).unwrap(),
            triple_ty("fi-related", type_name("person"), type_name("person")).unwrap(),
            exists(
                "t",
                type_name("trans"),
                exists(
                    "s",
                    type_name("orig_of"),
                    exists(
                        "r",
                        type_name("recv_of"),
                        triple("orig-of", p.clone(), t.clone())
                            .unwrap()
                            .equals(s)
                            .and(triple("recv-of", q, t).unwrap().equals(r)),
                    ),
                ),
            ),
        )
        .unwrap()
    }

    #[test]
    fn mission_set_clause() {
        let c = skolemize(&subset(fi_related())).unwrap();
        let names: Vec<_> = c.skolems.iter().map(|(v, k)| format!("{v}:{k}")).collect();
        assert_eq!(names, ["t:trans", "s:orig_of", "r:recv_of"]);
        assert_eq!(c.disjuncts.len(), 1);
        let d = &c.disjuncts[0];
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].to_string(), "(record ((orig-of (record ((#0 (var \"p\")) (#1 (var \"t\"))))))) = (var \"s\")");
        assert!(d.iter().all(|l| !l.negated));
    }

    #[test]
    fn mission_target_has_two_disjuncts() {
        let target = term_name("sue_grafton");
        let p = var("p");
        let t = subset_ty(
            p.clone(),
            type_name("person"),
            exists(
                "f",
                type_name("fi_related"),
                triple("fi-related", p.clone(), target.clone())
                    .unwrap()
                    .equals(var("f"))
                    .or(triple("fi-related", target, p).unwrap().equals(var("f"))),
            ),
        )
        .unwrap();
        let c = skolemize(&subset(t)).unwrap();
        assert_eq!(c.skolems, vec![("f".to_string(), "fi_related".to_string())]);
        assert_eq!(c.disjuncts.len(), 2);
    }

    #[test]
    fn vacuous_body() {
        let c = skolemize(&subset(subset_ty(var("x"), num_ty(), Prop::True).unwrap())).unwrap();
        assert!(c.skolems.is_empty());
        assert_eq!(c.disjuncts, vec![Vec::<Literal>::new()]);
    }

    #[test]
    fn negation_is_pushed_inward() {
        let body = not(eq(var("x"), num(1)).and(eq(var("x"), num(2))));
        let c = skolemize(&subset(subset_ty(var("x"), num_ty(), body).unwrap())).unwrap();
        assert_eq!(c.disjuncts.len(), 2);
        assert!(c.disjuncts.iter().all(|d| d.len() == 1 && d[0].negated));
    }

    #[test]
    fn quantifier_under_not_is_rejected() {
        let body = not(exists("y", type_name("c"), eq(var("x"), var("y"))));
        let err = skolemize(&subset(subset_ty(var("x"), num_ty(), body).unwrap())).unwrap_err();
        assert!(matches!(err, ClassifyError::QuantifierUnderNot(_)));
    }

    #[test]
    fn clashing_binders_are_renamed_apart() {
        let body = exists("y", type_name("c"), eq(var("x"), var("y")))
            .or(exists("y", type_name("d"), eq(var("x"), var("y"))));
        let c = skolemize(&subset(subset_ty(var("x"), num_ty(), body).unwrap())).unwrap();
        assert_eq!(c.skolems.len(), 2);
        assert_ne!(c.skolems[0].0, c.skolems[1].0);
        assert!(c.disjuncts[1][0].vars().contains(&c.skolems[1].0));
    }
}
