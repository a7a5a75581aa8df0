//! Canonical form for formulas.
//!
//! Negation is pushed inward until it rests on atoms, equalities, `Does`,
//! `Causes` or `Wills` nodes. Negation is never pushed *into* the body of
//! a `Wills`, `Causes`, `For` or deontic node: the inference rules
//! pattern-match on negation sitting directly over those operators.
//! Bound variables are renamed to a positional numbering so that
//! alpha-equivalent formulas have identical canonical forms.

use std::collections::HashMap;

use super::{Formula, Term};

/// Canonicalize a formula. Idempotent.
pub fn normalize(formula: &Formula) -> Formula {
    let pushed = push(formula, false);
    let free: Vec<String> = pushed.free_vars().iter().map(|v| v.name().to_string()).collect();
    let mut renamer = Renamer { free, next: 1, env: Vec::new() };
    renamer.rename(&pushed)
}

/// True iff the two formulas are identical up to bound-variable names
/// and the normalizations above.
pub fn alpha_equivalent(a: &Formula, b: &Formula) -> bool {
    normalize(a) == normalize(b)
}

/// Canonical complement: `normalize(not f)`.
pub fn complement(f: &Formula) -> Formula {
    normalize(&Formula::not(f.clone()))
}

fn push(f: &Formula, negated: bool) -> Formula {
    match f {
        Formula::True => {
            if negated {
                Formula::False
            } else {
                Formula::True
            }
        }
        Formula::False => {
            if negated {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Not(inner) => push(inner, !negated),
        Formula::And(a, b) => {
            if negated {
                Formula::or(push(a, true), push(b, true))
            } else {
                Formula::and(push(a, false), push(b, false))
            }
        }
        Formula::Or(a, b) => {
            if negated {
                Formula::and(push(a, true), push(b, true))
            } else {
                Formula::or(push(a, false), push(b, false))
            }
        }
        Formula::Implies(a, b) => {
            if negated {
                Formula::and(push(a, false), push(b, true))
            } else {
                Formula::implies(push(a, false), push(b, false))
            }
        }
        Formula::Iff(a, b) => {
            if negated {
                // not (a <-> b)  ==  (a and not b) or (not a and b)
                Formula::or(
                    Formula::and(push(a, false), push(b, true)),
                    Formula::and(push(a, true), push(b, false)),
                )
            } else {
                Formula::iff(push(a, false), push(b, false))
            }
        }
        Formula::Forall(v, body) => {
            if negated {
                Formula::exists(v.clone(), push(body, true))
            } else {
                Formula::forall(v.clone(), push(body, false))
            }
        }
        Formula::Exists(v, body) => {
            if negated {
                Formula::forall(v.clone(), push(body, true))
            } else {
                Formula::exists(v.clone(), push(body, false))
            }
        }
        // Negation rests on these nodes. Bodies are still normalized.
        Formula::Equals(..) | Formula::Atom { .. } | Formula::Does { .. } => {
            wrap(f.clone(), negated)
        }
        Formula::Wills { agent, body } => {
            let inner = Formula::wills(agent.clone(), push(body, false));
            wrap(inner, negated)
        }
        Formula::Causes { antecedent, consequent } => {
            let inner = Formula::causes(push(antecedent, false), push(consequent, false));
            wrap(inner, negated)
        }
        Formula::For { behavior, purpose } => {
            let inner = Formula::for_maxim(push(behavior, false), push(purpose, false));
            wrap(inner, negated)
        }
        Formula::Deontic { op, maxim } => {
            let inner = Formula::deontic(*op, push(maxim, false));
            wrap(inner, negated)
        }
    }
}

fn wrap(f: Formula, negated: bool) -> Formula {
    if negated {
        Formula::not(f)
    } else {
        f
    }
}

struct Renamer {
    free: Vec<String>,
    next: usize,
    // Binder scopes, innermost last. Maps source name -> canonical name.
    env: Vec<(String, String)>,
}

impl Renamer {
    fn fresh(&mut self) -> String {
        loop {
            let candidate = format!("x{}", self.next);
            self.next += 1;
            if !self.free.contains(&candidate) {
                return candidate;
            }
        }
    }

    fn rename(&mut self, f: &Formula) -> Formula {
        match f {
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                let fresh = self.fresh();
                let new_var = Term::var(fresh.clone(), v.sort().clone());
                self.env.push((v.name().to_string(), fresh));
                let new_body = self.rename(body);
                self.env.pop();
                match f {
                    Formula::Forall(..) => Formula::forall(new_var, new_body),
                    _ => Formula::exists(new_var, new_body),
                }
            }
            Formula::Not(a) => Formula::not(self.rename(a)),
            Formula::And(a, b) => Formula::and(self.rename(a), self.rename(b)),
            Formula::Or(a, b) => Formula::or(self.rename(a), self.rename(b)),
            Formula::Implies(a, b) => Formula::implies(self.rename(a), self.rename(b)),
            Formula::Iff(a, b) => Formula::iff(self.rename(a), self.rename(b)),
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Equals(a, b) => Formula::Equals(self.rename_term(a), self.rename_term(b)),
            Formula::Atom { pred, args } => Formula::Atom {
                pred: pred.clone(),
                args: args.iter().map(|t| self.rename_term(t)).collect(),
            },
            Formula::Does { agent, action } => {
                Formula::does(self.rename_term(agent), self.rename_term(action))
            }
            Formula::Wills { agent, body } => {
                Formula::wills(self.rename_term(agent), self.rename(body))
            }
            Formula::Causes { antecedent, consequent } => {
                Formula::causes(self.rename(antecedent), self.rename(consequent))
            }
            Formula::For { behavior, purpose } => {
                Formula::for_maxim(self.rename(behavior), self.rename(purpose))
            }
            Formula::Deontic { op, maxim } => Formula::deontic(*op, self.rename(maxim)),
        }
    }

    fn rename_term(&self, t: &Term) -> Term {
        match t {
            Term::Var { name, sort } => {
                for (old, new) in self.env.iter().rev() {
                    if old == name {
                        return Term::var(new.clone(), sort.clone());
                    }
                }
                t.clone()
            }
            Term::Const { .. } => t.clone(),
            Term::App { func, args, sort } => Term::App {
                func: func.clone(),
                args: args.iter().map(|a| self.rename_term(a)).collect(),
                sort: sort.clone(),
            },
        }
    }
}

/// Substitute variables by terms without renaming binders; used after a
/// quantifier has been stripped, when the replacement is known not to be
/// captured. Shadowed occurrences are left alone.
pub(crate) fn replace_vars(f: &Formula, mapping: &HashMap<String, Term>) -> Formula {
    fn term(t: &Term, mapping: &HashMap<String, Term>, shadowed: &[String]) -> Term {
        match t {
            Term::Var { name, .. } => {
                if shadowed.iter().any(|s| s == name) {
                    t.clone()
                } else if let Some(replacement) = mapping.get(name) {
                    replacement.clone()
                } else {
                    t.clone()
                }
            }
            Term::Const { .. } => t.clone(),
            Term::App { func, args, sort } => Term::App {
                func: func.clone(),
                args: args.iter().map(|a| term(a, mapping, shadowed)).collect(),
                sort: sort.clone(),
            },
        }
    }
    fn walk(f: &Formula, mapping: &HashMap<String, Term>, shadowed: &mut Vec<String>) -> Formula {
        match f {
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                shadowed.push(v.name().to_string());
                let new_body = walk(body, mapping, shadowed);
                shadowed.pop();
                match f {
                    Formula::Forall(..) => Formula::forall(v.clone(), new_body),
                    _ => Formula::exists(v.clone(), new_body),
                }
            }
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Not(a) => Formula::not(walk(a, mapping, shadowed)),
            Formula::And(a, b) => Formula::and(walk(a, mapping, shadowed), walk(b, mapping, shadowed)),
            Formula::Or(a, b) => Formula::or(walk(a, mapping, shadowed), walk(b, mapping, shadowed)),
            Formula::Implies(a, b) => {
                Formula::implies(walk(a, mapping, shadowed), walk(b, mapping, shadowed))
            }
            Formula::Iff(a, b) => Formula::iff(walk(a, mapping, shadowed), walk(b, mapping, shadowed)),
            Formula::Equals(a, b) => Formula::Equals(term(a, mapping, shadowed), term(b, mapping, shadowed)),
            Formula::Atom { pred, args } => Formula::Atom {
                pred: pred.clone(),
                args: args.iter().map(|t| term(t, mapping, shadowed)).collect(),
            },
            Formula::Does { agent, action } => {
                Formula::does(term(agent, mapping, shadowed), term(action, mapping, shadowed))
            }
            Formula::Wills { agent, body } => {
                Formula::wills(term(agent, mapping, shadowed), walk(body, mapping, shadowed))
            }
            Formula::Causes { antecedent, consequent } => Formula::causes(
                walk(antecedent, mapping, shadowed),
                walk(consequent, mapping, shadowed),
            ),
            Formula::For { behavior, purpose } => Formula::for_maxim(
                walk(behavior, mapping, shadowed),
                walk(purpose, mapping, shadowed),
            ),
            Formula::Deontic { op, maxim } => Formula::deontic(*op, walk(maxim, mapping, shadowed)),
        }
    }
    walk(f, mapping, &mut Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::SortName;

    fn p(t: Term) -> Formula {
        Formula::atom("P", vec![t])
    }

    #[test]
    fn double_negation_is_eliminated() {
        let c = Term::constant("c", SortName::object());
        let f = Formula::not(Formula::not(p(c.clone())));
        assert_eq!(normalize(&f), p(c));
    }

    #[test]
    fn negated_universal_becomes_existential() {
        let x = Term::var("ax", SortName::agent());
        let karli = Term::constant("karli", SortName::agent());
        let help = Term::app("help", vec![x.clone()], SortName::action());
        let f = Formula::not(Formula::forall(
            x.clone(),
            Formula::not(Formula::does(karli.clone(), help.clone())),
        ));
        let expected = Formula::exists(
            Term::var("x1", SortName::agent()),
            Formula::does(
                karli,
                Term::app("help", vec![Term::var("x1", SortName::agent())], SortName::action()),
            ),
        );
        assert_eq!(normalize(&f), expected);
    }

    #[test]
    fn bound_names_do_not_matter() {
        let fx = Formula::forall(Term::var("x", SortName::agent()), p(Term::var("x", SortName::agent())));
        let fy = Formula::forall(Term::var("y", SortName::agent()), p(Term::var("y", SortName::agent())));
        assert_eq!(normalize(&fx), normalize(&fy));
        assert!(alpha_equivalent(&fx, &fy));
    }

    #[test]
    fn bound_sorts_do_matter() {
        let fx = Formula::forall(Term::var("x", SortName::agent()), p(Term::var("x", SortName::agent())));
        let fy = Formula::forall(Term::var("x", SortName::object()), p(Term::var("x", SortName::object())));
        assert!(!alpha_equivalent(&fx, &fy));
    }

    #[test]
    fn negation_stops_at_wills() {
        let karli = Term::constant("karli", SortName::agent());
        let f = Formula::not(Formula::wills(karli.clone(), p(karli.clone())));
        let n = normalize(&f);
        assert_eq!(n, Formula::not(Formula::wills(karli, p(Term::constant("karli", SortName::agent())))));
    }

    #[test]
    fn negation_inside_wills_body_still_normalizes() {
        let karli = Term::constant("karli", SortName::agent());
        let f = Formula::wills(karli.clone(), Formula::not(Formula::not(p(karli.clone()))));
        assert_eq!(normalize(&f), Formula::wills(karli.clone(), p(karli)));
    }

    #[test]
    fn quantifier_duality_matches_under_alpha() {
        let q = |v: Term| Formula::atom("Q", vec![v]);
        let x = Term::var("x", SortName::agent());
        let lhs = Formula::not(Formula::exists(x.clone(), q(x.clone())));
        let rhs = Formula::forall(x.clone(), Formula::not(q(x)));
        assert!(alpha_equivalent(&lhs, &rhs));
    }

    #[test]
    fn normalize_is_idempotent_on_a_mixed_formula() {
        let x = Term::var("x", SortName::agent());
        let y = Term::var("y", SortName::object());
        let f = Formula::not(Formula::and(
            Formula::forall(x.clone(), Formula::not(p(x.clone()))),
            Formula::implies(Formula::exists(y.clone(), p(y.clone())), Formula::True),
        ));
        let once = normalize(&f);
        assert_eq!(normalize(&once), once);
    }

    #[test]
    fn canonical_names_avoid_free_variables() {
        // Free x1 must not be captured by the canonical renaming.
        let free = Term::var("x1", SortName::agent());
        let bound = Term::var("b", SortName::agent());
        let f = Formula::forall(bound.clone(), Formula::and(p(bound), p(free.clone())));
        let n = normalize(&f);
        match &n {
            Formula::Forall(v, _) => assert_ne!(v.name(), "x1"),
            _ => panic!("expected forall"),
        }
        assert_eq!(n.free_vars(), vec![free]);
    }
}
