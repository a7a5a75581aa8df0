//! Constant-to-variable substitution, the primitive behind
//! universalization.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::normalize::replace_vars;
use super::{Formula, LangError, Term};

/// A finite one-to-one, sort-preserving map from constants to variables.
/// Pairs keep insertion order so that rendering is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Substitution {
    pairs: Vec<(Term, Term)>,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    /// Adds a `constant -> variable` pair, enforcing injectivity and
    /// sort preservation.
    pub fn insert(&mut self, constant: Term, variable: Term) -> Result<(), LangError> {
        debug_assert!(matches!(constant, Term::Const { .. }));
        debug_assert!(matches!(variable, Term::Var { .. }));
        if constant.sort() != variable.sort() {
            return Err(LangError::SortViolation {
                constant: constant.name().to_string(),
                constant_sort: constant.sort().clone(),
                var: variable.name().to_string(),
                var_sort: variable.sort().clone(),
            });
        }
        if self.pairs.iter().any(|(_, v)| v.name() == variable.name()) {
            return Err(LangError::NotInjective(variable.name().to_string()));
        }
        self.pairs.retain(|(c, _)| c != &constant);
        self.pairs.push((constant, variable));
        Ok(())
    }

    pub fn get(&self, constant: &Term) -> Option<&Term> {
        self.pairs.iter().find(|(c, _)| c == constant).map(|(_, v)| v)
    }

    pub fn pairs(&self) -> &[(Term, Term)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Term> {
        self.pairs.iter().map(|(c, _)| c)
    }

    pub fn range(&self) -> impl Iterator<Item = &Term> {
        self.pairs.iter().map(|(_, v)| v)
    }
}

/// Replaces every occurrence of each constant in the substitution's
/// domain by its variable, however deeply nested. Errors if a range
/// variable would be captured by a binder already present in `formula`.
pub fn substitute(formula: &Formula, subst: &Substitution) -> Result<Formula, LangError> {
    let binders = formula.binder_names();
    for v in subst.range() {
        if binders.iter().any(|b| b == v.name()) {
            return Err(LangError::WouldCapture(v.name().to_string()));
        }
    }
    Ok(apply(formula, subst))
}

fn apply(f: &Formula, subst: &Substitution) -> Formula {
    fn term(t: &Term, subst: &Substitution) -> Term {
        match t {
            Term::Const { .. } => subst.get(t).cloned().unwrap_or_else(|| t.clone()),
            Term::Var { .. } => t.clone(),
            Term::App { func, args, sort } => Term::App {
                func: func.clone(),
                args: args.iter().map(|a| term(a, subst)).collect(),
                sort: sort.clone(),
            },
        }
    }
    match f {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Not(a) => Formula::not(apply(a, subst)),
        Formula::And(a, b) => Formula::and(apply(a, subst), apply(b, subst)),
        Formula::Or(a, b) => Formula::or(apply(a, subst), apply(b, subst)),
        Formula::Implies(a, b) => Formula::implies(apply(a, subst), apply(b, subst)),
        Formula::Iff(a, b) => Formula::iff(apply(a, subst), apply(b, subst)),
        Formula::Forall(v, body) => Formula::forall(v.clone(), apply(body, subst)),
        Formula::Exists(v, body) => Formula::exists(v.clone(), apply(body, subst)),
        Formula::Equals(a, b) => Formula::Equals(term(a, subst), term(b, subst)),
        Formula::Atom { pred, args } => Formula::Atom {
            pred: pred.clone(),
            args: args.iter().map(|t| term(t, subst)).collect(),
        },
        Formula::Does { agent, action } => Formula::does(term(agent, subst), term(action, subst)),
        Formula::Wills { agent, body } => Formula::wills(term(agent, subst), apply(body, subst)),
        Formula::Causes { antecedent, consequent } => {
            Formula::causes(apply(antecedent, subst), apply(consequent, subst))
        }
        Formula::For { behavior, purpose } => {
            Formula::for_maxim(apply(behavior, subst), apply(purpose, subst))
        }
        Formula::Deontic { op, maxim } => Formula::deontic(*op, apply(maxim, subst)),
    }
}

/// Replaces free occurrences of a single variable by a term. Used when a
/// quantifier has just been stripped; the caller guarantees the
/// replacement contains no variables that could be captured.
pub fn ground_variable(formula: &Formula, var: &Term, replacement: &Term) -> Formula {
    let mut mapping = HashMap::new();
    mapping.insert(var.name().to_string(), replacement.clone());
    replace_vars(formula, &mapping)
}
