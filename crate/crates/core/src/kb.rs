//! Knowledge bases: sort hierarchy, signature, axioms, necessity
//! schemas and named maxims, plus the sort checker that keeps them
//! honest.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{ground_variable, Formula, Maxim, SortName, Term};

pub const BASE_SORTS: [&str; 3] = ["Object", "Agent", "Action"];

/// Reserved predicate backing the built-in necessity of the will.
pub const ALIVE_PRED: &str = "Alive";

/// The subsort forest. The three base sorts are always present; every
/// declared sort names an already-declared parent, so the structure is
/// acyclic by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortHierarchy {
    // (sort, parent); base sorts have no parent.
    entries: Vec<(SortName, Option<SortName>)>,
}

impl Default for SortHierarchy {
    fn default() -> Self {
        SortHierarchy {
            entries: BASE_SORTS.iter().map(|s| (SortName::new(*s), None)).collect(),
        }
    }
}

impl SortHierarchy {
    pub fn contains(&self, sort: &SortName) -> bool {
        self.entries.iter().any(|(s, _)| s == sort)
    }

    pub fn parent(&self, sort: &SortName) -> Option<&SortName> {
        self.entries
            .iter()
            .find(|(s, _)| s == sort)
            .and_then(|(_, p)| p.as_ref())
    }

    pub fn declare(&mut self, sort: SortName, parent: SortName) -> Result<(), KbError> {
        if self.contains(&sort) {
            return Err(KbError::DuplicateSort(sort));
        }
        if !self.contains(&parent) {
            return Err(KbError::UnknownSort(parent));
        }
        self.entries.push((sort, Some(parent)));
        Ok(())
    }

    /// Reflexive-transitive subsort test.
    pub fn is_subsort(&self, sub: &SortName, sup: &SortName) -> bool {
        let mut cur = sub;
        loop {
            if cur == sup {
                return true;
            }
            match self.parent(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    /// True if one sort is a subsort of the other, in either direction.
    pub fn comparable(&self, a: &SortName, b: &SortName) -> bool {
        self.is_subsort(a, b) || self.is_subsort(b, a)
    }

    /// The base sort a sort descends from.
    pub fn base_of(&self, sort: &SortName) -> SortName {
        let mut cur = sort;
        while let Some(p) = self.parent(cur) {
            cur = p;
        }
        cur.clone()
    }

    /// Declared sorts beyond the base three.
    pub fn declared(&self) -> impl Iterator<Item = (&SortName, Option<&SortName>)> {
        self.entries
            .iter()
            .filter(|(_, p)| p.is_some())
            .map(|(s, p)| (s, p.as_ref()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstDecl {
    pub name: String,
    pub sort: SortName,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FnDecl {
    pub name: String,
    pub params: Vec<SortName>,
    pub result: SortName,
    /// Function symbol this one specializes, if any.
    pub refines: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredDecl {
    pub name: String,
    pub params: Vec<SortName>,
}

/// A template for a fact every willing agent is committed to. The
/// template has exactly one free variable, of sort `Agent`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NecessitySchema {
    pub name: String,
    pub var: Term,
    pub template: Formula,
}

impl NecessitySchema {
    pub fn instantiate(&self, agent: &Term) -> Formula {
        ground_variable(&self.template, &self.var, agent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedFormula {
    pub name: String,
    pub formula: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedMaxim {
    pub name: String,
    pub maxim: Maxim,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KbError {
    #[error("sort {0} was declared twice")]
    DuplicateSort(SortName),
    #[error("unknown sort {0}")]
    UnknownSort(SortName),
    #[error("{0} was declared twice")]
    DuplicateSymbol(String),
    #[error("unknown constant {0}")]
    UnknownConstant(String),
    #[error("unknown function {0}")]
    UnknownFunction(String),
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
    #[error("constant {name} is declared with sort {declared}, not {found}")]
    ConstantSortMismatch { name: String, declared: SortName, found: SortName },
    #[error("{symbol} expects {expected} arguments but got {found}")]
    ArityMismatch { symbol: String, expected: usize, found: usize },
    #[error("argument {index} of {symbol} has sort {found}, which is not a subsort of {expected}")]
    ArgumentSortMismatch { symbol: String, index: usize, expected: SortName, found: SortName },
    #[error("application of {name} is annotated with sort {found}, but {name} returns {declared}")]
    ResultSortMismatch { name: String, declared: SortName, found: SortName },
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("variable {0} shadows an enclosing binder")]
    ShadowedVariable(String),
    #[error("cannot compare terms of unrelated sorts {0} and {1}")]
    IncomparableSorts(SortName, SortName),
    #[error("{agent} in agent position has sort {found}, which is not a subsort of Agent")]
    NotAnAgent { agent: String, found: SortName },
    #[error("{action} in action position has sort {found}, which is not a subsort of Action")]
    NotAnAction { action: String, found: SortName },
    #[error("a Causes antecedent must be an optionally quantified, optionally negated Does")]
    MalformedCausesAntecedent,
    #[error("a For behavior must be an optionally quantified, optionally negated Does")]
    MalformedForBehavior,
    #[error("a For purpose must be first-order")]
    MalformedForPurpose,
    #[error("a deontic operator must wrap a For node")]
    MalformedDeontic,
    #[error("{refining} refines {refined}, but their parameter counts differ")]
    RefinesArity { refining: String, refined: String },
    #[error("{refining} refines {refined}, but its result sort {result} is not a subsort of {target}")]
    RefinesResultSort { refining: String, refined: String, result: SortName, target: SortName },
    #[error("{refining} refines {refined}, but parameter {index} does not accept {expected}")]
    RefinesParamSort { refining: String, refined: String, index: usize, expected: SortName },
    #[error("refines target {0} is not a declared function")]
    RefinesUnknownTarget(String),
    #[error("necessity template for {name} must have exactly one free variable of sort Agent")]
    BadNecessityTemplate { name: String },
    #[error("the {0} predicate is reserved and must take a single Agent argument")]
    ReservedPredicate(String),
    #[error("axiom {name} must be closed, but {var} is free")]
    OpenAxiom { name: String, var: String },
    #[error("unknown maxim {0}")]
    UnknownMaxim(String),
    #[error("invalid maxim {name}: {source}")]
    BadMaxim {
        name: String,
        #[source]
        source: crate::lang::LangError,
    },
}

/// A parsed and sort-checked world description.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub sorts: SortHierarchy,
    pub constants: Vec<ConstDecl>,
    pub functions: Vec<FnDecl>,
    pub predicates: Vec<PredDecl>,
    pub axioms: Vec<NamedFormula>,
    pub necessities: Vec<NecessitySchema>,
    pub maxims: Vec<NamedMaxim>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        KnowledgeBase::default()
    }

    pub fn constant(&self, name: &str) -> Option<&ConstDecl> {
        self.constants.iter().find(|c| c.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FnDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn predicate(&self, name: &str) -> Option<&PredDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn maxim(&self, name: &str) -> Result<&NamedMaxim, KbError> {
        self.maxims
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| KbError::UnknownMaxim(name.to_string()))
    }

    pub fn symbol_declared(&self, name: &str) -> bool {
        self.constant(name).is_some()
            || self.function(name).is_some()
            || self.predicate(name).is_some()
    }

    /// `(refining, refined)` pairs.
    pub fn refinements(&self) -> impl Iterator<Item = (&FnDecl, &FnDecl)> {
        self.functions.iter().filter_map(|f| {
            f.refines
                .as_deref()
                .and_then(|g| self.function(g))
                .map(|g| (f, g))
        })
    }

    /// Injects the reserved `Alive` predicate and the built-in necessity
    /// schema, then checks every declaration and formula. Builders call
    /// this once after assembling the knowledge base.
    pub fn finalize(&mut self) -> Result<(), KbError> {
        match self.predicate(ALIVE_PRED) {
            None => self.predicates.push(PredDecl {
                name: ALIVE_PRED.to_string(),
                params: vec![SortName::agent()],
            }),
            Some(p) if p.params == vec![SortName::agent()] => {}
            Some(_) => return Err(KbError::ReservedPredicate(ALIVE_PRED.to_string())),
        }
        if !self.necessities.iter().any(|n| n.name == ALIVE_PRED) {
            let var = Term::var("a", SortName::agent());
            self.necessities.push(NecessitySchema {
                name: ALIVE_PRED.to_string(),
                var: var.clone(),
                template: Formula::atom(ALIVE_PRED, vec![var]),
            });
        }
        self.validate()
    }

    /// Full consistency of the declarations and sort check of every
    /// axiom, necessity template and maxim.
    pub fn validate(&self) -> Result<(), KbError> {
        let mut seen: Vec<&str> = Vec::new();
        for name in self
            .constants
            .iter()
            .map(|c| c.name.as_str())
            .chain(self.functions.iter().map(|f| f.name.as_str()))
            .chain(self.predicates.iter().map(|p| p.name.as_str()))
        {
            if seen.contains(&name) {
                return Err(KbError::DuplicateSymbol(name.to_string()));
            }
            seen.push(name);
        }

        for c in &self.constants {
            if !self.sorts.contains(&c.sort) {
                return Err(KbError::UnknownSort(c.sort.clone()));
            }
        }
        for f in &self.functions {
            for s in f.params.iter().chain(std::iter::once(&f.result)) {
                if !self.sorts.contains(s) {
                    return Err(KbError::UnknownSort(s.clone()));
                }
            }
            if let Some(target) = &f.refines {
                let g = self
                    .function(target)
                    .ok_or_else(|| KbError::RefinesUnknownTarget(target.clone()))?;
                self.check_refines(f, g)?;
            }
        }
        for p in &self.predicates {
            for s in &p.params {
                if !self.sorts.contains(s) {
                    return Err(KbError::UnknownSort(s.clone()));
                }
            }
        }

        for ax in &self.axioms {
            if let Some(v) = ax.formula.free_vars().first() {
                return Err(KbError::OpenAxiom {
                    name: ax.name.clone(),
                    var: v.name().to_string(),
                });
            }
            self.check_formula(&ax.formula, &mut Vec::new())?;
        }

        for n in &self.necessities {
            let free = n.template.free_vars();
            let ok = free.len() == 1
                && free[0].name() == n.var.name()
                && *free[0].sort() == SortName::agent()
                && *n.var.sort() == SortName::agent();
            if !ok {
                return Err(KbError::BadNecessityTemplate { name: n.name.clone() });
            }
            self.check_formula(&n.template, &mut vec![n.var.clone()])?;
        }

        for m in &self.maxims {
            Maxim::new(m.maxim.behavior.clone(), m.maxim.purpose.clone()).map_err(|source| {
                KbError::BadMaxim { name: m.name.clone(), source }
            })?;
            self.check_formula(&m.maxim.to_formula(), &mut Vec::new())?;
        }
        Ok(())
    }

    fn check_refines(&self, f: &FnDecl, g: &FnDecl) -> Result<(), KbError> {
        if f.params.len() != g.params.len() {
            return Err(KbError::RefinesArity {
                refining: f.name.clone(),
                refined: g.name.clone(),
            });
        }
        if !self.sorts.is_subsort(&f.result, &g.result) {
            return Err(KbError::RefinesResultSort {
                refining: f.name.clone(),
                refined: g.name.clone(),
                result: f.result.clone(),
                target: g.result.clone(),
            });
        }
        // Any argument the general symbol accepts must fit the refining
        // one, so refined instances of general statements stay well
        // sorted.
        for (i, (fp, gp)) in f.params.iter().zip(&g.params).enumerate() {
            if !self.sorts.is_subsort(gp, fp) {
                return Err(KbError::RefinesParamSort {
                    refining: f.name.clone(),
                    refined: g.name.clone(),
                    index: i,
                    expected: gp.clone(),
                });
            }
        }
        Ok(())
    }

    /// Sort checks a term against the signature and the bound-variable
    /// environment, returning its sort.
    pub fn check_term(&self, term: &Term, bound: &[Term]) -> Result<SortName, KbError> {
        match term {
            Term::Var { name, sort } => {
                match bound.iter().rev().find(|b| b.name() == name) {
                    Some(b) if b.sort() == sort => Ok(sort.clone()),
                    Some(b) => Err(KbError::ConstantSortMismatch {
                        name: name.clone(),
                        declared: b.sort().clone(),
                        found: sort.clone(),
                    }),
                    None => Err(KbError::UnboundVariable(name.clone())),
                }
            }
            Term::Const { name, sort } => match self.constant(name) {
                Some(decl) if decl.sort == *sort => Ok(sort.clone()),
                Some(decl) => Err(KbError::ConstantSortMismatch {
                    name: name.clone(),
                    declared: decl.sort.clone(),
                    found: sort.clone(),
                }),
                None => Err(KbError::UnknownConstant(name.clone())),
            },
            Term::App { func, args, sort } => {
                let decl = self
                    .function(func)
                    .ok_or_else(|| KbError::UnknownFunction(func.clone()))?;
                if decl.params.len() != args.len() {
                    return Err(KbError::ArityMismatch {
                        symbol: func.clone(),
                        expected: decl.params.len(),
                        found: args.len(),
                    });
                }
                for (i, (arg, expected)) in args.iter().zip(&decl.params).enumerate() {
                    let got = self.check_term(arg, bound)?;
                    if !self.sorts.is_subsort(&got, expected) {
                        return Err(KbError::ArgumentSortMismatch {
                            symbol: func.clone(),
                            index: i,
                            expected: expected.clone(),
                            found: got,
                        });
                    }
                }
                if decl.result != *sort {
                    return Err(KbError::ResultSortMismatch {
                        name: func.clone(),
                        declared: decl.result.clone(),
                        found: sort.clone(),
                    });
                }
                Ok(sort.clone())
            }
        }
    }

    /// Sort checks a formula. `bound` carries enclosing binders.
    pub fn check_formula(&self, formula: &Formula, bound: &mut Vec<Term>) -> Result<(), KbError> {
        match formula {
            Formula::True | Formula::False => Ok(()),
            Formula::Not(a) => self.check_formula(a, bound),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                self.check_formula(a, bound)?;
                self.check_formula(b, bound)
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                if !self.sorts.contains(v.sort()) {
                    return Err(KbError::UnknownSort(v.sort().clone()));
                }
                if bound.iter().any(|b| b.name() == v.name()) {
                    return Err(KbError::ShadowedVariable(v.name().to_string()));
                }
                bound.push(v.clone());
                let result = self.check_formula(body, bound);
                bound.pop();
                result
            }
            Formula::Equals(a, b) => {
                let sa = self.check_term(a, bound)?;
                let sb = self.check_term(b, bound)?;
                if !self.sorts.comparable(&sa, &sb) {
                    return Err(KbError::IncomparableSorts(sa, sb));
                }
                Ok(())
            }
            Formula::Atom { pred, args } => {
                let decl = self
                    .predicate(pred)
                    .ok_or_else(|| KbError::UnknownPredicate(pred.clone()))?;
                if decl.params.len() != args.len() {
                    return Err(KbError::ArityMismatch {
                        symbol: pred.clone(),
                        expected: decl.params.len(),
                        found: args.len(),
                    });
                }
                for (i, (arg, expected)) in args.iter().zip(&decl.params).enumerate() {
                    let got = self.check_term(arg, bound)?;
                    if !self.sorts.is_subsort(&got, expected) {
                        return Err(KbError::ArgumentSortMismatch {
                            symbol: pred.clone(),
                            index: i,
                            expected: expected.clone(),
                            found: got,
                        });
                    }
                }
                Ok(())
            }
            Formula::Does { agent, action } => {
                let sa = self.check_term(agent, bound)?;
                if !self.sorts.is_subsort(&sa, &SortName::agent()) {
                    return Err(KbError::NotAnAgent {
                        agent: agent.name().to_string(),
                        found: sa,
                    });
                }
                let sb = self.check_term(action, bound)?;
                if !self.sorts.is_subsort(&sb, &SortName::action()) {
                    return Err(KbError::NotAnAction {
                        action: action.name().to_string(),
                        found: sb,
                    });
                }
                Ok(())
            }
            Formula::Wills { agent, body } => {
                let sa = self.check_term(agent, bound)?;
                if !self.sorts.is_subsort(&sa, &SortName::agent()) {
                    return Err(KbError::NotAnAgent {
                        agent: agent.name().to_string(),
                        found: sa,
                    });
                }
                self.check_formula(body, bound)
            }
            Formula::Causes { antecedent, consequent } => {
                if !is_does_shaped(antecedent) {
                    return Err(KbError::MalformedCausesAntecedent);
                }
                self.check_formula(antecedent, bound)?;
                self.check_formula(consequent, bound)
            }
            Formula::For { behavior, purpose } => {
                if !is_does_shaped(behavior) {
                    return Err(KbError::MalformedForBehavior);
                }
                if !purpose.is_first_order() {
                    return Err(KbError::MalformedForPurpose);
                }
                self.check_formula(behavior, bound)?;
                self.check_formula(purpose, bound)
            }
            Formula::Deontic { maxim, .. } => match maxim.as_ref() {
                Formula::For { .. } => self.check_formula(maxim, bound),
                _ => Err(KbError::MalformedDeontic),
            },
        }
    }
}

/// Optionally quantified, optionally negated `Does`.
fn is_does_shaped(f: &Formula) -> bool {
    let mut cur = f;
    while let Formula::Forall(_, body) | Formula::Exists(_, body) = cur {
        cur = body;
    }
    if let Formula::Not(inner) = cur {
        cur = inner;
    }
    matches!(cur, Formula::Does { .. })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_kb() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new();
        kb.sorts.declare(SortName::new("Promise"), SortName::action()).unwrap();
        kb.sorts
            .declare(SortName::new("FalsePromise"), SortName::new("Promise"))
            .unwrap();
        kb.constants.push(ConstDecl { name: "karli".into(), sort: SortName::agent() });
        kb.constants.push(ConstDecl { name: "jan".into(), sort: SortName::agent() });
        kb.functions.push(FnDecl {
            name: "promise".into(),
            params: vec![SortName::agent()],
            result: SortName::new("Promise"),
            refines: None,
        });
        kb.functions.push(FnDecl {
            name: "falsePromise".into(),
            params: vec![SortName::agent()],
            result: SortName::new("FalsePromise"),
            refines: Some("promise".into()),
        });
        kb.predicates.push(PredDecl {
            name: "BelievesPromise".into(),
            params: vec![SortName::agent(), SortName::new("Promise")],
        });
        kb
    }

    #[test]
    fn subsort_chain_reaches_base() {
        let kb = sample_kb();
        let fp = SortName::new("FalsePromise");
        assert!(kb.sorts.is_subsort(&fp, &SortName::action()));
        assert!(!kb.sorts.is_subsort(&SortName::action(), &fp));
        assert_eq!(kb.sorts.base_of(&fp), SortName::action());
    }

    #[test]
    fn subsort_argument_is_accepted_where_supersort_expected() {
        let kb = sample_kb();
        let jan = Term::constant("jan", SortName::agent());
        // BelievesPromise expects a Promise; a FalsePromise term fits.
        let fp = Term::app("falsePromise", vec![jan.clone()], SortName::new("FalsePromise"));
        let f = Formula::atom("BelievesPromise", vec![jan, fp]);
        assert!(kb.check_formula(&f, &mut Vec::new()).is_ok());
    }

    #[test]
    fn unrelated_argument_sort_is_rejected() {
        let kb = sample_kb();
        let jan = Term::constant("jan", SortName::agent());
        // An agent is not a Promise.
        let f = Formula::atom("BelievesPromise", vec![jan.clone(), jan]);
        assert!(matches!(
            kb.check_formula(&f, &mut Vec::new()),
            Err(KbError::ArgumentSortMismatch { .. })
        ));
    }

    #[test]
    fn duplicate_sort_rejected() {
        let mut kb = sample_kb();
        assert!(matches!(
            kb.sorts.declare(SortName::new("Promise"), SortName::action()),
            Err(KbError::DuplicateSort(_))
        ));
    }

    #[test]
    fn refines_requires_compatible_signature() {
        let mut kb = sample_kb();
        kb.functions.push(FnDecl {
            name: "oddPromise".into(),
            params: vec![],
            result: SortName::new("Promise"),
            refines: Some("promise".into()),
        });
        assert!(matches!(kb.validate(), Err(KbError::RefinesArity { .. })));
    }

    #[test]
    fn finalize_injects_alive_once() {
        let mut kb = sample_kb();
        kb.finalize().unwrap();
        assert!(kb.predicate(ALIVE_PRED).is_some());
        assert_eq!(kb.necessities.len(), 1);
        let karli = Term::constant("karli", SortName::agent());
        let inst = kb.necessities[0].instantiate(&karli);
        assert_eq!(inst, Formula::atom(ALIVE_PRED, vec![karli]));
        // Finalizing again does not duplicate.
        kb.finalize().unwrap();
        assert_eq!(kb.necessities.len(), 1);
    }

    #[test]
    fn open_axiom_rejected() {
        let mut kb = sample_kb();
        kb.predicates.push(PredDecl { name: "P".into(), params: vec![SortName::agent()] });
        kb.axioms.push(NamedFormula {
            name: "B".into(),
            formula: Formula::atom("P", vec![Term::var("x", SortName::agent())]),
        });
        assert!(matches!(kb.validate(), Err(KbError::OpenAxiom { .. })));
    }
}
