//! Term and formula representation for the reasoning language.
//!
//! Everything here is immutable after construction and freely shareable
//! between evaluation tasks. Formulas are plain trees; canonicalization
//! lives in [`normalize`].

mod normalize;
mod subst;

pub use normalize::{alpha_equivalent, complement, normalize};
pub use subst::{ground_variable, substitute, Substitution};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of a sort. The hierarchy that relates sorts lives in the
/// knowledge base; terms only carry the name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SortName(pub String);

impl SortName {
    pub fn new(name: impl Into<String>) -> Self {
        SortName(name.into())
    }

    pub fn object() -> Self {
        SortName::new("Object")
    }

    pub fn agent() -> Self {
        SortName::new("Agent")
    }

    pub fn action() -> Self {
        SortName::new("Action")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for SortName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// A sorted term: a variable, a constant, or a function application.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Var { name: String, sort: SortName },
    Const { name: String, sort: SortName },
    /// `sort` is the declared result sort of the function symbol.
    App { func: String, args: Vec<Term>, sort: SortName },
}

impl Term {
    pub fn var(name: impl Into<String>, sort: SortName) -> Self {
        Term::Var { name: name.into(), sort }
    }

    pub fn constant(name: impl Into<String>, sort: SortName) -> Self {
        Term::Const { name: name.into(), sort }
    }

    pub fn app(func: impl Into<String>, args: Vec<Term>, sort: SortName) -> Self {
        Term::App { func: func.into(), args, sort }
    }

    pub fn sort(&self) -> &SortName {
        match self {
            Term::Var { sort, .. } | Term::Const { sort, .. } | Term::App { sort, .. } => sort,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var { name, .. } | Term::Const { name, .. } => name,
            Term::App { func, .. } => func,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var { .. } => false,
            Term::Const { .. } => true,
            Term::App { args, .. } => args.iter().all(Term::is_ground),
        }
    }

    /// Nesting depth: constants and variables are depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Term::Var { .. } | Term::Const { .. } => 1,
            Term::App { args, .. } => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    /// All subterms including `self`, outermost first.
    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = vec![self];
        if let Term::App { args, .. } = self {
            for a in args {
                out.extend(a.subterms());
            }
        }
        out
    }
}

/// The three deontic operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DeonticOp {
    Perm,
    Imp,
    Obl,
}

impl DeonticOp {
    pub fn keyword(self) -> &'static str {
        match self {
            DeonticOp::Perm => "Perm",
            DeonticOp::Imp => "Imp",
            DeonticOp::Obl => "Obl",
        }
    }
}

impl std::fmt::Display for DeonticOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Formulas of the language.
///
/// `Does` is an ordinary predicate over an agent and an action term.
/// `Wills`, `Causes`, `For` and the deontic wrappers are modal operators;
/// well-formedness restricts where they may appear (see
/// [`Maxim`] and the knowledge-base checks).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    /// The `Term` is always a `Term::Var` carrying the bound sort.
    Forall(Term, Box<Formula>),
    Exists(Term, Box<Formula>),
    Equals(Term, Term),
    Atom { pred: String, args: Vec<Term> },
    Does { agent: Term, action: Term },
    Wills { agent: Term, body: Box<Formula> },
    Causes { antecedent: Box<Formula>, consequent: Box<Formula> },
    For { behavior: Box<Formula>, purpose: Box<Formula> },
    Deontic { op: DeonticOp, maxim: Box<Formula> },
}

impl Formula {
    // Reads as the connective, not as the operator trait.
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn forall(var: Term, body: Formula) -> Formula {
        debug_assert!(matches!(var, Term::Var { .. }));
        Formula::Forall(var, Box::new(body))
    }

    pub fn exists(var: Term, body: Formula) -> Formula {
        debug_assert!(matches!(var, Term::Var { .. }));
        Formula::Exists(var, Box::new(body))
    }

    pub fn atom(pred: impl Into<String>, args: Vec<Term>) -> Formula {
        Formula::Atom { pred: pred.into(), args }
    }

    pub fn does(agent: Term, action: Term) -> Formula {
        Formula::Does { agent, action }
    }

    pub fn wills(agent: Term, body: Formula) -> Formula {
        Formula::Wills { agent, body: Box::new(body) }
    }

    pub fn causes(antecedent: Formula, consequent: Formula) -> Formula {
        Formula::Causes { antecedent: Box::new(antecedent), consequent: Box::new(consequent) }
    }

    pub fn for_maxim(behavior: Formula, purpose: Formula) -> Formula {
        Formula::For { behavior: Box::new(behavior), purpose: Box::new(purpose) }
    }

    pub fn deontic(op: DeonticOp, maxim: Formula) -> Formula {
        Formula::Deontic { op, maxim: Box::new(maxim) }
    }

    pub fn not_equals(t1: Term, t2: Term) -> Formula {
        Formula::not(Formula::Equals(t1, t2))
    }

    /// Child formulas, for generic traversals.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::False | Formula::Equals(..) | Formula::Atom { .. } | Formula::Does { .. } => vec![],
            Formula::Not(a) => vec![a],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                vec![a, b]
            }
            Formula::Forall(_, a) | Formula::Exists(_, a) => vec![a],
            Formula::Wills { body, .. } => vec![body],
            Formula::Causes { antecedent, consequent } => vec![antecedent, consequent],
            Formula::For { behavior, purpose } => vec![behavior, purpose],
            Formula::Deontic { maxim, .. } => vec![maxim],
        }
    }

    /// Terms appearing directly at this node (not in children).
    pub fn node_terms(&self) -> Vec<&Term> {
        match self {
            Formula::Equals(a, b) => vec![a, b],
            Formula::Atom { args, .. } => args.iter().collect(),
            Formula::Does { agent, action } => vec![agent, action],
            Formula::Wills { agent, .. } => vec![agent],
            Formula::Forall(v, _) | Formula::Exists(v, _) => vec![v],
            _ => vec![],
        }
    }

    /// Maximum depth of any term in the formula.
    pub fn max_term_depth(&self) -> usize {
        let here = self.node_terms().iter().map(|t| t.depth()).max().unwrap_or(0);
        let below = self.children().iter().map(|c| c.max_term_depth()).max().unwrap_or(0);
        here.max(below)
    }

    /// Free variables, in first-occurrence order.
    pub fn free_vars(&self) -> Vec<Term> {
        fn walk(f: &Formula, bound: &mut Vec<String>, out: &mut Vec<Term>) {
            match f {
                Formula::Forall(v, body) | Formula::Exists(v, body) => {
                    bound.push(v.name().to_string());
                    walk(body, bound, out);
                    bound.pop();
                }
                _ => {
                    for t in f.node_terms() {
                        collect_term_vars(t, bound, out);
                    }
                    for c in f.children() {
                        walk(c, bound, out);
                    }
                }
            }
        }
        fn collect_term_vars(t: &Term, bound: &[String], out: &mut Vec<Term>) {
            match t {
                Term::Var { name, .. } => {
                    if !bound.iter().any(|b| b == name) && !out.iter().any(|v| v.name() == name) {
                        out.push(t.clone());
                    }
                }
                Term::Const { .. } => {}
                Term::App { args, .. } => {
                    for a in args {
                        collect_term_vars(a, bound, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Names of all binders anywhere in the formula.
    pub fn binder_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        fn walk(f: &Formula, out: &mut Vec<String>) {
            if let Formula::Forall(v, _) | Formula::Exists(v, _) = f {
                out.push(v.name().to_string());
            }
            for c in f.children() {
                walk(c, out);
            }
        }
        walk(self, &mut out);
        out
    }

    /// True when the formula contains no modal node (`Wills`, `For`,
    /// deontic wrappers). `Does` and `Causes` do not count: `Does` is an
    /// ordinary predicate and causal laws may appear in purposes.
    pub fn is_first_order(&self) -> bool {
        match self {
            Formula::Wills { .. } | Formula::For { .. } | Formula::Deontic { .. } => false,
            _ => self.children().iter().all(|c| c.is_first_order()),
        }
    }
}

/// Errors from the basic language operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("formula contains no Does node")]
    NoDoesNode,
    #[error("formula contains more than one Does node")]
    MultipleDoesNodes,
    #[error("substitution is not injective: two constants map to variable {0}")]
    NotInjective(String),
    #[error("substitution does not preserve sorts: {constant} has sort {constant_sort} but maps to {var}:{var_sort}")]
    SortViolation { constant: String, constant_sort: SortName, var: String, var_sort: SortName },
    #[error("substituting would capture variable {0} under an existing binder")]
    WouldCapture(String),
    #[error("maxim behavior must be a quantifier block over an optionally negated Does node")]
    MalformedBehavior,
    #[error("maxim purpose must be first-order (no Wills, For, or deontic nodes)")]
    MalformedPurpose,
    #[error("maxim agent {expected} does not match the behavior's Does agent {found}")]
    AgentMismatch { expected: String, found: String },
}

/// Every constant occurring in the formula, nested applications and
/// modal bodies included, in first-occurrence order.
pub fn collect_constants(formula: &Formula) -> Vec<Term> {
    fn collect_term(t: &Term, out: &mut Vec<Term>) {
        match t {
            Term::Const { .. } => {
                if !out.iter().any(|c| c == t) {
                    out.push(t.clone());
                }
            }
            Term::Var { .. } => {}
            Term::App { args, .. } => {
                for a in args {
                    collect_term(a, out);
                }
            }
        }
    }
    fn walk(f: &Formula, out: &mut Vec<Term>) {
        for t in f.node_terms() {
            collect_term(t, out);
        }
        for c in f.children() {
            walk(c, out);
        }
    }
    let mut out = Vec::new();
    walk(formula, &mut out);
    out
}

fn find_does(formula: &Formula) -> Result<(&Term, &Term), LangError> {
    fn walk<'a>(f: &'a Formula, found: &mut Vec<(&'a Term, &'a Term)>) {
        if let Formula::Does { agent, action } = f {
            found.push((agent, action));
        }
        for c in f.children() {
            walk(c, found);
        }
    }
    let mut found = Vec::new();
    walk(formula, &mut found);
    match found.len() {
        0 => Err(LangError::NoDoesNode),
        1 => Ok(found[0]),
        _ => Err(LangError::MultipleDoesNodes),
    }
}

/// Agent term of the unique `Does` node in the formula.
pub fn alpha_of(formula: &Formula) -> Result<Term, LangError> {
    find_does(formula).map(|(agent, _)| agent.clone())
}

/// Action term of the unique `Does` node in the formula.
pub fn beta_of(formula: &Formula) -> Result<Term, LangError> {
    find_does(formula).map(|(_, action)| action.clone())
}

/// A maxim: an agent's behavior performed for a purpose.
///
/// The behavior is an optionally quantified, optionally negated `Does`
/// whose agent position holds the owning agent; the purpose is a
/// first-order formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Maxim {
    pub agent: Term,
    pub behavior: Formula,
    pub purpose: Formula,
}

impl Maxim {
    /// Builds and validates a maxim. The agent is read off the behavior.
    pub fn new(behavior: Formula, purpose: Formula) -> Result<Self, LangError> {
        check_behavior_shape(&behavior)?;
        if !purpose.is_first_order() {
            return Err(LangError::MalformedPurpose);
        }
        let agent = alpha_of(&behavior)?;
        if !matches!(agent, Term::Const { .. }) {
            return Err(LangError::MalformedBehavior);
        }
        Ok(Maxim { agent, behavior, purpose })
    }

    pub fn to_formula(&self) -> Formula {
        Formula::for_maxim(self.behavior.clone(), self.purpose.clone())
    }

    /// The dual maxim with the behavior negated and re-normalized,
    /// used by the obligation duality.
    pub fn negate_behavior(&self) -> Result<Maxim, LangError> {
        let negated = normalize(&Formula::not(self.behavior.clone()));
        Maxim::new(negated, self.purpose.clone())
    }
}

/// Behavior grammar: one homogeneous quantifier block, then at most one
/// negation, then the `Does` node.
fn check_behavior_shape(behavior: &Formula) -> Result<(), LangError> {
    let mut cur = behavior;
    let universal = matches!(cur, Formula::Forall(..));
    loop {
        match cur {
            Formula::Forall(_, body) if universal => cur = body,
            Formula::Exists(_, body) if !universal => cur = body,
            _ => break,
        }
    }
    if let Formula::Not(inner) = cur {
        cur = inner;
    }
    match cur {
        Formula::Does { .. } => Ok(()),
        _ => Err(LangError::MalformedBehavior),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agent_const(name: &str) -> Term {
        Term::constant(name, SortName::agent())
    }

    fn false_promise(to: Term) -> Term {
        Term::app("falsePromise", vec![to], SortName::new("FalsePromise"))
    }

    #[test]
    fn collect_constants_walks_nested_applications() {
        let karli = agent_const("karli");
        let jan = agent_const("jan");
        let f = Formula::does(karli.clone(), false_promise(jan.clone()));
        assert_eq!(collect_constants(&f), vec![karli, jan]);
    }

    #[test]
    fn collect_constants_on_truth_is_empty() {
        assert!(collect_constants(&Formula::True).is_empty());
    }

    #[test]
    fn collect_constants_looks_under_modal_operators() {
        let karli = agent_const("karli");
        let f = Formula::wills(
            karli.clone(),
            Formula::atom("HasTravelMoney", vec![karli.clone()]),
        );
        assert_eq!(collect_constants(&f), vec![karli]);
    }

    #[test]
    fn accessors_on_plain_does() {
        let karli = agent_const("karli");
        let act = false_promise(agent_const("jan"));
        let f = Formula::does(karli.clone(), act.clone());
        assert_eq!(alpha_of(&f).unwrap(), karli);
        assert_eq!(beta_of(&f).unwrap(), act);
    }

    #[test]
    fn accessors_see_through_quantifier_and_negation() {
        let v = Term::var("ax", SortName::agent());
        let karli = agent_const("karli");
        let f = Formula::forall(
            v.clone(),
            Formula::not(Formula::does(
                karli.clone(),
                Term::app("help", vec![v], SortName::new("Action")),
            )),
        );
        assert_eq!(alpha_of(&f).unwrap(), karli);
    }

    #[test]
    fn accessors_reject_two_does_nodes() {
        let k = agent_const("k");
        let f = Formula::and(
            Formula::does(k.clone(), Term::constant("b", SortName::action())),
            Formula::does(k, Term::constant("c", SortName::action())),
        );
        assert_eq!(alpha_of(&f), Err(LangError::MultipleDoesNodes));
    }

    #[test]
    fn accessors_reject_zero_does_nodes() {
        assert_eq!(alpha_of(&Formula::True), Err(LangError::NoDoesNode));
    }

    #[test]
    fn maxim_requires_matching_shapes() {
        let karli = agent_const("karli");
        let behavior = Formula::does(karli.clone(), false_promise(agent_const("jan")));
        let purpose = Formula::atom("HasTravelMoney", vec![karli.clone()]);
        let m = Maxim::new(behavior, purpose).unwrap();
        assert_eq!(m.agent, karli);

        let bad_purpose = Formula::wills(karli.clone(), Formula::True);
        let behavior = Formula::does(karli, false_promise(agent_const("jan")));
        assert_eq!(Maxim::new(behavior, bad_purpose), Err(LangError::MalformedPurpose));
    }

    #[test]
    fn behavior_rejects_mixed_quantifier_blocks() {
        let x = Term::var("x", SortName::agent());
        let y = Term::var("y", SortName::agent());
        let karli = agent_const("karli");
        let inner = Formula::does(karli, Term::app("help", vec![x.clone()], SortName::action()));
        let mixed = Formula::forall(y, Formula::exists(x, inner));
        assert!(Maxim::new(mixed, Formula::True).is_err());
    }

    #[test]
    fn core_values_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Term>();
        assert_send_sync::<Formula>();
        assert_send_sync::<Maxim>();
        assert_send_sync::<Substitution>();
        assert_send_sync::<crate::kb::KnowledgeBase>();
    }

    #[test]
    fn negate_behavior_flips_quantifier() {
        let x = Term::var("ax", SortName::agent());
        let karli = agent_const("karli");
        let help = Term::app("help", vec![x.clone()], SortName::action());
        let never = Formula::forall(x.clone(), Formula::not(Formula::does(karli.clone(), help.clone())));
        let m = Maxim::new(never, Formula::atom("LeisureTime", vec![karli])).unwrap();
        let dual = m.negate_behavior().unwrap();
        assert!(matches!(dual.behavior, Formula::Exists(..)));
    }
}
