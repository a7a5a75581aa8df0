//! The rule passes driven by [`saturate`](super::saturate).
//!
//! Every pass reads the round-start fact set and emits candidates; the
//! caller inserts them, deduplicating against canonical forms. Passes
//! run in a fixed order and iterate facts in id order, so rounds are
//! deterministic.
//!
//! Implication facts are never instantiated eagerly: modus ponens and
//! modus tollens work schematically, unifying the stripped antecedent
//! or negated consequent against the fact set and universally closing
//! whatever stays unbound. Plain universal facts are instantiated
//! term-guided, one variable at a time, over the ground terms in play.

use crate::kb::FnDecl;
use crate::lang::{alpha_of, ground_variable, normalize, Formula, Term};

use super::unify::{terms_in_play, Matcher};
use super::{DerivationContext, Fact, RuleKind, ScopeTag};

pub(crate) struct Candidate {
    pub formula: Formula,
    pub rule: RuleKind,
    pub note: Option<String>,
    pub premises: Vec<usize>,
    pub terms: Vec<Term>,
    pub min_scope: ScopeTag,
}

impl Candidate {
    fn new(formula: Formula, rule: RuleKind, premises: Vec<usize>) -> Self {
        Candidate {
            formula,
            rule,
            note: None,
            premises,
            terms: Vec::new(),
            min_scope: ScopeTag::Background,
        }
    }
}

/// Splits a canonical fact into its universal prefix and body.
pub(crate) fn strip_foralls(formula: &Formula) -> (Vec<Term>, &Formula) {
    let mut vars = Vec::new();
    let mut cur = formula;
    while let Formula::Forall(v, body) = cur {
        vars.push(v.clone());
        cur = body;
    }
    (vars, cur)
}

/// Universally closes the free `?`-variables a matcher left behind,
/// then normalizes.
pub(crate) fn close(formula: &Formula) -> Formula {
    let mut out = formula.clone();
    for v in formula.free_vars().into_iter().rev() {
        out = Formula::forall(v, out);
    }
    normalize(&out)
}

/// Rebuilds a universal prefix over exactly the variables still free in
/// the body, preserving their original order.
fn rewrap(vars: &[Term], body: Formula) -> Formula {
    let free = body.free_vars();
    let mut out = body;
    for v in vars.iter().rev() {
        if free.iter().any(|f| f.name() == v.name()) {
            out = Formula::forall(v.clone(), out);
        }
    }
    normalize(&out)
}

pub(crate) fn run_round(ctx: &mut DerivationContext) -> Vec<Candidate> {
    let mut out = Vec::new();
    cause_discharge_pass(ctx, &mut out);
    will_consistency_pass(ctx, &mut out);
    maxim_split_pass(ctx, &mut out);
    iff_elim_pass(ctx, &mut out);
    and_elim_pass(ctx, &mut out);
    exists_witness_pass(ctx, &mut out);
    universal_elim_pass(ctx, &mut out);
    refine_pass(ctx, &mut out);
    modus_ponens_pass(ctx, &mut out);
    modus_tollens_pass(ctx, &mut out);
    out
}

/// `Causes(a, c)`, possibly under a universal prefix, yields the plain
/// implication `a -> c`.
fn cause_discharge_pass(ctx: &DerivationContext, out: &mut Vec<Candidate>) {
    for fact in ctx.facts() {
        let (vars, body) = strip_foralls(&fact.formula);
        if let Formula::Causes { antecedent, consequent } = body {
            let implication = Formula::implies((**antecedent).clone(), (**consequent).clone());
            out.push(Candidate::new(
                rewrap(&vars, implication),
                RuleKind::CauseDischarge,
                vec![fact.id],
            ));
        }
    }
}

/// Willing something rules out willing the opposite.
fn will_consistency_pass(ctx: &DerivationContext, out: &mut Vec<Candidate>) {
    for fact in ctx.facts() {
        let (vars, body) = strip_foralls(&fact.formula);
        if let Formula::Wills { agent, body: willed } = body {
            let opposite = Formula::wills(agent.clone(), normalize(&Formula::not((**willed).clone())));
            out.push(Candidate::new(
                rewrap(&vars, Formula::not(opposite)),
                RuleKind::WillConsistency,
                vec![fact.id],
            ));
        }
    }
}

/// A stored maxim splits into its behavior, the agent willing its
/// purpose, and the causal commitment between the two.
fn maxim_split_pass(ctx: &DerivationContext, out: &mut Vec<Candidate>) {
    for fact in ctx.facts() {
        if let Formula::For { behavior, purpose } = &fact.formula {
            out.push(Candidate::new(
                normalize(behavior),
                RuleKind::MaximSplit,
                vec![fact.id],
            ));
            if let Ok(agent) = alpha_of(behavior) {
                out.push(Candidate::new(
                    normalize(&Formula::wills(agent, (**purpose).clone())),
                    RuleKind::MaximSplit,
                    vec![fact.id],
                ));
            }
            out.push(Candidate::new(
                normalize(&Formula::causes((**behavior).clone(), (**purpose).clone())),
                RuleKind::MaximCause,
                vec![fact.id],
            ));
        }
    }
}

fn iff_elim_pass(ctx: &DerivationContext, out: &mut Vec<Candidate>) {
    for fact in ctx.facts() {
        let (vars, body) = strip_foralls(&fact.formula);
        if let Formula::Iff(a, b) = body {
            out.push(Candidate::new(
                rewrap(&vars, Formula::implies((**a).clone(), (**b).clone())),
                RuleKind::IffElim,
                vec![fact.id],
            ));
            out.push(Candidate::new(
                rewrap(&vars, Formula::implies((**b).clone(), (**a).clone())),
                RuleKind::IffElim,
                vec![fact.id],
            ));
        }
    }
}

fn and_elim_pass(ctx: &DerivationContext, out: &mut Vec<Candidate>) {
    for fact in ctx.facts() {
        let (vars, body) = strip_foralls(&fact.formula);
        if let Formula::And(a, b) = body {
            out.push(Candidate::new(
                rewrap(&vars, (**a).clone()),
                RuleKind::AndElim,
                vec![fact.id],
            ));
            out.push(Candidate::new(
                rewrap(&vars, (**b).clone()),
                RuleKind::AndElim,
                vec![fact.id],
            ));
        }
    }
}

/// Introduces fresh witness constants for a top-level existential fact.
/// Each existential is witnessed once; witness inequalities come only
/// from the existential's own body.
fn exists_witness_pass(ctx: &mut DerivationContext, out: &mut Vec<Candidate>) {
    for id in 0..ctx.facts().len() {
        if ctx.witnessed.contains(&id) {
            continue;
        }
        if !matches!(ctx.facts()[id].formula, Formula::Exists(..)) {
            continue;
        }
        ctx.witnessed.push(id);
        let mut body = ctx.facts()[id].formula.clone();
        let mut skolems = Vec::new();
        while let Formula::Exists(v, inner) = body {
            let witness = ctx.fresh_skolem(v.sort());
            skolems.push(witness.clone());
            body = ground_variable(&inner, &v, &witness);
        }
        let mut candidate = Candidate::new(normalize(&body), RuleKind::ExistsWitness, vec![id]);
        candidate.terms = skolems;
        out.push(candidate);
    }
}

/// Term-guided instantiation of plain universal facts. Implications are
/// left to the schematic modus ponens and tollens passes.
fn universal_elim_pass(ctx: &DerivationContext, out: &mut Vec<Candidate>) {
    let universe = terms_in_play(ctx.facts(), ctx.limits.max_term_depth);
    for fact in ctx.facts() {
        let Formula::Forall(var, body) = &fact.formula else { continue };
        let (_, core) = strip_foralls(&fact.formula);
        if matches!(core, Formula::Implies(..)) {
            continue;
        }
        for term in &universe {
            if !ctx.sorts.is_subsort(term.sort(), var.sort()) {
                continue;
            }
            let instance = normalize(&ground_variable(body, var, term));
            let mut candidate = Candidate::new(instance, RuleKind::UniversalElim, vec![fact.id]);
            candidate.terms = vec![term.clone()];
            out.push(candidate);
        }
    }
}

/// Rewrites every application of a general function symbol to a symbol
/// declared to refine it. Result sorts follow the refining declaration.
pub(crate) fn refine_formula(f: &Formula, refining: &FnDecl, refined: &FnDecl) -> Formula {
    fn term(t: &Term, refining: &FnDecl, refined: &FnDecl) -> Term {
        match t {
            Term::Var { .. } | Term::Const { .. } => t.clone(),
            Term::App { func, args, .. } => {
                let args: Vec<Term> = args.iter().map(|a| term(a, refining, refined)).collect();
                if *func == refined.name {
                    Term::App { func: refining.name.clone(), args, sort: refining.result.clone() }
                } else {
                    Term::App { func: func.clone(), args, sort: t.sort().clone() }
                }
            }
        }
    }
    fn walk(f: &Formula, refining: &FnDecl, refined: &FnDecl) -> Formula {
        match f {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Not(a) => Formula::not(walk(a, refining, refined)),
            Formula::And(a, b) => Formula::and(walk(a, refining, refined), walk(b, refining, refined)),
            Formula::Or(a, b) => Formula::or(walk(a, refining, refined), walk(b, refining, refined)),
            Formula::Implies(a, b) => {
                Formula::implies(walk(a, refining, refined), walk(b, refining, refined))
            }
            Formula::Iff(a, b) => Formula::iff(walk(a, refining, refined), walk(b, refining, refined)),
            Formula::Forall(v, body) => Formula::forall(v.clone(), walk(body, refining, refined)),
            Formula::Exists(v, body) => Formula::exists(v.clone(), walk(body, refining, refined)),
            Formula::Equals(a, b) => {
                Formula::Equals(term(a, refining, refined), term(b, refining, refined))
            }
            Formula::Atom { pred, args } => Formula::Atom {
                pred: pred.clone(),
                args: args.iter().map(|t| term(t, refining, refined)).collect(),
            },
            Formula::Does { agent, action } => Formula::does(
                term(agent, refining, refined),
                term(action, refining, refined),
            ),
            Formula::Wills { agent, body } => Formula::wills(
                term(agent, refining, refined),
                walk(body, refining, refined),
            ),
            Formula::Causes { antecedent, consequent } => Formula::causes(
                walk(antecedent, refining, refined),
                walk(consequent, refining, refined),
            ),
            Formula::For { behavior, purpose } => Formula::for_maxim(
                walk(behavior, refining, refined),
                walk(purpose, refining, refined),
            ),
            Formula::Deontic { op, maxim } => Formula::deontic(*op, walk(maxim, refining, refined)),
        }
    }
    walk(f, refining, refined)
}

fn mentions_function(f: &Formula, name: &str) -> bool {
    fn term_mentions(t: &Term, name: &str) -> bool {
        match t {
            Term::Var { .. } | Term::Const { .. } => false,
            Term::App { func, args, .. } => {
                func == name || args.iter().any(|a| term_mentions(a, name))
            }
        }
    }
    f.node_terms().iter().any(|t| term_mentions(t, name))
        || f.children().iter().any(|c| mentions_function(c, name))
}

/// A general statement instantiates with its refining symbols:
/// a universal fact about the refined symbol holds of the refinement.
fn refine_pass(ctx: &DerivationContext, out: &mut Vec<Candidate>) {
    for fact in ctx.facts() {
        if !matches!(fact.formula, Formula::Forall(..)) {
            continue;
        }
        for (refining, refined) in &ctx.refinements {
            if !mentions_function(&fact.formula, &refined.name) {
                continue;
            }
            let rewritten = normalize(&refine_formula(&fact.formula, refining, refined));
            let mut candidate = Candidate::new(rewritten, RuleKind::RefineElim, vec![fact.id]);
            candidate.note = Some(format!("{} refines {}", refining.name, refined.name));
            out.push(candidate);
        }
    }
}

/// Prepares an implication fact for schematic use: prefix variables
/// become conclusion variables of a fresh matcher.
fn schematic_implication<'m>(
    fact: &Fact,
    matcher: &mut Matcher<'m>,
) -> Option<(Formula, Formula)> {
    let (vars, body) = strip_foralls(&fact.formula);
    let Formula::Implies(antecedent, consequent) = body else {
        return None;
    };
    let mut antecedent = (**antecedent).clone();
    let mut consequent = (**consequent).clone();
    for v in vars {
        let fresh = matcher.add_conclusion_var(v.sort().clone());
        antecedent = ground_variable(&antecedent, &v, &fresh);
        consequent = ground_variable(&consequent, &v, &fresh);
    }
    Some((antecedent, consequent))
}

fn modus_ponens_pass(ctx: &DerivationContext, out: &mut Vec<Candidate>) {
    let facts: Vec<&Fact> = ctx.facts().iter().collect();
    for fact in ctx.facts() {
        let mut matcher = Matcher::new(&ctx.sorts, &ctx.declared_constants);
        let Some((antecedent, consequent)) = schematic_implication(fact, &mut matcher) else {
            continue;
        };
        let mut found: Vec<(Formula, Vec<usize>)> = Vec::new();
        matcher.establish_all(&antecedent, &facts, |m, support| {
            let conclusion = m.apply(&consequent);
            if !m.leaks_eigenvariables(&conclusion) {
                found.push((close(&conclusion), support.to_vec()));
            }
            false
        });
        for (formula, support) in found {
            let mut premises = vec![fact.id];
            premises.extend(support);
            out.push(Candidate::new(formula, RuleKind::ModusPonens, premises));
        }
    }
}

fn modus_tollens_pass(ctx: &DerivationContext, out: &mut Vec<Candidate>) {
    let facts: Vec<&Fact> = ctx.facts().iter().collect();
    for fact in ctx.facts() {
        let mut matcher = Matcher::new(&ctx.sorts, &ctx.declared_constants);
        let Some((antecedent, consequent)) = schematic_implication(fact, &mut matcher) else {
            continue;
        };
        let negated_consequent = normalize(&Formula::not(consequent));
        let mut found: Vec<(Formula, Vec<usize>)> = Vec::new();
        matcher.establish_all(&negated_consequent, &facts, |m, support| {
            let conclusion = m.apply(&Formula::not(antecedent.clone()));
            if !m.leaks_eigenvariables(&conclusion) {
                found.push((close(&conclusion), support.to_vec()));
            }
            false
        });
        for (formula, support) in found {
            let mut premises = vec![fact.id];
            premises.extend(support);
            out.push(Candidate::new(formula, RuleKind::ModusTollens, premises));
        }
    }
}
