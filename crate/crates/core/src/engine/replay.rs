//! Independent step checker for derivation traces.
//!
//! Walks a finished context fact by fact and re-validates each step in
//! isolation: premises must precede the fact, the scope must not exceed
//! what the premises license, and the recorded rule must genuinely
//! produce the recorded formula from exactly the recorded premises.
//! The saturation loop plays no part here.

use thiserror::Error;

use crate::kb::KnowledgeBase;
use crate::lang::{alpha_of, complement, ground_variable, normalize, Formula, Maxim, Term};
use crate::render::render_formula;

use super::rules::{close, refine_formula, strip_foralls};
use super::unify::Matcher;
use super::{DerivationContext, Fact, RuleKind, ScopeTag};

/// The construction inputs of a willed-universal-law context, needed to
/// re-check its seeded facts.
#[derive(Debug, Clone)]
pub struct WulSetup {
    pub maxim: Maxim,
    pub ul_formula: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("fact {fact}: premise {premise} does not precede it")]
    PremiseOrder { fact: usize, premise: usize },
    #[error("fact {fact}: scope exceeds what its premises license")]
    ScopeViolation { fact: usize },
    #[error("fact {fact}: not in canonical form")]
    NotCanonical { fact: usize },
    #[error("fact {fact}: {rule} does not derive `{formula}` from the recorded premises")]
    StepMismatch { fact: usize, rule: &'static str, formula: String },
    #[error("fact {fact}: witness {witness} is not fresh")]
    StaleWitness { fact: usize, witness: String },
    #[error("fact {fact}: seeded fact does not match the construction inputs")]
    BadSeed { fact: usize },
}

/// Re-verifies every fact of a finished derivation.
pub fn verify_trace(
    ctx: &DerivationContext,
    kb: &KnowledgeBase,
    setup: Option<&WulSetup>,
) -> Result<(), ReplayError> {
    for fact in ctx.facts() {
        verify_fact(ctx, kb, setup, fact)?;
    }
    Ok(())
}

fn mismatch(fact: &Fact) -> ReplayError {
    ReplayError::StepMismatch {
        fact: fact.id,
        rule: fact.rule.as_str(),
        formula: render_formula(&fact.formula),
    }
}

fn verify_fact(
    ctx: &DerivationContext,
    kb: &KnowledgeBase,
    setup: Option<&WulSetup>,
    fact: &Fact,
) -> Result<(), ReplayError> {
    if fact.formula != normalize(&fact.formula) {
        return Err(ReplayError::NotCanonical { fact: fact.id });
    }
    for &p in &fact.premises {
        if p >= fact.id {
            return Err(ReplayError::PremiseOrder { fact: fact.id, premise: p });
        }
    }
    let premises: Vec<&Fact> = fact.premises.iter().map(|&p| ctx.fact(p)).collect();
    if !fact.premises.is_empty() {
        let licensed = premises.iter().map(|p| p.scope).max().expect("non-empty");
        if fact.scope != licensed {
            return Err(ReplayError::ScopeViolation { fact: fact.id });
        }
    }

    let agent = ctx.willed_agent.as_ref();
    match fact.rule {
        RuleKind::Axiom => {
            let name = fact.note.as_deref().unwrap_or_default();
            let ax = kb
                .axioms
                .iter()
                .find(|a| a.name == name)
                .ok_or(ReplayError::BadSeed { fact: fact.id })?;
            if fact.scope != ScopeTag::Background || fact.formula != normalize(&ax.formula) {
                return Err(ReplayError::BadSeed { fact: fact.id });
            }
            Ok(())
        }
        RuleKind::WillUniversalLaw => {
            let setup = setup.ok_or(ReplayError::BadSeed { fact: fact.id })?;
            if fact.scope != ScopeTag::Willed || fact.formula != normalize(&setup.ul_formula) {
                return Err(ReplayError::BadSeed { fact: fact.id });
            }
            Ok(())
        }
        RuleKind::MaximBehavior => {
            let setup = setup.ok_or(ReplayError::BadSeed { fact: fact.id })?;
            if fact.scope != ScopeTag::Willed || fact.formula != normalize(&setup.maxim.behavior) {
                return Err(ReplayError::BadSeed { fact: fact.id });
            }
            Ok(())
        }
        RuleKind::MaximPurpose => {
            let setup = setup.ok_or(ReplayError::BadSeed { fact: fact.id })?;
            let expected = normalize(&Formula::wills(
                setup.maxim.agent.clone(),
                setup.maxim.purpose.clone(),
            ));
            if fact.scope != ScopeTag::Willed || fact.formula != expected {
                return Err(ReplayError::BadSeed { fact: fact.id });
            }
            Ok(())
        }
        RuleKind::MaximCausal => {
            let setup = setup.ok_or(ReplayError::BadSeed { fact: fact.id })?;
            let expected = normalize(&Formula::causes(
                setup.maxim.behavior.clone(),
                setup.maxim.purpose.clone(),
            ));
            if fact.scope != ScopeTag::Willed || fact.formula != expected {
                return Err(ReplayError::BadSeed { fact: fact.id });
            }
            Ok(())
        }
        RuleKind::Necessity => {
            let agent = agent.ok_or(ReplayError::BadSeed { fact: fact.id })?;
            let name = fact.note.as_deref().unwrap_or_default();
            let schema = kb
                .necessities
                .iter()
                .find(|n| n.name == name)
                .ok_or(ReplayError::BadSeed { fact: fact.id })?;
            if fact.scope != ScopeTag::Willed
                || fact.formula != normalize(&schema.instantiate(agent))
            {
                return Err(ReplayError::BadSeed { fact: fact.id });
            }
            Ok(())
        }
        RuleKind::CauseDischarge => {
            let [premise] = premises.as_slice() else { return Err(mismatch(fact)) };
            let (vars, body) = strip_foralls(&premise.formula);
            let Formula::Causes { antecedent, consequent } = body else {
                return Err(mismatch(fact));
            };
            let rebuilt = rewrap_for_check(
                &vars,
                Formula::implies((**antecedent).clone(), (**consequent).clone()),
            );
            expect_equal(fact, &rebuilt)
        }
        RuleKind::WillConsistency => {
            let [premise] = premises.as_slice() else { return Err(mismatch(fact)) };
            let (vars, body) = strip_foralls(&premise.formula);
            let Formula::Wills { agent, body: willed } = body else {
                return Err(mismatch(fact));
            };
            let opposite =
                Formula::wills(agent.clone(), normalize(&Formula::not((**willed).clone())));
            let rebuilt = rewrap_for_check(&vars, Formula::not(opposite));
            expect_equal(fact, &rebuilt)
        }
        RuleKind::MaximSplit => {
            let [premise] = premises.as_slice() else { return Err(mismatch(fact)) };
            let Formula::For { behavior, purpose } = &premise.formula else {
                return Err(mismatch(fact));
            };
            let behavior_fact = normalize(behavior);
            let wills_fact = alpha_of(behavior)
                .map(|a| normalize(&Formula::wills(a, (**purpose).clone())))
                .ok();
            if fact.formula == behavior_fact || Some(&fact.formula) == wills_fact.as_ref() {
                Ok(())
            } else {
                Err(mismatch(fact))
            }
        }
        RuleKind::MaximCause => {
            let [premise] = premises.as_slice() else { return Err(mismatch(fact)) };
            let Formula::For { behavior, purpose } = &premise.formula else {
                return Err(mismatch(fact));
            };
            let expected =
                normalize(&Formula::causes((**behavior).clone(), (**purpose).clone()));
            expect_equal(fact, &expected)
        }
        RuleKind::IffElim => {
            let [premise] = premises.as_slice() else { return Err(mismatch(fact)) };
            let (vars, body) = strip_foralls(&premise.formula);
            let Formula::Iff(a, b) = body else { return Err(mismatch(fact)) };
            let forward = rewrap_for_check(&vars, Formula::implies((**a).clone(), (**b).clone()));
            let backward = rewrap_for_check(&vars, Formula::implies((**b).clone(), (**a).clone()));
            if fact.formula == forward || fact.formula == backward {
                Ok(())
            } else {
                Err(mismatch(fact))
            }
        }
        RuleKind::AndElim => {
            let [premise] = premises.as_slice() else { return Err(mismatch(fact)) };
            let (vars, body) = strip_foralls(&premise.formula);
            let Formula::And(a, b) = body else { return Err(mismatch(fact)) };
            let left = rewrap_for_check(&vars, (**a).clone());
            let right = rewrap_for_check(&vars, (**b).clone());
            if fact.formula == left || fact.formula == right {
                Ok(())
            } else {
                Err(mismatch(fact))
            }
        }
        RuleKind::ExistsWitness => {
            let [premise] = premises.as_slice() else { return Err(mismatch(fact)) };
            let mut body = premise.formula.clone();
            let mut recorded = fact.terms.iter();
            while let Formula::Exists(v, inner) = body {
                let witness = recorded.next().ok_or_else(|| mismatch(fact))?;
                let Term::Const { name, sort } = witness else { return Err(mismatch(fact)) };
                if sort != v.sort() {
                    return Err(mismatch(fact));
                }
                // Fresh: unseen in any earlier fact and not declared.
                if kb.constant(name).is_some() {
                    return Err(ReplayError::StaleWitness { fact: fact.id, witness: name.clone() });
                }
                for earlier in ctx.facts().iter().take(fact.id) {
                    if formula_mentions_constant(&earlier.formula, name) {
                        return Err(ReplayError::StaleWitness {
                            fact: fact.id,
                            witness: name.clone(),
                        });
                    }
                }
                body = ground_variable(&inner, &v, witness);
            }
            if recorded.next().is_some() {
                return Err(mismatch(fact));
            }
            expect_equal(fact, &normalize(&body))
        }
        RuleKind::UniversalElim => {
            let [premise] = premises.as_slice() else { return Err(mismatch(fact)) };
            let Formula::Forall(var, body) = &premise.formula else {
                return Err(mismatch(fact));
            };
            let [term] = fact.terms.as_slice() else { return Err(mismatch(fact)) };
            if !term.is_ground() || !kb.sorts.is_subsort(term.sort(), var.sort()) {
                return Err(mismatch(fact));
            }
            expect_equal(fact, &normalize(&ground_variable(body, var, term)))
        }
        RuleKind::RefineElim => {
            let [premise] = premises.as_slice() else { return Err(mismatch(fact)) };
            for (refining, refined) in kb.refinements() {
                let rewritten = normalize(&refine_formula(&premise.formula, refining, refined));
                if rewritten == fact.formula {
                    return Ok(());
                }
            }
            Err(mismatch(fact))
        }
        RuleKind::ModusPonens => {
            let Some((implication, support)) = premises.split_first() else {
                return Err(mismatch(fact));
            };
            let mut matcher = Matcher::new(&kb.sorts, &ctx.declared_constants);
            let Some((antecedent, consequent)) =
                schematic_for_check(implication, &mut matcher)
            else {
                return Err(mismatch(fact));
            };
            let support: Vec<&Fact> = support.to_vec();
            let mut reproduced = false;
            matcher.establish_all(&antecedent, &support, |m, _| {
                let conclusion = m.apply(&consequent);
                if !m.leaks_eigenvariables(&conclusion) && close(&conclusion) == fact.formula {
                    reproduced = true;
                }
                reproduced
            });
            if reproduced {
                Ok(())
            } else {
                Err(mismatch(fact))
            }
        }
        RuleKind::ModusTollens => {
            let Some((implication, support)) = premises.split_first() else {
                return Err(mismatch(fact));
            };
            let mut matcher = Matcher::new(&kb.sorts, &ctx.declared_constants);
            let Some((antecedent, consequent)) =
                schematic_for_check(implication, &mut matcher)
            else {
                return Err(mismatch(fact));
            };
            let support: Vec<&Fact> = support.to_vec();
            let negated = normalize(&Formula::not(consequent));
            let mut reproduced = false;
            matcher.establish_all(&negated, &support, |m, _| {
                let conclusion = m.apply(&Formula::not(antecedent.clone()));
                if !m.leaks_eigenvariables(&conclusion) && close(&conclusion) == fact.formula {
                    reproduced = true;
                }
                reproduced
            });
            if reproduced {
                Ok(())
            } else {
                Err(mismatch(fact))
            }
        }
    }
}

/// Checks the stored contradiction pair really is complementary.
pub fn verify_complement(positive: &Formula, negative: &Formula) -> bool {
    complement(positive) == normalize(negative)
}

fn expect_equal(fact: &Fact, expected: &Formula) -> Result<(), ReplayError> {
    if &fact.formula == expected {
        Ok(())
    } else {
        Err(mismatch(fact))
    }
}

fn rewrap_for_check(vars: &[Term], body: Formula) -> Formula {
    let free = body.free_vars();
    let mut out = body;
    for v in vars.iter().rev() {
        if free.iter().any(|f| f.name() == v.name()) {
            out = Formula::forall(v.clone(), out);
        }
    }
    normalize(&out)
}

fn schematic_for_check(fact: &Fact, matcher: &mut Matcher) -> Option<(Formula, Formula)> {
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

fn formula_mentions_constant(f: &Formula, name: &str) -> bool {
    fn term_mentions(t: &Term, name: &str) -> bool {
        match t {
            Term::Const { name: n, .. } => n == name,
            Term::Var { .. } => false,
            Term::App { args, .. } => args.iter().any(|a| term_mentions(a, name)),
        }
    }
    f.node_terms().iter().any(|t| term_mentions(t, name))
        || f.children().iter().any(|c| formula_mentions_constant(c, name))
}
