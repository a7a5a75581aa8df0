//! The universalization transform: from one agent's maxim to the law
//! that everyone with that purpose performs that behavior.
//!
//! Constants are split into two sets. The agent and every constant of
//! the purpose are universally quantified; the remaining behavior
//! constants are existentially quantified. A fresh variable is drawn
//! per constant, named from the first letter of its sort, in first
//! occurrence order. The transform is fully deterministic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{alpha_of, collect_constants, substitute, Formula, LangError, Maxim, Substitution, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UniversalizeError {
    #[error("behavior contains no Does node")]
    NoBehaviorAction,
    #[error("maxim agent must be a constant")]
    NonConstantAgent,
    #[error(transparent)]
    Lang(#[from] LangError),
}

/// The audited output of universalization: both constant sets, the
/// constant-to-variable mapping, and the resulting law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalizationRecord {
    /// The agent and the purpose constants, universally generalized.
    pub t_phi2: Vec<Term>,
    /// Behavior constants not already in `t_phi2`, existentially
    /// generalized.
    pub t_phi1: Vec<Term>,
    pub sigma: Substitution,
    pub ul_formula: Formula,
}

/// Builds the universal law of a maxim.
pub fn universalize(maxim: &Maxim) -> Result<UniversalizationRecord, UniversalizeError> {
    if alpha_of(&maxim.behavior).is_err() {
        return Err(UniversalizeError::NoBehaviorAction);
    }
    if !matches!(maxim.agent, Term::Const { .. }) {
        return Err(UniversalizeError::NonConstantAgent);
    }

    // T2: agent first, then purpose constants left to right.
    let mut t_phi2: Vec<Term> = vec![maxim.agent.clone()];
    for c in collect_constants(&maxim.purpose) {
        if !t_phi2.contains(&c) {
            t_phi2.push(c);
        }
    }

    // T1: behavior constants left to right, minus T2. A constant that
    // *is* the action term of the Does node names the action itself and
    // stays, like a function symbol would.
    let bare_action = match crate::lang::beta_of(&maxim.behavior) {
        Ok(t @ Term::Const { .. }) => Some(t),
        _ => None,
    };
    let mut t_phi1: Vec<Term> = Vec::new();
    for c in collect_constants(&maxim.behavior) {
        if t_phi2.contains(&c) || t_phi1.contains(&c) {
            continue;
        }
        if bare_action.as_ref() == Some(&c) {
            continue;
        }
        t_phi1.push(c);
    }

    // Fresh variables. Avoid names already bound inside the maxim.
    let mut taken: Vec<String> = maxim.behavior.binder_names();
    taken.extend(maxim.purpose.binder_names());
    let mut sigma = Substitution::new();
    for c in t_phi2.iter().chain(&t_phi1) {
        let var = fresh_var(c, &taken);
        taken.push(var.name().to_string());
        sigma.insert(c.clone(), var).map_err(UniversalizeError::Lang)?;
    }

    let behavior_subst = substitute(&maxim.behavior, &sigma).map_err(UniversalizeError::Lang)?;
    let purpose_subst = substitute(&maxim.purpose, &sigma).map_err(UniversalizeError::Lang)?;
    let agent_var = sigma
        .get(&maxim.agent)
        .cloned()
        .expect("agent is in the substitution domain");

    // A universally quantified omission hoists its own binders into the
    // law's universal block: "nobody with the purpose does it to anyone".
    let (hoisted, core_behavior) = match hoistable_omission(&behavior_subst) {
        Some((vars, inner)) => (vars, inner),
        None => (Vec::new(), behavior_subst),
    };

    let mut consequent = core_behavior;
    for v in t_phi1.iter().rev() {
        let var = sigma.get(v).cloned().expect("t1 is in the substitution domain");
        consequent = Formula::exists(var, consequent);
    }

    let mut law = Formula::implies(Formula::wills(agent_var, purpose_subst), consequent);
    for v in hoisted.iter().rev() {
        law = Formula::forall(v.clone(), law);
    }
    // Universal block: agent-sorted variables first, then the rest, each
    // group in first-occurrence order.
    let universals = ordered_universals(&t_phi2, &sigma);
    for v in universals.into_iter().rev() {
        law = Formula::forall(v, law);
    }

    Ok(UniversalizationRecord { t_phi2, t_phi1, sigma, ul_formula: law })
}

fn fresh_var(constant: &Term, taken: &[String]) -> Term {
    let initial = constant
        .sort()
        .as_str()
        .chars()
        .next()
        .map(|c| c.to_ascii_lowercase())
        .unwrap_or('v');
    let mut n = 1usize;
    loop {
        let name = format!("{initial}{n}");
        if !taken.contains(&name) {
            return Term::var(name, constant.sort().clone());
        }
        n += 1;
    }
}

fn ordered_universals(t_phi2: &[Term], sigma: &Substitution) -> Vec<Term> {
    let mut vars: Vec<Term> = Vec::new();
    let agent_sort = crate::lang::SortName::agent();
    for c in t_phi2.iter().filter(|c| *c.sort() == agent_sort) {
        vars.push(sigma.get(c).cloned().expect("t2 mapped"));
    }
    for c in t_phi2.iter().filter(|c| *c.sort() != agent_sort) {
        vars.push(sigma.get(c).cloned().expect("t2 mapped"));
    }
    vars
}

/// Splits `forall x... not Does(...)` into its binders and body.
fn hoistable_omission(behavior: &Formula) -> Option<(Vec<Term>, Formula)> {
    let mut vars = Vec::new();
    let mut cur = behavior;
    while let Formula::Forall(v, body) = cur {
        vars.push(v.clone());
        cur = body;
    }
    if vars.is_empty() {
        return None;
    }
    match cur {
        Formula::Not(inner) if matches!(inner.as_ref(), Formula::Does { .. }) => {
            Some((vars, cur.clone()))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{alpha_equivalent, SortName};
    use crate::render::render_formula;

    fn agent(name: &str) -> Term {
        Term::constant(name, SortName::agent())
    }

    #[test]
    fn plain_behavior_with_fresh_purpose_constant() {
        // Behavior names a second agent; the purpose names only the agent.
        let karli = agent("karli");
        let jan = agent("jan");
        let behavior = Formula::does(
            karli.clone(),
            Term::app("falsePromise", vec![jan.clone()], SortName::new("FalsePromise")),
        );
        let purpose = Formula::atom("HasTravelMoney", vec![karli.clone()]);
        let m = Maxim::new(behavior, purpose).unwrap();
        let rec = universalize(&m).unwrap();

        assert_eq!(rec.t_phi2, vec![karli]);
        assert_eq!(rec.t_phi1, vec![jan]);
        assert_eq!(
            render_formula(&rec.ul_formula),
            "forall a1:Agent. Wills(a1, HasTravelMoney(a1)) -> \
             (exists a2:Agent. Does(a1, falsePromise(a2)))"
        );
    }

    #[test]
    fn nullary_action_symbol_is_not_generalized() {
        let karli = agent("karli");
        let behavior = Formula::does(karli.clone(), Term::constant("sing", SortName::action()));
        let purpose = Formula::atom("Happy", vec![karli.clone()]);
        let m = Maxim::new(behavior, purpose).unwrap();
        let rec = universalize(&m).unwrap();
        assert!(rec.t_phi1.is_empty());
        assert_eq!(
            render_formula(&rec.ul_formula),
            "forall a1:Agent. Wills(a1, Happy(a1)) -> Does(a1, sing)"
        );
    }

    #[test]
    fn universal_omission_hoists_behavior_binders() {
        let karli = agent("karli");
        let ax = Term::var("ax", SortName::agent());
        let behavior = Formula::forall(
            ax.clone(),
            Formula::not(Formula::does(
                karli.clone(),
                Term::app("help", vec![ax.clone()], SortName::action()),
            )),
        );
        let purpose = Formula::atom("LeisureTime", vec![karli]);
        let m = Maxim::new(behavior, purpose).unwrap();
        let rec = universalize(&m).unwrap();
        assert_eq!(
            render_formula(&rec.ul_formula),
            "forall a1:Agent. forall ax:Agent. Wills(a1, LeisureTime(a1)) -> \
             not Does(a1, help(ax))"
        );
    }

    #[test]
    fn law_is_closed_and_constant_free() {
        let karli = agent("karli");
        let jan = agent("jan");
        let job = Term::constant("j", SortName::new("Job"));
        let behavior = Formula::does(
            karli.clone(),
            Term::app("murder", vec![jan.clone()], SortName::action()),
        );
        let purpose = Formula::and(
            Formula::atom("HiredOver", vec![karli.clone(), job.clone(), jan.clone()]),
            Formula::atom("SecurelyPoss", vec![karli.clone(), job.clone()]),
        );
        let m = Maxim::new(behavior, purpose).unwrap();
        let rec = universalize(&m).unwrap();
        assert!(rec.ul_formula.is_closed());
        assert!(collect_constants(&rec.ul_formula).is_empty());
        // All three constants universalized, agents before the job.
        assert_eq!(
            render_formula(&rec.ul_formula),
            "forall a1:Agent. forall a2:Agent. forall j1:Job. \
             Wills(a1, HiredOver(a1, j1, a2) and SecurelyPoss(a1, j1)) -> Does(a1, murder(a2))"
        );
        assert!(rec.t_phi1.is_empty());
    }

    #[test]
    fn deterministic_output() {
        let karli = agent("karli");
        let jan = agent("jan");
        let behavior = Formula::does(
            karli.clone(),
            Term::app("falsePromise", vec![jan], SortName::new("FalsePromise")),
        );
        let purpose = Formula::atom("HasTravelMoney", vec![karli]);
        let m = Maxim::new(behavior, purpose).unwrap();
        let a = universalize(&m).unwrap();
        let b = universalize(&m).unwrap();
        assert_eq!(render_formula(&a.ul_formula), render_formula(&b.ul_formula));
        assert!(alpha_equivalent(&a.ul_formula, &b.ul_formula));
    }
}
