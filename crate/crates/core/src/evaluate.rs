//! Verdicts: permissibility, impermissibility and obligation of maxims,
//! with contradiction classification into duty kinds.
//!
//! Permissibility is a negative test: a maxim is permissible exactly
//! when the willed universal-law world stays consistent. Failure to
//! prove permissibility counts against the maxim (the default
//! assumption), so exhausted searches come back impermissible but carry
//! a prominent `unproven` marker. An inconsistent background is a
//! refusal, never a verdict.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    build_wul_context, check_gamma_consistency, saturate, ContradictionEvidence, ResourceLimits,
    SaturationResult, SaturationStatus, TraceDocument,
};
use crate::kb::{KbError, KnowledgeBase, NecessitySchema};
use crate::lang::{alpha_equivalent, normalize, DeonticOp, Formula, LangError, Maxim};
use crate::render::{render_formula, render_maxim, render_term};
use crate::universalize::{universalize, UniversalizationRecord, UniversalizeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Universalize(#[from] UniversalizeError),
    #[error("cannot negate behavior: {0}")]
    Negate(LangError),
}

/// What a verdict rests on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum VerdictBasis {
    Contradiction(Box<ContradictionEvidence>),
    SaturatedNoContradiction,
    GammaInconsistent,
    ResourceExhausted,
}

/// Contradiction sort: a clash on the maxim's own causal commitment
/// yields a perfect duty; a clash on a necessity of the will yields an
/// imperfect one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DutyKind {
    Perfect,
    Imperfect,
    Unclassified,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub op: DeonticOp,
    /// The maxim as queried.
    pub maxim: Maxim,
    /// The maxim whose willed world was actually saturated (for
    /// obligation queries, the behavior-negated dual).
    pub evaluated: Maxim,
    pub answer: bool,
    pub basis: VerdictBasis,
    pub duty: Option<DutyKind>,
    /// Every duty kind seen across all complementary pairs, best first.
    /// A willed world can clash in more than one way; the primary
    /// `duty` comes from the best-ranked pair.
    pub observed_duties: Vec<DutyKind>,
    /// Set when the basis is resource exhaustion: impermissibility by
    /// default assumption, not by proof.
    pub unproven: bool,
    pub ul: UniversalizationRecord,
    pub trace: TraceDocument,
    pub iterations: usize,
}

/// Is the maxim permissible in the world described by the knowledge
/// base? Checks background consistency first; on success builds and
/// saturates the willed universal-law world.
pub fn evaluate_perm(
    kb: &KnowledgeBase,
    maxim: &Maxim,
    limits: ResourceLimits,
) -> Result<Verdict, EvalError> {
    evaluate_perm_inner(kb, maxim, limits, false)
}

fn evaluate_perm_inner(
    kb: &KnowledgeBase,
    maxim: &Maxim,
    limits: ResourceLimits,
    gamma_known_consistent: bool,
) -> Result<Verdict, EvalError> {
    let ul = universalize(maxim)?;
    if !gamma_known_consistent {
        let gamma = check_gamma_consistency(kb, limits);
        if let SaturationStatus::Contradiction(_) = gamma.status {
            let trace = TraceDocument::from_context(&gamma.context, &gamma.status, gamma.iterations);
            return Ok(Verdict {
                op: DeonticOp::Perm,
                maxim: maxim.clone(),
                evaluated: maxim.clone(),
                answer: false,
                basis: VerdictBasis::GammaInconsistent,
                duty: None,
                observed_duties: Vec::new(),
                unproven: false,
                ul,
                trace,
                iterations: gamma.iterations,
            });
        }
    }

    let ctx = build_wul_context(kb, maxim, &ul, limits);
    let result = saturate(ctx);
    let trace = TraceDocument::from_context(&result.context, &result.status, result.iterations);
    let (answer, basis, duty, observed_duties, unproven) = match &result.status {
        SaturationStatus::SaturatedConsistent => {
            (true, VerdictBasis::SaturatedNoContradiction, None, Vec::new(), false)
        }
        SaturationStatus::Contradiction(_) => {
            let evidence = select_evidence(&result, maxim, &kb.necessities)
                .expect("contradiction status implies at least one pair");
            let duty = classify_duty(&evidence, maxim, &kb.necessities);
            let mut observed: Vec<DutyKind> = Vec::new();
            for pair in result.context.contradictions() {
                let kind = classify_pair(&pair, maxim, &kb.necessities);
                if !observed.contains(&kind) {
                    observed.push(kind);
                }
            }
            observed.sort_by_key(|k| match k {
                DutyKind::Perfect => 0,
                DutyKind::Imperfect => 1,
                DutyKind::Unclassified => 2,
            });
            (
                false,
                VerdictBasis::Contradiction(Box::new(evidence)),
                Some(duty),
                observed,
                false,
            )
        }
        SaturationStatus::ResourceExhausted => {
            (false, VerdictBasis::ResourceExhausted, None, Vec::new(), true)
        }
    };
    Ok(Verdict {
        op: DeonticOp::Perm,
        maxim: maxim.clone(),
        evaluated: maxim.clone(),
        answer,
        basis,
        duty,
        observed_duties,
        unproven,
        ul,
        trace,
        iterations: result.iterations,
    })
}

/// Among all complementary pairs, prefer the ones the duty definitions
/// recognize (causal clash first, then necessity clash), then the
/// shortest combined derivation, then the smallest rendering.
fn select_evidence(
    result: &SaturationResult,
    maxim: &Maxim,
    necessities: &[NecessitySchema],
) -> Option<ContradictionEvidence> {
    result
        .context
        .contradictions()
        .into_iter()
        .min_by_key(|e| {
            let rank = match classify_pair(e, maxim, necessities) {
                DutyKind::Perfect => 0,
                DutyKind::Imperfect => 1,
                DutyKind::Unclassified => 2,
            };
            (
                rank,
                e.trace_positive.len() + e.trace_negative.len(),
                render_formula(&e.positive),
                render_formula(&e.negative),
            )
        })
}

fn classify_pair(
    evidence: &ContradictionEvidence,
    maxim: &Maxim,
    necessities: &[NecessitySchema],
) -> DutyKind {
    let causal = normalize(&Formula::causes(maxim.behavior.clone(), maxim.purpose.clone()));
    if alpha_equivalent(&evidence.positive, &causal) {
        return DutyKind::Perfect;
    }
    for schema in necessities {
        if is_template_instance(&evidence.positive, schema) {
            return DutyKind::Imperfect;
        }
    }
    DutyKind::Unclassified
}

/// Does the formula instantiate the schema's template for some term?
/// The agent variable is matched structurally against ground subterms.
fn is_template_instance(formula: &Formula, schema: &NecessitySchema) -> bool {
    fn matches_with(template: &Formula, var: &str, formula: &Formula, binding: &mut Option<crate::lang::Term>) -> bool {
        use crate::lang::Term;
        fn term_matches(t: &Term, var: &str, target: &Term, binding: &mut Option<Term>) -> bool {
            match t {
                Term::Var { name, .. } if name == var => match binding {
                    Some(bound) => bound == target,
                    None => {
                        *binding = Some(target.clone());
                        true
                    }
                },
                Term::Var { name, .. } => {
                    matches!(target, Term::Var { name: n, .. } if n == name)
                }
                Term::Const { .. } => t == target,
                Term::App { func, args, .. } => match target {
                    Term::App { func: tf, args: ta, .. } => {
                        func == tf
                            && args.len() == ta.len()
                            && args.iter().zip(ta).all(|(a, b)| term_matches(a, var, b, binding))
                    }
                    _ => false,
                },
            }
        }
        let t_terms = template.node_terms();
        let f_terms = formula.node_terms();
        let t_children = template.children();
        let f_children = formula.children();
        if std::mem::discriminant(template) != std::mem::discriminant(formula)
            || t_terms.len() != f_terms.len()
            || t_children.len() != f_children.len()
        {
            return false;
        }
        // Node labels are covered by discriminant plus term/child
        // comparison except for atoms and deontic tags.
        match (template, formula) {
            (Formula::Atom { pred: a, .. }, Formula::Atom { pred: b, .. }) if a != b => {
                return false
            }
            (Formula::Deontic { op: a, .. }, Formula::Deontic { op: b, .. }) if a != b => {
                return false
            }
            _ => {}
        }
        t_terms
            .iter()
            .zip(&f_terms)
            .all(|(a, b)| term_matches(a, var, b, binding))
            && t_children
                .iter()
                .zip(&f_children)
                .all(|(a, b)| matches_with(a, var, b, binding))
    }
    let template = normalize(&schema.template);
    let formula = normalize(formula);
    let mut binding = None;
    matches_with(&template, schema.var.name(), &formula, &mut binding)
        && matches!(binding, Some(t) if t.is_ground())
}

/// Classifies the contradiction behind a verdict.
pub fn classify_duty(
    evidence: &ContradictionEvidence,
    maxim: &Maxim,
    necessities: &[NecessitySchema],
) -> DutyKind {
    classify_pair(evidence, maxim, necessities)
}

/// Evaluates a maxim under any deontic operator via the dualities:
/// impermissible is not-permissible, obligatory is impermissible to
/// omit.
pub fn evaluate(
    kb: &KnowledgeBase,
    op: DeonticOp,
    maxim: &Maxim,
    limits: ResourceLimits,
) -> Result<Verdict, EvalError> {
    evaluate_inner(kb, op, maxim, limits, false)
}

fn evaluate_inner(
    kb: &KnowledgeBase,
    op: DeonticOp,
    maxim: &Maxim,
    limits: ResourceLimits,
    gamma_known_consistent: bool,
) -> Result<Verdict, EvalError> {
    match op {
        DeonticOp::Perm => evaluate_perm_inner(kb, maxim, limits, gamma_known_consistent),
        DeonticOp::Imp => {
            let mut v = evaluate_perm_inner(kb, maxim, limits, gamma_known_consistent)?;
            v.op = DeonticOp::Imp;
            if !matches!(v.basis, VerdictBasis::GammaInconsistent) {
                v.answer = !v.answer;
            }
            Ok(v)
        }
        DeonticOp::Obl => {
            let dual = maxim.negate_behavior().map_err(EvalError::Negate)?;
            let mut v =
                evaluate_inner(kb, DeonticOp::Imp, &dual, limits, gamma_known_consistent)?;
            v.op = DeonticOp::Obl;
            v.maxim = maxim.clone();
            Ok(v)
        }
    }
}

/// One row of a batch evaluation.
#[derive(Debug, Clone)]
pub struct BatchEntry {
    pub maxim_name: String,
    pub verdict: Verdict,
}

/// Evaluates every named maxim under every requested operator. Rows
/// come back sorted by maxim name, then operator, regardless of
/// evaluation order.
pub fn evaluate_all(
    kb: &KnowledgeBase,
    ops: &[DeonticOp],
    limits: ResourceLimits,
) -> Result<Vec<BatchEntry>, EvalError> {
    let jobs = batch_jobs(kb, ops);
    let gamma_consistent = matches!(
        check_gamma_consistency(kb, limits).status,
        SaturationStatus::SaturatedConsistent
    );
    #[cfg(feature = "parallel")]
    let results: Result<Vec<BatchEntry>, EvalError> = {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|(name, op, maxim)| run_job(kb, name, *op, maxim, limits, gamma_consistent))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Result<Vec<BatchEntry>, EvalError> = jobs
        .iter()
        .map(|(name, op, maxim)| run_job(kb, name, *op, maxim, limits, gamma_consistent))
        .collect();
    let mut rows = results?;
    rows.sort_by(|a, b| (&a.maxim_name, a.verdict.op).cmp(&(&b.maxim_name, b.verdict.op)));
    Ok(rows)
}

/// The always-sequential batch path; the parallel one must agree with
/// it row for row.
pub fn evaluate_all_sequential(
    kb: &KnowledgeBase,
    ops: &[DeonticOp],
    limits: ResourceLimits,
) -> Result<Vec<BatchEntry>, EvalError> {
    let jobs = batch_jobs(kb, ops);
    let gamma_consistent = matches!(
        check_gamma_consistency(kb, limits).status,
        SaturationStatus::SaturatedConsistent
    );
    let mut rows = jobs
        .iter()
        .map(|(name, op, maxim)| run_job(kb, name, *op, maxim, limits, gamma_consistent))
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| (&a.maxim_name, a.verdict.op).cmp(&(&b.maxim_name, b.verdict.op)));
    Ok(rows)
}

fn batch_jobs(kb: &KnowledgeBase, ops: &[DeonticOp]) -> Vec<(String, DeonticOp, Maxim)> {
    let mut jobs = Vec::new();
    for named in &kb.maxims {
        for op in ops {
            jobs.push((named.name.clone(), *op, named.maxim.clone()));
        }
    }
    jobs
}

fn run_job(
    kb: &KnowledgeBase,
    name: &str,
    op: DeonticOp,
    maxim: &Maxim,
    limits: ResourceLimits,
    gamma_consistent: bool,
) -> Result<BatchEntry, EvalError> {
    let verdict = if gamma_consistent {
        evaluate_inner(kb, op, maxim, limits, true)?
    } else {
        // Re-derives the refusal verdict, including the refuting trace.
        evaluate_inner(kb, op, maxim, limits, false)?
    };
    Ok(BatchEntry { maxim_name: name.to_string(), verdict })
}

fn duty_json(d: DutyKind) -> &'static str {
    match d {
        DutyKind::Perfect => "perfect",
        DutyKind::Imperfect => "imperfect",
        DutyKind::Unclassified => "unclassified",
    }
}

impl Verdict {
    pub fn basis_name(&self) -> &'static str {
        match self.basis {
            VerdictBasis::Contradiction(_) => "contradiction",
            VerdictBasis::SaturatedNoContradiction => "saturated_no_contradiction",
            VerdictBasis::GammaInconsistent => "gamma_inconsistent",
            VerdictBasis::ResourceExhausted => "resource_exhausted",
        }
    }

    /// Machine-readable form. The trace is large, so it is optional.
    pub fn to_json(&self, include_trace: bool) -> serde_json::Value {
        let mut doc = serde_json::json!({
            "query": {
                "op": self.op.keyword(),
                "maxim": render_maxim(&self.maxim),
            },
            "evaluated_maxim": render_maxim(&self.evaluated),
            "answer": self.answer,
            "basis": self.basis_name(),
            "unproven": self.unproven,
            "duty": self.duty.map(duty_json),
            "observed_duties": self.observed_duties.iter().copied().map(duty_json).collect::<Vec<_>>(),
            "ul": {
                "formula": render_formula(&self.ul.ul_formula),
                "universal_constants": self.ul.t_phi2.iter().map(render_term).collect::<Vec<_>>(),
                "existential_constants": self.ul.t_phi1.iter().map(render_term).collect::<Vec<_>>(),
                "sigma": self.ul.sigma.pairs().iter().map(|(c, v)| {
                    serde_json::json!({"constant": render_term(c), "variable": render_term(v)})
                }).collect::<Vec<_>>(),
            },
            "iterations": self.iterations,
        });
        if let VerdictBasis::Contradiction(e) = &self.basis {
            doc["contradiction"] = serde_json::json!({
                "positive": render_formula(&e.positive),
                "negative": render_formula(&e.negative),
                "positive_id": e.positive_id,
                "negative_id": e.negative_id,
            });
        }
        if include_trace {
            doc["trace"] = serde_json::to_value(&self.trace).expect("trace serializes");
        }
        doc
    }
}
