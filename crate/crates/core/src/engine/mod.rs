//! Bounded forward-chaining saturation with provenance.
//!
//! A [`DerivationContext`] holds a growing set of canonical facts, each
//! tagged background or willed and carrying the rule and premises that
//! produced it. [`saturate`] drives the rule passes to a fixpoint, a
//! contradiction, or a resource limit. The search is bounded by design:
//! universal facts are instantiated only with ground terms already in
//! play, and derived facts whose terms exceed the depth limit are not
//! kept. A fixpoint of this bounded calculus counts as saturation.

mod replay;
mod rules;
mod trace;
mod unify;

pub use replay::{verify_complement, verify_trace, ReplayError, WulSetup};
pub use trace::TraceDocument;

use serde::{Deserialize, Serialize};

use crate::kb::{KnowledgeBase, NecessitySchema};
use crate::lang::{complement, normalize, Formula, Maxim, Term};
use crate::universalize::UniversalizationRecord;

use std::collections::HashMap;

/// Where a fact holds: in the shared background, or inside the willed
/// world of the evaluated agent. Background facts are visible from the
/// willed scope; never the other way around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeTag {
    Background,
    Willed,
}

/// How a fact entered the context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// Named background axiom.
    Axiom,
    /// The universal law, willed by the agent under evaluation.
    WillUniversalLaw,
    /// The maxim's behavior, willed along with the maxim.
    MaximBehavior,
    /// The agent willing the maxim's purpose.
    MaximPurpose,
    /// The maxim's own causal commitment.
    MaximCausal,
    /// An instantiated necessity of the will.
    Necessity,
    /// Causal discharge: a causal law yields the plain implication.
    CauseDischarge,
    /// Willing consistency: willing something rules out willing its
    /// opposite.
    WillConsistency,
    /// Splitting a stored maxim into behavior and willed purpose.
    MaximSplit,
    /// A stored maxim commits its agent to the causal link.
    MaximCause,
    ModusPonens,
    ModusTollens,
    UniversalElim,
    /// Instantiating a general statement with a refining symbol.
    RefineElim,
    ExistsWitness,
    AndElim,
    IffElim,
}

impl RuleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleKind::Axiom => "axiom",
            RuleKind::WillUniversalLaw => "will_ul",
            RuleKind::MaximBehavior => "maxim_behavior",
            RuleKind::MaximPurpose => "maxim_purpose",
            RuleKind::MaximCausal => "maxim_causal",
            RuleKind::Necessity => "necessity",
            RuleKind::CauseDischarge => "cause_discharge",
            RuleKind::WillConsistency => "will_consistency",
            RuleKind::MaximSplit => "maxim_split",
            RuleKind::MaximCause => "maxim_cause",
            RuleKind::ModusPonens => "mp",
            RuleKind::ModusTollens => "mt",
            RuleKind::UniversalElim => "ue",
            RuleKind::RefineElim => "ue_refine",
            RuleKind::ExistsWitness => "exists_witness",
            RuleKind::AndElim => "and_elim",
            RuleKind::IffElim => "iff_elim",
        }
    }
}

/// One stored fact with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub id: usize,
    /// Always in canonical (normalized) form.
    pub formula: Formula,
    pub scope: ScopeTag,
    pub rule: RuleKind,
    /// Axiom or schema name, when the rule has one.
    pub note: Option<String>,
    /// Earlier facts this one was derived from.
    pub premises: Vec<usize>,
    /// Instantiation or witness terms recorded for replay.
    pub terms: Vec<Term>,
    pub round: usize,
}

/// Search bounds. Exhausting a bound is an outcome, not an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceLimits {
    pub max_facts: usize,
    pub max_iterations: usize,
    pub max_term_depth: usize,
}

impl Default for ResourceLimits {
    fn default() -> Self {
        ResourceLimits { max_facts: 10_000, max_iterations: 200, max_term_depth: 4 }
    }
}

/// A complementary pair found in one scope's visible facts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContradictionEvidence {
    /// The non-negated side.
    pub positive: Formula,
    /// Canonical complement of `positive`.
    pub negative: Formula,
    pub positive_id: usize,
    pub negative_id: usize,
    /// Every fact id in the positive side's derivation, oldest first.
    pub trace_positive: Vec<usize>,
    pub trace_negative: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SaturationStatus {
    SaturatedConsistent,
    Contradiction(Box<ContradictionEvidence>),
    ResourceExhausted,
}

#[derive(Debug, Clone)]
pub struct SaturationResult {
    pub status: SaturationStatus,
    pub context: DerivationContext,
    pub iterations: usize,
}

/// The growing fact set, plus everything the rule passes need from the
/// knowledge base.
#[derive(Debug, Clone)]
pub struct DerivationContext {
    pub willed_agent: Option<Term>,
    pub limits: ResourceLimits,
    facts: Vec<Fact>,
    /// Canonical form -> fact id, per scope.
    index: HashMap<(ScopeTag, Formula), usize>,
    /// Complementary pairs (positive-candidate id, other id) in
    /// discovery order.
    pairs: Vec<(usize, usize)>,
    witnessed: Vec<usize>,
    skolem_counter: usize,
    exhausted: bool,
    // Signature data the rules need, copied out of the knowledge base.
    declared_constants: Vec<String>,
    refinements: Vec<(crate::kb::FnDecl, crate::kb::FnDecl)>,
    sorts: crate::kb::SortHierarchy,
}

impl DerivationContext {
    fn new(kb: &KnowledgeBase, limits: ResourceLimits, willed_agent: Option<Term>) -> Self {
        DerivationContext {
            willed_agent,
            limits,
            facts: Vec::new(),
            index: HashMap::new(),
            pairs: Vec::new(),
            witnessed: Vec::new(),
            skolem_counter: 0,
            exhausted: false,
            declared_constants: kb.constants.iter().map(|c| c.name.clone()).collect(),
            refinements: kb
                .refinements()
                .map(|(f, g)| (f.clone(), g.clone()))
                .collect(),
            sorts: kb.sorts.clone(),
        }
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn fact(&self, id: usize) -> &Fact {
        &self.facts[id]
    }

    /// All complementary pairs found so far, as evidence values.
    pub fn contradictions(&self) -> Vec<ContradictionEvidence> {
        self.pairs.iter().map(|&(a, b)| self.evidence_for(a, b)).collect()
    }

    fn evidence_for(&self, a: usize, b: usize) -> ContradictionEvidence {
        let fa = &self.facts[a];
        let fb = &self.facts[b];
        // The side not headed by a negation is the positive one; if both
        // or neither are, take the lexicographically smaller rendering.
        let a_negated = matches!(fa.formula, Formula::Not(_));
        let b_negated = matches!(fb.formula, Formula::Not(_));
        let (pos, neg) = match (a_negated, b_negated) {
            (false, true) => (a, b),
            (true, false) => (b, a),
            _ => {
                let ra = crate::render::render_formula(&fa.formula);
                let rb = crate::render::render_formula(&fb.formula);
                if ra <= rb {
                    (a, b)
                } else {
                    (b, a)
                }
            }
        };
        ContradictionEvidence {
            positive: self.facts[pos].formula.clone(),
            negative: self.facts[neg].formula.clone(),
            positive_id: pos,
            negative_id: neg,
            trace_positive: self.provenance_chain(pos),
            trace_negative: self.provenance_chain(neg),
        }
    }

    /// Transitive premises of a fact, oldest first, the fact last.
    pub fn provenance_chain(&self, id: usize) -> Vec<usize> {
        let mut seen = vec![false; self.facts.len()];
        let mut stack = vec![id];
        while let Some(cur) = stack.pop() {
            if seen[cur] {
                continue;
            }
            seen[cur] = true;
            stack.extend(self.facts[cur].premises.iter().copied());
        }
        (0..self.facts.len()).filter(|&i| seen[i]).collect()
    }

    fn scope_of_premises(&self, premises: &[usize]) -> ScopeTag {
        premises
            .iter()
            .map(|&p| self.facts[p].scope)
            .max()
            .unwrap_or(ScopeTag::Background)
    }

    /// Inserts a normalized fact. Returns its id if it was new.
    #[allow(clippy::too_many_arguments)]
    fn insert(
        &mut self,
        formula: Formula,
        scope: ScopeTag,
        rule: RuleKind,
        note: Option<String>,
        premises: Vec<usize>,
        terms: Vec<Term>,
        round: usize,
    ) -> Option<usize> {
        debug_assert_eq!(formula, normalize(&formula), "facts must be canonical");
        if formula.max_term_depth() > self.limits.max_term_depth {
            // Beyond the bounded search's term universe.
            return None;
        }
        if formula == Formula::True {
            return None;
        }
        if self.index.contains_key(&(scope, formula.clone())) {
            return None;
        }
        // A willed copy of a background fact adds nothing: background is
        // already visible there.
        if scope == ScopeTag::Willed
            && self.index.contains_key(&(ScopeTag::Background, formula.clone()))
        {
            return None;
        }
        if self.facts.len() >= self.limits.max_facts {
            self.exhausted = true;
            return None;
        }
        let id = self.facts.len();
        let fact = Fact { id, formula: formula.clone(), scope, rule, note, premises, terms, round };
        self.facts.push(fact);
        self.index.insert((scope, formula.clone()), id);
        self.record_complements(id, &formula, scope);
        Some(id)
    }

    fn record_complements(&mut self, id: usize, formula: &Formula, scope: ScopeTag) {
        let comp = complement(formula);
        let mut partners: Vec<usize> = Vec::new();
        match scope {
            ScopeTag::Background => {
                // A background fact clashes with anything visible
                // anywhere.
                if let Some(&other) = self.index.get(&(ScopeTag::Background, comp.clone())) {
                    partners.push(other);
                }
                if let Some(&other) = self.index.get(&(ScopeTag::Willed, comp.clone())) {
                    partners.push(other);
                }
            }
            ScopeTag::Willed => {
                if let Some(&other) = self.index.get(&(ScopeTag::Willed, comp.clone())) {
                    partners.push(other);
                }
                if let Some(&other) = self.index.get(&(ScopeTag::Background, comp)) {
                    partners.push(other);
                }
            }
        }
        for other in partners {
            self.pairs.push((other, id));
        }
    }

    fn fresh_skolem(&mut self, sort: &crate::lang::SortName) -> Term {
        loop {
            self.skolem_counter += 1;
            let name = format!("w{}", self.skolem_counter);
            if !self.declared_constants.contains(&name) {
                return Term::constant(name, sort.clone());
            }
        }
    }
}

/// Builds the derivation context realizing the willed universal-law
/// world: the background axioms, the willed universal law, and the
/// willed consequences of the maxim itself (its behavior, its willed
/// purpose, its causal commitment) plus every instantiated necessity of
/// the will.
pub fn build_wul_context(
    kb: &KnowledgeBase,
    maxim: &Maxim,
    ul: &UniversalizationRecord,
    limits: ResourceLimits,
) -> DerivationContext {
    let agent = maxim.agent.clone();
    let mut ctx = DerivationContext::new(kb, limits, Some(agent.clone()));
    seed_axioms(&mut ctx, kb);
    ctx.insert(
        normalize(&ul.ul_formula),
        ScopeTag::Willed,
        RuleKind::WillUniversalLaw,
        None,
        Vec::new(),
        Vec::new(),
        0,
    );
    ctx.insert(
        normalize(&maxim.behavior),
        ScopeTag::Willed,
        RuleKind::MaximBehavior,
        None,
        Vec::new(),
        Vec::new(),
        0,
    );
    ctx.insert(
        normalize(&Formula::wills(agent.clone(), maxim.purpose.clone())),
        ScopeTag::Willed,
        RuleKind::MaximPurpose,
        None,
        Vec::new(),
        Vec::new(),
        0,
    );
    ctx.insert(
        normalize(&Formula::causes(maxim.behavior.clone(), maxim.purpose.clone())),
        ScopeTag::Willed,
        RuleKind::MaximCausal,
        None,
        Vec::new(),
        Vec::new(),
        0,
    );
    seed_necessities(&mut ctx, &kb.necessities, &agent);
    ctx
}

/// Context for checking the background axioms alone.
pub fn build_gamma_context(kb: &KnowledgeBase, limits: ResourceLimits) -> DerivationContext {
    let mut ctx = DerivationContext::new(kb, limits, None);
    seed_axioms(&mut ctx, kb);
    ctx
}

fn seed_axioms(ctx: &mut DerivationContext, kb: &KnowledgeBase) {
    for ax in &kb.axioms {
        ctx.insert(
            normalize(&ax.formula),
            ScopeTag::Background,
            RuleKind::Axiom,
            Some(ax.name.clone()),
            Vec::new(),
            Vec::new(),
            0,
        );
    }
}

fn seed_necessities(ctx: &mut DerivationContext, schemas: &[NecessitySchema], agent: &Term) {
    for schema in schemas {
        ctx.insert(
            normalize(&schema.instantiate(agent)),
            ScopeTag::Willed,
            RuleKind::Necessity,
            Some(schema.name.clone()),
            Vec::new(),
            Vec::new(),
            0,
        );
    }
}

/// Saturates the context under the rule passes. Runs to the bounded
/// calculus's fixpoint even when a contradiction appears early, so
/// every complementary pair is available for classification.
pub fn saturate(mut ctx: DerivationContext) -> SaturationResult {
    let mut productive_rounds = 0usize;
    let mut round = 0usize;
    loop {
        round += 1;
        if round > ctx.limits.max_iterations {
            ctx.exhausted = true;
            break;
        }
        let candidates = rules::run_round(&mut ctx);
        let mut inserted = false;
        for c in candidates {
            let scope = ctx.scope_of_premises(&c.premises).max(c.min_scope);
            if ctx
                .insert(c.formula, scope, c.rule, c.note, c.premises, c.terms, round)
                .is_some()
            {
                inserted = true;
            }
            if ctx.exhausted {
                break;
            }
        }
        if inserted {
            productive_rounds += 1;
        } else {
            break;
        }
        if ctx.exhausted {
            break;
        }
    }
    let status = match best_pair(&ctx) {
        Some(evidence) => SaturationStatus::Contradiction(Box::new(evidence)),
        None if ctx.exhausted => SaturationStatus::ResourceExhausted,
        None => SaturationStatus::SaturatedConsistent,
    };
    SaturationResult { status, context: ctx, iterations: productive_rounds }
}

/// The preferred complementary pair: shortest combined derivation,
/// then lexicographically smallest rendering.
pub fn detect_contradiction(ctx: &DerivationContext) -> Option<ContradictionEvidence> {
    best_pair(ctx)
}

fn best_pair(ctx: &DerivationContext) -> Option<ContradictionEvidence> {
    ctx.contradictions().into_iter().min_by_key(|e| {
        (
            e.trace_positive.len() + e.trace_negative.len(),
            crate::render::render_formula(&e.positive),
            crate::render::render_formula(&e.negative),
        )
    })
}

/// Saturates the background axioms alone; a contradiction here means
/// the world description itself is unusable.
pub fn check_gamma_consistency(kb: &KnowledgeBase, limits: ResourceLimits) -> SaturationResult {
    saturate(build_gamma_context(kb, limits))
}
