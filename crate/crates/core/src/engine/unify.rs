//! Sorted matching between goal formulas and stored facts.
//!
//! A goal is established when it can be made an instance-consequence of
//! stored facts. Three kinds of variable take part:
//!
//! * *flex* variables — instantiable: a fact's universal prefix, a
//!   goal's existential prefix, and the acting rule's own conclusion
//!   variables;
//! * *universal eigenvariables* — a goal's universal prefix: fixed and
//!   arbitrary;
//! * *witness eigenvariables* — a fact's existential prefix: fixed but
//!   unknown.
//!
//! A variable that flows into a rule's conclusion may bind to no
//! eigenvariable at all: its binding must make sense outside the match.
//! A goal-side existential may bind witnesses and any universal already
//! in scope when it was introduced. Bindings are trailed so the search
//! can backtrack.

use std::collections::HashMap;

use crate::kb::SortHierarchy;
use crate::lang::{ground_variable, Formula, SortName, Term};

use super::Fact;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EigenKind {
    /// A goal's own universal: arbitrary, so nothing conclusion-bound
    /// may depend on it.
    Univ { level: usize },
    /// A stored existential's unknown witness.
    Witness,
    /// Binder pairing between structurally matched inner quantifiers.
    Paired,
}

#[derive(Debug, Clone)]
struct FlexInfo {
    sort: SortName,
    /// Highest universal-eigenvariable level this variable may mention.
    max_univ_level: usize,
    flows_out: bool,
    may_use_witnesses: bool,
}

pub(crate) struct Matcher<'a> {
    sorts: &'a SortHierarchy,
    declared_constants: &'a [String],
    flex: HashMap<String, FlexInfo>,
    eigen: HashMap<String, (EigenKind, SortName)>,
    bindings: HashMap<String, Term>,
    trail: Vec<String>,
    counter: usize,
    univ_level: usize,
}

impl<'a> Matcher<'a> {
    pub fn new(sorts: &'a SortHierarchy, declared_constants: &'a [String]) -> Self {
        Matcher {
            sorts,
            declared_constants,
            flex: HashMap::new(),
            eigen: HashMap::new(),
            bindings: HashMap::new(),
            trail: Vec::new(),
            counter: 0,
            univ_level: 0,
        }
    }

    fn fresh_name(&mut self, prefix: char) -> String {
        self.counter += 1;
        // The DSL lexer cannot produce `?`, so these never collide with
        // user or canonical variable names.
        format!("?{prefix}{}", self.counter)
    }

    /// Registers a conclusion variable: instantiable, but its binding
    /// must be eigenvariable-free.
    pub fn add_conclusion_var(&mut self, sort: SortName) -> Term {
        let name = self.fresh_name('c');
        self.flex.insert(
            name.clone(),
            FlexInfo { sort: sort.clone(), max_univ_level: 0, flows_out: true, may_use_witnesses: false },
        );
        Term::var(name, sort)
    }

    fn add_goal_exists_var(&mut self, sort: SortName) -> Term {
        let name = self.fresh_name('e');
        self.flex.insert(
            name.clone(),
            FlexInfo {
                sort: sort.clone(),
                max_univ_level: self.univ_level,
                flows_out: false,
                may_use_witnesses: true,
            },
        );
        Term::var(name, sort)
    }

    fn add_goal_forall_var(&mut self, sort: SortName) -> Term {
        let name = self.fresh_name('u');
        self.univ_level += 1;
        self.eigen
            .insert(name.clone(), (EigenKind::Univ { level: self.univ_level }, sort.clone()));
        Term::var(name, sort)
    }

    fn add_fact_forall_var(&mut self, sort: SortName) -> Term {
        let name = self.fresh_name('f');
        self.flex.insert(
            name.clone(),
            FlexInfo {
                sort: sort.clone(),
                max_univ_level: usize::MAX,
                flows_out: false,
                may_use_witnesses: true,
            },
        );
        Term::var(name, sort)
    }

    fn add_fact_exists_var(&mut self, sort: SortName) -> Term {
        let name = self.fresh_name('w');
        self.eigen.insert(name.clone(), (EigenKind::Witness, sort.clone()));
        Term::var(name, sort)
    }

    fn snapshot(&self) -> usize {
        self.trail.len()
    }

    fn rollback(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let name = self.trail.pop().expect("trail entry");
            self.bindings.remove(&name);
        }
    }

    fn bind(&mut self, name: &str, term: Term) {
        self.bindings.insert(name.to_string(), term);
        self.trail.push(name.to_string());
    }

    fn resolve(&self, term: &Term) -> Term {
        match term {
            Term::Var { name, .. } => match self.bindings.get(name) {
                Some(bound) => self.resolve(bound),
                None => term.clone(),
            },
            _ => term.clone(),
        }
    }

    /// Fully applies bindings; unbound flex variables keep their
    /// (possibly narrowed) sort from the flex table.
    pub fn apply_term(&self, term: &Term) -> Term {
        match term {
            Term::Var { name, sort } => match self.bindings.get(name) {
                Some(bound) => self.apply_term(&bound.clone()),
                None => {
                    let sort = self.flex.get(name).map(|i| i.sort.clone()).unwrap_or_else(|| sort.clone());
                    Term::var(name.clone(), sort)
                }
            },
            Term::Const { .. } => term.clone(),
            Term::App { func, args, sort } => Term::App {
                func: func.clone(),
                args: args.iter().map(|a| self.apply_term(a)).collect(),
                sort: sort.clone(),
            },
        }
    }

    fn occurs(&self, name: &str, term: &Term) -> bool {
        match self.resolve(term) {
            Term::Var { name: n, .. } => n == name,
            Term::Const { .. } => false,
            Term::App { args, .. } => args.iter().any(|a| self.occurs(name, a)),
        }
    }

    fn eigen_ok(&self, info: &FlexInfo, term: &Term) -> bool {
        match term {
            Term::Var { name, .. } => match self.eigen.get(name) {
                Some((EigenKind::Univ { level }, _)) => *level <= info.max_univ_level,
                Some((EigenKind::Witness, _)) => info.may_use_witnesses,
                Some((EigenKind::Paired, _)) => false,
                None => true,
            },
            Term::Const { .. } => true,
            Term::App { args, .. } => args.iter().all(|a| self.eigen_ok(info, a)),
        }
    }

    fn term_sort(&self, term: &Term) -> SortName {
        match term {
            Term::Var { name, sort } => self
                .flex
                .get(name)
                .map(|i| i.sort.clone())
                .or_else(|| self.eigen.get(name).map(|(_, s)| s.clone()))
                .unwrap_or_else(|| sort.clone()),
            Term::Const { sort, .. } | Term::App { sort, .. } => sort.clone(),
        }
    }

    fn merge_flex(&mut self, survivor: &str, absorbed: &FlexInfo) {
        if let Some(info) = self.flex.get(survivor).cloned() {
            self.flex.insert(
                survivor.to_string(),
                FlexInfo {
                    sort: info.sort,
                    max_univ_level: info.max_univ_level.min(absorbed.max_univ_level),
                    flows_out: info.flows_out || absorbed.flows_out,
                    may_use_witnesses: info.may_use_witnesses && absorbed.may_use_witnesses,
                },
            );
        }
    }

    /// Tightens every unbound flex variable inside `term` with the
    /// binder's constraints, so later bindings of those variables
    /// cannot smuggle in an eigenvariable the binder may not mention.
    /// Tightening survives backtracking; that only costs completeness,
    /// never soundness.
    fn propagate_constraints(&mut self, info: &FlexInfo, term: &Term) {
        match term {
            Term::Var { name, .. } => {
                if self.flex.contains_key(name) {
                    self.merge_flex(name, info);
                }
            }
            Term::Const { .. } => {}
            Term::App { args, .. } => {
                for a in args {
                    self.propagate_constraints(info, a);
                }
            }
        }
    }

    fn try_bind(&mut self, name: &str, term: &Term) -> bool {
        let info = match self.flex.get(name) {
            Some(i) => i.clone(),
            None => return false,
        };
        let term = self.apply_term(term);
        if let Term::Var { name: other, .. } = &term {
            if other == name {
                return true;
            }
        }
        if self.occurs(name, &term) {
            return false;
        }
        if !self.eigen_ok(&info, &term) {
            return false;
        }
        if self.sorts.is_subsort(&self.term_sort(&term), &info.sort) {
            self.propagate_constraints(&info, &term);
            self.bind(name, term);
            return true;
        }
        // Flex-flex with the opposite sort relation: bind the wider
        // variable to the narrower one.
        if let Term::Var { name: other, .. } = &term {
            if let Some(other_info) = self.flex.get(other).cloned() {
                if self.sorts.is_subsort(&info.sort, &other_info.sort) {
                    self.merge_flex(name, &other_info);
                    self.bind(other, Term::var(name.to_string(), info.sort));
                    return true;
                }
            }
        }
        false
    }

    pub fn unify_terms(&mut self, a: &Term, b: &Term) -> bool {
        let ra = self.resolve(a);
        let rb = self.resolve(b);
        match (&ra, &rb) {
            (Term::Var { name: na, .. }, Term::Var { name: nb, .. }) if na == nb => true,
            (Term::Var { name, .. }, _) if self.flex.contains_key(name) => self.try_bind(name, &rb),
            (_, Term::Var { name, .. }) if self.flex.contains_key(name) => self.try_bind(name, &ra),
            (Term::Var { .. }, _) | (_, Term::Var { .. }) => false,
            (Term::Const { name: na, sort: sa }, Term::Const { name: nb, sort: sb }) => {
                na == nb && sa == sb
            }
            (Term::App { func: fa, args: aa, .. }, Term::App { func: fb, args: ab, .. }) => {
                if fa != fb || aa.len() != ab.len() {
                    return false;
                }
                let pairs: Vec<(Term, Term)> =
                    aa.iter().cloned().zip(ab.iter().cloned()).collect();
                pairs.iter().all(|(x, y)| self.unify_terms(x, y))
            }
            _ => false,
        }
    }

    /// Structural unification of two prefix-stripped formulas. Inner
    /// binders must line up position for position; they are paired
    /// through a shared rigid name.
    pub fn unify_formulas(&mut self, a: &Formula, b: &Formula) -> bool {
        use Formula::*;
        match (a, b) {
            (True, True) | (False, False) => true,
            (Not(x), Not(y)) => self.unify_formulas(x, y),
            (And(x1, y1), And(x2, y2))
            | (Or(x1, y1), Or(x2, y2))
            | (Implies(x1, y1), Implies(x2, y2))
            | (Iff(x1, y1), Iff(x2, y2)) => {
                self.unify_formulas(x1, x2) && self.unify_formulas(y1, y2)
            }
            (Forall(va, ba), Forall(vb, bb)) | (Exists(va, ba), Exists(vb, bb)) => {
                self.unify_binders(va, ba, vb, bb)
            }
            (Equals(a1, a2), Equals(b1, b2)) => {
                self.unify_terms(a1, b1) && self.unify_terms(a2, b2)
            }
            (Atom { pred: pa, args: aa }, Atom { pred: pb, args: ab }) => {
                if pa != pb || aa.len() != ab.len() {
                    return false;
                }
                let pairs: Vec<(Term, Term)> =
                    aa.iter().cloned().zip(ab.iter().cloned()).collect();
                pairs.iter().all(|(x, y)| self.unify_terms(x, y))
            }
            (Does { agent: ga, action: xa }, Does { agent: gb, action: xb }) => {
                self.unify_terms(ga, gb) && self.unify_terms(xa, xb)
            }
            (Wills { agent: ga, body: ba }, Wills { agent: gb, body: bb }) => {
                self.unify_terms(ga, gb) && self.unify_formulas(ba, bb)
            }
            (
                Causes { antecedent: x1, consequent: y1 },
                Causes { antecedent: x2, consequent: y2 },
            ) => self.unify_formulas(x1, x2) && self.unify_formulas(y1, y2),
            (For { behavior: x1, purpose: y1 }, For { behavior: x2, purpose: y2 }) => {
                self.unify_formulas(x1, x2) && self.unify_formulas(y1, y2)
            }
            (Deontic { op: o1, maxim: m1 }, Deontic { op: o2, maxim: m2 }) => {
                o1 == o2 && self.unify_formulas(m1, m2)
            }
            _ => false,
        }
    }

    fn unify_binders(&mut self, va: &Term, ba: &Formula, vb: &Term, bb: &Formula) -> bool {
        if va.sort() != vb.sort() {
            return false;
        }
        let shared = self.fresh_name('p');
        self.eigen.insert(shared.clone(), (EigenKind::Paired, va.sort().clone()));
        let shared_term = Term::var(shared, va.sort().clone());
        let ba = ground_variable(ba, va, &shared_term);
        let bb = ground_variable(bb, vb, &shared_term);
        self.unify_formulas(&ba, &bb)
    }

    // ----- establishment -----

    /// Enumerates every establishment of `goal`, invoking the callback
    /// with the matcher's bindings in place and the supporting fact
    /// ids. The callback returns `true` to stop the search. Returns
    /// whether the search was stopped. Afterwards all bindings are
    /// rolled back.
    pub fn establish_all(
        &mut self,
        goal: &Formula,
        facts: &[&Fact],
        mut on_solution: impl FnMut(&Matcher<'a>, &[usize]) -> bool,
    ) -> bool {
        let mark = self.snapshot();
        let mut support = Vec::new();
        let stopped = self.solve(goal, facts, 0, &mut support, &mut |m, s| on_solution(m, s));
        self.rollback(mark);
        stopped
    }

    /// Backtracking search over a goal queue. Every choice point
    /// enumerates its alternatives; `k` fires once per complete
    /// solution and returns `true` to stop the whole search.
    fn solve(
        &mut self,
        goal: &Formula,
        facts: &[&Fact],
        depth: usize,
        support: &mut Vec<usize>,
        k: &mut dyn FnMut(&Matcher<'a>, &[usize]) -> bool,
    ) -> bool {
        self.solve_goals(std::slice::from_ref(goal), facts, depth, support, k)
    }

    fn solve_goals(
        &mut self,
        goals: &[Formula],
        facts: &[&Fact],
        depth: usize,
        support: &mut Vec<usize>,
        k: &mut dyn FnMut(&Matcher<'a>, &[usize]) -> bool,
    ) -> bool {
        if depth > 64 {
            return false;
        }
        let Some((first, rest)) = goals.split_first() else {
            return k(self, support);
        };
        match first {
            Formula::True => self.solve_goals(rest, facts, depth + 1, support, k),
            Formula::And(a, b) => {
                let mut expanded: Vec<Formula> = vec![(**a).clone(), (**b).clone()];
                expanded.extend_from_slice(rest);
                self.solve_goals(&expanded, facts, depth + 1, support, k)
            }
            Formula::Or(a, b) => {
                let mark = self.snapshot();
                let mut branch: Vec<Formula> = vec![(**a).clone()];
                branch.extend_from_slice(rest);
                if self.solve_goals(&branch, facts, depth + 1, support, k) {
                    return true;
                }
                self.rollback(mark);
                branch[0] = (**b).clone();
                let stopped = self.solve_goals(&branch, facts, depth + 1, support, k);
                if !stopped {
                    self.rollback(mark);
                }
                stopped
            }
            Formula::Exists(v, body) => {
                let fresh = self.add_goal_exists_var(v.sort().clone());
                let mut expanded: Vec<Formula> = vec![ground_variable(body, v, &fresh)];
                expanded.extend_from_slice(rest);
                self.solve_goals(&expanded, facts, depth + 1, support, k)
            }
            Formula::Forall(v, body) => {
                let fresh = self.add_goal_forall_var(v.sort().clone());
                let mut expanded: Vec<Formula> = vec![ground_variable(body, v, &fresh)];
                expanded.extend_from_slice(rest);
                self.solve_goals(&expanded, facts, depth + 1, support, k)
            }
            Formula::Equals(a, b) => {
                let mark = self.snapshot();
                if self.unify_terms(a, b)
                    && self.solve_goals(rest, facts, depth + 1, support, k)
                {
                    return true;
                }
                self.rollback(mark);
                self.solve_via_facts(first, rest, facts, depth, support, k)
            }
            Formula::Not(inner) if matches!(inner.as_ref(), Formula::Equals(..)) => {
                let Formula::Equals(a, b) = inner.as_ref() else { unreachable!() };
                let ra = self.apply_term(a);
                let rb = self.apply_term(b);
                // Distinct declared constants denote distinct objects.
                if let (Term::Const { name: na, .. }, Term::Const { name: nb, .. }) = (&ra, &rb) {
                    if na != nb
                        && self.declared_constants.iter().any(|c| c == na)
                        && self.declared_constants.iter().any(|c| c == nb)
                        && self.solve_goals(rest, facts, depth + 1, support, k)
                    {
                        return true;
                    }
                }
                // Stored inequality, either orientation.
                if self.solve_via_facts(first, rest, facts, depth, support, k) {
                    return true;
                }
                let flipped = Formula::not(Formula::Equals(b.clone(), a.clone()));
                self.solve_via_facts(&flipped, rest, facts, depth, support, k)
            }
            _ => self.solve_via_facts(first, rest, facts, depth, support, k),
        }
    }

    fn solve_via_facts(
        &mut self,
        goal: &Formula,
        rest: &[Formula],
        facts: &[&Fact],
        depth: usize,
        support: &mut Vec<usize>,
        k: &mut dyn FnMut(&Matcher<'a>, &[usize]) -> bool,
    ) -> bool {
        let mark = self.snapshot();
        for fact in facts {
            if self.establish_against_fact(goal, fact) {
                support.push(fact.id);
                if self.solve_goals(rest, facts, depth + 1, support, k) {
                    return true;
                }
                support.pop();
            }
            self.rollback(mark);
        }
        false
    }

    fn establish_against_fact(&mut self, goal: &Formula, fact: &Fact) -> bool {
        let mark = self.snapshot();
        let mut body = fact.formula.clone();
        while let Formula::Forall(v, inner) = body {
            let fresh = self.add_fact_forall_var(v.sort().clone());
            body = ground_variable(&inner, &v, &fresh);
        }
        while let Formula::Exists(v, inner) = body {
            let fresh = self.add_fact_exists_var(v.sort().clone());
            body = ground_variable(&inner, &v, &fresh);
        }
        if self.unify_formulas(goal, &body) {
            true
        } else {
            self.rollback(mark);
            false
        }
    }

    /// Fully applies bindings to a formula.
    pub fn apply(&self, f: &Formula) -> Formula {
        match f {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Not(a) => Formula::not(self.apply(a)),
            Formula::And(a, b) => Formula::and(self.apply(a), self.apply(b)),
            Formula::Or(a, b) => Formula::or(self.apply(a), self.apply(b)),
            Formula::Implies(a, b) => Formula::implies(self.apply(a), self.apply(b)),
            Formula::Iff(a, b) => Formula::iff(self.apply(a), self.apply(b)),
            Formula::Forall(v, body) => Formula::forall(v.clone(), self.apply(body)),
            Formula::Exists(v, body) => Formula::exists(v.clone(), self.apply(body)),
            Formula::Equals(a, b) => Formula::Equals(self.apply_term(a), self.apply_term(b)),
            Formula::Atom { pred, args } => Formula::Atom {
                pred: pred.clone(),
                args: args.iter().map(|t| self.apply_term(t)).collect(),
            },
            Formula::Does { agent, action } => {
                Formula::does(self.apply_term(agent), self.apply_term(action))
            }
            Formula::Wills { agent, body } => {
                Formula::wills(self.apply_term(agent), self.apply(body))
            }
            Formula::Causes { antecedent, consequent } => {
                Formula::causes(self.apply(antecedent), self.apply(consequent))
            }
            Formula::For { behavior, purpose } => {
                Formula::for_maxim(self.apply(behavior), self.apply(purpose))
            }
            Formula::Deontic { op, maxim } => Formula::deontic(*op, self.apply(maxim)),
        }
    }

    /// True if the applied formula still mentions an eigenvariable, in
    /// which case it cannot leave the match.
    pub fn leaks_eigenvariables(&self, f: &Formula) -> bool {
        let applied = self.apply(f);
        applied
            .free_vars()
            .iter()
            .any(|v| self.eigen.contains_key(v.name()))
    }
}

/// Ground terms available for instantiation: every ground subterm of
/// every fact, deduplicated, depth-capped, in a deterministic order.
pub(crate) fn terms_in_play(facts: &[Fact], max_depth: usize) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::new();
    for fact in facts {
        collect_ground_terms(&fact.formula, max_depth, &mut out);
    }
    out.sort_by_cached_key(|t| (t.depth(), crate::render::render_term(t)));
    out
}

fn collect_ground_terms(f: &Formula, max_depth: usize, out: &mut Vec<Term>) {
    fn visit(t: &Term, max_depth: usize, out: &mut Vec<Term>) {
        if t.is_ground() && t.depth() <= max_depth && !out.contains(t) {
            out.push(t.clone());
        }
        if let Term::App { args, .. } = t {
            for a in args {
                visit(a, max_depth, out);
            }
        }
    }
    for t in f.node_terms() {
        visit(t, max_depth, out);
    }
    for c in f.children() {
        collect_ground_terms(c, max_depth, out);
    }
}
