//! Deterministic generators for randomized tests and benches.
//!
//! Everything here is seeded: the same seed always produces the same
//! knowledge base or formula. Generated worlds keep their backgrounds
//! consistent by construction (positive facts and positive implications
//! only), so verdict-level properties can assume a usable background.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::kb::{ConstDecl, FnDecl, KnowledgeBase, NamedFormula, NamedMaxim, PredDecl};
use crate::lang::{Formula, Maxim, SortName, Term};

/// A fixed signature rich enough to exercise every formula node.
pub fn vocabulary() -> KnowledgeBase {
    let mut kb = KnowledgeBase::new();
    kb.sorts.declare(SortName::new("Thing"), SortName::object()).expect("fresh sort");
    kb.sorts.declare(SortName::new("Gift"), SortName::new("Thing")).expect("fresh sort");
    for (name, sort) in [
        ("ada", SortName::agent()),
        ("bo", SortName::agent()),
        ("cy", SortName::agent()),
        ("rock", SortName::new("Thing")),
        ("ring", SortName::new("Gift")),
    ] {
        kb.constants.push(ConstDecl { name: name.into(), sort });
    }
    kb.functions.push(FnDecl {
        name: "greet".into(),
        params: vec![SortName::agent()],
        result: SortName::action(),
        refines: None,
    });
    kb.functions.push(FnDecl {
        name: "give".into(),
        params: vec![SortName::new("Thing")],
        result: SortName::action(),
        refines: None,
    });
    kb.functions.push(FnDecl {
        name: "rest".into(),
        params: vec![],
        result: SortName::action(),
        refines: None,
    });
    for (name, params) in [
        ("Happy", vec![SortName::agent()]),
        ("Calm", vec![SortName::agent()]),
        ("Shiny", vec![SortName::new("Thing")]),
        ("Owns", vec![SortName::agent(), SortName::new("Thing")]),
    ] {
        kb.predicates.push(PredDecl { name: name.into(), params });
    }
    kb.finalize().expect("vocabulary is well formed");
    kb
}

pub struct FormulaGen {
    pub kb: KnowledgeBase,
    rng: StdRng,
    var_counter: usize,
}

impl FormulaGen {
    pub fn new(seed: u64) -> Self {
        FormulaGen { kb: vocabulary(), rng: StdRng::seed_from_u64(seed), var_counter: 0 }
    }

    fn sorts_pool(&self) -> Vec<SortName> {
        vec![
            SortName::agent(),
            SortName::new("Thing"),
            SortName::new("Gift"),
            SortName::action(),
        ]
    }

    fn term_of(&mut self, sort: &SortName, env: &[Term]) -> Term {
        // Prefer a bound variable of the right sort when one is around.
        let candidates: Vec<&Term> = env
            .iter()
            .filter(|v| self.kb.sorts.is_subsort(v.sort(), sort))
            .collect();
        if !candidates.is_empty() && self.rng.gen_bool(0.5) {
            return candidates[self.rng.gen_range(0..candidates.len())].clone();
        }
        match sort.as_str() {
            "Agent" => {
                let name = ["ada", "bo", "cy"][self.rng.gen_range(0..3)];
                Term::constant(name, SortName::agent())
            }
            "Gift" => Term::constant("ring", SortName::new("Gift")),
            "Thing" | "Object" => {
                if self.rng.gen_bool(0.5) {
                    Term::constant("rock", SortName::new("Thing"))
                } else {
                    Term::constant("ring", SortName::new("Gift"))
                }
            }
            _ => {
                // Action-sorted: one of the declared action builders.
                match self.rng.gen_range(0..3) {
                    0 => Term::app(
                        "greet",
                        vec![self.term_of(&SortName::agent(), env)],
                        SortName::action(),
                    ),
                    1 => Term::app(
                        "give",
                        vec![self.term_of(&SortName::new("Thing"), env)],
                        SortName::action(),
                    ),
                    _ => Term::app("rest", vec![], SortName::action()),
                }
            }
        }
    }

    fn atom(&mut self, env: &[Term]) -> Formula {
        match self.rng.gen_range(0..5) {
            0 => Formula::atom("Happy", vec![self.term_of(&SortName::agent(), env)]),
            1 => Formula::atom("Calm", vec![self.term_of(&SortName::agent(), env)]),
            2 => Formula::atom("Shiny", vec![self.term_of(&SortName::new("Thing"), env)]),
            3 => Formula::atom(
                "Owns",
                vec![
                    self.term_of(&SortName::agent(), env),
                    self.term_of(&SortName::new("Thing"), env),
                ],
            ),
            _ => Formula::atom("Alive", vec![self.term_of(&SortName::agent(), env)]),
        }
    }

    fn fresh_var(&mut self, sort: SortName) -> Term {
        self.var_counter += 1;
        Term::var(format!("v{}", self.var_counter), sort)
    }

    fn does(&mut self, env: &[Term]) -> Formula {
        Formula::does(
            self.term_of(&SortName::agent(), env),
            self.term_of(&SortName::action(), env),
        )
    }

    /// A random closed, well-sorted formula.
    pub fn formula(&mut self) -> Formula {
        self.var_counter = 0;
        let depth = self.rng.gen_range(1..=4);
        self.build(depth, &mut Vec::new())
    }

    fn build(&mut self, depth: usize, env: &mut Vec<Term>) -> Formula {
        if depth == 0 {
            return match self.rng.gen_range(0..8) {
                0 => Formula::True,
                1 => Formula::False,
                2 => self.does(env),
                3 => {
                    let sort = if self.rng.gen_bool(0.5) {
                        SortName::agent()
                    } else {
                        SortName::new("Thing")
                    };
                    let a = self.term_of(&sort, env);
                    let b = self.term_of(&sort, env);
                    if self.rng.gen_bool(0.5) {
                        Formula::Equals(a, b)
                    } else {
                        Formula::not_equals(a, b)
                    }
                }
                _ => self.atom(env),
            };
        }
        match self.rng.gen_range(0..10) {
            0 => Formula::not(self.build(depth - 1, env)),
            1 => Formula::and(self.build(depth - 1, env), self.build(depth - 1, env)),
            2 => Formula::or(self.build(depth - 1, env), self.build(depth - 1, env)),
            3 => Formula::implies(self.build(depth - 1, env), self.build(depth - 1, env)),
            4 => Formula::iff(self.build(depth - 1, env), self.build(depth - 1, env)),
            5 | 6 => {
                let sort_pool = self.sorts_pool();
                let sort = sort_pool[self.rng.gen_range(0..sort_pool.len() - 1)].clone();
                let var = self.fresh_var(sort);
                env.push(var.clone());
                let body = self.build(depth - 1, env);
                env.pop();
                if self.rng.gen_bool(0.5) {
                    Formula::forall(var, body)
                } else {
                    Formula::exists(var, body)
                }
            }
            7 => {
                let agent = self.term_of(&SortName::agent(), env);
                let body = self.build(depth - 1, env);
                Formula::wills(agent, body)
            }
            8 => Formula::causes(self.does(env), self.build_first_order(depth - 1, env)),
            _ => {
                let maxim = self.maxim_formula(env);
                if self.rng.gen_bool(0.5) {
                    maxim
                } else {
                    let op = [
                        crate::lang::DeonticOp::Perm,
                        crate::lang::DeonticOp::Imp,
                        crate::lang::DeonticOp::Obl,
                    ][self.rng.gen_range(0..3)];
                    Formula::deontic(op, maxim)
                }
            }
        }
    }

    fn build_first_order(&mut self, depth: usize, env: &mut Vec<Term>) -> Formula {
        if depth == 0 {
            return self.atom(env);
        }
        match self.rng.gen_range(0..4) {
            0 => Formula::not(self.build_first_order(depth - 1, env)),
            1 => Formula::and(
                self.build_first_order(depth - 1, env),
                self.build_first_order(depth - 1, env),
            ),
            2 => {
                let var = self.fresh_var(SortName::agent());
                env.push(var.clone());
                let body = self.build_first_order(depth - 1, env);
                env.pop();
                Formula::exists(var, body)
            }
            _ => self.atom(env),
        }
    }

    fn maxim_formula(&mut self, env: &mut Vec<Term>) -> Formula {
        let behavior = self.behavior(env);
        let purpose = self.build_first_order(1, env);
        Formula::for_maxim(behavior, purpose)
    }

    fn behavior(&mut self, env: &mut [Term]) -> Formula {
        let agent_name = ["ada", "bo", "cy"][self.rng.gen_range(0..3)];
        let agent = Term::constant(agent_name, SortName::agent());
        match self.rng.gen_range(0..4) {
            0 => Formula::does(agent, self.term_of(&SortName::action(), env)),
            1 => Formula::not(Formula::does(agent, self.term_of(&SortName::action(), env))),
            2 => {
                let var = self.fresh_var(SortName::agent());
                let action = Term::app("greet", vec![var.clone()], SortName::action());
                Formula::forall(var, Formula::not(Formula::does(agent, action)))
            }
            _ => {
                let var = self.fresh_var(SortName::agent());
                let action = Term::app("greet", vec![var.clone()], SortName::action());
                Formula::exists(var, Formula::does(agent, action))
            }
        }
    }

    /// A random well-formed maxim over the vocabulary.
    pub fn maxim(&mut self) -> Maxim {
        self.var_counter = 50;
        let mut env = Vec::new();
        let behavior = self.behavior(env.as_mut_slice());
        let purpose = self.build_first_order(1, &mut env);
        Maxim::new(behavior, purpose).expect("generator builds valid maxims")
    }
}

/// A generated world: consistent background plus a handful of maxims.
pub fn world(seed: u64) -> KnowledgeBase {
    let mut gen = FormulaGen::new(seed);
    let mut kb = vocabulary();
    let n_axioms = gen.rng.gen_range(1..=4);
    for i in 0..n_axioms {
        // Positive ground facts and positive implications keep the
        // background trivially consistent.
        let formula = match gen.rng.gen_range(0..3) {
            0 => gen.atom(&[]),
            1 => {
                let v = gen.fresh_var(SortName::agent());
                let lhs = Formula::atom("Happy", vec![v.clone()]);
                let rhs = Formula::atom("Calm", vec![v.clone()]);
                Formula::forall(v, Formula::implies(lhs, rhs))
            }
            _ => {
                let agent = gen.term_of(&SortName::agent(), &[]);
                Formula::wills(agent.clone(), Formula::atom("Happy", vec![agent.clone()]))
            }
        };
        kb.axioms.push(NamedFormula { name: format!("G{i}"), formula });
    }
    let n_maxims = gen.rng.gen_range(1..=3);
    for i in 0..n_maxims {
        kb.maxims.push(NamedMaxim { name: format!("M{i}"), maxim: gen.maxim() });
    }
    kb.finalize().expect("generated world is well formed");
    kb
}

/// Renames every declared constant consistently (`karli` becomes
/// `karli_r` and so on) across declarations, axioms and maxims.
pub fn rename_constants(kb: &KnowledgeBase) -> KnowledgeBase {
    let mut renamed = kb.clone();
    let mapping: Vec<(String, String)> = kb
        .constants
        .iter()
        .map(|c| (c.name.clone(), format!("{}_r", c.name)))
        .collect();
    for c in &mut renamed.constants {
        c.name = format!("{}_r", c.name);
    }
    let rename_formula = |f: &Formula| rename_constants_in(f, &mapping);
    for ax in &mut renamed.axioms {
        ax.formula = rename_formula(&ax.formula);
    }
    for n in &mut renamed.necessities {
        n.template = rename_formula(&n.template);
    }
    for m in &mut renamed.maxims {
        m.maxim = Maxim::new(
            rename_formula(&m.maxim.behavior),
            rename_formula(&m.maxim.purpose),
        )
        .expect("renaming preserves maxim shape");
    }
    renamed
}

pub fn rename_maxim(maxim: &Maxim, kb: &KnowledgeBase) -> Maxim {
    let mapping: Vec<(String, String)> = kb
        .constants
        .iter()
        .map(|c| (c.name.clone(), format!("{}_r", c.name)))
        .collect();
    Maxim::new(
        rename_constants_in(&maxim.behavior, &mapping),
        rename_constants_in(&maxim.purpose, &mapping),
    )
    .expect("renaming preserves maxim shape")
}

fn rename_constants_in(f: &Formula, mapping: &[(String, String)]) -> Formula {
    fn term(t: &Term, mapping: &[(String, String)]) -> Term {
        match t {
            Term::Const { name, sort } => {
                let new = mapping
                    .iter()
                    .find(|(old, _)| old == name)
                    .map(|(_, n)| n.clone())
                    .unwrap_or_else(|| name.clone());
                Term::constant(new, sort.clone())
            }
            Term::Var { .. } => t.clone(),
            Term::App { func, args, sort } => Term::App {
                func: func.clone(),
                args: args.iter().map(|a| term(a, mapping)).collect(),
                sort: sort.clone(),
            },
        }
    }
    fn walk(f: &Formula, mapping: &[(String, String)]) -> Formula {
        match f {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Not(a) => Formula::not(walk(a, mapping)),
            Formula::And(a, b) => Formula::and(walk(a, mapping), walk(b, mapping)),
            Formula::Or(a, b) => Formula::or(walk(a, mapping), walk(b, mapping)),
            Formula::Implies(a, b) => Formula::implies(walk(a, mapping), walk(b, mapping)),
            Formula::Iff(a, b) => Formula::iff(walk(a, mapping), walk(b, mapping)),
            Formula::Forall(v, body) => Formula::forall(v.clone(), walk(body, mapping)),
            Formula::Exists(v, body) => Formula::exists(v.clone(), walk(body, mapping)),
            Formula::Equals(a, b) => Formula::Equals(term(a, mapping), term(b, mapping)),
            Formula::Atom { pred, args } => Formula::Atom {
                pred: pred.clone(),
                args: args.iter().map(|t| term(t, mapping)).collect(),
            },
            Formula::Does { agent, action } => {
                Formula::does(term(agent, mapping), term(action, mapping))
            }
            Formula::Wills { agent, body } => {
                Formula::wills(term(agent, mapping), walk(body, mapping))
            }
            Formula::Causes { antecedent, consequent } => {
                Formula::causes(walk(antecedent, mapping), walk(consequent, mapping))
            }
            Formula::For { behavior, purpose } => {
                Formula::for_maxim(walk(behavior, mapping), walk(purpose, mapping))
            }
            Formula::Deontic { op, maxim } => Formula::deontic(*op, walk(maxim, mapping)),
        }
    }
    walk(f, mapping)
}

/// The same world with its axiom list deterministically shuffled.
pub fn reorder_axioms(kb: &KnowledgeBase, seed: u64) -> KnowledgeBase {
    let mut out = kb.clone();
    let mut rng = StdRng::seed_from_u64(seed);
    out.axioms.shuffle(&mut rng);
    out
}

/// A benchmark family: `n` copies of a promise-breaking world glued
/// into one knowledge base, each with its own maxim. Every maxim's
/// evaluation does real saturation work independent of the others.
pub fn bench_world(n: usize) -> KnowledgeBase {
    use std::fmt::Write;
    let mut src = String::new();
    src.push_str("sort Promise <: Action\nsort FalsePromise <: Promise\n");
    for i in 0..n {
        writeln!(src, "const karli{i}: Agent").unwrap();
        writeln!(src, "const jan{i}: Agent").unwrap();
    }
    for i in 0..n {
        writeln!(src, "fn promise{i}(Agent) -> Promise").unwrap();
        writeln!(src, "fn falsePromise{i}(Agent) -> FalsePromise refines promise{i}").unwrap();
        writeln!(src, "pred HasMoney{i}(Agent)").unwrap();
        writeln!(src, "pred Believes{i}(Agent, Promise)").unwrap();
    }
    for i in 0..n {
        writeln!(
            src,
            "axiom A{i}: exists a1:Agent. a1 != karli{i} and Wills(a1, HasMoney{i}(a1))"
        )
        .unwrap();
        writeln!(
            src,
            "axiom B{i}: forall a1, a2: Agent. Causes(Does(a1, promise{i}(a2)), HasMoney{i}(a1)) \
             -> Believes{i}(a2, promise{i}(a2))"
        )
        .unwrap();
        writeln!(
            src,
            "axiom C{i}: forall a2:Agent. Believes{i}(a2, promise{i}(a2)) -> \
             forall a3, a4: Agent. not Does(a3, falsePromise{i}(a4))"
        )
        .unwrap();
    }
    for i in 0..n {
        writeln!(
            src,
            "maxim M{i}: For(Does(karli{i}, falsePromise{i}(jan{i})), HasMoney{i}(karli{i}))"
        )
        .unwrap();
    }
    crate::parser::parse_kb(&src).expect("bench world parses")
}
