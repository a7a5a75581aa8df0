//! Text form of terms, formulas, maxims and whole knowledge bases.
//!
//! `parse(render(v))` returns a value structurally identical to `v`;
//! the property tests lean on that.

use crate::kb::KnowledgeBase;
use crate::lang::{DeonticOp, Formula, Maxim, Term};

// Binding strength, loosest to tightest. Quantifiers scope maximally
// right, so they sit below everything and get parenthesized whenever
// they appear as an operand.
const PREC_QUANT: u8 = 0;
const PREC_IFF: u8 = 1;
const PREC_IMPLIES: u8 = 2;
const PREC_OR: u8 = 3;
const PREC_AND: u8 = 4;
const PREC_NOT: u8 = 5;
const PREC_ATOM: u8 = 6;

pub fn render_term(term: &Term) -> String {
    match term {
        Term::Var { name, .. } | Term::Const { name, .. } => name.clone(),
        Term::App { func, args, .. } => {
            if args.is_empty() {
                func.clone()
            } else {
                let inner: Vec<String> = args.iter().map(render_term).collect();
                format!("{}({})", func, inner.join(", "))
            }
        }
    }
}

pub fn render_formula(formula: &Formula) -> String {
    render_prec(formula, PREC_QUANT)
}

fn render_prec(f: &Formula, required: u8) -> String {
    let (text, prec) = match f {
        Formula::True => ("true".to_string(), PREC_ATOM),
        Formula::False => ("false".to_string(), PREC_ATOM),
        Formula::Not(inner) => match inner.as_ref() {
            Formula::Equals(a, b) => {
                (format!("{} != {}", render_term(a), render_term(b)), PREC_ATOM)
            }
            _ => (format!("not {}", render_prec(inner, PREC_NOT)), PREC_NOT),
        },
        Formula::And(a, b) => (
            format!("{} and {}", render_prec(a, PREC_NOT), render_prec(b, PREC_AND)),
            PREC_AND,
        ),
        Formula::Or(a, b) => (
            format!("{} or {}", render_prec(a, PREC_AND), render_prec(b, PREC_OR)),
            PREC_OR,
        ),
        Formula::Implies(a, b) => (
            format!("{} -> {}", render_prec(a, PREC_OR), render_prec(b, PREC_IMPLIES)),
            PREC_IMPLIES,
        ),
        Formula::Iff(a, b) => (
            format!("{} <-> {}", render_prec(a, PREC_IMPLIES), render_prec(b, PREC_IFF)),
            PREC_IFF,
        ),
        Formula::Forall(v, body) => (
            format!("forall {}:{}. {}", v.name(), v.sort(), render_prec(body, PREC_QUANT)),
            PREC_QUANT,
        ),
        Formula::Exists(v, body) => (
            format!("exists {}:{}. {}", v.name(), v.sort(), render_prec(body, PREC_QUANT)),
            PREC_QUANT,
        ),
        Formula::Equals(a, b) => {
            (format!("{} = {}", render_term(a), render_term(b)), PREC_ATOM)
        }
        Formula::Atom { pred, args } => {
            let text = if args.is_empty() {
                pred.clone()
            } else {
                let inner: Vec<String> = args.iter().map(render_term).collect();
                format!("{}({})", pred, inner.join(", "))
            };
            (text, PREC_ATOM)
        }
        Formula::Does { agent, action } => (
            format!("Does({}, {})", render_term(agent), render_term(action)),
            PREC_ATOM,
        ),
        Formula::Wills { agent, body } => (
            format!("Wills({}, {})", render_term(agent), render_formula(body)),
            PREC_ATOM,
        ),
        Formula::Causes { antecedent, consequent } => (
            format!("Causes({}, {})", render_formula(antecedent), render_formula(consequent)),
            PREC_ATOM,
        ),
        Formula::For { behavior, purpose } => (
            format!("For({}, {})", render_formula(behavior), render_formula(purpose)),
            PREC_ATOM,
        ),
        Formula::Deontic { op, maxim } => {
            (format!("{}({})", op.keyword(), render_formula(maxim)), PREC_ATOM)
        }
    };
    if prec < required {
        format!("({})", text)
    } else {
        text
    }
}

pub fn render_maxim(maxim: &Maxim) -> String {
    render_formula(&maxim.to_formula())
}

pub fn render_deontic_query(op: DeonticOp, maxim: &Maxim) -> String {
    format!("{}({})", op.keyword(), render_maxim(maxim))
}

/// Whole-file form: declarations in the order the parser requires.
pub fn render_kb(kb: &KnowledgeBase) -> String {
    let mut out = String::new();
    for (sort, parent) in kb.sorts.declared() {
        out.push_str(&format!("sort {} <: {}\n", sort, parent.expect("declared sort has parent")));
    }
    for c in &kb.constants {
        out.push_str(&format!("const {}: {}\n", c.name, c.sort));
    }
    for f in &kb.functions {
        let params: Vec<String> = f.params.iter().map(|s| s.to_string()).collect();
        out.push_str(&format!("fn {}({}) -> {}", f.name, params.join(", "), f.result));
        if let Some(target) = &f.refines {
            out.push_str(&format!(" refines {}", target));
        }
        out.push('\n');
    }
    for p in &kb.predicates {
        let params: Vec<String> = p.params.iter().map(|s| s.to_string()).collect();
        out.push_str(&format!("pred {}({})\n", p.name, params.join(", ")));
    }
    for ax in &kb.axioms {
        out.push_str(&format!("axiom {}: {}\n", ax.name, render_formula(&ax.formula)));
    }
    for n in &kb.necessities {
        out.push_str(&format!(
            "necessity {}({}: {}): {}\n",
            n.name,
            n.var.name(),
            n.var.sort(),
            render_formula(&n.template)
        ));
    }
    for m in &kb.maxims {
        out.push_str(&format!("maxim {}: {}\n", m.name, render_maxim(&m.maxim)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::SortName;

    #[test]
    fn parenthesizes_by_precedence() {
        let p = Formula::atom("P", vec![]);
        let q = Formula::atom("Q", vec![]);
        let r = Formula::atom("R", vec![]);
        // (P or Q) and R needs parens; P or (Q and R) does not.
        let f = Formula::and(Formula::or(p.clone(), q.clone()), r.clone());
        assert_eq!(render_formula(&f), "(P or Q) and R");
        let g = Formula::or(p, Formula::and(q, r));
        assert_eq!(render_formula(&g), "P or Q and R");
    }

    #[test]
    fn truth_renders_as_keyword() {
        assert_eq!(render_formula(&Formula::True), "true");
    }

    #[test]
    fn inequality_renders_as_operator() {
        let a = Term::constant("a", SortName::agent());
        let b = Term::constant("b", SortName::agent());
        assert_eq!(render_formula(&Formula::not_equals(a, b)), "a != b");
    }

    #[test]
    fn quantifier_in_operand_position_gets_parens() {
        let x = Term::var("x", SortName::agent());
        let f = Formula::and(
            Formula::forall(x.clone(), Formula::atom("P", vec![x.clone()])),
            Formula::atom("Q", vec![]),
        );
        assert_eq!(render_formula(&f), "(forall x:Agent. P(x)) and Q");
    }

    #[test]
    fn right_associative_chains_render_flat() {
        let p = Formula::atom("P", vec![]);
        let q = Formula::atom("Q", vec![]);
        let r = Formula::atom("R", vec![]);
        let f = Formula::implies(p.clone(), Formula::implies(q.clone(), r.clone()));
        assert_eq!(render_formula(&f), "P -> Q -> R");
        let g = Formula::implies(Formula::implies(p, q), r);
        assert_eq!(render_formula(&g), "(P -> Q) -> R");
    }
}
