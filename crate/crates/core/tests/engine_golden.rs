//! End-to-end checks of the shipped worlds against hand-derived
//! expectations, plus independent oracles over the final fact sets.

use full_core::engine::{
    check_gamma_consistency, detect_contradiction, verify_complement, verify_trace,
    ResourceLimits, SaturationStatus, ScopeTag, WulSetup,
};
use full_core::evaluate::{evaluate, DutyKind, VerdictBasis};
use full_core::lang::{alpha_equivalent, complement, normalize, Formula, SortName, Term};
use full_core::universalize::universalize;
use full_core::{parse_kb, DeonticOp, KnowledgeBase};

fn load(name: &str) -> KnowledgeBase {
    let path = format!("{}/../../kb/{name}", env!("CARGO_MANIFEST_DIR"));
    let source = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {path}: {e}"));
    parse_kb(&source).unwrap_or_else(|e| panic!("parse {path}: {e}"))
}

fn agent(name: &str) -> Term {
    Term::constant(name, SortName::agent())
}

/// Independent oracle: brute-force scan of a final fact set for
/// complementary pairs, using only the complement function.
fn scan_for_complements(facts: &[full_core::engine::Fact]) -> Vec<(usize, usize)> {
    let mut found = Vec::new();
    for a in facts {
        for b in facts {
            if a.id < b.id && complement(&a.formula) == b.formula {
                found.push((a.id, b.id));
            }
        }
    }
    found
}

#[test]
fn false_promise_gamma_is_consistent() {
    let kb = load("falsepromise.full");
    let result = check_gamma_consistency(&kb, ResourceLimits::default());
    assert!(matches!(result.status, SaturationStatus::SaturatedConsistent));
    // Hand-check oracle: no complementary pair hides in the final set.
    assert!(scan_for_complements(result.context.facts()).is_empty());
}

#[test]
fn empty_gamma_saturates_in_zero_rounds() {
    let kb = parse_kb("sort Agent\n").unwrap();
    let result = check_gamma_consistency(&kb, ResourceLimits::default());
    assert!(matches!(result.status, SaturationStatus::SaturatedConsistent));
    assert_eq!(result.iterations, 0);
}

#[test]
fn directly_contradictory_gamma_is_caught() {
    let kb = parse_kb("pred P(Agent)\nconst c: Agent\naxiom A: P(c)\naxiom B: not P(c)\n").unwrap();
    let result = check_gamma_consistency(&kb, ResourceLimits::default());
    let SaturationStatus::Contradiction(e) = &result.status else {
        panic!("expected contradiction, got {:?}", result.status)
    };
    assert!(verify_complement(&e.positive, &e.negative));
}

#[test]
fn quantifier_clash_needs_witness_and_instantiation() {
    // forall x. P(x) against exists x. not P(x): the complementary pair
    // is caught, and saturation also derives the ground clash through a
    // witness plus universal elimination.
    let kb = parse_kb(
        "pred P(Agent)\nconst c: Agent\naxiom A: forall x:Agent. P(x)\naxiom B: exists x:Agent. not P(x)\n",
    )
    .unwrap();
    let result = check_gamma_consistency(&kb, ResourceLimits::default());
    let SaturationStatus::Contradiction(_) = &result.status else {
        panic!("expected contradiction")
    };
    let evidence = detect_contradiction(&result.context).expect("evidence");
    assert!(verify_complement(&evidence.positive, &evidence.negative));
    // The ground pair P(w1) / not P(w1) exists among all pairs.
    let w1 = Term::constant("w1", SortName::agent());
    let ground = Formula::atom("P", vec![w1]);
    let pairs = result.context.contradictions();
    assert!(
        pairs.iter().any(|e| alpha_equivalent(&e.positive, &ground)),
        "ground clash not derived; pairs: {:?}",
        pairs.len()
    );
}

fn assert_trace_contains(trace_facts: &[full_core::engine::Fact], expected: &Formula, label: &str) {
    assert!(
        trace_facts.iter().any(|f| alpha_equivalent(&f.formula, expected)),
        "missing {label} in trace"
    );
}

#[test]
fn false_promise_derivation_walks_the_expected_road() {
    let kb = load("falsepromise.full");
    let maxim = kb.maxim("M").unwrap().maxim.clone();
    let verdict = evaluate(&kb, DeonticOp::Imp, &maxim, ResourceLimits::default()).unwrap();
    assert!(verdict.answer);
    assert_eq!(verdict.duty, Some(DutyKind::Perfect));

    let VerdictBasis::Contradiction(evidence) = &verdict.basis else {
        panic!("expected contradiction basis")
    };
    let causal = normalize(&Formula::causes(maxim.behavior.clone(), maxim.purpose.clone()));
    assert!(alpha_equivalent(&evidence.positive, &causal));

    // Re-run at engine level to inspect the facts themselves.
    let ul = universalize(&maxim).unwrap();
    let ctx = full_core::engine::build_wul_context(&kb, &maxim, &ul, ResourceLimits::default());
    let result = full_core::engine::saturate(ctx);
    let facts = result.context.facts();

    let karli = agent("karli");
    let jan = agent("jan");
    let w1 = agent("w1");
    let fp = |t: Term| Term::app("falsePromise", vec![t], SortName::new("FalsePromise"));
    let promise = |t: Term| Term::app("promise", vec![t], SortName::new("Promise"));

    // The witness wills travel money, so it false promises someone.
    let x = Term::var("z", SortName::agent());
    let existential = Formula::exists(x.clone(), Formula::does(w1.clone(), fp(x.clone())));
    assert_trace_contains(facts, &existential, "the existential false-promising fact");

    // Nobody believes promises to repay.
    let no_believe = Formula::forall(
        x.clone(),
        Formula::not(Formula::atom("BelievesPromise", vec![x.clone(), promise(x.clone())])),
    );
    assert_trace_contains(facts, &no_believe, "the universal disbelief fact");

    // Karli's own false promise to jan is no means to travel money.
    let no_cause = Formula::not(Formula::causes(
        Formula::does(karli.clone(), fp(jan.clone())),
        Formula::atom("HasTravelMoney", vec![karli.clone()]),
    ));
    assert_trace_contains(facts, &no_cause, "the negated causal fact");

    // Scope discipline: background facts never cite willed premises.
    for fact in facts {
        if fact.scope == ScopeTag::Background {
            for &p in &fact.premises {
                assert_eq!(result.context.fact(p).scope, ScopeTag::Background);
            }
        }
    }

    assert!(facts.len() < 1_000, "derived {} facts", facts.len());
}

#[test]
fn murder_derivation_murders_the_murderer() {
    let kb = load("murder.full");
    let maxim = kb.maxim("M").unwrap().maxim.clone();
    let verdict = evaluate(&kb, DeonticOp::Imp, &maxim, ResourceLimits::default()).unwrap();
    assert!(verdict.answer);
    assert_eq!(verdict.duty, Some(DutyKind::Perfect));

    let ul = universalize(&maxim).unwrap();
    let ctx = full_core::engine::build_wul_context(&kb, &maxim, &ul, ResourceLimits::default());
    let result = full_core::engine::saturate(ctx);

    // In the willed world the rival witness murders karli.
    let w1 = agent("w1");
    let karli = agent("karli");
    let murdered = Formula::does(w1, Term::app("murder", vec![karli], SortName::action()));
    assert_trace_contains(result.context.facts(), &murdered, "the witness murdering karli");
}

#[test]
fn never_help_contradiction_lands_on_being_alive() {
    let kb = load("neverhelp.full");
    let maxim = kb.maxim("NeverHelp").unwrap().maxim.clone();
    let verdict = evaluate(&kb, DeonticOp::Imp, &maxim, ResourceLimits::default()).unwrap();
    assert!(verdict.answer);
    assert_eq!(verdict.duty, Some(DutyKind::Imperfect));
    let VerdictBasis::Contradiction(evidence) = &verdict.basis else {
        panic!("expected contradiction basis")
    };
    let alive = Formula::atom("Alive", vec![agent("karli")]);
    assert!(alpha_equivalent(&evidence.positive, &alive));

    // The pivotal intermediate: karli wills that nobody helps anybody.
    let ul = universalize(&maxim).unwrap();
    let ctx = full_core::engine::build_wul_context(&kb, &maxim, &ul, ResourceLimits::default());
    let result = full_core::engine::saturate(ctx);
    let x = Term::var("p", SortName::agent());
    let y = Term::var("q", SortName::agent());
    let nohelp = Formula::forall(
        x.clone(),
        Formula::forall(
            y.clone(),
            Formula::not(Formula::does(
                x.clone(),
                Term::app("help", vec![y.clone()], SortName::action()),
            )),
        ),
    );
    assert_trace_contains(result.context.facts(), &nohelp, "the universal no-help fact");
}

#[test]
fn obligation_to_help_follows_from_the_prohibition() {
    let kb = load("neverhelp.full");
    let maxim = kb.maxim("HelpSome").unwrap().maxim.clone();
    let verdict = evaluate(&kb, DeonticOp::Obl, &maxim, ResourceLimits::default()).unwrap();
    assert!(verdict.answer);
    assert_eq!(verdict.duty, Some(DutyKind::Imperfect));
    // The evaluated dual is the never-help maxim.
    assert!(alpha_equivalent(
        &verdict.evaluated.behavior,
        &kb.maxim("NeverHelp").unwrap().maxim.behavior
    ));
}

#[test]
fn surgeon_world_stays_consistent() {
    let kb = load("surgeon.full");
    let maxim = kb.maxim("M").unwrap().maxim.clone();
    let verdict = evaluate(&kb, DeonticOp::Perm, &maxim, ResourceLimits::default()).unwrap();
    assert!(verdict.answer);
    assert!(matches!(verdict.basis, VerdictBasis::SaturatedNoContradiction));

    let ul = universalize(&maxim).unwrap();
    let ctx = full_core::engine::build_wul_context(&kb, &maxim, &ul, ResourceLimits::default());
    let result = full_core::engine::saturate(ctx);
    assert!(scan_for_complements(result.context.facts()).is_empty());
}

#[test]
fn wul_context_carries_the_construction_facts() {
    let kb = load("falsepromise.full");
    let maxim = kb.maxim("M").unwrap().maxim.clone();
    let ul = universalize(&maxim).unwrap();
    let ctx = full_core::engine::build_wul_context(&kb, &maxim, &ul, ResourceLimits::default());
    let facts = ctx.facts();

    for name in ["B1", "B2", "B3"] {
        assert!(facts
            .iter()
            .any(|f| f.note.as_deref() == Some(name) && f.scope == ScopeTag::Background));
    }
    let karli = agent("karli");
    let expected_willed = [
        normalize(&ul.ul_formula),
        normalize(&maxim.behavior),
        normalize(&Formula::wills(karli.clone(), maxim.purpose.clone())),
        normalize(&Formula::causes(maxim.behavior.clone(), maxim.purpose.clone())),
        Formula::atom("Alive", vec![karli]),
    ];
    for expected in &expected_willed {
        assert!(
            facts
                .iter()
                .any(|f| f.scope == ScopeTag::Willed && alpha_equivalent(&f.formula, expected)),
            "missing willed construction fact: {expected:?}"
        );
    }
}

#[test]
fn traces_replay_under_the_step_checker() {
    for (file, maxim_name) in [
        ("falsepromise.full", "M"),
        ("murder.full", "M"),
        ("neverhelp.full", "NeverHelp"),
        ("surgeon.full", "M"),
    ] {
        let kb = load(file);
        let maxim = kb.maxim(maxim_name).unwrap().maxim.clone();
        let ul = universalize(&maxim).unwrap();
        let ctx = full_core::engine::build_wul_context(&kb, &maxim, &ul, ResourceLimits::default());
        let result = full_core::engine::saturate(ctx);
        let setup = WulSetup { maxim, ul_formula: ul.ul_formula.clone() };
        verify_trace(&result.context, &kb, Some(&setup))
            .unwrap_or_else(|e| panic!("{file}: {e}"));
    }
}

#[test]
fn saturation_is_deterministic() {
    let kb = load("falsepromise.full");
    let maxim = kb.maxim("M").unwrap().maxim.clone();
    let run = || {
        let ul = universalize(&maxim).unwrap();
        let ctx = full_core::engine::build_wul_context(&kb, &maxim, &ul, ResourceLimits::default());
        let result = full_core::engine::saturate(ctx);
        let doc = full_core::engine::TraceDocument::from_context(
            &result.context,
            &result.status,
            result.iterations,
        );
        serde_json::to_string(&doc).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn shipped_verdicts_survive_axiom_reordering() {
    use full_core::synth::reorder_axioms;
    for (file, maxim_name, op) in [
        ("falsepromise.full", "M", DeonticOp::Imp),
        ("murder.full", "M", DeonticOp::Imp),
        ("neverhelp.full", "NeverHelp", DeonticOp::Imp),
        ("surgeon.full", "M", DeonticOp::Perm),
    ] {
        let kb = load(file);
        let maxim = kb.maxim(maxim_name).unwrap().maxim.clone();
        let base = evaluate(&kb, op, &maxim, ResourceLimits::default()).unwrap();
        for seed in 0..4 {
            let shuffled = reorder_axioms(&kb, seed);
            let v = evaluate(&shuffled, op, &maxim, ResourceLimits::default()).unwrap();
            assert_eq!(base.answer, v.answer, "{file} seed {seed}");
            assert_eq!(base.basis_name(), v.basis_name(), "{file} seed {seed}");
            assert_eq!(base.duty, v.duty, "{file} seed {seed}");
        }
    }
}

#[test]
fn shipped_worlds_round_trip_through_the_renderer() {
    for file in ["falsepromise.full", "murder.full", "surgeon.full", "neverhelp.full"] {
        let kb = load(file);
        let rendered = full_core::render::render_kb(&kb);
        let reparsed = parse_kb(&rendered).unwrap_or_else(|e| panic!("{file}: {e}"));
        assert_eq!(kb, reparsed, "{file} does not round trip");
    }
}

#[test]
fn contradiction_detection_is_symmetric() {
    // Axiom order must not change which pair is found.
    let forward =
        parse_kb("pred P(Agent)\nconst c: Agent\naxiom A: P(c)\naxiom B: not P(c)\n").unwrap();
    let backward =
        parse_kb("pred P(Agent)\nconst c: Agent\naxiom A: not P(c)\naxiom B: P(c)\n").unwrap();
    let limits = ResourceLimits::default();
    let get = |kb: &KnowledgeBase| {
        let result = check_gamma_consistency(kb, limits);
        detect_contradiction(&result.context).expect("pair")
    };
    let a = get(&forward);
    let b = get(&backward);
    assert!(alpha_equivalent(&a.positive, &b.positive));
    assert!(alpha_equivalent(&a.negative, &b.negative));
}

#[test]
fn gamma_inconsistency_is_a_refusal() {
    let kb = parse_kb(
        "pred P(Agent)\nconst c: Agent\nfn act() -> Action\naxiom A: P(c)\naxiom B: not P(c)\nmaxim M: For(Does(c, act()), P(c))\n",
    )
    .unwrap();
    let maxim = kb.maxim("M").unwrap().maxim.clone();
    for op in [DeonticOp::Perm, DeonticOp::Imp, DeonticOp::Obl] {
        let verdict = evaluate(&kb, op, &maxim, ResourceLimits::default()).unwrap();
        assert!(!verdict.answer);
        assert!(matches!(verdict.basis, VerdictBasis::GammaInconsistent));
        assert!(verdict.duty.is_none());
    }
}

#[test]
fn exhaustion_is_reported_with_the_unproven_marker() {
    let kb = load("neverhelp.full");
    let maxim = kb.maxim("HelpSome").unwrap().maxim.clone();
    // The willed world of "everyone helps someone" spawns witness after
    // witness; the bounded search gives up and the default assumption
    // kicks in.
    let limits = ResourceLimits { max_facts: 300, ..ResourceLimits::default() };
    let perm = evaluate(&kb, DeonticOp::Perm, &maxim, limits).unwrap();
    assert!(!perm.answer);
    assert!(matches!(perm.basis, VerdictBasis::ResourceExhausted));
    assert!(perm.unproven);
    let imp = evaluate(&kb, DeonticOp::Imp, &maxim, limits).unwrap();
    assert!(imp.answer);
    assert!(imp.unproven);
}

#[test]
fn universal_law_grounding_round_trip() {
    // Grounding the law's universal block at the original constants and
    // witnessing the existential block with the original behavior
    // constants re-derives the maxim's behavior exactly.
    for (file, maxim_name) in [
        ("falsepromise.full", "M"),
        ("murder.full", "M"),
        ("neverhelp.full", "NeverHelp"),
        ("neverhelp.full", "HelpSome"),
        ("surgeon.full", "M"),
    ] {
        let kb = load(file);
        let maxim = kb.maxim(maxim_name).unwrap().maxim.clone();
        let ul = universalize(&maxim).unwrap();
        let behavior = ground_round_trip(&ul);
        assert!(
            alpha_equivalent(&behavior.0, &maxim.behavior),
            "{file}/{maxim_name}: got {:?}",
            behavior.0
        );
        assert!(
            alpha_equivalent(&behavior.1, &Formula::wills(maxim.agent.clone(), maxim.purpose.clone())),
            "{file}/{maxim_name}: premise mismatch"
        );
    }
}

/// Strips the law's quantifier blocks, replacing mapped variables with
/// their original constants, and returns (rebuilt behavior, premise).
fn ground_round_trip(
    ul: &full_core::universalize::UniversalizationRecord,
) -> (Formula, Formula) {
    use full_core::lang::ground_variable;
    let inverse: Vec<(Term, Term)> = ul
        .sigma
        .pairs()
        .iter()
        .map(|(c, v)| (v.clone(), c.clone()))
        .collect();
    let mut cur = ul.ul_formula.clone();
    let mut hoisted: Vec<Term> = Vec::new();
    while let Formula::Forall(v, body) = cur {
        match inverse.iter().find(|(var, _)| var.name() == v.name()) {
            Some((_, constant)) => cur = ground_variable(&body, &v, constant),
            None => {
                hoisted.push(v.clone());
                cur = (*body).clone();
            }
        }
    }
    let Formula::Implies(premise, consequent) = cur else {
        panic!("law core must be an implication")
    };
    let mut body = (*consequent).clone();
    let t1_constants: Vec<Term> = ul.t_phi1.to_vec();
    for constant in &t1_constants {
        let Formula::Exists(v, inner) = body else {
            panic!("missing existential for {constant:?}")
        };
        body = ground_variable(&inner, &v, constant);
    }
    for v in hoisted.into_iter().rev() {
        body = Formula::forall(v, body);
    }
    (body, (*premise).clone())
}
