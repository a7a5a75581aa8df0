//! `full` — evaluate maxims against a world description.
//!
//! Exit codes are a stable contract: 0 when the queried answer is true
//! (or the checked world is consistent), 1 when it is false, 2 for
//! diagnostics and refusals (parse errors, missing files, unknown
//! maxims, inconsistent backgrounds).

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use full_core::engine::{ResourceLimits, SaturationStatus, TraceDocument};
use full_core::evaluate::{evaluate, evaluate_all, BatchEntry, DutyKind, Verdict, VerdictBasis};
use full_core::render::{render_formula, render_maxim, render_term};
use full_core::universalize::universalize;
use full_core::{parse_kb, DeonticOp, KnowledgeBase};

#[derive(Parser)]
#[command(name = "full", version, about = "Universalizability testing for maxims")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OpArg {
    Perm,
    Imp,
    Obl,
}

impl From<OpArg> for DeonticOp {
    fn from(op: OpArg) -> DeonticOp {
        match op {
            OpArg::Perm => DeonticOp::Perm,
            OpArg::Imp => DeonticOp::Imp,
            OpArg::Obl => DeonticOp::Obl,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
}

#[derive(Args)]
struct LimitArgs {
    /// Stop after this many stored facts.
    #[arg(long, default_value_t = 10_000)]
    max_facts: usize,
    /// Stop after this many saturation rounds.
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    /// Keep no derived fact whose terms nest deeper than this.
    #[arg(long, default_value_t = 4)]
    max_term_depth: usize,
}

impl LimitArgs {
    fn limits(&self) -> ResourceLimits {
        ResourceLimits {
            max_facts: self.max_facts,
            max_iterations: self.max_iterations,
            max_term_depth: self.max_term_depth,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a knowledge base and check its background for consistency.
    Check {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Print the universal law of a named maxim.
    Universalize {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        maxim: String,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Evaluate one maxim under a deontic operator.
    Eval {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        maxim: String,
        #[arg(long, value_enum, default_value_t = OpArg::Perm)]
        op: OpArg,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
        /// Include the full derivation trace in the output.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Evaluate every maxim in the knowledge base.
    Batch {
        #[arg(long)]
        kb: PathBuf,
        /// Operators to evaluate; defaults to all three.
        #[arg(long, value_enum)]
        op: Vec<OpArg>,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
        #[command(flatten)]
        limits: LimitArgs,
    },
}

struct Palette {
    enabled: bool,
}

impl Palette {
    fn from_env() -> Self {
        let mode = std::env::var("FULL_COLOR").unwrap_or_else(|_| "auto".to_string());
        let enabled = match mode.as_str() {
            "always" => true,
            "never" => false,
            _ => std::io::stdout().is_terminal(),
        };
        Palette { enabled }
    }

    fn paint(&self, code: &str, text: &str) -> String {
        if self.enabled {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    fn good(&self, text: &str) -> String {
        self.paint("32", text)
    }

    fn bad(&self, text: &str) -> String {
        self.paint("31", text)
    }

    fn warn(&self, text: &str) -> String {
        self.paint("33", text)
    }

    fn dim(&self, text: &str) -> String {
        self.paint("2", text)
    }
}

fn main() -> ExitCode {
    // Die quietly when the reader of a pipe goes away, as under
    // `full ... | head`.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn load_kb(path: &PathBuf) -> Result<KnowledgeBase, String> {
    let source = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_kb(&source).map_err(|e| format!("{}:{e}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    let palette = Palette::from_env();
    match cli.command {
        Command::Check { kb, format, limits } => {
            let kb = load_kb(&kb)?;
            let result = full_core::engine::check_gamma_consistency(&kb, limits.limits());
            let consistent = matches!(result.status, SaturationStatus::SaturatedConsistent);
            match format {
                Format::Json => {
                    let doc = serde_json::json!({
                        "consistent": consistent,
                        "status": status_name(&result.status),
                        "axioms": kb.axioms.len(),
                        "facts": result.context.facts().len(),
                        "iterations": result.iterations,
                    });
                    println!("{}", serde_json::to_string_pretty(&doc).expect("serializes"));
                }
                Format::Human => match &result.status {
                    SaturationStatus::SaturatedConsistent => println!(
                        "{} ({} axioms, {} facts, {} rounds)",
                        palette.good("consistent"),
                        kb.axioms.len(),
                        result.context.facts().len(),
                        result.iterations
                    ),
                    SaturationStatus::Contradiction(e) => {
                        println!("{}", palette.bad("inconsistent background"));
                        println!("  {}", render_formula(&e.positive));
                        println!("  {}", render_formula(&e.negative));
                    }
                    SaturationStatus::ResourceExhausted => {
                        println!("{}", palette.warn("resource limits reached before saturation"));
                    }
                },
            }
            Ok(if consistent { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Universalize { kb, maxim, format } => {
            let kb = load_kb(&kb)?;
            let named = kb.maxim(&maxim).map_err(|e| e.to_string())?;
            let record = universalize(&named.maxim).map_err(|e| e.to_string())?;
            match format {
                Format::Json => {
                    let doc = serde_json::json!({
                        "maxim": render_maxim(&named.maxim),
                        "universal_constants": record.t_phi2.iter().map(render_term).collect::<Vec<_>>(),
                        "existential_constants": record.t_phi1.iter().map(render_term).collect::<Vec<_>>(),
                        "sigma": record.sigma.pairs().iter().map(|(c, v)| serde_json::json!({
                            "constant": render_term(c),
                            "variable": render_term(v),
                        })).collect::<Vec<_>>(),
                        "universal_law": render_formula(&record.ul_formula),
                    });
                    println!("{}", serde_json::to_string_pretty(&doc).expect("serializes"));
                }
                Format::Human => {
                    println!("maxim        {}", render_maxim(&named.maxim));
                    println!(
                        "universal    {{{}}}",
                        record.t_phi2.iter().map(render_term).collect::<Vec<_>>().join(", ")
                    );
                    println!(
                        "existential  {{{}}}",
                        record.t_phi1.iter().map(render_term).collect::<Vec<_>>().join(", ")
                    );
                    let sigma: Vec<String> = record
                        .sigma
                        .pairs()
                        .iter()
                        .map(|(c, v)| format!("{} -> {}", render_term(c), render_term(v)))
                        .collect();
                    println!("sigma        {{{}}}", sigma.join(", "));
                    println!("law          {}", render_formula(&record.ul_formula));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { kb, maxim, op, format, trace, limits } => {
            let kb = load_kb(&kb)?;
            let named = kb.maxim(&maxim).map_err(|e| e.to_string())?;
            let verdict = evaluate(&kb, op.into(), &named.maxim, limits.limits())
                .map_err(|e| e.to_string())?;
            match format {
                Format::Json => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&verdict.to_json(trace))
                            .expect("serializes")
                    );
                }
                Format::Human => print_verdict(&palette, &maxim, &verdict, trace),
            }
            Ok(exit_for(&verdict))
        }
        Command::Batch { kb, op, format, limits } => {
            let kb = load_kb(&kb)?;
            let ops: Vec<DeonticOp> = if op.is_empty() {
                vec![DeonticOp::Perm, DeonticOp::Imp, DeonticOp::Obl]
            } else {
                op.into_iter().map(DeonticOp::from).collect()
            };
            let rows = evaluate_all(&kb, &ops, limits.limits()).map_err(|e| e.to_string())?;
            let refused = rows
                .iter()
                .any(|r| matches!(r.verdict.basis, VerdictBasis::GammaInconsistent));
            match format {
                Format::Json => {
                    let doc: Vec<serde_json::Value> = rows
                        .iter()
                        .map(|r| {
                            let mut v = r.verdict.to_json(false);
                            v["maxim_name"] = serde_json::json!(r.maxim_name);
                            v
                        })
                        .collect();
                    println!("{}", serde_json::to_string_pretty(&doc).expect("serializes"));
                }
                Format::Human => print_batch(&palette, &rows),
            }
            Ok(if refused { ExitCode::from(2) } else { ExitCode::SUCCESS })
        }
    }
}

fn status_name(status: &SaturationStatus) -> &'static str {
    match status {
        SaturationStatus::SaturatedConsistent => "saturated_consistent",
        SaturationStatus::Contradiction(_) => "contradiction",
        SaturationStatus::ResourceExhausted => "resource_exhausted",
    }
}

fn exit_for(verdict: &Verdict) -> ExitCode {
    match verdict.basis {
        VerdictBasis::GammaInconsistent => ExitCode::from(2),
        _ if verdict.answer => ExitCode::SUCCESS,
        _ => ExitCode::from(1),
    }
}

fn duty_name(duty: DutyKind) -> &'static str {
    match duty {
        DutyKind::Perfect => "perfect",
        DutyKind::Imperfect => "imperfect",
        DutyKind::Unclassified => "unclassified",
    }
}

fn print_verdict(palette: &Palette, name: &str, verdict: &Verdict, trace: bool) {
    let answer = if verdict.answer {
        palette.good("true")
    } else {
        palette.bad("false")
    };
    println!("{}({}) = {}", verdict.op.keyword(), name, answer);
    println!("  maxim   {}", render_maxim(&verdict.maxim));
    println!("  law     {}", render_formula(&verdict.ul.ul_formula));
    println!("  basis   {}", verdict.basis_name());
    if verdict.unproven {
        println!(
            "  {}",
            palette.warn("unproven: search limits reached; impermissible by default assumption")
        );
    }
    if let VerdictBasis::Contradiction(e) = &verdict.basis {
        println!("  clash   {}", render_formula(&e.positive));
        println!("          {}", render_formula(&e.negative));
    }
    if let Some(duty) = verdict.duty {
        println!("  duty    {}", duty_name(duty));
    }
    if verdict.observed_duties.len() > 1 {
        let rest: Vec<&str> = verdict.observed_duties[1..].iter().copied().map(duty_name).collect();
        println!("  also    {} (from other clashes)", rest.join(", "));
    }
    if trace {
        println!("  trace   ({} facts)", verdict.trace.facts.len());
        print_trace(palette, &verdict.trace);
    }
}

fn print_trace(palette: &Palette, trace: &TraceDocument) {
    for fact in &trace.facts {
        let origin = match (&fact.note, fact.premises.is_empty()) {
            (Some(note), _) => format!("{} {}", fact.rule, note),
            (None, true) => fact.rule.clone(),
            (None, false) => format!(
                "{} [{}]",
                fact.rule,
                fact.premises.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")
            ),
        };
        println!(
            "  {:>4}  {:<12} {}  {}",
            fact.id,
            fact.scope,
            palette.dim(&origin),
            fact.text
        );
    }
}

fn print_batch(palette: &Palette, rows: &[BatchEntry]) {
    let name_width = rows
        .iter()
        .map(|r| r.maxim_name.len())
        .max()
        .unwrap_or(5)
        .max(5);
    println!("{:<width$}  {:<4}  {:<5}  {:<26}  duty", "maxim", "op", "ans", "basis", width = name_width);
    for row in rows {
        let v = &row.verdict;
        let answer = if v.answer { palette.good("true") } else { palette.bad("false") };
        let duty = v.duty.map(duty_name).unwrap_or("-");
        println!(
            "{:<width$}  {:<4}  {:<5}  {:<26}  {}",
            row.maxim_name,
            v.op.keyword(),
            answer,
            v.basis_name(),
            duty,
            width = name_width
        );
    }
}
