//! Structured export of a derivation for the command line and the
//! replay tests.

use serde::{Deserialize, Serialize};

use crate::render::{render_formula, render_term};

use super::{DerivationContext, SaturationStatus};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceFact {
    pub id: usize,
    pub scope: String,
    pub text: String,
    pub rule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub premises: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub terms: Vec<String>,
    pub round: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub willed_agent: Option<String>,
    pub status: String,
    pub iterations: usize,
    pub facts: Vec<TraceFact>,
}

impl TraceDocument {
    pub fn from_context(
        ctx: &DerivationContext,
        status: &SaturationStatus,
        iterations: usize,
    ) -> Self {
        let status = match status {
            SaturationStatus::SaturatedConsistent => "saturated_consistent",
            SaturationStatus::Contradiction(_) => "contradiction",
            SaturationStatus::ResourceExhausted => "resource_exhausted",
        };
        TraceDocument {
            willed_agent: ctx.willed_agent.as_ref().map(render_term),
            status: status.to_string(),
            iterations,
            facts: ctx
                .facts()
                .iter()
                .map(|f| TraceFact {
                    id: f.id,
                    scope: match f.scope {
                        super::ScopeTag::Background => "background".to_string(),
                        super::ScopeTag::Willed => match &ctx.willed_agent {
                            Some(agent) => format!("willed({})", render_term(agent)),
                            None => "willed".to_string(),
                        },
                    },
                    text: render_formula(&f.formula),
                    rule: f.rule.as_str().to_string(),
                    note: f.note.clone(),
                    premises: f.premises.clone(),
                    terms: f.terms.iter().map(render_term).collect(),
                    round: f.round,
                })
                .collect(),
        }
    }
}
