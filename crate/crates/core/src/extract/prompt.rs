use serde::Serialize;
use serde_json::{json, Value};

use super::{ExtractionConfig, KnownEntity};

pub const ROLE_PREAMBLE: &str = "You are a proficient data analyst reading a novel. \
Identify the people, times and places in the passage and report them as structured data.";

/// Below this many reader-confirmed entities the plan tells the model to lean
/// on its own knowledge.
pub const KNOWLEDGE_BALANCE_MIN: usize = 3;

pub const RELY_ON_MODEL_KNOWLEDGE: &str = "Few entities have been confirmed by the reader. \
Rely on your own knowledge of the story and of naming conventions to find the remaining entities.";

const TRUST_KNOWN: &str = "Entities confirmed by the reader are authoritative. \
Report each of them with confidence 1.0 and prefer their spelling over any alias.";

const CHAIN_RULES: [&str; 5] = [
    "Step 1: identify every person mentioned by name, title or role.",
    "Step 2: identify every time expression (dates, times of day, seasons, named periods).",
    "Step 3: identify every place (buildings, streets, towns, landscapes).",
    "Step 4: resolve aliases so that each entity is reported once under its canonical name.",
    "Step 5: emit the structured list described by the schema and nothing else.",
];

/// The instruction set sent to a language model. Identical inputs give a
/// byte-identical plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PromptPlan {
    pub role_preamble: String,
    pub chain_rules: Vec<String>,
    pub known_entities: Vec<KnownEntity>,
    pub trust_threshold: f64,
    pub output_schema: Value,
}

impl PromptPlan {
    pub fn balances_knowledge(&self) -> bool {
        self.chain_rules.iter().any(|r| r == RELY_ON_MODEL_KNOWLEDGE)
    }

    /// Human-readable rendering, one instruction per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.role_preamble);
        out.push('\n');
        for r in &self.chain_rules {
            out.push_str(r);
            out.push('\n');
        }
        for k in &self.known_entities {
            out.push_str(&format!("Known {}: {}\n", k.kind, k.name));
        }
        out.push_str(&format!("Trust threshold: {}\n", self.trust_threshold));
        out.push_str(&format!("Schema: {}\n", self.output_schema));
        out
    }
}

pub fn output_schema() -> Value {
    json!({
        "type": "object",
        "required": ["entities"],
        "properties": {
            "entities": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["surface", "kind", "confidence"],
                    "properties": {
                        "surface": {"type": "string", "minLength": 1},
                        "kind": {"enum": ["person", "time", "place", "event"]},
                        "confidence": {"type": "number", "minimum": 0, "maximum": 1}
                    }
                }
            },
            "summary": {"type": "string"}
        }
    })
}

/// Builds the plan for a passage. Known entities are deduplicated by
/// (kind, folded name) with first occurrence kept.
pub fn build_prompt(known: &[KnownEntity], config: &ExtractionConfig) -> PromptPlan {
    let mut unique: Vec<KnownEntity> = Vec::new();
    for k in known {
        if !unique.iter().any(|u| u.kind == k.kind && crate::text::fold(&u.name) == crate::text::fold(&k.name)) {
            unique.push(k.clone());
        }
    }
    let mut rules: Vec<String> = CHAIN_RULES.iter().map(|s| s.to_string()).collect();
    if !unique.is_empty() {
        rules.push(TRUST_KNOWN.to_owned());
    }
    if unique.len() < KNOWLEDGE_BALANCE_MIN {
        rules.push(RELY_ON_MODEL_KNOWLEDGE.to_owned());
    }
    PromptPlan {
        role_preamble: ROLE_PREAMBLE.to_owned(),
        chain_rules: rules,
        known_entities: unique,
        trust_threshold: config.trust_threshold,
        output_schema: output_schema(),
    }
}
