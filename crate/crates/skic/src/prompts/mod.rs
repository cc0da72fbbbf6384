//! Prompt assembly: the skill block, worked exemplars, and the question,
//! composed under the full method, its ablations, and plain baselines.

#[cfg(test)]
mod tests;

use crate::rng::instance_seed;
use crate::skills::{builtin_registry, render_skill_block, SkillError};
use crate::tasks::{generate, GoldAnswer, Payload, TaskError, TaskFamily, TaskInstance};
use crate::traces::{gold_trace, render, subtraction_gold, TraceError};
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("variant {0:?} needs at least one exemplar")]
    NoExemplars(PromptVariant),
    #[error("could not draw {requested} distinct exemplars (got {found})")]
    ExemplarsExhausted { requested: usize, found: usize },
    #[error("exemplar levels must be non-empty")]
    NoLevels,
    #[error(transparent)]
    Skill(#[from] SkillError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Task(#[from] TaskError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PromptVariant {
    Skic,
    SkicNoSkills,
    SkicNoGrounding,
    Cot,
    Fewshot,
    Zeroshot,
}

pub const ALL_VARIANTS: [PromptVariant; 6] = [
    PromptVariant::Skic,
    PromptVariant::SkicNoSkills,
    PromptVariant::SkicNoGrounding,
    PromptVariant::Cot,
    PromptVariant::Fewshot,
    PromptVariant::Zeroshot,
];

impl PromptVariant {
    pub fn name(self) -> &'static str {
        match self {
            PromptVariant::Skic => "skic",
            PromptVariant::SkicNoSkills => "skic_no_skills",
            PromptVariant::SkicNoGrounding => "skic_no_grounding",
            PromptVariant::Cot => "cot",
            PromptVariant::Fewshot => "fewshot",
            PromptVariant::Zeroshot => "zeroshot",
        }
    }

    pub fn parse_name(s: &str) -> Option<PromptVariant> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "skic" => Some(PromptVariant::Skic),
            "skic_no_skills" | "no_skills" => Some(PromptVariant::SkicNoSkills),
            "skic_no_grounding" | "no_grounding" => Some(PromptVariant::SkicNoGrounding),
            "cot" => Some(PromptVariant::Cot),
            "fewshot" | "few_shot" => Some(PromptVariant::Fewshot),
            "zeroshot" | "zero_shot" => Some(PromptVariant::Zeroshot),
            _ => None,
        }
    }

    pub fn includes_skill_block(self) -> bool {
        matches!(self, PromptVariant::Skic | PromptVariant::SkicNoGrounding)
    }

    pub fn includes_grounding(self) -> bool {
        matches!(self, PromptVariant::Skic | PromptVariant::SkicNoSkills)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub instance: TaskInstance,
    /// Rendered gold trace; variants derive their exemplar bodies from it.
    pub solution_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub variant: PromptVariant,
    pub family: TaskFamily,
    pub exemplar_ids: Vec<String>,
    /// None means the family's full bundle.
    pub skill_subset: Option<Vec<String>>,
    pub question_text: String,
    pub assembled: String,
    pub char_count: usize,
}

impl PromptSpec {
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.assembled.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn manifest(&self) -> serde_json::Value {
        serde_json::json!({
            "variant": self.variant,
            "family": self.family,
            "exemplar_ids": self.exemplar_ids,
            "skill_subset": self.skill_subset,
            "content_hash": self.content_hash(),
        })
    }
}

// keeps exemplar draws out of the evaluation seed stream
const EXEMPLAR_SALT: u64 = 0x4558454d504c4152;

/// Draw `k` exemplars cycling through `levels` in ascending order, each with
/// its rendered gold trace. Ids never collide with evaluation instances
/// built from the same master seed.
pub fn select_exemplars(
    family: TaskFamily,
    levels: &[u32],
    k: usize,
    seed: u64,
) -> Result<Vec<Exemplar>, PromptError> {
    if k == 0 {
        return Ok(Vec::new());
    }
    if levels.is_empty() {
        return Err(PromptError::NoLevels);
    }
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    let mut out: Vec<Exemplar> = Vec::with_capacity(k);
    let mut index = 0u64;
    let budget = (k as u64) * 50;
    while out.len() < k && index < budget {
        let level = levels[out.len() % levels.len()];
        let instance = generate(family, level, instance_seed(seed ^ EXEMPLAR_SALT, index))?;
        index += 1;
        if out.iter().any(|e| e.instance.id == instance.id) {
            continue;
        }
        let solution_text = render(&gold_trace(&instance)?);
        out.push(Exemplar {
            instance,
            solution_text,
        });
    }
    if out.len() < k {
        return Err(PromptError::ExemplarsExhausted {
            requested: k,
            found: out.len(),
        });
    }
    Ok(out)
}

/// Remove every skill citation clause, leaving step text and bindings
/// intact. Idempotent.
pub fn strip_grounding(text: &str) -> String {
    static USING: OnceLock<Regex> = OnceLock::new();
    static BASED: OnceLock<Regex> = OnceLock::new();
    static BY: OnceLock<Regex> = OnceLock::new();
    static LEFTOVER: OnceLock<Regex> = OnceLock::new();
    const CITE: &str = r"Skill \$?<\$?[^<>$\n]+?\$?>\$?";
    let using = USING.get_or_init(|| {
        Regex::new(&format!(
            r"[Uu]sing (?:the )?{CITE}(?: and (?:the )?{CITE})*,\s*"
        ))
        .unwrap()
    });
    let based = BASED.get_or_init(|| {
        Regex::new(&format!(r"[Bb]ased on (?:the )?{CITE},\s*")).unwrap()
    });
    let by = BY.get_or_init(|| Regex::new(&format!(r"\s+by (?:the )?{CITE}")).unwrap());
    let leftover = LEFTOVER.get_or_init(|| Regex::new(&format!(r"\s*{CITE},?")).unwrap());

    let text = using.replace_all(text, "");
    let text = based.replace_all(&text, "");
    let text = by.replace_all(&text, "");
    leftover.replace_all(&text, "").into_owned()
}

fn exemplar_body(variant: PromptVariant, exemplar: &Exemplar) -> String {
    match variant {
        PromptVariant::Skic | PromptVariant::SkicNoSkills => exemplar.solution_text.clone(),
        PromptVariant::SkicNoGrounding | PromptVariant::Cot => {
            strip_grounding(&exemplar.solution_text)
        }
        PromptVariant::Fewshot => exemplar.instance.gold_answer.display(),
        PromptVariant::Zeroshot => String::new(),
    }
}

/// Substitute the bracketed placeholders in the composite arithmetic skill
/// prose with rendered walkthroughs of the examples the prose names.
fn fill_gsm8k_placeholders(block: &str) -> Result<String, PromptError> {
    let mut block = block.to_string();
    if block.contains("[The steps to perform the add]") {
        let inst = TaskInstance {
            id: String::new(),
            family: TaskFamily::Addition,
            level: 3,
            seed: 0,
            payload: Payload::Operands { a: 86, b: 964 },
            gold_answer: GoldAnswer::Integer(1050),
        };
        let steps = render(&gold_trace(&inst)?);
        block = block.replace("[The steps to perform the add]", &format!("\n{steps}"));
    }
    if block.contains("[The steps to perform the multiplication]") {
        let inst = TaskInstance {
            id: String::new(),
            family: TaskFamily::Multiplication,
            level: 3,
            seed: 0,
            payload: Payload::Operands { a: 86, b: 964 },
            gold_answer: GoldAnswer::Integer(86 * 964),
        };
        let steps = render(&gold_trace(&inst)?);
        block = block.replace(
            "[The steps to perform the multiplication]",
            &format!("\n{steps}"),
        );
    }
    if block.contains("[The steps to perform the subtraction]") {
        let steps = render(&subtraction_gold(964, 86)?);
        block = block.replace(
            "[The steps to perform the subtraction]",
            &format!("\n{steps}"),
        );
    }
    Ok(block)
}

/// Assemble the full prompt text for one question. Blocks appear in the
/// order skills, exemplars, question; variants drop or rewrite blocks.
pub fn build_prompt(
    variant: PromptVariant,
    family: TaskFamily,
    exemplars: &[Exemplar],
    skill_subset: Option<&[String]>,
    question: &str,
) -> Result<PromptSpec, PromptError> {
    if exemplars.is_empty() && variant != PromptVariant::Zeroshot {
        return Err(PromptError::NoExemplars(variant));
    }

    let mut sections: Vec<String> = Vec::new();
    if variant.includes_skill_block() {
        let registry = builtin_registry();
        let mut block = render_skill_block(&registry, family, skill_subset)?;
        if family == TaskFamily::Gsm8k {
            block = fill_gsm8k_placeholders(&block)?;
        }
        if !block.is_empty() {
            sections.push(block);
        }
    }

    if variant != PromptVariant::Zeroshot {
        for exemplar in exemplars {
            sections.push(format!(
                "Example: {}\n\nAnswer: {}",
                exemplar.instance.question_text(),
                exemplar_body(variant, exemplar)
            ));
        }
    }

    let assembled = if variant == PromptVariant::Zeroshot {
        question.to_string()
    } else {
        sections.push(format!("Example: {question}\n\nAnswer:"));
        sections.join("\n\n")
    };

    let char_count = assembled.chars().count();
    Ok(PromptSpec {
        variant,
        family,
        exemplar_ids: exemplars.iter().map(|e| e.instance.id.clone()).collect(),
        skill_subset: skill_subset.map(|s| s.to_vec()),
        question_text: question.to_string(),
        assembled,
        char_count,
    })
}

/// Exact character count plus the ceil(chars/4) token heuristic. The token
/// figure is a rough budget estimate, nothing more.
pub fn estimate_size(prompt: &str) -> (usize, usize) {
    let chars = prompt.chars().count();
    (chars, chars.div_ceil(4))
}
