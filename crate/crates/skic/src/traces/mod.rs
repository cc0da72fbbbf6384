//! Skill-grounded reasoning traces: deterministic gold builders per task
//! family, a renderer matching the exemplar format, a tolerant parser for
//! model outputs, and answer extraction/normalization.

mod builders;
#[cfg(test)]
mod tests;

pub use builders::{gold_trace, subtraction_gold};

use crate::skills::{SkillCall, SkillRegistry};
use crate::tasks::{GoldAnswer, TaskFamily};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("no gold trace builder for load-only family {0:?}")]
    UnsupportedFamily(TaskFamily),
    #[error("payload does not match family {0:?}")]
    PayloadMismatch(TaskFamily),
    #[error("skill execution failed: {0}")]
    Skill(#[from] crate::skills::SkillError),
    #[error("task error: {0}")]
    Task(#[from] crate::tasks::TaskError),
}

/// One numbered step. `path` is 1-based: `[3]` is a top-level step, `[3, 2]`
/// renders as roman sub-step ii under step 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub path: Vec<u32>,
    pub skills: Vec<String>,
    pub text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bindings: BTreeMap<String, String>,
    #[serde(skip)]
    pub calls: Vec<SkillCall>,
}

impl Step {
    fn top(n: u32, text: String) -> Step {
        Step {
            path: vec![n],
            skills: Vec::new(),
            text,
            bindings: BTreeMap::new(),
            calls: Vec::new(),
        }
    }

    fn sub(n: u32, k: u32, text: String) -> Step {
        Step {
            path: vec![n, k],
            skills: Vec::new(),
            text,
            bindings: BTreeMap::new(),
            calls: Vec::new(),
        }
    }

    fn with_calls(mut self, calls: Vec<SkillCall>) -> Step {
        self.calls = calls;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldTrace {
    pub family: TaskFamily,
    pub steps: Vec<Step>,
    pub final_answer: GoldAnswer,
}

/// Best-effort structure recovered from arbitrary model output.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrace {
    pub steps: Vec<Step>,
    /// Raw text after the last "The answer is", if any.
    pub terminal: Option<String>,
    /// Byte ranges the step grammar recognized.
    pub matched_spans: Vec<(usize, usize)>,
    /// Byte ranges it did not.
    pub unparsed_spans: Vec<(usize, usize)>,
}

impl ParsedTrace {
    pub fn top_level_count(&self) -> usize {
        self.steps.iter().filter(|s| s.path.len() == 1).count()
    }

    pub fn sub_step_count(&self) -> usize {
        self.steps.iter().filter(|s| s.path.len() > 1).count()
    }

    pub fn all_skill_refs(&self) -> Vec<String> {
        self.steps.iter().flat_map(|s| s.skills.clone()).collect()
    }
}

pub fn roman(n: u32) -> String {
    const VALUES: [(u32, &str); 13] = [
        (1000, "m"),
        (900, "cm"),
        (500, "d"),
        (400, "cd"),
        (100, "c"),
        (90, "xc"),
        (50, "l"),
        (40, "xl"),
        (10, "x"),
        (9, "ix"),
        (5, "v"),
        (4, "iv"),
        (1, "i"),
    ];
    let mut n = n;
    let mut out = String::new();
    for (value, symbol) in VALUES {
        while n >= value {
            out.push_str(symbol);
            n -= value;
        }
    }
    out
}

fn roman_value(s: &str) -> Option<u32> {
    let digit = |c: char| match c {
        'i' => Some(1),
        'v' => Some(5),
        'x' => Some(10),
        'l' => Some(50),
        'c' => Some(100),
        'd' => Some(500),
        'm' => Some(1000),
        _ => None,
    };
    let values: Option<Vec<u32>> = s.chars().map(digit).collect();
    let values = values?;
    if values.is_empty() {
        return None;
    }
    let mut total = 0i64;
    for (i, v) in values.iter().enumerate() {
        if values[i + 1..].iter().any(|later| later > v) {
            total -= *v as i64;
        } else {
            total += *v as i64;
        }
    }
    let total = u32::try_from(total).ok()?;
    // reject non-canonical spellings so ordinary words never parse as labels
    if roman(total) == s {
        Some(total)
    } else {
        None
    }
}

/// Deterministic text rendering: "1." top-level steps, roman sub-steps,
/// blank line between top-level steps.
pub fn render(trace: &GoldTrace) -> String {
    let mut out = String::new();
    for step in &trace.steps {
        match step.path.as_slice() {
            [n] => {
                if !out.is_empty() {
                    out.push_str("\n\n");
                }
                out.push_str(&format!("{n}. {}", step.text));
            }
            [_, k] => {
                out.push_str(&format!("\n   {}. {}", roman(*k), step.text));
            }
            _ => {}
        }
    }
    out
}

fn skill_citation_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // matches both "Skill <add>" and the "$<$add$>$" styling
    RE.get_or_init(|| Regex::new(r"Skill\s*\$?<\$?\s*([^<>$\n]+?)\s*\$?>\$?").unwrap())
}

fn binding_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"\b(DM|DN|DS|DMO|DNO|R|D|A|r\d+|A\d+(?:\.\d+)?|Q\d+(?:\.\d+)?)=(\[[^\]\n]*\]|'[^'\n]*'|-?\d+)",
        )
        .unwrap()
    })
}

pub fn skill_citations(text: &str) -> Vec<String> {
    skill_citation_re()
        .captures_iter(text)
        .map(|c| c[1].trim().to_string())
        .collect()
}

fn extract_bindings(text: &str) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for c in binding_re().captures_iter(text) {
        // later assignments to the same name win (running accumulators)
        out.insert(c[1].to_string(), c[2].to_string());
    }
    out
}

/// Tolerant line-oriented parse. Never fails; unrecognized spans are
/// reported, and matched + unparsed spans partition the input.
pub fn parse(text: &str) -> ParsedTrace {
    static TOP: OnceLock<Regex> = OnceLock::new();
    static SUB: OnceLock<Regex> = OnceLock::new();
    let top_re = TOP.get_or_init(|| Regex::new(r"^(\d+)\.\s*(.*)$").unwrap());
    let sub_re = SUB.get_or_init(|| Regex::new(r"^([ivxlcdm]+)\.\s*(.*)$").unwrap());

    let mut steps: Vec<Step> = Vec::new();
    let mut matched: Vec<(usize, usize)> = Vec::new();
    let mut unparsed: Vec<(usize, usize)> = Vec::new();
    let mut current: Option<Step> = None;
    let mut current_top: u32 = 0;
    let mut offset = 0usize;

    let push_span = |list: &mut Vec<(usize, usize)>, start: usize, end: usize| {
        if let Some(last) = list.last_mut() {
            if last.1 == start {
                last.1 = end;
                return;
            }
        }
        list.push((start, end));
    };

    for line in text.split_inclusive('\n') {
        let start = offset;
        let end = offset + line.len();
        offset = end;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            // separators belong to whatever we are inside of
            push_span(&mut matched, start, end);
            continue;
        }
        if let Some(c) = top_re.captures(trimmed) {
            if let Some(done) = current.take() {
                steps.push(done);
            }
            current_top = c[1].parse().unwrap_or(0);
            let body = c[2].to_string();
            let mut step = Step::top(current_top, body.clone());
            step.skills = skill_citations(&body);
            step.bindings = extract_bindings(&body);
            current = Some(step);
            push_span(&mut matched, start, end);
            continue;
        }
        if let Some(c) = sub_re.captures(trimmed) {
            if let Some(k) = roman_value(&c[1]) {
                if let Some(done) = current.take() {
                    steps.push(done);
                }
                let body = c[2].to_string();
                let mut step = Step::sub(current_top, k, body.clone());
                step.skills = skill_citations(&body);
                step.bindings = extract_bindings(&body);
                current = Some(step);
                push_span(&mut matched, start, end);
                continue;
            }
        }
        // continuation line of an open step
        if let Some(step) = current.as_mut() {
            step.text.push('\n');
            step.text.push_str(trimmed);
            step.skills.extend(skill_citations(trimmed));
            step.bindings.extend(extract_bindings(trimmed));
            push_span(&mut matched, start, end);
        } else {
            push_span(&mut unparsed, start, end);
        }
    }
    if let Some(done) = current.take() {
        steps.push(done);
    }

    let terminal = text
        .rmatch_indices("The answer is")
        .next()
        .map(|(pos, marker)| {
            let after = &text[pos + marker.len()..];
            after.lines().next().unwrap_or("").trim().to_string()
        });

    ParsedTrace {
        steps,
        terminal,
        matched_spans: matched,
        unparsed_spans: unparsed,
    }
}

/// Family-specific canonical form of a raw answer string.
pub fn normalize_answer(raw: &str, family: TaskFamily) -> Option<GoldAnswer> {
    let raw = raw.trim().trim_end_matches('.').trim();
    match family {
        TaskFamily::LastLetter => {
            let cleaned: String = raw
                .chars()
                .filter(|c| !c.is_whitespace() && *c != '\'' && *c != '"')
                .flat_map(char::to_lowercase)
                .collect();
            if cleaned.is_empty() {
                None
            } else {
                Some(GoldAnswer::Text(cleaned))
            }
        }
        TaskFamily::Addition
        | TaskFamily::Multiplication
        | TaskFamily::DynProg
        | TaskFamily::Gsm8k => {
            let cleaned: String = raw
                .chars()
                .filter(|c| !matches!(c, '$' | ',' | ' ' | '\'' | '"'))
                .collect();
            let cleaned = cleaned.trim_end_matches('.');
            if let Ok(i) = cleaned.parse::<i64>() {
                Some(GoldAnswer::Integer(i))
            } else {
                cleaned.parse::<f64>().ok().map(GoldAnswer::Decimal)
            }
        }
        TaskFamily::CommaQa => {
            let inner = raw.strip_prefix('[')?.strip_suffix(']')?;
            let items: Vec<String> = inner
                .split(',')
                .map(|s| s.trim().trim_matches(|c| c == '"' || c == '\'').to_string())
                .filter(|s| !s.is_empty())
                .collect();
            Some(GoldAnswer::string_set(items))
        }
        TaskFamily::Scan => {
            let tokens: Vec<String> = raw
                .split_whitespace()
                .map(|t| t.trim_matches(|c| c == '\'' || c == '"' || c == '.').to_string())
                .filter(|t| !t.is_empty())
                .collect();
            if tokens.is_empty() {
                None
            } else {
                Some(GoldAnswer::ActionSeq(tokens))
            }
        }
        TaskFamily::Math => {
            let stripped: String = raw.split_whitespace().collect();
            let stripped = stripped
                .strip_prefix('{')
                .and_then(|s| s.strip_suffix('}'))
                .unwrap_or(&stripped);
            if stripped.is_empty() {
                None
            } else {
                Some(GoldAnswer::Text(stripped.to_string()))
            }
        }
        TaskFamily::Rte | TaskFamily::Folio => {
            if raw.is_empty() {
                None
            } else {
                Some(GoldAnswer::Text(raw.trim_matches('"').to_string()))
            }
        }
    }
}

/// Pull the final answer out of arbitrary response text: the last
/// "The answer is" span, else the last number or bracketed list on the
/// final non-empty line.
pub fn extract_answer(text: &str, family: TaskFamily) -> Option<GoldAnswer> {
    let parsed = parse(text);
    if let Some(terminal) = parsed.terminal {
        if let Some(answer) = normalize_answer(&terminal, family) {
            return Some(answer);
        }
    }
    let last_line = text.lines().rev().find(|l| !l.trim().is_empty())?;
    static LIST: OnceLock<Regex> = OnceLock::new();
    static NUM: OnceLock<Regex> = OnceLock::new();
    let list_re = LIST.get_or_init(|| Regex::new(r"\[[^\[\]]*\]").unwrap());
    let num_re = NUM.get_or_init(|| Regex::new(r"-?\d+(?:\.\d+)?").unwrap());
    if family == TaskFamily::CommaQa {
        if let Some(m) = list_re.find_iter(last_line).last() {
            return normalize_answer(m.as_str(), family);
        }
    }
    if let Some(m) = num_re.find_iter(last_line).last() {
        return normalize_answer(m.as_str(), family);
    }
    None
}

/// Re-run every executor-backed call recorded in the trace and check the
/// stored results, then confirm the rendered terminal answer.
pub fn replay(trace: &GoldTrace, registry: &SkillRegistry) -> Result<(), String> {
    for step in &trace.steps {
        for call in &step.calls {
            let fresh = crate::skills::execute(registry, &call.skill, &call.args)
                .map_err(|e| format!("step {:?}: {e}", step.path))?;
            if fresh.result != call.result {
                return Err(format!(
                    "step {:?}: {} produced {:?}, trace recorded {:?}",
                    step.path, call.skill, fresh.result, call.result
                ));
            }
        }
    }
    let rendered = render(trace);
    let extracted = extract_answer(&rendered, trace.family)
        .ok_or_else(|| "no extractable answer in rendered trace".to_string())?;
    if !extracted.matches(&trace.final_answer) {
        return Err(format!(
            "terminal answer {extracted:?} does not match {:?}",
            trace.final_answer
        ));
    }
    Ok(())
}
