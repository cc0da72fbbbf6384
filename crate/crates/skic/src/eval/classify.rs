//! Automated error-mode classifier plus the mutation harness that
//! calibrates it. Categories are reproducible labels from a fixed
//! precedence, not human judgments.

use super::ErrorCategory;
use crate::skills::{canonical_name, SkillRegistry};
use crate::tasks::{decompose_question, scan_decompose, scan_parse_simple, TaskFamily};
use crate::traces::{parse, skill_citations, GoldTrace, Step};
use regex::Regex;
use std::collections::BTreeSet;
use std::sync::OnceLock;

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub category: ErrorCategory,
    /// Set when no gold trace was available and only citation checks ran.
    pub limited: bool,
}

/// Fixed precedence: unseen citation, then a skill applied wrongly, then a
/// value mis-copied between steps, then a composition deviation, then
/// everything else.
pub fn classify_error(
    response: &str,
    gold: Option<&GoldTrace>,
    prompt_skills: &[String],
    registry: &SkillRegistry,
) -> Classification {
    let parsed = parse(response);
    let prompt_set: BTreeSet<String> = prompt_skills.iter().map(|s| canonical_name(s)).collect();

    for step in &parsed.steps {
        for cited in &step.skills {
            let canon = canonical_name(cited);
            if !prompt_set.contains(&canon) && !registry.contains(cited) {
                return Classification {
                    category: ErrorCategory::UnseenSkill,
                    limited: false,
                };
            }
        }
    }

    let Some(gold) = gold else {
        return Classification {
            category: ErrorCategory::Others,
            limited: true,
        };
    };

    for step in &parsed.steps {
        if !verify_step_claims(&step.text) {
            return Classification {
                category: ErrorCategory::SeenSkill,
                limited: false,
            };
        }
    }

    // structural comparison: citation sequence and step labels
    let gold_citations: Vec<String> = gold
        .steps
        .iter()
        .flat_map(|s| s.skills.iter().map(|c| canonical_name(c)))
        .collect();
    let parsed_citations: Vec<String> = parsed
        .steps
        .iter()
        .flat_map(|s| s.skills.iter().map(|c| canonical_name(c)))
        .collect();
    let gold_paths: Vec<&[u32]> = gold.steps.iter().map(|s| s.path.as_slice()).collect();
    let parsed_paths: Vec<&[u32]> = parsed.steps.iter().map(|s| s.path.as_slice()).collect();

    if gold_citations == parsed_citations && gold_paths == parsed_paths {
        // structure matches gold; look for values that drifted between steps
        for (gold_step, parsed_step) in gold.steps.iter().zip(&parsed.steps) {
            if copied_value_differs(gold_step, parsed_step) {
                return Classification {
                    category: ErrorCategory::Copying,
                    limited: false,
                };
            }
        }
        Classification {
            category: ErrorCategory::Others,
            limited: false,
        }
    } else {
        Classification {
            category: ErrorCategory::Composition,
            limited: false,
        }
    }
}

fn copied_value_differs(gold: &Step, parsed: &Step) -> bool {
    for (name, value) in &parsed.bindings {
        if let Some(expected) = gold.bindings.get(name) {
            if expected != value {
                return true;
            }
        }
    }
    // families without name=value bindings carry quoted phrases instead
    quoted_literals(&gold.text) != quoted_literals(&parsed.text)
}

fn quoted_literals(text: &str) -> Vec<String> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"'([^'\n]*)'").unwrap());
    re.captures_iter(text).map(|c| c[1].to_string()).collect()
}

/// Check every self-contained claim in one step's text: arithmetic,
/// max/comparison statements, last-letter lookups, command parses and
/// decompositions, question decompositions.
pub fn verify_step_claims(text: &str) -> bool {
    static MAX: OnceLock<Regex> = OnceLock::new();
    static BIN: OnceLock<Regex> = OnceLock::new();
    static CMP: OnceLock<Regex> = OnceLock::new();
    static LETTER: OnceLock<Regex> = OnceLock::new();
    static PARSE: OnceLock<Regex> = OnceLock::new();
    static DECOMP: OnceLock<Regex> = OnceLock::new();
    static QUESTION: OnceLock<Regex> = OnceLock::new();
    static SUBQ: OnceLock<Regex> = OnceLock::new();
    static NOISE: OnceLock<Regex> = OnceLock::new();

    let max_re = MAX.get_or_init(|| Regex::new(r"max\((-?\d+(?:,-?\d+)*)\)=(-?\d+)").unwrap());
    let bin_re =
        BIN.get_or_init(|| Regex::new(r"(-?\d+)([+*-])(-?\d+)=(-?\d+)").unwrap());
    let cmp_re = CMP.get_or_init(|| Regex::new(r"(-?\d+)([<>=])(-?\d+)").unwrap());
    let letter_re = LETTER.get_or_init(|| {
        Regex::new(r"last letter of (?:D\[\d+\]=)?'(\w+)' is '(\w)'").unwrap()
    });
    let parse_re = PARSE.get_or_init(|| {
        Regex::new(r"'([a-z ]+)' is parsed to '([A-Z ]+)'").unwrap()
    });
    let decomp_re = DECOMP.get_or_init(|| {
        Regex::new(r"'([a-z ]+)' can be decomposed to ((?:'[a-z ]+'(?:,? and |, )?)+)").unwrap()
    });
    let question_re = QUESTION.get_or_init(|| {
        Regex::new(r#"decompose the question "([^"\n]+)""#).unwrap()
    });
    let subq_re = SUBQ.get_or_init(|| Regex::new(r"(?m)^Q\d+: ([^\n]+)").unwrap());
    // assignment prefixes like "r2=" or "DS=" and positional-zero counts like
    // "len(DM)-1=2" are bookkeeping, not claims; drop them before the numeric
    // passes so their digits never pair up across "="
    let noise_re =
        NOISE.get_or_init(|| Regex::new(r"len\([A-Za-z]+\)-1=\d+|\b[A-Za-z]+\d*=").unwrap());

    let mut scrubbed = noise_re.replace_all(text, " ").into_owned();

    for c in question_re.captures_iter(text) {
        let question = c[1].to_string();
        let listed: Vec<String> = subq_re
            .captures_iter(text)
            .map(|m| m[1].trim().to_string())
            .collect();
        match decompose_question(&question) {
            Some(expected) if expected == listed => {}
            _ => return false,
        }
    }

    for c in parse_re.captures_iter(text) {
        let phrase = c[1].trim();
        let stated: Vec<String> = c[2].split_whitespace().map(String::from).collect();
        match scan_parse_simple(phrase) {
            Some(tokens) if tokens == stated => {}
            _ => return false,
        }
    }
    for c in decomp_re.captures_iter(text) {
        let command = c[1].trim();
        let stated = quoted_literals(&c[2]);
        match scan_decompose(command) {
            Some(parts) if parts == stated => {}
            _ => return false,
        }
    }

    for c in letter_re.captures_iter(text) {
        let word = &c[1];
        let stated = c[2].chars().next().unwrap();
        if word.chars().last() != Some(stated) {
            return false;
        }
    }

    for c in max_re.captures_iter(&scrubbed.clone()) {
        let values: Vec<i64> = c[1].split(',').map(|v| v.parse().unwrap()).collect();
        let stated: i64 = c[2].parse().unwrap();
        if values.iter().max().copied() != Some(stated) {
            return false;
        }
        scrubbed = scrubbed.replacen(&c[0], " ", 1);
    }

    loop {
        let snapshot = scrubbed.clone();
        let Some(c) = bin_re.captures(&snapshot) else {
            break;
        };
        let a: i64 = c[1].parse().unwrap();
        let b: i64 = c[3].parse().unwrap();
        let stated: i64 = c[4].parse().unwrap();
        let actual = match &c[2] {
            "+" => a + b,
            "-" => a - b,
            _ => a * b,
        };
        if actual != stated {
            return false;
        }
        scrubbed = scrubbed.replacen(&c[0], " ", 1);
    }

    for c in cmp_re.captures_iter(&scrubbed) {
        let a: i64 = c[1].parse().unwrap();
        let b: i64 = c[3].parse().unwrap();
        let holds = match &c[2] {
            "<" => a < b,
            ">" => a > b,
            _ => a == b,
        };
        if !holds {
            return false;
        }
    }

    true
}

/// Distinct cited skill names, first-appearance order, case-insensitive
/// dedup keeping the first casing seen.
pub fn skill_mentions(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for name in skill_citations(text) {
        let canon = canonical_name(&name);
        if seen.insert(canon) {
            out.push(name);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Mutation harness

/// One controlled corruption of a rendered gold trace with its intended
/// label. `Others` mutations leave the text intact and simulate label noise.
#[derive(Debug, Clone)]
pub struct Mutation {
    pub family: TaskFamily,
    pub intended: ErrorCategory,
    pub text: String,
}

/// Apply one corruption of the given category, if the trace admits it.
pub fn mutate(rendered: &str, family: TaskFamily, category: ErrorCategory, salt: u64) -> Option<Mutation> {
    let text = match category {
        ErrorCategory::UnseenSkill => Some(inject_unseen(rendered, salt)),
        ErrorCategory::SeenSkill => corrupt_claim(rendered, family, salt),
        ErrorCategory::Copying => corrupt_copy(rendered, family, salt),
        ErrorCategory::Composition => corrupt_structure(rendered, salt),
        ErrorCategory::Others => Some(rendered.to_string()),
    }?;
    Some(Mutation {
        family,
        intended: category,
        text,
    })
}

fn nth_match(re: &Regex, text: &str, salt: u64) -> Option<(usize, usize, Vec<String>)> {
    let all: Vec<_> = re.captures_iter(text).collect();
    if all.is_empty() {
        return None;
    }
    let c = &all[(salt as usize) % all.len()];
    let m = c.get(0).unwrap();
    let groups = (0..c.len())
        .map(|i| c.get(i).map(|g| g.as_str().to_string()).unwrap_or_default())
        .collect();
    Some((m.start(), m.end(), groups))
}

fn inject_unseen(rendered: &str, salt: u64) -> String {
    let names = ["frobnicate", "quux_transform", "mystery_step", "hyperfold"];
    let name = names[(salt as usize) % names.len()];
    format!("{rendered} Based on Skill <{name}>, the result is confirmed.")
}

fn corrupt_claim(rendered: &str, family: TaskFamily, salt: u64) -> Option<String> {
    match family {
        TaskFamily::Addition | TaskFamily::Multiplication | TaskFamily::DynProg => {
            static BIN: OnceLock<Regex> = OnceLock::new();
            let re = BIN.get_or_init(|| Regex::new(r"(-?\d+)([+*-])(-?\d+)=(-?\d+)").unwrap());
            let (start, end, groups) = nth_match(re, rendered, salt)?;
            let stated: i64 = groups[4].parse().unwrap();
            let wrong = stated + 1 + (salt % 3) as i64;
            let replacement = format!("{}{}{}={wrong}", groups[1], groups[2], groups[3]);
            Some(format!("{}{}{}", &rendered[..start], replacement, &rendered[end..]))
        }
        TaskFamily::LastLetter => {
            static LETTER: OnceLock<Regex> = OnceLock::new();
            let re = LETTER
                .get_or_init(|| Regex::new(r"(last letter of D\[\d+\]='\w+' is ')(\w)(')").unwrap());
            let (start, end, groups) = nth_match(re, rendered, salt)?;
            let stated = groups[2].chars().next().unwrap();
            let wrong = if stated == 'z' { 'q' } else { ((stated as u8) + 1) as char };
            Some(format!(
                "{}{}{}{}{}",
                &rendered[..start], groups[1], wrong, groups[3], &rendered[end..]
            ))
        }
        TaskFamily::Scan => {
            static PARSE: OnceLock<Regex> = OnceLock::new();
            let re = PARSE
                .get_or_init(|| Regex::new(r"(is parsed to ')([A-Z ]+)(')").unwrap());
            let (start, end, groups) = nth_match(re, rendered, salt)?;
            let wrong = if groups[2].starts_with("WALK") {
                "JUMP".to_string()
            } else {
                format!("WALK {}", groups[2])
            };
            Some(format!(
                "{}{}{}{}{}",
                &rendered[..start], groups[1], wrong, groups[3], &rendered[end..]
            ))
        }
        TaskFamily::CommaQa => {
            static SUBQ: OnceLock<Regex> = OnceLock::new();
            let re = SUBQ.get_or_init(|| Regex::new(r"(?m)^Q\d+: [^\n]+").unwrap());
            let (start, end, groups) = nth_match(re, rendered, salt)?;
            let wrong = if groups[0].contains("Who") {
                groups[0].replace("Who", "Which ghosts")
            } else {
                groups[0].replace("Which", "Whose")
            };
            Some(format!("{}{}{}", &rendered[..start], wrong, &rendered[end..]))
        }
        _ => None,
    }
}

fn corrupt_copy(rendered: &str, family: TaskFamily, salt: u64) -> Option<String> {
    if family == TaskFamily::Scan {
        // swap one leaf parse for a different, internally consistent one
        static PARSE: OnceLock<Regex> = OnceLock::new();
        let re = PARSE.get_or_init(|| {
            Regex::new(r"'(run|look|jump|walk)' is parsed to '(RUN|LOOK|JUMP|WALK)'").unwrap()
        });
        let (start, end, groups) = nth_match(re, rendered, salt)?;
        let (phrase, token) = if groups[1] == "walk" {
            ("run", "RUN")
        } else {
            ("walk", "WALK")
        };
        return Some(format!(
            "{}'{phrase}' is parsed to '{token}'{}",
            &rendered[..start],
            &rendered[end..]
        ));
    }
    // alter one element inside a bracketed binding value
    static LIST: OnceLock<Regex> = OnceLock::new();
    let re = LIST.get_or_init(|| {
        Regex::new(r"\b(DS|DM|DN|DMO|DNO|R|D|A\d*(?:\.\d+)?)=\[([^\]\n]+)\]").unwrap()
    });
    let (start, end, groups) = nth_match(re, rendered, salt)?;
    let inner = &groups[2];
    let mutated_inner = if let Some(first_digit) = inner.find(|c: char| c.is_ascii_digit()) {
        let mut chars: Vec<char> = inner.chars().collect();
        let d = chars[first_digit].to_digit(10).unwrap();
        chars[first_digit] = char::from_digit((d + 1) % 10, 10).unwrap();
        chars.into_iter().collect::<String>()
    } else if inner.contains('"') {
        inner.replacen('"', "\"X", 1)
    } else {
        format!("q{inner}")
    };
    Some(format!(
        "{}{}=[{}]{}",
        &rendered[..start], groups[1], mutated_inner, &rendered[end..]
    ))
}

fn corrupt_structure(rendered: &str, salt: u64) -> Option<String> {
    // drop one line that carries a citation
    let lines: Vec<&str> = rendered.lines().collect();
    let cited: Vec<usize> = lines
        .iter()
        .enumerate()
        .filter(|(_, l)| l.contains("Skill <"))
        .map(|(i, _)| i)
        .collect();
    if cited.is_empty() {
        return None;
    }
    // duplicating a question-decomposition header would orphan its Q-lines
    // into a step that fails claim checks, so only ever drop those
    let dup_ok: Vec<usize> = cited
        .iter()
        .copied()
        .filter(|i| !lines[*i].contains("decompose the question"))
        .collect();
    if salt % 2 == 0 || dup_ok.is_empty() {
        let drop = cited[(salt as usize) % cited.len()];
        let kept: Vec<&str> = lines
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != drop)
            .map(|(_, l)| *l)
            .collect();
        Some(kept.join("\n"))
    } else {
        // duplicate a cited line instead
        let dup = dup_ok[(salt as usize) % dup_ok.len()];
        let mut out: Vec<&str> = Vec::with_capacity(lines.len() + 1);
        for (i, l) in lines.iter().enumerate() {
            out.push(l);
            if i == dup {
                out.push(l);
            }
        }
        Some(out.join("\n"))
    }
}
