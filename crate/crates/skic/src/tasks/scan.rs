//! SCAN command interpretation: a recursive-descent interpreter over the
//! full grammar (and/after, twice/thrice, opposite/around, directions,
//! primitives), plus a seeded command generator keyed by tree depth.

use super::{instance_id, GoldAnswer, Payload, TaskError, TaskFamily, TaskInstance};
use crate::rng::SplitMix64;

const PRIMITIVES: [(&str, &str); 4] = [
    ("walk", "WALK"),
    ("look", "LOOK"),
    ("run", "RUN"),
    ("jump", "JUMP"),
];

fn primitive_token(word: &str) -> Option<&'static str> {
    PRIMITIVES
        .iter()
        .find(|(w, _)| *w == word)
        .map(|(_, t)| *t)
}

fn turn_token(direction: &str) -> Option<&'static str> {
    match direction {
        "left" => Some("LTURN"),
        "right" => Some("RTURN"),
        _ => None,
    }
}

fn parse_err(token: &str) -> TaskError {
    TaskError::ScanParse {
        token: token.to_string(),
    }
}

/// Interpret a full SCAN command into its action token sequence.
pub fn scan_oracle(command: &str) -> Result<Vec<String>, TaskError> {
    let tokens: Vec<&str> = command.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(parse_err(""));
    }
    parse_conjunction(&tokens)
}

fn parse_conjunction(tokens: &[&str]) -> Result<Vec<String>, TaskError> {
    // "and"/"after" appear at most once and never nest in SCAN
    if let Some(pos) = tokens.iter().position(|t| *t == "and" || *t == "after") {
        let (left, right) = (&tokens[..pos], &tokens[pos + 1..]);
        if left.is_empty() || right.is_empty() {
            return Err(parse_err(tokens[pos]));
        }
        let u = parse_repeated(left)?;
        let v = parse_repeated(right)?;
        return Ok(if tokens[pos] == "and" {
            [u, v].concat()
        } else {
            [v, u].concat()
        });
    }
    parse_repeated(tokens)
}

fn parse_repeated(tokens: &[&str]) -> Result<Vec<String>, TaskError> {
    let repeat = |v: Vec<String>, n: usize| -> Vec<String> {
        std::iter::repeat(v).take(n).flatten().collect()
    };
    match tokens.last() {
        Some(&"twice") => Ok(repeat(parse_action(&tokens[..tokens.len() - 1])?, 2)),
        Some(&"thrice") => Ok(repeat(parse_action(&tokens[..tokens.len() - 1])?, 3)),
        _ => parse_action(tokens),
    }
}

fn parse_action(tokens: &[&str]) -> Result<Vec<String>, TaskError> {
    let strings = |v: Vec<&str>| v.into_iter().map(String::from).collect::<Vec<_>>();
    match tokens {
        [w] => primitive_token(w)
            .map(|t| strings(vec![t]))
            .ok_or_else(|| parse_err(w)),
        ["turn", d] => turn_token(d)
            .map(|t| strings(vec![t]))
            .ok_or_else(|| parse_err(d)),
        ["turn", "opposite", d] => {
            let t = turn_token(d).ok_or_else(|| parse_err(d))?;
            Ok(strings(vec![t, t]))
        }
        ["turn", "around", d] => {
            let t = turn_token(d).ok_or_else(|| parse_err(d))?;
            Ok(strings(vec![t, t, t, t]))
        }
        [u, d] => {
            let a = primitive_token(u).ok_or_else(|| parse_err(u))?;
            let t = turn_token(d).ok_or_else(|| parse_err(d))?;
            Ok(strings(vec![t, a]))
        }
        [u, "opposite", d] => {
            let a = primitive_token(u).ok_or_else(|| parse_err(u))?;
            let t = turn_token(d).ok_or_else(|| parse_err(d))?;
            Ok(strings(vec![t, t, a]))
        }
        [u, "around", d] => {
            let a = primitive_token(u).ok_or_else(|| parse_err(u))?;
            let t = turn_token(d).ok_or_else(|| parse_err(d))?;
            Ok(strings(vec![t, a, t, a, t, a, t, a]))
        }
        [] => Err(parse_err("")),
        other => Err(parse_err(other[0])),
    }
}

/// Leaf parsing: the phrases that map directly to action tokens without
/// further decomposition (primitives, turns, opposite turns).
pub fn parse_simple(phrase: &str) -> Option<Vec<String>> {
    let tokens: Vec<&str> = phrase.split_whitespace().collect();
    let toks = |v: Vec<&str>| Some(v.into_iter().map(String::from).collect());
    match tokens.as_slice() {
        [w] => primitive_token(w).and_then(|t| toks(vec![t])),
        ["turn", d] => turn_token(d).and_then(|t| toks(vec![t])),
        ["turn", "opposite", d] => turn_token(d).and_then(|t| toks(vec![t, t])),
        _ => None,
    }
}

/// One decomposition step, in execution order. Returns None when the phrase
/// is already a leaf for `parse_simple`.
pub fn decompose(command: &str) -> Option<Vec<String>> {
    let tokens: Vec<&str> = command.split_whitespace().collect();
    if let Some(pos) = tokens.iter().position(|t| *t == "and" || *t == "after") {
        let left = tokens[..pos].join(" ");
        let right = tokens[pos + 1..].join(" ");
        return Some(if tokens[pos] == "and" {
            vec![left, right]
        } else {
            vec![right, left]
        });
    }
    match tokens.last() {
        Some(&"twice") => {
            let inner = tokens[..tokens.len() - 1].join(" ");
            return Some(vec![inner.clone(), inner]);
        }
        Some(&"thrice") => {
            let inner = tokens[..tokens.len() - 1].join(" ");
            return Some(vec![inner.clone(), inner.clone(), inner]);
        }
        _ => {}
    }
    match tokens.as_slice() {
        ["turn", "around", d] if turn_token(d).is_some() => {
            let part = format!("turn {d}");
            Some(vec![part.clone(), part.clone(), part.clone(), part])
        }
        [u, "around", d] if primitive_token(u).is_some() && turn_token(d).is_some() => {
            let part = format!("{u} {d}");
            Some(vec![part.clone(), part.clone(), part.clone(), part])
        }
        [u, "opposite", d] if primitive_token(u).is_some() && turn_token(d).is_some() => {
            Some(vec![format!("turn opposite {d}"), (*u).to_string()])
        }
        [u, d] if primitive_token(u).is_some() && turn_token(d).is_some() => {
            Some(vec![format!("turn {d}"), (*u).to_string()])
        }
        _ => None,
    }
}

fn sample_simple(rng: &mut SplitMix64) -> String {
    let prim = PRIMITIVES[rng.next_below(4) as usize].0;
    let dir = if rng.next_below(2) == 0 { "left" } else { "right" };
    match rng.next_below(7) {
        0 => prim.to_string(),
        1 => format!("{prim} {dir}"),
        2 => format!("{prim} opposite {dir}"),
        3 => format!("{prim} around {dir}"),
        4 => format!("turn {dir}"),
        5 => format!("turn opposite {dir}"),
        _ => format!("turn around {dir}"),
    }
}

fn sample_repeated(rng: &mut SplitMix64) -> String {
    let inner = sample_simple(rng);
    let rep = if rng.next_below(2) == 0 {
        "twice"
    } else {
        "thrice"
    };
    format!("{inner} {rep}")
}

/// Depth 1: a single action phrase. Depth 2: the phrase repeated with
/// twice/thrice. Depth 3: two sub-commands joined by and/after.
pub fn gen_scan(level: u32, seed: u64) -> Result<TaskInstance, TaskError> {
    if !(1..=3).contains(&level) {
        return Err(TaskError::LevelOutOfBounds {
            family: TaskFamily::Scan,
            level,
            min: 1,
            max: 3,
        });
    }
    let mut rng = SplitMix64::new(seed);
    let command = match level {
        1 => sample_simple(&mut rng),
        2 => sample_repeated(&mut rng),
        _ => {
            let sub = |rng: &mut SplitMix64| {
                if rng.next_below(2) == 0 {
                    sample_simple(rng)
                } else {
                    sample_repeated(rng)
                }
            };
            let left = sub(&mut rng);
            let right = sub(&mut rng);
            let joiner = if rng.next_below(2) == 0 { "and" } else { "after" };
            format!("{left} {joiner} {right}")
        }
    };
    let actions = scan_oracle(&command)?;
    Ok(TaskInstance {
        id: instance_id(TaskFamily::Scan, level, seed),
        family: TaskFamily::Scan,
        level,
        seed,
        payload: Payload::Command { command },
        gold_answer: GoldAnswer::ActionSeq(actions),
    })
}
