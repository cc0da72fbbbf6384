//! The basic-skill registry: prompt prose for every skill, executable
//! semantics where the skill is deterministic, and per-family bundles that
//! define which skills appear in a family's skill block.

mod prose;
#[cfg(test)]
mod tests;

use crate::tasks::{
    answer_simple, decompose_question, scan_decompose, scan_parse_simple, TaskFamily,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SkillError {
    #[error("unknown skill '{0}'")]
    NotFound(String),
    #[error("skill '{0}' has no executable semantics")]
    NoExecutor(String),
    #[error("skill '{name}': {message}")]
    Signature { name: String, message: String },
    #[error("no skill bundle for family '{0}'")]
    UnknownFamily(String),
    #[error("subset contains '{0}' which is not in the family bundle")]
    NotInBundle(String),
    #[error("no parseable skill lines in discovery response")]
    Discovery { raw: String },
    #[error("completion failed: {0}")]
    Completion(String),
}

/// Argument and result values for skill executors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Value {
    Int(i64),
    Text(String),
    Ints(Vec<i64>),
    Texts(Vec<String>),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_ints(&self) -> Option<&[i64]> {
        match self {
            Value::Ints(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_texts(&self) -> Option<&[String]> {
        match self {
            Value::Texts(v) => Some(v),
            _ => None,
        }
    }
}

type Executor = fn(&[Value]) -> Result<Value, SkillError>;

#[derive(Clone)]
pub struct SkillSpec {
    /// Canonical lowercase snake-case identifier.
    pub name: String,
    /// Citation casing as it appears in prompts ("add" vs "Add").
    pub display: String,
    pub prose: String,
    pub signature: String,
    pub executor: Option<Executor>,
}

impl std::fmt::Debug for SkillSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SkillSpec")
            .field("name", &self.name)
            .field("display", &self.display)
            .field("signature", &self.signature)
            .field("has_executor", &self.executor.is_some())
            .finish()
    }
}

/// A single executed (or cited) skill application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillCall {
    pub skill: String,
    pub args: Vec<Value>,
    pub result: Value,
    pub rendered: String,
}

pub struct SkillRegistry {
    skills: BTreeMap<String, SkillSpec>,
    bundles: BTreeMap<TaskFamily, Vec<String>>,
    // family-local prose where a bundle's wording differs from the shared
    // registry entry (the GSM8K composite add/mul/sub descriptions)
    prose_overrides: BTreeMap<(TaskFamily, String), String>,
}

/// Lowercase snake-case key: spaces, colons and dashes collapse to
/// underscores; apostrophes vanish ("Piecewise Function: Continuous" →
/// piecewise_function_continuous).
pub fn canonical_name(display: &str) -> String {
    let mut out = String::new();
    let mut last_underscore = true;
    for ch in display.chars() {
        if ch.is_alphanumeric() {
            out.extend(ch.to_lowercase());
            last_underscore = false;
        } else if ch == '\'' {
            continue;
        } else if !last_underscore {
            out.push('_');
            last_underscore = true;
        }
    }
    out.trim_end_matches('_').to_string()
}

impl SkillRegistry {
    pub fn lookup(&self, name: &str) -> Option<&SkillSpec> {
        self.skills.get(&canonical_name(name))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    pub fn bundle(&self, family: TaskFamily) -> Option<&[String]> {
        self.bundles.get(&family).map(Vec::as_slice)
    }

    pub fn skills(&self) -> impl Iterator<Item = &SkillSpec> {
        self.skills.values()
    }

    fn insert(&mut self, display: &str, prose: String, signature: &str, executor: Option<Executor>) {
        let name = canonical_name(display);
        let spec = SkillSpec {
            name: name.clone(),
            display: display.to_string(),
            prose,
            signature: signature.to_string(),
            executor,
        };
        self.skills.insert(name, spec);
    }
}

fn int_arg(args: &[Value], i: usize, name: &str) -> Result<i64, SkillError> {
    args.get(i)
        .and_then(Value::as_int)
        .ok_or_else(|| SkillError::Signature {
            name: name.into(),
            message: format!("argument {i} must be an integer"),
        })
}

fn text_arg<'a>(args: &'a [Value], i: usize, name: &str) -> Result<&'a str, SkillError> {
    args.get(i)
        .and_then(Value::as_text)
        .ok_or_else(|| SkillError::Signature {
            name: name.into(),
            message: format!("argument {i} must be text"),
        })
}

fn digit_arg(args: &[Value], i: usize, name: &str) -> Result<i64, SkillError> {
    let v = int_arg(args, i, name)?;
    if !(0..=9).contains(&v) {
        return Err(SkillError::Signature {
            name: name.into(),
            message: format!("{v} is not a single digit"),
        });
    }
    Ok(v)
}

fn arity(args: &[Value], n: usize, name: &str) -> Result<(), SkillError> {
    if args.len() != n {
        return Err(SkillError::Signature {
            name: name.into(),
            message: format!("expected {n} arguments, got {}", args.len()),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Executors

fn exec_extract_digits(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 1, "extract_digits")?;
    let n = int_arg(args, 0, "extract_digits")?;
    if n < 0 {
        return Err(SkillError::Signature {
            name: "extract_digits".into(),
            message: "number must be non-negative".into(),
        });
    }
    let digits: Vec<i64> = n
        .to_string()
        .chars()
        .map(|c| c.to_digit(10).unwrap() as i64)
        .collect();
    Ok(Value::Ints(digits))
}

fn exec_list_length(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 1, "list_length")?;
    let len = match &args[0] {
        Value::Ints(v) => v.len(),
        Value::Texts(v) => v.len(),
        _ => {
            return Err(SkillError::Signature {
                name: "list_length".into(),
                message: "argument must be a list".into(),
            })
        }
    };
    Ok(Value::Int(len as i64))
}

fn exec_add_single(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 2, "add_two_single_digit_number")?;
    let a = digit_arg(args, 0, "add_two_single_digit_number")?;
    let b = digit_arg(args, 1, "add_two_single_digit_number")?;
    Ok(Value::Int(a + b))
}

fn exec_sub_single(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 2, "sub_two_single_digit_number")?;
    let a = digit_arg(args, 0, "sub_two_single_digit_number")?;
    let b = digit_arg(args, 1, "sub_two_single_digit_number")?;
    Ok(Value::Int(a - b))
}

fn exec_sub_10(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 1, "sub_10")?;
    let x = int_arg(args, 0, "sub_10")?;
    if !(10..=19).contains(&x) {
        return Err(SkillError::Signature {
            name: "sub_10".into(),
            message: format!("{x} outside 10..=19"),
        });
    }
    Ok(Value::Int(x - 10))
}

fn exec_add_10(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 1, "add_10")?;
    let x = int_arg(args, 0, "add_10")?;
    if !(-10..=-1).contains(&x) {
        return Err(SkillError::Signature {
            name: "add_10".into(),
            message: format!("{x} outside -10..=-1"),
        });
    }
    Ok(Value::Int(x + 10))
}

fn compare_text(x: i64, pivot: i64) -> &'static str {
    match x.cmp(&pivot) {
        std::cmp::Ordering::Less => "less",
        std::cmp::Ordering::Equal => "equal",
        std::cmp::Ordering::Greater => "greater",
    }
}

fn exec_compare_10(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 1, "compare_10")?;
    Ok(Value::Text(
        compare_text(int_arg(args, 0, "compare_10")?, 10).into(),
    ))
}

fn exec_compare_0(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 1, "compare_0")?;
    Ok(Value::Text(
        compare_text(int_arg(args, 0, "compare_0")?, 0).into(),
    ))
}

/// Split d*10^k into (d, k); rejects anything that is not a single digit
/// padded with zeros.
fn digit_and_zeros(v: i64) -> Option<(i64, u32)> {
    if (0..=9).contains(&v) {
        return Some((v, 0));
    }
    if v < 0 {
        return None;
    }
    let mut rest = v;
    let mut zeros = 0u32;
    while rest % 10 == 0 && rest >= 10 {
        rest /= 10;
        zeros += 1;
    }
    if (0..=9).contains(&rest) {
        Some((rest, zeros))
    } else {
        None
    }
}

fn exec_mul_single(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 2, "mul_two_single_digit_number")?;
    let a = int_arg(args, 0, "mul_two_single_digit_number")?;
    let b = int_arg(args, 1, "mul_two_single_digit_number")?;
    // the composition figures cite this skill for products like 100*60:
    // single digits carrying positional zeros
    let (da, za) = digit_and_zeros(a).ok_or_else(|| SkillError::Signature {
        name: "mul_two_single_digit_number".into(),
        message: format!("{a} is not a zero-padded single digit"),
    })?;
    let (db, zb) = digit_and_zeros(b).ok_or_else(|| SkillError::Signature {
        name: "mul_two_single_digit_number".into(),
        message: format!("{b} is not a zero-padded single digit"),
    })?;
    Ok(Value::Int(da * db * 10i64.pow(za + zb)))
}

fn exec_add_multiple(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 1, "add_multiple_numbers")?;
    let nums = args[0].as_ints().ok_or_else(|| SkillError::Signature {
        name: "add_multiple_numbers".into(),
        message: "argument must be a list of integers".into(),
    })?;
    if nums.len() < 2 {
        return Err(SkillError::Signature {
            name: "add_multiple_numbers".into(),
            message: "needs at least two numbers".into(),
        });
    }
    Ok(Value::Int(nums.iter().sum()))
}

fn exec_add(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 2, "add")?;
    Ok(Value::Int(int_arg(args, 0, "add")? + int_arg(args, 1, "add")?))
}

fn exec_sub(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 2, "sub")?;
    Ok(Value::Int(int_arg(args, 0, "sub")? - int_arg(args, 1, "sub")?))
}

fn exec_mul(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 2, "mul")?;
    Ok(Value::Int(int_arg(args, 0, "mul")? * int_arg(args, 1, "mul")?))
}

fn exec_div(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 2, "div")?;
    let a = int_arg(args, 0, "div")?;
    let b = int_arg(args, 1, "div")?;
    if b == 0 || a % b != 0 {
        return Err(SkillError::Signature {
            name: "div".into(),
            message: format!("{a}/{b} is not an exact integer division"),
        });
    }
    Ok(Value::Int(a / b))
}

fn exec_find_max(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 1, "find_max")?;
    let nums = args[0].as_ints().ok_or_else(|| SkillError::Signature {
        name: "find_max".into(),
        message: "argument must be a list of integers".into(),
    })?;
    nums.iter()
        .max()
        .copied()
        .map(Value::Int)
        .ok_or_else(|| SkillError::Signature {
            name: "find_max".into(),
            message: "list must be non-empty".into(),
        })
}

fn exec_words_to_list(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 1, "words_to_list")?;
    let text = text_arg(args, 0, "words_to_list")?;
    let words: Vec<String> = text
        .split(',')
        .map(|w| w.trim().trim_matches('\'').to_string())
        .filter(|w| !w.is_empty())
        .collect();
    Ok(Value::Texts(words))
}

fn exec_last_letter(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 1, "last_letter")?;
    let word = text_arg(args, 0, "last_letter")?;
    word.chars()
        .last()
        .map(|c| Value::Text(c.to_string()))
        .ok_or_else(|| SkillError::Signature {
            name: "last_letter".into(),
            message: "word must be non-empty".into(),
        })
}

fn exec_decompose_qa(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 1, "decompose_qa")?;
    let q = text_arg(args, 0, "decompose_qa")?;
    decompose_question(q)
        .map(Value::Texts)
        .ok_or_else(|| SkillError::Signature {
            name: "decompose_qa".into(),
            message: format!("unrecognized question template: {q}"),
        })
}

fn exec_answer_simple(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 2, "answer_simple_question")?;
    let passage = text_arg(args, 0, "answer_simple_question")?;
    let question = text_arg(args, 1, "answer_simple_question")?;
    answer_simple(passage, question)
        .map(|(_, answers)| Value::Texts(answers))
        .ok_or_else(|| SkillError::Signature {
            name: "answer_simple_question".into(),
            message: format!("unrecognized question template: {question}"),
        })
}

fn exec_command_parse(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 1, "command_parse")?;
    let phrase = text_arg(args, 0, "command_parse")?;
    scan_parse_simple(phrase)
        .map(Value::Texts)
        .ok_or_else(|| SkillError::Signature {
            name: "command_parse".into(),
            message: format!("'{phrase}' is not a simple command"),
        })
}

fn exec_decompose_commands(args: &[Value]) -> Result<Value, SkillError> {
    arity(args, 1, "decompose_commands")?;
    let command = text_arg(args, 0, "decompose_commands")?;
    scan_decompose(command)
        .map(Value::Texts)
        .ok_or_else(|| SkillError::Signature {
            name: "decompose_commands".into(),
            message: format!("'{command}' does not decompose further"),
        })
}

// ---------------------------------------------------------------------------
// Registry construction

pub fn builtin_registry() -> SkillRegistry {
    let mut reg = SkillRegistry {
        skills: BTreeMap::new(),
        bundles: BTreeMap::new(),
        prose_overrides: BTreeMap::new(),
    };

    reg.insert(
        "extract_digits",
        prose::EXTRACT_DIGITS.into(),
        "number -> digit list",
        Some(exec_extract_digits),
    );
    reg.insert(
        "list_length",
        prose::LIST_LENGTH.into(),
        "list -> number",
        Some(exec_list_length),
    );
    reg.insert(
        "add_two_single_digit_number",
        prose::add_table(),
        "(digit, digit) -> number",
        Some(exec_add_single),
    );
    reg.insert(
        "sub_two_single_digit_number",
        prose::sub_table(),
        "(digit, digit) -> number",
        Some(exec_sub_single),
    );
    reg.insert(
        "sub_10",
        prose::sub_10_table(),
        "number in 10..=19 -> number",
        Some(exec_sub_10),
    );
    reg.insert(
        "add_10",
        prose::add_10_table(),
        "number in -10..=-1 -> number",
        Some(exec_add_10),
    );
    reg.insert(
        "compare_10",
        prose::compare_10_table(),
        "number -> ordering",
        Some(exec_compare_10),
    );
    reg.insert(
        "compare_0",
        prose::compare_0_table(),
        "number -> ordering",
        Some(exec_compare_0),
    );
    reg.insert(
        "mul_two_single_digit_number",
        prose::mul_table(),
        "(padded digit, padded digit) -> number",
        Some(exec_mul_single),
    );
    reg.insert(
        "add_multiple_numbers",
        prose::ADD_MULTIPLE.into(),
        "number list -> number",
        Some(exec_add_multiple),
    );
    reg.insert("add", prose::ADD.into(), "(number, number) -> number", Some(exec_add));
    reg.insert("sub", prose::SUB.into(), "(number, number) -> number", Some(exec_sub));
    reg.insert("mul", prose::MUL.into(), "(number, number) -> number", Some(exec_mul));
    reg.insert("div", prose::DIV.into(), "(number, number) -> number", Some(exec_div));
    reg.insert(
        "find_max",
        prose::FIND_MAX.into(),
        "number list -> number",
        Some(exec_find_max),
    );
    reg.insert(
        "words_to_list",
        prose::WORDS_TO_LIST.into(),
        "text -> word list",
        Some(exec_words_to_list),
    );
    reg.insert(
        "last_letter",
        prose::LAST_LETTER.into(),
        "word -> letter",
        Some(exec_last_letter),
    );
    reg.insert(
        "decompose_qa",
        prose::DECOMPOSE_QA.into(),
        "question -> sub-question list",
        Some(exec_decompose_qa),
    );
    reg.insert(
        "answer_simple_question",
        prose::ANSWER_SIMPLE_QUESTION.into(),
        "(passage, question) -> entity list",
        Some(exec_answer_simple),
    );
    reg.insert(
        "command_parse",
        prose::COMMAND_PARSE.into(),
        "simple command -> action tokens",
        Some(exec_command_parse),
    );
    reg.insert(
        "decompose_commands",
        prose::DECOMPOSE_COMMANDS.into(),
        "command -> sub-command list",
        Some(exec_decompose_commands),
    );
    // narrative-only skills: grounding targets, no executable semantics
    reg.insert("age", prose::AGE.into(), "narrative", None);
    reg.insert("solve_equation", prose::SOLVE_EQUATION.into(), "narrative", None);

    for (display, text) in prose::math_skills() {
        // arithmetic names already registered keep their executors; the
        // remaining MATH skills are prose-only
        let key = canonical_name(display);
        if !reg.skills.contains_key(&key) {
            reg.insert(display, text.to_string(), "narrative", None);
        }
    }

    let bundle = |names: &[&str]| names.iter().map(|n| canonical_name(n)).collect::<Vec<_>>();
    reg.bundles.insert(
        TaskFamily::LastLetter,
        bundle(&["words_to_list", "last_letter"]),
    );
    reg.bundles.insert(
        TaskFamily::Addition,
        bundle(&[
            "extract_digits",
            "list_length",
            "add_two_single_digit_number",
            "sub_10",
            "compare_10",
        ]),
    );
    reg.bundles.insert(
        TaskFamily::Multiplication,
        bundle(&[
            "extract_digits",
            "list_length",
            "mul_two_single_digit_number",
            "add_multiple_numbers",
        ]),
    );
    reg.bundles.insert(
        TaskFamily::DynProg,
        bundle(&["list_length", "find_max", "add"]),
    );
    reg.bundles.insert(
        TaskFamily::CommaQa,
        bundle(&["decompose_qa", "answer_simple_question"]),
    );
    reg.bundles.insert(
        TaskFamily::Scan,
        bundle(&["command_parse", "decompose_commands"]),
    );
    reg.bundles.insert(
        TaskFamily::Gsm8k,
        bundle(&[
            "extract_digits",
            "list_length",
            "add_two_single_digit_number",
            "sub_two_single_digit_number",
            "sub_10",
            "add_10",
            "compare_0",
            "compare_10",
            "mul_two_single_digit_number",
            "add_multiple_numbers",
            "add",
            "mul",
            "sub",
            "age",
            "solve_equation",
        ]),
    );
    reg.bundles.insert(
        TaskFamily::Math,
        prose::math_skills()
            .iter()
            .map(|(display, _)| canonical_name(display))
            .collect(),
    );
    for (name, text) in [
        ("add", prose::GSM8K_ADD),
        ("mul", prose::GSM8K_MUL),
        ("sub", prose::GSM8K_SUB),
    ] {
        reg.prose_overrides
            .insert((TaskFamily::Gsm8k, name.to_string()), text.to_string());
    }
    reg
}

/// Execute a skill by name. The returned call records the inputs, the exact
/// result, and a citation sentence in the exemplar phrasing.
pub fn execute(registry: &SkillRegistry, name: &str, args: &[Value]) -> Result<SkillCall, SkillError> {
    let spec = registry
        .lookup(name)
        .ok_or_else(|| SkillError::NotFound(name.to_string()))?;
    let executor = spec
        .executor
        .ok_or_else(|| SkillError::NoExecutor(spec.name.clone()))?;
    let result = executor(args)?;
    let rendered = render_call(&spec.name, &spec.display, args, &result);
    Ok(SkillCall {
        skill: spec.name.clone(),
        args: args.to_vec(),
        result,
        rendered,
    })
}

fn fmt_ints(v: &[i64]) -> String {
    let items: Vec<String> = v.iter().map(|n| n.to_string()).collect();
    format!("[{}]", items.join(","))
}

fn render_call(name: &str, display: &str, args: &[Value], result: &Value) -> String {
    let body = match (name, args, result) {
        ("add_two_single_digit_number" | "add", [Value::Int(a), Value::Int(b)], Value::Int(r)) => {
            format!("{a}+{b}={r}")
        }
        ("sub_two_single_digit_number" | "sub", [Value::Int(a), Value::Int(b)], Value::Int(r)) => {
            format!("{a}-{b}={r}")
        }
        ("mul_two_single_digit_number" | "mul", [Value::Int(a), Value::Int(b)], Value::Int(r)) => {
            format!("{a}*{b}={r}")
        }
        ("div", [Value::Int(a), Value::Int(b)], Value::Int(r)) => format!("{a}/{b}={r}"),
        ("sub_10", [Value::Int(x)], Value::Int(r)) => format!("{x}-10={r}"),
        ("add_10", [Value::Int(x)], Value::Int(r)) => format!("{x}+10={r}"),
        ("compare_10", [Value::Int(x)], Value::Text(ord)) => {
            let sym = match ord.as_str() {
                "less" => "<",
                "equal" => "=",
                _ => ">",
            };
            format!("{x}{sym}10")
        }
        ("compare_0", [Value::Int(x)], Value::Text(ord)) => {
            let sym = match ord.as_str() {
                "less" => "<",
                "equal" => "=",
                _ => ">",
            };
            format!("{x}{sym}0")
        }
        ("find_max", [Value::Ints(v)], Value::Int(r)) => {
            let items: Vec<String> = v.iter().map(|n| n.to_string()).collect();
            format!("max({})={r}", items.join(","))
        }
        ("add_multiple_numbers", [Value::Ints(v)], Value::Int(r)) => {
            let items: Vec<String> = v.iter().map(|n| n.to_string()).collect();
            format!("{}={r}", items.join("+"))
        }
        ("extract_digits", [Value::Int(n)], Value::Ints(d)) => {
            format!("Extract the digits in {n} to {}", fmt_ints(d))
        }
        ("list_length", [Value::Ints(v)], Value::Int(r)) => {
            format!("len({})={r}", fmt_ints(v))
        }
        ("list_length", [Value::Texts(v)], Value::Int(r)) => format!("len of {v:?} is {r}"),
        ("last_letter", [Value::Text(w)], Value::Text(l)) => {
            format!("the last letter of '{w}' is '{l}'")
        }
        ("command_parse", [Value::Text(c)], Value::Texts(t)) => {
            format!("'{c}' is parsed to '{}'", t.join(" "))
        }
        ("decompose_commands", [Value::Text(c)], Value::Texts(parts)) => {
            let quoted: Vec<String> = parts.iter().map(|p| format!("'{p}'")).collect();
            format!("'{c}' can be decomposed to {}", quoted.join(" and "))
        }
        _ => format!("{args:?} -> {result:?}"),
    };
    format!("Using Skill <{display}>, {body}")
}

/// Concatenate "Skill <name>: prose" sections in bundle order. `subset`
/// restricts to a sub-list of the bundle (ablation input).
pub fn render_skill_block(
    registry: &SkillRegistry,
    family: TaskFamily,
    subset: Option<&[String]>,
) -> Result<String, SkillError> {
    let bundle = registry
        .bundle(family)
        .ok_or_else(|| SkillError::UnknownFamily(family.name().to_string()))?;
    let names: Vec<String> = match subset {
        Some(sub) => {
            for n in sub {
                if !bundle.contains(&canonical_name(n)) {
                    return Err(SkillError::NotInBundle(n.clone()));
                }
            }
            sub.iter().map(|n| canonical_name(n)).collect()
        }
        None => bundle.to_vec(),
    };
    let mut out = String::new();
    if family == TaskFamily::Math && subset.is_none() {
        out.push_str("You have the knowledge of many skills, the following are some examples:\n\n");
    }
    let mut first = true;
    for name in &names {
        let spec = registry
            .lookup(name)
            .ok_or_else(|| SkillError::NotFound(name.clone()))?;
        if !first {
            out.push_str("\n\n");
        }
        first = false;
        let prose = registry
            .prose_overrides
            .get(&(family, spec.name.clone()))
            .unwrap_or(&spec.prose);
        out.push_str(&format!("Skill <{}>: {}", spec.display, prose));
    }
    Ok(out)
}

/// A draft skill proposed by a model, pending human review.
#[derive(Debug, Clone, PartialEq)]
pub struct DraftSkill {
    pub name: String,
    pub description: String,
}

const DISCOVERY_INSTRUCTION: &str = "Below are solved example problems. Identify the basic \
skills needed to solve problems like these. List each skill on its own line in the form \
'Skill <Name>: one-sentence description'.";

/// Ask a completion backend to propose skills from solved examples. Drafts
/// carry no executor and are not inserted into any registry.
pub fn discover_skills<F>(
    examples: &[(String, String)],
    complete: F,
) -> Result<Vec<DraftSkill>, SkillError>
where
    F: FnOnce(&str) -> Result<String, String>,
{
    if examples.is_empty() {
        return Err(SkillError::Signature {
            name: "discover_skills".into(),
            message: "at least one example required".into(),
        });
    }
    let mut prompt = String::from(DISCOVERY_INSTRUCTION);
    prompt.push_str("\n\n");
    for (problem, solution) in examples {
        prompt.push_str(&format!("Example: {problem}\nAnswer: {solution}\n\n"));
    }
    let response = complete(&prompt).map_err(SkillError::Completion)?;
    let re = regex::Regex::new(r"Skill\s*(?:\$?<\$?)([^<>$]+?)(?:\$?>\$?)\s*:\s*(.+)").unwrap();
    let mut drafts = Vec::new();
    for line in response.lines() {
        if let Some(c) = re.captures(line) {
            drafts.push(DraftSkill {
                name: c[1].trim().to_string(),
                description: c[2].trim().to_string(),
            });
        }
    }
    if drafts.is_empty() {
        return Err(SkillError::Discovery { raw: response });
    }
    Ok(drafts)
}
