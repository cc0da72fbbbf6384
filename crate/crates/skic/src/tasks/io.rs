//! Instance persistence (JSON lines) and loaders for external datasets.

use super::{instance_id, GoldAnswer, Payload, TaskError, TaskFamily, TaskInstance};
use serde_json::Value;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Write instances one JSON object per line. Field order is the struct
/// declaration order, so identical instances serialize to identical bytes.
pub fn write_instances(path: &Path, instances: &[TaskInstance]) -> Result<(), TaskError> {
    let mut out = BufWriter::new(File::create(path)?);
    for inst in instances {
        let line = serde_json::to_string(inst).expect("instances always serialize");
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_instances(path: &Path) -> Result<Vec<TaskInstance>, TaskError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: TaskInstance =
            serde_json::from_str(&line).map_err(|e| TaskError::MalformedRecord {
                line: i + 1,
                message: e.to_string(),
            })?;
        out.push(inst);
    }
    Ok(out)
}

/// Outcome of loading an external dataset: parsed instances plus a count of
/// records skipped for missing answers (with one warning line each).
#[derive(Debug, Default)]
pub struct LoadReport {
    pub instances: Vec<TaskInstance>,
    pub skipped: usize,
    pub warnings: Vec<String>,
}

/// Pull the gold value out of a GSM8K-style answer: the number after "####".
fn gsm8k_answer(answer: &str) -> Option<GoldAnswer> {
    let tail = answer.rsplit("####").next()?.trim();
    parse_numeric(tail)
}

fn parse_numeric(raw: &str) -> Option<GoldAnswer> {
    let cleaned: String = raw
        .trim()
        .trim_end_matches('.')
        .chars()
        .filter(|c| !matches!(c, '$' | ',' | ' '))
        .collect();
    if cleaned.is_empty() {
        return None;
    }
    if let Ok(i) = cleaned.parse::<i64>() {
        return Some(GoldAnswer::Integer(i));
    }
    cleaned.parse::<f64>().ok().map(GoldAnswer::Decimal)
}

/// Extract the contents of the last `\boxed{...}` with brace matching.
pub fn boxed_answer(solution: &str) -> Option<String> {
    let start = solution.rfind("\\boxed{")?;
    let inner_start = start + "\\boxed{".len();
    let mut depth = 1usize;
    for (offset, ch) in solution[inner_start..].char_indices() {
        match ch {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(solution[inner_start..inner_start + offset].to_string());
                }
            }
            _ => {}
        }
    }
    None
}

fn math_answer(solution: &str) -> Option<GoldAnswer> {
    let inner = boxed_answer(solution)?;
    let trimmed: String = inner.split_whitespace().collect();
    match parse_numeric(&trimmed) {
        Some(ans) => Some(ans),
        None => Some(GoldAnswer::Text(trimmed)),
    }
}

fn field<'a>(record: &'a Value, names: &[&str]) -> Option<&'a str> {
    names.iter().find_map(|n| record.get(*n).and_then(Value::as_str))
}

/// Load GSM8K / MATH / RTE / FOLIO records from a JSON-lines file.
pub fn load_external(path: &Path, family: TaskFamily) -> Result<LoadReport, TaskError> {
    if !family.is_load_only() {
        return Err(TaskError::MalformedRecord {
            line: 0,
            message: format!("{} is a synthetic family; use its generator", family.name()),
        });
    }
    let reader = BufReader::new(File::open(path)?);
    let mut report = LoadReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Value =
            serde_json::from_str(&line).map_err(|e| TaskError::MalformedRecord {
                line: line_no,
                message: e.to_string(),
            })?;
        let (text, gold) = match family {
            TaskFamily::Gsm8k => {
                let question =
                    field(&record, &["question"]).ok_or(TaskError::MalformedRecord {
                        line: line_no,
                        message: "missing 'question' field".into(),
                    })?;
                let gold = field(&record, &["answer"]).and_then(gsm8k_answer);
                (question.to_string(), gold)
            }
            TaskFamily::Math => {
                let problem = field(&record, &["problem"]).ok_or(TaskError::MalformedRecord {
                    line: line_no,
                    message: "missing 'problem' field".into(),
                })?;
                let gold = field(&record, &["solution"]).and_then(math_answer);
                (problem.to_string(), gold)
            }
            _ => {
                let premise = field(&record, &["premise"]).ok_or(TaskError::MalformedRecord {
                    line: line_no,
                    message: "missing 'premise' field".into(),
                })?;
                let hypothesis =
                    field(&record, &["hypothesis"]).ok_or(TaskError::MalformedRecord {
                        line: line_no,
                        message: "missing 'hypothesis' field".into(),
                    })?;
                let gold = field(&record, &["label"])
                    .map(|l| GoldAnswer::Text(l.trim().to_string()));
                (
                    format!("Premise: {premise}\nHypothesis: {hypothesis}"),
                    gold,
                )
            }
        };
        match gold {
            Some(gold_answer) => report.instances.push(TaskInstance {
                id: instance_id(family, 1, line_no as u64),
                family,
                level: 1,
                seed: line_no as u64,
                payload: Payload::RawText { text },
                gold_answer,
            }),
            None => {
                report.skipped += 1;
                report
                    .warnings
                    .push(format!("line {line_no}: no extractable answer, skipped"));
            }
        }
    }
    Ok(report)
}
