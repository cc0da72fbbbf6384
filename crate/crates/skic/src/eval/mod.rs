//! Evaluation loop and analysis: run a variant grid against a backend,
//! persist per-instance records, classify failures, aggregate accuracy
//! tables, and export reports or fine-tuning data.

mod classify;
mod runner;

pub use classify::{classify_error, mutate, skill_mentions, verify_step_claims, Classification, Mutation};
pub use runner::{prompt_skill_set, run};

use crate::client::ClientError;
use crate::prompts::{PromptError, PromptVariant};
use crate::skills::{builtin_registry, canonical_name};
use crate::tasks::{GoldAnswer, TaskError, TaskFamily};
use crate::traces::{normalize_answer, TraceError};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum EvalError {
    Config(String),
    Task(TaskError),
    Trace(TraceError),
    Prompt(PromptError),
    Client(ClientError),
    Io(std::io::Error),
    Serde(serde_json::Error),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Config(msg) => write!(f, "config error: {msg}"),
            EvalError::Task(e) => write!(f, "task error: {e}"),
            EvalError::Trace(e) => write!(f, "trace error: {e}"),
            EvalError::Prompt(e) => write!(f, "prompt error: {e}"),
            EvalError::Client(e) => write!(f, "client error: {e}"),
            EvalError::Io(e) => write!(f, "io error: {e}"),
            EvalError::Serde(e) => write!(f, "serialization error: {e}"),
        }
    }
}

impl std::error::Error for EvalError {}

impl From<TaskError> for EvalError {
    fn from(e: TaskError) -> Self {
        EvalError::Task(e)
    }
}
impl From<TraceError> for EvalError {
    fn from(e: TraceError) -> Self {
        EvalError::Trace(e)
    }
}
impl From<PromptError> for EvalError {
    fn from(e: PromptError) -> Self {
        EvalError::Prompt(e)
    }
}
impl From<ClientError> for EvalError {
    fn from(e: ClientError) -> Self {
        EvalError::Client(e)
    }
}
impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        EvalError::Io(e)
    }
}
impl From<serde_json::Error> for EvalError {
    fn from(e: serde_json::Error) -> Self {
        EvalError::Serde(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorCategory {
    SeenSkill,
    UnseenSkill,
    Composition,
    Copying,
    Others,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 5] = [
        ErrorCategory::SeenSkill,
        ErrorCategory::UnseenSkill,
        ErrorCategory::Composition,
        ErrorCategory::Copying,
        ErrorCategory::Others,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorCategory::SeenSkill => "seen_skill",
            ErrorCategory::UnseenSkill => "unseen_skill",
            ErrorCategory::Composition => "composition",
            ErrorCategory::Copying => "copying",
            ErrorCategory::Others => "others",
        }
    }
}

/// One scored model response. Serialized as one JSONL line per
/// (instance, variant) pair; field order is stable for diffing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub instance_id: String,
    pub family: TaskFamily,
    pub level: u32,
    pub seed: u64,
    pub variant: PromptVariant,
    pub prompt_hash: String,
    pub response_text: String,
    pub extracted_answer: Option<String>,
    pub correct: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_category: Option<ErrorCategory>,
    pub skill_mentions: Vec<String>,
    pub latency_ms: u64,
    pub timestamp: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transport_error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Oracle,
    Http,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Families with the levels to evaluate at.
    pub families: BTreeMap<TaskFamily, Vec<u32>>,
    pub variants: Vec<PromptVariant>,
    pub exemplar_seed: u64,
    pub exemplars_per_prompt: usize,
    pub instances_per_cell: usize,
    /// Seed for the eval instance stream, disjoint from exemplars.
    pub master_seed: u64,
    pub endpoint: crate::client::EndpointConfig,
    pub backend: Backend,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_mode: Option<crate::client::CacheMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.families.is_empty() {
            return Err(EvalError::Config("no families selected".into()));
        }
        for (family, levels) in &self.families {
            if levels.is_empty() {
                return Err(EvalError::Config(format!(
                    "family {} has no levels",
                    family.name()
                )));
            }
            let grid = family.level_grid();
            for level in levels {
                if !grid.contains(level) {
                    return Err(EvalError::Config(format!(
                        "level {level} is out of range for family {} (valid: {grid:?})",
                        family.name()
                    )));
                }
            }
        }
        if self.variants.is_empty() {
            return Err(EvalError::Config("no prompt variants selected".into()));
        }
        if self.instances_per_cell == 0 {
            return Err(EvalError::Config("instances_per_cell must be positive".into()));
        }
        if self.exemplars_per_prompt == 0 {
            return Err(EvalError::Config("exemplars_per_prompt must be positive".into()));
        }
        if self.cache_mode.is_some() && self.cache_dir.is_none() {
            return Err(EvalError::Config("cache_mode set without cache_dir".into()));
        }
        Ok(())
    }
}

/// Exact-match scoring after family normalization.
pub fn score(extracted: Option<&GoldAnswer>, gold: &GoldAnswer) -> bool {
    extracted.is_some_and(|got| got.matches(gold))
}

/// Fraction of a record's skill mentions that are not in the prompt's skill
/// set. Returns None when the response cites nothing.
pub fn internal_activation_rate(mentions: &[String], prompt_skills: &[String]) -> Option<f64> {
    if mentions.is_empty() {
        return None;
    }
    let prompt_set: BTreeSet<String> = prompt_skills.iter().map(|s| canonical_name(s)).collect();
    let internal = mentions
        .iter()
        .filter(|m| !prompt_set.contains(&canonical_name(m)))
        .count();
    Some(internal as f64 / mentions.len() as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CellMetrics {
    pub family: TaskFamily,
    pub level: u32,
    pub variant: PromptVariant,
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// True when the level appears in the family's exemplar levels.
    pub in_distribution: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunMetrics {
    pub cells: Vec<CellMetrics>,
    pub error_histogram: BTreeMap<String, usize>,
    /// Mean internal activation rate per family over records that cite at
    /// least one skill; None when no record in the family cites any.
    pub activation_by_family: BTreeMap<String, Option<f64>>,
    pub zero_mention_records: usize,
    pub no_answer: usize,
    pub id_accuracy: Option<f64>,
    pub ood_accuracy: Option<f64>,
}

/// Roll records up into per-cell accuracy and overall summaries. Activation
/// rates need each record's prompt skill set, which the caller supplies via
/// the lookup (usually reconstructed from the run's prompt manifests).
pub fn aggregate<F>(records: &[EvalRecord], prompt_skills: F) -> RunMetrics
where
    F: Fn(&EvalRecord) -> Vec<String>,
{
    let mut cell_map: BTreeMap<(TaskFamily, u32, PromptVariant), (usize, usize)> = BTreeMap::new();
    let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
    let mut activation: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut families_seen: BTreeSet<String> = BTreeSet::new();
    let mut zero_mention = 0usize;
    let mut no_answer = 0usize;
    let mut id_counts = (0usize, 0usize);
    let mut ood_counts = (0usize, 0usize);

    for record in records {
        let entry = cell_map
            .entry((record.family, record.level, record.variant))
            .or_insert((0, 0));
        entry.0 += 1;
        if record.correct {
            entry.1 += 1;
        }
        if !record.correct {
            let label = record
                .error_category
                .map(|c| c.name().to_string())
                .unwrap_or_else(|| ErrorCategory::Others.name().to_string());
            *histogram.entry(label).or_insert(0) += 1;
        }
        if record.extracted_answer.is_none() {
            no_answer += 1;
        }
        families_seen.insert(record.family.name().to_string());
        match internal_activation_rate(&record.skill_mentions, &prompt_skills(record)) {
            Some(rate) => activation
                .entry(record.family.name().to_string())
                .or_default()
                .push(rate),
            None => zero_mention += 1,
        }
        let in_dist = record.family.exemplar_levels().contains(&record.level);
        let bucket = if in_dist { &mut id_counts } else { &mut ood_counts };
        bucket.0 += 1;
        if record.correct {
            bucket.1 += 1;
        }
    }

    let cells = cell_map
        .into_iter()
        .map(|((family, level, variant), (n, correct))| CellMetrics {
            family,
            level,
            variant,
            n,
            correct,
            accuracy: correct as f64 / n as f64,
            in_distribution: family.exemplar_levels().contains(&level),
        })
        .collect();

    let activation_by_family = families_seen
        .into_iter()
        .map(|family| {
            let mean = activation
                .get(&family)
                .filter(|rates| !rates.is_empty())
                .map(|rates| rates.iter().sum::<f64>() / rates.len() as f64);
            (family, mean)
        })
        .collect();

    let ratio = |(n, c): (usize, usize)| (n > 0).then(|| c as f64 / n as f64);
    RunMetrics {
        cells,
        error_histogram: histogram,
        activation_by_family,
        zero_mention_records: zero_mention,
        no_answer,
        id_accuracy: ratio(id_counts),
        ood_accuracy: ratio(ood_counts),
    }
}

/// Classify every incorrect record in place, given the gold trace and the
/// prompt's skill set for each.
pub fn classify_records<G, P>(records: &mut [EvalRecord], gold_for: G, prompt_skills: P)
where
    G: Fn(&EvalRecord) -> Option<crate::traces::GoldTrace>,
    P: Fn(&EvalRecord) -> Vec<String>,
{
    let registry = builtin_registry();
    for record in records.iter_mut() {
        if record.correct {
            record.error_category = None;
            continue;
        }
        let gold = gold_for(record);
        let skills = prompt_skills(record);
        let result = classify_error(&record.response_text, gold.as_ref(), &skills, &registry);
        record.error_category = Some(result.category);
    }
}

pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>, EvalError> {
    let text = std::fs::read_to_string(path)?;
    let mut records = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(line)?);
    }
    Ok(records)
}

pub fn append_records(path: &Path, records: &[EvalRecord]) -> Result<(), EvalError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    for record in records {
        serde_json::to_writer(&mut file, record)?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

pub fn export_report(metrics: &RunMetrics, format: ReportFormat) -> Result<String, EvalError> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(metrics)?),
        ReportFormat::Csv => {
            let mut out = String::from("family,level,variant,n,accuracy\n");
            for cell in &metrics.cells {
                out.push_str(&format!(
                    "{},{},{},{},{:.4}\n",
                    cell.family.name(),
                    cell.level,
                    cell.variant.name(),
                    cell.n,
                    cell.accuracy
                ));
            }
            Ok(out)
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let families: BTreeSet<TaskFamily> = metrics.cells.iter().map(|c| c.family).collect();
            for family in families {
                let cells: Vec<&CellMetrics> =
                    metrics.cells.iter().filter(|c| c.family == family).collect();
                let levels: BTreeSet<u32> = cells.iter().map(|c| c.level).collect();
                let variants: Vec<PromptVariant> = {
                    let mut seen = Vec::new();
                    for c in &cells {
                        if !seen.contains(&c.variant) {
                            seen.push(c.variant);
                        }
                    }
                    seen
                };
                out.push_str(&format!("## {}\n\n", family.name()));
                out.push_str("| variant |");
                for level in &levels {
                    let marker = if family.exemplar_levels().contains(level) {
                        ""
                    } else {
                        " (ood)"
                    };
                    out.push_str(&format!(" {level}{marker} |"));
                }
                out.push('\n');
                out.push_str("|---|");
                for _ in &levels {
                    out.push_str("---|");
                }
                out.push('\n');
                for variant in variants {
                    out.push_str(&format!("| {} |", variant.name()));
                    for level in &levels {
                        match cells
                            .iter()
                            .find(|c| c.level == *level && c.variant == variant)
                        {
                            Some(c) => out.push_str(&format!(" {:.3} |", c.accuracy)),
                            None => out.push_str(" - |"),
                        }
                    }
                    out.push('\n');
                }
                out.push('\n');
            }
            out.push_str("### error modes\n\n");
            for (label, count) in &metrics.error_histogram {
                out.push_str(&format!("- {label}: {count}\n"));
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SftSource {
    /// Regenerate gold traces offline for each record's instance.
    Gold,
    /// Use the recorded responses, keeping only correct ones.
    Records,
}

/// Write {prompt, completion} JSONL for fine-tuning. Returns the number of
/// pairs written; an empty selection yields an empty file, not an error.
pub fn export_sft(
    records: &[EvalRecord],
    source: SftSource,
    path: &Path,
) -> Result<usize, EvalError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = std::fs::File::create(path)?;
    let mut written = 0usize;
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for record in records {
        if !seen.insert(record.instance_id.clone()) {
            continue;
        }
        let completion = match source {
            SftSource::Gold => {
                let instance =
                    crate::tasks::generate(record.family, record.level, record.seed)?;
                crate::traces::render(&crate::traces::gold_trace(&instance)?)
            }
            SftSource::Records => {
                if !record.correct {
                    continue;
                }
                record.response_text.clone()
            }
        };
        let instance = crate::tasks::generate(record.family, record.level, record.seed)?;
        let line = serde_json::json!({
            "prompt": instance.question_text(),
            "completion": completion,
        });
        serde_json::to_writer(&mut file, &line)?;
        file.write_all(b"\n")?;
        written += 1;
    }
    Ok(written)
}

/// Normalize a raw extracted answer string back into a comparable answer.
pub fn parse_extracted(raw: &str, family: TaskFamily) -> Option<GoldAnswer> {
    normalize_answer(raw, family)
}
