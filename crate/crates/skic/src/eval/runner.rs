//! The evaluation loop: deterministic job construction, bounded-concurrency
//! completion, incremental JSONL persistence, and resume-on-restart.

use super::{append_records, classify_error, read_records, skill_mentions, Backend, EvalError, EvalRecord, RunConfig};
use crate::client::{oracle_trailer, Client, ClientError, CompletionResponse, DiskCache};
use crate::prompts::{build_prompt, select_exemplars, PromptSpec, PromptVariant};
use crate::rng::instance_seed;
use crate::skills::builtin_registry;
use crate::tasks::{generate, TaskInstance};
use crate::traces::{extract_answer, gold_trace};
use std::collections::BTreeSet;
use std::time::{SystemTime, UNIX_EPOCH};

struct Job {
    instance: TaskInstance,
    variant: PromptVariant,
    spec: PromptSpec,
    /// Text actually sent to the backend (oracle runs carry a trailer).
    sent: String,
}

fn now_millis() -> String {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis().to_string())
        .unwrap_or_default()
}

/// Draw the evaluation instances for one cell, skipping ids already used as
/// exemplars. The stream is a pure function of the master seed.
fn cell_instances(
    config: &RunConfig,
    family: crate::tasks::TaskFamily,
    level: u32,
    exemplar_ids: &BTreeSet<String>,
) -> Result<Vec<TaskInstance>, EvalError> {
    let mut out: Vec<TaskInstance> = Vec::with_capacity(config.instances_per_cell);
    let mut cursor = 0u64;
    let budget = (config.instances_per_cell as u64) * 50;
    while out.len() < config.instances_per_cell && cursor < budget {
        let seed = instance_seed(config.master_seed, cursor);
        cursor += 1;
        let instance = generate(family, level, seed)?;
        if exemplar_ids.contains(&instance.id) || out.iter().any(|i| i.id == instance.id) {
            continue;
        }
        out.push(instance);
    }
    if out.len() < config.instances_per_cell {
        return Err(EvalError::Config(format!(
            "family {} level {level} cannot supply {} distinct instances",
            family.name(),
            config.instances_per_cell
        )));
    }
    Ok(out)
}

fn complete_one(
    config: &RunConfig,
    client: Option<&Client>,
    cache: Option<&DiskCache>,
    sent: &str,
) -> Result<CompletionResponse, ClientError> {
    match config.backend {
        Backend::Oracle => crate::client::oracle_backend(sent),
        Backend::Http => {
            let client = client.expect("http backend requires a client");
            let request = client.default_request(sent.to_string());
            match (cache, config.cache_mode) {
                (Some(cache), Some(mode)) => {
                    client.cached_complete(cache, mode, &request).map(|(r, _)| r)
                }
                _ => client.complete(&request),
            }
        }
    }
}

/// Run the configured grid. Existing records in the output directory are
/// honored: finished (instance, variant) pairs are skipped, so an
/// interrupted run picks up where it stopped. Transport failures are
/// recorded and do not abort the run. Returns every record now on disk for
/// this configuration, in deterministic job order.
pub fn run(config: &RunConfig) -> Result<Vec<EvalRecord>, EvalError> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir)?;
    let records_path = config.output_dir.join("records.jsonl");

    let mut done: BTreeSet<(String, PromptVariant)> = BTreeSet::new();
    let mut existing = Vec::new();
    if records_path.exists() {
        existing = read_records(&records_path)?;
        for record in &existing {
            done.insert((record.instance_id.clone(), record.variant));
        }
    }

    let registry = builtin_registry();
    let mut jobs: Vec<Job> = Vec::new();
    for (family, levels) in &config.families {
        let exemplars = select_exemplars(
            *family,
            &family.exemplar_levels(),
            config.exemplars_per_prompt,
            config.exemplar_seed,
        )?;
        let exemplar_ids: BTreeSet<String> =
            exemplars.iter().map(|e| e.instance.id.clone()).collect();
        let mut levels = levels.clone();
        levels.sort_unstable();
        levels.dedup();
        for level in levels {
            for instance in cell_instances(config, *family, level, &exemplar_ids)? {
                for variant in &config.variants {
                    if done.contains(&(instance.id.clone(), *variant)) {
                        continue;
                    }
                    let spec = build_prompt(
                        *variant,
                        *family,
                        &exemplars,
                        None,
                        &instance.question_text(),
                    )?;
                    let sent = match config.backend {
                        Backend::Oracle => format!(
                            "{}{}",
                            spec.assembled,
                            oracle_trailer(*family, level, instance.seed, &instance.id)
                        ),
                        Backend::Http => spec.assembled.clone(),
                    };
                    jobs.push(Job {
                        instance: instance.clone(),
                        variant: *variant,
                        spec,
                        sent,
                    });
                }
            }
        }
    }

    let client = match config.backend {
        Backend::Http => Some(Client::new(config.endpoint.clone())?),
        Backend::Oracle => None,
    };
    let cache = match (&config.cache_dir, config.cache_mode) {
        (Some(dir), Some(_)) => Some(DiskCache::open(dir)?),
        _ => None,
    };

    let batch = config.endpoint.max_in_flight.max(1);
    let mut new_records: Vec<EvalRecord> = Vec::with_capacity(jobs.len());
    for chunk in jobs.chunks(batch) {
        let responses: Vec<Result<CompletionResponse, ClientError>> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|job| {
                        let client = client.as_ref();
                        let cache = cache.as_ref();
                        scope.spawn(move || complete_one(config, client, cache, &job.sent))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().unwrap()).collect()
            });

        let mut batch_records = Vec::with_capacity(chunk.len());
        for (job, outcome) in chunk.iter().zip(responses) {
            let record = match outcome {
                Ok(response) => {
                    let extracted = extract_answer(&response.text, job.instance.family);
                    let correct = extracted
                        .as_ref()
                        .is_some_and(|a| a.matches(&job.instance.gold_answer));
                    let mentions = skill_mentions(&response.text);
                    let error_category = if correct {
                        None
                    } else {
                        let gold = gold_trace(&job.instance).ok();
                        let prompt_skills = prompt_skill_set(&job.spec, &registry);
                        Some(
                            classify_error(
                                &response.text,
                                gold.as_ref(),
                                &prompt_skills,
                                &registry,
                            )
                            .category,
                        )
                    };
                    EvalRecord {
                        instance_id: job.instance.id.clone(),
                        family: job.instance.family,
                        level: job.instance.level,
                        seed: job.instance.seed,
                        variant: job.variant,
                        prompt_hash: job.spec.content_hash(),
                        response_text: response.text,
                        extracted_answer: extracted.map(|a| a.display()),
                        correct,
                        error_category,
                        skill_mentions: mentions,
                        latency_ms: response.latency_ms,
                        timestamp: now_millis(),
                        transport_error: None,
                    }
                }
                Err(err) => EvalRecord {
                    instance_id: job.instance.id.clone(),
                    family: job.instance.family,
                    level: job.instance.level,
                    seed: job.instance.seed,
                    variant: job.variant,
                    prompt_hash: job.spec.content_hash(),
                    response_text: String::new(),
                    extracted_answer: None,
                    correct: false,
                    error_category: None,
                    skill_mentions: Vec::new(),
                    latency_ms: 0,
                    timestamp: now_millis(),
                    transport_error: Some(err.to_string()),
                },
            };
            batch_records.push(record);
        }
        append_records(&records_path, &batch_records)?;
        new_records.extend(batch_records);
    }

    existing.extend(new_records);
    Ok(existing)
}

/// The skill names visible in a prompt, for activation and unseen-citation
/// checks. Variants without a skill block expose none.
pub fn prompt_skill_set(spec: &PromptSpec, registry: &crate::skills::SkillRegistry) -> Vec<String> {
    if !spec.variant.includes_skill_block() {
        return Vec::new();
    }
    match &spec.skill_subset {
        Some(subset) => subset.clone(),
        None => registry
            .bundle(spec.family)
            .map(|names| names.to_vec())
            .unwrap_or_default(),
    }
}
