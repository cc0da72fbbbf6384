//! Command-line surface for the skic harness: generate instances, assemble
//! prompts, run evaluations, and export reports or fine-tuning data.

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use skic::client::{CacheMode, Client, EndpointConfig};
use skic::eval::{
    aggregate, export_report, export_sft, read_records, run, Backend, EvalRecord, ReportFormat,
    RunConfig, SftSource,
};
use skic::prompts::{build_prompt, select_exemplars, PromptVariant, ALL_VARIANTS};
use skic::rng::instance_seed;
use skic::skills::{builtin_registry, render_skill_block};
use skic::tasks::{generate, read_instances, write_instances, TaskFamily};
use skic::traces::{extract_answer, gold_trace, render};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Parser)]
#[command(name = "skic", version, about = "Skills-in-context prompting harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate task instances to a JSONL file
    Gen(GenArgs),
    /// Assemble prompt files for an instance file
    Prompt(PromptArgs),
    /// Run an evaluation grid against a backend
    Run(RunArgs),
    /// Re-score a records file and print metrics
    Score(ScoreArgs),
    /// Aggregate a records file into a report
    Report(ReportArgs),
    /// Export fine-tuning pairs from a records file
    ExportSft(ExportSftArgs),
    /// Propose skills from solved examples via a completion backend
    DiscoverSkills(DiscoverArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    level: u32,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PromptArgs {
    #[arg(long)]
    variant: String,
    #[arg(long)]
    instances: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 2)]
    exemplars: usize,
    #[arg(long, default_value_t = 0)]
    exemplar_seed: u64,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags below override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    backend: Option<String>,
    /// Repeatable family selector
    #[arg(long = "family")]
    families: Vec<String>,
    /// Level selection for the chosen families: "3", "1,3,5", or "2..7"
    #[arg(long)]
    levels: Option<String>,
    /// Comma-separated variant list, or "all"
    #[arg(long)]
    variants: Option<String>,
    #[arg(long)]
    instances_per_cell: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    exemplar_seed: Option<u64>,
    #[arg(long)]
    exemplars_per_prompt: Option<usize>,
    /// Cache mode: record or replay
    #[arg(long)]
    cache: Option<String>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Root under which the run directory is created
    #[arg(long, default_value = "runs")]
    out_root: PathBuf,
    /// Reuse an exact run directory (resumes finished work)
    #[arg(long)]
    run_dir: Option<PathBuf>,
    #[arg(long)]
    base_url: Option<String>,
    #[arg(long)]
    model: Option<String>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    records: PathBuf,
    /// markdown, csv, or json
    #[arg(long, default_value = "markdown")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportSftArgs {
    #[arg(long)]
    records: PathBuf,
    /// gold or records
    #[arg(long, default_value = "gold")]
    source: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DiscoverArgs {
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 2)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Read the model response from a file instead of calling an endpoint
    #[arg(long)]
    response_file: Option<PathBuf>,
    #[arg(long)]
    base_url: Option<String>,
    #[arg(long)]
    model: Option<String>,
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn config(msg: impl Into<String>) -> CliError {
        CliError::Config(msg.into())
    }
    fn runtime(msg: impl std::fmt::Display) -> CliError {
        CliError::Runtime(msg.to_string())
    }
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Prompt(args) => cmd_prompt(args),
        Command::Run(args) => cmd_run(args),
        Command::Score(args) => cmd_score(args),
        Command::Report(args) => cmd_report(args),
        Command::ExportSft(args) => cmd_export_sft(args),
        Command::DiscoverSkills(args) => cmd_discover(args),
    };
    match outcome {
        Ok(()) => {}
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
    }
}

fn parse_family(name: &str) -> Result<TaskFamily, CliError> {
    TaskFamily::parse_name(name).ok_or_else(|| CliError::config(format!("unknown family '{name}'")))
}

fn parse_variant(name: &str) -> Result<PromptVariant, CliError> {
    PromptVariant::parse_name(name)
        .ok_or_else(|| CliError::config(format!("unknown variant '{name}'")))
}

/// "3", "1,3,5", or "2..7" (inclusive).
fn parse_levels(spec: &str) -> Result<Vec<u32>, CliError> {
    let bad = || CliError::config(format!("cannot parse levels '{spec}'"));
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',')
        .map(|part| part.trim().parse().map_err(|_| bad()))
        .collect()
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let family = parse_family(&args.family)?;
    if !family.level_grid().contains(&args.level) {
        return Err(CliError::config(format!(
            "level {} is out of range for family {} (valid: {:?})",
            args.level,
            family.name(),
            family.level_grid()
        )));
    }
    let mut instances = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let instance = generate(family, args.level, instance_seed(args.seed, i as u64))
            .map_err(CliError::runtime)?;
        instances.push(instance);
    }
    write_instances(&args.out, &instances).map_err(CliError::runtime)?;
    println!("wrote {} instances to {}", instances.len(), args.out.display());
    Ok(())
}

fn cmd_prompt(args: PromptArgs) -> Result<(), CliError> {
    let variant = parse_variant(&args.variant)?;
    if !args.instances.exists() {
        return Err(CliError::config(format!(
            "instance file {} does not exist",
            args.instances.display()
        )));
    }
    let instances = read_instances(&args.instances).map_err(CliError::runtime)?;
    std::fs::create_dir_all(&args.out_dir).map_err(CliError::runtime)?;

    let mut exemplar_cache: BTreeMap<TaskFamily, Vec<skic::prompts::Exemplar>> = BTreeMap::new();
    let mut manifest = Vec::new();
    for instance in &instances {
        let exemplars = match exemplar_cache.get(&instance.family) {
            Some(e) => e,
            None => {
                let drawn = select_exemplars(
                    instance.family,
                    &instance.family.exemplar_levels(),
                    args.exemplars,
                    args.exemplar_seed,
                )
                .map_err(CliError::runtime)?;
                exemplar_cache.entry(instance.family).or_insert(drawn)
            }
        };
        let spec = build_prompt(
            variant,
            instance.family,
            exemplars,
            None,
            &instance.question_text(),
        )
        .map_err(CliError::runtime)?;
        let file = args.out_dir.join(format!("{}.txt", instance.id));
        std::fs::write(&file, &spec.assembled).map_err(CliError::runtime)?;
        let mut entry = spec.manifest();
        entry["instance_id"] = serde_json::json!(instance.id);
        entry["path"] = serde_json::json!(file.display().to_string());
        manifest.push(entry);
    }
    let manifest_path = args.out_dir.join("manifest.json");
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).map_err(CliError::runtime)?,
    )
    .map_err(CliError::runtime)?;
    println!(
        "wrote {} prompts and {}",
        instances.len(),
        manifest_path.display()
    );
    Ok(())
}

fn effective_run_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut config: RunConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::config(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::config(format!("bad config {}: {e}", path.display())))?
        }
        None => RunConfig {
            families: BTreeMap::new(),
            variants: vec![PromptVariant::Skic],
            exemplar_seed: 0,
            exemplars_per_prompt: 2,
            instances_per_cell: 5,
            master_seed: 0,
            endpoint: EndpointConfig::default(),
            backend: Backend::Oracle,
            cache_mode: None,
            cache_dir: None,
            output_dir: PathBuf::new(),
        },
    };

    if !args.families.is_empty() {
        let levels = args.levels.as_deref().map(parse_levels).transpose()?;
        let mut families = BTreeMap::new();
        for name in &args.families {
            let family = parse_family(name)?;
            families.insert(
                family,
                levels.clone().unwrap_or_else(|| family.level_grid()),
            );
        }
        config.families = families;
    } else if let Some(levels) = &args.levels {
        let levels = parse_levels(levels)?;
        for family_levels in config.families.values_mut() {
            *family_levels = levels.clone();
        }
    }
    if let Some(backend) = &args.backend {
        config.backend = match backend.to_ascii_lowercase().as_str() {
            "oracle" => Backend::Oracle,
            "http" => Backend::Http,
            other => return Err(CliError::config(format!("unknown backend '{other}'"))),
        };
    }
    if let Some(spec) = &args.variants {
        config.variants = if spec.eq_ignore_ascii_case("all") {
            ALL_VARIANTS.to_vec()
        } else {
            spec.split(',')
                .map(|v| parse_variant(v.trim()))
                .collect::<Result<Vec<_>, _>>()?
        };
    }
    if let Some(n) = args.instances_per_cell {
        config.instances_per_cell = n;
    }
    if let Some(seed) = args.master_seed {
        config.master_seed = seed;
    }
    if let Some(seed) = args.exemplar_seed {
        config.exemplar_seed = seed;
    }
    if let Some(k) = args.exemplars_per_prompt {
        config.exemplars_per_prompt = k;
    }
    if let Some(mode) = &args.cache {
        config.cache_mode = Some(match mode.to_ascii_lowercase().as_str() {
            "record" => CacheMode::Record,
            "replay" => CacheMode::Replay,
            other => return Err(CliError::config(format!("unknown cache mode '{other}'"))),
        });
    }
    if let Some(dir) = &args.cache_dir {
        config.cache_dir = Some(dir.clone());
    }
    if let Some(url) = &args.base_url {
        config.endpoint.base_url = url.clone();
    }
    if let Some(model) = &args.model {
        config.endpoint.model_name = model.clone();
    }
    Ok(config)
}

fn config_hash(config: &RunConfig) -> String {
    let snapshot = serde_json::to_string(config).unwrap_or_default();
    let digest = Sha256::digest(snapshot.as_bytes());
    digest.iter().take(4).map(|b| format!("{b:02x}")).collect()
}

fn write_manifest(config: &RunConfig) -> Result<(), CliError> {
    let registry = builtin_registry();
    let mut assets = serde_json::Map::new();
    for (family, _) in &config.families {
        let block = render_skill_block(&registry, *family, None).map_err(CliError::runtime)?;
        let exemplars = select_exemplars(
            *family,
            &family.exemplar_levels(),
            config.exemplars_per_prompt,
            config.exemplar_seed,
        )
        .map_err(CliError::runtime)?;
        let hash = |text: &str| {
            Sha256::digest(text.as_bytes())
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect::<String>()
        };
        assets.insert(
            family.name().to_string(),
            serde_json::json!({
                "skill_block_hash": hash(&block),
                "exemplars": exemplars
                    .iter()
                    .map(|e| serde_json::json!({
                        "instance_id": e.instance.id,
                        "solution_hash": hash(&e.solution_text),
                    }))
                    .collect::<Vec<_>>(),
            }),
        );
    }
    let manifest = serde_json::json!({
        "config": config,
        "prompt_assets": assets,
    });
    std::fs::write(
        config.output_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).map_err(CliError::runtime)?,
    )
    .map_err(CliError::runtime)
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let mut config = effective_run_config(&args)?;
    if config.families.is_empty() {
        return Err(CliError::config(
            "no families selected; pass --family or a config file",
        ));
    }
    config.output_dir = match &args.run_dir {
        Some(dir) => dir.clone(),
        None => {
            let stamp = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            args.out_root
                .join(format!("{stamp}-{}", config_hash(&config)))
        }
    };
    config.validate().map_err(|e| CliError::config(e.to_string()))?;
    std::fs::create_dir_all(&config.output_dir).map_err(CliError::runtime)?;
    write_manifest(&config)?;

    let records = run(&config).map_err(|e| match e {
        skic::eval::EvalError::Config(msg) => CliError::Config(msg),
        other => CliError::runtime(other),
    })?;
    let correct = records.iter().filter(|r| r.correct).count();
    println!(
        "run complete: {}/{} correct, records in {}",
        correct,
        records.len(),
        config.output_dir.join("records.jsonl").display()
    );
    Ok(())
}

fn require_records(path: &Path) -> Result<Vec<EvalRecord>, CliError> {
    if !path.exists() {
        return Err(CliError::config(format!(
            "records file {} does not exist",
            path.display()
        )));
    }
    read_records(path).map_err(CliError::runtime)
}

fn bundle_skills(record: &EvalRecord) -> Vec<String> {
    if !record.variant.includes_skill_block() {
        return Vec::new();
    }
    builtin_registry()
        .bundle(record.family)
        .map(|names| names.to_vec())
        .unwrap_or_default()
}

fn cmd_score(args: ScoreArgs) -> Result<(), CliError> {
    let mut records = require_records(&args.records)?;
    // re-derive correctness from the recorded responses so hand-edited or
    // externally produced record files score consistently
    for record in &mut records {
        if record.family.is_synthetic() {
            let instance = generate(record.family, record.level, record.seed)
                .map_err(CliError::runtime)?;
            let extracted = extract_answer(&record.response_text, record.family);
            record.correct = extracted
                .as_ref()
                .is_some_and(|a| a.matches(&instance.gold_answer));
            record.extracted_answer = extracted.map(|a| a.display());
        }
    }
    let metrics = aggregate(&records, bundle_skills);
    let text = serde_json::to_string_pretty(&metrics).map_err(CliError::runtime)?;
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(CliError::runtime)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let format = match args.format.to_ascii_lowercase().as_str() {
        "markdown" | "md" => ReportFormat::Markdown,
        "csv" => ReportFormat::Csv,
        "json" => ReportFormat::Json,
        other => return Err(CliError::config(format!("unknown report format '{other}'"))),
    };
    let records = require_records(&args.records)?;
    let metrics = aggregate(&records, bundle_skills);
    let text = export_report(&metrics, format).map_err(CliError::runtime)?;
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(CliError::runtime)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_export_sft(args: ExportSftArgs) -> Result<(), CliError> {
    let source = match args.source.to_ascii_lowercase().as_str() {
        "gold" => SftSource::Gold,
        "records" => SftSource::Records,
        other => return Err(CliError::config(format!("unknown sft source '{other}'"))),
    };
    let records = require_records(&args.records)?;
    let written = export_sft(&records, source, &args.out).map_err(CliError::runtime)?;
    if written == 0 {
        eprintln!("warning: no pairs matched the selection; wrote an empty file");
    }
    println!("wrote {written} pairs to {}", args.out.display());
    Ok(())
}

fn cmd_discover(args: DiscoverArgs) -> Result<(), CliError> {
    let family = parse_family(&args.family)?;
    if args.count == 0 {
        return Err(CliError::config("--count must be positive"));
    }
    let mut examples = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let instance = generate(
            family,
            family.exemplar_levels()[0],
            instance_seed(args.seed, i as u64),
        )
        .map_err(CliError::runtime)?;
        let solution = render(&gold_trace(&instance).map_err(CliError::runtime)?);
        examples.push((instance.question_text(), solution));
    }

    let complete = |prompt: &str| -> Result<String, String> {
        if let Some(path) = &args.response_file {
            return std::fs::read_to_string(path).map_err(|e| e.to_string());
        }
        let mut endpoint = EndpointConfig::default();
        if let Some(url) = &args.base_url {
            endpoint.base_url = url.clone();
        }
        if let Some(model) = &args.model {
            endpoint.model_name = model.clone();
        }
        let client = Client::new(endpoint).map_err(|e| e.to_string())?;
        client
            .complete(&client.default_request(prompt.to_string()))
            .map(|r| r.text)
            .map_err(|e| e.to_string())
    };
    let drafts =
        skic::skills::discover_skills(&examples, complete).map_err(CliError::runtime)?;
    for draft in drafts {
        println!("Skill <{}>: {}", draft.name, draft.description);
    }
    Ok(())
}
