use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use capforge_core::annotation::{self, AnnotationService, AnnotationStore, SystemClock, TaskInstance};
use capforge_core::corpus::{KeywordInstance, SplitFractions};
use capforge_core::entity::{ingest_external_tags, EntityTagger};
use capforge_core::instruct::{SubwordTokenizer, WhitespaceTokenizer};
use capforge_core::metrics::{self, keywords::keyword_report, EvalPair};
use capforge_core::negative::parse_ratio;
use capforge_core::text::fold_surface;
use capforge_core::{
    assemble, build_keyword_dataset, clean, jsonl, split, CaptionRecord, Corpus, EntailmentInstance, Gazetteer, Label,
    MixConfig, Renderer, Split, TaggedCaption, TemplateMode, TokenBudget, Tokenizer,
};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::{Command, CorpusIn, EvalTask, Mode, RenderTask, StatsFormat, TagTarget};

type CliResult<T = ()> = Result<T, CliError>;

fn resolve(path: &Path) -> PathBuf {
    if let Ok(p) = path.canonicalize() {
        return p;
    }
    let abs = std::path::absolute(path).unwrap_or_else(|_| path.to_owned());
    match (abs.parent().and_then(|p| p.canonicalize().ok()), abs.file_name()) {
        (Some(dir), Some(name)) => dir.join(name),
        _ => abs,
    }
}

/// Outputs must not overwrite inputs or each other.
fn check_paths(inputs: &[&Path], outputs: &[&Path]) -> CliResult {
    let ins: Vec<PathBuf> = inputs.iter().map(|p| resolve(p)).collect();
    let mut seen = HashSet::new();
    for out in outputs {
        let r = resolve(out);
        if ins.contains(&r) {
            return Err(CliError::Usage(format!("output {} is also an input", out.display())));
        }
        if !seen.insert(r) {
            return Err(CliError::Usage(format!("output {} is given twice", out.display())));
        }
    }
    Ok(())
}

fn emit(out: &mut dyn Write, value: Value) -> CliResult {
    writeln!(out, "{value}").map_err(|e| CliError::runtime(format!("stdout: {e}")))
}

fn load(input: &CorpusIn) -> CliResult<Corpus> {
    Ok(Corpus::load(&input.articles, &input.captions)?)
}

fn opt(p: &Option<PathBuf>) -> Option<&Path> {
    p.as_deref()
}

pub fn dispatch(command: &Command, out: &mut dyn Write) -> CliResult {
    match command {
        Command::Ingest {
            input,
            out_articles,
            out_captions,
        } => {
            check_paths(&[&input.articles, &input.captions], &[out_articles, out_captions])?;
            let corpus = load(input)?;
            corpus.write(out_articles, out_captions)?;
            emit(out, json!({"articles": corpus.articles.len(), "records": corpus.records.len()}))
        }
        Command::Clean {
            input,
            out_articles,
            out_captions,
            provenance,
        } => {
            let mut outs: Vec<&Path> = vec![out_articles, out_captions];
            outs.extend(opt(provenance));
            check_paths(&[&input.articles, &input.captions], &outs)?;
            let cleaned = clean(&load(input)?);
            cleaned.write(out_articles, out_captions)?;
            let counts = cleaned.provenance.to_counts();
            if let Some(p) = provenance {
                jsonl::write_json(p, &counts)?;
            }
            emit(
                out,
                json!({"raw": cleaned.provenance.raw_count, "kept": cleaned.records.len(), "removed": counts}),
            )
        }
        Command::Split {
            input,
            seed,
            fractions,
            out_captions,
        } => {
            check_paths(&[&input.articles, &input.captions], &[out_captions])?;
            let fractions: SplitFractions = fractions.parse()?;
            let corpus = split(&load(input)?, fractions, *seed);
            jsonl::write_path(out_captions, &corpus.records)?;
            let counts: BTreeMap<&str, usize> = corpus.split_counts().into_iter().map(|(s, n)| (s.as_str(), n)).collect();
            emit(out, json!({"records": corpus.records.len(), "splits": counts}))
        }
        Command::Tag {
            input,
            gazetteer,
            external_tags,
            target,
            out: out_path,
        } => tag(input, opt(gazetteer), opt(external_tags), *target, out_path, out),
        Command::GenEntailment {
            input,
            tags,
            seed,
            ratio,
            weights,
            max_retries,
            splits,
            out: out_path,
            skips,
        } => {
            let mut outs: Vec<&Path> = vec![out_path];
            outs.extend(opt(skips));
            check_paths(&[&input.articles, &input.captions, tags], &outs)?;
            let config = MixConfig {
                seed: *seed,
                ratio_pos_to_neg: parse_ratio(ratio)?,
                class_weights: parse_weights(weights)?,
                max_retries: *max_retries,
            };
            let splits = parse_splits(splits)?;
            gen_entailment(input, tags, &config, &splits, out_path, opt(skips), out)
        }
        Command::BuildKeywords { articles, out: out_path } => {
            check_paths(&[articles], &[out_path])?;
            let corpus = capforge_core::corpus::ingest_named(
                BufReader::new(File::open(articles).map_err(|e| CliError::at(articles.display(), e.to_string()))?),
                &articles.display().to_string(),
                std::io::empty(),
                "captions",
            )?;
            let ds = build_keyword_dataset(&corpus);
            jsonl::write_path(out_path, &ds.instances)?;
            emit(
                out,
                json!({
                    "instances": ds.instances.len(),
                    "skipped_no_keywords": ds.skipped_no_keywords,
                    "skipped_duplicate_body": ds.skipped_duplicate_body,
                }),
            )
        }
        Command::Render {
            task,
            input,
            articles,
            entities,
            mode,
            context_max,
            caption_max,
            entity_max,
            vocab,
            out: out_path,
        } => {
            let mut ins: Vec<&Path> = vec![input];
            ins.extend(opt(articles));
            ins.extend(opt(entities));
            ins.extend(opt(vocab));
            check_paths(&ins, &[out_path])?;
            let budget = TokenBudget {
                context_max: *context_max,
                caption_max: *caption_max,
                entity_max: *entity_max,
            };
            budget.validate()?;
            let tokenizer: Arc<dyn Tokenizer> = match vocab {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| CliError::at(p.display(), e.to_string()))?;
                    Arc::new(SubwordTokenizer::from_vocab(&text))
                }
                None => Arc::new(WhitespaceTokenizer),
            };
            let mode = match mode {
                Mode::Fidelity => TemplateMode::Fidelity,
                Mode::Normalized => TemplateMode::Normalized,
            };
            let renderer = Renderer::new(budget, mode, tokenizer);
            render(&renderer, *task, input, opt(articles), opt(entities), out_path, out)
        }
        Command::Eval {
            task,
            generated,
            references,
            gazetteer,
            out: out_path,
        } => {
            let mut ins: Vec<&Path> = vec![generated, references];
            ins.extend(opt(gazetteer));
            check_paths(&ins, &[out_path])?;
            match task {
                EvalTask::Caption => eval_captions(generated, references, opt(gazetteer), out_path, out),
                EvalTask::Keywords => eval_keywords(generated, references, out_path, out),
            }
        }
        Command::Stats {
            input,
            entailment,
            keywords,
            format,
        } => stats(input, opt(entailment), opt(keywords), *format, out),
        Command::Serve {
            port,
            host,
            store,
            tasks,
            claim_timeout_secs,
        } => {
            let timeout_ms = i64::try_from(claim_timeout_secs.saturating_mul(1000))
                .map_err(|_| CliError::Usage("--claim-timeout-secs is too large".into()))?;
            let mut store_state = AnnotationStore::open(store, timeout_ms, SystemClock)?;
            let mut created = 0;
            if let Some(path) = tasks {
                let instances: Vec<EntailmentInstance> = jsonl::read_path(path)?;
                let seeds: Vec<TaskInstance> = instances
                    .iter()
                    .filter(|i| i.label == Label::Entails)
                    .map(TaskInstance::from_instance)
                    .collect();
                created = store_state.create_tasks(seeds, "cli")?.created.len();
            }
            let service = Arc::new(AnnotationService::new(store_state));
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| CliError::runtime(e.to_string()))?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), *port))
                    .await
                    .map_err(|e| CliError::runtime(format!("bind {host}:{port}: {e}")))?;
                let addr = listener.local_addr().map_err(|e| CliError::runtime(e.to_string()))?;
                emit(out, json!({"listening": addr.to_string(), "tasks_created": created}))?;
                let _ = out.flush();
                axum::serve(listener, crate::server::router(service))
                    .await
                    .map_err(|e| CliError::runtime(e.to_string()))
            })
        }
        Command::ExportAnnotations {
            store,
            out: out_path,
            pair_positives,
        } => {
            check_paths(&[store], &[out_path])?;
            if !store.exists() {
                return Err(CliError::at(store.display(), "event log not found"));
            }
            let events = annotation::load_events(store)?;
            let tasks = annotation::replay(&events, annotation::DEFAULT_CLAIM_TIMEOUT_MS)?;
            let instances = annotation::export_instances(tasks.values(), *pair_positives);
            jsonl::write_path(out_path, &instances)?;
            emit(out, json!({"events": events.len(), "tasks": tasks.len(), "instances": instances.len()}))
        }
    }
}

fn parse_weights(s: &str) -> CliResult<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--weights {s:?}: {e}")))?;
    <[f64; 3]>::try_from(parts).map_err(|_| CliError::Usage(format!("--weights {s:?}: expected three values")))
}

fn parse_splits(s: &str) -> CliResult<Vec<Split>> {
    s.split(',')
        .map(|p| p.trim().parse::<Split>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--splits {s:?}: {e}")))
}

fn tag(
    input: &CorpusIn,
    gazetteer: Option<&Path>,
    external: Option<&Path>,
    target: TagTarget,
    out_path: &Path,
    out: &mut dyn Write,
) -> CliResult {
    let mut ins: Vec<&Path> = vec![&input.articles, &input.captions];
    ins.extend(gazetteer);
    ins.extend(external);
    check_paths(&ins, &[out_path])?;
    let corpus = load(input)?;
    let texts: Vec<(&str, &str)> = match target {
        TagTarget::Captions => corpus
            .records
            .iter()
            .map(|r| (r.record_id.as_str(), r.caption.as_str()))
            .collect(),
        TagTarget::Articles => corpus
            .articles
            .values()
            .map(|a| (a.article_id.as_str(), a.body.as_str()))
            .collect(),
    };
    let (tagged, report): (Vec<TaggedCaption>, Value) = match (gazetteer, external) {
        (Some(path), _) => {
            let gaz = Gazetteer::load(path)?;
            let tagged = texts
                .par_iter()
                .map(|(id, text)| TaggedCaption::new(*id, gaz.tag(id, text)))
                .collect();
            (tagged, json!({"terms": gaz.len(), "discarded_labels": gaz.discarded}))
        }
        (None, Some(path)) => {
            let map: HashMap<String, String> = texts.iter().map(|(i, t)| (i.to_string(), t.to_string())).collect();
            let file = File::open(path).map_err(|e| CliError::at(path.display(), e.to_string()))?;
            let ext = ingest_external_tags(BufReader::new(file), &path.display().to_string(), &map)?;
            let tagged = texts.iter().map(|(id, text)| TaggedCaption::new(*id, ext.tag(id, text))).collect();
            (tagged, serde_json::to_value(&ext.report).expect("serializable report"))
        }
        (None, None) => return Err(CliError::Usage("one of --gazetteer or --external-tags is required".into())),
    };
    jsonl::write_path(out_path, &tagged)?;
    let entities: usize = tagged.iter().map(|t| t.entities().len()).sum();
    emit(out, json!({"tagged": tagged.len(), "entities": entities, "report": report}))
}

fn gen_entailment(
    input: &CorpusIn,
    tags_path: &Path,
    config: &MixConfig,
    splits: &[Split],
    out_path: &Path,
    skips: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult {
    let corpus = load(input)?;
    let tags: Vec<TaggedCaption> = jsonl::read_path(tags_path)?;
    let captions: HashMap<&str, &str> = corpus
        .records
        .iter()
        .map(|r| (r.record_id.as_str(), r.caption.as_str()))
        .collect();
    for t in &tags {
        if let Some(text) = captions.get(t.record_id.as_str()) {
            if let Some(bad) = t.entities().iter().find(|e| !e.is_sound_in(text)) {
                return Err(CliError::at(
                    tags_path.display(),
                    format!("{}: span {}..{} does not read {:?}", t.record_id, bad.start, bad.end, bad.surface),
                ));
            }
        }
    }
    let assembled = assemble(&corpus, &tags, config, splits)?;
    jsonl::write_path(out_path, &assembled.instances)?;
    if let Some(p) = skips {
        jsonl::write_json(p, &assembled.skips)?;
    }
    let mut by_class: BTreeMap<&str, usize> = BTreeMap::new();
    for i in &assembled.instances {
        *by_class.entry(i.neg_class.as_str()).or_default() += 1;
    }
    emit(
        out,
        json!({"instances": assembled.instances.len(), "by_class": by_class, "skipped": assembled.skips}),
    )
}

/// Entity surfaces in order of first appearance, case-insensitively distinct.
fn distinct_surfaces(tags: &TaggedCaption) -> Vec<String> {
    let mut seen = HashSet::new();
    tags.entities()
        .iter()
        .filter(|e| seen.insert(fold_surface(&e.surface)))
        .map(|e| e.surface.clone())
        .collect()
}

fn render(
    renderer: &Renderer,
    task: RenderTask,
    input: &Path,
    articles: Option<&Path>,
    entities: Option<&Path>,
    out_path: &Path,
    out: &mut dyn Write,
) -> CliResult {
    let records = match task {
        RenderTask::Caption => {
            let articles = articles.ok_or_else(|| CliError::Usage("--articles is required for --task caption".into()))?;
            let corpus = Corpus::load(articles, input)?;
            let names: Option<HashMap<String, Vec<String>>> = match entities {
                Some(p) => Some(
                    jsonl::read_path::<TaggedCaption>(p)?
                        .iter()
                        .map(|t| (t.record_id.clone(), distinct_surfaces(t)))
                        .collect(),
                ),
                None => None,
            };
            let empty = Vec::new();
            corpus
                .records
                .par_iter()
                .map(|r| {
                    let ents = names.as_ref().map(|m| m.get(&r.article_id).unwrap_or(&empty).as_slice());
                    renderer.caption_record(&r.record_id, corpus.context_of(r), &r.caption, ents)
                })
                .collect::<Vec<_>>()
        }
        RenderTask::Entailment => {
            let instances: Vec<EntailmentInstance> = jsonl::read_path(input)?;
            instances.par_iter().map(|i| renderer.entailment_record(i)).collect()
        }
        RenderTask::Keywords => {
            let instances: Vec<KeywordInstance> = jsonl::read_path(input)?;
            instances
                .par_iter()
                .map(|k| renderer.keywords_record(&k.article_id, &k.input_text, &k.target_keywords))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    jsonl::write_path(out_path, &records)?;
    let max_prompt = records.iter().map(|r| r.prompt_tokens).max().unwrap_or(0);
    emit(out, json!({"records": records.len(), "max_prompt_tokens": max_prompt}))
}

#[derive(Debug, Deserialize)]
struct GeneratedCaption {
    instance_id: String,
    caption: String,
}

#[derive(Debug, Deserialize)]
struct PredictedKeywords {
    instance_id: String,
    keywords: Vec<String>,
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>, path: &Path) -> CliResult {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(CliError::at(path.display(), format!("duplicate instance_id {id:?}")));
        }
    }
    Ok(())
}

fn missing_error(path: &Path, missing: &[&str]) -> CliError {
    let shown: Vec<&str> = missing.iter().take(5).copied().collect();
    CliError::at(
        path.display(),
        format!("{} instance ids have no reference: {}", missing.len(), shown.join(", ")),
    )
}

fn eval_captions(
    generated: &Path,
    references: &Path,
    gazetteer: Option<&Path>,
    out_path: &Path,
    out: &mut dyn Write,
) -> CliResult {
    let generated_rows: Vec<GeneratedCaption> = jsonl::read_path(generated)?;
    check_unique(generated_rows.iter().map(|g| g.instance_id.as_str()), generated)?;
    let refs: Vec<CaptionRecord> = jsonl::read_path(references)?;
    let by_record: HashMap<&str, &CaptionRecord> = refs.iter().map(|r| (r.record_id.as_str(), r)).collect();
    let mut by_image: HashMap<&str, Vec<String>> = HashMap::new();
    for r in &refs {
        by_image.entry(r.image.image_id.as_str()).or_default().push(r.caption.clone());
    }
    let missing: Vec<&str> = generated_rows
        .iter()
        .map(|g| g.instance_id.as_str())
        .filter(|id| !by_record.contains_key(id))
        .collect();
    if !missing.is_empty() {
        return Err(missing_error(generated, &missing));
    }
    let gaz = gazetteer.map(Gazetteer::load).transpose()?;
    let pairs: Vec<EvalPair> = generated_rows
        .iter()
        .map(|g| {
            let record = by_record[g.instance_id.as_str()];
            let pair = EvalPair::new(&g.instance_id, &g.caption, by_image[record.image.image_id.as_str()].clone());
            match &gaz {
                Some(gaz) => {
                    let surfaces = |text: &str| gaz.tag_text(text).into_iter().map(|e| e.surface).collect::<Vec<_>>();
                    pair.with_entities(surfaces(&g.caption), surfaces(&record.caption))
                }
                None => pair,
            }
        })
        .collect();
    if pairs.is_empty() {
        return Err(CliError::at(generated.display(), "no generated captions"));
    }
    let report = metrics::evaluate(&pairs)?;
    jsonl::write_json(out_path, &report)?;
    let mut summary = json!({
        "instances": pairs.len(),
        "bleu4": report.bleu4,
        "meteor_lite": report.meteor_lite,
        "rouge_l": report.rouge_l,
        "cider_d": report.cider_d,
        "flags": report.flags,
    });
    if gaz.is_some() {
        summary["ne_precision"] = json!(report.ne_precision);
        summary["ne_recall"] = json!(report.ne_recall);
    }
    emit(out, summary)
}

fn eval_keywords(generated: &Path, references: &Path, out_path: &Path, out: &mut dyn Write) -> CliResult {
    let predicted: Vec<PredictedKeywords> = jsonl::read_path(generated)?;
    check_unique(predicted.iter().map(|p| p.instance_id.as_str()), generated)?;
    let gold: Vec<KeywordInstance> = jsonl::read_path(references)?;
    let by_id: HashMap<&str, &KeywordInstance> = gold.iter().map(|k| (k.article_id.as_str(), k)).collect();
    let missing: Vec<&str> = predicted
        .iter()
        .map(|p| p.instance_id.as_str())
        .filter(|id| !by_id.contains_key(id))
        .collect();
    if !missing.is_empty() {
        return Err(missing_error(generated, &missing));
    }
    let report = keyword_report(predicted.iter().map(|p| {
        (
            p.instance_id.as_str(),
            p.keywords.as_slice(),
            by_id[p.instance_id.as_str()].target_keywords.as_slice(),
        )
    }));
    jsonl::write_json(out_path, &report)?;
    emit(
        out,
        json!({"f_at_10": report.f_at_10, "evaluated": report.evaluated, "skipped_empty_gold": report.skipped_empty_gold}),
    )
}

const STATS_SPLITS: [Split; 4] = [Split::Train, Split::Val, Split::Test, Split::Unassigned];

type SplitRow = BTreeMap<Split, usize>;

fn stats(
    input: &CorpusIn,
    entailment: Option<&Path>,
    keywords: Option<&Path>,
    format: StatsFormat,
    out: &mut dyn Write,
) -> CliResult {
    let corpus = load(input)?;
    let record_split: HashMap<&str, Split> = corpus.records.iter().map(|r| (r.record_id.as_str(), r.split)).collect();
    // An article's split is that of its first caption.
    let mut article_split: HashMap<&str, Split> = HashMap::new();
    for r in &corpus.records {
        article_split.entry(r.article_id.as_str()).or_insert(r.split);
    }

    let mut rows: Vec<(&str, Option<SplitRow>)> = Vec::new();
    let keyword_row = match keywords {
        Some(p) => {
            let mut row = SplitRow::new();
            for k in jsonl::read_path::<KeywordInstance>(p)? {
                let s = article_split.get(k.article_id.as_str()).copied().unwrap_or_default();
                *row.entry(s).or_default() += 1;
            }
            Some(row)
        }
        None => None,
    };
    rows.push(("Keyword Extraction", keyword_row));
    let entailment_row = match entailment {
        Some(p) => {
            let mut row = SplitRow::new();
            for i in jsonl::read_path::<EntailmentInstance>(p)? {
                let s = record_split.get(i.source_record_id.as_str()).copied().unwrap_or_default();
                *row.entry(s).or_default() += 1;
            }
            Some(row)
        }
        None => None,
    };
    rows.push(("Contextual Visual Entailment", entailment_row));
    let mut captioning = SplitRow::new();
    for (_, s) in &record_split {
        *captioning.entry(*s).or_default() += 1;
    }
    rows.push(("News Image Captioning", Some(captioning)));

    match format {
        StatsFormat::Json => {
            let table: BTreeMap<&str, Value> = rows
                .iter()
                .map(|(name, row)| {
                    let v = row.as_ref().map_or(Value::Null, |r| {
                        json!(r.iter().map(|(s, n)| (s.as_str(), *n)).collect::<BTreeMap<_, _>>())
                    });
                    (*name, v)
                })
                .collect();
            emit(
                out,
                json!({"articles": corpus.articles.len(), "records": corpus.records.len(), "datasets": table}),
            )
        }
        StatsFormat::Table => {
            let show_unassigned = rows
                .iter()
                .any(|(_, r)| r.as_ref().is_some_and(|r| r.get(&Split::Unassigned).copied().unwrap_or(0) > 0));
            let cols: Vec<Split> = STATS_SPLITS
                .into_iter()
                .filter(|s| *s != Split::Unassigned || show_unassigned)
                .collect();
            let text = format_table(&rows, &cols, corpus.articles.len(), corpus.records.len());
            out.write_all(text.as_bytes()).map_err(|e| CliError::runtime(format!("stdout: {e}")))
        }
    }
}

fn format_table(rows: &[(&str, Option<SplitRow>)], cols: &[Split], articles: usize, records: usize) -> String {
    let header: Vec<String> = cols
        .iter()
        .map(|s| {
            let name = s.as_str();
            name[..1].to_uppercase() + &name[1..]
        })
        .collect();
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|(_, row)| {
            cols.iter()
                .map(|s| match row {
                    Some(r) => r.get(s).copied().unwrap_or(0).to_string(),
                    None => "-".to_owned(),
                })
                .collect()
        })
        .collect();
    let name_w = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols.len())
        .map(|c| cells.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let rule = {
        let mut s = format!("+{}+", "-".repeat(name_w + 2));
        for w in &widths {
            s.push_str(&"-".repeat(w + 2));
            s.push('+');
        }
        s
    };
    let mut text = format!("articles: {articles}\nrecords: {records}\n{rule}\n| {:name_w$} |", "");
    for (h, w) in header.iter().zip(&widths) {
        text.push_str(&format!(" {h:>w$} |"));
    }
    text.push('\n');
    text.push_str(&rule);
    text.push('\n');
    for ((name, _), row) in rows.iter().zip(&cells) {
        text.push_str(&format!("| {name:name_w$} |"));
        for (c, w) in row.iter().zip(&widths) {
            text.push_str(&format!(" {c:>w$} |"));
        }
        text.push('\n');
    }
    text.push_str(&rule);
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let mut row = SplitRow::new();
        row.insert(Split::Train, 12);
        row.insert(Split::Test, 3);
        let rows = vec![("Keyword Extraction", None), ("News Image Captioning", Some(row))];
        let text = format_table(&rows, &[Split::Train, Split::Val, Split::Test], 4, 15);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[3], "|                       | Train | Val | Test |");
        assert_eq!(lines[5], "| Keyword Extraction    |     - |   - |    - |");
        assert_eq!(lines[6], "| News Image Captioning |    12 |   0 |    3 |");
    }

    #[test]
    fn weights_and_splits_parse() {
        assert_eq!(parse_weights("1, 0,0").unwrap(), [1.0, 0.0, 0.0]);
        assert!(parse_weights("1,1").is_err());
        assert_eq!(parse_splits("train,unassigned").unwrap(), vec![Split::Train, Split::Unassigned]);
        assert!(parse_splits("train,dev").is_err());
    }

    #[test]
    fn outputs_cannot_clobber_inputs() {
        let dir = std::env::temp_dir();
        let a = dir.join("capforge-a.jsonl");
        assert!(check_paths(&[&a], &[&a]).is_err());
        assert!(check_paths(&[&a], &[&dir.join("b.jsonl"), &dir.join("b.jsonl")]).is_err());
        assert!(check_paths(&[&a], &[&dir.join("b.jsonl")]).is_ok());
    }
}
