use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use factcheck_core::corpus::{
    apply_token_sidecar, debate_stats, load_cqa, load_debates, load_token_sidecar, save_cqa, save_debates, Debate,
    Factuality,
};
use factcheck_core::evidence::{
    build_query, fetch_with_retry, CommandClient, EvidenceCache, EvidenceError, EvidenceResult, FetchMode,
};
use factcheck_core::features::cqa::AnswerEvidence;
use factcheck_core::features::{zero_ranges, FeatureDump};
use factcheck_core::pipeline::{
    checkworthy_cv, cqa_cv, cqa_majority_cv, cqa_rows, debate_feature_rows, fit_checkworthy, fit_cqa,
    question_class_cv, rank_answers, rank_transcripts, sentence_key, CheckworthyModel, CheckworthyRun, CqaModel,
    CqaRun,
};
use factcheck_core::resources::Resources;
use serde::de::DeserializeOwned;

use crate::config::{ClassifierKind, EngineConfig, ExperimentConfig, TaskKind};
use crate::manifest::Manifest;
use crate::{IngestArgs, RankArgs, RunArgs};

/// Builds the effective configuration, checks it and its resources, and
/// writes the run manifest. Nothing expensive happens before this succeeds.
fn prepare(command: &str, args: &RunArgs, task_resources: bool) -> Result<ExperimentConfig> {
    let cfg = match &args.manifest {
        Some(path) => {
            if args.has_overrides() {
                bail!("--manifest replays a recorded run; only --out may be given with it");
            }
            let m = Manifest::read(path)?;
            if m.command != command {
                log::warn!("manifest was written by `{}`, replaying as `{command}`", m.command);
            }
            m.verify_resources()?;
            let mut cfg = m.config;
            if let Some(out) = &args.out {
                cfg.out = out.clone();
            }
            cfg
        }
        None => {
            let mut cfg = match &args.config {
                Some(p) => ExperimentConfig::from_file(p)?,
                None => ExperimentConfig::default(),
            };
            cfg.apply(args)?;
            cfg
        }
    };
    cfg.validate()?;
    if task_resources {
        let missing: Vec<&str> = cfg
            .required_resources()
            .into_iter()
            .filter(|(_, present)| !present)
            .map(|(n, _)| n)
            .collect();
        if !missing.is_empty() {
            bail!(
                "task {} needs resource(s) {}: set them under [resources] in the config or pass --data <dir>",
                cfg.task.name(),
                missing.join(", ")
            );
        }
    }
    cfg.resources
        .check_exist()
        .context("check the [resources] paths of the configuration")?;
    if args.live && command != "fetch-evidence" {
        log::warn!("--live only affects fetch-evidence; ignored");
    }
    Manifest::new(command, &cfg, args.live)?.write(&cfg.out)?;
    Ok(cfg)
}

fn load(cfg: &ExperimentConfig) -> Result<Resources> {
    Resources::load(&cfg.resources).context("loading resources")
}

fn checkworthy_run<'a>(cfg: &ExperimentConfig, res: &'a Resources) -> Result<CheckworthyRun<'a>> {
    Ok(CheckworthyRun {
        inputs: res.debate_inputs()?,
        features: cfg.debate_features.clone(),
        ablate: cfg.ablate.clone(),
        only: cfg.only.clone(),
        ranker: cfg.ranker_spec()?,
        target: cfg.target_task()?,
    })
}

fn cqa_run<'a>(cfg: &ExperimentConfig, res: &'a Resources) -> Result<CqaRun<'a>> {
    Ok(CqaRun {
        inputs: res.cqa_inputs()?,
        features: cfg.cqa_features.clone(),
        ablate: cfg.ablate.clone(),
        only: cfg.only.clone(),
        svm: cfg.svm.clone(),
        encoder: cfg.encoder.clone(),
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut json = serde_json::to_string_pretty(value)?;
    json.push('\n');
    fs::write(path, json).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))
}

pub fn ingest(args: &IngestArgs) -> Result<()> {
    if args.run.manifest.is_some() {
        bail!("ingest takes --debates/--cqa, not --manifest");
    }
    let mut cfg = match &args.run.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&args.run)?;
    if let Some(p) = &args.debates {
        cfg.resources.debates = Some(p.clone());
    }
    if let Some(p) = &args.cqa {
        cfg.resources.cqa = Some(p.clone());
    }
    if cfg.resources.debates.is_none() && cfg.resources.cqa.is_none() {
        bail!("nothing to ingest: pass --debates and/or --cqa");
    }
    if let Some(t) = &args.tokens {
        if !t.exists() {
            bail!("token file {} does not exist", t.display());
        }
    }
    cfg.resources.check_exist().context("check the corpus paths")?;
    Manifest::new("ingest", &cfg, false)?.write(&cfg.out)?;

    let mut stats = serde_json::Map::new();
    if let Some(p) = &cfg.resources.debates {
        let mut debates = load_debates(p)?;
        if let Some(t) = &args.tokens {
            let n = apply_token_sidecar(&mut debates, &load_token_sidecar(t)?);
            log::info!("applied tokens to {n} sentences");
        }
        save_debates(cfg.out.join("debates.jsonl"), &debates)?;
        let per: Vec<_> = debates.iter().map(debate_stats).collect();
        let sentences: usize = per.iter().map(|s| s.sentences).sum();
        let positives: usize = per.iter().map(|s| s.positives).sum();
        println!("debates: {} transcripts, {sentences} sentences, {positives} positive", debates.len());
        stats.insert(
            "debates".into(),
            serde_json::json!({"sentences": sentences, "positives": positives, "per_debate": per}),
        );
    }
    if let Some(p) = &cfg.resources.cqa {
        let threads = load_cqa(p)?;
        save_cqa(cfg.out.join("cqa.jsonl"), &threads)?;
        let mut classes: BTreeMap<String, usize> = BTreeMap::new();
        let (mut pos, mut neg) = (0usize, 0usize);
        for t in threads.iter().filter(|t| !t.question.excluded) {
            if let Some(c) = t.question_class {
                *classes.entry(format!("{c:?}")).or_default() += 1;
            }
            for (_, a) in t.labeled_answers() {
                if a.factuality == Some(Factuality::Positive) {
                    pos += 1;
                } else {
                    neg += 1;
                }
            }
        }
        println!("cqa: {} threads, questions {classes:?}, answers {pos} positive / {neg} negative", threads.len());
        stats.insert(
            "cqa".into(),
            serde_json::json!({"threads": threads.len(), "questions": classes, "answers": {"positive": pos, "negative": neg}}),
        );
    }
    write_json(&cfg.out.join("corpus_stats.json"), &stats)
}

pub fn features(args: &RunArgs) -> Result<()> {
    let cfg = prepare("features", args, true)?;
    let res = load(&cfg)?;
    let dump = match cfg.task {
        TaskKind::Checkworthy => {
            let run = checkworthy_run(&cfg, &res)?;
            let all: Vec<&Debate> = res.debates.iter().collect();
            let rows = debate_feature_rows(&run.inputs, &run.features, &all, run.target)?;
            let mask = run.features.selection_mask(&run.ablate, &run.only)?;
            let mut out = Vec::new();
            for (d, rows) in res.debates.iter().zip(rows) {
                for (s, mut r) in d.sentences.iter().zip(rows) {
                    zero_ranges(&mut r, &mask);
                    out.push((sentence_key(&d.id, s.id), r));
                }
            }
            FeatureDump {
                columns: run.features.layout().column_names(),
                rows: out,
            }
        }
        TaskKind::CqaFactcheck => {
            let run = cqa_run(&cfg, &res)?;
            let mask = run.features.selection_mask(&run.ablate, &run.only)?;
            let rows = cqa_rows(&run.inputs, &run.features)
                .into_iter()
                .map(|mut r| {
                    zero_ranges(&mut r.features, &mask);
                    (r.answer_id, r.features)
                })
                .collect();
            FeatureDump {
                columns: run.features.layout().column_names(),
                rows,
            }
        }
        TaskKind::QuestionClass => bail!("question_class uses bag-of-words vectors refitted per fold; no dump"),
    };
    let path = cfg.out.join("features.tsv");
    dump.write(&path)?;
    println!("{} rows x {} features -> {}", dump.rows.len(), dump.columns.len(), path.display());
    Ok(())
}

fn model_path(cfg: &ExperimentConfig, seed: u64) -> std::path::PathBuf {
    cfg.out.join("models").join(format!("{}-seed{seed}.json", cfg.task.name()))
}

pub fn train(args: &RunArgs) -> Result<()> {
    let cfg = prepare("train", args, true)?;
    if cfg.task == TaskKind::QuestionClass {
        bail!("train supports checkworthy and cqa_factcheck");
    }
    if cfg.task == TaskKind::CqaFactcheck && cfg.classifier == ClassifierKind::Majority {
        bail!("the majority baseline has nothing to train");
    }
    let res = load(&cfg)?;
    for &seed in &cfg.seeds {
        let path = model_path(&cfg, seed);
        match cfg.task {
            TaskKind::Checkworthy => write_json(&path, &fit_checkworthy(&checkworthy_run(&cfg, &res)?, seed)?)?,
            _ => write_json(&path, &fit_cqa(&cqa_run(&cfg, &res)?, seed)?)?,
        }
        println!("{}", path.display());
    }
    Ok(())
}

pub fn rank(args: &RankArgs) -> Result<()> {
    let cfg = prepare("rank", &args.run, true)?;
    let res = load(&cfg)?;
    let seed = cfg.seeds[0];
    let mut table = String::from("rank\tid\tscore\ttext\n");
    let ranked: Vec<(String, f64)>;
    let text: BTreeMap<String, String>;
    match cfg.task {
        TaskKind::Checkworthy => {
            let run = checkworthy_run(&cfg, &res)?;
            let model: CheckworthyModel = match &args.model {
                Some(p) => read_json(p)?,
                None => fit_checkworthy(&run, seed)?,
            };
            let transcripts = match &args.input {
                Some(p) => load_debates(p)?,
                None => res.debates.clone(),
            };
            ranked = rank_transcripts(&run, &model, &transcripts)?;
            text = transcripts
                .iter()
                .flat_map(|d| {
                    d.sentences
                        .iter()
                        .map(move |s| (sentence_key(&d.id, s.id), format!("{}: {}", s.speaker, s.text)))
                })
                .collect();
        }
        TaskKind::CqaFactcheck => {
            let mut run = cqa_run(&cfg, &res)?;
            let model: CqaModel = match &args.model {
                Some(p) => read_json(p)?,
                None => fit_cqa(&run, seed)?,
            };
            let threads = match &args.input {
                Some(p) => load_cqa(p)?,
                None => res.threads.clone(),
            };
            run.inputs.threads = &threads;
            ranked = rank_answers(&run, &model)?;
            text = threads
                .iter()
                .flat_map(|t| t.answers.iter().map(|a| (a.id.clone(), a.text.clone())))
                .collect();
        }
        TaskKind::QuestionClass => bail!("rank supports checkworthy and cqa_factcheck"),
    }
    for (i, (id, score)) in ranked.iter().enumerate() {
        let t = text.get(id).map_or("", |s| s.as_str());
        let t = t.replace(['\t', '\n'], " ");
        let _ = writeln!(table, "{}\t{id}\t{score}\t{t}", i + 1);
    }
    let path = cfg.out.join("ranked.tsv");
    fs::write(&path, table).with_context(|| format!("writing {}", path.display()))?;
    println!("{} items -> {}", ranked.len(), path.display());
    Ok(())
}

pub fn eval(args: &RunArgs) -> Result<()> {
    let cfg = prepare("eval", args, true)?;
    let res = load(&cfg)?;
    let report = match cfg.task {
        TaskKind::Checkworthy => checkworthy_cv(&checkworthy_run(&cfg, &res)?, &cfg.seeds)?,
        TaskKind::CqaFactcheck => match cfg.classifier {
            ClassifierKind::Majority => cqa_majority_cv(&res.cqa_inputs()?.threads)?,
            ClassifierKind::Svm => cqa_cv(&cqa_run(&cfg, &res)?, &cfg.seeds)?,
        },
        TaskKind::QuestionClass => {
            question_class_cv(&res.cqa_inputs()?.threads, cfg.question_c, cfg.question_folds, &cfg.seeds)?
        }
    };
    report.write(&cfg.out, "report")?;
    print!("{}", report.to_table());
    Ok(())
}

fn client(e: &EngineConfig) -> CommandClient {
    CommandClient {
        engine: e.name.clone(),
        program: e.program.clone(),
        args: e.args.clone(),
        api_key_env: e.api_key_env.clone(),
    }
}

pub fn fetch_evidence(args: &RunArgs) -> Result<()> {
    let mut run = args.clone();
    run.task.get_or_insert(TaskKind::CqaFactcheck);
    let cfg = prepare("fetch-evidence", &run, false)?;
    if cfg.resources.cqa.is_none() {
        bail!("fetch-evidence needs resources.cqa (or --data <dir>)");
    }
    if cfg.search.web.is_empty() && cfg.search.forum.is_none() {
        bail!("no search engines configured: add [[search.web]] or [search.forum] entries");
    }
    let mode = if args.live { FetchMode::Live } else { FetchMode::Offline };
    let res = load(&cfg)?;
    let cache = EvidenceCache::new(cfg.cache_dir());
    let web: Vec<CommandClient> = cfg.search.web.iter().map(client).collect();
    let forum = cfg.search.forum.as_ref().map(client);
    let classifier = &cfg.search.classifier;
    let wanted = cfg.search.results;

    let mut evidence: BTreeMap<String, AnswerEvidence> = BTreeMap::new();
    let mut queries = 0usize;
    for t in &res.threads {
        for (_, a) in t.labeled_answers() {
            let query = match build_query(&t.question.id, &t.question.text(), &a.id, &a.text, &res.idf, None) {
                Ok(q) => q,
                Err(EvidenceError::Unqueryable) => {
                    log::info!("answer {} has no content words; no evidence", a.id);
                    evidence.insert(a.id.clone(), AnswerEvidence::default());
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let mut get = |c: &CommandClient| -> Result<Vec<EvidenceResult>> {
                queries += 1;
                let (_, r) = fetch_with_retry(query.clone(), c, &cache, mode, classifier, wanted).with_context(|| {
                    if mode == FetchMode::Offline {
                        format!("answer {} (rerun with --live to search)", a.id)
                    } else {
                        format!("answer {}", a.id)
                    }
                })?;
                Ok(r)
            };
            let mut ev = AnswerEvidence::default();
            for c in &web {
                ev.web.extend(get(c)?);
            }
            if let Some(c) = &forum {
                ev.forum = get(c)?;
            }
            evidence.insert(a.id.clone(), ev);
        }
    }
    let path = cfg.out.join("evidence.json");
    write_json(&path, &evidence)?;
    println!("{} answers, {queries} searches -> {}", evidence.len(), path.display());
    Ok(())
}
