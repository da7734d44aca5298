//! End-to-end experiment drivers shared by the command-line tool and the
//! dataset-level checks. Every fold fits its own vocabulary, similarity
//! references, scaler and models on training groups only.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CqaThread, Debate, Factuality, Source};
use crate::discourse::RstNode;
use crate::embeddings::VectorStore;
use crate::eval::baselines::{random_ranking, TfidfSvmRanker};
use crate::eval::{
    cross_validate_classification, cross_validate_ranking, group_folds, EvalError, EvalReport, Fold, Predictions,
    RankedList,
};
use crate::evidence::{sentence_triplets, IdfTable};
use crate::features::cqa::{question_bow, question_vocab, AnswerEvidence, CqaExtractor, CqaFeatureConfig, CqaResources};
use crate::features::debate::{claimbuster_vocab, DebateExtractor, DebateFeatureConfig, DebateResources, KnownRefs, BOW_DIM};
use crate::features::{zero_ranges, FeatureError};
use crate::lexicons::LexiconSet;
use crate::models::bilstm::{embed_tokens, BilstmExample, BilstmStack, BilstmStackConfig, BRANCHES};
use crate::models::ffnn::{Ffnn, FfnnConfig};
use crate::models::multitask::{variant, MultiTaskConfig, MultiTaskNet, Task, VariantKind};
use crate::models::svm::{grid_search, Kernel, OneVsRest, SvmConfig, SvmModel};
use crate::models::ModelError;
use crate::text;
use crate::topics::TopicModel;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid experiment: {0}")]
    Config(String),
}

/// Sources that selected sentence `i`.
pub fn selected_sources(debate: &Debate, i: usize) -> Vec<Source> {
    let row = debate.annotations.row(i);
    Source::ALL.iter().copied().filter(|s| row[s.index()]).collect()
}

pub fn task_labels(debate: &Debate, task: Task) -> Vec<bool> {
    (0..debate.sentences.len())
        .map(|i| task.label(&selected_sources(debate, i)))
        .collect()
}

/// Stable item id of a sentence in ranked output.
pub fn sentence_key(debate_id: &str, sentence_id: u64) -> String {
    format!("{debate_id}/{sentence_id:08}")
}

/// Per-column z-scoring fitted on training rows; constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[&[f64]]) -> Self {
        let d = rows.first().map_or(0, |r| r.len());
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for r in rows {
            for k in 0..d {
                var[k] += (r[k] - mean[k]).powi(2) / n;
            }
        }
        let scale = var.into_iter().map(|v| if v > 1e-24 { v.sqrt() } else { 0.0 }).collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| if *s == 0.0 { 0.0 } else { (v - m) / s })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimText {
    pub text: String,
    /// Debate and sentence the claim was drawn from, if any.
    pub origin: Option<(String, u64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct DebateInputs<'a> {
    pub debates: &'a [Debate],
    pub lexicons: &'a LexiconSet,
    pub vectors: Option<&'a VectorStore>,
    pub topics: Option<&'a TopicModel>,
    pub discourse: Option<&'a BTreeMap<String, RstNode>>,
    pub external_claims: &'a [ClaimText],
}

#[derive(Debug, Clone, PartialEq)]
pub enum RankerSpec {
    Ffnn(FfnnConfig),
    MultiTask { kind: VariantKind, config: MultiTaskConfig },
    TfidfSvm { c: f64 },
    Random,
}

impl RankerSpec {
    pub fn name(&self) -> String {
        match self {
            RankerSpec::Ffnn(_) => "ffnn".into(),
            RankerSpec::MultiTask { kind, .. } => format!("multitask:{}", kind.name()),
            RankerSpec::TfidfSvm { .. } => "tfidf_svm_rank".into(),
            RankerSpec::Random => "random".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckworthyRun<'a> {
    pub inputs: DebateInputs<'a>,
    pub features: DebateFeatureConfig,
    pub ablate: Vec<String>,
    pub only: Vec<String>,
    pub ranker: RankerSpec,
    /// The label being ranked for.
    pub target: Task,
}

/// Feature rows of every debate using resources fitted on `train` only.
pub fn debate_feature_rows(
    inputs: &DebateInputs,
    config: &DebateFeatureConfig,
    train: &[&Debate],
    target: Task,
) -> Result<Vec<Vec<Vec<f64>>>, PipelineError> {
    let docs: Vec<Vec<String>> = train
        .iter()
        .flat_map(|d| d.sentences.iter().map(|s| s.lower_words()))
        .collect();
    let vocab = claimbuster_vocab(&docs);
    let mut known = KnownRefs::from_debates(train, |d, i| target.label(&selected_sources(d, i)));
    for c in inputs.external_claims {
        known.add_external(&c.text, c.origin.clone());
    }
    let ex = DebateExtractor::new(
        config.clone(),
        DebateResources {
            lexicons: inputs.lexicons,
            claimbuster: &vocab,
            vectors: inputs.vectors,
            topics: inputs.topics,
            discourse: inputs.discourse,
            known: Some(&known),
        },
    )?;
    Ok(inputs.debates.iter().map(|d| ex.extract_debate(d)).collect())
}

fn masked(rows: Vec<Vec<f64>>, mask: &[Range<usize>]) -> Vec<Vec<f64>> {
    rows.into_iter()
        .map(|mut r| {
            zero_ranges(&mut r, mask);
            r
        })
        .collect()
}

/// Leave-one-debate-out ranking evaluation averaged over `seeds`.
pub fn checkworthy_cv(run: &CheckworthyRun, seeds: &[u64]) -> Result<EvalReport, PipelineError> {
    let debates = run.inputs.debates;
    let ids: Vec<&str> = debates.iter().map(|d| d.id.as_str()).collect();
    let folds = group_folds(&ids)?;
    let mask = run.features.selection_mask(&run.ablate, &run.only)?;
    let fold_lists = |fold: &Fold| -> Result<Vec<(u64, RankedList)>, PipelineError> {
        let train: Vec<&Debate> = fold.train.iter().map(|&i| &debates[i]).collect();
        let test: Vec<&Debate> = fold.test.iter().map(|&i| &debates[i]).collect();
        let rank = |scores: Vec<Vec<f64>>| -> RankedList {
            RankedList::from_scores(test.iter().zip(scores).flat_map(|(d, sc)| {
                let gold = task_labels(d, run.target);
                d.sentences
                    .iter()
                    .zip(sc)
                    .zip(gold)
                    .map(|((s, v), g)| (sentence_key(&d.id, s.id), v, g))
                    .collect::<Vec<_>>()
            }))
        };
        let mut out = Vec::with_capacity(seeds.len());
        match &run.ranker {
            RankerSpec::Random => {
                let keys: Vec<String> = test
                    .iter()
                    .flat_map(|d| d.sentences.iter().map(|s| sentence_key(&d.id, s.id)))
                    .collect();
                let gold: Vec<bool> = test.iter().flat_map(|d| task_labels(d, run.target)).collect();
                for &seed in seeds {
                    out.push((seed, random_ranking(&keys, &gold, seed)));
                }
            }
            RankerSpec::TfidfSvm { c } => {
                let docs: Vec<Vec<String>> = train
                    .iter()
                    .flat_map(|d| d.sentences.iter().map(|s| s.lower_words()))
                    .collect();
                let labels: Vec<bool> = train.iter().flat_map(|d| task_labels(d, run.target)).collect();
                let model = TfidfSvmRanker::fit(&docs, &labels, *c, Some(BOW_DIM))?;
                let scores: Vec<Vec<f64>> = test
                    .iter()
                    .map(|d| d.sentences.iter().map(|s| model.score(&s.lower_words())).collect())
                    .collect();
                let list = rank(scores);
                for &seed in seeds {
                    out.push((seed, list.clone()));
                }
            }
            RankerSpec::Ffnn(_) | RankerSpec::MultiTask { .. } => {
                let rows = debate_feature_rows(&run.inputs, &run.features, &train, run.target)?;
                let rows: Vec<Vec<Vec<f64>>> = rows.into_iter().map(|r| masked(r, &mask)).collect();
                let train_x: Vec<&[f64]> = fold.train.iter().flat_map(|&i| rows[i].iter().map(|r| r.as_slice())).collect();
                let scaler = Standardizer::fit(&train_x);
                let x: Vec<Vec<f64>> = train_x.iter().map(|r| scaler.apply(r)).collect();
                let test_x: Vec<Vec<Vec<f64>>> = fold
                    .test
                    .iter()
                    .map(|&i| rows[i].iter().map(|r| scaler.apply(r)).collect())
                    .collect();
                for &seed in seeds {
                    let scores = train_and_score(run, &train, &x, &test_x, seed)?;
                    out.push((seed, rank(scores)));
                }
            }
        }
        Ok(out)
    };
    // folds are independent and seeded, so running them concurrently does not
    // change any result
    let per_fold: Vec<Result<Vec<(u64, RankedList)>, PipelineError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = folds.iter().map(|f| scope.spawn(|| fold_lists(f))).collect();
        handles.into_iter().map(|h| h.join().expect("fold worker panicked")).collect()
    });
    let mut lists: HashMap<(usize, u64), RankedList> = HashMap::new();
    for (fi, r) in per_fold.into_iter().enumerate() {
        for (seed, list) in r? {
            lists.insert((fi, seed), list);
        }
    }
    let label = run_label(&run.ranker, &run.ablate, &run.only, run.target);
    Ok(cross_validate_ranking("checkworthy", &label, &folds, seeds, |fold, seed| {
        let fi = folds.iter().position(|f| f.group == fold.group).expect("known fold");
        Ok::<_, EvalError>(lists[&(fi, seed)].clone())
    })?)
}

fn run_label(ranker: &RankerSpec, ablate: &[String], only: &[String], target: Task) -> String {
    let mut s = format!("{} target={}", ranker.name(), target);
    if !ablate.is_empty() {
        s.push_str(&format!(" ablate={}", ablate.join(",")));
    }
    if !only.is_empty() {
        s.push_str(&format!(" only={}", only.join(",")));
    }
    s
}

/// A fitted feature-based ranker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainedRanker {
    Ffnn(Ffnn),
    MultiTask { net: MultiTaskNet, head: usize },
}

impl TrainedRanker {
    pub fn score(&self, row: &[f64]) -> f64 {
        match self {
            TrainedRanker::Ffnn(net) => net.score(row),
            TrainedRanker::MultiTask { net, head } => net.scores(row)[*head],
        }
    }
}

fn fit_ranker(run: &CheckworthyRun, train: &[&Debate], x: &[Vec<f64>], seed: u64) -> Result<TrainedRanker, PipelineError> {
    match &run.ranker {
        RankerSpec::Ffnn(cfg) => {
            let labels: Vec<bool> = train.iter().flat_map(|d| task_labels(d, run.target)).collect();
            let mut net = Ffnn::new(x[0].len(), FfnnConfig { seed, ..cfg.clone() })?;
            net.fit(x, &labels)?;
            Ok(TrainedRanker::Ffnn(net))
        }
        RankerSpec::MultiTask { kind, config } => {
            let target = match (run.target, kind) {
                (Task::Source(s), _) => s,
                (Task::Any, VariantKind::Any) => Source::CT,
                (Task::Any, _) => {
                    return Err(PipelineError::Config(format!(
                        "variant {} needs a single target source",
                        kind.name()
                    )))
                }
            };
            let (cfg, scoring) = variant(*kind, target, &MultiTaskConfig { seed, ..config.clone() });
            let labels: Vec<Vec<bool>> = train
                .iter()
                .flat_map(|d| (0..d.sentences.len()).map(move |i| selected_sources(d, i)))
                .map(|sel| cfg.tasks.iter().map(|t| t.label(&sel)).collect())
                .collect();
            let mut net = MultiTaskNet::new(x[0].len(), cfg.clone())?;
            net.fit(x, &labels)?;
            let head = net.task_index(scoring).expect("scoring head is configured");
            Ok(TrainedRanker::MultiTask { net, head })
        }
        other => Err(PipelineError::Config(format!(
            "{} is not a trainable feature-based ranker",
            other.name()
        ))),
    }
}

fn train_and_score(
    run: &CheckworthyRun,
    train: &[&Debate],
    x: &[Vec<f64>],
    test_x: &[Vec<Vec<f64>>],
    seed: u64,
) -> Result<Vec<Vec<f64>>, PipelineError> {
    let model = fit_ranker(run, train, x, seed)?;
    Ok(test_x
        .iter()
        .map(|d| d.iter().map(|r| model.score(r)).collect())
        .collect())
}

/// A ranker fitted on every debate of a run, with its scaler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckworthyModel {
    pub label: String,
    pub target: Task,
    pub seed: u64,
    pub scaler: Standardizer,
    pub ranker: TrainedRanker,
}

/// Fits the run's ranker on all of its debates.
pub fn fit_checkworthy(run: &CheckworthyRun, seed: u64) -> Result<CheckworthyModel, PipelineError> {
    let train: Vec<&Debate> = run.inputs.debates.iter().collect();
    if train.is_empty() {
        return Err(PipelineError::Config("no debates to train on".into()));
    }
    let mask = run.features.selection_mask(&run.ablate, &run.only)?;
    let rows = debate_feature_rows(&run.inputs, &run.features, &train, run.target)?;
    let rows: Vec<Vec<f64>> = rows.into_iter().flat_map(|r| masked(r, &mask)).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let scaler = Standardizer::fit(&refs);
    let x: Vec<Vec<f64>> = rows.iter().map(|r| scaler.apply(r)).collect();
    let ranker = fit_ranker(run, &train, &x, seed)?;
    Ok(CheckworthyModel {
        label: run_label(&run.ranker, &run.ablate, &run.only, run.target),
        target: run.target,
        seed,
        scaler,
        ranker,
    })
}

/// Scores every sentence of `transcripts` with a model fitted on the run's
/// debates, which also supply the vocabulary and similarity references.
/// Sorted by score descending, ties by key.
pub fn rank_transcripts(
    run: &CheckworthyRun,
    model: &CheckworthyModel,
    transcripts: &[Debate],
) -> Result<Vec<(String, f64)>, PipelineError> {
    let mask = run.features.selection_mask(&run.ablate, &run.only)?;
    let train: Vec<&Debate> = run.inputs.debates.iter().collect();
    let inputs = DebateInputs {
        debates: transcripts,
        ..run.inputs
    };
    let rows = debate_feature_rows(&inputs, &run.features, &train, model.target)?;
    let mut out: Vec<(String, f64)> = Vec::new();
    for (d, rows) in transcripts.iter().zip(rows) {
        for (s, r) in d.sentences.iter().zip(masked(rows, &mask)) {
            if r.len() != model.scaler.mean.len() {
                return Err(PipelineError::Config(format!(
                    "model expects {} features, got {}",
                    model.scaler.mean.len(),
                    r.len()
                )));
            }
            out.push((sentence_key(&d.id, s.id), model.ranker.score(&model.scaler.apply(&r))));
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct CqaInputs<'a> {
    pub threads: &'a [CqaThread],
    pub lexicons: &'a LexiconSet,
    pub idf: &'a IdfTable,
    pub in_domain: Option<&'a VectorStore>,
    pub general: Option<&'a VectorStore>,
    pub hq_sentences: Option<&'a [String]>,
    pub discourse: Option<&'a BTreeMap<String, RstNode>>,
    /// Cached search evidence keyed by answer id.
    pub evidence: Option<&'a BTreeMap<String, AnswerEvidence>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmSpec {
    pub c_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub inner_folds: usize,
}

impl Default for SvmSpec {
    fn default() -> Self {
        SvmSpec {
            c_grid: vec![0.1, 1.0, 10.0, 100.0],
            gamma_grid: vec![1e-3, 1e-2, 1e-1],
            inner_folds: 5,
        }
    }
}

/// A labelled answer with its features.
#[derive(Debug, Clone, PartialEq)]
pub struct CqaRow {
    pub thread: usize,
    pub answer: usize,
    pub answer_id: String,
    pub features: Vec<f64>,
    pub label: bool,
}

pub fn cqa_rows(inputs: &CqaInputs, config: &CqaFeatureConfig) -> Vec<CqaRow> {
    let ex = CqaExtractor::new(
        config.clone(),
        CqaResources {
            lexicons: inputs.lexicons,
            idf: inputs.idf,
            in_domain: inputs.in_domain,
            general: inputs.general,
            hq_sentences: inputs.hq_sentences,
            discourse: inputs.discourse,
        },
    );
    let mut rows = Vec::new();
    for (ti, t) in inputs.threads.iter().enumerate() {
        for (ai, a) in t.labeled_answers() {
            let ev = inputs.evidence.and_then(|m| m.get(&a.id));
            rows.push(CqaRow {
                thread: ti,
                answer: ai,
                answer_id: a.id.clone(),
                features: ex.extract(t, ai, ev),
                label: a.factuality == Some(Factuality::Positive),
            });
        }
    }
    rows
}

/// Inputs of the evidence encoder for one answer: the answer as claim, the
/// first two web snippets, and from the first two pages the sentence
/// triplet closest to the answer.
pub fn bilstm_example(
    thread: &CqaThread,
    answer: usize,
    evidence: Option<&AnswerEvidence>,
    idf: &IdfTable,
    store: &VectorStore,
    similarity: Vec<f64>,
    label: bool,
    max_len: usize,
) -> BilstmExample {
    let a = &thread.answers[answer].text;
    let a_tokens = text::tokenize_lower(a);
    let embed = |s: &str| embed_tokens(&text::tokenize_lower(s), store, max_len);
    let mut seqs = vec![embed(a)];
    let web = evidence.map_or(&[][..], |e| e.web.as_slice());
    for k in 0..2 {
        seqs.push(web.get(k).map_or_else(Vec::new, |r| embed(&r.snippet)));
    }
    let pages: Vec<&str> = web.iter().filter_map(|r| r.page_text.as_deref()).take(2).collect();
    for k in 0..2 {
        let best = pages.get(k).and_then(|p| {
            sentence_triplets(p)
                .into_iter()
                .map(|t| (idf.cosine(&a_tokens, &text::tokenize_lower(&t)), t))
                .max_by(|x, y| x.0.total_cmp(&y.0))
                .map(|(_, t)| t)
        });
        seqs.push(best.map_or_else(Vec::new, |t| embed(&t)));
    }
    debug_assert_eq!(seqs.len(), BRANCHES);
    BilstmExample {
        sequences: seqs,
        similarity,
        label,
    }
}

#[derive(Debug, Clone)]
pub struct CqaRun<'a> {
    pub inputs: CqaInputs<'a>,
    pub features: CqaFeatureConfig,
    pub ablate: Vec<String>,
    pub only: Vec<String>,
    pub svm: SvmSpec,
    /// Trains the evidence encoder per fold to fill the embedding block.
    pub encoder: Option<BilstmStackConfig>,
}

/// An answer classifier fitted on labelled rows, with its scaler and, when
/// configured, the evidence encoder that fills the embedding block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqaModel {
    pub label: String,
    pub seed: u64,
    pub mask: Vec<Range<usize>>,
    pub block: Range<usize>,
    pub encoder: Option<BilstmStack>,
    pub scaler: Standardizer,
    pub svm: SvmModel,
}

impl CqaModel {
    fn prepare(&self, features: &[f64], example: Option<&BilstmExample>) -> Vec<f64> {
        let mut x = features.to_vec();
        if let (Some(stack), Some(ex)) = (&self.encoder, example) {
            let emb = stack.embedding_block(&stack.extract_layers(ex));
            x[self.block.clone()].copy_from_slice(&emb);
        }
        zero_ranges(&mut x, &self.mask);
        self.scaler.apply(&x)
    }

    pub fn decision(&self, features: &[f64], example: Option<&BilstmExample>) -> f64 {
        self.svm.decision_function(&self.prepare(features, example))
    }
}

struct CqaPrepared {
    rows: Vec<CqaRow>,
    examples: Option<Vec<BilstmExample>>,
    encoder: Option<BilstmStackConfig>,
    mask: Vec<Range<usize>>,
    block: Range<usize>,
    label: String,
}

fn prepare_cqa(run: &CqaRun) -> Result<CqaPrepared, PipelineError> {
    let rows = cqa_rows(&run.inputs, &run.features);
    if rows.is_empty() {
        return Err(PipelineError::Config("no labelled answers".into()));
    }
    let mask = run.features.selection_mask(&run.ablate, &run.only)?;
    let layout = run.features.layout();
    let block = layout.range("embedding_block").expect("cqa layout");
    let sim_ranges: Vec<Range<usize>> = ["forum_support", "web_support"]
        .iter()
        .filter_map(|g| layout.range(g))
        .collect();
    let encoder = match (&run.encoder, run.inputs.in_domain) {
        (Some(cfg), Some(store)) => {
            let sim_dim: usize = sim_ranges.iter().map(|r| r.len()).sum();
            if cfg.embedding_dim() != block.len() || cfg.input_dim != store.dim() || cfg.similarity_dim != sim_dim {
                return Err(PipelineError::Config(format!(
                    "encoder emits {} values from {}-d tokens and {} similarities; layout needs {}, vectors are {}-d, similarity groups hold {sim_dim}",
                    cfg.embedding_dim(),
                    cfg.input_dim,
                    cfg.similarity_dim,
                    block.len(),
                    store.dim()
                )));
            }
            Some((cfg, store))
        }
        (Some(_), None) => {
            log::warn!("encoder requested without in-domain vectors; embedding block stays zero");
            None
        }
        _ => None,
    };
    let examples: Option<Vec<BilstmExample>> = encoder.map(|(cfg, store)| {
        rows.iter()
            .map(|r| {
                let sim = sim_ranges.iter().flat_map(|g| r.features[g.clone()].to_vec()).collect();
                bilstm_example(
                    &run.inputs.threads[r.thread],
                    r.answer,
                    run.inputs.evidence.and_then(|m| m.get(&r.answer_id)),
                    run.inputs.idf,
                    store,
                    sim,
                    r.label,
                    cfg.max_len,
                )
            })
            .collect()
    });
    let mut label = String::from("svm_rbf");
    if !run.ablate.is_empty() {
        label.push_str(&format!(" ablate={}", run.ablate.join(",")));
    }
    if !run.only.is_empty() {
        label.push_str(&format!(" only={}", run.only.join(",")));
    }
    Ok(CqaPrepared {
        rows,
        examples,
        encoder: encoder.map(|(cfg, _)| cfg.clone()),
        mask,
        block,
        label,
    })
}

fn fit_cqa_on(run: &CqaRun, prep: &CqaPrepared, train: &[usize], seed: u64) -> Result<CqaModel, PipelineError> {
    let encoder = match (&prep.examples, &prep.encoder) {
        (Some(exs), Some(cfg)) => {
            let train_ex: Vec<BilstmExample> = train.iter().map(|&i| exs[i].clone()).collect();
            let mut stack = BilstmStack::new(BilstmStackConfig { seed, ..cfg.clone() })?;
            stack.fit(&train_ex)?;
            Some(stack)
        }
        _ => None,
    };
    let raw: Vec<Vec<f64>> = train
        .iter()
        .map(|&i| {
            let mut x = prep.rows[i].features.clone();
            if let (Some(stack), Some(exs)) = (&encoder, &prep.examples) {
                let emb = stack.embedding_block(&stack.extract_layers(&exs[i]));
                x[prep.block.clone()].copy_from_slice(&emb);
            }
            zero_ranges(&mut x, &prep.mask);
            x
        })
        .collect();
    let refs: Vec<&[f64]> = raw.iter().map(|r| r.as_slice()).collect();
    let scaler = Standardizer::fit(&refs);
    let tx: Vec<Vec<f64>> = raw.iter().map(|r| scaler.apply(r)).collect();
    let ty: Vec<bool> = train.iter().map(|&i| prep.rows[i].label).collect();
    let folds_inner = run.svm.inner_folds.min(ty.len()).max(2);
    let g = grid_search(&tx, &ty, &run.svm.c_grid, &run.svm.gamma_grid, folds_inner, &SvmConfig::default())?;
    Ok(CqaModel {
        label: prep.label.clone(),
        seed,
        mask: prep.mask.clone(),
        block: prep.block.clone(),
        encoder,
        scaler,
        svm: g.model,
    })
}

/// Leave-one-thread-out answer classification; predictions are pooled over
/// folds for each seed.
pub fn cqa_cv(run: &CqaRun, seeds: &[u64]) -> Result<EvalReport, PipelineError> {
    let prep = prepare_cqa(run)?;
    let groups: Vec<String> = prep
        .rows
        .iter()
        .map(|r| run.inputs.threads[r.thread].question.id.clone())
        .collect();
    let folds = group_folds(&groups)?;
    Ok(cross_validate_classification("cqa_factcheck", &prep.label, &folds, seeds, |fold, seed| {
        let model = fit_cqa_on(run, &prep, &fold.train, seed)?;
        let example = |i: usize| prep.examples.as_ref().map(|e| &e[i]);
        let pred = fold
            .test
            .iter()
            .map(|&i| model.decision(&prep.rows[i].features, example(i)) > 0.0)
            .collect();
        let gold = fold.test.iter().map(|&i| prep.rows[i].label).collect();
        Ok::<_, PipelineError>(Predictions::Binary { pred, gold })
    })?)
}

/// Fits the answer classifier on every labelled answer of the run.
pub fn fit_cqa(run: &CqaRun, seed: u64) -> Result<CqaModel, PipelineError> {
    let prep = prepare_cqa(run)?;
    let all: Vec<usize> = (0..prep.rows.len()).collect();
    fit_cqa_on(run, &prep, &all, seed)
}

/// Decision values of `model` for every labelled answer of the run, sorted
/// descending, ties by answer id.
pub fn rank_answers(run: &CqaRun, model: &CqaModel) -> Result<Vec<(String, f64)>, PipelineError> {
    let prep = prepare_cqa(run)?;
    if prep.rows[0].features.len() != model.scaler.mean.len() {
        return Err(PipelineError::Config(format!(
            "model expects {} features, got {}",
            model.scaler.mean.len(),
            prep.rows[0].features.len()
        )));
    }
    let mut out: Vec<(String, f64)> = prep
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let ex = prep.examples.as_ref().map(|e| &e[i]);
            (r.answer_id.clone(), model.decision(&r.features, ex))
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

/// Predicts the training majority for every held-out answer.
pub fn cqa_majority_cv(threads: &[CqaThread]) -> Result<EvalReport, PipelineError> {
    let mut groups = Vec::new();
    let mut labels = Vec::new();
    for t in threads {
        for (_, a) in t.labeled_answers() {
            groups.push(t.question.id.clone());
            labels.push(a.factuality == Some(Factuality::Positive));
        }
    }
    let folds = group_folds(&groups)?;
    Ok(cross_validate_classification("cqa_factcheck", "majority", &folds, &[0], |fold, _| {
        let train: Vec<bool> = fold.train.iter().map(|&i| labels[i]).collect();
        let m = crate::eval::baselines::majority_class(&train);
        Ok::<_, PipelineError>(Predictions::Binary {
            pred: vec![m; fold.test.len()],
            gold: fold.test.iter().map(|&i| labels[i]).collect(),
        })
    })?)
}

/// Three-way question classification with a linear one-vs-rest SVM over
/// TF-IDF bags of words, using `k` round-robin folds.
pub fn question_class_cv(threads: &[CqaThread], c: f64, k: usize, seeds: &[u64]) -> Result<EvalReport, PipelineError> {
    let items: Vec<(String, usize)> = threads
        .iter()
        .filter(|t| !t.question.excluded)
        .filter_map(|t| t.question_class.map(|q| (t.question.text(), q.index())))
        .collect();
    let groups: Vec<String> = (0..items.len()).map(|i| format!("fold{}", i % k.max(2))).collect();
    let folds = group_folds(&groups)?;
    Ok(cross_validate_classification("question_class", "svm_linear_bow", &folds, seeds, |fold, _| {
        let train_q: Vec<String> = fold.train.iter().map(|&i| items[i].0.clone()).collect();
        let vocab = question_vocab(&train_q);
        let x: Vec<Vec<f64>> = train_q.iter().map(|q| question_bow(q, &vocab)).collect();
        let y: Vec<usize> = fold.train.iter().map(|&i| items[i].1).collect();
        let m = OneVsRest::train(
            &x,
            &y,
            3,
            &SvmConfig {
                c,
                kernel: Kernel::Linear,
                ..SvmConfig::default()
            },
        )?;
        let pred = fold.test.iter().map(|&i| m.predict(&question_bow(&items[i].0, &vocab))).collect();
        let gold = fold.test.iter().map(|&i| items[i].1).collect();
        Ok::<_, PipelineError>(Predictions::Multiclass { pred, gold, classes: 3 })
    })?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_zero_variance() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let r: Vec<&[f64]> = rows.iter().map(|v| v.as_slice()).collect();
        let s = Standardizer::fit(&r);
        assert_eq!(s.apply(&[1.0, 5.0]), vec![-1.0, 0.0]);
        assert_eq!(s.apply(&[3.0, 9.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn keys_sort_numerically() {
        assert!(sentence_key("d", 9) < sentence_key("d", 10));
    }
}
