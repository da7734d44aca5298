mod common;

use factcheck_core::corpus::{segment_debate, Source};
use factcheck_core::embeddings::VectorStore;
use factcheck_core::evidence::IdfTable;
use factcheck_core::features::cqa::CqaFeatureConfig;
use factcheck_core::features::debate::DebateFeatureConfig;
use factcheck_core::lexicons::LexiconSet;
use factcheck_core::models::bilstm::BilstmStackConfig;
use factcheck_core::models::ffnn::FfnnConfig;
use factcheck_core::models::multitask::{MultiTaskConfig, Task, VariantKind};
use factcheck_core::pipeline::{
    checkworthy_cv, cqa_cv, fit_checkworthy, fit_cqa, rank_answers, rank_transcripts, cqa_majority_cv, question_class_cv, CheckworthyRun, CqaInputs, CqaRun, DebateInputs,
    RankerSpec, SvmSpec,
};
use factcheck_core::text::tokenize_lower;
use proptest::prelude::*;

fn small_ffnn() -> FfnnConfig {
    FfnnConfig {
        hidden: vec![16],
        epochs: 40,
        batch_size: 64,
        learning_rate: 0.01,
        ..FfnnConfig::default()
    }
}

fn run<'a>(inputs: DebateInputs<'a>, ranker: RankerSpec, target: Task) -> CheckworthyRun<'a> {
    CheckworthyRun {
        inputs,
        features: DebateFeatureConfig::default(),
        ablate: vec![],
        only: vec![],
        ranker,
        target,
    }
}

#[test]
fn checkworthy_rankers_beat_random_on_separable_debates() {
    let debates = common::synthetic_debates(3, 60, 11);
    let lex = LexiconSet::builtin();
    let inputs = DebateInputs {
        debates: &debates,
        lexicons: &lex,
        vectors: None,
        topics: None,
        discourse: None,
        external_claims: &[],
    };
    let seeds = [1, 2];
    let random = checkworthy_cv(&run(inputs, RankerSpec::Random, Task::Any), &seeds).unwrap();
    let tfidf = checkworthy_cv(&run(inputs, RankerSpec::TfidfSvm { c: 1.0 }, Task::Any), &seeds).unwrap();
    let ffnn = checkworthy_cv(&run(inputs, RankerSpec::Ffnn(small_ffnn()), Task::Any), &seeds).unwrap();
    let map = |r: &factcheck_core::eval::EvalReport| r.ranking.as_ref().unwrap().mean.map;
    assert_eq!(random.ranking.as_ref().unwrap().per_fold.len(), 6);
    assert!(map(&tfidf) > map(&random), "{} vs {}", map(&tfidf), map(&random));
    assert!(map(&ffnn) > map(&random), "{} vs {}", map(&ffnn), map(&random));
    assert!(ffnn.label.starts_with("ffnn"));
}

#[test]
fn multitask_ranker_runs_for_a_source_target() {
    let debates = common::synthetic_debates(2, 40, 5);
    let lex = LexiconSet::builtin();
    let inputs = DebateInputs {
        debates: &debates,
        lexicons: &lex,
        vectors: None,
        topics: None,
        discourse: None,
        external_claims: &[],
    };
    let config = MultiTaskConfig {
        shared: 8,
        per_task: 4,
        epochs: 5,
        batch_size: 32,
        ..MultiTaskConfig::default()
    };
    let spec = RankerSpec::MultiTask {
        kind: VariantKind::MultiAny,
        config: config.clone(),
    };
    let r = checkworthy_cv(&run(inputs, spec, Task::Source(Source::CNN)), &[0]).unwrap();
    assert!(r.ranking.unwrap().mean.map.is_finite());

    let bad = RankerSpec::MultiTask {
        kind: VariantKind::Multi,
        config,
    };
    assert!(checkworthy_cv(&run(inputs, bad, Task::Any), &[0]).is_err());
}

#[test]
fn only_list_restricts_groups_and_rejects_unknown_names() {
    let debates = common::synthetic_debates(2, 30, 3);
    let lex = LexiconSet::builtin();
    let inputs = DebateInputs {
        debates: &debates,
        lexicons: &lex,
        vectors: None,
        topics: None,
        discourse: None,
        external_claims: &[],
    };
    let mut r = run(inputs, RankerSpec::Ffnn(small_ffnn()), Task::Any);
    r.only = vec!["length".into()];
    let report = checkworthy_cv(&r, &[0]).unwrap();
    assert!(report.label.contains("only=length"));
    r.only = vec!["no_such_group".into()];
    assert!(checkworthy_cv(&r, &[0]).is_err());
}

fn tiny_store() -> VectorStore {
    let words = common::synthetic_threads(6, 0)
        .iter()
        .flat_map(|t| t.answers.iter().flat_map(|a| tokenize_lower(&a.text)))
        .collect::<std::collections::BTreeSet<_>>();
    VectorStore::from_pairs(words.into_iter().enumerate().map(|(i, w)| {
        let v = (0..6).map(|k| ((i * 7 + k * 3) % 11) as f64 / 11.0 - 0.5).collect();
        (w, v)
    }))
    .unwrap()
}

#[test]
fn cqa_classification_and_baselines() {
    let threads = common::synthetic_threads(24, 9);
    let lex = LexiconSet::builtin();
    let idf = IdfTable::from_documents(threads.iter().flat_map(|t| t.answers.iter().map(|a| tokenize_lower(&a.text))));
    let inputs = CqaInputs {
        threads: &threads,
        lexicons: &lex,
        idf: &idf,
        in_domain: None,
        general: None,
        hq_sentences: None,
        discourse: None,
        evidence: None,
    };
    let svm = SvmSpec {
        c_grid: vec![1.0, 10.0],
        gamma_grid: vec![0.01],
        inner_folds: 3,
    };
    let report = cqa_cv(
        &CqaRun {
            inputs,
            features: CqaFeatureConfig::default(),
            ablate: vec![],
            only: vec!["credibility".into(), "linguistic".into()],
            svm,
            encoder: None,
        },
        &[0],
    )
    .unwrap();
    let acc = report.classification.unwrap().mean.accuracy;
    let majority = cqa_majority_cv(&threads).unwrap().classification.unwrap().mean.accuracy;
    assert!(acc > majority, "{acc} vs {majority}");
    assert!(acc > 0.9, "{acc}");

    let q = question_class_cv(&threads, 1.0, 4, &[0]).unwrap();
    assert!(q.classification.unwrap().mean.accuracy > 0.9);
}

#[test]
fn cqa_encoder_fills_embedding_block() {
    let threads = common::synthetic_threads(9, 4);
    let lex = LexiconSet::builtin();
    let idf = IdfTable::from_documents(threads.iter().flat_map(|t| t.answers.iter().map(|a| tokenize_lower(&a.text))));
    let store = tiny_store();
    let enc = BilstmStackConfig {
        input_dim: 6,
        units: 2,
        joint: 4,
        similarity_dim: 144,
        epochs: 2,
        batch_size: 8,
        ..BilstmStackConfig::default()
    };
    let features = CqaFeatureConfig {
        embedding_block: enc.embedding_dim(),
        ..CqaFeatureConfig::default()
    };
    let inputs = CqaInputs {
        threads: &threads,
        lexicons: &lex,
        idf: &idf,
        in_domain: Some(&store),
        general: None,
        hq_sentences: None,
        discourse: None,
        evidence: None,
    };
    let svm = SvmSpec {
        c_grid: vec![1.0],
        gamma_grid: vec![0.1],
        inner_folds: 2,
    };
    let mut cqa = CqaRun {
        inputs,
        features,
        ablate: vec![],
        only: vec![],
        svm,
        encoder: Some(enc.clone()),
    };
    let r = cqa_cv(&cqa, &[3]).unwrap();
    assert!(r.classification.unwrap().mean.accuracy.is_finite());

    cqa.encoder = Some(BilstmStackConfig { units: 3, ..enc });
    assert!(cqa_cv(&cqa, &[3]).is_err());
}

#[test]
fn fitted_models_rank_in_descending_order() {
    let debates = common::synthetic_debates(2, 50, 21);
    let fresh = common::synthetic_debates(1, 30, 22);
    let lex = LexiconSet::builtin();
    let inputs = DebateInputs {
        debates: &debates,
        lexicons: &lex,
        vectors: None,
        topics: None,
        discourse: None,
        external_claims: &[],
    };
    let r = run(inputs, RankerSpec::Ffnn(small_ffnn()), Task::Any);
    let model = fit_checkworthy(&r, 4).unwrap();
    let ranked = rank_transcripts(&r, &model, &fresh).unwrap();
    assert_eq!(ranked.len(), 30);
    assert!(ranked.windows(2).all(|w| w[0].1 >= w[1].1));
    assert_eq!(model, fit_checkworthy(&r, 4).unwrap());
    assert!(fit_checkworthy(&run(inputs, RankerSpec::Random, Task::Any), 0).is_err());

    let threads = common::synthetic_threads(12, 2);
    let idf = IdfTable::from_documents(threads.iter().flat_map(|t| t.answers.iter().map(|a| tokenize_lower(&a.text))));
    let cqa = CqaRun {
        inputs: CqaInputs {
            threads: &threads,
            lexicons: &lex,
            idf: &idf,
            in_domain: None,
            general: None,
            hq_sentences: None,
            discourse: None,
            evidence: None,
        },
        features: CqaFeatureConfig::default(),
        ablate: vec!["discourse".into()],
        only: vec![],
        svm: SvmSpec {
            c_grid: vec![1.0],
            gamma_grid: vec![0.01],
            inner_folds: 2,
        },
        encoder: None,
    };
    let m = fit_cqa(&cqa, 0).unwrap();
    let answers = rank_answers(&cqa, &m).unwrap();
    assert_eq!(answers.len(), 16);
    assert!(answers.windows(2).all(|w| w[0].1 >= w[1].1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn segments_concatenate_to_the_debate(seed in 0u64..1000, n in 1usize..80) {
        let d = &common::synthetic_debates(1, n, seed)[0];
        let segs = segment_debate(d);
        let ids: Vec<u64> = segs.iter().flat_map(|s| s.sentence_ids.clone()).collect();
        let expect: Vec<u64> = d.sentences.iter().map(|s| s.id).collect();
        prop_assert_eq!(ids, expect);
        for w in segs.windows(2) {
            prop_assert_ne!(&w[0].speaker, &w[1].speaker);
        }
    }
}
