//! Small synthetic debates and forum threads shared by the integration tests.
#![allow(dead_code)]

use std::io::Write;

use factcheck_core::corpus::{
    load_cqa, load_debates, Answer, CqaThread, Debate, Factuality, FineLabel, Goodness, Question, QuestionClass,
    Source,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const CLAIMS: &[&str] = &[
    "We lost {n} thousand manufacturing jobs in Ohio last year",
    "Taxes went up {n} percent under her plan",
    "The national debt doubled to {n} trillion dollars",
    "Crime rose {n} percent in Chicago since 2014",
    "She voted for the war in Iraq {n} times",
    "Our trade deficit with China is {n} billion dollars",
    "He paid no federal income tax for {n} years",
    "Unemployment fell to {n} percent in the last quarter",
];

const FILLER: &[&str] = &[
    "Thank you very much",
    "Let me say this to the audience",
    "I think we should talk about it",
    "Well that is a good question",
    "We are going to make this country great",
    "I really appreciate being here tonight",
    "Everybody knows what is going on",
    "Look at what happened",
    "I want to thank the people of this state",
    "We have to bring people together",
];

const MODERATOR: &[&str] = &[
    "Please respond in two minutes",
    "We move on to the next topic",
    "Your time is up",
];

/// Writes `n_debates` synthetic transcripts to a JSONL file and loads them.
/// Factual claims are annotated by several sources; filler rarely is.
pub fn synthetic_debates(n_debates: usize, per_debate: usize, seed: u64) -> Vec<Debate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = tempfile::NamedTempFile::new().unwrap();
    for d in 0..n_debates {
        let id = format!("debate{d}");
        writeln!(f, "{}", json!({"debate_id": id, "moderators": ["HOLT"]})).unwrap();
        let mut speaker = "TRUMP";
        for s in 0..per_debate {
            if rng.gen_bool(0.3) {
                speaker = match speaker {
                    "TRUMP" => "CLINTON",
                    "CLINTON" => "HOLT",
                    _ => "TRUMP",
                };
            }
            let moderator = speaker == "HOLT";
            let claim = !moderator && rng.gen_bool(0.3);
            let text = if moderator {
                MODERATOR[rng.gen_range(0..MODERATOR.len())].to_string()
            } else if claim {
                CLAIMS[rng.gen_range(0..CLAIMS.len())].replace("{n}", &rng.gen_range(2..99).to_string())
            } else {
                FILLER[rng.gen_range(0..FILLER.len())].to_string()
            };
            let mut ann = serde_json::Map::new();
            for src in Source::ALL {
                let p = if claim { 0.6 } else if moderator { 0.0 } else { 0.03 };
                ann.insert(src.code().to_string(), json!(rng.gen_bool(p) as u8));
            }
            let rec = json!({
                "debate_id": id,
                "sentence_id": s as u64 + 1,
                "speaker": speaker,
                "is_moderator": moderator,
                "text": format!("{text}."),
                "annotations": ann,
            });
            writeln!(f, "{rec}").unwrap();
        }
    }
    f.flush().unwrap();
    load_debates(f.path()).unwrap()
}

const FACT_Q: &[&str] = &[
    "How much does a residence permit cost in Doha",
    "What documents are needed for a family visa",
    "Is it legal to drink alcohol in public here",
    "Which bank gives the best rate for car loans",
];
const OPINION_Q: &[&str] = &[
    "What do you think about living in Qatar",
    "Which mall do you like best",
    "Should I accept this job offer",
];
const SOCIAL_Q: &[&str] = &["Anyone up for football this weekend", "Hello everyone how are you doing"];

const TRUE_A: &[&str] = &[
    "The fee is 500 riyals per year according to the ministry website",
    "You need an attested degree certificate and a valid passport",
    "It is prohibited by law and you can be fined",
];
const FALSE_A: &[&str] = &[
    "I guess it is free lol!!!",
    "No idea man maybe ask someone???",
    "Nobody needs any papers just go",
];

/// Synthetic forum threads round-tripped through the JSONL loader.
pub fn synthetic_threads(n: usize, seed: u64) -> Vec<CqaThread> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut threads = Vec::new();
    for t in 0..n {
        let class = QuestionClass::ALL[t % 3];
        let pool = match class {
            QuestionClass::Factual => FACT_Q,
            QuestionClass::Opinion => OPINION_Q,
            QuestionClass::Socializing => SOCIAL_Q,
        };
        let q = pool[rng.gen_range(0..pool.len())];
        let mut answers = Vec::new();
        for a in 0..4 {
            let good = rng.gen_bool(0.5);
            let text = if good {
                TRUE_A[rng.gen_range(0..TRUE_A.len())]
            } else {
                FALSE_A[rng.gen_range(0..FALSE_A.len())]
            };
            let labeled = class == QuestionClass::Factual;
            answers.push(Answer {
                id: format!("Q{t}_C{a}"),
                text: text.to_string(),
                user: format!("user{}", rng.gen_range(0..5)),
                goodness: Goodness::Good,
                factuality: labeled.then_some(if good { Factuality::Positive } else { Factuality::Negative }),
                fine_label: labeled.then_some(if good { FineLabel::True } else { FineLabel::False }),
            });
        }
        threads.push(CqaThread {
            question: Question {
                id: format!("Q{t}"),
                subject: q.to_string(),
                body: format!("{q}?"),
                category: "Visas and Permits".into(),
                datetime: "2016-01-01 10:00:00".into(),
                user: "asker".into(),
                excluded: false,
            },
            question_class: Some(class),
            answers,
        });
    }
    let f = tempfile::NamedTempFile::new().unwrap();
    factcheck_core::corpus::save_cqa(f.path(), &threads).unwrap();
    load_cqa(f.path()).unwrap()
}
