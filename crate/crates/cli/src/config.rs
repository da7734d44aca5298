//! Experiment configuration: a TOML file, command-line overrides on top.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use factcheck_core::evidence::SourceClassifier;
use factcheck_core::features::cqa::CqaFeatureConfig;
use factcheck_core::features::debate::DebateFeatureConfig;
use factcheck_core::models::bilstm::BilstmStackConfig;
use factcheck_core::models::ffnn::FfnnConfig;
use factcheck_core::models::multitask::{MultiTaskConfig, Task, VariantKind};
use factcheck_core::pipeline::{RankerSpec, SvmSpec};
use factcheck_core::resources::ResourcePaths;
use serde::{Deserialize, Serialize};

use crate::RunArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    #[default]
    #[value(name = "checkworthy")]
    Checkworthy,
    #[value(name = "cqa_factcheck")]
    CqaFactcheck,
    #[value(name = "question_class")]
    QuestionClass,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Checkworthy => "checkworthy",
            TaskKind::CqaFactcheck => "cqa_factcheck",
            TaskKind::QuestionClass => "question_class",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankerKind {
    #[default]
    Ffnn,
    Multitask,
    TfidfSvm,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    #[default]
    Svm,
    Majority,
}

/// An external search program; see `CommandClient`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub name: String,
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Evidence cache directory; `<out>/cache` when unset.
    pub cache: Option<PathBuf>,
    pub web: Vec<EngineConfig>,
    pub forum: Option<EngineConfig>,
    /// Results wanted per query before terms are dropped.
    pub results: usize,
    pub classifier: SourceClassifier,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            cache: None,
            web: Vec::new(),
            forum: None,
            results: 10,
            classifier: SourceClassifier::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    /// Check-worthiness ranker.
    pub ranker: RankerKind,
    /// Multi-task variant; required with the multitask ranker.
    pub variant: Option<VariantKind>,
    /// `ANY` or a source code such as `CNN`.
    pub target: String,
    /// Answer classifier for `cqa_factcheck`.
    pub classifier: ClassifierKind,
    pub ablate: Vec<String>,
    pub only: Vec<String>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    /// Cost of the bag-of-words baseline ranker.
    pub tfidf_c: f64,
    /// Cost and fold count of question classification.
    pub question_c: f64,
    pub question_folds: usize,
    pub resources: ResourcePaths,
    pub ffnn: FfnnConfig,
    pub multitask: MultiTaskConfig,
    pub debate_features: DebateFeatureConfig,
    pub cqa_features: CqaFeatureConfig,
    pub svm: SvmSpec,
    /// Evidence encoder filling the answer embedding block.
    pub encoder: Option<BilstmStackConfig>,
    pub search: SearchConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: TaskKind::Checkworthy,
            ranker: RankerKind::Ffnn,
            variant: None,
            target: "ANY".into(),
            classifier: ClassifierKind::Svm,
            ablate: Vec::new(),
            only: Vec::new(),
            seeds: vec![0],
            out: PathBuf::from("out"),
            tfidf_c: 1.0,
            question_c: 1.0,
            question_folds: 10,
            resources: ResourcePaths::default(),
            ffnn: FfnnConfig::default(),
            multitask: MultiTaskConfig::default(),
            debate_features: DebateFeatureConfig::default(),
            cqa_features: CqaFeatureConfig::default(),
            svm: SvmSpec::default(),
            encoder: None,
            search: SearchConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Reads a TOML file; relative paths are taken relative to its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&raw).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        self.resources = self.resources.resolved(base);
        if self.out.is_relative() {
            self.out = base.join(&self.out);
        }
        if let Some(c) = &self.search.cache {
            if c.is_relative() {
                self.search.cache = Some(base.join(c));
            }
        }
    }

    /// Applies command-line flags on top of the file values.
    pub fn apply(&mut self, args: &RunArgs) -> Result<()> {
        if let Some(dir) = &args.data {
            let found = ResourcePaths::in_dir(dir);
            if found.entries().is_empty() {
                bail!("no known resource files under {}", dir.display());
            }
            self.resources = found;
        }
        if let Some(t) = args.task {
            self.task = t;
        }
        if let Some(s) = args.seed {
            self.seeds = vec![s];
        }
        if let Some(s) = &args.seeds {
            self.seeds = s.clone();
        }
        if let Some(a) = &args.ablate {
            self.ablate = a.clone();
        }
        if let Some(o) = &args.only {
            self.only = o.clone();
        }
        if let Some(v) = &args.variant {
            self.variant = Some(VariantKind::parse(v)?);
            self.ranker = RankerKind::Multitask;
        }
        if let Some(t) = &args.target_source {
            self.target = t.clone();
        }
        if let Some(o) = &args.out {
            self.out = o.clone();
        }
        Ok(())
    }

    /// Checks everything that can be checked without reading resources.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        self.target_task()?;
        match self.task {
            TaskKind::Checkworthy => {
                self.debate_features
                    .selection_mask(&self.ablate, &self.only)
                    .context("feature groups")?;
                self.ranker_spec()?;
            }
            TaskKind::CqaFactcheck => {
                self.cqa_features
                    .selection_mask(&self.ablate, &self.only)
                    .context("feature groups")?;
            }
            TaskKind::QuestionClass => {
                if !self.ablate.is_empty() || !self.only.is_empty() {
                    bail!("question_class has no feature groups to ablate");
                }
                if self.question_folds < 2 {
                    bail!("question_folds must be at least 2");
                }
            }
        }
        Ok(())
    }

    pub fn target_task(&self) -> Result<Task> {
        Task::parse(&self.target).with_context(|| format!("unknown target source {:?}", self.target))
    }

    pub fn ranker_spec(&self) -> Result<RankerSpec> {
        Ok(match self.ranker {
            RankerKind::Ffnn => RankerSpec::Ffnn(self.ffnn.clone()),
            RankerKind::Multitask => {
                let Some(kind) = self.variant else {
                    bail!("the multitask ranker needs a variant (singleton, multi, multi+any, any, singleton+any)");
                };
                if self.target_task()? == Task::Any && kind != VariantKind::Any {
                    bail!("variant {} needs --target-source", kind.name());
                }
                RankerSpec::MultiTask {
                    kind,
                    config: self.multitask.clone(),
                }
            }
            RankerKind::TfidfSvm => RankerSpec::TfidfSvm { c: self.tfidf_c },
            RankerKind::Random => RankerSpec::Random,
        })
    }

    /// Resources the task cannot run without.
    pub fn required_resources(&self) -> Vec<(&'static str, bool)> {
        match self.task {
            TaskKind::Checkworthy => vec![("debates", self.resources.debates.is_some())],
            TaskKind::CqaFactcheck | TaskKind::QuestionClass => vec![("cqa", self.resources.cqa.is_some())],
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.search.cache.clone().unwrap_or_else(|| self.out.join("cache"))
    }
}
