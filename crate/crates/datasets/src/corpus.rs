//! Seeded corpus generation with optional label balancing.
//!
//! Candidate instances are drawn from a seed stream derived from the corpus
//! seed. With balancing on, candidates are accepted in stream order while
//! their label is below its quota of `ceil(count / labels)`, so the corpus
//! depends only on the configuration and never on the number of threads.

use std::collections::BTreeMap;

use pencil_core::{replay, Limits, PencilRun, Rule, TokenSeq};
use pencil_tasks::{dpll_trace, gen_puzzle, gen_qbf, gen_sat, puzzle_trace, qbf_trace, Category};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::split::{export_cot, split_scaffolded, Example};
use crate::DatasetError;

/// A task family and its size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskSpec {
    /// Random 3-SAT over `n` variables.
    Sat { n: usize },
    /// Random QBF over `n` variables.
    Qbf { n: usize },
    /// Einstein puzzle with `houses` houses and `categories` categories.
    Puzzle { houses: usize, categories: usize },
}

impl TaskSpec {
    /// Short task name.
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Sat { .. } => "sat",
            TaskSpec::Qbf { .. } => "qbf",
            TaskSpec::Puzzle { .. } => "puzzle",
        }
    }

    /// Every answer label an instance can carry.
    pub fn labels(&self) -> Vec<String> {
        match self {
            TaskSpec::Sat { .. } | TaskSpec::Qbf { .. } => vec!["False".into(), "True".into()],
            TaskSpec::Puzzle { houses, .. } => {
                Category::Nationality.values(*houses).into_iter().map(String::from).collect()
            }
        }
    }

    /// The instance drawn from `seed`, with its scaffold replayed under the
    /// full rule. The id is 0 until the corpus assigns one.
    pub fn instance(&self, seed: u64) -> Result<Instance, DatasetError> {
        let task = |source| DatasetError::Task { seed, source };
        let (label, prompt, scaffold) = match *self {
            TaskSpec::Sat { n } => {
                let t = dpll_trace(&gen_sat(n, seed).map_err(task)?);
                (bool_label(t.answer), t.prompt, t.scaffold)
            }
            TaskSpec::Qbf { n } => {
                let t = qbf_trace(&gen_qbf(n, seed).map_err(task)?);
                (bool_label(t.answer), t.prompt, t.scaffold)
            }
            TaskSpec::Puzzle { houses, categories } => {
                let t = puzzle_trace(&gen_puzzle(houses, categories, seed).map_err(task)?).map_err(task)?;
                (t.answer.to_string(), t.prompt, t.scaffold)
            }
        };
        let run = replay(&scaffold, prompt.len(), Rule::Full, Limits::unbounded())
            .map_err(|source| DatasetError::Replay { seed, source })?;
        Ok(Instance { id: 0, seed, label, prompt, scaffold, run })
    }
}

fn bool_label(b: bool) -> String {
    if b { "True" } else { "False" }.to_string()
}

/// A generated instance with its scaffold and PENCIL run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    /// Index within the corpus.
    pub id: u64,
    /// Seed the instance was drawn from.
    pub seed: u64,
    /// The solver's answer.
    pub label: String,
    /// Prompt tokens.
    pub prompt: TokenSeq,
    /// Prompt followed by the whole generated trace.
    pub scaffold: TokenSeq,
    /// The run replayed from the scaffold.
    pub run: PencilRun,
}

impl Instance {
    /// PENCIL training examples, one per iteration.
    pub fn examples(&self) -> Vec<Example> {
        split_scaffolded(&self.run, &self.prompt)
    }

    /// The chain-of-thought training example.
    pub fn cot_example(&self) -> Example {
        export_cot(&self.scaffold, &self.prompt)
    }
}

/// What to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusConfig {
    /// Task family and size.
    pub task: TaskSpec,
    /// Number of instances.
    pub count: usize,
    /// Corpus seed.
    pub seed: u64,
    /// Balance answer labels by rejection sampling.
    pub balance: bool,
}

/// The first `count` candidate seeds of corpus seed `seed`.
pub fn candidate_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.next_u64()).collect()
}

/// Candidates tried per requested instance before balancing gives up.
const MAX_CANDIDATES_PER_INSTANCE: usize = 200;

/// Generates the corpus of `config` on `jobs` threads (0 picks one per
/// core). Instances come back in id order.
pub fn generate_corpus(config: &CorpusConfig, jobs: usize) -> Result<Vec<Instance>, DatasetError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool");
    pool.install(|| generate(config))
}

fn generate(config: &CorpusConfig) -> Result<Vec<Instance>, DatasetError> {
    let draw = |seeds: &[u64]| -> Result<Vec<Instance>, DatasetError> {
        seeds.par_iter().map(|&s| config.task.instance(s)).collect()
    };
    if !config.balance {
        return Ok(number(draw(&candidate_seeds(config.seed, config.count))?));
    }
    let labels = config.task.labels();
    let quota = config.count.div_ceil(labels.len());
    let max = config.count.saturating_mul(MAX_CANDIDATES_PER_INSTANCE).max(1000);
    let seeds = candidate_seeds(config.seed, max);
    let mut counts: BTreeMap<&str, usize> = labels.iter().map(|l| (l.as_str(), 0)).collect();
    let mut out = Vec::with_capacity(config.count);
    let batch = config.count.max(16);
    for chunk in seeds.chunks(batch) {
        for inst in draw(chunk)? {
            if out.len() == config.count {
                break;
            }
            let c = counts.get_mut(inst.label.as_str()).expect("labels are listed by the task");
            if *c < quota {
                *c += 1;
                out.push(inst);
            }
        }
        if out.len() == config.count {
            return Ok(number(out));
        }
    }
    let (label, found) = counts.into_iter().min_by_key(|&(_, c)| c).expect("at least one label");
    Err(DatasetError::Unbalanced { label: label.to_string(), found, wanted: quota, tried: max })
}

fn number(mut v: Vec<Instance>) -> Vec<Instance> {
    for (i, inst) in v.iter_mut().enumerate() {
        inst.id = i as u64;
    }
    v
}
