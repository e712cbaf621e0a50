//! Corpus-level statistics.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::Instance;
use crate::flops::{cot_flops, flops};

/// Aggregates over a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CorpusStats {
    /// Number of instances.
    pub instances: usize,
    /// Longest live context of any PENCIL run.
    pub max_len_with_reduction: usize,
    /// Longest scaffold, the context a chain-of-thought run reaches.
    pub max_len_without_reduction: usize,
    /// Generated tokens over all runs.
    pub total_generated: usize,
    /// Reductions over all runs.
    pub total_reductions: usize,
    /// PENCIL training examples, one per iteration.
    pub total_examples: usize,
    /// Attention cost of all PENCIL runs.
    pub pencil_flops: u64,
    /// Attention cost of generating all scaffolds without reduction.
    pub cot_flops: u64,
    /// Instances per answer label.
    pub label_balance: BTreeMap<String, usize>,
}

impl CorpusStats {
    /// `max_len_without_reduction / max_len_with_reduction`, or 0 for an
    /// empty corpus.
    pub fn space_ratio(&self) -> f64 {
        if self.max_len_with_reduction == 0 {
            return 0.0;
        }
        self.max_len_without_reduction as f64 / self.max_len_with_reduction as f64
    }
}

/// Statistics of `instances`.
pub fn corpus_stats(instances: &[Instance]) -> CorpusStats {
    let mut s = CorpusStats { instances: instances.len(), ..CorpusStats::default() };
    for inst in instances {
        s.max_len_with_reduction = s.max_len_with_reduction.max(inst.run.max_context);
        s.max_len_without_reduction = s.max_len_without_reduction.max(inst.scaffold.len());
        s.total_generated += inst.run.total_generated;
        s.total_reductions += inst.run.reductions;
        s.total_examples += inst.run.iterations.len();
        s.pencil_flops += flops(&inst.run).total;
        s.cot_flops += cot_flops(inst.prompt.len(), inst.scaffold.len()).total;
        *s.label_balance.entry(inst.label.clone()).or_default() += 1;
    }
    s
}
