//! Dataset files.
//!
//! Examples are stored as JSON Lines: one object per line with the fields
//! `tokens` (ids), `loss_start`, `instance_id` and `iteration`, in that
//! order, UTF-8 with LF endings. The vocabulary file lists one surface form
//! per line, the id being the line number. The statistics file is a CSV
//! with one row per instance under [`STATS_HEADER`], preceded by a `#`
//! comment giving the cost unit.

use std::fmt::Write as _;
use std::path::Path;

use pencil_core::{build_vocab, Vocab};

use crate::corpus::Instance;
use crate::flops::{cot_flops, flops};
use crate::split::TrainingExample;
use crate::DatasetError;

/// Which training sequences to export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// One example per PENCIL iteration.
    Pencil,
    /// One example per instance holding the whole scaffold.
    Cot,
}

/// Vocabulary of every scaffold of `instances`, in instance order.
pub fn corpus_vocab(instances: &[Instance]) -> Result<Vocab, DatasetError> {
    let seqs: Vec<_> = instances.iter().map(|i| i.scaffold.clone()).collect();
    Ok(build_vocab(&seqs)?)
}

/// Encoded training examples of `instances` in instance then iteration
/// order.
pub fn training_examples(
    instances: &[Instance],
    vocab: &Vocab,
    format: Format,
) -> Result<Vec<TrainingExample>, DatasetError> {
    let mut out = Vec::new();
    for inst in instances {
        match format {
            Format::Pencil => {
                for ex in inst.examples() {
                    out.push(ex.encode(vocab, inst.id)?);
                }
            }
            Format::Cot => out.push(inst.cot_example().encode(vocab, inst.id)?),
        }
    }
    Ok(out)
}

/// The JSON Lines text of `examples`.
pub fn to_jsonl_string(examples: &[TrainingExample]) -> String {
    let mut out = String::new();
    for ex in examples {
        out.push_str(&serde_json::to_string(ex).expect("examples serialize"));
        out.push('\n');
    }
    out
}

/// Parses JSON Lines text, checking that each loss start lies inside its
/// sequence. `path` only labels errors.
pub fn from_jsonl_str(text: &str, path: &Path) -> Result<Vec<TrainingExample>, DatasetError> {
    let bad = |line: usize, reason: String| DatasetError::Json { path: path.to_path_buf(), line, reason };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ex: TrainingExample = serde_json::from_str(line).map_err(|e| bad(i + 1, e.to_string()))?;
        if ex.loss_start == 0 || ex.loss_start >= ex.tokens.len() {
            return Err(bad(i + 1, format!("loss_start {} outside 1..{}", ex.loss_start, ex.tokens.len())));
        }
        out.push(ex);
    }
    Ok(out)
}

fn write(path: &Path, text: &str) -> Result<(), DatasetError> {
    std::fs::write(path, text).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })
}

fn read(path: &Path) -> Result<String, DatasetError> {
    std::fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })
}

/// Writes `examples` as JSON Lines.
pub fn write_jsonl(examples: &[TrainingExample], path: &Path) -> Result<(), DatasetError> {
    write(path, &to_jsonl_string(examples))
}

/// Reads a JSON Lines file.
pub fn read_jsonl(path: &Path) -> Result<Vec<TrainingExample>, DatasetError> {
    from_jsonl_str(&read(path)?, path)
}

/// Writes the vocabulary file.
pub fn write_vocab(vocab: &Vocab, path: &Path) -> Result<(), DatasetError> {
    write(path, &vocab.to_file_string())
}

/// Reads a vocabulary file.
pub fn read_vocab(path: &Path) -> Result<Vocab, DatasetError> {
    Ok(Vocab::from_file_str(&read(path)?)?)
}

/// Column names of the statistics file.
pub const STATS_HEADER: [&str; 13] = [
    "instance_id",
    "seed",
    "label",
    "prompt_len",
    "scaffold_len",
    "max_context",
    "reductions",
    "generated",
    "examples",
    "generation_term",
    "reduction_term",
    "pencil_flops",
    "cot_flops",
];

const STATS_NOTE: &str = "# costs in attention units: generating or recomputing a token at context length L counts 2L";

/// The statistics CSV of `instances`.
pub fn stats_csv_string(instances: &[Instance]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(STATS_HEADER).expect("in-memory write");
    for inst in instances {
        let f = flops(&inst.run);
        let cot = cot_flops(inst.prompt.len(), inst.scaffold.len());
        let row = [
            inst.id.to_string(),
            inst.seed.to_string(),
            inst.label.clone(),
            inst.prompt.len().to_string(),
            inst.scaffold.len().to_string(),
            inst.run.max_context.to_string(),
            inst.run.reductions.to_string(),
            inst.run.total_generated.to_string(),
            inst.run.iterations.len().to_string(),
            f.generation_term.to_string(),
            f.reduction_term.to_string(),
            f.total.to_string(),
            cot.total.to_string(),
        ];
        w.write_record(&row).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("fields are UTF-8");
    let mut out = String::new();
    let _ = writeln!(out, "{STATS_NOTE}");
    out.push_str(&body);
    out
}

/// Writes the statistics CSV.
pub fn write_stats_csv(instances: &[Instance], path: &Path) -> Result<(), DatasetError> {
    write(path, &stats_csv_string(instances))
}
