//! Corpus generation, statistics and file round trips.

use std::path::Path;

use pencil_core::{replay, Limits, Rule, Token, TokenSeq};
use pencil_datasets::{
    corpus_stats, corpus_vocab, from_jsonl_str, generate_corpus, read_jsonl, read_vocab, stats_csv_string,
    to_jsonl_string, training_examples, write_jsonl, write_stats_csv, write_vocab, CorpusConfig, DatasetError, Format,
    Instance, TaskSpec, STATS_HEADER,
};

fn corpus(task: TaskSpec, count: usize, seed: u64, balance: bool) -> Vec<Instance> {
    generate_corpus(&CorpusConfig { task, count, seed, balance }, 1).unwrap()
}

#[test]
fn a_run_without_reductions_has_equal_maxima() {
    let prompt: TokenSeq = vec![Token::word("x")];
    let mut scaffold = prompt.clone();
    scaffold.extend([Token::word("y"), Token::EndOfText]);
    let run = replay(&scaffold, 1, Rule::Full, Limits::unbounded()).unwrap();
    let inst = Instance { id: 0, seed: 0, label: "y".into(), prompt, scaffold: scaffold.clone(), run };
    let s = corpus_stats(&[inst]);
    assert_eq!(s.max_len_with_reduction, scaffold.len());
    assert_eq!(s.max_len_without_reduction, scaffold.len());
    assert_eq!(s.total_reductions, 0);
    assert_eq!(s.pencil_flops, s.cot_flops);
}

#[test]
fn reduction_shrinks_qbf_and_sat_contexts_at_ten_variables() {
    let qbf = corpus_stats(&corpus(TaskSpec::Qbf { n: 10 }, 20, 10, false));
    assert!(qbf.space_ratio() >= 20.0, "QBF: {} vs {}", qbf.max_len_without_reduction, qbf.max_len_with_reduction);
    let sat = corpus_stats(&corpus(TaskSpec::Sat { n: 10 }, 20, 10, false));
    assert!(sat.space_ratio() >= 3.0, "SAT: {} vs {}", sat.max_len_without_reduction, sat.max_len_with_reduction);
}

#[test]
fn balanced_corpora_have_equal_label_counts() {
    let insts = corpus(TaskSpec::Sat { n: 8 }, 30, 4, true);
    let s = corpus_stats(&insts);
    assert_eq!(s.label_balance.get("True"), Some(&15));
    assert_eq!(s.label_balance.get("False"), Some(&15));
    assert!(insts.iter().enumerate().all(|(i, inst)| inst.id == i as u64));

    let puzzles = corpus(TaskSpec::Puzzle { houses: 3, categories: 3 }, 6, 2, true);
    let s = corpus_stats(&puzzles);
    assert_eq!(s.label_balance.len(), 3);
    assert!(s.label_balance.values().all(|&c| c == 2));
}

#[test]
fn an_empty_corpus_is_empty() {
    let config = CorpusConfig { task: TaskSpec::Sat { n: 3 }, count: 0, seed: 1, balance: true };
    assert!(generate_corpus(&config, 1).unwrap().is_empty());
    assert_eq!(corpus_stats(&[]).space_ratio(), 0.0);
}

#[test]
fn generation_does_not_depend_on_the_thread_count() {
    let config = CorpusConfig { task: TaskSpec::Qbf { n: 5 }, count: 12, seed: 9, balance: true };
    assert_eq!(generate_corpus(&config, 1).unwrap(), generate_corpus(&config, 3).unwrap());
}

fn export_all(insts: &[Instance], dir: &Path) -> Vec<Vec<u8>> {
    let vocab = corpus_vocab(insts).unwrap();
    write_vocab(&vocab, &dir.join("vocab.txt")).unwrap();
    let pencil = training_examples(insts, &vocab, Format::Pencil).unwrap();
    write_jsonl(&pencil, &dir.join("pencil.jsonl")).unwrap();
    let cot = training_examples(insts, &vocab, Format::Cot).unwrap();
    write_jsonl(&cot, &dir.join("cot.jsonl")).unwrap();
    write_stats_csv(insts, &dir.join("stats.csv")).unwrap();
    ["vocab.txt", "pencil.jsonl", "cot.jsonl", "stats.csv"]
        .iter()
        .map(|f| std::fs::read(dir.join(f)).unwrap())
        .collect()
}

#[test]
fn exports_reload_identically_and_are_byte_stable() {
    let tasks =
        [(TaskSpec::Sat { n: 5 }, 8), (TaskSpec::Qbf { n: 4 }, 8), (TaskSpec::Puzzle { houses: 3, categories: 3 }, 3)];
    for (task, count) in tasks {
        let insts = corpus(task, count, 21, false);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let first = export_all(&insts, a.path());
        let again = corpus(task, count, 21, false);
        assert_eq!(first, export_all(&again, b.path()), "{task:?}");

        let vocab = read_vocab(&a.path().join("vocab.txt")).unwrap();
        assert_eq!(vocab, corpus_vocab(&insts).unwrap());
        let pencil = read_jsonl(&a.path().join("pencil.jsonl")).unwrap();
        assert_eq!(pencil, training_examples(&insts, &vocab, Format::Pencil).unwrap());
        assert_eq!(pencil.len(), insts.iter().map(|i| i.run.iterations.len()).sum::<usize>());
        for ex in &pencil {
            let inst = &insts[ex.instance_id as usize];
            assert_eq!(ex.decode(&vocab).unwrap(), inst.examples()[ex.iteration]);
        }
        let cot = read_jsonl(&a.path().join("cot.jsonl")).unwrap();
        for (ex, inst) in cot.iter().zip(&insts) {
            assert_eq!(vocab.tokens(&ex.tokens).unwrap(), inst.scaffold);
        }
        assert!(!first.iter().any(|bytes| bytes.contains(&b'\r')));
    }
}

#[test]
fn jsonl_lines_have_a_fixed_field_order() {
    let insts = corpus(TaskSpec::Sat { n: 3 }, 1, 0, false);
    let vocab = corpus_vocab(&insts).unwrap();
    let text = to_jsonl_string(&training_examples(&insts, &vocab, Format::Cot).unwrap());
    assert!(text.starts_with("{\"tokens\":["));
    let tail = text.split(']').nth(1).unwrap();
    assert!(tail.starts_with(",\"loss_start\":"));
    assert!(tail.trim_end().ends_with(",\"instance_id\":0,\"iteration\":0}"));
    assert_eq!(text.lines().count(), 1);
}

#[test]
fn malformed_lines_name_the_file_and_line() {
    let path = Path::new("data.jsonl");
    let good = "{\"tokens\":[1,2],\"loss_start\":1,\"instance_id\":0,\"iteration\":0}";
    let err = from_jsonl_str(&format!("{good}\n{{\"tokens\":[1]}}\n"), path).unwrap_err();
    assert!(matches!(err, DatasetError::Json { line: 2, .. }), "{err}");
    assert!(err.to_string().starts_with("data.jsonl:2:"));
    let err =
        from_jsonl_str("{\"tokens\":[1,2],\"loss_start\":2,\"instance_id\":0,\"iteration\":0}", path).unwrap_err();
    assert!(err.to_string().contains("loss_start 2"));
    let err = read_jsonl(Path::new("/nonexistent/x.jsonl")).unwrap_err();
    assert!(matches!(err, DatasetError::Io { .. }));
    assert!(err.to_string().starts_with("/nonexistent/x.jsonl"));
}

#[test]
fn stats_file_has_a_note_and_one_row_per_instance() {
    let insts = corpus(TaskSpec::Qbf { n: 4 }, 5, 3, false);
    let text = stats_csv_string(&insts);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# "));
    assert_eq!(lines.next().unwrap(), STATS_HEADER.join(","));
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 5);
    for (row, inst) in rows.iter().zip(&insts) {
        assert_eq!(row[0].parse::<u64>().unwrap(), inst.id);
        assert_eq!(&row[2], inst.label);
        assert_eq!(row[5].parse::<usize>().unwrap(), inst.run.max_context);
    }
}
