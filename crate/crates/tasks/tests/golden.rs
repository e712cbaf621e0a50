//! Worked traces reproduced token for token.
//!
//! Fixtures under `tests/data` hold published traces with whitespace
//! collapsed: `*_prompt.txt` and `*_response.txt` are chain-of-thought
//! runs, and each line of `*_thinking.txt` is one context snapshot of a
//! reduction run, alternating between the context just before a reduction
//! and the context just after it, with the final response last.

use pencil_core::{normalize_whitespace, render, replay, tokenize, Limits, PencilRun, Rule, TokenSeq};
use pencil_tasks::{dpll_trace, puzzle_trace, qbf_trace, CnfFormula, PuzzleInstance, QbfFormula};

fn fixture(name: &str) -> String {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    normalize_whitespace(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}")))
}

fn fixture_lines(name: &str) -> Vec<String> {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}")).lines().map(normalize_whitespace).collect()
}

/// Context snapshots around every reduction, prompt removed.
fn snapshots(run: &PencilRun, prompt: &[pencil_core::Token]) -> Vec<(String, String)> {
    let mut live: TokenSeq = prompt.to_vec();
    let mut out = Vec::new();
    for it in &run.iterations {
        live.extend_from_slice(&it.generated);
        if let Some(step) = &it.reduction {
            let before = render(&live[prompt.len()..]);
            live = step.context.clone();
            out.push((before, render(&live[prompt.len()..])));
        }
    }
    out
}

fn replay_full(scaffold: &[pencil_core::Token], prompt_len: usize) -> PencilRun {
    replay(scaffold, prompt_len, Rule::Full, Limits::unbounded()).expect("scaffold replays")
}

#[test]
fn sat_chain_of_thought_matches() {
    let prompt = fixture("sat_prompt.txt");
    let f = CnfFormula::parse(&prompt).unwrap();
    let t = dpll_trace(&f);
    assert!(!t.answer);
    assert_eq!(render(&t.prompt), prompt);
    assert_eq!(render(t.response()), fixture("sat_response.txt"));
    let run = replay_full(&t.scaffold, t.prompt_len());
    assert_eq!(run.reductions, 11);
    assert_eq!(render(&run.final_answer), "Answer: False");
}

#[test]
fn sat_reduction_snapshots_match() {
    let lines = fixture_lines("sat_thinking.txt");
    let first = &lines[0];
    let body = first.strip_prefix("[CALL] Question: ").unwrap();
    let end = body.find(" Try ").or_else(|| body.find(" Found ")).unwrap();
    let f = CnfFormula::parse(&body[..end]).unwrap();
    let t = dpll_trace(&f);
    assert!(t.answer);
    let run = replay_full(&t.scaffold, t.prompt_len());
    assert_eq!(run.reductions, 5);
    let snaps = snapshots(&run, &t.prompt);
    for (i, (before, after)) in snaps.iter().enumerate() {
        assert_eq!(before, &lines[2 * i], "generation {}", i + 1);
        assert_eq!(after, &lines[2 * i + 1], "reduction {}", i + 1);
    }
    assert_eq!(format!("{} <|endoftext|>", render(&run.final_answer)), lines[10]);
}

#[test]
fn qbf_chain_of_thought_and_snapshots_match() {
    let prompt = fixture("qbf_prompt.txt");
    let q = QbfFormula::parse(&prompt).unwrap();
    let t = qbf_trace(&q);
    assert!(t.answer);
    assert_eq!(render(&t.prompt), prompt);
    assert_eq!(render(t.response()), fixture("qbf_response.txt"));
    let run = replay_full(&t.scaffold, t.prompt_len());
    assert_eq!(run.reductions, 25);
    assert_eq!(render(&run.final_answer), "Answer: True");
    let lines = fixture_lines("qbf_thinking.txt");
    let snaps = snapshots(&run, &t.prompt);
    assert_eq!(snaps.len() * 2 + 1, lines.len());
    for (i, (before, after)) in snaps.iter().enumerate() {
        assert_eq!(before, &lines[2 * i], "generation {}", i + 1);
        assert_eq!(after, &lines[2 * i + 1], "reduction {}", i + 1);
    }
}

#[test]
fn puzzle_chain_of_thought_matches() {
    let prompt = fixture("puzzle_prompt.txt");
    let p = PuzzleInstance::parse(&prompt, 3, 3).unwrap();
    let t = puzzle_trace(&p).unwrap();
    assert_eq!(t.answer, "Brit");
    assert_eq!(render(&t.prompt), prompt);
    assert_eq!(render(t.response()), fixture("puzzle_response.txt"));
    let run = replay_full(&t.scaffold, t.prompt_len());
    let answer = render(&run.final_answer);
    assert!(answer.starts_with("Solution House#1 Color category is Red"), "{answer}");
    assert!(answer.ends_with("=> the Brit owns the Fish"), "{answer}");
}

#[test]
fn puzzle_snapshots_match_until_the_first_branch() {
    let text = "Constraint#1 : the one who keeps Fish is immediately to the right of the Red house \
                Constraint#2 : the Green house is immediately to the left of the Red house \
                Constraint#3 : the one who keeps Fish is immediately to the right of the Swede \
                Constraint#4 : the Brit is immediately to the left of the one who keeps Birds";
    let p = PuzzleInstance::parse(text, 3, 3).unwrap();
    let render_row = |row: &Vec<&str>| row.join("/");
    let rows: Vec<String> = p.solution.iter().map(render_row).collect();
    assert_eq!(rows, ["Green/Brit/Dogs", "Red/Swede/Birds", "Blue/German/Fish"]);
    let t = puzzle_trace(&p).unwrap();
    assert_eq!(t.answer, "German");
    let run = replay_full(&t.scaffold, t.prompt_len());
    let lines = fixture_lines("puzzle_thinking.txt");
    let snaps = snapshots(&run, &t.prompt);
    for (i, (before, after)) in snaps.iter().take(5).enumerate() {
        assert_eq!(before, &lines[2 * i], "generation {}", i + 1);
        assert_eq!(after, &lines[2 * i + 1], "reduction {}", i + 1);
    }
    // The published run tries the second candidate of the first branch
    // first, so the snapshots agree up to the branching line.
    let cut = |s: &str| s[..s.find(" Trying possibility").unwrap()].to_string();
    assert_eq!(cut(&snaps[5].0), cut(&lines[10]));
    assert!(lines[10].contains("Trying possibility Green"));
    assert!(snaps[5].0.contains("Trying possibility Blue"));
}

#[test]
fn published_prompts_tokenize_cleanly() {
    for name in ["sat_prompt.txt", "qbf_prompt.txt", "puzzle_prompt.txt"] {
        let tokens = tokenize(&fixture(name)).unwrap();
        assert_eq!(tokens.first().map(|t| t.surface()), Some("<|startoftext|>"));
        assert_eq!(tokens.last().map(|t| t.surface()), Some("<|endofprompt|>"));
    }
}
