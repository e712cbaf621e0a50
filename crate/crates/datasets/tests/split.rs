//! Cutting runs into training examples.

use pencil_core::{normalize_whitespace, replay, Limits, Rule, Token, TokenSeq};
use pencil_datasets::{export_cot, split_scaffolded, Example};
use pencil_tasks::{gen_qbf, qbf_trace, QbfFormula};
use proptest::prelude::*;

fn tasks_fixture(name: &str) -> String {
    let path = format!("{}/../tasks/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    normalize_whitespace(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}")))
}

/// Prompt followed by every target.
fn reassemble(prompt: &[Token], examples: &[Example]) -> TokenSeq {
    let mut out = prompt.to_vec();
    for ex in examples {
        out.extend_from_slice(ex.target());
    }
    out
}

fn check_shape(examples: &[Example]) {
    let last = examples.len() - 1;
    for (i, ex) in examples.iter().enumerate() {
        assert_eq!(ex.iteration, i);
        assert!(0 < ex.loss_start && ex.loss_start < ex.tokens.len());
        let end = ex.tokens.last().unwrap();
        if i == last {
            assert_eq!(*end, Token::EndOfText);
        } else {
            assert_eq!(*end, Token::Return);
        }
    }
}

#[test]
fn worked_qbf_run_splits_into_one_example_per_iteration() {
    let q = QbfFormula::parse(&tasks_fixture("qbf_prompt.txt")).unwrap();
    let t = qbf_trace(&q);
    let run = replay(&t.scaffold, t.prompt_len(), Rule::Full, Limits::unbounded()).unwrap();
    let examples = split_scaffolded(&run, &t.prompt);
    assert_eq!(examples.len(), 26);
    assert_eq!(examples.iter().filter(|e| e.tokens.last() == Some(&Token::Return)).count(), 25);
    check_shape(&examples);
    assert_eq!(reassemble(&t.prompt, &examples), t.scaffold);
    assert_eq!(examples[0].loss_start, t.prompt_len());
}

#[test]
fn a_run_without_reductions_is_one_example() {
    let prompt: TokenSeq = ["a", "b"].iter().map(|w| Token::word(w)).collect();
    let mut scaffold = prompt.clone();
    scaffold.extend([Token::word("c"), Token::EndOfText]);
    let run = replay(&scaffold, 2, Rule::Full, Limits::unbounded()).unwrap();
    let examples = split_scaffolded(&run, &prompt);
    assert_eq!(examples, vec![Example { tokens: scaffold.clone(), loss_start: 2, iteration: 0 }]);
    assert_eq!(export_cot(&scaffold, &prompt), examples[0]);
}

#[test]
fn chain_of_thought_example_is_the_scaffold() {
    let t = qbf_trace(&gen_qbf(4, 3).unwrap());
    let ex = export_cot(&t.scaffold, &t.prompt);
    assert_eq!(ex.tokens, t.scaffold);
    assert_eq!(ex.loss_start, t.prompt_len());
    assert_eq!(ex.target(), t.response());

    let mut open = t.scaffold.clone();
    open.pop();
    let ex = export_cot(&open, &t.prompt);
    assert_eq!(ex.tokens, t.scaffold);
    assert_eq!(ex.tokens.len(), t.prompt_len() + t.response().len());
}

#[test]
#[should_panic(expected = "does not start with the prompt")]
fn chain_of_thought_needs_the_prompt_prefix() {
    export_cot(&[Token::word("x"), Token::EndOfText], &[Token::word("y")]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Loss positions, mapped back to scaffold indices, cover every
    /// generated token exactly once.
    #[test]
    fn loss_positions_partition_the_generated_tokens(n in 3usize..7, seed in any::<u64>()) {
        let t = qbf_trace(&gen_qbf(n, seed).unwrap());
        let run = replay(&t.scaffold, t.prompt_len(), Rule::Full, Limits::unbounded()).unwrap();
        let examples = split_scaffolded(&run, &t.prompt);
        prop_assert_eq!(examples.len(), run.reductions + 1);
        check_shape(&examples);
        let mut covered = vec![0u32; t.scaffold.len()];
        let mut at = t.prompt_len();
        for (i, ex) in examples.iter().enumerate() {
            prop_assert_eq!(ex.loss_start, run.start_len(i));
            prop_assert_eq!(ex.tokens.len(), run.iterations[i].context_len);
            for tok in ex.target() {
                prop_assert_eq!(tok, &t.scaffold[at]);
                covered[at] += 1;
                at += 1;
            }
        }
        prop_assert!(covered[..t.prompt_len()].iter().all(|&c| c == 0));
        prop_assert!(covered[t.prompt_len()..].iter().all(|&c| c == 1));
        prop_assert_eq!(at - t.prompt_len(), run.total_generated);
        prop_assert_eq!(reassemble(&t.prompt, &examples), t.scaffold);
    }
}
