//! Property tests of the reduction rules against a brute-force
//! decomposition oracle.

use pencil_core::{apply, match_rule, reduce, reduce_simplified, replay, scaffold, Limits, Rule, Token, TokenSeq};
use proptest::prelude::*;

fn token_strategy() -> impl Strategy<Value = Token> {
    prop_oneof![
        3 => Just(Token::Call),
        3 => Just(Token::Sep),
        2 => Just(Token::Return),
        4 => prop::sample::select(vec!["a", "b", "c"]).prop_map(Token::word),
    ]
}

fn seq_strategy() -> impl Strategy<Value = TokenSeq> {
    prop::collection::vec(token_strategy(), 0..24)
}

/// Every split `C [CALL] T [SEP] A [RETURN]` with `T` free of `[CALL]` and
/// `A` free of `[SEP]` and `[RETURN]`, found by trying all index pairs.
fn decompositions(seq: &[Token]) -> Vec<(usize, usize)> {
    let n = seq.len();
    if n == 0 || seq[n - 1] != Token::Return {
        return Vec::new();
    }
    let mut found = Vec::new();
    for call in 0..n {
        for sep in call + 1..n - 1 {
            let ok = seq[call] == Token::Call
                && seq[sep] == Token::Sep
                && !seq[call + 1..sep].contains(&Token::Call)
                && seq[sep + 1..n - 1].iter().all(|t| *t != Token::Sep && *t != Token::Return);
            if ok {
                found.push((call, sep));
            }
        }
    }
    found
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn match_agrees_with_brute_force(seq in seq_strategy()) {
        let brute = decompositions(&seq);
        prop_assert!(brute.len() <= 1, "decomposition must be unique");
        match match_rule(&seq) {
            Ok(Some(m)) => {
                prop_assert_eq!(brute, vec![(m.call_idx, m.sep_idx)]);
                let mut expected = seq[..m.call_idx].to_vec();
                expected.extend_from_slice(&seq[m.sep_idx + 1..seq.len() - 1]);
                prop_assert_eq!(reduce(&seq).unwrap(), expected);
            }
            Ok(None) => {
                prop_assert!(seq.last() != Some(&Token::Return));
                prop_assert_eq!(reduce(&seq).unwrap(), seq.clone());
            }
            Err(_) => {
                prop_assert!(brute.is_empty());
                prop_assert_eq!(seq.last(), Some(&Token::Return));
            }
        }
    }

    #[test]
    fn shrinkage_determinism_quiescence(seq in seq_strategy()) {
        for rule in [Rule::Full, Rule::Simplified] {
            let Ok((out, spans)) = apply(rule, &seq) else { continue };
            prop_assert!(out.len() <= seq.len());
            prop_assert_eq!(spans.is_some(), out.len() < seq.len() || seq.last() == Some(&Token::Return));
            if rule == Rule::Full && spans.is_some() {
                prop_assert!(out.len() + 3 <= seq.len());
            }
            prop_assert_eq!(&apply(rule, &seq).unwrap().0, &out);
            if out.last() != Some(&Token::Return) {
                prop_assert_eq!(apply(rule, &out).unwrap().0, out.clone());
            }
        }
    }

    #[test]
    fn simplified_rule_keeps_the_tail(seq in seq_strategy()) {
        if let Ok(out) = reduce_simplified(&seq) {
            if seq.last() == Some(&Token::Return) {
                let sep = seq.iter().rposition(|t| *t == Token::Sep).unwrap();
                prop_assert_eq!(out, seq[sep + 1..seq.len() - 1].to_vec());
            }
        }
    }

    #[test]
    fn well_nested_scaffolds_replay(shape in prop::collection::vec(0u8..4, 1..40)) {
        let trace = nested_trace(&shape);
        let run = replay(&trace, 1, Rule::Full, Limits::unbounded()).unwrap();
        prop_assert_eq!(scaffold(&run, &trace[..1]), trace.clone());
        prop_assert_eq!(run.total_generated, trace.len() - 1);
        prop_assert!(run.iterations.iter().all(|it| it.reduction.is_some() == (it.generated.last() == Some(&Token::Return))));
        let mut live = trace[..1].to_vec();
        for it in &run.iterations {
            live.extend_from_slice(&it.generated);
            prop_assert_eq!(live.len(), it.context_len);
            if let Some(step) = &it.reduction {
                live = reduce(&live).unwrap();
                prop_assert_eq!(&live, &step.context);
            }
        }
    }
}

/// A prompt followed by a well-nested call tree driven by `shape`: 0 opens
/// a call, 1 writes a word, 2 closes the innermost call with an answer, 3
/// replaces it with a successor call.
fn nested_trace(shape: &[u8]) -> TokenSeq {
    let mut out = vec![Token::word("p")];
    let mut depth = 0usize;
    for &op in shape {
        match op {
            0 => {
                out.push(Token::Call);
                out.push(Token::word("q"));
                depth += 1;
            }
            1 => out.push(Token::word("w")),
            2 if depth > 0 => {
                out.extend([Token::Sep, Token::word("ans"), Token::Return]);
                depth -= 1;
            }
            3 if depth > 0 => {
                out.extend([Token::Sep, Token::Call, Token::word("r"), Token::Return]);
            }
            _ => out.push(Token::word("x")),
        }
    }
    for _ in 0..depth {
        out.extend([Token::Sep, Token::word("ans"), Token::Return]);
    }
    out.push(Token::EndOfText);
    out
}
