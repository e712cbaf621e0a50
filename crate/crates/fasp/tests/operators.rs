//! Primitives and library operators against direct definitions.

use pencil_core::Token;
use pencil_fasp::{eval, hardmax, next_token, rat, Expr, FaspError, Program, Rational, Session, Ty};
use proptest::prelude::*;

fn vocab(n: usize) -> Vec<Token> {
    (0..n).map(|i| Token::word(&format!("t{i}"))).collect()
}

fn seq(ids: &[usize]) -> Vec<Token> {
    ids.iter().map(|i| Token::word(&format!("t{i}"))).collect()
}

fn frac(n: i64, d: i64) -> Rational {
    Rational::new(n as i128, d as i128)
}

/// A program over `values.len()` tokens with a scalar embedding that maps
/// token `i` to `values[i]`.
fn scalar_program(values: &[i64], ty: Ty) -> (Program, Expr) {
    let mut p = Program::new(vocab(values.len())).unwrap();
    let x = p.token_embedding(values.iter().map(|&v| vec![rat(v)]).collect(), ty).unwrap();
    (p, x)
}

/// The value of a scalar node on every prefix of `ids`.
fn prefixes(p: &Program, e: Expr, ids: &[usize]) -> Vec<Rational> {
    Session::new(p).eval_prefixes(e, &seq(ids)).unwrap().into_iter().map(|v| v[0]).collect()
}

#[test]
fn hardmax_examples() {
    assert_eq!(hardmax(&[rat(1), rat(3), rat(3)]), vec![rat(0), frac(1, 2), frac(1, 2)]);
    assert_eq!(hardmax(&[rat(5)]), vec![rat(1)]);
    assert_eq!(hardmax(&[rat(2); 4]), vec![frac(1, 4); 4]);
    assert!(hardmax(&[]).is_empty());
}

#[test]
fn average_of_one_is_one() {
    let mut p = Program::new(vocab(3)).unwrap();
    let one = p.one();
    let avg = p.average(one).unwrap();
    for ids in [&[0][..], &[1, 2], &[2, 2, 0, 1, 1]] {
        assert_eq!(eval(&p, avg, &seq(ids)).unwrap(), vec![rat(1)]);
    }
}

#[test]
fn inverse_length_matches_the_first_position_average() {
    let mut p = Program::new(vocab(2)).unwrap();
    let inv = p.inv_seq_len().unwrap();
    assert_eq!(eval(&p, inv, &seq(&[0, 1, 1, 0])).unwrap(), vec![frac(1, 4)]);
    for n in 1..=12usize {
        let ids: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let first: Vec<i64> = (1..=n).map(|j| (j == 1) as i64).collect();
        let direct = frac(first.iter().sum(), n as i64);
        assert_eq!(eval(&p, inv, &seq(&ids)).unwrap(), vec![direct]);
    }
}

#[test]
fn sum_of_one_is_the_length() {
    let mut p = Program::new(vocab(2)).unwrap();
    let one = p.one();
    let s = p.sum(one).unwrap();
    for n in 1..=15usize {
        assert_eq!(eval(&p, s, &seq(&vec![1; n])).unwrap(), vec![rat(n as i64)]);
    }
}

#[test]
fn comparisons_on_small_integers() {
    let values: Vec<i64> = (-4..=4).collect();
    let mut p = Program::new(vocab(values.len() * values.len())).unwrap();
    let k = values.len();
    let a = p.token_embedding((0..k * k).map(|i| vec![rat(values[i / k])]).collect(), Ty::Int).unwrap();
    let b = p.token_embedding((0..k * k).map(|i| vec![rat(values[i % k])]).collect(), Ty::Int).unwrap();
    type Oracle = fn(i64, i64) -> bool;
    let ops: Vec<(Expr, Oracle)> = vec![
        (p.leq(a, b).unwrap(), |x, y| x <= y),
        (p.geq(a, b).unwrap(), |x, y| x >= y),
        (p.less(a, b).unwrap(), |x, y| x < y),
        (p.greater(a, b).unwrap(), |x, y| x > y),
        (p.equal(a, b).unwrap(), |x, y| x == y),
        (p.neq(a, b).unwrap(), |x, y| x != y),
    ];
    let max = p.max(a, b).unwrap();
    let min = p.min(a, b).unwrap();
    let mut session = Session::new(&p).with_type_checks(true);
    for i in 0..k * k {
        let (x, y) = (values[i / k], values[i % k]);
        for &(e, f) in &ops {
            assert_eq!(session.eval(e, &seq(&[i])).unwrap(), vec![rat(f(x, y) as i64)], "{x} vs {y}");
        }
        assert_eq!(session.eval(max, &seq(&[i])).unwrap(), vec![rat(x.max(y))]);
        assert_eq!(session.eval(min, &seq(&[i])).unwrap(), vec![rat(x.min(y))]);
    }
}

#[test]
fn leq_of_equal_values_is_one() {
    let mut p = Program::new(vocab(1)).unwrap();
    let two = p.constant(vec![rat(2)]).unwrap();
    let le = p.leq(two, two).unwrap();
    assert_eq!(eval(&p, le, &seq(&[0])).unwrap(), vec![rat(1)]);
}

#[test]
fn logic_truth_tables() {
    let mut p = Program::new(vocab(4)).unwrap();
    let a = p.token_embedding((0..4).map(|i| vec![rat(i / 2)]).collect(), Ty::Bool).unwrap();
    let b = p.token_embedding((0..4).map(|i| vec![rat(i % 2)]).collect(), Ty::Bool).unwrap();
    let and = p.and(a, b).unwrap();
    let or = p.or(a, b).unwrap();
    let xor = p.xor(a, b).unwrap();
    let not = p.not(a).unwrap();
    for i in 0..4usize {
        let (x, y) = (i / 2 == 1, i % 2 == 1);
        let s = seq(&[i]);
        assert_eq!(eval(&p, and, &s).unwrap(), vec![rat((x && y) as i64)]);
        assert_eq!(eval(&p, or, &s).unwrap(), vec![rat((x || y) as i64)]);
        assert_eq!(eval(&p, xor, &s).unwrap(), vec![rat((x != y) as i64)]);
        assert_eq!(eval(&p, not, &s).unwrap(), vec![rat(!x as i64)]);
    }
}

#[test]
fn kron_of_one_hots_is_the_pair_one_hot() {
    let mut p = Program::new(vocab(6)).unwrap();
    let unit = |n: usize, i: usize| (0..n).map(|j| rat((i == j) as i64)).collect::<Vec<_>>();
    let a = p.token_embedding((0..6).map(|i| unit(2, i / 3)).collect(), Ty::OneHot).unwrap();
    let b = p.token_embedding((0..6).map(|i| unit(3, i % 3)).collect(), Ty::OneHot).unwrap();
    let k = p.kron(a, b).unwrap();
    assert_eq!(k.ty(), Ty::OneHot);
    for i in 0..6 {
        assert_eq!(eval(&p, k, &seq(&[i])).unwrap(), unit(6, i));
    }
}

#[test]
fn if_then_else_selects_whole_vectors() {
    let mut p = Program::new(vocab(2)).unwrap();
    let c = p.token_embedding(vec![vec![rat(0)], vec![rat(1)]], Ty::Bool).unwrap();
    let yes = p.constant(vec![rat(3), frac(1, 2)]).unwrap();
    let no = p.constant(vec![rat(-1), rat(7)]).unwrap();
    let e = p.if_then_else(c, yes, no).unwrap();
    assert_eq!(eval(&p, e, &seq(&[1])).unwrap(), vec![rat(3), frac(1, 2)]);
    assert_eq!(eval(&p, e, &seq(&[0])).unwrap(), vec![rat(-1), rat(7)]);
}

#[test]
fn position_indicator_from_the_inverse_length() {
    let mut p = Program::new(vocab(1)).unwrap();
    let probes: Vec<(u64, Expr)> = (1..=8).map(|k| (k, p.is_pos_k(k).unwrap())).collect();
    let mut session = Session::new(&p).with_type_checks(true);
    for n in 1..=20usize {
        for &(k, e) in &probes {
            assert_eq!(session.eval(e, &seq(&vec![0; n])).unwrap(), vec![rat((n as u64 == k) as i64)], "n={n} k={k}");
        }
    }
}

#[test]
fn self_keyed_attention_misses_the_maximum_of_negative_values() {
    let (mut p, x) = scalar_program(&[-3, -1], Ty::Int);
    let listed = p.aha(x, x, x).unwrap();
    let fixed = p.seq_max(x).unwrap();
    let ids = [1, 0, 1];
    assert_eq!(prefixes(&p, listed, &ids)[2], rat(-3));
    assert_eq!(prefixes(&p, fixed, &ids)[2], rat(-1));
}

#[test]
fn rha_prefers_the_later_of_two_tied_matches() {
    // Keys 1 at positions 2 and 5, 0 elsewhere. Values are the positions.
    let mut p = Program::new(vocab(6)).unwrap();
    let key = p.token_embedding((0..6).map(|i| vec![rat((i == 2 || i == 5) as i64)]).collect(), Ty::Int).unwrap();
    let value = p.token_embedding((0..6).map(|i| vec![rat(i as i64)]).collect(), Ty::Int).unwrap();
    let one = p.one();
    let r = p.rha(one, key, value).unwrap();
    assert_eq!(eval(&p, r, &seq(&[1, 2, 3, 4, 5, 0])).unwrap(), vec![rat(5)]);
}

#[test]
fn exact_match_falls_back_to_the_default() {
    let mut p = Program::new(vocab(4)).unwrap();
    let key = p.token_embedding((0..4).map(|i| vec![rat(i as i64)]).collect(), Ty::Int).unwrap();
    let value = p.token_embedding((0..4).map(|i| vec![rat(10 * i as i64)]).collect(), Ty::Int).unwrap();
    let query = p.constant(vec![rat(7)]).unwrap();
    let default = p.constant(vec![rat(-5)]).unwrap();
    let e = p.rightmost_exact_match(query, key, value, default).unwrap();
    assert_eq!(eval(&p, e, &seq(&[0, 1, 2, 3])).unwrap(), vec![rat(-5)]);
    let hit = p.constant(vec![rat(2)]).unwrap();
    let e = p.rightmost_exact_match(hit, key, value, default).unwrap();
    assert_eq!(eval(&p, e, &seq(&[2, 1, 3, 0])).unwrap(), vec![rat(20)]);
}

#[test]
fn dimension_errors_surface_at_construction() {
    let mut p = Program::new(vocab(2)).unwrap();
    let a = p.constant(vec![rat(1)]).unwrap();
    let b = p.constant(vec![rat(1), rat(2)]).unwrap();
    assert!(matches!(p.add(a, b), Err(FaspError::Dim { op: "add", .. })));
    assert!(matches!(p.aha(a, b, b), Err(FaspError::Dim { op: "aha", .. })));
    assert!(matches!(p.linear(b, vec![vec![rat(1)]]), Err(FaspError::Dim { op: "linear", .. })));
    assert!(matches!(p.token_embedding(vec![vec![rat(1)]], Ty::Real), Err(FaspError::Dim { .. })));
    assert!(matches!(p.set_result(a), Err(FaspError::Dim { op: "result", .. })));
    assert!(matches!(p.if_then_else(b, a, a), Err(FaspError::Dim { .. })));
    let mut other = Program::new(vocab(2)).unwrap();
    let _ = other.seq_len();
    let far = other.constant(vec![rat(0); 5]).unwrap();
    assert!(matches!(p.relu(far), Err(FaspError::ForeignExpr(_))));
    assert!(matches!(p.define("a", a).and_then(|_| p.define("a", a)), Err(FaspError::DuplicateName(_))));
}

#[test]
fn decoding_needs_a_unique_maximum() {
    let mut p = Program::new(vocab(3)).unwrap();
    let unit = |i: usize| (0..3).map(|j| rat((i == j) as i64)).collect::<Vec<_>>();
    let out = p.token_embedding(vec![unit(2), unit(0), vec![rat(1), rat(1), rat(0)]], Ty::Bool).unwrap();
    p.set_result(out).unwrap();
    assert_eq!(next_token(&p, &seq(&[0])).unwrap(), Token::word("t2"));
    assert_eq!(next_token(&p, &seq(&[2, 1])).unwrap(), Token::word("t0"));
    assert_eq!(next_token(&p, &seq(&[2])), Err(FaspError::AmbiguousDecode(vec!["t0".into(), "t1".into()])));
    assert_eq!(next_token(&p, &[]), Err(FaspError::EmptySequence));
    assert_eq!(next_token(&p, &[Token::word("zz")]), Err(FaspError::UnknownToken("zz".into())));
}

#[test]
fn domain_checks_catch_mislabelled_nodes() {
    let (p, x) = scalar_program(&[0, 2], Ty::Bool);
    let mut checked = Session::new(&p).with_type_checks(true);
    assert_eq!(checked.eval(x, &seq(&[0, 1])), Err(FaspError::TypeViolation { node: x.id(), position: 2 }));
    let mut unchecked = Session::new(&p).with_type_checks(false);
    assert_eq!(unchecked.eval(x, &seq(&[0, 1])).unwrap(), vec![rat(2)]);
}

#[test]
fn dump_lists_definitions_in_order() {
    let mut p = Program::new(vocab(2)).unwrap();
    let n = p.seq_len();
    let inv = p.inv_seq_len().unwrap();
    p.define("n", n).unwrap();
    p.define("inv", inv).unwrap();
    let dump = p.dump();
    let n_at = dump.find("\nn = n").unwrap();
    let inv_at = dump.find("\ninv = n").unwrap();
    assert!(n_at < inv_at);
    assert!(dump.contains("aha("));
    assert!(dump.contains("<inv_seq_len>"));
}

proptest! {
    #[test]
    fn constant_attention_is_the_mean(values in prop::collection::vec(-20i64..20, 1..6), ids in prop::collection::vec(0usize..5, 1..25)) {
        let ids: Vec<usize> = ids.into_iter().map(|i| i % values.len()).collect();
        let (mut p, x) = scalar_program(&values, Ty::Int);
        let avg = p.average(x).unwrap();
        let got = prefixes(&p, avg, &ids);
        for (n, g) in got.iter().enumerate() {
            let total: i64 = ids[..=n].iter().map(|&i| values[i]).sum();
            prop_assert_eq!(*g, frac(total, n as i64 + 1));
        }
    }

    #[test]
    fn running_extremes_and_sums(values in prop::collection::vec(-20i64..20, 1..6), ids in prop::collection::vec(0usize..5, 1..25)) {
        let ids: Vec<usize> = ids.into_iter().map(|i| i % values.len()).collect();
        let (mut p, x) = scalar_program(&values, Ty::Int);
        let hi = p.seq_max(x).unwrap();
        let lo = p.seq_min(x).unwrap();
        let s = p.sum(x).unwrap();
        let (hi, lo, s) = (prefixes(&p, hi, &ids), prefixes(&p, lo, &ids), prefixes(&p, s, &ids));
        for n in 0..ids.len() {
            let seen: Vec<i64> = ids[..=n].iter().map(|&i| values[i]).collect();
            prop_assert_eq!(hi[n], rat(*seen.iter().max().unwrap()));
            prop_assert_eq!(lo[n], rat(*seen.iter().min().unwrap()));
            prop_assert_eq!(s[n], rat(seen.iter().sum()));
        }
    }

    #[test]
    fn rha_picks_the_latest_maximizer(keys in prop::collection::vec(0i64..3, 1..6), ids in prop::collection::vec(0usize..5, 1..25)) {
        // Few distinct keys, so most prefixes tie.
        let ids: Vec<usize> = ids.into_iter().map(|i| i % keys.len()).collect();
        let mut p = Program::new(vocab(keys.len())).unwrap();
        let key = p.token_embedding(keys.iter().map(|&k| vec![rat(k)]).collect(), Ty::Int).unwrap();
        let n = p.seq_len();
        let one = p.one();
        let r = p.rha(one, key, n).unwrap();
        let got = prefixes(&p, r, &ids);
        for (m, g) in got.iter().enumerate() {
            let best = ids[..=m].iter().map(|&i| keys[i]).max().unwrap();
            let latest = (0..=m).rev().find(|&j| keys[ids[j]] == best).unwrap();
            prop_assert_eq!(*g, rat(latest as i64 + 1));
        }
    }

    #[test]
    fn best_match_is_the_latest_nearest_key(keys in prop::collection::vec(-4i64..4, 1..6), ids in prop::collection::vec(0usize..5, 1..20), q in -6i64..6) {
        let ids: Vec<usize> = ids.into_iter().map(|i| i % keys.len()).collect();
        let mut p = Program::new(vocab(keys.len())).unwrap();
        let key = p.token_embedding(keys.iter().map(|&k| vec![rat(k)]).collect(), Ty::Int).unwrap();
        let query = p.constant(vec![rat(q)]).unwrap();
        let n = p.seq_len();
        let r = p.rightmost_best_match(query, key, n).unwrap();
        let missing = p.constant(vec![rat(-1)]).unwrap();
        let exact = p.rightmost_exact_match(query, key, n, missing).unwrap();
        let (got, got_exact) = (prefixes(&p, r, &ids), prefixes(&p, exact, &ids));
        for m in 0..ids.len() {
            let dist = |j: usize| (keys[ids[j]] - q).abs();
            let best = (0..=m).map(dist).min().unwrap();
            let latest = (0..=m).rev().find(|&j| dist(j) == best).unwrap();
            prop_assert_eq!(got[m], rat(latest as i64 + 1));
            let want = if best == 0 { latest as i64 + 1 } else { -1 };
            prop_assert_eq!(got_exact[m], rat(want));
        }
    }

    #[test]
    fn sessions_reuse_prefixes_exactly(values in prop::collection::vec(-9i64..9, 1..5), a in prop::collection::vec(0usize..4, 1..15), b in prop::collection::vec(0usize..4, 1..15)) {
        let fit = |v: Vec<usize>| v.into_iter().map(|i| i % values.len()).collect::<Vec<_>>();
        let (a, b) = (fit(a), fit(b));
        let (mut p, x) = scalar_program(&values, Ty::Int);
        let hi = p.seq_max(x).unwrap();
        let inv = p.inv_seq_len().unwrap();
        let r = p.rha(x, x, inv).unwrap();
        let out = p.concat(&[hi, r]).unwrap();
        let mut shared = Session::new(&p);
        let mut joined = a.clone();
        joined.extend(&b);
        for ids in [&a, &joined, &b, &a] {
            let warm = shared.eval(out, &seq(ids)).unwrap();
            prop_assert_eq!(warm, eval(&p, out, &seq(ids)).unwrap());
        }
    }

    #[test]
    fn boolean_operators_stay_boolean(ids in prop::collection::vec(0usize..4, 1..20)) {
        let mut p = Program::new(vocab(4)).unwrap();
        let a = p.token_embedding((0..4).map(|i| vec![rat(i / 2)]).collect(), Ty::Bool).unwrap();
        let b = p.token_embedding((0..4).map(|i| vec![rat(i % 2)]).collect(), Ty::Bool).unwrap();
        let x = p.xor(a, b).unwrap();
        let any = p.seq_or(x).unwrap();
        let all = p.seq_and(a).unwrap();
        let eq = p.equal(any, all).unwrap();
        let first = p.is_pos_k(1).unwrap();
        let pick = p.if_then_else(first, eq, any).unwrap();
        let mut session = Session::new(&p).with_type_checks(true);
        for e in [x, any, all, eq, first, pick] {
            prop_assert_eq!(e.ty(), Ty::Bool);
            prop_assert!(session.eval_prefixes(e, &seq(&ids)).is_ok());
        }
    }
}
