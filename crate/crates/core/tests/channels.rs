mod common;

use entropy_asymptotics::channels::{
    bsc_model, ge_model, markov_entropy, mutual_information_expansion, bsc_spec, MarkovInput,
};
use entropy_asymptotics::expansion::{expand, ExpansionConfig};
use entropy_asymptotics::hmm::seq_prob;
use entropy_asymptotics::numeric::{eval_expansion, exact_hn_with, ExactHnConfig};
use entropy_asymptotics::rational::{integer, rational, to_f64};

fn sequences(len: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..1usize << len).map(move |bits| (0..len).map(|i| (bits >> (len - 1 - i)) & 1).collect())
}

#[test]
fn gilbert_elliott_with_equal_states_matches_bsc() {
    let input = common::input();
    let bsc = bsc_model(&input).unwrap();
    let ge = ge_model(&input, rational(1, 3), rational(2, 3), integer(1)).unwrap();
    for len in 1..=5 {
        for z in sequences(len) {
            assert_eq!(seq_prob(&bsc, &z).unwrap(), seq_prob(&ge, &z).unwrap(), "{z:?}");
        }
    }
}

#[test]
fn noiseless_limit_recovers_input_entropy() {
    let cfg = ExpansionConfig::default();
    for (name, pi00, pi11) in [("a", rational(1, 3), rational(1, 4)), ("b", rational(1, 2), rational(1, 2)), ("c", rational(4, 5), rational(1, 7))] {
        let input = MarkovInput::binary(pi00, pi11).unwrap();
        let h = markov_entropy(&input);
        let bsc = expand(&bsc_model(&input).unwrap(), 0, &cfg).unwrap();
        assert!((bsc.h0 - h).abs() < 1e-9, "{name}: {} vs {h}", bsc.h0);
        let ge = ge_model(&input, rational(1, 4), rational(3, 4), integer(3)).unwrap();
        let ge = expand(&ge, 0, &cfg).unwrap();
        assert!((ge.h0 - h).abs() < 1e-9, "{name}: {} vs {h}", ge.h0);
    }
}

/// For a symmetric chain with flip probability `p` through a BSC(ε), the
/// first-order coefficient is `2(1 − 2p) ln((1 − p)/p)`.
#[test]
fn symmetric_bsc_first_order_coefficient() {
    let cfg = ExpansionConfig::default();
    for (num, den) in [(1i64, 4i64), (1, 3), (1, 10)] {
        let p = rational(num, den);
        let stay = integer(1) - &p;
        let model = bsc_model(&MarkovInput::binary(stay.clone(), stay).unwrap()).unwrap();
        let r = expand(&model, 1, &cfg).unwrap();
        assert!(r.f.iter().all(|f| f == &integer(0)));
        let pf = to_f64(&p);
        let expected = 2.0 * (1.0 - 2.0 * pf) * ((1.0 - pf) / pf).ln();
        assert!((r.g[0] - expected).abs() < 1e-9, "p={pf}: {} vs {expected}", r.g[0]);
    }
}

#[test]
fn erasure_contributes_binary_entropy_log_term() {
    let cfg = ExpansionConfig::default();
    for (a, b) in [(rational(1, 3), rational(1, 4)), (rational(1, 2), rational(1, 2)), (rational(1, 2), integer(0))] {
        let input = MarkovInput::binary(a, b).unwrap();
        let r = expand(&entropy_asymptotics::channels::bec_model(&input).unwrap(), 0, &cfg).unwrap();
        assert_eq!(r.f, vec![integer(-1)]);
        assert!((r.h0 - markov_entropy(&input)).abs() < 1e-9);
    }
}

#[test]
fn presets_agree_with_exact_entropy_at_small_noise() {
    let cfg = ExpansionConfig::default();
    let budget = ExactHnConfig { budget: 1 << 21, ..Default::default() };
    for (name, model) in common::presets() {
        let r = expand(&model, 1, &cfg).unwrap();
        for eps in [1e-3, 3e-4] {
            let exact = exact_hn_with(&model, r.n0, eps, &budget).unwrap().0;
            let gap = (exact - eval_expansion(&r, eps)).abs();
            assert!(gap < 50.0 * eps * eps * eps.ln().abs(), "{name} eps={eps}: gap {gap:e}");
        }
    }
}

#[test]
fn mutual_information_of_bsc() {
    let input = common::input();
    let mi = mutual_information_expansion(&input, &bsc_spec(), 1, &ExpansionConfig::default()).unwrap();
    let (h0, f, _) = mi.information();
    // output entropy tends to H(X) and channel entropy to h_b(ε)
    assert!((h0 - markov_entropy(&input)).abs() < 1e-9);
    assert_eq!(f[0], integer(1));
}
