mod common;

use common::conll;
use proptest::collection::vec;
use proptest::prelude::*;
use tagtransfer_core::autodiff::{argmax, l2_normalize, Array, Graph};
use tagtransfer_core::corpus::{
    build_vocab, parse_conll_str, synth_corpus, AnnotatedCorpus, RawToken, Split, SynthSpec, Vocabulary, UNK_ID,
};

fn word() -> impl Strategy<Value = String> {
    "[A-Za-zé]{1,6}"
}

fn corpus_strategy() -> impl Strategy<Value = AnnotatedCorpus> {
    vec(vec((word(), "[A-Z]{1,3}"), 1..6), 1..5).prop_map(|sents| {
        let sentences = sents
            .into_iter()
            .map(|s| s.into_iter().map(|(w, t)| RawToken::new(w, t)).collect())
            .collect();
        AnnotatedCorpus::new(sentences, Split::Train).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalized_vectors_have_unit_norm(x in vec(-1e3f64..1e3, 1..20)) {
        let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-12);
        let y = l2_normalize(&x);
        let n: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((n - 1.0).abs() < 1e-9);
        prop_assert_eq!(argmax(&y), argmax(&x));
    }

    #[test]
    fn log_softmax_exponentiates_to_one(rows in 1usize..4, x in vec(-50f64..50.0, 12)) {
        let cols = 12 / rows.max(1);
        let data = x[..rows * cols].to_vec();
        let mut g = Graph::new();
        let v = g.input(Array::matrix(rows, cols, data).unwrap()).unwrap();
        let ls = g.log_softmax(v).unwrap();
        for r in 0..rows {
            let total: f64 = g.value(ls).row_slice(r).iter().map(|v| v.exp()).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn conll_round_trip(c in corpus_strategy()) {
        let back = parse_conll_str(&c.to_conll(), Split::Train).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn vocabulary_json_preserves_ids(c in corpus_strategy(), min_count in 1usize..3) {
        let v = build_vocab(&c, min_count);
        let back = Vocabulary::from_json(&v.to_json().unwrap()).unwrap();
        for w in v.words() {
            prop_assert_eq!(back.word_id(w), v.word_id(w));
        }
        for t in c.tokens() {
            for ch in t.surface.chars() {
                prop_assert_eq!(back.char_id(ch), v.char_id(ch));
            }
            prop_assert_eq!(back.tag_id(&t.label), v.tag_id(&t.label));
        }
        prop_assert_eq!(back, v);
    }

    #[test]
    fn every_token_gets_a_valid_word_id(train in corpus_strategy(), other in corpus_strategy()) {
        let v = build_vocab(&train, 1);
        for t in other.tokens() {
            prop_assert!(v.word_id(&t.surface) < v.word_count());
        }
        let unlabeled: Vec<&str> = other.tokens().map(|t| t.surface.as_str()).collect();
        for tok in v.encode_unlabeled(&unlabeled) {
            prop_assert!(tok.word_id < v.word_count());
            prop_assert!(tok.char_ids.iter().all(|&c| c < v.char_count()));
        }
    }
}

#[test]
fn argmax_invariance_on_many_vectors() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let n = rng.gen_range(1..16);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        assert_eq!(argmax(&l2_normalize(&x)), argmax(&x));
    }
    assert_eq!(l2_normalize(&[0.0, 0.0]), vec![0.0, 0.0]);
}

#[test]
fn conll_examples() {
    let c = conll("I\tPRP\nrun\tVBP\n\n");
    assert_eq!((c.len(), c.token_count()), (1, 2));
    assert_eq!(conll("a\tX\n\nb\tY\n").len(), 2);
    assert!(matches!(
        parse_conll_str("word\n", Split::Train),
        Err(tagtransfer_core::Error::Parse { line: 1, .. })
    ));
    assert!(matches!(parse_conll_str("\n\n", Split::Train), Err(tagtransfer_core::Error::EmptyCorpus)));
}

#[test]
fn vocabulary_file_round_trip() {
    let c = conll("a\tN\na\tN\na\tN\nb\tV\n");
    let v = build_vocab(&c, 2);
    assert_eq!(v.words(), &["<unk>", "<pad>", "a"]);
    assert_eq!(v.word_id("b"), UNK_ID);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vocab.json");
    v.save(&path).unwrap();
    assert_eq!(Vocabulary::load(&path).unwrap(), v);
}

#[test]
fn synthetic_corpora_are_reproducible_and_shifted() {
    let spec = SynthSpec {
        target_test_sentences: 20,
        ..SynthSpec::default()
    };
    let a = synth_corpus(&spec, 3).unwrap();
    let b = synth_corpus(&spec, 3).unwrap();
    for ((na, ca), (nb, cb)) in a.splits().into_iter().zip(b.splits()) {
        assert_eq!(na, nb);
        assert_eq!(ca.to_conll(), cb.to_conll());
    }
    assert_eq!(a.splits().len(), 5);
    let stats = a.stats();
    let target = &stats["target.val"];
    let share = target.target_only_tokens as f64 / target.tokens as f64;
    assert!((share - 0.3).abs() < 0.06, "{share}");
    assert_eq!(stats["source.train"].target_only_tokens, 0);
    let tags_src = build_vocab(&a.source_train, 1);
    let tags_tgt = build_vocab(&a.target_train, 1);
    for t in tags_tgt.tags() {
        assert!(tags_src.tag_id(t).is_some());
    }
}
