#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tagtransfer_core::autodiff::{Array, GradStore, Graph, ParamId, ParamStore, Var};
use tagtransfer_core::corpus::{build_vocab, parse_conll_str, AnnotatedCorpus, Split};
use tagtransfer_core::model::{ModelConfig, TaggerModel};
use tagtransfer_core::Result;

pub const FD_STEP: f64 = 1e-5;

/// |a - n| / max(|a|, |n|, floor)
pub fn rel_err(a: f64, n: f64, floor: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(floor)
}

pub fn random_array(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Array<f64> {
    let n = shape.iter().product();
    Array::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap()
}

/// Largest relative error between backward and central differences over
/// the given coordinates (all when `coords` is `None`).
pub fn gradient_check(
    store: &mut ParamStore<f64>,
    coords: Option<&[(ParamId, usize)]>,
    floor: f64,
    f: &dyn Fn(&mut Graph<f64>, &ParamStore<f64>) -> Result<Var>,
) -> f64 {
    let mut grads = GradStore::zeros_like(store);
    let mut g = Graph::new();
    let loss = f(&mut g, store).unwrap();
    g.backward(loss, &mut grads).unwrap();
    let all: Vec<(ParamId, usize)>;
    let coords = match coords {
        Some(c) => c,
        None => {
            all = store
                .ids()
                .flat_map(|id| (0..store.get(id).len()).map(move |i| (id, i)))
                .collect();
            &all
        }
    };
    let eval = |s: &ParamStore<f64>| -> f64 {
        let mut g = Graph::new();
        let l = f(&mut g, s).unwrap();
        g.value(l).item()
    };
    let mut worst = 0.0f64;
    for &(id, i) in coords {
        let orig = store.get(id).data()[i];
        store.get_mut(id).data_mut()[i] = orig + FD_STEP;
        let plus = eval(store);
        store.get_mut(id).data_mut()[i] = orig - FD_STEP;
        let minus = eval(store);
        store.get_mut(id).data_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(grads.get(id).data()[i], numeric, floor));
    }
    worst
}

pub fn conll(text: &str) -> AnnotatedCorpus {
    parse_conll_str(text, Split::Train).unwrap()
}

pub fn tiny_config(classes: usize, seed: u64) -> ModelConfig {
    ModelConfig {
        char_emb_dim: 3,
        char_lstm_hidden: 3,
        word_emb_dim: 4,
        fe_hidden: 3,
        random_branch_k: 3,
        num_classes: classes,
        seed,
    }
}

/// Model over a 3-token, 3-class toy corpus.
pub fn tiny_model(seed: u64, head: bool) -> (TaggerModel<f64>, AnnotatedCorpus) {
    let corpus = conll("The\tD\ncat\tN\nsat\tV\n\na\tD\ndog\tN\n");
    let vocab = build_vocab(&corpus, 1);
    let mut model = TaggerModel::new(tiny_config(3, seed), vocab, None).unwrap();
    if head {
        model.add_pretrand_head(seed + 100).unwrap();
    }
    (model, corpus)
}
