use serde::{Deserialize, Serialize};

use crate::model::ModelConfig;

/// Weights of one LSTM direction: input, recurrent and bias for four gates.
pub fn lstm_params(input: usize, hidden: usize) -> usize {
    4 * (input + hidden + 1) * hidden
}

/// Fully-connected layer with bias.
pub fn linear_params(input: usize, output: usize) -> usize {
    input * output + output
}

/// Closed-form parameter accounting for the base tagger and its PretRand
/// extension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamCount {
    pub word_embeddings: usize,
    pub char_embeddings: usize,
    pub char_lstm: usize,
    pub fe_pretrained: usize,
    pub classifier_pretrained: usize,
    pub fe_random: usize,
    pub classifier_random: usize,
    pub weighting_vectors: usize,
    pub base_total: usize,
    pub pretrand_total: usize,
    /// `pretrand_total / base_total`.
    pub ratio: f64,
    /// Same ratio with word and character embeddings left out.
    pub ratio_without_embeddings: f64,
}

pub fn param_count(config: &ModelConfig, words: usize, chars: usize) -> ParamCount {
    let word_embeddings = words * config.word_emb_dim;
    let char_embeddings = chars * config.char_emb_dim;
    let char_lstm = 2 * lstm_params(config.char_emb_dim, config.char_lstm_hidden);
    let x = config.word_repr_dim();
    let fe_pretrained = 2 * lstm_params(x, config.fe_hidden);
    let classifier_pretrained = linear_params(2 * config.fe_hidden, config.num_classes);
    let fe_random = 2 * lstm_params(x, config.random_branch_k);
    let classifier_random = linear_params(2 * config.random_branch_k, config.num_classes);
    let weighting_vectors = 2 * config.num_classes;
    let embeddings = word_embeddings + char_embeddings;
    let base_total = embeddings + char_lstm + fe_pretrained + classifier_pretrained;
    let extra = fe_random + classifier_random + weighting_vectors;
    let pretrand_total = base_total + extra;
    ParamCount {
        word_embeddings,
        char_embeddings,
        char_lstm,
        fe_pretrained,
        classifier_pretrained,
        fe_random,
        classifier_random,
        weighting_vectors,
        base_total,
        pretrand_total,
        ratio: pretrand_total as f64 / base_total as f64,
        ratio_without_embeddings: (pretrand_total - embeddings) as f64 / (base_total - embeddings) as f64,
    }
}
