use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{argmax, Array, Graph, ParamId, ParamStore, Var};
use crate::corpus::{random_embeddings, EmbeddingTable, Token, Vocabulary};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::scalar::Scalar;

/// Which feature extractor a computation refers to.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Pretrained,
    Random,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Pretrained => "pretrained",
            Branch::Random => "random",
        })
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pretrained" => Ok(Branch::Pretrained),
            "random" => Ok(Branch::Random),
            other => Err(Error::Config(format!("unknown branch {other:?}"))),
        }
    }
}

/// Parameter groups, used for transfer and freezing.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    /// Word embeddings, character embeddings and the character biLSTM.
    WordRepresentation,
    FeaturePretrained,
    ClassifierPretrained,
    FeatureRandom,
    ClassifierRandom,
    Weighting,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::WordRepresentation,
        Component::FeaturePretrained,
        Component::ClassifierPretrained,
        Component::FeatureRandom,
        Component::ClassifierRandom,
        Component::Weighting,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            Component::WordRepresentation => "wre.",
            Component::FeaturePretrained => "fe_p.",
            Component::ClassifierPretrained => "cls_p.",
            Component::FeatureRandom => "fe_r.",
            Component::ClassifierRandom => "cls_r.",
            Component::Weighting => "mix.",
        }
    }

    pub fn of(name: &str) -> Option<Component> {
        Self::ALL.into_iter().find(|c| name.starts_with(c.prefix()))
    }
}

#[derive(Copy, Clone, Debug)]
struct LstmIds {
    w_x: ParamId,
    w_h: ParamId,
    b: ParamId,
    hidden: usize,
}

#[derive(Copy, Clone, Debug)]
struct BiLstmIds {
    fwd: LstmIds,
    bwd: LstmIds,
}

#[derive(Copy, Clone, Debug)]
struct LinearIds {
    w: ParamId,
    b: ParamId,
}

#[derive(Copy, Clone, Debug)]
struct HeadIds {
    fe: BiLstmIds,
    cls: LinearIds,
    u: ParamId,
    v: ParamId,
}

#[derive(Copy, Clone, Debug)]
struct Layout {
    word_emb: ParamId,
    char_emb: ParamId,
    char_lstm: BiLstmIds,
    fe: BiLstmIds,
    cls: LinearIds,
    head: Option<HeadIds>,
}

/// The biLSTM tagger: word representation (word embedding concatenated with
/// the final states of a character biLSTM), a token-level biLSTM feature
/// extractor and a linear classifier, plus an optional PretRand head made of
/// a second randomly initialised biLSTM/classifier branch and per-class
/// weighting vectors `u`, `v`.
#[derive(Clone, Debug)]
pub struct TaggerModel<T> {
    config: ModelConfig,
    vocab: Vocabulary,
    params: ParamStore<T>,
    layout: Layout,
}

fn glorot<T: Scalar>(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array<T> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| T::from_f64_lossy(rng.gen_range(-bound..=bound)))
        .collect();
    Array::from_parts(vec![rows, cols], data)
}

fn add_lstm<T: Scalar>(
    store: &mut ParamStore<T>,
    prefix: &str,
    input: usize,
    hidden: usize,
    rng: &mut ChaCha8Rng,
) -> Result<LstmIds> {
    let w_x = store.insert(format!("{prefix}.w_x"), glorot(input, 4 * hidden, rng))?;
    let w_h = store.insert(format!("{prefix}.w_h"), glorot(hidden, 4 * hidden, rng))?;
    let mut bias = Array::zeros(&[1, 4 * hidden]);
    // gate order: input, forget, cell, output
    for v in &mut bias.data_mut()[hidden..2 * hidden] {
        *v = T::one();
    }
    let b = store.insert(format!("{prefix}.b"), bias)?;
    Ok(LstmIds { w_x, w_h, b, hidden })
}

fn add_bilstm<T: Scalar>(
    store: &mut ParamStore<T>,
    prefix: &str,
    input: usize,
    hidden: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BiLstmIds> {
    Ok(BiLstmIds {
        fwd: add_lstm(store, &format!("{prefix}.fwd"), input, hidden, rng)?,
        bwd: add_lstm(store, &format!("{prefix}.bwd"), input, hidden, rng)?,
    })
}

fn add_linear<T: Scalar>(
    store: &mut ParamStore<T>,
    prefix: &str,
    input: usize,
    output: usize,
    rng: &mut ChaCha8Rng,
) -> Result<LinearIds> {
    Ok(LinearIds {
        w: store.insert(format!("{prefix}.w"), glorot(input, output, rng))?,
        b: store.insert(format!("{prefix}.b"), Array::zeros(&[1, output]))?,
    })
}

impl<T: Scalar> TaggerModel<T> {
    /// Fresh model. Word embeddings come from `embeddings` when given and are
    /// otherwise drawn from uniform(±sqrt(3/d)).
    pub fn new(
        config: ModelConfig,
        vocab: Vocabulary,
        embeddings: Option<&EmbeddingTable<T>>,
    ) -> Result<Self> {
        config.validate()?;
        if vocab.num_tags() != config.num_classes {
            return Err(Error::Config(format!(
                "tag-set has {} labels, model expects {}",
                vocab.num_tags(),
                config.num_classes
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let word_table = match embeddings {
            Some(table) => {
                if table.dim != config.word_emb_dim || table.matrix.rows() != vocab.word_count() {
                    return Err(Error::Config(format!(
                        "embedding table {:?} does not match vocabulary of {} words at d={}",
                        table.matrix.shape(),
                        vocab.word_count(),
                        config.word_emb_dim
                    )));
                }
                table.matrix.clone()
            }
            None => random_embeddings(vocab.word_count(), config.word_emb_dim, &mut rng),
        };
        let word_emb = store.insert("wre.word_emb", word_table)?;
        let char_emb = store.insert(
            "wre.char_emb",
            random_embeddings(vocab.char_count(), config.char_emb_dim, &mut rng),
        )?;
        let char_lstm = add_bilstm(
            &mut store,
            "wre.char",
            config.char_emb_dim,
            config.char_lstm_hidden,
            &mut rng,
        )?;
        let fe = add_bilstm(&mut store, "fe_p", config.word_repr_dim(), config.fe_hidden, &mut rng)?;
        let cls = add_linear(&mut store, "cls_p", 2 * config.fe_hidden, config.num_classes, &mut rng)?;
        Ok(Self {
            config,
            vocab,
            params: store,
            layout: Layout {
                word_emb,
                char_emb,
                char_lstm,
                fe,
                cls,
                head: None,
            },
        })
    }

    /// Adds the random branch (`random_branch_k` units per direction, fresh
    /// classifier) and the weighting vectors, initialised to ones.
    pub fn add_pretrand_head(&mut self, seed: u64) -> Result<()> {
        if self.layout.head.is_some() {
            return Err(Error::Config("model already has a PretRand head".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = self.config.num_classes;
        let k = self.config.random_branch_k;
        let fe = add_bilstm(&mut self.params, "fe_r", self.config.word_repr_dim(), k, &mut rng)?;
        let cls = add_linear(&mut self.params, "cls_r", 2 * k, c, &mut rng)?;
        let u = self.params.insert("mix.u", Array::filled(&[1, c], T::one()))?;
        let v = self.params.insert("mix.v", Array::filled(&[1, c], T::one()))?;
        self.layout.head = Some(HeadIds { fe, cls, u, v });
        Ok(())
    }

    /// Builds a target-domain model that inherits the word representation and
    /// pretrained feature extractor of `source`.
    ///
    /// `vocab` must extend the source vocabulary (source word and character
    /// ids unchanged). Rows for words or characters the source never saw keep
    /// their fresh initialisation, as does the classifier.
    pub fn transfer_from(
        source: &TaggerModel<T>,
        vocab: Vocabulary,
        num_classes: usize,
        seed: u64,
        embeddings: Option<&EmbeddingTable<T>>,
    ) -> Result<Self> {
        let src_words = source.vocab.words();
        if vocab.words().len() < src_words.len() || vocab.words()[..src_words.len()] != src_words[..] {
            return Err(Error::Config("target vocabulary must extend the source vocabulary".into()));
        }
        let config = ModelConfig {
            num_classes,
            seed,
            ..source.config.clone()
        };
        let mut model = Self::new(config, vocab, embeddings)?;
        for (_, name, value) in source.params.iter() {
            match Component::of(name) {
                Some(Component::WordRepresentation) | Some(Component::FeaturePretrained) => {}
                _ => continue,
            }
            let id = model
                .params
                .id(name)
                .ok_or_else(|| Error::Config(format!("target model lacks {name}")))?;
            let dst = model.params.get_mut(id);
            if dst.shape() == value.shape() {
                *dst = value.clone();
            } else if dst.cols() == value.cols() && dst.rows() >= value.rows() {
                dst.data_mut()[..value.len()].copy_from_slice(value.data());
            } else {
                return Err(Error::Config(format!(
                    "cannot transfer {name}: {:?} into {:?}",
                    value.shape(),
                    dst.shape()
                )));
            }
        }
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    pub fn has_pretrand_head(&self) -> bool {
        self.layout.head.is_some()
    }

    pub fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    /// Feature width of a branch (`2 * units`).
    pub fn feature_dim(&self, branch: Branch) -> usize {
        match branch {
            Branch::Pretrained => 2 * self.config.fe_hidden,
            Branch::Random => 2 * self.config.random_branch_k,
        }
    }

    pub fn component_of(&self, id: ParamId) -> Option<Component> {
        Component::of(self.params.name(id))
    }

    /// Runs one LSTM direction over `inputs`; `reverse` scans right to left.
    /// Outputs are returned in input order.
    fn lstm_scan(&self, g: &mut Graph<T>, ids: LstmIds, inputs: &[Var], reverse: bool) -> Result<Vec<Var>> {
        let h = ids.hidden;
        let w_x = g.param(&self.params, ids.w_x)?;
        let w_h = g.param(&self.params, ids.w_h)?;
        let b = g.param(&self.params, ids.b)?;
        let mut outputs = vec![None; inputs.len()];
        let mut state: Option<(Var, Var)> = None;
        let order: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new((0..inputs.len()).rev())
        } else {
            Box::new(0..inputs.len())
        };
        for t in order {
            let mut z = g.matmul(inputs[t], w_x)?;
            if let Some((h_prev, _)) = state {
                let zh = g.matmul(h_prev, w_h)?;
                z = g.add(z, zh)?;
            }
            z = g.add(z, b)?;
            let zi = g.slice_cols(z, 0, h)?;
            let zf = g.slice_cols(z, h, h)?;
            let zg = g.slice_cols(z, 2 * h, h)?;
            let zo = g.slice_cols(z, 3 * h, h)?;
            let i = g.sigmoid(zi)?;
            let o = g.sigmoid(zo)?;
            let cand = g.tanh(zg)?;
            let mut c = g.mul(i, cand)?;
            if let Some((_, c_prev)) = state {
                let f = g.sigmoid(zf)?;
                let keep = g.mul(f, c_prev)?;
                c = g.add(keep, c)?;
            }
            let tc = g.tanh(c)?;
            let h_t = g.mul(o, tc)?;
            state = Some((h_t, c));
            outputs[t] = Some(h_t);
        }
        Ok(outputs.into_iter().map(|o| o.expect("every step visited")).collect())
    }

    fn bilstm(&self, g: &mut Graph<T>, ids: BiLstmIds, inputs: &[Var]) -> Result<Vec<Var>> {
        let fwd = self.lstm_scan(g, ids.fwd, inputs, false)?;
        let bwd = self.lstm_scan(g, ids.bwd, inputs, true)?;
        fwd.into_iter()
            .zip(bwd)
            .map(|(f, b)| g.concat(&[f, b]))
            .collect()
    }

    /// One `1 × (word_emb_dim + 2 * char_lstm_hidden)` row per token.
    pub fn wre_forward(&self, g: &mut Graph<T>, sentence: &[Token]) -> Result<Vec<Var>> {
        let mut xs = Vec::with_capacity(sentence.len());
        for token in sentence {
            let word = g.param_row(&self.params, self.layout.word_emb, token.word_id)?;
            if token.char_ids.is_empty() {
                return Err(Error::Format("token without characters".into()));
            }
            let chars = token
                .char_ids
                .iter()
                .map(|&c| g.param_row(&self.params, self.layout.char_emb, c))
                .collect::<Result<Vec<_>>>()?;
            let fwd = self.lstm_scan(g, self.layout.char_lstm.fwd, &chars, false)?;
            let bwd = self.lstm_scan(g, self.layout.char_lstm.bwd, &chars, true)?;
            let last = *fwd.last().expect("non-empty");
            xs.push(g.concat(&[word, last, bwd[0]])?);
        }
        Ok(xs)
    }

    /// One `1 × 2·units` row per token for the requested branch.
    pub fn fe_forward(&self, g: &mut Graph<T>, xs: &[Var], branch: Branch) -> Result<Vec<Var>> {
        let ids = match branch {
            Branch::Pretrained => self.layout.fe,
            Branch::Random => {
                self.layout
                    .head
                    .ok_or_else(|| Error::Config("model has no random branch".into()))?
                    .fe
            }
        };
        self.bilstm(g, ids, xs)
    }

    fn classify(&self, g: &mut Graph<T>, hs: &[Var], ids: LinearIds) -> Result<Var> {
        let h = g.stack_rows(hs)?;
        let w = g.param(&self.params, ids.w)?;
        let b = g.param(&self.params, ids.b)?;
        let z = g.matmul(h, w)?;
        g.add(z, b)
    }

    /// `n × C` logits of the pretrained branch alone.
    pub fn forward_standard(&self, g: &mut Graph<T>, sentence: &[Token]) -> Result<Var> {
        let xs = self.wre_forward(g, sentence)?;
        let hs = self.fe_forward(g, &xs, Branch::Pretrained)?;
        self.classify(g, &hs, self.layout.cls)
    }

    /// Merged logits `u ⊙ N(y_p) + v ⊙ N(y_r)` with row-wise ℓ2 normalisation.
    pub fn forward_pretrand(&self, g: &mut Graph<T>, sentence: &[Token]) -> Result<Var> {
        let head = self
            .layout
            .head
            .ok_or_else(|| Error::Config("model has no PretRand head".into()))?;
        let xs = self.wre_forward(g, sentence)?;
        let hp = self.fe_forward(g, &xs, Branch::Pretrained)?;
        let yp = self.classify(g, &hp, self.layout.cls)?;
        let hr = self.bilstm(g, head.fe, &xs)?;
        let yr = self.classify(g, &hr, head.cls)?;
        let np = g.l2_normalize(yp)?;
        let nr = g.l2_normalize(yr)?;
        let u = g.param(&self.params, head.u)?;
        let v = g.param(&self.params, head.v)?;
        let wp = g.mul(np, u)?;
        let wr = g.mul(nr, v)?;
        g.add(wp, wr)
    }

    /// Logits of the model as configured: merged when a head is present.
    pub fn forward(&self, g: &mut Graph<T>, sentence: &[Token]) -> Result<Var> {
        if self.has_pretrand_head() {
            self.forward_pretrand(g, sentence)
        } else {
            self.forward_standard(g, sentence)
        }
    }

    /// Summed token cross-entropy of one sentence.
    pub fn loss(&self, g: &mut Graph<T>, sentence: &[Token]) -> Result<Var> {
        let logits = self.forward(g, sentence)?;
        let gold: Vec<usize> = sentence.iter().map(|t| t.gold_label).collect();
        g.softmax_cross_entropy(logits, &gold)
    }

    pub fn logits(&self, sentence: &[Token]) -> Result<Array<T>> {
        let mut g = Graph::new();
        let out = self.forward(&mut g, sentence)?;
        Ok(g.value(out).clone())
    }

    /// Argmax class per token; ties go to the lowest id.
    pub fn predict(&self, sentence: &[Token]) -> Result<Vec<usize>> {
        let logits = self.logits(sentence)?;
        Ok((0..logits.rows()).map(|r| argmax(logits.row_slice(r))).collect())
    }

    /// Feature-extractor outputs of `branch`, one row per token.
    pub fn features(&self, sentence: &[Token], branch: Branch) -> Result<Array<T>> {
        let mut g = Graph::new();
        let xs = self.wre_forward(&mut g, sentence)?;
        let hs = self.fe_forward(&mut g, &xs, branch)?;
        let h = g.stack_rows(&hs)?;
        Ok(g.value(h).clone())
    }

    /// Replaces all parameter values (shapes must match).
    pub fn copy_params_from(&mut self, other: &ParamStore<T>) -> Result<()> {
        if other.len() != self.params.len() {
            return Err(Error::Config("parameter sets differ".into()));
        }
        for (id, name, value) in other.iter() {
            if self.params.get(id).shape() != value.shape() || self.params.name(id) != name {
                return Err(Error::Config(format!("parameter {name} does not match")));
            }
            *self.params.get_mut(id) = value.clone();
        }
        Ok(())
    }

    /// Rebuilds a model from named parameter values. The parameter set must
    /// match the layout implied by `config` exactly.
    pub(crate) fn from_named(
        config: ModelConfig,
        vocab: Vocabulary,
        mut values: BTreeMap<String, Array<T>>,
    ) -> Result<Self> {
        let mut model = Self::new(config, vocab, None)?;
        if values.contains_key("mix.u") {
            model.add_pretrand_head(0)?;
        }
        let ids: Vec<ParamId> = model.params.ids().collect();
        for id in ids {
            let name = model.params.name(id).to_string();
            let value = values
                .remove(&name)
                .ok_or_else(|| Error::Format(format!("missing parameter {name}")))?;
            let dst = model.params.get_mut(id);
            if dst.shape() != value.shape() {
                return Err(Error::Format(format!(
                    "parameter {name} has shape {:?}, expected {:?}",
                    value.shape(),
                    dst.shape()
                )));
            }
            *dst = value;
        }
        if let Some(extra) = values.keys().next() {
            return Err(Error::Format(format!("unexpected parameter {extra}")));
        }
        Ok(model)
    }

    /// Converts the model to another precision.
    pub fn cast<U: Scalar>(&self) -> TaggerModel<U> {
        let values = self
            .params
            .iter()
            .map(|(_, name, value)| (name.to_string(), value.cast()))
            .collect();
        TaggerModel::from_named(self.config.clone(), self.vocab.clone(), values).expect("same layout")
    }
}
