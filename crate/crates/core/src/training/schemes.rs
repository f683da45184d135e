use crate::corpus::{build_vocab, tagset, AnnotatedCorpus, PretrainedVectors, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, TaggerModel};
use crate::scalar::Scalar;
use crate::training::{ensemble_score, train_loop, RunOutcome, Scheme, TrainConfig};

const EMBEDDING_SALT: u64 = 0x5eed_e3b0;
const HEAD_SALT: u64 = 0x0a11_ce5d;

/// A trained model (or ensemble) with its run records.
#[derive(Clone, Debug)]
pub struct Trained<T> {
    pub models: Vec<TaggerModel<T>>,
    pub runs: Vec<RunOutcome<T>>,
    /// Validation metric of the returned model(s); for ensembles this is the
    /// score of the averaged prediction.
    pub val_metric: Option<f64>,
}

impl<T: Scalar> Trained<T> {
    pub fn model(&self) -> &TaggerModel<T> {
        &self.models[0]
    }

    pub fn run(&self) -> &RunOutcome<T> {
        &self.runs[0]
    }
}

fn encode_split(vocab: &Vocabulary, corpus: Option<&AnnotatedCorpus>) -> Result<Option<Vec<crate::corpus::EncodedSentence>>> {
    corpus.map(|c| vocab.encode(c)).transpose()
}

fn resolve_classes(config: &ModelConfig, tags: usize) -> Result<ModelConfig> {
    match config.num_classes {
        0 => Ok(ModelConfig {
            num_classes: tags,
            ..config.clone()
        }),
        c if c == tags => Ok(config.clone()),
        c => Err(Error::Config(format!("config expects {c} classes, corpus has {tags} tags"))),
    }
}

fn embeddings_for<T: Scalar>(
    vectors: Option<&PretrainedVectors>,
    vocab: &Vocabulary,
    config: &ModelConfig,
) -> Result<Option<crate::corpus::EmbeddingTable<T>>> {
    vectors
        .map(|v| v.table_for(vocab, config.word_emb_dim, config.seed ^ EMBEDDING_SALT))
        .transpose()
}

fn scratch_model<T: Scalar>(
    train: &AnnotatedCorpus,
    val: Option<&AnnotatedCorpus>,
    model_config: &ModelConfig,
    min_count: usize,
    vectors: Option<&PretrainedVectors>,
) -> Result<TaggerModel<T>> {
    let mut corpora = vec![train];
    corpora.extend(val);
    let vocab = build_vocab(train, min_count).with_tags(tagset(&corpora));
    let config = resolve_classes(model_config, vocab.num_tags())?;
    let table = embeddings_for(vectors, &vocab, &config)?;
    TaggerModel::new(config, vocab, table.as_ref())
}

fn transfer_model<T: Scalar>(
    source: &TaggerModel<T>,
    train: &AnnotatedCorpus,
    val: Option<&AnnotatedCorpus>,
    seed: u64,
    min_count: usize,
    vectors: Option<&PretrainedVectors>,
) -> Result<TaggerModel<T>> {
    let mut corpora = vec![train];
    corpora.extend(val);
    let mut vocab = source.vocab().clone();
    let added = vocab.extend_words(train, min_count);
    let vocab = vocab.with_tags(tagset(&corpora));
    log::info!("target vocabulary: {} words ({added} new)", vocab.word_count());
    let config = ModelConfig {
        num_classes: vocab.num_tags(),
        seed,
        ..source.config().clone()
    };
    let table = embeddings_for(vectors, &vocab, &config)?;
    TaggerModel::transfer_from(source, vocab.clone(), vocab.num_tags(), seed, table.as_ref())
}

fn train_one<T: Scalar>(
    mut model: TaggerModel<T>,
    train: &AnnotatedCorpus,
    val: Option<&AnnotatedCorpus>,
    config: &TrainConfig,
) -> Result<(TaggerModel<T>, RunOutcome<T>)> {
    let train_enc = model.vocab().encode(train)?;
    let val_enc = encode_split(model.vocab(), val)?;
    let outcome = train_loop(&mut model, &train_enc, val_enc.as_deref(), config)?;
    Ok((model, outcome))
}

/// Supervised training of a fresh model on the source domain.
///
/// `model_config.num_classes` may be 0 to take the size of the tag-set;
/// otherwise it must match it.
pub fn pretrain<T: Scalar>(
    train: &AnnotatedCorpus,
    val: Option<&AnnotatedCorpus>,
    model_config: &ModelConfig,
    config: &TrainConfig,
    vectors: Option<&PretrainedVectors>,
) -> Result<Trained<T>> {
    let config = TrainConfig {
        scheme: Scheme::Scratch,
        ..config.clone()
    };
    let model = scratch_model(train, val, model_config, config.min_count, vectors)?;
    let (model, run) = train_one(model, train, val, &config)?;
    let val_metric = run.record.best_val_metric;
    Ok(Trained {
        models: vec![model],
        runs: vec![run],
        val_metric,
    })
}

/// Builds the initial target model of a single-model scheme.
///
/// Transfer schemes copy the word representation and the pretrained feature
/// extractor of `source` into a model whose vocabulary is the source one
/// extended with target training words; the classifier is always fresh.
/// `scratch` ignores `source`. `pretrand` adds the random branch.
pub fn prepare_target_model<T: Scalar>(
    scheme: Scheme,
    source: Option<&TaggerModel<T>>,
    train: &AnnotatedCorpus,
    val: Option<&AnnotatedCorpus>,
    model_config: &ModelConfig,
    min_count: usize,
    vectors: Option<&PretrainedVectors>,
) -> Result<TaggerModel<T>> {
    match scheme {
        Scheme::Scratch => {
            if source.is_some() {
                log::warn!("scratch ignores the source checkpoint");
            }
            scratch_model(train, val, model_config, min_count, vectors)
        }
        Scheme::Sft | Scheme::FeatureExtraction | Scheme::Pretrand => {
            let source = source
                .ok_or_else(|| Error::State(format!("scheme {scheme} needs a source checkpoint")))?;
            let mut model = transfer_model(source, train, val, model_config.seed, min_count, vectors)?;
            if scheme == Scheme::Pretrand {
                model.add_pretrand_head(model_config.seed ^ HEAD_SALT)?;
            }
            Ok(model)
        }
        Scheme::Ensemble2Rand | Scheme::Ensemble1p1r => Err(Error::Config(format!(
            "{scheme} builds several models; use adapt"
        ))),
    }
}

/// Adapts to the target domain under `config.scheme`.
///
/// Ensembles train their members independently: `ensemble_2rand` two
/// from-scratch models with consecutive seeds, `ensemble_1p1r` one
/// fine-tuned and one from-scratch model.
pub fn adapt<T: Scalar>(
    source: Option<&TaggerModel<T>>,
    train: &AnnotatedCorpus,
    val: Option<&AnnotatedCorpus>,
    model_config: &ModelConfig,
    config: &TrainConfig,
    vectors: Option<&PretrainedVectors>,
) -> Result<Trained<T>> {
    let members: Vec<(Scheme, u64)> = match config.scheme {
        Scheme::Ensemble2Rand => vec![(Scheme::Scratch, 0), (Scheme::Scratch, 1)],
        Scheme::Ensemble1p1r => vec![(Scheme::Sft, 0), (Scheme::Scratch, 1)],
        s => vec![(s, 0)],
    };
    if config.scheme.needs_source() && source.is_none() {
        return Err(Error::State(format!(
            "scheme {} needs a source checkpoint",
            config.scheme
        )));
    }
    let mut models = Vec::new();
    let mut runs = Vec::new();
    for (scheme, offset) in members {
        let member_config = TrainConfig {
            scheme,
            seed: config.seed.wrapping_add(offset),
            ..config.clone()
        };
        let member_model_config = model_config.clone().with_seed(model_config.seed.wrapping_add(offset));
        let src = if scheme == Scheme::Scratch { None } else { source };
        let model = prepare_target_model(
            scheme,
            src,
            train,
            val,
            &member_model_config,
            config.min_count,
            vectors,
        )?;
        let (model, run) = train_one(model, train, val, &member_config)?;
        models.push(model);
        runs.push(run);
    }
    let val_metric = if models.len() == 1 {
        runs[0].record.best_val_metric
    } else {
        val.map(|v| ensemble_score(&models, v, config.metric)).transpose()?
    };
    Ok(Trained {
        models,
        runs,
        val_metric,
    })
}

