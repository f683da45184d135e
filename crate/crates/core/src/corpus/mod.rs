//! CoNLL ingestion, vocabularies, embeddings, batching and synthetic data.

mod batch;
mod conll;
mod embeddings;
mod synth;
mod vocab;

pub use batch::batch_iter;
pub use conll::{parse_columns, parse_conll, parse_conll_str, AnnotatedCorpus, RawToken, Sentence, Split};
pub use embeddings::{
    embeddings_from_reader, load_embeddings, oov_bound, random_embeddings, read_vectors, EmbeddingTable,
    PretrainedVectors,
};
pub use synth::{synth_corpus, SplitStats, SynthCorpora, SynthSpec};
pub use vocab::{
    build_vocab, tagset, EncodedSentence, Token, Vocabulary, PAD_ID, PAD_WORD, UNK_CHAR_ID, UNK_ID, UNK_WORD,
};
