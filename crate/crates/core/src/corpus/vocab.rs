use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::AnnotatedCorpus;
use crate::error::{Error, Result};

pub const UNK_WORD: &str = "<unk>";
pub const PAD_WORD: &str = "<pad>";
pub const UNK_ID: usize = 0;
pub const PAD_ID: usize = 1;
pub const UNK_CHAR_ID: usize = 0;

const VOCAB_FORMAT: &str = "tagtransfer.vocabulary";
const VOCAB_VERSION: u32 = 1;

/// An encoded token, ready for the model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub gold_label: usize,
    pub word_id: usize,
    pub char_ids: Vec<usize>,
}

pub type EncodedSentence = Vec<Token>;

/// Word, character and tag vocabularies.
///
/// Word ids: `0` is UNK, `1` is PAD, the rest follow frequency order.
/// Word lookups lowercase the surface; character lookups keep case.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    chars: Vec<char>,
    tags: Vec<String>,
    word_index: BTreeMap<String, usize>,
    char_index: BTreeMap<char, usize>,
    tag_index: BTreeMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    format: String,
    version: u32,
    words: Vec<String>,
    chars: Vec<String>,
    tags: Vec<String>,
}

/// Sorts keys by count descending, then by key.
fn frequency_order<K: Ord + Clone>(counts: &BTreeMap<K, usize>, min_count: usize) -> Vec<K> {
    let mut items: Vec<(&K, &usize)> = counts.iter().filter(|(_, &c)| c >= min_count).collect();
    items.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    items.into_iter().map(|(k, _)| k.clone()).collect()
}

fn word_counts(corpus: &AnnotatedCorpus) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for t in corpus.tokens() {
        *counts.entry(t.surface.to_lowercase()).or_insert(0) += 1;
    }
    counts
}

fn char_counts(corpus: &AnnotatedCorpus) -> BTreeMap<char, usize> {
    let mut counts = BTreeMap::new();
    for t in corpus.tokens() {
        for c in t.surface.chars() {
            *counts.entry(c).or_insert(0) += 1;
        }
    }
    counts
}

/// Builds vocabularies from a training split. Words seen fewer than
/// `min_count` times fall back to UNK.
pub fn build_vocab(corpus: &AnnotatedCorpus, min_count: usize) -> Vocabulary {
    let mut words = vec![UNK_WORD.to_string(), PAD_WORD.to_string()];
    words.extend(
        frequency_order(&word_counts(corpus), min_count.max(1))
            .into_iter()
            .filter(|w| w != UNK_WORD && w != PAD_WORD),
    );
    let mut chars = vec!['\u{0}'];
    chars.extend(frequency_order(&char_counts(corpus), 1).into_iter().filter(|&c| c != '\u{0}'));
    let mut tag_counts = BTreeMap::new();
    for t in corpus.tokens() {
        *tag_counts.entry(t.label.clone()).or_insert(0) += 1;
    }
    let tags = frequency_order(&tag_counts, 1);
    Vocabulary::from_parts(words, chars, tags)
}

impl Vocabulary {
    fn from_parts(words: Vec<String>, chars: Vec<char>, tags: Vec<String>) -> Self {
        let word_index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let char_index = chars.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let tag_index = tags.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self {
            words,
            chars,
            tags,
            word_index,
            char_index,
            tag_index,
        }
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn char_count(&self) -> usize {
        self.chars.len()
    }

    pub fn num_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn word_id(&self, surface: &str) -> usize {
        self.word_index
            .get(&surface.to_lowercase())
            .copied()
            .unwrap_or(UNK_ID)
    }

    pub fn char_id(&self, c: char) -> usize {
        self.char_index.get(&c).copied().unwrap_or(UNK_CHAR_ID)
    }

    pub fn tag_id(&self, tag: &str) -> Option<usize> {
        self.tag_index.get(tag).copied()
    }

    pub fn tag(&self, id: usize) -> &str {
        &self.tags[id]
    }

    /// Appends words and characters of `corpus` that are not yet known,
    /// keeping existing ids. Returns the number of new words.
    pub fn extend_words(&mut self, corpus: &AnnotatedCorpus, min_count: usize) -> usize {
        let new_words: Vec<String> = frequency_order(&word_counts(corpus), min_count.max(1))
            .into_iter()
            .filter(|w| !self.word_index.contains_key(w))
            .collect();
        let added = new_words.len();
        let new_chars: Vec<char> = frequency_order(&char_counts(corpus), 1)
            .into_iter()
            .filter(|c| !self.char_index.contains_key(c))
            .collect();
        let mut words = std::mem::take(&mut self.words);
        words.extend(new_words);
        let mut chars = std::mem::take(&mut self.chars);
        chars.extend(new_chars);
        let tags = std::mem::take(&mut self.tags);
        *self = Self::from_parts(words, chars, tags);
        added
    }

    /// Returns a copy with the tag-set replaced by the one of `corpus`.
    pub fn with_tags_of(&self, corpus: &AnnotatedCorpus) -> Self {
        let tags = build_vocab(corpus, 1).tags;
        Self::from_parts(self.words.clone(), self.chars.clone(), tags)
    }

    /// Returns a copy with the given tag order.
    pub fn with_tags(&self, tags: Vec<String>) -> Self {
        Self::from_parts(self.words.clone(), self.chars.clone(), tags)
    }

    /// Encodes surfaces without gold labels (`gold_label` is 0).
    pub fn encode_unlabeled<S: AsRef<str>>(&self, surfaces: &[S]) -> EncodedSentence {
        surfaces
            .iter()
            .map(|s| {
                let s = s.as_ref();
                Token {
                    surface: s.to_string(),
                    gold_label: 0,
                    word_id: self.word_id(s),
                    char_ids: s.chars().map(|c| self.char_id(c)).collect(),
                }
            })
            .collect()
    }

    pub fn encode_sentence(&self, sentence: &[crate::corpus::RawToken]) -> Result<EncodedSentence> {
        sentence
            .iter()
            .map(|t| {
                let gold_label = self
                    .tag_id(&t.label)
                    .ok_or_else(|| Error::Label(format!("{} (not in tag-set)", t.label)))?;
                Ok(Token {
                    surface: t.surface.clone(),
                    gold_label,
                    word_id: self.word_id(&t.surface),
                    char_ids: t.surface.chars().map(|c| self.char_id(c)).collect(),
                })
            })
            .collect()
    }

    pub fn encode(&self, corpus: &AnnotatedCorpus) -> Result<Vec<EncodedSentence>> {
        corpus
            .sentences
            .iter()
            .map(|s| self.encode_sentence(s))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = VocabFile {
            format: VOCAB_FORMAT.into(),
            version: VOCAB_VERSION,
            words: self.words.clone(),
            chars: self.chars.iter().map(|c| c.to_string()).collect(),
            tags: self.tags.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: VocabFile = serde_json::from_str(text)?;
        if file.format != VOCAB_FORMAT || file.version != VOCAB_VERSION {
            return Err(Error::Format(format!(
                "unsupported vocabulary {} v{}",
                file.format, file.version
            )));
        }
        let chars = file
            .chars
            .iter()
            .map(|s| {
                let mut it = s.chars();
                match (it.next(), it.next()) {
                    (Some(c), None) => Ok(c),
                    _ => Err(Error::Format(format!("bad character entry {s:?}"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if file.words.len() < 2 || file.words[UNK_ID] != UNK_WORD || file.words[PAD_ID] != PAD_WORD {
            return Err(Error::Format("reserved word ids missing".into()));
        }
        Ok(Self::from_parts(file.words, chars, file.tags))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

impl Serialize for Vocabulary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VocabFile {
            format: VOCAB_FORMAT.into(),
            version: VOCAB_VERSION,
            words: self.words.clone(),
            chars: self.chars.iter().map(|c| c.to_string()).collect(),
            tags: self.tags.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = VocabFile::deserialize(d)?;
        let text = serde_json::to_string(&file).map_err(serde::de::Error::custom)?;
        Self::from_json(&text).map_err(serde::de::Error::custom)
    }
}

/// Tag-set of the first corpus in frequency order, followed by labels that
/// only appear in later ones (in order of first appearance).
pub fn tagset(corpora: &[&AnnotatedCorpus]) -> Vec<String> {
    let mut tags = match corpora.first() {
        Some(c) => build_vocab(c, 1).tags,
        None => Vec::new(),
    };
    for c in corpora.iter().skip(1) {
        for t in c.tokens() {
            if !tags.contains(&t.label) {
                tags.push(t.label.clone());
            }
        }
    }
    tags
}
