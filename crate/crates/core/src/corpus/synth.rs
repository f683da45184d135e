//! Seeded source/target corpus generator for desk-scale transfer studies.
//!
//! Sentences come from a first-order HMM over `num_tags` tags. Each tag owns
//! a lexicon of pronounceable consonant-vowel words, most of them ending in a
//! tag-specific suffix syllable, so both word identity and spelling carry the
//! label. A fraction of words is shared between two tags and only context
//! disambiguates them.
//!
//! The target domain reuses the tag-set, perturbs the transition matrix, and
//! rewrites each token with probability `rho` into a vowel-less "shorthand"
//! form (`kabero` -> `kbr`). Source words always contain a vowel, so these
//! forms can never occur in the source corpus. With `rho = 0` every target
//! surface is drawn from words actually observed in the source training
//! split.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedCorpus, RawToken, Split};
use crate::error::{Error, Result};

const CONSONANTS: &[char] = &[
    'b', 'd', 'f', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't', 'v', 'z',
];
const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    /// Number of distinct source word types.
    pub vocab_size: usize,
    pub num_tags: usize,
    pub source_train_sentences: usize,
    pub source_val_sentences: usize,
    pub target_train_sentences: usize,
    pub target_val_sentences: usize,
    /// Zero disables the target test split.
    pub target_test_sentences: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that a target token uses a target-only surface form.
    pub rho: f64,
    /// Fraction of words that are also emitted by a second tag.
    pub ambiguity: f64,
    /// Weight of the random component mixed into target transitions.
    pub transition_shift: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            vocab_size: 240,
            num_tags: 8,
            source_train_sentences: 400,
            source_val_sentences: 100,
            target_train_sentences: 40,
            target_val_sentences: 150,
            target_test_sentences: 0,
            min_len: 4,
            max_len: 12,
            rho: 0.3,
            ambiguity: 0.1,
            transition_shift: 0.3,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic spec: {m}")));
        if !(0.0..=1.0).contains(&self.rho) || self.rho.is_nan() {
            return bad("rho must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.ambiguity) || !(0.0..=1.0).contains(&self.transition_shift) {
            return bad("ambiguity and transition_shift must lie in [0, 1]");
        }
        if self.num_tags < 2 {
            return bad("need at least 2 tags");
        }
        if self.vocab_size < self.num_tags {
            return bad("vocab_size must be at least num_tags");
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad("need 1 <= min_len <= max_len");
        }
        if self.source_train_sentences == 0
            || self.source_val_sentences == 0
            || self.target_train_sentences == 0
            || self.target_val_sentences == 0
        {
            return bad("train and val splits need at least one sentence");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub sentences: usize,
    pub tokens: usize,
    /// Tokens whose lowercased surface never occurs in the source corpora.
    pub target_only_tokens: usize,
}

#[derive(Clone, Debug)]
pub struct SynthCorpora {
    pub source_train: AnnotatedCorpus,
    pub source_val: AnnotatedCorpus,
    pub target_train: AnnotatedCorpus,
    pub target_val: AnnotatedCorpus,
    pub target_test: Option<AnnotatedCorpus>,
}

impl SynthCorpora {
    /// Named splits in a fixed order, for writing to disk.
    pub fn splits(&self) -> Vec<(&'static str, &AnnotatedCorpus)> {
        let mut v = vec![
            ("source.train", &self.source_train),
            ("source.val", &self.source_val),
            ("target.train", &self.target_train),
            ("target.val", &self.target_val),
        ];
        if let Some(t) = &self.target_test {
            v.push(("target.test", t));
        }
        v
    }

    pub fn stats(&self) -> BTreeMap<String, SplitStats> {
        let source: BTreeSet<String> = self
            .source_train
            .tokens()
            .chain(self.source_val.tokens())
            .map(|t| t.surface.to_lowercase())
            .collect();
        self.splits()
            .into_iter()
            .map(|(name, c)| {
                let target_only = c
                    .tokens()
                    .filter(|t| !source.contains(&t.surface.to_lowercase()))
                    .count();
                (
                    name.to_string(),
                    SplitStats {
                        sentences: c.len(),
                        tokens: c.token_count(),
                        target_only_tokens: target_only,
                    },
                )
            })
            .collect()
    }
}

struct Hmm {
    start: Vec<f64>,
    transitions: Vec<Vec<f64>>,
}

impl Hmm {
    fn random(c: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            start: peaky(c, rng),
            transitions: (0..c).map(|_| peaky(c, rng)).collect(),
        }
    }

    fn shifted(&self, weight: f64, rng: &mut ChaCha8Rng) -> Self {
        let c = self.start.len();
        let other = Self::random(c, rng);
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| (1.0 - weight) * x + weight * y).collect()
        };
        Self {
            start: mix(&self.start, &other.start),
            transitions: self
                .transitions
                .iter()
                .zip(&other.transitions)
                .map(|(a, b)| mix(a, b))
                .collect(),
        }
    }

    fn sample_tags(&self, len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut tags = Vec::with_capacity(len);
        let mut cur = sample(&self.start, rng);
        tags.push(cur);
        for _ in 1..len {
            cur = sample(&self.transitions[cur], rng);
            tags.push(cur);
        }
        tags
    }
}

/// Random distribution concentrated on a few outcomes.
fn peaky(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>().powi(4) + 1e-3).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn sample(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    WeightedIndex::new(weights)
        .expect("weights are positive")
        .sample(rng)
}

fn syllable(rng: &mut ChaCha8Rng) -> String {
    let c = CONSONANTS[rng.gen_range(0..CONSONANTS.len())];
    let v = VOWELS[rng.gen_range(0..VOWELS.len())];
    format!("{c}{v}")
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(f) => f.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Per-tag word lists with Zipf emission weights.
struct Lexicon {
    words: Vec<Vec<String>>,
}

impl Lexicon {
    fn generate(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Self {
        let c = spec.num_tags;
        let mut suffixes = BTreeSet::new();
        let mut suffix_of = Vec::with_capacity(c);
        while suffix_of.len() < c {
            let s = syllable(rng);
            if suffixes.insert(s.clone()) {
                suffix_of.push(s);
            }
        }
        let mut seen = BTreeSet::new();
        let mut words: Vec<Vec<String>> = vec![Vec::new(); c];
        let mut i = 0;
        while i < spec.vocab_size {
            let tag = i % c;
            let stem_len = rng.gen_range(1..=2);
            let mut w: String = (0..stem_len).map(|_| syllable(rng)).collect();
            if rng.gen_bool(0.6) {
                w.push_str(&suffix_of[tag]);
            } else {
                w.push_str(&syllable(rng));
            }
            if seen.insert(w.clone()) {
                words[tag].push(w);
                i += 1;
            }
        }
        let shared = (spec.ambiguity * spec.vocab_size as f64).round() as usize;
        for _ in 0..shared {
            let from = rng.gen_range(0..c);
            let to = (from + rng.gen_range(1..c)) % c;
            let w = words[from][rng.gen_range(0..words[from].len())].clone();
            if !words[to].contains(&w) {
                words[to].push(w);
            }
        }
        Self { words }
    }

    fn emit(&self, tag: usize, allowed: Option<&BTreeSet<String>>, rng: &mut ChaCha8Rng) -> String {
        let candidates: Vec<(usize, &String)> = self.words[tag]
            .iter()
            .enumerate()
            .filter(|(_, w)| allowed.map_or(true, |a| a.contains(*w)))
            .collect();
        if candidates.is_empty() {
            return self.words[tag][0].clone();
        }
        let weights: Vec<f64> = candidates.iter().map(|(r, _)| 1.0 / (*r as f64 + 1.0)).collect();
        candidates[sample(&weights, rng)].1.clone()
    }
}

/// Maps every source word to a distinct vowel-less form.
fn shorthand_forms(lexicon: &Lexicon) -> BTreeMap<String, String> {
    let mut forms = BTreeMap::new();
    let mut used = BTreeSet::new();
    let all: BTreeSet<&String> = lexicon.words.iter().flatten().collect();
    for w in all {
        let mut f: String = w.chars().filter(|c| !VOWELS.contains(c)).collect();
        while !used.insert(f.clone()) {
            f.push('h');
        }
        forms.insert(w.clone(), f);
    }
    forms
}

fn generate_split(
    n: usize,
    split: Split,
    spec: &SynthSpec,
    hmm: &Hmm,
    lexicon: &Lexicon,
    target: Option<(&BTreeSet<String>, &BTreeMap<String, String>)>,
    rng: &mut ChaCha8Rng,
) -> Result<AnnotatedCorpus> {
    let mut sentences = Vec::with_capacity(n);
    for _ in 0..n {
        let len = rng.gen_range(spec.min_len..=spec.max_len);
        let tags = hmm.sample_tags(len, rng);
        let mut sentence = Vec::with_capacity(len);
        for (pos, &tag) in tags.iter().enumerate() {
            let mut word = lexicon.emit(tag, target.map(|(allowed, _)| allowed), rng);
            if let Some((_, forms)) = target {
                if rng.gen_bool(spec.rho) {
                    word = forms[&word].clone();
                }
            }
            if pos == 0 {
                word = capitalize(&word);
            }
            sentence.push(RawToken::new(word, format!("T{tag}")));
        }
        sentences.push(sentence);
    }
    AnnotatedCorpus::new(sentences, split)
}

/// Generates source and target corpora; identical `(spec, seed)` give
/// identical output.
pub fn synth_corpus(spec: &SynthSpec, seed: u64) -> Result<SynthCorpora> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lexicon = Lexicon::generate(spec, &mut rng);
    let source_hmm = Hmm::random(spec.num_tags, &mut rng);
    let target_hmm = source_hmm.shifted(spec.transition_shift, &mut rng);
    let forms = shorthand_forms(&lexicon);

    let source_train = generate_split(
        spec.source_train_sentences,
        Split::Train,
        spec,
        &source_hmm,
        &lexicon,
        None,
        &mut rng,
    )?;
    let source_val = generate_split(
        spec.source_val_sentences,
        Split::Val,
        spec,
        &source_hmm,
        &lexicon,
        None,
        &mut rng,
    )?;
    let observed: BTreeSet<String> = source_train
        .tokens()
        .map(|t| t.surface.to_lowercase())
        .collect();
    let target = Some((&observed, &forms));
    let mut gen = |n, split| generate_split(n, split, spec, &target_hmm, &lexicon, target, &mut rng);
    let target_train = gen(spec.target_train_sentences, Split::Train)?;
    let target_val = gen(spec.target_val_sentences, Split::Val)?;
    let target_test = match spec.target_test_sentences {
        0 => None,
        n => Some(gen(n, Split::Test)?),
    };
    Ok(SynthCorpora {
        source_train,
        source_val,
        target_train,
        target_val,
        target_test,
    })
}
