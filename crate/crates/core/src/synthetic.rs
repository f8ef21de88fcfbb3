//! Seeded two-topic text corpus used by the experiments and the CLI `synth`
//! command. Each topic draws words from its own vocabulary with Zipf
//! frequencies, so documents of one topic share their frequent words the
//! way natural text does.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::corpus::{mock_embed, snippet_of, CorpusError};
use crate::store::EmbeddingRecord;

pub const STANDARD_SEED: u64 = 42;

const TOPIC_STEMS: [(&str, &str); 2] = [("machine_learning", "ml"), ("wine", "vino")];

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub docs_per_topic: usize,
    pub tokens_per_doc: usize,
    pub vocab_size: usize,
    pub zipf_exponent: f64,
    pub dim: usize,
    pub seed: u64,
}

impl CorpusConfig {
    /// Two topics of 50 documents, 20 tokens each, 50-word vocabularies, dim 768.
    pub fn standard() -> Self {
        Self {
            docs_per_topic: 50,
            tokens_per_doc: 20,
            vocab_size: 50,
            zipf_exponent: 1.0,
            dim: 768,
            seed: STANDARD_SEED,
        }
    }

    /// The standard protocol at the shape of a ten-paragraph toy corpus.
    pub fn small() -> Self {
        Self {
            docs_per_topic: 5,
            ..Self::standard()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDoc {
    pub id: u64,
    pub doc_key: String,
    pub topic: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticQuery {
    pub key: String,
    pub topic: String,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    config: CorpusConfig,
    vocabularies: Vec<(String, Vec<String>)>,
    docs: Vec<SyntheticDoc>,
}

impl SyntheticCorpus {
    pub fn generate(config: CorpusConfig) -> Self {
        let vocabularies: Vec<(String, Vec<String>)> = TOPIC_STEMS
            .iter()
            .map(|(topic, stem)| {
                let words = (0..config.vocab_size).map(|i| format!("{stem}{i:02}")).collect();
                (topic.to_string(), words)
            })
            .collect();
        let mut corpus = Self {
            config,
            vocabularies,
            docs: Vec::new(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(corpus.config.seed);
        let mut docs = Vec::new();
        for t in 0..corpus.vocabularies.len() {
            for i in 0..corpus.config.docs_per_topic {
                let topic = corpus.vocabularies[t].0.clone();
                docs.push(SyntheticDoc {
                    id: docs.len() as u64,
                    doc_key: format!("{topic}#{i}"),
                    text: corpus.sample_text(t, &mut rng),
                    topic,
                });
            }
        }
        corpus.docs = docs;
        corpus
    }

    pub fn standard() -> Self {
        Self::generate(CorpusConfig::standard())
    }

    pub fn config(&self) -> &CorpusConfig {
        &self.config
    }

    pub fn docs(&self) -> &[SyntheticDoc] {
        &self.docs
    }

    pub fn topics(&self) -> Vec<&str> {
        self.vocabularies.iter().map(|(t, _)| t.as_str()).collect()
    }

    fn sample_text(&self, topic: usize, rng: &mut impl Rng) -> String {
        let words = &self.vocabularies[topic].1;
        let zipf = Zipf::new(words.len() as f64, self.config.zipf_exponent).expect("valid zipf parameters");
        (0..self.config.tokens_per_doc)
            .map(|_| {
                let rank = zipf.sample(rng) as usize;
                words[rank.clamp(1, words.len()) - 1].as_str()
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// `count` fresh in-topic query texts, alternating topics.
    pub fn queries(&self, count: usize, seed: u64) -> Vec<SyntheticQuery> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|i| {
                let t = i % self.vocabularies.len();
                SyntheticQuery {
                    key: format!("query#{i}"),
                    topic: self.vocabularies[t].0.clone(),
                    text: self.sample_text(t, &mut rng),
                }
            })
            .collect()
    }

    /// One in-topic query for the named topic.
    pub fn query_for(&self, topic: &str, seed: u64) -> Option<SyntheticQuery> {
        let t = self.vocabularies.iter().position(|(name, _)| name == topic)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Some(SyntheticQuery {
            key: format!("query:{topic}"),
            topic: topic.to_string(),
            text: self.sample_text(t, &mut rng),
        })
    }

    pub fn embed_text(&self, text: &str) -> Result<Vec<f32>, CorpusError> {
        mock_embed(text, self.config.dim, self.config.seed)
    }

    pub fn embed(&self) -> Result<Vec<EmbeddingRecord>, CorpusError> {
        self.docs
            .iter()
            .map(|d| {
                Ok(EmbeddingRecord {
                    id: d.id,
                    doc_key: d.doc_key.clone(),
                    snippet: Some(snippet_of(&d.text)),
                    vector: self.embed_text(&d.text)?,
                })
            })
            .collect()
    }

    pub fn labels(&self) -> HashMap<u64, String> {
        self.docs.iter().map(|d| (d.id, d.topic.clone())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_shape() {
        let c = SyntheticCorpus::standard();
        assert_eq!(c.docs().len(), 100);
        assert!(c.docs().iter().all(|d| d.text.split_whitespace().count() == 20));
        assert_eq!(c.docs()[0].doc_key, "machine_learning#0");
        assert_eq!(c.docs()[50].topic, "wine");
    }

    #[test]
    fn vocabularies_disjoint() {
        let c = SyntheticCorpus::standard();
        let (a, b) = (&c.vocabularies[0].1, &c.vocabularies[1].1);
        assert!(a.iter().all(|w| !b.contains(w)));
        assert_eq!(a.len(), 50);
    }

    #[test]
    fn deterministic() {
        let a = SyntheticCorpus::standard();
        let b = SyntheticCorpus::standard();
        assert_eq!(a.docs(), b.docs());
        assert_eq!(a.queries(5, 9), b.queries(5, 9));
    }
}
