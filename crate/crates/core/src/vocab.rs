use std::borrow::Cow;
use std::collections::HashMap;

use crate::corpus::Corpus;

/// Corpus tokens mapped to dense integer ids, one sequence per document.
pub(crate) struct Interned {
    pub docs: Vec<Vec<u32>>,
    pub vocab_size: usize,
}

impl Interned {
    pub fn new(corpus: &Corpus, lowercase: bool) -> Self {
        let mut ids: HashMap<Cow<'_, str>, u32> = HashMap::new();
        let docs = corpus
            .documents()
            .iter()
            .map(|d| {
                d.tokens()
                    .iter()
                    .map(|t| {
                        let key: Cow<'_, str> = if lowercase {
                            Cow::Owned(t.to_lowercase())
                        } else {
                            Cow::Borrowed(t.as_str())
                        };
                        let next = ids.len() as u32;
                        *ids.entry(key).or_insert(next)
                    })
                    .collect()
            })
            .collect();
        Self {
            docs,
            vocab_size: ids.len(),
        }
    }

    pub fn total(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    pub fn concatenated(&self) -> Vec<u32> {
        self.docs.concat()
    }
}
